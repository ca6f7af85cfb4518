//! Built-in topic vocabularies for the offline generator.

/// Entity nouns and descriptive words for one topic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    pub topic: String,
    pub entities: Vec<String>,
    pub words: Vec<String>,
}

type Entry = (&'static str, [&'static str; 5], [&'static str; 10]);

#[rustfmt::skip]
const TOPICS: [Entry; 50] = [
    ("World Geography", ["River", "Mountain", "Country", "Lake", "City"], ["northern", "basin", "coastal", "plateau", "delta", "capital", "border", "highland", "valley", "tropical"]),
    ("Art History", ["Painting", "Artist", "Museum", "Movement", "Sculpture"], ["baroque", "canvas", "fresco", "oil", "portrait", "renaissance", "gallery", "abstract", "marble", "studio"]),
    ("Genealogy", ["Ancestor", "Family", "Parish", "Surname", "Household"], ["census", "baptism", "lineage", "record", "estate", "migration", "marriage", "descendant", "archive", "heir"]),
    ("Veterinary Medicine", ["Animal", "Vaccine", "Clinic", "Breed", "Treatment"], ["canine", "feline", "dosage", "equine", "surgery", "parasite", "dental", "chronic", "livestock", "recovery"]),
    ("Astronomy", ["Star", "Planet", "Galaxy", "Nebula", "Comet"], ["orbit", "luminous", "distant", "spiral", "dwarf", "stellar", "redshift", "gaseous", "binary", "crater"]),
    ("Astronautics", ["Spacecraft", "Mission", "Rocket", "Astronaut", "Launch"], ["orbital", "payload", "booster", "lunar", "capsule", "docking", "thrust", "module", "reentry", "crewed"]),
    ("World History", ["Empire", "Battle", "Dynasty", "Treaty", "Ruler"], ["ancient", "medieval", "conquest", "revolt", "colonial", "kingdom", "siege", "reform", "alliance", "frontier"]),
    ("Botany", ["Plant", "Flower", "Tree", "Seed", "Fern"], ["perennial", "leaf", "pollen", "root", "evergreen", "shrub", "bloom", "native", "annual", "moss"]),
    ("Marine Biology", ["Fish", "Coral", "Whale", "Reef", "Shark"], ["pelagic", "tidal", "plankton", "deep", "saltwater", "kelp", "migratory", "shoal", "abyssal", "lagoon"]),
    ("Classical Music", ["Composer", "Symphony", "Orchestra", "Opera", "Concerto"], ["allegro", "string", "sonata", "baroque", "piano", "movement", "violin", "choral", "tempo", "aria"]),
    ("Cuisine", ["Dish", "Ingredient", "Restaurant", "Chef", "Spice"], ["savory", "roasted", "braised", "spicy", "fresh", "sweet", "grilled", "herb", "broth", "sauce"]),
    ("Architecture", ["Building", "Architect", "Bridge", "Tower", "Cathedral"], ["gothic", "facade", "concrete", "arch", "modernist", "column", "dome", "steel", "vault", "atrium"]),
    ("Sports", ["Team", "Athlete", "Stadium", "League", "Tournament"], ["championship", "season", "forward", "goal", "defense", "playoff", "record", "coach", "trophy", "rival"]),
    ("Film", ["Movie", "Director", "Actor", "Studio", "Festival"], ["drama", "sequel", "screenplay", "premiere", "comedy", "thriller", "cinematic", "award", "cast", "documentary"]),
    ("Literature", ["Novel", "Author", "Poem", "Publisher", "Character"], ["narrative", "prose", "verse", "fiction", "chapter", "epic", "satire", "memoir", "stanza", "classic"]),
    ("Economics", ["Market", "Currency", "Bank", "Index", "Sector"], ["inflation", "fiscal", "growth", "monetary", "trade", "deficit", "export", "demand", "credit", "yield"]),
    ("Chemistry", ["Element", "Compound", "Reaction", "Isotope", "Catalyst"], ["molar", "acidic", "covalent", "organic", "oxidation", "solvent", "ionic", "metallic", "volatile", "polymer"]),
    ("Physics", ["Particle", "Experiment", "Theory", "Force", "Wave"], ["quantum", "kinetic", "thermal", "magnetic", "electron", "relativity", "photon", "field", "energy", "nuclear"]),
    ("Medicine", ["Disease", "Drug", "Hospital", "Symptom", "Therapy"], ["clinical", "chronic", "acute", "dosage", "diagnosis", "infection", "trial", "immune", "cardiac", "patient"]),
    ("Zoology", ["Mammal", "Bird", "Reptile", "Insect", "Habitat"], ["nocturnal", "predator", "herbivore", "nesting", "burrow", "migratory", "venomous", "feathered", "endangered", "species"]),
    ("Geology", ["Rock", "Mineral", "Volcano", "Fault", "Fossil"], ["igneous", "sedimentary", "tectonic", "crystal", "magma", "erosion", "strata", "quartz", "basalt", "eruption"]),
    ("Meteorology", ["Storm", "Climate", "Front", "Station", "Cyclone"], ["humidity", "rainfall", "pressure", "windy", "thunder", "forecast", "drought", "monsoon", "frost", "tropical"]),
    ("Computer Science", ["Algorithm", "Language", "Database", "Protocol", "Processor"], ["recursive", "compiled", "parallel", "binary", "cache", "query", "network", "kernel", "sorting", "memory"]),
    ("Philosophy", ["Philosopher", "Theory", "School", "Argument", "Treatise"], ["ethics", "logic", "metaphysics", "empirical", "moral", "dialectic", "reason", "stoic", "virtue", "doctrine"]),
    ("Mythology", ["Deity", "Hero", "Myth", "Creature", "Temple"], ["divine", "legendary", "underworld", "oracle", "immortal", "sacred", "titan", "quest", "ritual", "serpent"]),
    ("Linguistics", ["Language", "Dialect", "Script", "Phoneme", "Grammar"], ["syntax", "vowel", "tonal", "lexicon", "morphology", "spoken", "written", "inflected", "semantic", "consonant"]),
    ("Archaeology", ["Site", "Artifact", "Excavation", "Tomb", "Settlement"], ["pottery", "neolithic", "bronze", "ruins", "burial", "stratum", "relic", "ancient", "inscription", "mound"]),
    ("Agriculture", ["Crop", "Farm", "Harvest", "Soil", "Irrigation"], ["wheat", "organic", "fertile", "yield", "tractor", "seasonal", "livestock", "grain", "orchard", "pasture"]),
    ("Automotive", ["Car", "Engine", "Manufacturer", "Model", "Dealer"], ["sedan", "electric", "hybrid", "torque", "diesel", "horsepower", "chassis", "coupe", "turbo", "transmission"]),
    ("Aviation", ["Aircraft", "Airline", "Airport", "Pilot", "Route"], ["jet", "runway", "cargo", "turboprop", "altitude", "terminal", "regional", "wingspan", "flight", "hangar"]),
    ("Education", ["School", "University", "Course", "Teacher", "Program"], ["curriculum", "degree", "campus", "semester", "lecture", "graduate", "tuition", "enrollment", "academic", "faculty"]),
    ("Politics", ["Party", "Election", "Candidate", "Parliament", "Policy"], ["ballot", "coalition", "legislative", "reform", "campaign", "district", "vote", "majority", "senate", "referendum"]),
    ("Religion", ["Church", "Saint", "Festival", "Scripture", "Monastery"], ["pilgrimage", "prayer", "sacred", "liturgy", "devotion", "clergy", "shrine", "holy", "ritual", "hymn"]),
    ("Fashion", ["Designer", "Brand", "Collection", "Garment", "Fabric"], ["silk", "couture", "tailored", "runway", "vintage", "cotton", "seasonal", "denim", "embroidered", "leather"]),
    ("Popular Music", ["Band", "Album", "Singer", "Song", "Label"], ["rock", "indie", "chart", "acoustic", "tour", "vocal", "single", "guitar", "debut", "lyric"]),
    ("Video Games", ["Game", "Developer", "Console", "Character", "Genre"], ["multiplayer", "arcade", "quest", "level", "strategy", "simulation", "platformer", "boss", "sandbox", "pixel"]),
    ("Ornithology", ["Species", "Nest", "Flock", "Sanctuary", "Observer"], ["warbler", "raptor", "plumage", "migratory", "wetland", "perching", "songbird", "heron", "owl", "feather"]),
    ("Oceanography", ["Current", "Ocean", "Trench", "Tide", "Island"], ["salinity", "thermal", "abyssal", "coastal", "upwelling", "gyre", "sediment", "swell", "arctic", "equatorial"]),
    ("Public Health", ["Outbreak", "Campaign", "Agency", "District", "Study"], ["epidemic", "screening", "prevention", "mortality", "sanitation", "nutrition", "immunization", "surveillance", "risk", "community"]),
    ("Transportation", ["Railway", "Station", "Highway", "Port", "Ferry"], ["commuter", "freight", "transit", "express", "terminal", "tunnel", "junction", "metro", "corridor", "depot"]),
    ("Energy", ["Power Plant", "Reactor", "Turbine", "Grid", "Fuel"], ["solar", "wind", "nuclear", "hydro", "coal", "renewable", "capacity", "voltage", "battery", "carbon"]),
    ("Law", ["Case", "Court", "Statute", "Judge", "Verdict"], ["appeal", "plaintiff", "defendant", "ruling", "criminal", "civil", "precedent", "jury", "contract", "tort"]),
    ("Mathematics", ["Theorem", "Mathematician", "Conjecture", "Equation", "Proof"], ["algebraic", "prime", "geometric", "infinite", "integral", "topology", "lemma", "matrix", "vector", "axiom"]),
    ("Photography", ["Camera", "Photographer", "Lens", "Exhibition", "Photo"], ["aperture", "shutter", "exposure", "portrait", "landscape", "monochrome", "digital", "film", "focal", "tripod"]),
    ("Dance", ["Dancer", "Choreographer", "Ballet", "Company", "Style"], ["tango", "pirouette", "rhythm", "contemporary", "folk", "ballroom", "stage", "salsa", "tap", "modern"]),
    ("Theater", ["Play", "Playwright", "Venue", "Performer", "Production"], ["tragedy", "comedy", "act", "stage", "curtain", "musical", "scene", "rehearsal", "monologue", "ensemble"]),
    ("Entomology", ["Insect", "Beetle", "Butterfly", "Colony", "Larva"], ["wing", "antenna", "pollinator", "nocturnal", "swarm", "chitin", "metamorphosis", "hive", "predatory", "tropical"]),
    ("Mining", ["Mine", "Ore", "Deposit", "Shaft", "Operator"], ["copper", "gold", "open-pit", "underground", "tonnage", "iron", "seam", "quarry", "lithium", "smelter"]),
    ("Tourism", ["Destination", "Hotel", "Tour", "Attraction", "Resort"], ["beach", "heritage", "guided", "scenic", "luxury", "budget", "seasonal", "cruise", "island", "landmark"]),
    ("Nutrition", ["Food", "Nutrient", "Diet", "Vitamin", "Meal"], ["protein", "fiber", "calorie", "mineral", "organic", "sugar", "balanced", "vegan", "dietary", "portion"]),
];

const GENERIC_ENTITIES: [&str; 5] = ["Item", "Record", "Entry", "Site", "Group"];
const GENERIC_WORDS: [&str; 10] = [
    "general", "common", "primary", "local", "annual", "major", "minor", "public", "early", "modern",
];

/// The 50 default topic names, in catalogue order.
pub fn default_topics() -> Vec<String> {
    TOPICS.iter().map(|(t, _, _)| t.to_string()).collect()
}

/// Case-insensitive lookup of a built-in topic.
pub fn lookup(topic: &str) -> Option<Vocab> {
    let key = topic.trim();
    TOPICS
        .iter()
        .find(|(t, _, _)| t.eq_ignore_ascii_case(key))
        .map(|(t, e, w)| Vocab {
            topic: t.to_string(),
            entities: e.iter().map(|s| s.to_string()).collect(),
            words: w.iter().map(|s| s.to_string()).collect(),
        })
}

/// Fallback vocabulary for topics without a built-in entry: generic entities,
/// with the topic's own words mixed into the descriptive pool.
pub fn generic(topic: &str) -> Vocab {
    let mut words: Vec<String> = topic
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect();
    words.extend(GENERIC_WORDS.iter().map(|s| s.to_string()));
    Vocab {
        topic: topic.trim().to_string(),
        entities: GENERIC_ENTITIES.iter().map(|s| s.to_string()).collect(),
        words,
    }
}
