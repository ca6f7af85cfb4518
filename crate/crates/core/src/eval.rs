//! Retrieval metrics (P@k, R@k, MAP@k), ideal recall, confusion matrices
//! over labeled pairs and per-topic breakdowns.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::benchmark::GroundTruthPair;
use crate::search::SearchResult;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("k must be at least 1")]
    InvalidK,
    #[error("query {0} has labeled pairs but no search results")]
    MissingQuery(String),
    #[error("confusion matrix is empty")]
    EmptyConfusion,
}

/// How MAP@k averages precision.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapVariant {
    /// Mean of P@i over every returned position i = 1..|returned|.
    #[default]
    PrefixMean,
    /// Mean of P@i over positions holding a relevant table, divided by
    /// min(k, |gt|) (the usual IR average precision).
    HitPositions,
}

impl MapVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            MapVariant::PrefixMean => "prefix-mean",
            MapVariant::HitPositions => "hit-positions",
        }
    }
}

fn top(ranked: &[String], k: usize) -> &[String] {
    &ranked[..k.min(ranked.len())]
}

fn hits(gt: &HashSet<&str>, ranked: &[String]) -> usize {
    ranked.iter().filter(|r| gt.contains(r.as_str())).count()
}

/// |gt ∩ top-k| / |top-k|, where |top-k| is the number actually returned
/// (0 when nothing is returned).
pub fn precision_at_k(gt: &HashSet<&str>, ranked: &[String], k: usize) -> f64 {
    let t = top(ranked, k);
    if t.is_empty() {
        0.0
    } else {
        hits(gt, t) as f64 / t.len() as f64
    }
}

/// |gt ∩ top-k| / |gt|; 0 for an empty ground truth.
pub fn recall_at_k(gt: &HashSet<&str>, ranked: &[String], k: usize) -> f64 {
    if gt.is_empty() {
        0.0
    } else {
        hits(gt, top(ranked, k)) as f64 / gt.len() as f64
    }
}

pub fn map_at_k(gt: &HashSet<&str>, ranked: &[String], k: usize, variant: MapVariant) -> f64 {
    let t = top(ranked, k);
    if t.is_empty() {
        return 0.0;
    }
    let mut found = 0usize;
    let mut sum = 0.0;
    for (i, name) in t.iter().enumerate() {
        let hit = gt.contains(name.as_str());
        if hit {
            found += 1;
        }
        if variant == MapVariant::PrefixMean || hit {
            sum += found as f64 / (i + 1) as f64;
        }
    }
    match variant {
        MapVariant::PrefixMean => sum / t.len() as f64,
        MapVariant::HitPositions => {
            let denom = k.min(gt.len());
            if denom == 0 {
                0.0
            } else {
                sum / denom as f64
            }
        }
    }
}

/// Best recall reachable at cutoff k: min(k, |gt|) / |gt|, 0 for an empty
/// ground truth.
pub fn ideal_recall(k: usize, gt_size: usize) -> f64 {
    if gt_size == 0 {
        0.0
    } else {
        k.min(gt_size) as f64 / gt_size as f64
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Accuracy and corner-case ratio (1 - accuracy).
pub fn accuracy_ccr(cm: &ConfusionMatrix) -> Result<(f64, f64), EvalError> {
    if cm.total() == 0 {
        return Err(EvalError::EmptyConfusion);
    }
    let acc = (cm.tp + cm.tn) as f64 / cm.total() as f64;
    Ok((acc, 1.0 - acc))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub matrix: ConfusionMatrix,
    /// Top-k entries with no label for their query.
    pub unlabeled_positives: usize,
}

/// Cross-tabulates labeled pairs against top-k membership: a pair is
/// predicted unionable iff its data lake table is in the query's top k.
pub fn confusion_matrix(
    results: &[SearchResult],
    gt: &[GroundTruthPair],
    k: usize,
) -> Result<Confusion, EvalError> {
    if k == 0 {
        return Err(EvalError::InvalidK);
    }
    let by_query: HashMap<&str, &SearchResult> = results.iter().map(|r| (r.query.as_str(), r)).collect();
    let mut labeled: HashMap<&str, HashSet<&str>> = HashMap::new();
    let mut out = Confusion::default();
    for p in gt {
        let r = by_query
            .get(p.query_table.as_str())
            .ok_or_else(|| EvalError::MissingQuery(p.query_table.clone()))?;
        labeled.entry(&p.query_table).or_default().insert(&p.datalake_table);
        let predicted = top(&r.names(), k).contains(&p.datalake_table);
        let m = &mut out.matrix;
        match (p.label.is_unionable(), predicted) {
            (true, true) => m.tp += 1,
            (true, false) => m.fn_ += 1,
            (false, true) => m.fp += 1,
            (false, false) => m.tn += 1,
        }
    }
    for (q, names) in &labeled {
        let r = by_query[q];
        out.unlabeled_positives += top(&r.names(), k)
            .iter()
            .filter(|c| !names.contains(c.as_str()))
            .count();
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query: String,
    pub topic: String,
    pub gt_size: usize,
    pub precision: f64,
    pub recall: f64,
    pub map: f64,
    pub ideal_recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScore {
    pub topic: String,
    pub map: f64,
    pub queries: usize,
}

/// Mean MAP per topic plus the five best and five worst topics (ties by
/// topic name).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicBreakdown {
    pub per_topic: Vec<TopicScore>,
    pub top5: Vec<TopicScore>,
    pub bottom5: Vec<TopicScore>,
}

pub fn topic_breakdown(per_query: &[QueryMetrics]) -> TopicBreakdown {
    let mut groups: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
    for q in per_query {
        let e = groups.entry(q.topic.as_str()).or_default();
        e.0 += q.map;
        e.1 += 1;
    }
    let per_topic: Vec<TopicScore> = groups
        .into_iter()
        .map(|(t, (sum, n))| TopicScore {
            topic: t.to_string(),
            map: sum / n as f64,
            queries: n,
        })
        .collect();
    let mut best = per_topic.clone();
    best.sort_by(|a, b| b.map.total_cmp(&a.map).then_with(|| a.topic.cmp(&b.topic)));
    let mut worst = per_topic.clone();
    worst.sort_by(|a, b| a.map.total_cmp(&b.map).then_with(|| a.topic.cmp(&b.topic)));
    TopicBreakdown {
        top5: best.into_iter().take(5).collect(),
        bottom5: worst.into_iter().take(5).collect(),
        per_topic,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KReport {
    pub k: usize,
    pub precision: f64,
    pub recall: f64,
    pub map: f64,
    pub ideal_recall: f64,
    pub confusion: Confusion,
    pub accuracy: f64,
    pub ccr: f64,
    pub topics: TopicBreakdown,
    pub per_query: Vec<QueryMetrics>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub map_variant: MapVariant,
    pub queries: usize,
    pub reports: Vec<KReport>,
    pub warnings: Vec<String>,
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Evaluates search results against labeled pairs at each cutoff in `ks`.
/// Every query with labeled pairs must have results; results for queries
/// without labels are ignored with a warning.
pub fn evaluate(
    results: &[SearchResult],
    gt: &[GroundTruthPair],
    ks: &[usize],
    variant: MapVariant,
) -> Result<EvalReport, EvalError> {
    if ks.is_empty() || ks.contains(&0) {
        return Err(EvalError::InvalidK);
    }
    let mut warnings = Vec::new();
    let mut relevant: BTreeMap<&str, (HashSet<&str>, &str)> = BTreeMap::new();
    for p in gt {
        let e = relevant
            .entry(p.query_table.as_str())
            .or_insert_with(|| (HashSet::new(), p.topic.as_str()));
        if p.label.is_unionable() {
            e.0.insert(p.datalake_table.as_str());
        }
    }
    let by_query: HashMap<&str, &SearchResult> = results.iter().map(|r| (r.query.as_str(), r)).collect();
    for r in results {
        if !relevant.contains_key(r.query.as_str()) {
            warnings.push(format!("results for unlabeled query {} ignored", r.query));
        }
    }
    for (q, (set, _)) in &relevant {
        if set.is_empty() {
            warnings.push(format!("query {q} has no unionable tables; its metrics are 0"));
        }
    }

    let mut reports = Vec::new();
    for &k in ks {
        let mut per_query = Vec::new();
        for (q, (set, topic)) in &relevant {
            let r = by_query.get(q).ok_or_else(|| EvalError::MissingQuery(q.to_string()))?;
            let names = r.names();
            per_query.push(QueryMetrics {
                query: q.to_string(),
                topic: if topic.is_empty() { "(none)".into() } else { topic.to_string() },
                gt_size: set.len(),
                precision: precision_at_k(set, &names, k),
                recall: recall_at_k(set, &names, k),
                map: map_at_k(set, &names, k, variant),
                ideal_recall: ideal_recall(k, set.len()),
            });
        }
        let confusion = confusion_matrix(results, gt, k)?;
        let (accuracy, ccr) = accuracy_ccr(&confusion.matrix).unwrap_or((0.0, 1.0));
        reports.push(KReport {
            k,
            precision: mean(per_query.iter().map(|q| q.precision)),
            recall: mean(per_query.iter().map(|q| q.recall)),
            map: mean(per_query.iter().map(|q| q.map)),
            ideal_recall: mean(per_query.iter().map(|q| q.ideal_recall)),
            confusion,
            accuracy,
            ccr,
            topics: topic_breakdown(&per_query),
            per_query,
        });
    }
    let method = results.first().map(|r| r.method.clone()).unwrap_or_default();
    Ok(EvalReport {
        method,
        map_variant: variant,
        queries: relevant.len(),
        reports,
        warnings,
    })
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {}  queries: {}  MAP: {}", self.method, self.queries, self.map_variant.as_str());
        let _ = writeln!(
            out,
            "{:>4}  {:>7}  {:>7}  {:>7}  {:>7}  {:>5}  {:>5}  {:>5}  {:>5}  {:>7}  {:>7}",
            "k", "P@k", "R@k", "MAP@k", "ideal", "TP", "FP", "TN", "FN", "ACC", "CCR"
        );
        for r in &self.reports {
            let m = r.confusion.matrix;
            let _ = writeln!(
                out,
                "{:>4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>7.4}  {:>5}  {:>5}  {:>5}  {:>5}  {:>7.4}  {:>7.4}",
                r.k, r.precision, r.recall, r.map, r.ideal_recall, m.tp, m.fp, m.tn, m.fn_, r.accuracy, r.ccr
            );
        }
        if let Some(r) = self.reports.last() {
            if r.topics.per_topic.len() > 1 {
                let _ = writeln!(out, "\ntop topics by MAP@{}:", r.k);
                for t in &r.topics.top5 {
                    let _ = writeln!(out, "  {:.4}  {}", t.map, t.topic);
                }
                let _ = writeln!(out, "bottom topics by MAP@{}:", r.k);
                for t in &r.topics.bottom5 {
                    let _ = writeln!(out, "  {:.4}  {}", t.map, t.topic);
                }
            }
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmark::Label;
    use proptest::prelude::*;

    fn set<'a>(xs: &[&'a str]) -> HashSet<&'a str> {
        xs.iter().copied().collect()
    }

    fn names(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precision_recall_examples() {
        let gt: Vec<String> = (0..10).map(|i| format!("h{i}")).collect();
        let gt_set: HashSet<&str> = gt.iter().map(String::as_str).collect();
        assert_eq!(precision_at_k(&gt_set, &gt, 10), 1.0);
        assert_eq!(recall_at_k(&gt_set, &gt, 10), 1.0);
        let miss = names(&["m1", "m2"]);
        assert_eq!(precision_at_k(&gt_set, &miss, 10), 0.0);
        assert_eq!(recall_at_k(&gt_set, &miss, 10), 0.0);
        let mixed = names(&["h0", "m1", "h1", "m2"]);
        assert_eq!(precision_at_k(&gt_set, &mixed, 4), 0.5);
        assert_eq!(recall_at_k(&gt_set, &mixed, 4), 0.2);
        assert_eq!(recall_at_k(&set(&[]), &mixed, 4), 0.0);
        assert_eq!(precision_at_k(&gt_set, &[], 4), 0.0);
    }

    #[test]
    fn map_examples() {
        let gt = set(&["a", "b", "c"]);
        assert_eq!(map_at_k(&gt, &names(&["a", "b", "c"]), 3, MapVariant::PrefixMean), 1.0);
        let m = map_at_k(&gt, &names(&["a", "x", "b"]), 3, MapVariant::PrefixMean);
        assert!((m - (1.0 + 0.5 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
        assert_eq!(map_at_k(&gt, &names(&["x", "y"]), 2, MapVariant::PrefixMean), 0.0);
        // Standard average precision: (1 + 2/3) / min(3, 3).
        let ap = map_at_k(&gt, &names(&["a", "x", "b"]), 3, MapVariant::HitPositions);
        assert!((ap - (1.0 + 2.0 / 3.0) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ideal_recall_examples() {
        assert_eq!(ideal_recall(10, 10), 1.0);
        assert_eq!(ideal_recall(5, 10), 0.5);
        assert!((ideal_recall(60, 200) - 0.3).abs() < 1e-15);
        assert_eq!(ideal_recall(5, 0), 0.0);
    }

    #[test]
    fn accuracy_examples() {
        let cm = |tp, fp, tn, fn_| ConfusionMatrix { tp, fp, tn, fn_ };
        assert_eq!(accuracy_ccr(&cm(5, 5, 5, 5)).unwrap(), (0.5, 0.5));
        assert_eq!(accuracy_ccr(&cm(3, 0, 4, 0)).unwrap().0, 1.0);
        let (acc, ccr) = accuracy_ccr(&cm(300, 100, 400, 200)).unwrap();
        assert!((acc - 0.7).abs() < 1e-15);
        assert_eq!(acc + ccr, 1.0);
        assert_eq!(accuracy_ccr(&cm(0, 0, 0, 0)), Err(EvalError::EmptyConfusion));
    }

    fn gt_pair(q: &str, d: &str, u: bool, topic: &str) -> GroundTruthPair {
        GroundTruthPair {
            query_table: q.into(),
            datalake_table: d.into(),
            label: if u { Label::Unionable } else { Label::NonUnionable },
            topic: topic.into(),
        }
    }

    fn result(q: &str, ranked: &[&str]) -> SearchResult {
        SearchResult {
            query: q.into(),
            ranked: ranked.iter().map(|s| (s.to_string(), 1.0)).collect(),
            k: ranked.len(),
            method: "test".into(),
        }
    }

    /// Two topics, two queries each side, four labeled pairs per query.
    fn fixture() -> Vec<GroundTruthPair> {
        let mut gt = Vec::new();
        for (q, topic) in [("q1", "Art"), ("q2", "Art"), ("q3", "Law")] {
            for i in 0..4 {
                gt.push(gt_pair(q, &format!("{q}_d{i}"), i < 2, topic));
            }
        }
        gt
    }

    #[test]
    fn confusion_perfect_and_adversarial() {
        let gt = fixture();
        let perfect: Vec<SearchResult> = ["q1", "q2", "q3"]
            .iter()
            .map(|q| result(q, &[&format!("{q}_d0"), &format!("{q}_d1")]))
            .collect();
        let c = confusion_matrix(&perfect, &gt, 2).unwrap();
        assert_eq!(c.matrix, ConfusionMatrix { tp: 6, fp: 0, tn: 6, fn_: 0 });
        let wrong: Vec<SearchResult> = ["q1", "q2", "q3"]
            .iter()
            .map(|q| result(q, &[&format!("{q}_d2"), &format!("{q}_d3"), "stray"]))
            .collect();
        let c = confusion_matrix(&wrong, &gt, 3).unwrap();
        assert_eq!(c.matrix, ConfusionMatrix { tp: 0, fp: 6, tn: 0, fn_: 6 });
        assert_eq!(c.unlabeled_positives, 3);
        assert_eq!(
            confusion_matrix(&wrong[..2], &gt, 3),
            Err(EvalError::MissingQuery("q3".into()))
        );
    }

    #[test]
    fn topic_breakdown_matches_subsets() {
        let gt = fixture();
        let results = vec![
            result("q1", &["q1_d0", "x"]),
            result("q2", &["x", "q2_d1"]),
            result("q3", &["y"]),
        ];
        let rep = evaluate(&results, &gt, &[2], MapVariant::PrefixMean).unwrap();
        let r = &rep.reports[0];
        let art: Vec<&QueryMetrics> = r.per_query.iter().filter(|q| q.topic == "Art").collect();
        let want_art = art.iter().map(|q| q.map).sum::<f64>() / 2.0;
        let topics = &r.topics.per_topic;
        assert_eq!(topics[0].topic, "Art");
        assert!((topics[0].map - want_art).abs() < 1e-15);
        assert_eq!(topics[1].map, 0.0);
        assert_eq!(r.topics.top5[0].topic, "Art");
        assert_eq!(r.topics.bottom5[0].topic, "Law");
        // Query-weighted topic means recover the overall mean.
        let weighted: f64 = topics.iter().map(|t| t.map * t.queries as f64).sum::<f64>() / 3.0;
        assert!((weighted - r.map).abs() < 1e-15);
        assert_eq!(r.accuracy + r.ccr, 1.0);
    }

    #[test]
    fn single_topic_equals_overall() {
        let gt: Vec<GroundTruthPair> = fixture().into_iter().filter(|p| p.topic == "Art").collect();
        let results = vec![result("q1", &["q1_d0"]), result("q2", &["q2_d3"])];
        let rep = evaluate(&results, &gt, &[1], MapVariant::PrefixMean).unwrap();
        assert_eq!(rep.reports[0].topics.per_topic[0].map, rep.reports[0].map);
    }

    #[test]
    fn evaluation_warnings() {
        let gt = vec![gt_pair("q", "d", false, "T")];
        let results = vec![result("q", &["d"]), result("other", &["e"])];
        let rep = evaluate(&results, &gt, &[1], MapVariant::PrefixMean).unwrap();
        assert_eq!(rep.reports[0].map, 0.0);
        assert_eq!(rep.warnings.len(), 2);
        assert_eq!(evaluate(&results, &gt, &[0], MapVariant::PrefixMean), Err(EvalError::InvalidK));
    }

    /// Brute-force oracle: enumerate prefixes and count hits directly.
    fn oracle(gt: &[usize], ranked: &[usize], k: usize) -> (f64, f64, f64) {
        let n = ranked.len().min(k);
        let prefix_p = |i: usize| ranked[..i].iter().filter(|r| gt.contains(r)).count() as f64 / i as f64;
        if n == 0 {
            return (0.0, 0.0, 0.0);
        }
        let h = ranked[..n].iter().filter(|r| gt.contains(r)).count() as f64;
        let r = if gt.is_empty() { 0.0 } else { h / gt.len() as f64 };
        let map = (1..=n).map(prefix_p).sum::<f64>() / n as f64;
        (prefix_p(n), r, map)
    }

    proptest! {
        #[test]
        fn metrics_match_oracle(lake in 1usize..=20, seed in any::<u64>(), k in 1usize..=25) {
            use rand::{seq::SliceRandom, Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let gt: Vec<usize> = (0..lake).filter(|_| rng.random_bool(0.4)).collect();
            let mut ranked: Vec<usize> = (0..lake).collect();
            ranked.shuffle(&mut rng);
            ranked.truncate(rng.random_range(0..=lake));
            let gt_names: Vec<String> = gt.iter().map(|i| format!("t{i}")).collect();
            let gt_set: HashSet<&str> = gt_names.iter().map(String::as_str).collect();
            let rn: Vec<String> = ranked.iter().map(|i| format!("t{i}")).collect();
            let (p, r, m) = oracle(&gt, &ranked, k);
            prop_assert!((precision_at_k(&gt_set, &rn, k) - p).abs() <= 1e-12);
            prop_assert!((recall_at_k(&gt_set, &rn, k) - r).abs() <= 1e-12);
            prop_assert!((map_at_k(&gt_set, &rn, k, MapVariant::PrefixMean) - m).abs() <= 1e-12);
            prop_assert_eq!(map_at_k(&gt_set, &rn, 1, MapVariant::PrefixMean), precision_at_k(&gt_set, &rn, 1));
            prop_assert!(recall_at_k(&gt_set, &rn, k) <= ideal_recall(k, gt.len()) + 1e-12);
            for x in [p, r, m, map_at_k(&gt_set, &rn, k, MapVariant::HitPositions)] {
                prop_assert!((0.0..=1.0).contains(&x));
            }
        }
    }
}
