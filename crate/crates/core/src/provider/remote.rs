//! OpenAI-compatible HTTP backend.

use std::time::Duration;

use log::{debug, warn};
use serde_json::{json, Value};

use super::{CompletionRequest, Provider, ProviderConfig, ProviderError, Semaphore};

pub struct RemoteProvider {
    cfg: ProviderConfig,
    agent: ureq::Agent,
    api_key: String,
    permits: Semaphore,
}

// Hand-written so the key never reaches logs.
impl std::fmt::Debug for RemoteProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteProvider")
            .field("endpoint", &self.cfg.endpoint)
            .field("model", &self.cfg.model)
            .field("api_key", &"<redacted>")
            .finish()
    }
}

enum Failure {
    Retryable(String),
    Fatal(String),
}

impl RemoteProvider {
    pub fn new(cfg: ProviderConfig) -> Result<Self, ProviderError> {
        cfg.validate()?;
        let api_key = std::env::var(&cfg.api_key_env)
            .map_err(|_| ProviderError::AuthMissing(cfg.api_key_env.clone()))?;
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .http_status_as_error(false)
            .build()
            .into();
        let permits = Semaphore::new(cfg.max_in_flight);
        Ok(Self {
            cfg,
            agent,
            api_key,
            permits,
        })
    }

    fn url(&self, path: &str) -> String {
        let base = self.cfg.endpoint.as_deref().unwrap_or_default();
        format!("{}/{}", base.trim_end_matches('/'), path)
    }

    fn post_once(&self, url: &str, body: &Value) -> Result<Value, Failure> {
        let _permit = self.permits.acquire();
        let mut resp = self
            .agent
            .post(url)
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body)
            .map_err(|e| Failure::Retryable(format!("transport: {e}")))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Failure::Retryable(format!("reading body: {e}")))?;
        match status {
            200..=299 => serde_json::from_str(&text)
                .map_err(|e| Failure::Fatal(format!("invalid JSON response: {e}"))),
            429 | 500..=599 => Err(Failure::Retryable(format!("HTTP {status}"))),
            _ => Err(Failure::Fatal(format!("HTTP {status}: {}", truncate(&text, 200)))),
        }
    }

    /// POSTs with exponential backoff on transport errors, 429 and 5xx.
    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = self.url(path);
        let mut attempts = 0;
        loop {
            attempts += 1;
            match self.post_once(&url, body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(message)) => {
                    return Err(ProviderError::Provider { attempts, message })
                }
                Err(Failure::Retryable(message)) => {
                    if attempts > self.cfg.retries {
                        return Err(ProviderError::Provider { attempts, message });
                    }
                    let delay = self.cfg.backoff_base_ms.saturating_mul(1 << (attempts - 1).min(16));
                    warn!("{path}: {message}; retrying in {delay} ms");
                    std::thread::sleep(Duration::from_millis(delay));
                }
            }
        }
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

fn malformed(what: &str) -> ProviderError {
    ProviderError::Provider {
        attempts: 1,
        message: format!("response lacks {what}"),
    }
}

impl Provider for RemoteProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<String, ProviderError> {
        req.validate(self.cfg.context_limit)?;
        let body = json!({
            "model": self.cfg.model,
            "prompt": req.prompt,
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        });
        debug!("completion request, {} prompt chars", req.prompt.len());
        let v = self.post("completions", &body)?;
        let choice = &v["choices"][0];
        choice["text"]
            .as_str()
            .or_else(|| choice["message"]["content"].as_str())
            .map(str::to_string)
            .ok_or_else(|| malformed("choices[0].text"))
    }

    fn embed(&self, text: &str) -> Result<Vec<f64>, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::InvalidRequest("empty text".into()));
        }
        let model = self.cfg.embedding_model.as_ref().or(self.cfg.model.as_ref());
        let v = self.post("embeddings", &json!({ "model": model, "input": text }))?;
        v["data"][0]["embedding"]
            .as_array()
            .ok_or_else(|| malformed("data[0].embedding"))?
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| malformed("numeric embedding")))
            .collect()
    }

    fn id(&self) -> String {
        format!("remote:{}", self.cfg.model.as_deref().unwrap_or("?"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::sync::{Arc, Mutex};

    /// Minimal HTTP/1.1 server answering the queued responses in order and
    /// recording request bodies.
    fn mock_server(responses: Vec<(u16, String)>) -> (String, Arc<Mutex<Vec<String>>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let seen = Arc::new(Mutex::new(Vec::new()));
        let seen2 = seen.clone();
        std::thread::spawn(move || {
            for (status, body) in responses {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                let mut auth = String::new();
                let mut line = String::new();
                loop {
                    line.clear();
                    reader.read_line(&mut line).unwrap();
                    let l = line.trim_end().to_ascii_lowercase();
                    if l.is_empty() {
                        break;
                    }
                    if let Some(v) = l.strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                    if l.starts_with("authorization:") {
                        auth = line.trim_end().to_string();
                    }
                }
                let mut buf = vec![0; len];
                reader.read_exact(&mut buf).unwrap();
                seen2
                    .lock()
                    .unwrap()
                    .push(format!("{auth}\n{}", String::from_utf8(buf).unwrap()));
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                    body.len()
                )
                .unwrap();
            }
        });
        (format!("http://{addr}/v1"), seen)
    }

    fn cfg(endpoint: String, env: &str) -> ProviderConfig {
        // SAFETY: each test uses its own variable name.
        unsafe { std::env::set_var(env, "sk-test") };
        ProviderConfig {
            api_key_env: env.into(),
            backoff_base_ms: 1,
            ..ProviderConfig::remote(endpoint, "test-model")
        }
    }

    #[test]
    fn completion_round_trip_with_retry() {
        let (url, seen) = mock_server(vec![
            (503, "{}".into()),
            (200, r#"{"choices":[{"text":"Unionable: yes"}]}"#.into()),
        ]);
        let p = RemoteProvider::new(cfg(url, "UB_TEST_KEY_A")).unwrap();
        let req = CompletionRequest::new("Are they unionable?");
        assert_eq!(p.complete(&req).unwrap(), "Unionable: yes");
        let seen = seen.lock().unwrap();
        assert_eq!(seen.len(), 2);
        assert!(seen[1].contains("Bearer sk-test"));
        let body: Value = serde_json::from_str(seen[1].split_once('\n').unwrap().1).unwrap();
        assert_eq!(body["model"], "test-model");
        assert_eq!(body["prompt"], "Are they unionable?");
        assert_eq!(body["max_tokens"], 1024);
        assert_eq!(body["temperature"], 0.7);
    }

    #[test]
    fn retries_exhaust_into_provider_error() {
        let (url, _) = mock_server(vec![(500, "{}".into()), (502, "{}".into())]);
        let mut c = cfg(url, "UB_TEST_KEY_B");
        c.retries = 1;
        let p = RemoteProvider::new(c).unwrap();
        let err = p.complete(&CompletionRequest::new("x")).unwrap_err();
        assert!(matches!(err, ProviderError::Provider { attempts: 2, .. }), "{err:?}");
    }

    #[test]
    fn client_errors_are_not_retried() {
        let (url, seen) = mock_server(vec![(401, r#"{"error":"bad key"}"#.into())]);
        let p = RemoteProvider::new(cfg(url, "UB_TEST_KEY_C")).unwrap();
        let err = p.complete(&CompletionRequest::new("x")).unwrap_err();
        assert!(matches!(err, ProviderError::Provider { attempts: 1, .. }));
        assert_eq!(seen.lock().unwrap().len(), 1);
    }

    #[test]
    fn embedding_response() {
        let (url, _) = mock_server(vec![(200, r#"{"data":[{"embedding":[0.6,0.8]}]}"#.into())]);
        let p = RemoteProvider::new(cfg(url, "UB_TEST_KEY_D")).unwrap();
        assert_eq!(p.embed("planets").unwrap(), vec![0.6, 0.8]);
    }

    #[test]
    fn debug_output_hides_key() {
        let p = RemoteProvider::new(cfg("http://127.0.0.1:9".into(), "UB_TEST_KEY_E")).unwrap();
        assert!(!format!("{p:?}").contains("sk-test"));
    }
}
