use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{Backend, ChatRequest, GatewayConfig, GatewayError};
use crate::reduction::EmbeddingVector;

/// OpenAI-compatible `/chat/completions` and `/embeddings` client.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: String,
}

#[derive(Deserialize)]
struct ChatResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingItem>,
}

#[derive(Deserialize)]
struct EmbeddingItem {
    #[serde(default)]
    index: usize,
    embedding: Vec<f64>,
}

impl HttpBackend {
    pub fn new(cfg: &GatewayConfig) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(cfg.timeout_secs))
            .build()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            client,
            base_url: cfg.base_url.trim_end_matches('/').to_string(),
            api_key: cfg.api_key.clone(),
        })
    }

    fn post(&self, path: &str, body: &serde_json::Value) -> Result<String, GatewayError> {
        let mut req = self.client.post(format!("{}{path}", self.base_url)).json(body);
        if !self.api_key.is_empty() {
            req = req.bearer_auth(&self.api_key);
        }
        let resp = req.send().map_err(|e| GatewayError::Transport(e.to_string()))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| GatewayError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(GatewayError::Status { status: status.as_u16(), body: text });
        }
        Ok(text)
    }
}

impl Backend for HttpBackend {
    fn chat(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        let body = serde_json::to_value(req).map_err(|e| GatewayError::Invalid(e.to_string()))?;
        let text = self.post("/chat/completions", &body)?;
        let parsed: ChatResponse = serde_json::from_str(&text).map_err(|e| GatewayError::Malformed(e.to_string()))?;
        let first = parsed.choices.into_iter().next().ok_or(GatewayError::EmptyChoices)?;
        Ok(first.message.content.unwrap_or_default())
    }

    fn embed(&self, texts: &[String], model: &str, _dim: usize) -> Result<Vec<EmbeddingVector>, GatewayError> {
        let text = self.post("/embeddings", &json!({ "model": model, "input": texts }))?;
        let mut parsed: EmbeddingResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::Malformed(e.to_string()))?;
        parsed.data.sort_by_key(|d| d.index);
        Ok(parsed.data.into_iter().map(|d| EmbeddingVector::new(d.embedding)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::ChatMessage;
    use std::io::{Read, Write};
    use std::net::TcpListener;

    /// Serves one canned HTTP response and returns the raw request.
    fn serve_once(status: &str, body: &'static str) -> (String, std::thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let status = status.to_string();
        let handle = std::thread::spawn(move || {
            let (mut s, _) = listener.accept().unwrap();
            let mut buf = vec![0u8; 65536];
            let mut req = Vec::new();
            loop {
                let n = s.read(&mut buf).unwrap();
                req.extend_from_slice(&buf[..n]);
                let text = String::from_utf8_lossy(&req).to_string();
                if let Some(h) = text.find("\r\n\r\n") {
                    let len = text[..h]
                        .lines()
                        .find_map(|l| {
                            l.to_ascii_lowercase()
                                .strip_prefix("content-length:")
                                .map(|v| v.trim().parse::<usize>().unwrap())
                        })
                        .unwrap_or(0);
                    if req.len() >= h + 4 + len {
                        break;
                    }
                }
                if n == 0 {
                    break;
                }
            }
            write!(s, "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}", body.len()).unwrap();
            String::from_utf8_lossy(&req).to_string()
        });
        (format!("http://{addr}/v1"), handle)
    }

    #[test]
    fn chat_round_trip() {
        let (url, h) = serve_once("200 OK", r#"{"choices":[{"message":{"role":"assistant","content":"hi"}}]}"#);
        let cfg = GatewayConfig { base_url: url, api_key: "k".into(), seed: Some(9), ..Default::default() };
        let backend = HttpBackend::new(&cfg).unwrap();
        let req = ChatRequest::new(vec![ChatMessage::system("s"), ChatMessage::user("u")], &cfg);
        assert_eq!(backend.chat(&req).unwrap(), "hi");
        let raw = h.join().unwrap();
        assert!(raw.starts_with("POST /v1/chat/completions"));
        assert!(raw.to_ascii_lowercase().contains("authorization: bearer k"));
        assert!(raw.contains("\"temperature\":0.0"));
        assert!(raw.contains("\"seed\":9"));
    }

    #[test]
    fn non_success_and_empty_choices() {
        let (url, h) = serve_once("503 Service Unavailable", "{}");
        let cfg = GatewayConfig { base_url: url, ..Default::default() };
        let req = ChatRequest::new(vec![ChatMessage::system("s")], &cfg);
        let err = HttpBackend::new(&cfg).unwrap().chat(&req).unwrap_err();
        assert!(matches!(err, GatewayError::Status { status: 503, .. }) && err.is_retryable());
        h.join().unwrap();

        let (url, h) = serve_once("200 OK", r#"{"choices":[]}"#);
        let cfg = GatewayConfig { base_url: url, ..Default::default() };
        assert_eq!(HttpBackend::new(&cfg).unwrap().chat(&req), Err(GatewayError::EmptyChoices));
        h.join().unwrap();
    }

    #[test]
    fn embeddings_in_index_order() {
        let (url, h) =
            serve_once("200 OK", r#"{"data":[{"index":1,"embedding":[0.0,1.0]},{"index":0,"embedding":[1.0,0.0]}]}"#);
        let cfg = GatewayConfig { base_url: url, ..Default::default() };
        let v = HttpBackend::new(&cfg).unwrap().embed(&["a".into(), "b".into()], "m", 2).unwrap();
        assert_eq!(v[0].values, vec![1.0, 0.0]);
        assert!(h.join().unwrap().starts_with("POST /v1/embeddings"));
    }
}
