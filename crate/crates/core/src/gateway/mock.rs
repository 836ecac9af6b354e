use std::collections::BTreeMap;
use std::path::Path;

use super::{Backend, ChatMessage, ChatRequest, GatewayError};
use crate::reduction::EmbeddingVector;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(FNV_PRIME))
}

/// Fixture key: FNV-1a 64 over `role:content` lines joined by `\n`, as 16 hex digits.
pub fn prompt_hash(messages: &[ChatMessage]) -> String {
    let text = messages.iter().map(|m| format!("{}:{}", m.role.as_str(), m.content)).collect::<Vec<_>>().join("\n");
    format!("{:016x}", fnv1a(text.as_bytes()))
}

pub fn load_fixtures(path: &Path) -> Result<BTreeMap<String, String>, GatewayError> {
    let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))
}

/// Canned responses keyed by prompt hash; embeddings derived from text hashes.
#[derive(Clone, Debug, Default)]
pub struct MockBackend {
    responses: BTreeMap<String, String>,
}

impl MockBackend {
    pub fn new(responses: BTreeMap<String, String>) -> Self {
        MockBackend { responses }
    }

    pub fn from_file(path: &Path) -> Result<Self, GatewayError> {
        load_fixtures(path).map(Self::new)
    }

    /// Deterministic unit vector seeded by the text hash (splitmix64 stream).
    pub fn embedding(text: &str, dim: usize) -> EmbeddingVector {
        let mut state = fnv1a(text.as_bytes());
        let mut values = Vec::with_capacity(dim);
        for _ in 0..dim {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^= z >> 31;
            values.push((z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0);
        }
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            values[0] = 1.0;
        } else {
            values.iter_mut().for_each(|v| *v /= norm);
        }
        EmbeddingVector::new(values)
    }
}

impl Backend for MockBackend {
    fn chat(&self, req: &ChatRequest) -> Result<String, GatewayError> {
        let h = prompt_hash(&req.messages);
        self.responses.get(&h).cloned().ok_or(GatewayError::NoFixture(h))
    }

    fn embed(&self, texts: &[String], _model: &str, dim: usize) -> Result<Vec<EmbeddingVector>, GatewayError> {
        Ok(texts.iter().map(|t| Self::embedding(t, dim)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::{Gateway, GatewayConfig};
    use std::sync::Arc;

    fn msgs() -> Vec<ChatMessage> {
        vec![ChatMessage::system("match"), ChatMessage::user("onto")]
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(format!("{:016x}", fnv1a(b"")), "cbf29ce484222325");
        assert_eq!(format!("{:016x}", fnv1a(b"a")), "af63dc4c8601ec8c");
        assert_eq!(prompt_hash(&msgs()), prompt_hash(&msgs()));
        assert_ne!(prompt_hash(&msgs()), prompt_hash(&msgs()[..1]));
    }

    #[test]
    fn fixture_lookup() {
        let h = prompt_hash(&msgs());
        let mock = MockBackend::new([(h, "<Alignment/>".to_string())].into_iter().collect());
        let gw = Gateway::new(Arc::new(mock), GatewayConfig::default()).unwrap();
        assert_eq!(gw.chat_messages(msgs()).unwrap(), "<Alignment/>");
        let err = gw.chat_messages(vec![ChatMessage::system("other"), ChatMessage::user("x")]).unwrap_err();
        assert!(err.to_string().contains("no fixture"));
    }

    #[test]
    fn embeddings() {
        let gw =
            Gateway::new(Arc::new(MockBackend::default()), GatewayConfig { embedding_dim: 16, ..Default::default() })
                .unwrap();
        let texts: Vec<String> = (0..7).map(|i| format!("text {i}")).collect();
        let v = gw.embed(&texts).unwrap();
        assert_eq!(v.len(), 7);
        for e in &v {
            assert_eq!(e.dim(), 16);
            assert!((e.norm() - 1.0).abs() < 1e-9);
        }
        assert_eq!(gw.embed(&["a".into()]).unwrap(), gw.embed(&["a".into()]).unwrap());
    }

    #[test]
    fn fixture_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mock.json");
        std::fs::write(&path, format!("{{\"{}\": \"ok\"}}", prompt_hash(&msgs()))).unwrap();
        let mock = MockBackend::from_file(&path).unwrap();
        assert_eq!(mock.chat(&ChatRequest::new(msgs(), &GatewayConfig::default())).unwrap(), "ok");
        assert!(MockBackend::from_file(&dir.path().join("missing.json")).is_err());
    }
}
