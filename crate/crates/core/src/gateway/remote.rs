//! HTTP client for an external scorer service.
//!
//! ```text
//! POST <endpoint>/v1/score
//!   {"pairs":[{"hypothesis":"..","premise":".."}, ..]}
//!   -> {"scores":[{"e":..,"n":..,"c":..}, ..]}
//! GET  <endpoint>/v1/health
//!   -> {"status":"ok","model":".."}
//! ```

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_response, BackendError, ScoreBackend, ScoreRequestPair, SCORER_URL_ENV};
use crate::nli::ScoreTriple;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub pairs: Vec<ScoreRequestPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreResponse {
    pub scores: Vec<ScoreTriple>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model: String,
}

pub struct RemoteBackend {
    endpoint: String,
    agent: ureq::Agent,
}

impl std::fmt::Debug for RemoteBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteBackend").field("endpoint", &self.endpoint).finish()
    }
}

impl RemoteBackend {
    pub fn new(endpoint: &str) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(10))
            .timeout(Duration::from_secs(300))
            .build();
        Self {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            agent,
        }
    }

    /// Uses `ENTAILGINE_SCORER_URL` when set, `endpoint` otherwise.
    pub fn from_env_or(endpoint: &str) -> Self {
        match std::env::var(SCORER_URL_ENV) {
            Ok(url) if !url.trim().is_empty() => Self::new(url.trim()),
            _ => Self::new(endpoint),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    pub fn health(&self) -> Result<HealthResponse, BackendError> {
        let resp = self
            .agent
            .get(&format!("{}/v1/health", self.endpoint))
            .call()
            .map_err(map_ureq)?;
        read_json(resp)
    }

    /// Sends one request and validates the response against it.
    pub fn remote_score(&self, pairs: &[ScoreRequestPair]) -> Result<Vec<ScoreTriple>, BackendError> {
        let body = serde_json::to_string(&ScoreRequest { pairs: pairs.to_vec() })
            .map_err(|e| BackendError::Malformed(e.to_string()))?;
        let resp = self
            .agent
            .post(&format!("{}/v1/score", self.endpoint))
            .set("Content-Type", "application/json")
            .send_string(&body)
            .map_err(map_ureq)?;
        let parsed: ScoreResponse = read_json(resp)?;
        check_response(pairs, parsed.scores)
    }
}

impl ScoreBackend for RemoteBackend {
    fn score_pairs(&self, pairs: &[ScoreRequestPair]) -> Result<Vec<ScoreTriple>, BackendError> {
        self.remote_score(pairs)
    }

    fn name(&self) -> &str {
        "remote"
    }
}

fn map_ureq(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Status(status, resp) => BackendError::Http {
            status,
            body: resp.into_string().unwrap_or_default(),
        },
        ureq::Error::Transport(t) => BackendError::Transport(t.to_string()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(resp: ureq::Response) -> Result<T, BackendError> {
    if resp.status() != 200 {
        return Err(BackendError::Http {
            status: resp.status(),
            body: resp.into_string().unwrap_or_default(),
        });
    }
    let text = resp
        .into_string()
        .map_err(|e| BackendError::Transport(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| BackendError::Malformed(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn request_wire_format_is_exact() {
        let req = ScoreRequest {
            pairs: vec![ScoreRequestPair::new("h \"q\"", "p")],
        };
        assert_eq!(
            serde_json::to_string(&req).unwrap(),
            r#"{"pairs":[{"hypothesis":"h \"q\"","premise":"p"}]}"#
        );
    }

    #[test]
    fn response_wire_format_parses() {
        let resp: ScoreResponse =
            serde_json::from_str(r#"{"scores":[{"e":0.7,"n":0.2,"c":0.1}]}"#).unwrap();
        assert_eq!(resp.scores[0], ScoreTriple { e: 0.7, n: 0.2, c: 0.1 });
    }

    #[test]
    fn endpoint_trailing_slash_is_trimmed() {
        assert_eq!(RemoteBackend::new("http://x:1/").endpoint(), "http://x:1");
    }
}
