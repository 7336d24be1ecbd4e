//! Talking to a scorer service over HTTP.
//!
//! Start a service implementing `POST /v1/score` and `GET /v1/health`, then
//! run `ENTAILGINE_SCORER_URL=http://localhost:8080 cargo run --example remote_backend`.
//! Without a reachable service the example reports the transport error.

use entailgine::gateway::{BackendKind, GatewayConfig, RemoteBackend, ScoreRequestPair, ScorerGateway, SCORER_URL_ENV};

fn main() {
    let endpoint = std::env::var(SCORER_URL_ENV).unwrap_or_else(|_| "http://127.0.0.1:8080".into());
    match RemoteBackend::new(&endpoint).health() {
        Ok(h) => println!("service {endpoint}: status={} model={}", h.status, h.model),
        Err(e) => {
            println!("service {endpoint} unavailable: {e}");
            return;
        }
    }

    let cfg = GatewayConfig {
        backend: BackendKind::Remote { endpoint },
        batch_size: 16,
        ..GatewayConfig::default()
    };
    let gateway = ScorerGateway::from_config(cfg).expect("valid configuration");
    let pairs = [
        ScoreRequestPair::new("The cat is black.", "The cat is black."),
        ScoreRequestPair::new("The cat is black.", "The cat is white."),
    ];
    match gateway.score_batch(&pairs) {
        Ok(scores) => {
            for (p, t) in pairs.iter().zip(scores) {
                println!("{:?} | {:?} -> {} ({:.3}, {:.3}, {:.3})", p.hypothesis, p.premise, t.argmax(), t.e, t.n, t.c);
            }
        }
        Err(e) => println!("scoring failed: {e}"),
    }
}
