//! HTTP transport: one POST per request, same JSON records as the
//! subprocess protocol.

use super::protocol::{parse_response, ProtocolError, Request};
use super::{GatewayError, Predictor};
use crate::dataset::VariantInstance;
use std::time::Duration;

pub struct HttpPredictor {
    url: String,
    agent: ureq::Agent,
    timeout: Duration,
}

impl HttpPredictor {
    pub fn new(url: &str, timeout: Duration) -> Self {
        Self {
            url: url.to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            timeout,
        }
    }

    fn exchange(&self, req: &Request) -> Result<Result<u8, String>, GatewayError> {
        let resp = self
            .agent
            .post(&self.url)
            .set("Content-Type", "application/json")
            .send_string(&req.to_line());
        let body = match resp {
            Ok(r) => r
                .into_string()
                .map_err(|e| GatewayError::Transport(format!("reading response: {e}")))?,
            Err(ureq::Error::Status(code, r)) => {
                let body = r.into_string().unwrap_or_default();
                return Ok(Err(format!("HTTP {code}: {}", body.trim())));
            }
            Err(ureq::Error::Transport(t)) => {
                let timed_out = matches!(t.kind(), ureq::ErrorKind::Io)
                    && t.to_string().to_ascii_lowercase().contains("timed out");
                return Err(if timed_out {
                    GatewayError::Timeout {
                        id: req.id.clone(),
                        ms: self.timeout.as_millis() as u64,
                    }
                } else {
                    GatewayError::Transport(t.to_string())
                });
            }
        };
        let parsed = parse_response(body.trim())?;
        if parsed.id != req.id {
            return Err(ProtocolError::IdMismatch {
                expected: req.id.clone(),
                got: parsed.id,
            }
            .into());
        }
        Ok(parsed.outcome)
    }
}

impl Predictor for HttpPredictor {
    fn predict(&self, item: &VariantInstance) -> Result<u8, GatewayError> {
        let req = Request::for_instance(item);
        self.exchange(&req)?.map_err(|message| GatewayError::Predictor {
            id: req.id.clone(),
            message,
        })
    }

    fn health_check(&self) -> Result<(), GatewayError> {
        self.exchange(&Request::health()).map(|_| ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::mock::lexical_hash_choice;
    use crate::templates::Profile;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;

    /// Minimal HTTP/1.1 server answering with lexical-hash choices, or
    /// with a fixed body when `fixed` is set.
    fn serve(fixed: Option<&'static str>) -> String {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let mut stream = stream.unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut len = 0;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap() == 0 || line == "\r\n" {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        len = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0; len];
                reader.read_exact(&mut body).unwrap();
                let req: Request = serde_json::from_slice(&body).unwrap();
                let out = match fixed {
                    Some(f) => f.to_string(),
                    None => format!(
                        r#"{{"id":"{}","chosen":{}}}"#,
                        req.id,
                        lexical_hash_choice(&req.context, &req.question)
                    ),
                };
                write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{out}",
                    out.len()
                )
                .unwrap();
            }
        });
        format!("http://{addr}/predict")
    }

    fn item(id: &str, context: &str) -> VariantInstance {
        VariantInstance {
            variant_id: id.into(),
            vignette_id: "v".into(),
            dimension_set: "gender".into(),
            attribute: "F".into(),
            profile: Profile::default(),
            context: context.into(),
            question: "Q?".into(),
            choices: Default::default(),
            gold: 0,
        }
    }

    #[test]
    fn posts_requests_and_parses_answers() {
        let p = HttpPredictor::new(&serve(None), Duration::from_secs(5));
        p.health_check().unwrap();
        for (i, ctx) in ["a female", "a male", "a patient"].iter().enumerate() {
            assert_eq!(p.predict(&item(&format!("v{i}"), ctx)), Ok(lexical_hash_choice(ctx, "Q?")));
        }
    }

    #[test]
    fn mismatched_id_and_range_are_protocol_errors() {
        let p = HttpPredictor::new(&serve(Some(r#"{"id":"other","chosen":1}"#)), Duration::from_secs(5));
        assert!(matches!(
            p.predict(&item("mine", "x")),
            Err(GatewayError::Protocol(ProtocolError::IdMismatch { .. }))
        ));
        let p = HttpPredictor::new(&serve(Some(r#"{"id":"mine","chosen":7}"#)), Duration::from_secs(5));
        assert!(matches!(
            p.predict(&item("mine", "x")),
            Err(GatewayError::Protocol(ProtocolError::ChosenOutOfRange { chosen: 7, .. }))
        ));
    }

    #[test]
    fn unreachable_endpoint_is_transport_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        let p = HttpPredictor::new(&url, Duration::from_secs(2));
        assert!(matches!(p.health_check(), Err(GatewayError::Transport(_))));
    }
}
