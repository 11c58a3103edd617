//! Minimal single-threaded HTTP/1.1 server for exercising the remote
//! clients without network access.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

pub struct TestRequest {
    pub method: String,
    pub path: String,
    pub headers: Vec<(String, String)>,
    pub body: String,
}

impl TestRequest {
    pub fn header(&self, name: &str) -> Option<String> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.clone())
    }
}

pub struct HttpReply {
    status: u16,
    body: String,
}

impl HttpReply {
    pub fn json(body: String) -> Self {
        Self { status: 200, body }
    }

    pub fn status(status: u16, body: &str) -> Self {
        Self {
            status,
            body: body.to_string(),
        }
    }
}

pub struct TestServer {
    addr: std::net::SocketAddr,
}

impl TestServer {
    pub fn start<F>(handler: F) -> Self
    where
        F: Fn(TestRequest) -> HttpReply + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(mut stream) = stream else { break };
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut request_line = String::new();
                if reader.read_line(&mut request_line).is_err() {
                    continue;
                }
                let mut parts = request_line.split_whitespace();
                let method = parts.next().unwrap_or_default().to_string();
                let path = parts.next().unwrap_or_default().to_string();
                let mut headers = Vec::new();
                let mut content_length = 0usize;
                loop {
                    let mut line = String::new();
                    if reader.read_line(&mut line).unwrap_or(0) == 0 {
                        break;
                    }
                    let line = line.trim_end();
                    if line.is_empty() {
                        break;
                    }
                    if let Some((k, v)) = line.split_once(':') {
                        let (k, v) = (k.trim().to_string(), v.trim().to_string());
                        if k.eq_ignore_ascii_case("content-length") {
                            content_length = v.parse().unwrap_or(0);
                        }
                        headers.push((k, v));
                    }
                }
                let mut body = vec![0u8; content_length];
                if reader.read_exact(&mut body).is_err() {
                    continue;
                }
                let reply = handler(TestRequest {
                    method,
                    path,
                    headers,
                    body: String::from_utf8_lossy(&body).into_owned(),
                });
                let response = format!(
                    "HTTP/1.1 {} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{}",
                    reply.status,
                    reply.body.len(),
                    reply.body
                );
                let _ = stream.write_all(response.as_bytes());
            }
        });
        Self { addr }
    }

    pub fn url(&self) -> String {
        format!("http://{}/", self.addr)
    }
}

/// Builds a graph from `(passage id, [(proposition text, [entities])])`
/// with every text embedded by `provider`.
pub fn mock_graph(
    provider: &dyn crate::embedding::EmbeddingProvider,
    spec: &[(&str, &[(&str, &[&str])])],
) -> crate::graph::PropositionGraph {
    use crate::corpus::CorpusPassage;
    use crate::extraction::{ExtractedProposition, ExtractionRecord};

    let passages: Vec<CorpusPassage> = spec
        .iter()
        .map(|(id, props)| CorpusPassage {
            id: id.to_string(),
            title: None,
            text: props.iter().map(|(t, _)| *t).collect::<Vec<_>>().join(". "),
        })
        .collect();
    let records: Vec<ExtractionRecord> = spec
        .iter()
        .filter(|(_, props)| !props.is_empty())
        .map(|(id, props)| ExtractionRecord {
            passage_id: id.to_string(),
            entities: props
                .iter()
                .flat_map(|(_, e)| e.iter().map(|s| s.to_string()))
                .collect(),
            propositions: props
                .iter()
                .map(|(t, e)| ExtractedProposition {
                    text: t.to_string(),
                    entities: e.iter().map(|s| s.to_string()).collect(),
                })
                .collect(),
            provenance: None,
        })
        .collect();
    crate::index::build_index(&passages, &records, provider, crate::index::DEFAULT_TAU_SYN)
        .expect("test graph builds")
}
