//! Minimal local chat-completion server for exercising the HTTP backend
//! without network access.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde_json::{json, Value};

use super::ScriptedBackend;

/// Status and raw body of one stub reply.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StubReply {
    pub status: u16,
    pub body: String,
}

impl StubReply {
    pub fn status(status: u16) -> Self {
        Self {
            status,
            body: json!({"error": {"message": format!("status {status}")}}).to_string(),
        }
    }

    /// A 200 carrying `content` as the first choice.
    pub fn completion(content: &str) -> Self {
        Self {
            status: 200,
            body: json!({
                "id": "stub",
                "object": "chat.completion",
                "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
                "usage": {"prompt_tokens": 0, "completion_tokens": 0, "total_tokens": 0},
            })
            .to_string(),
        }
    }
}

type Handler = dyn Fn(&Value) -> StubReply + Send + Sync;

pub struct StubServer {
    addr: std::net::SocketAddr,
    stop: Arc<AtomicBool>,
    requests: Arc<Mutex<Vec<Value>>>,
    worker: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(&Value) -> StubReply + Send + Sync + 'static) -> std::io::Result<Self> {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let stop = Arc::new(AtomicBool::new(false));
        let requests = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let worker = {
            let stop = stop.clone();
            let requests = requests.clone();
            std::thread::spawn(move || {
                for conn in listener.incoming() {
                    if stop.load(Ordering::SeqCst) {
                        break;
                    }
                    let Ok(stream) = conn else { continue };
                    if let Err(e) = serve(stream, &*handler, &requests) {
                        log::debug!("stub connection error: {e}");
                    }
                }
            })
        };
        Ok(Self {
            addr,
            stop,
            requests,
            worker: Some(worker),
        })
    }

    /// Serves `replies` in order, repeating the last.
    pub fn sequence(replies: Vec<StubReply>) -> std::io::Result<Self> {
        let served = Mutex::new(0usize);
        Self::start(move |_| {
            let mut n = served.lock().expect("stub poisoned");
            let reply = replies
                .get(*n)
                .or_else(|| replies.last())
                .cloned()
                .unwrap_or_else(|| StubReply::status(500));
            *n += 1;
            reply
        })
    }

    /// Answers each user message by looking it up in `script`.
    pub fn scripted(script: ScriptedBackend) -> std::io::Result<Self> {
        Self::start(move |req| {
            let prompt = req
                .pointer("/messages")
                .and_then(Value::as_array)
                .and_then(|m| m.iter().rev().find(|m| m["role"] == "user"))
                .and_then(|m| m["content"].as_str())
                .unwrap_or_default();
            match script.lookup(prompt) {
                Some(text) => StubReply::completion(&text),
                None => StubReply::status(404),
            }
        })
    }

    /// Base URL to hand to the HTTP backend.
    pub fn endpoint(&self) -> String {
        format!("http://{}/v1", self.addr)
    }

    pub fn requests(&self) -> Vec<Value> {
        self.requests.lock().expect("stub poisoned").clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn serve(stream: TcpStream, handler: &Handler, requests: &Mutex<Vec<Value>>) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut line = String::new();
    reader.read_line(&mut line)?;
    if line.trim().is_empty() {
        return Ok(());
    }
    let mut content_length = 0usize;
    loop {
        line.clear();
        if reader.read_line(&mut line)? == 0 || line == "\r\n" || line == "\n" {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.trim().eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0u8; content_length];
    reader.read_exact(&mut body)?;
    let parsed: Value = serde_json::from_slice(&body).unwrap_or(Value::Null);
    let reply = handler(&parsed);
    requests.lock().expect("stub poisoned").push(parsed);
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        reply.status,
        reply.body.len(),
        reply.body
    )?;
    stream.flush()
}
