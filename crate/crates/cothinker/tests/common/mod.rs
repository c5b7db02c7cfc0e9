#![allow(dead_code)]

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;

use serde_json::{json, Value};

use cothinker_core::gateway::{mock_complete, mock_embed};
use cothinker_core::{ChatRequest, RequestTag};

#[derive(Debug, Clone)]
pub struct Captured {
    pub path: String,
    pub tag: Option<String>,
    pub authorization: Option<String>,
    pub body: Value,
}

type Responder = dyn Fn(&Captured, usize) -> (u16, String) + Send + Sync;

/// Local OpenAI-compatible HTTP/1.1 server recording every request. Each
/// connection carries one request and is closed after the response.
pub struct FakeServer {
    pub base: String,
    pub log: Arc<Mutex<Vec<Captured>>>,
    stop: Arc<AtomicBool>,
    addr: std::net::SocketAddr,
}

fn read_request(stream: &mut TcpStream) -> Option<Captured> {
    let mut reader = BufReader::new(stream);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let path = line.split_whitespace().nth(1)?.to_string();
    let (mut len, mut tag, mut authorization) = (0usize, None, None);
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        let (name, value) = h.split_once(':')?;
        let value = value.trim().to_string();
        match name.to_ascii_lowercase().as_str() {
            "content-length" => len = value.parse().ok()?,
            "x-cothinker-tag" => tag = Some(value),
            "authorization" => authorization = Some(value),
            _ => {}
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some(Captured { path, tag, authorization, body: serde_json::from_slice(&body).unwrap_or(Value::Null) })
}

impl FakeServer {
    pub fn start(responder: Box<Responder>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
        let addr = listener.local_addr().unwrap();
        let log: Arc<Mutex<Vec<Captured>>> = Arc::default();
        let stop = Arc::new(AtomicBool::new(false));
        let responder: Arc<Responder> = Arc::from(responder);
        let (lg, st) = (log.clone(), stop.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                if st.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(mut stream) = stream else { continue };
                let (lg, responder) = (lg.clone(), responder.clone());
                thread::spawn(move || {
                    let Some(captured) = read_request(&mut stream) else { return };
                    let hit = {
                        let mut l = lg.lock().unwrap();
                        l.push(captured.clone());
                        l.len()
                    };
                    let (status, text) = responder(&captured, hit);
                    let head = format!(
                        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n",
                        text.len()
                    );
                    let _ = stream.write_all(head.as_bytes());
                    let _ = stream.write_all(text.as_bytes());
                    let _ = stream.flush();
                });
            }
        });
        FakeServer { base: format!("http://{addr}/v1"), log, stop, addr }
    }

    /// Answers chat calls with the mock backend's text for the same request
    /// and embedding calls with mock vectors (listed in reverse order).
    pub fn mock_openai() -> Self {
        Self::start(Box::new(|c, _| (200, mock_reply(c))))
    }

    pub fn requests(&self) -> Vec<Captured> {
        self.log.lock().unwrap().clone()
    }
}

impl Drop for FakeServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
    }
}

pub fn mock_reply(c: &Captured) -> String {
    if c.path.ends_with("/embeddings") {
        let inputs: Vec<String> = serde_json::from_value(c.body["input"].clone()).unwrap();
        let mut data: Vec<Value> =
            inputs.iter().enumerate().map(|(i, t)| json!({ "index": i, "embedding": mock_embed(t) })).collect();
        data.reverse();
        return json!({ "data": data }).to_string();
    }
    let req = request_from_wire(c);
    let text = mock_complete(&req, 0).text;
    json!({ "choices": [{ "index": 0, "message": { "role": "assistant", "content": text } }] }).to_string()
}

pub fn request_from_wire(c: &Captured) -> ChatRequest {
    let tag: RequestTag = serde_json::from_value(Value::String(c.tag.clone().expect("tag header"))).unwrap();
    let messages = c.body["messages"].as_array().unwrap();
    let user = messages.iter().find(|m| m["role"] == "user").unwrap();
    let system = messages.iter().find(|m| m["role"] == "system");
    ChatRequest {
        tag,
        system_text: system.map(|m| m["content"].as_str().unwrap().to_string()),
        user_text: user["content"].as_str().unwrap().to_string(),
        temperature: c.body["temperature"].as_f64().unwrap(),
        frequency_penalty: c.body["frequency_penalty"].as_f64().unwrap(),
        max_tokens: c.body["max_tokens"].as_u64().unwrap() as u32,
    }
}

pub const TASK: &str = "Write one coherent sentence that uses all of: dog, frisbee, catch, throw, park, sunset.";

pub fn task() -> cothinker_core::Task {
    cothinker_core::Task::new("commongen-1", TASK).unwrap()
}
