//! Minimal HTTP/1.1 server standing in for a remote planner. It answers
//! `POST /v1/next-call` from a fixed list of replies and records every
//! prompt it receives.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

#[derive(Debug, Clone)]
pub enum Reply {
    /// `200` with `{"text": ...}`.
    Text(String),
    Status(u16),
    /// `200` with this body verbatim.
    Body(String),
}

#[derive(Default)]
struct State {
    replies: Vec<Reply>,
    next: usize,
    prompts: Vec<String>,
}

pub struct MockPlanner {
    pub url: String,
    state: Arc<Mutex<State>>,
}

impl MockPlanner {
    pub fn start(replies: Vec<Reply>) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").expect("bind mock planner");
        let url = format!("http://{}", listener.local_addr().unwrap());
        let state = Arc::new(Mutex::new(State {
            replies,
            ..State::default()
        }));
        let shared = Arc::clone(&state);
        thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let state = Arc::clone(&shared);
                thread::spawn(move || {
                    let _ = serve(stream, &state);
                });
            }
        });
        MockPlanner { url, state }
    }

    pub fn text_replies<S: Into<String>>(lines: impl IntoIterator<Item = S>) -> Self {
        Self::start(lines.into_iter().map(|l| Reply::Text(l.into())).collect())
    }

    pub fn prompts(&self) -> Vec<String> {
        self.state.lock().unwrap().prompts.clone()
    }
}

fn read_request(reader: &mut BufReader<TcpStream>) -> std::io::Result<Option<(String, Vec<u8>)>> {
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(None);
    }
    let mut length = 0usize;
    let mut chunked = false;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((name, value)) = line.split_once(':') {
            let value = value.trim();
            match name.to_ascii_lowercase().as_str() {
                "content-length" => length = value.parse().unwrap_or(0),
                "transfer-encoding" => chunked = value.eq_ignore_ascii_case("chunked"),
                _ => {}
            }
        }
    }
    let mut body = Vec::new();
    if chunked {
        loop {
            let mut size = String::new();
            reader.read_line(&mut size)?;
            let n = usize::from_str_radix(size.trim().split(';').next().unwrap_or("0"), 16).unwrap_or(0);
            let mut chunk = vec![0; n + 2];
            reader.read_exact(&mut chunk)?;
            if n == 0 {
                break;
            }
            body.extend_from_slice(&chunk[..n]);
        }
    } else {
        body.resize(length, 0);
        reader.read_exact(&mut body)?;
    }
    Ok(Some((request_line, body)))
}

fn serve(stream: TcpStream, state: &Mutex<State>) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let mut reader = BufReader::new(stream);
    while let Some((request_line, body)) = read_request(&mut reader)? {
        let reply = {
            let mut s = state.lock().unwrap();
            if let Ok(v) = serde_json::from_slice::<serde_json::Value>(&body) {
                if let Some(p) = v["prompt"].as_str() {
                    s.prompts.push(p.to_string());
                }
            }
            if !request_line.starts_with("POST /v1/next-call ") {
                Reply::Status(404)
            } else {
                let r = s.replies.get(s.next).cloned().unwrap_or(Reply::Status(410));
                s.next += 1;
                r
            }
        };
        let (status, body) = match reply {
            Reply::Text(t) => (200, serde_json::json!({ "text": t }).to_string()),
            Reply::Body(b) => (200, b),
            Reply::Status(code) => (code, String::from("{}")),
        };
        write!(
            writer,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{body}",
            body.len()
        )?;
        writer.flush()?;
    }
    Ok(())
}
