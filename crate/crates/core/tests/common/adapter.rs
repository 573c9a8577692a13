//! Minimal HTTP/1.1 stand-in for a model-adapter service.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

#[derive(Debug, Clone)]
pub struct Request {
    pub method: String,
    pub path: String,
    pub body: String,
}

pub enum Reply {
    Json(u16, String),
    /// Close the socket without answering.
    Drop,
    /// Sleep, then answer.
    Slow(Duration, String),
}

type Handler = dyn Fn(&Request, usize) -> Reply + Send + Sync;

pub struct MockAdapter {
    pub url: String,
    pub requests: Arc<Mutex<Vec<Request>>>,
    pub max_concurrent: Arc<AtomicUsize>,
}

impl MockAdapter {
    /// `handler` receives each request and its 0-based arrival number.
    pub fn start(handler: impl Fn(&Request, usize) -> Reply + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(Mutex::new(Vec::new()));
        let max_concurrent = Arc::new(AtomicUsize::new(0));
        let current = Arc::new(AtomicUsize::new(0));
        let counter = Arc::new(AtomicUsize::new(0));
        let handler: Arc<Handler> = Arc::new(handler);
        {
            let requests = requests.clone();
            let max_concurrent = max_concurrent.clone();
            thread::spawn(move || {
                for stream in listener.incoming() {
                    let Ok(stream) = stream else { continue };
                    let requests = requests.clone();
                    let max_concurrent = max_concurrent.clone();
                    let current = current.clone();
                    let counter = counter.clone();
                    let handler = handler.clone();
                    thread::spawn(move || {
                        let gauge = Gauge {
                            current: &current,
                            max: &max_concurrent,
                        };
                        serve(stream, &*handler, &requests, &counter, &gauge);
                    });
                }
            });
        }
        MockAdapter {
            url,
            requests,
            max_concurrent,
        }
    }

    pub fn requests(&self) -> Vec<Request> {
        self.requests.lock().unwrap().clone()
    }
}

/// Counts requests between parse and response write, an interval that lies
/// inside the client's own request span.
struct Gauge<'a> {
    current: &'a AtomicUsize,
    max: &'a AtomicUsize,
}

fn serve(
    stream: TcpStream,
    handler: &Handler,
    log: &Mutex<Vec<Request>>,
    counter: &AtomicUsize,
    gauge: &Gauge,
) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let mut parts = line.split_whitespace();
    let method = parts.next().unwrap_or_default().to_string();
    let path = parts.next().unwrap_or_default().to_string();
    let mut length = 0;
    loop {
        let mut header = String::new();
        reader.read_line(&mut header).unwrap();
        let header = header.trim_end();
        if header.is_empty() {
            break;
        }
        if let Some((k, v)) = header.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap();
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).unwrap();
    let request = Request {
        method,
        path,
        body: String::from_utf8(body).unwrap(),
    };
    let n = counter.fetch_add(1, Ordering::SeqCst);
    log.lock().unwrap().push(request.clone());
    let now = gauge.current.fetch_add(1, Ordering::SeqCst) + 1;
    gauge.max.fetch_max(now, Ordering::SeqCst);
    let reply = match handler(&request, n) {
        Reply::Json(status, payload) => Some((status, payload)),
        Reply::Drop => None,
        Reply::Slow(delay, payload) => {
            thread::sleep(delay);
            Some((200, payload))
        }
    };
    gauge.current.fetch_sub(1, Ordering::SeqCst);
    let Some((status, payload)) = reply else {
        return;
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
    let _ = stream.flush();
}
