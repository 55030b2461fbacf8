use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use radevent::event::Sentence;
use radevent::pipeline::{BackendError, ModelBackend, RemoteBackend};
use radevent::textio::{build_prompt, PromptRecord, StepKind};

enum Reply {
    Status(u16, &'static str),
    Hang(Duration),
}

/// Serves one scripted reply per connection and records request bodies.
fn serve(script: Vec<Reply>) -> (String, Arc<Mutex<Vec<String>>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/generate", listener.local_addr().unwrap());
    let bodies = Arc::new(Mutex::new(Vec::new()));
    let seen = Arc::clone(&bodies);
    thread::spawn(move || {
        for reply in script {
            let Ok((stream, _)) = listener.accept() else { return };
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            let mut line = String::new();
            loop {
                line.clear();
                if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap_or(0);
                }
            }
            let mut body = vec![0; length];
            let _ = reader.read_exact(&mut body);
            seen.lock().unwrap().push(String::from_utf8_lossy(&body).into_owned());
            let mut stream = stream;
            match reply {
                Reply::Status(code, body) => {
                    let _ = write!(
                        stream,
                        "HTTP/1.1 {code} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                        body.len()
                    );
                }
                Reply::Hang(d) => thread::sleep(d),
            }
        }
    });
    (url, bodies)
}

fn prompt() -> PromptRecord {
    let s = Sentence { doc_id: "d", index: 0, text: "Liver lesion." };
    build_prompt(StepKind::TriggerStep, s, "Indication | Lesion | Medical_Problem", None, None).unwrap()
}

fn backend(url: &str) -> RemoteBackend {
    RemoteBackend::new(url)
        .with_api_key(None)
        .with_backoff(Duration::from_millis(5))
        .with_timeout(Duration::from_millis(500))
}

#[test]
fn returns_text_and_sends_prompt() {
    let (url, bodies) = serve(vec![Reply::Status(200, r#"{"text":"trigger: lesion [ Lesion ]"}"#)]);
    let out = backend(&url).generate(&prompt(), 64).unwrap();
    assert_eq!(out, "trigger: lesion [ Lesion ]");
    let sent: serde_json::Value = serde_json::from_str(&bodies.lock().unwrap()[0]).unwrap();
    assert_eq!(sent["max_tokens"], 64);
    assert!(sent["prompt"].as_str().unwrap().starts_with("Liver lesion. Question:"));
}

#[test]
fn missing_text_field_is_malformed() {
    let (url, _) = serve(vec![Reply::Status(200, r#"{"output":"x"}"#)]);
    let err = backend(&url).generate(&prompt(), 8).unwrap_err();
    assert!(matches!(err, BackendError::MalformedResponse(_)), "{err:?}");
}

#[test]
fn transient_statuses_are_retried() {
    let (url, bodies) = serve(vec![
        Reply::Status(503, "{}"),
        Reply::Status(429, "{}"),
        Reply::Status(200, r#"{"text":"none"}"#),
    ]);
    let out = backend(&url).with_retries(3).generate(&prompt(), 8).unwrap();
    assert_eq!(out, "none");
    assert_eq!(bodies.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_fail_fast() {
    let (url, bodies) = serve(vec![Reply::Status(404, "{}"), Reply::Status(200, r#"{"text":"x"}"#)]);
    let err = backend(&url).generate(&prompt(), 8).unwrap_err();
    assert_eq!(err, BackendError::Http(404));
    assert_eq!(bodies.lock().unwrap().len(), 1);
}

#[test]
fn retries_exhausted_after_server_errors() {
    let (url, _) = serve(vec![Reply::Status(500, "{}"), Reply::Status(502, "{}")]);
    let err = backend(&url).with_retries(1).generate(&prompt(), 8).unwrap_err();
    assert!(matches!(err, BackendError::RetriesExhausted { attempts: 2, .. }), "{err:?}");
}

#[test]
fn slow_server_times_out() {
    let (url, _) = serve(vec![Reply::Hang(Duration::from_secs(2)), Reply::Hang(Duration::from_secs(2))]);
    let err = backend(&url)
        .with_timeout(Duration::from_millis(150))
        .with_retries(1)
        .generate(&prompt(), 8)
        .unwrap_err();
    assert_eq!(err, BackendError::Timeout { attempts: 2 });
}
