use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;
use std::time::Duration;

use amscheck_llm::*;

/// One-shot HTTP server on loopback. Returns its base URL and a handle that
/// yields the request body it received.
fn serve(status: u16, body: &'static str, delay: Duration) -> (String, thread::JoinHandle<String>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (mut stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line == "\r\n" || line.is_empty() {
                break;
            }
            let lower = line.to_ascii_lowercase();
            if let Some(v) = lower.strip_prefix("content-length:") {
                len = v.trim().parse().unwrap();
            }
        }
        let mut req = vec![0; len];
        reader.read_exact(&mut req).unwrap();
        thread::sleep(delay);
        let _ = write!(
            stream,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        );
        String::from_utf8(req).unwrap()
    });
    (url, handle)
}

fn cfg(url: &str, key_env: &str) -> EndpointConfig {
    EndpointConfig { base_url: url.into(), api_key_env: key_env.into(), timeout_secs: 5.0, ..Default::default() }
}

#[test]
fn chat_completion_round_trip() {
    std::env::set_var("AMSCHECK_TEST_KEY_OK", "k-123");
    let (url, h) = serve(200, r#"{"choices":[{"message":{"role":"assistant","content":"No bugs found."}}]}"#, Duration::ZERO);
    let reply = complete("check this", &cfg(&url, "AMSCHECK_TEST_KEY_OK")).unwrap();
    assert_eq!(reply, "No bugs found.");
    let sent: serde_json::Value = serde_json::from_str(&h.join().unwrap()).unwrap();
    assert_eq!(sent["messages"][0]["role"], "user");
    assert_eq!(sent["messages"][0]["content"], "check this");
    assert_eq!(sent["model"], "gpt-3.5-turbo");
}

#[test]
fn http_status_reported() {
    std::env::set_var("AMSCHECK_TEST_KEY_STATUS", "k");
    let (url, h) = serve(429, "{}", Duration::ZERO);
    assert_eq!(
        complete("x", &cfg(&url, "AMSCHECK_TEST_KEY_STATUS")).unwrap_err(),
        TransportError::HttpStatus(429)
    );
    h.join().unwrap();
}

#[test]
fn slow_server_times_out() {
    std::env::set_var("AMSCHECK_TEST_KEY_SLOW", "k");
    let (url, h) = serve(200, "{}", Duration::from_millis(1500));
    let c = EndpointConfig { timeout_secs: 0.3, ..cfg(&url, "AMSCHECK_TEST_KEY_SLOW") };
    assert_eq!(complete("x", &c).unwrap_err(), TransportError::Timeout);
    h.join().unwrap();
}

#[test]
fn missing_key() {
    let c = cfg("http://127.0.0.1:9/v1", "AMSCHECK_TEST_KEY_UNSET");
    assert_eq!(
        complete("x", &c).unwrap_err(),
        TransportError::MissingKey("AMSCHECK_TEST_KEY_UNSET".into())
    );
}

#[test]
fn bad_body() {
    std::env::set_var("AMSCHECK_TEST_KEY_BODY", "k");
    let (url, h) = serve(200, r#"{"choices":[]}"#, Duration::ZERO);
    assert!(matches!(complete("x", &cfg(&url, "AMSCHECK_TEST_KEY_BODY")), Err(TransportError::BadResponse(_))));
    h.join().unwrap();
}

#[test]
fn stub_is_offline() {
    let stub = StubTransport::new("Verdict: Trojan detected");
    assert_eq!(stub.complete("anything", &EndpointConfig::default()).unwrap(), "Verdict: Trojan detected");
}
