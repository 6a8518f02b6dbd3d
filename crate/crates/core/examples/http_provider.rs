//! Talks to an embedding service over HTTP. A throwaway local server stands
//! in for the real one: it fails the first request with 503 to show the
//! retry, then answers with deterministic vectors.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use zeroshot_har::embedding::{
    EmbedRequest, EmbedResponse, EmbeddingProvider, HttpProvider, TestEmbedder,
};

const DIM: usize = 16;

fn serve(listener: TcpListener) {
    let encoder = TestEmbedder::new(DIM);
    for (n, stream) in listener.incoming().enumerate() {
        let Ok(mut stream) = stream else { continue };
        let mut reader = BufReader::new(stream.try_clone().expect("clone socket"));
        let mut len = 0;
        loop {
            let mut line = String::new();
            if reader.read_line(&mut line).unwrap_or(0) == 0 || line == "\r\n" {
                break;
            }
            if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                len = v.trim().parse().unwrap_or(0);
            }
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body).ok();
        let (status, payload) = if n == 0 {
            ("503 Service Unavailable", "{}".to_string())
        } else {
            let req: EmbedRequest = serde_json::from_slice(&body).expect("request json");
            let vectors = req.texts.iter().map(|t| encoder.vector(t)).collect();
            (
                "200 OK",
                serde_json::to_string(&EmbedResponse { dim: DIM, vectors }).unwrap(),
            )
        };
        let _ = write!(
            stream,
            "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
            payload.len()
        );
    }
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let listener = TcpListener::bind("127.0.0.1:0")?;
    let endpoint = format!("http://{}/embed", listener.local_addr()?);
    std::thread::spawn(move || serve(listener));

    let provider = HttpProvider::new(&endpoint, "all-distilroberta-v1", DIM, 8, 2, 3)?
        .with_backoff(Duration::from_millis(20));
    let texts = vec![
        "The activity was performed for five minutes".to_string(),
        "The activity is taking place in the kitchen mainly".to_string(),
    ];
    let out = provider.embed_batch(&texts)?;
    for (t, e) in texts.iter().zip(&out) {
        println!("{:.3} norm, dim {}: {t}", e.norm(), e.dim());
    }
    Ok(())
}
