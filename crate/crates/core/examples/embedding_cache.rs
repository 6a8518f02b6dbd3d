//! Writes a binary embedding cache, reads it back and serves lookups from it.
//! The same file format is produced by the Python exporter.

use zeroshot_har::embedding::{
    cache_read, cache_write, CacheProvider, EmbeddingProvider, TestEmbedder, TextDigest,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let texts: Vec<String> = [
        "Sleep takes place for hours at night in the bedroom",
        "Cook takes place for minutes when a person uses the stove in the kitchen",
    ]
    .map(String::from)
    .to_vec();

    let encoder = TestEmbedder::with_model("demo-model", 32);
    let vectors = encoder.embed_batch(&texts)?;
    let entries: Vec<_> = texts.iter().cloned().zip(vectors).collect();

    let dir = std::env::temp_dir().join(format!("zshar-cache-demo-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("demo.emb");
    cache_write(&path, "demo-model", 32, &entries)?;
    println!(
        "wrote {} ({} bytes)",
        path.display(),
        std::fs::metadata(&path)?.len()
    );

    let cache = cache_read(&path)?;
    for (digest, v) in cache.iter() {
        println!("{}  [{:+.4}, {:+.4}, ...]", digest.to_hex(), v[0], v[1]);
    }

    let provider = CacheProvider::new(cache, "demo-model", 32)?;
    let hit = provider.embed_batch(&texts[..1])?;
    assert_eq!(hit[0], entries[0].1);
    println!("lookup ok for {}", TextDigest::of(&texts[0]));

    match provider.embed_batch(&["a text nobody embedded".to_string()]) {
        Err(e) => println!("miss: {e}"),
        Ok(_) => unreachable!("text was never cached"),
    }
    std::fs::remove_dir_all(dir)?;
    Ok(())
}
