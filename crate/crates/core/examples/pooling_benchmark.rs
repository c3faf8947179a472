//! Time naive scatter-add against interval pooling.
//!
//! cargo run --release --example pooling_benchmark -- [points] [channels]

use dualbev::pooling::bench_pooling;

fn main() -> dualbev::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse().expect("points")).unwrap_or(100_000);
    let channels: usize = args.next().map(|s| s.parse().expect("channels")).unwrap_or(8);
    for seed in 0..3 {
        let r = bench_pooling(n, channels, seed)?;
        println!(
            "seed {seed}: naive {:.2} ms, interval {:.2} ms, interval (cached plan) {:.2} ms, checksums equal: {}",
            r.naive_ns as f64 / 1e6,
            r.interval_ns as f64 / 1e6,
            r.interval_cached_ns as f64 / 1e6,
            r.naive_checksum == r.interval_checksum
        );
    }
    Ok(())
}
