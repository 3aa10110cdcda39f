//! Cluster an edge list straight from disk in a fixed number of passes.
//!
//! `cargo run --example stream_file -- edges.txt`; without an argument a
//! small file is written to a temp directory first.

use std::io::Write;

use corrclust::io::write_clustering;
use corrclust::streaming::{memory_budget, run_streaming_pipeline, FileEdgeStream};
use corrclust::{OracleMode, Params};

fn main() -> corrclust::Result<()> {
    let dir = tempfile_dir();
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = dir.join("edges.txt");
            let mut f = std::fs::File::create(&p)?;
            writeln!(f, "# two triangles and a bridge")?;
            for (u, v) in [(10, 11), (11, 12), (12, 10), (20, 21), (21, 22), (22, 20), (12, 20)] {
                writeln!(f, "{u} {v}")?;
            }
            p
        }
    };

    let params = Params::default();
    let mut stream = FileEdgeStream::open(&path)?;
    let (clustering, report) = run_streaming_pipeline(&mut stream, &params, OracleMode::Exact)?;
    println!(
        "{} passes, peak {} words, budget {} words",
        report.passes,
        report.peak_resident_words,
        memory_budget(clustering.n(), &params)
    );
    write_clustering(std::io::stdout().lock(), &clustering, stream.ids())?;
    Ok(())
}

fn tempfile_dir() -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("corrclust-stream-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    dir
}
