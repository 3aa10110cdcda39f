//! A small parameter sweep printed as a table.

use std::time::Instant;

use corrclust::eval::{cluster_stats, gen_planted, pivot_baseline};
use corrclust::streaming::{run_streaming_pipeline, VecStream};
use corrclust::{run_in_memory, OracleMode, Params};

fn main() -> corrclust::Result<()> {
    let g = gen_planted(10, 100, 0.97, 0.002, 2);
    let pivot = cluster_stats(&g, &pivot_baseline(&g, 2))?;
    println!("pivot: {} clusters, cost {}", pivot.num_clusters, pivot.objective);
    println!("{:>6} {:>9} {:>8} {:>9} {:>9}", "beta", "driver", "clusters", "cost", "ms");
    for beta in [0.05, 0.1, 0.2] {
        let params = Params::new(beta, beta).with_seed(2);

        let t = Instant::now();
        let c = run_in_memory(&g, &params, OracleMode::Sketch)?.clustering;
        let s = cluster_stats(&g, &c)?;
        println!("{beta:>6} {:>9} {:>8} {:>9} {:>9.1}", "inmem", s.num_clusters, s.objective, ms(t));

        let t = Instant::now();
        let (c, _) = run_streaming_pipeline(&mut VecStream::from_graph(&g), &params, OracleMode::Sketch)?;
        let s = cluster_stats(&g, &c)?;
        println!("{beta:>6} {:>9} {:>8} {:>9} {:>9.1}", "stream", s.num_clusters, s.objective, ms(t));
    }
    Ok(())
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}
