//! Cluster a planted graph in memory and compare against the planted truth.

use corrclust::eval::{cluster_stats, gen_planted, planted_clustering};
use corrclust::{run_in_memory, OracleMode, Params};

fn main() -> corrclust::Result<()> {
    let g = gen_planted(5, 200, 0.995, 0.0005, 7);
    let params = Params::new(0.04, 0.04).with_seed(7);

    let run = run_in_memory(&g, &params, OracleMode::Exact)?;
    let stats = cluster_stats(&g, &run.clustering)?;
    let truth = cluster_stats(&g, &planted_clustering(5, 200))?;

    println!("n = {}, m+ = {}", g.n(), g.m_plus());
    println!("kept {} of {} edges", run.sparsified.num_kept_edges(), g.m_plus());
    println!("clusters: {} {:?}", stats.num_clusters, stats.size_histogram);
    println!("disagreements: {} (planted partition: {})", stats.objective, truth.objective);
    Ok(())
}
