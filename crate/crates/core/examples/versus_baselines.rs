//! Compare the pipeline with pivot and with the optimum on small graphs.

use corrclust::eval::{brute_force_opt, clustering_cost, gen_gnp, gen_planted, pivot_baseline};
use corrclust::graph::SignedGraph;
use corrclust::{run_in_memory, OracleMode, Params};

fn main() -> corrclust::Result<()> {
    let params = Params::new(1.0 / 36.0, 1.0 / 36.0);
    println!("{:<16} {:>4} {:>6} {:>6} {:>6}", "graph", "m+", "opt", "ours", "pivot");
    for seed in 0..4 {
        row(&format!("gnp seed {seed}"), &gen_gnp(10, 0.6, seed), &params, seed)?;
    }
    for seed in 0..4 {
        row(&format!("planted seed {seed}"), &gen_planted(3, 4, 1.0, 0.05, seed), &params, seed)?;
    }
    println!("proven factor at these parameters: {:.0}", params.approximation_bound());
    Ok(())
}

fn row(name: &str, g: &SignedGraph, params: &Params, seed: u64) -> corrclust::Result<()> {
    let (_, opt) = brute_force_opt(g)?;
    let ours = clustering_cost(g, &run_in_memory(g, params, OracleMode::Exact)?.clustering)?;
    let pivot = clustering_cost(g, &pivot_baseline(g, seed))?;
    println!("{name:<16} {:>4} {opt:>6} {ours:>6} {pivot:>6}", g.m_plus());
    Ok(())
}
