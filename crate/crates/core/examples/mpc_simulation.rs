//! Run the round-based driver on simulated machines and dump its trace.

use corrclust::eval::gen_planted;
use corrclust::mpc::{communication_bound, plan_machines, run_mpc_pipeline, Enforcement, MpcConfig};
use corrclust::{run_in_memory, OracleMode, Params};

fn main() -> corrclust::Result<()> {
    let g = gen_planted(100, 20, 0.98, 0.0005, 1);
    let params = Params::new(0.2, 0.2).with_seed(1);
    let delta = 0.99;

    let machines = plan_machines(&g, &params, OracleMode::Sketch, delta, 4.0)?;
    let cfg = MpcConfig::for_graph(&g, machines, delta, Enforcement::Audit)?;
    println!("{machines} machines of {} words", cfg.memory_cap);

    let (clustering, trace) = run_mpc_pipeline(&g, &params, OracleMode::Sketch, cfg)?;
    let reference = run_in_memory(&g, &params, OracleMode::Sketch)?.clustering;
    assert!(clustering.same_partition(&reference));

    println!("rounds: {}, clusters: {}", trace.rounds, clustering.num_clusters());
    println!("peak load {} of {}, {} cap violations", trace.peak_load(), trace.memory_cap, trace.violations.len());
    println!("words moved {} (bound {:.0})", trace.total_words, communication_bound(&g, &params));
    for r in trace.per_round.iter().take(5) {
        println!("  {:<20} sent {:>6} recv {:>6}", r.stage, r.sent_max, r.recv_max);
    }
    if std::env::args().any(|a| a == "--json") {
        println!("{}", trace.to_json()?);
    }
    Ok(())
}
