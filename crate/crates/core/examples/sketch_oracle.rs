//! Sampled agreement decisions next to the exact ones.

use corrclust::agreement::{in_weak_agreement_exact, Params};
use corrclust::eval::gen_planted;
use corrclust::sketch::{agreement_sampled, build_sketches, SketchConfig};

fn main() -> corrclust::Result<()> {
    let g = gen_planted(4, 150, 0.97, 0.02, 3);
    println!("{} adjacency entries", 2 * g.m_plus());
    // Small sampling constants so the sketches actually subsample.
    for a in [2.0, 10.0, 50.0] {
        let params = Params::new(0.2, 0.2).with_a(a).with_seed(11);
        let cfg = SketchConfig::new(params, g.n());
        let sketches = build_sketches(&g, &cfg)?;
        let words: usize = sketches.iter().map(|s| s.words()).sum();

        let mut same = 0;
        for &(u, v) in g.edges() {
            let exact = in_weak_agreement_exact(&g, u, v, 1, params.beta);
            let sampled = agreement_sampled(&sketches[u as usize], &sketches[v as usize], &cfg)?;
            same += usize::from(exact == sampled);
        }
        println!("a = {a:>4}: {words:>6} sketch words, {same} of {} decisions match", g.m_plus());
    }
    Ok(())
}
