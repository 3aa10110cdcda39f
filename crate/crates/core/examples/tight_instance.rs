//! Two overlapping cliques on which sparsification discards every edge.

use corrclust::agreement::{sparsify_exact, Params};
use corrclust::eval::{clustering_cost, gen_tight_instance, tight_shape, tight_two_clique_partition};
use corrclust::components::union_find_components;

fn main() -> corrclust::Result<()> {
    let (d, beta) = (200, 0.05);
    for x_mult in [1.0, 2.0] {
        let shape = tight_shape(d, beta, x_mult)?;
        let g = gen_tight_instance(d, beta, x_mult)?;
        let params = Params::new(beta, beta);
        let sg = sparsify_exact(&g, &params);
        let ours = clustering_cost(&g, &union_find_components(&sg))?;
        let two = clustering_cost(&g, &tight_two_clique_partition(d, beta, x_mult)?)?;
        println!(
            "x_mult {x_mult}: cliques of {}, {} crossing vertices, kept {} of {} edges, cost {ours} vs {two} ({:.1}x)",
            shape.clique,
            shape.cross,
            sg.num_kept_edges(),
            g.m_plus(),
            ours as f64 / two as f64
        );
    }
    Ok(())
}
