//! Check the structural guarantees on a clustered graph.

use corrclust::agreement::sparsify_exact;
use corrclust::eval::gen_planted;
use corrclust::validate::validate_sparsified;
use corrclust::Params;

fn main() {
    let g = gen_planted(3, 200, 0.998, 0.001, 5);
    for params in [Params::new(1.0 / 36.0, 1.0 / 36.0), Params::new(0.2, 0.2)] {
        println!("beta = {:.4}, lambda = {:.4}", params.beta, params.lambda);
        let report = validate_sparsified(&sparsify_exact(&g, &params), &params);
        print!("{}", report.summary());
    }
}
