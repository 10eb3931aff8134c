// Samples one perturbed block model and compares its edge density with the
// marginal edge probability.

use geosbm::graphgen::{marginal_edge_probability, sample_model};
use geosbm::{make_params, Seed};

pub fn run_example() -> geosbm::Result<()> {
    let params = make_params(400, 0.1, 0.02, 0.5, 4.0)?;
    let sample = sample_model(&params, Seed::new(7, 0))?;
    let a = &sample.adjacency;
    let density = a.edge_density();
    let expected = marginal_edge_probability(&params);
    println!("N = {}, edges = {}", a.n(), a.edge_count());
    println!("edge density {density:.5}, marginal probability {expected:.5}");
    println!("isolated vertices: {}", a.isolated_vertices());
    let pairs = (params.n * (params.n - 1) / 2) as f64;
    let se = (expected * (1.0 - expected) / pairs).sqrt();
    // latent clustering inflates the variance well beyond the binomial one
    assert!((density - expected).abs() < 20.0 * se);
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
