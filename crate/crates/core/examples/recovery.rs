// Both spectral estimators on one sample, scored against the communities.

use geosbm::graphgen::{sample_model, sigma};
use geosbm::recovery::{davis_kahan_estimate, evaluate, naive_spectral_estimate, DEFAULT_EPSILON};
use geosbm::{make_params, Seed};

pub fn run_example() -> geosbm::Result<()> {
    let params = make_params(400, 0.2, 0.05, 0.3, 40.0)?;
    let sample = sample_model(&params, Seed::new(11, 0))?;
    let a = sample.adjacency.to_dense();
    let sig = sigma(params.n)?;

    let naive = evaluate(&naive_spectral_estimate(&a)?, &sig, DEFAULT_EPSILON)?;
    let known = evaluate(
        &davis_kahan_estimate(&a, (params.p1 + params.p2) / 2.0)?,
        &sig,
        DEFAULT_EPSILON,
    )?;
    for (name, r) in [("naive", naive), ("known mean", known)] {
        println!(
            "{name:>10}: overlap {:.3}, rounded {:.3}, agreement {:.3}, {}",
            r.overlap, r.rounded_overlap, r.hamming_agreement, r.classification
        );
        assert!(r.rounded_overlap >= 4.0 * r.overlap - 3.0 - 1e-12);
    }
    assert!(known.overlap > 0.5);
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
