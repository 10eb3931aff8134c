// Spectrum of a sampled adjacency matrix: histogram, leading gaps and the
// Perron-Frobenius sandwich for the kernel part.

use geosbm::eigen::{eigenvalues_sym, row_sum_bounds, separation_gap, spectrum_histogram};
use geosbm::graphgen::sample_model;
use geosbm::{make_params, Seed};

pub fn run_example() -> geosbm::Result<()> {
    let params = make_params(300, 0.3, 0.05, 0.6, 10.0)?;
    let sample = sample_model(&params, Seed::new(1, 0))?;
    let eigenvalues = eigenvalues_sym(&sample.adjacency.to_dense())?;

    let hist = spectrum_histogram(&eigenvalues, 20)?;
    let peak = hist.counts.iter().max().copied().unwrap_or(0).max(1);
    for (c, n) in hist.centres().iter().zip(&hist.counts) {
        println!("{c:>8.3} {}", "#".repeat(n * 40 / peak));
    }
    assert_eq!(hist.total(), params.n);

    let gap = separation_gap(&eigenvalues)?;
    println!(
        "rho1 = {:.3}, rho2 = {:.3}, rho3 = {:.3}, detached = {}",
        gap.rho1, gap.rho2, gap.rho3, gap.detached
    );

    let kp = sample.kernel.scaled(params.kappa);
    let rho = eigenvalues_sym(&kp)?[0];
    let (lo, hi) = row_sum_bounds(&kp)?;
    println!("kernel part: {lo:.3} <= rho = {rho:.3} <= {hi:.3}");
    assert!(lo <= rho && rho <= hi);
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
