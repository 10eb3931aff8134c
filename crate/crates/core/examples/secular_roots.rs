// Detached eigenvalues of `P0 + kappa P` from the secular equation, checked
// against a dense eigendecomposition.

use geosbm::eigen::eig_sym;
use geosbm::graphgen::{block_matrix, kernel_matrix, sigma};
use geosbm::model::{ones_direction, sample_latents};
use geosbm::numeric::dot;
use geosbm::resolvent::build_context;
use geosbm::theory::lambda12;
use geosbm::{make_params, Seed};

pub fn run_example() -> geosbm::Result<()> {
    let params = make_params(200, 0.4, 0.1, 0.5, 20.0)?;
    let n = params.n;
    let kp =
        kernel_matrix(&sample_latents(&params, Seed::new(3, 0)), params.gamma).scaled(params.kappa);
    let (l1, l2) = lambda12(&params);
    let sig = sigma(n)?;

    let ctx = build_context(&eig_sym(&kp, n)?, &ones_direction(n), &sig, l1, l2)?;
    let roots = ctx.detached_eigenvalues()?;
    println!("lambda1 = {l1}, lambda2 = {l2}, mu1 = {:.4}", ctx.mu1());

    let full = &block_matrix(&params).materialize() + &kp;
    let dense = eig_sym(&full, 2)?;
    for (i, theta) in roots.iter().enumerate() {
        let direct = dense.eigenvalues()[i];
        let predicted = ctx.predicted_correlation(*theta)?;
        let w = dense.vector(i);
        let measured = dot(w, &sig).powi(2);
        println!("theta{} = {theta:.10} (dense {direct:.10}); <w, sigma>^2 {predicted:.8} vs {measured:.8}", i + 1);
        assert!((theta - direct).abs() < 1e-8 * direct.abs().max(1.0));
        assert!((predicted - measured).abs() < 1e-6);
    }
    let cert = ctx.separation_certificate(0.05);
    println!(
        "certificate lambda2 >= 4 mu1 (1.05): {} (ratio {:.2})",
        cert.holds, cert.ratio
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
