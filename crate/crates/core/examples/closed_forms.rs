// Closed-form predictions and finite-size regime checks.

use geosbm::make_params;
use geosbm::theory::{
    asymptotic_correlation_bound, check_regimes, lambda12, mu1_approx_raw, noise_norm_bound,
    separation_condition, RegimeMargins,
};

pub fn run_example() -> geosbm::Result<()> {
    let params = make_params(2000, 0.025, 0.01, 0.97, 50.0)?;
    let (l1, l2) = lambda12(&params);
    println!("lambda1 = {l1}, lambda2 = {l2}");
    for gamma in [50.0, 70.0, 100.0, 110.0] {
        println!(
            "gamma {gamma:>5}: kappa = 1 gives mu1 ~ {:.3}",
            mu1_approx_raw(2000, 1.0, gamma)
        );
    }
    println!("noise norm bound {:.3}", noise_norm_bound(&params));
    println!(
        "separation certificate: {}",
        separation_condition(&params, 0.05)?
    );

    let easy = make_params(2000, 0.2, 0.05, 0.5, 500.0)?;
    for r in check_regimes(&easy, &RegimeMargins::default()).records {
        println!("{:<28} ratio {:>8.3} pass {}", r.name, r.ratio, r.pass);
    }
    let (l1, l2) = lambda12(&easy);
    let x = geosbm::theory::mu1_approx(&easy) / l2;
    println!(
        "asymptotic correlation bound {:.4}",
        asymptotic_correlation_bound(l1 / l2, x)?
    );
    assert_eq!((lambda12(&params)), (35.0, 15.0));
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
