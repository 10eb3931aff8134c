// Expected isolated vertices of the pure kernel graph, by quadrature and by
// simulation.

use geosbm::experiment::run_isolated;
use geosbm::theory::expected_isolated_vertices;

pub fn run_example() -> geosbm::Result<()> {
    for gamma in [1.0, 2.0, 5.0, 10.0] {
        println!(
            "N = 500, gamma {gamma:>4}: {:.4}",
            expected_isolated_vertices(500, gamma)?
        );
    }
    let r = run_isolated(300, 5.0, 40, 9)?;
    let (mean, se) = (
        r.monte_carlo_mean.unwrap_or(f64::NAN),
        r.monte_carlo_standard_error.unwrap_or(f64::NAN),
    );
    println!(
        "N = 300, gamma 5: quadrature {:.4}, simulated {mean:.4} +/- {se:.4}",
        r.expected
    );
    assert!((mean - r.expected).abs() <= 5.0 * se.max(1e-3));
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
