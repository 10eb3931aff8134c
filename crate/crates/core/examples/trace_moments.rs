// Exact expected trace moments from cycle quotients, against simulation.

use geosbm::moments::{
    enumerate_cycle_quotients, exact_expected_trace_moment, monte_carlo_trace_moments,
};

pub fn run_example() -> geosbm::Result<()> {
    for l in 2..=6 {
        let qs = enumerate_cycle_quotients(l)?;
        let partitions: u64 = qs.iter().map(|q| q.count).sum();
        println!(
            "C_{l}: {} classes from {partitions} admissible partitions",
            qs.len()
        );
    }
    for q in enumerate_cycle_quotients(4)? {
        println!(
            "  k = {}, count = {}, det(I + tL) coefficients {:?}, spanning trees {}",
            q.k,
            q.count,
            q.det_polynomial(),
            q.spanning_trees()
        );
    }

    let (n, gamma) = (120, 2.0);
    let mc = monte_carlo_trace_moments(n, gamma, 4, 60, 5)?;
    for m in mc {
        let exact = exact_expected_trace_moment(n, gamma, m.l)?;
        let z = (m.mean - exact) / m.standard_error;
        println!(
            "l = {}: exact {exact:.3}, simulated {:.3} +/- {:.3} (z = {z:.2})",
            m.l, m.mean, m.standard_error
        );
        assert!(z.abs() < 5.0);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
