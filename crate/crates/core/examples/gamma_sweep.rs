// A small seeded gamma sweep with the naive estimator, written to a
// temporary directory.

use geosbm::experiment::{run_sweep, write_sweep, ExperimentConfig};

pub fn run_example() -> geosbm::Result<()> {
    let config = ExperimentConfig {
        n: 200,
        p1: 0.3,
        p2: 0.1,
        kappa: 0.6,
        gamma_grid: Some(vec![2.0, 8.0, 32.0]),
        trials: 3,
        seed: 42,
        ..Default::default()
    };
    let sweep = run_sweep(&config)?;
    for row in &sweep.aggregate {
        println!(
            "gamma {:>5}: median overlap {:.3} [{:.3}, {:.3}]",
            row.gamma, row.median_overlap, row.q25_overlap, row.q75_overlap
        );
    }
    let dir = std::env::temp_dir().join(format!("geosbm-sweep-{}", std::process::id()));
    for path in write_sweep(&dir, &config, &sweep)? {
        println!("wrote {}", path.display());
    }
    std::fs::remove_dir_all(&dir)?;
    assert_eq!(sweep.records.len(), 9);
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
