// Round trip of the upper-triangle binary dump.

use geosbm::dump::{read_from, write_adjacency_to, write_dense_to};
use geosbm::graphgen::sample_model;
use geosbm::{make_params, Seed};

pub fn run_example() -> geosbm::Result<()> {
    let params = make_params(50, 0.3, 0.1, 0.5, 3.0)?;
    let sample = sample_model(&params, Seed::new(0, 0))?;

    let mut bytes = Vec::new();
    write_adjacency_to(&mut bytes, &sample.adjacency)?;
    println!("adjacency dump: {} bytes", bytes.len());
    assert_eq!(read_from(&bytes[..])?.matrix, sample.adjacency.to_dense());

    bytes.clear();
    write_dense_to(&mut bytes, &sample.conditional_mean)?;
    println!("conditional mean dump: {} bytes", bytes.len());
    assert_eq!(read_from(&bytes[..])?.matrix, sample.conditional_mean);
    Ok(())
}

#[allow(dead_code)]
fn main() -> geosbm::Result<()> {
    run_example()
}
