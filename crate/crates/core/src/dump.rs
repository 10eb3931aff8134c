//! Binary upper-triangle matrix dumps and a CSV export for small matrices.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! offset 0   8 bytes  magic "GEOSBMUT"
//! offset 8   u64      N
//! offset 16  u8       dtype: 0 = u8 (0/1 adjacency), 1 = f64
//! offset 17  ...      entries (i, j) with i <= j in row-major order:
//!                     (0,0) (0,1) ... (0,N-1) (1,1) ... (N-1,N-1)
//! ```
//!
//! The payload holds `N (N + 1) / 2` entries of 1 or 8 bytes each.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use faer::Mat;

use crate::error::{Error, Result};
use crate::graphgen::AdjacencyMatrix;

pub const MAGIC: &[u8; 8] = b"GEOSBMUT";

/// Largest N accepted by [`write_csv_matrix`].
pub const CSV_MAX_N: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dtype {
    U8 = 0,
    F64 = 1,
}

impl Dtype {
    fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(Dtype::U8),
            1 => Ok(Dtype::F64),
            other => Err(Error::Format(format!("unknown dtype byte {other}"))),
        }
    }
}

fn write_header<W: Write>(out: &mut W, n: usize, dtype: Dtype) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&[dtype as u8])?;
    Ok(())
}

pub fn write_adjacency_to<W: Write>(mut out: W, a: &AdjacencyMatrix) -> Result<()> {
    let n = a.n();
    write_header(&mut out, n, Dtype::U8)?;
    for i in 0..n {
        let row: Vec<u8> = (i..n).map(|j| a.get(i, j) as u8).collect();
        out.write_all(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Writes the upper triangle of a symmetric matrix as f64.
pub fn write_dense_to<W: Write>(mut out: W, m: &Mat<f64>) -> Result<()> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::InvalidParams("matrix must be square".into()));
    }
    write_header(&mut out, n, Dtype::F64)?;
    for i in 0..n {
        for j in i..n {
            out.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_adjacency(path: &Path, a: &AdjacencyMatrix) -> Result<()> {
    write_adjacency_to(BufWriter::new(std::fs::File::create(path)?), a)
}

pub fn write_dense(path: &Path, m: &Mat<f64>) -> Result<()> {
    write_dense_to(BufWriter::new(std::fs::File::create(path)?), m)
}

/// A decoded dump, symmetrized into a dense matrix.
#[derive(Debug, Clone)]
pub struct Dump {
    pub dtype: Dtype,
    pub matrix: Mat<f64>,
}

pub fn read_from<R: Read>(mut input: R) -> Result<Dump> {
    let mut header = [0u8; 17];
    input
        .read_exact(&mut header)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &header[..8] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let n = u64::from_le_bytes(header[8..16].try_into().expect("8 bytes")) as usize;
    let dtype = Dtype::from_byte(header[16])?;
    let width = match dtype {
        Dtype::U8 => 1,
        Dtype::F64 => 8,
    };
    let count = n
        .checked_mul(n + 1)
        .map(|c| c / 2)
        .ok_or_else(|| Error::Format(format!("N = {n} is too large")))?;
    let mut payload = Vec::new();
    input.read_to_end(&mut payload)?;
    if payload.len() != count * width {
        return Err(Error::Format(format!(
            "expected {} payload bytes for N = {n}, found {}",
            count * width,
            payload.len()
        )));
    }
    let mut matrix = Mat::<f64>::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            let v = match dtype {
                Dtype::U8 => payload[k] as f64,
                Dtype::F64 => {
                    f64::from_le_bytes(payload[8 * k..8 * k + 8].try_into().expect("8 bytes"))
                }
            };
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
            k += 1;
        }
    }
    Ok(Dump { dtype, matrix })
}

pub fn read_dump(path: &Path) -> Result<Dump> {
    read_from(BufReader::new(std::fs::File::open(path)?))
}

/// Full matrix as CSV, one row per line.
pub fn write_csv_matrix<W: Write>(mut out: W, m: &Mat<f64>) -> Result<()> {
    if m.nrows() > CSV_MAX_N {
        return Err(Error::InvalidParams(format!(
            "CSV export is limited to N <= {CSV_MAX_N}, got {}",
            m.nrows()
        )));
    }
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| m[(i, j)].to_string()).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adjacency_round_trip() {
        let mut a = AdjacencyMatrix::empty(5);
        a.set_edge(0, 3, true);
        a.set_edge(2, 4, true);
        let mut buf = Vec::new();
        write_adjacency_to(&mut buf, &a).unwrap();
        assert_eq!(buf.len(), 17 + 15);
        let d = read_from(&buf[..]).unwrap();
        assert_eq!(d.dtype, Dtype::U8);
        assert_eq!(d.matrix, a.to_dense());
    }

    #[test]
    fn dense_round_trip_is_exact() {
        let m = Mat::from_fn(4, 4, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let mut buf = Vec::new();
        write_dense_to(&mut buf, &m).unwrap();
        assert_eq!(buf.len(), 17 + 10 * 8);
        assert_eq!(read_from(&buf[..]).unwrap().matrix, m);
    }

    #[test]
    fn corrupt_inputs() {
        assert!(matches!(read_from(&b"short"[..]), Err(Error::Format(_))));
        let mut buf = Vec::new();
        write_dense_to(&mut buf, &Mat::<f64>::identity(3, 3)).unwrap();
        buf.pop();
        assert!(read_from(&buf[..]).is_err());
        buf[0] = b'X';
        assert!(read_from(&buf[..]).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut out = Vec::new();
        write_csv_matrix(&mut out, &Mat::<f64>::identity(2, 2)).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "1,0\n0,1\n");
    }
}
