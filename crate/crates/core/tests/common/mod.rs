//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's eigensolver or moment code.

#![allow(dead_code, clippy::needless_range_loop)]

use faer::Mat;
use rand::Rng;

/// Cyclic Jacobi eigendecomposition of a small symmetric matrix. Returns
/// eigenvalues in descending order with matching unit eigenvectors.
pub fn jacobi_eigen(m: &Mat<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = m.nrows();
    let mut a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| m[(i, j)]).collect())
        .collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect())
        .collect();
    let scale: f64 = a
        .iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let values = order.iter().map(|&i| a[i][i]).collect();
    let vectors = order
        .iter()
        .map(|&i| (0..n).map(|k| v[k][i]).collect())
        .collect();
    (values, vectors)
}

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// `lambda1 v1 v1' + lambda2 sigma sigma'` for balanced halves.
pub fn rank_two(n: usize, lambda1: f64, lambda2: f64) -> Mat<f64> {
    let h = 1.0 / n as f64;
    Mat::from_fn(n, n, |i, j| {
        let same = (i < n / 2) == (j < n / 2);
        lambda1 * h + lambda2 * h * if same { 1.0 } else { -1.0 }
    })
}

/// `exp(-gamma |x_i - x_j|^2)` off the diagonal for Gaussian points drawn
/// from `rng`, written independently of the library.
pub fn kernel_from_rng<R: Rng>(rng: &mut R, n: usize, gamma: f64) -> Mat<f64> {
    let pts: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            // Box-Muller
            let u1: f64 = 1.0 - rng.random::<f64>();
            let u2: f64 = rng.random();
            let r = (-2.0 * u1.ln()).sqrt();
            let t = 2.0 * std::f64::consts::PI * u2;
            [r * t.cos(), r * t.sin()]
        })
        .collect();
    Mat::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            let d = (pts[i][0] - pts[j][0]).powi(2) + (pts[i][1] - pts[j][1]).powi(2);
            (-gamma * d).exp()
        }
    })
}

/// Gaussian expectation `E exp(-gamma sum_e |X_a - X_b|^2)` over a multigraph
/// with 2-D standard Gaussian vertices, via a floating-point LU determinant of
/// `I + 2 gamma L` (each coordinate contributes `det^{-1/2}`).
pub fn gaussian_edge_expectation(k: usize, edges: &[(usize, usize)], gamma: f64) -> f64 {
    let mut m = vec![vec![0.0; k]; k];
    for i in 0..k {
        m[i][i] = 1.0;
    }
    for &(a, b) in edges {
        let w = 2.0 * gamma;
        m[a][a] += w;
        m[b][b] += w;
        m[a][b] -= w;
        m[b][a] -= w;
    }
    1.0 / lu_determinant(m)
}

pub fn lu_determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in (c + 1)..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// `Tr M^l` by repeated dense multiplication.
pub fn trace_power(m: &Mat<f64>, l: usize) -> f64 {
    let n = m.nrows();
    let mut p = Mat::<f64>::identity(n, n);
    for _ in 0..l {
        p = &p * m;
    }
    (0..n).map(|i| p[(i, i)]).sum()
}

fn is_spanning_tree(k: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            return false;
        }
        parent[ra] = rb;
    }
    edges.len() == k - 1
}

/// Spanning trees of a multigraph on `k` vertices by testing every
/// `(k - 1)`-subset of its (repeated) edges.
pub fn count_spanning_trees(k: usize, edges: &[(usize, usize)]) -> i128 {
    let m = edges.len();
    (0u32..(1 << m))
        .filter(|mask| mask.count_ones() as usize == k - 1)
        .filter(|mask| {
            let chosen: Vec<(usize, usize)> = (0..m)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| edges[i])
                .collect();
            is_spanning_tree(k, &chosen)
        })
        .count() as i128
}
