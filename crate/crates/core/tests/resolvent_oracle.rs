//! The secular equation against dense eigendecompositions of `P0 + P1`
//! computed by an independent Jacobi solver.

mod common;

use common::{dot, jacobi_eigen, kernel_from_rng, rank_two};
use faer::Mat;
use geosbm::eigen::eig_sym;
use geosbm::graphgen::sigma;
use geosbm::model::ones_direction;
use geosbm::resolvent::{build_context, ResolventContext};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn context(p1: &Mat<f64>, l1: f64, l2: f64) -> ResolventContext {
    let n = p1.nrows();
    build_context(
        &eig_sym(p1, n).unwrap(),
        &ones_direction(n),
        &sigma(n).unwrap(),
        l1,
        l2,
    )
    .unwrap()
}

/// The defining double-sum display, evaluated term by term.
fn secular_display(mu: &[f64], r: &[f64], s: &[f64], l1: f64, l2: f64, theta: f64) -> f64 {
    let n = mu.len();
    let mut f = 1.0;
    for j in 0..n {
        f += (l1 * r[j] * r[j] + l2 * s[j] * s[j]) / (mu[j] - theta);
    }
    let mut cross = 0.0;
    for j in 0..n {
        for k in 0..n {
            if j != k {
                let d = r[j] * s[k] - r[k] * s[j];
                cross += d * d / ((mu[j] - theta) * (mu[k] - theta));
            }
        }
    }
    f + l1 * l2 / 2.0 * cross
}

#[test]
fn jacobi_oracle_sanity() {
    let m = Mat::from_fn(3, 3, |i, j| {
        [[2.0, 1.0, 0.0], [1.0, 2.0, 1.0], [0.0, 1.0, 2.0]][i][j]
    });
    let (vals, vecs) = jacobi_eigen(&m);
    let s2 = std::f64::consts::SQRT_2;
    for (v, e) in vals.iter().zip([2.0 + s2, 2.0, 2.0 - s2]) {
        assert!((v - e).abs() < 1e-14);
    }
    for (i, w) in vecs.iter().enumerate() {
        for r in 0..3 {
            let mw: f64 = (0..3).map(|c| m[(r, c)] * w[c]).sum();
            assert!((mw - vals[i] * w[r]).abs() < 1e-13);
        }
    }
}

#[test]
fn product_form_matches_double_sum_display() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let n = rng.random_range(4..12) * 2;
        let p1 = {
            let g = rng.random_range(0.5..5.0);
            kernel_from_rng(&mut rng, n, g)
        };
        let ctx = context(&p1, 4.0, 2.5);
        for step in [1e-3, 0.1, 1.0, 10.0] {
            let theta = ctx.mu1() + step;
            let direct = secular_display(ctx.mu(), ctx.r(), ctx.s(), 4.0, 2.5, theta);
            let value = ctx.secular_value(theta).unwrap();
            assert!(
                (value - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                "theta {theta}: {value} vs {direct}"
            );
        }
    }
}

#[test]
fn secular_value_is_a_determinant_ratio() {
    // f(theta) = det(P0 + P1 - theta) / det(P1 - theta)
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let n = 8;
    let p1 = kernel_from_rng(&mut rng, n, 1.0);
    let p0 = rank_two(n, 3.0, 1.5);
    let ctx = context(&p1, 3.0, 1.5);
    let (full, _) = jacobi_eigen(&(&p0 + &p1));
    let (pert, _) = jacobi_eigen(&p1);
    for theta in [ctx.mu1() + 0.01, ctx.mu1() + 0.7, 20.0] {
        let ratio: f64 = full
            .iter()
            .zip(&pert)
            .map(|(a, b)| (a - theta) / (b - theta))
            .product();
        let f = ctx.secular_value(theta).unwrap();
        assert!(
            (f - ratio).abs() < 1e-9 * ratio.abs().max(1.0),
            "{f} vs {ratio}"
        );
    }
}

#[test]
fn derivative_matches_central_difference() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let n = 2 * rng.random_range(4..15);
        let p1 = {
            let g = rng.random_range(0.3..3.0);
            kernel_from_rng(&mut rng, n, g)
        };
        let ctx = context(&p1, rng.random_range(2.0..8.0), rng.random_range(0.5..2.0));
        for offset in [0.2, 1.0, 5.0] {
            let theta = ctx.mu1() + offset;
            let h = 1e-6 * theta;
            let fd = (ctx.secular_value(theta + h).unwrap()
                - ctx.secular_value(theta - h).unwrap())
                / (2.0 * h);
            let d = ctx.secular_derivative(theta).unwrap();
            assert!(
                (d - fd).abs() <= 1e-6 * d.abs().max(1e-3),
                "theta {theta}: {d} vs {fd}"
            );
        }
    }
}

#[test]
fn roots_and_correlations_match_dense_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut seen_two = 0;
    for _ in 0..60 {
        let n = 2 * rng.random_range(4..21);
        let kappa = rng.random_range(0.1..1.0);
        let p1 = &{
            let g = rng.random_range(0.2..5.0);
            kernel_from_rng(&mut rng, n, g)
        } * faer::Scale(kappa);
        let l2 = rng.random_range(0.2..4.0) * p1.norm_l2().max(0.1);
        let l1 = l2 * rng.random_range(1.05..3.0);
        let ctx = context(&p1, l1, l2);
        let roots = ctx.detached_eigenvalues().unwrap();
        let (vals, vecs) = jacobi_eigen(&(&rank_two(n, l1, l2) + &p1));
        let above: Vec<usize> = (0..n).filter(|&i| vals[i] > ctx.mu1() + 1e-7).collect();
        assert_eq!(
            roots.len(),
            above.len(),
            "roots {roots:?} vs dense {:?}",
            &vals[..3]
        );
        let sig = sigma(n).unwrap();
        for (theta, &i) in roots.iter().zip(&above) {
            assert!((theta - vals[i]).abs() <= 1e-8 * vals[i].abs().max(1.0));
            let measured = dot(&vecs[i], &sig).powi(2);
            let predicted = ctx.predicted_correlation(*theta).unwrap();
            assert!(
                (predicted - measured).abs() <= 1e-6,
                "{predicted} vs {measured}"
            );
        }
        if roots.len() == 2 {
            seen_two += 1;
            // upper root: f crosses upward; lower root: downward
            assert!(ctx.secular_derivative(roots[0]).unwrap() > 0.0);
            assert!(ctx.secular_derivative(roots[1]).unwrap() < 0.0);
        }
    }
    assert!(seen_two > 10);
}

#[test]
fn completeness_and_determinism() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let p1 = kernel_from_rng(&mut rng, 8, 1.0);
    let a = context(&p1, 2.0, 1.0);
    let b = context(&p1, 2.0, 1.0);
    assert_eq!(a, b);
    let r2: f64 = a.r().iter().map(|x| x * x).sum();
    let s2: f64 = a.s().iter().map(|x| x * x).sum();
    assert!((r2 - 1.0).abs() < 1e-10 && (s2 - 1.0).abs() < 1e-10);
    assert!(a.mu().windows(2).all(|w| w[0] >= w[1]));
}
