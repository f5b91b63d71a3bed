//! Independent straight-line oracles shared by the integration tests.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;

pub mod calibration;
pub mod corpus;
pub mod service;

/// Mean and unbiased covariance by explicit double loops.
pub fn textbook_fit(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            let mut s = 0.0;
            for r in rows {
                s += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
            cov[i][j] = s / (n - 1) as f64;
        }
    }
    (mean, cov)
}

pub fn to_matrix(m: &[Vec<f64>]) -> DMatrix<f64> {
    DMatrix::from_fn(m.len(), m[0].len(), |i, j| m[i][j])
}

/// Trace of the square root of `a b` from the eigenvalues of the
/// nonsymmetric product (real Schur form).
pub fn product_sqrt_trace(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a * b)
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re.max(0.0).sqrt())
        .sum()
}

/// d² = ‖μ₁−μ₂‖² + tr Σ₁ + tr Σ₂ − 2 tr √(Σ₁Σ₂), recomputed from the rows.
pub fn straight_fd(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let (m1, c1) = textbook_fit(x);
    let (m2, c2) = textbook_fit(y);
    let (c1, c2) = (to_matrix(&c1), to_matrix(&c2));
    let dm: f64 = m1.iter().zip(&m2).map(|(a, b)| (a - b).powi(2)).sum();
    dm + c1.trace() + c2.trace() - 2.0 * product_sqrt_trace(&c1, &c2)
}

pub fn random_rows(rng: &mut impl Rng, n: usize, d: usize, shift: f64, scale: f64) -> Vec<Vec<f64>> {
    // a per-set random mixing matrix gives correlated, non-diagonal covariances
    let mix = DMatrix::from_fn(d, d, |i, j| if i == j { 1.0 } else { 0.0 } + rng.random_range(-0.5..0.5));
    (0..n)
        .map(|_| {
            let z = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0) * scale);
            let v = &mix * z;
            v.iter().map(|x| x + shift).collect()
        })
        .collect()
}

/// Symmetric positive definite matrix with eigenvalues bounded away from zero.
pub fn random_spd(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let s = &m * m.transpose() / d as f64 + DMatrix::identity(d, d) * 0.1;
    (&s + s.transpose()) * 0.5
}

/// Orthogonal matrix from the QR factor of a random matrix.
pub fn random_orthogonal(rng: &mut impl Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    m.qr().q()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub mod suites {
    //! Randomized suites returning the worst observed error, so tests can
    //! assert and the acceptance report can print the same numbers.

    use super::*;
    use genimg_eval::embedding::{EmbeddingMeta, EmbeddingSet};
    use genimg_eval::frechet::{fit_gaussian, frechet_distance, relative_fd, sqrtm_trace, GaussianSummary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    pub fn set(rows: &[Vec<f64>], tag: &str) -> EmbeddingSet {
        EmbeddingSet::from_rows(rows, EmbeddingMeta::new("x", "d", tag)).unwrap()
    }

    fn fd_rows(x: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
        let g1 = fit_gaussian(&set(x, "a")).unwrap();
        let g2 = fit_gaussian(&set(y, "b")).unwrap();
        frechet_distance(&g1, &g2).unwrap().value
    }

    fn map_rows(rows: &[Vec<f64>], f: impl Fn(&DVector<f64>) -> DVector<f64>) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|r| f(&DVector::from_column_slice(r)).iter().copied().collect())
            .collect()
    }

    /// Diagonal covariances against ‖Δμ‖² + Σ(√λ₁−√λ₂)²; `cases` pairs, d ≤ 32.
    pub fn diagonal(cases: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..cases {
            let d = rng.random_range(1..=32);
            let mut draw = || {
                let mean = DVector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
                let var = DVector::from_fn(d, |_, _| rng.random_range(0.01..10.0));
                (mean, var)
            };
            let (m1, v1) = draw();
            let (m2, v2) = draw();
            let g1 = GaussianSummary::new(m1.clone(), DMatrix::from_diagonal(&v1), 100).unwrap();
            let g2 = GaussianSummary::new(m2.clone(), DMatrix::from_diagonal(&v2), 100).unwrap();
            let closed = (&m1 - &m2).norm_squared()
                + v1.iter().zip(v2.iter()).map(|(a, b)| (a.sqrt() - b.sqrt()).powi(2)).sum::<f64>();
            let got = frechet_distance(&g1, &g2).unwrap().value;
            worst = worst.max(rel_err(got, closed));
        }
        worst
    }

    /// sqrtm_trace against the nonsymmetric-product oracle; `cases` SPD pairs, d ≤ 64.
    pub fn sqrtm_vs_product(cases: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..cases {
            let d = rng.random_range(1..=64);
            let a = random_spd(&mut rng, d);
            let b = random_spd(&mut rng, d);
            let got = sqrtm_trace(&a, &b).unwrap();
            worst = worst.max(rel_err(got, product_sqrt_trace(&a, &b)));
        }
        worst
    }

    pub struct PropertyErrors {
        pub symmetry: f64,
        /// Largest |FD(g, g)|; must be exactly zero.
        pub self_distance: f64,
        pub scaling: f64,
        pub rotation: f64,
        pub rfd_scaling: f64,
    }

    /// `cases` random pairs of sets, every property checked on each.
    pub fn properties(cases: usize, seed: u64) -> PropertyErrors {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut e = PropertyErrors {
            symmetry: 0.0,
            self_distance: 0.0,
            scaling: 0.0,
            rotation: 0.0,
            rfd_scaling: 0.0,
        };
        for case in 0..cases {
            let d = rng.random_range(1..=8);
            let n1 = rng.random_range(4 * d.max(2)..60);
            let n2 = rng.random_range(4 * d.max(2)..60);
            let shift = rng.random_range(-1.0..1.0);
            let x = random_rows(&mut rng, n1, d, 0.0, 1.0);
            let spread = rng.random_range(0.5..2.0);
            let y = random_rows(&mut rng, n2, d, shift, spread);
            let base = fd_rows(&x, &y);

            e.symmetry = e.symmetry.max(rel_err(base, fd_rows(&y, &x)));

            let g = fit_gaussian(&set(&x, "a")).unwrap();
            e.self_distance = e.self_distance.max(frechet_distance(&g, &g).unwrap().value.abs());

            let a = [0.5, 2.0, 10.0][case % 3];
            let scale = |v: &DVector<f64>| v * a;
            let scaled = fd_rows(&map_rows(&x, scale), &map_rows(&y, scale));
            e.scaling = e.scaling.max(rel_err(scaled, a * a * base));

            let q = random_orthogonal(&mut rng, d);
            let rot = |v: &DVector<f64>| &q * v;
            let rotated = fd_rows(&map_rows(&x, rot), &map_rows(&y, rot));
            e.rotation = e.rotation.max(rel_err(rotated, base));

            let split_seed = case as u64;
            let r0 = relative_fd(&set(&x, "real"), &set(&y, "gen"), split_seed).unwrap().value;
            let r1 = relative_fd(
                &set(&map_rows(&x, scale), "real"),
                &set(&map_rows(&y, scale), "gen"),
                split_seed,
            )
            .unwrap()
            .value;
            e.rfd_scaling = e.rfd_scaling.max(rel_err(r1, r0));
        }
        e
    }
}
