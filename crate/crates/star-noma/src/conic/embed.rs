//! Hermitian / real-symmetric embedding and triangle packing helpers.
//!
//! A Hermitian matrix `H = X + iY` embeds into the real symmetric matrix
//! `E(H) = [[X, -Y], [Y, X]]` of twice the order; `H` is PSD exactly when
//! `E(H)` is, and every eigenvalue of `H` appears twice in `E(H)`. The
//! embedding is what the problem-dump format uses so that dumps can be
//! fed to real-cone solvers for cross-checking.

use crate::{C64, CMat};
use nalgebra::DMatrix;

/// `H -> [[Re H, -Im H], [Im H, Re H]]`.
pub fn embed_hermitian(h: &CMat) -> DMatrix<f64> {
    let n = h.nrows();
    assert_eq!(h.ncols(), n, "embedding needs a square matrix");
    let mut e = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let v = h[(i, j)];
            e[(i, j)] = v.re;
            e[(n + i, n + j)] = v.re;
            e[(i, n + j)] = -v.im;
            e[(n + i, j)] = v.im;
        }
    }
    e
}

/// Inverse of [`embed_hermitian`]. Averages the redundant copies so the
/// round trip is exact for embedded inputs and well-behaved otherwise.
pub fn unembed_hermitian(e: &DMatrix<f64>) -> CMat {
    let two_n = e.nrows();
    assert_eq!(e.ncols(), two_n);
    assert_eq!(two_n % 2, 0, "embedded matrix has even order");
    let n = two_n / 2;
    CMat::from_fn(n, n, |i, j| {
        let re = 0.5 * (e[(i, j)] + e[(n + i, n + j)]);
        let im = 0.5 * (e[(n + i, j)] - e[(i, n + j)]);
        C64::new(re, im)
    })
}

/// Pack the upper triangle of a real symmetric matrix column-major with
/// off-diagonals scaled by sqrt(2), so Euclidean inner products of packed
/// vectors match trace inner products of the matrices.
pub fn svec(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    let s2 = std::f64::consts::SQRT_2;
    for j in 0..n {
        for i in 0..=j {
            out.push(if i == j { m[(i, j)] } else { m[(i, j)] * s2 });
        }
    }
    out
}

/// Inverse of [`svec`].
pub fn unsvec(v: &[f64], n: usize) -> DMatrix<f64> {
    assert_eq!(v.len(), n * (n + 1) / 2);
    let mut m = DMatrix::<f64>::zeros(n, n);
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut idx = 0;
    for j in 0..n {
        for i in 0..=j {
            if i == j {
                m[(i, j)] = v[idx];
            } else {
                m[(i, j)] = v[idx] * s2;
                m[(j, i)] = v[idx] * s2;
            }
            idx += 1;
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_hermitian(n: usize, seed: u64) -> CMat {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        (&a + a.adjoint()) * C64::from(0.5)
    }

    proptest! {
        #[test]
        fn round_trip_and_psd_preserved(seed in 0u64..10_000, n in 1usize..7) {
            let h = random_hermitian(n, seed);
            let e = embed_hermitian(&h);
            let back = unembed_hermitian(&e);
            prop_assert!((&back - &h).norm() <= 1e-12 * h.norm().max(1.0));

            // symmetric embedding, doubled spectrum
            prop_assert!((&e - e.transpose()).norm() < 1e-14);
            let eig_h = h.clone().symmetric_eigen().eigenvalues;
            let eig_e = e.clone().symmetric_eigen().eigenvalues;
            let mut vh: Vec<f64> = eig_h.iter().flat_map(|&v| [v, v]).collect();
            let mut ve: Vec<f64> = eig_e.iter().cloned().collect();
            vh.sort_by(f64::total_cmp);
            ve.sort_by(f64::total_cmp);
            for (a, b) in vh.iter().zip(&ve) {
                prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
            }
        }

        #[test]
        fn svec_inner_product_matches_trace(seed in 0u64..10_000, n in 1usize..7) {
            let a = embed_hermitian(&random_hermitian(n, seed));
            let b = embed_hermitian(&random_hermitian(n, seed ^ 0xffff));
            let va = svec(&a);
            let vb = svec(&b);
            let dot: f64 = va.iter().zip(&vb).map(|(x, y)| x * y).sum();
            let tr = (&a * &b).trace();
            prop_assert!((dot - tr).abs() <= 1e-10 * (1.0 + tr.abs()));
            let back = unsvec(&va, 2 * n);
            prop_assert!((&back - &a).norm() < 1e-12 * (1.0 + a.norm()));
        }
    }
}
