//! Central-finite-difference gradient oracle.
//!
//! Used by the test suites and by the `gradcheck` command to verify the
//! hand-derived backward passes against an implementation-independent
//! estimate.

use crate::error::{Error, Result};
use crate::numerics::param_store::ParamStore;

/// Estimates `df/dw` for every parameter component by central differences:
/// `(f(w + eps) - f(w - eps)) / (2 eps)`.
///
/// Returns one gradient vector per store entry, in entry order. The store is
/// restored to its original values before returning.
pub fn numeric_gradient<F>(mut f: F, params: &mut ParamStore, eps: f64) -> Result<Vec<Vec<f64>>>
where
    F: FnMut(&ParamStore) -> f64,
{
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::config(format!("eps: must be positive, got {eps}")));
    }
    let mut grads = Vec::with_capacity(params.len());
    for e in 0..params.len() {
        let id = params.id_at(e);
        let n = params.tensor(id).data().len();
        let mut g = Vec::with_capacity(n);
        for c in 0..n {
            let original = params.tensor(id).data()[c];
            params.tensor_mut(id).data_mut()[c] = original + eps;
            let plus = f(params);
            params.tensor_mut(id).data_mut()[c] = original - eps;
            let minus = f(params);
            params.tensor_mut(id).data_mut()[c] = original;
            g.push((plus - minus) / (2.0 * eps));
        }
        grads.push(g);
    }
    Ok(grads)
}

/// Normalized gradient-check error: passes when `<= rtol`.
///
/// Large components are compared relatively; components small enough that
/// relative error loses meaning are compared absolutely against `atol`.
/// The absolute floor is not a convenience: a central difference in f64
/// carries an irreducible noise of roughly `ulp(f) / eps` (~1e-12 here),
/// so components below ~1e-5 can never meet a purely relative 1e-6 bound
/// no matter how correct the analytic gradient is.
pub fn gradcheck_error(analytic: f64, numeric: f64, rtol: f64, atol: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(atol / rtol);
    (analytic - numeric).abs() / denom
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::tensor::Tensor;

    #[test]
    fn quadratic_gradient() {
        let mut ps = ParamStore::new();
        ps.push("w", Tensor::from_vec(1, 1, vec![3.0]).unwrap())
            .unwrap();
        let g = numeric_gradient(|p| p.entries()[0].tensor().data()[0].powi(2), &mut ps, 1e-5)
            .unwrap();
        assert!((g[0][0] - 6.0).abs() < 1e-8, "got {}", g[0][0]);
        // Store restored.
        assert_eq!(ps.entries()[0].tensor().data()[0], 3.0);
    }

    #[test]
    fn constant_function_has_zero_gradient() {
        let mut ps = ParamStore::new();
        ps.push("w", Tensor::from_vec(2, 2, vec![1.0, -2.0, 0.5, 4.0]).unwrap())
            .unwrap();
        let g = numeric_gradient(|_| 7.25, &mut ps, 1e-5).unwrap();
        assert!(g[0].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn sum_function_gradient_is_all_ones() {
        let mut ps = ParamStore::new();
        ps.push("a", Tensor::from_vec(1, 3, vec![0.3, -1.2, 2.0]).unwrap())
            .unwrap();
        ps.push("b", Tensor::from_vec(2, 1, vec![5.0, -0.1]).unwrap())
            .unwrap();
        let g = numeric_gradient(
            |p| {
                p.entries()
                    .iter()
                    .flat_map(|e| e.tensor().data())
                    .sum::<f64>()
            },
            &mut ps,
            1e-5,
        )
        .unwrap();
        for entry in &g {
            for &v in entry {
                assert!((v - 1.0).abs() < 1e-9, "got {v}");
            }
        }
    }

    #[test]
    fn quadratic_form_matches_analytic() {
        // f(w) = w^T A w, grad = (A + A^T) w.
        let a = Tensor::from_vec(3, 3, vec![2.0, 1.0, 0.0, -1.0, 3.0, 0.5, 0.2, 0.0, 1.5])
            .unwrap();
        let w = vec![0.7, -1.1, 0.4];
        let mut ps = ParamStore::new();
        ps.push("w", Tensor::from_vec(3, 1, w.clone()).unwrap())
            .unwrap();
        let f = |p: &ParamStore| {
            let w = p.entries()[0].tensor().data();
            let mut acc = 0.0;
            for i in 0..3 {
                for j in 0..3 {
                    acc += w[i] * a.get(i, j) * w[j];
                }
            }
            acc
        };
        let numeric = numeric_gradient(f, &mut ps, 1e-5).unwrap();
        for i in 0..3 {
            let mut analytic = 0.0;
            for j in 0..3 {
                analytic += (a.get(i, j) + a.get(j, i)) * w[j];
            }
            let rel = (numeric[0][i] - analytic).abs() / analytic.abs().max(1e-12);
            assert!(rel < 1e-6, "component {i}: {} vs {analytic}", numeric[0][i]);
        }
    }

    #[test]
    fn rejects_non_positive_eps() {
        let mut ps = ParamStore::new();
        ps.push("w", Tensor::zeros(1, 1)).unwrap();
        assert!(numeric_gradient(|_| 0.0, &mut ps, 0.0).is_err());
        assert!(numeric_gradient(|_| 0.0, &mut ps, -1.0).is_err());
    }
}
