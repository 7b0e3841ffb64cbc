//! Fitting `F(m) = A₀ pᵐ + B₀` by separable least squares.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const GRID_POINTS: usize = 1000;
const P_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a0: f64,
    pub p: f64,
    pub b0: f64,
    pub rms_residual: f64,
    /// `p + (1 − p)/2ⁿ`.
    pub f_avg: f64,
    /// `1 − f_avg`.
    pub epc: f64,
    pub n_qubits: usize,
}

/// Least-squares `(A₀, B₀)` for fixed `p`, and the residual sum of squares.
/// Falls back to the minimum-norm solution when `pᵐ` is constant.
fn linear_part(points: &[(f64, f64)], p: f64) -> (f64, f64, f64) {
    let mut ata = Matrix2::zeros();
    let mut atb = Vector2::zeros();
    for &(m, y) in points {
        let x = p.powf(m);
        ata += Matrix2::new(x * x, x, x, 1.0);
        atb += Vector2::new(x * y, y);
    }
    let sol = match ata.try_inverse() {
        Some(inv) if ata.determinant().abs() > 1e-14 * ata.norm_squared() => inv * atb,
        _ => ata.pseudo_inverse(1e-14).map(|pinv| pinv * atb).unwrap_or_else(|_| Vector2::zeros()),
    };
    let sse = points.iter().map(|&(m, y)| (sol[0] * p.powf(m) + sol[1] - y).powi(2)).sum();
    (sol[0], sol[1], sse)
}

/// Fits `A₀ pᵐ + B₀` with `p ∈ [0, 1]`: grid search, then golden-section
/// refinement around the best grid point.
pub fn fit_decay(points: &[(f64, f64)], n_qubits: usize) -> Result<DecayFit> {
    if points.iter().any(|(m, y)| !m.is_finite() || !y.is_finite() || *m < 0.0) {
        return invalid("decay points must be finite with m ≥ 0");
    }
    let mut ms: Vec<f64> = points.iter().map(|p| p.0).collect();
    ms.sort_by(f64::total_cmp);
    ms.dedup();
    if ms.len() < 3 {
        return Err(Error::FitDegenerate(format!("need at least 3 distinct m values, got {}", ms.len())));
    }
    let lo = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 1e-14 * hi.abs().max(1.0) {
        return Err(Error::FitDegenerate("all values are equal, so p is unidentifiable".into()));
    }

    let sse = |p: f64| linear_part(points, p).2;
    let best = (0..=GRID_POINTS)
        .map(|k| k as f64 / GRID_POINTS as f64)
        .min_by(|a, b| sse(*a).total_cmp(&sse(*b)))
        .expect("non-empty grid");
    let step = 1.0 / GRID_POINTS as f64;
    let (mut a, mut b) = ((best - step).max(0.0), (best + step).min(1.0));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (sse(c), sse(d));
    while b - a > P_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sse(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sse(d);
        }
    }
    let mut p = 0.5 * (a + b);
    for cand in [best, a, b] {
        if sse(cand) < sse(p) {
            p = cand;
        }
    }
    let (a0, b0, err) = linear_part(points, p);
    let f_avg = p + (1.0 - p) / (1u64 << n_qubits) as f64;
    Ok(DecayFit { a0, p, b0, rms_residual: (err / points.len() as f64).sqrt(), f_avg, epc: 1.0 - f_avg, n_qubits })
}

/// `p_gate = p_int / p_ref`, reported as `p_gate + (1 − p_gate)/2ⁿ`.
pub fn interleaved_gate_fidelity(fit_ref: &DecayFit, fit_int: &DecayFit, n_qubits: usize) -> Result<f64> {
    if fit_ref.p <= 0.0 {
        return invalid("reference decay rate is zero");
    }
    if fit_int.p <= 0.0 {
        return invalid("interleaved decay rate is zero");
    }
    let p_gate = fit_int.p / fit_ref.p;
    Ok(p_gate + (1.0 - p_gate) / (1u64 << n_qubits) as f64)
}
