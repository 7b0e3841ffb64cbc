//! Noise scaling by identity folding.

use rand::Rng;
use rayon::prelude::*;

use super::PointRecord;
use crate::circuit::{Circuit, NoiseModel};
use crate::error::{invalid, Result};
use crate::fidelity::{estimate_zero_fidelity, Estimation, IdealReference};
use crate::rng::stream;

/// The target followed by `m` copies alternating adjoint and forward, so the
/// gate count is `(1 + m)·|target|`.
pub fn fold_circuit(target: &Circuit, m: usize) -> Circuit {
    let adjoint = target.adjoint();
    let mut out = target.clone();
    for k in 1..=m {
        let copy = if k % 2 == 1 { &adjoint } else { target };
        out.extend(copy).expect("same register");
    }
    out
}

/// Zero-fidelity of the noisy fold against the noiseless fold, `runs` times
/// per fold count. Run `r` at fold count `m` uses stream `("fold", m, r)`.
pub fn folding_experiment<R: Rng + ?Sized>(
    target: &Circuit,
    m_grid: &[usize],
    noise: &NoiseModel,
    estimation: Estimation,
    runs: usize,
    rng: &mut R,
) -> Result<Vec<PointRecord>> {
    if m_grid.is_empty() {
        return invalid("m_grid must not be empty");
    }
    if runs == 0 {
        return invalid("at least one run per fold count is required");
    }
    noise.validate()?;
    let master = rng.next_u64();
    let mut grid = m_grid.to_vec();
    grid.sort_unstable();
    grid.dedup();
    let tasks: Vec<(usize, usize)> = grid.iter().flat_map(|&m| (0..runs).map(move |r| (m, r))).collect();
    let values: Vec<f64> = tasks
        .par_iter()
        .map(|&(m, r)| {
            let folded = fold_circuit(target, m);
            let seed = rand::RngCore::next_u64(&mut stream(master, "fold", &[m as u64, r as u64]));
            let f = estimate_zero_fidelity(IdealReference::Circuit(&folded), &folded, noise, estimation, seed)?;
            Ok(f.normalized)
        })
        .collect::<Result<_>>()?;
    Ok(grid.iter().zip(values.chunks(runs)).map(|(&m, v)| PointRecord::from_values(m, v.to_vec())).collect())
}
