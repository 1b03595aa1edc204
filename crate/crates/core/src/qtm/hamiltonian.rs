//! Exact thermodynamics of the small periodic chain
//! `H = J Σ_j (P^g + (2/3) E)_{j,j+1}`.
//!
//! `H` conserves the total U(1) charge, so the `3^L` space splits into
//! charge blocks; each block is diagonalised independently (the largest
//! block at `L = 8` has dimension 1107, versus 6561 for the full space).

use super::{e_matrix, p_graded, QtmError, CHARGE};
use crate::C64;
use ndarray::Array2;
use ndarray_linalg::EigVals;
use std::collections::HashMap;

/// Local bond operator `P^g + (2/3) E`, real 9x9.
fn local_bond() -> [[f64; 9]; 9] {
    let pg = p_graded();
    let e = e_matrix();
    let mut h = [[0.0; 9]; 9];
    for (r, row) in h.iter_mut().enumerate() {
        for (c, val) in row.iter_mut().enumerate() {
            *val = pg[(r, c)].re + 2.0 / 3.0 * e[(r, c)].re;
        }
    }
    h
}

/// Dense Hamiltonian on the full `3^L` space (small `L` only). Used as an
/// oracle against the block construction.
pub fn hamiltonian_dense(l: usize, j: f64) -> Array2<f64> {
    assert!(l >= 2 && l <= 8, "chain length out of range");
    let dim = 3usize.pow(l as u32);
    let bond = local_bond();
    let mut h = Array2::zeros((dim, dim));
    for col in 0..dim {
        for site in 0..l {
            let site2 = (site + 1) % l;
            let s1 = 3usize.pow(site as u32);
            let s2 = 3usize.pow(site2 as u32);
            let d1 = (col / s1) % 3;
            let d2 = (col / s2) % 3;
            for a in 0..3 {
                for b in 0..3 {
                    let w = bond[3 * a + b][3 * d1 + d2];
                    if w == 0.0 {
                        continue;
                    }
                    let row = (col as i64
                        + (a as i64 - d1 as i64) * s1 as i64
                        + (b as i64 - d2 as i64) * s2 as i64) as usize;
                    h[(row, col)] += j * w;
                }
            }
        }
    }
    h
}

/// All eigenvalues of `H`, computed block-by-block in the charge sectors.
pub fn hamiltonian_spectrum(l: usize, j: f64) -> Result<Vec<C64>, QtmError> {
    assert!(l >= 2 && l <= 8, "chain length out of range");
    let dim = 3usize.pow(l as u32);
    let bond = local_bond();
    // group basis states by total charge
    let mut blocks: HashMap<i32, Vec<usize>> = HashMap::new();
    for idx in 0..dim {
        let mut q = 0;
        let mut rest = idx;
        for _ in 0..l {
            q += CHARGE[rest % 3];
            rest /= 3;
        }
        blocks.entry(q).or_default().push(idx);
    }
    let mut spectrum = Vec::with_capacity(dim);
    let mut charges: Vec<i32> = blocks.keys().copied().collect();
    charges.sort_unstable();
    for q in charges {
        let states = &blocks[&q];
        let pos: HashMap<usize, usize> =
            states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let bdim = states.len();
        let mut hb = Array2::<f64>::zeros((bdim, bdim));
        for (ci, &col) in states.iter().enumerate() {
            for site in 0..l {
                let site2 = (site + 1) % l;
                let s1 = 3usize.pow(site as u32);
                let s2 = 3usize.pow(site2 as u32);
                let d1 = (col / s1) % 3;
                let d2 = (col / s2) % 3;
                for a in 0..3 {
                    for b in 0..3 {
                        let w = bond[3 * a + b][3 * d1 + d2];
                        if w == 0.0 {
                            continue;
                        }
                        let row =
                            (col as i64 + (a as i64 - d1 as i64) * s1 as i64
                                + (b as i64 - d2 as i64) * s2 as i64) as usize;
                        let ri = pos[&row];
                        hb[(ri, ci)] += j * w;
                    }
                }
            }
        }
        let vals = hb
            .eigvals()
            .map_err(|e| QtmError::Eigen(format!("{e}")))?;
        spectrum.extend(vals.iter().copied());
    }
    Ok(spectrum)
}

/// `f_L = -(1/(L beta)) ln Tr exp(-beta H)` for the periodic chain.
pub fn hamiltonian_free_energy(l: usize, beta: f64, j: f64) -> Result<f64, QtmError> {
    let spectrum = hamiltonian_spectrum(l, j)?;
    free_energy_from_spectrum(l, beta, &spectrum)
}

/// Fold a precomputed spectrum into `f_L`; lets callers reuse one
/// diagonalisation across temperatures.
pub fn free_energy_from_spectrum(l: usize, beta: f64, spectrum: &[C64]) -> Result<f64, QtmError> {
    // subtract the ground-state shift before exponentiating
    let e0 = spectrum.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let mut z = C64::new(0.0, 0.0);
    for &e in spectrum {
        z += (-(e - e0) * beta).exp();
    }
    let rel_im = z.im.abs() / z.re.abs();
    if rel_im > 1e-9 {
        return Err(QtmError::NonRealTrace(rel_im));
    }
    Ok(-(z.re.ln() - beta * e0) / (l as f64 * beta))
}
