//! Brute-force oracle: the 9x9 R-matrices, the dense column-to-column QTM of
//! dimension `3^N`, its top eigenvalues, and exact small-chain free energy.

pub mod hamiltonian;

use crate::params::ModelParams;
use crate::C64;
use ndarray::Array2;
use ndarray_linalg::Eig;
use thiserror::Error;

pub use hamiltonian::{hamiltonian_dense, hamiltonian_free_energy, hamiltonian_spectrum};

/// Largest `N` for which the dense `3^N x 3^N` QTM is materialised.
pub const DENSE_LIMIT: usize = 8;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error)]
pub enum QtmError {
    #[error("R-matrix pole at v = 3/2")]
    RMatrixPole,
    #[error("Trotter number {0} exceeds the dense limit {DENSE_LIMIT}")]
    SizeLimit(usize),
    #[error("eigensolver failure: {0}")]
    Eigen(String),
    #[error("requested {count} eigenvalues of a dimension-{dim} operator")]
    CountTooLarge { count: usize, dim: usize },
    #[error("trace of exp(-beta H) has relative imaginary part {0:.3e}")]
    NonRealTrace(f64),
    #[error("Arnoldi failed to converge: residual {0:.3e}")]
    ArnoldiStall(f64),
}

/// Grading of the three local states `(1, 0, 1̄)`.
pub const GRADING: [u32; 3] = [1, 0, 1];
/// U(1) charge of the three local states; conserved by the R-matrix and used
/// to block-diagonalise the QTM and the Hamiltonian.
pub const CHARGE: [i32; 3] = [1, 0, -1];

/// Row-major 9x9 with row `(a,b) = 3a+b` (out) and column `(c,d)` (in).
fn mat9(f: impl Fn(usize, usize, usize, usize) -> C64) -> Array2<C64> {
    Array2::from_shape_fn((9, 9), |(r, c)| f(r / 3, r % 3, c / 3, c % 3))
}

/// Plain permutation `P`.
pub fn p_plain() -> Array2<C64> {
    mat9(|a, b, c, d| {
        if a == d && b == c {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Graded permutation `P^g` with elements `(-1)^{p(a)p(b)} δ_{a,d} δ_{b,c}`.
pub fn p_graded() -> Array2<C64> {
    mat9(|a, b, c, d| {
        if a == d && b == c {
            let s = if GRADING[a] * GRADING[b] == 1 { -1.0 } else { 1.0 };
            C64::new(s, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

const ALPHA: [[f64; 3]; 3] = [[0.0, 0.0, 1.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0]];
// alpha is orthogonal, so its inverse is its transpose
const ALPHA_INV: [[f64; 3]; 3] = [[0.0, 0.0, -1.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];

/// Rank-one matrix `E` with elements `α_{ab} (α^{-1})_{cd}`.
pub fn e_matrix() -> Array2<C64> {
    mat9(|a, b, c, d| C64::new(ALPHA[a][b] * ALPHA_INV[c][d], 0.0))
}

/// `Ř(v) = I + v P^g - v/(v - 3/2) E`.
pub fn r_check_eval(v: C64) -> Result<Array2<C64>, QtmError> {
    let den = v - C64::new(1.5, 0.0);
    if den.norm() == 0.0 {
        return Err(QtmError::RMatrixPole);
    }
    let mut m = Array2::eye(9);
    m = m + p_graded() * v;
    m = m - e_matrix() * (v / den);
    Ok(m)
}

/// `R(v) = P Ř(v)`.
pub fn r_eval(v: C64) -> Result<Array2<C64>, QtmError> {
    Ok(p_plain().dot(&r_check_eval(v)?))
}

/// Vertex weights of one Trotter column, as 3x3 matrices in the quantum
/// space indexed by the Trotter-space pair `(a_out, a_in)`.
///
/// Even Trotter sites carry `R(u - iv)`, odd sites carry the rotated matrix
/// `R̃(u + iv)` with elements `R̃[(a',j'),(a,j)] = R[(j,a'),(j',a)]`.
pub(crate) struct ColumnWeights {
    /// `even[a_out][a_in][(j_out, j_in)]`
    pub even: [[[C64; 9]; 3]; 3],
    pub odd: [[[C64; 9]; 3]; 3],
}

pub(crate) fn column_weights(params: &ModelParams, v: C64) -> Result<ColumnWeights, QtmError> {
    let u = C64::new(params.u(), 0.0);
    let r_even = r_eval(u - I * v)?;
    let r_odd = r_eval(u + I * v)?;
    let mut even = [[[C64::new(0.0, 0.0); 9]; 3]; 3];
    let mut odd = [[[C64::new(0.0, 0.0); 9]; 3]; 3];
    for a_out in 0..3 {
        for a_in in 0..3 {
            for j_out in 0..3 {
                for j_in in 0..3 {
                    even[a_out][a_in][3 * j_out + j_in] =
                        r_even[(3 * a_out + j_out, 3 * a_in + j_in)];
                    odd[a_out][a_in][3 * j_out + j_in] =
                        r_odd[(3 * j_in + a_out, 3 * j_out + a_in)];
                }
            }
        }
    }
    Ok(ColumnWeights { even, odd })
}

/// Row-to-row transfer matrix `T(v) = Tr_a [R_{aL}(v) ... R_{a1}(v)]` on the
/// `3^L` quantum space; `rotated` builds the companion matrix from the 90°
/// rotated weights instead. At `v = 0` the two are the right and left shift
/// operators, so their product is the identity.
pub fn row_transfer(l: usize, v: C64, rotated: bool) -> Result<Array2<C64>, QtmError> {
    assert!((2..=8).contains(&l), "chain length out of range");
    let r = r_eval(v)?;
    // weights in the auxiliary space indexed by the quantum pair (out, in)
    let mut w = [[[C64::new(0.0, 0.0); 9]; 3]; 3];
    for q_out in 0..3 {
        for q_in in 0..3 {
            for a_out in 0..3 {
                for a_in in 0..3 {
                    w[q_out][q_in][3 * a_out + a_in] = if rotated {
                        // R~_{aj} element = R[(j_in, a_out), (j_out, a_in)]
                        r[(3 * q_in + a_out, 3 * q_out + a_in)]
                    } else {
                        r[(3 * a_out + q_out, 3 * a_in + q_in)]
                    };
                }
            }
        }
    }
    let dim = 3usize.pow(l as u32);
    let mut m = Array2::from_elem((dim, dim), C64::new(0.0, 0.0));
    for row in 0..dim {
        let rd = digits(row, l);
        for col in 0..dim {
            let cd = digits(col, l);
            let mut acc = [
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
            ];
            for site in 0..l {
                let wm = &w[rd[site]][cd[site]];
                let mut next = [C64::new(0.0, 0.0); 9];
                for (r_i, next_row) in next.chunks_exact_mut(3).enumerate() {
                    for c_i in 0..3 {
                        let mut s = C64::new(0.0, 0.0);
                        for k in 0..3 {
                            s += wm[3 * r_i + k] * acc[3 * k + c_i];
                        }
                        next_row[c_i] = s;
                    }
                }
                acc = next;
            }
            m[(row, col)] = acc[0] + acc[4] + acc[8];
        }
    }
    Ok(m)
}

/// Dense column-to-column QTM acting on the `3^N` Trotter space.
#[derive(Debug, Clone)]
pub struct QtmOperator {
    matrix: Array2<C64>,
    n: usize,
    u: f64,
    v: C64,
}

impl QtmOperator {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trotter(&self) -> usize {
        self.n
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn spectral_point(&self) -> C64 {
        self.v
    }
}

fn digits(mut idx: usize, n: usize) -> Vec<usize> {
    let mut d = vec![0; n];
    for slot in d.iter_mut().take(n) {
        *slot = idx % 3;
        idx /= 3;
    }
    d
}

/// The QTM conserves the staggered charge `Σ (-1)^i q(d_i)`: the rotated
/// matrix on odd sites carries the quantum-space charge with the opposite
/// sign, so the uniform charge telescopes with alternating signs around the
/// trace loop.
fn staggered_charge(digits: &[usize]) -> i32 {
    digits
        .iter()
        .enumerate()
        .map(|(i, &d)| if i % 2 == 0 { CHARGE[d] } else { -CHARGE[d] })
        .sum()
}

/// Build the dense QTM: entry `(row, col)` is the trace over the quantum
/// space of the ordered product of the `N` per-site 3x3 weights. Entries
/// whose Trotter charges differ vanish and are skipped.
pub fn build_qtm(params: &ModelParams, v: C64) -> Result<QtmOperator, QtmError> {
    let n = params.trotter();
    if n > DENSE_LIMIT {
        return Err(QtmError::SizeLimit(n));
    }
    let w = column_weights(params, v)?;
    let dim = 3usize.pow(n as u32);
    let row_digits: Vec<Vec<usize>> = (0..dim).map(|i| digits(i, n)).collect();
    let charges: Vec<i32> = row_digits.iter().map(|d| staggered_charge(d)).collect();
    let mut m = Array2::from_elem((dim, dim), C64::new(0.0, 0.0));
    for row in 0..dim {
        let rd = &row_digits[row];
        for col in 0..dim {
            if charges[row] != charges[col] {
                continue;
            }
            let cd = &row_digits[col];
            // product M_N ... M_1 acting on the quantum space; site 1 is the
            // lowest digit and is an odd site
            let mut acc = [
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(1.0, 0.0),
            ];
            for site in 0..n {
                let wm = if site % 2 == 0 {
                    &w.odd[rd[site]][cd[site]]
                } else {
                    &w.even[rd[site]][cd[site]]
                };
                // acc <- wm * acc
                let mut next = [C64::new(0.0, 0.0); 9];
                for (r, next_row) in next.chunks_exact_mut(3).enumerate() {
                    for c in 0..3 {
                        let mut s = C64::new(0.0, 0.0);
                        for k in 0..3 {
                            s += wm[3 * r + k] * acc[3 * k + c];
                        }
                        next_row[c] = s;
                    }
                }
                acc = next;
            }
            m[(row, col)] = acc[0] + acc[4] + acc[8];
        }
    }
    Ok(QtmOperator { matrix: m, n, u: params.u(), v })
}

/// Apply the QTM to a vector without materialising the matrix: the QTM is a
/// matrix product operator of bond dimension 3 in the quantum space.
pub fn qtm_apply(params: &ModelParams, v: C64, x: &[C64]) -> Result<Vec<C64>, QtmError> {
    let n = params.trotter();
    let dim = 3usize.pow(n as u32);
    assert_eq!(x.len(), dim, "input vector length must be 3^N");
    let w = column_weights(params, v)?;
    // running tensor A[j_start, j_cur, idx], flattened as (3*j_start + j_cur)*dim + idx
    let mut a = vec![C64::new(0.0, 0.0); 9 * dim];
    for js in 0..3 {
        let base = (3 * js + js) * dim;
        a[base..base + dim].copy_from_slice(x);
    }
    let mut next = vec![C64::new(0.0, 0.0); 9 * dim];
    let mut stride = 1usize;
    for site in 0..n {
        let wm: &[[[C64; 9]; 3]; 3] = if site % 2 == 0 { &w.odd } else { &w.even };
        for slot in next.iter_mut() {
            *slot = C64::new(0.0, 0.0);
        }
        // idx = hi*3*stride + digit*stride + lo, digit = site's trotter index
        let hi_count = dim / (3 * stride);
        for js in 0..3 {
            for j_new in 0..3 {
                for hi in 0..hi_count {
                    for alpha in 0..3 {
                        let out_base = (3 * js + j_new) * dim + hi * 3 * stride + alpha * stride;
                        for j_old in 0..3 {
                            for beta in 0..3 {
                                let coeff = wm[alpha][beta][3 * j_new + j_old];
                                if coeff.norm_sqr() == 0.0 {
                                    continue;
                                }
                                let in_base =
                                    (3 * js + j_old) * dim + hi * 3 * stride + beta * stride;
                                for lo in 0..stride {
                                    next[out_base + lo] += coeff * a[in_base + lo];
                                }
                            }
                        }
                    }
                }
            }
        }
        std::mem::swap(&mut a, &mut next);
        stride *= 3;
    }
    let mut y = vec![C64::new(0.0, 0.0); dim];
    for js in 0..3 {
        let base = (3 * js + js) * dim;
        for (yi, ai) in y.iter_mut().zip(&a[base..base + dim]) {
            *yi += *ai;
        }
    }
    Ok(y)
}

/// Eigenvalues of largest modulus of a dense QTM, sorted descending by
/// modulus. Full dense decomposition up to dimension 1500 (`N <= 6`);
/// larger operators go through Arnoldi on the stored matrix, which resolves
/// the leading part of the spectrum.
pub fn top_eigenvalues(op: &QtmOperator, count: usize) -> Result<Vec<C64>, QtmError> {
    let dim = op.dim();
    if count > dim {
        return Err(QtmError::CountTooLarge { count, dim });
    }
    if dim <= 1500 {
        let (vals, _) = op
            .matrix
            .eig()
            .map_err(|e| QtmError::Eigen(format!("{e}")))?;
        let mut v: Vec<C64> = vals.to_vec();
        v.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        return Ok(v.into_iter().take(count).collect());
    }
    let matvec = |x: &[C64]| -> Vec<C64> {
        let xv = ndarray::ArrayView1::from(x);
        op.matrix.dot(&xv).to_vec()
    };
    arnoldi_top(&matvec, dim, (4 * count + 40).min(dim), count)
}

/// Gap ratio `|λ_2 / λ_1|` from a sorted eigenvalue list.
pub fn gap_ratio(sorted: &[C64]) -> Option<f64> {
    if sorted.len() < 2 {
        return None;
    }
    Some(sorted[1].norm() / sorted[0].norm())
}

/// Top eigenvalues via Arnoldi iteration on the matrix-free QTM apply; works
/// beyond the dense limit. Deterministic start vector.
pub fn top_eigenvalues_iterative(
    params: &ModelParams,
    v: C64,
    count: usize,
    krylov: usize,
) -> Result<Vec<C64>, QtmError> {
    let n = params.trotter();
    let dim = 3usize.pow(n as u32);
    if count > dim {
        return Err(QtmError::CountTooLarge { count, dim });
    }
    let matvec = |x: &[C64]| -> Vec<C64> {
        qtm_apply(params, v, x).expect("R-matrix pole checked at first apply")
    };
    // surface an R-matrix pole early rather than inside the closure
    column_weights(params, v)?;
    arnoldi_top(&matvec, dim, krylov, count)
}

fn arnoldi_top(
    matvec: &dyn Fn(&[C64]) -> Vec<C64>,
    dim: usize,
    krylov: usize,
    count: usize,
) -> Result<Vec<C64>, QtmError> {
    let k = krylov.min(dim).max(count + 2);
    // fixed quasi-random start vector
    let mut v0: Vec<C64> = (0..dim)
        .map(|i| {
            let x = ((i as f64 + 1.0) * 0.754877666246693).fract() - 0.5;
            let y = ((i as f64 + 1.0) * 0.569840290998053).fract() - 0.5;
            C64::new(1.0 + x, y)
        })
        .collect();
    normalize(&mut v0);
    let mut basis: Vec<Vec<C64>> = vec![v0];
    let mut h = Array2::from_elem((k + 1, k), C64::new(0.0, 0.0));
    let mut steps = 0;
    for j in 0..k {
        let mut w = matvec(&basis[j]);
        // modified Gram-Schmidt, twice
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c = dot(b, &w);
                h[(i, j)] += c;
                axpy(&mut w, -c, b);
            }
        }
        let nrm = norm(&w);
        h[(j + 1, j)] = C64::new(nrm, 0.0);
        steps = j + 1;
        if nrm < 1e-13 {
            break; // invariant subspace found
        }
        scale(&mut w, 1.0 / nrm);
        basis.push(w);
    }
    let hk = h.slice(ndarray::s![0..steps, 0..steps]).to_owned();
    let (vals, _) = hk.eig().map_err(|e| QtmError::Eigen(format!("{e}")))?;
    let mut ritz: Vec<C64> = vals.to_vec();
    ritz.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
    ritz.truncate(count);
    Ok(ritz)
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(y: &mut [C64], c: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

fn scale(y: &mut [C64], s: f64) {
    for yi in y.iter_mut() {
        *yi *= s;
    }
}

fn normalize(y: &mut [C64]) {
    let n = norm(y);
    scale(y, 1.0 / n);
}
