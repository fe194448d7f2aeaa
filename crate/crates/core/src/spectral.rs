//! Dense symmetric eigensolver and the eigenpairs consumed by selection.

use crate::graph::Bipartition;
use crate::{Error, Matrix, Result, Vector};

const MAX_SWEEPS: usize = 100;

/// Eigenvalue with a unit-norm eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vector,
    /// False when a neighboring eigenvalue lies within the gap tolerance.
    pub simple: bool,
}

/// Numerical thresholds shared by spectral and selection code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues closer than `gap_rel * ||M||_inf` count as repeated.
    pub gap_rel: f64,
    /// Entries below `zero_rel * ||v||_inf` count as zero.
    pub zero_rel: f64,
    /// Minimum entry of a sign-normalized principal vector.
    pub pos: f64,
    /// Ratios within `tie` of 1 are treated as ties and dropped.
    pub tie: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            gap_rel: 1e-8,
            zero_rel: 1e-8,
            pos: 1e-10,
            tie: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn gap(&self, m: &Matrix) -> f64 {
        self.gap_rel * inf_norm(m)
    }

    pub fn zero(&self, v: &Vector) -> f64 {
        self.zero_rel * v.amax()
    }
}

/// Maximum absolute row sum.
pub fn inf_norm(m: &Matrix) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Full eigendecomposition: ascending values, eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

pub fn check_symmetric(m: &Matrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asym = (m - m.transpose()).amax();
    if asym > 1e-10 * inf_norm(m).max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Cyclic Jacobi rotations until the off-diagonal mass vanishes.
pub fn symmetric_eigen(m: &Matrix) -> Result<Decomposition> {
    check_symmetric(m)?;
    let n = m.nrows();
    let mut a = (m + m.transpose()) * 0.5;
    let mut v = Matrix::identity(n, n);
    let scale = a.norm().max(f64::MIN_POSITIVE);
    let mut converged = n < 2;
    for _ in 0..MAX_SWEEPS {
        let off = off_diagonal_norm(&a);
        if off <= 1e-15 * scale {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let (app, aqq) = (a[(p, p)], a[(q, q)]);
                if apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = 0.0;
                    a[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        if off > 1e-12 * scale {
            return Err(Error::NoConvergence(off));
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[(x, x)].total_cmp(&a[(y, y)]));
    let values = order.iter().map(|&k| a[(k, k)]).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Decomposition { values, vectors })
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                sum += a[(p, q)] * a[(p, q)];
            }
        }
    }
    sum.sqrt()
}

/// The `k` smallest eigenpairs in ascending order.
pub fn smallest_eigenpairs(m: &Matrix, k: usize, tol: &Tolerances) -> Result<Vec<EigenPair>> {
    let n = m.nrows();
    if k > n {
        return Err(Error::TooManyEigenpairs { requested: k, n });
    }
    let dec = symmetric_eigen(m)?;
    let gap = tol.gap(m).max(f64::EPSILON);
    Ok((0..k)
        .map(|idx| {
            let value = dec.values[idx];
            let below = idx > 0 && value - dec.values[idx - 1] < gap;
            let above = idx + 1 < n && dec.values[idx + 1] - value < gap;
            EigenPair {
                value,
                vector: normalize_sign(dec.vectors.column(idx).into_owned()),
                simple: !(below || above),
            }
        })
        .collect())
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub fn normalize_sign(mut v: Vector) -> Vector {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = k;
        }
    }
    if v.len() > 0 && v[best] < 0.0 {
        v.neg_mut();
    }
    v
}

/// `(lambda_1, v_1)` of a perturbed Laplacian with `v_1 > 0` entrywise.
pub fn principal_pair_perturbed(lb: &Matrix, tol: &Tolerances) -> Result<EigenPair> {
    let pair = lowest_simple_positive(lb, tol)?;
    let mut v = pair.vector;
    if v.sum() < 0.0 {
        v.neg_mut();
    }
    if let Some((k, &x)) = v.iter().enumerate().find(|(_, &x)| x <= tol.pos) {
        return Err(Error::MixedSign {
            node: k + 1,
            value: x,
        });
    }
    Ok(EigenPair { vector: v, ..pair })
}

/// `(lambda_1, v_1)` of a signed perturbed Laplacian, oriented so that
/// `sigma_i [v_1]_i > 0` for the gauge signs of `partition`.
pub fn principal_pair_signed(
    lbs: &Matrix,
    partition: &Bipartition,
    tol: &Tolerances,
) -> Result<EigenPair> {
    let pair = lowest_simple_positive(lbs, tol)?;
    let mut v = pair.vector;
    let oriented: f64 = v
        .iter()
        .enumerate()
        .map(|(k, x)| partition.sigma(k + 1) * x)
        .sum();
    if oriented < 0.0 {
        v.neg_mut();
    }
    for (k, &x) in v.iter().enumerate() {
        if partition.sigma(k + 1) * x <= tol.pos {
            return Err(Error::MixedSign {
                node: k + 1,
                value: x,
            });
        }
    }
    Ok(EigenPair { vector: v, ..pair })
}

fn lowest_simple_positive(m: &Matrix, tol: &Tolerances) -> Result<EigenPair> {
    let pair = smallest_eigenpairs(m, 1.min(m.nrows()), tol)?
        .pop()
        .ok_or_else(|| Error::Dimension("empty matrix".into()))?;
    if pair.value < tol.gap(m).max(f64::EPSILON) {
        return Err(Error::ZeroEigenvalue(pair.value));
    }
    if !pair.simple {
        return Err(Error::RepeatedEigenvalue(pair.value));
    }
    Ok(pair)
}

/// `(lambda_2, v_2)` of a Laplacian. `simple` is false when `lambda_2`
/// is repeated, in which case `v_2` is not unique.
pub fn fiedler_pair(l: &Matrix, tol: &Tolerances) -> Result<EigenPair> {
    if l.nrows() < 2 {
        return Err(Error::TooManyEigenpairs {
            requested: 2,
            n: l.nrows(),
        });
    }
    let pair = smallest_eigenpairs(l, 2, tol)?
        .pop()
        .expect("two pairs requested");
    if pair.value < tol.gap(l).max(f64::EPSILON) {
        return Err(Error::ZeroEigenvalue(pair.value));
    }
    Ok(pair)
}

/// `[v]_i / [v]_j` with signed infinity for a zero denominator and 1 for 0/0.
/// Entries within the zero tolerance count as exactly zero.
pub fn entry_ratio(v: &Vector, i: usize, j: usize, tol: &Tolerances) -> f64 {
    let eps = tol.zero(v);
    let (num, den) = (v[i - 1], v[j - 1]);
    if num.abs() <= eps && den.abs() > eps {
        0.0
    } else if den.abs() <= eps {
        if num.abs() <= eps {
            1.0
        } else {
            f64::INFINITY.copysign(num)
        }
    } else {
        num / den
    }
}
