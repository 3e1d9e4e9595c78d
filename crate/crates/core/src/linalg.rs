//! Dense symmetric linear algebra.
//!
//! Everything here works on small (p up to a few hundred) dense matrices and
//! is written against `ndarray`. The eigensolver is a cyclic Jacobi sweep,
//! which keeps exact symmetry and gives eigenvectors orthonormal to working
//! precision without any LAPACK dependency.

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{Result, SdrError};

/// Jacobi stops once the off-diagonal Frobenius norm drops below this times `||A||_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Relative eigenvalue threshold below which `inv_sqrt` refuses to invert.
pub const INV_SQRT_THRESHOLD: f64 = 1e-10;
pub const DEFAULT_RANK_TOL: f64 = 1e-10;
/// Relative gap under which two eigenvalues are reported as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Square symmetric matrix. Construction symmetrizes `(A + Aᵀ) / 2`, so
/// `m[[i, j]] == m[[j, i]]` holds bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(Array2<f64>);

impl SymMatrix {
    pub fn new(a: Array2<f64>) -> Result<Self> {
        let (r, c) = a.dim();
        if r != c {
            return Err(SdrError::InvalidMatrix(format!(
                "matrix is {r}x{c}, not square"
            )));
        }
        if r == 0 {
            return Err(SdrError::InvalidMatrix("matrix has dimension 0".into()));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(SdrError::InvalidMatrix(
                "matrix has non-finite entries".into(),
            ));
        }
        Ok(Self::symmetrized(a))
    }

    fn symmetrized(mut a: Array2<f64>) -> Self {
        let n = a.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (a[[i, j]] + a[[j, i]]);
                a[[i, j]] = v;
                a[[j, i]] = v;
            }
        }
        SymMatrix(a)
    }

    pub fn identity(p: usize) -> Self {
        SymMatrix(Array2::eye(p))
    }

    pub fn zeros(p: usize) -> Self {
        SymMatrix(Array2::zeros((p, p)))
    }

    pub fn from_diag(values: &[f64]) -> Result<Self> {
        Self::new(Array2::from_diag(&Array1::from(values.to_vec())))
    }

    /// `B Bᵀ` for any real `p x k` block; symmetric PSD by construction.
    pub fn gram(block: ArrayView2<f64>) -> Self {
        Self::symmetrized(block.dot(&block.t()))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.0)
    }

    /// `S A S` for symmetric `S`.
    pub fn sandwich(&self, s: &SymMatrix) -> SymMatrix {
        Self::symmetrized(s.0.dot(&self.0).dot(&s.0))
    }

    pub fn project(&self, subspace: &Subspace) -> SymMatrix {
        let p = subspace.projector();
        Self::symmetrized(p.dot(&self.0).dot(&p))
    }
}

pub(crate) fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Full spectrum of a symmetric matrix, descending, with matching orthonormal
/// eigenvectors as columns of `vectors`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: Array2<f64>,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `V f(Λ) Vᵀ`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let scaled = &self.vectors * &Array1::from_iter(self.values.iter().map(|&v| f(v)));
        scaled.dot(&self.vectors.t())
    }
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Eigenvalues come back in non-increasing order. Exactly tied eigenvalues
/// keep the order of their Jacobi column. Each eigenvector is signed so that
/// its largest-magnitude entry (first one, on ties) is positive.
pub fn sym_eigen(a: &SymMatrix) -> Result<EigenPairs> {
    let n = a.dim();
    let mut m = a.0.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale = frobenius(&m);
    let tol = JACOBI_TOLERANCE * scale;

    let off_norm = |m: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[[i, j]] * m[[i, j]];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off_norm(&m) <= tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                // A <- Jᵀ A J with J the (p, q) plane rotation.
                for k in 0..n {
                    let akp = m[[k, p]];
                    let akq = m[[k, q]];
                    m[[k, p]] = c * akp - s * akq;
                    m[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[[p, k]];
                    let aqk = m[[q, k]];
                    m[[p, k]] = c * apk - s * aqk;
                    m[[q, k]] = s * apk + c * aqk;
                }
                m[[p, q]] = 0.0;
                m[[q, p]] = 0.0;

                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&m);
        if off > tol {
            return Err(SdrError::NoConvergence {
                sweeps: JACOBI_MAX_SWEEPS,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    // stable: equal eigenvalues keep their column order
    order.sort_by(|&i, &j| {
        m[[j, j]]
            .partial_cmp(&m[[i, i]])
            .expect("finite eigenvalues")
    });

    let values: Vec<f64> = order.iter().map(|&i| m[[i, i]]).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        let mut lead = 0;
        for k in 1..n {
            if col[k].abs() > col[lead].abs() {
                lead = k;
            }
        }
        if col[lead] < 0.0 {
            col.mapv_inplace(|x| -x);
        }
        vectors.column_mut(dst).assign(&col);
    }
    Ok(EigenPairs { values, vectors })
}

/// Orthonormal basis of a subspace of `R^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Array2<f64>,
    /// Set when the basis was cut from a spectrum at a tied eigenvalue, in
    /// which case the particular span chosen is a convention, not data.
    pub boundary_tie: bool,
}

impl Subspace {
    /// Wraps a basis that is already orthonormal (checked to 1e-10).
    pub fn from_orthonormal(basis: Array2<f64>) -> Result<Self> {
        let (p, d) = basis.dim();
        if d == 0 || d > p {
            return Err(SdrError::DimensionError(format!(
                "subspace of dimension {d} in ambient dimension {p}"
            )));
        }
        let gram = basis.t().dot(&basis);
        let dev = max_abs_diff(&gram, &Array2::eye(d));
        if !(dev <= 1e-10) {
            return Err(SdrError::InvalidMatrix(format!(
                "basis columns are not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Subspace {
            basis,
            boundary_tie: false,
        })
    }

    /// Orthonormal basis for the column span of `columns`, dropping columns
    /// that are numerically dependent on earlier ones (including zero columns).
    pub fn span_of(columns: ArrayView2<f64>) -> Result<Self> {
        let (p, k) = columns.dim();
        let scale = columns
            .axis_iter(Axis(1))
            .map(|c| c.dot(&c).sqrt())
            .fold(0.0, f64::max);
        let mut kept: Vec<Array1<f64>> = Vec::new();
        if scale > 0.0 && scale.is_finite() {
            for j in 0..k {
                let mut v = columns.column(j).to_owned();
                // two passes of modified Gram-Schmidt
                for _ in 0..2 {
                    for q in &kept {
                        let r = q.dot(&v);
                        v.scaled_add(-r, q);
                    }
                }
                let norm = v.dot(&v).sqrt();
                if norm > 1e-10 * scale {
                    kept.push(v / norm);
                }
            }
        }
        if kept.is_empty() {
            return Err(SdrError::DimensionError(
                "columns span only the zero vector".into(),
            ));
        }
        let mut basis = Array2::zeros((p, kept.len()));
        for (j, q) in kept.iter().enumerate() {
            basis.column_mut(j).assign(q);
        }
        Ok(Subspace {
            basis,
            boundary_tie: false,
        })
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// `P = B Bᵀ`.
    pub fn projector(&self) -> Array2<f64> {
        self.basis.dot(&self.basis.t())
    }
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Span of the `a` leading eigenvectors of `m`.
pub fn leading_subspace(m: &SymMatrix, a: usize) -> Result<Subspace> {
    let eig = sym_eigen(m)?;
    leading_from_eigen(&eig, a)
}

pub fn leading_from_eigen(eig: &EigenPairs, a: usize) -> Result<Subspace> {
    let n = eig.len();
    if a == 0 || a > n {
        return Err(SdrError::DimensionError(format!(
            "requested {a} leading eigenvectors of a {n}x{n} matrix"
        )));
    }
    let basis = eig.vectors.slice(ndarray::s![.., ..a]).to_owned();
    let boundary_tie = a < n && is_tied(eig.values[a - 1], eig.values[a], eig.values[0]);
    Ok(Subspace {
        basis,
        boundary_tie,
    })
}

pub(crate) fn is_tied(a: f64, b: f64, top: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * top.abs().max(1.0)
}

/// `A^{-1/2}` for symmetric positive definite `A`.
pub fn inv_sqrt(a: &SymMatrix) -> Result<SymMatrix> {
    inv_sqrt_with_ridge(a, 0.0)
}

/// `(A + ridge·I)^{-1/2}`. Errors when the smallest eigenvalue of the shifted
/// matrix is at or below `1e-10` times its largest.
pub fn inv_sqrt_with_ridge(a: &SymMatrix, ridge: f64) -> Result<SymMatrix> {
    if !(ridge >= 0.0) || !ridge.is_finite() {
        return Err(SdrError::InvalidMatrix(format!(
            "ridge must be >= 0, got {ridge}"
        )));
    }
    let mut eig = sym_eigen(a)?;
    eig.values.iter_mut().for_each(|v| *v += ridge);
    let max = eig.values[0];
    let min = *eig.values.last().expect("non-empty spectrum");
    let threshold = INV_SQRT_THRESHOLD * max.max(0.0);
    if max <= 0.0 || min <= threshold {
        return Err(SdrError::NotPositiveDefinite {
            eigenvalue: min,
            threshold,
        });
    }
    Ok(SymMatrix::symmetrized(
        eig.reconstruct_with(|v| 1.0 / v.sqrt()),
    ))
}

/// Symmetric square root of a positive semi-definite matrix; negative
/// eigenvalues (rounding noise) are clamped to zero.
pub fn sqrt_psd(a: &SymMatrix) -> Result<SymMatrix> {
    let eig = sym_eigen(a)?;
    let scale = eig.values[0].abs().max(1.0);
    if let Some(&min) = eig.values.last() {
        if min < -1e-10 * scale {
            return Err(SdrError::NotPositiveDefinite {
                eigenvalue: min,
                threshold: 0.0,
            });
        }
    }
    Ok(SymMatrix::symmetrized(
        eig.reconstruct_with(|v| v.max(0.0).sqrt()),
    ))
}

/// Moore-Penrose inverse through the eigendecomposition. Eigenvalues with
/// `|λ| <= rank_tol · max|λ|` are treated as zero.
pub fn pseudo_inverse(a: &SymMatrix, rank_tol: f64) -> Result<SymMatrix> {
    let eig = sym_eigen(a)?;
    let max_abs = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if max_abs == 0.0 {
        return Ok(SymMatrix::zeros(a.dim()));
    }
    let cut = rank_tol * max_abs;
    Ok(SymMatrix::symmetrized(eig.reconstruct_with(|v| {
        if v.abs() <= cut {
            0.0
        } else {
            1.0 / v
        }
    })))
}

/// `||P_A - P_B||_F` between the orthogonal projectors onto two subspaces.
pub fn frobenius_span_distance(a: &Subspace, b: &Subspace) -> Result<f64> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(SdrError::DimensionError(format!(
            "ambient dimensions differ: {} vs {}",
            a.ambient_dim(),
            b.ambient_dim()
        )));
    }
    let diff = a.projector() - b.projector();
    Ok(frobenius(&diff))
}
