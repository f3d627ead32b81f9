//! Spectral primitives for complex hermitian matrices.
//!
//! Everything downstream (Gram operators, Kolmogorov factors, Choi
//! matrices, Fock-model operators) is built on the eigendecomposition
//! contract of this module: descending real eigenvalues, orthonormal
//! eigenvectors with a deterministic phase convention, and a scale-aware
//! rank tolerance `dim * max|A| * 1e-12`.

use crate::{C64, CMat, CVec, Error, Result};
use nalgebra::DVector;

/// Tolerance for accepting a matrix as hermitian at construction.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Default tolerance for PSD verdicts.
pub const PSD_TOL: f64 = 1e-10;

/// Scale-aware threshold under which eigenvalues are treated as zero.
pub fn default_rank_tol(dim: usize, norm_max: f64) -> f64 {
    dim as f64 * norm_max * 1e-12
}

/// Largest absolute entry of a complex matrix.
pub fn norm_max(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A complex matrix certified hermitian and stored exactly symmetrized,
/// `(A + A*)/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    m: CMat,
}

impl HermitianMatrix {
    /// Checks `max |A[i][j] - conj(A[j][i])| <= tol` and stores the
    /// symmetrized matrix.
    pub fn new_with_tol(m: CMat, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "hermitian matrix must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        // entry (i,j) of A - A* is exactly A[i][j] - conj(A[j][i])
        let defect = norm_max(&(&m - m.adjoint()));
        if defect > tol {
            return Err(Error::NotHermitian { defect, tol });
        }
        let sym = (&m + m.adjoint()).scale(0.5);
        Ok(Self { m: sym })
    }

    pub fn new(m: CMat) -> Result<Self> {
        Self::new_with_tol(m, HERMITIAN_TOL)
    }

    /// Symmetrizes unconditionally. For matrices hermitian by
    /// construction (spectral reassemblies, Gram blocks).
    pub fn symmetrize(m: CMat) -> Self {
        let sym = (&m + m.adjoint()).scale(0.5);
        Self { m: sym }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn norm_max(&self) -> f64 {
        norm_max(&self.m)
    }

    /// `dim * max|A| * 1e-12`.
    pub fn default_rank_tol(&self) -> f64 {
        default_rank_tol(self.dim(), self.norm_max())
    }
}

/// Eigendecomposition of a hermitian matrix: real eigenvalues in
/// descending order, orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: CMat,
    pub rank_tol: f64,
}

/// Eigenvalue counts (above, below, within) the rank tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Signature {
    pub plus: usize,
    pub minus: usize,
    pub zero: usize,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn signature(&self) -> Signature {
        let plus = self.eigenvalues.iter().filter(|&&l| l > self.rank_tol).count();
        let minus = self
            .eigenvalues
            .iter()
            .filter(|&&l| l < -self.rank_tol)
            .count();
        Signature {
            plus,
            minus,
            zero: self.dim() - plus - minus,
        }
    }

    /// Reassembles `Q f(Λ) Q*` for a spectral function `f`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let q = &self.eigenvectors;
        let d = CMat::from_diagonal(&CVec::from_iterator(
            self.dim(),
            self.eigenvalues.iter().map(|&l| C64::new(f(l), 0.0)),
        ));
        q * d * q.adjoint()
    }
}

/// Sorts eigenpairs descending and pins each eigenvector phase so the
/// first significantly nonzero component is real positive.
fn sort_and_pin(raw_values: &DVector<f64>, raw_vectors: &CMat) -> (DVector<f64>, CMat) {
    let dim = raw_values.len();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| raw_values[j].partial_cmp(&raw_values[i]).unwrap());
    let mut eigenvalues = DVector::zeros(dim);
    let mut eigenvectors = CMat::zeros(dim, dim);
    for (dst, &src) in order.iter().enumerate() {
        eigenvalues[dst] = raw_values[src];
        let mut col: CVec = raw_vectors.column(src).into_owned();
        if let Some(&z) = col.iter().find(|z| z.norm() > 1e-12) {
            col *= z.conj() / z.norm();
        }
        eigenvectors.set_column(dst, &col);
    }
    (eigenvalues, eigenvectors)
}

/// Max-entry residual of `Q Λ Q* - A`.
fn recon_residual(a: &CMat, eigenvalues: &DVector<f64>, eigenvectors: &CMat) -> f64 {
    let dim = eigenvalues.len();
    let recon = eigenvectors
        * CMat::from_diagonal(&CVec::from_iterator(
            dim,
            eigenvalues.iter().map(|&l| C64::new(l, 0.0)),
        ))
        * eigenvectors.adjoint();
    norm_max(&(recon - a))
}

/// Cyclic Jacobi diagonalization for complex hermitian matrices.
///
/// Slower than the QL path but unconditionally stable: each step is an
/// exact unitary rotation, so orthonormality never degrades and
/// off-diagonal mass decreases monotonically.
fn jacobi_hermitian(a: &CMat) -> (DVector<f64>, CMat) {
    let dim = a.nrows();
    let mut m = a.clone();
    let mut v = CMat::identity(dim, dim);
    let scale = f64::max(1.0, norm_max(a));
    for _sweep in 0..60 {
        let mut off = 0.0_f64;
        for p in 0..dim {
            for q in (p + 1)..dim {
                off = off.max(m[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..dim {
            for q in (p + 1)..dim {
                let alpha = m[(p, q)];
                let mag = alpha.norm();
                if mag <= 1e-18 * scale {
                    continue;
                }
                // diag(1, e^{-iθ}) turns the 2x2 block real symmetric,
                // then a classical Jacobi rotation annihilates it
                let phase = alpha / mag;
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * mag);
                // smaller-magnitude root of t^2 - 2 tau t - 1 = 0
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to columns (p, q):
                //   [ c          -s        ]
                //   [ s conj(ph)  c conj(ph)]
                let upp = C64::new(c, 0.0);
                let upq = C64::new(-s, 0.0);
                let uqp = phase.conj() * s;
                let uqq = phase.conj() * c;
                for k in 0..dim {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = mkp * upp + mkq * uqp;
                    m[(k, q)] = mkp * upq + mkq * uqq;
                }
                for k in 0..dim {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = upp.conj() * mpk + uqp.conj() * mqk;
                    m[(q, k)] = upq.conj() * mpk + uqq.conj() * mqk;
                }
                for k in 0..dim {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
            }
        }
    }
    let values = DVector::from_iterator(dim, (0..dim).map(|i| m[(i, i)].re));
    (values, v)
}

/// Eigendecomposition with residual verification.
///
/// The fast QL path is used first; when its reconstruction `Q Λ Q*`
/// misses `A` beyond `1e-9 * max(1, max|A|)` (the QL iteration can
/// silently lose accuracy on clustered spectra) the result is recomputed
/// with a cyclic Jacobi sweep and re-verified.
pub fn eig_hermitian(a: &HermitianMatrix, rank_tol: f64) -> Result<SpectralDecomposition> {
    let dim = a.dim();
    if dim == 0 {
        return Ok(SpectralDecomposition {
            eigenvalues: DVector::zeros(0),
            eigenvectors: CMat::zeros(0, 0),
            rank_tol,
        });
    }
    let scale = f64::max(1.0, a.norm_max());
    let tol = 1e-9 * scale;
    // accept the fast path only at near machine accuracy; borderline
    // results would leak into downstream PSD verdicts
    let tight = 1e-12 * scale;
    if let Some(eig) = nalgebra::SymmetricEigen::try_new(a.matrix().clone(), f64::EPSILON, 0) {
        let (eigenvalues, eigenvectors) = sort_and_pin(&eig.eigenvalues, &eig.eigenvectors);
        if recon_residual(a.matrix(), &eigenvalues, &eigenvectors) <= tight {
            return Ok(SpectralDecomposition {
                eigenvalues,
                eigenvectors,
                rank_tol,
            });
        }
    }
    let (raw_values, raw_vectors) = jacobi_hermitian(a.matrix());
    let (eigenvalues, eigenvectors) = sort_and_pin(&raw_values, &raw_vectors);
    let residual = recon_residual(a.matrix(), &eigenvalues, &eigenvectors);
    if residual > tol {
        return Err(Error::EigenFailure { dim, residual });
    }
    Ok(SpectralDecomposition {
        eigenvalues,
        eigenvectors,
        rank_tol,
    })
}

/// Eigendecomposition with the default scale-aware rank tolerance.
pub fn eig_hermitian_default(a: &HermitianMatrix) -> Result<SpectralDecomposition> {
    eig_hermitian(a, a.default_rank_tol())
}

/// Signature of a hermitian matrix at its default rank tolerance.
pub fn signature(a: &HermitianMatrix) -> Result<Signature> {
    Ok(eig_hermitian_default(a)?.signature())
}

/// Jordan split `A = A+ - A-` with `A+ A- = 0`, both PSD.
pub fn jordan_parts(a: &HermitianMatrix) -> Result<(HermitianMatrix, HermitianMatrix)> {
    let s = eig_hermitian_default(a)?;
    let plus = s.apply(|l| l.max(0.0));
    let minus = s.apply(|l| (-l).max(0.0));
    Ok((
        HermitianMatrix::symmetrize(plus),
        HermitianMatrix::symmetrize(minus),
    ))
}

/// Operator absolute value `|A| = A+ + A-`.
pub fn abs_op(a: &HermitianMatrix) -> Result<HermitianMatrix> {
    let s = eig_hermitian_default(a)?;
    Ok(HermitianMatrix::symmetrize(s.apply(f64::abs)))
}

/// Verdict of a PSD test together with the smallest eigenvalue.
#[derive(Debug, Clone, Copy)]
pub struct PsdReport {
    pub verdict: bool,
    pub min_eigenvalue: f64,
}

/// `verdict = (min eigenvalue >= -tol)`.
pub fn psd_check(a: &HermitianMatrix, tol: f64) -> Result<PsdReport> {
    if a.dim() == 0 {
        return Ok(PsdReport {
            verdict: true,
            min_eigenvalue: f64::INFINITY,
        });
    }
    let s = eig_hermitian_default(a)?;
    let min_eigenvalue = s.eigenvalues[s.dim() - 1];
    Ok(PsdReport {
        verdict: min_eigenvalue >= -tol,
        min_eigenvalue,
    })
}

fn require_psd(s: &SpectralDecomposition, tol: f64) -> Result<()> {
    if s.dim() == 0 {
        return Ok(());
    }
    let min = s.eigenvalues[s.dim() - 1];
    if min < -tol {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tol,
            witness: s.eigenvectors.column(s.dim() - 1).into_owned(),
        });
    }
    Ok(())
}

/// PSD square root; negative eigenvalues within `tol` are clamped to 0.
pub fn sqrt_psd(a: &HermitianMatrix, tol: f64) -> Result<HermitianMatrix> {
    let s = eig_hermitian_default(a)?;
    require_psd(&s, tol)?;
    Ok(HermitianMatrix::symmetrize(s.apply(|l| l.max(0.0).sqrt())))
}

/// Pseudoinverse square root, using only eigenvalues above `rank_tol`,
/// so `pinv_sqrt(A) * A * pinv_sqrt(A)` is the orthogonal projector onto
/// `range(A)`.
pub fn pinv_sqrt(a: &HermitianMatrix, rank_tol: f64) -> Result<HermitianMatrix> {
    let s = eig_hermitian(a, rank_tol)?;
    require_psd(&s, rank_tol.max(PSD_TOL))?;
    Ok(HermitianMatrix::symmetrize(s.apply(|l| {
        if l > rank_tol {
            1.0 / l.sqrt()
        } else {
            0.0
        }
    })))
}
