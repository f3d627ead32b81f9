//! Hermitian linear maps T: M_n -> M_h through their Choi matrices,
//! Wittstock splitting into completely positive parts, Paulsen's
//! off-diagonal block map, minimal Stinespring dilations in indefinite
//! metric, decomposable kernels, and the contraction dilation
//! `K(x,y) = V(x)* U V(y)` with `||U|| <= 1`.

use crate::kernel::{gram, FiniteKernel};
use crate::kolmogorov::decompose;
use crate::specalg::{
    self, abs_op, jordan_parts, norm_max, psd_check, HermitianMatrix, PsdReport, PSD_TOL,
};
use crate::{C64, CMat, CVec, Error, Result};

/// A linear map T: M_n -> M_h stored through its Choi matrix: the
/// (n*h) x (n*h) block matrix with blocks C[i][j] = T(E_ij).
#[derive(Debug, Clone)]
pub struct HermitianLinearMap {
    n: usize,
    h: usize,
    choi: HermitianMatrix,
}

impl HermitianLinearMap {
    /// Validates shape and hermiticity; T is hermitian exactly when its
    /// Choi matrix is.
    pub fn new(n: usize, h: usize, choi: CMat) -> Result<Self> {
        if n == 0 || h == 0 {
            return Err(Error::InvalidInput("n and h must be positive".into()));
        }
        if choi.nrows() != n * h || choi.ncols() != n * h {
            return Err(Error::ShapeMismatch(format!(
                "Choi matrix must be {0}x{0}, got {1}x{2}",
                n * h,
                choi.nrows(),
                choi.ncols()
            )));
        }
        Ok(Self {
            n,
            h,
            choi: HermitianMatrix::new(choi)?,
        })
    }

    /// Builds the map from its action on the matrix units.
    pub fn from_action(n: usize, h: usize, t: impl Fn(usize, usize) -> CMat) -> Result<Self> {
        let mut choi = CMat::zeros(n * h, n * h);
        for i in 0..n {
            for j in 0..n {
                let block = t(i, j);
                if block.nrows() != h || block.ncols() != h {
                    return Err(Error::ShapeMismatch("T(E_ij) must be h x h".into()));
                }
                choi.view_mut((i * h, j * h), (h, h)).copy_from(&block);
            }
        }
        Self::new(n, h, choi)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn choi(&self) -> &HermitianMatrix {
        &self.choi
    }

    /// T(E_ij), the (i,j) Choi block.
    pub fn unit_block(&self, i: usize, j: usize) -> CMat {
        self.choi
            .matrix()
            .view((i * self.h, j * self.h), (self.h, self.h))
            .into_owned()
    }

    /// T(a) = sum_ij a[i][j] T(E_ij).
    pub fn apply(&self, a: &CMat) -> Result<CMat> {
        if a.nrows() != self.n || a.ncols() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "argument must be {0}x{0}",
                self.n
            )));
        }
        let mut out = CMat::zeros(self.h, self.h);
        for i in 0..self.n {
            for j in 0..self.n {
                out += self.unit_block(i, j) * a[(i, j)];
            }
        }
        Ok(out)
    }

    pub fn zero(n: usize, h: usize) -> Self {
        Self::new(n, h, CMat::zeros(n * h, n * h)).unwrap()
    }
}

/// Wittstock decomposition T = T_+ - T_- into completely positive
/// maps with orthogonal Choi ranges (Jordan split of the Choi matrix).
pub fn wittstock_split(
    t: &HermitianLinearMap,
) -> Result<(HermitianLinearMap, HermitianLinearMap)> {
    let (plus, minus) = jordan_parts(&t.choi)?;
    Ok((
        HermitianLinearMap::new(t.n, t.h, plus.into_matrix())?,
        HermitianLinearMap::new(t.n, t.h, minus.into_matrix())?,
    ))
}

/// Paulsen majorant S = T_+ + T_-: completely positive with
/// -S <= T <= S in the completely positive order.
pub fn paulsen_s(t: &HermitianLinearMap) -> Result<HermitianLinearMap> {
    let s = abs_op(&t.choi)?;
    HermitianLinearMap::new(t.n, t.h, s.into_matrix())
}

/// PSD verdict for the Choi matrix of the off-diagonal block map
/// `F([[a,b],[c,d]]) = [[phi1(a), T(b)], [T(c*)*, phi2(d)]]`
/// on M_{2n} -> M_{2h}.
pub fn off_diagonal_check(
    t: &HermitianLinearMap,
    phi1: &HermitianLinearMap,
    phi2: &HermitianLinearMap,
) -> Result<PsdReport> {
    for phi in [phi1, phi2] {
        if phi.n != t.n || phi.h != t.h {
            return Err(Error::ShapeMismatch(
                "all three maps must be M_n -> M_h".into(),
            ));
        }
    }
    let (n, h) = (t.n, t.h);
    let f = |big_i: usize, big_j: usize| -> Result<CMat> {
        // E_{IJ} in M_{2n}, split into the four n x n corners
        let mut e = CMat::zeros(2 * n, 2 * n);
        e[(big_i, big_j)] = C64::new(1.0, 0.0);
        let a = e.view((0, 0), (n, n)).into_owned();
        let b = e.view((0, n), (n, n)).into_owned();
        let c = e.view((n, 0), (n, n)).into_owned();
        let d = e.view((n, n), (n, n)).into_owned();
        let mut out = CMat::zeros(2 * h, 2 * h);
        out.view_mut((0, 0), (h, h)).copy_from(&phi1.apply(&a)?);
        out.view_mut((0, h), (h, h)).copy_from(&t.apply(&b)?);
        out.view_mut((h, 0), (h, h))
            .copy_from(&t.apply(&c.adjoint())?.adjoint());
        out.view_mut((h, h), (h, h)).copy_from(&phi2.apply(&d)?);
        Ok(out)
    };
    let dim = 2 * n * 2 * h;
    let mut choi = CMat::zeros(dim, dim);
    for big_i in 0..2 * n {
        for big_j in 0..2 * n {
            choi.view_mut((big_i * 2 * h, big_j * 2 * h), (2 * h, 2 * h))
                .copy_from(&f(big_i, big_j)?);
        }
    }
    psd_check(&HermitianMatrix::new(choi)?, PSD_TOL)
}

/// Minimal Stinespring dilation data: `T(a) = B* J pi(a) B` with the
/// amplification `pi(a) = a (x) I_k` and `J = I_n (x) diag(s)`.
#[derive(Debug, Clone)]
pub struct StinespringDilation {
    pub n: usize,
    pub h: usize,
    /// Multiplicity: rank of the Choi matrix.
    pub k: usize,
    /// (n*k) x h, model-space index (i, t) = i*k + t.
    pub b: CMat,
    /// Signs s_t of the Choi eigenvalues, descending.
    pub s: Vec<i8>,
}

impl StinespringDilation {
    /// pi(a) = a (x) I_k.
    pub fn pi(&self, a: &CMat) -> CMat {
        a.kronecker(&CMat::identity(self.k, self.k))
    }

    /// J = I_n (x) diag(s) as a matrix.
    pub fn j_matrix(&self) -> CMat {
        let diag = CVec::from_iterator(self.s.len(), self.s.iter().map(|&v| C64::new(v as f64, 0.0)));
        CMat::identity(self.n, self.n).kronecker(&CMat::from_diagonal(&diag))
    }

    /// B* J pi(a) B, the dilated action.
    pub fn apply(&self, a: &CMat) -> CMat {
        self.b.adjoint() * self.j_matrix() * self.pi(a) * &self.b
    }

    /// SD3: span{pi(E_ij) B xi} is all of C^{nk} at rank_tol.
    pub fn is_minimal(&self, rank_tol: f64) -> bool {
        if self.k == 0 {
            return true;
        }
        let dim = self.n * self.k;
        // columns pi(E_ij) B e_r for all i, j, r
        let mut cols = Vec::new();
        for i in 0..self.n {
            for j in 0..self.n {
                let mut e = CMat::zeros(self.n, self.n);
                e[(i, j)] = C64::new(1.0, 0.0);
                let m = self.pi(&e) * &self.b;
                for r in 0..self.h {
                    cols.push(m.column(r).into_owned());
                }
            }
        }
        let mut span = CMat::zeros(dim, cols.len());
        for (c, v) in cols.iter().enumerate() {
            span.set_column(c, v);
        }
        let sv = span.svd(false, false).singular_values;
        sv.iter().filter(|&&v| v > rank_tol.max(1e-12)).count() == dim
    }
}

/// Spectral Choi construction of the minimal Stinespring dilation:
/// each eigenpair (lambda_t, v_t) above rank_tol contributes the
/// reshaped Kraus-type matrix sqrt|lambda_t| v_t and the sign of
/// lambda_t.
pub fn stinespring(t: &HermitianLinearMap, rank_tol: Option<f64>) -> Result<StinespringDilation> {
    let dec = specalg::eig_hermitian(
        &t.choi,
        rank_tol.unwrap_or_else(|| t.choi.default_rank_tol()),
    )?;
    let (n, h) = (t.n, t.h);
    // keep eigenpairs above rank_tol, ordered by descending eigenvalue
    let kept: Vec<usize> = (0..dec.eigenvalues.len())
        .filter(|&i| dec.eigenvalues[i].abs() > dec.rank_tol)
        .collect();
    let k = kept.len();
    let mut b = CMat::zeros(n * k, h);
    let mut s = Vec::with_capacity(k);
    for (tix, &ei) in kept.iter().enumerate() {
        let lam = dec.eigenvalues[ei];
        s.push(if lam >= 0.0 { 1 } else { -1 });
        let w = lam.abs().sqrt();
        let v = dec.eigenvectors.column(ei);
        // B[(i,t), r] = conj(sqrt|lam_t| v_t[i*h + r])
        for i in 0..n {
            for r in 0..h {
                b[(i * k + tix, r)] = (v[i * h + r] * C64::new(w, 0.0)).conj();
            }
        }
    }
    Ok(StinespringDilation { n, h, k, b, s })
}

/// Verification report for the kernel transcription of a dilation.
#[derive(Debug, Clone, Copy)]
pub struct TranscriptionReport {
    pub max_kernel_residual: f64,
    pub max_invariance_residual: f64,
    pub pass: bool,
}

/// With `V(x) = pi(x*) J B`, checks `V(x)* J V(y) = T(x y*)` and the
/// invariance `K_T(x, y a*) = T(x a y*)` on all pairs/triples from the
/// sample; T is read back from the dilation itself.
pub fn stinespring_to_kolmogorov(
    dil: &StinespringDilation,
    sample: &[CMat],
) -> Result<TranscriptionReport> {
    for x in sample {
        if x.nrows() != dil.n || x.ncols() != dil.n {
            return Err(Error::ShapeMismatch(format!(
                "sample matrices must be {0}x{0}",
                dil.n
            )));
        }
    }
    let j = dil.j_matrix();
    let v = |x: &CMat| -> CMat { dil.pi(&x.adjoint()) * &j * &dil.b };
    let mut max_kernel_residual = 0.0_f64;
    for x in sample {
        for y in sample {
            let lhs = v(x).adjoint() * &j * v(y);
            let rhs = dil.apply(&(x * y.adjoint()));
            max_kernel_residual = max_kernel_residual.max(norm_max(&(lhs - rhs)));
        }
    }
    let mut max_invariance_residual = 0.0_f64;
    for x in sample {
        for a in sample {
            for y in sample {
                // K_T(x, phi(a,y)) with phi(a,y) = y a*
                let lhs = v(x).adjoint() * &j * v(&(y * a.adjoint()));
                let rhs = dil.apply(&(x * a * y.adjoint()));
                max_invariance_residual =
                    max_invariance_residual.max(norm_max(&(lhs - rhs)));
            }
        }
    }
    Ok(TranscriptionReport {
        max_kernel_residual,
        max_invariance_residual,
        pass: max_kernel_residual <= 1e-9 && max_invariance_residual <= 1e-9,
    })
}

/// PSD verdict for the interleaved block kernel [[L1, K], [K*, L2]];
/// K need not be hermitian.
pub fn decomposable_check(
    k: &FiniteKernel,
    l1: &FiniteKernel,
    l2: &FiniteKernel,
) -> Result<bool> {
    k.same_shape(l1)?;
    k.same_shape(l2)?;
    let (n, h) = (k.len(), k.h());
    let mut block = CMat::zeros(2 * n * h, 2 * n * h);
    for x in 0..n {
        for y in 0..n {
            let (rx, ry) = (2 * x * h, 2 * y * h);
            block.view_mut((rx, ry), (h, h)).copy_from(l1.block(x, y));
            block.view_mut((rx, ry + h), (h, h)).copy_from(k.block(x, y));
            block
                .view_mut((rx + h, ry), (h, h))
                .copy_from(&k.block(y, x).adjoint());
            block.view_mut((rx + h, ry + h), (h, h)).copy_from(l2.block(x, y));
        }
    }
    Ok(psd_check(&HermitianMatrix::new(block)?, PSD_TOL)?.verdict)
}

/// Contraction dilation data: `K(x,y) = V(x)* U V(y)` with
/// `||U|| <= 1` and the stacked factors of full rank.
#[derive(Debug, Clone)]
pub struct DecomposableDilation {
    labels: Vec<String>,
    h: usize,
    factors: Vec<CMat>,
    u: CMat,
    rank_tol: f64,
}

impl DecomposableDilation {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn model_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn factor(&self, x: usize) -> &CMat {
        &self.factors[x]
    }

    pub fn u(&self) -> &CMat {
        &self.u
    }

    pub fn reconstruct_block(&self, x: usize, y: usize) -> CMat {
        self.factors[x].adjoint() * &self.u * &self.factors[y]
    }

    /// Operator norm of U.
    pub fn u_norm(&self) -> f64 {
        if self.model_dim() == 0 {
            0.0
        } else {
            self.u.clone().svd(false, false).singular_values.max()
        }
    }

    /// Max block residual of the reconstruction against `k`.
    pub fn reconstruction_residual(&self, k: &FiniteKernel) -> Result<f64> {
        if k.labels() != self.labels.as_slice() || k.h() != self.h {
            return Err(Error::ShapeMismatch(
                "dilation and kernel must share labels and h".into(),
            ));
        }
        let mut max = 0.0_f64;
        for x in 0..k.len() {
            for y in 0..k.len() {
                max = max.max(norm_max(&(self.reconstruct_block(x, y) - k.block(x, y))));
            }
        }
        Ok(max)
    }

    /// Stacked factors have rank equal to the model dimension.
    pub fn is_minimal(&self) -> bool {
        let k = self.model_dim();
        if k == 0 {
            return true;
        }
        let n = self.labels.len();
        let mut s = CMat::zeros(k, n * self.h);
        for (x, v) in self.factors.iter().enumerate() {
            s.view_mut((0, x * self.h), (k, self.h)).copy_from(v);
        }
        let sv = s.svd(false, false).singular_values;
        sv.iter().filter(|&&v| v > self.rank_tol.max(1e-12)).count() == k
    }
}

/// Contraction dilation of an arbitrary kernel: split into hermitian
/// parts K = K1 + i K2, Kolmogorov-decompose each, stack the factors,
/// and compress diag(J1, i J2) to the column span of the stack.
pub fn contraction_dilate(
    k: &FiniteKernel,
    rank_tol: Option<f64>,
) -> Result<DecomposableDilation> {
    let g = gram(k).matrix().clone();
    let half = C64::new(0.5, 0.0);
    let g1 = (&g + g.adjoint()) * half;
    let g2 = (&g - g.adjoint()) * C64::new(0.0, -0.5);
    let k1 = FiniteKernel::from_gram(k.labels().to_vec(), k.h(), &g1)?;
    let k2 = FiniteKernel::from_gram(k.labels().to_vec(), k.h(), &g2)?;
    let d1 = decompose(&k1, rank_tol)?;
    let d2 = decompose(&k2, rank_tol)?;
    let (k1d, k2d) = (d1.model_dim(), d2.model_dim());
    let (n, h) = (k.len(), k.h());

    // stacked V'(x) = [V1(x); V2(x)] over all labels
    let mut stack = CMat::zeros(k1d + k2d, n * h);
    for x in 0..n {
        stack
            .view_mut((0, x * h), (k1d, h))
            .copy_from(d1.factor(x));
        stack
            .view_mut((k1d, x * h), (k2d, h))
            .copy_from(d2.factor(x));
    }
    let rt = rank_tol.unwrap_or_else(|| {
        specalg::default_rank_tol(k1d + k2d, norm_max(&stack).max(1.0))
    });
    // orthonormal basis of the column span
    let q = if k1d + k2d == 0 {
        CMat::zeros(0, 0)
    } else {
        let svd = stack.clone().svd(true, false);
        let q_full = svd.u.unwrap();
        let kept: Vec<usize> = (0..svd.singular_values.len())
            .filter(|&i| svd.singular_values[i] > rt.max(1e-12))
            .collect();
        let mut q = CMat::zeros(k1d + k2d, kept.len());
        for (c, &i) in kept.iter().enumerate() {
            q.set_column(c, &q_full.column(i));
        }
        q
    };

    // diag(J1, i J2)
    let mut d = CMat::zeros(k1d + k2d, k1d + k2d);
    for (i, &s) in d1.j().iter().enumerate() {
        d[(i, i)] = C64::new(s as f64, 0.0);
    }
    for (i, &s) in d2.j().iter().enumerate() {
        d[(k1d + i, k1d + i)] = C64::new(0.0, s as f64);
    }
    let u = q.adjoint() * &d * &q;
    let factors = (0..n)
        .map(|x| q.adjoint() * stack.view((0, x * h), (k1d + k2d, h)).into_owned())
        .collect();
    Ok(DecomposableDilation {
        labels: k.labels().to_vec(),
        h,
        factors,
        u,
        rank_tol: rt,
    })
}

/// Witnessing kernels L1 = L2 with blocks V(x)* V(y), plus the PSD
/// verdict of the interleaved block kernel against the reconstructed K.
pub fn dilation_to_block(
    d: &DecomposableDilation,
) -> Result<(FiniteKernel, FiniteKernel, bool)> {
    let (n, h) = (d.labels.len(), d.h);
    let mut lg = CMat::zeros(n * h, n * h);
    let mut kg = CMat::zeros(n * h, n * h);
    for x in 0..n {
        for y in 0..n {
            lg.view_mut((x * h, y * h), (h, h))
                .copy_from(&(d.factor(x).adjoint() * d.factor(y)));
            kg.view_mut((x * h, y * h), (h, h))
                .copy_from(&d.reconstruct_block(x, y));
        }
    }
    let l1 = FiniteKernel::from_gram(d.labels.clone(), h, &lg)?;
    let l2 = l1.clone();
    let k = FiniteKernel::from_gram(d.labels.clone(), h, &kg)?;
    let verdict = decomposable_check(&k, &l1, &l2)?;
    Ok((l1, l2, verdict))
}
