//! Finite hermitian operator-valued kernels and their Schwartz
//! machinery.
//!
//! A kernel on a finite label set X with coefficient space C^h is stored
//! as an n x n array of h x h blocks. Its Gram matrix represents the
//! inner product `[f,g]_K = sum_{x,y} <K(x,y) f(y), g(x)>` on finitely
//! supported coordinate vectors, the Gram operator `A_L` represents
//! `[.,.]_K` against a positive definite witness `L`, and the induced
//! space turns a hermitian operator into Krein-space coordinates
//! `[Pi xi, Pi eta] = <A xi, eta>`.

use crate::specalg::{
    self, abs_op, eig_hermitian, norm_max, psd_check, HermitianMatrix, HERMITIAN_TOL, PSD_TOL,
};
use crate::{C64, CMat, CVec, Error, Result};
use nalgebra::DVector;
use std::collections::HashMap;

/// An L(C^h)-valued kernel on a finite ordered label set.
#[derive(Debug, Clone)]
pub struct FiniteKernel {
    labels: Vec<String>,
    h: usize,
    /// blocks[x][y] = K(x, y), row label x, column label y.
    blocks: Vec<Vec<CMat>>,
}

impl FiniteKernel {
    pub fn new(labels: Vec<String>, h: usize, blocks: Vec<Vec<CMat>>) -> Result<Self> {
        let n = labels.len();
        if h == 0 {
            return Err(Error::InvalidInput("h must be positive".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for l in &labels {
            if !seen.insert(l) {
                return Err(Error::InvalidInput(format!("duplicate label '{l}'")));
            }
        }
        if blocks.len() != n || blocks.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "expected {n}x{n} block array"
            )));
        }
        for row in &blocks {
            for b in row {
                if b.nrows() != h || b.ncols() != h {
                    return Err(Error::ShapeMismatch(format!(
                        "expected {h}x{h} blocks, got {}x{}",
                        b.nrows(),
                        b.ncols()
                    )));
                }
            }
        }
        Ok(Self { labels, h, blocks })
    }

    /// Kernel with all blocks zero.
    pub fn zeros(labels: Vec<String>, h: usize) -> Result<Self> {
        let n = labels.len();
        Self::new(labels, h, vec![vec![CMat::zeros(h, h); n]; n])
    }

    /// Kernel with Gram matrix the identity: `K(x,x) = I`, zero off the
    /// diagonal.
    pub fn identity(labels: Vec<String>, h: usize) -> Result<Self> {
        let mut k = Self::zeros(labels, h)?;
        for x in 0..k.len() {
            k.blocks[x][x] = CMat::identity(h, h);
        }
        Ok(k)
    }

    /// Rebuilds a kernel from an (n*h) x (n*h) Gram matrix.
    pub fn from_gram(labels: Vec<String>, h: usize, gram: &CMat) -> Result<Self> {
        let n = labels.len();
        if gram.nrows() != n * h || gram.ncols() != n * h {
            return Err(Error::ShapeMismatch(format!(
                "gram matrix must be {0}x{0}, got {1}x{2}",
                n * h,
                gram.nrows(),
                gram.ncols()
            )));
        }
        let blocks = (0..n)
            .map(|x| {
                (0..n)
                    .map(|y| gram.view((x * h, y * h), (h, h)).into_owned())
                    .collect()
            })
            .collect();
        Self::new(labels, h, blocks)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// Number of labels.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn block(&self, x: usize, y: usize) -> &CMat {
        &self.blocks[x][y]
    }

    pub fn block_mut(&mut self, x: usize, y: usize) -> &mut CMat {
        &mut self.blocks[x][y]
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Kernel adjoint, `K*(x,y) = K(y,x)*`.
    pub fn adjoint(&self) -> Self {
        let n = self.len();
        let blocks = (0..n)
            .map(|x| (0..n).map(|y| self.blocks[y][x].adjoint()).collect())
            .collect();
        Self {
            labels: self.labels.clone(),
            h: self.h,
            blocks,
        }
    }

    /// Max entry defect of `K(y,x) - K(x,y)*` over all label pairs.
    pub fn hermitian_defect(&self) -> f64 {
        let mut defect = 0.0_f64;
        for x in 0..self.len() {
            for y in 0..self.len() {
                defect = defect.max(norm_max(&(&self.blocks[y][x] - self.blocks[x][y].adjoint())));
            }
        }
        defect
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian_defect() <= HERMITIAN_TOL
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                defect,
                tol: HERMITIAN_TOL,
            });
        }
        Ok(())
    }

    pub(crate) fn same_shape(&self, other: &Self) -> Result<()> {
        if self.labels != other.labels || self.h != other.h {
            return Err(Error::ShapeMismatch(
                "kernels must share labels and coefficient dimension".into(),
            ));
        }
        Ok(())
    }
}

/// Finitely supported coordinate vector in F_0(X, C^h).
#[derive(Debug, Clone, Default)]
pub struct CoordinateVector {
    entries: HashMap<String, CVec>,
}

impl CoordinateVector {
    pub fn new() -> Self {
        Self::default()
    }

    /// Delta element xi_x supported at a single label.
    pub fn delta(label: &str, xi: CVec) -> Self {
        let mut entries = HashMap::new();
        entries.insert(label.to_string(), xi);
        Self { entries }
    }

    pub fn set(&mut self, label: &str, v: CVec) {
        self.entries.insert(label.to_string(), v);
    }

    pub fn get(&self, label: &str) -> Option<&CVec> {
        self.entries.get(label)
    }

    /// Dense (n*h)-vector in the kernel's label-block layout. Errors on
    /// support outside the label set or wrong coefficient dimension.
    pub fn to_dense(&self, kernel: &FiniteKernel) -> Result<CVec> {
        let (n, h) = (kernel.len(), kernel.h());
        let mut out = CVec::zeros(n * h);
        for (label, v) in &self.entries {
            let x = kernel
                .label_index(label)
                .ok_or_else(|| Error::InvalidInput(format!("label '{label}' not in kernel")))?;
            if v.len() != h {
                return Err(Error::ShapeMismatch(format!(
                    "coordinate at '{label}' has dim {}, expected {h}",
                    v.len()
                )));
            }
            for i in 0..h {
                out[x * h + i] = v[i];
            }
        }
        Ok(out)
    }
}

/// The assembled (n*h) x (n*h) Gram matrix of a kernel, block (x,y)
/// equal to K(x,y).
#[derive(Debug, Clone)]
pub struct GramMatrix {
    labels: Vec<String>,
    h: usize,
    matrix: CMat,
}

impl GramMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    /// Row/column offset of a label's block.
    pub fn offset(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label).map(|x| x * self.h)
    }

    pub fn hermitian(&self) -> Result<HermitianMatrix> {
        HermitianMatrix::new(self.matrix.clone())
    }

    /// `[f,g]_K = g* G f` with the library's first-linear convention.
    pub fn pairing(&self, f: &CVec, g: &CVec) -> C64 {
        (g.adjoint() * &self.matrix * f)[(0, 0)]
    }
}

/// Block assembly of the Gram matrix (Eq-level placement: block (x,y)
/// of G is K(x,y)).
pub fn gram(k: &FiniteKernel) -> GramMatrix {
    let (n, h) = (k.len(), k.h());
    let mut g = CMat::zeros(n * h, n * h);
    for x in 0..n {
        for y in 0..n {
            g.view_mut((x * h, y * h), (h, h)).copy_from(k.block(x, y));
        }
    }
    GramMatrix {
        labels: k.labels().to_vec(),
        h,
        matrix: g,
    }
}

/// Kernel order: `A <= B` iff gram(B) - gram(A) is PSD within `tol`.
pub fn leq(a: &FiniteKernel, b: &FiniteKernel, tol: f64) -> Result<bool> {
    a.same_shape(b)?;
    a.require_hermitian()?;
    b.require_hermitian()?;
    let diff = HermitianMatrix::new(gram(b).matrix() - gram(a).matrix())?;
    Ok(psd_check(&diff, tol)?.verdict)
}

/// Certificates of a Schwartz check: smallest eigenvalues of the Gram
/// matrices of L-K and L+K.
#[derive(Debug, Clone, Copy)]
pub struct SchwartzReport {
    pub verdict: bool,
    pub min_eig_minus: f64,
    pub min_eig_plus: f64,
}

/// Checks `-L <= K <= L` at Gram level within `tol`.
pub fn schwartz_check(k: &FiniteKernel, l: &FiniteKernel, tol: f64) -> Result<SchwartzReport> {
    k.same_shape(l)?;
    k.require_hermitian()?;
    l.require_hermitian()?;
    let gk = gram(k);
    let gl = gram(l);
    let minus = HermitianMatrix::new(gl.matrix() - gk.matrix())?;
    let plus = HermitianMatrix::new(gl.matrix() + gk.matrix())?;
    let rm = psd_check(&minus, tol)?;
    let rp = psd_check(&plus, tol)?;
    Ok(SchwartzReport {
        verdict: rm.verdict && rp.verdict,
        min_eig_minus: rm.min_eigenvalue,
        min_eig_plus: rp.min_eigenvalue,
    })
}

/// Canonical Schwartz witness: the kernel whose Gram matrix is
/// `|gram(K)|`. Spectral calculus makes `|G| +- G` PSD, so this always
/// succeeds on hermitian kernels.
pub fn schwartz_minimal(k: &FiniteKernel) -> Result<FiniteKernel> {
    k.require_hermitian()?;
    let g = gram(k).hermitian()?;
    let a = abs_op(&g)?;
    FiniteKernel::from_gram(k.labels().to_vec(), k.h(), a.matrix())
}

/// The Gram operator A_L of K with respect to a positive definite
/// witness L, together with the coordinate model of H_L.
///
/// H_L is modeled as C^r in the eigenbasis of gram(L) above `rank_tol`;
/// a coordinate vector f embeds as `D^{1/2} W* f`, making `[f,g]_L` the
/// standard inner product of the embeddings.
#[derive(Debug, Clone)]
pub struct SchwartzWitness {
    l: FiniteKernel,
    a_l: HermitianMatrix,
    /// Eigenvectors of gram(L) with eigenvalue above rank_tol, columns.
    basis: CMat,
    /// The matching eigenvalues, descending.
    eigenvalues: DVector<f64>,
    rank_tol: f64,
}

impl SchwartzWitness {
    pub fn witness_kernel(&self) -> &FiniteKernel {
        &self.l
    }

    pub fn gram_operator(&self) -> &HermitianMatrix {
        &self.a_l
    }

    /// Dimension r of the H_L model.
    pub fn model_dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    /// Operator norm of A_L; at most 1 + 1e-10 whenever -L <= K <= L.
    pub fn operator_norm(&self) -> Result<f64> {
        let s = specalg::eig_hermitian_default(&self.a_l)?;
        Ok(s.eigenvalues.iter().map(|l| l.abs()).fold(0.0, f64::max))
    }

    /// Embeds a dense coordinate vector into the H_L model.
    pub fn embed(&self, f: &CVec) -> CVec {
        let mut out = self.basis.adjoint() * f;
        for i in 0..out.len() {
            out[i] *= C64::new(self.eigenvalues[i].sqrt(), 0.0);
        }
        out
    }

    /// Right inverse of [`embed`](Self::embed): dense representative
    /// `W D^{-1/2} c` of model coordinates c, orthogonal to null(L).
    pub fn unembed(&self, c: &CVec) -> CVec {
        let mut scaled = c.clone();
        for i in 0..scaled.len() {
            scaled[i] /= C64::new(self.eigenvalues[i].sqrt(), 0.0);
        }
        &self.basis * scaled
    }
}

/// Gram operator construction without the Schwartz precheck; used by
/// the contraction-equivalence tests where violating pairs are fed on
/// purpose. Still enforces the null-space consistency N_L subset N_K.
pub fn gram_operator_raw(
    k: &FiniteKernel,
    l: &FiniteKernel,
    rank_tol: Option<f64>,
) -> Result<SchwartzWitness> {
    k.same_shape(l)?;
    k.require_hermitian()?;
    l.require_hermitian()?;
    let gk = gram(k).hermitian()?;
    let gl = gram(l).hermitian()?;
    let lpsd = psd_check(&gl, PSD_TOL)?;
    if !lpsd.verdict {
        let s = specalg::eig_hermitian_default(&gl)?;
        return Err(Error::NotPsd {
            min_eigenvalue: lpsd.min_eigenvalue,
            tol: PSD_TOL,
            witness: s.eigenvectors.column(s.dim() - 1).into_owned(),
        });
    }
    let rank_tol = rank_tol.unwrap_or_else(|| gl.default_rank_tol());
    let s = eig_hermitian(&gl, rank_tol)?;
    let r = s.eigenvalues.iter().filter(|&&d| d > rank_tol).count();

    // N_L must sit inside N_K; a violation means the witness cannot see
    // part of K and the inputs are inconsistent.
    let null_tol = gk.dim() as f64 * gk.norm_max() * 1e-9;
    for i in r..s.dim() {
        let v = s.eigenvectors.column(i);
        let residual = (gk.matrix() * v).norm();
        if residual > null_tol {
            return Err(Error::NullSpaceInconsistency {
                residual,
                tol: null_tol,
            });
        }
    }

    let basis = s.eigenvectors.columns(0, r).into_owned();
    let eigenvalues = DVector::from_iterator(r, s.eigenvalues.iter().take(r).copied());
    let mut dinv = CMat::zeros(r, r);
    for i in 0..r {
        dinv[(i, i)] = C64::new(1.0 / eigenvalues[i].sqrt(), 0.0);
    }
    let a_l = HermitianMatrix::symmetrize(&dinv * basis.adjoint() * gk.matrix() * &basis * &dinv);
    Ok(SchwartzWitness {
        l: l.clone(),
        a_l,
        basis,
        eigenvalues,
        rank_tol,
    })
}

/// The Gram operator of K with respect to L, after verifying the
/// Schwartz condition `-L <= K <= L`.
pub fn gram_operator(
    k: &FiniteKernel,
    l: &FiniteKernel,
    rank_tol: Option<f64>,
) -> Result<SchwartzWitness> {
    let report = schwartz_check(k, l, PSD_TOL)?;
    if !report.verdict {
        let gk = gram(k).hermitian()?;
        let gl = gram(l).hermitian()?;
        let (side, diff) = if report.min_eig_minus < report.min_eig_plus {
            ("-", HermitianMatrix::new(gl.matrix() - gk.matrix())?)
        } else {
            ("+", HermitianMatrix::new(gl.matrix() + gk.matrix())?)
        };
        let s = specalg::eig_hermitian_default(&diff)?;
        return Err(Error::SchwartzViolation {
            side,
            min_eigenvalue: report.min_eig_minus.min(report.min_eig_plus),
            witness: s.eigenvectors.column(s.dim() - 1).into_owned(),
        });
    }
    gram_operator_raw(k, l, rank_tol)
}

/// Coordinate model of the Krein space induced by a hermitian operator:
/// `[Pi xi, Pi eta]_J = <A xi, eta>`.
#[derive(Debug, Clone)]
pub struct InducedSpace {
    /// k x dim factor.
    pub pi: CMat,
    /// Fundamental symmetry, one sign per model coordinate.
    pub j: Vec<i8>,
    pub rank_tol: f64,
}

impl InducedSpace {
    pub fn model_dim(&self) -> usize {
        self.j.len()
    }

    /// Indefinite pairing `[u, v] = v* J u` on model coordinates.
    pub fn pairing(&self, u: &CVec, v: &CVec) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.j.len() {
            acc += v[i].conj() * u[i] * C64::new(self.j[i] as f64, 0.0);
        }
        acc
    }
}

/// Induced Krein space of a hermitian matrix: with `A = Q L Q*` and the
/// nonzero part `L'` (|eigenvalue| > rank_tol, k entries),
/// `Pi = |L'|^{1/2} Q'*` and `J = sign(L')`.
pub fn induced_space(a: &HermitianMatrix, rank_tol: f64) -> Result<InducedSpace> {
    let s = eig_hermitian(a, rank_tol)?;
    let keep: Vec<usize> = (0..s.dim())
        .filter(|&i| s.eigenvalues[i].abs() > rank_tol)
        .collect();
    let k = keep.len();
    let mut pi = CMat::zeros(k, s.dim());
    let mut j = Vec::with_capacity(k);
    for (row, &i) in keep.iter().enumerate() {
        let w = s.eigenvalues[i].abs().sqrt();
        let qrow = s.eigenvectors.column(i).adjoint() * C64::new(w, 0.0);
        pi.row_mut(row).copy_from(&qrow);
        j.push(if s.eigenvalues[i] > 0.0 { 1 } else { -1 });
    }
    Ok(InducedSpace { pi, j, rank_tol })
}

/// Which punctured neighborhoods of 0 sit in the resolvent of A_L. In a
/// finite-dimensional model both always do once the gap is positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapSide {
    Both,
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy)]
pub struct UniquenessGap {
    /// Smallest |eigenvalue| of A_L above its rank tolerance;
    /// +infinity when A_L vanishes.
    pub epsilon: f64,
    pub side: GapSide,
}

/// Spectral-gap certificate for uniqueness of the Kolmogorov
/// decomposition: epsilon such that (0,eps) and (-eps,0) avoid the
/// spectrum of the Gram operator.
pub fn uniqueness_gap(
    k: &FiniteKernel,
    l: &FiniteKernel,
    rank_tol: Option<f64>,
) -> Result<UniquenessGap> {
    let w = gram_operator(k, l, rank_tol)?;
    let a = w.gram_operator();
    let s = specalg::eig_hermitian_default(a)?;
    let tol = a.default_rank_tol();
    let epsilon = s
        .eigenvalues
        .iter()
        .map(|l| l.abs())
        .filter(|&l| l > tol)
        .fold(f64::INFINITY, f64::min);
    Ok(UniquenessGap {
        epsilon,
        side: GapSide::Both,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn labels(n: usize) -> Vec<String> {
        (1..=n).map(|i| format!("x{i}")).collect()
    }

    fn scalar_kernel(g: CMat) -> FiniteKernel {
        let n = g.nrows();
        FiniteKernel::from_gram(labels(n), 1, &g).unwrap()
    }

    fn diag_pm() -> FiniteKernel {
        scalar_kernel(dmatrix![r(1.0), r(0.0); r(0.0), r(-1.0)])
    }

    fn offdiag() -> FiniteKernel {
        scalar_kernel(dmatrix![r(0.0), r(1.0); r(1.0), r(0.0)])
    }

    #[test]
    fn gram_placement() {
        let k = scalar_kernel(dmatrix![r(2.0)]);
        assert_eq!(gram(&k).matrix()[(0, 0)], r(2.0));

        let k = offdiag();
        let g = gram(&k);
        assert_eq!(g.matrix()[(0, 1)], r(1.0));
        assert_eq!(g.matrix()[(1, 0)], r(1.0));
        assert_eq!(g.offset("x2"), Some(1));
    }

    #[test]
    fn gram_matches_double_sum_oracle() {
        // Eq-level oracle: [f,g]_K = sum_{x,y} <K(x,y) f(y), g(x)>
        // with <u,v> = v* u, computed blockwise without the assembly.
        let h = 2;
        let lbl = labels(2);
        let b = |m: CMat| m;
        let k = FiniteKernel::new(
            lbl.clone(),
            h,
            vec![
                vec![
                    b(dmatrix![r(1.0), C64::new(0.0, 0.5); C64::new(0.0, -0.5), r(2.0)]),
                    b(dmatrix![r(0.3), r(0.1); r(-0.2), r(0.7)]),
                ],
                vec![
                    b(dmatrix![r(0.3), r(-0.2); r(0.1), r(0.7)]),
                    b(dmatrix![r(-1.0), r(0.0); r(0.0), r(0.5)]),
                ],
            ],
        )
        .unwrap();
        let mut f = CoordinateVector::new();
        f.set("x1", dvector![r(1.0), C64::new(0.0, 1.0)]);
        f.set("x2", dvector![r(-0.5), r(2.0)]);
        let mut g = CoordinateVector::new();
        g.set("x1", dvector![r(0.2), r(1.0)]);
        g.set("x2", dvector![C64::new(1.0, -1.0), r(0.0)]);

        let fd = f.to_dense(&k).unwrap();
        let gd = g.to_dense(&k).unwrap();
        let via_gram = gram(&k).pairing(&fd, &gd);

        let mut oracle = C64::new(0.0, 0.0);
        for (x, lx) in lbl.iter().enumerate() {
            for (y, ly) in lbl.iter().enumerate() {
                let fv = f.get(ly).unwrap();
                let gv = g.get(lx).unwrap();
                let kf = k.block(x, y) * fv;
                oracle += (gv.adjoint() * kf)[(0, 0)];
            }
        }
        assert!((via_gram - oracle).norm() < 1e-12 * oracle.norm().max(1.0));
    }

    #[test]
    fn leq_cases() {
        let a = diag_pm();
        assert!(leq(&a, &a, PSD_TOL).unwrap());
        let zero = FiniteKernel::zeros(labels(2), 1).unwrap();
        // indefinite difference
        assert!(!leq(&zero, &offdiag(), PSD_TOL).unwrap());
        let id = FiniteKernel::identity(labels(2), 1).unwrap();
        let minus_id = scalar_kernel(-CMat::identity(2, 2));
        assert!(leq(&minus_id, &id, PSD_TOL).unwrap());
    }

    #[test]
    fn schwartz_check_cases() {
        let zero = FiniteKernel::zeros(labels(2), 1).unwrap();
        assert!(schwartz_check(&zero, &zero, PSD_TOL).unwrap().verdict);

        // I +- K has eigenvalues {0,2} and {2,0}
        let id = FiniteKernel::identity(labels(2), 1).unwrap();
        let rep = schwartz_check(&offdiag(), &id, PSD_TOL).unwrap();
        assert!(rep.verdict);
        assert!(rep.min_eig_minus.abs() < 1e-12);
        assert!(rep.min_eig_plus.abs() < 1e-12);

        assert!(!schwartz_check(&id, &zero, PSD_TOL).unwrap().verdict);
    }

    #[test]
    fn schwartz_minimal_cases() {
        // PSD kernel is its own witness
        let id = FiniteKernel::identity(labels(2), 1).unwrap();
        let l = schwartz_minimal(&id).unwrap();
        assert!(norm_max(&(gram(&l).matrix() - gram(&id).matrix())) < 1e-12);

        for k in [diag_pm(), offdiag()] {
            let l = schwartz_minimal(&k).unwrap();
            assert!(norm_max(&(gram(&l).matrix() - CMat::identity(2, 2))) < 1e-12);
            assert!(schwartz_check(&k, &l, PSD_TOL).unwrap().verdict);
        }
    }

    #[test]
    fn gram_operator_examples() {
        // L = |G_K| = I for K with Gram diag(1,-1): A_L = G_K itself
        let k = diag_pm();
        let l = schwartz_minimal(&k).unwrap();
        let w = gram_operator(&k, &l, None).unwrap();
        assert_eq!(w.model_dim(), 2);
        assert!(norm_max(&(w.gram_operator().matrix() - gram(&k).matrix())) < 1e-12);
        assert!(w.operator_norm().unwrap() <= 1.0 + 1e-10);

        // K = 0 against any PSD witness: A_L = 0
        let zero = FiniteKernel::zeros(labels(2), 1).unwrap();
        let id = FiniteKernel::identity(labels(2), 1).unwrap();
        let w = gram_operator(&zero, &id, None).unwrap();
        assert!(w.gram_operator().norm_max() < 1e-12);

        // K = L PSD: A_L = identity on the range
        let w = gram_operator(&id, &id, None).unwrap();
        assert!(norm_max(&(w.gram_operator().matrix() - CMat::identity(2, 2))) < 1e-12);
    }

    #[test]
    fn gram_operator_pairing_identity() {
        // [f,g]_K = [A_L f, g]_L on embedded coordinates
        let k = offdiag();
        let l = schwartz_minimal(&k).unwrap();
        let w = gram_operator(&k, &l, None).unwrap();
        let gk = gram(&k);
        let gl = gram(&l);
        let f = dvector![C64::new(0.7, -0.3), C64::new(-1.1, 0.2)];
        let g = dvector![C64::new(0.1, 0.9), C64::new(0.4, 0.0)];
        let lhs = gk.pairing(&f, &g);
        let ef = w.embed(&f);
        let eg = w.embed(&g);
        let rhs = (eg.adjoint() * w.gram_operator().matrix() * &ef)[(0, 0)];
        assert!((lhs - rhs).norm() < 1e-9);
        // and the embedding reproduces [.,.]_L
        let rhs_l = (eg.adjoint() * ef)[(0, 0)];
        assert!((gl.pairing(&f, &g) - rhs_l).norm() < 1e-9);
    }

    #[test]
    fn gram_operator_rejects_violation() {
        let id = FiniteKernel::identity(labels(2), 1).unwrap();
        let two = scalar_kernel(CMat::identity(2, 2) * r(2.0));
        match gram_operator(&two, &id, None) {
            Err(Error::SchwartzViolation { side, .. }) => assert_eq!(side, "-"),
            other => panic!("expected Schwartz violation, got {other:?}"),
        }
    }

    #[test]
    fn gram_operator_null_space_check() {
        // L = 0 cannot witness K != 0
        let zero = FiniteKernel::zeros(labels(2), 1).unwrap();
        let k = offdiag();
        assert!(matches!(
            gram_operator_raw(&k, &zero, None),
            Err(Error::NullSpaceInconsistency { .. })
        ));
    }

    #[test]
    fn induced_space_examples() {
        let id = HermitianMatrix::new(CMat::identity(2, 2)).unwrap();
        let s = induced_space(&id, 1e-12).unwrap();
        assert_eq!(s.j, vec![1, 1]);
        assert!(norm_max(&(&s.pi - CMat::identity(2, 2))) < 1e-12);

        let a = HermitianMatrix::new(dmatrix![r(4.0), r(0.0); r(0.0), r(-1.0)]).unwrap();
        let s = induced_space(&a, 1e-12).unwrap();
        assert_eq!(s.j, vec![1, -1]);
        assert!(norm_max(&(&s.pi - dmatrix![r(2.0), r(0.0); r(0.0), r(1.0)])) < 1e-12);

        let z = HermitianMatrix::new(CMat::zeros(2, 2)).unwrap();
        assert_eq!(induced_space(&z, 1e-12).unwrap().model_dim(), 0);
    }

    #[test]
    fn induced_space_pairing_identity() {
        let a = HermitianMatrix::new(dmatrix![
            r(0.4), C64::new(0.0, -1.2);
            C64::new(0.0, 1.2), r(-0.9)
        ])
        .unwrap();
        let s = induced_space(&a, a.default_rank_tol()).unwrap();
        let xi = dvector![C64::new(0.3, 0.1), C64::new(-0.8, 0.5)];
        let eta = dvector![C64::new(1.0, -0.4), C64::new(0.2, 0.2)];
        let lhs = s.pairing(&(&s.pi * &xi), &(&s.pi * &eta));
        let rhs = (eta.adjoint() * a.matrix() * &xi)[(0, 0)];
        assert!((lhs - rhs).norm() < 1e-9);
    }

    #[test]
    fn uniqueness_gap_examples() {
        // A_L = diag(1,-1): epsilon = 1
        let k = diag_pm();
        let l = schwartz_minimal(&k).unwrap();
        let gap = uniqueness_gap(&k, &l, None).unwrap();
        assert!((gap.epsilon - 1.0).abs() < 1e-10);
        assert_eq!(gap.side, GapSide::Both);

        // zero kernel: no spectrum above tolerance, epsilon = +inf
        let zero = FiniteKernel::zeros(labels(2), 1).unwrap();
        let id = FiniteKernel::identity(labels(2), 1).unwrap();
        let gap = uniqueness_gap(&zero, &id, None).unwrap();
        assert!(gap.epsilon.is_infinite());
    }

    #[test]
    fn uniqueness_gap_ignores_tiny_eigenvalue() {
        // A_L = diag(1, 1e-15) at default tolerance: epsilon = 1
        let k = scalar_kernel(dmatrix![r(1.0), r(0.0); r(0.0), r(1e-15)]);
        let id = FiniteKernel::identity(labels(2), 1).unwrap();
        let gap = uniqueness_gap(&k, &id, None).unwrap();
        assert!((gap.epsilon - 1.0).abs() < 1e-10);
    }
}
