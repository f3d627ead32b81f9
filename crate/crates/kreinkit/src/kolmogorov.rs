//! Kolmogorov decompositions `K(x,y) = V(x)* J V(y)` of hermitian
//! kernels, their minimality and uniqueness, semigroup-invariant
//! decompositions, and the reproducing-kernel-space transcription.

use crate::kernel::{
    gram, gram_operator, induced_space, schwartz_minimal, FiniteKernel,
};
use crate::specalg::{norm_max, Signature};
use crate::{C64, CMat, CVec, Error, Result};
use std::collections::{HashMap, HashSet};

/// Factorization data: one k x h factor per label and a diagonal +-1
/// fundamental symmetry on the k-dimensional model space.
#[derive(Debug, Clone)]
pub struct KolmogorovDecomposition {
    labels: Vec<String>,
    h: usize,
    factors: Vec<CMat>,
    j: Vec<i8>,
    rank_tol: f64,
}

impl KolmogorovDecomposition {
    pub fn new(
        labels: Vec<String>,
        h: usize,
        factors: Vec<CMat>,
        j: Vec<i8>,
        rank_tol: f64,
    ) -> Result<Self> {
        let k = j.len();
        if factors.len() != labels.len() {
            return Err(Error::ShapeMismatch(
                "one factor matrix per label required".into(),
            ));
        }
        for v in &factors {
            if v.nrows() != k || v.ncols() != h {
                return Err(Error::ShapeMismatch(format!(
                    "factor must be {k}x{h}, got {}x{}",
                    v.nrows(),
                    v.ncols()
                )));
            }
        }
        if j.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::InvalidInput("J entries must be +-1".into()));
        }
        Ok(Self {
            labels,
            h,
            factors,
            j,
            rank_tol,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn h(&self) -> usize {
        self.h
    }

    /// Dimension of the Krein model space.
    pub fn model_dim(&self) -> usize {
        self.j.len()
    }

    pub fn j(&self) -> &[i8] {
        &self.j
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn factor(&self, x: usize) -> &CMat {
        &self.factors[x]
    }

    pub fn factor_for(&self, label: &str) -> Option<&CMat> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|x| &self.factors[x])
    }

    /// J as a diagonal matrix.
    pub fn j_matrix(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            self.j.len(),
            self.j.iter().map(|&s| C64::new(s as f64, 0.0)),
        ))
    }

    /// Signature of the fundamental symmetry.
    pub fn signature(&self) -> Signature {
        let plus = self.j.iter().filter(|&&s| s == 1).count();
        Signature {
            plus,
            minus: self.j.len() - plus,
            zero: 0,
        }
    }

    /// Horizontal stack of all factors, k x (n*h).
    pub fn stacked(&self) -> CMat {
        let (k, h, n) = (self.model_dim(), self.h, self.labels.len());
        let mut s = CMat::zeros(k, n * h);
        for (x, v) in self.factors.iter().enumerate() {
            s.view_mut((0, x * h), (k, h)).copy_from(v);
        }
        s
    }

    /// KD2 reconstruction of a single block, `V(x)* J V(y)`.
    pub fn reconstruct_block(&self, x: usize, y: usize) -> CMat {
        self.factors[x].adjoint() * self.j_matrix() * &self.factors[y]
    }

    /// KD3: the factor ranges span the whole model space.
    pub fn is_minimal(&self) -> bool {
        let k = self.model_dim();
        if k == 0 {
            return true;
        }
        let s = self.stacked();
        let sv = s.svd(false, false).singular_values;
        sv.iter().filter(|&&v| v > self.rank_tol.max(1e-12)).count() == k
    }

    /// Krein adjoint of a model-space operator, `J M* J`.
    pub fn sharp(&self, m: &CMat) -> CMat {
        let j = self.j_matrix();
        &j * m.adjoint() * &j
    }
}

/// KD2/KD3 verification report.
#[derive(Debug, Clone, Copy)]
pub struct VerifyReport {
    pub max_block_residual: f64,
    pub minimal: bool,
    pub pass: bool,
}

/// Checks `V(x)* J V(y) = K(x,y)` for all label pairs within `tol`.
pub fn verify(d: &KolmogorovDecomposition, k: &FiniteKernel, tol: f64) -> Result<VerifyReport> {
    if d.labels() != k.labels() || d.h() != k.h() {
        return Err(Error::ShapeMismatch(
            "decomposition and kernel must share labels and h".into(),
        ));
    }
    let mut max_block_residual = 0.0_f64;
    for x in 0..k.len() {
        for y in 0..k.len() {
            let res = norm_max(&(d.reconstruct_block(x, y) - k.block(x, y)));
            max_block_residual = max_block_residual.max(res);
        }
    }
    let minimal = d.is_minimal();
    Ok(VerifyReport {
        max_block_residual,
        minimal,
        pass: max_block_residual <= tol && minimal,
    })
}

/// Kolmogorov decomposition through the Gram-operator pipeline:
/// minimal Schwartz witness, Gram operator A_L, induced Krein space,
/// factors `V(x) xi = Pi [xi_x]`.
pub fn decompose(k: &FiniteKernel, rank_tol: Option<f64>) -> Result<KolmogorovDecomposition> {
    k.require_hermitian()?;
    let l = schwartz_minimal(k)?;
    let w = gram_operator(k, &l, rank_tol)?;
    let a_l = w.gram_operator();
    let ind = induced_space(a_l, a_l.default_rank_tol().max(1e-12))?;
    let (n, h) = (k.len(), k.h());
    // embedding of the delta elements followed by Pi
    let mut factors = Vec::with_capacity(n);
    for x in 0..n {
        let mut v = CMat::zeros(ind.model_dim(), h);
        for i in 0..h {
            let mut delta = CVec::zeros(n * h);
            delta[x * h + i] = C64::new(1.0, 0.0);
            v.set_column(i, &(&ind.pi * w.embed(&delta)));
        }
        factors.push(v);
    }
    KolmogorovDecomposition::new(
        k.labels().to_vec(),
        h,
        factors,
        ind.j,
        rank_tol.unwrap_or(w.rank_tol()),
    )
}

/// Direct spectral factorization of gram(K); the cheap cross-check
/// pipeline for [`decompose`].
pub fn decompose_direct(
    k: &FiniteKernel,
    rank_tol: Option<f64>,
) -> Result<KolmogorovDecomposition> {
    k.require_hermitian()?;
    let g = gram(k).hermitian()?;
    let rank_tol = rank_tol.unwrap_or_else(|| g.default_rank_tol());
    let ind = induced_space(&g, rank_tol)?;
    let (n, h) = (k.len(), k.h());
    let factors = (0..n)
        .map(|x| ind.pi.columns(x * h, h).into_owned())
        .collect();
    KolmogorovDecomposition::new(k.labels().to_vec(), h, factors, ind.j, rank_tol)
}

/// Solves `Phi V1(x) = V2(x)` for all labels and verifies that Phi is
/// (J1,J2)-unitary. Both inputs must be minimal.
pub fn unitary_equivalence(
    d1: &KolmogorovDecomposition,
    d2: &KolmogorovDecomposition,
    tol: f64,
) -> Result<CMat> {
    if d1.labels() != d2.labels() || d1.h() != d2.h() {
        return Err(Error::ShapeMismatch(
            "decompositions must live over the same kernel shape".into(),
        ));
    }
    for d in [d1, d2] {
        if !d.is_minimal() {
            let s = d.stacked();
            let sv = s.svd(false, false).singular_values;
            let rank = sv.iter().filter(|&&v| v > d.rank_tol().max(1e-12)).count();
            return Err(Error::NotMinimal {
                rank,
                k: d.model_dim(),
            });
        }
    }
    let s1 = d1.stacked();
    let s2 = d2.stacked();
    if d1.model_dim() == 0 && d2.model_dim() == 0 {
        return Ok(CMat::zeros(0, 0));
    }
    let pinv = s1
        .clone()
        .pseudo_inverse(d1.rank_tol().max(1e-12))
        .map_err(|e| Error::InconsistentSystem {
            what: format!("pseudoinverse of stacked factors: {e}"),
            residual: f64::NAN,
        })?;
    let phi = &s2 * pinv;
    let scale = norm_max(&s2).max(1.0);
    let residual = norm_max(&(&phi * &s1 - &s2));
    if residual > tol * scale {
        return Err(Error::NoEquivalence { residual });
    }
    // (J1,J2)-unitarity: Phi# Phi = I and Phi Phi# = I
    let sharp = d1.j_matrix() * phi.adjoint() * d2.j_matrix();
    let r1 = norm_max(&(&sharp * &phi - CMat::identity(d1.model_dim(), d1.model_dim())));
    let r2 = norm_max(&(&phi * &sharp - CMat::identity(d2.model_dim(), d2.model_dim())));
    if r1 > tol || r2 > tol {
        return Err(Error::NoEquivalence {
            residual: r1.max(r2),
        });
    }
    Ok(phi)
}

/// One generator of a semigroup action: a name, the name of its
/// involution partner, and a total map on the label set.
#[derive(Debug, Clone)]
pub struct Generator {
    pub name: String,
    pub involution: String,
    pub map: HashMap<String, String>,
}

/// Finitely generated unital semigroup with involution acting on the
/// label set. Words act by composition; relations are never declared,
/// consistency on words is a tested consequence.
#[derive(Debug, Clone)]
pub struct SemigroupAction {
    generators: Vec<Generator>,
}

impl SemigroupAction {
    pub fn new(generators: Vec<Generator>) -> Result<Self> {
        let names: HashSet<&str> = generators.iter().map(|g| g.name.as_str()).collect();
        if names.len() != generators.len() {
            return Err(Error::InvalidInput("duplicate generator name".into()));
        }
        for g in &generators {
            let partner = generators
                .iter()
                .find(|p| p.name == g.involution)
                .ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "involution partner '{}' of '{}' not declared",
                        g.involution, g.name
                    ))
                })?;
            if partner.involution != g.name {
                return Err(Error::InvalidInput(format!(
                    "involution pairing not involutive at '{}'",
                    g.name
                )));
            }
        }
        Ok(Self { generators })
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    pub fn generator(&self, name: &str) -> Option<&Generator> {
        self.generators.iter().find(|g| g.name == name)
    }

    /// Checks that every generator map is total on `labels` and lands
    /// inside them.
    pub fn validate_labels(&self, labels: &[String]) -> Result<()> {
        for g in &self.generators {
            for l in labels {
                match g.map.get(l) {
                    Some(t) if labels.contains(t) => {}
                    Some(t) => {
                        return Err(Error::InvalidInput(format!(
                            "generator '{}' maps '{}' outside the label set ('{}')",
                            g.name, l, t
                        )))
                    }
                    None => {
                        return Err(Error::InvalidInput(format!(
                            "generator '{}' undefined on label '{}'",
                            g.name, l
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply(&self, name: &str, label: &str) -> Result<String> {
        let g = self
            .generator(name)
            .ok_or_else(|| Error::InvalidInput(format!("unknown generator '{name}'")))?;
        g.map
            .get(label)
            .cloned()
            .ok_or_else(|| Error::InvalidInput(format!("'{name}' undefined on '{label}'")))
    }
}

/// A decomposition together with the linearized action
/// `U(a) V(x) = V(phi(a,x))`.
#[derive(Debug, Clone)]
pub struct InvariantDecomposition {
    pub base: KolmogorovDecomposition,
    pub operators: HashMap<String, CMat>,
}

impl InvariantDecomposition {
    pub fn operator(&self, name: &str) -> Option<&CMat> {
        self.operators.get(name)
    }
}

/// Verifies the invariance identity `K(x, phi(a,y)) = K(phi(I(a),x), y)`
/// for every generator and label pair.
pub fn check_invariance(k: &FiniteKernel, act: &SemigroupAction, tol: f64) -> Result<()> {
    act.validate_labels(k.labels())?;
    for g in act.generators() {
        for (x, lx) in k.labels().iter().enumerate() {
            for (y, ly) in k.labels().iter().enumerate() {
                let phi_ay = act.apply(&g.name, ly)?;
                let phi_iax = act.apply(&g.involution, lx)?;
                let yy = k.label_index(&phi_ay).unwrap();
                let xx = k.label_index(&phi_iax).unwrap();
                let defect = norm_max(&(k.block(x, yy) - k.block(xx, y)));
                if defect > tol {
                    return Err(Error::InvarianceViolation {
                        generator: g.name.clone(),
                        x: lx.clone(),
                        y: ly.clone(),
                        defect,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Builds the invariant decomposition: base decomposition plus one
/// model-space operator per generator, solved from
/// `U(a) [stack V(x)] = [stack V(phi(a,x))]` on the factor span.
pub fn invariant_decompose(
    k: &FiniteKernel,
    act: &SemigroupAction,
    rank_tol: Option<f64>,
) -> Result<InvariantDecomposition> {
    let tol = 1e-9 * f64::max(1.0, gram(k).matrix().iter().map(|z| z.norm()).fold(0.0, f64::max));
    check_invariance(k, act, tol)?;
    let base = decompose(k, rank_tol)?;
    let kdim = base.model_dim();
    let stacked = base.stacked();
    let pinv = if kdim == 0 {
        CMat::zeros(stacked.ncols(), 0)
    } else {
        stacked
            .clone()
            .pseudo_inverse(base.rank_tol().max(1e-12))
            .map_err(|e| Error::InconsistentSystem {
                what: format!("pseudoinverse of stacked factors: {e}"),
                residual: f64::NAN,
            })?
    };

    let mut operators = HashMap::new();
    for g in act.generators() {
        let mut target = CMat::zeros(kdim, stacked.ncols());
        for (x, lx) in base.labels().iter().enumerate() {
            let dst = act.apply(&g.name, lx)?;
            let xi = base.labels().iter().position(|l| l == &dst).unwrap();
            target
                .view_mut((0, x * base.h()), (kdim, base.h()))
                .copy_from(base.factor(xi));
        }
        let u = &target * &pinv;
        let residual = norm_max(&(&u * &stacked - &target));
        if residual > tol.max(1e-9) {
            return Err(Error::InconsistentSystem {
                what: format!("linearized action of generator '{}'", g.name),
                residual,
            });
        }
        operators.insert(g.name.clone(), u);
    }

    // U(I(a)) must be the Krein adjoint of U(a)
    for g in act.generators() {
        let u = &operators[&g.name];
        let ui = &operators[&g.involution];
        let residual = norm_max(&(base.sharp(u) - ui));
        if residual > 1e-9 * f64::max(1.0, norm_max(u)) {
            return Err(Error::InconsistentSystem {
                what: format!("Krein adjoint relation for generator '{}'", g.name),
                residual,
            });
        }
    }

    Ok(InvariantDecomposition { base, operators })
}

/// Seminorm bounds of the composition operators psi_a compressed to the
/// H_L model of a positive definite kernel. Always finite on a finite
/// label set; the values are diagnostics.
pub fn psi_bounded_check(
    l: &FiniteKernel,
    act: &SemigroupAction,
    rank_tol: Option<f64>,
) -> Result<HashMap<String, f64>> {
    act.validate_labels(l.labels())?;
    // gram_operator of L against itself validates positive definiteness
    // and exposes the H_L eigenmodel.
    let w = crate::kernel::gram_operator_raw(l, l, rank_tol)?;
    let (n, h) = (l.len(), l.h());
    let mut bounds = HashMap::new();
    for g in act.generators() {
        // permutation-type matrix of psi_a on dense coordinates
        let mut p = CMat::zeros(n * h, n * h);
        for (x, lx) in l.labels().iter().enumerate() {
            let dst = act.apply(&g.name, lx)?;
            let xx = l.label_index(&dst).unwrap();
            for i in 0..h {
                p[(xx * h + i, x * h + i)] = C64::new(1.0, 0.0);
            }
        }
        // compress: embed . psi_a . unembed
        let r = w.model_dim();
        let mut columns = CMat::zeros(r, r);
        for c in 0..r {
            let mut e = CVec::zeros(r);
            e[c] = C64::new(1.0, 0.0);
            columns.set_column(c, &w.embed(&(&p * w.unembed(&e))));
        }
        let norm = if r == 0 {
            0.0
        } else {
            columns.svd(false, false).singular_values.max()
        };
        bounds.insert(g.name.clone(), norm);
    }
    Ok(bounds)
}

/// Generator functions of the reproducing kernel Krein space: value
/// tables `x -> K(x,y) e_i` and the R-space Gram pairing, linked to a
/// Kolmogorov decomposition for the inner product.
#[derive(Debug, Clone)]
pub struct ReproducingSpace {
    decomposition: KolmogorovDecomposition,
    kernel: FiniteKernel,
}

impl ReproducingSpace {
    pub fn decomposition(&self) -> &KolmogorovDecomposition {
        &self.decomposition
    }

    /// Value table of the generator function g_{y, e_i} at label x.
    pub fn generator_value(&self, y: usize, i: usize, x: usize) -> CVec {
        self.kernel.block(x, y).column(i).into_owned()
    }

    /// R-space inner product of two generator functions,
    /// `[g_{y,e_i}, g_{y',e_j}]_R = <K(y',y) e_i, e_j>`, evaluated
    /// through the Krein pairing of the decomposition.
    pub fn generator_pairing(&self, y: usize, i: usize, yp: usize, j: usize) -> C64 {
        let f = self.decomposition.factor(y).column(i).into_owned();
        let g = self.decomposition.factor(yp).column(j).into_owned();
        (g.adjoint() * self.decomposition.j_matrix() * f)[(0, 0)]
    }

    /// Max residual of the reproducing identity
    /// `<g_f(x), e_i> = [g_f, g_{x,e_i}]_R` over all generator
    /// functions f and all (x, e_i).
    pub fn reproducing_residual(&self) -> f64 {
        let n = self.kernel.len();
        let h = self.kernel.h();
        let mut max = 0.0_f64;
        for y in 0..n {
            for ip in 0..h {
                for x in 0..n {
                    for i in 0..h {
                        let lhs = self.generator_value(y, ip, x)[i];
                        let rhs = self.generator_pairing(y, ip, x, i);
                        max = max.max((lhs - rhs).norm());
                    }
                }
            }
        }
        max
    }
}

/// Transcribes a verified decomposition into the reproducing space.
pub fn to_reproducing(
    d: &KolmogorovDecomposition,
    k: &FiniteKernel,
    tol: f64,
) -> Result<ReproducingSpace> {
    let report = verify(d, k, tol)?;
    if !report.pass {
        return Err(Error::InconsistentSystem {
            what: "decomposition does not verify against the kernel".into(),
            residual: report.max_block_residual,
        });
    }
    Ok(ReproducingSpace {
        decomposition: d.clone(),
        kernel: k.clone(),
    })
}

/// For each generator a and each generator function f, compares the
/// transported function `(Ubar(a) f)(x) = V(x)* J U(a) f` with the
/// composition `x -> f(phi(I(a), x))`. Returns the max residual.
pub fn reproducing_invariance_check(
    r: &ReproducingSpace,
    inv: &InvariantDecomposition,
    act: &SemigroupAction,
) -> Result<f64> {
    let d = &inv.base;
    let n = r.kernel.len();
    let h = r.kernel.h();
    let mut max = 0.0_f64;
    for g in act.generators() {
        let u = inv
            .operator(&g.name)
            .ok_or_else(|| Error::InvalidInput(format!("no operator for '{}'", g.name)))?;
        for y in 0..n {
            for i in 0..h {
                let f = d.factor(y).column(i).into_owned();
                let uf = u * &f;
                for (x, lx) in r.kernel.labels().iter().enumerate() {
                    let transported = d.factor(x).adjoint() * d.j_matrix() * &uf;
                    let pre = act.apply(&g.involution, lx)?;
                    let xx = r.kernel.label_index(&pre).unwrap();
                    let composed = r.generator_value(y, i, xx);
                    max = max.max(norm_max(&CMat::from_column_slice(
                        h,
                        1,
                        (transported - composed).as_slice(),
                    )));
                }
            }
        }
    }
    Ok(max)
}
