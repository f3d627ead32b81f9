//! Truncated symmetric Fock model over C^d: the Szego kernel and its
//! occupation-coordinate Kolmogorov decomposition, the weighted H^2
//! monomial model, homogeneous expansion of polynomial hermitian
//! kernels with sampled Cauchy bounds, holomorphic linearization
//! `K(xi,eta) = V(xi)* J V(eta)` with polynomial V, and the holomorphic
//! contraction dilation.
//!
//! Inner products are linear in the first argument; the Szego kernel is
//! `S(xi,eta) = 1/(1 - <eta,xi>)`.

use crate::specalg::{self, norm_max, HermitianMatrix, Signature};
use crate::{C64, CMat, CVec, Error, Result};
use itertools::Itertools;
use std::collections::BTreeMap;

/// Exponent vector over d coordinates; ordered by degree, then
/// lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn degree(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn zero(d: usize) -> Self {
        MultiIndex(vec![0; d])
    }

    /// Monomial evaluation xi^alpha.
    pub fn monomial(&self, xi: &CVec) -> C64 {
        self.0
            .iter()
            .enumerate()
            .fold(C64::new(1.0, 0.0), |acc, (i, &e)| acc * xi[i].powu(e as u32))
    }

    /// Multinomial weight |alpha|! / alpha!.
    pub fn weight(&self) -> f64 {
        let num = factorial(self.degree());
        let den: f64 = self.0.iter().map(|&e| factorial(e)).product();
        num / den
    }
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.degree(), &self.0).cmp(&(other.degree(), &other.0))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut out = 1usize;
    for i in 0..k.min(n - k) {
        out = out * (n - i) / (i + 1);
    }
    out
}

/// All multi-indices over d coordinates with degree <= m, in canonical
/// order.
pub fn enumerate_multi_indices(d: usize, m: usize) -> Vec<MultiIndex> {
    fn rec(d: usize, deg: usize, out: &mut Vec<Vec<usize>>, prefix: &mut Vec<usize>) {
        if prefix.len() == d - 1 {
            prefix.push(deg);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in 0..=deg {
            prefix.push(e);
            rec(d, deg - e, out, prefix);
            prefix.pop();
        }
    }
    let mut basis = Vec::new();
    for deg in 0..=m {
        let mut layer = Vec::new();
        rec(d, deg, &mut layer, &mut Vec::new());
        layer.sort();
        basis.extend(layer.into_iter().map(MultiIndex));
    }
    basis
}

/// Symmetric Fock space over C^d truncated at degree M, in occupation
/// coordinates c_alpha(xi) = sqrt(|alpha|!/alpha!) xi^alpha.
#[derive(Debug, Clone)]
pub struct TruncatedFock {
    d: usize,
    m: usize,
    basis: Vec<MultiIndex>,
}

impl TruncatedFock {
    pub fn new(d: usize, m: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidInput("ambient dimension must be >= 1".into()));
        }
        Ok(Self {
            d,
            m,
            basis: enumerate_multi_indices(d, m),
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn max_degree(&self) -> usize {
        self.m
    }

    pub fn basis(&self) -> &[MultiIndex] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        self.basis.iter().position(|b| b == alpha)
    }
}

fn require_in_ball(xi: &CVec, d: usize) -> Result<()> {
    if xi.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "point must have {d} coordinates"
        )));
    }
    if xi.norm() >= 1.0 {
        return Err(Error::Domain(format!(
            "point with norm {:.6} outside the open unit ball",
            xi.norm()
        )));
    }
    Ok(())
}

/// Szego kernel S(xi, eta) = 1 / (1 - <eta, xi>) on the unit ball.
pub fn szego(xi: &CVec, eta: &CVec) -> Result<C64> {
    if xi.len() != eta.len() {
        return Err(Error::ShapeMismatch("points must share dimension".into()));
    }
    require_in_ball(xi, xi.len())?;
    require_in_ball(eta, eta.len())?;
    // <eta, xi> linear in the first argument
    let inner = (xi.adjoint() * eta)[(0, 0)];
    Ok(C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - inner))
}

/// Occupation coordinates of xi in the truncated Fock space: the
/// direct sum of the normalized tensor powers xi^{(x)n}.
pub fn fock_embed(f: &TruncatedFock, xi: &CVec) -> Result<CVec> {
    require_in_ball(xi, f.d)?;
    Ok(CVec::from_iterator(
        f.dim(),
        f.basis
            .iter()
            .map(|a| a.monomial(xi) * C64::new(a.weight().sqrt(), 0.0)),
    ))
}

/// Truncated Szego reproduction: value of the truncated pairing and
/// the geometric tail bound on its distance to S(xi, eta).
#[derive(Debug, Clone, Copy)]
pub struct SzegoTruncation {
    pub value: C64,
    pub exact: C64,
    pub error: f64,
    pub error_bound: f64,
}

/// Compares `<fock_embed(eta), fock_embed(xi)>` with S(xi, eta); the
/// tail is bounded by r^{2(M+1)} / (1 - r^2) with r = max norm.
pub fn szego_truncation_check(f: &TruncatedFock, xi: &CVec, eta: &CVec) -> Result<SzegoTruncation> {
    let exact = szego(xi, eta)?;
    let ve = fock_embed(f, eta)?;
    let vx = fock_embed(f, xi)?;
    let value = (vx.adjoint() * ve)[(0, 0)];
    let r = xi.norm().max(eta.norm());
    let error_bound = r.powi(2 * (f.m as i32 + 1)) / (1.0 - r * r);
    Ok(SzegoTruncation {
        value,
        exact,
        error: (value - exact).norm(),
        error_bound,
    })
}

/// Verification report for the explicit symmetrizer on the full n-fold
/// tensor power of C^d.
#[derive(Debug, Clone, Copy)]
pub struct SymmetrizerReport {
    pub idempotent_residual: f64,
    pub selfadjoint_residual: f64,
    pub rank: usize,
    pub expected_rank: usize,
    pub model_match_residual: f64,
    pub pass: bool,
}

/// Builds P_n = (n!)^{-1} sum over permutation operators on (C^d)^{(x)n},
/// checks P_n^2 = P_n = P_n*, and matches full-tensor inner products of
/// xi^{(x)n} against the occupation-coordinate model.
pub fn symmetrizer_check(n: usize, d: usize, xi: &CVec, eta: &CVec) -> Result<SymmetrizerReport> {
    if d == 0 {
        return Err(Error::InvalidInput("ambient dimension must be >= 1".into()));
    }
    let dim = d.pow(n as u32);
    if dim > 4096 {
        return Err(Error::InvalidInput(format!(
            "full tensor space dimension {dim} too large to materialize"
        )));
    }
    if xi.len() != d || eta.len() != d {
        return Err(Error::ShapeMismatch("points must have d coordinates".into()));
    }
    // tensor slot index <-> base-d digits
    let digits = |mut t: usize| -> Vec<usize> {
        let mut out = vec![0; n];
        for slot in (0..n).rev() {
            out[slot] = t % d;
            t /= d;
        }
        out
    };
    let from_digits = |dg: &[usize]| -> usize { dg.iter().fold(0, |acc, &x| acc * d + x) };

    let mut p = CMat::zeros(dim, dim);
    let mut count = 0usize;
    for perm in (0..n).permutations(n) {
        for t in 0..dim {
            let dg = digits(t);
            let permuted: Vec<usize> = (0..n).map(|slot| dg[perm[slot]]).collect();
            p[(from_digits(&permuted), t)] += C64::new(1.0, 0.0);
        }
        count += 1;
    }
    p /= C64::new(count.max(1) as f64, 0.0);

    let idempotent_residual = norm_max(&(&p * &p - &p));
    let selfadjoint_residual = norm_max(&(p.adjoint() - &p));
    let rank = p
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&v| v > 1e-9)
        .count();
    let expected_rank = binomial(n + d - 1, d - 1);

    // full-tensor xi^{(x)n}
    let tensor_power = |v: &CVec| -> CVec {
        CVec::from_fn(dim, |t, _| {
            digits(t)
                .iter()
                .fold(C64::new(1.0, 0.0), |acc, &i| acc * v[i])
        })
    };
    let tx = tensor_power(xi);
    let te = tensor_power(eta);
    // <xi^{(x)n}, eta^{(x)n}> (linear in first) and its symmetrized form
    let full = (te.adjoint() * &tx)[(0, 0)];
    let sym = (te.adjoint() * &p * &tx)[(0, 0)];
    // occupation model: sum over |alpha| = n of c_alpha(xi) conj(c_alpha(eta))
    let occ: C64 = enumerate_multi_indices(d, n)
        .into_iter()
        .filter(|a| a.degree() == n)
        .map(|a| {
            let w = C64::new(a.weight(), 0.0);
            a.monomial(xi) * a.monomial(eta).conj() * w
        })
        .sum();
    let model_match_residual = (full - occ).norm().max((sym - occ).norm());

    Ok(SymmetrizerReport {
        idempotent_residual,
        selfadjoint_residual,
        rank,
        expected_rank,
        model_match_residual,
        pass: idempotent_residual <= 1e-12
            && selfadjoint_residual <= 1e-12
            && rank == expected_rank
            && model_match_residual <= 1e-12,
    })
}

/// Exact homogeneity report for the degree-n slice of the embedding.
#[derive(Debug, Clone, Copy)]
pub struct TotalityReport {
    pub homogeneity_residual: f64,
    pub tensor_match_residual: f64,
    pub pass: bool,
}

/// The degree-n slice of `fock_embed(t xi)` is t^n times the slice of
/// `fock_embed(xi)`, and the slice divided by the occupation weights
/// recovers the monomials xi^alpha exactly.
pub fn totality_derivative_check(f: &TruncatedFock, xi: &CVec, n: usize) -> Result<TotalityReport> {
    if n > f.m {
        return Err(Error::OutOfDomain(format!(
            "degree {n} exceeds truncation {}",
            f.m
        )));
    }
    let v = fock_embed(f, xi)?;
    let half = xi * C64::new(0.5, 0.0);
    let vh = fock_embed(f, &half)?;
    let mut homogeneity_residual = 0.0_f64;
    let mut tensor_match_residual = 0.0_f64;
    let scale = C64::new(0.5f64.powi(n as i32), 0.0);
    for (i, a) in f.basis.iter().enumerate() {
        if a.degree() != n {
            continue;
        }
        homogeneity_residual = homogeneity_residual.max((vh[i] - v[i] * scale).norm());
        let monomial = v[i] / C64::new(a.weight().sqrt(), 0.0);
        tensor_match_residual = tensor_match_residual.max((monomial - a.monomial(xi)).norm());
    }
    Ok(TotalityReport {
        homogeneity_residual,
        tensor_match_residual,
        pass: homogeneity_residual <= 1e-12 && tensor_match_residual <= 1e-12,
    })
}

/// Polynomial kernel `K(xi,eta) = sum c_{alpha,beta} conj(xi^alpha) eta^beta`
/// with finite coefficient support. Hermitian when
/// c_{alpha,beta} = conj(c_{beta,alpha}).
#[derive(Debug, Clone)]
pub struct PolynomialKernel {
    d: usize,
    coeffs: BTreeMap<(MultiIndex, MultiIndex), C64>,
}

impl PolynomialKernel {
    pub fn new(d: usize, coeffs: impl IntoIterator<Item = ((MultiIndex, MultiIndex), C64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for ((a, b), v) in coeffs {
            if a.dim() != d || b.dim() != d {
                return Err(Error::ShapeMismatch(
                    "multi-indices must match the ambient dimension".into(),
                ));
            }
            if v.norm() > 0.0 {
                *map.entry((a, b)).or_insert(C64::new(0.0, 0.0)) += v;
            }
        }
        map.retain(|_, v| v.norm() > 0.0);
        Ok(Self { d, coeffs: map })
    }

    /// Validating constructor for hermitian kernels.
    pub fn new_hermitian(
        d: usize,
        coeffs: impl IntoIterator<Item = ((MultiIndex, MultiIndex), C64)>,
    ) -> Result<Self> {
        let k = Self::new(d, coeffs)?;
        k.require_hermitian()?;
        Ok(k)
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn coeffs(&self) -> &BTreeMap<(MultiIndex, MultiIndex), C64> {
        &self.coeffs
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut defect = 0.0_f64;
        for ((a, b), v) in &self.coeffs {
            let mirror = self
                .coeffs
                .get(&(b.clone(), a.clone()))
                .copied()
                .unwrap_or_else(|| C64::new(0.0, 0.0));
            defect = defect.max((mirror - v.conj()).norm());
        }
        defect
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        if defect > 1e-10 {
            return Err(Error::NotHermitian {
                defect,
                tol: 1e-10,
            });
        }
        Ok(())
    }

    /// Max degree over alpha and beta separately.
    pub fn support_degree(&self) -> usize {
        self.coeffs
            .keys()
            .map(|(a, b)| a.degree().max(b.degree()))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, xi: &CVec, eta: &CVec) -> Result<C64> {
        if xi.len() != self.d || eta.len() != self.d {
            return Err(Error::ShapeMismatch("points must have d coordinates".into()));
        }
        Ok(self
            .coeffs
            .iter()
            .map(|((a, b), v)| v * a.monomial(xi).conj() * b.monomial(eta))
            .sum())
    }

    /// Adjoint kernel K*(xi,eta) = conj(K(eta,xi)): coefficient
    /// (beta,alpha) -> conj(c_{alpha,beta}).
    pub fn adjoint(&self) -> PolynomialKernel {
        let coeffs = self
            .coeffs
            .iter()
            .map(|((a, b), v)| ((b.clone(), a.clone()), v.conj()))
            .collect();
        PolynomialKernel {
            d: self.d,
            coeffs,
        }
    }

    /// Linear combination s*self + t*other.
    pub fn combine(&self, s: C64, other: &PolynomialKernel, t: C64) -> Result<PolynomialKernel> {
        if self.d != other.d {
            return Err(Error::ShapeMismatch("kernels must share dimension".into()));
        }
        let mut entries: Vec<((MultiIndex, MultiIndex), C64)> = Vec::new();
        for ((a, b), v) in &self.coeffs {
            entries.push(((a.clone(), b.clone()), v * s));
        }
        for ((a, b), v) in &other.coeffs {
            entries.push(((a.clone(), b.clone()), v * t));
        }
        PolynomialKernel::new(self.d, entries)
    }

    /// Variable substitution xi -> s*xi, eta -> s*eta on the
    /// coefficient table.
    pub fn rescale(&self, s: f64) -> PolynomialKernel {
        let coeffs = self
            .coeffs
            .iter()
            .map(|((a, b), v)| {
                let pow = s.powi((a.degree() + b.degree()) as i32);
                ((a.clone(), b.clone()), v * C64::new(pow, 0.0))
            })
            .collect();
        PolynomialKernel {
            d: self.d,
            coeffs,
        }
    }
}

/// Partition of the coefficient support by total degree
/// m = |alpha| + |beta|; reassembly is exact by construction.
pub fn homogeneous_parts(
    k: &PolynomialKernel,
) -> BTreeMap<usize, Vec<((MultiIndex, MultiIndex), C64)>> {
    let mut parts: BTreeMap<usize, Vec<((MultiIndex, MultiIndex), C64)>> = BTreeMap::new();
    for ((a, b), v) in &k.coeffs {
        parts
            .entry(a.degree() + b.degree())
            .or_default()
            .push(((a.clone(), b.clone()), *v));
    }
    parts
}

fn eval_part(part: &[((MultiIndex, MultiIndex), C64)], xi: &CVec, eta: &CVec) -> C64 {
    part.iter()
        .map(|((a, b), v)| v * a.monomial(xi).conj() * b.monomial(eta))
        .sum()
}

/// Sampled Cauchy-bound report: per-degree sup estimates of the
/// homogeneous parts against C / rho^m, and the summed square bound.
/// All verdicts are sampled, never proved.
#[derive(Debug, Clone)]
pub struct CauchyReport {
    /// (degree, sampled norm, bound, within bound)
    pub per_degree: Vec<(usize, f64, f64, bool)>,
    pub sum_of_squares: f64,
    pub c_prime: f64,
    pub pass: bool,
}

/// Checks the sampled sup of each homogeneous part on the unit sphere
/// against C / rho^m, assuming sup |K| <= C on the bidisc of radius
/// rho > 1, plus the summed bound with C' = C^2 / (1 - 1/rho^2).
pub fn cauchy_bound_check(
    k: &PolynomialKernel,
    c: f64,
    rho: f64,
    samples: &[(CVec, CVec)],
) -> Result<CauchyReport> {
    if rho <= 1.0 {
        return Err(Error::InvalidInput("rho must exceed 1".into()));
    }
    let parts = homogeneous_parts(k);
    let mut per_degree = Vec::new();
    let mut sum_of_squares = 0.0_f64;
    let mut pass = true;
    for (m, part) in &parts {
        let mut norm = 0.0_f64;
        for (xi, eta) in samples {
            let (xu, eu) = (xi / C64::new(xi.norm(), 0.0), eta / C64::new(eta.norm(), 0.0));
            norm = norm.max(eval_part(part, &xu, &eu).norm());
        }
        let bound = c / rho.powi(*m as i32);
        let ok = norm <= bound + 1e-12;
        pass &= ok;
        sum_of_squares += norm * norm;
        per_degree.push((*m, norm, bound, ok));
    }
    let c_prime = c * c / (1.0 - 1.0 / (rho * rho));
    pass &= sum_of_squares <= c_prime + 1e-12;
    Ok(CauchyReport {
        per_degree,
        sum_of_squares,
        c_prime,
        pass,
    })
}

/// Weighted H^2 model on the truncated monomial scale: the operator P
/// in the orthonormal monomial basis, with
/// `K(xi,eta) = <P a_xi, a_eta>` for the kernel it was assembled from.
#[derive(Debug, Clone)]
pub struct H2Model {
    pub fock: TruncatedFock,
    pub p: HermitianMatrix,
}

impl H2Model {
    /// Orthonormal-basis coordinates of a_xi: conj of the Fock
    /// embedding, sqrt(w_alpha) conj(xi^alpha).
    pub fn a_vector(&self, xi: &CVec) -> Result<CVec> {
        Ok(fock_embed(&self.fock, xi)?.conjugate())
    }

    /// <P a_xi, a_eta> in the H^2 inner product.
    pub fn pairing(&self, xi: &CVec, eta: &CVec) -> Result<C64> {
        let ax = self.a_vector(xi)?;
        let ae = self.a_vector(eta)?;
        Ok((ae.adjoint() * self.p.matrix() * ax)[(0, 0)])
    }

    pub fn signature(&self) -> Result<Signature> {
        specalg::signature(&self.p)
    }
}

/// Assembles P from the coefficient table: in the orthonormal monomial
/// basis, `P[beta,alpha] = c_{alpha,beta} / sqrt(w_alpha w_beta)`, and
/// validates the defining identity against a sampling oracle on the
/// ball of radius 0.5.
pub fn assemble_p(k: &PolynomialKernel, m: usize) -> Result<H2Model> {
    k.require_hermitian()?;
    if k.support_degree() > m {
        return Err(Error::OutOfDomain(format!(
            "coefficient support degree {} exceeds truncation {m}",
            k.support_degree()
        )));
    }
    let fock = TruncatedFock::new(k.d, m)?;
    let dim = fock.dim();
    let mut p = CMat::zeros(dim, dim);
    for ((a, b), v) in &k.coeffs {
        let ia = fock.index_of(a).unwrap();
        let ib = fock.index_of(b).unwrap();
        p[(ib, ia)] += v / C64::new((a.weight() * b.weight()).sqrt(), 0.0);
    }
    let model = H2Model {
        fock,
        p: HermitianMatrix::new(p)?,
    };
    // sampling oracle: the entry formula must reproduce K on a grid
    let scale = k
        .coeffs
        .values()
        .map(|v| v.norm())
        .fold(0.0, f64::max)
        .max(1.0);
    for (xi, eta) in sample_grid(k.d, 7) {
        let lhs = model.pairing(&xi, &eta)?;
        let rhs = k.eval(&xi, &eta)?;
        if (lhs - rhs).norm() > 1e-9 * scale {
            return Err(Error::InconsistentSystem {
                what: "H^2 operator entry formula against the sampling oracle".into(),
                residual: (lhs - rhs).norm(),
            });
        }
    }
    Ok(model)
}

/// Deterministic sample pairs inside the ball of radius 0.5.
fn sample_grid(d: usize, count: usize) -> Vec<(CVec, CVec)> {
    (0..count)
        .map(|s| {
            let point = |salt: usize| {
                let v = CVec::from_fn(d, |i, _| {
                    let t = ((s * d + i + salt) as f64 * 0.7391 + 0.21).sin();
                    let u = ((s * d + i + salt) as f64 * 1.3177 + 0.53).cos();
                    C64::new(t, u)
                });
                let n = v.norm();
                v * C64::new(0.45 / n.max(1e-9), 0.0)
            };
            (point(1), point(1000))
        })
        .collect()
}

/// Holomorphic linearization: polynomial factor V with
/// `K(xi,eta) = V(xi)* J V(eta)`, stored as a coefficient table over
/// the monomial basis.
#[derive(Debug, Clone)]
pub struct HolomorphicLinearization {
    pub fock: TruncatedFock,
    /// k x dim; column alpha holds the coefficient of xi^alpha in V.
    pub coeffs: CMat,
    pub j: Vec<i8>,
}

impl HolomorphicLinearization {
    pub fn model_dim(&self) -> usize {
        self.j.len()
    }

    pub fn j_matrix(&self) -> CMat {
        CMat::from_diagonal(&CVec::from_iterator(
            self.j.len(),
            self.j.iter().map(|&s| C64::new(s as f64, 0.0)),
        ))
    }

    /// V(xi) by direct monomial evaluation.
    pub fn eval(&self, xi: &CVec) -> Result<CVec> {
        if xi.len() != self.fock.d() {
            return Err(Error::ShapeMismatch("point must have d coordinates".into()));
        }
        let mono = CVec::from_iterator(
            self.fock.dim(),
            self.fock.basis().iter().map(|a| a.monomial(xi)),
        );
        Ok(&self.coeffs * mono)
    }

    /// V(xi)* J V(eta).
    pub fn reconstruct(&self, xi: &CVec, eta: &CVec) -> Result<C64> {
        let vx = self.eval(xi)?;
        let ve = self.eval(eta)?;
        Ok((vx.adjoint() * self.j_matrix() * ve)[(0, 0)])
    }

    pub fn signature(&self) -> Signature {
        let plus = self.j.iter().filter(|&&s| s == 1).count();
        Signature {
            plus,
            minus: self.j.len() - plus,
            zero: 0,
        }
    }
}

/// Jordan-split linearization of a hermitian polynomial kernel through
/// the H^2 operator: with P = Q Lambda Q*, the factor is
/// `V(xi) = |Lambda|^{1/2} Q^T b_xi` where b_xi is the Fock embedding;
/// the coordinates are polynomials of degree <= M.
pub fn holomorphic_linearize(k: &PolynomialKernel, m: usize) -> Result<HolomorphicLinearization> {
    let model = assemble_p(k, m)?;
    let dec = specalg::eig_hermitian_default(&model.p)?;
    let kept: Vec<usize> = (0..dec.eigenvalues.len())
        .filter(|&i| dec.eigenvalues[i].abs() > dec.rank_tol)
        .collect();
    let kdim = kept.len();
    let dim = model.fock.dim();
    // row t of coeffs: sqrt|lambda_t| (Q^T row t) scaled by the
    // occupation weights folded into the monomial coefficients
    let mut coeffs = CMat::zeros(kdim, dim);
    let mut j = Vec::with_capacity(kdim);
    for (t, &ei) in kept.iter().enumerate() {
        let lam = dec.eigenvalues[ei];
        j.push(if lam >= 0.0 { 1 } else { -1 });
        let w = lam.abs().sqrt();
        for (col, a) in model.fock.basis().iter().enumerate() {
            // (Q^T)[t, col] = Q[col, t]; b_xi[col] = sqrt(w_alpha) xi^alpha
            coeffs[(t, col)] =
                dec.eigenvectors[(col, ei)] * C64::new(w * a.weight().sqrt(), 0.0);
        }
    }
    let lin = HolomorphicLinearization {
        fock: model.fock.clone(),
        coeffs,
        j,
    };
    // sampled reconstruction: exact for polynomial kernels
    for (xi, eta) in sample_grid(k.d, 5) {
        let lhs = lin.reconstruct(&xi, &eta)?;
        let rhs = k.eval(&xi, &eta)?;
        if (lhs - rhs).norm() > 1e-8 {
            return Err(Error::InconsistentSystem {
                what: "holomorphic linearization reconstruction".into(),
                residual: (lhs - rhs).norm(),
            });
        }
    }
    Ok(lin)
}

/// Holomorphic contraction dilation: polynomial factor V and a
/// contraction U with `K(xi,eta) = V(xi)* U V(eta)`.
#[derive(Debug, Clone)]
pub struct HolomorphicDilation {
    pub fock: TruncatedFock,
    pub coeffs: CMat,
    pub u: CMat,
}

impl HolomorphicDilation {
    pub fn model_dim(&self) -> usize {
        self.u.nrows()
    }

    pub fn eval(&self, xi: &CVec) -> Result<CVec> {
        let mono = CVec::from_iterator(
            self.fock.dim(),
            self.fock.basis().iter().map(|a| a.monomial(xi)),
        );
        Ok(&self.coeffs * mono)
    }

    pub fn reconstruct(&self, xi: &CVec, eta: &CVec) -> Result<C64> {
        let vx = self.eval(xi)?;
        let ve = self.eval(eta)?;
        Ok((vx.adjoint() * &self.u * ve)[(0, 0)])
    }

    pub fn u_norm(&self) -> f64 {
        if self.model_dim() == 0 {
            0.0
        } else {
            self.u.clone().svd(false, false).singular_values.max()
        }
    }
}

/// Splits an arbitrary polynomial kernel into hermitian parts
/// K = K1 + i K2, linearizes both, stacks the polynomial factors, and
/// compresses diag(J1, i J2) to the coefficient column span.
pub fn holomorphic_contraction_dilate(
    k: &PolynomialKernel,
    m: usize,
) -> Result<HolomorphicDilation> {
    let adj = k.adjoint();
    let half = C64::new(0.5, 0.0);
    let k1 = k.combine(half, &adj, half)?;
    let k2 = k.combine(C64::new(0.0, -0.5), &adj, C64::new(0.0, 0.5))?;
    let l1 = holomorphic_linearize(&k1, m)?;
    let l2 = holomorphic_linearize(&k2, m)?;
    let (k1d, k2d) = (l1.model_dim(), l2.model_dim());
    let fock = TruncatedFock::new(k.d, m)?;
    let dim = fock.dim();
    let mut stack = CMat::zeros(k1d + k2d, dim);
    stack.view_mut((0, 0), (k1d, dim)).copy_from(&l1.coeffs);
    stack.view_mut((k1d, 0), (k2d, dim)).copy_from(&l2.coeffs);

    let q = if k1d + k2d == 0 {
        CMat::zeros(0, 0)
    } else {
        let rt = specalg::default_rank_tol(k1d + k2d, norm_max(&stack).max(1.0));
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

    let mut dmat = CMat::zeros(k1d + k2d, k1d + k2d);
    for (i, &s) in l1.j.iter().enumerate() {
        dmat[(i, i)] = C64::new(s as f64, 0.0);
    }
    for (i, &s) in l2.j.iter().enumerate() {
        dmat[(k1d + i, k1d + i)] = C64::new(0.0, s as f64);
    }
    let dil = HolomorphicDilation {
        fock,
        coeffs: q.adjoint() * &stack,
        u: q.adjoint() * &dmat * &q,
    };
    for (xi, eta) in sample_grid(k.d, 5) {
        let lhs = dil.reconstruct(&xi, &eta)?;
        let rhs = k.eval(&xi, &eta)?;
        if (lhs - rhs).norm() > 1e-8 {
            return Err(Error::InconsistentSystem {
                what: "holomorphic contraction dilation reconstruction".into(),
                residual: (lhs - rhs).norm(),
            });
        }
    }
    Ok(dil)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn cv(parts: &[f64]) -> CVec {
        CVec::from_iterator(parts.len(), parts.iter().map(|&x| r(x)))
    }

    fn random_ball_point(d: usize, radius: f64, rng: &mut ChaCha8Rng) -> CVec {
        let v = CVec::from_fn(d, |_, _| {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let n = v.norm();
        v * C64::new(radius * rng.gen_range(0.1..1.0) / n.max(1e-12), 0.0)
    }

    #[test]
    fn szego_values() {
        let zero = cv(&[0.0]);
        assert!((szego(&zero, &zero).unwrap() - r(1.0)).norm() < 1e-15);
        let half = cv(&[0.5]);
        assert!((szego(&half, &half).unwrap() - r(4.0 / 3.0)).norm() < 1e-12);
        // orthogonal points
        let e1 = CVec::from_iterator(2, [r(0.7), r(0.0)]);
        let e2 = CVec::from_iterator(2, [r(0.0), r(0.7)]);
        assert!((szego(&e1, &e2).unwrap() - r(1.0)).norm() < 1e-15);
        // domain guard
        assert!(matches!(szego(&cv(&[1.0]), &zero), Err(Error::Domain(_))));
    }

    #[test]
    fn basis_dimension_and_order() {
        let f = TruncatedFock::new(2, 2).unwrap();
        assert_eq!(f.dim(), 6); // C(4,2)
        let degs: Vec<usize> = f.basis().iter().map(|a| a.degree()).collect();
        assert_eq!(degs, vec![0, 1, 1, 2, 2, 2]);
        assert_eq!(f.basis()[1].0, vec![0, 1]);
        assert_eq!(f.basis()[2].0, vec![1, 0]);
    }

    #[test]
    fn fock_embed_examples() {
        let f1 = TruncatedFock::new(1, 2).unwrap();
        let zero = fock_embed(&f1, &cv(&[0.0])).unwrap();
        assert!((zero[0] - r(1.0)).norm() < 1e-15);
        assert!(zero.rows(1, 2).norm() < 1e-15);

        let v = fock_embed(&f1, &cv(&[0.5])).unwrap();
        assert!((v[0] - r(1.0)).norm() < 1e-15);
        assert!((v[1] - r(0.5)).norm() < 1e-15);
        assert!((v[2] - r(0.25)).norm() < 1e-15);

        // d=2: alpha = (1,1) coordinate is sqrt(2) a b
        let f2 = TruncatedFock::new(2, 2).unwrap();
        let (a, b) = (0.3, 0.4);
        let v = fock_embed(&f2, &cv(&[a, b])).unwrap();
        let i11 = f2.index_of(&MultiIndex(vec![1, 1])).unwrap();
        assert!((v[i11] - r(2.0_f64.sqrt() * a * b)).norm() < 1e-14);
    }

    #[test]
    fn degreewise_norm_identity() {
        let f = TruncatedFock::new(3, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..5 {
            let xi = random_ball_point(3, 0.9, &mut rng);
            let v = fock_embed(&f, &xi).unwrap();
            for n in 0..=4 {
                let sum: f64 = f
                    .basis()
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.degree() == n)
                    .map(|(i, _)| v[i].norm_sqr())
                    .sum();
                assert!((sum - xi.norm().powi(2 * n as i32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn degreewise_inner_product_identity() {
        let f = TruncatedFock::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let xi = random_ball_point(2, 0.8, &mut rng);
        let eta = random_ball_point(2, 0.8, &mut rng);
        let vx = fock_embed(&f, &xi).unwrap();
        let ve = fock_embed(&f, &eta).unwrap();
        // <eta, xi> linear in first argument
        let inner = (xi.adjoint() * &eta)[(0, 0)];
        for n in 0..=4 {
            let slice: C64 = f
                .basis()
                .iter()
                .enumerate()
                .filter(|(_, a)| a.degree() == n)
                .map(|(i, _)| ve[i] * vx[i].conj())
                .sum();
            assert!((slice - inner.powu(n as u32)).norm() < 1e-12);
        }
    }

    #[test]
    fn szego_truncation_bounds() {
        let f = TruncatedFock::new(1, 10).unwrap();
        let zero = cv(&[0.0]);
        let rep = szego_truncation_check(&f, &zero, &zero).unwrap();
        assert!(rep.error < 1e-15);

        let half = cv(&[0.5]);
        let rep = szego_truncation_check(&f, &half, &half).unwrap();
        let expected_bound = 0.25_f64.powi(11) / 0.75;
        assert!((rep.error_bound - expected_bound).abs() < 1e-12);
        assert!(rep.error <= rep.error_bound);

        let near = cv(&[0.95]);
        let rep_near = szego_truncation_check(&f, &near, &near).unwrap();
        assert!(rep_near.error_bound > rep.error_bound);
        assert!(rep_near.error <= rep_near.error_bound);
    }

    #[test]
    fn symmetrizer_small_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // n = 1: identity
        let xi = random_ball_point(2, 0.9, &mut rng);
        let eta = random_ball_point(2, 0.9, &mut rng);
        let rep = symmetrizer_check(1, 2, &xi, &eta).unwrap();
        assert!(rep.pass && rep.rank == 2);
        // n = 2, d = 2: rank 3 projector
        let rep = symmetrizer_check(2, 2, &xi, &eta).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.rank, 3);
        // n = 3, d = 3
        let xi = random_ball_point(3, 0.9, &mut rng);
        let eta = random_ball_point(3, 0.9, &mut rng);
        let rep = symmetrizer_check(3, 3, &xi, &eta).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.rank, 10); // C(5,2)
    }

    #[test]
    fn totality_exact() {
        let f = TruncatedFock::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let xi = random_ball_point(2, 0.8, &mut rng);
        for n in 0..=3 {
            let rep = totality_derivative_check(&f, &xi, n).unwrap();
            assert!(rep.pass, "n={n} {rep:?}");
        }
        assert!(matches!(
            totality_derivative_check(&f, &xi, 4),
            Err(Error::OutOfDomain(_))
        ));
    }

    fn mi(v: &[usize]) -> MultiIndex {
        MultiIndex(v.to_vec())
    }

    /// Truncated Szego kernel as a coefficient table.
    fn szego_partial(d: usize, m: usize) -> PolynomialKernel {
        let coeffs = enumerate_multi_indices(d, m)
            .into_iter()
            .map(|a| {
                let w = r(a.weight());
                ((a.clone(), a), w)
            })
            .collect::<Vec<_>>();
        PolynomialKernel::new_hermitian(d, coeffs).unwrap()
    }

    #[test]
    fn homogeneous_part_examples() {
        let constant = PolynomialKernel::new_hermitian(
            1,
            [((mi(&[0]), mi(&[0])), r(3.0))],
        )
        .unwrap();
        let parts = homogeneous_parts(&constant);
        assert_eq!(parts.keys().copied().collect::<Vec<_>>(), vec![0]);

        let line = PolynomialKernel::new_hermitian(
            1,
            [((mi(&[1]), mi(&[1])), r(1.0))],
        )
        .unwrap();
        let parts = homogeneous_parts(&line);
        assert_eq!(parts.keys().copied().collect::<Vec<_>>(), vec![2]);

        let k = szego_partial(2, 2);
        let parts = homogeneous_parts(&k);
        let total: usize = parts.values().map(Vec::len).sum();
        assert_eq!(total, k.coeffs().len());
    }

    #[test]
    fn cauchy_bounds_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let samples: Vec<(CVec, CVec)> = (0..32)
            .map(|_| {
                (
                    random_ball_point(1, 0.9, &mut rng),
                    random_ball_point(1, 0.9, &mut rng),
                )
            })
            .collect();
        let k = szego_partial(1, 4);
        // |S_4| <= sum rho^{2m} = (1 - rho^10)/(1 - rho^2) on the bidisc
        let rho = 1.2_f64;
        let c = (rho.powi(10) - 1.0) / (rho * rho - 1.0);
        let rep = cauchy_bound_check(&k, c, rho, &samples).unwrap();
        assert!(rep.pass, "{rep:?}");

        // constant kernel
        let constant =
            PolynomialKernel::new_hermitian(1, [((mi(&[0]), mi(&[0])), r(0.5))]).unwrap();
        let rep = cauchy_bound_check(&constant, 1.0, 1.5, &samples).unwrap();
        assert!(rep.pass);

        // scaled violation: same C, kernel multiplied by 1/eps
        let big = constant.combine(r(100.0), &constant, r(0.0)).unwrap();
        let rep = cauchy_bound_check(&big, 1.0, 1.5, &samples).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn assemble_p_examples() {
        // K = 1: rank one on the constants
        let one = PolynomialKernel::new_hermitian(1, [((mi(&[0]), mi(&[0])), r(1.0))]).unwrap();
        let model = assemble_p(&one, 2).unwrap();
        let xi = cv(&[0.3]);
        assert!((model.pairing(&xi, &xi).unwrap() - r(1.0)).norm() < 1e-12);

        // K = conj(xi) eta on d = 1
        let line = PolynomialKernel::new_hermitian(1, [((mi(&[1]), mi(&[1])), r(1.0))]).unwrap();
        let model = assemble_p(&line, 2).unwrap();
        assert!((model.pairing(&xi, &xi).unwrap() - r(0.09)).norm() < 1e-12);

        // indefinite: conj(xi) eta - 1 has signature (1,1)
        let indef = PolynomialKernel::new_hermitian(
            1,
            [
                ((mi(&[1]), mi(&[1])), r(1.0)),
                ((mi(&[0]), mi(&[0])), r(-1.0)),
            ],
        )
        .unwrap();
        let model = assemble_p(&indef, 2).unwrap();
        let sig = model.signature().unwrap();
        assert_eq!((sig.plus, sig.minus), (1, 1));
    }

    #[test]
    fn assemble_p_degree_overflow() {
        let k = PolynomialKernel::new_hermitian(1, [((mi(&[3]), mi(&[3])), r(1.0))]).unwrap();
        assert!(matches!(assemble_p(&k, 2), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn linearize_psd_kernel() {
        let k = szego_partial(2, 2);
        let lin = holomorphic_linearize(&k, 2).unwrap();
        assert!(lin.j.iter().all(|&s| s == 1));
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let xi = random_ball_point(2, 0.5, &mut rng);
        let eta = random_ball_point(2, 0.5, &mut rng);
        let lhs = lin.reconstruct(&xi, &eta).unwrap();
        let rhs = k.eval(&xi, &eta).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn linearize_indefinite_kernel() {
        let k = PolynomialKernel::new_hermitian(
            1,
            [
                ((mi(&[1]), mi(&[1])), r(1.0)),
                ((mi(&[0]), mi(&[0])), r(-1.0)),
            ],
        )
        .unwrap();
        let lin = holomorphic_linearize(&k, 2).unwrap();
        assert_eq!(lin.model_dim(), 2);
        let sig = lin.signature();
        assert_eq!((sig.plus, sig.minus), (1, 1));
        let p = cv(&[0.3]);
        assert!((lin.reconstruct(&p, &p).unwrap() - r(-0.91)).norm() < 1e-12);
    }

    #[test]
    fn linearize_matches_fock_route() {
        // truncated Szego minus vacuum term
        let m = 3;
        let full = szego_partial(1, m);
        let vacuum =
            PolynomialKernel::new_hermitian(1, [((mi(&[0]), mi(&[0])), r(1.0))]).unwrap();
        let k = full.combine(r(1.0), &vacuum, r(-1.0)).unwrap();
        let lin = holomorphic_linearize(&k, m).unwrap();
        let f = TruncatedFock::new(1, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..4 {
            let xi = random_ball_point(1, 0.5, &mut rng);
            let eta = random_ball_point(1, 0.5, &mut rng);
            let via_lin = lin.reconstruct(&xi, &eta).unwrap();
            let vx = fock_embed(&f, &xi).unwrap();
            let ve = fock_embed(&f, &eta).unwrap();
            let via_fock = (vx.adjoint() * ve)[(0, 0)] - r(1.0);
            assert!((via_lin - via_fock).norm() < 1e-10);
        }
    }

    #[test]
    fn contraction_dilate_hermitian_reduces() {
        let k = szego_partial(1, 2);
        let dil = holomorphic_contraction_dilate(&k, 2).unwrap();
        assert!(dil.u_norm() <= 1.0 + 1e-10);
        let p = cv(&[0.4]);
        let q = cv(&[0.2]);
        assert!((dil.reconstruct(&p, &q).unwrap() - k.eval(&p, &q).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn contraction_dilate_non_hermitian() {
        // K = conj(xi_1) eta_2 on d = 2
        let k = PolynomialKernel::new(2, [((mi(&[1, 0]), mi(&[0, 1])), r(1.0))]).unwrap();
        assert!(k.require_hermitian().is_err());
        let dil = holomorphic_contraction_dilate(&k, 1).unwrap();
        assert!(dil.u_norm() <= 1.0 + 1e-10, "norm {}", dil.u_norm());
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..4 {
            let xi = random_ball_point(2, 0.5, &mut rng);
            let eta = random_ball_point(2, 0.5, &mut rng);
            let lhs = dil.reconstruct(&xi, &eta).unwrap();
            let rhs = k.eval(&xi, &eta).unwrap();
            assert!((lhs - rhs).norm() <= 1e-8);
        }
    }

    #[test]
    fn contraction_dilate_zero_kernel() {
        let k = PolynomialKernel::new(1, []).unwrap();
        let dil = holomorphic_contraction_dilate(&k, 1).unwrap();
        assert_eq!(dil.model_dim(), 0);
    }

    #[test]
    fn rescale_is_substitution() {
        let k = szego_partial(2, 2);
        let s = 0.6;
        let scaled = k.rescale(s);
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let xi = random_ball_point(2, 0.9, &mut rng);
        let eta = random_ball_point(2, 0.9, &mut rng);
        let lhs = scaled.eval(&xi, &eta).unwrap();
        let rhs = k
            .eval(&(&xi * r(s)), &(&eta * r(s)))
            .unwrap();
        assert!((lhs - rhs).norm() < 1e-12);
    }
}
