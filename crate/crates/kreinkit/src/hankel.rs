//! Words over the free unital semigroup on N generators, moment
//! sequences with the reversal involution, Hankel kernels
//! `K(sigma,tau) = s_{I(sigma) tau}`, truncated Hamburger feasibility,
//! and the truncated GNS construction with moment recovery.

use crate::kernel::{schwartz_check, schwartz_minimal, uniqueness_gap, FiniteKernel, UniquenessGap};
use crate::kolmogorov::{decompose, KolmogorovDecomposition};
use crate::specalg::{norm_max, PSD_TOL};
use crate::{C64, CMat, CVec, Error, Result};
use std::collections::HashMap;

/// A word over generators 1..=N; the empty word is the unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(pub Vec<usize>);

impl Word {
    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Letter reversal, the involution of the free semigroup.
    pub fn involution(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Juxtaposition `self . other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Canonical label: "e" for the empty word, else letters joined
    /// with '.', e.g. "1.2".
    pub fn label(&self) -> String {
        if self.0.is_empty() {
            "e".to_string()
        } else {
            self.0
                .iter()
                .map(|l| l.to_string())
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    /// Parses a label produced by [`label`](Self::label).
    pub fn parse(label: &str) -> Result<Word> {
        if label == "e" {
            return Ok(Word::empty());
        }
        let letters = label
            .split('.')
            .map(|p| {
                p.parse::<usize>()
                    .ok()
                    .filter(|&l| l >= 1)
                    .ok_or_else(|| Error::InvalidInput(format!("bad word label '{label}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word(letters))
    }
}

/// All words of length <= d over generators 1..=n, ordered by length
/// then lexicographically. Count is (n^{d+1}-1)/(n-1) for n > 1.
pub fn enumerate_words(n: usize, d: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    let mut layer = vec![Word::empty()];
    for _ in 0..d {
        let mut next = Vec::with_capacity(layer.len() * n);
        for w in &layer {
            for g in 1..=n {
                let mut v = w.0.clone();
                v.push(g);
                next.push(Word(v));
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Moments s_sigma for all words of length <= 2d, hermitian under word
/// reversal: s_{I(sigma)} = conj(s_sigma).
#[derive(Debug, Clone)]
pub struct MomentSequence {
    n: usize,
    d: usize,
    values: HashMap<Word, C64>,
}

impl MomentSequence {
    pub fn new(n: usize, d: usize, values: HashMap<Word, C64>) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidInput("generator count must be >= 1".into()));
        }
        for w in enumerate_words(n, 2 * d) {
            let s = values
                .get(&w)
                .ok_or_else(|| Error::MissingMoment { word: w.label() })?;
            let si = values
                .get(&w.involution())
                .ok_or_else(|| Error::MissingMoment {
                    word: w.involution().label(),
                })?;
            let defect = (si - s.conj()).norm();
            if defect > 1e-10 * f64::max(1.0, s.norm()) {
                return Err(Error::NonHermitianMoments {
                    word: w.label(),
                    defect,
                });
            }
        }
        Ok(Self { n, d, values })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn value(&self, w: &Word) -> Result<C64> {
        self.values
            .get(w)
            .copied()
            .ok_or_else(|| Error::MissingMoment { word: w.label() })
    }
}

/// Hankel kernel of a moment sequence: labels are the words of length
/// <= d, h = 1, and `K(sigma, tau) = s_{I(sigma) tau}`.
pub fn hankel_kernel(m: &MomentSequence) -> Result<FiniteKernel> {
    let words = enumerate_words(m.n, m.d);
    let dim = words.len();
    let mut g = CMat::zeros(dim, dim);
    for (x, sigma) in words.iter().enumerate() {
        for (y, tau) in words.iter().enumerate() {
            g[(x, y)] = m.value(&sigma.involution().concat(tau))?;
        }
    }
    let labels = words.iter().map(Word::label).collect();
    FiniteKernel::from_gram(labels, 1, &g)
}

/// Result of checking the Hankel identity `K(sigma, beta tau) =
/// K(I(beta) sigma, tau)` for all triples inside the truncation.
#[derive(Debug, Clone)]
pub struct HankelReport {
    pub pass: bool,
    pub max_defect: f64,
    /// Violating triples (sigma, beta, tau), at most the first 16.
    pub violations: Vec<(String, String, String)>,
}

/// Checks the Hankel identity on a word-labeled kernel up to `depth`.
pub fn verify_hankel(k: &FiniteKernel, n: usize, depth: usize) -> Result<HankelReport> {
    if k.h() != 1 {
        return Err(Error::ShapeMismatch("Hankel kernels are scalar (h = 1)".into()));
    }
    let words: Vec<Word> = k
        .labels()
        .iter()
        .map(|l| Word::parse(l))
        .collect::<Result<_>>()?;
    let index: HashMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();
    let betas: Vec<Word> = enumerate_words(n, depth)
        .into_iter()
        .filter(|w| !w.is_empty())
        .collect();
    let mut max_defect = 0.0_f64;
    let mut violations = Vec::new();
    for beta in &betas {
        let ibeta = beta.involution();
        for (x, sigma) in words.iter().enumerate() {
            let Some(&xx) = index.get(&ibeta.concat(sigma)) else {
                continue;
            };
            for (y, tau) in words.iter().enumerate() {
                let Some(&yy) = index.get(&beta.concat(tau)) else {
                    continue;
                };
                let defect = (k.block(x, yy)[(0, 0)] - k.block(xx, y)[(0, 0)]).norm();
                if defect > 1e-12 {
                    max_defect = max_defect.max(defect);
                    if violations.len() < 16 {
                        violations.push((sigma.label(), beta.label(), tau.label()));
                    }
                }
            }
        }
    }
    Ok(HankelReport {
        pass: violations.is_empty(),
        max_defect,
        violations,
    })
}

/// Truncated Hamburger feasibility: the verdict, the Schwartz witness
/// L, and the certified bounds.
#[derive(Debug, Clone)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: FiniteKernel,
    pub min_eig_minus: f64,
    pub min_eig_plus: f64,
}

/// At finite truncation every valid moment sequence is feasible; the
/// witness is the minimal Schwartz majorant of the Hankel kernel, and
/// both Schwartz bounds are re-certified numerically.
pub fn hamburger_feasible(m: &MomentSequence) -> Result<Feasibility> {
    let k = hankel_kernel(m)?;
    let l = schwartz_minimal(&k)?;
    let report = schwartz_check(&k, &l, PSD_TOL)?;
    Ok(Feasibility {
        feasible: report.verdict,
        witness: l,
        min_eig_minus: report.min_eig_minus,
        min_eig_plus: report.min_eig_plus,
    })
}

/// Truncated GNS data: decomposition over words of length <= d, cyclic
/// vector Omega = V(empty), and compressed multiplication operators
/// pi(Y_k) defined on span{V(tau) : |tau| <= d-1}.
#[derive(Debug, Clone)]
pub struct TruncatedGNS {
    pub decomposition: KolmogorovDecomposition,
    pub omega: CVec,
    /// pi[k-1] is the compressed operator of generator k.
    pub pi: Vec<CMat>,
    pub domain_depth: usize,
    n: usize,
}

impl TruncatedGNS {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Applies pi(Y_sigma) to Omega by peeling letters right to left;
    /// valid for |sigma| <= domain_depth.
    pub fn apply_word(&self, sigma: &Word) -> Result<CVec> {
        if sigma.len() > self.domain_depth {
            return Err(Error::OutOfDomain(format!(
                "word {} exceeds truncation depth {}",
                sigma.label(),
                self.domain_depth
            )));
        }
        let mut v = self.omega.clone();
        for &letter in sigma.0.iter().rev() {
            if letter < 1 || letter > self.n {
                return Err(Error::InvalidInput(format!("letter {letter} out of range")));
            }
            v = &self.pi[letter - 1] * v;
        }
        Ok(v)
    }
}

/// Builds the truncated GNS data from a moment sequence. The operators
/// pi(Y_k) are solved from `pi(Y_k) V(tau) = V(g_k tau)` on the span of
/// factors of words of length <= d-1 and extended by zero.
pub fn gns_build(m: &MomentSequence) -> Result<TruncatedGNS> {
    let k = hankel_kernel(m)?;
    let d = decompose(&k, None)?;
    let words = enumerate_words(m.n, m.d);
    let kdim = d.model_dim();
    let omega = if kdim == 0 {
        CVec::zeros(0)
    } else {
        d.factor_for("e").unwrap().column(0).into_owned()
    };

    // domain columns: V(tau) for |tau| <= d-1
    let domain: Vec<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| m.d > 0 && w.len() + 1 <= m.d)
        .map(|(i, _)| i)
        .collect();
    let mut s = CMat::zeros(kdim, domain.len());
    for (c, &i) in domain.iter().enumerate() {
        s.set_column(c, &d.factor(i).column(0));
    }
    let pinv = if kdim == 0 || domain.is_empty() {
        CMat::zeros(domain.len(), kdim)
    } else {
        s.clone()
            .pseudo_inverse(d.rank_tol().max(1e-12))
            .map_err(|e| Error::InconsistentSystem {
                what: format!("pseudoinverse of GNS domain span: {e}"),
                residual: f64::NAN,
            })?
    };

    let scale = norm_max(&s).max(1.0);
    let mut pi = Vec::with_capacity(m.n);
    for g in 1..=m.n {
        let mut t = CMat::zeros(kdim, domain.len());
        for (c, &i) in domain.iter().enumerate() {
            let mut shifted = vec![g];
            shifted.extend_from_slice(&words[i].0);
            let dst = words.iter().position(|w| w.0 == shifted).unwrap();
            t.set_column(c, &d.factor(dst).column(0));
        }
        let op = &t * &pinv;
        let residual = norm_max(&(&op * &s - &t));
        if residual > 1e-8 * scale {
            return Err(Error::InconsistentSystem {
                what: format!("compressed shift of generator {g}"),
                residual,
            });
        }
        pi.push(op);
    }

    Ok(TruncatedGNS {
        decomposition: d,
        omega,
        pi,
        domain_depth: m.d,
        n: m.n,
    })
}

/// Recovers s_sigma = [pi(Y_sigma) Omega, Omega] for |sigma| <= d.
pub fn moment_recover(g: &TruncatedGNS, sigma: &Word) -> Result<C64> {
    let v = g.apply_word(sigma)?;
    if g.omega.is_empty() {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok((g.omega.adjoint() * g.decomposition.j_matrix() * v)[(0, 0)])
}

/// Spectral-gap uniqueness certificate for the pair (K_Sigma, L).
pub fn uniqueness_certificate(
    m: &MomentSequence,
    l: &FiniteKernel,
    rank_tol: Option<f64>,
) -> Result<UniquenessGap> {
    let k = hankel_kernel(m)?;
    uniqueness_gap(&k, l, rank_tol)
}
