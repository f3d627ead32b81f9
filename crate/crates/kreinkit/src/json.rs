//! Serde-facing file schemas. Complex numbers are serialized as
//! `[re, im]` pairs throughout; maps use ordered keys so that emitted
//! files are deterministic.

use crate::dilation::HermitianLinearMap;
use crate::fock::{MultiIndex, PolynomialKernel};
use crate::hankel::{MomentSequence, Word};
use crate::kernel::FiniteKernel;
use crate::kolmogorov::{Generator, KolmogorovDecomposition, SemigroupAction};
use crate::{C64, CMat, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub type Cx = [f64; 2];

fn cx(z: C64) -> Cx {
    [z.re, z.im]
}

fn uncx(p: Cx) -> C64 {
    C64::new(p[0], p[1])
}

fn matrix_to_rows(m: &CMat) -> Vec<Vec<Cx>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| cx(m[(r, c)])).collect())
        .collect()
}

fn rows_to_matrix(rows: &[Vec<Cx>], nrows: usize, ncols: usize) -> Result<CMat> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::ShapeMismatch(format!(
            "expected a {nrows}x{ncols} complex matrix"
        )));
    }
    Ok(CMat::from_fn(nrows, ncols, |r, c| uncx(rows[r][c])))
}

/// Kernel file: blocks row-major by (row label, column label), each
/// block a row-major h x h complex matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelFile {
    pub labels: Vec<String>,
    pub h: usize,
    pub hermitian: bool,
    pub blocks: Vec<Vec<Vec<Vec<Cx>>>>,
}

impl KernelFile {
    pub fn from_kernel(k: &FiniteKernel) -> Self {
        let n = k.len();
        let blocks = (0..n)
            .map(|x| (0..n).map(|y| matrix_to_rows(k.block(x, y))).collect())
            .collect();
        Self {
            labels: k.labels().to_vec(),
            h: k.h(),
            hermitian: k.is_hermitian(),
            blocks,
        }
    }

    pub fn to_kernel(&self) -> Result<FiniteKernel> {
        let n = self.labels.len();
        if self.blocks.len() != n || self.blocks.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch(
                "blocks must form an n x n grid over the labels".into(),
            ));
        }
        let mut blocks = Vec::with_capacity(n);
        for row in &self.blocks {
            let mut out = Vec::with_capacity(n);
            for b in row {
                out.push(rows_to_matrix(b, self.h, self.h)?);
            }
            blocks.push(out);
        }
        let k = FiniteKernel::new(self.labels.clone(), self.h, blocks)?;
        if self.hermitian {
            k.require_hermitian()?;
        }
        Ok(k)
    }
}

/// Decomposition file: `{ "k": int, "J": [s,...], "V": { label: k x h } }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionFile {
    pub k: usize,
    #[serde(rename = "J")]
    pub j: Vec<i8>,
    #[serde(rename = "V")]
    pub v: BTreeMap<String, Vec<Vec<Cx>>>,
}

impl DecompositionFile {
    pub fn from_decomposition(d: &KolmogorovDecomposition) -> Self {
        let v = d
            .labels()
            .iter()
            .enumerate()
            .map(|(x, l)| (l.clone(), matrix_to_rows(d.factor(x))))
            .collect();
        Self {
            k: d.model_dim(),
            j: d.j().to_vec(),
            v,
        }
    }

    /// Rebuilds the decomposition over the label order of `labels`.
    pub fn to_decomposition(
        &self,
        labels: &[String],
        h: usize,
        rank_tol: f64,
    ) -> Result<KolmogorovDecomposition> {
        if self.j.len() != self.k {
            return Err(Error::ShapeMismatch(
                "J length must equal the model dimension k".into(),
            ));
        }
        let mut factors = Vec::with_capacity(labels.len());
        for l in labels {
            let rows = self
                .v
                .get(l)
                .ok_or_else(|| Error::InvalidInput(format!("missing factor for label '{l}'")))?;
            factors.push(rows_to_matrix(rows, self.k, h)?);
        }
        KolmogorovDecomposition::new(labels.to_vec(), h, factors, self.j.clone(), rank_tol)
    }
}

/// Action file: `{ "generators": [{ name, involution, map }] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionFile {
    pub generators: Vec<GeneratorEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorEntry {
    pub name: String,
    pub involution: String,
    pub map: BTreeMap<String, String>,
}

impl ActionFile {
    pub fn from_action(a: &SemigroupAction) -> Self {
        let generators = a
            .generators()
            .iter()
            .map(|g| GeneratorEntry {
                name: g.name.clone(),
                involution: g.involution.clone(),
                map: g.map.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
            })
            .collect();
        Self { generators }
    }

    pub fn to_action(&self) -> Result<SemigroupAction> {
        SemigroupAction::new(
            self.generators
                .iter()
                .map(|g| Generator {
                    name: g.name.clone(),
                    involution: g.involution.clone(),
                    map: g.map.iter().map(|(k, v)| (k.clone(), v.clone())).collect(),
                })
                .collect(),
        )
    }
}

/// Moments file: `{ "N": int, "d": int, "entries": [{ word, value }] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentsFile {
    #[serde(rename = "N")]
    pub n: usize,
    pub d: usize,
    pub entries: Vec<MomentEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEntry {
    pub word: Vec<usize>,
    pub value: Cx,
}

impl MomentsFile {
    pub fn to_moments(&self) -> Result<MomentSequence> {
        let values = self
            .entries
            .iter()
            .map(|e| (Word(e.word.clone()), uncx(e.value)))
            .collect();
        MomentSequence::new(self.n, self.d, values)
    }
}

/// Map file: `{ "n": int, "h": int, "choi": complex matrix }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapFile {
    pub n: usize,
    pub h: usize,
    pub choi: Vec<Vec<Cx>>,
}

impl MapFile {
    pub fn from_map(t: &HermitianLinearMap) -> Self {
        Self {
            n: t.n(),
            h: t.h(),
            choi: matrix_to_rows(t.choi().matrix()),
        }
    }

    pub fn to_map(&self) -> Result<HermitianLinearMap> {
        let dim = self.n * self.h;
        HermitianLinearMap::new(self.n, self.h, rows_to_matrix(&self.choi, dim, dim)?)
    }
}

/// Polynomial-kernel file: `{ "d": int, "terms": [{ alpha, beta, value }] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyFile {
    pub d: usize,
    pub terms: Vec<PolyTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolyTerm {
    pub alpha: Vec<usize>,
    pub beta: Vec<usize>,
    pub value: Cx,
}

impl PolyFile {
    pub fn from_kernel(k: &PolynomialKernel) -> Self {
        let terms = k
            .coeffs()
            .iter()
            .map(|((a, b), v)| PolyTerm {
                alpha: a.0.clone(),
                beta: b.0.clone(),
                value: cx(*v),
            })
            .collect();
        Self { d: k.d(), terms }
    }

    pub fn to_kernel(&self) -> Result<PolynomialKernel> {
        PolynomialKernel::new(
            self.d,
            self.terms.iter().map(|t| {
                (
                    (MultiIndex(t.alpha.clone()), MultiIndex(t.beta.clone())),
                    uncx(t.value),
                )
            }),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::gram;
    use crate::kolmogorov::{decompose, verify};
    use crate::specalg::norm_max;
    use nalgebra::dmatrix;

    fn r(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn kernel_round_trip() {
        let g = dmatrix![
            r(2.0), C64::new(0.0, 1.0);
            C64::new(0.0, -1.0), r(-1.0)
        ];
        let k =
            FiniteKernel::from_gram(vec!["a".into(), "b".into()], 1, &g).unwrap();
        let file = KernelFile::from_kernel(&k);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: KernelFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_kernel().unwrap();
        assert!(norm_max(&(gram(&k).matrix() - gram(&back).matrix())) < 1e-15);
        assert!(file.hermitian);
    }

    #[test]
    fn hermitian_flag_enforced() {
        let g = dmatrix![r(0.0), r(1.0); r(0.0), r(0.0)];
        let k =
            FiniteKernel::from_gram(vec!["a".into(), "b".into()], 1, &g).unwrap();
        let mut file = KernelFile::from_kernel(&k);
        assert!(!file.hermitian);
        file.hermitian = true;
        assert!(matches!(file.to_kernel(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn decomposition_round_trip() {
        let g = dmatrix![r(1.0), r(0.0); r(0.0), r(-1.0)];
        let k =
            FiniteKernel::from_gram(vec!["x1".into(), "x2".into()], 1, &g).unwrap();
        let d = decompose(&k, None).unwrap();
        let file = DecompositionFile::from_decomposition(&d);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: DecompositionFile = serde_json::from_str(&text).unwrap();
        let back = parsed
            .to_decomposition(k.labels(), k.h(), d.rank_tol())
            .unwrap();
        assert!(verify(&back, &k, 1e-9).unwrap().pass);
    }

    #[test]
    fn moments_round_trip() {
        let file = MomentsFile {
            n: 1,
            d: 1,
            entries: vec![
                MomentEntry { word: vec![], value: [1.0, 0.0] },
                MomentEntry { word: vec![1], value: [0.0, 0.0] },
                MomentEntry { word: vec![1, 1], value: [1.0, 0.0] },
            ],
        };
        let m = file.to_moments().unwrap();
        assert_eq!(m.n(), 1);
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"N\":1"));
    }

    #[test]
    fn map_round_trip() {
        let t = HermitianLinearMap::from_action(2, 2, |i, j| {
            let mut e = CMat::zeros(2, 2);
            e[(j, i)] = r(1.0);
            e
        })
        .unwrap();
        let file = MapFile::from_map(&t);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: MapFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_map().unwrap();
        assert!(norm_max(&(back.choi().matrix() - t.choi().matrix())) < 1e-15);
    }

    #[test]
    fn poly_round_trip() {
        let k = PolynomialKernel::new_hermitian(
            2,
            [
                ((MultiIndex(vec![1, 0]), MultiIndex(vec![1, 0])), r(1.0)),
                ((MultiIndex(vec![0, 0]), MultiIndex(vec![0, 0])), r(-1.0)),
            ],
        )
        .unwrap();
        let file = PolyFile::from_kernel(&k);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: PolyFile = serde_json::from_str(&text).unwrap();
        let back = parsed.to_kernel().unwrap();
        assert_eq!(back.coeffs().len(), k.coeffs().len());
    }

    #[test]
    fn action_round_trip() {
        let a = SemigroupAction::new(vec![Generator {
            name: "e".into(),
            involution: "e".into(),
            map: [("x".to_string(), "x".to_string())].into_iter().collect(),
        }])
        .unwrap();
        let file = ActionFile::from_action(&a);
        let text = serde_json::to_string(&file).unwrap();
        let parsed: ActionFile = serde_json::from_str(&text).unwrap();
        assert!(parsed.to_action().is_ok());
    }
}
