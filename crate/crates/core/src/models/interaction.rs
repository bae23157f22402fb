use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, C64};
use crate::operator::{LocalOperator, HERMITIAN_TOL};

/// One canonical term `Phi(X)` with `X` anchored at offset 0.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionTerm {
    offsets: Vec<i64>,
    matrix: Mat<C64>,
}

impl InteractionTerm {
    pub fn offsets(&self) -> &[i64] {
        &self.offsets
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    /// Diameter `max X - min X`.
    pub fn diameter(&self) -> i64 {
        *self.offsets.last().expect("nonempty")
    }

    /// The term translated by `x`, as a local operator.
    pub fn at(&self, x: i64, site_dim: usize) -> LocalOperator {
        LocalOperator::new(
            self.offsets.iter().map(|o| o + x).collect(),
            site_dim,
            self.matrix.clone(),
        )
        .expect("validated on construction")
    }
}

/// A translation-invariant finite-range interaction.
///
/// Each translation class of site sets appears once, anchored so that its
/// smallest offset is 0. `Phi(X + x)` is the translate of the stored term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInteraction", into = "RawInteraction")]
pub struct Interaction {
    range: usize,
    site_dim: usize,
    terms: Vec<InteractionTerm>,
}

/// Complex matrix in row-major order, each entry a `[re, im]` pair.
pub(crate) type RawMatrix = Vec<[f64; 2]>;

#[derive(Serialize, Deserialize)]
struct RawTerm {
    offsets: Vec<i64>,
    matrix: RawMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawInteraction {
    range: usize,
    site_dim: usize,
    terms: Vec<RawTerm>,
}

pub(crate) fn mat_to_raw(m: &Mat<C64>) -> RawMatrix {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            out.push([v.re, v.im]);
        }
    }
    out
}

pub(crate) fn raw_to_mat(raw: &RawMatrix, dim: usize) -> Result<Mat<C64>> {
    if raw.len() != dim * dim {
        return Err(Error::DimensionMismatch {
            expected: dim * dim,
            found: raw.len(),
        });
    }
    Ok(Mat::from_fn(dim, dim, |i, j| {
        let [re, im] = raw[i * dim + j];
        C64::new(re, im)
    }))
}

impl TryFrom<RawInteraction> for Interaction {
    type Error = Error;
    fn try_from(raw: RawInteraction) -> Result<Self> {
        let terms = raw
            .terms
            .into_iter()
            .map(|t| {
                let dim = raw.site_dim.checked_pow(t.offsets.len() as u32).ok_or_else(|| {
                    Error::InvalidInteraction("term dimension overflows".into())
                })?;
                Ok((t.offsets, raw_to_mat(&t.matrix, dim)?))
            })
            .collect::<Result<Vec<_>>>()?;
        Interaction::new(raw.range, raw.site_dim, terms)
    }
}

impl From<Interaction> for RawInteraction {
    fn from(phi: Interaction) -> Self {
        RawInteraction {
            range: phi.range,
            site_dim: phi.site_dim,
            terms: phi
                .terms
                .iter()
                .map(|t| RawTerm {
                    offsets: t.offsets.clone(),
                    matrix: mat_to_raw(&t.matrix),
                })
                .collect(),
        }
    }
}

fn finite(m: &Mat<C64>) -> bool {
    (0..m.nrows()).all(|i| (0..m.ncols()).all(|j| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

impl Interaction {
    /// Validates and stores the canonical terms. Terms are kept in the order
    /// given.
    pub fn new(range: usize, site_dim: usize, terms: Vec<(Vec<i64>, Mat<C64>)>) -> Result<Self> {
        if range < 1 {
            return Err(Error::InvalidInteraction("range must be at least 1".into()));
        }
        if site_dim < 2 {
            return Err(Error::InvalidInteraction(format!("site_dim = {site_dim} < 2")));
        }
        let mut stored: Vec<InteractionTerm> = Vec::with_capacity(terms.len());
        for (offsets, matrix) in terms {
            if offsets.first() != Some(&0) {
                return Err(Error::InvalidInteraction(format!(
                    "offset set {offsets:?} is not anchored at 0"
                )));
            }
            if offsets.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInteraction(format!(
                    "offset set {offsets:?} is not strictly increasing"
                )));
            }
            let diam = *offsets.last().unwrap();
            if diam > range as i64 {
                return Err(Error::InvalidInteraction(format!(
                    "offset set {offsets:?} has diameter {diam} > range {range}"
                )));
            }
            let dim = site_dim.pow(offsets.len() as u32);
            if matrix.nrows() != dim || matrix.ncols() != dim {
                return Err(Error::InvalidInteraction(format!(
                    "term {offsets:?} needs a {dim}x{dim} matrix, got {}x{}",
                    matrix.nrows(),
                    matrix.ncols()
                )));
            }
            if !finite(&matrix) {
                return Err(Error::InvalidInteraction(format!(
                    "term {offsets:?} has non-finite entries"
                )));
            }
            let residual = linalg::hermiticity_residual(matrix.as_ref());
            if residual > HERMITIAN_TOL {
                return Err(Error::InvalidInteraction(format!(
                    "term {offsets:?} is not Hermitian (residual {residual:e})"
                )));
            }
            if stored.iter().any(|t| t.offsets == offsets) {
                return Err(Error::InvalidInteraction(format!(
                    "offset set {offsets:?} appears twice"
                )));
            }
            stored.push(InteractionTerm { offsets, matrix });
        }
        Ok(Self {
            range,
            site_dim,
            terms: stored,
        })
    }

    /// A random interaction with one Hermitian term for every offset set of
    /// diameter at most `range` (all subsets of `[0, range]` containing 0).
    /// Entries are uniform in `[-1, 1]` before symmetrisation.
    pub fn random(range: usize, site_dim: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for mask in 0u32..(1 << range) {
            let mut offsets = vec![0i64];
            offsets.extend((0..range).filter(|b| mask & (1 << b) != 0).map(|b| b as i64 + 1));
            let dim = site_dim.pow(offsets.len() as u32);
            let raw: Vec<C64> = (0..dim * dim)
                .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let m = Mat::from_fn(dim, dim, |i, j| 0.5 * (raw[i * dim + j] + raw[j * dim + i].conj()));
            terms.push((offsets, m));
        }
        Self::new(range, site_dim, terms)
    }

    pub fn range(&self) -> usize {
        self.range
    }

    pub fn site_dim(&self) -> usize {
        self.site_dim
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    /// All translates `Phi(X + x)` with `X + x` inside `[lo, hi]`.
    pub fn terms_within(&self, lo: i64, hi: i64) -> Vec<LocalOperator> {
        let mut out = Vec::new();
        for t in &self.terms {
            for x in lo..=hi - t.diameter() {
                out.push(t.at(x, self.site_dim));
            }
        }
        out
    }

    /// Largest `||Phi(X)||` over the canonical terms.
    pub fn max_term_norm(&self) -> Result<f64> {
        self.terms
            .iter()
            .map(|t| linalg::operator_norm(t.matrix.as_ref()))
            .try_fold(0.0_f64, |m, n| Ok(m.max(n?)))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialisable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// The single-site charge `n_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCharge", into = "RawCharge")]
pub struct ChargeSpec {
    n0: Mat<C64>,
}

#[derive(Serialize, Deserialize)]
struct RawCharge {
    site_dim: usize,
    n0: RawMatrix,
}

impl TryFrom<RawCharge> for ChargeSpec {
    type Error = Error;
    fn try_from(raw: RawCharge) -> Result<Self> {
        ChargeSpec::new(raw_to_mat(&raw.n0, raw.site_dim)?)
    }
}

impl From<ChargeSpec> for RawCharge {
    fn from(c: ChargeSpec) -> Self {
        RawCharge {
            site_dim: c.n0.nrows(),
            n0: mat_to_raw(&c.n0),
        }
    }
}

impl ChargeSpec {
    pub fn new(n0: Mat<C64>) -> Result<Self> {
        if n0.nrows() != n0.ncols() || n0.nrows() < 2 {
            return Err(Error::InvalidInteraction(format!(
                "charge must be a square matrix of size >= 2, got {}x{}",
                n0.nrows(),
                n0.ncols()
            )));
        }
        if !finite(&n0) {
            return Err(Error::InvalidInteraction("charge has non-finite entries".into()));
        }
        let residual = linalg::hermiticity_residual(n0.as_ref());
        if residual > HERMITIAN_TOL {
            return Err(Error::InvalidInteraction(format!(
                "charge is not Hermitian (residual {residual:e})"
            )));
        }
        Ok(Self { n0 })
    }

    pub fn n0(&self) -> &Mat<C64> {
        &self.n0
    }

    pub fn site_dim(&self) -> usize {
        self.n0.nrows()
    }

    /// `n_x` as a local operator.
    pub fn at(&self, x: i64) -> LocalOperator {
        LocalOperator::single_site(x, self.n0.clone()).expect("square")
    }

    pub fn norm(&self) -> Result<f64> {
        linalg::operator_norm(self.n0.as_ref())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("serialisable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// `V(Phi) = sup_x sum_{X ∋ x} |X| (N+1)^{2|X|} e^r ||Phi(X)||`. A canonical
/// term on `|X|` sites has exactly `|X|` translates containing a given site.
pub fn lr_velocity(phi: &Interaction) -> Result<f64> {
    let d = phi.site_dim as f64;
    let er = (phi.range as f64).exp();
    let mut v = 0.0;
    for t in &phi.terms {
        let size = t.offsets.len() as f64;
        let norm = linalg::operator_norm(t.matrix.as_ref())?;
        v += size * size * d.powf(2.0 * size) * er * norm;
    }
    Ok(v)
}
