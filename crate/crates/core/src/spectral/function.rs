use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::correlation::FREQUENCY_MERGE_TOL;
use super::for_each_pair;
use crate::basis::{fold_momentum, EigenOperator};
use crate::error::{Error, Result};
use crate::linalg::{self, C64, I};
use crate::operator::{embed_sparse, LocalOperator};
use crate::steady_state::StationaryState;

/// One atom of the spectral measure: weight at momentum transfer
/// `dk = k_m - k_n` and energy transfer `de = E_m - E_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralEntry {
    pub dk_index: usize,
    pub dk_value: f64,
    pub de: f64,
    pub weight: C64,
}

/// Spectral decomposition of `<i a^ tau_z alpha_t(b^)>` with
/// `a^ = a - omega(a)`, `b^ = b - omega(b)`:
///
/// `G(z, t) = sum w e^{-i dk z + i de t}`, and
/// `rho(z, t) = (2 pi)^{-3/2} sum w e^{i (dk z - de t)}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFunction {
    pub n_sites: usize,
    pub entries: Vec<SpectralEntry>,
    /// `|sum w - i omega(a^ b^)|`.
    pub completeness_residual: f64,
    /// `max |w_ba + conj(w_ab)|` over the atoms.
    pub pairing_residual: f64,
}

impl SpectralFunction {
    /// Requires a translation-invariant state diagonal in its joint basis.
    pub fn build(state: &StationaryState, a: &LocalOperator, b: &LocalOperator) -> Result<Self> {
        let basis = state.basis();
        if !basis.has_translation() {
            return Err(Error::NotPeriodic);
        }
        let p = state.require_diagonal()?;
        let chain = state.chain();
        let n = chain.n_sites();
        let hat = |op: &LocalOperator| -> Result<EigenOperator> {
            let mut e = basis.transform(&embed_sparse(op, chain)?)?;
            let mean = state.expectation_eigen(&e)?;
            e.add_diagonal(-mean);
            Ok(e)
        };
        let (ah, bh) = (hat(a)?, hat(b)?);
        let labels = basis.labels();
        let mut raw: Vec<(usize, f64, C64, C64)> = Vec::new();
        for_each_pair(&ah, &bh, |i, j, aij, bji| {
            let w = I * p[i] * aij * bji;
            if w != C64::new(0.0, 0.0) {
                let dq = (labels[j].q + n - labels[i].q) % n;
                raw.push((dq, labels[j].energy - labels[i].energy, w, C64::new(0.0, 0.0)));
            }
        });
        // reversed weights i p_n b_nm a_mn on the same (n, m) pairs
        for_each_pair(&bh, &ah, |i, j, bij, aji| {
            let w = I * p[i] * bij * aji;
            if w != C64::new(0.0, 0.0) {
                let dq = (labels[j].q + n - labels[i].q) % n;
                raw.push((dq, labels[j].energy - labels[i].energy, C64::new(0.0, 0.0), w));
            }
        });
        raw.sort_by(|x, y| x.0.cmp(&y.0).then(x.1.total_cmp(&y.1)));
        let mut entries = Vec::new();
        let mut pairing: f64 = 0.0;
        let mut start = 0;
        while start < raw.len() {
            let mut end = start + 1;
            while end < raw.len() && raw[end].0 == raw[start].0 && raw[end].1 - raw[start].1 <= FREQUENCY_MERGE_TOL {
                end += 1;
            }
            let group = &raw[start..end];
            let es: Vec<f64> = group.iter().map(|g| g.1).collect();
            let ws: Vec<C64> = group.iter().map(|g| g.2).collect();
            let rs: Vec<C64> = group.iter().map(|g| g.3).collect();
            let w = linalg::pairwise_sum_c(&ws);
            let wr = linalg::pairwise_sum_c(&rs);
            pairing = pairing.max((wr + w.conj()).norm());
            if w == C64::new(0.0, 0.0) {
                start = end;
                continue;
            }
            entries.push(SpectralEntry {
                dk_index: group[0].0,
                dk_value: fold_momentum(group[0].0, n),
                de: linalg::pairwise_sum(&es) / es.len() as f64,
                weight: w,
            });
            start = end;
        }
        let ws: Vec<C64> = entries.iter().map(|e| e.weight).collect();
        let total = linalg::pairwise_sum_c(&ws);
        let direct = I * state.expectation_eigen(&ah.mul(&bh)?)?;
        Ok(Self {
            n_sites: n,
            entries,
            completeness_residual: (total - direct).norm(),
            pairing_residual: pairing,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_weight(&self) -> C64 {
        let ws: Vec<C64> = self.entries.iter().map(|e| e.weight).collect();
        linalg::pairwise_sum_c(&ws)
    }

    /// `G(z, t) = <i a^ tau_z alpha_t(b^)>`.
    pub fn correlation(&self, z: i64, t: f64) -> C64 {
        let terms: Vec<C64> = self
            .entries
            .iter()
            .map(|e| e.weight * C64::from_polar(1.0, -e.dk_value * z as f64 + e.de * t))
            .collect();
        linalg::pairwise_sum_c(&terms)
    }

    /// `rho(z, t) = (2 pi)^{-3/2} G(-z, -t)`.
    pub fn rho(&self, z: i64, t: f64) -> C64 {
        self.correlation(-z, -t) / (2.0 * PI * (2.0 * PI).sqrt())
    }

    /// CSV with header `dk_index,dk_value,de_value,weight_re,weight_im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "dk_index,dk_value,de_value,weight_re,weight_im")?;
        for e in &self.entries {
            writeln!(w, "{},{:?},{:?},{:?},{:?}", e.dk_index, e.dk_value, e.de, e.weight.re, e.weight.im)?;
        }
        Ok(())
    }

    pub fn read_csv(n_sites: usize, text: &str) -> Result<Vec<SpectralEntry>> {
        let mut lines = text.lines();
        match lines.next() {
            Some("dk_index,dk_value,de_value,weight_re,weight_im") => {}
            other => return Err(Error::Parse(format!("unexpected spectral header {other:?}"))),
        }
        let mut out = Vec::new();
        for (i, line) in lines.enumerate() {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("row {}: expected 5 fields", i + 1)));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)));
            let dk_index: usize = f[0].parse().map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
            if dk_index >= n_sites {
                return Err(Error::Parse(format!("row {}: dk_index {dk_index} out of range", i + 1)));
            }
            out.push(SpectralEntry {
                dk_index,
                dk_value: num(f[1])?,
                de: num(f[2])?,
                weight: C64::new(num(f[3])?, num(f[4])?),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_xx_model, energy_density};
    use crate::operator::ChainConfig;
    use crate::steady_state::{build_biased_gibbs, BiasOperator, BiasSpec};

    fn setup(n: usize, lambda: f64) -> (StationaryState, LocalOperator, LocalOperator) {
        let (phi, spec) = build_xx_model().unwrap();
        let chain = ChainConfig::periodic(n, 2).unwrap();
        let bias = BiasSpec::new(1.0, lambda, BiasOperator::TotalCurrent).unwrap();
        let state = build_biased_gibbs(&phi, &spec, &bias, &chain).unwrap();
        (state, spec.at(0), energy_density(&phi).unwrap())
    }

    #[test]
    fn direct_rho_matches_decomposition() {
        let (state, a, b) = setup(6, 0.5);
        let sf = SpectralFunction::build(&state, &a, &b).unwrap();
        assert!(sf.completeness_residual < 1e-12);
        assert!(sf.pairing_residual < 1e-12);
        let basis = state.basis();
        let chain = state.chain();
        let hat = |op: &LocalOperator| {
            let mut e = basis.transform(&embed_sparse(op, chain).unwrap()).unwrap();
            let m = state.expectation_eigen(&e).unwrap();
            e.add_diagonal(-m);
            e
        };
        let (ah, bh) = (hat(&a), hat(&b));
        for (z, t) in [(0, 0.0), (1, 0.4), (-2, 1.3), (3, -0.7)] {
            let moved = bh.translate(basis, -z).unwrap().evolve(basis, -t);
            let direct = I * state.expectation_eigen(&ah.mul(&moved).unwrap()).unwrap() / (2.0 * PI * (2.0 * PI).sqrt());
            assert!((sf.rho(z, t) - direct).norm() < 1e-12, "z = {z}, t = {t}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let (state, a, b) = setup(5, 0.3);
        let sf = SpectralFunction::build(&state, &a, &b).unwrap();
        let mut buf = Vec::new();
        sf.write_csv(&mut buf).unwrap();
        let back = SpectralFunction::read_csv(5, std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, sf.entries);
    }
}
