//! π-periodic Mathieu characteristic values a_{2m}(q), b_{2m}(q) from
//! truncated Fourier-coefficient recurrences, and their comparison with the
//! Harper spectrum after the scaling q = ε(n/π)², E = λ/2·(π/n)² + C.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectrum::{spacings, Spectrum};

pub const TRUNCATION_TOL: f64 = 1e-10;
const MAX_EXTRA_DOUBLINGS: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct MathieuCharacteristics {
    pub q: f64,
    /// a_{2m} for m = 0..=m_max
    pub a_even: Vec<f64>,
    /// b_{2m} for m = 1..=m_max
    pub b_even: Vec<f64>,
    pub truncation_r: usize,
    pub converged: bool,
}

impl MathieuCharacteristics {
    /// Both families merged in ascending order.
    pub fn merged(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.a_even.iter().chain(&self.b_even).copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Even π-periodic family: coefficients A_0, A_2, …; the r = 0 row carries √2.
fn even_family(q: f64, r: usize) -> Vec<f64> {
    let mut m = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        m[(i, i)] = (2 * i * 2 * i) as f64;
        if i + 1 < r {
            let c = if i == 0 { std::f64::consts::SQRT_2 * q } else { q };
            m[(i, i + 1)] = c;
            m[(i + 1, i)] = c;
        }
    }
    sorted_eigenvalues(m)
}

/// Odd π-periodic family: coefficients B_2, B_4, ….
fn odd_family(q: f64, r: usize) -> Vec<f64> {
    let mut m = DMatrix::<f64>::zeros(r, r);
    for i in 0..r {
        let k = 2 * (i + 1);
        m[(i, i)] = (k * k) as f64;
        if i + 1 < r {
            m[(i, i + 1)] = q;
            m[(i + 1, i)] = q;
        }
    }
    sorted_eigenvalues(m)
}

fn at_truncation(q: f64, m_max: usize, r: usize) -> (Vec<f64>, Vec<f64>) {
    let a = even_family(q, r)[..=m_max].to_vec();
    let b = odd_family(q, r)[..m_max].to_vec();
    (a, b)
}

fn max_change(x: &(Vec<f64>, Vec<f64>), y: &(Vec<f64>, Vec<f64>)) -> f64 {
    x.0.iter()
        .zip(&y.0)
        .chain(x.1.iter().zip(&y.1))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

/// Characteristic values with truncation size `r` (or the automatic choice
/// max(3·m_max, ⌈2√q⌉) + 10), checked by doubling the truncation.
pub fn mathieu_characteristics(q: f64, m_max: usize, r: Option<usize>) -> Result<MathieuCharacteristics> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "q",
            reason: format!("must be finite and non-negative, got {q}"),
        });
    }
    if m_max < 1 {
        return Err(Error::InvalidParameter {
            name: "m_max",
            reason: "at least 1".into(),
        });
    }
    let auto = (3 * m_max).max((2.0 * q.sqrt()).ceil() as usize) + 10;
    let mut r = r.unwrap_or(auto).max(m_max + 1);
    let mut current = at_truncation(q, m_max, r);
    let mut change = f64::INFINITY;
    for _ in 0..=MAX_EXTRA_DOUBLINGS {
        let doubled = at_truncation(q, m_max, 2 * r);
        change = max_change(&current, &doubled);
        if change < TRUNCATION_TOL {
            return Ok(MathieuCharacteristics {
                q,
                a_even: current.0,
                b_even: current.1,
                truncation_r: r,
                converged: true,
            });
        }
        r *= 2;
        current = doubled;
    }
    Err(Error::MathieuNotConverged(change))
}

/// q = ε(n/π)².
pub fn q_from_eps(eps: f64, n: usize) -> Result<f64> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("must be non-negative, got {eps}"),
        });
    }
    let r = n as f64 / PI;
    Ok(eps * r * r)
}

/// λ/2·(π/n)², before the alignment offset.
pub fn scale_to_harper_raw(lambda: f64, n: usize) -> f64 {
    let r = PI / n as f64;
    0.5 * lambda * r * r
}

pub fn scale_to_harper(lambda: f64, n: usize, offset: f64) -> f64 {
    scale_to_harper_raw(lambda, n) + offset
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonRow {
    pub index: usize,
    pub harper_eigenvalue: f64,
    pub mathieu_scaled_eigenvalue: f64,
    pub difference: f64,
    pub harper_spacing: f64,
    pub mathieu_spacing: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MathieuComparison {
    pub n: usize,
    pub q: f64,
    /// Additive constant C placing the lowest scaled value on the lowest Harper level.
    pub offset: f64,
    pub rows: Vec<ComparisonRow>,
}

impl MathieuComparison {
    pub fn harper(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.harper_eigenvalue).collect()
    }

    pub fn mathieu(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mathieu_scaled_eigenvalue).collect()
    }

    /// Root-mean-square difference over the lowest `count` rows.
    pub fn rms_lowest(&self, count: usize) -> f64 {
        let k = count.min(self.rows.len()).max(1);
        (self.rows[..k].iter().map(|r| r.difference * r.difference).sum::<f64>() / k as f64).sqrt()
    }
}

/// Anchor the scaled Mathieu values to the lowest Harper level and compare index by index.
pub fn align_spectra(harper: &Spectrum, mathieu: &MathieuCharacteristics) -> Result<MathieuComparison> {
    let n = harper.len();
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "harper",
            reason: "empty spectrum".into(),
        });
    }
    let raw: Vec<f64> = mathieu.merged().iter().map(|&l| scale_to_harper_raw(l, n)).collect();
    let offset = harper.eigenvalues[0] - raw[0];
    let scaled: Vec<f64> = raw.iter().map(|x| x + offset).collect();
    let m_spacing = spacings(&scaled);
    let rows = (0..n.min(scaled.len()))
        .map(|k| ComparisonRow {
            index: k,
            harper_eigenvalue: harper.eigenvalues[k],
            mathieu_scaled_eigenvalue: scaled[k],
            difference: if k == 0 { 0.0 } else { scaled[k] - harper.eigenvalues[k] },
            harper_spacing: harper.spacings[k],
            mathieu_spacing: m_spacing[k],
        })
        .collect();
    Ok(MathieuComparison {
        n,
        q: mathieu.q,
        offset,
        rows,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PairStats {
    pub pairs: usize,
    pub max_pair_gap: f64,
    pub min_inter_pair_gap: f64,
}

impl PairStats {
    pub fn ratio(&self) -> f64 {
        self.min_inter_pair_gap / self.max_pair_gap
    }
}

/// Group the ascending values inside (lo, hi) into consecutive pairs,
/// choosing the pairing phase that gives the cleanest separation.
pub fn pair_structure(values: &[f64], lo: f64, hi: f64) -> Option<PairStats> {
    let inside: Vec<f64> = values.iter().copied().filter(|&x| x > lo && x < hi).collect();
    let mut best: Option<PairStats> = None;
    for phase in 0..2 {
        let v = &inside[phase.min(inside.len())..];
        let pairs = v.len() / 2;
        if pairs < 2 {
            continue;
        }
        let max_pair_gap = (0..pairs).map(|k| v[2 * k + 1] - v[2 * k]).fold(0.0, f64::max);
        let min_inter = (0..pairs - 1)
            .map(|k| v[2 * k + 2] - v[2 * k + 1])
            .fold(f64::INFINITY, f64::min);
        let stats = PairStats {
            pairs,
            max_pair_gap,
            min_inter_pair_gap: min_inter,
        };
        if best.is_none_or(|b| stats.ratio() > b.ratio()) {
            best = Some(stats);
        }
    }
    best
}
