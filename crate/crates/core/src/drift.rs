//! Time-ordered propagation under linear drifts of b and ε, transition
//! amplitudes between the endpoint eigenbases, and region bookkeeping.
//!
//! Each step applies the exact exponential of the midpoint Hamiltonian. All
//! work happens in the Fourier basis, where h is real symmetric; transition
//! amplitudes are basis independent.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::diagnostics::{diagnostics, DiagnosticsBundle};
use crate::error::{Error, Result};
use crate::matrix::{OperatorMatrix, C64};
use crate::operators::harper_matrix;
use crate::params::{Basis, HarperParams};
use crate::spectrum::{separatrix_energies, Spectrum};

pub const UNITARITY_TOL: f64 = 1e-10;
pub const DEFAULT_INITIAL_STEPS: usize = 64;
pub const DEFAULT_MAX_DOUBLINGS: usize = 12;

/// Linear paths b(t) = b0 + (b1 − b0)·t/T and ε(t) = ε0 + (ε1 − ε0)·t/T.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftSchedule {
    pub n: usize,
    pub a: f64,
    pub b0: f64,
    pub b1: f64,
    pub eps0: f64,
    pub eps1: f64,
    /// Duration in the same time units as ħ/energy.
    pub duration: f64,
    pub steps: usize,
}

impl DriftSchedule {
    #[allow(clippy::too_many_arguments)]
    pub fn new(n: usize, a: f64, b0: f64, b1: f64, eps0: f64, eps1: f64, duration: f64, steps: usize) -> Result<Self> {
        HarperParams::new(n, a, b0, eps0)?;
        HarperParams::new(n, a, b1, eps1)?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "duration",
                reason: format!("must be finite and non-negative, got {duration}"),
            });
        }
        if steps == 0 {
            return Err(Error::InvalidParameter {
                name: "steps",
                reason: "at least one step".into(),
            });
        }
        Ok(DriftSchedule {
            n,
            a,
            b0,
            b1,
            eps0,
            eps1,
            duration,
            steps,
        })
    }

    /// Same as [`DriftSchedule::new`] with T given in units of ħ = 2π/n.
    #[allow(clippy::too_many_arguments)]
    pub fn with_duration_over_hbar(
        n: usize,
        a: f64,
        b0: f64,
        b1: f64,
        eps0: f64,
        eps1: f64,
        t_over_hbar: f64,
        steps: usize,
    ) -> Result<Self> {
        Self::new(n, a, b0, b1, eps0, eps1, t_over_hbar * 2.0 * PI / n as f64, steps)
    }

    pub fn hbar(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    pub fn duration_over_hbar(&self) -> f64 {
        self.duration / self.hbar()
    }

    pub fn delta_b(&self) -> f64 {
        self.b1 - self.b0
    }

    pub fn delta_eps(&self) -> f64 {
        self.eps1 - self.eps0
    }

    pub fn eps_mid(&self) -> f64 {
        0.5 * (self.eps0 + self.eps1)
    }

    pub fn with_steps(&self, steps: usize) -> Result<Self> {
        Self::new(
            self.n,
            self.a,
            self.b0,
            self.b1,
            self.eps0,
            self.eps1,
            self.duration,
            steps,
        )
    }

    /// Parameters at fraction `f` ∈ [0, 1] of the schedule.
    pub fn params_at_fraction(&self, f: f64) -> HarperParams {
        HarperParams::new(
            self.n,
            self.a,
            self.b0 + (self.b1 - self.b0) * f,
            self.eps0 + (self.eps1 - self.eps0) * f,
        )
        .expect("validated at construction")
    }

    pub fn params0(&self) -> HarperParams {
        self.params_at_fraction(0.0)
    }

    pub fn params1(&self) -> HarperParams {
        self.params_at_fraction(1.0)
    }

    /// RegionOverlap unless |ε| < |a| along the whole path.
    pub fn check_regions(&self) -> Result<()> {
        // ε is linear in t, so the endpoints bound |ε(t)|.
        for eps in [self.eps0, self.eps1] {
            if eps.abs() >= self.a.abs() {
                return Err(Error::RegionOverlap { a: self.a, eps });
            }
        }
        Ok(())
    }
}

fn real_fourier(p: &HarperParams) -> DMatrix<f64> {
    harper_matrix::<f64>(p, Basis::Fourier, 53).to_dmatrix().map(|z| z.re)
}

fn sorted_eigen(h: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let n = eig.eigenvectors.nrows();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// exp(−i·sign·h·dt/ħ) for real symmetric h.
fn step_exponential(h: DMatrix<f64>, dt_over_hbar: f64, sign: f64) -> DMatrix<C64> {
    let (vals, v) = sorted_eigen(h);
    let n = vals.len();
    let vc = v.map(|x| C64::new(x, 0.0));
    let mut left = vc.clone();
    for (c, &lam) in vals.iter().enumerate() {
        let ph = C64::from_polar(1.0, -sign * lam * dt_over_hbar);
        for r in 0..n {
            left[(r, c)] *= ph;
        }
    }
    left * vc.transpose()
}

pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - DMatrix::<C64>::identity(n, n))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Modified Gram-Schmidt on the columns.
fn reorthonormalize(u: &DMatrix<C64>) -> DMatrix<C64> {
    let mut q = u.clone();
    for j in 0..q.ncols() {
        for k in 0..j {
            let proj = q.column(k).dotc(&q.column(j));
            let ck = q.column(k).clone_owned();
            let mut cj = q.column_mut(j);
            cj -= ck * proj;
        }
        let norm = q.column(j).norm();
        q.column_mut(j).unscale_mut(norm);
    }
    q
}

fn propagate_with_sign(s: &DriftSchedule, sign: f64) -> Result<DMatrix<C64>> {
    s.check_regions()?;
    let n = s.n;
    let mut u = DMatrix::<C64>::identity(n, n);
    if s.duration == 0.0 {
        return Ok(u);
    }
    let dt_over_hbar = s.duration / s.steps as f64 / s.hbar();
    let order: Box<dyn Iterator<Item = usize>> = if sign > 0.0 {
        Box::new(0..s.steps)
    } else {
        Box::new((0..s.steps).rev())
    };
    for k in order {
        let f = (k as f64 + 0.5) / s.steps as f64;
        let e = step_exponential(real_fourier(&s.params_at_fraction(f)), dt_over_hbar, sign);
        u = e * u;
    }
    let defect = unitarity_defect(&u);
    if defect > UNITARITY_TOL {
        let q = reorthonormalize(&u);
        let moved = (&q - &u).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if moved > 1e-6 || unitarity_defect(&q) > UNITARITY_TOL {
            return Err(Error::UnitarityLoss(defect));
        }
        u = q;
    }
    Ok(u)
}

/// Propagator U(T) in the Fourier basis.
pub fn propagate(s: &DriftSchedule) -> Result<OperatorMatrix> {
    Ok(OperatorMatrix::from_machine(
        propagate_with_sign(s, 1.0)?,
        Basis::Fourier,
    ))
}

/// U(T)† built step by step backwards in time, for reversal checks.
pub fn propagate_backward(s: &DriftSchedule) -> Result<OperatorMatrix> {
    Ok(OperatorMatrix::from_machine(
        propagate_with_sign(s, -1.0)?,
        Basis::Fourier,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionLabel {
    LibratingLower,
    Circulating,
    LibratingUpper,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 3] = [
        RegionLabel::LibratingLower,
        RegionLabel::Circulating,
        RegionLabel::LibratingUpper,
    ];

    pub fn index(self) -> usize {
        match self {
            RegionLabel::LibratingLower => 0,
            RegionLabel::Circulating => 1,
            RegionLabel::LibratingUpper => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::LibratingLower => "librating_lower",
            RegionLabel::Circulating => "circulating",
            RegionLabel::LibratingUpper => "librating_upper",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionClassification {
    pub labels: Vec<RegionLabel>,
    /// Indices of the states nearest the lower and upper separatrix energies.
    pub boundary: (usize, usize),
}

/// Labels for an ascending list of energies. A state exactly on a
/// separatrix counts as circulating.
pub fn classify_values(values: &[f64], a: f64, eps: f64) -> Result<RegionClassification> {
    if eps.abs() >= a.abs() {
        return Err(Error::RegionOverlap { a, eps });
    }
    let sep = a.abs() - eps.abs();
    let labels = values
        .iter()
        .map(|&x| {
            if x < -sep {
                RegionLabel::LibratingLower
            } else if x > sep {
                RegionLabel::LibratingUpper
            } else {
                RegionLabel::Circulating
            }
        })
        .collect();
    let nearest = |target: f64| {
        values
            .iter()
            .enumerate()
            .min_by(|x, y| (x.1 - target).abs().total_cmp(&(y.1 - target).abs()))
            .map_or(0, |(i, _)| i)
    };
    Ok(RegionClassification {
        labels,
        boundary: (nearest(-sep), nearest(sep)),
    })
}

pub fn classify_regions(spec: &Spectrum) -> Result<RegionClassification> {
    let p = spec.params.as_ref().ok_or(Error::InvalidParameter {
        name: "spectrum",
        reason: "needs Harper parameters for the separatrix energies".into(),
    })?;
    if p.eps().abs() >= p.a().abs() {
        return Err(Error::RegionOverlap { a: p.a(), eps: p.eps() });
    }
    separatrix_energies(p);
    classify_values(&spec.eigenvalues, p.a(), p.eps())
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryIndices {
    pub init: (usize, usize),
    #[serde(rename = "final")]
    pub fin: (usize, usize),
}

#[derive(Debug, Clone, Serialize)]
pub struct TransitionReport {
    pub schedule: DriftSchedule,
    /// A_ij = |⟨w_j|U|v_i⟩|, row i = initial eigenstate (ascending energy).
    pub amplitudes: Vec<Vec<f64>>,
    pub energies_init: Vec<f64>,
    pub energies_final: Vec<f64>,
    pub labels_init: Vec<RegionLabel>,
    pub labels_final: Vec<RegionLabel>,
    pub boundary_indices: BoundaryIndices,
    /// Row r: mean over initial states in region r of the squared-amplitude
    /// mass landing in each final region. `None` when region r is empty at t = 0.
    pub region_probs: [Option<[f64; 3]>; 3],
    pub diagnostics: DiagnosticsBundle,
    pub steps: usize,
    /// Max entrywise change of A at the last refinement, if refined.
    pub last_delta: Option<f64>,
}

impl TransitionReport {
    pub fn squared(&self) -> Vec<Vec<f64>> {
        self.amplitudes
            .iter()
            .map(|r| r.iter().map(|a| a * a).collect())
            .collect()
    }

    /// Largest deviation of the row and column sums of A∘A from 1.
    pub fn stochastic_defect(&self) -> f64 {
        let sq = self.squared();
        let n = sq.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            worst = worst.max((sq[i].iter().sum::<f64>() - 1.0).abs());
            worst = worst.max(((0..n).map(|r| sq[r][i]).sum::<f64>() - 1.0).abs());
        }
        worst
    }

    /// Indices carrying `label` at t = 0 or t = T.
    pub fn block(&self, label: RegionLabel, initial: bool) -> Vec<usize> {
        let src = if initial { &self.labels_init } else { &self.labels_final };
        (0..src.len()).filter(|&i| src[i] == label).collect()
    }
}

fn region_probs(sq: &[Vec<f64>], li: &[RegionLabel], lf: &[RegionLabel]) -> [Option<[f64; 3]>; 3] {
    let mut out = [None; 3];
    for r in RegionLabel::ALL {
        let rows: Vec<usize> = (0..li.len()).filter(|&i| li[i] == r).collect();
        if rows.is_empty() {
            continue;
        }
        let mut acc = [0.0; 3];
        for &i in &rows {
            for (j, &l) in lf.iter().enumerate() {
                acc[l.index()] += sq[i][j];
            }
        }
        for v in &mut acc {
            *v /= rows.len() as f64;
        }
        out[r.index()] = Some(acc);
    }
    out
}

/// Transition amplitudes between the ordered endpoint eigenbases.
pub fn transition_matrix(s: &DriftSchedule, u: &OperatorMatrix) -> Result<TransitionReport> {
    s.check_regions()?;
    let um = match u.basis() {
        Basis::Fourier => u.to_dmatrix(),
        Basis::Conventional => {
            let q = crate::operators::fourier_matrix::<f64>(s.n, 53).to_dmatrix();
            q.adjoint() * u.to_dmatrix() * q
        }
    };
    let (e0, v0) = sorted_eigen(real_fourier(&s.params0()));
    let (e1, v1) = sorted_eigen(real_fourier(&s.params1()));
    let c0 = classify_values(&e0, s.a, s.eps0)?;
    let c1 = classify_values(&e1, s.a, s.eps1)?;
    let v0c = v0.map(|x| C64::new(x, 0.0));
    let v1c = v1.map(|x| C64::new(x, 0.0));
    // M_ji = ⟨w_j|U|v_i⟩
    let m = v1c.transpose() * um * v0c;
    let n = s.n;
    let amplitudes: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m[(j, i)].norm()).collect()).collect();
    let sq: Vec<Vec<f64>> = amplitudes.iter().map(|r| r.iter().map(|a| a * a).collect()).collect();
    Ok(TransitionReport {
        schedule: *s,
        region_probs: region_probs(&sq, &c0.labels, &c1.labels),
        amplitudes,
        energies_init: e0,
        energies_final: e1,
        labels_init: c0.labels,
        labels_final: c1.labels,
        boundary_indices: BoundaryIndices {
            init: c0.boundary,
            fin: c1.boundary,
        },
        diagnostics: diagnostics(s),
        steps: s.steps,
        last_delta: None,
    })
}

fn max_change(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy)]
pub struct RefineOptions {
    pub initial_steps: usize,
    pub max_doublings: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            initial_steps: DEFAULT_INITIAL_STEPS,
            max_doublings: DEFAULT_MAX_DOUBLINGS,
        }
    }
}

/// Double the step count until A changes by less than `tol` entrywise.
pub fn refine_until_converged(s: &DriftSchedule, tol: f64) -> Result<TransitionReport> {
    refine_until_converged_with(s, tol, RefineOptions::default())
}

pub fn refine_until_converged_with(s: &DriftSchedule, tol: f64, opts: RefineOptions) -> Result<TransitionReport> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: format!("must be positive and finite, got {tol}"),
        });
    }
    let run = |steps: usize| -> Result<TransitionReport> {
        let sk = s.with_steps(steps)?;
        transition_matrix(&sk, &propagate(&sk)?)
    };
    let mut steps = opts.initial_steps.max(1);
    let mut prev = run(steps)?;
    let mut last_delta = f64::INFINITY;
    for _ in 0..opts.max_doublings {
        steps *= 2;
        let mut next = run(steps)?;
        last_delta = max_change(&prev.amplitudes, &next.amplitudes);
        log::debug!("steps {steps}: max change {last_delta:e}");
        next.last_delta = Some(last_delta);
        if last_delta < tol {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::RefinementNotConverged { tol, last_delta, steps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::build_harper;
    use crate::params::PrecisionContext;
    use crate::spectrum::eigen_decompose;

    fn sched(n: usize, b1: f64, eps0: f64, eps1: f64, t_over_hbar: f64, steps: usize) -> DriftSchedule {
        DriftSchedule::with_duration_over_hbar(n, 1.0, 0.0, b1, eps0, eps1, t_over_hbar, steps).unwrap()
    }

    #[test]
    fn zero_duration_is_identity() {
        let s = sched(6, 0.5, 0.3, 0.3, 0.0, 4);
        let u = propagate(&s).unwrap().to_dmatrix();
        assert_eq!(u, DMatrix::<C64>::identity(6, 6));
        let r = transition_matrix(
            &DriftSchedule { b1: 0.0, ..s },
            &propagate(&DriftSchedule { b1: 0.0, ..s }).unwrap(),
        )
        .unwrap();
        for i in 0..6 {
            assert!((r.amplitudes[i][i] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_schedule_phases() {
        let s = sched(7, 0.0, 0.4, 0.4, 3.0, 5);
        let u = propagate(&s).unwrap().to_dmatrix();
        let (vals, v) = sorted_eigen(real_fourier(&s.params0()));
        let vc = v.map(|x| C64::new(x, 0.0));
        let d = vc.transpose() * &u * &vc;
        let t_over_hbar = s.duration_over_hbar();
        for (j, &lam) in vals.iter().enumerate() {
            let want = C64::from_polar(1.0, -lam * t_over_hbar);
            assert!((d[(j, j)] - want).norm() < 1e-12);
        }
    }

    #[test]
    fn rejects_overlapping_regions() {
        let s = sched(6, 0.5, 1.2, 0.3, 10.0, 4);
        assert!(matches!(propagate(&s), Err(Error::RegionOverlap { .. })));
        assert!(DriftSchedule::new(6, 1.0, 0.0, 0.1, 0.3, 0.3, 1.0, 0).is_err());
        assert!(DriftSchedule::new(6, 1.0, 0.0, 0.1, 0.3, 0.3, -1.0, 4).is_err());
    }

    #[test]
    fn unitary_and_doubly_stochastic() {
        let s = sched(12, 1.0, 0.2, 0.5, 40.0, 200);
        let u = propagate(&s).unwrap();
        assert!(unitarity_defect(u.machine().unwrap()) < UNITARITY_TOL);
        let r = transition_matrix(&s, &u).unwrap();
        assert!(r.stochastic_defect() < 1e-8);
        for row in r.region_probs.iter().flatten() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn backward_undoes_forward() {
        let s = sched(10, 0.7, 0.3, 0.45, 30.0, 64);
        let u = propagate(&s).unwrap().to_dmatrix();
        let ub = propagate_backward(&s).unwrap().to_dmatrix();
        let e = (ub * u - DMatrix::<C64>::identity(10, 10))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        assert!(e < 1e-12);
    }

    #[test]
    fn classification_examples() {
        let c = classify_values(&[-0.9, 0.0, 0.7, 0.8], 1.0, 0.3).unwrap();
        assert_eq!(
            c.labels,
            vec![
                RegionLabel::LibratingLower,
                RegionLabel::Circulating,
                RegionLabel::Circulating,
                RegionLabel::LibratingUpper
            ]
        );
        assert_eq!(c.boundary, (0, 2));
        assert!(matches!(
            classify_values(&[0.0], 1.0, 1.0),
            Err(Error::RegionOverlap { .. })
        ));
    }

    #[test]
    fn circulating_count_shrinks_with_eps() {
        let count = |eps: f64| {
            let p = HarperParams::new(14, 1.0, 0.0, eps).unwrap();
            let s = eigen_decompose(
                &build_harper(&p, Basis::Conventional, PrecisionContext::MACHINE).unwrap(),
                false,
            )
            .unwrap();
            classify_regions(&s)
                .unwrap()
                .labels
                .iter()
                .filter(|&&l| l == RegionLabel::Circulating)
                .count()
        };
        let counts: Vec<usize> = [0.1, 0.3, 0.5, 0.7, 0.9].iter().map(|&e| count(e)).collect();
        assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
        assert!(counts[0] > counts[4]);
    }

    #[test]
    fn refinement_contract() {
        let s = sched(8, 0.0, 0.4, 0.4, 50.0, 1);
        let r = refine_until_converged(&s, 1e-6).unwrap();
        assert_eq!(r.steps, 2 * DEFAULT_INITIAL_STEPS);
        assert!(refine_until_converged(&s, 0.0).is_err());
        let moving = sched(8, 0.6, 0.3, 0.5, 50.0, 1);
        let opts = RefineOptions {
            initial_steps: 2,
            max_doublings: 1,
        };
        assert!(matches!(
            refine_until_converged_with(&moving, 1e-12, opts),
            Err(Error::RefinementNotConverged { .. })
        ));
    }

    #[test]
    fn empty_initial_region_gives_none_row() {
        // ε0 tiny: no state lies beyond ±(1 − ε0) for small n.
        let s = sched(4, 0.3, 0.01, 0.3, 10.0, 16);
        let r = transition_matrix(&s, &propagate(&s).unwrap()).unwrap();
        let lower = r.block(RegionLabel::LibratingLower, true);
        assert_eq!(r.region_probs[0].is_none(), lower.is_empty());
    }
}
