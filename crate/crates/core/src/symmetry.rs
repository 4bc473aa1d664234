//! Spectral symmetries of h(a, b, ε) as residual-returning checks.
//!
//! Each check compares ascending-sorted machine spectra (max abs difference)
//! or evaluates an operator residual directly. A [`SymmetrySuite`] can carry
//! a deliberate fault that offsets every symmetry transformation, which is
//! how the checks are shown to be falsifiable.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::C64;
use crate::operators::{build_harper, clock_matrix, parity_matrix, shift_matrix};
use crate::params::{Basis, HarperParams, PrecisionContext};
use crate::spectrum::{eigen_decompose, min_spacing};

/// Spectral distances, relative to max(1, |a| + |ε|).
pub const SPECTRAL_TOL: f64 = 1e-12;
/// Commutator max-norm, relative to max(1, |a| + |ε|).
pub const COMMUTATOR_TOL: f64 = 1e-13;
/// Hellmann-Feynman slopes, relative to max(1, |a| + |ε|).
pub const STATIONARITY_TOL: f64 = 1e-10;
/// States closer than this (times |a| + |ε|) to a neighbour are left out of
/// the stationarity residual. Round-off mixes the eigenvectors of close
/// pairs, which corrupts their individual expectation values.
pub const DEGENERACY_EXCLUSION: f64 = 1e-4;
pub const DISTINCTNESS_DIGITS: u32 = 50;

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryReport {
    pub check_name: String,
    pub params: HarperParams,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// States left out of the residual (stationarity only).
    pub excluded: usize,
}

impl SymmetryReport {
    fn new(name: &str, params: HarperParams, residual: f64, tolerance: f64) -> Self {
        SymmetryReport {
            check_name: name.to_string(),
            params,
            residual,
            tolerance,
            passed: residual <= tolerance,
            excluded: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeParity {
    EvenLattice,
    OddLattice,
}

fn tol(p: &HarperParams, base: f64) -> f64 {
    base * p.scale().max(1.0)
}

fn spectrum_of(n: usize, a: f64, b: f64, eps: f64) -> Result<Vec<f64>> {
    let p = HarperParams::new(n, a, b, eps)?;
    let m = build_harper(&p, Basis::Conventional, PrecisionContext::MACHINE)?;
    Ok(eigen_decompose(&m, false)?.eigenvalues)
}

fn distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

fn max_norm(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn machine_harper(p: &HarperParams) -> Result<DMatrix<C64>> {
    Ok(build_harper(p, Basis::Conventional, PrecisionContext::MACHINE)?
        .into_machine()
        .expect("machine context"))
}

/// a·sin(p̂ − b) = ∂h/∂b in the conventional basis.
fn b_derivative(p: &HarperParams) -> DMatrix<C64> {
    let x = shift_matrix::<f64>(p.n(), 53).to_dmatrix();
    let e = C64::from_polar(1.0, p.b());
    (x.adjoint() * e.conj() - &x * e) * C64::new(0.0, -0.5 * p.a())
}

/// Set of symmetry checks, optionally with every transformation offset by `fault`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SymmetrySuite {
    fault: f64,
}

impl SymmetrySuite {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_fault(fault: f64) -> Self {
        SymmetrySuite { fault }
    }

    pub fn fault(&self) -> f64 {
        self.fault
    }

    /// Spectrum invariant under b → b + 2πk/n.
    pub fn shift_by_lattice(&self, p: &HarperParams, k: i64) -> Result<SymmetryReport> {
        let n = p.n();
        let base = spectrum_of(n, p.a(), p.b(), p.eps())?;
        let shifted_b = p.b() + 2.0 * PI * k as f64 / n as f64 + self.fault;
        let residual = if k == 0 && self.fault == 0.0 {
            0.0
        } else {
            distance(&base, &spectrum_of(n, p.a(), shifted_b, p.eps())?)
        };
        Ok(SymmetryReport::new(
            "shift_by_lattice",
            *p,
            residual,
            tol(p, SPECTRAL_TOL),
        ))
    }

    /// Spectrum invariant under b → −b.
    pub fn reflection(&self, p: &HarperParams) -> Result<SymmetryReport> {
        let n = p.n();
        let base = spectrum_of(n, p.a(), p.b(), p.eps())?;
        let other = spectrum_of(n, p.a(), -p.b() + self.fault, p.eps())?;
        Ok(SymmetryReport::new(
            "reflection",
            *p,
            distance(&base, &other),
            tol(p, SPECTRAL_TOL),
        ))
    }

    /// Reflection composed with a lattice shift: b → 2π/n − b.
    pub fn lattice_reflection(&self, p: &HarperParams) -> Result<SymmetryReport> {
        let n = p.n();
        let base = spectrum_of(n, p.a(), p.b(), p.eps())?;
        let other = spectrum_of(n, p.a(), 2.0 * PI / n as f64 - p.b() + self.fault, p.eps())?;
        Ok(SymmetryReport::new(
            "lattice_reflection",
            *p,
            distance(&base, &other),
            tol(p, SPECTRAL_TOL),
        ))
    }

    /// Spectrum at (2k+1)π/n + δ equals the spectrum at π/n − δ. `p.b` is ignored.
    pub fn half_lattice_reflection(&self, p: &HarperParams, k: i64, delta: f64) -> Result<SymmetryReport> {
        let n = p.n();
        let step = PI / n as f64;
        if !(0.0..step).contains(&delta) {
            return Err(Error::InvalidParameter {
                name: "delta",
                reason: format!("must lie in [0, π/n), got {delta}"),
            });
        }
        let at = (2 * k + 1) as f64 * step + delta;
        let lhs = spectrum_of(n, p.a(), at, p.eps())?;
        let rhs = spectrum_of(n, p.a(), step - delta + self.fault, p.eps())?;
        let q = p.with_b(at)?;
        Ok(SymmetryReport::new(
            "half_lattice_reflection",
            q,
            distance(&lhs, &rhs),
            tol(&q, SPECTRAL_TOL),
        ))
    }

    /// ‖[P·Z^{−m}, h(a, mπ/n, ε)]‖_max with m = 2k (even) or 2k + 1 (odd).
    /// The offset b is set from k; `p.b` is ignored.
    pub fn commutator(&self, p: &HarperParams, k: i64, kind: LatticeParity) -> Result<SymmetryReport> {
        let n = p.n();
        let m = match kind {
            LatticeParity::EvenLattice => 2 * k,
            LatticeParity::OddLattice => 2 * k + 1,
        };
        let q = p.with_b(m as f64 * PI / n as f64 + self.fault)?;
        let residual = commutator_residual(&q, m)?;
        let name = match kind {
            LatticeParity::EvenLattice => "commutator_even_lattice",
            LatticeParity::OddLattice => "commutator_odd_lattice",
        };
        Ok(SymmetryReport::new(name, q, residual, tol(&q, COMMUTATOR_TOL)))
    }

    /// spectrum(a, 0, ε) = spectrum(ε, 0, a).
    pub fn fourier_duality(&self, p: &HarperParams) -> Result<SymmetryReport> {
        if p.b() != 0.0 {
            return Err(Error::RequiresZeroOffset(p.b()));
        }
        let n = p.n();
        let base = spectrum_of(n, p.a(), 0.0, p.eps())?;
        let residual = if p.a() == p.eps() && self.fault == 0.0 {
            0.0
        } else {
            distance(&base, &spectrum_of(n, p.eps(), self.fault, p.a())?)
        };
        Ok(SymmetryReport::new(
            "fourier_duality",
            *p,
            residual,
            tol(p, SPECTRAL_TOL),
        ))
    }

    /// Even n: λ_j = −λ_{n−1−j}, and the spectrum is invariant under ε → −ε.
    pub fn even_n(&self, p: &HarperParams) -> Result<SymmetryReport> {
        let n = p.n();
        if n % 2 == 1 {
            return Err(Error::OddDimension(n));
        }
        let base = spectrum_of(n, p.a(), p.b(), p.eps())?;
        let pairing = (0..n).map(|j| (base[j] + base[n - 1 - j]).abs()).fold(0.0, f64::max);
        let flipped = spectrum_of(n, p.a(), p.b() + self.fault, -p.eps())?;
        let residual = pairing.max(distance(&base, &flipped));
        Ok(SymmetryReport::new("even_n", *p, residual, tol(p, SPECTRAL_TOL)))
    }

    /// Odd n: spectrum(a, b, ε) = −spectrum(a, b + π/n, −ε).
    pub fn odd_n(&self, p: &HarperParams) -> Result<SymmetryReport> {
        let n = p.n();
        if n % 2 == 0 {
            return Err(Error::EvenDimension(n));
        }
        let base = spectrum_of(n, p.a(), p.b(), p.eps())?;
        let mut other: Vec<f64> = spectrum_of(n, p.a(), p.b() + PI / n as f64 + self.fault, -p.eps())?
            .into_iter()
            .map(|x| -x)
            .collect();
        other.reverse();
        Ok(SymmetryReport::new(
            "odd_n",
            *p,
            distance(&base, &other),
            tol(p, SPECTRAL_TOL),
        ))
    }

    /// max over isolated eigenstates of |⟨v| a·sin(p̂ − b) |v⟩| at b = kπ/n.
    /// The offset is set from k; `p.b` is ignored.
    pub fn stationarity(&self, p: &HarperParams, k: i64) -> Result<SymmetryReport> {
        let q = p.with_b(k as f64 * PI / p.n() as f64 + self.fault)?;
        let (residual, excluded) = stationarity_residual(&q)?;
        let mut r = SymmetryReport::new("stationarity", q, residual, tol(&q, STATIONARITY_TOL));
        r.excluded = excluded;
        Ok(r)
    }

    /// Off a lattice point (b = 0.37π/n) all eigenvalues are distinct at 50 digits.
    ///
    /// Residual is the resolution floor 10^{−(digits−10)} over the smallest
    /// spacing, so it passes (≤ 1) exactly when the spectrum is resolved as
    /// simple. A fault moves b onto the lattice point b = 0.
    pub fn distinctness(&self, p: &HarperParams) -> Result<SymmetryReport> {
        let b = if self.fault == 0.0 {
            0.37 * PI / p.n() as f64
        } else {
            0.0
        };
        let q = p.with_b(b)?;
        let ctx = PrecisionContext::new(DISTINCTNESS_DIGITS)?;
        let s = eigen_decompose(&build_harper(&q, Basis::Fourier, ctx)?, false)?;
        let (d, _) = min_spacing(&s);
        let residual = if d > 0.0 { ctx.resolution() / d } else { f64::INFINITY };
        Ok(SymmetryReport::new("distinctness", q, residual, 1.0))
    }

    /// Every check that applies to `p`, with the lattice integers fixed at small values.
    pub fn run_all(&self, p: &HarperParams) -> Vec<(String, Result<SymmetryReport>)> {
        let n = p.n();
        let step = PI / n as f64;
        let delta = p.b().rem_euclid(step);
        let mut out: Vec<(String, Result<SymmetryReport>)> = vec![
            ("shift_by_lattice".into(), self.shift_by_lattice(p, 1)),
            ("reflection".into(), self.reflection(p)),
            ("lattice_reflection".into(), self.lattice_reflection(p)),
            (
                "half_lattice_reflection".into(),
                self.half_lattice_reflection(p, 1, delta),
            ),
            (
                "commutator_even_lattice".into(),
                self.commutator(p, 1, LatticeParity::EvenLattice),
            ),
            (
                "commutator_odd_lattice".into(),
                self.commutator(p, 0, LatticeParity::OddLattice),
            ),
            (
                "fourier_duality".into(),
                p.with_b(0.0).and_then(|q| self.fourier_duality(&q)),
            ),
        ];
        if n % 2 == 0 {
            out.push(("even_n".into(), self.even_n(p)));
        } else {
            out.push(("odd_n".into(), self.odd_n(p)));
        }
        out.push(("stationarity_k0".into(), self.stationarity(p, 0)));
        out.push(("stationarity_k1".into(), self.stationarity(p, 1)));
        out.push(("distinctness".into(), self.distinctness(p)));
        out
    }
}

/// ‖[P·Z^{−m}, h]‖_max for the parameters as given.
pub fn commutator_residual(p: &HarperParams, m: i64) -> Result<f64> {
    let n = p.n();
    let h = machine_harper(p)?;
    let par = parity_matrix::<f64>(n, 53).to_dmatrix();
    let mut zpow = DMatrix::<C64>::identity(n, n);
    let zinv = clock_matrix::<f64>(n, 53).to_dmatrix().adjoint();
    for _ in 0..m.rem_euclid(n as i64) {
        zpow = &zpow * &zinv;
    }
    let u = par * zpow;
    Ok(max_norm(&(&u * &h - &h * &u)))
}

/// (max |⟨v|∂h/∂b|v⟩| over isolated states, number of excluded states).
pub fn stationarity_residual(p: &HarperParams) -> Result<(f64, usize)> {
    let h = machine_harper(p)?;
    let m = crate::matrix::OperatorMatrix::from_machine(h, Basis::Conventional);
    let s = eigen_decompose(&m, true)?;
    let v = s.eigenvectors.as_ref().expect("vectors requested");
    let d = b_derivative(p);
    let dv = &d * v;
    let threshold = DEGENERACY_EXCLUSION * p.scale();
    let mut worst = 0.0f64;
    let mut excluded = 0;
    for j in 0..s.len() {
        if s.spacings[j] < threshold {
            excluded += 1;
            continue;
        }
        let e: C64 = v.column(j).dotc(&dv.column(j));
        worst = worst.max(e.re.abs());
    }
    Ok((worst, excluded))
}

/// Randomised battery: `count` draws per check with n ∈ [3, 24],
/// a ∈ {0.5, 1, 2}, ε ∈ [0.05, 0.9], b ∈ [0, 2π).
pub fn run_battery(suite: &SymmetrySuite, seed: u64, count: usize) -> Result<Vec<SymmetryReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let amps = [0.5, 1.0, 2.0];
    let draw = |rng: &mut ChaCha8Rng, n: usize| -> Result<HarperParams> {
        let a = amps[rng.gen_range(0..amps.len())];
        let eps = rng.gen_range(0.05..0.9);
        let b = rng.gen_range(0.0..2.0 * PI);
        HarperParams::new(n, a, b, eps)
    };
    for _ in 0..count {
        let n = rng.gen_range(3..=24usize);
        let p = draw(&mut rng, n)?;
        let k = rng.gen_range(-(n as i64)..=2 * n as i64);
        out.push(suite.shift_by_lattice(&p, k)?);
        out.push(suite.reflection(&p)?);
        out.push(suite.lattice_reflection(&p)?);
        let delta = rng.gen_range(0.0..PI / n as f64);
        out.push(suite.half_lattice_reflection(&p, k, delta)?);
        out.push(suite.commutator(&p, k, LatticeParity::EvenLattice)?);
        out.push(suite.commutator(&p, k, LatticeParity::OddLattice)?);
        out.push(suite.fourier_duality(&p.with_b(0.0)?)?);
        out.push(suite.stationarity(&p, k)?);

        let n_even = 2 * rng.gen_range(2..=12usize);
        out.push(suite.even_n(&draw(&mut rng, n_even)?)?);
        let n_odd = 2 * rng.gen_range(1..=11usize) + 1;
        out.push(suite.odd_n(&draw(&mut rng, n_odd)?)?);
        let n_d = rng.gen_range(3..=24usize);
        out.push(suite.distinctness(&draw(&mut rng, n_d)?)?);
    }
    Ok(out)
}

pub fn check_shift_by_lattice(p: &HarperParams, k: i64) -> Result<SymmetryReport> {
    SymmetrySuite::new().shift_by_lattice(p, k)
}
pub fn check_reflection(p: &HarperParams) -> Result<SymmetryReport> {
    SymmetrySuite::new().reflection(p)
}
pub fn check_lattice_reflection(p: &HarperParams) -> Result<SymmetryReport> {
    SymmetrySuite::new().lattice_reflection(p)
}
pub fn check_half_lattice_reflection(p: &HarperParams, k: i64, delta: f64) -> Result<SymmetryReport> {
    SymmetrySuite::new().half_lattice_reflection(p, k, delta)
}
pub fn check_commutator(p: &HarperParams, k: i64, kind: LatticeParity) -> Result<SymmetryReport> {
    SymmetrySuite::new().commutator(p, k, kind)
}
pub fn check_fourier_duality(p: &HarperParams) -> Result<SymmetryReport> {
    SymmetrySuite::new().fourier_duality(p)
}
pub fn check_even_n(p: &HarperParams) -> Result<SymmetryReport> {
    SymmetrySuite::new().even_n(p)
}
pub fn check_odd_n(p: &HarperParams) -> Result<SymmetryReport> {
    SymmetrySuite::new().odd_n(p)
}
pub fn check_stationarity(p: &HarperParams, k: i64) -> Result<SymmetryReport> {
    SymmetrySuite::new().stationarity(p, k)
}
pub fn check_distinctness(p: &HarperParams) -> Result<SymmetryReport> {
    SymmetrySuite::new().distinctness(p)
}
