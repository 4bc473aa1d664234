//! Adiabaticity numbers for a drift schedule, Landau-Zener estimates, and
//! the classical energy surface H(p, φ) = a·cos(p − b) + ε·cos φ.
//!
//! ε is taken at the schedule midpoint throughout; drift rates use |Δb|.

use std::f64::consts::{LN_2, PI};

use serde::Serialize;

use crate::drift::DriftSchedule;
use crate::error::{Error, Result};
use crate::params::HarperParams;
use crate::spectrum::separatrix_energies;

fn positive_duration(s: &DriftSchedule) -> Result<f64> {
    if s.duration > 0.0 {
        Ok(s.duration)
    } else {
        Err(Error::InvalidParameter {
            name: "duration",
            reason: "rates need a positive duration".into(),
        })
    }
}

fn b_rate(s: &DriftSchedule) -> Result<f64> {
    Ok(s.delta_b().abs() / positive_duration(s)?)
}

fn a_eps_mid(s: &DriftSchedule) -> Result<f64> {
    let ae = s.a * s.eps_mid();
    if ae > 0.0 {
        Ok(ae)
    } else {
        Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("a·eps_mid must be positive, got {ae}"),
        })
    }
}

/// Libration frequency at the bottom of the well, √(a·ε_mid).
pub fn omega0(s: &DriftSchedule) -> Result<f64> {
    Ok(a_eps_mid(s)?.sqrt())
}

/// (|Δb|/T) / (a·ε_mid).
pub fn beta_ad(s: &DriftSchedule) -> Result<f64> {
    let ae = a_eps_mid(s)?;
    Ok(b_rate(s)? / ae)
}

/// n·|Δb| / (2π²·ε_mid·T).
pub fn gamma_q_ad(s: &DriftSchedule) -> Result<f64> {
    let e = s.eps_mid();
    if e <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("eps_mid must be positive, got {e}"),
        });
    }
    let t = positive_duration(s)?;
    Ok(s.n as f64 * s.delta_b().abs() / (2.0 * PI * PI * e * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CaptureProbability {
    /// (ε̇/ḃ)·4/(π√(ε_mid·a)); negative when the resonance shrinks.
    pub raw: f64,
    /// `raw` clamped to [0, 1].
    pub value: f64,
    pub clamped: bool,
}

/// Ratio of the growth rate of the resonance area 16√(ε/a) to the rate
/// 2πḃ at which the circulating band is swept.
pub fn capture_probability(s: &DriftSchedule) -> Result<CaptureProbability> {
    let bdot = b_rate(s)?;
    if bdot == 0.0 {
        return Err(Error::InvalidParameter {
            name: "b",
            reason: "capture probability is undefined without drift in b".into(),
        });
    }
    let ae = a_eps_mid(s)?;
    let edot = s.delta_eps() / s.duration;
    let raw = edot / bdot * 4.0 / (PI * ae.sqrt());
    let value = raw.clamp(0.0, 1.0);
    Ok(CaptureProbability {
        raw,
        value,
        clamped: value != raw,
    })
}

/// P_D = exp(−2πΓ), Γ = (gap/2)²/(ħ·α).
pub fn lz_probability(gap_2a: f64, alpha: f64, hbar: f64) -> Result<f64> {
    if !(gap_2a >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "gap",
            reason: format!("must be non-negative, got {gap_2a}"),
        });
    }
    if !(alpha > 0.0) || !(hbar > 0.0) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("alpha and hbar must be positive, got {alpha}, {hbar}"),
        });
    }
    let half = 0.5 * gap_2a;
    let gamma = half * half / (hbar * alpha);
    Ok((-2.0 * PI * gamma).exp())
}

/// Relative drift rate of two crossing levels, 4(|a| + |ε_mid|)/π · |Δb|/T.
pub fn alpha_estimate(s: &DriftSchedule) -> Result<f64> {
    Ok(4.0 * (s.a.abs() + s.eps_mid().abs()) / PI * b_rate(s)?)
}

/// Gap at which the Landau-Zener diabatic probability is 1/2 for the
/// schedule's α: 2√(ħ·α·ln2/(2π)).
pub fn de_min_half(s: &DriftSchedule) -> Result<f64> {
    let alpha = alpha_estimate(s)?;
    Ok(2.0 * (s.hbar() * alpha * LN_2 / (2.0 * PI)).sqrt())
}

/// 16√(ε/a), the pendulum area inside the separatrix.
pub fn resonance_area(a: f64, eps: f64) -> Result<f64> {
    if !(a * eps > 0.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: "a·eps must be positive".into(),
        });
    }
    Ok(16.0 * (eps / a).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsBundle {
    pub omega0: Option<f64>,
    pub beta_ad: Option<f64>,
    pub gamma_q_ad: Option<f64>,
    pub p_capture_raw: Option<f64>,
    pub p_capture: Option<f64>,
    pub p_capture_clamped: bool,
    pub alpha: Option<f64>,
    pub de_min_half: Option<f64>,
    pub v_res: Option<f64>,
    /// 8ε̇/ω0; signed.
    pub vdot_res: Option<f64>,
    pub vdot_plus: Option<f64>,
}

/// Every diagnostic that is defined for `s`; undefined ones are `None`.
pub fn diagnostics(s: &DriftSchedule) -> DiagnosticsBundle {
    let cap = capture_probability(s).ok();
    let w0 = omega0(s).ok();
    let edot = (s.duration > 0.0).then(|| s.delta_eps() / s.duration);
    DiagnosticsBundle {
        omega0: w0,
        beta_ad: beta_ad(s).ok(),
        gamma_q_ad: gamma_q_ad(s).ok(),
        p_capture_raw: cap.map(|c| c.raw),
        p_capture: cap.map(|c| c.value),
        p_capture_clamped: cap.is_some_and(|c| c.clamped),
        alpha: alpha_estimate(s).ok(),
        de_min_half: de_min_half(s).ok(),
        v_res: resonance_area(s.a, s.eps_mid()).ok(),
        vdot_res: w0.zip(edot).map(|(w, e)| 8.0 * e / w),
        vdot_plus: b_rate(s).ok().map(|r| 2.0 * PI * r),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalGrid {
    /// Sample points in p and φ, each covering [−π, π] inclusive.
    pub p: Vec<f64>,
    pub phi: Vec<f64>,
    /// energy[i][j] = H(p[i], φ[j]).
    pub energy: Vec<Vec<f64>>,
    pub separatrix: (f64, f64),
}

pub fn classical_energy(params: &HarperParams, p: f64, phi: f64) -> f64 {
    params.a() * (p - params.b()).cos() + params.eps() * phi.cos()
}

pub fn classical_energy_grid(params: &HarperParams, resolution: usize) -> Result<ClassicalGrid> {
    if resolution < 16 {
        return Err(Error::InvalidParameter {
            name: "resolution",
            reason: format!("at least 16 samples per axis, got {resolution}"),
        });
    }
    let axis: Vec<f64> = (0..resolution)
        .map(|i| -PI + 2.0 * PI * i as f64 / (resolution - 1) as f64)
        .collect();
    let energy = axis
        .iter()
        .map(|&p| axis.iter().map(|&phi| classical_energy(params, p, phi)).collect())
        .collect();
    Ok(ClassicalGrid {
        p: axis.clone(),
        phi: axis,
        energy,
        separatrix: separatrix_energies(params),
    })
}
