//! Clock, shift, Fourier and parity operators and the Harper operator built
//! from them.
//!
//! Every matrix is assembled from operator products, so the corner terms of
//! the cyclic structure merge automatically for n = 2 and n = 3.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{CMat, Cx, Entries, OperatorMatrix};
use crate::params::{Basis, HarperParams, PrecisionContext};
use crate::scalar::{MpReal, Real};

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

/// ω^m with ω = e^{2πi/n}.
///
/// Quarter-turn values are exact, and ω^{n−m} is taken as the conjugate of
/// ω^m so that parity identities hold to the last bit.
pub fn root_of_unity<T: Real>(n: usize, m: i64, bits: usize) -> Cx<T> {
    let n_i = n as i64;
    let m = m.rem_euclid(n_i);
    if (4 * m) % n_i == 0 {
        let (re, im) = match 4 * m / n_i {
            0 => (1.0, 0.0),
            1 => (0.0, 1.0),
            2 => (-1.0, 0.0),
            _ => (0.0, -1.0),
        };
        return Cx::new(T::lift(re, bits), T::lift(im, bits));
    }
    if 2 * m > n_i {
        return root_of_unity::<T>(n, n_i - m, bits).conj();
    }
    let theta = T::pi(bits)
        .mul(&T::lift((2 * m) as f64, bits))
        .div(&T::lift(n as f64, bits));
    Cx::new(theta.cos(), theta.sin())
}

/// e^{iθ} for a double-precision angle, evaluated at `bits`.
fn phase<T: Real>(theta: f64, bits: usize) -> Cx<T> {
    if theta == 0.0 {
        return Cx::one(bits);
    }
    let t = T::lift(theta, bits);
    Cx::new(t.cos(), t.sin())
}

pub fn clock_matrix<T: Real>(n: usize, bits: usize) -> CMat<T> {
    let mut m = CMat::zeros(n, bits);
    for j in 0..n {
        m.set(j, j, root_of_unity(n, j as i64, bits));
    }
    m
}

/// X|j⟩ = |j+1 mod n⟩.
pub fn shift_matrix<T: Real>(n: usize, bits: usize) -> CMat<T> {
    let mut m = CMat::zeros(n, bits);
    for j in 0..n {
        m.set((j + 1) % n, j, Cx::one(bits));
    }
    m
}

/// Q_jk = ω^{jk}/√n.
pub fn fourier_matrix<T: Real>(n: usize, bits: usize) -> CMat<T> {
    let inv_sqrt = T::one(bits).div(&T::lift(n as f64, bits).sqrt());
    let mut m = CMat::zeros(n, bits);
    for j in 0..n {
        for k in 0..n {
            let w: Cx<T> = root_of_unity(n, (j * k % n) as i64, bits);
            m.set(j, k, w.scale(&inv_sqrt));
        }
    }
    m
}

/// P|j⟩ = |−j mod n⟩.
pub fn parity_matrix<T: Real>(n: usize, bits: usize) -> CMat<T> {
    let mut m = CMat::zeros(n, bits);
    for j in 0..n {
        m.set((n - j) % n, j, Cx::one(bits));
    }
    m
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    CosPhi,
    SinPhi,
    CosP,
    SinP,
}

pub fn trig_matrix<T: Real>(n: usize, kind: TrigKind, bits: usize) -> CMat<T> {
    let half = T::lift(0.5, bits);
    let z = T::zero(bits);
    let (u, sign) = match kind {
        TrigKind::CosPhi | TrigKind::SinPhi => (clock_matrix::<T>(n, bits), 1.0),
        TrigKind::CosP | TrigKind::SinP => (shift_matrix::<T>(n, bits), -1.0),
    };
    let ud = u.adjoint();
    match kind {
        TrigKind::CosPhi | TrigKind::CosP => u.add(&ud).scale(&Cx::new(half, z)),
        TrigKind::SinPhi | TrigKind::SinP => {
            // (U − U†)/(2i) for the angle, (U† − U)/(2i) for the momentum.
            let diff = u
                .scale(&Cx::from_re(T::lift(sign, bits)))
                .add(&ud.scale(&Cx::from_re(T::lift(-sign, bits))));
            diff.scale(&Cx::new(z, half.neg()))
        }
    }
}

/// (a/2)(X e^{ib} + X† e^{−ib}) + (ε/2)(Z + Z†) in the requested basis.
///
/// In the Fourier basis X becomes diag(ω^{−k}) and Z the cyclic shift, which
/// gives a real symmetric matrix with diagonal a·cos(2πk/n − b).
pub fn harper_matrix<T: Real>(p: &HarperParams, basis: Basis, bits: usize) -> CMat<T> {
    let n = p.n();
    let (x, z) = match basis {
        Basis::Conventional => (shift_matrix::<T>(n, bits), clock_matrix::<T>(n, bits)),
        Basis::Fourier => {
            let mut xf = CMat::zeros(n, bits);
            for k in 0..n {
                xf.set(k, k, root_of_unity::<T>(n, -(k as i64), bits));
            }
            (xf, shift_matrix::<T>(n, bits))
        }
    };
    let half_a = T::lift(p.a(), bits).scale(0.5);
    let half_e = T::lift(p.eps(), bits).scale(0.5);
    let e_ib: Cx<T> = phase(p.b(), bits);
    let kinetic = x
        .scale(&e_ib.scale(&half_a))
        .add(&x.adjoint().scale(&e_ib.conj().scale(&half_a)));
    let potential = z.add(&z.adjoint()).scale(&Cx::from_re(half_e));
    kinetic.add(&potential)
}

fn wrap_machine(m: CMat<f64>, basis: Basis) -> OperatorMatrix {
    OperatorMatrix::from_machine(m.to_dmatrix(), basis)
}

pub fn build_clock(n: usize) -> Result<OperatorMatrix> {
    check_dim(n)?;
    Ok(wrap_machine(clock_matrix(n, 53), Basis::Conventional))
}

pub fn build_shift(n: usize) -> Result<OperatorMatrix> {
    check_dim(n)?;
    Ok(wrap_machine(shift_matrix(n, 53), Basis::Conventional))
}

pub fn build_fourier(n: usize) -> Result<OperatorMatrix> {
    check_dim(n)?;
    Ok(wrap_machine(fourier_matrix(n, 53), Basis::Conventional))
}

pub fn build_parity(n: usize) -> Result<OperatorMatrix> {
    check_dim(n)?;
    Ok(wrap_machine(parity_matrix(n, 53), Basis::Conventional))
}

pub fn build_trig(n: usize, kind: TrigKind) -> Result<OperatorMatrix> {
    check_dim(n)?;
    Ok(wrap_machine(trig_matrix(n, kind, 53), Basis::Conventional))
}

pub fn build_harper(p: &HarperParams, basis: Basis, ctx: PrecisionContext) -> Result<OperatorMatrix> {
    let entries = if ctx.is_machine() {
        Entries::Machine(harper_matrix::<f64>(p, basis, 53).to_dmatrix())
    } else {
        Entries::Extended(harper_matrix::<MpReal>(p, basis, ctx.bits()))
    };
    Ok(OperatorMatrix::new(entries, basis, ctx, Some(*p)))
}
