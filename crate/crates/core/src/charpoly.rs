//! Characteristic polynomial of 2h(1, b, ε) through 2×2 transfer matrices.
//!
//! det[x·I − 2h] = f(x) − 2cos(nb), where f(x) = tr(S_{n−1}⋯S_0) and
//! S_j = [[x − 2ε·cos(2πj/n), −1], [1, 0]]. The trace part f does not
//! depend on b, which is what makes the root-isolation path work.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::operators::root_of_unity;
use crate::params::{HarperParams, PrecisionContext};
use crate::scalar::{MpReal, Real};

#[derive(Debug, Clone, Serialize)]
pub struct CharPolyEvaluation {
    pub x: f64,
    /// det[x·I − 2h(1, b, ε)]
    pub value: f64,
    /// f(x), independent of b.
    pub trace_part: f64,
    pub precision: PrecisionContext,
}

type M2<T> = [[T; 2]; 2];

fn mul2<T: Real>(a: &M2<T>, b: &M2<T>) -> M2<T> {
    let e = |r: usize, c: usize| a[r][0].mul(&b[0][c]).add(&a[r][1].mul(&b[1][c]));
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn add2<T: Real>(a: &M2<T>, b: &M2<T>) -> M2<T> {
    let e = |r: usize, c: usize| a[r][c].add(&b[r][c]);
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

/// f(x), f'(x) and a bound on the size of the accumulated products.
pub(crate) struct TraceTerms<T> {
    pub f: T,
    pub df: T,
    /// Π_j ‖S_j‖₁, used to bound the rounding noise in f.
    pub magnitude: f64,
}

pub(crate) fn trace_terms<T: Real>(n: usize, eps: &T, x: &T) -> TraceTerms<T> {
    let bits = x.bits();
    let zero = T::zero(bits);
    let one = T::one(bits);
    let mut m: M2<T> = [[one.clone(), zero.clone()], [zero.clone(), one.clone()]];
    let mut dm: M2<T> = [[zero.clone(), zero.clone()], [zero.clone(), zero.clone()]];
    let ds: M2<T> = [[one.clone(), zero.clone()], [zero.clone(), zero.clone()]];
    let two_eps = eps.scale(2.0);
    let mut magnitude = 1.0f64;
    for j in 0..n {
        let c = root_of_unity::<T>(n, j as i64, bits).re;
        let d = x.sub(&two_eps.mul(&c));
        magnitude *= d.to_f64().abs() + 1.0;
        let s: M2<T> = [[d, one.neg()], [one.clone(), zero.clone()]];
        dm = add2(&mul2(&ds, &m), &mul2(&s, &dm));
        m = mul2(&s, &m);
    }
    TraceTerms {
        f: m[0][0].add(&m[1][1]),
        df: dm[0][0].add(&dm[1][1]),
        magnitude,
    }
}

fn require_unit_a(p: &HarperParams) -> Result<()> {
    if p.a() != 1.0 {
        return Err(Error::RequiresUnitAmplitude(p.a()));
    }
    Ok(())
}

fn two_cos_nb<T: Real>(p: &HarperParams, bits: usize) -> T {
    T::lift(p.b(), bits).scale(p.n() as f64).cos().scale(2.0)
}

fn eval_generic<T: Real>(p: &HarperParams, x: f64, ctx: PrecisionContext, bits: usize) -> CharPolyEvaluation {
    let xt = T::lift(x, bits);
    let t = trace_terms(p.n(), &T::lift(p.eps(), bits), &xt);
    let value = t.f.sub(&two_cos_nb::<T>(p, bits));
    CharPolyEvaluation {
        x,
        value: value.to_f64(),
        trace_part: t.f.to_f64(),
        precision: ctx,
    }
}

pub fn charpoly_eval(p: &HarperParams, x: f64, ctx: PrecisionContext) -> Result<CharPolyEvaluation> {
    require_unit_a(p)?;
    Ok(if ctx.is_machine() {
        eval_generic::<f64>(p, x, ctx, 53)
    } else {
        eval_generic::<MpReal>(p, x, ctx, ctx.bits())
    })
}

/// Two roots of det[2λ·I − 2h] isolated at extended precision, in energy units.
#[derive(Debug, Clone)]
pub struct RefinedPair {
    pub low: MpReal,
    pub high: MpReal,
}

impl RefinedPair {
    pub fn split(&self) -> MpReal {
        self.high.sub(&self.low)
    }
}

struct G<'a> {
    p: &'a HarperParams,
    eps: MpReal,
    shift: MpReal,
    bits: usize,
}

impl G<'_> {
    fn eval(&self, x: &MpReal) -> (MpReal, MpReal, f64) {
        let t = trace_terms(self.p.n(), &self.eps, x);
        // Relative rounding noise per operation is 2^{-bits}; allow a
        // generous constant over the n products.
        let noise = t.magnitude * self.p.n() as f64 * 2f64.powi(-(self.bits as i32) + 6);
        (t.f.sub(&self.shift), t.df, noise)
    }
}

fn sign_of(x: &MpReal) -> i32 {
    if x.is_zero() {
        0
    } else if x.is_negative() {
        -1
    } else {
        1
    }
}

/// Bisection of a sign change of `h` on [lo, hi] down to the working precision.
fn bisect(mut lo: MpReal, mut hi: MpReal, s_lo: i32, bits: usize, h: impl Fn(&MpReal) -> MpReal) -> MpReal {
    let half = MpReal::lift(0.5, bits);
    for _ in 0..(bits + 16) {
        let mid = lo.add(&hi).mul(&half);
        let s = sign_of(&h(&mid));
        if s == 0 {
            return mid;
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo.add(&hi).mul(&half)
}

/// Isolate the two roots of a nearly degenerate pair enclosed by the seeds.
///
/// The seeds are energies λ; they must enclose both members of the pair and
/// no other eigenvalue. Errors with `NoSplitDetected` when the interior
/// extremum of g is indistinguishable from zero at this precision.
pub fn refine_pair(p: &HarperParams, seed_low: f64, seed_high: f64, ctx: PrecisionContext) -> Result<RefinedPair> {
    require_unit_a(p)?;
    if !(seed_low < seed_high) {
        return Err(Error::EmptyBracket(seed_low, seed_high));
    }
    let bits = ctx.bits().max(64);
    let g = G {
        p,
        eps: MpReal::lift(p.eps(), bits),
        shift: two_cos_nb::<MpReal>(p, bits),
        bits,
    };
    let xl = MpReal::lift(2.0 * seed_low, bits);
    let xh = MpReal::lift(2.0 * seed_high, bits);
    let (gl, dl, _) = g.eval(&xl);
    let (gh, dh, _) = g.eval(&xh);
    let no_split = || Error::NoSplitDetected(seed_low, seed_high);

    let (sdl, sdh) = (sign_of(&dl), sign_of(&dh));
    if sdl == 0 || sdh == 0 || sdl == sdh {
        return Err(no_split());
    }
    let x_ext = bisect(xl.clone(), xh.clone(), sdl, bits, |x| g.eval(x).1);
    let (g_ext, _, noise) = g.eval(&x_ext);
    let (sl, sh, se) = (sign_of(&gl), sign_of(&gh), sign_of(&g_ext));
    if g_ext.abs().to_f64() <= noise || sl == 0 || sh == 0 || sl != sh || se == sl {
        return Err(no_split());
    }
    let r_lo = bisect(xl, x_ext.clone(), sl, bits, |x| g.eval(x).0);
    let r_hi = bisect(x_ext, xh, se, bits, |x| g.eval(x).0);
    let half = MpReal::lift(0.5, bits);
    Ok(RefinedPair {
        low: r_lo.mul(&half),
        high: r_hi.mul(&half),
    })
}

/// Transfer-matrix determinant of h(1, 0, ε) beside its closed form.
#[derive(Debug, Clone, Serialize)]
pub struct DeterminantPair {
    pub molinari: f64,
    pub closed_form: f64,
    /// |molinari − closed_form| / max(|closed_form|, 2^{1−n}), at working precision.
    pub relative_gap: f64,
}

/// 0 for n ≡ 0 (mod 4), 2^{1−n}(1 + εⁿ) for n odd, −2^{2−n}(1 + εⁿ) for n ≡ 2 (mod 4).
pub fn determinant_closed_form<T: Real>(n: usize, eps: &T) -> T {
    let bits = eps.bits();
    let one = T::one(bits);
    let mut en = one.clone();
    for _ in 0..n {
        en = en.mul(eps);
    }
    let base = one.add(&en);
    let pow2 = |e: i32| T::lift(2f64.powi(e), bits);
    match n % 4 {
        0 => T::zero(bits),
        2 => base.mul(&pow2(2 - n as i32)).neg(),
        _ => base.mul(&pow2(1 - n as i32)),
    }
}

fn determinant_generic<T: Real>(p: &HarperParams, bits: usize) -> DeterminantPair {
    let n = p.n();
    let eps = T::lift(p.eps(), bits);
    let t = trace_terms(n, &eps, &T::zero(bits));
    // det(−2h) = (−2)^n det h with the b = 0 corner term 2cos(0) = 2.
    let denom = T::lift((-2f64).powi(n as i32), bits);
    let molinari = t.f.sub(&T::lift(2.0, bits)).div(&denom);
    let closed = determinant_closed_form(n, &eps);
    let scale = closed.abs().max_of(&T::lift(2f64.powi(1 - n as i32), bits));
    let gap = molinari.sub(&closed).abs().div(&scale);
    DeterminantPair {
        molinari: molinari.to_f64(),
        closed_form: closed.to_f64(),
        relative_gap: gap.to_f64(),
    }
}

pub fn determinant(p: &HarperParams, ctx: PrecisionContext) -> Result<DeterminantPair> {
    require_unit_a(p)?;
    if p.b() != 0.0 {
        return Err(Error::RequiresZeroOffset(p.b()));
    }
    Ok(if ctx.is_machine() {
        determinant_generic::<f64>(p, 53)
    } else {
        determinant_generic::<MpReal>(p, ctx.bits())
    })
}
