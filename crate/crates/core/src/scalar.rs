//! Real scalar abstraction shared by the machine and arbitrary-precision paths.
//!
//! `f64` and [`MpReal`] both implement [`Real`], so the operator builders, the
//! Jacobi solver and the transfer-matrix recursion are written once.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, RoundingMode};

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constants cache"));
}

pub trait Real: Clone + fmt::Debug + Send + Sync + 'static {
    /// Lift an `f64` at `bits` of binary precision (ignored by `f64`).
    fn lift(x: f64, bits: usize) -> Self;
    fn pi(bits: usize) -> Self;
    fn bits(&self) -> usize;

    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn abs(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;

    fn to_f64(&self) -> f64;
    fn cmp_real(&self, o: &Self) -> Ordering;
    fn is_zero(&self) -> bool;

    fn zero(bits: usize) -> Self {
        Self::lift(0.0, bits)
    }
    fn one(bits: usize) -> Self {
        Self::lift(1.0, bits)
    }
    fn scale(&self, x: f64) -> Self {
        self.mul(&Self::lift(x, self.bits()))
    }
    fn max_of(&self, o: &Self) -> Self {
        if self.cmp_real(o) == Ordering::Less {
            o.clone()
        } else {
            self.clone()
        }
    }
    fn is_negative(&self) -> bool {
        self.cmp_real(&Self::zero(self.bits())) == Ordering::Less
    }
}

impl Real for f64 {
    fn lift(x: f64, _bits: usize) -> Self {
        x
    }
    fn pi(_bits: usize) -> Self {
        std::f64::consts::PI
    }
    fn bits(&self) -> usize {
        53
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn sqrt(&self) -> Self {
        f64::sqrt(*self)
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn cmp_real(&self, o: &Self) -> Ordering {
        self.total_cmp(o)
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
}

/// Binary floating point number with a fixed mantissa width, backed by astro-float.
#[derive(Clone)]
pub struct MpReal {
    v: BigFloat,
    p: usize,
}

impl MpReal {
    fn wrap(v: BigFloat, p: usize) -> Self {
        MpReal { v, p }
    }

    fn prec2(&self, o: &Self) -> usize {
        self.p.max(o.p)
    }

    pub fn is_finite(&self) -> bool {
        !(self.v.is_nan() || self.v.is_inf())
    }

    pub fn from_i64(i: i64, bits: usize) -> Self {
        MpReal::wrap(BigFloat::from_i64(i, bits), bits)
    }

    /// Decimal scientific notation rounded to `sig` significant digits.
    pub fn to_sci_string(&self, sig: usize) -> String {
        round_scientific(&self.v.to_string(), sig)
    }
}

impl fmt::Debug for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl fmt::Display for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.v)
    }
}

impl Real for MpReal {
    fn lift(x: f64, bits: usize) -> Self {
        MpReal::wrap(BigFloat::from_f64(x, bits), bits)
    }
    fn pi(bits: usize) -> Self {
        let v = CONSTS.with(|c| c.borrow_mut().pi(bits, RM));
        MpReal::wrap(v, bits)
    }
    fn bits(&self) -> usize {
        self.p
    }
    fn add(&self, o: &Self) -> Self {
        let p = self.prec2(o);
        MpReal::wrap(self.v.add(&o.v, p, RM), p)
    }
    fn sub(&self, o: &Self) -> Self {
        let p = self.prec2(o);
        MpReal::wrap(self.v.sub(&o.v, p, RM), p)
    }
    fn mul(&self, o: &Self) -> Self {
        let p = self.prec2(o);
        MpReal::wrap(self.v.mul(&o.v, p, RM), p)
    }
    fn div(&self, o: &Self) -> Self {
        let p = self.prec2(o);
        MpReal::wrap(self.v.div(&o.v, p, RM), p)
    }
    fn neg(&self) -> Self {
        MpReal::wrap(self.v.neg(), self.p)
    }
    fn abs(&self) -> Self {
        MpReal::wrap(self.v.abs(), self.p)
    }
    fn sqrt(&self) -> Self {
        MpReal::wrap(self.v.sqrt(self.p, RM), self.p)
    }
    fn sin(&self) -> Self {
        let v = CONSTS.with(|c| self.v.sin(self.p, RM, &mut c.borrow_mut()));
        MpReal::wrap(v, self.p)
    }
    fn cos(&self) -> Self {
        let v = CONSTS.with(|c| self.v.cos(self.p, RM, &mut c.borrow_mut()));
        MpReal::wrap(v, self.p)
    }
    fn to_f64(&self) -> f64 {
        if self.v.is_nan() {
            return f64::NAN;
        }
        if self.v.is_inf_pos() {
            return f64::INFINITY;
        }
        if self.v.is_inf_neg() {
            return f64::NEG_INFINITY;
        }
        // The decimal form carries more digits than f64 holds, so parsing
        // it rounds correctly up to a negligible double-rounding window.
        self.v.to_string().parse().unwrap_or(f64::NAN)
    }
    fn cmp_real(&self, o: &Self) -> Ordering {
        match self.v.cmp(&o.v) {
            Some(c) if c < 0 => Ordering::Less,
            Some(c) if c > 0 => Ordering::Greater,
            _ => Ordering::Equal,
        }
    }
    fn is_zero(&self) -> bool {
        self.v.is_zero()
    }
}

/// Round a decimal string of the form `[-]d.ddd[e±x]` to `sig` significant digits.
pub(crate) fn round_scientific(s: &str, sig: usize) -> String {
    let sig = sig.max(1);
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().unwrap_or(0)),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    let mut digits: Vec<u8> = int_part.bytes().chain(frac_part.bytes()).map(|c| c - b'0').collect();
    // Position of the decimal point relative to the digit string start.
    let mut point = int_part.len() as i64 + exp;
    let lead = digits.iter().position(|&d| d != 0);
    let Some(lead) = lead else {
        return "0".to_string();
    };
    digits.drain(..lead);
    point -= lead as i64;

    if digits.len() > sig {
        let round_up = digits[sig] >= 5;
        digits.truncate(sig);
        if round_up {
            let mut i = sig;
            loop {
                if i == 0 {
                    digits.insert(0, 1);
                    digits.truncate(sig);
                    point += 1;
                    break;
                }
                i -= 1;
                if digits[i] == 9 {
                    digits[i] = 0;
                } else {
                    digits[i] += 1;
                    break;
                }
            }
        }
    }
    while digits.len() > 1 && *digits.last().unwrap() == 0 {
        digits.pop();
    }
    let mut out = String::new();
    if neg {
        out.push('-');
    }
    out.push((b'0' + digits[0]) as char);
    if digits.len() > 1 {
        out.push('.');
        for &d in &digits[1..] {
            out.push((b'0' + d) as char);
        }
    }
    let e = point - 1;
    if e != 0 {
        out.push_str(&format!("e{e}"));
    }
    out
}
