//! Dense complex matrices over a [`Real`] scalar and the precision-tagged
//! [`OperatorMatrix`] handed between modules.

use nalgebra::{Complex, DMatrix};

use crate::params::{Basis, HarperParams, PrecisionContext};
use crate::scalar::{MpReal, Real};

pub type C64 = Complex<f64>;

/// Complex number as a pair of reals of the same precision.
#[derive(Debug, Clone)]
pub struct Cx<T> {
    pub re: T,
    pub im: T,
}

impl<T: Real> Cx<T> {
    pub fn new(re: T, im: T) -> Self {
        Cx { re, im }
    }
    pub fn zero(bits: usize) -> Self {
        Cx::new(T::zero(bits), T::zero(bits))
    }
    pub fn one(bits: usize) -> Self {
        Cx::new(T::one(bits), T::zero(bits))
    }
    pub fn from_re(re: T) -> Self {
        let bits = re.bits();
        Cx::new(re, T::zero(bits))
    }
    pub fn add(&self, o: &Self) -> Self {
        Cx::new(self.re.add(&o.re), self.im.add(&o.im))
    }
    pub fn sub(&self, o: &Self) -> Self {
        Cx::new(self.re.sub(&o.re), self.im.sub(&o.im))
    }
    pub fn mul(&self, o: &Self) -> Self {
        Cx::new(
            self.re.mul(&o.re).sub(&self.im.mul(&o.im)),
            self.re.mul(&o.im).add(&self.im.mul(&o.re)),
        )
    }
    pub fn scale(&self, s: &T) -> Self {
        Cx::new(self.re.mul(s), self.im.mul(s))
    }
    pub fn conj(&self) -> Self {
        Cx::new(self.re.clone(), self.im.neg())
    }
    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    pub fn to_c64(&self) -> C64 {
        C64::new(self.re.to_f64(), self.im.to_f64())
    }
}

/// Row-major dense square matrix over `Cx<T>`.
#[derive(Debug, Clone)]
pub struct CMat<T> {
    n: usize,
    data: Vec<Cx<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(n: usize, bits: usize) -> Self {
        CMat {
            n,
            data: vec![Cx::zero(bits); n * n],
        }
    }

    pub fn identity(n: usize, bits: usize) -> Self {
        let mut m = Self::zeros(n, bits);
        for j in 0..n {
            m.set(j, j, Cx::one(bits));
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, r: usize, c: usize) -> &Cx<T> {
        &self.data[r * self.n + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Cx<T>) {
        self.data[r * self.n + c] = v;
    }

    pub fn add(&self, o: &Self) -> Self {
        CMat {
            n: self.n,
            data: self.data.iter().zip(&o.data).map(|(x, y)| x.add(y)).collect(),
        }
    }

    pub fn scale(&self, s: &Cx<T>) -> Self {
        CMat {
            n: self.n,
            data: self.data.iter().map(|x| x.mul(s)).collect(),
        }
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut m = self.clone();
        for r in 0..n {
            for c in 0..n {
                m.data[r * n + c] = self.get(c, r).conj();
            }
        }
        m
    }

    /// Matrix product; structurally zero terms are skipped so products of
    /// permutation and diagonal factors stay exact.
    pub fn matmul(&self, o: &Self) -> Self {
        let n = self.n;
        let bits = self.data.first().map_or(53, |x| x.re.bits());
        let mut out = Self::zeros(n, bits);
        for r in 0..n {
            for k in 0..n {
                let x = self.get(r, k);
                if x.is_zero() {
                    continue;
                }
                for c in 0..n {
                    let y = o.get(k, c);
                    if y.is_zero() {
                        continue;
                    }
                    let idx = r * n + c;
                    out.data[idx] = out.data[idx].add(&x.mul(y));
                }
            }
        }
        out
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.n, self.n, |r, c| self.get(r, c).to_c64())
    }

    /// Real parts, row-major. Only meaningful for real matrices.
    pub fn real_parts(&self) -> Vec<T> {
        self.data.iter().map(|x| x.re.clone()).collect()
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|x| x.im.to_f64().abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub enum Entries {
    Machine(DMatrix<C64>),
    Extended(CMat<MpReal>),
}

/// Square complex operator together with its basis and precision context.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    basis: Basis,
    precision: PrecisionContext,
    params: Option<HarperParams>,
    entries: Entries,
}

impl OperatorMatrix {
    pub fn from_machine(m: DMatrix<C64>, basis: Basis) -> Self {
        OperatorMatrix {
            basis,
            precision: PrecisionContext::MACHINE,
            params: None,
            entries: Entries::Machine(m),
        }
    }

    pub(crate) fn new(
        entries: Entries,
        basis: Basis,
        precision: PrecisionContext,
        params: Option<HarperParams>,
    ) -> Self {
        OperatorMatrix {
            basis,
            precision,
            params,
            entries,
        }
    }

    pub fn n(&self) -> usize {
        match &self.entries {
            Entries::Machine(m) => m.nrows(),
            Entries::Extended(m) => m.n(),
        }
    }

    pub fn basis(&self) -> Basis {
        self.basis
    }

    pub fn precision(&self) -> PrecisionContext {
        self.precision
    }

    /// Harper parameters, when the matrix came from `build_harper`.
    pub fn params(&self) -> Option<&HarperParams> {
        self.params.as_ref()
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn machine(&self) -> Option<&DMatrix<C64>> {
        match &self.entries {
            Entries::Machine(m) => Some(m),
            Entries::Extended(_) => None,
        }
    }

    pub fn into_machine(self) -> Option<DMatrix<C64>> {
        match self.entries {
            Entries::Machine(m) => Some(m),
            Entries::Extended(_) => None,
        }
    }

    /// Entry rounded to double precision.
    pub fn entry(&self, r: usize, c: usize) -> C64 {
        match &self.entries {
            Entries::Machine(m) => m[(r, c)],
            Entries::Extended(m) => m.get(r, c).to_c64(),
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<C64> {
        match &self.entries {
            Entries::Machine(m) => m.clone(),
            Entries::Extended(m) => m.to_dmatrix(),
        }
    }

    /// max |H_rc − conj(H_cr)|, evaluated after rounding to doubles.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n();
        let mut worst = 0.0f64;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        worst
    }

    pub fn trace(&self) -> C64 {
        (0..self.n()).map(|j| self.entry(j, j)).sum()
    }

    /// ‖H‖_∞, the maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        let n = self.n();
        (0..n)
            .map(|r| (0..n).map(|c| self.entry(r, c).norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}
