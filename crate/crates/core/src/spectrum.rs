//! Eigen-decomposition at machine and extended precision, nearest-neighbour
//! spacings, and the minimum-spacing model used for precision budgeting.

use log::warn;
use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::{jacobi_eigenvalues, DEFAULT_MAX_SWEEPS};
use crate::matrix::{Entries, OperatorMatrix, C64};
use crate::operators::harper_matrix;
use crate::params::{Basis, HarperParams, PrecisionContext};
use crate::scalar::{MpReal, Real};

#[derive(Debug, Clone)]
pub struct Spectrum {
    pub params: Option<HarperParams>,
    pub precision: PrecisionContext,
    /// Ascending, rounded to doubles.
    pub eigenvalues: Vec<f64>,
    /// Full-precision eigenvalues, set on the extended path.
    pub extended: Option<Vec<MpReal>>,
    /// dE_j, computed at working precision before rounding.
    pub spacings: Vec<f64>,
    /// Orthonormal columns matching `eigenvalues` (machine path only).
    pub eigenvectors: Option<DMatrix<C64>>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Decimal form of eigenvalue `j`; extended values keep `digits` significant digits.
    pub fn eigenvalue_string(&self, j: usize) -> String {
        match &self.extended {
            Some(v) => v[j].to_sci_string(self.precision.digits() as usize),
            None => format!("{}", self.eigenvalues[j]),
        }
    }

    /// max_j ‖H v_j − λ_j v_j‖_∞ against the matrix the spectrum came from.
    pub fn max_residual(&self, m: &DMatrix<C64>) -> Option<f64> {
        let v = self.eigenvectors.as_ref()?;
        let hv = m * v;
        let mut worst = 0.0f64;
        for (j, &lam) in self.eigenvalues.iter().enumerate() {
            for r in 0..v.nrows() {
                worst = worst.max((hv[(r, j)] - v[(r, j)] * lam).norm());
            }
        }
        Some(worst)
    }
}

/// dE_j = min over k ≠ j of |λ_j − λ_k| for an ascending list.
pub fn spacings(sorted: &[f64]) -> Vec<f64> {
    spacings_generic(sorted)
}

fn spacings_generic<T: Real>(sorted: &[T]) -> Vec<f64> {
    let n = sorted.len();
    if n < 2 {
        return vec![f64::INFINITY; n];
    }
    let gaps: Vec<f64> = sorted.windows(2).map(|w| w[1].sub(&w[0]).abs().to_f64()).collect();
    (0..n)
        .map(|j| match j {
            0 => gaps[0],
            _ if j == n - 1 => gaps[n - 2],
            _ => gaps[j - 1].min(gaps[j]),
        })
        .collect()
}

fn sort_machine(values: &[f64], vectors: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let vals = order.iter().map(|&i| values[i]).collect();
    let vecs = DMatrix::from_fn(vectors.nrows(), vectors.ncols(), |r, c| vectors[(r, order[c])]);
    (vals, vecs)
}

fn hermitian_guard(m: &OperatorMatrix) -> Result<()> {
    let defect = m.hermitian_defect();
    if defect > 1e-12 * m.norm_inf().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

fn ten_pow_neg(k: i32, bits: usize) -> MpReal {
    let ten = MpReal::lift(10.0, bits);
    let mut x = MpReal::one(bits);
    for _ in 0..k.max(0) {
        x = x.div(&ten);
    }
    x
}

/// Eigenvalues (and optionally vectors) of a Hermitian operator.
///
/// At machine precision this is a dense Hermitian solve. At 17 digits and
/// above it is cyclic Jacobi on the real symmetric Fourier-basis form,
/// eigenvalues only.
pub fn eigen_decompose(m: &OperatorMatrix, want_vectors: bool) -> Result<Spectrum> {
    hermitian_guard(m)?;
    let ctx = m.precision();
    match m.entries() {
        Entries::Machine(h) => {
            let eig = SymmetricEigen::new(h.clone());
            let raw: Vec<f64> = eig.eigenvalues.iter().copied().collect();
            let (eigenvalues, vectors) = sort_machine(&raw, &eig.eigenvectors);
            Ok(Spectrum {
                params: m.params().copied(),
                precision: ctx,
                spacings: spacings(&eigenvalues),
                eigenvalues,
                extended: None,
                eigenvectors: want_vectors.then_some(vectors),
            })
        }
        Entries::Extended(h) => {
            if want_vectors {
                return Err(Error::VectorsUnavailable);
            }
            let real = if m.basis() == Basis::Fourier && h.max_imag() == 0.0 {
                h.real_parts()
            } else {
                let p = m.params().ok_or(Error::UnsupportedHighPrecisionInput)?;
                harper_matrix::<MpReal>(p, Basis::Fourier, ctx.bits()).real_parts()
            };
            let tol = ten_pow_neg(ctx.digits() as i32 - 2, ctx.bits());
            let r = jacobi_eigenvalues(real, m.n(), &tol, DEFAULT_MAX_SWEEPS)?;
            log::debug!("jacobi converged in {} sweeps (n = {})", r.sweeps, m.n());
            Ok(Spectrum {
                params: m.params().copied(),
                precision: ctx,
                eigenvalues: r.eigenvalues.iter().map(Real::to_f64).collect(),
                spacings: spacings_generic(&r.eigenvalues),
                extended: Some(r.eigenvalues),
                eigenvectors: None,
            })
        }
    }
}

/// Smallest spacing and the lower index of the pair achieving it.
pub fn min_spacing(s: &Spectrum) -> (f64, usize) {
    let n = s.len();
    if n < 2 {
        return (f64::INFINITY, 0);
    }
    let gaps: Vec<f64> = match &s.extended {
        Some(v) => v.windows(2).map(|w| w[1].sub(&w[0]).to_f64()).collect(),
        None => s.eigenvalues.windows(2).map(|w| w[1] - w[0]).collect(),
    };
    let (idx, &val) = gaps
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("at least one gap");
    if let Some(p) = &s.params {
        if let Ok(required) = precision_budget_for(p) {
            if required > s.precision.digits() {
                warn!(
                    "predicted minimum spacing needs {required} digits, context has {}",
                    s.precision.digits()
                );
            }
        }
    }
    (val, idx)
}

/// ε^{(n−1)/2}·3/n for odd n, ε^{(n−2)/2}·5/n for n ≡ 2 (mod 4), 0 for n ≡ 0 (mod 4).
pub fn min_spacing_model(n: usize, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "eps",
            reason: format!("model needs 0 < eps <= 1, got {eps}"),
        });
    }
    let nf = n as f64;
    Ok(match n % 4 {
        0 => 0.0,
        2 => eps.powf((nf - 2.0) / 2.0) * 5.0 / nf,
        _ => eps.powf((nf - 1.0) / 2.0) * 3.0 / nf,
    })
}

/// Decimal digits needed to resolve the predicted minimum spacing with ten
/// guard digits. For n ≡ 0 (mod 4) the exact zero pair carries no scale, so
/// the n ≡ 2 expression stands in for the smallest non-degenerate gap.
pub fn precision_budget(n: usize, eps: f64) -> Result<u32> {
    let mut model = min_spacing_model(n, eps)?;
    if model == 0.0 {
        let nf = n as f64;
        model = eps.powf((nf - 2.0) / 2.0) * 5.0 / nf;
    }
    Ok((-model.log10()).ceil().max(0.0) as u32 + 10)
}

fn precision_budget_for(p: &HarperParams) -> Result<u32> {
    if p.a() == 0.0 {
        return Err(Error::InvalidParameter {
            name: "a",
            reason: "zero amplitude".into(),
        });
    }
    // Spectrum of h(a, b, ε) is a·spectrum of h(1, b, ε/a).
    let ratio = (p.eps() / p.a()).abs();
    let mut digits = precision_budget(p.n(), ratio.min(1.0))?;
    if p.a().abs() < 1.0 {
        digits += (-p.a().abs().log10()).ceil() as u32;
    }
    Ok(digits)
}

/// ±(|a| − |ε|).
pub fn separatrix_energies(p: &HarperParams) -> (f64, f64) {
    let (a, e) = (p.a().abs(), p.eps().abs());
    if a == 0.0 || e == 0.0 {
        warn!("a·eps = 0: phase space is not divided");
    } else if a == e {
        warn!("|a| = |eps|: the two separatrices coincide");
    }
    let s = a - e;
    (-s, s)
}

#[derive(Debug, Clone, Serialize)]
pub struct SpacingRow {
    pub index: usize,
    pub eigenvalue: f64,
    pub log10_nearest_spacing: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::build_harper;

    fn machine(n: usize, a: f64, b: f64, eps: f64) -> Spectrum {
        let p = HarperParams::new(n, a, b, eps).unwrap();
        let m = build_harper(&p, Basis::Conventional, PrecisionContext::MACHINE).unwrap();
        eigen_decompose(&m, true).unwrap()
    }

    fn extended(n: usize, b: f64, eps: f64, digits: u32) -> Spectrum {
        let p = HarperParams::new(n, 1.0, b, eps).unwrap();
        let ctx = PrecisionContext::new(digits).unwrap();
        let m = build_harper(&p, Basis::Fourier, ctx).unwrap();
        eigen_decompose(&m, false).unwrap()
    }

    #[test]
    fn two_by_two_closed_form() {
        let s = machine(2, 1.0, 0.0, 0.3);
        let r = 1.09f64.sqrt();
        assert!((s.eigenvalues[0] + r).abs() < 1e-15);
        assert!((s.eigenvalues[1] - r).abs() < 1e-15);
        let (d, i) = min_spacing(&s);
        assert!((d - 2.0 * r).abs() < 1e-15);
        assert_eq!(i, 0);
    }

    #[test]
    fn cosine_spectrum_n3() {
        let s = machine(3, 1.0, 0.0, 0.0);
        for (x, y) in s.eigenvalues.iter().zip([-0.5, -0.5, 1.0]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn spacings_definition() {
        assert_eq!(spacings(&[-1.0, 0.0, 2.0]), vec![1.0, 1.0, 2.0]);
        assert_eq!(spacings(&[3.0]), vec![f64::INFINITY]);
    }

    #[test]
    fn machine_residuals_and_orthonormality() {
        for &(n, b) in &[(5, 0.3), (16, 1.0), (33, 2.2)] {
            let p = HarperParams::new(n, 1.0, b, 0.6).unwrap();
            let m = build_harper(&p, Basis::Conventional, PrecisionContext::MACHINE).unwrap();
            let s = eigen_decompose(&m, true).unwrap();
            let h = m.machine().unwrap();
            assert!(s.max_residual(h).unwrap() <= 1e-12 * m.norm_inf());
            let v = s.eigenvectors.as_ref().unwrap();
            let g = v.adjoint() * v;
            let e = (g - DMatrix::<C64>::identity(n, n))
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max);
            assert!(e < 1e-13);
            assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn zero_pair_at_fifty_digits() {
        let s = extended(4, 0.0, 0.5, 50);
        let ext = s.extended.as_ref().unwrap();
        let zeros = ext.iter().filter(|x| x.to_f64().abs() < 1e-40).count();
        assert_eq!(zeros, 2);
        let (d, i) = min_spacing(&s);
        assert!(d < 1e-40);
        assert_eq!(i, 1);
    }

    #[test]
    fn extended_matches_machine() {
        let s = extended(14, 0.4, 0.3, 40);
        let m = machine(14, 1.0, 0.4, 0.3);
        for (x, y) in s.eigenvalues.iter().zip(&m.eigenvalues) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn conventional_extended_input_is_rebuilt() {
        let p = HarperParams::new(6, 1.0, 0.2, 0.3).unwrap();
        let ctx = PrecisionContext::new(30).unwrap();
        let m = build_harper(&p, Basis::Conventional, ctx).unwrap();
        let s = eigen_decompose(&m, false).unwrap();
        let mm = machine(6, 1.0, 0.2, 0.3);
        for (x, y) in s.eigenvalues.iter().zip(&mm.eigenvalues) {
            assert!((x - y).abs() < 1e-14);
        }
        assert_eq!(eigen_decompose(&m, true).unwrap_err(), Error::VectorsUnavailable);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = DMatrix::<C64>::zeros(2, 2);
        h[(0, 1)] = C64::new(1.0, 0.0);
        let m = OperatorMatrix::from_machine(h, Basis::Conventional);
        assert!(matches!(eigen_decompose(&m, false), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn n14_spacing_structure() {
        let s = extended(14, 0.0, 0.3, 50);
        assert!(s.spacings.iter().all(|&d| d > 0.0));
        let (_, i) = min_spacing(&s);
        let mid = s.eigenvalues[i].abs().max(s.eigenvalues[i + 1].abs());
        let smallest_abs = s.eigenvalues.iter().map(|x| x.abs()).fold(f64::INFINITY, f64::min);
        // The pair straddles or sits next to the centre of the spectrum.
        assert!(mid <= 2.0 * smallest_abs + 1e-12, "min pair at {i}");
    }

    #[test]
    fn model_values() {
        assert_eq!(min_spacing_model(52, 0.3).unwrap(), 0.0);
        let m49 = min_spacing_model(49, 0.3).unwrap();
        assert!((m49 - 0.3f64.powi(24) * 3.0 / 49.0).abs() < 1e-28);
        assert!((m49 - 1.73e-14).abs() < 0.01e-14);
        assert_eq!(min_spacing_model(50, 0.5).unwrap(), 0.5f64.powi(24) * 5.0 / 50.0);
        assert!(min_spacing_model(10, 0.0).is_err());
        assert!(min_spacing_model(10, 1.5).is_err());
    }

    #[test]
    fn budget_is_model_plus_guard() {
        assert_eq!(precision_budget(49, 0.3).unwrap(), 24);
        assert!(precision_budget(52, 0.3).unwrap() > 16);
    }

    #[test]
    fn separatrices() {
        let p = |a, e| HarperParams::new(8, a, 0.0, e).unwrap();
        assert_eq!(separatrix_energies(&p(1.0, 0.3)), (-0.7, 0.7));
        assert_eq!(separatrix_energies(&p(1.0, 1.0)), (0.0, 0.0));
        assert_eq!(separatrix_energies(&p(2.0, -0.5)), (-1.5, 1.5));
    }
}
