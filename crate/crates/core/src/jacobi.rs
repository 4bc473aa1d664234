//! Cyclic Jacobi eigenvalue iteration for real symmetric matrices, generic
//! over the scalar so the same code runs in doubles and at extended precision.

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DEFAULT_MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone)]
pub struct JacobiResult<T> {
    /// Sorted ascending (stable).
    pub eigenvalues: Vec<T>,
    pub sweeps: usize,
}

fn frobenius<T: Real>(a: &[T], bits: usize) -> T {
    a.iter().fold(T::zero(bits), |acc, x| acc.add(&x.mul(x))).sqrt()
}

fn off_norm<T: Real>(a: &[T], n: usize, bits: usize) -> T {
    let mut s = T::zero(bits);
    for p in 0..n {
        for q in 0..n {
            if p != q {
                let x = &a[p * n + q];
                s = s.add(&x.mul(x));
            }
        }
    }
    s.sqrt()
}

/// Eigenvalues of the symmetric row-major matrix `a`, iterating until the
/// off-diagonal Frobenius norm drops below `rel_tol`·‖A‖_F.
pub fn jacobi_eigenvalues<T: Real>(mut a: Vec<T>, n: usize, rel_tol: &T, max_sweeps: usize) -> Result<JacobiResult<T>> {
    assert_eq!(a.len(), n * n, "matrix storage does not match dimension");
    let bits = a.first().map_or(53, |x| x.bits());
    let norm = frobenius(&a, bits);
    let target = rel_tol.mul(&norm);
    // Entries below this are left alone: n² of them still sum under target.
    let skip = target.div(&T::lift(2.0 * n as f64, bits));

    let mut sweeps = 0;
    loop {
        let off = off_norm(&a, n, bits);
        if off.cmp_real(&target).is_le() || norm.is_zero() {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence {
                sweeps,
                off_norm: off.to_f64(),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q].clone();
                if apq.abs().cmp_real(&skip).is_le() {
                    continue;
                }
                rotate(&mut a, n, p, q, &apq, bits);
            }
        }
    }

    let mut eigenvalues: Vec<T> = (0..n).map(|j| a[j * n + j].clone()).collect();
    eigenvalues.sort_by(|x, y| x.cmp_real(y));
    Ok(JacobiResult { eigenvalues, sweeps })
}

fn rotate<T: Real>(a: &mut [T], n: usize, p: usize, q: usize, apq: &T, bits: usize) {
    let one = T::one(bits);
    let theta = a[q * n + q].sub(&a[p * n + p]).div(&apq.scale(2.0));
    let t = if theta.to_f64().abs() > 1e150 {
        one.div(&theta.scale(2.0))
    } else {
        let mag = theta.abs().add(&theta.mul(&theta).add(&one).sqrt());
        let t = one.div(&mag);
        if theta.is_negative() {
            t.neg()
        } else {
            t
        }
    };
    let c = one.div(&t.mul(&t).add(&one).sqrt());
    let s = t.mul(&c);
    let tau = s.div(&one.add(&c));
    let shift = t.mul(apq);

    a[p * n + p] = a[p * n + p].sub(&shift);
    a[q * n + q] = a[q * n + q].add(&shift);
    a[p * n + q] = T::zero(bits);
    a[q * n + p] = T::zero(bits);
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let g = a[r * n + p].clone();
        let h = a[r * n + q].clone();
        let new_p = g.sub(&s.mul(&h.add(&g.mul(&tau))));
        let new_q = h.add(&s.mul(&g.sub(&h.mul(&tau))));
        a[r * n + p] = new_p.clone();
        a[p * n + r] = new_p;
        a[r * n + q] = new_q.clone();
        a[q * n + r] = new_q;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::MpReal;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-1.0..1.0);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        a
    }

    #[test]
    fn matches_nalgebra_in_doubles() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 7, 20] {
            let a = random_symmetric(n, &mut rng);
            let r = jacobi_eigenvalues(a.clone(), n, &1e-15, DEFAULT_MAX_SWEEPS).unwrap();
            let mut want: Vec<f64> = SymmetricEigen::new(DMatrix::from_row_slice(n, n, &a))
                .eigenvalues
                .iter()
                .copied()
                .collect();
            want.sort_by(f64::total_cmp);
            for (x, y) in r.eigenvalues.iter().zip(&want) {
                assert!((x - y).abs() < 1e-13, "n={n}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn diagonal_input_needs_no_sweeps() {
        let a = vec![3.0, 0.0, 0.0, -1.0];
        let r = jacobi_eigenvalues(a, 2, &1e-15, 10).unwrap();
        assert_eq!(r.sweeps, 0);
        assert_eq!(r.eigenvalues, vec![-1.0, 3.0]);
    }

    #[test]
    fn extended_precision_two_by_two() {
        // [[ε,1],[1,−ε]] has eigenvalues ±√(1+ε²).
        let bits = 192;
        let e = MpReal::lift(0.3, bits);
        let one = MpReal::one(bits);
        let a = vec![e.clone(), one.clone(), one.clone(), e.neg()];
        let tol = MpReal::lift(1e-50, bits);
        let r = jacobi_eigenvalues(a, 2, &tol, 50).unwrap();
        let want = e.mul(&e).add(&one).sqrt();
        let err = r.eigenvalues[1].sub(&want).abs().to_f64();
        assert!(err < 1e-55, "err {err:e}");
        assert!(r.eigenvalues[0].add(&want).abs().to_f64() < 1e-55);
    }

    #[test]
    fn reports_exhausted_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_symmetric(12, &mut rng);
        let err = jacobi_eigenvalues(a, 12, &1e-15, 1).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { sweeps: 1, .. }));
    }
}
