//! Dense Hermitian positive-definite solves over `Complex<T>`.

use crate::error::{invalid, Result};
use crate::scalar::{Cplx, Real};

/// Lower Cholesky factor `A = L Lᴴ` of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<T> {
    n: usize,
    lower: Vec<Cplx<T>>,
}

impl<T: Real> Cholesky<T> {
    /// Factors the row-major `n×n` matrix `a`; only the lower triangle is read.
    pub fn factor(mut a: Vec<Cplx<T>>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(invalid(format!("matrix buffer of {} for n = {n}", a.len())));
        }
        for j in 0..n {
            let mut d = a[j * n + j].re;
            for k in 0..j {
                d -= a[j * n + k].norm_sqr();
            }
            if !(d > T::zero()) {
                return Err(invalid(format!("matrix not positive definite at pivot {j}")));
            }
            let d = d.sqrt();
            a[j * n + j] = Cplx::new(d, T::zero());
            for i in j + 1..n {
                let mut s = a[i * n + j];
                for k in 0..j {
                    s -= a[i * n + k] * a[j * n + k].conj();
                }
                a[i * n + j] = s / d;
            }
            for k in j + 1..n {
                a[j * n + k] = Cplx::new(T::zero(), T::zero());
            }
        }
        Ok(Self { n, lower: a })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[Cplx<T>]) -> Vec<Cplx<T>> {
        let n = self.n;
        let l = &self.lower;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i].re;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[k * n + i].conj() * y[k];
            }
            y[i] = s / l[i * n + i].re;
        }
        y
    }

    /// `bᴴ A⁻¹ b`, computed as `‖L⁻¹ b‖²`.
    pub fn quadratic_form_inverse(&self, b: &[Cplx<T>]) -> T {
        let n = self.n;
        let l = &self.lower;
        let mut y = b.to_vec();
        let mut acc = T::zero();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[i * n + k] * y[k];
            }
            y[i] = s / l[i * n + i].re;
            acc += y[i].norm_sqr();
        }
        acc
    }

    /// Diagonal entry `L_jj` of the factor.
    pub fn pivot(&self, j: usize) -> T {
        self.lower[j * self.n + j].re
    }

    /// Diagonal of `A⁻¹`, from `[A⁻¹]_kk = ‖L⁻¹ e_k‖²`.
    pub fn inverse_diagonal(&self) -> Vec<T> {
        let n = self.n;
        let l = &self.lower;
        let mut y = vec![Cplx::new(T::zero(), T::zero()); n];
        (0..n)
            .map(|k| {
                y[k] = Cplx::new(T::one() / l[k * n + k].re, T::zero());
                let mut acc = y[k].norm_sqr();
                for i in k + 1..n {
                    let mut s = Cplx::new(T::zero(), T::zero());
                    for j in k..i {
                        s -= l[i * n + j] * y[j];
                    }
                    y[i] = s / l[i * n + i].re;
                    acc += y[i].norm_sqr();
                }
                acc
            })
            .collect()
    }

    /// Natural log of `det A`.
    pub fn ln_det(&self) -> T {
        (0..self.n).map(|i| self.lower[i * self.n + i].re.ln()).sum::<T>() * T::lit(2.0)
    }
}

/// Row-major `diag·I + Σ_j c_j c_jᴴ` for `len`-dimensional columns.
pub fn outer_gram<T: Real>(columns: &[Vec<Cplx<T>>], len: usize, diag: T) -> Vec<Cplx<T>> {
    let mut a = vec![Cplx::new(T::zero(), T::zero()); len * len];
    for i in 0..len {
        a[i * len + i].re = diag;
    }
    for c in columns {
        for i in 0..len {
            let ci = c[i];
            for k in 0..=i {
                a[i * len + k] += ci * c[k].conj();
            }
        }
    }
    a
}

/// Row-major `diag·I + Cᴴ C` where `C` has the given columns.
pub fn inner_gram<T: Real>(columns: &[Vec<Cplx<T>>], diag: T) -> Vec<Cplx<T>> {
    let m = columns.len();
    let mut a = vec![Cplx::new(T::zero(), T::zero()); m * m];
    for i in 0..m {
        for k in 0..=i {
            let dot: Cplx<T> = columns[k]
                .iter()
                .zip(&columns[i])
                .map(|(x, y)| x.conj() * y)
                .fold(Cplx::new(T::zero(), T::zero()), |s, v| s + v);
            a[i * m + k] = dot.conj();
        }
        a[i * m + i].re += diag;
        a[i * m + i].im = T::zero();
    }
    a
}
