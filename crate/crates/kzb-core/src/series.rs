//! Truncated power series in one formal variable x with complex
//! coefficients. Carrier for the kernels k_α(x,z|τ), g_α, φ̃_γ.

use crate::scalar::C64;
use crate::{Error, Result};

/// Σ_{s=0}^{D} c_s x^s; the length is fixed at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct XSeries {
    pub coeffs: Vec<C64>,
}

impl XSeries {
    pub fn zero(deg: usize) -> Self {
        XSeries {
            coeffs: vec![C64::new(0.0, 0.0); deg + 1],
        }
    }

    pub fn one(deg: usize) -> Self {
        let mut s = Self::zero(deg);
        s.coeffs[0] = C64::new(1.0, 0.0);
        s
    }

    pub fn from_coeffs(coeffs: Vec<C64>) -> Self {
        XSeries { coeffs }
    }

    pub fn deg(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, s: usize) -> C64 {
        self.coeffs.get(s).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn truncated(&self, deg: usize) -> XSeries {
        let mut c = self.coeffs.clone();
        c.resize(deg + 1, C64::new(0.0, 0.0));
        XSeries { coeffs: c }
    }

    pub fn add(&self, other: &XSeries) -> XSeries {
        let deg = self.deg().max(other.deg());
        let mut out = XSeries::zero(deg);
        for s in 0..=deg {
            out.coeffs[s] = self.coeff(s) + other.coeff(s);
        }
        out
    }

    pub fn sub(&self, other: &XSeries) -> XSeries {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, c: C64) -> XSeries {
        XSeries {
            coeffs: self.coeffs.iter().map(|x| x * c).collect(),
        }
    }

    pub fn mul(&self, other: &XSeries) -> XSeries {
        let deg = self.deg().max(other.deg());
        let mut out = XSeries::zero(deg);
        for i in 0..=self.deg().min(deg) {
            if self.coeffs[i].norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..=other.deg() {
                if i + j > deg {
                    break;
                }
                out.coeffs[i + j] += self.coeffs[i] * other.coeffs[j];
            }
        }
        out
    }

    /// Multiplicative inverse; requires a nonzero constant term.
    pub fn inv(&self) -> Result<XSeries> {
        let c0 = self.coeff(0);
        if c0.norm() < 1e-300 {
            return Err(Error::Domain("series inverse needs nonzero constant term".into()));
        }
        let deg = self.deg();
        let mut out = XSeries::zero(deg);
        out.coeffs[0] = 1.0 / c0;
        for s in 1..=deg {
            let mut acc = C64::new(0.0, 0.0);
            for k in 1..=s {
                acc += self.coeff(k) * out.coeffs[s - k];
            }
            out.coeffs[s] = -acc / c0;
        }
        Ok(out)
    }

    pub fn div(&self, other: &XSeries) -> Result<XSeries> {
        Ok(self.mul(&other.inv()?))
    }

    /// Termwise derivative d/dx.
    pub fn derivative(&self) -> XSeries {
        if self.deg() == 0 {
            return XSeries::zero(0);
        }
        let mut out = XSeries::zero(self.deg() - 1);
        for s in 1..=self.deg() {
            out.coeffs[s - 1] = self.coeffs[s] * (s as f64);
        }
        out
    }

    /// Substitute x ↦ c·x.
    pub fn rescale_x(&self, c: C64) -> XSeries {
        let mut out = self.clone();
        let mut pw = C64::new(1.0, 0.0);
        for s in 0..=out.deg() {
            out.coeffs[s] *= pw;
            pw *= c;
        }
        out
    }

    /// e^{c·x} as a series.
    pub fn exp_cx(c: C64, deg: usize) -> XSeries {
        let mut out = XSeries::zero(deg);
        let mut term = C64::new(1.0, 0.0);
        for s in 0..=deg {
            out.coeffs[s] = term;
            term = term * c / ((s + 1) as f64);
        }
        out
    }

    /// (e^{c·x} − 1)/x as a series.
    pub fn expm1_cx_over_x(c: C64, deg: usize) -> XSeries {
        let e = Self::exp_cx(c, deg + 1);
        let mut out = XSeries::zero(deg);
        for s in 0..=deg {
            out.coeffs[s] = e.coeffs[s + 1];
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &XSeries) -> f64 {
        let deg = self.deg().max(other.deg());
        (0..=deg)
            .map(|s| (self.coeff(s) - other.coeff(s)).norm())
            .fold(0.0, f64::max)
    }

    /// Evaluate at a scalar x.
    pub fn eval(&self, x: C64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_and_division_round_trip() {
        let s = XSeries::from_coeffs(vec![
            C64::new(2.0, 0.0),
            C64::new(-1.0, 0.5),
            C64::new(0.25, 0.0),
            C64::new(0.0, 1.0),
        ]);
        let inv = s.inv().unwrap();
        let prod = s.mul(&inv);
        assert!((prod.coeff(0) - 1.0).norm() < 1e-14);
        for k in 1..=3 {
            assert!(prod.coeff(k).norm() < 1e-14);
        }
    }

    #[test]
    fn exp_series_matches_scalar_exp() {
        let c = C64::new(0.3, -0.2);
        let e = XSeries::exp_cx(c, 30);
        let x = C64::new(0.7, 0.1);
        assert!((e.eval(x) - (c * x).exp()).norm() < 1e-12);
    }

    #[test]
    fn expm1_over_x_has_no_pole() {
        let c = C64::new(0.0, 2.0);
        let f = XSeries::expm1_cx_over_x(c, 24);
        assert!((f.coeff(0) - c).norm() < 1e-15);
        // x·f(x) + 1 = e^{cx}
        let x = C64::new(0.4, -0.3);
        assert!((x * f.eval(x) + 1.0 - (c * x).exp()).norm() < 1e-12);
    }
}
