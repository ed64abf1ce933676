//! The odd theta function normalized by ∂_zθ(0|τ) = 1, its z-derivatives,
//! and the twisted kernels k_α, g_α, φ̃_γ as truncated x-series.
//!
//! θ is represented by the normalized triple product
//!     θ(z|τ) = c(τ)·(u^{1/2} − u^{−1/2})·∏_{n≥1}(1−qⁿu)(1−qⁿu^{−1}),
//! u = e^{2πiz}, q = e^{2πiτ}. The normalization ∂_zθ(0|τ) = 1 forces
//!     c(τ) = 1/(2πi·∏_{n≥1}(1−qⁿ)²),
//! since the z-derivative of u^{1/2} − u^{−1/2} at 0 is 2πi and the product
//! equals ∏(1−qⁿ)² there. Derivatives use the equivalent Jacobi sum form
//!     θ(z|τ) = Σ_{n≥0} (−1)ⁿ q^{n(n+1)/2}(u^{n+1/2} − u^{−n−1/2}) / (2πi·P³),
//! P = ∏(1−qⁿ), which differentiates termwise (mode n carries the frequency
//! ±2πi(n+1/2)). The four defining properties are the oracle for both forms.

use crate::gamma::{GammaElement, GammaGroup};
use crate::scalar::{C64, TWO_PI};
use crate::series::XSeries;
use crate::{Error, Result};

/// Point in the upper half plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tau(pub C64);

impl Tau {
    pub fn new(value: C64) -> Result<Self> {
        if value.im <= 0.0 {
            return Err(Error::Domain(format!(
                "τ = {} is not in the upper half-plane",
                value
            )));
        }
        Ok(Tau(value))
    }

    pub fn value(&self) -> C64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QSeriesParams {
    pub term_count: usize,
    pub tail_tolerance: f64,
    /// reject Im τ below this floor (q-series convergence degrades)
    pub im_tau_floor: f64,
    /// radius around lattice translates reported as a near-singularity
    pub singularity_eps: f64,
}

impl Default for QSeriesParams {
    fn default() -> Self {
        QSeriesParams {
            term_count: 64,
            tail_tolerance: 1e-16,
            im_tau_floor: 0.1,
            singularity_eps: 1e-8,
        }
    }
}

impl QSeriesParams {
    fn check_tau(&self, tau: Tau) -> Result<()> {
        if tau.0.im < self.im_tau_floor {
            return Err(Error::Domain(format!(
                "Im τ = {} below configured floor {}",
                tau.0.im, self.im_tau_floor
            )));
        }
        Ok(())
    }
}

/// Distance from z to the lattice (1/m)ℤ + (τ/n)ℤ.
pub fn lattice_distance(z: C64, tau: C64, m: u32, n: u32) -> f64 {
    let b = z.im / tau.im;
    let a = z.re - b * tau.re;
    let mut best = f64::INFINITY;
    let am = (a * m as f64).round();
    let bn = (b * n as f64).round();
    for da in -1..=1 {
        for db in -1..=1 {
            let p = (am + da as f64) / m as f64;
            let q = (bn + db as f64) / n as f64;
            let w = z - C64::new(p, 0.0) - tau * q;
            best = best.min(w.norm());
        }
    }
    best
}

/// ∏_{n≥1}(1−qⁿ), truncated by the tail tolerance.
fn q_pochhammer(q: C64, params: &QSeriesParams) -> C64 {
    let mut prod = C64::new(1.0, 0.0);
    let mut qn = q;
    for _ in 0..params.term_count {
        prod *= C64::new(1.0, 0.0) - qn;
        qn *= q;
        if qn.norm() < params.tail_tolerance {
            break;
        }
    }
    prod
}

/// θ(z|τ) via the normalized triple product.
pub fn theta(z: C64, tau: Tau, params: &QSeriesParams) -> Result<C64> {
    params.check_tau(tau)?;
    let q = (C64::i() * TWO_PI * tau.0).exp();
    let u = (C64::i() * TWO_PI * z).exp();
    let u_half = (C64::i() * (TWO_PI / 2.0) * z).exp();
    let mut prod = u_half - 1.0 / u_half;
    let mut qn = q;
    for _ in 0..params.term_count {
        prod *= (C64::new(1.0, 0.0) - qn * u) * (C64::new(1.0, 0.0) - qn / u);
        qn *= q;
        if qn.norm() * (u.norm() + 1.0 / u.norm()) < params.tail_tolerance {
            break;
        }
    }
    let c = 1.0 / (C64::i() * TWO_PI * q_pochhammer(q, params).powi(2));
    Ok(c * prod)
}

/// k-th z-derivative of θ via termwise differentiation of the sum form
/// (order 0 recovers θ itself).
pub fn theta_deriv(z: C64, tau: Tau, order: usize, params: &QSeriesParams) -> Result<C64> {
    params.check_tau(tau)?;
    let q = (C64::i() * TWO_PI * tau.0).exp();
    let p3 = q_pochhammer(q, params).powi(3);
    let mut acc = C64::new(0.0, 0.0);
    let mut qpow = C64::new(1.0, 0.0); // q^{n(n+1)/2}
    let mut sign = 1.0;
    for n in 0..params.term_count {
        let freq = TWO_PI * (n as f64 + 0.5);
        let up = (C64::i() * freq * z).exp();
        let fpk = (C64::i() * freq).powu(order as u32);
        // d^k/dz^k [u^{n+1/2} − u^{−n−1/2}]
        let term = fpk * (up - (-1.0f64).powi(order as i32) / up);
        acc += sign * qpow * term;
        // advance q^{n(n+1)/2} -> q^{(n+1)(n+2)/2}: multiply by q^{n+1}
        qpow *= q.powu((n + 1) as u32);
        sign = -sign;
        if qpow.norm() * (up.norm() + 1.0 / up.norm()) * freq.powi(order as i32) < params.tail_tolerance
        {
            break;
        }
    }
    Ok(acc / (C64::i() * TWO_PI * p3))
}

/// Taylor coefficients θ^{(s)}(z)/s! for s = 0..deg.
pub fn theta_taylor(z: C64, tau: Tau, deg: usize, params: &QSeriesParams) -> Result<XSeries> {
    let mut coeffs = Vec::with_capacity(deg + 1);
    let mut fact = 1.0;
    for s in 0..=deg {
        if s > 0 {
            fact *= s as f64;
        }
        coeffs.push(theta_deriv(z, tau, s, params)? / fact);
    }
    Ok(XSeries::from_coeffs(coeffs))
}

/// The entire series B(x) = θ(x|τ)/x through the requested degree
/// (B(0) = 1 by the normalization).
pub fn theta_over_x(tau: Tau, deg: usize, params: &QSeriesParams) -> Result<XSeries> {
    let t = theta_taylor(C64::new(0.0, 0.0), tau, deg + 1, params)?;
    let mut coeffs = Vec::with_capacity(deg + 1);
    for s in 0..=deg {
        coeffs.push(t.coeff(s + 1));
    }
    Ok(XSeries::from_coeffs(coeffs))
}

fn check_off_lattice(what: &str, w: C64, tau: Tau, params: &QSeriesParams) -> Result<()> {
    let d = lattice_distance(w, tau.0, 1, 1);
    if d < params.singularity_eps {
        return Err(Error::NearSingular {
            what: what.to_string(),
            dist: d,
        });
    }
    Ok(())
}

/// Untwisted kernel k(x,z|τ) = θ(x+z)/(θ(x)θ(z)) − 1/x as an x-series.
pub fn k_series(z: C64, tau: Tau, deg: usize, params: &QSeriesParams) -> Result<XSeries> {
    check_off_lattice("k(x,z): z", z, tau, params)?;
    let a = theta_taylor(z, tau, deg + 1, params)?;
    let b = theta_over_x(tau, deg + 1, params)?;
    let theta_z = a.coeff(0);
    // q(x) = θ(x+z) / (θ(z)·B(x)); k = (q − q(0))/x with q(0) = 1
    let q = a.scale(1.0 / theta_z).div(&b)?;
    let mut coeffs = Vec::with_capacity(deg + 1);
    for s in 0..=deg {
        coeffs.push(q.coeff(s + 1));
    }
    Ok(XSeries::from_coeffs(coeffs))
}

/// Twisted kernel k_α(x,z|τ) = e^{−2πi a x} k(x, z−α̃|τ) + (e^{−2πi a x}−1)/x
/// for a lift α̃ = (a₀, a); the result only depends on the class α.
pub fn k_alpha_series_with_lift(
    a0: f64,
    a: f64,
    z: C64,
    tau: Tau,
    deg: usize,
    params: &QSeriesParams,
) -> Result<XSeries> {
    let alpha_tilde = C64::new(a0, 0.0) + tau.0 * a;
    let w = z - alpha_tilde;
    check_off_lattice("k_α(x,z): z − α̃", w, tau, params)?;
    let k = k_series(w, tau, deg, params)?;
    let tw = XSeries::exp_cx(C64::new(0.0, -TWO_PI * a), deg);
    let rest = XSeries::expm1_cx_over_x(C64::new(0.0, -TWO_PI * a), deg);
    Ok(tw.mul(&k).add(&rest))
}

pub fn k_alpha_series(
    alpha: GammaElement,
    gamma: &GammaGroup,
    z: C64,
    tau: Tau,
    deg: usize,
    params: &QSeriesParams,
) -> Result<XSeries> {
    let lift = gamma.lift(alpha);
    k_alpha_series_with_lift(lift.a0(), lift.a(), z, tau, deg, params)
}

/// g_α = ∂ₓ k_α, computed from one extra internal degree.
pub fn g_alpha_series(
    alpha: GammaElement,
    gamma: &GammaGroup,
    z: C64,
    tau: Tau,
    deg: usize,
    params: &QSeriesParams,
) -> Result<XSeries> {
    Ok(k_alpha_series(alpha, gamma, z, tau, deg + 1, params)?.derivative())
}

/// φ̃_γ(x|τ) = Σ_s A_{s,γ}(τ) x^s := g_{−γ}(x, 0|τ). The γ = 0 coefficient
/// series is (θ′/θ)′(x) + 1/x² = (B′/B)′(x), entirely from Taylor data at 0.
pub fn phi_tilde_series(
    gamma_elem: GammaElement,
    gamma: &GammaGroup,
    tau: Tau,
    deg: usize,
    params: &QSeriesParams,
) -> Result<XSeries> {
    if gamma_elem.is_zero() {
        let b = theta_over_x(tau, deg + 2, params)?;
        let logderiv = b.derivative().div(&b.truncated(deg + 1))?;
        return Ok(logderiv.derivative().truncated(deg));
    }
    g_alpha_series(gamma.neg(gamma_elem), gamma, C64::new(0.0, 0.0), tau, deg, params)
}

/// A_{s,γ}(τ) for s = 0..deg.
pub fn eisenstein_coeffs(
    gamma_elem: GammaElement,
    gamma: &GammaGroup,
    tau: Tau,
    deg: usize,
    params: &QSeriesParams,
) -> Result<XSeries> {
    phi_tilde_series(gamma_elem, gamma, tau, deg, params)
}

/// Scalar value k_α(x, z|τ) at a numeric x (used by the eigenvalue route of
/// the realization layer).
pub fn k_alpha_scalar(
    alpha: GammaElement,
    gamma: &GammaGroup,
    x: C64,
    z: C64,
    tau: Tau,
    params: &QSeriesParams,
) -> Result<C64> {
    let lift = gamma.lift(alpha);
    let alpha_tilde = lift.value(tau.0);
    let w = z - alpha_tilde;
    check_off_lattice("k_α(x,z): z − α̃", w, tau, params)?;
    let tw = (C64::new(0.0, -TWO_PI * lift.a()) * x).exp();
    if x.norm() < 1e-12 {
        // remove the 1/x pole via the series of the full combination
        let s = k_alpha_series(alpha, gamma, z, tau, 4, params)?;
        return Ok(s.eval(x));
    }
    let th_num = theta(w + x, tau, params)?;
    let th_den = theta(w, tau, params)? * theta(x, tau, params)?;
    Ok(tw * th_num / th_den - 1.0 / x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau() -> Tau {
        Tau::new(C64::new(0.3, 1.1)).unwrap()
    }

    fn params() -> QSeriesParams {
        QSeriesParams::default()
    }

    #[test]
    fn theta_vanishes_on_lattice_and_at_zero() {
        let t = tau();
        let p = params();
        assert!(theta(C64::new(0.0, 0.0), t, &p).unwrap().norm() < 1e-14);
        let z = C64::new(1.0, 0.0) + t.0 * 2.0;
        assert!(theta(z, t, &p).unwrap().norm() < 1e-10);
    }

    #[test]
    fn theta_defining_properties() {
        let t = tau();
        let p = params();
        let z = C64::new(0.17, 0.23);
        let th = |w: C64| theta(w, t, &p).unwrap();
        // θ(z+1) = −θ(z) = θ(−z)
        assert!((th(z + 1.0) + th(z)).norm() < 1e-12);
        assert!((th(-z) + th(z)).norm() < 1e-12);
        // θ(z+τ) = −e^{−πiτ}e^{−2πiz}θ(z)
        let fac = -(-C64::i() * (TWO_PI / 2.0) * t.0).exp() * (-C64::i() * TWO_PI * z).exp();
        assert!((th(z + t.0) - fac * th(z)).norm() < 1e-12);
        // ∂_zθ(0|τ) = 1
        let d1 = theta_deriv(C64::new(0.0, 0.0), t, 1, &p).unwrap();
        assert!((d1 - 1.0).norm() < 1e-13);
        // θ odd: even derivatives vanish at 0
        let d2 = theta_deriv(C64::new(0.0, 0.0), t, 2, &p).unwrap();
        assert!(d2.norm() < 1e-13);
    }

    #[test]
    fn sum_form_matches_product_form() {
        let t = tau();
        let p = params();
        for z in [C64::new(0.4, 0.1), C64::new(-0.2, 0.6), C64::new(0.05, -0.3)] {
            let a = theta(z, t, &p).unwrap();
            let b = theta_deriv(z, t, 0, &p).unwrap();
            assert!((a - b).norm() < 1e-12, "mismatch at {}: {} vs {}", z, a, b);
        }
    }

    #[test]
    fn theta_modular_law() {
        let t = tau();
        let p = params();
        let z = C64::new(0.21, 0.11);
        // θ(−z/τ|−1/τ) = −(1/τ)e^{πi z²/τ}θ(z|τ)
        let t2 = Tau::new(-1.0 / t.0).unwrap();
        let lhs = theta(-z / t.0, t2, &p).unwrap();
        let rhs = -(1.0 / t.0) * (C64::i() * (TWO_PI / 2.0) * z * z / t.0).exp()
            * theta(z, t, &p).unwrap();
        assert!((lhs - rhs).norm() < 1e-10, "residual {}", (lhs - rhs).norm());
    }

    #[test]
    fn k_series_defining_identity() {
        // k(x,z) + 1/x = θ(x+z)/(θ(x)θ(z)) as scalar functions
        let t = tau();
        let p = params();
        let z = C64::new(0.31, 0.17);
        let k = k_series(z, t, 24, &p).unwrap();
        let x = C64::new(0.13, -0.06);
        let lhs = k.eval(x) + 1.0 / x;
        let rhs = theta(x + z, t, &p).unwrap() / (theta(x, t, &p).unwrap() * theta(z, t, &p).unwrap());
        assert!((lhs - rhs).norm() < 1e-9, "residual {}", (lhs - rhs).norm());
    }

    #[test]
    fn k_periodicity_in_z() {
        let t = tau();
        let p = params();
        let z = C64::new(0.31, 0.17);
        let deg = 10;
        let k0 = k_series(z, t, deg, &p).unwrap();
        let k1 = k_series(z + 1.0, t, deg, &p).unwrap();
        assert!(k0.max_abs_diff(&k1) < 1e-10);
        // k(x,z+τ) = e^{−2πix}k(x,z) + (e^{−2πix}−1)/x
        let kt = k_series(z + t.0, t, deg, &p).unwrap();
        let tw = XSeries::exp_cx(C64::new(0.0, -TWO_PI), deg);
        let rest = XSeries::expm1_cx_over_x(C64::new(0.0, -TWO_PI), deg);
        let rhs = tw.mul(&k0).add(&rest);
        assert!(kt.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn k_alpha_lift_independence_and_zero_twist() {
        let g = GammaGroup::new(2, 2).unwrap();
        let t = tau();
        let p = params();
        let z = C64::new(0.26, 0.4);
        let deg = 8;
        // α = 0 equals the untwisted kernel
        let k0 = k_alpha_series(g.zero(), &g, z, t, deg, &p).unwrap();
        assert!(k0.max_abs_diff(&k_series(z, t, deg, &p).unwrap()) < 1e-12);
        // two lifts of the same class agree
        let alpha = g.element(1, 1);
        let l = g.lift(alpha);
        let k1 = k_alpha_series_with_lift(l.a0(), l.a(), z, t, deg, &p).unwrap();
        let k2 = k_alpha_series_with_lift(l.a0() + 2.0, l.a() + 1.0, z, t, deg, &p).unwrap();
        assert!(k1.max_abs_diff(&k2) < 1e-10, "lift dependence {}", k1.max_abs_diff(&k2));
    }

    #[test]
    fn k_alpha_antisymmetry() {
        // k_α(x,z) + k_{−α}(−x,−z) = 0
        let g = GammaGroup::new(3, 1).unwrap();
        let t = tau();
        let p = params();
        let z = C64::new(0.19, 0.35);
        let deg = 9;
        for alpha in g.elements() {
            let ka = k_alpha_series(alpha, &g, z, t, deg, &p).unwrap();
            let kb = k_alpha_series(g.neg(alpha), &g, -z, t, deg, &p).unwrap();
            let kb_neg_x = kb.rescale_x(C64::new(-1.0, 0.0));
            assert!(
                ka.add(&kb_neg_x).max_abs() < 1e-10,
                "antisymmetry fails for α = {}",
                alpha
            );
        }
    }

    #[test]
    fn g_alpha_is_termwise_derivative_and_symmetric() {
        let g = GammaGroup::new(2, 1).unwrap();
        let t = tau();
        let p = params();
        let z = C64::new(0.4, 0.22);
        let alpha = g.element(1, 0);
        let k = k_alpha_series(alpha, &g, z, t, 9, &p).unwrap();
        let gg = g_alpha_series(alpha, &g, z, t, 8, &p).unwrap();
        for s in 0..=8 {
            let expect = k.coeff(s + 1) * ((s + 1) as f64);
            assert!((gg.coeff(s) - expect).norm() < 1e-12);
        }
        // g_α(x,z) = g_{−α}(−x,−z)
        let gb = g_alpha_series(g.neg(alpha), &g, -z, t, 8, &p).unwrap();
        assert!(gg.max_abs_diff(&gb.rescale_x(C64::new(-1.0, 0.0))) < 1e-10);
    }

    #[test]
    fn phi_tilde_zero_class_matches_closed_form() {
        // φ̃₀ must agree with the z→0 structure: compare against g_0(x, z)
        // as z → 0 is singular, so instead verify against finite z identity:
        // the remark's closed form is what phi_tilde_series(0) computes; we
        // cross-check the first coefficients against A_{0,0} = value of
        // (θ′/θ)′+1/x² at x→0 computed from raw Taylor data.
        let g = GammaGroup::new(2, 1).unwrap();
        let t = tau();
        let p = params();
        let phi0 = phi_tilde_series(g.zero(), &g, t, 20, &p).unwrap();
        // independent route: (θ′/θ)′(x) + 1/x² = θ″/θ − (θ′/θ)² + 1/x²
        // from exact derivative values at a scalar point
        let x0 = C64::new(0.1, 0.05);
        let th = theta(x0, t, &p).unwrap();
        let d1 = theta_deriv(x0, t, 1, &p).unwrap();
        let d2 = theta_deriv(x0, t, 2, &p).unwrap();
        let closed = d2 / th - (d1 / th) * (d1 / th) + 1.0 / (x0 * x0);
        let res = (phi0.eval(x0) - closed).norm();
        assert!(res < 1e-8, "residual {}", res);
    }

    #[test]
    fn eisenstein_modular_law() {
        // A_{s,γ}(−1/τ) = τ^{s+2} A_{s,Tγ}(τ), T(ā₀,ā) = (−ā,ā₀), for M = N
        let g = GammaGroup::new(2, 2).unwrap();
        let t = tau();
        let p = params();
        let t_inv = Tau::new(-1.0 / t.0).unwrap();
        for gamma_elem in g.elements() {
            let lhs = eisenstein_coeffs(gamma_elem, &g, t_inv, 5, &p).unwrap();
            let tg = g.t_action(gamma_elem).unwrap();
            let rhs = eisenstein_coeffs(tg, &g, t, 5, &p).unwrap();
            for s in 0..=5 {
                if s == 0 && gamma_elem.is_zero() {
                    // A_{0,0} is quasi-modular: the law picks up the
                    // anomaly 2πiτ (E₂-type); δ_{0,0} acts by zero, so the
                    // anomaly is invisible in every realized identity.
                    let anomaly = C64::i() * TWO_PI * t.0;
                    let diff =
                        (lhs.coeff(0) - t.0 * t.0 * rhs.coeff(0) - anomaly).norm();
                    assert!(diff < 1e-8, "γ=0 anomaly mismatch: {}", diff);
                    continue;
                }
                let scale = t.0.powu((s + 2) as u32);
                let diff = (lhs.coeff(s) - scale * rhs.coeff(s)).norm();
                let mag = lhs.coeff(s).norm().max(1.0);
                assert!(diff / mag < 1e-8, "s={} γ={} diff={}", s, gamma_elem, diff);
            }
        }
    }

    #[test]
    fn heat_type_relation() {
        // ∂_z g_α = 2πi ∂_τ k_α via central finite differences
        let g = GammaGroup::new(2, 2).unwrap();
        let t = tau();
        let p = params();
        let z = C64::new(0.23, 0.37);
        let h = 1e-5;
        let deg = 6;
        for alpha in g.elements() {
            let gz = {
                let a = g_alpha_series(alpha, &g, z + h, t, deg, &p).unwrap();
                let b = g_alpha_series(alpha, &g, z - h, t, deg, &p).unwrap();
                a.sub(&b).scale(C64::new(1.0 / (2.0 * h), 0.0))
            };
            let kt = {
                let a =
                    k_alpha_series(alpha, &g, z, Tau::new(t.0 + h).unwrap(), deg, &p).unwrap();
                let b =
                    k_alpha_series(alpha, &g, z, Tau::new(t.0 - h).unwrap(), deg, &p).unwrap();
                a.sub(&b).scale(C64::new(1.0 / (2.0 * h), 0.0))
            };
            let lhs = gz;
            let rhs = kt.scale(C64::i() * TWO_PI);
            let scale = lhs.max_abs().max(1.0);
            assert!(
                lhs.max_abs_diff(&rhs) / scale < 1e-6,
                "heat relation fails for α={}: {}",
                alpha,
                lhs.max_abs_diff(&rhs) / scale
            );
        }
    }

    #[test]
    fn three_term_product_identity() {
        // (k_α(−v,z)−1/v)(k_β(u+v,z′)+1/(u+v))
        //   − (k_α(u,z)+1/u)(k_{β−α}(u+v,z′−z)+1/(u+v))
        //   + (k_β(u,z′)+1/u)(k_{β−α}(v,z′−z)+1/v) = 0
        // checked at scalar (u,v) points to avoid double-variable series
        let g = GammaGroup::new(2, 2).unwrap();
        let t = tau();
        let p = params();
        let z = C64::new(0.21, 0.33);
        let zp = C64::new(-0.12, 0.55);
        let u = C64::new(0.11, 0.04);
        let v = C64::new(-0.07, 0.09);
        let kk = |al: GammaElement, x: C64, w: C64| -> C64 {
            k_alpha_scalar(al, &g, x, w, t, &p).unwrap()
        };
        for alpha in g.elements() {
            for beta in g.elements() {
                let bma = g.sub(beta, alpha);
                let lhs = (kk(alpha, -v, z) - 1.0 / v) * (kk(beta, u + v, zp) + 1.0 / (u + v))
                    - (kk(alpha, u, z) + 1.0 / u) * (kk(bma, u + v, zp - z) + 1.0 / (u + v))
                    + (kk(beta, u, zp) + 1.0 / u) * (kk(bma, v, zp - z) + 1.0 / v);
                assert!(
                    lhs.norm() < 1e-9,
                    "three-term identity fails α={} β={}: {}",
                    alpha,
                    beta,
                    lhs.norm()
                );
            }
        }
    }
}
