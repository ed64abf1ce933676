//! Realizations of t̄^Γ_{1,n}: the morphisms ρ_g and ρ_{g,h} on concrete
//! modules, elliptic dynamical r-matrices with spectral parameter, and the
//! CDYBE checks.

use crate::gamma::{GammaElement, GammaGroup};
use crate::report::Residual;
use crate::scalar::C64;
use crate::theta::{k_alpha_scalar, k_alpha_series, QSeriesParams, Tau};
use crate::{Error, Result};
use std::collections::BTreeMap;

// ---------------------------------------------------------------------------
// small dense complex matrices
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<C64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            a: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn eye(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, r: usize, c: usize) -> C64 {
        self.a[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut C64 {
        &mut self.a[r * self.cols + c]
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self.at(i, k);
                if v.norm() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    *out.at_mut(i, j) += v * other.at(k, j);
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Mat) -> Mat {
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(&other.a) {
            *x += y;
        }
        out
    }

    pub fn sub(&self, other: &Mat) -> Mat {
        let mut out = self.clone();
        for (x, y) in out.a.iter_mut().zip(&other.a) {
            *x -= y;
        }
        out
    }

    pub fn scale(&self, c: C64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().map(|x| x * c).collect(),
        }
    }

    pub fn comm(&self, other: &Mat) -> Mat {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn max_abs(&self) -> f64 {
        self.a.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn trace_prod(&self, other: &Mat) -> C64 {
        // tr(self · other)
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.rows {
            for k in 0..self.cols {
                acc += self.at(i, k) * other.at(k, i);
            }
        }
        acc
    }
}

/// Null-space-style basis of the column span of a set of vectors (complex
/// Gaussian elimination with partial pivoting and a rank tolerance).
fn column_span_basis(vectors: &[Vec<C64>], tol: f64) -> Vec<Vec<C64>> {
    let mut rows: Vec<Vec<C64>> = vectors.to_vec();
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let dim = match rows.first() {
        Some(v) => v.len(),
        None => return basis,
    };
    let mut pivots: Vec<usize> = Vec::new();
    for row in rows.iter_mut() {
        // eliminate existing pivots
        for (b, &p) in basis.iter().zip(&pivots) {
            let f = row[p];
            if f.norm() > 0.0 {
                for k in 0..dim {
                    let bk = b[k];
                    row[k] -= f * bk;
                }
            }
        }
        // find pivot
        let (p, mx) = (0..dim)
            .map(|k| (k, row[k].norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        if mx < tol {
            continue;
        }
        let inv = 1.0 / row[p];
        let normalized: Vec<C64> = row.iter().map(|x| x * inv).collect();
        basis.push(normalized);
        pivots.push(p);
    }
    basis
}

// ---------------------------------------------------------------------------
// the equivariant quadruple (g, t_g, Γ-action, l = g^Γ)
// ---------------------------------------------------------------------------

/// A finite-dimensional Lie algebra with invariant symmetric tensor and
/// Γ-action; the invariant subalgebra l carries a basis e_ν with
/// t_l = Σ e_ν ⊗ e_ν.
pub struct EquivariantQuadruple {
    pub name: String,
    pub gamma: GammaGroup,
    /// dimension of the defining representation V = ℂ^d
    pub d: usize,
    /// g-basis as d×d matrices
    pub basis: Vec<Mat>,
    /// t_g = Σ_u a_u ⊗ b_u as pairs of matrices (symmetric as a tensor)
    pub t_g: Vec<(Mat, Mat)>,
    /// Γ-action on V by conjugation matrices U(γ): X ↦ U X U⁻¹
    pub action_v: BTreeMap<GammaElement, (Mat, Mat)>, // (U, U⁻¹)
    /// basis e_ν of l = g^Γ with t_l = Σ e_ν⊗e_ν
    pub l_basis: Vec<Mat>,
}

fn clock(d: usize, zeta: C64) -> Mat {
    let mut m = Mat::zeros(d, d);
    let mut w = C64::new(1.0, 0.0);
    for i in 0..d {
        *m.at_mut(i, i) = w;
        w *= zeta;
    }
    m
}

fn shift(d: usize) -> Mat {
    let mut m = Mat::zeros(d, d);
    for i in 0..d {
        *m.at_mut((i + 1) % d, i) = C64::new(1.0, 0.0);
    }
    m
}

fn inv_unitary_like(u: &Mat) -> Mat {
    // all our action matrices are monomial (clock/shift products): invert by
    // solving small linear systems via Gaussian elimination
    let n = u.rows;
    let mut aug: Vec<Vec<C64>> = (0..n)
        .map(|i| {
            let mut row: Vec<C64> = (0..n).map(|j| u.at(i, j)).collect();
            row.extend((0..n).map(|j| {
                if i == j {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }));
            row
        })
        .collect();
    for col in 0..n {
        let (p, _) = (col..n)
            .map(|r| (r, aug[r][col].norm()))
            .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
            .unwrap();
        aug.swap(col, p);
        let inv = 1.0 / aug[col][col];
        for k in 0..2 * n {
            aug[col][k] *= inv;
        }
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f.norm() > 0.0 {
                    for k in 0..2 * n {
                        let d = aug[col][k];
                        aug[r][k] -= f * d;
                    }
                }
            }
        }
    }
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            *out.at_mut(i, j) = aug[i][n + j];
        }
    }
    out
}

impl EquivariantQuadruple {
    /// gl_d basis E_ij, trace-form tensor t_g = Σ E_ij ⊗ E_ji.
    fn gl_basis(d: usize) -> (Vec<Mat>, Vec<(Mat, Mat)>) {
        let mut basis = Vec::new();
        let mut t = Vec::new();
        for i in 0..d {
            for j in 0..d {
                let mut e = Mat::zeros(d, d);
                *e.at_mut(i, j) = C64::new(1.0, 0.0);
                basis.push(e);
            }
        }
        for i in 0..d {
            for j in 0..d {
                let mut e = Mat::zeros(d, d);
                *e.at_mut(i, j) = C64::new(1.0, 0.0);
                let mut f = Mat::zeros(d, d);
                *f.at_mut(j, i) = C64::new(1.0, 0.0);
                t.push((e, f));
            }
        }
        (basis, t)
    }

    /// sl_N basis (E_ij for i≠j plus traceless diagonals), with the dual
    /// pairs of the trace form: t = Σ E_ij⊗E_ji − (1/N)·(diagonal
    /// correction), realized by projecting the gl tensor onto sl⊗sl.
    fn sl_data(d: usize) -> (Vec<Mat>, Vec<(Mat, Mat)>) {
        let mut basis = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    let mut e = Mat::zeros(d, d);
                    *e.at_mut(i, j) = C64::new(1.0, 0.0);
                    basis.push(e);
                }
            }
        }
        for i in 0..(d - 1) {
            let mut h = Mat::zeros(d, d);
            *h.at_mut(i, i) = C64::new(1.0, 0.0);
            *h.at_mut(i + 1, i + 1) = C64::new(-1.0, 0.0);
            basis.push(h);
        }
        // t_sl = t_gl − (1/d)·I⊗I (projection along the center)
        let (_, mut t) = Self::gl_basis(d);
        let id = Mat::eye(d);
        t.push((id.clone(), id.scale(C64::new(-1.0 / d as f64, 0.0))));
        (basis, t)
    }

    /// felder(M, N, d): g = gl_d, Γ = ℤ/M×ℤ/N acting through the second
    /// factor by conjugation with the order-N clock; l = the centralizer of
    /// the clock (block-diagonal; for generic clock, the diagonal).
    pub fn felder(m: u32, n: u32, d: usize) -> Result<Self> {
        let gamma = GammaGroup::new(m, n)?;
        let zeta = (C64::i() * crate::scalar::TWO_PI / n as f64).exp();
        let c = clock(d, zeta);
        let (basis, t_g) = Self::gl_basis(d);
        let mut action_v = BTreeMap::new();
        for g in gamma.elements() {
            let mut u = Mat::eye(d);
            for _ in 0..g.b {
                u = u.mul(&c);
            }
            let ui = inv_unitary_like(&u);
            action_v.insert(g, (u, ui));
        }
        let mut quad = EquivariantQuadruple {
            name: format!("felder({},{},{})", m, n, d),
            gamma,
            d,
            basis,
            t_g,
            action_v,
            l_basis: Vec::new(),
        };
        quad.compute_invariants()?;
        Ok(quad)
    }

    /// belavin(N): g = sl_N, Γ = ℤ/N×ℤ/N acting by clock and shift
    /// conjugation; l = 0.
    pub fn belavin(n: u32) -> Result<Self> {
        let gamma = GammaGroup::new(n, n)?;
        let d = n as usize;
        let zeta = (C64::i() * crate::scalar::TWO_PI / n as f64).exp();
        let c = clock(d, zeta);
        let s = shift(d);
        let (basis, t_g) = Self::sl_data(d);
        let mut action_v = BTreeMap::new();
        for g in gamma.elements() {
            let mut u = Mat::eye(d);
            for _ in 0..g.a {
                u = u.mul(&s);
            }
            for _ in 0..g.b {
                u = u.mul(&c);
            }
            let ui = inv_unitary_like(&u);
            action_v.insert(g, (u, ui));
        }
        let mut quad = EquivariantQuadruple {
            name: format!("belavin({})", n),
            gamma,
            d,
            basis,
            t_g,
            action_v,
            l_basis: Vec::new(),
        };
        quad.compute_invariants()?;
        Ok(quad)
    }

    /// cartan(d): gl_d with trivial Γ; l = gl_d (exercises the reduction
    /// with h = diagonal).
    pub fn cartan(d: usize) -> Result<Self> {
        let gamma = GammaGroup::trivial();
        let (basis, t_g) = Self::gl_basis(d);
        let mut action_v = BTreeMap::new();
        action_v.insert(gamma.zero(), (Mat::eye(d), Mat::eye(d)));
        let mut quad = EquivariantQuadruple {
            name: format!("cartan({})", d),
            gamma,
            d,
            basis,
            t_g,
            action_v,
            l_basis: Vec::new(),
        };
        quad.compute_invariants()?;
        Ok(quad)
    }

    pub fn act_on_matrix(&self, g: GammaElement, x: &Mat) -> Mat {
        let (u, ui) = &self.action_v[&g];
        u.mul(x).mul(ui)
    }

    /// Fixed space l = g^Γ via the averaging projector, with the basis
    /// normalized so that the trace form is the identity Gram matrix
    /// (bilinear Gram–Schmidt; complex scalars are fine).
    fn compute_invariants(&mut self) -> Result<()> {
        let d = self.d;
        let order = self.gamma.order() as f64;
        // project each basis matrix
        let mut projected: Vec<Vec<C64>> = Vec::new();
        for b in &self.basis {
            let mut avg = Mat::zeros(d, d);
            for g in self.gamma.elements() {
                avg = avg.add(&self.act_on_matrix(g, b));
            }
            avg = avg.scale(C64::new(1.0 / order, 0.0));
            projected.push(avg.a.clone());
        }
        let span = column_span_basis(&projected, 1e-9);
        // bilinear Gram–Schmidt wrt ⟨A,B⟩ = tr(AB). The form is symmetric
        // nondegenerate over ℂ, but single candidates can be isotropic
        // (tr(E₁₂²) = 0); mix in a partner with nonzero pairing when that
        // happens (hyperbolic-pair handling).
        let mut remaining: Vec<Mat> = span
            .into_iter()
            .map(|v| Mat {
                rows: d,
                cols: d,
                a: v,
            })
            .collect();
        let mut l_basis: Vec<Mat> = Vec::new();
        while !remaining.is_empty() {
            // reduce every candidate against the current basis
            for m in remaining.iter_mut() {
                for e in &l_basis {
                    let c = m.trace_prod(e);
                    *m = m.sub(&e.scale(c));
                }
            }
            remaining.retain(|m| m.max_abs() > 1e-10);
            if remaining.is_empty() {
                break;
            }
            // pick a non-isotropic candidate, or mix two isotropic ones
            let pick = remaining
                .iter()
                .position(|m| m.trace_prod(m).norm() > 1e-9);
            let m = match pick {
                Some(k) => remaining.remove(k),
                None => {
                    let first = remaining.remove(0);
                    let partner = remaining
                        .iter()
                        .position(|w| first.trace_prod(w).norm() > 1e-9)
                        .ok_or_else(|| {
                            Error::Internal("degenerate trace form on l".into())
                        })?;
                    let w = remaining[partner].clone();
                    first.add(&w)
                }
            };
            let norm2 = m.trace_prod(&m);
            let inv_sqrt = 1.0 / norm2.sqrt();
            l_basis.push(m.scale(inv_sqrt));
        }
        self.l_basis = l_basis;
        self.validate()
    }

    /// Invariance checks: each action matrix preserves the bracket and t_g.
    fn validate(&self) -> Result<()> {
        for g in self.gamma.elements() {
            // bracket preserved automatically for conjugation actions; check
            // t_g as the Casimir-like operator on V⊗V:
            // Σ (γ·a_u)⊗(γ·b_u) = Σ a_u⊗b_u as matrices on V⊗V
            let dim = self.d * self.d;
            let mut orig = Mat::zeros(dim, dim);
            let mut acted = Mat::zeros(dim, dim);
            for (a, b) in &self.t_g {
                let (ga, gb) = (self.act_on_matrix(g, a), self.act_on_matrix(g, b));
                for i in 0..self.d {
                    for j in 0..self.d {
                        for k in 0..self.d {
                            for l in 0..self.d {
                                *orig.at_mut(i * self.d + k, j * self.d + l) +=
                                    a.at(i, j) * b.at(k, l);
                                *acted.at_mut(i * self.d + k, j * self.d + l) +=
                                    ga.at(i, j) * gb.at(k, l);
                            }
                        }
                    }
                }
            }
            if orig.sub(&acted).max_abs() > 1e-12 {
                return Err(Error::Validation(format!(
                    "{}: t_g not Γ-invariant at γ = {}",
                    self.name, g
                )));
            }
        }
        Ok(())
    }

    pub fn dim_l(&self) -> usize {
        self.l_basis.len()
    }

    /// λ∨ = Σ λ_ν e_ν as a matrix.
    pub fn lambda_vee(&self, lambda: &[C64]) -> Mat {
        let mut m = Mat::zeros(self.d, self.d);
        for (c, e) in lambda.iter().zip(&self.l_basis) {
            m = m.add(&e.scale(*c));
        }
        m
    }
}

// ---------------------------------------------------------------------------
// tensors in g⊗g realized on V⊗V
// ---------------------------------------------------------------------------

/// A two-leg tensor represented by its action on V⊗V (d²×d² matrix).
pub type Tensor2 = Mat;

pub fn tensor2_of(quad: &EquivariantQuadruple, a: &Mat, b: &Mat) -> Tensor2 {
    let d = quad.d;
    let mut t = Mat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            if a.at(i, j).norm() == 0.0 {
                continue;
            }
            for k in 0..d {
                for l in 0..d {
                    *t.at_mut(i * d + k, j * d + l) += a.at(i, j) * b.at(k, l);
                }
            }
        }
    }
    t
}

pub fn swap_tensor2(d: usize, t: &Tensor2) -> Tensor2 {
    let mut out = Mat::zeros(d * d, d * d);
    for i in 0..d {
        for k in 0..d {
            for j in 0..d {
                for l in 0..d {
                    *out.at_mut(k * d + i, l * d + j) = t.at(i * d + k, j * d + l);
                }
            }
        }
    }
    out
}

/// Place a two-leg tensor on legs (a, b) of an n-fold tensor power (legs
/// are 1-based).
pub fn embed_pair(
    quad: &EquivariantQuadruple,
    pairs: &[(Mat, Mat)],
    a: usize,
    b: usize,
    n: usize,
) -> Mat {
    let d = quad.d;
    let dim = d.pow(n as u32);
    let mut out = Mat::zeros(dim, dim);
    for (u, v) in pairs {
        // build the Kronecker product with u at leg a, v at leg b
        let factors: Vec<&Mat> = (1..=n)
            .map(|leg| {
                if leg == a {
                    u
                } else if leg == b {
                    v
                } else {
                    // identity placeholder resolved below
                    u // unused
                }
            })
            .collect();
        let _ = &factors;
        let idx = |composite: usize| -> Vec<usize> {
            let mut c = composite;
            let mut out = vec![0; n];
            for leg in (0..n).rev() {
                out[leg] = c % d;
                c /= d;
            }
            out
        };
        for row in 0..dim {
            let ri = idx(row);
            for col in 0..dim {
                let ci = idx(col);
                let mut coeff = C64::new(1.0, 0.0);
                let mut ok = true;
                for leg in 0..n {
                    let m: Option<&Mat> = if leg + 1 == a {
                        Some(u)
                    } else if leg + 1 == b {
                        Some(v)
                    } else {
                        None
                    };
                    match m {
                        Some(mm) => coeff *= mm.at(ri[leg], ci[leg]),
                        None => {
                            if ri[leg] != ci[leg] {
                                ok = false;
                                break;
                            }
                        }
                    }
                    if coeff.norm() == 0.0 {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    *out.at_mut(row, col) += coeff;
                }
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// the dynamical r-matrix r(λ, z) = ρ_g(K(z))
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EvalRoute {
    Eigen,
    Series { cap: usize },
}

/// r(λ,z) = Σ_α k_α(MN·ad(λ∨)⊗id, z)((α⊗id)·t_g) as a d²×d² matrix on
/// V⊗V. The factor MN (rather than the bare M of ρ_g(x̄)) normalizes λ to
/// the standard dynamical variable: ρ_g(ȳ) carries −N∂_ν, so the realized
/// universal CDYBE reads N·Σe∂r + [r,r] + c.p. = 0, and the substitution
/// λ ↦ λ/N turns it into the weight-one equation this function's output
/// satisfies (validated numerically; weight 1 fails by O(1) at N = 2).
///
/// The eigen route uses the scalar kernel at the eigenvalues of ad(λ∨) on
/// the matrix-unit basis (valid when λ∨ is diagonal in the defining basis,
/// which holds for every preset); the series route applies the truncated
/// x-series of k_α to the operator ad(λ∨)⊗id.
pub fn r_matrix(
    quad: &EquivariantQuadruple,
    lambda: &[C64],
    z: C64,
    tau: Tau,
    params: &QSeriesParams,
    route: EvalRoute,
) -> Result<Tensor2> {
    let d = quad.d;
    let m_factor = (quad.gamma.m * quad.gamma.n) as f64;
    let lv = quad.lambda_vee(lambda);
    // require diagonal λ∨ for the eigen route
    let mut off = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                off = off.max(lv.at(i, j).norm());
            }
        }
    }
    let mut out = Mat::zeros(d * d, d * d);
    for alpha in quad.gamma.elements() {
        // (α⊗id)·t_g
        let pairs: Vec<(Mat, Mat)> = quad
            .t_g
            .iter()
            .map(|(a, b)| (quad.act_on_matrix(alpha, a), b.clone()))
            .collect();
        match route {
            EvalRoute::Eigen => {
                if off > 1e-12 {
                    return Err(Error::Domain(
                        "eigen route needs λ∨ diagonal in the defining basis".into(),
                    ));
                }
                // ad(λ∨)(E_ij-supported matrix entries) = (λ_i − λ_j)·...
                for (a, b) in &pairs {
                    for i in 0..d {
                        for j in 0..d {
                            if a.at(i, j).norm() == 0.0 {
                                continue;
                            }
                            let x = m_factor * (lv.at(i, i) - lv.at(j, j));
                            let kval = k_alpha_scalar(alpha, &quad.gamma, x, z, tau, params)?;
                            for k in 0..d {
                                for l in 0..d {
                                    if b.at(k, l).norm() == 0.0 {
                                        continue;
                                    }
                                    *out.at_mut(i * d + k, j * d + l) +=
                                        kval * a.at(i, j) * b.at(k, l);
                                }
                            }
                        }
                    }
                }
            }
            EvalRoute::Series { cap } => {
                let series = k_alpha_series(alpha, &quad.gamma, z, tau, cap, params)?;
                // operator A = M·ad(λ∨) acting on the first leg
                for (a, b) in &pairs {
                    let mut power = a.clone();
                    for s in 0..=cap {
                        let c = series.coeff(s);
                        if c.norm() > 0.0 {
                            let term = tensor2_of(quad, &power, b).scale(c);
                            out = out.add(&term);
                        }
                        power = lv.comm(&power).scale(C64::new(m_factor, 0.0));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Antisymmetry residual: r(λ,−z) + swap(r(λ,z)).
pub fn check_antisymmetry(
    quad: &EquivariantQuadruple,
    lambda: &[C64],
    z: C64,
    tau: Tau,
    params: &QSeriesParams,
) -> Result<Residual> {
    let r1 = r_matrix(quad, lambda, -z, tau, params, EvalRoute::Eigen)?;
    let r2 = r_matrix(quad, lambda, z, tau, params, EvalRoute::Eigen)?;
    let res = r1.add(&swap_tensor2(quad.d, &r2));
    Ok(Residual::new(res.max_abs(), "r(λ,−z)+r(λ,z)^{(21)}"))
}

/// Agreement of the two evaluation routes.
pub fn check_two_routes(
    quad: &EquivariantQuadruple,
    lambda: &[C64],
    z: C64,
    tau: Tau,
    params: &QSeriesParams,
    cap: usize,
) -> Result<Residual> {
    let a = r_matrix(quad, lambda, z, tau, params, EvalRoute::Eigen)?;
    let b = r_matrix(quad, lambda, z, tau, params, EvalRoute::Series { cap })?;
    Ok(Residual::new(a.sub(&b).max_abs(), "eigen vs series"))
}

/// Three-leg embedding r^{(ab)}(z) for legs of V⊗V⊗V.
fn r_on_legs(
    quad: &EquivariantQuadruple,
    lambda: &[C64],
    z: C64,
    tau: Tau,
    params: &QSeriesParams,
    a: usize,
    b: usize,
) -> Result<Mat> {
    let d = quad.d;
    let r = r_matrix(quad, lambda, z, tau, params, EvalRoute::Eigen)?;
    // decompose r into matrix pairs via matrix units: r = Σ_{ij,kl} c·E_ij⊗E_kl
    let mut pairs: Vec<(Mat, Mat)> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let c = r.at(i * d + k, j * d + l);
                    if c.norm() > 0.0 {
                        let mut u = Mat::zeros(d, d);
                        *u.at_mut(i, j) = c;
                        let mut v = Mat::zeros(d, d);
                        *v.at_mut(k, l) = C64::new(1.0, 0.0);
                        pairs.push((u, v));
                    }
                }
            }
        }
    }
    Ok(embed_pair(quad, &pairs, a, b, 3))
}

/// Spectral CDYBE residual:
/// Σ_ν e_ν^{(1)} ∂_ν r(λ,z₂₃)^{(23)} + [r(λ,z₁₂)^{(12)}, r(λ,z₁₃)^{(13)}]
/// + c.p.(1,2,3) = 0 on V⊗V⊗V, with ∂_ν by central differences.
pub fn check_cdybe_spectral(
    quad: &EquivariantQuadruple,
    lambda: &[C64],
    z12: C64,
    z13: C64,
    z23: C64,
    tau: Tau,
    params: &QSeriesParams,
) -> Result<Residual> {
    if (z12 + z23 - z13).norm() > 1e-12 {
        return Err(Error::Validation("need z₁₂ + z₂₃ = z₁₃".into()));
    }
    let h = 1e-4;
    let dl = quad.dim_l();
    let zs = |a: usize, b: usize| -> C64 {
        match (a, b) {
            (1, 2) => z12,
            (1, 3) => z13,
            (2, 3) => z23,
            (2, 1) => -z12,
            (3, 1) => -z13,
            (3, 2) => -z23,
            _ => unreachable!(),
        }
    };
    let mut total = Mat::zeros(quad.d.pow(3), quad.d.pow(3));
    // cyclic images of (1,2,3): the ∂-leg order (i; j,k) with r-arguments
    for &(i, j, k) in &[(1usize, 2usize, 3usize), (2, 3, 1), (3, 1, 2)] {
        // Σ_ν e_ν^{(i)} ∂_ν r(λ, z_jk)^{(jk)} with one Richardson pass
        for nu in 0..dl {
            let fd = |step: f64| -> Result<Mat> {
                let mut lp = lambda.to_vec();
                lp[nu] += step;
                let mut lm = lambda.to_vec();
                lm[nu] -= step;
                let rp = r_on_legs(quad, &lp, zs(j, k), tau, params, j, k)?;
                let rm = r_on_legs(quad, &lm, zs(j, k), tau, params, j, k)?;
                Ok(rp.sub(&rm).scale(C64::new(1.0 / (2.0 * step), 0.0)))
            };
            let d1 = fd(h)?;
            let d2 = fd(h / 2.0)?;
            let dr = d2
                .scale(C64::new(4.0 / 3.0, 0.0))
                .sub(&d1.scale(C64::new(1.0 / 3.0, 0.0)));
            let e_leg = embed_pair(
                quad,
                &[(quad.l_basis[nu].clone(), Mat::eye(quad.d))],
                i,
                (i % 3) + 1, // dummy second leg with identity
                3,
            );
            total = total.add(&e_leg.mul(&dr));
        }
        // [r^{(ij)}(z_ij), r^{(ik)}(z_ik)]
        let rij = r_on_legs(quad, lambda, zs(i, j), tau, params, i, j)?;
        let rik = r_on_legs(quad, lambda, zs(i, k), tau, params, i, k)?;
        total = total.add(&rij.comm(&rik));
    }
    Ok(Residual::new(total.max_abs(), "spectral CDYBE"))
}

// ---------------------------------------------------------------------------
// ρ_g on the polynomial module and relator checks
// ---------------------------------------------------------------------------

/// Module vector space: Pol_{≤deg}(l*) ⊗ End(V)^{⊗n}, with basis
/// (monomial in λ_ν) ⊗ (tensor of matrix units). The legs carry the
/// adjoint action (the defining representation has no l-invariant vectors
/// at all — every weight is positive — so the faithful-enough module uses
/// End(V) per leg).
pub struct HeckeModule<'q> {
    pub quad: &'q EquivariantQuadruple,
    pub n: usize,
    pub deg: usize,
}

pub type ModVec = BTreeMap<(Vec<u16>, Vec<u8>), C64>;

impl<'q> HeckeModule<'q> {
    pub fn new(quad: &'q EquivariantQuadruple, n: usize, deg: usize) -> Self {
        HeckeModule { quad, n, deg }
    }

    fn add_to(v: &mut ModVec, key: (Vec<u16>, Vec<u8>), c: C64) {
        if c.norm() == 0.0 {
            return;
        }
        let e = v.entry(key).or_insert(C64::new(0.0, 0.0));
        *e += c;
        if e.norm() == 0.0 {
            // keep maps tidy
        }
    }

    /// multiplication by λ_ν
    pub fn x_op(&self, nu: usize, v: &ModVec) -> ModVec {
        let mut out = ModVec::new();
        for ((mono, ten), c) in v {
            let mut m = mono.clone();
            m[nu] += 1;
            if m.iter().map(|&e| e as usize).sum::<usize>() <= self.deg {
                Self::add_to(&mut out, (m, ten.clone()), *c);
            }
        }
        out
    }

    /// ∂/∂λ_ν
    pub fn d_op(&self, nu: usize, v: &ModVec) -> ModVec {
        let mut out = ModVec::new();
        for ((mono, ten), c) in v {
            if mono[nu] == 0 {
                continue;
            }
            let mut m = mono.clone();
            m[nu] -= 1;
            Self::add_to(&mut out, (m, ten.clone()), *c * (mono[nu] as f64));
        }
        out
    }

    /// matrix m acting on tensor leg i (1-based) by the adjoint action:
    /// the leg state E_ab (index a·d+b) maps to [m, E_ab]
    /// = Σ_r m_ra E_rb − Σ_r m_br E_ar.
    pub fn leg_op(&self, m: &Mat, i: usize, v: &ModVec) -> ModVec {
        let d = self.quad.d;
        let mut out = ModVec::new();
        for ((mono, ten), c) in v {
            let idx = ten[i - 1] as usize;
            let (a, b) = (idx / d, idx % d);
            for r in 0..d {
                let left = m.at(r, a);
                if left.norm() > 0.0 {
                    let mut t = ten.clone();
                    t[i - 1] = (r * d + b) as u8;
                    // m·E_ab contributes at E_rb with coefficient m_{ra}?
                    // careful: (m E_ab)_{xy} = m_{xa} δ_{by}: = Σ_x m_{xa}E_{xb}
                    Self::add_to(&mut out, (mono.clone(), t), *c * left);
                }
                let right = m.at(b, r);
                if right.norm() > 0.0 {
                    let mut t = ten.clone();
                    t[i - 1] = (a * d + r) as u8;
                    // (E_ab m)_{xy} = δ_{xa} m_{by}: = Σ_y m_{by}E_{ay}
                    Self::add_to(&mut out, (mono.clone(), t), -*c * right);
                }
            }
        }
        out.retain(|_, c| c.norm() > 0.0);
        out
    }

    pub fn zero(&self) -> ModVec {
        ModVec::new()
    }

    pub fn scale(&self, v: &ModVec, c: C64) -> ModVec {
        v.iter().map(|(k, x)| (k.clone(), x * c)).collect()
    }

    pub fn add(&self, a: &ModVec, b: &ModVec) -> ModVec {
        let mut out = a.clone();
        for (k, c) in b {
            Self::add_to(&mut out, k.clone(), *c);
        }
        out.retain(|_, c| c.norm() > 0.0);
        out
    }

    pub fn max_abs(&self, v: &ModVec) -> f64 {
        v.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Basis of the l-invariant subspace up to the working degree minus
    /// `headroom` (so degree-raising operators stay inside the window).
    /// The presets all have abelian l acting diagonally-ish; we solve
    /// Σᵢ e_ν^{(i)}·v + X_ν·v = 0 for each ν by filtering a spanning basis
    /// through the constraint (numerically, with the coadjoint part zero
    /// for abelian l).
    pub fn invariant_basis(&self, headroom: usize) -> Vec<ModVec> {
        let deg = self.deg.saturating_sub(headroom);
        let mut monos: Vec<Vec<u16>> = Vec::new();
        gen_monomials(self.quad.dim_l(), deg, &mut vec![], &mut monos);
        let mut tens: Vec<Vec<u8>> = Vec::new();
        gen_tensors(self.quad.d * self.quad.d, self.n, &mut vec![], &mut tens);
        let mut out = Vec::new();
        for mono in &monos {
            for ten in &tens {
                let mut v = ModVec::new();
                v.insert((mono.clone(), ten.clone()), C64::new(1.0, 0.0));
                // check invariance under each e_ν-diagonal action
                let mut ok = true;
                for nu in 0..self.quad.dim_l() {
                    let mut acc = self.zero();
                    for i in 1..=self.n {
                        acc = self.add(&acc, &self.leg_op(&self.quad.l_basis[nu], i, &v));
                    }
                    // X_ν-part vanishes for abelian l
                    if self.max_abs(&acc) > 1e-12 {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    out.push(v);
                }
            }
        }
        out
    }
}

fn gen_monomials(vars: usize, deg: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if prefix.len() == vars {
        out.push(prefix.clone());
        return;
    }
    let used: usize = prefix.iter().map(|&e| e as usize).sum();
    for e in 0..=(deg - used) {
        prefix.push(e as u16);
        gen_monomials(vars, deg, prefix, out);
        prefix.pop();
    }
}

fn gen_tensors(d: usize, n: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
    if prefix.len() == n {
        out.push(prefix.clone());
        return;
    }
    for k in 0..d {
        prefix.push(k as u8);
        gen_tensors(d, n, prefix, out);
        prefix.pop();
    }
}

/// The ρ_g-operator of a generator of t̄^Γ_{1,n} on the Hecke module.
pub enum RhoGen {
    XBar(usize),
    YBar(usize),
    TBar {
        i: usize,
        j: usize,
        alpha: GammaElement,
    },
    SlD,
    SlX,
    SlDelta0,
    Xi {
        s: usize,
        gamma_elem: GammaElement,
    },
}

pub fn rho_apply(module: &HeckeModule, gen: &RhoGen, v: &ModVec) -> ModVec {
    let quad = module.quad;
    let m_scale = quad.gamma.m as f64;
    let n_scale = quad.gamma.n as f64;
    match gen {
        RhoGen::XBar(i) => {
            // M Σ_ν x_ν ⊗ e_ν^{(i)}
            let mut out = module.zero();
            for nu in 0..quad.dim_l() {
                let w = module.leg_op(&quad.l_basis[nu], *i, v);
                let w = module.x_op(nu, &w);
                out = module.add(&out, &module.scale(&w, C64::new(m_scale, 0.0)));
            }
            out
        }
        RhoGen::YBar(i) => {
            // −N Σ_ν ∂_ν ⊗ e_ν^{(i)}
            let mut out = module.zero();
            for nu in 0..quad.dim_l() {
                let w = module.leg_op(&quad.l_basis[nu], *i, v);
                let w = module.d_op(nu, &w);
                out = module.add(&out, &module.scale(&w, C64::new(-n_scale, 0.0)));
            }
            out
        }
        RhoGen::TBar { i, j, alpha } => {
            // 1 ⊗ (α^{(1)}·t_g)^{(ij)}
            let mut out = module.zero();
            for (a, b) in &quad.t_g {
                let ga = quad.act_on_matrix(*alpha, a);
                let w = module.leg_op(&ga, *i, v);
                let w = module.leg_op(b, *j, &w);
                out = module.add(&out, &w);
            }
            out
        }
        RhoGen::SlD => {
            // ½ Σ_ν (x_ν∂_ν + ∂_νx_ν): the sign is pinned by the
            // intertwining [ρ(d), ρ(x̄_i)] = ρ(x̄_i) (eigenvalue +1)
            let mut out = module.zero();
            for nu in 0..quad.dim_l() {
                let a = module.x_op(nu, &module.d_op(nu, v));
                let b = module.d_op(nu, &module.x_op(nu, v));
                out = module.add(&out, &module.add(&a, &b));
            }
            module.scale(&out, C64::new(0.5, 0.0))
        }
        RhoGen::SlX => {
            // (M/2N) Σ_ν x_ν²: the factor makes [ρ(X), ρ(ȳ_i)] = ρ(x̄_i)
            let mut out = module.zero();
            for nu in 0..quad.dim_l() {
                out = module.add(&out, &module.x_op(nu, &module.x_op(nu, v)));
            }
            let f = quad.gamma.m as f64 / (2.0 * quad.gamma.n as f64);
            module.scale(&out, C64::new(f, 0.0))
        }
        RhoGen::SlDelta0 => {
            // −(N/2M) Σ_ν ∂_ν²: the factor makes [ρ(Δ₀), ρ(x̄_i)] = ρ(ȳ_i)
            let mut out = module.zero();
            for nu in 0..quad.dim_l() {
                out = module.add(&out, &module.d_op(nu, &module.d_op(nu, v)));
            }
            let f = -(quad.gamma.n as f64) / (2.0 * quad.gamma.m as f64);
            module.scale(&out, C64::new(f, 0.0))
        }
        RhoGen::Xi { s, gamma_elem } => {
            // (1/|Γ|) Σ_{ν₁..ν_s,u} x_{ν₁}···x_{ν_s}
            //   ⊗ Σ_i (ad(e_{ν₁})···ad(e_{ν_s})(a_u) ⊙ (γ·a_u))^{(i)}
            let dl = quad.dim_l();
            let mut out = module.zero();
            let mut nus = vec![0usize; *s];
            loop {
                for (a, b) in &quad.t_g {
                    // t_g = Σ a_u ⊗ b_u; the formula uses a_u ⊙ (γ·a_u)
                    // with the dual leg b_u paired off by the symmetric
                    // tensor; concretely Σ_u ad⋯(a_u) ⊙ (γ·b_u).
                    let mut ada = a.clone();
                    for &nu in &nus {
                        ada = quad.l_basis[nu].comm(&ada);
                    }
                    let gb = quad.act_on_matrix(*gamma_elem, b);
                    let odot = ada.mul(&gb).add(&gb.mul(&ada));
                    for i in 1..=module.n {
                        let mut w = module.leg_op(&odot, i, v);
                        for &nu in &nus {
                            w = module.x_op(nu, &w);
                        }
                        out = module.add(&out, &w);
                    }
                }
                // advance multi-index
                let mut k = 0;
                loop {
                    if k == *s {
                        break;
                    }
                    nus[k] += 1;
                    if nus[k] < dl {
                        break;
                    }
                    nus[k] = 0;
                    k += 1;
                }
                if *s == 0 || k == *s {
                    break;
                }
            }
            module.scale(&out, C64::new(1.0 / quad.gamma.order() as f64, 0.0))
        }
    }
}

fn commutator_apply(
    module: &HeckeModule,
    a: &RhoGen,
    b: &RhoGen,
    v: &ModVec,
) -> ModVec {
    let ab = rho_apply(module, a, &rho_apply(module, b, v));
    let ba = rho_apply(module, b, &rho_apply(module, a, v));
    module.add(&ab, &module.scale(&ba, C64::new(-1.0, 0.0)))
}

/// Relator checks for ρ_g on invariant vectors: the images of the defining
/// relators of t̄^Γ_{1,n} annihilate the l-invariant subspace; the sl₂
/// triple and [ξ_{s,γ}, x̄_i] = 0 likewise.
pub struct RhoReport {
    pub relators: Residual,
    pub sl2: Residual,
    pub xi_x: Residual,
}

pub fn check_rho_relations(
    quad: &EquivariantQuadruple,
    n: usize,
    deg: usize,
) -> Result<RhoReport> {
    let module = HeckeModule::new(quad, n, deg);
    let g = quad.gamma;
    let inv = module.invariant_basis(3);
    if inv.is_empty() {
        return Err(Error::Internal("empty invariant basis".into()));
    }
    let mut relators = Residual::zero();
    let gens_x: Vec<RhoGen> = (1..=n).map(RhoGen::XBar).collect();
    let gens_y: Vec<RhoGen> = (1..=n).map(RhoGen::YBar).collect();

    let mut check_zero = |label: String, image: &dyn Fn(&ModVec) -> ModVec| {
        let mut worst = 0.0f64;
        for v in &inv {
            worst = worst.max(module.max_abs(&image(v)));
        }
        relators.join(Residual::new(worst, label));
    };

    // Σ x̄_i = 0 and Σ ȳ_i = 0
    check_zero("Σx̄".into(), &|v| {
        let mut acc = module.zero();
        for gx in &gens_x {
            acc = module.add(&acc, &rho_apply(&module, gx, v));
        }
        acc
    });
    check_zero("Σȳ".into(), &|v| {
        let mut acc = module.zero();
        for gy in &gens_y {
            acc = module.add(&acc, &rho_apply(&module, gy, v));
        }
        acc
    });
    // [x̄_i, x̄_j] = 0, [ȳ_i, ȳ_j] = 0,
    // [x̄_i, ȳ_j] = Σ_α t̄^α_ij (i≠j)
    for i in 1..=n {
        for j in (i + 1)..=n {
            check_zero(format!("[x̄{},x̄{}]", i, j), &|v| {
                commutator_apply(&module, &RhoGen::XBar(i), &RhoGen::XBar(j), v)
            });
            check_zero(format!("[ȳ{},ȳ{}]", i, j), &|v| {
                commutator_apply(&module, &RhoGen::YBar(i), &RhoGen::YBar(j), v)
            });
            check_zero(format!("[x̄{},ȳ{}]−Σt̄", i, j), &|v| {
                let mut acc = commutator_apply(&module, &RhoGen::XBar(i), &RhoGen::YBar(j), v);
                for alpha in g.elements() {
                    let t = rho_apply(
                        &module,
                        &RhoGen::TBar { i, j, alpha },
                        v,
                    );
                    acc = module.add(&acc, &module.scale(&t, C64::new(-1.0, 0.0)));
                }
                acc
            });
            // t4T2: [x̄_i + x̄_j, t̄^α_ij] = 0
            for alpha in g.elements() {
                check_zero(format!("[x̄{}+x̄{},t̄^{}]", i, j, alpha), &|v| {
                    let t = RhoGen::TBar { i, j, alpha };
                    let a = commutator_apply(&module, &RhoGen::XBar(i), &t, v);
                    let b = commutator_apply(&module, &RhoGen::XBar(j), &t, v);
                    module.add(&a, &b)
                });
            }
        }
    }
    // tL2 and t4T1 at n ≥ 3
    if n >= 3 {
        for alpha in g.elements() {
            check_zero(format!("[x̄1,t̄^{}_23]", alpha), &|v| {
                commutator_apply(
                    &module,
                    &RhoGen::XBar(1),
                    &RhoGen::TBar { i: 2, j: 3, alpha },
                    v,
                )
            });
            for beta in g.elements() {
                check_zero(format!("t4T1 α={} β={}", alpha, beta), &|v| {
                    let t12 = RhoGen::TBar { i: 1, j: 2, alpha };
                    let t13 = RhoGen::TBar {
                        i: 1,
                        j: 3,
                        alpha: g.add(alpha, beta),
                    };
                    let t23 = RhoGen::TBar { i: 2, j: 3, alpha: beta };
                    let a = commutator_apply(&module, &t12, &t13, v);
                    let b = commutator_apply(&module, &t12, &t23, v);
                    module.add(&a, &b)
                });
            }
        }
    }

    // sl₂ triple: [d,X]=2X, [d,Δ₀]=−2Δ₀, [X,Δ₀]=d
    let mut sl2 = Residual::zero();
    for v in &inv {
        let a = commutator_apply(&module, &RhoGen::SlD, &RhoGen::SlX, v);
        let b = module.scale(&rho_apply(&module, &RhoGen::SlX, v), C64::new(2.0, 0.0));
        sl2.join(Residual::new(
            module.max_abs(&module.add(&a, &module.scale(&b, C64::new(-1.0, 0.0)))),
            "[d,X]−2X",
        ));
        let a = commutator_apply(&module, &RhoGen::SlD, &RhoGen::SlDelta0, v);
        let b = module.scale(
            &rho_apply(&module, &RhoGen::SlDelta0, v),
            C64::new(-2.0, 0.0),
        );
        sl2.join(Residual::new(
            module.max_abs(&module.add(&a, &module.scale(&b, C64::new(-1.0, 0.0)))),
            "[d,Δ₀]+2Δ₀",
        ));
        let a = commutator_apply(&module, &RhoGen::SlX, &RhoGen::SlDelta0, v);
        let b = rho_apply(&module, &RhoGen::SlD, v);
        sl2.join(Residual::new(
            module.max_abs(&module.add(&a, &module.scale(&b, C64::new(-1.0, 0.0)))),
            "[X,Δ₀]−d",
        ));
    }

    // [ξ_{s,γ}, x̄_i] = 0
    let mut xi_x = Residual::zero();
    for s in 0..=2usize {
        for gamma_elem in g.elements() {
            for i in 1..=n {
                for v in &inv {
                    let c = commutator_apply(
                        &module,
                        &RhoGen::Xi { s, gamma_elem },
                        &RhoGen::XBar(i),
                        v,
                    );
                    xi_x.join(Residual::new(
                        module.max_abs(&c),
                        format!("[ξ_({},{}), x̄{}]", s, gamma_elem, i),
                    ));
                }
            }
        }
    }

    Ok(RhoReport {
        relators,
        sl2,
        xi_x,
    })
}

// ---------------------------------------------------------------------------
// reduction to h ⊂ l and r(λ) (cartan-style presets)
// ---------------------------------------------------------------------------

/// Reduction data: l = h ⊕ m with t_l = t_h + t_m, λ ∈ h*_reg, and
/// r(λ) = (id ⊗ (ad λ∨)|_m⁻¹)(t_m).
pub struct ReductionData<'q> {
    pub quad: &'q EquivariantQuadruple,
    /// h-basis (diagonal matrix units for the cartan preset)
    pub h_basis: Vec<Mat>,
    /// m-basis (off-diagonal matrix units) with dual pairing partners
    pub m_pairs: Vec<(Mat, Mat)>,
}

impl<'q> ReductionData<'q> {
    /// h = diagonal, m = off-diagonal span for a gl_d-type quadruple with
    /// l = gl_d.
    pub fn cartan(quad: &'q EquivariantQuadruple) -> Result<Self> {
        let d = quad.d;
        if quad.dim_l() != d * d {
            return Err(Error::Validation(
                "cartan reduction needs l = gl_d (trivial Γ)".into(),
            ));
        }
        let mut h_basis = Vec::new();
        for i in 0..d {
            let mut e = Mat::zeros(d, d);
            *e.at_mut(i, i) = C64::new(1.0, 0.0);
            h_basis.push(e);
        }
        let mut m_pairs = Vec::new();
        for i in 0..d {
            for j in 0..d {
                if i == j {
                    continue;
                }
                let mut e = Mat::zeros(d, d);
                *e.at_mut(i, j) = C64::new(1.0, 0.0);
                let mut f = Mat::zeros(d, d);
                *f.at_mut(j, i) = C64::new(1.0, 0.0);
                m_pairs.push((e, f));
            }
        }
        Ok(ReductionData {
            quad,
            h_basis,
            m_pairs,
        })
    }

    pub fn lambda_vee_h(&self, lambda: &[C64]) -> Mat {
        let mut m = Mat::zeros(self.quad.d, self.quad.d);
        for (c, e) in lambda.iter().zip(&self.h_basis) {
            m = m.add(&e.scale(*c));
        }
        m
    }

    /// invertibility margin of ad(λ∨)|_m: min |λ_i − λ_j| over i ≠ j
    pub fn margin(&self, lambda: &[C64]) -> f64 {
        let lv = self.lambda_vee_h(lambda);
        let d = self.quad.d;
        let mut best = f64::INFINITY;
        for i in 0..d {
            for j in 0..d {
                if i != j {
                    best = best.min((lv.at(i, i) - lv.at(j, j)).norm());
                }
            }
        }
        best
    }

    /// r(λ) = Σ_{i≠j} E_ij⊗E_ji/(λ_i − λ_j) on V⊗V (the inverse taken on
    /// the first leg; the sign is pinned by the (h,g) CDYBE for r̃, which
    /// fails by O(1) with the opposite convention).
    pub fn r_lambda(&self, lambda: &[C64], threshold: f64) -> Result<Tensor2> {
        if self.margin(lambda) < threshold {
            return Err(Error::NearSingular {
                what: "λ near the discriminant P(λ)=0".into(),
                dist: self.margin(lambda),
            });
        }
        let lv = self.lambda_vee_h(lambda);
        let d = self.quad.d;
        let mut out = Mat::zeros(d * d, d * d);
        for (e, f) in &self.m_pairs {
            // e = E_ij, f = E_ji: (ad λ∨)(E_ji) = (λ_j − λ_i)E_ji
            let (mut i0, mut j0) = (0, 0);
            'outer: for i in 0..d {
                for j in 0..d {
                    if e.at(i, j).norm() > 0.0 {
                        i0 = i;
                        j0 = j;
                        break 'outer;
                    }
                }
            }
            let denom = lv.at(i0, i0) - lv.at(j0, j0);
            out = out.add(&tensor2_of(self.quad, e, f).scale(1.0 / denom));
        }
        Ok(out)
    }

    /// r̃(λ,z) = restriction of r(·,z) to h* plus r(λ).
    pub fn r_tilde(
        &self,
        lambda: &[C64],
        z: C64,
        tau: Tau,
        params: &QSeriesParams,
        threshold: f64,
    ) -> Result<Tensor2> {
        // restriction to h*: evaluate ρ_g(K(z)) at the l*-point whose
        // h-coordinates are λ and m-coordinates are 0. The l-basis of the
        // quadruple is trace-orthonormalized; convert the diagonal h-point
        // into those coordinates.
        let full = self.embed_h_point(lambda);
        let r = r_matrix(self.quad, &full, z, tau, params, EvalRoute::Eigen)?;
        Ok(r.add(&self.r_lambda(lambda, threshold)?))
    }

    /// Coordinates of the diagonal matrix Σ λ_i E_ii in the quadruple's
    /// orthonormal l-basis.
    pub fn embed_h_point(&self, lambda: &[C64]) -> Vec<C64> {
        let lv = self.lambda_vee_h(lambda);
        self.quad
            .l_basis
            .iter()
            .map(|e| lv.trace_prod(e))
            .collect()
    }

    /// CDYBE with spectral parameter for (h, g) using r̃.
    pub fn check_cdybe_h(
        &self,
        lambda: &[C64],
        z12: C64,
        z13: C64,
        z23: C64,
        tau: Tau,
        params: &QSeriesParams,
        threshold: f64,
    ) -> Result<Residual> {
        if (z12 + z23 - z13).norm() > 1e-12 {
            return Err(Error::Validation("need z₁₂ + z₂₃ = z₁₃".into()));
        }
        let h = 1e-4;
        let d = self.quad.d;
        let dim3 = d.pow(3);
        let zs = |a: usize, b: usize| -> C64 {
            match (a, b) {
                (1, 2) => z12,
                (1, 3) => z13,
                (2, 3) => z23,
                (2, 1) => -z12,
                (3, 1) => -z13,
                (3, 2) => -z23,
                _ => unreachable!(),
            }
        };
        let r_legs = |lam: &[C64], z: C64, a: usize, b: usize| -> Result<Mat> {
            let r = self.r_tilde(lam, z, tau, params, threshold)?;
            let mut pairs: Vec<(Mat, Mat)> = Vec::new();
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            let c = r.at(i * d + k, j * d + l);
                            if c.norm() > 0.0 {
                                let mut u = Mat::zeros(d, d);
                                *u.at_mut(i, j) = c;
                                let mut v = Mat::zeros(d, d);
                                *v.at_mut(k, l) = C64::new(1.0, 0.0);
                                pairs.push((u, v));
                            }
                        }
                    }
                }
            }
            Ok(embed_pair(self.quad, &pairs, a, b, 3))
        };
        let mut total = Mat::zeros(dim3, dim3);
        for &(i, j, k) in &[(1usize, 2usize, 3usize), (2, 3, 1), (3, 1, 2)] {
            for nu in 0..self.h_basis.len() {
                let fd = |step: f64| -> Result<Mat> {
                    let mut lp = lambda.to_vec();
                    lp[nu] += step;
                    let mut lm = lambda.to_vec();
                    lm[nu] -= step;
                    let rp = r_legs(&lp, zs(j, k), j, k)?;
                    let rm = r_legs(&lm, zs(j, k), j, k)?;
                    Ok(rp.sub(&rm).scale(C64::new(1.0 / (2.0 * step), 0.0)))
                };
                let d1 = fd(h)?;
                let d2 = fd(h / 2.0)?;
                let dr = d2
                    .scale(C64::new(4.0 / 3.0, 0.0))
                    .sub(&d1.scale(C64::new(1.0 / 3.0, 0.0)));
                let e_leg = embed_pair(
                    self.quad,
                    &[(self.h_basis[nu].clone(), Mat::eye(d))],
                    i,
                    (i % 3) + 1,
                    3,
                );
                total = total.add(&e_leg.mul(&dr));
            }
            let rij = r_legs(lambda, zs(i, j), i, j)?;
            let rik = r_legs(lambda, zs(i, k), i, k)?;
            total = total.add(&rij.comm(&rik));
        }
        Ok(Residual::new(total.max_abs(), "(h,g) spectral CDYBE"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau() -> Tau {
        Tau::new(C64::new(0.19, 1.13)).unwrap()
    }

    #[test]
    fn presets_have_expected_invariants() {
        let f = EquivariantQuadruple::felder(1, 2, 2).unwrap();
        assert_eq!(f.dim_l(), 2, "felder(1,2,2): l = diagonal 2×2");
        let b = EquivariantQuadruple::belavin(2).unwrap();
        assert_eq!(b.dim_l(), 0, "belavin(2): l = 0");
        let c = EquivariantQuadruple::cartan(2).unwrap();
        assert_eq!(c.dim_l(), 4, "cartan(2): l = gl₂");
    }

    #[test]
    fn clock_order_mismatch_is_rejected() {
        // N = 0 is invalid
        assert!(EquivariantQuadruple::felder(1, 0, 2).is_err());
    }

    #[test]
    fn r_matrix_antisymmetry_and_routes() {
        let quad = EquivariantQuadruple::felder(1, 2, 2).unwrap();
        let params = QSeriesParams::default();
        let lambda = vec![C64::new(0.11, 0.02), C64::new(-0.07, 0.04)];
        let z = C64::new(0.31, 0.17);
        let r = check_antisymmetry(&quad, &lambda, z, tau(), &params).unwrap();
        assert!(r.max_abs < 1e-9, "antisymmetry {}", r.max_abs);
        let r = check_two_routes(&quad, &lambda, z, tau(), &params, 28).unwrap();
        assert!(r.max_abs < 1e-8, "route agreement {}", r.max_abs);
    }

    #[test]
    fn cartan_r_reduces_to_untwisted_kernel() {
        let quad = EquivariantQuadruple::cartan(2).unwrap();
        let params = QSeriesParams::default();
        // pick λ so that λ∨ is a fixed diagonal matrix
        let mut target = Mat::zeros(2, 2);
        *target.at_mut(0, 0) = C64::new(0.17, 0.02);
        *target.at_mut(1, 1) = C64::new(-0.12, 0.05);
        let lambda: Vec<C64> = quad.l_basis.iter().map(|e| target.trace_prod(e)).collect();
        let z = C64::new(0.27, 0.21);
        let r = r_matrix(&quad, &lambda, z, tau(), &params, EvalRoute::Eigen).unwrap();
        let lv = quad.lambda_vee(&lambda);
        let x = lv.at(0, 0) - lv.at(1, 1);
        let expect = crate::theta::k_alpha_scalar(
            quad.gamma.zero(),
            &quad.gamma,
            x,
            z,
            tau(),
            &params,
        )
        .unwrap();
        // entry E_12⊗E_21: rows (i,k)=(1,2)->(0,1), cols (j,l)=(2,1)->(1,0)
        let got = r.at(0 * 2 + 1, 1 * 2 + 0);
        assert!((got - expect).norm() < 1e-10);
    }

    #[test]
    fn spectral_cdybe_felder() {
        let quad = EquivariantQuadruple::felder(1, 2, 2).unwrap();
        let params = QSeriesParams::default();
        let lambda = vec![C64::new(0.23, 0.04), C64::new(-0.11, 0.09)];
        let z12 = C64::new(0.21, 0.11);
        let z23 = C64::new(0.13, 0.19);
        let z13 = z12 + z23;
        let r = check_cdybe_spectral(&quad, &lambda, z12, z13, z23, tau(), &params).unwrap();
        assert!(r.max_abs < 1e-7, "felder CDYBE {}", r.max_abs);
    }

    #[test]
    fn spectral_cdybe_belavin() {
        let quad = EquivariantQuadruple::belavin(2).unwrap();
        let params = QSeriesParams::default();
        let lambda: Vec<C64> = vec![];
        let z12 = C64::new(0.17, 0.13);
        let z23 = C64::new(0.11, 0.07);
        let z13 = z12 + z23;
        let r = check_cdybe_spectral(&quad, &lambda, z12, z13, z23, tau(), &params).unwrap();
        assert!(r.max_abs < 1e-8, "belavin CDYBE {}", r.max_abs);
    }

    #[test]
    fn rho_relations_on_module() {
        let quad = EquivariantQuadruple::felder(1, 2, 2).unwrap();
        let rep = check_rho_relations(&quad, 2, 5).unwrap();
        assert!(
            rep.relators.max_abs < 1e-10,
            "relators {} at {}",
            rep.relators.max_abs,
            rep.relators.witness
        );
        assert!(rep.sl2.max_abs < 1e-10, "sl2 {}", rep.sl2.max_abs);
        assert!(rep.xi_x.max_abs < 1e-10, "[ξ,x̄] {} at {}", rep.xi_x.max_abs, rep.xi_x.witness);
    }

    #[test]
    fn reduction_cartan() {
        let quad = EquivariantQuadruple::cartan(2).unwrap();
        let red = ReductionData::cartan(&quad).unwrap();
        let params = QSeriesParams::default();
        let lambda = vec![C64::new(0.31, 0.0), C64::new(-0.17, 0.0)];
        // r(λ) antisymmetric
        let r = red.r_lambda(&lambda, 1e-6).unwrap();
        let res = r.add(&swap_tensor2(2, &r)).max_abs();
        assert!(res < 1e-12, "r(λ) antisymmetry {}", res);
        // near-discriminant rejection
        let bad = vec![C64::new(0.3, 0.0), C64::new(0.3, 0.0)];
        assert!(red.r_lambda(&bad, 1e-6).is_err());
        // (h,g) CDYBE
        let z12 = C64::new(0.19, 0.15);
        let z23 = C64::new(0.12, 0.09);
        let z13 = z12 + z23;
        let r = red
            .check_cdybe_h(&lambda, z12, z13, z23, tau(), &params, 1e-6)
            .unwrap();
        assert!(r.max_abs < 1e-7, "(h,g) CDYBE {}", r.max_abs);
    }

    #[test]
    fn gamma_average_consistency() {
        // replacing t_g by its Γ-orbit average leaves Σ_α(α·t_g) unchanged
        let quad = EquivariantQuadruple::felder(1, 2, 2).unwrap();
        let d = quad.d;
        let mut direct = Mat::zeros(d * d, d * d);
        let mut averaged = Mat::zeros(d * d, d * d);
        for alpha in quad.gamma.elements() {
            for (a, b) in &quad.t_g {
                direct = direct.add(&tensor2_of(&quad, &quad.act_on_matrix(alpha, a), b));
            }
            // orbit average of t_g
            for g in quad.gamma.elements() {
                for (a, b) in &quad.t_g {
                    let aa = quad.act_on_matrix(quad.gamma.add(alpha, g), a);
                    let bb = quad.act_on_matrix(g, b);
                    averaged = averaged.add(
                        &tensor2_of(&quad, &aa, &bb)
                            .scale(C64::new(1.0 / quad.gamma.order() as f64, 0.0)),
                    );
                }
            }
        }
        assert!(direct.sub(&averaged).max_abs() < 1e-10);
    }
}

/// Variant of the spectral CDYBE with an adjustable weight on the
/// derivative term (diagnostic for the N-normalization).
pub fn check_cdybe_spectral_weighted(
    quad: &EquivariantQuadruple,
    lambda: &[C64],
    z12: C64,
    z13: C64,
    z23: C64,
    tau: Tau,
    params: &QSeriesParams,
    weight: f64,
) -> Result<Residual> {
    let h = 1e-5;
    let dl = quad.dim_l();
    let zs = |a: usize, b: usize| -> C64 {
        match (a, b) {
            (1, 2) => z12,
            (1, 3) => z13,
            (2, 3) => z23,
            (2, 1) => -z12,
            (3, 1) => -z13,
            (3, 2) => -z23,
            _ => unreachable!(),
        }
    };
    let mut total = Mat::zeros(quad.d.pow(3), quad.d.pow(3));
    for &(i, j, k) in &[(1usize, 2usize, 3usize), (2, 3, 1), (3, 1, 2)] {
        for nu in 0..dl {
            let mut lp = lambda.to_vec();
            lp[nu] += h;
            let mut lm = lambda.to_vec();
            lm[nu] -= h;
            let rp = r_on_legs_pub(quad, &lp, zs(j, k), tau, params, j, k)?;
            let rm = r_on_legs_pub(quad, &lm, zs(j, k), tau, params, j, k)?;
            let dr = rp.sub(&rm).scale(C64::new(weight / (2.0 * h), 0.0));
            let e_leg = embed_pair(
                quad,
                &[(quad.l_basis[nu].clone(), Mat::eye(quad.d))],
                i,
                (i % 3) + 1,
                3,
            );
            total = total.add(&e_leg.mul(&dr));
        }
        let rij = r_on_legs_pub(quad, lambda, zs(i, j), tau, params, i, j)?;
        let rik = r_on_legs_pub(quad, lambda, zs(i, k), tau, params, i, k)?;
        total = total.add(&rij.comm(&rik));
    }
    Ok(Residual::new(total.max_abs(), "spectral CDYBE (weighted)"))
}

/// public clone of the leg embed used by the diagnostic
pub fn r_on_legs_pub(
    quad: &EquivariantQuadruple,
    lambda: &[C64],
    z: C64,
    tau: Tau,
    params: &QSeriesParams,
    a: usize,
    b: usize,
) -> Result<Mat> {
    let d = quad.d;
    let r = r_matrix(quad, lambda, z, tau, params, EvalRoute::Eigen)?;
    let mut pairs: Vec<(Mat, Mat)> = Vec::new();
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    let c = r.at(i * d + k, j * d + l);
                    if c.norm() > 0.0 {
                        let mut u = Mat::zeros(d, d);
                        *u.at_mut(i, j) = c;
                        let mut v = Mat::zeros(d, d);
                        *v.at_mut(k, l) = C64::new(1.0, 0.0);
                        pairs.push((u, v));
                    }
                }
            }
        }
    }
    Ok(embed_pair(quad, &pairs, a, b, 3))
}

impl<'q> ReductionData<'q> {
    /// diagnostic variant with adjustable r(λ)-weight
    pub fn check_cdybe_h_variant(
        &self,
        lambda: &[C64],
        z12: C64,
        z13: C64,
        z23: C64,
        tau: Tau,
        params: &QSeriesParams,
        threshold: f64,
        rl_weight: f64,
    ) -> Result<Residual> {
        let h = 1e-4;
        let d = self.quad.d;
        let dim3 = d.pow(3);
        let zs = |a: usize, b: usize| -> C64 {
            match (a, b) {
                (1, 2) => z12,
                (1, 3) => z13,
                (2, 3) => z23,
                (2, 1) => -z12,
                (3, 1) => -z13,
                (3, 2) => -z23,
                _ => unreachable!(),
            }
        };
        let r_legs = |lam: &[C64], z: C64, a: usize, b: usize| -> Result<Mat> {
            let full = self.embed_h_point(lam);
            let rr = r_matrix(self.quad, &full, z, tau, params, EvalRoute::Eigen)?;
            let rt = rr.add(&self.r_lambda(lam, threshold)?.scale(C64::new(rl_weight, 0.0)));
            let mut pairs: Vec<(Mat, Mat)> = Vec::new();
            for i in 0..d {
                for j in 0..d {
                    for k in 0..d {
                        for l in 0..d {
                            let c = rt.at(i * d + k, j * d + l);
                            if c.norm() > 0.0 {
                                let mut u = Mat::zeros(d, d);
                                *u.at_mut(i, j) = c;
                                let mut v = Mat::zeros(d, d);
                                *v.at_mut(k, l) = C64::new(1.0, 0.0);
                                pairs.push((u, v));
                            }
                        }
                    }
                }
            }
            Ok(embed_pair(self.quad, &pairs, a, b, 3))
        };
        let mut total = Mat::zeros(dim3, dim3);
        for &(i, j, k) in &[(1usize, 2usize, 3usize), (2, 3, 1), (3, 1, 2)] {
            for nu in 0..self.h_basis.len() {
                let fd = |step: f64| -> Result<Mat> {
                    let mut lp = lambda.to_vec();
                    lp[nu] += step;
                    let mut lm = lambda.to_vec();
                    lm[nu] -= step;
                    Ok(r_legs(&lp, zs(j, k), j, k)?
                        .sub(&r_legs(&lm, zs(j, k), j, k)?)
                        .scale(C64::new(1.0 / (2.0 * step), 0.0)))
                };
                let d1 = fd(h)?;
                let d2 = fd(h / 2.0)?;
                let dr = d2
                    .scale(C64::new(4.0 / 3.0, 0.0))
                    .sub(&d1.scale(C64::new(1.0 / 3.0, 0.0)));
                let e_leg = embed_pair(
                    self.quad,
                    &[(self.h_basis[nu].clone(), Mat::eye(d))],
                    i,
                    (i % 3) + 1,
                    3,
                );
                total = total.add(&e_leg.mul(&dr));
            }
            let rij = r_legs(lambda, zs(i, j), i, j)?;
            let rik = r_legs(lambda, zs(i, k), i, k)?;
            total = total.add(&rij.comm(&rik));
        }
        Ok(Residual::new(total.max_abs(), "(h,g) CDYBE variant"))
    }
}
