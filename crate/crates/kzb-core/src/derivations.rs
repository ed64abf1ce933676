//! The derivation data (D_{s,γ}, C_{s,γ}) of t^Γ_{1,n}, the membership
//! conditions that carve out d̃₀^Γ inside f_Γ ⊕ f_Γ^{⊕|Γ|}, the induced
//! derivations ξ on the presented algebra, and the sl₂ action (X, d, Δ₀).

use crate::gamma::{GammaElement, GammaGroup, GammaMorphism};
use crate::lie::{add_term, Alphabet, LieElement, Poly, Scalar};
use crate::presentation::PresentationContext;
use crate::scalar::Rat;
use crate::{Error, Result};
use num_traits::{One, Zero};

/// Free Lie algebra f_Γ on generators x, t^α (α ∈ Γ), with the bigrading
/// (deg_x, deg_t). Letter 0 is x; letter 1+k is t^{elements[k]}.
#[derive(Clone, Debug)]
pub struct FreeGammaContext {
    pub gamma: GammaGroup,
    pub alphabet: Alphabet,
}

impl FreeGammaContext {
    pub fn new(gamma: GammaGroup) -> Self {
        let mut names = vec!["x".to_string()];
        let mut bidegrees = vec![(1usize, 0usize)];
        for a in gamma.elements() {
            names.push(format!("t^{}", a));
            bidegrees.push((0, 1));
        }
        FreeGammaContext {
            gamma,
            alphabet: Alphabet { names, bidegrees },
        }
    }

    pub fn x<T: Scalar>(&self) -> LieElement<T> {
        LieElement::generator(0)
    }

    pub fn t<T: Scalar>(&self, alpha: GammaElement) -> LieElement<T> {
        let idx = self
            .gamma
            .elements()
            .iter()
            .position(|&a| a == alpha)
            .expect("α belongs to Γ");
        LieElement::generator((idx + 1) as u8)
    }

    /// (ad x)^k applied in the free algebra.
    pub fn ad_x_pow<T: Scalar>(&self, k: usize, e: &LieElement<T>) -> LieElement<T> {
        let x = self.x::<T>();
        let mut out = e.clone();
        for _ in 0..k {
            out = x.comm(&out);
        }
        out
    }

    /// The endomorphism x ↦ −x, t^β ↦ t^{−β} (used by conditions (i), (vi)).
    pub fn flip<T: Scalar>(&self, e: &LieElement<T>) -> LieElement<T> {
        let elems = self.gamma.elements();
        let mut out = Poly::new();
        for (w, c) in &e.poly {
            let mut sign_flips = 0usize;
            let nw: Vec<u8> = w
                .iter()
                .map(|&l| {
                    if l == 0 {
                        sign_flips += 1;
                        0
                    } else {
                        let beta = elems[(l - 1) as usize];
                        let nb = self.gamma.neg(beta);
                        let idx = elems.iter().position(|&a| a == nb).unwrap();
                        (idx + 1) as u8
                    }
                })
                .collect();
            let coeff = if sign_flips % 2 == 1 {
                -c.clone()
            } else {
                c.clone()
            };
            add_term(&mut out, nw, coeff);
        }
        LieElement { poly: out }
    }

    /// Substitute x ↦ image_x, t^β ↦ image_t(β) into a free-algebra element,
    /// landing in the word algebra of the target context.
    pub fn substitute<T: Scalar>(
        &self,
        e: &LieElement<Rat>,
        image_x: &LieElement<T>,
        image_t: &dyn Fn(GammaElement) -> LieElement<T>,
    ) -> LieElement<T> {
        let elems = self.gamma.elements();
        let images: Vec<Poly<T>> = std::iter::once(image_x.poly.clone())
            .chain(elems.iter().map(|&a| image_t(a).poly))
            .collect();
        let mut out = Poly::new();
        for (w, c) in &e.poly {
            let mut acc: Poly<T> = Poly::new();
            acc.insert(vec![], T::from_rat(c));
            for &l in w {
                acc = crate::lie::poly_mul(&acc, &images[l as usize]);
            }
            for (word, cc) in acc {
                add_term(&mut out, word, cc);
            }
        }
        LieElement { poly: out }
    }
}

/// A pair (D, C) with C = (C_α)_{α∈Γ}, all in f_Γ, of homogeneous bidegree
/// (p, q): deg_x(D)+deg_t(D) = p, deg_t(D) − 1 = q = deg_t(C_α).
#[derive(Clone, Debug)]
pub struct DerivationDatum {
    pub free: FreeGammaContext,
    pub d: LieElement<Rat>,
    pub c: Vec<LieElement<Rat>>, // indexed like gamma.elements()
    pub bidegree: (usize, usize),
}

impl DerivationDatum {
    pub fn c_of(&self, alpha: GammaElement) -> &LieElement<Rat> {
        let idx = self
            .free
            .gamma
            .elements()
            .iter()
            .position(|&a| a == alpha)
            .expect("α belongs to Γ");
        &self.c[idx]
    }

    pub fn zero(gamma: GammaGroup, bidegree: (usize, usize)) -> Self {
        let free = FreeGammaContext::new(gamma);
        DerivationDatum {
            d: LieElement::zero(),
            c: vec![LieElement::zero(); gamma.order()],
            free,
            bidegree,
        }
    }

    pub fn scale(&self, s: &Rat) -> Self {
        DerivationDatum {
            free: self.free.clone(),
            d: self.d.scale(s),
            c: self.c.iter().map(|e| e.scale(s)).collect(),
            bidegree: self.bidegree,
        }
    }

    pub fn sub(&self, other: &DerivationDatum) -> Self {
        DerivationDatum {
            free: self.free.clone(),
            d: self.d.sub(&other.d),
            c: self
                .c
                .iter()
                .zip(&other.c)
                .map(|(a, b)| a.sub(b))
                .collect(),
            bidegree: self.bidegree,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.d.is_zero() && self.c.iter().all(|e| e.is_zero())
    }
}

/// (D_{s,γ}, C_{s,γ}):
///   D = Σ_{p+q=s−1} Σ_β [(ad x)^p t^{β−γ}, (−ad x)^q t^β],
///   C_α = (ad x)^s t^{α−γ} + (−ad x)^s t^{α+γ}.
pub fn make_delta(s: usize, gamma_elem: GammaElement, gamma: GammaGroup) -> DerivationDatum {
    let free = FreeGammaContext::new(gamma);
    let mut d: LieElement<Rat> = LieElement::zero();
    if s >= 1 {
        for p in 0..=(s - 1) {
            let q = s - 1 - p;
            for beta in gamma.elements() {
                let left = free.ad_x_pow(p, &free.t::<Rat>(gamma.sub(beta, gamma_elem)));
                let mut right = free.ad_x_pow(q, &free.t::<Rat>(beta));
                if q % 2 == 1 {
                    right = right.neg();
                }
                d = d.add(&left.comm(&right));
            }
        }
    }
    let c: Vec<LieElement<Rat>> = gamma
        .elements()
        .into_iter()
        .map(|alpha| {
            let a = free.ad_x_pow(s, &free.t::<Rat>(gamma.sub(alpha, gamma_elem)));
            let mut b = free.ad_x_pow(s, &free.t::<Rat>(gamma.add(alpha, gamma_elem)));
            if s % 2 == 1 {
                b = b.neg();
            }
            a.add(&b)
        })
        .collect();
    DerivationDatum {
        free,
        d,
        c,
        bidegree: (s + 1, 1),
    }
}

/// The bracket ⟨(D,C),(D',C')⟩ = (δ_C(D')−δ_{C'}(D), [C,C']+δ_C(C')−δ_{C'}(C)),
/// where δ_C is the derivation of f_Γ with x ↦ 0, t^α ↦ [t^α, C_α].
pub fn datum_bracket(a: &DerivationDatum, b: &DerivationDatum) -> DerivationDatum {
    let free = &a.free;
    let delta = |c: &[LieElement<Rat>], e: &LieElement<Rat>| -> LieElement<Rat> {
        derive_words(&e.poly, &|l| {
            if l == 0 {
                LieElement::zero()
            } else {
                let alpha = free.gamma.elements()[(l - 1) as usize];
                free.t::<Rat>(alpha).comm(&c[(l - 1) as usize])
            }
        })
    };
    let d = delta(&a.c, &b.d).sub(&delta(&b.c, &a.d));
    let c: Vec<LieElement<Rat>> = a
        .c
        .iter()
        .zip(&b.c)
        .map(|(ca, cb)| ca.comm(cb).add(&delta(&a.c, cb)).sub(&delta(&b.c, ca)))
        .collect();
    DerivationDatum {
        free: free.clone(),
        d,
        c,
        bidegree: (a.bidegree.0 + b.bidegree.0, a.bidegree.1 + b.bidegree.1),
    }
}

/// Extend a generator assignment to a derivation of the word algebra
/// (Leibniz over letter positions).
pub fn derive_words<T: Scalar>(
    poly: &Poly<T>,
    image: &dyn Fn(u8) -> LieElement<T>,
) -> LieElement<T> {
    let mut out: Poly<T> = Poly::new();
    for (w, c) in poly {
        for k in 0..w.len() {
            let img = image(w[k]);
            if img.is_zero() {
                continue;
            }
            for (mw, mc) in &img.poly {
                let mut word = Vec::with_capacity(w.len() - 1 + mw.len());
                word.extend_from_slice(&w[..k]);
                word.extend_from_slice(mw);
                word.extend_from_slice(&w[k + 1..]);
                add_term(&mut out, word, c.clone() * mc.clone());
            }
        }
    }
    LieElement { poly: out }
}

/// The three sl₂ basis derivations of t^Γ_{1,n}: labels X (= ẽ), d (= h̃),
/// Δ₀ (= f̃).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sl2 {
    X,
    D,
    Delta0,
}

/// ξ_g for a general sl₂ matrix (a b; c d):
/// (x_i y_i) ↦ (x_i y_i)(a b; c d), t ↦ 0.
pub fn apply_sl2_matrix<T: Scalar>(
    ctx: &PresentationContext,
    a: &Rat,
    b: &Rat,
    c: &Rat,
    d: &Rat,
    e: &LieElement<T>,
) -> LieElement<T> {
    let image = |l: u8| -> LieElement<T> {
        match ctx.generator_list()[l as usize] {
            crate::lie::Generator::X(i) => {
                let xi = ctx.gen_x::<T>(i as usize).scale(&T::from_rat(a));
                let yi = ctx.gen_y::<T>(i as usize).scale(&T::from_rat(b));
                xi.add(&yi)
            }
            crate::lie::Generator::Y(i) => {
                let xi = ctx.gen_x::<T>(i as usize).scale(&T::from_rat(c));
                let yi = ctx.gen_y::<T>(i as usize).scale(&T::from_rat(d));
                xi.add(&yi)
            }
            crate::lie::Generator::T { .. } => LieElement::zero(),
        }
    };
    derive_words(&e.poly, &image)
}

/// Basis actions: ξ_X: y_i ↦ x_i; ξ_d: x_i ↦ x_i, y_i ↦ −y_i;
/// ξ_{Δ₀}: x_i ↦ y_i. All kill the t-generators.
pub fn apply_sl2<T: Scalar>(ctx: &PresentationContext, g: Sl2, e: &LieElement<T>) -> LieElement<T> {
    let one = Rat::one();
    let zero = Rat::zero();
    let neg = -Rat::one();
    match g {
        Sl2::X => apply_sl2_matrix(ctx, &zero, &zero, &one, &zero, e),
        Sl2::D => apply_sl2_matrix(ctx, &one, &zero, &zero, &neg, e),
        Sl2::Delta0 => apply_sl2_matrix(ctx, &zero, &one, &zero, &zero, e),
    }
}

/// ξ_{(D,C)}: x_i ↦ 0, y_i ↦ Σ_{j≠i} D(x_i, t^β_ij),
/// t^α_ij ↦ [t^α_ij, C_α(x_i, t^β_ij)], extended by Leibniz.
pub fn apply_xi<T: Scalar>(
    ctx: &PresentationContext,
    datum: &DerivationDatum,
    e: &LieElement<T>,
) -> LieElement<T> {
    let free = &datum.free;
    let image = |l: u8| -> LieElement<T> {
        match ctx.generator_list()[l as usize] {
            crate::lie::Generator::X(_) => LieElement::zero(),
            crate::lie::Generator::Y(i) => {
                let mut acc = LieElement::zero();
                for j in 1..=ctx.n {
                    if j == i as usize {
                        continue;
                    }
                    let img = free.substitute(&datum.d, &ctx.gen_x::<T>(i as usize), &|beta| {
                        ctx.gen_t::<T>(i as usize, j, beta)
                    });
                    acc = acc.add(&img);
                }
                acc
            }
            crate::lie::Generator::T { i, j, alpha } => {
                let c_img = free.substitute(
                    datum.c_of(alpha),
                    &ctx.gen_x::<T>(i as usize),
                    &|beta| ctx.gen_t::<T>(i as usize, j as usize, beta),
                );
                ctx.gen_t::<T>(i as usize, j as usize, alpha).comm(&c_img)
            }
        }
    };
    derive_words(&e.poly, &image)
}

/// Report of the five membership conditions plus derived (vi).
#[derive(Debug, Clone)]
pub struct MembershipReport {
    pub cond: [bool; 6],
}

impl MembershipReport {
    pub fn all_pass(&self) -> bool {
        self.cond.iter().all(|&b| b)
    }
}

/// Conditions (i)–(v) for membership in d̃₀^Γ: (i),(ii) exactly in f_Γ;
/// (iii),(iv),(v) by substitution into t^Γ_{1,3} and reduction; (vi) is the
/// derived antisymmetry of D.
pub fn check_membership(
    datum: &DerivationDatum,
    t3: &PresentationContext,
) -> Result<MembershipReport> {
    if t3.n != 3 {
        return Err(Error::Validation("membership needs an n=3 context".into()));
    }
    let free = &datum.free;
    let g = free.gamma;
    let needed = datum.bidegree.0 + datum.bidegree.1 + 2;
    if t3.cap < needed {
        return Err(Error::Validation(format!(
            "cap {} too small for membership at bidegree {:?} (need ≥ {})",
            t3.cap, datum.bidegree, needed
        )));
    }

    // (i) C_α(x,t^β) = C_{−α}(−x,t^{−β})
    let cond1 = g.elements().iter().all(|&alpha| {
        let lhs = datum.c_of(alpha);
        let rhs = free.flip(datum.c_of(g.neg(alpha)));
        lhs.sub(&rhs).is_zero()
    });

    // (ii) [x, D] + Σ_α [t^α, C_α] = 0 in f_Γ
    let mut acc = free.x::<Rat>().comm(&datum.d);
    for alpha in g.elements() {
        acc = acc.add(&free.t::<Rat>(alpha).comm(datum.c_of(alpha)));
    }
    let cond2 = acc.is_zero();

    let subst_d = |i: usize, j: usize| -> LieElement<Rat> {
        free.substitute(&datum.d, &t3.gen_x::<Rat>(i), &|b| t3.gen_t::<Rat>(i, j, b))
    };
    let subst_c = |alpha: GammaElement, i: usize, j: usize| -> LieElement<Rat> {
        free.substitute(datum.c_of(alpha), &t3.gen_x::<Rat>(i), &|b| {
            t3.gen_t::<Rat>(i, j, b)
        })
    };

    // (iii) [D(x_1,t^β_13), y_2] + c.p.(1,2,3) = 0
    let c3 = {
        let term = |i: usize, j: usize, k: usize| -> LieElement<Rat> {
            subst_d(i, k).comm(&t3.gen_y::<Rat>(j))
        };
        let total = term(1, 2, 3).add(&term(2, 3, 1)).add(&term(3, 1, 2));
        reduce_within_cap(t3, &total)?.is_zero()
    };

    // (iv) [D(x_1,t^β_12)+D(x_1,t^β_13)−[C_α(x_2,t^β_23),y_1], t^α_23] = 0
    let c4 = g.elements().iter().all(|&alpha| {
        let inner = subst_d(1, 2)
            .add(&subst_d(1, 3))
            .sub(&subst_c(alpha, 2, 3).comm(&t3.gen_y::<Rat>(1)));
        let total = inner.comm(&t3.gen_t::<Rat>(2, 3, alpha));
        reduce_within_cap(t3, &total)
            .map(|r| r.is_zero())
            .unwrap_or(false)
    });

    // (v) [C_α(x_1,t^γ_12), t^{α+β}_13 + t^β_23]
    //     + [t^{α+β}_13, C_{α+β}(x_1,t^γ_13)]
    //     + [t^β_23, C_β(x_2,t^γ_23)] commutes with t^α_12
    let c5 = g.elements().iter().all(|&alpha| {
        g.elements().iter().all(|&beta| {
            let apb = g.add(alpha, beta);
            let e1 = subst_c(alpha, 1, 2)
                .comm(&t3.gen_t::<Rat>(1, 3, apb).add(&t3.gen_t::<Rat>(2, 3, beta)));
            let e2 = t3.gen_t::<Rat>(1, 3, apb).comm(&subst_c(apb, 1, 3));
            let e3 = t3.gen_t::<Rat>(2, 3, beta).comm(&subst_c(beta, 2, 3));
            let total = e1.add(&e2).add(&e3).comm(&t3.gen_t::<Rat>(1, 2, alpha));
            reduce_within_cap(t3, &total)
                .map(|r| r.is_zero())
                .unwrap_or(false)
        })
    });

    // (vi) D(x,t^β) = −D(−x,t^{−β})
    let cond6 = datum.d.add(&free.flip(&datum.d)).is_zero();

    Ok(MembershipReport {
        cond: [cond1, cond2, c3, c4, c5, cond6],
    })
}

/// Relations of ξ_{s,γ} against the sl₂ action, as operators on every
/// generator up to the cap.
pub struct NilpotencyReport {
    pub commutes_with_x: bool,
    pub d_eigenvalue: bool,
    pub nilpotent: bool,
}

pub fn check_nilpotency(
    s: usize,
    gamma_elem: GammaElement,
    ctx: &PresentationContext,
) -> Result<NilpotencyReport> {
    if ctx.cap < s + 2 {
        return Err(Error::Validation(format!(
            "cap {} too small for nilpotency at s = {}",
            ctx.cap, s
        )));
    }
    let datum = make_delta(s, gamma_elem, ctx.gamma);
    let xi = |e: &LieElement<Rat>| -> Result<LieElement<Rat>> {
        reduce_within_cap(ctx, &apply_xi(ctx, &datum, e))
    };
    let xi_sl2 = |g: Sl2, e: &LieElement<Rat>| -> Result<LieElement<Rat>> {
        reduce_within_cap(ctx, &apply_sl2(ctx, g, e))
    };

    let mut commutes_with_x = true;
    let mut d_eigenvalue = true;
    let mut nilpotent = true;
    for gi in 0..ctx.generator_list().len() {
        let gen = LieElement::<Rat>::generator(gi as u8);
        let lhs = xi_sl2(Sl2::X, &xi(&gen)?)?.sub(&xi(&xi_sl2(Sl2::X, &gen)?)?);
        if !reduce_within_cap(ctx, &lhs)?.is_zero() {
            commutes_with_x = false;
        }
        let lhs = xi_sl2(Sl2::D, &xi(&gen)?)?.sub(&xi(&xi_sl2(Sl2::D, &gen)?)?);
        let rhs = xi(&gen)?.scale(&Rat::from_integer((s as i64).into()));
        if !reduce_within_cap(ctx, &lhs.sub(&rhs))?.is_zero() {
            d_eigenvalue = false;
        }
        // (ad ξ_{Δ₀})^{s+1}(ξ)(g) expanded binomially
        let mut acc = LieElement::<Rat>::zero();
        for k in 0..=(s + 1) {
            let mut e = gen.clone();
            for _ in 0..(s + 1 - k) {
                e = xi_sl2(Sl2::Delta0, &e)?;
            }
            e = xi(&e)?;
            for _ in 0..k {
                e = xi_sl2(Sl2::Delta0, &e)?;
            }
            let mut coeff = Rat::from_integer(binomial(s + 1, k).into());
            if (s + 1 - k) % 2 == 1 {
                coeff = -coeff;
            }
            acc = acc.add(&e.scale(&coeff));
        }
        if !reduce_within_cap(ctx, &acc)?.is_zero() {
            nilpotent = false;
        }
    }
    Ok(NilpotencyReport {
        commutes_with_x,
        d_eigenvalue,
        nilpotent,
    })
}

fn binomial(n: usize, k: usize) -> i64 {
    let mut r: i64 = 1;
    for i in 0..k {
        r = r * (n - i) as i64 / (i + 1) as i64;
    }
    r
}

/// Reduce, dropping homogeneous parts beyond the cap (operator identities
/// are asserted in the window the context can represent).
pub fn reduce_within_cap(
    ctx: &PresentationContext,
    e: &LieElement<Rat>,
) -> Result<LieElement<Rat>> {
    let mut kept = Poly::new();
    for (w, c) in &e.poly {
        let (p, q) = ctx.alphabet.word_bidegree(w);
        if p + q <= ctx.cap {
            add_term(&mut kept, w.clone(), c.clone());
        }
    }
    ctx.reduce(&LieElement { poly: kept })
}

/// Complex variant of the cap-windowed reduction.
pub fn reduce_within_cap_c(
    ctx: &PresentationContext,
    e: &LieElement<crate::scalar::C64>,
) -> Result<LieElement<crate::scalar::C64>> {
    let mut kept = Poly::new();
    for (w, c) in &e.poly {
        let (p, q) = ctx.alphabet.word_bidegree(w);
        if p + q <= ctx.cap {
            add_term(&mut kept, w.clone(), *c);
        }
    }
    ctx.reduce_c(&LieElement { poly: kept })
}

/// Comparison of derivation data along an injective ρ: Γ₁ ↪ Γ₂ with a
/// section of the cokernel: substitute t^β ↦ Σ_γ t^{ρ(β)+γ}; the component
/// index relabels by ρ(β)+γ.
pub fn comparison_datum(
    datum: &DerivationDatum,
    rho: &GammaMorphism,
    section: Option<&[GammaElement]>,
) -> Result<DerivationDatum> {
    if rho.kernel_size() != 1 {
        return Err(Error::Validation(
            "derivation comparison needs injective ρ".into(),
        ));
    }
    let free2 = FreeGammaContext::new(rho.target);
    let canonical = rho.coker_section();
    let section: Vec<GammaElement> = section.map(|s| s.to_vec()).unwrap_or(canonical);
    let spread = |e: &LieElement<Rat>| -> LieElement<Rat> {
        datum.free.substitute(e, &free2.x::<Rat>(), &|beta| {
            let rb = rho.apply(beta);
            let mut acc = LieElement::zero();
            for &g2 in &section {
                acc = acc.add(&free2.t::<Rat>(rho.target.add(rb, g2)));
            }
            acc
        })
    };
    let d = spread(&datum.d);
    let mut c = vec![LieElement::zero(); rho.target.order()];
    let t2elems = rho.target.elements();
    for (bi, &beta) in datum.free.gamma.elements().iter().enumerate() {
        let img = spread(&datum.c[bi]);
        for &g2 in &section {
            let idx2 = rho.target.add(rho.apply(beta), g2);
            let pos = t2elems.iter().position(|&a| a == idx2).unwrap();
            c[pos] = img.clone();
        }
    }
    Ok(DerivationDatum {
        free: free2,
        d,
        c,
        bidegree: datum.bidegree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    fn t3(m: u32, n: u32, cap: usize) -> PresentationContext {
        PresentationContext::build(3, GammaGroup::new(m, n).unwrap(), cap, false, None).unwrap()
    }

    #[test]
    fn make_delta_s0_shape() {
        let g = GammaGroup::new(2, 1).unwrap();
        let d = make_delta(0, g.element(1, 0), g);
        assert!(d.d.is_zero(), "s=0 has empty D sum");
        let free = &d.free;
        for alpha in g.elements() {
            let expect = free
                .t::<Rat>(g.sub(alpha, g.element(1, 0)))
                .add(&free.t(g.add(alpha, g.element(1, 0))));
            assert!(d.c_of(alpha).sub(&expect).is_zero());
        }
    }

    #[test]
    fn delta_sign_symmetry() {
        let g = GammaGroup::new(2, 2).unwrap();
        for s in 0..=3 {
            for gamma_elem in g.elements() {
                let a = make_delta(s, gamma_elem, g);
                let b = make_delta(s, g.neg(gamma_elem), g);
                let sign = if s % 2 == 0 { rat_int(1) } else { rat_int(-1) };
                assert!(a.sub(&b.scale(&sign)).is_zero(), "s={} γ={}", s, gamma_elem);
            }
        }
    }

    #[test]
    fn s1_formula_matches_shape() {
        let g = GammaGroup::new(2, 1).unwrap();
        let gamma_elem = g.element(1, 0);
        let d = make_delta(1, gamma_elem, g);
        let free = &d.free;
        let mut expect: LieElement<Rat> = LieElement::zero();
        for beta in g.elements() {
            expect = expect.add(&free.t::<Rat>(g.sub(beta, gamma_elem)).comm(&free.t(beta)));
        }
        assert!(d.d.sub(&expect).is_zero());
    }

    #[test]
    fn membership_for_small_s() {
        let g = GammaGroup::new(2, 1).unwrap();
        let ctx = t3(2, 1, 4);
        for s in 0..=2 {
            for gamma_elem in g.elements() {
                let datum = make_delta(s, gamma_elem, g);
                if datum.bidegree.0 + datum.bidegree.1 + 2 > ctx.cap {
                    continue;
                }
                let rep = check_membership(&datum, &ctx).unwrap();
                assert!(
                    rep.all_pass(),
                    "membership fails for s={} γ={}: {:?}",
                    s,
                    gamma_elem,
                    rep.cond
                );
            }
        }
        let rep = check_membership(&DerivationDatum::zero(g, (1, 1)), &ctx).unwrap();
        assert!(rep.all_pass());
        // the kernel element (0, C_α = t^α) passes
        let free = FreeGammaContext::new(g);
        let kernel = DerivationDatum {
            d: LieElement::zero(),
            c: g.elements().iter().map(|&a| free.t::<Rat>(a)).collect(),
            free,
            bidegree: (0, 0),
        };
        let rep = check_membership(&kernel, &ctx).unwrap();
        assert!(rep.all_pass());
    }

    #[test]
    fn xi_well_defined_on_relators_and_kills_sums() {
        let g = GammaGroup::new(2, 1).unwrap();
        let ctx = t3(2, 1, 4);
        for s in 0..=1 {
            for gamma_elem in g.elements() {
                let datum = make_delta(s, gamma_elem, g);
                let x1 = ctx.gen_x::<Rat>(1);
                assert!(apply_xi(&ctx, &datum, &x1).is_zero());
                let sy = ctx.gen_y::<Rat>(1).add(&ctx.gen_y(2)).add(&ctx.gen_y(3));
                let img = apply_xi(&ctx, &datum, &sy);
                assert!(
                    reduce_within_cap(&ctx, &img).unwrap().is_zero(),
                    "ξ(Σy) ≠ 0 for s={} γ={}",
                    s,
                    gamma_elem
                );
                for r in ctx.defining_relators() {
                    let img = apply_xi(&ctx, &datum, &r);
                    assert!(
                        reduce_within_cap(&ctx, &img).unwrap().is_zero(),
                        "ξ not well defined on a relator for s={} γ={}",
                        s,
                        gamma_elem
                    );
                }
            }
        }
    }

    #[test]
    fn leibniz_against_fixed_generator() {
        let g = GammaGroup::new(2, 1).unwrap();
        let ctx = t3(2, 1, 4);
        let datum = make_delta(1, g.element(1, 0), g);
        let lhs = apply_xi(&ctx, &datum, &ctx.gen_x::<Rat>(1).comm(&ctx.gen_y(2)));
        let rhs = ctx
            .gen_x::<Rat>(1)
            .comm(&apply_xi(&ctx, &datum, &ctx.gen_y(2)));
        assert!(reduce_within_cap(&ctx, &lhs.sub(&rhs)).unwrap().is_zero());
    }

    #[test]
    fn sl2_triple_acts_correctly() {
        let ctx = t3(1, 2, 3);
        let t = ctx.gen_t::<Rat>(1, 2, ctx.gamma.element(0, 1));
        assert!(apply_sl2(&ctx, Sl2::D, &t).is_zero());
        for gi in 0..ctx.generator_list().len() {
            let gen = LieElement::<Rat>::generator(gi as u8);
            let lhs = apply_sl2(&ctx, Sl2::X, &apply_sl2(&ctx, Sl2::Delta0, &gen)).sub(
                &apply_sl2(&ctx, Sl2::Delta0, &apply_sl2(&ctx, Sl2::X, &gen)),
            );
            let rhs = apply_sl2(&ctx, Sl2::D, &gen);
            assert!(
                ctx.reduce(&lhs.sub(&rhs)).unwrap().is_zero(),
                "sl2 bracket fails on generator {}",
                gi
            );
        }
        // ξ_d scales bidegree (p,q) by p − q
        let e = ctx.gen_x::<Rat>(1).comm(&ctx.gen_t(1, 2, ctx.gamma.zero()));
        let img = apply_sl2(&ctx, Sl2::D, &e);
        assert_eq!(ctx.reduce(&img).unwrap(), ctx.reduce(&e).unwrap());
    }

    #[test]
    fn nilpotency_relations() {
        let g = GammaGroup::new(2, 1).unwrap();
        let ctx = t3(2, 1, 4);
        for s in 0..=2 {
            for gamma_elem in g.elements() {
                let rep = check_nilpotency(s, gamma_elem, &ctx).unwrap();
                assert!(rep.commutes_with_x, "[X̃, ξ_({},{})] ≠ 0", s, gamma_elem);
                assert!(rep.d_eigenvalue, "[d̃, ξ] ≠ s·ξ at s={} γ={}", s, gamma_elem);
                assert!(
                    rep.nilpotent,
                    "ad^(s+1)(Δ̃₀)(ξ) ≠ 0 at s={} γ={}",
                    s,
                    gamma_elem
                );
            }
        }
    }

    #[test]
    fn xi_operators_match_sign_symmetry() {
        let g = GammaGroup::new(2, 2).unwrap();
        let ctx = t3(2, 2, 3);
        for s in 0..=1 {
            for gamma_elem in g.elements() {
                let a = make_delta(s, gamma_elem, g);
                let b = make_delta(s, g.neg(gamma_elem), g);
                for gi in 0..ctx.generator_list().len() {
                    let gen = LieElement::<Rat>::generator(gi as u8);
                    let ia = apply_xi(&ctx, &a, &gen);
                    let ib = apply_xi(&ctx, &b, &gen);
                    let sign = if s % 2 == 0 { rat_int(1) } else { rat_int(-1) };
                    assert!(reduce_within_cap(&ctx, &ia.sub(&ib.scale(&sign)))
                        .unwrap()
                        .is_zero());
                }
            }
        }
    }

    #[test]
    fn datum_bracket_closes() {
        // The full five-condition membership of a bracket datum needs
        // degree p+q+2 ≥ 7 reduction spaces; at desk scale we verify the
        // free-algebra conditions (i), (ii), (vi) exactly, plus the real
        // content of closure: ξ_{⟨a,b⟩} = [ξ_a, ξ_b] as derivations, on the
        // x- and y-generators within the cap window.
        let g = GammaGroup::new(2, 1).unwrap();
        let a = make_delta(0, g.element(1, 0), g);
        let b = make_delta(0, g.element(0, 0), g);
        let br = datum_bracket(&a, &b);
        let free = &br.free;
        // (i)
        for alpha in g.elements() {
            assert!(br
                .c_of(alpha)
                .sub(&free.flip(br.c_of(g.neg(alpha))))
                .is_zero());
        }
        // (ii)
        let mut acc = free.x::<Rat>().comm(&br.d);
        for alpha in g.elements() {
            acc = acc.add(&free.t::<Rat>(alpha).comm(br.c_of(alpha)));
        }
        assert!(acc.is_zero());
        // (vi)
        assert!(br.d.add(&free.flip(&br.d)).is_zero());
        // operator identity on x,y generators
        let ctx = t3(2, 1, 5);
        for i in 1..=3usize {
            for gen in [ctx.gen_x::<Rat>(i), ctx.gen_y::<Rat>(i)] {
                let lhs = apply_xi(&ctx, &a, &apply_xi(&ctx, &b, &gen))
                    .sub(&apply_xi(&ctx, &b, &apply_xi(&ctx, &a, &gen)));
                let rhs = apply_xi(&ctx, &br, &gen);
                assert!(
                    reduce_within_cap(&ctx, &lhs.sub(&rhs)).unwrap().is_zero(),
                    "operator closure fails"
                );
            }
        }
    }

    #[test]
    fn comparison_square_commutes() {
        let g1 = GammaGroup::trivial();
        let g2 = GammaGroup::new(2, 1).unwrap();
        let rho = GammaMorphism::from_trivial(g2);
        let ctx1 = t3(1, 1, 4);
        let ctx2 = t3(2, 1, 4);
        let one = rat_int(1);
        let zero = rat_int(0);
        for s in 0..=1 {
            let datum1 = make_delta(s, g1.zero(), g1);
            let datum2 = comparison_datum(&datum1, &rho, None).unwrap();
            for gi in 0..ctx1.generator_list().len() {
                let gen = LieElement::<Rat>::generator(gi as u8);
                let lhs = {
                    let img = ctx1
                        .comparison_map(&ctx2, &rho, (&one, &zero, &zero, &one), None, &gen)
                        .unwrap();
                    apply_xi(&ctx2, &datum2, &img)
                };
                let rhs = {
                    let img = apply_xi(&ctx1, &datum1, &gen);
                    ctx1.comparison_map(&ctx2, &rho, (&one, &zero, &zero, &one), None, &img)
                        .unwrap()
                };
                assert!(
                    reduce_within_cap(&ctx2, &lhs.sub(&rhs)).unwrap().is_zero(),
                    "comparison square fails at s={} generator {}",
                    s,
                    gi
                );
            }
        }
    }
}
