//! Truncated universal envelope of t^Γ_{1,n}: free associative words
//! modulo the two-sided ideal generated by the Lie relators, degree by
//! degree, with exp/log and the marker-twisted group elements carried by
//! holonomies.

use crate::lie::{add_term, letter, LieElement, Poly, Scalar};
use crate::linalg::{Echelon, SparseRat};
use crate::presentation::{MarkerElement, PresentationContext, DEFAULT_BASIS_GUARD};
use crate::scalar::{Rat, C64};
use crate::{Error, Result};
use num_traits::Zero;
use std::collections::BTreeMap;

/// Per-bidegree reduction data for the associative quotient.
struct EnvBidegree {
    index: BTreeMap<Vec<u8>, u32>,
    words: Vec<Vec<u8>>,
    ideal: Echelon,
    ideal_basis: Vec<Poly<Rat>>,
}

/// Reduction context for the truncated envelope U(t^Γ_{1,n})/(deg > cap).
pub struct EnvelopeContext<'a> {
    pub ctx: &'a PresentationContext,
    pub cap: usize,
    data: BTreeMap<(usize, usize), EnvBidegree>,
}

impl<'a> EnvelopeContext<'a> {
    pub fn build(ctx: &'a PresentationContext, cap: usize, guard: Option<usize>) -> Result<Self> {
        let guard = guard.unwrap_or(DEFAULT_BASIS_GUARD);
        let mut relators: BTreeMap<(usize, usize), Vec<Poly<Rat>>> = BTreeMap::new();
        for r in ctx.defining_relators() {
            for (bd, poly) in r.homogeneous_parts(&ctx.alphabet) {
                relators.entry(bd).or_default().push(poly);
            }
        }
        let letters: Vec<Poly<Rat>> = (0..ctx.alphabet.len()).map(|l| letter(l as u8)).collect();

        let mut data: BTreeMap<(usize, usize), EnvBidegree> = BTreeMap::new();
        for d in 1..=cap {
            for p in 0..=d {
                let q = d - p;
                let words = ctx.alphabet.words_of_bidegree(p, q);
                if words.len() > guard {
                    return Err(Error::ResourceGuard {
                        what: "envelope word basis",
                        which: format!("bidegree ({},{})", p, q),
                        dim: words.len(),
                        guard,
                    });
                }
                let index: BTreeMap<Vec<u8>, u32> = words
                    .iter()
                    .enumerate()
                    .map(|(i, w)| (w.clone(), i as u32))
                    .collect();
                let mut ech = Echelon::new();
                let mut basis: Vec<Poly<Rat>> = Vec::new();
                let mut feed = |poly: Poly<Rat>| {
                    let mut v = SparseRat::new();
                    for (w, c) in &poly {
                        if !c.is_zero() {
                            v.insert(index[&w[..].to_vec()], c.clone());
                        }
                    }
                    if ech.insert(v).is_some() {
                        basis.push(poly);
                    }
                };
                for r in relators.get(&(p, q)).cloned().unwrap_or_default() {
                    feed(r);
                }
                // two-sided closure: letter·J and J·letter from lower degrees
                for (li, lp) in letters.iter().enumerate() {
                    let (gp, gq) = ctx.alphabet.bidegrees[li];
                    if gp > p || gq > q || (gp, gq) == (p, q) {
                        continue;
                    }
                    if let Some(lower) = data.get(&(p - gp, q - gq)) {
                        for v in &lower.ideal_basis {
                            feed(crate::lie::poly_mul(lp, v));
                            feed(crate::lie::poly_mul(v, lp));
                        }
                    }
                }
                data.insert(
                    (p, q),
                    EnvBidegree {
                        index,
                        words,
                        ideal: ech,
                        ideal_basis: basis,
                    },
                );
            }
        }
        Ok(EnvelopeContext { ctx, cap, data })
    }

    /// Canonical form modulo the relator ideal, truncating words of total
    /// degree beyond the cap.
    pub fn reduce<T: Scalar>(&self, e: &Poly<T>) -> Poly<T> {
        let mut grouped: BTreeMap<(usize, usize), Poly<T>> = BTreeMap::new();
        let mut out: Poly<T> = Poly::new();
        for (w, c) in e {
            if w.is_empty() {
                add_term(&mut out, w.clone(), c.clone());
                continue;
            }
            let bd = self.ctx.alphabet.word_bidegree(w);
            if bd.0 + bd.1 > self.cap {
                continue;
            }
            add_term(grouped.entry(bd).or_default(), w.clone(), c.clone());
        }
        for (bd, part) in grouped {
            let data = &self.data[&bd];
            let mut v: BTreeMap<u32, T> = BTreeMap::new();
            for (w, c) in &part {
                v.insert(data.index[w], c.clone());
            }
            reduce_generic(&data.ideal, &mut v);
            for (ci, c) in v {
                add_term(&mut out, data.words[ci as usize].clone(), c);
            }
        }
        out
    }

    pub fn mul<T: Scalar>(&self, a: &Poly<T>, b: &Poly<T>) -> Poly<T> {
        self.reduce(&crate::lie::poly_mul(a, b))
    }

    /// exp of a positive-degree element, truncated at cap.
    pub fn exp<T: Scalar>(&self, e: &Poly<T>) -> Result<Poly<T>> {
        if e.keys().any(|w| w.is_empty()) {
            return Err(Error::Domain("exp needs positive-degree input".into()));
        }
        let mut out: Poly<T> = self.one();
        let mut power: Poly<T> = self.one();
        for k in 1..=self.cap {
            power = self.mul(&power, e);
            if power.is_empty() {
                break;
            }
            let mut term = power.clone();
            crate::lie::poly_scale(&mut term, &T::from_rat(&Rat::new(1.into(), factorial(k))));
            crate::lie::poly_add_assign(&mut out, &term);
        }
        Ok(self.reduce(&out))
    }

    /// log of a group-like element (constant term 1), truncated at cap.
    pub fn log<T: Scalar>(&self, g: &Poly<T>) -> Result<Poly<T>> {
        let c0 = g.get(&vec![]).cloned().unwrap_or_else(T::zero);
        if c0 != T::one() {
            return Err(Error::Domain("log needs constant term 1".into()));
        }
        let mut u = g.clone();
        u.remove(&vec![]);
        let mut out: Poly<T> = Poly::new();
        let mut upow: Poly<T> = self.one();
        for k in 1..=self.cap {
            upow = self.mul(&upow, &u);
            if upow.is_empty() {
                break;
            }
            let sign: i64 = if k % 2 == 1 { 1 } else { -1 };
            let mut term = upow.clone();
            crate::lie::poly_scale(&mut term, &T::from_rat(&crate::scalar::rat(sign, k as i64)));
            crate::lie::poly_add_assign(&mut out, &term);
        }
        Ok(self.reduce(&out))
    }

    /// Inverse of an element with constant term 1.
    pub fn inverse<T: Scalar>(&self, g: &Poly<T>) -> Result<Poly<T>> {
        let c0 = g.get(&vec![]).cloned().unwrap_or_else(T::zero);
        if c0 != T::one() {
            return Err(Error::Domain("inverse needs constant term 1".into()));
        }
        let mut u = g.clone();
        u.remove(&vec![]);
        let mut out: Poly<T> = self.one();
        let mut upow: Poly<T> = self.one();
        for k in 1..=self.cap {
            upow = self.mul(&upow, &u);
            if upow.is_empty() {
                break;
            }
            let mut term = upow.clone();
            if k % 2 == 1 {
                term = crate::lie::poly_neg(&term);
            }
            crate::lie::poly_add_assign(&mut out, &term);
        }
        Ok(self.reduce(&out))
    }

    pub fn one<T: Scalar>(&self) -> Poly<T> {
        let mut p = Poly::new();
        p.insert(vec![], T::one());
        p
    }

    pub fn from_lie<T: Scalar>(&self, e: &LieElement<T>) -> Poly<T> {
        self.reduce(&e.poly)
    }

    pub fn graded_dim(&self, p: usize, q: usize) -> Option<usize> {
        self.data.get(&(p, q)).map(|d| d.words.len() - d.ideal.rank())
    }
}

fn reduce_generic<T: Scalar>(ech: &Echelon, v: &mut BTreeMap<u32, T>) {
    for (pivot, row) in ech.rows_exact() {
        let Some(c) = v.get(&pivot).cloned() else { continue };
        if c.is_zero() {
            continue;
        }
        for (rc, rx) in row {
            let entry = v.entry(rc).or_insert_with(T::zero);
            let delta = c.clone() * T::from_rat(&rx);
            *entry = entry.clone() - delta;
        }
    }
    v.retain(|_, c| !c.is_zero());
}

fn factorial(k: usize) -> num_bigint::BigInt {
    let mut f = num_bigint::BigInt::from(1);
    for i in 2..=k {
        f *= i as i64;
    }
    f
}

/// A holonomy value: group-like envelope element paired with a deck marker
/// in Γⁿ ⋊ 𝔖ₙ. Multiplication twists the envelope part by the marker
/// action before concatenation: (g₁, m₁)·(g₂, m₂) = (g₁·(m₁·g₂), m₁m₂).
#[derive(Clone, Debug)]
pub struct GroupElement {
    pub env: Poly<C64>,
    pub marker: MarkerElement,
}

impl GroupElement {
    pub fn identity(env_ctx: &EnvelopeContext) -> Self {
        GroupElement {
            env: env_ctx.one(),
            marker: MarkerElement::identity(env_ctx.ctx.n, &env_ctx.ctx.gamma),
        }
    }

    pub fn mul(&self, other: &GroupElement, env_ctx: &EnvelopeContext) -> GroupElement {
        let twisted = act_marker(env_ctx, &self.marker, &other.env);
        GroupElement {
            env: env_ctx.mul(&self.env, &twisted),
            marker: self.marker.compose(&other.marker, &env_ctx.ctx.gamma),
        }
    }

    pub fn inverse(&self, env_ctx: &EnvelopeContext) -> Result<GroupElement> {
        let m_inv = self.marker.inverse(&env_ctx.ctx.gamma);
        let e_inv = env_ctx.inverse(&self.env)?;
        Ok(GroupElement {
            env: act_marker(env_ctx, &m_inv, &e_inv),
            marker: m_inv,
        })
    }

    pub fn log(&self, env_ctx: &EnvelopeContext) -> Result<Poly<C64>> {
        env_ctx.log(&self.env)
    }

    pub fn pow(&self, k: usize, env_ctx: &EnvelopeContext) -> GroupElement {
        let mut acc = GroupElement::identity(env_ctx);
        for _ in 0..k {
            acc = acc.mul(self, env_ctx);
        }
        acc
    }

    /// Group commutator (a,b) = a b a⁻¹ b⁻¹ (left-to-right composition).
    pub fn group_comm(&self, other: &GroupElement, env_ctx: &EnvelopeContext) -> Result<GroupElement> {
        let ai = self.inverse(env_ctx)?;
        let bi = other.inverse(env_ctx)?;
        Ok(self.mul(other, env_ctx).mul(&ai, env_ctx).mul(&bi, env_ctx))
    }

    pub fn max_abs_diff(&self, other: &GroupElement, env_ctx: &EnvelopeContext) -> f64 {
        if self.marker != other.marker {
            return f64::INFINITY;
        }
        let mut d = self.env.clone();
        crate::lie::poly_add_assign(&mut d, &crate::lie::poly_neg(&other.env));
        let d = env_ctx.reduce(&d);
        d.values().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Letter-wise marker action extended to envelope elements.
pub fn act_marker(env_ctx: &EnvelopeContext, m: &MarkerElement, e: &Poly<C64>) -> Poly<C64> {
    if m.is_identity() {
        return e.clone();
    }
    let as_lie = LieElement { poly: e.clone() };
    let acted = env_ctx.ctx.group_act(m, &as_lie);
    env_ctx.reduce(&acted.poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamma::GammaGroup;

    fn env(n: usize, m: u32, nn: u32, cap: usize) -> (&'static PresentationContext, EnvelopeContext<'static>) {
        let ctx = Box::leak(Box::new(
            PresentationContext::build(n, GammaGroup::new(m, nn).unwrap(), cap, false, None)
                .unwrap(),
        ));
        let e = EnvelopeContext::build(ctx, cap, None).unwrap();
        (ctx, e)
    }

    #[test]
    fn exp_log_inverse_pair() {
        let (ctx, env) = env(2, 2, 1, 3);
        let x1 = ctx.gen_x::<Rat>(1);
        let e = env.exp(&x1.poly).unwrap();
        let l = env.log(&e).unwrap();
        assert_eq!(env.reduce(&x1.poly), l);
        let zero: Poly<Rat> = Poly::new();
        assert_eq!(env.exp(&zero).unwrap(), env.one());
    }

    #[test]
    fn commuting_generators_multiply_exponentials() {
        let (ctx, env) = env(2, 2, 1, 3);
        let x1 = ctx.gen_x::<Rat>(1);
        let x2 = ctx.gen_x::<Rat>(2);
        let lhs = env.mul(&env.exp(&x1.poly).unwrap(), &env.exp(&x2.poly).unwrap());
        let rhs = env.exp(&x1.add(&x2).poly).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn envelope_multiplication_is_associative_after_reduction() {
        let (ctx, env) = env(2, 2, 1, 3);
        let a = ctx.gen_x::<Rat>(1).poly;
        let b = ctx.gen_y::<Rat>(1).poly;
        let c = ctx.gen_t::<Rat>(1, 2, ctx.gamma.element(1, 0)).poly;
        let ab_c = env.mul(&env.mul(&a, &b), &c);
        let a_bc = env.mul(&a, &env.mul(&b, &c));
        assert_eq!(ab_c, a_bc);
    }

    #[test]
    fn lie_relations_hold_in_envelope() {
        let (ctx, env) = env(2, 2, 1, 3);
        let x1 = ctx.gen_x::<Rat>(1).poly;
        let y2 = ctx.gen_y::<Rat>(2).poly;
        let comm = {
            let mut p = env.mul(&x1, &y2);
            let q = env.mul(&y2, &x1);
            crate::lie::poly_add_assign(&mut p, &crate::lie::poly_neg(&q));
            env.reduce(&p)
        };
        let t = env.from_lie(&ctx.gen_t_sum::<Rat>(1, 2));
        assert_eq!(comm, t);
    }

    #[test]
    fn pbw_dimensions_from_lie_dimensions() {
        let (ctx, env) = env(2, 2, 1, 3);
        let mut lie_dims: std::collections::BTreeMap<usize, usize> = Default::default();
        for (&(p, q), _) in &ctx.data {
            *lie_dims.entry(p + q).or_default() += ctx.graded_dim(p, q).unwrap();
        }
        let mut env_dims: std::collections::BTreeMap<usize, usize> = Default::default();
        for (&(p, q), _) in &env.data {
            *env_dims.entry(p + q).or_default() += env.graded_dim(p, q).unwrap();
        }
        let (l1, l2, l3) = (lie_dims[&1], lie_dims[&2], lie_dims[&3]);
        assert_eq!(env_dims[&1], l1);
        assert_eq!(env_dims[&2], l2 + l1 * (l1 + 1) / 2);
        assert_eq!(
            env_dims[&3],
            l3 + l1 * l2 + l1 * (l1 + 1) * (l1 + 2) / 6
        );
    }

    #[test]
    fn marker_twisted_multiplication() {
        let (ctx, envc) = env(2, 2, 1, 3);
        let g = ctx.gamma;
        // (1, α₁)·(exp(t^0_12), 1) twists the t-index
        let m = MarkerElement::twist(2, &g, 0, g.element(1, 0));
        let a = GroupElement {
            env: envc.one(),
            marker: m,
        };
        let t0 = crate::lie::to_complex(&ctx.gen_t::<Rat>(1, 2, g.zero()));
        let b = GroupElement {
            env: envc.exp(&t0.poly).unwrap(),
            marker: MarkerElement::identity(2, &g),
        };
        let prod = a.mul(&b, &envc);
        let t1 = crate::lie::to_complex(&ctx.gen_t::<Rat>(1, 2, g.element(1, 0)));
        let expect = envc.exp(&t1.poly).unwrap();
        let mut d = prod.env.clone();
        crate::lie::poly_add_assign(&mut d, &crate::lie::poly_neg(&expect));
        assert!(envc.reduce(&d).values().all(|c| c.norm() < 1e-14));
        // product with own inverse is the identity
        let gi = prod.inverse(&envc).unwrap();
        let e = prod.mul(&gi, &envc);
        assert!(e.marker.is_identity());
        let mut one_diff = e.env.clone();
        crate::lie::poly_add_assign(&mut one_diff, &crate::lie::poly_neg(&envc.one()));
        assert!(envc.reduce(&one_diff).values().all(|c| c.norm() < 1e-13));
    }
}
