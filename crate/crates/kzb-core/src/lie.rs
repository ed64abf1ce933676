//! Free Lie and associative word machinery.
//!
//! Lie elements are kept as primitive elements of the free associative
//! algebra (sparse word polynomials); brackets are commutators there. The
//! Lyndon basis enters through dimension counts and through the triangular
//! change of basis used when coordinates are needed: the associative
//! expansion of the standard bracketing of a Lyndon word is that word plus
//! lexicographically larger terms.

use crate::gamma::{GammaElement, GammaGroup};
use crate::scalar::{Rat, C64};
use num_traits::{One, Zero};
use serde::Serialize;
use std::collections::BTreeMap;
use std::ops::{AddAssign, Mul, Neg, Sub};

/// Coefficient scalar for word polynomials.
pub trait Scalar:
    Clone
    + PartialEq
    + Zero
    + One
    + AddAssign
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<Output = Self>
    + std::fmt::Debug
{
    fn from_rat(r: &Rat) -> Self;
}

impl Scalar for Rat {
    fn from_rat(r: &Rat) -> Self {
        r.clone()
    }
}

impl Scalar for C64 {
    fn from_rat(r: &Rat) -> Self {
        crate::scalar::rat_to_c64(r)
    }
}

/// A generator of t^Γ_{1,n}. `T` is stored normalized with i < j; the
/// identification t^α_{ji} = t^{−α}_{ij} happens in the constructor.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize)]
pub enum Generator {
    X(u8),
    Y(u8),
    T { i: u8, j: u8, alpha: GammaElement },
}

impl Generator {
    pub fn x(i: u8) -> Self {
        Generator::X(i)
    }

    pub fn y(i: u8) -> Self {
        Generator::Y(i)
    }

    /// t^α_{ij}; indices are 1-based and may come in either order.
    pub fn t(i: u8, j: u8, alpha: GammaElement, gamma: &GammaGroup) -> Self {
        assert!(i != j, "t^α_ij needs i ≠ j");
        if i < j {
            Generator::T { i, j, alpha }
        } else {
            Generator::T {
                i: j,
                j: i,
                alpha: gamma.neg(alpha),
            }
        }
    }

    pub fn bidegree(&self) -> (usize, usize) {
        match self {
            Generator::X(_) => (1, 0),
            Generator::Y(_) => (0, 1),
            Generator::T { .. } => (1, 1),
        }
    }
}

impl std::fmt::Display for Generator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Generator::X(i) => write!(f, "x{}", i),
            Generator::Y(i) => write!(f, "y{}", i),
            Generator::T { i, j, alpha } => write!(f, "t{}{}^{}", i, j, alpha),
        }
    }
}

/// An ordered alphabet of letters with bidegrees; words are sequences of
/// letter indices.
#[derive(Clone, Debug)]
pub struct Alphabet {
    pub names: Vec<String>,
    pub bidegrees: Vec<(usize, usize)>,
}

impl Alphabet {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn word_bidegree(&self, w: &[u8]) -> (usize, usize) {
        w.iter().fold((0, 0), |(p, q), &l| {
            let (dp, dq) = self.bidegrees[l as usize];
            (p + dp, q + dq)
        })
    }

    /// All words of the exact bidegree (p,q), lexicographically ordered.
    pub fn words_of_bidegree(&self, p: usize, q: usize) -> Vec<Vec<u8>> {
        let mut out = Vec::new();
        let mut prefix = Vec::new();
        self.words_rec(p, q, &mut prefix, &mut out);
        out
    }

    fn words_rec(&self, p: usize, q: usize, prefix: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if p == 0 && q == 0 {
            out.push(prefix.clone());
            return;
        }
        for l in 0..self.len() {
            let (dp, dq) = self.bidegrees[l];
            if dp <= p && dq <= q && (dp, dq) != (0, 0) {
                prefix.push(l as u8);
                self.words_rec(p - dp, q - dq, prefix, out);
                prefix.pop();
            }
        }
    }

    /// Lyndon words of the exact bidegree (p,q), lexicographic order.
    pub fn lyndon_of_bidegree(&self, p: usize, q: usize) -> Vec<Vec<u8>> {
        self.words_of_bidegree(p, q)
            .into_iter()
            .filter(|w| is_lyndon(w))
            .collect()
    }
}

/// A word is Lyndon iff it is strictly smaller than all its proper rotations.
pub fn is_lyndon(w: &[u8]) -> bool {
    if w.is_empty() {
        return false;
    }
    for k in 1..w.len() {
        let rot: Vec<u8> = w[k..].iter().chain(w[..k].iter()).copied().collect();
        if rot.as_slice() <= w {
            return false;
        }
    }
    true
}

/// Standard factorization of a Lyndon word w = uv with v the longest proper
/// Lyndon suffix; the standard bracketing is [b(u), b(v)].
pub fn lyndon_factorize(w: &[u8]) -> (Vec<u8>, Vec<u8>) {
    assert!(w.len() >= 2);
    for k in 1..w.len() {
        if is_lyndon(&w[k..]) {
            return (w[..k].to_vec(), w[k..].to_vec());
        }
    }
    unreachable!("every Lyndon word of length ≥ 2 has a standard factorization");
}

/// Sparse word polynomial (element of the free associative algebra).
pub type Poly<T> = BTreeMap<Vec<u8>, T>;

pub fn poly_zero<T: Scalar>() -> Poly<T> {
    BTreeMap::new()
}

pub fn poly_add_assign<T: Scalar>(a: &mut Poly<T>, b: &Poly<T>) {
    for (w, c) in b {
        add_term(a, w.clone(), c.clone());
    }
}

pub fn poly_scale<T: Scalar>(a: &mut Poly<T>, s: &T) {
    for c in a.values_mut() {
        *c = c.clone() * s.clone();
    }
    a.retain(|_, c| !c.is_zero());
}

pub fn add_term<T: Scalar>(a: &mut Poly<T>, w: Vec<u8>, c: T) {
    if c.is_zero() {
        return;
    }
    let e = a.entry(w).or_insert_with(T::zero);
    *e += c;
    // drop exact zeros to keep supports small
    let dead = a.iter().filter(|(_, x)| x.is_zero()).map(|(w, _)| w.clone()).collect::<Vec<_>>();
    for w in dead {
        a.remove(&w);
    }
}

pub fn poly_mul<T: Scalar>(a: &Poly<T>, b: &Poly<T>) -> Poly<T> {
    let mut out = poly_zero();
    for (wa, ca) in a {
        for (wb, cb) in b {
            let mut w = wa.clone();
            w.extend_from_slice(wb);
            add_term(&mut out, w, ca.clone() * cb.clone());
        }
    }
    out
}

/// Commutator ab − ba.
pub fn poly_comm<T: Scalar>(a: &Poly<T>, b: &Poly<T>) -> Poly<T> {
    let mut out = poly_mul(a, b);
    let ba = poly_mul(b, a);
    for (w, c) in ba {
        add_term(&mut out, w, -c);
    }
    out
}

pub fn poly_neg<T: Scalar>(a: &Poly<T>) -> Poly<T> {
    a.iter().map(|(w, c)| (w.clone(), -c.clone())).collect()
}

pub fn letter<T: Scalar>(l: u8) -> Poly<T> {
    let mut p = poly_zero();
    p.insert(vec![l], T::one());
    p
}

/// Associative expansion of the standard bracketing of a Lyndon word.
pub fn lyndon_expansion<T: Scalar>(w: &[u8]) -> Poly<T> {
    if w.len() == 1 {
        return letter(w[0]);
    }
    let (u, v) = lyndon_factorize(w);
    poly_comm(&lyndon_expansion::<T>(&u), &lyndon_expansion::<T>(&v))
}

/// A Lie element over a fixed alphabet, stored as a primitive word
/// polynomial. The context (same n, Γ, letter order) is implicit in the
/// alphabet shared by all elements that interact.
#[derive(Clone, Debug, PartialEq)]
pub struct LieElement<T: Scalar> {
    pub poly: Poly<T>,
}

impl<T: Scalar> LieElement<T> {
    pub fn zero() -> Self {
        LieElement { poly: poly_zero() }
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_empty()
    }

    pub fn generator(idx: u8) -> Self {
        LieElement { poly: letter(idx) }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut p = self.poly.clone();
        poly_add_assign(&mut p, &other.poly);
        LieElement { poly: p }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut p = self.poly.clone();
        poly_add_assign(&mut p, &poly_neg(&other.poly));
        LieElement { poly: p }
    }

    pub fn scale(&self, s: &T) -> Self {
        let mut p = self.poly.clone();
        poly_scale(&mut p, s);
        LieElement { poly: p }
    }

    pub fn neg(&self) -> Self {
        LieElement {
            poly: poly_neg(&self.poly),
        }
    }

    /// Raw commutator (no reduction).
    pub fn comm(&self, other: &Self) -> Self {
        LieElement {
            poly: poly_comm(&self.poly, &other.poly),
        }
    }

    /// Split into bidegree-homogeneous parts.
    pub fn homogeneous_parts(&self, alphabet: &Alphabet) -> BTreeMap<(usize, usize), Poly<T>> {
        let mut out: BTreeMap<(usize, usize), Poly<T>> = BTreeMap::new();
        for (w, c) in &self.poly {
            let d = alphabet.word_bidegree(w);
            add_term(out.entry(d).or_default(), w.clone(), c.clone());
        }
        out
    }

    /// Largest coefficient magnitude (complex case), with witness word.
    pub fn max_abs(&self) -> f64
    where
        T: MaxAbs,
    {
        self.poly.values().map(|c| c.abs_f64()).fold(0.0, f64::max)
    }
}

pub trait MaxAbs {
    fn abs_f64(&self) -> f64;
}

impl MaxAbs for C64 {
    fn abs_f64(&self) -> f64 {
        self.norm()
    }
}

impl MaxAbs for Rat {
    fn abs_f64(&self) -> f64 {
        crate::scalar::rat_to_f64(self).abs()
    }
}

/// Map a Rat-element to a C64-element.
pub fn to_complex(e: &LieElement<Rat>) -> LieElement<C64> {
    LieElement {
        poly: e
            .poly
            .iter()
            .map(|(w, c)| (w.clone(), crate::scalar::rat_to_c64(c)))
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat_int;

    fn ab_alphabet() -> Alphabet {
        Alphabet {
            names: vec!["a".into(), "b".into()],
            bidegrees: vec![(1, 0), (0, 1)],
        }
    }

    #[test]
    fn lyndon_words_on_two_letters() {
        let a = ab_alphabet();
        // bidegree (1,1): words ab, ba; Lyndon: ab only
        let l = a.lyndon_of_bidegree(1, 1);
        assert_eq!(l, vec![vec![0, 1]]);
        // (2,1): aab only
        let l = a.lyndon_of_bidegree(2, 1);
        assert_eq!(l, vec![vec![0, 0, 1]]);
        // (2,2): aabb, abab(not lyndon: rotation equal), abb? no that's (1,2)
        let l = a.lyndon_of_bidegree(2, 2);
        assert_eq!(l, vec![vec![0, 0, 1, 1], vec![0, 1, 0, 1][..].to_vec()].into_iter().filter(|w| is_lyndon(w)).collect::<Vec<_>>());
        assert_eq!(l, vec![vec![0, 0, 1, 1]]);
    }

    #[test]
    fn lyndon_expansion_is_triangular() {
        // [a,[a,b]] expands to aab - 2aba + baa
        let e = lyndon_expansion::<Rat>(&[0, 0, 1]);
        assert_eq!(e.get(&vec![0, 0, 1][..].to_vec()), Some(&rat_int(1)));
        assert_eq!(e.get(&vec![0, 1, 0][..].to_vec()), Some(&rat_int(-2)));
        assert_eq!(e.get(&vec![1, 0, 0][..].to_vec()), Some(&rat_int(1)));
        // leading (lex-smallest) term is the word itself with coefficient 1
        let min = e.keys().next().unwrap();
        assert_eq!(min, &vec![0u8, 0, 1]);
    }

    #[test]
    fn jacobi_holds_in_word_algebra() {
        let a: LieElement<Rat> = LieElement::generator(0);
        let b: LieElement<Rat> = LieElement::generator(1);
        let c = a.comm(&b);
        let jac = a
            .comm(&b.comm(&c))
            .add(&b.comm(&c.comm(&a)))
            .add(&c.comm(&a.comm(&b)));
        assert!(jac.is_zero());
    }
}
