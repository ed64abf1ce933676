//! The twist group Γ = ℤ/M × ℤ/N, its elements, lifts to the rescaled
//! lattice Λ_{τ,Γ}, and group morphisms used by comparison maps.

use crate::scalar::C64;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Γ = ℤ/M × ℤ/N (additive).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct GammaGroup {
    pub m: u32,
    pub n: u32,
}

impl GammaGroup {
    pub fn new(m: u32, n: u32) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Validation("Γ requires M ≥ 1 and N ≥ 1".into()));
        }
        Ok(GammaGroup { m, n })
    }

    pub fn trivial() -> Self {
        GammaGroup { m: 1, n: 1 }
    }

    pub fn order(&self) -> usize {
        (self.m as usize) * (self.n as usize)
    }

    pub fn zero(&self) -> GammaElement {
        GammaElement { a: 0, b: 0 }
    }

    pub fn element(&self, a: i64, b: i64) -> GammaElement {
        GammaElement {
            a: a.rem_euclid(self.m as i64) as u32,
            b: b.rem_euclid(self.n as i64) as u32,
        }
    }

    /// All elements, in lexicographic order (stable across runs).
    pub fn elements(&self) -> Vec<GammaElement> {
        let mut out = Vec::with_capacity(self.order());
        for a in 0..self.m {
            for b in 0..self.n {
                out.push(GammaElement { a, b });
            }
        }
        out
    }

    pub fn add(&self, x: GammaElement, y: GammaElement) -> GammaElement {
        GammaElement {
            a: (x.a + y.a) % self.m,
            b: (x.b + y.b) % self.n,
        }
    }

    pub fn neg(&self, x: GammaElement) -> GammaElement {
        GammaElement {
            a: (self.m - x.a) % self.m,
            b: (self.n - x.b) % self.n,
        }
    }

    pub fn sub(&self, x: GammaElement, y: GammaElement) -> GammaElement {
        self.add(x, self.neg(y))
    }

    /// Canonical lift α̃ = a0 + a·τ with a0 = u/M ∈ [0,1), a = v/N ∈ [0,1).
    pub fn lift(&self, x: GammaElement) -> Lift {
        Lift {
            a0_num: x.a,
            a0_den: self.m,
            a_num: x.b,
            a_den: self.n,
        }
    }

    /// The index map induced by the modular generator T = (0 −1; 1 0):
    /// T(ā0, ā) = (−ā, ā0), valid as a map Γ → Γ only when M = N.
    pub fn t_action(&self, x: GammaElement) -> Result<GammaElement> {
        if self.m != self.n {
            return Err(Error::Domain(format!(
                "T-relabel needs M = N, got {}×{}",
                self.m, self.n
            )));
        }
        Ok(self.element(-(x.b as i64), x.a as i64))
    }

    /// Relabel induced by τ ↦ τ + b0 where b0 = N / gcd(M,N): the lift
    /// a0 + a(τ+b0) is again Λ_{τ,Γ}-canonical, with a0 shifted by a·b0.
    /// Returns (b0, map).
    pub fn s_power_action(&self) -> (u32, impl Fn(GammaElement) -> GammaElement + '_) {
        let g = gcd(self.m, self.n);
        let b0 = self.n / g;
        (b0, move |x: GammaElement| {
            // a0' = u/M + (v/N)·b0 = u/M + v/g = (u + v·M/g)/M
            let shift = (x.b as u64 * (self.m / g) as u64) % self.m as u64;
            GammaElement {
                a: ((x.a as u64 + shift) % self.m as u64) as u32,
                b: x.b,
            }
        })
    }
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// An element (ā, b̄) of Γ; residues stored reduced, 0 ≤ a < M, 0 ≤ b < N.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GammaElement {
    pub a: u32,
    pub b: u32,
}

impl GammaElement {
    pub fn is_zero(&self) -> bool {
        self.a == 0 && self.b == 0
    }
}

impl std::fmt::Display for GammaElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.a, self.b)
    }
}

/// A lift α̃ = a0 + a·τ ∈ Λ_{τ,Γ} = (1/M)ℤ + (τ/N)ℤ of a class α ∈ Γ,
/// stored as the exact pair (a0, a) = (a0_num/a0_den, a_num/a_den).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lift {
    pub a0_num: u32,
    pub a0_den: u32,
    pub a_num: u32,
    pub a_den: u32,
}

impl Lift {
    pub fn a0(&self) -> f64 {
        self.a0_num as f64 / self.a0_den as f64
    }

    pub fn a(&self) -> f64 {
        self.a_num as f64 / self.a_den as f64
    }

    /// Value of the lift at the modulus τ.
    pub fn value(&self, tau: C64) -> C64 {
        C64::new(self.a0(), 0.0) + tau * self.a()
    }

    /// Shift by integers: (a0 + p, a + q) is another lift of the same class.
    pub fn shifted(&self, p: i64, q: i64) -> ShiftedLift {
        ShiftedLift {
            base: *self,
            p,
            q,
        }
    }
}

/// A non-canonical lift (a0 + p) + (a + q)τ used by lift-independence tests.
#[derive(Clone, Copy, Debug)]
pub struct ShiftedLift {
    pub base: Lift,
    pub p: i64,
    pub q: i64,
}

impl ShiftedLift {
    pub fn a0(&self) -> f64 {
        self.base.a0() + self.p as f64
    }
    pub fn a(&self) -> f64 {
        self.base.a() + self.q as f64
    }
    pub fn value(&self, tau: C64) -> C64 {
        C64::new(self.a0(), 0.0) + tau * self.a()
    }
}

/// A group morphism ρ: Γ₁ → Γ₂, given by the images of the generators
/// (1̄,0̄) and (0̄,1̄).
#[derive(Clone, Copy, Debug)]
pub struct GammaMorphism {
    pub source: GammaGroup,
    pub target: GammaGroup,
    pub im_e1: GammaElement,
    pub im_e2: GammaElement,
}

impl GammaMorphism {
    pub fn new(
        source: GammaGroup,
        target: GammaGroup,
        im_e1: GammaElement,
        im_e2: GammaElement,
    ) -> Result<Self> {
        // well-definedness: M·im_e1 = 0 and N·im_e2 = 0 in the target
        let mul = |g: GammaElement, k: u32| -> GammaElement {
            target.element(g.a as i64 * k as i64, g.b as i64 * k as i64)
        };
        if !mul(im_e1, source.m).is_zero() || !mul(im_e2, source.n).is_zero() {
            return Err(Error::Validation(
                "generator images do not respect the orders of Γ₁".into(),
            ));
        }
        Ok(GammaMorphism {
            source,
            target,
            im_e1,
            im_e2,
        })
    }

    pub fn identity(g: GammaGroup) -> Self {
        GammaMorphism {
            source: g,
            target: g,
            im_e1: GammaElement { a: 1 % g.m, b: 0 },
            im_e2: GammaElement { a: 0, b: 1 % g.n },
        }
    }

    /// Inclusion of the trivial group.
    pub fn from_trivial(target: GammaGroup) -> Self {
        GammaMorphism {
            source: GammaGroup::trivial(),
            target,
            im_e1: GammaElement { a: 0, b: 0 },
            im_e2: GammaElement { a: 0, b: 0 },
        }
    }

    pub fn apply(&self, x: GammaElement) -> GammaElement {
        self.target.element(
            self.im_e1.a as i64 * x.a as i64 + self.im_e2.a as i64 * x.b as i64,
            self.im_e1.b as i64 * x.a as i64 + self.im_e2.b as i64 * x.b as i64,
        )
    }

    pub fn kernel_size(&self) -> usize {
        self.source
            .elements()
            .into_iter()
            .filter(|&x| self.apply(x).is_zero())
            .count()
    }

    pub fn image(&self) -> Vec<GammaElement> {
        let mut im: Vec<GammaElement> = self.source.elements().iter().map(|&x| self.apply(x)).collect();
        im.sort();
        im.dedup();
        im
    }

    /// Canonical set-theoretic section of coker(ρ) → Γ₂: the lexicographically
    /// smallest representative of each coset of im(ρ).
    pub fn coker_section(&self) -> Vec<GammaElement> {
        let im = self.image();
        let mut seen: std::collections::HashSet<GammaElement> = Default::default();
        let mut reps = Vec::new();
        for g in self.target.elements() {
            if seen.contains(&g) {
                continue;
            }
            reps.push(g);
            for &h in &im {
                seen.insert(self.target.add(g, h));
            }
        }
        reps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_arithmetic_is_componentwise_modular() {
        let g = GammaGroup::new(2, 3).unwrap();
        let x = g.element(1, 2);
        let y = g.element(1, 2);
        assert_eq!(g.add(x, y), g.element(0, 1));
        assert_eq!(g.neg(x), g.element(1, 1));
        assert_eq!(g.order(), 6);
    }

    #[test]
    fn canonical_lift_is_in_unit_box() {
        let g = GammaGroup::new(2, 3).unwrap();
        let l = g.lift(g.element(1, 2));
        assert_eq!((l.a0_num, l.a0_den), (1, 2));
        assert_eq!((l.a_num, l.a_den), (2, 3));
    }

    #[test]
    fn coker_section_covers_target() {
        let _ = GammaGroup::trivial();
        let g2 = GammaGroup::new(2, 2).unwrap();
        let rho = GammaMorphism::from_trivial(g2);
        let reps = rho.coker_section();
        assert_eq!(reps.len(), 4);
        assert_eq!(rho.kernel_size(), 1);
    }

    #[test]
    fn s_power_relabel_stays_canonical() {
        let g = GammaGroup::new(2, 2).unwrap();
        let (b0, f) = g.s_power_action();
        assert_eq!(b0, 1);
        assert_eq!(f(g.element(0, 1)), g.element(1, 1));
        let g2 = GammaGroup::new(1, 2).unwrap();
        let (b0, f) = g2.s_power_action();
        assert_eq!(b0, 2);
        assert_eq!(f(g2.element(0, 1)), g2.element(0, 1));
    }
}
