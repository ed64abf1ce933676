use kzb_core::connection::*;
use kzb_core::derivations::{apply_sl2, apply_xi, make_delta, reduce_within_cap_c, Sl2};
use kzb_core::gamma::GammaGroup;
use kzb_core::lie::LieElement;
use kzb_core::presentation::PresentationContext;
use kzb_core::scalar::{C64, TWO_PI};
use kzb_core::theta::{eisenstein_coeffs, Tau};

fn maxres(ctx: &PresentationContext, e: &LieElement<C64>) -> f64 {
    let r = reduce_within_cap_c(ctx, e).unwrap();
    r.poly.values().map(|c| c.norm()).fold(0.0, f64::max)
}

fn main() {
    let gamma = GammaGroup::new(3, 1).unwrap();
    let ctx = PresentationContext::build(2, gamma, 4, false, None).unwrap();
    let conn = Connection::new(&ctx);
    let tau = Tau::new(C64::new(0.23, 1.07)).unwrap();
    let cfg = base_config(2, gamma, tau);

    let k2 = conn.k_i(2, &cfg).unwrap();
    let c = -C64::new(1.0, 0.0) / (C64::i() * TWO_PI);
    let p1 = apply_sl2(&ctx, Sl2::Delta0, &k2).scale(&c);
    let gsum = conn.g_ij(1, 2, cfg.zij(1, 2), tau).unwrap();
    let p3 = gsum.scale(&c).neg().comm(&k2);
    let base = p1.add(&p3);

    for (label, gflip, sgn) in [
        ("A_{s,γ} = φ̃_γ coeffs, +", false, 1.0),
        ("A_{s,γ} = φ̃_γ coeffs, −", false, -1.0),
        ("A_{s,γ} = φ̃_{−γ} coeffs, +", true, 1.0),
        ("A_{s,γ} = φ̃_{−γ} coeffs, −", true, -1.0),
    ] {
        let mut p2: LieElement<C64> = LieElement::zero();
        for g in gamma.elements() {
            let idx = if gflip { gamma.neg(g) } else { g };
            let coeffs = eisenstein_coeffs(idx, &gamma, tau, 4, &conn.params).unwrap();
            for s in 0..=4usize {
                let a = coeffs.coeff(s);
                if a.norm() == 0.0 { continue; }
                let datum = make_delta(s, g, gamma);
                p2 = p2.add(&apply_xi(&ctx, &datum, &k2).scale(&(c * 0.5 * a * sgn)));
            }
        }
        println!("{}: total residual {:.3e}", label, maxres(&ctx, &base.add(&p2)));
    }
}
