use kzb_core::connection::*;
use kzb_core::derivations::{apply_sl2, apply_xi, make_delta, reduce_within_cap_c, Sl2};
use kzb_core::gamma::GammaGroup;
use kzb_core::lie::LieElement;
use kzb_core::presentation::PresentationContext;
use kzb_core::scalar::{C64, TWO_PI};
use kzb_core::theta::{eisenstein_coeffs, Tau};

fn show(ctx: &PresentationContext, label: &str, e: &LieElement<C64>) {
    let r = reduce_within_cap_c(ctx, e).unwrap();
    let parts = r.homogeneous_parts(&ctx.alphabet);
    for (bd, p) in parts {
        let mx = p.values().map(|c| c.norm()).fold(0.0, f64::max);
        println!("  {} at {:?}: max {:.3e}", label, bd, mx);
    }
}

fn main() {
    let gamma = GammaGroup::new(2, 1).unwrap();
    let ctx = PresentationContext::build(2, gamma, 4, false, None).unwrap();
    let conn = Connection::new(&ctx);
    let tau = Tau::new(C64::new(0.23, 1.07)).unwrap();
    let cfg = base_config(2, gamma, tau);

    let k2 = conn.k_i(2, &cfg).unwrap();
    // bracket pieces: Δ = −(1/2πi)(Δ₀ + ½ΣAδ − Σg)
    let c = -C64::new(1.0, 0.0) / (C64::i() * TWO_PI);
    // Δ₀ part
    let p1 = apply_sl2(&ctx, Sl2::Delta0, &k2).scale(&c);
    show(&ctx, "[Δ0,K2]", &p1);
    // δ part
    let mut p2: LieElement<C64> = LieElement::zero();
    for g in gamma.elements() {
        let coeffs = eisenstein_coeffs(g, &gamma, tau, 4, &conn.params).unwrap();
        for s in 0..=4usize {
            let a = coeffs.coeff(s);
            if a.norm() == 0.0 { continue; }
            let datum = make_delta(s, g, gamma);
            p2 = p2.add(&apply_xi(&ctx, &datum, &k2).scale(&(c * 0.5 * a)));
        }
    }
    show(&ctx, "[delta-part,K2]", &p2);
    // g part
    let gsum = conn.g_ij(1, 2, cfg.zij(1, 2), tau).unwrap();
    let p3 = gsum.scale(&c).neg().comm(&k2);
    show(&ctx, "[g-part,K2]", &p3);
    let total = p1.add(&p2).add(&p3);
    show(&ctx, "TOTAL", &total);

    // also check the delta() value path gives the same
    let delta = conn.delta(&cfg).unwrap();
    let br = delta.bracket_with(&ctx, &k2).unwrap();
    show(&ctx, "delta.bracket_with", &br);
}
