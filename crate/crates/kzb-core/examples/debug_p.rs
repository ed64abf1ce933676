use kzb_core::connection::Connection;
use kzb_core::envelope::EnvelopeContext;
use kzb_core::gamma::GammaGroup;
use kzb_core::monodromy::*;
use kzb_core::presentation::PresentationContext;
use kzb_core::scalar::C64;
use kzb_core::theta::Tau;

fn main() {
    let gamma = GammaGroup::new(2, 2).unwrap();
    let ctx = PresentationContext::build(2, gamma, 3, false, None).unwrap();
    let env = EnvelopeContext::build(&ctx, 3, None).unwrap();
    let conn = Connection::new(&ctx);
    let tau = Tau::new(C64::new(0.12, 1.21)).unwrap();
    let paths = GeneratorPaths::new(2, gamma, tau);
    for (p, q) in [(0i64, 0i64), (1, 0), (0, 1)] {
        let path = if (p, q) == (0, 0) { paths.p_ij(1, 2) } else { paths.p_ij_alpha(1, 2, p, q) };
        println!("P^({},{}) margin {:.4}", p, q, path.validity_margin(&gamma, tau, 200));
        match Transport::new(&conn, &env).monodromy(&path, tau) {
            Ok(mu) => {
                let log = mu.log(&env).unwrap();
                for (w, c) in &log {
                    let (dp, dq) = ctx.alphabet.word_bidegree(w);
                    if dp + dq <= 2 && c.norm() > 1e-6 {
                        println!("  {}: {:.4}+{:.4}i  (|2πi-normalized| {:.4})", ctx.word_name(w), c.re, c.im, c.norm() / std::f64::consts::TAU);
                    }
                }
            }
            Err(e) => println!("  transport error: {}", e),
        }
    }
}
