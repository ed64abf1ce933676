use kzb_core::realization::*;
use kzb_core::scalar::C64;
use kzb_core::theta::{QSeriesParams, Tau};

fn main() {
    let quad = EquivariantQuadruple::cartan(2).unwrap();
    let red = ReductionData::cartan(&quad).unwrap();
    let params = QSeriesParams::default();
    let tau = Tau::new(C64::new(0.19, 1.13)).unwrap();
    let lambda = vec![C64::new(0.31, 0.0), C64::new(-0.17, 0.0)];
    let z12 = C64::new(0.19, 0.15);
    let z23 = C64::new(0.12, 0.09);
    let z13 = z12 + z23;
    // try sign/scale variants of the r(λ)-term
    for (label, sgn) in [("r̃ = r|_h + r(λ)", 1.0), ("r̃ = r|_h − r(λ)", -1.0), ("r̃ = r|_h", 0.0)] {
        let res = red.check_cdybe_h_variant(&lambda, z12, z13, z23, tau, &params, 1e-6, sgn);
        println!("{}: {:?}", label, res.map(|r| r.max_abs));
    }
}
