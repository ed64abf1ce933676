use kzb_core::realization::*;
use kzb_core::scalar::C64;
use kzb_core::theta::{QSeriesParams, Tau};

fn main() {
    let quad = EquivariantQuadruple::felder(1, 2, 2).unwrap();
    let params = QSeriesParams::default();
    let tau = Tau::new(C64::new(0.19, 1.13)).unwrap();
    let lambda = vec![C64::new(0.23, 0.04), C64::new(-0.11, 0.09)];
    let z12 = C64::new(0.21, 0.11);
    let z23 = C64::new(0.13, 0.19);
    let z13 = z12 + z23;
    // manual weighted version to find the ∂-term weight
    for w in [1.0, 2.0, 0.5, 4.0] {
        let r = check_cdybe_spectral_weighted(&quad, &lambda, z12, z13, z23, tau, &params, w);
        println!("∂-weight {}: residual {:?}", w, r.map(|x| x.max_abs));
    }
}
