//! Certify environment-induced decoherence: the splitting
//! `B = N(T) ⊕ M_2` with the complement decaying at a strictly negative
//! spectral abscissa.

use qms::decoherence::eid_certificate;
use qms::gksl::GkslGenerator;
use qms::linalg::{cr, CMatrix, Tolerances};
use qms::models::{build_circulant, CirculantSpec, HMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);

    let spec = CirculantSpec {
        d: 4,
        n: 2,
        z1: cr(1.0),
        z2: cr(1.0),
        h_mode: HMode::Zero,
    };
    let gen = build_circulant(&spec, &tol).unwrap();
    let cert = eid_certificate(&gen, &mut rng, &tol).unwrap();
    println!(
        "circulant d=4 n=2: decoherence holds: {}, dim M_2 = {}, abscissa = {:?}",
        cert.eid_holds, cert.m2_dim, cert.spectral_abscissa_m2
    );

    // no faithful invariant state: the certificate is negative with a reason
    let mut h = CMatrix::zeros(3, 3);
    h[(2, 2)] = cr(1.0);
    let mut l = CMatrix::zeros(3, 3);
    l[(0, 2)] = cr(1.0);
    let gen = GkslGenerator::new(h, vec![l], &tol).unwrap();
    let cert = eid_certificate(&gen, &mut rng, &tol).unwrap();
    println!(
        "three-level: decoherence holds: {}, reason: {}",
        cert.eid_holds,
        cert.reason.as_deref().unwrap_or("-")
    );
}
