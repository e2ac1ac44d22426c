//! Evolve observables and watch the convergence of `T_t(x)` towards the
//! decoherence-free part: when F(T) = N(T) and a faithful invariant
//! state exists, the distance to N(T) decays monotonically.

use qms::dfspaces::{check_ft_equals_nt_convergence, decoherence_free_subalgebra};
use qms::linalg::{cr, Tolerances};
use qms::models::{build_circulant, CirculantSpec, HMode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);
    let gen = build_circulant(
        &CirculantSpec {
            d: 4,
            n: 2,
            z1: cr(1.0),
            z2: cr(1.0),
            h_mode: HMode::Zero,
        },
        &tol,
    )
    .unwrap();
    let nt = decoherence_free_subalgebra(&gen, &tol).unwrap();
    println!("dim N(T) = {}", nt.len());

    let report = check_ft_equals_nt_convergence(&gen, 8.0, 16, &mut rng, &tol).unwrap();
    println!("{:>8}  {:>14}", "t", "distance to N(T)");
    for (t, d) in report.ts.iter().zip(report.distances.iter()) {
        println!("{t:>8.3}  {d:>14.6e}");
    }
    println!("terminal distance: {:.3e}", report.terminal);
}
