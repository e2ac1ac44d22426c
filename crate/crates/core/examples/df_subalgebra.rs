//! Compute the decoherence-free subalgebra N(T) and the fixed-point
//! space F(T) of a generator, including a case where F(T) fails to be an
//! algebra.

use qms::dfspaces::{decoherence_free_subalgebra, fixed_point_space};
use qms::gksl::GkslGenerator;
use qms::linalg::{cr, CMatrix, Tolerances};
use qms::models::{build_circulant, CirculantSpec, HMode};

fn main() {
    let tol = Tolerances::default();

    // cyclic-shift noise: N(T) is the commutant of the shift powers
    let spec = CirculantSpec {
        d: 6,
        n: 4,
        z1: cr(1.0),
        z2: cr(1.0),
        h_mode: HMode::Zero,
    };
    let gen = build_circulant(&spec, &tol).unwrap();
    let nt = decoherence_free_subalgebra(&gen, &tol).unwrap();
    let ft = fixed_point_space(&gen, &nt, &tol).unwrap();
    println!(
        "circulant d={} n={}: dim N(T) = {}, dim F(T) = {}, F(T) algebra: {}",
        spec.d,
        spec.n,
        nt.len(),
        ft.basis.len(),
        ft.is_algebra
    );

    // three-level system where the fixed points do NOT form an algebra
    let mut h = CMatrix::zeros(3, 3);
    h[(2, 2)] = cr(1.0);
    let mut l = CMatrix::zeros(3, 3);
    l[(0, 2)] = cr(1.0);
    let gen = GkslGenerator::new(h, vec![l], &tol).unwrap();
    let nt = decoherence_free_subalgebra(&gen, &tol).unwrap();
    let ft = fixed_point_space(&gen, &nt, &tol).unwrap();
    println!(
        "three-level: dim N(T) = {}, dim F(T) = {}, F(T) algebra: {}, F(T) ⊆ N(T): {}",
        nt.len(),
        ft.basis.len(),
        ft.is_algebra,
        ft.contained_in_nt
    );
}
