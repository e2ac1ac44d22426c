//! Decompose the decoherence-free subalgebra into type-I factor blocks
//! and print the extracted block operators (Hamiltonian factor K, noise
//! scalars/factors M).

use qms::dfspaces::decoherence_free_subalgebra;
use qms::linalg::{cr, hermitian_eig, Tolerances};
use qms::models::{build_circulant, circulant_tridiagonal_m0, CirculantSpec, HMode};
use qms::structure::{atomic_decomposition, extract_block_operators};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED);

    for with_m0 in [false, true] {
        let mut spec = CirculantSpec {
            d: 15,
            n: 10,
            z1: cr(1.0),
            z2: cr(1.0),
            h_mode: HMode::Zero,
        };
        if with_m0 {
            spec.h_mode = HMode::Factor {
                k_op: qms::linalg::CMatrix::zeros(spec.dim_k(), spec.dim_k()),
                m0: circulant_tridiagonal_m0(&spec),
            };
        }
        let gen = build_circulant(&spec, &tol).unwrap();
        let nt = decoherence_free_subalgebra(&gen, &tol).unwrap();
        let dec = atomic_decomposition(&nt, &mut rng, &tol).unwrap();
        let dec = extract_block_operators(&gen, dec, &tol).unwrap();
        println!(
            "circulant d=15 n=10 {}: {} block(s)",
            if with_m0 { "with tridiagonal M0" } else { "H = 0" },
            dec.blocks.len()
        );
        for (i, b) in dec.blocks.iter().enumerate() {
            let (kvals, _) = hermitian_eig(&b.k, &tol).unwrap();
            println!(
                "  block {i}: B(C^{}) ⊗ 1_{}, K spectrum {:?}, {} noise factor(s)",
                b.dim_k,
                b.dim_m,
                kvals.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>(),
                b.ms.len()
            );
        }
    }
}
