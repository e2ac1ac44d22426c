//! Split the dynamics into commuting decoherence-free and
//! decoherence-affected semigroups and verify the factorization
//! `U T_t(x) U* = (T^df_t ∘ T^da_t)(U x U*)` on random inputs.

use qms::dfspaces::decoherence_free_subalgebra;
use qms::gksl::lindbladian;
use qms::linalg::{c, cr, matexp, unvec, vec_mat, CMatrix, Tolerances};
use qms::models::{build_circulant, CirculantSpec, HMode};
use qms::structure::{
    atomic_decomposition, build_df_da, conjugation_superoperator, extract_block_operators,
};
use rand::{Rng, SeedableRng};
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
    let d = gen.dim;

    let nt = decoherence_free_subalgebra(&gen, &tol).unwrap();
    let dec = atomic_decomposition(&nt, &mut rng, &tol).unwrap();
    let dec = extract_block_operators(&gen, dec, &tol).unwrap();
    let (l_df, l_da) = build_df_da(&gen, &dec, &tol).unwrap();
    let comm = (&l_df.mat * &l_da.mat - &l_da.mat * &l_df.mat).norm();
    println!("[L_df, L_da] commutator norm: {comm:.3e}");

    let s_u = conjugation_superoperator(&dec.u);
    let transformed = &s_u * lindbladian(&gen).mat * s_u.adjoint();
    for &t in &[0.3, 1.0] {
        let whole = matexp(&transformed, t).unwrap();
        let split = matexp(&l_df.mat, t).unwrap() * matexp(&l_da.mat, t).unwrap();
        let mut worst = 0.0_f64;
        for _ in 0..10 {
            let x = CMatrix::from_fn(d, d, |_, _| c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
            let y = &dec.u * &x * dec.u.adjoint();
            let res = (unvec(&(&whole * vec_mat(&y)), d, d) - unvec(&(&split * vec_mat(&y)), d, d)).norm();
            worst = worst.max(res);
        }
        println!("t = {t}: worst factorization residual over 10 random x: {worst:.3e}");
    }
}
