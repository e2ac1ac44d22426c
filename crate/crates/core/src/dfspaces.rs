//! The decoherence-free subalgebra `N(T)`, the fixed-point space `F(T)`,
//! and the mean-ergodic projection of a quantum Markov semigroup.

use crate::algebra::{commutant, iterated_commutators, StarAlgebra};
use crate::error::{Error, Result};
use crate::gksl::{lindbladian, GkslGenerator, Superoperator};
use crate::linalg::{
    eigenvalues, frob, hermitian_eig, identity, matexp, nullspace, span_projector, span_residual,
    unvec, vec_mat, CMatrix, Tolerances,
};

/// The space of fixed points `F(T) = {x : T_t(x) = x}`, i.e. `ker L`.
/// It is an operator system (unital, *-closed) but an algebra only when
/// it is contained in `N(T)`.
#[derive(Debug, Clone)]
pub struct FixedPointSpace {
    pub basis: Vec<CMatrix>,
    pub is_algebra: bool,
    pub contained_in_nt: bool,
}

/// Largest subalgebra on which the semigroup acts as *-automorphisms:
/// the commutant of all iterated commutators `δ_H^n(L_ℓ)`, `δ_H^n(L_ℓ*)`.
pub fn decoherence_free_subalgebra(gen: &GkslGenerator, tol: &Tolerances) -> Result<StarAlgebra> {
    let gens = iterated_commutators(gen, tol);
    commutant(&gens, gen.dim, tol)
}

/// Fixed-point space as the kernel of the Heisenberg Lindbladian, with
/// its algebra status cross-checked against containment in `N(T)`: the
/// two tests must agree, otherwise the result is numerically inconsistent.
pub fn fixed_point_space(
    gen: &GkslGenerator,
    nt: &StarAlgebra,
    tol: &Tolerances,
) -> Result<FixedPointSpace> {
    let sup = lindbladian(gen);
    let vecs = nullspace(&sup.mat, tol);
    let basis: Vec<CMatrix> = vecs.iter().map(|v| unvec(v, gen.dim, gen.dim)).collect();

    let mut is_algebra = true;
    'outer: for a in &basis {
        for b in &basis {
            let prod = a * b;
            if span_residual(&basis, &prod) > tol.residual * frob(&prod).max(1.0) {
                is_algebra = false;
                break 'outer;
            }
        }
    }
    let contained_in_nt = basis
        .iter()
        .all(|b| span_residual(&nt.basis, b) <= tol.residual);
    if is_algebra != contained_in_nt {
        return Err(Error::structural(
            "fixed_point_space: multiplicative closure and containment in N(T) disagree",
            f64::NAN,
        ));
    }
    Ok(FixedPointSpace {
        basis,
        is_algebra,
        contained_in_nt,
    })
}

/// Spectral projection of the Lindbladian onto the eigenvalue 0 — the
/// Cesàro mean `lim (1/t)∫ T_s ds`. Computed from the right and left
/// kernels `V`, `W` as `E = V (W*V)^{-1} W*`; a singular pairing matrix
/// means the zero eigenvalue carries a nontrivial Jordan block, which is
/// reported instead of silently mangled. The eigenvalue count of the
/// Lindbladian near zero is cross-checked against the kernel dimension.
pub fn ergodic_projection(gen: &GkslGenerator, tol: &Tolerances) -> Result<Superoperator> {
    let sup = lindbladian(gen);
    let scale = frob(&sup.mat).max(1.0);
    let right = nullspace(&sup.mat, tol);
    let left = nullspace(&sup.mat.adjoint(), tol);
    let r = right.len();
    if left.len() != r {
        return Err(Error::numerical(format!(
            "ergodic_projection: left/right kernel dimensions differ ({} vs {})",
            left.len(),
            r
        )));
    }
    let d2 = gen.dim * gen.dim;
    let mut v = CMatrix::zeros(d2, r);
    let mut w = CMatrix::zeros(d2, r);
    for i in 0..r {
        v.set_column(i, &right[i]);
        w.set_column(i, &left[i]);
    }
    let pairing = w.adjoint() * &v;
    let svals = pairing.clone().singular_values();
    let smin = svals.iter().cloned().fold(f64::INFINITY, f64::min);
    let smax = svals.iter().cloned().fold(0.0_f64, f64::max);
    if r > 0 && smin <= tol.rank_rel.sqrt() * smax.max(1.0) {
        return Err(Error::numerical(
            "ergodic_projection: zero eigenvalue is defective (Jordan block at 0)",
        ));
    }
    // algebraic multiplicity must match the kernel dimension
    let evs = eigenvalues(&sup.mat)?;
    let alg_mult = evs
        .iter()
        .filter(|l| l.norm() <= tol.cluster_gap * scale)
        .count();
    if alg_mult != r {
        return Err(Error::numerical(format!(
            "ergodic_projection: zero eigenvalue is defective (algebraic multiplicity {} vs kernel dimension {})",
            alg_mult, r
        )));
    }
    let mat = if r == 0 {
        CMatrix::zeros(d2, d2)
    } else {
        let inv = pairing
            .lu()
            .solve(&w.adjoint())
            .ok_or_else(|| Error::numerical("ergodic_projection: pairing solve failed"))?;
        &v * inv
    };
    Ok(Superoperator { dim: gen.dim, mat })
}

/// Cesàro-limit state `lim T_{*t}(1/d)`: the predual spectral projection
/// at zero (the adjoint of [`ergodic_projection`]) applied to the
/// maximally mixed state, Hermitized and trace-normalized.
pub fn cesaro_invariant_state(
    gen: &GkslGenerator,
    ergodic: &Superoperator,
    tol: &Tolerances,
) -> Result<CMatrix> {
    let d = gen.dim;
    let mixed = identity(d).unscale(d as f64);
    let raw = unvec(&(ergodic.mat.adjoint() * vec_mat(&mixed)), d, d);
    let herm = (&raw + raw.adjoint()).scale(0.5);
    let tr = herm.trace();
    if tr.norm() <= tol.rank_rel {
        return Err(Error::numerical("cesaro_invariant_state: trace collapsed"));
    }
    let rho = herm.map(|x| x / tr);
    let (vals, _) = hermitian_eig(&rho, tol)?;
    if vals[0] < -tol.residual {
        return Err(Error::numerical(format!(
            "cesaro_invariant_state: negative eigenvalue {:.3e}",
            vals[0]
        )));
    }
    Ok(rho)
}

/// Decay curve of `‖T_t(x) − E(x)‖_F` for a random observable, valid only
/// in the uniformly-convergent regime `F(T) = N(T)` with a faithful
/// invariant state; refuses (naming the failed precondition) otherwise.
#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub ts: Vec<f64>,
    pub distances: Vec<f64>,
    pub terminal: f64,
}

pub fn check_ft_equals_nt_convergence(
    gen: &GkslGenerator,
    t_max: f64,
    samples: usize,
    rng: &mut impl rand::Rng,
    tol: &Tolerances,
) -> Result<ConvergenceReport> {
    if t_max <= 0.0 || samples < 2 {
        return Err(Error::domain("convergence check: need t_max > 0 and ≥ 2 samples"));
    }
    let nt = decoherence_free_subalgebra(gen, tol)?;
    let ft = fixed_point_space(gen, &nt, tol)?;
    let p_ft = span_projector(&ft.basis, gen.dim);
    let p_nt = nt.projector();
    if (p_ft - p_nt).norm() > tol.residual * (gen.dim as f64) {
        return Err(Error::precondition("convergence check: F(T) ≠ N(T)"));
    }
    let ergodic = ergodic_projection(gen, tol)?;
    let rho = cesaro_invariant_state(gen, &ergodic, tol)?;
    let (vals, _) = hermitian_eig(&rho, tol)?;
    if vals[0] <= tol.cluster_gap {
        return Err(Error::precondition(
            "convergence check: no faithful invariant state",
        ));
    }

    let d = gen.dim;
    let x = {
        let a = CMatrix::from_fn(d, d, |_, _| {
            crate::linalg::c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        (&a + a.adjoint()).scale(0.5)
    };
    let ex = ergodic.apply(&x);

    let sup = lindbladian(gen);
    let dt = t_max / (samples - 1) as f64;
    let step = matexp(&sup.mat, dt)?;
    let mut cur = vec_mat(&x);
    let mut ts = Vec::with_capacity(samples);
    let mut distances = Vec::with_capacity(samples);
    for i in 0..samples {
        let xt = unvec(&cur, d, d);
        ts.push(i as f64 * dt);
        distances.push(frob(&(&xt - &ex)));
        cur = &step * cur;
    }
    // monotone decay past a burn-in window
    let burn = samples / 4;
    for i in burn + 1..samples {
        if distances[i] > distances[i - 1] + tol.residual {
            return Err(Error::structural(
                "convergence check: distance increased past burn-in",
                distances[i] - distances[i - 1],
            ));
        }
    }
    let terminal = *distances.last().unwrap();
    Ok(ConvergenceReport {
        ts,
        distances,
        terminal,
    })
}
