//! Invariant states: the predual kernel, the recurrent projection,
//! reduction by subharmonic projections, per-block invariant states, and
//! the product-form decomposition of arbitrary invariant states.

use crate::dfspaces::{cesaro_invariant_state, ergodic_projection};
use crate::error::{Error, Result};
use crate::gksl::{lindbladian, predual_lindbladian, GkslGenerator};
use crate::linalg::{
    frob, hermitian_eig, identity, nullspace, partial_trace, unvec, vec_mat, CMatrix, Tolerances,
    TraceSide, C64,
};
use crate::structure::{block_m_generator, AtomicDecomposition};

/// The recurrent projection `p_R` (smallest projection dominating every
/// invariant-state support) together with the Cesàro-limit state it is
/// read off from.
#[derive(Debug, Clone)]
pub struct RecurrentProjection {
    pub p_r: CMatrix,
    pub rho_bar: CMatrix,
    pub faithful_exists: bool,
}

/// Product-form decomposition of one invariant state: blockwise weights
/// and `σ_i ⊗ τ_i` factors, plus the residual of reassembling the state.
#[derive(Debug, Clone)]
pub struct InvariantStateStructure {
    pub p_r: CMatrix,
    pub faithful_exists: bool,
    pub blocks: Vec<InvariantBlock>,
    pub reconstruction_residual: f64,
}

#[derive(Debug, Clone)]
pub struct InvariantBlock {
    pub weight: f64,
    pub sigma: CMatrix,
    pub tau: CMatrix,
}

/// HS-orthonormal basis of `ker L_*` (not individually positive — the
/// kernel is spanned by differences of invariant states).
pub fn invariant_state_kernel(gen: &GkslGenerator, tol: &Tolerances) -> Vec<CMatrix> {
    let pre = predual_lindbladian(gen);
    nullspace(&pre.mat, tol)
        .iter()
        .map(|v| unvec(v, gen.dim, gen.dim))
        .collect()
}

/// Compute `rho_bar = lim T_{*t}(1/d)` and its support projection.
/// Maximality is verified against the whole predual kernel: nothing
/// invariant lives outside `p_R`.
pub fn recurrent_projection(gen: &GkslGenerator, tol: &Tolerances) -> Result<RecurrentProjection> {
    let erg = ergodic_projection(gen, tol)?;
    let rho_bar = cesaro_invariant_state(gen, &erg, tol)?;
    let (vals, vecs) = hermitian_eig(&rho_bar, tol)?;
    let d = gen.dim;
    let mut p_r = CMatrix::zeros(d, d);
    for i in 0..d {
        if vals[i] > tol.cluster_gap {
            let v = vecs.column(i);
            p_r += &v * v.adjoint();
        }
    }
    let comp = identity(d) - &p_r;
    for k in invariant_state_kernel(gen, tol) {
        let outside =
            (&comp * &k * &comp).norm() + (&comp * &k * &p_r).norm() + (&p_r * &k * &comp).norm();
        if outside > tol.residual {
            return Err(Error::structural(
                "recurrent_projection: invariant kernel element escapes p_R",
                outside,
            ));
        }
    }
    let faithful_exists = (&p_r - identity(d)).norm() <= tol.residual * (d as f64);
    Ok(RecurrentProjection {
        p_r,
        rho_bar,
        faithful_exists,
    })
}

/// Compress the generator to `range(p)` for a subharmonic projection `p`
/// (`T_t(p) ≥ p`, checked infinitesimally as `p L(p) p ⪰ 0`). Returns the
/// reduced generator and the `d × r` isometry embedding `range(p)`.
pub fn reduce(gen: &GkslGenerator, p: &CMatrix, tol: &Tolerances) -> Result<(GkslGenerator, CMatrix)> {
    let d = gen.dim;
    if p.nrows() != d || p.ncols() != d {
        return Err(Error::domain("reduce: projection size mismatch"));
    }
    if (p * p - p).norm() > tol.residual * (d as f64) || (p - p.adjoint()).norm() > tol.herm * (d as f64)
    {
        return Err(Error::domain("reduce: p is not an orthogonal projection"));
    }
    let (vals, vecs) = hermitian_eig(&((p + p.adjoint()).scale(0.5)), tol)?;
    let cols: Vec<usize> = (0..d).filter(|&i| vals[i] > 0.5).collect();
    let r = cols.len();
    if r == 0 {
        return Err(Error::domain("reduce: p is zero"));
    }
    let mut v = CMatrix::zeros(d, r);
    for (j, &i) in cols.iter().enumerate() {
        v.set_column(j, &vecs.column(i));
    }
    // subharmonicity: tr(σ L(p)) ≥ 0 for every state σ supported in p
    let lp = lindbladian(gen).apply(p);
    let compressed = v.adjoint() * &lp * &v;
    let (lvals, _) = hermitian_eig(&((&compressed + compressed.adjoint()).scale(0.5)), tol)?;
    if lvals[0] < -tol.residual {
        return Err(Error::domain(format!(
            "reduce: p is not subharmonic (min eigenvalue of pL(p)p = {:.3e})",
            lvals[0]
        )));
    }
    // chop round-off remnants relative to the original operator norms so
    // operators that vanish on the subspace compress to exact zeros
    let chop = |m: CMatrix, scale: f64| -> CMatrix {
        let cut = tol.herm * scale.max(1e-300);
        m.map(|x| if x.norm() <= cut { C64::default() } else { x })
    };
    let h = chop(v.adjoint() * &gen.h * &v, gen.h.norm());
    let ls = gen
        .ls
        .iter()
        .map(|l| chop(v.adjoint() * l * &v, l.norm()))
        .collect();
    Ok((GkslGenerator::new((&h + h.adjoint()).scale(0.5), ls, tol)?, v))
}

/// Unique faithful invariant state of the m-factor dynamics of one block.
/// Cross-checked against the reduced density `Tr_k(U p rho_bar p U*)`.
pub fn block_tau(
    decomp: &AtomicDecomposition,
    block_index: usize,
    rho_bar: &CMatrix,
    tol: &Tolerances,
) -> Result<CMatrix> {
    let block = &decomp.blocks[block_index];
    let mg = block_m_generator(block, tol)?;
    let kernel = invariant_state_kernel(&mg, tol);
    if kernel.len() != 1 {
        return Err(Error::structural(
            format!(
                "block_tau: block {} m-dynamics has invariant kernel of dimension {} (expected 1; decomposition inconsistent)",
                block_index,
                kernel.len()
            ),
            kernel.len() as f64,
        ));
    }
    let raw = &kernel[0];
    let herm = (raw + raw.adjoint()).scale(0.5);
    let tr = herm.trace();
    if tr.norm() <= tol.rank_rel {
        return Err(Error::structural("block_tau: traceless kernel element", tr.norm()));
    }
    let tau = herm.map(|x| x / tr);
    let (vals, _) = hermitian_eig(&tau, tol)?;
    if vals[0] <= tol.cluster_gap {
        return Err(Error::structural(
            format!("block_tau: block {} invariant state is not faithful", block_index),
            vals[0],
        ));
    }
    // consistency with the global invariant state
    let sub = &block.u_block * (&block.p * rho_bar * &block.p) * block.u_block.adjoint();
    let weight = sub.trace().re;
    if weight > tol.cluster_gap {
        // Tr_k of the normalized block must reproduce τ
        let via_rho = partial_trace(&sub, TraceSide::Left, (block.dim_k, block.dim_m))?
            .unscale(weight);
        let res = (&via_rho - &tau).norm();
        if res > tol.residual.max(1e-8) * 10.0 {
            return Err(Error::structural(
                format!("block_tau: block {} τ disagrees with the Cesàro state", block_index),
                res,
            ));
        }
    }
    Ok(tau)
}

/// Decompose an invariant state `η` as `Σ_i tr(η p_i) · σ_i ⊗ τ_i`,
/// verifying the vanishing of off-diagonal blocks, the commutation
/// `[σ_i, K_i] = 0`, and the reassembly residual.
pub fn analyze_invariant_state(
    gen: &GkslGenerator,
    decomp: &AtomicDecomposition,
    taus: &[CMatrix],
    rec: &RecurrentProjection,
    eta: &CMatrix,
    tol: &Tolerances,
) -> Result<InvariantStateStructure> {
    let d = gen.dim;
    let pre = predual_lindbladian(gen);
    let inv_res = (&pre.mat * vec_mat(eta)).norm();
    if inv_res > tol.residual * frob(&pre.mat).max(1.0) {
        return Err(Error::precondition(format!(
            "analyze_invariant_state: η is not invariant (residual {:.3e})",
            inv_res
        )));
    }
    if !rec.faithful_exists {
        return Err(Error::precondition(
            "analyze_invariant_state: no faithful invariant state; reduce by p_R first",
        ));
    }
    for (i, a) in decomp.blocks.iter().enumerate() {
        for (j, b) in decomp.blocks.iter().enumerate() {
            if i != j {
                let cross = (&a.p * eta * &b.p).norm();
                if cross > tol.residual {
                    return Err(Error::structural(
                        format!("analyze_invariant_state: η has an off-diagonal {}–{} block", i, j),
                        cross,
                    ));
                }
            }
        }
    }
    let mut blocks = Vec::with_capacity(decomp.blocks.len());
    let mut assembled = CMatrix::zeros(d, d);
    let mut offset = 0;
    for (i, block) in decomp.blocks.iter().enumerate() {
        let sz = block.dim_k * block.dim_m;
        let sub = &block.u_block * (&block.p * eta * &block.p) * block.u_block.adjoint();
        let weight = sub.trace().re;
        let sigma = if weight.abs() > tol.cluster_gap {
            partial_trace(&sub, TraceSide::Right, (block.dim_k, block.dim_m))?.unscale(weight)
        } else {
            identity(block.dim_k).unscale(block.dim_k as f64)
        };
        let comm = (&sigma * &block.k - &block.k * &sigma).norm();
        if comm > tol.residual * frob(&block.k).max(1.0) {
            return Err(Error::structural(
                format!("analyze_invariant_state: [σ, K] ≠ 0 on block {}", i),
                comm,
            ));
        }
        let product = crate::linalg::kron(&sigma, &taus[i]).map(|x| x * C64::new(weight, 0.0));
        assembled
            .view_mut((offset, offset), (sz, sz))
            .copy_from(&product);
        blocks.push(InvariantBlock {
            weight,
            sigma,
            tau: taus[i].clone(),
        });
        offset += sz;
    }
    let transformed = &decomp.u * eta * decomp.u.adjoint();
    let diff = &transformed - &assembled;
    let reconstruction_residual = diff.singular_values().iter().sum::<f64>();
    if reconstruction_residual > tol.residual * 10.0 {
        return Err(Error::structural(
            "analyze_invariant_state: η does not reassemble from its blocks",
            reconstruction_residual,
        ));
    }
    Ok(InvariantStateStructure {
        p_r: rec.p_r.clone(),
        faithful_exists: rec.faithful_exists,
        blocks,
        reconstruction_residual,
    })
}

/// Draw a positive invariant state: a random Hermitian kernel combination
/// shifted by enough `rho_bar` to clear the positivity threshold, then
/// normalized. Requires a faithful `rho_bar`.
pub fn sample_invariant_state(
    gen: &GkslGenerator,
    rec: &RecurrentProjection,
    rng: &mut impl rand::Rng,
    tol: &Tolerances,
) -> Result<CMatrix> {
    if !rec.faithful_exists {
        return Err(Error::precondition("sample_invariant_state: rho_bar is not faithful"));
    }
    let kernel = invariant_state_kernel(gen, tol);
    let mut x = CMatrix::zeros(gen.dim, gen.dim);
    for k in &kernel {
        let coeff = rng.gen::<f64>() - 0.5;
        x += k.scale(coeff);
    }
    let x = (&x + x.adjoint()).scale(0.5);
    let (xvals, _) = hermitian_eig(&x, tol)?;
    let (rvals, _) = hermitian_eig(&rec.rho_bar, tol)?;
    let lam = ((tol.cluster_gap - xvals[0]) / rvals[0]).max(0.0);
    let shifted = &x + rec.rho_bar.scale(lam);
    let tr = shifted.trace();
    Ok(shifted.map(|v| v / tr))
}

/// Irreducibility test: a one-dimensional invariant kernel whose state is
/// faithful. A positive verdict is cross-checked against the required
/// triviality of `N(T)` and `F(T)`.
pub fn is_irreducible(gen: &GkslGenerator, tol: &Tolerances) -> Result<bool> {
    let kernel = invariant_state_kernel(gen, tol);
    if kernel.len() != 1 {
        return Ok(false);
    }
    let herm = (&kernel[0] + kernel[0].adjoint()).scale(0.5);
    let tr = herm.trace();
    if tr.norm() <= tol.rank_rel {
        return Ok(false);
    }
    let rho = herm.map(|x| x / tr);
    let (vals, _) = hermitian_eig(&rho, tol)?;
    if vals[0] <= tol.cluster_gap {
        return Ok(false);
    }
    let nt = crate::dfspaces::decoherence_free_subalgebra(gen, tol)?;
    let ft = crate::dfspaces::fixed_point_space(gen, &nt, tol)?;
    if nt.len() != 1 || ft.basis.len() != 1 {
        return Err(Error::structural(
            "is_irreducible: irreducible semigroup with nontrivial N(T) or F(T)",
            nt.len().max(ft.basis.len()) as f64,
        ));
    }
    Ok(true)
}
