//! Environment-induced decoherence: the conditional expectation onto the
//! decoherence-free subalgebra, the decaying complement `M_2`, a spectral
//! decay certificate, and the enumeration of decoherence-free
//! subsystems/subspaces.

use crate::dfspaces::decoherence_free_subalgebra;
use crate::error::{Error, Result};
use crate::gksl::{lindbladian, predual_lindbladian, GkslGenerator, Superoperator};
use crate::linalg::{
    eigenvalues, frob, identity, kron, matexp, partial_trace, unvec, vec_mat, CMatrix, CVector,
    Tolerances, TraceSide, C64,
};
use crate::states::{block_tau, recurrent_projection, RecurrentProjection};
use crate::structure::{atomic_decomposition, extract_block_operators, AtomicDecomposition};

/// Certificate for environment-induced decoherence: the splitting
/// `B = N(T) ⊕ M_2` with `M_2` decaying. When no faithful invariant state
/// exists (or there is no noise at all) the certificate is negative and
/// `reason` says why.
#[derive(Debug, Clone)]
pub struct EidCertificate {
    pub e: Option<Superoperator>,
    pub m2_dim: usize,
    pub m2_basis: Vec<CMatrix>,
    pub spectral_abscissa_m2: Option<f64>,
    pub eid_holds: bool,
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DfKind {
    Subsystem,
    Subspace,
}

/// One decoherence-free entry: every block supports a subsystem on its
/// `k` factor; one-dimensional `m` factors make it a genuine subspace
/// with scalar noise values `lambda`.
#[derive(Debug, Clone)]
pub struct DfEntry {
    pub block_index: usize,
    pub dim_k: usize,
    pub dim_m: usize,
    pub kind: DfKind,
    pub lambda: Vec<C64>,
}

#[derive(Debug, Clone)]
pub struct DfSubsystemReport {
    pub entries: Vec<DfEntry>,
    /// Maximal sets of ≥ 2 subspace blocks sharing the same scalar noise
    /// vector; their direct sum is again decoherence-free.
    pub merged_subspaces: Vec<Vec<usize>>,
    /// Scalar noise values with a nonzero imaginary part are flagged:
    /// grouping is applied to the complex values as-is.
    pub has_non_real_lambda: bool,
    /// Worst residual of the dynamical check
    /// `T_{*t}(|u⟩⟨u|) = e^{−itK}|u⟩⟨u|e^{itK}` across subspace groups.
    pub dynamical_residual: f64,
}

/// Conditional expectation onto `N(T)`: blockwise `τ`-weighted partial
/// trace `a ↦ Tr_m((1⊗τ_i)·a_ii) ⊗ 1_m`, pulled back through the
/// decomposition unitary.
pub fn conditional_expectation(
    gen: &GkslGenerator,
    decomp: &AtomicDecomposition,
    taus: &[CMatrix],
    tol: &Tolerances,
) -> Result<Superoperator> {
    let d = gen.dim;
    if taus.len() != decomp.blocks.len() {
        return Err(Error::precondition("conditional_expectation: one τ per block required"));
    }
    let _ = tol;
    let apply = |x: &CMatrix| -> Result<CMatrix> {
        let y = &decomp.u * x * decomp.u.adjoint();
        let mut z = CMatrix::zeros(d, d);
        let mut offset = 0;
        for (i, b) in decomp.blocks.iter().enumerate() {
            let sz = b.dim_k * b.dim_m;
            let yii: CMatrix = y.view((offset, offset), (sz, sz)).into();
            let weighted = kron(&identity(b.dim_k), &taus[i]) * yii;
            let w = partial_trace(&weighted, TraceSide::Right, (b.dim_k, b.dim_m))?;
            z.view_mut((offset, offset), (sz, sz))
                .copy_from(&kron(&w, &identity(b.dim_m)));
            offset += sz;
        }
        Ok(decomp.u.adjoint() * z * &decomp.u)
    };
    let mut mat = CMatrix::zeros(d * d, d * d);
    for col in 0..d * d {
        let basis = unvec(&CVector::from_fn(d * d, |i, _| if i == col { C64::new(1.0, 0.0) } else { C64::default() }), d, d);
        mat.set_column(col, &vec_mat(&apply(&basis)?));
    }
    Ok(Superoperator { dim: d, mat })
}

/// EID certificate from already-computed pipeline pieces.
pub fn eid_certificate_with(
    gen: &GkslGenerator,
    decomp: &AtomicDecomposition,
    taus: &[CMatrix],
    rec: &RecurrentProjection,
    tol: &Tolerances,
) -> Result<EidCertificate> {
    let d = gen.dim;
    if !rec.faithful_exists {
        return Ok(EidCertificate {
            e: None,
            m2_dim: 0,
            m2_basis: Vec::new(),
            spectral_abscissa_m2: None,
            eid_holds: false,
            reason: Some("no faithful invariant state (reduce by p_R and retry)".into()),
        });
    }
    let e = conditional_expectation(gen, decomp, taus, tol)?;
    let idsup = identity(d * d);
    let complement = &idsup - &e.mat;
    // orthonormal basis of range(1−E) = ker E
    let svd = complement.clone().svd(true, false);
    let u = svd.u.as_ref().unwrap();
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let mut m2_basis = Vec::new();
    let mut cols = Vec::new();
    for i in 0..svd.singular_values.len() {
        // 1−E is idempotent: genuine range directions have singular value
        // ≥ 1, so threshold against an absolute scale
        if svd.singular_values[i] > tol.rank_rel.sqrt() * smax.max(1.0) {
            cols.push(i);
            m2_basis.push(unvec(&u.column(i).into_owned(), d, d));
        }
    }
    let m2_dim = cols.len();
    if m2_dim == 0 {
        return Ok(EidCertificate {
            e: Some(e),
            m2_dim: 0,
            m2_basis,
            spectral_abscissa_m2: None,
            eid_holds: false,
            reason: Some("M_2 trivial: the dynamics has no decaying part".into()),
        });
    }
    let lmat = lindbladian(gen).mat;
    let mut b = CMatrix::zeros(d * d, m2_dim);
    for (j, &i) in cols.iter().enumerate() {
        b.set_column(j, &u.column(i).into_owned());
    }
    // invariance of the splitting under the dynamics
    let scale = frob(&lmat).max(1.0);
    let leak_into_nt = (&e.mat * &lmat * &b).norm();
    let leak_out_of_nt = (&complement * &lmat * &e.mat).norm();
    if leak_into_nt > tol.residual * scale || leak_out_of_nt > tol.residual * scale {
        return Err(Error::structural(
            "eid_certificate: the N(T) ⊕ M_2 splitting is not dynamics-invariant",
            leak_into_nt.max(leak_out_of_nt),
        ));
    }
    let compressed = b.adjoint() * &lmat * &b;
    let abscissa = eigenvalues(&compressed)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let eid_holds = abscissa <= -tol.decay_margin;
    Ok(EidCertificate {
        e: Some(e),
        m2_dim,
        m2_basis,
        spectral_abscissa_m2: Some(abscissa),
        eid_holds,
        reason: if eid_holds {
            None
        } else {
            Some(format!("spectral abscissa {:.3e} on M_2 is not strictly negative", abscissa))
        },
    })
}

/// Run the whole pipeline needed for the certificate from the generator
/// alone.
pub fn eid_certificate(
    gen: &GkslGenerator,
    rng: &mut impl rand::Rng,
    tol: &Tolerances,
) -> Result<EidCertificate> {
    let rec = recurrent_projection(gen, tol)?;
    if !rec.faithful_exists {
        return eid_certificate_with(
            gen,
            &AtomicDecomposition {
                blocks: Vec::new(),
                u: identity(gen.dim),
            },
            &[],
            &rec,
            tol,
        );
    }
    let nt = decoherence_free_subalgebra(gen, tol)?;
    let dec = atomic_decomposition(&nt, rng, tol)?;
    let dec = extract_block_operators(gen, dec, tol)?;
    let taus: Vec<CMatrix> = (0..dec.blocks.len())
        .map(|i| block_tau(&dec, i, &rec.rho_bar, tol))
        .collect::<Result<_>>()?;
    eid_certificate_with(gen, &dec, &taus, &rec, tol)
}

fn lambda_distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Enumerate decoherence-free subsystems (one per block) and subspaces
/// (blocks with a trivial `m` factor), group subspaces with matching
/// scalar noise vectors, and verify the unitary evolution of a random
/// vector state in each subspace group.
pub fn df_subsystems(
    gen: &GkslGenerator,
    decomp: &AtomicDecomposition,
    rng: &mut impl rand::Rng,
    tol: &Tolerances,
) -> Result<DfSubsystemReport> {
    let d = gen.dim;
    let mut entries = Vec::with_capacity(decomp.blocks.len());
    for (i, b) in decomp.blocks.iter().enumerate() {
        if b.m0.nrows() != b.dim_m {
            return Err(Error::precondition("df_subsystems: block operators not extracted"));
        }
        let (kind, lambda) = if b.dim_m == 1 {
            (DfKind::Subspace, b.ms.iter().map(|m| m[(0, 0)]).collect())
        } else {
            (DfKind::Subsystem, Vec::new())
        };
        entries.push(DfEntry {
            block_index: i,
            dim_k: b.dim_k,
            dim_m: b.dim_m,
            kind,
            lambda,
        });
    }
    let has_non_real_lambda = entries
        .iter()
        .flat_map(|e| e.lambda.iter())
        .any(|l| l.im.abs() > tol.residual);

    // group subspace blocks by λ-vector
    let subspace_ids: Vec<usize> = entries
        .iter()
        .filter(|e| e.kind == DfKind::Subspace)
        .map(|e| e.block_index)
        .collect();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for &i in &subspace_ids {
        let li = &entries[i].lambda;
        match groups
            .iter_mut()
            .find(|g| lambda_distance(&entries[g[0]].lambda, li) <= tol.residual)
        {
            Some(g) => g.push(i),
            None => groups.push(vec![i]),
        }
    }

    // dynamical check per group: a vector state in ⊕ k_j evolves by
    // conjugation with e^{itK}
    let t = 0.7;
    let pre = predual_lindbladian(gen);
    let prop = matexp(&pre.mat, t)?;
    let mut dynamical_residual = 0.0_f64;
    for g in &groups {
        // random unit vector in the merged subspace (transformed coords)
        let mut u_vec = CVector::zeros(d);
        let mut k_big = CMatrix::zeros(d, d);
        for &i in g {
            let b = &decomp.blocks[i];
            let off = decomp.offset(i);
            for r in 0..b.dim_k {
                u_vec[off + r] = C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
            k_big
                .view_mut((off, off), (b.dim_k, b.dim_k))
                .copy_from(&b.k);
        }
        let norm = u_vec.norm();
        if norm == 0.0 {
            continue;
        }
        u_vec = u_vec.unscale(norm);
        let proj = &u_vec * u_vec.adjoint();
        let rho0 = decomp.u.adjoint() * &proj * &decomp.u;
        let evolved = unvec(&(&prop * vec_mat(&rho0)), d, d);
        let phase = matexp(&k_big.map(|x| x * C64::new(0.0, -1.0)), t)?;
        let expected = decomp.u.adjoint() * (&phase * &proj * phase.adjoint()) * &decomp.u;
        dynamical_residual = dynamical_residual.max((evolved - expected).norm());
    }
    if dynamical_residual > tol.residual {
        return Err(Error::structural(
            "df_subsystems: subspace state did not evolve unitarily",
            dynamical_residual,
        ));
    }
    let merged_subspaces = groups.into_iter().filter(|g| g.len() >= 2).collect();
    Ok(DfSubsystemReport {
        entries,
        merged_subspaces,
        has_non_real_lambda,
        dynamical_residual,
    })
}
