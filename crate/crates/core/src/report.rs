//! End-to-end analysis pipeline and the JSON wire format used by the
//! command-line front end.
//!
//! Complex numbers serialize as two-element arrays `[re, im]`; matrices
//! as row-major nested arrays. Reports are deterministic: the same
//! problem file and seed produce byte-identical JSON.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::decoherence::{df_subsystems, eid_certificate_with, DfKind};
use crate::dfspaces::{decoherence_free_subalgebra, fixed_point_space};
use crate::error::{Error, Result};
use crate::gksl::{lindbladian, predual_lindbladian, GkslGenerator};
use crate::linalg::{
    commutator, hermitian_eig, matexp, vec_mat, CMatrix, Tolerances, C64,
};
use crate::states::{
    analyze_invariant_state, block_tau, recurrent_projection, reduce, sample_invariant_state,
};
use crate::structure::{
    atomic_decomposition, build_df_da, conjugation_superoperator, extract_block_operators,
};

pub const DEFAULT_SEED: u64 = 0x5EED;

/// Row-major matrix of `[re, im]` pairs.
pub type WireMatrix = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_wire(m: &CMatrix) -> WireMatrix {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect())
        .collect()
}

pub fn wire_to_matrix(w: &WireMatrix, rows: usize, cols: usize) -> Result<CMatrix> {
    if w.len() != rows || w.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse(format!("expected a {rows}×{cols} matrix")));
    }
    Ok(CMatrix::from_fn(rows, cols, |r, c| C64::new(w[r][c][0], w[r][c][1])))
}

/// Partial tolerance overrides carried in the problem file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ToleranceOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub herm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_margin: Option<f64>,
}

impl ToleranceOverrides {
    pub fn apply(&self, base: &Tolerances) -> Tolerances {
        Tolerances {
            rank_rel: self.rank_rel.unwrap_or(base.rank_rel),
            cluster_gap: self.cluster_gap.unwrap_or(base.cluster_gap),
            herm: self.herm.unwrap_or(base.herm),
            residual: self.residual.unwrap_or(base.residual),
            decay_margin: self.decay_margin.unwrap_or(base.decay_margin),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ProblemOptions {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_samples: Option<Vec<f64>>,
}

/// Problem input: dimension, Hamiltonian, noise operators, options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub dim: usize,
    pub h: WireMatrix,
    pub ls: Vec<WireMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub options: Option<ProblemOptions>,
}

impl ProblemFile {
    pub fn from_generator(gen: &GkslGenerator, options: Option<ProblemOptions>) -> Self {
        ProblemFile {
            dim: gen.dim,
            h: matrix_to_wire(&gen.h),
            ls: gen.ls.iter().map(matrix_to_wire).collect(),
            options,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid problem file: {e}")))
    }

    pub fn to_generator(&self, tol: &Tolerances) -> Result<GkslGenerator> {
        if self.dim == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        let h = wire_to_matrix(&self.h, self.dim, self.dim)?;
        let ls = self
            .ls
            .iter()
            .map(|w| wire_to_matrix(w, self.dim, self.dim))
            .collect::<Result<Vec<_>>>()?;
        GkslGenerator::new(h, ls, tol)
    }

    /// Tolerances with the file's overrides applied on top of `base`.
    pub fn tolerances(&self, base: &Tolerances) -> Tolerances {
        match self.options.as_ref().and_then(|o| o.tolerances.as_ref()) {
            Some(over) => over.apply(base),
            None => *base,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockShape {
    pub dim_k: usize,
    pub dim_m: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct NtSummary {
    pub dim: usize,
    pub blocks: Vec<BlockShape>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FtSummary {
    pub dim: usize,
    pub is_algebra: bool,
    pub contained_in_nt: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StatesSummary {
    pub faithful_exists: bool,
    pub p_r_rank: usize,
    /// Block weights `tr(η p_i)` of the sampled invariant state (empty
    /// when no faithful invariant state exists).
    pub weights: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_residual: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EidSummary {
    pub holds: bool,
    pub m2_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_abscissa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DfEntrySummary {
    pub block_index: usize,
    pub dim_k: usize,
    pub dim_m: usize,
    pub kind: String,
    pub lambda: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DfSummary {
    pub entries: Vec<DfEntrySummary>,
    pub merged_subspaces: Vec<Vec<usize>>,
    pub has_non_real_lambda: bool,
}

/// Machine-readable analysis result. Every boolean claim is backed by an
/// entry in `residuals`.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub dim: usize,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub nt: NtSummary,
    pub ft: FtSummary,
    /// Eigenvalues of the Hamiltonian factor `K_i` per block.
    pub spectra: Vec<Vec<f64>>,
    pub states: StatesSummary,
    pub eid: EidSummary,
    pub df: DfSummary,
    pub residuals: BTreeMap<String, f64>,
    /// Analysis of the system reduced to the recurrent subspace, present
    /// when requested and the original has no faithful invariant state.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reduced: Option<Box<Report>>,
}

/// Run the full pipeline: decoherence-free subalgebra, fixed points,
/// atomic decomposition, semigroup factorization, invariant-state
/// structure, decay certificate, and decoherence-free subsystems.
pub fn analyze(gen: &GkslGenerator, seed: u64, tol: &Tolerances, reduce_pr: bool) -> Result<Report> {
    let mut residuals = BTreeMap::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let nt = decoherence_free_subalgebra(gen, tol)?;
    let ft = fixed_point_space(gen, &nt, tol)?;
    let rec = recurrent_projection(gen, tol)?;
    let dec = atomic_decomposition(&nt, &mut rng, tol)?;
    let dec = extract_block_operators(gen, dec, tol)?;

    // factorized semigroups
    let (l_df, l_da) = build_df_da(gen, &dec, tol)?;
    residuals.insert(
        "df_da_commutator".into(),
        (&l_df.mat * &l_da.mat - &l_da.mat * &l_df.mat).norm(),
    );
    let s_u = conjugation_superoperator(&dec.u);
    let transformed = &s_u * lindbladian(gen).mat * s_u.adjoint();
    let mut fact_res = 0.0_f64;
    for &t in &[0.3, 1.0] {
        let whole = matexp(&transformed, t)?;
        let split = matexp(&l_df.mat, t)? * matexp(&l_da.mat, t)?;
        fact_res = fact_res.max((whole - split).norm());
    }
    residuals.insert("factorization_identity".into(), fact_res);

    let spectra = dec
        .blocks
        .iter()
        .map(|b| hermitian_eig(&b.k, tol).map(|(vals, _)| vals))
        .collect::<Result<Vec<_>>>()?;

    let p_r_rank = rec.p_r.trace().re.round() as usize;
    residuals.insert(
        "rho_bar_invariance".into(),
        (predual_lindbladian(gen).mat * vec_mat(&rec.rho_bar)).norm(),
    );

    let (states, eid) = if rec.faithful_exists {
        let taus: Vec<CMatrix> = (0..dec.blocks.len())
            .map(|i| block_tau(&dec, i, &rec.rho_bar, tol))
            .collect::<Result<_>>()?;
        let eta = sample_invariant_state(gen, &rec, &mut rng, tol)?;
        let iss = analyze_invariant_state(gen, &dec, &taus, &rec, &eta, tol)?;
        residuals.insert(
            "invariant_state_reconstruction".into(),
            iss.reconstruction_residual,
        );
        let sigma_k = iss
            .blocks
            .iter()
            .zip(dec.blocks.iter())
            .map(|(ib, b)| commutator(&ib.sigma, &b.k).norm())
            .fold(0.0_f64, f64::max);
        residuals.insert("sigma_k_commutator".into(), sigma_k);

        let cert = eid_certificate_with(gen, &dec, &taus, &rec, tol)?;
        if let Some(e) = &cert.e {
            residuals.insert(
                "conditional_expectation_idempotent".into(),
                (&e.mat * &e.mat - &e.mat).norm(),
            );
        }
        (
            StatesSummary {
                faithful_exists: true,
                p_r_rank,
                weights: iss.blocks.iter().map(|b| b.weight).collect(),
                reconstruction_residual: Some(iss.reconstruction_residual),
            },
            EidSummary {
                holds: cert.eid_holds,
                m2_dim: cert.m2_dim,
                spectral_abscissa: cert.spectral_abscissa_m2,
                reason: cert.reason,
            },
        )
    } else {
        (
            StatesSummary {
                faithful_exists: false,
                p_r_rank,
                weights: Vec::new(),
                reconstruction_residual: None,
            },
            EidSummary {
                holds: false,
                m2_dim: 0,
                spectral_abscissa: None,
                reason: Some("no faithful invariant state (reduce by p_R and retry)".into()),
            },
        )
    };

    let df_rep = df_subsystems(gen, &dec, &mut rng, tol)?;
    residuals.insert("df_subspace_dynamics".into(), df_rep.dynamical_residual);
    let df = DfSummary {
        entries: df_rep
            .entries
            .iter()
            .map(|e| DfEntrySummary {
                block_index: e.block_index,
                dim_k: e.dim_k,
                dim_m: e.dim_m,
                kind: match e.kind {
                    DfKind::Subsystem => "subsystem".into(),
                    DfKind::Subspace => "subspace".into(),
                },
                lambda: e.lambda.iter().map(|l| [l.re, l.im]).collect(),
            })
            .collect(),
        merged_subspaces: df_rep.merged_subspaces.clone(),
        has_non_real_lambda: df_rep.has_non_real_lambda,
    };

    let reduced = if reduce_pr && !rec.faithful_exists {
        let (reduced_gen, _iso) = reduce(gen, &rec.p_r, tol)?;
        Some(Box::new(analyze(&reduced_gen, seed, tol, false)?))
    } else {
        None
    };

    Ok(Report {
        dim: gen.dim,
        seed,
        tolerances: *tol,
        nt: NtSummary {
            dim: nt.len(),
            blocks: dec
                .blocks
                .iter()
                .map(|b| BlockShape {
                    dim_k: b.dim_k,
                    dim_m: b.dim_m,
                })
                .collect(),
        },
        ft: FtSummary {
            dim: ft.basis.len(),
            is_algebra: ft.is_algebra,
            contained_in_nt: ft.contained_in_nt,
        },
        spectra,
        states,
        eid,
        df,
        residuals,
        reduced,
    })
}

/// Human-readable rendering of a report.
pub fn render_text(r: &Report) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    line(format!("dimension           : {}", r.dim));
    line(format!("seed                : {:#x}", r.seed));
    let shapes: Vec<String> = r
        .nt
        .blocks
        .iter()
        .map(|b| format!("({},{})", b.dim_k, b.dim_m))
        .collect();
    line(format!(
        "N(T)                : dim {} = {}",
        r.nt.dim,
        if shapes.is_empty() {
            "trivial".to_string()
        } else {
            shapes.join(" ⊕ ")
        }
    ));
    line(format!(
        "F(T)                : dim {}, algebra: {}, inside N(T): {}",
        r.ft.dim, r.ft.is_algebra, r.ft.contained_in_nt
    ));
    for (i, s) in r.spectra.iter().enumerate() {
        let vals: Vec<String> = s.iter().map(|v| format!("{v:.6}")).collect();
        line(format!("K spectrum block {i}  : [{}]", vals.join(", ")));
    }
    line(format!(
        "invariant states    : faithful: {}, rank(p_R) = {}",
        r.states.faithful_exists, r.states.p_r_rank
    ));
    if !r.states.weights.is_empty() {
        let ws: Vec<String> = r.states.weights.iter().map(|w| format!("{w:.6}")).collect();
        line(format!("sampled weights     : [{}]", ws.join(", ")));
    }
    match (r.eid.holds, &r.eid.spectral_abscissa) {
        (_, Some(a)) => line(format!(
            "decoherence cert    : holds: {}, dim M_2 = {}, abscissa = {a:.6e}",
            r.eid.holds, r.eid.m2_dim
        )),
        (_, None) => line(format!(
            "decoherence cert    : holds: {} ({})",
            r.eid.holds,
            r.eid.reason.as_deref().unwrap_or("")
        )),
    }
    for e in &r.df.entries {
        line(format!(
            "DF {}: block {} shape ({},{})",
            e.kind, e.block_index, e.dim_k, e.dim_m
        ));
    }
    if !r.df.merged_subspaces.is_empty() {
        line(format!("merged subspaces    : {:?}", r.df.merged_subspaces));
    }
    line("residual ledger".into());
    for (k, v) in &r.residuals {
        line(format!("  {k:<34} {v:.3e}"));
    }
    if let Some(red) = &r.reduced {
        line("---- reduced system (restricted to p_R) ----".into());
        out.push_str(&render_text(red));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cr;
    use crate::models::{build_circulant, CirculantSpec, HMode};

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn circulant42() -> GkslGenerator {
        build_circulant(
            &CirculantSpec {
                d: 4,
                n: 2,
                z1: cr(1.0),
                z2: cr(1.0),
                h_mode: HMode::Zero,
            },
            &tols(),
        )
        .unwrap()
    }

    #[test]
    fn wire_roundtrip() {
        let gen = circulant42();
        let pf = ProblemFile::from_generator(&gen, None);
        let text = serde_json::to_string(&pf).unwrap();
        let back = ProblemFile::parse(&text).unwrap().to_generator(&tols()).unwrap();
        assert!((back.h - &gen.h).norm() < 1e-15);
        assert_eq!(back.ls.len(), gen.ls.len());
    }

    #[test]
    fn parse_rejects_garbage_and_bad_shapes() {
        assert!(matches!(ProblemFile::parse("{not json"), Err(Error::Parse(_))));
        let bad = r#"{"dim": 3, "h": [[[0,0]]], "ls": []}"#;
        let pf = ProblemFile::parse(bad).unwrap();
        assert!(matches!(pf.to_generator(&tols()), Err(Error::Parse(_))));
    }

    #[test]
    fn analyze_circulant_summary() {
        let gen = circulant42();
        let rep = analyze(&gen, DEFAULT_SEED, &tols(), false).unwrap();
        assert_eq!(rep.nt.dim, 8);
        assert_eq!(rep.nt.blocks.len(), 2);
        for b in &rep.nt.blocks {
            assert_eq!((b.dim_k, b.dim_m), (2, 1));
        }
        assert!(rep.states.faithful_exists);
        assert!(rep.eid.holds);
        assert_eq!(rep.eid.m2_dim, 8);
        assert!(rep.residuals.values().all(|v| v.is_finite()));
        assert!(rep.residuals["factorization_identity"] <= 1e-8);
    }

    #[test]
    fn analyze_is_deterministic() {
        let gen = circulant42();
        let a = serde_json::to_string(&analyze(&gen, 7, &tols(), false).unwrap()).unwrap();
        let b = serde_json::to_string(&analyze(&gen, 7, &tols(), false).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn analyze_non_faithful_with_reduction() {
        // amplitude-type noise into level 0 from level 2, level 2 drains
        let mut h = CMatrix::zeros(3, 3);
        h[(2, 2)] = cr(1.0);
        let mut l = CMatrix::zeros(3, 3);
        l[(0, 2)] = cr(1.0);
        let gen = GkslGenerator::new(h, vec![l], &tols()).unwrap();
        let rep = analyze(&gen, DEFAULT_SEED, &tols(), true).unwrap();
        assert!(!rep.states.faithful_exists);
        assert_eq!(rep.states.p_r_rank, 2);
        assert!(!rep.eid.holds);
        let reduced = rep.reduced.as_ref().expect("reduction requested");
        assert!(reduced.states.faithful_exists);
        assert_eq!(reduced.dim, 2);
        let text = render_text(&rep);
        assert!(text.contains("reduced system"));
    }

    #[test]
    fn tolerance_overrides_apply() {
        let pf = ProblemFile::parse(
            r#"{"dim":2,"h":[[[0,0],[0,0]],[[0,0],[0,0]]],"ls":[],
                "options":{"seed":42,"tolerances":{"residual":1e-6}}}"#,
        )
        .unwrap();
        let tol = pf.tolerances(&tols());
        assert_eq!(tol.residual, 1e-6);
        assert_eq!(tol.rank_rel, tols().rank_rel);
        assert_eq!(pf.options.unwrap().seed, Some(42));
    }
}
