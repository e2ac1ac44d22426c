//! Builders for two well-understood generator families used as fixtures
//! and oracles:
//!
//! * **generic** generators: a diagonal Hamiltonian plus rank-one noise
//!   operators `√γ_mj |e_j⟩⟨e_m|` driven by a classical rate matrix — the
//!   decoherence-free subalgebra is spanned by the communication-class
//!   projections together with the full matrix algebra on isolated states;
//! * **circulant** generators: noise operators `z1·J^n`, `z2·J^{−n}` built
//!   from the cyclic shift `J`, whose structure is governed by
//!   `k = gcd(n,d)`, `m = d/k` and is fully computable in the Fourier basis.

use crate::algebra::{commutant, StarAlgebra};
use crate::error::{Error, Result};
use crate::gksl::GkslGenerator;
use crate::linalg::{
    c, cr, hs_orthonormalize, identity, kron, CMatrix, CVector, Tolerances, C64,
};

/// Classical-chain generator data: off-diagonal `gamma[(m, j)]` is the
/// jump rate m → j; `kappa[m]` the Hamiltonian level of state m.
#[derive(Debug, Clone)]
pub struct GenericSpec {
    pub n_states: usize,
    pub gamma: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum HMode {
    Zero,
    /// `H = F*(K⊗1 + 1⊗M0)F` with `K` Hermitian k×k and `M0` Hermitian m×m.
    Factor { k_op: CMatrix, m0: CMatrix },
}

#[derive(Debug, Clone)]
pub struct CirculantSpec {
    pub d: usize,
    pub n: usize,
    pub z1: C64,
    pub z2: C64,
    pub h_mode: HMode,
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl CirculantSpec {
    pub fn dim_k(&self) -> usize {
        gcd(self.n, self.d)
    }

    pub fn dim_m(&self) -> usize {
        self.d / self.dim_k()
    }

    fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::domain("circulant: dimension must be at least 2"));
        }
        if self.n == 0 || self.n >= self.d {
            return Err(Error::domain("circulant: power n must lie in 1..d-1"));
        }
        if (self.z1 * self.z2).norm() == 0.0 {
            return Err(Error::domain("circulant: z1·z2 must be nonzero"));
        }
        if let HMode::Factor { k_op, m0 } = &self.h_mode {
            if k_op.nrows() != self.dim_k() || !k_op.is_square() {
                return Err(Error::domain("circulant: K must be k×k"));
            }
            if m0.nrows() != self.dim_m() || !m0.is_square() {
                return Err(Error::domain("circulant: M0 must be m×m"));
            }
        }
        Ok(())
    }
}

impl GenericSpec {
    fn validate(&self) -> Result<()> {
        let n = self.n_states;
        if n == 0 || self.gamma.len() != n || self.gamma.iter().any(|r| r.len() != n) {
            return Err(Error::domain("generic: gamma must be n×n"));
        }
        if self.kappa.len() != n {
            return Err(Error::domain("generic: kappa must have one entry per state"));
        }
        for m in 0..n {
            for j in 0..n {
                if m != j && self.gamma[m][j] < 0.0 {
                    return Err(Error::domain("generic: negative jump rate"));
                }
            }
        }
        Ok(())
    }

    /// Classical generator on functions: `(Γf)_m = Σ_j γ_mj (f_j − f_m)`.
    pub fn classical_generator(&self) -> Result<CMatrix> {
        self.validate()?;
        let n = self.n_states;
        let mut g = CMatrix::zeros(n, n);
        for m in 0..n {
            let mut total = 0.0;
            for j in 0..n {
                if j != m {
                    g[(m, j)] = cr(self.gamma[m][j]);
                    total += self.gamma[m][j];
                }
            }
            g[(m, m)] = cr(-total);
        }
        Ok(g)
    }

    /// Connected components of the symmetrized jump graph (edge m—j iff
    /// γ_mj > 0 or γ_jm > 0). Singleton components are exactly the
    /// isolated states.
    pub fn communication_classes(&self) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        let n = self.n_states;
        let linked = |i: usize, j: usize| self.gamma[i][j] > 0.0 || self.gamma[j][i] > 0.0;
        let mut comp = vec![usize::MAX; n];
        let mut classes: Vec<Vec<usize>> = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = classes.len();
            let mut stack = vec![start];
            comp[start] = id;
            let mut members = vec![start];
            while let Some(i) = stack.pop() {
                for j in 0..n {
                    if j != i && comp[j] == usize::MAX && linked(i, j) {
                        comp[j] = id;
                        stack.push(j);
                        members.push(j);
                    }
                }
            }
            members.sort_unstable();
            classes.push(members);
        }
        Ok(classes)
    }
}

/// `H = Σ κ_m e_mm`, one noise operator `√γ_mj |e_j⟩⟨e_m|` per positive
/// rate.
pub fn build_generic(spec: &GenericSpec, tol: &Tolerances) -> Result<GkslGenerator> {
    spec.validate()?;
    let n = spec.n_states;
    let h = CMatrix::from_fn(n, n, |r, s| {
        if r == s {
            cr(spec.kappa[r])
        } else {
            cr(0.0)
        }
    });
    let mut ls = Vec::new();
    for m in 0..n {
        for j in 0..n {
            if m != j && spec.gamma[m][j] > 0.0 {
                let mut l = CMatrix::zeros(n, n);
                l[(j, m)] = cr(spec.gamma[m][j].sqrt());
                ls.push(l);
            }
        }
    }
    GkslGenerator::new(h, ls, tol)
}

/// Oracle for the decoherence-free subalgebra of a generic generator:
/// the span of communication-class projections plus the full matrix
/// algebra on the isolated states.
pub fn expected_generic_nt(spec: &GenericSpec, tol: &Tolerances) -> Result<StarAlgebra> {
    let n = spec.n_states;
    let classes = spec.communication_classes()?;
    let mut iso = Vec::new();
    let mut basis = Vec::new();
    for class in &classes {
        if class.len() == 1 {
            iso.push(class[0]);
        } else {
            let mut p = CMatrix::zeros(n, n);
            for &i in class {
                p[(i, i)] = cr(1.0);
            }
            basis.push(p);
        }
    }
    for &i in &iso {
        for &j in &iso {
            let mut u = CMatrix::zeros(n, n);
            u[(i, j)] = cr(1.0);
            basis.push(u);
        }
    }
    Ok(StarAlgebra::from_basis(n, hs_orthonormalize(&basis, tol)))
}

/// The cyclic shift `J e_i = e_{i−1 mod d}`.
pub fn circulant_shift(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, s| {
        if r == (s + d - 1) % d {
            cr(1.0)
        } else {
            cr(0.0)
        }
    })
}

/// Fourier eigenvector `v_j` of the shift: `J v_j = ω^j v_j`,
/// `ω = e^{2πi/d}`.
pub fn fourier_vector(d: usize, j: usize) -> CVector {
    let scale = 1.0 / (d as f64).sqrt();
    CVector::from_fn(d, |i, _| {
        let phase = 2.0 * std::f64::consts::PI * (i * j % d) as f64 / d as f64;
        c(phase.cos() * scale, phase.sin() * scale)
    })
}

/// The unitary sending `v_{mr+h} ↦ f_r ⊗ g_h` (index `r·m + h`).
pub fn circulant_factorizer(spec: &CirculantSpec) -> Result<CMatrix> {
    spec.validate()?;
    let (d, k, m) = (spec.d, spec.dim_k(), spec.dim_m());
    let mut f = CMatrix::zeros(d, d);
    for r in 0..k {
        for h in 0..m {
            let v = fourier_vector(d, (m * r + h) % d);
            f.row_mut(r * m + h).copy_from(&v.adjoint());
        }
    }
    Ok(f)
}

/// Minimal central projections of the shift-power commutant:
/// `p_h = Σ_r |v_{mr+h}⟩⟨v_{mr+h}|` for h = 0..m−1.
pub fn expected_circulant_projections(spec: &CirculantSpec) -> Result<Vec<CMatrix>> {
    spec.validate()?;
    let (d, k, m) = (spec.d, spec.dim_k(), spec.dim_m());
    let mut out = Vec::with_capacity(m);
    for h in 0..m {
        let mut p = CMatrix::zeros(d, d);
        for r in 0..k {
            let v = fourier_vector(d, (m * r + h) % d);
            p += &v * v.adjoint();
        }
        out.push(p);
    }
    Ok(out)
}

/// Oracle for the decoherence-free subalgebra with `H = 0`: the commutant
/// of `{J^k, J^{−k}}`.
pub fn expected_circulant_nt(spec: &CirculantSpec, tol: &Tolerances) -> Result<StarAlgebra> {
    spec.validate()?;
    let k = spec.dim_k();
    let j = circulant_shift(spec.d);
    let jk = j.pow(k as u32);
    commutant(&[jk.clone(), jk.adjoint()], spec.d, tol)
}

/// `L_1 = z1·J^n`, `L_2 = z2·J^{−n}`, with `H` either zero or
/// `F*(K⊗1 + 1⊗M0)F` in the Fourier product basis.
pub fn build_circulant(spec: &CirculantSpec, tol: &Tolerances) -> Result<GkslGenerator> {
    spec.validate()?;
    let (d, n) = (spec.d, spec.n);
    let j = circulant_shift(d);
    // eigen-oracle sanity check for the shift
    let v1 = fourier_vector(d, 1);
    let omega = c(
        (2.0 * std::f64::consts::PI / d as f64).cos(),
        (2.0 * std::f64::consts::PI / d as f64).sin(),
    );
    let eig_res = (&j * &v1 - v1.map(|x| x * omega)).norm();
    if eig_res > tol.residual {
        return Err(Error::numerical(format!(
            "circulant shift eigen-identity failed, residual {eig_res:.3e}"
        )));
    }
    let jn = j.pow(n as u32);
    let ls = vec![jn.map(|x| x * spec.z1), jn.adjoint().map(|x| x * spec.z2)];
    let h = match &spec.h_mode {
        HMode::Zero => CMatrix::zeros(d, d),
        HMode::Factor { k_op, m0 } => {
            let f = circulant_factorizer(spec)?;
            let inner = kron(k_op, &identity(spec.dim_m())) + kron(&identity(spec.dim_k()), m0);
            f.adjoint() * inner * f
        }
    };
    GkslGenerator::new(h, ls, tol)
}

/// Cyclic nearest-neighbor coupling
/// `M0 = Σ_h (|g_{h+1}⟩⟨g_h| + |g_{h−1}⟩⟨g_h|)` on the m factor, indices
/// mod m. With m coprime to n/k this makes the m-side dynamics ergodic,
/// collapsing the circulant structure to a single block of shape (k, m).
pub fn circulant_tridiagonal_m0(spec: &CirculantSpec) -> CMatrix {
    let m = spec.dim_m();
    let mut m0 = CMatrix::zeros(m, m);
    for h in 0..m {
        m0[((h + 1) % m, h)] += cr(1.0);
        m0[((h + m - 1) % m, h)] += cr(1.0);
    }
    m0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{span_distance, spans_equal};
    use crate::dfspaces::decoherence_free_subalgebra;
    use crate::gksl::{evolve, Picture};
    use crate::linalg::{commutator, matexp};
    use crate::structure::{atomic_decomposition, extract_block_operators};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tols() -> Tolerances {
        Tolerances::default()
    }

    fn chain_spec(n: usize, rates: &[(usize, usize, f64)]) -> GenericSpec {
        let mut gamma = vec![vec![0.0; n]; n];
        for &(m, j, r) in rates {
            gamma[m][j] = r;
        }
        GenericSpec {
            n_states: n,
            gamma,
            kappa: vec![0.0; n],
        }
    }

    #[test]
    fn generic_no_rates_has_no_noise() {
        let spec = GenericSpec {
            n_states: 3,
            gamma: vec![vec![0.0; 3]; 3],
            kappa: vec![1.0, 2.0, 3.0],
        };
        let gen = build_generic(&spec, &tols()).unwrap();
        assert!(gen.ls.is_empty());
        assert!((gen.h[(2, 2)] - cr(3.0)).norm() < 1e-15);
    }

    #[test]
    fn generic_rejects_negative_rate() {
        let spec = chain_spec(2, &[(0, 1, -1.0)]);
        assert!(build_generic(&spec, &tols()).is_err());
    }

    #[test]
    fn generic_two_state_symmetric_chain() {
        let spec = chain_spec(2, &[(0, 1, 1.0), (1, 0, 1.0)]);
        let gen = build_generic(&spec, &tols()).unwrap();
        assert_eq!(gen.ls.len(), 2);
        // stationary distribution (1/2, 1/2): evolve a diagonal state
        let rho0 = CMatrix::from_fn(2, 2, |r, s| if r == 0 && s == 0 { cr(1.0) } else { cr(0.0) });
        let rho = evolve(&gen, &rho0, 30.0, Picture::Schrodinger).unwrap();
        assert!((rho[(0, 0)] - cr(0.5)).norm() < 1e-9);
        assert!((rho[(1, 1)] - cr(0.5)).norm() < 1e-9);
    }

    #[test]
    fn diagonal_restriction_matches_classical_semigroup() {
        let mut rng = ChaCha8Rng::seed_from_u64(501);
        let spec = chain_spec(
            4,
            &[
                (0, 1, 0.7),
                (1, 0, 1.3),
                (1, 2, 0.4),
                (2, 3, 2.0),
                (3, 0, 0.9),
            ],
        );
        let gen = build_generic(&spec, &tols()).unwrap();
        let gamma = spec.classical_generator().unwrap();
        for &t in &[0.3, 1.1] {
            let f = CVector::from_fn(4, |_, _| cr(rng.gen::<f64>()));
            let x = CMatrix::from_fn(4, 4, |r, s| if r == s { f[r] } else { cr(0.0) });
            let evolved = evolve(&gen, &x, t, Picture::Heisenberg).unwrap();
            let expected = matexp(&gamma, t).unwrap() * &f;
            for i in 0..4 {
                assert!((evolved[(i, i)] - expected[i]).norm() < 1e-9);
                for jj in 0..4 {
                    if i != jj {
                        assert!(evolved[(i, jj)].norm() < 1e-9, "diagonal algebra not invariant");
                    }
                }
            }
        }
    }

    #[test]
    fn expected_nt_single_class_is_scalars() {
        let spec = chain_spec(3, &[(0, 1, 1.0), (1, 2, 0.5), (2, 0, 0.2)]);
        let alg = expected_generic_nt(&spec, &tols()).unwrap();
        assert_eq!(alg.len(), 1);
    }

    #[test]
    fn expected_nt_all_isolated_is_everything() {
        let spec = chain_spec(3, &[]);
        let alg = expected_generic_nt(&spec, &tols()).unwrap();
        assert_eq!(alg.len(), 9);
    }

    #[test]
    fn expected_nt_mixed_class_and_isolated() {
        let spec = chain_spec(4, &[(0, 1, 1.0), (1, 0, 2.0)]);
        let alg = expected_generic_nt(&spec, &tols()).unwrap();
        assert_eq!(alg.len(), 5);
    }

    #[test]
    fn one_way_rate_still_joins_a_class() {
        // γ10 > 0 with γ01 = 0 still merges {0,1} into one class
        let spec = chain_spec(3, &[(1, 0, 0.8)]);
        let classes = spec.communication_classes().unwrap();
        assert!(classes.contains(&vec![0, 1]));
        let alg = expected_generic_nt(&spec, &tols()).unwrap();
        assert_eq!(alg.len(), 2);
    }

    #[test]
    fn generic_oracle_battery() {
        let mut rng = ChaCha8Rng::seed_from_u64(503);
        let mut r = || 0.2 + rng.gen::<f64>();
        let specs = vec![
            chain_spec(3, &[(0, 1, r()), (1, 0, r())]),
            chain_spec(4, &[(0, 1, r()), (1, 2, r()), (2, 0, r())]),
            chain_spec(4, &[(0, 1, r()), (0, 2, r()), (0, 3, r())]),
            chain_spec(5, &[(0, 1, r()), (1, 0, r()), (2, 3, r()), (3, 2, r())]),
            chain_spec(6, &[(0, 1, r()), (1, 2, r()), (3, 4, r())]),
            chain_spec(8, &[(0, 1, r()), (2, 3, r()), (3, 4, r()), (5, 6, r()), (6, 5, r())]),
        ];
        for (i, spec) in specs.iter().enumerate() {
            let gen = build_generic(spec, &tols()).unwrap();
            let nt = decoherence_free_subalgebra(&gen, &tols()).unwrap();
            let oracle = expected_generic_nt(spec, &tols()).unwrap();
            let dist = span_distance(&nt, &oracle);
            assert!(spans_equal(&nt, &oracle, &tols()), "battery spec {i}: projector distance {dist:.3e}");
        }
    }

    fn cspec(d: usize, n: usize) -> CirculantSpec {
        CirculantSpec {
            d,
            n,
            z1: cr(1.0),
            z2: cr(1.0),
            h_mode: HMode::Zero,
        }
    }

    #[test]
    fn circulant_rejects_bad_input() {
        assert!(build_circulant(&CirculantSpec { z1: cr(0.0), ..cspec(4, 2) }, &tols()).is_err());
        assert!(build_circulant(&cspec(4, 0), &tols()).is_err());
        assert!(build_circulant(&cspec(4, 4), &tols()).is_err());
    }

    #[test]
    fn circulant_d2_is_swap_noise() {
        let spec = cspec(2, 1);
        assert_eq!((spec.dim_k(), spec.dim_m()), (1, 2));
        let gen = build_circulant(&spec, &tols()).unwrap();
        assert!((gen.ls[0][(1, 0)] - cr(1.0)).norm() < 1e-15);
        assert!((gen.ls[0][(0, 1)] - cr(1.0)).norm() < 1e-15);
    }

    #[test]
    fn circulant_nt_matches_shift_commutant() {
        for (d, n) in [(4, 2), (6, 4)] {
            let spec = cspec(d, n);
            let gen = build_circulant(&spec, &tols()).unwrap();
            let nt = decoherence_free_subalgebra(&gen, &tols()).unwrap();
            let oracle = expected_circulant_nt(&spec, &tols()).unwrap();
            let dist = span_distance(&nt, &oracle);
            assert!(spans_equal(&nt, &oracle, &tols()), "circulant d={d} n={n}: projector distance {dist:.3e}");
            assert_eq!(nt.len(), spec.dim_k() * spec.dim_k() * spec.dim_m());
        }
    }

    #[test]
    fn circulant_central_projections_match_formula() {
        let spec = cspec(4, 2);
        let gen = build_circulant(&spec, &tols()).unwrap();
        let nt = decoherence_free_subalgebra(&gen, &tols()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(505);
        let dec = atomic_decomposition(&nt, &mut rng, &tols()).unwrap();
        let expected = expected_circulant_projections(&spec).unwrap();
        for b in &dec.blocks {
            let matched = expected.iter().any(|p| (p - &b.p).norm() <= 1e-8);
            assert!(matched, "central projection not in the Fourier family");
        }
        assert_eq!(dec.blocks.len(), expected.len());
    }

    #[test]
    fn tridiagonal_m0_shape() {
        let spec = cspec(15, 10);
        let m0 = circulant_tridiagonal_m0(&spec);
        assert_eq!(m0.nrows(), 3);
        for r in 0..3 {
            for s in 0..3 {
                let want = if r == s { 0.0 } else { 1.0 };
                assert!((m0[(r, s)] - cr(want)).norm() < 1e-15);
            }
        }
        assert!((&m0 - m0.adjoint()).norm() < 1e-15);
    }

    #[test]
    fn tridiagonal_m0_scalar_commutant_condition() {
        // on the m factor the noise acts as the diagonal phase matrix
        // S = diag(ζ^{(n/k)h}); only scalars commute with {S, [M0, S]}
        let spec = cspec(15, 10);
        let (k, m) = (spec.dim_k(), spec.dim_m());
        let power = spec.n / k;
        let s = CMatrix::from_fn(m, m, |r, c2| {
            if r == c2 {
                let phase = 2.0 * std::f64::consts::PI * (power * r % m) as f64 / m as f64;
                c(phase.cos(), phase.sin())
            } else {
                cr(0.0)
            }
        });
        let m0 = circulant_tridiagonal_m0(&spec);
        let bracket = commutator(&m0, &s);
        let cc = commutant(&[s.clone(), s.adjoint(), bracket.clone(), bracket.adjoint()], m, &tols()).unwrap();
        assert_eq!(cc.len(), 1);
    }

    #[test]
    fn circulant_with_m0_collapses_to_single_block() {
        let spec = CirculantSpec {
            h_mode: HMode::Factor {
                k_op: CMatrix::zeros(2, 2),
                m0: circulant_tridiagonal_m0(&cspec(4, 2)),
            },
            ..cspec(4, 2)
        };
        let gen = build_circulant(&spec, &tols()).unwrap();
        let nt = decoherence_free_subalgebra(&gen, &tols()).unwrap();
        assert_eq!(nt.len(), 4); // M_2 ⊗ 1
        let mut rng = ChaCha8Rng::seed_from_u64(507);
        let dec = atomic_decomposition(&nt, &mut rng, &tols()).unwrap();
        let dec = extract_block_operators(&gen, dec, &tols()).unwrap();
        assert_eq!(dec.blocks.len(), 1);
        assert_eq!((dec.blocks[0].dim_k, dec.blocks[0].dim_m), (2, 2));
    }
}
