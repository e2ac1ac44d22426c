//! GKSL (Lindblad) generators, their superoperator matrices, and the
//! induced semigroup evolution in both pictures.

use crate::error::{Error, Result};
use crate::linalg::{
    self, frob, identity, is_hermitian, left_mul, left_right_mul, matexp, right_mul, unvec,
    vec_mat, CMatrix, Tolerances,
};

/// A GKSL generator: Hamiltonian `H` plus noise operators `L_ℓ` on C^d.
///
/// The Heisenberg generator is
/// `L(x) = i[H,x] − ½ Σ (L*Lx − 2 L*xL + x L*L)`.
#[derive(Debug, Clone)]
pub struct GkslGenerator {
    pub dim: usize,
    pub h: CMatrix,
    pub ls: Vec<CMatrix>,
}

impl GkslGenerator {
    /// Validates shapes and Hermiticity. Noise operators with negligible
    /// Frobenius norm are dropped: they contribute nothing to the
    /// generator and would only pollute rank decisions downstream.
    pub fn new(h: CMatrix, ls: Vec<CMatrix>, tol: &Tolerances) -> Result<Self> {
        if !h.is_square() || h.nrows() == 0 {
            return Err(Error::domain("GkslGenerator: H must be square and non-empty"));
        }
        let dim = h.nrows();
        if !is_hermitian(&h, tol.herm) {
            return Err(Error::domain(format!(
                "GkslGenerator: H is not Hermitian (defect {:.3e})",
                linalg::hermiticity_defect(&h)
            )));
        }
        let mut kept = Vec::with_capacity(ls.len());
        for (i, l) in ls.into_iter().enumerate() {
            if l.nrows() != dim || l.ncols() != dim {
                return Err(Error::domain(format!(
                    "GkslGenerator: noise operator {} is {}x{}, expected {}x{}",
                    i,
                    l.nrows(),
                    l.ncols(),
                    dim,
                    dim
                )));
            }
            if frob(&l) <= tol.rank_rel {
                log::debug!("dropping numerically zero noise operator {}", i);
                continue;
            }
            kept.push(l);
        }
        Ok(GkslGenerator { dim, h, ls: kept })
    }
}

/// Evolution picture for [`evolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    Heisenberg,
    Schrodinger,
}

/// A superoperator on M_d stored as its `d² × d²` matrix acting on
/// column-stacked vectorizations.
#[derive(Debug, Clone)]
pub struct Superoperator {
    pub dim: usize,
    pub mat: CMatrix,
}

impl Superoperator {
    pub fn zero(dim: usize) -> Self {
        Superoperator {
            dim,
            mat: CMatrix::zeros(dim * dim, dim * dim),
        }
    }

    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        unvec(&(&self.mat * vec_mat(x)), self.dim, self.dim)
    }
}

/// Heisenberg-picture Lindbladian superoperator of `gen`.
pub fn lindbladian(gen: &GkslGenerator) -> Superoperator {
    let d = gen.dim;
    let mut mat = hamiltonian_part(gen);
    mat += dissipative_part(gen);
    Superoperator { dim: d, mat }
}

/// The `i[H,·]` part alone.
pub fn hamiltonian_part(gen: &GkslGenerator) -> CMatrix {
    let d = gen.dim;
    (left_mul(&gen.h, d) - right_mul(&gen.h, d)).map(|x| x * linalg::c(0.0, 1.0))
}

/// The dissipative part `−½ Σ (L*Lx − 2 L*xL + x L*L)`.
pub fn dissipative_part(gen: &GkslGenerator) -> CMatrix {
    let d = gen.dim;
    let mut mat = CMatrix::zeros(d * d, d * d);
    for l in &gen.ls {
        let lstar_l = l.adjoint() * l;
        mat += left_right_mul(&l.adjoint(), l)
            - (left_mul(&lstar_l, d) + right_mul(&lstar_l, d)).scale(0.5);
    }
    mat
}

/// Predual (Schrödinger-picture) Lindbladian:
/// `L_*(ρ) = −i[H,ρ] + Σ (LρL* − ½{L*L, ρ})`.
pub fn predual_lindbladian(gen: &GkslGenerator) -> Superoperator {
    let d = gen.dim;
    let mut mat =
        (left_mul(&gen.h, d) - right_mul(&gen.h, d)).map(|x| x * linalg::c(0.0, -1.0));
    for l in &gen.ls {
        let lstar_l = l.adjoint() * l;
        mat += left_right_mul(l, &l.adjoint())
            - (left_mul(&lstar_l, d) + right_mul(&lstar_l, d)).scale(0.5);
    }
    Superoperator { dim: d, mat }
}

/// Evolve an observable (Heisenberg) or state (Schrödinger) for time `t ≥ 0`.
pub fn evolve(gen: &GkslGenerator, x: &CMatrix, t: f64, picture: Picture) -> Result<CMatrix> {
    if t < 0.0 {
        return Err(Error::domain("evolve: t must be non-negative"));
    }
    if x.nrows() != gen.dim || x.ncols() != gen.dim {
        return Err(Error::domain("evolve: operator size does not match generator"));
    }
    let sup = match picture {
        Picture::Heisenberg => lindbladian(gen),
        Picture::Schrodinger => predual_lindbladian(gen),
    };
    let propagator = matexp(&sup.mat, t)?;
    Ok(unvec(&(propagator * vec_mat(x)), gen.dim, gen.dim))
}

/// Apply the GKSL gauge freedom: `L′_ℓ = Σ_m u_{ℓm} L_m + z_ℓ 1`,
/// `H′ = H + c + (X − X*)/(2i)` with `X = Σ_{m,j} z̄_m u_{mj} L_j`.
/// The returned generator induces the same Lindbladian superoperator.
pub fn gauge_transform(
    gen: &GkslGenerator,
    u: &CMatrix,
    z: &[linalg::C64],
    c_shift: f64,
    tol: &Tolerances,
) -> Result<GkslGenerator> {
    let n = gen.ls.len();
    if u.nrows() != n || u.ncols() != n {
        return Err(Error::domain(format!(
            "gauge_transform: mixing matrix must be {}x{}",
            n, n
        )));
    }
    if z.len() != n {
        return Err(Error::domain("gauge_transform: shift vector length mismatch"));
    }
    if (u.adjoint() * u - identity(n)).norm() > tol.residual.max(1e-12) * (n as f64).max(1.0) {
        return Err(Error::domain("gauge_transform: mixing matrix is not unitary"));
    }
    let d = gen.dim;
    let mut new_ls = Vec::with_capacity(n);
    for ell in 0..n {
        let mut lp = identity(d).map(|x| x * z[ell]);
        for m in 0..n {
            lp += gen.ls[m].map(|x| x * u[(ell, m)]);
        }
        new_ls.push(lp);
    }
    // X = Σ_{m,j} conj(z_m) u_{mj} L_j
    let mut x = CMatrix::zeros(d, d);
    for m in 0..n {
        for j in 0..n {
            let coeff = z[m].conj() * u[(m, j)];
            x += gen.ls[j].map(|v| v * coeff);
        }
    }
    let anti = (&x - x.adjoint()).map(|v| v / linalg::c(0.0, 2.0));
    let new_h = &gen.h + identity(d).scale(c_shift) + anti;
    GkslGenerator::new(new_h, new_ls, tol)
}
