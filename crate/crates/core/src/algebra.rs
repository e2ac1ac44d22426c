//! Numerical matrix *-algebra machinery: commutants, generated algebras,
//! centers, iterated commutators.
//!
//! Spans are always carried as Hilbert–Schmidt orthonormal bases;
//! equality and membership questions go through the orthogonal projector
//! onto the span, which is basis independent.

use crate::error::{Error, Result};
use crate::gksl::GkslGenerator;
use crate::linalg::{
    commutator, frob, hs_orthonormalize, identity, joint_nullspace, left_mul, project_onto_span,
    right_mul, span_projector, span_residual, unvec, CMatrix, Tolerances,
};

/// A *-closed unital operator subspace of M_d, stored as an HS-orthonormal
/// basis.
#[derive(Debug, Clone)]
pub struct StarAlgebra {
    pub dim: usize,
    pub basis: Vec<CMatrix>,
}

impl StarAlgebra {
    pub fn from_basis(dim: usize, basis: Vec<CMatrix>) -> Self {
        StarAlgebra { dim, basis }
    }

    /// Linear dimension of the algebra.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Projector onto the vectorized span.
    pub fn projector(&self) -> CMatrix {
        span_projector(&self.basis, self.dim)
    }

    /// Membership test with residual: `‖x − P(x)‖_F ≤ residual · max(1, ‖x‖)`.
    pub fn contains(&self, x: &CMatrix, tol: &Tolerances) -> (bool, f64) {
        let r = span_residual(&self.basis, x);
        (r <= tol.residual * frob(x).max(1.0), r)
    }

    /// Project `x` onto the algebra's span.
    pub fn project(&self, x: &CMatrix) -> CMatrix {
        project_onto_span(&self.basis, x)
    }

    /// Residuals of the defining invariants: identity membership,
    /// adjoint closure, and multiplicative closure.
    pub fn verify(&self, tol: &Tolerances) -> Result<()> {
        let one = identity(self.dim);
        let r_one = span_residual(&self.basis, &one) / frob(&one);
        if r_one > tol.residual {
            return Err(Error::structural("StarAlgebra: identity not in span", r_one));
        }
        for b in &self.basis {
            let r = span_residual(&self.basis, &b.adjoint());
            if r > tol.residual {
                return Err(Error::structural("StarAlgebra: not *-closed", r));
            }
        }
        for a in &self.basis {
            for b in &self.basis {
                let prod = a * b;
                let r = span_residual(&self.basis, &prod) / frob(&prod).max(1.0);
                if r > tol.residual {
                    return Err(Error::structural(
                        "StarAlgebra: not multiplicatively closed",
                        r,
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Projector distance between two spans; zero iff the algebras coincide.
pub fn span_distance(a: &StarAlgebra, b: &StarAlgebra) -> f64 {
    (a.projector() - b.projector()).norm()
}

pub fn spans_equal(a: &StarAlgebra, b: &StarAlgebra, tol: &Tolerances) -> bool {
    a.dim == b.dim && span_distance(a, b) <= tol.residual * (a.dim as f64)
}

/// Commutant `{x : [x, s] = 0 ∀ s ∈ S ∪ S*}`, computed as the joint
/// nullspace of the vectorized commutation maps.
pub fn commutant(set: &[CMatrix], dim: usize, tol: &Tolerances) -> Result<StarAlgebra> {
    if dim == 0 {
        return Err(Error::domain("commutant: ambient dimension must be positive"));
    }
    let mut maps = Vec::with_capacity(2 * set.len());
    for s in set {
        if s.nrows() != dim || s.ncols() != dim {
            return Err(Error::domain("commutant: generator size mismatch"));
        }
        maps.push(left_mul(s, dim) - right_mul(s, dim));
        let sa = s.adjoint();
        maps.push(left_mul(&sa, dim) - right_mul(&sa, dim));
    }
    let vecs = joint_nullspace(&maps, dim * dim, tol);
    let basis = vecs.iter().map(|v| unvec(v, dim, dim)).collect();
    Ok(StarAlgebra::from_basis(dim, basis))
}

/// Smallest *-closed unital algebra containing `set`: closure under
/// adjoints and products, iterated until the span stops growing. The
/// iteration cap turns numerical non-termination into a diagnosable error.
pub fn generated_algebra(set: &[CMatrix], dim: usize, tol: &Tolerances) -> Result<StarAlgebra> {
    let mut seed: Vec<CMatrix> = vec![identity(dim)];
    for s in set {
        seed.push(s.clone());
        seed.push(s.adjoint());
    }
    let mut basis = hs_orthonormalize(&seed, tol);
    for _ in 0..=dim * dim {
        let mut extended = basis.clone();
        let before = basis.len();
        for a in &basis {
            for b in &basis {
                extended.push(a * b);
            }
        }
        basis = hs_orthonormalize(&extended, tol);
        if basis.len() == before {
            return Ok(StarAlgebra::from_basis(dim, basis));
        }
    }
    Err(Error::numerical(
        "generated_algebra: closure did not stabilize within d² rounds",
    ))
}

/// Center `Z(A) = A ∩ A'`.
pub fn center(a: &StarAlgebra, tol: &Tolerances) -> Result<StarAlgebra> {
    let comm = commutant(&a.basis, a.dim, tol)?;
    intersect(a, &comm, tol)
}

/// Intersection of two spans, via the joint nullspace of the two
/// complementary projectors.
pub fn intersect(a: &StarAlgebra, b: &StarAlgebra, tol: &Tolerances) -> Result<StarAlgebra> {
    if a.dim != b.dim {
        return Err(Error::domain("intersect: ambient dimensions differ"));
    }
    let d2 = a.dim * a.dim;
    let id = identity(d2);
    let maps = [&id - a.projector(), &id - b.projector()];
    let vecs = joint_nullspace(&maps, d2, tol);
    let basis = vecs.iter().map(|v| unvec(v, a.dim, a.dim)).collect();
    Ok(StarAlgebra::from_basis(a.dim, basis))
}

/// Spanning set of `span{δ_H^n(L_ℓ), δ_H^n(L_ℓ*) : n ≥ 0}`, returned as an
/// HS-orthonormal basis. Each new commutator is normalized before the
/// span-growth test so the iteration is insensitive to the scale of `H`.
pub fn iterated_commutators(gen: &GkslGenerator, tol: &Tolerances) -> Vec<CMatrix> {
    let mut seed = Vec::with_capacity(2 * gen.ls.len());
    for l in &gen.ls {
        seed.push(l.clone());
        seed.push(l.adjoint());
    }
    let mut basis = hs_orthonormalize(&seed, tol);
    let mut frontier = basis.clone();
    let cap = gen.dim * gen.dim;
    for _ in 0..cap {
        if frontier.is_empty() {
            break;
        }
        let mut next_frontier = Vec::new();
        for f in &frontier {
            let mut c = commutator(&gen.h, f);
            let n = frob(&c);
            if n <= tol.rank_rel {
                continue;
            }
            c = c.unscale(n);
            let rem = &c - project_onto_span(&basis, &c);
            let rem_norm = frob(&rem);
            if rem_norm > tol.rank_rel {
                let newb = rem.unscale(rem_norm);
                basis.push(newb.clone());
                next_frontier.push(newb);
            }
        }
        frontier = next_frontier;
    }
    basis
}
