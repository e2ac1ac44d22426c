//! Dense complex linear-algebra kernel.
//!
//! Everything downstream works with [`CMatrix`] (dense, column-major,
//! `Complex64`). Vectorization is column-stacking throughout, so
//! `vec(A X B) = (Bᵀ ⊗ A) vec(X)`; this fixes every superoperator matrix
//! in the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Numerical tolerances used by every rank, clustering, and identity check.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Relative singular-value cutoff for rank decisions.
    pub rank_rel: f64,
    /// Gap used when clustering eigenvalues into spectral projections.
    pub cluster_gap: f64,
    /// Relative Hermiticity check.
    pub herm: f64,
    /// Bound for verified structural identities.
    pub residual: f64,
    /// Spectral-abscissa margin for decay certificates.
    pub decay_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank_rel: 1e-9,
            cluster_gap: 1e-8,
            herm: 1e-10,
            residual: 1e-8,
            decay_margin: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.rank_rel,
            self.cluster_gap,
            self.herm,
            self.residual,
            self.decay_margin,
        ];
        if all.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::domain("tolerances must be strictly positive"));
        }
        if self.rank_rel >= 1.0 {
            return Err(Error::domain("rank_rel must be < 1"));
        }
        Ok(())
    }
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn frob(a: &CMatrix) -> f64 {
    a.norm()
}

/// Trace norm (sum of singular values).
pub fn trace_norm(a: &CMatrix) -> f64 {
    a.clone().svd(false, false).singular_values.iter().sum()
}

/// Partial isometry of the polar decomposition `a = iso·(a*a)^{1/2}`,
/// computed through the Hermitian eigendecomposition of `a*a` (more
/// robust than the iterative complex SVD for rank-deficient inputs).
/// Returns the isometry and the numerical rank.
pub fn partial_isometry(a: &CMatrix, tol: &Tolerances) -> Result<(CMatrix, usize)> {
    let h = a.adjoint() * a;
    let (vals, vecs) = hermitian_eig(&((&h + h.adjoint()).scale(0.5)), tol)?;
    let lmax = vals.last().copied().unwrap_or(0.0).max(0.0);
    let mut iso = CMatrix::zeros(a.nrows(), a.ncols());
    let mut rank = 0;
    for i in 0..vals.len() {
        if vals[i] > tol.rank_rel * lmax.max(1e-300) {
            let v = vecs.column(i);
            let col = (a * v).unscale(vals[i].sqrt());
            iso += col * v.adjoint();
            rank += 1;
        }
    }
    Ok((iso, rank))
}

pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn is_hermitian(a: &CMatrix, tol_herm: f64) -> bool {
    a.is_square() && hermiticity_defect(a) <= tol_herm * frob(a).max(1.0)
}

/// Column-stacking vectorization.
pub fn vec_mat(a: &CMatrix) -> CVector {
    CVector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols, "unvec: length mismatch");
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Superoperator matrix of `x ↦ a x b` under column-stacking vec.
pub fn left_right_mul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    kron(&b.transpose(), a)
}

/// Superoperator matrix of `x ↦ a x`.
pub fn left_mul(a: &CMatrix, d: usize) -> CMatrix {
    kron(&identity(d), a)
}

/// Superoperator matrix of `x ↦ x b`.
pub fn right_mul(b: &CMatrix, d: usize) -> CMatrix {
    kron(&b.transpose(), &identity(d))
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Hilbert–Schmidt inner product `tr(a* b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Eigendecomposition of a Hermitian matrix.
///
/// Eigenvalues ascending; each eigenvector's first component of
/// significant modulus is rotated to the real positive axis, so the
/// output is reproducible across runs.
pub fn hermitian_eig(a: &CMatrix, tol: &Tolerances) -> Result<(Vec<f64>, CMatrix)> {
    if !a.is_square() {
        return Err(Error::domain(format!(
            "hermitian_eig: matrix is {}x{}, not square",
            a.nrows(),
            a.ncols()
        )));
    }
    if !is_hermitian(a, tol.herm) {
        return Err(Error::domain(format!(
            "hermitian_eig: matrix is not Hermitian (defect {:.3e})",
            hermiticity_defect(a)
        )));
    }
    let d = a.nrows();
    let sym = (a + a.adjoint()).scale(0.5);
    let se = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].partial_cmp(&se.eigenvalues[j]).unwrap());
    let mut values = Vec::with_capacity(d);
    let mut vectors = CMatrix::zeros(d, d);
    for (col, &i) in order.iter().enumerate() {
        values.push(se.eigenvalues[i]);
        let mut v: CVector = se.eigenvectors.column(i).into();
        if let Some(k) = (0..d).find(|&k| v[k].norm() > 1e-12) {
            let phase = v[k].conj() / cr(v[k].norm());
            v *= phase;
        }
        vectors.set_column(col, &v);
    }
    Ok((values, vectors))
}

/// Matrix exponential `exp(t A)` by scaling-and-squaring with the
/// [13/13] Padé approximant.
pub fn matexp(a: &CMatrix, t: f64) -> Result<CMatrix> {
    if !a.is_square() {
        return Err(Error::domain("matexp: matrix must be square"));
    }
    let d = a.nrows();
    let m = a.scale(t);
    // 1-norm (max absolute column sum)
    let norm1 = (0..d)
        .map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    const THETA13: f64 = 5.371920351148152;
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as u32
    } else {
        0
    };
    let m = m.scale(0.5_f64.powi(s as i32));

    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = identity(d);
    let m2 = &m * &m;
    let m4 = &m2 * &m2;
    let m6 = &m4 * &m2;
    let u_inner = &m6 * (m6.scale(B[13]) + m4.scale(B[11]) + m2.scale(B[9]))
        + m6.scale(B[7])
        + m4.scale(B[5])
        + m2.scale(B[3])
        + id.scale(B[1]);
    let u = &m * u_inner;
    let v = &m6 * (m6.scale(B[12]) + m4.scale(B[10]) + m2.scale(B[8]))
        + m6.scale(B[6])
        + m4.scale(B[4])
        + m2.scale(B[2])
        + id.scale(B[0]);
    let lhs = &v - &u;
    let rhs = &v + &u;
    let lu = lhs.lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::numerical("matexp: Padé denominator is singular"))?;
    for _ in 0..s {
        x = &x * &x;
    }
    Ok(x)
}

/// Orthonormal basis of the (numerical) right nullspace of `a`.
pub fn nullspace(a: &CMatrix, tol: &Tolerances) -> Vec<CVector> {
    nullspace_scaled(a, 0.0, tol)
}

/// Nullspace with an external reference scale: a direction counts as
/// kernel when its singular value is ≤ `rank_rel · max(σ_max, scale)`.
/// This keeps rank decisions meaningful when `a` is a restriction of a
/// larger operator and may itself be numerically zero.
pub fn nullspace_scaled(a: &CMatrix, scale: f64, tol: &Tolerances) -> Vec<CVector> {
    let n = a.ncols();
    // nalgebra's SVD is thin; pad with zero rows so V is complete.
    let padded;
    let work = if a.nrows() < n {
        let mut p = CMatrix::zeros(n, n);
        p.view_mut((0, 0), (a.nrows(), n)).copy_from(a);
        padded = p;
        &padded
    } else {
        a
    };
    let svd = work.clone().svd(false, true);
    let v_t = svd.v_t.expect("svd: V requested");
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let thresh = tol.rank_rel * smax.max(scale);
    let mut basis = Vec::new();
    if smax <= thresh {
        for j in 0..n {
            let mut e = CVector::zeros(n);
            e[j] = cr(1.0);
            basis.push(e);
        }
        return basis;
    }
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= thresh {
            // row i of V^H, conjugated, is the i-th right singular vector
            let v: CVector = v_t.row(i).transpose().map(|x| x.conj());
            basis.push(v);
        }
    }
    basis
}

/// Orthonormal basis of the joint nullspace `⋂ ker(opᵢ)`, computed
/// incrementally: each map is restricted to the nullspace found so far.
pub fn joint_nullspace(ops: &[CMatrix], dim: usize, tol: &Tolerances) -> Vec<CVector> {
    let mut basis = identity(dim);
    let mut rank = dim;
    // one reference scale for the whole system, so ops that are
    // numerically zero relative to it are treated as zero maps
    let scale = ops.iter().map(|op| op.norm()).fold(0.0_f64, f64::max);
    for op in ops {
        if rank == 0 {
            break;
        }
        let restricted = op * basis.columns(0, rank);
        let inner = nullspace_scaled(&restricted.into(), scale, tol);
        let mut next = CMatrix::zeros(dim, inner.len());
        for (j, v) in inner.iter().enumerate() {
            next.set_column(j, &(basis.columns(0, rank) * v));
        }
        rank = inner.len();
        basis = CMatrix::zeros(dim, dim);
        if rank > 0 {
            basis.view_mut((0, 0), (dim, rank)).copy_from(&next);
        }
    }
    (0..rank).map(|j| basis.column(j).into()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceSide {
    /// Trace out the left (first) tensor factor.
    Left,
    /// Trace out the right (second) tensor factor.
    Right,
}

/// Partial trace of an operator on `k ⊗ m` with `dims = (dim k, dim m)`.
pub fn partial_trace(
    sigma: &CMatrix,
    side: TraceSide,
    dims: (usize, usize),
) -> Result<CMatrix> {
    let (dk, dm) = dims;
    let d = dk * dm;
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(Error::domain(format!(
            "partial_trace: operator is {}x{}, expected {}x{} for dims ({}, {})",
            sigma.nrows(),
            sigma.ncols(),
            d,
            d,
            dk,
            dm
        )));
    }
    match side {
        TraceSide::Right => {
            let mut out = CMatrix::zeros(dk, dk);
            for a1 in 0..dk {
                for a2 in 0..dk {
                    let mut s = C64::default();
                    for b in 0..dm {
                        s += sigma[(a1 * dm + b, a2 * dm + b)];
                    }
                    out[(a1, a2)] = s;
                }
            }
            Ok(out)
        }
        TraceSide::Left => {
            let mut out = CMatrix::zeros(dm, dm);
            for b1 in 0..dm {
                for b2 in 0..dm {
                    let mut s = C64::default();
                    for a in 0..dk {
                        s += sigma[(a * dm + b1, a * dm + b2)];
                    }
                    out[(b1, b2)] = s;
                }
            }
            Ok(out)
        }
    }
}

/// Modified Gram–Schmidt under the Hilbert–Schmidt inner product, with
/// one reorthogonalization pass. Vectors whose remainder drops below
/// `rank_rel` times the largest input norm are discarded.
pub fn hs_orthonormalize(span: &[CMatrix], tol: &Tolerances) -> Vec<CMatrix> {
    let max_norm = span.iter().map(frob).fold(0.0_f64, f64::max);
    if max_norm == 0.0 {
        return Vec::new();
    }
    let drop_tol = tol.rank_rel * max_norm;
    let mut out: Vec<CMatrix> = Vec::new();
    for m in span {
        let mut v = m.clone();
        for _ in 0..2 {
            for b in &out {
                let coeff = hs_inner(b, &v);
                v -= b.scale_c(coeff);
            }
        }
        let n = frob(&v);
        if n > drop_tol {
            out.push(v.unscale(n));
        }
    }
    out
}

trait ScaleC {
    fn scale_c(&self, c: C64) -> CMatrix;
}

impl ScaleC for CMatrix {
    fn scale_c(&self, s: C64) -> CMatrix {
        self.map(|x| x * s)
    }
}

/// Stack an HS-orthonormal matrix family into a `d² × k` isometry of
/// vectorized basis elements.
pub fn basis_matrix(basis: &[CMatrix]) -> CMatrix {
    if basis.is_empty() {
        return CMatrix::zeros(0, 0);
    }
    let d2 = basis[0].nrows() * basis[0].ncols();
    let mut b = CMatrix::zeros(d2, basis.len());
    for (j, m) in basis.iter().enumerate() {
        b.set_column(j, &vec_mat(m));
    }
    b
}

/// Orthogonal projector (as a `d²×d²` matrix) onto the span of an
/// HS-orthonormal matrix family.
pub fn span_projector(basis: &[CMatrix], d: usize) -> CMatrix {
    if basis.is_empty() {
        return CMatrix::zeros(d * d, d * d);
    }
    let b = basis_matrix(basis);
    &b * b.adjoint()
}

/// Orthogonal projection of `x` onto the span of an HS-orthonormal family.
pub fn project_onto_span(basis: &[CMatrix], x: &CMatrix) -> CMatrix {
    let mut p = CMatrix::zeros(x.nrows(), x.ncols());
    for b in basis {
        let coeff = hs_inner(b, x);
        p += b.scale_c(coeff);
    }
    p
}

/// Distance of `x` from the span of an HS-orthonormal family.
pub fn span_residual(basis: &[CMatrix], x: &CMatrix) -> f64 {
    frob(&(x - project_onto_span(basis, x)))
}

/// Random complex linear combination of a matrix family.
pub fn random_combination(basis: &[CMatrix], rng: &mut impl rand::Rng) -> CMatrix {
    assert!(!basis.is_empty(), "random_combination: empty family");
    let mut out = CMatrix::zeros(basis[0].nrows(), basis[0].ncols());
    for b in basis {
        let coeff = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        out += b.map(|x| x * coeff);
    }
    out
}

/// Random Hermitian element of the span of a *-closed matrix family.
pub fn random_hermitian_combination(basis: &[CMatrix], rng: &mut impl rand::Rng) -> CMatrix {
    let a = random_combination(basis, rng);
    (&a + a.adjoint()).scale(0.5)
}

/// Group ascending real values into clusters separated by more than `gap`.
/// Returns index groups relative to the input ordering.
pub fn cluster_sorted(values: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match clusters.last_mut() {
            Some(cl) if (v - values[*cl.last().unwrap()]).abs() <= gap => cl.push(i),
            _ => clusters.push(vec![i]),
        }
    }
    clusters
}

/// Eigenvalues of a general complex matrix via its Schur form.
pub fn eigenvalues(a: &CMatrix) -> Result<Vec<C64>> {
    if !a.is_square() {
        return Err(Error::domain("eigenvalues: matrix must be square"));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    // nalgebra's Schur iteration rejects the zero matrix
    if a.iter().all(|x| x.norm() == 0.0) {
        return Ok(vec![C64::default(); a.nrows()]);
    }
    let t = a
        .clone()
        .try_schur(1e-14, 100_000)
        .ok_or_else(|| Error::numerical("Schur iteration failed to converge"))?
        .unpack()
        .1;
    Ok((0..a.nrows()).map(|i| t[(i, i)]).collect())
}
