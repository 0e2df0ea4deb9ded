//! Dense complex matrices and the numerical core used by every other module.
//!
//! Matrices are stored row-major as flat `Vec<Complex64>`. Dimensions stay at or
//! below 16 (four qubits), so simple O(n^3) algorithms are exact enough and fast.
//! Composite indices follow tensor order: the leftmost factor of a Kronecker
//! product is the most significant part of the index.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default tolerance for structural checks (Hermiticity, trace, positivity).
pub const STRUCT_TOL: f64 = 1e-10;

/// Off-diagonal threshold at which the Jacobi iteration stops; guarantees an
/// eigen-residual well below 1e-9.
const JACOBI_TOL: f64 = 1e-14;

const MAX_SWEEPS: usize = 80;

// ---------------------------------------------------------------------------
// Complex matrix
// ---------------------------------------------------------------------------

/// Square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(dim: usize) -> Self {
        CMat {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = CMat::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        CMat {
            dim,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn dagger(&self) -> CMat {
        let mut out = CMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> CMat {
        let mut out = CMat::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out[(i, j)] = self[(j, i)];
            }
        }
        out
    }

    pub fn conjugate(&self) -> CMat {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> CMat {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Frobenius norm.
    pub fn fro_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from the Hermitian transpose.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                let d = (self[(i, j)] - self[(j, i)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_defect() <= tol
    }

    /// (self * other).trace() without forming the product.
    pub fn trace_product(&self, other: &CMat) -> Complex64 {
        assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    /// Replace self with (self + self^dagger)/2.
    pub fn hermitize(&mut self) {
        for i in 0..self.dim {
            for j in (i + 1)..self.dim {
                let avg = (self[(i, j)] + self[(j, i)].conj()) * 0.5;
                self[(i, j)] = avg;
                self[(j, i)] = avg.conj();
            }
            let d = self[(i, i)];
            self[(i, i)] = Complex64::new(d.re, 0.0);
        }
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

// ---------------------------------------------------------------------------
// Kets
// ---------------------------------------------------------------------------

/// Complex column vector (pure state, not necessarily normalized).
#[derive(Clone, Debug, PartialEq)]
pub struct Ket {
    data: Vec<Complex64>,
}

impl Ket {
    pub fn new(data: Vec<Complex64>) -> Self {
        Ket { data }
    }

    pub fn from_reals(data: &[f64]) -> Self {
        Ket {
            data: data.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    /// Computational basis state |index> in `dim` dimensions.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim];
        data[index] = Complex64::new(1.0, 0.0);
        Ket { data }
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalized(&self) -> Ket {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        Ket {
            data: self.data.iter().map(|z| z / n).collect(),
        }
    }

    /// <self|other>.
    pub fn dot(&self, other: &Ket) -> Complex64 {
        assert_eq!(self.dim(), other.dim());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &Ket) -> Ket {
        let mut data = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.data {
            for b in &other.data {
                data.push(a * b);
            }
        }
        Ket { data }
    }

    /// |self><self|.
    pub fn outer(&self) -> CMat {
        let n = self.dim();
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.data[i] * self.data[j].conj();
            }
        }
        m
    }

    /// <self| M |self>.
    pub fn expectation(&self, m: &CMat) -> Complex64 {
        assert_eq!(self.dim(), m.dim());
        let n = self.dim();
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += self.data[i].conj() * m[(i, j)] * self.data[j];
            }
        }
        acc
    }

    pub fn scale(&self, s: Complex64) -> Ket {
        Ket {
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Ket) -> Ket {
        assert_eq!(self.dim(), other.dim());
        Ket {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    /// M |self>.
    pub fn apply(&self, m: &CMat) -> Ket {
        assert_eq!(self.dim(), m.dim());
        let n = self.dim();
        let mut data = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n {
                data[i] += m[(i, j)] * self.data[j];
            }
        }
        Ket { data }
    }
}

// ---------------------------------------------------------------------------
// Tensor structure
// ---------------------------------------------------------------------------

/// Kronecker product; the left factor carries the most significant index.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (da, db) = (a.dim(), b.dim());
    let n = da * db;
    let mut out = CMat::zeros(n);
    for ia in 0..da {
        for ja in 0..da {
            let x = a[(ia, ja)];
            if x.norm_sqr() == 0.0 {
                continue;
            }
            for ib in 0..db {
                for jb in 0..db {
                    out[(ia * db + ib, ja * db + jb)] = x * b[(ib, jb)];
                }
            }
        }
    }
    out
}

fn decompose(mut index: usize, dims: &[usize]) -> Vec<usize> {
    // Mixed-radix digits, most significant first.
    let mut digits = vec![0usize; dims.len()];
    for k in (0..dims.len()).rev() {
        digits[k] = index % dims[k];
        index /= dims[k];
    }
    digits
}

/// Partial trace over the subsystems not listed in `keep`.
///
/// `dims` lists the subsystem dimensions (most significant first) and must
/// multiply to the matrix dimension; `keep` holds ascending subsystem indices.
pub fn partial_trace(m: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let total: usize = dims.iter().product();
    if total != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "subsystem dims {:?} do not multiply to matrix dim {}",
            dims,
            m.dim()
        )));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || keep.iter().any(|&k| k >= dims.len()) {
        return Err(Error::DimensionMismatch(format!(
            "keep set {:?} invalid for {} subsystems",
            keep,
            dims.len()
        )));
    }
    let kept_dim: usize = keep.iter().map(|&k| dims[k]).product();
    let mut out = CMat::zeros(kept_dim);
    for i in 0..m.dim() {
        let di = decompose(i, dims);
        for j in 0..m.dim() {
            let dj = decompose(j, dims);
            // Traced subsystems must agree between row and column index.
            if (0..dims.len())
                .filter(|k| !keep.contains(k))
                .any(|k| di[k] != dj[k])
            {
                continue;
            }
            let mut r = 0usize;
            let mut c = 0usize;
            for &k in keep {
                r = r * dims[k] + di[k];
                c = c * dims[k] + dj[k];
            }
            out[(r, c)] += m[(i, j)];
        }
    }
    Ok(out)
}

/// Partial transpose of a two-qubit matrix on the chosen subsystem (0 or 1).
pub fn partial_transpose(m: &CMat, subsystem: usize) -> Result<CMat> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch(format!(
            "partial transpose expects a 4x4 matrix, got {}x{}",
            m.dim(),
            m.dim()
        )));
    }
    if subsystem > 1 {
        return Err(Error::DimensionMismatch(
            "subsystem index must be 0 or 1".into(),
        ));
    }
    let mut out = CMat::zeros(4);
    for i0 in 0..2 {
        for i1 in 0..2 {
            for j0 in 0..2 {
                for j1 in 0..2 {
                    let (r, c) = if subsystem == 0 {
                        ((j0 << 1) | i1, (i0 << 1) | j1)
                    } else {
                        ((i0 << 1) | j1, (j0 << 1) | i1)
                    };
                    out[((i0 << 1) | i1, (j0 << 1) | j1)] = m[(r, c)];
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hermitian eigensolver (cyclic Jacobi)
// ---------------------------------------------------------------------------

fn off_diagonal_norm(a: &CMat) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns of a unitary matrix. Errors if the input is not Hermitian within
/// `STRUCT_TOL` scaled by the matrix norm.
pub fn herm_eigs(m: &CMat) -> Result<(Vec<f64>, CMat)> {
    let scale = m.fro_norm().max(1.0);
    if m.hermiticity_defect() > STRUCT_TOL * scale {
        return Err(Error::NotHermitian { tol: STRUCT_TOL });
    }
    let n = m.dim();
    let mut a = m.clone();
    a.hermitize();
    let mut v = CMat::identity(n);
    let stop = JACOBI_TOL * scale;

    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let abs = apq.norm();
                if abs <= stop / (n as f64) {
                    continue;
                }
                let phase = apq / abs;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                // Zero the (p,q) entry of the Hermitian 2x2 block: the rotation
                // angle solves t^2 - 2*tau*t - 1 = 0; take the small root.
                let tau = (aqq - app) / (2.0 * abs);
                let t = if tau >= 0.0 {
                    -1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let s_phase = phase * s;

                // A <- J^dagger A J with J = [[c, -s e^{i phi}], [s e^{-i phi}, c]].
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c + akq * s_phase.conj();
                    a[(k, q)] = akq * c - akp * s_phase;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c + aqk * s_phase;
                    a[(q, k)] = aqk * c - apk * s_phase.conj();
                }
                a.hermitize();

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c + vkq * s_phase.conj();
                    v[(k, q)] = vkq * c - vkp * s_phase;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    let eigs: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&x, &y| eigs[y].partial_cmp(&eigs[x]).unwrap());
    let sorted_eigs: Vec<f64> = order.iter().map(|&i| eigs[i]).collect();
    let mut sorted_v = CMat::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            sorted_v[(k, new_col)] = v[(k, old_col)];
        }
    }
    Ok((sorted_eigs, sorted_v))
}

/// Column `col` of a matrix as a ket.
pub fn column(m: &CMat, col: usize) -> Ket {
    Ket::new((0..m.dim()).map(|i| m[(i, col)]).collect())
}

/// Singular values of a square complex matrix in descending order, by
/// one-sided Jacobi orthogonalization of the columns. Unlike routes that
/// square the matrix first, small singular values come out with absolute
/// error on the order of machine epsilon times the matrix norm.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.clone();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in (i + 1)..n {
                // 2x2 Gram block of columns i and j.
                let mut gii = 0.0;
                let mut gjj = 0.0;
                let mut gij = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    gii += a[(r, i)].norm_sqr();
                    gjj += a[(r, j)].norm_sqr();
                    gij += a[(r, i)].conj() * a[(r, j)];
                }
                let mag = gij.norm();
                if mag <= 1e-300 + 1e-16 * (gii * gjj).sqrt() {
                    continue;
                }
                rotated = true;
                // Re-phase column j so the pair Gram is real, then rotate
                // both columns to orthogonality (the small-angle root).
                let rephase = (gij / mag).conj();
                let tau = (gjj - gii) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for r in 0..n {
                    let ci = a[(r, i)];
                    let cj = a[(r, j)] * rephase;
                    a[(r, i)] = ci * c - cj * s;
                    a[(r, j)] = ci * s + cj * c;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut svs: Vec<f64> = (0..n)
        .map(|j| (0..n).map(|r| a[(r, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    svs.sort_by(|x, y| y.partial_cmp(x).unwrap());
    svs
}

/// Hermitian PSD square root via eigen-decomposition; tiny negative
/// eigenvalues are clamped to zero.
pub fn sqrt_psd(m: &CMat) -> Result<CMat> {
    let (eigs, v) = herm_eigs(m)?;
    let n = m.dim();
    let mut out = CMat::zeros(n);
    for k in 0..n {
        let lam = eigs[k].max(0.0).sqrt();
        if lam == 0.0 {
            continue;
        }
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] += v[(i, k)] * v[(j, k)].conj() * lam;
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Fixed operator sets
// ---------------------------------------------------------------------------

/// Single-qubit Pauli matrices ordered {I, X, Y, Z}.
pub fn pauli(index: usize) -> CMat {
    let r = |x: f64| Complex64::new(x, 0.0);
    let i = |x: f64| Complex64::new(0.0, x);
    match index {
        0 => CMat::identity(2),
        1 => CMat::from_rows(&[vec![r(0.0), r(1.0)], vec![r(1.0), r(0.0)]]),
        2 => CMat::from_rows(&[vec![r(0.0), i(-1.0)], vec![i(1.0), r(0.0)]]),
        3 => CMat::from_rows(&[vec![r(1.0), r(0.0)], vec![r(0.0), r(-1.0)]]),
        _ => panic!("pauli index must be in 0..4"),
    }
}

///// Columns of the magic-basis unitary:
/// (|00>+|11>)/sqrt2, -i(|00>-|11>)/sqrt2, (|01>-|10>)/sqrt2, -i(|01>+|10>)/sqrt2.
pub fn magic_basis() -> CMat {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let r = |x: f64| Complex64::new(x, 0.0);
    let i = |x: f64| Complex64::new(0.0, x);
    CMat::from_rows(&[
        vec![r(h), i(-h), r(0.0), r(0.0)],
        vec![r(0.0), r(0.0), r(h), i(-h)],
        vec![r(0.0), r(0.0), r(-h), i(-h)],
        vec![r(h), i(h), r(0.0), r(0.0)],
    ])
}

///// Conjugate a two-qubit matrix into the magic basis: U^dagger m U.
pub fn magic_basis_transform(m: &CMat) -> Result<CMat> {
    if m.dim() != 4 {
        return Err(Error::DimensionMismatch(
            "magic basis transform expects a 4x4 matrix".into(),
        ));
    }
    let u = magic_basis();
    Ok(u.dagger().matmul(m).matmul(&u))
}

// ---------------------------------------------------------------------------
// Density matrices
// ---------------------------------------------------------------------------

/// Check Hermiticity, unit trace, and positivity within `tol`.
pub fn is_density(m: &CMat, tol: f64) -> bool {
    if !m.is_hermitian(tol) {
        return false;
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
        return false;
    }
    match herm_eigs(m) {
        Ok((eigs, _)) => eigs.iter().all(|&l| l >= -tol),
        Err(_) => false,
    }
}

/// Validated density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    /// Validate and wrap; rejects non-Hermitian, non-unit-trace, or
    /// non-positive input.
    pub fn new(mat: CMat) -> Result<Self> {
        Self::with_tol(mat, STRUCT_TOL)
    }

    pub fn with_tol(mut mat: CMat, tol: f64) -> Result<Self> {
        if !mat.is_hermitian(tol) {
            return Err(Error::NotDensity {
                reason: format!("Hermiticity defect {:.3e}", mat.hermiticity_defect()),
            });
        }
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::NotDensity {
                reason: format!("trace {} differs from 1", tr),
            });
        }
        mat.hermitize();
        let (eigs, _) = herm_eigs(&mat)?;
        if let Some(&worst) = eigs.last() {
            if worst < -tol {
                return Err(Error::NotDensity {
                    reason: format!("negative eigenvalue {:.3e}", worst),
                });
            }
        }
        Ok(DensityMatrix { mat })
    }

    /// Projector onto a normalized pure state.
    pub fn pure(ket: &Ket) -> Self {
        let psi = ket.normalized();
        DensityMatrix { mat: psi.outer() }
    }

    pub fn mat(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn n_qubits(&self) -> usize {
        debug_assert!(self.dim().is_power_of_two());
        self.dim().trailing_zeros() as usize
    }

    /// Partial trace down to the `keep` subsystems (qubit dims assumed).
    pub fn partial_trace_qubits(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let dims = vec![2usize; self.n_qubits()];
        let reduced = partial_trace(&self.mat, &dims, keep)?;
        DensityMatrix::new(reduced)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        herm_eigs(&self.mat).expect("density matrix is Hermitian").0
    }
}

/// Trace distance (1/2)||a - b||_1 between two density matrices.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> f64 {
    let diff = a.mat().sub(b.mat());
    let (eigs, _) = herm_eigs(&diff).expect("difference of densities is Hermitian");
    0.5 * eigs.iter().map(|l| l.abs()).sum::<f64>()
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_dimensions_and_values() {
        let a = CMat::from_rows(&[vec![c(1.0, 0.0), c(2.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 1.0)]]);
        let b = CMat::identity(2);
        let k = kron(&a, &b);
        assert_eq!(k.dim(), 4);
        assert_eq!(k[(0, 2)], c(2.0, 0.0));
        assert_eq!(k[(1, 3)], c(2.0, 0.0));
        assert_eq!(k[(2, 0)], c(0.0, 0.0));
        assert_eq!(k[(2, 2)], c(1.0, 1.0));
        assert_eq!(k[(3, 3)], c(1.0, 1.0));
    }

    #[test]
    fn kron_trace_is_product_of_traces() {
        let a = CMat::from_rows(&[vec![c(0.3, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.7, 0.0)]]);
        let b = CMat::from_rows(&[vec![c(0.6, 0.0), c(0.0, 0.0)], vec![c(0.0, 0.0), c(0.4, 0.0)]]);
        let k = kron(&a, &b);
        let ta = a.trace();
        let tb = b.trace();
        assert!((k.trace() - ta * tb).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_undoes_kron() {
        let a = CMat::from_rows(&[vec![c(0.3, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.7, 0.0)]]);
        let b = CMat::from_rows(&[vec![c(0.6, 0.0), c(0.2, 0.1)], vec![c(0.2, -0.1), c(0.4, 0.0)]]);
        let k = kron(&a, &b);
        let ra = partial_trace(&k, &[2, 2], &[0]).unwrap();
        let rb = partial_trace(&k, &[2, 2], &[1]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((ra[(i, j)] - a[(i, j)]).norm() < 1e-14, "left factor");
                assert!((rb[(i, j)] - b[(i, j)]).norm() < 1e-14, "right factor");
            }
        }
    }

    #[test]
    fn partial_trace_keeps_outer_pair_of_four_qubits() {
        // |0101><0101| on four qubits -> keep {0,3} gives |01><01|.
        let psi = Ket::basis(16, 0b0101);
        let m = psi.outer();
        let red = partial_trace(&m, &[2, 2, 2, 2], &[0, 3]).unwrap();
        assert!((red.trace().re - 1.0).abs() < 1e-14);
        assert!((red[(1, 1)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn partial_transpose_is_involutive_and_transposes_blocks() {
        let mut m = CMat::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = c((i * 4 + j) as f64, (i as f64) - (j as f64));
            }
        }
        for sub in 0..2 {
            let pt = partial_transpose(&m, sub).unwrap();
            let back = partial_transpose(&pt, sub).unwrap();
            assert_eq!(back, m);
        }
        // Subsystem 1: each 2x2 block transposed in place.
        let pt = partial_transpose(&m, 1).unwrap();
        assert_eq!(pt[(0, 1)], m[(1, 0)]);
        assert_eq!(pt[(2, 3)], m[(3, 2)]);
        assert_eq!(pt[(0, 2)], m[(0, 2)]);
        // Full transpose = composition of both partial transposes.
        let both = partial_transpose(&partial_transpose(&m, 0).unwrap(), 1).unwrap();
        assert_eq!(both, m.transpose());
    }

    #[test]
    fn herm_eigs_recovers_spectrum_of_diagonal_plus_coupling() {
        // 2x2 with known eigenvalues 2 and -1.
        let m = CMat::from_rows(&[
            vec![c(0.5, 0.0), c(0.0, -1.5)],
            vec![c(0.0, 1.5), c(0.5, 0.0)],
        ]);
        let (eigs, v) = herm_eigs(&m).unwrap();
        assert!((eigs[0] - 2.0).abs() < 1e-12);
        assert!((eigs[1] + 1.0).abs() < 1e-12);
        // Residual || M v - lambda v ||.
        for k in 0..2 {
            let vk = column(&v, k);
            let mv = vk.apply(&m);
            let res: f64 = (0..2)
                .map(|i| (mv.data()[i] - vk.data()[i] * eigs[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-12);
        }
    }

    #[test]
    fn herm_eigs_residual_on_random_16x16() {
        // Deterministic pseudo-random Hermitian matrix.
        let mut seed = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let n = 16;
        let mut m = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = c(next(), next());
            }
        }
        let h = m.add(&m.dagger()).scale(c(0.5, 0.0));
        let (eigs, v) = herm_eigs(&h).unwrap();
        assert!((eigs.iter().sum::<f64>() - h.trace().re).abs() < 1e-9);
        for k in 0..n {
            let vk = column(&v, k);
            let hv = vk.apply(&h);
            let res: f64 = (0..n)
                .map(|i| (hv.data()[i] - vk.data()[i] * eigs[k]).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-9, "residual {res} too large for eigenpair {k}");
        }
        // Eigenvalues sorted descending.
        assert!(eigs.windows(2).all(|w| w[0] >= w[1] - 1e-12));
    }

    #[test]
    fn singular_values_of_known_matrices() {
        // diag(3, 2i, 0, -1): singular values {3, 2, 1, 0}.
        let mut d = CMat::zeros(4);
        d[(0, 0)] = c(3.0, 0.0);
        d[(1, 1)] = c(0.0, 2.0);
        d[(3, 3)] = c(-1.0, 0.0);
        let svs = singular_values(&d);
        for (got, want) in svs.iter().zip([3.0, 2.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-14, "{svs:?}");
        }
        // A rank-one outer product u v^dagger has one singular value |u||v|.
        let u = Ket::from_reals(&[1.0, 2.0, 0.0, -1.0]);
        let v = Ket::new(vec![c(0.5, 0.5), c(0.0, 0.0), c(1.0, 0.0), c(0.0, -1.0)]);
        let mut m = CMat::zeros(4);
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = u.data()[i] * v.data()[j].conj();
            }
        }
        let svs = singular_values(&m);
        assert!((svs[0] - u.norm() * v.norm()).abs() < 1e-13);
        assert!(svs[1] < 1e-13 && svs[3] >= 0.0);
    }

    #[test]
    fn herm_eigs_rejects_non_hermitian() {
        let m = CMat::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!(herm_eigs(&m).is_err());
    }

    #[test]
    fn magic_basis_is_unitary() {
        let u = magic_basis();
        let prod = u.dagger().matmul(&u);
        let defect: f64 = prod.sub(&CMat::identity(4)).fro_norm();
        assert!(defect < 1e-14);
    }

    #[test]
    fn identity_is_not_a_density_matrix() {
        assert!(!is_density(&CMat::identity(4), 1e-10));
        assert!(is_density(&CMat::identity(4).scale(c(0.25, 0.0)), 1e-10));
    }

    #[test]
    fn density_constructor_rejects_negative_eigenvalue() {
        let mut m = CMat::zeros(2);
        m[(0, 0)] = c(1.5, 0.0);
        m[(1, 1)] = c(-0.5, 0.0);
        assert!(DensityMatrix::new(m).is_err());
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let psi = Ket::from_reals(&[0.6, 0.8]);
        let m = psi.outer().scale(c(0.9, 0.0)).add(&CMat::identity(2).scale(c(0.05, 0.0)));
        let r = sqrt_psd(&m).unwrap();
        let back = r.matmul(&r);
        assert!(back.sub(&m).fro_norm() < 1e-12);
    }

    #[test]
    fn trace_distance_of_orthogonal_pures_is_one() {
        let a = DensityMatrix::pure(&Ket::basis(2, 0));
        let b = DensityMatrix::pure(&Ket::basis(2, 1));
        assert!((trace_distance(&a, &b) - 1.0).abs() < 1e-14);
        assert!(trace_distance(&a, &a) < 1e-14);
    }
}
