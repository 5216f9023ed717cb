//! Dense complex linear algebra at small dimension, classical and quantum
//! entropies, and a cyclic Jacobi eigen-solver for Hermitian matrices.
//!
//! Everything here works on dimensions of at most a few dozen, so the
//! representation is a plain row-major `Vec<Complex64>`.

use std::fmt;
use std::ops::{Index, IndexMut};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance for Hermiticity and unit-trace checks on density matrices.
pub const DENSITY_TOL: f64 = 1e-10;
/// Eigenvalues in `[-EIG_CLAMP, 0)` are treated as round-off and clamped to 0.
pub const EIG_CLAMP: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_OFF_TOL: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `<a|b>`, conjugate-linear in the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm_sqr(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// `sum_k coeff_k * v_k` over vectors of equal length.
pub fn combine(terms: &[(C64, &[C64])]) -> Vec<C64> {
    let n = terms.first().map_or(0, |(_, v)| v.len());
    let mut out = vec![C64::default(); n];
    for (coef, v) in terms {
        debug_assert_eq!(v.len(), n);
        for (o, x) in out.iter_mut().zip(v.iter()) {
            *o += coef * x;
        }
    }
    out
}

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.4}{:+.4}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::default(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |r, c| if r == c { cr(1.0) } else { C64::default() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| if r == c { cr(diag[r]) } else { C64::default() })
    }

    /// `|v><v|`
    pub fn projector(v: &[C64]) -> Self {
        Self::from_fn(v.len(), v.len(), |r, c| v[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn set_column(&mut self, c: usize, v: &[C64]) {
        assert_eq!(v.len(), self.rows);
        for (r, x) in v.iter().enumerate() {
            self[(r, c)] = *x;
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn add_assign_scaled(&mut self, other: &Self, s: C64) -> Result<()> {
        self.check_same_shape(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == C64::default() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::Dimension(format!(
                "cannot apply {}x{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum()).collect())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        Self::from_fn(rows, cols, |r, c| {
            self[(r / other.rows, c / other.cols)] * other[(r % other.rows, c % other.cols)]
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max))
    }

    /// `max |M[i][j] - conj(M[j][i])|`, or `None` for non-square input.
    pub fn hermitian_deviation(&self) -> Option<f64> {
        if !self.is_square() {
            return None;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        Some(dev)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation().is_some_and(|d| d <= tol)
    }

    /// Max entrywise deviation of `M^† M` from the identity.
    pub fn unitarity_residual(&self) -> Result<f64> {
        if !self.is_square() {
            return Err(Error::Dimension("unitarity check needs a square matrix".into()));
        }
        self.adjoint().mul(self)?.max_abs_diff(&Self::identity(self.rows))
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Dimension(format!("{}x{} vs {}x{}", self.rows, self.cols, other.rows, other.cols)));
        }
        Ok(())
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                if r != c {
                    s += self[(r, c)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }
}

/// A probability distribution validated on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    /// Entries must lie in `[-1e-12, 1 + 1e-12]` and sum to 1 within `1e-9`.
    /// Entries within the slack are clamped into `[0, 1]`.
    pub fn new(p: Vec<f64>) -> Result<Self> {
        for (i, &x) in p.iter().enumerate() {
            if !x.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&x) {
                return Err(Error::Domain(format!("probability {i} = {x} outside [0, 1]")));
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Domain(format!("probabilities sum to {sum}, not 1")));
        }
        Ok(Self(p.into_iter().map(|x| x.clamp(0.0, 1.0)).collect()))
    }

    /// Normalizes non-negative weights. Fails on an all-zero or negative input.
    pub fn from_weights(w: &[f64]) -> Result<Self> {
        if w.iter().any(|&x| x < -1e-12 || !x.is_finite()) {
            return Err(Error::Domain("negative or non-finite weight".into()));
        }
        let total: f64 = w.iter().map(|x| x.max(0.0)).sum();
        if total <= 0.0 {
            return Err(Error::Domain("weights sum to zero".into()));
        }
        Self::new(w.iter().map(|x| x.max(0.0) / total).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[inline]
fn plogp(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// `h(x) = -x log2 x - (1-x) log2 (1-x)`, with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !x.is_finite() || !(-1e-12..=1.0 + 1e-12).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    Ok(h2(x.clamp(0.0, 1.0)))
}

/// Unchecked binary entropy for internal use on already-clamped arguments.
#[inline]
pub(crate) fn h2(x: f64) -> f64 {
    plogp(x) + plogp(1.0 - x)
}

/// Shannon entropy in bits.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    p.as_slice().iter().map(|&x| plogp(x)).sum()
}

/// Eigen-decomposition of a Hermitian matrix: eigenvalues sorted descending,
/// eigenvectors as the matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl EigenDecomposition {
    /// `V diag(values) V^†`
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |r, c| (0..n).map(|k| v[(r, k)] * self.values[k] * v[(c, k)].conj()).sum())
    }
}

/// Cyclic Jacobi eigen-solver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `A[p][q]` and then
/// applies a real Givens rotation, so the iteration stays in the complex
/// Hermitian class without forming a real embedding.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<EigenDecomposition> {
    let dev =
        m.hermitian_deviation().ok_or_else(|| Error::Dimension(format!("{}x{} is not square", m.rows, m.cols)))?;
    let scale = m.data.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if dev > 1e-9 * scale {
        return Err(Error::NotHermitian(dev));
    }
    let n = m.rows;
    let mut a = m.clone();
    // symmetrize away the allowed round-off so the rotations see an exact Hermitian input
    for r in 0..n {
        a[(r, r)] = cr(a[(r, r)].re);
        for c in r + 1..n {
            let avg = (a[(r, c)] + a[(c, r)].conj()) * 0.5;
            a[(r, c)] = avg;
            a[(c, r)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);

    let tol = JACOBI_OFF_TOL * scale;
    let mut sweeps = 0;
    while a.off_diagonal_norm() > tol {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Convergence { sweeps, off: a.off_diagonal_norm() });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r < 1e-300 {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                // G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] on (p, q)
                let gqp = -phase.conj() * sn;
                let gqq = phase.conj() * cs;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * cs + akq * gqp;
                    a[(k, q)] = akp * sn + akq * gqq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * cs + aqk * gqp.conj();
                    a[(q, k)] = apk * sn + aqk * gqq.conj();
                }
                a[(p, q)] = C64::default();
                a[(q, p)] = C64::default();
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * cs + vkq * gqp;
                    v[(k, q)] = vkp * sn + vkq * gqq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(EigenDecomposition { values, vectors })
}

fn check_density(rho: &ComplexMatrix) -> Result<()> {
    let dev = rho.hermitian_deviation().ok_or_else(|| Error::Dimension("density matrix must be square".into()))?;
    if dev > DENSITY_TOL {
        return Err(Error::NotHermitian(dev));
    }
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("trace {tr} is not 1")));
    }
    Ok(())
}

/// Entropy of a spectrum, clamping round-off negatives.
fn spectrum_entropy(values: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &l in values {
        if l < -EIG_CLAMP {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {l:e}")));
        }
        s += plogp(l.max(0.0));
    }
    Ok(s)
}

/// `S(rho) = -sum_i l_i log2 l_i` over the spectrum of a density matrix.
pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    check_density(rho)?;
    spectrum_entropy(&eig_hermitian(rho)?.values)
}

/// Which factor of a bipartite space to keep in [`partial_trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    First,
    Second,
}

/// Partial trace of an operator on `C^{d_a} ⊗ C^{d_b}`.
pub fn partial_trace(rho: &ComplexMatrix, dims: (usize, usize), keep: Keep) -> Result<ComplexMatrix> {
    let (da, db) = dims;
    if !rho.is_square() || rho.rows != da * db {
        return Err(Error::Dimension(format!(
            "{}x{} operator does not act on {da}x{db} = {} dimensions",
            rho.rows,
            rho.cols,
            da * db
        )));
    }
    Ok(match keep {
        Keep::First => ComplexMatrix::from_fn(da, da, |i, j| (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum()),
        Keep::Second => ComplexMatrix::from_fn(db, db, |i, j| (0..da).map(|k| rho[(k * db + i, k * db + j)]).sum()),
    })
}

/// `S(A|E) = S(rho_AE) - S(rho_E)` for `rho` on `C^{d_a} ⊗ C^{d_e}`.
pub fn exact_conditional_entropy(rho: &ComplexMatrix, dims: (usize, usize)) -> Result<f64> {
    check_density(rho)?;
    let rho_e = partial_trace(rho, dims, Keep::Second)?;
    let joint = spectrum_entropy(&eig_hermitian(rho)?.values)?;
    let marginal = spectrum_entropy(&eig_hermitian(&rho_e)?.values)?;
    Ok(joint - marginal)
}
