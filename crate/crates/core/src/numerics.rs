//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Everything here works on [`CMatrix`] (a `nalgebra` dense matrix of
//! `Complex<f64>`). Determinants are always taken in the log domain, base 2.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Tolerance used when deciding whether a matrix is Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Thin singular value decomposition `A = U diag(s) V^H`, singular values
/// sorted in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let mut us = self.u.clone();
        for (j, &sj) in self.s.iter().enumerate() {
            us.column_mut(j).scale_mut(sj);
        }
        us * self.v.adjoint()
    }
}

pub fn is_finite(a: &CMatrix) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_finite(a: &CMatrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::invalid(format!("{what}: empty matrix")));
    }
    if !is_finite(a) {
        return Err(Error::invalid(format!("{what}: non-finite entry")));
    }
    Ok(())
}

pub fn frobenius_sq(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn frobenius(a: &CMatrix) -> f64 {
    frobenius_sq(a).sqrt()
}

/// `‖A − B‖_F / ‖B‖_F`, falling back to the absolute error when `B = 0`.
pub fn rel_frobenius_err(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = frobenius(&(a - b));
    let scale = frobenius(b);
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn real_diag(d: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&CVector::from_iterator(d.len(), d.iter().map(|&x| C64::new(x, 0.0))))
}

pub fn svd(a: &CMatrix) -> Result<Svd> {
    ensure_finite(a, "svd")?;
    let dec = a.clone().svd(true, true);
    let (u, v_t) = match (dec.u, dec.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::domain("svd: factor computation failed")),
    };
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));

    let v = v_t.adjoint();
    let mut u_sorted = CMatrix::zeros(u.nrows(), k);
    let mut v_sorted = CMatrix::zeros(v.nrows(), k);
    let mut s = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        u_sorted.set_column(dst, &u.column(src));
        v_sorted.set_column(dst, &v.column(src));
        s.push(dec.singular_values[src].max(0.0));
    }
    Ok(Svd {
        u: u_sorted,
        s,
        v: v_sorted,
    })
}

/// Checks Hermitian symmetry and returns `(A + A^H) / 2`.
fn symmetrized(a: &CMatrix, what: &str) -> Result<CMatrix> {
    ensure_finite(a, what)?;
    if !a.is_square() {
        return Err(Error::invalid(format!(
            "{what}: expected square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let asym = frobenius(&(a - a.adjoint()));
    let scale = frobenius(a).max(1.0);
    if asym > HERMITIAN_TOL * scale {
        return Err(Error::domain(format!(
            "{what}: matrix is not Hermitian (asymmetry {asym:.3e})"
        )));
    }
    Ok((a + a.adjoint()).scale(0.5))
}

/// Lower-triangular `L` with `A = L L^H`; fails on a non-positive pivot.
fn cholesky(a: &CMatrix, what: &str) -> Result<CMatrix> {
    let n = a.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = a[(j, j)].re;
        for k in 0..j {
            pivot -= l[(j, k)].norm_sqr();
        }
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::domain(format!(
                "{what}: not positive definite (pivot {pivot:.3e} at {j})"
            )));
        }
        let ljj = pivot.sqrt();
        l[(j, j)] = C64::new(ljj, 0.0);
        for i in (j + 1)..n {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / ljj;
        }
    }
    Ok(l)
}

/// `log2 det(A)` for a Hermitian positive definite `A`, via Cholesky.
pub fn logdet2_hpd(a: &CMatrix) -> Result<f64> {
    let sym = symmetrized(a, "logdet2_hpd")?;
    let l = cholesky(&sym, "logdet2_hpd")?;
    Ok((0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.log2()).sum())
}

/// Standard Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    ensure_finite(b, "solve_hpd")?;
    if a.nrows() != b.nrows() {
        return Err(Error::invalid(format!(
            "solve_hpd: {}x{} system with {} right-hand rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let sym = symmetrized(a, "solve_hpd")?;
    let l = cholesky(&sym, "solve_hpd")?;
    let y = l
        .solve_lower_triangular(b)
        .ok_or_else(|| Error::domain("solve_hpd: singular factor"))?;
    l.adjoint()
        .solve_upper_triangular(&y)
        .ok_or_else(|| Error::domain("solve_hpd: singular factor"))
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky_lower(a: &CMatrix) -> Result<CMatrix> {
    let sym = symmetrized(a, "cholesky")?;
    cholesky(&sym, "cholesky")
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    let sym = symmetrized(a, "hermitian_eigenvalues")?;
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}
