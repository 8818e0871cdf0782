//! Dense complex matrices for small dimensions.
//!
//! Everything here is sized for qubits (d = 2) with generic support up to
//! d = 8. Hermitian eigendecomposition is closed-form for d = 2 and uses a
//! cyclic Jacobi sweep on the real symmetric embedding otherwise.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 8;

/// Tolerance used for Hermiticity checks.
pub const HERM_TOL: f64 = 1e-10;

/// Eigenvalues closer than this are merged into one subspace.
pub const DEGENERACY_GAP: f64 = 1e-10;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
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
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = c(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from `dim * dim` row-major entries.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::BadShape {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Ok(CMat { dim, data })
    }

    /// Builds a matrix from rows. Panics if the rows are ragged; use
    /// [`CMat::from_vec`] for untrusted input.
    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Self {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), dim, "ragged matrix rows");
            data.extend_from_slice(r);
        }
        CMat { dim, data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        CMat { dim, data }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = c(v, 0.0);
        }
        m
    }

    /// |v⟩⟨v| for a (not necessarily normalized) vector.
    pub fn outer(v: &[Complex64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        self.scale_c(c(s, 0.0))
    }

    pub fn scale_c(&self, s: Complex64) -> Self {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &CMat) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    /// Hilbert–Schmidt inner product tr(A† B).
    pub fn hs_inner(&self, other: &CMat) -> Complex64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance; `f64::INFINITY` if dimensions differ.
    pub fn max_abs_diff(&self, other: &CMat) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &CMat, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                err = err.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        err
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_error() < tol
    }

    /// (A + A†)/2
    pub fn hermitian_part(&self) -> Self {
        (self + &self.adjoint()).scale(0.5)
    }

    /// Max-entry deviation of A†A from the identity.
    pub fn unitarity_error(&self) -> f64 {
        (&self.adjoint() * self).max_abs_diff(&CMat::identity(self.dim))
    }

    fn check_hermitian(&self) -> Result<()> {
        if self.dim == 0 || self.dim > MAX_DIM {
            return Err(Error::UnsupportedDim(self.dim));
        }
        let err = self.hermiticity_error();
        if !(err < HERM_TOL) {
            return Err(Error::NotHermitian(err));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMat {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Mul for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let n = self.dim;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Add for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale(-1.0)
    }
}

impl fmt::Debug for CMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMat({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Pauli matrices and friends.
pub mod pauli {
    use super::{c, CMat};

    pub fn i2() -> CMat {
        CMat::identity(2)
    }

    pub fn x() -> CMat {
        CMat::from_rows(&[[c(0., 0.), c(1., 0.)], [c(1., 0.), c(0., 0.)]])
    }

    pub fn y() -> CMat {
        CMat::from_rows(&[[c(0., 0.), c(0., -1.)], [c(0., 1.), c(0., 0.)]])
    }

    pub fn z() -> CMat {
        CMat::from_rows(&[[c(1., 0.), c(0., 0.)], [c(0., 0.), c(-1., 0.)]])
    }

    pub fn h() -> CMat {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMat::from_rows(&[[c(s, 0.), c(s, 0.)], [c(s, 0.), c(-s, 0.)]])
    }

    /// [I, X, Y, Z]
    pub fn basis() -> [CMat; 4] {
        [i2(), x(), y(), z()]
    }
}

/// One eigenspace of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct EigenSpace {
    pub value: f64,
    pub multiplicity: usize,
    pub projector: CMat,
}

/// Spectral decomposition of a Hermitian matrix.
///
/// `eigenvalues` lists every eigenvalue with multiplicity, ascending.
/// `spaces` holds one projector per distinct eigenvalue (eigenvalues closer
/// than [`DEGENERACY_GAP`] share a projector), also ascending.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub eigenvalues: Vec<f64>,
    pub spaces: Vec<EigenSpace>,
}

impl HermEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Σ f(λ) P_λ
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMat {
        let mut out = CMat::zeros(self.dim());
        for s in &self.spaces {
            out = &out + &s.projector.scale(f(s.value));
        }
        out
    }

    pub fn reconstruct(&self) -> CMat {
        self.map(|x| x)
    }

    /// Sum of projectors whose eigenvalue satisfies `pred`.
    pub fn projector_where(&self, pred: impl Fn(f64) -> bool) -> CMat {
        let mut out = CMat::zeros(self.dim());
        for s in self.spaces.iter().filter(|s| pred(s.value)) {
            out = &out + &s.projector;
        }
        out
    }
}

/// Eigendecomposition of a Hermitian matrix (dim ≤ 8).
pub fn herm_eig(a: &CMat) -> Result<HermEig> {
    a.check_hermitian()?;
    Ok(match a.dim {
        1 => HermEig {
            eigenvalues: vec![a[(0, 0)].re],
            spaces: vec![EigenSpace {
                value: a[(0, 0)].re,
                multiplicity: 1,
                projector: CMat::identity(1),
            }],
        },
        2 => eig2(a),
        _ => eig_jacobi(a),
    })
}

fn eig2(a: &CMat) -> HermEig {
    let p = a[(0, 0)].re;
    let q = a[(1, 1)].re;
    let b = (a[(0, 1)] + a[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (p + q);
    let half = 0.5 * (p - q);
    let r = (half * half + b.norm_sqr()).sqrt();
    if 2.0 * r < DEGENERACY_GAP {
        return HermEig {
            eigenvalues: vec![mean, mean],
            spaces: vec![EigenSpace {
                value: mean,
                multiplicity: 2,
                projector: CMat::identity(2),
            }],
        };
    }
    let lo = mean - r;
    let hi = mean + r;
    // P_hi = (A - lo I) / 2r, P_lo = I - P_hi, built from the symmetrized entries.
    let inv = 1.0 / (2.0 * r);
    let p_hi = CMat::from_rows(&[
        [c((p - lo) * inv, 0.0), b * inv],
        [b.conj() * inv, c((q - lo) * inv, 0.0)],
    ]);
    let p_lo = &CMat::identity(2) - &p_hi;
    HermEig {
        eigenvalues: vec![lo, hi],
        spaces: vec![
            EigenSpace {
                value: lo,
                multiplicity: 1,
                projector: p_lo,
            },
            EigenSpace {
                value: hi,
                multiplicity: 1,
                projector: p_hi,
            },
        ],
    }
}

/// Cyclic Jacobi on the 2d×2d real symmetric embedding [[Re A, -Im A], [Im A, Re A]].
/// Every eigenvalue of A appears twice there; the real projector onto the
/// doubled eigenspace is the realification of the complex projector.
fn eig_jacobi(a: &CMat) -> HermEig {
    let d = a.dim;
    let n = 2 * d;
    let mut m = vec![0.0f64; n * n];
    for i in 0..d {
        for j in 0..d {
            // symmetrize to kill sub-tolerance anti-Hermitian noise
            let z = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            m[i * n + j] = z.re;
            m[(i + d) * n + (j + d)] = z.re;
            m[i * n + (j + d)] = -z.im;
            m[(i + d) * n + j] = z.im;
        }
    }
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i * n + j] * m[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_TOL {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let app = m[p * n + p];
                let aqq = m[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = cs * mkp - sn * mkq;
                    m[k * n + q] = sn * mkp + cs * mkq;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = cs * mpk - sn * mqk;
                    m[q * n + k] = sn * mpk + cs * mqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = cs * vkp - sn * vkq;
                    v[k * n + q] = sn * vkp + cs * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| m[x * n + x].total_cmp(&m[y * n + y]));

    let mut eigenvalues = Vec::with_capacity(d);
    let mut spaces = Vec::new();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && m[order[end] * n + order[end]] - m[order[end - 1] * n + order[end - 1]]
                < DEGENERACY_GAP
        {
            end += 1;
        }
        let group = &order[start..end];
        let value = group.iter().map(|&k| m[k * n + k]).sum::<f64>() / group.len() as f64;
        let mut q = vec![0.0f64; n * n];
        for &k in group {
            for i in 0..n {
                let vi = v[i * n + k];
                for j in 0..n {
                    q[i * n + j] += vi * v[j * n + k];
                }
            }
        }
        let projector = CMat::from_fn(d, |i, j| c(q[i * n + j], q[(i + d) * n + j]));
        let multiplicity = (group.len() / 2).max(1);
        eigenvalues.extend(std::iter::repeat_n(value, multiplicity));
        spaces.push(EigenSpace {
            value,
            multiplicity,
            projector,
        });
        start = end;
    }
    HermEig {
        eigenvalues,
        spaces,
    }
}

/// Sum of singular values.
pub fn trace_norm(a: &CMat) -> f64 {
    if a.dim == 0 {
        return 0.0;
    }
    if a.is_hermitian(HERM_TOL) {
        if let Ok(e) = herm_eig(&a.hermitian_part()) {
            return e.eigenvalues.iter().map(|x| x.abs()).sum();
        }
    }
    let gram = &a.adjoint() * a;
    match herm_eig(&gram.hermitian_part()) {
        Ok(e) => e.eigenvalues.iter().map(|x| x.max(0.0).sqrt()).sum(),
        Err(_) => f64::NAN,
    }
}

pub fn min_eigenvalue(a: &CMat) -> Result<f64> {
    Ok(herm_eig(a)?.eigenvalues[0])
}

/// Principal square root of a PSD matrix; negative eigenvalues are clipped to zero.
pub fn psd_sqrt(a: &CMat) -> Result<CMat> {
    Ok(herm_eig(a)?.map(|x| x.max(0.0).sqrt()))
}
