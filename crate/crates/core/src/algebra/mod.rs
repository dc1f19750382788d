//! Two-by-two real matrix representation of complex quantities.
//!
//! A complex number `a + jb` is carried either as a column vector
//! [`ClarkeVec`] `[a, b]` or as the matrix `[[a, -b], [b, a]]` ([`Mat2`]).
//! General `Mat2` values (four degrees of freedom) appear whenever an
//! operator treats the two components asymmetrically, e.g. the projectors
//! used to take real or imaginary parts. Network-wide operators are
//! [`BlockMatrix`] values: an `n x n` grid of `Mat2` blocks stored as a dense
//! `2n x 2n` real matrix.
//!
//! Everything here is generic over the [`Scalar`] type so the same code runs
//! in `f32` and `f64`.

mod lu;

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Float, FloatConst};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use lu::Lu;

/// Floating point type usable by the numerical core: `f32` or `f64`.
pub trait Scalar:
    Float + FloatConst + fmt::Debug + fmt::Display + Default + Sum + Send + Sync + 'static
{
    /// Pivot threshold, relative to matrix scale, below which a factorization is
    /// reported as singular.
    fn singular_tol() -> Self {
        let floor = Self::from(1e-12).unwrap();
        let eps = Self::epsilon() * Self::from(16.0).unwrap();
        if eps > floor {
            eps
        } else {
            floor
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into the working scalar type.
#[inline]
pub fn lit<T: Scalar>(x: f64) -> T {
    T::from(x).expect("literal representable in scalar type")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("block index ({row}, {col}) out of range for {n} x {n} block matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("matrix is singular (condition estimate {condition_estimate:.3e})")]
    SingularMatrix { condition_estimate: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Normalizes an angle into `(-pi, pi]`.
pub fn wrap_angle<T: Scalar>(theta: T) -> T {
    let pi = T::PI();
    let two_pi = pi + pi;
    let mut a = theta % two_pi;
    if a > pi {
        a = a - two_pi;
    } else if a <= -pi {
        a = a + two_pi;
    }
    a
}

/// A dynamic Clarke (or Park) vector `[d, q]`, in per unit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ClarkeVec<T> {
    pub d: T,
    pub q: T,
}

impl<T: Scalar> ClarkeVec<T> {
    pub fn new(d: T, q: T) -> Self {
        Self { d, q }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn from_polar(magnitude: T, angle: T) -> Self {
        Self::new(magnitude * angle.cos(), magnitude * angle.sin())
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex<T> {
        Complex::new(self.d, self.q)
    }

    pub fn magnitude(self) -> T {
        self.d.hypot(self.q)
    }

    /// Angle in `(-pi, pi]`.
    pub fn angle(self) -> T {
        let a = self.q.atan2(self.d);
        if a <= -T::PI() {
            T::PI()
        } else {
            a
        }
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.d * k, self.q * k)
    }

    pub fn max_abs(self) -> T {
        self.d.abs().max(self.q.abs())
    }
}

impl<T: Scalar> Add for ClarkeVec<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.d + rhs.d, self.q + rhs.q)
    }
}

impl<T: Scalar> Sub for ClarkeVec<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.d - rhs.d, self.q - rhs.q)
    }
}

impl<T: Scalar> Neg for ClarkeVec<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.d, -self.q)
    }
}

impl<T: Scalar> From<Complex<T>> for ClarkeVec<T> {
    fn from(z: Complex<T>) -> Self {
        Self::from_complex(z)
    }
}

impl<T: Scalar> From<ClarkeVec<T>> for Complex<T> {
    fn from(v: ClarkeVec<T>) -> Self {
        v.to_complex()
    }
}

/// Real 2x2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2<T> {
    pub m11: T,
    pub m12: T,
    pub m21: T,
    pub m22: T,
}

impl<T: Scalar> Mat2<T> {
    pub fn new(m11: T, m12: T, m21: T, m22: T) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    pub fn identity() -> Self {
        Self::diag(T::one(), T::one())
    }

    pub fn diag(a: T, b: T) -> Self {
        Self::new(a, T::zero(), T::zero(), b)
    }

    /// `[[re, -im], [im, re]]`.
    pub fn from_complex(z: Complex<T>) -> Self {
        Self::new(z.re, -z.im, z.im, z.re)
    }

    /// `k` times the identity.
    pub fn from_real(k: T) -> Self {
        Self::diag(k, k)
    }

    /// Reads the complex number off the first column. Only meaningful for
    /// complex-representable matrices.
    pub fn to_complex(self) -> Complex<T> {
        Complex::new(self.m11, self.m21)
    }

    pub fn is_complex_representable(self, tol: T) -> bool {
        (self.m11 - self.m22).abs() <= tol && (self.m12 + self.m21).abs() <= tol
    }

    pub fn det(self) -> T {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn transpose(self) -> Self {
        Self::new(self.m11, self.m21, self.m12, self.m22)
    }

    pub fn try_inverse(self) -> Result<Self, AlgebraError> {
        let det = self.det();
        let scale = self.max_abs();
        if scale == T::zero() || det.abs() <= T::singular_tol() * scale * scale {
            let cond = if det == T::zero() {
                f64::INFINITY
            } else {
                (scale * scale / det.abs()).to_f64().unwrap_or(f64::INFINITY)
            };
            return Err(AlgebraError::SingularMatrix {
                condition_estimate: cond,
            });
        }
        let inv = T::one() / det;
        Ok(Self::new(
            self.m22 * inv,
            -self.m12 * inv,
            -self.m21 * inv,
            self.m11 * inv,
        ))
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.m11 * k, self.m12 * k, self.m21 * k, self.m22 * k)
    }

    pub fn max_abs(self) -> T {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }

    pub fn apply(self, v: ClarkeVec<T>) -> ClarkeVec<T> {
        ClarkeVec::new(
            self.m11 * v.d + self.m12 * v.q,
            self.m21 * v.d + self.m22 * v.q,
        )
    }
}

/// Matrix form of a complex number.
pub fn mat2_of_complex<T: Scalar>(z: Complex<T>) -> Mat2<T> {
    Mat2::from_complex(z)
}

/// Matrix form of `exp(j theta)`.
pub fn rotation<T: Scalar>(theta: T) -> Mat2<T> {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, -s, s, c)
}

/// `[a, b] -> [a, 0]`: real part.
pub fn projector_re<T: Scalar>() -> Mat2<T> {
    Mat2::new(T::one(), T::zero(), T::zero(), T::zero())
}

/// `[a, b] -> [b, 0]`: imaginary part, placed in the first component.
pub fn projector_im<T: Scalar>() -> Mat2<T> {
    Mat2::new(T::zero(), T::one(), T::zero(), T::zero())
}

/// `[a, b] -> [a, -b]`: complex conjugate.
pub fn conjugator<T: Scalar>() -> Mat2<T> {
    Mat2::diag(T::one(), -T::one())
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(
            self.m11 + r.m11,
            self.m12 + r.m12,
            self.m21 + r.m21,
            self.m22 + r.m22,
        )
    }
}

impl<T: Scalar> AddAssign for Mat2<T> {
    fn add_assign(&mut self, r: Self) {
        *self = *self + r;
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        Self::new(
            self.m11 - r.m11,
            self.m12 - r.m12,
            self.m21 - r.m21,
            self.m22 - r.m22,
        )
    }
}

impl<T: Scalar> SubAssign for Mat2<T> {
    fn sub_assign(&mut self, r: Self) {
        *self = *self - r;
    }
}

impl<T: Scalar> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-T::one())
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, r: Self) -> Self {
        Self::new(
            self.m11 * r.m11 + self.m12 * r.m21,
            self.m11 * r.m12 + self.m12 * r.m22,
            self.m21 * r.m11 + self.m22 * r.m21,
            self.m21 * r.m12 + self.m22 * r.m22,
        )
    }
}

impl<T: Scalar> Mul<ClarkeVec<T>> for Mat2<T> {
    type Output = ClarkeVec<T>;
    fn mul(self, v: ClarkeVec<T>) -> ClarkeVec<T> {
        self.apply(v)
    }
}

/// An `n x n` grid of [`Mat2`] blocks, stored as a dense row-major `2n x 2n`
/// real matrix. Block `(i, j)` couples bus `i` to bus `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Scalar> BlockMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); 4 * n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for k in 0..2 * n {
            m.data[k * 2 * n + k] = T::one();
        }
        m
    }

    /// Assembles a block matrix from sparse block entries. Unspecified blocks are zero;
    /// repeated entries overwrite.
    pub fn assemble<I>(n: usize, entries: I) -> Result<Self, AlgebraError>
    where
        I: IntoIterator<Item = ((usize, usize), Mat2<T>)>,
    {
        let mut m = Self::zeros(n);
        for ((row, col), block) in entries {
            if row >= n || col >= n {
                return Err(AlgebraError::IndexOutOfRange { row, col, n });
            }
            m.set_block(row, col, block);
        }
        Ok(m)
    }

    pub fn block_diag(blocks: &[Mat2<T>]) -> Self {
        let mut m = Self::zeros(blocks.len());
        for (k, b) in blocks.iter().enumerate() {
            m.set_block(k, k, *b);
        }
        m
    }

    /// Block form of a row-major `n x n` complex matrix.
    pub fn from_complex(n: usize, z: &[Complex<T>]) -> Result<Self, AlgebraError> {
        if z.len() != n * n {
            return Err(AlgebraError::DimensionMismatch {
                expected: n * n,
                got: z.len(),
            });
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.set_block(i, j, Mat2::from_complex(z[i * n + j]));
            }
        }
        Ok(m)
    }

    /// Wraps a flat row-major `2n x 2n` matrix.
    pub fn from_flat(n: usize, data: Vec<T>) -> Result<Self, AlgebraError> {
        if data.len() != 4 * n * n {
            return Err(AlgebraError::DimensionMismatch {
                expected: 4 * n * n,
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    /// Number of buses (blocks per row).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Side of the flattened real matrix.
    pub fn dim(&self) -> usize {
        2 * self.n
    }

    pub fn as_flat(&self) -> &[T] {
        &self.data
    }

    pub fn into_flat(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * 2 * self.n + c]
    }

    #[inline]
    fn at(&mut self, r: usize, c: usize) -> &mut T {
        let w = 2 * self.n;
        &mut self.data[r * w + c]
    }

    pub fn block(&self, i: usize, j: usize) -> Mat2<T> {
        let (r, c) = (2 * i, 2 * j);
        Mat2::new(
            self.get(r, c),
            self.get(r, c + 1),
            self.get(r + 1, c),
            self.get(r + 1, c + 1),
        )
    }

    pub fn set_block(&mut self, i: usize, j: usize, b: Mat2<T>) {
        let (r, c) = (2 * i, 2 * j);
        *self.at(r, c) = b.m11;
        *self.at(r, c + 1) = b.m12;
        *self.at(r + 1, c) = b.m21;
        *self.at(r + 1, c + 1) = b.m22;
    }

    pub fn add_to_block(&mut self, i: usize, j: usize, b: Mat2<T>) {
        let cur = self.block(i, j);
        self.set_block(i, j, cur + b);
    }

    pub fn blocks(&self) -> Vec<Vec<Mat2<T>>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.block(i, j)).collect())
            .collect()
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, x| m.max(x.abs()))
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| *x * k).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "block matrix size mismatch");
        let w = self.dim();
        let mut out = vec![T::zero(); w * w];
        for i in 0..w {
            let row = &self.data[i * w..(i + 1) * w];
            let orow = &mut out[i * w..(i + 1) * w];
            for (k, a) in row.iter().enumerate() {
                if *a == T::zero() {
                    continue;
                }
                let rrow = &rhs.data[k * w..(k + 1) * w];
                for (o, b) in orow.iter_mut().zip(rrow) {
                    *o = *o + *a * *b;
                }
            }
        }
        Self { n: self.n, data: out }
    }

    /// Matrix-vector product on a stacked vector of 2-vectors.
    pub fn apply(&self, x: &[ClarkeVec<T>]) -> Vec<ClarkeVec<T>> {
        assert_eq!(x.len(), self.n, "vector length mismatch");
        let flat: Vec<T> = x.iter().flat_map(|v| [v.d, v.q]).collect();
        let y = self.apply_flat(&flat);
        y.chunks(2).map(|c| ClarkeVec::new(c[0], c[1])).collect()
    }

    pub fn apply_flat(&self, x: &[T]) -> Vec<T> {
        let w = self.dim();
        assert_eq!(x.len(), w, "vector length mismatch");
        (0..w)
            .map(|i| {
                self.data[i * w..(i + 1) * w]
                    .iter()
                    .zip(x)
                    .fold(T::zero(), |s, (a, b)| s + *a * *b)
            })
            .collect()
    }

    pub fn lu(&self) -> Result<Lu<T>, AlgebraError> {
        Lu::factor(self.dim(), self.data.clone())
    }

    pub fn inverse(&self) -> Result<Self, AlgebraError> {
        let lu = self.lu()?;
        Ok(Self {
            n: self.n,
            data: lu.inverse(),
        })
    }

    /// Solves `self * X = rhs`.
    pub fn solve(&self, rhs: &Self) -> Result<Self, AlgebraError> {
        let lu = self.lu()?;
        Ok(Self {
            n: self.n,
            data: lu.solve_matrix(&rhs.data),
        })
    }

    /// `max |(self * other - I)_ij|`.
    pub fn inverse_residual(&self, other: &Self) -> T {
        let p = self.matmul(other);
        let w = self.dim();
        let mut r = T::zero();
        for i in 0..w {
            for j in 0..w {
                let e = if i == j { T::one() } else { T::zero() };
                r = r.max((p.get(i, j) - e).abs());
            }
        }
        r
    }

    pub fn is_complex_representable(&self, tol: T) -> bool {
        (0..self.n).all(|i| (0..self.n).all(|j| self.block(i, j).is_complex_representable(tol)))
    }
}

impl<T: Scalar> Add for &BlockMatrix<T> {
    type Output = BlockMatrix<T>;
    fn add(self, rhs: &BlockMatrix<T>) -> BlockMatrix<T> {
        assert_eq!(self.n, rhs.n, "block matrix size mismatch");
        BlockMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &BlockMatrix<T> {
    type Output = BlockMatrix<T>;
    fn sub(self, rhs: &BlockMatrix<T>) -> BlockMatrix<T> {
        assert_eq!(self.n, rhs.n, "block matrix size mismatch");
        BlockMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Scalar> Mul for &BlockMatrix<T> {
    type Output = BlockMatrix<T>;
    fn mul(self, rhs: &BlockMatrix<T>) -> BlockMatrix<T> {
        self.matmul(rhs)
    }
}

/// Relative complex frequency `eta' = rho + j omega` of a voltage vector, i.e.
/// `dv/dt = v eta'` in the synchronous frame. `rho` is in 1/s; `omega` is the
/// angular speed deviation from the fundamental in rad/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexFrequency<T> {
    pub rho: T,
    pub omega: T,
}

impl<T: Scalar> ComplexFrequency<T> {
    pub fn new(rho: T, omega: T) -> Self {
        Self { rho, omega }
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex<T> {
        Complex::new(self.rho, self.omega)
    }

    /// Absolute frequency in per unit of the fundamental.
    pub fn omega_pu(self, omega_base: T) -> T {
        T::one() + self.omega / omega_base
    }
}

/// Second-order complex frequency `eta'' = sigma + j gamma`, defined by
/// `d2v/dt2 = v eta''`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexFrequency2<T> {
    pub sigma: T,
    pub gamma: T,
}

impl<T: Scalar> ComplexFrequency2<T> {
    pub fn new(sigma: T, gamma: T) -> Self {
        Self { sigma, gamma }
    }

    pub fn from_complex(z: Complex<T>) -> Self {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex<T> {
        Complex::new(self.sigma, self.gamma)
    }

    /// `sigma = rho^2 - omega^2 + rho_dot`, `gamma = 2 rho omega + omega_dot`
    /// with `omega` the deviation from the fundamental.
    pub fn from_rates(eta: ComplexFrequency<T>, rho_dot: T, omega_dot: T) -> Self {
        let two = T::one() + T::one();
        Self::new(
            eta.rho * eta.rho - eta.omega * eta.omega + rho_dot,
            two * eta.rho * eta.omega + omega_dot,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn complex_product_through_matrix() {
        let out = mat2_of_complex(c(1.0, 2.0)) * ClarkeVec::new(3.0, 4.0);
        assert_eq!(out, ClarkeVec::new(-5.0, 10.0));
    }

    #[test]
    fn special_matrices() {
        assert_eq!(mat2_of_complex(c(1.0, 0.0)), Mat2::identity());
        let j = mat2_of_complex(c(0.0, 1.0));
        assert_eq!(j * j, -Mat2::identity());
        assert_eq!(rotation(0.0f64), Mat2::identity());
        let r = rotation(std::f64::consts::FRAC_PI_2) * ClarkeVec::new(1.0, 0.0);
        assert!((r.d - 0.0).abs() < 1e-16 && (r.q - 1.0).abs() < 1e-16);
    }

    #[test]
    fn complex_operators() {
        assert_eq!(conjugator() * ClarkeVec::new(3.0, 4.0), ClarkeVec::new(3.0, -4.0));
        assert_eq!(projector_re() * ClarkeVec::new(3.0, 4.0), ClarkeVec::new(3.0, 0.0));
        assert_eq!(projector_im() * ClarkeVec::new(3.0, 4.0), ClarkeVec::new(4.0, 0.0));
        assert_eq!(conjugator::<f64>() * conjugator(), Mat2::identity());
    }

    #[test]
    fn rotation_composes() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(-10.0..10.0);
            let b: f64 = rng.gen_range(-10.0..10.0);
            let lhs = rotation(a) * rotation(b);
            let rhs = rotation(a + b);
            assert!((lhs - rhs).max_abs() < 1e-13);
            assert!((lhs.det() - 1.0).abs() < 1e-13);
            let e = c(0.0, a).exp();
            assert!((rotation(a) - mat2_of_complex(e)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn complex_representable_set_is_a_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let z = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let w = c(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let (mz, mw) = (mat2_of_complex(z), mat2_of_complex(w));
            assert!(((mz * mw) - mat2_of_complex(z * w)).max_abs() < 1e-12);
            assert!(((mz * mw) - (mw * mz)).max_abs() < 1e-12);
            assert!(((mz + mw) - mat2_of_complex(z + w)).max_abs() < 1e-12);
            let inv = mz.try_inverse().unwrap();
            assert!(inv.is_complex_representable(1e-12));
            assert!((inv - mat2_of_complex(z.inv())).max_abs() < 1e-12 * (1.0 + z.inv().norm()));
        }
    }

    #[test]
    fn angle_range() {
        let v = ClarkeVec::new(-1.0, -0.0);
        assert_eq!(v.angle(), std::f64::consts::PI);
        assert_eq!(ClarkeVec::new(0.0, 0.0).magnitude(), 0.0);
        assert!((wrap_angle(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_angle(-std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn assemble_places_blocks() {
        let one = BlockMatrix::assemble(1, [((0, 0), Mat2::<f64>::identity())]).unwrap();
        assert_eq!(one, BlockMatrix::identity(1));
        let a = Mat2::new(1.0, 2.0, 3.0, 4.0);
        let b = Mat2::new(5.0, 6.0, 7.0, 8.0);
        let m = BlockMatrix::assemble(2, [((0, 0), a), ((1, 1), b)]).unwrap();
        assert_eq!(m.block(0, 0), a);
        assert_eq!(m.block(1, 1), b);
        assert_eq!(m.block(0, 1), Mat2::zero());
        assert_eq!(m, BlockMatrix::block_diag(&[a, b]));
        let err = BlockMatrix::assemble(2, [((2, 0), a)]).unwrap_err();
        assert_eq!(err, AlgebraError::IndexOutOfRange { row: 2, col: 0, n: 2 });
        let back = BlockMatrix::from_flat(2, m.clone().into_flat()).unwrap();
        assert_eq!(back.blocks(), m.blocks());
    }

    #[test]
    fn invert_reactance() {
        let m = BlockMatrix::block_diag(&[mat2_of_complex(c(0.0, 0.1))]);
        let inv = m.inverse().unwrap();
        assert!((inv.block(0, 0) - mat2_of_complex(c(0.0, -10.0))).max_abs() < 1e-12);
        assert_eq!(BlockMatrix::<f64>::identity(3).inverse().unwrap(), BlockMatrix::identity(3));
    }

    #[test]
    fn invert_random_well_conditioned() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let mut data: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for k in 0..6 {
                data[k * 6 + k] += 4.0;
            }
            let m = BlockMatrix::from_flat(3, data).unwrap();
            let inv = m.inverse().unwrap();
            assert!(m.inverse_residual(&inv) < 1e-10);
        }
    }

    #[test]
    fn complex_blocks_invert_to_complex_blocks() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 4;
        let mut m = BlockMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut z = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                if i == j {
                    z += c(3.0, 3.0);
                }
                m.set_block(i, j, mat2_of_complex(z));
            }
        }
        let inv = m.inverse().unwrap();
        assert!(inv.is_complex_representable(1e-10));
    }

    #[test]
    fn singular_is_reported() {
        let m = BlockMatrix::block_diag(&[Mat2::new(1.0, 2.0, 2.0, 4.0)]);
        assert!(matches!(m.inverse(), Err(AlgebraError::SingularMatrix { .. })));
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).try_inverse().is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let z = mat2_of_complex(Complex::new(0.5f32, -0.25));
        let inv = BlockMatrix::block_diag(&[z]).inverse().unwrap();
        let expect = mat2_of_complex(Complex::new(0.5f32, -0.25).inv());
        assert!((inv.block(0, 0) - expect).max_abs() < 1e-5);
        assert!((rotation(0.3f32) * rotation(0.4) - rotation(0.7)).max_abs() < 1e-6);
    }

    #[test]
    fn second_order_frequency_components() {
        let eta = ComplexFrequency::new(0.5, -2.0);
        let e2 = ComplexFrequency2::from_rates(eta, 0.1, 0.3);
        let z = eta.to_complex() * eta.to_complex() + c(0.1, 0.3);
        assert!((e2.to_complex() - z).norm() < 1e-15);
    }
}
