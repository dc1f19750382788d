//! Finite jumps across a discrete event.
//!
//! A [`Jump`] holds the one-sided values of a quantity just before and just
//! after an event. The rules below express the jump of a product, quotient,
//! complex exponential, Clarke vector or Park-rotated vector in terms of jumps
//! and instantaneous means of the factors. They are exact identities, not
//! approximations, and reduce to the usual derivative rules as the two sides
//! approach each other.
//!
//! [`JumpForm`] propagates jumps through an expression built from a bus
//! voltage and its first two time derivatives, carrying the exact linear map
//! from `(dv, dv', dv'')` to the jump of the expression.

use std::ops::{Add, Sub};

use num_complex::Complex;
use thiserror::Error;

use crate::algebra::{conjugator, lit, mat2_of_complex, projector_im, projector_re, rotation};
use crate::algebra::{ClarkeVec, Mat2, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeltaError {
    #[error("denominator changes sign or vanishes across the jump (g+ g- = {product:.3e})")]
    DegenerateDenominator { product: f64 },
    #[error("angle jump {delta:.6} rad is outside (-pi, pi)")]
    JumpTooLarge { delta: f64 },
    #[error("mean magnitude is zero")]
    DegenerateMagnitude,
}

/// Values of a quantity at `t-` and `t+`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jump<V> {
    pub minus: V,
    pub plus: V,
}

impl<V: Copy> Jump<V> {
    pub fn new(minus: V, plus: V) -> Self {
        Self { minus, plus }
    }

    pub fn constant(v: V) -> Self {
        Self { minus: v, plus: v }
    }

    pub fn map<W: Copy>(self, f: impl Fn(V) -> W) -> Jump<W> {
        Jump::new(f(self.minus), f(self.plus))
    }
}

impl<V: Copy + Add<Output = V> + Sub<Output = V>> Jump<V> {
    pub fn delta(&self) -> V {
        self.plus - self.minus
    }
}

impl<T: Scalar> Jump<T> {
    pub fn arith_mean(&self) -> T {
        (self.plus + self.minus) * lit(0.5)
    }

    /// `sqrt(f+ f-)`, defined when both sides share a sign.
    pub fn geom_mean(&self) -> Result<T, DeltaError> {
        let p = self.plus * self.minus;
        if p < T::zero() {
            return Err(DeltaError::DegenerateDenominator {
                product: p.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(p.sqrt())
    }
}

impl<T: Scalar> Jump<Complex<T>> {
    pub fn arith_mean(&self) -> Complex<T> {
        (self.plus + self.minus).scale(lit(0.5))
    }
}

impl<T: Scalar> Jump<ClarkeVec<T>> {
    pub fn arith_mean(&self) -> ClarkeVec<T> {
        (self.plus + self.minus).scale(lit(0.5))
    }
}

fn check_angle<T: Scalar>(delta: T) -> Result<(), DeltaError> {
    if delta.abs() >= T::PI() || !delta.is_finite() {
        return Err(DeltaError::JumpTooLarge {
            delta: delta.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// Mean of `exp(j f)` over the two sides.
pub fn mean_rotation<T: Scalar>(f: Jump<T>) -> Complex<T> {
    f.map(|x| Complex::new(x.cos(), x.sin())).arith_mean()
}

/// `f+ g+ - f- g-` written as `df g~ + f~ dg`.
pub fn delta_product<T: Scalar>(f: Jump<T>, g: Jump<T>) -> T {
    f.delta() * g.arith_mean() + f.arith_mean() * g.delta()
}

/// `f+/g+ - f-/g-` written as `(df g~ - f~ dg) / g^2` with `g^` the geometric mean.
pub fn delta_quotient<T: Scalar>(f: Jump<T>, g: Jump<T>) -> Result<T, DeltaError> {
    let g2 = g.plus * g.minus;
    if g2 <= T::zero() {
        return Err(DeltaError::DegenerateDenominator {
            product: g2.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok((f.delta() * g.arith_mean() - f.arith_mean() * g.delta()) / g2)
}

/// `exp(j f+) - exp(j f-)` as `2j sin(df/2) exp(j f~)`.
pub fn delta_cexp<T: Scalar>(f: Jump<T>) -> Result<ClarkeVec<T>, DeltaError> {
    let d = f.delta();
    check_angle(d)?;
    let half = lit::<T>(0.5);
    let k = (d * half).sin() * lit(2.0);
    let m = f.arith_mean();
    Ok(ClarkeVec::new(-k * m.sin(), k * m.cos()))
}

/// Same jump as [`delta_cexp`] in the form `mean(exp(j f)) 2j tan(df/2)`.
pub fn delta_cexp_tan<T: Scalar>(f: Jump<T>) -> Result<ClarkeVec<T>, DeltaError> {
    let d = f.delta();
    check_angle(d)?;
    let t = (d * lit(0.5)).tan() * lit(2.0);
    Ok(ClarkeVec::from_complex(mean_rotation(f) * Complex::new(T::zero(), t)))
}

/// `[dv/v~, 2 tan(dtheta/2)]`: the coordinates of a Clarke vector jump in the
/// frame of the mean rotation, scaled by the mean magnitude.
pub fn magnitude_angle_coords<T: Scalar>(
    v: Jump<T>,
    theta: Jump<T>,
) -> Result<ClarkeVec<T>, DeltaError> {
    let vm = v.arith_mean();
    if vm == T::zero() {
        return Err(DeltaError::DegenerateMagnitude);
    }
    let dth = theta.delta();
    check_angle(dth)?;
    Ok(ClarkeVec::new(v.delta() / vm, (dth * lit(0.5)).tan() * lit(2.0)))
}

/// Inverse of [`magnitude_angle_coords`] given the pre-event magnitude: returns `(dv, dtheta)`.
pub fn jumps_from_coords<T: Scalar>(v_minus: T, coords: ClarkeVec<T>) -> (T, T) {
    let half = lit::<T>(0.5);
    let dv = coords.d * v_minus / (T::one() - coords.d * half);
    let dth = (coords.q * half).atan() * lit(2.0);
    (dv, dth)
}

/// `v+ exp(j theta+) - v- exp(j theta-)` as `v~ mean(exp(j theta)) (dv/v~ + 2j tan(dtheta/2))`.
pub fn delta_clarke<T: Scalar>(v: Jump<T>, theta: Jump<T>) -> Result<ClarkeVec<T>, DeltaError> {
    let x = magnitude_angle_coords(v, theta)?;
    let e = mean_rotation(theta);
    Ok(ClarkeVec::from_complex(e * x.to_complex().scale(v.arith_mean())))
}

/// Jump of `exp(j theta) i_dq` in the original frame:
/// `mean(exp(j theta)) (d i_dq + i~_dq 2j tan(dtheta/2))`.
pub fn delta_park<T: Scalar>(
    i_dq: Jump<ClarkeVec<T>>,
    theta: Jump<T>,
) -> Result<ClarkeVec<T>, DeltaError> {
    let dth = theta.delta();
    check_angle(dth)?;
    let t = (dth * lit(0.5)).tan() * lit(2.0);
    let e = mean_rotation(theta);
    let di = i_dq.delta().to_complex();
    let im = i_dq.arith_mean().to_complex();
    Ok(ClarkeVec::from_complex(
        e * (di + im * Complex::new(T::zero(), t)),
    ))
}

/// Jump of `exp(j theta) i` evaluated directly from the two snapshots.
pub fn direct_park<T: Scalar>(i_dq: Jump<ClarkeVec<T>>, theta: Jump<T>) -> ClarkeVec<T> {
    let side = |i: ClarkeVec<T>, th: T| rotation(th) * i;
    side(i_dq.plus, theta.plus) - side(i_dq.minus, theta.minus)
}

/// A complex quantity evaluated on both sides of an event, together with the
/// exact linear map from the jumps of the bus voltage and its first two time
/// derivatives to the jump of the quantity:
///
/// `dq = l[0] dv + l[1] dv' + l[2] dv''`.
///
/// Real-valued quantities are carried with zero imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpForm<T> {
    pub value: Jump<Complex<T>>,
    pub l: [Mat2<T>; 3],
}

impl<T: Scalar> JumpForm<T> {
    /// A quantity that does not jump and does not depend on the bus voltage.
    pub fn constant(c: Complex<T>) -> Self {
        Self {
            value: Jump::constant(c),
            l: [Mat2::zero(); 3],
        }
    }

    pub fn real(c: T) -> Self {
        Self::constant(Complex::new(c, T::zero()))
    }

    /// The bus voltage (order 0) or its `order`-th time derivative.
    pub fn var(order: usize, value: Jump<Complex<T>>) -> Self {
        assert!(order < 3, "only derivatives up to second order are tracked");
        let mut l = [Mat2::zero(); 3];
        l[order] = Mat2::identity();
        Self { value, l }
    }

    pub fn minus(&self) -> Complex<T> {
        self.value.minus
    }

    pub fn plus(&self) -> Complex<T> {
        self.value.plus
    }

    pub fn mean(&self) -> Complex<T> {
        self.value.arith_mean()
    }

    /// Jump predicted by the linear map for the given voltage-derivative jumps.
    pub fn apply(&self, dv: [ClarkeVec<T>; 3]) -> ClarkeVec<T> {
        self.l[0] * dv[0] + self.l[1] * dv[1] + self.l[2] * dv[2]
    }

    fn map_l(&self, m: Mat2<T>) -> [Mat2<T>; 3] {
        [m * self.l[0], m * self.l[1], m * self.l[2]]
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            value: Jump::new(self.minus() + o.minus(), self.plus() + o.plus()),
            l: [self.l[0] + o.l[0], self.l[1] + o.l[1], self.l[2] + o.l[2]],
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(Complex::new(-T::one(), T::zero()))
    }

    /// Multiplication by a constant complex factor.
    pub fn scale(&self, k: Complex<T>) -> Self {
        Self {
            value: self.value.map(|x| x * k),
            l: self.map_l(mat2_of_complex(k)),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let fm = mat2_of_complex(self.mean());
        let gm = mat2_of_complex(o.mean());
        Self {
            value: Jump::new(self.minus() * o.minus(), self.plus() * o.plus()),
            l: [
                gm * self.l[0] + fm * o.l[0],
                gm * self.l[1] + fm * o.l[1],
                gm * self.l[2] + fm * o.l[2],
            ],
        }
    }

    pub fn recip(&self) -> Result<Self, DeltaError> {
        let p = self.plus() * self.minus();
        if p.norm() == T::zero() {
            return Err(DeltaError::DegenerateDenominator { product: 0.0 });
        }
        let k = mat2_of_complex(-p.inv());
        Ok(Self {
            value: self.value.map(|x| x.inv()),
            l: self.map_l(k),
        })
    }

    pub fn div(&self, o: &Self) -> Result<Self, DeltaError> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn re(&self) -> Self {
        Self {
            value: self.value.map(|x| Complex::new(x.re, T::zero())),
            l: self.map_l(projector_re()),
        }
    }

    pub fn im(&self) -> Self {
        Self {
            value: self.value.map(|x| Complex::new(x.im, T::zero())),
            l: self.map_l(projector_im()),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            value: self.value.map(|x| x.conj()),
            l: self.map_l(conjugator()),
        }
    }

    /// Modulus, using `|z+| - |z-| = Re(conj(z~) dz) / mean|z|`.
    pub fn abs(&self) -> Result<Self, DeltaError> {
        let mag = self.value.map(|x| x.norm());
        let mm = mag.arith_mean();
        if mm == T::zero() {
            return Err(DeltaError::DegenerateMagnitude);
        }
        let k = projector_re::<T>() * mat2_of_complex(self.mean().conj()).scale(T::one() / mm);
        Ok(Self {
            value: mag.map(|x| Complex::new(x, T::zero())),
            l: self.map_l(k),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn j(a: f64, b: f64) -> Jump<f64> {
        Jump::new(a, b)
    }

    fn close(a: ClarkeVec<f64>, b: ClarkeVec<f64>, tol: f64) -> bool {
        (a - b).max_abs() <= tol
    }

    #[test]
    fn product_example() {
        assert_eq!(delta_product(j(1.0, 3.0), j(2.0, 4.0)), 10.0);
        assert_eq!(delta_product(j(1.0, 3.0), j(5.0, 5.0)), 10.0);
    }

    #[test]
    fn quotient_example() {
        assert_eq!(delta_quotient(j(2.0, 6.0), j(1.0, 2.0)).unwrap(), 1.0);
        assert_eq!(delta_quotient(j(2.0, 6.0), j(2.0, 6.0)).unwrap(), 0.0);
        assert!(matches!(
            delta_quotient(j(1.0, 1.0), j(-1.0, 1.0)),
            Err(DeltaError::DegenerateDenominator { .. })
        ));
        assert!(j(-1.0, 2.0).geom_mean().is_err());
        assert_eq!(j(2.0, 8.0).geom_mean().unwrap(), 4.0);
    }

    #[test]
    fn cexp_example() {
        let d = delta_cexp(j(0.0, FRAC_PI_2)).unwrap();
        assert!(close(d, ClarkeVec::new(-1.0, 1.0), 1e-15));
        assert_eq!(delta_cexp(j(0.7, 0.7)).unwrap(), ClarkeVec::new(-0.0, 0.0));
        assert!(matches!(delta_cexp(j(0.0, PI)), Err(DeltaError::JumpTooLarge { .. })));
    }

    #[test]
    fn clarke_example() {
        let d = delta_clarke(j(1.0, 2.0), j(0.0, FRAC_PI_2)).unwrap();
        assert!(close(d, ClarkeVec::new(-1.0, 2.0), 1e-15));
        assert_eq!(delta_clarke(j(1.3, 1.3), j(0.2, 0.2)).unwrap().max_abs(), 0.0);
        assert_eq!(delta_clarke(j(1.0, -1.0), j(0.0, 0.1)), Err(DeltaError::DegenerateMagnitude));
    }

    #[test]
    fn park_examples() {
        let i = Jump::new(ClarkeVec::new(0.3, -0.2), ClarkeVec::new(0.5, 0.1));
        let th = j(0.4, 0.4);
        let d = delta_park(i, th).unwrap();
        assert!(close(d, rotation(0.4) * i.delta(), 1e-15));
        let one = Jump::constant(ClarkeVec::new(1.0, 0.0));
        let d = delta_park(one, j(0.0, FRAC_PI_2)).unwrap();
        assert!(close(d, ClarkeVec::new(-1.0, 1.0), 1e-15));
    }

    #[test]
    fn coords_round_trip() {
        let v = j(1.02, 0.97);
        let th = j(-0.3, 0.45);
        let x = magnitude_angle_coords(v, th).unwrap();
        let (dv, dth) = jumps_from_coords(v.minus, x);
        assert!((dv - v.delta()).abs() < 1e-15);
        assert!((dth - th.delta()).abs() < 1e-15);
    }

    fn vj(order: usize, m: (f64, f64), p: (f64, f64)) -> JumpForm<f64> {
        JumpForm::var(order, Jump::new(Complex::new(m.0, m.1), Complex::new(p.0, p.1)))
    }

    #[test]
    fn jump_form_is_exact() {
        let v = vj(0, (1.01, 0.05), (0.93, -0.21));
        let vd = vj(1, (0.2, -0.3), (-1.1, 0.4));
        let vdd = vj(2, (3.0, 1.0), (-2.0, 0.5));
        let e = v.abs().unwrap().recip().unwrap();
        let q = vd
            .mul(&e)
            .add(&vdd.conj().mul(&v).im())
            .sub(&vd.div(&v).unwrap().re().scale(Complex::new(0.3, -2.0)));
        let dv = [v, vd, vdd].map(|x| ClarkeVec::from_complex(x.value.delta()));
        let predicted = q.apply(dv);
        let direct = ClarkeVec::from_complex(q.value.delta());
        assert!(close(predicted, direct, 1e-14), "{predicted:?} vs {direct:?}");
    }

    proptest! {
        #[test]
        fn product_matches_direct(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64) {
            let r = delta_product(j(a, b), j(c, d));
            prop_assert!((r - (b * d - a * c)).abs() <= 1e-13);
        }

        #[test]
        fn quotient_matches_direct(a in -5.0..5.0f64, b in -5.0..5.0f64, c in 0.1..5.0f64, d in 0.1..5.0f64) {
            let r = delta_quotient(j(a, b), j(c, d)).unwrap();
            prop_assert!((r - (b / d - a / c)).abs() <= 1e-13 * (1.0 + r.abs()) * 100.0);
        }

        #[test]
        fn cexp_forms_agree(a in -3.0..3.0f64, d in -3.1..3.1f64) {
            let f = j(a, a + d);
            let s = delta_cexp(f).unwrap();
            let t = delta_cexp_tan(f).unwrap();
            let direct = ClarkeVec::new((a + d).cos() - a.cos(), (a + d).sin() - a.sin());
            prop_assert!(close(s, direct, 1e-13));
            prop_assert!(close(t, direct, 1e-12));
        }

        #[test]
        fn clarke_matches_direct(v0 in 0.1..2.0f64, v1 in 0.1..2.0f64, a in -3.0..3.0f64, d in -3.1..3.1f64) {
            let r = delta_clarke(j(v0, v1), j(a, a + d)).unwrap();
            let direct = ClarkeVec::from_polar(v1, a + d) - ClarkeVec::from_polar(v0, a);
            prop_assert!(close(r, direct, 1e-12));
        }

        #[test]
        fn delta_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64, d in -5.0..5.0f64, al in -3.0..3.0f64, be in -3.0..3.0f64) {
            let combined = j(al * a + be * c, al * b + be * d);
            let lhs = combined.delta();
            let rhs = al * j(a, b).delta() + be * j(c, d).delta();
            prop_assert!((lhs - rhs).abs() <= 1e-13);
        }
    }
}
