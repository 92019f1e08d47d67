//! Complex kernels as signed combinations of positive ones.
//!
//! A complex kernel `K` splits into `max(0, Re K)`, `max(0, -Re K)`,
//! `max(0, Im K)` and `max(0, -Im K)` with `K = K_re+ - K_re- + i (K_im+ - K_im-)`.
//! Each part is a positive kernel and defines a pinned measure on its own.
//! Over `n` time slots the product `prod_i K` expands multilinearly into `4^n`
//! products of parts with phases in `{1, -1, i, -i}`; the four-part integral
//! is that sum of positive-measure integrals.

use num_complex::Complex64;

use crate::cylinder::CylinderFunction;
use crate::error::{Error, Result};
use crate::kernel::{chain_integral, PinnedMeasure, TransitionKernel};

/// Masses of individual signed-part measures above this abort the four-part
/// integral.
pub const SIGNED_MASS_GUARD: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct SignedKernelParts {
    pub re_plus: TransitionKernel,
    pub re_minus: TransitionKernel,
    pub im_plus: TransitionKernel,
    pub im_minus: TransitionKernel,
}

/// Phase carried by each part in the recombination, in field order.
pub const PART_PHASES: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(0.0, -1.0),
];

impl SignedKernelParts {
    pub fn parts(&self) -> [&TransitionKernel; 4] {
        [&self.re_plus, &self.re_minus, &self.im_plus, &self.im_minus]
    }

    /// `re+ - re- + i (im+ - im-)` at one argument.
    pub fn reconstruct(&self, t: f64, u: f64, x: f64, y: f64) -> Result<Complex64> {
        let [a, b, c, d] = self.parts().map(|k| k.eval(t, u, x, y));
        Ok(Complex64::new(a?.re - b?.re, c?.re - d?.re))
    }
}

fn real(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

pub fn decompose_kernel(k: &TransitionKernel) -> SignedKernelParts {
    let label = k.label();
    SignedKernelParts {
        re_plus: k.map(format!("max(0, Re {label})"), true, |z| real(z.re.max(0.0))),
        re_minus: k.map(format!("max(0, -Re {label})"), true, |z| real((-z.re).max(0.0))),
        im_plus: k.map(format!("max(0, Im {label})"), true, |z| real(z.im.max(0.0))),
        im_minus: k.map(format!("max(0, -Im {label})"), true, |z| real((-z.im).max(0.0))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ComplexIntegration {
    /// Quadrature with the complex kernel itself.
    #[default]
    Direct,
    /// Sum over signed-part products, each integrated as a positive measure.
    FourPart,
}

/// Cylinder integral against the complex measure of `measure`'s kernel.
pub fn complex_cylinder_integral(
    measure: &PinnedMeasure,
    f: &CylinderFunction,
    method: ComplexIntegration,
) -> Result<Complex64> {
    match method {
        ComplexIntegration::Direct => crate::kernel::cylinder_integral(measure, f),
        ComplexIntegration::FourPart => four_part_integral(measure, &decompose_kernel(measure.kernel()), f),
    }
}

/// Four-part integral with precomputed parts.
pub fn four_part_integral(
    measure: &PinnedMeasure,
    parts: &SignedKernelParts,
    f: &CylinderFunction,
) -> Result<Complex64> {
    let all = parts.parts();
    let collapsed = measure.prepare(f, &all[..1])?;
    let n = collapsed.arity();
    let one = CylinderFunction::one(collapsed.times().to_vec())?;
    let combos = 4usize.pow(n as u32);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut slots: Vec<&TransitionKernel> = Vec::with_capacity(n);
    for code in 0..combos {
        slots.clear();
        let mut phase = Complex64::new(1.0, 0.0);
        let mut c = code;
        for _ in 0..n {
            slots.push(all[c % 4]);
            phase *= PART_PHASES[c % 4];
            c /= 4;
        }
        let mass = chain_integral(measure, &slots, &one)?.re;
        if !(mass.is_finite() && mass <= SIGNED_MASS_GUARD) {
            return Err(Error::NonFiniteSignedPart {
                mass,
                limit: SIGNED_MASS_GUARD,
            });
        }
        if mass == 0.0 {
            continue;
        }
        acc += chain_integral(measure, &slots, &collapsed)? * phase;
    }
    Ok(acc)
}

/// `bound(f) * int prod |K|`, the triangle-inequality bound on the modulus of
/// the complex integral.
pub fn modulus_bound(measure: &PinnedMeasure, f: &CylinderFunction) -> Result<f64> {
    let abs = measure.with_kernel(measure.kernel().modulus());
    let one = CylinderFunction::one(f.times().to_vec())?;
    Ok(f.bound() * crate::kernel::cylinder_integral(&abs, &one)?.re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::TimeInterval;
    use crate::kernel::{cylinder_integral, heat_kernel_circle, ConfigSpace};
    use std::f64::consts::PI;

    fn constant(z: Complex64) -> TransitionKernel {
        TransitionKernel::new("const", false, move |_, _, _, _| z)
    }

    #[test]
    fn constant_kernel_parts() {
        let p = decompose_kernel(&constant(Complex64::new(3.0, -4.0)));
        let vals = p.parts().map(|k| k.eval(0.0, 1.0, 0.0, 0.0).unwrap().re);
        assert_eq!(vals, [3.0, 0.0, 0.0, 4.0]);
        assert_eq!(p.reconstruct(0.0, 1.0, 0.0, 0.0).unwrap(), Complex64::new(3.0, -4.0));
    }

    #[test]
    fn positive_kernel_degenerates() {
        let k = heat_kernel_circle(1.0, 20).unwrap();
        let p = decompose_kernel(&k);
        for &(x, y) in &[(0.1, 0.5), (0.0, 0.9), (0.3, 0.3)] {
            assert_eq!(p.re_plus.eval(0.0, 0.1, x, y).unwrap(), k.eval(0.0, 0.1, x, y).unwrap());
            for part in [&p.re_minus, &p.im_plus, &p.im_minus] {
                assert_eq!(part.eval(0.0, 0.1, x, y).unwrap().re, 0.0);
            }
        }
    }

    #[test]
    fn cosine_parts_have_disjoint_support() {
        let k = TransitionKernel::new("cos", false, |_, _, x, _| Complex64::new(x.cos(), 0.0));
        let p = decompose_kernel(&k);
        for i in 0..200 {
            let x = i as f64 * 0.05;
            let a = p.re_plus.eval(0.0, 1.0, x, 0.0).unwrap().re;
            let b = p.re_minus.eval(0.0, 1.0, x, 0.0).unwrap().re;
            assert!(a >= 0.0 && b >= 0.0);
            assert_eq!(a * b, 0.0);
        }
    }

    fn phased(theta: f64) -> PinnedMeasure {
        let heat = heat_kernel_circle(1.0, 20).unwrap();
        let phase = Complex64::from_polar(1.0, theta);
        let k = heat.map("heat * phase", false, move |z| z * phase);
        PinnedMeasure::new(
            ConfigSpace::circle(1.0, 48).unwrap(),
            k,
            TimeInterval::new(1.0).unwrap(),
            0.0,
            0.25,
        )
        .unwrap()
    }

    #[test]
    fn phase_factors_out_per_slot() {
        let theta = 0.7;
        let m = phased(theta);
        let pos = m.with_kernel(heat_kernel_circle(1.0, 20).unwrap());
        let f = CylinderFunction::new(vec![0.1, 0.2], 2.1, |x| {
            Complex64::new((2.0 * PI * x[0]).cos() + 1.0, (2.0 * PI * x[1]).sin() * 0.5)
        })
        .unwrap();
        let oracle = cylinder_integral(&pos, &f).unwrap() * Complex64::from_polar(1.0, 2.0 * theta);
        for method in [ComplexIntegration::Direct, ComplexIntegration::FourPart] {
            let v = complex_cylinder_integral(&m, &f, method).unwrap();
            assert!((v - oracle).norm() <= 1e-12 * oracle.norm(), "{method:?}");
        }
    }

    #[test]
    fn single_slot_reduces_to_kernel_mass() {
        let m = phased(2.1);
        let f = CylinderFunction::one(vec![0.3]).unwrap();
        let v = complex_cylinder_integral(&m, &f, ComplexIntegration::Direct).unwrap();
        let rule = m.space().rule().clone();
        let direct = crate::quadrature::integrate_1d(|y| m.kernel().eval(0.0, 0.3, 0.25, y).unwrap(), &rule).unwrap();
        assert!((v - direct).norm() < 1e-14);
    }

    #[test]
    fn real_positive_kernel_equals_positive_integral() {
        let m = phased(0.0).with_kernel(heat_kernel_circle(1.0, 20).unwrap());
        let f = CylinderFunction::new(vec![0.2], 1.0, |x| Complex64::new(x[0].sin(), 0.0)).unwrap();
        let direct = complex_cylinder_integral(&m, &f, ComplexIntegration::Direct).unwrap();
        assert_eq!(direct, cylinder_integral(&m, &f).unwrap());
        let four = complex_cylinder_integral(&m, &f, ComplexIntegration::FourPart).unwrap();
        assert_eq!(four, direct);
    }

    #[test]
    fn overflow_guard() {
        let m = phased(0.0).with_kernel(constant(Complex64::new(1e13, 1.0)));
        let f = CylinderFunction::one(vec![0.5]).unwrap();
        assert!(matches!(
            complex_cylinder_integral(&m, &f, ComplexIntegration::FourPart),
            Err(Error::NonFiniteSignedPart { .. })
        ));
    }

    #[test]
    fn triangle_bound_holds() {
        let m = phased(1.3);
        let f = CylinderFunction::new(vec![0.1, 0.4], 1.0, |x| Complex64::from_polar(1.0, 5.0 * x[0] - x[1])).unwrap();
        let v = complex_cylinder_integral(&m, &f, ComplexIntegration::Direct).unwrap();
        assert!(v.norm() <= modulus_bound(&m, &f).unwrap() * (1.0 + 1e-12));
    }
}
