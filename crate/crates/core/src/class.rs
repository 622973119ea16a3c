//! Conjugacy classes `C = {g h g⁻¹}` as sources of the fiber construction:
//! the inclusion `C → K`, the invariant 2-form `ζ_C` with `dζ_C = λ|_C`, and
//! the pullback of both to `K` along `g ↦ g h g⁻¹` for derivative checks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::forms::{check_form_args, Form, GroupMap, GroupTuple, TangentTuple};
use crate::lie::{AlgebraElement, Group, GroupElement};

/// Sign of `ζ_C`, fixed by requiring `dζ_C = λ|_C`.
pub const CLASS_FORM_SIGN: f64 = 1.0;

/// Threshold below which `h` counts as central.
const CENTRAL_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct ConjugacyClass {
    group: Group,
    h: GroupElement,
    central: bool,
    sign: f64,
}

impl ConjugacyClass {
    pub fn new(group: Group, h: GroupElement) -> Result<Self> {
        Self::with_sign(group, h, CLASS_FORM_SIGN)
    }

    pub fn with_sign(group: Group, h: GroupElement, sign: f64) -> Result<Self> {
        group.check_element(&h)?;
        let mut central = true;
        for b in group.basis() {
            if (&group.adjoint(&h, b)? - b).norm() > CENTRAL_TOL {
                central = false;
            }
        }
        Ok(ConjugacyClass { group, h, central, sign })
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn rescaled(&self, metric_scale: f64) -> Result<ConjugacyClass> {
        Ok(ConjugacyClass { group: self.group.rescaled(metric_scale)?, ..self.clone() })
    }

    /// The class representative, which is also the basepoint.
    pub fn representative(&self) -> &GroupElement {
        &self.h
    }

    /// True when the class is a single point.
    pub fn is_point(&self) -> bool {
        self.central
    }

    /// `g h g⁻¹`.
    pub fn point(&self, g: &GroupElement) -> GroupElement {
        &(g * &self.h) * &g.inverse()
    }

    /// Left-trivialized tangent at `a` generated by `X`: `Ad_{a⁻¹}X − X`.
    pub fn tangent(&self, a: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.group.conjugation_field(a, x)
    }

    /// A generator `X` with `tangent(a, X) = v`, by least squares in basis
    /// coordinates. Defined modulo the centralizer of `a`, which `ζ_C` ignores.
    pub fn generator(&self, a: &GroupElement, v: &AlgebraElement) -> Result<AlgebraElement> {
        let g = &self.group;
        let d = g.algebra_dim();
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (k, b) in g.basis().iter().enumerate() {
            let c = g.coords(&self.tangent(a, b)?)?;
            for j in 0..d {
                m[(j, k)] = c[j];
            }
        }
        let rhs = DVector::from_vec(g.coords(v)?);
        let svd = m.svd(true, true);
        let sol = svd
            .solve(&rhs, 1e-10)
            .map_err(|e| Error::Unsupported(format!("class generator solve: {e}")))?;
        g.from_coords(sol.as_slice())
    }

    /// `ζ_C(a; X, Y) = s·½(⟨X, Ad_a Y⟩ − ⟨Y, Ad_a X⟩)` on generators.
    pub fn zeta_generators(&self, a: &GroupElement, x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
        if self.central {
            return Ok(0.0);
        }
        let g = &self.group;
        let ay = g.adjoint(a, y)?;
        let ax = g.adjoint(a, x)?;
        Ok(self.sign * 0.5 * (g.inner(x, &ay)? - g.inner(y, &ax)?))
    }

    /// The pullbacks of `ζ_C` and `λ|_C` to `K` along `g ↦ g h g⁻¹`.
    pub fn pulled_to_group(&self) -> ClassPullback<'_> {
        ClassPullback { class: self }
    }
}

impl GroupMap for ConjugacyClass {
    fn group(&self) -> &Group {
        &self.group
    }

    fn arity(&self) -> usize {
        1
    }

    fn apply(&self, p: &GroupTuple) -> Result<GroupElement> {
        if p.len() != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: p.len() });
        }
        Ok(p.0[0].clone())
    }

    fn differential(&self, p: &GroupTuple, v: &TangentTuple) -> Result<AlgebraElement> {
        if p.len() != 1 || v.len() != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: v.len().max(p.len()) });
        }
        Ok(v.0[0].clone())
    }
}

/// `ζ_C` on left-trivialized class tangents.
impl Form for ConjugacyClass {
    fn degree(&self) -> usize {
        2
    }

    fn arity(&self) -> usize {
        1
    }

    fn eval(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(2, 1, p, v)?;
        if self.central {
            return Ok(0.0);
        }
        let a = &p.0[0];
        let x = self.generator(a, &v[0].0[0])?;
        let y = self.generator(a, &v[1].0[0])?;
        self.zeta_generators(a, &x, &y)
    }
}

/// Forms on `K` obtained by pulling back along `π(g) = g h g⁻¹`. A
/// left-trivialized tangent `Y` at `g` is sent to the class tangent generated
/// by `Ad_g Y`.
pub struct ClassPullback<'a> {
    class: &'a ConjugacyClass,
}

impl ClassPullback<'_> {
    fn generators(&self, g: &GroupElement, v: &[&TangentTuple]) -> Result<Vec<AlgebraElement>> {
        v.iter().map(|t| self.class.group.adjoint(g, &t.0[0])).collect()
    }

    /// `π*ζ_C`.
    pub fn zeta(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(2, 1, p, v)?;
        let g = &p.0[0];
        let x = self.generators(g, v)?;
        self.class.zeta_generators(&self.class.point(g), &x[0], &x[1])
    }

    /// `π*λ`.
    pub fn cartan(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(3, 1, p, v)?;
        let g = &p.0[0];
        let a = self.class.point(g);
        let t = self
            .generators(g, v)?
            .iter()
            .map(|x| self.class.tangent(&a, x))
            .collect::<Result<Vec<_>>>()?;
        self.class.group.cartan3(&t[0], &t[1], &t[2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::exterior_derivative;
    use crate::rng::stream;

    fn residual(class: &ConjugacyClass, p: &GroupTuple, v: &[TangentTuple], h: f64) -> f64 {
        let pb = class.pulled_to_group();
        let refs: Vec<&TangentTuple> = v.iter().collect();
        let d = exterior_derivative(class.group(), |q, t| pb.zeta(q, t), p, &refs, h).unwrap();
        (d - pb.cartan(p, &refs).unwrap()).abs()
    }

    /// SU(2) classes are 2-dimensional, so `λ|_C = 0` there and only a
    /// generic SU(3) class distinguishes the two signs.
    #[test]
    fn sign_calibration_selects_configured_sign() {
        let g = Group::new(crate::lie::GroupSpec::su(3)).unwrap();
        let b = g.basis();
        let h = g.exp(&(&b[6].scale(1.1) + &b[7].scale(0.6))).unwrap();
        let mut passing = Vec::new();
        for sign in [1.0, -1.0] {
            let class = ConjugacyClass::with_sign(g.clone(), h.clone(), sign).unwrap();
            let mut rng = stream(40, 0);
            let mut ok = true;
            for _ in 0..10 {
                let p = GroupTuple::random(&g, &mut rng, 1, 1.0);
                let v: Vec<TangentTuple> = (0..3).map(|_| TangentTuple::random(&g, &mut rng, 1, 1.0)).collect();
                // π*ζ_C is left-invariant, so the finite-difference error is at round-off.
                ok &= residual(&class, &p, &v, 1e-3) < 1e-9;
            }
            if ok {
                passing.push(sign);
            }
        }
        assert_eq!(passing, vec![CLASS_FORM_SIGN]);
    }

    #[test]
    fn central_representative_gives_point_class() {
        let g = Group::su2();
        let minus = g.element(-crate::lie::CMat::identity(2, 2)).unwrap();
        let class = ConjugacyClass::new(g.clone(), minus).unwrap();
        assert!(class.is_point());
        let mut rng = stream(41, 0);
        let p = GroupTuple::single(class.representative().clone());
        let v = TangentTuple::random(&g, &mut rng, 1, 1.0);
        let w = TangentTuple::random(&g, &mut rng, 1, 1.0);
        assert_eq!(class.eval(&p, &[&v, &w]).unwrap(), 0.0);
    }

    #[test]
    fn zeta_on_generators_is_antisymmetric_and_recovered_from_tangents() {
        let g = Group::su2();
        let mut rng = stream(42, 0);
        let h = g.exp(&g.basis()[2].scale(0.9)).unwrap();
        let class = ConjugacyClass::new(g.clone(), h).unwrap();
        for _ in 0..20 {
            let a = class.point(&g.random_element(&mut rng, 2.0));
            let x = g.random_algebra(&mut rng, 1.0);
            let y = g.random_algebra(&mut rng, 1.0);
            assert_eq!(class.zeta_generators(&a, &x, &x).unwrap(), 0.0);
            let direct = class.zeta_generators(&a, &x, &y).unwrap();
            let vx = TangentTuple(vec![class.tangent(&a, &x).unwrap()]);
            let vy = TangentTuple(vec![class.tangent(&a, &y).unwrap()]);
            let via = class.eval(&GroupTuple::single(a.clone()), &[&vx, &vy]).unwrap();
            assert!((direct - via).abs() < 1e-12);
        }
    }

    #[test]
    fn class_form_is_invariant() {
        let g = Group::su2();
        let mut rng = stream(43, 0);
        let class = ConjugacyClass::new(g.clone(), g.exp(&g.basis()[0].scale(2.0)).unwrap()).unwrap();
        for _ in 0..20 {
            let a = class.point(&g.random_element(&mut rng, 2.0));
            let k = g.random_element(&mut rng, 2.0);
            let x = g.random_algebra(&mut rng, 1.0);
            let y = g.random_algebra(&mut rng, 1.0);
            let lhs = class.zeta_generators(&a, &x, &y).unwrap();
            let ka = &(&k * &a) * &k.inverse();
            let rhs = class
                .zeta_generators(&ka, &g.adjoint(&k, &x).unwrap(), &g.adjoint(&k, &y).unwrap())
                .unwrap();
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }
}
