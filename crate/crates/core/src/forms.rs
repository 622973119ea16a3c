//! Points and tangents of product groups `K^m`, form evaluators, pullbacks
//! along group-valued maps, and the finite-difference exterior derivative.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{AlgebraElement, Group, GroupElement};

/// A point of `K^m`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupTuple(pub Vec<GroupElement>);

/// A left-trivialized tangent to `K^m`: the actual tangent is `(p_i·v_i)_i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentTuple(pub Vec<AlgebraElement>);

/// A tangent together with its base point.
#[derive(Clone, Debug, PartialEq)]
pub struct TangentAtTuple {
    pub base: GroupTuple,
    pub components: TangentTuple,
}

impl GroupTuple {
    pub fn single(g: GroupElement) -> Self {
        GroupTuple(vec![g])
    }

    pub fn identity(group: &Group, m: usize) -> Self {
        GroupTuple(vec![group.identity(); m])
    }

    pub fn random<R: Rng + ?Sized>(group: &Group, rng: &mut R, m: usize, scale: f64) -> Self {
        GroupTuple((0..m).map(|_| group.random_element(rng, scale)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Componentwise `p_i·exp(t·v_i)`.
    pub fn step(&self, group: &Group, v: &TangentTuple, t: f64) -> Result<GroupTuple> {
        check_len(self.len(), v.len())?;
        self.0
            .iter()
            .zip(&v.0)
            .map(|(g, x)| group.exp_step(g, x, t))
            .collect::<Result<Vec<_>>>()
            .map(GroupTuple)
    }

    /// Componentwise `g p_i g⁻¹`.
    pub fn conjugate(&self, g: &GroupElement) -> GroupTuple {
        let gi = g.inverse();
        GroupTuple(self.0.iter().map(|p| &(g * p) * &gi).collect())
    }

    /// Largest componentwise Frobenius distance.
    pub fn dist(&self, group: &Group, other: &GroupTuple) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| group.dist(a, b)).fold(0.0, f64::max)
    }
}

impl TangentTuple {
    pub fn zero(group: &Group, m: usize) -> Self {
        TangentTuple(vec![group.zero(); m])
    }

    pub fn random<R: Rng + ?Sized>(group: &Group, rng: &mut R, m: usize, scale: f64) -> Self {
        TangentTuple((0..m).map(|_| group.random_algebra(rng, scale)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scale(&self, s: f64) -> TangentTuple {
        TangentTuple(self.0.iter().map(|x| x.scale(s)).collect())
    }

    pub fn add(&self, other: &TangentTuple) -> TangentTuple {
        TangentTuple(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|x| x.norm().powi(2)).sum::<f64>().sqrt()
    }

    /// Componentwise `Ad_g`, the tangent map of simultaneous conjugation in
    /// left-trivialized form.
    pub fn adjoint(&self, group: &Group, g: &GroupElement) -> Result<TangentTuple> {
        self.0.iter().map(|x| group.adjoint(g, x)).collect::<Result<Vec<_>>>().map(TangentTuple)
    }

    /// Componentwise bracket; the bracket of the left-invariant fields.
    pub fn bracket(&self, group: &Group, other: &TangentTuple) -> Result<TangentTuple> {
        check_len(self.len(), other.len())?;
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| group.bracket(a, b))
            .collect::<Result<Vec<_>>>()
            .map(TangentTuple)
    }
}

impl TangentAtTuple {
    pub fn new(base: GroupTuple, components: TangentTuple) -> Result<Self> {
        check_len(base.len(), components.len())?;
        Ok(TangentAtTuple { base, components })
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::ArityMismatch { expected, got });
    }
    Ok(())
}

/// Fundamental field of simultaneous conjugation by `exp(tX)` at `p`,
/// left-trivialized componentwise as `Ad_{p_i⁻¹}X − X`.
pub fn conjugation_field(group: &Group, p: &GroupTuple, x: &AlgebraElement) -> Result<TangentTuple> {
    p.0.iter().map(|g| group.conjugation_field(g, x)).collect::<Result<Vec<_>>>().map(TangentTuple)
}

/// A real-valued differential form on `K^m`.
pub trait Form: Send + Sync {
    fn degree(&self) -> usize;
    fn arity(&self) -> usize;
    fn eval(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64>;
}

/// A form depending polynomially on an algebra element `X` (an equivariant
/// form in the Cartan model).
pub trait EquivariantForm: Send + Sync {
    fn degree(&self) -> usize;
    fn arity(&self) -> usize;
    fn eval(&self, x: &AlgebraElement, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64>;
}

/// Views an ordinary form as an equivariant form constant in `X`.
pub struct ConstantInX<'a>(pub &'a dyn Form);

impl EquivariantForm for ConstantInX<'_> {
    fn degree(&self) -> usize {
        self.0.degree()
    }
    fn arity(&self) -> usize {
        self.0.arity()
    }
    fn eval(&self, _x: &AlgebraElement, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        self.0.eval(p, v)
    }
}

pub(crate) fn check_form_args(degree: usize, arity: usize, p: &GroupTuple, v: &[&TangentTuple]) -> Result<()> {
    if v.len() != degree {
        return Err(Error::DegreeMismatch { degree, got: v.len() });
    }
    check_len(arity, p.len())?;
    for t in v {
        check_len(arity, t.len())?;
    }
    Ok(())
}

/// `Σ_i pr_i*λ` on `K^m`.
#[derive(Clone, Debug)]
pub struct CartanForm {
    pub group: Group,
    pub arity: usize,
}

impl Form for CartanForm {
    fn degree(&self) -> usize {
        3
    }
    fn arity(&self) -> usize {
        self.arity
    }
    fn eval(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(3, self.arity, p, v)?;
        let mut acc = 0.0;
        for i in 0..self.arity {
            acc += self.group.cartan3(&v[0].0[i], &v[1].0[i], &v[2].0[i])?;
        }
        Ok(acc)
    }
}

/// `⟨ϑ, X⟩` on `K`.
#[derive(Clone, Debug)]
pub struct ThetaForm {
    pub group: Group,
}

impl EquivariantForm for ThetaForm {
    fn degree(&self) -> usize {
        1
    }
    fn arity(&self) -> usize {
        1
    }
    fn eval(&self, x: &AlgebraElement, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(1, 1, p, v)?;
        let th = self.group.theta(&p.0[0], &v[0].0[0])?;
        self.group.pair(&th, x)
    }
}

/// A smooth map `K^m → K` with its left-trivialized differential.
pub trait GroupMap: Send + Sync {
    fn group(&self) -> &Group;
    fn arity(&self) -> usize;
    fn apply(&self, p: &GroupTuple) -> Result<GroupElement>;
    /// Left-trivialized image of `v` at `apply(p)`.
    fn differential(&self, p: &GroupTuple, v: &TangentTuple) -> Result<AlgebraElement>;
}

/// The identity map of `K`, viewed as `K^1 → K`.
#[derive(Clone, Debug)]
pub struct IdentityMap {
    pub group: Group,
}

impl GroupMap for IdentityMap {
    fn group(&self) -> &Group {
        &self.group
    }
    fn arity(&self) -> usize {
        1
    }
    fn apply(&self, p: &GroupTuple) -> Result<GroupElement> {
        check_len(1, p.len())?;
        Ok(p.0[0].clone())
    }
    fn differential(&self, p: &GroupTuple, v: &TangentTuple) -> Result<AlgebraElement> {
        check_len(1, p.len())?;
        check_len(1, v.len())?;
        Ok(v.0[0].clone())
    }
}

/// `f*λ` for a map `f: K^m → K`.
pub struct PulledCartan<'a> {
    pub map: &'a dyn GroupMap,
}

impl Form for PulledCartan<'_> {
    fn degree(&self) -> usize {
        3
    }
    fn arity(&self) -> usize {
        self.map.arity()
    }
    fn eval(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(3, self.arity(), p, v)?;
        let g = self.map.group();
        let a = self.map.differential(p, v[0])?;
        let b = self.map.differential(p, v[1])?;
        let c = self.map.differential(p, v[2])?;
        g.cartan3(&a, &b, &c)
    }
}

/// `f*⟨ϑ, X⟩` for a map `f: K^m → K`.
pub struct PulledTheta<'a> {
    pub map: &'a dyn GroupMap,
}

impl EquivariantForm for PulledTheta<'_> {
    fn degree(&self) -> usize {
        1
    }
    fn arity(&self) -> usize {
        self.map.arity()
    }
    fn eval(&self, x: &AlgebraElement, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
        check_form_args(1, self.arity(), p, v)?;
        let g = self.map.group();
        let image = self.map.apply(p)?;
        let dv = self.map.differential(p, v[0])?;
        g.pair(&g.theta(&image, &dv)?, x)
    }
}

/// `δ(α)(X) = −α(X)(X_N, …)` with `X_N` the conjugation field.
pub fn delta_equivariant(
    group: &Group,
    alpha: &dyn EquivariantForm,
    x: &AlgebraElement,
    p: &GroupTuple,
    v: &[&TangentTuple],
) -> Result<f64> {
    if alpha.degree() == 0 || v.len() + 1 != alpha.degree() {
        return Err(Error::DegreeMismatch { degree: alpha.degree(), got: v.len() + 1 });
    }
    let xn = conjugation_field(group, p, x)?;
    let mut args: Vec<&TangentTuple> = Vec::with_capacity(v.len() + 1);
    args.push(&xn);
    args.extend_from_slice(v);
    Ok(-alpha.eval(x, p, &args)?)
}

/// Smallest finite-difference step accepted by [`exterior_derivative`].
pub const MIN_FD_STEP: f64 = 1e-10;

/// Exterior derivative of a `k`-form at `p` on the left-invariant fields
/// generated by `v` (`k + 1` of them), with central differences of step `h`
/// along `p·exp(±h v_i)`:
///
/// `dα(V_0..V_k) = Σ (−1)^i V_i α(..V̂_i..) + Σ_{i<j} (−1)^{i+j} α([V_i,V_j], ..V̂_i..V̂_j..)`.
pub fn exterior_derivative<F>(group: &Group, alpha: F, p: &GroupTuple, v: &[&TangentTuple], h: f64) -> Result<f64>
where
    F: Fn(&GroupTuple, &[&TangentTuple]) -> Result<f64>,
{
    if !(h >= MIN_FD_STEP) {
        return Err(Error::StepUnderflow(h));
    }
    let n = v.len();
    let sign = |k: usize| if k.is_multiple_of(2) { 1.0 } else { -1.0 };
    let mut acc = 0.0;
    for i in 0..n {
        let rest: Vec<&TangentTuple> = (0..n).filter(|&k| k != i).map(|k| v[k]).collect();
        let plus = alpha(&p.step(group, v[i], h)?, &rest)?;
        let minus = alpha(&p.step(group, v[i], -h)?, &rest)?;
        acc += sign(i) * (plus - minus) / (2.0 * h);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let br = v[i].bracket(group, v[j])?;
            let mut args: Vec<&TangentTuple> = vec![&br];
            args.extend((0..n).filter(|&k| k != i && k != j).map(|k| v[k]));
            acc += sign(i + j) * alpha(p, &args)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::GroupSpec;
    use crate::rng::stream;

    #[test]
    fn cartan_form_is_closed() {
        let g = Group::su2();
        let lam = CartanForm { group: g.clone(), arity: 2 };
        let mut rng = stream(20, 0);
        for _ in 0..5 {
            let p = GroupTuple::random(&g, &mut rng, 2, 1.0);
            let vs: Vec<TangentTuple> = (0..4).map(|_| TangentTuple::random(&g, &mut rng, 2, 1.0)).collect();
            let refs: Vec<&TangentTuple> = vs.iter().collect();
            let d = exterior_derivative(&g, |q, w| lam.eval(q, w), &p, &refs, 1e-3).unwrap();
            // λ is bi-invariant: the derivative terms vanish and the bracket terms cancel by Jacobi.
            assert!(d.abs() < 1e-12, "{d}");
        }
    }

    #[test]
    fn d_of_theta_flat_pairing_matches_closed_form() {
        // d⟨ϑ, X⟩ = λ(X_N, ·, ·), i.e. δλ = −dϑ.
        let g = Group::su2();
        let th = ThetaForm { group: g.clone() };
        let mut rng = stream(21, 0);
        for _ in 0..10 {
            let p = GroupTuple::random(&g, &mut rng, 1, 1.0);
            let x = g.random_algebra(&mut rng, 1.0);
            let v = TangentTuple::random(&g, &mut rng, 1, 1.0);
            let w = TangentTuple::random(&g, &mut rng, 1, 1.0);
            let d = exterior_derivative(&g, |q, t| th.eval(&x, q, t), &p, &[&v, &w], 1e-4).unwrap();
            let xn = conjugation_field(&g, &p, &x).unwrap();
            let lam = g.cartan3(&xn.0[0], &v.0[0], &w.0[0]).unwrap();
            assert!((d - lam).abs() < 1e-8, "{d} {lam}");
        }
    }

    #[test]
    fn delta_of_theta_vanishes() {
        let g = Group::new(GroupSpec::su(3)).unwrap();
        let th = ThetaForm { group: g.clone() };
        let mut rng = stream(22, 0);
        for _ in 0..20 {
            let p = GroupTuple::random(&g, &mut rng, 1, 1.0);
            let x = g.random_algebra(&mut rng, 1.0);
            assert!(delta_equivariant(&g, &th, &x, &p, &[]).unwrap().abs() < 1e-14);
        }
    }

    #[test]
    fn delta_with_zero_x_vanishes_and_checks_degree() {
        let g = Group::su2();
        let lam = CartanForm { group: g.clone(), arity: 1 };
        let mut rng = stream(23, 0);
        let p = GroupTuple::random(&g, &mut rng, 1, 1.0);
        let v = TangentTuple::random(&g, &mut rng, 1, 1.0);
        let w = TangentTuple::random(&g, &mut rng, 1, 1.0);
        let eq = ConstantInX(&lam);
        assert_eq!(delta_equivariant(&g, &eq, &g.zero(), &p, &[&v, &w]).unwrap(), 0.0);
        assert!(matches!(
            delta_equivariant(&g, &eq, &g.zero(), &p, &[&v]),
            Err(Error::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn step_underflow_is_reported() {
        let g = Group::su2();
        let p = GroupTuple::identity(&g, 1);
        let v = TangentTuple::zero(&g, 1);
        let r = exterior_derivative(&g, |_, _| Ok(0.0), &p, &[&v], 0.0);
        assert!(matches!(r, Err(Error::StepUnderflow(_))));
    }
}
