//! Compact matrix Lie groups: arithmetic, exponential and logarithm, the
//! invariant inner product, and the pointwise invariant forms.
//!
//! Tangent vectors are always carried left-trivialized: a tangent at `g` is
//! stored as the algebra element `v` with actual tangent `g·v`. Every form
//! evaluator in the crate takes this convention.
//!
//! The inner product is `⟨X, Y⟩ = −c·Re tr(XY)` with `c = metric_scale`. The
//! Cartan 3-form is `λ(X, Y, Z) = ½⟨[X, Y], Z⟩` on left-trivialized tangents,
//! which is what `(1/12)[ω, ω]·ω` evaluates to on left-invariant fields.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, Schur, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    SU,
    SO,
    U1,
}

/// The metric scale for which the Cartan 3-form of SU(2) has period 1.
pub fn default_metric_scale() -> f64 {
    1.0 / (4.0 * PI * PI)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub family: Family,
    pub n: usize,
    pub metric_scale: f64,
}

impl GroupSpec {
    pub fn su(n: usize) -> Self {
        GroupSpec { family: Family::SU, n, metric_scale: default_metric_scale() }
    }

    pub fn so(n: usize) -> Self {
        GroupSpec { family: Family::SO, n, metric_scale: default_metric_scale() }
    }

    pub fn u1() -> Self {
        GroupSpec { family: Family::U1, n: 1, metric_scale: default_metric_scale() }
    }

    pub fn with_metric_scale(mut self, metric_scale: f64) -> Self {
        self.metric_scale = metric_scale;
        self
    }

    pub fn validate(&self) -> Result<()> {
        // Degenerate and indefinite metrics are rejected: only positive definite
        // invariant forms on compact groups are supported.
        if !(self.metric_scale > 0.0) || !self.metric_scale.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "metric_scale must be positive and finite, got {}",
                self.metric_scale
            )));
        }
        match self.family {
            Family::U1 if self.n != 1 => {
                Err(Error::InvalidSpec(format!("U1 requires n = 1, got {}", self.n)))
            }
            Family::SU | Family::SO if self.n < 2 => Err(Error::InvalidSpec(format!(
                "{:?} requires n >= 2, got {}",
                self.family, self.n
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Allowed unitarity / anti-Hermiticity defect.
    pub unitarity: f64,
    /// Minimal distance of eigenvalue arguments from ±π for `log`.
    pub log_margin: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { unitarity: 1e-10, log_margin: 1e-6 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement(CMat);

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement(CMat);

/// Element of the dual algebra, identified with the algebra via the metric.
#[derive(Clone, Debug, PartialEq)]
pub struct CoAlgebraElement(pub AlgebraElement);

impl GroupElement {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Wraps a matrix without validation; use [`Group::element`] for untrusted input.
    pub fn from_matrix_unchecked(m: CMat) -> Self {
        GroupElement(m)
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement(self.0.adjoint())
    }
}

impl std::ops::Mul for &GroupElement {
    type Output = GroupElement;
    fn mul(self, rhs: &GroupElement) -> GroupElement {
        GroupElement(&self.0 * &rhs.0)
    }
}

impl AlgebraElement {
    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn zero(n: usize) -> Self {
        AlgebraElement(CMat::zeros(n, n))
    }

    pub fn from_matrix_unchecked(m: CMat) -> Self {
        AlgebraElement(m)
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn scale(&self, s: f64) -> AlgebraElement {
        AlgebraElement(self.0.map(|z| z * s))
    }
}

impl std::ops::Add for &AlgebraElement {
    type Output = AlgebraElement;
    fn add(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement(&self.0 + &rhs.0)
    }
}

impl std::ops::Sub for &AlgebraElement {
    type Output = AlgebraElement;
    fn sub(self, rhs: &AlgebraElement) -> AlgebraElement {
        AlgebraElement(&self.0 - &rhs.0)
    }
}

impl std::ops::Neg for &AlgebraElement {
    type Output = AlgebraElement;
    fn neg(self) -> AlgebraElement {
        AlgebraElement(-&self.0)
    }
}

impl std::ops::Mul<f64> for &AlgebraElement {
    type Output = AlgebraElement;
    fn mul(self, s: f64) -> AlgebraElement {
        self.scale(s)
    }
}

impl std::ops::AddAssign<&AlgebraElement> for AlgebraElement {
    fn add_assign(&mut self, rhs: &AlgebraElement) {
        self.0 += &rhs.0;
    }
}

impl CoAlgebraElement {
    pub fn representative(&self) -> &AlgebraElement {
        &self.0
    }
}

/// A compact matrix group together with its invariant metric.
///
/// Cheap to clone; all operations are pure.
#[derive(Clone, Debug)]
pub struct Group {
    spec: GroupSpec,
    tol: Tolerances,
    basis: Arc<Vec<AlgebraElement>>,
    gram_inv: Arc<DMatrix<f64>>,
}

impl Group {
    pub fn new(spec: GroupSpec) -> Result<Self> {
        Self::with_tolerances(spec, Tolerances::default())
    }

    pub fn with_tolerances(spec: GroupSpec, tol: Tolerances) -> Result<Self> {
        spec.validate()?;
        let basis = build_basis(&spec);
        let d = basis.len();
        let mut gram = DMatrix::<f64>::zeros(d, d);
        for j in 0..d {
            for k in 0..d {
                gram[(j, k)] = inner_raw(spec.metric_scale, &basis[j].0, &basis[k].0);
            }
        }
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| Error::InvalidSpec("degenerate metric on algebra basis".into()))?;
        Ok(Group { spec, tol, basis: Arc::new(basis), gram_inv: Arc::new(gram_inv) })
    }

    /// SU(2) with the default (integral) metric scale.
    pub fn su2() -> Self {
        Group::new(GroupSpec::su(2)).expect("SU(2) spec is valid")
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Same group with a different metric scale.
    pub fn rescaled(&self, metric_scale: f64) -> Result<Group> {
        Group::with_tolerances(self.spec.clone().with_metric_scale(metric_scale), self.tol)
    }

    /// Matrix size.
    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn algebra_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(CMat::identity(self.n(), self.n()))
    }

    pub fn zero(&self) -> AlgebraElement {
        AlgebraElement::zero(self.n())
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got });
        }
        Ok(())
    }

    /// Validates a matrix as a group element.
    pub fn element(&self, m: CMat) -> Result<GroupElement> {
        let g = GroupElement(m);
        self.check_element(&g)?;
        Ok(g)
    }

    pub fn check_element(&self, g: &GroupElement) -> Result<()> {
        let m = &g.0;
        if m.nrows() != m.ncols() {
            return Err(Error::NotGroupElement("matrix is not square".into()));
        }
        self.check_dim(m.nrows())?;
        let n = self.n();
        let defect = (m.adjoint() * m - CMat::identity(n, n)).norm();
        if defect > self.tol.unitarity {
            return Err(Error::NotGroupElement(format!("unitarity defect {defect:e}")));
        }
        match self.spec.family {
            Family::SU => {
                let det = m.determinant();
                if (det - ONE).norm() > self.tol.unitarity {
                    return Err(Error::NotGroupElement(format!("determinant {det} != 1")));
                }
            }
            Family::SO => {
                let imag = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                if imag > self.tol.unitarity {
                    return Err(Error::NotGroupElement(format!("imaginary entries {imag:e}")));
                }
                let det = m.determinant();
                if (det - ONE).norm() > self.tol.unitarity {
                    return Err(Error::NotGroupElement(format!("determinant {det} != 1")));
                }
            }
            Family::U1 => {}
        }
        Ok(())
    }

    /// Validates a matrix as an algebra element.
    pub fn algebra(&self, m: CMat) -> Result<AlgebraElement> {
        let x = AlgebraElement(m);
        self.check_algebra(&x)?;
        Ok(x)
    }

    pub fn check_algebra(&self, x: &AlgebraElement) -> Result<()> {
        let m = &x.0;
        if m.nrows() != m.ncols() {
            return Err(Error::NotAlgebraElement("matrix is not square".into()));
        }
        self.check_dim(m.nrows())?;
        let scale = 1.0 + m.norm();
        let defect = (m + m.adjoint()).norm();
        if defect > self.tol.unitarity * scale {
            return Err(Error::NotAlgebraElement(format!("anti-Hermitian defect {defect:e}")));
        }
        match self.spec.family {
            Family::SU => {
                let tr = m.trace().norm();
                if tr > self.tol.unitarity * scale {
                    return Err(Error::NotAlgebraElement(format!("trace {tr:e}")));
                }
            }
            Family::SO => {
                let imag = m.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
                if imag > self.tol.unitarity * scale {
                    return Err(Error::NotAlgebraElement(format!("imaginary entries {imag:e}")));
                }
            }
            Family::U1 => {}
        }
        Ok(())
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> Result<GroupElement> {
        self.check_dim(a.dim())?;
        self.check_dim(b.dim())?;
        Ok(a * b)
    }

    /// `XY − YX`.
    pub fn bracket(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        Ok(AlgebraElement(&x.0 * &y.0 - &y.0 * &x.0))
    }

    /// `−c·Re tr(XY)`.
    pub fn inner(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<f64> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        Ok(inner_raw(self.spec.metric_scale, &x.0, &y.0))
    }

    /// `g X g⁻¹`.
    pub fn adjoint(&self, g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_dim(g.dim())?;
        self.check_dim(x.dim())?;
        Ok(AlgebraElement(&g.0 * &x.0 * g.0.adjoint()))
    }

    /// `g⁻¹ X g`.
    pub fn adjoint_inv(&self, g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_dim(g.dim())?;
        self.check_dim(x.dim())?;
        Ok(AlgebraElement(g.0.adjoint() * &x.0 * &g.0))
    }

    /// Coadjoint action; with the metric identification this is `Ad_g` on representatives.
    pub fn coadjoint(&self, g: &GroupElement, xi: &CoAlgebraElement) -> Result<CoAlgebraElement> {
        Ok(CoAlgebraElement(self.adjoint(g, &xi.0)?))
    }

    /// Pairing of a dual element with an algebra element.
    pub fn pair(&self, xi: &CoAlgebraElement, x: &AlgebraElement) -> Result<f64> {
        self.inner(&xi.0, x)
    }

    /// Metric norm `sqrt⟨X, X⟩`.
    pub fn metric_norm(&self, x: &AlgebraElement) -> Result<f64> {
        Ok(self.inner(x, x)?.max(0.0).sqrt())
    }

    /// Frobenius distance between two group elements.
    pub fn dist(&self, a: &GroupElement, b: &GroupElement) -> f64 {
        (&a.0 - &b.0).norm()
    }

    pub fn exp(&self, x: &AlgebraElement) -> Result<GroupElement> {
        self.check_dim(x.dim())?;
        let m = &x.0;
        let out = match self.spec.family {
            Family::U1 => CMat::from_element(1, 1, m[(0, 0)].exp()),
            Family::SU if self.spec.n == 2 => exp_su2(m),
            Family::SO => {
                let e = exp_hermitian(m);
                e.map(|z| Complex64::new(z.re, 0.0))
            }
            Family::SU => exp_hermitian(m),
        };
        Ok(GroupElement(out))
    }

    /// Principal logarithm; errors on the cut locus.
    pub fn log(&self, g: &GroupElement) -> Result<AlgebraElement> {
        self.check_dim(g.dim())?;
        let margin = self.tol.log_margin;
        let m = &g.0;
        match self.spec.family {
            Family::U1 => {
                let arg = m[(0, 0)].arg();
                check_cut(arg, margin)?;
                Ok(AlgebraElement(CMat::from_element(1, 1, Complex64::new(0.0, arg))))
            }
            Family::SU if self.spec.n == 2 => log_su2(m, margin).map(AlgebraElement),
            Family::SO => {
                let l = log_unitary(m, margin)?;
                Ok(AlgebraElement(l.map(|z| Complex64::new(z.re, 0.0))))
            }
            Family::SU => {
                let mut l = log_unitary(m, margin)?;
                let tr = l.trace();
                if tr.norm() > 1e-8 {
                    return Err(Error::LogNotInAlgebra(tr.norm()));
                }
                let n = self.n() as f64;
                for k in 0..self.n() {
                    l[(k, k)] -= tr / n;
                }
                Ok(AlgebraElement(l))
            }
        }
    }

    /// Left-trivialized step `log(a⁻¹ b)`.
    pub fn log_step(&self, a: &GroupElement, b: &GroupElement) -> Result<AlgebraElement> {
        self.log(&GroupElement(a.0.adjoint() * &b.0))
    }

    /// `g·exp(t·v)`.
    pub fn exp_step(&self, g: &GroupElement, v: &AlgebraElement, t: f64) -> Result<GroupElement> {
        Ok(g * &self.exp(&v.scale(t))?)
    }

    /// Rotation angle of `exp(X)`: the spectral norm of `X`.
    pub fn step_norm(&self, x: &AlgebraElement) -> f64 {
        let m = &x.0;
        match self.spec.family {
            Family::U1 => m[(0, 0)].norm(),
            Family::SU if self.spec.n == 2 => {
                let (alpha, beta) = su2_coefficients(m);
                (alpha * alpha + beta.norm_sqr()).sqrt()
            }
            _ => {
                let h = hermitian_part_of_ix(m);
                let eig = SymmetricEigen::new(h);
                eig.eigenvalues.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
            }
        }
    }

    /// `λ(X, Y, Z) = ½⟨[X, Y], Z⟩`, bi-invariant so independent of the base point.
    pub fn cartan3(&self, x: &AlgebraElement, y: &AlgebraElement, z: &AlgebraElement) -> Result<f64> {
        let b = self.bracket(x, y)?;
        Ok(0.5 * self.inner(&b, z)?)
    }

    /// `ϑ♭` at `g` on the tangent `g·v`: `½(v + g v g⁻¹)`.
    pub fn theta_flat(&self, g: &GroupElement, v: &AlgebraElement) -> Result<AlgebraElement> {
        let ad = self.adjoint(g, v)?;
        Ok((&ad + v).scale(0.5))
    }

    /// `ϑ`: metric dual of [`Group::theta_flat`].
    pub fn theta(&self, g: &GroupElement, v: &AlgebraElement) -> Result<CoAlgebraElement> {
        Ok(CoAlgebraElement(self.theta_flat(g, v)?))
    }

    /// Fundamental field of conjugation by `exp(tX)` at `g`, left-trivialized: `Ad_{g⁻¹}X − X`.
    pub fn conjugation_field(&self, g: &GroupElement, x: &AlgebraElement) -> Result<AlgebraElement> {
        Ok(&self.adjoint_inv(g, x)? - x)
    }

    /// Coordinates of `X` in [`Group::basis`].
    pub fn coords(&self, x: &AlgebraElement) -> Result<Vec<f64>> {
        let rhs: Vec<f64> =
            self.basis.iter().map(|b| self.inner(b, x)).collect::<Result<_>>()?;
        let rhs = nalgebra::DVector::from_vec(rhs);
        Ok((&*self.gram_inv * rhs).iter().copied().collect())
    }

    pub fn from_coords(&self, c: &[f64]) -> Result<AlgebraElement> {
        if c.len() != self.algebra_dim() {
            return Err(Error::DimensionMismatch { expected: self.algebra_dim(), got: c.len() });
        }
        let mut acc = self.zero();
        for (b, &ck) in self.basis.iter().zip(c) {
            acc += &b.scale(ck);
        }
        Ok(acc)
    }

    /// Gaussian algebra element with coordinate standard deviation `scale`.
    pub fn random_algebra<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> AlgebraElement {
        let c: Vec<f64> =
            (0..self.algebra_dim()).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        self.from_coords(&c).expect("coordinate count matches basis")
    }

    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> GroupElement {
        self.exp(&self.random_algebra(rng, scale)).expect("dimension matches")
    }

    /// Unitarity defect `‖g*g − 1‖`.
    pub fn unitarity_defect(&self, g: &GroupElement) -> f64 {
        let n = g.dim();
        (g.0.adjoint() * &g.0 - CMat::identity(n, n)).norm()
    }

    /// Matrix of `Ad_g` in [`Group::basis`] coordinates.
    pub fn adjoint_matrix(&self, g: &GroupElement) -> Result<DMatrix<f64>> {
        let d = self.algebra_dim();
        let mut out = DMatrix::zeros(d, d);
        for (k, b) in self.basis.iter().enumerate() {
            let c = self.coords(&self.adjoint(g, b)?)?;
            for j in 0..d {
                out[(j, k)] = c[j];
            }
        }
        Ok(out)
    }
}

fn inner_raw(c: f64, x: &CMat, y: &CMat) -> f64 {
    // Re tr(XY) without forming the product.
    let n = x.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            acc += (x[(i, k)] * y[(k, i)]).re;
        }
    }
    -c * acc
}

fn build_basis(spec: &GroupSpec) -> Vec<AlgebraElement> {
    let n = spec.n;
    let mut out = Vec::new();
    match spec.family {
        Family::U1 => out.push(AlgebraElement(CMat::from_element(1, 1, I))),
        Family::SU => {
            let half_i = Complex64::new(0.0, -0.5);
            for j in 0..n {
                for k in (j + 1)..n {
                    let mut sym = CMat::zeros(n, n);
                    sym[(j, k)] = half_i;
                    sym[(k, j)] = half_i;
                    out.push(AlgebraElement(sym));
                    let mut anti = CMat::zeros(n, n);
                    anti[(j, k)] = Complex64::new(-0.5, 0.0);
                    anti[(k, j)] = Complex64::new(0.5, 0.0);
                    out.push(AlgebraElement(anti));
                }
            }
            for l in 1..n {
                let norm = (2.0 / (l * (l + 1)) as f64).sqrt();
                let mut d = CMat::zeros(n, n);
                for k in 0..l {
                    d[(k, k)] = Complex64::new(0.0, -0.5 * norm);
                }
                d[(l, l)] = Complex64::new(0.0, 0.5 * l as f64 * norm);
                out.push(AlgebraElement(d));
            }
        }
        Family::SO => {
            for j in 0..n {
                for k in (j + 1)..n {
                    let mut m = CMat::zeros(n, n);
                    m[(k, j)] = ONE;
                    m[(j, k)] = -ONE;
                    out.push(AlgebraElement(m));
                }
            }
        }
    }
    out
}

fn check_cut(arg: f64, margin: f64) -> Result<()> {
    if arg.abs() > PI - margin {
        return Err(Error::CutLocus { arg, margin });
    }
    Ok(())
}

/// For `X = [[iα, −β̄], [β, −iα]]` returns `(α, β)`, projecting away round-off.
fn su2_coefficients(m: &CMat) -> (f64, Complex64) {
    let alpha = 0.5 * (m[(0, 0)].im - m[(1, 1)].im);
    let beta = 0.5 * (m[(1, 0)] - m[(0, 1)].conj());
    (alpha, beta)
}

fn su2_matrix(alpha: f64, beta: Complex64, scale: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            Complex64::new(0.0, alpha * scale),
            -beta.conj() * scale,
            beta * scale,
            Complex64::new(0.0, -alpha * scale),
        ],
    )
}

fn exp_su2(m: &CMat) -> CMat {
    let (alpha, beta) = su2_coefficients(m);
    let theta = (alpha * alpha + beta.norm_sqr()).sqrt();
    let (c, sinc) = if theta < 1e-8 {
        (1.0 - 0.5 * theta * theta, 1.0 - theta * theta / 6.0)
    } else {
        (theta.cos(), theta.sin() / theta)
    };
    let mut out = su2_matrix(alpha, beta, sinc);
    out[(0, 0)] += c;
    out[(1, 1)] += c;
    out
}

fn log_su2(m: &CMat, margin: f64) -> Result<CMat> {
    let cos = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    // (g − g†)/2 = sin θ · N with N² = −1.
    let alpha = 0.5 * (m[(0, 0)].im - m[(1, 1)].im);
    let beta = 0.5 * (m[(1, 0)] - m[(0, 1)].conj());
    let sin = (alpha * alpha + beta.norm_sqr()).sqrt();
    let theta = sin.atan2(cos);
    check_cut(theta, margin)?;
    let factor = if sin < 1e-300 { 1.0 } else { theta / sin };
    Ok(su2_matrix(alpha, beta, factor))
}

fn hermitian_part_of_ix(m: &CMat) -> CMat {
    let h = m.map(|z| z * I);
    (&h + h.adjoint()).map(|z| z * 0.5)
}

fn exp_hermitian(m: &CMat) -> CMat {
    // X = −iH with H = iX Hermitian, so exp(X) = V diag(e^{−iλ}) V†.
    let h = hermitian_part_of_ix(m);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let n = m.nrows();
    let mut d = CMat::zeros(n, n);
    for k in 0..n {
        d[(k, k)] = Complex64::new(0.0, -eig.eigenvalues[k]).exp();
    }
    v * d * v.adjoint()
}

fn log_unitary(m: &CMat, margin: f64) -> Result<CMat> {
    let n = m.nrows();
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or_else(|| Error::NotGroupElement("Schur decomposition did not converge".into()))?;
    let (q, t) = schur.unpack();
    let mut d = CMat::zeros(n, n);
    for k in 0..n {
        let arg = t[(k, k)].arg();
        check_cut(arg, margin)?;
        d[(k, k)] = Complex64::new(0.0, arg);
    }
    let l = &q * d * q.adjoint();
    Ok((&l - l.adjoint()).map(|z| z * 0.5))
}

/// JSON encoding of matrices: row-major nested arrays of `[re, im]` pairs.
pub mod matrix_serde {
    use super::*;

    pub fn to_rows(m: &CMat) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
            .collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> std::result::Result<CMat, String> {
        let n = rows.len();
        if n == 0 {
            return Err("empty matrix".into());
        }
        let cols = rows[0].len();
        if rows.iter().any(|r| r.len() != cols) {
            return Err("ragged matrix rows".into());
        }
        let mut m = CMat::zeros(n, cols);
        for (i, row) in rows.iter().enumerate() {
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = Complex64::new(z[0], z[1]);
            }
        }
        Ok(m)
    }

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> std::result::Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<CMat, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(d)?;
        from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

macro_rules! matrix_newtype_serde {
    ($t:ident) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                matrix_serde::serialize(&self.0, s)
            }
        }
        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                matrix_serde::deserialize(d).map($t)
            }
        }
    };
}

matrix_newtype_serde!(GroupElement);
matrix_newtype_serde!(AlgebraElement);

impl Serialize for CoAlgebraElement {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for CoAlgebraElement {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        AlgebraElement::deserialize(d).map(CoAlgebraElement)
    }
}
