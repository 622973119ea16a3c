//! The fiber `P_f = {(q, u) : u a path in K from f(o) to f(q)}` of a map
//! `f: M → K`: fiber points and tangents, the closed 2-form
//! `ζ_fiber = β_λ − π*ζ`, holonomy exponents of string homotopies, relative
//! periods, juxtaposition of strings, and small loop homotopies for the
//! curvature check.

use serde::Serialize;

use crate::class::ConjugacyClass;
use crate::error::{Error, Result};
use crate::forms::{CartanForm, Form, GroupMap, GroupTuple, TangentTuple};
use crate::lie::{AlgebraElement, Group, GroupElement};
use crate::mesh::{CubeMesh, HomotopyCD11, Mesh, PathMesh, SquareMesh, StringCD1, ValidationReport, MESH_TOL, STEP_BOUND};
use crate::quadrature::{integer_snap, integrate_2form, integrate_3form, richardson, PeriodReport, Richardson, Snap};
use crate::words::{Word, WordForm};

/// Where the map `f` and its primitive `ζ` come from.
#[derive(Clone, Debug)]
pub enum Source {
    Word(WordForm),
    Class(ConjugacyClass),
}

/// The triple `(f, λ, ζ)` with a basepoint `o` of the source.
#[derive(Clone, Debug)]
pub struct MapData {
    source: Source,
    basepoint: GroupTuple,
    image_basepoint: GroupElement,
}

fn is_central(group: &Group, g: &GroupElement) -> Result<bool> {
    for b in group.basis() {
        if (&group.adjoint(g, b)? - b).norm() > 1e-12 {
            return Ok(false);
        }
    }
    Ok(true)
}

impl MapData {
    /// A word map based at the identity tuple.
    pub fn word(form: WordForm) -> Result<Self> {
        let basepoint = GroupTuple::identity(form.group(), form.word().arity());
        let image_basepoint = form.apply(&basepoint)?;
        Ok(MapData { source: Source::Word(form), basepoint, image_basepoint })
    }

    /// The surface relator `∏[a_j, b_j]` of the given genus.
    pub fn relator(group: Group, genus: usize) -> Result<Self> {
        MapData::word(WordForm::new(group, Word::surface_relator(genus)))
    }

    /// The inclusion of a conjugacy class, based at its representative.
    pub fn class(class: ConjugacyClass) -> Result<Self> {
        let h = class.representative().clone();
        Ok(MapData { source: Source::Class(class), basepoint: GroupTuple::single(h.clone()), image_basepoint: h })
    }

    pub fn source(&self) -> &Source {
        &self.source
    }

    pub fn group(&self) -> &Group {
        self.map().group()
    }

    pub fn map(&self) -> &dyn GroupMap {
        match &self.source {
            Source::Word(w) => w,
            Source::Class(c) => c,
        }
    }

    /// The primitive `ζ` on the source, with `dζ = f*λ`.
    pub fn primitive(&self) -> &dyn Form {
        match &self.source {
            Source::Word(w) => w,
            Source::Class(c) => c,
        }
    }

    pub fn cartan(&self) -> CartanForm {
        CartanForm { group: self.group().clone(), arity: 1 }
    }

    pub fn arity(&self) -> usize {
        self.map().arity()
    }

    pub fn basepoint(&self) -> &GroupTuple {
        &self.basepoint
    }

    /// `f(o)`, the start of every fiber path.
    pub fn image_basepoint(&self) -> &GroupElement {
        &self.image_basepoint
    }

    pub fn rescaled(&self, metric_scale: f64) -> Result<MapData> {
        let source = match &self.source {
            Source::Word(w) => Source::Word(w.rescaled(metric_scale)?),
            Source::Class(c) => Source::Class(c.rescaled(metric_scale)?),
        };
        Ok(MapData { source, ..self.clone() })
    }

    /// Errors unless conjugation fixes `o` and `f(o)`, which the momentum map
    /// needs for the action to preserve the fiber.
    pub fn require_fixed_basepoint(&self) -> Result<()> {
        let g = self.group();
        for x in self.basepoint.0.iter().chain(std::iter::once(&self.image_basepoint)) {
            if !is_central(g, x)? {
                return Err(Error::BasepointNotFixed("basepoint is not central".into()));
            }
        }
        Ok(())
    }

    pub fn describe(&self) -> String {
        match &self.source {
            Source::Word(w) => format!("word {}", w.word()),
            Source::Class(_) => "conjugacy class".into(),
        }
    }
}

/// A point `(q, u)` of the fiber.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberPoint {
    pub q: GroupTuple,
    pub u: PathMesh,
}

/// A tangent `(v_q, V)` at a fiber point: `V` is a left-trivialized field
/// along `u`, one value per sample, with `V(0) = 0` and `V(1) = df_q(v_q)`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiberTangent {
    pub vq: TangentTuple,
    pub field: Vec<AlgebraElement>,
}

impl FiberPoint {
    pub fn new(data: &MapData, q: GroupTuple, u: PathMesh, tol: f64) -> Result<Self> {
        let p = FiberPoint { q, u };
        p.validate(data, tol)?.into_result("not a fiber point")?;
        Ok(p)
    }

    pub fn validate(&self, data: &MapData, tol: f64) -> Result<ValidationReport> {
        let g = data.group();
        if self.u.arity() != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: self.u.arity() });
        }
        let fq = data.map().apply(&self.q)?;
        Ok(ValidationReport::new(
            vec![
                ("u(0) = f(o)".into(), g.dist(&self.u.first().0[0], data.image_basepoint())),
                ("u(1) = f(q)".into(), g.dist(&self.u.last().0[0], &fq)),
            ],
            tol,
        ))
    }

    pub fn conjugate(&self, g: &GroupElement) -> FiberPoint {
        FiberPoint { q: self.q.conjugate(g), u: self.u.conjugate(g) }
    }

    /// The fundamental tangent `X_P` of conjugation by `exp(tX)`: the
    /// conjugation field on `q` and pointwise along `u`.
    pub fn fundamental(&self, group: &Group, x: &AlgebraElement) -> Result<FiberTangent> {
        let vq = crate::forms::conjugation_field(group, &self.q, x)?;
        let field = self
            .u
            .samples()
            .iter()
            .map(|s| group.conjugation_field(&s.0[0], x))
            .collect::<Result<Vec<_>>>()?;
        Ok(FiberTangent { vq, field })
    }
}

impl FiberTangent {
    pub fn zero(group: &Group, p: &FiberPoint) -> Self {
        FiberTangent { vq: TangentTuple::zero(group, p.q.len()), field: vec![group.zero(); p.u.len()] }
    }

    pub fn validate(&self, data: &MapData, p: &FiberPoint, tol: f64) -> Result<ValidationReport> {
        check_field(p, self)?;
        let end = data.map().differential(&p.q, &self.vq)?;
        let last = self.field.last().expect("nonempty field");
        Ok(ValidationReport::new(
            vec![("V(0) = 0".into(), self.field[0].norm()), ("V(1) = df(v_q)".into(), (last - &end).norm())],
            tol,
        ))
    }

    pub fn scale(&self, s: f64) -> FiberTangent {
        FiberTangent { vq: self.vq.scale(s), field: self.field.iter().map(|v| v.scale(s)).collect() }
    }

    pub fn add(&self, other: &FiberTangent) -> FiberTangent {
        FiberTangent {
            vq: self.vq.add(&other.vq),
            field: self.field.iter().zip(&other.field).map(|(a, b)| a + b).collect(),
        }
    }
}

fn check_field(p: &FiberPoint, t: &FiberTangent) -> Result<()> {
    if t.field.len() != p.u.len() {
        return Err(Error::LengthMismatch(format!("field has {} values along a path of {} samples", t.field.len(), p.u.len())));
    }
    if t.vq.len() != p.q.len() {
        return Err(Error::ArityMismatch { expected: p.q.len(), got: t.vq.len() });
    }
    Ok(())
}

/// The fiber point `(w(1), φ(·, 1))` of a valid string.
pub fn fiber_point(s: &StringCD1, data: &MapData) -> Result<FiberPoint> {
    s.ensure_valid(data.map(), MESH_TOL)?;
    FiberPoint::new(data, s.w.last().clone(), s.top(), MESH_TOL)
}

/// `β_λ(u)(V, W) = ∫ λ(u⁻¹u̇, V, W) dt` with midpoint-averaged field values.
pub fn beta_lambda(group: &Group, u: &PathMesh, v: &[AlgebraElement], w: &[AlgebraElement]) -> Result<f64> {
    if v.len() != u.len() || w.len() != u.len() {
        return Err(Error::LengthMismatch(format!(
            "fields of lengths {} and {} along a path of {} samples",
            v.len(),
            w.len(),
            u.len()
        )));
    }
    let mut acc = crate::quadrature::CompensatedSum::default();
    for i in 0..u.cells()[0] {
        let d = group.log_step(&u.get([i]).0[0], &u.get([i + 1]).0[0])?;
        let vm = (&v[i] + &v[i + 1]).scale(0.5);
        let wm = (&w[i] + &w[i + 1]).scale(0.5);
        acc.add(group.cartan3(&d, &vm, &wm)?);
    }
    Ok(acc.value())
}

/// `ζ_fiber(T₁, T₂) = β_λ(u)(V₁, V₂) − ζ(q)(v₁, v₂)`.
pub fn zeta_fiber(data: &MapData, p: &FiberPoint, t1: &FiberTangent, t2: &FiberTangent) -> Result<f64> {
    check_field(p, t1)?;
    check_field(p, t2)?;
    let beta = beta_lambda(data.group(), &p.u, &t1.field, &t2.field)?;
    Ok(beta - data.primitive().eval(&p.q, &[&t1.vq, &t2.vq])?)
}

/// `(∫H*λ, ∫h*ζ)` without validation.
fn exponent_terms(data: &MapData, h: &SquareMesh, cube: &CubeMesh) -> Result<(f64, f64)> {
    let lam = integrate_3form(data.group(), cube, &data.cartan())?;
    let zeta = integrate_2form(data.group(), h, data.primitive())?;
    Ok((lam, zeta))
}

/// The holonomy exponent `A = ∫_{I³} H*λ − ∫_{I²} h*ζ` of a homotopy.
pub fn holonomy_exponent(hh: &HomotopyCD11, data: &MapData) -> Result<f64> {
    check_homotopy(hh, data)?;
    let (lam, zeta) = exponent_terms(data, &hh.h, &hh.cube)?;
    Ok(lam - zeta)
}

fn check_homotopy(hh: &HomotopyCD11, data: &MapData) -> Result<()> {
    hh.ensure_valid(data.map(), data.basepoint(), MESH_TOL)?;
    hh.h.check_steps(data.group(), STEP_BOUND)?;
    hh.cube.check_steps(data.group(), STEP_BOUND)
}

/// Exponents on the mesh and its coarsenings by 2 and 4 (as far as the
/// cell counts allow), extrapolated when three levels are available.
fn exponent_ladder(data: &MapData, h: &SquareMesh, cube: &CubeMesh) -> Result<Richardson> {
    let mut levels = Vec::new();
    for factor in [4, 2, 1] {
        if let (Ok(hc), Ok(cc)) = (h.coarsen(factor), cube.coarsen(factor)) {
            let (lam, zeta) = exponent_terms(data, &hc, &cc)?;
            levels.push((cc.cells()[0], lam - zeta));
        }
    }
    Ok(match levels.as_slice() {
        [a, b, c] => richardson([a.0, b.0, c.0], [a.1, b.1, c.1], 2.0),
        [a, b] => Richardson {
            value: b.1,
            error_est: (b.1 - a.1).abs(),
            order: 2.0,
            order_reliable: false,
            resolutions: vec![a.0, b.0],
            raw: vec![a.1, b.1],
        },
        [a] => Richardson {
            value: a.1,
            error_est: f64::NAN,
            order: 2.0,
            order_reliable: false,
            resolutions: vec![a.0],
            raw: vec![a.1],
        },
        _ => unreachable!("factor 1 always coarsens"),
    })
}

/// Holonomy of a homotopy between two strings: the exponent `A` with its
/// error model and the circle value `exp(2πiA)`. When the two strings
/// coincide the exponent is a period and is snapped to an integer.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HolonomyReport {
    pub value: f64,
    pub error_est: f64,
    pub order: f64,
    pub order_reliable: bool,
    pub resolutions: Vec<usize>,
    pub raw: Vec<f64>,
    pub circle: [f64; 2],
    pub closed: bool,
    pub snap: Option<Snap>,
}

pub fn holonomy(hh: &HomotopyCD11, data: &MapData, tol: f64) -> Result<HolonomyReport> {
    check_homotopy(hh, data)?;
    let r = exponent_ladder(data, &hh.h, &hh.cube)?;
    let (s0, s1) = hh.ends(data.basepoint());
    let g = data.group();
    let closed = s0.w.samples().iter().zip(s1.w.samples()).all(|(a, b)| a.dist(g, b) <= MESH_TOL)
        && s0.phi.samples().iter().zip(s1.phi.samples()).all(|(a, b)| a.dist(g, b) <= MESH_TOL);
    let angle = 2.0 * std::f64::consts::PI * r.value;
    Ok(HolonomyReport {
        value: r.value,
        error_est: r.error_est,
        order: r.order,
        order_reliable: r.order_reliable,
        resolutions: r.resolutions,
        raw: r.raw,
        circle: [angle.cos(), angle.sin()],
        closed,
        snap: closed.then(|| integer_snap(r.value, tol)),
    })
}

/// Integrality of `∫_C H*λ − ∫_{∂C} h*ζ` for a cube `H` whose face
/// `t₂ = 0` is `f∘h` and whose remaining faces are degenerate or cancel.
pub fn relative_period(h: &SquareMesh, cube: &CubeMesh, data: &MapData, tol: f64) -> Result<PeriodReport> {
    let g = data.group();
    let [n1, ns] = h.cells();
    let [m1, _, ms] = cube.cells();
    if n1 != m1 || ns != ms {
        return Err(Error::InvalidHomotopy(format!("h cells {:?} incompatible with H cells {:?}", h.cells(), cube.cells())));
    }
    let mut defect = 0.0_f64;
    for i in 0..=n1 {
        for k in 0..=ns {
            let fh = data.map().apply(h.get([i, k]))?;
            defect = defect.max(g.dist(&fh, &cube.get([i, 0, k]).0[0]));
        }
    }
    if defect > MESH_TOL {
        return Err(Error::InvalidHomotopy(format!("H(t1,0,s) = f(h(t1,s)) violated by {defect:.3e}")));
    }
    h.check_steps(g, STEP_BOUND)?;
    cube.check_steps(g, STEP_BOUND)?;
    Ok(PeriodReport::new(exponent_ladder(data, h, cube)?, tol))
}

/// Juxtaposes a loop-string in front of a string along `t`: the path
/// becomes `w_loop · w` and the square `φ_loop ⊔ φ`, with a seam at the
/// junction. The fiber point keeps `q`; its path is `u` preceded by the
/// constant segment at `f(o)`.
pub fn juxtapose(s: &StringCD1, lp: &StringCD1, data: &MapData, tol: f64) -> Result<StringCD1> {
    s.ensure_valid(data.map(), tol)?;
    lp.validate_loop(data.map(), tol)?.into_result("not a loop-string")?;
    if lp.phi.cells()[1] != s.phi.cells()[1] {
        return Err(Error::InvalidString(format!(
            "s-resolutions differ: {} and {}",
            lp.phi.cells()[1],
            s.phi.cells()[1]
        )));
    }
    let g = data.group();
    Ok(StringCD1 { w: lp.w.concat(&s.w, tol, g)?, phi: lp.phi.concat_axis0(&s.phi, tol, g)?, basepoint: s.basepoint.clone() })
}

/// A smooth two-parameter family of fiber points `P(a, b) = (q(a, b), u_{a,b})`
/// whose base path is `u_{0,0} = f∘w` for a based path `w` in the source.
pub trait FiberFamily: Sync {
    fn base_path(&self, t: f64) -> Result<GroupTuple>;
    fn source(&self, a: f64, b: f64) -> Result<GroupTuple>;
    fn path(&self, a: f64, b: f64, t: f64) -> Result<GroupElement>;
}

/// `q(a, b) = q·exp(a v₁ + b v₂)` and
/// `u_{a,b}(t) = f(w(t))·exp(t·E(a, b) + t(1−t)(a B₁ + b B₂))` with
/// `E(a, b) = log(f(q)⁻¹ f(q(a, b)))`, so `u_{a,b}(1) = f(q(a, b))` exactly.
pub struct ExpFamily<'a, W> {
    data: &'a MapData,
    w: W,
    q: GroupTuple,
    fq_inv: GroupElement,
    dirs: [TangentTuple; 2],
    bends: [AlgebraElement; 2],
}

impl<'a, W> ExpFamily<'a, W>
where
    W: Fn(f64) -> Result<GroupTuple> + Sync,
{
    pub fn new(data: &'a MapData, w: W, dirs: [TangentTuple; 2], bends: [AlgebraElement; 2]) -> Result<Self> {
        let g = data.group();
        let o = w(0.0)?;
        if o.dist(g, data.basepoint()) > MESH_TOL {
            return Err(Error::InvalidString("base path does not start at the basepoint".into()));
        }
        let q = w(1.0)?;
        let fq_inv = data.map().apply(&q)?.inverse();
        Ok(ExpFamily { data, w, q, fq_inv, dirs, bends })
    }

    fn offset(&self, a: f64, b: f64) -> TangentTuple {
        self.dirs[0].scale(a).add(&self.dirs[1].scale(b))
    }

    /// `P(0, 0)` with `n` cells along the path.
    pub fn fiber_point(&self, n: usize) -> Result<FiberPoint> {
        let u = Mesh::from_fn([n], |t| Ok(GroupTuple::single(self.path(0.0, 0.0, t[0])?)))?;
        FiberPoint::new(self.data, self.q.clone(), u, MESH_TOL)
    }

    /// `∂_a P` and `∂_b P` at the origin, sampled with `n` cells.
    pub fn tangents(&self, n: usize) -> Result<[FiberTangent; 2]> {
        let make = |k: usize| -> Result<FiberTangent> {
            let end = self.data.map().differential(&self.q, &self.dirs[k])?;
            let field = (0..=n)
                .map(|i| {
                    let t = i as f64 / n as f64;
                    &end.scale(t) + &self.bends[k].scale(t * (1.0 - t))
                })
                .collect();
            Ok(FiberTangent { vq: self.dirs[k].clone(), field })
        };
        Ok([make(0)?, make(1)?])
    }
}

impl<W> FiberFamily for ExpFamily<'_, W>
where
    W: Fn(f64) -> Result<GroupTuple> + Sync,
{
    fn base_path(&self, t: f64) -> Result<GroupTuple> {
        (self.w)(t)
    }

    fn source(&self, a: f64, b: f64) -> Result<GroupTuple> {
        self.q.step(self.data.group(), &self.offset(a, b), 1.0)
    }

    fn path(&self, a: f64, b: f64, t: f64) -> Result<GroupElement> {
        let g = self.data.group();
        let fw = self.data.map().apply(&(self.w)(t)?)?;
        let e = g.log(&(&self.fq_inv * &self.data.map().apply(&self.source(a, b)?)?))?;
        let bend = &self.bends[0].scale(a) + &self.bends[1].scale(b);
        let x = &e.scale(t) + &bend.scale(t * (1.0 - t));
        Ok(&fw * &g.exp(&x)?)
    }
}

fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * (3.0 - 2.0 * x)
}

/// The boundary of `[−r/2, r/2]²` as a loop at the origin: out along the
/// diagonal to the lower-left corner, once around counterclockwise, and
/// back. Speed vanishes at every corner.
fn square_loop(r: f64, tau: f64) -> (f64, f64) {
    const CORNERS: [(f64, f64); 7] = [(0.0, 0.0), (-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5), (-0.5, -0.5), (0.0, 0.0)];
    let k = ((6.0 * tau).floor() as usize).min(5);
    let x = smoothstep(6.0 * tau - k as f64);
    let (a, b) = (CORNERS[k], CORNERS[k + 1]);
    (r * (a.0 + x * (b.0 - a.0)), r * (a.1 + x * (b.1 - a.1)))
}

/// Contraction of the loop of fiber points around `[−ε/2, ε/2]²` to its
/// base `P(0, 0)`, as a homotopy from the string transported around the loop
/// (at `s = 0`) to the untransported string (at `s = 1`). Its exponent is
/// `∫ ζ_fiber` over the rectangle, which is `ε²·ζ_fiber(∂_a P, ∂_b P) + O(ε⁴)`.
/// `n` cells per axis, even.
pub fn loop_homotopy(family: &dyn FiberFamily, eps: f64, n: usize) -> Result<HomotopyCD11> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidMesh(format!("loop homotopy needs an even cell count, got {n}")));
    }
    // The square G(t, τ) = u_{loop(τ)}(t) has the loop on its right edge; the
    // map F folds that edge into the bottom so the right edge collapses.
    let bottom = |t1: f64| if t1 <= 0.5 { (smoothstep(2.0 * t1), 0.0) } else { (1.0, smoothstep(2.0 * t1 - 1.0)) };
    let fold = |t1: f64, t2: f64| {
        let (x, y) = bottom(t1);
        ((1.0 - t2) * x + t2 * t1, (1.0 - t2) * y + t2)
    };
    let h = Mesh::from_fn([n, n], |x| {
        let sigma = 1.0 - x[1];
        if x[0] <= 0.5 {
            family.base_path(smoothstep(2.0 * x[0]))
        } else {
            let (a, b) = square_loop(eps * sigma, smoothstep(2.0 * x[0] - 1.0));
            family.source(a, b)
        }
    })?
    .with_seams([vec![n / 2], Vec::new()]);
    let cube = Mesh::from_fn([n, n, n], |x| {
        let sigma = 1.0 - x[2];
        let (t, tau) = fold(x[0], x[1]);
        let (a, b) = square_loop(eps * sigma, tau);
        Ok(GroupTuple::single(family.path(a, b, t)?))
    })?
    .with_seams([vec![n / 2], Vec::new(), Vec::new()]);
    Ok(HomotopyCD11 { h, cube })
}
