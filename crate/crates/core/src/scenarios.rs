//! Shipped analytic test data: fundamental cubes for period integrals,
//! strings and homotopies over the surface relator, and small loops for the
//! curvature check.

use std::f64::consts::PI;

use crate::bundle::{ExpFamily, MapData};
use crate::class::ConjugacyClass;
use crate::error::{Error, Result};
use crate::forms::{GroupTuple, TangentTuple};
use crate::lie::{AlgebraElement, CMat, Family, Group, GroupElement, GroupSpec};
use crate::mesh::{string_from_path, CubeMesh, HomotopyCD11, Mesh, SquareMesh, StringCD1, MESH_TOL};
use crate::rng::stream;

/// The SU(2) Euler-angle parameterization
/// `exp(2πx₂e₃)·exp(πx₁e₂)·exp(γ_max·x₃e₃)`, positively oriented.
fn su2_euler(su2: &Group, x: [f64; 3], gamma_max: f64) -> Result<GroupElement> {
    let b = su2.basis();
    let a = su2.exp(&b[2].scale(2.0 * PI * x[1]))?;
    let m = su2.exp(&b[1].scale(PI * x[0]))?;
    let c = su2.exp(&b[2].scale(gamma_max * x[2]))?;
    Ok(&(&a * &m) * &c)
}

/// Embeds an `k×k` block in the upper-left corner of an `n×n` identity.
fn embed_block(block: &CMat, n: usize) -> CMat {
    let mut m = CMat::identity(n, n);
    let k = block.nrows();
    m.view_mut((0, 0), (k, k)).copy_from(block);
    m
}

/// A cube whose boundary collapses and which represents the generator of
/// `H₃` of the group (a single point for U(1), where there is none).
///
/// SU(n) uses the Euler box of an SU(2) block, covering it once. SO(n) uses
/// the image of an SU(2) Euler box with third angle range 2π under the
/// adjoint representation on an SO(3) block, which covers SO(3) once.
pub fn euler_box(group: &Group, n: usize) -> Result<CubeMesh> {
    let spec = group.spec();
    let su2 = Group::su2();
    match spec.family {
        Family::SU => Mesh::from_fn([n, n, n], |x| {
            let g = su2_euler(&su2, x, 4.0 * PI)?;
            Ok(GroupTuple::single(GroupElement::from_matrix_unchecked(embed_block(g.matrix(), spec.n))))
        }),
        Family::SO if spec.n >= 3 => Mesh::from_fn([n, n, n], |x| {
            let g = su2_euler(&su2, x, 2.0 * PI)?;
            let r = su2.adjoint_matrix(&g)?.map(|v| num_complex::Complex64::new(v, 0.0));
            Ok(GroupTuple::single(GroupElement::from_matrix_unchecked(embed_block(&r, spec.n))))
        }),
        Family::U1 => Mesh::constant([n, n, n], &GroupTuple::identity(group, 1)),
        Family::SO => Err(Error::Unsupported("SO(2) has no 3-dimensional homology".into())),
    }
}

/// Closed-form value of `∫λ` over [`euler_box`] from the Haar volume.
///
/// SU(2) is the unit 3-sphere and the frame `e_k = −(i/2)σ_k` has Euclidean
/// length ½, so the frame volume of SU(2) is `8·2π² = 16π²`. With
/// `λ(e₁,e₂,e₃) = ½⟨e₃,e₃⟩ = c/4` this gives `4π²c`.
pub fn euler_box_expected(spec: &GroupSpec) -> f64 {
    let c = spec.metric_scale;
    match spec.family {
        Family::SU => 4.0 * PI * PI * c,
        // Killing-form ratio 4 between so(3) and su(2), divided by the double cover.
        Family::SO => 2.0 * 4.0 * PI * PI * c,
        Family::U1 => 0.0,
    }
}

/// `t ↦ (exp(t·log q_i))_i`, the componentwise geodesic from the identity.
pub fn geodesic_from_identity(group: &Group, q: &GroupTuple) -> Result<impl Fn(f64) -> Result<GroupTuple> + Sync + Send> {
    let logs = q.0.iter().map(|x| group.log(x)).collect::<Result<Vec<_>>>()?;
    let group = group.clone();
    Ok(move |t: f64| logs.iter().map(|x| group.exp(&x.scale(t))).collect::<Result<Vec<_>>>().map(GroupTuple))
}

/// A seeded smooth family of fiber points around a random point of `K^m`
/// for the curvature check.
pub fn curvature_family(
    data: &MapData,
    seed: u64,
    index: u64,
) -> Result<ExpFamily<'_, impl Fn(f64) -> Result<GroupTuple> + Sync + Send>> {
    let g = data.group();
    let m = data.arity();
    let mut rng = stream(seed, index);
    let q = GroupTuple::random(g, &mut rng, m, 0.7);
    let dirs = [TangentTuple::random(g, &mut rng, m, 1.0), TangentTuple::random(g, &mut rng, m, 1.0)];
    let bends = [g.random_algebra(&mut rng, 1.0), g.random_algebra(&mut rng, 1.0)];
    ExpFamily::new(data, geodesic_from_identity(g, &q)?, dirs, bends)
}

/// Two strings over the same genus-1 fiber point and several homotopies
/// between them.
///
/// `s_a` is the canonical string over the geodesic `w_a` from `o` to `q`.
/// `s_b` runs over `w_b(t) = w_a(t)·exp(sin(πt)·Z)` and fills the square
/// with `f(W(t, s))`, where `W(t, s) = w_a(t)·exp((1−s)·sin(πt)·Z)`.
#[derive(Clone, Debug)]
pub struct Genus1Pair {
    pub data: MapData,
    logs: [AlgebraElement; 2],
    z: TangentTuple,
    y: TangentTuple,
}

impl Genus1Pair {
    pub fn new(seed: u64) -> Result<Self> {
        let data = MapData::relator(Group::su2(), 1)?;
        let g = data.group();
        let mut rng = stream(seed, 0);
        let logs = [g.random_algebra(&mut rng, 0.6), g.random_algebra(&mut rng, 0.6)];
        let z = TangentTuple::random(g, &mut rng, 2, 0.5);
        let y = TangentTuple::random(g, &mut rng, 2, 0.5);
        Ok(Genus1Pair { data, logs, z, y })
    }

    fn w_a(&self, t: f64) -> Result<GroupTuple> {
        let g = self.data.group();
        Ok(GroupTuple(vec![g.exp(&self.logs[0].scale(t))?, g.exp(&self.logs[1].scale(t))?]))
    }

    /// `w_a(t)·exp(c·Z + d·Y)` componentwise.
    fn bent(&self, t: f64, c: f64, d: f64) -> Result<GroupTuple> {
        self.w_a(t)?.step(self.data.group(), &self.z.scale(c).add(&self.y.scale(d)), 1.0)
    }

    fn w_fam(&self, t: f64, s: f64) -> Result<GroupTuple> {
        self.bent(t, (1.0 - s) * (PI * t).sin(), 0.0)
    }

    fn image(&self, p: &GroupTuple) -> Result<GroupTuple> {
        Ok(GroupTuple::single(self.data.map().apply(p)?))
    }

    pub fn string_a(&self, n: usize) -> Result<StringCD1> {
        let w = Mesh::from_fn([n], |x| self.w_a(x[0]))?;
        string_from_path(&w, self.data.map(), n)
    }

    pub fn string_b(&self, n: usize) -> Result<StringCD1> {
        let w = Mesh::from_fn([n], |x| self.w_fam(x[0], 0.0))?;
        let phi = Mesh::from_fn([n, n], |x| self.image(&self.w_fam(x[0], x[1])?))?;
        Ok(StringCD1 { w, phi, basepoint: self.data.basepoint().clone() })
    }

    /// `h(t₁, s) = W(t₁, 1−s)` and `H = f∘W(t₁, 1 − s(1 − t₂))`, which factors
    /// through a square, so `∫H*λ = 0`.
    pub fn schedule_a(&self, n: usize) -> Result<HomotopyCD11> {
        let h = Mesh::from_fn([n, n], |x| self.w_fam(x[0], 1.0 - x[1]))?;
        let cube = Mesh::from_fn([n, n, n], |x| self.image(&self.w_fam(x[0], 1.0 - x[2] * (1.0 - x[1]))?))?;
        Ok(HomotopyCD11 { h, cube })
    }

    /// `H = f∘Ω` for the three-parameter family
    /// `Ω = w_a(t₁)·exp(sin(πt₁)(1−t₂)(s·Z + s(1−s)cos(πt₁)·Y))` and `h = Ω(·, 0, ·)`.
    pub fn schedule_b(&self, n: usize) -> Result<HomotopyCD11> {
        let omega = |t1: f64, t2: f64, s: f64| {
            let r = (PI * t1).sin() * (1.0 - t2);
            self.bent(t1, r * s, r * s * (1.0 - s) * (PI * t1).cos() * 4.0)
        };
        let h = Mesh::from_fn([n, n], |x| omega(x[0], 0.0, x[1]))?;
        let cube = Mesh::from_fn([n, n, n], |x| self.image(&omega(x[0], x[1], x[2])?))?;
        Ok(HomotopyCD11 { h, cube })
    }

    /// A homotopy from `s_b` to itself that multiplies its square by a
    /// degree-one map `I³ → K` equal to `e` on the boundary.
    pub fn bubble(&self, n: usize) -> Result<HomotopyCD11> {
        let g = self.data.group();
        let h = Mesh::from_fn([n, n], |x| self.w_fam(x[0], 0.0))?;
        let cube = Mesh::from_fn([n, n, n], |x| {
            let phi = self.data.map().apply(&self.w_fam(x[0], x[1])?)?;
            Ok(GroupTuple::single(&phi * &sphere_bubble(g, x)?))
        })?;
        Ok(HomotopyCD11 { h, cube })
    }

    /// Schedule B followed by the bubble.
    pub fn schedule_b_with_bubble(&self, n: usize) -> Result<HomotopyCD11> {
        self.schedule_b(n)?.stack(&self.bubble(n)?, MESH_TOL, self.data.group())
    }
}

/// `−exp(2π·ψ(y)·ŷ)` with `y = 2x − 1`, `ψ(y) = 1 − ∏(1 − y_k²)` and `ŷ` the
/// unit vector along `y` in the coordinates of the first three basis
/// elements. It is `e` on the boundary of the cube and has degree one.
fn sphere_bubble(group: &Group, x: [f64; 3]) -> Result<GroupElement> {
    let y = x.map(|v| 2.0 * v - 1.0);
    let r = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    let psi = 1.0 - y.iter().map(|v| 1.0 - v * v).product::<f64>();
    let b = group.basis();
    let mut v = group.zero();
    if r > 0.0 {
        for k in 0..3 {
            v += &b[k].scale(2.0 * PI * psi * y[k] / r);
        }
    }
    let e = group.exp(&v)?;
    Ok(GroupElement::from_matrix_unchecked(-e.matrix()))
}

/// A closed surface in the source of `data` with a cube filling its image,
/// for relative period checks.
#[derive(Clone, Debug)]
pub struct RelativeCycle {
    pub data: MapData,
    pub h: SquareMesh,
    pub cube: CubeMesh,
}

/// `n(x, y) = (sin πx cos 2πy, sin πx sin 2πy, cos πx)` in the first three
/// basis coordinates.
fn sphere_direction(group: &Group, x: f64, y: f64) -> AlgebraElement {
    let b = group.basis();
    let (sx, cx) = (PI * x).sin_cos();
    let (sy, cy) = (2.0 * PI * y).sin_cos();
    &(&b[0].scale(sx * cy) + &b[1].scale(sx * sy)) + &b[2].scale(cx)
}

/// The SU(2) conjugacy class of `exp(θe₃)` with metric scale
/// `level/(4π²)`, as the sphere `exp(θ·n(t₁, s))` filled by the ball
/// `exp((1−t₂)θ·n(t₁, s))`.
pub fn class_sphere(theta: f64, level: u32, n: usize) -> Result<RelativeCycle> {
    let g = Group::su2();
    let class = ConjugacyClass::new(g.clone(), g.exp(&g.basis()[2].scale(theta))?)?;
    let data = MapData::class(class)?.rescaled(level as f64 / (4.0 * PI * PI))?;
    let g = data.group().clone();
    let h = Mesh::from_fn([n, n], |x| Ok(GroupTuple::single(g.exp(&sphere_direction(&g, x[0], x[1]).scale(theta))?)))?;
    let cube = Mesh::from_fn([n, n, n], |x| {
        Ok(GroupTuple::single(g.exp(&sphere_direction(&g, x[0], x[2]).scale((1.0 - x[1]) * theta))?))
    })?;
    Ok(RelativeCycle { data, h, cube })
}

/// `∫λ` over the ball `{exp(X) : ‖X‖ ≤ θ}` in SU(2) at the given level:
/// `level·(θ − sin θ)/(2π)`.
pub fn ball_period(theta: f64, level: u32) -> f64 {
    level as f64 * (theta - theta.sin()) / (2.0 * PI)
}

/// The relative period of [`class_sphere`]: `level·θ/(2π)`. An integer
/// exactly when the class is quantized at that level.
pub fn class_sphere_period(theta: f64, level: u32) -> f64 {
    level as f64 * theta / (2.0 * PI)
}

/// A genus-1 sphere `(k(t₁, s), j)` in `SU(2)²` with `k` sweeping the great
/// sphere through `±e` orthogonal to `e₃` and `j = exp(θe₃)`. The filling is
/// the geodesic cone from `e` over its image under the commutator, multiplied
/// by a degree-`bubbles` map that is `e` on the boundary. The relative
/// period is `bubbles`.
pub fn relator_sphere(theta: f64, bubbles: i32, n: usize) -> Result<RelativeCycle> {
    let data = MapData::relator(Group::su2(), 1)?;
    let g = data.group().clone();
    let b = g.basis().to_vec();
    let j = g.exp(&b[2].scale(theta))?;
    let point = |x: f64, y: f64| -> Result<GroupTuple> {
        let (sy, cy) = (2.0 * PI * y).sin_cos();
        let k = g.exp(&(&b[0].scale(cy) + &b[1].scale(sy)).scale(2.0 * PI * x))?;
        Ok(GroupTuple(vec![k, j.clone()]))
    };
    let h = Mesh::from_fn([n, n], |x| point(x[0], x[1]))?;
    let cube = Mesh::from_fn([n, n, n], |x| {
        let top = data.map().apply(&point(x[0], x[2])?)?;
        let mut value = g.exp(&g.log(&top)?.scale(1.0 - x[1]))?;
        for _ in 0..bubbles.unsigned_abs() {
            let d = sphere_bubble(&g, if bubbles > 0 { x } else { [x[1], x[0], x[2]] })?;
            value = &value * &d;
        }
        Ok(GroupTuple::single(value))
    })?;
    Ok(RelativeCycle { data, h, cube })
}
