//! Integration of forms over meshes, the homotopy operator on `ϑ`, Richardson
//! extrapolation, and integer snapping.
//!
//! All rules evaluate forms on left-trivialized edge logarithms. A cell's
//! value is the average over its corners of the form evaluated at the corner
//! on the logs of the cell edges through that corner; for squares this is the
//! average over both diagonal triangulations. Sums are compensated and
//! reduced in a fixed slab order, so results do not depend on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::forms::{Form, GroupTuple, TangentTuple};
use crate::lie::{AlgebraElement, CoAlgebraElement, Group};
use crate::mesh::{edge_log, CubeMesh, PathMesh, SquareMesh};

/// Neumaier compensated sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Midpoint rule `Σ α(g_i·exp(½Δ_i); Δ_i)` with `Δ_i = log(g_i⁻¹g_{i+1})`.
pub fn integrate_1form(group: &Group, u: &PathMesh, alpha: &dyn Form) -> Result<f64> {
    let n = u.cells()[0];
    let mut acc = CompensatedSum::default();
    for i in 0..n {
        let d = edge_log(group, u.get([i]), u.get([i + 1]))?;
        let mid = u.get([i]).step(group, &d, 0.5)?;
        acc.add(alpha.eval(&mid, &[&d])?);
    }
    Ok(acc.value())
}

/// `η(ϑ♭)(u) = ½∫(u⁻¹u̇ + u̇u⁻¹)dt` by the midpoint rule, which is exact on
/// geodesic pieces: each cell contributes `½(Δ_i + Ad_{g_i}Δ_i)`.
pub fn eta_theta_flat(group: &Group, u: &PathMesh) -> Result<AlgebraElement> {
    let n = u.cells()[0];
    let mut acc = vec![CompensatedSum::default(); group.algebra_dim()];
    for i in 0..n {
        let a = &u.get([i]).0[0];
        let d = group.log_step(a, &u.get([i + 1]).0[0])?;
        let mid = group.exp_step(a, &d, 0.5)?;
        let c = group.coords(&group.theta_flat(&mid, &d)?)?;
        for (s, x) in acc.iter_mut().zip(c) {
            s.add(x);
        }
    }
    let coords: Vec<f64> = acc.iter().map(|s| s.value()).collect();
    group.from_coords(&coords)
}

/// `η(ϑ)(u)`: the metric dual of [`eta_theta_flat`].
pub fn eta_theta(group: &Group, u: &PathMesh) -> Result<CoAlgebraElement> {
    Ok(CoAlgebraElement(eta_theta_flat(group, u)?))
}

/// Value of one plaquette with corner `(i, j)`.
fn plaquette(group: &Group, phi: &SquareMesh, c: &dyn Form, i: usize, j: usize) -> Result<f64> {
    let g = |a: usize, b: usize| phi.get([i + a, j + b]);
    let a = [edge_log(group, g(0, 0), g(1, 0))?, edge_log(group, g(0, 1), g(1, 1))?];
    let b = [edge_log(group, g(0, 0), g(0, 1))?, edge_log(group, g(1, 0), g(1, 1))?];
    let mut acc = 0.0;
    for b0 in 0..2 {
        for b1 in 0..2 {
            acc += c.eval(g(b0, b1), &[&a[b1], &b[b0]])?;
        }
    }
    Ok(0.25 * acc)
}

/// `∫ φ*c` over a square mesh (axis 0 first in the orientation).
pub fn integrate_2form(group: &Group, phi: &SquareMesh, c: &dyn Form) -> Result<f64> {
    let [n0, n1] = phi.cells();
    let rows = (0..n0)
        .into_par_iter()
        .map(|i| {
            let mut row = CompensatedSum::default();
            for j in 0..n1 {
                row.add(plaquette(group, phi, c, i, j)?);
            }
            Ok(row.value())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(rows.into_iter().collect::<CompensatedSum>().value())
}

/// Sum of the cells in slab `i` (axis-0 index) of a cube mesh.
fn cube_slab(group: &Group, cube: &CubeMesh, lam: &dyn Form, i: usize) -> Result<f64> {
    let [_, n1, n2] = cube.cells();
    let at = |a: usize, j: usize, k: usize| cube.get([i + a, j, k]);
    let idx2 = |j: usize, k: usize| j * (n2 + 1) + k;
    // Axis-0 edges between planes i and i+1, and in-plane edges of both planes.
    let mut e0 = Vec::with_capacity((n1 + 1) * (n2 + 1));
    for j in 0..=n1 {
        for k in 0..=n2 {
            e0.push(edge_log(group, at(0, j, k), at(1, j, k))?);
        }
    }
    let mut e1: [Vec<TangentTuple>; 2] = [Vec::new(), Vec::new()];
    let mut e2: [Vec<TangentTuple>; 2] = [Vec::new(), Vec::new()];
    for a in 0..2 {
        for j in 0..=n1 {
            for k in 0..=n2 {
                if j < n1 {
                    e1[a].push(edge_log(group, at(a, j, k), at(a, j + 1, k))?);
                } else {
                    e1[a].push(TangentTuple(Vec::new()));
                }
                if k < n2 {
                    e2[a].push(edge_log(group, at(a, j, k), at(a, j, k + 1))?);
                } else {
                    e2[a].push(TangentTuple(Vec::new()));
                }
            }
        }
    }
    let mut slab = CompensatedSum::default();
    for j in 0..n1 {
        for k in 0..n2 {
            let mut cell = 0.0;
            for b0 in 0..2 {
                for b1 in 0..2 {
                    for b2 in 0..2 {
                        let p: &GroupTuple = at(b0, j + b1, k + b2);
                        let d0 = &e0[idx2(j + b1, k + b2)];
                        let d1 = &e1[b0][idx2(j, k + b2)];
                        let d2 = &e2[b0][idx2(j + b1, k)];
                        cell += lam.eval(p, &[d0, d1, d2])?;
                    }
                }
            }
            slab.add(0.125 * cell);
        }
    }
    Ok(slab.value())
}

/// `∫ H*λ` over a cube mesh (axes in order give the orientation).
pub fn integrate_3form(group: &Group, cube: &CubeMesh, lam: &dyn Form) -> Result<f64> {
    let n0 = cube.cells()[0];
    let slabs = (0..n0)
        .into_par_iter()
        .map(|i| cube_slab(group, cube, lam, i))
        .collect::<Result<Vec<f64>>>()?;
    Ok(slabs.into_iter().collect::<CompensatedSum>().value())
}

/// Richardson extrapolation over three resolutions.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Richardson {
    pub value: f64,
    pub error_est: f64,
    /// Observed convergence order; the nominal order when unreliable.
    pub order: f64,
    pub order_reliable: bool,
    pub resolutions: Vec<usize>,
    pub raw: Vec<f64>,
}

/// Fits `v(N) = L + C·N^{−p}` through three values at increasing
/// resolutions. For a doubling ladder the observed order is
/// `log₂((v₀−v₁)/(v₁−v₂))`. Non-monotone or vanishing differences flag the
/// order as unreliable and fall back to `nominal_order`.
pub fn richardson(resolutions: [usize; 3], values: [f64; 3], nominal_order: f64) -> Richardson {
    let h = resolutions.map(|n| 1.0 / n as f64);
    let d01 = values[0] - values[1];
    let d12 = values[1] - values[2];
    let ratio_at = |p: f64| (h[0].powf(p) - h[1].powf(p)) / (h[1].powf(p) - h[2].powf(p));
    let (lo, hi) = (0.05, 12.0);
    let mut fitted = None;
    if d12 != 0.0 && d01 != 0.0 && d01.signum() == d12.signum() {
        let target = d01 / d12;
        if target > ratio_at(lo) && target < ratio_at(hi) {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if ratio_at(m) < target {
                    a = m;
                } else {
                    b = m;
                }
            }
            fitted = Some(0.5 * (a + b));
        }
    }
    let reliable = fitted.is_some();
    let order = fitted.unwrap_or(nominal_order);
    let (value, error_est) = if d12 == 0.0 {
        (values[2], 0.0)
    } else {
        let c = d12 / (h[1].powf(order) - h[2].powf(order));
        let l = values[2] - c * h[2].powf(order);
        (l, (l - values[2]).abs())
    };
    Richardson {
        value,
        error_est,
        order,
        order_reliable: reliable,
        resolutions: resolutions.to_vec(),
        raw: values.to_vec(),
    }
}

/// Distance of a value from the nearest integer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Snap {
    pub int: i64,
    pub defect: f64,
    pub pass: bool,
}

pub fn integer_snap(x: f64, tol: f64) -> Snap {
    let int = x.round();
    let defect = (x - int).abs();
    Snap { int: int as i64, defect, pass: defect <= tol }
}

/// A period measurement: extrapolated value with its error model and snap.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodReport {
    pub value: f64,
    pub error_est: f64,
    pub order: f64,
    pub order_reliable: bool,
    pub resolutions: Vec<usize>,
    pub raw: Vec<f64>,
    pub snap: Snap,
}

impl PeriodReport {
    pub fn new(r: Richardson, tol: f64) -> Self {
        let snap = integer_snap(r.value, tol);
        PeriodReport {
            value: r.value,
            error_est: r.error_est,
            order: r.order,
            order_reliable: r.order_reliable,
            resolutions: r.resolutions,
            raw: r.raw,
            snap,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{CartanForm, EquivariantForm, ThetaForm};
    use crate::mesh::Mesh;
    use crate::rng::stream;

    struct ThetaPairing {
        theta: ThetaForm,
        x: AlgebraElement,
    }

    impl Form for ThetaPairing {
        fn degree(&self) -> usize {
            1
        }
        fn arity(&self) -> usize {
            1
        }
        fn eval(&self, p: &GroupTuple, v: &[&TangentTuple]) -> Result<f64> {
            self.theta.eval(&self.x, p, v)
        }
    }

    fn analytic_path(g: &Group, n: usize) -> PathMesh {
        let b = g.basis().to_vec();
        Mesh::<1>::from_fn([n], |t| {
            let s = t[0];
            let a = g.exp(&(&b[0].scale(1.3 * s) + &b[2].scale(0.4 * (3.0 * s).sin())))?;
            let c = g.exp(&b[1].scale(0.9 * s * s))?;
            Ok(GroupTuple::single(&a * &c))
        })
        .unwrap()
    }

    #[test]
    fn constant_meshes_integrate_to_zero() {
        let g = Group::su2();
        let e = GroupTuple::identity(&g, 1);
        let lam = CartanForm { group: g.clone(), arity: 1 };
        let cube = Mesh::<3>::constant([3, 3, 3], &e).unwrap();
        assert_eq!(integrate_3form(&g, &cube, &lam).unwrap(), 0.0);
        let p = Mesh::<1>::constant([5], &e).unwrap();
        assert!(eta_theta_flat(&g, &p).unwrap().norm() == 0.0);
    }

    #[test]
    fn eta_on_one_parameter_subgroup_is_exact() {
        let g = Group::su2();
        let mut rng = stream(60, 0);
        let y = g.random_algebra(&mut rng, 1.0);
        for n in [1, 3, 16] {
            let u = Mesh::<1>::from_fn([n], |t| Ok(GroupTuple::single(g.exp(&y.scale(t[0]))?))).unwrap();
            assert!((&eta_theta_flat(&g, &u).unwrap() - &y).norm() < 1e-14);
        }
    }

    #[test]
    fn eta_is_equivariant() {
        let g = Group::su2();
        let mut rng = stream(61, 0);
        let u = analytic_path(&g, 32);
        let k = g.random_element(&mut rng, 2.0);
        let direct = eta_theta(&g, &u.conjugate(&k)).unwrap();
        let transported = g.coadjoint(&k, &eta_theta(&g, &u).unwrap()).unwrap();
        assert!((&direct.0 - &transported.0).norm() < 1e-10);
    }

    #[test]
    fn midpoint_rule_is_second_order_on_analytic_paths() {
        let g = Group::su2();
        let mut rng = stream(62, 0);
        let alpha = ThetaPairing { theta: ThetaForm { group: g.clone() }, x: g.random_algebra(&mut rng, 1.0) };
        let v: Vec<f64> = [16, 32, 64].iter().map(|&n| integrate_1form(&g, &analytic_path(&g, n), &alpha).unwrap()).collect();
        let r = richardson([16, 32, 64], [v[0], v[1], v[2]], 2.0);
        assert!(r.order_reliable && (1.8..=2.2).contains(&r.order), "{r:?}");
    }

    #[test]
    fn degenerate_square_integrates_to_zero() {
        let g = Group::su2();
        let u = analytic_path(&g, 8);
        let sq = Mesh::<2>::from_fn([8, 5], |t| Ok(u.get([(t[0] * 8.0).round() as usize]).clone())).unwrap();
        let r = crate::words::WordForm::new(g.clone(), crate::words::Word::surface_relator(1));
        // Any 2-form; here ζ of the relator on K² pulled back along the diagonal map.
        let diag = Mesh::<2>::new(sq.cells(), sq.samples().iter().map(|p| GroupTuple(vec![p.0[0].clone(), p.0[0].clone()])).collect()).unwrap();
        assert!(integrate_2form(&g, &diag, &r).unwrap().abs() < 1e-15);
    }

    #[test]
    fn integration_is_linear_in_the_form() {
        let g = Group::su2();
        let lam = CartanForm { group: g.clone(), arity: 1 };
        let lam2 = CartanForm { group: g.rescaled(2.0 * g.spec().metric_scale).unwrap(), arity: 1 };
        let cube = crate::scenarios::euler_box(&g, 6).unwrap();
        let a = integrate_3form(&g, &cube, &lam).unwrap();
        let b = integrate_3form(&g, &cube, &lam2).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-14);
    }

    #[test]
    fn richardson_synthetic_first_order() {
        let f = |n: usize| 3.0 + 0.7 / n as f64;
        let r = richardson([8, 16, 32], [f(8), f(16), f(32)], 1.0);
        assert!((r.order - 1.0).abs() < 1e-8 && (r.value - 3.0).abs() < 1e-12, "{r:?}");
        let r = richardson([32, 64, 96], [f(32), f(64), f(96)], 1.0);
        assert!((r.order - 1.0).abs() < 1e-8 && (r.value - 3.0).abs() < 1e-12, "{r:?}");
    }

    #[test]
    fn richardson_exact_values_flag_unreliable() {
        let r = richardson([8, 16, 32], [2.0, 2.0, 2.0], 1.0);
        assert!(!r.order_reliable);
        assert_eq!(r.error_est, 0.0);
        assert_eq!(r.value, 2.0);
        let r = richardson([8, 16, 32], [1.0, 2.0, 1.5], 1.0);
        assert!(!r.order_reliable);
    }

    #[test]
    fn integer_snap_examples() {
        let s = integer_snap(0.997, 5e-3);
        assert_eq!(s.int, 1);
        assert!((s.defect - 0.003).abs() < 1e-12 && s.pass);
        assert!(!integer_snap(0.5, 1e-2).pass);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1e16, 1.0, -1e16].into_iter().collect();
        assert_eq!(s.value(), 1.0);
    }

    /// `d/ds η(α)(u_s) = −η(dα)(u_s)(V) + α(u_s(1))(V(1)) − α(u_s(0))(V(0))`
    /// for α = ⟨ϑ, X⟩ with `dα = λ(X_N, ·, ·)`.
    #[test]
    fn homotopy_formula_on_a_path_family() {
        let g = Group::su2();
        let mut rng = stream(63, 0);
        let x = g.random_algebra(&mut rng, 1.0);
        let b = g.basis().to_vec();
        let bump = g.random_algebra(&mut rng, 1.0);
        let family = |s: f64, n: usize| {
            Mesh::<1>::from_fn([n], |t| {
                let a = g.exp(&(&b[0].scale(1.1 * t[0]) + &b[1].scale(0.5 * t[0] * t[0])))?;
                Ok(GroupTuple::single(&a * &g.exp(&bump.scale(s * (1.0 + t[0])))?))
            })
            .unwrap()
        };
        let alpha = ThetaPairing { theta: ThetaForm { group: g.clone() }, x: x.clone() };
        let defect = |n: usize| {
            let hs = 1e-4;
            let plus = integrate_1form(&g, &family(hs, n), &alpha).unwrap();
            let minus = integrate_1form(&g, &family(-hs, n), &alpha).unwrap();
            let lhs = (plus - minus) / (2.0 * hs);
            // Variation field at s = 0: left-trivialized V(t) = (1 + t)·bump.
            let u = family(0.0, n);
            let mut eta_d = 0.0;
            for i in 0..n {
                let a = &u.get([i]).0[0];
                let d = g.log_step(a, &u.get([i + 1]).0[0]).unwrap();
                let mid = g.exp_step(a, &d, 0.5).unwrap();
                let tm = (i as f64 + 0.5) / n as f64;
                let v = bump.scale(1.0 + tm);
                let xn = g.conjugation_field(&mid, &x).unwrap();
                eta_d += g.cartan3(&xn, &d, &v).unwrap();
            }
            let end = |i: usize, w: f64| {
                let p = u.get([i]);
                alpha.eval(p, &[&TangentTuple(vec![bump.scale(w)])]).unwrap()
            };
            (lhs + eta_d - end(n, 2.0) + end(0, 1.0)).abs()
        };
        let d1 = defect(16);
        let d2 = defect(32);
        assert!(d2 < d1 / 3.0 && d2 < 1e-4, "{d1:e} {d2:e}");
    }
}
