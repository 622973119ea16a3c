//! The momentum map `μ = −η(ϑ)` on fiber points, the check of its defining
//! identity against `ζ_fiber`, and the zero-locus probe for surface relators.

use serde::Serialize;

use crate::bundle::{zeta_fiber, FiberPoint, FiberTangent, MapData};
use crate::error::{Error, Result};
use crate::forms::{GroupTuple, MIN_FD_STEP};
use crate::lie::{AlgebraElement, CoAlgebraElement, Group};
use crate::mesh::{geodesic_path, PathMesh};
use crate::quadrature::eta_theta_flat;

/// Default finite-difference step for derivatives of `⟨μ, X⟩`.
pub const MOMENTUM_FD_STEP: f64 = 1e-4;

/// `μ(q, u) = −η(ϑ)(u)`. Depends only on `u`.
pub fn momentum(p: &FiberPoint, data: &MapData) -> Result<CoAlgebraElement> {
    data.require_fixed_basepoint()?;
    Ok(CoAlgebraElement(-&eta_theta_flat(data.group(), &p.u)?))
}

fn momentum_along(group: &Group, u: &PathMesh, x: &AlgebraElement) -> Result<f64> {
    group.inner(&-&eta_theta_flat(group, u)?, x)
}

/// `|d⟨μ, X⟩(T) + ζ_fiber(X_P, T)|`, with the derivative taken by central
/// differences of step `h` along `u(t)·exp(±h·V(t))`.
///
/// With the conjugation field `Ad_{g⁻¹}X − X` and `δ(α)(X) = −i_{X_N}α(X)`,
/// the identities `δλ = −dϑ` and `δζ = f*ϑ` give `d⟨μ, X⟩ = ζ_fiber(·, X_P)`.
pub fn momentum_defect(p: &FiberPoint, x: &AlgebraElement, t: &FiberTangent, data: &MapData, h: f64) -> Result<f64> {
    data.require_fixed_basepoint()?;
    if !(h >= MIN_FD_STEP) {
        return Err(Error::StepUnderflow(h));
    }
    let g = data.group();
    if t.field.len() != p.u.len() {
        return Err(Error::LengthMismatch(format!("field has {} values along a path of {} samples", t.field.len(), p.u.len())));
    }
    let shifted = |s: f64| -> Result<PathMesh> {
        let samples = p
            .u
            .samples()
            .iter()
            .zip(&t.field)
            .map(|(a, v)| Ok(GroupTuple::single(g.exp_step(&a.0[0], v, s)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PathMesh::new(p.u.cells(), samples)?.with_seams(p.u.seams().clone()))
    };
    let plus = momentum_along(g, &shifted(h)?, x)?;
    let minus = momentum_along(g, &shifted(-h)?, x)?;
    let derivative = (plus - minus) / (2.0 * h);
    let xp = p.fundamental(g, x)?;
    Ok((derivative + zeta_fiber(data, p, &xp, t)?).abs())
}

/// Zero-locus membership of a tuple for a relator: the distance of `r(tuple)`
/// from the identity and the momentum at the canonical fiber point whose
/// path is the geodesic from `e` to `r(tuple)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeReport {
    pub relator_defect: f64,
    /// Frobenius norm of the algebra element representing `μ`.
    pub momentum_norm: f64,
    pub momentum: Vec<f64>,
    pub pass: bool,
}

/// The canonical fiber point over `tuple`: `u(t) = exp(t·log r(tuple))`.
pub fn canonical_fiber_point(tuple: &GroupTuple, data: &MapData, n: usize) -> Result<FiberPoint> {
    let g = data.group();
    let r = data.map().apply(tuple)?;
    let u = geodesic_path(g, &[GroupTuple::single(data.image_basepoint().clone()), GroupTuple::single(r)], n)?;
    FiberPoint::new(data, tuple.clone(), u, crate::mesh::MESH_TOL)
}

pub fn flatness_probe(tuple: &GroupTuple, data: &MapData, n: usize, tol: f64) -> Result<ProbeReport> {
    let g = data.group();
    let p = canonical_fiber_point(tuple, data, n)?;
    let mu = momentum(&p, data)?;
    let relator_defect = g.dist(&p.u.last().0[0], &g.identity());
    let momentum_norm = mu.0.norm();
    Ok(ProbeReport {
        relator_defect,
        momentum_norm,
        momentum: g.coords(&mu.0)?,
        pass: relator_defect <= tol && momentum_norm <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::ExpFamily;
    use crate::forms::TangentTuple;
    use crate::rng::stream;

    #[test]
    fn subgroup_path_gives_minus_generator() {
        let data = MapData::relator(Group::su2(), 1).unwrap();
        let g = data.group().clone();
        let mut rng = stream(80, 0);
        let y = g.random_algebra(&mut rng, 0.8);
        let u = geodesic_path(&g, &[GroupTuple::identity(&g, 1), GroupTuple::single(g.exp(&y).unwrap())], 7).unwrap();
        let p = FiberPoint { q: GroupTuple::identity(&g, 2), u };
        let mu = momentum(&p, &data).unwrap();
        assert!((&mu.0 + &y).norm() < 1e-14);
    }

    #[test]
    fn defect_vanishes_for_zero_generator_and_is_small_otherwise() {
        let data = MapData::relator(Group::su2(), 1).unwrap();
        let g = data.group().clone();
        let mut rng = stream(81, 0);
        let q = GroupTuple::random(&g, &mut rng, 2, 0.7);
        let logs: Vec<AlgebraElement> = q.0.iter().map(|x| g.log(x).unwrap()).collect();
        let gg = g.clone();
        let w = move |t: f64| logs.iter().map(|x| gg.exp(&x.scale(t))).collect::<Result<Vec<_>>>().map(GroupTuple);
        let dirs = [TangentTuple::random(&g, &mut rng, 2, 1.0), TangentTuple::random(&g, &mut rng, 2, 1.0)];
        let bends = [g.random_algebra(&mut rng, 1.0), g.random_algebra(&mut rng, 1.0)];
        let fam = ExpFamily::new(&data, w, dirs, bends).unwrap();
        let x = g.random_algebra(&mut rng, 1.0);
        let mut last = f64::INFINITY;
        for n in [16, 32, 64] {
            let p = fam.fiber_point(n).unwrap();
            let [t, _] = fam.tangents(n).unwrap();
            assert!(momentum_defect(&p, &g.zero(), &t, &data, 1e-4).unwrap() < 1e-12);
            let d = momentum_defect(&p, &x, &t, &data, 1e-4).unwrap();
            assert!(d < last / 3.0);
            // The opposite sign would leave a defect of 2|ζ_fiber(X_P, T)|.
            let z = zeta_fiber(&data, &p, &p.fundamental(&g, &x).unwrap(), &t).unwrap();
            assert!(z.abs() > 100.0 * d, "{z:e} {d:e}");
            last = d;
        }
    }
}
