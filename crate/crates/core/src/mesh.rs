//! Grid meshes of maps `I^D → K^m`, geodesic construction and refinement,
//! strings and homotopies with their boundary-condition validators, and the
//! JSON mesh file format.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::forms::{GroupMap, GroupTuple, TangentTuple};
use crate::lie::{Group, GroupElement, GroupSpec};

/// Default tolerance for boundary conditions.
pub const MESH_TOL: f64 = 1e-8;

/// Default bound on the rotation angle of a single mesh step.
pub const STEP_BOUND: f64 = PI / 8.0;

/// Samples of a map `I^D → K^m` on a uniform grid. The last axis varies
/// fastest in `samples`. `cells[k]` is the resolution along axis `k`, so
/// there are `cells[k] + 1` samples along it. `seams[k]` lists sample
/// indices along axis `k` where analytic pieces meet.
#[derive(Clone, Debug, PartialEq)]
pub struct Mesh<const D: usize> {
    cells: [usize; D],
    arity: usize,
    samples: Vec<GroupTuple>,
    seams: [Vec<usize>; D],
}

pub type PathMesh = Mesh<1>;
pub type SquareMesh = Mesh<2>;
pub type CubeMesh = Mesh<3>;

fn sample_count<const D: usize>(cells: &[usize; D]) -> usize {
    cells.iter().map(|c| c + 1).product()
}

impl<const D: usize> Mesh<D> {
    pub fn new(cells: [usize; D], samples: Vec<GroupTuple>) -> Result<Self> {
        if cells.contains(&0) {
            return Err(Error::InvalidMesh(format!("every axis needs at least one cell, got {cells:?}")));
        }
        if samples.len() != sample_count(&cells) {
            return Err(Error::InvalidMesh(format!(
                "{} samples for cells {cells:?}, expected {}",
                samples.len(),
                sample_count(&cells)
            )));
        }
        let arity = samples[0].len();
        if samples.iter().any(|s| s.len() != arity) {
            return Err(Error::InvalidMesh("samples have different arities".into()));
        }
        Ok(Mesh { cells, arity, samples, seams: std::array::from_fn(|_| Vec::new()) })
    }

    /// Samples `f` at the grid parameters `(i_k / cells_k)_k`.
    pub fn from_fn<F>(cells: [usize; D], f: F) -> Result<Self>
    where
        F: Fn([f64; D]) -> Result<GroupTuple> + Sync,
    {
        let total = sample_count(&cells);
        let samples = (0..total)
            .into_par_iter()
            .map(|flat| {
                let idx = unflatten(&cells, flat);
                f(std::array::from_fn(|k| idx[k] as f64 / cells[k] as f64))
            })
            .collect::<Result<Vec<_>>>()?;
        Mesh::new(cells, samples)
    }

    /// The mesh with every sample equal to `p`.
    pub fn constant(cells: [usize; D], p: &GroupTuple) -> Result<Self> {
        Mesh::new(cells, vec![p.clone(); sample_count(&cells)])
    }

    pub fn with_seams(mut self, seams: [Vec<usize>; D]) -> Self {
        self.seams = seams;
        self
    }

    pub fn cells(&self) -> [usize; D] {
        self.cells
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn samples(&self) -> &[GroupTuple] {
        &self.samples
    }

    pub fn seams(&self) -> &[Vec<usize>; D] {
        &self.seams
    }

    pub fn index(&self, idx: [usize; D]) -> usize {
        let mut flat = 0;
        for k in 0..D {
            flat = flat * (self.cells[k] + 1) + idx[k];
        }
        flat
    }

    pub fn get(&self, idx: [usize; D]) -> &GroupTuple {
        &self.samples[self.index(idx)]
    }

    /// Applies `f` to every sample.
    pub fn map<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&GroupTuple) -> Result<GroupTuple> + Sync + Send,
    {
        let samples = self.samples.par_iter().map(f).collect::<Result<Vec<_>>>()?;
        Ok(Mesh::new(self.cells, samples)?.with_seams(self.seams.clone()))
    }

    /// Conjugates every component of every sample by `g`.
    pub fn conjugate(&self, g: &GroupElement) -> Self {
        Mesh {
            cells: self.cells,
            arity: self.arity,
            samples: self.samples.iter().map(|s| s.conjugate(g)).collect(),
            seams: self.seams.clone(),
        }
    }

    /// Reverses the parameter along `axis`.
    pub fn reverse(&self, axis: usize) -> Self {
        let n = self.cells[axis];
        let samples = (0..self.samples.len())
            .map(|flat| {
                let mut idx = unflatten(&self.cells, flat);
                idx[axis] = n - idx[axis];
                self.get(idx).clone()
            })
            .collect();
        let mut seams = self.seams.clone();
        seams[axis] = seams[axis].iter().rev().map(|&i| n - i).collect();
        Mesh { cells: self.cells, arity: self.arity, samples, seams }
    }

    /// Geodesic subdivision of every cell by `factor` along every axis, in
    /// axis order. Existing samples are copied, not recomputed.
    pub fn refine(&self, group: &Group, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidMesh("refinement factor must be positive".into()));
        }
        let mut out = self.clone();
        if factor == 1 {
            return Ok(out);
        }
        for axis in 0..D {
            out = out.refine_axis(group, axis, factor)?;
        }
        Ok(out)
    }

    /// Keeps every `factor`-th sample along every axis. Cell counts and seams
    /// must be divisible by `factor`.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::InvalidMesh("coarsening factor must be positive".into()));
        }
        for k in 0..D {
            if !self.cells[k].is_multiple_of(factor) || self.seams[k].iter().any(|i| i % factor != 0) {
                return Err(Error::InvalidMesh(format!("axis {k} does not coarsen by {factor}")));
            }
        }
        let cells = self.cells.map(|n| n / factor);
        let samples = (0..sample_count(&cells))
            .map(|flat| self.get(unflatten(&cells, flat).map(|i| i * factor)).clone())
            .collect();
        let seams = std::array::from_fn(|k| self.seams[k].iter().map(|i| i / factor).collect());
        Ok(Mesh { cells, arity: self.arity, samples, seams })
    }

    fn refine_axis(&self, group: &Group, axis: usize, factor: usize) -> Result<Self> {
        let mut cells = self.cells;
        cells[axis] *= factor;
        let total = sample_count(&cells);
        let samples = (0..total)
            .into_par_iter()
            .map(|flat| {
                let idx = unflatten(&cells, flat);
                let (i, q) = (idx[axis] / factor, idx[axis] % factor);
                let mut a = idx;
                a[axis] = i;
                let ga = self.get(a);
                if q == 0 {
                    return Ok(ga.clone());
                }
                let mut b = idx;
                b[axis] = i + 1;
                let gb = self.get(b);
                let t = q as f64 / factor as f64;
                geodesic_point(group, ga, gb, t)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut seams = self.seams.clone();
        seams[axis] = seams[axis].iter().map(|i| i * factor).collect();
        Ok(Mesh { cells, arity: self.arity, samples, seams })
    }

    /// Largest step rotation angle along any axis.
    pub fn max_step(&self, group: &Group) -> Result<f64> {
        let steps = (0..self.samples.len())
            .into_par_iter()
            .map(|flat| {
                let idx = unflatten(&self.cells, flat);
                let mut worst = 0.0_f64;
                for k in 0..D {
                    if idx[k] < self.cells[k] {
                        let mut next = idx;
                        next[k] += 1;
                        for (x, y) in self.samples[flat].0.iter().zip(&self.get(next).0) {
                            worst = worst.max(group.step_norm(&group.log_step(x, y)?));
                        }
                    }
                }
                Ok(worst)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(steps.into_iter().fold(0.0, f64::max))
    }

    /// Errors unless every step is at most `bound`.
    pub fn check_steps(&self, group: &Group, bound: f64) -> Result<()> {
        let worst = self.max_step(group)?;
        if worst > bound {
            return Err(Error::InvalidMesh(format!("step {worst:.4} exceeds bound {bound:.4}")));
        }
        Ok(())
    }
}

pub(crate) fn unflatten<const D: usize>(cells: &[usize; D], mut flat: usize) -> [usize; D] {
    let mut idx = [0; D];
    for k in (0..D).rev() {
        let n = cells[k] + 1;
        idx[k] = flat % n;
        flat /= n;
    }
    idx
}

/// `a·exp(t·log(a⁻¹b))` componentwise.
pub fn geodesic_point(group: &Group, a: &GroupTuple, b: &GroupTuple, t: f64) -> Result<GroupTuple> {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| group.exp_step(x, &group.log_step(x, y)?, t))
        .collect::<Result<Vec<_>>>()
        .map(GroupTuple)
}

/// Componentwise left-trivialized step `log(a⁻¹b)`.
pub fn edge_log(group: &Group, a: &GroupTuple, b: &GroupTuple) -> Result<TangentTuple> {
    a.0.iter()
        .zip(&b.0)
        .map(|(x, y)| group.log_step(x, y))
        .collect::<Result<Vec<_>>>()
        .map(TangentTuple)
}

/// Piecewise geodesic path through `controls` with `n` cells per piece; the
/// joints are recorded as seams.
pub fn geodesic_path(group: &Group, controls: &[GroupTuple], n: usize) -> Result<PathMesh> {
    if controls.len() < 2 || n == 0 {
        return Err(Error::InvalidMesh("a geodesic path needs two control points and n > 0".into()));
    }
    let mut samples = vec![controls[0].clone()];
    let mut seams = Vec::new();
    for (piece, w) in controls.windows(2).enumerate() {
        if piece > 0 {
            seams.push(piece * n);
        }
        let logs = edge_log(group, &w[0], &w[1])?;
        for i in 1..=n {
            let t = i as f64 / n as f64;
            let p = if i == n { w[1].clone() } else { w[0].step(group, &logs, t)? };
            samples.push(p);
        }
    }
    Ok(Mesh::new([n * (controls.len() - 1)], samples)?.with_seams([seams]))
}

impl PathMesh {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn first(&self) -> &GroupTuple {
        &self.samples[0]
    }

    pub fn last(&self) -> &GroupTuple {
        self.samples.last().expect("meshes are nonempty")
    }

    /// `self` followed by `other`, joined at a recorded seam.
    pub fn concat(&self, other: &PathMesh, tol: f64, group: &Group) -> Result<PathMesh> {
        let gap = self.last().dist(group, other.first());
        if gap > tol {
            return Err(Error::InvalidMesh(format!("paths do not meet: gap {gap:e}")));
        }
        let n = self.cells[0];
        let mut samples = self.samples.clone();
        samples.extend(other.samples[1..].iter().cloned());
        let mut seams = self.seams[0].clone();
        seams.push(n);
        seams.extend(other.seams[0].iter().map(|i| i + n));
        Ok(Mesh::new([n + other.cells[0]], samples)?.with_seams([seams]))
    }

    /// Applies a map `K^m → K` samplewise.
    pub fn image(&self, f: &dyn GroupMap) -> Result<PathMesh> {
        self.map(|p| Ok(GroupTuple::single(f.apply(p)?)))
    }
}

impl SquareMesh {
    /// The path along `axis` at index `at` of the other axis.
    pub fn line(&self, axis: usize, at: usize) -> PathMesh {
        let n = self.cells[axis];
        let samples = (0..=n)
            .map(|i| {
                let idx = if axis == 0 { [i, at] } else { [at, i] };
                self.get(idx).clone()
            })
            .collect();
        Mesh { cells: [n], arity: self.arity, samples, seams: [self.seams[axis].clone()] }
    }

    /// Juxtaposition along axis 0: `self` on the first part, `other` after.
    pub fn concat_axis0(&self, other: &SquareMesh, tol: f64, group: &Group) -> Result<SquareMesh> {
        if self.cells[1] != other.cells[1] {
            return Err(Error::InvalidMesh(format!(
                "glued squares need equal resolution along axis 1: {} vs {}",
                self.cells[1], other.cells[1]
            )));
        }
        let m = self.cells[1];
        for j in 0..=m {
            let gap = self.get([self.cells[0], j]).dist(group, other.get([0, j]));
            if gap > tol {
                return Err(Error::InvalidMesh(format!("glued edges differ by {gap:e} at index {j}")));
            }
        }
        let n = self.cells[0] + other.cells[0];
        let mut samples = Vec::with_capacity((n + 1) * (m + 1));
        for i in 0..=n {
            for j in 0..=m {
                let s = if i <= self.cells[0] { self.get([i, j]) } else { other.get([i - self.cells[0], j]) };
                samples.push(s.clone());
            }
        }
        let mut seams0 = self.seams[0].clone();
        seams0.push(self.cells[0]);
        seams0.extend(other.seams[0].iter().map(|i| i + self.cells[0]));
        let mut seams1 = self.seams[1].clone();
        seams1.extend(other.seams[1].iter().copied());
        seams1.sort_unstable();
        seams1.dedup();
        Ok(Mesh::new([n, m], samples)?.with_seams([seams0, seams1]))
    }

    /// Stacks `other` after `self` along axis 1.
    pub fn concat_axis1(&self, other: &SquareMesh, tol: f64, group: &Group) -> Result<SquareMesh> {
        Ok(self.transpose().concat_axis0(&other.transpose(), tol, group)?.transpose())
    }

    pub fn transpose(&self) -> SquareMesh {
        let [n, m] = self.cells;
        let mut samples = Vec::with_capacity(self.samples.len());
        for j in 0..=m {
            for i in 0..=n {
                samples.push(self.get([i, j]).clone());
            }
        }
        Mesh { cells: [m, n], arity: self.arity, samples, seams: [self.seams[1].clone(), self.seams[0].clone()] }
    }
}

impl CubeMesh {
    /// The square obtained by fixing axis `axis` at index `at`; the remaining
    /// axes keep their order.
    pub fn face(&self, axis: usize, at: usize) -> SquareMesh {
        let rest: Vec<usize> = (0..3).filter(|&k| k != axis).collect();
        let cells = [self.cells[rest[0]], self.cells[rest[1]]];
        let mut samples = Vec::with_capacity((cells[0] + 1) * (cells[1] + 1));
        for i in 0..=cells[0] {
            for j in 0..=cells[1] {
                let mut idx = [0; 3];
                idx[axis] = at;
                idx[rest[0]] = i;
                idx[rest[1]] = j;
                samples.push(self.get(idx).clone());
            }
        }
        Mesh {
            cells,
            arity: self.arity,
            samples,
            seams: [self.seams[rest[0]].clone(), self.seams[rest[1]].clone()],
        }
    }

    /// Stacks `other` after `self` along axis 2.
    pub fn concat_axis2(&self, other: &CubeMesh, tol: f64, group: &Group) -> Result<CubeMesh> {
        if self.cells[0] != other.cells[0] || self.cells[1] != other.cells[1] {
            return Err(Error::InvalidMesh("stacked cubes need equal resolution on axes 0, 1".into()));
        }
        let [n0, n1, a] = self.cells;
        let b = other.cells[2];
        for i in 0..=n0 {
            for j in 0..=n1 {
                let gap = self.get([i, j, a]).dist(group, other.get([i, j, 0]));
                if gap > tol {
                    return Err(Error::InvalidMesh(format!("stacked faces differ by {gap:e}")));
                }
            }
        }
        let mut samples = Vec::with_capacity((n0 + 1) * (n1 + 1) * (a + b + 1));
        for i in 0..=n0 {
            for j in 0..=n1 {
                for k in 0..=(a + b) {
                    let s = if k <= a { self.get([i, j, k]) } else { other.get([i, j, k - a]) };
                    samples.push(s.clone());
                }
            }
        }
        let mut seams2 = self.seams[2].clone();
        seams2.push(a);
        seams2.extend(other.seams[2].iter().map(|k| k + a));
        Ok(Mesh::new([n0, n1, a + b], samples)?.with_seams([self.seams[0].clone(), self.seams[1].clone(), seams2]))
    }
}

/// Per-condition maximal defects of a boundary-condition check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub conditions: Vec<(String, f64)>,
    pub tol: f64,
    pub pass: bool,
}

impl ValidationReport {
    pub(crate) fn new(conditions: Vec<(String, f64)>, tol: f64) -> Self {
        let pass = conditions.iter().all(|(_, d)| *d <= tol);
        ValidationReport { conditions, tol, pass }
    }

    pub fn defect(&self, name: &str) -> Option<f64> {
        self.conditions.iter().find(|(n, _)| n == name).map(|(_, d)| *d)
    }

    pub fn worst(&self) -> f64 {
        self.conditions.iter().map(|(_, d)| *d).fold(0.0, f64::max)
    }

    pub(crate) fn into_result(self, what: &str) -> Result<()> {
        if self.pass {
            return Ok(());
        }
        let failed: Vec<String> = self
            .conditions
            .iter()
            .filter(|(_, d)| *d > self.tol)
            .map(|(n, d)| format!("{n} ({d:e})"))
            .collect();
        Err(Error::InvalidString(format!("{what}: {}", failed.join(", "))))
    }
}

/// Largest distance of any sample from `p`.
fn max_dist_to(group: &Group, samples: impl Iterator<Item = GroupTuple>, p: &GroupTuple) -> f64 {
    samples.map(|s| s.dist(group, p)).fold(0.0, f64::max)
}

/// A string: a based path `w` in the source and a square `phi` in the
/// target with `phi(t, 0) = f(w(t))`, `phi(0, s) = f(o)` and `phi(1, s)`
/// independent of `s`. Axis 0 of `phi` is `t`, axis 1 is `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct StringCD1 {
    pub w: PathMesh,
    pub phi: SquareMesh,
    pub basepoint: GroupTuple,
}

impl StringCD1 {
    pub fn validate(&self, f: &dyn GroupMap, tol: f64) -> Result<ValidationReport> {
        let g = f.group();
        if self.w.cells()[0] != self.phi.cells()[0] {
            return Err(Error::InvalidString("w and phi have different t-resolutions".into()));
        }
        let [n, m] = self.phi.cells();
        let fo = GroupTuple::single(f.apply(&self.basepoint)?);
        let based = self.w.first().dist(g, &self.basepoint);
        let left = max_dist_to(g, (0..=m).map(|j| self.phi.get([0, j]).clone()), &fo);
        let right_ref = self.phi.get([n, 0]).clone();
        let right = max_dist_to(g, (0..=m).map(|j| self.phi.get([n, j]).clone()), &right_ref);
        let mut bottom = 0.0_f64;
        for i in 0..=n {
            let fw = GroupTuple::single(f.apply(self.w.get([i]))?);
            bottom = bottom.max(fw.dist(g, self.phi.get([i, 0])));
        }
        Ok(ValidationReport::new(
            vec![
                ("w(0) = o".into(), based),
                ("phi(0,s) = f(o)".into(), left),
                ("phi(1,s) constant".into(), right),
                ("phi(t,0) = f(w(t))".into(), bottom),
            ],
            tol,
        ))
    }

    /// Additional conditions of a loop-string: `w` closes up at `o` and
    /// `phi` is `f(o)` on its right and top edges.
    pub fn validate_loop(&self, f: &dyn GroupMap, tol: f64) -> Result<ValidationReport> {
        let g = f.group();
        let mut report = self.validate(f, tol)?;
        let [n, m] = self.phi.cells();
        let fo = GroupTuple::single(f.apply(&self.basepoint)?);
        report.conditions.push(("w(1) = o".into(), self.w.last().dist(g, &self.basepoint)));
        report
            .conditions
            .push(("phi(1,s) = f(o)".into(), max_dist_to(g, (0..=m).map(|j| self.phi.get([n, j]).clone()), &fo)));
        report
            .conditions
            .push(("phi(t,1) = f(o)".into(), max_dist_to(g, (0..=n).map(|i| self.phi.get([i, m]).clone()), &fo)));
        Ok(ValidationReport::new(report.conditions, tol))
    }

    pub fn ensure_valid(&self, f: &dyn GroupMap, tol: f64) -> Result<()> {
        self.validate(f, tol)?.into_result("string violates its boundary conditions")
    }

    /// Top edge `u(t) = phi(t, 1)`.
    pub fn top(&self) -> PathMesh {
        self.phi.line(0, self.phi.cells()[1])
    }

    pub fn conjugate(&self, g: &GroupElement) -> StringCD1 {
        StringCD1 { w: self.w.conjugate(g), phi: self.phi.conjugate(g), basepoint: self.basepoint.conjugate(g) }
    }
}

/// The canonical string over a based path: `phi(t, s) = f(w(t))`, with
/// `m` cells along `s`.
pub fn string_from_path(w: &PathMesh, f: &dyn GroupMap, m: usize) -> Result<StringCD1> {
    let image = w.image(f)?;
    let n = w.cells()[0];
    let mut samples = Vec::with_capacity((n + 1) * (m + 1));
    for i in 0..=n {
        for _ in 0..=m {
            samples.push(image.get([i]).clone());
        }
    }
    let phi = Mesh::new([n, m], samples)?.with_seams([w.seams()[0].clone(), Vec::new()]);
    Ok(StringCD1 { w: w.clone(), phi, basepoint: w.first().clone() })
}

/// A homotopy `(h, H)` between two strings, with `H` stored as `cube`.
/// `h(t₁, s)` has axes `(t₁, s)`; `H(t₁, t₂, s)` has axes `(t₁, t₂, s)` with the strings at `s = 0, 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomotopyCD11 {
    pub h: SquareMesh,
    pub cube: CubeMesh,
}

impl HomotopyCD11 {
    /// The homotopy from `s` to itself that does not move, with `cells`
    /// cells along the homotopy parameter.
    pub fn constant(s: &StringCD1, cells: usize) -> Result<HomotopyCD11> {
        let [n1, n2] = s.phi.cells();
        if s.w.cells()[0] != n1 {
            return Err(Error::InvalidString(format!("path has {} cells, square {n1}", s.w.cells()[0])));
        }
        let repeat = |samples: &[GroupTuple]| -> Vec<GroupTuple> {
            samples.iter().flat_map(|p| std::iter::repeat_n(p.clone(), cells + 1)).collect()
        };
        let [sw] = s.w.seams().clone();
        let [s1, s2] = s.phi.seams().clone();
        let h = Mesh::new([n1, cells], repeat(s.w.samples()))?.with_seams([sw, Vec::new()]);
        let cube = Mesh::new([n1, n2, cells], repeat(s.phi.samples()))?.with_seams([s1, s2, Vec::new()]);
        Ok(HomotopyCD11 { h, cube })
    }

    /// The two strings at `s = 0` and `s = 1`.
    pub fn ends(&self, basepoint: &GroupTuple) -> (StringCD1, StringCD1) {
        let [_, s_cells] = self.h.cells();
        let h_cells = self.cube.cells();
        let make = |k: usize, ks: usize| StringCD1 {
            w: self.h.line(0, k),
            phi: self.cube.face(2, ks),
            basepoint: basepoint.clone(),
        };
        (make(0, 0), make(s_cells, h_cells[2]))
    }

    pub fn validate(&self, f: &dyn GroupMap, basepoint: &GroupTuple, tol: f64) -> Result<ValidationReport> {
        let g = f.group();
        let [n1, ns] = self.h.cells();
        let [m1, m2, ms] = self.cube.cells();
        if n1 != m1 || ns != ms {
            return Err(Error::InvalidHomotopy(format!(
                "h cells {:?} incompatible with H cells {:?}",
                self.h.cells(),
                self.cube.cells()
            )));
        }
        let fo = GroupTuple::single(f.apply(basepoint)?);
        let mut conditions = Vec::new();

        let (s0, s1) = self.ends(basepoint);
        let r0 = s0.validate(f, tol)?;
        let r1 = s1.validate(f, tol)?;
        for (name, d) in r0.conditions.iter().chain(&r1.conditions) {
            conditions.push((format!("end string: {name}"), *d));
        }

        let h_end = self.h.get([n1, 0]).clone();
        conditions.push(("h(1,s) constant".into(), max_dist_to(g, (0..=ns).map(|k| self.h.get([n1, k]).clone()), &h_end)));

        let mut left = 0.0_f64;
        let mut right = 0.0_f64;
        let mut top = 0.0_f64;
        let mut bottom = 0.0_f64;
        for k in 0..=ns {
            for j in 0..=m2 {
                left = left.max(self.cube.get([0, j, k]).dist(g, &fo));
                right = right.max(self.cube.get([m1, j, k]).dist(g, self.cube.get([m1, j, 0])));
            }
            for i in 0..=m1 {
                top = top.max(self.cube.get([i, m2, k]).dist(g, self.cube.get([i, m2, 0])));
                let fh = GroupTuple::single(f.apply(self.h.get([i, k]))?);
                bottom = bottom.max(fh.dist(g, self.cube.get([i, 0, k])));
            }
        }
        conditions.push(("H(0,t2,s) = f(o)".into(), left));
        conditions.push(("H(1,t2,s) constant in s".into(), right));
        conditions.push(("H(t1,1,s) constant in s".into(), top));
        conditions.push(("H(t1,0,s) = f(h(t1,s))".into(), bottom));
        Ok(ValidationReport::new(conditions, tol))
    }

    pub fn ensure_valid(&self, f: &dyn GroupMap, basepoint: &GroupTuple, tol: f64) -> Result<()> {
        let report = self.validate(f, basepoint, tol)?;
        report.into_result("homotopy violates its boundary conditions").map_err(|e| match e {
            Error::InvalidString(msg) => Error::InvalidHomotopy(msg),
            other => other,
        })
    }

    /// Reverses the homotopy parameter `s`.
    pub fn reverse(&self) -> HomotopyCD11 {
        HomotopyCD11 { h: self.h.reverse(1), cube: self.cube.reverse(2) }
    }

    pub fn conjugate(&self, g: &GroupElement) -> HomotopyCD11 {
        HomotopyCD11 { h: self.h.conjugate(g), cube: self.cube.conjugate(g) }
    }

    pub fn refine(&self, group: &Group, factor: usize) -> Result<HomotopyCD11> {
        Ok(HomotopyCD11 { h: self.h.refine(group, factor)?, cube: self.cube.refine(group, factor)? })
    }

    pub fn coarsen(&self, factor: usize) -> Result<HomotopyCD11> {
        Ok(HomotopyCD11 { h: self.h.coarsen(factor)?, cube: self.cube.coarsen(factor)? })
    }

    /// `self` followed by `other` along `s`.
    pub fn stack(&self, other: &HomotopyCD11, tol: f64, group: &Group) -> Result<HomotopyCD11> {
        Ok(HomotopyCD11 { h: self.h.concat_axis1(&other.h, tol, group)?, cube: self.cube.concat_axis2(&other.cube, tol, group)? })
    }
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    kind: String,
    group: GroupSpec,
    arity: usize,
    dims: Vec<usize>,
    samples: Vec<Vec<GroupElement>>,
    #[serde(default)]
    seams: Vec<Vec<usize>>,
}

fn kind_name(d: usize) -> &'static str {
    match d {
        1 => "path",
        2 => "square",
        3 => "cube",
        _ => "grid",
    }
}

impl<const D: usize> Mesh<D> {
    /// JSON encoding: `{"kind","group","arity","dims","samples","seams"}`,
    /// where `dims` are cell counts and each sample is a list of matrices.
    pub fn to_json(&self, group: &Group) -> Value {
        let file = MeshFile {
            kind: kind_name(D).into(),
            group: group.spec().clone(),
            arity: self.arity,
            dims: self.cells.to_vec(),
            samples: self.samples.iter().map(|s| s.0.clone()).collect(),
            seams: self.seams.to_vec(),
        };
        serde_json::to_value(file).expect("mesh serializes")
    }

    /// Parses and validates a mesh file, returning the group it lives in.
    pub fn from_json(value: Value) -> Result<(Group, Self)> {
        let file: MeshFile = serde_json::from_value(value)?;
        if file.kind != kind_name(D) {
            return Err(Error::InvalidMesh(format!("expected a {} mesh, got `{}`", kind_name(D), file.kind)));
        }
        if file.dims.len() != D {
            return Err(Error::InvalidMesh(format!("expected {D} dims, got {}", file.dims.len())));
        }
        let group = Group::new(file.group)?;
        let cells: [usize; D] = std::array::from_fn(|k| file.dims[k]);
        let mut samples = Vec::with_capacity(file.samples.len());
        for s in file.samples {
            if s.len() != file.arity {
                return Err(Error::InvalidMesh(format!("sample of arity {} in a mesh of arity {}", s.len(), file.arity)));
            }
            for g in &s {
                group.check_element(g)?;
            }
            samples.push(GroupTuple(s));
        }
        let mut mesh = Mesh::new(cells, samples)?;
        if !file.seams.is_empty() {
            if file.seams.len() != D {
                return Err(Error::InvalidMesh("seams must list one array per axis".into()));
            }
            mesh.seams = std::array::from_fn(|k| file.seams[k].clone());
        }
        Ok((group, mesh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::IdentityMap;
    use crate::rng::stream;
    use crate::words::{Word, WordForm};

    #[test]
    fn geodesic_path_trivial_cases() {
        let g = Group::su2();
        let e = GroupTuple::identity(&g, 1);
        let p = geodesic_path(&g, &[e.clone(), e.clone()], 5).unwrap();
        assert!(p.samples().iter().all(|s| s.dist(&g, &e) == 0.0));
        let y = g.basis()[0].scale(0.7);
        let end = GroupTuple::single(g.exp(&y).unwrap());
        let p = geodesic_path(&g, &[e.clone(), end.clone()], 1).unwrap();
        assert_eq!(p.samples(), &[e, end]);
    }

    #[test]
    fn refinement_preserves_shared_samples_exactly() {
        let g = Group::su2();
        let mut rng = stream(50, 0);
        let a = GroupTuple::random(&g, &mut rng, 2, 0.5);
        let b = GroupTuple::random(&g, &mut rng, 2, 0.5);
        let c = GroupTuple::random(&g, &mut rng, 2, 0.5);
        let p = geodesic_path(&g, &[a, b, c], 4).unwrap();
        let r = p.refine(&g, 3).unwrap();
        for i in 0..=8 {
            assert_eq!(p.get([i]), r.get([3 * i]));
        }
        assert_eq!(r.seams()[0], vec![12]);
        assert_eq!(p.refine(&g, 1).unwrap(), p);
    }

    #[test]
    fn refinement_composes() {
        let g = Group::su2();
        let mut rng = stream(51, 0);
        let corners: Vec<GroupElement> = (0..4).map(|_| g.random_element(&mut rng, 0.4)).collect();
        let sq = Mesh::<2>::new(
            [1, 1],
            corners.iter().map(|c| GroupTuple::single(c.clone())).collect(),
        )
        .unwrap();
        let ab = sq.refine(&g, 2).unwrap().refine(&g, 3).unwrap();
        let direct = sq.refine(&g, 6).unwrap();
        // Shared indices are the samples of the intermediate mesh.
        let mut worst = 0.0_f64;
        for i in (0..=6).step_by(3) {
            for j in (0..=6).step_by(3) {
                worst = worst.max(ab.get([i, j]).dist(&g, direct.get([i, j])));
            }
        }
        assert!(worst < 1e-12, "{worst:e}");
        let path = sq.line(0, 0);
        let ab = path.refine(&g, 2).unwrap().refine(&g, 3).unwrap();
        let direct = path.refine(&g, 6).unwrap();
        for i in 0..=6 {
            assert!(ab.get([i]).dist(&g, direct.get([i])) < 1e-12);
        }
    }

    #[test]
    fn refined_subgroup_path_stays_on_subgroup() {
        let g = Group::su2();
        let y = g.basis()[1].scale(1.2);
        let p = Mesh::<1>::from_fn([4], |t| Ok(GroupTuple::single(g.exp(&y.scale(t[0]))?))).unwrap();
        let r = p.refine(&g, 5).unwrap();
        for i in 0..=20 {
            let exact = g.exp(&y.scale(i as f64 / 20.0)).unwrap();
            assert!(g.dist(&r.get([i]).0[0], &exact) < 1e-12);
        }
        let c = Mesh::<3>::constant([2, 2, 2], &GroupTuple::identity(&g, 1)).unwrap();
        assert!(c.refine(&g, 2).unwrap().samples().iter().all(|s| s.dist(&g, &GroupTuple::identity(&g, 1)) == 0.0));
    }

    #[test]
    fn trivial_string_validates_with_zero_defects() {
        let g = Group::su2();
        let f = WordForm::new(g.clone(), Word::surface_relator(1));
        let o = GroupTuple::identity(&g, 2);
        let w = Mesh::<1>::constant([4], &o).unwrap();
        let s = string_from_path(&w, &f, 4).unwrap();
        let r = s.validate(&f, MESH_TOL).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst(), 0.0);
    }

    #[test]
    fn perturbed_string_reports_defect() {
        let g = Group::su2();
        let f = IdentityMap { group: g.clone() };
        let y = g.basis()[2].scale(0.8);
        let w = Mesh::<1>::from_fn([8], |t| Ok(GroupTuple::single(g.exp(&y.scale(t[0]))?))).unwrap();
        let s = string_from_path(&w, &f, 8).unwrap();
        assert!(s.validate(&f, MESH_TOL).unwrap().pass);
        let eps = 1e-3;
        let kick = g.exp(&g.basis()[0].scale(eps)).unwrap();
        let mut samples = s.phi.samples().to_vec();
        let idx = s.phi.index([8, 5]);
        samples[idx] = GroupTuple::single(&samples[idx].0[0] * &kick);
        let bad = StringCD1 { phi: Mesh::new([8, 8], samples).unwrap(), ..s };
        let r = bad.validate(&f, MESH_TOL).unwrap();
        assert!(!r.pass);
        let d = r.defect("phi(1,s) constant").unwrap();
        // ‖g(exp(εe₁) − 1)‖_F = ε/√2 to first order.
        assert!(d > 0.0 && d <= 2.0 * eps, "{d}");
    }

    #[test]
    fn string_from_random_path_passes() {
        let g = Group::su2();
        let f = WordForm::new(g.clone(), Word::surface_relator(1));
        let mut rng = stream(52, 0);
        let o = GroupTuple::identity(&g, 2);
        let q = GroupTuple::random(&g, &mut rng, 2, 0.5);
        let w = geodesic_path(&g, &[o, q.clone()], 16).unwrap();
        let s = string_from_path(&w, &f, 3).unwrap();
        assert!(s.validate(&f, MESH_TOL).unwrap().pass);
        let fq = f.apply(&q).unwrap();
        assert!(g.dist(&s.top().last().0[0], &fq) < 1e-12);
    }

    #[test]
    fn mesh_json_round_trip() {
        let g = Group::su2();
        let mut rng = stream(53, 0);
        let a = GroupTuple::random(&g, &mut rng, 2, 0.5);
        let b = GroupTuple::random(&g, &mut rng, 2, 0.5);
        let p = geodesic_path(&g, &[a.clone(), b, a], 3).unwrap();
        let v = p.to_json(&g);
        assert_eq!(v["kind"], "path");
        assert_eq!(v["dims"], serde_json::json!([6]));
        let (g2, back) = PathMesh::from_json(v).unwrap();
        assert_eq!(g2.spec(), g.spec());
        assert_eq!(back, p);
        assert!(SquareMesh::from_json(p.to_json(&g)).is_err());
    }

    #[test]
    fn reverse_and_steps() {
        let g = Group::su2();
        let y = g.basis()[2].scale(2.0);
        let p = Mesh::<1>::from_fn([8], |t| Ok(GroupTuple::single(g.exp(&y.scale(t[0]))?))).unwrap();
        assert_eq!(p.reverse(0).reverse(0), p);
        assert_eq!(p.reverse(0).get([0]), p.get([8]));
        // e₃ = −(i/2)σ₃, so each step rotates by (2/8)/2.
        assert!((p.max_step(&g).unwrap() - 0.125).abs() < 1e-12);
        assert!(p.check_steps(&g, 0.1).is_err());
    }
}
