//! Registry of identity checks run by `verify`: the closedness of `ζ_w`, the
//! equivariant identities linking `λ`, `ϑ` and `ζ`, and consistency of the
//! word differential.

use std::collections::BTreeMap;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::class::ConjugacyClass;
use crate::error::{Error, Result};
use crate::forms::{
    delta_equivariant, exterior_derivative, CartanForm, ConstantInX, EquivariantForm, Form,
    GroupMap, GroupTuple, PulledCartan, PulledTheta, TangentTuple, ThetaForm,
};
use crate::lie::{Group, GroupSpec};
use crate::rng::{stream, SeededRng};
use crate::words::{cocycle_by_name, parse_word, Word, WordForm};

/// Residuals at or below this are treated as exact and carry no order.
pub const ROUNDOFF_FLOOR: f64 = 1e-11;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckTolerances {
    /// Final residual of the refinement checks.
    pub residual: f64,
    /// Minimal observed order of the refinement checks.
    pub min_order: f64,
    /// Pointwise residual of the equivariant identities.
    pub identity: f64,
    /// Minimal observed order of the word differential against central differences.
    pub differential_order: f64,
    pub invariance: f64,
}

impl Default for CheckTolerances {
    fn default() -> Self {
        CheckTolerances { residual: 1e-4, min_order: 1.0, identity: 1e-6, differential_order: 1.9, invariance: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub group: GroupSpec,
    /// Word in the DSL of [`parse_word`]; empty for the identity word in two letters.
    pub word: String,
    /// Overrides the calibrated cocycle convention.
    pub cocycle: Option<String>,
    pub seed: u64,
    /// Sample points of the refinement checks.
    pub points: usize,
    /// Sample points of the pointwise identities.
    pub identity_points: usize,
    pub steps: Vec<f64>,
    pub differential_steps: Vec<f64>,
    pub fd_step: f64,
    /// Names of the checks to run; empty for all.
    pub checks: Vec<String>,
    pub tolerances: CheckTolerances,
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig {
            group: GroupSpec::su(2),
            word: "[a1,b1]".into(),
            cocycle: None,
            seed: 0,
            points: 10,
            identity_points: 20,
            steps: vec![1e-2, 5e-3, 2.5e-3],
            differential_steps: vec![1e-3, 5e-4],
            fd_step: 1e-4,
            checks: Vec::new(),
            tolerances: CheckTolerances::default(),
        }
    }
}

/// Everything a check needs, built once per suite.
pub struct CheckContext {
    pub config: CheckConfig,
    pub group: Group,
    pub word: WordForm,
}

impl CheckContext {
    pub fn new(config: CheckConfig) -> Result<Self> {
        let group = Group::new(config.group.clone())?;
        let word = if config.word.trim().is_empty() { Word::identity(2) } else { parse_word(&config.word)? };
        let word = if word.arity() == 0 { Word::identity(2) } else { word };
        let word = match &config.cocycle {
            Some(name) => WordForm::with_cocycle(group.clone(), word, cocycle_by_name(name)?),
            None => WordForm::new(group.clone(), word),
        };
        for &h in config.steps.iter().chain(&config.differential_steps).chain([&config.fd_step]) {
            if !(h > 0.0) {
                return Err(Error::Config(format!("finite-difference steps must be positive, got {h}")));
            }
        }
        if config.steps.windows(2).chain(config.differential_steps.windows(2)).any(|w| w[1] >= w[0]) {
            return Err(Error::Config("step ladders must be strictly decreasing".into()));
        }
        Ok(CheckContext { config, group, word })
    }

    /// Sampler for one check, independent of which other checks run.
    fn rng(&self, check: &str) -> SeededRng {
        let id = check.bytes().fold(0xcbf2_9ce4_8422_2325_u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3));
        stream(self.config.seed, id)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub description: String,
    pub points: usize,
    /// Finite-difference steps of a refinement check; empty for pointwise checks.
    pub steps: Vec<f64>,
    /// Maximal residual over the points, per step.
    pub max_residuals: Vec<f64>,
    /// Smallest per-point observed order; absent when every residual is at round-off.
    pub order: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

pub trait IdentityCheck: Send + Sync {
    fn name(&self) -> &'static str;
    fn description(&self) -> &'static str;
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport>;
}

/// Residuals per point and step, reduced to a report. A point whose
/// final residual is above the round-off floor contributes its worst
/// observed order between successive steps.
fn refinement_report(
    check: &dyn IdentityCheck,
    steps: &[f64],
    residuals: &[Vec<f64>],
    tol: f64,
    min_order: f64,
) -> CheckReport {
    let max_residuals: Vec<f64> =
        (0..steps.len()).map(|k| residuals.iter().map(|r| r[k]).fold(0.0, f64::max)).collect();
    let mut order: Option<f64> = None;
    for r in residuals {
        if r.last().is_some_and(|&x| x > ROUNDOFF_FLOOR) {
            for k in 1..steps.len() {
                let o = (r[k - 1] / r[k]).ln() / (steps[k - 1] / steps[k]).ln();
                order = Some(order.map_or(o, |m: f64| m.min(o)));
            }
        }
    }
    let last = max_residuals.last().copied().unwrap_or(0.0);
    let pass = last <= tol && order.is_none_or(|o| o >= min_order);
    CheckReport {
        name: check.name().into(),
        description: check.description().into(),
        points: residuals.len(),
        steps: steps.to_vec(),
        max_residuals,
        order,
        tolerance: tol,
        pass,
    }
}

fn pointwise_report(check: &dyn IdentityCheck, residuals: &[f64], tol: f64) -> CheckReport {
    let max = residuals.iter().copied().fold(0.0, f64::max);
    CheckReport {
        name: check.name().into(),
        description: check.description().into(),
        points: residuals.len(),
        steps: Vec::new(),
        max_residuals: vec![max],
        order: None,
        tolerance: tol,
        pass: max <= tol,
    }
}

fn random_tangents(g: &Group, rng: &mut SeededRng, m: usize, count: usize) -> Vec<TangentTuple> {
    (0..count).map(|_| TangentTuple::random(g, rng, m, 1.0)).collect()
}

/// `dζ_w = w*λ − Σ nᵢ prᵢ*λ`, with `n` the degree vector; for relators the
/// correction vanishes.
struct ZetaPrimitive;

impl IdentityCheck for ZetaPrimitive {
    fn name(&self) -> &'static str {
        "zeta-primitive"
    }
    fn description(&self) -> &'static str {
        "d zeta_w - w*lambda + sum n_i pr_i*lambda under step refinement"
    }
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport> {
        let g = &ctx.group;
        let wf = &ctx.word;
        let m = wf.word().arity();
        let degrees = wf.degree_vector();
        let pulled = PulledCartan { map: wf };
        let mut rng = ctx.rng(self.name());
        let mut residuals = Vec::with_capacity(ctx.config.points);
        for _ in 0..ctx.config.points {
            let p = GroupTuple::random(g, &mut rng, m, 1.0);
            let v = random_tangents(g, &mut rng, m, 3);
            let refs: Vec<&TangentTuple> = v.iter().collect();
            let mut target = pulled.eval(&p, &refs)?;
            for (i, &n) in degrees.iter().enumerate() {
                target -= n as f64 * g.cartan3(&v[0].0[i], &v[1].0[i], &v[2].0[i])?;
            }
            let r = ctx
                .config
                .steps
                .iter()
                .map(|&h| Ok((exterior_derivative(g, |q, t| wf.eval(q, t), &p, &refs, h)? - target).abs()))
                .collect::<Result<Vec<_>>>()?;
            residuals.push(r);
        }
        let tol = &ctx.config.tolerances;
        Ok(refinement_report(self, &ctx.config.steps, &residuals, tol.residual, tol.min_order))
    }
}

/// `δλ + dϑ = 0` on `K`.
struct DeltaCartan;

impl IdentityCheck for DeltaCartan {
    fn name(&self) -> &'static str {
        "delta-lambda"
    }
    fn description(&self) -> &'static str {
        "delta_K lambda + d theta, pointwise"
    }
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport> {
        let g = &ctx.group;
        let lam = CartanForm { group: g.clone(), arity: 1 };
        let th = ThetaForm { group: g.clone() };
        let mut rng = ctx.rng(self.name());
        let residuals = (0..ctx.config.identity_points)
            .map(|_| {
                let p = GroupTuple::random(g, &mut rng, 1, 1.0);
                let x = g.random_algebra(&mut rng, 1.0);
                let v = random_tangents(g, &mut rng, 1, 2);
                let delta = delta_equivariant(g, &ConstantInX(&lam), &x, &p, &[&v[0], &v[1]])?;
                let d = exterior_derivative(g, |q, t| th.eval(&x, q, t), &p, &[&v[0], &v[1]], ctx.config.fd_step)?;
                Ok((delta + d).abs())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pointwise_report(self, &residuals, ctx.config.tolerances.identity))
    }
}

/// `δζ_w = w*ϑ` on `K^m`.
struct DeltaZeta;

impl IdentityCheck for DeltaZeta {
    fn name(&self) -> &'static str {
        "delta-zeta"
    }
    fn description(&self) -> &'static str {
        "delta_K zeta_w - w*theta, pointwise"
    }
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport> {
        let g = &ctx.group;
        let wf = &ctx.word;
        let m = wf.word().arity();
        let pulled = PulledTheta { map: wf };
        let mut rng = ctx.rng(self.name());
        let residuals = (0..ctx.config.identity_points)
            .map(|_| {
                let p = GroupTuple::random(g, &mut rng, m, 1.0);
                let x = g.random_algebra(&mut rng, 1.0);
                let v = TangentTuple::random(g, &mut rng, m, 1.0);
                let delta = delta_equivariant(g, &ConstantInX(wf), &x, &p, &[&v])?;
                Ok((delta - pulled.eval(&x, &p, &[&v])?).abs())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pointwise_report(self, &residuals, ctx.config.tolerances.identity))
    }
}

/// `δϑ = 0` on `K`.
struct DeltaTheta;

impl IdentityCheck for DeltaTheta {
    fn name(&self) -> &'static str {
        "delta-theta"
    }
    fn description(&self) -> &'static str {
        "delta_K theta, pointwise"
    }
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport> {
        let g = &ctx.group;
        let th = ThetaForm { group: g.clone() };
        let mut rng = ctx.rng(self.name());
        let residuals = (0..ctx.config.identity_points)
            .map(|_| {
                let p = GroupTuple::random(g, &mut rng, 1, 1.0);
                let x = g.random_algebra(&mut rng, 1.0);
                Ok(delta_equivariant(g, &th, &x, &p, &[])?.abs())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pointwise_report(self, &residuals, ctx.config.tolerances.identity))
    }
}

/// The recursive differential of `w` against central differences of `w`
/// along `p·exp(±h v)`, left-trivialized at `w(p)`.
struct WordDifferential;

impl IdentityCheck for WordDifferential {
    fn name(&self) -> &'static str {
        "word-differential"
    }
    fn description(&self) -> &'static str {
        "dw against central differences of w"
    }
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport> {
        let g = &ctx.group;
        let wf = &ctx.word;
        let m = wf.word().arity();
        let mut rng = ctx.rng(self.name());
        let mut residuals = Vec::with_capacity(ctx.config.points);
        for _ in 0..ctx.config.points {
            let p = GroupTuple::random(g, &mut rng, m, 1.0);
            let v = TangentTuple::random(g, &mut rng, m, 1.0);
            let base = wf.apply(&p)?;
            let exact = wf.differential(&p, &v)?;
            let r = ctx
                .config
                .differential_steps
                .iter()
                .map(|&h| {
                    let plus = wf.apply(&p.step(g, &v, h)?)?;
                    let minus = wf.apply(&p.step(g, &v, -h)?)?;
                    let fd = base.matrix().adjoint() * (plus.matrix() - minus.matrix()) / Complex64::new(2.0 * h, 0.0);
                    Ok((exact.matrix() - fd).norm())
                })
                .collect::<Result<Vec<_>>>()?;
            residuals.push(r);
        }
        let tol = &ctx.config.tolerances;
        Ok(refinement_report(self, &ctx.config.differential_steps, &residuals, tol.residual, tol.differential_order))
    }
}

/// `ζ_w(Ad_k v, Ad_k w)` at `k p k⁻¹` equals `ζ_w(v, w)` at `p`.
struct ZetaInvariance;

impl IdentityCheck for ZetaInvariance {
    fn name(&self) -> &'static str {
        "zeta-invariance"
    }
    fn description(&self) -> &'static str {
        "zeta_w under simultaneous conjugation"
    }
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport> {
        let g = &ctx.group;
        let wf = &ctx.word;
        let m = wf.word().arity();
        let mut rng = ctx.rng(self.name());
        let residuals = (0..ctx.config.identity_points)
            .map(|_| {
                let p = GroupTuple::random(g, &mut rng, m, 1.0);
                let v = random_tangents(g, &mut rng, m, 2);
                let k = g.random_element(&mut rng, 2.0);
                let a = wf.eval(&p, &[&v[0], &v[1]])?;
                let b = wf.eval(&p.conjugate(&k), &[&v[0].adjoint(g, &k)?, &v[1].adjoint(g, &k)?])?;
                Ok((a - b).abs())
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(pointwise_report(self, &residuals, ctx.config.tolerances.invariance))
    }
}

/// `dζ_C = λ|_C` for the class of a seeded element, pulled back to `K`.
struct ClassPrimitive;

impl IdentityCheck for ClassPrimitive {
    fn name(&self) -> &'static str {
        "class-primitive"
    }
    fn description(&self) -> &'static str {
        "d zeta_C - lambda|_C on a seeded conjugacy class, pulled back to K"
    }
    fn run(&self, ctx: &CheckContext) -> Result<CheckReport> {
        let g = &ctx.group;
        let mut rng = ctx.rng(self.name());
        let class = ConjugacyClass::new(g.clone(), g.random_element(&mut rng, 1.0))?;
        let pb = class.pulled_to_group();
        let mut residuals = Vec::with_capacity(ctx.config.points);
        for _ in 0..ctx.config.points {
            let p = GroupTuple::random(g, &mut rng, 1, 1.0);
            let v = random_tangents(g, &mut rng, 1, 3);
            let refs: Vec<&TangentTuple> = v.iter().collect();
            let target = pb.cartan(&p, &refs)?;
            let r = ctx
                .config
                .steps
                .iter()
                .map(|&h| Ok((exterior_derivative(g, |q, t| pb.zeta(q, t), &p, &refs, h)? - target).abs()))
                .collect::<Result<Vec<_>>>()?;
            residuals.push(r);
        }
        let tol = &ctx.config.tolerances;
        Ok(refinement_report(self, &ctx.config.steps, &residuals, tol.residual, tol.min_order))
    }
}

fn registry() -> &'static [Arc<dyn IdentityCheck>] {
    static REGISTRY: OnceLock<Vec<Arc<dyn IdentityCheck>>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        vec![
            Arc::new(ZetaPrimitive),
            Arc::new(DeltaCartan),
            Arc::new(DeltaZeta),
            Arc::new(DeltaTheta),
            Arc::new(WordDifferential),
            Arc::new(ZetaInvariance),
            Arc::new(ClassPrimitive),
        ]
    })
}

/// Registered check names in run order.
pub fn check_names() -> Vec<&'static str> {
    registry().iter().map(|c| c.name()).collect()
}

pub fn check_by_name(name: &str) -> Result<Arc<dyn IdentityCheck>> {
    registry()
        .iter()
        .find(|c| c.name() == name)
        .cloned()
        .ok_or_else(|| Error::Config(format!("unknown check `{name}`; known: {:?}", check_names())))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub group: GroupSpec,
    pub word: String,
    pub cocycle: String,
    pub seed: u64,
    pub degree_vector: Vec<i64>,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

/// Runs the configured checks, or all of them, in registry order.
pub fn run_suite(config: &CheckConfig) -> Result<SuiteReport> {
    let ctx = CheckContext::new(config.clone())?;
    let selected: Vec<Arc<dyn IdentityCheck>> = if config.checks.is_empty() {
        registry().to_vec()
    } else {
        let wanted = config.checks.iter().map(|n| check_by_name(n)).collect::<Result<Vec<_>>>()?;
        let by_name: BTreeMap<&str, Arc<dyn IdentityCheck>> = wanted.into_iter().map(|c| (c.name(), c)).collect();
        registry().iter().filter(|c| by_name.contains_key(c.name())).cloned().collect()
    };
    let checks = selected.iter().map(|c| c.run(&ctx)).collect::<Result<Vec<_>>>()?;
    Ok(SuiteReport {
        group: config.group.clone(),
        word: ctx.word.word().to_string(),
        cocycle: ctx.word.cocycle_name().into(),
        seed: config.seed,
        degree_vector: ctx.word.degree_vector(),
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}
