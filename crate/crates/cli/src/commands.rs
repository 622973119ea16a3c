use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use fibercirc::bundle::{holonomy, MapData};
use fibercirc::checks::{run_suite, CheckConfig};
use fibercirc::class::ConjugacyClass;
use fibercirc::forms::{CartanForm, GroupTuple};
use fibercirc::mesh::{CubeMesh, HomotopyCD11, SquareMesh};
use fibercirc::moment::{canonical_fiber_point, flatness_probe, momentum, momentum_defect};
use fibercirc::quadrature::{integer_snap, integrate_3form, richardson, PeriodReport};
use fibercirc::rng::stream;
use fibercirc::scenarios::{curvature_family, euler_box, euler_box_expected, Genus1Pair};
use fibercirc::words::{parse_word, WordForm};
use fibercirc::{Group, GroupElement, GroupSpec};

use crate::config::Config;
use crate::output;
use crate::CliError;

/// A computed report: the JSON document, its CSV rows, and the verdict.
pub struct Outcome {
    pub report: Value,
    pub rows: Vec<Value>,
    pub pass: bool,
}

pub struct VerifyArgs {
    pub word: Option<String>,
    pub cocycle: Option<String>,
    pub checks: Vec<String>,
}

pub fn verify(config: &Config, seed: u64, tol: Option<f64>, args: VerifyArgs) -> Result<Outcome, CliError> {
    let mut cc: CheckConfig = config.verify.clone();
    cc.seed = seed;
    if let Some(w) = args.word {
        cc.word = w;
    }
    if args.cocycle.is_some() {
        cc.cocycle = args.cocycle;
    }
    if !args.checks.is_empty() {
        cc.checks = args.checks;
    }
    if let Some(t) = tol {
        cc.tolerances.residual = t;
    }
    let suite = run_suite(&cc)?;
    let rows = suite.checks.iter().map(|c| serde_json::to_value(c).expect("serializes")).collect();
    Ok(Outcome { pass: suite.pass, report: serde_json::to_value(&suite)?, rows })
}

pub fn periods(config: &Config, tol: Option<f64>, spec: GroupSpec, resolutions: [usize; 3]) -> Result<Outcome, CliError> {
    let g = Group::new(spec.clone())?;
    let lam = CartanForm { group: g.clone(), arity: 1 };
    let mut values = [0.0; 3];
    for (k, &n) in resolutions.iter().enumerate() {
        values[k] = integrate_3form(&g, &euler_box(&g, n)?, &lam)?;
    }
    let period = PeriodReport::new(richardson(resolutions, values, 2.0), tol.unwrap_or(config.periods.tol));
    let report = json!({"group": spec, "expected": euler_box_expected(&spec), "period": period});
    Ok(Outcome { pass: period.snap.pass, rows: vec![report.clone()], report })
}

/// On-disk homotopy: the map and the paths of its two meshes, relative to
/// the file.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomotopyFile {
    pub map: MapSpec,
    pub h: PathBuf,
    pub cube: PathBuf,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapSpec {
    Word(String),
    Class(GroupElement),
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

fn load_homotopy(path: &Path) -> Result<(MapData, HomotopyCD11), CliError> {
    let file: HomotopyFile =
        serde_json::from_value(read_json(path)?).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let (gh, h) = SquareMesh::from_json(read_json(&dir.join(&file.h))?)?;
    let (gc, cube) = CubeMesh::from_json(read_json(&dir.join(&file.cube))?)?;
    if gh.spec() != gc.spec() {
        return Err(CliError(format!("{}: h and cube live in different groups", path.display())));
    }
    let data = match file.map {
        MapSpec::Word(src) => MapData::word(WordForm::parse(gc, &src)?)?,
        MapSpec::Class(rep) => {
            gc.check_element(&rep)?;
            MapData::class(ConjugacyClass::new(gc, rep)?)?
        }
    };
    Ok((data, HomotopyCD11 { h, cube }))
}

pub const SCENARIOS: [&str; 4] = ["constant", "genus1-a", "genus1-b", "genus1-b-bubble"];

fn scenario(name: &str, seed: u64, n: usize) -> Result<(MapData, HomotopyCD11), CliError> {
    let pair = Genus1Pair::new(seed)?;
    let hh = match name {
        "constant" => HomotopyCD11::constant(&pair.string_a(n)?, n)?,
        "genus1-a" => pair.schedule_a(n)?,
        "genus1-b" => pair.schedule_b(n)?,
        "genus1-b-bubble" => pair.schedule_b_with_bubble(n)?,
        other => return Err(CliError(format!("unknown scenario `{other}`; known: {SCENARIOS:?}"))),
    };
    Ok((pair.data, hh))
}

fn export(dir: &Path, name: &str, data: &MapData, hh: &HomotopyCD11) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError(format!("{}: {e}", dir.display())))?;
    let word = match data.source() {
        fibercirc::bundle::Source::Word(w) => w.word().to_string(),
        fibercirc::bundle::Source::Class(_) => return Err(CliError("only word scenarios can be exported".into())),
    };
    let file = HomotopyFile { map: MapSpec::Word(word), h: format!("{name}.h.json").into(), cube: format!("{name}.cube.json").into() };
    let g = data.group();
    output::write(&dir.join(format!("{name}.json")), &serde_json::to_string_pretty(&file)?)?;
    output::write(&dir.join(&file.h), &serde_json::to_string(&hh.h.to_json(g))?)?;
    output::write(&dir.join(&file.cube), &serde_json::to_string(&hh.cube.to_json(g))?)
}

pub struct HolonomyArgs {
    pub files: Vec<PathBuf>,
    pub scenarios: Vec<String>,
    pub n: Option<usize>,
    pub reverse: bool,
    pub export: Option<PathBuf>,
}

pub fn holonomy_cmd(config: &Config, seed: u64, tol: Option<f64>, args: HolonomyArgs) -> Result<Outcome, CliError> {
    let tol = tol.unwrap_or(config.holonomy.tol);
    let n = args.n.unwrap_or(config.holonomy.n);
    let mut items = Vec::new();
    for f in &args.files {
        let (data, hh) = load_homotopy(f)?;
        items.push((f.display().to_string(), data, hh));
    }
    for name in &args.scenarios {
        let (data, hh) = scenario(name, seed, n)?;
        if let Some(dir) = &args.export {
            export(dir, name, &data, &hh)?;
        }
        items.push((name.clone(), data, hh));
    }
    if items.is_empty() {
        return Err(CliError("give at least one homotopy file or --scenario".into()));
    }
    let mut rows = Vec::new();
    let mut values = Vec::new();
    let mut pass = true;
    for (label, data, hh) in &items {
        let hh = if args.reverse { hh.reverse() } else { hh.clone() };
        let r = holonomy(&hh, data, tol)?;
        pass &= r.snap.is_none_or(|s| s.pass);
        values.push(r.value);
        let mut row = serde_json::to_value(&r)?;
        row.as_object_mut().expect("object").insert("source".into(), json!(label));
        rows.push(row);
    }
    let difference = (values.len() >= 2).then(|| integer_snap(values[1] - values[0], tol));
    pass &= difference.is_none_or(|d| d.pass);
    let report = json!({"reversed": args.reverse, "homotopies": rows, "difference": difference});
    Ok(Outcome { report, rows, pass })
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PointFile {
    #[serde(default = "su2_spec")]
    group: GroupSpec,
    #[serde(default)]
    point: Option<Vec<GroupElement>>,
    #[serde(default)]
    tuples: Option<Vec<Vec<GroupElement>>>,
}

fn su2_spec() -> GroupSpec {
    GroupSpec::su(2)
}

fn load_points(path: &Path) -> Result<(Group, PointFile), CliError> {
    let file: PointFile =
        serde_json::from_value(read_json(path)?).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
    let g = Group::new(file.group.clone())?;
    for x in file.point.iter().flatten().chain(file.tuples.iter().flatten().flatten()) {
        g.check_element(x)?;
    }
    Ok((g, file))
}

pub fn word(config: &Config, seed: u64, tol: Option<f64>, src: &str, point: Option<&Path>, check: bool) -> Result<Outcome, CliError> {
    let parsed = parse_word(src)?;
    let (g, p) = match point {
        Some(path) => {
            let (g, file) = load_points(path)?;
            let p = file.point.ok_or_else(|| CliError(format!("{}: no `point`", path.display())))?;
            (g, GroupTuple(p))
        }
        None => {
            let g = Group::new(config.verify.group.clone())?;
            let p = GroupTuple::random(&g, &mut stream(seed, 0), parsed.arity(), 1.0);
            (g, p)
        }
    };
    let wf = WordForm::new(g.clone(), parsed.clone());
    let value = parsed.eval(&g, &p)?;
    let mut report = json!({
        "word": parsed.to_string(),
        "arity": parsed.arity(),
        "degree_vector": parsed.degree_vector(),
        "cocycle": wf.cocycle_name(),
        "plan": parsed.plan(),
        "point": p.0,
        "value": value,
        "distance_to_identity": g.dist(&value, &g.identity()),
    });
    let mut pass = true;
    if check {
        let mut cc = config.verify.clone();
        cc.group = g.spec().clone();
        cc.word = src.to_string();
        cc.seed = seed;
        cc.checks = vec!["zeta-primitive".into()];
        if let Some(t) = tol {
            cc.tolerances.residual = t;
        }
        let suite = run_suite(&cc)?;
        pass = suite.pass;
        report["check"] = serde_json::to_value(&suite.checks[0])?;
    }
    let row = json!({
        "word": report["word"],
        "degree_vector": report["degree_vector"],
        "distance_to_identity": report["distance_to_identity"],
        "check": report.get("check").cloned().unwrap_or(Value::Null),
    });
    Ok(Outcome { report, rows: vec![row], pass })
}

pub fn moment(config: &Config, seed: u64, tol: Option<f64>, point: Option<&Path>) -> Result<Outcome, CliError> {
    let mc = &config.moment;
    let tol = tol.unwrap_or(mc.tol);
    let mut report = serde_json::Map::new();
    if let Some(path) = point {
        let (g, file) = load_points(path)?;
        let q = GroupTuple(file.point.ok_or_else(|| CliError(format!("{}: no `point`", path.display())))?);
        if !q.len().is_multiple_of(2) {
            return Err(CliError(format!("{}: relator tuples have even length, got {}", path.display(), q.len())));
        }
        let data = MapData::relator(g.clone(), q.len() / 2)?;
        let p = canonical_fiber_point(&q, &data, mc.resolutions[2])?;
        let mu = momentum(&p, &data)?;
        report.insert("point_momentum".into(), json!(g.coords(&mu.0)?));
    }
    let data = MapData::relator(Group::new(config.verify.group.clone())?, mc.genus)?;
    let g = data.group();
    let fam = curvature_family(&data, seed, 0)?;
    let x = g.random_algebra(&mut stream(seed, 1), 1.0);
    let mut defects = Vec::new();
    for (&n, &h) in mc.resolutions.iter().zip(&mc.fd_steps) {
        let p = fam.fiber_point(n)?;
        let [t, _] = fam.tangents(n)?;
        defects.push(momentum_defect(&p, &x, &t, &data, h)?);
    }
    let orders: Vec<f64> = (1..3).map(|i| (defects[i - 1] / defects[i]).ln() / (mc.resolutions[i] as f64 / mc.resolutions[i - 1] as f64).ln()).collect();
    let mu = momentum(&fam.fiber_point(mc.resolutions[2])?, &data)?;
    let pass = defects[2] <= tol && orders.iter().all(|&o| o >= mc.min_order);
    report.insert("genus".into(), json!(mc.genus));
    report.insert("momentum".into(), json!(g.coords(&mu.0)?));
    report.insert("resolutions".into(), json!(mc.resolutions));
    report.insert("fd_steps".into(), json!(mc.fd_steps));
    report.insert("defects".into(), json!(defects));
    report.insert("orders".into(), json!(orders));
    report.insert("tolerance".into(), json!(tol));
    report.insert("pass".into(), json!(pass));
    let report = Value::Object(report);
    Ok(Outcome { rows: vec![report.clone()], report, pass })
}

pub fn probe(config: &Config, seed: u64, tol: Option<f64>, tuples: Option<&Path>, expect_flat: bool) -> Result<Outcome, CliError> {
    let pc = &config.probe;
    let tol = tol.unwrap_or(pc.tol);
    let mut inputs: Vec<(String, Group, GroupTuple)> = Vec::new();
    match tuples {
        Some(path) => {
            let (g, file) = load_points(path)?;
            for t in file.tuples.ok_or_else(|| CliError(format!("{}: no `tuples`", path.display())))? {
                inputs.push(("file".into(), g.clone(), GroupTuple(t)));
            }
        }
        None => {
            let g = Group::new(config.verify.group.clone())?;
            let mut rng = stream(seed, 0);
            let m = 2 * pc.genus;
            for _ in 0..pc.count {
                let axis = g.random_algebra(&mut rng, 1.0);
                let frame = g.random_element(&mut rng, 2.0);
                let scales: Vec<f64> = (0..m).map(|_| rand_scale(&mut rng)).collect();
                let t = scales.iter().map(|&s| Ok(g.exp(&g.adjoint(&frame, &axis.scale(s))?)?)).collect::<Result<Vec<_>, CliError>>()?;
                inputs.push(("commuting".into(), g.clone(), GroupTuple(t)));
            }
            for _ in 0..pc.count {
                inputs.push(("random".into(), g.clone(), GroupTuple::random(&g, &mut rng, m, 1.0)));
            }
        }
    }
    let mut rows = Vec::new();
    let mut all_flat = true;
    for (kind, g, t) in inputs {
        if t.len() % 2 != 0 || t.is_empty() {
            return Err(CliError(format!("relator tuples have positive even length, got {}", t.len())));
        }
        let data = MapData::relator(g, t.len() / 2)?;
        let r = flatness_probe(&t, &data, pc.n, tol)?;
        all_flat &= r.pass;
        let mut row = serde_json::to_value(&r)?;
        row.as_object_mut().expect("object").insert("kind".into(), json!(kind));
        rows.push(row);
    }
    let report = json!({"tolerance": tol, "all_flat": all_flat, "probes": rows});
    Ok(Outcome { report, rows, pass: !expect_flat || all_flat })
}

/// Uniform in `[−2, 2)`.
fn rand_scale(rng: &mut fibercirc::rng::SeededRng) -> f64 {
    use rand::Rng;
    rng.random_range(-2.0..2.0)
}
