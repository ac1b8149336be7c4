//! Declarative experiment plans and the runner that turns them into CSV.
//!
//! A plan is a TOML document. Three kinds exist:
//!
//! * `simulation`: run a scenario for every policy, sweep point and seed;
//! * `bounds`: evaluate the analytical delay expressions on a grid;
//! * `table1_slopes`: fit log-log slopes of the analytical delay against `d`.
//!
//! Sweeps form a cartesian product in the order they are listed. Output rows
//! are ordered by (sweep point, policy as listed, seed), so re-running a plan
//! reproduces the CSV body byte for byte.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    average_delay, fit_scaling_exponent, policy_bound_with, write_rows, BoundPolicy, CurveAxis,
    DelayCurve, Metric, ResultRow, ValueKind,
};
use crate::catalog::{make_catalog, placement_distribution_with, CutRounding, PlacementPolicy};
use crate::error::{Error, Result};
use crate::placement::lbnd_delay_given_distance;
use crate::sim::{
    run_seeds, scenario, PolicySpec, ReplacementPolicy, Scenario, ScenarioName, ScenarioOverrides,
    SimSetup,
};
use crate::topology::{distance_model, DistanceMode, DistanceModel, TopologySpec};

/// Policy names accepted in plans.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PolicyName {
    Urp,
    Ppp,
    Tpp,
    TppC,
    Lbnd,
    Lru,
    Lfu,
    Random,
}

impl PolicyName {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyName::Urp => "URP",
            PolicyName::Ppp => "PPP",
            PolicyName::Tpp => "TPP",
            PolicyName::TppC => "TPPC",
            PolicyName::Lbnd => "LBND",
            PolicyName::Lru => "LRU",
            PolicyName::Lfu => "LFU",
            PolicyName::Random => "RANDOM",
        }
    }

    fn bound(self) -> Option<BoundPolicy> {
        match self {
            PolicyName::Urp => Some(BoundPolicy::Urp),
            PolicyName::Ppp => Some(BoundPolicy::Ppp),
            PolicyName::Tpp => Some(BoundPolicy::Tpp),
            PolicyName::TppC => Some(BoundPolicy::TppC),
            PolicyName::Lbnd => Some(BoundPolicy::Lbnd),
            _ => None,
        }
    }

    fn replacement(self) -> Option<ReplacementPolicy> {
        match self {
            PolicyName::Lru => Some(ReplacementPolicy::Lru),
            PolicyName::Lfu => Some(ReplacementPolicy::Lfu),
            PolicyName::Random => Some(ReplacementPolicy::Random),
            _ => None,
        }
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(
            match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
                "URP" => PolicyName::Urp,
                "PPP" => PolicyName::Ppp,
                "TPP" => PolicyName::Tpp,
                "TPPC" => PolicyName::TppC,
                "LBND" => PolicyName::Lbnd,
                "LRU" => PolicyName::Lru,
                "LFU" => PolicyName::Lfu,
                "RANDOM" | "RANDOMREPLACE" => PolicyName::Random,
                _ => return Err(Error::Plan(format!("unknown policy {s:?}"))),
            },
        )
    }
}

impl TryFrom<String> for PolicyName {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<PolicyName> for String {
    fn from(p: PolicyName) -> String {
        p.as_str().to_string()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    #[default]
    Simulation,
    Bounds,
    Table1Slopes,
}

/// One swept parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub param: String,
    pub values: Vec<f64>,
}

/// Parameters of `bounds` plans; every field can also be swept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub content_count: usize,
    pub s: usize,
    pub d: f64,
    pub d_bar: Option<f64>,
}

/// Parameters of `table1_slopes` plans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopesSection {
    pub s: usize,
    /// The grid is `d = 2^k` for `k` in `d_exponents[0]..=d_exponents[1]`.
    pub d_exponents: [u32; 2],
    /// Defaults to `8 * s * d_max`.
    pub content_count: Option<usize>,
}

fn default_alpha() -> f64 {
    1.0
}

fn default_warmup_static() -> f64 {
    0.1
}

fn default_warmup_dynamic() -> f64 {
    0.3
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentPlan {
    pub id: String,
    #[serde(default)]
    pub kind: PlanKind,
    pub output: PathBuf,
    pub scenario: Option<ScenarioName>,
    pub policies: Vec<PolicyName>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub seeds: Option<Vec<u64>>,
    #[serde(default = "default_warmup_static")]
    pub warmup_static: f64,
    #[serde(default = "default_warmup_dynamic")]
    pub warmup_dynamic: f64,
    #[serde(default)]
    pub cut_rounding: CutRounding,
    #[serde(default)]
    pub overrides: ScenarioOverrides,
    #[serde(default)]
    pub sweep: Vec<SweepAxis>,
    pub bounds: Option<BoundsSection>,
    pub slopes: Option<SlopesSection>,
}

const SIM_PARAMS: [&str; 7] = [
    "alpha",
    "s",
    "content_count",
    "total_budget",
    "cut_layer",
    "arrival_prob",
    "slots",
];
const BOUND_PARAMS: [&str; 5] = ["alpha", "s", "content_count", "d", "d_bar"];
const SLOPE_PARAMS: [&str; 1] = ["alpha"];

impl ExperimentPlan {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Plan(e.to_string()))
    }

    /// Reads a plan; relative output and GraphML paths are resolved against
    /// the plan file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut plan = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if plan.output.is_relative() {
            plan.output = base.join(&plan.output);
        }
        if let Some(TopologySpec::Graphml { path: g }) = &mut plan.overrides.topology {
            if g.is_relative() {
                *g = base.join(&*g);
            }
        }
        Ok(plan)
    }

    fn allowed_params(&self) -> &'static [&'static str] {
        match self.kind {
            PlanKind::Simulation => &SIM_PARAMS,
            PlanKind::Bounds => &BOUND_PARAMS,
            PlanKind::Table1Slopes => &SLOPE_PARAMS,
        }
    }

    /// Every combination of sweep values; a plan without sweeps has one
    /// point with no assignments.
    pub fn points(&self) -> Vec<Vec<(String, f64)>> {
        let mut points = vec![Vec::new()];
        for axis in &self.sweep {
            points = points
                .into_iter()
                .flat_map(|p| {
                    axis.values.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push((axis.param.clone(), v));
                        q
                    })
                })
                .collect();
        }
        points
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.seeds
            .clone()
            .or_else(|| self.overrides.seeds.clone())
            .unwrap_or_else(|| (0..10).collect())
    }

    /// Summary file path: `<output stem>.summary.csv` next to the output.
    pub fn summary_path(&self) -> PathBuf {
        sibling(&self.output, "summary.csv")
    }

    pub fn manifest_path(&self) -> PathBuf {
        sibling(&self.output, "manifest.json")
    }
}

fn sibling(output: &Path, suffix: &str) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    output.with_file_name(format!("{stem}.{suffix}"))
}

/// Parameters of one sweep point after assignments are applied.
#[derive(Clone, Debug)]
struct Point {
    alpha: f64,
    overrides: ScenarioOverrides,
    bounds: Option<BoundsSection>,
}

fn as_count(param: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v.is_finite() {
        Ok(v as usize)
    } else {
        Err(Error::Plan(format!(
            "sweep value {v} for {param} must be a non-negative integer"
        )))
    }
}

fn resolve_point(plan: &ExperimentPlan, assignments: &[(String, f64)]) -> Result<Point> {
    let mut p = Point {
        alpha: plan.alpha,
        overrides: plan.overrides.clone(),
        bounds: plan.bounds.clone(),
    };
    p.overrides.seeds = Some(plan.seeds());
    for (param, v) in assignments {
        let v = *v;
        let b = p.bounds.as_mut();
        match (param.as_str(), plan.kind) {
            ("alpha", _) => p.alpha = v,
            ("s", PlanKind::Simulation) => p.overrides.s = Some(as_count(param, v)?),
            ("content_count", PlanKind::Simulation) => {
                p.overrides.content_count = Some(as_count(param, v)?)
            }
            ("total_budget", PlanKind::Simulation) => {
                p.overrides.total_budget = Some(as_count(param, v)?)
            }
            ("cut_layer", PlanKind::Simulation) => {
                p.overrides.cut_layer = Some(as_count(param, v)?)
            }
            ("arrival_prob", PlanKind::Simulation) => p.overrides.arrival_prob = Some(v),
            ("slots", PlanKind::Simulation) => p.overrides.slots = Some(as_count(param, v)?),
            ("s", PlanKind::Bounds) => b.expect("checked").s = as_count(param, v)?,
            ("content_count", PlanKind::Bounds) => {
                b.expect("checked").content_count = as_count(param, v)?
            }
            ("d", PlanKind::Bounds) => b.expect("checked").d = v,
            ("d_bar", PlanKind::Bounds) => b.expect("checked").d_bar = Some(v),
            _ => {
                return Err(Error::Plan(format!(
                    "parameter {param:?} cannot be swept in a {:?} plan",
                    plan.kind
                )))
            }
        }
    }
    Ok(p)
}

/// Checks a plan without running it. An empty list means it is runnable.
pub fn validate(plan: &ExperimentPlan) -> Vec<String> {
    let mut diags = Vec::new();
    if plan.id.trim().is_empty() {
        diags.push("plan id is empty".to_string());
    }
    if plan.policies.is_empty() {
        diags.push("no policies listed".to_string());
    }
    if let Some(parent) = plan.output.parent() {
        if parent.exists() && !parent.is_dir() {
            diags.push(format!(
                "output directory {} is not a directory",
                parent.display()
            ));
        }
    }
    if plan.seeds.as_ref().is_some_and(Vec::is_empty)
        || plan.overrides.seeds.as_ref().is_some_and(Vec::is_empty)
    {
        diags.push("at least one seed is required".to_string());
    }
    if plan.seeds.is_some() && plan.overrides.seeds.is_some() {
        diags.push("seeds are given both at top level and in overrides".to_string());
    }
    for (name, w) in [
        ("warmup_static", plan.warmup_static),
        ("warmup_dynamic", plan.warmup_dynamic),
    ] {
        if !(0.0..1.0).contains(&w) {
            diags.push(format!("{name} must lie in [0, 1), got {w}"));
        }
    }
    let allowed = plan.allowed_params();
    for axis in &plan.sweep {
        if !allowed.contains(&axis.param.as_str()) {
            diags.push(format!(
                "unknown sweep parameter {:?} (allowed: {})",
                axis.param,
                allowed.join(", ")
            ));
        }
        if axis.values.is_empty() {
            diags.push(format!("sweep over {:?} has no values", axis.param));
        }
    }
    if !diags.is_empty() {
        return diags;
    }

    match plan.kind {
        PlanKind::Simulation => validate_simulation(plan, &mut diags),
        PlanKind::Bounds => {
            if plan.bounds.is_none() {
                diags.push("bounds plans need a [bounds] section".to_string());
            }
            if let Some(p) = plan.policies.iter().find(|p| p.bound().is_none()) {
                diags.push(format!("policy {p} has no analytical expression"));
            }
        }
        PlanKind::Table1Slopes => {
            match &plan.slopes {
                None => diags.push("table1_slopes plans need a [slopes] section".to_string()),
                Some(s) => {
                    if s.s == 0 {
                        diags.push("slopes.s must be >= 1".to_string());
                    }
                    let [lo, hi] = s.d_exponents;
                    if hi < lo || hi - lo + 1 < 4 {
                        diags.push(
                            "slopes.d_exponents must span at least 4 grid points".to_string(),
                        );
                    }
                    if hi > 40 {
                        diags.push("slopes.d_exponents upper end is too large".to_string());
                    }
                }
            }
            if let Some(p) = plan.policies.iter().find(|p| p.bound().is_none()) {
                diags.push(format!("policy {p} has no analytical expression"));
            }
        }
    }
    if diags.is_empty() {
        for assignments in plan.points() {
            match resolve_point(plan, &assignments) {
                Ok(p) if !(p.alpha > 0.0) => {
                    diags.push(format!("alpha must be positive, got {}", p.alpha))
                }
                Ok(p) => {
                    if let (PlanKind::Bounds, Some(b)) = (plan.kind, &p.bounds) {
                        if b.s == 0 || b.content_count == 0 || !(b.d >= 1.0) {
                            diags.push(format!(
                                "bounds need s >= 1, content_count >= 1 and d >= 1 ({b:?})"
                            ));
                        }
                        if plan.policies.contains(&PolicyName::TppC)
                            && !b.d_bar.is_some_and(|x| x >= 1.0)
                        {
                            diags.push("TPPC bounds need d_bar >= 1".to_string());
                        }
                    }
                }
                Err(e) => diags.push(e.to_string()),
            }
        }
    }
    diags.sort();
    diags.dedup();
    diags
}

fn validate_simulation(plan: &ExperimentPlan, diags: &mut Vec<String>) {
    let Some(name) = plan.scenario else {
        diags.push("simulation plans need a scenario".to_string());
        return;
    };
    let mut seen = HashMap::new();
    for assignments in plan.points() {
        let point = match resolve_point(plan, &assignments) {
            Ok(p) => p,
            Err(e) => {
                diags.push(e.to_string());
                continue;
            }
        };
        let o = &point.overrides;
        if let Some(a) = o.arrival_prob {
            if !(a > 0.0 && a <= 1.0) {
                diags.push(format!("arrival probability must lie in (0, 1], got {a}"));
            }
        }
        if let Some(slots) = o.slots {
            let warm =
                (plan.warmup_static.max(plan.warmup_dynamic) * slots as f64).round() as usize;
            if warm >= slots || slots == 0 {
                diags.push(format!(
                    "{slots} slots leave nothing to measure after warmup"
                ));
            }
        }
        if let (Some(TopologySpec::RegularTree { h, .. }), Some(c)) = (&o.topology, o.cut_layer) {
            if c > *h {
                diags.push(format!("cut layer exceeds tree height ({c} > {h})"));
                continue;
            }
        }
        if name == ScenarioName::III && o.topology.is_none() && o.cut_layer.is_some_and(|c| c > 15)
        {
            diags.push(format!(
                "cut layer exceeds tree height ({} > 15)",
                o.cut_layer.unwrap_or(0)
            ));
            continue;
        }
        if let Some(TopologySpec::Graphml { path }) = &o.topology {
            if !path.exists() {
                diags.push(format!("missing GraphML file {}", path.display()));
                continue;
            }
        }
        let key = format!("{:?}", o);
        if seen.contains_key(&key) {
            continue;
        }
        let outcome = scenario(name, o).map(|_| ()).map_err(|e| match e {
            Error::InfeasibleBudget(msg) => {
                format!("infeasible black-or-white budget: every black node needs at least one slot ({msg})")
            }
            other => other.to_string(),
        });
        if let Err(msg) = &outcome {
            diags.push(msg.clone());
        }
        seen.insert(key, ());
    }
}

/// What a plan run produced.
#[derive(Clone, Debug)]
pub struct PlanOutcome {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<ResultRow>,
    pub output: PathBuf,
    pub summary_path: Option<PathBuf>,
    pub manifest_path: PathBuf,
}

#[derive(Serialize)]
struct Manifest<'a> {
    plan: &'a ExperimentPlan,
    points: Vec<Vec<(String, f64)>>,
    seeds: Vec<u64>,
    rows: usize,
}

/// Validates and executes a plan, writing the results CSV, a per-point
/// summary (simulation plans) and a JSON manifest.
pub fn run_plan(plan: &ExperimentPlan) -> Result<PlanOutcome> {
    let diags = validate(plan);
    if !diags.is_empty() {
        return Err(Error::Plan(diags.join("; ")));
    }
    let (rows, summary) = execute(plan)?;
    if let Some(parent) = plan.output.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    write_rows(&plan.output, &rows)?;
    let summary_path = if plan.kind == PlanKind::Simulation {
        let p = plan.summary_path();
        write_rows(&p, &summary)?;
        Some(p)
    } else {
        None
    };
    let manifest = Manifest {
        plan,
        points: plan.points(),
        seeds: plan.seeds(),
        rows: rows.len(),
    };
    let manifest_path = plan.manifest_path();
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&manifest_path, json).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(PlanOutcome {
        rows,
        summary,
        output: plan.output.clone(),
        summary_path,
        manifest_path,
    })
}

/// Computes the rows of a plan without touching the file system.
pub fn execute(plan: &ExperimentPlan) -> Result<(Vec<ResultRow>, Vec<ResultRow>)> {
    let points: Vec<Point> = plan
        .points()
        .iter()
        .map(|a| resolve_point(plan, a))
        .collect::<Result<_>>()?;
    let per_point: Vec<(Vec<ResultRow>, Vec<ResultRow>)> = match plan.kind {
        PlanKind::Simulation => {
            // points sharing a topology reuse one scenario build
            let mut cache: HashMap<String, Scenario> = HashMap::new();
            let name = plan
                .scenario
                .ok_or_else(|| Error::Plan("simulation plans need a scenario".into()))?;
            let mut scenarios = Vec::with_capacity(points.len());
            for p in &points {
                let key = format!("{:?}", p.overrides);
                if !cache.contains_key(&key) {
                    cache.insert(key.clone(), scenario(name, &p.overrides)?);
                }
                scenarios.push(cache[&key].clone());
            }
            points
                .par_iter()
                .zip(scenarios.par_iter())
                .enumerate()
                .map(|(i, (p, sc))| simulate_point(plan, i, p, sc))
                .collect::<Result<_>>()?
        }
        PlanKind::Bounds => points
            .iter()
            .enumerate()
            .map(|(i, p)| bounds_point(plan, i, p).map(|r| (r, Vec::new())))
            .collect::<Result<_>>()?,
        PlanKind::Table1Slopes => points
            .par_iter()
            .enumerate()
            .map(|(i, p)| slopes_point(plan, i, p).map(|r| (r, Vec::new())))
            .collect::<Result<_>>()?,
    };
    let (rows, summary): (Vec<_>, Vec<_>) = per_point.into_iter().unzip();
    Ok((
        rows.into_iter().flatten().collect(),
        summary.into_iter().flatten().collect(),
    ))
}

fn requester_distances(sc: &Scenario) -> Result<DistanceModel<f64>> {
    match sc.topology.tree_height() {
        Some(h) if sc.name == ScenarioName::III => DistanceModel::from_pmf([(h as u32, 1.0)]),
        _ => distance_model(&sc.topology, DistanceMode::Auto { seed: sc.seeds[0] }),
    }
}

fn simulate_point(
    plan: &ExperimentPlan,
    index: usize,
    p: &Point,
    sc: &Scenario,
) -> Result<(Vec<ResultRow>, Vec<ResultRow>)> {
    let cat = make_catalog(sc.content_count, p.alpha)?;
    let template = ResultRow {
        alpha: p.alpha,
        content_count: sc.content_count,
        s: sc.tppc_s,
        d_bar: Some(sc.d_bar),
        plan: plan.id.clone(),
        point: Some(index),
        scenario: format!("{:?}", sc.name),
        topology: sc.topology_label.clone(),
        n: Some(sc.topology.node_count()),
        cut_layer: sc.cut_layer,
        ..ResultRow::default()
    };
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &policy in &plan.policies {
        if policy == PolicyName::Lbnd {
            let dm = requester_distances(sc)?;
            let value = average_delay(&dm, |d| {
                lbnd_delay_given_distance(&cat, sc.tppc_s, d as usize).unwrap_or(d)
            });
            let row = ResultRow {
                policy: "LBND".into(),
                value,
                kind: ValueKind::LowerBound,
                ..template.clone()
            };
            rows.push(row.clone());
            summary.push(row);
            continue;
        }
        let spec = match (policy.replacement(), policy) {
            (Some(r), _) => PolicySpec::Dynamic(r),
            (None, PolicyName::Urp) => PolicySpec::Static(placement_distribution_with(
                &cat,
                PlacementPolicy::Urp,
                plan.cut_rounding,
            )?),
            (None, PolicyName::Ppp) => PolicySpec::Static(placement_distribution_with(
                &cat,
                PlacementPolicy::Ppp,
                plan.cut_rounding,
            )?),
            (None, PolicyName::Tpp) => PolicySpec::Static(placement_distribution_with(
                &cat,
                PlacementPolicy::Tpp,
                plan.cut_rounding,
            )?),
            (None, PolicyName::TppC) => PolicySpec::Static(placement_distribution_with(
                &cat,
                PlacementPolicy::TppC {
                    s: sc.tppc_s,
                    d_bar: sc.d_bar,
                },
                plan.cut_rounding,
            )?),
            (None, other) => {
                return Err(Error::Plan(format!("policy {other} cannot be simulated")))
            }
        };
        let frac = if spec.is_dynamic() {
            plan.warmup_dynamic
        } else {
            plan.warmup_static
        };
        let setup = SimSetup {
            topology: &sc.topology,
            catalog: &cat,
            caches: &sc.caches,
            arrival_prob: sc.arrival_prob,
            slots: sc.slots,
            warmup_slots: (frac * sc.slots as f64).round() as usize,
            servers: sc.servers.clone(),
            requesters: sc.requesters.clone(),
            insert_on: sc.insert_on,
        };
        let result = run_seeds(&setup, &spec, &sc.seeds)?;
        for (seed, run) in result.seeds.iter().zip(&result.runs) {
            if !(run.mean_delay >= 1.0) {
                return Err(Error::Invariant(format!(
                    "{policy} mean delay {} is below one hop",
                    run.mean_delay
                )));
            }
            let reweighted: f64 = run
                .per_distance
                .values()
                .map(|&(m, k)| m * k as f64)
                .sum::<f64>()
                / run.request_count as f64;
            if (reweighted - run.mean_delay).abs() > 1e-6 {
                return Err(Error::Invariant(format!(
                    "{policy} per-distance means do not add up to the overall mean"
                )));
            }
            rows.push(ResultRow {
                policy: policy.to_string(),
                value: run.mean_delay,
                kind: ValueKind::Simulated,
                seed: Some(*seed),
                slots: Some(sc.slots),
                policy_dynamic: spec.is_dynamic(),
                ci95: Some(run.ci95_halfwidth),
                ..template.clone()
            });
        }
        summary.push(ResultRow {
            policy: policy.to_string(),
            value: result.mean_delay,
            kind: ValueKind::Simulated,
            slots: Some(sc.slots),
            policy_dynamic: spec.is_dynamic(),
            ci95: Some(result.ci95_halfwidth),
            ..template.clone()
        });
    }
    Ok((rows, summary))
}

fn bounds_point(plan: &ExperimentPlan, index: usize, p: &Point) -> Result<Vec<ResultRow>> {
    let b = p
        .bounds
        .as_ref()
        .ok_or_else(|| Error::Plan("bounds plans need a [bounds] section".into()))?;
    let cat = make_catalog(b.content_count, p.alpha)?;
    plan.policies
        .iter()
        .map(|policy| {
            let bound = policy.bound().expect("validated");
            let d_bar = if bound == BoundPolicy::TppC {
                b.d_bar
            } else {
                None
            };
            let report = policy_bound_with(&cat, bound, b.s, b.d, d_bar, plan.cut_rounding)?;
            Ok(ResultRow {
                plan: plan.id.clone(),
                point: Some(index),
                d_bar: b.d_bar,
                ..report.to_row()
            })
        })
        .collect()
}

fn slopes_point(plan: &ExperimentPlan, index: usize, p: &Point) -> Result<Vec<ResultRow>> {
    let sec = plan
        .slopes
        .as_ref()
        .ok_or_else(|| Error::Plan("table1_slopes plans need a [slopes] section".into()))?;
    let [lo, hi] = sec.d_exponents;
    let d_max = 1usize << hi;
    let content_count = sec.content_count.unwrap_or(8 * sec.s * d_max);
    let cat = make_catalog(content_count, p.alpha)?;
    let mut rows = Vec::new();
    for policy in &plan.policies {
        let bound = policy.bound().expect("validated");
        let mut points = Vec::new();
        for k in lo..=hi {
            let d = (1u64 << k) as f64;
            let d_bar = (bound == BoundPolicy::TppC).then_some(d);
            let report = policy_bound_with(&cat, bound, sec.s, d, d_bar, plan.cut_rounding)?;
            points.push((d, report.exact_value));
        }
        let curve = DelayCurve::new(CurveAxis::Distance, points)?;
        let fit = fit_scaling_exponent(&curve)?;
        let template = ResultRow {
            policy: policy.to_string(),
            alpha: p.alpha,
            content_count,
            s: sec.s,
            plan: plan.id.clone(),
            point: Some(index),
            ..ResultRow::default()
        };
        rows.extend(curve.rows(&template, bound.value_kind()));
        rows.push(ResultRow {
            value: fit.slope,
            kind: bound.value_kind(),
            metric: Metric::Slope,
            ..template
        });
    }
    Ok(rows)
}
