//! JSON-configured experiment runs behind the `kc` binary.
//!
//! A run executes one [`Mode`] for every configured seed and writes its
//! artifacts into `output_dir`. Result JSON files depend only on the config
//! and seed; wall times go to `summary.csv` and `metadata.json`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::model::{DiscreteDistribution, Point};
use crate::pipeline::{approximate_system, ApproximateSystem, GenerativeSystem, StageSpec};
use crate::risk::{error_bound, evaluate_backward, AffineNormCost, DiscreteSystem, MappingSpec, ValueTable};
use crate::scenario::{expanded_bounding_box, reference_mixture, sample_gaussian_mixture, sobol_lattice, GaussianComponent};
use crate::selection::{run_subgradient, ParticleGroup, SelectionInstance, SolverConfig, Termination};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Generate,
    Select,
    Pipeline,
    Evaluate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    /// `None` uses [`reference_mixture`].
    pub components: Option<Vec<GaussianComponent>>,
    pub samples_per_component: usize,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig { components: None, samples_per_component: 100 }
    }
}

impl MixtureConfig {
    pub fn components(&self) -> Vec<GaussianComponent> {
        self.components.clone().unwrap_or_else(reference_mixture)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CandidateConfig {
    /// `K`.
    pub count: usize,
    /// Explicit Sobol box; defaults to the particle bounding box widened by `margin`.
    #[serde(rename = "box")]
    pub bounds: Option<BoxConfig>,
    pub margin: f64,
}

impl Default for CandidateConfig {
    fn default() -> Self {
        CandidateConfig { count: 256, bounds: None, margin: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub x0: Vec<f64>,
    pub system: GenerativeSystem,
    pub stages: Vec<StageSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluateConfig {
    /// One cost per stage `0..=T`, or a single cost used at every stage.
    pub costs: Vec<AffineNormCost>,
    #[serde(default)]
    pub mapping: MappingSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Option<Mode>,
    pub mixture: MixtureConfig,
    pub candidates: CandidateConfig,
    /// `M`; required by `select`.
    pub budget: Option<usize>,
    /// `p`.
    pub order: f64,
    pub solver: SolverConfig,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub emit_plot_data: bool,
    pub pipeline: Option<PipelineConfig>,
    pub evaluate: Option<EvaluateConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: None,
            mixture: MixtureConfig::default(),
            candidates: CandidateConfig::default(),
            budget: None,
            order: 1.0,
            solver: SolverConfig::default(),
            seeds: vec![0],
            output_dir: PathBuf::from("out"),
            emit_plot_data: false,
            pipeline: None,
            evaluate: None,
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::ConfigValidation(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    /// Parses a JSON document and applies `path=value` overrides.
    ///
    /// Paths are dotted JSON paths (`solver.alpha0`, `seeds.0`). Values are read
    /// as JSON and fall back to plain strings.
    pub fn from_json(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut doc: Value = serde_json::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        for (path, raw) in overrides {
            let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.clone()));
            set_path(&mut doc, path, value)?;
        }
        serde_json::from_value(doc).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, overrides)
    }

    pub fn mode(&self) -> Result<Mode> {
        self.mode.ok_or_else(|| invalid("mode", "missing"))
    }

    /// Mode-specific checks; run before any computation.
    pub fn validate(&self) -> Result<()> {
        let mode = self.mode()?;
        if self.seeds.is_empty() {
            return Err(invalid("seeds", "at least one seed is required"));
        }
        if !(self.order >= 1.0 && self.order.is_finite()) {
            return Err(invalid("order", "must be a finite number >= 1"));
        }
        match mode {
            Mode::Generate | Mode::Select => self.validate_mixture()?,
            Mode::Pipeline | Mode::Evaluate => self.validate_pipeline()?,
        }
        if mode == Mode::Select {
            let budget = self.budget.ok_or_else(|| invalid("budget", "missing (required for mode select)"))?;
            if budget == 0 || budget > self.candidates.count {
                return Err(invalid("budget", format!("must lie in 1..={}", self.candidates.count)));
            }
            self.solver.validate(self.candidates.count).map_err(|e| invalid("solver", e))?;
        }
        if mode == Mode::Evaluate {
            let eval = self.evaluate.as_ref().ok_or_else(|| invalid("evaluate", "missing (required for mode evaluate)"))?;
            let horizon = self.pipeline.as_ref().map_or(0, |p| p.stages.len());
            if eval.costs.len() != 1 && eval.costs.len() != horizon + 1 {
                return Err(invalid("evaluate.costs", format!("expected 1 or {} entries", horizon + 1)));
            }
            eval.mapping.build().map_err(|e| invalid("evaluate.mapping", e))?;
        }
        Ok(())
    }

    fn validate_mixture(&self) -> Result<()> {
        let comps = self.mixture.components();
        let Some(first) = comps.first() else {
            return Err(invalid("mixture.components", "empty"));
        };
        let dim = first.dim();
        if comps.iter().any(|c| c.dim() != dim) {
            return Err(invalid("mixture.components", "components differ in dimension"));
        }
        if self.mixture.samples_per_component == 0 {
            return Err(invalid("mixture.samples_per_component", "must be at least 1"));
        }
        if self.candidates.count == 0 {
            return Err(invalid("candidates.count", "must be at least 1"));
        }
        if let Some(b) = &self.candidates.bounds {
            if b.low.len() != dim || b.high.len() != dim {
                return Err(invalid("candidates.box", format!("expected {dim} coordinates")));
            }
            if b.low.iter().zip(&b.high).any(|(l, h)| l >= h) {
                return Err(invalid("candidates.box", "low must be below high in every coordinate"));
            }
        }
        if !(self.candidates.margin >= 0.0) {
            return Err(invalid("candidates.margin", "must be nonnegative"));
        }
        Ok(())
    }

    fn validate_pipeline(&self) -> Result<()> {
        let p = self.pipeline.as_ref().ok_or_else(|| invalid("pipeline", "missing (required for this mode)"))?;
        if p.x0.is_empty() {
            return Err(invalid("pipeline.x0", "empty"));
        }
        if p.stages.is_empty() {
            return Err(invalid("pipeline.stages", "empty"));
        }
        p.system.validate(p.x0.len()).map_err(|e| invalid("pipeline.system", e))?;
        for (t, s) in p.stages.iter().enumerate() {
            if s.budget == 0 || s.budget > s.candidate_count || s.samples_per_source == 0 || !(s.order >= 1.0) {
                return Err(invalid(&format!("pipeline.stages.{t}"), "need 1 <= budget <= candidate_count, samples >= 1, order >= 1"));
            }
            self.solver.validate(s.candidate_count).map_err(|e| invalid("solver", e))?;
        }
        Ok(())
    }
}

fn set_path(doc: &mut Value, path: &str, value: Value) -> Result<()> {
    let mut node = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::ConfigParse(format!("bad override path `{path}`")));
        }
        let last = i + 1 == parts.len();
        if node.is_null() {
            *node = Value::Object(Default::default());
        }
        node = match node {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.entry(part.to_string()).or_insert(Value::Null)
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| Error::ConfigParse(format!("`{path}`: `{part}` is not an index")))?;
                let slot = items.get_mut(idx).ok_or_else(|| Error::ConfigParse(format!("`{path}`: index {idx} out of range")))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(Error::ConfigParse(format!("`{path}`: `{part}` is not inside an object"))),
        };
    }
    Ok(())
}

/// Exit status for an error: 2 for config problems, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ConfigParse(_) | Error::ConfigValidation(_) => 2,
        _ => 1,
    }
}

/// Per-seed outcome of a `select` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectReport {
    pub seed: u64,
    pub dim_beta: usize,
    pub dim_gamma: usize,
    pub budget: usize,
    pub order: f64,
    pub distance: f64,
    pub objective: f64,
    pub best_dual: f64,
    pub gap: f64,
    pub iterations: usize,
    pub termination: Termination,
    pub selected: Vec<usize>,
    pub selected_points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateReport {
    pub seed: u64,
    pub horizon: usize,
    pub mapping: MappingSpec,
    /// `Σ_x λ̃_t(x) ṽ_t(x)` per stage.
    pub expected_values: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Discrete Lipschitz constant of `ṽ_{t+1}`.
    pub lipschitz: Vec<f64>,
    /// Error bound per stage with unit contraction constants; only reported
    /// for the expectation mapping with all stage orders equal to 1.
    pub bound: Option<Vec<f64>>,
}

/// What a run produced, for callers that want more than the files.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub select: Vec<SelectReport>,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        Ok(Writer { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        self.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut body = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
        body.push('\n');
        self.text(name, &body)
    }
}

fn coord_header(prefix: &str, dim: usize) -> String {
    let mut h = prefix.to_string();
    for d in 1..=dim {
        if !h.is_empty() {
            h.push(',');
        }
        let _ = write!(h, "x{d}");
    }
    h
}

fn push_coords(line: &mut String, p: &Point) {
    for (i, c) in p.coords().iter().enumerate() {
        if i > 0 || !line.is_empty() {
            line.push(',');
        }
        let _ = write!(line, "{c}");
    }
}

/// CSV with one row per point.
pub fn points_csv(points: &[Point]) -> String {
    let dim = points.first().map_or(0, Point::dim);
    let mut out = coord_header("", dim);
    out.push('\n');
    for p in points {
        let mut line = String::new();
        push_coords(&mut line, p);
        out.push_str(&line);
        out.push('\n');
    }
    out
}

fn candidate_box(cfg: &ExperimentConfig, pooled: &[Point]) -> Result<(Point, Point)> {
    match &cfg.candidates.bounds {
        Some(b) => Ok((Point::new(b.low.clone())?, Point::new(b.high.clone())?)),
        None => expanded_bounding_box(pooled, cfg.candidates.margin).ok_or(Error::EmptyCloud(0)),
    }
}

/// Runs the configured mode for every seed and writes the artifacts.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let mut w = Writer::new(&cfg.output_dir)?;
    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut timings = Vec::new();
    let mut select = Vec::new();
    let mode = cfg.mode()?;
    let mut summary = match mode {
        Mode::Generate => String::from("seed,component,samples,wall_time_s\n"),
        Mode::Select => String::from("seed,dim_beta,dim_gamma,wall_time_s,W,gap\n"),
        Mode::Pipeline | Mode::Evaluate => String::from("seed,stage,sources,dim_beta,dim_gamma,selected,wall_time_s,W,gap\n"),
    };
    for &seed in &cfg.seeds {
        let clock = Instant::now();
        match mode {
            Mode::Generate => run_generate(cfg, seed, &mut w, &mut summary, clock)?,
            Mode::Select => select.push(run_select(cfg, seed, &mut w, &mut summary, clock)?),
            Mode::Pipeline | Mode::Evaluate => {
                let sys = run_pipeline(cfg, seed, &mut w, &mut summary, clock)?;
                if mode == Mode::Evaluate {
                    run_evaluate(cfg, seed, &sys, &mut w)?;
                }
            }
        }
        timings.push(serde_json::json!({ "seed": seed, "wall_time_s": clock.elapsed().as_secs_f64() }));
    }
    w.text("summary.csv", &summary)?;
    w.json(
        "metadata.json",
        &serde_json::json!({
            "started_unix": started,
            "threads": rayon::current_num_threads(),
            "version": env!("CARGO_PKG_VERSION"),
            "runs": timings,
        }),
    )?;
    Ok(RunOutcome { files: w.files, select })
}

fn run_generate(cfg: &ExperimentConfig, seed: u64, w: &mut Writer, summary: &mut String, clock: Instant) -> Result<()> {
    let n = cfg.mixture.samples_per_component;
    let clouds = sample_gaussian_mixture(&cfg.mixture.components(), n, seed)?;
    let mut dists = Vec::with_capacity(clouds.len());
    for (c, cloud) in clouds.iter().enumerate() {
        w.text(&format!("cloud_seed{seed}_c{c}.csv"), &points_csv(cloud))?;
        dists.push(DiscreteDistribution::uniform(cloud.clone())?);
    }
    w.json(&format!("clouds_seed{seed}.json"), &dists)?;
    let pooled: Vec<Point> = clouds.iter().flatten().cloned().collect();
    let (lo, hi) = candidate_box(cfg, &pooled)?;
    let lattice = sobol_lattice(lo.dim(), cfg.candidates.count, &lo, &hi)?;
    w.text(&format!("candidates_seed{seed}.csv"), &points_csv(&lattice))?;
    let secs = clock.elapsed().as_secs_f64();
    for c in 0..clouds.len() {
        let _ = writeln!(summary, "{seed},{c},{n},{secs}");
    }
    Ok(())
}

fn run_select(cfg: &ExperimentConfig, seed: u64, w: &mut Writer, summary: &mut String, clock: Instant) -> Result<SelectReport> {
    let budget = cfg.budget.expect("validated");
    let clouds = sample_gaussian_mixture(&cfg.mixture.components(), cfg.mixture.samples_per_component, seed)?;
    let pooled: Vec<Point> = clouds.iter().flatten().cloned().collect();
    let (lo, hi) = candidate_box(cfg, &pooled)?;
    let candidates = sobol_lattice(lo.dim(), cfg.candidates.count, &lo, &hi)?;
    let share = 1.0 / clouds.len() as f64;
    let groups = clouds
        .iter()
        .map(|c| ParticleGroup { weight: share / c.len() as f64, particles: c.clone() })
        .collect();
    let instance = SelectionInstance::new(groups, candidates, budget, cfg.order)?;
    let result = run_subgradient(&instance, &SolverConfig { seed, ..cfg.solver.clone() })?;
    let secs = clock.elapsed().as_secs_f64();

    let selected = result.selected();
    let report = SelectReport {
        seed,
        dim_beta: instance.beta_dim(),
        dim_gamma: instance.num_candidates(),
        budget,
        order: cfg.order,
        distance: result.distance(cfg.order),
        objective: result.objective,
        best_dual: result.best_dual,
        gap: result.gap,
        iterations: result.iterations,
        termination: result.termination,
        selected_points: selected.iter().map(|&k| instance.candidates()[k].clone()).collect(),
        selected,
    };
    w.json(&format!("select_seed{seed}.json"), &report)?;
    w.text(&format!("iterations_seed{seed}.csv"), &result.history_csv())?;

    let mut plan = String::from("i,k,mass\n");
    for (i, &k) in result.assignment.iter().enumerate() {
        let _ = writeln!(plan, "{i},{k},{}", instance.particle_weight(i));
    }
    w.text(&format!("plan_seed{seed}.csv"), &plan)?;

    if cfg.emit_plot_data {
        let dim = lo.dim();
        let mut pts = coord_header("group", dim);
        pts.push('\n');
        for (s, cloud) in clouds.iter().enumerate() {
            for p in cloud {
                let mut line = s.to_string();
                push_coords(&mut line, p);
                pts.push_str(&line);
                pts.push('\n');
            }
        }
        w.text(&format!("points_seed{seed}.csv"), &pts)?;
        let mut cands = coord_header("k", dim);
        cands.push_str(",selected\n");
        for (k, p) in instance.candidates().iter().enumerate() {
            let mut line = k.to_string();
            push_coords(&mut line, p);
            let _ = writeln!(line, ",{}", u8::from(result.gamma[k]));
            cands.push_str(&line);
        }
        w.text(&format!("candidates_seed{seed}.csv"), &cands)?;
        w.text(&format!("selected_seed{seed}.csv"), &points_csv(&report.selected_points))?;
    }

    let _ = writeln!(summary, "{seed},{},{},{secs},{},{}", report.dim_beta, report.dim_gamma, report.distance, report.gap);
    log::info!("seed {seed}: W = {:.5}, gap = {:.5}, {} iterations", report.distance, report.gap, report.iterations);
    Ok(report)
}

fn run_pipeline(cfg: &ExperimentConfig, seed: u64, w: &mut Writer, summary: &mut String, clock: Instant) -> Result<ApproximateSystem> {
    let p = cfg.pipeline.as_ref().expect("validated");
    let x0 = Point::new(p.x0.clone())?;
    let sys = approximate_system(&p.system, x0, &p.stages, &SolverConfig { seed, ..cfg.solver.clone() }, seed)?;
    let secs = clock.elapsed().as_secs_f64();
    for stage in &sys.stages {
        w.json(&format!("pipeline_seed{seed}_stage{}.json", stage.t), stage)?;
        let d = &stage.diagnostics;
        let _ = writeln!(
            summary,
            "{seed},{},{},{},{},{},{secs},{},{}",
            stage.t,
            stage.marginal.len(),
            d.beta_dim,
            d.candidates,
            d.selected,
            stage.delta,
            d.gap
        );
        if cfg.emit_plot_data {
            let mut pts = coord_header("source", stage.marginal.dim());
            pts.push('\n');
            for (s, cloud) in stage.clouds.iter().enumerate() {
                for q in cloud {
                    let mut line = s.to_string();
                    push_coords(&mut line, q);
                    pts.push_str(&line);
                    pts.push('\n');
                }
            }
            w.text(&format!("particles_seed{seed}_stage{}.csv", stage.t), &pts)?;
        }
    }
    w.json(&format!("pipeline_seed{seed}.json"), &sys)?;
    Ok(sys)
}

fn run_evaluate(cfg: &ExperimentConfig, seed: u64, sys: &ApproximateSystem, w: &mut Writer) -> Result<()> {
    let eval = cfg.evaluate.as_ref().expect("validated");
    let sigma = eval.mapping.build()?;
    let costs = &eval.costs;
    let cost = |t: usize, x: &Point| costs[if costs.len() == 1 { 0 } else { t }].eval(x);
    let discrete = DiscreteSystem::from(sys);
    let table: ValueTable = evaluate_backward(&discrete, &cost, sigma.as_ref())?;
    w.text(&format!("values_seed{seed}.csv"), &table.to_csv())?;

    let horizon = sys.horizon();
    let expected_values = (0..=horizon)
        .map(|t| {
            sys.marginal(t)
                .iter()
                .map(|(x, l)| table.value(t, x).map(|v| l * v).ok_or(Error::MissingValue(t)))
                .sum::<Result<f64>>()
        })
        .collect::<Result<Vec<f64>>>()?;
    let lipschitz: Vec<f64> = (0..horizon).map(|t| table.stage(t + 1).lipschitz()).collect();
    let deltas = sys.deltas();
    let unit_orders = sys.stages.iter().all(|s| s.order == 1.0);
    let bound = if eval.mapping == MappingSpec::Expectation && unit_orders {
        let ones = vec![1.0; horizon.saturating_sub(1)];
        Some((0..horizon).map(|t| error_bound(&lipschitz, &ones, &deltas, t)).collect::<Result<Vec<f64>>>()?)
    } else {
        None
    };
    let report = EvaluateReport { seed, horizon, mapping: eval.mapping, expected_values, deltas, lipschitz, bound };
    w.json(&format!("evaluate_seed{seed}.json"), &report)
}
