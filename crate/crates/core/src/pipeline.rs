//! Run configuration and the file-producing pipeline steps behind the
//! command-line tool: bounds, solve, simulate and report.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::closed_form::{mean_volatility_value, support_constrained_on_grid};
use crate::distribution::{expected_qv, AtomicDistribution};
use crate::error::{Error, Result};
use crate::grid::{SolverConfig, StageGrid, XAxis};
use crate::hjb::{check_concavity, solve_all, PolicyField, SolveOutput, StageSolution, ValueField};
use crate::mc::{
    conditional_density, conditional_density_on, kernel_density, mc_report, simulate_paths, McConfig, McReport, Observation,
};
use crate::normal::norm_pdf;
use crate::payoff::PayoffSpec;

/// Slack allowed above the support-constrained value in the ordering check.
pub const ORDERING_UPPER_SLACK: f64 = 5e-3;
/// Slack allowed below the mean-volatility value (grid error of the solver).
pub const ORDERING_LOWER_SLACK: f64 = 1e-3;
/// Minimum overlap `∫ min(d₁, d₂)` for two conditional densities to count
/// as having overlapping supports.
pub const DENSITY_OVERLAP_MIN: f64 = 0.05;
pub const MIN_SIMULATION_PATHS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PayoffConfig {
    Call { strike: f64 },
    Put { strike: f64 },
    PiecewiseLinear { knots: Vec<[f64; 2]>, left_slope: f64, right_slope: f64 },
}

impl PayoffConfig {
    pub fn build(&self) -> Result<PayoffSpec> {
        match self {
            Self::Call { strike } => Ok(PayoffSpec::call(*strike)),
            Self::Put { strike } => Ok(PayoffSpec::put(*strike)),
            Self::PiecewiseLinear { knots, left_slope, right_slope } => {
                PayoffSpec::piecewise_linear(knots.iter().map(|k| (k[0], k[1])).collect(), *left_slope, *right_slope)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomConfig {
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub x0: f64,
    pub payoff: PayoffConfig,
    pub atoms: Vec<AtomConfig>,
    #[serde(default)]
    pub grid: SolverConfig,
    #[serde(default)]
    pub mc: McConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.distribution()?;
        self.payoff.build()?;
        self.grid.validate()?;
        if !self.x0.is_finite() {
            return Err(Error::Config("x0 must be finite".into()));
        }
        Ok(())
    }

    pub fn distribution(&self) -> Result<AtomicDistribution> {
        let times: Vec<f64> = self.atoms.iter().map(|a| a.t).collect();
        let weights: Vec<f64> = self.atoms.iter().map(|a| a.p).collect();
        AtomicDistribution::new(&times, &weights)
    }

    pub fn payoff_spec(&self) -> Result<PayoffSpec> {
        self.payoff.build()
    }

    pub fn x_axis(&self) -> Result<XAxis> {
        let mu = self.distribution()?;
        Ok(XAxis::new(self.x0, self.grid.dx, self.grid.halfwidth_multiplier * mu.last_time().sqrt()))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    write_file(path, &(text + "\n"))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub x: f64,
    pub payoff: f64,
    pub mean_vol_value: f64,
    pub support_value: f64,
}

/// Payoff, mean-volatility and support-constrained values on the solver x-grid.
pub fn bounds_table(cfg: &RunConfig) -> Result<Vec<BoundsRow>> {
    let mu = cfg.distribution()?;
    let f = cfg.payoff_spec()?;
    let xs = cfg.x_axis()?.nodes();
    let support = support_constrained_on_grid(&f, &mu, &xs)?;
    Ok(xs
        .iter()
        .zip(support)
        .map(|(&x, s)| BoundsRow { x, payoff: f.eval(x), mean_vol_value: mean_volatility_value(&f, &mu, x), support_value: s })
        .collect())
}

/// Writes `bounds.csv`; returns the rows and whether `f ≤ mean_vol ≤ support` held.
pub fn run_bounds(cfg: &RunConfig, out: &Path) -> Result<(Vec<BoundsRow>, bool)> {
    ensure_dir(out)?;
    let rows = bounds_table(cfg)?;
    let mut csv = String::from("x,payoff,mean_vol_value,support_value\n");
    for r in &rows {
        csv.push_str(&format!("{},{},{},{}\n", r.x, r.payoff, r.mean_vol_value, r.support_value));
    }
    write_file(&out.join("bounds.csv"), &csv)?;
    let ok = rows.iter().all(|r| r.payoff <= r.mean_vol_value + 1e-12 && r.mean_vol_value <= r.support_value + 1e-9);
    Ok((rows, ok))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEcho {
    pub stage: usize,
    pub nx: usize,
    pub ny: usize,
    pub steps: usize,
    pub dt: f64,
    pub stencil_width: usize,
    pub saturation_fraction: f64,
    pub concavity_max_second_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsAtX0 {
    pub payoff: f64,
    pub mean_vol_value: f64,
    pub support_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gates {
    pub ordering: bool,
    pub concavity: bool,
    pub cfl: bool,
}

impl Gates {
    pub fn all(&self) -> bool {
        self.ordering && self.concavity && self.cfl
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub version: String,
    pub name: Option<String>,
    pub x0: f64,
    pub atoms: Vec<AtomConfig>,
    pub expected_qv: f64,
    pub v_star: f64,
    pub bounds_at_x0: BoundsAtX0,
    /// Largest violation of `f ≤ mean_vol ≤ w_1 ≤ support` on `|x − x₀| ≤ 2√t_r`.
    pub ordering_max_violation: f64,
    pub ordering_ok: bool,
    pub concavity_max_second_difference: f64,
    pub concavity_ok: bool,
    pub cfl_ok: bool,
    pub saturation_fraction: f64,
    pub grid: SolverConfig,
    pub stages: Vec<StageEcho>,
    pub gates: Gates,
    pub all_ok: bool,
}

/// Checks `f ≤ mean_vol ≤ w_1(0, ·, p) ≤ support + slack` on the nodes with
/// `|x − x₀| ≤ 2 √t_r`; returns the largest violation (≤ 0 when it holds).
pub fn ordering_violation(solved: &SolveOutput, bounds: &[BoundsRow]) -> f64 {
    let slice = solved.value_slice();
    let reach = 2.0 * solved.mu.last_time().sqrt();
    let mut worst = f64::NEG_INFINITY;
    for (b, w) in bounds.iter().zip(&slice) {
        if (b.x - solved.x0).abs() > reach + 1e-9 {
            continue;
        }
        worst = worst
            .max(b.payoff - b.mean_vol_value)
            .max(b.mean_vol_value - w - ORDERING_LOWER_SLACK)
            .max(w - b.support_value - ORDERING_UPPER_SLACK);
    }
    worst
}

pub fn summarize(cfg: &RunConfig, solved: &SolveOutput, bounds: &[BoundsRow]) -> SolveSummary {
    let stages: Vec<StageEcho> = solved
        .stages
        .iter()
        .map(|s| StageEcho {
            stage: s.grid.stage,
            nx: s.grid.nx(),
            ny: s.grid.ny(),
            steps: s.grid.steps,
            dt: s.grid.dt,
            stencil_width: s.grid.width,
            saturation_fraction: s.saturation_fraction,
            concavity_max_second_difference: check_concavity(&s.start).max_second_difference,
        })
        .collect();
    let concavity = stages.iter().map(|s| s.concavity_max_second_difference).fold(f64::NEG_INFINITY, f64::max);
    let concavity_ok = solved.stages.iter().all(|s| check_concavity(&s.start).ok);
    let cfl_ok = solved.stages.iter().all(|s| s.grid.dt <= s.grid.x.dx * s.grid.x.dx * (1.0 + 1e-12));
    let violation = ordering_violation(solved, bounds);
    let centre = &bounds[solved.x_axis.center_index()];
    let gates = Gates { ordering: violation <= 0.0, concavity: concavity_ok, cfl: cfl_ok };
    SolveSummary {
        version: env!("CARGO_PKG_VERSION").into(),
        name: cfg.name.clone(),
        x0: cfg.x0,
        atoms: cfg.atoms.clone(),
        expected_qv: expected_qv(&solved.mu),
        v_star: solved.v_star,
        bounds_at_x0: BoundsAtX0 {
            payoff: centre.payoff,
            mean_vol_value: centre.mean_vol_value,
            support_value: centre.support_value,
        },
        ordering_max_violation: violation,
        ordering_ok: gates.ordering,
        concavity_max_second_difference: concavity,
        concavity_ok,
        cfl_ok,
        saturation_fraction: solved.saturation_fraction(),
        grid: cfg.grid.clone(),
        stages,
        all_ok: gates.all(),
        gates,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub step: String,
    pub wall_time_s: f64,
}

/// Solves, then writes `value_slice.csv`, `summary.json`, `timing.json` and
/// the policy cache `policy.bin`.
pub fn run_solve(cfg: &RunConfig, out: &Path) -> Result<(SolveOutput, SolveSummary)> {
    ensure_dir(out)?;
    let mu = cfg.distribution()?;
    let f = cfg.payoff_spec()?;
    let solved = solve_all(&mu, &f, cfg.x0, &cfg.grid)?;
    let bounds = bounds_table(cfg)?;
    let summary = summarize(cfg, &solved, &bounds);
    write_value_slice(&out.join("value_slice.csv"), &solved)?;
    write_json(&out.join("summary.json"), &summary)?;
    write_json(&out.join("timing.json"), &[Timing { step: "solve".into(), wall_time_s: solved.wall_time_s }])?;
    save_solution(&out.join(POLICY_FILE), cfg, &solved)?;
    Ok((solved, summary))
}

/// `stage, t, x, y_1..y_r, value` along `t = 0`, `y = p`.
pub fn write_value_slice(path: &Path, solved: &SolveOutput) -> Result<()> {
    let r = solved.mu.atoms();
    let mut csv = String::from("stage,t,x");
    for k in 1..=r {
        csv.push_str(&format!(",y_{k}"));
    }
    csv.push_str(",value\n");
    let y: Vec<String> = solved.mu.weights().iter().map(|p| p.to_string()).collect();
    for (x, v) in solved.x_axis.nodes().iter().zip(solved.value_slice()) {
        csv.push_str(&format!("1,0,{x},{},{v}\n", y.join(",")));
    }
    write_file(path, &csv)
}

pub const POLICY_FILE: &str = "policy.bin";
const POLICY_MAGIC: &[u8; 8] = b"ATSPOL01";
const POLICY_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    x0: f64,
    payoff: PayoffConfig,
    atoms: Vec<AtomConfig>,
    grid: SolverConfig,
    v_star: f64,
    /// `(start values, terminal values, policy bytes)` per stage.
    lengths: Vec<(usize, usize, usize)>,
}

fn put_f64s(buf: &mut Vec<u8>, values: &[f64]) {
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Persists stage fields and policies: magic, version, header length, JSON
/// header, then raw little-endian payloads.
pub fn save_solution(path: &Path, cfg: &RunConfig, solved: &SolveOutput) -> Result<()> {
    let header = CacheHeader {
        x0: cfg.x0,
        payoff: cfg.payoff.clone(),
        atoms: cfg.atoms.clone(),
        grid: cfg.grid.clone(),
        v_star: solved.v_star,
        lengths: solved
            .stages
            .iter()
            .map(|s| (s.start.values.len(), s.terminal.values.len(), s.policy.as_ref().map_or(0, |p| p.data.len())))
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Io(e.to_string()))?;
    let file = fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let mut head = Vec::new();
    head.extend_from_slice(POLICY_MAGIC);
    head.extend_from_slice(&POLICY_VERSION.to_le_bytes());
    head.extend_from_slice(&(json.len() as u64).to_le_bytes());
    head.extend_from_slice(&json);
    w.write_all(&head)?;
    for s in &solved.stages {
        let mut buf = Vec::with_capacity(8 * (s.start.values.len() + s.terminal.values.len()));
        put_f64s(&mut buf, &s.start.values);
        put_f64s(&mut buf, &s.terminal.values);
        w.write_all(&buf)?;
        if let Some(p) = &s.policy {
            let bytes: Vec<u8> = p.data.iter().map(|&v| v as u8).collect();
            w.write_all(&bytes)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_f64s(r: &mut impl Read, n: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; 8 * n];
    r.read_exact(&mut bytes)?;
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes"))).collect())
}

/// Loads a cache written by [`save_solution`] and checks that it was produced
/// by the same problem and grid as `cfg`.
pub fn load_solution(path: &Path, cfg: &RunConfig) -> Result<SolveOutput> {
    let file = fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e} (run `solve` first)", path.display())))?;
    let mut r = std::io::BufReader::new(file);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != POLICY_MAGIC {
        return Err(Error::Io(format!("{} is not a policy cache", path.display())));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    if u32::from_le_bytes(word) != POLICY_VERSION {
        return Err(Error::Io(format!("unsupported policy cache version {}", u32::from_le_bytes(word))));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut json)?;
    let header: CacheHeader = serde_json::from_slice(&json).map_err(|e| Error::Io(e.to_string()))?;
    if header.x0 != cfg.x0 || header.payoff != cfg.payoff || header.atoms != cfg.atoms || header.grid != cfg.grid {
        return Err(Error::Config("policy cache was produced by a different configuration; rerun `solve`".into()));
    }
    let mu = cfg.distribution()?;
    let f = cfg.payoff_spec()?;
    let x_axis = cfg.x_axis()?;
    let mut stages = Vec::with_capacity(mu.atoms());
    for (k, &(n_start, n_term, n_pol)) in (1..=mu.atoms()).zip(&header.lengths) {
        let grid = Arc::new(StageGrid::new(k, &mu, x_axis, &cfg.grid)?);
        let start = read_f64s(&mut r, n_start)?;
        let terminal = read_f64s(&mut r, n_term)?;
        if start.len() != grid.nx() * grid.ny() {
            return Err(Error::Io("policy cache does not match the stage grid".into()));
        }
        let policy = if n_pol > 0 {
            let mut bytes = vec![0u8; n_pol];
            r.read_exact(&mut bytes)?;
            Some(PolicyField { grid: grid.clone(), data: bytes.into_iter().map(|b| b as i8).collect() })
        } else {
            None
        };
        stages.push(StageSolution {
            start: ValueField { grid: grid.clone(), time: grid.t_start, values: start },
            terminal: ValueField { grid: grid.clone(), time: grid.t_end, values: terminal },
            policy,
            saturation_fraction: 0.0,
            grid,
        });
    }
    Ok(SolveOutput {
        mu,
        payoff: f,
        x0: cfg.x0,
        config: cfg.grid.clone(),
        x_axis,
        stages,
        v_star: header.v_star,
        wall_time_s: 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityChecks {
    /// Conditional density of `X_{t_1}` on `{τ = t_1}` at `x₀`.
    pub first_atom_density_at_x0: f64,
    /// `N(x₀, t_1)` density at `x₀`.
    pub unconditional_density_at_x0: f64,
    pub below_unconditional: bool,
    /// Overlap of the `X_{t_1}` densities on `{τ = t_1}` and `{τ = t_2}`.
    pub overlap: Option<f64>,
    pub overlap_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutcome {
    pub report: McReport,
    pub density: DensityChecks,
    pub all_ok: bool,
}

/// Runs the Monte Carlo from the cached policy in `out`; writes
/// `density.csv`, `figure_density.csv`, `mc_report.json` and appends to `timing.json`.
pub fn run_simulate(cfg: &RunConfig, out: &Path, paths: Option<usize>, seed: Option<u64>) -> Result<SimulateOutcome> {
    let mut mc = cfg.mc.clone();
    if let Some(n) = paths {
        mc.paths = n;
    }
    if let Some(s) = seed {
        mc.seed = s;
    }
    if mc.paths < MIN_SIMULATION_PATHS {
        return Err(Error::Config(format!("simulate needs at least {MIN_SIMULATION_PATHS} paths, got {}", mc.paths)));
    }
    let solved = load_solution(&out.join(POLICY_FILE), cfg)?;
    let clock = std::time::Instant::now();
    let ensemble = simulate_paths(&solved, &mc)?;
    let report = mc_report(&ensemble, &solved)?;
    let r = solved.mu.atoms();

    let mut csv = String::from("atom_time,bin_left,bin_right,count,density\n");
    for k in 1..=r {
        if let Ok(d) = conditional_density(&ensemble, k, Observation::AtStop, mc.bins) {
            for b in 0..d.counts.len() {
                csv.push_str(&format!("{},{},{},{},{}\n", d.atom_time, d.edges[b], d.edges[b + 1], d.counts[b], d.density[b]));
            }
        }
    }
    write_file(&out.join("density.csv"), &csv)?;

    // X_{t_1} split by the stopping atom, on common bins
    let t1 = solved.mu.time(1);
    let half = 4.0 * t1.sqrt();
    let (lo, hi) = (cfg.x0 - half, cfg.x0 + half);
    let mut fig = String::from("atom_time,bin_left,bin_right,count,density,kernel_density\n");
    let mut figure = Vec::new();
    for k in 1..=r {
        if let Ok(d) = conditional_density_on(&ensemble, k, Observation::AtFirstAtom, mc.bins, lo, hi) {
            let samples: Vec<f64> = ensemble.paths.iter().filter(|p| p.atom_index == k).map(|p| p.x_at[0]).collect();
            let kde = kernel_density(&samples, &d.centers());
            for b in 0..d.counts.len() {
                fig.push_str(&format!("{},{},{},{},{},{}\n", d.atom_time, d.edges[b], d.edges[b + 1], d.counts[b], d.density[b], kde[b]));
            }
            figure.push(d);
        }
    }
    write_file(&out.join("figure_density.csv"), &fig)?;
    let unconditional = norm_pdf(0.0) / t1.sqrt();
    let first = figure.iter().find(|d| d.atom == 1).map_or(f64::NAN, |d| d.at(cfg.x0));
    let overlap = match (figure.iter().find(|d| d.atom == 1), figure.iter().find(|d| d.atom == 2)) {
        (Some(a), Some(b)) => Some(a.overlap(b)),
        _ => None,
    };
    let density = DensityChecks {
        first_atom_density_at_x0: first,
        unconditional_density_at_x0: unconditional,
        below_unconditional: first < unconditional,
        overlap,
        overlap_ok: overlap.is_none_or(|o| o >= DENSITY_OVERLAP_MIN),
    };
    let all_ok = report.masses_ok && report.payoff_ok && report.martingale_ok && report.clamp_ok;
    let outcome = SimulateOutcome { report, density, all_ok };
    write_json(&out.join("mc_report.json"), &outcome)?;
    let mut timing: Vec<Timing> = fs::read_to_string(out.join("timing.json"))
        .ok()
        .and_then(|t| serde_json::from_str(&t).ok())
        .unwrap_or_default();
    timing.retain(|t| t.step != "simulate");
    timing.push(Timing { step: "simulate".into(), wall_time_s: clock.elapsed().as_secs_f64() });
    write_json(&out.join("timing.json"), &timing)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub dir: String,
    pub name: Option<String>,
    pub expected_qv: f64,
    pub v_star: f64,
    pub all_ok: bool,
    pub simulate_ok: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub baseline: String,
    pub other: String,
    /// `v*_other / v*_baseline` at `x₀`.
    pub ratio_at_x0: f64,
    /// `√(E τ_other) / √(E τ_baseline)`.
    pub sqrt_qv_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub runs: Vec<RunEntry>,
    pub comparisons: Vec<Comparison>,
    pub all_ok: bool,
}

/// Collects every `summary.json` in `out` and its immediate subdirectories,
/// orders runs by expected quadratic variation and compares each with the
/// first. Writes `report.json`.
pub fn run_report(out: &Path) -> Result<Report> {
    let mut dirs: Vec<PathBuf> = vec![out.to_path_buf()];
    let mut subdirs: Vec<PathBuf> = fs::read_dir(out)
        .map_err(|e| Error::Io(format!("{}: {e}", out.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    dirs.extend(subdirs);
    let mut runs = Vec::new();
    for dir in dirs {
        let Ok(text) = fs::read_to_string(dir.join("summary.json")) else { continue };
        let summary: SolveSummary = serde_json::from_str(&text).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let simulate_ok = fs::read_to_string(dir.join("mc_report.json"))
            .ok()
            .and_then(|t| serde_json::from_str::<SimulateOutcome>(&t).ok())
            .map(|o| o.all_ok);
        let label = dir.strip_prefix(out).ok().map(|p| p.display().to_string()).filter(|s| !s.is_empty()).unwrap_or_else(|| ".".into());
        runs.push(RunEntry {
            dir: label,
            name: summary.name,
            expected_qv: summary.expected_qv,
            v_star: summary.v_star,
            all_ok: summary.all_ok,
            simulate_ok,
        });
    }
    if runs.is_empty() {
        return Err(Error::Io(format!("no summary.json found under {}", out.display())));
    }
    runs.sort_by(|a, b| a.expected_qv.total_cmp(&b.expected_qv).then(a.dir.cmp(&b.dir)));
    let comparisons = runs
        .iter()
        .skip(1)
        .map(|o| Comparison {
            baseline: runs[0].dir.clone(),
            other: o.dir.clone(),
            ratio_at_x0: o.v_star / runs[0].v_star,
            sqrt_qv_ratio: (o.expected_qv / runs[0].expected_qv).sqrt(),
        })
        .collect();
    let all_ok = runs.iter().all(|r| r.all_ok && r.simulate_ok.unwrap_or(true));
    let report = Report { runs, comparisons, all_ok };
    write_json(&out.join("report.json"), &report)?;
    Ok(report)
}
