//! Experiment configuration, report generation, and the command
//! entry points behind the CLI.
//!
//! Reports are written atomically (temp file in the target directory,
//! then rename) and deterministically: float columns are printed with 17
//! significant digits, reductions run in fixed order, and parallelism
//! never reorders results, so rerunning a config reproduces every output
//! byte for byte regardless of worker count.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::engine::{
    verify_theorem, EngineError, EvaluationGrid, TestSuite, VerifySettings, DEFAULT_GRID_POINTS,
    DEFAULT_PAIR_SAMPLES, DEFAULT_P_MAX, DEFAULT_TREND_TOL,
};
use crate::functions::{axis_ratio, NodeTable, TableError, Target};
use crate::operators::{ClosedFormCoefficients, OperatorError, OperatorFamily, MAX_POINT_P};
use crate::summability::{
    classify_trend, RegularityReport, SequenceSpec, SummabilityError, SummabilityMatrix,
    TrendVerdict,
};

/// Errors from configuration and report generation.
#[derive(Debug, Error)]
pub enum ReportError {
    #[error("config field '{field}': {message}")]
    Config { field: &'static str, message: String },

    #[error("unknown matrix '{0}'; known: c1, identity, doubled-c1")]
    UnknownMatrix(String),

    #[error("unknown sequence '{0}'; known: ones, 1/n, 1+1/n, alternating, constant:<c>, squares:<spike>")]
    UnknownSequence(String),

    #[error("target '{name}' is neither a catalog name nor a readable node table: {detail}")]
    UnknownTarget { name: String, detail: String },

    #[error(transparent)]
    Engine(#[from] EngineError),

    #[error(transparent)]
    Summability(#[from] SummabilityError),

    #[error(transparent)]
    Operator(#[from] OperatorError),

    #[error(transparent)]
    Table(#[from] TableError),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl ReportError {
    /// Coarse classification used for exit codes and error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            ReportError::Config { .. }
            | ReportError::UnknownMatrix(_)
            | ReportError::UnknownSequence(_)
            | ReportError::UnknownTarget { .. } => "config",
            ReportError::Io { .. } => "io",
            _ => "computation",
        }
    }
}

/// A full experiment description. Every field has a default, so partial
/// configs (from file or flags) always resolve.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Summability matrix name: c1, identity, doubled-c1.
    pub matrix: String,
    /// Operator family: bbh (classical) or tn (perturbed, two-variable).
    pub operator: String,
    /// Number of variables.
    pub m: usize,
    /// Perturbation sequence for tn; defaults to squares:2 when omitted.
    pub un: Option<String>,
    /// Target function: f0..f{m+1}, product, or a node-table file path.
    pub f: String,
    /// Largest operator degree swept.
    pub n_max: usize,
    /// Matrix rows at which densities are reported.
    pub j_schedule: Vec<usize>,
    /// Target-error threshold for the exceptional set.
    pub r: f64,
    /// Modulus budget in the quantitative bound; 0 < epsilon < r.
    pub epsilon: f64,
    /// Largest transformed coordinate of the evaluation grid.
    pub p_max: f64,
    /// Grid points per axis.
    pub grid_points: usize,
    /// Seed for the modulus sampler.
    pub seed: u64,
    /// Rayon worker threads.
    pub workers: usize,
    /// Random pairs per modulus estimate.
    pub pair_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            matrix: "c1".to_string(),
            operator: "tn".to_string(),
            m: 2,
            un: None,
            f: "f1".to_string(),
            n_max: 200,
            j_schedule: vec![100, 400, 2500, 10_000],
            r: 0.5,
            epsilon: 0.1,
            p_max: DEFAULT_P_MAX,
            grid_points: DEFAULT_GRID_POINTS,
            seed: 42,
            workers: 1,
            pair_samples: DEFAULT_PAIR_SAMPLES,
        }
    }
}

fn cfg_err(field: &'static str, message: impl Into<String>) -> ReportError {
    ReportError::Config {
        field,
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Validates ranges and couplings. Name resolution (matrix, target,
    /// sequence) happens in the builders and reports its own errors.
    pub fn validate(&self) -> Result<(), ReportError> {
        if self.m < 1 || self.m > 4 {
            return Err(cfg_err("m", "must be between 1 and 4"));
        }
        match self.operator.as_str() {
            "bbh" => {
                if self.un.is_some() {
                    return Err(cfg_err(
                        "un",
                        "perturbation is only meaningful for operator 'tn'",
                    ));
                }
            }
            "tn" => {
                if self.m != 2 {
                    return Err(cfg_err("m", "the perturbed family tn is two-variable"));
                }
            }
            other => {
                return Err(cfg_err(
                    "operator",
                    format!("unknown operator '{other}'; known: bbh, tn"),
                ))
            }
        }
        if self.n_max < 1 || self.n_max > 100_000 {
            return Err(cfg_err("n_max", "must be between 1 and 100000"));
        }
        validate_j_schedule(&self.j_schedule)?;
        if !self.epsilon.is_finite() || !(self.epsilon > 0.0) {
            return Err(cfg_err("epsilon", "must be positive and finite"));
        }
        if !self.r.is_finite() || self.epsilon >= self.r {
            return Err(cfg_err(
                "epsilon",
                format!(
                    "must be strictly below r (epsilon={}, r={})",
                    self.epsilon, self.r
                ),
            ));
        }
        if !(self.p_max > 0.0 && self.p_max < MAX_POINT_P) {
            return Err(cfg_err(
                "p_max",
                format!("must lie in (0, {MAX_POINT_P})"),
            ));
        }
        if self.grid_points < 2 || self.grid_points > 2048 {
            return Err(cfg_err("grid_points", "must be between 2 and 2048"));
        }
        let grid_total = (self.grid_points as f64).powi(self.m as i32);
        if grid_total > 1.7e7 {
            return Err(cfg_err(
                "grid_points",
                "grid_points^m exceeds the supported sweep size (~1.6e7 points)",
            ));
        }
        if self.workers < 1 || self.workers > 512 {
            return Err(cfg_err("workers", "must be between 1 and 512"));
        }
        if self.pair_samples > 100_000_000 {
            return Err(cfg_err("pair_samples", "must be at most 1e8"));
        }
        Ok(())
    }
}

fn validate_j_schedule(j_schedule: &[usize]) -> Result<(), ReportError> {
    if j_schedule.is_empty() {
        return Err(cfg_err("j_schedule", "must not be empty"));
    }
    if j_schedule[0] == 0 || j_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(cfg_err("j_schedule", "must be strictly increasing from 1"));
    }
    if *j_schedule.last().unwrap() > 10_000_000 {
        return Err(cfg_err("j_schedule", "rows beyond 1e7 are not supported"));
    }
    Ok(())
}

/// Resolves a matrix name.
pub fn build_matrix(name: &str) -> Result<SummabilityMatrix, ReportError> {
    match name {
        "c1" => Ok(SummabilityMatrix::cesaro_c1()),
        "identity" => Ok(SummabilityMatrix::identity()),
        "doubled-c1" => Ok(SummabilityMatrix::doubled_c1()),
        other => Err(ReportError::UnknownMatrix(other.to_string())),
    }
}

/// Parses a sequence specification.
pub fn parse_sequence(spec: &str) -> Result<SequenceSpec, ReportError> {
    match spec {
        "ones" => return Ok(SequenceSpec::ones()),
        "1/n" | "one-over-n" => return Ok(SequenceSpec::one_over_n()),
        "1+1/n" | "one-plus-one-over-n" => return Ok(SequenceSpec::one_plus_one_over_n()),
        "alternating" => return Ok(SequenceSpec::alternating()),
        _ => {}
    }
    if let Some(rest) = spec.strip_prefix("constant:") {
        let c: f64 = rest
            .parse()
            .map_err(|_| ReportError::UnknownSequence(spec.to_string()))?;
        if !c.is_finite() {
            return Err(ReportError::UnknownSequence(spec.to_string()));
        }
        return Ok(SequenceSpec::constant(c));
    }
    if let Some(rest) = spec.strip_prefix("squares:") {
        let spike: f64 = rest
            .parse()
            .map_err(|_| ReportError::UnknownSequence(spec.to_string()))?;
        if !spike.is_finite() {
            return Err(ReportError::UnknownSequence(spec.to_string()));
        }
        return Ok(SequenceSpec::square_perturbation(spike)?);
    }
    Err(ReportError::UnknownSequence(spec.to_string()))
}

/// Builds the operator family for a config.
pub fn build_family(cfg: &ExperimentConfig) -> Result<OperatorFamily, ReportError> {
    match cfg.operator.as_str() {
        "bbh" => Ok(OperatorFamily::bbh(cfg.m)),
        "tn" => {
            let spec = cfg.un.clone().unwrap_or_else(|| "squares:2".to_string());
            Ok(OperatorFamily::perturbed(cfg.m, parse_sequence(&spec)?))
        }
        other => Err(cfg_err(
            "operator",
            format!("unknown operator '{other}'; known: bbh, tn"),
        )),
    }
}

/// Resolves the target: a suite name (`f0`..`f{m+1}`), `product` (the
/// product of all coordinate ratios), or a node-table file path.
pub fn build_target(
    cfg: &ExperimentConfig,
    suite: &TestSuite,
) -> Result<(Target, String), ReportError> {
    let name = cfg.f.as_str();
    if let Some(rest) = name.strip_prefix('f') {
        if let Ok(i) = rest.parse::<usize>() {
            if i < suite.len() {
                return Ok((suite.functions()[i].clone(), format!("suite function f{i}")));
            }
            return Err(cfg_err(
                "f",
                format!("suite has functions f0..f{} at m={}", suite.len() - 1, cfg.m),
            ));
        }
    }
    if name == "product" {
        let target = Target::separable_product(vec![axis_ratio(); cfg.m]);
        return Ok((target, "product of coordinate ratios".to_string()));
    }
    let text = fs::read_to_string(name).map_err(|e| ReportError::UnknownTarget {
        name: name.to_string(),
        detail: e.to_string(),
    })?;
    let table = NodeTable::parse(&text)?;
    if table.m() != cfg.m {
        return Err(cfg_err(
            "f",
            format!("table has m={} but the experiment has m={}", table.m(), cfg.m),
        ));
    }
    let desc = format!("node table {} (n={})", name, table.n());
    Ok((table.into_target(), desc))
}

/// Paths of the files a report run wrote.
#[derive(Clone, Debug, Serialize)]
pub struct ReportFiles {
    pub errors_csv: PathBuf,
    pub densities_csv: PathBuf,
    pub summary_json: PathBuf,
}

/// Outcome of a report run.
#[derive(Clone, Debug, Serialize)]
pub struct RunOutcome {
    pub files: ReportFiles,
    pub all_pass: bool,
    pub failed_verdicts: Vec<String>,
    pub headline: String,
}

/// Formats a float with 17 significant digits, enough to reproduce the
/// exact binary value on parse.
fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Atomic write: temp file in the destination directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ReportError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let io_err = |source: std::io::Error| ReportError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|source| ReportError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

/// Runs the quantitative verification for a config and writes the error
/// table, density table, and summary into `out_dir`.
///
/// `errors.csv` has header `n,err_f0,...,err_f{m+1},err_target,bound_2_7`
/// and one row per degree; `densities.csv` has header
/// `j,tail_D,tail_D1,...,tail_D{m+2}` and one row per scheduled matrix
/// row. (`bound_2_7` and the `D` labels are the wire format consumed by
/// downstream tooling; `tail_Di` belongs to test function `f_{i-1}`.)
pub fn cmd_verify(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, ReportError> {
    cfg.validate()?;
    let matrix = build_matrix(&cfg.matrix)?;
    let family = build_family(cfg)?;
    let suite = TestSuite::new(cfg.m);
    let grid = EvaluationGrid::uniform(cfg.m, cfg.p_max, cfg.grid_points)?;
    let (target, target_desc) = build_target(cfg, &suite)?;
    let settings = VerifySettings {
        n_max: cfg.n_max,
        j_schedule: cfg.j_schedule.clone(),
        r: cfg.r,
        epsilon: cfg.epsilon,
        seed: cfg.seed,
        pair_samples: cfg.pair_samples,
        trend_tol: DEFAULT_TREND_TOL,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| cfg_err("workers", e.to_string()))?;
    let report =
        pool.install(|| verify_theorem(&matrix, &family, &target, &suite, &grid, &settings))?;

    // errors.csv
    let mut errors_csv = String::from("n");
    for label in suite.labels() {
        errors_csv.push_str(&format!(",err_{label}"));
    }
    errors_csv.push_str(",err_target,bound_2_7\n");
    for row in &report.rows {
        errors_csv.push_str(&row.n.to_string());
        for e in &row.test_errors {
            errors_csv.push(',');
            errors_csv.push_str(&fmt_float(*e));
        }
        errors_csv.push(',');
        errors_csv.push_str(&fmt_float(row.target_error));
        errors_csv.push(',');
        errors_csv.push_str(&fmt_float(row.bound));
        errors_csv.push('\n');
    }

    // densities.csv
    let mut densities_csv = String::from("j,tail_D");
    for i in 1..=suite.len() {
        densities_csv.push_str(&format!(",tail_D{i}"));
    }
    densities_csv.push('\n');
    for tail in &report.tails {
        densities_csv.push_str(&tail.j.to_string());
        densities_csv.push(',');
        densities_csv.push_str(&fmt_float(tail.target_tail));
        for t in &tail.test_tails {
            densities_csv.push(',');
            densities_csv.push_str(&fmt_float(*t));
        }
        densities_csv.push('\n');
    }

    let summary = json!({
        "schema": "korovkin-verify/1",
        "config": cfg,
        "target": target_desc,
        "outcome": {
            "all_pass": report.verdicts.all_pass(),
            "failed": report.verdicts.failed(),
        },
        "analysis": {
            "operator": report.operator,
            "matrix": report.matrix,
            "sup_norm_target": report.sup_norm_target,
            "delta": report.delta,
            "b": report.bound_inputs.b,
            "threshold": report.sets.threshold,
            "target_set_size": report.sets.target_set.len(),
            "test_set_sizes": report.sets.test_sets.iter().map(|s| s.len()).collect::<Vec<_>>(),
            "target_set": report.sets.target_set,
            "test_sets": report.sets.test_sets,
            "tails": report.tails,
            "verdicts": report.verdicts,
            "trend_tol": DEFAULT_TREND_TOL,
            "notes": report.notes,
        },
    });
    let summary_text = format!("{}\n", serde_json::to_string_pretty(&summary).expect("serializable"));

    ensure_dir(out_dir)?;
    let files = ReportFiles {
        errors_csv: out_dir.join("errors.csv"),
        densities_csv: out_dir.join("densities.csv"),
        summary_json: out_dir.join("summary.json"),
    };
    write_atomic(&files.errors_csv, errors_csv.as_bytes())?;
    write_atomic(&files.densities_csv, densities_csv.as_bytes())?;
    write_atomic(&files.summary_json, summary_text.as_bytes())?;

    let all_pass = report.verdicts.all_pass();
    let failed = report.verdicts.failed();
    let headline = if all_pass {
        format!(
            "verification PASS: target {} under {} with {} (target-set tails {})",
            target_desc,
            report.matrix,
            report.operator,
            report.verdicts.target_tail_trend
        )
    } else {
        format!(
            "verification FAIL: {} (target-set tails {})",
            failed.join(", "),
            report.verdicts.target_tail_trend
        )
    };
    Ok(RunOutcome {
        files,
        all_pass,
        failed_verdicts: failed,
        headline,
    })
}

/// Closed-form sup-norm errors of the perturbed family against the four
/// two-variable test functions, evaluated over the grid's transformed
/// coordinates: `e0 = |u_n - 1|`, `e1 = e2 = p_top |n u_n/(n+1) - 1|`,
/// and `e3 = 2 max_p |(c2 - 1) p^2 + beta p|` with `c2, beta` the
/// closed-form coefficients.
fn closed_form_errors(n: usize, u_n: f64, ps: &[f64]) -> [f64; 4] {
    let nf = n as f64;
    let e0 = (u_n - 1.0).abs();
    let p_top = *ps.last().unwrap();
    let e1 = p_top * (nf * u_n / (nf + 1.0) - 1.0).abs();
    let coeffs = ClosedFormCoefficients::new(n, u_n);
    let mut hmax = f64::NEG_INFINITY;
    let mut hmin = f64::INFINITY;
    for &p in ps {
        let h = (coeffs.quadratic - 1.0) * p * p + coeffs.linear * p;
        if h > hmax {
            hmax = h;
        }
        if h < hmin {
            hmin = h;
        }
    }
    // max over the grid of |h(px) + h(py)| is attained on the diagonal.
    let e3 = (2.0 * hmax).abs().max((2.0 * hmin).abs());
    [e0, e1, e1, e3]
}

/// Reproduces the counterexample to classical convergence: the perturbed
/// family with a square-spiked sequence converges C1-statistically on the
/// whole test suite while every spiked degree keeps a fixed error.
///
/// Works from the closed-form error sequences (no degree truncation), so
/// the density tails at row `j` account for all degrees `n <= j`. The
/// exceedance threshold is `|spike - 1| / 2`: half the spike deviation,
/// so spiked degrees always land in the exceedance sets.
pub fn cmd_demo_counterexample(
    spike: f64,
    n_max: usize,
    j_schedule: &[usize],
    out_dir: &Path,
) -> Result<RunOutcome, ReportError> {
    if !spike.is_finite() || spike < 0.0 {
        return Err(cfg_err("spike", "must be non-negative and finite"));
    }
    if spike == 1.0 {
        return Err(cfg_err(
            "spike",
            "spike 1 leaves the sequence constant; the demonstration needs a divergent perturbation",
        ));
    }
    if !(4..=100_000).contains(&n_max) {
        return Err(cfg_err("n_max", "must be between 4 and 100000"));
    }
    validate_j_schedule(j_schedule)?;

    let u = SequenceSpec::square_perturbation(spike)?;
    let c1 = SummabilityMatrix::cesaro_c1();
    let grid = EvaluationGrid::uniform(2, DEFAULT_P_MAX, DEFAULT_GRID_POINTS)?;
    let depth = n_max.max(*j_schedule.last().unwrap());

    let errors: Vec<[f64; 4]> = (1..=depth)
        .into_par_iter()
        .map(|n| closed_form_errors(n, u.value(n), grid.p_values()))
        .collect();

    let r_demo = (spike - 1.0).abs() / 2.0;
    let mut tails_by_f: Vec<Vec<(usize, f64)>> = Vec::with_capacity(4);
    for i in 0..4 {
        let values: Vec<f64> = errors.iter().map(|e| e[i]).collect();
        let seq = SequenceSpec::from_values(format!("err_f{i}"), values, Some(0.0));
        let mut tails = Vec::with_capacity(j_schedule.len());
        for &j in j_schedule {
            tails.push((j, c1.density_tail(&seq, 0.0, r_demo, j, depth)?));
        }
        tails_by_f.push(tails);
    }
    let trends: Vec<TrendVerdict> = tails_by_f
        .iter()
        .map(|tails| {
            classify_trend(
                &tails.iter().map(|&(_, t)| t).collect::<Vec<_>>(),
                DEFAULT_TREND_TOL,
            )
        })
        .collect();

    let spike_indices: Vec<usize> = (1..=n_max)
        .filter(|&n| errors[n - 1][0] >= r_demo)
        .collect();
    let spike_count = spike_indices.len();
    // Classical convergence fails when spikes keep recurring: check for
    // one in the upper half of the swept range (there always is one for
    // n_max >= 4, since floor(sqrt(n_max))^2 > n_max/2).
    let classical_fails =
        spike_count > 0 && spike_indices.iter().any(|&n| 2 * n > n_max);

    // The witness set for err_f0 is exactly the spiked degrees, so its
    // trend is the demonstration's claim. The other exceedance sets may
    // pick up finitely many extra small degrees (where the operator's
    // own deficiency crosses the threshold) and can land just above the
    // trend tolerance at a fixed schedule while still being density
    // zero; they are reported but only stagnation disqualifies.
    let a_stat = trends[0];
    let secondary_stagnant = trends[1..].contains(&TrendVerdict::Stagnant);
    let classical = if classical_fails { "FAILS" } else { "UNRESOLVED" };
    let headline = format!(
        "A-statistical convergence: {a_stat}; classical convergence: {classical}"
    );
    let all_pass = a_stat == TrendVerdict::Decaying && !secondary_stagnant && classical_fails;

    // errors.csv: the four closed-form error sequences over the swept range.
    let mut errors_csv = String::from("n,err_f0,err_f1,err_f2,err_f3\n");
    for n in 1..=n_max {
        errors_csv.push_str(&n.to_string());
        for value in errors[n - 1] {
            errors_csv.push(',');
            errors_csv.push_str(&fmt_float(value));
        }
        errors_csv.push('\n');
    }

    // densities.csv: exceedance-set tails per test function.
    let mut densities_csv = String::from("j,tail_D1,tail_D2,tail_D3,tail_D4\n");
    for (row, &j) in j_schedule.iter().enumerate() {
        densities_csv.push_str(&j.to_string());
        for tails in &tails_by_f {
            densities_csv.push(',');
            densities_csv.push_str(&fmt_float(tails[row].1));
        }
        densities_csv.push('\n');
    }

    let final_tails: Vec<f64> = tails_by_f.iter().map(|t| t.last().unwrap().1).collect();
    let summary = json!({
        "schema": "korovkin-demo/1",
        "params": {
            "spike": spike,
            "n_max": n_max,
            "j_schedule": j_schedule,
            "grid_p_max": grid.p_max(),
            "grid_points_per_axis": grid.points_per_axis(),
        },
        "classical_threshold": r_demo,
        "spike_count": spike_count,
        "spike_indices": spike_indices,
        "witness_trend": a_stat,
        "trends": trends,
        "final_tails": final_tails,
        "tails": tails_by_f,
        "headline": headline,
        "notes": [
            "error sequences are closed forms of the perturbed family, untruncated up to the last scheduled row",
            format!("exceedance threshold is |spike-1|/2 = {r_demo}"),
            "every spiked degree keeps err_f0 = |spike-1|, so no degree cutoff ever ends the classical divergence",
            "the verdict keys on the err_f0 witness set (exactly the spiked degrees); the other sets may carry finitely many extra small degrees and are reported informatively, with stagnation disqualifying",
        ],
    });
    let summary_text = format!("{}\n", serde_json::to_string_pretty(&summary).expect("serializable"));

    ensure_dir(out_dir)?;
    let files = ReportFiles {
        errors_csv: out_dir.join("errors.csv"),
        densities_csv: out_dir.join("densities.csv"),
        summary_json: out_dir.join("summary.json"),
    };
    write_atomic(&files.errors_csv, errors_csv.as_bytes())?;
    write_atomic(&files.densities_csv, densities_csv.as_bytes())?;
    write_atomic(&files.summary_json, summary_text.as_bytes())?;

    let mut failed_verdicts = Vec::new();
    if a_stat != TrendVerdict::Decaying {
        failed_verdicts.push("witness_tail_decay".to_string());
    }
    if secondary_stagnant {
        failed_verdicts.push("secondary_stagnation".to_string());
    }
    if !classical_fails {
        failed_verdicts.push("classical_divergence".to_string());
    }
    Ok(RunOutcome {
        files,
        all_pass,
        failed_verdicts,
        headline,
    })
}

/// A-transform table of one sequence under one matrix.
#[derive(Clone, Debug, Serialize)]
pub struct TransformReport {
    pub matrix: String,
    pub sequence: String,
    pub rows: Vec<(usize, f64)>,
}

impl TransformReport {
    /// CSV-style rendering, deterministic like the file reports.
    pub fn to_table(&self) -> String {
        let mut out = String::from("j,transform\n");
        for &(j, value) in &self.rows {
            out.push_str(&format!("{j},{}\n", fmt_float(value)));
        }
        out
    }
}

/// Computes `(Ax)_j` for each scheduled row. Rows are probed to their own
/// index, which covers the full support of the built-in matrices.
pub fn cmd_transform(
    matrix_name: &str,
    sequence_spec: &str,
    j_schedule: &[usize],
) -> Result<TransformReport, ReportError> {
    validate_j_schedule(j_schedule)?;
    let matrix = build_matrix(matrix_name)?;
    let x = parse_sequence(sequence_spec)?;
    let mut rows = Vec::with_capacity(j_schedule.len());
    for &j in j_schedule {
        rows.push((j, matrix.a_transform(&x, j, j)?));
    }
    Ok(TransformReport {
        matrix: matrix.name().to_string(),
        sequence: x.name().to_string(),
        rows,
    })
}

/// Result of a regularity run: the structured report plus a rendered
/// table, and the JSON path when one was written.
#[derive(Debug)]
pub struct RegularityRun {
    pub report: RegularityReport,
    pub table: String,
    pub json_path: Option<PathBuf>,
}

/// Runs the regularity diagnostics for a named matrix and renders them.
/// When `out_dir` is given, also writes `regularity.json` there.
pub fn cmd_regularity(
    matrix_name: &str,
    j_schedule: &[usize],
    out_dir: Option<&Path>,
) -> Result<RegularityRun, ReportError> {
    validate_j_schedule(j_schedule)?;
    let matrix = build_matrix(matrix_name)?;
    let depth = *j_schedule.last().unwrap();
    let report = matrix.check_regularity(j_schedule, depth, DEFAULT_TREND_TOL)?;

    let mut table = format!("matrix: {}\ntol: {}\n\n", report.matrix, report.tol);
    table.push_str("j,row_sum_deviation,max_entry\n");
    for row in &report.rows {
        table.push_str(&format!(
            "{},{},{}\n",
            row.j,
            fmt_float(row.row_sum_deviation),
            fmt_float(row.max_entry)
        ));
    }
    table.push('\n');
    for col in &report.columns {
        table.push_str(&format!("column n={}:", col.column));
        for &(j, a) in &col.entries {
            table.push_str(&format!(" a[{j}]={}", fmt_float(a)));
        }
        table.push('\n');
    }
    table.push_str(&format!(
        "\nrow sums -> 1: {}\ncolumns -> 0: {}\nmax entry -> 0: {}\n",
        verdict_word(report.row_sums_ok),
        verdict_word(report.columns_ok),
        verdict_word(report.max_entry_ok)
    ));

    let json_path = match out_dir {
        Some(dir) => {
            ensure_dir(dir)?;
            let path = dir.join("regularity.json");
            let doc = json!({
                "schema": "korovkin-regularity/1",
                "report": report,
            });
            let text = format!("{}\n", serde_json::to_string_pretty(&doc).expect("serializable"));
            write_atomic(&path, text.as_bytes())?;
            Some(path)
        }
        None => None,
    };

    Ok(RegularityRun {
        report,
        table,
        json_path,
    })
}

fn verdict_word(ok: bool) -> &'static str {
    if ok {
        "OK"
    } else {
        "FAIL"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_validates() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn config_field_errors_name_the_field() {
        let cfg = ExperimentConfig {
            epsilon: 0.6, // >= r
            ..Default::default()
        };
        match cfg.validate().unwrap_err() {
            ReportError::Config { field, .. } => assert_eq!(field, "epsilon"),
            other => panic!("unexpected error {other:?}"),
        }
        let cfg = ExperimentConfig {
            operator: "bbh".into(),
            un: Some("squares:2".into()),
            ..Default::default()
        };
        match cfg.validate().unwrap_err() {
            ReportError::Config { field, .. } => assert_eq!(field, "un"),
            other => panic!("unexpected error {other:?}"),
        }
        let cfg = ExperimentConfig {
            j_schedule: vec![100, 100],
            ..Default::default()
        };
        match cfg.validate().unwrap_err() {
            ReportError::Config { field, .. } => assert_eq!(field, "j_schedule"),
            other => panic!("unexpected error {other:?}"),
        }
        let cfg = ExperimentConfig {
            p_max: 0.9999,
            ..Default::default()
        };
        match cfg.validate().unwrap_err() {
            ReportError::Config { field, .. } => assert_eq!(field, "p_max"),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sequence_catalog_parses() {
        assert_eq!(parse_sequence("ones").unwrap().value(5), 1.0);
        assert_eq!(parse_sequence("1/n").unwrap().value(4), 0.25);
        assert_eq!(parse_sequence("1+1/n").unwrap().value(4), 1.25);
        assert_eq!(parse_sequence("alternating").unwrap().value(3), -1.0);
        assert_eq!(parse_sequence("constant:2.5").unwrap().value(9), 2.5);
        let squares = parse_sequence("squares:3").unwrap();
        assert_eq!(squares.value(9), 3.0);
        assert_eq!(squares.value(10), 1.0);
        assert!(matches!(
            parse_sequence("fibonacci"),
            Err(ReportError::UnknownSequence(_))
        ));
        assert!(matches!(
            parse_sequence("squares:abc"),
            Err(ReportError::UnknownSequence(_))
        ));
        assert!(matches!(
            parse_sequence("squares:-1"),
            Err(ReportError::Summability(SummabilityError::NegativeSpike { .. }))
        ));
    }

    #[test]
    fn closed_form_errors_hand_values() {
        let grid = EvaluationGrid::uniform(2, DEFAULT_P_MAX, DEFAULT_GRID_POINTS).unwrap();
        // n = 1, u = 1: e0 = 0, e1 = 0.99 * 0.5, e3 attained at p_max:
        // h(0.99) = -0.9801 + 0.25 * 0.99 = -0.7326, so e3 = 1.4652.
        let e = closed_form_errors(1, 1.0, grid.p_values());
        assert_eq!(e[0], 0.0);
        assert!((e[1] - 0.495).abs() <= 1e-15);
        assert_eq!(e[1], e[2]);
        assert!((e[3] - 1.4652).abs() <= 1e-12);
        // Spiked degree: e0 = |2 - 1| = 1 exactly.
        let e = closed_form_errors(4, 2.0, grid.p_values());
        assert_eq!(e[0], 1.0);
    }

    #[test]
    fn fmt_float_has_17_significant_digits() {
        assert_eq!(fmt_float(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
        let v = 0.123_456_789_012_345_68;
        let parsed: f64 = fmt_float(v).parse().unwrap();
        assert_eq!(parsed.to_bits(), v.to_bits());
    }
}
