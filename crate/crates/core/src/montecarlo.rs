//! Monte Carlo experiment on a piecewise-linear growth-curve design.
//!
//! Outcomes are `Y = Z(X)'beta + sigma * e` with `e` standard normal and
//! `Z(X) = (1, X, (X-5)+, (X-10)+, (X-15)+)`, so the conditional mean and every
//! conditional quantile are increasing in `X` on `[2, 20]` and the quantile
//! process is increasing in the quantile index. Each replication fits the
//! configured estimators and measures how much rearrangement, isotonization
//! and their blends reduce the `L^p` error (tables 1 and 2) and shorten
//! simultaneous bands while keeping coverage (table 3).
//!
//! Every replication draws from its own random stream, so reports are
//! bitwise reproducible for a given seed whatever the number of threads.

use crate::bands::{max_t, order_statistic_index, Band, Monotonizer};
use crate::error::{Error, Result};
use crate::estimators::bootstrap::stream_rng;
use crate::estimators::{bootstrap, fit, fit_quantile_process, tau_net, Dataset, EstimatorSpec, Loss, Method};
use crate::grid::{lp_distance, Axis, GriddedFunction, LpIndex};
use crate::rearrange::{rearrange_pi, OrderingSet};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use std::fmt;
use std::io::Write;

pub const GROWTH_CHART_BETA: [f64; 5] = [71.25, 8.13, -2.72, 1.78, -6.43];

/// Relative slack allowed in the per-replication improvement checks.
pub const CHECK_RTOL: f64 = 1e-10;

/// Design and experiment parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub beta: [f64; 5],
    /// Disturbance standard deviation (cm).
    pub sigma: f64,
    /// Sample size; must match `x_design` when that is given.
    pub n: usize,
    /// Fixed regressor values (years). Defaults to `n` equidistant ages on `[2, 20]`.
    pub x_design: Option<Vec<f64>>,
    pub reps: usize,
    pub seed: u64,
    pub estimators: Vec<Method>,
    /// Quantile indices of the process fits (table 2).
    pub taus: Vec<f64>,
    pub alpha: f64,
    #[serde(alias = "bootstrap_B")]
    pub bootstrap_b: usize,
    pub lambda_grid: Vec<f64>,
    /// Number of equidistant evaluation nodes over the design range.
    pub grid: usize,
    /// Also run the true function as if it were an estimate.
    pub include_truth: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            beta: GROWTH_CHART_BETA,
            sigma: 4.0,
            n: 533,
            x_design: None,
            reps: 100,
            seed: 20_080_601,
            estimators: default_estimators(),
            taus: tau_net(0.05, 0.95, 0.05).expect("valid net"),
            alpha: 0.1,
            bootstrap_b: 100,
            lambda_grid: vec![0.5],
            grid: 100,
            include_truth: false,
        }
    }
}

/// Kernel and local linear with a one-year bandwidth, cubic splines on the
/// growth-chart knots, and four sine/cosine pairs with an intercept only.
pub fn default_estimators() -> Vec<Method> {
    let mut m = Method::growth_chart_defaults();
    for e in &mut m {
        if let Method::Fourier { linear_term, .. } = e {
            *linear_term = false;
        }
    }
    m
}

impl McConfig {
    /// Full-size configuration: 1000 replications, 200 bootstrap draws and
    /// the 0.005-step quantile net.
    pub fn full_scale() -> Self {
        Self {
            reps: 1000,
            bootstrap_b: 200,
            taus: tau_net(0.005, 0.995, 0.005).expect("valid net"),
            ..Self::default()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma {} must be nonnegative", self.sigma));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if let Some(x) = &self.x_design {
            if x.len() != self.n {
                return bad(format!("x_design has {} values but n = {}", x.len(), self.n));
            }
            if x.iter().any(|&v| !(2.0..=20.0).contains(&v)) {
                return bad("x_design must lie within [2, 20]".into());
            }
        }
        if self.n < 2 {
            return bad("n must be at least 2".into());
        }
        if self.grid < 2 {
            return bad("grid must have at least 2 nodes".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.bootstrap_b < 2 {
            return bad("bootstrap_b must be at least 2".into());
        }
        if self.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return bad("lambda_grid values must lie in [0, 1]".into());
        }
        if self.taus.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return bad("taus must lie in (0, 1)".into());
        }
        Axis::new(self.taus.clone()).map_err(|e| Error::InvalidConfig(format!("taus: {e}")))?;
        Ok(())
    }

    pub fn design(&self) -> Vec<f64> {
        match &self.x_design {
            Some(x) => x.clone(),
            None => Axis::linspace(2.0, 20.0, self.n)
                .expect("n >= 1")
                .coords()
                .to_vec(),
        }
    }

    pub fn eval_axis(&self) -> Result<Axis<f64>> {
        let x = self.design();
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Axis::linspace(lo, hi, self.grid)
    }

    pub fn monotonizers(&self) -> Vec<Monotonizer> {
        let mut m = vec![Monotonizer::Rearrange, Monotonizer::Isotonize];
        m.extend(self.lambda_grid.iter().map(|&l| Monotonizer::Blend(l)));
        m
    }

    fn candidates(&self) -> Vec<Candidate> {
        let mut c: Vec<Candidate> = self.estimators.iter().cloned().map(Candidate::Fit).collect();
        if self.include_truth {
            c.push(Candidate::Truth);
        }
        c
    }
}

/// `(1, x, 1{x>5}(x-5), 1{x>10}(x-10), 1{x>15}(x-15))`.
pub fn design_vector(x: f64) -> [f64; 5] {
    let hinge = |k: f64| if x > k { x - k } else { 0.0 };
    [1.0, x, hinge(5.0), hinge(10.0), hinge(15.0)]
}

pub fn true_cef(x: f64, beta: &[f64; 5]) -> f64 {
    design_vector(x).iter().zip(beta).map(|(z, b)| z * b).sum()
}

pub fn true_cqf(u: f64, x: f64, beta: &[f64; 5], sigma: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::OutOfRange { what: "u", value: u });
    }
    let z = Normal::standard().inverse_cdf(u);
    Ok(true_cef(x, beta) + sigma * z)
}

/// One simulated sample; the regressor design is fixed across replications.
pub fn simulate_rep(cfg: &McConfig, rep_index: u64) -> Result<Dataset> {
    let x = cfg.design();
    let mut rng = stream_rng(cfg.seed, rep_index);
    let y = x
        .iter()
        .map(|&xi| {
            let e: f64 = StandardNormal.sample(&mut rng);
            true_cef(xi, &cfg.beta) + cfg.sigma * e
        })
        .collect();
    Dataset::new(x, y)
}

#[derive(Debug, Clone, PartialEq)]
enum Candidate {
    Fit(Method),
    Truth,
}

impl Candidate {
    fn name(&self) -> &'static str {
        match self {
            Candidate::Fit(m) => m.name(),
            Candidate::Truth => "truth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Table {
    /// Errors for the conditional mean.
    Cef = 1,
    /// Errors for the conditional quantile process.
    Process = 2,
    /// Coverage and length of simultaneous bands for the conditional mean.
    Bands = 3,
}

impl Table {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Table::Cef),
            2 => Ok(Table::Process),
            3 => Ok(Table::Bands),
            _ => Err(Error::InvalidConfig(format!("no table {n}; expected 1, 2 or 3"))),
        }
    }
}

/// Average original error and monotonized-to-original ratios for one
/// estimator and exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub method: String,
    pub p: String,
    pub original: f64,
    /// `(monotonizer label, average monotonized error / average original error)`.
    pub ratios: Vec<(String, f64)>,
}

/// Coverage and length summary for one estimator and one interval type.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandRow {
    pub method: String,
    /// `O` for the original band, otherwise the monotonizer label.
    pub interval: String,
    pub coverage: f64,
    pub critical: f64,
    pub l1_length: f64,
    /// Average length relative to the original band for p = 1, 2, inf.
    pub length_ratios: [f64; 3],
}

/// A failed per-replication check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub table: u8,
    pub method: String,
    pub rep: usize,
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "table {} {} rep {}: {} ({} > {})",
            self.table, self.method, self.rep, self.check, self.lhs, self.rhs
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct McReport {
    pub reps: usize,
    pub cef: Vec<ErrorRow>,
    pub process: Vec<ErrorRow>,
    pub bands: Vec<BandRow>,
    /// Number of per-replication inequalities checked.
    pub checks: usize,
    pub violations: Vec<Violation>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        1.0
    } else {
        num / den
    }
}

fn within(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + CHECK_RTOL * rhs.abs()
}

struct Checker {
    table: u8,
    checks: usize,
    violations: Vec<Violation>,
}

impl Checker {
    fn new(table: u8) -> Self {
        Self {
            table,
            checks: 0,
            violations: Vec::new(),
        }
    }

    fn le(&mut self, method: &str, rep: usize, check: impl FnOnce() -> String, lhs: f64, rhs: f64) {
        self.checks += 1;
        if !within(lhs, rhs) {
            self.violations.push(Violation {
                table: self.table,
                method: method.to_string(),
                rep,
                check: check(),
                lhs,
                rhs,
            });
        }
    }
}

/// Per-replication errors: `[p]` original and `[monotonizer][p]` monotonized.
struct RepErrors {
    original: [f64; 3],
    monotonized: Vec<[f64; 3]>,
}

fn lp_all(f: &GriddedFunction<f64>, g: &GriddedFunction<f64>) -> Result<[f64; 3]> {
    let ps = LpIndex::standard();
    Ok([
        lp_distance(f, g, ps[0])?,
        lp_distance(f, g, ps[1])?,
        lp_distance(f, g, ps[2])?,
    ])
}

struct Experiment<'a> {
    cfg: &'a McConfig,
    eval: Axis<f64>,
    candidates: Vec<Candidate>,
    monotonizers: Vec<Monotonizer>,
    cef_truth: GriddedFunction<f64>,
    process_truth: Option<GriddedFunction<f64>>,
}

impl<'a> Experiment<'a> {
    fn new(cfg: &'a McConfig, tables: &[Table]) -> Result<Self> {
        cfg.validate()?;
        let eval = cfg.eval_axis()?;
        let cef_truth = GriddedFunction::new(
            vec![eval.clone()],
            eval.coords().iter().map(|&x| true_cef(x, &cfg.beta)).collect(),
        )?;
        let process_truth = if tables.contains(&Table::Process) {
            let mut v = Vec::with_capacity(cfg.taus.len() * eval.len());
            for &u in &cfg.taus {
                for &x in eval.coords() {
                    v.push(true_cqf(u, x, &cfg.beta, cfg.sigma)?);
                }
            }
            Some(GriddedFunction::new(vec![Axis::new(cfg.taus.clone())?, eval.clone()], v)?)
        } else {
            None
        };
        Ok(Self {
            cfg,
            eval,
            candidates: cfg.candidates(),
            monotonizers: cfg.monotonizers(),
            cef_truth,
            process_truth,
        })
    }

    fn spec(&self, method: &Method, loss: Loss) -> Result<EstimatorSpec> {
        EstimatorSpec::new(method.clone(), loss, self.eval.clone())
    }

    fn cef_estimate(&self, c: &Candidate, data: &Dataset) -> Result<GriddedFunction<f64>> {
        match c {
            Candidate::Fit(m) => Ok(fit(data, &self.spec(m, Loss::Mean)?)?.estimate),
            Candidate::Truth => Ok(self.cef_truth.clone()),
        }
    }

    fn errors(
        &self,
        est: &GriddedFunction<f64>,
        truth: &GriddedFunction<f64>,
        orderings: &OrderingSet,
    ) -> Result<RepErrors> {
        let original = lp_all(est, truth)?;
        let monotonized = self
            .monotonizers
            .iter()
            .map(|m| lp_all(&m.apply(est, orderings)?, truth))
            .collect::<Result<Vec<_>>>()?;
        Ok(RepErrors {
            original,
            monotonized,
        })
    }
}

struct ProcessRep {
    errors: RepErrors,
    /// Per-ordering rearrangement errors `[ordering][p]`.
    per_ordering: Vec<[f64; 3]>,
}

struct BandRep {
    estimate: GriddedFunction<f64>,
    stderr: GriddedFunction<f64>,
    max_t: f64,
}

#[derive(Default)]
struct RepOutcome {
    cef: Vec<RepErrors>,
    process: Vec<ProcessRep>,
    bands: Vec<BandRep>,
}

/// Deterministic seed for an auxiliary stream of one replication.
fn derive_seed(seed: u64, rep: u64, slot: u64) -> u64 {
    let mut z = seed
        .wrapping_add(rep.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(slot.wrapping_mul(0xBF58_476D_1CE4_E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_rep(ex: &Experiment, tables: &[Table], rep: usize) -> Result<RepOutcome> {
    let cfg = ex.cfg;
    let data = simulate_rep(cfg, rep as u64)?;
    let one_d = OrderingSet::all(1);
    let two_d = OrderingSet::all(2);
    let mut out = RepOutcome::default();
    for (k, c) in ex.candidates.iter().enumerate() {
        let need_cef = tables.contains(&Table::Cef) || tables.contains(&Table::Bands);
        let cef = if need_cef {
            Some(ex.cef_estimate(c, &data)?)
        } else {
            None
        };
        if tables.contains(&Table::Cef) {
            let est = cef.as_ref().expect("computed");
            out.cef.push(ex.errors(est, &ex.cef_truth, &one_d)?);
        }
        if let Some(truth) = &ex.process_truth {
            let est = match c {
                Candidate::Fit(m) => fit_quantile_process(&data, &ex.spec(m, Loss::Mean)?, &cfg.taus)?,
                Candidate::Truth => truth.clone(),
            };
            let errors = ex.errors(&est, truth, &two_d)?;
            let per_ordering = two_d
                .orderings()
                .iter()
                .map(|pi| lp_all(&rearrange_pi(&est, pi)?, truth))
                .collect::<Result<Vec<_>>>()?;
            out.process.push(ProcessRep {
                errors,
                per_ordering,
            });
        }
        if tables.contains(&Table::Bands) {
            let estimate = cef.expect("computed");
            let stderr = match c {
                Candidate::Fit(m) => {
                    let seed = derive_seed(cfg.seed, rep as u64, k as u64);
                    bootstrap(&data, &ex.spec(m, Loss::Mean)?, cfg.bootstrap_b, seed)?.stderr
                }
                Candidate::Truth => estimate.map(|_| 0.0)?,
            };
            let t = max_t(estimate.values(), ex.cef_truth.values(), stderr.values());
            out.bands.push(BandRep {
                estimate,
                stderr,
                max_t: t,
            });
        }
    }
    Ok(out)
}

fn error_rows(
    ex: &Experiment,
    per_rep: &[&[RepErrors]],
    checker: &mut Checker,
    table: &str,
) -> Vec<ErrorRow> {
    let reps = per_rep.len() as f64;
    let labels: Vec<String> = ex.monotonizers.iter().map(Monotonizer::label).collect();
    let mut rows = Vec::new();
    for (k, c) in ex.candidates.iter().enumerate() {
        for (r, errs) in per_rep.iter().enumerate() {
            let e = &errs[k];
            for (pi, p) in LpIndex::standard().iter().enumerate() {
                for (mi, label) in labels.iter().enumerate() {
                    checker.le(
                        c.name(),
                        r,
                        || format!("{table} {label} error <= original, p={p}"),
                        e.monotonized[mi][pi],
                        e.original[pi],
                    );
                }
            }
        }
        for (pi, p) in LpIndex::standard().iter().enumerate() {
            let orig: f64 = per_rep.iter().map(|e| e[k].original[pi]).sum::<f64>() / reps;
            let ratios = labels
                .iter()
                .enumerate()
                .map(|(mi, label)| {
                    let m: f64 = per_rep.iter().map(|e| e[k].monotonized[mi][pi]).sum::<f64>() / reps;
                    (label.clone(), ratio(m, orig))
                })
                .collect();
            rows.push(ErrorRow {
                method: c.name().to_string(),
                p: p.label(),
                original: orig,
                ratios,
            });
        }
    }
    rows
}

/// Runs the selected tables.
pub fn run_tables(cfg: &McConfig, tables: &[Table]) -> Result<McReport> {
    let ex = Experiment::new(cfg, tables)?;
    let outcomes = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_rep(&ex, tables, rep))
        .collect::<Result<Vec<_>>>()?;

    let mut report = McReport {
        reps: cfg.reps,
        ..McReport::default()
    };

    if tables.contains(&Table::Cef) {
        let mut checker = Checker::new(1);
        let per_rep: Vec<&[RepErrors]> = outcomes.iter().map(|o| o.cef.as_slice()).collect();
        report.cef = error_rows(&ex, &per_rep, &mut checker, "cef");
        report.checks += checker.checks;
        report.violations.extend(checker.violations);
    }

    if tables.contains(&Table::Process) {
        let mut checker = Checker::new(2);
        let errs: Vec<Vec<RepErrors>> = outcomes
            .iter()
            .map(|o| {
                o.process
                    .iter()
                    .map(|p| RepErrors {
                        original: p.errors.original,
                        monotonized: p.errors.monotonized.clone(),
                    })
                    .collect()
            })
            .collect();
        let per_rep: Vec<&[RepErrors]> = errs.iter().map(Vec::as_slice).collect();
        report.process = error_rows(&ex, &per_rep, &mut checker, "process");
        // the average rearrangement is no worse than the mean per-ordering error
        for (r, o) in outcomes.iter().enumerate() {
            for (k, c) in ex.candidates.iter().enumerate() {
                let pr = &o.process[k];
                for (pi, p) in LpIndex::standard().iter().enumerate() {
                    let mean = pr.per_ordering.iter().map(|e| e[pi]).sum::<f64>()
                        / pr.per_ordering.len() as f64;
                    checker.le(
                        c.name(),
                        r,
                        || format!("process average rearrangement <= mean per-ordering error, p={p}"),
                        pr.errors.monotonized[0][pi],
                        mean,
                    );
                    for (oi, e) in pr.per_ordering.iter().enumerate() {
                        checker.le(
                            c.name(),
                            r,
                            || format!("process ordering {oi} rearrangement <= original, p={p}"),
                            e[pi],
                            pr.errors.original[pi],
                        );
                    }
                }
            }
        }
        report.checks += checker.checks;
        report.violations.extend(checker.violations);
    }

    if tables.contains(&Table::Bands) {
        let mut checker = Checker::new(3);
        report.bands = band_rows(&ex, &outcomes, &mut checker)?;
        report.checks += checker.checks;
        report.violations.extend(checker.violations);
    }
    Ok(report)
}

/// Runs all three tables.
pub fn run_experiment(cfg: &McConfig) -> Result<McReport> {
    run_tables(cfg, &[Table::Cef, Table::Process, Table::Bands])
}

/// Runs on a dedicated pool of `threads` workers (all cores when `None`).
pub fn run_tables_with_threads(cfg: &McConfig, tables: &[Table], threads: Option<usize>) -> Result<McReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| run_tables(cfg, tables))
}

struct BandStats {
    covered: usize,
    lengths: [f64; 3],
}

fn band_rows(ex: &Experiment, outcomes: &[RepOutcome], checker: &mut Checker) -> Result<Vec<BandRow>> {
    let cfg = ex.cfg;
    let one_d = OrderingSet::all(1);
    let reps = outcomes.len();
    let mut rows = Vec::new();
    for (k, c) in ex.candidates.iter().enumerate() {
        // critical value so that exactly (1 - alpha) of the original bands cover the truth
        let mut stats: Vec<f64> = outcomes.iter().map(|o| o.bands[k].max_t).collect();
        stats.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let critical = stats[order_statistic_index(1.0 - cfg.alpha, reps)];

        let per_rep = outcomes
            .par_iter()
            .map(|o| {
                let b = &o.bands[k];
                let lower = b.estimate.zip_with(&b.stderr, |f, s| f - critical * s)?;
                let upper = b.estimate.zip_with(&b.stderr, |f, s| f + critical * s)?;
                let original = Band::new(lower, upper)?;
                let mut bands = vec![original.clone()];
                for m in &ex.monotonizers {
                    bands.push(crate::bands::monotonize_band(&original, *m, &one_d)?);
                }
                bands
                    .iter()
                    .map(|band| {
                        Ok((
                            crate::bands::covers(band, &ex.cef_truth)?,
                            lp_all(band.lower(), band.upper())?,
                        ))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;

        let kinds = 1 + ex.monotonizers.len();
        let mut stats = (0..kinds)
            .map(|_| BandStats {
                covered: 0,
                lengths: [0.0; 3],
            })
            .collect::<Vec<_>>();
        for (r, rep) in per_rep.iter().enumerate() {
            let (orig_cover, orig_len) = rep[0];
            for (j, (cover, len)) in rep.iter().enumerate() {
                stats[j].covered += usize::from(*cover);
                for q in 0..3 {
                    stats[j].lengths[q] += len[q];
                }
                if j > 0 {
                    let label = ex.monotonizers[j - 1].label();
                    checker.le(
                        c.name(),
                        r,
                        || format!("band {label} covers whenever the original does"),
                        f64::from(u8::from(orig_cover)),
                        f64::from(u8::from(*cover)),
                    );
                    for (q, p) in LpIndex::standard().iter().enumerate() {
                        checker.le(
                            c.name(),
                            r,
                            || format!("band {label} length <= original, p={p}"),
                            len[q],
                            orig_len[q],
                        );
                    }
                }
            }
        }
        let n = reps as f64;
        let base = stats[0].lengths;
        for (j, s) in stats.iter().enumerate() {
            rows.push(BandRow {
                method: c.name().to_string(),
                interval: if j == 0 {
                    "O".to_string()
                } else {
                    ex.monotonizers[j - 1].label()
                },
                coverage: s.covered as f64 / n,
                critical,
                l1_length: s.lengths[0] / n,
                length_ratios: [
                    ratio(s.lengths[0], base[0]),
                    ratio(s.lengths[1], base[1]),
                    ratio(s.lengths[2], base[2]),
                ],
            });
        }
    }
    Ok(rows)
}

impl McReport {
    /// Writes one table as CSV.
    pub fn write_csv<W: Write>(&self, table: Table, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        match table {
            Table::Cef | Table::Process => {
                let rows = if table == Table::Cef {
                    &self.cef
                } else {
                    &self.process
                };
                let mut header = vec!["method".to_string(), "p".into(), "Lp_O".into()];
                if let Some(first) = rows.first() {
                    header.extend(first.ratios.iter().map(|(l, _)| format!("ratio_{l}")));
                }
                w.write_record(&header)?;
                for r in rows {
                    let mut rec = vec![r.method.clone(), r.p.clone(), r.original.to_string()];
                    rec.extend(r.ratios.iter().map(|(_, v)| v.to_string()));
                    w.write_record(&rec)?;
                }
            }
            Table::Bands => {
                w.write_record([
                    "method",
                    "interval",
                    "cover",
                    "critical",
                    "L1",
                    "L1_ratio",
                    "L2_ratio",
                    "Linf_ratio",
                ])?;
                for r in &self.bands {
                    w.write_record([
                        r.method.clone(),
                        r.interval.clone(),
                        r.coverage.to_string(),
                        r.critical.to_string(),
                        r.l1_length.to_string(),
                        r.length_ratios[0].to_string(),
                        r.length_ratios[1].to_string(),
                        r.length_ratios[2].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn error_row(&self, table: Table, method: &str, p: &str) -> Option<&ErrorRow> {
        let rows = match table {
            Table::Cef => &self.cef,
            Table::Process => &self.process,
            Table::Bands => return None,
        };
        rows.iter().find(|r| r.method == method && r.p == p)
    }

    pub fn band_row(&self, method: &str, interval: &str) -> Option<&BandRow> {
        self.bands
            .iter()
            .find(|r| r.method == method && r.interval == interval)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn design_vector_examples() {
        assert_eq!(design_vector(2.0), [1.0, 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(design_vector(20.0), [1.0, 20.0, 15.0, 10.0, 5.0]);
        assert_eq!(design_vector(5.0), [1.0, 5.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn cef_values() {
        assert!((true_cef(2.0, &GROWTH_CHART_BETA) - 87.51).abs() < 1e-9);
        assert!((true_cef(20.0, &GROWTH_CHART_BETA) - 178.70).abs() < 1e-9);
        // segment slopes
        let slopes: Vec<f64> = (0..4)
            .map(|i| GROWTH_CHART_BETA[1] + GROWTH_CHART_BETA[2..2 + i].iter().sum::<f64>())
            .collect();
        let expected = [8.13, 5.41, 7.19, 0.76];
        for (s, e) in slopes.iter().zip(expected) {
            assert!((s - e).abs() < 1e-12);
        }
    }

    #[test]
    fn cqf_properties() {
        let (b, s) = (GROWTH_CHART_BETA, 4.0);
        assert!((true_cqf(0.5, 7.0, &b, s).unwrap() - true_cef(7.0, &b)).abs() < 1e-9);
        let spread = true_cqf(0.95, 7.0, &b, s).unwrap() - true_cqf(0.05, 7.0, &b, s).unwrap();
        assert!((spread - 2.0 * s * 1.6448536269514722).abs() < 1e-6);
        assert!(true_cqf(0.0, 7.0, &b, s).is_err());
        assert!(true_cqf(1.0, 7.0, &b, s).is_err());
    }

    #[test]
    fn simulation_is_deterministic() {
        let cfg = McConfig {
            n: 50,
            ..McConfig::default()
        };
        assert_eq!(simulate_rep(&cfg, 3).unwrap(), simulate_rep(&cfg, 3).unwrap());
        assert_ne!(simulate_rep(&cfg, 3).unwrap(), simulate_rep(&cfg, 4).unwrap());
    }

    #[test]
    fn zero_noise_is_the_cef() {
        let cfg = McConfig {
            n: 20,
            sigma: 0.0,
            ..McConfig::default()
        };
        let d = simulate_rep(&cfg, 0).unwrap();
        for (x, y) in d.x().iter().zip(d.y()) {
            assert_eq!(*y, true_cef(*x, &cfg.beta));
        }
    }

    #[test]
    fn noise_mean_is_small() {
        let cfg = McConfig {
            n: 10_000,
            ..McConfig::default()
        };
        let d = simulate_rep(&cfg, 0).unwrap();
        let m: f64 = d
            .x()
            .iter()
            .zip(d.y())
            .map(|(x, y)| y - true_cef(*x, &cfg.beta))
            .sum::<f64>()
            / 10_000.0;
        assert!(m.abs() < 4.0 * cfg.sigma / 100.0);
    }

    #[test]
    fn config_json() {
        let cfg = McConfig::from_json(r#"{"reps": 3, "bootstrap_B": 10}"#).unwrap();
        assert_eq!(cfg.reps, 3);
        assert_eq!(cfg.bootstrap_b, 10);
        assert_eq!(cfg.n, 533);
        assert!(McConfig::from_json(r#"{"reps": 0}"#).is_err());
        assert!(McConfig::from_json(r#"{"bogus": 1}"#).is_err());
        assert!(McConfig::from_json(r#"{"n": 3, "x_design": [2, 3]}"#).is_err());
        let round: McConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn truth_as_estimate_has_unit_ratios() {
        let cfg = McConfig {
            reps: 1,
            n: 60,
            grid: 20,
            estimators: vec![],
            include_truth: true,
            taus: vec![0.25, 0.5, 0.75],
            bootstrap_b: 5,
            ..McConfig::default()
        };
        let r = run_experiment(&cfg).unwrap();
        for row in r.cef.iter().chain(&r.process) {
            assert_eq!(row.original, 0.0);
            assert!(row.ratios.iter().all(|(_, v)| *v == 1.0));
        }
        assert!(r.violations.is_empty());
        assert!(r.bands.iter().all(|b| b.coverage == 1.0));
    }

    #[test]
    fn table_numbers() {
        assert_eq!(Table::from_number(2).unwrap(), Table::Process);
        assert!(Table::from_number(4).is_err());
    }

    #[test]
    fn seeds_differ_by_slot() {
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 0, 1));
        assert_ne!(derive_seed(1, 0, 0), derive_seed(1, 1, 0));
    }
}
