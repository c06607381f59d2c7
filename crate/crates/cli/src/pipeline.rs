//! Command dispatch: each command runs the matching library operations on a
//! loaded model and tabulates the results.

use std::str::FromStr;
use std::time::Instant;

use bowen_core::cocycle::{phi_s_log, svf_value};
use bowen_core::geometry::{box_count, cover_counts, dim_compare_with, gh_potentials, BOUND_SLACK};
use bowen_core::pressure::{
    critical_lambda, doubling_pressure, equilibrium_check, log_svp_sums, n_step_svp,
    one_step_svp, potential_pressure, subadditive_pressure, unstable_pressure_gap, CoverFamily,
    PressureEstimate, DEFAULT_PAST_TRIALS,
};
use bowen_core::root::{
    step_root_pair, doubling_roots_with, multi_step_root, one_step_root, pressure_root,
    subadditive_root, DoublingRoots, RootResult, DOUBLING_TOL, PRESSURE_NOISE,
};
use bowen_core::stopping::{audit_family, build_stopping_family, geometric_grid, slope_probe};
use bowen_core::{Potential, SvParams};
use thiserror::Error;

use crate::config::{ConfigError, LoadedModel};
use crate::report::{Cell, RunReport, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Pressure,
    Root,
    Doubling,
    Stopping,
    Boxdim,
    Compare,
    Audit,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Pressure => "pressure",
            Command::Root => "root",
            Command::Doubling => "doubling",
            Command::Stopping => "stopping",
            Command::Boxdim => "boxdim",
            Command::Compare => "compare",
            Command::Audit => "audit",
        }
    }
}

/// `start:ratio:count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl FromStr for RGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected start:ratio:count, got {s:?}"));
        }
        let start = parts[0].parse::<f64>().map_err(|e| format!("start: {e}"))?;
        let ratio = parts[1].parse::<f64>().map_err(|e| format!("ratio: {e}"))?;
        let count = parts[2].parse::<usize>().map_err(|e| format!("count: {e}"))?;
        Ok(Self { start, ratio, count })
    }
}

#[derive(Debug, Clone, Default)]
pub struct Params {
    pub s: Option<f64>,
    pub n: Option<usize>,
    pub lmax: Option<usize>,
    pub r_grid: Option<RGrid>,
    pub k: Option<usize>,
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] bowen_core::Error),
    #[error("{0}")]
    Io(String),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_CAP: i32 = 3;

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        use bowen_core::Error as E;
        match self {
            PipelineError::Core(E::CapExceeded { .. }) => EXIT_CAP,
            PipelineError::Core(
                E::NotDecreasing { .. } | E::NegativeAtStart(_) | E::NotConverged(_),
            ) => EXIT_VIOLATION,
            _ => EXIT_CONFIG,
        }
    }
}

pub fn status_exit_code(status: Status) -> i32 {
    match status {
        Status::Ok => EXIT_OK,
        Status::Violation => EXIT_VIOLATION,
        Status::Error => EXIT_CONFIG,
    }
}

type Res<T> = Result<T, PipelineError>;

const DEFAULT_N: usize = 10;
const DEFAULT_LMAX: usize = 3;
const ROOT_TOL: f64 = 1e-10;
/// Families up to this size are stored and audited by the stopping command.
const AUDIT_FAMILY_LIMIT: u64 = 1 << 16;

pub fn run_pipeline(lm: &LoadedModel, command: Command, params: &Params) -> Res<RunReport> {
    let t0 = Instant::now();
    let mut report = match command {
        Command::Pressure => pressure(lm, params)?,
        Command::Root => root(lm, params)?,
        Command::Doubling => doubling(lm, params)?,
        Command::Stopping => stopping(lm, params)?,
        Command::Boxdim => boxdim(lm, params)?,
        Command::Compare => compare(lm)?,
        Command::Audit => audit(lm, params)?,
    };
    report.input("model", &lm.model.name);
    for (key, value) in [
        ("s", params.s.map(|x| x.to_string())),
        ("n", params.n.map(|x| x.to_string())),
        ("lmax", params.lmax.map(|x| x.to_string())),
        ("r_grid", params.r_grid.map(|g| format!("{}:{}:{}", g.start, g.ratio, g.count))),
        ("k", params.k.map(|x| x.to_string())),
    ] {
        if let Some(v) = value {
            report.input(key, v);
        }
    }
    report.wall_time = t0.elapsed().as_secs_f64();
    Ok(report)
}

fn sv_params(lm: &LoadedModel, params: &Params) -> Res<SvParams> {
    let u = lm.model.dim();
    let s = params.s.unwrap_or(1.0f64.min(u as f64));
    Ok(SvParams::new(s, u)?)
}

/// `k` from `--k`, else from the one-step root.
fn cover_k(lm: &LoadedModel, params: &Params) -> Res<usize> {
    let u = lm.model.dim();
    match params.k {
        Some(k) if k < u => Ok(k),
        Some(k) => Err(bowen_core::Error::BadK { k, max: u - 1 }.into()),
        None => {
            let r = one_step_root(&lm.model.subshift, &lm.model.cocycle, 1e-9)?;
            Ok(SvParams::new(r.root, u)?.k)
        }
    }
}

fn estimate_row(name: &str, s: f64, k: usize, e: &PressureEstimate) -> Vec<Cell> {
    vec![
        name.into(),
        s.into(),
        k.into(),
        e.n_used.into(),
        e.value.into(),
        e.upper.into(),
        e.lower.into(),
    ]
}

fn pressure(lm: &LoadedModel, params: &Params) -> Res<RunReport> {
    let m = &lm.model;
    let sv = sv_params(lm, params)?;
    let n = params.n.unwrap_or(DEFAULT_N);
    let k = params.k.unwrap_or(sv.k);
    let level = params.lmax.unwrap_or(2);
    let mut r = RunReport::new("pressure", &["method", "s", "k", "n_used", "value", "upper", "lower"]);
    let sub_p = subadditive_pressure(&m.subshift, &m.cocycle, sv, n)?;
    r.push(estimate_row("subadditive", sv.s, sv.k, &sub_p));
    let one = potential_pressure(&m.subshift, &one_step_svp(&m.subshift, &m.cocycle, sv.s)?)?;
    r.push(estimate_row("one_step", sv.s, sv.k, &one));
    let dbl = doubling_pressure(&m.subshift, &m.cocycle, sv.s, k, level, lm.limits)?;
    r.push(estimate_row("doubling", sv.s, k, &dbl));
    Ok(r)
}

fn root_row(method: &str, n: usize, r: &RootResult) -> Vec<Cell> {
    vec![
        method.into(),
        n.into(),
        r.root.into(),
        r.lo.into(),
        r.hi.into(),
        r.evaluations.into(),
        r.clamped.into(),
    ]
}

fn n_list(upto: usize) -> Vec<usize> {
    let mut v = vec![1];
    while v.last().unwrap() * 2 <= upto {
        v.push(v.last().unwrap() * 2);
    }
    v
}

fn root(lm: &LoadedModel, params: &Params) -> Res<RunReport> {
    let m = &lm.model;
    let n = params.n.unwrap_or(DEFAULT_N);
    let mut r = RunReport::new(
        "root",
        &["method", "n", "root", "lo", "hi", "evaluations", "clamped"],
    );
    let one = one_step_root(&m.subshift, &m.cocycle, ROOT_TOL)?;
    r.push(root_row("one_step", 1, &one));
    let list = n_list(n.min(m.subshift.word_cap()).min(8));
    let multi = multi_step_root(&m.subshift, &m.cocycle, &list, ROOT_TOL)?;
    r.push(root_row("multi_step", *list.last().unwrap(), &multi));
    let ws = subadditive_root(&m.subshift, &m.cocycle, n, 1e-8)?;
    r.push(root_row("word_sum", n, &ws));
    Ok(r)
}

fn push_doubling(r: &mut RunReport, d: &DoublingRoots) {
    for (level, t) in d.levels.iter().enumerate() {
        r.push(vec![
            d.k.into(),
            level.into(),
            (1usize << level).into(),
            t.root.into(),
            t.lo.into(),
            t.hi.into(),
            d.monotone.into(),
        ]);
    }
}

fn doubling(lm: &LoadedModel, params: &Params) -> Res<RunReport> {
    let m = &lm.model;
    let lmax = params.lmax.unwrap_or(DEFAULT_LMAX);
    let d = doubling_roots_with(&m.subshift, &m.cocycle, lmax, lm.limits, DOUBLING_TOL)?;
    let mut r = RunReport::new(
        "doubling",
        &["k", "level", "block_length", "t", "lo", "hi", "monotone"],
    );
    push_doubling(&mut r, &d);
    let mut ok = d.monotone;
    if let Some(re) = &d.rerun {
        r.notes.push(format!(
            "t* left the band of k = {}; recomputed with k = {}",
            d.k, re.k
        ));
        push_doubling(&mut r, re);
        ok &= re.monotone;
    }
    if !ok {
        r.status = Status::Violation;
    }
    Ok(r)
}

fn stopping(lm: &LoadedModel, params: &Params) -> Res<RunReport> {
    let m = &lm.model;
    let sub = &m.subshift;
    let k = cover_k(lm, params)?;
    let (g, h) = gh_potentials(m, k)?;
    let t = match params.s {
        Some(t) => t,
        None => {
            pressure_root(
                |t| Ok(potential_pressure(sub, &g.lin_comb(sub, 1.0, &h, t)?)?.value),
                0.0,
                m.dim() as f64,
                ROOT_TOL,
            )?
            .root
        }
    };
    let r0 = h.max_value().exp();
    let grid = params.r_grid.unwrap_or(RGrid {
        start: r0 / 2.0,
        ratio: 0.5,
        count: 8,
    });
    let scales = geometric_grid(grid.start, grid.ratio, grid.count)?;
    let probe = slope_probe(sub, &g, &h, t, &scales)?;
    let mut r = RunReport::new(
        "stopping",
        &[
            "r",
            "t",
            "k",
            "count",
            "m_r",
            "big_m_r",
            "log_theta",
            "log_gamma",
            "theta_slope",
            "gamma_slope",
            "theta_extrapolated",
            "audit_ok",
        ],
    );
    let mut all_ok = true;
    for (i, row) in probe.rows.iter().enumerate() {
        let extrap: Option<f64> = if i == 0 { None } else { Some(probe.theta_extrapolated[i - 1]) };
        let audit = if row.count <= AUDIT_FAMILY_LIMIT {
            let fam = build_stopping_family(sub, &h, row.r)?;
            let ok = audit_family(sub, &fam).passed();
            all_ok &= ok;
            Cell::Bool(ok)
        } else {
            Cell::Empty
        };
        r.push(vec![
            row.r.into(),
            t.into(),
            k.into(),
            row.count.into(),
            row.m_r.into(),
            row.big_m_r.into(),
            row.log_theta.into(),
            row.log_gamma.into(),
            row.theta_slope.into(),
            row.gamma_slope.into(),
            extrap.into(),
            audit,
        ]);
    }
    if !all_ok {
        r.status = Status::Violation;
    }
    Ok(r)
}

fn boxdim(lm: &LoadedModel, params: &Params) -> Res<RunReport> {
    let m = &lm.model;
    let depth = params.n.unwrap_or(m.depth);
    let k = cover_k(lm, params)?;
    let eps = m.eps.scales();
    let grid = box_count(m, depth, &eps)?;
    let cover = cover_counts(m, k, &eps)?;
    let mut r = RunReport::new("boxdim", &["method", "eps", "count", "slope", "max_depth"]);
    for rep in [&grid, &cover] {
        for (e, c) in rep.eps_grid.iter().zip(&rep.counts) {
            r.push(vec![
                rep.method.as_str().into(),
                (*e).into(),
                (*c).into(),
                rep.slope.into(),
                rep.max_depth.into(),
            ]);
        }
    }
    Ok(r)
}

const COVER_CONSTANT_LIMIT: f64 = 64.0;

fn compare(lm: &LoadedModel) -> Res<RunReport> {
    let c = dim_compare_with(&lm.model, lm.limits)?;
    let mut r = RunReport::new(
        "compare",
        &[
            "root",
            "root_lo",
            "root_hi",
            "k",
            "grid_slope",
            "cover_slope",
            "cover_constant",
            "bound_ok",
        ],
    );
    let k = c.doubling.rerun.as_ref().map(|x| x.k).unwrap_or(c.doubling.k);
    r.push(vec![
        c.root.root.into(),
        c.root.lo.into(),
        c.root.hi.into(),
        k.into(),
        c.grid_slope.into(),
        c.cover_slope.into(),
        c.cover_constant.into(),
        c.bound_ok.into(),
    ]);
    if !c.bound_ok || c.cover_constant >= COVER_CONSTANT_LIMIT {
        r.status = Status::Violation;
    }
    Ok(r)
}

struct Audit {
    report: RunReport,
}

impl Audit {
    fn check(&mut self, name: &str, passed: bool, value: impl Into<Cell>, threshold: &str) {
        if !passed {
            self.report.status = Status::Violation;
        }
        self.report
            .push(vec![name.into(), passed.into(), value.into(), threshold.into()]);
    }
}

/// Longest `n` with at most `limit` admissible words of length `n`.
fn affordable_length(lm: &LoadedModel, limit: f64, at_most: usize) -> usize {
    let sub = &lm.model.subshift;
    let mut n = 1;
    while n < at_most && sub.word_count(n + 1) <= limit {
        n += 1;
    }
    n
}

fn audit(lm: &LoadedModel, params: &Params) -> Res<RunReport> {
    let m = &lm.model;
    let sub = &m.subshift;
    let c = &m.cocycle;
    let u = m.dim();
    let uf = u as f64;
    let mut a = Audit {
        report: RunReport::new("audit", &["check", "passed", "value", "threshold"]),
    };

    a.check("irreducible", sub.is_irreducible(), Cell::Empty, "");

    let two_n = affordable_length(lm, 65536.0, sub.word_cap()).max(2);
    let mut excess = f64::NEG_INFINITY;
    for s in [0.25 * uf, 0.5 * uf, 0.75 * uf] {
        let z = log_svp_sums(sub, c, s, two_n)?;
        for n in 1..=two_n / 2 {
            excess = excess.max(z[2 * n - 1] / (2 * n) as f64 - z[n - 1] / n as f64);
        }
    }
    a.check("submultiplicativity", excess <= 1e-12, excess, "<= 1e-12");

    let mut dev: f64 = 0.0;
    for i in 0..sub.alphabet_size() as u8 {
        let single = bowen_core::MatrixCocycle::new(vec![*c.matrix(i)])?;
        let one = bowen_core::Subshift::full(1)?;
        for s in [0.25 * uf, 0.5 * uf, 0.95 * uf] {
            let lhs = phi_s_log(&single, &one, &[0], SvParams::new(s, u)?)?;
            dev = dev.max((lhs + svf_value(c.matrix(i), s)?.ln()).abs());
        }
    }
    a.check("inverse_svf_identity", dev <= 1e-10, dev, "<= 1e-10");

    let (_, h0) = gh_potentials(m, 0)?;
    let a1 = -h0.max_value();
    let longest = affordable_length(lm, 65536.0, 64);
    let mut fam_ok = true;
    let mut families = 0usize;
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let r = (-a1 * (1.0 + frac * (longest as f64 - 1.0))).exp();
        let fam = build_stopping_family(sub, &h0, r)?;
        fam_ok &= audit_family(sub, &fam).passed();
        families += 1;
    }
    a.check("stopping_family_audit", fam_ok, families, "prefix-free, exact cover, length window");

    let lmax = params.lmax.unwrap_or(DEFAULT_LMAX);
    let d = doubling_roots_with(sub, c, lmax, lm.limits, DOUBLING_TOL)?;
    let mono = d.monotone && d.rerun.as_ref().is_none_or(|r| r.monotone);
    a.check("doubling_monotone", mono, d.t_star.root, "t_{l+1} <= t_l + 1e-9");

    let list = n_list(4.min(sub.word_cap()));
    let (d1, ds) = step_root_pair(sub, c, &list)?;
    a.check(
        "step_root_order",
        ds.root <= d1.root + PRESSURE_NOISE,
        ds.root - d1.root,
        "multi-step - one-step <= 1e-9",
    );

    let gap_n = affordable_length(lm, 65536.0, 6);
    let mut gap: f64 = 0.0;
    for s in [0.5 * uf, uf] {
        gap = gap.max(unstable_pressure_gap(sub, &one_step_svp(sub, c, s)?, gap_n, DEFAULT_PAST_TRIALS)?);
        gap = gap.max(unstable_pressure_gap(sub, &n_step_svp(sub, c, s, 2)?, gap_n, DEFAULT_PAST_TRIALS)?);
    }
    a.check("unstable_gap_zero", gap == 0.0, gap, "== 0");

    let eq = equilibrium_check(sub, &one_step_svp(sub, c, d1.root)?)?;
    a.check(
        "equilibrium_defect",
        (-1e-10..=1e-8).contains(&eq.defect),
        eq.defect,
        "in [-1e-10, 1e-8]",
    );

    let phi = Potential::constant(sub, -0.2)?;
    let n_u = affordable_length(lm, 1.0e6, 20);
    let uniform = critical_lambda(sub, &phi, &CoverFamily::Uniform(n_u))?;
    let r = (-a1 * (n_u as f64 - 0.5)).exp();
    let stop = critical_lambda(sub, &phi, &CoverFamily::Stopping { h: h0, r })?;
    a.check(
        "dimensional_formula",
        (uniform - stop).abs() <= 0.02,
        uniform - stop,
        "|difference| <= 0.02",
    );

    let cmp = dim_compare_with(m, lm.limits)?;
    a.check(
        "box_dimension_bound",
        cmp.bound_ok,
        cmp.grid_slope - cmp.root.root,
        &format!("grid slope - root <= {BOUND_SLACK}"),
    );
    a.check(
        "cover_constant",
        cmp.cover_constant < COVER_CONSTANT_LIMIT,
        cmp.cover_constant,
        "< 64",
    );
    Ok(a.report)
}
