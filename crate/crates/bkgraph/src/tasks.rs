//! One function per task. Each writes its artifacts and returns a short
//! JSON summary.

use std::f64::consts::PI;

use bkgraph_core::extensions::{s_matrix_bk, squared_block, standard_bc, ExtensionSpec};
use bkgraph_core::graph::MetricGraph;
use bkgraph_core::halfline::{amplitude_closed, mellin_amplitude, parseval_integral};
use bkgraph_core::linalg::{self, c64};
use bkgraph_core::special::critical_zeros;
use bkgraph_core::spectra::{
    counting_function, find_negative_eigenvalues, weyl_fit, zero_mode_test, CountingSide, ScanOptions, Scanner,
    SecularSystem, Spectrum,
};
use bkgraph_core::traces::{check_trace, heat_trace_pair, nogo_report, trace_lhs, TestFunction, TraceOptions};
use bkgraph_core::{Error, OperatorKind};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{from_matrix, op_name, BoundaryConfig, HalflineConfig, JobConfig, PacketKind};
use crate::error::CliError;
use crate::output::Artifacts;
use crate::random::random_extension;

/// Execution context shared by the tasks.
pub struct Ctx<'a> {
    pub cfg: &'a JobConfig,
    pub seed: u64,
    pub pool: &'a rayon::ThreadPool,
}

struct Problem {
    graph: MetricGraph,
    spec: ExtensionSpec,
    sys: SecularSystem,
}

fn problem(ctx: &Ctx) -> Result<Problem, CliError> {
    let graph = ctx.cfg.build_graph(ctx.seed)?;
    let boundary = ctx.cfg.boundary.as_ref().ok_or(CliError::Missing("boundary"))?;
    let spec = match boundary.to_condition(ctx.cfg.operator)? {
        Some(bc) => standard_bc(&bc, &graph)?,
        None => random_extension(ctx.cfg.operator, graph.edge_count(), ctx.seed)?,
    };
    let sys = SecularSystem::new(&graph, &spec)?;
    Ok(Problem { graph, spec, sys })
}

fn graph_json(g: &MetricGraph) -> Value {
    let edges: Vec<Value> = g
        .edges()
        .iter()
        .map(|e| json!({"id": e.id, "from": e.from, "to": e.to, "a": e.a, "b": e.b, "log_length": e.log_length()}))
        .collect();
    json!({
        "edges": edges,
        "vertices": g.vertex_count(),
        "components": g.component_count(),
        "connected": g.is_connected(),
        "total_length": g.total_length(),
    })
}

fn scan_options(ctx: &Ctx) -> ScanOptions {
    ScanOptions { step: ctx.cfg.numeric.step, tol: ctx.cfg.numeric.tol, ..ScanOptions::default() }
}

/// Spectrum on `[lo, hi]`, scanned in parallel blocks and assembled in order.
fn spectrum(ctx: &Ctx, sys: &SecularSystem, lo: f64, hi: f64) -> Result<Spectrum, CliError> {
    let lo = if sys.kind() == OperatorKind::Bk2 { lo.max(0.0) } else { lo };
    let scanner = Scanner::new(sys, lo, hi, scan_options(ctx))?;
    let n = scanner.interval_count();
    let block = (n / (4 * ctx.pool.current_num_threads().max(1))).max(64);
    let ranges: Vec<_> = (0..n).step_by(block).map(|s| s..(s + block).min(n)).collect();
    let chunks = ctx.pool.install(|| ranges.into_par_iter().map(|r| scanner.scan(r)).collect::<Result<Vec<_>, _>>())?;
    Ok(scanner.assemble(chunks)?)
}

fn k_range(ctx: &Ctx, default: [f64; 2]) -> [f64; 2] {
    ctx.cfg.numeric.k_range.unwrap_or(default)
}

#[derive(Serialize)]
struct LevelRow {
    n: usize,
    k_n: f64,
    g_n: usize,
}

fn level_rows(spec: &Spectrum) -> Vec<LevelRow> {
    spec.levels.iter().enumerate().map(|(n, l)| LevelRow { n: n + 1, k_n: l.k, g_n: l.multiplicity }).collect()
}

fn default_kappa_max(sys: &SecularSystem) -> f64 {
    2.0 * sys.robin_eigenvalues().iter().copied().fold(0.0, f64::max) + 1.0
}

pub fn validate(ctx: &Ctx, out: &mut Artifacts) -> Result<Value, CliError> {
    let p = problem(ctx)?;
    let mut report = json!({
        "operator": op_name(p.spec.kind),
        "dimension": p.spec.dimension(),
        "graph": graph_json(&p.graph),
        "a": from_matrix(&p.spec.a),
        "b": from_matrix(&p.spec.b),
    });
    match p.spec.kind {
        OperatorKind::Bk => {
            let s = s_matrix_bk(&p.spec)?;
            report["s_matrix"] = json!(from_matrix(&s));
            report["unitarity_residual"] = json!(linalg::unitarity_residual(&s));
        }
        OperatorKind::Bk2 => {
            let dec = p.sys.decomposition().ok_or(CliError::Inconsistent("missing decomposition".into()))?;
            let s1 = p.sys.vertex_matrix(c64(1.0, 0.0))?;
            let zm = zero_mode_test(&p.sys, 1.0)?;
            report["dirichlet_rank"] = json!(p.spec.dimension() - dec.eigenvalues.len());
            report["robin_eigenvalues"] = json!(dec.eigenvalues);
            report["k_independent"] = json!(p.sys.is_k_independent());
            report["s_matrix_at_1"] = json!(from_matrix(&s1));
            report["unitarity_residual_at_1"] = json!(linalg::unitarity_residual(&s1));
            report["zero_mode"] = json!(zm);
            report["square_of_bk"] = json!(p.sys.is_k_independent() && squared_block(&s1, 1e-10).is_some());
        }
    }
    out.json("validate.json", &report)?;
    Ok(json!({"dimension": p.spec.dimension()}))
}

pub fn spectrum_task(ctx: &Ctx, out: &mut Artifacts) -> Result<Value, CliError> {
    let p = problem(ctx)?;
    let [lo, hi] = k_range(ctx, if p.sys.kind() == OperatorKind::Bk { [-20.0, 20.0] } else { [0.0, 20.0] });
    let mut spec = spectrum(ctx, &p.sys, lo, hi)?;
    if p.sys.kind() == OperatorKind::Bk2 {
        let kappa = ctx.cfg.numeric.kappa_max.unwrap_or_else(|| default_kappa_max(&p.sys));
        spec.negative = find_negative_eigenvalues(&p.sys, kappa)?;
    }
    out.csv("spectrum.csv", &level_rows(&spec))?;
    let summary = json!({
        "operator": op_name(spec.kind),
        "graph": graph_json(&p.graph),
        "k_min": spec.k_min,
        "k_max": spec.k_max,
        "levels": spec.levels.len(),
        "count_with_multiplicity": spec.count(),
        "zero_mode": spec.zero_mode,
        "negative": spec.negative,
        "diagnostics": spec.diagnostics,
    });
    out.json("spectrum.json", &summary)?;
    Ok(json!({"levels": spec.levels.len()}))
}

#[derive(Serialize)]
struct CountRow {
    k: f64,
    count: usize,
}

pub fn weyl(ctx: &Ctx, out: &mut Artifacts) -> Result<Value, CliError> {
    let p = problem(ctx)?;
    let side = ctx.cfg.numeric.side;
    let two_sided = p.sys.kind() == OperatorKind::Bk && side == CountingSide::Absolute;
    // about 400 counted levels by default
    let per_k = match p.sys.kind() {
        OperatorKind::Bk => p.sys.total_length() / (2.0 * PI),
        OperatorKind::Bk2 => p.sys.total_length() / PI,
    };
    let k_hi = 400.0 / per_k / if two_sided { 2.0 } else { 1.0 };
    let [lo, hi] = k_range(ctx, [if two_sided { -k_hi } else { 0.0 }, k_hi]);
    let spec = spectrum(ctx, &p.sys, lo, hi)?;
    let fit = weyl_fit(&spec, side)?;
    let mut rows = Vec::new();
    for l in &spec.levels {
        if side == CountingSide::Absolute || l.k > 0.0 {
            rows.push(CountRow { k: l.k.abs(), count: 0 });
        }
    }
    rows.sort_by(|a, b| a.k.total_cmp(&b.k));
    rows.dedup_by(|a, b| a.k == b.k);
    for r in &mut rows {
        r.count = counting_function(&spec, r.k, side)?;
    }
    out.csv("counting.csv", &rows)?;
    let report = json!({
        "operator": op_name(spec.kind),
        "graph": graph_json(&p.graph),
        "side": side,
        "k_range": [spec.k_min, spec.k_max],
        "fit": fit,
    });
    out.json("weyl.json", &report)?;
    Ok(json!({"slope": fit.slope, "target": fit.target, "relative_error": fit.relative_error}))
}

#[derive(Serialize)]
struct TraceRow {
    t: f64,
    lhs: f64,
    rhs: f64,
    discrepancy: f64,
    error_budget: f64,
    orbit_count: usize,
    holds: bool,
}

pub fn trace(ctx: &Ctx, out: &mut Artifacts) -> Result<Value, CliError> {
    let p = problem(ctx)?;
    let n = &ctx.cfg.numeric;
    let opts = TraceOptions { orbit_cutoff: n.orbit_cutoff, eps: n.eps, lhs_tol: n.lhs_tol, ..TraceOptions::default() };
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for &t in &n.t_values {
        let h = TestFunction::gaussian(t)?;
        let mut k_max = match n.k_range {
            Some([_, hi]) => hi,
            None => h.cutoff(n.lhs_tol * 1e-4 / p.sys.dimension() as f64),
        };
        let report = loop {
            let lo = if p.sys.kind() == OperatorKind::Bk { -k_max } else { 0.0 };
            let spec = spectrum(ctx, &p.sys, lo, k_max)?;
            match check_trace(&p.sys, &spec, &h, &opts) {
                Err(Error::TailBoundExceeded { .. }) if n.k_range.is_none() && k_max < 1e4 => k_max *= 1.5,
                r => break r?,
            }
        };
        let holds = report.holds(1e-9);
        rows.push(TraceRow {
            t,
            lhs: report.lhs.value,
            rhs: report.rhs_total,
            discrepancy: report.discrepancy,
            error_budget: report.error_budget,
            orbit_count: report.terms.orbit_count,
            holds,
        });
        reports.push(json!({"t": t, "k_max": k_max, "report": report}));
    }
    out.csv("trace.csv", &rows)?;
    out.json(
        "trace.json",
        &json!({"operator": op_name(p.sys.kind()), "graph": graph_json(&p.graph), "checks": reports}),
    )?;
    let worst = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    Ok(json!({"max_discrepancy": worst, "all_hold": rows.iter().all(|r| r.holds)}))
}

#[derive(Serialize)]
struct HeatRow {
    t: f64,
    spectral: f64,
    theta: f64,
    solver: f64,
    abs_diff: f64,
    solver_diff: f64,
}

pub fn heat(ctx: &Ctx, out: &mut Artifacts) -> Result<Value, CliError> {
    let p = problem(ctx)?;
    if p.sys.kind() != OperatorKind::Bk2 || !matches!(ctx.cfg.boundary, Some(BoundaryConfig::Dirichlet)) {
        return Err(CliError::Inconsistent("heat-trace needs operator bk2 with a dirichlet boundary".into()));
    }
    let mut rows = Vec::new();
    for &t in &ctx.cfg.numeric.t_values {
        let pair = heat_trace_pair(&p.graph, t)?;
        let h = TestFunction::gaussian(t)?;
        let k_max = h.cutoff(1e-18);
        let spec = spectrum(ctx, &p.sys, 0.0, k_max)?;
        let solver = trace_lhs(&spec, &h, 1e-12)?.value;
        rows.push(HeatRow {
            t,
            spectral: pair.spectral,
            theta: pair.theta,
            solver,
            abs_diff: (pair.spectral - pair.theta).abs(),
            solver_diff: (solver - pair.theta).abs(),
        });
    }
    out.csv("heat_trace.csv", &rows)?;
    let max_diff = rows.iter().map(|r| r.abs_diff.max(r.solver_diff)).fold(0.0, f64::max);
    out.json("heat_trace.json", &json!({"graph": graph_json(&p.graph), "max_abs_diff": max_diff}))?;
    Ok(json!({"max_abs_diff": max_diff}))
}

#[derive(Serialize)]
struct AmplitudeRow {
    k: f64,
    re_a: f64,
    im_a: f64,
    abs2_a: f64,
    closed_re: f64,
    closed_im: f64,
    quadrature_error: f64,
}

pub fn halfline(ctx: &Ctx, out: &mut Artifacts) -> Result<Value, CliError> {
    let hc =
        ctx.cfg.halfline.clone().unwrap_or(HalflineConfig { packet: PacketKind::Fermi, y0: None, s: None, scale: 1.0 });
    let state = hc.state()?;
    let [lo, hi] = k_range(ctx, [0.0, 30.0]);
    let m = ctx.cfg.numeric.samples;
    let ks: Vec<f64> = (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect();
    let values =
        ctx.pool.install(|| ks.par_iter().map(|&k| mellin_amplitude(&state, k)).collect::<Result<Vec<_>, _>>())?;
    let mut rows = Vec::with_capacity(m);
    let mut max_dev = 0.0f64;
    for (&k, est) in ks.iter().zip(&values) {
        let closed = amplitude_closed(&state, k);
        max_dev = max_dev.max((est.value - closed).norm());
        rows.push(AmplitudeRow {
            k,
            re_a: est.value.re,
            im_a: est.value.im,
            abs2_a: est.value.norm_sqr(),
            closed_re: closed.re,
            closed_im: closed.im,
            quadrature_error: est.error,
        });
    }
    out.csv("amplitude.csv", &rows)?;
    let k_par = hi.abs().max(lo.abs()).max(30.0);
    let parseval = parseval_integral(|k| amplitude_closed(&state, k), k_par)?;
    let a0 = amplitude_closed(&state, 0.0).norm();
    let dips: Vec<Value> = if hc.packet == PacketKind::Fermi && hc.scale == 1.0 {
        critical_zeros(lo.max(1.0), hi, 0.05)
            .into_iter()
            .map(|z| json!({"ordinate": z, "relative_amplitude": amplitude_closed(&state, z).norm() / a0}))
            .collect()
    } else {
        Vec::new()
    };
    let report = json!({
        "packet": hc,
        "max_quadrature_deviation": max_dev,
        "parseval": {"k_max": k_par, "integral": parseval.value.re, "norm_squared": state.norm_squared()},
        "riemann_zero_dips": dips,
    });
    out.json("halfline.json", &report)?;
    Ok(json!({"max_quadrature_deviation": max_dev}))
}

#[derive(Serialize)]
struct NogoCsvRow {
    k: f64,
    n_graph: usize,
    n_linear: f64,
    n_riemann: f64,
    ratio: f64,
}

pub fn counting_compare(ctx: &Ctx, out: &mut Artifacts) -> Result<Value, CliError> {
    let p = problem(ctx)?;
    let n = &ctx.cfg.numeric;
    let [_, hi] = k_range(ctx, [0.0, 4.0 * n.k_from]);
    let spec = spectrum(ctx, &p.sys, 0.0, hi)?;
    let report = nogo_report(&spec, n.k_from, n.samples)?;
    let rows: Vec<NogoCsvRow> = report
        .rows
        .iter()
        .map(|r| NogoCsvRow {
            k: r.k,
            n_graph: r.n_graph,
            n_linear: r.n_linear,
            n_riemann: r.n_riemann,
            ratio: r.ratio,
        })
        .collect();
    out.csv("counting_compare.csv", &rows)?;
    out.json(
        "counting_compare.json",
        &json!({
            "operator": op_name(spec.kind),
            "graph": graph_json(&p.graph),
            "fit": report.fit,
            "monotone_decreasing": report.monotone_decreasing,
            "max_staircase_deviation": report.max_staircase_deviation,
            "ratio_at_1000": report.ratio_at_1000,
        }),
    )?;
    Ok(json!({"monotone_decreasing": report.monotone_decreasing}))
}
