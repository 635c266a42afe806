//! Run orchestration shared by the CLI and the Python bindings: time-step
//! derivation, full solves with monitoring, convergence studies, backend
//! benchmarks, verification sweeps, CSV output, and SVG error plots.

use std::fmt::Write as _;
use std::time::Instant;

use crate::config::{ErrorReference, ResolvedConfig};
use crate::error::{Result, SldgError};
use crate::field::ModalField2D;
use crate::mesh::Mesh2D;
use crate::solver2d::{advance, Backend, TimingStats};
use crate::velocity::{trace_2d, TracerConfig, TracerOrder};
use crate::verification::{self, SampleGrid};

/// Pinned metrics CSV header.
pub const METRICS_HEADER: &str =
    "mesh,l2,l2_order,l1,l1_order,linf,linf_order,mass_drift,stability_ratio,wall_s";

/// Pinned benchmark CSV header.
pub const BENCH_HEADER: &str = "mesh,t_svs,t_ibs,ratio";

/// Pinned verification CSV header.
pub const VERIFY_HEADER: &str = "check,value,bound,pass";

/// Everything recorded while stepping a solve to its horizon.
pub struct SolveArtifacts {
    pub field: ModalField2D,
    /// Total mass after projection and after every step.
    pub masses: Vec<f64>,
    /// L² norm after projection and after every step.
    pub norms: Vec<f64>,
    pub timing: TimingStats,
    pub dt: f64,
    pub steps: usize,
    /// Wall time of the stepping loop.
    pub wall_s: f64,
    /// Cell window `[r0, r1) x [s0, s1)` covering the problem domain;
    /// outside it lies halo (see `ProblemSpec::halo`).
    pub window: (usize, usize, usize, usize),
}

/// One metrics row.
#[derive(Debug, Clone)]
pub struct RunMetrics {
    pub mesh_label: String,
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
    pub mass_drift: f64,
    pub stability_ratio: f64,
    pub wall_s: f64,
    pub dt: f64,
    pub steps: usize,
    pub t_solver: f64,
}

/// One verification row.
#[derive(Debug, Clone)]
pub struct VerifyRow {
    pub check: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// One benchmark row.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub mesh: usize,
    pub t_svs: f64,
    pub t_ibs: f64,
    pub ratio: f64,
}

/// Largest sampled `|a| + |b|` over a 64 x 64 x 16 space-time grid.
pub fn max_speed(rc: &ResolvedConfig) -> f64 {
    let (ax, bx, ay, by) = rc.problem.domain;
    let v = &rc.problem.velocity;
    let mut vmax = 0.0f64;
    for kt in 0..16 {
        let t = rc.t_end * kt as f64 / 15.0;
        for i in 0..64 {
            let x = ax + (bx - ax) * (i as f64 + 0.5) / 64.0;
            for j in 0..64 {
                let y = ay + (by - ay) * (j as f64 + 0.5) / 64.0;
                vmax = vmax.max(v.a(x, y, t).abs() + v.b(x, y, t).abs());
            }
        }
    }
    vmax
}

/// Time step from the CFL number: `dt = cfl * min(hx, hy) / max(|a|+|b|)`,
/// with the final step shortened to land exactly on the horizon.
pub fn derive_dt(rc: &ResolvedConfig, nx: usize, ny: usize) -> Result<(f64, usize)> {
    let (ax, bx, ay, by) = rc.problem.domain;
    let hx = (bx - ax) / nx as f64;
    let hy = (by - ay) / ny as f64;
    let vmax = max_speed(rc);
    if vmax <= 0.0 {
        // Stationary velocity: a single step covers the horizon.
        return Ok((rc.t_end, 1));
    }
    let dt = rc.cfl * hx.max(hy) / vmax; // EXPERIMENT max
    let steps = ((rc.t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    Ok((dt, steps))
}

/// Step a problem to its horizon on an `nx x ny` mesh, recording mass and
/// norm histories. `corrupt_at_step` is a test hook that damages one
/// coefficient after the given step, used as a negative control for the
/// mass-balance check.
pub fn solve_on_mesh(
    rc: &ResolvedConfig,
    nx: usize,
    ny: usize,
    corrupt_at_step: Option<usize>,
) -> Result<SolveArtifacts> {
    let (ax, bx, ay, by) = rc.problem.domain;
    let hx = (bx - ax) / nx as f64;
    let hy = (by - ay) / ny as f64;
    // Pad with whole halo cells when the problem requires a resolved
    // neighbourhood of the domain (non-periodic velocities).
    let (pad_x_cells, pad_y_cells) = match rc.problem.halo {
        Some((px, py)) => ((px / hx).ceil() as usize, (py / hy).ceil() as usize),
        None => (0, 0),
    };
    let mesh = Mesh2D::rect(
        ax - pad_x_cells as f64 * hx,
        bx + pad_x_cells as f64 * hx,
        nx + 2 * pad_x_cells,
        ay - pad_y_cells as f64 * hy,
        by + pad_y_cells as f64 * hy,
        ny + 2 * pad_y_cells,
    )?;
    let window = (pad_x_cells, pad_x_cells + nx, pad_y_cells, pad_y_cells + ny);
    let init = rc.problem.initial.clone();
    let mut field =
        ModalField2D::project(mesh, rc.degree, rc.degree, rc.degree + 2, move |x, y| init(x, y))?;
    let (dt, steps) = derive_dt(rc, nx, ny)?;
    let mut masses = Vec::with_capacity(steps + 1);
    let mut norms = Vec::with_capacity(steps + 1);
    masses.push(field.total_mass());
    norms.push(field.l2_norm());
    let mut timing = TimingStats::default();
    let started = Instant::now();
    for k in 0..steps {
        let t_k = k as f64 * dt;
        let dt_k = if k + 1 == steps { rc.t_end - t_k } else { dt };
        let (next, stats) =
            advance(&field, &rc.problem.velocity, &rc.scheme, rc.backend, t_k, dt_k, &rc.step)?;
        field = next;
        timing.merge(&stats);
        if corrupt_at_step == Some(k) {
            field.cell_block_mut(0, 0)[0] *= 1.5;
        }
        masses.push(field.total_mass());
        norms.push(field.l2_norm());
    }
    let wall_s = started.elapsed().as_secs_f64();
    Ok(SolveArtifacts { field, masses, norms, timing, dt, steps, wall_s, window })
}

/// Solve and measure errors against the problem's exact solution.
pub fn run_metrics(rc: &ResolvedConfig, nx: usize, ny: usize) -> Result<(RunMetrics, SolveArtifacts)> {
    if rc.problem.exact_at(0.0, 0.0, rc.t_end).is_none() {
        return Err(SldgError::Config(format!(
            "problem {:?} has no reference solution at t_end={}; it recurs only at t={}",
            rc.problem.name, rc.t_end, rc.problem.horizon
        )));
    }
    let art = solve_on_mesh(rc, nx, ny, None)?;
    let exact = rc.problem.clone();
    let t_end = rc.t_end;
    let reference = move |x: f64, y: f64| exact.exact_at(x, y, t_end).unwrap();
    let (l1, l2, linf) = match rc.error_reference {
        ErrorReference::Projected => art.field.error_norms_vs_projection_in(
            reference,
            rc.degree + 2,
            rc.degree + 3,
            art.window,
        )?,
        ErrorReference::Pointwise => {
            art.field.error_norms_in(reference, rc.degree + 3, art.window)?
        }
    };
    let mass = verification::check_mass_balance(&art.masses);
    let stab = verification::stability_from_norms(&art.norms);
    let metrics = RunMetrics {
        mesh_label: format!("{nx}x{ny}"),
        l1,
        l2,
        linf,
        mass_drift: mass.max_step_drift,
        stability_ratio: stab.max_ratio,
        wall_s: art.wall_s,
        dt: art.dt,
        steps: art.steps,
        t_solver: art.timing.total_seconds(),
    };
    Ok((metrics, art))
}

/// Orders `log2(e_coarse / e_fine)` per norm; `None` for the first row,
/// infinity when an error hits exactly zero.
pub fn convergence_orders(errors: &[f64]) -> Vec<Option<f64>> {
    let mut orders = vec![None];
    for w in errors.windows(2) {
        let (prev, cur) = (w[0], w[1]);
        if prev <= 0.0 || cur <= 0.0 {
            orders.push(Some(f64::INFINITY));
        } else {
            orders.push(Some((prev / cur).log2()));
        }
    }
    orders
}

/// Run the configured problem over the mesh list, computing errors and
/// observed orders. Meshes must refine strictly (each size doubling the
/// previous one).
pub fn convergence_study(rc: &ResolvedConfig) -> Result<Vec<RunMetrics>> {
    for w in rc.meshes.windows(2) {
        if w[1] != 2 * w[0] {
            return Err(SldgError::Config(format!(
                "meshes must double at each refinement, got {} then {}",
                w[0], w[1]
            )));
        }
    }
    let mut rows = Vec::with_capacity(rc.meshes.len());
    for &n in &rc.meshes {
        let (m, _) = run_metrics(rc, n, n)?;
        rows.push(m);
    }
    Ok(rows)
}

/// Benchmark both backends on identical configurations. One warm-up step
/// per (mesh, backend) is excluded from the timing; reported times are the
/// accumulated stage walls of the full solve.
pub fn bench_backends(rc: &ResolvedConfig) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(rc.meshes.len());
    for &n in &rc.meshes {
        let mut times = [0.0f64; 2];
        for (slot, backend) in [Backend::Svs, Backend::Ibs].into_iter().enumerate() {
            let mut variant = rc.clone();
            variant.backend = backend;
            // Warm-up: one step, result discarded.
            let (ax, bx, ay, by) = variant.problem.domain;
            let mesh = Mesh2D::rect(ax, bx, n, ay, by, n)?;
            let init = variant.problem.initial.clone();
            let warm = ModalField2D::project(mesh, variant.degree, variant.degree, variant.degree + 2, move |x, y| {
                init(x, y)
            })?;
            let (dt, _) = derive_dt(&variant, n, n)?;
            let _ = advance(
                &warm,
                &variant.problem.velocity,
                &variant.scheme,
                backend,
                0.0,
                dt,
                &variant.step,
            )?;
            let art = solve_on_mesh(&variant, n, n, None)?;
            times[slot] = art.timing.total_seconds();
        }
        rows.push(BenchRow { mesh: n, t_svs: times[0], t_ibs: times[1], ratio: times[1] / times[0] });
    }
    Ok(rows)
}

fn fmt_order(o: &Option<f64>) -> String {
    match o {
        None => String::new(),
        Some(v) if v.is_infinite() => "inf".into(),
        Some(v) => format!("{v:.2}"),
    }
}

/// Render metrics rows as CSV with the pinned header.
pub fn metrics_csv(rows: &[RunMetrics]) -> String {
    let l2_orders = convergence_orders(&rows.iter().map(|r| r.l2).collect::<Vec<_>>());
    let l1_orders = convergence_orders(&rows.iter().map(|r| r.l1).collect::<Vec<_>>());
    let linf_orders = convergence_orders(&rows.iter().map(|r| r.linf).collect::<Vec<_>>());
    let mut out = String::new();
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for (i, r) in rows.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:.6e},{},{:.6e},{},{:.6e},{},{:.3e},{:.6},{:.3}",
            r.mesh_label,
            r.l2,
            fmt_order(&l2_orders[i]),
            r.l1,
            fmt_order(&l1_orders[i]),
            r.linf,
            fmt_order(&linf_orders[i]),
            r.mass_drift,
            r.stability_ratio,
            r.wall_s,
        );
    }
    out
}

/// Render benchmark rows as CSV, preceded by machine metadata comments.
pub fn bench_csv(rc: &ResolvedConfig, rows: &[BenchRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# arch={} os={}", std::env::consts::ARCH, std::env::consts::OS);
    let _ = writeln!(
        out,
        "# cores={} threads={}",
        std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        rc.step.threads
    );
    let _ = writeln!(
        out,
        "# problem={} degree={} cfl={} splitting={} tracer_substeps={} warmup=excluded",
        rc.problem.name, rc.degree, rc.cfl, rc.scheme.name, rc.step.tracer.substeps
    );
    out.push_str(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{0}x{0},{1:.4},{2:.4},{3:.4}", r.mesh, r.t_svs, r.t_ibs, r.ratio);
    }
    out
}

/// Render verification rows as CSV.
pub fn verify_csv(rows: &[VerifyRow]) -> String {
    let mut out = String::new();
    out.push_str(VERIFY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{},{:.6e},{:.6e},{}", r.check, r.value, r.bound, r.pass);
    }
    out
}

/// Run every verification check for the configured problem.
///
/// `corrupt` switches on the negative-control hook that damages one
/// coefficient mid-run, which must make the mass-balance row fail.
pub fn verify_problem(rc: &ResolvedConfig, corrupt: bool) -> Result<Vec<VerifyRow>> {
    let p = &rc.problem;
    let v = &p.velocity;
    let (ax, bx, ay, by) = p.domain;
    let mut rows = Vec::new();
    let fine = TracerConfig { order: TracerOrder::Rk4, substeps: 512, use_analytic_flow: false };

    // Declared divergence against centered differences.
    if v.has_analytic_divergence() {
        let mut worst = 0.0f64;
        for i in 0..9 {
            let x = ax + (bx - ax) * (i as f64 + 0.4) / 9.0;
            for j in 0..9 {
                let y = ay + (by - ay) * (j as f64 + 0.6) / 9.0;
                for t in [0.0, 0.31 * rc.t_end, 0.83 * rc.t_end] {
                    worst = worst.max((v.divergence(x, y, t) - v.divergence_fd(x, y, t)).abs());
                }
            }
        }
        rows.push(VerifyRow { check: "divergence_fd_consistency".into(), value: worst, bound: 1e-7, pass: worst <= 1e-7 });
    }

    // Sampled bounds against the declared divergence bound.
    let bounds = verification::estimate_bounds(v, p.domain, (0.0, rc.t_end), SampleGrid::default())?;
    let declared = v.divergence_bound();
    if declared.is_finite() {
        rows.push(VerifyRow {
            check: "divergence_bound".into(),
            value: bounds.m_a,
            bound: declared + 1e-8,
            pass: bounds.m_a <= declared + 1e-8,
        });
    }

    // Flow composition and roundtrip on interior sample points.
    let samples = [
        (ax + 0.31 * (bx - ax), ay + 0.47 * (by - ay)),
        (ax + 0.62 * (bx - ax), ay + 0.18 * (by - ay)),
        (ax + 0.85 * (bx - ax), ay + 0.74 * (by - ay)),
    ];
    let (t_hi, t_mid, t_lo) = (0.9 * rc.t_end, 0.5 * rc.t_end, 0.1 * rc.t_end);
    let mut comp = 0.0f64;
    let mut round = 0.0f64;
    for &pt in &samples {
        let via = trace_2d(v, pt, t_hi, t_mid, &fine)?;
        let two = trace_2d(v, via, t_mid, t_lo, &fine)?;
        let one = trace_2d(v, pt, t_hi, t_lo, &fine)?;
        comp = comp.max((two.0 - one.0).hypot(two.1 - one.1));
        let back = trace_2d(v, pt, t_hi, t_lo, &fine)?;
        let forth = trace_2d(v, back, t_lo, t_hi, &fine)?;
        round = round.max((forth.0 - pt.0).hypot(forth.1 - pt.1));
    }
    rows.push(VerifyRow { check: "flow_composition".into(), value: comp, bound: 1e-9, pass: comp <= 1e-9 });
    rows.push(VerifyRow { check: "flow_roundtrip".into(), value: round, bound: 1e-9, pass: round <= 1e-9 });

    // Numerical tracer against the analytic flow, when registered.
    if v.has_analytic_flow_2d() {
        let analytic = TracerConfig::default().analytic();
        let mut worst = 0.0f64;
        for &pt in &samples {
            let a = trace_2d(v, pt, t_hi, t_lo, &analytic)?;
            let n = trace_2d(v, pt, t_hi, t_lo, &fine)?;
            worst = worst.max((a.0 - n.0).hypot(a.1 - n.1));
        }
        rows.push(VerifyRow { check: "analytic_flow_agreement".into(), value: worst, bound: 1e-8, pass: worst <= 1e-8 });
    }

    // Liouville factor: unit for divergence-free fields, and consistent
    // with the finite-difference Jacobian determinant in general.
    if declared == 0.0 {
        let mut worst = 0.0f64;
        for &pt in &samples {
            let l = crate::velocity::liouville_factor(v, pt, t_hi, t_lo, &fine)?;
            worst = worst.max((l - 1.0).abs());
        }
        rows.push(VerifyRow { check: "liouville_unit".into(), value: worst, bound: 1e-8, pass: worst <= 1e-8 });
    }
    {
        let (l, fd) = verification::liouville_vs_jacobian_fd(v, samples[0], t_mid, t_lo, &fine)?;
        let diff = (l - fd).abs();
        rows.push(VerifyRow { check: "liouville_vs_jacobian_fd".into(), value: diff, bound: 1e-6, pass: diff <= 1e-6 });
    }

    // Norm control for 100 random polynomial test functions on random
    // cells.
    {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(20240817);
        let hx = (bx - ax) / rc.nx as f64;
        let hy = (by - ay) / rc.ny as f64;
        let mut failed = 0u32;
        for _ in 0..100 {
            let i = rng.gen_range(0..rc.nx) as f64;
            let j = rng.gen_range(0..rc.ny) as f64;
            let cell = (ax + i * hx, ax + (i + 1.0) * hx, ay + j * hy, ay + (j + 1.0) * hy);
            let psi = verification::random_cell_polynomial(&mut rng, rc.degree, cell);
            let r = verification::check_norm_control(
                psi,
                cell,
                v,
                0.7 * rc.t_end,
                0.05 * rc.t_end,
                rc.degree + 3,
                &fine,
                bounds.m_a.max(if declared.is_finite() { declared } else { 0.0 }),
            )?;
            if !r.pass {
                failed += 1;
            }
        }
        rows.push(VerifyRow { check: "norm_control_random_psi".into(), value: failed as f64, bound: 0.0, pass: failed == 0 });
    }

    // Support transport surrogate on one cell.
    {
        let hx = (bx - ax) / rc.nx as f64;
        let hy = (by - ay) / rc.ny as f64;
        let cell = (ax + 2.0 * hx, ax + 3.0 * hx, ay + 3.0 * hy, ay + 4.0 * hy);
        let (worst, pass) =
            verification::check_support_transport(v, cell, 0.6 * rc.t_end, 0.2 * rc.t_end, &fine)?;
        rows.push(VerifyRow { check: "support_transport".into(), value: worst, bound: 1e-10, pass });
    }

    // Full-run monitors: mass balance and stability.
    {
        let corrupt_at = if corrupt { Some(0) } else { None };
        let art = solve_on_mesh(rc, rc.nx, rc.ny, corrupt_at)?;
        let mass = verification::check_mass_balance(&art.masses);
        rows.push(VerifyRow {
            check: "mass_balance".into(),
            value: mass.max_relative_drift,
            bound: 1e-9,
            pass: mass.pass,
        });
        let stab = verification::stability_from_norms(&art.norms);
        rows.push(VerifyRow {
            check: "stability_ratio".into(),
            value: stab.max_ratio,
            bound: 1.05,
            pass: stab.max_ratio <= 1.05,
        });
    }

    // Constant preservation, where each sweep is divergence-free.
    if p.sweeps_divergence_free {
        let mesh = Mesh2D::rect(ax, bx, rc.nx, ay, by, rc.ny)?;
        let ones = ModalField2D::project(mesh, rc.degree, rc.degree, rc.degree + 2, |_, _| 1.0)?;
        let (dt, _) = derive_dt(rc, rc.nx, rc.ny)?;
        let mut u = ones.clone();
        for k in 0..3 {
            u = advance(&u, v, &rc.scheme, rc.backend, k as f64 * dt, dt, &rc.step)?.0;
        }
        let drift = u
            .coeffs()
            .iter()
            .zip(ones.coeffs())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        rows.push(VerifyRow { check: "constant_preservation".into(), value: drift, bound: 1e-9, pass: drift <= 1e-9 });
    }

    Ok(rows)
}

/// Self-contained log-log SVG plot of error norms against mesh size.
pub fn error_plot_svg(rows: &[RunMetrics]) -> String {
    let (w, h) = (640.0, 480.0);
    let (ml, mr, mt, mb) = (70.0, 20.0, 20.0, 50.0);
    let series: [(&str, &str, Vec<f64>); 3] = [
        ("L2", "#d62728", rows.iter().map(|r| r.l2).collect()),
        ("L1", "#1f77b4", rows.iter().map(|r| r.l1).collect()),
        ("Linf", "#2ca02c", rows.iter().map(|r| r.linf).collect()),
    ];
    let ns: Vec<f64> = rows
        .iter()
        .map(|r| r.mesh_label.split('x').next().unwrap_or("1").parse().unwrap_or(1.0))
        .collect();
    let all: Vec<f64> = series.iter().flat_map(|(_, _, v)| v.iter().copied()).filter(|&e| e > 0.0).collect();
    let (emin, emax) = all
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let (emin, emax) = if all.is_empty() { (1e-12, 1.0) } else { (emin / 2.0, emax * 2.0) };
    let (nmin, nmax) = (ns.first().copied().unwrap_or(1.0) / 1.3, ns.last().copied().unwrap_or(2.0) * 1.3);
    let xmap = |n: f64| ml + (w - ml - mr) * (n.ln() - nmin.ln()) / (nmax.ln() - nmin.ln());
    let ymap = |e: f64| h - mb - (h - mt - mb) * (e.ln() - emin.ln()) / (emax.ln() - emin.ln());
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{ml}" y1="{y}" x2="{x2}" y2="{y}" stroke="black"/><line x1="{ml}" y1="{mt}" x2="{ml}" y2="{y}" stroke="black"/>"#,
        y = h - mb,
        x2 = w - mr
    );
    // Decade grid lines on the error axis.
    let mut d = emin.log10().ceil() as i32;
    while (10f64).powi(d) < emax {
        let y = ymap((10f64).powi(d));
        let _ = writeln!(
            svg,
            r##"<line x1="{ml}" y1="{y:.1}" x2="{x2}" y2="{y:.1}" stroke="#dddddd"/><text x="{tx}" y="{ty:.1}" font-size="11" text-anchor="end">1e{d}</text>"##,
            x2 = w - mr,
            tx = ml - 6.0,
            ty = y + 4.0
        );
        d += 1;
    }
    for (i, &n) in ns.iter().enumerate() {
        let x = xmap(n);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.1}" y="{y:.1}" font-size="11" text-anchor="middle">{label}</text>"#,
            y = h - mb + 16.0,
            label = rows[i].mesh_label
        );
    }
    for (name, color, values) in &series {
        let mut path = String::new();
        for (i, &e) in values.iter().enumerate() {
            if e <= 0.0 {
                continue;
            }
            let cmd = if path.is_empty() { 'M' } else { 'L' };
            let _ = write!(path, "{cmd}{:.1},{:.1} ", xmap(ns[i]), ymap(e));
        }
        let _ = writeln!(svg, r#"<path d="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
        for (i, &e) in values.iter().enumerate() {
            if e > 0.0 {
                let _ = writeln!(
                    svg,
                    r#"<circle cx="{:.1}" cy="{:.1}" r="3" fill="{color}"/>"#,
                    xmap(ns[i]),
                    ymap(e)
                );
            }
        }
        let idx = series.iter().position(|(n2, _, _)| n2 == name).unwrap_or(0);
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{y}" font-size="12" fill="{color}">{name}</text>"#,
            x = w - mr - 60.0,
            y = mt + 16.0 * (idx as f64 + 1.0)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{x:.1}" y="{y}" font-size="12" text-anchor="middle">mesh</text>"#,
        x = (ml + w - mr) / 2.0,
        y = h - 12.0
    );
    svg.push_str("</svg>\n");
    svg
}
