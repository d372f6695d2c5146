use nalgebra::DVector;
use serde_json::{json, Value};
use std::time::Instant;

use critgpc::gpc_kg::{
    assemble_and_evolve, critical_eta_from_loci, critical_eta_from_samples, gpc_mean, nested_mean,
    quadrature_mean, sample_fields, uniform_etas, GpcKgSystem, LocusSnapshot,
};
use critgpc::gpc_sg::{
    eps_estimate, evolve_gpc_sg_legendre_eps, evolve_gpc_sg_velocity, velocity_estimate, ChaosRun,
    ChaosSettings, VelocityLaw,
};
use critgpc::kleingordon::{
    critical_eta_by_evolution, critical_eta_discrete, discrete_steady_state, evolve_kg,
    linearized_sg_critical, steady_state_analytic, KgConfig, KgDiscretization,
};
use critgpc::sinegordon::{
    amplitude_classifier, bisect_critical, evolve_sg, velocity_classifier, Direction, SgConfig,
};
use critgpc::spectral1d::{build_grid, consistent_delta};

use crate::config::{BisectParameter, Experiment, RunConfig, SweepKind};
use crate::output::{Cell, Sink};
use crate::CliError;

pub(crate) fn dispatch(
    exp: Experiment,
    cfg: &RunConfig,
    sink: &mut Sink,
) -> Result<Value, CliError> {
    match exp {
        Experiment::KgRun => kg_run(cfg, sink),
        Experiment::KgCritical => kg_critical(cfg, sink),
        Experiment::KgGpc => kg_gpc(cfg, sink),
        Experiment::SgRun => sg_run(cfg, sink),
        Experiment::SgBisect => sg_bisect(cfg, sink),
        Experiment::SgGpcV => sg_gpc_velocity(cfg, sink, false),
        Experiment::SgGpcHermite => sg_gpc_velocity(cfg, sink, true),
        Experiment::SgGpcEps => sg_gpc_eps(cfg, sink),
        Experiment::Convergence => convergence(cfg, sink),
        Experiment::MeanCompare => mean_compare(cfg, sink),
    }
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn kg_run(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let k = &cfg.kg;
    if k.eta.is_empty() {
        return Err(invalid("kg.eta: need at least one strength"));
    }
    let mut runs = Vec::new();
    for (i, &eta) in k.eta.iter().enumerate() {
        let config = KgConfig {
            eta,
            alpha: 0.0,
            m: k.m,
            dt: k.dt,
            t_final: k.t_final,
            linearized_sg: k.linearized_sg,
            record_interval: k.record_interval,
        };
        config.validate()?;
        let grid = build_grid(k.m)?;
        let run = evolve_kg(&config, &grid.sample(|x| 1.0 + x))?;
        let rows: Vec<Vec<Cell>> = run
            .rows()
            .map(|r| r.iter().map(|&v| Cell::from(v)).collect())
            .collect();
        let name = format!("kg_run_{i}.csv");
        sink.csv(&name, &["t", "E", "Edot", "u_at_x1"], &rows)?;

        let checkpoints: Vec<f64> = (1..=3).map(|j| k.t_final * j as f64 / 3.0).collect();
        let u_at: Vec<f64> = checkpoints
            .iter()
            .map(|&t| run.u_right_near(t).unwrap_or(f64::NAN))
            .collect();
        let e = &run.energy;
        let tail_start = k.t_final * 0.95;
        let tail_rate = e
            .times
            .iter()
            .zip(&e.energy_rate)
            .filter(|(t, _)| **t >= tail_start)
            .fold(0.0_f64, |acc, (_, r)| acc.max(r.abs()));
        let energy_change =
            e.energy[e.len() - 1] - e.energy_near(0.5 * k.t_final).unwrap_or(f64::NAN);
        let trend = if u_at.windows(2).all(|w| w[1] > w[0]) {
            "increasing"
        } else if u_at.windows(2).all(|w| w[1] < w[0]) {
            "decreasing"
        } else {
            "mixed"
        };
        runs.push(json!({
            "eta": eta,
            "csv": name,
            "checkpoints": checkpoints,
            "u_at_x1": u_at,
            "trend": trend,
            "energy_change": energy_change,
            "final_energy_rate": e.energy_rate[e.len() - 1],
            "max_abs_energy_rate_tail": tail_rate,
            "dt": run.dt,
        }));
    }
    Ok(json!({ "m": k.m, "t_final": k.t_final, "runs": runs }))
}

fn kg_critical(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let k = &cfg.kg;
    if k.m_values.is_empty() {
        return Err(invalid("kg.m_values: need at least one grid order"));
    }
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for &m in &k.m_values {
        let est = critical_eta_discrete(m)?;
        let mut entry = json!({
            "m": m,
            "m_plus_1": m + 1,
            "eta_n": est.value,
            "residual": est.diagnostic("residual"),
        });
        let mut evo = f64::NAN;
        if k.evolution_check {
            let b = critical_eta_by_evolution(m, 1.0, 1.02, k.evolution_t_final, k.evolution_tol)?;
            evo = b.value;
            entry["evolution"] = json!({ "value": b.value, "bracket": [b.bracket.0, b.bracket.1] });
        }
        let ss = discrete_steady_state(m, false, 1.0)?;
        let profile_error = ss
            .nodes
            .iter()
            .zip(ss.profile.iter())
            .filter(|(x, _)| x.abs() > 0.2)
            .map(|(&x, &u)| (u - if x < 0.0 { x + 1.0 } else { 1.0 }).abs())
            .fold(0.0_f64, f64::max);
        entry["profile_error"] = json!(profile_error);
        rows.push(vec![
            Cell::from(m + 1),
            est.value.into(),
            evo.into(),
            profile_error.into(),
        ]);
        entries.push(entry);
    }
    sink.csv(
        "critical_eta.csv",
        &["m_plus_1", "eta_n", "eta_evolution", "profile_error"],
        &rows,
    )?;

    let mut analytic = Vec::new();
    for &alpha in &k.alphas {
        let s = steady_state_analytic(alpha, 1.0)?;
        analytic.push(json!({ "alpha": alpha, "critical_eta": s.critical_eta }));
    }
    let lin = linearized_sg_critical();
    let jump = (lin.derivative_left(0.0) - lin.derivative_right(0.0)) / lin.eval(0.0);
    Ok(json!({
        "table": entries,
        "analytic": analytic,
        "linearized_sg": { "critical_eta": lin.critical_eta, "jump_ratio": jump },
    }))
}

fn kg_gpc(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let g = &cfg.gpc_kg;
    if g.snapshots.len() < 2 {
        return Err(invalid("gpc_kg.snapshots: need at least two times"));
    }
    let disc = KgDiscretization::aligned(g.m, g.snapshots[0])?;
    let system = GpcKgSystem::new(g.n_order, g.a, g.b, disc.clone())?;
    let start = Instant::now();
    let states = assemble_and_evolve(&system, &g.snapshots)?;
    let loci: Vec<LocusSnapshot> = states.iter().map(LocusSnapshot::from_state).collect();
    let est = critical_eta_from_loci(&loci, g.a, g.b, g.locus_samples)?;
    let gpc_seconds = start.elapsed().as_secs_f64();

    for st in &states {
        let header: Vec<String> = std::iter::once("x".to_string())
            .chain((0..=g.n_order).map(|l| format!("mode_{l}")))
            .collect();
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<Cell>> = (0..st.fields.nrows())
            .map(|j| {
                std::iter::once(Cell::from(disc.grid.nodes[j]))
                    .chain(st.fields.row(j).iter().map(|&v| Cell::from(v)))
                    .collect()
            })
            .collect();
        sink.csv(&format!("modes_t{}.csv", st.t.round()), &header, &rows)?;
    }
    let mut header = vec!["xi".to_string(), "eta".to_string()];
    header.extend(loci.iter().map(|l| format!("u_t{}", l.t_final.round())));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let pts = g.locus_output_points.max(2);
    let rows: Vec<Vec<Cell>> = (0..pts)
        .map(|i| {
            let xi = -1.0 + 2.0 * i as f64 / (pts - 1) as f64;
            let mut r = vec![Cell::from(xi), system.eta_of(xi).into()];
            r.extend(loci.iter().map(|l| Cell::from(l.eval(xi))));
            r
        })
        .collect();
    sink.csv("loci.csv", &header, &rows)?;

    let mut result = json!({
        "critical": est,
        "gpc_seconds": gpc_seconds,
        "dt": disc.dt,
    });
    if g.mc_samples > 0 {
        let start = Instant::now();
        let etas = uniform_etas(g.a, g.b, g.mc_samples);
        let fields = sample_fields(&disc, &etas, &g.snapshots);
        let right = disc.grid.m;
        let sampled: Vec<Vec<f64>> = (0..g.snapshots.len())
            .map(|k| fields.iter().map(|f| f[k][right]).collect())
            .collect();
        let mc = critical_eta_from_samples(&etas, &sampled, &g.snapshots)?;
        let mc_seconds = start.elapsed().as_secs_f64();
        let mut header = vec!["eta".to_string()];
        header.extend(g.snapshots.iter().map(|t| format!("u_t{}", t.round())));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        let rows: Vec<Vec<Cell>> = etas
            .iter()
            .enumerate()
            .map(|(i, &eta)| {
                std::iter::once(Cell::from(eta))
                    .chain(sampled.iter().map(|s| Cell::from(s[i])))
                    .collect()
            })
            .collect();
        sink.csv("mc_loci.csv", &header, &rows)?;
        result["mc"] = json!({
            "critical": mc,
            "samples": g.mc_samples,
            "seconds": mc_seconds,
            "difference": (mc.value - est.value).abs(),
        });
    }
    Ok(result)
}

fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// `(M, Ok((l2, max)))` or the row's error message.
type McRow = (usize, Result<(f64, f64), String>);

/// Monte Carlo error against the chaos mean for each `M`, from one set of
/// solves on the finest nested grid.
fn mc_error_rows(
    cfg: &RunConfig,
    disc: &KgDiscretization,
    reference: &DVector<f64>,
    sweep: &[usize],
) -> Result<Vec<McRow>, CliError> {
    let g = &cfg.gpc_kg;
    let finest = sweep.iter().copied().max().unwrap_or(0);
    if finest < 2 {
        return Err(invalid("mc sweep: need sample counts of at least 2"));
    }
    let fields = sample_fields(disc, &uniform_etas(g.a, g.b, finest), &[g.t_mean]);
    Ok(sweep
        .iter()
        .map(|&m| {
            let row = nested_mean(&fields, finest, m)
                .map(|mean| {
                    let d = &mean[0] - reference;
                    (d.norm(), d.amax())
                })
                .map_err(|e| e.to_string());
            (m, row)
        })
        .collect())
}

fn mean_compare(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let g = &cfg.gpc_kg;
    if g.mc_sweep.is_empty() {
        return Err(invalid("gpc_kg.mc_sweep: need at least one sample count"));
    }
    let disc = KgDiscretization::aligned(g.m, g.t_mean)?;
    let system = GpcKgSystem::new(g.n_order, g.a, g.b, disc.clone())?;
    let start = Instant::now();
    let state = assemble_and_evolve(&system, &[g.t_mean])?;
    let gpc = gpc_mean(&state[0]);
    let gpc_seconds = start.elapsed().as_secs_f64();
    let quad = quadrature_mean(&disc, g.a, g.b, g.n_quad, &[g.t_mean])?.remove(0);
    let start = Instant::now();
    let rows = mc_error_rows(cfg, &disc, &gpc, &g.mc_sweep)?;
    let mc_seconds = start.elapsed().as_secs_f64();

    let mut table = Vec::new();
    let (mut lx, mut ly) = (Vec::new(), Vec::new());
    for (m, r) in &rows {
        match r {
            Ok((l2, linf)) => {
                table.push(vec![
                    Cell::from(*m),
                    (*l2).into(),
                    (*linf).into(),
                    "".into(),
                ]);
                lx.push((*m as f64).ln());
                ly.push(l2.ln());
            }
            Err(e) => table.push(vec![
                Cell::from(*m),
                f64::NAN.into(),
                f64::NAN.into(),
                e.clone().into(),
            ]),
        }
    }
    sink.csv(
        "mc_error.csv",
        &["M", "l2_error", "max_error", "error"],
        &table,
    )?;
    let profile: Vec<Vec<Cell>> = (0..gpc.len())
        .map(|j| vec![disc.grid.nodes[j].into(), gpc[j].into(), quad[j].into()])
        .collect();
    sink.csv(
        "mean_profiles.csv",
        &["x", "gpc_mean", "quadrature_mean"],
        &profile,
    )?;
    let slope = if lx.len() >= 2 {
        least_squares_slope(&lx, &ly)
    } else {
        f64::NAN
    };
    let errors: Vec<f64> = ly.iter().map(|v| v.exp()).collect();
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    Ok(json!({
        "t_final": g.t_mean,
        "gpc_vs_quadrature_max": (&gpc - &quad).amax(),
        "mc_sweep": g.mc_sweep,
        "mc_l2_errors": errors,
        "loglog_slope": slope,
        "monotone_decay": monotone,
        "gpc_seconds": gpc_seconds,
        "mc_seconds": mc_seconds,
    }))
}

fn sg_base(cfg: &RunConfig) -> Result<SgConfig, CliError> {
    let s = &cfg.sg;
    let velocity = *s
        .velocity
        .first()
        .ok_or_else(|| invalid("sg.velocity: need at least one value"))?;
    let base = SgConfig {
        velocity,
        epsilon: s.epsilon,
        half_length: s.half_length,
        x0: s.x0,
        m: s.m,
        dt: s.dt,
        t_final: s.t_final,
        sample_interval: s.sample_interval,
    };
    base.validate()?;
    Ok(base)
}

fn sg_run(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let base = sg_base(cfg)?;
    let mut runs = Vec::new();
    for (i, &v) in cfg.sg.velocity.iter().enumerate() {
        let run = evolve_sg(&SgConfig {
            velocity: v,
            ..base.clone()
        })?;
        let rows: Vec<Vec<Cell>> = run
            .samples
            .iter()
            .map(|s| {
                vec![
                    s.t.into(),
                    s.u_right.into(),
                    s.front.unwrap_or(f64::NAN).into(),
                ]
            })
            .collect();
        let name = format!("sg_run_{i}.csv");
        sink.csv(&name, &["t", "u_L", "front"], &rows)?;
        runs.push(json!({
            "velocity": v,
            "outcome": run.outcome.kind.to_string(),
            "terminal_value": run.outcome.terminal_value,
            "csv": name,
        }));
    }
    Ok(json!({ "runs": runs }))
}

fn bisection_json(
    sink: &mut Sink,
    name: &str,
    b: &critgpc::sinegordon::Bracket,
) -> Result<Value, CliError> {
    let rows: Vec<Vec<Cell>> = b
        .log
        .iter()
        .map(|s| {
            vec![
                Cell::from(s.iteration),
                s.point.into(),
                s.outcome.to_string().into(),
            ]
        })
        .collect();
    sink.csv(name, &["iteration", "point", "outcome"], &rows)?;
    Ok(json!({
        "lo": b.lo,
        "hi": b.hi,
        "midpoint": b.midpoint(),
        "width": b.width(),
        "runs": b.log.len(),
    }))
}

fn sg_bisect(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let base = sg_base(cfg)?;
    let b = &cfg.bisect;
    let bracket = match b.parameter {
        BisectParameter::Velocity => bisect_critical(
            b.lo,
            b.hi,
            velocity_classifier(base),
            b.tol,
            Direction::TrappedBelow,
        )?,
        BisectParameter::Epsilon => bisect_critical(
            b.lo,
            b.hi,
            amplitude_classifier(base),
            b.tol,
            Direction::PassBelow,
        )?,
    };
    Ok(json!({ "bracket": bisection_json(sink, "bisection.csv", &bracket)? }))
}

fn chaos_settings(cfg: &RunConfig) -> ChaosSettings {
    ChaosSettings {
        n_order: cfg.chaos.n_order,
        n_quad: cfg.chaos.n_quad,
    }
}

fn write_chaos(sink: &mut Sink, run: &ChaosRun) -> Result<(), CliError> {
    let profile: Vec<Vec<Cell>> = (0..run.nodes.len())
        .map(|j| vec![run.nodes[j].into(), run.mean[j].into(), run.std[j].into()])
        .collect();
    sink.csv("mean_std.csv", &["x", "mean", "std"], &profile)?;
    let header: Vec<String> = std::iter::once("x".to_string())
        .chain((0..run.modes.ncols()).map(|l| format!("mode_{l}")))
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<Cell>> = (0..run.nodes.len())
        .map(|j| {
            std::iter::once(Cell::from(run.nodes[j]))
                .chain(run.modes.row(j).iter().map(|&v| Cell::from(v)))
                .collect()
        })
        .collect();
    sink.csv("modes.csv", &header, &rows)?;
    let series: Vec<Vec<Cell>> = run
        .mean_right
        .iter()
        .map(|&(t, u)| vec![t.into(), u.into()])
        .collect();
    sink.csv("mean_at_L.csv", &["t", "mean_u_L"], &series)
}

fn sg_gpc_velocity(cfg: &RunConfig, sink: &mut Sink, hermite: bool) -> Result<Value, CliError> {
    let c = &cfg.chaos;
    let law = if hermite {
        VelocityLaw::TruncatedNormal {
            mu: c.mu,
            sigma: c.sigma,
            alpha: c.alpha,
            beta: c.beta,
        }
    } else {
        // a degenerate interval leaves nothing to invert
        if c.va >= c.vb || c.va.is_nan() || c.vb.is_nan() {
            return Err(invalid(format!(
                "chaos.Va/Vb: need Va < Vb, got [{}, {}]",
                c.va, c.vb
            )));
        }
        VelocityLaw::Uniform { va: c.va, vb: c.vb }
    };
    law.validate()?;
    let base = SgConfig {
        velocity: law.velocity(0.0),
        ..sg_base(cfg)?
    };
    let start = Instant::now();
    let run = evolve_gpc_sg_velocity(&base, law, &chaos_settings(cfg))?;
    let seconds = start.elapsed().as_secs_f64();
    write_chaos(sink, &run)?;
    let est = velocity_estimate(&run, law);
    Ok(json!({
        "u_mean_at_L": run.terminal_mean(),
        "std_at_L": run.std[run.std.len() - 1],
        "critical": est,
        "V_c": est.value,
        "right_modes": run.right_modes(),
        "warnings": run.warnings,
        "seconds": seconds,
    }))
}

fn sg_gpc_eps(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let c = &cfg.chaos;
    if c.eps_a >= c.eps_b || c.eps_a.is_nan() || c.eps_b.is_nan() {
        return Err(invalid(format!(
            "chaos.eps_a/eps_b: need eps_a < eps_b, got [{}, {}]",
            c.eps_a, c.eps_b
        )));
    }
    let base = sg_base(cfg)?;
    let start = Instant::now();
    let run = evolve_gpc_sg_legendre_eps(&base, c.eps_a, c.eps_b, &chaos_settings(cfg))?;
    let seconds = start.elapsed().as_secs_f64();
    write_chaos(sink, &run)?;
    let est = eps_estimate(&run, c.eps_a, c.eps_b);
    let mut result = json!({
        "velocity": base.velocity,
        "u_mean_at_L": run.terminal_mean(),
        "std_at_L": run.std[run.std.len() - 1],
        "critical": est,
        "eps_c": est.value,
        "right_modes": run.right_modes(),
        "seconds": seconds,
    });
    if c.cross_check {
        // both ends classifying alike is a finding here, not a failure
        result["bisection"] = match bisect_critical(
            c.eps_a,
            c.eps_b,
            amplitude_classifier(base),
            c.cross_check_tol,
            Direction::PassBelow,
        ) {
            Ok(b) => bisection_json(sink, "bisection.csv", &b)?,
            Err(critgpc::Error::NoBracket(msg)) => json!({ "error": msg }),
            Err(e) => return Err(e.into()),
        };
    }
    Ok(result)
}

fn convergence(cfg: &RunConfig, sink: &mut Sink) -> Result<Value, CliError> {
    let sw = &cfg.sweep;
    if sw.values.is_empty() {
        return Err(invalid("sweep.values: sweep is empty"));
    }
    let as_count = |v: f64| -> Result<usize, CliError> {
        if v >= 1.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(invalid(format!(
                "sweep.values: `{v}` is not a positive integer"
            )))
        }
    };
    let counts = sw
        .values
        .iter()
        .map(|&v| as_count(v))
        .collect::<Result<Vec<_>, _>>()?;
    match sw.kind {
        SweepKind::CriticalEta => {
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for &m in &counts {
                match critical_eta_discrete(m) {
                    Ok(e) => {
                        rows.push(vec![Cell::from(m + 1), e.value.into(), "".into()]);
                        values.push(json!({ "m_plus_1": m + 1, "eta_n": e.value }));
                    }
                    Err(e) => {
                        rows.push(vec![
                            Cell::from(m + 1),
                            f64::NAN.into(),
                            e.to_string().into(),
                        ]);
                        values.push(json!({ "m_plus_1": m + 1, "error": e.to_string() }));
                    }
                }
            }
            sink.csv("convergence.csv", &["m_plus_1", "eta_n", "error"], &rows)?;
            Ok(json!({ "kind": "critical-eta", "rows": values }))
        }
        SweepKind::DeltaMass => {
            let mut rows = Vec::new();
            let mut values = Vec::new();
            for &m in &counts {
                let mass = build_grid(m)
                    .and_then(|g| consistent_delta(&g).map(|d| g.integrate(&d.values)));
                match mass {
                    Ok(v) => {
                        rows.push(vec![Cell::from(m + 1), v.into(), "".into()]);
                        values.push(json!({ "m_plus_1": m + 1, "mass": v }));
                    }
                    Err(e) => {
                        rows.push(vec![
                            Cell::from(m + 1),
                            f64::NAN.into(),
                            e.to_string().into(),
                        ]);
                        values.push(json!({ "m_plus_1": m + 1, "error": e.to_string() }));
                    }
                }
            }
            sink.csv(
                "convergence.csv",
                &["m_plus_1", "delta_mass", "error"],
                &rows,
            )?;
            Ok(json!({ "kind": "delta-mass", "rows": values }))
        }
        SweepKind::McError => {
            let g = &cfg.gpc_kg;
            let disc = KgDiscretization::aligned(g.m, g.t_mean)?;
            let system = GpcKgSystem::new(g.n_order, g.a, g.b, disc.clone())?;
            let gpc = gpc_mean(&assemble_and_evolve(&system, &[g.t_mean])?[0]);
            let finest = counts.iter().copied().max().unwrap_or(0);
            let usable: Vec<usize> = counts.iter().copied().filter(|&m| m >= 2).collect();
            let mut rows_out = Vec::new();
            let mut values = Vec::new();
            let (mut lx, mut ly) = (Vec::new(), Vec::new());
            let rows = if finest >= 2 {
                mc_error_rows(cfg, &disc, &gpc, &usable)?
            } else {
                Vec::new()
            };
            for &m in &counts {
                match rows.iter().find(|(mm, _)| *mm == m).map(|(_, r)| r.clone()) {
                    Some(Ok((l2, _))) => {
                        rows_out.push(vec![Cell::from(m), l2.into(), "".into()]);
                        values.push(json!({ "M": m, "l2_error": l2 }));
                        lx.push((m as f64).ln());
                        ly.push(l2.ln());
                    }
                    Some(Err(e)) => {
                        rows_out.push(vec![Cell::from(m), f64::NAN.into(), e.clone().into()]);
                        values.push(json!({ "M": m, "error": e }));
                    }
                    None => {
                        let e = "need at least 2 intervals".to_string();
                        rows_out.push(vec![Cell::from(m), f64::NAN.into(), e.clone().into()]);
                        values.push(json!({ "M": m, "error": e }));
                    }
                }
            }
            sink.csv("convergence.csv", &["M", "l2_error", "error"], &rows_out)?;
            let slope = if lx.len() >= 2 {
                least_squares_slope(&lx, &ly)
            } else {
                f64::NAN
            };
            Ok(json!({ "kind": "mc-error", "rows": values, "loglog_slope": slope }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = [1.0_f64, 2.0, 4.0, 8.0].iter().map(|v| v.ln()).collect();
        let y: Vec<f64> = [1.0_f64, 2.0, 4.0, 8.0]
            .iter()
            .map(|v| (3.0 * v.powi(-2)).ln())
            .collect();
        assert!((least_squares_slope(&x, &y) + 2.0).abs() < 1e-12);
    }
}
