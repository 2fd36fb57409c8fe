//! One function per subcommand. Each writes its files through [`Output`]
//! and prints a short summary on stdout.

use qcwalk_core::analysis::{
    detuning_sweep, fidelity_decay, fractal_refinement, inversion_map, jaccard, linspace, lyapunov_max, position_map,
    scattering_scan, uniform_grid, MapRow,
};
use qcwalk_core::model::{bloch_from_amplitudes, FieldInit};
use qcwalk_core::observables::{dominant_peak, power_spectrum, purity_variance, AtomicReduction, TimeSeries};
use qcwalk_core::presets::{Experiment, MapKind, Representation, RunConfig};
use qcwalk_core::{integrate, Evolvable, StepController};

use crate::error::CliError;
use crate::output::{num, Output};

pub fn run(experiment: Experiment, c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    match experiment {
        Experiment::Simulate => simulate(c, out, plot),
        Experiment::Spectrum => spectrum(c, out, plot),
        Experiment::Lyapunov => lyapunov(c, out, plot),
        Experiment::Fidelity => fidelity(c, out, plot),
        Experiment::Sweep => sweep(c, out, plot),
        Experiment::Scatter => scatter(c, out, plot),
        Experiment::Maps => maps(c, out, plot),
    }?;
    out.manifest()?;
    Ok(())
}

const TRAJECTORY_COLUMNS: [&str; 9] = ["tau", "x", "p", "z", "P", "S_L", "S_N", "E", "R_drift"];

/// One trajectory row per sample; `R_drift` is the largest rung-norm
/// change since `τ = 0`.
fn trajectory_rows<S: Evolvable + AtomicReduction>(
    s0: &S,
    c: &RunConfig,
    tau_end: f64,
    dt: f64,
) -> Result<Vec<[f64; 9]>, CliError> {
    let traj = integrate(s0, &c.system, tau_end, &c.system.controller(), dt)?;
    let r0 = s0.rung_norms();
    traj.samples
        .iter()
        .map(|s| {
            let red = s.reduced()?;
            let drift = s.rung_norms().iter().zip(&r0).map(|(r, q)| (r - q).abs()).fold(0.0, f64::max);
            Ok([
                s.tau(),
                s.position(),
                s.momentum(),
                s.inversion(),
                red.purity(),
                red.linear_entropy(),
                red.von_neumann_entropy(),
                s.energy(&c.system),
                drift,
            ])
        })
        .collect()
}

/// Rows for the configured representation. A coherent field populates
/// every rung, and only the amplitude form carries the coherences its
/// purity needs.
fn sampled(c: &RunConfig, form: Representation, tau_end: f64, dt: f64) -> Result<Vec<[f64; 9]>, CliError> {
    let amp = c.initial.build(&c.system)?;
    match form {
        Representation::Amplitude => trajectory_rows(&amp, c, tau_end, dt),
        Representation::Bloch => {
            if matches!(c.initial.field, FieldInit::Coherent(_)) {
                return Err(CliError::Config("a coherent field needs simulate.form = \"amplitude\"".into()));
            }
            trajectory_rows(&bloch_from_amplitudes(&amp), c, tau_end, dt)
        }
    }
}

fn natural_form(c: &RunConfig) -> Representation {
    match c.initial.field {
        FieldInit::Fock(_) => Representation::Bloch,
        FieldInit::Coherent(_) => Representation::Amplitude,
    }
}

fn simulate(c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    let rows = sampled(c, c.simulate.form, c.simulate.tau_end, c.simulate.sample_dt)?;
    let max_drift = rows.iter().map(|r| r[8]).fold(0.0, f64::max);
    let e0 = rows[0][7];
    let max_de = rows.iter().map(|r| (r[7] - e0).abs()).fold(0.0, f64::max);
    out.csv("", &TRAJECTORY_COLUMNS, rows.iter().map(|r| r.iter().map(|&v| num(v)).collect()))?;
    println!("samples {}; max rung-norm drift {max_drift:.3e}; max energy drift {max_de:.3e}", rows.len());
    if plot {
        out.gnuplot("tau", "purity / inversion", &[("", "1:5", "P"), ("", "1:4", "z")], "set style data lines\n")?;
    }
    Ok(())
}

fn spectrum(c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    let s = &c.spectrum;
    let rows = sampled(c, natural_form(c), s.tau_end, s.sample_dt)?;
    let series = TimeSeries::new(0.0, s.sample_dt, rows.iter().map(|r| r[4]).collect())?;
    let spec = power_spectrum(&series, s.window)?;
    out.csv(".series", &["tau", "value"], rows.iter().map(|r| vec![num(r[0]), num(r[4])]))?;
    out.csv("", &["freq", "magnitude"], spec.iter().map(|&(f, m)| vec![num(f), num(m)]))?;
    if let Some((f, m)) = dominant_peak(&spec) {
        println!("dominant purity harmonic at omega/2pi = {f:.6} (magnitude {m:.4e}); sigma_P = {:.6e}", purity_variance(&series)?);
    }
    if plot {
        out.gnuplot("omega / 2 pi", "|FFT of P|", &[("", "1:2", "spectrum")], "set style data lines\n")?;
    }
    Ok(())
}

fn projected(c: &RunConfig) -> StepController {
    let mut ctrl = c.system.controller();
    ctrl.rung_projection = true;
    ctrl
}

fn lyapunov(c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    let s0 = bloch_from_amplitudes(&c.initial.build(&c.system)?);
    let r = lyapunov_max(&s0, &c.system, &c.lyapunov, &projected(c))?;
    out.csv("", &["tau", "lambda"], r.curve.iter().map(|&(t, l)| vec![num(t), num(l)]))?;
    out.report(&[
        ("lambda".into(), num(r.lambda)),
        ("lambda_raw".into(), num(r.lambda_raw)),
        ("last_quarter_spread".into(), num(r.last_quarter_spread)),
        ("renorm_interval".into(), num(r.renorm_interval)),
        ("d0".into(), num(r.d0)),
        ("horizon".into(), num(r.horizon)),
    ])?;
    println!("lambda = {:.6} (raw {:.6}, last-quarter spread {:.2e})", r.lambda, r.lambda_raw, r.last_quarter_spread);
    if plot {
        out.gnuplot("tau", "running lambda", &[("", "1:2", "lambda")], "set style data lines\nset logscale x\n")?;
    }
    Ok(())
}

fn fidelity(c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    let s0 = c.initial.build(&c.system)?;
    let r = fidelity_decay(&s0, &c.system, &c.fidelity, &c.system.controller())?;
    let rows = r.series.values.iter().enumerate().map(|(i, &f)| {
        vec![num(r.series.time(i)), num(f), num((1.0 - f).max(0.0).log10())]
    });
    out.csv("", &["tau", "f", "log10_1mf"], rows)?;
    let mut report = vec![("delta_delta".to_string(), num(r.delta_delta))];
    match r.fit {
        Some(fit) => {
            report.extend([
                ("rate".to_string(), num(fit.rate)),
                ("slope".to_string(), num(fit.slope)),
                ("fit_start".to_string(), num(fit.t_start)),
                ("fit_end".to_string(), num(fit.t_end)),
                ("fit_points".to_string(), fit.points.to_string()),
            ]);
            println!("fidelity decay rate {:.6} (ln(1-f) slope {:.6} over tau [{}, {}])", fit.rate, fit.slope, fit.t_start, fit.t_end);
        }
        None => {
            report.push(("rate".to_string(), "none".to_string()));
            println!("no decay: 1 - f stays below 10^{}", c.fidelity.fit_ceiling_log10);
        }
    }
    out.report(&report)?;
    if plot {
        out.gnuplot("tau", "log10(1 - f)", &[("", "1:3", "fidelity")], "set style data lines\n")?;
    }
    Ok(())
}

fn all_failed(failed: usize, total: usize, what: &str) -> Result<(), CliError> {
    if failed > 0 {
        log::warn!("{failed} of {total} {what} failed");
    }
    if failed == total {
        return Err(CliError::Numerical(qcwalk_core::Error::Unsupported(format!("at least one successful {what}"))));
    }
    Ok(())
}

fn sweep(c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    let s = &c.sweep;
    let grid = uniform_grid(s.start, s.end, s.step)?;
    let rows = detuning_sweep(&grid, &c.system, &c.initial, &s.config, &c.system.controller())?;
    out.csv(
        "",
        &["delta", "lambda", "sigma_P", "lambda_raw", "lambda_spread", "flatness", "irregular", "error"],
        rows.iter().map(|r| {
            vec![
                num(r.delta),
                num(r.lambda),
                num(r.sigma_p),
                num(r.lambda_raw),
                num(r.lambda_spread),
                num(r.flatness),
                u8::from(r.irregular).to_string(),
                r.error.as_deref().map(csv_text).unwrap_or_default(),
            ]
        }),
    )?;
    let chaotic: Vec<bool> = rows.iter().map(|r| r.lambda > s.lambda_threshold).collect();
    let irregular: Vec<bool> = rows.iter().map(|r| r.irregular).collect();
    println!(
        "{} detunings; lambda > {}: {}; irregular purity: {}; Jaccard overlap {:.3}",
        rows.len(),
        s.lambda_threshold,
        chaotic.iter().filter(|&&b| b).count(),
        irregular.iter().filter(|&&b| b).count(),
        jaccard(&chaotic, &irregular)
    );
    if plot {
        out.gnuplot(
            "delta",
            "lambda",
            &[("", "1:2", "lambda"), ("", "1:3 axes x1y2", "sigma_P")],
            "set style data linespoints\nset y2label 'sigma_P'\nset y2tics\n",
        )?;
    }
    all_failed(rows.iter().filter(|r| r.error.is_some()).count(), rows.len(), "sweep rows")
}

/// Error messages may contain commas; they go out quoted.
fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "'"))
}

fn scatter(c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    let s = &c.scatter;
    let ctrl = c.system.controller();
    let recs = scattering_scan(&linspace(s.window.0, s.window.1, s.points), &c.system, &c.initial, &s.config, &ctrl)?;
    out.csv(
        "",
        &["p0", "t_exit", "turns", "x_exit", "z_out", "timed_out", "error"],
        recs.iter().map(|r| {
            vec![
                num(r.p0),
                num(r.t_exit),
                r.turns.to_string(),
                num(r.x_exit),
                num(r.z_out),
                u8::from(r.timed_out).to_string(),
                r.error.as_deref().map(csv_text).unwrap_or_default(),
            ]
        }),
    )?;
    let trapped = recs.iter().filter(|r| r.timed_out).count();
    println!("{} launches; {trapped} still trapped at tau_max = {}", recs.len(), s.config.tau_max);
    if !s.levels.is_empty() {
        let levels = fractal_refinement(s.window, &s.levels, &c.system, &c.initial, &s.config, &ctrl)?;
        out.csv(
            ".refinement",
            &["points", "segments", "growth", "timed_out", "failed"],
            levels.iter().map(|l| {
                vec![
                    l.points.to_string(),
                    l.segments.to_string(),
                    l.growth.map(num).unwrap_or_default(),
                    l.timed_out.to_string(),
                    l.failed.to_string(),
                ]
            }),
        )?;
        for l in &levels {
            println!("refinement {} points: {} monotone segments", l.points, l.segments);
        }
    }
    if plot {
        out.gnuplot(
            "p0",
            "exit time",
            &[("", "1:2", "T"), ("", "1:3 axes x1y2", "turns")],
            "set style data points\nset y2label 'turns'\nset y2tics\n",
        )?;
    }
    all_failed(recs.iter().filter(|r| r.error.is_some()).count(), recs.len(), "launches")
}

fn maps(c: &RunConfig, out: &Output, plot: bool) -> Result<(), CliError> {
    let m = &c.maps;
    let grid = linspace(m.range.0, m.range.1, m.points);
    let ctrl = c.system.controller();
    let (input, prefix, rows): (&str, &str, Vec<MapRow>) = match m.kind {
        MapKind::Position => ("p0", "x", position_map(&grid, &c.system, &c.initial, &m.snapshots, &ctrl)?),
        MapKind::Inversion => ("z_in", "z", inversion_map(&grid, &c.system, &c.initial, m.phase, &m.snapshots, &ctrl)?),
    };
    let mut columns = vec![input.to_string()];
    columns.extend(m.snapshots.iter().map(|t| format!("{prefix}_{t}")));
    columns.push("error".into());
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    out.csv(
        "",
        &column_refs,
        rows.iter().map(|r| {
            let mut v = vec![num(r.input)];
            let missing = vec![f64::NAN; m.snapshots.len()];
            let values = if r.outputs.is_empty() { &missing } else { &r.outputs };
            v.extend(values.iter().map(|&y| num(y)));
            v.push(r.error.as_deref().map(csv_text).unwrap_or_default());
            v
        }),
    )?;
    for (i, t) in m.snapshots.iter().enumerate() {
        let col: Vec<f64> = rows.iter().filter(|r| r.error.is_none()).map(|r| r.outputs[i]).collect();
        println!("tau = {t}: total variation {:.6}", qcwalk_core::analysis::total_variation(&col));
    }
    if plot {
        let usings: Vec<String> = (0..m.snapshots.len()).map(|i| format!("1:{}", i + 2)).collect();
        let series: Vec<(&str, &str, &str)> =
            usings.iter().zip(&columns[1..]).map(|(u, name)| ("", u.as_str(), name.as_str())).collect();
        out.gnuplot(input, prefix, &series, "set style data points\n")?;
    }
    all_failed(rows.iter().filter(|r| r.error.is_some()).count(), rows.len(), "map rows")
}
