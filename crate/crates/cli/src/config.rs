//! Conversion between [`RunConfig`] and its TOML form. Every key is
//! required, so a manifest written by [`to_toml`] is a complete
//! description of a run and reads back to the identical configuration.

use num_complex::Complex64 as C64;
use toml::{Table, Value};

use qcwalk_core::analysis::{FidelityConfig, LyapunovConfig, ScatterConfig, SweepConfig};
use qcwalk_core::model::{AtomInit, FieldInit, InitialCondition, SystemParams};
use qcwalk_core::observables::Window;
use qcwalk_core::presets::{MapKind, MapsSpec, Representation, RunConfig, ScatterSpec, SimulateSpec, SpectrumSpec, SweepSpec};

use crate::error::CliError;

fn pair(v: (f64, f64)) -> Value {
    Value::Array(vec![Value::Float(v.0), Value::Float(v.1)])
}

fn complex(c: C64) -> Value {
    pair((c.re, c.im))
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn count(n: usize) -> Value {
    Value::Integer(n as i64)
}

fn section(entries: Vec<(&str, Value)>) -> Value {
    Value::Table(entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

pub fn to_toml(c: &RunConfig) -> Table {
    let s = &c.system;
    let i = &c.initial;
    let mut initial = match i.field {
        FieldInit::Fock(n) => vec![("field", Value::String("fock".into())), ("fock_n", count(n))],
        FieldInit::Coherent(alpha) => vec![("field", Value::String("coherent".into())), ("alpha", complex(alpha))],
    };
    initial.extend([
        ("atom_excited", complex(i.atom.amp_excited)),
        ("atom_ground", complex(i.atom.amp_ground)),
        ("x0", Value::Float(i.x0)),
        ("p0", Value::Float(i.p0)),
    ]);
    let sw = &c.sweep;
    let sc = &c.scatter;
    let m = &c.maps;
    let mut t = Table::new();
    let mut put = |name: &str, v| {
        t.insert(name.to_string(), v);
    };
    put(
        "system",
        section(vec![
            ("omega_r", Value::Float(s.omega_r)),
            ("delta", Value::Float(s.delta)),
            ("n_trunc", count(s.n_trunc)),
            ("rel_tol", Value::Float(s.rel_tol)),
            ("abs_tol", Value::Float(s.abs_tol)),
            ("leak_tol", Value::Float(s.leak_tol)),
        ]),
    );
    put("initial", section(initial));
    put(
        "simulate",
        section(vec![
            ("tau_end", Value::Float(c.simulate.tau_end)),
            ("sample_dt", Value::Float(c.simulate.sample_dt)),
            (
                "form",
                Value::String(match c.simulate.form {
                    Representation::Bloch => "bloch",
                    Representation::Amplitude => "amplitude",
                }
                .into()),
            ),
        ]),
    );
    put(
        "spectrum",
        section(vec![
            ("tau_end", Value::Float(c.spectrum.tau_end)),
            ("sample_dt", Value::Float(c.spectrum.sample_dt)),
            (
                "window",
                Value::String(match c.spectrum.window {
                    Window::Hann => "hann",
                    Window::Rectangular => "rectangular",
                }
                .into()),
            ),
        ]),
    );
    put(
        "lyapunov",
        section(vec![
            ("horizon", Value::Float(c.lyapunov.horizon)),
            ("renorm_interval", Value::Float(c.lyapunov.renorm_interval)),
            ("d0", Value::Float(c.lyapunov.d0)),
        ]),
    );
    put(
        "fidelity",
        section(vec![
            ("delta_delta", Value::Float(c.fidelity.delta_delta)),
            ("horizon", Value::Float(c.fidelity.horizon)),
            ("sample_dt", Value::Float(c.fidelity.sample_dt)),
            ("fit_ceiling_log10", Value::Float(c.fidelity.fit_ceiling_log10)),
        ]),
    );
    put(
        "sweep",
        section(vec![
            ("start", Value::Float(sw.start)),
            ("end", Value::Float(sw.end)),
            ("step", Value::Float(sw.step)),
            ("lambda_threshold", Value::Float(sw.lambda_threshold)),
            ("lyapunov_horizon", Value::Float(sw.config.lyapunov.horizon)),
            ("lyapunov_renorm_interval", Value::Float(sw.config.lyapunov.renorm_interval)),
            ("lyapunov_d0", Value::Float(sw.config.lyapunov.d0)),
            ("purity_window", pair(sw.config.window)),
            ("sample_dt", Value::Float(sw.config.sample_dt)),
            ("flatness_band", pair(sw.config.flatness_band)),
            ("flatness_threshold", Value::Float(sw.config.flatness_threshold)),
        ]),
    );
    put(
        "scatter",
        section(vec![
            ("window", pair(sc.window)),
            ("points", count(sc.points)),
            ("levels", Value::Array(sc.levels.iter().map(|&n| count(n)).collect())),
            ("tau_max", Value::Float(sc.config.tau_max)),
            ("hysteresis", Value::Float(sc.config.hysteresis)),
            ("time_tol", Value::Float(sc.config.time_tol)),
        ]),
    );
    put(
        "maps",
        section(vec![
            (
                "kind",
                Value::String(match m.kind {
                    MapKind::Position => "position",
                    MapKind::Inversion => "inversion",
                }
                .into()),
            ),
            ("range", pair(m.range)),
            ("points", count(m.points)),
            ("snapshots", floats(&m.snapshots)),
            ("phase", Value::Float(m.phase)),
        ]),
    );
    t
}

/// Typed lookups that record every missing or malformed key instead of
/// stopping at the first one.
struct Reader<'a> {
    root: &'a Table,
    missing: Vec<String>,
    invalid: Vec<String>,
    used: Vec<String>,
}

impl<'a> Reader<'a> {
    fn get(&mut self, sec: &str, key: &str) -> Option<&'a Value> {
        let path = format!("{sec}.{key}");
        self.used.push(path.clone());
        let v = self.root.get(sec).and_then(Value::as_table).and_then(|t| t.get(key));
        if v.is_none() {
            self.missing.push(path);
        }
        v
    }

    fn bad(&mut self, sec: &str, key: &str, want: &str) {
        self.invalid.push(format!("{sec}.{key} (expected {want})"));
    }

    fn float_of(v: &Value) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => None,
        }
    }

    fn f64(&mut self, sec: &str, key: &str) -> f64 {
        match self.get(sec, key).map(Self::float_of) {
            Some(Some(x)) => x,
            Some(None) => {
                self.bad(sec, key, "a number");
                f64::NAN
            }
            None => f64::NAN,
        }
    }

    fn usize(&mut self, sec: &str, key: &str) -> usize {
        match self.get(sec, key).map(|v| v.as_integer().and_then(|i| usize::try_from(i).ok())) {
            Some(Some(n)) => n,
            Some(None) => {
                self.bad(sec, key, "a non-negative integer");
                0
            }
            None => 0,
        }
    }

    fn choice<T: Copy>(&mut self, sec: &str, key: &str, options: &[(&str, T)]) -> Option<T> {
        let v = self.get(sec, key)?;
        let found = v.as_str().and_then(|s| options.iter().find(|(name, _)| *name == s)).map(|&(_, t)| t);
        if found.is_none() {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            self.bad(sec, key, &format!("one of {names:?}"));
        }
        found
    }

    fn f64_list(&mut self, sec: &str, key: &str) -> Vec<f64> {
        let Some(v) = self.get(sec, key) else { return Vec::new() };
        match v.as_array().map(|a| a.iter().map(Self::float_of).collect::<Option<Vec<_>>>()) {
            Some(Some(xs)) => xs,
            _ => {
                self.bad(sec, key, "an array of numbers");
                Vec::new()
            }
        }
    }

    fn pair(&mut self, sec: &str, key: &str) -> (f64, f64) {
        let Some(v) = self.get(sec, key) else { return (f64::NAN, f64::NAN) };
        match v.as_array().map(|a| a.iter().map(Self::float_of).collect::<Option<Vec<_>>>()) {
            Some(Some(xs)) if xs.len() == 2 => (xs[0], xs[1]),
            _ => {
                self.bad(sec, key, "a two-element array");
                (f64::NAN, f64::NAN)
            }
        }
    }

    fn complex(&mut self, sec: &str, key: &str) -> C64 {
        let (re, im) = self.pair(sec, key);
        C64::new(re, im)
    }

    fn usize_list(&mut self, sec: &str, key: &str) -> Vec<usize> {
        let Some(v) = self.get(sec, key) else { return Vec::new() };
        let parsed = v
            .as_array()
            .map(|a| a.iter().map(|x| x.as_integer().and_then(|i| usize::try_from(i).ok())).collect::<Option<Vec<_>>>());
        match parsed {
            Some(Some(xs)) => xs,
            _ => {
                self.bad(sec, key, "an array of non-negative integers");
                Vec::new()
            }
        }
    }

    /// Keys present in the file but never read.
    fn unused(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (sec, v) in self.root {
            match v.as_table() {
                Some(t) => out.extend(
                    t.keys().map(|k| format!("{sec}.{k}")).filter(|p| !self.used.contains(p)),
                ),
                None => out.push(sec.clone()),
            }
        }
        out
    }
}

/// Reads a complete configuration; all missing, malformed and unknown keys
/// are reported together.
pub fn from_toml(t: &Table) -> Result<RunConfig, CliError> {
    let mut r = Reader { root: t, missing: Vec::new(), invalid: Vec::new(), used: Vec::new() };
    let system = SystemParams {
        omega_r: r.f64("system", "omega_r"),
        delta: r.f64("system", "delta"),
        n_trunc: r.usize("system", "n_trunc"),
        rel_tol: r.f64("system", "rel_tol"),
        abs_tol: r.f64("system", "abs_tol"),
        leak_tol: r.f64("system", "leak_tol"),
    };
    let field = match r.choice("initial", "field", &[("fock", 0), ("coherent", 1)]) {
        Some(0) => FieldInit::Fock(r.usize("initial", "fock_n")),
        Some(_) => FieldInit::Coherent(r.complex("initial", "alpha")),
        None => FieldInit::Fock(0),
    };
    let amp_excited = r.complex("initial", "atom_excited");
    let amp_ground = r.complex("initial", "atom_ground");
    let initial = InitialCondition {
        field,
        atom: AtomInit { amp_excited, amp_ground },
        x0: r.f64("initial", "x0"),
        p0: r.f64("initial", "p0"),
    };
    let simulate = SimulateSpec {
        tau_end: r.f64("simulate", "tau_end"),
        sample_dt: r.f64("simulate", "sample_dt"),
        form: r
            .choice("simulate", "form", &[("bloch", Representation::Bloch), ("amplitude", Representation::Amplitude)])
            .unwrap_or(Representation::Bloch),
    };
    let spectrum = SpectrumSpec {
        tau_end: r.f64("spectrum", "tau_end"),
        sample_dt: r.f64("spectrum", "sample_dt"),
        window: r
            .choice("spectrum", "window", &[("hann", Window::Hann), ("rectangular", Window::Rectangular)])
            .unwrap_or(Window::Hann),
    };
    let lyapunov = LyapunovConfig {
        horizon: r.f64("lyapunov", "horizon"),
        renorm_interval: r.f64("lyapunov", "renorm_interval"),
        d0: r.f64("lyapunov", "d0"),
    };
    let fidelity = FidelityConfig {
        delta_delta: r.f64("fidelity", "delta_delta"),
        horizon: r.f64("fidelity", "horizon"),
        sample_dt: r.f64("fidelity", "sample_dt"),
        fit_ceiling_log10: r.f64("fidelity", "fit_ceiling_log10"),
    };
    let sweep = SweepSpec {
        start: r.f64("sweep", "start"),
        end: r.f64("sweep", "end"),
        step: r.f64("sweep", "step"),
        lambda_threshold: r.f64("sweep", "lambda_threshold"),
        config: SweepConfig {
            lyapunov: LyapunovConfig {
                horizon: r.f64("sweep", "lyapunov_horizon"),
                renorm_interval: r.f64("sweep", "lyapunov_renorm_interval"),
                d0: r.f64("sweep", "lyapunov_d0"),
            },
            window: r.pair("sweep", "purity_window"),
            sample_dt: r.f64("sweep", "sample_dt"),
            flatness_band: r.pair("sweep", "flatness_band"),
            flatness_threshold: r.f64("sweep", "flatness_threshold"),
        },
    };
    let scatter = ScatterSpec {
        window: r.pair("scatter", "window"),
        points: r.usize("scatter", "points"),
        levels: r.usize_list("scatter", "levels"),
        config: ScatterConfig {
            tau_max: r.f64("scatter", "tau_max"),
            hysteresis: r.f64("scatter", "hysteresis"),
            time_tol: r.f64("scatter", "time_tol"),
        },
    };
    let maps = MapsSpec {
        kind: r
            .choice("maps", "kind", &[("position", MapKind::Position), ("inversion", MapKind::Inversion)])
            .unwrap_or(MapKind::Inversion),
        range: r.pair("maps", "range"),
        points: r.usize("maps", "points"),
        snapshots: r.f64_list("maps", "snapshots"),
        phase: r.f64("maps", "phase"),
    };
    let mut problems = Vec::new();
    if !r.missing.is_empty() {
        problems.push(format!("missing keys: {}", r.missing.join(", ")));
    }
    if !r.invalid.is_empty() {
        problems.push(format!("malformed keys: {}", r.invalid.join(", ")));
    }
    let unused = r.unused();
    if !unused.is_empty() {
        problems.push(format!("unknown keys: {}", unused.join(", ")));
    }
    if !problems.is_empty() {
        return Err(CliError::Config(problems.join("; ")));
    }
    // the atom must be normalized; AtomInit::new checks it
    AtomInit::new(amp_excited, amp_ground).map_err(|e| CliError::Config(format!("initial atom: {e}")))?;
    let config = RunConfig { system, initial, simulate, spectrum, lyapunov, fidelity, sweep, scatter, maps };
    config.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

/// Applies `section.key=value`, with `value` in TOML syntax.
pub fn apply_override(t: &mut Table, assignment: &str) -> Result<(), CliError> {
    let bad = || CliError::Usage(format!("override {assignment:?} is not of the form section.key=value"));
    let (path, raw) = assignment.split_once('=').ok_or_else(bad)?;
    let (sec, key) = path.trim().split_once('.').ok_or_else(bad)?;
    let value = format!("v = {}", raw.trim())
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .ok_or_else(|| CliError::Usage(format!("override value {raw:?} is not a TOML value")))?;
    let section = t
        .entry(sec.to_string())
        .or_insert_with(|| Value::Table(Table::new()))
        .as_table_mut()
        .ok_or_else(bad)?;
    section.insert(key.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use qcwalk_core::presets::presets;

    #[test]
    fn every_preset_round_trips_through_text() {
        for p in presets() {
            let text = to_toml(&p.config).to_string();
            let back = from_toml(&text.parse::<Table>().unwrap()).unwrap();
            assert_eq!(back, p.config, "{}", p.name);
        }
    }

    #[test]
    fn empty_config_lists_every_missing_key() {
        let Err(CliError::Config(msg)) = from_toml(&Table::new()) else { panic!("empty config accepted") };
        for key in ["system.omega_r", "initial.field", "sweep.flatness_threshold", "maps.snapshots"] {
            assert!(msg.contains(key), "{key} not reported in {msg}");
        }
    }

    #[test]
    fn unknown_and_malformed_keys_are_reported() {
        let mut t = to_toml(&RunConfig::base());
        apply_override(&mut t, "system.detuning=1").unwrap();
        apply_override(&mut t, "system.n_trunc=\"twelve\"").unwrap();
        let Err(CliError::Config(msg)) = from_toml(&t) else { panic!("accepted") };
        assert!(msg.contains("system.detuning") && msg.contains("system.n_trunc"), "{msg}");
    }

    #[test]
    fn override_replaces_value() {
        let mut t = to_toml(&RunConfig::base());
        apply_override(&mut t, "system.delta = 0.8").unwrap();
        apply_override(&mut t, "maps.snapshots=[50, 75.5]").unwrap();
        let c = from_toml(&t).unwrap();
        assert_eq!(c.system.delta, 0.8);
        assert_eq!(c.maps.snapshots, vec![50.0, 75.5]);
        assert!(apply_override(&mut t, "delta=1").is_err());
    }
}
