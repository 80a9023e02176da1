//! Validated run configuration.

use std::path::PathBuf;

use crate::args::{Cli, Command, FieldProfile, FieldSource, Format};

/// Everything a subcommand needs besides its own arguments, checked once
/// before dispatch.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub masses: [f64; 3],
    pub e: f64,
    pub rel_tol: f64,
    pub format: Format,
    pub output: Option<PathBuf>,
    /// Built-in profile name or grid file path, for the grid subcommands.
    pub field_source: Option<String>,
    pub self_test: bool,
    pub timings: bool,
}

/// Parses `start:stop:scale:count` with scale `lin` or `log`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("grid '{spec}' is not start:stop:scale:count"));
    }
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| format!("grid '{spec}': '{s}' is not a number"));
    let (lo, hi) = (num(parts[0])?, num(parts[1])?);
    let count: usize = parts[3].trim().parse().map_err(|_| format!("grid '{spec}': count '{}' is not a positive integer", parts[3]))?;
    if count == 0 {
        return Err(format!("grid '{spec}': count must be positive"));
    }
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(format!("grid '{spec}': endpoints must be finite"));
    }
    let t = |k: usize| if count == 1 { 0.0 } else { k as f64 / (count - 1) as f64 };
    match parts[2].trim() {
        "lin" => Ok((0..count).map(|k| lo + (hi - lo) * t(k)).collect()),
        "log" => {
            if !(lo > 0.0 && hi > 0.0) {
                return Err(format!("grid '{spec}': log scale needs positive endpoints"));
            }
            let (a, b) = (lo.ln(), hi.ln());
            Ok((0..count)
                .map(|k| match k {
                    0 => lo,
                    _ if k + 1 == count => hi,
                    _ => (a + (b - a) * t(k)).exp(),
                })
                .collect())
        }
        other => Err(format!("grid '{spec}': scale '{other}' must be lin or log")),
    }
}

fn positive(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v > 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be positive and finite, got {v}"));
    }
}

fn nonnegative(errs: &mut Vec<String>, name: &str, v: f64) {
    if !(v >= 0.0 && v.is_finite()) {
        errs.push(format!("{name} must be nonnegative and finite, got {v}"));
    }
}

fn grid(errs: &mut Vec<String>, name: &str, spec: &str, lower: f64) {
    match parse_grid(spec) {
        Ok(v) if v.iter().any(|&x| x < lower) => errs.push(format!("{name} values must be at least {lower}")),
        Ok(_) => {}
        Err(e) => errs.push(format!("{name}: {e}")),
    }
}

fn source(errs: &mut Vec<String>, src: &FieldSource) -> String {
    if src.grid.is_none() {
        if !(2..=256).contains(&src.n) {
            errs.push(format!("n must lie in 2..=256, got {}", src.n));
        }
        positive(errs, "length", src.length);
        if !src.amplitude.is_finite() {
            errs.push("amplitude must be finite".into());
        }
    }
    match (&src.grid, src.profile) {
        (Some(p), _) => p.display().to_string(),
        (None, FieldProfile::Zero) => "zero".into(),
        (None, FieldProfile::Vortex) => "vortex".into(),
        (None, FieldProfile::Fourier) => "fourier".into(),
    }
}

impl RunConfig {
    /// Validates every numeric parameter and reports all problems at once.
    pub fn from_cli(cli: &Cli) -> Result<RunConfig, String> {
        let c = &cli.common;
        let mut errs = Vec::new();
        let masses = if c.masses.len() == 3 {
            let m = [c.masses[0], c.masses[1], c.masses[2]];
            if !(m[0] > 0.0 && m[0] < m[1] && m[1] < m[2] && m[2].is_finite()) {
                errs.push(format!("masses must satisfy 0 < m0 < m1 < m2, got {:?}", c.masses));
            }
            m
        } else {
            errs.push(format!("need exactly three masses, got {}", c.masses.len()));
            [1.0, 2.0, 3.0]
        };
        positive(&mut errs, "e", c.e);
        if !(c.rel_tol > 0.0 && c.rel_tol < 1.0) {
            errs.push(format!("rel-tol must lie in (0, 1), got {}", c.rel_tol));
        }
        let mut field_source = None;
        match &cli.command {
            Command::TabulateEh { x_grid, mass } => {
                grid(&mut errs, "x-grid", x_grid, 0.0);
                positive(&mut errs, "mass", *mass);
            }
            Command::TabulateFpv { b_grid } => grid(&mut errs, "b-grid", b_grid, 0.0),
            Command::RelationCheck { b, tol } | Command::RenormCheck { b, tol } => {
                if b.is_empty() {
                    errs.push("need at least one b".into());
                }
                for &v in b {
                    nonnegative(&mut errs, "b", v);
                }
                positive(&mut errs, "tol", *tol);
            }
            Command::LandauCheck { s_grid, b_grid, tol } => {
                grid(&mut errs, "s-grid", s_grid, f64::MIN_POSITIVE);
                grid(&mut errs, "b-grid", b_grid, 0.0);
                positive(&mut errs, "tol", *tol);
            }
            Command::KernelCheck { mu, b, samples, box_side, .. } => {
                positive(&mut errs, "mu", *mu);
                nonnegative(&mut errs, "b", *b);
                positive(&mut errs, "box-side", *box_side);
                if *samples == 0 {
                    errs.push("samples must be positive".into());
                }
            }
            Command::HeatTrace { s, b, rho, tol } => {
                positive(&mut errs, "s", *s);
                nonnegative(&mut errs, "b", *b);
                if rho.is_empty() {
                    errs.push("need at least one rho".into());
                }
                for &r in rho {
                    positive(&mut errs, "rho", r);
                }
                positive(&mut errs, "tol", *tol);
            }
            Command::BiotSavart { source: src, tol, .. } => {
                field_source = Some(source(&mut errs, src));
                positive(&mut errs, "tol", *tol);
            }
            Command::Lda { source: src, bins, .. } => {
                field_source = Some(source(&mut errs, src));
                if *bins == 0 {
                    errs.push("bins must be positive".into());
                }
            }
            Command::LatticeDensity { n, dims, length, twists, tol, .. } => {
                if n.is_empty() || n.iter().any(|&k| k < 2) {
                    errs.push("n needs at least one value, each at least 2".into());
                }
                if !(*dims == 2 || *dims == 3) {
                    errs.push(format!("dims must be 2 or 3, got {dims}"));
                }
                positive(&mut errs, "length", *length);
                if *twists == 0 {
                    errs.push("twists must be positive".into());
                }
                positive(&mut errs, "tol", *tol);
            }
            Command::Sweep { eta, width, eps, n, levels, k2, dims, length, .. } => {
                if !(*eta > -1.0 && *eta < 1.0) {
                    errs.push(format!("eta must lie in (-1, 1), got {eta}"));
                }
                positive(&mut errs, "width", *width);
                if eps.is_empty() || eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
                    errs.push("eps values must lie in (0, 1]".into());
                }
                if eps.windows(2).any(|w| w[1] >= w[0]) {
                    errs.push("eps list must be strictly descending".into());
                }
                if *n < 2 {
                    errs.push("n must be at least 2".into());
                }
                if *levels == 0 {
                    errs.push("levels must be positive".into());
                }
                if *k2 == Some(0) {
                    errs.push("k2 must be positive".into());
                }
                if !(*dims == 2 || *dims == 3) {
                    errs.push(format!("dims must be 2 or 3, got {dims}"));
                }
                positive(&mut errs, "length", *length);
            }
        }
        if !errs.is_empty() {
            return Err(format!("invalid configuration: {}", errs.join("; ")));
        }
        Ok(RunConfig {
            subcommand: cli.command.name(),
            masses,
            e: c.e,
            rel_tol: c.rel_tol,
            format: c.out.unwrap_or(cli.command.default_format()),
            output: c.output.clone(),
            field_source,
            self_test: c.self_test,
            timings: !c.no_timings,
        })
    }
}
