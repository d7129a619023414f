//! Command-line front end: configuration merging, the `gap`, `phase`,
//! `potential`, `covariance` and `verify` subcommands, and CSV/JSON output.
//!
//! Settings are resolved as built-in defaults, then the `key=value` file named
//! by `BCSIF_CONFIG` (`#` starts a comment), then command-line flags.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::covariance::{determinant_bound_fuzz, BandPoint, CovarianceEvaluator, ScaleDecomposition};
use crate::error::{Error, Result};
use crate::fock::{
    band_partition_check, covariance_from_traces, exact_ratio, free_partition_check, hs_correlation, hs_partition,
    partition_equality_inside, reality_periodicity_check, thermal_expectation, Insertion, Observable,
};
use crate::gap::{a_of_gamma, solve_gap};
use crate::grassmann::{
    self, hs_identity_check, log_moment_check, partition_via_grassmann, Covariance, GrassmannElement,
};
use crate::model::{coupling_window, ModelParams, Warning};
use crate::potential::{eval_potential, grad_hess, maximize_f_l, maximize_f_l_gamma, Measure};

/// Exit code when a verification check fails.
pub const EXIT_VERIFY_FAILED: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "bcsif", version, about = "Reduced BCS model with an imaginary magnetic field")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the gap equation and print one JSON record.
    Gap,
    /// Sweep the (θ, U) grid and emit one row per cell.
    Phase,
    /// Tabulate F_L and f_L and their maximizers over the L list.
    Potential,
    /// Dump the two-band covariance on the time grid.
    Covariance,
    /// Run a verification suite and emit a JSON report.
    Verify,
}

/// Flags overriding the configuration file; every flag is also a config key.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    #[arg(long, global = true)]
    pub beta: Option<String>,
    #[arg(long, global = true)]
    pub theta: Option<String>,
    #[arg(long = "U", global = true, allow_hyphen_values = true)]
    pub u: Option<String>,
    #[arg(long = "L", global = true)]
    pub l: Option<String>,
    #[arg(long, global = true)]
    pub d: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub mu: Option<String>,
    #[arg(long, global = true)]
    pub hop: Option<String>,
    #[arg(long, global = true)]
    pub gamma: Option<String>,
    /// Site of the pairing operator, comma-separated coordinates.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub xhat: Option<String>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub yhat: Option<String>,
    #[arg(long = "quad-nodes", global = true)]
    pub quad_nodes: Option<String>,
    #[arg(long, global = true)]
    pub tol: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<String>,
    /// traces, covariance, hs, grassmann, detbound, potential or all.
    #[arg(long, global = true)]
    pub suite: Option<String>,
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// csv or json.
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// `start:stop:count` or a comma-separated list.
    #[arg(long = "theta-grid", global = true)]
    pub theta_grid: Option<String>,
    #[arg(long = "U-grid", global = true, allow_hyphen_values = true)]
    pub u_grid: Option<String>,
    #[arg(long = "L-list", global = true)]
    pub l_list: Option<String>,
    #[arg(long, global = true)]
    pub c1: Option<String>,
    #[arg(long, global = true)]
    pub c2: Option<String>,
    #[arg(long = "hs-nodes", global = true)]
    pub hs_nodes: Option<String>,
    #[arg(long = "fuzz-trials", global = true)]
    pub fuzz_trials: Option<String>,
    #[arg(long = "M", global = true)]
    pub m_base: Option<String>,
    #[arg(long = "phi-re", global = true, allow_hyphen_values = true)]
    pub phi_re: Option<String>,
    #[arg(long = "phi-im", global = true, allow_hyphen_values = true)]
    pub phi_im: Option<String>,
    /// Time-grid density: the grid is `(1/h)Z ∩ [0, β)`.
    #[arg(long, global = true)]
    pub h: Option<String>,
    /// Number of sample points of the potential curves.
    #[arg(long = "x-points", global = true)]
    pub x_points: Option<String>,
}

impl Flags {
    fn entries(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("beta", &self.beta),
            ("theta", &self.theta),
            ("U", &self.u),
            ("L", &self.l),
            ("d", &self.d),
            ("mu", &self.mu),
            ("hop", &self.hop),
            ("gamma", &self.gamma),
            ("xhat", &self.xhat),
            ("yhat", &self.yhat),
            ("quad-nodes", &self.quad_nodes),
            ("tol", &self.tol),
            ("seed", &self.seed),
            ("suite", &self.suite),
            ("out", &self.out),
            ("format", &self.format),
            ("theta-grid", &self.theta_grid),
            ("U-grid", &self.u_grid),
            ("L-list", &self.l_list),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("hs-nodes", &self.hs_nodes),
            ("fuzz-trials", &self.fuzz_trials),
            ("M", &self.m_base),
            ("phi-re", &self.phi_re),
            ("phi-im", &self.phi_im),
            ("h", &self.h),
            ("x-points", &self.x_points),
        ]
    }
}

const KNOWN_KEYS: &[&str] = &[
    "beta",
    "theta",
    "U",
    "L",
    "d",
    "mu",
    "hop",
    "gamma",
    "xhat",
    "yhat",
    "quad-nodes",
    "tol",
    "seed",
    "suite",
    "out",
    "format",
    "theta-grid",
    "U-grid",
    "L-list",
    "c1",
    "c2",
    "hs-nodes",
    "fuzz-trials",
    "M",
    "phi-re",
    "phi-im",
    "h",
    "x-points",
];

fn canonical_key(raw: &str) -> Option<&'static str> {
    let k = raw.trim().replace('_', "-");
    KNOWN_KEYS.iter().copied().find(|c| c.eq_ignore_ascii_case(&k))
}

/// Parses a flat `key=value` file; blank lines and `#` comments are ignored.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::validation("config", format!("line {}: expected key=value", n + 1)))?;
        let key = canonical_key(k)
            .ok_or_else(|| Error::validation("config", format!("line {}: unknown key `{}`", n + 1, k.trim())))?;
        out.insert(key.to_string(), v.trim().to_string());
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Suite {
    Traces,
    Covariance,
    Hs,
    Grassmann,
    Detbound,
    Potential,
    All,
}

impl Suite {
    const ORDER: [Suite; 6] =
        [Suite::Traces, Suite::Covariance, Suite::Hs, Suite::Grassmann, Suite::Detbound, Suite::Potential];
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub params: ModelParams,
    pub quad_nodes: usize,
    pub tol: f64,
    pub hs_nodes: usize,
    pub fuzz_trials: usize,
    pub seed: u64,
    pub c1: f64,
    pub c2: f64,
    pub m_base: f64,
    pub theta_grid: Vec<f64>,
    pub u_grid: Vec<f64>,
    pub l_list: Vec<usize>,
    pub x_points: usize,
    pub phi: C64,
    pub h: Option<f64>,
    pub suite: Suite,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

fn parse_num<T: std::str::FromStr>(field: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::validation(field, format!("cannot parse `{v}`")))
}

fn parse_list<T: std::str::FromStr>(field: &str, v: &str) -> Result<Vec<T>> {
    let out: Vec<T> =
        v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse_num(field, s)).collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::validation(field, "list must be nonempty"));
    }
    Ok(out)
}

/// `start:stop:count` (inclusive, evenly spaced) or a comma-separated list.
fn parse_grid(field: &str, v: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = v.split(':').collect();
    match parts.len() {
        1 => parse_list(field, v),
        3 => {
            let a: f64 = parse_num(field, parts[0])?;
            let b: f64 = parse_num(field, parts[1])?;
            let n: usize = parse_num(field, parts[2])?;
            if n == 0 {
                return Err(Error::validation(field, "grid count must be positive"));
            }
            if n == 1 {
                return Ok(vec![a]);
            }
            Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
        }
        _ => Err(Error::validation(field, "expected start:stop:count or a comma-separated list")),
    }
}

impl RunConfig {
    /// Resolves the settings from a merged key map.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| map.get(k).map(String::as_str);
        let req = |k: &str| get(k).ok_or_else(|| Error::validation(k, "missing required parameter"));
        let num = |k: &str, default: f64| -> Result<f64> { get(k).map_or(Ok(default), |v| parse_num(k, v)) };
        let int = |k: &str, default: usize| -> Result<usize> { get(k).map_or(Ok(default), |v| parse_num(k, v)) };
        let site = |k: &str| -> Result<Option<Vec<i64>>> { get(k).map(|v| parse_list(k, v)).transpose() };
        let params = ModelParams {
            d: int("d", 1)?,
            l: int("L", 2)?,
            hop: get("hop").map_or(Ok(0), |v| parse_num("hop", v))?,
            mu: num("mu", 0.0)?,
            beta: parse_num("beta", req("beta")?)?,
            theta: num("theta", 0.0)?,
            u: parse_num("U", req("U")?)?,
            gamma: num("gamma", 0.0)?,
            xhat: site("xhat")?,
            yhat: site("yhat")?,
        };
        params.validate()?;
        let tol = num("tol", 1e-10)?;
        if !(tol > 0.0) {
            return Err(Error::validation("tol", "must be positive"));
        }
        let theta_grid = get("theta-grid").map_or(Ok(vec![params.theta]), |v| parse_grid("theta-grid", v))?;
        let u_grid = get("U-grid").map_or(Ok(vec![params.u]), |v| parse_grid("U-grid", v))?;
        let l_list = get("L-list").map_or(Ok(vec![8, 16, 32, 64]), |v| parse_list("L-list", v))?;
        let suite = match get("suite").unwrap_or("all") {
            "traces" => Suite::Traces,
            "covariance" => Suite::Covariance,
            "hs" => Suite::Hs,
            "grassmann" => Suite::Grassmann,
            "detbound" => Suite::Detbound,
            "potential" => Suite::Potential,
            "all" => Suite::All,
            other => return Err(Error::validation("suite", format!("unknown suite `{other}`"))),
        };
        let format = match get("format") {
            None => None,
            Some("csv") => Some(Format::Csv),
            Some("json") => Some(Format::Json),
            Some(other) => return Err(Error::validation("format", format!("unknown format `{other}`"))),
        };
        let cfg = RunConfig {
            quad_nodes: int("quad-nodes", 4096)?,
            tol,
            hs_nodes: int("hs-nodes", 24)?,
            fuzz_trials: int("fuzz-trials", 1000)?,
            seed: get("seed").map_or(Ok(42), |v| parse_num("seed", v))?,
            c1: num("c1", 1.0)?,
            c2: num("c2", 1.0)?,
            m_base: num("M", 2.0 * PI)?,
            theta_grid,
            u_grid,
            l_list,
            x_points: int("x-points", 41)?,
            phi: C64::new(num("phi-re", 0.0)?, num("phi-im", 0.0)?),
            h: get("h").map(|v| parse_num("h", v)).transpose()?,
            suite,
            out: get("out").map(PathBuf::from),
            format,
            params,
        };
        if cfg.quad_nodes < 8 {
            return Err(Error::validation("quad-nodes", "must be at least 8"));
        }
        if cfg.u_grid.iter().any(|u| !(*u < 0.0)) {
            return Err(Error::validation("U-grid", "couplings must be negative"));
        }
        if cfg.l_list.contains(&0) {
            return Err(Error::validation("L-list", "sizes must be positive"));
        }
        Ok(cfg)
    }

    /// Merges the optional config file text with the flags and resolves.
    pub fn resolve(config_text: Option<&str>, flags: &Flags) -> Result<Self> {
        let mut map = match config_text {
            Some(t) => parse_config(t)?,
            None => BTreeMap::new(),
        };
        for (k, v) in flags.entries() {
            if let Some(v) = v {
                map.insert(k.to_string(), v.clone());
            }
        }
        RunConfig::from_map(&map)
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x + 0.0)
    } else {
        format!("{x}")
    }
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    v.push(b'\n');
    Ok(v)
}

fn table_json(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let recs: Vec<serde_json::Map<String, serde_json::Value>> = rows
        .iter()
        .map(|r| {
            header
                .iter()
                .zip(r)
                .map(|(h, v)| {
                    let val = match v.parse::<f64>() {
                        Ok(x) if x.is_finite() => serde_json::Value::from(x),
                        Ok(_) => serde_json::Value::Null,
                        Err(_) => match v.as_str() {
                            "true" => serde_json::Value::Bool(true),
                            "false" => serde_json::Value::Bool(false),
                            _ => serde_json::Value::String(v.clone()),
                        },
                    };
                    (h.clone(), val)
                })
                .collect()
        })
        .collect();
    json_bytes(&recs)
}

fn emit_table(cfg: &RunConfig, header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_bytes(header, rows),
        Format::Json => table_json(header, rows),
    }
}

fn strings(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

/// Record of the `gap` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct GapRecord {
    pub params: ModelParams,
    pub big_theta: f64,
    pub warnings: Vec<Warning>,
    pub delta: f64,
    pub residual: f64,
    pub solvable: bool,
    pub iterations: usize,
    pub quad_nodes: usize,
    pub ssb: f64,
    pub odlro: f64,
    pub free_energy: f64,
    pub window_lower: Option<f64>,
    pub window_upper: Option<f64>,
    pub window_upper_integral: Option<f64>,
}

/// Solves the gap equation at the configured point.
pub fn cmd_gap(cfg: &RunConfig) -> Result<Vec<u8>> {
    let p = &cfg.params;
    let warnings = p.validate()?;
    let sol = solve_gap(p, cfg.tol, cfg.quad_nodes)?;
    let window = coupling_window(p, cfg.c1, cfg.c2).ok();
    let rec = GapRecord {
        params: p.clone(),
        big_theta: p.big_theta(),
        warnings,
        delta: sol.delta,
        residual: sol.residual,
        solvable: sol.solvable,
        iterations: sol.iterations,
        quad_nodes: sol.quad_nodes,
        ssb: sol.ssb,
        odlro: sol.odlro,
        free_energy: sol.free_energy,
        window_lower: window.as_ref().map(|w| w.lower),
        window_upper: window.as_ref().map(|w| w.upper),
        window_upper_integral: window.as_ref().map(|w| w.upper_integral),
    };
    match cfg.format.unwrap_or(Format::Json) {
        Format::Json => json_bytes(&rec),
        Format::Csv => {
            let header = strings(&[
                "beta",
                "theta",
                "U",
                "d",
                "mu",
                "hop",
                "Theta",
                "delta",
                "residual",
                "solvable",
                "ssb",
                "odlro",
                "free_energy",
                "window_lower",
                "window_upper",
            ]);
            let opt = |x: Option<f64>| x.map_or(String::new(), fmt_f64);
            let row = vec![
                fmt_f64(p.beta),
                fmt_f64(p.theta),
                fmt_f64(p.u),
                p.d.to_string(),
                fmt_f64(p.mu),
                p.hop.to_string(),
                fmt_f64(rec.big_theta),
                fmt_f64(rec.delta),
                fmt_f64(rec.residual),
                rec.solvable.to_string(),
                fmt_f64(rec.ssb),
                fmt_f64(rec.odlro),
                fmt_f64(rec.free_energy),
                opt(rec.window_lower),
                opt(rec.window_upper),
            ];
            csv_bytes(&header, &[row])
        }
    }
}

/// Column names of the `phase` table.
pub const PHASE_HEADER: [&str; 10] =
    ["theta", "U", "Theta", "window_lower", "window_upper", "in_window", "delta", "ssb", "odlro", "free_energy"];

/// Sweeps the `(θ, U)` grid, θ-major; cells run in parallel, rows are
/// emitted in grid order.
pub fn cmd_phase(cfg: &RunConfig) -> Result<Vec<u8>> {
    let cells: Vec<(f64, f64)> = cfg.theta_grid.iter().flat_map(|&t| cfg.u_grid.iter().map(move |&u| (t, u))).collect();
    let rows: Vec<Result<Vec<String>>> = cells
        .par_iter()
        .map(|&(theta, u)| {
            let p = ModelParams { theta, u, ..cfg.params.clone() };
            p.validate()?;
            let sol = solve_gap(&p, cfg.tol, cfg.quad_nodes)?;
            let (lo, hi) = match coupling_window(&p, cfg.c1, cfg.c2) {
                Ok(w) => (w.lower, w.upper),
                Err(_) => (f64::NAN, f64::NAN),
            };
            let in_window = lo < p.abs_u() && p.abs_u() < hi;
            Ok(vec![
                fmt_f64(theta),
                fmt_f64(u),
                fmt_f64(p.big_theta()),
                fmt_f64(lo),
                fmt_f64(hi),
                in_window.to_string(),
                fmt_f64(sol.delta),
                fmt_f64(sol.ssb),
                fmt_f64(sol.odlro),
                fmt_f64(sol.free_energy),
            ])
        })
        .collect();
    let rows: Vec<Vec<String>> = rows.into_iter().collect::<Result<_>>()?;
    emit_table(cfg, &strings(&PHASE_HEADER), &rows)
}

/// Tabulates `F_L(x, 0)` and `f_L(x)` on a grid of `x` for each `L` in the
/// list, together with `a_L(γ)`, `Δ_L`, their continuum counterparts and the
/// Hessian identity `∂²F_L/∂x₂²(a_L) + 2γ/(|U|a_L)`.
pub fn cmd_potential(cfg: &RunConfig) -> Result<Vec<u8>> {
    let p = &cfg.params;
    if !(p.gamma > 0.0) {
        return Err(Error::validation("gamma", "the potential table requires γ > 0"));
    }
    let a_inf = a_of_gamma(p, cfg.tol, cfg.quad_nodes)?;
    let delta_inf = solve_gap(p, cfg.tol, cfg.quad_nodes)?.delta;
    let x_max = 2.0 * a_inf.max(1.0);
    let header = strings(&[
        "L",
        "x",
        "F_L",
        "F_L_mirror",
        "f_L",
        "a_L",
        "delta_L",
        "a_gamma",
        "delta",
        "hessian_identity_residual",
    ]);
    let mut rows = Vec::new();
    for &l in &cfg.l_list {
        let q = ModelParams { l, ..p.clone() };
        let a_l = maximize_f_l_gamma(&q, cfg.tol)?;
        let d_l = maximize_f_l(&q, cfg.tol)?;
        let (_, hess) = grad_hess(&q, Measure::Lattice, [a_l, 0.0]);
        let identity = hess[1][1] + 2.0 * p.gamma / (p.abs_u() * a_l);
        for i in 0..cfg.x_points.max(2) {
            let x = x_max * i as f64 / (cfg.x_points.max(2) - 1) as f64;
            rows.push(vec![
                l.to_string(),
                fmt_f64(x),
                fmt_f64(eval_potential(&q, Measure::Lattice, [x, 0.5 * x])),
                fmt_f64(eval_potential(&q, Measure::Lattice, [x, -0.5 * x])),
                fmt_f64(crate::potential::eval_radial(&q, Measure::Lattice, x)),
                fmt_f64(a_l),
                fmt_f64(d_l),
                fmt_f64(a_inf),
                fmt_f64(delta_inf),
                fmt_f64(identity),
            ]);
        }
    }
    emit_table(cfg, &header, &rows)
}

/// Dumps `C(φ)((ρ,x,s),(η,0,t))` for all bands, displacements and grid times.
pub fn cmd_covariance(cfg: &RunConfig) -> Result<Vec<u8>> {
    let p = &cfg.params;
    let h = cfg.h.unwrap_or(4.0 / p.beta);
    let steps = crate::covariance::check_h(p.beta, h)?;
    let eval = CovarianceEvaluator::new(p, cfg.phi)?;
    let mut header = strings(&["band1", "band2"]);
    header.extend((1..=p.d).map(|j| format!("x{j}")));
    header.extend(strings(&["s", "t", "re", "im"]));
    let origin = vec![0i64; p.d];
    let mut rows = Vec::new();
    for rho in 1..=2u8 {
        for eta in 1..=2u8 {
            for site in 0..p.volume() {
                let x = p.site_coords(site);
                for si in 0..steps {
                    for ti in 0..steps {
                        let (s, t) = (si as f64 / h, ti as f64 / h);
                        let c = eval
                            .covariance(&BandPoint::new(rho, x.clone(), s), &BandPoint::new(eta, origin.clone(), t))?;
                        let mut row = vec![rho.to_string(), eta.to_string()];
                        row.extend(x.iter().map(|c| c.to_string()));
                        row.extend([fmt_f64(s), fmt_f64(t), fmt_f64(c.re), fmt_f64(c.im)]);
                        rows.push(row);
                    }
                }
            }
        }
    }
    emit_table(cfg, &header, &rows)
}

/// One line of a verification report.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check: String,
    pub lhs: C64,
    pub rhs: C64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tol: f64,
    /// Which error is compared with `tol`: `abs`, `rel`, or `lt` for the strict inequality `|lhs| < |rhs|`.
    pub metric: &'static str,
    pub pass: bool,
}

impl CheckRecord {
    fn new(check: impl Into<String>, lhs: impl Into<C64>, rhs: impl Into<C64>, tol: f64, metric: &'static str) -> Self {
        let (lhs, rhs) = (lhs.into(), rhs.into());
        let abs_err = (lhs - rhs).norm();
        let scale = rhs.norm();
        let rel_err = if scale > 0.0 { abs_err / scale } else { abs_err };
        let pass = match metric {
            "abs" => abs_err <= tol,
            "rel" => rel_err <= tol,
            _ => lhs.norm() < rhs.norm(),
        };
        CheckRecord { check: check.into(), lhs, rhs, abs_err, rel_err, tol, metric, pass }
    }
}

/// The JSON document emitted by `verify`.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            EXIT_VERIFY_FAILED
        }
    }
}

fn suite_traces(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for l in [1usize, 2] {
        for _ in 0..3 {
            let beta = rng.random_range(0.2..5.0);
            let p = ModelParams {
                l,
                beta,
                theta: rng.random_range(0.0..2.0 * PI / beta),
                mu: rng.random_range(-1.9..1.9),
                hop: rng.random_range(0..=1u8),
                ..ModelParams::default()
            };
            let r = free_partition_check(&p)?;
            out.push(CheckRecord::new(
                format!("free_partition L={l} beta={beta:.3}"),
                r.trace,
                r.product,
                1e-10,
                "rel",
            ));
            let phi = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let r = band_partition_check(&p, phi)?;
            out.push(CheckRecord::new(
                format!("band_partition L={l} beta={beta:.3}"),
                r.trace,
                r.product,
                1e-10,
                "rel",
            ));
        }
    }
    let p = ModelParams { l: 2, theta: 1.7, gamma: 0.4, u: -0.5, yhat: Some(vec![1]), ..ModelParams::default() };
    let r = reality_periodicity_check(&p)?;
    out.push(CheckRecord::new("trace_imaginary_ratio", r.max_imag_ratio, 0.0, 1e-9, "abs"));
    out.push(CheckRecord::new("trace_a1_vs_adjoint", r.adjoint_err, 0.0, 1e-9, "abs"));
    out.push(CheckRecord::new("trace_theta_shift", r.shift_err, 0.0, 1e-9, "abs"));
    out.push(CheckRecord::new("trace_theta_reflection", r.reflection_err, 0.0, 1e-9, "abs"));
    let a1 = thermal_expectation(&p, Observable::A1)?;
    let a1d = thermal_expectation(&p, Observable::A1Adjoint)?;
    out.push(CheckRecord::new("expectation_a1_vs_adjoint", a1, a1d, 1e-10, "abs"));
    for (l, yhat) in [(1usize, None), (2, Some(vec![1]))] {
        let q = ModelParams { l, yhat, ..p.clone() };
        for _ in 0..2 {
            let mut z = || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let (phi, xi, l1, l2) = (z(), z(), z(), z());
            let r = partition_equality_inside(&q, phi, xi, [l1, l2])?;
            out.push(CheckRecord::new(format!("spin_band_identity L={l}"), r.lhs, r.rhs, 1e-9, "rel"));
        }
    }
    Ok(out)
}

fn random_band_point(rng: &mut ChaCha8Rng, p: &ModelParams, steps: Option<(usize, f64)>) -> BandPoint {
    let band = rng.random_range(1..=2u8);
    let x = p.site_coords(rng.random_range(0..p.volume()));
    let s = match steps {
        Some((n, h)) => rng.random_range(0..n) as f64 / h,
        None => rng.random::<f64>() * p.beta,
    };
    BandPoint::new(band, x, s)
}

fn suite_covariance(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    let p = ModelParams { l: 2, beta: 1.0, theta: 1.0, ..ModelParams::default() };
    let phi = C64::new(0.3, 0.1);
    let eval = CovarianceEvaluator::new(&p, phi)?;
    for _ in 0..4 {
        let (x, y) = (random_band_point(&mut rng, &p, None), random_band_point(&mut rng, &p, None));
        out.push(CheckRecord::new(
            "closed_form_vs_traces",
            eval.covariance(&x, &y)?,
            covariance_from_traces(&p, phi, &x, &y)?,
            1e-8,
            "abs",
        ));
    }
    for h in [2.0, 4.0, 8.0] {
        for _ in 0..2 {
            let n = (p.beta * h).round() as usize;
            let (x, y) = (random_band_point(&mut rng, &p, Some((n, h))), random_band_point(&mut rng, &p, Some((n, h))));
            out.push(CheckRecord::new(
                format!("matsubara_vs_closed_form h={h}"),
                eval.covariance_matsubara(h, &x, &y)?,
                eval.covariance(&x, &y)?,
                1e-9,
                "abs",
            ));
        }
    }
    let h = ScaleDecomposition::minimal_h(p.beta, cfg.m_base, p.d);
    let dec = ScaleDecomposition::new(&eval, h, cfg.m_base)?;
    for _ in 0..4 {
        let (x, y) = (
            random_band_point(&mut rng, &p, Some((dec.steps, h))),
            random_band_point(&mut rng, &p, Some((dec.steps, h))),
        );
        let sum: C64 = (0..dec.levels()).map(|l| dec.covariance_l(l, &x, &y)).sum::<Result<C64>>()?;
        let twisted = C64::from_polar(1.0, -PI * (x.s - y.s) / p.beta) * eval.covariance(&x, &y)?;
        out.push(CheckRecord::new("scale_decomposition_sum", sum, twisted, 1e-9, "abs"));
    }
    let forms = eval.equal_time_forms(&[1], &[0]);
    for (r, c) in [(1u8, 1u8), (1, 2), (2, 1), (2, 2)] {
        let direct = eval.covariance(&BandPoint::new(r, vec![1], 0.0), &BandPoint::new(c, vec![0], 0.0))?;
        out.push(CheckRecord::new(
            format!("equal_time_form ({r},{c})"),
            forms[((r - 1) as usize, (c - 1) as usize)],
            direct,
            1e-12,
            "abs",
        ));
    }
    Ok(out)
}

fn suite_hs(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let p =
        ModelParams { l: 2, beta: 1.0, theta: 1.0, u: -0.5, gamma: 0.2, yhat: Some(vec![1]), ..ModelParams::default() };
    let n = cfg.hs_nodes;
    let mut out = vec![CheckRecord::new(
        "hs_partition",
        hs_partition(&p, n, n)?.value,
        exact_ratio(&p, Insertion::None)?,
        1e-6,
        "rel",
    )];
    for (j, ins) in [(1u8, Insertion::A1), (2, Insertion::A2)] {
        out.push(CheckRecord::new(
            format!("hs_correlation j={j}"),
            hs_correlation(&p, j, n, n)?.value,
            exact_ratio(&p, ins)?,
            1e-6,
            "rel",
        ));
    }
    let q = ModelParams { l: 1, beta: 1.0, theta: 1.0, u: -0.3, gamma: 0.2, ..ModelParams::default() };
    let err = hs_identity_check(&q, 2.0, 9, [C64::new(0.2, 0.1), C64::from(0.0)])?;
    out.push(CheckRecord::new("grassmann_hs_identity", err, 0.0, 1e-10, "abs"));
    Ok(out)
}

fn suite_grassmann(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let p = ModelParams { l: 1, beta: 1.0, theta: 1.0, u: -0.3, gamma: 0.2, ..ModelParams::default() };
    let lambda = [C64::from(0.0); 2];
    let r2 = partition_via_grassmann(&p, 2.0, lambda)?;
    let r4 = partition_via_grassmann(&p, 4.0, lambda)?;
    let mut out = Vec::new();
    for r in [&r2, &r4] {
        out.push(CheckRecord::new(
            format!("series_coefficients steps={}", r.steps),
            r.coefficient_err,
            0.0,
            1e-12,
            "abs",
        ));
        out.push(CheckRecord::new(
            format!("series_value steps={}", r.steps),
            r.p_unconstrained,
            r.integral,
            1e-12,
            "abs",
        ));
    }
    out.push(CheckRecord::new(
        "time_step_error_decreases",
        (r4.integral - r4.trace_ratio).norm(),
        (r2.integral - r2.trace_ratio).norm(),
        0.0,
        "lt",
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let cov = Covariance {
        table: DMatrix::from_fn(4, 4, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))),
    };
    let mut worst = 0.0f64;
    for mask in 0u32..256 {
        worst = worst.max((cov.monomial_integral(mask) - cov.monomial_integral_wick(mask)).norm());
    }
    out.push(CheckRecord::new("wick_vs_determinant", worst, 0.0, 1e-12, "abs"));
    let mut f = GrassmannElement::zero(8)?;
    for mask in 0u32..256 {
        if mask.count_ones() % 2 == 0 && mask != 0 {
            f.add_monomial(mask, C64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)));
        }
    }
    let back = grassmann::log_element(&grassmann::exp_element(&f)?)?;
    out.push(CheckRecord::new("log_exp_inverse", back.max_abs_diff(&f), 0.0, 1e-12, "abs"));
    let lm = log_moment_check(&f, &cov, 3)?;
    out.push(CheckRecord::new("log_moment_routes", lm.max_diff, 0.0, 1e-10, "abs"));
    Ok(out)
}

fn suite_detbound(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let p = ModelParams { l: 2, beta: 1.0, theta: 1.0, ..ModelParams::default() };
    let phi = C64::new(0.0, 0.5);
    let mut out = Vec::new();
    for (n, m) in [(1usize, 3usize), (3, 3), (6, 3)] {
        let r = determinant_bound_fuzz(&p, phi, n, m, cfg.fuzz_trials, cfg.seed)?;
        out.push(CheckRecord::new(format!("determinant_bound n={n} violations"), r.violations as f64, 0.0, 0.0, "abs"));
        out.push(CheckRecord::new(format!("gram_bound n={n} violations"), r.gram_violations as f64, 0.0, 0.0, "abs"));
    }
    Ok(out)
}

fn suite_potential(cfg: &RunConfig) -> Result<Vec<CheckRecord>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let p = ModelParams { l: 16, beta: 1.0, theta: 2.0 * PI - 0.2, u: -1.0, gamma: 0.3, ..ModelParams::default() };
    let mut out = Vec::new();
    for _ in 0..4 {
        let x = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        let (g, hs) = grad_hess(&p, Measure::Lattice, x);
        let f = |y: [f64; 2]| eval_potential(&p, Measure::Lattice, y);
        let step = 1e-4;
        for i in 0..2 {
            let mut up = x;
            let mut dn = x;
            up[i] += step;
            dn[i] -= step;
            let fd = (f(up) - f(dn)) / (2.0 * step);
            out.push(CheckRecord::new(format!("gradient_fd x{}", i + 1), g[i], fd, 1e-5, "rel"));
            let (gu, _) = grad_hess(&p, Measure::Lattice, up);
            let (gd, _) = grad_hess(&p, Measure::Lattice, dn);
            for j in 0..2 {
                out.push(CheckRecord::new(
                    format!("hessian_fd x{}x{}", i + 1, j + 1),
                    hs[j][i],
                    (gu[j] - gd[j]) / (2.0 * step),
                    1e-5,
                    "rel",
                ));
            }
        }
    }
    let a = maximize_f_l_gamma(&p, 1e-13)?;
    let (_, hs) = grad_hess(&p, Measure::Lattice, [a, 0.0]);
    out.push(CheckRecord::new("hessian_identity_x2x2", hs[1][1], -2.0 * p.gamma / (p.abs_u() * a), 1e-6, "abs"));
    out.push(CheckRecord::new("hessian_offdiagonal_on_axis", hs[0][1], 0.0, 1e-12, "abs"));
    Ok(out)
}

/// Runs the configured verification suite.
pub fn cmd_verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let suites: Vec<Suite> = match cfg.suite {
        Suite::All => Suite::ORDER.to_vec(),
        s => vec![s],
    };
    let mut checks = Vec::new();
    for s in suites {
        checks.extend(match s {
            Suite::Traces => suite_traces(cfg)?,
            Suite::Covariance => suite_covariance(cfg)?,
            Suite::Hs => suite_hs(cfg)?,
            Suite::Grassmann => suite_grassmann(cfg)?,
            Suite::Detbound => suite_detbound(cfg)?,
            Suite::Potential => suite_potential(cfg)?,
            Suite::All => unreachable!(),
        });
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport { suite: cfg.suite, seed: cfg.seed, checks, pass })
}

fn write_out(cfg: &RunConfig, bytes: &[u8]) -> Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

/// Executes a parsed command line and returns the process exit code.
pub fn execute(cli: &Cli, config_text: Option<&str>) -> Result<i32> {
    let cfg = RunConfig::resolve(config_text, &cli.flags)?;
    let bytes = match cli.command {
        Command::Gap => cmd_gap(&cfg)?,
        Command::Phase => cmd_phase(&cfg)?,
        Command::Potential => cmd_potential(&cfg)?,
        Command::Covariance => cmd_covariance(&cfg)?,
        Command::Verify => {
            let report = cmd_verify(&cfg)?;
            write_out(&cfg, &json_bytes(&report)?)?;
            return Ok(report.exit_code());
        }
    };
    write_out(&cfg, &bytes)?;
    Ok(0)
}

/// Entry point shared by the binary: parses `args`, reads `BCSIF_CONFIG`,
/// runs and maps errors onto exit codes.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let config_text = match std::env::var_os("BCSIF_CONFIG") {
        None => None,
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read BCSIF_CONFIG file {}: {e}", PathBuf::from(path).display());
                return 2;
            }
        },
    };
    match execute(&cli, config_text.as_deref()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_records_compare_the_named_metric() {
        assert!(CheckRecord::new("a", 1.0, 1.0 + 1e-12, 1e-10, "abs").pass);
        assert!(!CheckRecord::new("a", 1.0, 1.1, 1e-3, "abs").pass);
        assert!(!CheckRecord::new("r", 200.0, 100.0, 0.5, "rel").pass);
        assert!(CheckRecord::new("lt", 0.1, 0.2, 0.0, "lt").pass);
        assert!(!CheckRecord::new("lt", 0.2, 0.2, 0.0, "lt").pass);
    }

    #[test]
    fn failing_report_maps_to_exit_one() {
        let report = VerifyReport {
            suite: Suite::All,
            seed: 0,
            checks: vec![CheckRecord::new("x", 1.0, 2.0, 1e-9, "abs")],
            pass: false,
        };
        assert_eq!(report.exit_code(), EXIT_VERIFY_FAILED);
    }
}
