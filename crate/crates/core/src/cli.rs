//! Command-line front end.
//!
//! Every command writes one document (JSON, CSV or SVG) to `--out` or to
//! standard output. Exit codes: 0 pass, 1 bound or invariant violation,
//! 2 usage or parse error, 3 size guard.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::capacity;
use crate::channels::{self, SymChannel};
use crate::combinat;
use crate::definetti;
use crate::diamond::{self, DiamondOptions};
use crate::symspace::{self, SymOperator, SymOperatorJson};
use crate::{Error, Result, TAU_ALG};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Parser)]
#[command(name = "symclone", version, about = "Symmetric cloning, estimation and de Finetti toolkit")]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Single-particle dimension.
    #[arg(long, global = true, default_value_t = 2)]
    pub d: usize,
    /// Number of input copies.
    #[arg(long = "M", global = true)]
    pub m: Option<usize>,
    /// Inclusive range of M written as `a:b`.
    #[arg(long = "M-range", global = true, value_parser = parse_range)]
    pub m_range: Option<(usize, usize)>,
    /// Number of output copies / receivers.
    #[arg(long, global = true, default_value_t = 1)]
    pub k: usize,
    /// Input dimension of the broadcast channel.
    #[arg(long, global = true)]
    pub din: Option<usize>,
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
    #[arg(long = "tol-alg", global = true, default_value_t = TAU_ALG)]
    pub tol_alg: f64,
    #[arg(long = "tol-sdp", global = true, default_value_t = 1e-6)]
    pub tol_sdp: f64,
    /// Add SDP / see-saw columns (bounds) or the computed transpose-diamond
    /// value (capacity).
    #[arg(long, global = true)]
    pub exact: bool,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact checks of the binomial identities behind the decomposition.
    Identities {
        #[arg(long = "max-M", default_value_t = 30)]
        max_m: u32,
        /// Corrupts one binomial coefficient to exercise the failure path.
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// Residual of the loss-plus-cloning decomposition.
    Decompose,
    /// Analytic distance bounds over a range of M.
    Bounds,
    /// De Finetti certificate for a state file.
    Definetti {
        state: PathBuf,
        /// The file holds an operator on the full space H^{⊗M} instead of
        /// the symmetric subspace.
        #[arg(long)]
        full: bool,
    },
    /// Broadcast-channel certificate for a channel file.
    Broadcast { channel: PathBuf },
    /// Quantum-capacity bounds.
    Capacity,
    /// Cloning against estimation fidelity over a range of M.
    Clonegap {
        #[arg(long = "N", default_value_t = 1)]
        n: usize,
    },
    /// Writes a seeded random state on the symmetric subspace.
    RandomState,
}

fn parse_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|e| format!("range start: {e}"))?;
    let b: usize = b.trim().parse().map_err(|e| format!("range end: {e}"))?;
    if a > b {
        return Err(format!("empty range {a}:{b}"));
    }
    Ok((a, b))
}

impl RunConfig {
    fn need_m(&self) -> Result<usize> {
        self.m.ok_or_else(|| Error::Argument("--M is required".into()))
    }

    fn need_range(&self) -> Result<std::ops::RangeInclusive<usize>> {
        match (self.m_range, self.m) {
            (Some((a, b)), _) => Ok(a..=b),
            (None, Some(m)) => Ok(m..=m),
            _ => Err(Error::Argument("--M-range a:b is required".into())),
        }
    }

    fn diamond_options(&self) -> DiamondOptions {
        DiamondOptions { tol_sdp: self.tol_sdp, seed: self.seed, ..DiamondOptions::default() }
    }

    fn validate(&self) -> Result<()> {
        if [self.tol_alg, self.tol_sdp].iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(Error::Argument("tolerances must be positive".into()));
        }
        if self.d < 1 {
            return Err(Error::Argument("--d must be >= 1".into()));
        }
        Ok(())
    }
}

/// Document plus pass/fail verdict.
struct Outcome {
    body: String,
    pass: bool,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn read_file(path: &PathBuf) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn cmd_identities(max_m: u32, inject_fault: bool) -> Result<Outcome> {
    let report = if inject_fault {
        combinat::identity_suite_with(max_m, |n, r| {
            let b = combinat::binomial(n, r);
            if n == 4 && r == 2 {
                b + 1
            } else {
                b
            }
        })?
    } else {
        combinat::identity_suite(max_m)?
    };
    let pass = report.passed();
    Ok(Outcome { body: to_json(&json!({ "max_M": max_m, "checks": report.checks, "pass": pass, "first_failure": report.first_failure })), pass })
}

fn cmd_decompose(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.need_m()?;
    let (d, k) = (cfg.d, cfg.k);
    let residual = channels::decomposition_residual(d, m, k)?;
    let p = combinat::ps_distribution(d as u32, m as u32, k as u32)?;
    let pass = residual < cfg.tol_alg;
    let exact: Vec<String> = p.entries().iter().map(|q| q.to_string()).collect();
    Ok(Outcome {
        body: to_json(&json!({
            "d": d, "M": m, "k": k,
            "residual": residual,
            "tolerance": cfg.tol_alg,
            "p": p.to_f64(),
            "p_exact": exact,
            "pass": pass,
        })),
        pass,
    })
}

#[derive(Serialize)]
struct BoundRow {
    #[serde(rename = "M")]
    m: usize,
    bound1: f64,
    bound2_exact: Option<f64>,
    bound2_linear: Option<f64>,
    clone_bound: f64,
    min: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    sdp_upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seesaw_lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sdp_gap: Option<f64>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn cmd_bounds(cfg: &RunConfig) -> Result<Outcome> {
    let range = cfg.need_range()?;
    let (d, k) = (cfg.d, cfg.k);
    let mut rows = Vec::new();
    for m in range.clone() {
        if m == 0 {
            return Err(Error::Argument("M must be >= 1".into()));
        }
        let rep = combinat::analytic_bounds(d as u32, m as u32, k as u32)?;
        rows.push(BoundRow {
            m,
            bound1: rep.bound_estimation_1_f64(),
            bound2_exact: rep.bound_estimation_2_exact,
            bound2_linear: rep.bound_estimation_2_linear_f64(),
            clone_bound: rep.bound_cloning_f64(),
            min: rep.min_estimation_bound,
            sdp_upper: None,
            seesaw_lower: None,
            sdp_gap: None,
        });
    }
    let mut pass = rows.windows(2).all(|w| w[1].min <= w[0].min);
    let mut nonincreasing = None;
    if cfg.exact {
        let table = diamond::bound_comparison_table(d, range, k, &cfg.diamond_options())?;
        for (row, t) in rows.iter_mut().zip(&table.rows) {
            row.sdp_upper = Some(t.computed.upper);
            row.seesaw_lower = Some(t.computed.lower);
            row.sdp_gap = Some(t.computed.sdp_gap);
            pass &= t.within_bounds;
        }
        nonincreasing = Some(table.nonincreasing);
    }
    let body = match cfg.format {
        Format::Json => to_json(&json!({
            "d": d, "k": k, "tolerance": cfg.tol_sdp, "rows": rows,
            "computed_nonincreasing": nonincreasing, "pass": pass,
        })),
        Format::Csv => {
            let mut s = String::from("M,bound1,bound2_exact,bound2_linear,clone_bound,min");
            if cfg.exact {
                s.push_str(",sdp_upper,seesaw_lower,sdp_gap");
            }
            s.push('\n');
            for r in &rows {
                let _ = write!(
                    s,
                    "{},{},{},{},{},{}",
                    r.m,
                    r.bound1,
                    opt(r.bound2_exact),
                    opt(r.bound2_linear),
                    r.clone_bound,
                    r.min
                );
                if cfg.exact {
                    let _ = write!(s, ",{},{},{}", opt(r.sdp_upper), opt(r.seesaw_lower), opt(r.sdp_gap));
                }
                s.push('\n');
            }
            s
        }
        Format::Svg => {
            let mut series = vec![("min bound", rows.iter().map(|r| (r.m as f64, r.min)).collect::<Vec<_>>())];
            if cfg.exact {
                series.push(("computed", rows.iter().map(|r| (r.m as f64, r.sdp_upper.unwrap_or(0.0))).collect()));
            }
            svg_plot(&format!("Estimation distance bounds, d = {d}, k = {k}"), "M", &series)
        }
    };
    Ok(Outcome { body, pass })
}

fn parse_full_state(text: &str) -> Result<(usize, usize, crate::linalg::CMat)> {
    let js: SymOperatorJson = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let side = crate::linalg::guarded_power(js.d, js.m, "full-space state")?;
    let re = js.re.flatten(side, "re")?;
    let im = js.im.flatten(side, "im")?;
    Ok((js.d, js.m, symspace::matrix_from_parts(&re, &im, side)))
}

fn cmd_definetti(cfg: &RunConfig, path: &PathBuf, full: bool) -> Result<Outcome> {
    let text = read_file(path)?;
    let cert = if full {
        let (d, m, rho) = parse_full_state(&text)?;
        definetti::definetti_perm_invariant(&rho, d, m, cfg.k)?
    } else {
        let rho = SymOperator::from_json(&text)?;
        definetti::definetti_state(&rho, cfg.k)?.1
    };
    Ok(Outcome { pass: cert.holds(), body: to_json(&cert) })
}

fn cmd_broadcast(cfg: &RunConfig, path: &PathBuf) -> Result<Outcome> {
    let e = SymChannel::from_json(&read_file(path)?)?;
    e.validate(cfg.tol_alg.max(1e-9))?;
    let (_, cert) = definetti::broadcast_approx(&e, cfg.k, &cfg.diamond_options())?;
    Ok(Outcome { pass: cert.holds(), body: to_json(&cert) })
}

fn cmd_capacity(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.need_m()?;
    let d_in = match cfg.din {
        Some(v) => v,
        None => combinat::sym_dim_usize(cfg.d, m)?,
    };
    let mut report = capacity::capacity_bounds(cfg.d, m, cfg.k, d_in)?;
    let mut pass = true;
    if cfg.exact {
        if cfg.k > m {
            return Err(Error::Argument(format!("k = {} exceeds M = {m}", cfg.k)));
        }
        let restriction = channels::trace_channel(cfg.d, m, cfg.k)?;
        let v = capacity::transpose_diamond(&restriction, &cfg.diamond_options())?;
        report.computed_transpose_diamond = Some(v);
        // the computed value refers to the identity broadcast
        let reference = capacity::capacity_bounds(cfg.d, m, cfg.k, combinat::sym_dim_usize(cfg.d, m)?)?;
        pass = v <= reference.transpose_bound_log + 1e-3;
    }
    Ok(Outcome { body: to_json(&json!({ "report": report, "tolerance": cfg.tol_sdp, "pass": pass })), pass })
}

fn cmd_clonegap(cfg: &RunConfig, n: usize) -> Result<Outcome> {
    let table = definetti::cloning_estimation_gap(cfg.d, n, cfg.need_range()?)?;
    let pass = table.within_bounds;
    let body = match cfg.format {
        Format::Json => to_json(&json!({ "table": table, "pass": pass })),
        Format::Csv => {
            let mut s = String::from("M,F_clon,F_est,gap,bound\n");
            for r in &table.rows {
                let _ = writeln!(s, "{},{},{},{},{}", r.m, r.f_clon, r.f_est, r.gap, r.bound);
            }
            s
        }
        Format::Svg => svg_plot(
            &format!("Cloning minus estimation fidelity, d = {}, N = {n}", cfg.d),
            "M",
            &[("gap", table.rows.iter().map(|r| (r.m as f64, r.gap)).collect())],
        ),
    };
    Ok(Outcome { body, pass })
}

fn cmd_random_state(cfg: &RunConfig) -> Result<Outcome> {
    let m = cfg.need_m()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let rho = SymOperator::random_state(cfg.d, m, &mut rng)?;
    let mut body = rho.to_json();
    body.push('\n');
    Ok(Outcome { body, pass: true })
}

/// Minimal line plot, one polyline per series.
pub fn svg_plot(title: &str, xlabel: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const PAD: f64 = 50.0;
    const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, 0.0f64, f64::MIN);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let sx = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let sy = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="25" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, title);
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{b}" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{xlabel}</text>"#, W / 2.0, H - 12.0);
    let _ = writeln!(s, r#"<text x="{PAD}" y="{}" text-anchor="middle" font-size="10">{x0}</text>"#, H - PAD + 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{x1}</text>"#, W - PAD, H - PAD + 15.0);
    let _ = writeln!(s, r#"<text x="{}" y="{PAD}" text-anchor="end" font-size="10">{y1:.4}</text>"#, PAD - 4.0);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{y0:.4}</text>"#, PAD - 4.0, H - PAD);
    for (idx, (name, p)) in series.iter().enumerate() {
        let color = COLORS[idx % COLORS.len()];
        let path: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{name}</text>"#,
            W - PAD - 90.0,
            PAD + 15.0 * (idx as f64 + 1.0)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn execute(cfg: &RunConfig) -> Result<Outcome> {
    cfg.validate()?;
    match &cfg.command {
        Command::Identities { max_m, inject_fault } => cmd_identities(*max_m, *inject_fault),
        Command::Decompose => cmd_decompose(cfg),
        Command::Bounds => cmd_bounds(cfg),
        Command::Definetti { state, full } => cmd_definetti(cfg, state, *full),
        Command::Broadcast { channel } => cmd_broadcast(cfg, channel),
        Command::Capacity => cmd_capacity(cfg),
        Command::Clonegap { n } => cmd_clonegap(cfg, *n),
        Command::RandomState => cmd_random_state(cfg),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let written = match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.body).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(outcome.body.as_bytes()).map_err(|e| e.to_string())
        }
    };
    if let Err(e) = written {
        eprintln!("error: cannot write output: {e}");
        return 2;
    }
    if outcome.pass {
        0
    } else {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_parsing() {
        assert_eq!(parse_range("2:12").unwrap(), (2, 12));
        assert!(parse_range("5:2").is_err());
        assert!(parse_range("5").is_err());
    }

    #[test]
    fn exit_codes() {
        let out = tempfile::tempdir().unwrap();
        let o = out.path().join("x.json");
        let o = o.to_str().unwrap();
        assert_eq!(run(["symclone", "identities", "--max-M", "1", "--out", o]), 0);
        assert_eq!(run(["symclone", "identities", "--max-M", "5", "--inject-fault", "--out", o]), 1);
        assert_eq!(run(["symclone", "bounds", "--M-range", "5:2", "--out", o]), 2);
        assert_eq!(run(["symclone", "decompose", "--d", "2", "--M", "1", "--k", "1", "--out", o]), 0);
        let text = std::fs::read_to_string(o).unwrap();
        assert!(text.contains("\"2/3\"") && text.contains("\"1/3\""));
        assert_eq!(run(["symclone", "definetti", "missing.json", "--out", o]), 2);
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_plot("t", "M", &[("a", vec![(1.0, 1.0), (2.0, 0.5)])]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("polyline"));
    }
}
