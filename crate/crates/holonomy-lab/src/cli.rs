//! Command-line driver: curve ingestion, transport evaluation, sweep
//! orchestration over c-grids, classification, and the paired embedding
//! demo. All outputs are deterministic; files carry an options hash.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::apcheck::{
    find_almost_periods, non_ap_witness, ApError, SampledFunction,
};
use crate::closedform::{line_solution, spiral_solution};
use crate::curve::{
    classify_field, default_conjugator, from_spec, Classification, ConjugatedFrame, Curve,
    CurveError, CurveSpec, FrameField, M_FLOOR,
};
use crate::energy::energy_a_from_endpoints;
use crate::report::{
    options_hash, write_csv, write_json, write_svg, ReportError, Series, SweepRow,
};
use crate::transport::{holonomy_segment, IntegratorOptions, Scale, TransportError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("curve spec error: {0}")]
    Spec(String),
    #[error("integrator error: {0}")]
    Integrator(#[from] TransportError),
    #[error("m vanishes on the domain; retry with --conjugate")]
    MVanishes,
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Integrator(_) => 3,
            CliError::MVanishes => 4,
            CliError::Report(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "holonomy-lab",
    version,
    about = "SU(2) parallel transports of scaled connections along analytic curves"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Spacing {
    Linear,
    Log,
}

impl std::fmt::Display for Spacing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Spacing::Linear => write!(f, "linear"),
            Spacing::Log => write!(f, "log"),
        }
    }
}

#[derive(Debug, Args)]
struct CurveArg {
    /// Path to a curve spec JSON file.
    #[arg(long)]
    curve: PathBuf,
    /// Conjugate the frame by the default conjugator (for curves with m = 0).
    #[arg(long, default_value_t = false)]
    conjugate: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Transport to time t at one scale and print the SU(2) element.
    Transport {
        #[command(flatten)]
        curve: CurveArg,
        /// Isotropic scale c.
        #[arg(long, conflicts_with = "cvec")]
        c: Option<f64>,
        /// Anisotropic diagonal scale "c1,c2,c3".
        #[arg(long)]
        cvec: Option<String>,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 40.0)]
        oscillation_factor: f64,
    },
    /// Sweep a c-grid: transports, energies, AP diagnostics, comparisons.
    Sweep {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        c_min: f64,
        #[arg(long)]
        c_max: f64,
        #[arg(long)]
        count: usize,
        #[arg(long, value_enum, default_value_t = Spacing::Linear)]
        spacing: Spacing,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated subset of transport,energy,apcheck,closedform_compare.
        #[arg(long, default_value = "transport,energy,apcheck,closedform_compare")]
        outputs: String,
        #[arg(long, default_value_t = 40.0)]
        oscillation_factor: f64,
    },
    /// Classify the curve (Line / PlanarCircle / Spiral / General).
    Classify {
        #[command(flatten)]
        curve: CurveArg,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Paired experiment: line (AP evidence) vs circle (non-AP witness).
    DemoEmbedding {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Entry point; returns the process exit code.
pub fn run() -> i32 {
    init_thread_pool();
    match Cli::parse().command.execute() {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn init_thread_pool() {
    if let Ok(v) = std::env::var("HOLONOMY_LAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
}

fn load_curve(path: &Path) -> Result<Curve, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Spec(format!("{}: {e}", path.display())))?;
    let spec: CurveSpec =
        serde_json::from_str(&text).map_err(|e| CliError::Spec(e.to_string()))?;
    from_spec(&spec).map_err(|e| CliError::Spec(e.to_string()))
}

enum FieldRef<'a> {
    Plain(&'a Curve),
    Conj(ConjugatedFrame<'a>),
}

impl FieldRef<'_> {
    fn as_dyn(&self) -> &dyn FrameField {
        match self {
            FieldRef::Plain(c) => *c,
            FieldRef::Conj(f) => f,
        }
    }
}

fn make_field(curve: &Curve, conjugate: bool) -> Result<FieldRef<'_>, CliError> {
    if conjugate {
        let conj = ConjugatedFrame::new(curve, default_conjugator())
            .map_err(|e| CliError::Spec(e.to_string()))?;
        Ok(FieldRef::Conj(conj))
    } else {
        Ok(FieldRef::Plain(curve))
    }
}

fn m_available(field: &dyn FrameField, t: f64) -> bool {
    (0..=256).all(|k| field.frame_at(t * k as f64 / 256.0).m.norm() > M_FLOOR)
}

fn parse_cvec(s: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Spec(format!("bad cvec '{s}': {e}")))?;
    if parts.len() != 3 {
        return Err(CliError::Spec(format!(
            "cvec needs exactly 3 components, got {}",
            parts.len()
        )));
    }
    Ok([parts[0], parts[1], parts[2]])
}

fn build_grid(c_min: f64, c_max: f64, count: usize, spacing: Spacing) -> Result<Vec<f64>, CliError> {
    if count < 2 || c_min.partial_cmp(&c_max) != Some(std::cmp::Ordering::Less) {
        return Err(CliError::Spec(
            "grid needs count >= 2 and c_min < c_max".into(),
        ));
    }
    if spacing == Spacing::Log && c_min <= 0.0 {
        return Err(CliError::Spec("log spacing needs c_min > 0".into()));
    }
    Ok((0..count)
        .map(|k| {
            let s = k as f64 / (count - 1) as f64;
            match spacing {
                Spacing::Linear => c_min + s * (c_max - c_min),
                Spacing::Log => c_min * (c_max / c_min).powf(s),
            }
        })
        .collect())
}

impl Command {
    fn execute(self) -> Result<(), CliError> {
        match self {
            Command::Transport { curve, c, cvec, t, oscillation_factor } => {
                cmd_transport(&curve, c, cvec.as_deref(), t, oscillation_factor)
            }
            Command::Sweep {
                curve,
                t,
                c_min,
                c_max,
                count,
                spacing,
                out,
                outputs,
                oscillation_factor,
            } => cmd_sweep(
                &curve,
                t,
                c_min,
                c_max,
                count,
                spacing,
                &out,
                &outputs,
                oscillation_factor,
            ),
            Command::Classify { curve, tol } => cmd_classify(&curve, tol),
            Command::DemoEmbedding { t, out } => cmd_demo_embedding(t, &out),
        }
    }
}

fn cmd_transport(
    curve_arg: &CurveArg,
    c: Option<f64>,
    cvec: Option<&str>,
    t: f64,
    oscillation_factor: f64,
) -> Result<(), CliError> {
    let curve = load_curve(&curve_arg.curve)?;
    let field = make_field(&curve, curve_arg.conjugate)?;
    let scale = match (c, cvec) {
        (Some(c), None) => Scale::Iso(c),
        (None, Some(s)) => Scale::Aniso(parse_cvec(s)?),
        _ => return Err(CliError::Spec("provide exactly one of --c or --cvec".into())),
    };
    let opts = IntegratorOptions {
        oscillation_factor,
        ..Default::default()
    };
    let r = holonomy_segment(field.as_dyn(), scale, 0.0, t, &opts)?;
    println!("a = {:.14e} {:+.14e}i", r.g.a.re, r.g.a.im);
    println!("b = {:.14e} {:+.14e}i", r.g.b.re, r.g.b.im);
    println!("unitarity_drift = {:.3e}", r.drift);
    println!("steps = {}", r.steps);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    curve_arg: &CurveArg,
    t: f64,
    c_min: f64,
    c_max: f64,
    count: usize,
    spacing: Spacing,
    out: &Path,
    outputs: &str,
    oscillation_factor: f64,
) -> Result<(), CliError> {
    let wanted: Vec<&str> = outputs.split(',').map(str::trim).collect();
    for w in &wanted {
        if !["transport", "energy", "apcheck", "closedform_compare"].contains(w) {
            return Err(CliError::Spec(format!("unknown output kind '{w}'")));
        }
    }
    let want = |k: &str| wanted.contains(&k);

    let curve = load_curve(&curve_arg.curve)?;
    let field_ref = make_field(&curve, curve_arg.conjugate)?;
    let field = field_ref.as_dyn();
    let grid = build_grid(c_min, c_max, count, spacing)?;
    let opts = IntegratorOptions {
        oscillation_factor,
        ..Default::default()
    };

    let energy_ok = m_available(field, t);
    if want("energy") && !energy_ok {
        return Err(CliError::MVanishes);
    }

    let hash = options_hash(&format!(
        "cmd=sweep;curve={};t={t};c_min={c_min};c_max={c_max};count={count};\
         spacing={spacing};outputs={outputs};conjugate={};oscillation_factor={oscillation_factor}",
        curve_arg.curve.display(),
        curve_arg.conjugate,
    ));

    let f0 = field.frame_at(0.0);
    let ft = field.frame_at(t);
    let rows: Vec<SweepRow> = grid
        .par_iter()
        .map(|&c| -> Result<SweepRow, CliError> {
            let r = holonomy_segment(field, Scale::Iso(c), 0.0, t, &opts)
                .map_err(|e| {
                    CliError::Spec(format!("c = {c}: {e}"))
                })?;
            let energy = if want("energy") {
                energy_a_from_endpoints(&f0, &ft, &r.g)
            } else {
                Complex64::new(0.0, 0.0)
            };
            Ok(SweepRow {
                c,
                a: r.g.a,
                b: r.g.b,
                energy,
                drift: r.drift,
            })
        })
        .collect::<Result<_, _>>()?;

    std::fs::create_dir_all(out)?;
    write_csv(&out.join("sweep.csv"), &rows, &hash)?;

    if want("apcheck") {
        let verdicts = apcheck_verdicts(&rows, t, spacing, &format!("{}|t={t}", curve_arg.curve.display()));
        write_json(&out.join("apcheck.json"), verdicts, &hash)?;
    }

    if want("closedform_compare") {
        let cmp = closedform_compare(field, &rows, t);
        write_json(&out.join("closedform_compare.json"), cmp, &hash)?;
    }

    let xs: Vec<f64> = rows.iter().map(|r| r.c).collect();
    let b_mag: Vec<f64> = rows.iter().map(|r| r.b.norm()).collect();
    write_svg(
        &out.join("bmag.svg"),
        "|b(c)|",
        &[Series { label: "|b|", xs: &xs, ys: &b_mag }],
        &hash,
    )?;
    if want("energy") {
        let e_mag: Vec<f64> = rows.iter().map(|r| r.energy.norm()).collect();
        write_svg(
            &out.join("energy.svg"),
            "|Ea(c)|",
            &[Series { label: "|Ea|", xs: &xs, ys: &e_mag }],
            &hash,
        )?;
    }
    println!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

/// AP diagnostics on the swept b(c) samples; scans that cannot run on this
/// grid are recorded as skipped rather than failing the sweep.
fn apcheck_verdicts(
    rows: &[SweepRow],
    t: f64,
    spacing: Spacing,
    source: &str,
) -> serde_json::Value {
    if spacing != Spacing::Linear {
        return serde_json::json!({
            "skipped": "apcheck requires a uniform (linear) grid"
        });
    }
    let step = rows[1].c - rows[0].c;
    let f = SampledFunction::new(
        rows[0].c,
        step,
        rows.iter().map(|r| r.b).collect(),
        format!("{source}|b"),
    );
    let to_json = |r: Result<crate::apcheck::APVerdict, ApError>| match r {
        Ok(v) => serde_json::to_value(&v).expect("verdict json"),
        Err(e) => serde_json::json!({ "skipped": e.to_string() }),
    };

    let window = 3.0 * std::f64::consts::PI / t.max(1e-300);
    let witness_scan = to_json(non_ap_witness(&f, window));

    // Shift-resolution-limited ε: b(c) oscillates at rate t, so the grid can
    // certify discrepancies down to about step·t.
    let sup_b = rows.iter().map(|r| r.b.norm()).fold(0.0f64, f64::max);
    let eps = (4.0 * step * t * sup_b.max(1e-12)).max(1e-9);
    let l_window = 3.0 * std::f64::consts::TAU / t.max(1e-300);
    let period_scan = if l_window >= 10.0 * step {
        to_json(find_almost_periods(&f, eps, l_window))
    } else {
        serde_json::json!({ "skipped": "grid too short for the period window" })
    };

    serde_json::json!({
        "witness_scan": witness_scan,
        "period_scan": period_scan,
    })
}

/// Compare the swept transports against the closed form selected by
/// classification; General curves have no closed form to compare.
fn closedform_compare(field: &dyn FrameField, rows: &[SweepRow], t: f64) -> serde_json::Value {
    let classification = match classify_field(field, 1e-8) {
        Ok(c) => c,
        Err(e) => {
            return serde_json::json!({ "skipped": e.to_string() });
        }
    };
    let f0 = field.frame_at(0.0);
    let exact = |c: f64| match &classification {
        Classification::Line => Some(line_solution(f0.m, f0.n, c, t)),
        Classification::PlanarCircle(p) | Classification::Spiral(p) => {
            Some(spiral_solution(p, c, t))
        }
        Classification::General => None,
    };
    let mut max_distance = 0.0f64;
    for r in rows {
        match exact(r.c) {
            Some(g) => {
                let num = crate::algebra::Su2::new_unchecked(r.a, r.b);
                max_distance = max_distance.max(crate::algebra::su2_distance(&num, &g));
            }
            None => {
                return serde_json::json!({
                    "classification": "General",
                    "note": "no constant-coefficient closed form"
                });
            }
        }
    }
    serde_json::json!({
        "classification": classification.family_tag(),
        "max_su2_distance": max_distance,
    })
}

fn cmd_classify(curve_arg: &CurveArg, tol: f64) -> Result<(), CliError> {
    let curve = load_curve(&curve_arg.curve)?;
    let field = make_field(&curve, curve_arg.conjugate)?;
    match classify_field(field.as_dyn(), tol) {
        Ok(Classification::Line) => println!("Line"),
        Ok(Classification::PlanarCircle(p)) => {
            println!(
                "PlanarCircle lambda={:.6e} varkappa={:.6e} n0={:.6e}",
                p.lambda, p.varkappa, p.n0
            );
        }
        Ok(Classification::Spiral(p)) => {
            println!(
                "Spiral lambda={:.6e} varkappa={:.6e} n0={:.6e}",
                p.lambda, p.varkappa, p.n0
            );
        }
        Ok(Classification::General) => println!("General"),
        Err(CurveError::MVanishes) => return Err(CliError::MVanishes),
        Err(e) => return Err(CliError::Spec(e.to_string())),
    }
    Ok(())
}

/// The executable contrapositive of the no-continuous-extension statement:
/// the line transport is (almost) periodic in c while the circle transport
/// admits a non-AP witness at the same t.
fn cmd_demo_embedding(t: f64, out: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(out)?;
    let hash = options_hash(&format!("cmd=demo-embedding;t={t}"));
    if t == 0.0 {
        write_json(
            &out.join("demo.json"),
            serde_json::json!({
                "status": "DEGENERATE",
                "t": 0.0,
                "note": "at t = 0 both transports are identically the identity (f = 0)"
            }),
            &hash,
        )?;
        println!("DEGENERATE: t = 0");
        return Ok(());
    }

    let line = Curve::line([1.0, 0.0, 0.0], t).map_err(|e| CliError::Spec(e.to_string()))?;
    let circle = Curve::circle(1.0, t).map_err(|e| CliError::Spec(e.to_string()))?;
    let opts = IntegratorOptions::default();

    let c_max = 2000.0;
    let step = 0.01;
    let count = (c_max / step) as usize + 1;

    let mut report = serde_json::Map::new();
    report.insert("status".into(), "OK".into());
    report.insert("t".into(), serde_json::json!(t));

    for (name, curve) in [("line", &line), ("circle", &circle)] {
        // Classification selects the validated closed form; a transport spot
        // check ties the dense closed-form samples back to the integrator.
        let classification =
            classify_field(curve, 1e-8).map_err(|e| CliError::Spec(e.to_string()))?;
        let f0 = curve.frame_at(0.0);
        let exact = |c: f64| match &classification {
            Classification::Line => line_solution(f0.m, f0.n, c, t),
            Classification::PlanarCircle(p) | Classification::Spiral(p) => {
                spiral_solution(p, c, t)
            }
            Classification::General => unreachable!("built-in demo curves"),
        };
        let mut spot = 0.0f64;
        for &c in &[0.5, 3.2, 10.0] {
            let num = holonomy_segment(curve, Scale::Iso(c), 0.0, t, &opts)?.g;
            spot = spot.max(crate::algebra::su2_distance(&num, &exact(c)));
        }

        let f = SampledFunction::from_fn(
            |c| exact(c).b,
            0.0,
            step,
            count,
            format!("demo|{name}|t={t}|b"),
        );
        let verdict = match classification {
            Classification::Line => {
                let eps = (4.0 * step * t).max(1e-9);
                find_almost_periods(&f, eps, 3.0 * std::f64::consts::TAU / t)
            }
            _ => non_ap_witness(&f, 3.0 * std::f64::consts::PI / t),
        };
        let verdict_json = match verdict {
            Ok(v) => serde_json::to_value(&v).expect("verdict json"),
            Err(e) => serde_json::json!({ "skipped": e.to_string() }),
        };
        report.insert(
            name.into(),
            serde_json::json!({
                "classification": classification.family_tag(),
                "spot_check_max_distance": spot,
                "verdict": verdict_json,
            }),
        );

        // Downsampled |b(c)| plot.
        let stride = (count / 2000).max(1);
        let xs: Vec<f64> = (0..count).step_by(stride).map(|k| k as f64 * step).collect();
        let ys: Vec<f64> = xs.iter().map(|&c| exact(c).b.norm()).collect();
        write_svg(
            &out.join(format!("demo_{name}_bmag.svg")),
            &format!("|b(c)| {name}, t = {t}"),
            &[Series { label: "|b|", xs: &xs, ys: &ys }],
            &hash,
        )?;
    }

    write_json(&out.join("demo.json"), serde_json::Value::Object(report), &hash)?;
    println!("wrote demo bundle to {}", out.display());
    Ok(())
}
