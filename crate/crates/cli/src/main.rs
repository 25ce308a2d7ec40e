//! `fanforge` command line.
//!
//! Exit codes: 0 when the command succeeds and its checks pass, 2 for a negative domain
//! answer (infeasible set, failed verification, non-equivalent sets, non-smooth witness),
//! 1 for errors.

mod config;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use fanforge::analyze::{
    label_partition, orbit_witness, partition_battery, preserves_labels, verify_epg_with, verify_product, PartitionLabel, Scheme,
    VerifyOptions,
};
use fanforge::closedset::{classify_feasibility, equivalently_embedded, parse_set_expr, ClosedSetDesc, Equivalence, FeasibilityVerdict, WitnessScope};
use fanforge::comb::{BladeKind, Comb, FanPoint, Provenance};
use fanforge::construct::{build_epg_comb, build_for_set, build_nonsmooth_3d, ProductComb, SpatialModel};
use fanforge::geometry::{smoothness_scan, Model, ScanOptions, SequenceRule, SmoothnessReport};
use fanforge::io::{decode_comb, decode_spatial, encode_comb, encode_spatial, encode_verify_report, recipe_json, COMB_FORMAT, SPATIAL_FORMAT};
use fanforge::rational::{fmt_q, Q};
use fanforge::svg::{render_comb, render_fan, render_spatial, Style};
use serde_json::json;

use config::{Overrides, Settings};

#[derive(Parser, Debug)]
#[command(name = "fanforge", version, about = "Exact constructions of endpoint-generated smooth fans")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone, Default)]
struct Common {
    /// Settings file of `key=value` lines; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    depth: Option<usize>,
    #[arg(long, global = true)]
    branch: Option<usize>,
    /// Tolerance as `p/q`.
    #[arg(long, global = true)]
    eps: Option<String>,
    #[arg(long = "cantor-depth", global = true)]
    cantor_depth: Option<usize>,
    /// Partition scheme: `odd` or `even`.
    #[arg(long, global = true)]
    scheme: Option<String>,
    #[arg(long, global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Rendering style: `comb`, `fan` or `spatial`.
    #[arg(long, global = true)]
    style: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether a closed set admits an endpoint-generated smooth fan.
    Classify {
        #[arg(long)]
        set: String,
    },
    /// Build the truncated comb for a feasible set and write the comb file.
    Build {
        #[arg(long)]
        set: String,
    },
    /// Compare every blade's trace with the image of the source set.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// Set to verify against; defaults to the comb's source.
        #[arg(long)]
        set: Option<String>,
    },
    /// Decide whether two sets are equivalently embedded in [0,1].
    Equiv {
        #[arg(long)]
        set1: String,
        #[arg(long)]
        set2: String,
    },
    /// Label sample points by partition class and check orbit witnesses.
    Partition {
        /// Comb file; built from `--set` or the scheme's default set when absent.
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long)]
        set: Option<String>,
    },
    /// Scan arcs converging to sample targets in a comb or spatial model.
    Smooth {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write an SVG picture of a comb or spatial file.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Build the spatial non-smooth model and report its sheet-descent witness.
    NonsmoothDemo,
}

/// Negative domain answer; maps to exit code 2.
#[derive(Debug)]
struct Negative(String);

impl std::fmt::Display for Negative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Negative {}

fn negative(msg: impl Into<String>) -> anyhow::Error {
    Negative(msg.into()).into()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<Negative>() => {
            eprintln!("{e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn settings(c: &Common) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &c.config {
        s.load_file(path)?;
    }
    s.apply(&Overrides {
        depth: c.depth,
        branch: c.branch,
        eps: c.eps.clone(),
        cantor_depth: c.cantor_depth,
        scheme: c.scheme.clone(),
        m: c.m,
        samples: c.samples,
        style: c.style.clone(),
    })?;
    Ok(s)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_json(out: &Option<PathBuf>, v: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(v)?;
    text.push('\n');
    emit(out, &text)
}

fn parse_set(text: &str) -> Result<ClosedSetDesc> {
    parse_set_expr(text).with_context(|| format!("parsing set expression `{text}`"))
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

enum Loaded {
    Comb(Comb),
    Spatial(SpatialModel),
}

fn load(path: &Path) -> Result<Loaded> {
    let text = read(path)?;
    let v: serde_json::Value = serde_json::from_str(&text).with_context(|| format!("{}: not JSON", path.display()))?;
    match v.get("format").and_then(|f| f.as_str()) {
        Some(COMB_FORMAT) => Ok(Loaded::Comb(decode_comb(&text).with_context(|| path.display().to_string())?)),
        Some(SPATIAL_FORMAT) => Ok(Loaded::Spatial(decode_spatial(&text).with_context(|| path.display().to_string())?)),
        other => bail!("{}: unknown format {other:?}", path.display()),
    }
}

fn load_comb(path: &Path) -> Result<Comb> {
    match load(path)? {
        Loaded::Comb(c) => Ok(c),
        Loaded::Spatial(_) => bail!("{}: expected a comb file, found a spatial model", path.display()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let s = settings(&cli.common)?;
    let out = &cli.common.out;
    match cli.command {
        Command::Classify { set } => classify(&parse_set(&set)?, out),
        Command::Build { set } => build(&parse_set(&set)?, &s, out),
        Command::Verify { input, set } => verify(&input, set.as_deref(), &s, out),
        Command::Equiv { set1, set2 } => equiv(&parse_set(&set1)?, &parse_set(&set2)?, out),
        Command::Partition { input, set } => partition(input.as_deref(), set.as_deref(), &s, out),
        Command::Smooth { input } => smooth(&input, &s, out),
        Command::Render { input } => render(&input, s.style()?, out),
        Command::NonsmoothDemo => nonsmooth_demo(&s, out),
    }
}

fn classify(x: &ClosedSetDesc, out: &Option<PathBuf>) -> Result<()> {
    match classify_feasibility(x) {
        FeasibilityVerdict::Feasible(kind) => emit(out, &format!("feasible {kind:?}\n")),
        FeasibilityVerdict::Infeasible(reason) => {
            emit(out, &format!("infeasible {reason:?}\n"))?;
            Err(negative(format!("`{x}` admits no endpoint-generated smooth fan ({reason:?})")))
        }
    }
}

fn build(x: &ClosedSetDesc, s: &Settings, out: &Option<PathBuf>) -> Result<()> {
    if let FeasibilityVerdict::Infeasible(reason) = classify_feasibility(x) {
        return Err(negative(format!("`{x}` is infeasible ({reason:?})")));
    }
    let c = build_for_set(x, s.depth, s.branch, s.cantor_depth)?;
    emit(out, &encode_comb(&c))
}

fn verify(input: &Path, set: Option<&str>, s: &Settings, out: &Option<PathBuf>) -> Result<()> {
    let c = load_comb(input)?;
    let x = match set {
        Some(t) => parse_set(t)?,
        None => c.source.clone().context("comb has no source set; pass --set")?,
    };
    let opts = VerifyOptions::default();
    let report = if c.provenance == Provenance::Product {
        verify_product(&ProductComb::from_flat(&c)?, &x, &s.eps, &opts)?
    } else {
        verify_epg_with(&c, &x, &s.eps, &opts)?
    };
    emit(out, &encode_verify_report(&input.display().to_string(), &report))?;
    if report.pass {
        Ok(())
    } else {
        Err(negative(format!("verification failed at eps = {}", fmt_q(&s.eps))))
    }
}

fn equiv(a: &ClosedSetDesc, b: &ClosedSetDesc, out: &Option<PathBuf>) -> Result<()> {
    let (answer, detail) = match equivalently_embedded(a, b) {
        Equivalence::Yes { witness, scope } => {
            let scope = match scope {
                WitnessScope::Exact => json!("exact"),
                WitnessScope::Prefix(n) => json!({ "prefix": n }),
            };
            let pts: Vec<_> = witness.breakpoints().iter().map(|(u, v)| json!([fmt_q(u), fmt_q(v)])).collect();
            ("yes", json!({ "scope": scope, "witness": pts }))
        }
        Equivalence::No(why) => ("no", json!({ "reason": why })),
        Equivalence::Unknown(why) => ("unknown", json!({ "reason": why })),
    };
    emit_json(out, &json!({ "set1": a.to_string(), "set2": b.to_string(), "answer": answer, "detail": detail }))?;
    match answer {
        "yes" => Ok(()),
        _ => Err(negative(format!("sets are not shown equivalent ({answer})"))),
    }
}

/// Default set of a scheme: odd `{0} ∪ {i/(m+1)}`; even `{p_i} ∪ {0, 1/2} ∪ {(m+i−1)/(2m) : 2 ≤ i ≤ m}`.
fn scheme_set(scheme: Scheme) -> String {
    match scheme {
        Scheme::Odd(m) => {
            let pts: Vec<String> = (1..=m).map(|i| format!("pt({}/{})", i, m + 1)).collect();
            format!("pt(0)+{}", pts.join("+"))
        }
        Scheme::Even(m) => {
            let mut s = "biseq(0,1/2,1/2)".to_string();
            for i in 2..=m {
                s.push_str(&format!("+pt({}/{})", m + i - 1, 2 * m));
            }
            s
        }
    }
}

fn point_json(p: &FanPoint) -> serde_json::Value {
    match p {
        FanPoint::Top => json!("top"),
        FanPoint::OnBlade { index, height } => json!({ "index": index, "height": fmt_q(height) }),
    }
}

const WITNESS_PAIRS: usize = 20;

fn partition(input: Option<&Path>, set: Option<&str>, s: &Settings, out: &Option<PathBuf>) -> Result<()> {
    let scheme = s.scheme()?;
    let c = match (input, set) {
        (Some(p), _) => load_comb(p)?,
        (None, Some(t)) => build_epg_comb(&parse_set(t)?, s.depth, s.branch)?,
        (None, None) => build_epg_comb(&parse_set(&scheme_set(scheme))?, s.depth, s.branch.max(10))?,
    };
    let battery = partition_battery(&c, scheme, s.samples)?;
    let labels: Vec<PartitionLabel> = battery.iter().map(|p| label_partition(&c, p, scheme)).collect::<Result<_, _>>()?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for l in &labels {
        *counts.entry(l.to_string()).or_default() += 1;
    }
    let mut witnesses = Vec::new();
    let mut all_preserve = true;
    'outer: for i in 0..battery.len() {
        for j in (i + 1..battery.len()).step_by(7) {
            if witnesses.len() == WITNESS_PAIRS {
                break 'outer;
            }
            if labels[i] != labels[j] || battery[i] == battery[j] {
                continue;
            }
            let recipe = orbit_witness(&c, &battery[i], &battery[j], scheme)?;
            let hits = recipe.apply(&battery[i]) == battery[j];
            let preserves = preserves_labels(&c, &recipe, &battery, scheme)?;
            all_preserve &= hits && preserves;
            witnesses.push(json!({
                "from": point_json(&battery[i]),
                "to": point_json(&battery[j]),
                "label": labels[i].to_string(),
                "recipe": recipe_json(&recipe),
                "maps_endpoint": hits,
                "preserves_labels": preserves,
            }));
            break;
        }
    }
    let pass = counts.len() == scheme.classes() && all_preserve;
    let (name, m) = match scheme {
        Scheme::Odd(m) => ("odd", m),
        Scheme::Even(m) => ("even", m),
    };
    emit_json(
        out,
        &json!({
            "scheme": name,
            "m": m,
            "source": c.source.as_ref().map(|x| x.to_string()),
            "samples": battery.len(),
            "expected_classes": scheme.classes(),
            "observed_classes": counts.len(),
            "labels": counts,
            "witnesses": witnesses,
            "summary": { "pass": pass },
        }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(negative(format!("partition check failed: {} classes observed, {} expected", counts.len(), scheme.classes())))
    }
}

fn scan_json(target: &FanPoint, r: &SmoothnessReport) -> serde_json::Value {
    json!({
        "target": point_json(target),
        "converges": r.converges,
        "witness_gap": r.witness_gap,
        "final_gap": r.gaps.last().map(|g| json!([g.0, g.1])),
        "sequence_length": r.sequence.len(),
    })
}

/// Spatial targets: type-I base blades at height `min(3/4, tip)`.
fn spatial_targets(sm: &SpatialModel, count: usize) -> Vec<FanPoint> {
    let three_quarters = Q::new(3.into(), 4.into());
    sm.base
        .blades()
        .iter()
        .filter(|b| b.kind == BladeKind::TypeI)
        .take(count)
        .map(|b| FanPoint::on(b.index.clone(), b.tip.clone().min(three_quarters.clone())))
        .collect()
}

/// Comb targets: evenly strided blades at heights `tip·k/8`.
fn comb_targets(c: &Comb, count: usize) -> Vec<FanPoint> {
    let n = c.len();
    let count = count.min(n).max(1);
    (0..count)
        .map(|i| {
            let b = &c.blades()[i * n / count];
            FanPoint::on(b.index.clone(), &b.tip * Q::new(((i % 8) + 1).into(), 8.into()))
        })
        .collect()
}

fn smooth(input: &Path, s: &Settings, out: &Option<PathBuf>) -> Result<()> {
    let opts = ScanOptions::default();
    let mut rows = Vec::new();
    let mut all_converge = true;
    let mut max_witness = 0f64;
    let kind = match load(input)? {
        Loaded::Comb(c) => {
            for t in comb_targets(&c, s.samples) {
                let r = smoothness_scan(Model::Comb(&c), &t, SequenceRule::NearestTips(16), &opts)?;
                all_converge &= r.converges;
                rows.push(scan_json(&t, &r));
            }
            "comb"
        }
        Loaded::Spatial(sm) => {
            for t in spatial_targets(&sm, s.samples) {
                let r = smoothness_scan(Model::Spatial(&sm), &t, SequenceRule::SheetDescent, &opts)?;
                all_converge &= r.converges;
                if !r.converges {
                    max_witness = max_witness.max(r.witness_gap);
                }
                rows.push(scan_json(&t, &r));
            }
            "spatial"
        }
    };
    emit_json(
        out,
        &json!({
            "model": input.display().to_string(),
            "kind": kind,
            "targets": rows,
            "summary": { "all_converge": all_converge, "max_witness_gap": max_witness },
        }),
    )?;
    if all_converge {
        Ok(())
    } else {
        Err(negative(format!("non-smooth witness: gap ≥ {max_witness:.6}")))
    }
}

fn render(input: &Path, style: Style, out: &Option<PathBuf>) -> Result<()> {
    let svg = match (load(input)?, style) {
        (Loaded::Comb(c), Style::Comb) => render_comb(&c),
        (Loaded::Comb(c), Style::Fan) => render_fan(&c),
        (Loaded::Comb(_), Style::Spatial) => bail!("spatial style needs a spatial model file"),
        (Loaded::Spatial(sm), Style::Comb) => render_comb(&sm.base),
        (Loaded::Spatial(sm), Style::Fan) => render_fan(&sm.base),
        (Loaded::Spatial(sm), Style::Spatial) => render_spatial(&sm),
    };
    emit(out, &svg)
}

fn nonsmooth_demo(s: &Settings, out: &Option<PathBuf>) -> Result<()> {
    let m = if s.m < 2 { 4 } else { s.m };
    let sm = build_nonsmooth_3d(m, s.depth, s.branch)?;
    if let Some(p) = out {
        std::fs::write(p, encode_spatial(&sm)).with_context(|| format!("writing {}", p.display()))?;
    }
    let target = spatial_targets(&sm, 1).pop().context("model has no type-I blade")?;
    let r = smoothness_scan(Model::Spatial(&sm), &target, SequenceRule::SheetDescent, &ScanOptions::default())?;
    let FanPoint::OnBlade { index, height } = &target else { unreachable!() };
    let x = &sm.base.blade(index).expect("target blade exists").x;
    println!("sheets: {m}, blades: {}", sm.blade_count());
    println!("target: x = {}, y = {}", fmt_q(x), fmt_q(height));
    println!("sheet-descent scan converges: {}", r.converges);
    println!("witness gap lower bound: {:.6}", r.witness_gap);
    Ok(())
}
