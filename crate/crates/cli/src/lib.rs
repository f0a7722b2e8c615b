//! The `tilelab` command line.
//!
//! Exit codes: 0 success, 1 invalid family, 2 usage, 3 runtime failure.

pub mod manifest;
pub mod svg;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use tilelab_core::bratteli::{approximant, read_jsonl, BratteliPath, PathPolicy};
use tilelab_core::cocycle::{collared_tiles, lyapunov_spectrum, Cocycle, CollaredTileSet, SpectrumParams};
use tilelab_core::ergodic::{boundary_measure_decay, deviation_series, patch_frequencies, DeviationParams, Observable, TilingContext, TilingSpec};
use tilelab_core::geometry::{Region, Vector};
use tilelab_core::sequence::{parse_word, Law};
use tilelab_core::substitution::{parse_family, product_family_2d, validate_type_h, TypeHFamily};

use manifest::{sidecar, wrap, Manifest};

#[derive(Debug)]
pub enum CliError {
    Invalid(String),
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Invalid(m) | CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "tilelab", version, about = "Random substitution tilings: patches, cocycles and deviation of ergodic averages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the type-H conditions of a family file.
    Validate(ValidateArgs),
    /// Write the tiles of an approximant as JSON lines.
    Expand(ExpandArgs),
    /// Draw a JSONL patch as SVG.
    Render(RenderArgs),
    /// Lyapunov spectrum of the transition cocycle.
    Lyapunov(LyapunovArgs),
    /// Ergodic integrals over dilated regions and their growth exponent.
    Deviate(DeviateArgs),
    /// Patch frequencies along two independent paths.
    Freqs(FreqsArgs),
    /// Decay of the measure of boundary paths.
    Boundary(BoundaryArgs),
    /// Cartesian product of two one-dimensional families.
    Product(ProductArgs),
}

#[derive(Args, Debug, Serialize)]
struct ValidateArgs {
    family: PathBuf,
    /// Depth of the approximants examined for overlaps.
    #[arg(long, default_value_t = 2)]
    depth: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["word", "law"]))]
struct ExpandArgs {
    family: PathBuf,
    /// Rule word, repeated cyclically up to the depth.
    #[arg(long)]
    word: Option<String>,
    #[arg(long)]
    law: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    depth: usize,
    /// Prototile id of the origin tile.
    #[arg(long)]
    start: Option<String>,
    /// leftmost, random:<seed> or cyclic:<i,j,..>
    #[arg(long, default_value = "leftmost")]
    policy: String,
    #[arg(long)]
    collared: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct RenderArgs {
    patch: PathBuf,
    #[arg(long)]
    family: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct LyapunovArgs {
    family: PathBuf,
    /// fixed:<word>, periodic:<word> or bernoulli:<p1,..,pN>
    #[arg(long)]
    law: String,
    #[arg(long, default_value_t = 200)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 64)]
    warmup: usize,
    #[arg(long)]
    collared: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct DeviateArgs {
    family: PathBuf,
    /// Weights per class, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    beta: String,
    #[arg(long)]
    collared: bool,
    /// interval:lo,hi | box:x0,y0,x1,y1 | disk:cx,cy,r
    #[arg(long, allow_hyphen_values = true)]
    region: String,
    #[arg(long, default_value_t = 4.0)]
    t0: f64,
    #[arg(long, default_value_t = 1048576.0)]
    tmax: f64,
    #[arg(long, default_value = "fixed:1")]
    law: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "leftmost")]
    policy: String,
    #[arg(long)]
    start: Option<String>,
    /// Slope tolerance of the verdict.
    #[arg(long, default_value_t = 0.05)]
    tol: f64,
    /// JSON report; the series also goes to the same path with a `.csv` extension.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug, Serialize)]
struct FreqsArgs {
    family: PathBuf,
    #[arg(long)]
    law: String,
    #[arg(long, default_value = "5,10,20")]
    depths: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    collared: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct BoundaryArgs {
    family: PathBuf,
    #[arg(long)]
    law: String,
    #[arg(long, default_value_t = 20)]
    kmax: usize,
    #[arg(long, default_value_t = 20000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
struct ProductArgs {
    first: PathBuf,
    second: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Parses `args` (including the program name) and runs the command; returns the exit code.
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
    if let Some(n) = std::env::var("TILELAB_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match &cli.command {
        Command::Validate(a) => validate(a),
        Command::Expand(a) => expand(a),
        Command::Render(a) => render(a),
        Command::Lyapunov(a) => lyapunov(a),
        Command::Deviate(a) => deviate(a),
        Command::Freqs(a) => freqs(a),
        Command::Boundary(a) => boundary(a),
        Command::Product(a) => product(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn read_input(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_family(path: &Path) -> CliResult<(TypeHFamily, Vec<u8>)> {
    let bytes = read_input(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    let family = TypeHFamily::load(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))?;
    Ok((family, bytes))
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, manifest: &Manifest, report: impl Serialize) -> CliResult<()> {
    let text = wrap(manifest, report).map_err(runtime)?;
    match out {
        Some(p) => write_file(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn write_sidecar(out: &Path, manifest: &Manifest) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(manifest).map_err(runtime)?;
    text.push('\n');
    write_file(&sidecar(out), text.as_bytes())
}

fn parse_law(s: &str, family: &TypeHFamily) -> CliResult<Law> {
    Law::parse(s, family).map_err(usage)
}

fn parse_policy(s: &str) -> CliResult<PathPolicy> {
    match s.split_once(':') {
        None if s == "leftmost" => Ok(PathPolicy::Leftmost),
        Some(("random", seed)) => seed.trim().parse().map(PathPolicy::Random).map_err(|_| usage(format!("bad policy `{s}`"))),
        Some(("cyclic", p)) => {
            let v: Vec<usize> = p.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>().map_err(|_| usage(format!("bad policy `{s}`")))?;
            if v.is_empty() {
                return Err(usage("empty cyclic policy"));
            }
            Ok(PathPolicy::Cyclic(v))
        }
        _ => Err(usage(format!("unknown policy `{s}`"))),
    }
}

fn parse_numbers(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("bad {what} `{s}`")))).collect()
}

fn parse_region(s: &str, dim: usize) -> CliResult<Region> {
    let (kind, arg) = s.split_once(':').ok_or_else(|| usage(format!("bad region `{s}`")))?;
    let v = parse_numbers(arg, "region")?;
    let region = match (kind, v.as_slice()) {
        ("interval", &[lo, hi]) if lo < hi => Region::Interval { lo, hi },
        ("box", &[x0, y0, x1, y1]) if x0 < x1 && y0 < y1 => Region::Box { lo: Vector::new(x0, y0), hi: Vector::new(x1, y1) },
        ("disk", &[cx, cy, r]) if r > 0.0 => Region::Disk { center: Vector::new(cx, cy), radius: r },
        _ => return Err(usage(format!("bad region `{s}`"))),
    };
    if region.dim() != dim {
        return Err(usage(format!("region `{s}` has dimension {}, family has {dim}", region.dim())));
    }
    Ok(region)
}

fn parse_start(s: Option<&str>, family: &TypeHFamily) -> CliResult<usize> {
    match s {
        None => Ok(0),
        Some(id) => family.prototile_index(id).ok_or_else(|| usage(format!("unknown prototile `{id}`"))),
    }
}

fn collared_set(family: &TypeHFamily, alphabet: &[usize]) -> CliResult<CollaredTileSet> {
    let set = collared_tiles(family, alphabet, 2, 64).map_err(runtime)?;
    for w in &set.warnings {
        eprintln!("warning: {w}");
    }
    Ok(set)
}

fn validate(a: &ValidateArgs) -> CliResult<i32> {
    let bytes = read_input(&a.family)?;
    let text = String::from_utf8_lossy(&bytes);
    let family = parse_family(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", a.family.display())))?;
    let report = validate_type_h(&family, a.depth);
    for c in &report.checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        if c.witness.is_empty() {
            println!("{verdict} {}", c.name);
        } else {
            println!("{verdict} {}: {}", c.name, c.witness);
        }
    }
    if a.out.is_some() {
        emit(a.out.as_deref(), &Manifest::new("validate", &[&bytes], None, a), &report)?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn expand(a: &ExpandArgs) -> CliResult<i32> {
    let (family, bytes) = load_family(&a.family)?;
    let (word, alphabet) = match (&a.word, &a.law) {
        (Some(w), _) => {
            let base = parse_word(w, &family).map_err(usage)?;
            let law = Law::Periodic(base);
            (law.sample(a.depth, a.seed), law.support())
        }
        (None, Some(l)) => {
            let law = parse_law(l, &family)?;
            (law.sample(a.depth, a.seed), law.support())
        }
        (None, None) => return Err(usage("one of --word or --law is required")),
    };
    let start = parse_start(a.start.as_deref(), &family)?;
    let path = BratteliPath::extend(&family, &word, start, &parse_policy(&a.policy)?);
    let mut patch = approximant(&family, &path, a.depth).map_err(runtime)?;
    if a.collared {
        let set = collared_set(&family, &alphabet)?;
        let ctx = TilingContext::new(&family, path, Some(&set)).map_err(runtime)?;
        for (t, c) in patch.tiles.iter_mut().zip(ctx.leaf_classes()) {
            t.collared = Some(c);
        }
    }
    let mut buf = Vec::new();
    patch.write_jsonl(&family, &mut buf).map_err(runtime)?;
    write_file(&a.out, &buf)?;
    write_sidecar(&a.out, &Manifest::new("expand", &[&bytes], Some(a.seed), a))?;
    eprintln!("{} tiles", patch.tiles.len());
    Ok(0)
}

fn render(a: &RenderArgs) -> CliResult<i32> {
    let (family, fbytes) = load_family(&a.family)?;
    let pbytes = fs::read(&a.patch).map_err(|e| runtime(format!("{}: {e}", a.patch.display())))?;
    let tiles = read_jsonl(&family, pbytes.as_slice()).map_err(runtime)?;
    let svg = svg::render_svg(&family, &tiles).ok_or_else(|| runtime("patch is empty"))?;
    write_file(&a.out, svg.as_bytes())?;
    write_sidecar(&a.out, &Manifest::new("render", &[&fbytes, &pbytes], None, a))?;
    Ok(0)
}

#[derive(Serialize)]
struct LyapunovOutput<'a> {
    classes: usize,
    collared: bool,
    #[serde(flatten)]
    spectrum: &'a tilelab_core::cocycle::LyapunovReport,
}

fn cocycle_for(family: &TypeHFamily, law: &Law, collared: bool) -> CliResult<(Cocycle, Option<CollaredTileSet>)> {
    if collared {
        let set = collared_set(family, &law.support())?;
        let c = Cocycle::collared(family, &set).map_err(runtime)?;
        Ok((c, Some(set)))
    } else {
        Ok((Cocycle::uncollared(family), None))
    }
}

fn lyapunov(a: &LyapunovArgs) -> CliResult<i32> {
    let (family, bytes) = load_family(&a.family)?;
    let law = parse_law(&a.law, &family)?;
    if a.samples == 0 || a.n == 0 {
        return Err(usage("--n and --samples must be positive"));
    }
    let (cocycle, _) = cocycle_for(&family, &law, a.collared)?;
    let p = SpectrumParams { n: a.n, samples: a.samples, seed: a.seed, warmup: a.warmup };
    let report = lyapunov_spectrum(&cocycle, &law, &p).map_err(runtime)?;
    let out = LyapunovOutput { classes: cocycle.size, collared: a.collared, spectrum: &report };
    emit(a.out.as_deref(), &Manifest::new("lyapunov", &[&bytes], Some(a.seed), a), &out)?;
    if a.out.is_some() {
        let ex: Vec<String> = report.exponents.iter().map(|x| format!("{x:.6}")).collect();
        println!("exponents: {}", ex.join(" "));
    }
    Ok(0)
}

fn deviate(a: &DeviateArgs) -> CliResult<i32> {
    let (family, bytes) = load_family(&a.family)?;
    let law = parse_law(&a.law, &family)?;
    let beta = parse_numbers(&a.beta, "beta")?;
    let region = parse_region(&a.region, family.dim)?;
    let policy = parse_policy(&a.policy)?;
    let start = parse_start(a.start.as_deref(), &family)?;
    if !(a.t0 > 0.0 && a.tmax > a.t0 && a.tol >= 0.0) {
        return Err(usage("need 0 < t0 < tmax and tol >= 0"));
    }
    let set = if a.collared { Some(collared_set(&family, &law.support())?) } else { None };
    let size = set.as_ref().map(|s| s.len()).unwrap_or(family.m());
    if beta.len() != size {
        return Err(usage(format!("--beta has {} entries, the basis has {size}", beta.len())));
    }
    let spec = TilingSpec { family: &family, set: set.as_ref(), law: &law, start, policy };
    let p = DeviationParams { t0: a.t0, t_max: a.tmax, tol: a.tol, ..DeviationParams::default() };
    let report = deviation_series(&spec, &Observable::new(beta, true), &region, &p, a.seed).map_err(runtime)?;
    let manifest = Manifest::new("deviate", &[&bytes], Some(a.seed), a);
    emit(Some(&a.out), &manifest, &report)?;
    let csv_path = a.out.with_extension("csv");
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(runtime)?;
    write_file(&csv_path, &csv)?;
    write_sidecar(&csv_path, &manifest)?;
    println!(
        "{} slope {:.4} predicted {:.4} ({:?}, tol {})",
        if report.pass { "PASS" } else { "FAIL" },
        report.upper_envelope_slope,
        report.predicted,
        report.claim,
        report.tolerance
    );
    Ok(0)
}

fn freqs(a: &FreqsArgs) -> CliResult<i32> {
    let (family, bytes) = load_family(&a.family)?;
    let law = parse_law(&a.law, &family)?;
    let depths: Vec<usize> = a.depths.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>().map_err(|_| usage(format!("bad depths `{}`", a.depths)))?;
    let set = if a.collared { Some(collared_set(&family, &law.support())?) } else { None };
    let report = patch_frequencies(&family, set.as_ref(), &law, &depths, a.seed).map_err(runtime)?;
    emit(a.out.as_deref(), &Manifest::new("freqs", &[&bytes], Some(a.seed), a), &report)?;
    Ok(0)
}

fn boundary(a: &BoundaryArgs) -> CliResult<i32> {
    let (family, bytes) = load_family(&a.family)?;
    let law = parse_law(&a.law, &family)?;
    if a.kmax == 0 || a.samples == 0 {
        return Err(usage("--kmax and --samples must be positive"));
    }
    let report = boundary_measure_decay(&family, &law, a.kmax, a.samples, a.seed).map_err(runtime)?;
    emit(a.out.as_deref(), &Manifest::new("boundary", &[&bytes], Some(a.seed), a), &report)?;
    Ok(0)
}

fn product(a: &ProductArgs) -> CliResult<i32> {
    let (f, fb) = load_family(&a.first)?;
    let (g, gb) = load_family(&a.second)?;
    let p = product_family_2d(&f, &g).map_err(|e| CliError::Invalid(e.to_string()))?;
    write_file(&a.out, p.to_toml().as_bytes())?;
    write_sidecar(&a.out, &Manifest::new("product", &[&fb, &gb], None, a))?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tilelab_core::fixtures;

    #[test]
    fn policies() {
        assert_eq!(parse_policy("leftmost").unwrap(), PathPolicy::Leftmost);
        assert_eq!(parse_policy("random:7").unwrap(), PathPolicy::Random(7));
        assert_eq!(parse_policy("cyclic:1,0").unwrap(), PathPolicy::Cyclic(vec![1, 0]));
        assert_eq!(parse_policy("middle").unwrap_err().code(), 2);
        assert_eq!(parse_policy("cyclic:x").unwrap_err().code(), 2);
    }

    #[test]
    fn regions() {
        assert_eq!(parse_region("interval:0,1", 1).unwrap(), Region::Interval { lo: 0.0, hi: 1.0 });
        assert!(matches!(parse_region("box:-1,-1,1,1", 2).unwrap(), Region::Box { .. }));
        assert!(matches!(parse_region("disk:0,0,2", 2).unwrap(), Region::Disk { .. }));
        assert!(parse_region("box:0,0,1,1", 1).is_err());
        assert!(parse_region("interval:1,0", 1).is_err());
        assert!(parse_region("disk:0,0", 2).is_err());
    }

    #[test]
    fn starts() {
        let f = fixtures::four1d();
        assert_eq!(parse_start(Some("b"), &f).unwrap(), 1);
        assert_eq!(parse_start(None, &f).unwrap(), 0);
        assert!(parse_start(Some("c"), &f).is_err());
    }
}
