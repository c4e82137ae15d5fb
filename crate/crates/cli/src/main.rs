//! `opband`: generate point sets and matrices, measure norms and spectra,
//! invert finite sections, and run the property suite, with JSON and CSV
//! output.
//!
//! Exit status: 0 on success, 1 when a property check fails, 2 on usage or
//! input errors, 3 on numerical failures (singularity, overflow,
//! non-convergence, violated numerical preconditions).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use opband_core::bgs::verify_bochner_phillips;
use opband_core::blockmat::{MatrixDoc, PointSetRef};
use opband_core::experiment::{
    generate_matrix, ExperimentConfig, GeneratorSpec, PointSetSpec, Stage,
};
use opband_core::spectral::{
    decay_profile, gelfand_radius, invert_finite_section, op_norm_l2, DEFAULT_COND_CAP,
    DEFAULT_OPNORM_TOL,
};
use opband_core::verify::{
    default_suite, registered_checks, run_experiment, run_verify_suite, CheckSpec,
};
use opband_core::weights::{
    check_conditions_generalv, check_moderate, check_submultiplicative, check_symmetric,
    default_sample_pairs, default_sample_points, grs_profile, grs_trend_ok,
};
use opband_core::{
    BlockMatrix, DecayProfile, NormFunctional, NormSpec, PointSet, WeightSpec, SCHEMA,
};

#[derive(Parser, Debug)]
#[command(
    name = "opband",
    version,
    about = "Off-diagonal decay, norms and spectra of operator-valued matrices"
)]
struct Cli {
    /// Directory that all relative input and output paths refer to.
    #[arg(long, global = true, default_value = ".")]
    workdir: PathBuf,

    /// Maximum number of worker threads.
    #[arg(long, global = true, env = "OPBAND_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate point sets and random matrices.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Evaluate one matrix norm.
    Norm(NormArgs),
    /// Operator norm and Gelfand spectral-radius estimates.
    #[command(subcommand)]
    Spectral(SpectralCommand),
    /// Invert a finite section and profile the decay of the inverse.
    Invert(InvertArgs),
    /// Bochner–Phillips verification on lattice sections.
    #[command(subcommand)]
    Bgs(BgsCommand),
    /// Weight predicates.
    #[command(subcommand)]
    Weights(WeightsCommand),
    /// Run the property-check suite.
    Verify(VerifyArgs),
    /// Run a configured experiment pipeline and write its report.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum GenCommand {
    /// Write a point set as JSON.
    Points(PointsArgs),
    /// Write a seeded random matrix as JSON.
    Matrix(MatrixArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PointsKind {
    Lattice,
    Jittered,
}

#[derive(Args, Debug)]
struct PointsArgs {
    #[arg(long, value_enum, default_value = "jittered")]
    kind: PointsKind,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    /// Maximum displacement per coordinate (jittered sets only).
    #[arg(long, default_value_t = 0.3)]
    jitter: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Points per axis, comma separated; one value is repeated over all axes.
    #[arg(long, value_delimiter = ',', default_value = "128")]
    extent: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MatrixArgs {
    /// Point-set file; the default jittered line of 128 points if omitted.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Decay weight `w` in `A_kl = g · w(k-l)^{-1} · R`.
    #[arg(long, default_value = "polynomial:3")]
    weight: WeightSpec,
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long, default_value_t = 2)]
    block_dim: usize,
    /// Replace `A` by `(A + A^*)/2`.
    #[arg(long)]
    symmetrize: bool,
    /// Replace `A` by `I + ε A`.
    #[arg(long)]
    shift: Option<f64>,
    /// Use `g = 1` so block norms follow the envelope exactly.
    #[arg(long)]
    exact_envelope: bool,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Store the point-set path instead of inlining the points.
    #[arg(long, requires = "points")]
    link_points: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum NormKind {
    Jaffard,
    JNu,
    SchurP,
    Bgs,
    Bus,
    Aniso,
}

#[derive(Args, Debug, Clone)]
struct NormParams {
    /// Decay exponent for `jaffard` and the `B_{u,s}` exponent for `bus`.
    #[arg(long)]
    s: Option<f64>,
    /// Weight for `j_nu`, `schur_p` and `bgs`.
    #[arg(long)]
    weight: Option<WeightSpec>,
    /// Exponent of the Schur norm.
    #[arg(long, default_value_t = 1.0)]
    p: f64,
    /// Weight `u` of the `B_{u,s}` norm.
    #[arg(long)]
    u: Option<WeightSpec>,
    /// Multi-index of the anisotropic norm, comma separated.
    #[arg(long, value_delimiter = ',')]
    alpha: Vec<u32>,
    /// Base norm of the anisotropic norm.
    #[arg(long, value_enum, default_value = "jaffard")]
    base: NormKind,
}

#[derive(Args, Debug)]
struct NormArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum)]
    tag: NormKind,
    #[command(flatten)]
    params: NormParams,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum SpectralCommand {
    /// Gelfand sequence `‖A^n‖^{1/n}` by repeated squaring.
    Radius(RadiusArgs),
    /// Operator norm on `ℓ²`.
    Opnorm(OpnormArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum FunctionalKind {
    OpL2,
    Jaffard,
    JNu,
    SchurP,
    Bgs,
    Bus,
    Aniso,
}

#[derive(Args, Debug)]
struct RadiusArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, value_enum, default_value = "op-l2")]
    norm: FunctionalKind,
    #[command(flatten)]
    params: NormParams,
    /// Largest power; the sequence covers n = 1, 2, 4, … up to it.
    #[arg(long, default_value_t = 256)]
    nmax: u64,
    #[arg(long, default_value_t = DEFAULT_OPNORM_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OpnormArgs {
    #[arg(long)]
    matrix: PathBuf,
    #[arg(long, default_value_t = DEFAULT_OPNORM_TOL)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InvertArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Where to write the inverse.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV decay profile of the inverse (`r_lo,r_hi,sup_norm`).
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    bucket_width: f64,
    #[arg(long, default_value_t = DEFAULT_COND_CAP)]
    cond_cap: f64,
    /// Where to write the JSON summary (stdout if omitted).
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum BgsCommand {
    /// Compare quadrature Fourier coefficients of `t ↦ f_{A^{-1}}(t)` with
    /// the side diagonals of `A^{-1}`.
    Verify(BgsVerifyArgs),
}

#[derive(Args, Debug)]
struct BgsVerifyArgs {
    /// Matrix on a lattice section; the default is `I + 0.4 S` on Z ∩ [0, 63].
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value = "one")]
    weight: WeightSpec,
    /// Quadrature points per axis, comma separated (even).
    #[arg(long, value_delimiter = ',', default_value = "256")]
    grid: Vec<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum WeightsCommand {
    /// Submultiplicativity, symmetry and GRS checks on sampled vectors.
    Check(WeightsCheckArgs),
}

#[derive(Args, Debug)]
struct WeightsCheckArgs {
    #[arg(long)]
    weight: WeightSpec,
    /// Also estimate the constant `C` in `w(x+y) <= C w(x) ν(y)`; the check
    /// then requires `C <= 1` on the samples.
    #[arg(long)]
    moderate_wrt: Option<WeightSpec>,
    /// Point set supplying the sample differences; default jittered line.
    #[arg(long)]
    points: Option<PathBuf>,
    /// Length of the GRS profile `w(n e_1)^{1/n}`.
    #[arg(long, default_value_t = 4096)]
    grs_horizon: usize,
    /// Also measure the summability and subconvolution constants of `1/w`.
    #[arg(long)]
    conditions: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Experiment configuration; the default suite on seed 42 if omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Run only these checks (comma separated, registered names).
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Instances per selected check (default: the registered count).
    #[arg(long)]
    instances: Option<usize>,
    /// List the registered checks and exit.
    #[arg(long)]
    list: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    /// Report path; overrides `outputs.report` of the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Outcome of a command, mapped to the exit status.
enum Outcome {
    Pass,
    PropertyFailure,
}

/// Error classes with their exit codes.
enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<opband_core::Error>() {
            Some(core) if core.is_numerical() => Failure::Numerical(e),
            _ => Failure::Usage(e),
        }
    }
}

impl From<opband_core::Error> for Failure {
    fn from(e: opband_core::Error) -> Self {
        Failure::from(anyhow::Error::new(e))
    }
}

type CmdResult = std::result::Result<Outcome, Failure>;

struct Workdir {
    workdir: PathBuf,
}

impl Workdir {
    fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.workdir.join(p)
        }
    }

    fn read(&self, p: &Path) -> anyhow::Result<String> {
        let full = self.path(p);
        fs::read_to_string(&full).with_context(|| format!("reading {}", full.display()))
    }

    fn write(&self, p: &Path, text: &str) -> anyhow::Result<()> {
        let full = self.path(p);
        if let Some(parent) = full.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .with_context(|| format!("creating {}", parent.display()))?;
            }
        }
        fs::write(&full, text).with_context(|| format!("writing {}", full.display()))
    }

    /// Writes `text` to `out`, or to stdout when no path is given.
    fn emit(&self, out: Option<&Path>, text: &str) -> anyhow::Result<()> {
        match out {
            Some(p) => self.write(p, text),
            None => {
                let mut stdout = std::io::stdout().lock();
                match writeln!(stdout, "{text}") {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                        Err(e).context("writing to stdout")
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    fn load_points(&self, p: &Path) -> anyhow::Result<PointSet> {
        let text = self.read(p)?;
        serde_json::from_str(&text).with_context(|| format!("parsing point set {}", p.display()))
    }

    /// Loads a matrix, resolving a linked point set relative to the
    /// matrix file.
    fn load_matrix(&self, p: &Path) -> anyhow::Result<BlockMatrix> {
        let text = self.read(p)?;
        let doc: MatrixDoc = serde_json::from_str(&text)
            .with_context(|| format!("parsing matrix {}", p.display()))?;
        let set = match &doc.pointset {
            PointSetRef::Inline(set) => set.clone(),
            PointSetRef::Path(link) => {
                let base = p.parent().unwrap_or_else(|| Path::new(""));
                self.load_points(&base.join(link))?
            }
        };
        Ok(BlockMatrix::from_doc(&doc, Arc::new(set))?)
    }
}

/// Report envelope: the schema tag followed by the report fields.
fn with_schema<T: Serialize>(body: &T) -> anyhow::Result<Value> {
    let mut value = json!({ "schema": SCHEMA });
    match serde_json::to_value(body)? {
        Value::Object(fields) => {
            let map = value.as_object_mut().expect("object literal");
            map.extend(fields);
        }
        other => {
            value["result"] = other;
        }
    }
    Ok(value)
}

fn pretty(value: &Value) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

fn require<T: Clone>(value: &Option<T>, flag: &str, norm: &str) -> anyhow::Result<T> {
    value
        .clone()
        .ok_or_else(|| anyhow!("--{flag} is required for the {norm} norm"))
}

fn norm_spec(kind: NormKind, params: &NormParams) -> anyhow::Result<NormSpec> {
    Ok(match kind {
        NormKind::Jaffard => NormSpec::Jaffard {
            s: require(&params.s, "s", "jaffard")?,
        },
        NormKind::JNu => NormSpec::JNu {
            weight: require(&params.weight, "weight", "j_nu")?,
        },
        NormKind::SchurP => NormSpec::SchurP {
            weight: require(&params.weight, "weight", "schur_p")?,
            p: params.p,
        },
        NormKind::Bgs => NormSpec::Bgs {
            weight: require(&params.weight, "weight", "bgs")?,
        },
        NormKind::Bus => NormSpec::Bus {
            u: require(&params.u, "u", "bus")?,
            s: require(&params.s, "s", "bus")?,
        },
        NormKind::Aniso => {
            if params.base == NormKind::Aniso {
                return Err(anyhow!(
                    "the anisotropic base norm cannot itself be anisotropic"
                ));
            }
            if params.alpha.is_empty() {
                return Err(anyhow!("--alpha is required for the aniso norm"));
            }
            NormSpec::Aniso {
                base: Box::new(norm_spec(params.base, params)?),
                alpha: params.alpha.clone(),
            }
        }
    })
}

fn functional(
    kind: FunctionalKind,
    params: &NormParams,
    tol: f64,
) -> anyhow::Result<NormFunctional> {
    let norm = match kind {
        FunctionalKind::OpL2 => return Ok(NormFunctional::OpL2 { tol }),
        FunctionalKind::Jaffard => NormKind::Jaffard,
        FunctionalKind::JNu => NormKind::JNu,
        FunctionalKind::SchurP => NormKind::SchurP,
        FunctionalKind::Bgs => NormKind::Bgs,
        FunctionalKind::Bus => NormKind::Bus,
        FunctionalKind::Aniso => NormKind::Aniso,
    };
    Ok(NormFunctional::Algebra(norm_spec(norm, params)?))
}

fn gen_points(ctx: &Workdir, args: &PointsArgs) -> CmdResult {
    let extent = if args.extent.len() == 1 {
        vec![args.extent[0]; args.dim]
    } else {
        args.extent.clone()
    };
    let spec = match args.kind {
        PointsKind::Lattice => PointSetSpec::Lattice {
            dim: args.dim,
            spacing: args.spacing,
            extent,
        },
        PointsKind::Jittered => PointSetSpec::Jittered {
            dim: args.dim,
            spacing: args.spacing,
            jitter: args.jitter,
            seed: args.seed,
            extent,
        },
    };
    let set = spec.build()?;
    ctx.emit(
        args.out.as_deref(),
        &serde_json::to_string(&set).map_err(anyhow::Error::from)?,
    )?;
    Ok(Outcome::Pass)
}

fn gen_matrix(ctx: &Workdir, args: &MatrixArgs) -> CmdResult {
    let set = match &args.points {
        Some(p) => ctx.load_points(p)?,
        None => PointSetSpec::default().build()?,
    };
    let spec = GeneratorSpec {
        weight: args.weight.clone(),
        amplitude: args.amplitude,
        block_dim: args.block_dim,
        symmetrize: args.symmetrize,
        shift: args.shift,
        exact_envelope: args.exact_envelope,
    };
    let a = generate_matrix(Arc::new(set), &spec, args.seed)?;
    let doc = match (&args.points, args.link_points) {
        (Some(p), true) => a.to_doc(PointSetRef::Path(p.to_string_lossy().into_owned())),
        _ => a.to_inline_doc(),
    };
    ctx.emit(
        args.out.as_deref(),
        &serde_json::to_string(&doc).map_err(anyhow::Error::from)?,
    )?;
    Ok(Outcome::Pass)
}

fn norm(ctx: &Workdir, args: &NormArgs) -> CmdResult {
    let a = ctx.load_matrix(&args.matrix)?;
    let report = norm_spec(args.tag, &args.params)?.eval(&a)?;
    ctx.emit(args.out.as_deref(), &pretty(&with_schema(&report)?)?)?;
    Ok(Outcome::Pass)
}

fn spectral_radius(ctx: &Workdir, args: &RadiusArgs) -> CmdResult {
    let a = ctx.load_matrix(&args.matrix)?;
    let f = functional(args.norm, &args.params, args.tol)?;
    let report = gelfand_radius(&a, &f, args.nmax)?;
    ctx.emit(args.out.as_deref(), &pretty(&with_schema(&report)?)?)?;
    Ok(Outcome::Pass)
}

fn spectral_opnorm(ctx: &Workdir, args: &OpnormArgs) -> CmdResult {
    let a = ctx.load_matrix(&args.matrix)?;
    let value = op_norm_l2(&a, args.tol)?;
    let report = json!({ "schema": SCHEMA, "op_norm_l2": value, "tol": args.tol });
    ctx.emit(args.out.as_deref(), &pretty(&report)?)?;
    Ok(Outcome::Pass)
}

fn invert(ctx: &Workdir, args: &InvertArgs) -> CmdResult {
    let a = ctx.load_matrix(&args.matrix)?;
    let inverse = invert_finite_section(&a, args.cond_cap)?;
    let profile = decay_profile(&inverse, args.bucket_width)?;
    if let Some(out) = &args.out {
        ctx.write(out, &inverse.to_json()?)?;
    }
    if let Some(path) = &args.profile {
        ctx.write(path, &profile_csv(&profile)?)?;
    }
    let summary = json!({
        "schema": SCHEMA,
        "size": a.size(),
        "block_dim": a.block_dim(),
        "cond_cap": args.cond_cap,
        "fitted_exponent": profile.fitted_exponent,
        "fit_range": profile.fit_range,
        "bucket_width": profile.bucket_width,
        "inverse": args.out.as_ref().map(|p| p.to_string_lossy().into_owned()),
        "profile": args.profile.as_ref().map(|p| p.to_string_lossy().into_owned()),
    });
    ctx.emit(args.report.as_deref(), &pretty(&summary)?)?;
    Ok(Outcome::Pass)
}

/// Decay profile as CSV with header `r_lo,r_hi,sup_norm`.
fn profile_csv(profile: &DecayProfile) -> anyhow::Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(["r_lo", "r_hi", "sup_norm"])?;
    for row in profile.rows() {
        writer.serialize(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| anyhow!("flushing CSV: {e}"))?;
    Ok(String::from_utf8(bytes)?)
}

fn shift_example() -> opband_core::Result<BlockMatrix> {
    let set = Arc::new(
        PointSetSpec::Lattice {
            dim: 1,
            spacing: 1.0,
            extent: vec![64],
        }
        .build()?,
    );
    let mut a = BlockMatrix::identity(set.clone(), 2)?;
    for k in 1..set.len() {
        a.insert(k, k - 1, opband_core::Block::identity(2).scale_real(0.4))?;
    }
    Ok(a)
}

fn bgs_verify(ctx: &Workdir, args: &BgsVerifyArgs) -> CmdResult {
    let a = match &args.matrix {
        Some(p) => ctx.load_matrix(p)?,
        None => shift_example()?,
    };
    let report = verify_bochner_phillips(&a, &args.weight, &args.grid)?;
    ctx.emit(args.out.as_deref(), &pretty(&with_schema(&report)?)?)?;
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::PropertyFailure
    })
}

fn weights_check(ctx: &Workdir, args: &WeightsCheckArgs) -> CmdResult {
    let w = &args.weight;
    w.validate()?;
    let set = match &args.points {
        Some(p) => ctx.load_points(p)?,
        None => PointSetSpec::default().build()?,
    };
    let pairs = default_sample_pairs(&set, 64);
    let points = default_sample_points(&set, 256);
    let sub = check_submultiplicative(w, &pairs)?;
    let sym = check_symmetric(w, &points)?;
    let mut axis = vec![0.0; set.dim()];
    axis[0] = 1.0;
    let profile = grs_profile(w, &axis, args.grs_horizon)?;
    let grs = grs_trend_ok(&profile);
    let mut passed = sub.passed && sym.passed && grs;
    let mut report = json!({
        "schema": SCHEMA,
        "weight": w.to_string(),
        "submultiplicative": sub,
        "symmetric": sym,
        "grs": {
            "horizon": args.grs_horizon,
            "first": profile.first(),
            "last": profile.last(),
            "trend_ok": grs,
        },
        "admissible_kind": w.is_admissible_kind(),
    });
    if let Some(nu) = &args.moderate_wrt {
        let (constant, moderate) = check_moderate(w, nu, &pairs)?;
        passed &= moderate.passed;
        report["moderate"] =
            json!({ "nu": nu.to_string(), "constant": constant, "report": moderate });
    }
    if args.conditions {
        let (summability, subconvolution) = check_conditions_generalv(w, &set)?;
        report["conditions"] =
            json!({ "summability": summability, "subconvolution": subconvolution });
    }
    report["passed"] = json!(passed);
    ctx.emit(args.out.as_deref(), &pretty(&report)?)?;
    Ok(if passed {
        Outcome::Pass
    } else {
        Outcome::PropertyFailure
    })
}

fn load_config(ctx: &Workdir, path: &Path) -> anyhow::Result<ExperimentConfig> {
    let text = ctx.read(path)?;
    ExperimentConfig::from_json(&text)
        .with_context(|| format!("parsing configuration {}", path.display()))
}

fn verify(ctx: &Workdir, args: &VerifyArgs) -> CmdResult {
    if args.list {
        let defaults = default_suite();
        let names: Vec<Value> = registered_checks()
            .into_iter()
            .map(|(name, description)| {
                let instances = defaults
                    .iter()
                    .find(|c| c.name == name)
                    .map(|c| c.instances);
                json!({ "name": name, "description": description, "default_instances": instances })
            })
            .collect();
        ctx.emit(
            args.out.as_deref(),
            &pretty(&json!({ "schema": SCHEMA, "checks": names }))?,
        )?;
        return Ok(Outcome::Pass);
    }
    let mut config = match &args.config {
        Some(p) => load_config(ctx, p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if !args.checks.is_empty() || args.instances.is_some() {
        let defaults = default_suite();
        let names: Vec<String> = if args.checks.is_empty() {
            defaults.iter().map(|c| c.name.clone()).collect()
        } else {
            args.checks.clone()
        };
        let mut specs = Vec::new();
        for name in names {
            if !registered_checks().iter().any(|(n, _)| *n == name) {
                return Err(anyhow!("unknown check '{name}' (see `opband verify --list`)").into());
            }
            let default = defaults
                .iter()
                .find(|c| c.name == name)
                .map(|c| c.instances)
                .unwrap_or(1);
            specs.push(CheckSpec {
                name,
                instances: args.instances.unwrap_or(default),
            });
        }
        config.pipeline = vec![Stage::Verify { checks: specs }];
    }
    let report = run_verify_suite(&config)?;
    let out = args
        .out
        .clone()
        .or_else(|| config.outputs.report.as_ref().map(PathBuf::from));
    ctx.emit(out.as_deref(), &report.to_json()?)?;
    Ok(if report.passed {
        Outcome::Pass
    } else {
        Outcome::PropertyFailure
    })
}

fn report(ctx: &Workdir, args: &ReportArgs) -> CmdResult {
    let config = load_config(ctx, &args.config)?;
    let artifacts = run_experiment(&config)?;
    if let Some(path) = &config.outputs.matrix {
        ctx.write(Path::new(path), &artifacts.matrix.to_json()?)?;
    }
    if let (Some(path), Some(profile)) = (&config.outputs.profile, &artifacts.inverse_profile) {
        ctx.write(Path::new(path), &profile_csv(profile)?)?;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.outputs.report.as_ref().map(PathBuf::from));
    let text = serde_json::to_string_pretty(&artifacts.report).map_err(anyhow::Error::from)?;
    ctx.emit(out.as_deref(), &text)?;
    Ok(if artifacts.report.passed {
        Outcome::Pass
    } else {
        Outcome::PropertyFailure
    })
}

fn dispatch(ctx: &Workdir, command: &Command) -> CmdResult {
    match command {
        Command::Gen(GenCommand::Points(a)) => gen_points(ctx, a),
        Command::Gen(GenCommand::Matrix(a)) => gen_matrix(ctx, a),
        Command::Norm(a) => norm(ctx, a),
        Command::Spectral(SpectralCommand::Radius(a)) => spectral_radius(ctx, a),
        Command::Spectral(SpectralCommand::Opnorm(a)) => spectral_opnorm(ctx, a),
        Command::Invert(a) => invert(ctx, a),
        Command::Bgs(BgsCommand::Verify(a)) => bgs_verify(ctx, a),
        Command::Weights(WeightsCommand::Check(a)) => weights_check(ctx, a),
        Command::Verify(a) => verify(ctx, a),
        Command::Report(a) => report(ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: configuring {n} worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let ctx = Workdir {
        workdir: cli.workdir.clone(),
    };
    match dispatch(&ctx, &cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::PropertyFailure) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical error: {e:#}");
            ExitCode::from(3)
        }
    }
}
