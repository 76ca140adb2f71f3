//! varcert: command-line front end for the numerical certification library.
//!
//! Subcommands compute Moreau/tilted envelopes and proximal maps, run the
//! sampled certifiers (variational convexity, local monotonicity,
//! prox-regularity, subdifferential continuity, second-order conditions,
//! tilt stability, epigraphical limits), rebuild lower quadratic-tangent
//! hulls, verify the bundled gallery's stored verdict tables, and estimate
//! norm-geometry constants.
//!
//! Output is a versioned JSON document on stdout (or `--out <path>`).
//! Exit codes: 0 = certified / computed, 1 = refuted, 2 = usage or
//! capability error (single-line diagnostic on stderr).
//! `VARCERT_THREADS` caps the worker pool; results are byte-identical
//! across thread counts (the `timing_ms` field is the one wall-clock item).

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use varcert_core::envelope::{prox_bound_threshold, tilted_envelope, tilted_prox};
use varcert_core::models::epi::{
    argmin_limsup_check, constant_path, epi_convergence_check, family_constant,
    family_moving_min, family_neg_offset, family_quad_offset, family_spike,
    spike_recovery_path, standard_paths, EpiPath, DEFAULT_TERMS,
};
use varcert_core::models::gallery::{gallery_lookup, gallery_names};
use varcert_core::models::json::model_from_json_file;
use varcert_core::models::{graph_samples, FunctionModel, Window};
use varcert_core::monotonicity::{local_mono_certify, resolvent_probe, GapKind};
use varcert_core::norm_space::{dot, estimate_strong_mono_modulus, NormEval, NormModel};
use varcert_core::plan::SamplePlan;
use varcert_core::regularity::{
    prox_regularity_certify, proximal_subgradient_check, subdiff_continuity_check,
};
use varcert_core::report::{json_num, json_vec, CertificateReport, Verdict};
use varcert_core::second_order::{pointbased_check, psd_certify, PsdFlavor};
use varcert_core::tilt::{second_order_growth_check, tilt_stability_certify};
use varcert_core::varconvex::{
    build_hull_function, certify_variational_convexity, polyak_strong_convexity_check,
    shift_strong_convexity_check, verify_graph_agreement,
};
use varcert_core::Error as CoreError;

const SCHEMA_VERSION: u64 = 1;

#[derive(Parser)]
#[command(
    name = "varcert",
    version,
    about = "Numerical certification of variational convexity, Moreau envelopes, \
             monotone subgradient graphs, second-order conditions, and tilt stability",
    after_help = "Verdicts are CERTIFIED_ON_SAMPLES or REFUTED: sampling evidence, not proof.\n\
                  Documented tolerance defaults: verdict margin 1e-6 (epigraphical checks 1e-3),\n\
                  minimizer cluster diameter 1e-5, staged-search value band 1e-8 (compiled;\n\
                  echoed in the config). Exit codes: 0 certified/computed, 1 refuted, 2 error."
)]
struct Cli {
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Override the verdict threshold: re-decide with margin >= -CERT_TOL
    /// (strict checks: margin > CERT_TOL). Default keeps each check's
    /// documented tolerance, recorded in its report params.
    #[arg(long, global = true, value_name = "CERT_TOL")]
    cert_tol: Option<f64>,
    /// Minimizer-cluster diameter below which an argmin is reported
    /// single-valued (default 1e-5).
    #[arg(long, global = true, value_name = "CLUSTER_TOL")]
    cluster_tol: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Moreau (optionally tilted) envelope value at a point.
    Envelope(EnvelopeArgs),
    /// Proximal map (tilted argmin set) at a point.
    Prox(EnvelopeArgs),
    /// Run a certifier; exit code follows the verdict.
    #[command(subcommand)]
    Certify(CertifyCmd),
    /// Lower quadratic-tangent hull of localized graph samples.
    #[command(subcommand)]
    Hull(HullCmd),
    /// Bundled example models.
    #[command(subcommand)]
    Gallery(GalleryCmd),
    /// Numerical estimates of norm-geometry and envelope constants.
    #[command(subcommand)]
    Estimate(EstimateCmd),
}

#[derive(Args)]
struct EnvelopeArgs {
    /// Model spec: gallery:<name>[?k=v,...] or a path to a JSON model file.
    #[arg(long)]
    model: String,
    /// Envelope parameter lambda > 0.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    lambda: f64,
    /// Query point (comma-separated coordinates).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    x: Vec<f64>,
    /// Optional tilt covector (defaults to zero).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xstar: Option<Vec<f64>>,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct NormArgs {
    /// Norm exponent p > 1 (2 = Euclidean/Hilbert).
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    p: f64,
    /// Per-axis norm weights (comma-separated; defaults to ones).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    weights: Option<Vec<f64>>,
}

impl NormArgs {
    fn model(&self, n: usize) -> Result<NormModel, CoreError> {
        match &self.weights {
            Some(w) => NormModel::weighted(self.p, n, w.clone()),
            None => NormModel::lp(self.p, n),
        }
    }

    fn echo(&self) -> Value {
        let mut m = Map::new();
        m.insert("p".into(), json_num(self.p));
        m.insert(
            "weights".into(),
            self.weights.as_deref().map(json_vec).unwrap_or(Value::Null),
        );
        Value::Object(m)
    }
}

#[derive(Args)]
struct PlanArgs {
    /// Deterministic seed for the low-discrepancy and subsampling streams.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 33)]
    grid: usize,
    /// Quasi-Monte-Carlo points added to the grid.
    #[arg(long, default_value_t = 32)]
    qmc: usize,
    /// Lower corner of the sample box (comma-separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    box_lo: Option<Vec<f64>>,
    /// Upper corner of the sample box (comma-separated).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    box_hi: Option<Vec<f64>>,
}

impl PlanArgs {
    /// Plan from explicit box flags, else from the command's default box.
    fn build_or(
        &self,
        default: impl FnOnce(u64, usize, usize) -> Result<SamplePlan, CoreError>,
    ) -> Result<SamplePlan, CoreError> {
        match (&self.box_lo, &self.box_hi) {
            (Some(lo), Some(hi)) => {
                SamplePlan::new(self.seed, self.grid, self.qmc, lo.clone(), hi.clone())
            }
            (None, None) => default(self.seed, self.grid, self.qmc),
            _ => Err(CoreError::input(
                "provide both --box-lo and --box-hi, or neither",
            )),
        }
    }
}

fn plan_echo(p: &SamplePlan) -> Value {
    let mut m = Map::new();
    m.insert("seed".into(), Value::from(p.seed));
    m.insert("grid_per_axis".into(), Value::from(p.grid_per_axis as u64));
    m.insert("qmc_points".into(), Value::from(p.qmc_points as u64));
    m.insert("box_lo".into(), json_vec(&p.box_lo));
    m.insert("box_hi".into(), json_vec(&p.box_hi));
    Value::Object(m)
}

#[derive(Args)]
struct WindowArgs {
    /// Window center in x (comma-separated).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    center: Vec<f64>,
    /// Window center covector (defaults to zero).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    cstar: Option<Vec<f64>>,
    /// Primal ball radius.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    r1: f64,
    /// Dual ball radius.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    r2: f64,
    /// Sublevel localization: only graph points with value < f(center) + eps.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    eps: f64,
}

impl WindowArgs {
    fn window(&self) -> Result<Window, CoreError> {
        let cstar = self
            .cstar
            .clone()
            .unwrap_or_else(|| vec![0.0; self.center.len()]);
        Window::new(self.center.clone(), cstar, self.r1, self.r2, self.eps)
    }
}

#[derive(Subcommand)]
enum CertifyCmd {
    /// Variational convexity on a window (sigma = 0 unless overridden).
    Vc(VcArgs),
    /// Strong variational convexity with modulus sigma > 0.
    Svc(SvcArgs),
    /// Local (strong) monotonicity of the localized subdifferential graph,
    /// with an optional single-valued-resolvent probe.
    Mono(MonoArgs),
    /// Prox-regularity at the window center pair.
    Proxreg(WindowedArgs),
    /// Subdifferential continuity at the window center pair.
    Subdiffcont(SubdiffContArgs),
    /// Proximal subgradient inequality at a point pair.
    Proxsub(PointPairArgs),
    /// Positive-semidefiniteness of the second-order subdifferential
    /// over localized graph samples.
    Psd(PsdArgs),
    /// Point-based positive-definiteness at a stationary point
    /// (strictly positive margin required).
    Pointbased(PointArgs),
    /// Tilt stability of a stationary point, with a tilt-modulus table.
    Tilt(TiltArgs),
    /// Second-order quadratic growth on a window.
    Growth(SvcArgs),
    /// Epigraphical convergence of a built-in truncated family.
    Epi(EpiArgs),
}

#[derive(Args)]
struct VcArgs {
    #[arg(long)]
    model: String,
    /// Convexity modulus (0 = plain variational convexity).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sigma: f64,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct SvcArgs {
    #[arg(long)]
    model: String,
    /// Strong convexity / growth modulus sigma > 0.
    #[arg(long, allow_negative_numbers = true)]
    sigma: f64,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct MonoArgs {
    #[arg(long)]
    model: String,
    /// Strong monotonicity modulus (0 = plain monotonicity).
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sigma: f64,
    /// Gap form: duality pairing <J x1 - J x2, x1 - x2> or plain norm square.
    #[arg(long, value_enum, default_value_t = KindArg::Duality)]
    kind: KindArg,
    /// Also probe resolvent single-valuedness at this lambda (1-D models).
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum KindArg {
    Duality,
    Norm,
}

#[derive(Args)]
struct WindowedArgs {
    #[arg(long)]
    model: String,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct SubdiffContArgs {
    #[arg(long)]
    model: String,
    /// Localization radii scanned for the delta-ball around the center.
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.1,0.05,0.01", allow_negative_numbers = true)]
    deltas: Vec<f64>,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct PointPairArgs {
    #[arg(long)]
    model: String,
    /// Base point (comma-separated).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    center: Vec<f64>,
    /// Candidate subgradient at the base point (defaults to zero).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    cstar: Option<Vec<f64>>,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct PsdArgs {
    #[arg(long)]
    model: String,
    /// Required modulus: pairing >= sigma ||w||^2 over sampled graph points.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sigma: f64,
    /// Coderivative flavor at each graph point.
    #[arg(long, value_enum, default_value_t = FlavorArg::Combined)]
    flavor: FlavorArg,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FlavorArg {
    Combined,
    Limiting,
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    model: String,
    /// Stationary point to test (comma-separated).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    center: Vec<f64>,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct TiltArgs {
    #[arg(long)]
    model: String,
    /// Base point (comma-separated).
    #[arg(long, value_delimiter = ',', required = true, allow_negative_numbers = true)]
    center: Vec<f64>,
    /// Half-width of the localization box for the tilted argmins.
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    u_radius: f64,
    /// Tilt magnitude scanned on each axis.
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    v_radius: f64,
    /// Also write the modulus table as CSV (columns tilt1,tilt2,displacement,ratio).
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Args)]
struct EpiArgs {
    /// Built-in truncated family.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Truncation length of the family.
    #[arg(long, default_value_t = DEFAULT_TERMS)]
    terms: usize,
    /// Limit model (defaults to the family's natural limit).
    #[arg(long)]
    model: Option<String>,
    /// Run the argmin/inf consistency check instead of the two-sided
    /// epigraphical conditions.
    #[arg(long)]
    argmin: bool,
    /// Add the exact recovery path for the spike family.
    #[arg(long)]
    recovery: bool,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum FamilyArg {
    /// Identical copies of the limit model.
    #[value(name = "constant")]
    Constant,
    /// Sum of squares plus 1/k.
    #[value(name = "quad_offset")]
    QuadOffset,
    /// (x - 1/k)^2 in one dimension.
    #[value(name = "moving_min")]
    MovingMin,
    /// x^2 - 1/k in one dimension.
    #[value(name = "neg_offset")]
    NegOffset,
    /// 0 at x = 1/k, 1 elsewhere, in one dimension.
    #[value(name = "spike")]
    Spike,
}

impl FamilyArg {
    fn name(&self) -> &'static str {
        match self {
            FamilyArg::Constant => "constant",
            FamilyArg::QuadOffset => "quad_offset",
            FamilyArg::MovingMin => "moving_min",
            FamilyArg::NegOffset => "neg_offset",
            FamilyArg::Spike => "spike",
        }
    }

    fn default_limit(&self) -> &'static str {
        match self {
            FamilyArg::Spike => "gallery:zero_one",
            _ => "gallery:quadratic?alpha=2",
        }
    }
}

#[derive(Subcommand)]
enum HullCmd {
    /// Emit the tangent data (anchors, slopes, offsets) of the hull.
    Build(HullArgs),
    /// Build the hull and verify two-directional graph agreement.
    Check(HullArgs),
}

#[derive(Args)]
struct HullArgs {
    #[arg(long)]
    model: String,
    /// Quadratic modulus of the tangent minorants.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    sigma: f64,
    #[command(flatten)]
    window: WindowArgs,
    #[command(flatten)]
    norm: NormArgs,
    #[command(flatten)]
    plan: PlanArgs,
}

#[derive(Subcommand)]
enum GalleryCmd {
    /// List the bundled models and their parameters.
    List,
    /// Re-run each stored verdict table and compare against expectations.
    Verify {
        /// Restrict to one model (default: all).
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Subcommand)]
enum EstimateCmd {
    /// Empirical lower modulus of the duality map:
    /// min over sampled pairs of <J(x)-J(y), x-y> / ||x-y||^2.
    C1 {
        #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
        p: f64,
        /// Dimension of the sample space.
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Per-axis norm weights (comma-separated; defaults to ones).
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        weights: Option<Vec<f64>>,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Bracket the prox-boundedness threshold over a lambda grid.
    Lambda0 {
        #[arg(long)]
        model: String,
        /// Ascending lambda grid (comma-separated).
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "0.05,0.1,0.2,0.4,0.8,1.6,3.2,6.4,12.8",
            allow_negative_numbers = true
        )]
        lambdas: Vec<f64>,
        #[command(flatten)]
        norm: NormArgs,
        #[command(flatten)]
        plan: PlanArgs,
    },
}

// ---------------------------------------------------------------------------
// Model-spec parsing.
// ---------------------------------------------------------------------------

fn parse_params(query: &str) -> Result<BTreeMap<String, f64>, CoreError> {
    let mut out = BTreeMap::new();
    for kv in query.split(',') {
        let (k, v) = kv.split_once('=').ok_or_else(|| {
            CoreError::input(format!("model parameter '{kv}' must be key=value"))
        })?;
        let val: f64 = v.trim().parse().map_err(|_| {
            CoreError::input(format!("model parameter '{k}' value '{v}' is not a number"))
        })?;
        out.insert(k.trim().to_string(), val);
    }
    Ok(out)
}

/// `gallery:<name>[?k=v,...]` or a path to a JSON model document.
fn parse_model(spec: &str) -> Result<FunctionModel, CoreError> {
    if let Some(rest) = spec.strip_prefix("gallery:") {
        let (name, params) = match rest.split_once('?') {
            Some((n, q)) => (n, parse_params(q)?),
            None => (rest, BTreeMap::new()),
        };
        gallery_lookup(name, &params)
    } else {
        model_from_json_file(Path::new(spec))
    }
}

// ---------------------------------------------------------------------------
// Output assembly.
// ---------------------------------------------------------------------------

struct Output {
    exit: u8,
    payload: Map<String, Value>,
    csv: Option<(PathBuf, String)>,
}

fn base_payload(command: &str, config: Map<String, Value>) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema_version".into(), Value::from(SCHEMA_VERSION));
    m.insert("command".into(), Value::String(command.into()));
    m.insert("config".into(), Value::Object(config));
    m
}

fn config_skeleton(cli: &Cli) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert(
        "argv".into(),
        Value::Array(std::env::args().map(Value::String).collect()),
    );
    let mut tols = Map::new();
    tols.insert(
        "cert_tol".into(),
        cli.cert_tol.map(json_num).unwrap_or(Value::Null),
    );
    tols.insert("cluster_tol".into(), json_num(cli.cluster_tol.unwrap_or(1e-5)));
    tols.insert("value_tol".into(), json_num(1e-8));
    m.insert("tolerances".into(), Value::Object(tols));
    m
}

/// Re-decide a verdict when the user overrides the margin threshold.
/// `strict` marks checks certified only by a strictly positive margin.
fn rethreshold(rep: &mut CertificateReport, cert_tol: Option<f64>, strict: bool) {
    let (Some(tol), Some(margin)) = (cert_tol, rep.margin) else {
        return;
    };
    let ok = if strict { margin > tol } else { margin >= -tol };
    rep.verdict = if ok { Verdict::Certified } else { Verdict::Refuted };
    rep.notes.push(format!("verdict re-thresholded at cert_tol={tol:e}"));
}

fn verdict_exit(reports: &[CertificateReport]) -> u8 {
    if reports.iter().all(|r| r.verdict == Verdict::Certified) {
        0
    } else {
        1
    }
}

fn reports_output(
    command: &str,
    config: Map<String, Value>,
    mut reports: Vec<CertificateReport>,
    cert_tol: Option<f64>,
    strict: bool,
) -> Output {
    for r in &mut reports {
        rethreshold(r, cert_tol, strict);
    }
    let exit = verdict_exit(&reports);
    let mut payload = base_payload(command, config);
    payload.insert(
        "reports".into(),
        Value::Array(reports.iter().map(CertificateReport::to_json).collect()),
    );
    Output { exit, payload, csv: None }
}

// ---------------------------------------------------------------------------
// Command handlers.
// ---------------------------------------------------------------------------

fn run_envelope(cli: &Cli, a: &EnvelopeArgs, prox: bool) -> Result<Output, CoreError> {
    let phi = parse_model(&a.model)?;
    let m = a.norm.model(phi.n)?;
    let xstar = a.xstar.clone().unwrap_or_else(|| vec![0.0; phi.n]);
    let plan = a
        .plan
        .build_or(|s, g, q| SamplePlan::centered(s, g, q, &a.x, 8.0))?;
    let result = if prox {
        tilted_prox(&phi, a.lambda, &xstar, &a.x, &m, &plan)?
    } else {
        tilted_envelope(&phi, a.lambda, &xstar, &a.x, &m, &plan)?
    };
    let mut config = config_skeleton(cli);
    config.insert("model".into(), Value::String(a.model.clone()));
    config.insert("lambda".into(), json_num(a.lambda));
    config.insert("x".into(), json_vec(&a.x));
    config.insert("xstar".into(), json_vec(&xstar));
    config.insert("norm".into(), a.norm.echo());
    config.insert("plan".into(), plan_echo(&plan));
    let cluster_tol = cli.cluster_tol.unwrap_or(1e-5);
    let diameter = result.cluster_diameter();
    let mut payload = base_payload(if prox { "prox" } else { "envelope" }, config);
    payload.insert("result".into(), result.to_json());
    payload.insert("cluster_diameter".into(), json_num(diameter));
    payload.insert(
        "single_valued".into(),
        Value::Bool(diameter <= cluster_tol && !result.minimizers.is_empty()),
    );
    Ok(Output { exit: 0, payload, csv: None })
}

fn windowed_setup(
    model: &str,
    window: &WindowArgs,
    norm: &NormArgs,
    plan: &PlanArgs,
) -> Result<(FunctionModel, Window, NormModel, SamplePlan), CoreError> {
    let phi = parse_model(model)?;
    let w = window.window()?;
    let m = norm.model(phi.n)?;
    let p = plan.build_or(|s, g, q| w.default_plan(s, g, q))?;
    Ok((phi, w, m, p))
}

fn windowed_config(
    cli: &Cli,
    model: &str,
    w: &Window,
    norm: Option<&NormArgs>,
    plan: &SamplePlan,
) -> Map<String, Value> {
    let mut config = config_skeleton(cli);
    config.insert("model".into(), Value::String(model.into()));
    config.insert(
        "window".into(),
        serde_json::to_value(w).expect("window serializes"),
    );
    if let Some(n) = norm {
        config.insert("norm".into(), n.echo());
    }
    config.insert("plan".into(), plan_echo(plan));
    config
}

fn run_vc(cli: &Cli, a: &VcArgs, require_positive_sigma: bool) -> Result<Output, CoreError> {
    if require_positive_sigma && !(a.sigma > 0.0) {
        return Err(CoreError::input(
            "strong variational convexity needs --sigma > 0 (use `certify vc` for sigma = 0)",
        ));
    }
    let (phi, w, m, plan) = windowed_setup(&a.model, &a.window, &a.norm, &a.plan)?;
    let rep = certify_variational_convexity(
        &phi,
        &w.center_x.clone(),
        &w.center_xstar.clone(),
        a.sigma,
        &w,
        &m,
        &plan,
    )?;
    let mut config = windowed_config(cli, &a.model, &w, Some(&a.norm), &plan);
    config.insert("sigma".into(), json_num(a.sigma));
    let name = if require_positive_sigma { "certify.svc" } else { "certify.vc" };
    Ok(reports_output(name, config, vec![rep], cli.cert_tol, false))
}

fn run_mono(cli: &Cli, a: &MonoArgs) -> Result<Output, CoreError> {
    let (phi, w, m, plan) = windowed_setup(&a.model, &a.window, &a.norm, &a.plan)?;
    let kind = match a.kind {
        KindArg::Duality => GapKind::Duality(m.clone()),
        KindArg::Norm => GapKind::Norm(NormEval::lp(m.clone())),
    };
    let mut reports = vec![local_mono_certify(&phi, &w, a.sigma, &kind, &m, &plan)?];
    if let Some(lambda) = a.lambda {
        reports.push(resolvent_probe(&phi, lambda, &w, &m, &plan)?);
    }
    let mut config = windowed_config(cli, &a.model, &w, Some(&a.norm), &plan);
    config.insert("sigma".into(), json_num(a.sigma));
    config.insert(
        "kind".into(),
        Value::String(
            match a.kind {
                KindArg::Duality => "duality",
                KindArg::Norm => "norm",
            }
            .into(),
        ),
    );
    config.insert(
        "lambda".into(),
        a.lambda.map(json_num).unwrap_or(Value::Null),
    );
    Ok(reports_output("certify.mono", config, reports, cli.cert_tol, false))
}

fn run_proxreg(cli: &Cli, a: &WindowedArgs) -> Result<Output, CoreError> {
    let (phi, w, m, plan) = windowed_setup(&a.model, &a.window, &a.norm, &a.plan)?;
    let rep = prox_regularity_certify(
        &phi,
        &w.center_x.clone(),
        &w.center_xstar.clone(),
        &w,
        &m,
        &plan,
    )?;
    let config = windowed_config(cli, &a.model, &w, Some(&a.norm), &plan);
    Ok(reports_output("certify.proxreg", config, vec![rep], cli.cert_tol, false))
}

fn run_subdiffcont(cli: &Cli, a: &SubdiffContArgs) -> Result<Output, CoreError> {
    let (phi, w, m, plan) = windowed_setup(&a.model, &a.window, &a.norm, &a.plan)?;
    let rep = subdiff_continuity_check(
        &phi,
        &w.center_x.clone(),
        &w.center_xstar.clone(),
        &a.deltas,
        &m,
        &plan,
    )?;
    let mut config = windowed_config(cli, &a.model, &w, Some(&a.norm), &plan);
    config.insert("deltas".into(), json_vec(&a.deltas));
    Ok(reports_output("certify.subdiffcont", config, vec![rep], cli.cert_tol, false))
}

fn run_proxsub(cli: &Cli, a: &PointPairArgs) -> Result<Output, CoreError> {
    let phi = parse_model(&a.model)?;
    let cstar = a.cstar.clone().unwrap_or_else(|| vec![0.0; phi.n]);
    let plan = a
        .plan
        .build_or(|s, g, q| SamplePlan::centered(s, g, q, &a.center, 0.5))?;
    let rep = proximal_subgradient_check(&phi, &a.center, &cstar, &plan)?;
    let mut config = config_skeleton(cli);
    config.insert("model".into(), Value::String(a.model.clone()));
    config.insert("center".into(), json_vec(&a.center));
    config.insert("cstar".into(), json_vec(&cstar));
    config.insert("plan".into(), plan_echo(&plan));
    Ok(reports_output("certify.proxsub", config, vec![rep], cli.cert_tol, false))
}

fn run_psd(cli: &Cli, a: &PsdArgs) -> Result<Output, CoreError> {
    let phi = parse_model(&a.model)?;
    let w = a.window.window()?;
    let plan = a.plan.build_or(|s, g, q| w.default_plan(s, g, q))?;
    let flavor = match a.flavor {
        FlavorArg::Combined => PsdFlavor::Combined,
        FlavorArg::Limiting => PsdFlavor::Limiting,
    };
    let rep = psd_certify(&phi, &w, a.sigma, flavor, &plan)?;
    let mut config = windowed_config(cli, &a.model, &w, None, &plan);
    config.insert("sigma".into(), json_num(a.sigma));
    config.insert("flavor".into(), Value::String(flavor.to_string()));
    Ok(reports_output("certify.psd", config, vec![rep], cli.cert_tol, false))
}

fn run_pointbased(cli: &Cli, a: &PointArgs) -> Result<Output, CoreError> {
    let phi = parse_model(&a.model)?;
    let plan = a
        .plan
        .build_or(|s, g, q| SamplePlan::centered(s, g, q, &a.center, 1.0))?;
    let rep = pointbased_check(&phi, &a.center, &plan)?;
    let mut config = config_skeleton(cli);
    config.insert("model".into(), Value::String(a.model.clone()));
    config.insert("center".into(), json_vec(&a.center));
    config.insert("plan".into(), plan_echo(&plan));
    Ok(reports_output("certify.pointbased", config, vec![rep], cli.cert_tol, true))
}

fn run_tilt(cli: &Cli, a: &TiltArgs) -> Result<Output, CoreError> {
    let phi = parse_model(&a.model)?;
    let plan = a
        .plan
        .build_or(|s, g, q| SamplePlan::centered(s, g, q, &a.center, a.u_radius))?;
    let cert = tilt_stability_certify(&phi, &a.center, a.v_radius, &plan)?;
    let mut config = config_skeleton(cli);
    config.insert("model".into(), Value::String(a.model.clone()));
    config.insert("center".into(), json_vec(&a.center));
    config.insert("u_radius".into(), json_num(a.u_radius));
    config.insert("v_radius".into(), json_num(a.v_radius));
    config.insert("plan".into(), plan_echo(&plan));
    let mut reports = vec![cert.report];
    rethreshold(&mut reports[0], cli.cert_tol, false);
    let exit = verdict_exit(&reports);
    let mut payload = base_payload("certify.tilt", config);
    payload.insert("reports".into(), Value::Array(vec![reports[0].to_json()]));
    payload.insert(
        "modulus".into(),
        cert.modulus.map(json_num).unwrap_or(Value::Null),
    );
    payload.insert(
        "table".into(),
        Value::Array(
            cert.table
                .iter()
                .map(|row| {
                    let mut m = Map::new();
                    m.insert("axis".into(), Value::from(row.axis as u64));
                    m.insert("tilt1".into(), json_num(row.tilt1));
                    m.insert("tilt2".into(), json_num(row.tilt2));
                    m.insert("displacement".into(), json_num(row.displacement));
                    m.insert("ratio".into(), json_num(row.ratio));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    let csv = match &a.csv {
        Some(path) => {
            let mut wtr = csv::Writer::from_writer(Vec::new());
            wtr.write_record(["tilt1", "tilt2", "displacement", "ratio"])
                .map_err(|e| CoreError::input(format!("csv: {e}")))?;
            for row in &cert.table {
                wtr.write_record([
                    format!("{:e}", row.tilt1),
                    format!("{:e}", row.tilt2),
                    format!("{:e}", row.displacement),
                    format!("{:e}", row.ratio),
                ])
                .map_err(|e| CoreError::input(format!("csv: {e}")))?;
            }
            let data = String::from_utf8(
                wtr.into_inner()
                    .map_err(|e| CoreError::input(format!("csv: {e}")))?,
            )
            .expect("csv is utf-8");
            Some((path.clone(), data))
        }
        None => None,
    };
    Ok(Output { exit, payload, csv })
}

fn run_growth(cli: &Cli, a: &SvcArgs) -> Result<Output, CoreError> {
    if !(a.sigma > 0.0) {
        return Err(CoreError::input("quadratic growth needs --sigma > 0"));
    }
    let (phi, w, m, plan) = windowed_setup(&a.model, &a.window, &a.norm, &a.plan)?;
    let rep = second_order_growth_check(&phi, &w, a.sigma, &m, &plan)?;
    let mut config = windowed_config(cli, &a.model, &w, Some(&a.norm), &plan);
    config.insert("sigma".into(), json_num(a.sigma));
    Ok(reports_output("certify.growth", config, vec![rep], cli.cert_tol, false))
}

fn run_epi(cli: &Cli, a: &EpiArgs) -> Result<Output, CoreError> {
    let model_spec = a
        .model
        .clone()
        .unwrap_or_else(|| a.family.default_limit().to_string());
    let phi = parse_model(&model_spec)?;
    if a.terms < 3 {
        return Err(CoreError::input("--terms must be at least 3"));
    }
    let seq: Vec<FunctionModel> = match a.family {
        FamilyArg::Constant => {
            let proto = phi.clone();
            family_constant(move || proto.clone(), a.terms)
        }
        FamilyArg::QuadOffset => family_quad_offset(phi.n, a.terms),
        FamilyArg::MovingMin | FamilyArg::NegOffset | FamilyArg::Spike => {
            if phi.n != 1 {
                return Err(CoreError::input(format!(
                    "family '{}' is one-dimensional; the limit model has n = {}",
                    a.family.name(),
                    phi.n
                )));
            }
            match a.family {
                FamilyArg::MovingMin => family_moving_min(a.terms),
                FamilyArg::NegOffset => family_neg_offset(a.terms),
                _ => family_spike(a.terms),
            }
        }
    };
    let n = phi.n;
    let plan = a.plan.build_or(|s, g, q| {
        SamplePlan::new(s, g, q, vec![-1.0; n], vec![1.0; n])
    })?;
    let (rep, path_labels) = if a.argmin {
        (argmin_limsup_check(&seq, &phi, &plan)?, Vec::new())
    } else {
        let seq = Arc::new(seq);
        let mut paths: Vec<EpiPath> = standard_paths(&seq, n);
        if a.recovery {
            paths.push(spike_recovery_path());
        }
        if paths.is_empty() {
            paths.push(constant_path());
        }
        let labels: Vec<String> = paths.iter().map(|p| p.label.clone()).collect();
        (epi_convergence_check(&seq, &phi, &plan, &paths)?, labels)
    };
    let mut config = config_skeleton(cli);
    config.insert("family".into(), Value::String(a.family.name().into()));
    config.insert("terms".into(), Value::from(a.terms as u64));
    config.insert("model".into(), Value::String(model_spec));
    config.insert("argmin".into(), Value::Bool(a.argmin));
    config.insert(
        "paths".into(),
        Value::Array(path_labels.into_iter().map(Value::String).collect()),
    );
    config.insert("plan".into(), plan_echo(&plan));
    Ok(reports_output("certify.epi", config, vec![rep], cli.cert_tol, false))
}

fn run_hull(cli: &Cli, a: &HullArgs, check: bool) -> Result<Output, CoreError> {
    let (phi, w, m, plan) = windowed_setup(&a.model, &a.window, &a.norm, &a.plan)?;
    let samples = graph_samples(&phi, &w, &plan, &m)?;
    let mut config = windowed_config(cli, &a.model, &w, Some(&a.norm), &plan);
    config.insert("sigma".into(), json_num(a.sigma));
    if check {
        let hull = build_hull_function(&samples, a.sigma, &m)?;
        let rep = verify_graph_agreement(&phi, &hull, &w, &m, &plan)?;
        return Ok(reports_output("hull.check", config, vec![rep], cli.cert_tol, false));
    }
    if samples.is_empty() {
        return Err(CoreError::input(
            "the window produced no localized graph samples; nothing to build",
        ));
    }
    let tangents: Vec<Value> = samples
        .iter()
        .map(|s| -> Result<Value, CoreError> {
            let j = m.duality_map(&s.x)?;
            let slope: Vec<f64> = s
                .xstar
                .iter()
                .zip(&j)
                .map(|(us, ji)| us - a.sigma * ji)
                .collect();
            let offset = s.fx - dot(&s.xstar, &s.x) + 0.5 * a.sigma * m.norm_sq(&s.x)?;
            let mut t = Map::new();
            t.insert("anchor".into(), json_vec(&s.x));
            t.insert("anchor_value".into(), json_num(s.fx));
            t.insert("slope".into(), json_vec(&slope));
            t.insert("offset".into(), json_num(offset));
            Ok(Value::Object(t))
        })
        .collect::<Result<_, _>>()?;
    let mut payload = base_payload("hull.build", config);
    payload.insert("sigma".into(), json_num(a.sigma));
    payload.insert("tangent_count".into(), Value::from(tangents.len() as u64));
    payload.insert("tangents".into(), Value::Array(tangents));
    Ok(Output { exit: 0, payload, csv: None })
}

fn run_gallery_list(cli: &Cli) -> Output {
    let config = config_skeleton(cli);
    let mut payload = base_payload("gallery.list", config);
    let entries: Vec<Value> = gallery_names()
        .iter()
        .map(|name| {
            let mut m = Map::new();
            m.insert("name".into(), Value::String((*name).into()));
            m.insert(
                "parameters".into(),
                Value::Array(
                    match *name {
                        "quadratic" => vec!["alpha", "n"],
                        "huber_source" => vec!["delta"],
                        "l1_weighted_square" => vec!["m"],
                        _ => vec![],
                    }
                    .into_iter()
                    .map(|and| Value::String(and.into()))
                    .collect(),
                ),
            );
            Value::Object(m)
        })
        .collect();
    payload.insert("models".into(), Value::Array(entries));
    Output { exit: 0, payload, csv: None }
}

// ---------------------------------------------------------------------------
// Stored gallery verdict tables.
// ---------------------------------------------------------------------------

struct VerifyCase {
    label: &'static str,
    expected: Verdict,
    report: CertificateReport,
}

fn case(
    label: &'static str,
    expected: Verdict,
    report: CertificateReport,
) -> VerifyCase {
    VerifyCase { label, expected, report }
}

fn euclid1() -> NormModel {
    NormModel::euclidean(1)
}

fn verify_staircase() -> Result<Vec<VerifyCase>, CoreError> {
    let phi = gallery_lookup("staircase", &BTreeMap::new())?;
    let mut out = Vec::new();
    let tilt_plan = SamplePlan::centered(7, 33, 8, &[0.0], 0.5)?;
    out.push(case(
        "tilt_stability[v_radius=0.2]",
        Verdict::Certified,
        tilt_stability_certify(&phi, &[0.0], 0.2, &tilt_plan)?.report,
    ));
    let reg_plan = SamplePlan::centered(7, 641, 32, &[0.0], 0.2)?;
    let reg_w = Window::new(vec![0.0], vec![0.0], 0.2, 0.2, 0.1)?;
    out.push(case(
        "prox_regularity",
        Verdict::Refuted,
        prox_regularity_certify(&phi, &[0.0], &[0.0], &reg_w, &euclid1(), &reg_plan)?,
    ));
    let psd_plan = SamplePlan::centered(7, 65, 8, &[0.0], 0.2)?;
    let psd_w = Window::new(vec![0.0], vec![0.0], 0.2, 0.2, 0.5)?;
    out.push(case(
        "psd[sigma=1,limiting]",
        Verdict::Refuted,
        psd_certify(&phi, &psd_w, 1.0, PsdFlavor::Limiting, &psd_plan)?,
    ));
    let pb_plan = SamplePlan::centered(7, 33, 8, &[0.0], 0.5)?;
    out.push(case(
        "pointbased",
        Verdict::Refuted,
        pointbased_check(&phi, &[0.0], &pb_plan)?,
    ));
    Ok(out)
}

fn verify_zero_one() -> Result<Vec<VerifyCase>, CoreError> {
    let phi = gallery_lookup("zero_one", &BTreeMap::new())?;
    let mut out = Vec::new();
    let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5)?;
    let plan = SamplePlan::centered(11, 33, 8, &[0.0], 0.5)?;
    out.push(case(
        "svc[sigma=1]",
        Verdict::Certified,
        certify_variational_convexity(&phi, &[0.0], &[0.0], 1.0, &w, &euclid1(), &plan)?,
    ));
    let cont_plan = SamplePlan::centered(7, 65, 16, &[0.0], 1.0)?;
    out.push(case(
        "subdiff_continuity",
        Verdict::Refuted,
        subdiff_continuity_check(
            &phi,
            &[0.0],
            &[0.0],
            &[0.1, 0.05, 0.01, 0.005, 0.001],
            &euclid1(),
            &cont_plan,
        )?,
    ));
    let reg_plan = SamplePlan::centered(7, 65, 16, &[0.0], 0.5)?;
    out.push(case(
        "prox_regularity",
        Verdict::Certified,
        prox_regularity_certify(&phi, &[0.0], &[0.0], &w, &euclid1(), &reg_plan)?,
    ));
    let psd_plan = SamplePlan::centered(7, 65, 8, &[0.0], 0.5)?;
    out.push(case(
        "psd[sigma=1]",
        Verdict::Refuted,
        psd_certify(&phi, &w, 1.0, PsdFlavor::Combined, &psd_plan)?,
    ));
    Ok(out)
}

fn verify_abs() -> Result<Vec<VerifyCase>, CoreError> {
    let phi = gallery_lookup("abs", &BTreeMap::new())?;
    let mut out = Vec::new();
    let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5)?;
    let plan = SamplePlan::centered(7, 33, 8, &[0.0], 0.5)?;
    out.push(case(
        "vc[sigma=0]",
        Verdict::Certified,
        certify_variational_convexity(&phi, &[0.0], &[0.0], 0.0, &w, &euclid1(), &plan)?,
    ));
    out.push(case(
        "tilt_stability[v_radius=0.5]",
        Verdict::Certified,
        tilt_stability_certify(&phi, &[0.0], 0.5, &plan)?.report,
    ));
    let reg_plan = SamplePlan::centered(7, 65, 16, &[0.0], 0.5)?;
    out.push(case(
        "prox_regularity",
        Verdict::Certified,
        prox_regularity_certify(&phi, &[0.0], &[0.0], &w, &euclid1(), &reg_plan)?,
    ));
    Ok(out)
}

fn verify_quadratic() -> Result<Vec<VerifyCase>, CoreError> {
    let phi = gallery_lookup("quadratic", &BTreeMap::new())?;
    let mut out = Vec::new();
    let w = Window::new(vec![0.0], vec![0.0], 1.0, 1.0, 1.0)?;
    let plan = SamplePlan::centered(7, 33, 8, &[0.0], 1.0)?;
    out.push(case(
        "vc[sigma=1]",
        Verdict::Certified,
        certify_variational_convexity(&phi, &[0.0], &[0.0], 1.0, &w, &euclid1(), &plan)?,
    ));
    out.push(case(
        "psd[sigma=1]",
        Verdict::Certified,
        psd_certify(&phi, &w, 1.0, PsdFlavor::Combined, &plan)?,
    ));
    out.push(case(
        "pointbased",
        Verdict::Certified,
        pointbased_check(&phi, &[0.0], &plan)?,
    ));
    out.push(case(
        "tilt_stability[v_radius=0.5]",
        Verdict::Certified,
        tilt_stability_certify(&phi, &[0.0], 0.5, &plan)?.report,
    ));
    Ok(out)
}

fn verify_huber() -> Result<Vec<VerifyCase>, CoreError> {
    let phi = gallery_lookup("huber_source", &BTreeMap::new())?;
    let mut out = Vec::new();
    let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5)?;
    let plan = SamplePlan::centered(7, 33, 8, &[0.0], 0.5)?;
    out.push(case(
        "vc[sigma=0]",
        Verdict::Certified,
        certify_variational_convexity(&phi, &[0.0], &[0.0], 0.0, &w, &euclid1(), &plan)?,
    ));
    let cont_plan = SamplePlan::centered(7, 65, 16, &[0.0], 0.5)?;
    out.push(case(
        "subdiff_continuity",
        Verdict::Certified,
        subdiff_continuity_check(
            &phi,
            &[0.0],
            &[0.0],
            &[0.1, 0.05, 0.01],
            &euclid1(),
            &cont_plan,
        )?,
    ));
    Ok(out)
}

fn verify_l1() -> Result<Vec<VerifyCase>, CoreError> {
    let mut params = BTreeMap::new();
    params.insert("m".to_string(), 512.0);
    let phi = gallery_lookup("l1_weighted_square", &params)?;
    let m = phi.n;
    let ne = NormEval::weighted_l1(vec![1.0 / m as f64; m])?;
    let plan = SamplePlan::new(5, 0, 24, vec![-1.0; m], vec![1.0; m])?;
    let mut out = Vec::new();
    out.push(case(
        "polyak_strong_convexity[sigma=2]",
        Verdict::Certified,
        polyak_strong_convexity_check(&phi, 2.0, &ne, &plan)?,
    ));
    let shift_plan = SamplePlan::new(5, 0, 4, vec![-1.0; m], vec![1.0; m])?;
    out.push(case(
        "shift_strong_convexity[sigma=2]",
        Verdict::Refuted,
        shift_strong_convexity_check(&phi, 2.0, &ne, &shift_plan)?,
    ));
    Ok(out)
}

fn run_gallery_verify(cli: &Cli, name: Option<&str>) -> Result<Output, CoreError> {
    let all = ["staircase", "zero_one", "abs", "quadratic", "huber_source", "l1_weighted_square"];
    let targets: Vec<&str> = match name {
        Some(n) => {
            if !all.contains(&n) {
                return Err(CoreError::input(format!(
                    "no stored verdict table for '{n}' (available: {})",
                    all.join(", ")
                )));
            }
            vec![n]
        }
        None => all.to_vec(),
    };
    let mut cases_json = Vec::new();
    let mut all_matched = true;
    for model in &targets {
        let cases = match *model {
            "staircase" => verify_staircase()?,
            "zero_one" => verify_zero_one()?,
            "abs" => verify_abs()?,
            "quadratic" => verify_quadratic()?,
            "huber_source" => verify_huber()?,
            "l1_weighted_square" => verify_l1()?,
            _ => unreachable!("targets are filtered above"),
        };
        for c in cases {
            let matched = c.report.verdict == c.expected;
            all_matched &= matched;
            let mut m = Map::new();
            m.insert("model".into(), Value::String((*model).into()));
            m.insert("check".into(), Value::String(c.label.into()));
            m.insert(
                "expected".into(),
                Value::String(c.expected.as_str().into()),
            );
            m.insert(
                "got".into(),
                Value::String(c.report.verdict.as_str().into()),
            );
            m.insert(
                "margin".into(),
                c.report.margin.map(json_num).unwrap_or(Value::Null),
            );
            m.insert("matched".into(), Value::Bool(matched));
            cases_json.push(Value::Object(m));
        }
    }
    let mut config = config_skeleton(cli);
    config.insert(
        "name".into(),
        name.map(|n| Value::String(n.into())).unwrap_or(Value::Null),
    );
    let mut payload = base_payload("gallery.verify", config);
    payload.insert("cases".into(), Value::Array(cases_json));
    payload.insert("all_matched".into(), Value::Bool(all_matched));
    Ok(Output {
        exit: if all_matched { 0 } else { 1 },
        payload,
        csv: None,
    })
}

fn run_estimate_c1(
    cli: &Cli,
    p: f64,
    n: usize,
    weights: &Option<Vec<f64>>,
    plan_args: &PlanArgs,
) -> Result<Output, CoreError> {
    let m = match weights {
        Some(w) => NormModel::weighted(p, n, w.clone())?,
        None => NormModel::lp(p, n)?,
    };
    let plan = plan_args.build_or(|s, g, q| {
        SamplePlan::new(s, g, q, vec![-1.0; n], vec![1.0; n])
    })?;
    let est = estimate_strong_mono_modulus(&m, &plan)?;
    let mut config = config_skeleton(cli);
    config.insert("p".into(), json_num(p));
    config.insert("n".into(), Value::from(n as u64));
    config.insert(
        "weights".into(),
        weights.as_deref().map(json_vec).unwrap_or(Value::Null),
    );
    config.insert("plan".into(), plan_echo(&plan));
    let mut payload = base_payload("estimate.c1", config);
    let mut e = Map::new();
    e.insert("value".into(), json_num(est.value));
    e.insert("witness_x".into(), json_vec(&est.witness.0));
    e.insert("witness_y".into(), json_vec(&est.witness.1));
    e.insert("pairs_tested".into(), Value::from(est.pairs_tested as u64));
    payload.insert("estimate".into(), Value::Object(e));
    Ok(Output { exit: 0, payload, csv: None })
}

fn run_estimate_lambda0(
    cli: &Cli,
    model: &str,
    lambdas: &[f64],
    norm: &NormArgs,
    plan_args: &PlanArgs,
) -> Result<Output, CoreError> {
    let phi = parse_model(model)?;
    let m = norm.model(phi.n)?;
    let n = phi.n;
    let plan = plan_args.build_or(|s, g, q| {
        SamplePlan::new(s, g, q, vec![-4.0; n], vec![4.0; n])
    })?;
    let th = prox_bound_threshold(&phi, &m, &plan, lambdas)?;
    let mut config = config_skeleton(cli);
    config.insert("model".into(), Value::String(model.into()));
    config.insert("lambdas".into(), json_vec(lambdas));
    config.insert("norm".into(), norm.echo());
    config.insert("plan".into(), plan_echo(&plan));
    let mut payload = base_payload("estimate.lambda0", config);
    let mut t = Map::new();
    t.insert(
        "lambda0_lower".into(),
        th.lambda0_lower.map(json_num).unwrap_or(Value::Null),
    );
    t.insert(
        "lambda0_upper".into(),
        th.lambda0_upper.map(json_num).unwrap_or(Value::Null),
    );
    t.insert("bracket_valid".into(), Value::Bool(th.bracket_valid));
    t.insert(
        "tested".into(),
        Value::Array(
            th.tested
                .iter()
                .map(|(l, finite)| {
                    let mut m = Map::new();
                    m.insert("lambda".into(), json_num(*l));
                    m.insert("finite".into(), Value::Bool(*finite));
                    Value::Object(m)
                })
                .collect(),
        ),
    );
    payload.insert("threshold".into(), Value::Object(t));
    Ok(Output { exit: 0, payload, csv: None })
}

fn run(cli: &Cli) -> Result<Output, CoreError> {
    match &cli.cmd {
        Cmd::Envelope(a) => run_envelope(cli, a, false),
        Cmd::Prox(a) => run_envelope(cli, a, true),
        Cmd::Certify(c) => match c {
            CertifyCmd::Vc(a) => run_vc(cli, a, false),
            CertifyCmd::Svc(a) => {
                let vc = VcArgs {
                    model: a.model.clone(),
                    sigma: a.sigma,
                    window: WindowArgs {
                        center: a.window.center.clone(),
                        cstar: a.window.cstar.clone(),
                        r1: a.window.r1,
                        r2: a.window.r2,
                        eps: a.window.eps,
                    },
                    norm: NormArgs {
                        p: a.norm.p,
                        weights: a.norm.weights.clone(),
                    },
                    plan: PlanArgs {
                        seed: a.plan.seed,
                        grid: a.plan.grid,
                        qmc: a.plan.qmc,
                        box_lo: a.plan.box_lo.clone(),
                        box_hi: a.plan.box_hi.clone(),
                    },
                };
                run_vc(cli, &vc, true)
            }
            CertifyCmd::Mono(a) => run_mono(cli, a),
            CertifyCmd::Proxreg(a) => run_proxreg(cli, a),
            CertifyCmd::Subdiffcont(a) => run_subdiffcont(cli, a),
            CertifyCmd::Proxsub(a) => run_proxsub(cli, a),
            CertifyCmd::Psd(a) => run_psd(cli, a),
            CertifyCmd::Pointbased(a) => run_pointbased(cli, a),
            CertifyCmd::Tilt(a) => run_tilt(cli, a),
            CertifyCmd::Growth(a) => run_growth(cli, a),
            CertifyCmd::Epi(a) => run_epi(cli, a),
        },
        Cmd::Hull(h) => match h {
            HullCmd::Build(a) => run_hull(cli, a, false),
            HullCmd::Check(a) => run_hull(cli, a, true),
        },
        Cmd::Gallery(g) => match g {
            GalleryCmd::List => Ok(run_gallery_list(cli)),
            GalleryCmd::Verify { name } => run_gallery_verify(cli, name.as_deref()),
        },
        Cmd::Estimate(e) => match e {
            EstimateCmd::C1 { p, n, weights, plan } => {
                run_estimate_c1(cli, *p, *n, weights, plan)
            }
            EstimateCmd::Lambda0 { model, lambdas, norm, plan } => {
                run_estimate_lambda0(cli, model, lambdas, norm, plan)
            }
        },
    }
}

fn main() -> ExitCode {
    if let Ok(v) = std::env::var("VARCERT_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
    let cli = Cli::parse();
    let started = Instant::now();
    match run(&cli) {
        Ok(mut out) => {
            let ms = started.elapsed().as_millis() as u64;
            out.payload.insert("timing_ms".into(), Value::from(ms));
            let text = serde_json::to_string_pretty(&Value::Object(out.payload))
                .expect("payload serializes")
                + "\n";
            if let Some((path, data)) = &out.csv {
                if let Err(e) = std::fs::write(path, data) {
                    eprintln!("error: writing {}: {e}", path.display());
                    return ExitCode::from(2);
                }
            }
            match &cli.out {
                Some(p) => {
                    if let Err(e) = std::fs::write(p, &text) {
                        eprintln!("error: writing {}: {e}", p.display());
                        return ExitCode::from(2);
                    }
                }
                None => print!("{text}"),
            }
            ExitCode::from(out.exit)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
