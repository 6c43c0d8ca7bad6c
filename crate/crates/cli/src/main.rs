//! Batch front end for the Riesz energy toolkit: one subcommand per
//! pipeline stage, key=value reports (or `--json`), deterministic output
//! for a fixed configuration at any thread count.
//!
//! Exit codes are part of the contract:
//!   0 success
//!   1 route disagreement or other computation failure
//!   2 format error (unreadable/malformed input)
//!   3 dual grid too small
//!   4 invalid alpha
//!   5 origin not interior (after the translation fallback)
//!   6 inadmissible or empty measure
//!   7 no feasible point
//!   8 verification failure

mod parse;
mod report;

use clap::{Args, Parser, Subcommand};
use parse::{ext_to_string, parse_function, parse_grid_spec, parse_list, parse_point};
use report::Report;
use riesz_core::logconcave::LogConcaveFunction;
use riesz_core::measure::{self, DiscreteMeasure};
use riesz_core::minkowski::{self, SolverConfig};
use riesz_core::quad::{self, QuadMethod, QuadratureConfig};
use riesz_core::variation::{self, VariationReport};
use riesz_core::{CoreError, GridSpec};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "riesz", about = "Riesz energy calculus for log-concave functions", version)]
struct Cli {
    /// Riesz exponent alpha > 0
    #[arg(long, global = true, default_value_t = 1.0)]
    alpha: f64,
    /// Ambient dimension for analytic function specs without --grid
    #[arg(long, global = true, default_value_t = 1)]
    dim: usize,
    /// Working lattice `lo:hi:nodes[,lo:hi:nodes]`
    #[arg(long, global = true, allow_hyphen_values = true)]
    grid: Option<String>,
    /// Quadrature method: direct | epsreg | mc
    #[arg(long, global = true, default_value = "direct")]
    method: String,
    /// Seed for Monte Carlo and solver restarts
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = library default); results do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Emit the report as a single JSON object
    #[arg(long, global = true, default_value_t = false)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Legendre transform of a grid file onto a dual lattice
    Conjugate(ConjugateArgs),
    /// Riesz alpha-energy of a function
    Energy(FunctionArgs),
    /// Riesz potential I_alpha(f, y) at a point
    Potential(PotentialArgs),
    /// First variation along the Asplund sum, by selected routes
    Variation(VariationArgs),
    /// Riesz energy measure of a function
    Measure(MeasureArgs),
    /// Spherical energy measure (boundary normals)
    SphereMeasure(SphereMeasureArgs),
    /// Admissibility report for a measure file
    Admissibility(AdmissibilityArgs),
    /// Solve the even Minkowski problem for a measure file
    Solve(SolveArgs),
    /// Verify a solution grid against a measure file
    Verify(VerifyArgs),
    /// Flatten a grid, measure or report file to CSV
    Plotdata(PlotdataArgs),
}

#[derive(Args)]
struct ConjugateArgs {
    /// Input grid file
    #[arg(long)]
    input: String,
    /// Output grid file
    #[arg(long)]
    output: String,
    /// Dual lattice `lo:hi:nodes[,lo:hi:nodes]`
    #[arg(long, allow_hyphen_values = true)]
    dual: String,
}

#[derive(Args)]
struct FunctionArgs {
    /// Function spec (see README): `gaussian a b`, `indicator [lo,hi]`, ...
    #[arg(long = "fn", alias = "analytic")]
    function: String,
    /// Monte Carlo sample count
    #[arg(long, default_value_t = 1_000_000)]
    mc_samples: usize,
}

#[derive(Args)]
struct PotentialArgs {
    #[arg(long = "fn", alias = "analytic")]
    function: String,
    /// Evaluation point `x[,y]`
    #[arg(long, allow_hyphen_values = true)]
    at: String,
}

#[derive(Args)]
struct VariationArgs {
    /// f spec
    #[arg(long = "fn", alias = "analytic")]
    function: String,
    /// g spec (defaults to f)
    #[arg(long = "g")]
    perturbation: Option<String>,
    /// Routes: comma list of closed,boundary,general,proportional,fd
    #[arg(long, default_value = "closed,boundary,fd")]
    routes: String,
    /// Decreasing t values for the finite-difference route
    #[arg(long, default_value = "0.04,0.02,0.01")]
    t_list: String,
    /// beta1 for the proportional route
    #[arg(long, default_value_t = 1.0)]
    beta1: f64,
    /// beta2 for the proportional route
    #[arg(long, default_value_t = 0.0)]
    beta2: f64,
    /// Pairwise agreement tolerance (relative to max(1, |closed|))
    #[arg(long, default_value_t = 2e-2)]
    tol_routes: f64,
}

#[derive(Args)]
struct MeasureArgs {
    #[arg(long = "fn", alias = "analytic")]
    function: String,
    /// Optional binning cell size
    #[arg(long)]
    binning: Option<f64>,
    /// Output measure file
    #[arg(long)]
    output: String,
}

#[derive(Args)]
struct SphereMeasureArgs {
    #[arg(long = "fn", alias = "analytic")]
    function: String,
    #[arg(long)]
    output: String,
}

#[derive(Args)]
struct AdmissibilityArgs {
    /// Input measure file
    #[arg(long)]
    measure: String,
    /// Symmetrize before reporting
    #[arg(long, default_value_t = false)]
    symmetrize: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    measure: String,
    /// Energy floor (defaults to the measure's total mass)
    #[arg(long)]
    tau: Option<f64>,
    /// Output prefix: writes <prefix>.grid, <prefix>.measure, report to stdout
    #[arg(long)]
    out_prefix: Option<String>,
    #[arg(long, default_value_t = 32)]
    pieces: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    /// Verification thresholds: moment and stationarity residual bound
    #[arg(long, default_value_t = 5e-2)]
    verify_tol: f64,
    /// Solver lattice override `lo:hi:nodes`
    #[arg(long, allow_hyphen_values = true)]
    solver_grid: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Solution as a grid file of the potential phi = -log f
    #[arg(long)]
    solution: String,
    #[arg(long)]
    measure: String,
    #[arg(long, default_value_t = 5e-2)]
    verify_tol: f64,
}

#[derive(Args)]
struct PlotdataArgs {
    #[arg(long)]
    input: String,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    output: Option<String>,
}

fn exit_code_for(err: &CoreError) -> u8 {
    match err {
        CoreError::Format(_) | CoreError::Io(_) => 2,
        CoreError::DualGridTooSmall(_) => 3,
        CoreError::InvalidAlpha(_) => 4,
        CoreError::OriginNotInterior => 5,
        CoreError::InadmissibleMeasure(_) | CoreError::EmptyMeasure => 6,
        CoreError::NoFeasiblePoint => 7,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.threads > 0 {
        quad::set_threads(cli.threads);
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

fn quad_config(cli: &Cli, mc_samples: usize) -> Result<QuadratureConfig, CoreError> {
    let method = match cli.method.as_str() {
        "direct" => QuadMethod::DirectDiagonalCorrected,
        "epsreg" => QuadMethod::EpsilonRegularized,
        "mc" => QuadMethod::MonteCarlo,
        other => return Err(CoreError::Format(format!("unknown method `{other}`"))),
    };
    let mut cfg = QuadratureConfig::direct(cli.alpha)?.with_method(method).with_seed(cli.seed);
    cfg.mc_samples = mc_samples.max(10_000);
    cfg.validated()
}

// The thread count is deliberately not part of the report: reports are a
// function of the run configuration alone, and results are identical at
// any thread count.
fn config_header(rep: &mut Report, cli: &Cli) {
    rep.exact("config.alpha", cli.alpha);
    rep.text("config.method", &cli.method);
    rep.int("config.seed", cli.seed as i64);
    if let Some(g) = &cli.grid {
        rep.text("config.grid", g);
    }
}

fn working_grid(cli: &Cli) -> Result<Option<GridSpec>, CoreError> {
    cli.grid.as_deref().map(parse_grid_spec).transpose()
}

fn load_function(cli: &Cli, spec: &str) -> Result<LogConcaveFunction, CoreError> {
    let grid = working_grid(cli)?;
    parse_function(spec, grid.as_ref(), cli.dim)
}

fn load_measure(path: &str) -> Result<DiscreteMeasure, CoreError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CoreError::Io(format!("{path}: {e}")))?;
    measure::read_measure(&text)
}

fn run(cli: &Cli) -> Result<ExitCode, CoreError> {
    match &cli.command {
        Command::Conjugate(args) => cmd_conjugate(cli, args),
        Command::Energy(args) => cmd_energy(cli, args),
        Command::Potential(args) => cmd_potential(cli, args),
        Command::Variation(args) => cmd_variation(cli, args),
        Command::Measure(args) => cmd_measure(cli, args),
        Command::SphereMeasure(args) => cmd_sphere_measure(cli, args),
        Command::Admissibility(args) => cmd_admissibility(cli, args),
        Command::Solve(args) => cmd_solve(cli, args),
        Command::Verify(args) => cmd_verify(cli, args),
        Command::Plotdata(args) => cmd_plotdata(cli, args),
    }
}

fn cmd_conjugate(cli: &Cli, args: &ConjugateArgs) -> Result<ExitCode, CoreError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CoreError::Io(format!("{}: {e}", args.input)))?;
    let (spec, values) = riesz_core::grid::read_grid(&text)?;
    let phi = riesz_core::GridConvexFunction::sampled(spec, values)?;
    let dual = parse_grid_spec(&args.dual)?;
    let (star, touched) = phi.legendre_transform_reporting(&dual)?;
    if touched > 0 {
        return Err(CoreError::DualGridTooSmall(touched));
    }
    std::fs::write(&args.output, parse::grid_to_text(&star))
        .map_err(|e| CoreError::Io(e.to_string()))?;
    let mut rep = Report::new("conjugate");
    config_header(&mut rep, cli);
    rep.text("input", &args.input);
    rep.text("output", &args.output);
    rep.int("dual_nodes", dual.len() as i64);
    rep.int("argmax_on_boundary", 0);
    print!("{}", rep.render(cli.json));
    Ok(ExitCode::SUCCESS)
}

fn cmd_energy(cli: &Cli, args: &FunctionArgs) -> Result<ExitCode, CoreError> {
    let f = load_function(cli, &args.function)?;
    let cfg = quad_config(cli, args.mc_samples)?;
    let e = quad::riesz_energy(&f, &cfg)?;
    let mut rep = Report::new("energy");
    config_header(&mut rep, cli);
    rep.text("function", &args.function);
    rep.with_err("energy", e.value, e.estimated_error);
    rep.exact("tail_bound", e.tail_bound);
    rep.text("method_used", &e.method_used.to_string());
    rep.exact("mass", f.total_mass());
    print!("{}", rep.render(cli.json));
    Ok(ExitCode::SUCCESS)
}

fn cmd_potential(cli: &Cli, args: &PotentialArgs) -> Result<ExitCode, CoreError> {
    let f = load_function(cli, &args.function)?;
    let cfg = quad_config(cli, 1_000_000)?;
    let point = parse_point(&args.at)?;
    if point.len() != f.dim() {
        return Err(CoreError::Format("point dimension mismatch".into()));
    }
    let v = quad::riesz_potential(&f, &point, &cfg)?;
    let h = f.spec().max_spacing();
    let mut rep = Report::new("potential");
    config_header(&mut rep, cli);
    rep.text("function", &args.function);
    rep.text("at", &args.at);
    // lattice quadrature: second-order in the spacing
    rep.with_err("potential", v, h * h * v.abs());
    print!("{}", rep.render(cli.json));
    Ok(ExitCode::SUCCESS)
}

fn push_variation(rep: &mut Report, label: &str, r: &VariationReport) {
    rep.exact(&format!("{label}.value"), r.value);
    rep.exact(&format!("{label}.interior"), r.interior_term);
    rep.exact(&format!("{label}.boundary"), r.boundary_term);
    if let Some(v) = r.diagnostics.growth_violation {
        rep.exact(&format!("{label}.growth_violation"), v);
    }
    for (t, q) in &r.diagnostics.fd_table {
        rep.exact(&format!("{label}.quotient.t{}", report::format_float(*t)), *q);
    }
}

fn cmd_variation(cli: &Cli, args: &VariationArgs) -> Result<ExitCode, CoreError> {
    let f = load_function(cli, &args.function)?;
    let g = match &args.perturbation {
        Some(spec) => Some(load_function(cli, spec)?),
        None => None,
    };
    let cfg = quad_config(cli, 1_000_000)?;
    let t_list = parse_list(&args.t_list)?;
    let mut rep = Report::new("variation");
    config_header(&mut rep, cli);
    rep.text("function", &args.function);
    if let Some(gs) = &args.perturbation {
        rep.text("perturbation", gs);
    }
    let mut computed: Vec<(String, f64)> = Vec::new();
    for route in args.routes.split(',') {
        let route = route.trim();
        let r = match route {
            "closed" => variation::delta_ff_closed(&f, &cfg)?,
            "boundary" => variation::delta_ff_boundary_form(&f, &cfg)?,
            "general" => {
                let g = g.as_ref().unwrap_or(&f);
                variation::delta_fg_general(&f, g, &cfg)?
            }
            "proportional" => {
                variation::delta_fg_proportional(&f, args.beta1, args.beta2, &cfg)?
            }
            "fd" => {
                let g = g.as_ref().unwrap_or(&f);
                variation::delta_finite_difference(&f, g, &t_list, &cfg)?
            }
            other => return Err(CoreError::Format(format!("unknown route `{other}`"))),
        };
        push_variation(&mut rep, route, &r);
        computed.push((route.to_string(), r.value));
    }
    // pairwise agreement among routes that estimate the same quantity:
    // closed/boundary always compare; fd/general compare against them only
    // when g defaults to f
    let mut worst = 0.0f64;
    for i in 0..computed.len() {
        for j in i + 1..computed.len() {
            let pair = (computed[i].0.as_str(), computed[j].0.as_str());
            let comparable = matches!(pair, ("closed", "boundary") | ("general", "fd"))
                || (g.is_none()
                    && matches!(
                        pair,
                        ("closed", "fd")
                            | ("boundary", "fd")
                            | ("closed", "general")
                            | ("boundary", "general")
                    ));
            if !comparable {
                continue;
            }
            let scale = computed[i].1.abs().max(1.0);
            let gap = (computed[i].1 - computed[j].1).abs() / scale;
            worst = worst.max(gap);
            rep.exact(&format!("agreement.{}.{}", computed[i].0, computed[j].0), gap);
        }
    }
    rep.exact("agreement.worst", worst);
    let ok = worst <= args.tol_routes;
    rep.text("agreement.pass", if ok { "true" } else { "false" });
    print!("{}", rep.render(cli.json));
    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("routes disagree: worst relative gap {worst} > {}", args.tol_routes);
        Ok(ExitCode::from(1))
    }
}

fn cmd_measure(cli: &Cli, args: &MeasureArgs) -> Result<ExitCode, CoreError> {
    let f = load_function(cli, &args.function)?;
    let cfg = quad_config(cli, 1_000_000)?;
    let m = measure::riesz_energy_measure(&f, &cfg, args.binning)?;
    std::fs::write(&args.output, measure::write_measure(&m))
        .map_err(|e| CoreError::Io(e.to_string()))?;
    let e = quad::riesz_energy(&f, &cfg)?;
    let mut rep = Report::new("measure");
    config_header(&mut rep, cli);
    rep.text("function", &args.function);
    rep.text("output", &args.output);
    rep.int("atoms", m.atoms().len() as i64);
    rep.with_err("mass", m.total_mass(), e.estimated_error);
    rep.with_err("energy", e.value, e.estimated_error);
    rep.exact("mass_energy_gap", (m.total_mass() - e.value).abs());
    print!("{}", rep.render(cli.json));
    Ok(ExitCode::SUCCESS)
}

fn cmd_sphere_measure(cli: &Cli, args: &SphereMeasureArgs) -> Result<ExitCode, CoreError> {
    let f = load_function(cli, &args.function)?;
    let cfg = quad_config(cli, 1_000_000)?;
    let m = measure::spherical_energy_measure(&f, &cfg)?;
    std::fs::write(&args.output, measure::write_measure(&m))
        .map_err(|e| CoreError::Io(e.to_string()))?;
    let mut rep = Report::new("sphere-measure");
    config_header(&mut rep, cli);
    rep.text("function", &args.function);
    rep.text("output", &args.output);
    rep.int("atoms", m.atoms().len() as i64);
    rep.exact("mass", m.total_mass());
    print!("{}", rep.render(cli.json));
    Ok(ExitCode::SUCCESS)
}

fn cmd_admissibility(cli: &Cli, args: &AdmissibilityArgs) -> Result<ExitCode, CoreError> {
    let mut m = load_measure(&args.measure)?;
    if args.symmetrize {
        m = m.symmetrize();
    }
    let rep_data = measure::admissibility(&m)?;
    let mut rep = Report::new("admissibility");
    config_header(&mut rep, cli);
    rep.text("measure", &args.measure);
    rep.exact("total_mass", rep_data.total_mass);
    rep.exact("evenness_defect", rep_data.evenness_defect);
    rep.exact("min_directional_moment", rep_data.min_directional_moment);
    rep.exact("first_moment", rep_data.first_moment);
    let ok = rep_data.is_admissible();
    rep.text("admissible", if ok { "true" } else { "false" });
    print!("{}", rep.render(cli.json));
    if ok {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(6))
    }
}

fn cmd_solve(cli: &Cli, args: &SolveArgs) -> Result<ExitCode, CoreError> {
    let mu = load_measure(&args.measure)?;
    let mut cfg = SolverConfig::for_measure(&mu, cli.alpha)?;
    cfg.tau = args.tau;
    cfg.n_pieces = args.pieces;
    cfg.restarts = args.restarts;
    cfg.max_iters = args.max_iters;
    cfg.seed = cli.seed;
    if let Some(g) = &args.solver_grid {
        let spec = parse_grid_spec(g)?;
        cfg.primal_spec = spec.clone();
        cfg.dual_spec = spec;
    }
    let res = minkowski::solve(&mu, &cfg)?;

    let mut rep = Report::new("solve");
    config_header(&mut rep, cli);
    rep.text("measure", &args.measure);
    rep.exact("tau", res.tau);
    rep.exact("objective", res.objective);
    rep.exact("constraint", res.constraint_value);
    rep.text("active", if res.active { "true" } else { "false" });
    rep.exact(
        "solution_energy",
        quad::riesz_energy(&res.f_solution, &cfg.quad)?.value,
    );
    rep.exact("mass_residual", res.verification.comparison.mass_residual);
    rep.exact("moment_residual", res.verification.comparison.moment_residual);
    rep.exact("box_residual", res.verification.comparison.box_residual);
    for (s, r) in &res.verification.stationarity {
        rep.exact(&format!("stationarity.scale{}", report::format_float(*s)), *r);
    }

    if let Some(prefix) = &args.out_prefix {
        let phi = res.f_solution.potential_grid()?;
        std::fs::write(format!("{prefix}.grid"), parse::grid_to_text(&phi))
            .map_err(|e| CoreError::Io(e.to_string()))?;
        let pushed = measure::riesz_energy_measure(&res.f_solution, &cfg.quad, None)?;
        std::fs::write(format!("{prefix}.measure"), measure::write_measure(&pushed))
            .map_err(|e| CoreError::Io(e.to_string()))?;
        std::fs::write(
            format!("{prefix}.support"),
            parse::write_support(res.f_solution.support_set()),
        )
        .map_err(|e| CoreError::Io(e.to_string()))?;
        rep.text("solution_grid", &format!("{prefix}.grid"));
        rep.text("solution_measure", &format!("{prefix}.measure"));
        rep.text("solution_support", &format!("{prefix}.support"));
    }

    let pass = res.verification.comparison.moment_residual <= args.verify_tol
        && res.verification.max_stationarity() <= args.verify_tol
        && res.verification.comparison.mass_residual <= 1e-6;
    rep.text("verification.pass", if pass { "true" } else { "false" });
    print!("{}", rep.render(cli.json));
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("verification residuals exceed {}", args.verify_tol);
        Ok(ExitCode::from(8))
    }
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs) -> Result<ExitCode, CoreError> {
    let mu = load_measure(&args.measure)?;
    let text = std::fs::read_to_string(&args.solution)
        .map_err(|e| CoreError::Io(format!("{}: {e}", args.solution)))?;
    let (spec, values) = riesz_core::grid::read_grid(&text)?;
    let phi = riesz_core::GridConvexFunction::sampled(spec, values)?;
    let f = LogConcaveFunction::from_grid(phi)?;
    let cfg = quad_config(cli, 1_000_000)?;
    let v = minkowski::verify_solution(&f, &mu, &cfg, &minkowski::default_zeta_scales(&mu))?;
    let mut rep = Report::new("verify");
    config_header(&mut rep, cli);
    rep.text("solution", &args.solution);
    rep.text("measure", &args.measure);
    rep.exact("mass_residual", v.comparison.mass_residual);
    rep.exact("moment_residual", v.comparison.moment_residual);
    rep.exact("box_residual", v.comparison.box_residual);
    for (s, r) in &v.stationarity {
        rep.exact(&format!("stationarity.scale{}", report::format_float(*s)), *r);
    }
    let pass = v.comparison.moment_residual <= args.verify_tol
        && v.max_stationarity() <= args.verify_tol;
    rep.text("verification.pass", if pass { "true" } else { "false" });
    print!("{}", rep.render(cli.json));
    if pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(8))
    }
}

fn cmd_plotdata(cli: &Cli, args: &PlotdataArgs) -> Result<ExitCode, CoreError> {
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| CoreError::Io(format!("{}: {e}", args.input)))?;
    let first = text.split_whitespace().next().unwrap_or("");
    let csv = if first == "measure" {
        let m = measure::read_measure(&text)?;
        let mut out = String::new();
        if m.dim() == 1 {
            out.push_str("x,weight\n");
            for (p, w) in m.atoms() {
                out.push_str(&format!("{},{}\n", p[0], w));
            }
        } else {
            out.push_str("x,y,weight\n");
            for (p, w) in m.atoms() {
                out.push_str(&format!("{},{},{}\n", p[0], p[1], w));
            }
        }
        out
    } else if first == "1" || first == "2" {
        let (spec, values) = riesz_core::grid::read_grid(&text)?;
        let mut out = String::new();
        if spec.dim() == 1 {
            out.push_str("x,value\n");
            for k in 0..spec.len() {
                let p = spec.point(k);
                out.push_str(&format!("{},{}\n", p[0], ext_to_string(values[k])));
            }
        } else {
            out.push_str("x,y,value\n");
            for k in 0..spec.len() {
                let p = spec.point(k);
                out.push_str(&format!("{},{},{}\n", p[0], p[1], ext_to_string(values[k])));
            }
        }
        out
    } else if text.lines().next().map(|l| l.contains('=')).unwrap_or(false) {
        // key=value report
        let mut out = String::from("key,value\n");
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                out.push_str(&format!("{k},{v}\n"));
            }
        }
        out
    } else {
        return Err(CoreError::Format("unrecognized input format".into()));
    };
    match &args.output {
        Some(path) => std::fs::write(path, csv).map_err(|e| CoreError::Io(e.to_string()))?,
        None => print!("{csv}"),
    }
    let _ = cli;
    Ok(ExitCode::SUCCESS)
}
