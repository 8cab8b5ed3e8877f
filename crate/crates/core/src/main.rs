use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use bt_zeros::constants::{evaluate, i_n_monte_carlo};
use bt_zeros::experiments::{
    curve_cells, grid_csv, reconstruct_grid, score_against_curve, simulate, simulation_csv, write_plot,
    CenterSpec, ExperimentConfig, SymbolChoice,
};
use bt_zeros::geometry::{ChartPoint, SpherePoint, Symbol};
use bt_zeros::kernel::{expansion_fit, fibonacci_sphere, positivity_scan};
use bt_zeros::par::{with_threads, Execution};
use bt_zeros::sections::RngSpec;
use bt_zeros::toeplitz::{
    op_from_symbol_quadrature, op_height, op_identity, op_x1, op_x2, op_xy_lambda, op_xy_product, verify,
};

#[derive(Parser)]
#[command(name = "bt-zeros", version, about = "Zeros of random sections twisted by Berezin-Toeplitz operators on CP1")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo estimate of the excess zero count in Planck-scale balls.
    Simulate(SimulateArgs),
    /// Excess zero count on a chart grid, classified against the on-zero threshold.
    Reconstruct(ReconstructArgs),
    /// The constant C_n(R): closed form, quadrature and hypergeometric evaluation.
    Constants(ConstantsArgs),
    /// Fits of the Bergman kernel diagonal expansion and a positivity scan.
    KernelCheck(KernelArgs),
    /// Closed-form operator matrices against quadrature.
    VerifyToeplitz(VerifyArgs),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    symbol: Option<SymbolChoice>,
    /// Level λ of the symbol x1·x2 − λ.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the operator matrix as CSV (row,col,re,im).
    #[arg(long)]
    dump_matrix: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Ball center on the unit sphere, `x1,x2,x3` (repeatable).
    #[arg(long, value_parser = parse_sphere, allow_hyphen_values = true)]
    center_sphere: Vec<[f64; 3]>,
    /// Ball center in the chart, `re,im` (repeatable).
    #[arg(long, value_parser = parse_chart, allow_hyphen_values = true)]
    center: Vec<[f64; 2]>,
    /// Radii: a value, a comma list, or `start:end:steps`.
    #[arg(long, value_parser = parse_values)]
    r: Option<Values>,
    /// SVG plot of the estimates against R with the theory curve.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct ReconstructArgs {
    #[command(flatten)]
    common: Common,
    /// Cells per side.
    #[arg(long)]
    grid: Option<usize>,
    /// Half-width of the chart square.
    #[arg(long)]
    square: Option<f64>,
    /// Ball radius on the Planck scale (default 1/√2).
    #[arg(long)]
    r: Option<f64>,
}

#[derive(Args)]
struct ConstantsArgs {
    /// Complex dimensions: a value, a comma list, or `start:end:steps`.
    #[arg(long, default_value = "1", value_parser = parse_values)]
    n: Values,
    /// Radii: a value, a comma list, or `start:end:steps`.
    #[arg(long, conflicts_with = "grid", value_parser = parse_values)]
    r: Option<Values>,
    /// Radii `r0:r1:steps`.
    #[arg(long, value_parser = parse_values)]
    grid: Option<Values>,
    /// Also run a Monte Carlo check with this many samples (reported on stderr).
    #[arg(long)]
    monte_carlo: Option<usize>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct KernelArgs {
    #[arg(long, default_value = "height")]
    symbol: SymbolChoice,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', default_value = "100,200,400,800")]
    k_list: Vec<usize>,
    /// Points of the Fibonacci grid used for the positivity scan.
    #[arg(long, default_value_t = 500)]
    grid: usize,
    /// Fit point in the chart, `re,im` (repeatable); defaults depend on the symbol.
    #[arg(long, value_parser = parse_chart, allow_hyphen_values = true)]
    point: Vec<[f64; 2]>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 50)]
    k: usize,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    lambda: f64,
    /// Directory for CSV dumps of every matrix.
    #[arg(long)]
    dump_dir: Option<PathBuf>,
}

#[derive(Debug, Clone)]
struct Values(Vec<f64>);

fn parse_values(s: &str) -> Result<Values, String> {
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, steps] => {
            let (a, b) = (num(a)?, num(b)?);
            let steps: usize = steps.trim().parse().map_err(|e| format!("{steps:?}: {e}"))?;
            match steps {
                0 => Err("steps must be positive".into()),
                1 => Ok(Values(vec![a])),
                _ => Ok(Values(
                    (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect(),
                )),
            }
        }
        [list] => list.split(',').map(num).collect::<Result<_, _>>().map(Values),
        _ => Err(format!("expected a value, a comma list or start:end:steps, got {s:?}")),
    }
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|_| format!("expected {N} comma-separated numbers, got {s:?}"))
}

fn parse_sphere(s: &str) -> Result<[f64; 3], String> {
    parse_floats(s)
}

fn parse_chart(s: &str) -> Result<[f64; 2], String> {
    parse_floats(s)
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::from_json_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = common.symbol {
        cfg.symbol = v;
    }
    if let Some(v) = common.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = common.k {
        cfg.k = v;
    }
    if let Some(v) = common.n_trials {
        cfg.n_trials = v;
    }
    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    if common.out.is_some() {
        cfg.out = common.out.clone();
    }
    Ok(cfg)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => std::io::stdout().write_all(text.as_bytes()).context("writing to stdout"),
    }
}

fn dump_operator(cfg: &ExperimentConfig, path: Option<&Path>) -> Result<()> {
    if let Some(path) = path {
        cfg.operator(cfg.k)?.write_csv(path)?;
    }
    Ok(())
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    let mut centers: Vec<CenterSpec> = args.center_sphere.iter().map(|&s| CenterSpec::Sphere { sphere: s }).collect();
    centers.extend(args.center.iter().map(|&[re, im]| CenterSpec::Chart { re, im }));
    if !centers.is_empty() {
        cfg.centers = centers;
    }
    if let Some(Values(r)) = args.r {
        cfg.r_values = r;
    }
    if args.plot.is_some() {
        cfg.plot = args.plot;
    }
    cfg.validate()?;
    dump_operator(&cfg, args.common.dump_matrix.as_deref())?;
    let exec = Execution::from_threads(cfg.threads);
    let reports = with_threads(cfg.threads, || simulate(&cfg, exec))?;
    emit(cfg.out.as_deref(), &simulation_csv(&reports))?;
    if let Some(plot) = &cfg.plot {
        write_plot(plot, &reports, &cfg.symbol_function())?;
    }
    Ok(())
}

fn run_reconstruct(args: ReconstructArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(g) = args.grid {
        cfg.grid = g;
    }
    if let Some(s) = args.square {
        cfg.square = s;
    }
    let r = match (args.r, &args.common.config) {
        (Some(r), _) => r,
        (None, Some(_)) => *cfg.r_values.first().context("config has no r_values")?,
        (None, None) => FRAC_1_SQRT_2,
    };
    cfg.r_values = vec![r];
    dump_operator(&cfg, args.common.dump_matrix.as_deref())?;
    let exec = Execution::from_threads(cfg.threads);
    let report = with_threads(cfg.threads, || reconstruct_grid(&cfg, r, exec))?;
    emit(cfg.out.as_deref(), &grid_csv(&report))?;
    let mask = report.on_zero_mask();
    let on = mask.iter().filter(|&&m| m).count();
    eprintln!(
        "{} of {} cells above tau = {:.6}",
        on,
        mask.len(),
        report.tau
    );
    if cfg.symbol != SymbolChoice::Identity {
        let curve = curve_cells(&cfg.symbol_function(), cfg.grid, cfg.square);
        let score = score_against_curve(&mask, &curve, cfg.grid);
        eprintln!(
            "recall on curve cells {:.4} ({} cells), false positives away from the curve {:.4} ({} cells)",
            score.recall, score.curve_cells, score.false_positive_rate, score.far_cells
        );
    }
    Ok(())
}

fn run_constants(args: ConstantsArgs) -> Result<()> {
    let radii = match args.grid.or(args.r) {
        Some(Values(r)) => r,
        None => vec![1.0],
    };
    let mut out = String::from("n,R,closed_form,quadrature,hypergeom,discrepancy\n");
    for &n in &args.n.0 {
        if n < 1.0 || n.fract() != 0.0 {
            bail!("dimension n must be a positive integer, got {n}");
        }
        let n = n as usize;
        for &r in &radii {
            let c = evaluate(n, r).with_context(|| format!("n = {n}, R = {r}"))?;
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?}",
                c.n, c.r, c.closed_form, c.quadrature, c.hypergeom, c.max_discrepancy
            )?;
            if let Some(samples) = args.monte_carlo {
                let mc = i_n_monte_carlo(n, r, samples, RngSpec::new(args.seed, 0), Execution::Parallel)?;
                eprintln!(
                    "n={n} R={r}: Monte Carlo {:.8} ± {:.2e} vs closed form / 2 = {:.8}",
                    mc.value,
                    mc.std_error,
                    c.closed_form / 2.0
                );
            }
        }
    }
    emit(args.out.as_deref(), &out)
}

fn run_kernel(args: KernelArgs) -> Result<()> {
    let lambda = args.lambda;
    let (symbol, factory): (Symbol, Box<dyn Fn(usize) -> bt_zeros::Result<_> + Sync>) = match args.symbol {
        SymbolChoice::Height => (Symbol::height(), Box::new(|k| Ok(op_height(k)))),
        SymbolChoice::Xy => (Symbol::xy(lambda), Box::new(move |k| op_xy_lambda(k, lambda))),
        SymbolChoice::Identity => (Symbol::identity(), Box::new(|k| Ok(op_identity(k)))),
    };
    let points: Vec<ChartPoint> = if args.point.is_empty() {
        match args.symbol {
            SymbolChoice::Xy => {
                // a point of x1·x2 = λ on the equator, and the south pole
                let a = 0.5 * (2.0 * lambda).asin();
                vec![
                    ChartPoint::from_sphere(SpherePoint::new(a.cos(), a.sin(), 0.0)?),
                    ChartPoint::origin(),
                ]
            }
            _ => vec![ChartPoint::new(1.0, 0.0), ChartPoint::origin()],
        }
    } else {
        args.point.iter().map(|&[re, im]| ChartPoint::new(re, im)).collect()
    };
    let mut out = String::from("symbol,x_re,x_im,f_squared,b0_est,b1_est,c_est,residual,k_list\n");
    with_threads(args.threads, || -> Result<()> {
        let exec = Execution::from_threads(args.threads);
        for &z in &points {
            let fit = expansion_fit(&factory, &symbol, z, &args.k_list)?;
            let zc = z.finite().context("fit points must be finite")?;
            let ks: Vec<String> = fit.k_list.iter().map(|k| k.to_string()).collect();
            writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
                symbol.name(),
                zc.re,
                zc.im,
                fit.f_squared,
                fit.b0_est,
                fit.b1_est,
                fit.c_est,
                fit.residual,
                ks.join(" ")
            )?;
        }
        let grid = fibonacci_sphere(args.grid.max(1));
        for &k in &args.k_list {
            let min = positivity_scan(&factory(k)?, &grid, exec)?;
            eprintln!("positivity k={k}: min B_k(x,x) over {} points = {min:e}", grid.len());
        }
        Ok(())
    })?;
    emit(args.out.as_deref(), &out)
}

fn run_verify(args: VerifyArgs) -> Result<()> {
    let k = args.k;
    let report = verify(k, args.lambda)?;
    println!("k = {}", report.k);
    println!("identity vs quadrature (max entry): {:e}", report.identity_vs_quadrature);
    println!("height vs quadrature (max entry): {:e}", report.height_vs_quadrature);
    println!("x1 self-adjointness defect: {:e}", report.x1_self_adjoint_defect);
    println!("x2 self-adjointness defect: {:e}", report.x2_self_adjoint_defect);
    println!(
        "x1^2 + x2^2 + x3^2 - Id spectral radius: {:e} (2/(k+2) = {:e})",
        report.sum_of_squares_defect,
        2.0 / (k as f64 + 2.0)
    );
    println!("xy self-adjointness defect: {:e}", report.xy_self_adjoint_defect);
    println!("xy closed form vs T(x1)T(x2) - lambda (max entry): {:e}", report.xy_vs_product);
    println!("xy spectral radius: {}", report.xy_spectral_radius);
    println!("height spectral radius: {}", report.height_spectral_radius);
    if let Some(dir) = args.dump_dir {
        std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let write = |name: &str, op: &bt_zeros::toeplitz::OperatorMatrix| op.write_csv(&dir.join(name));
        write("identity.csv", &op_identity(k))?;
        write("height.csv", &op_height(k))?;
        write("x1.csv", &*op_x1(k)?)?;
        write("x2.csv", &*op_x2(k)?)?;
        write("xy.csv", &op_xy_lambda(k, args.lambda)?)?;
        write("xy_product.csv", &op_xy_product(k, args.lambda)?)?;
        write("identity_quadrature.csv", &op_from_symbol_quadrature(k, &Symbol::identity())?)?;
        write("height_quadrature.csv", &op_from_symbol_quadrature(k, &Symbol::height())?)?;
        eprintln!("matrices written to {}", dir.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate(a) => run_simulate(a),
        Command::Reconstruct(a) => run_reconstruct(a),
        Command::Constants(a) => run_constants(a),
        Command::KernelCheck(a) => run_kernel(a),
        Command::VerifyToeplitz(a) => run_verify(a),
    }
}
