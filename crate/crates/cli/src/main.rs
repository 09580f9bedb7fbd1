//! `segpoint`: NNCT segregation/association tests, simulation experiments,
//! and second-order diagnostics from the command line.

mod experiment;
mod io;
mod report;
mod svg;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use sha2::{Digest, Sha256};

use segpoint_core::mc::{
    add_one_pvalue, count_exceedances, null_statistic_samples, observed_statistics,
    randomization_statistic_samples, standard_kinds, McConfig,
};
use segpoint_core::moments::{cell_moments, MomentModel};
use segpoint_core::nnct::{build_nnct, Nnct};
use segpoint_core::pattern::PatternSpec;
use segpoint_core::secondorder::{
    default_pcf_bandwidth, diggle_d, envelope, l_function, pair_correlation, ripley_k_biv,
    ripley_k_uni, CurveWithEnvelope, DistanceGrid,
};
use segpoint_core::stat_tests::{
    base_class_specific, dixon_overall, nn_class_specific, TestKind, TestReport,
};
use segpoint_core::{build_nn_graph, MarkedPointSet, RectWindow};

use report::{AnalysisReport, Provenance};

/// CLI failure: input problems exit with 1, numerical breakdowns with 2.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
}

impl CliError {
    pub fn input(message: String) -> Self {
        CliError::Input(message)
    }

    pub fn from_core(e: segpoint_core::Error) -> Self {
        use segpoint_core::Error as E;
        match e {
            E::NumericalFailure(_) | E::NotSymmetric { .. } | E::SingularFit(_) => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }

    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Numerical(m) => m,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "segpoint",
    version,
    about = "Nearest-neighbor contingency table tests of spatial segregation and association"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the NNCT test battery on a point file or a stored NNCT.
    Analyze {
        /// CSV file with header `x,y,label`.
        #[arg(long)]
        points: Option<PathBuf>,
        /// JSON file with class names, counts, Q, and R.
        #[arg(long)]
        nnct: Option<PathBuf>,
        /// Observation window `xmin,xmax,ymin,ymax` (default: bounding box
        /// for point input, unit square for NNCT input).
        #[arg(long)]
        window: Option<String>,
        /// Monte Carlo replicates for simulation/randomization p-values.
        #[arg(long)]
        mc: Option<usize>,
        /// Master seed for Monte Carlo p-values.
        #[arg(long, default_value_t = 20080807)]
        seed: u64,
        /// Tests to run: `all` or a comma list like `overall,base:0,nn:case`.
        #[arg(long, default_value = "all")]
        tests: String,
        /// Output format: text, csv, or json.
        #[arg(long, default_value = "text")]
        format: String,
        /// Print the NNCT with row/column percentage panels.
        #[arg(long)]
        show_table: bool,
    },
    /// Run a size or power experiment from a config file or preset.
    Simulate {
        /// TOML experiment config.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Bundled preset: table2, table3, table-3cl-sizes, power-seg-2cl,
        /// power-assoc-2cl, power-3cl.
        #[arg(long)]
        preset: Option<String>,
        /// Use the full 10000-replicate version of a preset.
        #[arg(long)]
        full: bool,
        /// Output CSV path (default: results.csv next to the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count (results are identical for any value).
        #[arg(long)]
        workers: Option<usize>,
        /// Print the effective config as TOML and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Second-order diagnostics: Ripley K/L, bivariate K, case/control K
    /// difference, pair correlation.
    Secondorder {
        /// CSV file with header `x,y,label`.
        #[arg(long)]
        points: PathBuf,
        /// Which curve: k, l, kij, d, or pcf.
        #[arg(long)]
        which: String,
        /// Envelope simulations (relabelings for `d`).
        #[arg(long, default_value_t = 99)]
        sims: usize,
        #[arg(long, default_value_t = 20080807)]
        seed: u64,
        /// Observation window `xmin,xmax,ymin,ymax` (default bounding box).
        #[arg(long)]
        window: Option<String>,
        /// First class (name or index); default pools all points for
        /// univariate curves. Case class for `d`.
        #[arg(long)]
        class_a: Option<String>,
        /// Second class for `kij`; control class for `d`.
        #[arg(long)]
        class_b: Option<String>,
        /// Number of grid distances.
        #[arg(long, default_value_t = 512)]
        grid: usize,
        /// Largest grid distance (default: shorter window side / 4).
        #[arg(long)]
        max_t: Option<f64>,
        /// Pair-correlation smoothing bandwidth (default 0.15/sqrt(intensity)).
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Output CSV path (default stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write an SVG plot.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage problems are input errors (exit 1); help and version exit 0.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {}", e.message());
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze {
            points,
            nnct,
            window,
            mc,
            seed,
            tests,
            format,
            show_table,
        } => analyze(
            points.as_deref(),
            nnct.as_deref(),
            window.as_deref(),
            mc,
            seed,
            &tests,
            &format,
            show_table,
        ),
        Command::Simulate {
            config,
            preset,
            full,
            out,
            workers,
            dump_config,
        } => simulate(
            config.as_deref(),
            preset.as_deref(),
            full,
            out,
            workers,
            dump_config,
        ),
        Command::Secondorder {
            points,
            which,
            sims,
            seed,
            window,
            class_a,
            class_b,
            grid,
            max_t,
            bandwidth,
            out,
            svg,
        } => secondorder(SecondOrderArgs {
            points,
            which,
            sims,
            seed,
            window,
            class_a,
            class_b,
            grid,
            max_t,
            bandwidth,
            out,
            svg,
        }),
    }
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

fn parse_test_selection(
    text: &str,
    class_names: &[String],
    q: usize,
) -> Result<Vec<TestKind>, CliError> {
    if text.trim() == "all" {
        // report order: overall first, then base tests, then NN tests
        let mut kinds = vec![TestKind::Overall];
        kinds.extend((0..q).map(TestKind::Base));
        kinds.extend((0..q).map(TestKind::NnClass));
        return Ok(kinds);
    }
    let resolve = |s: &str| -> Result<usize, CliError> {
        if let Ok(idx) = s.parse::<usize>() {
            if idx < q {
                return Ok(idx);
            }
            return Err(CliError::input(format!(
                "class index {idx} out of range for {q} classes"
            )));
        }
        class_names
            .iter()
            .position(|c| c == s)
            .ok_or_else(|| CliError::input(format!("unknown class `{s}`")))
    };
    let mut kinds = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part == "overall" {
            kinds.push(TestKind::Overall);
        } else if let Some(rest) = part.strip_prefix("base:") {
            kinds.push(TestKind::Base(resolve(rest.trim())?));
        } else if let Some(rest) = part.strip_prefix("nn:") {
            kinds.push(TestKind::NnClass(resolve(rest.trim())?));
        } else {
            return Err(CliError::input(format!(
                "unknown test `{part}` (expected overall, base:<class>, nn:<class>)"
            )));
        }
    }
    if kinds.is_empty() {
        return Err(CliError::input("no tests selected".into()));
    }
    Ok(kinds)
}

fn compute_reports(
    nnct: &Nnct,
    moments: &MomentModel,
    kinds: &[TestKind],
) -> Result<Vec<TestReport>, CliError> {
    kinds
        .iter()
        .map(|&k| {
            match k {
                TestKind::Overall => dixon_overall(nnct, moments),
                TestKind::Base(i) => base_class_specific(nnct, moments, i),
                TestKind::NnClass(j) => nn_class_specific(nnct, moments, j),
            }
            .map_err(CliError::from_core)
        })
        .collect()
}

fn file_hash(path: &Path, extra: &str) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    hasher.update(extra.as_bytes());
    let digest = hasher.finalize();
    Ok(digest[..8].iter().map(|b| format!("{b:02x}")).collect())
}

#[allow(clippy::too_many_arguments)]
fn analyze(
    points: Option<&Path>,
    nnct_path: Option<&Path>,
    window: Option<&str>,
    mc: Option<usize>,
    seed: u64,
    tests: &str,
    format: &str,
    show_table: bool,
) -> Result<(), CliError> {
    let window = window.map(io::parse_window).transpose()?;
    let mut notes: Vec<String> = Vec::new();

    let (nnct, moments, class_names, observed, spec_extra) = match (points, nnct_path) {
        (Some(path), None) => {
            let loaded = io::load_points_csv(path, window)?;
            if loaded.class_names.len() < 2 {
                return Err(CliError::input(format!(
                    "{}: only one class present; the tests need at least two",
                    path.display()
                )));
            }
            if loaded.window_defaulted {
                notes.push(
                    "window defaulted to the data bounding box; simulation p-values depend on it"
                        .into(),
                );
            }
            let graph = build_nn_graph(&loaded.pattern);
            let nnct = build_nnct(&loaded.pattern, &graph).map_err(CliError::from_core)?;
            let moments =
                MomentModel::from_graph(&loaded.pattern, &graph).map_err(CliError::from_core)?;
            let hash = file_hash(path, &format!("{window:?}|{tests}|{mc:?}|{seed}"))?;
            (nnct, moments, loaded.class_names, Some(loaded.pattern), hash)
        }
        (None, Some(path)) => {
            let file = io::NnctFile::load(path)?;
            let nnct = Nnct::from_counts(file.counts.clone()).map_err(CliError::from_core)?;
            let sizes: Vec<usize> = nnct.row_sums().iter().map(|&x| x as usize).collect();
            let n: usize = sizes.iter().sum();
            let moments = cell_moments(&sizes, n, file.q, file.r).map_err(CliError::from_core)?;
            if mc.is_some() {
                notes.push(
                    "NNCT input has no coordinates: p_mc simulates CSR in the given window \
                     (unit square by default); p_rand is unavailable"
                        .into(),
                );
            }
            let hash = file_hash(path, &format!("{window:?}|{tests}|{mc:?}|{seed}"))?;
            (nnct, moments, file.classes, None, hash)
        }
        _ => {
            return Err(CliError::input(
                "exactly one of --points or --nnct is required".into(),
            ))
        }
    };

    let q = nnct.num_classes();
    let kinds = parse_test_selection(tests, &class_names, q)?;
    let mut reports = compute_reports(&nnct, &moments, &kinds)?;

    if let Some(m) = mc {
        let cfg = McConfig::new(m, seed);
        let sizes: Vec<usize> = nnct.row_sums().iter().map(|&x| x as usize).collect();
        let win = observed
            .as_ref()
            .map(|p| *p.window())
            .or(window)
            .unwrap_or_else(RectWindow::unit_square);
        let null_samples =
            null_statistic_samples(&sizes, win, &kinds, &cfg).map_err(CliError::from_core)?;
        for (idx, rep) in reports.iter_mut().enumerate() {
            let column: Vec<f64> = null_samples.iter().map(|row| row[idx]).collect();
            rep.p_mc = Some(add_one_pvalue(
                count_exceedances(&column, rep.statistic),
                m,
            ));
        }
        if let Some(pts) = &observed {
            let observed_stats =
                observed_statistics(pts, &kinds).map_err(CliError::from_core)?;
            let rand_samples =
                randomization_statistic_samples(pts, &kinds, &cfg).map_err(CliError::from_core)?;
            for (idx, rep) in reports.iter_mut().enumerate() {
                let column: Vec<f64> = rand_samples.iter().map(|row| row[idx]).collect();
                rep.p_rand = Some(add_one_pvalue(
                    count_exceedances(&column, observed_stats[idx]),
                    m,
                ));
            }
        }
    }

    let provenance = Provenance::new(mc.map(|_| seed), spec_extra);
    let analysis = AnalysisReport::build(provenance, &class_names, &moments, &reports, notes);
    match format {
        "text" => {
            print!("{}", analysis.to_text());
            if show_table {
                println!();
                print!("{}", report::nnct_panels(&nnct, &class_names));
            }
        }
        "csv" => print!("{}", analysis.to_csv()),
        "json" => println!("{}", analysis.to_json()),
        other => {
            return Err(CliError::input(format!(
                "unknown format `{other}` (expected text, csv, json)"
            )))
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

fn simulate(
    config: Option<&Path>,
    preset: Option<&str>,
    full: bool,
    out: Option<PathBuf>,
    workers: Option<usize>,
    dump_config: bool,
) -> Result<(), CliError> {
    let (cfg, default_out) = match (config, preset) {
        (Some(path), None) => (
            experiment::ExperimentConfig::load(path)?,
            path.with_extension("results.csv"),
        ),
        (None, Some(name)) => (
            experiment::preset(name, full)?,
            PathBuf::from(format!("{name}-results.csv")),
        ),
        _ => {
            return Err(CliError::input(
                "exactly one of --config or --preset is required".into(),
            ))
        }
    };
    if dump_config {
        print!(
            "{}",
            toml::to_string_pretty(&cfg).map_err(|e| CliError::input(e.to_string()))?
        );
        return Ok(());
    }
    let out_path = out.unwrap_or(default_out);
    let exp = cfg.validate()?;
    let summary = experiment::run_experiment(&exp, &out_path, workers)?;
    println!(
        "wrote {} ({} rows, {} computed, {} resumed; spec-hash {})",
        out_path.display(),
        summary.rows_total,
        summary.rows_computed,
        summary.rows_skipped,
        summary.spec_hash
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// secondorder
// ---------------------------------------------------------------------------

struct SecondOrderArgs {
    points: PathBuf,
    which: String,
    sims: usize,
    seed: u64,
    window: Option<String>,
    class_a: Option<String>,
    class_b: Option<String>,
    grid: usize,
    max_t: Option<f64>,
    bandwidth: Option<f64>,
    out: Option<PathBuf>,
    svg: Option<PathBuf>,
}

fn resolve_class(
    arg: &Option<String>,
    class_names: &[String],
    context: &str,
) -> Result<Option<usize>, CliError> {
    let Some(text) = arg else { return Ok(None) };
    if let Ok(idx) = text.parse::<usize>() {
        if idx < class_names.len() {
            return Ok(Some(idx));
        }
        return Err(CliError::input(format!(
            "{context}: class index {idx} out of range"
        )));
    }
    class_names
        .iter()
        .position(|c| c == text)
        .map(Some)
        .ok_or_else(|| CliError::input(format!("{context}: unknown class `{text}`")))
}

fn write_curve_csv(
    curve: &CurveWithEnvelope,
    reliable_from: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let mut text = String::new();
    if reliable_from.is_some() {
        text.push_str("t,estimate,lower,upper,reliable\n");
    } else {
        text.push_str("t,estimate,lower,upper\n");
    }
    for (k, &t) in curve.t_values.iter().enumerate() {
        match reliable_from {
            Some(limit) => text.push_str(&format!(
                "{},{},{},{},{}\n",
                t,
                curve.estimate[k],
                curve.lower[k],
                curve.upper[k],
                if t >= limit { "yes" } else { "no" }
            )),
            None => text.push_str(&format!(
                "{},{},{},{}\n",
                t, curve.estimate[k], curve.lower[k], curve.upper[k]
            )),
        }
    }
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn secondorder(args: SecondOrderArgs) -> Result<(), CliError> {
    let window = args.window.as_deref().map(io::parse_window).transpose()?;
    let loaded = io::load_points_csv(&args.points, window)?;
    let pts = &loaded.pattern;
    let win = *pts.window();
    let grid = match args.max_t {
        Some(max_t) if max_t > 0.0 => DistanceGrid::new(
            (1..=args.grid)
                .map(|k| max_t * k as f64 / args.grid as f64)
                .collect(),
        )
        .map_err(CliError::from_core)?,
        Some(bad) => {
            return Err(CliError::input(format!(
                "--max-t must be positive, got {bad}"
            )))
        }
        None => DistanceGrid::default_for(&win, args.grid),
    };
    let class_a = resolve_class(&args.class_a, &loaded.class_names, "--class-a")?;
    let class_b = resolve_class(&args.class_b, &loaded.class_names, "--class-b")?;
    let null_spec = PatternSpec::csr(pts.class_sizes().to_vec(), win, args.seed);

    let select = |p: &MarkedPointSet, class: Option<usize>| match class {
        Some(c) => p.class_points(c),
        None => p.points().to_vec(),
    };

    let (curve, reliable_from, title, reference) = match args.which.as_str() {
        "k" => {
            let f = |p: &MarkedPointSet| ripley_k_uni(&select(p, class_a), &win, &grid);
            let observed = f(pts).map_err(CliError::from_core)?;
            let env =
                envelope(f, &null_spec, &grid, args.sims, observed).map_err(CliError::from_core)?;
            (env, None, "Ripley K(t)".to_string(), None)
        }
        "l" => {
            let f = |p: &MarkedPointSet| -> segpoint_core::Result<Vec<f64>> {
                let k = ripley_k_uni(&select(p, class_a), &win, &grid)?;
                Ok(l_function(&k)
                    .iter()
                    .zip(grid.values())
                    .map(|(l, t)| l - t)
                    .collect())
            };
            let observed = f(pts).map_err(CliError::from_core)?;
            let env =
                envelope(f, &null_spec, &grid, args.sims, observed).map_err(CliError::from_core)?;
            (env, None, "L(t) - t".to_string(), Some(0.0))
        }
        "kij" => {
            let (a, b) = match (class_a, class_b) {
                (Some(a), Some(b)) if a != b => (a, b),
                _ => {
                    return Err(CliError::input(
                        "kij needs two distinct classes via --class-a and --class-b".into(),
                    ))
                }
            };
            let f = |p: &MarkedPointSet| {
                ripley_k_biv(&p.class_points(a), &p.class_points(b), &win, &grid)
            };
            let observed = f(pts).map_err(CliError::from_core)?;
            let env =
                envelope(f, &null_spec, &grid, args.sims, observed).map_err(CliError::from_core)?;
            (
                env,
                None,
                format!(
                    "bivariate K: {} vs {}",
                    loaded.class_names[a], loaded.class_names[b]
                ),
                None,
            )
        }
        "d" => {
            let (a, b) = match (class_a, class_b) {
                (Some(a), Some(b)) if a != b => (a, b),
                _ => {
                    return Err(CliError::input(
                        "d needs a case class (--class-a) and a control class (--class-b)".into(),
                    ))
                }
            };
            let env = diggle_d(pts, a, b, &grid, args.sims, args.seed)
                .map_err(CliError::from_core)?;
            (
                env,
                None,
                format!(
                    "D(t) = K_{}(t) - K_{}(t)",
                    loaded.class_names[a], loaded.class_names[b]
                ),
                Some(0.0),
            )
        }
        "pcf" => {
            let selected = select(pts, class_a);
            let bw = args
                .bandwidth
                .unwrap_or_else(|| default_pcf_bandwidth(selected.len(), &win));
            let f = |p: &MarkedPointSet| -> segpoint_core::Result<Vec<f64>> {
                let k = ripley_k_uni(&select(p, class_a), &win, &grid)?;
                pair_correlation(&k, &grid, bw)
            };
            let observed = f(pts).map_err(CliError::from_core)?;
            let env =
                envelope(f, &null_spec, &grid, args.sims, observed).map_err(CliError::from_core)?;
            // distances below the mean NN distance are flagged unreliable
            let graph = build_nn_graph(pts);
            (
                env,
                Some(graph.mean_nn_distance()),
                "pair correlation g(t)".to_string(),
                Some(1.0),
            )
        }
        other => {
            return Err(CliError::input(format!(
                "unknown curve `{other}` (expected k, l, kij, d, pcf)"
            )))
        }
    };

    write_curve_csv(&curve, reliable_from, args.out.as_deref())?;
    if let Some(svg_path) = &args.svg {
        let body = svg::curve_svg(&curve, &title, reference);
        std::fs::write(svg_path, body)
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", svg_path.display())))?;
    }
    Ok(())
}
