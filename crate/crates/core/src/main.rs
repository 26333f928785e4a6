//! `collardiff` command-line front end.
//!
//! Exit status: 0 on success, 2 for invalid input or usage, 3 when a
//! quadrature failed to converge. Output is assembled in memory and written
//! only once the whole command has succeeded.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde_json::{json, Value};

use collardiff::collar::{delta0_margin, CollarParams, DEFAULT_DELTA0};
use collardiff::cusp::{default_radius, DEFAULT_K_MIN};
use collardiff::io;
use collardiff::laurent::{LaurentQD, SubCollar};
use collardiff::output::{Format, Row, Status, SweepReport};
use collardiff::quadrature::Tolerance;
use collardiff::sweep::{self, decay_normalization, CoefficientLaw, SweepConfig};
use collardiff::topology::degeneration_dims;
use collardiff::{Error, Result};

#[derive(Parser, Debug)]
#[command(
    name = "collardiff",
    version,
    about = "Collar geometry, Laurent quadratic differentials and degeneration experiments"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Group,
}

#[derive(Args, Debug)]
struct Global {
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to FILE instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_abs: f64,
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol_rel: f64,
    /// Laurent truncation `|n| <= n_max`.
    #[arg(long, global = true, default_value_t = 32)]
    n_max: u32,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Group {
    /// Collar geometry.
    #[command(subcommand)]
    Collar(CollarCmd),
    /// Differentials on a single collar and degeneration sweeps.
    #[command(subcommand)]
    Qd(QdCmd),
    /// Multi-collar spaces of differentials.
    #[command(subcommand)]
    Space(SpaceCmd),
    /// Dimension bookkeeping under pinching.
    #[command(subcommand)]
    Topology(TopologyCmd),
    /// Germs at punctures.
    #[command(subcommand)]
    Cusp(CuspCmd),
}

#[derive(Subcommand, Debug)]
enum CollarCmd {
    /// Half-length, conformal factors, thin windows and areas.
    Info {
        #[arg(long)]
        ell: f64,
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_DELTA0)]
        delta0: f64,
    },
}

#[derive(Args, Debug)]
struct Grid {
    /// Collar lengths (default: 25 log-spaced from 1e-4 to 1).
    #[arg(long, value_delimiter = ',')]
    ells: Vec<f64>,
    /// Thin-part radii (default: 16 evenly spaced from 0.05 to 0.8).
    #[arg(long, value_delimiter = ',')]
    deltas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_DELTA0)]
    delta0: f64,
}

#[derive(Subcommand, Debug)]
enum QdCmd {
    /// Norms of one differential given by its Laurent coefficients.
    Norms {
        #[arg(long)]
        coeffs: String,
        #[arg(long)]
        ell: f64,
        /// Treat coefficients as `b_n e^{|n| X}` instead of `b_n`.
        #[arg(long)]
        scaled: bool,
        #[arg(long, value_delimiter = ',', default_value = "0.4")]
        delta: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4")]
        p: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_DELTA0)]
        delta0: f64,
    },
    /// Thin-part supremum of random normalised zero-principal differentials.
    DecaySweep {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = CoefficientLaw::Gaussian)]
        law: CoefficientLaw,
    },
    /// Thin mass of the principal mode.
    PrincipalMass {
        #[command(flatten)]
        grid: Grid,
    },
    /// Thin norms of `b0 dw^2` along a sequence of collar lengths.
    BijCheck {
        #[command(flatten)]
        grid: Grid,
        /// One `{re, im}` per collar length.
        #[arg(long, conflicts_with = "b0_power", required_unless_present = "b0_power")]
        b0: Option<String>,
        /// Use `b0 = ell^P`.
        #[arg(long)]
        b0_power: Option<f64>,
    },
    /// Thin `L^p` norms, `p` in {1, 2, 4, inf}, of the decay-sweep draws.
    LpVanishing {
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value_t = 64)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = CoefficientLaw::Gaussian)]
        law: CoefficientLaw,
    },
}

#[derive(Subcommand, Debug)]
enum SpaceCmd {
    /// Orthogonal projection onto the zero-principal subspace (or the span).
    Project {
        #[arg(long)]
        space: String,
        #[arg(long)]
        psi: String,
        /// Project onto the whole span instead of the zero-principal subspace.
        #[arg(long)]
        span: bool,
    },
    /// Thin-part decay of the zero-principal subspace.
    WReport {
        #[arg(long)]
        space: String,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4")]
        deltas: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        samples: usize,
    },
}

#[derive(Subcommand, Debug)]
enum TopologyCmd {
    /// Dimension of integrable holomorphic quadratic differentials.
    Dim {
        #[arg(long)]
        topology: String,
    },
    /// Dimensions after each move of a pinch script.
    Pinch {
        #[arg(long)]
        topology: String,
        #[arg(long)]
        moves: String,
    },
}

#[derive(Subcommand, Debug)]
enum CuspCmd {
    /// Pole order, integrability and boundedness of a germ.
    Classify {
        #[arg(long)]
        germ: String,
        #[arg(long, default_value_t = DEFAULT_K_MIN, allow_negative_numbers = true)]
        k_min: i32,
        #[arg(long)]
        radius: Option<f64>,
    },
}

/// JSON inputs are read from a file path, or taken inline when the argument
/// starts with `[` or `{`.
fn read_json_arg(arg: &str) -> Result<String> {
    let trimmed = arg.trim_start();
    if trimmed.starts_with('[') || trimmed.starts_with('{') {
        return Ok(arg.to_owned());
    }
    std::fs::read_to_string(arg).map_err(|e| Error::Input(format!("cannot read {arg}: {e}")))
}

fn sweep_config(g: &Global, grid: &Grid) -> Result<SweepConfig> {
    let mut cfg = SweepConfig {
        delta0: grid.delta0,
        n_max: g.n_max,
        seed: g.seed,
        tol: Tolerance::new(g.tol_abs, g.tol_rel)?,
        ..SweepConfig::default()
    };
    if !grid.ells.is_empty() {
        cfg.ell_grid = grid.ells.clone();
    }
    if !grid.deltas.is_empty() {
        cfg.delta_grid = grid.deltas.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Rendered command output plus whether some quadrature failed.
struct Output {
    text: String,
    numerical_failure: bool,
}

impl Output {
    fn ok(text: String) -> Self {
        Output {
            text,
            numerical_failure: false,
        }
    }

    fn report(report: &SweepReport, format: Format) -> Result<Self> {
        Ok(Output {
            text: report.render(format)?,
            numerical_failure: report.rows.iter().any(|r| r.status == Status::NonConverged),
        })
    }
}

fn csv_table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let fail = |e: csv::Error| Error::Input(format!("csv encoding failed: {e}"));
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        w.flush()
            .map_err(|e| Error::Input(format!("csv encoding failed: {e}")))?;
    }
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}

fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialise");
    s.push('\n');
    s
}

fn collar_info(g: &Global, ell: f64, deltas: &[f64], delta0: f64) -> Result<Output> {
    let collar = CollarParams::new(ell)?;
    let x = collar.half_length();
    let mut rows = vec![
        Row::summary("half_length", x),
        Row::summary("area", collar.area()),
        Row::summary("conformal_factor_core", collar.conformal_factor(0.0)?),
        Row::summary("conformal_factor_end", collar.conformal_factor(x)?),
        Row::summary("delta0_margin", delta0_margin(delta0, &[ell])?),
    ];
    for r in rows.iter_mut() {
        r.ell = Some(ell);
    }
    let deltas = if deltas.is_empty() {
        vec![delta0]
    } else {
        deltas.to_vec()
    };
    for delta in deltas {
        let window = collar.thin_boundary(delta)?;
        if window.is_empty() {
            for name in ["thin_boundary", "thin_area"] {
                rows.push(Row::empty_thin(ell, delta, name));
            }
            continue;
        }
        rows.push(Row::ok(ell, delta, "thin_boundary", window.x_delta, None));
        rows.push(Row::ok(ell, delta, "thin_area", collar.thin_area(delta)?, None));
        rows.push(Row::ok(
            ell,
            delta,
            "thin_area_bound",
            collar.thin_area_bound(delta)?,
            None,
        ));
        rows.push(Row::ok(
            ell,
            delta,
            "injectivity_at_boundary",
            collar.injectivity_radius(window.x_delta)?,
            None,
        ));
    }
    Output::report(&SweepReport::new(rows), g.format)
}

#[allow(clippy::too_many_arguments)]
fn qd_norms(
    g: &Global,
    coeffs: &str,
    ell: f64,
    scaled: bool,
    deltas: &[f64],
    ps: &[f64],
    delta0: f64,
) -> Result<Output> {
    let collar = CollarParams::new(ell)?;
    let pairs = io::parse_coefficients(&read_json_arg(coeffs)?)?;
    let q = if scaled {
        LaurentQD::from_scaled(collar, g.n_max, pairs)?
    } else {
        LaurentQD::from_coeffs(collar, g.n_max, pairs)?
    };
    let tol = Tolerance::new(g.tol_abs, g.tol_rel)?;
    let full = SubCollar::full(&collar);
    let with_ell = |mut r: Row| {
        r.ell = Some(ell);
        r
    };
    let mut rows = vec![
        with_ell(Row::summary("principal_abs", q.principal_part().norm())),
        with_ell(Row::summary("l2_full", q.l2_norm(full))),
        with_ell(Row::summary("l2_thick_delta0", q.thick_l2_norm(delta0)?)),
    ];
    for &p in ps {
        let name = format!("lp_full_p{p}");
        match q.lp_norm(full, p, tol) {
            Ok(v) => rows.push(with_ell(Row::summary(&name, v))),
            Err(e) if e.is_numerical() => rows.push(Row {
                delta: None,
                ..Row::non_converged(ell, 0.0, &name)
            }),
            Err(e) => return Err(e),
        }
    }
    if q.principal_part() == Complex64::new(0.0, 0.0) {
        rows.push(with_ell(Row::summary(
            "coefficient_bound",
            q.coefficient_bound_check(delta0)?.constant,
        )));
    }
    for &delta in deltas {
        let sup = q.linf_thin(delta)?;
        if sup.empty {
            rows.push(Row::empty_thin(ell, delta, "l2_thin"));
            rows.push(Row::empty_thin(ell, delta, "linf_thin"));
            continue;
        }
        rows.push(Row::ok(
            ell,
            delta,
            "l2_thin",
            q.l2_norm(SubCollar::thin(&collar, delta)?),
            None,
        ));
        rows.push(Row::ok(
            ell,
            delta,
            "linf_thin",
            sup.value,
            Some(sup.value * decay_normalization(delta)),
        ));
        rows.push(Row::ok(ell, delta, "linf_thin_envelope", sup.envelope, None));
    }
    Output::report(&SweepReport::new(rows), g.format)
}

fn record_json(records: &[io::ModeRecord]) -> Value {
    serde_json::to_value(records).expect("records serialise")
}

fn space_project(g: &Global, space: &str, psi: &str, span: bool) -> Result<Output> {
    let space = io::parse_space(&read_json_arg(space)?, g.n_max)?;
    let psi = io::parse_multi_collar(&read_json_arg(psi)?, space.collars(), g.n_max)?;
    let projected = if span {
        space.project_onto_span(&psi)?
    } else {
        space.project_onto_w(&psi)?
    };
    let parts: Vec<Vec<io::ModeRecord>> = projected.parts().iter().map(io::coefficient_records).collect();
    let text = match g.format {
        Format::Json => json_text(&Value::Array(parts.iter().map(|p| record_json(p)).collect())),
        Format::Csv => {
            let rows: Vec<Vec<String>> = parts
                .iter()
                .enumerate()
                .flat_map(|(j, recs)| {
                    recs.iter().map(move |r| {
                        vec![
                            j.to_string(),
                            r.n.to_string(),
                            format!("{:.16e}", r.re),
                            format!("{:.16e}", r.im),
                        ]
                    })
                })
                .collect();
            csv_table(&["collar", "n", "re", "im"], &rows)?
        }
    };
    Ok(Output::ok(text))
}

fn space_w_report(g: &Global, space: &str, deltas: &[f64], samples: usize) -> Result<Output> {
    let space = io::parse_space(&read_json_arg(space)?, g.n_max)?;
    let rows = space
        .w_decay_report(deltas, samples, g.seed)?
        .into_iter()
        .map(|r| Row {
            ell: None,
            delta: Some(r.delta),
            statistic: "w_linf_ratio".into(),
            value: Some(if r.empty { 0.0 } else { r.ratio }),
            normalized: (!r.empty).then_some(r.normalized),
            status: if r.empty { Status::EmptyThin } else { Status::Ok },
        })
        .collect();
    Output::report(&SweepReport::new(rows), g.format)
}

fn topology_dim(g: &Global, topology: &str) -> Result<Output> {
    let t = io::parse_topology(&read_json_arg(topology)?)?;
    let d = t.hol_dimension();
    Ok(Output::ok(match g.format {
        Format::Csv => format!("{d}\n"),
        Format::Json => json_text(&json!({
            "hol_dimension": d,
            "max_short_geodesics": t.max_short_geodesics(),
        })),
    }))
}

fn topology_pinch(g: &Global, topology: &str, moves: &str) -> Result<Output> {
    let t = io::parse_topology(&read_json_arg(topology)?)?;
    let moves = io::parse_moves(&read_json_arg(moves)?)?;
    let dims = degeneration_dims(&t, &moves)?;
    let start = t.hol_dimension();
    let text = match g.format {
        Format::Csv => {
            let rows: Vec<Vec<String>> = std::iter::once(start)
                .chain(dims)
                .enumerate()
                .map(|(i, d)| vec![i.to_string(), d.to_string()])
                .collect();
            csv_table(&["step", "hol_dimension"], &rows)?
        }
        Format::Json => json_text(&json!({ "start": start, "dims": dims })),
    };
    Ok(Output::ok(text))
}

fn cusp_classify(g: &Global, germ: &str, k_min: i32, radius: Option<f64>) -> Result<Output> {
    let germ = io::parse_germ(&read_json_arg(germ)?, k_min, radius.unwrap_or_else(default_radius))?;
    let tol = Tolerance::new(g.tol_abs, g.tol_rel)?;
    let class = germ.classify()?;
    let bound = germ.is_bounded()?;
    let l1 = germ.l1_norm(tol)?;
    let slope = if class.integrable {
        None
    } else {
        Some(germ.divergence_slope(tol)?)
    };
    let num = |x: Option<f64>| match x {
        Some(v) if v.is_infinite() => "inf".to_owned(),
        Some(v) => format!("{v:.16e}"),
        None => String::new(),
    };
    let text = match g.format {
        Format::Csv => csv_table(
            &[
                "pole_order",
                "integrable",
                "bounded",
                "simple_pole_or_better",
                "l1_norm",
                "sup_density",
                "divergence_slope",
            ],
            &[vec![
                class.pole_order.to_string(),
                class.integrable.to_string(),
                class.bounded.to_string(),
                class.simple_pole_or_better.to_string(),
                num(Some(l1)),
                num(bound.sup),
                num(slope),
            ]],
        )?,
        // +inf has no JSON literal; a null norm means divergence
        Format::Json => json_text(&json!({
            "pole_order": class.pole_order,
            "integrable": class.integrable,
            "bounded": class.bounded,
            "simple_pole_or_better": class.simple_pole_or_better,
            "l1_norm": l1.is_finite().then_some(l1),
            "sup_density": bound.sup,
            "divergence_slope": slope,
        })),
    };
    Ok(Output::ok(text))
}

fn run(cli: &Cli) -> Result<Output> {
    let g = &cli.global;
    match &cli.command {
        Group::Collar(CollarCmd::Info { ell, delta, delta0 }) => collar_info(g, *ell, delta, *delta0),
        Group::Qd(cmd) => match cmd {
            QdCmd::Norms {
                coeffs,
                ell,
                scaled,
                delta,
                p,
                delta0,
            } => qd_norms(g, coeffs, *ell, *scaled, delta, p, *delta0),
            QdCmd::DecaySweep { grid, trials, law } => {
                let cfg = SweepConfig {
                    trials: *trials,
                    law: *law,
                    ..sweep_config(g, grid)?
                };
                Output::report(&sweep::decay_sweep(&cfg)?, g.format)
            }
            QdCmd::PrincipalMass { grid } => {
                Output::report(&sweep::principal_mass_sweep(&sweep_config(g, grid)?)?, g.format)
            }
            QdCmd::BijCheck { grid, b0, b0_power } => {
                let cfg = sweep_config(g, grid)?;
                let seq = match (b0, b0_power) {
                    (Some(text), _) => io::parse_complex_list(&read_json_arg(text)?)?,
                    (None, Some(power)) => cfg
                        .ell_grid
                        .iter()
                        .map(|&l| Complex64::new(l.powf(*power), 0.0))
                        .collect(),
                    (None, None) => unreachable!("clap requires one of --b0 and --b0-power"),
                };
                Output::report(&sweep::bij_normalization_check(&cfg, &seq)?, g.format)
            }
            QdCmd::LpVanishing { grid, trials, law } => {
                let cfg = SweepConfig {
                    trials: *trials,
                    law: *law,
                    ..sweep_config(g, grid)?
                };
                Output::report(&sweep::lp_vanishing_sweep(&cfg)?, g.format)
            }
        },
        Group::Space(SpaceCmd::Project { space, psi, span }) => space_project(g, space, psi, *span),
        Group::Space(SpaceCmd::WReport { space, deltas, samples }) => space_w_report(g, space, deltas, *samples),
        Group::Topology(TopologyCmd::Dim { topology }) => topology_dim(g, topology),
        Group::Topology(TopologyCmd::Pinch { topology, moves }) => topology_pinch(g, topology, moves),
        Group::Cusp(CuspCmd::Classify { germ, k_min, radius }) => cusp_classify(g, germ, *k_min, *radius),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Error::Input(format!("cannot write output: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.global.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = run(&cli).and_then(|output| emit(&cli.global.out, &output.text).map(|_| output));
    match result {
        Ok(output) if output.numerical_failure => {
            eprintln!("error: some quadratures did not converge; affected rows are marked non-converged");
            ExitCode::from(3)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
