//! Command-line surface: theory ingestion from config files, resource
//! diagrams, bank-curve/tangent/rate computation, first-law balances, the
//! interconversion protocol, and the property-check suites.
//!
//! Exit codes are a stable contract: 0 success, 2 config error, 3 geometric
//! guard (endpoint anchor, non-convex curve), 4 first-law breach, 5 suite
//! failure.

mod report;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand_chacha::ChaCha8Rng;

use multires_core::{
    back_action_scaling, bank_vs_relent_check, default_e1_grid, export, first_law_check,
    is_bank_state, property_suite_broken_demo, property_suite_f, property_suite_m, resource_pair,
    run_interconversion, tangency_certificate, tangent_coeffs, trace_bank_curve,
    transformation_cost, BatteryLedger, Error as CoreError, SampleSpace, TheoryConfig, TheorySpec,
    Verdict,
};
use report::RunReport;

const EXIT_CONFIG: i32 = 2;
const EXIT_GEOMETRY: i32 = 3;
const EXIT_FIRST_LAW: i32 = 4;
const EXIT_SUITE: i32 = 5;

#[derive(Parser)]
#[command(
    name = "multires",
    about = "Multi-resource state toolkit: diagrams, bank curves, exchange rates, first-law checks, and interconversion protocol runs",
    after_help = "The MULTIRES_MAX_DIM environment variable overrides the composite-dimension cap (default 4096)."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Theory config file (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for emitted files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Seed for all sampling; echoed in the report.
    #[arg(long)]
    seed: Option<u64>,
    /// Sample count override.
    #[arg(long)]
    samples: Option<usize>,
    /// Tolerance override.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Sampled resource diagram with invariant-set markers (CSV + SVG).
    Diagram {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Trace the bank curve, compute tangent coefficients and the rate.
    Bank {
        #[command(flatten)]
        common: CommonArgs,
        /// Anchor: a point index into the traced curve, or a parameter value.
        #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
        anchor: String,
        /// Number of curve grid points.
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Balance alpha dW1 + beta dW2 against the bank-monotone change.
    Firstlaw {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, default_value = "0.5", allow_hyphen_values = true)]
        anchor: String,
        /// Initial main-system state (JSON state file).
        #[arg(long)]
        rho: PathBuf,
        /// Final main-system state (JSON state file).
        #[arg(long)]
        sigma: PathBuf,
        /// Resource-1 battery change; generated self-consistently if omitted.
        #[arg(long, allow_hyphen_values = true)]
        dw1: Option<f64>,
        /// Resource-2 battery change; generated self-consistently if omitted.
        #[arg(long, allow_hyphen_values = true)]
        dw2: Option<f64>,
    },
    /// Run the interconversion protocol or its back-action scaling table.
    Protocol {
        /// Bank copies for a single run.
        #[arg(long)]
        n: Option<u64>,
        /// Comma-separated bank sizes for a scaling table.
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<u64>>,
        /// Initial singlet weight of the bank, in (1/2, 1).
        #[arg(long)]
        p0: f64,
        /// Singlets moved to the entanglement battery (negative reverses).
        #[arg(long, allow_hyphen_values = true)]
        r: i64,
        /// Ground energy.
        #[arg(long = "E0", alias = "e0", default_value_t = 0.0, allow_hyphen_values = true)]
        e0: f64,
        /// Excited energy.
        #[arg(long = "E1", alias = "e1", default_value_t = 1.0, allow_hyphen_values = true)]
        e1: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run property suites; nonzero exit iff a hard check fails.
    Check {
        #[command(flatten)]
        common: CommonArgs,
        /// Suite selector: m, f, bank, bank-vs-relent, all, broken-demo.
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(report) => {
            print!("{report}");
            0
        }
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    };
    std::process::exit(code);
}

struct CmdError {
    code: i32,
    message: String,
}

impl CmdError {
    fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }
    fn geometry(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_GEOMETRY,
            message: msg.into(),
        }
    }
}

impl From<CoreError> for CmdError {
    fn from(e: CoreError) -> Self {
        let code = match &e {
            CoreError::EndpointAnchor
            | CoreError::NonConvexNeighborhood(_)
            | CoreError::CurveInvariant(_)
            | CoreError::DegenerateCrossProduct(_) => EXIT_GEOMETRY,
            _ => EXIT_CONFIG,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::config(format!("io error: {e}"))
    }
}

fn run(cli: Cli) -> Result<RunReport, CmdError> {
    match cli.command {
        Command::Diagram { common } => cmd_diagram(common),
        Command::Bank {
            common,
            anchor,
            grid,
        } => cmd_bank(common, &anchor, grid),
        Command::Firstlaw {
            common,
            anchor,
            rho,
            sigma,
            dw1,
            dw2,
        } => cmd_firstlaw(common, &anchor, &rho, &sigma, dw1, dw2),
        Command::Protocol {
            n,
            n_list,
            p0,
            r,
            e0,
            e1,
            out,
        } => cmd_protocol(n, n_list, p0, r, e0, e1, &out),
        Command::Check { common, suite } => cmd_check(common, &suite),
    }
}

struct Loaded {
    theory: TheorySpec,
    config: TheoryConfig,
    digest: String,
    seed: u64,
    samples: usize,
    tol: f64,
}

fn load(common: &CommonArgs) -> Result<Loaded, CmdError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CmdError::config(format!("cannot read {}: {e}", common.config.display())))?;
    let digest = report::fnv1a64(text.as_bytes());
    let config = TheoryConfig::from_json(&text).map_err(|e| CmdError::config(e.to_string()))?;
    let theory = config.to_theory().map_err(|e| CmdError::config(e.to_string()))?;
    let solver = config.solver();
    Ok(Loaded {
        theory,
        digest,
        seed: common.seed.unwrap_or(solver.seed),
        samples: common.samples.unwrap_or(solver.samples),
        tol: common.tol.unwrap_or(solver.tol),
        config,
    })
}

fn write_out(dir: &PathBuf, name: &str, contents: &str) -> Result<PathBuf, CmdError> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

fn cmd_diagram(common: CommonArgs) -> Result<RunReport, CmdError> {
    let loaded = load(&common)?;
    let theory = &loaded.theory;
    if theory.state_family.is_none() {
        return Err(CmdError::config(
            "diagram needs a theory with a state family",
        ));
    }
    let mut report = RunReport::new(
        format!("diagram --config {}", common.config.display()),
        &loaded.digest,
        loaded.seed,
    );
    let labels: Vec<&str> = theory.monotones.iter().map(|m| m.label.as_str()).collect();

    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(loaded.seed);
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(loaded.samples);
    for _ in 0..loaded.samples {
        let rho = theory.sample_state(&mut rng);
        let mut row = Vec::with_capacity(labels.len());
        for m in &theory.monotones {
            row.push(m.value(&rho).map_err(CmdError::from)?);
        }
        rows.push(row);
    }
    let csv = export::table_to_csv(&labels, &rows);
    let csv_path = write_out(&common.out, "diagram.csv", &csv)?;
    report.add_output(
        &csv_path,
        format!(
            "{} rows, columns {}, first=({})",
            rows.len(),
            labels.join(","),
            rows.first()
                .map(|r| r
                    .iter()
                    .map(|v| export::fmt_cell(*v))
                    .collect::<Vec<_>>()
                    .join(","))
                .unwrap_or_default()
        ),
    );

    // Two-dimensional SVG projection onto the first two monotones, with the
    // family curve for context and invariant-set markers.
    let scatter: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    let mut series = vec![export::SvgSeries {
        points: scatter,
        kind: export::SeriesKind::Scatter,
        color: "steelblue",
    }];
    if let Some(family) = &theory.state_family {
        if family.params() == 1 {
            let mut pts = Vec::new();
            for i in 0..=100 {
                let (lo, hi) = family.bounds[0];
                let th = lo + (hi - lo) * i as f64 / 100.0;
                let rho = family.build(&[th]);
                let (a, b) = resource_pair(theory, &rho).map_err(CmdError::from)?;
                pts.push((a, b));
            }
            pts.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
            series.push(export::SvgSeries {
                points: pts,
                kind: export::SeriesKind::Line,
                color: "black",
            });
        }
    }
    let mut markers = Vec::new();
    for set in &theory.invariant_sets {
        if let Some(w) = &set.full_rank_witness {
            markers.push(resource_pair(theory, w).map_err(CmdError::from)?);
        }
    }
    if !markers.is_empty() {
        series.push(export::SvgSeries {
            points: markers,
            kind: export::SeriesKind::Marker,
            color: "crimson",
        });
    }
    let svg = export::svg_chart(&series, labels[0], labels[1]);
    let svg_path = write_out(&common.out, "diagram.svg", &svg)?;
    report.add_output(&svg_path, format!("{} bytes", svg.len()));
    report.add_verdict("diagram", true, format!("{} sampled states", rows.len()));
    Ok(report)
}

/// Resolves an anchor given as a curve index ("12") or a family parameter
/// value ("0.9").
fn resolve_anchor(curve: &multires_core::BankCurve, anchor: &str) -> Result<usize, CmdError> {
    if let Ok(idx) = anchor.parse::<usize>() {
        if idx >= curve.points.len() {
            return Err(CmdError::geometry(format!(
                "anchor index {idx} out of range (curve has {} points)",
                curve.points.len()
            )));
        }
        return Ok(idx);
    }
    let value: f64 = anchor
        .parse()
        .map_err(|_| CmdError::config(format!("anchor `{anchor}` is neither index nor value")))?;
    let idx = curve
        .points
        .iter()
        .enumerate()
        .min_by(|a, b| {
            let da = a.1.param.first().map_or(f64::INFINITY, |p| (p - value).abs());
            let db = b.1.param.first().map_or(f64::INFINITY, |p| (p - value).abs());
            da.partial_cmp(&db).unwrap()
        })
        .map(|(i, _)| i)
        .ok_or_else(|| CmdError::geometry("empty curve"))?;
    Ok(idx)
}

fn cmd_bank(common: CommonArgs, anchor: &str, grid: Option<usize>) -> Result<RunReport, CmdError> {
    let loaded = load(&common)?;
    let theory = &loaded.theory;
    let grid_n = grid.unwrap_or(loaded.config.solver().grid).max(3);
    let targets = default_e1_grid(theory, grid_n).map_err(CmdError::from)?;
    let (curve, notes) = trace_bank_curve(theory, &targets).map_err(CmdError::from)?;
    let idx = resolve_anchor(&curve, anchor)?;
    let coeffs = tangent_coeffs(theory, &curve, idx).map_err(CmdError::from)?;

    let mut report = RunReport::new(
        format!("bank --config {} --anchor {anchor}", common.config.display()),
        &loaded.digest,
        loaded.seed,
    );
    for n in notes {
        report.add_note(n);
    }
    let csv = export::curve_to_csv(&curve);
    let csv_path = write_out(&common.out, "curve.csv", &csv)?;
    let first = curve.points.first().unwrap();
    let last = curve.points.last().unwrap();
    report.add_output(
        &csv_path,
        format!(
            "{} rows, first=({},{}), last=({},{})",
            curve.points.len(),
            export::fmt_cell(first.e1),
            export::fmt_cell(first.e2),
            export::fmt_cell(last.e1),
            export::fmt_cell(last.e2)
        ),
    );

    let curve_pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.e1, p.e2)).collect();
    let anchor_pt = (curve.points[idx].e1, curve.points[idx].e2);
    let slope = -coeffs.alpha / coeffs.beta;
    let tangent_pts: Vec<(f64, f64)> = [first.e1, last.e1]
        .iter()
        .map(|&x| (x, anchor_pt.1 + slope * (x - anchor_pt.0)))
        .collect();
    let svg = export::svg_chart(
        &[
            export::SvgSeries {
                points: curve_pts,
                kind: export::SeriesKind::Line,
                color: "black",
            },
            export::SvgSeries {
                points: tangent_pts,
                kind: export::SeriesKind::Line,
                color: "crimson",
            },
            export::SvgSeries {
                points: vec![anchor_pt],
                kind: export::SeriesKind::Marker,
                color: "crimson",
            },
        ],
        &curve.monotone_labels.0,
        &curve.monotone_labels.1,
    );
    let svg_path = write_out(&common.out, "curve.svg", &svg)?;
    report.add_output(&svg_path, format!("{} bytes", svg.len()));

    report.add_kv("anchor_index", format!("{idx}"));
    report.add_kv("anchor_E1", export::fmt_cell(coeffs.anchor.0));
    report.add_kv("anchor_E2", export::fmt_cell(coeffs.anchor.1));
    report.add_kv("alpha", export::fmt_cell(coeffs.alpha));
    report.add_kv("beta", export::fmt_cell(coeffs.beta));
    report.add_kv("gamma", export::fmt_cell(coeffs.gamma));
    match coeffs.rate() {
        multires_core::ExtendedReal::Finite(r) => {
            report.add_kv("rate", export::fmt_cell(r));
            // Natural-log temperature conventions carry a factor ln 2.
            report.add_kv(
                "alpha_natural_units",
                export::fmt_cell(coeffs.alpha * std::f64::consts::LN_2),
            );
        }
        multires_core::ExtendedReal::Infinity => report.add_kv("rate", "inf".into()),
    }
    let min_f = tangency_certificate(theory, &coeffs, loaded.samples, loaded.seed)
        .map_err(CmdError::from)?;
    report.add_verdict(
        "tangency",
        min_f >= -1e-6,
        format!(
            "min f_bank over {} samples = {}",
            loaded.samples,
            export::fmt_cell(min_f)
        ),
    );
    report.add_verdict("curve-invariants", true, "monotone decreasing and convex".into());
    Ok(report)
}

fn read_state(path: &PathBuf) -> Result<multires_core::DensityMatrix, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::config(format!("cannot read {}: {e}", path.display())))?;
    let parsed = state_file::parse(&text).map_err(|e| CmdError::config(format!("{}: {e}", path.display())))?;
    parsed.build().map_err(|e| CmdError::config(e.to_string()))
}

mod state_file {
    //! Minimal state-file model: {"matrix": [[[re,im],...],...],
    //! "subsystem_dims": [..]}, the same matrix literal as theory configs.
    use multires_core::{C64, CMatrix, DensityMatrix};

    pub struct StateFile {
        matrix: Vec<Vec<[f64; 2]>>,
        subsystem_dims: Option<Vec<usize>>,
    }

    pub fn parse(text: &str) -> Result<StateFile, String> {
        let v: serde_json::Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let matrix =
            serde_json::from_value(v.get("matrix").cloned().ok_or("missing `matrix` field")?)
                .map_err(|e| e.to_string())?;
        let subsystem_dims = match v.get("subsystem_dims") {
            None => None,
            Some(d) => Some(serde_json::from_value(d.clone()).map_err(|e| e.to_string())?),
        };
        Ok(StateFile {
            matrix,
            subsystem_dims,
        })
    }

    impl StateFile {
        pub fn build(&self) -> multires_core::Result<DensityMatrix> {
            let n = self.matrix.len();
            let mut m = CMatrix::zeros(n, n);
            for (i, row) in self.matrix.iter().enumerate() {
                for (j, &[re, im]) in row.iter().enumerate() {
                    m[(i, j)] = C64::new(re, im);
                }
            }
            DensityMatrix::new(m, self.subsystem_dims.clone().unwrap_or_else(|| vec![n]))
        }
    }
}

fn cmd_firstlaw(
    common: CommonArgs,
    anchor: &str,
    rho_path: &PathBuf,
    sigma_path: &PathBuf,
    dw1: Option<f64>,
    dw2: Option<f64>,
) -> Result<RunReport, CmdError> {
    let loaded = load(&common)?;
    let theory = &loaded.theory;
    let rho = read_state(rho_path)?;
    let sigma = read_state(sigma_path)?;
    if rho.dim() != theory.dim || sigma.dim() != theory.dim {
        return Err(CmdError::config(format!(
            "states must live on the theory space (dim {})",
            theory.dim
        )));
    }
    let grid_n = loaded.config.solver().grid.max(3);
    let targets = default_e1_grid(theory, grid_n).map_err(CmdError::from)?;
    let (curve, _) = trace_bank_curve(theory, &targets).map_err(CmdError::from)?;
    let idx = resolve_anchor(&curve, anchor)?;
    let coeffs = tangent_coeffs(theory, &curve, idx).map_err(CmdError::from)?;

    // Absent overrides, battery changes come from the monotone differences.
    let dw1 = match dw1 {
        Some(v) => v,
        None => transformation_cost(&theory.monotones[0], &rho, &sigma).map_err(CmdError::from)?,
    };
    let dw2 = match dw2 {
        Some(v) => v,
        None => transformation_cost(&theory.monotones[1], &rho, &sigma).map_err(CmdError::from)?,
    };
    let fl = first_law_check(theory, &coeffs, &rho, &sigma, dw1, dw2).map_err(CmdError::from)?;

    let mut report = RunReport::new(
        format!(
            "firstlaw --config {} --anchor {anchor}",
            common.config.display()
        ),
        &loaded.digest,
        loaded.seed,
    );
    report.add_kv("lhs", export::fmt_cell(fl.lhs));
    report.add_kv("rhs", export::fmt_cell(fl.rhs));
    report.add_kv("residual", export::fmt_cell(fl.residual));
    match fl.rate {
        multires_core::ExtendedReal::Finite(r) => report.add_kv("rate", export::fmt_cell(r)),
        multires_core::ExtendedReal::Infinity => report.add_kv("rate", "inf".into()),
    }
    // Thermodynamic reading: dU = Q - W at temperature 1/alpha.
    if theory.charges.as_ref().map(|c| c.len()) == Some(1) && coeffs.alpha > 1e-12 {
        let h = &theory.charges.as_ref().unwrap()[0];
        let du = multires_core::expectation(&sigma, h).map_err(CmdError::from)?
            - multires_core::expectation(&rho, h).map_err(CmdError::from)?;
        let ds = multires_core::von_neumann_entropy(&sigma)
            - multires_core::von_neumann_entropy(&rho);
        let temp = 1.0 / coeffs.alpha;
        let q = temp * ds;
        let w = q - du;
        report.add_kv("dU", export::fmt_cell(du));
        report.add_kv("dS", export::fmt_cell(ds));
        report.add_kv("T", export::fmt_cell(temp));
        report.add_kv("Q", export::fmt_cell(q));
        report.add_kv("W", export::fmt_cell(w));
        report.add_note("dU = Q - W with Q = T dS".into());
    }
    let pass = fl.residual.abs() <= loaded.tol;
    report.add_verdict(
        "first-law",
        pass,
        format!(
            "|residual| = {} vs tol {}",
            export::fmt_cell(fl.residual.abs()),
            loaded.tol
        ),
    );
    if !pass {
        print!("{report}");
        return Err(CmdError {
            code: EXIT_FIRST_LAW,
            message: format!("first-law residual {} exceeds tolerance", fl.residual),
        });
    }
    Ok(report)
}

fn cmd_protocol(
    n: Option<u64>,
    n_list: Option<Vec<u64>>,
    p0: f64,
    r: i64,
    e0: f64,
    e1: f64,
    out: &PathBuf,
) -> Result<RunReport, CmdError> {
    let mut report = RunReport::new(
        format!("protocol --p0 {p0} --r {r} --e0 {e0} --e1 {e1}"),
        "-",
        0,
    );
    match (n, n_list) {
        (Some(n), None) => {
            let ledger = BatteryLedger::generous(n, r);
            let trace = run_interconversion(n, p0, r, e0, e1, &ledger).map_err(CmdError::from)?;
            let text = trace.render();
            let path = write_out(out, "trace.txt", &text)?;
            report.add_output(&path, format!("{} stages", trace.steps.len()));
            report.add_kv("p0_final", export::fmt_cell(trace.p0_final));
            report.add_kv("dW_W", export::fmt_cell(trace.dw_w));
            report.add_kv("dW_E", export::fmt_cell(trace.dw_e));
            report.add_kv("delta_n", export::fmt_cell(trace.delta_n));
            if trace.dw_e != 0.0 {
                report.add_kv("rate", export::fmt_cell(trace.dw_w / trace.dw_e));
                let asym = -(e1 - e0) / (p0 / (1.0 - p0)).log2();
                report.add_kv("asymptotic_rate", export::fmt_cell(asym));
            }
            report.add_verdict("protocol", true, format!("n = {n}, r = {r}"));
        }
        (None, Some(list)) => {
            let table = back_action_scaling(p0, r, &list, e0, e1).map_err(CmdError::from)?;
            let csv = table.to_csv();
            let path = write_out(out, "scaling.csv", &csv)?;
            report.add_output(&path, format!("{} rows", table.rows.len()));
            report.add_kv("delta_n_slope", export::fmt_cell(table.delta_slope));
            report.add_kv("rate_error_slope", export::fmt_cell(table.rate_error_slope));
            report.add_kv("asymptotic_rate", export::fmt_cell(table.asymptotic_rate));
            report.add_verdict(
                "scaling",
                true,
                format!(
                    "slopes: delta_n {:.3}, rate_error {:.3}",
                    table.delta_slope, table.rate_error_slope
                ),
            );
        }
        _ => {
            return Err(CmdError::config(
                "provide exactly one of --n (single run) or --n-list (scaling)",
            ))
        }
    }
    Ok(report)
}

fn cmd_check(common: CommonArgs, suite: &str) -> Result<RunReport, CmdError> {
    let loaded = load(&common)?;
    let theory = &loaded.theory;
    let mut report = RunReport::new(
        format!("check --config {} --suite {suite}", common.config.display()),
        &loaded.digest,
        loaded.seed,
    );
    let mut failures: Vec<String> = Vec::new();

    fn absorb(
        report: &mut RunReport,
        failures: &mut Vec<String>,
        rec: &multires_core::PropertyReport,
    ) {
        for r in &rec.records {
            report.add_verdict(
                &r.name,
                r.verdict != Verdict::Fail,
                format!(
                    "samples={} worst_margin={:+.3e} {}",
                    r.samples, r.worst_margin, r.note
                ),
            );
            if r.verdict == Verdict::Fail {
                failures.push(format!("{} (margin {:+.3e})", r.name, r.worst_margin));
            }
        }
    }

    let want = |name: &str| suite == "all" || suite == name;
    if suite == "broken-demo" {
        let rec = property_suite_broken_demo(loaded.samples, loaded.seed);
        absorb(&mut report, &mut failures, &rec);
    } else if ["m", "f", "bank", "bank-vs-relent", "all"].contains(&suite) {
        if want("m") {
            let rec =
                property_suite_m(theory, loaded.samples, loaded.seed).map_err(CmdError::from)?;
            absorb(&mut report, &mut failures, &rec);
        }
        if want("f") {
            let rec =
                property_suite_f(theory, loaded.samples, loaded.seed).map_err(CmdError::from)?;
            absorb(&mut report, &mut failures, &rec);
        }
        if want("bank") && theory.resource_count() == 2 && theory.state_family.is_some() {
            run_bank_suite(&loaded, &mut report, &mut failures)?;
        }
        if want("bank-vs-relent") && theory.resource_count() == 2 && theory.state_family.is_some()
        {
            run_bank_relent_suite(&loaded, &mut report, &mut failures)?;
        }
    } else {
        return Err(CmdError::config(format!("unknown suite `{suite}`")));
    }

    if failures.is_empty() {
        Ok(report)
    } else {
        print!("{report}");
        Err(CmdError {
            code: EXIT_SUITE,
            message: format!("suite failures: {}", failures.join("; ")),
        })
    }
}

fn run_bank_suite(
    loaded: &Loaded,
    report: &mut RunReport,
    failures: &mut Vec<String>,
) -> Result<(), CmdError> {
    let theory = &loaded.theory;
    let grid =
        default_e1_grid(theory, loaded.config.solver().grid.max(3)).map_err(CmdError::from)?;
    match trace_bank_curve(theory, &grid) {
        Ok((curve, _)) => {
            report.add_verdict(
                "bank-curve",
                true,
                format!("{} points, invariants hold", curve.points.len()),
            );
            let idx = curve.points.len() / 2;
            match tangent_coeffs(theory, &curve, idx) {
                Ok(coeffs) => {
                    let min_f = tangency_certificate(theory, &coeffs, loaded.samples, loaded.seed)
                        .map_err(CmdError::from)?;
                    let ok = min_f >= -1e-6;
                    report.add_verdict("bank-tangency", ok, format!("min f_bank = {min_f:+.3e}"));
                    if !ok {
                        failures.push(format!("bank-tangency (min {min_f:+.3e})"));
                    }
                    let rate_ok = match coeffs.rate() {
                        multires_core::ExtendedReal::Finite(r) => r < 0.0,
                        multires_core::ExtendedReal::Infinity => true,
                    };
                    report.add_verdict("bank-rate-sign", rate_ok, "rate strictly negative".into());
                    if !rate_ok {
                        failures.push("bank-rate-sign".into());
                    }
                }
                Err(e) => {
                    report.add_verdict("bank-tangent", false, e.to_string());
                    failures.push(format!("bank-tangent ({e})"));
                }
            }
            // The traced witnesses must be Pareto-minimal.
            let probe = &curve.points[curve.points.len() / 3];
            let verdict =
                is_bank_state(theory, &probe.witness, 200, loaded.seed).map_err(CmdError::from)?;
            report.add_verdict("bank-witness-pareto", verdict.is_bank, verdict.note.clone());
            if !verdict.is_bank {
                let digest = verdict
                    .counterexample
                    .map(|c| report::fnv1a64(format!("{:?}", c.entries()).as_bytes()))
                    .unwrap_or_else(|| "-".into());
                failures.push(format!("bank-witness-pareto (counterexample fnv1a:{digest})"));
            }
        }
        Err(e) => {
            report.add_verdict("bank-curve", false, e.to_string());
            failures.push(format!("bank-curve ({e})"));
        }
    }
    Ok(())
}

fn run_bank_relent_suite(
    loaded: &Loaded,
    report: &mut RunReport,
    failures: &mut Vec<String>,
) -> Result<(), CmdError> {
    let theory = &loaded.theory;
    let grid =
        default_e1_grid(theory, loaded.config.solver().grid.max(3)).map_err(CmdError::from)?;
    let (curve, _) = trace_bank_curve(theory, &grid).map_err(CmdError::from)?;
    let idx = curve.points.len() / 2;
    let coeffs = tangent_coeffs(theory, &curve, idx).map_err(CmdError::from)?;
    let witness = curve.points[idx].witness.clone();
    let samples = loaded.samples.min(500);
    use rand::Rng;
    let mut sampler: Box<dyn FnMut(&mut ChaCha8Rng) -> multires_core::DensityMatrix> =
        match theory.sample_space {
            SampleSpace::HilbertSchmidt => {
                let dim = theory.dim;
                Box::new(move |rng: &mut ChaCha8Rng| {
                    multires_core::state::random_density_with(dim, rng)
                })
            }
            SampleSpace::BellDiagonal => Box::new(|rng: &mut ChaCha8Rng| {
                let x = 0.02 + 0.96 * rng.random::<f64>();
                multires_core::bell_diagonal(&[x, 1.0 - x, 0.0, 0.0])
            }),
        };
    let rep = bank_vs_relent_check(theory, &coeffs, &witness, &mut sampler, samples, loaded.seed)
        .map_err(CmdError::from)?;
    let ok = rep.max_rel_deviation <= 1e-6;
    report.add_verdict(
        "bank-vs-relent",
        ok,
        format!(
            "scale c = {}, max relative deviation = {:.3e} over {} samples",
            export::fmt_cell(rep.scale),
            rep.max_rel_deviation,
            rep.samples
        ),
    );
    if !ok {
        failures.push(format!(
            "bank-vs-relent (deviation {:.3e})",
            rep.max_rel_deviation
        ));
    }
    Ok(())
}
