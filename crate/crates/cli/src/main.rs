//! Command-line front end: rate reports, omniscience rate regions, the
//! random-binning simulator, and a reproduction table for the worked
//! examples. Parties are 0-indexed everywhere, matching the library.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ghzdist::bases::LocalBases;
use ghzdist::binning::{run_omniscience, SimConfig};
use ghzdist::io::{load_instruments, load_pmf, load_state};
use ghzdist::measurement::{apply_instruments, measure_joint_pure, LocalInstrument, Povm};
use ghzdist::pmf::JointPmf;
use ghzdist::rates::{
    combing_rate, cr_rate_from_pmf, entropy_upper_bound, epr_capacity, ghz_rate_cq,
    ghz_rate_vc, ghz_type_rate, omniscience_lift, optimize_bases, standard_report, svw_rate,
    GhzTypeRate, OptimizeMethod, RateEntry,
};
use ghzdist::region::{build_region_classical, build_region_cq, minimize_sum, RateRegion};
use ghzdist::state::{CMatrix, PureState};
use ghzdist::states::{build_named_state, NamedState};
use ghzdist::Error as CoreError;

const EXIT_INPUT: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "ghzdist", version, about = "Multiparty CR and GHZ distillation rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the standard rate report for a state.
    Rates {
        /// Named state (w3, ghz3, antisym3, flower4, epr) or a *.state.json path.
        #[arg(long)]
        state: String,
        /// Instrument file (*.instr.json) for the cq rate.
        #[arg(long, conflicts_with = "measure")]
        instr: Option<PathBuf>,
        /// Measurement for the projective rate; only "computational".
        #[arg(long, default_value = "computational")]
        measure: String,
        /// Party measured for the tripartite chi decomposition.
        #[arg(long, default_value_t = 0)]
        svw_party: usize,
        /// Search measurement bases for a better projective rate.
        #[arg(long)]
        optimize: bool,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 2)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here (the text table goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build an omniscience rate region and its minimizing vertex.
    Region {
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value_t = Mode::Classical)]
        mode: Mode,
        /// Instrument file for cq mode (default: computational measurements).
        #[arg(long)]
        instr: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the random-binning omniscience simulator.
    Simulate {
        /// Named state (its computational pmf) or a *.pmf.json path.
        #[arg(long)]
        pmf: String,
        /// Comma-separated bits per symbol, one entry per party.
        #[arg(long)]
        rates: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.2)]
        delta: f64,
        /// Write the JSON result here (the CSV row goes to stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the worked-example table from scratch.
    Examples {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Classical,
    Cq,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }
}

impl From<CoreError> for Failure {
    fn from(e: CoreError) -> Failure {
        let code = match &e {
            CoreError::Lp(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Rates {
            state,
            instr,
            measure,
            svw_party,
            optimize,
            restarts,
            iterations,
            seed,
            out,
        } => cmd_rates(
            &state, instr.as_deref(), &measure, svw_party, optimize, restarts, iterations, seed,
            out.as_deref(),
        ),
        Command::Region {
            state,
            mode,
            instr,
            out,
        } => cmd_region(&state, mode, instr.as_deref(), out.as_deref()),
        Command::Simulate {
            pmf,
            rates,
            n,
            trials,
            seed,
            delta,
            out,
        } => cmd_simulate(&pmf, &rates, n, trials, seed, delta, out.as_deref()),
        Command::Examples { out } => cmd_examples(out.as_deref()),
    }
}

fn resolve_state(spec: &str) -> Result<(String, PureState), Failure> {
    let path = Path::new(spec);
    if path.exists() {
        let psi = load_state(path)?;
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        return Ok((id, psi));
    }
    let named = NamedState::parse(spec)
        .map_err(|_| Failure::input(format!("unknown state {spec:?} (not a name or a file)")))?;
    Ok((spec.to_ascii_lowercase(), build_named_state(&named)?))
}

fn write_out(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    if let Some(p) = path {
        std::fs::write(p, contents).map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_rates(
    state: &str,
    instr: Option<&Path>,
    measure: &str,
    svw_party: usize,
    optimize: bool,
    restarts: usize,
    iterations: usize,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    if measure != "computational" {
        return Err(Failure::input(format!(
            "unsupported --measure {measure:?}; only \"computational\""
        )));
    }
    let (id, psi) = resolve_state(state)?;
    let instruments = match instr {
        Some(p) => Some(load_instruments(p, psi.layout())?),
        None => None,
    };
    let mut report = standard_report(
        &id,
        &psi,
        &LocalBases::Computational,
        instruments.as_deref(),
        svw_party,
    )?;
    if optimize {
        let (_, best) = optimize_bases(&psi, OptimizeMethod::Vc, restarts, iterations, seed)?;
        report.entries.push(RateEntry {
            name: "vc_optimized".into(),
            value: best,
            witness: Some(serde_json::json!({
                "restarts": restarts,
                "iterations": iterations,
                "seed": seed,
            })),
            notes: "best projective rate found by basis search".into(),
        });
    }
    report.check_sanity().map_err(|e| Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    })?;
    print!("{}", report.text_table());
    let json = serde_json::to_string_pretty(&report).map_err(internal)? + "\n";
    write_out(out, &json)
}

fn internal(e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_INTERNAL,
        message: e.to_string(),
    }
}

fn cmd_region(
    state: &str,
    mode: Mode,
    instr: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let (id, psi) = resolve_state(state)?;
    let region: RateRegion = match mode {
        Mode::Classical => {
            let povms: Vec<Povm> = psi
                .layout()
                .dims()
                .iter()
                .map(|&d| Povm::computational(d))
                .collect();
            build_region_classical(&measure_joint_pure(&psi, &povms)?)?
        }
        Mode::Cq => {
            let instruments = match instr {
                Some(p) => load_instruments(p, psi.layout())?,
                None => (0..psi.layout().parties())
                    .map(|p| LocalInstrument::computational(p, psi.layout().dim(p)))
                    .collect(),
            };
            build_region_cq(&apply_instruments(&psi, &instruments)?)?
        }
    };
    let solution = minimize_sum(&region)?;
    println!("state: {id}");
    for c in &region.constraints {
        let decoder = match c.decoder {
            ghzdist::region::ConstraintSource::Classical => "classical".to_string(),
            ghzdist::region::ConstraintSource::Decoder(j) => format!("decoder {j}"),
        };
        println!(
            "sum R{:?} >= {:.6}  [{decoder}]",
            c.subset,
            ghzdist::rates::display_bits(c.bound)
        );
    }
    println!("minimum total rate: {:.6}", solution.objective);
    println!(
        "vertex: [{}]",
        solution
            .rates
            .iter()
            .map(|r| format!("{r:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "state": id,
        "region": region,
        "solution": solution,
    }))
    .map_err(internal)?
        + "\n";
    write_out(out, &json)
}

fn resolve_pmf(spec: &str) -> Result<(String, JointPmf), Failure> {
    let path = Path::new(spec);
    if path.exists() {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| spec.to_string());
        return Ok((id, load_pmf(path)?));
    }
    let named = NamedState::parse(spec)
        .map_err(|_| Failure::input(format!("unknown pmf {spec:?} (not a name or a file)")))?;
    let psi = build_named_state(&named)?;
    let povms: Vec<Povm> = psi
        .layout()
        .dims()
        .iter()
        .map(|&d| Povm::computational(d))
        .collect();
    Ok((spec.to_ascii_lowercase(), measure_joint_pure(&psi, &povms)?))
}

fn cmd_simulate(
    pmf_spec: &str,
    rates_spec: &str,
    n: usize,
    trials: usize,
    seed: u64,
    delta: f64,
    out: Option<&Path>,
) -> Result<(), Failure> {
    let (id, pmf) = resolve_pmf(pmf_spec)?;
    let rates: Vec<f64> = rates_spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Failure::input(format!("bad rate entry {s:?} in --rates")))
        })
        .collect::<Result<_, _>>()?;
    let cfg = SimConfig {
        pmf,
        rates,
        n,
        trials,
        delta,
        seed,
    };
    let result = run_omniscience(&cfg)?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record([
            "pmf_id",
            "rates",
            "n",
            "trials",
            "seed",
            "error",
            "err_atypical",
            "err_nocand",
            "err_ambig",
            "tv_distance",
        ])
        .map_err(internal)?;
    writer
        .write_record([
            id.clone(),
            cfg.rates
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(","),
            n.to_string(),
            trials.to_string(),
            seed.to_string(),
            result.error_rate.to_string(),
            result.err_atypical.to_string(),
            result.err_no_candidate.to_string(),
            result.err_ambiguous.to_string(),
            result
                .extraction
                .tv_distance
                .map(|t| t.to_string())
                .unwrap_or_default(),
        ])
        .map_err(internal)?;
    let csv_bytes = writer.into_inner().map_err(internal)?;
    std::io::stdout().write_all(&csv_bytes).map_err(internal)?;

    let json = serde_json::to_string_pretty(&serde_json::json!({
        "pmf_id": id,
        "config": {
            "rates": cfg.rates,
            "n": n,
            "trials": trials,
            "seed": seed,
            "delta": delta,
        },
        "result": result,
    }))
    .map_err(internal)?
        + "\n";
    write_out(out, &json)
}

fn cmd_examples(out: Option<&Path>) -> Result<(), Failure> {
    let mut rows: Vec<(String, String, f64)> = Vec::new();
    let mut push = |example: &str, quantity: &str, value: f64| {
        rows.push((example.into(), quantity.into(), value));
    };

    // three-qubit W state
    {
        let psi = build_named_state(&NamedState::W3)?;
        let povms: Vec<Povm> = vec![Povm::computational(2); 3];
        let pmf = measure_joint_pure(&psi, &povms)?;
        push("w3", "marginal_entropy", psi.marginal_entropy(&[0])?);
        push("w3", "H(X0|X1X2)", pmf.conditional_entropy(&[0], &[1, 2])?);
        push("w3", "H(X0X1|X2)", pmf.conditional_entropy(&[0, 1], &[2])?);
        push("w3", "combing", combing_rate(&psi)?);
        let (vc, sol) = cr_rate_from_pmf(&pmf)?;
        push("w3", "rco_classical", sol.objective);
        push("w3", "vc", vc);
        let svw = svw_rate(&psi, 0, &LocalBases::Computational)?;
        push("w3", "svw_chi", svw.chi);
        push("w3", "svw_ebar", svw.ebar);
        push("w3", "svw_fused", svw.fused_total);
        push("w3", "upper_bound", entropy_upper_bound(&psi)?.value);
        push("w3", "epr_any_pair", epr_capacity(&psi, 0, 1)?);
        let lift = omniscience_lift(&psi, &LocalBases::Computational)?;
        if let GhzTypeRate::Rate(r) = ghz_type_rate(&lift, &LocalBases::Computational)? {
            push("w3", "concentration_yield", r);
        }
    }

    // antisymmetric three-qutrit state
    {
        let psi = build_named_state(&NamedState::Antisym3)?;
        let povms: Vec<Povm> = vec![Povm::computational(3); 3];
        let pmf = measure_joint_pure(&psi, &povms)?;
        push("antisym3", "H(X0X1|X2)", pmf.conditional_entropy(&[0, 1], &[2])?);
        push("antisym3", "combing", combing_rate(&psi)?);
        let (vc, sol) = cr_rate_from_pmf(&pmf)?;
        push("antisym3", "rco_classical", sol.objective);
        push("antisym3", "vc", vc);
        let svw = svw_rate(&psi, 0, &LocalBases::Computational)?;
        push("antisym3", "svw_chi", svw.chi);
        push("antisym3", "svw_ebar", svw.ebar);
        push("antisym3", "svw_fused", svw.fused_total);
        push("antisym3", "upper_bound", entropy_upper_bound(&psi)?.value);
    }

    // GHZ reference points
    {
        let g3 = build_named_state(&NamedState::Ghz(3))?;
        push("ghz3", "combing", combing_rate(&g3)?);
        push("ghz3", "vc", ghz_rate_vc(&g3, &LocalBases::Computational)?);
        push("ghz3", "upper_bound", entropy_upper_bound(&g3)?.value);
        let g4 = build_named_state(&NamedState::Ghz(4))?;
        push("ghz4", "combing", combing_rate(&g4)?);
    }

    // flower state at d = 4
    {
        let d = 4usize;
        let psi = build_named_state(&NamedState::Flower(d))?;
        let upper = entropy_upper_bound(&psi)?;
        push("flower4", "upper_bound", upper.value);
        push("flower4", "S(C)", psi.marginal_entropy(&[2])?);
        push("flower4", "epr_A_C", epr_capacity(&psi, 0, 2)?);

        let instruments = flower_j_measurement(d);
        let cq = ghz_rate_cq(&psi, &instruments)?;
        push("flower4", "thm4_rate", cq.rate);
        let omega = apply_instruments(&psi, &instruments)?;
        let region = build_region_cq(&omega)?;
        let binding = region
            .constraints
            .iter()
            .find(|c| c.subset == vec![1])
            .map(|c| c.bound)
            .unwrap_or(f64::NAN);
        push("flower4", "binding_R1", binding);
        for res in &cq.residuals {
            let j = res.tuple[1];
            let mut us: Vec<CMatrix> = res
                .state
                .layout()
                .dims()
                .iter()
                .map(|&dd| CMatrix::identity(dd, dd))
                .collect();
            if j == 1 {
                us[2] = ghzdist::bases::fourier_matrix(d);
            }
            if let GhzTypeRate::Rate(r) =
                ghz_type_rate(&res.state, &LocalBases::Unitaries(us))?
            {
                push("flower4", &format!("residual_yield_j{j}"), r);
            }
        }
    }

    let mut table = String::new();
    let w1 = rows.iter().map(|r| r.0.len()).max().unwrap_or(8).max("example".len());
    let w2 = rows.iter().map(|r| r.1.len()).max().unwrap_or(8).max("quantity".len());
    table.push_str(&format!("{:w1$}  {:w2$}  {:>12}\n", "example", "quantity", "bits"));
    for (e, q, v) in &rows {
        table.push_str(&format!(
            "{e:w1$}  {q:w2$}  {:>12.6}\n",
            ghzdist::rates::display_bits(*v)
        ));
    }
    print!("{table}");

    let json_rows: Vec<serde_json::Value> = rows
        .iter()
        .map(|(e, q, v)| serde_json::json!({ "example": e, "quantity": q, "value": v }))
        .collect();
    let json = serde_json::to_string_pretty(&json_rows).map_err(internal)? + "\n";
    write_out(out, &json)
}

/// B measures the j digit of its register (projecting onto even/odd basis
/// columns), A and C idle: the instrument of the flower-state protocol.
fn flower_j_measurement(d: usize) -> Vec<LocalInstrument> {
    vec![
        LocalInstrument::trivial(0, 2 * d),
        LocalInstrument::residue_measurement(1, 2 * d, 2).expect("2 divides 2d"),
        LocalInstrument::trivial(2, d),
    ]
}
