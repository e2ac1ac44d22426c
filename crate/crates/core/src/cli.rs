//! Command-line front end: `analyze` a problem file, `fixtures generate`
//! example generators, `simulate` the decay towards the conditional
//! expectation.
//!
//! Exit codes: 0 success, 2 structural/numerical error, 3 parse error.
//! The random seed defaults to `0x5EED`; the `QMS_SEED` environment
//! variable overrides the default (and the problem file), `--seed`
//! overrides both.

use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decoherence::conditional_expectation;
use crate::dfspaces::decoherence_free_subalgebra;
use crate::error::{Error, Result};
use crate::gksl::{predual_lindbladian, GkslGenerator};
use crate::linalg::{c, cr, matexp, trace_norm, unvec, vec_mat, CMatrix, Tolerances};
use crate::models::{
    build_circulant, build_generic, circulant_tridiagonal_m0, CirculantSpec, GenericSpec, HMode,
};
use crate::report::{analyze, render_text, ProblemFile, ProblemOptions, DEFAULT_SEED};
use crate::states::{block_tau, recurrent_projection};
use crate::structure::{atomic_decomposition, extract_block_operators};

#[derive(Parser)]
#[command(name = "qms", about = "Structure analysis of GKSL (Lindblad) generators", version)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full structure analysis on a problem file
    Analyze(AnalyzeArgs),
    /// Generate example problem files
    Fixtures {
        #[command(subcommand)]
        action: FixturesAction,
    },
    /// Print the decay of a basis state towards its conditional expectation
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Problem file (JSON)
    file: PathBuf,
    /// Write the full machine-readable report to this path
    #[arg(long)]
    json: Option<PathBuf>,
    /// Override the relative rank tolerance
    #[arg(long = "tol-rank")]
    tol_rank: Option<f64>,
    /// Override the residual tolerance for verified identities
    #[arg(long = "tol-residual")]
    tol_residual: Option<f64>,
    /// Random seed (overrides QMS_SEED and the problem file)
    #[arg(long)]
    seed: Option<u64>,
    /// When no faithful invariant state exists, also analyze the system
    /// reduced to the recurrent subspace
    #[arg(long = "reduce-pr")]
    reduce_pr: bool,
}

#[derive(Subcommand)]
enum FixturesAction {
    /// Generate one of the built-in generator families
    Generate {
        #[command(subcommand)]
        family: FixtureFamily,
    },
}

#[derive(Subcommand)]
enum FixtureFamily {
    /// Diagonal Hamiltonian with rank-one classical-jump noise operators
    Generic {
        /// Number of basis states
        #[arg(long)]
        states: usize,
        /// Jump rate in the form m:j:rate (repeatable)
        #[arg(long = "rate")]
        rates: Vec<String>,
        /// Comma-separated Hamiltonian levels (defaults to zeros)
        #[arg(long)]
        kappa: Option<String>,
        /// Output path (defaults to standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cyclic-shift noise operators z1·J^n, z2·J^{−n}
    Circulant {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        /// z1 as re,im
        #[arg(long, default_value = "1,0")]
        z1: String,
        /// z2 as re,im
        #[arg(long, default_value = "1,0")]
        z2: String,
        /// Add the cyclic tridiagonal Hamiltonian on the m factor
        #[arg(long = "with-m0")]
        with_m0: bool,
        /// Output path (defaults to standard output)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Problem file (JSON)
    file: PathBuf,
    /// Final time of the decay table
    #[arg(long)]
    t: f64,
    /// Index of the initial basis state |k⟩⟨k|
    #[arg(long = "state-index")]
    state_index: usize,
    /// Random seed (overrides QMS_SEED and the problem file)
    #[arg(long)]
    seed: Option<u64>,
}

fn env_seed() -> Option<u64> {
    let raw = std::env::var("QMS_SEED").ok()?;
    let raw = raw.trim();
    let parsed = if let Some(hex) = raw.strip_prefix("0x") {
        u64::from_str_radix(hex, 16)
    } else {
        raw.parse()
    };
    parsed.ok()
}

fn resolve_seed(flag: Option<u64>, file: &ProblemFile) -> u64 {
    flag.or_else(env_seed)
        .or_else(|| file.options.as_ref().and_then(|o| o.seed))
        .unwrap_or(DEFAULT_SEED)
}

fn load_problem(path: &PathBuf) -> Result<ProblemFile> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    ProblemFile::parse(&text)
}

fn parse_complex(text: &str) -> Result<crate::linalg::C64> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(Error::Parse(format!("expected re,im but got `{text}`")));
    }
    let re: f64 = parts[0].trim().parse().map_err(|_| Error::Parse(format!("bad real part `{}`", parts[0])))?;
    let im: f64 = parts[1].trim().parse().map_err(|_| Error::Parse(format!("bad imaginary part `{}`", parts[1])))?;
    Ok(c(re, im))
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let pf = load_problem(&args.file)?;
    let mut tol = pf.tolerances(&Tolerances::default());
    if let Some(x) = args.tol_rank {
        tol.rank_rel = x;
    }
    if let Some(x) = args.tol_residual {
        tol.residual = x;
    }
    tol.validate()?;
    let seed = resolve_seed(args.seed, &pf);
    let gen = pf.to_generator(&tol)?;
    let report = analyze(&gen, seed, &tol, args.reduce_pr)?;
    print!("{}", render_text(&report));
    if let Some(path) = &args.json {
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::numerical(format!("serialization failed: {e}")))?;
        fs::write(path, json)
            .map_err(|e| Error::numerical(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}

fn write_fixture(gen: &GkslGenerator, out: Option<&PathBuf>) -> Result<()> {
    let pf = ProblemFile::from_generator(
        gen,
        Some(ProblemOptions {
            seed: None,
            tolerances: None,
            t_samples: None,
        }),
    );
    let json = serde_json::to_string_pretty(&pf)
        .map_err(|e| Error::numerical(format!("serialization failed: {e}")))?;
    match out {
        Some(path) => fs::write(path, json)
            .map_err(|e| Error::numerical(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn cmd_fixtures(family: &FixtureFamily) -> Result<()> {
    let tol = Tolerances::default();
    match family {
        FixtureFamily::Generic {
            states,
            rates,
            kappa,
            out,
        } => {
            let n = *states;
            let mut gamma = vec![vec![0.0; n]; n];
            for spec in rates {
                let parts: Vec<&str> = spec.split(':').collect();
                if parts.len() != 3 {
                    return Err(Error::Parse(format!("expected m:j:rate but got `{spec}`")));
                }
                let m: usize = parts[0].parse().map_err(|_| Error::Parse(format!("bad state index `{}`", parts[0])))?;
                let j: usize = parts[1].parse().map_err(|_| Error::Parse(format!("bad state index `{}`", parts[1])))?;
                let r: f64 = parts[2].parse().map_err(|_| Error::Parse(format!("bad rate `{}`", parts[2])))?;
                if m >= n || j >= n {
                    return Err(Error::Parse(format!("state index out of range in `{spec}`")));
                }
                gamma[m][j] = r;
            }
            let kappa = match kappa {
                Some(text) => text
                    .split(',')
                    .map(|v| v.trim().parse().map_err(|_| Error::Parse(format!("bad level `{v}`"))))
                    .collect::<Result<Vec<f64>>>()?,
                None => vec![0.0; n],
            };
            let spec = GenericSpec {
                n_states: n,
                gamma,
                kappa,
            };
            write_fixture(&build_generic(&spec, &tol)?, out.as_ref())
        }
        FixtureFamily::Circulant {
            d,
            n,
            z1,
            z2,
            with_m0,
            out,
        } => {
            let mut spec = CirculantSpec {
                d: *d,
                n: *n,
                z1: parse_complex(z1)?,
                z2: parse_complex(z2)?,
                h_mode: HMode::Zero,
            };
            if *with_m0 {
                spec.h_mode = HMode::Factor {
                    k_op: CMatrix::zeros(spec.dim_k(), spec.dim_k()),
                    m0: circulant_tridiagonal_m0(&spec),
                };
            }
            write_fixture(&build_circulant(&spec, &tol)?, out.as_ref())
        }
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Result<()> {
    let pf = load_problem(&args.file)?;
    let tol = pf.tolerances(&Tolerances::default());
    let seed = resolve_seed(args.seed, &pf);
    let gen = pf.to_generator(&tol)?;
    let d = gen.dim;
    if args.state_index >= d {
        return Err(Error::domain(format!(
            "state index {} out of range for dimension {d}",
            args.state_index
        )));
    }
    if args.t < 0.0 {
        return Err(Error::domain("final time must be nonnegative"));
    }
    let rec = recurrent_projection(&gen, &tol)?;
    if !rec.faithful_exists {
        return Err(Error::structural(
            "simulate requires a faithful invariant state (analyze with --reduce-pr first)",
            0.0,
        ));
    }
    let nt = decoherence_free_subalgebra(&gen, &tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dec = atomic_decomposition(&nt, &mut rng, &tol)?;
    let dec = extract_block_operators(&gen, dec, &tol)?;
    let taus: Vec<CMatrix> = (0..dec.blocks.len())
        .map(|i| block_tau(&dec, i, &rec.rho_bar, &tol))
        .collect::<Result<_>>()?;
    let e_sup = conditional_expectation(&gen, &dec, &taus, &tol)?;

    let mut rho0 = CMatrix::zeros(d, d);
    rho0[(args.state_index, args.state_index)] = cr(1.0);
    // predual conditional expectation: the limit the evolved state decays to
    let target = unvec(&(e_sup.mat.adjoint() * vec_mat(&rho0)), d, d);
    let pre = predual_lindbladian(&gen);

    let times: Vec<f64> = match pf.options.as_ref().and_then(|o| o.t_samples.clone()) {
        Some(ts) => ts,
        None => (0..=10).map(|i| args.t * i as f64 / 10.0).collect(),
    };
    println!("{:>12}  {:>14}", "t", "trace distance");
    for &t in &times {
        if t < 0.0 {
            return Err(Error::domain("time samples must be nonnegative"));
        }
        let rho_t = unvec(&(matexp(&pre.mat, t)? * vec_mat(&rho0)), d, d);
        println!("{t:>12.4}  {:>14.6e}", 0.5 * trace_norm(&(&rho_t - &target)));
    }
    Ok(())
}

/// Entry point used by the thin binary: returns the process exit code.
pub fn run() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .try_init()
        .ok();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Analyze(args) => cmd_analyze(args),
        Command::Fixtures { action } => match action {
            FixturesAction::Generate { family } => cmd_fixtures(family),
        },
        Command::Simulate(args) => cmd_simulate(args),
    };
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Parse(_) => 3,
                _ => 2,
            }
        }
    }
}
