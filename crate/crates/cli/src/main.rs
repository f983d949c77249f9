use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use hmm_ident::identifiability::NStarVariant;
use hmm_ident_cli::casestudy::casestudy;
use hmm_ident_cli::commands::{self, CounterexampleMode, Outcome, SettingArg, EXIT_ERROR};
use hmm_ident_cli::model::ToleranceSpec;
use hmm_ident_cli::report::{envelope, error_envelope};

/// Identifiability analysis for hidden Markov models via Kruskal rank.
#[derive(Parser)]
#[command(name = "hmm-ident", version)]
struct Cli {
    /// Relative rank tolerance (overrides the model file).
    #[arg(long, global = true)]
    tol_rel: Option<f64>,
    /// Absolute rank tolerance (overrides the model file).
    #[arg(long, global = true)]
    tol_abs: Option<f64>,
    /// Print the JSON report instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Identifiability verdict for a model file.
    Analyze {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        setting: SettingArg,
    },
    /// Compare the sequence distributions of two models.
    Equivalence {
        first: PathBuf,
        second: PathBuf,
        #[arg(long, default_value_t = 5)]
        max_len: usize,
        #[arg(long, default_value_t = 1e-10)]
        prob_tol: f64,
    },
    /// Build an equivalent model that is not a relabelling.
    Counterexample {
        model: PathBuf,
        /// `recombination` or `inflate:<states>`.
        #[arg(long, default_value = "recombination")]
        mode: CounterexampleMode,
        #[arg(short = 'o', long)]
        model_out: PathBuf,
        /// Apply a seeded random permutation and scaling (inflation only).
        #[arg(long)]
        relabel_seed: Option<u64>,
    },
    /// Generic identifiability length bound.
    Nstar {
        #[arg(long)]
        variant: NStarVariant,
        #[arg(long)]
        q: usize,
        /// Alphabet size, or a comma list for heterogeneous observers.
        #[arg(long, value_delimiter = ',', required = true)]
        kappa: Vec<usize>,
        #[arg(long)]
        m: Option<usize>,
        /// Check the Vandermonde witness at N*.
        #[arg(long)]
        witness: bool,
    },
    /// Run the built-in SSH case study.
    Casestudy,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Analyze { .. } => "analyze",
            Command::Equivalence { .. } => "equivalence",
            Command::Counterexample { .. } => "counterexample",
            Command::Nstar { .. } => "nstar",
            Command::Casestudy => "casestudy",
        }
    }
}

fn run(cli: &Cli, tol: Option<ToleranceSpec>) -> Result<Outcome> {
    match &cli.command {
        Command::Analyze { model, setting } => commands::analyze(model, *setting, tol),
        Command::Equivalence {
            first,
            second,
            max_len,
            prob_tol,
        } => commands::equivalence(first, second, *max_len, *prob_tol, tol),
        Command::Counterexample {
            model,
            mode,
            model_out,
            relabel_seed,
        } => commands::counterexample(model, *mode, *relabel_seed, model_out, tol),
        Command::Nstar {
            variant,
            q,
            kappa,
            m,
            witness,
        } => commands::nstar(*variant, *q, kappa, *m, *witness),
        Command::Casestudy => casestudy(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tol = (cli.tol_rel.is_some() || cli.tol_abs.is_some()).then_some(ToleranceSpec {
        rel_eps: cli.tol_rel,
        abs_eps: cli.tol_abs,
    });
    let name = cli.command.name();
    let (code, report) = match run(&cli, tol) {
        Ok(o) => {
            if !cli.json {
                print!("{}", o.text);
            }
            (o.code, envelope(name, &o))
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            (EXIT_ERROR, error_envelope(name, &e))
        }
    };
    let rendered = serde_json::to_string_pretty(&report).expect("report serializes");
    if cli.json {
        println!("{rendered}");
    }
    if let Some(path) = &cli.out {
        if let Err(e) = std::fs::write(path, rendered + "\n") {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::from(EXIT_ERROR as u8);
        }
    }
    ExitCode::from(code as u8)
}
