use std::path::PathBuf;

use amscheck::detect::CombineMode;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "amscheck", version, about = "SPICE netlist lint and analog Trojan localization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Union,
    Intersection,
}

impl From<Mode> for CombineMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Union => CombineMode::Union,
            Mode::Intersection => CombineMode::Intersection,
        }
    }
}

#[derive(Debug, Args)]
pub struct OutArg {
    /// Write the JSON result here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lint a netlist; exits 1 when anything is found.
    Lint {
        netlist: PathBuf,
        /// Ruleset (TOML or JSON); defaults to all rules.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Lint, apply the suggested fixes and re-lint.
    Fix {
        netlist: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// Write the corrected netlist here.
        #[arg(long)]
        write: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Inject syntax bugs into a lint-clean netlist.
    InjectBugs {
        netlist: PathBuf,
        #[arg(long, default_value_t = 0)]
        easy: usize,
        #[arg(long, default_value_t = 0)]
        medium: usize,
        #[arg(long, default_value_t = 0)]
        difficult: usize,
        /// Inject exactly one bug of this rule instead of a plan.
        #[arg(long, conflicts_with_all = ["easy", "medium", "difficult"])]
        rule: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where the modified netlist goes (stdout otherwise).
        #[arg(long)]
        write: Option<PathBuf>,
        /// Ground-truth record.
        #[command(flatten)]
        out: OutArg,
    },
    /// Insert the Trojan template.
    InjectTrojan {
        netlist: PathBuf,
        #[arg(long)]
        payload: String,
        #[arg(long)]
        trigger: String,
        /// Circuit name used in the case label; defaults to the file stem.
        #[arg(long)]
        circuit: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also rename Trojan parts and perturb their sizes.
        #[arg(long)]
        scramble: bool,
        #[arg(long)]
        write: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Generate a DC sweep log from the behaviour model.
    GenLog {
        #[arg(long)]
        netlist: PathBuf,
        /// Injection record; omit for a Trojan-free log.
        #[arg(long)]
        truth: Option<PathBuf>,
        #[arg(long, default_value = "0.6:1.2")]
        spec: String,
        /// Sweep as lo:hi:step.
        #[arg(long, default_value = "0:1.8:0.05")]
        sweep: String,
        /// Behaviour model overrides (TOML).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Log file to write (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Localize a Trojan from a sweep log; exits 1 on a detection.
    Detect {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        spec: String,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Detector thresholds (TOML).
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Score a bug or detection report against its injection record.
    Score {
        #[arg(long)]
        truth: PathBuf,
        #[arg(long)]
        report: PathBuf,
        /// Bug report after fixing; findings still present are unresolved.
        #[arg(long)]
        fixed: Option<PathBuf>,
        /// Bug report on the clean host.
        #[arg(long)]
        clean: Option<PathBuf>,
        #[command(flatten)]
        out: OutArg,
    },
    /// Run the Trojan benchmark sweep described by a TOML file.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Add exceptions for false positives to a ruleset.
    Refine {
        netlist: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        /// JSON list of {"rule_id", "line", "verdict"} entries; without it
        /// every finding is taken as a false positive.
        #[arg(long)]
        verdicts: Option<PathBuf>,
        /// Refined ruleset (TOML) path; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a prompt, get an answer and parse it.
    #[command(subcommand)]
    Llm(LlmCommand),
}

#[derive(Debug, Args)]
pub struct LlmCommon {
    /// Print the prompt and stop.
    #[arg(long)]
    pub prompt_only: bool,
    /// Parse this saved answer instead of calling the endpoint.
    #[arg(long)]
    pub response: Option<PathBuf>,
    /// Endpoint settings (TOML).
    #[arg(long)]
    pub endpoint: Option<PathBuf>,
    /// Directory for prompt and answer transcripts.
    #[arg(long)]
    pub save_transcripts: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutArg,
}

#[derive(Debug, Subcommand)]
pub enum LlmCommand {
    /// Ask for a bug report on a netlist.
    Lint {
        netlist: PathBuf,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[command(flatten)]
        common: LlmCommon,
    },
    /// Ask for Trojan-impacted nodes.
    Trojan {
        #[arg(long)]
        netlist: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        spec: String,
        #[arg(long, value_enum, default_value = "union")]
        mode: Mode,
        /// Few-shot examples as a JSON list.
        #[arg(long)]
        examples: Option<PathBuf>,
        #[arg(long, default_value_t = amscheck_llm::DEFAULT_TOKEN_BUDGET)]
        budget: usize,
        #[command(flatten)]
        common: LlmCommon,
    },
}
