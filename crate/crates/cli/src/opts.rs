use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "radio-bcast",
    version,
    about = "Multi-message broadcast experiments in the radio network model"
)]
pub struct Cli {
    /// Worker threads for independent seeds and cells.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a network and write it as JSON.
    #[command(subcommand)]
    Generate(Generate),
    /// Run a broadcast protocol.
    Run(RunArgs),
    /// Build, weigh, check and synthesize STSs.
    #[command(subcommand)]
    Sts(StsCmd),
    /// Reception-probability tables, subset scans and throughput curves.
    #[command(subcommand)]
    Verify(Verify),
}

#[derive(Subcommand, Debug)]
pub enum Generate {
    /// Degree-class family: class i has n' receivers of degree 2^i.
    Class {
        #[arg(long)]
        n_prime: u32,
        /// Defaults to floor(log2 n') - 1.
        #[arg(long)]
        classes: Option<u32>,
        #[arg(long)]
        seed: u64,
        #[arg(short, long, default_value = "net.json")]
        output: PathBuf,
    },
    /// Half-dense family: each edge present with probability 1/2.
    Halfdense {
        #[arg(long)]
        eta: u32,
        /// Defaults to eta^2.
        #[arg(long)]
        receivers: Option<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(short, long, default_value = "net.json")]
        output: PathBuf,
    },
    /// Layered gadget graph of the given depth.
    Gadget {
        #[arg(long)]
        depth: u32,
        #[arg(short, long, default_value = "graph.json")]
        output: PathBuf,
    },
    /// Path graph with the source at one end.
    Path {
        #[arg(long)]
        len: u32,
        #[arg(short, long, default_value = "graph.json")]
        output: PathBuf,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Decay,
    RepeatedDecay,
    Coded,
    RangeCoded,
    StsRouting,
    Pipelined,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum StsKind {
    Prefix,
    Range,
    Partition,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthModeArg {
    Exact,
    Sampled,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbModeArg {
    Exact,
    MonteCarlo,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanModeArg {
    Exhaustive,
    Sampled,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerArg {
    Tdma,
    PrefixSts,
}

/// Where an STS comes from: a named construction or a JSON file.
#[derive(Args, Debug, Clone)]
pub struct StsSource {
    /// Named construction.
    #[arg(long, conflicts_with = "file")]
    pub sts: Option<StsKind>,
    /// STS JSON file.
    #[arg(long)]
    pub file: Option<PathBuf>,
    /// Minimum degree for `range` (defaults to the network's).
    #[arg(long)]
    pub delta: Option<u32>,
    /// Maximum degree for `range` and `partition` (defaults to the network's).
    #[arg(long)]
    pub max_degree: Option<u32>,
}

/// Configuration flags shared by every protocol.
#[derive(Args, Debug, Clone)]
pub struct ProtoFlags {
    /// Required by every randomized step.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub outer: Option<u32>,
    #[arg(long)]
    pub inner: Option<u32>,
    #[arg(long)]
    pub reps: Option<u32>,
    #[arg(long)]
    pub block_size: Option<usize>,
    #[arg(long)]
    pub phase_lo: Option<u32>,
    #[arg(long)]
    pub phase_hi: Option<u32>,
    #[arg(long)]
    pub rounds_per_phase: Option<u32>,
    #[arg(long)]
    pub budget_bits: Option<usize>,
    #[arg(long)]
    pub payload_len: Option<usize>,
    #[arg(long)]
    pub stop_when_decoded: bool,
    #[command(flatten)]
    pub sts: StsSource,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: SynthModeArg,
    /// Permutations for `--mode sampled`.
    #[arg(long, default_value_t = 1000)]
    pub num_perms: u64,
    /// Pipelined: messages per batch (defaults to ceil(k / depth)).
    #[arg(long)]
    pub batch_size: Option<u32>,
    #[arg(long, default_value_t = 3)]
    pub spacing: u32,
    #[arg(long = "hop", value_enum, default_value = "tdma")]
    pub hop: InnerArg,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(value_enum)]
    pub protocol: Protocol,
    /// Bipartite network JSON.
    #[arg(long)]
    pub net: Option<PathBuf>,
    /// General graph JSON (pipelined only).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub k: u32,
    #[command(flatten)]
    pub flags: ProtoFlags,
    /// Output file; `.csv` writes a CSV row, anything else JSON.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum StsCmd {
    /// Build a named STS.
    Build {
        #[arg(long)]
        sts: StsKind,
        #[arg(long)]
        eta: u32,
        #[arg(long)]
        delta: Option<u32>,
        #[arg(long)]
        max_degree: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Exact weight.
    Weight {
        #[command(flatten)]
        source: StsSource,
        #[arg(long)]
        eta: Option<u32>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Which receivers an STS covers, and in which round.
    Cover {
        #[command(flatten)]
        source: StsSource,
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Probability that a random relabeling covers every receiver.
    Prob {
        #[command(flatten)]
        source: StsSource,
        #[arg(long)]
        net: PathBuf,
        #[arg(long, value_enum, default_value = "exact")]
        mode: ProbModeArg,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Turn an STS into a routing schedule.
    Synth {
        #[command(flatten)]
        source: StsSource,
        #[arg(long)]
        eta: Option<u32>,
        #[arg(long, value_enum, default_value = "exact")]
        mode: SynthModeArg,
        #[arg(long, default_value_t = 1000)]
        num_perms: u64,
        #[arg(long)]
        seed: Option<u64>,
        /// Record delivery on this network and report the throughput.
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[allow(clippy::large_enum_variant)]
#[derive(Subcommand, Debug)]
pub enum Verify {
    /// Exact reception probability against its bound for all (a, d).
    Eq1 {
        #[arg(long)]
        n_prime: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sender set heard alone by the most receivers.
    Maxfrac {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, value_enum, default_value = "exhaustive")]
        mode: ScanModeArg,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// k / T_k for each k.
    Throughput {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, value_enum)]
        protocol: Protocol,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[command(flatten)]
        flags: ProtoFlags,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}
