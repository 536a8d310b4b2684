use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use entroflow_core::dynamics::{
    info_rate_report, theorem_limit_point_check, InformationSource, DEFAULT_MAX_ATOMS,
};
use entroflow_core::ising::{
    eigenvalues, inverse_rg_step_zero_field, log_partition_function, partition_function,
    partition_function_bruteforce, rg_step_oracle, rg_trajectory, BRUTEFORCE_MAX_SITES,
};
use entroflow_core::lattice::{
    block_spin_distribution, gibbs_space, rg_entropy_flow, FlowSetup, LatticeSpec, MajorityRule, TieBreak,
    DEFAULT_MAX_CONFIGS, MAX_SITES,
};
use entroflow_core::partition::{is_coarsening, join, pseudo_distance};
use entroflow_core::{CouplingVector, LimitPointConfig, Partition, PermutationSystem, RateOptions, Space, VVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use crate::error::{CliError, CliResult};
use crate::interchange::Interchange;
use crate::report::{float, Format, Report};
use crate::spec::{point_observable, symbol_observable, Labels, System, SystemSpec};

pub const MAX_CONFIGS_ENV: &str = "ENTROFLOW_MAX_CONFIGS";

/// Tolerance between the closed-form and the squaring oracle beyond which `ising-rg` fails.
pub const RG_ORACLE_TOL: f64 = 1e-9;

#[derive(Debug, Parser)]
#[command(
    name = "entroflow",
    version,
    about = "Partition entropy flows, information rates and Ising decimation",
    args_conflicts_with_subcommands = true
)]
pub struct Cli {
    /// Experiment file naming a subcommand with its parameters; replaces the subcommand.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Only validate the experiment file.
    #[arg(long, requires = "config")]
    pub check_config: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropy, coarsening relations, join and distance of partitions of a finite space.
    Partition(PartitionArgs),
    /// Entropies of iterated joins and the information production rate of a system.
    Ks(KsArgs),
    /// Trajectory of the decimation map on (V0, V1), or zero-field inverse iteration.
    IsingRg(IsingRgArgs),
    /// Transfer-matrix partition function of the periodic chain.
    IsingZ(IsingZArgs),
    /// Entropy flow of block-spin partitions of the Gibbs configuration space.
    EntropyFlow(EntropyFlowArgs),
    /// Limit-point detection on join flows, checked against the information rate.
    TheoremCheck(TheoremCheckArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Partition(_) => "partition",
            Self::Ks(_) => "ks",
            Self::IsingRg(_) => "ising-rg",
            Self::IsingZ(_) => "ising-z",
            Self::EntropyFlow(_) => "entropy-flow",
            Self::TheoremCheck(_) => "theorem-check",
        }
    }

    fn output(&self) -> &OutputArgs {
        match self {
            Self::Partition(a) => &a.output,
            Self::Ks(a) => &a.output,
            Self::IsingRg(a) => &a.output,
            Self::IsingZ(a) => &a.output,
            Self::EntropyFlow(a) => &a.output,
            Self::TheoremCheck(a) => &a.output,
        }
    }
}

/// Names of the flags that are tolerances, per subcommand.
pub fn tolerance_keys(subcommand: &str) -> &'static [&'static str] {
    match subcommand {
        "partition" => &["tol"],
        "ks" => &["conv-tol"],
        "ising-rg" => &["tol"],
        "ising-z" => &["oracle-tol"],
        "entropy-flow" => &["epsilon"],
        "theorem-check" => &["epsilon", "conv-tol"],
        _ => &[],
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output encoding.
    #[arg(long, value_enum, default_value_t = Format::Delimited)]
    pub format: Format,

    /// Output file, written atomically; standard output when absent.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

fn name_pair(s: &str) -> Result<(String, String), String> {
    match s.split_once(',') {
        Some((p, q)) if !p.is_empty() && !q.is_empty() && !q.contains(',') => Ok((p.to_string(), q.to_string())),
        _ => Err("expected two names separated by a comma".into()),
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        Ok(_) => Err("tolerance must be positive".into()),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    /// Interchange file holding a space and named partitions.
    #[arg(long, value_name = "FILE", conflicts_with_all = ["weights", "atoms"])]
    pub input: Option<PathBuf>,

    /// Point weights of an inline space; points are named 0, 1, ….
    #[arg(long, value_delimiter = ',', required_unless_present = "input")]
    pub weights: Vec<f64>,

    /// Inline partition as point indices, atoms separated by '|', e.g. "0 1|2"; repeatable, named P1, P2, ….
    #[arg(long)]
    pub atoms: Vec<String>,

    /// Two partition names whose join, distance and order are reported.
    #[arg(long, value_name = "P,Q", value_parser = name_pair)]
    pub compare: Option<(String, String)>,

    /// Normalization tolerance on the weights.
    #[arg(long, default_value_t = 1e-12, value_parser = positive)]
    pub tol: f64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct KsArgs {
    /// System: bernoulli:P,…  markov:[[…]]  cycle:N  identity:N  perm:I,…
    #[arg(long)]
    pub system: SystemSpec,

    /// Label per symbol (shifts) or per point (permutations); shifts default to the generating partition.
    #[arg(long)]
    pub observable: Option<Labels>,

    /// Largest join length n.
    #[arg(long, default_value_t = 16)]
    pub nmax: usize,

    /// Cap on join atoms or cylinder words.
    #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
    pub max_atoms: usize,

    /// Convergence threshold on successive increments H_n - H_{n-1}.
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub conv_tol: f64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct IsingRgArgs {
    /// Start V0 = exp(-K0).
    #[arg(long, default_value_t = 0.7)]
    pub v0: f64,

    /// Start V1 = exp(-K1).
    #[arg(long, default_value_t = 0.9)]
    pub v1: f64,

    /// Maximum number of decimation steps.
    #[arg(long, default_value_t = 60)]
    pub steps: usize,

    /// Stationarity threshold on the sup-norm step.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub tol: f64,

    /// Iterate the zero-field inverse map from this renormalized K1 instead.
    #[arg(long, value_name = "K1")]
    pub inverse_from: Option<f64>,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct IsingZArgs {
    /// Field coupling K0 = βh.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub k0: f64,

    /// Bond coupling K1 = βJ.
    #[arg(long, allow_hyphen_values = true)]
    pub k1: f64,

    /// Number of sites N.
    #[arg(long)]
    pub n: usize,

    /// Compare with exhaustive enumeration (N ≤ 20, and 2^N within the configuration cap).
    #[arg(long)]
    pub check_bruteforce: bool,

    /// Relative disagreement with enumeration treated as an inconsistency.
    #[arg(long, default_value_t = 1e-10, value_parser = positive)]
    pub oracle_tol: f64,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct EntropyFlowArgs {
    /// Field coupling K0 = βh.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub k0: f64,

    /// Bond coupling K1 = βJ.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub k1: f64,

    /// Chain length; 2^sites configurations are enumerated (at most 2^16, or ENTROFLOW_MAX_CONFIGS).
    #[arg(long, default_value_t = 8)]
    pub sites: usize,

    /// Block size l.
    #[arg(long, default_value_t = 2)]
    pub block: usize,

    /// Renormalization levels; blocks at level k have l^(k+1) sites.
    #[arg(long, default_value_t = 3)]
    pub levels: usize,

    /// Majority tie rule.
    #[arg(long, value_enum, default_value_t = Tie::First)]
    pub tie: Tie,

    /// Plateau threshold of the limit-point detector, bits.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub epsilon: f64,

    /// Plateau length required by the detector.
    #[arg(long, default_value_t = 2)]
    pub window: usize,

    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Tie {
    First,
    Last,
    Up,
}

impl From<Tie> for TieBreak {
    fn from(t: Tie) -> Self {
        match t {
            Tie::First => TieBreak::First,
            Tie::Last => TieBreak::Last,
            Tie::Up => TieBreak::Up,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct TheoremCheckArgs {
    /// System to check; see `ks --help`.
    #[arg(long, required_unless_present = "random_perms")]
    pub system: Option<SystemSpec>,

    /// Observable labels; see `ks --help`.
    #[arg(long)]
    pub observable: Option<Labels>,

    /// Instead of --system, check this many random permutations with random two-atom observables.
    #[arg(long, value_name = "COUNT", conflicts_with = "system", requires = "seed")]
    pub random_perms: Option<usize>,

    /// Points per random permutation.
    #[arg(long, default_value_t = 12)]
    pub points: usize,

    /// Seed of the random sweep; mandatory with --random-perms.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Join lengths n = 1..=nmax form the flow.
    #[arg(long, default_value_t = 24)]
    pub nmax: usize,

    /// Plateau threshold of the limit-point detector, bits.
    #[arg(long, default_value_t = 1e-9, value_parser = positive)]
    pub epsilon: f64,

    /// Plateau length required by the detector.
    #[arg(long, default_value_t = 8)]
    pub window: usize,

    /// Convergence threshold on successive increments.
    #[arg(long, default_value_t = 1e-6, value_parser = positive)]
    pub conv_tol: f64,

    /// Cap on join atoms or cylinder words.
    #[arg(long, default_value_t = DEFAULT_MAX_ATOMS)]
    pub max_atoms: usize,

    #[command(flatten)]
    pub output: OutputArgs,
}

/// The configuration cap, lowered (or, in debug builds, raised) by `ENTROFLOW_MAX_CONFIGS`.
pub fn max_configs() -> CliResult<usize> {
    let Ok(raw) = std::env::var(MAX_CONFIGS_ENV) else {
        return Ok(DEFAULT_MAX_CONFIGS);
    };
    let cap: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::validation(format!("{MAX_CONFIGS_ENV}={raw:?} is not a count")))?;
    let ceiling = if cfg!(debug_assertions) { 1 << MAX_SITES } else { DEFAULT_MAX_CONFIGS };
    if cap > ceiling {
        return Err(CliError::validation(format!("{MAX_CONFIGS_ENV} may not exceed {ceiling}")));
    }
    Ok(cap)
}

pub struct Outcome {
    pub report: Report,
    /// Set when an oracle or consistency check failed; the report is still written.
    pub inconsistency: Option<String>,
}

impl From<Report> for Outcome {
    fn from(report: Report) -> Self {
        Self {
            report,
            inconsistency: None,
        }
    }
}

pub fn execute(command: &Command) -> CliResult<Outcome> {
    let outcome = match command {
        Command::Partition(a) => partition(a)?.into(),
        Command::Ks(a) => ks(a)?.into(),
        Command::IsingRg(a) => ising_rg(a)?,
        Command::IsingZ(a) => ising_z(a)?,
        Command::EntropyFlow(a) => entropy_flow(a)?.into(),
        Command::TheoremCheck(a) => theorem_check(a)?,
    };
    let out = command.output();
    outcome.report.emit(out.format, out.out.as_deref())?;
    Ok(outcome)
}

fn atoms_text(p: &Partition) -> String {
    let atoms: Vec<String> = p.atoms_as_ids().iter().map(|a| format!("{{{}}}", a.join(" "))).collect();
    atoms.join("|")
}

fn inline_partition(space: &Arc<Space>, spec: &str) -> CliResult<Partition> {
    let atoms = spec
        .split('|')
        .map(|atom| {
            atom.split_whitespace()
                .map(|p| p.parse::<usize>().map_err(|_| CliError::validation(format!("bad point {p:?} in {spec:?}"))))
                .collect()
        })
        .collect::<CliResult<Vec<Vec<usize>>>>()?;
    Ok(Partition::new(space.clone(), atoms)?)
}

fn partition(a: &PartitionArgs) -> CliResult<Report> {
    let (space, parts) = match &a.input {
        Some(path) => Interchange::parse(&std::fs::read_to_string(path)?)?.build(a.tol)?,
        None => {
            let space = Arc::new(Space::with_tolerance(
                (0..a.weights.len()).map(|i| i.to_string()),
                a.weights.clone(),
                entroflow_core::space::Normalization::Require,
                a.tol,
            )?);
            let parts = a
                .atoms
                .iter()
                .enumerate()
                .map(|(i, s)| Ok((format!("P{}", i + 1), inline_partition(&space, s)?)))
                .collect::<CliResult<Vec<_>>>()?;
            (space, parts)
        }
    };
    let mut r = Report::new("partition", &["name", "atoms", "h_bits", "partition"]);
    for (name, p) in &parts {
        r.push(vec![name.as_str().into(), p.atom_count().into(), float(p.entropy()), atoms_text(p).into()]);
    }
    r.set("points", space.len());
    if let Some((x, y)) = &a.compare {
        let find = |n: &str| {
            parts
                .iter()
                .find(|(name, _)| name == n)
                .map(|(_, p)| p)
                .ok_or_else(|| CliError::validation(format!("no partition named {n:?}")))
        };
        let (p, q) = (find(x)?, find(y)?);
        let pq = join(p, q)?;
        r.set("distance", float(pseudo_distance(p, q)?));
        r.set("first_coarsens_second", is_coarsening(p, q)?);
        r.set("second_coarsens_first", is_coarsening(q, p)?);
        r.set("join_atoms", pq.atom_count());
        r.set("join_h_bits", float(pq.entropy()));
        r.set("join", atoms_text(&pq));
    }
    Ok(r)
}

fn rate_options(conv_tol: f64, max_atoms: usize) -> RateOptions {
    RateOptions {
        conv_tol,
        conv_window: 3,
        max_atoms,
    }
}

fn ks(a: &KsArgs) -> CliResult<Report> {
    let opts = rate_options(a.conv_tol, a.max_atoms);
    let (report, closed_form) = match a.system.build()? {
        System::Symbolic(s) => {
            let obs = symbol_observable(&s, a.observable.as_ref())?;
            let generating = obs.atom_count() == s.alphabet_size();
            (info_rate_report(&s, &obs, a.nmax, &opts)?, generating.then(|| s.entropy_rate()))
        }
        System::Permutation(s) => {
            let obs = point_observable(&s, a.observable.as_ref())?;
            (info_rate_report(&s, &obs, a.nmax, &opts)?, None)
        }
    };
    let mut r = Report::new("ks", &["n", "H_n", "H_n_over_n"]);
    for (i, (h, rate)) in report.entropies.iter().zip(&report.rates).enumerate() {
        r.push(vec![(i + 1).into(), float(*h), float(*rate)]);
    }
    r.set("system", a.system.to_string());
    r.set("h_estimate", float(report.h_estimate));
    r.set("converged", report.converged);
    if let Some(h) = closed_form {
        r.set("closed_form_rate", float(h));
    }
    Ok(r)
}

fn ising_rg(a: &IsingRgArgs) -> CliResult<Outcome> {
    if let Some(k1p) = a.inverse_from {
        let mut r = Report::new("ising-rg", &["step", "K1", "V1"]);
        let mut k = k1p;
        r.push(vec![0.into(), float(k), float((-k).exp())]);
        for step in 1..=a.steps {
            k = inverse_rg_step_zero_field(k)?;
            r.push(vec![step.into(), float(k), float((-k).exp())]);
        }
        r.set("final_K1", float(k));
        r.set("final_V1", float((-k).exp()));
        return Ok(r.into());
    }
    let start = VVector::new(a.v0, a.v1)?;
    let t = rg_trajectory(start, a.steps, a.tol)?;
    let mut r = Report::new("ising-rg", &["step", "V0", "V1", "c"]);
    r.push(vec![0.into(), float(start.v0), float(start.v1), Value::Null]);
    let mut worst: f64 = 0.0;
    let mut prev = start;
    for (i, s) in t.steps.iter().enumerate() {
        r.push(vec![(i + 1).into(), float(s.v.v0), float(s.v.v1), float(s.c)]);
        let oracle = rg_step_oracle(prev.to_k())?;
        worst = worst.max(s.v.max_abs_diff(&oracle.k.to_v())).max((s.c - oracle.c).abs() / oracle.c);
        prev = s.v;
    }
    r.set("steps_used", t.steps_used);
    r.set("diverged", t.diverged);
    match t.converged_to {
        Some(v) => {
            r.set("converged_to_V0", float(v.v0));
            r.set("converged_to_V1", float(v.v1));
        }
        None => {
            r.set("converged_to_V0", Value::Null);
            r.set("converged_to_V1", Value::Null);
        }
    }
    r.set("oracle_max_deviation", float(worst));
    let inconsistency = (worst > RG_ORACLE_TOL)
        .then(|| format!("closed-form step deviates from the squaring oracle by {worst:e}"));
    Ok(Outcome { report: r, inconsistency })
}

fn ising_z(a: &IsingZArgs) -> CliResult<Outcome> {
    let k = CouplingVector::new(a.k0, a.k1)?;
    let (lp, lm) = eigenvalues(k)?;
    let log_z = log_partition_function(k, a.n)?;
    let z = partition_function(k, a.n).ok();
    let mut r = Report::new("ising-z", &["n", "Z", "log_Z", "lambda_plus", "lambda_minus"]);
    r.push(vec![a.n.into(), z.map_or(Value::Null, float), float(log_z), float(lp), float(lm)]);
    let mut inconsistency = None;
    if a.check_bruteforce {
        let cap = max_configs()?;
        let needed = 1u128 << a.n.min(127);
        if a.n > BRUTEFORCE_MAX_SITES || needed > cap as u128 {
            return Err(CliError::ResourceCap(format!(
                "enumeration needs {needed} configurations, cap is {cap}"
            )));
        }
        let brute = partition_function_bruteforce(k, a.n)?;
        let z = z.ok_or_else(|| CliError::ResourceCap("Z overflows; use log_Z".into()))?;
        let delta = (z - brute).abs() / brute;
        r.set("bruteforce_Z", float(brute));
        r.set("oracle_delta", float(delta));
        if delta > a.oracle_tol {
            inconsistency = Some(format!("transfer-matrix Z disagrees with enumeration by {delta:e}"));
        }
    }
    Ok(Outcome { report: r, inconsistency })
}

fn entropy_flow(a: &EntropyFlowArgs) -> CliResult<Report> {
    let k = CouplingVector::new(a.k0, a.k1)?;
    let rule = MajorityRule { tie: a.tie.into() };
    let mut setup = FlowSetup::new(k, a.sites, a.block, a.levels, &rule);
    setup.max_configs = max_configs()?;
    let detector = LimitPointConfig {
        epsilon: a.epsilon,
        window: a.window,
        horizon: a.levels.max(a.window),
        ..LimitPointConfig::default()
    };
    let flow = rg_entropy_flow(&setup, &detector)?;
    let mut r = Report::new("entropy-flow", &["level", "block_sites", "atoms", "h_bits"]);
    for l in &flow.levels {
        r.push(vec![l.level.into(), l.block_sites.into(), l.atoms.into(), float(l.h_bits)]);
    }
    r.set("coarse_verdict", flow.coarse_verdict.status.to_string());
    r.set("coarse_witness", flow.coarse_verdict.witness_index.map_or(Value::Null, Value::from));
    r.set("refinement_verdict", flow.refinement_verdict.status.to_string());
    r.set("refinement_witness", flow.refinement_verdict.witness_index.map_or(Value::Null, Value::from));
    r.set("refinement_validated", true);
    if a.k0 == 0.0 {
        let gibbs = gibbs_space(k, a.sites, setup.max_configs)?;
        let spec = LatticeSpec::new(a.sites, a.block)?;
        let mut gap: f64 = 0.0;
        for level in 0..a.levels {
            let dist = block_spin_distribution(&gibbs, &spec, level, &rule)?;
            for (spins, p) in &dist {
                let flipped: Vec<i8> = spins.iter().map(|s| -s).collect();
                let q = dist.iter().find(|(s, _)| *s == flipped).map_or(0.0, |(_, q)| *q);
                gap = gap.max((p - q).abs());
            }
        }
        r.set("flip_asymmetry", float(gap));
    }
    Ok(r)
}

fn theorem_check(a: &TheoremCheckArgs) -> CliResult<Outcome> {
    let cfg = LimitPointConfig {
        epsilon: a.epsilon,
        window: a.window,
        ..LimitPointConfig::default()
    };
    let opts = rate_options(a.conv_tol, a.max_atoms);
    let mut r = Report::new("theorem-check", &["system", "status", "witness_index", "h_estimate", "consistent"]);
    let mut push = |label: String, t: entroflow_core::TheoremCheck| {
        r.push(vec![
            label.into(),
            t.verdict.status.to_string().into(),
            t.verdict.witness_index.map_or(Value::Null, Value::from),
            float(t.h_estimate),
            t.consistent.into(),
        ]);
        t.consistent
    };
    let mut all = true;
    match (&a.system, a.random_perms) {
        (Some(spec), _) => {
            let t = match spec.build()? {
                System::Symbolic(s) => {
                    let obs = symbol_observable(&s, a.observable.as_ref())?;
                    check(&s, &obs, &cfg, a.nmax, &opts)?
                }
                System::Permutation(s) => {
                    let obs = point_observable(&s, a.observable.as_ref())?;
                    check(&s, &obs, &cfg, a.nmax, &opts)?
                }
            };
            all &= push(spec.to_string(), t);
        }
        (None, Some(count)) => {
            let seed = a.seed.ok_or_else(|| CliError::validation("--random-perms requires --seed"))?;
            if a.points < 2 {
                return Err(CliError::validation("--points must be at least 2"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let space = Arc::new(Space::uniform(a.points)?);
            for _ in 0..count {
                let mut map: Vec<usize> = (0..a.points).collect();
                map.shuffle(&mut rng);
                let labels: Vec<usize> = (0..a.points).map(|_| rng.gen_range(0..2)).collect();
                let spec = SystemSpec::Perm(map.clone());
                let sys = PermutationSystem::new(space.clone(), map)?;
                let obs = Partition::from_labels(space.clone(), labels)?;
                let t = check(&sys, &obs, &cfg, a.nmax, &opts)?;
                all &= push(spec.to_string(), t);
            }
            r.set("seed", seed);
        }
        (None, None) => return Err(CliError::validation("either --system or --random-perms is required")),
    }
    r.set("all_consistent", all);
    Ok(Outcome {
        report: r,
        inconsistency: (!all).then(|| "a witnessed limit point came with a positive rate".to_string()),
    })
}

fn check<S: InformationSource<f64>>(
    system: &S,
    obs: &S::Observable,
    cfg: &LimitPointConfig,
    n_max: usize,
    opts: &RateOptions,
) -> CliResult<entroflow_core::TheoremCheck> {
    Ok(theorem_limit_point_check(system, obs, cfg, n_max, opts)?)
}
