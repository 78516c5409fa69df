use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use zeroone::cone::{CoherenceVerdict, Outcome, ProbabilityVector};
use zeroone::events::EventDescription;
use zeroone::io as docs;
use zeroone::pricing;
use zeroone::protocol::{self, ProtocolSpec, Trace};
use zeroone::rational::{self, Rational};
use zeroone::strategy::{self, Family, RealityKind, Runner, SkepticStrategy, StrategyContext};
use zeroone::verify;
use zeroone::Error;

mod play;

#[derive(Parser)]
#[command(name = "zeroone", version, about = "Exact superhedging prices and betting-protocol simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operations on the cones of a protocol document.
    Cone {
        #[command(subcommand)]
        action: ConeAction,
    },
    /// Upper and lower probability of a cylinder event.
    Price(PriceArgs),
    /// Play a Skeptic strategy against a Reality policy and write the trace as JSON lines.
    Simulate(SimulateArgs),
    /// Run a named verification suite, or `all`.
    Verify {
        suite: String,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Step through a protocol by hand.
    Play(PlayArgs),
}

#[derive(Subcommand)]
enum ConeAction {
    /// Report coherence of every cone with its certificate.
    Check {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PriceArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    event: PathBuf,
    /// Defaults to the event's horizon.
    #[arg(long)]
    horizon: Option<usize>,
    /// Markov start state; every state is priced when omitted.
    #[arg(long)]
    omega0: Option<String>,
    #[arg(long)]
    certificate: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Strategy document: a path, or inline JSON starting with `{`.
    #[arg(long)]
    skeptic: Option<String>,
    /// scripted:L1,L2,...  minimizer  evader  sampler[:p1,p2,...]
    #[arg(long, default_value = "minimizer")]
    reality: String,
    #[arg(long)]
    event: Option<PathBuf>,
    /// Number of trials; defaults to the document's horizon hint.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wrap the strategy in restart scaling with this epsilon.
    #[arg(long)]
    eps: Option<String>,
    /// Stop once this many restart epochs have completed.
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    omega0: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Role {
    Reality,
    Skeptic,
}

#[derive(Args)]
struct PlayArgs {
    #[arg(long)]
    spec: PathBuf,
    /// The side the human plays.
    #[arg(long, value_enum, default_value_t = Role::Reality)]
    role: Role,
    #[arg(long)]
    skeptic: Option<String>,
    #[arg(long, default_value = "minimizer")]
    reality: String,
    #[arg(long)]
    event: Option<PathBuf>,
    /// Stop after this many trials.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    omega0: Option<String>,
    /// Trace file written when the session ends.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A failed command with the exit status it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Incoherent { .. }) { 3 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cone { action: ConeAction::Check { spec, out } } => cone_check(&spec, out.as_deref()),
        Command::Price(args) => price(&args),
        Command::Simulate(args) => simulate(&args),
        Command::Verify { suite, seed } => verify_cmd(&suite, seed),
        Command::Play(args) => play_cmd(&args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| invalid(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_spec(path: &Path) -> Result<ProtocolSpec, Failure> {
    Ok(docs::spec_from_json(&read(path)?)?)
}

fn load_event(path: &Path, spec: &ProtocolSpec) -> Result<EventDescription, Failure> {
    Ok(docs::event_from_json(&read(path)?, spec.space())?)
}

fn load_strategy(arg: Option<&str>, spec: &ProtocolSpec) -> Result<SkepticStrategy, Failure> {
    match arg {
        None => Ok(SkepticStrategy::Zero),
        Some(text) if text.trim_start().starts_with('{') => Ok(docs::strategy_from_json(text, spec)?),
        Some(path) => Ok(docs::strategy_from_json(&read(Path::new(path))?, spec)?),
    }
}

fn omega0_of(label: Option<&str>, spec: &ProtocolSpec) -> Result<Option<Outcome>, Failure> {
    match label {
        Some(l) if !spec.is_markov() => Err(invalid(format!("--omega0 {l} given for a protocol that is not markov"))),
        Some(l) => Ok(Some(spec.space().outcome(l)?)),
        None => Ok(None),
    }
}

/// Parses `scripted:...`, `minimizer`, `evader` or `sampler[:p1,p2,...]`.
fn parse_reality(text: &str, spec: &ProtocolSpec, seed: u64) -> Result<RealityKind, Failure> {
    let (name, rest) = text.split_once(':').unwrap_or((text, ""));
    match name {
        "scripted" => Ok(RealityKind::Scripted(spec.space().parse_sequence(rest)?)),
        "minimizer" if rest.is_empty() => Ok(RealityKind::Minimizer),
        "evader" if rest.is_empty() => Ok(RealityKind::Evader),
        "sampler" => {
            let probabilities = if rest.is_empty() {
                ProbabilityVector::uniform(spec.space().len())?
            } else {
                let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
                ProbabilityVector::new(rational::parse_all(&parts)?)?
            };
            if probabilities.len() != spec.space().len() {
                return Err(Error::DimensionMismatch { expected: spec.space().len(), found: probabilities.len() }.into());
            }
            Ok(RealityKind::Sampler { probabilities, seed })
        }
        _ => Err(invalid(format!("unknown reality {text:?}; expected scripted:..., minimizer, evader or sampler[:...]"))),
    }
}

fn cone_check(path: &Path, out: Option<&Path>) -> Result<(), Failure> {
    let doc: docs::SpecDoc = serde_json::from_str(&read(path)?).map_err(|e| invalid(e.to_string()))?;
    let (space, cones) = docs::parse_cones(&doc)?;
    let mut reports = Vec::new();
    let mut incoherent = Vec::new();
    for (i, cone) in cones.iter().enumerate() {
        let mut r = match cone.check_coherence()? {
            CoherenceVerdict::Coherent { calibrating } => {
                json!({ "coherent": true, "calibrating": rational::format_all(calibrating.weights()) })
            }
            CoherenceVerdict::Incoherent { witness } => {
                incoherent.push(i);
                json!({ "coherent": false, "witness": rational::format_all(witness) })
            }
        };
        r["index"] = json!(i);
        if doc.variant.as_deref() == Some("markov") {
            r["state"] = json!(space.label(Outcome(i)));
        }
        reports.push(r);
    }
    emit(&format!("{}\n", serde_json::to_string_pretty(&json!({ "cones": reports })).expect("json")), out)?;
    if incoherent.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: 3, message: format!("incoherent cone(s) at index {incoherent:?}; see the witness coefficients") })
    }
}

fn price(args: &PriceArgs) -> Result<(), Failure> {
    let spec = load_spec(&args.spec)?;
    let event = load_event(&args.event, &spec)?;
    if !event.is_cylinder() {
        return Err(invalid("price needs a cylinder event"));
    }
    let horizon = match (args.horizon, event.class()) {
        (Some(h), _) => h,
        (None, zeroone::events::EventClass::Cylinder { horizon, .. }) => *horizon,
        _ => unreachable!("checked above"),
    };
    let space = spec.space();
    let report = if spec.is_markov() {
        let starts: Vec<Outcome> = match omega0_of(args.omega0.as_deref(), &spec)? {
            Some(o) => vec![o],
            None => space.outcomes().collect(),
        };
        let mut per_state = Vec::new();
        for o in starts {
            let r = pricing::priced(&spec, &event, horizon, 0, Some(o))?;
            let mut v = docs::price_report(&r, space, args.certificate);
            v["omega0"] = json!(space.label(o));
            per_state.push(v);
        }
        if per_state.len() == 1 {
            per_state.remove(0)
        } else {
            json!({ "per_state": per_state })
        }
    } else {
        omega0_of(args.omega0.as_deref(), &spec)?;
        docs::price_report(&pricing::priced(&spec, &event, horizon, 0, None)?, space, args.certificate)
    };
    emit(&format!("{}\n", serde_json::to_string(&report).expect("json")), args.out.as_deref())
}

/// Index of the step at which the `k`-th restart epoch completes.
fn epochs_done_at(s: &SkepticStrategy, ctx: StrategyContext<'_>, outcomes: &[Outcome], k: usize) -> Result<Option<usize>, Failure> {
    let mut runner = Runner::new(s, ctx)?;
    let mut done = 0;
    let mut last: Option<Rational> = runner.epoch_capital().cloned();
    for (i, &w) in outcomes.iter().enumerate() {
        runner.observe(w)?;
        let now = runner.epoch_capital().cloned();
        if now != last {
            done += 1;
            last = now;
            if done == k {
                return Ok(Some(i + 1));
            }
        }
    }
    Ok(None)
}

fn simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let spec = load_spec(&args.spec)?;
    let mut skeptic = load_strategy(args.skeptic.as_deref(), &spec)?;
    if let Some(eps) = &args.eps {
        let eps = rational::parse(eps)?;
        skeptic = strategy::restart_scale(Family::Uniform(Box::new(skeptic)), eps)?;
    }
    if args.epochs.is_some() && !matches!(skeptic, SkepticStrategy::RestartScale { .. } | SkepticStrategy::AlternatingRestart { .. }) {
        return Err(invalid("--epochs needs a restart strategy (or --eps)"));
    }
    let event = args.event.as_deref().map(|p| load_event(p, &spec)).transpose()?;
    let horizon = args
        .horizon
        .or(spec.horizon_hint())
        .ok_or_else(|| invalid("--horizon is required when the protocol has no horizon hint"))?;
    let mut reality = strategy::build_reality(parse_reality(&args.reality, &spec, args.seed)?)?;
    if let Some(o) = omega0_of(args.omega0.as_deref(), &spec)? {
        reality = reality.with_initial_state(o);
    }
    let mut trace: Trace = protocol::run(&spec, &skeptic, &mut reality, horizon, event.as_ref());
    if let Some(k) = args.epochs {
        let ctx = StrategyContext::new(&spec, trace.omega0);
        if let Some(n) = epochs_done_at(&skeptic, ctx, &trace.outcomes(), k)? {
            trace.steps.truncate(n);
        }
    }
    emit(&docs::trace_to_jsonl(&trace, spec.space()), args.out.as_deref())?;
    match &trace.aborted {
        Some(e) => Err(Failure { code: 4, message: format!("run aborted after {} trials: {e}", trace.steps.len()) }),
        None => Ok(()),
    }
}

fn verify_cmd(suite: &str, seed: u64) -> Result<(), Failure> {
    let reports = verify::run_suite(suite, seed)?;
    let mut failed = Vec::new();
    for r in &reports {
        let status = if r.passed() { "PASS" } else { "FAIL" };
        println!("{status} {} (seed {}, {} checks)", r.name, r.seed, r.checks);
        for n in &r.notes {
            println!("  {n}");
        }
        if !r.passed() {
            failed.push(r.name.clone());
            println!("  {} failure(s); first counterexample:", r.failures.len());
            for f in r.failures.iter().take(3) {
                println!("    {f}");
            }
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure { code: 1, message: format!("failed suites: {}", failed.join(", ")) })
    }
}

fn play_cmd(args: &PlayArgs) -> Result<(), Failure> {
    let spec = load_spec(&args.spec)?;
    let event = args.event.as_deref().map(|p| load_event(p, &spec)).transpose()?;
    let config = play::Session {
        spec: &spec,
        role: args.role,
        skeptic: load_strategy(args.skeptic.as_deref(), &spec)?,
        reality: parse_reality(&args.reality, &spec, args.seed)?,
        event: event.as_ref(),
        horizon: args.horizon,
        omega0: omega0_of(args.omega0.as_deref(), &spec)?,
        out: args.out.clone(),
    };
    let stdin = io::stdin();
    let mut input = stdin.lock();
    let mut output = io::stdout();
    play::play(&config, &mut input as &mut dyn BufRead, &mut output as &mut dyn Write)?;
    Ok(())
}
