//! Line-oriented REPL in which a human plays one side of the protocol.

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use zeroone::cone::{Cone, Gamble, Outcome};
use zeroone::events::EventDescription;
use zeroone::io as docs;
use zeroone::protocol::{step_coeffs, GameState, ProtocolSpec, Trace, TraceStep};
use zeroone::rational::{self, Rational};
use zeroone::strategy::{build_reality, Reality, RealityKind, RealityView, Runner, SkepticStrategy, StrategyContext};

use crate::{invalid, Failure, Role};

pub struct Session<'a> {
    pub spec: &'a ProtocolSpec,
    pub role: Role,
    pub skeptic: SkepticStrategy,
    pub reality: RealityKind,
    pub event: Option<&'a EventDescription>,
    pub horizon: Option<usize>,
    pub omega0: Option<Outcome>,
    pub out: Option<PathBuf>,
}

enum Line {
    Quit,
    Save(Option<PathBuf>),
    Help,
    Move(String),
}

fn io_err(e: std::io::Error) -> Failure {
    invalid(format!("terminal: {e}"))
}

fn read_line<R: BufRead + ?Sized, W: Write + ?Sized>(prompt: &str, input: &mut R, out: &mut W) -> Result<Line, Failure> {
    write!(out, "{prompt}").map_err(io_err)?;
    out.flush().map_err(io_err)?;
    let mut buf = String::new();
    if input.read_line(&mut buf).map_err(io_err)? == 0 {
        return Ok(Line::Quit);
    }
    let text = buf.trim();
    Ok(match text.split_once(' ').map_or((text, ""), |(a, b)| (a, b.trim())) {
        ("quit" | "exit" | "q", _) => Line::Quit,
        ("save", "") => Line::Save(None),
        ("save", path) => Line::Save(Some(PathBuf::from(path))),
        ("help" | "?", _) => Line::Help,
        _ => Line::Move(text.to_string()),
    })
}

fn show(g: &Gamble) -> String {
    format!("({})", rational::format_all(g.payoffs()).join(", "))
}

fn save(trace: &Trace, spec: &ProtocolSpec, path: &Path) -> Result<(), Failure> {
    fs::write(path, docs::trace_to_jsonl(trace, spec.space())).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

/// Reads Skeptic's move: `c x1 .. xk` (generator coefficients, also accepted
/// bare) or `g v1 .. vm` (a gamble, checked for cone membership).
fn parse_move(text: &str, cone: &Cone) -> Result<Vec<Rational>, String> {
    let mut words: Vec<&str> = text.split_whitespace().collect();
    let gamble = matches!(words.first(), Some(&"g"));
    if matches!(words.first(), Some(&"c" | &"g")) {
        words.remove(0);
    }
    let values = rational::parse_all(&words).map_err(|e| e.to_string())?;
    if gamble {
        if values.len() != cone.arity() {
            return Err(format!("a gamble needs {} payoffs, got {}", cone.arity(), values.len()));
        }
        let g = Gamble::new(values);
        return match cone.membership(&g).map_err(|e| e.to_string())? {
            Some(c) => Ok(c),
            None => Err(format!(
                "{} is not in this trial's cone: the membership LP finds no nonnegative combination of the generators {} equal to it",
                show(&g),
                cone.generators().iter().map(show).collect::<Vec<_>>().join(" ")
            )),
        };
    }
    if values.len() != cone.generators().len() {
        return Err(format!("expected {} generator coefficients, got {}", cone.generators().len(), values.len()));
    }
    if !values.iter().all(rational::is_nonnegative) {
        return Err("generator coefficients must be nonnegative".into());
    }
    Ok(values)
}

pub fn play<R: BufRead + ?Sized, W: Write + ?Sized>(s: &Session<'_>, input: &mut R, out: &mut W) -> Result<Trace, Failure> {
    let spec = s.spec;
    let space = spec.space();
    let mut reality = build_reality(s.reality.clone())?;
    let omega0 = match (spec.is_markov(), s.omega0) {
        (false, _) => None,
        (true, Some(o)) => Some(o),
        (true, None) if s.role == Role::Skeptic => Some(reality.initial_state(spec)?),
        (true, None) => Some(Outcome(0)),
    };
    let mut state = GameState::initial(spec, omega0)?;
    let mut runner = Runner::new(&s.skeptic, StrategyContext::new(spec, omega0))?;
    let mut trace = Trace { omega0, steps: Vec::new(), aborted: None };
    let labels = space.labels_of(&space.outcomes().collect::<Vec<_>>()).join(", ");
    let help = match s.role {
        Role::Reality => format!("enter an outcome ({labels}), `save [path]` or `quit`"),
        Role::Skeptic => "enter `c x1 .. xk` for generator coefficients, `g v1 .. vm` for a gamble, `save [path]` or `quit`".to_string(),
    };
    let w = |out: &mut W, text: String| writeln!(out, "{text}").map_err(io_err);
    w(out, format!("outcomes: {labels}"))?;
    if let Some(o) = omega0 {
        w(out, format!("start state: {}", space.label(o)))?;
    }
    w(out, help.clone())?;

    'trials: while s.horizon.is_none_or(|h| trace.steps.len() < h) {
        let n = state.next_trial();
        let cone = state.cone(spec)?;
        let (coeffs, omega) = match s.role {
            Role::Reality => {
                let coeffs = runner.coeffs(&state.capital)?;
                w(out, format!("trial {n}: Skeptic plays F{n} = {}", show(&cone.combine(&coeffs)?)))?;
                loop {
                    match read_line(&format!("omega{n}> "), input, out)? {
                        Line::Quit => break 'trials,
                        Line::Help => w(out, help.clone())?,
                        Line::Save(p) => save_cmd(&trace, spec, p.or(s.out.clone()), out)?,
                        Line::Move(text) => match space.outcome(&text) {
                            Ok(o) => break (coeffs, o),
                            Err(e) => w(out, format!("{e}; expected one of {labels}"))?,
                        },
                    }
                }
            }
            Role::Skeptic => {
                w(out, format!("trial {n}: generators {}", cone.generators().iter().map(show).collect::<Vec<_>>().join(" ")))?;
                let coeffs = loop {
                    match read_line(&format!("F{n}> "), input, out)? {
                        Line::Quit => break 'trials,
                        Line::Help => w(out, help.clone())?,
                        Line::Save(p) => save_cmd(&trace, spec, p.or(s.out.clone()), out)?,
                        Line::Move(text) => match parse_move(&text, cone) {
                            Ok(c) => break c,
                            Err(e) => w(out, format!("rejected: {e}"))?,
                        },
                    }
                };
                let gamble = cone.combine(&coeffs)?;
                let view = RealityView { spec, trial: n, history: &state.history, cone, gamble: &gamble };
                let omega = reality.choose(&view)?;
                (coeffs, omega)
            }
        };
        let before = state.capital.clone();
        let (next, payoff) = step_coeffs(&state, spec, &coeffs, omega)?;
        if s.role == Role::Reality {
            runner.observe(omega)?;
        }
        w(
            out,
            format!(
                "K{n} := K{} + F{n}({}) = {} + {} = {}",
                n - 1,
                space.label(omega),
                rational::format(&before),
                rational::format(&payoff),
                rational::format(&next.capital)
            ),
        )?;
        let membership = s.event.map(|e| e.membership_prefix(&next.history)).transpose()?;
        if let Some(m) = membership {
            w(out, format!("event: {}", m.as_str()))?;
        }
        trace.steps.push(TraceStep { n, coeffs, payoff, omega, capital: next.capital.clone(), membership });
        state = next;
    }
    w(out, format!("final capital {} after {} trials", rational::format(&trace.final_capital()), trace.steps.len()))?;
    if let Some(p) = &s.out {
        save(&trace, spec, p)?;
    }
    Ok(trace)
}

fn save_cmd<W: Write + ?Sized>(trace: &Trace, spec: &ProtocolSpec, path: Option<PathBuf>, out: &mut W) -> Result<(), Failure> {
    let msg = match path {
        Some(p) => match save(trace, spec, &p) {
            Ok(()) => format!("saved {} trials to {}", trace.steps.len(), p.display()),
            Err(f) => f.message,
        },
        None => "no path given and no --out set".to_string(),
    };
    writeln!(out, "{msg}").map_err(io_err)
}
