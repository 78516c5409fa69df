//! Skeptic strategies, Reality policies and prudence checks.
//!
//! A [`SkepticStrategy`] is a pure description (a combinator tree). It is
//! executed by a [`Runner`], which walks one path trial by trial and keeps
//! the capital of every sub-strategy, so combinators that rescale or restart
//! their children need no global replay. Each runner starts with capital 1.
//! Scaling a strategy by `c` means playing `c * S(h, K / c)`.

use std::sync::Arc;

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::{Cone, Gamble, Outcome, ProbabilityVector};
use crate::error::{Error, Result};
use crate::events::{EventClass, EventDescription};
use crate::pricing::PriceTree;
use crate::protocol::{payoff_at, ProtocolSpec};
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq)]
pub enum SkepticStrategy {
    Zero,
    /// The same generator coefficients on every trial.
    ConstantCoeffs(Vec<Rational>),
    /// Coefficients multiplied by the current capital (floored at zero).
    Proportional(Vec<Rational>),
    /// Optimal hedges of a price tree, scaled to start from capital 1.
    Superhedge(Arc<PriceTree>),
    ScaledSum { first: Box<SkepticStrategy>, second: Box<SkepticStrategy>, w1: Rational, w2: Rational },
    /// Zero for `n` trials, then the inner strategy in the protocol shifted by `n`.
    ShiftEmbed { inner: Box<SkepticStrategy>, n: usize },
    /// The inner strategy until capital reaches `target`, then zero; `None` never stops.
    StopWhen { inner: Box<SkepticStrategy>, target: Option<Rational> },
    RestartScale { family: Family, eps: Rational },
    /// Restarts like `RestartScale`, choosing `on_event` or `off_event` by residual membership.
    AlternatingRestart {
        on_event: Box<SkepticStrategy>,
        off_event: Box<SkepticStrategy>,
        event: EventDescription,
        eps: Rational,
    },
    /// The inner strategy continued after `prefix`, played from capital 1 in the shifted protocol.
    ShiftTransfer { inner: Box<SkepticStrategy>, prefix: Vec<Outcome> },
}

/// Members of a restart construction, keyed by the restart context.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// One member, played in the protocol shifted to the restart trial.
    Uniform(Box<SkepticStrategy>),
    /// One member per outcome (Markov protocols), keyed by the last outcome.
    ByState(Vec<SkepticStrategy>),
}

fn check_eps(eps: &Rational) -> Result<()> {
    if eps.is_positive() && eps < &Rational::one() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("eps {eps} outside (0, 1)")))
    }
}

pub fn scaled_sum(s1: SkepticStrategy, s2: SkepticStrategy, e1: Rational, e2: Rational) -> Result<SkepticStrategy> {
    if !e1.is_positive() || !e2.is_positive() {
        return Err(Error::InvalidParameter(format!("mixture weights {e1}, {e2} must be positive")));
    }
    Ok(SkepticStrategy::ScaledSum { first: Box::new(s1), second: Box::new(s2), w1: e1, w2: e2 })
}

pub fn shift_embed(s: SkepticStrategy, n: usize) -> SkepticStrategy {
    if n == 0 {
        return s;
    }
    SkepticStrategy::ShiftEmbed { inner: Box::new(s), n }
}

pub fn stop_when(s: SkepticStrategy, target: Option<Rational>) -> SkepticStrategy {
    SkepticStrategy::StopWhen { inner: Box::new(s), target }
}

pub fn restart_scale(family: Family, eps: Rational) -> Result<SkepticStrategy> {
    check_eps(&eps)?;
    if let Family::ByState(members) = &family {
        if members.is_empty() {
            return Err(Error::InvalidParameter("empty restart family".into()));
        }
    }
    Ok(SkepticStrategy::RestartScale { family, eps })
}

pub fn alternating_restart(
    s: SkepticStrategy,
    s_prime: SkepticStrategy,
    event: EventDescription,
    eps: Rational,
) -> Result<SkepticStrategy> {
    check_eps(&eps)?;
    if !matches!(event.class(), EventClass::GeneratedPermutable { .. }) {
        return Err(Error::UnsupportedEvent("alternating restart needs a singly generated event".into()));
    }
    Ok(SkepticStrategy::AlternatingRestart { on_event: Box::new(s), off_event: Box::new(s_prime), event, eps })
}

pub fn shift_transfer(s: SkepticStrategy, prefix: Vec<Outcome>) -> SkepticStrategy {
    if prefix.is_empty() || s == SkepticStrategy::Zero {
        return s;
    }
    SkepticStrategy::ShiftTransfer { inner: Box::new(s), prefix }
}

pub fn superhedge_strategy(tree: Arc<PriceTree>) -> Result<SkepticStrategy> {
    if tree.root_value().is_zero() {
        return Err(Error::ZeroRootPrice);
    }
    Ok(SkepticStrategy::Superhedge(tree))
}

/// Where a strategy starts: the protocol, how far it is shifted and, for
/// Markov protocols, the state before the first trial.
#[derive(Debug, Clone, Copy)]
pub struct StrategyContext<'a> {
    pub spec: &'a ProtocolSpec,
    pub offset: usize,
    pub omega0: Option<Outcome>,
}

impl<'a> StrategyContext<'a> {
    pub fn new(spec: &'a ProtocolSpec, omega0: Option<Outcome>) -> Self {
        Self { spec, offset: 0, omega0 }
    }

    /// Context of a strategy started after `t` more trials, the last being `last`.
    fn after(&self, t: usize, last: Outcome) -> Self {
        let omega0 = if self.spec.is_markov() { Some(last) } else { None };
        Self { spec: self.spec, offset: self.offset + t, omega0 }
    }
}

impl SkepticStrategy {
    /// Coefficients for the trial after `history`, given the current capital.
    pub fn coeffs(&self, ctx: StrategyContext<'_>, history: &[Outcome], capital: &Rational) -> Result<Vec<Rational>> {
        let mut runner = Runner::new(self, ctx)?;
        for &o in history {
            runner.observe(o)?;
        }
        runner.coeffs(capital)
    }

    /// Capitals `K_1..K_n` along `path`, starting from 1.
    pub fn capitals(&self, ctx: StrategyContext<'_>, path: &[Outcome]) -> Result<Vec<Rational>> {
        let mut runner = Runner::new(self, ctx)?;
        let mut out = Vec::with_capacity(path.len());
        for &o in path {
            runner.observe(o)?;
            out.push(runner.capital().clone());
        }
        Ok(out)
    }

    pub fn name(&self) -> &'static str {
        match self {
            SkepticStrategy::Zero => "zero",
            SkepticStrategy::ConstantCoeffs(_) => "constant",
            SkepticStrategy::Proportional(_) => "proportional",
            SkepticStrategy::Superhedge(_) => "superhedge",
            SkepticStrategy::ScaledSum { .. } => "scaled_sum",
            SkepticStrategy::ShiftEmbed { .. } => "shift_embed",
            SkepticStrategy::StopWhen { .. } => "stop_when",
            SkepticStrategy::RestartScale { .. } => "restart_scale",
            SkepticStrategy::AlternatingRestart { .. } => "alternating_restart",
            SkepticStrategy::ShiftTransfer { .. } => "shift_transfer",
        }
    }
}

/// Incremental execution of a strategy along one path.
#[derive(Debug, Clone)]
pub struct Runner<'a> {
    ctx: StrategyContext<'a>,
    history: Vec<Outcome>,
    capital: Rational,
    pending: Option<Vec<Rational>>,
    node: Node<'a>,
}

#[derive(Debug, Clone)]
enum Node<'a> {
    Zero,
    Constant(&'a [Rational]),
    Proportional(&'a [Rational]),
    Superhedge(&'a PriceTree),
    ScaledSum { a: Box<Runner<'a>>, b: Box<Runner<'a>>, w1: &'a Rational, w2: &'a Rational },
    ShiftEmbed { strategy: &'a SkepticStrategy, n: usize, inner: Option<Box<Runner<'a>>> },
    StopWhen { inner: Option<Box<Runner<'a>>>, target: Option<&'a Rational> },
    Restart { choice: Chooser<'a>, eps: &'a Rational, epoch_capital: Rational, member: Box<Runner<'a>> },
    Transfer { inner: Box<Runner<'a>> },
}

#[derive(Debug, Clone, Copy)]
enum Chooser<'a> {
    Family(&'a Family),
    Residual { on: &'a SkepticStrategy, off: &'a SkepticStrategy, event: &'a EventDescription },
}

impl<'a> Chooser<'a> {
    fn first(&self, ctx: &StrategyContext<'a>) -> Result<&'a SkepticStrategy> {
        match self {
            Chooser::Family(Family::Uniform(s)) => Ok(s),
            Chooser::Family(Family::ByState(members)) => by_state(members, ctx, ctx.omega0),
            Chooser::Residual { on, .. } => Ok(on),
        }
    }

    fn next(&self, ctx: &StrategyContext<'a>, history: &[Outcome]) -> Result<&'a SkepticStrategy> {
        match self {
            Chooser::Family(Family::Uniform(s)) => Ok(s),
            Chooser::Family(Family::ByState(members)) => by_state(members, ctx, history.last().copied()),
            Chooser::Residual { on, off, event } => Ok(if event.residual_in_generated(history)? { on } else { off }),
        }
    }
}

fn by_state<'a>(
    members: &'a [SkepticStrategy],
    ctx: &StrategyContext<'a>,
    state: Option<Outcome>,
) -> Result<&'a SkepticStrategy> {
    if !ctx.spec.is_markov() {
        return Err(Error::UnsupportedVariant("per-state restart family outside a markov protocol".into()));
    }
    if members.len() != ctx.spec.space().len() {
        return Err(Error::DimensionMismatch { expected: ctx.spec.space().len(), found: members.len() });
    }
    let state = state.ok_or(Error::MissingPreviousOutcome)?;
    Ok(&members[state.0])
}

fn check_coeffs(c: &[Rational]) -> Result<()> {
    if c.iter().all(rational::is_nonnegative) {
        Ok(())
    } else {
        Err(Error::Strategy("negative generator coefficient".into()))
    }
}

impl<'a> Runner<'a> {
    pub fn new(strategy: &'a SkepticStrategy, ctx: StrategyContext<'a>) -> Result<Self> {
        let node = match strategy {
            SkepticStrategy::Zero => Node::Zero,
            SkepticStrategy::ConstantCoeffs(c) => {
                check_coeffs(c)?;
                Node::Constant(c)
            }
            SkepticStrategy::Proportional(c) => {
                check_coeffs(c)?;
                Node::Proportional(c)
            }
            SkepticStrategy::Superhedge(tree) => {
                let compatible = if ctx.spec.is_markov() {
                    tree.omega0 == ctx.omega0
                } else {
                    ctx.spec.is_identical() || tree.offset == ctx.offset
                };
                if !compatible {
                    return Err(Error::Strategy("price tree was built for a different starting point".into()));
                }
                Node::Superhedge(tree)
            }
            SkepticStrategy::ScaledSum { first, second, w1, w2 } => {
                if !w1.is_positive() || !w2.is_positive() {
                    return Err(Error::InvalidParameter("mixture weights must be positive".into()));
                }
                Node::ScaledSum {
                    a: Box::new(Runner::new(first, ctx)?),
                    b: Box::new(Runner::new(second, ctx)?),
                    w1,
                    w2,
                }
            }
            SkepticStrategy::ShiftEmbed { inner, n } => {
                if ctx.spec.is_markov() {
                    return Err(Error::UnsupportedVariant("shift embedding in a markov protocol".into()));
                }
                let started = if *n == 0 { Some(Box::new(Runner::new(inner, ctx)?)) } else { None };
                Node::ShiftEmbed { strategy: inner, n: *n, inner: started }
            }
            SkepticStrategy::StopWhen { inner, target } => {
                Node::StopWhen { inner: Some(Box::new(Runner::new(inner, ctx)?)), target: target.as_ref() }
            }
            SkepticStrategy::RestartScale { family, eps } => {
                check_eps(eps)?;
                let choice = Chooser::Family(family);
                let member = Box::new(Runner::new(choice.first(&ctx)?, ctx)?);
                Node::Restart { choice, eps, epoch_capital: Rational::one(), member }
            }
            SkepticStrategy::AlternatingRestart { on_event, off_event, event, eps } => {
                check_eps(eps)?;
                let choice = Chooser::Residual { on: on_event, off: off_event, event };
                let member = Box::new(Runner::new(choice.first(&ctx)?, ctx)?);
                Node::Restart { choice, eps, epoch_capital: Rational::one(), member }
            }
            SkepticStrategy::ShiftTransfer { inner, prefix } => {
                let n = prefix.len();
                let offset = if ctx.spec.is_markov() {
                    return Err(Error::UnsupportedVariant("strategy transfer in a markov protocol".into()));
                } else if ctx.spec.is_identical() {
                    ctx.offset.saturating_sub(n)
                } else if ctx.offset >= n {
                    ctx.offset - n
                } else {
                    return Err(Error::Strategy(format!(
                        "transfer prefix of length {n} reaches before trial 1 at offset {}",
                        ctx.offset
                    )));
                };
                let mut primed = Runner::new(inner, StrategyContext { spec: ctx.spec, offset, omega0: None })?;
                for &o in prefix {
                    primed.observe(o)?;
                }
                Node::Transfer { inner: Box::new(primed) }
            }
        };
        Ok(Self { ctx, history: Vec::new(), capital: Rational::one(), pending: None, node })
    }

    /// The strategy's own capital after the trials observed so far.
    pub fn capital(&self) -> &Rational {
        &self.capital
    }

    pub fn history(&self) -> &[Outcome] {
        &self.history
    }

    /// The cone of the next trial.
    pub fn cone(&self) -> Result<&'a Cone> {
        let prev = self.history.last().copied().or(self.ctx.omega0);
        self.ctx.spec.cone_for(self.ctx.offset, self.history.len() + 1, prev)
    }

    /// Coefficients for the next trial; `capital` is the capital this strategy is credited with.
    pub fn coeffs(&mut self, capital: &Rational) -> Result<Vec<Rational>> {
        let cone = self.cone()?;
        let k = cone.generators().len();
        let trial = self.history.len() + 1;
        let zeros = || vec![Rational::zero(); k];
        let out = match &mut self.node {
            Node::Zero => zeros(),
            Node::Constant(c) => fit(c.to_vec(), k)?,
            Node::Proportional(c) => {
                let scale = capital.clone().max(Rational::zero());
                fit(c.iter().map(|x| x * &scale).collect(), k)?
            }
            Node::Superhedge(tree) => match tree.nodes.get(&self.history) {
                Some(node) if self.history.len() < tree.horizon => {
                    let root = tree.root_value();
                    fit(node.coeffs.iter().map(|c| c / &root).collect(), k)?
                }
                _ => zeros(),
            },
            Node::ScaledSum { a, b, w1, w2 } => {
                let ca = a.coeffs(&a.capital.clone())?;
                let cb = b.coeffs(&b.capital.clone())?;
                let total = &**w1 + &**w2;
                ca.iter().zip(&cb).map(|(x, y)| (x * &**w1 + y * &**w2) / &total).collect()
            }
            Node::ShiftEmbed { strategy, n, inner } => {
                if trial <= *n {
                    zeros()
                } else {
                    if inner.is_none() {
                        let last = *self.history.last().expect("n >= 1 trials observed");
                        *inner = Some(Box::new(Runner::new(strategy, self.ctx.after(*n, last))?));
                    }
                    let r = inner.as_mut().expect("started");
                    r.coeffs(&r.capital.clone())?
                }
            }
            Node::StopWhen { inner, target } => {
                if let Some(t) = target {
                    if capital >= *t {
                        *inner = None;
                    }
                }
                match inner {
                    Some(r) => r.coeffs(capital)?,
                    None => zeros(),
                }
            }
            Node::Restart { epoch_capital, member, .. } => {
                if epoch_capital.is_positive() {
                    let c = member.coeffs(&(capital / &*epoch_capital))?;
                    c.iter().map(|x| x * &*epoch_capital).collect()
                } else {
                    zeros()
                }
            }
            Node::Transfer { inner } => inner.coeffs(&inner.capital.clone())?,
        };
        if out.len() != k {
            return Err(Error::DimensionMismatch { expected: k, found: out.len() });
        }
        check_coeffs(&out)?;
        self.pending = Some(out.clone());
        Ok(out)
    }

    /// Records Reality's outcome for the current trial.
    pub fn observe(&mut self, omega: Outcome) -> Result<()> {
        if self.pending.is_none() {
            let own = self.capital.clone();
            self.coeffs(&own)?;
        }
        let coeffs = self.pending.take().expect("computed above");
        let cone = self.cone()?;
        self.capital += payoff_at(cone, &coeffs, omega)?;
        self.history.push(omega);
        let trial = self.history.len();
        match &mut self.node {
            Node::Zero | Node::Constant(_) | Node::Proportional(_) | Node::Superhedge(_) => {}
            Node::ScaledSum { a, b, .. } => {
                a.observe(omega)?;
                b.observe(omega)?;
            }
            Node::ShiftEmbed { inner, .. } => {
                if let Some(r) = inner {
                    r.observe(omega)?;
                }
            }
            Node::StopWhen { inner, .. } => {
                if let Some(r) = inner {
                    r.observe(omega)?;
                }
            }
            Node::Restart { choice, eps, epoch_capital, member } => {
                if epoch_capital.is_positive() {
                    member.observe(omega)?;
                    if self.capital >= &*epoch_capital / &**eps {
                        let next = choice.next(&self.ctx, &self.history)?;
                        **member = Runner::new(next, self.ctx.after(trial, omega))?;
                        *epoch_capital = self.capital.clone();
                    }
                }
            }
            Node::Transfer { inner } => inner.observe(omega)?,
        }
        Ok(())
    }

    /// Number of completed restart epochs, for restart strategies.
    pub fn epoch_capital(&self) -> Option<&Rational> {
        match &self.node {
            Node::Restart { epoch_capital, .. } => Some(epoch_capital),
            _ => None,
        }
    }
}

fn fit(c: Vec<Rational>, k: usize) -> Result<Vec<Rational>> {
    if c.len() == k {
        Ok(c)
    } else {
        Err(Error::DimensionMismatch { expected: k, found: c.len() })
    }
}

/// Everything a Reality policy may look at when choosing an outcome.
pub struct RealityView<'a> {
    pub spec: &'a ProtocolSpec,
    pub trial: usize,
    pub history: &'a [Outcome],
    pub cone: &'a Cone,
    pub gamble: &'a Gamble,
}

pub trait Reality {
    /// The Markov start state, announced before the first trial.
    fn initial_state(&mut self, spec: &ProtocolSpec) -> Result<Outcome>;
    fn choose(&mut self, view: &RealityView<'_>) -> Result<Outcome>;
}

#[derive(Debug, Clone, PartialEq)]
pub enum RealityKind {
    /// Plays the list, then repeats its last outcome.
    Scripted(Vec<Outcome>),
    Minimizer,
    /// Like `Minimizer` but only over outcomes with nonzero value.
    Evader,
    Sampler { probabilities: ProbabilityVector, seed: u64 },
    Interactive,
}

pub type RealityCallback<'c> = Box<dyn FnMut(&RealityView<'_>) -> Result<Outcome> + 'c>;

pub struct RealityStrategy<'c> {
    kind: RealityKind,
    initial: Option<Outcome>,
    rng: ChaCha8Rng,
    sampler: Option<(Vec<u64>, u64)>,
    callback: Option<RealityCallback<'c>>,
}

impl std::fmt::Debug for RealityStrategy<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealityStrategy").field("kind", &self.kind).field("initial", &self.initial).finish()
    }
}

pub fn build_reality<'c>(kind: RealityKind) -> Result<RealityStrategy<'c>> {
    let mut seed = 0;
    let mut sampler = None;
    match &kind {
        RealityKind::Scripted(script) if script.is_empty() => {
            return Err(Error::InvalidParameter("empty reality script".into()))
        }
        RealityKind::Sampler { probabilities, seed: s } => {
            seed = *s;
            sampler = Some(integer_weights(probabilities)?);
        }
        _ => {}
    }
    Ok(RealityStrategy { kind, initial: None, rng: ChaCha8Rng::seed_from_u64(seed), sampler, callback: None })
}

/// Weights over a common denominator that fits a machine word.
fn integer_weights(p: &ProbabilityVector) -> Result<(Vec<u64>, u64)> {
    let denom = p.weights().iter().fold(num_bigint::BigInt::one(), |acc, w| acc.lcm(w.denom()));
    let too_fine = || Error::InvalidParameter("sampler probabilities have too large a common denominator".into());
    let total = denom.to_u64().ok_or_else(too_fine)?;
    let nums = p
        .weights()
        .iter()
        .map(|w| (w.numer() * (&denom / w.denom())).to_u64().ok_or_else(too_fine))
        .collect::<Result<Vec<_>>>()?;
    Ok((nums, total))
}

impl<'c> RealityStrategy<'c> {
    pub fn with_initial_state(mut self, o: Outcome) -> Self {
        self.initial = Some(o);
        self
    }

    pub fn with_callback(mut self, f: RealityCallback<'c>) -> Self {
        self.callback = Some(f);
        self
    }

    pub fn kind(&self) -> &RealityKind {
        &self.kind
    }
}

impl Reality for RealityStrategy<'_> {
    fn initial_state(&mut self, spec: &ProtocolSpec) -> Result<Outcome> {
        let o = self.initial.unwrap_or(Outcome(0));
        if spec.space().contains(o) {
            Ok(o)
        } else {
            Err(Error::UnknownOutcome(format!("#{}", o.0)))
        }
    }

    fn choose(&mut self, view: &RealityView<'_>) -> Result<Outcome> {
        match &self.kind {
            RealityKind::Scripted(script) => Ok(script[(view.trial - 1).min(script.len() - 1)]),
            RealityKind::Minimizer => view.cone.evasion_outcome(view.gamble, false),
            RealityKind::Evader => view.cone.evasion_outcome(view.gamble, true),
            RealityKind::Sampler { .. } => {
                let (nums, total) = self.sampler.as_ref().expect("built with weights");
                let mut r = self.rng.gen_range(0..*total);
                for (i, &w) in nums.iter().enumerate() {
                    if r < w {
                        return Ok(Outcome(i));
                    }
                    r -= w;
                }
                unreachable!("weights sum to the denominator")
            }
            RealityKind::Interactive => match self.callback.as_mut() {
                Some(f) => f(view),
                None => Err(Error::InvalidParameter("interactive reality has no input".into())),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub omega0: Option<Outcome>,
    pub path: Vec<Outcome>,
    pub capital: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrudenceReport {
    pub prudent: bool,
    pub violation: Option<Violation>,
}

const WALK_BUDGET: u128 = 4_000_000;

/// Visits every node of the depth-`horizon` game tree in depth-first
/// lexicographic order with the strategy's capital there. The visitor returns
/// `false` to stop the walk.
pub fn walk_tree(
    s: &SkepticStrategy,
    ctx: StrategyContext<'_>,
    horizon: usize,
    visit: &mut dyn FnMut(&[Outcome], &Rational) -> bool,
) -> Result<()> {
    let m = ctx.spec.space().len();
    match (m as u128).checked_pow(horizon as u32) {
        Some(n) if n <= WALK_BUDGET => {}
        _ => return Err(Error::BudgetExceeded(format!("{m}^{horizon} paths"))),
    }
    let runner = Runner::new(s, ctx)?;
    if !visit(&[], runner.capital()) {
        return Ok(());
    }
    let mut path = Vec::with_capacity(horizon);
    walk(runner, horizon, &mut path, visit).map(|_| ())
}

fn walk(
    mut runner: Runner<'_>,
    horizon: usize,
    path: &mut Vec<Outcome>,
    visit: &mut dyn FnMut(&[Outcome], &Rational) -> bool,
) -> Result<bool> {
    if path.len() == horizon {
        return Ok(true);
    }
    let own = runner.capital().clone();
    runner.coeffs(&own)?;
    let m = runner.ctx.spec.space().len();
    for i in 0..m {
        let mut child = runner.clone();
        child.observe(Outcome(i))?;
        path.push(Outcome(i));
        let go_on = visit(path, child.capital()) && walk(child, horizon, path, visit)?;
        path.pop();
        if !go_on {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Exhaustive check that capital never goes negative within `horizon`
/// trials; Markov protocols are checked from every start state.
pub fn prudence_check(s: &SkepticStrategy, spec: &ProtocolSpec, horizon: usize) -> Result<PrudenceReport> {
    let starts: Vec<Option<Outcome>> =
        if spec.is_markov() { spec.space().outcomes().map(Some).collect() } else { vec![None] };
    for omega0 in starts {
        let report = prudence_check_from(s, StrategyContext::new(spec, omega0), horizon)?;
        if !report.prudent {
            return Ok(report);
        }
    }
    Ok(PrudenceReport { prudent: true, violation: None })
}

pub fn prudence_check_from(s: &SkepticStrategy, ctx: StrategyContext<'_>, horizon: usize) -> Result<PrudenceReport> {
    let mut violation = None;
    walk_tree(s, ctx, horizon, &mut |path, capital| {
        if capital.is_negative() {
            violation = Some(Violation { omega0: ctx.omega0, path: path.to_vec(), capital: capital.clone() });
            false
        } else {
            true
        }
    })?;
    Ok(PrudenceReport { prudent: violation.is_none(), violation })
}

/// A length-`n` prefix along which every payoff of `s` is nonpositive,
/// built by letting Reality evade each announced gamble.
pub fn find_no_gain_prefix(s: &SkepticStrategy, n: usize, spec: &ProtocolSpec) -> Result<Vec<Outcome>> {
    if spec.is_markov() {
        return Err(Error::UnsupportedVariant("no-gain prefixes in a markov protocol".into()));
    }
    let mut runner = Runner::new(s, StrategyContext::new(spec, None))?;
    for _ in 0..n {
        let own = runner.capital().clone();
        let coeffs = runner.coeffs(&own)?;
        let cone = runner.cone()?;
        let omega = cone.evasion_outcome(&cone.combine(&coeffs)?, false)?;
        runner.observe(omega)?;
    }
    Ok(runner.history().to_vec())
}
