//! The three betting protocols as validated state machines.
//!
//! Trial indices are 1-based. A game starts with capital 1 and each trial
//! updates it by `K_n := K_{n-1} + F_n(w_n)`.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::cone::{Cone, Gamble, Outcome, OutcomeSpace};
use crate::error::{Error, Result};
use crate::events::{EventDescription, Membership};
use crate::rational::{self, Rational};
use crate::strategy::{Reality, RealityView, Runner, SkepticStrategy, StrategyContext};

#[derive(Debug, Clone, PartialEq)]
pub enum Variant {
    /// One cone for every trial.
    Identical(Cone),
    /// Cone `n` for trial `n`; past the end of the list the last cone repeats.
    IndependentSeq(Vec<Cone>),
    /// One cone per previous outcome, indexed like the outcome space.
    Markov(Vec<Cone>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    space: Arc<OutcomeSpace>,
    variant: Variant,
    horizon_hint: Option<usize>,
}

impl ProtocolSpec {
    pub fn new(space: Arc<OutcomeSpace>, variant: Variant) -> Result<Self> {
        let cones: &[Cone] = match &variant {
            Variant::Identical(c) => std::slice::from_ref(c),
            Variant::IndependentSeq(cs) => {
                if cs.is_empty() {
                    return Err(Error::InvalidParameter("independent protocol needs at least one cone".into()));
                }
                cs
            }
            Variant::Markov(cs) => {
                if cs.len() != space.len() {
                    return Err(Error::DimensionMismatch { expected: space.len(), found: cs.len() });
                }
                cs
            }
        };
        for cone in cones {
            if **cone.space() != *space {
                return Err(Error::DimensionMismatch { expected: space.len(), found: cone.arity() });
            }
            if let crate::cone::CoherenceVerdict::Incoherent { witness } = cone.check_coherence()? {
                return Err(Error::Incoherent { witness: rational::format_all(witness) });
            }
        }
        Ok(Self { space, variant, horizon_hint: None })
    }

    pub fn identical(cone: Cone) -> Result<Self> {
        let space = Arc::clone(cone.space());
        Self::new(space, Variant::Identical(cone))
    }

    pub fn independent(cones: Vec<Cone>) -> Result<Self> {
        let space = cones
            .first()
            .map(|c| Arc::clone(c.space()))
            .ok_or_else(|| Error::InvalidParameter("independent protocol needs at least one cone".into()))?;
        Self::new(space, Variant::IndependentSeq(cones))
    }

    pub fn markov(cones: Vec<Cone>) -> Result<Self> {
        let space = cones
            .first()
            .map(|c| Arc::clone(c.space()))
            .ok_or_else(|| Error::InvalidParameter("markov protocol needs one cone per outcome".into()))?;
        Self::new(space, Variant::Markov(cones))
    }

    pub fn with_horizon_hint(mut self, hint: Option<usize>) -> Self {
        self.horizon_hint = hint;
        self
    }

    pub fn horizon_hint(&self) -> Option<usize> {
        self.horizon_hint
    }

    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn variant(&self) -> &Variant {
        &self.variant
    }

    pub fn is_markov(&self) -> bool {
        matches!(self.variant, Variant::Markov(_))
    }

    pub fn is_identical(&self) -> bool {
        matches!(self.variant, Variant::Identical(_))
    }

    pub fn cones(&self) -> &[Cone] {
        match &self.variant {
            Variant::Identical(c) => std::slice::from_ref(c),
            Variant::IndependentSeq(cs) | Variant::Markov(cs) => cs,
        }
    }

    /// The cone governing trial `n`; `prev` is the previous outcome and is
    /// required exactly for the Markov variant.
    pub fn cone_at(&self, n: usize, prev: Option<Outcome>) -> Result<&Cone> {
        if n == 0 {
            return Err(Error::ZeroTrialIndex);
        }
        match (&self.variant, prev) {
            (Variant::Markov(cs), Some(p)) => cs.get(p.0).ok_or_else(|| Error::UnknownOutcome(format!("#{}", p.0))),
            (Variant::Markov(_), None) => Err(Error::MissingPreviousOutcome),
            (_, Some(_)) => Err(Error::UnexpectedPreviousOutcome),
            (Variant::Identical(c), None) => Ok(c),
            (Variant::IndependentSeq(cs), None) => Ok(&cs[(n - 1).min(cs.len() - 1)]),
        }
    }

    /// Cone for trial `n` of the protocol shifted by `offset`, with the
    /// previous outcome supplied only when the variant needs it.
    pub fn cone_for(&self, offset: usize, n: usize, prev: Option<Outcome>) -> Result<&Cone> {
        let prev = if self.is_markov() { Some(prev.ok_or(Error::MissingPreviousOutcome)?) } else { None };
        self.cone_at(offset + n, prev)
    }

    /// The protocol whose trial `k` uses the cone of trial `n + k`.
    pub fn shifted(&self, n: usize) -> Result<Self> {
        let variant = match &self.variant {
            Variant::Identical(c) => Variant::Identical(c.clone()),
            Variant::IndependentSeq(cs) => Variant::IndependentSeq(cs[n.min(cs.len() - 1)..].to_vec()),
            Variant::Markov(_) => return Err(Error::UnsupportedVariant("shifting a markov protocol".into())),
        };
        Ok(Self { space: Arc::clone(&self.space), variant, horizon_hint: self.horizon_hint })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameState {
    pub omega0: Option<Outcome>,
    pub history: Vec<Outcome>,
    pub capital: Rational,
    pub prudence_floor_violated: bool,
}

impl GameState {
    pub fn initial(spec: &ProtocolSpec, omega0: Option<Outcome>) -> Result<Self> {
        match (spec.is_markov(), omega0) {
            (true, None) => return Err(Error::MissingPreviousOutcome),
            (false, Some(_)) => return Err(Error::UnexpectedPreviousOutcome),
            (true, Some(o)) if !spec.space().contains(o) => return Err(Error::UnknownOutcome(format!("#{}", o.0))),
            _ => {}
        }
        Ok(Self { omega0, history: Vec::new(), capital: Rational::one(), prudence_floor_violated: false })
    }

    /// Index of the next trial.
    pub fn next_trial(&self) -> usize {
        self.history.len() + 1
    }

    pub fn prev(&self) -> Option<Outcome> {
        self.history.last().copied().or(self.omega0)
    }

    pub fn cone<'s>(&self, spec: &'s ProtocolSpec) -> Result<&'s Cone> {
        spec.cone_for(0, self.next_trial(), self.prev())
    }

    fn advance(&self, payoff: &Rational, omega: Outcome) -> Self {
        let capital = &self.capital + payoff;
        let mut history = self.history.clone();
        history.push(omega);
        Self {
            omega0: self.omega0,
            history,
            prudence_floor_violated: self.prudence_floor_violated || capital.is_negative(),
            capital,
        }
    }
}

/// One trial: Skeptic's gamble `f` must lie in the trial's cone.
pub fn step(state: &GameState, spec: &ProtocolSpec, f: &Gamble, omega: Outcome) -> Result<GameState> {
    let cone = state.cone(spec)?;
    if !spec.space().contains(omega) {
        return Err(Error::UnknownOutcome(format!("#{}", omega.0)));
    }
    if !cone.contains(f)? {
        return Err(Error::NotInCone);
    }
    Ok(state.advance(f.payoff(omega), omega))
}

/// One trial with the move given as generator coefficients, which must be nonnegative.
pub fn step_coeffs(
    state: &GameState,
    spec: &ProtocolSpec,
    coeffs: &[Rational],
    omega: Outcome,
) -> Result<(GameState, Rational)> {
    let cone = state.cone(spec)?;
    if !spec.space().contains(omega) {
        return Err(Error::UnknownOutcome(format!("#{}", omega.0)));
    }
    if !coeffs.iter().all(rational::is_nonnegative) {
        return Err(Error::NotInCone);
    }
    let f = cone.combine(coeffs)?;
    let payoff = f.payoff(omega).clone();
    Ok((state.advance(&payoff, omega), payoff))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub n: usize,
    pub coeffs: Vec<Rational>,
    pub payoff: Rational,
    pub omega: Outcome,
    pub capital: Rational,
    pub membership: Option<Membership>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub omega0: Option<Outcome>,
    pub steps: Vec<TraceStep>,
    /// Set when the run stopped early; the steps before the fault are kept.
    pub aborted: Option<Error>,
}

impl Trace {
    pub fn is_valid(&self) -> bool {
        self.aborted.is_none()
    }

    pub fn capitals(&self) -> Vec<Rational> {
        self.steps.iter().map(|s| s.capital.clone()).collect()
    }

    pub fn outcomes(&self) -> Vec<Outcome> {
        self.steps.iter().map(|s| s.omega).collect()
    }

    pub fn final_capital(&self) -> Rational {
        self.steps.last().map_or_else(Rational::one, |s| s.capital.clone())
    }

    pub fn max_capital(&self) -> Rational {
        self.steps.iter().map(|s| s.capital.clone()).fold(Rational::one(), |a, b| a.max(b))
    }

    /// Re-checks capital conservation and the legality of every move.
    pub fn verify(&self, spec: &ProtocolSpec) -> Result<()> {
        let mut state = GameState::initial(spec, self.omega0)?;
        for (i, s) in self.steps.iter().enumerate() {
            if s.n != i + 1 {
                return Err(Error::Document(format!("step {} is numbered {}", i + 1, s.n)));
            }
            let f = state.cone(spec)?.combine(&s.coeffs)?;
            let next = step(&state, spec, &f, s.omega)?;
            if f.payoff(s.omega) != &s.payoff {
                return Err(Error::Document(format!("step {}: payoff {} does not match the move", s.n, s.payoff)));
            }
            if next.capital != s.capital || &next.capital - &state.capital != s.payoff {
                return Err(Error::Document(format!("step {}: capital {} does not follow", s.n, s.capital)));
            }
            state = next;
        }
        Ok(())
    }
}

/// Plays `n` trials of `skeptic` against `reality`. Faults end the run and
/// are recorded in the returned trace.
pub fn run(
    spec: &ProtocolSpec,
    skeptic: &SkepticStrategy,
    reality: &mut dyn Reality,
    n: usize,
    event: Option<&EventDescription>,
) -> Trace {
    let mut trace = Trace { omega0: None, steps: Vec::new(), aborted: None };
    if let Err(e) = run_into(spec, skeptic, reality, n, event, &mut trace) {
        trace.aborted = Some(e);
    }
    trace
}

fn run_into(
    spec: &ProtocolSpec,
    skeptic: &SkepticStrategy,
    reality: &mut dyn Reality,
    n: usize,
    event: Option<&EventDescription>,
    trace: &mut Trace,
) -> Result<()> {
    let omega0 = if spec.is_markov() { Some(reality.initial_state(spec)?) } else { None };
    trace.omega0 = omega0;
    let mut state = GameState::initial(spec, omega0)?;
    let ctx = StrategyContext { spec, offset: 0, omega0 };
    let mut runner = Runner::new(skeptic, ctx)?;
    for _ in 0..n {
        let coeffs = runner.coeffs(&state.capital)?;
        let cone = state.cone(spec)?;
        let gamble = cone.combine(&coeffs)?;
        let view = RealityView { spec, trial: state.next_trial(), history: &state.history, cone, gamble: &gamble };
        let omega = reality.choose(&view)?;
        let (next, payoff) = step_coeffs(&state, spec, &coeffs, omega)?;
        runner.observe(omega)?;
        let membership = match event {
            Some(e) => Some(e.membership_prefix(&next.history)?),
            None => None,
        };
        trace.steps.push(TraceStep {
            n: next.history.len(),
            coeffs,
            payoff,
            omega,
            capital: next.capital.clone(),
            membership,
        });
        state = next;
    }
    Ok(())
}

/// Gamble played from the given coefficients, zero when every coefficient is zero.
pub fn payoff_at(cone: &Cone, coeffs: &[Rational], omega: Outcome) -> Result<Rational> {
    if coeffs.len() != cone.generators().len() {
        return Err(Error::DimensionMismatch { expected: cone.generators().len(), found: coeffs.len() });
    }
    Ok(coeffs
        .iter()
        .zip(cone.generators())
        .filter(|(c, _)| !c.is_zero())
        .map(|(c, g)| c * g.payoff(omega))
        .sum())
}
