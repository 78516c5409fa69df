//! Gambles and finitely generated cones of gambles over a finite outcome space.
//!
//! A [`Cone`] is the set `{ sum_i c_i G_i : c_i >= 0 }` of its generators, so
//! closure under addition and nonnegative scaling holds by construction. What
//! has to be decided is coherence (the cone misses the strictly positive
//! orthant), and that is done by an exact LP which returns either a
//! calibrating probability vector or a strictly positive combination.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, VarKind};
use crate::rational::{self, Rational};

/// Index of an outcome in its [`OutcomeSpace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Outcome(pub usize);

impl Outcome {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeInfo {
    pub label: String,
    pub value: Option<Rational>,
}

/// The finite set of outcomes Reality may announce on a trial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeSpace {
    outcomes: Vec<OutcomeInfo>,
}

impl OutcomeSpace {
    pub fn new(outcomes: Vec<OutcomeInfo>) -> Result<Self> {
        if outcomes.is_empty() {
            return Err(Error::EmptyOutcomeSpace);
        }
        for (i, a) in outcomes.iter().enumerate() {
            if outcomes[..i].iter().any(|b| b.label == a.label) {
                return Err(Error::DuplicateLabel(a.label.clone()));
            }
        }
        Ok(Self { outcomes })
    }

    pub fn from_labels<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::new(
            labels
                .iter()
                .map(|l| OutcomeInfo { label: l.as_ref().to_string(), value: None })
                .collect(),
        )
    }

    /// Numeric outcomes labelled by their own decimal value, e.g. `{-1, 0, 1}`.
    pub fn numeric(values: &[i64]) -> Result<Self> {
        Self::new(
            values
                .iter()
                .map(|&v| OutcomeInfo { label: v.to_string(), value: Some(rational::int(v)) })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = Outcome> + '_ {
        (0..self.outcomes.len()).map(Outcome)
    }

    pub fn info(&self) -> &[OutcomeInfo] {
        &self.outcomes
    }

    pub fn label(&self, o: Outcome) -> &str {
        &self.outcomes[o.0].label
    }

    pub fn value(&self, o: Outcome) -> Option<&Rational> {
        self.outcomes[o.0].value.as_ref()
    }

    /// Outcomes without a numeric value count as nonzero.
    pub fn is_nonzero(&self, o: Outcome) -> bool {
        self.value(o).is_none_or(|v| !v.is_zero())
    }

    pub fn outcome(&self, label: &str) -> Result<Outcome> {
        self.outcomes
            .iter()
            .position(|o| o.label == label)
            .map(Outcome)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }

    pub fn contains(&self, o: Outcome) -> bool {
        o.0 < self.outcomes.len()
    }

    /// Parses a comma-separated list of labels; the empty string is the empty sequence.
    pub fn parse_sequence(&self, text: &str) -> Result<Vec<Outcome>> {
        if text.trim().is_empty() {
            return Ok(Vec::new());
        }
        text.split(',').map(|l| self.outcome(l.trim())).collect()
    }

    pub fn labels_of(&self, seq: &[Outcome]) -> Vec<String> {
        seq.iter().map(|&o| self.label(o).to_string()).collect()
    }
}

/// A payoff vector, one exact entry per outcome.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gamble(Vec<Rational>);

impl Gamble {
    pub fn new(payoffs: Vec<Rational>) -> Self {
        Self(payoffs)
    }

    pub fn from_ints(payoffs: &[i64]) -> Self {
        Self(payoffs.iter().map(|&v| rational::int(v)).collect())
    }

    pub fn zero(len: usize) -> Self {
        Self(vec![Rational::zero(); len])
    }

    pub fn constant(len: usize, value: Rational) -> Self {
        Self(vec![value; len])
    }

    pub fn indicator(len: usize, members: &[Outcome]) -> Self {
        let mut v = vec![Rational::zero(); len];
        for o in members {
            v[o.0] = Rational::one();
        }
        Self(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn payoffs(&self) -> &[Rational] {
        &self.0
    }

    pub fn payoff(&self, o: Outcome) -> &Rational {
        &self.0[o.0]
    }

    pub fn min(&self) -> Rational {
        rational::min_of(&self.0).unwrap_or_else(Rational::zero)
    }

    pub fn max(&self) -> Rational {
        rational::max_of(&self.0).unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    pub fn is_strictly_positive(&self) -> bool {
        !self.0.is_empty() && self.0.iter().all(Signed::is_positive)
    }

    pub fn scale(&self, factor: &Rational) -> Self {
        Self(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn neg(&self) -> Self {
        Self(self.0.iter().map(|v| -v).collect())
    }

    pub fn add(&self, other: &Gamble) -> Self {
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn add_constant(&self, c: &Rational) -> Self {
        Self(self.0.iter().map(|v| v + c).collect())
    }

    fn check_len(&self, expected: usize) -> Result<()> {
        if self.0.len() == expected {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found: self.0.len() })
        }
    }
}

impl fmt::Display for Gamble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

/// Nonnegative weights summing to exactly one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbabilityVector(Vec<Rational>);

impl ProbabilityVector {
    pub fn new(weights: Vec<Rational>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidProbability("no weights".into()));
        }
        if let Some(w) = weights.iter().find(|w| w.is_negative()) {
            return Err(Error::InvalidProbability(format!("negative weight {w}")));
        }
        let total: Rational = weights.iter().sum();
        if !total.is_one() {
            return Err(Error::InvalidProbability(format!("weights sum to {total}")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidProbability("no weights".into()));
        }
        Self::new(vec![rational::ratio(1, len as i64); len])
    }

    pub fn weights(&self) -> &[Rational] {
        &self.0
    }

    pub fn weight(&self, o: Outcome) -> &Rational {
        &self.0[o.0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn expectation(&self, f: &Gamble) -> Rational {
        rational::dot(&self.0, f.payoffs())
    }
}

/// How a cone was described; the generators are compiled from it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConeKind {
    RawGenerators,
    ZeroCone(ProbabilityVector),
    NonpositiveCone(ProbabilityVector),
    SpanOf(Vec<Gamble>),
}

/// Input to [`build_cone`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConeSpec {
    Raw(Vec<Gamble>),
    Span(Vec<Gamble>),
    Zero(ProbabilityVector),
    Nonpositive(ProbabilityVector),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoherenceVerdict {
    Coherent { calibrating: ProbabilityVector },
    Incoherent { witness: Vec<Rational> },
}

impl CoherenceVerdict {
    pub fn is_coherent(&self) -> bool {
        matches!(self, CoherenceVerdict::Coherent { .. })
    }

    /// Re-checks the certificate against the cone's generators by direct evaluation.
    pub fn verify(&self, cone: &Cone) -> bool {
        match self {
            CoherenceVerdict::Coherent { calibrating } => {
                calibrating.len() == cone.arity()
                    && cone.generators().iter().all(|g| !calibrating.expectation(g).is_positive())
            }
            CoherenceVerdict::Incoherent { witness } => {
                witness.len() == cone.generators().len()
                    && witness.iter().all(rational::is_nonnegative)
                    && cone.combine(witness).map(|g| g.is_strictly_positive()).unwrap_or(false)
            }
        }
    }
}

/// Optimal one-trial superhedge: `price + hedge(w) >= f(w)` for every outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UpperPrice {
    pub price: Rational,
    pub hedge: Gamble,
    pub coeffs: Vec<Rational>,
}

#[derive(Debug, Clone)]
pub struct Cone {
    space: Arc<OutcomeSpace>,
    generators: Vec<Gamble>,
    kind: ConeKind,
    coherence: OnceLock<CoherenceVerdict>,
}

impl PartialEq for Cone {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.generators == other.generators && self.kind == other.kind
    }
}

/// Compiles a cone description into generators over `space`.
pub fn build_cone(spec: ConeSpec, space: &Arc<OutcomeSpace>) -> Result<Cone> {
    let m = space.len();
    let (generators, kind) = match spec {
        ConeSpec::Raw(gens) => {
            for g in &gens {
                g.check_len(m)?;
            }
            (gens, ConeKind::RawGenerators)
        }
        ConeSpec::Span(gens) => {
            for g in &gens {
                g.check_len(m)?;
            }
            let doubled = gens.iter().flat_map(|g| [g.clone(), g.neg()]).collect();
            (doubled, ConeKind::SpanOf(gens))
        }
        ConeSpec::Zero(p) => {
            check_weights(&p, m)?;
            (zero_mean_basis(&p), ConeKind::ZeroCone(p))
        }
        ConeSpec::Nonpositive(p) => {
            check_weights(&p, m)?;
            let mut gens = zero_mean_basis(&p);
            gens.push(Gamble::constant(m, -Rational::one()));
            (gens, ConeKind::NonpositiveCone(p))
        }
    };
    Ok(Cone { space: Arc::clone(space), generators, kind, coherence: OnceLock::new() })
}

fn check_weights(p: &ProbabilityVector, m: usize) -> Result<()> {
    if p.len() == m {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: m, found: p.len() })
    }
}

/// `± (e_i - (p_i / p_j) e_j)` for every `i != j`, with `j` the first outcome of positive weight.
fn zero_mean_basis(p: &ProbabilityVector) -> Vec<Gamble> {
    let m = p.len();
    let pivot = p.weights().iter().position(Signed::is_positive).expect("weights sum to one");
    let mut gens = Vec::with_capacity(2 * (m - 1));
    for i in (0..m).filter(|&i| i != pivot) {
        let mut v = vec![Rational::zero(); m];
        v[i] = Rational::one();
        v[pivot] = -(&p.weights()[i] / &p.weights()[pivot]);
        let g = Gamble::new(v);
        let neg = g.neg();
        gens.push(g);
        gens.push(neg);
    }
    gens
}

impl Cone {
    pub fn space(&self) -> &Arc<OutcomeSpace> {
        &self.space
    }

    pub fn arity(&self) -> usize {
        self.space.len()
    }

    pub fn generators(&self) -> &[Gamble] {
        &self.generators
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn zero_coeffs(&self) -> Vec<Rational> {
        vec![Rational::zero(); self.generators.len()]
    }

    /// `sum_i coeffs_i G_i`; signs of the coefficients are not checked here.
    pub fn combine(&self, coeffs: &[Rational]) -> Result<Gamble> {
        if coeffs.len() != self.generators.len() {
            return Err(Error::DimensionMismatch { expected: self.generators.len(), found: coeffs.len() });
        }
        let mut out = vec![Rational::zero(); self.arity()];
        for (c, g) in coeffs.iter().zip(&self.generators) {
            if c.is_zero() {
                continue;
            }
            for (acc, v) in out.iter_mut().zip(g.payoffs()) {
                *acc += c * v;
            }
        }
        Ok(Gamble::new(out))
    }

    /// Nonnegative generator coefficients reproducing `f`, if `f` is in the cone.
    pub fn membership(&self, f: &Gamble) -> Result<Option<Vec<Rational>>> {
        f.check_len(self.arity())?;
        if f.is_zero() {
            return Ok(Some(self.zero_coeffs()));
        }
        let k = self.generators.len();
        let mut lp = LinearProgram::new(Sense::Minimize, vec![Rational::zero(); k], vec![VarKind::NonNegative; k]);
        for o in self.space.outcomes() {
            let row = self.generators.iter().map(|g| g.payoff(o).clone()).collect();
            lp.add(row, Relation::Eq, f.payoff(o).clone());
        }
        let r = solve_lp(&lp)?;
        Ok(match r.status {
            LpStatus::Optimal => Some(r.primal),
            _ => None,
        })
    }

    pub fn contains(&self, f: &Gamble) -> Result<bool> {
        Ok(self.membership(f)?.is_some())
    }

    /// Decides coherence; the verdict is computed once and cached.
    pub fn check_coherence(&self) -> Result<&CoherenceVerdict> {
        if let Some(v) = self.coherence.get() {
            return Ok(v);
        }
        let verdict = self.solve_coherence()?;
        let _ = self.coherence.set(verdict);
        Ok(self.coherence.get().expect("just set"))
    }

    pub fn is_coherent(&self) -> Result<bool> {
        Ok(self.check_coherence()?.is_coherent())
    }

    fn solve_coherence(&self) -> Result<CoherenceVerdict> {
        // max s  s.t.  sum_i c_i G_i(w) - s >= 0 for all w,  sum_i c_i <= 1,  c >= 0
        let k = self.generators.len();
        let mut objective = vec![Rational::zero(); k];
        objective.push(Rational::one());
        let mut vars = vec![VarKind::NonNegative; k];
        vars.push(VarKind::Free);
        let mut lp = LinearProgram::new(Sense::Maximize, objective, vars);
        for o in self.space.outcomes() {
            let mut row: Vec<Rational> = self.generators.iter().map(|g| g.payoff(o).clone()).collect();
            row.push(-Rational::one());
            lp.add(row, Relation::Ge, Rational::zero());
        }
        let mut budget = vec![Rational::one(); k];
        budget.push(Rational::zero());
        lp.add(budget, Relation::Le, Rational::one());

        let r = solve_lp(&lp)?;
        if r.status != LpStatus::Optimal {
            return Err(Error::SolverFault(format!("coherence program ended {:?}", r.status)));
        }
        let verdict = if r.objective.is_positive() {
            CoherenceVerdict::Incoherent { witness: r.primal[..k].to_vec() }
        } else {
            let weights = r.dual[..self.arity()].iter().map(|y| -y).collect();
            let calibrating = ProbabilityVector::new(weights)
                .map_err(|e| Error::SolverFault(format!("dual is not a probability vector: {e}")))?;
            CoherenceVerdict::Coherent { calibrating }
        };
        if !verdict.verify(self) {
            return Err(Error::SolverFault("coherence certificate failed re-verification".into()));
        }
        Ok(verdict)
    }

    fn require_coherent(&self) -> Result<()> {
        match self.check_coherence()? {
            CoherenceVerdict::Coherent { .. } => Ok(()),
            CoherenceVerdict::Incoherent { witness } => {
                Err(Error::Incoherent { witness: rational::format_all(witness) })
            }
        }
    }

    /// Smallest `price` such that some cone member `h` has `price + h >= f`.
    pub fn one_step_upper_price(&self, f: &Gamble) -> Result<UpperPrice> {
        f.check_len(self.arity())?;
        self.require_coherent()?;
        let (lo, hi) = (f.min(), f.max());
        if lo == hi {
            return Ok(UpperPrice { price: lo, hedge: Gamble::zero(self.arity()), coeffs: self.zero_coeffs() });
        }
        let k = self.generators.len();
        let mut objective = vec![Rational::one()];
        objective.extend(std::iter::repeat_with(Rational::zero).take(k));
        let mut vars = vec![VarKind::Free];
        vars.extend(std::iter::repeat_n(VarKind::NonNegative, k));
        let mut lp = LinearProgram::new(Sense::Minimize, objective, vars);
        for o in self.space.outcomes() {
            let mut row = vec![Rational::one()];
            row.extend(self.generators.iter().map(|g| g.payoff(o).clone()));
            lp.add(row, Relation::Ge, f.payoff(o).clone());
        }
        let r = solve_lp(&lp)?;
        match r.status {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => {
                return Err(Error::SolverFault("pricing program unbounded for a coherent cone".into()))
            }
            LpStatus::Infeasible => return Err(Error::SolverFault("pricing program infeasible".into())),
        }
        let coeffs = r.primal[1..].to_vec();
        let hedge = self.combine(&coeffs)?;
        Ok(UpperPrice { price: r.objective, hedge, coeffs })
    }

    pub fn one_step_lower_price(&self, f: &Gamble) -> Result<Rational> {
        Ok(-self.one_step_upper_price(&f.neg())?.price)
    }

    /// An outcome minimizing `f`, lowest index first. With `require_nonzero`
    /// only outcomes of nonzero value are eligible and the payoff must be `<= 0`.
    pub fn evasion_outcome(&self, f: &Gamble, require_nonzero: bool) -> Result<Outcome> {
        if !self.contains(f)? {
            return Err(Error::NotInCone);
        }
        let eligible = self.space.outcomes().filter(|&o| !require_nonzero || self.space.is_nonzero(o));
        let mut best: Option<Outcome> = None;
        for o in eligible {
            if best.is_none_or(|b| f.payoff(o) < f.payoff(b)) {
                best = Some(o);
            }
        }
        match best {
            Some(o) if !f.payoff(o).is_positive() => Ok(o),
            _ if require_nonzero => Err(Error::NoNonzeroEvasion),
            _ => Err(Error::SolverFault("coherent cone member is positive everywhere".into())),
        }
    }
}
