//! Upper and lower probabilities of cylinder events by backward induction.
//!
//! The value of a node is the one-trial upper price of the values of its
//! children; leaves carry the event indicator. The optimal hedges stored in
//! the tree form a superhedging strategy, so every price comes with a
//! certificate. [`oracle_price`] solves the same problem as one LP over the
//! whole tree and serves as an independent check.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::cone::{Gamble, Outcome};
use crate::error::{Error, Result};
use crate::events::{all_sequences, EventClass, EventDescription, Membership};
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, VarKind};
use crate::protocol::ProtocolSpec;
use crate::rational::Rational;

/// Largest number of tree nodes backward induction will visit.
pub const NODE_BUDGET: usize = 1_000_000;
/// Largest tree the whole-tree LP oracle accepts.
pub const ORACLE_BUDGET: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PriceNode {
    pub value: Rational,
    pub coeffs: Vec<Rational>,
    pub hedge: Gamble,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceTree {
    pub event: EventDescription,
    pub horizon: usize,
    pub offset: usize,
    pub omega0: Option<Outcome>,
    /// Internal nodes, keyed by the prefix leading to them.
    pub nodes: BTreeMap<Vec<Outcome>, PriceNode>,
    /// Event indicator at each leaf.
    pub leaves: BTreeMap<Vec<Outcome>, bool>,
}

impl PriceTree {
    pub fn root_value(&self) -> Rational {
        self.value(&[]).expect("tree has a root")
    }

    pub fn value(&self, prefix: &[Outcome]) -> Option<Rational> {
        if let Some(&leaf) = self.leaves.get(prefix) {
            return Some(if leaf { Rational::one() } else { Rational::zero() });
        }
        self.nodes.get(prefix).map(|n| n.value.clone())
    }

    pub fn node(&self, prefix: &[Outcome]) -> Option<&PriceNode> {
        self.nodes.get(prefix)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Impossible,
    Certain,
    FullyUncertain,
    FullyPlausible,
    Unsupported,
    None,
}

impl Classification {
    /// The most specific label: impossible and certain first, then fully
    /// uncertain, fully plausible, unsupported.
    pub fn of(lower: &Rational, upper: &Rational) -> Self {
        let (lo0, up1) = (lower.is_zero(), upper.is_one());
        if upper.is_zero() {
            Classification::Impossible
        } else if lower.is_one() {
            Classification::Certain
        } else if lo0 && up1 {
            Classification::FullyUncertain
        } else if up1 {
            Classification::FullyPlausible
        } else if lo0 {
            Classification::Unsupported
        } else {
            Classification::None
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Impossible => "impossible",
            Classification::Certain => "certain",
            Classification::FullyUncertain => "fully_uncertain",
            Classification::FullyPlausible => "fully_plausible",
            Classification::Unsupported => "unsupported",
            Classification::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PricedResult {
    pub upper: Rational,
    pub lower: Rational,
    pub certificate_upper: PriceTree,
    /// Tree for the complement, whose price gives the lower probability.
    pub certificate_lower: PriceTree,
    pub classification: Classification,
}

fn cylinder_horizon(event: &EventDescription) -> Result<usize> {
    match event.class() {
        EventClass::Cylinder { horizon, .. } => Ok(*horizon),
        _ => Err(Error::UnsupportedEvent("only cylinder events are priced numerically".into())),
    }
}

/// Backward induction over the depth-`horizon` tree of the protocol shifted
/// by `offset`, starting from `omega0` for Markov protocols.
pub fn price_tree(
    spec: &ProtocolSpec,
    event: &EventDescription,
    horizon: usize,
    offset: usize,
    omega0: Option<Outcome>,
) -> Result<PriceTree> {
    let needed = cylinder_horizon(event)?;
    if needed > horizon {
        return Err(Error::InvalidParameter(format!("event horizon {needed} exceeds pricing horizon {horizon}")));
    }
    if event.arity() != spec.space().len() {
        return Err(Error::DimensionMismatch { expected: spec.space().len(), found: event.arity() });
    }
    match (spec.is_markov(), omega0) {
        (true, None) => return Err(Error::MissingPreviousOutcome),
        (false, Some(_)) => return Err(Error::UnexpectedPreviousOutcome),
        _ => {}
    }
    let m = spec.space().len();
    let total: u128 = (0..=horizon as u32).map(|l| (m as u128).saturating_pow(l)).sum();
    if total > NODE_BUDGET as u128 {
        return Err(Error::BudgetExceeded(format!("{total} tree nodes")));
    }

    let mut leaves = BTreeMap::new();
    let mut below: Vec<(Vec<Outcome>, Rational)> = Vec::new();
    for seq in all_sequences(m, horizon)? {
        let inside = event.membership_prefix(&seq)? == Membership::In;
        below.push((seq.clone(), if inside { Rational::one() } else { Rational::zero() }));
        leaves.insert(seq, inside);
    }

    let mut nodes = BTreeMap::new();
    for len in (0..horizon).rev() {
        // children of each node are contiguous and in outcome order
        let level: Vec<(Vec<Outcome>, PriceNode)> = below
            .par_chunks(m)
            .map(|children| {
                let prefix = children[0].0[..len].to_vec();
                let f = Gamble::new(children.iter().map(|(_, v)| v.clone()).collect());
                let prev = prefix.last().copied().or(omega0);
                let cone = spec.cone_for(offset, len + 1, prev)?;
                let up = cone.one_step_upper_price(&f)?;
                Ok((prefix, PriceNode { value: up.price, coeffs: up.coeffs, hedge: up.hedge }))
            })
            .collect::<Result<_>>()?;
        below = level.iter().map(|(p, n)| (p.clone(), n.value.clone())).collect();
        nodes.extend(level);
    }
    Ok(PriceTree { event: event.clone(), horizon, offset, omega0, nodes, leaves })
}

/// Upper and lower probability with both certificate trees, for any variant.
pub fn priced(spec: &ProtocolSpec, event: &EventDescription, horizon: usize, offset: usize, omega0: Option<Outcome>) -> Result<PricedResult> {
    let up = price_tree(spec, event, horizon, offset, omega0)?;
    let low = price_tree(spec, &event.complement(), horizon, offset, omega0)?;
    let upper = up.root_value();
    let lower = Rational::one() - low.root_value();
    Ok(PricedResult {
        classification: Classification::of(&lower, &upper),
        upper,
        lower,
        certificate_upper: up,
        certificate_lower: low,
    })
}

pub fn upper_prob_cylinder(spec: &ProtocolSpec, event: &EventDescription, horizon: usize) -> Result<PricedResult> {
    if spec.is_markov() {
        return Err(Error::UnsupportedVariant("markov protocols are priced per start state".into()));
    }
    priced(spec, event, horizon, 0, None)
}

pub fn lower_prob_cylinder(spec: &ProtocolSpec, event: &EventDescription, horizon: usize) -> Result<Rational> {
    if spec.is_markov() {
        return Err(Error::UnsupportedVariant("markov protocols are priced per start state".into()));
    }
    Ok(Rational::one() - price_tree(spec, &event.complement(), horizon, 0, None)?.root_value())
}

/// Upper probability in the protocol whose trial `k` uses the cone of trial `n + k`.
pub fn shifted_upper_prob(spec: &ProtocolSpec, event: &EventDescription, n: usize) -> Result<Rational> {
    if spec.is_markov() {
        return Err(Error::UnsupportedVariant("shifted pricing of a markov protocol".into()));
    }
    let horizon = cylinder_horizon(event)?;
    Ok(price_tree(spec, event, horizon, n, None)?.root_value())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartState {
    Fixed(Outcome),
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovPrice {
    pub per_state: Vec<(Outcome, Rational)>,
    pub sup: Rational,
    pub classification: Classification,
}

/// Upper probability from a given start state, or from each one together with their maximum.
pub fn markov_upper_prob(spec: &ProtocolSpec, event: &EventDescription, start: StartState) -> Result<MarkovPrice> {
    if !spec.is_markov() {
        return Err(Error::UnsupportedVariant("per-state pricing needs a markov protocol".into()));
    }
    let horizon = cylinder_horizon(event)?;
    let states: Vec<Outcome> = match start {
        StartState::Fixed(o) if spec.space().contains(o) => vec![o],
        StartState::Fixed(o) => return Err(Error::UnknownOutcome(format!("#{}", o.0))),
        StartState::All => spec.space().outcomes().collect(),
    };
    let mut per_state = Vec::with_capacity(states.len());
    let mut sup = Rational::zero();
    let mut inf_lower = Rational::one();
    for o in states {
        let r = priced(spec, event, horizon, 0, Some(o))?;
        sup = sup.max(r.upper.clone());
        inf_lower = inf_lower.min(r.lower);
        per_state.push((o, r.upper));
    }
    let classification = Classification::of(&inf_lower, &sup);
    Ok(MarkovPrice { per_state, sup, classification })
}

/// The superhedging price as a single LP: initial capital `a` and one
/// coefficient list per internal node, capital nonnegative at every node
/// and at least the indicator at every leaf.
pub fn oracle_price(
    spec: &ProtocolSpec,
    event: &EventDescription,
    horizon: usize,
    offset: usize,
    omega0: Option<Outcome>,
) -> Result<Rational> {
    let needed = cylinder_horizon(event)?;
    if needed > horizon {
        return Err(Error::InvalidParameter(format!("event horizon {needed} exceeds pricing horizon {horizon}")));
    }
    let m = spec.space().len();
    let total: u128 = (0..=horizon as u32).map(|l| (m as u128).saturating_pow(l)).sum();
    if total > ORACLE_BUDGET as u128 {
        return Err(Error::BudgetExceeded(format!("{total} tree nodes for the oracle")));
    }

    // variable 0 is the initial capital; each internal node owns a block of coefficients
    let mut block = BTreeMap::new();
    let mut vars = vec![VarKind::Free];
    for len in 0..horizon {
        for prefix in all_sequences(m, len)? {
            let prev = prefix.last().copied().or(omega0);
            let cone = spec.cone_for(offset, len + 1, prev)?;
            block.insert(prefix, (vars.len(), cone));
            vars.extend(std::iter::repeat_n(VarKind::NonNegative, cone.generators().len()));
        }
    }
    let n = vars.len();
    let mut objective = vec![Rational::zero(); n];
    objective[0] = Rational::one();
    let mut lp = LinearProgram::new(Sense::Minimize, objective, vars);
    lp.add(unit(n, 0), Relation::Ge, Rational::zero());
    for len in 1..=horizon {
        for node in all_sequences(m, len)? {
            let mut row = unit(n, 0);
            for j in 0..len {
                let (start, cone) = &block[&node[..j]];
                for (i, g) in cone.generators().iter().enumerate() {
                    row[start + i] += g.payoff(node[j]);
                }
            }
            let floor = if len == horizon && event.membership_prefix(&node)? == Membership::In {
                Rational::one()
            } else {
                Rational::zero()
            };
            lp.add(row, Relation::Ge, floor);
        }
    }
    let r = solve_lp(&lp)?;
    match r.status {
        LpStatus::Optimal => Ok(r.objective),
        status => Err(Error::SolverFault(format!("whole-tree program ended {status:?}"))),
    }
}

fn unit(n: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); n];
    v[i] = Rational::one();
    v
}

/// Checks every stored node value against a fresh one-trial price and the
/// `0 <= V <= 1` bounds.
pub fn revalidate(spec: &ProtocolSpec, tree: &PriceTree) -> Result<bool> {
    for (prefix, node) in &tree.nodes {
        let m = spec.space().len();
        let mut children = Vec::with_capacity(m);
        for o in spec.space().outcomes() {
            let mut p = prefix.clone();
            p.push(o);
            children.push(tree.value(&p).ok_or_else(|| Error::SolverFault("price tree has a gap".into()))?);
        }
        let prev = prefix.last().copied().or(tree.omega0);
        let cone = spec.cone_for(tree.offset, prefix.len() + 1, prev)?;
        let fresh = cone.one_step_upper_price(&Gamble::new(children))?;
        if fresh.price != node.value || node.value.is_negative() || node.value > Rational::one() {
            return Ok(false);
        }
    }
    Ok(true)
}
