//! Events over infinite outcome sequences, restricted to a decidable catalogue.
//!
//! Full-path membership is exact on eventually constant paths ([`Path`]),
//! which is all the randomized closure refuter needs. Prefix membership is
//! tri-state: `In` when every extension lies in the event, `Out` when none
//! does.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cone::Outcome;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Membership {
    In,
    Out,
    Undetermined,
}

impl Membership {
    pub fn complement(self) -> Self {
        match self {
            Membership::In => Membership::Out,
            Membership::Out => Membership::In,
            Membership::Undetermined => Membership::Undetermined,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Membership::In => "in",
            Membership::Out => "out",
            Membership::Undetermined => "undetermined",
        }
    }
}

/// The infinite path `prefix` followed by `tail` forever.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    pub prefix: Vec<Outcome>,
    pub tail: Outcome,
}

impl Path {
    pub fn new(prefix: Vec<Outcome>, tail: Outcome) -> Self {
        Self { prefix, tail }
    }

    pub fn at(&self, i: usize) -> Outcome {
        self.prefix.get(i).copied().unwrap_or(self.tail)
    }

    pub fn take(&self, n: usize) -> Vec<Outcome> {
        (0..n).map(|i| self.at(i)).collect()
    }

    /// Drops the first outcome.
    pub fn shift(&self) -> Self {
        let prefix = self.prefix.get(1..).map(<[Outcome]>::to_vec).unwrap_or_default();
        Self { prefix, tail: self.tail }
    }

    pub fn prepend(&self, o: Outcome) -> Self {
        let mut prefix = Vec::with_capacity(self.prefix.len() + 1);
        prefix.push(o);
        prefix.extend_from_slice(&self.prefix);
        Self { prefix, tail: self.tail }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventClass {
    /// Paths whose first `horizon` outcomes form an accepted sequence.
    Cylinder { horizon: usize, accepted: BTreeSet<Vec<Outcome>> },
    EveryTermIn(BTreeSet<Outcome>),
    AllButFinitelyEqual(Outcome),
    InfinitelyOften(BTreeSet<Outcome>),
    /// Exactly `count` occurrences of `outcome` and none of `forbidden`.
    CountExactly { outcome: Outcome, count: usize, forbidden: BTreeSet<Outcome> },
    /// Finite rearrangements of `head` followed by `tail` forever.
    GeneratedPermutable { head: Vec<Outcome>, tail: Outcome },
    Complement(Box<EventClass>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventDescription {
    arity: usize,
    class: EventClass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClosureKind {
    Tail,
    WeaklyInvariant,
    Invariant,
    Permutable,
}

/// Structural facts known for a catalogue class; `None` means instance dependent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StructuralFlags {
    pub tail: Option<bool>,
    pub weakly_invariant: Option<bool>,
    pub invariant: Option<bool>,
    pub permutable: Option<bool>,
}

impl StructuralFlags {
    const ALL: Self = Self { tail: Some(true), weakly_invariant: Some(true), invariant: Some(true), permutable: Some(true) };

    pub fn get(&self, kind: ClosureKind) -> Option<bool> {
        match kind {
            ClosureKind::Tail => self.tail,
            ClosureKind::WeaklyInvariant => self.weakly_invariant,
            ClosureKind::Invariant => self.invariant,
            ClosureKind::Permutable => self.permutable,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClosureOutcome {
    Pass,
    /// Two paths related by the tested operation with different memberships.
    Counterexample { original: Path, modified: Path, original_in: bool, modified_in: bool },
}

impl ClosureOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ClosureOutcome::Pass)
    }
}

fn nonconstant_multiset(seq: &[Outcome], tail: Outcome) -> BTreeMap<Outcome, usize> {
    let mut counts = BTreeMap::new();
    for &o in seq.iter().filter(|&&o| o != tail) {
        *counts.entry(o).or_insert(0) += 1;
    }
    counts
}

fn is_sub_multiset(small: &BTreeMap<Outcome, usize>, big: &BTreeMap<Outcome, usize>) -> bool {
    small.iter().all(|(o, n)| big.get(o).is_some_and(|m| n <= m))
}

impl EventDescription {
    pub fn new(arity: usize, class: EventClass) -> Result<Self> {
        if arity == 0 {
            return Err(Error::EmptyOutcomeSpace);
        }
        validate(arity, &class)?;
        Ok(Self { arity, class: normalize(class) })
    }

    pub fn cylinder(arity: usize, horizon: usize, accepted: impl IntoIterator<Item = Vec<Outcome>>) -> Result<Self> {
        Self::new(arity, EventClass::Cylinder { horizon, accepted: accepted.into_iter().collect() })
    }

    /// The cylinder of all length-`horizon` sequences satisfying `pred`.
    pub fn cylinder_where(arity: usize, horizon: usize, pred: impl Fn(&[Outcome]) -> bool) -> Result<Self> {
        let all = all_sequences(arity, horizon)?;
        Self::cylinder(arity, horizon, all.into_iter().filter(|s| pred(s)))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn class(&self) -> &EventClass {
        &self.class
    }

    pub fn is_cylinder(&self) -> bool {
        matches!(self.class, EventClass::Cylinder { .. })
    }

    /// Exact membership of an eventually constant path.
    pub fn contains(&self, path: &Path) -> bool {
        contains(&self.class, path)
    }

    pub fn membership_prefix(&self, prefix: &[Outcome]) -> Result<Membership> {
        if let Some(o) = prefix.iter().find(|o| o.0 >= self.arity) {
            return Err(Error::UnknownOutcome(format!("#{}", o.0)));
        }
        if self.arity == 1 {
            // only one path extends any prefix
            let path = Path::new(prefix.to_vec(), Outcome(0));
            return Ok(if self.contains(&path) { Membership::In } else { Membership::Out });
        }
        Ok(prefix_membership(&self.class, self.arity, prefix))
    }

    pub fn complement(&self) -> Self {
        Self { arity: self.arity, class: complement_class(self.arity, &self.class) }
    }

    /// The image of the event under `n` applications of the shift.
    pub fn shift(&self, n: usize) -> Result<Self> {
        let class = match &self.class {
            EventClass::Cylinder { horizon, accepted } => {
                if n >= *horizon {
                    let all = if accepted.is_empty() { BTreeSet::new() } else { BTreeSet::from([Vec::new()]) };
                    EventClass::Cylinder { horizon: 0, accepted: all }
                } else {
                    let projected = accepted.iter().map(|s| s[n..].to_vec()).collect();
                    EventClass::Cylinder { horizon: horizon - n, accepted: projected }
                }
            }
            c @ (EventClass::EveryTermIn(_) | EventClass::AllButFinitelyEqual(_) | EventClass::InfinitelyOften(_)) => {
                c.clone()
            }
            EventClass::Complement(inner)
                if matches!(**inner, EventClass::AllButFinitelyEqual(_) | EventClass::InfinitelyOften(_)) =>
            {
                // invariant events are fixed by the shift, and so are their complements
                self.class.clone()
            }
            other => return Err(Error::UnsupportedEvent(format!("shift of {}", class_name(other)))),
        };
        Ok(Self { arity: self.arity, class })
    }

    /// Whether the rest of the path after `prefix` is again in the generated event,
    /// assuming the whole path is.
    pub fn residual_in_generated(&self, prefix: &[Outcome]) -> Result<bool> {
        let EventClass::GeneratedPermutable { tail, .. } = &self.class else {
            return Err(Error::UnsupportedEvent(format!("residual query on {}", class_name(&self.class))));
        };
        if self.membership_prefix(prefix)? == Membership::Out {
            return Err(Error::PrefixOutsideEvent);
        }
        Ok(prefix.iter().all(|o| o == tail))
    }

    pub fn flags(&self) -> StructuralFlags {
        if self.arity == 1 {
            return StructuralFlags::ALL;
        }
        flags_of(self.arity, &self.class)
    }

    /// Randomized refuter for a closure property over eventually constant paths.
    pub fn check_closure(&self, kind: ClosureKind, samples: usize, depth: usize, seed: u64) -> Result<ClosureOutcome> {
        if samples == 0 {
            return Err(Error::InvalidParameter("closure check needs at least one sample".into()));
        }
        if depth == 0 || depth > 64 {
            return Err(Error::InvalidParameter(format!("closure depth {depth} outside 1..=64")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let everything: Vec<Outcome> = (0..self.arity).map(Outcome).collect();
        for _ in 0..samples {
            let x = self.sample_path(&mut rng, depth);
            let modified = match kind {
                ClosureKind::Tail => {
                    let mut prefix = x.take(x.prefix.len() + 1);
                    let i = rng.gen_range(0..prefix.len());
                    prefix[i] = *everything.choose(&mut rng).expect("nonempty");
                    Path::new(prefix, x.tail)
                }
                ClosureKind::WeaklyInvariant => {
                    let shifted = x.shift();
                    if self.contains(&x) && !self.contains(&shifted) {
                        return Ok(self.counterexample(x, shifted));
                    }
                    continue;
                }
                ClosureKind::Invariant => {
                    let shifted = x.shift();
                    if self.contains(&x) != self.contains(&shifted) {
                        return Ok(self.counterexample(x, shifted));
                    }
                    x.prepend(*everything.choose(&mut rng).expect("nonempty"))
                }
                ClosureKind::Permutable => {
                    let mut prefix = x.take(x.prefix.len().max(2));
                    prefix.shuffle(&mut rng);
                    Path::new(prefix, x.tail)
                }
            };
            if self.contains(&x) != self.contains(&modified) {
                return Ok(self.counterexample(x, modified));
            }
        }
        Ok(ClosureOutcome::Pass)
    }

    fn counterexample(&self, original: Path, modified: Path) -> ClosureOutcome {
        ClosureOutcome::Counterexample {
            original_in: self.contains(&original),
            modified_in: self.contains(&modified),
            original,
            modified,
        }
    }

    /// Outcomes drawn from a random nonempty subset so sparse patterns show up often.
    fn sample_path(&self, rng: &mut ChaCha8Rng, depth: usize) -> Path {
        let mut support: Vec<Outcome> = (0..self.arity).map(Outcome).filter(|_| rng.gen_bool(0.5)).collect();
        if support.is_empty() {
            support.push(Outcome(rng.gen_range(0..self.arity)));
        }
        let len = rng.gen_range(0..=depth);
        let prefix = (0..len).map(|_| *support.choose(rng).expect("nonempty")).collect();
        Path::new(prefix, *support.choose(rng).expect("nonempty"))
    }
}

/// Every sequence of the given length, in lexicographic order.
pub fn all_sequences(arity: usize, len: usize) -> Result<Vec<Vec<Outcome>>> {
    let count = (arity as u128).checked_pow(len as u32).filter(|&c| c <= 4_000_000);
    let Some(count) = count else {
        return Err(Error::BudgetExceeded(format!("{arity}^{len} sequences")));
    };
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![Outcome(0); len];
    for _ in 0..count {
        out.push(cur.clone());
        for slot in cur.iter_mut().rev() {
            slot.0 += 1;
            if slot.0 < arity {
                break;
            }
            slot.0 = 0;
        }
    }
    Ok(out)
}

fn validate(arity: usize, class: &EventClass) -> Result<()> {
    let check = |o: &Outcome| if o.0 < arity { Ok(()) } else { Err(Error::UnknownOutcome(format!("#{}", o.0))) };
    match class {
        EventClass::Cylinder { horizon, accepted } => {
            for s in accepted {
                if s.len() != *horizon {
                    return Err(Error::DimensionMismatch { expected: *horizon, found: s.len() });
                }
                s.iter().try_for_each(check)?;
            }
            Ok(())
        }
        EventClass::EveryTermIn(a) | EventClass::InfinitelyOften(a) => a.iter().try_for_each(check),
        EventClass::AllButFinitelyEqual(c) => check(c),
        EventClass::CountExactly { outcome, forbidden, .. } => {
            check(outcome)?;
            forbidden.iter().try_for_each(check)
        }
        EventClass::GeneratedPermutable { head, tail } => {
            check(tail)?;
            head.iter().try_for_each(check)
        }
        EventClass::Complement(inner) => validate(arity, inner),
    }
}

fn normalize(class: EventClass) -> EventClass {
    match class {
        EventClass::Complement(inner) => match normalize(*inner) {
            EventClass::Complement(x) => *x,
            other => EventClass::Complement(Box::new(other)),
        },
        other => other,
    }
}

fn complement_class(arity: usize, class: &EventClass) -> EventClass {
    match class {
        EventClass::Complement(inner) => (**inner).clone(),
        EventClass::Cylinder { horizon, accepted } => match all_sequences(arity, *horizon) {
            Ok(all) => EventClass::Cylinder {
                horizon: *horizon,
                accepted: all.into_iter().filter(|s| !accepted.contains(s)).collect(),
            },
            Err(_) => EventClass::Complement(Box::new(class.clone())),
        },
        other => EventClass::Complement(Box::new(other.clone())),
    }
}

fn class_name(class: &EventClass) -> &'static str {
    match class {
        EventClass::Cylinder { .. } => "cylinder",
        EventClass::EveryTermIn(_) => "every_term_in",
        EventClass::AllButFinitelyEqual(_) => "all_but_finitely_equal",
        EventClass::InfinitelyOften(_) => "infinitely_often",
        EventClass::CountExactly { .. } => "count_exactly",
        EventClass::GeneratedPermutable { .. } => "generated",
        EventClass::Complement(_) => "complement",
    }
}

fn contains(class: &EventClass, path: &Path) -> bool {
    match class {
        EventClass::Cylinder { horizon, accepted } => accepted.contains(&path.take(*horizon)),
        EventClass::EveryTermIn(a) => a.contains(&path.tail) && path.prefix.iter().all(|o| a.contains(o)),
        EventClass::AllButFinitelyEqual(c) => path.tail == *c,
        EventClass::InfinitelyOften(a) => a.contains(&path.tail),
        EventClass::CountExactly { outcome, count, forbidden } => {
            path.tail != *outcome
                && !forbidden.contains(&path.tail)
                && !path.prefix.iter().any(|o| forbidden.contains(o))
                && path.prefix.iter().filter(|&o| o == outcome).count() == *count
        }
        EventClass::GeneratedPermutable { head, tail } => {
            path.tail == *tail && nonconstant_multiset(&path.prefix, *tail) == nonconstant_multiset(head, *tail)
        }
        EventClass::Complement(inner) => !contains(inner, path),
    }
}

fn prefix_membership(class: &EventClass, arity: usize, prefix: &[Outcome]) -> Membership {
    match class {
        EventClass::Cylinder { horizon, accepted } => {
            if prefix.len() >= *horizon {
                return if accepted.contains(&prefix[..*horizon]) { Membership::In } else { Membership::Out };
            }
            let matching = accepted.iter().filter(|s| s.starts_with(prefix)).count();
            let completions = (arity as u128).checked_pow((horizon - prefix.len()) as u32);
            if matching == 0 {
                Membership::Out
            } else if completions == Some(matching as u128) {
                Membership::In
            } else {
                Membership::Undetermined
            }
        }
        EventClass::EveryTermIn(a) => {
            if prefix.iter().any(|o| !a.contains(o)) || a.is_empty() {
                Membership::Out
            } else if a.len() == arity {
                Membership::In
            } else {
                Membership::Undetermined
            }
        }
        EventClass::AllButFinitelyEqual(_) => Membership::Undetermined,
        EventClass::InfinitelyOften(a) => {
            if a.is_empty() {
                Membership::Out
            } else if a.len() == arity {
                Membership::In
            } else {
                Membership::Undetermined
            }
        }
        EventClass::CountExactly { outcome, count, forbidden } => {
            let seen = prefix.iter().filter(|&o| o == outcome).count();
            let free = (0..arity).map(Outcome).any(|o| o != *outcome && !forbidden.contains(&o));
            if prefix.iter().any(|o| forbidden.contains(o))
                || seen > *count
                || (forbidden.contains(outcome) && *count > 0)
                || !free
            {
                Membership::Out
            } else {
                Membership::Undetermined
            }
        }
        EventClass::GeneratedPermutable { head, tail } => {
            if is_sub_multiset(&nonconstant_multiset(prefix, *tail), &nonconstant_multiset(head, *tail)) {
                Membership::Undetermined
            } else {
                Membership::Out
            }
        }
        EventClass::Complement(inner) => prefix_membership(inner, arity, prefix).complement(),
    }
}

fn flags_of(arity: usize, class: &EventClass) -> StructuralFlags {
    let nontrivial = |tail, weak, inv, perm| StructuralFlags {
        tail: Some(tail),
        weakly_invariant: weak,
        invariant: Some(inv),
        permutable: perm,
    };
    match class {
        EventClass::Cylinder { horizon, accepted } => {
            let full = (arity as u128).checked_pow(*horizon as u32) == Some(accepted.len() as u128);
            if accepted.is_empty() || full {
                StructuralFlags::ALL
            } else {
                nontrivial(false, None, false, None)
            }
        }
        EventClass::EveryTermIn(a) => {
            if a.is_empty() || a.len() == arity {
                StructuralFlags::ALL
            } else {
                nontrivial(false, Some(true), false, Some(true))
            }
        }
        EventClass::AllButFinitelyEqual(_) | EventClass::InfinitelyOften(_) => StructuralFlags::ALL,
        EventClass::CountExactly { outcome, count, forbidden } => {
            let free = (0..arity).map(Outcome).any(|o| o != *outcome && !forbidden.contains(&o));
            if !free || (forbidden.contains(outcome) && *count > 0) {
                // the event is empty
                StructuralFlags::ALL
            } else {
                nontrivial(false, Some(*count == 0), false, Some(true))
            }
        }
        EventClass::GeneratedPermutable { head, tail } => {
            let constant = head.iter().all(|o| o == tail);
            nontrivial(false, Some(constant), false, Some(true))
        }
        EventClass::Complement(inner) => {
            let f = flags_of(arity, inner);
            let weak = if f.invariant == Some(true) { Some(true) } else { None };
            StructuralFlags { tail: f.tail, weakly_invariant: weak, invariant: f.invariant, permutable: f.permutable }
        }
    }
}
