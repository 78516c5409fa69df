//! JSON documents for protocols, events, strategies, traces and price reports.
//!
//! Outcomes are referred to by label and every rational is a string such as
//! `"-1/2"` (plain JSON integers are accepted on input).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::cone::{build_cone, Cone, ConeKind, ConeSpec, Gamble, Outcome, OutcomeInfo, OutcomeSpace, ProbabilityVector};
use crate::error::{Error, Result};
use crate::events::{EventClass, EventDescription, Membership};
use crate::pricing::{price_tree, PriceTree, PricedResult};
use crate::protocol::{ProtocolSpec, Trace, TraceStep, Variant};
use crate::rational::{self, Rational};
use crate::strategy::{Family, SkepticStrategy};

fn doc_err(e: impl std::fmt::Display) -> Error {
    Error::Document(e.to_string())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Text(String),
    Int(i64),
}

impl Num {
    fn parse(&self) -> Result<Rational> {
        match self {
            Num::Text(s) => rational::parse(s),
            Num::Int(i) => Ok(rational::int(*i)),
        }
    }

    fn of(r: &Rational) -> Self {
        Num::Text(rational::format(r))
    }
}

fn nums(xs: &[Num]) -> Result<Vec<Rational>> {
    xs.iter().map(Num::parse).collect()
}

fn to_nums(xs: &[Rational]) -> Vec<Num> {
    xs.iter().map(Num::of).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutcomeDoc {
    Label(String),
    Full {
        label: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<Num>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeDoc {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generators: Option<Vec<Vec<Num>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<Num>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConesDoc {
    List(Vec<ConeDoc>),
    ByLabel(BTreeMap<String, ConeDoc>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDoc {
    pub outcomes: Vec<OutcomeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cone: Option<ConeDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cones: Option<ConesDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_hint: Option<usize>,
}

pub fn parse_space(outcomes: &[OutcomeDoc]) -> Result<OutcomeSpace> {
    let infos = outcomes
        .iter()
        .map(|o| {
            Ok(match o {
                OutcomeDoc::Label(label) => OutcomeInfo { label: label.clone(), value: None },
                OutcomeDoc::Full { label, value } => {
                    OutcomeInfo { label: label.clone(), value: value.as_ref().map(Num::parse).transpose()? }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;
    OutcomeSpace::new(infos)
}

pub fn parse_cone(doc: &ConeDoc, space: &Arc<OutcomeSpace>) -> Result<Cone> {
    let gens = || -> Result<Vec<Gamble>> {
        doc.generators
            .as_ref()
            .ok_or_else(|| doc_err(format!("cone kind {} needs generators", doc.kind)))?
            .iter()
            .map(|g| nums(g).map(Gamble::new))
            .collect()
    };
    let probs = || -> Result<ProbabilityVector> {
        let p = doc.probabilities.as_ref().ok_or_else(|| doc_err(format!("cone kind {} needs probabilities", doc.kind)))?;
        ProbabilityVector::new(nums(p)?)
    };
    let spec = match doc.kind.as_str() {
        "raw" => ConeSpec::Raw(gens()?),
        "span" => ConeSpec::Span(gens()?),
        "zero" => ConeSpec::Zero(probs()?),
        "nonpositive" => ConeSpec::Nonpositive(probs()?),
        other => return Err(doc_err(format!("unknown cone kind {other:?}"))),
    };
    build_cone(spec, space)
}

/// Builds the cones of a document without the coherence check a protocol performs.
pub fn parse_cones(doc: &SpecDoc) -> Result<(Arc<OutcomeSpace>, Vec<Cone>)> {
    let space = Arc::new(parse_space(&doc.outcomes)?);
    let cones = match (&doc.cone, &doc.cones) {
        (Some(c), None) => vec![parse_cone(c, &space)?],
        (None, Some(ConesDoc::List(cs))) => cs.iter().map(|c| parse_cone(c, &space)).collect::<Result<_>>()?,
        (None, Some(ConesDoc::ByLabel(map))) => {
            if let Some(label) = map.keys().find(|l| space.outcome(l).is_err()) {
                return Err(Error::UnknownOutcome(label.clone()));
            }
            space
                .outcomes()
                .map(|o| {
                    let label = space.label(o);
                    let c = map.get(label).ok_or_else(|| doc_err(format!("no cone for state {label:?}")))?;
                    parse_cone(c, &space)
                })
                .collect::<Result<_>>()?
        }
        (Some(_), Some(_)) => return Err(doc_err("give either \"cone\" or \"cones\", not both")),
        (None, None) => return Err(doc_err("no cone given")),
    };
    Ok((space, cones))
}

pub fn parse_spec(doc: &SpecDoc) -> Result<ProtocolSpec> {
    let (space, mut cones) = parse_cones(doc)?;
    let variant = match doc.variant.as_deref().unwrap_or("identical") {
        "identical" if cones.len() == 1 => Variant::Identical(cones.remove(0)),
        "identical" => return Err(doc_err("identical protocol takes a single cone")),
        "independent" => Variant::IndependentSeq(cones),
        "markov" => {
            if matches!(doc.cones, Some(ConesDoc::List(_))) && cones.len() != space.len() {
                return Err(Error::DimensionMismatch { expected: space.len(), found: cones.len() });
            }
            Variant::Markov(cones)
        }
        other => return Err(doc_err(format!("unknown protocol variant {other:?}"))),
    };
    Ok(ProtocolSpec::new(space, variant)?.with_horizon_hint(doc.horizon_hint))
}

pub fn spec_from_json(text: &str) -> Result<ProtocolSpec> {
    parse_spec(&serde_json::from_str(text).map_err(doc_err)?)
}

fn cone_doc(cone: &Cone) -> ConeDoc {
    let gens = |g: &[Gamble]| Some(g.iter().map(|g| to_nums(g.payoffs())).collect());
    match cone.kind() {
        ConeKind::RawGenerators => ConeDoc { kind: "raw".into(), generators: gens(cone.generators()), probabilities: None },
        ConeKind::SpanOf(base) => ConeDoc { kind: "span".into(), generators: gens(base), probabilities: None },
        ConeKind::ZeroCone(p) => ConeDoc { kind: "zero".into(), generators: None, probabilities: Some(to_nums(p.weights())) },
        ConeKind::NonpositiveCone(p) => {
            ConeDoc { kind: "nonpositive".into(), generators: None, probabilities: Some(to_nums(p.weights())) }
        }
    }
}

pub fn spec_doc(spec: &ProtocolSpec) -> SpecDoc {
    let space = spec.space();
    let outcomes = space
        .info()
        .iter()
        .map(|o| match &o.value {
            Some(v) => OutcomeDoc::Full { label: o.label.clone(), value: Some(Num::of(v)) },
            None => OutcomeDoc::Label(o.label.clone()),
        })
        .collect();
    let (variant, cone, cones) = match spec.variant() {
        Variant::Identical(c) => ("identical", Some(cone_doc(c)), None),
        Variant::IndependentSeq(cs) => ("independent", None, Some(ConesDoc::List(cs.iter().map(cone_doc).collect()))),
        Variant::Markov(cs) => {
            let map = space.outcomes().map(|o| (space.label(o).to_string(), cone_doc(&cs[o.0]))).collect();
            ("markov", None, Some(ConesDoc::ByLabel(map)))
        }
    };
    SpecDoc { outcomes, variant: Some(variant.into()), cone, cones, horizon_hint: spec.horizon_hint() }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum EventDoc {
    Cylinder { horizon: usize, accepted: Vec<Vec<String>> },
    EveryTermIn { outcomes: Vec<String> },
    AllButFinitelyEqual { outcome: String },
    InfinitelyOften { outcomes: Vec<String> },
    CountExactly {
        outcome: String,
        k: usize,
        #[serde(default)]
        forbidden: Vec<String>,
    },
    Generated { head: Vec<String>, tail: String },
    Complement { event: Box<EventDoc> },
}

fn labels(space: &OutcomeSpace, xs: &[String]) -> Result<Vec<Outcome>> {
    xs.iter().map(|l| space.outcome(l)).collect()
}

fn label_set(space: &OutcomeSpace, xs: &[String]) -> Result<BTreeSet<Outcome>> {
    Ok(labels(space, xs)?.into_iter().collect())
}

fn event_class(doc: &EventDoc, space: &OutcomeSpace) -> Result<EventClass> {
    Ok(match doc {
        EventDoc::Cylinder { horizon, accepted } => EventClass::Cylinder {
            horizon: *horizon,
            accepted: accepted.iter().map(|s| labels(space, s)).collect::<Result<_>>()?,
        },
        EventDoc::EveryTermIn { outcomes } => EventClass::EveryTermIn(label_set(space, outcomes)?),
        EventDoc::AllButFinitelyEqual { outcome } => EventClass::AllButFinitelyEqual(space.outcome(outcome)?),
        EventDoc::InfinitelyOften { outcomes } => EventClass::InfinitelyOften(label_set(space, outcomes)?),
        EventDoc::CountExactly { outcome, k, forbidden } => EventClass::CountExactly {
            outcome: space.outcome(outcome)?,
            count: *k,
            forbidden: label_set(space, forbidden)?,
        },
        EventDoc::Generated { head, tail } => {
            EventClass::GeneratedPermutable { head: labels(space, head)?, tail: space.outcome(tail)? }
        }
        EventDoc::Complement { event } => EventClass::Complement(Box::new(event_class(event, space)?)),
    })
}

pub fn parse_event(doc: &EventDoc, space: &OutcomeSpace) -> Result<EventDescription> {
    EventDescription::new(space.len(), event_class(doc, space)?)
}

pub fn event_from_json(text: &str, space: &OutcomeSpace) -> Result<EventDescription> {
    parse_event(&serde_json::from_str(text).map_err(doc_err)?, space)
}

fn names(space: &OutcomeSpace, xs: impl IntoIterator<Item = Outcome>) -> Vec<String> {
    xs.into_iter().map(|o| space.label(o).to_string()).collect()
}

fn class_doc(class: &EventClass, space: &OutcomeSpace) -> EventDoc {
    match class {
        EventClass::Cylinder { horizon, accepted } => EventDoc::Cylinder {
            horizon: *horizon,
            accepted: accepted.iter().map(|s| names(space, s.iter().copied())).collect(),
        },
        EventClass::EveryTermIn(a) => EventDoc::EveryTermIn { outcomes: names(space, a.iter().copied()) },
        EventClass::AllButFinitelyEqual(c) => EventDoc::AllButFinitelyEqual { outcome: space.label(*c).into() },
        EventClass::InfinitelyOften(a) => EventDoc::InfinitelyOften { outcomes: names(space, a.iter().copied()) },
        EventClass::CountExactly { outcome, count, forbidden } => EventDoc::CountExactly {
            outcome: space.label(*outcome).into(),
            k: *count,
            forbidden: names(space, forbidden.iter().copied()),
        },
        EventClass::GeneratedPermutable { head, tail } => {
            EventDoc::Generated { head: names(space, head.iter().copied()), tail: space.label(*tail).into() }
        }
        EventClass::Complement(inner) => EventDoc::Complement { event: Box::new(class_doc(inner, space)) },
    }
}

pub fn event_doc(event: &EventDescription, space: &OutcomeSpace) -> EventDoc {
    class_doc(event.class(), space)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategyDoc {
    Zero,
    Constant {
        coeffs: Vec<Num>,
    },
    Proportional {
        coeffs: Vec<Num>,
    },
    /// Rebuilt by pricing `event` when loaded.
    Superhedge {
        event: EventDoc,
        horizon: usize,
        #[serde(default)]
        offset: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        omega0: Option<String>,
    },
    ScaledSum {
        first: Box<StrategyDoc>,
        second: Box<StrategyDoc>,
        w1: Num,
        w2: Num,
    },
    ShiftEmbed {
        inner: Box<StrategyDoc>,
        n: usize,
    },
    StopWhen {
        inner: Box<StrategyDoc>,
        #[serde(default)]
        target: Option<Num>,
    },
    RestartScale {
        eps: Num,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inner: Option<Box<StrategyDoc>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        by_state: Option<BTreeMap<String, StrategyDoc>>,
    },
    AlternatingRestart {
        on_event: Box<StrategyDoc>,
        off_event: Box<StrategyDoc>,
        event: EventDoc,
        eps: Num,
    },
    ShiftTransfer {
        inner: Box<StrategyDoc>,
        prefix: Vec<String>,
    },
}

pub fn parse_strategy(doc: &StrategyDoc, spec: &ProtocolSpec) -> Result<SkepticStrategy> {
    use crate::strategy as s;
    let space = spec.space();
    let sub = |d: &StrategyDoc| parse_strategy(d, spec);
    Ok(match doc {
        StrategyDoc::Zero => SkepticStrategy::Zero,
        StrategyDoc::Constant { coeffs } => SkepticStrategy::ConstantCoeffs(nums(coeffs)?),
        StrategyDoc::Proportional { coeffs } => SkepticStrategy::Proportional(nums(coeffs)?),
        StrategyDoc::Superhedge { event, horizon, offset, omega0 } => {
            let e = parse_event(event, space)?;
            let start = omega0.as_deref().map(|l| space.outcome(l)).transpose()?;
            s::superhedge_strategy(Arc::new(price_tree(spec, &e, *horizon, *offset, start)?))?
        }
        StrategyDoc::ScaledSum { first, second, w1, w2 } => s::scaled_sum(sub(first)?, sub(second)?, w1.parse()?, w2.parse()?)?,
        StrategyDoc::ShiftEmbed { inner, n } => SkepticStrategy::ShiftEmbed { inner: Box::new(sub(inner)?), n: *n },
        StrategyDoc::StopWhen { inner, target } => s::stop_when(sub(inner)?, target.as_ref().map(Num::parse).transpose()?),
        StrategyDoc::RestartScale { eps, inner, by_state } => {
            let family = match (inner, by_state) {
                (Some(i), None) => Family::Uniform(Box::new(sub(i)?)),
                (None, Some(map)) => {
                    if let Some(l) = map.keys().find(|l| space.outcome(l).is_err()) {
                        return Err(Error::UnknownOutcome(l.clone()));
                    }
                    Family::ByState(
                        space
                            .outcomes()
                            .map(|o| {
                                let d = map
                                    .get(space.label(o))
                                    .ok_or_else(|| doc_err(format!("no member for state {:?}", space.label(o))))?;
                                sub(d)
                            })
                            .collect::<Result<_>>()?,
                    )
                }
                _ => return Err(doc_err("restart_scale needs exactly one of \"inner\" or \"by_state\"")),
            };
            s::restart_scale(family, eps.parse()?)?
        }
        StrategyDoc::AlternatingRestart { on_event, off_event, event, eps } => {
            s::alternating_restart(sub(on_event)?, sub(off_event)?, parse_event(event, space)?, eps.parse()?)?
        }
        StrategyDoc::ShiftTransfer { inner, prefix } => {
            SkepticStrategy::ShiftTransfer { inner: Box::new(sub(inner)?), prefix: labels(space, prefix)? }
        }
    })
}

pub fn strategy_from_json(text: &str, spec: &ProtocolSpec) -> Result<SkepticStrategy> {
    parse_strategy(&serde_json::from_str(text).map_err(doc_err)?, spec)
}

pub fn strategy_doc(s: &SkepticStrategy, space: &OutcomeSpace) -> StrategyDoc {
    let sub = |x: &SkepticStrategy| Box::new(strategy_doc(x, space));
    match s {
        SkepticStrategy::Zero => StrategyDoc::Zero,
        SkepticStrategy::ConstantCoeffs(c) => StrategyDoc::Constant { coeffs: to_nums(c) },
        SkepticStrategy::Proportional(c) => StrategyDoc::Proportional { coeffs: to_nums(c) },
        SkepticStrategy::Superhedge(tree) => StrategyDoc::Superhedge {
            event: event_doc(&tree.event, space),
            horizon: tree.horizon,
            offset: tree.offset,
            omega0: tree.omega0.map(|o| space.label(o).to_string()),
        },
        SkepticStrategy::ScaledSum { first, second, w1, w2 } => {
            StrategyDoc::ScaledSum { first: sub(first), second: sub(second), w1: Num::of(w1), w2: Num::of(w2) }
        }
        SkepticStrategy::ShiftEmbed { inner, n } => StrategyDoc::ShiftEmbed { inner: sub(inner), n: *n },
        SkepticStrategy::StopWhen { inner, target } => {
            StrategyDoc::StopWhen { inner: sub(inner), target: target.as_ref().map(Num::of) }
        }
        SkepticStrategy::RestartScale { family, eps } => match family {
            Family::Uniform(inner) => StrategyDoc::RestartScale { eps: Num::of(eps), inner: Some(sub(inner)), by_state: None },
            Family::ByState(members) => StrategyDoc::RestartScale {
                eps: Num::of(eps),
                inner: None,
                by_state: Some(
                    members
                        .iter()
                        .enumerate()
                        .map(|(i, m)| (space.label(Outcome(i)).to_string(), strategy_doc(m, space)))
                        .collect(),
                ),
            },
        },
        SkepticStrategy::AlternatingRestart { on_event, off_event, event, eps } => StrategyDoc::AlternatingRestart {
            on_event: sub(on_event),
            off_event: sub(off_event),
            event: event_doc(event, space),
            eps: Num::of(eps),
        },
        SkepticStrategy::ShiftTransfer { inner, prefix } => {
            StrategyDoc::ShiftTransfer { inner: sub(inner), prefix: names(space, prefix.iter().copied()) }
        }
    }
}

/// One JSON object per step; the first line also carries `omega0` for Markov runs.
pub fn trace_to_jsonl(trace: &Trace, space: &OutcomeSpace) -> String {
    let mut out = String::new();
    for (i, s) in trace.steps.iter().enumerate() {
        let mut line = json!({
            "n": s.n,
            "coeffs": rational::format_all(&s.coeffs),
            "payoff": rational::format(&s.payoff),
            "omega": space.label(s.omega),
            "capital": rational::format(&s.capital),
        });
        if let Some(m) = s.membership {
            line["membership"] = json!(m.as_str());
        }
        if i == 0 {
            if let Some(o) = trace.omega0 {
                line["omega0"] = json!(space.label(o));
            }
        }
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

#[derive(Deserialize)]
struct StepDoc {
    n: usize,
    coeffs: Vec<Num>,
    payoff: Num,
    omega: String,
    capital: Num,
    #[serde(default)]
    membership: Option<String>,
    #[serde(default)]
    omega0: Option<String>,
}

pub fn trace_from_jsonl(text: &str, space: &OutcomeSpace) -> Result<Trace> {
    let mut trace = Trace { omega0: None, steps: Vec::new(), aborted: None };
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let d: StepDoc = serde_json::from_str(line).map_err(doc_err)?;
        if let Some(l) = &d.omega0 {
            trace.omega0 = Some(space.outcome(l)?);
        }
        let membership = match d.membership.as_deref() {
            None => None,
            Some("in") => Some(Membership::In),
            Some("out") => Some(Membership::Out),
            Some("undetermined") => Some(Membership::Undetermined),
            Some(other) => return Err(doc_err(format!("unknown membership {other:?}"))),
        };
        trace.steps.push(TraceStep {
            n: d.n,
            coeffs: nums(&d.coeffs)?,
            payoff: d.payoff.parse()?,
            omega: space.outcome(&d.omega)?,
            capital: d.capital.parse()?,
            membership,
        });
    }
    Ok(trace)
}

pub fn tree_json(tree: &PriceTree, space: &OutcomeSpace) -> Value {
    let nodes: Vec<Value> = tree
        .nodes
        .iter()
        .map(|(p, n)| {
            json!({
                "prefix": names(space, p.iter().copied()),
                "value": rational::format(&n.value),
                "coeffs": rational::format_all(&n.coeffs),
                "hedge": rational::format_all(n.hedge.payoffs()),
            })
        })
        .collect();
    let leaves: Vec<Value> = tree
        .leaves
        .iter()
        .map(|(p, &inside)| json!({ "prefix": names(space, p.iter().copied()), "indicator": u8::from(inside) }))
        .collect();
    json!({ "horizon": tree.horizon, "offset": tree.offset, "nodes": nodes, "leaves": leaves })
}

pub fn price_report(result: &PricedResult, space: &OutcomeSpace, certificate: bool) -> Value {
    let mut v = json!({
        "upper": rational::format(&result.upper),
        "lower": rational::format(&result.lower),
        "classification": result.classification.as_str(),
        "horizon": result.certificate_upper.horizon,
    });
    if certificate {
        v["certificate"] = json!({
            "upper": tree_json(&result.certificate_upper, space),
            "lower_complement": tree_json(&result.certificate_lower, space),
        });
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::run;
    use crate::rational::{int, ratio};
    use crate::strategy::{build_reality, RealityKind};

    const SPAN: &str = r#"{"outcomes":[{"label":"-1","value":"-1"},{"label":"0","value":"0"},{"label":"1","value":"1"}],
        "cone":{"kind":"span","generators":[["-1","0","1"]]}}"#;

    const MARKOV: &str = r#"{"outcomes":["a","b"],"variant":"markov",
        "cones":{"a":{"kind":"zero","probabilities":["1/2","1/2"]},"b":{"kind":"zero","probabilities":["1/3","2/3"]}}}"#;

    #[test]
    fn parses_spec_documents() {
        let spec = spec_from_json(SPAN).unwrap();
        assert_eq!(spec.cones()[0].generators().len(), 2);
        assert_eq!(spec.space().value(Outcome(0)), Some(&int(-1)));
        let markov = spec_from_json(MARKOV).unwrap();
        assert!(markov.is_markov());
        assert_eq!(markov.cones()[1].generators()[0], Gamble::from_ints(&[-2, 1]));
        for s in [&spec, &markov] {
            let text = serde_json::to_string(&spec_doc(s)).unwrap();
            assert_eq!(&spec_from_json(&text).unwrap(), s);
        }
    }

    #[test]
    fn rejects_bad_documents() {
        assert!(spec_from_json(r#"{"outcomes":[],"cone":{"kind":"raw","generators":[]}}"#).is_err());
        assert!(spec_from_json(r#"{"outcomes":["a"],"cone":{"kind":"cube"}}"#).is_err());
        assert!(spec_from_json(r#"{"outcomes":["a","b"],"cone":{"kind":"zero","probabilities":["1/2","1/3"]}}"#).is_err());
        let incoherent = spec_from_json(r#"{"outcomes":["0","1"],"cone":{"kind":"raw","generators":[["1","1"]]}}"#);
        assert!(matches!(incoherent, Err(Error::Incoherent { .. })));
        assert!(spec_from_json(r#"{"outcomes":["a","b"],"variant":"markov","cones":{"a":{"kind":"zero","probabilities":["1/2","1/2"]}}}"#).is_err());
        assert!(spec_from_json("not json").is_err());
    }

    #[test]
    fn parses_events() {
        let spec = spec_from_json(SPAN).unwrap();
        let space = spec.space();
        let e = event_from_json(r#"{"class":"count_exactly","outcome":"1","k":1,"forbidden":["-1"]}"#, space).unwrap();
        assert_eq!(e.membership_prefix(&[Outcome(0)]).unwrap(), Membership::Out);
        let g = event_from_json(r#"{"class":"generated","head":["1"],"tail":"0"}"#, space).unwrap();
        assert!(g.residual_in_generated(&[Outcome(1)]).unwrap());
        let c = event_from_json(r#"{"class":"cylinder","horizon":1,"accepted":[["1"]]}"#, space).unwrap();
        let back = serde_json::to_string(&event_doc(&c, space)).unwrap();
        assert_eq!(event_from_json(&back, space).unwrap(), c);
        assert!(event_from_json(r#"{"class":"cylinder","horizon":1,"accepted":[["7"]]}"#, space).is_err());
    }

    #[test]
    fn strategy_round_trip() {
        let spec = spec_from_json(MARKOV).unwrap();
        let text = r#"{"kind":"restart_scale","eps":"1/2","by_state":{
            "a":{"kind":"proportional","coeffs":["1","0"]},
            "b":{"kind":"proportional","coeffs":["0","1/2"]}}}"#;
        let s = strategy_from_json(text, &spec).unwrap();
        let again = serde_json::to_string(&strategy_doc(&s, spec.space())).unwrap();
        assert_eq!(strategy_from_json(&again, &spec).unwrap(), s);
        assert!(strategy_from_json(r#"{"kind":"restart_scale","eps":"2","inner":{"kind":"zero"}}"#, &spec).is_err());
    }

    #[test]
    fn superhedge_document_is_rebuilt_by_pricing() {
        let coin = spec_from_json(r#"{"outcomes":["0","1"],"cone":{"kind":"zero","probabilities":["1/2","1/2"]}}"#).unwrap();
        let text = r#"{"kind":"superhedge","event":{"class":"cylinder","horizon":2,"accepted":[["1","1"]]},"horizon":2}"#;
        let s = strategy_from_json(text, &coin).unwrap();
        let caps = s.capitals(crate::strategy::StrategyContext::new(&coin, None), &[Outcome(1), Outcome(1)]).unwrap();
        assert_eq!(caps, vec![int(2), int(4)]);
        let again = serde_json::to_string(&strategy_doc(&s, coin.space())).unwrap();
        assert_eq!(strategy_from_json(&again, &coin).unwrap(), s);
    }

    #[test]
    fn trace_round_trip_revalidates() {
        let spec = spec_from_json(MARKOV).unwrap();
        let s = strategy_from_json(r#"{"kind":"proportional","coeffs":["1/2","0"]}"#, &spec).unwrap();
        let mut r = build_reality(RealityKind::Scripted(vec![Outcome(1), Outcome(0), Outcome(0)]))
            .unwrap()
            .with_initial_state(Outcome(1));
        let t = run(&spec, &s, &mut r, 3, None);
        assert!(t.is_valid());
        let text = trace_to_jsonl(&t, spec.space());
        let back = trace_from_jsonl(&text, spec.space()).unwrap();
        assert_eq!(back, t);
        back.verify(&spec).unwrap();

        let mut tampered = back.clone();
        tampered.steps[1].capital += ratio(1, 7);
        assert!(tampered.verify(&spec).is_err());
    }
}
