//! Named, seeded verification suites. Each suite rebuilds its instances from
//! the seed, checks them against exact oracles and reports every failure.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cone::{build_cone, Cone, ConeSpec, Gamble, Outcome, OutcomeSpace, ProbabilityVector};
use crate::error::{Error, Result};
use crate::events::{all_sequences, ClosureKind, ClosureOutcome, EventClass, EventDescription, Membership};
use crate::oracle::{product_probability, quadrant_hit, residual_by_enumeration, ResidualVerdict};
use crate::pricing::{
    markov_upper_prob, oracle_price, price_tree, revalidate, upper_prob_cylinder, StartState,
};
use crate::protocol::{run, ProtocolSpec};
use crate::rational::{int, ratio, Rational};
use crate::strategy::{
    self as strat, build_reality, find_no_gain_prefix, prudence_check, prudence_check_from, walk_tree, Family,
    RealityKind, Runner, SkepticStrategy, StrategyContext,
};

pub const SUITES: &[&str] = &[
    "coherence-duality",
    "zero-cone-pricing",
    "price-bounds",
    "oracle-equivalence",
    "singly-generated-example",
    "fully-uncertain-tail",
    "restart-capital",
    "shift-transfer",
    "residual-decision",
    "event-classes",
];

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub name: String,
    pub seed: u64,
    pub checks: usize,
    pub notes: Vec<String>,
    pub failures: Vec<String>,
}

impl SuiteReport {
    fn new(name: &str, seed: u64) -> Self {
        Self { name: name.to_string(), seed, ..Self::default() }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    fn absorb(&mut self, part: Part) {
        self.checks += part.checks;
        self.failures.extend(part.failures);
    }
}

/// Checks gathered by one parallel worker.
#[derive(Default)]
struct Part {
    checks: usize,
    failures: Vec<String>,
}

impl Part {
    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.failures.push(what());
        }
    }
}

/// Runs one suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    if name == "all" {
        return SUITES.iter().map(|s| run_one(s, seed)).collect();
    }
    Ok(vec![run_one(name, seed)?])
}

fn run_one(name: &str, seed: u64) -> Result<SuiteReport> {
    let mut r = SuiteReport::new(name, seed);
    match name {
        "coherence-duality" => coherence_duality(&mut r)?,
        "zero-cone-pricing" => zero_cone_pricing(&mut r)?,
        "price-bounds" => price_bounds(&mut r)?,
        "oracle-equivalence" => oracle_equivalence(&mut r)?,
        "singly-generated-example" => singly_generated_example(&mut r)?,
        "fully-uncertain-tail" => fully_uncertain_tail(&mut r)?,
        "restart-capital" => restart_capital(&mut r)?,
        "shift-transfer" => shift_transfer(&mut r)?,
        "residual-decision" => residual_decision(&mut r)?,
        "event-classes" => event_classes(&mut r)?,
        other => {
            return Err(Error::InvalidParameter(format!("unknown suite {other:?}; known: all, {}", SUITES.join(", "))))
        }
    }
    Ok(r)
}

fn rng_for(seed: u64, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

fn o(i: usize) -> Outcome {
    Outcome(i)
}

fn labelled(m: usize) -> Arc<OutcomeSpace> {
    let labels: Vec<String> = (0..m).map(|i| i.to_string()).collect();
    Arc::new(OutcomeSpace::from_labels(&labels).expect("distinct labels"))
}

fn signs() -> Arc<OutcomeSpace> {
    Arc::new(OutcomeSpace::numeric(&[-1, 0, 1]).expect("distinct labels"))
}

fn random_gamble(rng: &mut ChaCha8Rng, m: usize) -> Gamble {
    Gamble::new((0..m).map(|_| int(rng.gen_range(-3..=3))).collect())
}

fn random_raw(rng: &mut ChaCha8Rng, space: &Arc<OutcomeSpace>, max_gens: usize) -> Result<Cone> {
    let k = rng.gen_range(0..=max_gens);
    let gens = (0..k).map(|_| random_gamble(rng, space.len())).collect();
    build_cone(ConeSpec::Raw(gens), space)
}

fn random_coherent(rng: &mut ChaCha8Rng, space: &Arc<OutcomeSpace>) -> Result<Cone> {
    loop {
        let cone = match rng.gen_range(0..4) {
            0 => build_cone(ConeSpec::Zero(random_measure(rng, space.len())), space)?,
            1 => build_cone(ConeSpec::Nonpositive(random_measure(rng, space.len())), space)?,
            2 => {
                let k = rng.gen_range(1..=2);
                let gens = (0..k).map(|_| random_gamble(rng, space.len())).collect();
                build_cone(ConeSpec::Span(gens), space)?
            }
            _ => random_raw(rng, space, 4)?,
        };
        if cone.is_coherent()? {
            return Ok(cone);
        }
    }
}

fn random_measure(rng: &mut ChaCha8Rng, m: usize) -> ProbabilityVector {
    loop {
        let w: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=4)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return ProbabilityVector::new(w.iter().map(|&x| ratio(x, total)).collect()).expect("normalized");
        }
    }
}

fn random_cylinder(rng: &mut ChaCha8Rng, m: usize, horizon: usize) -> Result<EventDescription> {
    let all = all_sequences(m, horizon)?;
    EventDescription::cylinder(m, horizon, all.into_iter().filter(|_| rng.gen_bool(0.5)))
}

fn accepted(e: &EventDescription) -> &std::collections::BTreeSet<Vec<Outcome>> {
    match e.class() {
        EventClass::Cylinder { accepted, .. } => accepted,
        _ => unreachable!("only cylinders are generated here"),
    }
}

fn coherence_duality(r: &mut SuiteReport) -> Result<()> {
    let mut rng = rng_for(r.seed, 1);
    let instances: Vec<(usize, Vec<Gamble>)> = (0..200)
        .map(|i| {
            let m = if i % 3 == 0 { 2 } else { rng.gen_range(1..=4) };
            let k = rng.gen_range(0..=5);
            (m, (0..k).map(|_| random_gamble(&mut rng, m)).collect())
        })
        .collect();
    let parts: Vec<Result<(Part, bool, bool)>> = instances
        .par_iter()
        .map(|(m, gens)| {
            let mut part = Part::default();
            let cone = build_cone(ConeSpec::Raw(gens.clone()), &labelled(*m))?;
            let verdict = cone.check_coherence()?;
            part.check(verdict.verify(&cone), || format!("certificate {verdict:?} fails for generators {gens:?}"));
            let planar = *m == 2;
            if planar {
                let pts: Vec<[Rational; 2]> =
                    gens.iter().map(|g| [g.payoffs()[0].clone(), g.payoffs()[1].clone()]).collect();
                part.check(verdict.is_coherent() != quadrant_hit(&pts), || {
                    format!("quadrant test disagrees with verdict {verdict:?} for {gens:?}")
                });
            }
            Ok((part, verdict.is_coherent(), planar))
        })
        .collect();
    let (mut coherent, mut planar) = (0, 0);
    for p in parts {
        let (part, c, pl) = p?;
        coherent += usize::from(c);
        planar += usize::from(pl);
        r.absorb(part);
    }
    r.note(format!("{} cones: {coherent} coherent, {} incoherent; {planar} planar cones matched the quadrant test", instances.len(), instances.len() - coherent));
    Ok(())
}

fn zero_cone_pricing(r: &mut SuiteReport) -> Result<()> {
    let mut rng = rng_for(r.seed, 2);
    let mut instances = Vec::new();
    for _ in 0..100 {
        let m = rng.gen_range(2..=3);
        let horizon = rng.gen_range(1..=4);
        let measures: Vec<ProbabilityVector> = if rng.gen_bool(0.5) {
            vec![random_measure(&mut rng, m)]
        } else {
            (0..horizon).map(|_| random_measure(&mut rng, m)).collect()
        };
        let event = random_cylinder(&mut rng, m, horizon)?;
        instances.push((m, horizon, measures, event));
    }
    let parts: Vec<Result<Part>> = instances
        .par_iter()
        .map(|(m, horizon, measures, event)| {
            let space = labelled(*m);
            let cones = measures.iter().map(|p| build_cone(ConeSpec::Zero(p.clone()), &space)).collect::<Result<Vec<_>>>()?;
            let spec = if cones.len() == 1 {
                ProtocolSpec::identical(cones[0].clone())?
            } else {
                ProtocolSpec::independent(cones)?
            };
            let priced = upper_prob_cylinder(&spec, event, *horizon)?;
            let expected = product_probability(measures, accepted(event));
            let mut part = Part::default();
            part.check(priced.upper == expected && priced.lower == expected, || {
                format!("upper {} lower {} but product measure gives {expected} ({event:?})", priced.upper, priced.lower)
            });
            Ok(part)
        })
        .collect();
    for p in parts {
        r.absorb(p?);
    }
    r.note(format!("{} product-measure instances priced at the product probability", instances.len()));
    Ok(())
}

/// Replays the superhedge of `tree` over the whole tree: nonnegative capital
/// everywhere and at least `1 / price` on every leaf in the event.
fn certificate_sound(spec: &ProtocolSpec, tree: &crate::pricing::PriceTree) -> Result<bool> {
    let root = tree.root_value();
    if root.is_zero() {
        return Ok(true);
    }
    let s = strat::superhedge_strategy(Arc::new(tree.clone()))?;
    let target = Rational::one() / &root;
    let mut ok = true;
    walk_tree(&s, StrategyContext { spec, offset: tree.offset, omega0: tree.omega0 }, tree.horizon, &mut |p, k| {
        let leaf_in = p.len() == tree.horizon && tree.leaves.get(p).copied().unwrap_or(false);
        ok &= !k.is_negative() && (!leaf_in || *k >= target);
        ok
    })?;
    Ok(ok)
}

fn price_bounds(r: &mut SuiteReport) -> Result<()> {
    let mut rng = rng_for(r.seed, 3);
    let mut priced = 0;
    for i in 0..60 {
        let m = rng.gen_range(2..=3);
        let horizon = rng.gen_range(1..=3);
        let space = labelled(m);
        let spec = if i % 2 == 0 {
            ProtocolSpec::identical(random_coherent(&mut rng, &space)?)?
        } else {
            ProtocolSpec::independent((0..horizon).map(|_| random_coherent(&mut rng, &space)).collect::<Result<_>>()?)?
        };
        let e = random_cylinder(&mut rng, m, horizon)?;
        let extra = random_cylinder(&mut rng, m, horizon)?;
        let res = upper_prob_cylinder(&spec, &e, horizon)?;
        priced += 1;
        let (lo, up) = (&res.lower, &res.upper);
        r.check(!lo.is_negative() && lo <= up && up <= &Rational::one(), || format!("bounds violated: lower {lo}, upper {up}"));
        r.check(revalidate(&spec, &res.certificate_upper)?, || format!("node values do not re-validate for {e:?}"));
        r.check(certificate_sound(&spec, &res.certificate_upper)?, || format!("superhedge replay fails for {e:?}"));
        let union = EventDescription::cylinder(m, horizon, accepted(&e).union(accepted(&extra)).cloned())?;
        let bigger = upper_prob_cylinder(&spec, &union, horizon)?.upper;
        r.check(up <= &bigger, || format!("monotonicity: {up} > {bigger}"));
    }
    for _ in 0..10 {
        let m = rng.gen_range(2..=3);
        let space = labelled(m);
        let spec = ProtocolSpec::markov((0..m).map(|_| random_coherent(&mut rng, &space)).collect::<Result<_>>()?)?;
        let horizon = rng.gen_range(1..=3);
        let e = random_cylinder(&mut rng, m, horizon)?;
        for (omega0, up) in markov_upper_prob(&spec, &e, StartState::All)?.per_state {
            let low = Rational::one() - price_tree(&spec, &e.complement(), horizon, 0, Some(omega0))?.root_value();
            priced += 1;
            r.check(!low.is_negative() && low <= up && up <= Rational::one(), || format!("markov bounds: {low} / {up}"));
        }
    }
    r.note(format!("{priced} priced instances satisfy 0 <= lower <= upper <= 1"));

    // the mixture identity behind the bounds
    let coin = ProtocolSpec::identical(build_cone(ConeSpec::Zero(ProbabilityVector::uniform(2)?), &labelled(2))?)?;
    for _ in 0..12 {
        let s1 = random_prudent(&mut rng, &coin)?;
        let s2 = random_prudent(&mut rng, &coin)?;
        let (w1, w2) = (ratio(rng.gen_range(1..=4), 2), ratio(rng.gen_range(1..=4), 3));
        let mix = strat::scaled_sum(s1.clone(), s2.clone(), w1.clone(), w2.clone())?;
        let ctx = StrategyContext::new(&coin, None);
        let (k1, k2, k) = (capital_map(&s1, ctx, 4)?, capital_map(&s2, ctx, 4)?, capital_map(&mix, ctx, 4)?);
        let total = &w1 + &w2;
        let ok = k.iter().all(|(p, v)| {
            let expected = (&w1 * (&k1[p] - Rational::one()) + &w2 * (&k2[p] - Rational::one())) / &total;
            v - Rational::one() == expected && !v.is_negative()
        });
        r.check(ok, || format!("mixture capital identity fails for {s1:?} and {s2:?}"));
    }
    r.note("mixture capital identity holds on 12 random prudent pairs, depth 4");
    Ok(())
}

/// A capital-proportional strategy whose one-trial loss never exceeds the capital.
fn random_prudent(rng: &mut ChaCha8Rng, spec: &ProtocolSpec) -> Result<SkepticStrategy> {
    let cone = &spec.cones()[0];
    let mut c: Vec<Rational> = cone.generators().iter().map(|_| ratio(rng.gen_range(0..=3), 2)).collect();
    let worst = cone.combine(&c)?.min();
    if worst < -Rational::one() {
        let scale = -Rational::one() / worst;
        c = c.iter().map(|x| x * &scale).collect();
    }
    Ok(match rng.gen_range(0..3) {
        0 => SkepticStrategy::Proportional(c),
        1 => strat::stop_when(SkepticStrategy::Proportional(c), Some(int(2))),
        _ => strat::restart_scale(Family::Uniform(Box::new(SkepticStrategy::Proportional(c))), ratio(1, 2))?,
    })
}

fn capital_map(s: &SkepticStrategy, ctx: StrategyContext<'_>, depth: usize) -> Result<BTreeMap<Vec<Outcome>, Rational>> {
    let mut out = BTreeMap::new();
    walk_tree(s, ctx, depth, &mut |p, k| {
        out.insert(p.to_vec(), k.clone());
        true
    })?;
    Ok(out)
}

fn oracle_equivalence(r: &mut SuiteReport) -> Result<()> {
    let mut rng = rng_for(r.seed, 4);
    let mut instances = Vec::new();
    for i in 0..50 {
        let m = rng.gen_range(2..=3);
        let horizon = rng.gen_range(1..=3);
        let space = labelled(m);
        let (spec, omega0) = match i % 5 {
            0 => {
                let cones = (0..m).map(|_| random_coherent(&mut rng, &space)).collect::<Result<_>>()?;
                (ProtocolSpec::markov(cones)?, Some(o(rng.gen_range(0..m))))
            }
            1 | 2 => {
                let cones = (0..horizon).map(|_| random_coherent(&mut rng, &space)).collect::<Result<_>>()?;
                (ProtocolSpec::independent(cones)?, None)
            }
            _ => (ProtocolSpec::identical(random_coherent(&mut rng, &space)?)?, None),
        };
        instances.push((spec, omega0, horizon, random_cylinder(&mut rng, m, horizon)?));
    }
    let parts: Vec<Result<Part>> = instances
        .par_iter()
        .map(|(spec, omega0, horizon, e)| {
            let backward = price_tree(spec, e, *horizon, 0, *omega0)?.root_value();
            let whole = oracle_price(spec, e, *horizon, 0, *omega0)?;
            let mut part = Part::default();
            part.check(backward == whole, || format!("backward induction {backward} vs whole-tree LP {whole} for {e:?}"));
            Ok(part)
        })
        .collect();
    let mut matches = 0;
    for p in parts {
        let p = p?;
        matches += usize::from(p.failures.is_empty());
        r.absorb(p);
    }
    r.note(format!("{matches}/{} exact matches with the whole-tree LP", instances.len()));
    Ok(())
}

/// Protocol on {-1, 0, 1} whose only bets are `t (-1, 0, 1)`, `t >= 0`.
pub fn one_sided_spec() -> Result<ProtocolSpec> {
    ProtocolSpec::identical(build_cone(ConeSpec::Raw(vec![Gamble::from_ints(&[-1, 0, 1])]), &signs())?)
}

/// Bet everything on 1 and stop once capital has doubled.
pub fn doubling() -> SkepticStrategy {
    strat::stop_when(SkepticStrategy::Proportional(vec![int(1)]), Some(int(2)))
}

/// Exactly one 1 and no -1, on {-1, 0, 1}.
pub fn single_one_event() -> EventDescription {
    EventDescription::new(
        3,
        EventClass::CountExactly { outcome: o(2), count: 1, forbidden: [o(0)].into_iter().collect() },
    )
    .expect("valid outcomes")
}

/// Best guarantee on the single-one event over per-trial coefficient
/// schedules `t_1..t_4` from `{0, 1/4, ..., 2}` on the one-sided cone, both
/// played blindly and stopped after the first nonzero outcome. Schedules
/// that can lose more than the initial capital are discarded.
pub fn grid_search_guarantee() -> (Rational, usize) {
    let grid: Vec<Rational> = (0..=8).map(|i| ratio(i, 4)).collect();
    let paths = all_sequences(3, 4).expect("81 paths");
    let value = |o: &Outcome| int(o.0 as i64 - 1);
    let in_event = |p: &[Outcome]| p.iter().filter(|o| o.0 == 2).count() == 1 && p.iter().all(|o| o.0 != 0);
    let mut best = Rational::zero();
    let mut prudent_count = 0;
    for code in 0..grid.len().pow(4) {
        let sched: Vec<&Rational> = (0..4).map(|i| &grid[(code / grid.len().pow(i)) % grid.len()]).collect();
        for gated in [false, true] {
            let mut prudent = true;
            let mut guarantee: Option<Rational> = None;
            for p in &paths {
                let mut k = Rational::one();
                let mut peak = Rational::one();
                let mut stopped = false;
                for (t, w) in sched.iter().zip(p) {
                    if !stopped {
                        k += *t * value(w);
                        peak = peak.max(k.clone());
                        stopped = gated && w.0 != 1;
                    }
                    prudent &= !k.is_negative();
                }
                if in_event(p) {
                    guarantee = Some(guarantee.map_or(peak.clone(), |g| g.min(peak)));
                }
            }
            if prudent {
                prudent_count += 1;
                best = best.max(guarantee.expect("event paths exist"));
            }
        }
    }
    (best, prudent_count)
}

fn singly_generated_example(r: &mut SuiteReport) -> Result<()> {
    let spec = one_sided_spec()?;
    let first_one = EventDescription::cylinder(3, 1, [vec![o(2)]])?;
    let res = upper_prob_cylinder(&spec, &first_one, 1)?;
    r.check(res.upper == ratio(1, 2) && res.lower.is_zero(), || {
        format!("first-trial event priced at upper {} lower {}, expected 1/2 and 0", res.upper, res.lower)
    });
    r.note(format!("upper(w1 = 1) = {}, lower(w1 = 1) = {}", res.upper, res.lower));

    let e = single_one_event();
    let s = doubling();
    let mut reached = 0;
    for j in 0..8 {
        let mut script = vec![o(1); 12];
        script[j] = o(2);
        let mut reality = build_reality(RealityKind::Scripted(script))?;
        let trace = run(&spec, &s, &mut reality, 12, Some(&e));
        let never_out = trace.steps.iter().all(|st| st.membership != Some(Membership::Out));
        let ok = trace.is_valid() && trace.final_capital() == int(2) && trace.max_capital() == int(2) && never_out;
        reached += usize::from(ok);
        r.check(ok, || format!("doubling with the 1 at trial {}: capitals {:?}", j + 1, trace.capitals()));
    }
    r.note(format!("doubling strategy ends at exactly 2 on {reached}/8 event paths"));

    let (best, prudent) = grid_search_guarantee();
    r.check(best == int(2), || format!("grid search found guarantee {best}, expected at most 2 and attained"));
    r.note(format!("grid search over {prudent} prudent schedules: best guarantee {best}"));

    for n in 1..=4 {
        let truncated = EventDescription::cylinder_where(3, n, |p| {
            p.iter().filter(|o| o.0 == 2).count() == 1 && p.iter().all(|o| o.0 != 0)
        })?;
        let up = upper_prob_cylinder(&spec, &truncated, n)?.upper;
        r.check(up == ratio(1, 2), || format!("truncation to {n} trials priced at {up}"));
    }
    r.note("truncations to 1..4 trials all have upper probability 1/2");
    Ok(())
}

/// Protocol on {-1, 0, 1} whose bets are all multiples of `(-1, 0, 1)`.
pub fn span_spec() -> Result<ProtocolSpec> {
    ProtocolSpec::identical(build_cone(ConeSpec::Span(vec![Gamble::from_ints(&[-1, 0, 1])]), &signs())?)
}

/// Twenty strategies for the span protocol, one or more of every kind.
pub fn span_corpus(spec: &ProtocolSpec) -> Result<Vec<SkepticStrategy>> {
    use SkepticStrategy::{ConstantCoeffs as C, Proportional as P};
    let up = || P(vec![int(1), int(0)]);
    let down = || P(vec![int(0), int(1)]);
    let first_one = EventDescription::cylinder(3, 1, [vec![o(2)]])?;
    let two_ones = EventDescription::cylinder(3, 2, [vec![o(2), o(2)]])?;
    let hedge = |e: &EventDescription, n| -> Result<SkepticStrategy> {
        strat::superhedge_strategy(Arc::new(price_tree(spec, e, n, 0, None)?))
    };
    let generated =
        EventDescription::new(3, EventClass::GeneratedPermutable { head: vec![o(2)], tail: o(1) })?;
    Ok(vec![
        SkepticStrategy::Zero,
        C(vec![int(1), int(0)]),
        C(vec![int(0), int(1)]),
        C(vec![ratio(1, 2), ratio(1, 4)]),
        up(),
        down(),
        P(vec![ratio(1, 3), int(0)]),
        hedge(&first_one, 1)?,
        hedge(&two_ones, 2)?,
        strat::scaled_sum(up(), down(), int(1), int(1))?,
        strat::scaled_sum(C(vec![int(1), int(0)]), hedge(&first_one, 1)?, int(1), int(2))?,
        strat::shift_embed(up(), 2),
        strat::shift_embed(C(vec![ratio(1, 2), ratio(1, 4)]), 1),
        strat::stop_when(up(), Some(int(2))),
        strat::stop_when(C(vec![int(1), int(0)]), None),
        strat::restart_scale(Family::Uniform(Box::new(up())), ratio(1, 2))?,
        strat::restart_scale(Family::Uniform(Box::new(strat::stop_when(down(), Some(int(3))))), ratio(1, 3))?,
        strat::alternating_restart(up(), down(), generated, ratio(1, 2))?,
        strat::shift_transfer(up(), vec![o(0)]),
        strat::shift_transfer(strat::restart_scale(Family::Uniform(Box::new(down())), ratio(1, 2))?, vec![o(2), o(1)]),
    ])
}

fn fully_uncertain_tail(r: &mut SuiteReport) -> Result<()> {
    let spec = span_spec()?;
    let corpus = span_corpus(&spec)?;
    let mostly_zero = EventDescription::new(3, EventClass::AllButFinitelyEqual(o(1)))?;
    for s in &corpus {
        let mut evader = build_reality(RealityKind::Evader)?;
        let t = run(&spec, s, &mut evader, 50, Some(&mostly_zero));
        let nonzero = t.outcomes().iter().all(|w| spec.space().is_nonzero(*w));
        r.check(t.is_valid() && t.steps.len() == 50 && nonzero && t.max_capital() <= Rational::one(), || {
            format!("evader vs {}: valid {}, all nonzero {nonzero}, max capital {}", s.name(), t.is_valid(), t.max_capital())
        });
        let mut zeros = build_reality(RealityKind::Scripted(vec![o(1)]))?;
        let t = run(&spec, s, &mut zeros, 50, Some(&mostly_zero));
        let flat = t.steps.iter().all(|st| st.capital.is_one() && st.omega == o(1));
        r.check(t.is_valid() && flat, || format!("all-zero path vs {}: capitals {:?}", s.name(), t.capitals()));
    }
    r.note(format!(
        "{} strategies: the evader keeps every outcome nonzero and capital <= 1 for 50 trials; the all-zero path keeps capital at 1",
        corpus.len()
    ));
    Ok(())
}

fn restart_capital(r: &mut SuiteReport) -> Result<()> {
    let coin = ProtocolSpec::identical(build_cone(ConeSpec::Zero(ProbabilityVector::uniform(2)?), &labelled(2))?)?;
    let s = strat::restart_scale(Family::Uniform(Box::new(SkepticStrategy::Proportional(vec![int(1), int(0)]))), ratio(1, 2))?;
    let ctx = StrategyContext::new(&coin, None);
    let caps = s.capitals(ctx, &[o(1); 5])?;
    r.check(caps == vec![int(2), int(4), int(8), int(16), int(32)], || format!("all-ones capitals {caps:?}"));
    r.note(format!("fair coin, all ones: capital {} after 5 epochs", caps.last().expect("five trials")));

    let mut rng = rng_for(r.seed, 7);
    for _ in 0..40 {
        let path: Vec<Outcome> = (0..12).map(|_| o(usize::from(rng.gen_bool(0.7)))).collect();
        r.check(epoch_law(&s, ctx, &path, &int(2))?, || format!("epoch law fails on {path:?}"));
    }
    let report = prudence_check(&s, &coin, 6)?;
    r.check(report.prudent, || format!("restart strategy imprudent: {:?}", report.violation));

    let three = ProtocolSpec::identical(build_cone(ConeSpec::Zero(ProbabilityVector::uniform(3)?), &labelled(3))?)?;
    let triple = strat::restart_scale(
        Family::Uniform(Box::new(SkepticStrategy::Proportional(vec![int(0), int(1), int(2), int(0)]))),
        ratio(1, 3),
    )?;
    let caps = triple.capitals(StrategyContext::new(&three, None), &[o(2); 3])?;
    r.check(caps.last() == Some(&int(27)), || format!("tripling restart capitals {caps:?}"));
    r.check(prudence_check(&triple, &three, 5)?.prudent, || "tripling restart imprudent".into());

    let (markov, family) = markov_example()?;
    let mctx = StrategyContext::new(&markov, Some(o(0)));
    let alternating: Vec<Outcome> = (0..6).map(|i| o(1 - i % 2)).collect();
    let caps = family.capitals(mctx, &alternating)?;
    r.check(caps.last() == Some(&int(64)), || format!("markov alternating capitals {caps:?}"));
    r.check(epoch_law(&family, mctx, &alternating, &int(2))?, || "markov epoch law fails".into());
    let report = prudence_check(&family, &markov, 6)?;
    r.check(report.prudent, || format!("markov restart imprudent: {:?}", report.violation));
    r.note(format!("two-state chain from a, alternating path: capital {}", caps.last().expect("six trials")));
    Ok(())
}

/// The two-state chain where state a is a fair coin and state b favours a
/// two to one, with per-state members that double on the other state.
pub fn markov_example() -> Result<(ProtocolSpec, SkepticStrategy)> {
    let space = Arc::new(OutcomeSpace::from_labels(&["a", "b"])?);
    let at_a = build_cone(ConeSpec::Zero(ProbabilityVector::uniform(2)?), &space)?;
    let at_b = build_cone(ConeSpec::Zero(ProbabilityVector::new(vec![ratio(1, 3), ratio(2, 3)])?), &space)?;
    let spec = ProtocolSpec::markov(vec![at_a, at_b])?;
    let family = Family::ByState(vec![
        SkepticStrategy::Proportional(vec![int(1), int(0)]),
        SkepticStrategy::Proportional(vec![int(0), ratio(1, 2)]),
    ]);
    Ok((spec, strat::restart_scale(family, ratio(1, 2))?))
}

/// After each completed epoch `k`, capital is at least `factor^k`.
fn epoch_law(s: &SkepticStrategy, ctx: StrategyContext<'_>, path: &[Outcome], factor: &Rational) -> Result<bool> {
    let mut runner = Runner::new(s, ctx)?;
    let mut epochs = 0i32;
    let mut last = runner.epoch_capital().cloned();
    for &w in path {
        runner.observe(w)?;
        let now = runner.epoch_capital().cloned();
        if now != last {
            epochs += 1;
            if runner.capital() < &factor.pow(epochs) {
                return Ok(false);
            }
            last = now;
        }
        if runner.capital().is_negative() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Prudent strategies for the no-gain prefix and transfer checks on a given protocol.
pub fn prudent_corpus(spec: &ProtocolSpec, with_hedge: bool) -> Result<Vec<SkepticStrategy>> {
    use SkepticStrategy::Proportional as P;
    let k = spec.cones()[0].generators().len();
    let unit = |i: usize, v: Rational| {
        let mut c = vec![int(0); k];
        c[i] = v;
        c
    };
    let mut out = vec![
        SkepticStrategy::Zero,
        P(unit(0, int(1))),
        P(unit(1, ratio(1, 2))),
        strat::stop_when(P(unit(0, int(1))), Some(int(2))),
        strat::scaled_sum(P(unit(0, int(1))), P(unit(1, int(1))), int(1), int(3))?,
        strat::restart_scale(Family::Uniform(Box::new(P(unit(0, int(1))))), ratio(1, 2))?,
        strat::shift_embed(P(unit(0, int(1))), 1),
    ];
    if with_hedge {
        let m = spec.space().len();
        let e = EventDescription::cylinder(m, 2, [vec![o(m - 1), o(m - 1)]])?;
        out.push(strat::superhedge_strategy(Arc::new(price_tree(spec, &e, 2, 0, None)?))?);
    }
    Ok(out)
}

fn shift_transfer(r: &mut SuiteReport) -> Result<()> {
    let space = labelled(2);
    let zero = |p: Rational| -> Result<Cone> {
        build_cone(ConeSpec::Zero(ProbabilityVector::new(vec![Rational::one() - &p, p])?), &space)
    };
    let specs = vec![
        ProtocolSpec::identical(zero(ratio(1, 2))?)?,
        ProtocolSpec::independent(vec![zero(ratio(1, 2))?, zero(ratio(1, 3))?, zero(ratio(1, 4))?])?,
    ];
    let mut transfers = 0;
    for spec in &specs {
        for s in prudent_corpus(spec, true)? {
            let prudent = prudence_check(&s, spec, 6)?.prudent;
            r.check(prudent, || format!("corpus strategy {} is not prudent", s.name()));
            if !prudent {
                continue;
            }
            for n in 0..=3 {
                let prefix = find_no_gain_prefix(&s, n, spec)?;
                let caps = s.capitals(StrategyContext::new(spec, None), &prefix)?;
                let no_gain = std::iter::once(Rational::one()).chain(caps.iter().cloned()).collect::<Vec<_>>().windows(2).all(|w| w[1] <= w[0]);
                r.check(prefix.len() == n && no_gain, || format!("{}: prefix {prefix:?} has capitals {caps:?}", s.name()));
                let t = strat::shift_transfer(s.clone(), prefix.clone());
                let report = prudence_check_from(&t, StrategyContext { spec, offset: n, omega0: None }, 3)?;
                r.check(report.prudent, || format!("{} transferred after {prefix:?}: {:?}", s.name(), report.violation));
                transfers += 1;
            }
        }
        for s in prudent_corpus(spec, spec.is_identical())? {
            for n in 1..=2 {
                let embedded = strat::shift_embed(s.clone(), n);
                let ctx = StrategyContext::new(spec, None);
                let shifted = StrategyContext { spec, offset: n, omega0: None };
                let mut ok = true;
                for path in all_sequences(2, n + 3)? {
                    let big = embedded.capitals(ctx, &path)?;
                    let small = s.capitals(shifted, &path[n..])?;
                    ok &= big[..n].iter().all(|k| k.is_one()) && big[n..] == small[..];
                }
                r.check(ok, || format!("shift embedding of {} by {n} does not match the shifted protocol", s.name()));
            }
        }
    }
    r.note(format!("{transfers} no-gain prefixes found and transferred strategies prudent at depth 3"));
    Ok(())
}

/// Residual decision against witness enumeration over every generator with
/// head length at most 3 and every prefix of length at most 5, `|Omega| <= 3`.
pub fn residual_sweep() -> Result<(usize, Vec<String>)> {
    let mut cases = Vec::new();
    for m in 1..=3 {
        for h in 0..=3 {
            for head in all_sequences(m, h)? {
                for tail in 0..m {
                    cases.push((m, head.clone(), o(tail)));
                }
            }
        }
    }
    let results: Vec<Result<(usize, Vec<String>)>> = cases
        .par_iter()
        .map(|(m, head, tail)| {
            let e = EventDescription::new(*m, EventClass::GeneratedPermutable { head: head.clone(), tail: *tail })?;
            let mut n = 0;
            let mut bad = Vec::new();
            for len in 0..=5 {
                for prefix in all_sequences(*m, len)? {
                    n += 1;
                    let oracle = residual_by_enumeration(*m, head, *tail, &prefix);
                    let fast = e.residual_in_generated(&prefix);
                    let agree = matches!(
                        (oracle, &fast),
                        (ResidualVerdict::NoWitness, Err(Error::PrefixOutsideEvent))
                            | (ResidualVerdict::Always, Ok(true))
                            | (ResidualVerdict::Never, Ok(false))
                    );
                    if !agree {
                        bad.push(format!("generator {head:?}+{tail:?}*, prefix {prefix:?}: oracle {oracle:?}, decision {fast:?}"));
                    }
                }
            }
            Ok((n, bad))
        })
        .collect();
    let mut total = 0;
    let mut bad = Vec::new();
    for r in results {
        let (n, b) = r?;
        total += n;
        bad.extend(b);
    }
    Ok((total, bad))
}

/// Uniform protocol on {-1, 0, 1} with bets doubling on 1 and on 0.
pub fn alternating_example() -> Result<(ProtocolSpec, SkepticStrategy)> {
    let spec = ProtocolSpec::identical(build_cone(ConeSpec::Zero(ProbabilityVector::uniform(3)?), &signs())?)?;
    let on_one = SkepticStrategy::Proportional(vec![int(0), int(0), int(1), int(0)]);
    let on_zero = SkepticStrategy::Proportional(vec![int(1), int(0), int(0), ratio(1, 2)]);
    let e = EventDescription::new(3, EventClass::GeneratedPermutable { head: vec![o(2)], tail: o(1) })?;
    Ok((spec.clone(), strat::alternating_restart(on_one, on_zero, e, ratio(1, 2))?))
}

fn residual_decision(r: &mut SuiteReport) -> Result<()> {
    let (total, bad) = residual_sweep()?;
    r.checks += total;
    r.failures.extend(bad.into_iter().take(10));
    r.note(format!("{total} (generator, prefix) pairs agree with witness enumeration"));

    let (spec, s) = alternating_example()?;
    let ctx = StrategyContext::new(&spec, None);
    let path = [o(1), o(2), o(1), o(1)];
    let caps = s.capitals(ctx, &path)?;
    r.check(caps == vec![int(1), int(2), int(4), int(8)], || format!("alternating restart capitals {caps:?}"));
    r.check(epoch_law(&s, ctx, &path, &int(2))?, || "alternating restart epoch law fails".into());
    let stuck = s.capitals(ctx, &[o(1); 10])?;
    r.check(stuck.iter().all(|k| k.is_one()), || format!("all-zero path capitals {stuck:?}"));
    r.note(format!("alternating restart on 0,1,0,0: capitals {}", caps.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",")));
    Ok(())
}

fn event_classes(r: &mut SuiteReport) -> Result<()> {
    const SAMPLES: usize = 500;
    let seed = r.seed;
    let space = signs();
    let set = |xs: &[usize]| xs.iter().map(|&i| o(i)).collect();
    let mostly_zero = EventDescription::new(3, EventClass::AllButFinitelyEqual(o(1)))?;
    let all_ones = EventDescription::new(3, EventClass::EveryTermIn(set(&[2])))?;
    let single = single_one_event();
    let expectations = [
        ("all_but_finitely_equal(0)", &mostly_zero, ClosureKind::Tail, true),
        ("every_term_in({1})", &all_ones, ClosureKind::WeaklyInvariant, true),
        ("every_term_in({1})", &all_ones, ClosureKind::Invariant, false),
        ("count_exactly(1, 1, {-1})", &single, ClosureKind::Permutable, true),
        ("count_exactly(1, 1, {-1})", &single, ClosureKind::Tail, false),
    ];
    for (name, e, kind, expect_pass) in expectations {
        let out = e.check_closure(kind, SAMPLES, 8, seed)?;
        let again = e.check_closure(kind, SAMPLES, 8, seed)?;
        r.check(out == again, || format!("{name} {kind:?}: not reproducible"));
        r.check(out.passed() == expect_pass && e.flags().get(kind) == Some(expect_pass), || {
            format!("{name} {kind:?}: expected pass={expect_pass}, got {out:?}")
        });
        match &out {
            ClosureOutcome::Pass => r.note(format!("{name} {kind:?}: no counterexample in {SAMPLES} samples")),
            ClosureOutcome::Counterexample { original, modified, original_in, modified_in } => {
                r.check(e.contains(original) == *original_in && e.contains(modified) == *modified_in && original_in != modified_in, || {
                    format!("{name} {kind:?}: counterexample does not re-evaluate")
                });
                let show = |p: &crate::events::Path| {
                    format!("{} then {} forever", space.labels_of(&p.prefix).join(","), space.label(p.tail))
                };
                r.note(format!(
                    "{name} {kind:?}: counterexample {} (in: {original_in}) vs {} (in: {modified_in})",
                    show(original),
                    show(modified)
                ))
            }
        }
    }

    // invariance holds iff both the event and its complement are weakly invariant
    let kinds: Vec<EventDescription> = vec![
        mostly_zero.clone(),
        all_ones.clone(),
        single.clone(),
        EventDescription::new(3, EventClass::InfinitelyOften(set(&[0, 2])))?,
        EventDescription::new(3, EventClass::GeneratedPermutable { head: vec![o(2)], tail: o(1) })?,
        EventDescription::new(3, EventClass::EveryTermIn(set(&[0, 1, 2])))?,
    ];
    for e in &kinds {
        let inv = e.check_closure(ClosureKind::Invariant, SAMPLES, 8, seed)?.passed();
        let weak = e.check_closure(ClosureKind::WeaklyInvariant, SAMPLES, 8, seed)?.passed();
        let weak_c = e.complement().check_closure(ClosureKind::WeaklyInvariant, SAMPLES, 8, seed)?.passed();
        r.check(inv == (weak && weak_c), || format!("invariance of {e:?}: {inv} but weak checks {weak}/{weak_c}"));
        for kind in [ClosureKind::Tail, ClosureKind::WeaklyInvariant, ClosureKind::Invariant, ClosureKind::Permutable] {
            if let Some(flag) = e.flags().get(kind) {
                let found = e.check_closure(kind, SAMPLES, 8, seed)?.passed();
                r.check(found == flag, || format!("{e:?} {kind:?}: flag {flag}, refuter pass {found}"));
            }
        }
    }
    Ok(())
}
