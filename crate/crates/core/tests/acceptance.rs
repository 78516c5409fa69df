//! The ten acceptance criteria. Every expected value comes from an oracle
//! written in this file; the library is only the system under test.
//! Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zeroone::cone::{build_cone, CoherenceVerdict, Cone, ConeSpec, Gamble, Outcome, OutcomeSpace, ProbabilityVector};
use zeroone::events::{ClosureKind, ClosureOutcome, EventClass, EventDescription, Membership, Path};
use zeroone::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, VarKind};
use zeroone::pricing::{oracle_price, price_tree, priced, upper_prob_cylinder, PriceTree};
use zeroone::protocol::{run, ProtocolSpec, Trace};
use zeroone::rational::{int, ratio, Rational};
use zeroone::strategy::{
    alternating_restart, build_reality, find_no_gain_prefix, restart_scale, scaled_sum, shift_embed, shift_transfer,
    stop_when, superhedge_strategy, Family, RealityKind, Runner, SkepticStrategy, StrategyContext,
};

type R = Rational;
type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn e<E: std::fmt::Debug>(err: E) -> String {
    format!("{err:?}")
}

fn o(i: usize) -> Outcome {
    Outcome(i)
}

fn seqs(m: usize, len: usize) -> Vec<Vec<Outcome>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out.into_iter().flat_map(|p| (0..m).map(move |i| [p.clone(), vec![o(i)]].concat())).collect();
    }
    out
}

fn labelled(m: usize) -> Arc<OutcomeSpace> {
    let labels: Vec<String> = (0..m).map(|i| i.to_string()).collect();
    Arc::new(OutcomeSpace::from_labels(&labels).unwrap())
}

/// {-1, 0, 1}; outcome `i` has value `i - 1`.
fn signs() -> Arc<OutcomeSpace> {
    Arc::new(OutcomeSpace::numeric(&[-1, 0, 1]).unwrap())
}

fn dot(a: &[R], b: &[R]) -> R {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Payoff at `w` of the coefficients applied to the generators, computed here.
fn payoff(cone: &Cone, coeffs: &[R], w: Outcome) -> Result<R, String> {
    ensure!(coeffs.len() == cone.generators().len(), "coefficient count {} for {} generators", coeffs.len(), cone.generators().len());
    ensure!(coeffs.iter().all(|c| !c.is_negative()), "negative coefficient in {coeffs:?}");
    Ok(coeffs.iter().zip(cone.generators()).map(|(c, g)| c * &g.payoffs()[w.0]).sum())
}

/// Capital after each trial, recomputed from the strategy's moves.
fn replay(s: &SkepticStrategy, ctx: StrategyContext<'_>, path: &[Outcome]) -> Result<Vec<R>, String> {
    let mut k = R::one();
    let mut out = Vec::with_capacity(path.len());
    for i in 0..path.len() {
        let c = s.coeffs(ctx, &path[..i], &k).map_err(e)?;
        let prev = if i == 0 { ctx.omega0 } else { Some(path[i - 1]) };
        let cone = ctx.spec.cone_for(ctx.offset, i + 1, prev).map_err(e)?;
        k += payoff(cone, &c, path[i])?;
        out.push(k.clone());
    }
    Ok(out)
}

fn trace_agrees(spec: &ProtocolSpec, t: &Trace) -> Result<(), String> {
    let mut k = R::one();
    for (i, st) in t.steps.iter().enumerate() {
        let prev = if i == 0 { t.omega0 } else { Some(t.steps[i - 1].omega) };
        let cone = spec.cone_for(0, i + 1, prev).map_err(e)?;
        k += payoff(cone, &st.coeffs, st.omega)?;
        ensure!(k == st.capital, "trace capital {} at step {} but moves give {k}", st.capital, i + 1);
    }
    Ok(())
}

fn random_measure(rng: &mut ChaCha8Rng, m: usize) -> ProbabilityVector {
    loop {
        let w: Vec<i64> = (0..m).map(|_| rng.gen_range(0..=4)).collect();
        let total: i64 = w.iter().sum();
        if total > 0 {
            return ProbabilityVector::new(w.iter().map(|&x| ratio(x, total)).collect()).unwrap();
        }
    }
}

fn random_gamble(rng: &mut ChaCha8Rng, m: usize) -> Gamble {
    Gamble::new((0..m).map(|_| int(rng.gen_range(-3..=3))).collect())
}

fn random_coherent(rng: &mut ChaCha8Rng, space: &Arc<OutcomeSpace>) -> Cone {
    let m = space.len();
    loop {
        let spec = match rng.gen_range(0..4) {
            0 => ConeSpec::Zero(random_measure(rng, m)),
            1 => ConeSpec::Nonpositive(random_measure(rng, m)),
            2 => ConeSpec::Span(vec![random_gamble(rng, m)]),
            _ => ConeSpec::Raw((0..rng.gen_range(1..=3)).map(|_| random_gamble(rng, m)).collect()),
        };
        let cone = build_cone(spec, space).unwrap();
        if cone.is_coherent().unwrap() {
            return cone;
        }
    }
}

fn random_accepted(rng: &mut ChaCha8Rng, m: usize, horizon: usize) -> BTreeSet<Vec<Outcome>> {
    seqs(m, horizon).into_iter().filter(|_| rng.gen_bool(0.5)).collect()
}

/// Checks every node of a price tree: nonnegative coefficients whose hedge
/// from the node value covers each child's value.
fn certificate_ok(spec: &ProtocolSpec, tree: &PriceTree, m: usize) -> Result<(), String> {
    for len in 0..tree.horizon {
        for p in seqs(m, len) {
            let node = tree.node(&p).ok_or_else(|| format!("missing node {p:?}"))?;
            let prev = p.last().copied().or(tree.omega0);
            let cone = spec.cone_for(tree.offset, len + 1, prev).map_err(e)?;
            for w in 0..m {
                let child = [p.clone(), vec![o(w)]].concat();
                let needed = if len + 1 == tree.horizon {
                    if tree.leaves[&child] { R::one() } else { R::zero() }
                } else {
                    tree.node(&child).ok_or_else(|| format!("missing node {child:?}"))?.value.clone()
                };
                let have = &node.value + payoff(cone, &node.coeffs, o(w))?;
                ensure!(have >= needed, "hedge at {p:?} pays {have} on {w} but the child needs {needed}");
            }
        }
    }
    Ok(())
}

/// Prices collected from every criterion, rechecked by criterion 3.
type Priced = Vec<(String, R, R)>;

// 1

/// Gordan alternative in the plane: a probability `(1 - s, s)` under which
/// every generator has nonpositive mean exists iff the cone is coherent.
fn planar_calibrated(gens: &[[i64; 2]]) -> bool {
    let (mut lo, mut hi) = (R::zero(), R::one());
    for g in gens {
        let (a, b) = (int(g[0]), int(g[1] - g[0]));
        if b.is_zero() {
            if a.is_positive() {
                return false;
            }
        } else if b.is_positive() {
            hi = hi.min(-a / b);
        } else {
            lo = lo.max(-a / b);
        }
    }
    lo <= hi
}

fn c1_coherence() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut coherent, mut incoherent, mut planar) = (0, 0, 0);
    for i in 0..200 {
        let m = if i % 4 == 0 { 2 } else { rng.gen_range(1..=4) };
        let k = rng.gen_range(0..=5);
        let raw: Vec<Vec<i64>> = (0..k).map(|_| (0..m).map(|_| rng.gen_range(-3..=3)).collect()).collect();
        let gens: Vec<Gamble> = raw.iter().map(|g| Gamble::from_ints(g)).collect();
        let cone = build_cone(ConeSpec::Raw(gens.clone()), &labelled(m)).map_err(e)?;
        let verdict = cone.check_coherence().map_err(e)?;
        let is_coherent = match verdict {
            CoherenceVerdict::Coherent { calibrating } => {
                let q = calibrating.weights();
                ensure!(q.len() == m && q.iter().all(|x| !x.is_negative()), "bad measure {q:?}");
                ensure!(q.iter().sum::<R>() == R::one(), "measure {q:?} does not sum to 1");
                for g in &gens {
                    ensure!(!dot(q, g.payoffs()).is_positive(), "generator {g:?} has positive mean under {q:?}");
                }
                coherent += 1;
                true
            }
            CoherenceVerdict::Incoherent { witness } => {
                ensure!(witness.len() == k && witness.iter().all(|c| !c.is_negative()), "bad witness {witness:?}");
                for w in 0..m {
                    let total: R = witness.iter().zip(&gens).map(|(c, g)| c * &g.payoffs()[w]).sum();
                    ensure!(total.is_positive(), "witness {witness:?} pays {total} on outcome {w} for {raw:?}");
                }
                incoherent += 1;
                false
            }
        };
        if m == 2 {
            let pts: Vec<[i64; 2]> = raw.iter().map(|g| [g[0], g[1]]).collect();
            ensure!(is_coherent == planar_calibrated(&pts), "planar test disagrees on {raw:?}");
            planar += 1;
        }
        if m == 1 {
            ensure!(is_coherent == raw.iter().all(|g| g[0] <= 0), "one-outcome cone {raw:?} misjudged");
        }
    }
    Ok(format!("200 cones ({coherent} coherent, {incoherent} incoherent), every certificate rechecked, {planar} planar cones agree"))
}

// 2

fn c2_zero_cone(collected: &mut Priced) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..100 {
        let m = rng.gen_range(2..=3);
        let horizon = rng.gen_range(1..=4);
        let space = labelled(m);
        let measures: Vec<ProbabilityVector> =
            (0..if i % 2 == 0 { 1 } else { horizon }).map(|_| random_measure(&mut rng, m)).collect();
        let cones: Vec<Cone> = measures.iter().map(|p| build_cone(ConeSpec::Zero(p.clone()), &space).unwrap()).collect();
        let spec = if cones.len() == 1 {
            ProtocolSpec::identical(cones[0].clone())
        } else {
            ProtocolSpec::independent(cones)
        }
        .map_err(e)?;
        let accepted = random_accepted(&mut rng, m, horizon);
        let expected: R = accepted
            .iter()
            .map(|s| s.iter().enumerate().map(|(t, w)| measures[t.min(measures.len() - 1)].weights()[w.0].clone()).product::<R>())
            .sum();
        let event = EventDescription::cylinder(m, horizon, accepted).map_err(e)?;
        let r = upper_prob_cylinder(&spec, &event, horizon).map_err(e)?;
        ensure!(r.upper == expected && r.lower == expected, "instance {i}: upper {} lower {} product {expected}", r.upper, r.lower);
        collected.push((format!("zero-cone instance {i}"), r.lower, r.upper));
    }
    Ok("100 product-measure instances: upper = lower = product probability".into())
}

// 3

fn c3_bounds(collected: &Priced) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut own = 0;
    for i in 0..40 {
        let m = rng.gen_range(2..=3);
        let horizon = rng.gen_range(1..=3);
        let space = labelled(m);
        let (spec, omega0) = match i % 4 {
            0 => (ProtocolSpec::markov((0..m).map(|_| random_coherent(&mut rng, &space)).collect()).map_err(e)?, Some(o(rng.gen_range(0..m)))),
            1 => (ProtocolSpec::independent((0..horizon).map(|_| random_coherent(&mut rng, &space)).collect()).map_err(e)?, None),
            _ => (ProtocolSpec::identical(random_coherent(&mut rng, &space)).map_err(e)?, None),
        };
        let accepted = random_accepted(&mut rng, m, horizon);
        let complement: BTreeSet<Vec<Outcome>> = seqs(m, horizon).into_iter().filter(|s| !accepted.contains(s)).collect();
        let event = EventDescription::cylinder(m, horizon, accepted).map_err(e)?;
        let r = priced(&spec, &event, horizon, 0, omega0).map_err(e)?;
        certificate_ok(&spec, &r.certificate_upper, m)?;
        certificate_ok(&spec, &r.certificate_lower, m)?;
        let other = EventDescription::cylinder(m, horizon, complement).map_err(e)?;
        let up_c = price_tree(&spec, &other, horizon, 0, omega0).map_err(e)?.root_value();
        ensure!(r.lower == R::one() - &up_c, "instance {i}: lower {} is not 1 - upper of the complement {up_c}", r.lower);
        own += 1;
        let (lo, up) = (&r.lower, &r.upper);
        ensure!(!lo.is_negative() && lo <= up && up <= &R::one(), "instance {i}: lower {lo} upper {up}");
    }
    for (name, lo, up) in collected {
        ensure!(!lo.is_negative() && lo <= up && up <= &R::one(), "{name}: lower {lo} upper {up}");
    }
    Ok(format!("{} priced instances satisfy 0 <= lower <= upper <= 1; {own} certificates rechecked", own + collected.len()))
}

// 4

/// The dual of the whole-tree superhedging program: a flow of probability
/// through the tree, calibrated at every node, maximizing the mass on E.
fn flow_price(spec: &ProtocolSpec, accepted: &BTreeSet<Vec<Outcome>>, m: usize, horizon: usize, omega0: Option<Outcome>) -> Result<R, String> {
    let nodes: Vec<Vec<Outcome>> = (0..=horizon).flat_map(|l| seqs(m, l)).collect();
    let index: BTreeMap<&Vec<Outcome>, usize> = nodes.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let n = nodes.len();
    let objective = nodes.iter().map(|p| if p.len() == horizon && accepted.contains(p) { R::one() } else { R::zero() }).collect();
    let mut lp = LinearProgram::new(Sense::Maximize, objective, vec![VarKind::NonNegative; n]);
    let unit = |i: usize| {
        let mut v = vec![R::zero(); n];
        v[i] = R::one();
        v
    };
    lp.add(unit(index[&Vec::new()]), Relation::Eq, R::one());
    for p in nodes.iter().filter(|p| p.len() < horizon) {
        let children: Vec<usize> = (0..m).map(|w| index[&[p.clone(), vec![o(w)]].concat()]).collect();
        let mut flow = vec![R::zero(); n];
        flow[index[p]] = -R::one();
        for &c in &children {
            flow[c] = R::one();
        }
        lp.add(flow, Relation::Eq, R::zero());
        let cone = spec.cone_for(0, p.len() + 1, p.last().copied().or(omega0)).map_err(e)?;
        for g in cone.generators() {
            let mut row = vec![R::zero(); n];
            for (w, &c) in children.iter().enumerate() {
                row[c] = g.payoffs()[w].clone();
            }
            lp.add(row, Relation::Le, R::zero());
        }
    }
    let r = solve_lp(&lp).map_err(e)?;
    ensure!(r.status == LpStatus::Optimal, "flow program ended {:?}", r.status);
    Ok(r.objective)
}

fn c4_oracle(collected: &mut Priced) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for i in 0..50 {
        let m = rng.gen_range(2..=3);
        let horizon = rng.gen_range(1..=3);
        let space = labelled(m);
        let (spec, omega0) = match i % 5 {
            0 => (ProtocolSpec::markov((0..m).map(|_| random_coherent(&mut rng, &space)).collect()).map_err(e)?, Some(o(rng.gen_range(0..m)))),
            1 | 2 => (ProtocolSpec::independent((0..horizon).map(|_| random_coherent(&mut rng, &space)).collect()).map_err(e)?, None),
            _ => (ProtocolSpec::identical(random_coherent(&mut rng, &space)).map_err(e)?, None),
        };
        let accepted = random_accepted(&mut rng, m, horizon);
        let event = EventDescription::cylinder(m, horizon, accepted.clone()).map_err(e)?;
        let tree = price_tree(&spec, &event, horizon, 0, omega0).map_err(e)?;
        let backward = tree.root_value();
        let flow = flow_price(&spec, &accepted, m, horizon, omega0)?;
        let whole = oracle_price(&spec, &event, horizon, 0, omega0).map_err(e)?;
        ensure!(backward == flow && backward == whole, "instance {i}: backward {backward}, flow dual {flow}, whole-tree {whole}");
        certificate_ok(&spec, &tree, m)?;
        collected.push((format!("oracle instance {i}"), R::zero(), backward));
    }
    Ok("50/50 exact matches: backward induction = whole-tree program = its flow dual".into())
}

// 5

fn one_sided() -> ProtocolSpec {
    ProtocolSpec::identical(build_cone(ConeSpec::Raw(vec![Gamble::from_ints(&[-1, 0, 1])]), &signs()).unwrap()).unwrap()
}

/// Exactly one 1 and no -1 among the first four values.
fn decided_in_e(p: &[Outcome]) -> bool {
    p.iter().filter(|w| w.0 == 2).count() == 1 && p.iter().all(|w| w.0 != 0)
}

/// Best guarantee on E over per-trial coefficient schedules in {0, 1/4, ..., 2},
/// played blindly or stopped after the first nonzero outcome, keeping only
/// schedules whose capital stays nonnegative on all 81 paths.
fn grid_best() -> (R, usize) {
    let grid: Vec<R> = (0..=8).map(|i| ratio(i, 4)).collect();
    let paths = seqs(3, 4);
    let mut best = R::zero();
    let mut prudent_count = 0;
    for a in &grid {
        for b in &grid {
            for c in &grid {
                for d in &grid {
                    let t = [a, b, c, d];
                    for gated in [false, true] {
                        let mut prudent = true;
                        let mut guarantee: Option<R> = None;
                        for p in &paths {
                            let mut k = R::one();
                            let mut stopped = false;
                            for (ti, w) in t.iter().zip(p) {
                                if !stopped {
                                    k += *ti * int(w.0 as i64 - 1);
                                    stopped = gated && w.0 != 1;
                                }
                                prudent &= !k.is_negative();
                            }
                            if decided_in_e(p) {
                                guarantee = Some(guarantee.map_or(k.clone(), |g| g.min(k)));
                            }
                        }
                        if prudent {
                            prudent_count += 1;
                            best = best.max(guarantee.unwrap());
                        }
                    }
                }
            }
        }
    }
    (best, prudent_count)
}

fn c5_one_sided(collected: &mut Priced) -> Check {
    let spec = one_sided();
    let first = EventDescription::cylinder(3, 1, [vec![o(2)]]).map_err(e)?;
    let r = upper_prob_cylinder(&spec, &first, 1).map_err(e)?;
    ensure!(r.upper == ratio(1, 2) && r.lower.is_zero(), "upper {} lower {}, expected 1/2 and 0", r.upper, r.lower);
    collected.push(("first-trial event".into(), r.lower.clone(), r.upper.clone()));

    let event = EventDescription::new(3, EventClass::CountExactly { outcome: o(2), count: 1, forbidden: [o(0)].into() }).map_err(e)?;
    let doubling = stop_when(SkepticStrategy::Proportional(vec![int(1)]), Some(int(2)));
    let mut paths = 0;
    for j in 0..8 {
        {
            let mut script = vec![o(1); 12];
            script[j] = o(2);
            let mut reality = build_reality(RealityKind::Scripted(script.clone())).map_err(e)?;
            let t = run(&spec, &doubling, &mut reality, 12, Some(&event));
            ensure!(t.is_valid(), "aborted: {:?}", t.aborted);
            trace_agrees(&spec, &t)?;
            ensure!(event.contains(&Path::new(t.outcomes(), o(1))), "path is not in E");
            ensure!(t.steps.iter().all(|s| s.membership != Some(Membership::Out)), "E-path marked out");
            ensure!(t.final_capital() == int(2), "1 at trial {}: final capital {}", j + 1, t.final_capital());
            ensure!(t.capitals().iter().all(|k| k <= &int(2)), "capital above 2: {:?}", t.capitals());
            paths += 1;
        }
    }
    let (best, prudent) = grid_best();
    ensure!(best == int(2), "grid search best guarantee {best}");
    Ok(format!(
        "upper = 1/2, lower = 0; doubling ends at exactly 2 on {paths} E-paths; best of {prudent} prudent grid schedules guarantees {best}"
    ))
}

// 6

fn span_corpus(spec: &ProtocolSpec) -> Result<Vec<SkepticStrategy>, String> {
    use SkepticStrategy::{ConstantCoeffs as C, Proportional as P};
    let up = || P(vec![int(1), int(0)]);
    let down = || P(vec![int(0), int(1)]);
    let hedge = |accepted: Vec<Vec<Outcome>>, n: usize| -> Result<SkepticStrategy, String> {
        let ev = EventDescription::cylinder(3, n, accepted).map_err(e)?;
        superhedge_strategy(Arc::new(price_tree(spec, &ev, n, 0, None).map_err(e)?)).map_err(e)
    };
    let generated = EventDescription::new(3, EventClass::GeneratedPermutable { head: vec![o(2)], tail: o(1) }).map_err(e)?;
    Ok(vec![
        SkepticStrategy::Zero,
        C(vec![int(1), int(0)]),
        C(vec![int(0), int(2)]),
        C(vec![ratio(1, 2), ratio(1, 3)]),
        up(),
        down(),
        P(vec![ratio(1, 4), ratio(1, 2)]),
        hedge(vec![vec![o(2)]], 1)?,
        hedge(vec![vec![o(2), o(2)], vec![o(0), o(0)]], 2)?,
        scaled_sum(up(), down(), int(1), int(1)).map_err(e)?,
        scaled_sum(C(vec![int(1), int(0)]), hedge(vec![vec![o(0)]], 1)?, int(2), int(1)).map_err(e)?,
        shift_embed(up(), 3),
        shift_embed(C(vec![int(0), ratio(1, 2)]), 1),
        stop_when(up(), Some(int(3))),
        stop_when(C(vec![int(1), int(1)]), None),
        restart_scale(Family::Uniform(Box::new(up())), ratio(1, 2)).map_err(e)?,
        restart_scale(Family::Uniform(Box::new(stop_when(down(), Some(int(2))))), ratio(1, 4)).map_err(e)?,
        alternating_restart(up(), down(), generated, ratio(1, 2)).map_err(e)?,
        shift_transfer(down(), vec![o(2)]),
        shift_transfer(scaled_sum(up(), C(vec![int(0), int(1)]), int(1), int(1)).map_err(e)?, vec![o(0), o(1)]),
    ])
}

fn c6_span() -> Check {
    let spec = ProtocolSpec::identical(build_cone(ConeSpec::Span(vec![Gamble::from_ints(&[-1, 0, 1])]), &signs()).unwrap()).map_err(e)?;
    let event = EventDescription::new(3, EventClass::AllButFinitelyEqual(o(1))).map_err(e)?;
    let corpus = span_corpus(&spec)?;
    ensure!(corpus.len() == 20, "corpus has {} strategies", corpus.len());
    let kinds: BTreeSet<&str> = corpus.iter().map(|s| s.name()).collect();
    for s in &corpus {
        let mut evader = build_reality(RealityKind::Evader).map_err(e)?;
        let t = run(&spec, s, &mut evader, 50, Some(&event));
        ensure!(t.is_valid() && t.steps.len() == 50, "{}: run aborted {:?}", s.name(), t.aborted);
        trace_agrees(&spec, &t)?;
        ensure!(t.outcomes().iter().all(|w| w.0 != 1), "{}: evader played 0", s.name());
        ensure!(t.capitals().iter().all(|k| k <= &R::one()), "{}: capital above 1: {:?}", s.name(), t.capitals());
        let last = *t.outcomes().last().unwrap();
        ensure!(!event.contains(&Path::new(t.outcomes(), last)), "{}: evader path not in the complement", s.name());
        ensure!(t.steps.iter().all(|st| st.membership == Some(Membership::Undetermined)), "{}: tail event decided on a prefix", s.name());

        let mut zeros = build_reality(RealityKind::Scripted(vec![o(1)])).map_err(e)?;
        let t = run(&spec, s, &mut zeros, 50, Some(&event));
        ensure!(t.is_valid(), "{}: zero run aborted", s.name());
        trace_agrees(&spec, &t)?;
        ensure!(t.capitals().iter().all(|k| k.is_one()), "{}: all-zero path capitals {:?}", s.name(), t.capitals());
        ensure!(event.contains(&Path::new(t.outcomes(), o(1))), "{}: all-zero path not in E", s.name());
    }
    Ok(format!(
        "20 strategies over {} kinds: evader paths all nonzero with capital <= 1; all-zero path in E with capital 1",
        kinds.len()
    ))
}

// 7

/// Capital after each completed epoch must be at least 2^k.
fn epoch_capitals(s: &SkepticStrategy, ctx: StrategyContext<'_>, path: &[Outcome]) -> Result<Vec<R>, String> {
    let mut runner = Runner::new(s, ctx).map_err(e)?;
    let mut last = runner.epoch_capital().cloned();
    let mut at_epochs = Vec::new();
    for &w in path {
        runner.observe(w).map_err(e)?;
        if runner.epoch_capital().cloned() != last {
            last = runner.epoch_capital().cloned();
            at_epochs.push(runner.capital().clone());
        }
    }
    Ok(at_epochs)
}

fn c7_restart() -> Check {
    let space = labelled(2);
    let spec = ProtocolSpec::identical(build_cone(ConeSpec::Zero(ProbabilityVector::uniform(2).unwrap()), &space).unwrap()).map_err(e)?;
    let s = restart_scale(Family::Uniform(Box::new(SkepticStrategy::Proportional(vec![int(1), int(0)]))), ratio(1, 2)).map_err(e)?;
    let ctx = StrategyContext::new(&spec, None);

    let mut ones = build_reality(RealityKind::Scripted(vec![o(1)])).map_err(e)?;
    let t = run(&spec, &s, &mut ones, 5, None);
    trace_agrees(&spec, &t)?;
    let epochs = epoch_capitals(&s, ctx, &t.outcomes())?;
    ensure!(epochs.len() == 5, "{} epochs completed on the all-ones path", epochs.len());
    ensure!(t.final_capital() == int(32), "final capital {}", t.final_capital());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let path: Vec<Outcome> = (0..12).map(|_| o(usize::from(rng.gen_bool(0.8)))).collect();
        for (k, cap) in epoch_capitals(&s, ctx, &path)?.iter().enumerate() {
            ensure!(cap >= &int(1 << (k + 1)), "epoch {} on {path:?} ends with {cap}", k + 1);
        }
    }
    for p in seqs(2, 6) {
        let caps = replay(&s, ctx, &p)?;
        ensure!(caps.iter().all(|k| !k.is_negative()), "negative capital on {p:?}: {caps:?}");
    }
    Ok("capitals 2, 4, 8, 16, 32 over 5 epochs; 2^k law on 50 sampled paths; nonnegative on all 64 depth-6 paths".into())
}

// 8

fn prudent_corpus(spec: &ProtocolSpec, hedge: bool) -> Result<Vec<SkepticStrategy>, String> {
    use SkepticStrategy::Proportional as P;
    let mut out = vec![
        SkepticStrategy::Zero,
        P(vec![int(1), int(0)]),
        P(vec![int(0), ratio(1, 2)]),
        stop_when(P(vec![int(1), int(0)]), Some(int(2))),
        scaled_sum(P(vec![int(1), int(0)]), P(vec![int(0), int(1)]), int(2), int(1)).map_err(e)?,
        restart_scale(Family::Uniform(Box::new(P(vec![int(1), int(0)]))), ratio(1, 2)).map_err(e)?,
        shift_embed(P(vec![int(0), int(1)]), 1),
    ];
    if hedge {
        let ev = EventDescription::cylinder(2, 2, [vec![o(1), o(1)], vec![o(0), o(1)]]).map_err(e)?;
        out.push(superhedge_strategy(Arc::new(price_tree(spec, &ev, 2, 0, None).map_err(e)?)).map_err(e)?);
    }
    Ok(out)
}

fn c8_transfer() -> Check {
    let space = labelled(2);
    let zero = |p: R| build_cone(ConeSpec::Zero(ProbabilityVector::new(vec![R::one() - &p, p]).unwrap()), &space).unwrap();
    let specs = [
        ProtocolSpec::identical(zero(ratio(1, 2))).map_err(e)?,
        ProtocolSpec::independent(vec![zero(ratio(1, 2)), zero(ratio(1, 3)), zero(ratio(1, 4))]).map_err(e)?,
    ];
    let mut count = 0;
    for spec in &specs {
        for s in prudent_corpus(spec, true)? {
            let ctx = StrategyContext::new(spec, None);
            for p in seqs(2, 4) {
                ensure!(replay(&s, ctx, &p)?.iter().all(|k| !k.is_negative()), "{} is not prudent", s.name());
            }
            for n in 0..=3 {
                let prefix = find_no_gain_prefix(&s, n, spec).map_err(e)?;
                ensure!(prefix.len() == n, "prefix {prefix:?} for n = {n}");
                let mut k = R::one();
                for i in 0..n {
                    let c = s.coeffs(ctx, &prefix[..i], &k).map_err(e)?;
                    let gain = payoff(spec.cone_for(0, i + 1, None).map_err(e)?, &c, prefix[i])?;
                    ensure!(!gain.is_positive(), "{}: trial {} of {prefix:?} pays {gain}", s.name(), i + 1);
                    k += gain;
                }
                let moved = shift_transfer(s.clone(), prefix.clone());
                let shifted = StrategyContext { spec, offset: n, omega0: None };
                for p in seqs(2, 3) {
                    let caps = replay(&moved, shifted, &p)?;
                    ensure!(caps.iter().all(|k| !k.is_negative()), "{} after {prefix:?}: {caps:?} on {p:?}", s.name());
                }
                count += 1;
            }
        }
    }
    Ok(format!("{count} (strategy, n) pairs: no-gain prefixes verified, transferred strategies prudent at depth 3"))
}

// 9

fn counts(xs: &[Outcome], m: usize) -> Vec<usize> {
    let mut c = vec![0; m];
    for x in xs {
        c[x.0] += 1;
    }
    c
}

/// Whether `xs` then `tail` forever rearranges an initial segment of the generator.
fn in_generated(xs: &[Outcome], head: &[Outcome], tail: Outcome, m: usize) -> bool {
    let len = xs.len().max(head.len());
    let at = |v: &[Outcome], i: usize| v.get(i).copied().unwrap_or(tail);
    (0..=len).any(|n| {
        (n..len).all(|i| at(xs, i) == at(head, i))
            && counts(&(0..n).map(|i| at(xs, i)).collect::<Vec<_>>(), m) == counts(&(0..n).map(|i| at(head, i)).collect::<Vec<_>>(), m)
    })
}

/// Residual membership over every path of the event extending `prefix`,
/// perturbed within a window past the prefix and the head.
fn residual_oracle(m: usize, head: &[Outcome], tail: Outcome, prefix: &[Outcome]) -> Option<Result<bool, ()>> {
    let n = prefix.len();
    let (mut ins, mut outs) = (false, false);
    for extra in 0..=head.len() + 1 {
        for w in seqs(m, extra) {
            let x: Vec<Outcome> = prefix.iter().chain(&w).copied().collect();
            let full: Vec<Outcome> = (0..x.len().max(head.len()) + 1).map(|i| x.get(i).or(head.get(i)).copied().unwrap_or(tail)).collect();
            if !in_generated(&full, head, tail, m) {
                continue;
            }
            if in_generated(&full[n..], head, tail, m) {
                ins = true;
            } else {
                outs = true;
            }
        }
    }
    match (ins, outs) {
        (false, false) => None,
        (true, false) => Some(Ok(true)),
        (false, true) => Some(Ok(false)),
        (true, true) => Some(Err(())),
    }
}

fn c9_residual() -> Check {
    let mut pairs = 0;
    for m in 1..=3 {
        for h in 0..=3 {
            for head in seqs(m, h) {
                for t in 0..m {
                    let ev = EventDescription::new(m, EventClass::GeneratedPermutable { head: head.clone(), tail: o(t) }).map_err(e)?;
                    for len in 0..=5 {
                        for prefix in seqs(m, len) {
                            let got = ev.residual_in_generated(&prefix);
                            let agree = match residual_oracle(m, &head, o(t), &prefix) {
                                None => got.is_err(),
                                Some(Ok(b)) => got == Ok(b),
                                Some(Err(())) => false,
                            };
                            ensure!(agree, "generator {head:?} then {t}, prefix {prefix:?}: decision {got:?}");
                            pairs += 1;
                        }
                    }
                }
            }
        }
    }

    let spec = ProtocolSpec::identical(build_cone(ConeSpec::Zero(ProbabilityVector::uniform(3).unwrap()), &signs()).unwrap()).map_err(e)?;
    let cone = &spec.cones()[0];
    // one member doubles on 1, the other on 0; both stake the whole capital
    let on_one = cone.membership(&Gamble::from_ints(&[-1, 0, 1])).map_err(e)?.ok_or("(-1, 0, 1) not in the cone")?;
    let on_zero = cone
        .membership(&Gamble::new(vec![ratio(-1, 2), int(1), ratio(-1, 2)]))
        .map_err(e)?
        .ok_or("(-1/2, 1, -1/2) not in the cone")?;
    let head = vec![o(2)];
    let ev = EventDescription::new(3, EventClass::GeneratedPermutable { head: head.clone(), tail: o(1) }).map_err(e)?;
    let s = alternating_restart(SkepticStrategy::Proportional(on_one), SkepticStrategy::Proportional(on_zero), ev, ratio(1, 2)).map_err(e)?;
    let path = vec![o(1), o(2), o(1), o(1)];
    ensure!(in_generated(&path, &head, o(1), 3), "constructed path is not in E");
    let ctx = StrategyContext::new(&spec, None);
    let caps = replay(&s, ctx, &path)?;
    let epochs = epoch_capitals(&s, ctx, &path)?;
    ensure!(epochs.len() >= 3, "{} epochs on {path:?}", epochs.len());
    for (k, cap) in epochs.iter().enumerate() {
        ensure!(cap >= &int(1 << (k + 1)), "epoch {} ends with {cap}", k + 1);
    }
    ensure!(caps.last().unwrap() >= &int(8), "final capital {:?}", caps.last());
    Ok(format!("{pairs} (generator, prefix) pairs agree; alternating restart: {} epochs, capital {}", epochs.len(), caps.last().unwrap()))
}

// 10

fn c10_refuter() -> Check {
    let set = |xs: &[usize]| xs.iter().map(|&i| o(i)).collect::<BTreeSet<_>>();
    let mostly_zero = EventDescription::new(3, EventClass::AllButFinitelyEqual(o(1))).map_err(e)?;
    let all_ones = EventDescription::new(3, EventClass::EveryTermIn(set(&[2]))).map_err(e)?;
    let single = EventDescription::new(3, EventClass::CountExactly { outcome: o(2), count: 1, forbidden: set(&[0]) }).map_err(e)?;
    let in_mostly_zero = |p: &Path| p.tail == o(1);
    let in_all_ones = |p: &Path| p.tail == o(2) && p.prefix.iter().all(|w| *w == o(2));
    let in_single = |p: &Path| {
        p.tail == o(1) && p.prefix.iter().all(|w| *w != o(0)) && p.prefix.iter().filter(|w| **w == o(2)).count() == 1
    };
    type Oracle<'a> = &'a dyn Fn(&Path) -> bool;
    let cases: [(&str, &EventDescription, Oracle<'_>, ClosureKind, bool); 5] = [
        ("all but finitely many 0", &mostly_zero, &in_mostly_zero, ClosureKind::Tail, true),
        ("every term 1", &all_ones, &in_all_ones, ClosureKind::WeaklyInvariant, true),
        ("every term 1", &all_ones, &in_all_ones, ClosureKind::Invariant, false),
        ("exactly one 1, no -1", &single, &in_single, ClosureKind::Permutable, true),
        ("exactly one 1, no -1", &single, &in_single, ClosureKind::Tail, false),
    ];
    let mut found = Vec::new();
    for (name, ev, oracle, kind, holds) in cases {
        ensure!(ev.flags().get(kind) == Some(holds), "{name}: catalogue flag for {kind:?} is {:?}", ev.flags().get(kind));
        let first = ev.check_closure(kind, 500, 8, 10).map_err(e)?;
        ensure!(first == ev.check_closure(kind, 500, 8, 10).map_err(e)?, "{name} {kind:?}: not reproducible under a seed");
        ensure!(first.passed() == holds, "{name} {kind:?}: refuter says {first:?}");
        if let ClosureOutcome::Counterexample { original, modified, original_in, modified_in } = &first {
            ensure!(oracle(original) == *original_in && oracle(modified) == *modified_in, "{name}: counterexample misreports membership");
            ensure!(original_in != modified_in, "{name}: counterexample paths agree");
            let related = match kind {
                ClosureKind::Tail => {
                    original.tail == modified.tail
                        && (0..original.prefix.len().max(modified.prefix.len())).filter(|&i| original.at(i) != modified.at(i)).count() > 0
                }
                ClosureKind::Invariant | ClosureKind::WeaklyInvariant => {
                    *modified == original.shift() || (0..3).any(|w| *modified == original.prepend(o(w)))
                }
                ClosureKind::Permutable => true,
            };
            ensure!(related, "{name}: {original:?} and {modified:?} are not related by {kind:?}");
            let other = ev.check_closure(kind, 500, 8, 11).map_err(e)?;
            ensure!(!other.passed(), "{name} {kind:?}: another seed finds no counterexample");
            found.push(format!("{name} not {kind:?}"));
        }
    }
    Ok(format!("flags confirmed with 500 samples each; explicit counterexamples: {}", found.join("; ")))
}

fn main() -> ExitCode {
    let guarded = |f: &mut dyn FnMut() -> Check| -> Check {
        catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        })
    };
    let mut collected = Priced::new();
    let mut results: BTreeMap<usize, (&str, Check)> = BTreeMap::new();
    results.insert(1, ("coherence duality", guarded(&mut c1_coherence)));
    results.insert(2, ("zero-cone pricing equality", guarded(&mut || c2_zero_cone(&mut collected))));
    results.insert(4, ("oracle equivalence", guarded(&mut || c4_oracle(&mut collected))));
    results.insert(5, ("one-sided cone example", guarded(&mut || c5_one_sided(&mut collected))));
    results.insert(3, ("price bounds", guarded(&mut || c3_bounds(&collected))));
    results.insert(6, ("fully uncertain tail example", guarded(&mut c6_span)));
    results.insert(7, ("restart capital law", guarded(&mut c7_restart)));
    results.insert(8, ("no-gain prefix and shift transfer", guarded(&mut c8_transfer)));
    results.insert(9, ("residual decision", guarded(&mut c9_residual)));
    results.insert(10, ("event-class refuter", guarded(&mut c10_refuter)));
    let mut failed = 0;
    for (i, (name, r)) in &results {
        match r {
            Ok(detail) => println!("PASS {i:>2} {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {i:>2} {name}: {why}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
