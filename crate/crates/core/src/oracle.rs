//! Brute-force reference computations that share no code path with the
//! solvers they check.

use num_traits::{One, Signed, Zero};

use crate::cone::{Outcome, ProbabilityVector};
use crate::rational::Rational;

/// Probability of a set of finite sequences under independent trials, trial
/// `i` drawn from `measures[i]` (the last measure repeats).
pub fn product_probability<'a>(measures: &[ProbabilityVector], accepted: impl IntoIterator<Item = &'a Vec<Outcome>>) -> Rational {
    accepted
        .into_iter()
        .map(|seq| {
            seq.iter()
                .enumerate()
                .map(|(i, o)| measures[i.min(measures.len() - 1)].weight(*o).clone())
                .product::<Rational>()
        })
        .sum()
}

#[derive(Clone)]
struct Bound {
    at: Rational,
    strict: bool,
}

/// Whether the cone generated by planar vectors meets the open positive
/// quadrant. In the plane every cone point lies in the cone of at most two
/// generators, so it suffices to look for `t` in `[0, 1]` with
/// `t u + (1 - t) v > 0` for each pair.
pub fn quadrant_hit(generators: &[[Rational; 2]]) -> bool {
    (0..generators.len()).any(|i| (i..generators.len()).any(|j| pair_hits(&generators[i], &generators[j])))
}

fn pair_hits(u: &[Rational; 2], v: &[Rational; 2]) -> bool {
    let mut lo = Bound { at: Rational::zero(), strict: false };
    let mut hi = Bound { at: Rational::one(), strict: false };
    for i in 0..2 {
        // v_i + t (u_i - v_i) > 0
        let slope = &u[i] - &v[i];
        if slope.is_zero() {
            if !v[i].is_positive() {
                return false;
            }
            continue;
        }
        let root = -&v[i] / &slope;
        let b = Bound { at: root, strict: true };
        if slope.is_positive() {
            if b.at >= lo.at {
                lo = b;
            }
        } else if b.at <= hi.at {
            hi = b;
        }
    }
    lo.at < hi.at || (lo.at == hi.at && !lo.strict && !hi.strict)
}

/// A permutation `p` with `x[i] == y[p[i]]` for all `i`, found by backtracking.
pub fn permutation_witness(x: &[Outcome], y: &[Outcome]) -> Option<Vec<usize>> {
    if x.len() != y.len() {
        return None;
    }
    let mut used = vec![false; y.len()];
    let mut perm = Vec::with_capacity(x.len());
    fn search(i: usize, x: &[Outcome], y: &[Outcome], used: &mut [bool], perm: &mut Vec<usize>) -> bool {
        if i == x.len() {
            return true;
        }
        for j in 0..y.len() {
            if !used[j] && y[j] == x[i] {
                used[j] = true;
                perm.push(j);
                if search(i + 1, x, y, used, perm) {
                    return true;
                }
                perm.pop();
                used[j] = false;
            }
        }
        false
    }
    if search(0, x, y, &mut used, &mut perm) {
        debug_assert!(perm.iter().enumerate().all(|(i, &j)| x[i] == y[j]));
        Some(perm)
    } else {
        None
    }
}

fn generator_at(head: &[Outcome], tail: Outcome, i: usize) -> Outcome {
    head.get(i).copied().unwrap_or(tail)
}

/// Whether `seq` followed by the generator from position `seq.len()` on is a
/// rearrangement of the generator, searching witnesses of length up to `window`.
fn in_generated(seq: &[Outcome], head: &[Outcome], tail: Outcome, window: usize) -> bool {
    (0..=window).any(|n| {
        let x: Vec<Outcome> = (0..n).map(|i| seq.get(i).copied().unwrap_or_else(|| generator_at(head, tail, i))).collect();
        let agrees_after = (n..window.max(seq.len())).all(|i| {
            seq.get(i).copied().unwrap_or_else(|| generator_at(head, tail, i)) == generator_at(head, tail, i)
        });
        let g: Vec<Outcome> = (0..n).map(|i| generator_at(head, tail, i)).collect();
        agrees_after && permutation_witness(&x, &g).is_some()
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResidualVerdict {
    /// No path in the event extends the prefix.
    NoWitness,
    Always,
    Never,
    Mixed,
}

/// Enumerates paths in the generated event that extend `prefix` (those equal
/// to the generator after position `prefix.len() + head.len() + 1`) and
/// reports whether the residual after the prefix lies in the event.
pub fn residual_by_enumeration(arity: usize, head: &[Outcome], tail: Outcome, prefix: &[Outcome]) -> ResidualVerdict {
    let n = prefix.len();
    let reach = n + head.len() + 1;
    let mut seen_in = false;
    let mut seen_out = false;
    for len in n..=reach {
        let free = len - n;
        let count = arity.pow(free as u32);
        for code in 0..count {
            let mut x = prefix.to_vec();
            let mut c = code;
            for _ in 0..free {
                x.push(Outcome(c % arity));
                c /= arity;
            }
            let g: Vec<Outcome> = (0..len).map(|i| generator_at(head, tail, i)).collect();
            if permutation_witness(&x, &g).is_none() {
                continue;
            }
            // path = x, then the generator from position len on
            let window = reach + head.len() + 2;
            let path: Vec<Outcome> = (0..window).map(|i| x.get(i).copied().unwrap_or_else(|| generator_at(head, tail, i))).collect();
            let residual = &path[n..];
            if in_generated(residual, head, tail, window - n) {
                seen_in = true;
            } else {
                seen_out = true;
            }
        }
    }
    match (seen_in, seen_out) {
        (false, false) => ResidualVerdict::NoWitness,
        (true, false) => ResidualVerdict::Always,
        (false, true) => ResidualVerdict::Never,
        (true, true) => ResidualVerdict::Mixed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn o(i: usize) -> Outcome {
        Outcome(i)
    }

    #[test]
    fn product_of_fair_coins() {
        let p = ProbabilityVector::uniform(2).unwrap();
        let q = ProbabilityVector::new(vec![ratio(2, 3), ratio(1, 3)]).unwrap();
        assert_eq!(product_probability(std::slice::from_ref(&p), &[vec![o(1), o(1)]]), ratio(1, 4));
        assert_eq!(product_probability(&[p, q], &[vec![o(1), o(1)], vec![o(0), o(1)]]), ratio(1, 3));
    }

    #[test]
    fn quadrant_examples() {
        let v = |a: i64, b: i64| [int(a), int(b)];
        assert!(!quadrant_hit(&[v(-1, 1), v(1, -1)]));
        assert!(quadrant_hit(&[v(1, 1)]));
        assert!(quadrant_hit(&[v(-1, 2), v(2, -1)]));
        assert!(!quadrant_hit(&[v(-1, 1), v(2, -2)]));
        assert!(quadrant_hit(&[v(1, 0), v(0, 1)]));
        assert!(!quadrant_hit(&[v(1, 0)]));
        assert!(!quadrant_hit(&[]));
    }

    #[test]
    fn residual_examples() {
        // generator 1, 0, 0, ... over {0, 1}
        let head = [o(1)];
        assert_eq!(residual_by_enumeration(2, &head, o(0), &[o(0), o(0)]), ResidualVerdict::Always);
        assert_eq!(residual_by_enumeration(2, &head, o(0), &[o(0), o(1), o(0)]), ResidualVerdict::Never);
        assert_eq!(residual_by_enumeration(2, &head, o(0), &[]), ResidualVerdict::Always);
        assert_eq!(residual_by_enumeration(2, &head, o(0), &[o(1), o(1)]), ResidualVerdict::NoWitness);
    }

    #[test]
    fn witnesses_are_permutations() {
        let w = permutation_witness(&[o(0), o(1), o(0)], &[o(1), o(0), o(0)]).unwrap();
        assert_eq!(w, vec![1, 0, 2]);
        assert!(permutation_witness(&[o(0), o(1)], &[o(1), o(1)]).is_none());
    }
}
