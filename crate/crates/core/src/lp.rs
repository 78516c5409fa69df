//! Exact linear programming over the rationals.
//!
//! A dense two-phase tableau simplex with Bland's smallest-index rule for both
//! the entering and the leaving variable, so it terminates on degenerate
//! programs. Every row receives its own artificial column; the artificial
//! block of the final tableau holds the basis inverse, which is where the dual
//! solution is read from.
//!
//! Dual sign convention: for a maximization, the dual `y` is `>= 0` on `<=`
//! rows, `<= 0` on `>=` rows and free on equalities; for a minimization the
//! signs flip. In both cases `objective == sum_i rhs_i * y_i` exactly.

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    NonNegative,
    Free,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub sense: Sense,
    pub objective: Vec<Rational>,
    pub vars: Vec<VarKind>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Unbounded,
    Infeasible,
}

/// Outcome of [`solve_lp`]. `primal` and `dual` are empty unless optimal.
#[derive(Debug, Clone, PartialEq)]
pub struct LpResult {
    pub status: LpStatus,
    pub objective: Rational,
    pub primal: Vec<Rational>,
    pub dual: Vec<Rational>,
}

impl LpResult {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

impl LinearProgram {
    pub fn new(sense: Sense, objective: Vec<Rational>, vars: Vec<VarKind>) -> Self {
        assert_eq!(objective.len(), vars.len(), "objective and variable kinds differ in length");
        Self { sense, objective, vars, constraints: Vec::new() }
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn add(&mut self, coeffs: Vec<Rational>, relation: Relation, rhs: Rational) {
        assert_eq!(coeffs.len(), self.vars.len(), "constraint width differs from variable count");
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        if self.objective.len() != self.vars.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vars.len(),
                found: self.objective.len(),
            });
        }
        for row in &self.constraints {
            if row.coeffs.len() != self.vars.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.vars.len(),
                    found: row.coeffs.len(),
                });
            }
        }
        Ok(())
    }
}

/// Column bookkeeping: which tableau columns carry each original variable.
enum ColumnOf {
    Plain(usize),
    Split(usize, usize),
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    /// Objective row: reduced costs followed by the current objective value.
    cost_row: Vec<Rational>,
    basis: Vec<usize>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, row: usize) -> &Rational {
        &self.rows[row][self.width]
    }

    fn reset_costs(&mut self, costs: &[Rational]) {
        // reduced cost d_j = sum_i c_B(i) * T[i][j] - c_j; last entry = c_B . rhs
        let mut row: Vec<Rational> = costs.iter().map(|c| -c.clone()).collect();
        row.push(Rational::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = &costs[b];
            if cb.is_zero() {
                continue;
            }
            for (j, entry) in self.rows[i].iter().enumerate() {
                if !entry.is_zero() {
                    row[j] += cb * entry;
                }
            }
        }
        self.cost_row = row;
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let piv = self.rows[pr][pc].clone();
        if piv != Rational::from_integer(1.into()) {
            for entry in self.rows[pr].iter_mut() {
                if !entry.is_zero() {
                    *entry /= &piv;
                }
            }
        }
        let pivot_row = self.rows[pr].clone();
        let nonzero: Vec<usize> = (0..=self.width).filter(|&j| !pivot_row[j].is_zero()).collect();
        let eliminate = |target: &mut Vec<Rational>| {
            let factor = target[pc].clone();
            if factor.is_zero() {
                return;
            }
            for &j in &nonzero {
                target[j] -= &factor * &pivot_row[j];
            }
        };
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != pr {
                eliminate(row);
            }
        }
        eliminate(&mut self.cost_row);
        self.basis[pr] = pc;
    }

    /// Runs primal simplex iterations until optimal; `Err(())` signals unboundedness.
    fn optimize(&mut self, may_enter: &[bool]) -> std::result::Result<(), ()> {
        loop {
            let entering = (0..self.width).find(|&j| may_enter[j] && self.cost_row[j].is_negative());
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][pc];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(i) / a;
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((pr, _)) => self.pivot(pr, pc),
                None => return Err(()),
            }
        }
    }
}

/// Solves a linear program exactly.
pub fn solve_lp(program: &LinearProgram) -> Result<LpResult> {
    program.validate()?;
    let m = program.constraints.len();

    let mut columns = Vec::with_capacity(program.vars.len());
    let mut width = 0usize;
    for kind in &program.vars {
        match kind {
            VarKind::NonNegative => {
                columns.push(ColumnOf::Plain(width));
                width += 1;
            }
            VarKind::Free => {
                columns.push(ColumnOf::Split(width, width + 1));
                width += 2;
            }
        }
    }
    let mut slack_col = vec![None; m];
    for (i, row) in program.constraints.iter().enumerate() {
        if row.relation != Relation::Eq {
            slack_col[i] = Some(width);
            width += 1;
        }
    }
    let artificial_start = width;
    width += m;

    // Internal form is always a maximization.
    let mut costs = vec![Rational::zero(); width];
    for (v, col) in columns.iter().enumerate() {
        let c = match program.sense {
            Sense::Maximize => program.objective[v].clone(),
            Sense::Minimize => -program.objective[v].clone(),
        };
        match *col {
            ColumnOf::Plain(j) => costs[j] = c,
            ColumnOf::Split(p, n) => {
                costs[n] = -c.clone();
                costs[p] = c;
            }
        }
    }

    let mut flipped = vec![false; m];
    let mut rows = Vec::with_capacity(m);
    for (i, con) in program.constraints.iter().enumerate() {
        let mut row = vec![Rational::zero(); width + 1];
        for (v, col) in columns.iter().enumerate() {
            let a = &con.coeffs[v];
            if a.is_zero() {
                continue;
            }
            match *col {
                ColumnOf::Plain(j) => row[j] = a.clone(),
                ColumnOf::Split(p, n) => {
                    row[p] = a.clone();
                    row[n] = -a.clone();
                }
            }
        }
        if let Some(s) = slack_col[i] {
            row[s] = match con.relation {
                Relation::Le => Rational::from_integer(1.into()),
                _ => Rational::from_integer((-1).into()),
            };
        }
        row[width] = con.rhs.clone();
        if con.rhs.is_negative() {
            flipped[i] = true;
            for entry in row.iter_mut() {
                if !entry.is_zero() {
                    *entry = -entry.clone();
                }
            }
        }
        row[artificial_start + i] = Rational::from_integer(1.into());
        rows.push(row);
    }

    let mut tab = Tableau {
        rows,
        cost_row: Vec::new(),
        basis: (artificial_start..artificial_start + m).collect(),
        width,
    };

    // Phase 1: maximize -(sum of artificials).
    let mut phase1 = vec![Rational::zero(); width];
    for cost in phase1.iter_mut().skip(artificial_start) {
        *cost = Rational::from_integer((-1).into());
    }
    tab.reset_costs(&phase1);
    let all = vec![true; width];
    tab.optimize(&all)
        .map_err(|_| Error::SolverFault("phase one reported unbounded".into()))?;
    if tab.cost_row[width].is_negative() {
        return Ok(LpResult {
            status: LpStatus::Infeasible,
            objective: Rational::zero(),
            primal: Vec::new(),
            dual: Vec::new(),
        });
    }

    // Drive zero-level artificials out of the basis where possible; rows that
    // stay artificial are redundant and never change again.
    for i in 0..m {
        if tab.basis[i] < artificial_start {
            continue;
        }
        if let Some(j) = (0..artificial_start).find(|&j| !tab.rows[i][j].is_zero()) {
            tab.pivot(i, j);
        }
    }

    let mut may_enter = vec![true; width];
    for flag in may_enter.iter_mut().skip(artificial_start) {
        *flag = false;
    }
    tab.reset_costs(&costs);
    if tab.optimize(&may_enter).is_err() {
        return Ok(LpResult {
            status: LpStatus::Unbounded,
            objective: Rational::zero(),
            primal: Vec::new(),
            dual: Vec::new(),
        });
    }

    let mut values = vec![Rational::zero(); width];
    for (i, &b) in tab.basis.iter().enumerate() {
        values[b] = tab.rhs(i).clone();
    }
    let primal: Vec<Rational> = columns
        .iter()
        .map(|col| match *col {
            ColumnOf::Plain(j) => values[j].clone(),
            ColumnOf::Split(p, n) => &values[p] - &values[n],
        })
        .collect();
    let internal_objective = tab.cost_row[width].clone();
    let mut dual: Vec<Rational> = (0..m)
        .map(|i| {
            let y = tab.cost_row[artificial_start + i].clone();
            if flipped[i] {
                -y
            } else {
                y
            }
        })
        .collect();
    let objective = match program.sense {
        Sense::Maximize => internal_objective,
        Sense::Minimize => {
            for y in dual.iter_mut() {
                *y = -y.clone();
            }
            -internal_objective
        }
    };
    Ok(LpResult { status: LpStatus::Optimal, objective, primal, dual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn check_strong_duality(program: &LinearProgram, result: &LpResult) {
        let by_dual = program
            .constraints
            .iter()
            .zip(&result.dual)
            .fold(Rational::zero(), |acc, (c, y)| acc + &c.rhs * y);
        assert_eq!(by_dual, result.objective);
        let by_primal = crate::rational::dot(&program.objective, &result.primal);
        assert_eq!(by_primal, result.objective);
    }

    #[test]
    fn bounded_maximum() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![int(1)], vec![VarKind::NonNegative]);
        lp.add(vec![int(1)], Relation::Le, int(3));
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert_eq!(r.objective, int(3));
        check_strong_duality(&lp, &r);
    }

    #[test]
    fn unbounded_maximum() {
        let mut lp = LinearProgram::new(Sense::Maximize, vec![int(1)], vec![VarKind::NonNegative]);
        lp.add(vec![int(1)], Relation::Ge, int(0));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn infeasible_program() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![int(1)], vec![VarKind::Free]);
        lp.add(vec![int(1)], Relation::Ge, int(2));
        lp.add(vec![int(1)], Relation::Le, int(1));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn coherence_program_for_fair_coin_generators() {
        // max s : c1*(-1,1) + c2*(1,-1) >= s componentwise, c1 + c2 <= 1
        let mut lp = LinearProgram::new(
            Sense::Maximize,
            vec![int(0), int(0), int(1)],
            vec![VarKind::NonNegative, VarKind::NonNegative, VarKind::Free],
        );
        lp.add(vec![int(-1), int(1), int(-1)], Relation::Ge, int(0));
        lp.add(vec![int(1), int(-1), int(-1)], Relation::Ge, int(0));
        lp.add(vec![int(1), int(1), int(0)], Relation::Le, int(1));
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.objective, int(0));
        assert_eq!(r.dual, vec![ratio(-1, 2), ratio(-1, 2), int(0)]);
        check_strong_duality(&lp, &r);
    }

    #[test]
    fn negative_rhs_and_equalities() {
        // min x + 2y : x - y = -1, x + y >= 3, x, y >= 0  -> x = 1, y = 2, value 5
        let mut lp = LinearProgram::new(
            Sense::Minimize,
            vec![int(1), int(2)],
            vec![VarKind::NonNegative, VarKind::NonNegative],
        );
        lp.add(vec![int(1), int(-1)], Relation::Eq, int(-1));
        lp.add(vec![int(1), int(1)], Relation::Ge, int(3));
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.objective, int(5));
        assert_eq!(r.primal, vec![int(1), int(2)]);
        check_strong_duality(&lp, &r);
    }

    #[test]
    fn redundant_equalities_are_tolerated() {
        let mut lp = LinearProgram::new(
            Sense::Maximize,
            vec![int(1), int(1)],
            vec![VarKind::NonNegative, VarKind::NonNegative],
        );
        lp.add(vec![int(1), int(1)], Relation::Eq, int(2));
        lp.add(vec![int(2), int(2)], Relation::Eq, int(4));
        lp.add(vec![int(1), int(0)], Relation::Le, int(1));
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.objective, int(2));
        check_strong_duality(&lp, &r);
    }

    #[test]
    fn no_variables() {
        let mut lp = LinearProgram::new(Sense::Minimize, vec![], vec![]);
        lp.add(vec![], Relation::Le, int(1));
        let r = solve_lp(&lp).unwrap();
        assert_eq!(r.objective, int(0));
        lp.add(vec![], Relation::Ge, int(1));
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn small() -> impl Strategy<Value = i64> {
            -4i64..=4
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            // Box-bounded programs are always feasible and bounded; the solver
            // must certify optimality with an exactly matching dual.
            #[test]
            fn strong_duality_on_boxed_programs(
                obj in proptest::collection::vec(small(), 3),
                rows in proptest::collection::vec((proptest::collection::vec(small(), 3), 0i64..6), 0..4),
                minimize in any::<bool>(),
            ) {
                let sense = if minimize { Sense::Minimize } else { Sense::Maximize };
                let vars = vec![VarKind::NonNegative, VarKind::Free, VarKind::NonNegative];
                let mut lp = LinearProgram::new(sense, obj.iter().map(|&v| int(v)).collect(), vars);
                for j in 0..3 {
                    let mut e = vec![int(0); 3];
                    e[j] = int(1);
                    lp.add(e.clone(), Relation::Le, int(5));
                    lp.add(e, Relation::Ge, int(-5));
                }
                // nonnegative right-hand sides keep the origin feasible
                for (coeffs, rhs) in rows {
                    lp.add(coeffs.iter().map(|&v| int(v)).collect(), Relation::Le, int(rhs));
                }
                let r = solve_lp(&lp).unwrap();
                prop_assert_eq!(r.status, LpStatus::Optimal);
                check_strong_duality(&lp, &r);
                for (con, y) in lp.constraints.iter().zip(&r.dual) {
                    let signed = if minimize { -y.clone() } else { y.clone() };
                    match con.relation {
                        Relation::Le => prop_assert!(!signed.is_negative()),
                        Relation::Ge => prop_assert!(!signed.is_positive()),
                        Relation::Eq => {}
                    }
                }
                for con in &lp.constraints {
                    let lhs = crate::rational::dot(&con.coeffs, &r.primal);
                    match con.relation {
                        Relation::Le => prop_assert!(lhs <= con.rhs),
                        Relation::Ge => prop_assert!(lhs >= con.rhs),
                        Relation::Eq => prop_assert!(lhs == con.rhs),
                    }
                }
            }
        }
    }
}
