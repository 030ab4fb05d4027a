//! A small DPLL solver: unit propagation, pure-literal elimination, and
//! chronological backtracking. Intended as a labeling oracle for desk-scale
//! instances, not a competitive solver.

use crate::cnf::{Assignment, CnfFormula};

/// Outcome of a bounded solve. `BudgetExceeded` means the search hit the
/// decision budget before finding an answer; nothing is known about the
/// instance in that case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SolveResult {
    Satisfiable(Assignment),
    Unsatisfiable,
    BudgetExceeded,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    /// Branching decisions made (each covers both polarities of the chosen
    /// variable).
    pub decisions: u64,
}

/// Solve with a cap on branching decisions.
pub fn solve(formula: &CnfFormula, budget: u64) -> SolveResult {
    solve_with_stats(formula, budget).0
}

pub fn solve_with_stats(formula: &CnfFormula, budget: u64) -> (SolveResult, SolveStats) {
    let mut solver = Solver { formula, budget, stats: SolveStats::default() };
    let mut assign: Vec<Option<bool>> = vec![None; formula.num_vars()];
    let result = match solver.search(&mut assign) {
        Ok(Some(assignment)) => SolveResult::Satisfiable(assignment),
        Ok(None) => SolveResult::Unsatisfiable,
        Err(Exhausted) => SolveResult::BudgetExceeded,
    };
    (result, solver.stats)
}

struct Exhausted;

struct Solver<'a> {
    formula: &'a CnfFormula,
    budget: u64,
    stats: SolveStats,
}

/// State of a clause under a partial assignment.
enum ClauseState {
    Satisfied,
    Conflict,
    /// Exactly one literal unassigned, the rest false: (var, needed value).
    Unit(usize, bool),
    Open,
}

fn clause_state(clause: &crate::cnf::Clause, assign: &[Option<bool>]) -> ClauseState {
    let mut unassigned: Option<(usize, bool)> = None;
    let mut open = 0usize;
    for lit in clause.literals() {
        match assign[lit.var() - 1] {
            Some(v) if v == lit.is_positive() => return ClauseState::Satisfied,
            Some(_) => {}
            None => {
                open += 1;
                if open == 1 {
                    unassigned = Some((lit.var(), lit.is_positive()));
                }
            }
        }
    }
    match open {
        0 => ClauseState::Conflict,
        1 => {
            let (var, value) = unassigned.unwrap();
            ClauseState::Unit(var, value)
        }
        _ => ClauseState::Open,
    }
}

impl Solver<'_> {
    /// Returns Ok(Some(assignment)) when satisfiable under the current
    /// partial assignment, Ok(None) when that subtree is unsatisfiable.
    fn search(&mut self, assign: &mut Vec<Option<bool>>) -> Result<Option<Assignment>, Exhausted> {
        if !self.simplify(assign) {
            return Ok(None);
        }

        // Find the lowest-indexed unassigned variable in an unsatisfied
        // clause; if none, every clause is satisfied.
        let mut branch_var: Option<usize> = None;
        for clause in self.formula.clauses() {
            if matches!(clause_state(clause, assign), ClauseState::Open) {
                for lit in clause.literals() {
                    if assign[lit.var() - 1].is_none() {
                        branch_var = Some(match branch_var {
                            Some(v) => v.min(lit.var()),
                            None => lit.var(),
                        });
                    }
                }
            }
        }
        let var = match branch_var {
            Some(v) => v,
            None => {
                // Unassigned variables are unconstrained; default them false.
                let values = assign.iter().map(|v| v.unwrap_or(false)).collect();
                return Ok(Some(Assignment::from_values(values)));
            }
        };

        if self.stats.decisions >= self.budget {
            return Err(Exhausted);
        }
        self.stats.decisions += 1;

        for value in [true, false] {
            let mut child = assign.clone();
            child[var - 1] = Some(value);
            if let Some(solution) = self.search(&mut child)? {
                return Ok(Some(solution));
            }
        }
        Ok(None)
    }

    /// Unit propagation and pure-literal elimination to fixpoint. Returns
    /// false on conflict.
    fn simplify(&self, assign: &mut [Option<bool>]) -> bool {
        loop {
            // Unit propagation.
            let mut changed = false;
            loop {
                let mut fired = false;
                for clause in self.formula.clauses() {
                    match clause_state(clause, assign) {
                        ClauseState::Conflict => return false,
                        ClauseState::Unit(var, value) => {
                            assign[var - 1] = Some(value);
                            fired = true;
                            changed = true;
                        }
                        _ => {}
                    }
                }
                if !fired {
                    break;
                }
            }

            // Pure-literal elimination over clauses not yet satisfied.
            let n = assign.len();
            let mut pos = vec![false; n];
            let mut neg = vec![false; n];
            for clause in self.formula.clauses() {
                if matches!(clause_state(clause, assign), ClauseState::Satisfied) {
                    continue;
                }
                for lit in clause.literals() {
                    if assign[lit.var() - 1].is_none() {
                        if lit.is_positive() {
                            pos[lit.var() - 1] = true;
                        } else {
                            neg[lit.var() - 1] = true;
                        }
                    }
                }
            }
            for v in 0..n {
                if assign[v].is_none() && (pos[v] ^ neg[v]) {
                    assign[v] = Some(pos[v]);
                    changed = true;
                }
            }

            if !changed {
                return true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::Clause;

    fn formula(num_vars: usize, clauses: &[&[i64]]) -> CnfFormula {
        CnfFormula::new(
            num_vars,
            clauses.iter().map(|c| Clause::from_codes(c).unwrap()).collect(),
        )
        .unwrap()
    }

    fn assert_sat(f: &CnfFormula, result: &SolveResult) {
        match result {
            SolveResult::Satisfiable(a) => assert!(f.eval(a).unwrap(), "witness must satisfy"),
            other => panic!("expected satisfiable, got {other:?}"),
        }
    }

    #[test]
    fn empty_formula_is_satisfiable() {
        let f = formula(0, &[]);
        assert_sat(&f, &solve(&f, 0));
        let f = formula(3, &[]);
        assert_sat(&f, &solve(&f, 0));
    }

    #[test]
    fn empty_clause_is_unsatisfiable() {
        let f = formula(2, &[&[1, 2], &[]]);
        assert_eq!(solve(&f, 100), SolveResult::Unsatisfiable);
    }

    #[test]
    fn unit_conflict_needs_no_decisions() {
        let f = formula(1, &[&[1], &[-1]]);
        let (result, stats) = solve_with_stats(&f, 0);
        assert_eq!(result, SolveResult::Unsatisfiable);
        assert_eq!(stats.decisions, 0);
    }

    #[test]
    fn propagation_chain() {
        // 1 forces 2 forces 3.
        let f = formula(3, &[&[1], &[-1, 2], &[-2, 3]]);
        let (result, stats) = solve_with_stats(&f, 10);
        assert_sat(&f, &result);
        if let SolveResult::Satisfiable(a) = result {
            assert!(a.get(1) && a.get(2) && a.get(3));
        }
        assert_eq!(stats.decisions, 0);
    }

    #[test]
    fn pure_literals_need_no_decisions() {
        // 1 appears only positively, 2 in both polarities but eliminated
        // once the clauses are satisfied by 1.
        let f = formula(2, &[&[1, 2], &[1, -2]]);
        let (result, stats) = solve_with_stats(&f, 0);
        assert_sat(&f, &result);
        assert_eq!(stats.decisions, 0);
    }

    #[test]
    fn two_pigeons_one_hole() {
        let f = formula(2, &[&[1], &[2], &[-1, -2]]);
        assert_eq!(solve(&f, 100), SolveResult::Unsatisfiable);
    }

    #[test]
    fn budget_zero_on_branching_instance() {
        // XOR-like structure with no units or pure literals.
        let f = formula(2, &[&[1, 2], &[-1, -2]]);
        assert_eq!(solve(&f, 0), SolveResult::BudgetExceeded);
        assert_sat(&f, &solve(&f, 10));
    }

    #[test]
    fn unsat_requires_search() {
        // All eight clauses over three variables: no assignment works.
        let mut clauses: Vec<Vec<i64>> = Vec::new();
        for s1 in [1i64, -1] {
            for s2 in [2i64, -2] {
                for s3 in [3i64, -3] {
                    clauses.push(vec![s1, s2, s3]);
                }
            }
        }
        let refs: Vec<&[i64]> = clauses.iter().map(Vec::as_slice).collect();
        let f = formula(3, &refs);
        assert_eq!(solve(&f, 1_000), SolveResult::Unsatisfiable);
    }

    #[test]
    fn exhaustive_agreement_on_small_formulas() {
        // Deterministic pseudo-random 3-var formulas checked against brute
        // force enumeration.
        use rand::Rng;
        let mut rng = crate::rng::stream(42, crate::rng::Purpose::ClauseVars);
        for _ in 0..200 {
            let num_clauses = rng.gen_range(1..=8);
            let mut clauses = Vec::new();
            for _ in 0..num_clauses {
                let width = rng.gen_range(1..=3);
                let mut lits = Vec::new();
                for _ in 0..width {
                    let var = rng.gen_range(1..=3i64);
                    lits.push(if rng.gen_bool(0.5) { var } else { -var });
                }
                clauses.push(Clause::from_codes(&lits).unwrap());
            }
            let f = CnfFormula::new(3, clauses).unwrap();
            let brute = (0..8u32).any(|bits| {
                let assignment =
                    Assignment::from_values((0..3).map(|i| bits >> i & 1 == 1).collect());
                f.eval(&assignment).unwrap()
            });
            match solve(&f, 1_000) {
                SolveResult::Satisfiable(a) => {
                    assert!(brute, "solver says sat, enumeration says unsat");
                    assert!(f.eval(&a).unwrap());
                }
                SolveResult::Unsatisfiable => assert!(!brute, "solver missed a model"),
                SolveResult::BudgetExceeded => panic!("budget too small for 3 variables"),
            }
        }
    }
}
