//! Cross-checks of the DPLL solver and the SAT-to-MIP translation against
//! independent brute-force oracles.

use satvq_core::cnf::{Clause, CnfFormula, Literal};
use satvq_core::dpll::{solve, SolveResult};
use satvq_core::generators::{
    random_clique, random_ksat, random_vertex_cover, sr_pair, CliqueParams, RandomKsatParams,
    SrParams, VertexCoverParams,
};
use satvq_core::mip::sat_to_mip;

/// Truth-table satisfiability check written directly against the clause
/// literals, sharing no logic with the solver under test.
fn enumerate_satisfiable(formula: &CnfFormula) -> bool {
    let n = formula.num_vars();
    assert!(n <= 20, "enumeration oracle capped at 20 variables");
    'outer: for bits in 0u64..(1u64 << n) {
        for clause in formula.clauses() {
            let clause_true = clause.literals().iter().any(|lit| {
                let value = (bits >> (lit.var() - 1)) & 1 == 1;
                value == lit.is_positive()
            });
            if !clause_true {
                continue 'outer;
            }
        }
        return true;
    }
    false
}

fn assignment_satisfies(formula: &CnfFormula, values: &[bool]) -> bool {
    formula.clauses().iter().all(|clause| {
        clause
            .literals()
            .iter()
            .any(|lit| values[lit.var() - 1] == lit.is_positive())
    })
}

#[test]
fn dpll_agrees_with_truth_table_enumeration() {
    let mut checked = 0;
    for seed in 0..6u64 {
        for num_vars in [3, 5, 8] {
            for k in [1, 2, 3] {
                if k > num_vars {
                    continue;
                }
                for ratio in [1, 3, 5] {
                    let params = RandomKsatParams {
                        num_vars,
                        num_clauses: ratio * num_vars,
                        k,
                    };
                    for instance in 0..2 {
                        let f = random_ksat(&params, seed, instance).unwrap();
                        let expected = enumerate_satisfiable(&f);
                        match solve(&f, 1_000_000) {
                            SolveResult::Satisfiable(a) => {
                                assert!(expected, "dpll found a model where none exists");
                                assert!(
                                    assignment_satisfies(&f, a.values()),
                                    "dpll returned a non-model"
                                );
                            }
                            SolveResult::Unsatisfiable => {
                                assert!(!expected, "dpll missed a model");
                            }
                            SolveResult::BudgetExceeded => {
                                panic!("tiny instance exhausted a 1M-decision budget")
                            }
                        }
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked >= 300, "only {checked} formulas checked");
}

#[test]
fn dpll_handles_edge_case_formulas() {
    // Empty formula (no clauses) is trivially satisfiable.
    let empty = CnfFormula::new(3, vec![]).unwrap();
    assert!(matches!(solve(&empty, 100), SolveResult::Satisfiable(_)));

    // Contradictory units.
    let contradiction = CnfFormula::new(
        1,
        vec![
            Clause::new(vec![Literal::from_code(1)]),
            Clause::new(vec![Literal::from_code(-1)]),
        ],
    )
    .unwrap();
    assert!(matches!(solve(&contradiction, 100), SolveResult::Unsatisfiable));

    // A clause that is already empty makes the formula unsatisfiable.
    let has_empty = CnfFormula::new(2, vec![Clause::new(vec![])]).unwrap();
    assert!(matches!(solve(&has_empty, 100), SolveResult::Unsatisfiable));
}

#[test]
fn sr_pairs_carry_correct_labels() {
    let params = SrParams { num_vars: 10, solve_budget: 1_000_000, max_clauses: 500 };
    for instance in 0..6u64 {
        let pair = sr_pair(&params, 7, instance).unwrap();
        assert!(
            enumerate_satisfiable(&pair.sat),
            "sat side of pair {instance} is not satisfiable"
        );
        assert!(
            !enumerate_satisfiable(&pair.unsat),
            "unsat side of pair {instance} is satisfiable"
        );
        // The pair differs only in the final clause's first literal.
        assert_eq!(pair.sat.num_clauses(), pair.unsat.num_clauses());
    }
}

#[test]
fn mip_feasibility_matches_satisfiability_on_structured_families() {
    let clique = CliqueParams { num_vertices: 6, edge_prob: 0.5, clique_size: 3 };
    let vcover = VertexCoverParams { num_vertices: 6, edge_prob: 0.4, cover_size: 3 };
    for instance in 0..8u64 {
        for f in [
            random_clique(&clique, 11, instance).unwrap(),
            random_vertex_cover(&vcover, 11, instance).unwrap(),
        ] {
            if f.num_vars() > 20 {
                continue;
            }
            let expected = enumerate_satisfiable(&f);
            let (mip, _) = sat_to_mip(&f);
            let feasible = mip.brute_force_binary_feasible().is_some();
            assert_eq!(feasible, expected, "feasibility mismatch on {} vars", f.num_vars());
        }
    }
}

#[test]
fn tautologies_drop_out_of_the_translation_without_changing_feasibility() {
    // (x1 ∨ ¬x1) ∧ (¬x2) — tautology plus a forcing unit.
    let f = CnfFormula::new(
        2,
        vec![
            Clause::from_codes(&[1, -1]).unwrap(),
            Clause::from_codes(&[-2]).unwrap(),
        ],
    )
    .unwrap();
    let (mip, stats) = sat_to_mip(&f);
    assert_eq!(stats.tautologies_dropped, 1);
    assert_eq!(mip.constraints.len(), 1);
    assert_eq!(
        mip.brute_force_binary_feasible().is_some(),
        enumerate_satisfiable(&f)
    );
}

#[test]
fn budget_exhaustion_is_reported_not_mislabeled() {
    let params = RandomKsatParams { num_vars: 12, num_clauses: 50, k: 3 };
    let f = random_ksat(&params, 3, 0).unwrap();
    // With a one-decision budget the solver must refuse to answer (or prove
    // the result within the budget); it must never guess.
    match solve(&f, 1) {
        SolveResult::BudgetExceeded => {}
        SolveResult::Satisfiable(a) => assert!(assignment_satisfies(&f, a.values())),
        SolveResult::Unsatisfiable => assert!(!enumerate_satisfiable(&f)),
    }
}
