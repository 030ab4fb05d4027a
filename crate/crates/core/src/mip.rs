//! SAT-to-MIP translation and the bipartite constraint–variable graph.
//!
//! A clause with positive variable set P and negative variable set N (after
//! merging duplicate literals) becomes the linear constraint
//!
//! ```text
//! sum_{i in P} x_i - sum_{i in N} x_i >= 1 - |N|
//! ```
//!
//! over binary variables. Substituting the negated variable y = 1 - x turns
//! each negative literal into a positive term, which is where the 1 - |N|
//! right-hand side comes from. Tautological clauses translate to constraints
//! that every 0/1 point satisfies, so they are dropped (and counted) rather
//! than encoded. The translation preserves feasibility exactly: the MIP is
//! feasible iff the formula is satisfiable.

use crate::cnf::{CnfFormula, NormalizedClause};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarType {
    Binary,
    Integer,
    Continuous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// left-hand side >= rhs
    Ge,
    /// left-hand side <= rhs
    Le,
    /// left-hand side == rhs
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipVariable {
    pub name: String,
    pub var_type: VarType,
    pub lb: f64,
    pub ub: f64,
    /// Objective coefficient; zero for pure feasibility problems.
    pub obj: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    /// (variable index, coefficient), sorted by variable index, coefficients
    /// non-zero.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn lhs(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, c)| c * values[v]).sum()
    }

    pub fn satisfied_by(&self, values: &[f64]) -> bool {
        const TOL: f64 = 1e-9;
        let lhs = self.lhs(values);
        match self.sense {
            Sense::Ge => lhs >= self.rhs - TOL,
            Sense::Le => lhs <= self.rhs + TOL,
            Sense::Eq => (lhs - self.rhs).abs() <= TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipInstance {
    pub name: String,
    pub variables: Vec<MipVariable>,
    pub constraints: Vec<LinearConstraint>,
}

impl MipInstance {
    /// True iff `values` satisfies every constraint. Bounds and integrality
    /// are the caller's concern; this checks the linear rows only.
    pub fn check_feasible(&self, values: &[f64]) -> bool {
        assert_eq!(values.len(), self.variables.len(), "value vector length");
        self.constraints.iter().all(|c| c.satisfied_by(values))
    }

    /// Exhaustively search 0/1 assignments for a feasible point. Requires
    /// every variable to be binary; intended as a small-instance oracle.
    pub fn brute_force_binary_feasible(&self) -> Option<Vec<f64>> {
        assert!(
            self.variables.iter().all(|v| v.var_type == VarType::Binary),
            "brute force oracle only handles binary variables"
        );
        let n = self.variables.len();
        assert!(n <= 24, "brute force capped at 24 variables, got {n}");
        let mut values = vec![0.0; n];
        for bits in 0u64..(1u64 << n) {
            for (i, v) in values.iter_mut().enumerate() {
                *v = ((bits >> i) & 1) as f64;
            }
            if self.check_feasible(&values) {
                return Some(values);
            }
        }
        None
    }
}

/// What the translation did besides emit constraints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SatToMipStats {
    /// Clauses dropped because some variable occurred in both polarities.
    pub tautologies_dropped: usize,
    /// Literal occurrences removed by duplicate merging (tautologies not
    /// included).
    pub duplicates_merged: usize,
}

/// Translate a CNF formula into a binary feasibility MIP. Constraint `j`
/// corresponds to the j-th kept (non-tautological) clause in formula order;
/// variable `i` to CNF variable `i + 1`.
pub fn sat_to_mip(formula: &CnfFormula) -> (MipInstance, SatToMipStats) {
    let variables = (1..=formula.num_vars())
        .map(|v| MipVariable {
            name: format!("x{v}"),
            var_type: VarType::Binary,
            lb: 0.0,
            ub: 1.0,
            obj: 0.0,
        })
        .collect();

    let mut stats = SatToMipStats::default();
    let mut constraints = Vec::new();
    for clause in formula.clauses() {
        match clause.normalized() {
            NormalizedClause::Tautology => {
                stats.tautologies_dropped += 1;
            }
            NormalizedClause::Clause(lits) => {
                stats.duplicates_merged += clause.len() - lits.len();
                let mut coeffs = Vec::with_capacity(lits.len());
                let mut negatives = 0usize;
                for lit in &lits {
                    let coeff = if lit.is_positive() {
                        1.0
                    } else {
                        negatives += 1;
                        -1.0
                    };
                    coeffs.push((lit.var() - 1, coeff));
                }
                constraints.push(LinearConstraint {
                    name: format!("c{}", constraints.len()),
                    coeffs,
                    sense: Sense::Ge,
                    rhs: 1.0 - negatives as f64,
                });
            }
        }
    }

    (MipInstance { name: String::new(), variables, constraints }, stats)
}

/// Bipartite constraint–variable incidence graph: an edge joins constraint
/// `c` and variable `v` iff `v` has a non-zero coefficient in `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    num_constraints: usize,
    num_variables: usize,
    /// (constraint, variable) pairs in lexicographic order, no duplicates.
    edges: Vec<(usize, usize)>,
    cons_adj: Vec<Vec<usize>>,
    var_adj: Vec<Vec<usize>>,
}

impl BipartiteGraph {
    pub fn num_constraints(&self) -> usize {
        self.num_constraints
    }

    pub fn num_variables(&self) -> usize {
        self.num_variables
    }

    pub fn num_nodes(&self) -> usize {
        self.num_constraints + self.num_variables
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Variables adjacent to constraint `c`, ascending.
    pub fn constraint_neighbors(&self, c: usize) -> &[usize] {
        &self.cons_adj[c]
    }

    /// Constraints adjacent to variable `v`, ascending.
    pub fn variable_neighbors(&self, v: usize) -> &[usize] {
        &self.var_adj[v]
    }

    /// All constraint-side adjacency lists (index = constraint).
    pub fn constraint_adjacency(&self) -> &[Vec<usize>] {
        &self.cons_adj
    }

    /// All variable-side adjacency lists (index = variable).
    pub fn variable_adjacency(&self) -> &[Vec<usize>] {
        &self.var_adj
    }

    pub fn has_edge(&self, c: usize, v: usize) -> bool {
        self.cons_adj[c].binary_search(&v).is_ok()
    }
}

pub fn mip_to_graph(mip: &MipInstance) -> BipartiteGraph {
    let num_constraints = mip.constraints.len();
    let num_variables = mip.variables.len();
    let mut edges = Vec::new();
    let mut cons_adj = vec![Vec::new(); num_constraints];
    let mut var_adj = vec![Vec::new(); num_variables];
    for (c, constraint) in mip.constraints.iter().enumerate() {
        for &(v, coeff) in &constraint.coeffs {
            if coeff != 0.0 {
                edges.push((c, v));
                cons_adj[c].push(v);
                var_adj[v].push(c);
            }
        }
    }
    edges.sort_unstable();
    for adj in cons_adj.iter_mut().chain(var_adj.iter_mut()) {
        adj.sort_unstable();
    }
    BipartiteGraph { num_constraints, num_variables, edges, cons_adj, var_adj }
}
