//! Seeded instance generators: uniform random k-SAT, paired SR instances,
//! and CNF encodings of k-clique and vertex-cover decision problems on
//! random graphs.
//!
//! All randomness flows through purpose-keyed substreams of a single corpus
//! seed plus a per-instance salt, so corpora are reproducible instance by
//! instance.

use crate::cnf::{Clause, CnfFormula, Literal};
use crate::dpll::{solve, SolveResult};
use crate::rng::{salted_stream, Purpose};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GenError {
    #[error("solver budget exhausted while generating an sr pair")]
    BudgetExceeded,
    #[error("sr generation did not reach an unsatisfiable formula within {0} clauses")]
    ClauseCapReached(usize),
    #[error("invalid generator parameters: {0}")]
    BadParams(String),
}

/// Instance families the toolkit can generate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    RandomKsat,
    Sr,
    Clique,
    VertexCover,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::RandomKsat => "random-ksat",
            Family::Sr => "sr",
            Family::Clique => "clique",
            Family::VertexCover => "vcover",
        }
    }

    pub fn all() -> [Family; 4] {
        [Family::RandomKsat, Family::Sr, Family::Clique, Family::VertexCover]
    }
}

impl std::str::FromStr for Family {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random-ksat" => Ok(Family::RandomKsat),
            "sr" => Ok(Family::Sr),
            "clique" => Ok(Family::Clique),
            "vcover" => Ok(Family::VertexCover),
            other => Err(format!("unknown family {other:?}")),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomKsatParams {
    pub num_vars: usize,
    pub num_clauses: usize,
    pub k: usize,
}

/// Uniform random k-SAT: each clause picks `k` distinct variables and gives
/// each a fair-coin polarity.
pub fn random_ksat(
    params: &RandomKsatParams,
    seed: u64,
    instance: u64,
) -> Result<CnfFormula, GenError> {
    if params.k == 0 || params.k > params.num_vars {
        return Err(GenError::BadParams(format!(
            "k = {} must be in 1..={}",
            params.k, params.num_vars
        )));
    }
    let mut var_rng = salted_stream(seed, Purpose::ClauseVars, instance);
    let mut sign_rng = salted_stream(seed, Purpose::Signs, instance);
    let mut clauses = Vec::with_capacity(params.num_clauses);
    let all_vars: Vec<usize> = (1..=params.num_vars).collect();
    for _ in 0..params.num_clauses {
        let vars: Vec<usize> =
            all_vars.choose_multiple(&mut var_rng, params.k).copied().collect();
        let lits = vars
            .into_iter()
            .map(|v| {
                let code = v as i64;
                Literal::from_code(if sign_rng.gen_bool(0.5) { code } else { -code })
            })
            .collect();
        clauses.push(Clause::new(lits));
    }
    Ok(CnfFormula::new(params.num_vars, clauses).expect("generated literals are in range"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SrParams {
    pub num_vars: usize,
    /// Decision budget for each satisfiability check during generation.
    pub solve_budget: u64,
    /// Hard cap on clauses appended before giving up.
    pub max_clauses: usize,
}

impl Default for SrParams {
    fn default() -> Self {
        SrParams { num_vars: 20, solve_budget: 200_000, max_clauses: 2_000 }
    }
}

/// A satisfiable/unsatisfiable pair differing in a single literal.
#[derive(Debug, Clone)]
pub struct SrPair {
    pub sat: CnfFormula,
    pub unsat: CnfFormula,
}

/// Grow a random formula one clause at a time until it turns unsatisfiable,
/// then flip the first literal of the final clause to obtain a satisfiable
/// twin. Clause widths are `1 + Bernoulli(0.7) + Geometric(0.4)` (the
/// geometric counts trials until first success, so it is at least 1).
pub fn sr_pair(params: &SrParams, seed: u64, instance: u64) -> Result<SrPair, GenError> {
    if params.num_vars == 0 {
        return Err(GenError::BadParams("sr needs at least one variable".into()));
    }
    let mut width_rng = salted_stream(seed, Purpose::SrWidth, instance);
    let mut var_rng = salted_stream(seed, Purpose::ClauseVars, instance);
    let mut sign_rng = salted_stream(seed, Purpose::Signs, instance);
    let all_vars: Vec<usize> = (1..=params.num_vars).collect();

    let mut clauses: Vec<Clause> = Vec::new();
    loop {
        if clauses.len() >= params.max_clauses {
            return Err(GenError::ClauseCapReached(params.max_clauses));
        }
        let mut width = 1;
        if width_rng.gen_bool(0.7) {
            width += 1;
        }
        let mut geometric = 1;
        while !width_rng.gen_bool(0.4) {
            geometric += 1;
        }
        width += geometric;
        let width = width.min(params.num_vars);

        let vars: Vec<usize> = all_vars.choose_multiple(&mut var_rng, width).copied().collect();
        let lits: Vec<Literal> = vars
            .into_iter()
            .map(|v| {
                let code = v as i64;
                Literal::from_code(if sign_rng.gen_bool(0.5) { code } else { -code })
            })
            .collect();
        clauses.push(Clause::new(lits));

        let formula = CnfFormula::new(params.num_vars, clauses.clone())
            .expect("generated literals are in range");
        match solve(&formula, params.solve_budget) {
            SolveResult::Satisfiable(_) => continue,
            SolveResult::Unsatisfiable => {
                let last = clauses.last().unwrap();
                let mut flipped = last.literals().to_vec();
                flipped[0] = flipped[0].negated();
                let mut sat_clauses = clauses.clone();
                *sat_clauses.last_mut().unwrap() = Clause::new(flipped);
                let sat = CnfFormula::new(params.num_vars, sat_clauses)
                    .expect("generated literals are in range");
                return Ok(SrPair { sat, unsat: formula });
            }
            SolveResult::BudgetExceeded => return Err(GenError::BudgetExceeded),
        }
    }
}

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    adjacent: Vec<bool>,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    pub fn new(n: usize, mut edges: Vec<(usize, usize)>) -> Self {
        let mut adjacent = vec![false; n * n];
        for e in edges.iter_mut() {
            let (u, v) = *e;
            assert!(u < n && v < n && u != v, "edge out of range or self-loop");
            *e = (u.min(v), u.max(v));
            adjacent[u * n + v] = true;
            adjacent[v * n + u] = true;
        }
        edges.sort_unstable();
        edges.dedup();
        Graph { n, adjacent, edges }
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacent[u * self.n + v]
    }
}

/// Erdős–Rényi G(n, p) with a deterministic pair order.
pub fn gnp_graph(n: usize, p: f64, seed: u64, instance: u64) -> Graph {
    let mut rng = salted_stream(seed, Purpose::GraphSample, instance);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::new(n, edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CliqueParams {
    pub num_vertices: usize,
    pub edge_prob: f64,
    pub clique_size: usize,
}

/// CNF deciding whether `graph` contains a clique of size `k`, on variables
/// x[slot][vertex] (`slot * n + vertex + 1`). Satisfiable iff such a clique
/// exists. Three clause groups: every slot is filled, no vertex fills two
/// slots, and vertices in different slots must be adjacent.
pub fn clique_formula(graph: &Graph, k: usize) -> CnfFormula {
    let n = graph.num_vertices();
    let var = |slot: usize, vertex: usize| (slot * n + vertex + 1) as i64;
    let mut clauses = Vec::new();
    for s in 0..k {
        clauses.push(Clause::from_codes(
            &(0..n).map(|v| var(s, v)).collect::<Vec<_>>(),
        )
        .unwrap());
    }
    for v in 0..n {
        for s in 0..k {
            for t in s + 1..k {
                clauses.push(Clause::from_codes(&[-var(s, v), -var(t, v)]).unwrap());
            }
        }
    }
    for s in 0..k {
        for t in s + 1..k {
            for u in 0..n {
                for v in 0..n {
                    if u != v && !graph.has_edge(u, v) {
                        clauses.push(Clause::from_codes(&[-var(s, u), -var(t, v)]).unwrap());
                    }
                }
            }
        }
    }
    CnfFormula::new(k * n, clauses).expect("clique variables are in range")
}

pub fn random_clique(
    params: &CliqueParams,
    seed: u64,
    instance: u64,
) -> Result<CnfFormula, GenError> {
    if params.clique_size == 0 || params.clique_size > params.num_vertices {
        return Err(GenError::BadParams(format!(
            "clique size {} must be in 1..={}",
            params.clique_size, params.num_vertices
        )));
    }
    let graph = gnp_graph(params.num_vertices, params.edge_prob, seed, instance);
    Ok(clique_formula(&graph, params.clique_size))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexCoverParams {
    pub num_vertices: usize,
    pub edge_prob: f64,
    pub cover_size: usize,
}

/// CNF deciding whether `graph` has a vertex cover of size at most `k`, on
/// one variable per vertex (vertex v is `v + 1`). Every edge must have an
/// endpoint in the cover, and every set of k+1 vertices must miss the cover
/// somewhere.
pub fn vertex_cover_formula(graph: &Graph, k: usize) -> CnfFormula {
    let n = graph.num_vertices();
    let mut clauses = Vec::new();
    for &(u, v) in graph.edges() {
        clauses.push(Clause::from_codes(&[(u + 1) as i64, (v + 1) as i64]).unwrap());
    }
    // At most k true: for each (k+1)-subset, at least one vertex is out.
    for_each_combination(n, k + 1, |subset| {
        clauses.push(
            Clause::from_codes(&subset.iter().map(|&v| -((v + 1) as i64)).collect::<Vec<_>>())
                .unwrap(),
        );
    });
    CnfFormula::new(n, clauses).expect("cover variables are in range")
}

pub fn random_vertex_cover(
    params: &VertexCoverParams,
    seed: u64,
    instance: u64,
) -> Result<CnfFormula, GenError> {
    if params.cover_size >= params.num_vertices {
        return Err(GenError::BadParams(format!(
            "cover size {} must be below {}",
            params.cover_size, params.num_vertices
        )));
    }
    let graph = gnp_graph(params.num_vertices, params.edge_prob, seed, instance);
    Ok(vertex_cover_formula(&graph, params.cover_size))
}

/// Visit every k-subset of 0..n in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance the rightmost index that can still move.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
        }
        if idx[i] == i + n - k {
            return;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpll;

    #[test]
    fn random_ksat_shape_and_determinism() {
        let params = RandomKsatParams { num_vars: 10, num_clauses: 30, k: 3 };
        let f = random_ksat(&params, 7, 0).unwrap();
        assert_eq!(f.num_vars(), 10);
        assert_eq!(f.num_clauses(), 30);
        for clause in f.clauses() {
            assert_eq!(clause.len(), 3);
            let mut vars: Vec<usize> = clause.literals().iter().map(|l| l.var()).collect();
            vars.sort_unstable();
            vars.dedup();
            assert_eq!(vars.len(), 3, "variables within a clause must be distinct");
            assert!(vars.iter().all(|&v| v >= 1 && v <= 10));
        }
        assert_eq!(f, random_ksat(&params, 7, 0).unwrap());
        assert_ne!(f, random_ksat(&params, 7, 1).unwrap());
        assert_ne!(f, random_ksat(&params, 8, 0).unwrap());
    }

    #[test]
    fn random_ksat_rejects_bad_k() {
        let params = RandomKsatParams { num_vars: 2, num_clauses: 1, k: 3 };
        assert!(matches!(random_ksat(&params, 0, 0), Err(GenError::BadParams(_))));
    }

    #[test]
    fn sr_pair_labels_and_single_flip() {
        let params = SrParams { num_vars: 12, ..SrParams::default() };
        for instance in 0..5 {
            let pair = sr_pair(&params, 11, instance).unwrap();
            assert!(matches!(
                dpll::solve(&pair.sat, 1_000_000),
                dpll::SolveResult::Satisfiable(_)
            ));
            assert_eq!(dpll::solve(&pair.unsat, 1_000_000), dpll::SolveResult::Unsatisfiable);
            assert_eq!(pair.sat.num_clauses(), pair.unsat.num_clauses());
            // All clauses equal except the last, which differs in its first
            // literal only.
            let m = pair.sat.num_clauses();
            assert_eq!(&pair.sat.clauses()[..m - 1], &pair.unsat.clauses()[..m - 1]);
            let s = pair.sat.clauses()[m - 1].literals();
            let u = pair.unsat.clauses()[m - 1].literals();
            assert_eq!(s.len(), u.len());
            assert_eq!(s[0], u[0].negated());
            assert_eq!(&s[1..], &u[1..]);
        }
    }

    #[test]
    fn sr_pair_is_deterministic() {
        let params = SrParams { num_vars: 12, ..SrParams::default() };
        let a = sr_pair(&params, 3, 4).unwrap();
        let b = sr_pair(&params, 3, 4).unwrap();
        assert_eq!(a.sat, b.sat);
        assert_eq!(a.unsat, b.unsat);
    }

    #[test]
    fn gnp_graph_determinism_and_range() {
        let g = gnp_graph(8, 0.5, 1, 2);
        let h = gnp_graph(8, 0.5, 1, 2);
        assert_eq!(g.edges(), h.edges());
        for &(u, v) in g.edges() {
            assert!(u < v && v < 8);
            assert!(g.has_edge(u, v) && g.has_edge(v, u));
        }
        assert!(gnp_graph(8, 0.0, 1, 2).edges().is_empty());
        assert_eq!(gnp_graph(8, 1.0, 1, 2).edges().len(), 28);
    }

    #[test]
    fn clique_encoding_matches_graph_truth() {
        // Triangle plus a pendant vertex: has a 3-clique, no 4-clique.
        let g = Graph::new(4, vec![(0, 1), (0, 2), (1, 2), (2, 3)]);
        let f3 = clique_formula(&g, 3);
        assert!(matches!(dpll::solve(&f3, 100_000), dpll::SolveResult::Satisfiable(_)));
        let f4 = clique_formula(&g, 4);
        assert_eq!(dpll::solve(&f4, 100_000), dpll::SolveResult::Unsatisfiable);
    }

    #[test]
    fn clique_solution_decodes_to_a_real_clique() {
        let g = gnp_graph(7, 0.6, 5, 0);
        let k = 3;
        if let dpll::SolveResult::Satisfiable(a) = dpll::solve(&clique_formula(&g, k), 1_000_000) {
            let n = g.num_vertices();
            let mut chosen = Vec::new();
            for s in 0..k {
                let slot: Vec<usize> = (0..n).filter(|&v| a.get(s * n + v + 1)).collect();
                assert!(!slot.is_empty(), "slot {s} is empty");
                chosen.extend(slot);
            }
            chosen.sort_unstable();
            chosen.dedup();
            assert!(chosen.len() >= k);
            for i in 0..chosen.len() {
                for j in i + 1..chosen.len() {
                    assert!(g.has_edge(chosen[i], chosen[j]), "selected set is not a clique");
                }
            }
        }
    }

    #[test]
    fn vertex_cover_encoding_matches_graph_truth() {
        // Path 0-1-2: vertex 1 covers both edges.
        let path = Graph::new(3, vec![(0, 1), (1, 2)]);
        assert!(matches!(
            dpll::solve(&vertex_cover_formula(&path, 1), 100_000),
            dpll::SolveResult::Satisfiable(_)
        ));
        // Triangle: no single vertex covers all three edges.
        let tri = Graph::new(3, vec![(0, 1), (0, 2), (1, 2)]);
        assert_eq!(
            dpll::solve(&vertex_cover_formula(&tri, 1), 100_000),
            dpll::SolveResult::Unsatisfiable
        );
        assert!(matches!(
            dpll::solve(&vertex_cover_formula(&tri, 2), 100_000),
            dpll::SolveResult::Satisfiable(_)
        ));
    }

    #[test]
    fn combinations_enumerate_binomial_many() {
        let mut count = 0;
        let mut last: Option<Vec<usize>> = None;
        for_each_combination(6, 3, |c| {
            count += 1;
            let cur = c.to_vec();
            if let Some(prev) = &last {
                assert!(prev < &cur, "combinations must be lexicographically increasing");
            }
            last = Some(cur);
        });
        assert_eq!(count, 20);
        let mut empty = 0;
        for_each_combination(3, 5, |_| empty += 1);
        assert_eq!(empty, 0);
        let mut full = 0;
        for_each_combination(4, 0, |c| {
            assert!(c.is_empty());
            full += 1;
        });
        assert_eq!(full, 1);
    }
}
