//! CNF formulas: literals, clauses, assignments, DIMACS I/O, and clause
//! normalization.

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CnfError {
    #[error("literal code must be non-zero")]
    ZeroLiteral,
    #[error("missing DIMACS header line (p cnf <vars> <clauses>)")]
    MissingHeader,
    #[error("malformed DIMACS header: {0}")]
    BadHeader(String),
    #[error("bad token {token:?} on line {line}")]
    BadToken { token: String, line: usize },
    #[error("variable {var} out of range (formula declares {num_vars})")]
    VariableOutOfRange { var: usize, num_vars: usize },
    #[error("assignment covers {got} variables, formula has {expected}")]
    AssignmentLength { expected: usize, got: usize },
}

/// A DIMACS-coded literal: positive code `v` for variable `v`, negative code
/// `-v` for its negation. Zero is not a literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Literal(i64);

impl Literal {
    pub fn new(code: i64) -> Result<Self, CnfError> {
        if code == 0 {
            return Err(CnfError::ZeroLiteral);
        }
        Ok(Literal(code))
    }

    /// `new` for codes known to be non-zero; panics otherwise.
    pub fn from_code(code: i64) -> Self {
        Literal::new(code).expect("literal code must be non-zero")
    }

    pub fn code(self) -> i64 {
        self.0
    }

    /// 1-based variable index.
    pub fn var(self) -> usize {
        self.0.unsigned_abs() as usize
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }

    pub fn negated(self) -> Literal {
        Literal(-self.0)
    }

    /// Truth value under a total assignment.
    pub fn eval(self, assignment: &Assignment) -> bool {
        assignment.get(self.var()) == self.is_positive()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clause {
    literals: Vec<Literal>,
}

/// Result of merging duplicate literals in a clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NormalizedClause {
    /// Some variable occurs in both polarities; the clause is always true.
    Tautology,
    /// Distinct literals, sorted by variable then polarity (positive first).
    Clause(Vec<Literal>),
}

impl Clause {
    pub fn new(literals: Vec<Literal>) -> Self {
        Clause { literals }
    }

    pub fn from_codes(codes: &[i64]) -> Result<Self, CnfError> {
        Ok(Clause { literals: codes.iter().map(|&c| Literal::new(c)).collect::<Result<_, _>>()? })
    }

    pub fn literals(&self) -> &[Literal] {
        &self.literals
    }

    pub fn len(&self) -> usize {
        self.literals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.literals.is_empty()
    }

    /// True iff at least one literal is true under the assignment.
    pub fn eval(&self, assignment: &Assignment) -> bool {
        self.literals.iter().any(|l| l.eval(assignment))
    }

    /// Merge duplicate literals and detect tautologies. The kept literals are
    /// sorted by variable index, positive polarity first within a variable.
    pub fn normalized(&self) -> NormalizedClause {
        let mut lits = self.literals.clone();
        lits.sort_by_key(|l| (l.var(), !l.is_positive()));
        lits.dedup();
        for pair in lits.windows(2) {
            if pair[0].var() == pair[1].var() {
                return NormalizedClause::Tautology;
            }
        }
        NormalizedClause::Clause(lits)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Clause>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Clause>) -> Result<Self, CnfError> {
        let formula = CnfFormula { num_vars, clauses };
        formula.validate()?;
        Ok(formula)
    }

    fn validate(&self) -> Result<(), CnfError> {
        for clause in &self.clauses {
            for lit in clause.literals() {
                if lit.var() > self.num_vars {
                    return Err(CnfError::VariableOutOfRange {
                        var: lit.var(),
                        num_vars: self.num_vars,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    /// True iff every clause has a true literal. The assignment must cover
    /// exactly `num_vars` variables.
    pub fn eval(&self, assignment: &Assignment) -> Result<bool, CnfError> {
        if assignment.len() != self.num_vars {
            return Err(CnfError::AssignmentLength {
                expected: self.num_vars,
                got: assignment.len(),
            });
        }
        Ok(self.clauses.iter().all(|c| c.eval(assignment)))
    }
}

/// A total assignment; index 0 holds variable 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    values: Vec<bool>,
}

impl Assignment {
    pub fn all_false(num_vars: usize) -> Self {
        Assignment { values: vec![false; num_vars] }
    }

    pub fn from_values(values: Vec<bool>) -> Self {
        Assignment { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value of 1-based variable `var`.
    pub fn get(&self, var: usize) -> bool {
        self.values[var - 1]
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.values[var - 1] = value;
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

/// Non-fatal oddities found while parsing a DIMACS file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DimacsWarning {
    /// Header declared a different clause count than the body contains.
    ClauseCountMismatch { declared: usize, found: usize },
    /// The last clause was not terminated by 0 before EOF; it was kept.
    UnterminatedClause,
}

impl std::fmt::Display for DimacsWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DimacsWarning::ClauseCountMismatch { declared, found } => {
                write!(f, "header declares {declared} clauses but file contains {found}")
            }
            DimacsWarning::UnterminatedClause => {
                write!(f, "final clause not terminated by 0; kept as written")
            }
        }
    }
}

/// Parse DIMACS CNF text. Comment lines start with `c`; a lone `%` line ends
/// the body (some archives terminate files that way). Clauses may span lines.
pub fn parse_dimacs(input: &str) -> Result<(CnfFormula, Vec<DimacsWarning>), CnfError> {
    let mut num_vars: Option<usize> = None;
    let mut declared_clauses = 0usize;
    let mut clauses: Vec<Clause> = Vec::new();
    let mut current: Vec<Literal> = Vec::new();

    'lines: for (lineno, line) in input.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if line == "%" {
            break;
        }
        if line.starts_with('p') {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(CnfError::BadHeader(line.to_string()));
            }
            num_vars = Some(
                parts[2].parse().map_err(|_| CnfError::BadHeader(line.to_string()))?,
            );
            declared_clauses =
                parts[3].parse().map_err(|_| CnfError::BadHeader(line.to_string()))?;
            continue;
        }
        let nv = num_vars.ok_or(CnfError::MissingHeader)?;
        for token in line.split_whitespace() {
            if token == "%" {
                break 'lines;
            }
            let code: i64 = token.parse().map_err(|_| CnfError::BadToken {
                token: token.to_string(),
                line: lineno + 1,
            })?;
            if code == 0 {
                clauses.push(Clause::new(std::mem::take(&mut current)));
            } else {
                let lit = Literal::from_code(code);
                if lit.var() > nv {
                    return Err(CnfError::VariableOutOfRange { var: lit.var(), num_vars: nv });
                }
                current.push(lit);
            }
        }
    }

    let nv = num_vars.ok_or(CnfError::MissingHeader)?;
    let mut warnings = Vec::new();
    if !current.is_empty() {
        clauses.push(Clause::new(current));
        warnings.push(DimacsWarning::UnterminatedClause);
    }
    if clauses.len() != declared_clauses {
        warnings.push(DimacsWarning::ClauseCountMismatch {
            declared: declared_clauses,
            found: clauses.len(),
        });
    }
    Ok((CnfFormula::new(nv, clauses)?, warnings))
}

/// Render a formula in DIMACS CNF format.
pub fn write_dimacs(formula: &CnfFormula) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", formula.num_vars(), formula.num_clauses());
    for clause in formula.clauses() {
        for lit in clause.literals() {
            let _ = write!(out, "{} ", lit.code());
        }
        let _ = writeln!(out, "0");
    }
    out
}
