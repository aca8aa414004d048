//! Discrete belief networks, evidence, and the graph machinery shared by all
//! inference routines.

mod factor;
mod graph;
pub mod io;
mod oracle;
pub mod random;

use std::collections::BTreeMap;

use crate::error::{Error, Result};

pub(crate) use factor::{combine_eliminate, output_entries};
pub use factor::{factor_product, Combine, Factor, Reduce};
pub(crate) use graph::positions as graph_positions;
pub use graph::{find_ordering, moral_graph, width_along, Heuristic, Ordering, UndirectedGraph};
pub use oracle::{brute_force_marginal, brute_force_mpe, BruteForceMpe, BRUTE_FORCE_LIMIT};

/// Role of a variable in a coding network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VarKind {
    InformationBit,
    ParityBit,
    Generic,
}

impl VarKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VarKind::InformationBit => "info",
            VarKind::ParityBit => "parity",
            VarKind::Generic => "generic",
        }
    }
}

impl std::str::FromStr for VarKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "info" => Ok(VarKind::InformationBit),
            "parity" => Ok(VarKind::ParityBit),
            "generic" => Ok(VarKind::Generic),
            other => Err(format!("unknown variable kind `{other}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Variable {
    pub id: usize,
    pub cardinality: usize,
    pub kind: VarKind,
}

impl Variable {
    pub fn new(id: usize, cardinality: usize, kind: VarKind) -> Self {
        Variable {
            id,
            cardinality,
            kind,
        }
    }

    pub fn binary(id: usize) -> Self {
        Variable::new(id, 2, VarKind::Generic)
    }
}

/// A DAG over discrete variables with one CPT per variable. The CPT of
/// variable `i` has scope `(parents[i]..., i)`.
#[derive(Clone, Debug)]
pub struct BeliefNetwork {
    variables: Vec<Variable>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    cpts: Vec<Factor>,
    topological: Vec<usize>,
}

/// Tolerance on the row sums of a CPT.
pub const CPT_SUM_TOLERANCE: f64 = 1e-12;

/// Validates and assembles a belief network. `tables[i]` is the row-major CPT
/// of variable `i` over `(parent_lists[i]..., i)`.
pub fn build_network(
    variables: Vec<Variable>,
    parent_lists: Vec<Vec<usize>>,
    tables: Vec<Vec<f64>>,
) -> Result<BeliefNetwork> {
    let n = variables.len();
    if parent_lists.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: parent_lists.len(),
        });
    }
    if tables.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: tables.len(),
        });
    }
    for (i, v) in variables.iter().enumerate() {
        if v.id != i {
            return Err(Error::UnknownVariable(v.id));
        }
        if v.cardinality < 2 {
            return Err(Error::InvalidCardinality {
                variable: i,
                cardinality: v.cardinality,
            });
        }
    }
    let mut children = vec![Vec::new(); n];
    for (child, ps) in parent_lists.iter().enumerate() {
        for (k, &p) in ps.iter().enumerate() {
            if p >= n {
                return Err(Error::UnknownVariable(p));
            }
            if p == child {
                return Err(Error::CycleDetected(child));
            }
            if ps[..k].contains(&p) {
                return Err(Error::DuplicateVariable(p));
            }
            children[p].push(child);
        }
    }
    let topological = topological_order(&parent_lists, &children)?;

    let mut cpts = Vec::with_capacity(n);
    for (i, table) in tables.into_iter().enumerate() {
        let mut scope = parent_lists[i].clone();
        scope.push(i);
        let cards: Vec<usize> = scope.iter().map(|&v| variables[v].cardinality).collect();
        let expected: usize = cards.iter().product();
        if table.len() != expected {
            return Err(Error::TableSizeMismatch {
                variable: i,
                expected,
                actual: table.len(),
            });
        }
        let cpt = Factor::new(scope, cards, table)?;
        let card = variables[i].cardinality;
        for (row, chunk) in cpt.values().chunks(card).enumerate() {
            if (chunk.iter().sum::<f64>() - 1.0).abs() > CPT_SUM_TOLERANCE {
                return Err(Error::CptNotNormalized { variable: i, row });
            }
        }
        cpts.push(cpt);
    }
    Ok(BeliefNetwork {
        variables,
        parents: parent_lists,
        children,
        cpts,
        topological,
    })
}

fn topological_order(parents: &[Vec<usize>], children: &[Vec<usize>]) -> Result<Vec<usize>> {
    let n = parents.len();
    let mut indegree: Vec<usize> = parents.iter().map(Vec::len).collect();
    let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(v) = ready.pop() {
        order.push(v);
        for &c in &children[v] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() < n {
        let stuck = (0..n).find(|&i| indegree[i] > 0).unwrap_or(0);
        return Err(Error::CycleDetected(stuck));
    }
    Ok(order)
}

impl BeliefNetwork {
    pub fn len(&self) -> usize {
        self.variables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variables.is_empty()
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, id: usize) -> &Variable {
        &self.variables[id]
    }

    pub fn cardinality(&self, id: usize) -> usize {
        self.variables[id].cardinality
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.variables.iter().map(|v| v.cardinality).collect()
    }

    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    pub fn cpt(&self, id: usize) -> &Factor {
        &self.cpts[id]
    }

    pub fn cpts(&self) -> &[Factor] {
        &self.cpts
    }

    /// Parents before children; ties go to the smaller id.
    pub fn topological_order(&self) -> &[usize] {
        &self.topological
    }

    /// Ids of variables of the given kind, in increasing order.
    pub fn ids_of_kind(&self, kind: VarKind) -> Vec<usize> {
        self.variables
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.id)
            .collect()
    }

    /// True when the undirected skeleton has no cycle.
    pub fn is_polytree(&self) -> bool {
        let edges: usize = self.parents.iter().map(Vec::len).sum();
        let components = moral_components(self);
        edges + components == self.len()
    }
}

fn moral_components(net: &BeliefNetwork) -> usize {
    let n = net.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &w in net.parents(v).iter().chain(net.children(v)) {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

/// Soft evidence on one variable, held as log weights so that sharp channel
/// observations never underflow into accidental hard evidence.
#[derive(Clone, Debug, PartialEq)]
pub struct Likelihood {
    variable: usize,
    log_weights: Vec<f64>,
}

impl Likelihood {
    pub fn from_log_weights(variable: usize, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights
            .iter()
            .any(|w| w.is_nan() || *w == f64::INFINITY)
        {
            return Err(Error::NegativeProbability { value: f64::NAN });
        }
        Ok(Likelihood {
            variable,
            log_weights,
        })
    }

    pub fn from_weights(variable: usize, weights: &[f64]) -> Result<Self> {
        if let Some(&bad) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::NegativeProbability { value: bad });
        }
        Ok(Likelihood {
            variable,
            log_weights: weights.iter().map(|w| w.ln()).collect(),
        })
    }

    pub fn variable(&self) -> usize {
        self.variable
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Unary log-domain table.
    pub fn log_factor(&self) -> Factor {
        Factor::from_parts(
            vec![self.variable],
            vec![self.log_weights.len()],
            self.log_weights.clone(),
        )
    }

    /// Linear weights scaled so the largest is 1, with the removed scale.
    pub fn scaled_weights(&self) -> (Vec<f64>, f64) {
        let m = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let m = if m.is_finite() { m } else { 0.0 };
        (self.log_weights.iter().map(|w| (w - m).exp()).collect(), m)
    }
}

/// Hard observations plus soft likelihood vectors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Evidence {
    assignments: BTreeMap<usize, usize>,
    likelihoods: Vec<Likelihood>,
}

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, var: usize, value: usize) -> &mut Self {
        self.assignments.insert(var, value);
        self
    }

    pub fn add_likelihood(&mut self, likelihood: Likelihood) -> &mut Self {
        self.likelihoods.push(likelihood);
        self
    }

    pub fn assignments(&self) -> &BTreeMap<usize, usize> {
        &self.assignments
    }

    pub fn likelihoods(&self) -> &[Likelihood] {
        &self.likelihoods
    }

    pub fn value_of(&self, var: usize) -> Option<usize> {
        self.assignments.get(&var).copied()
    }

    pub fn is_observed(&self, var: usize) -> bool {
        self.assignments.contains_key(&var)
    }

    pub fn validate(&self, net: &BeliefNetwork) -> Result<()> {
        for (&v, &val) in &self.assignments {
            if v >= net.len() {
                return Err(Error::UnknownVariable(v));
            }
            if val >= net.cardinality(v) {
                return Err(Error::ValueOutOfRange {
                    variable: v,
                    value: val,
                });
            }
        }
        for l in &self.likelihoods {
            let v = l.variable;
            if v >= net.len() {
                return Err(Error::UnknownVariable(v));
            }
            if self.assignments.contains_key(&v) {
                return Err(Error::EvidenceConflict(v));
            }
            if l.log_weights.len() != net.cardinality(v) {
                return Err(Error::CardinalityMismatch(v));
            }
        }
        Ok(())
    }
}

/// `ln` of the product of every CPT entry and every likelihood weight at a
/// full assignment.
pub fn log_joint_probability(
    net: &BeliefNetwork,
    assignment: &[usize],
    evidence: &Evidence,
) -> Result<f64> {
    if assignment.len() != net.len() {
        return Err(Error::LengthMismatch {
            expected: net.len(),
            actual: assignment.len(),
        });
    }
    for (i, &val) in assignment.iter().enumerate() {
        if val >= net.cardinality(i) {
            return Err(Error::ValueOutOfRange {
                variable: i,
                value: val,
            });
        }
    }
    for (&v, &val) in evidence.assignments() {
        if assignment.get(v) != Some(&val) {
            return Err(Error::EvidenceContradiction(v));
        }
    }
    let mut total = 0.0;
    for cpt in net.cpts() {
        total += cpt.value_at(assignment).ln();
    }
    for l in evidence.likelihoods() {
        total += l.log_weights[assignment[l.variable]];
    }
    Ok(total)
}

pub fn joint_probability(
    net: &BeliefNetwork,
    assignment: &[usize],
    evidence: &Evidence,
) -> Result<f64> {
    log_joint_probability(net, assignment, evidence).map(f64::exp)
}
