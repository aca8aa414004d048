//! Exact inference by bucket elimination: most probable explanation, belief
//! updating and maximum a posteriori hypotheses.
//!
//! Every routine partitions the CPTs and soft-evidence likelihoods into
//! buckets along an ordering, processes buckets from the last variable to the
//! first, and routes each generated function to the bucket of its latest
//! remaining variable. Max-product runs in the log domain. Belief updating
//! runs in the linear domain, rescaling each generated function by its
//! maximum and keeping the removed scale as a log offset.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::network::{
    combine_eliminate, graph_positions, output_entries, BeliefNetwork, Combine, Evidence, Factor,
    Reduce,
};

/// Default cap on the number of entries of any generated function.
pub const DEFAULT_MAX_TABLE_ENTRIES: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_table_entries: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_table_entries: DEFAULT_MAX_TABLE_ENTRIES,
        }
    }
}

/// The functions whose latest variable is `variable`. Tables hold natural
/// logarithms.
#[derive(Clone, Debug, PartialEq)]
pub struct Bucket {
    pub variable: usize,
    pub factors: Vec<Factor>,
    pub hard_value: Option<usize>,
}

/// Buckets after the backward pass, including every generated function.
#[derive(Clone, Debug)]
pub struct EliminationTrace {
    pub ordering: Vec<usize>,
    pub buckets: Vec<Bucket>,
    /// Log of the product of the constants left after the last bucket.
    pub scalar: f64,
    /// Largest scope of any generated function.
    pub max_generated_arity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpeResult {
    /// Full assignment; observed variables carry their evidence value.
    pub assignment: Vec<usize>,
    /// `ln max_x P(x, e)`.
    pub log_probability: f64,
    pub max_generated_arity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapResult {
    pub assignment: BTreeMap<usize, usize>,
    /// `ln max_a Σ P(a, x, e)` over the non-hypothesis variables.
    pub log_probability: f64,
}

/// Places each CPT and likelihood in the bucket of its latest variable along
/// `ordering` and records hard evidence on its bucket.
pub fn partition_buckets(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
) -> Result<Vec<Bucket>> {
    Ok(Run::new(net, ordering, evidence, Domain::Log)?.buckets)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Domain {
    Log,
    Linear,
}

impl Domain {
    fn combine(self) -> Combine {
        match self {
            Domain::Log => Combine::LogSum,
            Domain::Linear => Combine::Product,
        }
    }

    fn is_zero(self, v: f64) -> bool {
        match self {
            Domain::Log => v == f64::NEG_INFINITY,
            Domain::Linear => v == 0.0,
        }
    }
}

/// State of one elimination run.
pub(crate) struct Run<'a> {
    net: &'a BeliefNetwork,
    pub(crate) ordering: &'a [usize],
    pos: Vec<usize>,
    pub(crate) buckets: Vec<Bucket>,
    pub(crate) scalar: f64,
    domain: Domain,
    pub(crate) max_generated_arity: usize,
}

impl<'a> Run<'a> {
    pub(crate) fn new(
        net: &'a BeliefNetwork,
        ordering: &'a [usize],
        evidence: &Evidence,
        domain: Domain,
    ) -> Result<Self> {
        evidence.validate(net)?;
        let pos = graph_positions(net.len(), ordering)?;
        let buckets = ordering
            .iter()
            .map(|&v| Bucket {
                variable: v,
                factors: Vec::new(),
                hard_value: evidence.value_of(v),
            })
            .collect();
        let mut run = Run {
            net,
            ordering,
            pos,
            buckets,
            scalar: 0.0,
            domain,
            max_generated_arity: 0,
        };
        for cpt in net.cpts() {
            let f = match domain {
                Domain::Log => cpt.map(f64::ln),
                Domain::Linear => cpt.clone(),
            };
            run.route(f)?;
        }
        for l in evidence.likelihoods() {
            let f = match domain {
                Domain::Log => l.log_factor(),
                Domain::Linear => {
                    let (w, scale) = l.scaled_weights();
                    run.scalar += scale;
                    Factor::from_parts(vec![l.variable()], vec![w.len()], w)
                }
            };
            run.route(f)?;
        }
        Ok(run)
    }

    pub(crate) fn len(&self) -> usize {
        self.ordering.len()
    }

    /// Sends `f` to the bucket of its latest variable, folding constants into
    /// the scalar.
    pub(crate) fn route(&mut self, f: Factor) -> Result<()> {
        if f.values().iter().all(|&v| self.domain.is_zero(v)) {
            return Err(Error::ZeroEvidenceProbability);
        }
        match f.scope().iter().map(|&v| self.pos[v]).max() {
            Some(p) => self.buckets[p].factors.push(f),
            None => {
                let v = f.values()[0];
                self.scalar += match self.domain {
                    Domain::Log => v,
                    Domain::Linear => v.ln(),
                };
            }
        }
        Ok(())
    }

    /// Instantiates the observed value in every function of bucket `p`.
    /// Returns false when the bucket carries no evidence.
    pub(crate) fn process_evidence(&mut self, p: usize) -> Result<bool> {
        let Some(value) = self.buckets[p].hard_value else {
            return Ok(false);
        };
        let var = self.ordering[p];
        let restricted = self.buckets[p]
            .factors
            .iter()
            .map(|f| f.restrict(var, value))
            .collect::<Result<Vec<_>>>()?;
        for f in restricted {
            self.route(f)?;
        }
        Ok(true)
    }

    /// Eliminates the bucket variable from the product of the selected
    /// functions of bucket `p` and routes the result. Returns the arity of the
    /// generated function.
    pub(crate) fn eliminate(
        &mut self,
        p: usize,
        members: &[usize],
        reduce: Reduce,
        limits: &Limits,
    ) -> Result<usize> {
        let var = self.ordering[p];
        if members.is_empty() {
            let card = self.net.cardinality(var) as f64;
            self.scalar += match reduce {
                Reduce::Max => 0.0,
                Reduce::Sum | Reduce::LogSumExp => card.ln(),
            };
            return Ok(0);
        }
        let refs: Vec<&Factor> = members
            .iter()
            .map(|&i| &self.buckets[p].factors[i])
            .collect();
        let entries = output_entries(&refs, Some(var))?;
        if entries > limits.max_table_entries as u128 {
            return Err(Error::OutOfMemoryBudget {
                entries,
                budget: limits.max_table_entries,
            });
        }
        let mut h = combine_eliminate(&refs, Some(var), self.domain.combine(), reduce)?;
        self.max_generated_arity = self.max_generated_arity.max(h.arity());
        if self.domain == Domain::Linear && !h.is_scalar() {
            let m = h.values().iter().copied().fold(0.0, f64::max);
            if m > 0.0 {
                h.values_mut().iter_mut().for_each(|v| *v /= m);
                self.scalar += m.ln();
            }
        }
        let arity = h.arity();
        self.route(h)?;
        Ok(arity)
    }

    /// Backward pass over buckets `from..n` in reverse, using `reduce_at(p)`
    /// for non-evidence buckets.
    pub(crate) fn backward(
        &mut self,
        from: usize,
        reduce_at: impl Fn(usize) -> Reduce,
        limits: &Limits,
    ) -> Result<()> {
        for p in (from..self.len()).rev() {
            if self.process_evidence(p)? {
                continue;
            }
            let all: Vec<usize> = (0..self.buckets[p].factors.len()).collect();
            self.eliminate(p, &all, reduce_at(p), limits)?;
        }
        Ok(())
    }

    /// Forward pass over buckets `0..upto`: each variable takes the value
    /// maximizing the sum of its bucket's log tables given earlier choices.
    /// Ties go to the smallest value.
    pub(crate) fn forward(&self, upto: usize, assignment: &mut [usize]) {
        debug_assert_eq!(self.domain, Domain::Log);
        for p in 0..upto {
            let bucket = &self.buckets[p];
            let var = bucket.variable;
            if let Some(v) = bucket.hard_value {
                assignment[var] = v;
                continue;
            }
            let mut best = (f64::NEG_INFINITY, 0);
            for v in 0..self.net.cardinality(var) {
                assignment[var] = v;
                let s: f64 = bucket.factors.iter().map(|f| f.value_at(assignment)).sum();
                if s > best.0 {
                    best = (s, v);
                }
            }
            assignment[var] = best.1;
        }
    }

    pub(crate) fn into_trace(self) -> EliminationTrace {
        EliminationTrace {
            ordering: self.ordering.to_vec(),
            buckets: self.buckets,
            scalar: self.scalar,
            max_generated_arity: self.max_generated_arity,
        }
    }
}

/// Backward max-product pass of elim-mpe, retaining every bucket.
pub fn mpe_backward(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
    limits: &Limits,
) -> Result<EliminationTrace> {
    let mut run = Run::new(net, ordering, evidence, Domain::Log)?;
    run.backward(0, |_| Reduce::Max, limits)?;
    Ok(run.into_trace())
}

pub fn elim_mpe(net: &BeliefNetwork, ordering: &[usize], evidence: &Evidence) -> Result<MpeResult> {
    elim_mpe_limited(net, ordering, evidence, &Limits::default())
}

pub fn elim_mpe_limited(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
    limits: &Limits,
) -> Result<MpeResult> {
    let mut run = Run::new(net, ordering, evidence, Domain::Log)?;
    run.backward(0, |_| Reduce::Max, limits)?;
    if run.scalar == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    let mut assignment = vec![0; net.len()];
    run.forward(run.len(), &mut assignment);
    Ok(MpeResult {
        assignment,
        log_probability: run.scalar,
        max_generated_arity: run.max_generated_arity,
    })
}

/// Posterior of `query`, which must be unobserved and first in `ordering`.
pub fn elim_bel(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
    query: usize,
) -> Result<Vec<f64>> {
    elim_bel_limited(net, ordering, evidence, query, &Limits::default())
}

pub fn elim_bel_limited(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
    query: usize,
    limits: &Limits,
) -> Result<Vec<f64>> {
    if ordering.first() != Some(&query) || evidence.is_observed(query) {
        return Err(Error::InvalidQuery(query));
    }
    let mut run = Run::new(net, ordering, evidence, Domain::Linear)?;
    run.backward(1, |_| Reduce::Sum, limits)?;
    let card = net.cardinality(query);
    let mut dist = vec![1.0; card];
    for f in &run.buckets[0].factors {
        for (x, d) in dist.iter_mut().enumerate() {
            *d *= f.values()[x];
        }
    }
    let total: f64 = dist.iter().sum();
    if total.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)
        || run.scalar == f64::NEG_INFINITY
    {
        return Err(Error::ZeroEvidenceProbability);
    }
    dist.iter_mut().for_each(|d| *d /= total);
    Ok(dist)
}

/// Most probable configuration of `hypothesis` after summing out the rest.
/// The hypothesis variables must occupy a prefix of `ordering`.
pub fn elim_map(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
    hypothesis: &[usize],
) -> Result<MapResult> {
    elim_map_limited(net, ordering, evidence, hypothesis, &Limits::default())
}

pub fn elim_map_limited(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
    hypothesis: &[usize],
    limits: &Limits,
) -> Result<MapResult> {
    let k = hypothesis.len();
    if k > ordering.len() {
        return Err(Error::OrderingViolatesHypothesisPrefix);
    }
    let mut prefix = ordering[..k].to_vec();
    let mut hyp = hypothesis.to_vec();
    prefix.sort_unstable();
    hyp.sort_unstable();
    hyp.dedup();
    if prefix != hyp {
        return Err(Error::OrderingViolatesHypothesisPrefix);
    }
    let mut run = Run::new(net, ordering, evidence, Domain::Log)?;
    run.backward(
        0,
        |p| {
            if p < k {
                Reduce::Max
            } else {
                Reduce::LogSumExp
            }
        },
        limits,
    )?;
    if run.scalar == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    let mut assignment = vec![0; net.len()];
    run.forward(k, &mut assignment);
    Ok(MapResult {
        assignment: hyp.iter().map(|&v| (v, assignment[v])).collect(),
        log_probability: run.scalar,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{
        brute_force_marginal, brute_force_mpe, build_network, joint_probability,
        log_joint_probability, random::random_evidence, random::random_network, Likelihood,
        Variable,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_node() -> BeliefNetwork {
        build_network(
            vec![Variable::binary(0)],
            vec![vec![]],
            vec![vec![0.3, 0.7]],
        )
        .unwrap()
    }

    fn chain() -> BeliefNetwork {
        build_network(
            vec![Variable::binary(0), Variable::binary(1)],
            vec![vec![], vec![0]],
            vec![vec![0.4, 0.6], vec![0.9, 0.1, 0.2, 0.8]],
        )
        .unwrap()
    }

    #[test]
    fn single_node() {
        let net = one_node();
        let r = elim_mpe(&net, &[0], &Evidence::new()).unwrap();
        assert_eq!(r.assignment, vec![1]);
        assert!((r.log_probability - 0.7f64.ln()).abs() < 1e-15);
        let b = elim_bel(&net, &[0], &Evidence::new(), 0).unwrap();
        assert!((b[0] - 0.3).abs() < 1e-15 && (b[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn chain_partition_follows_latest_variable() {
        let net = chain();
        let buckets = partition_buckets(&net, &[0, 1], &Evidence::new()).unwrap();
        assert_eq!(buckets[0].factors.len(), 1);
        assert_eq!(buckets[0].factors[0].scope(), &[0]);
        assert_eq!(buckets[1].factors[0].scope(), &[0, 1]);
    }

    #[test]
    fn observation_is_recorded_on_its_bucket() {
        let net = chain();
        let mut ev = Evidence::new();
        ev.observe(1, 0);
        let buckets = partition_buckets(&net, &[0, 1], &ev).unwrap();
        assert_eq!(buckets[1].hard_value, Some(0));
        assert_eq!(buckets[0].hard_value, None);
    }

    #[test]
    fn likelihood_lands_in_its_variable_bucket() {
        let net = chain();
        let mut ev = Evidence::new();
        ev.add_likelihood(Likelihood::from_weights(0, &[0.5, 0.25]).unwrap());
        let buckets = partition_buckets(&net, &[1, 0], &ev).unwrap();
        // ordering (B, A): both the CPT of B and the likelihood on A go to A
        assert_eq!(buckets[1].factors.len(), 3);
        assert!(buckets[0].factors.is_empty());
    }

    #[test]
    fn ordering_must_be_permutation() {
        let net = chain();
        assert_eq!(
            elim_mpe(&net, &[0], &Evidence::new()),
            Err(Error::OrderingMismatch)
        );
    }

    #[test]
    fn query_must_lead_the_ordering() {
        let net = chain();
        assert_eq!(
            elim_bel(&net, &[0, 1], &Evidence::new(), 1),
            Err(Error::InvalidQuery(1))
        );
    }

    #[test]
    fn impossible_evidence_is_an_error() {
        let net = build_network(
            vec![Variable::binary(0), Variable::binary(1)],
            vec![vec![], vec![0]],
            vec![vec![1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]],
        )
        .unwrap();
        let mut ev = Evidence::new();
        ev.observe(1, 1);
        assert_eq!(
            elim_mpe(&net, &[0, 1], &ev),
            Err(Error::ZeroEvidenceProbability)
        );
        assert_eq!(
            elim_bel(&net, &[0, 1], &ev, 0),
            Err(Error::ZeroEvidenceProbability)
        );
    }

    #[test]
    fn memory_budget_is_enforced() {
        // x3 with parents x0..x2 produces a 3-variable function
        let vars = (0..4).map(Variable::binary).collect();
        let net = build_network(
            vars,
            vec![vec![], vec![], vec![], vec![0, 1, 2]],
            vec![vec![0.5; 2], vec![0.5; 2], vec![0.5; 2], vec![0.5; 16]],
        )
        .unwrap();
        let limits = Limits {
            max_table_entries: 4,
        };
        let err = elim_mpe_limited(&net, &[0, 1, 2, 3], &Evidence::new(), &limits);
        assert!(matches!(
            err,
            Err(Error::OutOfMemoryBudget { entries: 8, .. })
        ));
    }

    #[test]
    fn map_prefix_violation() {
        let net = chain();
        assert_eq!(
            elim_map(&net, &[0, 1], &Evidence::new(), &[1]),
            Err(Error::OrderingViolatesHypothesisPrefix)
        );
    }

    #[test]
    fn map_over_all_variables_is_mpe() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..30 {
            let net = random_network(&mut rng, 7, 3, 2);
            let ev = random_evidence(&mut rng, &net, 0.2, 0.3);
            let order: Vec<usize> = (0..7).collect();
            let (Ok(mpe), Ok(map)) = (
                elim_mpe(&net, &order, &ev),
                elim_map(&net, &order, &ev, &order),
            ) else {
                continue;
            };
            assert!((mpe.log_probability - map.log_probability).abs() < 1e-12);
        }
    }

    #[test]
    fn map_single_variable_is_posterior_argmax() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..30 {
            let net = random_network(&mut rng, 6, 2, 3);
            let ev = random_evidence(&mut rng, &net, 0.0, 0.5);
            let order: Vec<usize> = (0..6).rev().collect();
            let q = order[0];
            let post = elim_bel(&net, &order, &ev, q).unwrap();
            let map = elim_map(&net, &order, &ev, &[q]).unwrap();
            let best = post[map.assignment[&q]];
            assert!(post.iter().all(|&p| p <= best + 1e-12));
        }
    }

    #[test]
    fn oracle_equivalence_and_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..10 {
            for _ in 0..10 {
                let net = random_network(&mut rng, n, 3, 2);
                let ev = random_evidence(&mut rng, &net, 0.2, 0.3);
                let order: Vec<usize> = (0..n).collect();
                match brute_force_mpe(&net, &ev) {
                    Ok(truth) => {
                        let r = elim_mpe(&net, &order, &ev).unwrap();
                        assert!((r.log_probability - truth.log_probability).abs() < 1e-9);
                        let lp = log_joint_probability(&net, &r.assignment, &ev).unwrap();
                        assert!((lp - r.log_probability).abs() < 1e-9);
                        let q = (0..n).find(|v| !ev.is_observed(*v));
                        if let Some(q) = q {
                            let mut o = vec![q];
                            o.extend((0..n).filter(|&v| v != q));
                            let bel = elim_bel(&net, &o, &ev, q).unwrap();
                            let bf = brute_force_marginal(&net, &ev, q).unwrap();
                            for (a, b) in bel.iter().zip(&bf) {
                                assert!((a - b).abs() < 1e-9);
                            }
                        }
                    }
                    Err(Error::ZeroEvidenceProbability) => {
                        assert_eq!(
                            elim_mpe(&net, &order, &ev),
                            Err(Error::ZeroEvidenceProbability)
                        );
                    }
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn value_matches_joint_of_returned_assignment() {
        let net = chain();
        let r = elim_mpe(&net, &[1, 0], &Evidence::new()).unwrap();
        let p = joint_probability(&net, &r.assignment, &Evidence::new()).unwrap();
        assert!((p.ln() - r.log_probability).abs() < 1e-12);
        // 0.6 * 0.8 beats 0.4 * 0.9
        assert_eq!(r.assignment, vec![1, 1]);
    }
}
