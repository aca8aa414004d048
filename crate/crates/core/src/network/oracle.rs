//! Exhaustive-enumeration ground truth for small networks.

use super::{log_joint_probability, BeliefNetwork, Evidence};
use crate::error::{Error, Result};

/// Largest number of completions of the evidence that enumeration accepts.
pub const BRUTE_FORCE_LIMIT: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct BruteForceMpe {
    /// Full assignment, evidence variables included.
    pub assignment: Vec<usize>,
    pub log_probability: f64,
}

impl BruteForceMpe {
    pub fn probability(&self) -> f64 {
        self.log_probability.exp()
    }
}

/// Calls `visit` on every full assignment consistent with the hard evidence,
/// in lexicographic order with variable 0 most significant.
fn for_each_completion(
    net: &BeliefNetwork,
    evidence: &Evidence,
    mut visit: impl FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    evidence.validate(net)?;
    let free: Vec<usize> = (0..net.len())
        .filter(|v| !evidence.is_observed(*v))
        .collect();
    let count: u128 = free.iter().map(|&v| net.cardinality(v) as u128).product();
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLargeForBruteForce(count));
    }
    let mut assignment = vec![0usize; net.len()];
    for (&v, &val) in evidence.assignments() {
        assignment[v] = val;
    }
    loop {
        visit(&assignment)?;
        let mut carried = true;
        for &v in free.iter().rev() {
            assignment[v] += 1;
            if assignment[v] < net.cardinality(v) {
                carried = false;
                break;
            }
            assignment[v] = 0;
        }
        if carried {
            return Ok(());
        }
    }
}

/// Maximizer of the joint over all completions of the evidence; ties keep the
/// lexicographically smallest assignment.
pub fn brute_force_mpe(net: &BeliefNetwork, evidence: &Evidence) -> Result<BruteForceMpe> {
    let mut best: Option<BruteForceMpe> = None;
    for_each_completion(net, evidence, |a| {
        let lp = log_joint_probability(net, a, evidence)?;
        if best.as_ref().is_none_or(|b| lp > b.log_probability) {
            best = Some(BruteForceMpe {
                assignment: a.to_vec(),
                log_probability: lp,
            });
        }
        Ok(())
    })?;
    let best = best.expect("at least one completion");
    if best.log_probability == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    Ok(best)
}

/// Normalized posterior of `var` given the evidence.
pub fn brute_force_marginal(
    net: &BeliefNetwork,
    evidence: &Evidence,
    var: usize,
) -> Result<Vec<f64>> {
    if var >= net.len() {
        return Err(Error::UnknownVariable(var));
    }
    let mut logs: Vec<Vec<f64>> = vec![Vec::new(); net.cardinality(var)];
    for_each_completion(net, evidence, |a| {
        logs[a[var]].push(log_joint_probability(net, a, evidence)?);
        Ok(())
    })?;
    let max = logs
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    let mut dist: Vec<f64> = logs
        .iter()
        .map(|ls| ls.iter().map(|l| (l - max).exp()).sum())
        .collect();
    let total: f64 = dist.iter().sum();
    for p in &mut dist {
        *p /= total;
    }
    Ok(dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, Likelihood, Variable};

    fn one_node() -> BeliefNetwork {
        build_network(
            vec![Variable::binary(0)],
            vec![vec![]],
            vec![vec![0.3, 0.7]],
        )
        .unwrap()
    }

    #[test]
    fn single_node_mpe_and_marginal() {
        let net = one_node();
        let mpe = brute_force_mpe(&net, &Evidence::new()).unwrap();
        assert_eq!(mpe.assignment, vec![1]);
        assert!((mpe.probability() - 0.7).abs() < 1e-15);
        let m = brute_force_marginal(&net, &Evidence::new(), 0).unwrap();
        assert!((m[0] - 0.3).abs() < 1e-15 && (m[1] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn observed_child_tilts_parent() {
        // A uniform, B copies A with probability 0.9
        let net = build_network(
            vec![Variable::binary(0), Variable::binary(1)],
            vec![vec![], vec![0]],
            vec![vec![0.5, 0.5], vec![0.9, 0.1, 0.1, 0.9]],
        )
        .unwrap();
        let mut ev = Evidence::new();
        ev.observe(1, 1);
        let m = brute_force_marginal(&net, &ev, 0).unwrap();
        assert!((m[0] + m[1] - 1.0).abs() < 1e-15);
        assert!((m[1] - 0.9).abs() < 1e-12);
    }

    #[test]
    fn impossible_evidence() {
        let net = build_network(
            vec![Variable::binary(0)],
            vec![vec![]],
            vec![vec![1.0, 0.0]],
        )
        .unwrap();
        let mut ev = Evidence::new();
        ev.observe(0, 1);
        assert_eq!(
            brute_force_marginal(&net, &ev, 0),
            Err(Error::ZeroEvidenceProbability)
        );
        assert_eq!(
            brute_force_mpe(&net, &ev),
            Err(Error::ZeroEvidenceProbability)
        );
    }

    #[test]
    fn soft_evidence_counts() {
        let net = one_node();
        let mut ev = Evidence::new();
        ev.add_likelihood(Likelihood::from_weights(0, &[0.9, 0.1]).unwrap());
        let mpe = brute_force_mpe(&net, &ev).unwrap();
        assert_eq!(mpe.assignment, vec![0]);
        assert!((mpe.probability() - 0.27).abs() < 1e-15);
    }

    #[test]
    fn size_guard() {
        let n = 25;
        let vars = (0..n).map(Variable::binary).collect();
        let net = build_network(vars, vec![vec![]; n], vec![vec![0.5, 0.5]; n]).unwrap();
        assert!(matches!(
            brute_force_mpe(&net, &Evidence::new()),
            Err(Error::TooLargeForBruteForce(_))
        ));
    }
}
