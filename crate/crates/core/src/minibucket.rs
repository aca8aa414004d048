//! The mini-bucket approximation `approx-mpe(i)`.
//!
//! Each bucket is split into mini-buckets whose combined scope has at most
//! `max(i, largest arity in the bucket)` variables, counting the bucket
//! variable. Maximizing each mini-bucket separately bounds the exact
//! max-product from above; the greedy forward pass then yields an assignment
//! whose probability bounds it from below.

use crate::elimination::{Domain, Limits, Run};
use crate::error::{Error, Result};
use crate::network::{log_joint_probability, BeliefNetwork, Evidence, Factor, Reduce};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MiniBucketPartition {
    /// Indices into the bucket's function list, one vector per mini-bucket.
    pub groups: Vec<Vec<usize>>,
    pub bound: usize,
    /// `max(bound, largest input arity)`.
    pub effective_bound: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxResult {
    /// Full assignment; observed variables carry their evidence value.
    pub assignment: Vec<usize>,
    /// `ln P(assignment, e)`.
    pub lower_log: f64,
    /// Log of the mini-bucket bound on `max_x P(x, e)`.
    pub upper_log: f64,
    pub i: usize,
}

/// Greedy first-fit partition of functions with the given scopes. Functions
/// are visited by decreasing arity, ties broken by the sorted scope, and each
/// joins the first mini-bucket whose union scope stays within the effective
/// bound; otherwise it opens a new one.
pub fn i_partition(scopes: &[&[usize]], i: usize) -> MiniBucketPartition {
    let effective_bound = scopes.iter().map(|s| s.len()).fold(i, usize::max);
    let mut order: Vec<usize> = (0..scopes.len()).collect();
    let sorted: Vec<Vec<usize>> = scopes
        .iter()
        .map(|s| {
            let mut v = s.to_vec();
            v.sort_unstable();
            v
        })
        .collect();
    order.sort_by(|&a, &b| {
        sorted[b]
            .len()
            .cmp(&sorted[a].len())
            .then_with(|| sorted[a].cmp(&sorted[b]))
    });
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut unions: Vec<Vec<usize>> = Vec::new();
    for idx in order {
        let fits = unions.iter().position(|u| {
            let extra = sorted[idx].iter().filter(|v| !u.contains(v)).count();
            u.len() + extra <= effective_bound
        });
        match fits {
            Some(g) => {
                groups[g].push(idx);
                for &v in &sorted[idx] {
                    if !unions[g].contains(&v) {
                        unions[g].push(v);
                    }
                }
            }
            None => {
                groups.push(vec![idx]);
                unions.push(sorted[idx].clone());
            }
        }
    }
    MiniBucketPartition {
        groups,
        bound: i,
        effective_bound,
    }
}

pub fn approx_mpe(
    net: &BeliefNetwork,
    ordering: &[usize],
    evidence: &Evidence,
    i: usize,
) -> Result<ApproxResult> {
    if i == 0 {
        return Err(Error::InvalidParams(
            "mini-bucket bound must be at least 1".into(),
        ));
    }
    let mut run = Run::new(net, ordering, evidence, Domain::Log)?;
    let unlimited = Limits {
        max_table_entries: usize::MAX,
    };
    for p in (0..run.len()).rev() {
        if run.process_evidence(p)? {
            continue;
        }
        let partition = {
            let scopes: Vec<&[usize]> = run.buckets[p].factors.iter().map(Factor::scope).collect();
            i_partition(&scopes, i)
        };
        for group in &partition.groups {
            let arity = run.eliminate(p, group, Reduce::Max, &unlimited)?;
            assert!(
                arity < partition.effective_bound,
                "mini-bucket table exceeds its bound"
            );
        }
    }
    let upper_log = run.scalar;
    if upper_log == f64::NEG_INFINITY {
        return Err(Error::ZeroEvidenceProbability);
    }
    let mut assignment = vec![0; net.len()];
    run.forward(run.len(), &mut assignment);
    let lower_log = log_joint_probability(net, &assignment, evidence)?;
    Ok(ApproxResult {
        assignment,
        lower_log,
        upper_log,
        i,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elimination::elim_mpe;
    use crate::network::random::{random_evidence, random_network};
    use crate::network::{build_network, moral_graph, width_along, Variable};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_fit_groups() {
        const A: usize = 0;
        const B: usize = 1;
        const C: usize = 2;
        const D: usize = 3;
        let scopes: Vec<&[usize]> = vec![&[A, B], &[B, C], &[B, D]];
        let p = i_partition(&scopes, 3);
        assert_eq!(p.groups, vec![vec![0, 1], vec![2]]);
        assert_eq!(p.effective_bound, 3);
    }

    #[test]
    fn coarse_bound_gives_single_group() {
        let scopes: Vec<&[usize]> = vec![&[0, 1], &[1, 2], &[1, 3]];
        assert_eq!(i_partition(&scopes, 4).groups, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn oversized_factor_raises_the_bound() {
        let big: Vec<usize> = (0..8).collect();
        let scopes: Vec<&[usize]> = vec![&big];
        let p = i_partition(&scopes, 1);
        assert_eq!(p.groups, vec![vec![0]]);
        assert_eq!(p.effective_bound, 8);
    }

    #[test]
    fn every_function_in_exactly_one_group() {
        let scopes: Vec<Vec<usize>> = vec![
            vec![5, 1],
            vec![5],
            vec![5, 2, 3],
            vec![5, 4],
            vec![5, 0, 1, 2],
        ];
        let refs: Vec<&[usize]> = scopes.iter().map(Vec::as_slice).collect();
        for i in 1..6 {
            let p = i_partition(&refs, i);
            let mut seen: Vec<usize> = p.groups.concat();
            seen.sort_unstable();
            assert_eq!(seen, (0..5).collect::<Vec<_>>());
            for g in &p.groups {
                let mut u: Vec<usize> = g.iter().flat_map(|&k| scopes[k].clone()).collect();
                u.sort_unstable();
                u.dedup();
                assert!(u.len() <= p.effective_bound);
            }
        }
    }

    #[test]
    fn single_node_is_exact() {
        let net = build_network(
            vec![Variable::binary(0)],
            vec![vec![]],
            vec![vec![0.3, 0.7]],
        )
        .unwrap();
        let r = approx_mpe(&net, &[0], &Evidence::new(), 1).unwrap();
        assert_eq!(r.assignment, vec![1]);
        assert!((r.upper_log - r.lower_log).abs() < 1e-15);
        let exact = elim_mpe(&net, &[0], &Evidence::new()).unwrap();
        assert!((r.upper_log - exact.log_probability).abs() < 1e-15);
    }

    #[test]
    fn zero_bound_rejected() {
        let net = build_network(
            vec![Variable::binary(0)],
            vec![vec![]],
            vec![vec![0.3, 0.7]],
        )
        .unwrap();
        assert!(approx_mpe(&net, &[0], &Evidence::new(), 0).is_err());
    }

    #[test]
    fn brackets_the_exact_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 4..10 {
            for _ in 0..8 {
                let net = random_network(&mut rng, n, 3, 2);
                let ev = random_evidence(&mut rng, &net, 0.15, 0.3);
                let order: Vec<usize> = (0..n).collect();
                let Ok(exact) = elim_mpe(&net, &order, &ev) else {
                    continue;
                };
                let (_, w) = width_along(&moral_graph(&net), &order).unwrap();
                for i in 1..=4 {
                    let r = approx_mpe(&net, &order, &ev, i).unwrap();
                    assert!(r.lower_log <= exact.log_probability + 1e-9);
                    assert!(exact.log_probability <= r.upper_log + 1e-9);
                    if i > w {
                        assert!((r.upper_log - r.lower_log).abs() <= 1e-9);
                    }
                }
            }
        }
    }
}
