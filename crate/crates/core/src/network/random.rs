//! Random networks and evidence for property tests and benchmarks.

use rand::seq::index::sample;
use rand::Rng;

use super::{build_network, BeliefNetwork, Evidence, Likelihood, VarKind, Variable};

fn random_cpt(rng: &mut impl Rng, rows: usize, card: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(rows * card);
    for _ in 0..rows {
        // occasional zeros keep determinism-like entries in the corpus
        let mut row: Vec<f64> = (0..card)
            .map(|_| {
                if rng.random_bool(0.05) {
                    0.0
                } else {
                    rng.random_range(0.01..1.0)
                }
            })
            .collect();
        if row.iter().all(|&p| p == 0.0) {
            row[0] = 1.0;
        }
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= s);
        table.extend(row);
    }
    table
}

fn assemble(rng: &mut impl Rng, cards: Vec<usize>, parents: Vec<Vec<usize>>) -> BeliefNetwork {
    let tables = parents
        .iter()
        .enumerate()
        .map(|(i, ps)| {
            let rows: usize = ps.iter().map(|&p| cards[p]).product();
            random_cpt(rng, rows, cards[i])
        })
        .collect();
    let vars = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable::new(i, c, VarKind::Generic))
        .collect();
    build_network(vars, parents, tables).expect("generated network is valid")
}

/// DAG over `n` variables where each variable draws up to `max_parents`
/// parents among lower ids. Cardinalities are drawn from `2..=max_card`.
pub fn random_network(
    rng: &mut impl Rng,
    n: usize,
    max_parents: usize,
    max_card: usize,
) -> BeliefNetwork {
    let cards: Vec<usize> = (0..n)
        .map(|_| rng.random_range(2..=max_card.max(2)))
        .collect();
    let parents = (0..n)
        .map(|i| {
            let k = rng.random_range(0..=max_parents.min(i));
            let mut ps = sample(rng, i.max(1), k).into_vec();
            ps.sort_unstable();
            ps
        })
        .collect();
    assemble(rng, cards, parents)
}

/// Random polytree: a random spanning tree over `n` nodes with each edge
/// oriented by a coin flip.
pub fn random_polytree(rng: &mut impl Rng, n: usize, max_card: usize) -> BeliefNetwork {
    let cards: Vec<usize> = (0..n)
        .map(|_| rng.random_range(2..=max_card.max(2)))
        .collect();
    let mut parents = vec![Vec::new(); n];
    for i in 1..n {
        let j = rng.random_range(0..i);
        if rng.random_bool(0.5) {
            parents[i].push(j);
        } else {
            parents[j].push(i);
        }
    }
    assemble(rng, cards, parents)
}

/// Observes each variable with probability `p_hard`, and attaches a random
/// likelihood to each remaining variable with probability `p_soft`.
pub fn random_evidence(
    rng: &mut impl Rng,
    net: &BeliefNetwork,
    p_hard: f64,
    p_soft: f64,
) -> Evidence {
    let mut ev = Evidence::new();
    for v in 0..net.len() {
        let card = net.cardinality(v);
        if rng.random_bool(p_hard) {
            ev.observe(v, rng.random_range(0..card));
        } else if rng.random_bool(p_soft) {
            let w: Vec<f64> = (0..card).map(|_| rng.random_range(0.05..1.0)).collect();
            ev.add_likelihood(Likelihood::from_weights(v, &w).expect("positive weights"));
        }
    }
    ev
}
