//! Iterative belief propagation.
//!
//! Pearl's polytree λ/π updates applied to an arbitrary network for a fixed
//! number of sweeps. Nodes are activated one at a time along a schedule and
//! read whatever messages their neighbours hold at that moment. Hard and soft
//! evidence both enter as a fixed local λ vector on the node.

use crate::error::{Error, Result};
use crate::network::{BeliefNetwork, Evidence, VarKind};

/// Activation order for one sweep.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    order: Vec<usize>,
}

impl Schedule {
    pub fn new(net: &BeliefNetwork, order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; net.len()];
        for &v in &order {
            match seen.get_mut(v) {
                None => return Err(Error::UnknownVariable(v)),
                Some(true) => return Err(Error::DuplicateVariable(v)),
                Some(s) => *s = true,
            }
        }
        Ok(Schedule { order })
    }

    pub fn topological(net: &BeliefNetwork) -> Self {
        Schedule {
            order: net.topological_order().to_vec(),
        }
    }

    /// Information bits, then parity bits, then anything else, each group by id.
    pub fn coding(net: &BeliefNetwork) -> Self {
        let mut order = net.ids_of_kind(VarKind::InformationBit);
        order.extend(net.ids_of_kind(VarKind::ParityBit));
        order.extend(net.ids_of_kind(VarKind::Generic));
        Schedule { order }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }
}

/// Normalized beliefs, one row per variable.
#[derive(Clone, Debug, PartialEq)]
pub struct BeliefTable {
    rows: Vec<Vec<f64>>,
}

impl BeliefTable {
    pub fn belief(&self, var: usize) -> &[f64] {
        &self.rows[var]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Most believed value; ties go to the smallest.
    pub fn argmax(&self, var: usize) -> usize {
        argmax(&self.rows[var])
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct MessageStore {
    /// `lambda[x][i]`: message from `x` to its `i`-th parent.
    lambda: Vec<Vec<Vec<f64>>>,
    /// `pi[x][i]`: message from the `i`-th parent of `x` to `x`.
    pi: Vec<Vec<Vec<f64>>>,
    /// Evidence contribution to λ_x: an indicator, a likelihood, or ones.
    local: Vec<Vec<f64>>,
    node_lambda: Vec<Vec<f64>>,
    node_pi: Vec<Vec<f64>>,
}

impl MessageStore {
    /// λ message sent by `child` to `parent`, if that edge exists.
    pub fn lambda_message(
        &self,
        net: &BeliefNetwork,
        child: usize,
        parent: usize,
    ) -> Option<&[f64]> {
        let i = net.parents(child).iter().position(|&p| p == parent)?;
        Some(&self.lambda[child][i])
    }

    /// π message sent by `parent` to `child`, if that edge exists.
    pub fn pi_message(&self, net: &BeliefNetwork, parent: usize, child: usize) -> Option<&[f64]> {
        let i = net.parents(child).iter().position(|&p| p == parent)?;
        Some(&self.pi[child][i])
    }

    pub fn node_lambda(&self, var: usize) -> &[f64] {
        &self.node_lambda[var]
    }

    pub fn node_pi(&self, var: usize) -> &[f64] {
        &self.node_pi[var]
    }
}

fn normalize(v: &mut [f64], node: usize) -> Result<()> {
    let total: f64 = v.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(Error::NumericalCollapse(node));
    }
    v.iter_mut().for_each(|x| *x /= total);
    Ok(())
}

pub fn init_messages(net: &BeliefNetwork, evidence: &Evidence) -> Result<MessageStore> {
    evidence.validate(net)?;
    let ones = |v: usize| vec![1.0; net.cardinality(v)];
    let mut local: Vec<Vec<f64>> = (0..net.len()).map(ones).collect();
    for (&v, &val) in evidence.assignments() {
        local[v].iter_mut().enumerate().for_each(|(k, x)| {
            *x = if k == val { 1.0 } else { 0.0 };
        });
    }
    for l in evidence.likelihoods() {
        let (w, _) = l.scaled_weights();
        for (x, w) in local[l.variable()].iter_mut().zip(w) {
            *x *= w;
        }
    }
    let node_pi = (0..net.len())
        .map(|v| {
            if net.parents(v).is_empty() {
                net.cpt(v).values().to_vec()
            } else {
                ones(v)
            }
        })
        .collect();
    let per_edge =
        |x: usize| -> Vec<Vec<f64>> { net.parents(x).iter().map(|&u| ones(u)).collect() };
    Ok(MessageStore {
        lambda: (0..net.len()).map(per_edge).collect(),
        pi: (0..net.len()).map(per_edge).collect(),
        node_lambda: local.clone(),
        local,
        node_pi,
    })
}

/// Walks every entry of `x`'s CPT, yielding the parent values and the child
/// value for each flat index.
fn for_each_row(net: &BeliefNetwork, x: usize, mut f: impl FnMut(&[usize], usize, f64)) {
    let parents = net.parents(x);
    let card = net.cardinality(x);
    let mut u = vec![0usize; parents.len()];
    for (idx, &p) in net.cpt(x).values().iter().enumerate() {
        let xv = idx % card;
        f(&u, xv, p);
        if xv + 1 == card {
            for k in (0..u.len()).rev() {
                u[k] += 1;
                if u[k] < net.cardinality(parents[k]) {
                    break;
                }
                u[k] = 0;
            }
        }
    }
}

fn compute_pi(net: &BeliefNetwork, store: &MessageStore, x: usize) -> Result<Vec<f64>> {
    if net.parents(x).is_empty() {
        return Ok(net.cpt(x).values().to_vec());
    }
    let msgs = &store.pi[x];
    let mut pi = vec![0.0; net.cardinality(x)];
    for_each_row(net, x, |u, xv, p| {
        if p != 0.0 {
            let w: f64 = u.iter().zip(msgs).map(|(&uk, m)| m[uk]).product();
            pi[xv] += p * w;
        }
    });
    normalize(&mut pi, x)?;
    Ok(pi)
}

/// λ_x without the message from `skip`, if given.
fn lambda_excluding(
    net: &BeliefNetwork,
    store: &MessageStore,
    x: usize,
    skip: Option<usize>,
) -> Vec<f64> {
    let mut lam = store.local[x].clone();
    for &y in net.children(x) {
        if Some(y) == skip {
            continue;
        }
        let i = net
            .parents(y)
            .iter()
            .position(|&p| p == x)
            .expect("child lists its parent");
        for (l, m) in lam.iter_mut().zip(&store.lambda[y][i]) {
            *l *= m;
        }
    }
    lam
}

fn activate(net: &BeliefNetwork, store: &mut MessageStore, x: usize) -> Result<()> {
    let pi = compute_pi(net, store, x)?;
    let lam = lambda_excluding(net, store, x, None);

    let parents = net.parents(x);
    let mut out: Vec<Vec<f64>> = parents
        .iter()
        .map(|&u| vec![0.0; net.cardinality(u)])
        .collect();
    let msgs = &store.pi[x];
    for_each_row(net, x, |u, xv, p| {
        let w = p * lam[xv];
        if w == 0.0 {
            return;
        }
        for i in 0..u.len() {
            let others: f64 = u
                .iter()
                .zip(msgs)
                .enumerate()
                .filter(|&(k, _)| k != i)
                .map(|(_, (&uk, m))| m[uk])
                .product();
            out[i][u[i]] += w * others;
        }
    });
    for (i, m) in out.iter_mut().enumerate() {
        normalize(m, x)?;
        store.lambda[x][i] = std::mem::take(m);
    }

    for &y in net.children(x) {
        let mut m = lambda_excluding(net, store, x, Some(y));
        m.iter_mut().zip(&pi).for_each(|(a, b)| *a *= b);
        normalize(&mut m, x)?;
        let i = net
            .parents(y)
            .iter()
            .position(|&p| p == x)
            .expect("child lists its parent");
        store.pi[y][i] = m;
    }

    let mut lam = lam;
    normalize(&mut lam, x)?;
    store.node_lambda[x] = lam;
    store.node_pi[x] = pi;
    Ok(())
}

/// One sweep along the schedule, updating messages in place.
pub fn propagate_iteration(
    net: &BeliefNetwork,
    store: &mut MessageStore,
    schedule: &Schedule,
) -> Result<()> {
    for &x in schedule.order() {
        activate(net, store, x)?;
    }
    Ok(())
}

/// `BEL(x) = α λ_x π_x` from the messages currently held.
pub fn beliefs(net: &BeliefNetwork, store: &MessageStore) -> Result<BeliefTable> {
    let rows = (0..net.len())
        .map(|x| {
            let pi = compute_pi(net, store, x)?;
            let mut b = lambda_excluding(net, store, x, None);
            b.iter_mut().zip(&pi).for_each(|(a, p)| *a *= p);
            normalize(&mut b, x)?;
            Ok(b)
        })
        .collect::<Result<_>>()?;
    Ok(BeliefTable { rows })
}

pub fn run_ibp(
    net: &BeliefNetwork,
    evidence: &Evidence,
    iterations: usize,
    schedule: &Schedule,
) -> Result<BeliefTable> {
    if iterations == 0 {
        return Err(Error::InvalidParams(
            "IBP needs at least one iteration".into(),
        ));
    }
    let mut store = init_messages(net, evidence)?;
    for _ in 0..iterations {
        propagate_iteration(net, &mut store, schedule)?;
    }
    beliefs(net, &store)
}
