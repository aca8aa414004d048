//! Dense factor tables and the two kernels every inference routine is built
//! from: pointwise combination over the union scope, and elimination of one
//! variable by max or sum.
//!
//! Tables are row-major in scope order, so the last scope variable varies
//! fastest. A CPT with scope `(parents..., child)` therefore stores each
//! conditional distribution contiguously.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Factor {
    scope: Vec<usize>,
    cards: Vec<usize>,
    values: Vec<f64>,
}

/// How entries of several factors are joined at a common assignment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combine {
    /// Multiply linear-domain entries.
    Product,
    /// Add log-domain entries.
    LogSum,
}

/// How a variable is removed from a table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Max,
    Sum,
    /// Sum of log-domain entries, `ln Σ exp(v)`.
    LogSumExp,
}

impl Combine {
    fn identity(self) -> f64 {
        match self {
            Combine::Product => 1.0,
            Combine::LogSum => 0.0,
        }
    }

    #[inline]
    fn apply(self, acc: f64, v: f64) -> f64 {
        match self {
            Combine::Product => acc * v,
            Combine::LogSum => acc + v,
        }
    }
}

impl Reduce {
    fn reduce(self, vals: &[f64]) -> f64 {
        match self {
            Reduce::Max => vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Reduce::Sum => vals.iter().sum(),
            Reduce::LogSumExp => log_sum_exp(vals),
        }
    }
}

pub(crate) fn log_sum_exp(vals: &[f64]) -> f64 {
    let m = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + vals.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

impl Factor {
    /// Validated constructor: distinct scope, cardinalities ≥ 1, table of the
    /// right length, entries nonnegative and finite.
    pub fn new(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if scope.len() != cards.len() {
            return Err(Error::LengthMismatch {
                expected: scope.len(),
                actual: cards.len(),
            });
        }
        for (i, v) in scope.iter().enumerate() {
            if scope[..i].contains(v) {
                return Err(Error::DuplicateVariable(*v));
            }
            if cards[i] == 0 {
                return Err(Error::InvalidCardinality {
                    variable: *v,
                    cardinality: 0,
                });
            }
        }
        let expected: usize = cards.iter().product();
        if values.len() != expected {
            return Err(Error::TableSizeMismatch {
                variable: scope.last().copied().unwrap_or(0),
                expected,
                actual: values.len(),
            });
        }
        if let Some(&bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::NegativeProbability { value: bad });
        }
        Ok(Factor {
            scope,
            cards,
            values,
        })
    }

    /// Unchecked constructor for log-domain and intermediate tables.
    pub(crate) fn from_parts(scope: Vec<usize>, cards: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), cards.iter().product::<usize>());
        Factor {
            scope,
            cards,
            values,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Factor::from_parts(Vec::new(), Vec::new(), vec![value])
    }

    pub fn scope(&self) -> &[usize] {
        &self.scope
    }

    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn arity(&self) -> usize {
        self.scope.len()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.scope.is_empty()
    }

    pub fn contains(&self, var: usize) -> bool {
        self.scope.contains(&var)
    }

    pub fn card_of(&self, var: usize) -> Option<usize> {
        self.scope
            .iter()
            .position(|&v| v == var)
            .map(|i| self.cards[i])
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.scope.len()];
        for i in (0..self.scope.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * self.cards[i + 1];
        }
        strides
    }

    /// Table index of the entry selected by `assignment`, which is indexed by
    /// variable id and must cover the scope.
    pub fn index_of(&self, assignment: &[usize]) -> usize {
        let mut idx = 0;
        for (v, c) in self.scope.iter().zip(&self.cards) {
            idx = idx * c + assignment[*v];
        }
        idx
    }

    pub fn value_at(&self, assignment: &[usize]) -> f64 {
        self.values[self.index_of(assignment)]
    }

    /// Applies `f` to every entry; the result skips validation.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Factor {
        Factor::from_parts(
            self.scope.clone(),
            self.cards.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Fixes `var = value`, dropping `var` from the scope.
    pub fn restrict(&self, var: usize, value: usize) -> Result<Factor> {
        let pos = self
            .scope
            .iter()
            .position(|&v| v == var)
            .ok_or(Error::VariableNotInScope(var))?;
        let card = self.cards[pos];
        if value >= card {
            return Err(Error::ValueOutOfRange {
                variable: var,
                value,
            });
        }
        let inner: usize = self.cards[pos + 1..].iter().product();
        let outer: usize = self.cards[..pos].iter().product();
        let mut values = Vec::with_capacity(outer * inner);
        for o in 0..outer {
            let base = (o * card + value) * inner;
            values.extend_from_slice(&self.values[base..base + inner]);
        }
        let mut scope = self.scope.clone();
        let mut cards = self.cards.clone();
        scope.remove(pos);
        cards.remove(pos);
        Ok(Factor::from_parts(scope, cards, values))
    }

    /// Removes `var` by max or sum. Eliminating the last variable yields a
    /// scalar factor.
    pub fn eliminate(&self, var: usize, op: Reduce) -> Result<Factor> {
        if !self.contains(var) {
            return Err(Error::VariableNotInScope(var));
        }
        combine_eliminate(&[self], Some(var), Combine::Product, op)
    }

    /// Sum of all entries.
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Divides every entry by the table sum. Returns the sum.
    pub fn normalize(&mut self) -> f64 {
        let s = self.total();
        if s > 0.0 {
            for v in &mut self.values {
                *v /= s;
            }
        }
        s
    }
}

/// Product of linear-domain factors. The empty product is the scalar 1.
pub fn factor_product(factors: &[Factor]) -> Result<Factor> {
    let refs: Vec<&Factor> = factors.iter().collect();
    combine_eliminate(&refs, None, Combine::Product, Reduce::Sum)
}

/// Union of scopes in order of first appearance with checked cardinalities.
fn union_scope(factors: &[&Factor]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut scope: Vec<usize> = Vec::new();
    let mut cards: Vec<usize> = Vec::new();
    for f in factors {
        for (&v, &c) in f.scope.iter().zip(&f.cards) {
            match scope.iter().position(|&s| s == v) {
                Some(i) if cards[i] != c => return Err(Error::CardinalityMismatch(v)),
                Some(_) => {}
                None => {
                    scope.push(v);
                    cards.push(c);
                }
            }
        }
    }
    Ok((scope, cards))
}

/// Number of entries of the table over the union of the scopes minus `elim`.
pub(crate) fn output_entries(factors: &[&Factor], elim: Option<usize>) -> Result<u128> {
    let (scope, cards) = union_scope(factors)?;
    Ok(scope
        .iter()
        .zip(&cards)
        .filter(|(v, _)| Some(**v) != elim)
        .map(|(_, &c)| c as u128)
        .product())
}

/// Combines `factors` pointwise over their union scope and, when `elim` is
/// given, reduces that variable out in the same pass so the full product is
/// never materialized.
pub(crate) fn combine_eliminate(
    factors: &[&Factor],
    elim: Option<usize>,
    combine: Combine,
    reduce: Reduce,
) -> Result<Factor> {
    let (union, union_cards) = union_scope(factors)?;
    let (elim_card, out_scope, out_cards) = match elim {
        Some(e) => {
            let pos = union
                .iter()
                .position(|&v| v == e)
                .ok_or(Error::VariableNotInScope(e))?;
            let mut s = union.clone();
            let mut c = union_cards.clone();
            s.remove(pos);
            let ec = c.remove(pos);
            (ec, s, c)
        }
        None => (1, union, union_cards),
    };

    let nf = factors.len();
    let nout = out_scope.len();
    let all_strides: Vec<Vec<usize>> = factors.iter().map(|f| f.strides()).collect();
    let stride_in = |fi: usize, var: usize| -> usize {
        factors[fi]
            .scope
            .iter()
            .position(|&v| v == var)
            .map_or(0, |p| all_strides[fi][p])
    };
    // out_strides[j * nf + f]: stride of output variable j inside factor f.
    let mut out_strides = vec![0usize; nout * nf];
    for j in 0..nout {
        for fi in 0..nf {
            out_strides[j * nf + fi] = stride_in(fi, out_scope[j]);
        }
    }
    let elim_strides: Vec<usize> = (0..nf)
        .map(|fi| elim.map_or(0, |e| stride_in(fi, e)))
        .collect();

    let out_len: usize = out_cards.iter().product();
    let mut out = Vec::with_capacity(out_len);
    let mut idx = vec![0usize; nf];
    let mut counter = vec![0usize; nout];
    let mut buf = vec![0.0; elim_card];
    for _ in 0..out_len {
        for (v, slot) in buf.iter_mut().enumerate() {
            let mut acc = combine.identity();
            for fi in 0..nf {
                acc = combine.apply(acc, factors[fi].values[idx[fi] + v * elim_strides[fi]]);
            }
            *slot = acc;
        }
        out.push(if elim.is_some() {
            reduce.reduce(&buf)
        } else {
            buf[0]
        });
        // odometer, last variable fastest
        for j in (0..nout).rev() {
            counter[j] += 1;
            let strides = &out_strides[j * nf..(j + 1) * nf];
            if counter[j] < out_cards[j] {
                for fi in 0..nf {
                    idx[fi] += strides[fi];
                }
                break;
            }
            counter[j] = 0;
            for fi in 0..nf {
                idx[fi] -= strides[fi] * (out_cards[j] - 1);
            }
        }
    }
    Ok(Factor::from_parts(out_scope, out_cards, out))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(scope: &[usize], cards: &[usize], values: &[f64]) -> Factor {
        Factor::new(scope.to_vec(), cards.to_vec(), values.to_vec()).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn product_with_identity_factor() {
        let p = factor_product(&[f(&[0], &[2], &[0.5, 0.5]), f(&[0], &[2], &[1.0, 1.0])]).unwrap();
        assert_eq!(p.scope(), &[0]);
        assert_close(p.values(), &[0.5, 0.5], 0.0);
    }

    #[test]
    fn product_of_disjoint_scopes() {
        let p = factor_product(&[f(&[0], &[2], &[0.2, 0.8]), f(&[1], &[2], &[0.3, 0.7])]).unwrap();
        assert_eq!(p.scope(), &[0, 1]);
        assert_close(p.values(), &[0.06, 0.14, 0.24, 0.56], 1e-15);
    }

    #[test]
    fn empty_product_is_scalar_one() {
        let p = factor_product(&[]).unwrap();
        assert!(p.is_scalar());
        assert_eq!(p.values(), &[1.0]);
    }

    #[test]
    fn product_rejects_inconsistent_cardinality() {
        let err = factor_product(&[f(&[0], &[2], &[0.5, 0.5]), f(&[0], &[3], &[1.0; 3])]);
        assert_eq!(err, Err(Error::CardinalityMismatch(0)));
    }

    #[test]
    fn eliminate_to_scalar() {
        let a = f(&[0], &[2], &[0.2, 0.8]);
        assert_eq!(a.eliminate(0, Reduce::Max).unwrap().values(), &[0.8]);
        assert!((a.eliminate(0, Reduce::Sum).unwrap().values()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn max_out_first_variable() {
        let ab = f(&[0, 1], &[2, 2], &[0.06, 0.14, 0.24, 0.56]);
        let g = ab.eliminate(0, Reduce::Max).unwrap();
        assert_eq!(g.scope(), &[1]);
        assert_close(g.values(), &[0.24, 0.56], 0.0);
    }

    #[test]
    fn eliminate_missing_variable() {
        let a = f(&[0], &[2], &[0.2, 0.8]);
        assert_eq!(
            a.eliminate(3, Reduce::Sum),
            Err(Error::VariableNotInScope(3))
        );
    }

    #[test]
    fn restrict_middle_variable() {
        // scope (A,B,C) with cards (2,3,2), entries 0..12
        let t = f(
            &[0, 1, 2],
            &[2, 3, 2],
            &(0..12).map(f64::from).collect::<Vec<_>>(),
        );
        let r = t.restrict(1, 2).unwrap();
        assert_eq!(r.scope(), &[0, 2]);
        assert_eq!(r.values(), &[4.0, 5.0, 10.0, 11.0]);
    }

    #[test]
    fn log_domain_kernels_match_linear() {
        let a = f(&[0, 1], &[2, 3], &[0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = f(&[1, 2], &[3, 2], &[0.9, 0.1, 0.8, 0.2, 0.7, 0.3]);
        let lin = combine_eliminate(&[&a, &b], Some(1), Combine::Product, Reduce::Sum).unwrap();
        let (la, lb) = (a.map(f64::ln), b.map(f64::ln));
        let log =
            combine_eliminate(&[&la, &lb], Some(1), Combine::LogSum, Reduce::LogSumExp).unwrap();
        assert_eq!(lin.scope(), log.scope());
        let back: Vec<f64> = log.values().iter().map(|v| v.exp()).collect();
        assert_close(lin.values(), &back, 1e-14);
    }

    #[test]
    fn rejects_negative_entries() {
        assert!(matches!(
            Factor::new(vec![0], vec![2], vec![-0.1, 1.1]),
            Err(Error::NegativeProbability { .. })
        ));
    }
}
