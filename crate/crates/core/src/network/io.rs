//! Plain-text network interchange.
//!
//! One record per variable:
//!
//! ```text
//! # id cardinality kind parent_ids... | table_entries...
//! 0 2 info | 0.5 0.5
//! 4 2 parity 0 1 3 | 1 0 0 1 0 1 1 0 0 1 1 0 1 0 0 1
//! ```
//!
//! Entries are written with the shortest decimal that parses back to the
//! same `f64`.

use std::fmt::Write;

use super::{build_network, BeliefNetwork, VarKind, Variable};
use crate::error::{Error, Result};

pub fn write_network(net: &BeliefNetwork) -> String {
    let mut out = String::from("# id cardinality kind parent_ids... | table_entries...\n");
    for v in net.variables() {
        write!(out, "{} {} {}", v.id, v.cardinality, v.kind.as_str()).unwrap();
        for p in net.parents(v.id) {
            write!(out, " {p}").unwrap();
        }
        out.push_str(" |");
        for x in net.cpt(v.id).values() {
            write!(out, " {x:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn read_network(text: &str) -> Result<BeliefNetwork> {
    let mut records: Vec<(usize, Variable, Vec<usize>, Vec<f64>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, table) = line
            .split_once('|')
            .ok_or_else(|| parse_err(lineno, "missing `|` between parents and table"))?;
        let mut head = head.split_whitespace();
        let mut next_int = |what: &str| -> Result<usize> {
            head.next()
                .ok_or_else(|| parse_err(lineno, format!("missing {what}")))?
                .parse()
                .map_err(|e| parse_err(lineno, format!("bad {what}: {e}")))
        };
        let id = next_int("id")?;
        let card = next_int("cardinality")?;
        let kind: VarKind = head
            .next()
            .ok_or_else(|| parse_err(lineno, "missing kind"))?
            .parse()
            .map_err(|e: String| parse_err(lineno, e))?;
        let parents = head
            .map(|t| {
                t.parse()
                    .map_err(|e| parse_err(lineno, format!("bad parent id `{t}`: {e}")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let entries = table
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|e| parse_err(lineno, format!("bad entry `{t}`: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        records.push((lineno, Variable::new(id, card, kind), parents, entries));
    }
    records.sort_by_key(|r| r.1.id);
    for (i, r) in records.iter().enumerate() {
        if r.1.id != i {
            return Err(parse_err(
                r.0,
                format!("variable ids must be 0..n, found {}", r.1.id),
            ));
        }
    }
    let (vars, parents, tables) = records.into_iter().fold(
        (Vec::new(), Vec::new(), Vec::new()),
        |(mut v, mut p, mut t), (_, var, ps, tab)| {
            v.push(var);
            p.push(ps);
            t.push(tab);
            (v, p, t)
        },
    );
    build_network(vars, parents, tables)
}
