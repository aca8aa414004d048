//! Systematic linear block codes, the AWGN channel, and the translation of a
//! code plus a channel observation into a decoding instance.
//!
//! Variable ids in a code network are `u_0..u_{K-1}` = `0..K` followed by the
//! parity bits `x_0..x_{N-K-1}` = `K..N`. Channel outputs are not network
//! nodes; each `y_j` becomes a likelihood vector on bit `j`.
//!
//! The (15,11) Hamming generator used here takes as parity columns of the
//! information rows all 4-bit patterns of weight at least two, ordered by
//! decreasing weight:
//!
//! ```text
//! u0 1111   u1 1110   u2 1101   u3 1011   u4 0111
//! u5 1100   u6 0011   u7 1010   u8 0101   u9 1001   u10 0110
//! ```
//!
//! where bit `j` (left to right) says whether `u_i` feeds parity bit `x_j`.

use std::fmt::Write;

use rand::Rng;
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::network::{build_network, BeliefNetwork, Evidence, Likelihood, VarKind, Variable};

/// K×N generator over GF(2) whose first K columns are the identity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorMatrix {
    k: usize,
    n: usize,
    rows: Vec<Vec<u8>>,
}

const HAMMING_7_4: [[u8; 7]; 4] = [
    [1, 0, 0, 0, 1, 1, 0],
    [0, 1, 0, 0, 1, 0, 1],
    [0, 0, 1, 0, 0, 1, 1],
    [0, 0, 0, 1, 1, 1, 1],
];

const HAMMING_15_11_PARITY: [[u8; 4]; 11] = [
    [1, 1, 1, 1],
    [1, 1, 1, 0],
    [1, 1, 0, 1],
    [1, 0, 1, 1],
    [0, 1, 1, 1],
    [1, 1, 0, 0],
    [0, 0, 1, 1],
    [1, 0, 1, 0],
    [0, 1, 0, 1],
    [1, 0, 0, 1],
    [0, 1, 1, 0],
];

/// Validates a systematic 0/1 generator matrix.
pub fn code_from_generator(rows: Vec<Vec<u8>>) -> Result<GeneratorMatrix> {
    let k = rows.len();
    if k == 0 {
        return Err(Error::InvalidParams("generator has no rows".into()));
    }
    let n = rows[0].len();
    if n < k {
        return Err(Error::NotSystematic);
    }
    for row in &rows {
        if row.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: row.len(),
            });
        }
        if row.iter().any(|&b| b > 1) {
            return Err(Error::InvalidParams("entries must be 0 or 1".into()));
        }
    }
    for (i, row) in rows.iter().enumerate() {
        if (0..k).any(|j| row[j] != u8::from(i == j)) {
            return Err(Error::NotSystematic);
        }
    }
    for j in k..n {
        if rows.iter().all(|r| r[j] == 0) {
            return Err(Error::EmptyParityColumn(j - k));
        }
    }
    Ok(GeneratorMatrix { k, n, rows })
}

fn from_parent_sets(k: usize, parent_sets: &[Vec<usize>]) -> GeneratorMatrix {
    let n = k + parent_sets.len();
    let mut rows = vec![vec![0u8; n]; k];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 1;
    }
    for (j, ps) in parent_sets.iter().enumerate() {
        for &p in ps {
            rows[p][k + j] = 1;
        }
    }
    code_from_generator(rows).expect("parent sets are nonempty")
}

pub fn hamming_7_4() -> GeneratorMatrix {
    code_from_generator(HAMMING_7_4.iter().map(|r| r.to_vec()).collect()).expect("valid")
}

pub fn hamming_15_11() -> GeneratorMatrix {
    let parents: Vec<Vec<usize>> = (0..4)
        .map(|j| {
            (0..11)
                .filter(|&i| HAMMING_15_11_PARITY[i][j] == 1)
                .collect()
        })
        .collect();
    from_parent_sets(11, &parents)
}

/// Rate-1/2 code where parity bit `x_i` has parents `u_{(i+j) mod K}`,
/// `0 ≤ j < P`.
pub fn structured_code(k: usize, p: usize) -> Result<GeneratorMatrix> {
    if k == 0 || p == 0 || p > k {
        return Err(Error::InvalidParams(format!(
            "structured code needs 1 <= P <= K, got K={k} P={p}"
        )));
    }
    let parents: Vec<Vec<usize>> = (0..k)
        .map(|i| (0..p).map(|j| (i + j) % k).collect())
        .collect();
    Ok(from_parent_sets(k, &parents))
}

/// Rate-1/2 code where each parity bit has `P` distinct parents chosen
/// uniformly among the K information bits.
///
/// Parent sets are drawn from ChaCha8 seeded with `seed` through
/// `seed_from_u64`. For each parity bit in turn, a partial Fisher-Yates
/// shuffle of `[0, 1, ..., K-1]` runs for `P` steps, where step `s` swaps
/// position `s` with `s + (next_u64() mod (K - s))`; the first `P` entries are
/// the parents, stored in increasing order.
pub fn random_code(k: usize, p: usize, seed: u64) -> Result<GeneratorMatrix> {
    if k == 0 || p == 0 || p > k {
        return Err(Error::InvalidParams(format!(
            "random code needs 1 <= P <= K, got K={k} P={p}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let parents: Vec<Vec<usize>> = (0..k)
        .map(|_| {
            let mut pool: Vec<usize> = (0..k).collect();
            for s in 0..p {
                let r = (rng.next_u64() % (k - s) as u64) as usize;
                pool.swap(s, s + r);
            }
            let mut chosen = pool[..p].to_vec();
            chosen.sort_unstable();
            chosen
        })
        .collect();
    Ok(from_parent_sets(k, &parents))
}

impl GeneratorMatrix {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Information bits feeding parity bit `j`, in increasing order.
    pub fn parity_parents(&self, j: usize) -> Vec<usize> {
        (0..self.k)
            .filter(|&i| self.rows[i][self.k + j] == 1)
            .collect()
    }

    /// `c = uG` over GF(2).
    pub fn encode(&self, u: &[u8]) -> Result<Vec<u8>> {
        if u.len() != self.k {
            return Err(Error::LengthMismatch {
                expected: self.k,
                actual: u.len(),
            });
        }
        Ok((0..self.n)
            .map(|j| {
                u.iter()
                    .zip(&self.rows)
                    .fold(0u8, |acc, (&ui, row)| acc ^ (ui & row[j]))
            })
            .collect())
    }

    /// Text form: `K N` then K rows of N space-separated bits.
    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.k, self.n);
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let parse_err = |line: usize, message: String| Error::Parse { line, message };
        let (hl, header) = lines
            .next()
            .ok_or_else(|| parse_err(1, "empty generator file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|e| parse_err(hl, format!("bad dimension `{t}`: {e}")))
            })
            .collect::<Result<_>>()?;
        let [k, n] = dims[..] else {
            return Err(parse_err(hl, "header must be `K N`".into()));
        };
        let mut rows = Vec::with_capacity(k);
        for (ln, line) in lines {
            let row: Vec<u8> = line
                .split_whitespace()
                .map(|t| match t {
                    "0" => Ok(0),
                    "1" => Ok(1),
                    _ => Err(parse_err(ln, format!("bad bit `{t}`"))),
                })
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(parse_err(
                    ln,
                    format!("expected {n} bits, got {}", row.len()),
                ));
            }
            rows.push(row);
        }
        if rows.len() != k {
            return Err(Error::LengthMismatch {
                expected: k,
                actual: rows.len(),
            });
        }
        code_from_generator(rows)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CodeKind {
    Hamming74,
    Hamming1511,
    Structured,
    Random,
}

impl CodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CodeKind::Hamming74 => "hamming-7-4",
            CodeKind::Hamming1511 => "hamming-15-11",
            CodeKind::Structured => "structured",
            CodeKind::Random => "random",
        }
    }
}

impl std::str::FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hamming-7-4" => Ok(CodeKind::Hamming74),
            "hamming-15-11" => Ok(CodeKind::Hamming1511),
            "structured" => Ok(CodeKind::Structured),
            "random" => Ok(CodeKind::Random),
            other => Err(Error::InvalidParams(format!("unknown code kind `{other}`"))),
        }
    }
}

/// Parameters identifying a code family member.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CodeSpec {
    pub kind: CodeKind,
    pub k: usize,
    pub n: usize,
    /// Parent-set size; zero for Hamming codes.
    pub p: usize,
    /// Parent-selection seed; used by random codes only.
    pub seed: u64,
}

impl CodeSpec {
    pub fn hamming_7_4() -> Self {
        CodeSpec {
            kind: CodeKind::Hamming74,
            k: 4,
            n: 7,
            p: 0,
            seed: 0,
        }
    }

    pub fn hamming_15_11() -> Self {
        CodeSpec {
            kind: CodeKind::Hamming1511,
            k: 11,
            n: 15,
            p: 0,
            seed: 0,
        }
    }

    pub fn structured(k: usize, p: usize) -> Self {
        CodeSpec {
            kind: CodeKind::Structured,
            k,
            n: 2 * k,
            p,
            seed: 0,
        }
    }

    pub fn random(k: usize, p: usize, seed: u64) -> Self {
        CodeSpec {
            kind: CodeKind::Random,
            k,
            n: 2 * k,
            p,
            seed,
        }
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn generator(&self) -> Result<GeneratorMatrix> {
        match self.kind {
            CodeKind::Hamming74 => Ok(hamming_7_4()),
            CodeKind::Hamming1511 => Ok(hamming_15_11()),
            CodeKind::Structured | CodeKind::Random if self.n != 2 * self.k => Err(
                Error::InvalidParams(format!("only rate 1/2 is supported, got N={}", self.n)),
            ),
            CodeKind::Structured => structured_code(self.k, self.p),
            CodeKind::Random => random_code(self.k, self.p, self.seed),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelModel {
    sigma: f64,
}

impl ChannelModel {
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParams(format!(
                "noise deviation must be positive and finite, got {sigma}"
            )));
        }
        Ok(ChannelModel { sigma })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `y_j = c_j + n_j` with independent `n_j ~ N(0, σ²)`.
    pub fn transmit(&self, c: &[u8], rng: &mut impl Rng) -> Vec<f64> {
        let noise = Normal::new(0.0, self.sigma).expect("valid sigma");
        c.iter()
            .map(|&b| f64::from(b) + noise.sample(rng))
            .collect()
    }

    /// Unnormalized log density of `y` given each bit value,
    /// `-(y - c)² / 2σ²` for `c = 0, 1`.
    pub fn log_likelihoods(&self, y: f64) -> [f64; 2] {
        let s2 = 2.0 * self.sigma * self.sigma;
        [-(y * y) / s2, -((y - 1.0) * (y - 1.0)) / s2]
    }
}

pub fn transmit(c: &[u8], channel: &ChannelModel, rng: &mut impl Rng) -> Vec<f64> {
    channel.transmit(c, rng)
}

/// One channel use.
#[derive(Clone, Debug, PartialEq)]
pub struct Transmission {
    pub u: Vec<u8>,
    pub c: Vec<u8>,
    pub y: Vec<f64>,
}

impl Transmission {
    /// Draws uniform information bits, encodes and transmits them.
    pub fn sample(g: &GeneratorMatrix, channel: &ChannelModel, rng: &mut impl Rng) -> Self {
        let u: Vec<u8> = (0..g.k()).map(|_| u8::from(rng.random_bool(0.5))).collect();
        let c = g.encode(&u).expect("length matches");
        let y = channel.transmit(&c, rng);
        Transmission { u, c, y }
    }
}

/// Deterministic CPT over `(parents..., child)` with value 1 exactly where the
/// child is the XOR of its parents.
pub fn xor_cpt(parent_count: usize) -> Vec<f64> {
    let rows = 1usize << parent_count;
    let mut table = Vec::with_capacity(rows * 2);
    for row in 0..rows {
        let parity = (row.count_ones() & 1) as usize;
        table.push(if parity == 0 { 1.0 } else { 0.0 });
        table.push(if parity == 1 { 1.0 } else { 0.0 });
    }
    table
}

/// The belief network of a code: uniform priors on the information bits and
/// XOR CPTs on the parity bits.
pub fn code_network(g: &GeneratorMatrix) -> BeliefNetwork {
    let (k, n) = (g.k(), g.n());
    let mut vars = Vec::with_capacity(n);
    let mut parents = Vec::with_capacity(n);
    let mut tables = Vec::with_capacity(n);
    for i in 0..k {
        vars.push(Variable::new(i, 2, VarKind::InformationBit));
        parents.push(Vec::new());
        tables.push(vec![0.5, 0.5]);
    }
    for j in 0..n - k {
        let ps = g.parity_parents(j);
        vars.push(Variable::new(k + j, 2, VarKind::ParityBit));
        tables.push(xor_cpt(ps.len()));
        parents.push(ps);
    }
    build_network(vars, parents, tables).expect("code networks are valid")
}

/// Gaussian likelihood of every channel output on its bit.
pub fn channel_evidence(y: &[f64], channel: &ChannelModel) -> Evidence {
    let mut ev = Evidence::new();
    for (j, &yj) in y.iter().enumerate() {
        let lw = channel.log_likelihoods(yj).to_vec();
        ev.add_likelihood(Likelihood::from_log_weights(j, lw).expect("finite weights"));
    }
    ev
}

/// A code network with channel evidence attached.
#[derive(Clone, Debug)]
pub struct DecodingInstance {
    pub network: BeliefNetwork,
    pub evidence: Evidence,
    /// Number of information bits, which are variables `0..k`.
    pub k: usize,
}

impl DecodingInstance {
    /// Information bits first, then parity bits, both by increasing id.
    pub fn reference_ordering(&self) -> Vec<usize> {
        (0..self.network.len()).collect()
    }
}

pub fn build_decoding_instance(
    g: &GeneratorMatrix,
    y: &[f64],
    sigma: f64,
) -> Result<DecodingInstance> {
    if y.len() != g.n() {
        return Err(Error::LengthMismatch {
            expected: g.n(),
            actual: y.len(),
        });
    }
    let channel = ChannelModel::new(sigma)?;
    Ok(DecodingInstance {
        network: code_network(g),
        evidence: channel_evidence(y, &channel),
        k: g.k(),
    })
}
