//! Monte-Carlo decoder comparisons.
//!
//! Every trial draws its own information word and noise from a ChaCha8
//! generator keyed by the master seed: trial `t` reads stream `t`, the
//! information bits come from the start of that stream and the noise for the
//! `s`-th σ from word position `(s + 1) << 40`. Trials therefore run in any
//! order, on any number of threads, and reproduce bit for bit.

use std::fmt::{self, Write};
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::coding::{
    build_decoding_instance, random_code, ChannelModel, CodeKind, CodeSpec, DecodingInstance,
    GeneratorMatrix,
};
use crate::elimination::{
    elim_bel_limited, elim_map_limited, elim_mpe_limited, Limits, DEFAULT_MAX_TABLE_ENTRIES,
};
use crate::error::{Error, Result};
use crate::ibp::{argmax, run_ibp, Schedule};
use crate::minibucket::approx_mpe;
use crate::network::{find_ordering, moral_graph, BeliefNetwork, Heuristic};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DecoderKind {
    ElimBel,
    ElimMpe,
    ElimMap,
    ApproxMpe(usize),
    Ibp(usize),
}

impl DecoderKind {
    pub fn tag(self) -> &'static str {
        match self {
            DecoderKind::ElimBel => "elim-bel",
            DecoderKind::ElimMpe => "elim-mpe",
            DecoderKind::ElimMap => "elim-map",
            DecoderKind::ApproxMpe(_) => "approx-mpe",
            DecoderKind::Ibp(_) => "ibp",
        }
    }

    pub fn param(self) -> Option<usize> {
        match self {
            DecoderKind::ApproxMpe(p) | DecoderKind::Ibp(p) => Some(p),
            _ => None,
        }
    }

    /// Builds a decoder from a tag and an optional parameter.
    pub fn from_parts(tag: &str, param: Option<usize>) -> Result<Self> {
        let need = |p: Option<usize>| match p {
            Some(p) if p >= 1 => Ok(p),
            Some(_) => Err(Error::InvalidParams(format!(
                "{tag} needs a parameter of at least 1"
            ))),
            None => Err(Error::InvalidParams(format!("{tag} needs a parameter"))),
        };
        let plain = |d: DecoderKind| match param {
            None => Ok(d),
            Some(_) => Err(Error::InvalidParams(format!("{tag} takes no parameter"))),
        };
        match tag {
            "elim-bel" => plain(DecoderKind::ElimBel),
            "elim-mpe" => plain(DecoderKind::ElimMpe),
            "elim-map" => plain(DecoderKind::ElimMap),
            "approx-mpe" => need(param).map(DecoderKind::ApproxMpe),
            "ibp" => need(param).map(DecoderKind::Ibp),
            other => Err(Error::InvalidParams(format!("unknown decoder `{other}`"))),
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.param() {
            Some(p) => write!(f, "{}({p})", self.tag()),
            None => f.write_str(self.tag()),
        }
    }
}

impl FromStr for DecoderKind {
    type Err = Error;

    /// Accepts `elim-mpe`, `approx-mpe(7)`, `ibp(10)` and so on.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.split_once('(') {
            Some((tag, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| {
                    Error::InvalidParams(format!("unbalanced parenthesis in `{s}`"))
                })?;
                let p = inner
                    .trim()
                    .parse()
                    .map_err(|e| Error::InvalidParams(format!("bad parameter in `{s}`: {e}")))?;
                DecoderKind::from_parts(tag.trim(), Some(p))
            }
            None => DecoderKind::from_parts(s, None),
        }
    }
}

/// Fraction of positions where the two words differ.
pub fn ber(decoded: &[u8], truth: &[u8]) -> Result<f64> {
    Ok(bit_errors(decoded, truth)? as f64 / truth.len() as f64)
}

fn bit_errors(decoded: &[u8], truth: &[u8]) -> Result<usize> {
    if decoded.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: decoded.len(),
        });
    }
    Ok(decoded.iter().zip(truth).filter(|(a, b)| a != b).count())
}

/// Which elimination ordering the exact and mini-bucket decoders use.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub enum OrderingChoice {
    /// Information bits, then parity bits, by id.
    #[default]
    Reference,
    MinFill,
    MinDegree,
    Explicit(Vec<usize>),
}

impl OrderingChoice {
    pub fn resolve(&self, net: &BeliefNetwork) -> Result<Vec<usize>> {
        let heuristic = match self {
            OrderingChoice::Reference => return Ok((0..net.len()).collect()),
            OrderingChoice::MinFill => Heuristic::MinFill,
            OrderingChoice::MinDegree => Heuristic::MinDegree,
            OrderingChoice::Explicit(seq) => Heuristic::Given(seq.clone()),
        };
        Ok(find_ordering(&moral_graph(net), heuristic)?
            .sequence()
            .to_vec())
    }
}

impl FromStr for OrderingChoice {
    type Err = Error;

    /// `reference`, `min-fill`, `min-degree`, or a comma list of ids.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "reference" => Ok(OrderingChoice::Reference),
            "min-fill" => Ok(OrderingChoice::MinFill),
            "min-degree" => Ok(OrderingChoice::MinDegree),
            list => list
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|e| Error::InvalidParams(format!("bad ordering entry `{t}`: {e}")))
                })
                .collect::<Result<Vec<usize>>>()
                .map(OrderingChoice::Explicit),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeOptions {
    /// Base elimination ordering over all code bits.
    pub ordering: Vec<usize>,
    pub limits: Limits,
}

impl DecodeOptions {
    pub fn for_instance(instance: &DecodingInstance) -> Self {
        DecodeOptions {
            ordering: instance.reference_ordering(),
            limits: Limits::default(),
        }
    }
}

/// `ordering` with `front` moved ahead of everything else, relative order kept.
fn with_front(ordering: &[usize], front: impl Fn(usize) -> bool) -> Vec<usize> {
    let mut out: Vec<usize> = ordering.iter().copied().filter(|&v| front(v)).collect();
    out.extend(ordering.iter().copied().filter(|&v| !front(v)));
    out
}

/// Estimates the information word. Bit-wise decoders take the argmax of each
/// bit's posterior; block-wise decoders read the bits off a maximizing
/// assignment. Ties go to 0.
pub fn decode(
    instance: &DecodingInstance,
    decoder: DecoderKind,
    options: &DecodeOptions,
) -> Result<Vec<u8>> {
    let (net, ev, k) = (&instance.network, &instance.evidence, instance.k);
    let ordering = options.ordering.as_slice();
    let limits = &options.limits;
    let bits: Vec<usize> = match decoder {
        DecoderKind::ElimBel => (0..k)
            .map(|q| {
                let o = with_front(ordering, |v| v == q);
                elim_bel_limited(net, &o, ev, q, limits).map(|post| argmax(&post))
            })
            .collect::<Result<_>>()?,
        DecoderKind::ElimMpe => {
            elim_mpe_limited(net, ordering, ev, limits)?.assignment[..k].to_vec()
        }
        DecoderKind::ElimMap => {
            let o = with_front(ordering, |v| v < k);
            let hyp: Vec<usize> = (0..k).collect();
            let r = elim_map_limited(net, &o, ev, &hyp, limits)?;
            r.assignment.values().copied().collect()
        }
        DecoderKind::ApproxMpe(i) => approx_mpe(net, ordering, ev, i)?.assignment[..k].to_vec(),
        DecoderKind::Ibp(iterations) => {
            let b = run_ibp(net, ev, iterations, &Schedule::coding(net))?;
            (0..k).map(|v| b.argmax(v)).collect()
        }
    };
    Ok(bits.into_iter().map(|b| b as u8).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub code: CodeSpec,
    pub sigmas: Vec<f64>,
    pub decoders: Vec<DecoderKind>,
    pub trials: usize,
    pub master_seed: u64,
    pub ordering: OrderingChoice,
    /// Draw a fresh random code for every trial instead of one per experiment.
    pub code_per_trial: bool,
    pub max_table_entries: usize,
}

impl ExperimentConfig {
    pub fn new(
        code: CodeSpec,
        sigmas: Vec<f64>,
        decoders: Vec<DecoderKind>,
        trials: usize,
        master_seed: u64,
    ) -> Self {
        ExperimentConfig {
            code,
            sigmas,
            decoders,
            trials,
            master_seed,
            ordering: OrderingChoice::Reference,
            code_per_trial: false,
            max_table_entries: DEFAULT_MAX_TABLE_ENTRIES,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if self.sigmas.is_empty() || self.decoders.is_empty() {
            return Err(Error::Config(
                "need at least one sigma and one decoder".into(),
            ));
        }
        if let Some(s) = self.sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
            return Err(Error::Config(format!("sigma must be positive, got {s}")));
        }
        self.code
            .generator()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    ///
    /// Keys: `code.kind`, `code.k`, `code.p`, `code.seed`, `sigmas`,
    /// `decoders`, `trials`, `seed`, `ordering`, `code_per_trial`,
    /// `max_table_entries`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg = |m: String| Error::Config(m);
        let mut kind = None;
        let (mut k, mut p, mut code_seed) = (None, None, 0u64);
        let mut sigmas = None;
        let mut decoders = None;
        let mut trials = 100;
        let mut seed = 0u64;
        let mut ordering = OrderingChoice::Reference;
        let mut code_per_trial = false;
        let mut max_table_entries = DEFAULT_MAX_TABLE_ENTRIES;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| cfg(format!("line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: &dyn fmt::Display| {
                cfg(format!("line {}: bad value for {key}: {e}", lineno + 1))
            };
            match key {
                "code.kind" => kind = Some(value.parse::<CodeKind>().map_err(|e| bad(&e))?),
                "code.k" => k = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
                "code.p" => p = Some(value.parse::<usize>().map_err(|e| bad(&e))?),
                "code.seed" => code_seed = value.parse().map_err(|e| bad(&e))?,
                "sigmas" => {
                    sigmas = Some(
                        value
                            .split(',')
                            .map(|s| s.trim().parse::<f64>().map_err(|e| bad(&e)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "decoders" => {
                    decoders = Some(
                        value
                            .split(',')
                            .map(|s| s.parse::<DecoderKind>().map_err(|e| bad(&e)))
                            .collect::<Result<Vec<_>>>()?,
                    )
                }
                "trials" => trials = value.parse().map_err(|e| bad(&e))?,
                "seed" => seed = value.parse().map_err(|e| bad(&e))?,
                "ordering" => ordering = value.parse().map_err(|e| bad(&e))?,
                "code_per_trial" => code_per_trial = value.parse().map_err(|e| bad(&e))?,
                "max_table_entries" => max_table_entries = value.parse().map_err(|e| bad(&e))?,
                other => return Err(cfg(format!("line {}: unknown key `{other}`", lineno + 1))),
            }
        }
        let kind = kind.ok_or_else(|| cfg("missing code.kind".into()))?;
        let sized = |what: &str, v: Option<usize>| v.ok_or_else(|| cfg(format!("missing {what}")));
        let code = match kind {
            CodeKind::Hamming74 => CodeSpec::hamming_7_4(),
            CodeKind::Hamming1511 => CodeSpec::hamming_15_11(),
            CodeKind::Structured => CodeSpec::structured(sized("code.k", k)?, sized("code.p", p)?),
            CodeKind::Random => {
                CodeSpec::random(sized("code.k", k)?, sized("code.p", p)?, code_seed)
            }
        };
        let config = ExperimentConfig {
            code,
            sigmas: sigmas.ok_or_else(|| cfg("missing sigmas".into()))?,
            decoders: decoders.ok_or_else(|| cfg("missing decoders".into()))?,
            trials,
            master_seed: seed,
            ordering,
            code_per_trial,
            max_table_entries,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub sigma: f64,
    pub decoder: DecoderKind,
    /// Trials the decoder completed.
    pub trials: usize,
    pub bit_errors: usize,
    pub ber: f64,
    pub stderr: f64,
    pub mean_time_s: f64,
    /// Trials on which the decoder returned an error.
    pub failures: usize,
    pub first_error: Option<Error>,
}

impl ReportRow {
    pub fn failed(&self) -> bool {
        self.failures > 0
    }
}

/// Binomial standard error of a bit error rate measured over `bits` bits.
pub fn binomial_stderr(ber: f64, bits: usize) -> f64 {
    (ber * (1.0 - ber) / bits as f64).sqrt()
}

/// The generator used on trial `t`.
fn trial_code(config: &ExperimentConfig, t: usize) -> Result<GeneratorMatrix> {
    if config.code_per_trial && config.code.kind == CodeKind::Random {
        let mut rng = ChaCha8Rng::seed_from_u64(config.code.seed);
        rng.set_stream(t as u64);
        random_code(config.code.k, config.code.p, rng.next_u64())
    } else {
        config.code.generator()
    }
}

/// Generator for trial `t`, positioned at the information bits.
pub fn trial_rng(master_seed: u64, t: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(t as u64);
    rng
}

/// Generator for the channel noise of trial `t` at the `s`-th σ.
pub fn noise_rng(master_seed: u64, t: usize, s: usize) -> ChaCha8Rng {
    let mut rng = trial_rng(master_seed, t);
    rng.set_word_pos((s as u128 + 1) << 40);
    rng
}

/// Result of one decoder on one (trial, σ) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialOutcome {
    pub truth: Vec<u8>,
    /// Decoded word per decoder, in configuration order.
    pub decoded: Vec<Result<Vec<u8>>>,
    pub seconds: Vec<f64>,
}

struct Prepared {
    g: GeneratorMatrix,
    ordering: Vec<usize>,
}

fn prepare(config: &ExperimentConfig, t: usize) -> Result<Prepared> {
    let g = trial_code(config, t)?;
    let net = crate::coding::code_network(&g);
    let ordering = config.ordering.resolve(&net)?;
    Ok(Prepared { g, ordering })
}

fn run_prepared(config: &ExperimentConfig, prep: &Prepared, t: usize) -> Result<Vec<TrialOutcome>> {
    let g = &prep.g;
    let mut rng = trial_rng(config.master_seed, t);
    let u: Vec<u8> = (0..g.k()).map(|_| u8::from(rng.random_bool(0.5))).collect();
    let c = g.encode(&u)?;
    let options = DecodeOptions {
        ordering: prep.ordering.clone(),
        limits: Limits {
            max_table_entries: config.max_table_entries,
        },
    };
    config
        .sigmas
        .iter()
        .enumerate()
        .map(|(s, &sigma)| {
            let y =
                ChannelModel::new(sigma)?.transmit(&c, &mut noise_rng(config.master_seed, t, s));
            let instance = build_decoding_instance(g, &y, sigma)?;
            let (decoded, seconds) = config
                .decoders
                .iter()
                .map(|&d| {
                    let start = Instant::now();
                    let r = decode(&instance, d, &options);
                    (r, start.elapsed().as_secs_f64())
                })
                .unzip();
            Ok(TrialOutcome {
                truth: u.clone(),
                decoded,
                seconds,
            })
        })
        .collect()
}

/// All σ values of trial `t`, one outcome per σ.
pub fn run_trial(config: &ExperimentConfig, t: usize) -> Result<Vec<TrialOutcome>> {
    run_prepared(config, &prepare(config, t)?, t)
}

/// Runs every decoder on every (trial, σ) pair; trials run in parallel.
/// A decoder error counts against that decoder's row only.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    config.validate()?;
    let shared = if config.code_per_trial {
        None
    } else {
        Some(prepare(config, 0)?)
    };
    let outcomes: Vec<Vec<TrialOutcome>> = (0..config.trials)
        .into_par_iter()
        .map(|t| match &shared {
            Some(prep) => run_prepared(config, prep, t),
            None => run_trial(config, t),
        })
        .collect::<Result<_>>()?;
    let k = config.code.k;
    let mut rows = Vec::new();
    for (s, &sigma) in config.sigmas.iter().enumerate() {
        for (d, &decoder) in config.decoders.iter().enumerate() {
            let mut row = ReportRow {
                sigma,
                decoder,
                trials: 0,
                bit_errors: 0,
                ber: 0.0,
                stderr: 0.0,
                mean_time_s: 0.0,
                failures: 0,
                first_error: None,
            };
            let mut time = 0.0;
            for trial in &outcomes {
                let o = &trial[s];
                time += o.seconds[d];
                match &o.decoded[d] {
                    Ok(word) => {
                        row.trials += 1;
                        row.bit_errors += bit_errors(word, &o.truth)?;
                    }
                    Err(e) => {
                        row.failures += 1;
                        row.first_error.get_or_insert_with(|| e.clone());
                    }
                }
            }
            row.mean_time_s = time / config.trials as f64;
            if row.trials > 0 {
                let bits = row.trials * k;
                row.ber = row.bit_errors as f64 / bits as f64;
                row.stderr = binomial_stderr(row.ber, bits);
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Pretty,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "pretty" => Ok(ReportFormat::Pretty),
            other => Err(Error::InvalidParams(format!(
                "unknown report format `{other}`"
            ))),
        }
    }
}

pub const CSV_HEADER: &str = "sigma,decoder,param,trials,bit_errors,ber,stderr,mean_time_s";

fn sorted(rows: &[ReportRow]) -> Vec<&ReportRow> {
    let mut rows: Vec<&ReportRow> = rows.iter().collect();
    rows.sort_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then_with(|| a.decoder.tag().cmp(b.decoder.tag()))
            .then_with(|| a.decoder.param().cmp(&b.decoder.param()))
    });
    rows
}

/// Rows sorted by σ, decoder tag and parameter. A decoder that failed on
/// every trial prints `failed` in its count and rate columns.
pub fn emit_report(rows: &[ReportRow], format: ReportFormat) -> String {
    let rows = sorted(rows);
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for r in rows {
                let param = r.decoder.param().map(|p| p.to_string()).unwrap_or_default();
                write!(
                    out,
                    "{},{},{},{},",
                    r.sigma,
                    r.decoder.tag(),
                    param,
                    r.trials
                )
                .unwrap();
                if r.trials == 0 {
                    out.push_str("failed,failed,failed,");
                } else {
                    write!(out, "{},{:.6e},{:.6e},", r.bit_errors, r.ber, r.stderr).unwrap();
                }
                writeln!(out, "{:.6e}", r.mean_time_s).unwrap();
            }
        }
        ReportFormat::Pretty => {
            let mut decoders: Vec<DecoderKind> = Vec::new();
            let mut sigmas: Vec<f64> = Vec::new();
            for r in &rows {
                if !decoders.contains(&r.decoder) {
                    decoders.push(r.decoder);
                }
                if !sigmas.contains(&r.sigma) {
                    sigmas.push(r.sigma);
                }
            }
            decoders.sort_by(|a, b| a.tag().cmp(b.tag()).then(a.param().cmp(&b.param())));
            write!(out, "{:>8}", "sigma").unwrap();
            for d in &decoders {
                write!(out, " | {:>22}", d.to_string()).unwrap();
            }
            out.push('\n');
            for &sigma in &sigmas {
                write!(out, "{sigma:>8}").unwrap();
                for d in &decoders {
                    let cell = match rows.iter().find(|r| r.sigma == sigma && r.decoder == *d) {
                        Some(r) if r.trials == 0 => "failed".to_string(),
                        Some(r) => format!("{:.2e} ({:.1e}s)", r.ber, r.mean_time_s),
                        None => String::new(),
                    };
                    write!(out, " | {cell:>22}").unwrap();
                }
                out.push('\n');
            }
        }
    }
    out
}
