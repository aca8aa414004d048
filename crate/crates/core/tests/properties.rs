use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bcode::bench::{run_experiment, DecoderKind, ExperimentConfig};
use bcode::coding::{
    build_decoding_instance, code_network, structured_code, ChannelModel, CodeSpec,
};
use bcode::elimination::elim_mpe;
use bcode::network::random::{random_evidence, random_network};
use bcode::network::{
    factor_product, joint_probability, log_joint_probability, moral_graph, Evidence, Factor,
};

#[test]
fn channel_noise_statistics() {
    let ch = ChannelModel::new(0.4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let c = [0u8, 1];
    let n = 100_000;
    let samples: Vec<Vec<f64>> = (0..n).map(|_| ch.transmit(&c, &mut rng)).collect();
    let noise = |j: usize| samples.iter().map(move |y| y[j] - f64::from(c[j]));
    for j in 0..2 {
        let mean = noise(j).sum::<f64>() / n as f64;
        let var = noise(j).map(|e| (e - mean) * (e - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var.sqrt() - 0.4).abs() < 0.01, "std {}", var.sqrt());
    }
    let cov = noise(0).zip(noise(1)).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    assert!(cov.abs() < 0.02, "covariance {cov}");
}

#[test]
fn structured_moral_graph_is_cyclic() {
    for (k, p) in [(5, 3), (10, 4), (25, 4), (12, 7)] {
        let g = moral_graph(&code_network(&structured_code(k, p).unwrap()));
        let shift = |v: usize| {
            if v < k {
                (v + 1) % k
            } else {
                k + (v - k + 1) % k
            }
        };
        for (a, b) in g.edges() {
            assert!(g.has_edge(shift(a), shift(b)), "K={k} P={p}: edge {a}-{b}");
        }
    }
}

#[test]
fn joint_sums_to_one() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for n in 1..=12 {
        let net = random_network(&mut rng, n, 3, 2);
        let total: f64 = (0..1usize << n)
            .map(|bits| {
                let a: Vec<usize> = (0..n).map(|i| (bits >> i) & 1).collect();
                joint_probability(&net, &a, &Evidence::new()).unwrap()
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-9, "n={n}: {total}");
    }
}

#[test]
fn ber_grows_with_noise() {
    let cfg = ExperimentConfig::new(
        CodeSpec::structured(25, 4),
        vec![0.28, 0.35, 0.45, 0.56],
        vec![
            DecoderKind::ElimMpe,
            DecoderKind::ApproxMpe(1),
            DecoderKind::Ibp(10),
        ],
        300,
        5,
    );
    let rows = run_experiment(&cfg).unwrap();
    for d in &cfg.decoders {
        let series: Vec<_> = rows.iter().filter(|r| r.decoder == *d).collect();
        for w in series.windows(2) {
            assert!(
                w[1].ber + 2.0 * (w[0].stderr + w[1].stderr) >= w[0].ber,
                "{d}: {} at {} then {} at {}",
                w[0].ber,
                w[0].sigma,
                w[1].ber,
                w[1].sigma
            );
        }
    }
}

#[test]
fn negligible_noise_decodes_exactly() {
    let g = structured_code(10, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let u: Vec<u8> = (0..10).map(|_| rng.random_range(0..2)).collect();
    let y: Vec<f64> = g
        .encode(&u)
        .unwrap()
        .iter()
        .map(|&b| f64::from(b))
        .collect();
    let inst = build_decoding_instance(&g, &y, 1e-9).unwrap();
    let opts = bcode::bench::DecodeOptions::for_instance(&inst);
    for d in [
        "elim-bel",
        "elim-mpe",
        "elim-map",
        "approx-mpe(1)",
        "approx-mpe(3)",
        "ibp(1)",
        "ibp(10)",
    ] {
        let d: DecoderKind = d.parse().unwrap();
        assert_eq!(bcode::bench::decode(&inst, d, &opts).unwrap(), u, "{d}");
    }
}

fn small_factor(scope: Vec<usize>, seed: u64) -> Factor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards: Vec<usize> = scope.iter().map(|v| 2 + v % 2).collect();
    let len = cards.iter().product();
    let values = (0..len).map(|_| rng.random_range(0.0..1.0)).collect();
    Factor::new(scope, cards, values).unwrap()
}

fn scope_strategy() -> impl Strategy<Value = Vec<usize>> {
    proptest::sample::subsequence((0..5).collect::<Vec<usize>>(), 0..=3).prop_shuffle()
}

fn same_function(a: &Factor, b: &Factor) -> bool {
    let mut vars = a.scope().to_vec();
    vars.sort_unstable();
    let mut other = b.scope().to_vec();
    other.sort_unstable();
    if vars != other {
        return false;
    }
    let mut assignment = vec![0usize; 5];
    let cards: Vec<usize> = vars.iter().map(|&v| a.card_of(v).unwrap()).collect();
    loop {
        let (x, y) = (a.value_at(&assignment), b.value_at(&assignment));
        if (x - y).abs() > 1e-12 * x.abs().max(1.0) {
            return false;
        }
        let mut k = 0;
        loop {
            if k == vars.len() {
                return true;
            }
            assignment[vars[k]] += 1;
            if assignment[vars[k]] < cards[k] {
                break;
            }
            assignment[vars[k]] = 0;
            k += 1;
        }
    }
}

proptest! {
    #[test]
    fn product_commutes(s1 in scope_strategy(), s2 in scope_strategy(), seed in any::<u64>()) {
        let (f, g) = (small_factor(s1, seed), small_factor(s2, seed ^ 1));
        let ab = factor_product(&[f.clone(), g.clone()]).unwrap();
        let ba = factor_product(&[g, f]).unwrap();
        prop_assert!(same_function(&ab, &ba));
    }

    #[test]
    fn product_associates(
        s1 in scope_strategy(),
        s2 in scope_strategy(),
        s3 in scope_strategy(),
        seed in any::<u64>(),
    ) {
        let (f, g, h) = (small_factor(s1, seed), small_factor(s2, seed ^ 1), small_factor(s3, seed ^ 2));
        let left = factor_product(&[factor_product(&[f.clone(), g.clone()]).unwrap(), h.clone()]).unwrap();
        let right = factor_product(&[f, factor_product(&[g, h]).unwrap()]).unwrap();
        prop_assert!(same_function(&left, &right));
    }

    #[test]
    fn mpe_dominates_sampled_assignments(seed in any::<u64>(), n in 3usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = random_network(&mut rng, n, 3, 3);
        let ev = random_evidence(&mut rng, &net, 0.2, 0.3);
        let order: Vec<usize> = (0..n).rev().collect();
        if let Ok(best) = elim_mpe(&net, &order, &ev) {
            for _ in 0..50 {
                let a: Vec<usize> = (0..n)
                    .map(|v| ev.value_of(v).unwrap_or_else(|| rng.random_range(0..net.cardinality(v))))
                    .collect();
                let lp = log_joint_probability(&net, &a, &ev).unwrap();
                prop_assert!(lp <= best.log_probability + 1e-9);
            }
        }
    }
}
