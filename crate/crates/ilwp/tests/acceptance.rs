//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use ilwp::ilw::{self, measure_sizes};
use ilwp_core::analyzer::{empirical_entropy, fit_laplace, laplace_entropy, svwh_ratio};
use ilwp_core::codec::encode_model_traced;
use ilwp_core::huffman::{build_table, decode, encode, SymbolHistogram};
use ilwp_core::predictor::{find_best_prediction, SearchScope};
use ilwp_core::quantizer::quantize;
use ilwp_core::{decode_model, encode_model, Kernel3x3, Mode, WeightStore};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{laplace_sample, lattice_store, random_store, smooth_store};

const ROUNDTRIP_STORES: usize = 50;
const ROUNDTRIP_TIME_LIMIT: Duration = Duration::from_secs(60);
const HUFFMAN_STREAM_LEN: usize = 100_000;
const ENTROPY_LOWER_TOL: f64 = 1e-9;
const SEARCH_STORES: usize = 200;
const QUADRATURE_TOL: f64 = 1e-6;
const LAPLACE_FIT_REL_TOL: f64 = 0.05;
const SVWH_MIN_RATIO: f64 = 0.9;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn roundtrip_stores() -> Vec<WeightStore> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    (0..ROUNDTRIP_STORES)
        .map(|_| random_store(&mut rng, 2..=8, 1..=64))
        .collect()
}

/// Allowed reconstruction error: half a step, plus one f32 ulp of the
/// reconstructed value for the final `reference + level` rounding.
fn error_allowance(scale: f32, reconstructed: f32) -> f64 {
    f64::from(scale) / 2.0 + f64::from(f32::EPSILON) * f64::from(reconstructed.abs())
}

fn roundtrip_bound() -> Outcome {
    let stores = roundtrip_stores();
    let start = Instant::now();
    let mut cases = 0;
    let mut worst = 0.0f64;
    for (n, store) in stores.iter().enumerate() {
        for mode in Mode::ALL {
            for bits in 2..=8u8 {
                let (enc, trace) =
                    encode_model_traced(store, mode, bits).map_err(|e| e.to_string())?;
                let bytes = ilw::serialize(&enc).map_err(|e| e.to_string())?;
                let parsed = ilw::parse(&bytes).map_err(|e| e.to_string())?;
                let dec = decode_model(&parsed).map_err(|e| e.to_string())?;
                let ctx = format!("store {n} mode {mode} bits {bits}");
                if dec.layers() != trace.reconstruction.layers() {
                    return Err(format!(
                        "{ctx}: decoder differs from encoder reconstruction"
                    ));
                }
                for (a, b) in store.layers()[0]
                    .iter_values()
                    .zip(dec.layers()[0].iter_values())
                {
                    if a.to_bits() != b.to_bits() {
                        return Err(format!("{ctx}: layer 0 not bit-exact"));
                    }
                }
                for (i, (orig, rec)) in store.layers().iter().zip(dec.layers()).enumerate().skip(1)
                {
                    let scale = enc.scales[i];
                    for (a, b) in orig.iter_values().zip(rec.iter_values()) {
                        let err = (f64::from(a) - f64::from(b)).abs();
                        if err > error_allowance(scale, b) {
                            return Err(format!(
                                "{ctx} layer {i}: |{a} - {b}| = {err:e} > scale/2 = {:e}",
                                f64::from(scale) / 2.0
                            ));
                        }
                        worst = worst.max(err / f64::from(scale));
                    }
                }
                cases += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed > ROUNDTRIP_TIME_LIMIT {
        return Err(format!("{cases} cases took {elapsed:?}"));
    }
    Ok(format!(
        "{cases} cases in {:.1}s, worst error {worst:.4} × scale",
        elapsed.as_secs_f64()
    ))
}

fn closed_loop_fixity() -> Outcome {
    let stores = roundtrip_stores();
    let mut failures: BTreeMap<Mode, Vec<u8>> = BTreeMap::new();
    let mut cases = 0;
    for store in &stores {
        for mode in Mode::ALL {
            for bits in 2..=8u8 {
                let enc = encode_model(store, mode, bits).map_err(|e| e.to_string())?;
                let first = ilw::serialize(&enc).map_err(|e| e.to_string())?;
                let dec = decode_model(&enc).map_err(|e| e.to_string())?;
                let again =
                    ilw::serialize(&encode_model(&dec, mode, bits).map_err(|e| e.to_string())?)
                        .map_err(|e| e.to_string())?;
                if first != again {
                    failures.entry(mode).or_default().push(bits);
                }
                cases += 1;
            }
        }
    }
    if failures.is_empty() {
        Ok(format!(
            "{cases} encode/decode/encode cycles byte-identical"
        ))
    } else {
        let detail: Vec<String> = failures
            .iter()
            .map(|(m, b)| {
                let mut per_bits = BTreeMap::new();
                for x in b {
                    *per_bits.entry(*x).or_insert(0) += 1;
                }
                format!("{m}: {} mismatches {per_bits:?}", b.len())
            })
            .collect();
        Err(format!("{cases} cycles; {}", detail.join("; ")))
    }
}

/// Minimum total bits over every prefix code for `counts`, by enumerating
/// all length vectors that satisfy the Kraft inequality.
fn brute_force_optimal_bits(counts: &[u64]) -> u64 {
    let k = counts.len();
    if k == 1 {
        return counts[0];
    }
    let max_len = k as u32;
    let mut best = u64::MAX;
    let mut lens = vec![1u32; k];
    loop {
        let kraft: f64 = lens.iter().map(|&l| 0.5f64.powi(l as i32)).sum();
        if kraft <= 1.0 {
            let bits = counts
                .iter()
                .zip(&lens)
                .map(|(&c, &l)| c * u64::from(l))
                .sum();
            best = best.min(bits);
        }
        let mut pos = 0;
        loop {
            if pos == k {
                return best;
            }
            lens[pos] += 1;
            if lens[pos] <= max_len {
                break;
            }
            lens[pos] = 1;
            pos += 1;
        }
    }
}

fn entropy_bits(symbols: &[i8]) -> f64 {
    let mut counts = [0u64; 256];
    for &s in symbols {
        counts[s as u8 as usize] += 1;
    }
    let n = symbols.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

fn huffman_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    let mut streams: Vec<(String, Vec<i8>)> = Vec::new();
    for (bits, b) in [(8u8, 0.02), (4, 0.1), (2, 0.5), (8, 0.5)] {
        let values: Vec<f64> = (0..HUFFMAN_STREAM_LEN)
            .map(|_| laplace_sample(&mut rng, 0.0, b))
            .collect();
        let plane = quantize(&values, bits).map_err(|e| e.to_string())?;
        streams.push((format!("laplace b={b} n={bits}"), plane.symbols));
    }
    streams.push((
        "uniform".into(),
        (0..HUFFMAN_STREAM_LEN)
            .map(|_| rng.random_range(-127i8..=127))
            .collect(),
    ));
    streams.push((
        "skewed".into(),
        (0..HUFFMAN_STREAM_LEN)
            .map(|_| {
                if rng.random_bool(0.97) {
                    0
                } else {
                    rng.random_range(-3i8..=3)
                }
            })
            .collect(),
    ));

    let mut notes = Vec::new();
    for (name, symbols) in &streams {
        let table =
            build_table(&SymbolHistogram::from_symbols(symbols)).map_err(|e| e.to_string())?;
        let bits = encode(symbols, &table).map_err(|e| e.to_string())?;
        let back = decode(&bits, &table, symbols.len()).map_err(|e| e.to_string())?;
        if &back != symbols {
            return Err(format!("{name}: decode(encode(s)) != s"));
        }
        let h = entropy_bits(symbols);
        let l = bits.bit_len() as f64 / symbols.len() as f64;
        if l < h - ENTROPY_LOWER_TOL || l >= h + 1.0 {
            return Err(format!("{name}: mean length {l} outside [{h}, {h} + 1)"));
        }
        notes.push(format!("{name}: H={h:.3} L={l:.3}"));
    }

    let mut histograms = 0;
    for k in 1..=4usize {
        let mut counts = vec![1u64; k];
        loop {
            let hist =
                SymbolHistogram::from_counts(counts.iter().enumerate().map(|(s, &c)| (s as i8, c)));
            let table = build_table(&hist).map_err(|e| e.to_string())?;
            let got = table.encoded_bits(&hist).map_err(|e| e.to_string())?;
            let want = brute_force_optimal_bits(&counts);
            if got != want {
                return Err(format!(
                    "counts {counts:?}: huffman {got} bits, optimum {want}"
                ));
            }
            histograms += 1;
            let mut pos = 0;
            while pos < k && counts[pos] == 6 {
                counts[pos] = 1;
                pos += 1;
            }
            if pos == k {
                break;
            }
            counts[pos] += 1;
        }
    }
    Ok(format!(
        "{}; {histograms} histograms optimal",
        notes.join(", ")
    ))
}

fn brute_force_argmin(
    context: &[ilwp_core::DepthwiseLayer],
    target: &Kernel3x3,
    layer: usize,
    local: bool,
) -> (usize, usize) {
    let mut candidates = Vec::new();
    for (u, source) in context[..layer].iter().enumerate() {
        if local && u != layer - 1 {
            continue;
        }
        for (v, k) in source.kernels().iter().enumerate() {
            let mut d = 0.0f64;
            for e in 0..9 {
                d += (f64::from(target[e]) - f64::from(k[e])).abs();
            }
            candidates.push((d, u, v));
        }
    }
    let min = candidates.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    candidates
        .iter()
        .filter(|c| c.0 == min)
        .map(|c| (c.1, c.2))
        .min()
        .expect("non-empty")
}

fn search_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut checked = 0;
    for n in 0..SEARCH_STORES {
        let store = if n % 2 == 0 {
            random_store(&mut rng, 2..=4, 1..=8)
        } else {
            lattice_store(&mut rng, 2..=4, 1..=8)
        };
        let layers = store.layers();
        for i in 1..layers.len() {
            for (j, target) in layers[i].kernels().iter().enumerate() {
                for (scope, local) in [(SearchScope::Full, false), (SearchScope::Local, true)] {
                    let got = find_best_prediction(layers, target, i, scope)
                        .map_err(|e| e.to_string())?;
                    let want = brute_force_argmin(layers, target, i, local);
                    if got != want {
                        return Err(format!(
                            "store {n} layer {i} kernel {j} {scope:?}: {got:?} != {want:?}"
                        ));
                    }
                    checked += 1;
                }
            }
        }
        // the codec's choices, against the encoder's own reconstructed context
        for (mode, local) in [(Mode::Fss, false), (Mode::Lss, true)] {
            let (_, trace) = encode_model_traced(&store, mode, 3).map_err(|e| e.to_string())?;
            let recon = trace.reconstruction.layers();
            for rec in &trace.records {
                let target = &layers[rec.target_layer].kernels()[rec.target_kernel];
                let want = brute_force_argmin(recon, target, rec.target_layer, local);
                if (rec.source_layer, rec.source_kernel) != want {
                    return Err(format!("store {n} {mode} codec record {rec:?} != {want:?}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} selections match exhaustive search"))
}

fn ceil_log2(n: usize) -> u64 {
    let mut bits = 0;
    while (1usize << bits) < n {
        bits += 1;
    }
    bits
}

fn expected_index_bits(counts: &[usize], mode: Mode) -> u64 {
    (1..counts.len())
        .map(|i| {
            let per_kernel = match mode {
                Mode::Fss => ceil_log2(i) + ceil_log2(*counts[..i].iter().max().unwrap()),
                Mode::Lss => ceil_log2(counts[i - 1]),
                _ => 0,
            };
            counts[i] as u64 * per_kernel
        })
        .sum()
}

fn bit_accounting() -> Outcome {
    let mut stores = roundtrip_stores();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    stores.extend((0..20).map(|_| random_store(&mut rng, 2..=8, 1..=64)));
    let mut strict = 0;
    for (n, store) in stores.iter().enumerate() {
        let counts = store.kernel_counts();
        for bits in [2u8, 5, 8] {
            let mut index_bits = BTreeMap::new();
            for mode in Mode::ALL {
                let enc = encode_model(store, mode, bits).map_err(|e| e.to_string())?;
                let sizes = measure_sizes(&enc);
                let file_bits = 8 * ilw::serialize(&enc).map_err(|e| e.to_string())?.len() as u64;
                if sizes.total_bits
                    != sizes.texture_bits + sizes.non_texture_bits + sizes.header_bits
                    || sizes.total_bits != file_bits
                {
                    return Err(format!(
                        "store {n} {mode}: {sizes:?} vs file {file_bits} bits"
                    ));
                }
                if sizes.non_texture_bits != expected_index_bits(&counts, mode) {
                    return Err(format!(
                        "store {n} {mode}: {} index bits, oracle {}",
                        sizes.non_texture_bits,
                        expected_index_bits(&counts, mode)
                    ));
                }
                index_bits.insert(mode, sizes.non_texture_bits);
            }
            let (fss, lss, ill) = (
                index_bits[&Mode::Fss],
                index_bits[&Mode::Lss],
                index_bits[&Mode::Ill],
            );
            if ill != 0 || index_bits[&Mode::Baseline] != 0 {
                return Err(format!("store {n}: ILL/BASELINE carry index bits"));
            }
            if lss > fss {
                return Err(format!("store {n}: LSS {lss} > FSS {fss}"));
            }
            if counts.len() >= 3 {
                if lss >= fss {
                    return Err(format!("store {n}: LSS {lss} not below FSS {fss}"));
                }
                strict += 1;
            }
        }
    }
    Ok(format!(
        "{} stores, strict FSS > LSS in {strict} multi-layer cases",
        stores.len()
    ))
}

/// `-∫ f ln f` for the Laplace density by composite Simpson on each half line.
fn laplace_entropy_quadrature(b: f64) -> f64 {
    let integrand = |x: f64| {
        let f = (-(x.abs()) / b).exp() / (2.0 * b);
        if f > 0.0 {
            -f * f.ln()
        } else {
            0.0
        }
    };
    let half = 60.0 * b;
    let n = 200_000;
    let h = half / n as f64;
    let mut sum = integrand(0.0) + integrand(half);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * integrand(k as f64 * h);
    }
    2.0 * sum * h / 3.0
}

fn entropy_analytics() -> Outcome {
    let mut notes = Vec::new();
    for b in [0.01, 0.1, 0.5, 1.0] {
        let closed = laplace_entropy(b).map_err(|e| e.to_string())?;
        let numeric = laplace_entropy_quadrature(b);
        if (closed - numeric).abs() > QUADRATURE_TOL {
            return Err(format!(
                "b={b}: closed form {closed} vs quadrature {numeric}"
            ));
        }
        notes.push(format!("b={b}: Δ={:.1e}", (closed - numeric).abs()));
    }
    if laplace_entropy(0.5).map_err(|e| e.to_string())? != 1.0 {
        return Err("laplace_entropy(0.5) != 1.0".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0006);
    let samples: Vec<f64> = (0..100_000)
        .map(|_| laplace_sample(&mut rng, 0.0, 0.05))
        .collect();
    let fit = fit_laplace(&samples).map_err(|e| e.to_string())?;
    let rel = (fit.b - 0.05).abs() / 0.05;
    if rel > LAPLACE_FIT_REL_TOL {
        return Err(format!("fitted b = {} ({:.2}% off)", fit.b, rel * 100.0));
    }
    let uniform = SymbolHistogram::from_counts((0..8).map(|s| (s, 10)));
    if (empirical_entropy(&uniform).map_err(|e| e.to_string())? - 3.0).abs() > 1e-12 {
        return Err("uniform 8-symbol entropy != 3 bits".into());
    }
    Ok(format!(
        "{}; fitted b = {:.5} ({:.2}% off)",
        notes.join(", "),
        fit.b,
        rel * 100.0
    ))
}

fn svwh_trend() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0007);
    let mut notes = Vec::new();
    for (layers, count) in [(9usize, 32usize), (12, 16), (6, 64)] {
        let store = smooth_store(&mut rng, layers, count, 0.01);
        let ratio = svwh_ratio(&store).map_err(|e| e.to_string())?;
        let ill = measure_sizes(&encode_model(&store, Mode::Ill, 8).map_err(|e| e.to_string())?);
        let base =
            measure_sizes(&encode_model(&store, Mode::Baseline, 8).map_err(|e| e.to_string())?);
        let line = format!(
            "{layers}×{count}: ratio {ratio:.3}, ILL {:.3} KB vs BASELINE {:.3} KB",
            ill.total_kb(),
            base.total_kb()
        );
        if ratio <= SVWH_MIN_RATIO || ill.total_bits >= base.total_bits {
            return Err(line);
        }
        notes.push(line);
    }
    Ok(notes.join("; "))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("round-trip bound", roundtrip_bound),
        ("closed-loop fixity", closed_loop_fixity),
        ("huffman soundness", huffman_soundness),
        ("search oracle", search_oracle),
        ("bit accounting", bit_accounting),
        ("entropy analytics", entropy_analytics),
        ("svwh synthetic trend", svwh_trend),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("[PASS] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("[FAIL] {name}: {detail}");
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
