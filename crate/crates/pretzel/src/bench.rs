//! Micro-benchmarks for the cost estimator: encryption, decryption,
//! homomorphic addition and rotation per backend, plaintext lookup and
//! addition, and garbled-circuit cost per input. Times are medians in
//! microseconds; sizes are bytes.

use std::hint::black_box;
use std::thread;
use std::time::{Duration, Instant};

use num_rational::Ratio;
use pretzel_core::ahe::{keygen, BackendParams, PackedPlaintext};
use pretzel_core::gc::{self, CircuitSpec, Party};
use pretzel_core::model::{extract_features, Vocabulary};
use pretzel_core::packing::{make_layout, PackingLayout, PackingMode};
use pretzel_core::{rng_from_seed, seed_from_u64, RngCore};

use crate::cost::{CostModel, Q};
use crate::transport::pair_inmemory;

pub const MIN_ITERATIONS: usize = 100;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub iterations: usize,
    pub seed: u64,
    pub paillier_bits: u32,
    pub ring_degree: usize,
    /// Inputs per garbled-circuit run when measuring per-input cost.
    pub yao_inputs: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            iterations: MIN_ITERATIONS,
            seed: 1,
            paillier_bits: 1024,
            ring_degree: 1024,
            yao_inputs: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub name: &'static str,
    pub median_us: f64,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub measurements: Vec<Measurement>,
    pub paillier_ciphertext_bytes: usize,
    pub bv_ciphertext_bytes: usize,
    pub p_pail: usize,
    pub p_xpir: usize,
    pub yao_bytes_per_input: f64,
}

impl BenchReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.measurements
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.median_us)
    }

    /// Measured constants in estimator form. Dimensions (`N`, `B`, `L`,
    /// ...) are left for the caller.
    pub fn cost_model(&self) -> CostModel {
        let t = |n| self.get(n).map(us);
        let mut cm = CostModel {
            p_pail: Some(self.p_pail as u64),
            p_xpir: Some(self.p_xpir as u64),
            h: t("lookup"),
            s: t("plain_add"),
            s_shift: t("bv_shift"),
            y_per_in: t("yao_per_input"),
            sz_per_in: Some(us(self.yao_bytes_per_input)),
            ..Default::default()
        };
        cm.pail.e = t("paillier_enc");
        cm.pail.d = t("paillier_dec");
        cm.pail.a = t("paillier_add");
        cm.pail.c = Some(Q::from_integer(self.paillier_ciphertext_bytes as i128));
        cm.xpir.e = t("bv_enc");
        cm.xpir.d = t("bv_dec");
        cm.xpir.a = t("bv_add");
        cm.xpir.c = Some(Q::from_integer(self.bv_ciphertext_bytes as i128));
        cm
    }
}

/// Round to a thousandth so the value prints as a short exact decimal.
fn us(v: f64) -> Q {
    Ratio::new((v * 1000.0).round() as i128, 1000)
}

/// Median wall time of `iters` calls of `f`, in microseconds.
pub fn median_us<F: FnMut()>(iters: usize, mut f: F) -> f64 {
    let mut times: Vec<Duration> = (0..iters.max(1))
        .map(|_| {
            let t = Instant::now();
            f();
            t.elapsed()
        })
        .collect();
    times.sort();
    let n = times.len();
    let mid = if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2
    };
    mid.as_secs_f64() * 1e6
}

pub fn default_layouts(cfg: &BenchConfig) -> (PackingLayout, PackingLayout) {
    use pretzel_core::packing::{DEFAULT_B_IN, DEFAULT_F_IN, DEFAULT_LAMBDA, DEFAULT_L_MAX};
    let pail = make_layout(
        DEFAULT_B_IN,
        DEFAULT_F_IN,
        DEFAULT_L_MAX,
        DEFAULT_LAMBDA,
        BackendParams::Paillier {
            modulus_bits: cfg.paillier_bits,
        },
        PackingMode::WithinRow,
    )
    .expect("default Paillier layout");
    let bv = make_layout(
        DEFAULT_B_IN,
        DEFAULT_F_IN,
        DEFAULT_L_MAX,
        DEFAULT_LAMBDA,
        BackendParams::bv_with_degree(cfg.ring_degree),
        PackingMode::AcrossRow,
    )
    .expect("default lattice layout");
    (pail, bv)
}

fn random_plaintext(layout: &PackingLayout, rng: &mut impl RngCore) -> PackedPlaintext {
    let mask = (1u64 << layout.b_in) - 1;
    let slots = (0..layout.slots()).map(|_| rng.next_u64() & mask).collect();
    PackedPlaintext::new(&layout.params, slots).expect("slots fit")
}

/// Encrypt, decrypt, add and (where supported) rotate for one layout.
fn bench_backend(
    layout: &PackingLayout,
    names: [&'static str; 4],
    cfg: &BenchConfig,
    out: &mut Vec<Measurement>,
) {
    let keys = keygen(&layout.params, seed_from_u64(cfg.seed)).expect("keygen");
    let mut rng = rng_from_seed(seed_from_u64(cfg.seed + 1));
    let pt = random_plaintext(layout, &mut rng);
    let ct = keys.pk.encrypt(&pt, &mut rng).unwrap();
    let ct2 = keys.pk.encrypt(&pt, &mut rng).unwrap();
    let [enc, dec, add, shift] = names;
    out.push(Measurement {
        name: enc,
        median_us: median_us(cfg.iterations, || {
            black_box(keys.pk.encrypt(black_box(&pt), &mut rng).unwrap());
        }),
    });
    out.push(Measurement {
        name: dec,
        median_us: median_us(cfg.iterations, || {
            black_box(keys.sk.decrypt(black_box(&ct)).unwrap());
        }),
    });
    out.push(Measurement {
        name: add,
        median_us: median_us(cfg.iterations, || {
            black_box(keys.pk.add(black_box(&ct), &ct2).unwrap());
        }),
    });
    if keys.pk.params().supports_rotation() {
        out.push(Measurement {
            name: shift,
            median_us: median_us(cfg.iterations, || {
                black_box(keys.pk.rotate_left(black_box(&ct), 3).unwrap());
            }),
        });
    }
}

/// Median time and traffic of one argmax circuit run, divided by the
/// number of blinded inputs.
fn bench_yao(layout: &PackingLayout, cfg: &BenchConfig) -> (f64, f64) {
    let count = cfg.yao_inputs.max(1);
    let spec = CircuitSpec::UnblindArgmax {
        count,
        width: layout.b_slot,
        value_bits: layout.b,
        index_bits: gc::index_bits_for(count),
    };
    let circuit = spec.build().expect("argmax circuit");
    let mut rng = rng_from_seed(seed_from_u64(cfg.seed + 2));
    let mask = (1u64 << layout.b_slot) - 1;
    let ys: Vec<u64> = (0..count).map(|_| rng.next_u64() & mask).collect();
    let ns: Vec<u64> = (0..count).map(|_| rng.next_u64() & mask).collect();
    let idx: Vec<u64> = (0..count as u64).collect();
    let g_in = gc::argmax_garbler_inputs(&ys, layout.b_slot);
    let e_in = gc::argmax_evaluator_inputs(&ns, &idx, layout.b_slot, gc::index_bits_for(count));
    let mut bytes = 0u64;
    let t = median_us(cfg.iterations, || {
        let (mut a, mut b) = pair_inmemory();
        let stats = a.stats_handle();
        thread::scope(|s| {
            let circuit = &circuit;
            let e_in = &e_in;
            let h = s.spawn(move || {
                let mut rng = rng_from_seed(seed_from_u64(7));
                gc::run_evaluator(&mut b, circuit, e_in, Party::Garbler, &mut rng).unwrap()
            });
            let mut rng = rng_from_seed(seed_from_u64(8));
            gc::run_garbler(&mut a, circuit, &g_in, Party::Garbler, &mut rng).unwrap();
            h.join().unwrap();
        });
        let st = stats.get();
        bytes = st.bytes_sent + st.bytes_received;
    });
    (t / count as f64, bytes as f64 / count as f64)
}

pub fn run(cfg: &BenchConfig) -> BenchReport {
    let (pail, bv) = default_layouts(cfg);
    let mut m = Vec::new();
    bench_backend(
        &pail,
        [
            "paillier_enc",
            "paillier_dec",
            "paillier_add",
            "paillier_shift",
        ],
        cfg,
        &mut m,
    );
    bench_backend(&bv, ["bv_enc", "bv_dec", "bv_add", "bv_shift"], cfg, &mut m);

    let vocab = Vocabulary::from_tokens((0..5000).map(|i| format!("tok{i}"))).unwrap();
    let text: String = (0..692)
        .map(|i| format!("tok{} ", (i * 7) % 5000))
        .collect();
    let per_email = median_us(cfg.iterations, || {
        black_box(extract_features(black_box(&text), Some(&vocab), 6));
    });
    m.push(Measurement {
        name: "lookup",
        median_us: per_email / 692.0,
    });
    let xs: Vec<f64> = (0..4096).map(|i| i as f64 * 0.5).collect();
    let adds = median_us(cfg.iterations, || {
        let mut acc = 0.0;
        for &x in black_box(&xs) {
            acc += x;
        }
        black_box(acc);
    });
    m.push(Measurement {
        name: "plain_add",
        median_us: adds / xs.len() as f64,
    });

    let (y, sz) = bench_yao(&bv, cfg);
    m.push(Measurement {
        name: "yao_per_input",
        median_us: y,
    });
    BenchReport {
        measurements: m,
        paillier_ciphertext_bytes: pail.params.ciphertext_size(),
        bv_ciphertext_bytes: bv.params.ciphertext_size(),
        p_pail: pail.slots(),
        p_xpir: bv.slots(),
        yao_bytes_per_input: sz,
    }
}
