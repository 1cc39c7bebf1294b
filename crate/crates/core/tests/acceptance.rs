//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Reference values come from closed forms and small matrix oracles written
//! here, independent of the library's own gate tables and estimators.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qrouter_core::experiment::{self, ExperimentSpec, TomographyMode};
use qrouter_core::gates::{self, fredkin_circuit, router_circuit, Circuit, OneQubitGate, PrepSpec, RouterExperiment};
use qrouter_core::noise::{self, KrausChannel, NoiseModel};
use qrouter_core::qasm::{self, CouplingMap};
use qrouter_core::qstate::{self, Bipartition, DensityMatrix, StateVector};
use qrouter_core::tomography::{self, Pauli};

type M = Array2<C>;

fn cx(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn oracle_gate(g: OneQubitGate) -> M {
    let h = FRAC_1_SQRT_2;
    let (o, z) = (cx(1.0, 0.0), cx(0.0, 0.0));
    let diag = |p: C| ndarray::array![[o, z], [z, p]];
    match g {
        OneQubitGate::H => ndarray::array![[cx(h, 0.0), cx(h, 0.0)], [cx(h, 0.0), cx(-h, 0.0)]],
        OneQubitGate::X => ndarray::array![[z, o], [o, z]],
        OneQubitGate::S => diag(cx(0.0, 1.0)),
        OneQubitGate::Sdg => diag(cx(0.0, -1.0)),
        OneQubitGate::T => diag(C::from_polar(1.0, PI / 4.0)),
        OneQubitGate::Tdg => diag(C::from_polar(1.0, -PI / 4.0)),
    }
}

fn oracle_prep(gates: &[OneQubitGate]) -> [C; 2] {
    let v = gates
        .iter()
        .fold(Array1::from(vec![cx(1.0, 0.0), cx(0.0, 0.0)]), |v, &g| oracle_gate(g).dot(&v));
    [v[0], v[1]]
}

fn signal() -> [C; 2] {
    [cx((PI / 8.0).cos(), 0.0), cx((PI / 8.0).sin(), 0.0)]
}

fn plus() -> [C; 2] {
    [cx(FRAC_1_SQRT_2, 0.0), cx(FRAC_1_SQRT_2, 0.0)]
}

fn outer1(v: [C; 2]) -> M {
    Array2::from_shape_fn((2, 2), |(i, j)| v[i] * v[j].conj())
}

/// Reduced single-qubit state of a pure n-qubit state (qubit 0 most significant).
fn reduced_1q(amps: &[C], n: usize, q: usize) -> M {
    let bit = 1 << (n - 1 - q);
    let mut r = Array2::zeros((2, 2));
    for i in 0..amps.len() {
        for j in 0..amps.len() {
            if i & !bit == j & !bit {
                r[[usize::from(i & bit != 0), usize::from(j & bit != 0)]] += amps[i] * amps[j].conj();
            }
        }
    }
    r
}

fn max_diff(a: &M, b: &M) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Infinity-norm distance after removing the global phase that best aligns `b` to `a`.
fn phase_free_diff(a: &[C], b: &[C]) -> f64 {
    let overlap: C = b.iter().zip(a).map(|(x, y)| x.conj() * y).sum();
    let ph = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { cx(1.0, 0.0) };
    a.iter().zip(b).map(|(x, y)| (x - ph * y).norm()).fold(0.0, f64::max)
}

fn unitary_phase_diff(a: &M, b: &M) -> f64 {
    let (i, j) = (0..a.nrows())
        .flat_map(|i| (0..a.ncols()).map(move |j| (i, j)))
        .max_by(|&p, &q| b[p].norm().partial_cmp(&b[q].norm()).unwrap())
        .unwrap();
    let ratio = a[[i, j]] / b[[i, j]];
    let ph = ratio / ratio.norm();
    max_diff(a, &b.mapv(|z| z * ph))
}

fn pure_overlap(psi: &StateVector<f64>, rho: &DensityMatrix<f64>) -> f64 {
    let v = psi.amplitudes();
    v.mapv(|z| z.conj()).dot(&rho.entries().dot(v)).re
}

fn oracle_pauli(letters: &[Pauli]) -> M {
    let (o, z, i) = (cx(1.0, 0.0), cx(0.0, 0.0), cx(0.0, 1.0));
    letters.iter().fold(ndarray::array![[o]], |acc, p| {
        let m = match p {
            Pauli::I => ndarray::array![[o, z], [z, o]],
            Pauli::X => ndarray::array![[z, o], [o, z]],
            Pauli::Y => ndarray::array![[z, -i], [i, z]],
            Pauli::Z => ndarray::array![[o, z], [z, -o]],
        };
        let (ar, ac) = acc.dim();
        Array2::from_shape_fn((ar * 2, ac * 2), |(r, c)| acc[[r / 2, c / 2]] * m[[r % 2, c % 2]])
    })
}

fn random_gates(rng: &mut ChaCha20Rng, max_len: usize) -> Vec<OneQubitGate> {
    let len = rng.random_range(1..=max_len);
    (0..len).map(|_| OneQubitGate::ALL[rng.random_range(0..OneQubitGate::ALL.len())]).collect()
}

/// Router circuits, the bare Fredkin network, and random circuits whose CNOTs
/// sit on ibmqx4 edges (either direction).
fn corpus() -> Vec<Circuit> {
    let mut out: Vec<Circuit> = RouterExperiment::ALL.iter().map(|e| e.circuit()).collect();
    out.push(fredkin_circuit(0, 1, 2).unwrap());
    let map = CouplingMap::ibmqx4();
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed);
    while out.len() < 50 {
        let n = rng.random_range(1..=5);
        let edges: Vec<(usize, usize)> = map.edges().filter(|&(a, b)| a < n && b < n).collect();
        let mut c = Circuit::new(n, n, format!("random-{}", out.len()));
        for _ in 0..rng.random_range(0..30) {
            let roll: f64 = rng.random();
            if roll < 0.3 && !edges.is_empty() {
                let (a, b) = edges[rng.random_range(0..edges.len())];
                if rng.random_bool(0.5) { c.cx(a, b) } else { c.cx(b, a) }.unwrap();
            } else if roll < 0.37 {
                let qs: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.6)).collect();
                if !qs.is_empty() {
                    c.barrier(qs).unwrap();
                }
            } else {
                let g = OneQubitGate::ALL[rng.random_range(0..6)];
                c.single(g, rng.random_range(0..n)).unwrap();
            }
        }
        for q in 0..n {
            if rng.random_bool(0.5) {
                c.measure(q, q).unwrap();
            }
        }
        out.push(c);
    }
    out
}

fn criterion_1() -> (bool, String) {
    let psi = gates::simulate::<f64>(&RouterExperiment::Superposition.circuit()).unwrap();
    let (s, p) = (signal(), plus());
    let minus_phase = -C::from_polar(1.0, PI / 4.0);
    let expected: Vec<C> = (0..8)
        .map(|idx| {
            let (b0, b1, b2) = (idx >> 2, (idx >> 1) & 1, idx & 1);
            if b0 == 0 {
                s[b1] * p[b2] * FRAC_1_SQRT_2
            } else {
                minus_phase * p[b1] * s[b2] * FRAC_1_SQRT_2
            }
        })
        .collect();
    let err = phase_free_diff(psi.amplitudes().as_slice().unwrap(), &expected);
    (err <= 1e-10, format!("max |Δψ| = {err:.2e} (≤ 1e-10)"))
}

fn criterion_2() -> (bool, String) {
    let check = |control: PrepSpec, sig: &[OneQubitGate]| -> f64 {
        let classical_one = control == PrepSpec::One;
        let c = router_circuit(&control, &PrepSpec::Custom(sig.to_vec())).unwrap();
        let psi = gates::simulate::<f64>(&c).unwrap();
        let amps = psi.amplitudes().as_slice().unwrap().to_vec();
        let (signal_q, null_q) = if classical_one { (2, 1) } else { (1, 2) };
        let e1 = max_diff(&reduced_1q(&amps, 3, signal_q), &outer1(oracle_prep(sig)));
        let e2 = max_diff(&reduced_1q(&amps, 3, null_q), &outer1(plus()));
        e1.max(e2)
    };
    let signal_gates = PrepSpec::Signal.gates();
    let mut worst = check(PrepSpec::Zero, &signal_gates).max(check(PrepSpec::One, &signal_gates));
    // The prepared signal itself must be the analytic one.
    let sig_err = max_diff(&outer1(oracle_prep(&signal_gates)), &outer1(signal()));
    worst = worst.max(sig_err);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    for _ in 0..20 {
        let sig = random_gates(&mut rng, 8);
        worst = worst.max(check(PrepSpec::Zero, &sig)).max(check(PrepSpec::One, &sig));
    }
    (worst <= 1e-10, format!("signal + 20 random preps, both controls: max error {worst:.2e} (≤ 1e-10)"))
}

fn criterion_3() -> (bool, String) {
    let c = fredkin_circuit(0, 1, 2).unwrap();
    let u = gates::circuit_unitary::<f64>(&c).unwrap();
    let cswap = Array2::from_shape_fn((8, 8), |(i, j)| {
        let target = if j & 0b100 != 0 { (j & 0b100) | ((j & 0b10) >> 1) | ((j & 0b1) << 1) } else { j };
        if i == target { cx(1.0, 0.0) } else { cx(0.0, 0.0) }
    });
    let err = unitary_phase_diff(&u, &cswap);
    let cnots = c.instructions().iter().filter(|i| matches!(i, gates::Instruction::Cnot { .. })).count();
    (err <= 1e-10, format!("{} gates, {cnots} CNOTs; max |ΔU| = {err:.2e} (≤ 1e-10)", c.len()))
}

fn criterion_4() -> (bool, String) {
    let mut worst: f64 = 0.0;
    for e in RouterExperiment::ALL {
        let psi = gates::simulate::<f64>(&e.circuit()).unwrap();
        let rho = qstate::to_density(&psi);
        let expectations = tomography::observables(3)
            .into_iter()
            .map(|p| {
                let m = oracle_pauli(p.letters()).dot(rho.entries());
                let tr: C = m.diag().iter().sum();
                (p, tr.re)
            })
            .collect();
        let rec = tomography::project_to_physical(&tomography::linear_inversion(&expectations, 3).unwrap()).unwrap();
        let f_lib = tomography::fidelity(&rec, &rho).unwrap();
        let f_oracle = pure_overlap(&psi, &rec);
        worst = worst.max((f_lib - 1.0).abs()).max((f_oracle - 1.0).abs());
    }
    (worst <= 1e-9, format!("max |F − 1| = {worst:.2e} over 3 states (≤ 1e-9)"))
}

fn criterion_5() -> (bool, String) {
    let settings = tomography::settings_for(3).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for e in RouterExperiment::ALL {
        let psi = gates::simulate::<f64>(&e.circuit()).unwrap();
        let rho = qstate::to_density(&psi);
        let fids: Vec<f64> = (0..100u64)
            .map(|seed| {
                let ds = tomography::collect_dataset(&rho, &settings, 8192, seed, 0.0).unwrap();
                pure_overlap(&psi, &tomography::reconstruct(&ds).unwrap())
            })
            .collect();
        let good = fids.iter().filter(|&&f| f >= 0.98).count();
        let min = fids.iter().copied().fold(1.0, f64::min);
        ok &= good >= 95;
        parts.push(format!("{} {good}/100 (min {min:.4})", e.name()));
    }
    (ok, format!("F ≥ 0.98 in ≥ 95/100 seeds: {}", parts.join(", ")))
}

fn noisy_spec(e: RouterExperiment, seed: u64) -> ExperimentSpec {
    ExperimentSpec { noise: "ibmqx4".into(), seed, ..ExperimentSpec::router(e) }
}

fn criterion_6() -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for e in RouterExperiment::ALL {
        let fids: Vec<f64> = (0..20u64)
            .map(|seed| experiment::run_experiment(&noisy_spec(e, seed), false).unwrap().report.fidelity)
            .collect();
        let (lo, hi) = fids.iter().fold((1.0f64, 0.0f64), |(lo, hi), &f| (lo.min(f), hi.max(f)));
        let inside = fids.iter().filter(|f| (0.90..=0.995).contains(*f)).count();
        ok &= inside == fids.len();
        let mode = match ExperimentSpec::default_tomography(e.into()) {
            TomographyMode::Routed => "routed qubit",
            _ => "3-qubit",
        };
        parts.push(format!("{} ({mode}) {inside}/20 in band, range [{lo:.4}, {hi:.4}]", e.name()));
    }
    (ok, format!("ibmqx4 noise, F in [0.90, 0.995]: {}", parts.join("; ")))
}

fn oracle_negativity(rho: &DensityMatrix<f64>) -> f64 {
    // Partial transpose over qubits 1 and 2, eigenvalues from the library solver.
    let m = rho.entries();
    let pt = Array2::from_shape_fn((8, 8), |(i, j)| {
        let (ci, cj) = (i & 0b100, j & 0b100);
        m[[ci | (j & 0b11), cj | (i & 0b11)]]
    });
    let eig = qrouter_core::linalg::hermitian_eigen(&pt);
    eig.values.iter().filter(|&&v| v < 0.0).map(|v| -v).sum()
}

fn criterion_7() -> (bool, String) {
    let cut = Bipartition::split_off(&[0], 3);
    let sup_min = (0..20u64)
        .map(|seed| {
            let r = experiment::run_experiment(&noisy_spec(RouterExperiment::Superposition, seed), false).unwrap().report;
            oracle_negativity(&r.reconstructed).min(r.negativity.unwrap())
        })
        .fold(f64::INFINITY, f64::min);

    let mut ideal_max: f64 = 0.0;
    let mut noisy_max: f64 = 0.0;
    for e in [RouterExperiment::Control0, RouterExperiment::Control1] {
        let rho = qstate::to_density(&gates::simulate::<f64>(&e.circuit()).unwrap());
        ideal_max = ideal_max.max(qstate::negativity(&rho, &cut).unwrap()).max(oracle_negativity(&rho));
        for seed in 0..20u64 {
            let spec = ExperimentSpec { tomography: TomographyMode::Full, ..noisy_spec(e, seed) };
            let r = experiment::run_experiment(&spec, false).unwrap().report;
            noisy_max = noisy_max.max(r.negativity.unwrap()).max(oracle_negativity(&r.reconstructed));
        }
    }

    let ideal = ExperimentSpec { tomography: TomographyMode::None, ..ExperimentSpec::router(RouterExperiment::Superposition) };
    let entropy = experiment::run_experiment(&ideal, false).unwrap().report.entropy_control_bits;
    let c2 = (PI / 8.0).cos().powi(2);
    let expected: f64 = [(1.0 + c2) / 2.0, (1.0 - c2) / 2.0].iter().map(|&l: &f64| -l * l.log2()).sum();
    let ent_err = (entropy - expected).abs();

    let ok = sup_min > 0.1 && ideal_max <= 1e-6 && noisy_max <= 0.02 && ent_err <= 1e-9;
    (
        ok,
        format!(
            "superposition noisy N_min {sup_min:.4} (> 0.1); classical ideal N_max {ideal_max:.1e} (≤ 1e-6), \
             noisy 3-qubit N_max {noisy_max:.4} (≤ 0.02); S(control) {entropy:.12} vs {expected:.12} (Δ {ent_err:.1e})"
        ),
    )
}

const FUZZ_TOKENS: &[&str] = &[
    "OPENQASM", "2.0", ";", "include", "\"qelib1.inc\"", "qreg", "creg", "q", "c", "[", "]", "0", "1", "2", "64",
    "99999999999999999999", "h", "x", "s", "sdg", "t", "tdg", "cx", "measure", "->", "barrier", ",", "//", "\n", " ",
    "u3", "(", ")", "pi", "-1", "\"", "if", "==", "gate", "{", "}", "é", "\u{0}",
];

fn fuzz_input(rng: &mut ChaCha20Rng, seeds: &[String]) -> String {
    let mut s = match rng.random_range(0..3) {
        0 => {
            let len = rng.random_range(0..4096);
            let bytes: Vec<u8> = (0..len).map(|_| rng.random()).collect();
            String::from_utf8_lossy(&bytes).into_owned()
        }
        1 => {
            let mut s = String::from("OPENQASM 2.0;\n");
            for _ in 0..rng.random_range(0..400) {
                s.push_str(FUZZ_TOKENS[rng.random_range(0..FUZZ_TOKENS.len())]);
                if rng.random_bool(0.5) {
                    s.push(' ');
                }
            }
            s
        }
        _ => {
            let mut b = seeds[rng.random_range(0..seeds.len())].clone().into_bytes();
            for _ in 0..rng.random_range(1..8) {
                if b.is_empty() {
                    break;
                }
                let at = rng.random_range(0..b.len());
                match rng.random_range(0..3) {
                    0 => b[at] = rng.random(),
                    1 => {
                        b.remove(at);
                    }
                    _ => b.splice(at..at, FUZZ_TOKENS[rng.random_range(0..FUZZ_TOKENS.len())].bytes()).for_each(drop),
                }
            }
            String::from_utf8_lossy(&b).into_owned()
        }
    };
    while s.len() > 4096 {
        s.pop();
    }
    s
}

fn criterion_8() -> (bool, String) {
    let corpus = corpus();
    let round_trip_bad = corpus
        .iter()
        .filter(|c| !qasm::parse(&qasm::serialize(c).unwrap()).is_ok_and(|back| back.structurally_eq(c)))
        .count();

    let map = CouplingMap::ibmqx4();
    let mut worst: f64 = 0.0;
    let mut reversed = 0;
    for (idx, c) in corpus.iter().enumerate() {
        let c = c.without_measurements();
        // Router and Fredkin circuits are placed on the device with the default layout.
        let placed = if idx < 4 { c.remap(&experiment::DEFAULT_LAYOUT, 5).unwrap() } else { c };
        let t = qasm::transpile(&placed, &map).unwrap();
        reversed += t.len() - placed.len();
        let a = gates::circuit_unitary::<f64>(&placed).unwrap();
        let b = gates::circuit_unitary::<f64>(&t).unwrap();
        worst = worst.max(unitary_phase_diff(&b, &a));
    }

    let seeds: Vec<String> = corpus.iter().map(|c| qasm::serialize(c).unwrap()).collect();
    let mut rng = ChaCha20Rng::seed_from_u64(8);
    let started = Instant::now();
    let prev_hook = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    let mut crashes = 0;
    let mut accepted = 0;
    for _ in 0..10_000 {
        let input = fuzz_input(&mut rng, &seeds);
        let outcome = catch_unwind(AssertUnwindSafe(|| match qasm::parse(&input) {
            Ok(c) => {
                let _ = qasm::serialize(&c).map(|s| qasm::parse(&s));
                true
            }
            Err(e) => {
                let _ = (e.to_string(), e.position());
                false
            }
        }));
        match outcome {
            Ok(true) => accepted += 1,
            Ok(false) => {}
            Err(_) => crashes += 1,
        }
    }
    std::panic::set_hook(prev_hook);

    let ok = round_trip_bad == 0 && worst <= 1e-9 && crashes == 0;
    (
        ok,
        format!(
            "round-trip failures {round_trip_bad}/{}; transpiled max |ΔU| {worst:.1e} (≤ 1e-9, {reversed} gates added); \
             fuzz 10000 inputs, {crashes} crashes, {accepted} accepted, {:.1}s",
            corpus.len(),
            started.elapsed().as_secs_f64()
        ),
    )
}

fn completeness(ch: &KrausChannel<f64>) -> f64 {
    let dim = ch.operators()[0].nrows();
    let sum = ch.operators().iter().fold(Array2::<C>::zeros((dim, dim)), |acc, k| {
        let kd = k.t().mapv(|z| z.conj());
        acc + kd.dot(k)
    });
    max_diff(&sum, &Array2::from_shape_fn((dim, dim), |(i, j)| if i == j { cx(1.0, 0.0) } else { cx(0.0, 0.0) }))
}

fn criterion_9() -> (bool, String) {
    let mut channels = Vec::new();
    let durations = [0.0, 100.0, 400.0, 1e3, 1e4, 1e5, 1e7];
    for q in &NoiseModel::ibmqx4().device.qubits {
        for &t in &durations {
            channels.push(noise::amplitude_damping::<f64>(t, q.t1_us).unwrap());
            channels.push(noise::phase_damping::<f64>(t, q.t1_us, q.t2_us).unwrap());
        }
    }
    channels.push(noise::phase_damping::<f64>(500.0, 10.0, 30.0).unwrap());
    for p in [0.0, 1e-3, 1e-2, 0.1, 0.5, 1.0] {
        channels.push(noise::depolarizing::<f64>(p, 1).unwrap());
        channels.push(noise::depolarizing::<f64>(p, 2).unwrap());
    }
    let kraus_worst = channels.iter().map(completeness).fold(0.0, f64::max);

    let corpus = corpus();
    let zero = NoiseModel::noiseless();
    let sim_worst = corpus
        .iter()
        .map(|c| {
            let c = c.without_measurements();
            let rho = noise::simulate_noisy::<f64>(&c, &zero).unwrap();
            let pure = qstate::to_density(&gates::simulate::<f64>(&c).unwrap());
            max_diff(rho.entries(), pure.entries())
        })
        .fold(0.0, f64::max);
    let ok = kraus_worst <= 1e-9 && sim_worst <= 1e-9;
    (
        ok,
        format!(
            "{} channels, max |ΣK†K − I| {kraus_worst:.1e}; zero-noise vs pure on {} circuits {sim_worst:.1e} (both ≤ 1e-9)",
            channels.len(),
            corpus.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> (bool, String)); 9] = [
        ("analytic final state", criterion_1),
        ("routing preservation", criterion_2),
        ("Fredkin decomposition", criterion_3),
        ("tomography exactness", criterion_4),
        ("shot-noise band", criterion_5),
        ("noisy-device band", criterion_6),
        ("entanglement certificate", criterion_7),
        ("parser/transpiler soundness", criterion_8),
        ("channel physicality", criterion_9),
    ];
    let mut failures = 0;
    for (i, (title, f)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let (passed, detail) = catch_unwind(f).unwrap_or_else(|_| (false, "panicked".into()));
        failures += usize::from(!passed);
        println!(
            "[{}] criterion {}: {title}: {detail} [{:.1}s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
