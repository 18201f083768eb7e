//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero if any criterion fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use ontic_core::cone::{self, Branch, QubitOnticState, THETA0};
use ontic_core::dynamics::{finite_difference_rates, non_markov_witness};
use ontic_core::geometry::{
    born_probability_ndim, random_amplitudes, random_bloch, AmplitudeVector, BlochVector,
    SphericalAngles,
};
use ontic_core::harness::{run_experiment, ExperimentConfig, ExperimentKind, SchemeKind, Z_BOUND};
use ontic_core::ndim::{
    conditional_probability_ndim, make_in_region_pair, positivity_check, sample_ndim,
    sufficient_condition, weighted_conditional_sum, WeightScheme,
};
use ontic_core::patching::{self, build_frame, PatchedOnticState, MESSAGE_LEN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-12;

type Check = fn() -> Outcome;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_in_cone<R: Rng>(rng: &mut R) -> BlochVector {
    loop {
        let v = random_bloch(rng);
        if v.z() > THETA0.cos() {
            return v;
        }
    }
}

fn cone_born_identity() -> Outcome {
    let mut rng = rng(1);
    let pairs: Vec<_> = (0..10_000)
        .map(|_| (random_in_cone(&mut rng), random_bloch(&mut rng)))
        .collect();
    let start = Instant::now();
    let mut max_err: f64 = 0.0;
    for (v, w) in &pairs {
        match cone::exact_event_probability(v, w) {
            Ok(p) => max_err = max_err.max((p - (1.0 + v.dot(w)) / 2.0).abs()),
            Err(e) => return outcome(false, format!("unexpected error: {e}")),
        }
    }
    let elapsed = start.elapsed();
    outcome(
        max_err < TOL && elapsed < Duration::from_secs(1),
        format!(
            "max error {max_err:e}, {} pairs in {elapsed:?}",
            pairs.len()
        ),
    )
}

fn extended_born_identity() -> Outcome {
    let frame = build_frame();
    let mut rng = rng(2);
    let mut max_err: f64 = 0.0;
    for _ in 0..10_000 {
        let (v, w) = (random_bloch(&mut rng), random_bloch(&mut rng));
        let p = patching::extended_exact_probability(&frame, &v, &w);
        max_err = max_err.max((p - (1.0 + v.dot(&w)) / 2.0).abs());
    }
    outcome(
        max_err < TOL,
        format!("max error {max_err:e} over 10000 pairs"),
    )
}

fn positivity_sweep() -> Outcome {
    let r = match cone::sweep_positivity(1e-3, 10_000) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let (lo, hi) = (r.global_min(), r.global_max());
    outcome(
        lo >= -TOL && hi <= 1.0 + TOL && r.boundary_value.abs() <= TOL && r.beyond_cone_value < 0.0,
        format!(
            "range [{lo:e}, {hi:e}], boundary {:e}, beyond cone {:e}",
            r.boundary_value, r.beyond_cone_value
        ),
    )
}

fn icosahedral_covering() -> Outcome {
    let frame = build_frame();
    let mut rng = rng(4);
    let mut max_angle: f64 = 0.0;
    for _ in 0..100_000 {
        let v = random_bloch(&mut rng);
        let k = patching::assign_patch(&frame, &v);
        max_angle = max_angle.max(v.angle_to(frame.vertex(k)));
    }
    let s5 = 5f64.sqrt();
    let l = 4.0 / (10.0 + 2.0 * s5).sqrt();
    let theta1 = (4.0 / (3f64.sqrt() * (10.0 + 2.0 * s5).sqrt())).asin();
    let mut edge_err: f64 = 0.0;
    let mut edges = 0;
    for a in frame.vertices() {
        for b in frame.vertices() {
            let c = (2.0 - 2.0 * a.dot(b)).max(0.0).sqrt();
            if c > 1e-6 && c < l + 1e-3 {
                edges += 1;
                edge_err = edge_err.max((c - l).abs());
            }
        }
    }
    outcome(
        max_angle <= theta1 + 1e-6 && max_angle < THETA0 && edge_err <= 1e-9 && edges == 60,
        format!(
            "max angle {max_angle:.9} vs theta1 {theta1:.9}, edge error {edge_err:e} over {} edges",
            edges / 2
        ),
    )
}

fn monte_carlo_qubit() -> Outcome {
    let mut cfg = ExperimentConfig::new(ExperimentKind::McQubit);
    cfg.pairs = 100;
    cfg.samples = 1_000_000;
    cfg.seed = 5;
    cfg.workers = 1;
    let start = Instant::now();
    let report = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let elapsed = start.elapsed();
    let within = report
        .cases
        .iter()
        .filter(|c| c.z.is_none_or(|z| z.abs() <= Z_BOUND))
        .count();
    let ks_p = report
        .summary
        .metrics
        .get("ks_p_value")
        .copied()
        .unwrap_or(f64::NAN);
    outcome(
        within >= 99 && elapsed < Duration::from_secs(30),
        format!(
            "{within}/{} pairs with |z| <= {Z_BOUND}, KS p = {ks_p:.3}, single-threaded in {elapsed:?}",
            report.cases.len()
        ),
    )
}

fn ndim_exactness() -> Outcome {
    let mut worst_gated: f64 = 0.0;
    let mut worst_ungated: f64 = 0.0;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (i, &dim) in [2usize, 3, 4, 8].iter().enumerate() {
        let mut rng = rng(60 + i as u64);
        let weights = WeightScheme::uniform(dim).expect("uniform scheme");
        let radius = 0.5 / dim as f64;
        for _ in 0..1000 {
            let pair = match make_in_region_pair(dim, &weights, radius, 100_000, &mut rng) {
                Ok(p) => p,
                Err(e) => return outcome(false, format!("N = {dim}: {e}")),
            };
            let exact =
                ontic_core::ndim::exact_event_probability_ndim(&pair.psi, &pair.phi, &weights)
                    .expect("pair is in the positivity region");
            let born = born_probability_ndim(&pair.psi, &pair.phi).expect("same dimension");
            worst_gated = worst_gated.max((exact - born).abs());
            for _ in 0..20 {
                let s = sample_ndim(&pair.psi, &weights, &mut rng).expect("valid state");
                let p = conditional_probability_ndim(&pair.phi, &s, &weights).expect("valid state");
                lo = lo.min(p);
                hi = hi.max(p);
            }

            let psi = random_amplitudes(dim, &mut rng).expect("valid dimension");
            let phi = random_amplitudes(dim, &mut rng).expect("valid dimension");
            let sum = weighted_conditional_sum(&psi, &phi, &weights).expect("same dimension");
            let born = born_probability_ndim(&psi, &phi).expect("same dimension");
            worst_ungated = worst_ungated.max((sum - born).abs());
        }
    }
    outcome(
        worst_gated < TOL && worst_ungated < TOL && lo > 0.0 && hi <= 1.0,
        format!("gated error {worst_gated:e}, ungated error {worst_ungated:e}, sampled conditionals in [{lo:e}, {hi:e}]"),
    )
}

fn sufficient_condition_implication() -> Outcome {
    let mut failures = 0;
    let mut accepted = 0;
    let mut min_margin = f64::INFINITY;
    for (i, &dim) in [2usize, 3, 4, 8].iter().enumerate() {
        let mut rng = rng(70 + i as u64);
        let weights = WeightScheme::uniform(dim).expect("uniform scheme");
        let r = weights
            .constant_value()
            .expect("uniform scheme is constant");
        let radius = (r / 2.0).sqrt();
        let mut here = 0;
        while here < 1000 {
            let psi = random_amplitudes(dim, &mut rng).expect("valid dimension");
            let raw: Vec<Complex64> = psi
                .amplitudes()
                .iter()
                .map(|a| {
                    let d = Complex64::from_polar(
                        radius * rng.random::<f64>().sqrt(),
                        rng.random_range(0.0..2.0 * PI),
                    );
                    a + d
                })
                .collect();
            let Ok(phi) = AmplitudeVector::normalize(raw) else {
                continue;
            };
            if !sufficient_condition(&psi, &phi, r).expect("same dimension") {
                continue;
            }
            here += 1;
            let check = positivity_check(&psi, &phi, &weights).expect("same dimension");
            min_margin = min_margin.min(check.margin);
            if !check.holds {
                failures += 1;
            }
        }
        accepted += here;
    }
    let weights = WeightScheme::uniform(2).expect("uniform scheme");
    let psi = AmplitudeVector::basis(2, 0).expect("basis state");
    let phi = AmplitudeVector::basis(2, 1).expect("basis state");
    let counter = positivity_check(&psi, &phi, &weights).expect("same dimension");
    outcome(
        failures == 0 && !counter.holds,
        format!(
            "{failures} failures over {accepted} pairs (min margin {min_margin:e}); counterexample margin {:e}",
            counter.margin
        ),
    )
}

fn non_markov() -> Outcome {
    let r = match non_markov_witness(0.5, 0.0, PI / 2.0) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let fd = |phi| finite_difference_rates(&SphericalAngles { theta: 0.5, phi }, 1e-4).1;
    let (fa, fb) = (fd(0.0), fd(PI / 2.0));
    let shared = r.shared_ontic_state() && r.a.zenith_ontic == QubitOnticState::zenith(0.5);
    outcome(
        (r.a.dtheta_dt - 1.0).abs() <= TOL
            && r.b.dtheta_dt.abs() <= TOL
            && (r.discrepancy - 1.0).abs() <= TOL
            && (r.a.dtheta_dt - fa).abs() <= 1e-7
            && (r.b.dtheta_dt - fb).abs() <= 1e-7
            && shared,
        format!(
            "rates {:e} and {:e} (differences {fa:e}, {fb:e}), discrepancy {:e}, shared ontic state {shared}",
            r.a.dtheta_dt, r.b.dtheta_dt, r.discrepancy
        ),
    )
}

fn determinism() -> Outcome {
    let kinds = [
        ExperimentKind::ExactQubit,
        ExperimentKind::McQubit,
        ExperimentKind::ExactNdim,
        ExperimentKind::McNdim,
        ExperimentKind::PositivitySweep,
        ExperimentKind::Covering,
        ExperimentKind::Witness,
    ];
    let mut compared = 0;
    for kind in kinds {
        let mut cfg = ExperimentConfig::new(kind);
        cfg.seed = 9;
        cfg.pairs = 40;
        cfg.samples = 20_000;
        cfg.dimension = 3;
        cfg.scheme = SchemeKind::Ground;
        cfg.grid_step = 1e-2;
        cfg.event_points = 500;
        let mut outputs = Vec::new();
        for workers in [1, 3, 8, 1] {
            cfg.workers = workers;
            match run_experiment(&cfg) {
                Ok(r) => outputs.push((r.to_json(), r.to_csv())),
                Err(e) => return outcome(false, format!("{}: {e}", kind.name())),
            }
        }
        if outputs.windows(2).any(|w| w[0] != w[1]) {
            return outcome(false, format!("{} differs across runs", kind.name()));
        }
        compared += outputs.len();
    }
    outcome(
        true,
        format!(
            "{compared} reports over {} experiment kinds, worker counts 1/3/8",
            kinds.len()
        ),
    )
}

fn message_size() -> Outcome {
    let frame = build_frame();
    let mut rng = rng(10);
    let mut branches = [0usize; 2];
    for _ in 0..10_000 {
        let v = random_bloch(&mut rng);
        let s = patching::prepare(&frame, &v, &mut rng);
        let bytes = s.encode();
        branches[s.branch.index() as usize] += 1;
        match PatchedOnticState::decode(&bytes) {
            Ok(d)
                if d.x.to_bits() == s.x.to_bits() && d.branch == s.branch && d.patch == s.patch => {
            }
            _ => return outcome(false, format!("round trip failed for {s:?}")),
        }
    }
    let layout = MESSAGE_LEN == std::mem::size_of::<f64>() + 2 * std::mem::size_of::<u8>();
    let continuous = branches[Branch::Azimuth.index() as usize] > 0
        && branches[Branch::Zenith.index() as usize] > 0;
    outcome(
        MESSAGE_LEN == 10 && layout && continuous,
        format!("{MESSAGE_LEN} bytes per preparation (one f64, two u8), 10000 round trips, branch counts {branches:?}"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 10] = [
        ("cone-model Born identity", cone_born_identity),
        ("extended-model Born identity", extended_born_identity),
        ("positivity sweep", positivity_sweep),
        ("icosahedral covering", icosahedral_covering),
        ("Monte Carlo qubit frequencies", monte_carlo_qubit),
        ("N-level exactness", ndim_exactness),
        (
            "sufficient-condition implication",
            sufficient_condition_implication,
        ),
        ("non-Markov witness", non_markov),
        ("determinism", determinism),
        ("ten-byte ontic message", message_size),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        println!(
            "{} {:>2} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail
        );
        failed += usize::from(!o.passed);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
