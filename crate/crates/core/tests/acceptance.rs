//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::fs;
use std::process::ExitCode;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eraser_core::angle::uniform_phi_grid_deg;
use eraser_core::dlm::{Channel, DlmState};
use eraser_core::harness::output::{read_manifest, write_outputs, DatasetFormat, OutputPaths};
use eraser_core::harness::{compare_report, run_mzi, run_sweep, Preset, SweepSpec};
use eraser_core::messages::Message;
use eraser_core::optics::{bs_transform, pbs_transform, HalfWavePlate, QuarterWavePlate};
use eraser_core::oracle::{
    sweep_visibility, visibility_mixed, visibility_pure_no_qwp, visibility_pure_qwp0, Component, EraserAngles,
    MixedSpec,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn spot(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn sweep_max_dev(spec: &SweepSpec) -> (f64, bool) {
    let out = run_sweep(spec, false).expect("sweep runs");
    let report = compare_report(&out.points, spec.tolerance).expect("report");
    (report.max_abs_dev, report.pass)
}

fn sweeps(specs: &[(&str, SweepSpec)]) -> (bool, String) {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, spec) in specs {
        let (dev, ok) = sweep_max_dev(spec);
        pass &= ok;
        parts.push(format!("{label}: max |dev| {dev:.4}"));
    }
    (pass, parts.join(", "))
}

fn bare_mzi() -> Outcome {
    let spec = Preset::BareMzi.spec();
    let points = run_mzi(&spec).expect("mzi runs");
    let worst = points.iter().map(|p| p.abs_dev).fold(0.0, f64::max);
    let at_zero = points
        .iter()
        .find(|p| p.phi_deg == 0.0)
        .map(|p| p.n0 as f64 / (p.n0 + p.n1) as f64)
        .unwrap_or(f64::NAN);
    Outcome::new(
        points.len() == 32 && worst <= spec.tolerance && at_zero <= 0.01,
        format!(
            "{} phases, max |N0/N - sin²(φ/2)| {worst:.4}, N0/N at φ=0 {at_zero:.4} (tol {})",
            points.len(),
            spec.tolerance
        ),
    )
}

fn pure_v_no_qwp() -> Outcome {
    let spots = spot(visibility_pure_no_qwp(90.0, 45.0, 22.5), 1.0, 1e-9)
        && spot(visibility_pure_no_qwp(90.0, 45.0, 0.0), 0.0, 1e-9)
        && spot(visibility_pure_no_qwp(90.0, 10.0, 0.0), 0.9981, 5e-5);
    let (pass, detail) = sweeps(&[("θ0=45°", Preset::PureV45.spec()), ("θ0=10°", Preset::PureV10.spec())]);
    Outcome::new(pass && spots, format!("{detail}, spot values {}", ok_word(spots)))
}

fn mixed_no_qwp() -> Outcome {
    let beta = 2f64.sqrt().atan().to_degrees();
    let spots = spot(visibility_mixed(beta, 22.5, 0.0).unwrap(), 0.8081, 5e-5);
    let (pass, detail) = sweeps(&[
        ("p_V=1/2 θ0=45°", Preset::Mixed.spec()),
        ("p_V=2/3 θ0=22.5°", Preset::PartialMixed.spec()),
    ]);
    Outcome::new(pass && spots, format!("{detail}, spot value {}", ok_word(spots)))
}

fn qwp_pure() -> Outcome {
    let spots = spot(visibility_pure_qwp0(90.0, 45.0, 22.5), 1.0, 1e-9)
        && spot(visibility_pure_qwp0(90.0, 45.0, 0.0), 0.0, 1e-9)
        && spot(visibility_pure_qwp0(45.0, 22.5, 0.0), 0.0, 1e-9);
    let mut theta10 = Preset::QwpPureV.spec();
    theta10.preset = Preset::Custom;
    theta10.theta_hwp0_deg = 10.0;
    let (pass, detail) = sweeps(&[
        ("ξ=90° θ0=45°", Preset::QwpPureV.spec()),
        ("ξ=90° θ0=10°", theta10),
        ("ξ=45° θ0=22.5°", Preset::QwpXi45.spec()),
    ]);
    Outcome::new(pass && spots, format!("{detail}, spot values {}", ok_word(spots)))
}

fn oracle_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let grid = uniform_phi_grid_deg(32);
    let mut unitarity: f64 = 0.0;
    for _ in 0..100 {
        let a = rng.gen_range(-180.0..180.0);
        for c in [
            Component::Bs,
            Component::Pbs,
            Component::Hwp0(a),
            Component::Hwp1(a),
            Component::Qwp(a),
            Component::Phase1(a),
            Component::SwapPaths,
        ] {
            let m = c.matrix();
            let defect = (m.adjoint() * m - nalgebra::Matrix4::<Complex64>::identity()).norm();
            unitarity = unitarity.max(defect);
        }
    }
    let mut closed: f64 = 0.0;
    for _ in 0..100 {
        let xi = rng.gen_range(0.0..180.0);
        let t0 = rng.gen_range(0.0..180.0);
        let t1 = rng.gen_range(0.0..180.0);
        let beta: f64 = rng.gen_range(0.0..89.0);
        for port in [Channel::Zero, Channel::One] {
            let mut angles = EraserAngles {
                theta_hwp0_deg: t0,
                theta_hwp1_deg: t1,
                theta_qwp_deg: None,
            };
            let v = |input: &MixedSpec, a: &EraserAngles| sweep_visibility(input, a, &grid, port).unwrap().fitted.value;
            closed = closed.max((v(&MixedSpec::linear(xi), &angles) - visibility_pure_no_qwp(xi, t0, t1)).abs());
            let p_v = beta.to_radians().sin().powi(2);
            closed = closed.max((v(&MixedSpec::vh(p_v), &angles) - visibility_mixed(beta, t0, t1).unwrap()).abs());
            angles.theta_qwp_deg = Some(0.0);
            closed = closed.max((v(&MixedSpec::linear(xi), &angles) - visibility_pure_qwp0(xi, t0, t1)).abs());
        }
    }
    Outcome::new(
        unitarity <= 1e-12 && closed <= 1e-9,
        format!("max unitarity defect {unitarity:.1e}, max pipeline vs closed form {closed:.1e}"),
    )
}

fn random_message(rng: &mut ChaCha8Rng) -> Message {
    Message::from_angles_deg(
        rng.gen_range(-180.0..180.0),
        rng.gen_range(-180.0..180.0),
        rng.gen_range(-180.0..180.0),
    )
}

fn unit_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let gamma = 0.99;

    let mut sums: f64 = 0.0;
    for _ in 0..10_000 {
        let regs = [random_message(&mut rng), random_message(&mut rng)];
        let x0: f64 = rng.gen();
        let s = DlmState::with_state(gamma, regs, [x0, 1.0 - x0]).unwrap();
        sums = sums.max((bs_transform(&s).total() - 2.0).abs());
        sums = sums.max((pbs_transform(&s).total() - 1.0).abs());
    }

    let mut geometric: f64 = 0.0;
    let mut dlm = DlmState::new(gamma).unwrap();
    let msg = Message::default();
    for n in 1..=2000 {
        dlm.update(Channel::Zero, &msg);
        geometric = geometric.max((dlm.x()[0] - (1.0 - 0.5 * gamma.powi(n))).abs());
    }

    let mut periodic: f64 = 0.0;
    let pattern = [Channel::Zero, Channel::Zero, Channel::One];
    let mut dlm = DlmState::new(gamma).unwrap();
    for n in 0..30_000 {
        dlm.update(pattern[n % 3], &msg);
        if n >= 3000 {
            periodic = periodic.max((dlm.x()[0] - 2.0 / 3.0).abs());
        }
    }

    let mut hwp2: f64 = 0.0;
    let mut norm: f64 = 0.0;
    for _ in 0..10_000 {
        let m = Message::from_angles_deg(
            rng.gen_range(-180.0..180.0),
            rng.gen_range(-180.0..180.0),
            rng.gen_range(1.0..89.0),
        );
        let plate = HalfWavePlate::new(rng.gen_range(-180.0..180.0));
        let qwp = QuarterWavePlate::new(rng.gen_range(-180.0..180.0));
        let (h0, v0) = m.amplitudes();
        let (h2, v2) = plate.apply(&plate.apply(&m)).amplitudes();
        hwp2 = hwp2.max((h2 + h0).norm()).max((v2 + v0).norm());
        norm = norm.max(plate.apply(&m).norm_defect()).max(qwp.apply(&m).norm_defect());
    }

    let pass = sums <= 1e-9 && geometric <= 1e-12 && periodic <= 2.0 * (1.0 - gamma) && hwp2 <= 1e-12 && norm <= 1e-12;
    Outcome::new(
        pass,
        format!(
            "weight sums {sums:.1e}, geometric {geometric:.1e}, periodic limit {periodic:.4} (bound {:.2}), HWP² {hwp2:.1e}, norm {norm:.1e}",
            2.0 * (1.0 - gamma)
        ),
    )
}

fn determinism() -> Outcome {
    let mut spec = Preset::PartialMixed.spec();
    spec.two_theta1_grid_deg = vec![0.0, 30.0, 60.0];
    spec.events_per_point = 200_000;
    spec.seed = 42;
    let dir = tempfile::tempdir().expect("temp dir");
    let mut identical = true;
    for format in [DatasetFormat::Bin, DatasetFormat::Csv] {
        let first = dir.path().join(format!("first-{format:?}"));
        let second = dir.path().join(format!("second-{format:?}"));
        let run = |spec: &SweepSpec, out: &std::path::Path| {
            let sweep = run_sweep(spec, true).unwrap();
            write_outputs(spec, &sweep.points, sweep.datasets.as_deref(), out, format).unwrap();
        };
        run(&spec, &first);
        let replay = read_manifest(&OutputPaths::new(&first).manifest()).unwrap().spec;
        run(&replay, &second);
        let (a, b) = (OutputPaths::new(&first), OutputPaths::new(&second));
        for (x, y) in [
            (a.curve(), b.curve()),
            (a.counts(), b.counts()),
            (a.dataset(format).unwrap(), b.dataset(format).unwrap()),
        ] {
            identical &= fs::read(x).unwrap() == fs::read(y).unwrap();
        }
    }
    Outcome::new(identical, "curve, counts and Γ files byte-identical across replays (binary and CSV)")
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISMATCH"
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("bare interferometer regression", bare_mzi),
        ("pure V, no QWP", pure_v_no_qwp),
        ("mixed inputs, no QWP", mixed_no_qwp),
        ("QWP at 0°, pure inputs", qwp_pure),
        ("oracle self-consistency", oracle_consistency),
        ("unit-level properties", unit_properties),
        ("determinism", determinism),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "{} [{}] {name}: {} ({:.1}s)",
            if outcome.pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
