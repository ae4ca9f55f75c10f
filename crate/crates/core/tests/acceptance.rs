//! Acceptance gate: every criterion runs at its stated tolerance and time
//! limit and prints one PASS/FAIL line. Exits non-zero if any criterion fails.

mod common;

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use rand::Rng;

use common::*;
use vnsim::attention::{dual_task, force_proxy, run_stream, AttentionPolicy, Repertoire};
use vnsim::dynamics::{dephase, evolve, propagator, Hamiltonian, PointerBasis};
use vnsim::hardy::{
    check_assertion, hardy_constraints, lhv_enumerate, lhv_enumerate_with, optimize_hardy, HardyInstance, Left, Right,
    Sign,
};
use vnsim::qcore::{
    partial_trace, projector_from_vector, CMatrix, DensityMatrix, Projector, PureState, SubsystemLayout,
};
use vnsim::reduction::{measure_nonselective, pose_question, reduce_yes, NatureRng, RngSeed};
use vnsim::zeno::{run_zeno, run_zeno_drag, ZenoSchedule};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn hardy_predictions() -> Outcome {
    let report = HardyInstance::canonical().verify_predictions();
    let worst = report.violations().into_iter().fold(0.0, f64::max);
    ensure(worst <= 1e-12, || format!("max violation {worst:e} > 1e-12"))?;
    ensure(report.p4_value > 0.0, || "p4_value is not positive".into())?;

    let opt = optimize_hardy(200).map_err(|e| e.to_string())?;
    let (theta_oracle, p4_oracle) = grid_golden_max(hardy_p4_oracle, 0.0, FRAC_PI_2, 400);
    ensure((opt.p4_value - p4_oracle).abs() <= 1e-6, || {
        format!("optimizer {} vs oracle {p4_oracle}", opt.p4_value)
    })?;
    ensure((opt.p4_value - 0.0901699).abs() <= 1e-6, || {
        format!("optimizer p4 {} not within 1e-6 of 0.0901699", opt.p4_value)
    })?;
    Ok(format!(
        "violations <= {worst:.1e}, p4 canonical {:.7}, optimized {:.10} (oracle {p4_oracle:.10} at theta {theta_oracle:.6}), {} evaluations",
        report.p4_value, opt.p4_value, opt.evaluations
    ))
}

fn lhv_refutation() -> Outcome {
    let full = lhv_enumerate(&HardyInstance::canonical());
    ensure(full.total == 16, || format!("enumerated {} assignments", full.total))?;
    ensure(full.consistent_with_p4 == 0, || {
        format!("{} assignments satisfy C1-C3 and realize L1- with R1+", full.consistent_with_p4)
    })?;

    // Independent brute force: bits (L1, L2, R1, R2), true = +.
    let oracle = |use_c3: bool| {
        (0..16u8)
            .filter(|bits| {
                let v = |k: u8| bits & (1 << k) != 0;
                let (l1, l2, r1, r2) = (v(0), v(1), v(2), v(3));
                let c1 = l1 || r2;
                let c2 = !r2 || l2;
                let c3 = !l2 || !r1;
                c1 && c2 && (!use_c3 || c3) && !l1 && r1
            })
            .count()
    };
    ensure(oracle(true) == 0, || "oracle disagrees on the full constraint set".into())?;

    let [c1, c2, _] = hardy_constraints();
    let relaxed = lhv_enumerate_with(&[c1, c2]);
    ensure(relaxed.consistent_with_p4 >= 1, || "dropping C3 left no assignment".into())?;
    ensure(relaxed.consistent_with_p4 == oracle(false), || {
        format!("relaxed count {} vs oracle {}", relaxed.consistent_with_p4, oracle(false))
    })?;
    Ok(format!(
        "0 of 16 with C1-C3; {} of 16 without C3",
        relaxed.consistent_with_p4
    ))
}

fn counterfactual_engine() -> Outcome {
    let mut rng = rng(2024);
    let mut valid = 0;
    for k in 0..100 {
        let inst = HardyInstance::random(&mut rng);
        if !inst.is_hardy_valid() {
            continue;
        }
        valid += 1;
        let r2 = check_assertion(&inst, Right::R2).map_err(|e| e.to_string())?;
        let r1 = check_assertion(&inst, Right::R1).map_err(|e| e.to_string())?;
        ensure(r2.label() == "HOLDS" && r1.label() == "CONTRADICTION", || {
            format!("instance {k}: A(R2) {} A(R1) {}", r2.label(), r1.label())
        })?;
    }
    ensure(valid > 0, || "no Hardy-valid instance in the sweep".into())?;
    Ok(format!("{valid}/100 instances Hardy-valid; all give A(R2) HOLDS, A(R1) CONTRADICTION"))
}

fn zeno_benchmark() -> Outcome {
    let h = Hamiltonian::rabi(FRAC_PI_2);
    let s0 = DensityMatrix::from_pure(&PureState::basis(2, 0));
    let p = Projector::from_state(&PureState::basis(2, 0), "P");
    let mut prev = 0.0;
    let mut values = Vec::new();
    for n in [2, 4, 16, 100] {
        let sched = ZenoSchedule::constant(1.0, n, p.clone()).map_err(|e| e.to_string())?;
        let s = run_zeno(&s0, &h, &sched).map_err(|e| e.to_string())?.survival_probability;
        let oracle = zeno_survival_oracle(h.entries(), 1.0, n);
        ensure((s - oracle).abs() <= 1e-12, || format!("n={n}: {s} vs oracle {oracle}"))?;
        ensure(s > prev, || format!("survival not increasing at n={n}"))?;
        prev = s;
        values.push(s);
    }
    ensure((values[0] - 0.25).abs() <= 1e-12, || format!("survival(2) = {}", values[0]))?;
    ensure((values[3] - 0.97563).abs() <= 1e-5, || format!("survival(100) = {}", values[3]))?;
    Ok(format!(
        "survival(2,4,16,100) = {:.12}, {:.6}, {:.6}, {:.8}",
        values[0], values[1], values[2], values[3]
    ))
}

fn zeno_dragging() -> Outcome {
    let h = Hamiltonian::zero(2);
    let (from, to) = (PureState::basis(2, 0), PureState::basis(2, 1));
    let s0 = DensityMatrix::from_pure(&from);
    let long = run_zeno_drag(&s0, &h, &from, &to, 200, 1.0).map_err(|e| e.to_string())?;
    let short = run_zeno_drag(&s0, &h, &from, &to, 2, 1.0).map_err(|e| e.to_string())?;
    let (f, s) = (long.fidelity, long.result.survival_probability);
    ensure(f >= 0.99, || format!("fidelity {f} < 0.99"))?;
    ensure(s >= 0.98, || format!("survival {s} < 0.98"))?;
    let s2 = short.result.survival_probability;
    ensure((s2 - 0.25).abs() <= 1e-12, || format!("n=2 survival {s2}"))?;
    // cos²(π/(2n))^n for the great circle with n equal steps
    let oracle = (PI / 400.0).cos().powi(2).powi(200);
    ensure((s - oracle).abs() <= 1e-12, || format!("survival {s} vs closed form {oracle}"))?;
    Ok(format!("n=200 fidelity {f:.12} survival {s:.10}; n=2 survival {s2:.12}"))
}

fn no_signaling() -> Outcome {
    let mut rng = rng(77);
    let shapes = [[2, 2], [2, 3], [3, 2]];
    let mut worst: f64 = 0.0;
    for k in 0..1000 {
        let dims = shapes[k % shapes.len()];
        let layout = SubsystemLayout::new(dims.to_vec()).map_err(|e| e.to_string())?;
        let total = dims[0] * dims[1];
        let s = DensityMatrix::new(random_density(&mut rng, total, 1 + k % 3)).map_err(|e| e.to_string())?;
        for (near, far) in [(0, 1), (1, 0)] {
            let v = random_vector(&mut rng, dims[near]);
            let p = projector_from_vector(&v, "P")
                .and_then(|p| p.lift(&layout, near))
                .map_err(|e| e.to_string())?;
            let after = measure_nonselective(&s, &p).map_err(|e| e.to_string())?;
            let before_far = partial_trace(&s, &layout, far).map_err(|e| e.to_string())?;
            let after_far = partial_trace(&after, &layout, far).map_err(|e| e.to_string())?;
            worst = worst.max(max_diff(before_far.entries(), after_far.entries()));
        }
    }
    ensure(worst <= 1e-12, || format!("far-side reduced state moved by {worst:e}"))?;

    let mut marginal_worst: f64 = 0.0;
    for _ in 0..1000 {
        let inst = HardyInstance::random(&mut rng);
        for sign in [Sign::Plus, Sign::Minus] {
            for l in [Left::L1, Left::L2] {
                let m = |r| inst.joint_probability(l, sign, r, Sign::Plus) + inst.joint_probability(l, sign, r, Sign::Minus);
                marginal_worst = marginal_worst.max((m(Right::R1) - m(Right::R2)).abs());
            }
            for r in [Right::R1, Right::R2] {
                let m = |l| inst.joint_probability(l, Sign::Plus, r, sign) + inst.joint_probability(l, Sign::Minus, r, sign);
                marginal_worst = marginal_worst.max((m(Left::L1) - m(Left::L2)).abs());
            }
        }
    }
    ensure(marginal_worst <= 1e-12, || format!("Hardy marginal moved by {marginal_worst:e}"))?;
    Ok(format!(
        "1000 states: reduced-state change <= {worst:.1e}; 1000 instances: marginal change <= {marginal_worst:.1e}"
    ))
}

fn attention_benchmark() -> (DensityMatrix, Hamiltonian, CMatrix, Repertoire, f64) {
    let layout = SubsystemLayout::new(vec![2, 2]).unwrap();
    let omega = FRAC_PI_2 / 0.2;
    let local = Hamiltonian::rabi(omega);
    let h = local.lift(&layout, 0).unwrap();
    let s0 = DensityMatrix::from_pure(&PureState::basis(4, 0));
    let rep = Repertoire::computational(&layout, 0).unwrap();
    (s0, h, local.entries().clone(), rep, omega)
}

fn attention_zeno() -> Outcome {
    let (s0, h, local, rep, omega) = attention_benchmark();

    let mut worst: f64 = 0.0;
    for rate in [50.0, 100.0, 150.0] {
        let pol = AttentionPolicy {
            effort_rate: rate,
            ..Default::default()
        };
        let n = pol.reposes_per_window();
        let sched = ZenoSchedule::constant(pol.consent_window, n, rep.plan(0).lifted.clone()).map_err(|e| e.to_string())?;
        let zeno = run_zeno(&s0, &h, &sched).map_err(|e| e.to_string())?.survival_probability;
        let oracle = zeno_survival_oracle(&local, pol.consent_window, n);
        for seed in 0..20 {
            let trace = run_stream(&s0, &h, &rep, &pol, None, pol.consent_window, &mut NatureRng::new(RngSeed(seed)))
                .map_err(|e| e.to_string())?;
            let episode = trace.episodes.first().ok_or("no consent episode")?;
            worst = worst
                .max((episode.all_yes_probability - zeno).abs())
                .max((episode.all_yes_probability - oracle).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("consent all-Yes probability off run_zeno by {worst:e}"))?;

    let pol = AttentionPolicy::default();
    let runs = 2000;
    let mut total = 0.0;
    for k in 0..runs {
        let trace = run_stream(&s0, &h, &rep, &pol, None, pol.consent_window, &mut NatureRng::stream(RngSeed(11), k))
            .map_err(|e| e.to_string())?;
        total += trace.mean_occupancy(0, 0.0, pol.consent_window).ok_or("no occupancy samples")?;
    }
    let mean = total / runs as f64;
    ensure(mean > 0.9, || format!("mean occupancy at rate 50 is {mean}"))?;

    let idle = AttentionPolicy {
        effort_rate: 1e-3,
        ..Default::default()
    };
    let t_end = 0.15;
    let trace = run_stream(&s0, &h, &rep, &idle, None, t_end, &mut NatureRng::new(RngSeed(5))).map_err(|e| e.to_string())?;
    let p0 = rep.plan(0).lifted.entries();
    let final_occ = (p0 * trace.final_state.entries()).trace().re;
    let free = (omega * t_end).cos().powi(2);
    ensure(final_occ < 0.5, || format!("final occupancy without effort {final_occ}"))?;
    ensure((final_occ - free).abs() <= 1e-10, || {
        format!("final occupancy {final_occ} vs free evolution {free}")
    })?;
    Ok(format!(
        "all-Yes vs run_zeno <= {worst:.1e}; mean occupancy at rate 50 = {mean:.4} ({runs} runs); final occupancy at rate 1e-3 = {final_occ:.6}"
    ))
}

fn bottleneck() -> Outcome {
    let layout = SubsystemLayout::new(vec![2, 2]).unwrap();
    let local = Hamiltonian::rabi(FRAC_PI_2 / 0.2);
    let h = local.lift(&layout, 0).unwrap().sum(&local.lift(&layout, 1).unwrap()).unwrap();
    let s0 = DensityMatrix::from_pure(&PureState::basis(4, 0));
    let rep_a = Repertoire::computational(&layout, 0).unwrap();
    let rep_b = Repertoire::computational(&layout, 1).unwrap();
    let pol = AttentionPolicy {
        effort_rate: 100.0,
        ..Default::default()
    };
    let (shared_rate, t_end) = (100.0, 1.0);
    let run = |b: Option<&Repertoire>| {
        dual_task(&s0, &h, &rep_a, b, &pol, None, shared_rate, t_end, &mut NatureRng::new(RngSeed(3)))
            .map_err(|e| e.to_string())
    };
    let split = run(Some(&rep_b))?;
    let single = run(None)?;

    let serial = split.events.windows(2).all(|w| w[0].time < w[1].time);
    ensure(serial, || "two events share a timestamp".into())?;
    let quantum = 1.0 / t_end;
    let (ra, rb) = (
        force_proxy(&split, "A").map_err(|e| e.to_string())?,
        force_proxy(&split, "B").map_err(|e| e.to_string())?,
    );
    for r in [ra, rb] {
        ensure((r - shared_rate / 2.0).abs() <= quantum, || format!("task rate {r} vs {}", shared_rate / 2.0))?;
    }
    let expected = shared_rate * t_end;
    ensure(ra + rb <= shared_rate * (1.0 + 1.0 / expected), || format!("total rate {}", ra + rb))?;
    let alone = force_proxy(&single, "A").map_err(|e| e.to_string())?;
    ensure(ra < alone, || format!("split proxy {ra} not below single-task proxy {alone}"))?;
    Ok(format!(
        "{} serial events; rates A {ra}, B {rb}; single-task A {alone}",
        split.events.len()
    ))
}

fn core_numerics() -> Outcome {
    let mut rng = rng(9);
    let mut cases = 0;
    let mut worst_trace: f64 = 0.0;
    let mut worst_neg: f64 = 0.0;
    let mut worst_idem: f64 = 0.0;
    let mut worst_unit: f64 = 0.0;
    let mut worst_comp: f64 = 0.0;
    let mut worst_oracle: f64 = 0.0;
    let err = |e: vnsim::Error| e.to_string();

    for _ in 0..4000 {
        let d = rng.random_range(2..=6);
        let rank = rng.random_range(1..=d);
        let s = DensityMatrix::new(random_density(&mut rng, d, rank)).map_err(err)?;
        let h = Hamiltonian::new(random_hermitian(&mut rng, d, 2.0)).map_err(err)?;
        let t = rng.random_range(-3.0..3.0);
        let out = evolve(&s, &h, t).map_err(err)?;
        worst_trace = worst_trace.max((out.trace() - 1.0).abs());
        worst_neg = worst_neg.max(-out.eigenvalues().into_iter().fold(0.0, f64::min));
        cases += 1;
    }
    for _ in 0..2000 {
        let d = rng.random_range(2..=6);
        let rank = rng.random_range(1..d);
        let mut m = CMatrix::zeros(d, d);
        // Gram-Schmidt on random vectors gives an orthonormal set spanning the range.
        let mut basis: Vec<vnsim::qcore::CVector> = Vec::new();
        while basis.len() < rank {
            let mut v = random_vector(&mut rng, d);
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
            let n = v.norm();
            if n > 1e-6 {
                basis.push(v.unscale(n));
            }
        }
        for b in &basis {
            m += b * b.adjoint();
        }
        let p = Projector::new(m, "P").map_err(err)?;
        let e = p.entries();
        worst_idem = worst_idem.max(max_diff(&(e * e), e));
        let q = p.complement();
        worst_idem = worst_idem.max(max_diff(&(q.entries() * q.entries()), q.entries()));
        let s = DensityMatrix::new(random_density(&mut rng, d, d)).map_err(err)?;
        let r = reduce_yes(&s, &p).map_err(err)?;
        worst_trace = worst_trace.max((r.trace() - 1.0).abs());
        worst_neg = worst_neg.max(-r.eigenvalues().into_iter().fold(0.0, f64::min));
        cases += 1;
    }
    for _ in 0..2000 {
        let d = rng.random_range(2..=5);
        let h = Hamiltonian::new(random_hermitian(&mut rng, d, 1.0)).map_err(err)?;
        let (a, b) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let ua = propagator(&h, a).map_err(err)?;
        let ub = propagator(&h, b).map_err(err)?;
        let uab = propagator(&h, a + b).map_err(err)?;
        worst_unit = worst_unit.max(max_diff(&(ua.adjoint() * &ua), &CMatrix::identity(d, d)));
        worst_comp = worst_comp.max(max_diff(&(&ua * &ub), &uab));
        worst_oracle = worst_oracle.max(max_diff(&ua, &propagator_oracle(h.entries(), a)));
        cases += 1;
    }
    for _ in 0..1990 {
        let d = rng.random_range(2..=6);
        let rank = rng.random_range(1..=d);
        let s = DensityMatrix::new(random_density(&mut rng, d, rank)).map_err(err)?;
        let basis = PointerBasis::computational(d);
        let out = dephase(&s, &basis, rng.random::<f64>()).map_err(err)?;
        worst_trace = worst_trace.max((out.trace() - 1.0).abs());
        worst_neg = worst_neg.max(-out.eigenvalues().into_iter().fold(0.0, f64::min));
        cases += 1;
    }

    let draws = 100_000;
    let mut worst_sigma: f64 = 0.0;
    for k in 0..10 {
        let s = DensityMatrix::new(random_density(&mut rng, 2, 2)).map_err(err)?;
        let p = Projector::from_state(&PureState::basis(2, 0), "P");
        let prob = (p.entries() * s.entries()).trace().re;
        let mut nature = NatureRng::stream(RngSeed(1234), k);
        let mut yes = 0usize;
        for _ in 0..draws {
            let (event, _) = pose_question(&s, &p, &mut nature, 0.0).map_err(err)?;
            yes += event.outcome.is_yes() as usize;
        }
        let sigma = (prob * (1.0 - prob) / draws as f64).sqrt();
        let z = (yes as f64 / draws as f64 - prob).abs() / sigma;
        worst_sigma = worst_sigma.max(z);
        cases += 1;
    }

    ensure(cases == 10_000, || format!("{cases} cases"))?;
    ensure(worst_trace <= 1e-12, || format!("trace drift {worst_trace:e}"))?;
    ensure(worst_neg <= 1e-10, || format!("negative eigenvalue {worst_neg:e}"))?;
    ensure(worst_idem <= 1e-12, || format!("idempotence error {worst_idem:e}"))?;
    ensure(worst_unit <= 1e-12, || format!("unitarity error {worst_unit:e}"))?;
    ensure(worst_comp <= 1e-12, || format!("composition error {worst_comp:e}"))?;
    ensure(worst_oracle <= 1e-10, || format!("propagator vs Taylor oracle {worst_oracle:e}"))?;
    ensure(worst_sigma <= 3.0, || format!("Born frequency off by {worst_sigma:.2} sigma"))?;
    Ok(format!(
        "{cases} cases: trace {worst_trace:.1e}, negativity {worst_neg:.1e}, idempotence {worst_idem:.1e}, unitarity {worst_unit:.1e}, composition {worst_comp:.1e}, Born max {worst_sigma:.2} sigma"
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 9] = [
        ("1 hardy predictions", hardy_predictions, 5),
        ("2 lhv refutation", lhv_refutation, 1),
        ("3 counterfactual engine", counterfactual_engine, 10),
        ("4 zeno benchmark", zeno_benchmark, 5),
        ("5 zeno dragging", zeno_dragging, 5),
        ("6 no-signaling", no_signaling, 30),
        ("7 attention-zeno reduction", attention_zeno, 30),
        ("8 bottleneck and force proxy", bottleneck, 10),
        ("9 core numerics", core_numerics, 60),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => {
                Err(format!("took {:.2}s, limit {limit}s ({detail})", elapsed.as_secs_f64()))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {name} [{:.2}s] {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name} [{:.2}s] {why}", elapsed.as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
