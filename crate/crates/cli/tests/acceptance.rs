//! Acceptance gate: ten numbered behavioral criteria, each checked at its
//! stated tolerance and time budget. One `criterion N: PASS/FAIL` line is
//! printed per criterion; the test fails if any criterion fails.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::collections::BTreeMap;
use std::process::Command;
use std::time::{Duration, Instant};

use varcert_core::envelope::{
    check_shift_identity, check_tilt_identity, envelope_gradient, moreau_envelope,
};
use varcert_core::models::gallery::{gallery_lookup, staircase_junction, staircase_slope};
use varcert_core::models::{FunctionModel, SubdiffSet, Window};
use varcert_core::monotonicity::{local_mono_certify, GapKind};
use varcert_core::norm_space::{dot, NormEval, NormModel};
use varcert_core::plan::SamplePlan;
use varcert_core::regularity::{prox_regularity_certify, subdiff_continuity_check};
use varcert_core::report::{json_vec, CertificateReport, Verdict};
use varcert_core::second_order::{
    combined_second_subdiff, limiting_second_subdiff, pointbased_check, psd_certify, PsdFlavor,
};
use varcert_core::tilt::{second_order_growth_check, tilt_stability_certify};
use varcert_core::varconvex::{
    certify_variational_convexity, polyak_strong_convexity_check, quadratic_shift_transfer,
    shift_strong_convexity_check,
};

// Independently computed reference for the discretized-integral example:
// midpoint-quadrature value of the sigma = 2 midpoint-convexity violation at
// the bundled stress pair, lambda = 1/2, on the 512-point grid.
const L1_STRESS_GAP: f64 = 4.783_358_099_699_236_42e-3;

fn e1() -> NormModel {
    NormModel::euclidean(1)
}

fn gallery(name: &str) -> FunctionModel {
    gallery_lookup(name, &BTreeMap::new()).expect("bundled model exists")
}

fn gallery_with(name: &str, key: &str, value: f64) -> FunctionModel {
    let mut params = BTreeMap::new();
    params.insert(key.to_string(), value);
    gallery_lookup(name, &params).expect("bundled model exists")
}

fn certified(rep: &CertificateReport) -> bool {
    rep.verdict == Verdict::Certified
}

struct Gate {
    failures: Vec<String>,
}

impl Gate {
    fn run(
        &mut self,
        number: u32,
        budget: Duration,
        body: impl FnOnce() -> Result<(), String>,
    ) {
        let started = Instant::now();
        let outcome = body();
        let elapsed = started.elapsed();
        let timing = format!("{:.2}s of {:.0}s budget", elapsed.as_secs_f64(), budget.as_secs_f64());
        match outcome {
            Ok(()) if elapsed <= budget => {
                println!("criterion {number}: PASS ({timing})");
            }
            Ok(()) => {
                println!("criterion {number}: FAIL (over time budget: {timing})");
                self.failures.push(format!("criterion {number}: over budget ({timing})"));
            }
            Err(msg) => {
                println!("criterion {number}: FAIL ({msg}; {timing})");
                self.failures.push(format!("criterion {number}: {msg}"));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 1. Duality-map identities across p and dimension.
// ---------------------------------------------------------------------------

fn criterion_1() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for &p in &[1.5, 2.0, 3.0, 4.0] {
        for &n in &[1usize, 2, 5] {
            let m = NormModel::lp(p, n).map_err(|e| e.to_string())?;
            for case in 0..10_000 {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let x = if case % 997 == 0 { vec![0.0; n] } else { x };
                let j = m.duality_map(&x).map_err(|e| e.to_string())?;
                let nx = m.norm(&x).map_err(|e| e.to_string())?;
                let tol = 1e-10 * (1.0 + nx * nx);
                let pairing_gap = (dot(&j, &x) - nx * nx).abs();
                let dual_norm_gap =
                    (m.dual_norm(&j).map_err(|e| e.to_string())? - nx).abs();
                if pairing_gap > tol || dual_norm_gap > tol {
                    return Err(format!(
                        "identity violated at p={p}, n={n}: pairing gap {pairing_gap:e}, \
                         dual norm gap {dual_norm_gap:e}, tol {tol:e}"
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 2. Tilt-translation identity for envelopes in the inner-product case.
// ---------------------------------------------------------------------------

fn criterion_2() -> Result<(), String> {
    let models = [
        gallery("abs"),
        gallery("quadratic"),
        gallery("huber_source"),
        gallery("staircase"),
        gallery("zero_one"),
    ];
    let lambdas = [0.1, 0.5, 1.0, 2.0];
    let plan = SamplePlan::line(17, 65, -8.0, 8.0).map_err(|e| e.to_string())?;
    let m = e1();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let phi = &models[case % models.len()];
        let lambda = lambdas[rng.gen_range(0..lambdas.len())];
        let x = [rng.gen_range(-1.5..1.5)];
        let xstar = [rng.gen_range(-1.0..1.0)];
        let rep = check_tilt_identity(phi, lambda, &xstar, &x, &m, &plan, 1e-6)
            .map_err(|e| e.to_string())?;
        if !certified(&rep) {
            return Err(format!(
                "case {case} ({}, lambda={lambda}, x={}, xstar={}): margin {:?}",
                phi.name, x[0], xstar[0], rep.margin
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 3. Quadratic-shift identity: exact for a pure quadratic, tight for a kink.
// ---------------------------------------------------------------------------

fn criterion_3() -> Result<(), String> {
    let m = e1();
    let plan = SamplePlan::line(17, 65, -8.0, 8.0).map_err(|e| e.to_string())?;
    let square = gallery_with("quadratic", "alpha", 2.0);
    for &x in &[-1.3, 0.2, 0.7, 2.0] {
        let rep = check_shift_identity(&square, 1.0, 0.5, &[x], &m, &plan, 1e-10)
            .map_err(|e| e.to_string())?;
        if !certified(&rep) {
            return Err(format!(
                "square shift identity at x={x}: margin {:?}",
                rep.margin
            ));
        }
    }
    let abs = gallery("abs");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..20 {
        let x = [rng.gen_range(-2.0..2.0)];
        let rep = check_shift_identity(&abs, 0.5, 0.5, &x, &m, &plan, 1e-6)
            .map_err(|e| e.to_string())?;
        if !certified(&rep) {
            return Err(format!(
                "abs shift identity case {case} at x={}: margin {:?}",
                x[0], rep.margin
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 4. Envelope gradient versus central differences per bundled model.
// ---------------------------------------------------------------------------

fn criterion_4() -> Result<(), String> {
    let lambda = 0.7;
    let h = 1e-3;
    let cases: [(FunctionModel, f64); 6] = [
        (gallery("abs"), 2.0),
        (gallery("quadratic"), 2.0),
        (gallery("huber_source"), 2.0),
        (gallery("staircase"), 0.8),
        (gallery("zero_one"), 2.0),
        (gallery_with("l1_weighted_square", "m", 4.0), 2.0),
    ];
    for (phi, span) in &cases {
        let n = phi.n;
        let m = NormModel::euclidean(n);
        let grid = if n == 1 { 65 } else { 9 };
        let plan = SamplePlan::new(11, grid, 32, vec![-4.0; n], vec![4.0; n])
            .map_err(|e| e.to_string())?;
        let xstar0 = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < 20 && attempts < 200 {
            attempts += 1;
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-span..*span)).collect();
            let grad = match envelope_gradient(phi, lambda, &xstar0, &x, &m, &plan) {
                Ok(g) => g,
                Err(_) => continue, // multi-valued proximal point: envelope kink
            };
            let e0 = moreau_envelope(phi, lambda, &x, &m, &plan)
                .map_err(|e| e.to_string())?
                .value;
            let mut fd = vec![0.0; n];
            let mut smooth = true;
            for i in 0..n {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let ep = moreau_envelope(phi, lambda, &xp, &m, &plan)
                    .map_err(|e| e.to_string())?
                    .value;
                let em = moreau_envelope(phi, lambda, &xm, &m, &plan)
                    .map_err(|e| e.to_string())?
                    .value;
                // A kink of the envelope inside (x-h, x+h) makes the second
                // difference blow up like |slope jump| / h; skip such points.
                if ((ep - 2.0 * e0 + em) / (h * h)).abs() > 10.0 / lambda {
                    smooth = false;
                    break;
                }
                fd[i] = (ep - em) / (2.0 * h);
            }
            if !smooth {
                continue;
            }
            let err: f64 = grad
                .iter()
                .zip(&fd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale = 1.0 + dot(&grad, &grad).sqrt();
            if err > 1e-3 * scale {
                return Err(format!(
                    "{}: gradient mismatch {err:e} at x={x:?} (scale {scale:.3})",
                    phi.name
                ));
            }
            accepted += 1;
        }
        if accepted < 20 {
            return Err(format!(
                "{}: only {accepted} smooth sample points out of {attempts} attempts",
                phi.name
            ));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 5. Envelope strong-convexity modulus alpha / (1 + alpha * lambda).
// ---------------------------------------------------------------------------

fn criterion_5() -> Result<(), String> {
    let m = e1();
    let plan = SamplePlan::line(17, 65, -6.0, 6.0).map_err(|e| e.to_string())?;
    let h = 0.25;
    for &alpha in &[0.5, 1.0, 2.0] {
        let phi = gallery_with("quadratic", "alpha", alpha);
        for &lambda in &[0.1, 0.5, 1.0] {
            let ev = |x: f64| -> Result<f64, String> {
                Ok(moreau_envelope(&phi, lambda, &[x], &m, &plan)
                    .map_err(|e| e.to_string())?
                    .value)
            };
            let measured = (ev(h)? - 2.0 * ev(0.0)? + ev(-h)?) / (h * h);
            let expected = alpha / (1.0 + alpha * lambda);
            if (measured - expected).abs() > 1e-4 {
                return Err(format!(
                    "alpha={alpha}, lambda={lambda}: measured modulus {measured} \
                     vs {expected}"
                ));
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 6. Indicator-like two-level model: the four stored verdicts and the
//    refutation witness of the second-order condition.
// ---------------------------------------------------------------------------

fn criterion_6() -> Result<(), String> {
    let phi = gallery("zero_one");
    let m = e1();
    let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5).map_err(|e| e.to_string())?;
    let plan = SamplePlan::centered(11, 33, 8, &[0.0], 0.5).map_err(|e| e.to_string())?;
    let svc = certify_variational_convexity(&phi, &[0.0], &[0.0], 1.0, &w, &m, &plan)
        .map_err(|e| e.to_string())?;
    if !certified(&svc) {
        return Err(format!("svc sigma=1 not certified: margin {:?}", svc.margin));
    }
    let cont_plan = SamplePlan::centered(7, 65, 16, &[0.0], 1.0).map_err(|e| e.to_string())?;
    let cont = subdiff_continuity_check(
        &phi,
        &[0.0],
        &[0.0],
        &[0.1, 0.05, 0.01, 0.005, 0.001],
        &m,
        &cont_plan,
    )
    .map_err(|e| e.to_string())?;
    if certified(&cont) {
        return Err("subdifferential continuity unexpectedly certified".into());
    }
    let reg_plan = SamplePlan::centered(7, 65, 16, &[0.0], 0.5).map_err(|e| e.to_string())?;
    let reg = prox_regularity_certify(&phi, &[0.0], &[0.0], &w, &m, &reg_plan)
        .map_err(|e| e.to_string())?;
    if !certified(&reg) {
        return Err(format!("prox-regularity not certified: margin {:?}", reg.margin));
    }
    let psd_plan = SamplePlan::centered(7, 65, 8, &[0.0], 0.5).map_err(|e| e.to_string())?;
    let psd = psd_certify(&phi, &w, 1.0, PsdFlavor::Combined, &psd_plan)
        .map_err(|e| e.to_string())?;
    if certified(&psd) {
        return Err("second-order condition unexpectedly certified".into());
    }
    let want_w = json_vec(&[1.0]);
    let want_z = json_vec(&[0.0]);
    let has_witness = psd.witnesses.iter().any(|wit| {
        wit.inputs.get("w") == Some(&want_w) && wit.inputs.get("z") == Some(&want_z)
    });
    if !has_witness {
        return Err(format!(
            "refutation witness z=0, w=1 not reported; witnesses: {:?}",
            psd.witnesses
                .iter()
                .map(|w| serde_json::to_string(&w.inputs).unwrap_or_default())
                .collect::<Vec<_>>()
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 7. Staircase model: subdifferential stratification, tilt stability,
//    prox-regularity refutation, and second-order sets.
// ---------------------------------------------------------------------------

fn expect_point(s: &SubdiffSet, v: f64) -> bool {
    matches!(s, SubdiffSet::Point(p) if p.len() == 1 && p[0] == v)
}

fn expect_interval(s: &SubdiffSet, lo: f64, hi: f64) -> bool {
    matches!(s, SubdiffSet::Intervals(iv) if iv.len() == 1 && iv[0] == (lo, hi))
}

fn criterion_7() -> Result<(), String> {
    let phi = gallery("staircase");
    let sd = |x: f64| phi.subdiff(&[x]).map_err(|e| e.to_string());

    // Stratification, exact endpoints, for k in 2..=8: the kink at 1/k, a
    // ramp point, the ramp-to-flat junction, a flat point, and the mirrored
    // kink; plus the origin, the domain edge, and the outside.
    for k in 2..=8 {
        let kf = k as f64;
        let kink = 1.0 / kf;
        let slope = staircase_slope(kf);
        let junction = staircase_junction(kf);
        let ramp_x = 0.5 * (1.0 / (kf + 1.0) + junction);
        let flat_x = 0.5 * (junction + kink);
        if !expect_interval(&sd(kink)?, 0.0, kf / (kf - 1.0)) {
            return Err(format!("kink 1/{k}: wrong subdifferential {:?}", sd(kink)?));
        }
        if !expect_interval(&sd(-kink)?, -kf / (kf - 1.0), 0.0) {
            return Err(format!("kink -1/{k}: wrong subdifferential {:?}", sd(-kink)?));
        }
        if !expect_point(&sd(ramp_x)?, slope) {
            return Err(format!("ramp point in piece {k}: {:?}", sd(ramp_x)?));
        }
        if !expect_point(&sd(flat_x)?, 0.0) {
            return Err(format!("flat point in piece {k}: {:?}", sd(flat_x)?));
        }
        match sd(junction)? {
            SubdiffSet::Points(ps)
                if ps.len() == 2 && ps.contains(&vec![0.0]) && ps.contains(&vec![slope]) => {}
            other => return Err(format!("junction of piece {k}: {other:?}")),
        }
    }
    if !expect_interval(&sd(0.0)?, -1.0, 1.0) {
        return Err(format!("origin: {:?}", sd(0.0)?));
    }
    match sd(1.0)? {
        SubdiffSet::Intervals(iv)
            if iv.len() == 1 && iv[0].0 == 0.0 && iv[0].1 == f64::INFINITY => {}
        other => return Err(format!("domain edge: {other:?}")),
    }
    if !matches!(sd(1.5)?, SubdiffSet::Empty) {
        return Err(format!("outside the domain: {:?}", sd(1.5)?));
    }

    // Tilt stability at the origin for both tilt radii.
    let plan = SamplePlan::centered(13, 33, 8, &[0.0], 0.5).map_err(|e| e.to_string())?;
    for &v in &[0.2, 0.05] {
        let cert = tilt_stability_certify(&phi, &[0.0], v, &plan).map_err(|e| e.to_string())?;
        if !certified(&cert.report) {
            return Err(format!(
                "tilt stability refuted at v_radius={v}: margin {:?}",
                cert.report.margin
            ));
        }
    }

    // Prox-regularity refutation at (0, 0).
    let reg_plan = SamplePlan::centered(7, 641, 32, &[0.0], 0.2).map_err(|e| e.to_string())?;
    let reg_w = Window::new(vec![0.0], vec![0.0], 0.2, 0.2, 0.1).map_err(|e| e.to_string())?;
    let reg = prox_regularity_certify(&phi, &[0.0], &[0.0], &reg_w, &e1(), &reg_plan)
        .map_err(|e| e.to_string())?;
    if certified(&reg) {
        return Err("prox-regularity unexpectedly certified".into());
    }

    // Combined second-order set at flat-stratum points (c_k, 0): exactly {0}.
    for k in 4..=10 {
        let kf = k as f64;
        let ck = 0.5 * (staircase_junction(kf) + 1.0 / kf);
        let set = combined_second_subdiff(&phi, &[ck], &[0.0], &[1.0])
            .map_err(|e| e.to_string())?;
        let pts = set.sample_points(8.0);
        let exactly_zero = set.contains(&[0.0], 1e-12)
            && !pts.is_empty()
            && pts.iter().all(|z| z[0].abs() <= 1e-12);
        if !exactly_zero {
            return Err(format!("combined set at (c_{k}, 0) is {pts:?}, wanted {{0}}"));
        }
    }

    // Limiting second-order set at (0, 0) contains 0 in direction 1...
    let limiting = limiting_second_subdiff(&phi, &[0.0], &[0.0], &[1.0])
        .map_err(|e| e.to_string())?;
    if !limiting.contains(&[0.0], 1e-9) {
        return Err("limiting set at (0,0) does not contain 0".into());
    }
    // ...so the strictly-positive point-based condition must refute.
    let pb_plan = SamplePlan::centered(7, 33, 8, &[0.0], 0.5).map_err(|e| e.to_string())?;
    let pb = pointbased_check(&phi, &[0.0], &pb_plan).map_err(|e| e.to_string())?;
    if certified(&pb) {
        return Err("point-based condition unexpectedly certified".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 8. Discretized-integral example on the weighted-l1 grid model.
// ---------------------------------------------------------------------------

fn criterion_8() -> Result<(), String> {
    let phi = gallery_with("l1_weighted_square", "m", 512.0);
    let dim = phi.n;
    let ne = NormEval::weighted_l1(vec![1.0 / dim as f64; dim]).map_err(|e| e.to_string())?;
    let plan = SamplePlan::new(5, 0, 48, vec![-1.0; dim], vec![1.0; dim])
        .map_err(|e| e.to_string())?;
    let polyak = polyak_strong_convexity_check(&phi, 2.0, &ne, &plan)
        .map_err(|e| e.to_string())?;
    if !certified(&polyak) {
        return Err(format!("midpoint inequality refuted: margin {:?}", polyak.margin));
    }
    let triples = polyak.params.get("triples").and_then(Value::as_u64).unwrap_or(0);
    if triples < 10_000 {
        return Err(format!("only {triples} triples tested, need at least 10000"));
    }
    let shift_plan = SamplePlan::new(5, 0, 4, vec![-1.0; dim], vec![1.0; dim])
        .map_err(|e| e.to_string())?;
    let shift = shift_strong_convexity_check(&phi, 2.0, &ne, &shift_plan)
        .map_err(|e| e.to_string())?;
    if certified(&shift) {
        return Err("shifted midpoint inequality unexpectedly certified".into());
    }
    if shift.params.get("stress_pairs") != Some(&Value::from(1u64)) {
        return Err("the bundled stress pair was not exercised".into());
    }
    let margin = shift.margin.ok_or("refutation carries no margin")?;
    let gap = -margin;
    let rel = (gap - L1_STRESS_GAP).abs() / L1_STRESS_GAP;
    if rel > 1e-3 {
        return Err(format!(
            "violation gap {gap:e} vs quadrature reference {L1_STRESS_GAP:e} \
             (relative difference {rel:e})"
        ));
    }
    let worst = shift.witnesses.first().ok_or("no witness recorded")?;
    if worst.inputs.get("lambda") != Some(&Value::from(0.5)) {
        return Err("worst witness is not the lambda = 1/2 midpoint".into());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 9. Theorem-consistency sweep over bundled models and seeded windows.
// ---------------------------------------------------------------------------

fn criterion_9() -> Result<(), String> {
    let names = ["abs", "quadratic", "huber_source", "zero_one", "staircase"];
    let sigma = 0.5;
    let mut windows = 0;
    for s in 0..20u64 {
        let phi = gallery(names[(s % 5) as usize]);
        let radius = 0.15 + 0.02 * s as f64;
        let m = e1();
        let w = Window::new(vec![0.0], vec![0.0], radius, radius, radius)
            .map_err(|e| e.to_string())?;
        let plan = SamplePlan::centered(100 + s, 33, 8, &[0.0], radius)
            .map_err(|e| e.to_string())?;
        windows += 1;
        let label = format!("{} r={radius:.2} seed={}", phi.name, 100 + s);

        // svc(sigma) => strong-mono(sigma) => mono.
        let svc = certify_variational_convexity(&phi, &[0.0], &[0.0], sigma, &w, &m, &plan)
            .map_err(|e| e.to_string())?;
        if certified(&svc) && !svc.vacuous {
            for &ms in &[sigma, 0.0] {
                let mono =
                    local_mono_certify(&phi, &w, ms, &GapKind::Duality(m.clone()), &m, &plan)
                        .map_err(|e| e.to_string())?;
                if !certified(&mono) {
                    return Err(format!(
                        "{label}: svc({sigma}) certified but monotonicity({ms}) refuted"
                    ));
                }
            }
        }

        // Quadratic-shift transfer: primal and sheared verdicts agree.
        let transfer = quadratic_shift_transfer(&phi, sigma, &[0.0], &[0.0], &w, &m, &plan)
            .map_err(|e| e.to_string())?;
        if !transfer.agree {
            return Err(format!(
                "{label}: shift transfer disagrees ({} vs {})",
                transfer.primal.verdict.as_str(),
                transfer.sheared.verdict.as_str()
            ));
        }

        // Under prox-regularity + subdifferential continuity:
        // vc <=> second-order PSD, and growth(sigma) <=> svc(sigma) at p = 2.
        if phi.meta.prox_regular.is_some() && phi.meta.subdiff_continuous {
            let vc = certify_variational_convexity(&phi, &[0.0], &[0.0], 0.0, &w, &m, &plan)
                .map_err(|e| e.to_string())?;
            match psd_certify(&phi, &w, 0.0, PsdFlavor::Combined, &plan) {
                Ok(psd) => {
                    if vc.verdict != psd.verdict {
                        return Err(format!(
                            "{label}: vc {} but psd {}",
                            vc.verdict.as_str(),
                            psd.verdict.as_str()
                        ));
                    }
                }
                Err(varcert_core::Error::Capability(_)) => {}
                Err(e) => return Err(e.to_string()),
            }
            let growth = second_order_growth_check(&phi, &w, sigma, &m, &plan)
                .map_err(|e| e.to_string())?;
            if growth.verdict != svc.verdict {
                return Err(format!(
                    "{label}: growth {} but svc {}",
                    growth.verdict.as_str(),
                    svc.verdict.as_str()
                ));
            }
        }
    }
    if windows != 20 {
        return Err(format!("expected 20 windows, ran {windows}"));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// 10. Determinism: byte-identical payloads across thread counts and reruns.
// ---------------------------------------------------------------------------

fn payload_without_timing(stdout: &[u8]) -> String {
    String::from_utf8_lossy(stdout)
        .lines()
        .filter(|l| !l.contains("timing_ms"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn run_binary(threads: &str, args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_varcert"))
        .args(args)
        .env("VARCERT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    Ok(payload_without_timing(&out.stdout))
}

fn criterion_10() -> Result<(), String> {
    let batteries: [&[&str]; 5] = [
        &["gallery", "verify"],
        &["certify", "tilt", "--model", "gallery:staircase", "--center", "0", "--v-radius", "0.2"],
        &[
            "certify", "svc", "--model", "gallery:zero_one", "--sigma", "1", "--center", "0",
            "--eps", "0.5",
        ],
        &["envelope", "--model", "gallery:abs", "--lambda", "1", "--x", "2"],
        &["estimate", "c1", "--p", "1.5", "--n", "2"],
    ];
    for args in &batteries {
        let single = run_binary("1", args)?;
        let multi = run_binary("4", args)?;
        let rerun = run_binary("1", args)?;
        if single.is_empty() {
            return Err(format!("no payload produced for {args:?}"));
        }
        if single != multi {
            return Err(format!("payload differs between 1 and 4 threads for {args:?}"));
        }
        if single != rerun {
            return Err(format!("payload differs between reruns for {args:?}"));
        }
    }
    // Library-level rerun: serialized reports must be byte-identical too.
    let once = criterion_6_payload()?;
    let twice = criterion_6_payload()?;
    if once != twice {
        return Err("serialized report payloads differ between identical reruns".into());
    }
    Ok(())
}

fn criterion_6_payload() -> Result<String, String> {
    let phi = gallery("zero_one");
    let w = Window::new(vec![0.0], vec![0.0], 0.5, 0.5, 0.5).map_err(|e| e.to_string())?;
    let plan = SamplePlan::centered(11, 33, 8, &[0.0], 0.5).map_err(|e| e.to_string())?;
    let svc = certify_variational_convexity(&phi, &[0.0], &[0.0], 1.0, &w, &e1(), &plan)
        .map_err(|e| e.to_string())?;
    let psd = psd_certify(&phi, &w, 1.0, PsdFlavor::Combined, &plan).map_err(|e| e.to_string())?;
    serde_json::to_string(&Value::Array(vec![svc.to_json(), psd.to_json()]))
        .map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance_criteria() {
    let mut gate = Gate { failures: Vec::new() };
    gate.run(1, Duration::from_secs(5), criterion_1);
    gate.run(2, Duration::from_secs(30), criterion_2);
    gate.run(3, Duration::from_secs(10), criterion_3);
    gate.run(4, Duration::from_secs(30), criterion_4);
    gate.run(5, Duration::from_secs(10), criterion_5);
    gate.run(6, Duration::from_secs(10), criterion_6);
    gate.run(7, Duration::from_secs(30), criterion_7);
    gate.run(8, Duration::from_secs(30), criterion_8);
    gate.run(9, Duration::from_secs(120), criterion_9);
    gate.run(10, Duration::from_secs(120), criterion_10);
    assert!(
        gate.failures.is_empty(),
        "acceptance failures:\n{}",
        gate.failures.join("\n")
    );
}
