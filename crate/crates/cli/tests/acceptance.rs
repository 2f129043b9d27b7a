//! Acceptance suite: prints one `ACn PASS|FAIL` line per criterion with the
//! measured numbers and exits nonzero if any criterion fails.

use std::time::Instant;

use tpa_core::channels::tpa_generator_op;
use tpa_core::fock::{FockCutoff, ProbeSpec};
use tpa_core::metrology::{
    fisher_numeric, fisher_ratio_coh_over_sv, fit_power_law, limit_table, local_extrema,
    prefactor_at_exponent, sensitivity_analytic, sensitivity_numeric, squeeze_scan,
    sv_photon_sensitivity, Observable,
};
use tpa_core::validate::{
    run_validate, run_validate_with, CheckStatus, Generator, ValidateOptions,
};
use tpa_core::{LossSpec, QuadGridSpec};

type Outcome = (bool, String);

fn report(ok: bool, detail: String) -> Outcome {
    (ok, detail)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn loss(eta: f64) -> LossSpec {
    LossSpec::new(eta).unwrap()
}

fn cut() -> FockCutoff {
    FockCutoff::default()
}

fn ac1_coherent_photon_counting() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for &n in &[1.0f64, 4.0, 16.0, 64.0] {
        let spec = ProbeSpec::coherent_photons(n, 0.0).unwrap();
        for &eta in &[0.1, 0.5, 1.0] {
            let s =
                sensitivity_numeric(&spec, &loss(eta), Observable::PhotonNumber, &cut()).unwrap();
            worst = worst.max(rel(s.delta_eps_sq().unwrap(), 1.0 / (eta * n.powi(3))));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    report(
        worst < 1e-6 && secs < 10.0,
        format!("max rel err {worst:.3e}, {secs:.2} s"),
    )
}

fn ac2_squeezed_vacuum_loss_independence() -> Outcome {
    let n_r = 50.0;
    let limit = 2.0 / (9.0 * n_r * n_r);
    let dev_02 = rel(sv_photon_sensitivity(n_r, 0.2), limit);
    let dev_09 = rel(sv_photon_sensitivity(n_r, 0.9), limit);
    let spec = ProbeSpec::squeezed_vacuum_photons(n_r).unwrap();
    let mut num_err = 0.0f64;
    for &eta in &[0.2, 0.9] {
        let num = sensitivity_numeric(&spec, &loss(eta), Observable::PhotonNumber, &cut()).unwrap();
        num_err = num_err.max(rel(
            num.delta_eps_sq().unwrap(),
            sv_photon_sensitivity(n_r, eta),
        ));
    }
    report(dev_02 < 0.12 && dev_09 < 0.03 && num_err < 1e-6,
        format!("deviation from limit {dev_02:.4} (eta 0.2), {dev_09:.4} (eta 0.9); numeric vs analytic {num_err:.2e}"),
    )
}

fn ac3_fisher_convergence_squeezed_vacuum() -> Outcome {
    let spec = ProbeSpec::squeezed_vacuum_photons(50.0).unwrap();
    let grid = QuadGridSpec::default();
    let mut fis = Vec::new();
    let mut gains = Vec::new();
    for &eta in &[0.1, 0.9] {
        let fi = fisher_numeric(&spec, &loss(eta), Observable::PhotonNumber, &cut(), &grid)
            .unwrap()
            .fi;
        let s = sensitivity_analytic(&spec, &loss(eta), Observable::PhotonNumber);
        gains.push(fi * s.delta_eps_sq().unwrap());
        fis.push(fi);
    }
    let spread = (fis[0] - fis[1]).abs() / fis[0].max(fis[1]);
    let ok = spread < 0.10 && gains.iter().all(|g| (1.3..=3.0).contains(g));
    report(
        ok,
        format!(
            "FI {:.1} (eta 0.1) vs {:.1} (eta 0.9), spread {spread:.4}; FI*var {:.3}, {:.3}",
            fis[0], fis[1], gains[0], gains[1]
        ),
    )
}

fn ac4_coherent_fisher_matches_mean_value() -> Outcome {
    let spec = ProbeSpec::coherent_photons(10.0, 0.0).unwrap();
    let l = loss(0.5);
    let fi = fisher_numeric(
        &spec,
        &l,
        Observable::PhotonNumber,
        &cut(),
        &QuadGridSpec::default(),
    )
    .unwrap()
    .fi;
    let s = sensitivity_analytic(&spec, &l, Observable::PhotonNumber)
        .delta_eps_sq()
        .unwrap();
    let dev = (fi * s - 1.0).abs();
    report(dev < 0.05, format!("FI*var - 1 = {dev:.4}"))
}

fn sv_quadrature_fisher(ns: &[f64], eta: f64, obs: Observable, tail_tol: f64) -> Vec<f64> {
    let cutoff = FockCutoff::adaptive(tail_tol).unwrap().with_cap(1024);
    ns.iter()
        .map(|&n| {
            let spec = ProbeSpec::squeezed_vacuum_photons(n).unwrap();
            fisher_numeric(&spec, &loss(eta), obs, &cutoff, &QuadGridSpec::default())
                .unwrap()
                .fi
        })
        .collect()
}

fn ac5_quadrature_scaling() -> Outcome {
    let start = Instant::now();
    let ns_sq: Vec<f64> = (0..7).map(|i| 5.0 + 2.5 * i as f64).collect();
    let fi_sq = sv_quadrature_fisher(&ns_sq, 1.0, Observable::QuadP, 1e-10);
    let fit_sq = fit_power_law(&ns_sq, &fi_sq).unwrap();
    let pre_sq = prefactor_at_exponent(&ns_sq, &fi_sq, 4.0);

    let ns_anti: Vec<f64> = (0..7).map(|i| 10.0 + 5.0 * i as f64).collect();
    let fi_anti = sv_quadrature_fisher(&ns_anti, 0.5, Observable::QuadQ, 1e-5);
    let fit_anti = fit_power_law(&ns_anti, &fi_anti).unwrap();
    let pre_anti = prefactor_at_exponent(&ns_anti, &fi_anti, 2.0);
    let secs = start.elapsed().as_secs_f64();

    let ok = (fit_sq.exponent - 4.0).abs() <= 0.15
        && rel(pre_sq, 32.0) <= 0.20
        && (fit_anti.exponent - 2.0).abs() <= 0.15
        && rel(pre_anti, 10.5) <= 0.20
        && secs < 300.0;
    report(ok,
        format!(
            "squeezed: slope {:.4}, prefactor {pre_sq:.3} (free fit {:.3}); anti-squeezed: slope {:.4}, prefactor {pre_anti:.3} (free fit {:.3}); {secs:.1} s",
            fit_sq.exponent, fit_sq.prefactor, fit_anti.exponent, fit_anti.prefactor
        ),
    )
}

fn ac6_coherent_quadrature_fisher() -> Outcome {
    let n = 25.0f64;
    let spec = ProbeSpec::coherent_photons(n, 0.0).unwrap();
    let grid = QuadGridSpec::default();
    let fi = |eta: f64, obs| {
        fisher_numeric(&spec, &loss(eta), obs, &cut(), &grid)
            .unwrap()
            .fi
    };
    let (q1, p1, q_half) = (
        fi(1.0, Observable::QuadQ),
        fi(1.0, Observable::QuadP),
        fi(0.5, Observable::QuadQ),
    );
    let dq = rel(q1, n.powi(3) + n * n / 2.0);
    let dp = rel(p1, n * n / 2.0);
    report(dq < 0.05 && dp < 0.05 && q_half < q1,
        format!("F_q rel err {dq:.2e}, F_p rel err {dp:.2e}; F_q(eta 0.5) = {q_half:.1} < F_q(eta 1) = {q1:.1}"),
    )
}

fn ac7_limit_table() -> Outcome {
    let (r, n, eta, phi) = (1.0f64, 100.0f64, 0.5f64, std::f64::consts::FRAC_PI_4);
    let rows = limit_table(r, n, eta, phi).unwrap();
    let n3 = n.powi(3);
    let lf = (1.0 - eta) / eta;
    let hand = [
        2.0 / (9.0 * n * n),
        1.0 / (eta * n3),
        (2.0 * r).exp() / n3,
        (-4.0 * r).exp() / n3,
        1.0 / (eta * n3 * phi.cos().powi(2)),
        (-2.0 * r).exp() * 32.0 / (25.0 * n),
        (2.0 * r).exp() / n3,
        1.0 / (eta * n3 * phi.sin().powi(2)),
        lf * (-6.0 * r).exp() * 32.0 / (9.0 * n),
        lf * (-2.0 * r).exp() / n3,
    ];
    let exact = rows.len() == hand.len()
        && rows
            .iter()
            .zip(&hand)
            .all(|(row, h)| rel(row.value, *h) < 1e-14);
    let mut checked = Vec::new();
    let wide = FockCutoff::default().with_cap(16_384);
    let mut worst = 0.0f64;
    for (i, row) in rows.iter().enumerate().filter(|(_, r)| r.applicable) {
        let num = sensitivity_numeric(&row.probe, &loss(eta), row.observable, &wide).unwrap();
        let dev = rel(num.delta_eps_sq().unwrap(), row.value);
        worst = worst.max(dev);
        checked.push(format!(
            "row {i} {} {}: {dev:.4}",
            row.observable, row.state
        ));
    }
    report(
        exact && worst < 0.15,
        format!(
            "closed forms exact: {exact}; numeric deviations [{}]",
            checked.join(", ")
        ),
    )
}

fn ac8_squeezed_advantage_region() -> Outcome {
    let l = loss(0.99);
    let ns: Vec<f64> = (1..=30).map(f64::from).collect();
    let ratios: Vec<f64> = ns
        .iter()
        .map(|&n| fisher_ratio_coh_over_sv(n, &l, &cut()).unwrap())
        .collect();
    let crossing = ns
        .windows(2)
        .zip(ratios.windows(2))
        .find(|(_, r)| (r[0] - 1.0) * (r[1] - 1.0) <= 0.0)
        .map(|(n, r)| n[0] + (1.0 - r[0]) / (r[1] - r[0]) * (n[1] - n[0]));
    let ok = crossing.is_some_and(|c| (5.0..=20.0).contains(&c));
    report(ok, format!("ratio crosses 1 at n* = {crossing:?}"))
}

fn ac9_optimal_squeezing_scan() -> Outcome {
    let fis = |nbar: f64, eta: f64| -> Vec<f64> {
        squeeze_scan(nbar, &loss(eta), 26, &cut())
            .unwrap()
            .iter()
            .map(|p| p.evaluation.fisher.fi)
            .collect()
    };
    let a = fis(50.0, 0.75);
    let (maxima, minima) = local_extrema(&a);
    let max_then_min = maxima.iter().any(|&i| minima.iter().any(|&j| j > i));
    let b = fis(25.0, 0.25);
    let argmax = b
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    let ok = max_then_min && argmax == b.len() - 1;
    report(ok,
        format!("eta 0.75: maxima at {maxima:?}, minima at {minima:?}; eta 0.25: global max at index {argmax} of {}", b.len()),
    )
}

fn ac10_property_suites() -> Outcome {
    let start = Instant::now();
    let lossy = run_validate(&ValidateOptions::default());
    let lossless = run_validate(&ValidateOptions {
        eta: 1.0,
        ..ValidateOptions::default()
    });
    let skipped = lossless
        .checks
        .iter()
        .filter(|c| c.status == CheckStatus::NotApplicable)
        .count();
    let mutated: &Generator = &|rho| tpa_generator_op(rho).mapv(|z| z * 2.0);
    let mutant = run_validate_with(&ValidateOptions::default(), mutated);
    let gradient_caught = mutant.checks.iter().any(|c| {
        c.name == "channels.gradient_vs_finite_difference" && c.status == CheckStatus::Fail
    });
    let secs = start.elapsed().as_secs_f64();
    let failures: Vec<&str> = lossy
        .failures()
        .chain(lossless.failures())
        .map(|c| c.name.as_str())
        .collect();
    let ok = lossy.passed() && lossless.passed() && skipped > 0 && gradient_caught && secs < 120.0;
    report(ok,
        format!(
            "{} checks, failures {failures:?}; {skipped} skipped at eta 1; mutant caught: {gradient_caught}; {secs:.1} s",
            lossy.checks.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("AC1", ac1_coherent_photon_counting),
        ("AC2", ac2_squeezed_vacuum_loss_independence),
        ("AC3", ac3_fisher_convergence_squeezed_vacuum),
        ("AC4", ac4_coherent_fisher_matches_mean_value),
        ("AC5", ac5_quadrature_scaling),
        ("AC6", ac6_coherent_quadrature_fisher),
        ("AC7", ac7_limit_table),
        ("AC8", ac8_squeezed_advantage_region),
        ("AC9", ac9_optimal_squeezing_scan),
        ("AC10", ac10_property_suites),
    ];
    let mut failed = 0;
    for (id, check) in criteria {
        let (ok, detail) = match std::panic::catch_unwind(check) {
            Ok(outcome) => outcome,
            Err(e) => (
                false,
                format!(
                    "panicked: {:?}",
                    e.downcast_ref::<String>()
                        .map(String::as_str)
                        .or(e.downcast_ref::<&str>().copied())
                ),
            ),
        };
        println!("{id} {}: {detail}", if ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
