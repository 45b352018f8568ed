use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use casimir_core::bogoliubov::{self, first_order_pair, linearized_pair, numeric_pair, photon_number, spectrum_analytic, Provenance};
use casimir_core::cavity::CouplingMatrix;
use casimir_core::evolution::{integrate_full, integrate_linearized};
use casimir_core::par::{map_slice, with_workers};
use casimir_core::perturbation::{x_first_order, x_zeroth};
use casimir_core::state::{qp_from_x, x_from_qp};
use casimir_core::{CasimirError, CavityParams, Execution, IntegratorConfig, Sign, Start, XState};

use crate::args::{ExperimentKind, Fault};
use crate::output::{Output, Style};
use crate::record::{ComparisonRecord, DefectRecord, PropertyRecord, RunRecord, SpectrumRecord, SummaryRow};
use crate::spec::{Point, RunSpec};

/// Outcome of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// Some point or property failed; already reported.
    Failed,
}

const COMPARE_SAMPLES: usize = 20;

fn execution(spec: &RunSpec) -> Execution {
    if spec.workers == 1 {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn first_point(spec: &RunSpec) -> Point {
    spec.points()[0]
}

fn warn_if_large(rec: &mut RunRecord, p: &CavityParams) {
    if p.perturbative_warning() {
        rec.warnings.push(format!(
            "εω₁T = {:.3} exceeds {}; the perturbative spectrum is unreliable",
            p.epsilon_omega_t(),
            casimir_core::params::PERTURBATIVE_LIMIT
        ));
    }
}

fn print_rows(rows: &[SummaryRow]) {
    println!(
        "{:>8} {:>10} {:>5} {:>4} {:>4} {:>13} {:>13} {:>10}  provenance",
        "gamma", "epsilon", "M", "K", "k", "N_numeric", "N_analytic", "rel_err"
    );
    let f = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_else(|| "-".into());
    for r in rows {
        println!(
            "{:>8} {:>10.3e} {:>5} {:>4} {:>4} {:>13} {:>13} {:>10}  {}",
            r.gamma,
            r.epsilon,
            r.periods,
            r.modes,
            r.k.map(|k| k.to_string()).unwrap_or_else(|| "-".into()),
            f(r.n_numeric),
            f(r.n_analytic),
            r.rel_err.map(|x| format!("{x:.2e}")).unwrap_or_else(|| "-".into()),
            r.provenance
        );
    }
}

/// Full integration of one point, compared against the resonant closed form
/// when `γ` is an integer.
fn simulate_point(spec: &RunSpec, point: &Point, exec: Execution) -> anyhow::Result<(RunRecord, Vec<SummaryRow>)> {
    let start = Instant::now();
    let p = point.params(spec.l0)?;
    let mut rec = RunRecord::new(spec, Some(*point));
    warn_if_large(&mut rec, &p);
    let pair = numeric_pair(&p, &spec.integrator, exec)?;
    let numeric = SpectrumRecord::new(&photon_number(&pair), p.epsilon());
    let defect = DefectRecord::new(&pair, &p, spec.defect_c);
    if !defect.within {
        rec.warnings
            .push(format!("unitarity defect {:.3e} above {:.1e}", defect.defect, defect.tolerance));
    }
    rec.defects.push(defect);
    let analytic = match p.integer_gamma() {
        Ok(_) => {
            rec.defects
                .push(DefectRecord::new(&bogoliubov::bogoliubov_resonant_analytic(&p)?, &p, spec.defect_c));
            Some(SpectrumRecord::new(&spectrum_analytic(&p)?, p.epsilon()))
        }
        Err(_) => None,
    };
    let rows = SummaryRow::compare(point, &numeric, analytic.as_ref());
    rec.spectra.push(numeric);
    rec.spectra.extend(analytic);
    rec.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok((rec, rows))
}

pub fn simulate(spec: &RunSpec, out: &Output) -> anyhow::Result<Status> {
    let point = first_point(spec);
    let (rec, rows) = simulate_point(spec, &point, execution(spec))?;
    for w in &rec.warnings {
        eprintln!("warning: {w}");
    }
    out.summary(&rows)?;
    out.record(&format!("simulate-{}", point.label()), &rec)?;
    print_rows(&rows);
    Ok(Status::Ok)
}

pub fn perturb(spec: &RunSpec, out: &Output) -> anyhow::Result<Status> {
    let start = Instant::now();
    let point = first_point(spec);
    let p = point.params(spec.l0)?;
    let mut rec = RunRecord::new(spec, Some(point));
    warn_if_large(&mut rec, &p);
    let pair = first_order_pair(&p)?;
    rec.defects.push(DefectRecord::new(&pair, &p, spec.defect_c));
    rec.spectra.push(SpectrumRecord::new(&photon_number(&pair), p.epsilon()));
    if p.integer_gamma().is_ok() {
        rec.spectra.push(SpectrumRecord::new(&spectrum_analytic(&p)?, p.epsilon()));
    } else {
        rec.warnings
            .push(format!("γ = {} is not an integer; only the first-order spectrum is reported", p.gamma()));
    }
    let mut rows = Vec::new();
    for k in 0..p.modes() {
        for s in &rec.spectra {
            rows.push(SummaryRow::analytic(&point, s).swap_remove(k));
        }
    }
    rec.elapsed_seconds = start.elapsed().as_secs_f64();
    for w in &rec.warnings {
        eprintln!("warning: {w}");
    }
    out.summary(&rows)?;
    out.record(&format!("perturb-{}", point.label()), &rec)?;
    print_rows(&rows);
    Ok(Status::Ok)
}

/// `max |Q_full − Q_lin|` over an even grid on `(0, T]`, both systems started
/// from the static vacuum.
fn linear_deviation(p: &CavityParams, cfg: &IntegratorConfig, exec: Execution) -> anyhow::Result<f64> {
    let cfg = cfg.with_start(Start::Static);
    let times: Vec<f64> = (1..=COMPARE_SAMPLES).map(|i| p.duration() * i as f64 / COMPARE_SAMPLES as f64).collect();
    let full = integrate_full(p, &cfg, &times, exec)?;
    let lin = integrate_linearized(p, &cfg, &times, exec)?;
    let mut worst: f64 = 0.0;
    for (a, x) in full.iter().zip(&lin) {
        let b = qp_from_x(x, p)?;
        for (u, v) in a.q.iter().zip(b.q.iter()) {
            worst = worst.max((u - v).norm());
        }
    }
    Ok(worst)
}

pub fn compare(spec: &RunSpec, out: &Output) -> anyhow::Result<Status> {
    let start = Instant::now();
    let exec = execution(spec);
    let points = spec.points();
    let base = points[0].params(spec.l0)?;
    base.integer_gamma()?;
    let mut rec = RunRecord::new(spec, Some(points[0]));
    let mut rows = Vec::new();
    let mut deviations = Vec::new();
    for point in &points {
        let p = point.params(spec.l0)?;
        warn_if_large(&mut rec, &p);
        let full = numeric_pair(&p, &spec.integrator, exec)?;
        let lin = linearized_pair(&p, &spec.integrator, exec)?;
        let analytic = SpectrumRecord::new(&spectrum_analytic(&p)?, p.epsilon());
        let mut spectra = Vec::new();
        for pair in [&full, &lin] {
            rec.defects.push(DefectRecord::new(pair, &p, spec.defect_c));
            let s = SpectrumRecord::new(&photon_number(pair), p.epsilon());
            rows.extend(SummaryRow::compare(point, &s, Some(&analytic)));
            spectra.push(s);
        }
        rec.spectra.extend(spectra);
        rec.spectra.push(analytic);
        deviations.push(linear_deviation(&p, &spec.integrator, exec)?);
    }
    let epsilon: Vec<f64> = points.iter().map(|pt| pt.epsilon).collect();
    let scaling_exponent = (deviations.len() == 2).then(|| (deviations[0] / deviations[1]).ln() / (epsilon[0] / epsilon[1]).ln());
    rec.comparison = Some(ComparisonRecord {
        provenance: format!("{}/{}", Provenance::NumericFull, Provenance::NumericLinearized),
        epsilon: epsilon.clone(),
        max_deviation: deviations.clone(),
        samples: COMPARE_SAMPLES,
        scaling_exponent,
    });
    rec.elapsed_seconds = start.elapsed().as_secs_f64();
    for w in &rec.warnings {
        eprintln!("warning: {w}");
    }
    out.summary(&rows)?;
    out.record(&format!("compare-{}", points[0].label()), &rec)?;
    print_rows(&rows);
    for (e, d) in epsilon.iter().zip(&deviations) {
        println!("epsilon {e:e}: max |Q_full - Q_lin| = {d:.3e}");
    }
    if let Some(x) = scaling_exponent {
        println!("deviation scales as epsilon^{x:.3}");
    }
    Ok(Status::Ok)
}

pub fn sweep(spec: &RunSpec, out: &Output, style: Style) -> anyhow::Result<Status> {
    let points = spec.points();
    let done = AtomicUsize::new(0);
    let total = points.len();
    let outer = execution(spec);
    let results = with_workers(spec.workers, || {
        map_slice(outer, &points, |pt| {
            let res = simulate_point(spec, pt, Execution::Sequential);
            let i = done.fetch_add(1, Ordering::Relaxed) + 1;
            if style.progress {
                eprintln!("[{i}/{total}] {}", pt.label());
            }
            res
        })
    });
    let mut rows = Vec::new();
    let mut failed = 0;
    for (pt, res) in points.iter().zip(results) {
        let label = format!("sweep-{}", pt.label());
        match res {
            Ok((rec, r)) => {
                let peak = rec.spectra[0].peak_modes.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
                println!(
                    "{}: peak mode(s) {peak}, N_max = {:.4e}",
                    pt.label(),
                    rec.spectra[0].counts.iter().copied().fold(0.0, f64::max)
                );
                out.record(&label, &rec)?;
                rows.extend(r);
            }
            Err(e) => {
                failed += 1;
                let msg = format!("{e:#}");
                eprintln!("error: {}: {msg}", pt.label());
                let mut rec = RunRecord::new(spec, Some(*pt));
                rec.error = Some(msg.clone());
                out.record(&label, &rec)?;
                rows.push(SummaryRow::failed(pt, &msg));
            }
        }
    }
    out.summary(&rows)?;
    if failed > 0 {
        eprintln!("{failed} of {total} points failed");
        Ok(Status::Failed)
    } else {
        Ok(Status::Ok)
    }
}

fn property(name: &str, measured: f64, bound: String, passed: bool) -> PropertyRecord {
    PropertyRecord {
        name: name.into(),
        measured,
        bound,
        passed,
    }
}

fn coupling_check(k_max: usize, fault: Option<Fault>) -> anyhow::Result<PropertyRecord> {
    let mut g = CouplingMatrix::new(k_max);
    if fault == Some(Fault::GSign) && k_max >= 2 {
        let mut entries = g.as_slice().to_vec();
        entries[1] = -entries[1];
        g = CouplingMatrix::from_entries(k_max, entries)?;
    }
    let d = g.antisymmetry_defect();
    Ok(property("coupling-antisymmetry", d, "<= 1e-14".into(), d <= 1e-14))
}

fn first_order_state(t: f64, p: &CavityParams) -> anyhow::Result<XState> {
    let mut x = XState::zeros(p.modes(), t);
    for n in 1..=p.modes() {
        for k in 1..=p.modes() {
            for sigma in Sign::BOTH {
                x.x[[n - 1, casimir_core::cavity::slot(k, sigma)]] = x_zeroth(n, k, sigma, t, p)? + p.epsilon() * x_first_order(n, k, sigma, t, p)?;
            }
        }
    }
    Ok(x)
}

fn round_trip_check(p: &CavityParams) -> anyhow::Result<PropertyRecord> {
    let x = first_order_state(p.duration() / 3.0, p)?;
    let back = x_from_qp(&qp_from_x(&x, p)?, p)?;
    let d = x.x.iter().zip(back.x.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    Ok(property("x-qp-round-trip", d, "<= 1e-12".into(), d <= 1e-12))
}

fn free_check(p: &CavityParams, cfg: &IntegratorConfig, exec: Execution) -> anyhow::Result<PropertyRecord> {
    let pair = numeric_pair(&p.with_epsilon(0.0)?, cfg, exec)?;
    let beta = pair.beta.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let d = beta.max(bogoliubov::unitarity_defect(&pair));
    Ok(property("free-field", d, "<= 1e-10".into(), d <= 1e-10))
}

/// Ratio of `max |Q − Q⁽⁰⁾ − εQ⁽¹⁾|` at `ε` and `ε/2`, expected near 4.
fn scaling_check(p: &CavityParams, cfg: &IntegratorConfig, exec: Execution) -> anyhow::Result<PropertyRecord> {
    let cfg = cfg.with_start(Start::Static);
    let gap = |eps: f64| -> anyhow::Result<f64> {
        let q = p.with_epsilon(eps)?;
        let times: Vec<f64> = (1..=10).map(|i| q.duration() * i as f64 / 10.0).collect();
        let states = integrate_full(&q, &cfg, &times, exec)?;
        let mut worst: f64 = 0.0;
        for s in &states {
            let approx = qp_from_x(&first_order_state(s.t, &q)?, &q)?;
            for (a, b) in s.q.iter().zip(approx.q.iter()) {
                worst = worst.max((a - b).norm());
            }
        }
        Ok(worst)
    };
    let eps = if p.epsilon() > 0.0 { p.epsilon() } else { 1e-3 };
    let ratio = gap(eps)? / gap(eps / 2.0)?;
    Ok(property("epsilon-scaling", ratio, "in [3, 5]".into(), (3.0..=5.0).contains(&ratio)))
}

fn unitarity_check(p: &CavityParams, cfg: &IntegratorConfig, exec: Execution, threshold: f64) -> anyhow::Result<PropertyRecord> {
    let pair = numeric_pair(p, cfg, exec)?;
    let d = bogoliubov::unitarity_defect_within(&pair, p.modes() / 2);
    Ok(property("unitarity", d, format!("<= {threshold:e}"), d <= threshold))
}

fn analytic_unitarity_check(p: &CavityParams, c: f64) -> anyhow::Result<PropertyRecord> {
    let rec = DefectRecord::new(&first_order_pair(p)?, p, c);
    Ok(property("first-order-unitarity", rec.defect, format!("<= {:.3e}", rec.tolerance), rec.within))
}

/// Off resonance the first-order amplitudes stay bounded: their maximum over
/// `[0, 4T]` is no larger than over `[0, T]` up to a factor 2.
fn detuning_check(p: &CavityParams) -> anyhow::Result<PropertyRecord> {
    let q = CavityParams::new(p.l0(), p.epsilon(), p.gamma().round() + 0.5, p.duration(), p.modes())?;
    let peak = |span: f64| -> anyhow::Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 1..=40 {
            let t = span * i as f64 / 40.0;
            for n in 1..=q.modes() {
                for k in 1..=q.modes() {
                    for sigma in Sign::BOTH {
                        worst = worst.max(x_first_order(n, k, sigma, t, &q)?.norm());
                    }
                }
            }
        }
        Ok(worst)
    };
    let ratio = peak(4.0 * q.duration())? / peak(q.duration())?;
    Ok(property("detuned-first-order-bounded", ratio, "< 2".into(), ratio < 2.0))
}

pub fn validate(spec: &RunSpec, out: &Output, style: Style) -> anyhow::Result<Status> {
    let start = Instant::now();
    let exec = execution(spec);
    let point = first_point(spec);
    let p = point.params(spec.l0)?;
    let cfg = &spec.integrator;
    let mut rec = RunRecord::new(spec, Some(point));
    warn_if_large(&mut rec, &p);
    let checks: Vec<anyhow::Result<PropertyRecord>> = vec![
        coupling_check(p.modes(), spec.inject_fault),
        round_trip_check(&p),
        free_check(&p, cfg, exec),
        scaling_check(&p, cfg, exec),
        unitarity_check(&p, cfg, exec, spec.unitarity_threshold),
        analytic_unitarity_check(&p, spec.defect_c),
        detuning_check(&p),
    ];
    for c in checks {
        match c {
            Ok(prop) => rec.properties.push(prop),
            Err(e) if e.downcast_ref::<CasimirError>().is_some_and(|c| !c.is_input_error()) => {
                rec.properties.push(property("numerical-failure", f64::NAN, format!("{e:#}"), false));
            }
            Err(e) => return Err(e),
        }
    }
    rec.elapsed_seconds = start.elapsed().as_secs_f64();
    for w in &rec.warnings {
        eprintln!("warning: {w}");
    }
    for prop in &rec.properties {
        println!(
            "{} {:<28} measured {:<12.4e} bound {}",
            style.verdict(prop.passed),
            prop.name,
            prop.measured,
            prop.bound
        );
    }
    out.validation(&rec.properties)?;
    out.record(&format!("validate-{}", point.label()), &rec)?;
    let failed = rec.properties.iter().filter(|p| !p.passed).count();
    if failed > 0 {
        eprintln!("{failed} of {} properties failed", rec.properties.len());
        Ok(Status::Failed)
    } else {
        Ok(Status::Ok)
    }
}

pub fn dispatch(spec: &RunSpec, style: Style) -> anyhow::Result<Status> {
    let out = Output::new(spec)?;
    let exec_run = || match spec.kind {
        ExperimentKind::Simulate => simulate(spec, &out),
        ExperimentKind::Perturb => perturb(spec, &out),
        ExperimentKind::Compare => compare(spec, &out),
        ExperimentKind::Sweep => sweep(spec, &out, style),
        ExperimentKind::Validate => validate(spec, &out, style),
    };
    with_workers(spec.workers, exec_run)
}
