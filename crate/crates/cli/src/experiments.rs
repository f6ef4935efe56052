//! One function per experiment kind. Each writes its data files through an
//! [`OutputDir`] and returns lines for the terminal.

use std::path::Path;

use chrono::{SecondsFormat, Utc};
use circlezeros::epstein::{epstein_zero_spacings, reduce_form, EpsteinSeries, QuadraticForm};
use circlezeros::measures::{
    closed_form_jacobian, finite_difference_jacobian, random_nondegenerate_point, CoefficientMap, Parity,
};
use circlezeros::rng::{derive_seed, rng_from_seed};
use circlezeros::roots::default_tolerance;
use circlezeros::samplers::{sample_angles, sample_gaussian_sr, AngleDomain, EnsembleSpec, Model, SampleBatch};
use circlezeros::special::gamma;
use circlezeros::stats::{
    dunnage_real_zero_count, edge_zone_statistics, fraction_on_circle, pair_correlation, repulsion_exponent,
    spacing_histogram, two_sample_test, unfolded_gaps, Histogram,
};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::compare::{load_gaps, BatchHeader};
use crate::config::{
    CompareConfig, CompareInput, DunnageConfig, EpsteinEvalConfig, EpsteinValue, EpsteinZerosConfig, Experiment,
    FractionConfig, JacobianConfig, JacobianFamily, RunConfig, SampleConfig, SourceConfig, SpacingsConfig,
};
use crate::error::{CliError, Result};
use crate::manifest::{code_version, RunManifest};
use crate::output::OutputDir;

/// Result of [`run`]: the manifest (already written), whether a compare run
/// rejected its null hypothesis, and lines to print.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub rejected: Option<bool>,
    pub report: Vec<String>,
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

/// Run a resolved config, writing data files and `manifest.json` into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<RunOutcome> {
    config.validate()?;
    let started = now();
    let config_json = serde_json::to_value(config).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
    let name = config.experiment.name();
    let mut dir = OutputDir::create(out, name, config_json)?;
    let mut report = Vec::new();
    let rejected = match &config.experiment {
        Experiment::Sample(c) => sample(c, &mut dir, &mut report).map(|_| None),
        Experiment::JacobianCheck(c) => jacobian_check(config.seed, c, &mut dir, &mut report).map(|_| None),
        Experiment::Spacings(c) => spacings(c, &mut dir, &mut report).map(|_| None),
        Experiment::Fraction(c) => fraction(config, c, &mut dir, &mut report).map(|_| None),
        Experiment::Dunnage(c) => dunnage(config.seed, c, &mut dir, &mut report).map(|_| None),
        Experiment::EpsteinEval(c) => epstein_eval(c, &mut dir, &mut report).map(|_| None),
        Experiment::EpsteinZeros(c) => epstein_zeros(config.seed, c, &mut dir, &mut report).map(|_| None),
        Experiment::Compare(c) => compare(config.alpha, c, &mut dir, &mut report).map(Some),
    }?;
    let manifest = RunManifest {
        experiment: name.to_string(),
        config: config.clone(),
        seed: config.seed,
        code_version: code_version(),
        started,
        finished: now(),
        workers: rayon::current_num_threads(),
        outputs: dir.finish(),
    };
    let path = manifest.write(out)?;
    report.push(format!("manifest: {}", path.display()));
    Ok(RunOutcome {
        manifest,
        rejected,
        report,
    })
}

/// Re-run `manifest` into `out` and require byte-identical data files.
pub fn replay(manifest: &RunManifest, out: &Path) -> Result<RunOutcome> {
    let outcome = run(&manifest.config, out)?;
    let diff = manifest.differing_outputs(&outcome.manifest);
    if !diff.is_empty() {
        return Err(CliError::ReplayMismatch { files: diff });
    }
    Ok(outcome)
}

fn draw(source: &SourceConfig) -> Result<SampleBatch> {
    let spec = source.spec();
    sample_angles(&spec, source.count, source.max_attempts)
        .map_err(|e| CliError::library(format!("sampling {:?} n={}", spec.model, spec.n), e))
}

fn write_batch(dir: &mut OutputDir, batch: &SampleBatch) -> Result<()> {
    let header = BatchHeader::of(batch);
    let extra = json!({ "batch": header });
    dir.jsonl("angles.jsonl", &batch.angle_sets, extra.clone())?;
    let rows = batch
        .angle_sets
        .iter()
        .enumerate()
        .flat_map(|(i, set)| set.iter().enumerate().map(move |(k, &a)| (i, k, a)));
    dir.csv("angles.csv", &["set", "index", "angle"], rows, extra)
}

fn sample(c: &SampleConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<()> {
    let spec = c.source.spec();
    if spec.model == Model::GaussianSr {
        let polys = sample_gaussian_sr(&spec, c.source.count).map_err(|e| CliError::library("GAUSSIAN_SR", e))?;
        dir.jsonl("polynomials.jsonl", &polys, json!({ "spec": spec }))?;
        let est = fraction_on_circle(&polys, spec.tolerance()).map_err(|e| CliError::library("fraction", e))?;
        report.push(format!(
            "{} polynomials, fraction on circle {:.4} +- {:.4}",
            polys.len(),
            est.mean,
            est.stderr
        ));
        return dir.json(
            "summary.json",
            &json!({ "count": polys.len(), "fraction_on_circle": est }),
            json!({ "spec": spec }),
        );
    }
    let batch = draw(&c.source)?;
    write_batch(dir, &batch)?;
    let header = BatchHeader::of(&batch);
    report.push(format!(
        "accepted {} of {} attempts (rate {:.4})",
        batch.accepted,
        batch.attempted,
        batch.acceptance_rate()
    ));
    if let Some(m) = batch.move_acceptance {
        report.push(format!("metropolis acceptance {m:.3}"));
    }
    dir.json("summary.json", &header, json!({ "spec": spec }))
}

fn jacobian_check(seed: u64, c: &JacobianConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<()> {
    type Row = (usize, &'static str, usize, usize, f64, f64, f64);
    let rows: Vec<Row> = (0..c.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = rng_from_seed(derive_seed(seed, trial as u64));
            let (map, family, degree, pairs, size) = match c.family {
                JacobianFamily::Complex => {
                    let pairs = trial % (c.n / 2 + 1);
                    (CoefficientMap::complex(pairs, c.n), "complex", c.n, pairs, c.n)
                }
                JacobianFamily::Real => {
                    let parity = if trial % 2 == 0 { Parity::Even } else { Parity::Odd };
                    let degree = 2 * c.n + usize::from(parity == Parity::Odd);
                    (CoefficientMap::Real { parity }, "real", degree, 0, c.n)
                }
            };
            let point = random_nondegenerate_point(map, size, c.separation, &mut rng);
            let closed = closed_form_jacobian(map, &point)?;
            let oracle = finite_difference_jacobian(map, &point, c.step)?;
            Ok((
                trial,
                family,
                degree,
                pairs,
                closed,
                oracle,
                (closed - oracle).abs() / closed.abs(),
            ))
        })
        .collect::<circlezeros::Result<_>>()
        .map_err(|e| CliError::library("jacobian-check", e))?;
    let max_rel = rows.iter().map(|r| r.6).fold(0.0, f64::max);
    let passing = rows.iter().filter(|r| r.6 < 1e-5).count();
    dir.csv(
        "jacobian.csv",
        &[
            "trial",
            "family",
            "degree",
            "off_pairs",
            "closed_form",
            "oracle",
            "rel_error",
        ],
        &rows,
        json!({ "oracle": "central differences", "step": c.step }),
    )?;
    report.push(format!(
        "{passing}/{} trials with rel_error < 1e-5, max {max_rel:e}",
        rows.len()
    ));
    dir.json(
        "summary.json",
        &json!({ "trials": rows.len(), "max_rel_error": max_rel, "below_1e-5": passing }),
        Value::Null,
    )
}

fn histogram_rows(h: &Histogram) -> Vec<(f64, f64, u64, f64, f64)> {
    (0..h.counts.len())
        .map(|i| (h.edges[i], h.edges[i + 1], h.counts[i], h.mass[i], h.density[i]))
        .collect()
}

const HISTOGRAM_COLUMNS: [&str; 5] = ["bin_lo", "bin_hi", "count", "mass", "density"];

fn spacings(c: &SpacingsConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<()> {
    let batch = draw(&c.source)?;
    let spec = c.source.spec();
    let meta = json!({ "spec": spec, "unfolding": "gaps times N / 2pi per set" });
    let (gaps, hist) = spacing_histogram(&batch, c.bins, c.bin_width).map_err(|e| CliError::library("spacings", e))?;
    dir.csv(
        "gaps.csv",
        &["unfolded_gap"],
        gaps.unfolded_gaps.iter().map(|g| (g,)),
        meta.clone(),
    )?;
    dir.csv("histogram.csv", &HISTOGRAM_COLUMNS, histogram_rows(&hist), meta.clone())?;
    let mut summary = json!({
        "sets": batch.angle_sets.len(),
        "gaps": gaps.unfolded_gaps.len(),
        "mean_gap": gaps.unfolded_gaps.iter().sum::<f64>() / gaps.unfolded_gaps.len() as f64,
        "overflow": hist.overflow,
        "acceptance_rate": batch.acceptance_rate(),
    });
    if let Some(r2cfg) = &c.r2 {
        let r2 = pair_correlation(&batch, &r2cfg.edges()).map_err(|e| CliError::library("pair correlation", e))?;
        let rows: Vec<_> = (0..r2.values.len())
            .map(|i| {
                (
                    r2.edges[i],
                    r2.edges[i + 1],
                    r2.grid[i],
                    r2.values[i],
                    r2.stderr[i],
                    r2.counts[i],
                )
            })
            .collect();
        let r2meta = json!({
            "spec": spec,
            "normalisation": "ordered pairs per bin / (sets * n (n - 1) * width / pi)",
        });
        dir.csv(
            "r2.csv",
            &["bin_lo", "bin_hi", "delta", "r2", "stderr", "count"],
            rows,
            r2meta,
        )?;
        if let Some(range) = r2cfg.fit_range {
            let (slope, se) = repulsion_exponent(&r2, range).map_err(|e| CliError::library("repulsion exponent", e))?;
            summary["repulsion_exponent"] = json!({ "slope": slope, "stderr": se, "fit_range": range });
            report.push(format!("repulsion exponent {slope:.3} +- {se:.3}"));
        }
        summary["r2_empty_bins"] = json!(r2.empty_bins);
    }
    if batch.domain == AngleDomain::UpperHalf {
        let edge = edge_zone_statistics(&batch).map_err(|e| CliError::library("edge zone", e))?;
        summary["edge_zone"] = json!(edge);
    }
    report.push(format!(
        "{} gaps, first-bin mass {:.4}",
        gaps.unfolded_gaps.len(),
        hist.mass.first().copied().unwrap_or(0.0)
    ));
    dir.json("summary.json", &summary, json!({ "spec": spec }))
}

fn fraction(config: &RunConfig, c: &FractionConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<()> {
    let tol = config.tolerance.unwrap_or_else(|| default_tolerance(c.n));
    let mut rows = Vec::with_capacity(c.epsilons.len());
    for (i, &eps) in c.epsilons.iter().enumerate() {
        let spec = EnsembleSpec {
            tolerance: Some(tol),
            ..EnsembleSpec::gaussian(c.n, eps, derive_seed(config.seed, i as u64))
        };
        let polys = sample_gaussian_sr(&spec, c.samples).map_err(|e| CliError::library("GAUSSIAN_SR", e))?;
        let est = fraction_on_circle(&polys, tol).map_err(|e| CliError::library(format!("epsilon {eps}"), e))?;
        report.push(format!(
            "epsilon {eps:e}: fraction {:.4} +- {:.4}",
            est.mean, est.stderr
        ));
        rows.push((eps, est.mean, est.stderr, est.used, est.skipped));
    }
    let meta = json!({ "model": "GAUSSIAN_SR", "sigma": "epsilon / sqrt(N)", "tolerance": tol });
    dir.csv(
        "fraction.csv",
        &["epsilon", "mean", "stderr", "used", "skipped"],
        &rows,
        meta.clone(),
    )?;
    dir.json(
        "summary.json",
        &json!({ "n": c.n, "samples": c.samples, "large_epsilon_limit": 1.0 / 3f64.sqrt() }),
        meta,
    )
}

fn dunnage(seed: u64, c: &DunnageConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<()> {
    let est = dunnage_real_zero_count(c.n, c.samples, seed).map_err(|e| CliError::library("dunnage", e))?;
    let reference = 2.0 * c.n as f64 / 3f64.sqrt();
    report.push(format!(
        "mean real zeros {:.3} +- {:.3} (2N/sqrt 3 = {reference:.3})",
        est.mean, est.stderr
    ));
    dir.json(
        "summary.json",
        &json!({
            "n": c.n,
            "samples": c.samples,
            "estimate": est,
            "reference": reference,
            "relative_deviation": (est.mean - reference) / reference,
        }),
        json!({ "sum": "sum_{k=1}^{N} c_k cos(k x), c_k standard normal, zeros in [0, 2pi)" }),
    )
}

fn epstein_eval(c: &EpsteinEvalConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<()> {
    let height = c.s.iter().map(|s| s[1].abs()).fold(0.0, f64::max);
    let series = EpsteinSeries::with_height(&c.form, height).map_err(|e| CliError::library("epstein", e))?;
    let base = c.form.gamma_factor_base();
    let mut rows = Vec::with_capacity(c.s.len());
    for &[re, im] in &c.s {
        let s = Complex64::new(re, im);
        let lambda = series
            .completed(s)
            .map_err(|e| CliError::library(format!("s = {re}{im:+}i"), e))?;
        let v = match c.value {
            EpsteinValue::Completed => lambda,
            EpsteinValue::Zeta => lambda / ((s * base.ln()).exp() * gamma(s)),
        };
        report.push(format!("({re}, {im}): ({:e}, {:e})", v.re, v.im));
        rows.push((re, im, v.re, v.im));
    }
    dir.csv(
        "values.csv",
        &["s_re", "s_im", "re", "im"],
        &rows,
        json!({ "form": c.form, "value": c.value }),
    )
}

fn random_forms(seed: u64, c: &EpsteinZerosConfig) -> Result<Vec<QuadraticForm>> {
    let Some(b) = c.random_forms else {
        return Ok(Vec::new());
    };
    let mut rng = rng_from_seed(derive_seed(seed, 0));
    let mut forms = Vec::with_capacity(b.count);
    let mut tries = 0u64;
    while forms.len() < b.count {
        tries += 1;
        if tries > 1_000_000 {
            return Err(CliError::ConfigInvalid(
                "random_forms box yields almost no positive-definite forms".into(),
            ));
        }
        let u = |rng: &mut circlezeros::rng::Generator, (lo, hi): (f64, f64)| {
            if hi > lo {
                rng.random_range(lo..hi)
            } else {
                lo
            }
        };
        let (a, bb, cc) = (u(&mut rng, b.a), u(&mut rng, b.b), u(&mut rng, b.c));
        if let Ok(q) = QuadraticForm::new(a, bb, cc) {
            forms.push(q);
        }
    }
    Ok(forms)
}

fn epstein_zeros(seed: u64, c: &EpsteinZerosConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<()> {
    let mut forms = c.forms.clone();
    forms.extend(random_forms(seed, c)?);
    let res =
        epstein_zero_spacings(&forms, (c.t_min, c.t_max), c.step).map_err(|e| CliError::library("epstein zeros", e))?;
    let meta = json!({
        "random_forms": c.random_forms.map(|_| "a, b, c uniform in the configured box, kept when b^2 < 4ac"),
        "unfolding": "N(t) ~ alpha (t/pi) log(A t / e) + beta, A = sqrt|D| / 2pi; gaps rescaled to mean 1",
    });
    let listed: Vec<Value> = forms
        .iter()
        .enumerate()
        .map(|(i, q)| {
            let z = reduce_form(q).ok().map(|(z, _)| z);
            json!({ "index": i, "form": q, "reduced_point": z })
        })
        .collect();
    dir.json("forms.json", &listed, meta.clone())?;
    let zero_rows = res
        .per_form
        .iter()
        .enumerate()
        .flat_map(|(i, f)| f.zeros.iter().zip(&f.refinement_widths).map(move |(&t, &w)| (i, t, w)));
    dir.csv("zeros.csv", &["form", "t", "refinement_width"], zero_rows, meta.clone())?;
    let gap_rows = res
        .per_form
        .iter()
        .enumerate()
        .flat_map(|(i, f)| f.raw_gaps.iter().zip(&f.unfolded_gaps).map(move |(&r, &u)| (i, r, u)));
    dir.csv("gaps.csv", &["form", "raw_gap", "unfolded_gap"], gap_rows, meta.clone())?;
    let hist = Histogram::new(&res.pooled, c.bins, c.bin_width).map_err(|e| CliError::library("histogram", e))?;
    dir.csv("histogram.csv", &HISTOGRAM_COLUMNS, histogram_rows(&hist), meta.clone())?;
    let per_form: Vec<Value> = res
        .per_form
        .iter()
        .map(|f| {
            json!({
                "form": f.form,
                "zeros": f.zeros.len(),
                "alpha": f.alpha,
                "beta": f.beta,
                "warnings": f.warnings,
            })
        })
        .collect();
    report.push(format!(
        "{} forms, {} pooled gaps, first-bin mass {:.4}",
        forms.len(),
        res.pooled.len(),
        hist.mass[0]
    ));
    dir.json(
        "summary.json",
        &json!({ "per_form": per_form, "pooled_gaps": res.pooled.len(), "first_bin_mass": hist.mass[0] }),
        meta,
    )
}

fn compare_input(input: &CompareInput) -> Result<(Vec<f64>, Value)> {
    match input {
        CompareInput::File { file } => Ok((load_gaps(file)?, json!({ "file": file }))),
        CompareInput::Source { source } => {
            let batch = draw(source)?;
            let gaps = unfolded_gaps(&batch).map_err(|e| CliError::library("gaps", e))?;
            Ok((gaps.unfolded_gaps, json!({ "spec": source.spec() })))
        }
    }
}

fn compare(alpha: f64, c: &CompareConfig, dir: &mut OutputDir, report: &mut Vec<String>) -> Result<bool> {
    let (xs, a_meta) = compare_input(&c.a)?;
    let (ys, b_meta) = compare_input(&c.b)?;
    let res = two_sample_test(&xs, &ys, c.test).map_err(|e| CliError::library("two-sample test", e))?;
    let rejected = res.rejects(alpha);
    report.push(format!(
        "statistic {:.6}, p-value {:.6e}, n = {} vs {}{}",
        res.statistic,
        res.p_value,
        res.n_x,
        res.n_y,
        if rejected { ", rejected" } else { ", not rejected" }
    ));
    dir.json(
        "report.json",
        &json!({ "test": c.test, "result": res, "alpha": alpha, "rejected": rejected }),
        json!({ "a": a_meta, "b": b_meta }),
    )?;
    Ok(rejected)
}
