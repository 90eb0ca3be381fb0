use pseudoherm::canonical::{verdict, verify_model, VerifyOptions};
use pseudoherm::evolution::{spectral_propagate, spectral_propagate_in_span, time_grid, two_mode_state};
use pseudoherm::hilbert::{gram_matrix, metric_from_spectrum, InnerProduct};
use pseudoherm::models::{bender_family, model_spectrum, parse_scalar, ModelSpec};
use pseudoherm::numerics::{is_real_eigenvalue, Representation, Spectrum};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{CliError, CliResult, Format, MetricChoice, ModelSource, NuSetting, RunConfig};
use crate::output::{assembly_name, emit, json_text, model_json, representation_json, Numbers, SCHEMA};

/// Model with the quadrature override applied, and its representation.
fn setup(cfg: &RunConfig, nu: f64) -> CliResult<(ModelSpec, Representation)> {
    let mut model = cfg.build_model(nu)?;
    model.quadrature_points = cfg.quadrature(&model);
    let rep = cfg.representation(&model)?;
    Ok((model, rep))
}

/// Physical eigenpairs; the basis doubling gate runs whenever the basis is used.
fn physical_spectrum(model: &ModelSpec, rep: &Representation, cfg: &RunConfig) -> CliResult<(Spectrum, usize)> {
    let gate = matches!(rep, Representation::Basis(_));
    let ms = model_spectrum(model, rep, cfg.assembly, gate)?;
    let screened = ms.full.len() - ms.physical.len();
    Ok((ms.physical_spectrum(), screened))
}

fn eigenvalue_rows(s: &Spectrum, count: usize, n: Numbers) -> Vec<Value> {
    (0..count.min(s.len()))
        .map(|k| {
            let e = s.eigenvalues[k];
            json!({
                "index": k,
                "re": n.json(e.re),
                "im": n.json(e.im),
                "real_flag": is_real_eigenvalue(e),
                "residual": n.json(s.residuals[k]),
            })
        })
        .collect()
}

pub fn spectrum(cfg: &RunConfig) -> CliResult<()> {
    let n = Numbers { digits: cfg.digits };
    let (model, rep) = setup(cfg, cfg.single_nu()?)?;
    let (s, screened) = physical_spectrum(&model, &rep, cfg)?;
    let count = cfg.count.unwrap_or(10).min(s.len());
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => {
            let flags: Vec<bool> = s.eigenvalues[..count].iter().map(|&e| is_real_eigenvalue(e)).collect();
            let count_real = flags.iter().filter(|&&f| f).count();
            json_text(&json!({
                "schema": SCHEMA,
                "command": "spectrum",
                "model": model_json(&model),
                "representation": representation_json(&rep, model.quadrature_points),
                "assembly": assembly_name(cfg.assembly),
                "eigenvalues": eigenvalue_rows(&s, count, n),
                "basis_condition": n.json(s.basis_condition),
                "ill_conditioned": s.ill_conditioned,
                "screened_out": screened,
                "realness_summary": {
                    "count_real": count_real,
                    "count_complex": count - count_real,
                },
            }))
        }
        Format::Csv => {
            let mut out = String::from("index,re,im,real_flag,residual\n");
            for k in 0..count {
                let e = s.eigenvalues[k];
                out += &format!(
                    "{k},{},{},{},{}\n",
                    n.csv(e.re),
                    n.csv(e.im),
                    is_real_eigenvalue(e),
                    n.csv(s.residuals[k])
                );
            }
            out
        }
    };
    emit(cfg.output.as_deref(), &text)
}

pub fn verify(cfg: &RunConfig) -> CliResult<()> {
    let n = Numbers { digits: cfg.digits };
    let (model, rep) = setup(cfg, cfg.single_nu()?)?;
    let options = VerifyOptions {
        assembly: cfg.assembly,
        transform: cfg.transform.as_deref().map(parse_scalar).transpose()?,
        eigenvectors: cfg.count.unwrap_or(8),
        ..VerifyOptions::default()
    };
    let r = verify_model(&model, &rep, &options)?;
    let text = match cfg.format.unwrap_or(Format::Json) {
        Format::Json => {
            let rows: Vec<Value> = r
                .table
                .rows
                .iter()
                .map(|row| {
                    json!({
                        "operator": row.operator,
                        "residual_L2": n.json(row.residual_l2),
                        "residual_H": n.json(row.residual_h),
                        "verdict": {
                            "L2": verdict(row.hermitian_l2),
                            "H": verdict(row.hermitian_h),
                        },
                    })
                })
                .collect();
            json_text(&json!({
                "schema": SCHEMA,
                "command": "verify",
                "model": model_json(&model),
                "representation": representation_json(&rep, model.quadrature_points),
                "assembly": assembly_name(cfg.assembly),
                "transform": {
                    "expression": r.transform,
                    "unitary": r.transform_unitary,
                },
                "table1": {
                    "tolerance": n.json(r.table.tolerance),
                    "rows": rows,
                    "note": r.table.footer,
                },
                "commutator_residual": n.json(r.commutator_residual),
                "canonical_form_residual": n.opt(r.canonical_form_residual),
                "pseudo_hermiticity_residual": n.json(r.pseudo_hermiticity_residual),
                "orthonormality_defect": n.json(r.orthonormality_defect),
                "eigenvectors_checked": r.eigenvectors_checked,
                "pattern_matches": r.pattern_matches(),
                "mismatches": r.mismatches,
            }))
        }
        Format::Csv => {
            let mut out = String::from("operator,residual_L2,residual_H,verdict_L2,verdict_H\n");
            for row in &r.table.rows {
                out += &format!(
                    "{},{},{},{},{}\n",
                    row.operator,
                    n.csv(row.residual_l2),
                    n.csv(row.residual_h),
                    verdict(row.hermitian_l2),
                    verdict(row.hermitian_h)
                );
            }
            out
        }
    };
    emit(cfg.output.as_deref(), &text)?;
    if r.pattern_matches() {
        Ok(())
    } else {
        Err(CliError::Mismatch(r.mismatches))
    }
}

/// Points `start, start+step, …` up to `stop`, rounded to 12 digits so that
/// accumulated steps print cleanly.
fn sweep_points(setting: NuSetting) -> Vec<f64> {
    match setting {
        NuSetting::Single(v) => vec![v],
        NuSetting::Range { start, stop, step } => {
            let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
            (0..count)
                .map(|i| crate::output::round_sig(start + i as f64 * step, 12))
                .collect()
        }
    }
}

pub fn sweep(cfg: &RunConfig) -> CliResult<()> {
    let n = Numbers { digits: cfg.digits };
    match &cfg.model {
        ModelSource::Builtin(name) if name == "bender" => {}
        _ => return Err(CliError::Config("sweep varies nu and needs --model bender".into())),
    }
    let count = cfg.count.unwrap_or(6);
    let points = sweep_points(cfg.nu);
    // every ν is validated before any diagonalization starts
    for &nu in &points {
        bender_family(nu)?;
    }
    let results: Vec<CliResult<(f64, Spectrum, Representation, Option<usize>)>> = points
        .par_iter()
        .map(|&nu| {
            let (model, rep) = setup(cfg, nu)?;
            let (s, _) = physical_spectrum(&model, &rep, cfg)?;
            Ok((nu, s.leading(count), rep, model.quadrature_points))
        })
        .collect();
    let results = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("nu,index,re,im,real_flag\n");
            for (nu, s, _, _) in &results {
                for (k, e) in s.eigenvalues.iter().enumerate() {
                    out += &format!("{},{k},{},{},{}\n", n.csv(*nu), n.csv(e.re), n.csv(e.im), is_real_eigenvalue(*e));
                }
            }
            out
        }
        Format::Json => {
            let (_, _, rep, quad) = &results[0];
            let rows: Vec<Value> = results
                .iter()
                .map(|(nu, s, _, _)| json!({ "nu": n.json(*nu), "eigenvalues": eigenvalue_rows(s, count, n) }))
                .collect();
            json_text(&json!({
                "schema": SCHEMA,
                "command": "sweep",
                "model": "bender",
                "representation": representation_json(rep, *quad),
                "points": rows,
            }))
        }
    };
    emit(cfg.output.as_deref(), &text)
}

pub fn evolve(cfg: &RunConfig) -> CliResult<()> {
    let n = Numbers { digits: cfg.digits };
    let (model, rep) = setup(cfg, cfg.single_nu()?)?;
    let times = time_grid(cfg.tmax, cfg.steps)?;
    let flat = gram_matrix(&InnerProduct::Flat, &rep)?;
    let basis = matches!(rep, Representation::Basis(_));
    let (spectrum, r, modes, metric_name, complex_spectrum) = if basis && cfg.metric == MetricChoice::Auto {
        // A truncated non-normal basis matrix has no usable eigenbasis on the whole
        // space. The state is propagated in the span of its two converged modes,
        // where the metric making them orthonormal is known exactly.
        let s = physical_spectrum(&model, &rep, cfg)?.0;
        let all: Vec<usize> = (0..s.len()).collect();
        let (psi0, modes) = two_mode_state(&s, &all, &flat)?;
        let r = spectral_propagate_in_span(&s.subset(&modes), &psi0, &times)?;
        let complex = !s.all_real();
        (s, r, modes, "auto (span of the initial modes)".to_string(), complex)
    } else {
        // the full decomposition is propagated; screened modes only stay out of the initial state
        let ms = model_spectrum(&model, &rep, cfg.assembly, false)?;
        let (ip, name) = match &cfg.metric {
            MetricChoice::Auto => (metric_from_spectrum(&ms.full)?, "auto".to_string()),
            MetricChoice::Flat => (InnerProduct::Flat, "flat".to_string()),
            MetricChoice::Weight(w) => {
                let w = parse_scalar(w)?;
                let name = w.to_string();
                (InnerProduct::Weighted(w), name)
            }
        };
        let (psi0, modes) = two_mode_state(&ms.full, &ms.physical, &flat)?;
        let r = spectral_propagate(&ms.full, &psi0, &times, &ip, &rep)?;
        let complex = !ms.physical_spectrum().all_real();
        (ms.full, r, modes, name, complex)
    };

    let energies: Vec<Value> = modes
        .iter()
        .map(|&k| {
            let e = spectrum.eigenvalues[k];
            json!({ "index": k, "re": n.json(e.re), "im": n.json(e.im) })
        })
        .collect();
    let mut summary = json!({
        "schema": SCHEMA,
        "command": "evolve",
        "model": model_json(&model),
        "representation": representation_json(&rep, model.quadrature_points),
        "assembly": assembly_name(cfg.assembly),
        "metric": metric_name,
        "initial_modes": energies,
        "tmax": n.json(cfg.tmax),
        "steps": cfg.steps,
        "l2_norm": {
            "initial": n.json(r.l2_norms[0]),
            "relative_drift": n.json(r.l2_norm_drift()),
            "relative_range": n.json(r.l2_relative_range()),
        },
        "h_norm": {
            "initial": n.json(r.h_norms[0]),
            "relative_drift": n.json(r.h_norm_drift()),
            "relative_range": n.json(r.h_relative_range()),
        },
        "discarded_fraction": n.json(r.discarded_fraction),
        "complex_spectrum": complex_spectrum,
    });

    match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("t,l2_norm,h_norm\n");
            for ((t, l2), h) in r.times.iter().zip(&r.l2_norms).zip(&r.h_norms) {
                out += &format!("{},{},{}\n", n.csv(*t), n.csv(*l2), n.csv(*h));
            }
            emit(cfg.output.as_deref(), &out)?;
            let text = json_text(&summary);
            match &cfg.summary {
                Some(path) => emit(Some(path), &text),
                None => {
                    eprint!("{text}");
                    Ok(())
                }
            }
        }
        Format::Json => {
            let round = |v: &[f64]| v.iter().map(|&x| n.json(x)).collect::<Vec<_>>();
            summary["series"] = json!({
                "t": round(&r.times),
                "l2_norm": round(&r.l2_norms),
                "h_norm": round(&r.h_norms),
            });
            emit(cfg.output.as_deref(), &json_text(&summary))
        }
    }
}
