//! Acceptance run: evaluates every criterion, prints one line each, and exits
//! non-zero if any of them fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use pseudoherm::canonical::{
    canonical_form_residual, canonical_pair, commutator_residual, eigenmap_t, expected_pattern, pattern_mismatches,
    verify_model, HermiticityReport, VerifyOptions,
};
use pseudoherm::evolution::{spectral_propagate, time_grid, two_mode_state};
use pseudoherm::hilbert::{
    diagonal_map, gram_matrix, metric_from_spectrum, orthonormality_defect, pseudo_hermiticity_residual, InnerProduct,
};
use pseudoherm::models::{
    aligned_residual, assemble_model, bender_family, model_spectrum, paper_example, parse_expression, parse_scalar,
    reference_eigenvector, Assembly, ModelSpec,
};
use pseudoherm::numerics::linalg::frobenius;
use pseudoherm::numerics::{eig_dense, is_real_eigenvalue, make_grid, BasisSpec, GridSpec, Representation, Spectrum};
use pseudoherm::operators::{assemble, position_momentum_matrices, MatrixRep, ScalarExpr};
use pseudoherm::{CMatrix, C64};

type Check = Result<(bool, String), String>;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn grid(n: usize) -> GridSpec {
    make_grid(10.0, n).expect("valid grid")
}

fn example() -> ModelSpec {
    paper_example(1.0).expect("valid model")
}

fn weight() -> InnerProduct {
    InnerProduct::Weighted(parse_scalar("1/x^2").expect("weight parses"))
}

fn stencil_spectrum(g: &GridSpec) -> Result<Spectrum, String> {
    Ok(model_spectrum(&example(), &(*g).into(), Assembly::Stencil, false)
        .map_err(err)?
        .physical_spectrum())
}

fn worst_ladder_error(s: &Spectrum, k: usize) -> f64 {
    (0..k)
        .map(|n| {
            let e = (2 * n + 1) as f64;
            (s.eigenvalues[n] - C64::new(e, 0.0)).norm() / e
        })
        .fold(0.0, f64::max)
}

fn within(ratio: f64, target: f64, rel: f64) -> bool {
    (ratio - target).abs() <= rel * target
}

fn criterion_1() -> Check {
    let start = Instant::now();
    let coarse = stencil_spectrum(&grid(400))?;
    let fine = stencil_spectrum(&grid(400).refined())?;
    let elapsed = start.elapsed().as_secs_f64();
    let (wc, wf) = (worst_ladder_error(&coarse, 8), worst_ladder_error(&fine, 8));
    let real = coarse.eigenvalues[..8].iter().all(|&e| is_real_eigenvalue(e));
    let ratio = wc / wf;
    Ok((
        wc <= 1e-2 && real && within(ratio, 4.0, 0.2) && elapsed <= 120.0,
        format!("worst rel error {wc:.3e}, all real {real}, doubling ratio {ratio:.3}, {elapsed:.1}s"),
    ))
}

fn criterion_2() -> Check {
    let g = grid(400);
    let s = stencil_spectrum(&g)?;
    let worst = (0..=4)
        .map(|n| aligned_residual(&s.right.column(n), &reference_eigenvector(&g, 1.0, &ScalarExpr::X, n)))
        .fold(0.0, f64::max);
    Ok((worst <= 1e-2, format!("max node-wise residual {worst:.3e} for n ≤ 4")))
}

fn criterion_3() -> Check {
    let g = grid(400);
    let rep: Representation = g.into();
    let s = stencil_spectrum(&g)?;
    let weighted = orthonormality_defect(&s, &weight(), &rep, 8).map_err(err)?;
    let flat = orthonormality_defect(&s, &InnerProduct::Flat, &rep, 8).map_err(err)?;
    Ok((
        weighted <= 1e-2 && flat >= 0.05,
        format!("defect {weighted:.3e} in the 1/x² product, {flat:.3e} in the flat product"),
    ))
}

/// Weighted residual of the block of `h` on nodes with `|x| ≥ 1`.
fn restricted_residual(h: &MatrixRep, g: &GridSpec) -> f64 {
    let nodes = g.nodes();
    let idx: Vec<usize> = (0..nodes.len()).filter(|&j| nodes[j].abs() >= 1.0).collect();
    let w: Vec<f64> = idx.iter().map(|&j| g.spacing() / (nodes[j] * nodes[j])).collect();
    let k = idx.len();
    let a = CMatrix::from_shape_fn((k, k), |(i, j)| h.matrix[[idx[i], idx[j]]]);
    let diff = CMatrix::from_shape_fn((k, k), |(i, j)| w[i] * a[[i, j]] - a[[j, i]].conj() * w[j]);
    let gnorm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
    frobenius(&diff.view()) / (gnorm * frobenius(&a.view()))
}

fn criterion_4() -> Check {
    let model = example();
    let (g1, g2) = (grid(400), grid(800));
    let alg = assemble_model(&model, &g1.into(), Assembly::Algebraic).map_err(err)?;
    let r_alg = pseudo_hermiticity_residual(&alg, &weight()).map_err(err)?;
    let h1 = assemble_model(&model, &g1.into(), Assembly::Stencil).map_err(err)?;
    let h2 = assemble_model(&model, &g2.into(), Assembly::Stencil).map_err(err)?;
    let r1 = pseudo_hermiticity_residual(&h1, &weight()).map_err(err)?;
    let r2 = pseudo_hermiticity_residual(&h2, &weight()).map_err(err)?;
    let ratio = r1 / r2;
    let away = restricted_residual(&h1, &g1) / restricted_residual(&h2, &g2);
    Ok((
        r_alg <= 1e-12 && within(ratio, 4.0, 0.2),
        format!(
            "algebraic {r_alg:.3e}; stencil {r1:.3e} → {r2:.3e}, ratio {ratio:.3} (|x| ≥ 1 block ratio {away:.3})"
        ),
    ))
}

fn criterion_5() -> Check {
    let g = grid(400);
    let rep: Representation = g.into();
    let t = diagonal_map(&parse_scalar("1/x").map_err(err)?, &g).map_err(err)?;
    let pair = canonical_pair(&t, &rep).map_err(err)?;
    let grid_res = commutator_residual(&pair, 8).map_err(err)?;

    let m = 24;
    let (x, p) = position_momentum_matrices(&BasisSpec::new(m, 1.0).map_err(err)?.into());
    let comm = x.matrix.dot(&p.matrix) - p.matrix.dot(&x.matrix);
    let i = C64::new(0.0, 1.0);
    let mut off = 0.0f64;
    for r in 0..m {
        for c in 0..m {
            if (r, c) != (m - 1, m - 1) {
                let target = if r == c { i } else { C64::new(0.0, 0.0) };
                off = off.max((comm[[r, c]] - target).norm());
            }
        }
    }
    let corner = (comm[[m - 1, m - 1]] - (-i * m as f64 + i)).norm();
    Ok((
        grid_res <= 1e-2 && off <= 1e-12 && corner <= 1e-12,
        format!("grid residual {grid_res:.3e}; basis off-corner {off:.1e}, corner deviation {corner:.1e}"),
    ))
}

fn criterion_6() -> Check {
    let model = example();
    let template = parse_expression("p^2 + x^2").map_err(err)?;
    let residual = |g: &GridSpec, assembly| -> Result<f64, String> {
        let rep: Representation = (*g).into();
        let h = assemble_model(&model, &rep, assembly).map_err(err)?;
        let t = diagonal_map(&parse_scalar("1/x").map_err(err)?, g).map_err(err)?;
        let pair = canonical_pair(&t, &rep).map_err(err)?;
        canonical_form_residual(&h, &pair, &template).map_err(err)
    };
    let alg = residual(&grid(400), Assembly::Algebraic)?;
    let s1 = residual(&grid(400), Assembly::Stencil)?;
    let s2 = residual(&grid(800), Assembly::Stencil)?;
    let ratio = s1 / s2;
    Ok((
        alg <= 1e-12 && within(ratio, 4.0, 0.2),
        format!("algebraic {alg:.3e}; stencil {s1:.3e} → {s2:.3e}, ratio {ratio:.3} (second order needs 4)"),
    ))
}

fn criterion_7() -> Check {
    let options = VerifyOptions {
        assembly: Assembly::Algebraic,
        transform: Some(parse_scalar("1/x").map_err(err)?),
        ..VerifyOptions::default()
    };
    let report = verify_model(&example(), &grid(400).into(), &options).map_err(err)?;
    let pattern = expected_pattern(report.transform_unitary);
    let at = |tol: f64| -> Vec<String> {
        let mut table: HermiticityReport = report.table.clone();
        for row in &mut table.rows {
            row.hermitian_l2 = row.residual_l2 <= tol;
            row.hermitian_h = row.residual_h <= tol;
        }
        pattern_mismatches(&table, &pattern)
    };
    let (strict, loose) = (at(1e-8), at(1e-3));
    let code = Command::new(env!("CARGO_BIN_EXE_pseudoherm"))
        .args(["verify", "--model", "paper-example", "--grid", "10:400", "--transform", "1/x", "--assembly", "algebraic"])
        .output()
        .map_err(err)?
        .status
        .code();
    Ok((
        strict.is_empty() && loose.is_empty() && code == Some(0),
        format!("mismatches at 1e-8: {strict:?}, at 1e-3: {loose:?}; verify exit code {code:?}"),
    ))
}

fn criterion_8() -> Check {
    let basis: Representation = BasisSpec::new(200, 1.0).map_err(err)?.into();
    let start = Instant::now();
    let mut spectra = Vec::new();
    for k in 0..=8 {
        let nu = -1.0 + 0.25 * k as f64;
        let ms = model_spectrum(&bender_family(nu).map_err(err)?, &basis, Assembly::Stencil, true).map_err(err)?;
        spectra.push((nu, ms));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let find = |nu: f64| &spectra.iter().find(|(v, _)| *v == nu).expect("sweep point").1;

    let mut ok = elapsed <= 300.0;
    let mut notes = Vec::new();
    for nu in [0.0, 0.5, 1.0] {
        let s = find(nu).physical_spectrum();
        let real = s.len() >= 6 && s.eigenvalues[..6].iter().all(|e| e.im.abs() <= 1e-3 * e.re.abs());
        ok &= real;
        notes.push(format!("ν={nu}: {} kept, lowest 6 real {real}", s.len()));
    }
    let zero = find(0.0).physical_spectrum();
    let dev = (0..6)
        .map(|n| (zero.eigenvalues[n] - C64::new((2 * n + 1) as f64, 0.0)).norm())
        .fold(0.0, f64::max);
    ok &= dev <= 1e-6;
    let neg = find(-0.5).physical_spectrum();
    let low: Vec<C64> = neg.eigenvalues.iter().take(10).copied().collect();
    let pair = low
        .iter()
        .any(|e| e.im.abs() > 1e-2 && low.iter().any(|f| (f - e.conj()).norm() <= 1e-6 * e.norm()));
    ok &= pair;
    let shift = spectra
        .iter()
        .filter_map(|(_, ms)| ms.max_shift)
        .fold(0.0, f64::max);
    ok &= shift < 1e-4;
    Ok((
        ok,
        format!(
            "{}; ν=0 deviation {dev:.1e}; ν=-0.5 conjugate pair {pair}; max doubling shift {shift:.1e}; sweep {elapsed:.1}s",
            notes.join(", ")
        ),
    ))
}

fn criterion_9() -> Check {
    let g = grid(400);
    let rep: Representation = g.into();
    let ms = model_spectrum(&example(), &rep, Assembly::Stencil, false).map_err(err)?;
    let eta = metric_from_spectrum(&ms.full).map_err(err)?;
    let flat = gram_matrix(&InnerProduct::Flat, &rep).map_err(err)?;
    let (psi0, modes) = two_mode_state(&ms.full, &ms.physical, &flat).map_err(err)?;
    let times = time_grid(10.0, 200).map_err(err)?;
    let r = spectral_propagate(&ms.full, &psi0, &times, &eta, &rep).map_err(err)?;
    let (drift, range) = (r.h_norm_drift(), r.l2_relative_range());
    Ok((
        drift <= 1e-8 && range >= 1e-3,
        format!("modes {modes:?}: metric-norm drift {drift:.3e}, Euclidean-norm range {range:.3e}"),
    ))
}

fn criterion_10() -> Check {
    let g = grid(400);
    let rep: Representation = g.into();
    let h = assemble_model(&example(), &rep, Assembly::Stencil).map_err(err)?;
    let hs = stencil_spectrum(&g)?;
    let oscillator = assemble(&parse_expression("p^2 + x^2").map_err(err)?, &rep, None).map_err(err)?;
    let ho = eig_dense(&oscillator.matrix).map_err(err)?;
    let t = eigenmap_t(&hs, &ho, 8).map_err(err)?;
    let conj = t.matrix.dot(&h.matrix).dot(&t.inverse);
    let bound = 1e-6 * frobenius(&h.matrix.view());
    let worst = (0..8)
        .map(|n| {
            let v = ho.right.column(n);
            let r = conj.dot(&v) - v.mapv(|z| z * hs.eigenvalues[n]);
            r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
        })
        .fold(0.0, f64::max);
    Ok((worst <= bound, format!("worst residual {worst:.3e} against bound {bound:.3e}")))
}

fn run_twice(args: &[&str], files: &[&Path]) -> Result<bool, String> {
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = Command::new(env!("CARGO_BIN_EXE_pseudoherm")).args(args).output().map_err(err)?;
        let mut bytes = vec![out.stdout, out.stderr, vec![out.status.code().unwrap_or(-1) as u8]];
        for f in files {
            bytes.push(std::fs::read(f).map_err(err)?);
        }
        outputs.push(bytes);
    }
    Ok(outputs[0] == outputs[1])
}

fn criterion_11() -> Check {
    let dir = std::env::temp_dir().join(format!("pseudoherm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(err)?;
    let write = |name: &str, text: &str| -> Result<String, String> {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(err)?;
        Ok(p.display().to_string())
    };
    let summary = dir.join("summary.json");
    let runs: Vec<(&str, String, Vec<&Path>)> = vec![
        ("spectrum", write("spectrum.ini", "[model]\nname = bender\nnu = -0.5\n[representation]\nbasis = 80\n[task]\ncount = 10\n")?, vec![]),
        (
            "verify",
            write("verify.ini", "[model]\nname = paper-example\n[representation]\ngrid = 10:200\n[task]\ntransform = 1/x\nassembly = algebraic\n")?,
            vec![],
        ),
        ("sweep", write("sweep.ini", "[model]\nname = bender\nnu = -0.5:0.5:0.5\n[representation]\nbasis = 80\n")?, vec![]),
        (
            "evolve",
            write(
                "evolve.ini",
                &format!(
                    "[model]\nname = paper-example\n[representation]\ngrid = 10:200\n[task]\ntmax = 10\nsteps = 100\nmetric = auto\n[output]\nsummary = {}\n",
                    summary.display()
                ),
            )?,
            vec![summary.as_path()],
        ),
    ];
    let mut identical = Vec::new();
    for (cmd, cfg, files) in &runs {
        identical.push((cmd.to_string(), run_twice(&[cmd, "--config", cfg], files)?));
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok((
        identical.iter().all(|(_, same)| *same),
        identical
            .iter()
            .map(|(c, same)| format!("{c}: {}", if *same { "identical" } else { "differs" }))
            .collect::<Vec<_>>()
            .join(", "),
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("example spectrum", criterion_1),
        ("eigenfunction identity", criterion_2),
        ("modified-product orthonormality", criterion_3),
        ("pseudo-Hermiticity", criterion_4),
        ("canonical pair", criterion_5),
        ("canonical form", criterion_6),
        ("Hermiticity table pattern", criterion_7),
        ("Bender family", criterion_8),
        ("unitarity", criterion_9),
        ("trivial eigenmap", criterion_10),
        ("determinism", criterion_11),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(v) => v,
            Err(e) => (false, format!("error: {e}")),
        };
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict} [{name}] {detail} ({:.1}s)",
            k + 1,
            start.elapsed().as_secs_f64()
        );
        if !pass {
            failed.push(k + 1);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
