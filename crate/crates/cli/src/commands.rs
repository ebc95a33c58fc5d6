//! Subcommands. Each returns the files it produces as strings so that runs
//! can be compared byte for byte.

use serde::Serialize;
use zoll_core::funk::{assemble_l, funk_forward, round_funk_spectrum};
use zoll_core::graphs::{orthogonal_complement, TangentGraphField, ZeroGraph};
use zoll_core::killing::{
    diag_tensor, equator_residual, killing_defect, min_eigenvalue, rigidity_map, sample_points, KillingTwoTensor,
    MetricField, RIGIDITY_THRESHOLD,
};
use zoll_core::setup::Setup;
use zoll_core::solver::{deform, normalize_zprime, verify_zoll, ZollState};
use zoll_core::sphere::quadrature::sphere_volume;
use zoll_core::sphere::HarmonicField;
use zoll_core::variational::area_profile;
use zoll_core::vec4::{dot, mat_vec};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::exec::executor;
use crate::formats::*;

/// Files written by a subcommand and whether its checks passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub files: Vec<(String, String)>,
    /// Printed to stdout.
    pub summary: String,
    pub ok: bool,
}

fn csv_string<R: Serialize>(rows: impl IntoIterator<Item = R>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::usage(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::usage(format!("csv: {e}")))
}

/// CSV with a header of plain column names and float rows.
fn table(header: &[String], rows: &[Vec<f64>]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::usage(format!("csv: {e}"));
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(r.iter().map(|x| x.to_string())).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::usage(format!("csv: {e}")))
}

fn build_setup(n: usize, lmax: usize, lg: usize, q: usize, threads: usize) -> CliResult<Setup> {
    let s = Setup::new(n, lmax, lg, q).map_err(|e| CliError::usage(format!("resolution: {e}")))?;
    Ok(s.with_executor(executor(threads)?))
}

fn verify(setup: &Setup, state: &ZollState, q: usize, tol: f64, threads: usize) -> CliResult<VerifyOut> {
    let fine = setup.with_chart_nodes(q, executor(threads)?)?;
    let rep = verify_zoll(&fine, state)?;
    Ok(VerifyOut {
        schema: REPORT_SCHEMA.into(),
        q,
        tol,
        passes: rep.passes(tol),
        report: (&rep).into(),
    })
}

/// Corrector run along a direction, re-verification at `verify_q` chart
/// nodes and normalisation of the mean area.
pub fn cmd_deform(cfg: &RunConfig, threads: usize) -> CliResult<Outcome> {
    cfg.validate()?;
    let dir = cfg.direction()?;
    let setup = build_setup(cfg.n, cfg.lmax, cfg.lg, cfg.q, threads)?;
    let d = deform(&setup, &dir, cfg.t, cfg.tol, cfg.max_iter)?;
    let vq = cfg.verify_q.unwrap_or(2 * cfg.q);
    let ver = verify(&setup, &d.state, vq, cfg.verify_tol, threads)?;
    let z = normalize_zprime(&setup, &d.state)?;
    let fine = setup.with_chart_nodes(vq, executor(threads)?)?;
    let prof = area_profile(&fine, z.rho(), z.phi());
    let target = sphere_volume(cfg.n - 1);
    let normalized = NormalizedOut {
        area_mean: prof.mean,
        area_max_deviation: prof.values.iter().map(|a| (a - target).abs()).fold(0.0, f64::max),
    };
    let trace = csv_string(d.trace.iter().map(|r| TraceRow {
        stage: r.stage,
        iter: r.iter,
        t: r.t,
        lambda1_inf: r.lambda1_inf,
        lambda2_inf: r.lambda2_inf,
        area_mean: r.area_mean,
        area_spread: r.area_spread,
    }))?;
    let out = DeformOut {
        schema: DEFORM_SCHEMA.into(),
        t: cfg.t,
        stages: d.trace.iter().map(|r| r.stage).max().unwrap_or(0),
        iterations: d.state.diagnostics().iterations,
        contraction: d.contraction.clone(),
        diagnostics: d.state.diagnostics().into(),
        ok: ver.passes,
        verify: ver,
        normalized,
    };
    let summary = to_json(&out);
    Ok(Outcome {
        files: vec![
            ("trace.csv".into(), trace),
            ("state.json".into(), to_json(&StateFile::from_state(&setup, &d.state))),
            ("state_normalized.json".into(), to_json(&StateFile::from_state(&setup, &z))),
            ("deform.json".into(), summary.clone()),
        ],
        ok: out.ok,
        summary,
    })
}

fn load_state(path: &str, threads: usize) -> CliResult<(Setup, ZollState)> {
    let file: StateFile = parse(path, &read(path)?, STATE_SCHEMA)?;
    let setup = file.setup(path)?.with_executor(executor(threads)?);
    let state = file.to_state(path, &setup)?;
    Ok((setup, state))
}

pub fn cmd_verify(state_path: &str, chart_nodes: Option<usize>, tol: f64, threads: usize) -> CliResult<Outcome> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::usage("--tol must be positive"));
    }
    let (setup, state) = load_state(state_path, threads)?;
    let q = chart_nodes.unwrap_or(2 * setup.template.q);
    if q < setup.template.q {
        return Err(CliError::usage("--chart-nodes must be at least the state's Q"));
    }
    let out = verify(&setup, &state, q, tol, threads)?;
    let summary = to_json(&out);
    Ok(Outcome {
        files: vec![("report.json".into(), summary.clone())],
        ok: out.passes,
        summary,
    })
}

/// Setup and `(ρ, Φ)` from a state file, or the round point at default
/// resolution.
fn state_or_round(state: Option<&str>, n: usize, threads: usize) -> CliResult<(Setup, HarmonicField, TangentGraphField)> {
    match state {
        Some(p) => {
            let (s, st) = load_state(p, threads)?;
            if s.n != n {
                return Err(CliError::format(p, "field `n`: does not match the input"));
            }
            Ok((s, st.rho().clone(), st.phi().clone()))
        }
        None => {
            let s = Setup::with_defaults(n).map_err(CliError::usage)?.with_executor(executor(threads)?);
            let (rho, phi) = (HarmonicField::zero(n, s.lmax), TangentGraphField::zero(&s));
            Ok((s, rho, phi))
        }
    }
}

fn rep_header(n: usize, last: &str) -> Vec<String> {
    let mut h = vec!["rep".to_string()];
    h.extend((0..=n).map(|i| format!("v{i}")));
    h.push(last.into());
    h
}

/// `ℱ(ρ,Φ)(f)` at every grid representative.
pub fn cmd_funk(field_path: &str, state: Option<&str>, threads: usize) -> CliResult<Outcome> {
    let file: FieldFile = parse(field_path, &read(field_path)?, FIELD_SCHEMA)?;
    let f = file.to_field(field_path)?;
    let (setup, rho, phi) = state_or_round(state, f.n(), threads)?;
    let vals = funk_forward(&setup, &rho, &phi, &f);
    let rows: Vec<Vec<f64>> = vals
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut r = vec![i as f64];
            r.extend_from_slice(&setup.grid.reps[i][..=setup.n]);
            r.push(*v);
            r
        })
        .collect();
    let csv = table(&rep_header(setup.n, "value"), &rows)?;
    let sup = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let summary = format!("{{\"reps\": {}, \"sup\": {}}}\n", vals.len(), sup);
    Ok(Outcome {
        files: vec![("funk.csv".into(), csv)],
        summary,
        ok: true,
    })
}

/// The kernel of `ℱ*ℱ` over grid representatives (n=2), as `i,j,value`.
pub fn cmd_kernel(state: Option<&str>, band: Option<usize>, threads: usize) -> CliResult<Outcome> {
    let (setup, rho, phi) = state_or_round(state, 2, threads)?;
    let band = band.unwrap_or(setup.lmax);
    // The quadrature needs Φ off the grid, which chart modes cannot supply.
    if phi.max_abs_mode() != 0.0 {
        return Err(CliError::usage("kernel needs a state with Φ = 0; chart-mode graph fields are known only on the grid"));
    }
    let km = assemble_l(&setup, &rho, &ZeroGraph { n: 2 }, band)?;
    let r = km.reps();
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::usage(format!("csv: {e}"));
    w.write_record(["i", "j", "value"]).map_err(err)?;
    for i in 0..r {
        for j in 0..r {
            w.write_record([i.to_string(), j.to_string(), km.entry(i, j).to_string()]).map_err(err)?;
        }
    }
    let csv = String::from_utf8(w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?)
        .map_err(|e| CliError::usage(format!("csv: {e}")))?;
    let out = KernelOut {
        schema: KERNEL_SCHEMA.into(),
        n: 2,
        band,
        reps: r,
        condition_number: km.condition_number(),
        singular_coefficient: km.singular_coefficient.clone(),
    };
    let summary = to_json(&out);
    Ok(Outcome {
        files: vec![("kernel.csv".into(), csv), ("kernel.json".into(), summary.clone())],
        summary,
        ok: true,
    })
}

pub const KILLING_PRESETS: &[&str] = &["eqdiagonal"];

pub fn killing_preset(name: &str) -> CliResult<KillingConfig> {
    match name {
        "eqdiagonal" => Ok(KillingConfig {
            schema: KILLING_CONFIG_SCHEMA.into(),
            alpha: Some([1.1, 1.05, 1.02]),
            beta: Some([0.05, 0.03, 0.01]),
            coeffs: None,
        }),
        _ => Err(CliError::usage(format!(
            "unknown preset `{name}` (known: {})",
            KILLING_PRESETS.join(", ")
        ))),
    }
}

pub fn load_killing_config(path: &str) -> CliResult<KillingConfig> {
    parse(path, &read(path)?, KILLING_CONFIG_SCHEMA)
}

/// Residual threshold for a Killing metric to count as having minimal
/// equators.
pub const EQUATOR_TOL: f64 = 1e-9;

/// Metric from a Killing tensor on S³: minimality residual, Killing
/// identity, definiteness and the rigidity kernel; optionally a sampled
/// metric table.
pub fn cmd_killing(cfg: &KillingConfig, metric_csv: bool) -> CliResult<Outcome> {
    let k = match (&cfg.alpha, &cfg.beta, &cfg.coeffs) {
        (Some(a), Some(b), None) => diag_tensor(*a, *b).map_err(|e| CliError::usage(format!("alpha/beta: {e}")))?,
        (None, None, Some(c)) => {
            KillingTwoTensor::from_quaternion(c).map_err(|e| CliError::usage(format!("coeffs: {e}")))?
        }
        _ => return Err(CliError::usage("killing config needs `alpha` and `beta`, or `coeffs`")),
    };
    let pts = sample_points(3);
    let metric = MetricField::new(k.clone())?;
    let rig = rigidity_map(&k)?;
    let out = KillingOut {
        schema: KILLING_SCHEMA.into(),
        coeffs: k.quaternion.clone().unwrap_or_default(),
        min_eigenvalue: min_eigenvalue(&k, &pts),
        killing_defect: killing_defect(&k, &pts),
        equator_residual: equator_residual(&metric, &pts),
        rigidity: RigidityOut {
            kernel_dim: rig.kernel_dim,
            threshold: RIGIDITY_THRESHOLD,
            singular_values: rig.singular_values,
        },
    };
    let summary = to_json(&out);
    let mut files = vec![("killing.json".into(), summary.clone())];
    if metric_csv {
        let mut header: Vec<String> = (0..4).map(|i| format!("x{i}")).collect();
        header.extend(["divisor".into(), "density".into()]);
        for a in 0..3 {
            for b in a..3 {
                header.push(format!("g{a}{b}"));
            }
        }
        let rows: Vec<Vec<f64>> = pts
            .iter()
            .map(|p| {
                let fr = orthogonal_complement(3, &[*p]);
                let g = metric.metric(p);
                let mut r = p.to_vec();
                r.push(metric.conformal_divisor(p));
                r.push(metric.volume_density(p));
                for a in 0..3 {
                    for b in a..3 {
                        r.push(dot(&fr[a], &mat_vec(&g, &fr[b])));
                    }
                }
                r
            })
            .collect();
        files.push(("metric.csv".into(), table(&header, &rows)?));
    }
    Ok(Outcome {
        files,
        ok: out.equator_residual < EQUATOR_TOL,
        summary,
    })
}

/// Round Funk eigenvalues by degree.
pub fn cmd_spectrum(n: usize, lmax: usize) -> CliResult<Outcome> {
    if n != 2 && n != 3 {
        return Err(CliError::usage("--n must be 2 or 3"));
    }
    let ev = round_funk_spectrum(n, lmax)?;
    let out = SpectrumOut {
        schema: SPECTRUM_SCHEMA.into(),
        n,
        lmax,
        lambda0: ev[0],
        odd_max_abs: ev.iter().skip(1).step_by(2).fold(0.0, |m, v| m.max(v.abs())),
        eigenvalues: ev,
    };
    let summary = to_json(&out);
    Ok(Outcome {
        files: vec![("spectrum.json".into(), summary.clone())],
        summary,
        ok: true,
    })
}
