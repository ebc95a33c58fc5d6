//! On-disk formats. Every JSON document carries a `schema` tag.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use zoll_core::graphs::TangentGraphField;
use zoll_core::setup::Setup;
use zoll_core::solver::{Diagnostics, ZollReport, ZollState};
use zoll_core::sphere::{HarmonicField, Parity};

use crate::error::{CliError, CliResult};

pub const CONFIG_SCHEMA: &str = "zoll.config/1";
pub const FIELD_SCHEMA: &str = "zoll.field/1";
pub const STATE_SCHEMA: &str = "zoll.state/1";
pub const REPORT_SCHEMA: &str = "zoll.report/1";
pub const DEFORM_SCHEMA: &str = "zoll.deform/1";
pub const KERNEL_SCHEMA: &str = "zoll.kernel/1";
pub const KILLING_CONFIG_SCHEMA: &str = "zoll.killing-config/1";
pub const KILLING_SCHEMA: &str = "zoll.killing/1";
pub const SPECTRUM_SCHEMA: &str = "zoll.spectrum/1";

/// Parses `text` (from `path`) and checks its schema tag.
pub fn parse<T: DeserializeOwned>(path: &str, text: &str, schema: &str) -> CliResult<T> {
    #[derive(Deserialize)]
    struct Tag {
        schema: Option<String>,
    }
    let tag: Tag = serde_json::from_str(text).map_err(|e| CliError::format(path, e))?;
    match tag.schema.as_deref() {
        Some(s) if s == schema => {}
        Some(s) => return Err(CliError::format(path, format!("field `schema`: expected \"{schema}\", found \"{s}\""))),
        None => return Err(CliError::format(path, format!("field `schema`: missing (expected \"{schema}\")"))),
    }
    serde_json::from_str(text).map_err(|e| CliError::format(path, e))
}

pub fn read(path: &str) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_string(),
        source,
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Harmonic coefficients on Sⁿ in the library's orthonormal basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldFile {
    pub schema: String,
    pub n: usize,
    pub lmax: usize,
    pub coeffs: Vec<f64>,
}

impl FieldFile {
    pub fn from_field(f: &HarmonicField) -> Self {
        FieldFile {
            schema: FIELD_SCHEMA.into(),
            n: f.n(),
            lmax: f.lmax(),
            coeffs: f.coeffs().to_vec(),
        }
    }

    pub fn to_field(&self, path: &str) -> CliResult<HarmonicField> {
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(CliError::format(path, "field `coeffs`: non-finite entry"));
        }
        HarmonicField::from_coeffs(self.n, self.lmax, Parity::Any, self.coeffs.clone())
            .map(|f| f.detect_parity())
            .map_err(|e| CliError::format(path, format!("fields `n`/`lmax`/`coeffs`: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsOut {
    pub lambda1_inf: f64,
    pub lambda2_inf: f64,
    pub area_mean: f64,
    pub area_spread: f64,
    pub iterations: usize,
}

impl From<&Diagnostics> for DiagnosticsOut {
    fn from(d: &Diagnostics) -> Self {
        DiagnosticsOut {
            lambda1_inf: d.lambda1_inf,
            lambda2_inf: d.lambda2_inf,
            area_mean: d.area_mean,
            area_spread: d.area_spread,
            iterations: d.iterations,
        }
    }
}

/// A solver state together with the resolution it lives at.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    pub schema: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub lmax: usize,
    #[serde(rename = "L_g")]
    pub lg: usize,
    #[serde(rename = "Q")]
    pub q: usize,
    /// Conformal factor coefficients, degree ≤ L.
    pub rho: Vec<f64>,
    /// Graph modes, representative-major.
    pub phi: Vec<f64>,
    /// Informational; recomputed on load.
    pub diagnostics: DiagnosticsOut,
}

impl StateFile {
    pub fn from_state(setup: &Setup, state: &ZollState) -> Self {
        StateFile {
            schema: STATE_SCHEMA.into(),
            n: setup.n,
            lmax: setup.lmax,
            lg: setup.grid.band_limit,
            q: setup.template.q,
            rho: state.rho().coeffs().to_vec(),
            phi: state.phi().flat(),
            diagnostics: state.diagnostics().into(),
        }
    }

    pub fn setup(&self, path: &str) -> CliResult<Setup> {
        Setup::new(self.n, self.lmax, self.lg, self.q)
            .map_err(|e| CliError::format(path, format!("fields `n`/`L`/`L_g`/`Q`: {e}")))
    }

    pub fn to_state(&self, path: &str, setup: &Setup) -> CliResult<ZollState> {
        if self.rho.iter().chain(&self.phi).any(|c| !c.is_finite()) {
            return Err(CliError::format(path, "fields `rho`/`phi`: non-finite entry"));
        }
        let rho = HarmonicField::from_coeffs(self.n, self.lmax, Parity::Any, self.rho.clone())
            .map_err(|e| CliError::format(path, format!("field `rho`: {e}")))?;
        let phi = TangentGraphField::from_flat(setup, &self.phi)
            .map_err(|e| CliError::format(path, format!("field `phi`: {e}")))?;
        ZollState::new(setup, rho, phi).map_err(|e| CliError::format(path, format!("field `phi`: {e}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportOut {
    pub el_residual: f64,
    pub area_mean: f64,
    pub area_spread: f64,
    pub center_norm: f64,
    pub transversality: f64,
    pub pairs_checked: usize,
    pub pairs_failed: usize,
}

impl From<&ZollReport> for ReportOut {
    fn from(r: &ZollReport) -> Self {
        ReportOut {
            el_residual: r.el_residual,
            area_mean: r.area_mean,
            area_spread: r.area_spread,
            center_norm: r.center_norm,
            transversality: r.transversality,
            pairs_checked: r.pairs_checked,
            pairs_failed: r.pairs_failed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOut {
    pub schema: String,
    /// Chart nodes used for the re-quadrature.
    #[serde(rename = "Q")]
    pub q: usize,
    pub tol: f64,
    pub passes: bool,
    pub report: ReportOut,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedOut {
    pub area_mean: f64,
    /// `max |A(σ) − ω_{n−1}|` at the verification resolution.
    pub area_max_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformOut {
    pub schema: String,
    pub t: f64,
    pub stages: usize,
    pub iterations: usize,
    pub contraction: Vec<f64>,
    pub diagnostics: DiagnosticsOut,
    /// Re-verification passed at `verify.tol`.
    pub ok: bool,
    pub verify: VerifyOut,
    pub normalized: NormalizedOut,
}

/// One line of the corrector trace CSV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub stage: usize,
    pub iter: usize,
    pub t: f64,
    pub lambda1_inf: f64,
    pub lambda2_inf: f64,
    pub area_mean: f64,
    pub area_spread: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelOut {
    pub schema: String,
    pub n: usize,
    pub band: usize,
    pub reps: usize,
    pub condition_number: f64,
    pub singular_coefficient: Vec<f64>,
}

/// Either ordered diagonal weights or 21 quaternion-frame coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KillingConfig {
    pub schema: String,
    #[serde(default)]
    pub alpha: Option<[f64; 3]>,
    #[serde(default)]
    pub beta: Option<[f64; 3]>,
    #[serde(default)]
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RigidityOut {
    pub kernel_dim: usize,
    pub threshold: f64,
    pub singular_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KillingOut {
    pub schema: String,
    /// Coefficients over `W_p ⊙ W_q`, `p ≤ q`, frame order
    /// `X_i, X_j, X_k, Y_i, Y_j, Y_k`.
    pub coeffs: Vec<f64>,
    pub min_eigenvalue: f64,
    pub killing_defect: f64,
    pub equator_residual: f64,
    pub rigidity: RigidityOut,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOut {
    pub schema: String,
    pub n: usize,
    pub lmax: usize,
    /// Eigenvalue on degree-`l` harmonics, `l = 0..=lmax`.
    pub eigenvalues: Vec<f64>,
    pub lambda0: f64,
    pub odd_max_abs: f64,
}
