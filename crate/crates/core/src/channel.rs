//! Phase-insensitive single-mode Gaussian channels `σ → τσ + νI`.

use std::fmt;
use std::sync::Once;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{epr_covariance, EprSpec, GaussianState};
use crate::teleporter::TvParameters;

/// Default squeezing of the two-mode squeezed vacuum used as Choi probe.
pub const DEFAULT_R_CHOI: f64 = 2.0;

/// Local asymmetry above which the entanglement of formation is flagged
/// as approximate.
pub const ASYMMETRY_WARN: f64 = 0.01;

/// Transmissivity `τ` and added noise `ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub tau: f64,
    pub nu: f64,
}

impl ChannelParams {
    pub fn new(tau: f64, nu: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(invalid("tau", format!("{tau} must be finite and > 0")));
        }
        if !(nu.is_finite() && nu >= 0.0) {
            return Err(invalid("nu", format!("{nu} must be finite and ≥ 0")));
        }
        Ok(Self { tau, nu })
    }

    pub fn identity() -> Self {
        Self { tau: 1.0, nu: 0.0 }
    }

    /// Whether the map is completely positive: `ν ≥ |1 - τ|`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.nu >= (1.0 - self.tau).abs() - tol
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &ChannelParams) -> ChannelParams {
        compose(self, next)
    }
}

/// Family of a channel in the `(τ, ν)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelKind {
    PureLoss,
    ThermalLoss,
    PureAmplifier,
    ThermalAmplifier,
    AdditiveNoise,
    Identity,
    NonPhysical,
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ChannelKind::PureLoss => "PureLoss",
            ChannelKind::ThermalLoss => "ThermalLoss",
            ChannelKind::PureAmplifier => "PureAmplifier",
            ChannelKind::ThermalAmplifier => "ThermalAmplifier",
            ChannelKind::AdditiveNoise => "AdditiveNoise",
            ChannelKind::Identity => "Identity",
            ChannelKind::NonPhysical => "NonPhysical",
        };
        f.write_str(s)
    }
}

/// Classification result. `chi = ν/|1 - τ|` for loss and amplifier channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelClass {
    pub kind: ChannelKind,
    pub chi: Option<f64>,
}

/// Default tolerance of [`classify`].
pub const CLASSIFY_TOL: f64 = 1e-6;

pub fn classify(params: &ChannelParams, tol: f64) -> ChannelClass {
    let ChannelParams { tau, nu } = *params;
    let gap = (1.0 - tau).abs();
    let class = |kind, chi| ChannelClass { kind, chi };
    if nu < gap - tol {
        return class(ChannelKind::NonPhysical, None);
    }
    if gap <= tol {
        return if nu <= tol {
            class(ChannelKind::Identity, None)
        } else {
            class(ChannelKind::AdditiveNoise, None)
        };
    }
    let chi = nu / gap;
    let pure = (chi - 1.0).abs() <= tol;
    let kind = match (tau < 1.0, pure) {
        (true, true) => ChannelKind::PureLoss,
        (true, false) => ChannelKind::ThermalLoss,
        (false, true) => ChannelKind::PureAmplifier,
        (false, false) => ChannelKind::ThermalAmplifier,
    };
    class(kind, Some(chi))
}

/// `(τ1, ν1)` followed by `(τ2, ν2)` is `(τ1τ2, τ2ν1 + ν2)`.
pub fn compose(first: &ChannelParams, second: &ChannelParams) -> ChannelParams {
    ChannelParams {
        tau: first.tau * second.tau,
        nu: second.tau * first.nu + second.nu,
    }
}

/// Applies the channel to `mode` of `state`.
pub fn apply_channel(params: &ChannelParams, state: &GaussianState, mode: usize) -> Result<GaussianState> {
    if !(params.tau.is_finite() && params.tau > 0.0) {
        return Err(invalid("tau", format!("{} must be > 0", params.tau)));
    }
    let out = state.apply_attenuation(mode, params.tau, params.nu)?;
    if !out.is_physical() {
        log::warn!(
            "channel (τ = {}, ν = {}) produced a non-physical state",
            params.tau,
            params.nu
        );
    }
    Ok(out)
}

/// `ν = √V_q`, `τ = T_q √V_q / (2 - T_q)`.
pub fn tv_to_taunu(t_q: f64, v_q: f64) -> Result<ChannelParams> {
    if !(t_q.is_finite() && v_q.is_finite()) {
        return Err(Error::ChannelMap("non-finite T_q or V_q".into()));
    }
    if v_q < 0.0 {
        return Err(Error::ChannelMap(format!("V_q = {v_q} is negative")));
    }
    if t_q <= 0.0 || t_q >= 2.0 {
        return Err(Error::ChannelMap(format!("T_q = {t_q} outside (0, 2)")));
    }
    let nu = v_q.sqrt();
    let tau = t_q * nu / (2.0 - t_q);
    if tau <= 0.0 {
        return Err(Error::ChannelMap("V_q = 0 maps to τ = 0".into()));
    }
    Ok(ChannelParams { tau, nu })
}

/// `V_q = ν²`, `T_q = 2τ/(τ + ν)`.
pub fn taunu_to_tv(params: &ChannelParams) -> Result<(f64, f64)> {
    let ChannelParams { tau, nu } = *params;
    if tau + nu <= 0.0 {
        return Err(Error::ChannelMap("τ + ν must be positive".into()));
    }
    Ok((2.0 * tau / (tau + nu), nu * nu))
}

/// Channel parameters of a teleporter. Both per-quadrature conditional
/// variances must be non-negative for `V_q = V_x V_y` to define `ν`.
pub fn channel_from_tv(tv: &TvParameters) -> Result<ChannelParams> {
    if tv.v_x < 0.0 || tv.v_y < 0.0 {
        return Err(Error::ChannelMap(format!(
            "negative conditional variance (V_x = {}, V_y = {})",
            tv.v_x, tv.v_y
        )));
    }
    tv_to_taunu(tv.t_q, tv.v_q)
}

/// Two-mode squeezed vacuum at `r_choi` with the channel on its second mode.
pub fn choi_state(params: &ChannelParams, r_choi: f64) -> Result<GaussianState> {
    if !(r_choi.is_finite() && r_choi > 0.0) {
        return Err(invalid("r_choi", format!("{r_choi} must be > 0")));
    }
    let tmsv = epr_covariance(&EprSpec::symmetric(r_choi))?;
    apply_channel(params, &tmsv, 1)
}

/// Relative difference of the two local variances, `|a - b|/(a + b)`.
pub fn local_asymmetry(state: &GaussianState) -> Result<f64> {
    if state.n_modes() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: state.mean().len(),
        });
    }
    let c = state.cov();
    let a = c[(0, 0)] + c[(1, 1)];
    let b = c[(2, 2)] + c[(3, 3)];
    Ok((a - b).abs() / (a + b))
}

/// Smallest symplectic eigenvalue of the partial transpose.
pub fn min_pt_eigenvalue(state: &GaussianState) -> Result<f64> {
    state.partial_transpose(1)?.min_symplectic_eigenvalue()
}

fn eof_kernel(x: f64) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    let (s, r) = (x.sqrt(), 1.0 / x.sqrt());
    let cp = (r + s).powi(2) / 4.0;
    let cm = (r - s).powi(2) / 4.0;
    let term = |c: f64| if c > 0.0 { c * c.log2() } else { 0.0 };
    term(cp) - term(cm)
}

static ASYMMETRY_NOTICE: Once = Once::new();

/// Entanglement of formation (in ebits) of a two-mode Gaussian state,
/// evaluated from the smallest symplectic eigenvalue `ν̃` of its partial
/// transpose as `h(ν̃)`. The expression is exact for symmetric states; states
/// whose local variances differ by more than [`ASYMMETRY_WARN`] are flagged.
pub fn entanglement_of_formation(state: &GaussianState) -> Result<f64> {
    state.check_physical()?;
    let asym = local_asymmetry(state)?;
    if asym > ASYMMETRY_WARN {
        ASYMMETRY_NOTICE.call_once(|| {
            log::warn!(
                "entanglement of formation of an asymmetric state (asymmetry {:.1}%) is approximate",
                100.0 * asym
            )
        });
        log::debug!("E_F on asymmetric state, asymmetry {asym:.4}");
    }
    Ok(eof_kernel(min_pt_eigenvalue(state)?))
}

/// E_F of the Choi state of `params`.
pub fn choi_entanglement(params: &ChannelParams, r_choi: f64) -> Result<f64> {
    entanglement_of_formation(&choi_state(params, r_choi)?)
}

/// Change in Choi-state entanglement between two channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSuppression {
    /// `E_F(after) - E_F(before)`.
    pub score: f64,
    /// `τ_before < τ_after` and `ν_before > ν_after`.
    pub improved: bool,
}

pub fn noise_suppression_score(before: &ChannelParams, after: &ChannelParams, r_choi: f64) -> Result<NoiseSuppression> {
    let score = choi_entanglement(after, r_choi)? - choi_entanglement(before, r_choi)?;
    Ok(NoiseSuppression {
        score,
        improved: before.tau < after.tau && before.nu > after.nu,
    })
}
