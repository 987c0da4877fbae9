//! Analytic model of the heralded teleporter.
//!
//! The resource is a two-mode EPR state `[Bob, A]`. Alice mixes the input
//! mode with `A` on a balanced beamsplitter and measures `X` on one output and
//! `Y` on the other. Loss is applied to Bob's arm before the measurement
//! algebra. The measurement-based amplifier multiplies the mean and variance
//! of the measured quadratures by `g²` and leaves Bob's conditional
//! statistics untouched, so every output moment is a closed expression in a
//! handful of Gaussian moments per quadrature (see [`QuadratureModel`]).

use nalgebra::DVector;

use crate::error::{invalid, Error, Result};
use crate::gaussian::{epr_covariance, EprSpec, GaussianState};

/// Mode index of Bob's EPR arm in [`combined_state`].
pub const BOB: usize = 0;
/// Output port measured in `Y`: `(A + In)/√2`.
pub const Y_PORT: usize = 1;
/// Output port measured in `X`: `(In - A)/√2`.
pub const X_PORT: usize = 2;

/// Parameters of one teleporter run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TeleporterConfig {
    pub epr: EprSpec,
    /// Feed-forward gain applied to Alice's `X` outcome.
    pub phi_x: f64,
    /// Feed-forward gain applied to Alice's `Y` outcome.
    pub phi_y: f64,
    /// Amplifier gain, `g ≥ 1`. `g = 1` is the deterministic teleporter.
    pub g: f64,
    /// Transmissivity of Bob's arm including detection, in `(0, 1]`.
    pub efficiency: f64,
    /// Input quadrature means `(⟨X_in⟩, ⟨Y_in⟩)`.
    pub input_mean: [f64; 2],
    /// Input quadrature variances, `(1, 1)` for a coherent state.
    pub input_var: [f64; 2],
}

impl TeleporterConfig {
    /// Lossless deterministic teleporter with symmetric squeezing `r`,
    /// feed-forward `√2` and a coherent input.
    pub fn unity_gain(r: f64, input_mean: [f64; 2]) -> Self {
        Self {
            epr: EprSpec::symmetric(r),
            phi_x: std::f64::consts::SQRT_2,
            phi_y: std::f64::consts::SQRT_2,
            g: 1.0,
            efficiency: 1.0,
            input_mean,
            input_var: [1.0, 1.0],
        }
    }

    /// Sets both feed-forward gains.
    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi_x = phi;
        self.phi_y = phi;
        self
    }

    pub fn with_gain(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_efficiency(mut self, efficiency: f64) -> Self {
        self.efficiency = efficiency;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.epr.validate()?;
        if !(self.g.is_finite() && self.g >= 1.0) {
            return Err(invalid("g", format!("gain {} must be ≥ 1", self.g)));
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(invalid("efficiency", format!("{} outside (0, 1]", self.efficiency)));
        }
        for (name, phi) in [("phi_x", self.phi_x), ("phi_y", self.phi_y)] {
            if !phi.is_finite() {
                return Err(invalid(name, "must be finite"));
            }
        }
        if self.input_mean.iter().any(|m| !m.is_finite()) {
            return Err(invalid("input_mean", "must be finite"));
        }
        if self
            .input_var
            .iter()
            .any(|&v| v.is_nan() || v < 1.0 - 1e-9 || !v.is_finite())
        {
            return Err(invalid("input_var", "input variances must be ≥ 1"));
        }
        Ok(())
    }
}

/// First and second moments of Bob's displaced output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutputMoments {
    pub mean_x: f64,
    pub mean_y: f64,
    pub var_x: f64,
    pub var_y: f64,
}

/// Three-mode state `[Bob, (A+In)/√2, (In-A)/√2]` after the input has been
/// mixed with Alice's arm and Bob's arm has suffered loss.
pub fn combined_state(cfg: &TeleporterConfig) -> Result<GaussianState> {
    cfg.validate()?;
    let input = GaussianState::single_mode(cfg.input_mean, cfg.input_var)?;
    epr_covariance(&cfg.epr)?
        .direct_sum(&input)
        .beamsplitter(1, 2, 0.5)?
        .apply_loss(BOB, cfg.efficiency)
}

/// Gaussian moments that fix one output quadrature: Bob's quadrature `B`
/// and Alice's measured quadrature `M` before post-selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureModel {
    pub bob_mean: f64,
    pub bob_var: f64,
    pub meas_mean: f64,
    pub meas_var: f64,
    /// `Cov(B, M)`.
    pub cross: f64,
    /// Input mean of this quadrature.
    pub input_mean: f64,
    pub input_var: f64,
}

impl QuadratureModel {
    /// Output mean for feed-forward `phi` and amplifier gain `g`.
    pub fn output_mean(&self, phi: f64, g: f64) -> f64 {
        let g2 = g * g;
        self.bob_mean + (self.cross / self.meas_var) * (g2 - 1.0) * self.meas_mean + phi * g2 * self.meas_mean
    }

    /// Output variance for feed-forward `phi` and amplifier gain `g`.
    pub fn output_var(&self, phi: f64, g: f64) -> f64 {
        let g2 = g * g;
        let c = self.cross;
        self.bob_var + (g2 - 1.0) * c * c / self.meas_var + 2.0 * phi * g2 * c + phi * phi * g2 * self.meas_var
    }

    /// `∂⟨q_out⟩/∂⟨q_in⟩`. The measured mean is `⟨q_in⟩/√2` and Bob's mean
    /// does not depend on the input, so the output mean is affine in the
    /// input mean.
    pub fn gain(&self, phi: f64, g: f64) -> f64 {
        let g2 = g * g;
        ((self.cross / self.meas_var) * (g2 - 1.0) + phi * g2) / std::f64::consts::SQRT_2
    }

    /// Signal transfer `G² V_in / V_out`, the SNR ratio of this quadrature.
    pub fn transfer(&self, phi: f64, g: f64) -> f64 {
        let gain = self.gain(phi, g);
        gain * gain * self.input_var / self.output_var(phi, g)
    }

    /// Input-output conditional variance `V_out - G² V_in`.
    pub fn conditional_var(&self, phi: f64, g: f64) -> f64 {
        let gain = self.gain(phi, g);
        self.output_var(phi, g) - gain * gain * self.input_var
    }

    /// Feed-forward that makes the output mean equal the input mean.
    pub fn unity_gain_phi(&self, g: f64) -> f64 {
        let g2 = g * g;
        (std::f64::consts::SQRT_2 - (self.cross / self.meas_var) * (g2 - 1.0)) / g2
    }
}

/// The `X` and `Y` quadrature models of `cfg`.
pub fn quadrature_models(cfg: &TeleporterConfig) -> Result<[QuadratureModel; 2]> {
    let s = combined_state(cfg)?;
    let (mean, cov) = (s.mean(), s.cov());
    let pick = |bob: usize, meas: usize, q: usize| QuadratureModel {
        bob_mean: mean[bob],
        bob_var: cov[(bob, bob)],
        meas_mean: mean[meas],
        meas_var: cov[(meas, meas)],
        cross: cov[(bob, meas)],
        input_mean: cfg.input_mean[q],
        input_var: cfg.input_var[q],
    };
    Ok([pick(2 * BOB, 2 * X_PORT, 0), pick(2 * BOB + 1, 2 * Y_PORT + 1, 1)])
}

/// Mean and variance of the teleported state.
pub fn output_moments(cfg: &TeleporterConfig) -> Result<OutputMoments> {
    let [qx, qy] = quadrature_models(cfg)?;
    Ok(OutputMoments {
        mean_x: qx.output_mean(cfg.phi_x, cfg.g),
        mean_y: qy.output_mean(cfg.phi_y, cfg.g),
        var_x: qx.output_var(cfg.phi_x, cfg.g),
        var_y: qy.output_var(cfg.phi_y, cfg.g),
    })
}

/// Conditional variance `1/cosh(2r)` of one EPR mode given the other.
pub fn conditional_variance_epr(r: f64) -> f64 {
    1.0 / (2.0 * r).cosh()
}

/// Fidelity between two single-mode Gaussian states with diagonal
/// covariances, given as `(mean, var)` per quadrature.
pub fn fidelity(input: &OutputMoments, output: &OutputMoments) -> f64 {
    let sx = output.var_x + input.var_x;
    let sy = output.var_y + input.var_y;
    let dx = output.mean_x - input.mean_x;
    let dy = output.mean_y - input.mean_y;
    2.0 / (sx * sy).sqrt() * (-0.5 * (dx * dx / sx + dy * dy / sy)).exp()
}

/// Input moments of `cfg` as an [`OutputMoments`] record, for [`fidelity`].
pub fn input_moments(cfg: &TeleporterConfig) -> OutputMoments {
    OutputMoments {
        mean_x: cfg.input_mean[0],
        mean_y: cfg.input_mean[1],
        var_x: cfg.input_var[0],
        var_y: cfg.input_var[1],
    }
}

/// Signal transfer and conditional-variance product of a teleporter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvParameters {
    pub t_q: f64,
    pub v_q: f64,
    /// Per-quadrature conditional variances `(V_x, V_y)`.
    pub v_x: f64,
    pub v_y: f64,
}

/// `T_q = T_x + T_y` and `V_q = V_x V_y`.
pub fn tv_parameters(cfg: &TeleporterConfig) -> Result<TvParameters> {
    if cfg.input_mean.iter().all(|&m| m == 0.0) {
        return Err(Error::UndefinedSnr);
    }
    let [qx, qy] = quadrature_models(cfg)?;
    let v_x = qx.conditional_var(cfg.phi_x, cfg.g);
    let v_y = qy.conditional_var(cfg.phi_y, cfg.g);
    Ok(TvParameters {
        t_q: qx.transfer(cfg.phi_x, cfg.g) + qy.transfer(cfg.phi_y, cfg.g),
        v_q: v_x * v_y,
        v_x,
        v_y,
    })
}

/// Feed-forward gain giving unity gain for a lossless teleporter with
/// symmetric squeezing `r` and amplifier gain `g`.
pub fn unity_gain_phi(r: f64, g: f64) -> Result<f64> {
    let cfg = TeleporterConfig::unity_gain(r, [1.0, 1.0]).with_gain(g);
    unity_gain_phi_for(&cfg)
}

/// Unity-gain feed-forward `(φ_x, φ_y)` for an arbitrary configuration.
/// The current `phi_x`/`phi_y` of `cfg` are ignored.
pub fn unity_gain_phi_xy(cfg: &TeleporterConfig) -> Result<(f64, f64)> {
    let [qx, qy] = quadrature_models(cfg)?;
    let (px, py) = (qx.unity_gain_phi(cfg.g), qy.unity_gain_phi(cfg.g));
    if px.is_finite() && py.is_finite() {
        Ok((px, py))
    } else {
        Err(invalid("phi", "no finite unity-gain feed-forward"))
    }
}

fn unity_gain_phi_for(cfg: &TeleporterConfig) -> Result<f64> {
    Ok(unity_gain_phi_xy(cfg)?.0)
}

/// Printed closed forms for `T_q` and `V_q` of a symmetric teleporter,
/// kept as regression cross-checks for [`tv_parameters`].
///
/// These carry an explicit `⟨X_in⟩²` factor where the signal-transfer
/// definition is dimensionless: `t_q_ideal(x, ..) = x² T_q` and `v_q_ideal`
/// agrees with [`tv_parameters`] only at `⟨X_in⟩ = 1`.
pub mod closed_form {
    /// Lossless `T_q`.
    pub fn t_q_ideal(x_in: f64, phi: f64, g: f64, r: f64) -> f64 {
        let g2 = g * g;
        let s2 = std::f64::consts::SQRT_2;
        let num = x_in * x_in * (s2 * g2 * phi - 2.0 * (g2 - 1.0) * r.tanh()).powi(2);
        let den = g2 * ((phi * phi + 2.0) * (2.0 * r).cosh() - 2.0 * s2 * phi * (2.0 * r).sinh())
            + g2 * (phi * phi - 2.0)
            + 2.0;
        num / den
    }

    /// Lossless `V_q`.
    pub fn v_q_ideal(x_in: f64, phi: f64, g: f64, r: f64) -> f64 {
        let g2 = g * g;
        let s2 = std::f64::consts::SQRT_2;
        let inner = x_in * x_in * (s2 * g2 * phi - 2.0 * (g2 - 1.0) * r.tanh()).powi(2)
            - 4.0 * g2 * (phi * r.cosh() - s2 * r.sinh()).powi(2)
            + 8.0 * r.sinh().powi(2)
            - 4.0 * (2.0 * r).cosh();
        inner * inner / 16.0
    }

    /// `T_q` with transmissivity `t` on Bob's arm.
    pub fn t_q_lossy(x_in: f64, phi: f64, g: f64, r: f64, t: f64) -> f64 {
        let g2 = g * g;
        let st = t.sqrt();
        let s2 = std::f64::consts::SQRT_2;
        let d = 0.5 * st * (2.0 * r).cosh() - 0.5 * st + 1.0;
        let e = (-2.0 * r).exp() - (2.0 * r).exp();
        let a = e * st / (2.0 * s2 * d) + phi;
        let num = 2.0 * (g2 * st * x_in * a / s2 - e * t * x_in / (4.0 * d)).powi(2);
        let den = g2 * d * a * a - e * e * t / (8.0 * d) + 0.5 * ((-2.0 * r).exp() + (2.0 * r).exp());
        num / den
    }

    /// `V_q` with transmissivity `t` on Bob's arm.
    pub fn v_q_lossy(x_in: f64, phi: f64, g: f64, r: f64, t: f64) -> f64 {
        let g2 = g * g;
        let st = t.sqrt();
        let s2 = std::f64::consts::SQRT_2;
        let (c2, sh2) = ((2.0 * r).cosh(), (2.0 * r).sinh());
        let d = st * c2 - st + 2.0;
        let t1 =
            t * x_in * x_in * (st * (2.0 * (g2 - 1.0) * sh2 - s2 * g2 * phi * c2) + s2 * g2 * (st - 2.0) * phi).powi(2)
                / (d * d);
        let t2 = -2.0 * g2 * (st * (s2 * sh2 - phi * c2) + (st - 2.0) * phi).powi(2) / d;
        let t3 = 4.0 * t * sh2 * sh2 / d;
        (t1 + t2 + t3 - 4.0 * c2).powi(2) / 16.0
    }
}

/// Mean vector of Alice's two measured quadratures `(x_m, y_m)` and Bob's
/// mode, in that order, before post-selection. Used by the Monte Carlo
/// sampler.
pub(crate) fn measurement_state(cfg: &TeleporterConfig) -> Result<(DVector<f64>, nalgebra::DMatrix<f64>)> {
    let s = combined_state(cfg)?;
    // [x_m, y_m, X_B, Y_B]
    let idx = [2 * X_PORT, 2 * Y_PORT + 1, 2 * BOB, 2 * BOB + 1];
    let mean = DVector::from_iterator(4, idx.iter().map(|&i| s.mean()[i]));
    let cov = nalgebra::DMatrix::from_fn(4, 4, |a, b| s.cov()[(idx[a], idx[b])]);
    Ok((mean, cov))
}
