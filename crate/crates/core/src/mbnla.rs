//! Measurement-based noiseless linear amplification.
//!
//! The filter acts on Alice's dual-homodyne outcome expressed as a
//! standardized amplitude `α = x_m/σ_x + i·y_m/σ_y`, where `σ` is the
//! standard deviation of each measured quadrature before post-selection. In
//! that frame the source density is `exp(-|α - α_m|²/2)/(2π)` and the filter
//!
//! ```text
//! f(α) = exp(½ (|α|² - α_c²)(1 - g⁻²))   for |α| < α_c
//!      = 1                               otherwise
//! ```
//!
//! multiplies the mean and the variance of each measured quadrature by `g²`
//! as `α_c → ∞`. `α_c` is therefore expressed in standard deviations.

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Amplifier gain and filter cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub g: f64,
    pub alpha_c: f64,
}

impl FilterSpec {
    pub fn new(g: f64, alpha_c: f64) -> Result<Self> {
        let spec = Self { g, alpha_c };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g.is_finite() && self.g >= 1.0) {
            return Err(invalid("g", format!("gain {} must be ≥ 1", self.g)));
        }
        if !(self.alpha_c.is_finite() && self.alpha_c >= 0.0) {
            return Err(invalid(
                "alpha_c",
                format!("cutoff {} must be finite and ≥ 0", self.alpha_c),
            ));
        }
        Ok(())
    }

    fn k(&self) -> f64 {
        1.0 - 1.0 / (self.g * self.g)
    }
}

/// Acceptance probability of outcome `alpha`.
pub fn filter_probability(spec: &FilterSpec, alpha: Complex64) -> f64 {
    filter_probability_norm_sqr(spec, alpha.norm_sqr())
}

/// [`filter_probability`] as a function of `|α|²`.
pub fn filter_probability_norm_sqr(spec: &FilterSpec, norm_sqr: f64) -> f64 {
    let cutoff_sqr = spec.alpha_c * spec.alpha_c;
    if norm_sqr >= cutoff_sqr {
        1.0
    } else {
        (0.5 * (norm_sqr - cutoff_sqr) * spec.k()).exp()
    }
}

/// Accepts iff `f(α) > draw`, with `draw` uniform on `[0, 1)`.
pub fn accept(spec: &FilterSpec, alpha: Complex64, draw: f64) -> bool {
    filter_probability(spec, alpha) > draw
}

/// `α_c = k · input_std`.
pub fn default_cutoff(input_std: f64, k: f64) -> f64 {
    if !(3.0..=6.0).contains(&k) {
        log::warn!("filter cutoff of {k} standard deviations is outside the usual 3-6 range");
    }
    k * input_std
}

const RADIAL_TOL: f64 = 1e-10;
const ANGULAR_TOL: f64 = 1e-12;
const MAX_ERROR: f64 = 1e-8;

/// `∬_{|α|<R} h(α) d²α` by nested double-exponential quadrature in polar
/// coordinates.
fn integrate_disk<F>(radius: f64, h: F) -> Result<f64>
where
    F: Fn(Complex64) -> f64,
{
    if radius == 0.0 {
        return Ok(0.0);
    }
    let worst = std::cell::Cell::new(0.0f64);
    let outer = quadrature::double_exponential::integrate(
        |rho| {
            let inner = quadrature::double_exponential::integrate(
                |theta| h(Complex64::from_polar(rho, theta)),
                0.0,
                std::f64::consts::TAU,
                ANGULAR_TOL,
            );
            worst.set(worst.get().max(inner.error_estimate * rho));
            rho * inner.integral
        },
        0.0,
        radius,
        RADIAL_TOL,
    );
    let err = outer.error_estimate + worst.get() * radius;
    if !outer.integral.is_finite() || err > MAX_ERROR * outer.integral.abs().max(1.0) {
        return Err(Error::QuadratureNonConvergence(err));
    }
    Ok(outer.integral)
}

/// Probability that one trial passes the filter when the standardized
/// source is centred on `alpha_m`.
///
/// Only the disk `|α| < α_c` needs numerical work since `f = 1` outside:
/// `P = 1 + ∬_disk p(α)(f(α) - 1) d²α`.
pub fn success_probability(spec: &FilterSpec, alpha_m: Complex64) -> Result<f64> {
    spec.validate()?;
    if spec.g == 1.0 {
        return Ok(1.0);
    }
    let deficit = integrate_disk(spec.alpha_c, |a| {
        let p = (-0.5 * (a - alpha_m).norm_sqr()).exp() / std::f64::consts::TAU;
        p * (filter_probability(spec, a) - 1.0)
    })?;
    Ok((1.0 + deficit).clamp(0.0, 1.0))
}

/// The printed closed-form success probability, evaluated literally in the
/// unit convention it is written in (source density `exp(-|α - α_m|²)`, no
/// normalization). Kept only as a cross-check against
/// [`success_probability`]; the two do not agree in general.
pub fn success_probability_printed(spec: &FilterSpec, alpha_m: Complex64) -> Result<f64> {
    spec.validate()?;
    let (g, ac) = (spec.g, spec.alpha_c);
    let prefactor = ((g - 1.0) * alpha_m.norm_sqr() - ac * ac * (1.0 - 1.0 / g)).exp();
    let inside = integrate_disk(ac, |a| (-(a - g * alpha_m).norm_sqr() / g).exp())?;
    let source_inside = integrate_disk(ac, |a| (-(a - alpha_m).norm_sqr()).exp())?;
    Ok(prefactor * inside + std::f64::consts::PI - source_inside)
}

/// Ideal `g^N` acting on a coherent state `|α⟩`: returns `gα` and the
/// unnormalized weight `exp((g² - 1)|α|²)` of `|gα⟩`.
pub fn nla_transform_coherent(g: f64, alpha: Complex64) -> Result<(Complex64, f64)> {
    if !(g.is_finite() && g >= 1.0) {
        return Err(invalid("g", format!("gain {g} must be ≥ 1")));
    }
    let amplified = alpha * g;
    if amplified.norm_sqr() > 700.0 {
        return Err(Error::Overflow(format!("|gα|² = {} exceeds 700", amplified.norm_sqr())));
    }
    Ok((amplified, ((g * g - 1.0) * alpha.norm_sqr()).exp()))
}

/// Heralded mixture `P_s |β⟩⟨β| + (1 - P_s) |0⟩⟨0|` of an amplified coherent
/// state `β` with vacuum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AverageState {
    pub p_success: f64,
    pub amplitude: Complex64,
}

impl AverageState {
    pub fn new(p_success: f64, amplitude: Complex64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_success) {
            return Err(invalid("p_success", format!("{p_success} outside [0, 1]")));
        }
        Ok(Self { p_success, amplitude })
    }

    /// Mixture built from the output of [`nla_transform_coherent`].
    pub fn from_nla(g: f64, alpha: Complex64, p_success: f64) -> Result<Self> {
        let (beta, _) = nla_transform_coherent(g, alpha)?;
        Self::new(p_success, beta)
    }

    fn coherent_mean(&self) -> [f64; 2] {
        [2.0 * self.amplitude.re, 2.0 * self.amplitude.im]
    }

    /// Quadrature means of the mixture.
    pub fn mean(&self) -> [f64; 2] {
        let m = self.coherent_mean();
        [self.p_success * m[0], self.p_success * m[1]]
    }

    /// Quadrature covariance of the mixture, `I + P(1-P) m mᵀ`.
    pub fn cov(&self) -> [[f64; 2]; 2] {
        let m = self.coherent_mean();
        let w = self.p_success * (1.0 - self.p_success);
        [
            [1.0 + w * m[0] * m[0], w * m[0] * m[1]],
            [w * m[0] * m[1], 1.0 + w * m[1] * m[1]],
        ]
    }
}
