//! Isotropic covariance families and the generalized covariance `G_alpha`
//! that governs their behaviour at the origin.
//!
//! Every family satisfies, as `t -> 0`,
//!
//! ```text
//! K(t) - sum_{k <= p_alpha} a_k t^{2k}  ~  c * G_alpha(t)
//! ```
//!
//! with `a_k` from [`CovarianceModel::polynomial_part`] and `c` from
//! [`CovarianceModel::c`]. The closed forms per family:
//!
//! * powered exponential `s^2 exp(-(t/r)^g)`, `g in (0, 2)`: `alpha = g`,
//!   `c = s^2 / r^g`.
//! * Matérn `s^2 2^(1-nu)/Gamma(nu) (t/r)^nu K_nu(t/r)`: `alpha = 2 nu`,
//!   `c = s^2 |Gamma(-nu)| / Gamma(nu) / (2r)^(2nu)` for non-integer `nu`
//!   and `c = s^2 2^(1-2m) / (m! (m-1)! r^(2m))` for integer `nu = m`.
//! * polynomial-plus-fractional: a Matérn component of order `alpha/2` plus a
//!   squared-exponential component, with weights chosen so the expansion is
//!   exactly `variance - quadratic t^2 + c G_alpha(t) + O(t^4)`. Defined for
//!   `alpha in (2, 4)`, i.e. once mean-square differentiable fields.
//!
//! The rough field used in the worked examples is the Matérn model with
//! variance 0.5151, `alpha = 0.7` and `c = 1`, so
//! `K(t) = 0.5151 - t^0.7 + O(t^2)`; its range is `0.5 (0.5151 |Gamma(-0.35)| /
//! Gamma(0.35))^(1/0.7) ~ 0.364`.

use crate::bessel::bessel_k;
use crate::error::{Error, Result};

/// `p_alpha`: `floor(alpha/2)` unless `alpha/2` is an integer, then `alpha/2 - 1`.
pub fn p_alpha(alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    let half = alpha / 2.0;
    if half == half.floor() {
        Ok(half as usize - 1)
    } else {
        Ok(half.floor() as usize)
    }
}

/// `G_alpha(t)`, with `G_alpha(0) = 0` for every `alpha`.
pub fn g_alpha(alpha: f64, t: f64) -> Result<f64> {
    Ok(GeneralizedCovariance::new(alpha)?.eval(t))
}

/// `G_alpha` with the branch and sign resolved once, for inner loops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeneralizedCovariance {
    alpha: f64,
    sign: f64,
    log_branch: bool,
}

impl GeneralizedCovariance {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
        }
        let half = alpha / 2.0;
        let log_branch = half == half.floor();
        let exponent = if log_branch { 1.0 + half } else { 1.0 + half.floor() };
        let sign = if exponent as i64 % 2 == 0 { 1.0 } else { -1.0 };
        Ok(Self { alpha, sign, log_branch })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        if t == 0.0 {
            return 0.0;
        }
        let p = t.powf(self.alpha);
        if self.log_branch {
            self.sign * p * t.ln()
        } else {
            self.sign * p
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovarianceFamily {
    PoweredExponential,
    Matern,
    /// `quadratic` is the coefficient `b` in `K(t) = variance - b t^2 + c G_alpha(t) + ...`.
    PolynomialPlusFractional {
        c: f64,
        quadratic: f64,
    },
}

impl CovarianceFamily {
    pub fn name(&self) -> &'static str {
        match self {
            CovarianceFamily::PoweredExponential => "powered-exponential",
            CovarianceFamily::Matern => "matern",
            CovarianceFamily::PolynomialPlusFractional { .. } => "polynomial-plus-fractional",
        }
    }
}

/// An isotropic covariance `K(t)` on the plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovarianceModel {
    family: CovarianceFamily,
    variance: f64,
    range: f64,
    alpha: f64,
    /// Weight of the Matérn component (equals `variance` except for
    /// polynomial-plus-fractional).
    matern_variance: f64,
    /// Squared-exponential component `(weight, length^2)`.
    gaussian: Option<(f64, f64)>,
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn is_integer(x: f64) -> bool {
    x == x.floor()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `c / (s^2 r^(-alpha))` for a unit-variance, unit-range Matérn of order `nu`.
fn matern_c_factor(nu: f64) -> f64 {
    if is_integer(nu) {
        let m = nu as usize;
        2f64.powi(1 - 2 * m as i32) / (factorial(m) * factorial(m - 1))
    } else {
        libm::tgamma(-nu).abs() / libm::tgamma(nu) * 2f64.powf(-2.0 * nu)
    }
}

/// Coefficient of `x^{2k}` in `2^(1-nu)/Gamma(nu) x^nu K_nu(x)`, valid for `k < nu`.
fn matern_even_coefficient(nu: f64, k: usize) -> f64 {
    let prod: f64 = (1..=k).map(|j| j as f64 - nu).product();
    4f64.powi(-(k as i32)) / (factorial(k) * prod)
}

impl CovarianceModel {
    /// `variance * exp(-(t/range)^alpha)`, `alpha in (0, 2)`.
    pub fn powered_exponential(variance: f64, range: f64, alpha: f64) -> Result<Self> {
        check_positive("variance", variance)?;
        check_positive("range", range)?;
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Domain(format!("powered-exponential exponent must lie in (0, 2), got {alpha}")));
        }
        Ok(Self {
            family: CovarianceFamily::PoweredExponential,
            variance,
            range,
            alpha,
            matern_variance: variance,
            gaussian: None,
        })
    }

    /// Matérn with smoothness `nu = alpha / 2`.
    pub fn matern(variance: f64, range: f64, alpha: f64) -> Result<Self> {
        check_positive("variance", variance)?;
        check_positive("range", range)?;
        check_positive("alpha", alpha)?;
        Ok(Self { family: CovarianceFamily::Matern, variance, range, alpha, matern_variance: variance, gaussian: None })
    }

    /// Matérn whose range is chosen so that the `G_alpha` coefficient equals `c`.
    pub fn matern_with_expansion(variance: f64, alpha: f64, c: f64) -> Result<Self> {
        check_positive("variance", variance)?;
        check_positive("alpha", alpha)?;
        check_positive("c", c)?;
        // c = variance * factor / range^alpha
        let range = (variance * matern_c_factor(alpha / 2.0) / c).powf(1.0 / alpha);
        Self::matern(variance, range, alpha)
    }

    /// Matérn-plus-squared-exponential with prescribed expansion
    /// `variance - quadratic t^2 + c G_alpha(t) + O(t^4)`; `range` is the
    /// Matérn length scale.
    pub fn polynomial_plus_fractional(variance: f64, quadratic: f64, alpha: f64, c: f64, range: f64) -> Result<Self> {
        check_positive("variance", variance)?;
        check_positive("quadratic", quadratic)?;
        check_positive("c", c)?;
        check_positive("range", range)?;
        if !(alpha > 2.0 && alpha < 4.0) {
            return Err(Error::Domain(format!("polynomial-plus-fractional needs alpha in (2, 4), got {alpha}")));
        }
        let nu = alpha / 2.0;
        let matern_variance = c * range.powf(alpha) / matern_c_factor(nu);
        let gauss_variance = variance - matern_variance;
        // Matérn contributes matern_variance * coef_1 / range^2 to the t^2 term (negative).
        let matern_quad = -matern_variance * matern_even_coefficient(nu, 1) / (range * range);
        let gauss_quad = quadratic - matern_quad;
        if gauss_variance <= 0.0 || gauss_quad <= 0.0 {
            return Err(Error::Domain(format!(
                "range {range} leaves no room for the squared-exponential part \
                 (weight {gauss_variance}, quadratic {gauss_quad}); choose a smaller range"
            )));
        }
        let length2 = gauss_variance / gauss_quad;
        Ok(Self {
            family: CovarianceFamily::PolynomialPlusFractional { c, quadratic },
            variance,
            range,
            alpha,
            matern_variance,
            gaussian: Some((gauss_variance, length2)),
        })
    }

    /// The rough field of the worked example: `K(t) = 0.5151 - t^0.7 + O(t^2)`.
    pub fn rough_example() -> Self {
        Self::matern_with_expansion(0.5151, 0.7, 1.0).expect("valid constants")
    }

    /// The differentiable field: `K(t) = 0.0231 - 0.4034 t^2 + t^3 + O(t^4)`.
    pub fn smooth_example() -> Self {
        Self::polynomial_plus_fractional(0.0231, 0.4034, 3.0, 1.0, 0.15).expect("valid constants")
    }

    pub fn family(&self) -> CovarianceFamily {
        self.family
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Coefficient of `G_alpha` in the small-lag expansion.
    pub fn c(&self) -> f64 {
        match self.family {
            CovarianceFamily::PoweredExponential => self.variance / self.range.powf(self.alpha),
            CovarianceFamily::Matern => self.variance * matern_c_factor(self.alpha / 2.0) / self.range.powf(self.alpha),
            CovarianceFamily::PolynomialPlusFractional { c, .. } => c,
        }
    }

    /// Taylor coefficients `a_0 .. a_{p_alpha}` of the even polynomial part.
    pub fn polynomial_part(&self) -> Vec<f64> {
        let p = p_alpha(self.alpha).expect("alpha validated at construction");
        let nu = self.alpha / 2.0;
        (0..=p)
            .map(|k| match self.family {
                CovarianceFamily::PoweredExponential => {
                    if k == 0 {
                        self.variance
                    } else {
                        0.0
                    }
                }
                _ => {
                    let mut a = self.matern_variance * matern_even_coefficient(nu, k) / self.range.powi(2 * k as i32);
                    if let Some((w, l2)) = self.gaussian {
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        a += w * sign / (factorial(k) * l2.powi(k as i32));
                    }
                    a
                }
            })
            .collect()
    }

    /// `K(t)` for `t >= 0`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.abs();
        match self.family {
            CovarianceFamily::PoweredExponential => self.variance * (-(t / self.range).powf(self.alpha)).exp(),
            _ => {
                let mut k = self.matern_variance * matern_correlation(self.alpha / 2.0, t / self.range);
                if let Some((w, l2)) = self.gaussian {
                    k += w * (-(t * t) / l2).exp();
                }
                k
            }
        }
    }
}

/// Unit-variance Matérn correlation at scaled lag `x`.
fn matern_correlation(nu: f64, x: f64) -> f64 {
    if x < 1e-100 {
        return 1.0;
    }
    if x > 700.0 {
        return 0.0;
    }
    let norm = 2f64.powf(1.0 - nu) / libm::tgamma(nu);
    norm * x.powf(nu) * bessel_k(nu, x)
}
