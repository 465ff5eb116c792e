//! The singular entropy density of the mixture, its derivatives, and the
//! Yosida-regularized family used by the implicit phase-field solve.
//!
//! The shipped density is the logarithmic (Flory-Huggins) one,
//! F(s) = (alpha/2) [(1+s) ln(1+s) + (1-s) ln(1-s)], finite on [-1, 1] with
//! F' blowing up at the endpoints. The regularization replaces F' by the
//! Yosida approximation A_lambda = (I - J_lambda)/lambda built from the
//! resolvent J_lambda = (I + lambda F')^{-1}, which is globally Lipschitz
//! while keeping convexity and the endpoint blow-up in the limit.

use crate::error::{Error, Result};

/// Entropy densities admissible for the phase-field energy: continuous on
/// [-1,1], twice differentiable inside, F(0) = F'(0) = 0, F'' >= alpha.
/// Only the logarithmic density ships; the trait is the extension point.
pub trait EntropyDensity {
    fn value(&self, s: f64) -> Result<f64>;
    fn prime(&self, s: f64) -> Result<f64>;
    fn double_prime(&self, s: f64) -> Result<f64>;
    /// Lower bound of F'' on (-1, 1).
    fn alpha(&self) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialKind {
    Logarithmic,
}

/// The singular entropy density with convexity constant `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialSpec {
    pub alpha: f64,
    pub kind: PotentialKind,
}

impl PotentialSpec {
    pub fn logarithmic(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidValue {
                key: "potential.alpha".into(),
                reason: "convexity constant must be positive".into(),
            });
        }
        Ok(PotentialSpec {
            alpha,
            kind: PotentialKind::Logarithmic,
        })
    }

    /// F(s) on [-1, 1], with the 0 ln 0 = 0 convention at the endpoints.
    pub fn f_value(&self, s: f64) -> Result<f64> {
        if !(-1.0..=1.0).contains(&s) {
            return Err(Error::OutOfDomain {
                value: s,
                domain: "[-1, 1]",
            });
        }
        let term = |t: f64| if t == 0.0 { 0.0 } else { t * t.ln() };
        Ok(0.5 * self.alpha * (term(1.0 + s) + term(1.0 - s)))
    }

    /// F'(s) = (alpha/2) ln((1+s)/(1-s)) on the open interval.
    pub fn f_prime(&self, s: f64) -> Result<f64> {
        if s <= -1.0 || s >= 1.0 {
            return Err(Error::OutOfDomain {
                value: s,
                domain: "(-1, 1)",
            });
        }
        Ok(0.5 * self.alpha * (s.ln_1p() - (-s).ln_1p()))
    }

    /// F''(s) = alpha / (1 - s^2).
    pub fn f_double_prime(&self, s: f64) -> Result<f64> {
        if s <= -1.0 || s >= 1.0 {
            return Err(Error::OutOfDomain {
                value: s,
                domain: "(-1, 1)",
            });
        }
        Ok(self.alpha / ((1.0 - s) * (1.0 + s)))
    }
}

impl EntropyDensity for PotentialSpec {
    fn value(&self, s: f64) -> Result<f64> {
        self.f_value(s)
    }
    fn prime(&self, s: f64) -> Result<f64> {
        self.f_prime(s)
    }
    fn double_prime(&self, s: f64) -> Result<f64> {
        self.f_double_prime(s)
    }
    fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Regularization parameters. The admissible range of lambda is tied to the
/// interaction kernel: lambda_star = min([4 (1 + |J|_W11 / 2)]^-1, 1/4) keeps
/// the regularized energy coercive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YosidaParams {
    pub lambda: f64,
    pub lambda_star: f64,
    pub newton_tol: f64,
    pub max_iters: usize,
}

impl YosidaParams {
    /// Admissible cap for a kernel with the given W^{1,1} norm.
    pub fn lambda_star_for(kernel_w11: f64) -> f64 {
        (1.0 / (4.0 * (1.0 + 0.5 * kernel_w11))).min(0.25)
    }

    pub fn for_kernel(lambda: f64, kernel_w11: f64) -> Result<Self> {
        let lambda_star = Self::lambda_star_for(kernel_w11);
        if !(lambda > 0.0 && lambda <= lambda_star) {
            return Err(Error::InvalidValue {
                key: "ch.lambda".into(),
                reason: format!("lambda must lie in (0, {lambda_star:.6}], got {lambda}"),
            });
        }
        Ok(YosidaParams {
            lambda,
            lambda_star,
            newton_tol: 1e-14,
            max_iters: 100,
        })
    }
}

/// Resolvent bracket endpoints: roots are always interior because F' blows
/// up, but for extreme s / lambda the interior root is closer to +-1 than
/// f64 resolution, and the bracket edge is the best representable answer.
const BRACKET: f64 = 1.0 - 1e-15;

/// J_lambda(s) = (I + lambda F')^{-1}(s): the unique r in (-1, 1) with
/// r + lambda F'(r) = s. Safeguarded Newton with bisection fallback.
pub fn yosida_resolvent(p: &PotentialSpec, yp: &YosidaParams, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    let lam = yp.lambda;
    let g = |r: f64| -> f64 { r + lam * p.f_prime(r).unwrap() - s };
    let mut lo = -BRACKET;
    let mut hi = BRACKET;
    let glo = g(lo);
    let ghi = g(hi);
    if glo >= 0.0 {
        return Ok(lo);
    }
    if ghi <= 0.0 {
        return Ok(hi);
    }
    let tol = yp.newton_tol * s.abs().max(1.0);
    let mut r = s.clamp(-0.5, 0.5);
    let mut gr = g(r);
    for _ in 0..yp.max_iters {
        if gr.abs() <= tol {
            return Ok(r);
        }
        if gr > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let dg = 1.0 + lam * p.f_double_prime(r).unwrap();
        let mut next = r - gr / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == r || hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
            // bracket exhausted at f64 resolution
            return Ok(r);
        }
        r = next;
        gr = g(r);
    }
    if gr.abs() <= 1e4 * tol {
        return Ok(r);
    }
    Err(Error::NoConvergence { s })
}

/// F'_lambda(s) = (s - J_lambda(s)) / lambda, the Yosida approximation of F'.
/// Evaluated through the identity F'_lambda = F' o J_lambda while the
/// resolvent root is representable; the difference quotient (which stays
/// accurate when the root saturates at the bracket edge) is the fallback.
/// The identity route avoids amplifying the scalar solve's roundoff by
/// 1/lambda, which matters for small lambda inside the implicit stepper.
pub fn yosida_f_prime(p: &PotentialSpec, yp: &YosidaParams, s: f64) -> Result<f64> {
    let r = yosida_resolvent(p, yp, s)?;
    f_prime_from_resolvent(p, yp, s, r)
}

/// F'_lambda given an already-computed resolvent root. The identity route
/// F'(r) has error ~ F''(r) ulp, the quotient route ~ ulp/lambda; the
/// crossover F''(r) = 1/lambda picks whichever is better conditioned.
pub fn f_prime_from_resolvent(
    p: &PotentialSpec,
    yp: &YosidaParams,
    s: f64,
    r: f64,
) -> Result<f64> {
    if (1.0 - r) * (1.0 + r) >= p.alpha * yp.lambda {
        p.f_prime(r)
    } else {
        Ok((s - r) / yp.lambda)
    }
}

/// F''_lambda(s) = F''(J_lambda s) / (1 + lambda F''(J_lambda s)), bounded
/// between alpha/(1 + lambda alpha) and 1/lambda.
pub fn yosida_f_double_prime(p: &PotentialSpec, yp: &YosidaParams, s: f64) -> Result<f64> {
    let r = yosida_resolvent(p, yp, s)?;
    let fpp = p.f_double_prime(r)?;
    Ok(fpp / (1.0 + yp.lambda * fpp))
}

/// F_lambda(s) = (lambda/2) |A_lambda s|^2 + F(J_lambda s), finite and convex
/// on all of R, increasing towards F as lambda decreases.
pub fn yosida_f(p: &PotentialSpec, yp: &YosidaParams, s: f64) -> Result<f64> {
    let r = yosida_resolvent(p, yp, s)?;
    let a = f_prime_from_resolvent(p, yp, s, r)?;
    Ok(0.5 * yp.lambda * a * a + p.f_value(r.clamp(-1.0, 1.0))?)
}

/// Outcome of sampling the structural assumptions on an entropy density.
#[derive(Debug, Clone)]
pub struct AssumptionReport {
    /// F'' >= alpha on sampled interior points.
    pub convexity: bool,
    pub convexity_min: f64,
    /// |F'(1 - 10^-k)| strictly increasing in k (endpoint blow-up).
    pub blow_up: bool,
    /// F'' monotone non-decreasing on [1 - eps0, 1).
    pub monotone_near_one: bool,
    /// Fitted constant C of the growth bound F'' <= C exp(C |F'|) (beta = 1);
    /// `growth_ok` flags gross violation (no finite fit).
    pub growth_constant: f64,
    pub growth_ok: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.convexity && self.blow_up && self.monotone_near_one && self.growth_ok
    }
}

/// Sample-based check of the admissibility assumptions for an entropy
/// density. `n_samples` interior points, endpoint approach down to 10^-12.
pub fn check_entropy_assumptions(f: &dyn EntropyDensity, n_samples: usize) -> AssumptionReport {
    let alpha = f.alpha();
    let mut convexity = true;
    let mut convexity_min = f64::INFINITY;
    for k in 0..n_samples {
        let s = -0.999_999 + 1.999_998 * (k as f64 + 0.5) / n_samples as f64;
        match f.double_prime(s) {
            Ok(v) => {
                convexity_min = convexity_min.min(v);
                if v < alpha * (1.0 - 1e-12) {
                    convexity = false;
                }
            }
            Err(_) => convexity = false,
        }
    }

    // endpoint blow-up: |F'(1 - 10^-k)| must increase in k and keep growing,
    // not merely approach a finite bound
    let mut blow_up = true;
    let mut prev = 0.0;
    let mut first = 0.0;
    let mut last = 0.0;
    for k in 1..=12 {
        let s = 1.0 - 10f64.powi(-k);
        match f.prime(s) {
            Ok(v) => {
                if v.abs() <= prev {
                    blow_up = false;
                }
                prev = v.abs();
                if k == 1 {
                    first = v.abs();
                }
                last = v.abs();
            }
            Err(_) => blow_up = false,
        }
    }
    if last < 5.0 * first.max(f64::MIN_POSITIVE) {
        blow_up = false;
    }

    let eps0 = 0.1;
    let mut monotone_near_one = true;
    let mut last = f64::NEG_INFINITY;
    for k in 0..200 {
        let s = (1.0 - eps0) + (eps0 - 1e-9) * k as f64 / 200.0;
        match f.double_prime(s) {
            Ok(v) => {
                if v < last * (1.0 - 1e-12) {
                    monotone_near_one = false;
                }
                last = v;
            }
            Err(_) => monotone_near_one = false,
        }
    }

    // fit the smallest C on a grid such that F'' <= C exp(C |F'|) at the
    // sampled points; gross violation = no C below a large cap works
    let mut samples = Vec::new();
    for k in 0..n_samples {
        let s = -0.999_999 + 1.999_998 * (k as f64 + 0.5) / n_samples as f64;
        if let (Ok(fp), Ok(fpp)) = (f.prime(s), f.double_prime(s)) {
            samples.push((fp.abs(), fpp));
        }
    }
    let mut growth_constant = f64::INFINITY;
    'fit: for i in 0..400 {
        let c = 1e-2 * 1.05f64.powi(i);
        if samples.iter().all(|&(fp, fpp)| fpp <= c * (c * fp).exp()) {
            growth_constant = c;
            break 'fit;
        }
    }
    let growth_ok = growth_constant.is_finite();

    AssumptionReport {
        convexity,
        convexity_min,
        blow_up,
        monotone_near_one,
        growth_constant,
        growth_ok,
    }
}
