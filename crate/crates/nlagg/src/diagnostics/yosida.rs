//! Aggregated property suite for the regularized potential family across a
//! list of regularization parameters.

use crate::error::Result;
use crate::potential::{
    yosida_f, yosida_f_prime, PotentialSpec, YosidaParams,
};

use super::{ExperimentReport, Series};

fn params(lambda: f64) -> YosidaParams {
    YosidaParams {
        lambda,
        lambda_star: 0.25,
        newton_tol: 1e-14,
        max_iters: 100,
    }
}

/// Execute the full regularization property suite: exact vanishing at the
/// origin, the convexity floor alpha/(1+alpha), the 1/lambda Lipschitz bound,
/// monotone convergence towards the entropy density, and endpoint blow-up as
/// lambda decreases.
pub fn run_yosida_suite(pot: &PotentialSpec, lambdas: &[f64]) -> Result<ExperimentReport> {
    assert!(lambdas.len() >= 2);
    let mut sorted = lambdas.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut series = Vec::new();
    let mut pass = true;

    // exact zero at the origin, every lambda
    let mut origin = Vec::new();
    for &lam in &sorted {
        let v = yosida_f_prime(pot, &params(lam), 0.0)?;
        let f0 = yosida_f(pot, &params(lam), 0.0)?;
        origin.push(v.abs().max(f0.abs()));
        if v != 0.0 || f0 != 0.0 {
            pass = false;
        }
    }
    series.push(Series {
        name: "origin_values".into(),
        x: sorted.clone(),
        y: origin,
    });

    // convexity floor: finite differences of F'_lambda over 1000 points
    let bound = pot.alpha / (1.0 + pot.alpha) - 1e-6;
    let mut worst_curvature = f64::INFINITY;
    {
        let lam = *sorted.last().unwrap();
        let yp = params(lam);
        let h = 1e-5;
        for k in 0..1000 {
            let s = -3.0 + 6.0 * (k as f64 + 0.5) / 1000.0;
            let fd = (yosida_f_prime(pot, &yp, s + h)? - yosida_f_prime(pot, &yp, s - h)?)
                / (2.0 * h);
            worst_curvature = worst_curvature.min(fd);
        }
        if worst_curvature < bound {
            pass = false;
        }
    }

    // Lipschitz bound with constant 1/lambda over deterministic pairs
    let mut worst_lipschitz = 0.0f64;
    {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for &lam in &sorted {
            let yp = params(lam);
            for _ in 0..100 {
                let a: f64 = rng.gen_range(-2.0..2.0);
                let b: f64 = rng.gen_range(-2.0..2.0);
                if (a - b).abs() < 1e-3 {
                    continue;
                }
                let fa = yosida_f_prime(pot, &yp, a)?;
                let fb = yosida_f_prime(pot, &yp, b)?;
                let ratio = (fa - fb).abs() / ((a - b).abs() / lam);
                worst_lipschitz = worst_lipschitz.max(ratio);
            }
        }
        if worst_lipschitz > 1.0 + 1e-10 {
            pass = false;
        }
    }

    // monotone convergence F_lambda up to F at interior points
    let mut monotone_ok = true;
    {
        for k in 0..50 {
            let s = -0.98 + 1.96 * (k as f64 + 0.5) / 50.0;
            let mut prev = f64::NEG_INFINITY;
            for &lam in &sorted {
                let v = yosida_f(pot, &params(lam), s)?;
                if v + 1e-12 < prev {
                    monotone_ok = false;
                }
                prev = v;
            }
            if prev > pot.f_value(s)? + 1e-12 {
                monotone_ok = false;
            }
        }
        if !monotone_ok {
            pass = false;
        }
    }

    // endpoint blow-up: |F'_lambda(+-1.5)| increases as lambda decreases
    let mut blowup_plus = Vec::new();
    let mut blowup_ok = true;
    for &lam in &sorted {
        let vp = yosida_f_prime(pot, &params(lam), 1.5)?.abs();
        let vm = yosida_f_prime(pot, &params(lam), -1.5)?.abs();
        if let Some(&last) = blowup_plus.last() {
            if vp <= last {
                blowup_ok = false;
            }
        }
        if (vp - vm).abs() > 1e-9 * vp {
            blowup_ok = false;
        }
        blowup_plus.push(vp);
    }
    if !blowup_ok {
        pass = false;
    }
    series.push(Series {
        name: "blowup_at_1p5".into(),
        x: sorted.clone(),
        y: blowup_plus,
    });

    Ok(ExperimentReport {
        name: "yosida-suite".into(),
        inputs: vec![
            ("alpha".into(), pot.alpha.to_string()),
            ("lambdas".into(), format!("{sorted:?}")),
        ],
        series,
        fitted: vec![
            ("min_curvature".into(), worst_curvature),
            ("max_lipschitz_ratio".into(), worst_lipschitz),
        ],
        criterion: "F'_l(0)=0 exactly; F''_l >= a/(1+a)-1e-6; Lipschitz <= (1+1e-10)/lambda; \
                    F_l monotone up to F; |F'_l(+-1.5)| increasing as lambda drops"
            .into(),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_for_the_logarithmic_density() {
        let pot = PotentialSpec::logarithmic(1.0).unwrap();
        let rep = run_yosida_suite(&pot, &[1e-2, 1e-3, 1e-4]).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.fitted("min_curvature").unwrap() >= 0.5 - 1e-6);
        assert!(rep.fitted("max_lipschitz_ratio").unwrap() <= 1.0 + 1e-10);
    }
}
