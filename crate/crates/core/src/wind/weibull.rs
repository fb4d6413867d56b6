use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MIN_WEIBULL_SAMPLES: usize = 100;

const REL_TOL: f64 = 1e-10;
const MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullParams {
    pub shape: f64,
    pub scale: f64,
}

impl WeibullParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if shape > 0.0 && scale > 0.0 && shape.is_finite() && scale.is_finite() {
            Ok(WeibullParams { shape, scale })
        } else {
            Err(Error::Argument(format!("Weibull parameters must be positive, got k={shape}, λ={scale}")))
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let (k, l) = (self.shape, self.scale);
        (k / l) * (x / l).powf(k - 1.0) * (-(x / l).powf(k)).exp()
    }

    pub fn mean(&self) -> f64 {
        self.scale * gamma(1.0 + 1.0 / self.shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullFit {
    pub params: WeibullParams,
    pub samples_used: usize,
    pub zeros_removed: usize,
}

/// Maximum-likelihood Weibull fit.
///
/// The scale is eliminated in closed form, leaving a monotone equation in
/// the shape that is solved by safeguarded Newton iteration.
pub fn fit_weibull(speeds: &[f64]) -> Result<WeibullFit> {
    if let Some(bad) = speeds.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Argument(format!("wind speed samples must be finite and non-negative, got {bad}")));
    }
    let x: Vec<f64> = speeds.iter().copied().filter(|&v| v > 0.0).collect();
    let zeros_removed = speeds.len() - x.len();
    if x.len() < MIN_WEIBULL_SAMPLES {
        return Err(Error::InsufficientData {
            what: "Weibull fit positive samples",
            needed: MIN_WEIBULL_SAMPLES,
            got: x.len(),
        });
    }
    let n = x.len() as f64;
    let xmax = x.iter().cloned().fold(f64::MIN, f64::max);
    let ln: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    // Shift logs so the weights (x/xmax)^k never overflow.
    let ln_rel: Vec<f64> = ln.iter().map(|l| l - xmax.ln()).collect();
    let mean_ln = ln.iter().sum::<f64>() / n;
    let var_ln = ln.iter().map(|l| (l - mean_ln).powi(2)).sum::<f64>() / n;
    if var_ln <= f64::EPSILON * mean_ln.abs().max(1.0) {
        return Err(Error::Degenerate("all Weibull samples are equal; the shape is unbounded".into()));
    }
    let mean_rel = mean_ln - xmax.ln();

    // g(k) = E_w[ln x] - 1/k - mean(ln x), increasing in k; also returns g'.
    let g = |k: f64| -> (f64, f64) {
        let (mut sw, mut swl, mut swl2) = (0.0, 0.0, 0.0);
        for &l in &ln_rel {
            let w = (k * l).exp();
            sw += w;
            swl += w * l;
            swl2 += w * l * l;
        }
        let m1 = swl / sw;
        let m2 = swl2 / sw;
        (m1 - 1.0 / k - mean_rel, (m2 - m1 * m1) + 1.0 / (k * k))
    };

    let mut k = std::f64::consts::PI / (var_ln.sqrt() * 6f64.sqrt());
    let (mut lo, mut hi) = (k, k);
    while g(lo).0 > 0.0 {
        lo *= 0.5;
    }
    while g(hi).0 < 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Degenerate("Weibull shape diverges".into()));
        }
    }
    let mut converged = false;
    for _ in 0..MAX_ITER {
        let (gk, dg) = g(k);
        if gk < 0.0 {
            lo = k;
        } else {
            hi = k;
        }
        let mut next = k - gk / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - k).abs() <= REL_TOL * k;
        k = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Degenerate("Weibull shape iteration did not converge".into()));
    }
    let sw: f64 = ln_rel.iter().map(|l| (k * l).exp()).sum();
    let scale = xmax * (sw / n).powf(1.0 / k);
    Ok(WeibullFit {
        params: WeibullParams::new(k, scale)?,
        samples_used: x.len(),
        zeros_removed,
    })
}

/// Lanczos approximation, adequate for the mean of a fitted distribution.
fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const C: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = C[0];
    let t = x + G + 0.5;
    for (i, c) in C.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}
