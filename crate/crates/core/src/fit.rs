//! Power-law exponent fits on `(log(1+t), log value)` and verdicts against
//! predicted rates.

use crate::error::{Error, Result};

/// Minimum number of unflagged samples a fit needs.
pub const MIN_FIT_SAMPLES: usize = 8;

/// A fit is verdict-eligible when its window spans at least this ratio (1.5 decades).
pub const MIN_WINDOW_RATIO: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleFlag {
    Ok,
    /// Outside the whole-space validity window of a periodic-box run.
    Window,
    /// Untrusted for another reason (non-finite, failed check, ...).
    Quality,
}

impl SampleFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleFlag::Ok => "ok",
            SampleFlag::Window => "window",
            SampleFlag::Quality => "quality",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub value: f64,
    pub flag: SampleFlag,
}

/// Time-stamped values of one monitored quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct NormTrajectory {
    pub quantity: String,
    pub label: String,
    samples: Vec<Sample>,
}

impl NormTrajectory {
    pub fn new(quantity: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            quantity: quantity.into(),
            label: label.into(),
            samples: Vec::new(),
        }
    }

    /// Appends a sample; times must be non-negative and strictly increasing.
    pub fn push(&mut self, t: f64, value: f64, flag: SampleFlag) -> Result<()> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("sample time {t} must be >= 0")));
        }
        if let Some(last) = self.samples.last() {
            if !(t > last.t) {
                return Err(Error::InvalidParameter(format!(
                    "sample times must increase strictly ({} then {t})",
                    last.t
                )));
            }
        }
        let flag = if value.is_finite() { flag } else { SampleFlag::Quality };
        self.samples.push(Sample { t, value, flag });
        Ok(())
    }

    pub fn from_samples(
        quantity: impl Into<String>,
        label: impl Into<String>,
        points: impl IntoIterator<Item = (f64, f64)>,
    ) -> Result<Self> {
        let mut traj = Self::new(quantity, label);
        for (t, v) in points {
            traj.push(t, v, SampleFlag::Ok)?;
        }
        Ok(traj)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    /// Slope of `log value` against `log(1+t)`.
    pub exponent: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    /// Time span actually covered by the fitted samples.
    pub window: [f64; 2],
    pub r_squared: f64,
    pub samples: usize,
}

impl DecayFit {
    pub fn eligible(&self) -> bool {
        self.window[0] > 0.0 && self.window[1] / self.window[0] >= MIN_WINDOW_RATIO
    }
}

/// Least-squares power-law fit over unflagged samples with `t ∈ [t_lo, t_hi]`.
pub fn fit_exponent(traj: &NormTrajectory, window: [f64; 2]) -> Result<DecayFit> {
    let pts: Vec<&Sample> = traj
        .samples
        .iter()
        .filter(|s| s.flag == SampleFlag::Ok && s.t >= window[0] && s.t <= window[1])
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Inconclusive(format!(
            "{} usable samples in [{}, {}] for '{}', need {MIN_FIT_SAMPLES}",
            pts.len(),
            window[0],
            window[1],
            traj.quantity
        )));
    }
    if let Some(bad) = pts.iter().find(|s| !(s.value > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "non-positive value {} at t = {} cannot be fitted on a log scale",
            bad.value, bad.t
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|s| s.t.ln_1p()).collect();
    let ys: Vec<f64> = pts.iter().map(|s| s.value.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Inconclusive("all samples share one time".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    Ok(DecayFit {
        exponent: slope,
        intercept,
        stderr,
        window: [pts[0].t, pts[pts.len() - 1].t],
        r_squared,
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompareMode {
    /// `|exponent − predicted| ≤ tol`
    TwoSided,
    /// `exponent ≤ predicted + tol` (the measured decay is at least as fast)
    OneSided,
}

impl CompareMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CompareMode::TwoSided => "two_sided",
            CompareMode::OneSided => "one_sided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

pub fn compare_predicted(fit: &DecayFit, predicted: f64, tol: f64, mode: CompareMode) -> Verdict {
    if !fit.eligible() || !fit.exponent.is_finite() {
        return Verdict::Inconclusive;
    }
    let ok = match mode {
        CompareMode::TwoSided => (fit.exponent - predicted).abs() <= tol,
        CompareMode::OneSided => fit.exponent <= predicted + tol,
    };
    Verdict::from_bool(ok)
}

/// Outcome of one checked claim.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimResult {
    pub claim_id: String,
    /// Human-readable statement of what was checked.
    pub reference: String,
    pub mode: String,
    pub predicted: f64,
    pub measured: f64,
    pub tol: f64,
    pub verdict: Verdict,
}

impl ClaimResult {
    pub fn new(
        claim_id: impl Into<String>,
        reference: impl Into<String>,
        mode: impl Into<String>,
        predicted: f64,
        measured: f64,
        tol: f64,
        verdict: Verdict,
    ) -> Self {
        Self {
            claim_id: claim_id.into(),
            reference: reference.into(),
            mode: mode.into(),
            predicted,
            measured,
            tol,
            verdict,
        }
    }

    /// `measured ≤ predicted + tol`.
    pub fn upper_bound(
        claim_id: impl Into<String>,
        reference: impl Into<String>,
        predicted: f64,
        measured: f64,
        tol: f64,
    ) -> Self {
        let ok = measured.is_finite() && measured <= predicted + tol;
        Self::new(claim_id, reference, "upper_bound", predicted, measured, tol, Verdict::from_bool(ok))
    }
}

/// Aggregate of claim verdicts: any fail fails; otherwise any inconclusive is inconclusive.
pub fn overall(claims: &[ClaimResult]) -> Verdict {
    if claims.iter().any(|c| c.verdict == Verdict::Fail) {
        Verdict::Fail
    } else if claims.iter().any(|c| c.verdict == Verdict::Inconclusive) || claims.is_empty() {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    }
}

/// `n` geometrically spaced times from `start` to `stop` inclusive.
pub fn geometric_times(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    if !(start > 0.0 && stop > start) || n < 2 {
        return Err(Error::InvalidParameter(format!(
            "geometric schedule needs 0 < start < stop and at least 2 points (got {start}, {stop}, {n})"
        )));
    }
    let ratio = (stop / start).ln() / (n - 1) as f64;
    let mut ts: Vec<f64> = (0..n).map(|i| start * (ratio * i as f64).exp()).collect();
    ts[n - 1] = stop;
    Ok(ts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand::Rng;

    fn power_law(c: f64, p: f64) -> NormTrajectory {
        let ts = geometric_times(10.0, 1e4, 40).unwrap();
        NormTrajectory::from_samples("q", "test", ts.into_iter().map(|t| (t, c * (1.0 + t).powf(p)))).unwrap()
    }

    #[test]
    fn exact_power_law() {
        let fit = fit_exponent(&power_law(7.0, -1.25), [10.0, 1e4]).unwrap();
        assert!((fit.exponent + 1.25).abs() < 1e-10);
        assert_relative_eq!(fit.intercept.exp(), 7.0, max_relative = 1e-10);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
        assert!(fit.eligible());
    }

    #[test]
    fn constant_data_has_zero_exponent() {
        let fit = fit_exponent(&power_law(3.0, 0.0), [10.0, 1e4]).unwrap();
        assert!(fit.exponent.abs() < 1e-12);
    }

    #[test]
    fn noisy_power_law_within_three_stderr() {
        let truth = -0.75;
        let mut inside = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let ts = geometric_times(10.0, 1000.0, 30).unwrap();
            let traj = NormTrajectory::from_samples(
                "q",
                "noise",
                ts.into_iter().map(|t| {
                    // approximately normal 1% multiplicative noise (sum of uniforms)
                    let z: f64 = (0..12).map(|_| rng.gen::<f64>()).sum::<f64>() - 6.0;
                    (t, (1.0 + t).powf(truth) * (1.0 + 0.01 * z))
                }),
            )
            .unwrap();
            let fit = fit_exponent(&traj, [10.0, 1000.0]).unwrap();
            if (fit.exponent - truth).abs() <= 3.0 * fit.stderr {
                inside += 1;
            }
        }
        assert_eq!(inside, 100);
    }

    #[test]
    fn rejects_bad_inputs() {
        let traj = NormTrajectory::from_samples("q", "x", (1..5).map(|i| (i as f64, 1.0))).unwrap();
        assert!(matches!(fit_exponent(&traj, [0.0, 10.0]), Err(Error::Inconclusive(_))));
        let zeros = NormTrajectory::from_samples("q", "x", (1..20).map(|i| (i as f64, 0.0))).unwrap();
        assert!(matches!(fit_exponent(&zeros, [0.0, 100.0]), Err(Error::InvalidParameter(_))));
        let mut t = NormTrajectory::new("q", "x");
        t.push(1.0, 1.0, SampleFlag::Ok).unwrap();
        assert!(t.push(1.0, 1.0, SampleFlag::Ok).is_err());
    }

    #[test]
    fn flagged_samples_are_excluded() {
        let mut traj = NormTrajectory::new("q", "x");
        for (i, t) in geometric_times(10.0, 1e4, 20).unwrap().into_iter().enumerate() {
            let flag = if i % 2 == 0 { SampleFlag::Ok } else { SampleFlag::Window };
            let v = if flag == SampleFlag::Ok { (1.0 + t).powf(-0.5) } else { 1e9 };
            traj.push(t, v, flag).unwrap();
        }
        let fit = fit_exponent(&traj, [0.0, 1e5]).unwrap();
        assert!((fit.exponent + 0.5).abs() < 1e-10);
        assert_eq!(fit.samples, 10);
    }

    #[test]
    fn verdicts() {
        let mut fit = fit_exponent(&power_law(1.0, -0.76), [10.0, 1e4]).unwrap();
        assert_eq!(compare_predicted(&fit, -0.75, 0.02, CompareMode::TwoSided), Verdict::Pass);
        fit.exponent = -0.60;
        assert_eq!(compare_predicted(&fit, -0.75, 0.02, CompareMode::OneSided), Verdict::Fail);
        fit.window = [100.0, 1000.0];
        assert_eq!(compare_predicted(&fit, -0.60, 0.02, CompareMode::TwoSided), Verdict::Inconclusive);
    }
}
