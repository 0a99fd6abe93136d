//! Heat-equation decay experiments.
//!
//! Grid runs evolve a [`SpectralField`] exactly by the heat multiplier; radial
//! runs evaluate whole-space norms through [`crate::continuum`]. Either way a
//! run yields one [`NormTrajectory`] per monitored quantity, and
//! [`verify_heat_theorem`] turns a radial run into pass/fail claims.

use std::f64::consts::PI;

use crate::continuum::{heat_norm_exact, RadialProfile};
use crate::error::{Error, Result};
use crate::fit::{
    compare_predicted, fit_exponent, ClaimResult, CompareMode, NormTrajectory, SampleFlag, Verdict,
};
use crate::quadrature::{integrate_from_origin, QuadOptions};
use crate::spectral::{apply_multiplier, lp_norm, sobolev_norm, MultiplierSpec, SpectralField};

/// Default window-rule constant.
pub const DEFAULT_ETA: f64 = 0.02;

/// Exponent fits ignore samples before this time.
pub const FIT_START: f64 = 10.0;

/// `e^{tΔ} f`.
pub fn evolve_heat(f: &SpectralField, t: f64) -> Result<SpectralField> {
    apply_multiplier(f, &MultiplierSpec::heat(t)?)
}

/// `sup_x |e^{tΔ}u₀|` for radial data with real non-negative `û₀ = √ρ`,
/// attained at `x = 0`: `4π ∫ r² √ρ(r) e^{-4π²r²t} dr`.
pub fn heat_sup_exact(profile: &RadialProfile, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be >= 0")));
    }
    let beta = 2.0 + profile.sigma();
    let rate = 4.0 * PI * PI * t;
    let mut upper = profile.support();
    if rate > 0.0 {
        upper = upper.min((80.0 / rate).sqrt());
    }
    let g = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        r * r * profile.density(r).sqrt() * (-rate * r * r).exp()
    };
    let q = integrate_from_origin(&g, upper, beta, QuadOptions::default());
    Ok(4.0 * PI * q.value)
}

#[derive(Debug, Clone)]
pub enum HeatInitial {
    Field(SpectralField),
    Radial(RadialProfile),
}

#[derive(Debug, Clone)]
pub struct HeatExperiment {
    pub initial: HeatInitial,
    pub ell_list: Vec<f64>,
    /// Negative index: the data is assumed to lie in `Ḣ^{-s}`.
    pub s: f64,
    pub times: Vec<f64>,
    /// Window-rule constant; grid samples with `t > η (L/2π)²` are flagged.
    pub eta: f64,
}

impl HeatExperiment {
    pub fn new(initial: HeatInitial, ell_list: Vec<f64>, s: f64, times: Vec<f64>) -> Result<Self> {
        let exp = Self {
            initial,
            ell_list,
            s,
            times,
            eta: DEFAULT_ETA,
        };
        exp.validate()?;
        Ok(exp)
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..1.5).contains(&self.s) {
            return Err(Error::InvalidParameter(format!("s = {} must lie in [0, 3/2)", self.s)));
        }
        if self.ell_list.is_empty() {
            return Err(Error::InvalidParameter("ell_list is empty".into()));
        }
        if let Some(ell) = self.ell_list.iter().find(|&&l| !(l >= -self.s)) {
            return Err(Error::InvalidParameter(format!("ℓ = {ell} is below -s = {}", -self.s)));
        }
        if self.times.is_empty() || self.times[0] < 0.0 || self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidParameter(
                "sample times must be non-negative and strictly increasing".into(),
            ));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidParameter(format!("window constant eta = {} must be > 0", self.eta)));
        }
        Ok(())
    }

    /// Latest trustworthy time of a grid run; `None` for whole-space data.
    pub fn t_max(&self) -> Option<f64> {
        match &self.initial {
            HeatInitial::Field(f) => {
                let l = f.grid().length() / (2.0 * PI);
                Some(self.eta * l * l)
            }
            HeatInitial::Radial(_) => None,
        }
    }
}

pub fn grad_quantity(ell: f64) -> String {
    format!("grad_norm[ell={ell}]")
}

pub fn negative_quantity(s: f64) -> String {
    format!("neg_norm[s={s}]")
}

pub const LINF_QUANTITY: &str = "linf_norm";

/// Monitored norms of one heat run.
#[derive(Debug, Clone)]
pub struct HeatTrajectory {
    /// `‖Λ^ℓ u(t)‖_{L²}` for each requested `ℓ`.
    pub grad: Vec<(f64, NormTrajectory)>,
    /// `‖Λ^{-s} u(t)‖_{L²}`.
    pub negative: NormTrajectory,
    pub linf: NormTrajectory,
}

impl HeatTrajectory {
    pub fn all(&self) -> Vec<&NormTrajectory> {
        let mut out: Vec<&NormTrajectory> = self.grad.iter().map(|(_, t)| t).collect();
        out.push(&self.negative);
        out.push(&self.linf);
        out
    }

    pub fn grad_for(&self, ell: f64) -> Option<&NormTrajectory> {
        self.grad.iter().find(|(l, _)| *l == ell).map(|(_, t)| t)
    }
}

pub fn decay_trajectory(exp: &HeatExperiment, label: &str) -> Result<HeatTrajectory> {
    exp.validate()?;
    let mut grad: Vec<(f64, NormTrajectory)> = exp
        .ell_list
        .iter()
        .map(|&l| (l, NormTrajectory::new(grad_quantity(l), label)))
        .collect();
    let mut negative = NormTrajectory::new(negative_quantity(exp.s), label);
    let mut linf = NormTrajectory::new(LINF_QUANTITY, label);
    let t_max = exp.t_max();
    match &exp.initial {
        HeatInitial::Field(f0) => {
            let f0 = f0.to_spectral();
            for &t in &exp.times {
                let flag = match t_max {
                    Some(tm) if t > tm => SampleFlag::Window,
                    _ => SampleFlag::Ok,
                };
                let u = evolve_heat(&f0, t)?;
                for (ell, traj) in grad.iter_mut() {
                    traj.push(t, sobolev_norm(&u, *ell), flag)?;
                }
                negative.push(t, sobolev_norm(&u, -exp.s), flag)?;
                linf.push(t, lp_norm(&u, f64::INFINITY)?, flag)?;
            }
        }
        HeatInitial::Radial(profile) => {
            for &t in &exp.times {
                for (ell, traj) in grad.iter_mut() {
                    traj.push(t, heat_norm_exact(profile, *ell, t)?, SampleFlag::Ok)?;
                }
                negative.push(t, heat_norm_exact(profile, -exp.s, t)?, SampleFlag::Ok)?;
                linf.push(t, heat_sup_exact(profile, t)?, SampleFlag::Ok)?;
            }
        }
    }
    Ok(HeatTrajectory { grad, negative, linf })
}

/// Closed-form solution `E(t) = (E₀^{-1/k} + C₀ t / k)^{-k}`, `k = ℓ + s`, of
/// `E' = -C₀ E^{1+1/k}`, `E(0) = E₀`.
pub fn lyapunov_bound(e0: f64, c0: f64, ell: f64, s: f64, t: f64) -> Result<f64> {
    let k = ell + s;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("ℓ + s = {k} must be positive")));
    }
    if !(e0 > 0.0 && c0 > 0.0) {
        return Err(Error::InvalidParameter(format!("E0 = {e0} and C0 = {c0} must be positive")));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be >= 0")));
    }
    Ok((e0.powf(-1.0 / k) + c0 * t / k).powf(-k))
}

/// Rate constant of the Lyapunov inequality for `E = ‖Λ^ℓ u‖²`:
/// `d/dt E = -8π² ‖Λ^{ℓ+1} u‖² ≤ -C₀ E^{1+1/(ℓ+s)}` with
/// `C₀ = 8π² ‖Λ^{-s} u₀‖^{-2/(ℓ+s)}`.
pub fn lyapunov_rate_constant(neg_norm0: f64, ell: f64, s: f64) -> Result<f64> {
    let k = ell + s;
    if !(k > 0.0) {
        return Err(Error::InvalidParameter(format!("ℓ + s = {k} must be positive")));
    }
    if !(neg_norm0 > 0.0 && neg_norm0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "negative norm {neg_norm0} must be positive and finite"
        )));
    }
    Ok(8.0 * PI * PI * neg_norm0.powf(-2.0 / k))
}

/// Sharp exponent of `‖Λ^ℓ e^{tΔ}u₀‖` for radial data with `ρ(r) ~ r^{2σ}`.
pub fn sharp_exponent(ell: f64, sigma: f64) -> f64 {
    -(2.0 * ell + 2.0 * sigma + 3.0) / 4.0
}

#[derive(Debug, Clone, Copy)]
pub struct HeatVerifyOptions {
    pub rate_tol: f64,
    /// Compare against the sharp rate two-sided instead of `-(ℓ+s)/2` one-sided.
    pub sharp: bool,
    pub fit_start: f64,
}

impl Default for HeatVerifyOptions {
    fn default() -> Self {
        Self {
            rate_tol: 0.03,
            sharp: false,
            fit_start: FIT_START,
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerdictReport {
    pub claims: Vec<ClaimResult>,
    pub trajectory: HeatTrajectory,
}

impl VerdictReport {
    pub fn overall(&self) -> Verdict {
        crate::fit::overall(&self.claims)
    }
}

/// Checks the decay argument claim by claim on a radial run:
/// the interpolation step, non-increase of the negative norm, the Lyapunov
/// closed form, boundedness of the compensated norm, and the fitted rate.
pub fn verify_heat_theorem(exp: &HeatExperiment, opts: &HeatVerifyOptions) -> Result<VerdictReport> {
    let profile = match &exp.initial {
        HeatInitial::Radial(p) => p.clone(),
        HeatInitial::Field(_) => {
            return Err(Error::InvalidParameter(
                "theorem verification needs radial initial data".into(),
            ))
        }
    };
    let s = exp.s;
    let traj = decay_trajectory(exp, profile.name())?;
    let mut claims = Vec::new();

    let neg0 = heat_norm_exact(&profile, -s, 0.0)?;
    let mut neg_ratio: f64 = 0.0;
    let mut prev = neg0;
    for sample in traj.negative.samples() {
        neg_ratio = neg_ratio.max(sample.value / neg0).max(sample.value / prev);
        prev = sample.value;
    }
    claims.push(ClaimResult::upper_bound(
        format!("neg_norm_nonincreasing[s={s}]"),
        "negative Sobolev norm of a heat solution never increases",
        1.0,
        neg_ratio,
        1e-10,
    ));

    for &ell in &exp.ell_list {
        let gtraj = traj.grad_for(ell).expect("trajectory per ell");
        let k = ell + s;
        if k > 0.0 {
            let mut max_ratio: f64 = 0.0;
            let theta = 1.0 / (ell + 1.0 + s);
            for (sample, sn) in gtraj.samples().iter().zip(traj.negative.samples()) {
                let up = heat_norm_exact(&profile, ell + 1.0, sample.t)?;
                let rhs = sn.value.powf(theta) * up.powf(1.0 - theta);
                max_ratio = max_ratio.max(sample.value / rhs);
            }
            claims.push(ClaimResult::upper_bound(
                format!("interpolation[ell={ell},s={s}]"),
                "Λ^ℓ norm bounded by Λ^{-s} and Λ^{ℓ+1} norms with constant one",
                1.0,
                max_ratio,
                1e-10,
            ));

            let e0 = heat_norm_exact(&profile, ell, 0.0)?.powi(2);
            let c0 = lyapunov_rate_constant(neg0, ell, s)?;
            let mut lyap_ratio: f64 = 0.0;
            for sample in gtraj.samples() {
                let bound = lyapunov_bound(e0, c0, ell, s, sample.t)?;
                lyap_ratio = lyap_ratio.max(sample.value.powi(2) / bound);
            }
            claims.push(ClaimResult::upper_bound(
                format!("lyapunov_bound[ell={ell},s={s}]"),
                "closed-form Lyapunov curve bounds the squared norm",
                1.0,
                lyap_ratio,
                1e-8,
            ));

            let fitted: Vec<(f64, f64)> = gtraj
                .samples()
                .iter()
                .filter(|p| p.t >= opts.fit_start)
                .map(|p| (p.t, p.value.powi(2) * (1.0 + p.t).powf(k)))
                .collect();
            if fitted.len() >= 2 {
                let half = fitted.len() / 2;
                let first = fitted[..half].iter().map(|p| p.1).fold(0.0, f64::max);
                let second = fitted[half..].iter().map(|p| p.1).fold(0.0, f64::max);
                claims.push(ClaimResult::upper_bound(
                    format!("compensated_bounded[ell={ell},s={s}]"),
                    "‖Λ^ℓu‖²(1+t)^{ℓ+s} stays bounded over the fit window",
                    1.0,
                    second / first,
                    0.1,
                ));
            }
        }

        let (predicted, mode) = if opts.sharp {
            (sharp_exponent(ell, profile.sigma()), CompareMode::TwoSided)
        } else {
            (-(ell + s) / 2.0, CompareMode::OneSided)
        };
        let last = exp.times.last().copied().unwrap_or(0.0);
        let (measured, verdict) = match fit_exponent(gtraj, [opts.fit_start, last]) {
            Ok(fit) => (fit.exponent, compare_predicted(&fit, predicted, opts.rate_tol, mode)),
            Err(Error::Inconclusive(_)) => (f64::NAN, Verdict::Inconclusive),
            Err(e) => return Err(e),
        };
        claims.push(ClaimResult::new(
            format!("decay_rate[ell={ell},s={s}]"),
            "algebraic decay rate of the Λ^ℓ norm",
            mode.as_str(),
            predicted,
            measured,
            opts.rate_tol,
            verdict,
        ));
    }
    Ok(VerdictReport { claims, trajectory: traj })
}

/// `sup_t (1+t)^{ℓ+s} ‖Λ^ℓ u(t)‖²` over unflagged samples, the data-driven
/// decay constant.
pub fn compensated_sup(traj: &NormTrajectory, ell: f64, s: f64) -> f64 {
    traj.samples()
        .iter()
        .filter(|p| p.flag == SampleFlag::Ok)
        .map(|p| p.value * p.value * (1.0 + p.t).powf(ell + s))
        .fold(0.0, f64::max)
}
