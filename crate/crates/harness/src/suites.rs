//! Acceptance suites. Each criterion collects claims, times itself against
//! a runtime budget, and passes only if every claim passes within budget.

use std::time::Instant;

use num_complex::Complex64;
use sobodecay::cns::{
    linear_limit_defect, richardson_order, run_cns_experiment, CnsExperimentSpec, CnsInitial, CnsModel, CnsState,
};
use sobodecay::continuum::{heat_norm_exact, linear_cns_mode_evolve, linear_cns_norm_exact, CnsParams, EnergyPartition, RadialProfile};
use sobodecay::fit::{
    compare_predicted, fit_exponent, geometric_times, ClaimResult, CompareMode, NormTrajectory, SampleFlag, Verdict,
};
use sobodecay::heat::{
    decay_trajectory, lyapunov_bound, lyapunov_rate_constant, verify_heat_theorem, HeatExperiment,
    HeatInitial, HeatVerifyOptions,
};
use sobodecay::inequality::{check_neg_interp, trial_field, PhaseMode, TrialSpec};
use sobodecay::kinetic::VelocityGrid;
use sobodecay::quadrature::{integrate, QuadOptions};
use sobodecay::spectral::GridSpec;
use sobodecay::Error;

use crate::config::parse_config_str;
use crate::experiments::{kinetic_claims, lemma_report, minkowski_worst, LEMMAS};
use crate::runner::{run_config, RunOptions, RunStatus};

pub const SUITES: [&str; 10] = [
    "heat-rates",
    "heat-sigma",
    "heat-negnorm",
    "lyapunov",
    "interp-gate",
    "lemma-stability",
    "linear-cns",
    "nonlinear-cns",
    "kinetic",
    "reproducibility",
];

#[derive(Debug, Clone)]
pub struct Criterion {
    pub name: &'static str,
    pub claims: Vec<ClaimResult>,
    pub seconds: f64,
    pub budget: f64,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
}

impl Criterion {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && !self.claims.is_empty()
            && self.claims.iter().all(|c| c.verdict == Verdict::Pass)
            && self.seconds <= self.budget
    }

    /// One line: verdict, name, time against budget, and the worst claim.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        let detail = match &self.error {
            Some(e) => format!("error: {e}"),
            None => {
                let failing: Vec<String> = self
                    .claims
                    .iter()
                    .filter(|c| c.verdict != Verdict::Pass)
                    .map(|c| format!("{} measured {:e} vs {:e} tol {:e}", c.claim_id, c.measured, c.predicted, c.tol))
                    .collect();
                if failing.is_empty() {
                    format!("{} claims", self.claims.len())
                } else {
                    failing.join("; ")
                }
            }
        };
        format!(
            "{verdict} {:<16} {:>8.2}s / {:>5.0}s  {detail}",
            self.name, self.seconds, self.budget
        )
    }
}

fn timed(name: &'static str, budget: f64, body: impl FnOnce() -> Result<Vec<ClaimResult>, Error>) -> Criterion {
    let start = Instant::now();
    let (claims, error) = match body() {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Criterion {
        name,
        claims,
        seconds: start.elapsed().as_secs_f64(),
        budget,
        error,
    }
}

pub fn run_suite(name: &str) -> Option<Criterion> {
    let c = match name {
        "heat-rates" => timed("heat-rates", 5.0, heat_rates),
        "heat-sigma" => timed("heat-sigma", 10.0, heat_sigma),
        "heat-negnorm" => timed("heat-negnorm", 5.0, heat_negnorm),
        "lyapunov" => timed("lyapunov", 1.0, lyapunov),
        "interp-gate" => timed("interp-gate", 60.0, interp_gate),
        "lemma-stability" => timed("lemma-stability", 300.0, lemma_stability),
        "linear-cns" => timed("linear-cns", 30.0, linear_cns),
        "nonlinear-cns" => timed("nonlinear-cns", 900.0, nonlinear_cns),
        "kinetic" => timed("kinetic", 30.0, kinetic),
        "reproducibility" => timed("reproducibility", 60.0, reproducibility),
        _ => return None,
    };
    Some(c)
}

/// Suite names selected by `name`, with `all` expanding to every suite.
pub fn expand(name: &str) -> Option<Vec<&'static str>> {
    if name == "all" {
        return Some(SUITES.to_vec());
    }
    SUITES.iter().find(|s| **s == name).map(|s| vec![*s])
}

fn sharp_heat(profile: RadialProfile) -> Result<Vec<ClaimResult>, Error> {
    let mut times = geometric_times(1.0, 1e4, 61)?;
    times.insert(0, 0.0);
    let exp = HeatExperiment::new(HeatInitial::Radial(profile), vec![0.0, 1.0, 2.0], 1.4, times)?;
    let opts = HeatVerifyOptions {
        rate_tol: 0.03,
        sharp: true,
        fit_start: 100.0,
    };
    Ok(verify_heat_theorem(&exp, &opts)?.claims)
}

fn heat_rates() -> Result<Vec<ClaimResult>, Error> {
    sharp_heat(RadialProfile::gaussian(1.0)?)
}

fn heat_sigma() -> Result<Vec<ClaimResult>, Error> {
    let mut claims = Vec::new();
    for sigma in [0.0, 1.0] {
        for c in sharp_heat(RadialProfile::power_gaussian(sigma, 1.0)?)? {
            claims.push(ClaimResult { claim_id: format!("{}[sigma={sigma}]", c.claim_id), ..c });
        }
    }
    Ok(claims)
}

fn max_step_ratio(traj: &NormTrajectory) -> f64 {
    traj.samples()
        .windows(2)
        .map(|w| w[1].value / w[0].value)
        .fold(0.0, f64::max)
}

/// Radial oracle and a spectral grid solution, 500 samples each.
fn heat_negnorm() -> Result<Vec<ClaimResult>, Error> {
    let mut times = geometric_times(1e-3, 1e4, 499)?;
    times.insert(0, 0.0);
    let grid = GridSpec::new(32, 2.0 * std::f64::consts::PI)?;
    let field = trial_field(&TrialSpec::new(11, [1.0, 6.0], 0.0, 1), &grid, 0)?;
    let mut claims = Vec::new();
    for s in [0.5, 1.0, 1.4] {
        let radial = HeatExperiment::new(HeatInitial::Radial(RadialProfile::gaussian(1.0)?), vec![0.0], s, times.clone())?;
        let on_grid = HeatExperiment::new(HeatInitial::Field(field.clone()), vec![0.0], s, times.clone())?;
        for (what, exp) in [("radial", radial), ("grid", on_grid)] {
            let traj = decay_trajectory(&exp, what)?;
            claims.push(ClaimResult::upper_bound(
                format!("neg_norm_nonincreasing[{what},s={s}]"),
                "‖Λ^{-s}u(t)‖ never increases along the heat flow",
                1.0,
                max_step_ratio(&traj.negative),
                1e-10,
            ));
        }
    }
    Ok(claims)
}

/// The closed form solves its ODE by central differences and bounds the
/// exactly computed `‖Λ^ℓ u(t)‖²` when `C₀` comes from `t = 0`.
fn lyapunov() -> Result<Vec<ClaimResult>, Error> {
    let heat_norm_exact_sq = |p: &RadialProfile, ell: f64, t: f64| heat_norm_exact(p, ell, t).map(|n| n * n);
    let profile = RadialProfile::gaussian(1.0)?;
    let times = geometric_times(1e-2, 1e4, 60)?;
    let mut claims = Vec::new();
    for (ell, s) in [(0.0, 0.5), (1.0, 1.0), (2.0, 1.4)] {
        let e0 = heat_norm_exact_sq(&profile, ell, 0.0)?;
        let c0 = lyapunov_rate_constant(heat_norm_exact_sq(&profile, -s, 0.0)?.sqrt(), ell, s)?;
        let k = ell + s;
        let mut ode: f64 = 0.0;
        let mut bound: f64 = 0.0;
        for &t in &times {
            let h = 1e-4 * t;
            let e = lyapunov_bound(e0, c0, ell, s, t)?;
            let de = (lyapunov_bound(e0, c0, ell, s, t + h)? - lyapunov_bound(e0, c0, ell, s, t - h)?) / (2.0 * h);
            let rhs = -c0 * e.powf(1.0 + 1.0 / k);
            ode = ode.max((de - rhs).abs() / rhs.abs());
            bound = bound.max(heat_norm_exact_sq(&profile, ell, t)? / e);
        }
        claims.push(ClaimResult::upper_bound(
            format!("lyapunov_ode[ell={ell},s={s}]"),
            "closed form satisfies E' = -C₀E^{1+1/(ℓ+s)} (relative residual)",
            0.0,
            ode,
            1e-6,
        ));
        claims.push(ClaimResult::upper_bound(
            format!("lyapunov_bounds_norm[ell={ell},s={s}]"),
            "‖Λ^ℓu(t)‖² ≤ closed-form bound at every sample",
            1.0,
            bound,
            1e-12,
        ));
    }
    Ok(claims)
}

/// 1000 fields over four bands, spectral slopes and phase models.
fn interp_gate() -> Result<Vec<ClaimResult>, Error> {
    let grid = GridSpec::new(32, 2.0 * std::f64::consts::PI)?;
    let specs = [
        TrialSpec::new(101, [1.0, 4.0], 0.0, 250),
        TrialSpec::new(102, [1.0, 10.0], -2.0, 250).with_phases(PhaseMode::Coherent, 0.5),
        TrialSpec::new(103, [3.0, 10.0], 1.0, 250),
        TrialSpec::new(104, [1.0, 2.0], 0.0, 250).with_phases(PhaseMode::Mixed, 0.5),
    ];
    let pairs: Vec<(f64, f64)> = [0.0, 1.0, 2.0]
        .iter()
        .flat_map(|&l| [0.5, 1.0, 1.4].map(move |s| (l, s)))
        .collect();
    let mut worst = vec![0.0f64; pairs.len()];
    for spec in &specs {
        for trial in 0..spec.count as u64 {
            let f = trial_field(spec, &grid, trial)?;
            for (w, &(ell, s)) in worst.iter_mut().zip(&pairs) {
                *w = w.max(check_neg_interp(&f, ell, s)?);
            }
        }
    }
    Ok(pairs
        .iter()
        .zip(worst)
        .map(|(&(ell, s), w)| {
            ClaimResult::upper_bound(
                format!("neg_interp[ell={ell},s={s}]"),
                "‖Λ^ℓf‖ ≤ ‖Λ^{ℓ+1}f‖^{1−θ}‖Λ^{-s}f‖^θ with constant one over 1000 fields",
                1.0,
                w,
                1e-10,
            )
        })
        .collect())
}

fn lemma_stability() -> Result<Vec<ClaimResult>, Error> {
    let l = 2.0 * std::f64::consts::PI;
    let (g32, g64) = (GridSpec::new(32, l)?, GridSpec::new(64, l)?);
    let spec = |band, count| TrialSpec::new(7, band, 0.0, count).with_phases(PhaseMode::Mixed, 0.5);
    let mut claims = Vec::new();
    for lemma in LEMMAS {
        // Trial fields coincide across grids, so doubling needs few trials.
        // The commutator maximum comes from random-phase pairs and has a
        // heavy tail; 512 pairs bring its sampling spread under the band effect.
        let count = if lemma == "commutator" { 512 } else { 48 };
        let a = lemma_report(lemma, &spec([2.0, 4.0], 48), &g32)?;
        let b = lemma_report(lemma, &spec([2.0, 4.0], 48), &g64)?;
        let base = if count == 48 { a.clone() } else { lemma_report(lemma, &spec([2.0, 4.0], count), &g32)? };
        let c = lemma_report(lemma, &spec([2.5, 5.0], count), &g32)?;
        claims.push(ClaimResult::upper_bound(
            format!("{lemma}_grid_doubling"),
            "empirical constant changes by at most 10% from 32³ to 64³",
            0.0,
            b.relative_change(&a),
            0.1,
        ));
        claims.push(ClaimResult::upper_bound(
            format!("{lemma}_band_change"),
            "empirical constant changes by at most 10% when the band moves from [2,4] to [2.5,5]",
            0.0,
            c.relative_change(&base),
            0.1,
        ));
    }
    claims.push(ClaimResult::upper_bound(
        "minkowski_ordering",
        "‖‖F‖_{L^p_y}‖_{L^q_z} ≤ ‖‖F‖_{L^q_z}‖_{L^p_y} for q ≥ p",
        1.0,
        minkowski_worst(5, 200)?,
        1e-12,
    ));
    Ok(claims)
}

/// Cartesian right-hand side of the linearized system for one mode:
/// `ϱ' = -iρ̄ k·u`, `u' = -μ̄|k|²u - (μ̄+λ̄)k(k·u) - iγρ̄kϱ`, `k = 2πξ`.
fn linear_rhs(k: [f64; 3], y: &[Complex64; 4], p: &CnsParams) -> [Complex64; 4] {
    let i = Complex64::new(0.0, 1.0);
    let k2 = k.iter().map(|x| x * x).sum::<f64>();
    let div = k[0] * y[1] + k[1] * y[2] + k[2] * y[3];
    let mut out = [-i * p.rho_bar() * div; 4];
    for a in 0..3 {
        out[a + 1] = -p.mu_bar() * k2 * y[a + 1]
            - (p.mu_bar() + p.lambda_bar()) * k[a] * div
            - i * p.gamma() * p.rho_bar() * k[a] * y[0];
    }
    out
}

fn rk4_mode(xi: [f64; 3], y0: [Complex64; 4], t: f64, steps: usize, p: &CnsParams) -> [Complex64; 4] {
    let k = xi.map(|x| 2.0 * std::f64::consts::PI * x);
    let h = t / steps as f64;
    let axpy = |y: &[Complex64; 4], d: &[Complex64; 4], c: f64| std::array::from_fn(|j| y[j] + d[j] * c);
    let mut y = y0;
    for _ in 0..steps {
        let k1 = linear_rhs(k, &y, p);
        let k2 = linear_rhs(k, &axpy(&y, &k1, h / 2.0), p);
        let k3 = linear_rhs(k, &axpy(&y, &k2, h / 2.0), p);
        let k4 = linear_rhs(k, &axpy(&y, &k3, h), p);
        y = std::array::from_fn(|j| y[j] + (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]) * (h / 6.0));
    }
    y
}

fn mode_energy(y: &[Complex64; 4], p: &CnsParams) -> f64 {
    p.gamma() * y[0].norm_sqr() + y[1..].iter().map(|c| c.norm_sqr()).sum::<f64>()
}

fn mode_dissipation(xi: [f64; 3], y: &[Complex64; 4], p: &CnsParams) -> f64 {
    let k = xi.map(|x| 2.0 * std::f64::consts::PI * x);
    let k2 = k.iter().map(|x| x * x).sum::<f64>();
    let div = k[0] * y[1] + k[1] * y[2] + k[2] * y[3];
    2.0 * p.mu_bar() * k2 * y[1..].iter().map(|c| c.norm_sqr()).sum::<f64>()
        + 2.0 * (p.mu_bar() + p.lambda_bar()) * div.norm_sqr()
}

fn max_mode_distance(a: &[Complex64; 4], b: &[Complex64; 4]) -> f64 {
    let scale = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn linear_cns() -> Result<Vec<ClaimResult>, Error> {
    let params = CnsParams::new(1.0, 0.0, 1.0, 1.4)?;
    // Critical damping: νκ/2 = ρ̄√γ.
    let kappa_c = 2.0 * params.rho_bar() * params.gamma().sqrt() / params.longitudinal_viscosity();
    let unit = [0.6, 0.0, 0.8];
    let mut modes: Vec<[f64; 3]> = vec![[0.05, 0.0, 0.0], [0.1, 0.2, -0.15], [0.3, 0.1, 0.25], [0.0, 0.45, 0.1]];
    modes.push(unit.map(|d| d * kappa_c / (2.0 * std::f64::consts::PI)));
    let y0 = [
        Complex64::new(0.3, -0.1),
        Complex64::new(0.2, 0.5),
        Complex64::new(-0.4, 0.1),
        Complex64::new(0.1, -0.3),
    ];
    let mut ode_err: f64 = 0.0;
    let mut identity: f64 = 0.0;
    for xi in &modes {
        let kappa = 2.0 * std::f64::consts::PI * xi.iter().map(|x| x * x).sum::<f64>().sqrt();
        debug_assert!(kappa <= 3.0);
        for t in [0.5, 2.0, 5.0] {
            let exact = linear_cns_mode_evolve(*xi, y0, t, &params)?;
            let reference = rk4_mode(*xi, y0, t, (2e4 * t) as usize, &params);
            ode_err = ode_err.max(max_mode_distance(&exact, &reference));

            let dissipated = integrate(
                &|tau: f64| {
                    linear_cns_mode_evolve(*xi, y0, tau, &params)
                        .map(|y| mode_dissipation(*xi, &y, &params))
                        .unwrap_or(f64::NAN)
                },
                0.0,
                t,
                QuadOptions::default(),
            );
            let e0 = mode_energy(&y0, &params);
            let residual = (mode_energy(&exact, &params) - e0 + dissipated.value).abs() / e0;
            identity = identity.max(residual);
        }
    }
    let mut claims = vec![
        ClaimResult::upper_bound(
            "mode_matches_ode",
            "exact mode propagator against fourth-order integration of the Cartesian system",
            0.0,
            ode_err,
            1e-9,
        ),
        ClaimResult::upper_bound(
            "mode_energy_identity",
            "E(t) − E(0) + ∫₀ᵗ D = 0 per mode, relative to E(0)",
            0.0,
            identity,
            1e-8,
        ),
    ];

    let profile = RadialProfile::gaussian(1.0)?;
    let partition = EnergyPartition::equal();
    let mut traj = NormTrajectory::new("linear_cns_norm[ell=0]", "gaussian");
    for t in geometric_times(100.0, 1e4, 25)? {
        traj.push(t, linear_cns_norm_exact(&profile, &partition, 0.0, t, &params)?, SampleFlag::Ok)?;
    }
    let fit = fit_exponent(&traj, [100.0, 1e4])?;
    claims.push(ClaimResult::new(
        "linear_cns_rate[ell=0]",
        "radial oracle decays like the heat flow for generic data",
        CompareMode::TwoSided.as_str(),
        -0.75,
        fit.exponent,
        0.03,
        compare_predicted(&fit, -0.75, 0.03, CompareMode::TwoSided),
    ));
    Ok(claims)
}

fn nonlinear_cns() -> Result<Vec<ClaimResult>, Error> {
    let grid = GridSpec::new(32, 2.0 * std::f64::consts::PI)?;
    let spec = CnsExperimentSpec::new(
        grid,
        CnsInitial::Random {
            band: [1.0, 1.5],
            amplitude: 1e-2,
            seed: 1,
        },
        10.0,
    );
    let run = run_cns_experiment(&spec, "acceptance")?;
    let mut claims = run.claims;

    let model = CnsModel::default();
    let tiny = CnsState::random_perturbation(grid, model, [1.0, 1.5], 1e-8, 2)?;
    let dt = sobodecay::cns::cfl_dt(&tiny, 0.5);
    claims.push(ClaimResult::upper_bound(
        "linear_limit_step",
        "one step at amplitude 1e-8 matches the exact linear evolution",
        0.0,
        linear_limit_defect(&tiny, dt)?,
        1e-10,
    ));
    let state = CnsState::random_perturbation(grid, model, [1.0, 1.5], 1e-2, 1)?;
    let order = richardson_order(&state, 0.5, 8)?;
    claims.push(ClaimResult::new(
        "rk4_order",
        "observed temporal order by Richardson extrapolation",
        "lower_bound",
        3.9,
        order,
        0.0,
        Verdict::from_bool(order >= 3.9),
    ));
    Ok(claims)
}

fn kinetic() -> Result<Vec<ClaimResult>, Error> {
    let grid = VelocityGrid::new(17, 8.0)?;
    let center = VelocityGrid::new(129, 8.0)?;
    kinetic_claims(&grid, &center, 1, 8)
}

const REPRO_CONFIGS: [&str; 3] = [
    "kind = heat\ngrid.n = 16\ngrid.L = 6.283185307179586\ns = 1\nheat.initial = field\n\
     times.start = 0.01\ntimes.stop = 2\ntimes.count = 20\nfit.start = 0.1\n",
    "kind = cns\ncns.initial = equilibrium\ngrid.n = 8\ncns.t_final = 0.5\n",
    "kind = cns\ngrid.n = 16\ncns.t_final = 0.3\n",
];

/// Each config runs twice into separate roots in reference mode; all four
/// output files must agree byte for byte. The equilibrium run must pass.
fn reproducibility() -> Result<Vec<ClaimResult>, Error> {
    let io = |e: std::io::Error| Error::Contract(e.to_string());
    let tmp = std::env::temp_dir().join(format!("sobodecay-repro-{}", std::process::id()));
    let mut claims = Vec::new();
    for (i, text) in REPRO_CONFIGS.iter().enumerate() {
        let cfg = parse_config_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut dirs = Vec::new();
        for rep in 0..2 {
            let opts = RunOptions {
                out_root: Some(tmp.join(format!("{i}-{rep}"))),
                force: true,
                reference: true,
            };
            let summary = run_config(&cfg, &opts).map_err(|e| Error::Contract(e.to_string()))?;
            if i == 1 {
                claims.push(ClaimResult::new(
                    format!("equilibrium_passes[{rep}]"),
                    "an equilibrium run stays at rest and passes every claim",
                    "report",
                    f64::NAN,
                    f64::NAN,
                    0.0,
                    Verdict::from_bool(summary.status == RunStatus::Pass),
                ));
            }
            dirs.push(summary.dir);
        }
        let mut identical = true;
        for name in ["config.txt", "trajectories.csv", "verdicts.json", "record.json"] {
            identical &= std::fs::read(dirs[0].join(name)).map_err(io)? == std::fs::read(dirs[1].join(name)).map_err(io)?;
        }
        claims.push(ClaimResult::new(
            format!("byte_identical[config={i}]"),
            "identical config gives byte-identical outputs in reference mode",
            "report",
            f64::NAN,
            f64::NAN,
            0.0,
            Verdict::from_bool(identical),
        ));
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok(claims)
}
