use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use sobodecay::continuum::{
    heat_norm_exact, linear_cns_mode_evolve, linear_cns_norm_exact, mode_energy_gain, CnsParams, EnergyPartition,
    RadialProfile,
};
use sobodecay::fit::{fit_exponent, geometric_times, NormTrajectory};

/// `Γ(ℓ + 3/2)` for integer `ℓ ≥ 0` by the recurrence from `Γ(1/2) = √π`.
fn gamma_half(ell: u32) -> f64 {
    (0..=ell).fold(PI.sqrt(), |g, j| g * (j as f64 + 0.5))
}

/// `‖∇^ℓ e^{tΔ} f‖` for `|f̂|² = e^{-(r/w)²}`:
/// `4π ∫ r^{2ℓ+2} e^{-a r²} dr = 2π Γ(ℓ+3/2) a^{-(ℓ+3/2)}`, `a = w⁻² + 8π²t`.
fn gaussian_closed_form(w: f64, ell: u32, t: f64) -> f64 {
    let a = 1.0 / (w * w) + 8.0 * PI * PI * t;
    (2.0 * PI * gamma_half(ell) * a.powf(-(ell as f64 + 1.5))).sqrt()
}

/// Composite Simpson rule with a fixed number of panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let inner: f64 = (1..panels).map(|i| f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 }).sum();
    (f(a) + f(b) + inner) * h / 3.0
}

fn params() -> CnsParams {
    CnsParams::new(1.0, 0.0, 1.0, 1.4).unwrap()
}

#[test]
fn gaussian_heat_norm_matches_closed_form() {
    for w in [0.5, 1.0, 2.0] {
        let profile = RadialProfile::gaussian(w).unwrap();
        for ell in 0..=3 {
            for t in [0.0, 1e-3, 0.1, 1.0, 1e2, 1e4] {
                let got = heat_norm_exact(&profile, ell as f64, t).unwrap();
                let want = gaussian_closed_form(w, ell, t);
                assert!((got - want).abs() <= 1e-8 * want, "w={w} ell={ell} t={t}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn cutoff_profile_matches_fixed_grid_quadrature() {
    let profile = RadialProfile::power_cutoff(0.0, 1.0).unwrap();
    for ell in [0.0, 1.0, 2.5] {
        for t in [0.0, 1e-3, 0.05] {
            let q = simpson(|r| r.powf(2.0 * ell + 2.0) * (-8.0 * PI * PI * r * r * t).exp(), 0.0, 1.0, 20_000);
            let want = (4.0 * PI * q).sqrt();
            let got = heat_norm_exact(&profile, ell, t).unwrap();
            assert!((got - want).abs() <= 1e-8 * want, "ell={ell} t={t}");
        }
    }
}

#[test]
fn cutoff_profile_decays_at_sharp_rate() {
    let profile = RadialProfile::power_cutoff(0.0, 1.0).unwrap();
    let times = geometric_times(1e2, 1e4, 25).unwrap();
    let traj =
        NormTrajectory::from_samples("l2", "cutoff", times.iter().map(|&t| (t, heat_norm_exact(&profile, 0.0, t).unwrap())))
            .unwrap();
    let fit = fit_exponent(&traj, [1e2, 1e4]).unwrap();
    assert!((fit.exponent + 0.75).abs() <= 0.01, "{}", fit.exponent);
}

/// `y' = A y` for `y = (ϱ̂, û)` in Cartesian components.
fn mode_rhs(k: [f64; 3], p: &CnsParams, y: &[Complex64; 4]) -> [Complex64; 4] {
    let i = Complex64::new(0.0, 1.0);
    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    let ku = k[0] * y[1] + k[1] * y[2] + k[2] * y[3];
    let mut out = [-i * p.rho_bar() * ku, Complex64::default(), Complex64::default(), Complex64::default()];
    for a in 0..3 {
        out[a + 1] = -p.mu_bar() * k2 * y[a + 1] - (p.mu_bar() + p.lambda_bar()) * k[a] * ku
            - i * p.gamma() * p.rho_bar() * k[a] * y[0];
    }
    out
}

fn rk4_mode(xi: [f64; 3], y0: [Complex64; 4], t: f64, p: &CnsParams, steps: usize) -> [Complex64; 4] {
    let k = xi.map(|x| 2.0 * PI * x);
    let h = t / steps as f64;
    let mut y = y0;
    let axpy = |y: &[Complex64; 4], d: &[Complex64; 4], c: f64| std::array::from_fn::<_, 4, _>(|j| y[j] + d[j] * c);
    for _ in 0..steps {
        let k1 = mode_rhs(k, p, &y);
        let k2 = mode_rhs(k, p, &axpy(&y, &k1, h / 2.0));
        let k3 = mode_rhs(k, p, &axpy(&y, &k2, h / 2.0));
        let k4 = mode_rhs(k, p, &axpy(&y, &k3, h));
        y = std::array::from_fn(|j| y[j] + (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0));
    }
    y
}

#[test]
fn mode_evolution_matches_runge_kutta() {
    let y0 = [
        Complex64::new(0.3, -0.2),
        Complex64::new(1.0, 0.5),
        Complex64::new(-0.4, 0.1),
        Complex64::new(0.2, 0.7),
    ];
    for p in [params(), CnsParams::new(0.3, 0.5, 2.0, 3.0).unwrap(), CnsParams::new(2.0, 1.0, 0.5, 0.2).unwrap()] {
        // below, near and above the critical frequency 2ρ̄√γ/ν
        let kc = 2.0 * p.rho_bar() * p.gamma().sqrt() / p.longitudinal_viscosity();
        for kappa in [0.2 * kc, 0.999 * kc, kc, 3.0 * kc] {
            let dir = [2.0, -1.0, 2.0].map(|x: f64| x / 3.0);
            let xi = dir.map(|d| d * kappa / (2.0 * PI));
            let t = 1.0 / (kappa * kappa).max(1.0);
            let want = rk4_mode(xi, y0, t, &p, 20_000);
            let got = linear_cns_mode_evolve(xi, y0, t, &p).unwrap();
            for j in 0..4 {
                assert!((got[j] - want[j]).norm() <= 1e-9, "kappa={kappa} comp {j}");
            }
        }
    }
}

#[test]
fn energy_norm_decays_at_heat_rate() {
    let profile = RadialProfile::gaussian(1.0).unwrap();
    let times = geometric_times(1e2, 1e4, 25).unwrap();
    for (ell, rate) in [(0.0, -0.75), (1.0, -1.25)] {
        let traj = NormTrajectory::from_samples(
            "energy",
            "gaussian",
            times
                .iter()
                .map(|&t| (t, linear_cns_norm_exact(&profile, &EnergyPartition::equal(), ell, t, &params()).unwrap())),
        )
        .unwrap();
        let fit = fit_exponent(&traj, [1e2, 1e4]).unwrap();
        assert!((fit.exponent - rate).abs() <= 0.03, "ell={ell}: {}", fit.exponent);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mode_energy_starts_at_one_and_never_grows(
        kappa in 1e-3f64..30.0,
        t1 in 0.0f64..5.0,
        dt in 0.0f64..5.0,
        wd in 0.0f64..1.0, ws in 0.0f64..1.0, wl in 0.01f64..1.0,
    ) {
        let part = EnergyPartition::new(wd, ws, wl).unwrap();
        let p = params();
        prop_assert!((mode_energy_gain(kappa, 0.0, &part, &p) - 1.0).abs() <= 1e-12);
        let a = mode_energy_gain(kappa, t1, &part, &p);
        let b = mode_energy_gain(kappa, t1 + dt, &part, &p);
        prop_assert!(b <= a * (1.0 + 1e-12) + 1e-300);
    }

    #[test]
    fn heat_norm_is_monotone_in_time(w in 0.2f64..3.0, ell in 0.0f64..3.0, t in 0.0f64..10.0, dt in 1e-3f64..10.0) {
        let profile = RadialProfile::gaussian(w).unwrap();
        let a = heat_norm_exact(&profile, ell, t).unwrap();
        let b = heat_norm_exact(&profile, ell, t + dt).unwrap();
        prop_assert!(b < a);
    }
}
