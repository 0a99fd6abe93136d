//! Whole-space reference values for radially symmetric spectral data.
//!
//! A [`RadialProfile`] prescribes `|û₀(ξ)|² = ρ(|ξ|)`. Norms of the heat and
//! linearized compressible Navier–Stokes semigroups then reduce to
//! one-dimensional integrals over `r = |ξ|`, with the normalisation
//! `‖f‖²_{L²} = ∫ |f̂|² dξ = 4π ∫ r² ρ(r) dr` matching the Parseval identity of
//! [`crate::spectral`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_from_origin, QuadOptions};

/// `e^{-TAIL_EXPONENT}` is the neglected tail of a decaying factor.
const TAIL_EXPONENT: f64 = 80.0;

type Density = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial spectral density `ρ(r) = |û₀|²(|ξ| = r)` with `ρ(r) ~ r^{2σ}` near 0.
#[derive(Clone)]
pub struct RadialProfile {
    name: String,
    density: Density,
    support: f64,
    sigma: f64,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("name", &self.name)
            .field("support", &self.support)
            .field("sigma", &self.sigma)
            .finish()
    }
}

impl RadialProfile {
    /// A profile from an arbitrary density. `support` bounds the region where
    /// `ρ` is non-negligible; `sigma` is the low-frequency exponent.
    pub fn new<F>(name: impl Into<String>, density: F, support: f64, sigma: f64) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(support > 0.0 && support.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "profile support {support} must be positive and finite"
            )));
        }
        if !(sigma > -1.5) {
            return Err(Error::InvalidParameter(format!(
                "low-frequency exponent sigma = {sigma} must exceed -3/2 for L² data"
            )));
        }
        Ok(Self {
            name: name.into(),
            density: Arc::new(density),
            support,
            sigma,
        })
    }

    /// `ρ(r) = e^{-(r/w)²}`.
    pub fn gaussian(width: f64) -> Result<Self> {
        Self::power_gaussian(0.0, width)
    }

    /// `ρ(r) = r^{2σ} e^{-(r/w)²}`.
    pub fn power_gaussian(sigma: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::InvalidParameter(format!("width {width} must be positive")));
        }
        let support = width * (TAIL_EXPONENT + 40.0 * (1.0 + sigma.abs())).sqrt();
        Self::new(
            format!("power_gaussian(sigma={sigma},width={width})"),
            move |r: f64| {
                let g = (-(r / width).powi(2)).exp();
                if sigma == 0.0 {
                    g
                } else {
                    r.powf(2.0 * sigma) * g
                }
            },
            support,
            sigma,
        )
    }

    /// `ρ(r) = r^{2σ} 1[r ≤ r_cut]`.
    pub fn power_cutoff(sigma: f64, r_cut: f64) -> Result<Self> {
        Self::new(
            format!("power_cutoff(sigma={sigma},r_cut={r_cut})"),
            move |r: f64| {
                if r > r_cut {
                    0.0
                } else if sigma == 0.0 {
                    1.0
                } else {
                    r.powf(2.0 * sigma)
                }
            },
            r_cut,
            sigma,
        )
    }

    /// Piecewise-linear interpolation of tabulated `(r, ρ)` pairs, zero beyond
    /// the last node. The first node should be at `r = 0` or the table is
    /// extrapolated as `r^{2σ}` toward the origin.
    pub fn tabulated(radii: Vec<f64>, values: Vec<f64>, sigma: f64) -> Result<Self> {
        if radii.len() != values.len() || radii.len() < 2 {
            return Err(Error::InvalidParameter(
                "tabulated profile needs matching radii and values (at least two)".into(),
            ));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] < 0.0 {
            return Err(Error::InvalidParameter(
                "tabulated radii must be non-negative and strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidParameter("profile values must be >= 0".into()));
        }
        let support = *radii.last().unwrap();
        Self::new(
            "tabulated",
            move |r: f64| {
                if r > support {
                    return 0.0;
                }
                if r <= radii[0] {
                    if radii[0] == 0.0 {
                        return values[0];
                    }
                    return values[0] * (r / radii[0]).powf(2.0 * sigma);
                }
                let j = radii.partition_point(|&x| x <= r).min(radii.len() - 1);
                let (r0, r1) = (radii[j - 1], radii[j]);
                let w = (r - r0) / (r1 - r0);
                values[j - 1] * (1.0 - w) + values[j] * w
            },
            support,
            sigma,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn density(&self, r: f64) -> f64 {
        (self.density)(r)
    }

    pub fn support(&self) -> f64 {
        self.support
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Integrand exponent `β` of `r^{2ℓ+2} ρ(r) ~ r^β` at the origin, or an
    /// error if the integral diverges there.
    fn origin_exponent(&self, ell: f64) -> Result<f64> {
        let beta = 2.0 * ell + 2.0 + 2.0 * self.sigma;
        if beta <= -1.0 {
            return Err(Error::Divergent(format!(
                "∫ r^(2ℓ+2) ρ(r) dr diverges at r = 0 for ℓ = {ell}, σ = {} (needs ℓ + σ > -3/2)",
                self.sigma
            )));
        }
        Ok(beta)
    }
}

fn quad_options() -> QuadOptions {
    QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 0.0,
        max_depth: 50,
    }
}

/// `‖Λ^ℓ e^{tΔ} u₀‖_{L²}` for radial data:
/// `(4π ∫₀^∞ r^{2ℓ+2} ρ(r) e^{-8π²r²t} dr)^{1/2}`.
pub fn heat_norm_exact(profile: &RadialProfile, ell: f64, t: f64) -> Result<f64> {
    if !(ell >= -1.5) {
        return Err(Error::InvalidParameter(format!("ℓ = {ell} must be >= -3/2")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be >= 0")));
    }
    let beta = profile.origin_exponent(ell)?;
    let rate = 8.0 * PI * PI * t;
    let mut upper = profile.support;
    if rate > 0.0 {
        upper = upper.min((TAIL_EXPONENT / rate).sqrt());
    }
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        r.powf(2.0 * ell + 2.0) * profile.density(r) * (-rate * r * r).exp()
    };
    let q = integrate_from_origin(&integrand, upper, beta, quad_options());
    Ok((4.0 * PI * q.value).sqrt())
}

/// Fluid parameters of the compressible Navier–Stokes perturbation system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnsParams {
    mu: f64,
    lambda: f64,
    rho_bar: f64,
    p_prime: f64,
}

impl CnsParams {
    /// Shear viscosity `mu`, second viscosity `lambda`, background density
    /// `rho_bar` and pressure slope `p_prime = p′(ρ̄)`.
    pub fn new(mu: f64, lambda: f64, rho_bar: f64, p_prime: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!("shear viscosity mu = {mu} must be > 0")));
        }
        if !(lambda + 2.0 * mu / 3.0 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "viscosities violate lambda + 2 mu / 3 >= 0 (mu = {mu}, lambda = {lambda})"
            )));
        }
        if !(rho_bar > 0.0) {
            return Err(Error::InvalidParameter(format!("rho_bar = {rho_bar} must be > 0")));
        }
        if !(p_prime > 0.0) {
            return Err(Error::InvalidParameter(format!("p'(rho_bar) = {p_prime} must be > 0")));
        }
        Ok(Self {
            mu,
            lambda,
            rho_bar,
            p_prime,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho_bar(&self) -> f64 {
        self.rho_bar
    }

    pub fn p_prime(&self) -> f64 {
        self.p_prime
    }

    /// `μ̄ = μ / ρ̄`
    pub fn mu_bar(&self) -> f64 {
        self.mu / self.rho_bar
    }

    /// `λ̄ = λ / ρ̄`
    pub fn lambda_bar(&self) -> f64 {
        self.lambda / self.rho_bar
    }

    /// `γ = p′(ρ̄) / ρ̄²`
    pub fn gamma(&self) -> f64 {
        self.p_prime / (self.rho_bar * self.rho_bar)
    }

    /// Longitudinal diffusivity `2μ̄ + λ̄`.
    pub fn longitudinal_viscosity(&self) -> f64 {
        2.0 * self.mu_bar() + self.lambda_bar()
    }

    /// Sound speed `√p′(ρ̄) = ρ̄ √γ`.
    pub fn sound_speed(&self) -> f64 {
        self.p_prime.sqrt()
    }
}

/// `exp(A t)` for the acoustic block acting on `(ϱ̂, ŵ)`, `ŵ = ξ̂·û`,
/// with `A = [[0, -iρ̄κ], [-iγρ̄κ, -(2μ̄+λ̄)κ²]]` and `κ = 2π|ξ|`.
pub fn acoustic_propagator(kappa: f64, t: f64, params: &CnsParams) -> [[Complex64; 2]; 2] {
    let nu = params.longitudinal_viscosity();
    let rho_bar = params.rho_bar;
    let gamma = params.gamma();
    let c = -0.5 * nu * kappa * kappa;
    let det = gamma * rho_bar * rho_bar * kappa * kappa;
    let q_sq = c * c - det;
    let scale = c * c + det;

    // e^{ct} cosh(qt) and e^{ct} sinh(qt)/q
    let (ec, es) = if scale == 0.0 {
        (1.0, t)
    } else if q_sq.abs() <= 1e-12 * scale {
        // double eigenvalue: series in q²t²
        let z = q_sq * t * t;
        let (mut cosh_sum, mut sinh_sum) = (1.0, 1.0);
        let (mut tc, mut ts) = (1.0, 1.0);
        for k in 1..40 {
            tc *= z / ((2 * k - 1) * (2 * k)) as f64;
            ts *= z / ((2 * k) * (2 * k + 1)) as f64;
            cosh_sum += tc;
            sinh_sum += ts;
            if tc.abs() < 1e-18 * cosh_sum.abs() && ts.abs() < 1e-18 * sinh_sum.abs() {
                break;
            }
        }
        let e = (c * t).exp();
        (e * cosh_sum, e * t * sinh_sum)
    } else if q_sq > 0.0 {
        let q = q_sq.sqrt();
        // c + q = -det / (q - c) without cancellation
        let fast = ((c - q) * t).exp();
        let slow = ((-det / (q - c)) * t).exp();
        (0.5 * (slow + fast), -slow * (-2.0 * q * t).exp_m1() / (2.0 * q))
    } else {
        let omega = (-q_sq).sqrt();
        let e = (c * t).exp();
        (e * (omega * t).cos(), e * (omega * t).sin() / omega)
    };

    let i = Complex64::new(0.0, 1.0);
    // A - cI = [[-c, -iρ̄κ], [-iγρ̄κ, -νκ² - c]]
    let b00 = Complex64::new(-c, 0.0);
    let b01 = -i * rho_bar * kappa;
    let b10 = -i * gamma * rho_bar * kappa;
    let b11 = Complex64::new(-nu * kappa * kappa - c, 0.0);
    [
        [ec + es * b00, es * b01],
        [es * b10, ec + es * b11],
    ]
}

/// Exact evolution of one Fourier mode `(ϱ̂, û₁, û₂, û₃)` of the linearized
/// system over time `t`.
pub fn linear_cns_mode_evolve(
    xi: [f64; 3],
    state: [Complex64; 4],
    t: f64,
    params: &CnsParams,
) -> Result<[Complex64; 4]> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be >= 0")));
    }
    let xi_norm = (xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]).sqrt();
    if xi_norm == 0.0 {
        return Ok(state);
    }
    let kappa = 2.0 * PI * xi_norm;
    let dir = [xi[0] / xi_norm, xi[1] / xi_norm, xi[2] / xi_norm];
    let m = acoustic_propagator(kappa, t, params);
    let shear = (-params.mu_bar() * kappa * kappa * t).exp();
    Ok(apply_mode_propagator(dir, &m, shear, state))
}

/// Applies a precomputed per-mode propagator.
#[inline]
pub(crate) fn apply_mode_propagator(
    dir: [f64; 3],
    m: &[[Complex64; 2]; 2],
    shear: f64,
    state: [Complex64; 4],
) -> [Complex64; 4] {
    let rho = state[0];
    let u = [state[1], state[2], state[3]];
    let w = u[0] * dir[0] + u[1] * dir[1] + u[2] * dir[2];
    let rho_new = m[0][0] * rho + m[0][1] * w;
    let w_new = m[1][0] * rho + m[1][1] * w;
    let mut out = [rho_new, Complex64::default(), Complex64::default(), Complex64::default()];
    for a in 0..3 {
        let perp = u[a] - dir[a] * w;
        out[a + 1] = perp * shear + dir[a] * w_new;
    }
    out
}

/// Split of the initial energy density `γ|ϱ̂|² + |û|²` among density,
/// solenoidal velocity and longitudinal velocity. Weights are normalised.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyPartition {
    pub density: f64,
    pub solenoidal: f64,
    pub longitudinal: f64,
}

impl EnergyPartition {
    pub fn new(density: f64, solenoidal: f64, longitudinal: f64) -> Result<Self> {
        let total = density + solenoidal + longitudinal;
        if [density, solenoidal, longitudinal].iter().any(|w| !(*w >= 0.0)) || !(total > 0.0) {
            return Err(Error::InvalidParameter(
                "energy partition weights must be non-negative with a positive sum".into(),
            ));
        }
        Ok(Self {
            density: density / total,
            solenoidal: solenoidal / total,
            longitudinal: longitudinal / total,
        })
    }

    pub fn equal() -> Self {
        Self::new(1.0, 1.0, 1.0).unwrap()
    }

    pub fn solenoidal_only() -> Self {
        Self::new(0.0, 1.0, 0.0).unwrap()
    }
}

/// Energy `γ|ϱ̂(t)|² + |û(t)|²` of a mode at `κ` that starts with unit energy
/// split according to `partition` (density and longitudinal velocity in phase).
pub fn mode_energy_gain(kappa: f64, t: f64, partition: &EnergyPartition, params: &CnsParams) -> f64 {
    let gamma = params.gamma();
    let rho0 = Complex64::new((partition.density / gamma).sqrt(), 0.0);
    let w0 = Complex64::new(partition.longitudinal.sqrt(), 0.0);
    let m = acoustic_propagator(kappa, t, params);
    let rho = m[0][0] * rho0 + m[0][1] * w0;
    let w = m[1][0] * rho0 + m[1][1] * w0;
    let shear = (-2.0 * params.mu_bar() * kappa * kappa * t).exp();
    gamma * rho.norm_sqr() + w.norm_sqr() + partition.solenoidal * shear
}

/// Energy-weighted `Ḣ^ℓ` norm of the linearized semigroup for radial data:
/// `(4π ∫ r^{2ℓ+2} ρ(r) G(r, t) dr)^{1/2}` with `G` from [`mode_energy_gain`].
pub fn linear_cns_norm_exact(
    profile: &RadialProfile,
    partition: &EnergyPartition,
    ell: f64,
    t: f64,
    params: &CnsParams,
) -> Result<f64> {
    if !(ell >= -1.5) {
        return Err(Error::InvalidParameter(format!("ℓ = {ell} must be >= -3/2")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time t = {t} must be >= 0")));
    }
    let beta = profile.origin_exponent(ell)?;
    let mut upper = profile.support;
    // slowest decay rate of any mode beyond κ is bounded below by
    // min(μ̄κ², νκ²/2, γρ̄²/ν); cut once all of them are negligible
    let nu = params.longitudinal_viscosity();
    let floor_rate = params.gamma() * params.rho_bar * params.rho_bar / nu;
    if 2.0 * floor_rate * t >= TAIL_EXPONENT {
        let diff = params.mu_bar().min(0.5 * nu);
        let kappa_cut = (TAIL_EXPONENT / (2.0 * diff * t)).sqrt();
        upper = upper.min(kappa_cut / (2.0 * PI));
    }
    let integrand = |r: f64| {
        if r == 0.0 {
            return 0.0;
        }
        r.powf(2.0 * ell + 2.0) * profile.density(r) * mode_energy_gain(2.0 * PI * r, t, partition, params)
    };
    let q = integrate_from_origin(&integrand, upper, beta, quad_options());
    Ok((4.0 * PI * q.value).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> CnsParams {
        CnsParams::new(1.0, 0.0, 1.0, 1.4).unwrap()
    }

    #[test]
    fn profile_validation() {
        assert!(RadialProfile::power_cutoff(-1.6, 1.0).is_err());
        assert!(RadialProfile::gaussian(0.0).is_err());
        let p = RadialProfile::power_cutoff(0.0, 1.0).unwrap();
        assert!(matches!(heat_norm_exact(&p, -1.5, 1.0), Err(Error::Divergent(_))));
        assert!(heat_norm_exact(&p, -1.4, 1.0).is_ok());
        assert!(heat_norm_exact(&p, 0.0, -1.0).is_err());
    }

    #[test]
    fn t_zero_is_l2_norm() {
        // ∫ r² e^{-r²} dr = √π/4
        let p = RadialProfile::gaussian(1.0).unwrap();
        let expect = (4.0 * PI * PI.sqrt() / 4.0).sqrt();
        assert_relative_eq!(heat_norm_exact(&p, 0.0, 0.0).unwrap(), expect, max_relative = 1e-12);
    }

    #[test]
    fn tabulated_profile_interpolates() {
        let p = RadialProfile::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 0.5, 0.0], 0.0).unwrap();
        assert_relative_eq!(p.density(0.5), 0.75);
        assert_eq!(p.density(2.5), 0.0);
        // ∫₀² r² ρ dr with ρ piecewise linear: ∫₀¹ r²(1 - r/2) + ∫₁² r²(1 - r/2) = 2/3
        let v = heat_norm_exact(&p, 0.0, 0.0).unwrap();
        assert_relative_eq!(v * v, 4.0 * PI * 2.0 / 3.0, max_relative = 1e-10);
    }

    #[test]
    fn params_validation() {
        assert!(CnsParams::new(0.0, 0.0, 1.0, 1.0).is_err());
        assert!(CnsParams::new(1.0, -0.7, 1.0, 1.0).is_err());
        assert!(CnsParams::new(1.0, -0.6, 1.0, 1.0).is_ok());
        let p = CnsParams::new(2.0, 1.0, 4.0, 8.0).unwrap();
        assert_relative_eq!(p.mu_bar(), 0.5);
        assert_relative_eq!(p.lambda_bar(), 0.25);
        assert_relative_eq!(p.gamma(), 0.5);
    }

    #[test]
    fn zero_frequency_is_stationary() {
        let s = [
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.3, 0.1),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.0),
        ];
        assert_eq!(linear_cns_mode_evolve([0.0; 3], s, 7.0, &params()).unwrap(), s);
    }

    #[test]
    fn solenoidal_mode_decays_as_heat() {
        let p = params();
        let xi = [0.3, 0.0, 0.0];
        let s = [
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, -0.5),
            Complex64::new(0.2, 0.0),
        ];
        let t = 0.7;
        let out = linear_cns_mode_evolve(xi, s, t, &p).unwrap();
        let f = (-4.0 * PI * PI * p.mu_bar() * 0.09 * t).exp();
        assert!(out[0].norm() < 1e-15);
        assert!(out[1].norm() < 1e-15);
        assert!((out[2] - s[2] * f).norm() < 1e-15);
        assert!((out[3] - s[3] * f).norm() < 1e-15);
    }

    #[test]
    fn propagator_is_a_semigroup_across_regimes() {
        let p = params();
        // κ on both sides of and at the degeneracy νκ = 2√γ ρ̄
        let kc = 2.0 * p.gamma().sqrt() * p.rho_bar() / p.longitudinal_viscosity();
        for kappa in [0.1, kc * 0.999, kc, kc * (1.0 + 1e-14), kc * 1.001, 5.0, 40.0] {
            let a = acoustic_propagator(kappa, 0.3, &p);
            let b = acoustic_propagator(kappa, 0.5, &p);
            let ab = acoustic_propagator(kappa, 0.8, &p);
            for i in 0..2 {
                for j in 0..2 {
                    let prod = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                    assert!((prod - ab[i][j]).norm() < 1e-13, "κ = {kappa}");
                }
            }
        }
    }

    #[test]
    fn propagator_continuous_through_degeneracy() {
        let p = params();
        let kc = 2.0 * p.gamma().sqrt() * p.rho_bar() / p.longitudinal_viscosity();
        let at = acoustic_propagator(kc, 1.3, &p);
        for eps in [1e-7, -1e-7] {
            let near = acoustic_propagator(kc * (1.0 + eps), 1.3, &p);
            for i in 0..2 {
                for j in 0..2 {
                    assert!((near[i][j] - at[i][j]).norm() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn energy_gain_of_solenoidal_partition() {
        let p = params();
        let g = mode_energy_gain(2.0, 0.1, &EnergyPartition::solenoidal_only(), &p);
        assert_relative_eq!(g, (-2.0 * 4.0 * 0.1f64).exp(), max_relative = 1e-14);
    }

    #[test]
    fn solenoidal_norm_matches_heat_with_viscosity() {
        let p = CnsParams::new(0.5, 0.0, 1.0, 1.4).unwrap();
        let prof = RadialProfile::gaussian(1.0).unwrap();
        for t in [0.0, 0.1, 3.0] {
            let cns = linear_cns_norm_exact(&prof, &EnergyPartition::solenoidal_only(), 1.0, t, &p).unwrap();
            let heat = heat_norm_exact(&prof, 1.0, p.mu_bar() * t).unwrap();
            assert_relative_eq!(cns, heat, max_relative = 1e-10);
        }
    }
}
