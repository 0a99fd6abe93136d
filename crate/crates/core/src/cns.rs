//! Pseudospectral integration of the compressible Navier–Stokes perturbation
//! system
//!
//! ```text
//! ∂ₜϱ + ρ̄ div u = −div(ϱu)
//! ∂ₜu − μ̄Δu − (μ̄+λ̄)∇div u + γρ̄∇ϱ = −u·∇u − h(ϱ)(μ̄Δu + (μ̄+λ̄)∇div u) − f(ϱ)∇ϱ
//! ```
//!
//! with `h(ϱ) = ϱ/(ϱ+ρ̄)` and `f(ϱ) = p′(ϱ+ρ̄)/(ϱ+ρ̄) − p′(ρ̄)/ρ̄`.
//!
//! The whole linear part (viscous and acoustic) is propagated exactly per
//! Fourier mode inside a Lawson (integrating-factor) RK4 scheme. Products are
//! formed in physical space and truncated to the 2/3 band.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::continuum::{acoustic_propagator, apply_mode_propagator, CnsParams};
use crate::error::{Error, Result};
use crate::fit::{ClaimResult, NormTrajectory, SampleFlag, Verdict};
use crate::inequality::{trial_field, TrialSpec};
use crate::spectral::{
    fft3, forward_real_pair, inverse_real_pair, sobolev_norm_sq, Direction, GridSpec, Space, SpectralField,
};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Smooth pressure law `p(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PressureLaw {
    /// `p = a ρ^γ`
    Polytropic { coefficient: f64, exponent: f64 },
    /// `p = c² ρ`
    Isothermal { sound_speed_sq: f64 },
}

impl PressureLaw {
    pub fn p_prime(&self, rho: f64) -> f64 {
        match *self {
            PressureLaw::Polytropic { coefficient, exponent } => coefficient * exponent * rho.powf(exponent - 1.0),
            PressureLaw::Isothermal { sound_speed_sq } => sound_speed_sq,
        }
    }
}

impl Default for PressureLaw {
    fn default() -> Self {
        PressureLaw::Polytropic {
            coefficient: 1.0,
            exponent: 1.4,
        }
    }
}

/// Fluid parameters together with the pressure law they were derived from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CnsModel {
    params: CnsParams,
    pressure: PressureLaw,
}

impl CnsModel {
    pub fn new(mu: f64, lambda: f64, rho_bar: f64, pressure: PressureLaw) -> Result<Self> {
        let params = CnsParams::new(mu, lambda, rho_bar, pressure.p_prime(rho_bar))?;
        Ok(Self { params, pressure })
    }

    pub fn params(&self) -> &CnsParams {
        &self.params
    }

    pub fn pressure(&self) -> PressureLaw {
        self.pressure
    }

    /// `f(ϱ) = p′(ϱ+ρ̄)/(ϱ+ρ̄) − p′(ρ̄)/ρ̄`
    pub fn f_coefficient(&self, rho: f64) -> f64 {
        let rb = self.params.rho_bar();
        self.pressure.p_prime(rho + rb) / (rho + rb) - self.pressure.p_prime(rb) / rb
    }

    /// `h(ϱ) = ϱ/(ϱ+ρ̄)`
    pub fn h_coefficient(&self, rho: f64) -> f64 {
        rho / (rho + self.params.rho_bar())
    }
}

impl Default for CnsModel {
    fn default() -> Self {
        Self::new(1.0, 0.0, 1.0, PressureLaw::default()).expect("default parameters are valid")
    }
}

/// Density perturbation and velocity, stored spectrally.
#[derive(Debug, Clone, PartialEq)]
pub struct CnsState {
    pub rho: SpectralField,
    pub u: [SpectralField; 3],
    pub model: CnsModel,
    pub time: f64,
}

impl CnsState {
    pub fn new(rho: SpectralField, u: [SpectralField; 3], model: CnsModel) -> Result<Self> {
        let grid = *rho.grid();
        if u.iter().any(|c| *c.grid() != grid) {
            return Err(Error::Contract("density and velocity live on different grids".into()));
        }
        let state = Self {
            rho: rho.to_spectral(),
            u: [u[0].to_spectral(), u[1].to_spectral(), u[2].to_spectral()],
            model,
            time: 0.0,
        };
        for f in state.fields() {
            if f.hermitian_defect() > 1e-10 {
                return Err(Error::InvalidParameter("state fields must be real-valued".into()));
            }
        }
        Ok(state)
    }

    pub fn zero(grid: GridSpec, model: CnsModel) -> Self {
        let z = SpectralField::zeros(grid, Space::Spectral);
        Self {
            rho: z.clone(),
            u: [z.clone(), z.clone(), z],
            model,
            time: 0.0,
        }
    }

    /// Random mean-zero perturbation on the shells `band[0] ≤ |m| ≤ band[1]`,
    /// scaled so that `‖(ϱ, u)‖_{H³} = amplitude`.
    pub fn random_perturbation(
        grid: GridSpec,
        model: CnsModel,
        band: [f64; 2],
        amplitude: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(amplitude >= 0.0) {
            return Err(Error::InvalidParameter(format!("amplitude {amplitude} must be >= 0")));
        }
        let spec = TrialSpec::new(seed, band, 0.0, 4);
        let rho = trial_field(&spec, &grid, 0)?;
        let u = [
            trial_field(&spec, &grid, 1)?,
            trial_field(&spec, &grid, 2)?,
            trial_field(&spec, &grid, 3)?,
        ];
        let mut state = Self::new(rho, u, model)?;
        let norm = state.h_norm(3);
        state.rho = state.rho.scaled(amplitude / norm);
        for c in &mut state.u {
            *c = c.scaled(amplitude / norm);
        }
        Ok(state)
    }

    pub fn grid(&self) -> &GridSpec {
        self.rho.grid()
    }

    pub fn fields(&self) -> [&SpectralField; 4] {
        [&self.rho, &self.u[0], &self.u[1], &self.u[2]]
    }

    /// `‖(ϱ, u)‖_{H^k} = (Σ_{j≤k} ‖∇^j ϱ‖² + ‖∇^j u‖²)^{1/2}`.
    pub fn h_norm(&self, k: u32) -> f64 {
        let g = *self.grid();
        let mut sum = 0.0;
        for idx in 0..g.len() {
            let k2 = 4.0 * PI * PI * g.xi_sq(idx);
            let a: f64 = self.fields().iter().map(|f| f.data()[idx].norm_sqr()).sum();
            if a == 0.0 {
                continue;
            }
            let mut w = 1.0;
            let mut acc = 0.0;
            for _ in 0..=k {
                acc += w;
                w *= k2;
            }
            sum += acc * a;
        }
        (sum * g.volume()).sqrt()
    }

    /// `∫ ϱ dx`
    pub fn mass(&self) -> f64 {
        self.rho.data()[0].re * self.grid().volume()
    }

    /// `min_x (ϱ + ρ̄)`
    pub fn min_density(&self) -> f64 {
        self.rho.real_values().into_iter().fold(f64::INFINITY, f64::min) + self.model.params.rho_bar()
    }

    pub fn max_speed(&self) -> f64 {
        let g = self.grid();
        let (u0, u1) = inverse_real_pair(self.u[0].data(), self.u[1].data(), g.n());
        let u2 = self.u[2].real_values();
        (0..g.len())
            .map(|i| (u0[i] * u0[i] + u1[i] * u1[i] + u2[i] * u2[i]).sqrt())
            .fold(0.0, f64::max)
    }

    fn arrays(&self) -> [Vec<Complex64>; 4] {
        [
            self.rho.data().to_vec(),
            self.u[0].data().to_vec(),
            self.u[1].data().to_vec(),
            self.u[2].data().to_vec(),
        ]
    }

    fn from_arrays(grid: GridSpec, arrays: [Vec<Complex64>; 4], model: CnsModel, time: f64) -> Self {
        let [r, a, b, c] = arrays;
        let mk = |d: Vec<Complex64>| SpectralField::from_data(grid, Space::Spectral, d).expect("grid-sized array");
        Self {
            rho: mk(r),
            u: [mk(a), mk(b), mk(c)],
            model,
            time,
        }
    }
}

/// Pointwise `h(ϱ)` and `f(ϱ)` in physical space.
pub fn nonlinear_coefficients(rho: &SpectralField, model: &CnsModel) -> Result<(SpectralField, SpectralField)> {
    let values = rho.real_values();
    check_floor(&values, model)?;
    let grid = *rho.grid();
    let h: Vec<f64> = values.iter().map(|&r| model.h_coefficient(r)).collect();
    let f: Vec<f64> = values.iter().map(|&r| model.f_coefficient(r)).collect();
    Ok((SpectralField::from_real(grid, &h)?, SpectralField::from_real(grid, &f)?))
}

fn check_floor(rho: &[f64], model: &CnsModel) -> Result<()> {
    let rb = model.params.rho_bar();
    let floor = 0.5 * rb;
    let mut cells = 0;
    let mut min = f64::INFINITY;
    for &r in rho {
        let d = r + rb;
        min = min.min(d);
        if !(d >= floor) {
            cells += 1;
        }
    }
    if cells > 0 {
        return Err(Error::DensityFloor {
            cells,
            min_density: min,
            floor,
        });
    }
    Ok(())
}

/// Angular wavenumbers `k = 2πξ` (zero on the Nyquist planes) and the 2/3 mask.
#[derive(Debug, Clone)]
struct Wavenumbers {
    k: [Vec<f64>; 3],
    k2: Vec<f64>,
    band: Vec<bool>,
}

impl Wavenumbers {
    fn new(grid: &GridSpec) -> Self {
        let n = grid.n() as i64;
        let len = grid.len();
        let mut k = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut k2 = vec![0.0; len];
        let mut band = vec![false; len];
        for idx in 0..len {
            let m = grid.modes_at(idx);
            let xi = grid.wavevector(idx);
            for a in 0..3 {
                if m[a] != -n / 2 {
                    k[a][idx] = 2.0 * PI * xi[a];
                }
            }
            k2[idx] = 4.0 * PI * PI * grid.xi_sq(idx);
            band[idx] = grid.in_dealias_band(idx);
        }
        Self { k, k2, band }
    }
}

/// Transforms a list of real-field spectra to physical space two at a time.
fn to_physical_many(spectra: &[Vec<Complex64>], n: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(spectra.len());
    let mut i = 0;
    while i < spectra.len() {
        if i + 1 < spectra.len() {
            let (a, b) = inverse_real_pair(&spectra[i], &spectra[i + 1], n);
            out.push(a);
            out.push(b);
            i += 2;
        } else {
            let mut z = spectra[i].clone();
            fft3(&mut z, n, Direction::Inverse);
            out.push(z.iter().map(|c| c.re).collect());
            i += 1;
        }
    }
    out
}

/// Right-hand-side evaluator bound to one grid and model.
#[derive(Debug, Clone)]
pub struct CnsOperator {
    grid: GridSpec,
    model: CnsModel,
    wn: Wavenumbers,
}

impl CnsOperator {
    pub fn new(grid: GridSpec, model: CnsModel) -> Self {
        Self {
            grid,
            wn: Wavenumbers::new(&grid),
            model,
        }
    }

    /// Spectrum of `μ̄Δu + (μ̄+λ̄)∇div u`, component `i`.
    fn lame(&self, u: [&[Complex64]; 3], i: usize) -> Vec<Complex64> {
        let p = self.model.params;
        let (mb, lb) = (p.mu_bar(), p.lambda_bar());
        let wn = &self.wn;
        (0..self.grid.len())
            .map(|idx| {
                let kdotu = wn.k[0][idx] * u[0][idx] + wn.k[1][idx] * u[1][idx] + wn.k[2][idx] * u[2][idx];
                -mb * wn.k2[idx] * u[i][idx] - (mb + lb) * wn.k[i][idx] * kdotu
            })
            .collect()
    }

    fn derivative(&self, f: &[Complex64], axis: usize) -> Vec<Complex64> {
        f.iter()
            .zip(&self.wn.k[axis])
            .map(|(c, k)| Complex64::new(-k * c.im, k * c.re))
            .collect()
    }

    /// Dealiased nonlinear tendencies `(N_ϱ, N_u)`.
    fn nonlinear(&self, s: &[Vec<Complex64>; 4]) -> Result<[Vec<Complex64>; 4]> {
        let n = self.grid.n();
        let len = self.grid.len();
        let u = [s[1].as_slice(), s[2].as_slice(), s[3].as_slice()];
        let mut spectra: Vec<Vec<Complex64>> = Vec::with_capacity(19);
        spectra.push(s[0].clone());
        for c in u {
            spectra.push(c.to_vec());
        }
        for a in 0..3 {
            spectra.push(self.derivative(&s[0], a));
        }
        for i in 0..3 {
            spectra.push(self.lame(u, i));
        }
        for i in 0..3 {
            for j in 0..3 {
                spectra.push(self.derivative(u[i], j));
            }
        }
        let phys = to_physical_many(&spectra, n);
        let rho = &phys[0];
        let vel = [&phys[1], &phys[2], &phys[3]];
        let grad_rho = [&phys[4], &phys[5], &phys[6]];
        let lame = [&phys[7], &phys[8], &phys[9]];
        let grad_u = |i: usize, j: usize| &phys[10 + 3 * i + j];

        check_floor(rho, &self.model)?;

        let mut flux = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        let mut mom = [vec![0.0; len], vec![0.0; len], vec![0.0; len]];
        for x in 0..len {
            let r = rho[x];
            let h = self.model.h_coefficient(r);
            let f = self.model.f_coefficient(r);
            for i in 0..3 {
                flux[i][x] = r * vel[i][x];
                let adv = vel[0][x] * grad_u(i, 0)[x] + vel[1][x] * grad_u(i, 1)[x] + vel[2][x] * grad_u(i, 2)[x];
                mom[i][x] = -adv - h * lame[i][x] - f * grad_rho[i][x];
            }
        }
        let (f0, f1) = forward_real_pair(&flux[0], &flux[1], n);
        let (f2, m0) = forward_real_pair(&flux[2], &mom[0], n);
        let (m1, m2) = forward_real_pair(&mom[1], &mom[2], n);

        let wn = &self.wn;
        let mut out = [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]];
        for idx in 0..len {
            if !wn.band[idx] {
                continue;
            }
            // −div(ϱu) = −i k·(ϱu)^
            let d = wn.k[0][idx] * f0[idx] + wn.k[1][idx] * f1[idx] + wn.k[2][idx] * f2[idx];
            out[0][idx] = Complex64::new(d.im, -d.re);
            out[1][idx] = m0[idx];
            out[2][idx] = m1[idx];
            out[3][idx] = m2[idx];
        }
        Ok(out)
    }

    /// Linear tendencies `(−ρ̄ div u, μ̄Δu + (μ̄+λ̄)∇div u − γρ̄∇ϱ)`.
    fn linear(&self, s: &[Vec<Complex64>; 4]) -> [Vec<Complex64>; 4] {
        let p = self.model.params;
        let rb = p.rho_bar();
        let grb = p.gamma() * rb;
        let u = [s[1].as_slice(), s[2].as_slice(), s[3].as_slice()];
        let wn = &self.wn;
        let len = self.grid.len();
        let mut out = [vec![ZERO; len], self.lame(u, 0), self.lame(u, 1), self.lame(u, 2)];
        let i = Complex64::new(0.0, 1.0);
        for idx in 0..len {
            let kdotu = wn.k[0][idx] * u[0][idx] + wn.k[1][idx] * u[1][idx] + wn.k[2][idx] * u[2][idx];
            out[0][idx] = -rb * i * kdotu;
            for a in 0..3 {
                out[a + 1][idx] -= grb * i * wn.k[a][idx] * s[0][idx];
            }
        }
        out
    }
}

/// Full tendencies `(∂ₜϱ, ∂ₜu)` of a state, spectrally.
pub fn rhs(state: &CnsState) -> Result<(SpectralField, [SpectralField; 3])> {
    let op = CnsOperator::new(*state.grid(), state.model);
    let s = state.arrays();
    let nl = op.nonlinear(&s)?;
    let lin = op.linear(&s);
    let sum: Vec<Vec<Complex64>> = (0..4)
        .map(|c| lin[c].iter().zip(&nl[c]).map(|(a, b)| a + b).collect())
        .collect();
    let g = *state.grid();
    let mk = |d: &Vec<Complex64>| SpectralField::from_data(g, Space::Spectral, d.clone()).expect("grid-sized");
    Ok((mk(&sum[0]), [mk(&sum[1]), mk(&sum[2]), mk(&sum[3])]))
}

/// Exact linear propagator over a fixed time step, one entry per mode.
#[derive(Debug, Clone)]
struct Propagator {
    acoustic: Vec<[[Complex64; 2]; 2]>,
    shear: Vec<f64>,
    dir: Vec<[f64; 3]>,
}

impl Propagator {
    fn new(grid: &GridSpec, params: &CnsParams, t: f64) -> Self {
        let len = grid.len();
        let mut acoustic = Vec::with_capacity(len);
        let mut shear = Vec::with_capacity(len);
        let mut dir = Vec::with_capacity(len);
        for idx in 0..len {
            let xi = grid.wavevector(idx);
            let r = grid.xi_sq(idx).sqrt();
            let kappa = 2.0 * PI * r;
            acoustic.push(acoustic_propagator(kappa, t, params));
            shear.push((-params.mu_bar() * kappa * kappa * t).exp());
            dir.push(if r > 0.0 { [xi[0] / r, xi[1] / r, xi[2] / r] } else { [0.0; 3] });
        }
        Self { acoustic, shear, dir }
    }

    fn apply(&self, s: &[Vec<Complex64>; 4]) -> [Vec<Complex64>; 4] {
        let len = s[0].len();
        let mut out = [vec![ZERO; len], vec![ZERO; len], vec![ZERO; len], vec![ZERO; len]];
        for idx in 0..len {
            let mode = [s[0][idx], s[1][idx], s[2][idx], s[3][idx]];
            let new = if self.dir[idx] == [0.0; 3] {
                mode
            } else {
                apply_mode_propagator(self.dir[idx], &self.acoustic[idx], self.shear[idx], mode)
            };
            for c in 0..4 {
                out[c][idx] = new[c];
            }
        }
        out
    }
}

fn axpy(x: &[Vec<Complex64>; 4], a: f64, y: &[Vec<Complex64>; 4]) -> [Vec<Complex64>; 4] {
    let f = |c: usize| x[c].iter().zip(&y[c]).map(|(p, q)| p + a * q).collect();
    [f(0), f(1), f(2), f(3)]
}

/// Lawson–RK4 stepper with a fixed time step.
#[derive(Debug, Clone)]
pub struct Stepper {
    op: CnsOperator,
    dt: f64,
    half: Propagator,
    full: Propagator,
}

impl Stepper {
    pub fn new(grid: GridSpec, model: CnsModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("time step {dt} must be positive")));
        }
        Ok(Self {
            op: CnsOperator::new(grid, model),
            dt,
            half: Propagator::new(&grid, model.params(), 0.5 * dt),
            full: Propagator::new(&grid, model.params(), dt),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &CnsState) -> Result<CnsState> {
        if *state.grid() != self.op.grid || state.model != self.op.model {
            return Err(Error::Contract("state does not match the stepper's grid and model".into()));
        }
        let h = self.dt;
        let s = state.arrays();
        let k1 = self.op.nonlinear(&s)?;
        let k2 = self.op.nonlinear(&self.half.apply(&axpy(&s, 0.5 * h, &k1)))?;
        let ps_half = self.half.apply(&s);
        let k3 = self.op.nonlinear(&axpy(&ps_half, 0.5 * h, &k2))?;
        let ps_full = self.full.apply(&s);
        let k4 = self.op.nonlinear(&axpy(&ps_full, h, &self.half.apply(&k3)))?;

        let pk1 = self.full.apply(&k1);
        let pk23 = self.half.apply(&axpy(&k2, 1.0, &k3));
        let mut next = axpy(&ps_full, h / 6.0, &pk1);
        next = axpy(&next, h / 3.0, &pk23);
        next = axpy(&next, h / 6.0, &k4);
        if next.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite {
                last_valid_time: state.time,
            });
        }
        Ok(CnsState::from_arrays(self.op.grid, next, state.model, state.time + h))
    }
}

/// One Lawson–RK4 step of size `dt`.
pub fn step(state: &CnsState, dt: f64) -> Result<CnsState> {
    Stepper::new(*state.grid(), state.model, dt)?.step(state)
}

/// `cfl · dx / (max|u| + √p′(ρ̄))`.
pub fn cfl_dt(state: &CnsState, cfl: f64) -> f64 {
    cfl * state.grid().dx() / (state.max_speed() + state.model.params.sound_speed())
}

/// Energy functional `E_ℓ^m` with its pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub ell: u32,
    pub m: u32,
    pub beta: f64,
    /// `sobolev_sum + beta · cross`
    pub e: f64,
    /// `Σ_{ℓ+1≤k≤m} ‖∇^kϱ‖² + Σ_{ℓ+1≤k≤m+1} ‖∇^ku‖²`
    pub d: f64,
    /// `Σ_{ℓ≤k≤m−1} ∫ ∇^k u · ∇∇^k ϱ dx`
    pub cross: f64,
    /// `Σ_{ℓ≤k≤m} (γ‖∇^kϱ‖² + ‖∇^ku‖²)`
    pub sobolev_sum: f64,
}

/// Evaluates `E_ℓ^m` spectrally with derivative symbols `2πiξ`.
pub fn energy_functional(state: &CnsState, ell: u32, m: u32, beta: f64) -> Result<EnergyReport> {
    if ell >= m {
        return Err(Error::InvalidParameter(format!("need 0 <= ℓ <= m - 1 (got ℓ = {ell}, m = {m})")));
    }
    if !(beta > 0.0 && beta <= 0.5) {
        return Err(Error::InvalidParameter(format!("cross weight beta = {beta} must lie in (0, 1/2]")));
    }
    let g = *state.grid();
    let gamma = state.model.params.gamma();
    let (mut sob, mut cross, mut diss) = (0.0, 0.0, 0.0);
    let r = state.rho.data();
    let u = [state.u[0].data(), state.u[1].data(), state.u[2].data()];
    for idx in 0..g.len() {
        let rr = r[idx].norm_sqr();
        let uu = u[0][idx].norm_sqr() + u[1][idx].norm_sqr() + u[2][idx].norm_sqr();
        if rr == 0.0 && uu == 0.0 {
            continue;
        }
        let xi = g.wavevector(idx);
        let k = [2.0 * PI * xi[0], 2.0 * PI * xi[1], 2.0 * PI * xi[2]];
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        // Re(û · conj(ik ϱ̂)) = Im(conj(ϱ̂) k·û)
        let kdotu = k[0] * u[0][idx] + k[1] * u[1][idx] + k[2] * u[2][idx];
        let x = (r[idx].conj() * kdotu).im;
        let mut w = k2.powi(ell as i32);
        for level in ell..=m + 1 {
            if level <= m {
                sob += w * (gamma * rr + uu);
            }
            if level < m {
                cross += w * x;
            }
            if level > ell {
                if level <= m {
                    diss += w * rr;
                }
                diss += w * uu;
            }
            w *= k2;
        }
    }
    let v = g.volume();
    let (sob, cross, diss) = (sob * v, cross * v, diss * v);
    Ok(EnergyReport {
        ell,
        m,
        beta,
        e: sob + beta * cross,
        d: diss,
        cross,
        sobolev_sum: sob,
    })
}

/// `(‖Λ^{-s}ϱ‖, ‖Λ^{-s}u‖)` for `s ∈ (0, 3/2)`; the zero mode is excluded.
pub fn negative_norm_pair(state: &CnsState, s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < 1.5) {
        return Err(Error::InvalidParameter(format!(
            "negative index s = {s} must lie in (0, 3/2); the constraint s < 3/2 keeps Λ^{{-s}} of L¹-type nonlinearities in L²"
        )));
    }
    let r = sobolev_norm_sq(&state.rho, -s).sqrt();
    let u = state.u.iter().map(|c| sobolev_norm_sq(c, -s)).sum::<f64>().sqrt();
    Ok((r, u))
}

/// Relative spectral distance `‖a − b‖ / ‖b‖` over all four components.
pub fn state_distance(a: &CnsState, b: &CnsState) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (fa, fb) in a.fields().iter().zip(b.fields()) {
        for (x, y) in fa.data().iter().zip(fb.data()) {
            num += (x - y).norm_sqr();
            den += y.norm_sqr();
        }
    }
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

/// Relative deviation of one step from the exact linear evolution.
pub fn linear_limit_defect(state: &CnsState, dt: f64) -> Result<f64> {
    let stepped = step(state, dt)?;
    let prop = Propagator::new(state.grid(), state.model.params(), dt);
    let exact = CnsState::from_arrays(*state.grid(), prop.apply(&state.arrays()), state.model, state.time + dt);
    Ok(state_distance(&stepped, &exact))
}

/// Observed order `log₂(‖u_h − u_{h/2}‖ / ‖u_{h/2} − u_{h/4}‖)` at time `t_final`.
pub fn richardson_order(state: &CnsState, t_final: f64, steps: usize) -> Result<f64> {
    if steps == 0 || !(t_final > 0.0) {
        return Err(Error::InvalidParameter("need t_final > 0 and at least one step".into()));
    }
    let run = |k: usize| -> Result<CnsState> {
        let stepper = Stepper::new(*state.grid(), state.model, t_final / k as f64)?;
        let mut s = state.clone();
        for _ in 0..k {
            s = stepper.step(&s)?;
        }
        Ok(s)
    };
    let a = run(steps)?;
    let b = run(2 * steps)?;
    let c = run(4 * steps)?;
    let d1 = state_distance(&a, &b);
    let d2 = state_distance(&b, &c);
    Ok((d1 / d2).log2())
}

/// Initial data of a run.
#[derive(Debug, Clone)]
pub enum CnsInitial {
    Equilibrium,
    Random { band: [f64; 2], amplitude: f64, seed: u64 },
    State(Box<CnsState>),
}

#[derive(Debug, Clone)]
pub struct CnsExperimentSpec {
    pub grid: GridSpec,
    pub model: CnsModel,
    pub initial: CnsInitial,
    pub t_final: f64,
    pub cfl: f64,
    /// Overrides the CFL step when set.
    pub dt: Option<f64>,
    /// `(ℓ, m)` pairs of monitored energy functionals.
    pub energy: Vec<(u32, u32)>,
    pub beta: f64,
    pub neg_s: Vec<f64>,
    /// Orders of monitored `Ḣ^ℓ` norms of `(ϱ, u)`.
    pub sobolev_ells: Vec<f64>,
    pub sample_every: usize,
    /// Allowed per-step increase of `E`, relative to `E(0)`.
    pub monotone_tol: f64,
    /// Largest admissible `‖(ϱ₀, u₀)‖_{H³} / ρ̄`.
    pub delta0: f64,
}

impl CnsExperimentSpec {
    pub fn new(grid: GridSpec, initial: CnsInitial, t_final: f64) -> Self {
        Self {
            grid,
            model: CnsModel::default(),
            initial,
            t_final,
            cfl: 0.5,
            dt: None,
            energy: vec![(0, 3), (1, 3)],
            beta: 0.1,
            neg_s: vec![0.5, 1.0],
            sobolev_ells: vec![0.0, 1.0],
            sample_every: 1,
            monotone_tol: 1e-8,
            delta0: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidParameter(format!("final time {} must be positive", self.t_final)));
        }
        if !(self.cfl > 0.0) {
            return Err(Error::InvalidParameter(format!("cfl {} must be positive", self.cfl)));
        }
        if !(self.beta > 0.0 && self.beta <= 0.5) {
            return Err(Error::InvalidParameter(format!("beta = {} must lie in (0, 1/2]", self.beta)));
        }
        for &(l, m) in &self.energy {
            if l >= m {
                return Err(Error::InvalidParameter(format!("energy pair (ℓ = {l}, m = {m}) needs ℓ < m")));
            }
        }
        for &s in &self.neg_s {
            if !(s > 0.0 && s < 1.5) {
                return Err(Error::InvalidParameter(format!(
                    "negative index s = {s} must lie in (0, 3/2)"
                )));
            }
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidParameter("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    fn initial_state(&self) -> Result<CnsState> {
        let state = match &self.initial {
            CnsInitial::Equilibrium => CnsState::zero(self.grid, self.model),
            CnsInitial::Random { band, amplitude, seed } => {
                CnsState::random_perturbation(self.grid, self.model, *band, *amplitude, *seed)?
            }
            CnsInitial::State(s) => {
                if *s.grid() != self.grid || s.model != self.model {
                    return Err(Error::Contract("initial state does not match grid and model".into()));
                }
                (**s).clone()
            }
        };
        let size = state.h_norm(3);
        let limit = self.delta0 * self.model.params.rho_bar();
        if size > limit {
            return Err(Error::InvalidParameter(format!(
                "initial H³ size {size:.3e} exceeds the smallness threshold {limit:.3e}"
            )));
        }
        Ok(state)
    }
}

/// A notable occurrence during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct CnsEvent {
    pub t: f64,
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct CnsRun {
    pub trajectories: Vec<NormTrajectory>,
    pub events: Vec<CnsEvent>,
    pub claims: Vec<ClaimResult>,
    pub dt: f64,
    pub steps: usize,
    pub final_state: CnsState,
    /// Fatal error that stopped the run early.
    pub aborted: Option<Error>,
}

impl CnsRun {
    pub fn trajectory(&self, quantity: &str) -> Option<&NormTrajectory> {
        self.trajectories.iter().find(|t| t.quantity == quantity)
    }
}

pub fn energy_quantity(ell: u32, m: u32) -> String {
    format!("energy[ell={ell},m={m}]")
}

pub fn dissipation_quantity(ell: u32, m: u32) -> String {
    format!("dissipation[ell={ell},m={m}]")
}

pub fn cns_negative_quantity(s: f64) -> String {
    format!("neg_norm[s={s}]")
}

pub fn hdot_quantity(ell: f64) -> String {
    format!("hdot_norm[ell={ell}]")
}

fn ratio(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}

struct Monitor {
    label: String,
    e0: Vec<f64>,
    e_prev: Vec<f64>,
    max_increase: Vec<f64>,
    max_bracket: Vec<f64>,
    neg0: Vec<f64>,
    max_neg_ratio: Vec<f64>,
    mass0: f64,
    max_mass_drift: f64,
    min_density: f64,
    traj: Vec<NormTrajectory>,
}

impl Monitor {
    fn new(spec: &CnsExperimentSpec, s0: &CnsState, label: &str) -> Result<Self> {
        let mut traj = Vec::new();
        for &(l, m) in &spec.energy {
            traj.push(NormTrajectory::new(energy_quantity(l, m), label));
            traj.push(NormTrajectory::new(dissipation_quantity(l, m), label));
        }
        for &s in &spec.neg_s {
            traj.push(NormTrajectory::new(cns_negative_quantity(s), label));
        }
        for &l in &spec.sobolev_ells {
            traj.push(NormTrajectory::new(hdot_quantity(l), label));
        }
        traj.push(NormTrajectory::new("mass", label));
        traj.push(NormTrajectory::new("min_density", label));
        let mut e0 = Vec::new();
        for &(l, m) in &spec.energy {
            e0.push(energy_functional(s0, l, m, spec.beta)?.e);
        }
        let mut neg0 = Vec::new();
        for &s in &spec.neg_s {
            let (a, b) = negative_norm_pair(s0, s)?;
            neg0.push(a + b);
        }
        let k = spec.energy.len();
        let n = spec.neg_s.len();
        Ok(Self {
            label: label.to_string(),
            e_prev: e0.clone(),
            e0,
            max_increase: vec![0.0; k],
            max_bracket: vec![0.0; k],
            neg0,
            max_neg_ratio: vec![0.0; n],
            mass0: s0.mass(),
            max_mass_drift: 0.0,
            min_density: f64::INFINITY,
            traj,
        })
    }

    fn observe(
        &mut self,
        spec: &CnsExperimentSpec,
        state: &CnsState,
        sample: bool,
        events: &mut Vec<CnsEvent>,
    ) -> Result<()> {
        let t = state.time;
        let mut ti = 0;
        let mut values = Vec::with_capacity(self.traj.len());
        for (i, &(l, m)) in spec.energy.iter().enumerate() {
            let rep = energy_functional(state, l, m, spec.beta)?;
            let inc = rep.e - self.e_prev[i];
            let rel = ratio(inc.max(0.0), self.e0[i]);
            self.max_increase[i] = self.max_increase[i].max(rel);
            if inc > 0.0 && rel > spec.monotone_tol {
                events.push(CnsEvent {
                    t,
                    kind: "energy_increase".into(),
                    detail: format!("E[ell={l},m={m}] rose by {rel:.3e} E(0) in one step"),
                });
            }
            self.e_prev[i] = rep.e;
            let bracket = ratio((rep.e - rep.sobolev_sum).abs(), rep.sobolev_sum);
            self.max_bracket[i] = self.max_bracket[i].max(bracket);
            values.push(rep.e);
            values.push(rep.d);
        }
        for (i, &s) in spec.neg_s.iter().enumerate() {
            let (a, b) = negative_norm_pair(state, s)?;
            self.max_neg_ratio[i] = self.max_neg_ratio[i].max(ratio(a + b, self.neg0[i]));
            values.push(a + b);
        }
        for &l in &spec.sobolev_ells {
            let v: f64 = state.fields().iter().map(|f| sobolev_norm_sq(f, l)).sum();
            values.push(v.sqrt());
        }
        let mass = state.mass();
        self.max_mass_drift = self.max_mass_drift.max((mass - self.mass0).abs());
        values.push(mass);
        let dmin = state.min_density();
        self.min_density = self.min_density.min(dmin);
        values.push(dmin);
        if sample {
            for (traj, v) in self.traj.iter_mut().zip(values) {
                traj.push(t, v, SampleFlag::Ok)?;
                ti += 1;
            }
        }
        debug_assert!(!sample || ti == self.traj.len());
        Ok(())
    }

    fn claims(&self, spec: &CnsExperimentSpec, aborted: &Option<Error>) -> Vec<ClaimResult> {
        let mut claims = Vec::new();
        for (i, &(l, m)) in spec.energy.iter().enumerate() {
            claims.push(ClaimResult::upper_bound(
                format!("energy_nonincreasing[ell={l},m={m}]"),
                "energy functional is a Lyapunov function (largest per-step rise / E(0))",
                0.0,
                self.max_increase[i],
                spec.monotone_tol,
            ));
            claims.push(ClaimResult::upper_bound(
                format!("energy_equivalence[ell={l},m={m}]"),
                "|E - Sobolev sum| <= beta * Sobolev sum",
                spec.beta,
                self.max_bracket[i],
                0.0,
            ));
        }
        claims.push(ClaimResult::upper_bound(
            "mass_conserved",
            "∫ϱ dx is constant",
            0.0,
            self.max_mass_drift,
            1e-12,
        ));
        for (i, &s) in spec.neg_s.iter().enumerate() {
            claims.push(ClaimResult::upper_bound(
                format!("neg_norm_bounded[s={s}]"),
                "‖Λ^{-s}ϱ‖ + ‖Λ^{-s}u‖ stays within twice its initial value",
                2.0,
                self.max_neg_ratio[i],
                0.0,
            ));
        }
        let rb = spec.model.params.rho_bar();
        let floor_ok = aborted.is_none() && self.min_density >= 0.5 * rb;
        claims.push(ClaimResult::new(
            "density_floor",
            "min (ϱ + ρ̄) stays at or above ρ̄/2",
            "lower_bound",
            0.5 * rb,
            self.min_density,
            0.0,
            Verdict::from_bool(floor_ok),
        ));
        claims.push(ClaimResult::new(
            "run_completed",
            "integration reached the final time",
            "exact",
            1.0,
            if aborted.is_none() { 1.0 } else { 0.0 },
            0.0,
            Verdict::from_bool(aborted.is_none()),
        ));
        let _ = &self.label;
        claims
    }
}

/// Integrates to `t_final` with a fixed step, monitoring the energy
/// functionals, negative norms, mass and density floor after every step.
pub fn run_cns_experiment(spec: &CnsExperimentSpec, label: &str) -> Result<CnsRun> {
    spec.validate()?;
    let s0 = spec.initial_state()?;
    let dt_target = spec.dt.unwrap_or_else(|| cfl_dt(&s0, spec.cfl));
    let steps = (spec.t_final / dt_target).ceil().max(1.0) as usize;
    let dt = spec.t_final / steps as f64;
    let stepper = Stepper::new(spec.grid, spec.model, dt)?;

    let mut events = Vec::new();
    let mut monitor = Monitor::new(spec, &s0, label)?;
    monitor.observe(spec, &s0, true, &mut events)?;
    let mut state = s0;
    let mut aborted = None;
    let mut done = 0;
    for n in 1..=steps {
        match stepper.step(&state) {
            Ok(next) => {
                state = next;
                done = n;
                let sample = n % spec.sample_every == 0 || n == steps;
                monitor.observe(spec, &state, sample, &mut events)?;
            }
            Err(e) => {
                events.push(CnsEvent {
                    t: state.time,
                    kind: "fatal".into(),
                    detail: e.to_string(),
                });
                aborted = Some(e);
                break;
            }
        }
    }
    let claims = monitor.claims(spec, &aborted);
    Ok(CnsRun {
        trajectories: monitor.traj,
        events,
        claims,
        dt,
        steps: done,
        final_state: state,
        aborted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid() -> GridSpec {
        GridSpec::new(16, 2.0 * PI).unwrap()
    }

    #[test]
    fn coefficients_at_equilibrium_and_double_density() {
        let model = CnsModel::default();
        let z = SpectralField::zeros(grid(), Space::Physical);
        let (h, f) = nonlinear_coefficients(&z, &model).unwrap();
        assert!(h.real_values().iter().all(|v| *v == 0.0));
        assert!(f.real_values().iter().all(|v| *v == 0.0));
        let one = SpectralField::from_real(grid(), &vec![1.0; grid().len()]).unwrap();
        let (h, _) = nonlinear_coefficients(&one, &model).unwrap();
        assert!(h.real_values().iter().all(|v| (*v - 0.5).abs() < 1e-14));
    }

    #[test]
    fn density_floor_violation_counts_cells() {
        let g = grid();
        let mut vals = vec![0.0; g.len()];
        vals[3] = -0.6;
        vals[7] = -0.9;
        let rho = SpectralField::from_real(g, &vals).unwrap();
        match nonlinear_coefficients(&rho, &CnsModel::default()) {
            Err(Error::DensityFloor { cells, .. }) => assert_eq!(cells, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_state_is_stationary() {
        let s = CnsState::zero(grid(), CnsModel::default());
        let (r, u) = rhs(&s).unwrap();
        assert!(r.data().iter().chain(u.iter().flat_map(|c| c.data())).all(|z| z.norm() == 0.0));
        let next = step(&s, 0.1).unwrap();
        assert_eq!(state_distance(&next, &s), 0.0);
        let rep = energy_functional(&s, 0, 3, 0.5).unwrap();
        assert_eq!((rep.e, rep.d), (0.0, 0.0));
        assert_eq!(negative_norm_pair(&s, 0.5).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn energy_single_density_mode() {
        let g = grid();
        let model = CnsModel::default();
        let a = 1e-3;
        let rho = SpectralField::plane_wave(g, [1, 0, 0], Complex64::new(a, 0.0))
            .unwrap()
            .add(&SpectralField::plane_wave(g, [-1, 0, 0], Complex64::new(a, 0.0)).unwrap())
            .unwrap();
        let z = SpectralField::zeros(g, Space::Spectral);
        let s = CnsState::new(rho, [z.clone(), z.clone(), z], model).unwrap();
        let rep = energy_functional(&s, 0, 1, 0.1).unwrap();
        let gamma = model.params().gamma();
        let k2 = 4.0 * PI * PI / (g.length() * g.length());
        let v = g.volume();
        // two coefficients of size a
        assert_relative_eq!(rep.e, gamma * 2.0 * a * a * v * (1.0 + k2), max_relative = 1e-13);
        assert_eq!(rep.cross, 0.0);
    }

    #[test]
    fn parameter_checks() {
        let s = CnsState::zero(grid(), CnsModel::default());
        assert!(energy_functional(&s, 1, 1, 0.1).is_err());
        assert!(energy_functional(&s, 0, 1, 0.6).is_err());
        assert!(negative_norm_pair(&s, 1.5).is_err());
        assert!(negative_norm_pair(&s, 0.0).is_err());
    }

    #[test]
    fn oversize_initial_data_rejected() {
        let spec = CnsExperimentSpec::new(
            grid(),
            CnsInitial::Random {
                band: [1.0, 2.0],
                amplitude: 0.2,
                seed: 1,
            },
            1.0,
        );
        assert!(run_cns_experiment(&spec, "x").is_err());
    }
}
