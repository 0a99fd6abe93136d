//! Periodic-box spectral fields.
//!
//! A field on the box `[0, L)³` sampled at `n³` points is stored either as
//! physical values or as Fourier-series coefficients
//!
//! ```text
//! f(x) = Σ_ξ c_ξ e^{2πi x·ξ},   ξ ∈ (1/L){-n/2, …, n/2-1}³,
//! ```
//!
//! so that `‖f‖²_{L²(box)} = L³ Σ |c_ξ|²`. The multiplier `Λ^s` has symbol
//! `|ξ|^s` and the Laplacian has symbol `-4π²|ξ|²`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    length: f64,
}

impl GridSpec {
    /// `n` points per axis (a power of two, at least 8) on a box of side `length`.
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size n = {n} must be a power of two >= 8"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "box length L = {length} must be positive and finite"
            )));
        }
        Ok(Self { n, length })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Total number of grid points, `n³`.
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(3)
    }

    /// Signed integer mode number of array index `i` along one axis.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Array index of the signed mode number `m` (must satisfy `-n/2 <= m < n/2`).
    #[inline]
    pub fn index_of_mode(&self, m: i64) -> usize {
        m.rem_euclid(self.n as i64) as usize
    }

    #[inline]
    pub fn flat(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn unflat(&self, idx: usize) -> (usize, usize, usize) {
        let n = self.n;
        (idx / (n * n), (idx / n) % n, idx % n)
    }

    /// Integer mode triple at a flat index.
    #[inline]
    pub fn modes_at(&self, idx: usize) -> [i64; 3] {
        let (i, j, k) = self.unflat(idx);
        [self.mode(i), self.mode(j), self.mode(k)]
    }

    /// Frequency vector `ξ = m / L` at a flat index.
    #[inline]
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let m = self.modes_at(idx);
        let inv = 1.0 / self.length;
        [m[0] as f64 * inv, m[1] as f64 * inv, m[2] as f64 * inv]
    }

    /// `|ξ|²` at a flat index.
    #[inline]
    pub fn xi_sq(&self, idx: usize) -> f64 {
        let m = self.modes_at(idx);
        ((m[0] * m[0] + m[1] * m[1] + m[2] * m[2]) as f64) / (self.length * self.length)
    }

    /// Physical coordinates of grid point `idx`.
    pub fn position(&self, idx: usize) -> [f64; 3] {
        let (i, j, k) = self.unflat(idx);
        let dx = self.dx();
        [i as f64 * dx, j as f64 * dx, k as f64 * dx]
    }

    /// Table of `|ξ|²` over the whole coefficient array.
    pub fn xi_sq_table(&self) -> Vec<f64> {
        (0..self.len()).map(|idx| self.xi_sq(idx)).collect()
    }

    /// True when every component of the mode lies inside the 2/3 band,
    /// `|m_j| <= n/3`.
    #[inline]
    pub fn in_dealias_band(&self, idx: usize) -> bool {
        let cut = (self.n / 3) as i64;
        self.modes_at(idx).iter().all(|m| m.abs() <= cut)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space {
    Physical,
    Spectral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// physical → spectral
    Forward,
    /// spectral → physical
    Inverse,
}

/// A scalar field on a periodic grid, in physical or spectral representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: GridSpec,
    space: Space,
    data: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: GridSpec, space: Space) -> Self {
        Self {
            grid,
            space,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_data(grid: GridSpec, space: Space, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::Contract(format!(
                "array of length {} does not match grid with {} points",
                data.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, space, data })
    }

    pub fn from_real(grid: GridSpec, values: &[f64]) -> Result<Self> {
        Self::from_data(
            grid,
            Space::Physical,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    /// Samples `f` at the grid points.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64,
    {
        let data = (0..grid.len()).map(|idx| f(grid.position(idx))).collect();
        Self {
            grid,
            space: Space::Physical,
            data,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn transform(&self, direction: Direction) -> Result<Self> {
        transform(self, direction)
    }

    /// Spectral representation, transforming if needed.
    pub fn to_spectral(&self) -> Self {
        match self.space {
            Space::Spectral => self.clone(),
            Space::Physical => {
                let mut data = self.data.clone();
                fft3(&mut data, self.grid.n, Direction::Forward);
                Self {
                    grid: self.grid,
                    space: Space::Spectral,
                    data,
                }
            }
        }
    }

    /// Physical representation, transforming if needed.
    pub fn to_physical(&self) -> Self {
        match self.space {
            Space::Physical => self.clone(),
            Space::Spectral => {
                let mut data = self.data.clone();
                fft3(&mut data, self.grid.n, Direction::Inverse);
                Self {
                    grid: self.grid,
                    space: Space::Physical,
                    data,
                }
            }
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            grid: self.grid,
            space: self.space,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    /// Pointwise sum of two fields in the same representation.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid,
            space: self.space,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }

    pub(crate) fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Contract("fields live on different grids".into()));
        }
        if self.space != other.space {
            return Err(Error::Contract(
                "fields are in different representations".into(),
            ));
        }
        Ok(())
    }

    /// The `ξ = 0` coefficient (the box average).
    pub fn mean(&self) -> Complex64 {
        self.to_spectral_ref(|d| d[0])
    }

    /// Copy with the mean removed.
    pub fn mean_free(&self) -> Self {
        let mut s = self.to_spectral();
        s.data[0] = Complex64::new(0.0, 0.0);
        s
    }

    fn to_spectral_ref<T>(&self, f: impl FnOnce(&[Complex64]) -> T) -> T {
        match self.space {
            Space::Spectral => f(&self.data),
            Space::Physical => f(&self.to_spectral().data),
        }
    }

    /// Largest `|c_ξ - conj(c_{-ξ})|`, relative to the largest coefficient.
    /// Zero for fields that are real in physical space.
    pub fn hermitian_defect(&self) -> f64 {
        let s = self.to_spectral();
        let g = self.grid;
        let scale = s.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for idx in 0..g.len() {
            let m = g.modes_at(idx);
            let neg = g.flat(
                g.index_of_mode(-m[0]),
                g.index_of_mode(-m[1]),
                g.index_of_mode(-m[2]),
            );
            worst = worst.max((s.data[idx] - s.data[neg].conj()).norm());
        }
        worst / scale
    }

    /// Largest imaginary part in physical space relative to the largest magnitude.
    pub fn imag_ratio(&self) -> f64 {
        let p = self.to_physical();
        let scale = p.data.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        p.data.iter().map(|z| z.im.abs()).fold(0.0, f64::max) / scale
    }

    /// Real parts of the physical values.
    pub fn real_values(&self) -> Vec<f64> {
        self.to_physical().data.iter().map(|z| z.re).collect()
    }

    /// Single Fourier mode `e^{2πi m·x/L}` times `amplitude`.
    pub fn plane_wave(grid: GridSpec, m: [i64; 3], amplitude: Complex64) -> Result<Self> {
        let half = (grid.n / 2) as i64;
        if m.iter().any(|&c| c < -half || c >= half) {
            return Err(Error::InvalidParameter(format!(
                "mode {m:?} is not representable on an n = {} grid",
                grid.n
            )));
        }
        let mut f = Self::zeros(grid, Space::Spectral);
        let idx = grid.flat(
            grid.index_of_mode(m[0]),
            grid.index_of_mode(m[1]),
            grid.index_of_mode(m[2]),
        );
        f.data[idx] = amplitude;
        Ok(f)
    }

    /// Mutable access for in-crate builders.
    pub(crate) fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }
}

/// Discrete Fourier transform with the `e^{2πi x·ξ}` kernel convention.
///
/// The forward direction produces Fourier-series coefficients (the raw DFT
/// divided by `n³`); the inverse direction sums the series at the grid points.
pub fn transform(f: &SpectralField, direction: Direction) -> Result<SpectralField> {
    let expected = match direction {
        Direction::Forward => Space::Physical,
        Direction::Inverse => Space::Spectral,
    };
    if f.space != expected {
        return Err(Error::Contract(format!(
            "{direction:?} transform requires a {expected:?} field, got {:?}",
            f.space
        )));
    }
    Ok(match direction {
        Direction::Forward => f.to_spectral(),
        Direction::Inverse => f.to_physical(),
    })
}

type PlanCache = Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<PlanCache> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, inverse))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if inverse {
                planner.plan_fft_inverse(n)
            } else {
                planner.plan_fft_forward(n)
            }
        })
        .clone()
}

/// In-place 3D transform of an `n³` array in (i, j, k) row-major order.
pub(crate) fn fft3(data: &mut [Complex64], n: usize, direction: Direction) {
    let inverse = direction == Direction::Inverse;
    let fft = plan(n, inverse);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let nn = n * n;

    // k axis: contiguous lines
    fft.process_with_scratch(data, &mut scratch);

    // j axis: transpose each i-slab
    let mut buf = vec![Complex64::new(0.0, 0.0); nn];
    for i in 0..n {
        let slab = &mut data[i * nn..(i + 1) * nn];
        for j in 0..n {
            for k in 0..n {
                buf[k * n + j] = slab[j * n + k];
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for j in 0..n {
            for k in 0..n {
                slab[j * n + k] = buf[k * n + j];
            }
        }
    }

    // i axis: gather (k, i) planes for each j
    for j in 0..n {
        for i in 0..n {
            let base = i * nn + j * n;
            for k in 0..n {
                buf[k * n + i] = data[base + k];
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        for i in 0..n {
            let base = i * nn + j * n;
            for k in 0..n {
                data[base + k] = buf[k * n + i];
            }
        }
    }

    if !inverse {
        let scale = 1.0 / (nn * n) as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}

/// Flat index of `-ξ` for the mode stored at `idx`.
#[inline]
pub(crate) fn neg_index(n: usize, idx: usize) -> usize {
    let nn = n * n;
    let (i, j, k) = (idx / nn, (idx / n) % n, idx % n);
    ((n - i) % n) * nn + ((n - j) % n) * n + (n - k) % n
}

/// Physical values of two real fields from their coefficients, sharing one
/// inverse transform of `a + i b`.
pub(crate) fn inverse_real_pair(a: &[Complex64], b: &[Complex64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let i = Complex64::new(0.0, 1.0);
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(x, y)| x + i * y).collect();
    fft3(&mut z, n, Direction::Inverse);
    // a vanishing partner would otherwise pick up cross-talk roundoff
    let part = |c: &[Complex64], get: fn(&Complex64) -> f64| -> Vec<f64> {
        if c.iter().all(|x| *x == Complex64::new(0.0, 0.0)) {
            vec![0.0; z.len()]
        } else {
            z.iter().map(get).collect()
        }
    };
    (part(a, |c| c.re), part(b, |c| c.im))
}

/// Coefficients of two real fields sharing one forward transform of `a + i b`.
pub(crate) fn forward_real_pair(a: &[f64], b: &[f64], n: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let mut z: Vec<Complex64> = a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect();
    fft3(&mut z, n, Direction::Forward);
    let mut fa = vec![Complex64::new(0.0, 0.0); z.len()];
    let mut fb = vec![Complex64::new(0.0, 0.0); z.len()];
    for idx in 0..z.len() {
        let zc = z[neg_index(n, idx)].conj();
        fa[idx] = 0.5 * (z[idx] + zc);
        // (z - conj z(-ξ)) / 2i
        let d = z[idx] - zc;
        fb[idx] = Complex64::new(0.5 * d.im, -0.5 * d.re);
    }
    (fa, fb)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Symbol {
    /// `|ξ|^s`
    LambdaPower(f64),
    /// `e^{-4π²|ξ|² t}`
    HeatSemigroup(f64),
    /// `-4π²|ξ|²`
    Laplacian,
    /// `2πi ξ_axis`, the partial derivative along one axis.
    Derivative(usize),
    /// Leray projection onto divergence-free vector fields.
    ProjectionSolenoidal,
    /// Projection onto gradient fields, `ξ ξᵀ / |ξ|²`.
    ProjectionGradient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroModeRule {
    Annihilate,
    /// Evaluate the symbol at `ξ = 0` (with `0⁰ = 1`).
    Preserve,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultiplierSpec {
    symbol: Symbol,
    zero_mode: ZeroModeRule,
}

impl MultiplierSpec {
    pub fn new(symbol: Symbol, zero_mode: ZeroModeRule) -> Result<Self> {
        match symbol {
            Symbol::LambdaPower(s) if !s.is_finite() => Err(Error::InvalidParameter(format!(
                "lambda power s = {s} must be finite"
            ))),
            Symbol::LambdaPower(s) if s < 0.0 && zero_mode == ZeroModeRule::Preserve => {
                Err(Error::InvalidParameter(format!(
                    "Λ^{s} with s < 0 is singular at ξ = 0; the zero mode must be annihilated"
                )))
            }
            Symbol::HeatSemigroup(t) if !(t >= 0.0 && t.is_finite()) => Err(
                Error::InvalidParameter(format!("heat semigroup time t = {t} must be >= 0")),
            ),
            Symbol::Derivative(axis) if axis > 2 => Err(Error::InvalidParameter(format!(
                "derivative axis {axis} out of range"
            ))),
            _ => Ok(Self { symbol, zero_mode }),
        }
    }

    /// `Λ^s`, annihilating the mean for negative `s`.
    pub fn lambda_power(s: f64) -> Result<Self> {
        let rule = if s < 0.0 {
            ZeroModeRule::Annihilate
        } else {
            ZeroModeRule::Preserve
        };
        Self::new(Symbol::LambdaPower(s), rule)
    }

    pub fn heat(t: f64) -> Result<Self> {
        Self::new(Symbol::HeatSemigroup(t), ZeroModeRule::Preserve)
    }

    pub fn laplacian() -> Self {
        Self {
            symbol: Symbol::Laplacian,
            zero_mode: ZeroModeRule::Preserve,
        }
    }

    pub fn derivative(axis: usize) -> Result<Self> {
        Self::new(Symbol::Derivative(axis), ZeroModeRule::Preserve)
    }

    pub fn symbol(&self) -> Symbol {
        self.symbol
    }

    pub fn zero_mode(&self) -> ZeroModeRule {
        self.zero_mode
    }

    /// Scalar symbol value at frequency `xi`.
    fn scalar_value(&self, xi: [f64; 3], xi_sq: f64) -> Complex64 {
        if xi_sq == 0.0 && self.zero_mode == ZeroModeRule::Annihilate {
            return Complex64::new(0.0, 0.0);
        }
        let re = |v: f64| Complex64::new(v, 0.0);
        match self.symbol {
            Symbol::LambdaPower(s) => {
                if xi_sq == 0.0 {
                    re(if s == 0.0 { 1.0 } else { 0.0 })
                } else {
                    re(xi_sq.powf(0.5 * s))
                }
            }
            Symbol::HeatSemigroup(t) => re((-4.0 * PI * PI * xi_sq * t).exp()),
            Symbol::Laplacian => re(-4.0 * PI * PI * xi_sq),
            Symbol::Derivative(axis) => Complex64::new(0.0, 2.0 * PI * xi[axis]),
            Symbol::ProjectionSolenoidal | Symbol::ProjectionGradient => {
                unreachable!("vector symbols are handled by apply_projection")
            }
        }
    }
}

/// Multiplies each Fourier coefficient by the symbol. Physical input is
/// transformed first; the output is always spectral.
pub fn apply_multiplier(f: &SpectralField, m: &MultiplierSpec) -> Result<SpectralField> {
    if matches!(
        m.symbol,
        Symbol::ProjectionSolenoidal | Symbol::ProjectionGradient
    ) {
        return Err(Error::Contract(
            "projection symbols act on vector fields; use apply_projection".into(),
        ));
    }
    let mut out = f.to_spectral();
    let g = out.grid;
    for (idx, c) in out.data.iter_mut().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        *c *= m.scalar_value(g.wavevector(idx), g.xi_sq(idx));
    }
    Ok(out)
}

/// Applies one of the two Helmholtz projections to a vector field.
pub fn apply_projection(u: &[SpectralField; 3], m: &MultiplierSpec) -> Result<[SpectralField; 3]> {
    let solenoidal = match m.symbol {
        Symbol::ProjectionSolenoidal => true,
        Symbol::ProjectionGradient => false,
        _ => {
            return Err(Error::Contract(
                "apply_projection requires a projection symbol".into(),
            ))
        }
    };
    u[0].check_compatible(&u[1])?;
    u[0].check_compatible(&u[2])?;
    let g = *u[0].grid();
    let mut out = [u[0].to_spectral(), u[1].to_spectral(), u[2].to_spectral()];
    for idx in 0..g.len() {
        let xi = g.wavevector(idx);
        let xi_sq = g.xi_sq(idx);
        let v = [out[0].data[idx], out[1].data[idx], out[2].data[idx]];
        if xi_sq == 0.0 {
            // the mean flow is divergence-free and has no gradient part
            let keep = solenoidal && m.zero_mode == ZeroModeRule::Preserve;
            for c in &mut out {
                if !keep {
                    c.data[idx] = Complex64::new(0.0, 0.0);
                }
            }
            continue;
        }
        let dot = (v[0] * xi[0] + v[1] * xi[1] + v[2] * xi[2]) / xi_sq;
        for a in 0..3 {
            let grad = dot * xi[a];
            out[a].data[idx] = if solenoidal { v[a] - grad } else { grad };
        }
    }
    Ok(out)
}

/// Homogeneous Sobolev norm `‖f‖_{Ḣ^s} = (L³ Σ |ξ|^{2s} |c_ξ|²)^{1/2}`.
///
/// For `s < 0` the zero mode is excluded; for `s = 0` it is the `L²` norm.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    sobolev_norm_sq(f, s).sqrt()
}

pub(crate) fn sobolev_norm_sq(f: &SpectralField, s: f64) -> f64 {
    let spec;
    let coeffs = match f.space {
        Space::Spectral => &f.data,
        Space::Physical => {
            spec = f.to_spectral();
            &spec.data
        }
    };
    let g = f.grid;
    let mut sum = 0.0;
    for (idx, c) in coeffs.iter().enumerate() {
        let a = c.norm_sqr();
        if a == 0.0 {
            continue;
        }
        let xi_sq = g.xi_sq(idx);
        if xi_sq == 0.0 {
            if s == 0.0 {
                sum += a;
            }
            continue;
        }
        sum += if s == 0.0 { a } else { xi_sq.powf(s) * a };
    }
    sum * g.volume()
}

/// `‖∇^ℓ f‖_{L²}`, evaluated spectrally as `‖Λ^ℓ f‖_{L²}`.
pub fn gradient_norm(f: &SpectralField, ell: u32) -> f64 {
    sobolev_norm(f, ell as f64)
}

/// Discrete `L^p` norm `(Σ |f(x)|^p · dV)^{1/p}`; `p = ∞` gives the grid maximum.
pub fn lp_norm(f: &SpectralField, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "L^p norm requires p >= 1, got p = {p}"
        )));
    }
    let phys = f.to_physical();
    Ok(lp_norm_values(
        phys.data.iter().map(|z| z.norm()),
        p,
        f.grid.cell_volume(),
    ))
}

/// `L^p` norm of a sequence of magnitudes with uniform cell weight.
pub(crate) fn lp_norm_values(values: impl Iterator<Item = f64>, p: f64, cell: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0, f64::max);
    }
    let sum: f64 = if p == 2.0 {
        values.map(|v| v * v).sum()
    } else if p == 1.0 {
        values.sum()
    } else {
        values.map(|v| v.powf(p)).sum()
    };
    (sum * cell).powf(1.0 / p)
}

/// Keeps only modes inside the 2/3 band.
pub fn dealias(f: &SpectralField) -> SpectralField {
    let mut out = f.to_spectral();
    let g = out.grid;
    for (idx, c) in out.data.iter_mut().enumerate() {
        if !g.in_dealias_band(idx) {
            *c = Complex64::new(0.0, 0.0);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(n: usize, l: f64) -> GridSpec {
        GridSpec::new(n, l).unwrap()
    }

    fn random_physical(g: GridSpec, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        SpectralField::from_real(g, &vals).unwrap()
    }

    #[test]
    fn paired_real_transforms_match_single() {
        let g = grid(8, 1.3);
        let a = random_physical(g, 3);
        let b = random_physical(g, 4);
        let (sa, sb) = forward_real_pair(&a.real_values(), &b.real_values(), 8);
        let ea = a.to_spectral();
        let eb = b.to_spectral();
        for idx in 0..g.len() {
            assert!((sa[idx] - ea.data()[idx]).norm() < 1e-15);
            assert!((sb[idx] - eb.data()[idx]).norm() < 1e-15);
        }
        let (pa, pb) = inverse_real_pair(ea.data(), eb.data(), 8);
        for (x, y) in pa.iter().zip(a.real_values()) {
            assert!((x - y).abs() < 1e-13);
        }
        for (x, y) in pb.iter().zip(b.real_values()) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(GridSpec::new(6, 1.0).is_err());
        assert!(GridSpec::new(12, 1.0).is_err());
        assert!(GridSpec::new(16, 0.0).is_err());
        let g = grid(8, 2.0);
        let zero_modes = (0..g.len()).filter(|&i| g.xi_sq(i) == 0.0).count();
        assert_eq!(zero_modes, 1);
        assert_eq!(g.mode(4), -4);
        assert_eq!(g.mode(3), 3);
    }

    #[test]
    fn constant_field_has_only_dc() {
        let g = grid(8, 3.0);
        let f = SpectralField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let s = f.transform(Direction::Forward).unwrap();
        assert_relative_eq!(s.data()[0].re, 1.0, epsilon = 1e-14);
        assert!(s.data()[1..].iter().all(|c| c.norm() < 1e-14));
    }

    #[test]
    fn plane_wave_has_single_coefficient() {
        let l = 2.5;
        let g = grid(16, l);
        let f = SpectralField::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * PI * x[0] / l));
        let s = f.to_spectral();
        let idx = g.flat(1, 0, 0);
        assert_relative_eq!(s.data()[idx].re, 1.0, epsilon = 1e-13);
        let others: f64 = s
            .data()
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, c)| c.norm())
            .fold(0.0, f64::max);
        assert!(others < 1e-13);
    }

    #[test]
    fn wrong_tag_is_contract_violation() {
        let g = grid(8, 1.0);
        let f = SpectralField::zeros(g, Space::Spectral);
        assert!(matches!(
            f.transform(Direction::Forward),
            Err(Error::Contract(_))
        ));
        let p = SpectralField::zeros(g, Space::Physical);
        assert!(p.transform(Direction::Inverse).is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let g = grid(16, 1.7);
        let f = random_physical(g, 3);
        let back = f
            .transform(Direction::Forward)
            .unwrap()
            .transform(Direction::Inverse)
            .unwrap();
        let err: f64 = f
            .data()
            .iter()
            .zip(back.data())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = f.data().iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm < 1e-12, "round trip error {}", err / norm);
    }

    #[test]
    fn fft_matches_direct_dft_on_small_grid() {
        let g = grid(8, 1.0);
        let f = random_physical(g, 11);
        let s = f.to_spectral();
        let n = g.n() as f64;
        for idx in [0usize, 1, 9, 77, 300, 511] {
            let m = g.modes_at(idx);
            let mut acc = Complex64::new(0.0, 0.0);
            for x in 0..g.len() {
                let (i, j, k) = g.unflat(x);
                let phase =
                    -2.0 * PI * (m[0] as f64 * i as f64 + m[1] as f64 * j as f64 + m[2] as f64 * k as f64) / n;
                acc += f.data()[x] * Complex64::from_polar(1.0, phase);
            }
            acc /= g.len() as f64;
            assert!((acc - s.data()[idx]).norm() < 1e-14);
        }
    }

    #[test]
    fn lambda_power_on_eigenfunction() {
        let l = 2.0;
        let g = grid(16, l);
        let f = SpectralField::plane_wave(g, [1, 2, -2], Complex64::new(0.5, 0.0)).unwrap();
        let s = 0.7;
        let out = apply_multiplier(&f, &MultiplierSpec::lambda_power(s).unwrap()).unwrap();
        let expect = (3.0f64 / l).powf(s) * 0.5;
        let idx = g.flat(1, 2, g.index_of_mode(-2));
        assert_relative_eq!(out.data()[idx].re, expect, epsilon = 1e-14);
    }

    #[test]
    fn heat_at_zero_time_is_identity() {
        let g = grid(8, 1.0);
        let f = random_physical(g, 5).to_spectral();
        let out = apply_multiplier(&f, &MultiplierSpec::heat(0.0).unwrap()).unwrap();
        assert_eq!(out, f);
    }

    #[test]
    fn lambda_inverse_pair_on_mean_zero_field() {
        let g = grid(16, 1.3);
        let f = random_physical(g, 7).mean_free();
        let a = apply_multiplier(&f, &MultiplierSpec::lambda_power(1.3).unwrap()).unwrap();
        let b = apply_multiplier(&a, &MultiplierSpec::lambda_power(-1.3).unwrap()).unwrap();
        let err = sobolev_norm(&b.sub(&f).unwrap(), 0.0) / sobolev_norm(&f, 0.0);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn negative_power_with_preserve_is_rejected() {
        assert!(MultiplierSpec::new(Symbol::LambdaPower(-0.5), ZeroModeRule::Preserve).is_err());
        assert!(MultiplierSpec::new(Symbol::LambdaPower(-0.5), ZeroModeRule::Annihilate).is_ok());
    }

    #[test]
    fn projections_split_vector_fields() {
        let g = grid(8, 1.0);
        let u = [random_physical(g, 1), random_physical(g, 2), random_physical(g, 3)];
        let sol = MultiplierSpec::new(Symbol::ProjectionSolenoidal, ZeroModeRule::Preserve).unwrap();
        let grad = MultiplierSpec::new(Symbol::ProjectionGradient, ZeroModeRule::Preserve).unwrap();
        let us = apply_projection(&u, &sol).unwrap();
        let ug = apply_projection(&u, &grad).unwrap();
        // divergence of the solenoidal part vanishes
        let mut div = SpectralField::zeros(g, Space::Spectral);
        for a in 0..3 {
            let d = apply_multiplier(&us[a], &MultiplierSpec::derivative(a).unwrap()).unwrap();
            div = div.add(&d).unwrap();
        }
        assert!(sobolev_norm(&div, 0.0) < 1e-12);
        for a in 0..3 {
            let sum = us[a].add(&ug[a]).unwrap();
            let diff = sum.sub(&u[a].to_spectral()).unwrap();
            assert!(sobolev_norm(&diff, 0.0) < 1e-12);
        }
        assert!(apply_multiplier(&u[0], &sol).is_err());
    }

    #[test]
    fn single_mode_sobolev_norm() {
        // |k|/L = 2 with k = (2, 0, 0), L = 1
        let g = grid(16, 1.0);
        let f = SpectralField::plane_wave(g, [2, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        let v = g.volume();
        for s in [-1.0, -0.5, 0.0, 0.5, 1.0, 2.5] {
            assert_relative_eq!(
                sobolev_norm(&f, s),
                2f64.powf(s) * v.sqrt(),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn two_mode_sum_by_hand() {
        let l = 1.5;
        let g = grid(16, l);
        let a = SpectralField::plane_wave(g, [1, 0, 0], Complex64::new(0.3, 0.4)).unwrap();
        let b = SpectralField::plane_wave(g, [0, 2, 2], Complex64::new(-1.1, 0.0)).unwrap();
        let f = a.add(&b).unwrap();
        let s = 0.8;
        let r1 = 1.0 / l;
        let r2 = 8f64.sqrt() / l;
        let by_hand = (r1.powf(2.0 * s) * 0.25 + r2.powf(2.0 * s) * 1.21) * l.powi(3);
        assert_relative_eq!(sobolev_norm(&f, s).powi(2), by_hand, max_relative = 1e-13);
    }

    #[test]
    fn parseval_on_random_field() {
        let g = grid(16, 2.3);
        let f = random_physical(g, 9);
        let a = lp_norm(&f, 2.0).unwrap();
        let b = sobolev_norm(&f, 0.0);
        assert!((a - b).abs() <= 1e-12 * b);
    }

    #[test]
    fn gradient_norm_is_component_sum() {
        let g = grid(16, 1.9);
        let f = random_physical(g, 21);
        let mut sum = 0.0;
        for axis in 0..3 {
            let d = apply_multiplier(&f, &MultiplierSpec::derivative(axis).unwrap()).unwrap();
            sum += sobolev_norm(&d, 0.0).powi(2);
        }
        // ∂_j carries 2πξ_j while Λ carries |ξ|
        let via_lambda = gradient_norm(&f, 1).powi(2) * 4.0 * PI * PI;
        assert_relative_eq!(sum, via_lambda, max_relative = 1e-12);
    }

    #[test]
    fn gradient_norm_of_plane_wave() {
        let g = grid(16, 1.0);
        let f = SpectralField::plane_wave(g, [3, 0, 0], Complex64::new(1.0, 0.0)).unwrap();
        assert_relative_eq!(gradient_norm(&f, 0), sobolev_norm(&f, 0.0));
        assert_relative_eq!(
            gradient_norm(&f, 2),
            9.0 * lp_norm(&f, 2.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn lp_norm_of_constant_and_sine() {
        let l = 1.7;
        let g = grid(8, l);
        let one = SpectralField::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let v = g.volume();
        for p in [1.0, 1.5, 2.0, 3.0, 6.0] {
            assert_relative_eq!(lp_norm(&one, p).unwrap(), v.powf(1.0 / p), max_relative = 1e-13);
        }
        let sine = SpectralField::from_fn(g, |x| Complex64::new((2.0 * PI * x[0] / l).sin(), 0.0));
        assert_relative_eq!(lp_norm(&sine, f64::INFINITY).unwrap(), 1.0, epsilon = 1e-14);
        assert!(lp_norm(&one, 0.5).is_err());
    }

    #[test]
    fn heat_semigroup_composes() {
        let g = grid(16, 1.0);
        let f = random_physical(g, 4);
        let h = |t| MultiplierSpec::heat(t).unwrap();
        let a = apply_multiplier(&apply_multiplier(&f, &h(0.001)).unwrap(), &h(0.002)).unwrap();
        let b = apply_multiplier(&f, &h(0.003)).unwrap();
        let err = sobolev_norm(&a.sub(&b).unwrap(), 0.0) / sobolev_norm(&b, 0.0);
        assert!(err < 1e-12);
    }

    #[test]
    fn real_symbols_preserve_hermitian_symmetry() {
        let g = grid(16, 1.0);
        let f = random_physical(g, 8);
        for m in [
            MultiplierSpec::lambda_power(0.6).unwrap(),
            MultiplierSpec::lambda_power(-1.2).unwrap(),
            MultiplierSpec::heat(0.01).unwrap(),
            MultiplierSpec::laplacian(),
        ] {
            let out = apply_multiplier(&f, &m).unwrap();
            assert!(out.imag_ratio() < 1e-12);
        }
    }
}
