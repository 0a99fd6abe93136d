//! Randomized checks of Sobolev-type inequalities on band-limited trial
//! fields.
//!
//! Each `check_*` returns the ratio of the left side to the right side of
//! one inequality for one input. Inequalities with an unquantified constant
//! are judged by the stability of the maximum ratio across resolutions and
//! bands, the sharp ones by the ratio itself.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spectral::{
    apply_multiplier, inverse_real_pair, lp_norm, lp_norm_values, sobolev_norm, GridSpec, MultiplierSpec,
    Space, SpectralField,
};

/// Phase model of trial coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Independent uniform phases.
    Random,
    /// A common phase up to a random translation, with random amplitudes.
    /// These fields concentrate near one point and approach the extremal
    /// shape of sup-type inequalities.
    Coherent,
    /// Trials alternate in blocks of two: `0, 1` coherent, `2, 3` random, and
    /// so on, so that consecutive pairs share a phase model.
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSpec {
    pub seed: u64,
    /// Active shells `k_min ≤ |m| ≤ k_max` in integer-mode units.
    pub band: [f64; 2],
    /// `|c_ξ| ∝ |ξ|^slope` on the band.
    pub spectrum_slope: f64,
    pub count: usize,
    pub phases: PhaseMode,
    /// Relative amplitude spread: each `|c_ξ|` is multiplied by a uniform
    /// factor in `[1 - jitter, 1 + jitter]`.
    pub jitter: f64,
}

impl TrialSpec {
    pub fn new(seed: u64, band: [f64; 2], spectrum_slope: f64, count: usize) -> Self {
        Self {
            seed,
            band,
            spectrum_slope,
            count,
            phases: PhaseMode::Random,
            jitter: 0.0,
        }
    }

    pub fn with_phases(mut self, phases: PhaseMode, jitter: f64) -> Self {
        self.phases = phases;
        self.jitter = jitter;
        self
    }

    fn validate(&self, grid: &GridSpec) -> Result<()> {
        let [lo, hi] = self.band;
        let limit = grid.n() as f64 / 3.0;
        if !(lo >= 1.0 && lo <= hi && hi <= limit) {
            return Err(Error::InvalidParameter(format!(
                "band [{lo}, {hi}] must satisfy 1 <= k_min <= k_max <= n/3 = {limit:.3}"
            )));
        }
        if self.count == 0 {
            return Err(Error::InvalidParameter("trial count must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.jitter) {
            return Err(Error::InvalidParameter(format!("jitter {} must lie in [0, 1)", self.jitter)));
        }
        Ok(())
    }
}

/// The first trial field of `spec`.
pub fn random_field(spec: &TrialSpec, grid: &GridSpec) -> Result<SpectralField> {
    trial_field(spec, grid, 0)
}

/// Trial `trial` of `spec`: a real field whose coefficients depend only on
/// `(seed, trial, band, slope, box length)`, not on the resolution.
pub fn trial_field(spec: &TrialSpec, grid: &GridSpec, trial: u64) -> Result<SpectralField> {
    spec.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(trial);
    let coherent = match spec.phases {
        PhaseMode::Random => false,
        PhaseMode::Coherent => true,
        PhaseMode::Mixed => trial % 4 < 2,
    };
    let shift: [f64; 3] = [rng.gen(), rng.gen(), rng.gen()];
    let [lo, hi] = spec.band;
    let kmax = hi.floor() as i64;
    let l = grid.length();
    let mut field = SpectralField::zeros(*grid, Space::Spectral);
    let data = field.data_mut();
    let mut active = 0usize;
    // one draw pair per mode in lexicographic order keeps fields resolution independent
    for a in -kmax..=kmax {
        for b in -kmax..=kmax {
            for c in -kmax..=kmax {
                let m = [a, b, c];
                // canonical half: first nonzero component positive
                let first = m.iter().copied().find(|&x| x != 0).unwrap_or(0);
                if first <= 0 {
                    continue;
                }
                let r = ((a * a + b * b + c * c) as f64).sqrt();
                if r < lo || r > hi {
                    continue;
                }
                let u_amp: f64 = rng.gen();
                let u_phase: f64 = rng.gen();
                let amp = (r / l).powf(spec.spectrum_slope) * (1.0 + spec.jitter * (2.0 * u_amp - 1.0));
                let phase = if coherent {
                    -2.0 * PI * (a as f64 * shift[0] + b as f64 * shift[1] + c as f64 * shift[2])
                } else {
                    2.0 * PI * u_phase
                };
                let z = Complex64::from_polar(amp, phase);
                let idx = grid.flat(grid.index_of_mode(a), grid.index_of_mode(b), grid.index_of_mode(c));
                let neg = grid.flat(grid.index_of_mode(-a), grid.index_of_mode(-b), grid.index_of_mode(-c));
                data[idx] = z;
                data[neg] = z.conj();
                active += 1;
            }
        }
    }
    if active == 0 {
        return Err(Error::InvalidParameter(format!(
            "band [{lo}, {hi}] contains no lattice modes"
        )));
    }
    Ok(field)
}

/// Gagliardo–Nirenberg interpolation exponent from the scaling identity
/// `1/p − α/3 = (1/2 − m/3)(1−θ) + (1/2 − ℓ/3)θ`.
pub fn gn_theta(p: f64, alpha: f64, m: f64, ell: f64) -> Result<f64> {
    let lhs = 1.0 / p - alpha / 3.0;
    if m == ell {
        let rhs = 0.5 - m / 3.0;
        if (lhs - rhs).abs() <= 1e-12 {
            return Ok(0.0);
        }
        return Err(Error::InvalidParameter(format!(
            "scaling identity 1/p - α/3 = (1/2 - m/3)(1-θ) + (1/2 - ℓ/3)θ has no solution for m = ℓ = {m}, p = {p}, α = {alpha}"
        )));
    }
    let theta = (lhs - 0.5 + m / 3.0) / ((m - ell) / 3.0);
    if !(-1e-12..=1.0 + 1e-12).contains(&theta) {
        return Err(Error::InvalidParameter(format!(
            "scaling identity 1/p - α/3 = (1/2 - m/3)(1-θ) + (1/2 - ℓ/3)θ gives θ = {theta} outside [0, 1]"
        )));
    }
    Ok(theta.clamp(0.0, 1.0))
}

/// `‖Λ^α f‖_{L^p} / (‖Λ^m f‖^{1−θ} ‖Λ^ℓ f‖^θ)`.
pub fn check_gn(f: &SpectralField, p: f64, alpha: f64, m: f64, ell: f64) -> Result<f64> {
    if !(m >= 0.0 && alpha >= 0.0 && alpha <= ell && m <= ell) {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= m, α <= ℓ (got α = {alpha}, m = {m}, ℓ = {ell})"
        )));
    }
    let theta = gn_theta(p, alpha, m, ell)?;
    let top = if alpha == 0.0 {
        lp_norm(f, p)?
    } else {
        lp_norm(&apply_multiplier(f, &MultiplierSpec::lambda_power(alpha)?)?, p)?
    };
    let bottom = sobolev_norm(f, m).powf(1.0 - theta) * sobolev_norm(f, ell).powf(theta);
    Ok(top / bottom)
}

fn require_mean_zero(f: &SpectralField) -> Result<()> {
    let s = f.to_spectral();
    let scale = s.data().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if s.data()[0].norm() > 1e-14 * scale {
        return Err(Error::InvalidParameter("input must have zero mean".into()));
    }
    Ok(())
}

/// `‖Λ^ℓ f‖ / (‖Λ^{ℓ+1} f‖^{1−θ} ‖Λ^{-s} f‖^θ)` with `θ = 1/(ℓ+1+s)`.
/// Never exceeds one (Hölder in frequency).
pub fn check_neg_interp(f: &SpectralField, ell: f64, s: f64) -> Result<f64> {
    if !(ell >= 0.0 && s >= 0.0) {
        return Err(Error::InvalidParameter(format!("need ℓ >= 0 and s >= 0 (got {ell}, {s})")));
    }
    require_mean_zero(f)?;
    let theta = 1.0 / (ell + 1.0 + s);
    let spec = f.to_spectral();
    let num = sobolev_norm(&spec, ell);
    let den = sobolev_norm(&spec, ell + 1.0).powf(1.0 - theta) * sobolev_norm(&spec, -s).powf(theta);
    Ok(num / den)
}

/// `‖Λ^{-s} f‖_{L^q} / ‖f‖_{L^p}` for `1/q + s/3 = 1/p`, `1 < p < q < ∞`.
pub fn check_riesz(f: &SpectralField, s: f64, p: f64, q: f64) -> Result<f64> {
    if !(s > 0.0 && s < 3.0) {
        return Err(Error::InvalidParameter(format!("s = {s} must lie in (0, 3)")));
    }
    if !(1.0 < p && p < q && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 1 < p < q < ∞ (got p = {p}, q = {q})")));
    }
    if (1.0 / q + s / 3.0 - 1.0 / p).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "exponents violate 1/q + s/3 = 1/p (1/{q} + {s}/3 != 1/{p})"
        )));
    }
    require_mean_zero(f)?;
    let potential = apply_multiplier(f, &MultiplierSpec::lambda_power(-s)?)?;
    Ok(lp_norm(&potential, q)? / lp_norm(f, p)?)
}

/// Multi-indices of order `m` in three variables, lexicographic.
pub fn multi_indices(m: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in (0..=m).rev() {
        for b in (0..=m - a).rev() {
            out.push([a, b, m - a - b]);
        }
    }
    out
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// All partial derivatives `∂^β` with `|β| ≤ m` of a pair of real fields,
/// in physical space.
struct DerivativeTable {
    orders: Vec<[u32; 3]>,
    f: Vec<Vec<f64>>,
    g: Vec<Vec<f64>>,
}

impl DerivativeTable {
    fn new(f: &SpectralField, g: &SpectralField, m: u32) -> Self {
        let grid = *f.grid();
        let fs = f.to_spectral();
        let gs = g.to_spectral();
        let mut orders = Vec::new();
        for k in 0..=m {
            orders.extend(multi_indices(k));
        }
        let mut tf = Vec::with_capacity(orders.len());
        let mut tg = Vec::with_capacity(orders.len());
        for beta in &orders {
            let mut a = fs.data().to_vec();
            let mut b = gs.data().to_vec();
            for idx in 0..grid.len() {
                let xi = grid.wavevector(idx);
                let mut sym = Complex64::new(1.0, 0.0);
                for axis in 0..3 {
                    let d = Complex64::new(0.0, 2.0 * PI * xi[axis]);
                    for _ in 0..beta[axis] {
                        sym *= d;
                    }
                }
                a[idx] *= sym;
                b[idx] *= sym;
            }
            let (pa, pb) = inverse_real_pair(&a, &b, grid.n());
            tf.push(pa);
            tg.push(pb);
        }
        Self { orders, f: tf, g: tg }
    }

    fn position(&self, beta: [u32; 3]) -> usize {
        self.orders.iter().position(|&o| o == beta).expect("order in table")
    }
}

/// Largest ratio, over multi-indices `β` with `|β| = m`, of
/// `‖∂^β(fg) − f ∂^β g‖_{L²}` to
/// `‖∇f‖_{L^∞}‖∇^{m−1}g‖_{L²} + ‖∇^m f‖_{L²}‖g‖_{L^∞}`.
///
/// Products are formed in physical space; fields whose band is within `n/6`
/// make every product exact on the grid, so the 2/3 truncation is the identity.
pub fn check_commutator(f: &SpectralField, g: &SpectralField, m: u32) -> Result<f64> {
    Ok(*check_commutator_orders(f, g, &[m])?.first().expect("one order"))
}

/// [`check_commutator`] for several orders, sharing the derivative table.
pub fn check_commutator_orders(f: &SpectralField, g: &SpectralField, orders: &[u32]) -> Result<Vec<f64>> {
    require_same_grid(f, g)?;
    if orders.iter().any(|&m| m == 0) {
        return Err(Error::InvalidParameter("commutator order m must be at least 1".into()));
    }
    let grid = *f.grid();
    require_products_resolved(f)?;
    require_products_resolved(g)?;
    let mmax = *orders.iter().max().unwrap_or(&1);
    let table = DerivativeTable::new(f, g, mmax);
    let cell = grid.cell_volume();
    let len = grid.len();

    let grad_f_sup = (0..len)
        .map(|i| {
            (1..=3)
                .map(|k| table.f[k][i] * table.f[k][i])
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max);
    let g_sup = table.g[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
    // true-derivative norms ‖∇^k·‖ = (2π)^k ‖Λ^k·‖ to match the Leibniz terms
    let dnorm = |h: &SpectralField, k: u32| (2.0 * PI).powi(k as i32) * sobolev_norm(h, k as f64);

    let mut out = Vec::with_capacity(orders.len());
    for &m in orders {
        let rhs = grad_f_sup * dnorm(g, m - 1) + dnorm(f, m) * g_sup;
        let mut worst: f64 = 0.0;
        for beta in multi_indices(m) {
            let mut acc = vec![0.0; len];
            for g0 in 0..=beta[0] {
                for g1 in 0..=beta[1] {
                    for g2 in 0..=beta[2] {
                        if g0 + g1 + g2 == 0 {
                            continue;
                        }
                        let coef = binomial(beta[0], g0) * binomial(beta[1], g1) * binomial(beta[2], g2);
                        let fi = table.position([g0, g1, g2]);
                        let gi = table.position([beta[0] - g0, beta[1] - g1, beta[2] - g2]);
                        let (df, dg) = (&table.f[fi], &table.g[gi]);
                        for i in 0..len {
                            acc[i] += coef * df[i] * dg[i];
                        }
                    }
                }
            }
            let lhs = lp_norm_values(acc.iter().map(|v| v.abs()), 2.0, cell);
            let ratio = if rhs == 0.0 {
                if lhs == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                lhs / rhs
            };
            worst = worst.max(ratio);
        }
        out.push(worst);
    }
    Ok(out)
}

/// Products of two fields supported in `|m_j| ≤ n/6` alias-free on the grid.
fn require_products_resolved(f: &SpectralField) -> Result<()> {
    let grid = *f.grid();
    let s = f.to_spectral();
    let limit = grid.n() as i64 / 6;
    let outside = s
        .data()
        .iter()
        .enumerate()
        .any(|(idx, z)| z.norm() > 0.0 && grid.modes_at(idx).iter().any(|m| m.abs() > limit));
    if outside {
        return Err(Error::InvalidParameter(format!(
            "commutator inputs must be band-limited to |m_j| <= n/6 = {limit} so products are resolved"
        )));
    }
    Ok(())
}

fn require_same_grid(f: &SpectralField, g: &SpectralField) -> Result<()> {
    if f.grid() != g.grid() {
        return Err(Error::Contract("fields live on different grids".into()));
    }
    Ok(())
}

/// A non-negative function on a product grid `y × z`, stored row-major with
/// `y` as the slow index, with positive quadrature weights on each factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGridFunction {
    pub values: Vec<f64>,
    pub y_weights: Vec<f64>,
    pub z_weights: Vec<f64>,
}

impl ProductGridFunction {
    pub fn new(values: Vec<f64>, y_weights: Vec<f64>, z_weights: Vec<f64>) -> Result<Self> {
        if values.len() != y_weights.len() * z_weights.len() {
            return Err(Error::Contract(format!(
                "{} values do not fill a {} x {} grid",
                values.len(),
                y_weights.len(),
                z_weights.len()
            )));
        }
        if y_weights.iter().chain(&z_weights).any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidParameter("quadrature weights must be positive".into()));
        }
        Ok(Self {
            values,
            y_weights,
            z_weights,
        })
    }

    fn at(&self, y: usize, z: usize) -> f64 {
        self.values[y * self.z_weights.len() + z].abs()
    }
}

fn weighted_norm(values: impl Iterator<Item = (f64, f64)>, p: f64) -> f64 {
    if p.is_infinite() {
        return values.map(|(v, _)| v).fold(0.0, f64::max);
    }
    values.map(|(v, w)| w * v.powf(p)).sum::<f64>().powf(1.0 / p)
}

/// `(‖ ‖F‖_{L^p_y} ‖_{L^q_z}, ‖ ‖F‖_{L^q_z} ‖_{L^p_y})`; Minkowski's
/// integral inequality gives `lhs ≤ rhs` for `q ≥ p`.
pub fn check_minkowski(f: &ProductGridFunction, p: f64, q: f64) -> Result<(f64, f64)> {
    if !(p >= 1.0 && q >= p) {
        return Err(Error::InvalidParameter(format!("need 1 <= p <= q (got p = {p}, q = {q})")));
    }
    let ny = f.y_weights.len();
    let nz = f.z_weights.len();
    let inner_y: Vec<f64> = (0..nz)
        .map(|z| weighted_norm((0..ny).map(|y| (f.at(y, z), f.y_weights[y])), p))
        .collect();
    let lhs = weighted_norm(inner_y.iter().copied().zip(f.z_weights.iter().copied()), q);
    let inner_z: Vec<f64> = (0..ny)
        .map(|y| weighted_norm((0..nz).map(|z| (f.at(y, z), f.z_weights[z])), q))
        .collect();
    let rhs = weighted_norm(inner_z.iter().copied().zip(f.y_weights.iter().copied()), p);
    Ok((lhs, rhs))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    pub lemma_id: String,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub argmax_seed: u64,
    pub resolutions_tested: Vec<usize>,
    pub trials: usize,
}

impl RatioReport {
    /// Reduces `(trial, ratio)` pairs.
    pub fn from_ratios(lemma_id: impl Into<String>, ratios: &[(u64, f64)], resolutions: Vec<usize>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::InvalidParameter("no ratios to report".into()));
        }
        let (mut argmax, mut max) = ratios[0];
        for &(t, r) in ratios {
            if r > max {
                max = r;
                argmax = t;
            }
        }
        let mean = ratios.iter().map(|r| r.1).sum::<f64>() / ratios.len() as f64;
        Ok(Self {
            lemma_id: lemma_id.into(),
            max_ratio: max,
            mean_ratio: mean,
            argmax_seed: argmax,
            resolutions_tested: resolutions,
            trials: ratios.len(),
        })
    }

    /// `|a/b − 1|` for the max ratios of two reports.
    pub fn relative_change(&self, other: &RatioReport) -> f64 {
        (self.max_ratio / other.max_ratio - 1.0).abs()
    }
}

/// Evaluates `check` on trials `0..spec.count` of `spec` on `grid`.
pub fn sweep<F>(lemma_id: &str, spec: &TrialSpec, grid: &GridSpec, mut check: F) -> Result<RatioReport>
where
    F: FnMut(&SpectralField) -> Result<f64>,
{
    let mut ratios = Vec::with_capacity(spec.count);
    for trial in 0..spec.count as u64 {
        let f = trial_field(spec, grid, trial)?;
        ratios.push((trial, check(&f)?));
    }
    RatioReport::from_ratios(lemma_id, &ratios, vec![grid.n()])
}

/// Like [`sweep`] for checks on pairs of fields; pair `t` uses trials `2t` and `2t+1`.
pub fn sweep_pairs<F>(
    lemma_id: &str,
    spec: &TrialSpec,
    grid: &GridSpec,
    mut check: F,
) -> Result<RatioReport>
where
    F: FnMut(&SpectralField, &SpectralField) -> Result<f64>,
{
    let mut ratios = Vec::with_capacity(spec.count);
    for pair in 0..spec.count as u64 {
        let f = trial_field(spec, grid, 2 * pair)?;
        let g = trial_field(spec, grid, 2 * pair + 1)?;
        ratios.push((pair, check(&f, &g)?));
    }
    RatioReport::from_ratios(lemma_id, &ratios, vec![grid.n()])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> GridSpec {
        GridSpec::new(n, 1.0).unwrap()
    }

    #[test]
    fn field_is_deterministic_and_real() {
        let spec = TrialSpec::new(7, [1.0, 3.0], -1.0, 1);
        let a = random_field(&spec, &grid(16)).unwrap();
        let b = random_field(&spec, &grid(16)).unwrap();
        assert_eq!(a, b);
        assert!(a.imag_ratio() < 1e-12);
        assert_eq!(a.mean().norm(), 0.0);
    }

    #[test]
    fn field_is_resolution_independent() {
        let spec = TrialSpec::new(3, [1.0, 2.5], 0.0, 1);
        let a = random_field(&spec, &grid(16)).unwrap();
        let b = random_field(&spec, &grid(32)).unwrap();
        assert!((sobolev_norm(&a, 1.0) - sobolev_norm(&b, 1.0)).abs() < 1e-12 * sobolev_norm(&a, 1.0));
    }

    #[test]
    fn band_validation() {
        assert!(random_field(&TrialSpec::new(0, [0.5, 2.0], 0.0, 1), &grid(16)).is_err());
        assert!(random_field(&TrialSpec::new(0, [2.0, 6.0], 0.0, 1), &grid(16)).is_err());
        // no integer vector has length in [1.1, 1.2]
        assert!(random_field(&TrialSpec::new(0, [1.1, 1.2], 0.0, 1), &grid(16)).is_err());
    }

    #[test]
    fn gn_theta_values() {
        assert!((gn_theta(f64::INFINITY, 0.0, 0.0, 2.0).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(gn_theta(2.0, 1.0, 1.0, 1.0).unwrap(), 0.0);
        assert!(gn_theta(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn multi_index_counts() {
        assert_eq!(multi_indices(1).len(), 3);
        assert_eq!(multi_indices(2).len(), 6);
        assert_eq!(multi_indices(3).len(), 10);
        assert!(multi_indices(3).iter().all(|b| b.iter().sum::<u32>() == 3));
    }

    #[test]
    fn riesz_rejections() {
        let f = random_field(&TrialSpec::new(1, [1.0, 3.0], 0.0, 1), &grid(16)).unwrap();
        assert!(check_riesz(&f, 1.0, 1.5, 3.0).is_ok());
        assert!(check_riesz(&f, 1.0, 3.0, 1.5).is_err());
        assert!(check_riesz(&f, 1.0, 1.5, 4.0).is_err());
    }

    #[test]
    fn minkowski_rejects_p_above_q() {
        let f = ProductGridFunction::new(vec![1.0; 4], vec![1.0; 2], vec![1.0; 2]).unwrap();
        assert!(check_minkowski(&f, 3.0, 2.0).is_err());
    }
}
