//! Velocity-space building blocks on a trapezoidal tensor grid: the
//! Maxwellian, the macro–micro projection and the hard-sphere collision
//! frequency `ν(v) = ∫ |v − u| μ(u) du`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{Matrix5, Vector5};

use crate::error::{Error, Result};

/// Largest accepted condition number of the 5×5 Gram matrix.
pub const MAX_GRAM_CONDITION: f64 = 1e12;

/// `[-v_max, v_max]³` with `nv` nodes per axis (odd, so `v = 0` is a node).
#[derive(Debug, Clone)]
pub struct VelocityGrid {
    nv: usize,
    v_max: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    nu_cache: Arc<Mutex<HashMap<[usize; 3], f64>>>,
}

impl PartialEq for VelocityGrid {
    fn eq(&self, other: &Self) -> bool {
        self.nv == other.nv && self.v_max == other.v_max
    }
}

impl VelocityGrid {
    pub fn new(nv: usize, v_max: f64) -> Result<Self> {
        if nv < 3 || nv % 2 == 0 {
            return Err(Error::InvalidParameter(format!("nv = {nv} must be odd and at least 3")));
        }
        if !(v_max >= 6.0 && v_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "v_max = {v_max} must be at least 6 to resolve the Maxwellian tail"
            )));
        }
        let h = 2.0 * v_max / (nv - 1) as f64;
        let c = (nv - 1) / 2;
        let nodes = (0..nv).map(|i| (i as f64 - c as f64) * h).collect();
        let mut weights = vec![h; nv];
        weights[0] = 0.5 * h;
        weights[nv - 1] = 0.5 * h;
        Ok(Self {
            nv,
            v_max,
            nodes,
            weights,
            nu_cache: Arc::new(Mutex::new(HashMap::new())),
        })
    }

    pub fn nv(&self) -> usize {
        self.nv
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn len(&self) -> usize {
        self.nv * self.nv * self.nv
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    pub fn unflat(&self, idx: usize) -> [usize; 3] {
        let n = self.nv;
        [idx / (n * n), (idx / n) % n, idx % n]
    }

    pub fn velocity(&self, idx: usize) -> [f64; 3] {
        let [i, j, k] = self.unflat(idx);
        [self.nodes[i], self.nodes[j], self.nodes[k]]
    }

    pub fn weight(&self, idx: usize) -> f64 {
        let [i, j, k] = self.unflat(idx);
        self.weights[i] * self.weights[j] * self.weights[k]
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// `ν(v) = Σ_u w(u) |v − u| e^{-|u|²/2}` over the grid.
    pub fn collision_frequency(&self, v: [f64; 3]) -> Result<f64> {
        let speed = norm(v);
        if !(speed <= self.v_max * 3f64.sqrt()) || v.iter().any(|c| c.abs() > self.v_max) {
            return Err(Error::InvalidParameter(format!(
                "velocity {v:?} lies outside the grid box [-{0}, {0}]³",
                self.v_max
            )));
        }
        let n = self.nv;
        let gauss: Vec<f64> = self.nodes.iter().map(|x| (-0.5 * x * x).exp()).collect();
        let mut total = 0.0;
        for i in 0..n {
            let wi = self.weights[i] * gauss[i];
            let dx = v[0] - self.nodes[i];
            for j in 0..n {
                let wij = wi * self.weights[j] * gauss[j];
                let dy = v[1] - self.nodes[j];
                let dxy = dx * dx + dy * dy;
                let mut row = 0.0;
                for k in 0..n {
                    let dz = v[2] - self.nodes[k];
                    row += self.weights[k] * gauss[k] * (dxy + dz * dz).sqrt();
                }
                total += wij * row;
            }
        }
        Ok(total)
    }

    /// `ν` at a grid node, cached by the node's symmetry class.
    pub fn nu_at_node(&self, idx: usize) -> f64 {
        let c = (self.nv - 1) / 2;
        let mut key = self.unflat(idx).map(|i| i.abs_diff(c));
        key.sort_unstable();
        if let Some(v) = self.nu_cache.lock().expect("nu cache poisoned").get(&key) {
            return *v;
        }
        let h = self.spacing();
        let v = [key[0] as f64 * h, key[1] as f64 * h, key[2] as f64 * h];
        let nu = self.collision_frequency(v).expect("grid node lies inside the box");
        self.nu_cache.lock().expect("nu cache poisoned").insert(key, nu);
        nu
    }

    /// `(c₁, c₂)` with `c₁(1+|v|) ≤ ν(v) ≤ c₂(1+|v|)` at every node.
    pub fn nu_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for idx in 0..self.len() {
            let r = self.nu_at_node(idx) / (1.0 + norm(self.velocity(idx)));
            lo = lo.min(r);
            hi = hi.max(r);
        }
        (lo, hi)
    }
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// A real function sampled at the nodes of a [`VelocityGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct VelocityFunction {
    grid: VelocityGrid,
    values: Vec<f64>,
}

impl VelocityFunction {
    pub fn new(grid: &VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("velocity function has non-finite values".into()));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn from_fn(grid: &VelocityGrid, f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|i| f(grid.velocity(i))).collect())
    }

    pub fn grid(&self) -> &VelocityGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn inner(&self, other: &Self) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::Contract("functions live on different velocity grids".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .enumerate()
            .map(|(i, (a, b))| self.grid.weight(i) * a * b)
            .sum())
    }

    /// `L²_v` norm.
    pub fn norm(&self) -> f64 {
        self.inner(self).expect("same grid").sqrt()
    }

    pub fn integral(&self) -> f64 {
        self.values.iter().enumerate().map(|(i, v)| self.grid.weight(i) * v).sum()
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::Contract("functions live on different velocity grids".into()));
        }
        Ok(Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }
}

/// `μ(v) = e^{-|v|²/2}`.
pub fn maxwellian(grid: &VelocityGrid) -> VelocityFunction {
    VelocityFunction::from_fn(grid, |v| (-0.5 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp())
        .expect("finite values")
}

/// `√μ · (1, v₁, v₂, v₃, |v|²)` at one velocity.
fn basis_at(v: [f64; 3]) -> [f64; 5] {
    let s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let root = (-0.25 * s2).exp();
    [root, v[0] * root, v[1] * root, v[2] * root, s2 * root]
}

/// Macroscopic part `Pf = (a + b·v + c|v|²)√μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    pub pf: VelocityFunction,
    pub a: f64,
    pub b: [f64; 3],
    pub c: f64,
    /// Condition estimate of the Gram matrix.
    pub condition: f64,
}

/// `L²_v`-orthogonal projection onto `span{√μ, v√μ, |v|²√μ}` by a Gram solve.
pub fn project_p(f: &VelocityFunction) -> Result<Projection> {
    let grid = &f.grid;
    let mut gram = Matrix5::<f64>::zeros();
    let mut rhs = Vector5::<f64>::zeros();
    let basis: Vec<[f64; 5]> = (0..grid.len()).map(|i| basis_at(grid.velocity(i))).collect();
    for (idx, phi) in basis.iter().enumerate() {
        let w = grid.weight(idx);
        let fv = f.values[idx];
        for a in 0..5 {
            rhs[a] += w * fv * phi[a];
            for b in a..5 {
                gram[(a, b)] += w * phi[a] * phi[b];
            }
        }
    }
    for a in 0..5 {
        for b in 0..a {
            gram[(a, b)] = gram[(b, a)];
        }
    }
    let eig = gram.symmetric_eigen().eigenvalues;
    let (lo, hi) = eig.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| (lo.min(e), hi.max(e)));
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(condition <= MAX_GRAM_CONDITION) {
        return Err(Error::IllConditioned { condition });
    }
    let chol = gram.cholesky().ok_or(Error::IllConditioned { condition })?;
    let x = chol.solve(&rhs);
    let values = basis
        .iter()
        .map(|phi| (0..5).map(|a| x[a] * phi[a]).sum())
        .collect();
    Ok(Projection {
        pf: VelocityFunction {
            grid: grid.clone(),
            values,
        },
        a: x[0],
        b: [x[1], x[2], x[3]],
        c: x[4],
        condition,
    })
}

/// `{I − P} f`.
pub fn micro_part(f: &VelocityFunction) -> Result<VelocityFunction> {
    f.sub(&project_p(f)?.pf)
}

/// `|f|_ν = (Σ w ν f²)^{1/2}`; `ν` is evaluated only where `f ≠ 0`.
pub fn nu_weighted_norm(f: &VelocityFunction) -> f64 {
    f.values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| f.grid.weight(i) * f.grid.nu_at_node(i) * v * v)
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grid_validation_and_weights() {
        assert!(VelocityGrid::new(10, 8.0).is_err());
        assert!(VelocityGrid::new(11, 5.0).is_err());
        let g = VelocityGrid::new(9, 6.0).unwrap();
        assert_relative_eq!(g.weights().iter().sum::<f64>(), 12f64.powi(3), max_relative = 1e-13);
        assert_eq!(g.velocity(g.len() / 2), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn maxwellian_is_symmetric() {
        let g = VelocityGrid::new(17, 8.0).unwrap();
        let m = maxwellian(&g);
        assert_eq!(m.values()[g.len() / 2], 1.0);
        for idx in 0..g.len() {
            assert_eq!(m.values()[idx], m.values()[g.len() - 1 - idx]);
        }
    }

    #[test]
    fn null_space_members_are_fixed() {
        let g = VelocityGrid::new(25, 8.0).unwrap();
        let root = VelocityFunction::from_fn(&g, |v| basis_at(v)[0]).unwrap();
        let p = project_p(&root).unwrap();
        assert_relative_eq!(p.a, 1.0, epsilon = 1e-12);
        assert!(p.b.iter().all(|b| b.abs() < 1e-12) && p.c.abs() < 1e-12);
        let v1 = VelocityFunction::from_fn(&g, |v| basis_at(v)[1]).unwrap();
        assert!(micro_part(&v1).unwrap().norm() < 1e-12 * v1.norm());
        let quad = VelocityFunction::from_fn(&g, |v| (v[0] * v[0] - v[1] * v[1]) * basis_at(v)[0]).unwrap();
        assert!(project_p(&quad).unwrap().pf.norm() < 1e-12 * quad.norm());
    }

    #[test]
    fn zero_function_has_zero_nu_norm() {
        let g = VelocityGrid::new(9, 6.0).unwrap();
        let z = VelocityFunction::new(&g, vec![0.0; g.len()]).unwrap();
        assert_eq!(nu_weighted_norm(&z), 0.0);
    }

    #[test]
    fn outside_velocity_rejected() {
        let g = VelocityGrid::new(9, 6.0).unwrap();
        assert!(g.collision_frequency([7.0, 0.0, 0.0]).is_err());
    }
}
