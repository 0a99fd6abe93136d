use std::f64::consts::PI;

use proptest::prelude::*;
use sobodecay::inequality::{trial_field, TrialSpec};
use sobodecay::kinetic::{maxwellian, micro_part, nu_weighted_norm, project_p, VelocityFunction, VelocityGrid};
use sobodecay::spectral::{lp_norm, sobolev_norm, GridSpec};

/// `∫ |v − u| e^{-|u|²/2} du = (2π)^{3/2} [(r + 1/r) erf(r/√2) + √(2/π) e^{-r²/2}]`, `r = |v|`.
fn nu_closed_form(r: f64) -> f64 {
    let c = (2.0 * PI).powf(1.5);
    if r == 0.0 {
        return 8.0 * PI;
    }
    c * ((r + 1.0 / r) * libm::erf(r / 2f64.sqrt()) + (2.0 / PI).sqrt() * (-0.5 * r * r).exp())
}

fn basis(v: [f64; 3]) -> [f64; 5] {
    let s2 = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let root = (-0.25 * s2).exp();
    [root, v[0] * root, v[1] * root, v[2] * root, s2 * root]
}

#[test]
fn maxwellian_mass_converges() {
    let exact = (2.0 * PI).powf(1.5);
    let coarse = (maxwellian(&VelocityGrid::new(9, 8.0).unwrap()).integral() - exact).abs();
    let fine = (maxwellian(&VelocityGrid::new(33, 8.0).unwrap()).integral() - exact).abs();
    assert!(fine < coarse);
    assert!(fine <= 1e-10 * exact, "{fine}");
}

#[test]
fn collision_frequency_at_origin() {
    let g = VelocityGrid::new(129, 8.0).unwrap();
    let nu0 = g.collision_frequency([0.0; 3]).unwrap();
    assert!((nu0 - 8.0 * PI).abs() <= 1e-4 * 8.0 * PI, "{nu0}");
}

#[test]
fn collision_frequency_converges_to_closed_form() {
    let probes: [[f64; 3]; 5] = [[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, -1.5, 2.0], [3.0, 3.0, 0.0], [0.0, 0.0, 6.0]];
    let err = |nv: usize| {
        let g = VelocityGrid::new(nv, 8.0).unwrap();
        probes
            .iter()
            .map(|&v| {
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                (g.collision_frequency(v).unwrap() / nu_closed_form(r) - 1.0).abs()
            })
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(33), err(65));
    // kink of |v − u| on a node: second order in the spacing
    assert!(e2 <= e1 / 3.0, "{e1} -> {e2}");
    assert!(e2 <= 1e-3, "{e2}");
}

#[test]
fn collision_frequency_grows_linearly() {
    let g = VelocityGrid::new(65, 8.0).unwrap();
    let v = 8.0;
    let ratio = g.collision_frequency([v, 0.0, 0.0]).unwrap() / v;
    assert!((ratio / (2.0 * PI).powf(1.5) - 1.0).abs() <= 0.02, "{ratio}");
    let (c1, c2) = VelocityGrid::new(17, 8.0).unwrap().nu_bounds();
    assert!(c1 > 0.0 && c1 <= c2);
}

#[test]
fn unit_bump_at_origin_has_nu_norm_of_nu_zero() {
    let g = VelocityGrid::new(33, 8.0).unwrap();
    let origin = g.len() / 2;
    let mut values = vec![0.0; g.len()];
    values[origin] = 1.0 / g.weight(origin).sqrt();
    let f = VelocityFunction::new(&g, values).unwrap();
    let got = nu_weighted_norm(&f);
    assert!((got - (8.0 * PI).sqrt()).abs() <= 1e-3 * got, "{got}");
    assert!((f.norm() - 1.0).abs() <= 1e-14);
}

fn random_function(g: &VelocityGrid, seed: u64) -> VelocityFunction {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let values = (0..g.len())
        .map(|i| {
            let v = g.velocity(i);
            (-0.2 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp() * rng.gen_range(-1.0..1.0)
        })
        .collect();
    VelocityFunction::new(g, values).unwrap()
}

#[test]
fn projection_solves_the_normal_equations() {
    let g = VelocityGrid::new(17, 8.0).unwrap();
    for seed in 0..5 {
        let f = random_function(&g, seed);
        let micro = micro_part(&f).unwrap();
        for a in 0..5 {
            let phi = VelocityFunction::from_fn(&g, |v| basis(v)[a]).unwrap();
            assert!(micro.inner(&phi).unwrap().abs() <= 1e-12 * f.norm() * phi.norm());
        }
        let again = project_p(&micro).unwrap();
        assert!(again.pf.norm() <= 1e-12 * f.norm());
        let p = project_p(&f).unwrap();
        let pp = project_p(&p.pf).unwrap();
        assert!(pp.pf.sub(&p.pf).unwrap().norm() <= 1e-12 * p.pf.norm());
        let lhs = f.norm().powi(2);
        let rhs = p.pf.norm().powi(2) + micro.norm().powi(2);
        assert!((lhs - rhs).abs() <= 1e-10 * lhs);
    }
}

#[test]
fn macroscopic_coefficients_are_recovered() {
    let g = VelocityGrid::new(17, 8.0).unwrap();
    let (a, b, c) = (0.7, [-0.2, 0.5, 1.1], -0.3);
    let f = VelocityFunction::from_fn(&g, |v| {
        let phi = basis(v);
        a * phi[0] + b[0] * phi[1] + b[1] * phi[2] + b[2] * phi[3] + c * phi[4]
    })
    .unwrap();
    let p = project_p(&f).unwrap();
    assert!((p.a - a).abs() <= 1e-10 && (p.c - c).abs() <= 1e-10);
    for k in 0..3 {
        assert!((p.b[k] - b[k]).abs() <= 1e-10);
    }
}

/// Weighted interpolation `x × v`: per-velocity sup-norm interpolation
/// summed against `ν` is bounded by the worst per-velocity ratio (Hölder).
#[test]
fn nu_weighted_interpolation_inherits_the_pointwise_constant() {
    let vg = VelocityGrid::new(9, 8.0).unwrap();
    let xg = GridSpec::new(16, 1.0).unwrap();
    let spec = TrialSpec::new(5, [1.0, 4.0], -1.0, 2);
    let f = trial_field(&spec, &xg, 0).unwrap().to_physical();
    let h = trial_field(&spec, &xg, 1).unwrap().to_physical();
    let phi = |v: [f64; 3]| (-0.25 * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])).exp();
    let psi = |v: [f64; 3]| v[0] * phi(v);
    let (mut lhs, mut low, mut high, mut worst) = (0.0, 0.0, 0.0, 0.0f64);
    for idx in 0..vg.len() {
        let v = vg.velocity(idx);
        let slice = f.scaled(phi(v)).add(&h.scaled(psi(v))).unwrap();
        let sup = lp_norm(&slice, f64::INFINITY).unwrap();
        let l2 = sobolev_norm(&slice, 0.0);
        let d2 = sobolev_norm(&slice, 2.0);
        if l2 == 0.0 {
            continue;
        }
        worst = worst.max(sup / (l2.powf(0.25) * d2.powf(0.75)));
        let w = vg.weight(idx) * vg.nu_at_node(idx);
        lhs += w * sup * sup;
        low += w * l2 * l2;
        high += w * d2 * d2;
    }
    let ratio = lhs.sqrt() / (low.sqrt().powf(0.25) * high.sqrt().powf(0.75));
    assert!(ratio <= worst * (1.0 + 1e-12), "{ratio} vs {worst}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn l2_norm_bounded_by_nu_norm(seed in 0u64..10_000) {
        let g = VelocityGrid::new(9, 8.0).unwrap();
        let f = random_function(&g, seed);
        let nu_min = (0..g.len()).map(|i| g.nu_at_node(i)).fold(f64::INFINITY, f64::min);
        prop_assert!(f.norm() <= nu_weighted_norm(&f) / nu_min.sqrt() * (1.0 + 1e-12));
    }

    #[test]
    fn micro_part_is_orthogonal(seed in 0u64..10_000) {
        let g = VelocityGrid::new(9, 8.0).unwrap();
        let f = random_function(&g, seed);
        let micro = micro_part(&f).unwrap();
        let p = project_p(&f).unwrap();
        prop_assert!(micro.inner(&p.pf).unwrap().abs() <= 1e-12 * f.norm().powi(2));
    }
}
