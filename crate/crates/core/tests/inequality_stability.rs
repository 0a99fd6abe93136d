//! Resolution stability of the empirical constants: the same band-limited
//! trial fields are sampled on 32³ and 64³ and the worst ratios compared.

use sobodecay::inequality::{
    check_commutator_orders, check_gn, check_riesz, sweep, trial_field, PhaseMode, RatioReport, TrialSpec,
};
use sobodecay::spectral::GridSpec;

fn grid(n: usize) -> GridSpec {
    GridSpec::new(n, 1.0).unwrap()
}

fn spec(count: usize) -> TrialSpec {
    TrialSpec::new(7, [2.0, 5.0], -1.0, count).with_phases(PhaseMode::Mixed, 0.5)
}

fn both(check: impl Fn(&GridSpec) -> RatioReport) -> (RatioReport, RatioReport) {
    (check(&grid(32)), check(&grid(64)))
}

#[test]
fn sup_norm_interpolation_constant() {
    let (coarse, fine) = both(|g| sweep("gn_inf", &spec(1000), g, |f| check_gn(f, f64::INFINITY, 0.0, 0.0, 2.0)).unwrap());
    assert!(coarse.max_ratio.is_finite());
    assert!(coarse.relative_change(&fine) <= 0.05, "{} vs {}", coarse.max_ratio, fine.max_ratio);
}

#[test]
fn riesz_potential_constant() {
    let (coarse, fine) = both(|g| sweep("riesz", &spec(1000), g, |f| check_riesz(f, 0.5, 2.0, 3.0)).unwrap());
    assert!(coarse.max_ratio.is_finite());
    assert!(coarse.relative_change(&fine) <= 0.1, "{} vs {}", coarse.max_ratio, fine.max_ratio);
}

/// Worst ratio per order `m = 1, 2, 3` over 500 pairs, sharing one
/// derivative table per pair.
fn commutator_reports(g: &GridSpec) -> Vec<RatioReport> {
    let spec = spec(500);
    let mut ratios = vec![Vec::new(); 3];
    for pair in 0..spec.count as u64 {
        let f = trial_field(&spec, g, 2 * pair).unwrap();
        let h = trial_field(&spec, g, 2 * pair + 1).unwrap();
        for (m, r) in check_commutator_orders(&f, &h, &[1, 2, 3]).unwrap().into_iter().enumerate() {
            ratios[m].push((pair, r));
        }
    }
    ratios.iter().map(|r| RatioReport::from_ratios("commutator", r, vec![g.n()]).unwrap()).collect()
}

#[test]
fn commutator_constant() {
    let (coarse, fine) = (commutator_reports(&grid(32)), commutator_reports(&grid(64)));
    for (m, (c, f)) in (1..).zip(coarse.iter().zip(&fine)) {
        assert!(c.max_ratio.is_finite());
        assert!(c.relative_change(f) <= 0.1, "m={m}: {} vs {}", c.max_ratio, f.max_ratio);
    }
}
