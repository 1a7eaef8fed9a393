use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sigma2_core::critical::{degree_report, CriticalClass, CriticalOptions};
use sigma2_core::families::{mobius_conformal_factor, SphereMobius};
use sigma2_core::kfield::{parse_k_spec, SphereFunction};
use sigma2_core::quadrature::sphere_quadrature;
use sigma2_core::solver::overset::Overset;
use sigma2_core::solver::{
    blowup_diagnose, homotopy_continue, linearize, residual, HomotopyOptions, SolveOptions,
};
use sigma2_core::{ChartGrid, ChartId, SphereField};

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

fn grid(n: usize) -> ChartGrid {
    ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, n).unwrap()
}

#[test]
fn jacobian_matches_finite_differences() {
    let g = grid(24);
    // slaved nodes are functions of the unknowns in both operators
    let layout = Overset::new(g).unwrap();
    let consistent = |f: SphereField| layout.extend(&layout.restrict(&f));
    let u = consistent(SphereField::from_sphere_fn(g, |z| {
        0.2 * z[0] * z[2] - 0.1 * z[1] + 0.05 * z[2] * z[2]
    }));
    let k = SphereField::from_sphere_fn(g, |z| 1.0 + 0.2 * z[2]);
    let mu = 0.7;
    let lin = linearize(&u, &k, mu, 1e-8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c: [f64; 3] = [
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    ];
    let delta = consistent(SphereField::from_sphere_fn(g, |z| {
        c[0] * z[0] + c[1] * z[1] * z[2] + c[2] * z[2]
    }));
    let eps = 1e-6;
    let shifted = |s: f64| {
        let mut w = u.clone();
        for ch in ChartId::BOTH {
            let d = &delta.chart(ch).values;
            for (v, dv) in w.chart_mut(ch).values.iter_mut().zip(d) {
                *v += s * dv;
            }
        }
        residual(&w, &k, mu, 1e-8).unwrap().field
    };
    let (fp, fm) = (shifted(eps), shifted(-eps));
    let jd = lin.apply(&delta);
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for ch in ChartId::BOTH {
        for n in 0..g.node_count() {
            let fd = (fp.chart(ch).values[n] - fm.chart(ch).values[n]) / (2.0 * eps);
            worst = worst.max((fd - jd.chart(ch).values[n]).abs());
            scale = scale.max(fd.abs());
        }
    }
    assert!(
        worst <= 1e-6 * scale,
        "max deviation {worst:e} vs scale {scale:e}"
    );
}

#[test]
fn round_metric_has_zero_residual() {
    let g = grid(32);
    let r = residual(
        &SphereField::constant(g, 0.0),
        &SphereField::constant(g, 1.0),
        1.0,
        1e-8,
    )
    .unwrap();
    assert!(r.sup < 1e-13, "{}", r.sup);
    assert_eq!(r.cone_fraction, 1.0);
}

#[test]
fn mobius_factor_solves_round_problem() {
    let errs: Vec<f64> = [32, 64]
        .iter()
        .map(|&n| {
            let g = grid(n);
            let u = mobius_conformal_factor(g, SphereMobius::new([0.0, 0.0, 1.0], 2.0).unwrap());
            let r = residual(&u, &SphereField::constant(g, 1.0), 1.0, 1e-8).unwrap();
            r.sup / r.scale
        })
        .collect();
    assert!(errs[1] < errs[0] / 3.0, "{errs:?}");
}

#[test]
fn quadrature_moments() {
    let g = grid(64);
    let one = sphere_quadrature(&SphereField::constant(g, 1.0)).unwrap();
    assert!((one - FOUR_PI).abs() < 1e-3, "{one}");
    for i in 0..3 {
        let m = sphere_quadrature(&SphereField::from_sphere_fn(g, |z| z[i] * z[i])).unwrap();
        assert!((m - FOUR_PI / 3.0).abs() < 1e-3, "{m}");
        let odd = sphere_quadrature(&SphereField::from_sphere_fn(g, |z| z[i])).unwrap();
        assert!(odd.abs() < 1e-10);
    }
}

#[test]
fn sampled_fields_agree_on_overlap() {
    let u = SphereField::from_sphere_fn(grid(64), |z| (z[0] + 0.5 * z[2]).sin());
    assert!(u.overlap_mismatch().unwrap() < 1e-5);
}

#[test]
fn critical_points_of_linear_k() {
    let k = parse_k_spec("2+z3").unwrap();
    let rep = degree_report(&k, grid(48), &CriticalOptions::default()).unwrap();
    assert_eq!(rep.points.len(), 2);
    let north = rep.points.iter().find(|p| p.z[2] > 0.0).unwrap();
    let south = rep.points.iter().find(|p| p.z[2] < 0.0).unwrap();
    assert_eq!((north.class, north.index), (CriticalClass::Minus, 2));
    assert_eq!((south.class, south.index), (CriticalClass::Plus, 0));
}

#[test]
fn continuation_is_monotone_in_mu() {
    let k = parse_k_spec("1+0.1q(0,0.3,1)").unwrap();
    let opts = SolveOptions::with_intervals(32);
    let run = homotopy_continue(&k, &opts, &HomotopyOptions::default()).unwrap();
    assert!(run.reached_end);
    assert!(run.states.windows(2).all(|w| w[1].mu > w[0].mu));
    let last = run.states.last().unwrap();
    let r = residual(
        last.field(),
        &k.sample(opts.grid().unwrap()),
        1.0,
        opts.cone_eps,
    )
    .unwrap();
    assert!(r.sup <= 1e-10 * r.scale.max(1.0));
}

#[test]
fn bubble_is_single_peak() {
    let u = mobius_conformal_factor(grid(64), SphereMobius::new([0.0, 0.6, 0.8], 6.0).unwrap());
    let d = blowup_diagnose(&u).unwrap();
    assert!(!d.multi_peak);
    // phi_{P,t} pulls points toward P, so its stretch peaks at -P
    assert!(
        (d.peak_z[1] + 0.6).abs() < 0.05 && (d.peak_z[2] + 0.8).abs() < 0.05,
        "{:?}",
        d.peak_z
    );
    assert!(d.concentration_fraction >= 0.99);
}
