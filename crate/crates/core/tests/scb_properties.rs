use std::sync::Arc;

use invset_core::regression::{DesignMatrix, Model, PredictionTarget};
use invset_core::scb::{multiplier_scb, regression_scb};
use invset_core::{BootstrapConfig, Domain, Error, Field, FunctionalSample};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn cfg(n_boot: usize, seed: u64) -> BootstrapConfig {
    BootstrapConfig { n_boot, seed, ..BootstrapConfig::default() }
}

fn design(n: usize, rng: &mut ChaCha8Rng) -> DesignMatrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| vec![1.0, normal(rng), normal(rng)]).collect();
    DesignMatrix::from_rows(&rows, vec!["c".into(), "u".into(), "v".into()]).unwrap()
}

fn grid_target() -> PredictionTarget {
    let rows: Vec<Vec<f64>> = (0..9).map(|i| vec![1.0, (i % 3) as f64 - 1.0, (i / 3) as f64 - 1.0]).collect();
    let xt = DesignMatrix::from_rows(&rows, vec!["c".into(), "u".into(), "v".into()]).unwrap();
    PredictionTarget::design_rows(&xt).unwrap()
}

fn line(m: usize) -> Arc<Domain> {
    Arc::new(Domain::from_coords(vec!["s".into()], (0..m).map(|i| vec![i as f64 / m as f64]).collect()).unwrap())
}

fn paths(n: usize, m: usize, rng: &mut ChaCha8Rng) -> FunctionalSample {
    let mut v = Vec::with_capacity(n * m);
    for _ in 0..n {
        let (a, b) = (normal(rng), normal(rng));
        for s in 0..m {
            let t = s as f64 / m as f64;
            v.push(t.sin() + a * (1.0 - t) + b * t + 0.3 * normal(rng));
        }
    }
    FunctionalSample::new(line(m), n, v).unwrap()
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

#[test]
fn noiseless_regression_band_collapses() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = design(50, &mut rng);
    let beta = [0.5, -1.0, 2.0];
    let y: Vec<f64> = (0..50).map(|i| x.row(i).iter().zip(beta).map(|(a, b)| a * b).sum()).collect();
    let out = regression_scb(&x, &y, &grid_target(), Model::Linear, &cfg(200, 3)).unwrap();
    for (lo, hi) in out.band.lower().values().iter().zip(out.band.upper().values()) {
        assert!(hi - lo < 1e-9, "{}", hi - lo);
    }
}

#[test]
fn bands_are_symmetric_about_the_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = design(80, &mut rng);
    let y: Vec<f64> = (0..80).map(|i| x.row(i)[1] + normal(&mut rng)).collect();
    let out = regression_scb(&x, &y, &grid_target(), Model::Linear, &cfg(200, 4)).unwrap();
    let mid = out.estimate.mean.values();
    for s in 0..mid.len() {
        let up = out.band.upper().values()[s] - mid[s];
        let down = mid[s] - out.band.lower().values()[s];
        assert!((up - down).abs() < 1e-12 && up > 0.0);
    }

    let sample = paths(20, 30, &mut rng);
    let mb = multiplier_scb(&sample, &cfg(200, 5)).unwrap();
    for s in 0..30 {
        let up = mb.band.upper().values()[s] - mb.mean.values()[s];
        let down = mb.mean.values()[s] - mb.band.lower().values()[s];
        assert!((up - down).abs() < 1e-12 && up > 0.0);
    }
}

#[test]
fn smaller_alpha_gives_wider_nested_bands() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sample = paths(25, 40, &mut rng);
    let bands: Vec<_> = [0.2, 0.1, 0.05, 0.01]
        .iter()
        .map(|&alpha| multiplier_scb(&sample, &BootstrapConfig { alpha, ..cfg(500, 9) }).unwrap())
        .collect();
    for w in bands.windows(2) {
        assert!(w[1].max_stat.quantile() >= w[0].max_stat.quantile());
        for s in 0..40 {
            assert!(w[1].band.lower().values()[s] <= w[0].band.lower().values()[s]);
            assert!(w[1].band.upper().values()[s] >= w[0].band.upper().values()[s]);
        }
    }
    let d = &bands[0].max_stat;
    assert_eq!(d.quantile_at(0.05), bands[2].max_stat.quantile());
    assert!(d.quantile_at(0.01) >= d.quantile_at(0.05) && d.quantile_at(0.05) >= d.quantile_at(0.2));
}

#[test]
fn regression_band_is_affine_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = design(60, &mut rng);
    let y: Vec<f64> = (0..60).map(|i| 1.0 + x.row(i)[2] + normal(&mut rng)).collect();
    let (c, gamma) = (3.5, [10.0, -2.0, 0.25]);
    let y2: Vec<f64> =
        (0..60).map(|i| c * y[i] + x.row(i).iter().zip(gamma).map(|(a, b)| a * b).sum::<f64>()).collect();
    let target = grid_target();
    let a = regression_scb(&x, &y, &target, Model::Linear, &cfg(200, 6)).unwrap();
    let b = regression_scb(&x, &y2, &target, Model::Linear, &cfg(200, 6)).unwrap();
    assert!(close(b.max_stat.values(), a.max_stat.values(), 1e-8));
    let shift: Vec<f64> = (0..target.len())
        .map(|s| {
            let row = [1.0, (s % 3) as f64 - 1.0, (s / 3) as f64 - 1.0];
            row.iter().zip(gamma).map(|(a, b)| a * b).sum()
        })
        .collect();
    let map = |f: &Field| -> Vec<f64> { f.values().iter().zip(&shift).map(|(v, h)| c * v + h).collect() };
    assert!(close(b.band.lower().values(), &map(a.band.lower()), 1e-8));
    assert!(close(b.band.upper().values(), &map(a.band.upper()), 1e-8));
}

#[test]
fn multiplier_band_is_affine_equivariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let sample = paths(15, 25, &mut rng);
    let c = 0.2;
    let h: Vec<f64> = (0..25).map(|s| (s as f64).cos()).collect();
    let moved: Vec<f64> =
        sample.values().iter().enumerate().map(|(k, v)| c * v + h[k % 25]).collect();
    let moved = FunctionalSample::new(sample.domain().clone(), 15, moved).unwrap();
    let a = multiplier_scb(&sample, &cfg(300, 7)).unwrap();
    let b = multiplier_scb(&moved, &cfg(300, 7)).unwrap();
    assert!(close(b.max_stat.values(), a.max_stat.values(), 1e-9));
    let map = |f: &Field| -> Vec<f64> { f.values().iter().zip(&h).map(|(v, h)| c * v + h).collect() };
    assert!(close(b.band.lower().values(), &map(a.band.lower()), 1e-9));
    assert!(close(b.band.upper().values(), &map(a.band.upper()), 1e-9));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x = design(70, &mut rng);
    let y: Vec<f64> = (0..70).map(|i| f64::from(u8::from(x.row(i)[1] + normal(&mut rng) > 0.0))).collect();
    let sample = paths(12, 50, &mut rng);
    let target = grid_target();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let r = regression_scb(&x, &y, &target, Model::Logistic, &cfg(300, 8)).unwrap();
            let m = multiplier_scb(&sample, &cfg(300, 8)).unwrap();
            (r.max_stat.values().to_vec(), r.band.upper().values().to_vec(), m.max_stat.values().to_vec())
        })
    };
    let one = run(1);
    for threads in [2, 4, 7] {
        assert_eq!(run(threads), one);
    }
}

#[test]
fn quantile_is_an_order_statistic_of_the_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let sample = paths(10, 20, &mut rng);
    let out = multiplier_scb(&sample, &cfg(1000, 1)).unwrap();
    let v = out.max_stat.values();
    assert!(v.windows(2).all(|w| w[0] <= w[1]));
    assert_eq!(out.max_stat.quantile(), v[949]);
    // a max over 20 correlated t-like statistics sits above the pointwise normal quantile
    assert!(out.max_stat.quantile() > 1.96 && out.max_stat.quantile() < 5.0);
}

#[test]
fn single_point_band_has_nominal_coverage() {
    let domain = line(1);
    let reps = 1000;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut covered = 0;
    for r in 0..reps {
        let v: Vec<f64> = (0..40).map(|_| 2.0 + normal(&mut rng)).collect();
        let s = FunctionalSample::new(domain.clone(), 40, v).unwrap();
        let out = multiplier_scb(&s, &cfg(300, r)).unwrap();
        if out.band.lower().values()[0] <= 2.0 && 2.0 <= out.band.upper().values()[0] {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    let se = (0.95f64 * 0.05 / reps as f64).sqrt();
    assert!((rate - 0.95).abs() < 3.0 * se, "{rate}");
}

#[test]
fn constant_paths_are_rejected() {
    let s = FunctionalSample::new(line(3), 4, vec![1.0; 12]).unwrap();
    assert!(matches!(multiplier_scb(&s, &cfg(100, 0)), Err(Error::DegenerateSe { .. })));
}

#[test]
fn too_few_resamples_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let sample = paths(5, 4, &mut rng);
    assert!(multiplier_scb(&sample, &cfg(99, 0)).is_err());
    let bad = BootstrapConfig { alpha: 1.0, ..cfg(100, 0) };
    assert!(multiplier_scb(&sample, &bad).is_err());
}
