//! Random band/truth instances and brute-force containment oracles.

use std::sync::Arc;

use invset_core::inversion::band_from_vecs;
use invset_core::{Band, Domain, Field};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub struct Instance {
    pub band: Band,
    pub truth: Field,
}

pub fn domain(n: usize) -> Arc<Domain> {
    Arc::new(Domain::from_coords(vec!["s".into()], (0..n).map(|i| vec![i as f64]).collect()).unwrap())
}

/// Half continuous draws, half from a small lattice so that ties are common.
pub fn value(rng: &mut ChaCha8Rng) -> f64 {
    if rng.random_bool(0.5) {
        rng.random_range(-2.0..2.0)
    } else {
        [-1.0, -0.5, 0.0, 0.5, 1.0][rng.random_range(0..5)]
    }
}

pub fn instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(1..=20);
    let d = domain(n);
    let mut lo = Vec::with_capacity(n);
    let mut hi = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    // some instances cover the truth, most violate it somewhere
    let cover = rng.random_bool(0.3);
    for _ in 0..n {
        let (a, b) = (value(rng), value(rng));
        let (l, u) = if a <= b { (a, b) } else { (b, a) };
        lo.push(l);
        hi.push(u);
        mu.push(if cover { l + (u - l) * rng.random::<f64>() } else { value(rng) });
    }
    Instance { band: band_from_vecs(d.clone(), lo, hi, 0.05).unwrap(), truth: Field::new(d, mu).unwrap() }
}

pub fn instances(seed: u64, count: usize) -> impl Iterator<Item = Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(move |_| instance(&mut rng))
}

pub fn breakpoints(i: &Instance) -> Vec<f64> {
    let mut v: Vec<f64> = [i.band.lower().values(), i.band.upper().values(), i.truth.values()].concat();
    v.sort_by(f64::total_cmp);
    v.dedup();
    v
}

pub fn sci_oracle(i: &Instance) -> bool {
    let (l, u, m) = (i.band.lower().values(), i.band.upper().values(), i.truth.values());
    (0..m.len()).all(|s| l[s] <= m[s] && m[s] <= u[s])
}

/// Containment of excursion sets materialized point by point, level by level.
/// `strict` uses `>` / `<` in place of `>=` / `<=`.
pub fn excursion_oracle(i: &Instance, levels: &[f64], upper: bool, strict: bool) -> bool {
    let (l, u, m) = (i.band.lower().values(), i.band.upper().values(), i.truth.values());
    let ge = |x: f64, c: f64| if strict { x > c } else { x >= c };
    let le = |x: f64, c: f64| if strict { x < c } else { x <= c };
    levels.iter().all(|&c| {
        (0..m.len()).all(|s| {
            let (inner, truth, outer) = if upper {
                (ge(l[s], c), ge(m[s], c), ge(u[s], c))
            } else {
                (le(u[s], c), le(m[s], c), le(l[s], c))
            };
            (!inner || truth) && (!truth || outer)
        })
    })
}

pub fn interval_oracle(i: &Instance, pairs: &[(f64, f64)]) -> bool {
    let (l, u, m) = (i.band.lower().values(), i.band.upper().values(), i.truth.values());
    pairs.iter().all(|&(a, b)| {
        (0..m.len()).all(|s| {
            let truth = a <= m[s] && m[s] <= b;
            let inner = l[s] >= a && u[s] <= b;
            let outer = u[s] >= a && l[s] <= b;
            (!inner || truth) && (!truth || outer)
        })
    })
}

/// Every pair `a < b` of breakpoints, plus sentinels beyond both ends.
pub fn interval_pairs(i: &Instance) -> Vec<(f64, f64)> {
    let mut v = breakpoints(i);
    let (min, max) = (v[0], v[v.len() - 1]);
    v.insert(0, min - 10.0);
    v.push(max + 10.0);
    let mut pairs = Vec::new();
    for a in 0..v.len() {
        for b in a + 1..v.len() {
            pairs.push((v[a], v[b]));
        }
    }
    pairs
}
