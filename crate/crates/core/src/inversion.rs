//! Inverting a simultaneous band into inner/outer confidence sets.
//!
//! For a band `(lo, hi)` and level `c`:
//!
//! | target              | inner                       | outer                       |
//! |---------------------|-----------------------------|-----------------------------|
//! | `mu^{-1}[c, inf)`   | `lo >= c`                   | `hi >= c`                   |
//! | `mu^{-1}(-inf, c]`  | `hi <= c`                   | `lo <= c`                   |
//! | `mu^{-1}[a, b]`     | `lo >= a && hi <= b`        | `hi >= a && lo <= b`        |
//!
//! If the band covers the truth everywhere, every inner set is inside the true
//! inverse set and every outer set contains it, simultaneously for all levels;
//! the converse also holds. On a finite domain it is enough to check levels at
//! the breakpoints (the distinct values of `lo`, `hi` and the truth).
//!
//! The containment checks here do not materialise sets: for each point they
//! ask whether any level of a sorted grid falls into the half-open interval
//! that would witness a violation there, which costs `O(n log m)`.

use std::sync::Arc;

use crate::domain::{same_domain, threshold_set, Band, Direction, Domain, Field, IndexSet};
use crate::error::{Error, Result};

/// Inner and outer sets for one excursion level.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcursionCs {
    pub level: f64,
    pub direction: Direction,
    pub inner: IndexSet,
    pub outer: IndexSet,
}

/// Inner and outer sets for the inverse interval set `mu^{-1}[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalCs {
    pub a: f64,
    pub b: f64,
    pub inner: IndexSet,
    pub outer: IndexSet,
}

pub fn upper_excursion_cs(band: &Band, c: f64) -> ExcursionCs {
    ExcursionCs {
        level: c,
        direction: Direction::AtLeast,
        inner: threshold_set(band.lower(), c, Direction::AtLeast),
        outer: threshold_set(band.upper(), c, Direction::AtLeast),
    }
}

pub fn lower_excursion_cs(band: &Band, c: f64) -> ExcursionCs {
    ExcursionCs {
        level: c,
        direction: Direction::AtMost,
        inner: threshold_set(band.upper(), c, Direction::AtMost),
        outer: threshold_set(band.lower(), c, Direction::AtMost),
    }
}

pub fn interval_cs(band: &Band, a: f64, b: f64) -> Result<IntervalCs> {
    check_pair(a, b)?;
    let lo = band.lower().values();
    let hi = band.upper().values();
    let domain = band.domain().clone();
    let inner = lo.iter().zip(hi).map(|(&l, &u)| l >= a && u <= b).collect();
    let outer = lo.iter().zip(hi).map(|(&l, &u)| u >= a && l <= b).collect();
    Ok(IntervalCs {
        a,
        b,
        inner: IndexSet::new(domain.clone(), inner)?,
        outer: IndexSet::new(domain, outer)?,
    })
}

fn check_pair(a: f64, b: f64) -> Result<()> {
    // also rejects NaN
    if a < b {
        Ok(())
    } else {
        Err(Error::InvalidInterval { a, b })
    }
}

fn check_truth(band: &Band, truth: &Field) -> Result<()> {
    if same_domain(band.domain(), truth.domain()) {
        Ok(())
    } else {
        Err(Error::DomainMismatch)
    }
}

/// The band covers `truth` at every point.
pub fn sci_event(band: &Band, truth: &Field) -> Result<bool> {
    check_truth(band, truth)?;
    Ok(band
        .lower()
        .values()
        .iter()
        .zip(band.upper().values())
        .zip(truth.values())
        .all(|((&l, &u), &m)| l <= m && m <= u))
}

/// For every `c` in `levels`: `lo^{-1}[c,inf) ⊆ mu^{-1}[c,inf) ⊆ hi^{-1}[c,inf)`.
pub fn containment_event_upper(band: &Band, truth: &Field, levels: &[f64]) -> Result<bool> {
    LevelSet::new(levels.to_vec())?.upper_event(band, truth)
}

/// For every `c` in `levels`: `hi^{-1}(-inf,c] ⊆ mu^{-1}(-inf,c] ⊆ lo^{-1}(-inf,c]`.
pub fn containment_event_lower(band: &Band, truth: &Field, levels: &[f64]) -> Result<bool> {
    LevelSet::new(levels.to_vec())?.lower_event(band, truth)
}

/// For every `(a, b)` in `pairs`: `CS_in[a,b] ⊆ mu^{-1}[a,b] ⊆ CS_out[a,b]`.
///
/// Evaluated pair by pair. For a full grid of pairs use [`IntervalGrid`].
pub fn containment_event_interval(band: &Band, truth: &Field, pairs: &[(f64, f64)]) -> Result<bool> {
    check_truth(band, truth)?;
    if pairs.is_empty() {
        return Err(Error::EmptyLevels);
    }
    for &(a, b) in pairs {
        check_pair(a, b)?;
    }
    let lo = band.lower().values();
    let hi = band.upper().values();
    let mu = truth.values();
    Ok(pairs.iter().all(|&(a, b)| {
        (0..mu.len()).all(|s| {
            let in_truth = a <= mu[s] && mu[s] <= b;
            let in_inner = lo[s] >= a && hi[s] <= b;
            let in_outer = hi[s] >= a && lo[s] <= b;
            (!in_inner || in_truth) && (!in_truth || in_outer)
        })
    }))
}

/// A finite, sorted, duplicate-free set of levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    values: Vec<f64>,
}

impl LevelSet {
    pub fn new(mut values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyLevels);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("levels must be finite".into()));
        }
        values.sort_by(f64::total_cmp);
        values.dedup();
        Ok(Self { values })
    }

    /// `count` equally spaced levels from `lo` to `hi` inclusive.
    ///
    /// Level `i` is `lo + (i / (count - 1)) * (hi - lo)`, with the ratio
    /// rounded once, so grids whose spacings divide each other share their
    /// common levels bit for bit. A zero-width range yields one level.
    pub fn equidistant(lo: f64, hi: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::EmptyLevels);
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidConfig(format!("bad level range [{lo}, {hi}]")));
        }
        if count == 1 || lo == hi {
            return Self::new(vec![lo]);
        }
        let span = hi - lo;
        let last = count - 1;
        let values = (0..count)
            .map(|i| if i == last { hi } else { lo + (i as f64 / last as f64) * span })
            .collect();
        Self::new(values)
    }

    /// Every distinct value of the band endpoints and the truth.
    pub fn breakpoints(band: &Band, truth: &Field) -> Result<Self> {
        check_truth(band, truth)?;
        let mut v = Vec::with_capacity(3 * truth.len());
        v.extend_from_slice(band.lower().values());
        v.extend_from_slice(band.upper().values());
        v.extend_from_slice(truth.values());
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn hits_open_closed(&self, lo: f64, hi: f64) -> bool {
        let i = self.values.partition_point(|&v| v <= lo);
        i < self.values.len() && self.values[i] <= hi
    }

    fn hits_closed_open(&self, lo: f64, hi: f64) -> bool {
        let i = self.values.partition_point(|&v| v < lo);
        i < self.values.len() && self.values[i] < hi
    }

    /// Upper-excursion containment at every level of the set.
    pub fn upper_event(&self, band: &Band, truth: &Field) -> Result<bool> {
        check_truth(band, truth)?;
        Ok(self.upper_event_raw(band.lower().values(), band.upper().values(), truth.values()))
    }

    /// Lower-excursion containment at every level of the set.
    pub fn lower_event(&self, band: &Band, truth: &Field) -> Result<bool> {
        check_truth(band, truth)?;
        Ok(self.lower_event_raw(band.lower().values(), band.upper().values(), truth.values()))
    }

    pub(crate) fn upper_event_raw(&self, lo: &[f64], hi: &[f64], mu: &[f64]) -> bool {
        // violated at s iff some level c has mu < c <= lo, or hi < c <= mu
        !(0..mu.len()).any(|s| {
            (lo[s] > mu[s] && self.hits_open_closed(mu[s], lo[s]))
                || (mu[s] > hi[s] && self.hits_open_closed(hi[s], mu[s]))
        })
    }

    pub(crate) fn lower_event_raw(&self, lo: &[f64], hi: &[f64], mu: &[f64]) -> bool {
        // violated at s iff some level c has hi <= c < mu, or mu <= c < lo
        !(0..mu.len()).any(|s| {
            (mu[s] > hi[s] && self.hits_closed_open(hi[s], mu[s]))
                || (lo[s] > mu[s] && self.hits_closed_open(mu[s], lo[s]))
        })
    }
}

/// Every pair `(a, b)` with `a < b` drawn from a sorted grid of values.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalGrid {
    grid: LevelSet,
}

impl IntervalGrid {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        Ok(Self { grid: LevelSet::new(values)? })
    }

    /// `lo, lo + step, ...` up to `hi`.
    pub fn with_step(lo: f64, hi: f64, step: f64) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidConfig(format!("interval step {step} must be positive")));
        }
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidConfig(format!("bad interval range [{lo}, {hi}]")));
        }
        // tolerate the rounding in (hi - lo) / step
        let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
        Self::new((0..count).map(|i| lo + i as f64 * step).collect())
    }

    /// Breakpoints plus one sentinel below and one above them all.
    ///
    /// The sentinels stand in for `a = -inf` and `b = +inf`; without them a
    /// band that misses the truth only at the extreme breakpoints can go
    /// undetected, since no pair `a < b` would bracket the violation.
    pub fn breakpoints(band: &Band, truth: &Field) -> Result<Self> {
        let mut v = LevelSet::breakpoints(band, truth)?.values;
        let (min, max) = (v[0], v[v.len() - 1]);
        v.push(min - min.abs().max(1.0));
        v.push(max + max.abs().max(1.0));
        Self::new(v)
    }

    pub fn values(&self) -> &[f64] {
        self.grid.values()
    }

    /// Number of `(a, b)` pairs with `a < b`.
    pub fn pair_count(&self) -> usize {
        let m = self.grid.len();
        m * (m - 1) / 2
    }

    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        let v = self.grid.values();
        (0..v.len()).flat_map(move |i| v[i + 1..].iter().map(move |&b| (v[i], b)))
    }

    pub fn event(&self, band: &Band, truth: &Field) -> Result<bool> {
        check_truth(band, truth)?;
        Ok(self.event_raw(band.lower().values(), band.upper().values(), truth.values()))
    }

    pub(crate) fn event_raw(&self, lo: &[f64], hi: &[f64], mu: &[f64]) -> bool {
        let g = self.grid.values();
        let (gmin, gmax) = (g[0], g[g.len() - 1]);
        // smallest grid value in (x, y]
        let first_above = |x: f64, y: f64| {
            let i = g.partition_point(|&v| v <= x);
            (i < g.len() && g[i] <= y).then(|| g[i])
        };
        // largest grid value in [x, y)
        let last_below = |x: f64, y: f64| {
            let i = g.partition_point(|&v| v < y);
            (i > 0 && g[i - 1] >= x).then(|| g[i - 1])
        };
        !(0..mu.len()).any(|s| {
            let (l, u, m) = (lo[s], hi[s], mu[s]);
            // s in CS_in[a,b] but m < a
            let inner_low = first_above(m, l).is_some_and(|a| gmax > a && gmax >= u);
            // s in CS_in[a,b] but m > b
            let inner_high = last_below(u, m).is_some_and(|b| gmin < b && gmin <= l);
            // m in [a,b] but u < a
            let outer_low = first_above(u, m).is_some_and(|a| gmax > a && gmax >= m);
            // m in [a,b] but l > b
            let outer_high = last_below(m, l).is_some_and(|b| gmin < b && gmin <= m);
            inner_low || inner_high || outer_low || outer_high
        })
    }
}

/// Convenience for tests and the CLI: a band from raw endpoint vectors.
pub fn band_from_vecs(domain: Arc<Domain>, lo: Vec<f64>, hi: Vec<f64>, alpha: f64) -> Result<Band> {
    Band::new(Field::new(domain.clone(), lo)?, Field::new(domain, hi)?, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Arc<Domain> {
        Arc::new(
            Domain::from_coords(vec!["s".into()], (0..n).map(|i| vec![i as f64]).collect()).unwrap(),
        )
    }

    fn example_band() -> Band {
        band_from_vecs(line(3), vec![0.5, 1.5, -0.2], vec![1.0, 2.5, 0.4], 0.05).unwrap()
    }

    fn set(band: &Band, idx: &[usize]) -> IndexSet {
        IndexSet::from_indices(band.domain().clone(), idx).unwrap()
    }

    #[test]
    fn upper_example() {
        let band = example_band();
        let cs = upper_excursion_cs(&band, 0.9);
        assert_eq!(cs.inner, set(&band, &[1]));
        assert_eq!(cs.outer, set(&band, &[0, 1]));
    }

    #[test]
    fn lower_example() {
        let band = example_band();
        let cs = lower_excursion_cs(&band, 0.9);
        assert_eq!(cs.inner, set(&band, &[2]));
        assert_eq!(cs.outer, set(&band, &[0, 2]));
    }

    #[test]
    fn zero_width_band_reproduces_truth_sets() {
        let d = line(5);
        let mu = Field::new(d.clone(), vec![0.3, -1.0, 2.0, 0.3, 0.7]).unwrap();
        let band = Band::new(mu.clone(), mu.clone(), 0.05).unwrap();
        for c in [-2.0, 0.3, 0.5, 2.0, 3.0] {
            let up = upper_excursion_cs(&band, c);
            let truth = threshold_set(&mu, c, Direction::AtLeast);
            assert_eq!(up.inner, truth);
            assert_eq!(up.outer, truth);
            let low = lower_excursion_cs(&band, c);
            let truth = threshold_set(&mu, c, Direction::AtMost);
            assert_eq!(low.inner, truth);
            assert_eq!(low.outer, truth);
        }
        let iv = interval_cs(&band, 0.0, 0.7).unwrap();
        let expect = IndexSet::from_indices(d, &[0, 3, 4]).unwrap();
        assert_eq!(iv.inner, expect);
        assert_eq!(iv.outer, expect);
    }

    #[test]
    fn interval_is_intersection_of_excursions() {
        let band = example_band();
        for (a, b) in [(0.0, 1.0), (0.45, 2.5), (-1.0, 0.4), (0.9, 3.0)] {
            let iv = interval_cs(&band, a, b).unwrap();
            let up = upper_excursion_cs(&band, a);
            let low = lower_excursion_cs(&band, b);
            assert_eq!(iv.inner, up.inner.intersection(&low.inner).unwrap());
            assert_eq!(iv.outer, up.outer.intersection(&low.outer).unwrap());
        }
    }

    #[test]
    fn interval_requires_ordered_pair() {
        let band = example_band();
        assert!(matches!(interval_cs(&band, 1.0, 1.0), Err(Error::InvalidInterval { .. })));
        assert!(interval_cs(&band, 2.0, 1.0).is_err());
        assert!(interval_cs(&band, f64::NAN, 1.0).is_err());
        let mu = Field::new(band.domain().clone(), vec![0.7, 2.0, 0.1]).unwrap();
        assert!(containment_event_interval(&band, &mu, &[(0.0, 1.0), (1.0, 0.5)]).is_err());
    }

    #[test]
    fn covered_truth_passes_every_event() {
        let band = example_band();
        let mid: Vec<f64> = band
            .lower()
            .values()
            .iter()
            .zip(band.upper().values())
            .map(|(l, u)| 0.5 * (l + u))
            .collect();
        let mu = Field::new(band.domain().clone(), mid).unwrap();
        let levels = [-1.0, 0.0, 0.5, 0.9, 1.7, 3.0];
        assert!(sci_event(&band, &mu).unwrap());
        assert!(containment_event_upper(&band, &mu, &levels).unwrap());
        assert!(containment_event_lower(&band, &mu, &levels).unwrap());
        assert!(containment_event_interval(&band, &mu, &[(0.0, 1.0), (-1.0, 3.0)]).unwrap());
    }

    #[test]
    fn violation_above_upper_bound_is_detected() {
        let band = example_band();
        // truth exceeds the upper bound 2.5 at point 1
        let mu = Field::new(band.domain().clone(), vec![0.7, 2.8, 0.1]).unwrap();
        assert!(!sci_event(&band, &mu).unwrap());
        assert!(!containment_event_upper(&band, &mu, &[2.6]).unwrap());
        assert!(!containment_event_upper(&band, &mu, &[2.8]).unwrap());
        // levels outside (2.5, 2.8] cannot witness it
        assert!(containment_event_upper(&band, &mu, &[2.5, 2.9, 0.0]).unwrap());
        assert!(!containment_event_lower(&band, &mu, &[2.5]).unwrap());
    }

    #[test]
    fn domain_mismatch_is_an_error() {
        let band = example_band();
        let mu = Field::new(line(4), vec![0.0; 4]).unwrap();
        assert!(matches!(sci_event(&band, &mu), Err(Error::DomainMismatch)));
        assert!(containment_event_upper(&band, &mu, &[0.0]).is_err());
        assert!(containment_event_upper(&band, &Field::new(line(3), vec![0.7, 2.0, 0.1]).unwrap(), &[])
            .is_err());
    }

    #[test]
    fn equidistant_levels() {
        let l = LevelSet::equidistant(0.0, 1.0, 5).unwrap();
        assert_eq!(l.values(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(LevelSet::equidistant(0.3, 0.3, 1000).unwrap().values(), &[0.3]);
        assert_eq!(LevelSet::equidistant(-1.0, 2.0, 1).unwrap().values(), &[-1.0]);
        // nested grids share their common points exactly
        let coarse = LevelSet::equidistant(-0.613, 0.871, 4).unwrap();
        let fine = LevelSet::equidistant(-0.613, 0.871, 10).unwrap();
        assert!(coarse.values().iter().all(|c| fine.values().contains(c)));
    }

    #[test]
    fn interval_grid_with_step() {
        let g = IntervalGrid::with_step(0.0, 1.0, 0.25).unwrap();
        assert_eq!(g.values().len(), 5);
        assert_eq!(g.pair_count(), 10);
        assert_eq!(g.pairs().count(), 10);
        assert!(g.pairs().all(|(a, b)| a < b));
        let single = IntervalGrid::with_step(0.5, 0.5, 0.005).unwrap();
        assert_eq!(single.pair_count(), 0);
    }

    #[test]
    fn sentinels_catch_violations_at_extreme_breakpoints() {
        // truth 0 below a zero-width band at 1: the only breakpoint pair is (0, 1),
        // which brackets both and hides the miss
        let d = line(1);
        let band = band_from_vecs(d.clone(), vec![1.0], vec![1.0], 0.05).unwrap();
        let mu = Field::new(d, vec![0.0]).unwrap();
        assert!(containment_event_interval(&band, &mu, &[(0.0, 1.0)]).unwrap());
        assert!(!IntervalGrid::breakpoints(&band, &mu).unwrap().event(&band, &mu).unwrap());
        assert!(!sci_event(&band, &mu).unwrap());
    }
}
