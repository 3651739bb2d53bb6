//! Finite domains and the objects that live on them.
//!
//! All set logic is positional: an [`IndexSet`] is a membership vector aligned
//! with its [`Domain`]'s point order. Coordinates are carried only so results
//! can be written out and plotted.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};

/// One point of a domain: a coordinate vector or an opaque label.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Coords(Vec<f64>),
    Label(String),
}

impl Point {
    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Coords(c) => Some(c),
            Point::Label(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    axis_names: Vec<String>,
    points: Vec<Point>,
}

impl Domain {
    /// Coordinate domain. `axis_names.len()` is the dimension.
    pub fn from_coords(axis_names: Vec<String>, coords: Vec<Vec<f64>>) -> Result<Self> {
        let d = axis_names.len();
        if d == 0 {
            return Err(Error::InvalidDomain("coordinate domain needs at least one axis".into()));
        }
        if coords.is_empty() {
            return Err(Error::InvalidDomain("domain has no points".into()));
        }
        let mut seen = HashSet::with_capacity(coords.len());
        for (i, c) in coords.iter().enumerate() {
            if c.len() != d {
                return Err(Error::InvalidDomain(format!(
                    "point {i} has {} coordinates, expected {d}",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDomain(format!("point {i} has a non-finite coordinate")));
            }
            // -0.0 and 0.0 are the same location
            let key: Vec<u64> = c.iter().map(|v| (v + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(Error::InvalidDomain(format!("duplicate point at index {i}")));
            }
        }
        Ok(Self {
            axis_names,
            points: coords.into_iter().map(Point::Coords).collect(),
        })
    }

    /// Discrete domain of named points (e.g. regression coefficients).
    pub fn labeled<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidDomain("domain has no points".into()));
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidDomain(format!("duplicate label {l:?} at index {i}")));
            }
        }
        Ok(Self {
            axis_names: vec!["label".into()],
            points: labels.into_iter().map(Point::Label).collect(),
        })
    }

    /// Cartesian product of per-axis coordinates. The first axis varies slowest.
    pub fn cartesian(axis_names: Vec<String>, axes: &[Vec<f64>]) -> Result<Self> {
        if axis_names.len() != axes.len() {
            return Err(Error::InvalidDomain("one name per axis required".into()));
        }
        let total: usize = axes.iter().map(Vec::len).product();
        let mut coords = Vec::with_capacity(total);
        let mut idx = vec![0usize; axes.len()];
        if total > 0 {
            loop {
                coords.push(idx.iter().zip(axes).map(|(&i, ax)| ax[i]).collect());
                let mut k = axes.len();
                loop {
                    if k == 0 {
                        return Self::from_coords(axis_names, coords);
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < axes[k].len() {
                        break;
                    }
                    idx[k] = 0;
                }
            }
        }
        Self::from_coords(axis_names, coords)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn axis_names(&self) -> &[String] {
        &self.axis_names
    }

    pub fn is_labeled(&self) -> bool {
        matches!(self.points.first(), Some(Point::Label(_)))
    }
}

/// Same domain: identical allocation or structurally equal.
pub(crate) fn same_domain(a: &Arc<Domain>, b: &Arc<Domain>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A finite real value at every point of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidField(format!(
                "{} values for a domain of {} points",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at point {i}")));
        }
        Ok(Self { domain, values })
    }

    pub fn constant(domain: Arc<Domain>, value: f64) -> Result<Self> {
        let n = domain.len();
        Self::new(domain, vec![value; n])
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
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

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Pointwise transform. Fails if `g` produces a non-finite value.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.domain.clone(), self.values.iter().map(|&v| g(v)).collect())
    }

    pub fn shares_domain(&self, other: &Field) -> bool {
        same_domain(&self.domain, &other.domain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `f(s) >= c`
    AtLeast,
    /// `f(s) <= c`
    AtMost,
}

/// Lower and upper simultaneous bounds at nominal level `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    lower: Field,
    upper: Field,
    alpha: f64,
}

impl Band {
    pub fn new(lower: Field, upper: Field, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidBand(format!("alpha = {alpha} outside (0, 1)")));
        }
        if !lower.shares_domain(&upper) {
            return Err(Error::DomainMismatch);
        }
        if let Some(i) = lower
            .values
            .iter()
            .zip(&upper.values)
            .position(|(l, u)| l > u)
        {
            return Err(Error::InvalidBand(format!(
                "lower {} exceeds upper {} at point {i}",
                lower.values[i], upper.values[i]
            )));
        }
        Ok(Self { lower, upper, alpha })
    }

    /// `center ± half_width` pointwise.
    pub fn symmetric(center: &Field, half_width: &Field, alpha: f64) -> Result<Self> {
        if !center.shares_domain(half_width) {
            return Err(Error::DomainMismatch);
        }
        let lo = center.values.iter().zip(&half_width.values).map(|(c, h)| c - h).collect();
        let hi = center.values.iter().zip(&half_width.values).map(|(c, h)| c + h).collect();
        Self::new(
            Field::new(center.domain.clone(), lo)?,
            Field::new(center.domain.clone(), hi)?,
            alpha,
        )
    }

    pub fn lower(&self) -> &Field {
        &self.lower
    }

    pub fn upper(&self) -> &Field {
        &self.upper
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn domain(&self) -> &Arc<Domain> {
        self.lower.domain()
    }

    /// Apply a non-decreasing map to both endpoints.
    pub fn map_monotone(&self, g: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.lower.map(&g)?, self.upper.map(&g)?, self.alpha)
    }
}

/// Subset of a domain, as one membership flag per point.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexSet {
    domain: Arc<Domain>,
    members: Vec<bool>,
}

impl IndexSet {
    pub fn new(domain: Arc<Domain>, members: Vec<bool>) -> Result<Self> {
        if members.len() != domain.len() {
            return Err(Error::InvalidDomain(format!(
                "{} membership flags for a domain of {} points",
                members.len(),
                domain.len()
            )));
        }
        Ok(Self { domain, members })
    }

    pub fn empty(domain: Arc<Domain>) -> Self {
        let n = domain.len();
        Self { domain, members: vec![false; n] }
    }

    pub fn full(domain: Arc<Domain>) -> Self {
        let n = domain.len();
        Self { domain, members: vec![true; n] }
    }

    /// Set from point indices.
    pub fn from_indices(domain: Arc<Domain>, indices: &[usize]) -> Result<Self> {
        let mut members = vec![false; domain.len()];
        for &i in indices {
            *members.get_mut(i).ok_or_else(|| {
                Error::InvalidDomain(format!("index {i} outside a domain of {} points", domain.len()))
            })? = true;
        }
        Ok(Self { domain, members })
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn members(&self) -> &[bool] {
        &self.members
    }

    pub fn contains(&self, index: usize) -> bool {
        self.members.get(index).copied().unwrap_or(false)
    }

    /// Number of member points.
    pub fn count(&self) -> usize {
        self.members.iter().filter(|&&m| m).count()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
            .collect()
    }

    pub fn is_subset(&self, other: &IndexSet) -> Result<bool> {
        self.check_domain(other)?;
        Ok(self.members.iter().zip(&other.members).all(|(&a, &b)| !a || b))
    }

    pub fn complement(&self) -> IndexSet {
        IndexSet {
            domain: self.domain.clone(),
            members: self.members.iter().map(|m| !m).collect(),
        }
    }

    pub fn intersection(&self, other: &IndexSet) -> Result<IndexSet> {
        self.check_domain(other)?;
        Ok(self.zip_with(other, |a, b| a && b))
    }

    pub fn union(&self, other: &IndexSet) -> Result<IndexSet> {
        self.check_domain(other)?;
        Ok(self.zip_with(other, |a, b| a || b))
    }

    fn zip_with(&self, other: &IndexSet, op: impl Fn(bool, bool) -> bool) -> IndexSet {
        IndexSet {
            domain: self.domain.clone(),
            members: self.members.iter().zip(&other.members).map(|(&a, &b)| op(a, b)).collect(),
        }
    }

    fn check_domain(&self, other: &IndexSet) -> Result<()> {
        if same_domain(&self.domain, &other.domain) {
            Ok(())
        } else {
            Err(Error::DomainMismatch)
        }
    }
}

/// `n` sample paths observed on a shared domain, stored row-major (`n x m`).
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSample {
    domain: Arc<Domain>,
    n: usize,
    values: Vec<f64>,
}

impl FunctionalSample {
    pub fn new(domain: Arc<Domain>, n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * domain.len() {
            return Err(Error::InvalidField(format!(
                "{} values for {n} paths on {} points",
                values.len(),
                domain.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value in path {}", i / domain.len())));
        }
        Ok(Self { domain, n, values })
    }

    pub fn from_fields(fields: &[Field]) -> Result<Self> {
        let first = fields
            .first()
            .ok_or_else(|| Error::InvalidField("no sample paths".into()))?;
        if fields.iter().any(|f| !f.shares_domain(first)) {
            return Err(Error::DomainMismatch);
        }
        let values = fields.iter().flat_map(|f| f.values.iter().copied()).collect();
        Self::new(first.domain.clone(), fields.len(), values)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    /// Number of sample paths.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn path(&self, i: usize) -> &[f64] {
        let m = self.domain.len();
        &self.values[i * m..(i + 1) * m]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn field(&self, i: usize) -> Field {
        Field { domain: self.domain.clone(), values: self.path(i).to_vec() }
    }
}

/// `f^{-1}[c, inf)` or `f^{-1}(-inf, c]`, with exact comparisons.
pub fn threshold_set(f: &Field, c: f64, direction: Direction) -> IndexSet {
    let members = match direction {
        Direction::AtLeast => f.values.iter().map(|&v| v >= c).collect(),
        Direction::AtMost => f.values.iter().map(|&v| v <= c).collect(),
    };
    IndexSet { domain: f.domain.clone(), members }
}
