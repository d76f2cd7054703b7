use std::io::Write;
use std::sync::Arc;

use super::GridDomain;
use crate::{Error, Result};

/// Node values on a [`GridDomain`], zero outside the inside mask.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    domain: Arc<GridDomain>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(domain: Arc<GridDomain>) -> Self {
        let values = vec![0.0; domain.len()];
        Self { domain, values }
    }

    /// Samples `f(x, y)` on inside nodes.
    pub fn from_fn(domain: Arc<GridDomain>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = vec![0.0; domain.len()];
        for j in 0..domain.ny() {
            for i in 0..domain.nx() {
                let k = domain.idx(i, j);
                if domain.is_inside(k) {
                    let (x, y) = domain.node_position(i, j);
                    values[k] = f(x, y);
                }
            }
        }
        Self { domain, values }
    }

    /// Wraps raw values, rejecting non-finite entries and nonzero values
    /// outside the mask.
    pub fn from_values(domain: Arc<GridDomain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::InvalidArgument(format!(
                "field of length {} on a raster of {} nodes",
                values.len(),
                domain.len()
            )));
        }
        for (k, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite value at node {k}")));
            }
            if v != 0.0 && !domain.is_inside(k) {
                return Err(Error::InvalidArgument(format!("nonzero value outside at node {k}")));
            }
        }
        Ok(Self { domain, values })
    }

    pub fn indicator(region: &BinaryRegion) -> Self {
        let values = region.mask.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        Self { domain: region.domain.clone(), values }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            domain: self.domain.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
        }
    }

    /// Maximum of `|u|`.
    pub fn sup(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Subset of the inside mask.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryRegion {
    domain: Arc<GridDomain>,
    mask: Vec<bool>,
}

impl BinaryRegion {
    pub fn new(domain: Arc<GridDomain>, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != domain.len() {
            return Err(Error::InvalidArgument("region mask has the wrong length".into()));
        }
        if mask.iter().zip(domain.inside()).any(|(&m, &d)| m && !d) {
            return Err(Error::InvalidArgument("region leaves the domain".into()));
        }
        Ok(Self { domain, mask })
    }

    pub fn full(domain: Arc<GridDomain>) -> Self {
        let mask = domain.inside().to_vec();
        Self { domain, mask }
    }

    pub fn empty(domain: Arc<GridDomain>) -> Self {
        let mask = vec![false; domain.len()];
        Self { domain, mask }
    }

    /// `{u > t}` restricted to the domain.
    pub fn superlevel(u: &ScalarField, t: f64) -> Self {
        let domain = u.domain.clone();
        let mask = u
            .values
            .iter()
            .zip(domain.inside())
            .map(|(&v, &d)| d && v > t)
            .collect();
        Self { domain, mask }
    }

    pub(crate) fn from_mask_unchecked(domain: Arc<GridDomain>, mask: Vec<bool>) -> Self {
        debug_assert!(mask.iter().zip(domain.inside()).all(|(&m, &d)| !m || d));
        Self { domain, mask }
    }

    pub fn domain(&self) -> &Arc<GridDomain> {
        &self.domain
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn is_subset_of(&self, other: &BinaryRegion) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// Writes the region in the plain-text raster format.
    pub fn write_raster<W: Write>(&self, out: W) -> Result<()> {
        self.domain.write_mask(&self.mask, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_domain, ShapeTag};

    #[test]
    fn from_values_enforces_invariants() {
        let d = Arc::new(build_domain(ShapeTag::Square { side: 1.0 }, 16).unwrap());
        let mut v = vec![0.0; d.len()];
        v[0] = 1.0;
        assert!(ScalarField::from_values(d.clone(), v).is_err());
        let mut v = vec![0.0; d.len()];
        v[d.idx(5, 5)] = f64::NAN;
        assert!(ScalarField::from_values(d.clone(), v).is_err());
        let f = ScalarField::from_fn(d.clone(), |x, y| x + y);
        assert_eq!(f.values()[0], 0.0);
        assert!(ScalarField::from_values(d, f.values().to_vec()).is_ok());
    }

    #[test]
    fn superlevel_is_subset_of_domain() {
        let d = Arc::new(build_domain(ShapeTag::Disk { radius: 1.0 }, 32).unwrap());
        let f = ScalarField::from_fn(d.clone(), |x, _| x);
        let e = BinaryRegion::superlevel(&f, 0.5);
        assert!(e.is_subset_of(&BinaryRegion::full(d.clone())));
        assert!(BinaryRegion::superlevel(&f, 10.0).is_empty());
        assert!(BinaryRegion::new(d.clone(), vec![true; d.len()]).is_err());
    }
}
