//! Spatial domain, target sets, and the smoothed exit indicator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned closed box `[lo, hi]` in which agents move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Domain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let domain = Self { lo, hi };
        domain.validate()?;
        Ok(domain)
    }

    /// The unit square `[0, 1]^2`.
    pub fn unit_square() -> Self {
        Self {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lo.is_empty() || self.lo.len() != self.hi.len() {
            return Err(Error::invalid(
                "domain",
                "lo and hi must be nonempty and of equal dimension",
            ));
        }
        for (k, (lo, hi)) in self.lo.iter().zip(&self.hi).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::invalid(
                    format!("domain.lo[{k}]/domain.hi[{k}]"),
                    "need finite lo < hi",
                ));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Side length along coordinate `k`.
    pub fn extent(&self, k: usize) -> f64 {
        self.hi[k] - self.lo[k]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
    }

    /// Coordinate-wise clamp into the box.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_in_place(&mut out);
        out
    }

    pub fn project_in_place(&self, x: &mut [f64]) {
        for (v, (lo, hi)) in x.iter_mut().zip(self.lo.iter().zip(&self.hi)) {
            *v = v.clamp(*lo, *hi);
        }
    }
}

/// Free-function form of [`Domain::project`].
pub fn project_to_domain(domain: &Domain, x: &[f64]) -> Vec<f64> {
    domain.project(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlabSide {
    /// `x[coord] >= threshold`
    Above,
    /// `x[coord] <= threshold`
    Below,
}

/// Closed region an agent tries to reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSet {
    Slab {
        coord: usize,
        threshold: f64,
        side: SlabSide,
    },
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
}

impl TargetSet {
    /// Distance to the set outside it, minus the depth inside it.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        match self {
            TargetSet::Slab {
                coord,
                threshold,
                side,
            } => match side {
                SlabSide::Above => threshold - x[*coord],
                SlabSide::Below => x[*coord] - threshold,
            },
            TargetSet::Box { lo, hi } => {
                let mut outside = 0.0;
                let mut deepest = f64::NEG_INFINITY;
                for ((v, lo), hi) in x.iter().zip(lo).zip(hi) {
                    let q = (lo - v).max(v - hi);
                    if q > 0.0 {
                        outside += q * q;
                    }
                    deepest = deepest.max(q);
                }
                if outside > 0.0 {
                    outside.sqrt()
                } else {
                    deepest
                }
            }
            TargetSet::Ball { center, radius } => euclidean(x, center) - radius,
        }
    }

    /// Euclidean projection onto the set.
    pub fn nearest_point(&self, x: &[f64]) -> Vec<f64> {
        match self {
            TargetSet::Slab {
                coord,
                threshold,
                side,
            } => {
                let mut out = x.to_vec();
                out[*coord] = match side {
                    SlabSide::Above => out[*coord].max(*threshold),
                    SlabSide::Below => out[*coord].min(*threshold),
                };
                out
            }
            TargetSet::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
            TargetSet::Ball { center, radius } => {
                let dist = euclidean(x, center);
                if dist <= *radius {
                    return x.to_vec();
                }
                center
                    .iter()
                    .zip(x)
                    .map(|(c, v)| c + radius * (v - c) / dist)
                    .collect()
            }
        }
    }

    /// Checks that the set is well formed and meets the closed domain.
    pub fn validate_in(&self, domain: &Domain, field: &str) -> Result<()> {
        let dim = domain.dim();
        match self {
            TargetSet::Slab {
                coord, threshold, ..
            } => {
                if *coord >= dim {
                    return Err(Error::invalid(
                        format!("{field}.coord"),
                        format!("coordinate {coord} out of range for dimension {dim}"),
                    ));
                }
                if !(domain.lo[*coord] <= *threshold && *threshold <= domain.hi[*coord]) {
                    return Err(Error::invalid(
                        format!("{field}.threshold"),
                        "slab boundary lies outside the domain",
                    ));
                }
            }
            TargetSet::Box { lo, hi } => {
                if lo.len() != dim || hi.len() != dim {
                    return Err(Error::invalid(field, "box dimension mismatch"));
                }
                let ok = lo.iter().zip(hi).all(|(l, h)| l <= h)
                    && domain.contains(lo)
                    && domain.contains(hi);
                if !ok {
                    return Err(Error::invalid(
                        field,
                        "box target must be nonempty and inside the domain",
                    ));
                }
            }
            TargetSet::Ball { center, radius } => {
                if center.len() != dim {
                    return Err(Error::invalid(field, "ball dimension mismatch"));
                }
                let ok = *radius >= 0.0
                    && center
                        .iter()
                        .enumerate()
                        .all(|(k, c)| domain.lo[k] <= c - radius && c + radius <= domain.hi[k]);
                if !ok {
                    return Err(Error::invalid(
                        field,
                        "ball target must have radius >= 0 and lie inside the domain",
                    ));
                }
            }
        }
        Ok(())
    }
}

pub fn signed_distance(target: &TargetSet, x: &[f64]) -> f64 {
    target.signed_distance(x)
}

pub fn nearest_target_point(target: &TargetSet, x: &[f64]) -> Vec<f64> {
    target.nearest_point(x)
}

/// Width of the transition band of the smoothed indicator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSmoothing {
    pub rho: f64,
}

impl Default for IndicatorSmoothing {
    fn default() -> Self {
        Self { rho: 0.05 }
    }
}

impl IndicatorSmoothing {
    pub fn new(rho: f64) -> Result<Self> {
        let s = Self { rho };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::invalid("cost.smoothing.rho", "must be > 0"));
        }
        Ok(())
    }
}

/// Cubic smoothstep clamped to `[0, 1]`.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * (3.0 - 2.0 * u)
    }
}

/// Smooth approximation of the indicator of the complement of the target:
/// 0 on and inside the target, 1 at distance `rho` or more.
pub fn chi(target: &TargetSet, smoothing: IndicatorSmoothing, x: &[f64]) -> f64 {
    smoothstep(target.signed_distance(x) / smoothing.rho)
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| (u - v) * (u - v))
        .sum::<f64>()
        .sqrt()
}
