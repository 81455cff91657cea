//! Delay embedding: parameter estimation and trajectory reconstruction.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Embedding dimension and delay, both at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct EmbeddingParams {
    pub dimension: usize,
    pub delay: usize,
}

impl EmbeddingParams {
    pub fn new(dimension: usize, delay: usize) -> Result<Self> {
        if dimension == 0 || delay == 0 {
            return Err(Error::InvalidInput(format!(
                "embedding dimension and delay must be positive (m={dimension}, tau={delay})"
            )));
        }
        Ok(Self { dimension, delay })
    }

    /// Time steps covered by one state vector beyond its first sample.
    pub fn span(&self) -> usize {
        (self.dimension - 1) * self.delay
    }

    /// Number of state vectors for a series of length `n`, if at least two.
    pub fn point_count(&self, n: usize) -> Result<usize> {
        let needed = self.span() + 2;
        if n < needed {
            return Err(Error::InsufficientData { needed, got: n });
        }
        Ok(n - self.span())
    }
}

/// Reconstructed trajectory stored row-major, one row per state.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedTrajectory<T> {
    coords: Vec<T>,
    params: EmbeddingParams,
}

impl<T: Scalar> EmbeddedTrajectory<T> {
    /// Wraps explicit points of equal dimension (delay recorded as 1).
    pub fn from_points(points: &[Vec<T>]) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 {
            return Err(Error::InvalidInput("points must be non-empty".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::InvalidInput("points differ in dimension".into()));
        }
        Ok(Self {
            coords: points.iter().flatten().copied().collect(),
            params: EmbeddingParams::new(dim, 1)?,
        })
    }

    pub fn params(&self) -> EmbeddingParams {
        self.params
    }

    pub fn dimension(&self) -> usize {
        self.params.dimension
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.params.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        let m = self.params.dimension;
        &self.coords[i * m..(i + 1) * m]
    }

    pub fn points(&self) -> impl Iterator<Item = &[T]> {
        self.coords.chunks_exact(self.params.dimension)
    }
}

/// Builds state vectors `(x[i], x[i+tau], ..., x[i+(m-1)tau])`.
pub fn embed<T: Scalar>(values: &[T], params: EmbeddingParams) -> Result<EmbeddedTrajectory<T>> {
    let count = params.point_count(values.len())?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series contains non-finite values".into()));
    }
    let mut coords = Vec::with_capacity(count * params.dimension);
    for i in 0..count {
        coords.extend((0..params.dimension).map(|k| values[i + k * params.delay]));
    }
    Ok(EmbeddedTrajectory { coords, params })
}

/// Sample autocorrelation for lags `0..=max_lag`.
///
/// Mean-removed, normalised by the lag-0 sum of squares (the biased
/// estimator), so the result at lag 0 is exactly one.
pub fn autocorrelation<T: Scalar>(values: &[T], max_lag: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if max_lag >= n {
        return Err(Error::InsufficientData {
            needed: max_lag + 1,
            got: n,
        });
    }
    let x: Vec<f64> = values.iter().map(|v| v.to_f64_lossy()).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centered: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let c0: f64 = centered.iter().map(|v| v * v).sum();
    if !(c0 > 0.0) || c0 <= f64::EPSILON * f64::EPSILON * n as f64 * mean * mean {
        return Err(Error::DegenerateVariance);
    }
    let mut acf = Vec::with_capacity(max_lag + 1);
    acf.push(1.0);
    for lag in 1..=max_lag {
        let c: f64 = centered[..n - lag]
            .iter()
            .zip(&centered[lag..])
            .map(|(a, b)| a * b)
            .sum();
        acf.push(c / c0);
    }
    Ok(acf)
}

/// First lag at which the autocorrelation is at or below 1/e.
pub fn estimate_delay<T: Scalar>(values: &[T], max_lag: usize) -> Result<usize> {
    let acf = autocorrelation(values, max_lag)?;
    first_crossing(&acf).ok_or(Error::NoCrossing { max_lag })
}

/// First lag ≥ 1 of an ACF curve at or below 1/e.
pub fn first_crossing(acf: &[f64]) -> Option<usize> {
    let threshold = (-1.0f64).exp();
    acf.iter()
        .enumerate()
        .skip(1)
        .find(|(_, &r)| r <= threshold)
        .map(|(lag, _)| lag)
}

/// Thresholds of the false-nearest-neighbour test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FnnConfig {
    /// Relative growth of the neighbour distance that marks a false neighbour.
    pub r_tol: f64,
    /// Absolute distance, in units of the series standard deviation.
    pub a_tol: f64,
    /// Fraction of false neighbours below which a dimension is accepted.
    pub fraction_threshold: f64,
}

impl Default for FnnConfig {
    fn default() -> Self {
        Self {
            r_tol: 10.0,
            a_tol: 2.0,
            fraction_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FnnReport {
    /// Selected dimension; `m_max` when no dimension passed.
    pub dimension: usize,
    /// False-neighbour fraction for m = 1, 2, ... (stops after the accepted m).
    pub fractions: Vec<f64>,
    /// False when no dimension up to `m_max` fell below the threshold.
    pub converged: bool,
}

/// Above this many points the neighbour search prunes on the first coordinate.
const BRUTE_FORCE_LIMIT: usize = 2000;

/// Smallest dimension whose false-nearest-neighbour fraction is below threshold.
pub fn fnn_dimension<T: Scalar>(
    values: &[T],
    delay: usize,
    m_max: usize,
    config: &FnnConfig,
) -> Result<FnnReport> {
    if delay == 0 || m_max == 0 {
        return Err(Error::InvalidInput("delay and m_max must be positive".into()));
    }
    let n = values.len();
    let needed = m_max * delay + 2;
    if n < needed {
        return Err(Error::InsufficientData { needed, got: n });
    }
    let x: Vec<f64> = values.iter().map(|v| v.to_f64_lossy()).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let attractor_size = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();

    let mut fractions = Vec::new();
    for m in 1..=m_max {
        let fraction = false_neighbor_fraction(&x, m, delay, attractor_size, config);
        fractions.push(fraction);
        if fraction < config.fraction_threshold {
            return Ok(FnnReport {
                dimension: m,
                fractions,
                converged: true,
            });
        }
    }
    Ok(FnnReport {
        dimension: m_max,
        fractions,
        converged: false,
    })
}

/// Fraction of false neighbours when going from dimension `m` to `m + 1`.
pub fn false_neighbor_fraction(
    x: &[f64],
    m: usize,
    delay: usize,
    attractor_size: f64,
    config: &FnnConfig,
) -> f64 {
    // points that also own an (m+1)-th coordinate
    let count = x.len() - m * delay;
    let coords: Vec<f64> = (0..count)
        .flat_map(|i| (0..m).map(move |k| x[i + k * delay]))
        .collect();
    let neighbors = nearest_neighbors(&coords, m);

    let falses: usize = neighbors
        .par_iter()
        .enumerate()
        .filter(|&(i, &(j, d2))| {
            let dist = d2.sqrt();
            let extra = (x[i + m * delay] - x[j + m * delay]).abs();
            let ratio_test = if dist > 0.0 {
                extra / dist > config.r_tol
            } else {
                extra > 0.0
            };
            let size_test = attractor_size > 0.0
                && (d2 + extra * extra).sqrt() / attractor_size > config.a_tol;
            ratio_test || size_test
        })
        .count();
    falses as f64 / count as f64
}

/// Exact nearest neighbour (index, squared distance) of every point, self excluded.
///
/// Ties resolve to the lowest index.
pub fn nearest_neighbors(coords: &[f64], dim: usize) -> Vec<(usize, f64)> {
    let count = coords.len() / dim;
    if count <= BRUTE_FORCE_LIMIT {
        nearest_neighbors_brute(coords, dim)
    } else {
        nearest_neighbors_sorted(coords, dim)
    }
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

fn better(candidate: (usize, f64), best: (usize, f64)) -> bool {
    candidate.1 < best.1 || (candidate.1 == best.1 && candidate.0 < best.0)
}

pub fn nearest_neighbors_brute(coords: &[f64], dim: usize) -> Vec<(usize, f64)> {
    let count = coords.len() / dim;
    (0..count)
        .into_par_iter()
        .map(|i| {
            let p = &coords[i * dim..(i + 1) * dim];
            let mut best = (usize::MAX, f64::INFINITY);
            for j in (0..count).filter(|&j| j != i) {
                let cand = (j, squared_distance(p, &coords[j * dim..(j + 1) * dim]));
                if better(cand, best) {
                    best = cand;
                }
            }
            best
        })
        .collect()
}

/// Neighbour search over points sorted by first coordinate, scanning outwards
/// until the first-coordinate gap alone exceeds the best distance.
pub fn nearest_neighbors_sorted(coords: &[f64], dim: usize) -> Vec<(usize, f64)> {
    let count = coords.len() / dim;
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| {
        coords[a * dim]
            .partial_cmp(&coords[b * dim])
            .expect("finite coordinates")
            .then(a.cmp(&b))
    });
    let mut position = vec![0usize; count];
    for (pos, &idx) in order.iter().enumerate() {
        position[idx] = pos;
    }

    (0..count)
        .into_par_iter()
        .map(|i| {
            let p = &coords[i * dim..(i + 1) * dim];
            let start = position[i];
            let mut best = (usize::MAX, f64::INFINITY);
            let visit = |j: usize, best: &mut (usize, f64)| -> bool {
                let gap = coords[j * dim] - p[0];
                if gap * gap > best.1 {
                    return false;
                }
                let cand = (j, squared_distance(p, &coords[j * dim..(j + 1) * dim]));
                if better(cand, *best) {
                    *best = cand;
                }
                true
            };
            for &j in &order[start + 1..] {
                if !visit(j, &mut best) {
                    break;
                }
            }
            for &j in order[..start].iter().rev() {
                if !visit(j, &mut best) {
                    break;
                }
            }
            best
        })
        .collect()
}
