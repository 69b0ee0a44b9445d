//! Chart boxes and deterministic sample grids.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Axis-aligned coordinate box `lo[i] <= x^i <= hi[i]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChartBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl ChartBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<ChartBox> {
        if lo.len() != hi.len() {
            return Err(Error::Grid(format!("box bounds have lengths {} and {}", lo.len(), hi.len())));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !(a.is_finite() && b.is_finite() && a <= b) {
                return Err(Error::Grid(format!("invalid bounds [{}, {}] for coordinate {}", a, b, i)));
            }
        }
        Ok(ChartBox { lo, hi })
    }

    /// The cube `[-r, r]^dim`.
    pub fn cube(dim: usize, r: f64) -> ChartBox {
        ChartBox { lo: alloc::vec![-r; dim], hi: alloc::vec![r; dim] }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (a, b))| *a <= *x && *x <= *b)
    }

    /// Maps a point of the unit cube into the box.
    pub fn scale(&self, unit: &[f64]) -> Vec<f64> {
        unit.iter().zip(self.lo.iter().zip(&self.hi)).map(|(u, (a, b))| a + u * (b - a)).collect()
    }
}

/// Evaluation points together with the tolerances identities are judged by.
#[derive(Debug, Clone)]
pub struct SampleGrid {
    bounds: ChartBox,
    points: Vec<Vec<f64>>,
    pub tol_eq: f64,
    pub tol_nonzero: f64,
}

impl SampleGrid {
    pub fn new(bounds: ChartBox, points: Vec<Vec<f64>>) -> Result<SampleGrid> {
        if points.is_empty() {
            return Err(Error::Grid("a sample grid needs at least one point".into()));
        }
        for p in &points {
            if !bounds.contains(p) {
                return Err(Error::Grid(format!("point {:?} lies outside the chart box", p)));
            }
        }
        Ok(SampleGrid { bounds, points, tol_eq: DEFAULT_TOL, tol_nonzero: DEFAULT_TOL })
    }

    /// Shifted Halton points in `bounds`; the shift is drawn from `seed`.
    pub fn halton(bounds: ChartBox, count: usize, seed: u64) -> Result<SampleGrid> {
        let points = halton_points(bounds.dim(), count, seed).iter().map(|u| bounds.scale(u)).collect();
        SampleGrid::new(bounds, points)
    }

    pub fn with_tolerances(mut self, tol_eq: f64, tol_nonzero: f64) -> SampleGrid {
        self.tol_eq = tol_eq;
        self.tol_nonzero = tol_nonzero;
        self
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn bounds(&self) -> &ChartBox {
        &self.bounds
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn primes(count: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(count);
    let mut n = 2u64;
    while out.len() < count {
        if out.iter().take_while(|p| *p * *p <= n).all(|p| !n.is_multiple_of(*p)) {
            out.push(n);
        }
        n += 1;
    }
    out
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while i > 0 {
        f /= base as f64;
        r += f * (i % base) as f64;
        i /= base;
    }
    r
}

/// Cranley–Patterson rotated Halton sequence in the unit cube.
pub fn halton_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let bases = primes(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..dim).map(|_| unit_f64(&mut rng)).collect();
    (1..=count as u64)
        .map(|i| {
            bases
                .iter()
                .zip(&shift)
                .map(|(b, s)| {
                    let v = radical_inverse(i, *b) + s;
                    if v >= 1.0 {
                        v - 1.0
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect()
}

pub(crate) fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic uniform samples in `[-1, 1]`.
pub(crate) struct Noise(ChaCha8Rng);

impl Noise {
    pub(crate) fn new(seed: u64) -> Noise {
        Noise(ChaCha8Rng::seed_from_u64(seed))
    }

    pub(crate) fn next(&mut self) -> f64 {
        2.0 * unit_f64(&mut self.0) - 1.0
    }

    pub(crate) fn vector(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next()).collect()
    }
}
