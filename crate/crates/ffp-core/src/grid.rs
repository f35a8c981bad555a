//! Fixed evaluation-frequency grids.
//!
//! All online estimators in this crate evaluate the spectrum on a finite,
//! fixed set of frequencies in cycles per sample. The grid never contains
//! 0, 1/2 or -1/2: the asymptotic theory behind the Whittle weighting
//! breaks down at those points, and excluding them keeps every estimate on
//! the grid well behaved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequencies at or beyond these points are rejected.
const EDGE_TOL: f64 = 1e-12;

/// An ordered set of evaluation frequencies in (-1/2, 1/2), excluding 0.
///
/// Constructors that build regular grids also record each frequency as an
/// exact rational p/q so that phase factors exp(-i2*pi*f*t) can be
/// renormalized from `t mod q` without drift on long streams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    freqs: Vec<f64>,
    /// Exact rational form of each frequency, when known.
    rationals: Option<Vec<(i64, i64)>>,
}

impl FrequencyGrid {
    /// Build a grid from explicit frequencies, validating the invariants:
    /// strictly increasing, inside (-1/2, 1/2), never 0, 1/2 or -1/2.
    pub fn new(freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() {
            return Err(Error::Parameter("frequency grid is empty".into()));
        }
        for &f in &freqs {
            if !f.is_finite() {
                return Err(Error::Parameter(format!("non-finite frequency {f}")));
            }
            if f.abs() <= EDGE_TOL {
                return Err(Error::Parameter("grid must not contain frequency 0".into()));
            }
            if (f.abs() - 0.5).abs() <= EDGE_TOL || f.abs() > 0.5 {
                return Err(Error::Parameter(format!(
                    "frequency {f} outside the open interval (-1/2, 1/2)"
                )));
            }
        }
        for pair in freqs.windows(2) {
            if pair[1] <= pair[0] {
                return Err(Error::Parameter(
                    "grid frequencies must be strictly increasing".into(),
                ));
            }
        }
        Ok(Self { freqs, rationals: None })
    }

    /// Regular one-sided grid for real-valued streams: f_k = k / (2(M+1)),
    /// k = 1..M, all inside (0, 1/2).
    pub fn real_default(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("grid size must be at least 1".into()));
        }
        let den = 2 * (m as i64 + 1);
        let freqs = (1..=m as i64).map(|k| k as f64 / den as f64).collect();
        let rationals = (1..=m as i64).map(|k| (k, den)).collect();
        Ok(Self { freqs, rationals: Some(rationals) })
    }

    /// Regular two-sided grid for complex-valued streams:
    /// f_k = k/(M+1) - 1/2 for k = 1..M, with any point that would land on
    /// -1/2, 0 or 1/2 dropped (this removes one point when M is odd).
    pub fn complex_default(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Parameter("grid size must be at least 1".into()));
        }
        let den = 2 * (m as i64 + 1);
        let mut freqs = Vec::with_capacity(m);
        let mut rationals = Vec::with_capacity(m);
        for k in 1..=m as i64 {
            // k/(M+1) - 1/2 = (2k - (M+1)) / (2(M+1))
            let num = 2 * k - (m as i64 + 1);
            if num == 0 {
                continue;
            }
            freqs.push(num as f64 / den as f64);
            rationals.push((num, den));
        }
        Ok(Self { freqs, rationals: Some(rationals) })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// True when every frequency is positive (the layout used for real streams).
    pub fn is_one_sided(&self) -> bool {
        self.freqs.iter().all(|&f| f > 0.0)
    }

    pub(crate) fn rationals(&self) -> Option<&[(i64, i64)]> {
        self.rationals.as_deref()
    }

    /// Index of the grid frequency closest to `f`.
    pub fn nearest_index(&self, f: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &g) in self.freqs.iter().enumerate() {
            let d = (g - f).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}
