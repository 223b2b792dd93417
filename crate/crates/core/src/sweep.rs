//! Exact sweeps of the upper bound and the achievable DoF over N/M.

use serde::{Deserialize, Serialize};

use crate::dof_bounds::{achievable_breakpoint_candidates, achievable_per_m, upper_breakpoints, upper_bound_per_m};
use crate::error::{Error, Result};
use crate::rational::RationalDof;

pub const DEFAULT_GRID_POINTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub k: usize,
    /// Strictly increasing, positive.
    pub ratios: Vec<RationalDof>,
}

impl SweepSpec {
    /// `points` evenly spaced ratios on (0, K] plus every breakpoint.
    pub fn auto(k: usize, points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::InvalidArgument("grid resolution must be at least 1".into()));
        }
        let top = RationalDof::from(k);
        let ratios = (1..=points)
            .map(|i| &top * &RationalDof::new(i as i64, points as i64))
            .collect();
        Self::with_breakpoints(k, ratios, None)
    }

    /// User ratios plus the breakpoints that fall inside their range.
    pub fn from_grid(k: usize, ratios: Vec<RationalDof>) -> Result<Self> {
        if ratios.is_empty() {
            return Err(Error::InvalidArgument("empty ratio grid".into()));
        }
        if let Some(r) = ratios.iter().find(|r| !r.is_positive()) {
            return Err(Error::InvalidArgument(format!("ratio {r} is not positive")));
        }
        if ratios.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("ratio grid must be strictly increasing".into()));
        }
        let range = (ratios[0].clone(), ratios[ratios.len() - 1].clone());
        Self::with_breakpoints(k, ratios, Some(range))
    }

    fn with_breakpoints(
        k: usize,
        mut ratios: Vec<RationalDof>,
        range: Option<(RationalDof, RationalDof)>,
    ) -> Result<Self> {
        let mut extra = upper_breakpoints(k);
        extra.extend(achievable_breakpoint_candidates(k)?);
        for b in extra {
            let inside = range.as_ref().is_none_or(|(lo, hi)| b >= *lo && b <= *hi);
            if inside {
                ratios.push(b);
            }
        }
        ratios.sort();
        ratios.dedup();
        Ok(SweepSpec { k, ratios })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub ratio: RationalDof,
    pub ratio_f64: f64,
    pub upper_per_m: RationalDof,
    pub upper_per_m_f64: f64,
    pub achievable_per_m: RationalDof,
    pub achievable_per_m_f64: f64,
    pub tight: bool,
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.ratios
        .iter()
        .map(|r| {
            let upper = upper_bound_per_m(spec.k, r)?;
            let (ach, _) = achievable_per_m(spec.k, r)?;
            Ok(SweepRow {
                ratio_f64: r.to_f64(),
                upper_per_m_f64: upper.to_f64(),
                achievable_per_m_f64: ach.to_f64(),
                tight: upper == ach,
                ratio: r.clone(),
                upper_per_m: upper,
                achievable_per_m: ach,
            })
        })
        .collect()
}

pub fn write_csv<W: std::io::Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    for row in rows {
        wr.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    wr.flush()?;
    Ok(())
}

/// Interior grid points where the piecewise-linear interpolation of `f`
/// changes slope. Exact when the grid contains every breakpoint.
pub fn kinks<F>(rows: &[SweepRow], f: F) -> Vec<RationalDof>
where
    F: Fn(&SweepRow) -> &RationalDof,
{
    rows.windows(3)
        .filter(|w| {
            let left = (f(&w[1]) - f(&w[0])) / (&w[1].ratio - &w[0].ratio);
            let right = (f(&w[2]) - f(&w[1])) / (&w[2].ratio - &w[1].ratio);
            left != right
        })
        .map(|w| w[1].ratio.clone())
        .collect()
}
