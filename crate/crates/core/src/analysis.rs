//! Threshold estimation, parameter sweeps, and assembly of the relaxed area
//! of the vortex-map graph: the absolutely continuous part in closed form
//! plus the singular part from the doubled free-boundary minimization.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ConvexProfile;
use crate::outer_optimizer::{minimize_over_profiles, OptimizerConfig, SolveReport};
use crate::scalar::{real, Real};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRecord<T> {
    pub l: T,
    pub value: T,
    pub degenerate: bool,
    pub gap_to_pi: T,
    pub n1: usize,
    pub n2: usize,
    pub seconds: f64,
}

pub const SWEEP_CSV_HEADER: &str = "l,value,degenerate,gap_to_pi,n1,n2,seconds";

impl<T: Real> SweepRecord<T> {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{:.3}",
            self.l, self.value, self.degenerate, self.gap_to_pi, self.n1, self.n2, self.seconds
        )
    }

    fn from_report(report: &SolveReport<T>, n1: usize, n2: usize, seconds: f64) -> Self {
        Self {
            l: report.l,
            value: report.value,
            degenerate: report.degenerate,
            gap_to_pi: T::PI() - report.value,
            n1,
            n2,
            seconds,
        }
    }
}

/// Bisection on the degenerate flag. Both endpoints are verified to lie on
/// opposite sides of the transition; the returned interval has width at most
/// `tol` and a lower endpoint strictly above `l_lo`, so a bracket starting
/// at 1/2 exhibits the threshold bound of the underlying problem.
pub fn threshold_bisect<T: Real>(
    l_lo: T,
    l_hi: T,
    tol: T,
    n1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
) -> Result<(T, T)> {
    if !(l_lo > T::zero() && l_hi > l_lo && tol > T::zero()) {
        return Err(Error::InvalidBracket {
            detail: format!("need 0 < l_lo < l_hi and tol > 0, got ({l_lo}, {l_hi}, {tol})"),
        });
    }
    let lo_report = minimize_over_profiles(l_lo, n1, n2, cfg, None)?;
    if lo_report.degenerate {
        return Err(Error::InvalidBracket {
            detail: format!("lower endpoint {l_lo} already degenerate"),
        });
    }
    let hi_report = minimize_over_profiles(l_hi, n1, n2, cfg, None)?;
    if !hi_report.degenerate {
        return Err(Error::InvalidBracket {
            detail: format!("upper endpoint {l_hi} not degenerate"),
        });
    }

    let mut lo = l_lo;
    let mut hi = l_hi;
    let mut warm: Option<ConvexProfile<T>> = lo_report.best_profile;
    let mut lo_moved = false;
    let width_floor = (tol / real(256.0)).max(real(1e-5));
    while hi - lo > tol || !lo_moved {
        if hi - lo <= width_floor {
            if lo_moved {
                break;
            }
            return Err(Error::InvalidBracket {
                detail: format!(
                    "transition not resolvable above the lower endpoint {l_lo} at this grid"
                ),
            });
        }
        let mid = (lo + hi) / real(2.0);
        let report = minimize_over_profiles(mid, n1, n2, cfg, warm.as_ref())?;
        if report.degenerate {
            hi = mid;
        } else {
            lo = mid;
            lo_moved = true;
            warm = report.best_profile;
        }
    }
    Ok((lo, hi))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VortexArea<T> {
    /// Absolutely continuous part, `pi (l sqrt(1 + l^2) + asinh l)`.
    pub ac_part: T,
    /// The doubled free-boundary minimum (twice the half-rectangle infimum).
    pub singular_part: T,
    pub total: T,
    pub degenerate: bool,
}

/// Closed form of the absolutely continuous part of the relaxed area over
/// the disc of radius `l`: the gradient of the vortex map has modulus `1/r`,
/// so the integrand is `sqrt(1 + r^-2)` and the polar integral reduces to
/// `2 pi int_0^l sqrt(1 + r^2) dr`.
pub fn ac_part<T: Real>(l: T) -> T {
    T::PI() * (l * (T::one() + l * l).sqrt() + l.asinh())
}

/// Full relaxed area of the vortex-map graph over the disc of radius `l`.
pub fn vortex_relaxed_area<T: Real>(
    l: T,
    n1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
) -> Result<VortexArea<T>> {
    let report = minimize_over_profiles(l, n1, n2, cfg, None)?;
    let ac = ac_part(l);
    Ok(VortexArea {
        ac_part: ac,
        singular_part: report.value,
        total: ac + report.value,
        degenerate: report.degenerate,
    })
}

/// Warm-started sweep over `steps` values of `l` between `l_min` and
/// `l_max` inclusive. Records stream through `on_record` as they complete,
/// so partial results survive a failure.
pub fn sweep<T: Real>(
    l_min: T,
    l_max: T,
    steps: usize,
    n1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
    mut on_record: impl FnMut(&SweepRecord<T>),
) -> Result<Vec<SweepRecord<T>>> {
    if !(l_min > T::zero() && l_max >= l_min) || steps == 0 {
        return Err(Error::InvalidBracket {
            detail: format!("need 0 < l_min <= l_max and steps > 0, got ({l_min}, {l_max})"),
        });
    }
    let mut records = Vec::with_capacity(steps);
    let mut warm: Option<ConvexProfile<T>> = None;
    for k in 0..steps {
        let l = if steps == 1 {
            l_min
        } else {
            l_min + (l_max - l_min) * real::<T>(k as f64) / real::<T>((steps - 1) as f64)
        };
        let start = Instant::now();
        let report = minimize_over_profiles(l, n1, n2, cfg, warm.as_ref())?;
        let seconds = start.elapsed().as_secs_f64();
        warm = report.best_profile.clone().or(warm);
        let record = SweepRecord::from_report(&report, n1, n2, seconds);
        on_record(&record);
        records.push(record);
    }
    Ok(records)
}
