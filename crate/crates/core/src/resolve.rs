//! Two-frequency resolvability after Kth-power processing.
//!
//! A frequency `f` puts the principal fringe at `α = 2π·f·δT`. Two lines are
//! resolvable when their peak separation reaches the FWHM of one Kth-powered
//! fringe. [`dip_resolvable`] is an independent cross-check that looks for a
//! saddle of at most 0.81 of the lower peak in the summed curves.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fringe::{normalized_unchecked, FringeCurve, FringeParams, PhaseGrid};
use crate::kpower::{fwhm_exact, pow_k, KPowerSpec};

/// Saddle-to-peak ratio of two just-resolved sinc² lines, 8/π² rounded.
pub const DIP_THRESHOLD: f64 = 0.81;

/// Reference frequency, second frequency and interferometer delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralPair {
    f0: f64,
    f1: f64,
    delta_t: f64,
}

impl SpectralPair {
    pub fn new(f0: f64, f1: f64, delta_t: f64) -> Result<Self> {
        for (name, v) in [("f0", f0), ("f1", f1), ("delta_t", delta_t)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self { f0, f1, delta_t })
    }

    /// `f1 = ratio·f0` with the default delay `δT = 1/f0`.
    pub fn from_ratio(f0: f64, ratio: f64) -> Result<Self> {
        Self::new(f0, ratio * f0, 1.0 / f0)
    }

    pub fn f0(&self) -> f64 {
        self.f0
    }

    pub fn f1(&self) -> f64 {
        self.f1
    }

    pub fn delta_t(&self) -> f64 {
        self.delta_t
    }

    /// `|f1 − f0|`
    pub fn detuning(&self) -> f64 {
        (self.f1 - self.f0).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResolvabilityReport {
    pub peak_separation: f64,
    pub fwhm: f64,
    pub margin: f64,
    pub resolvable: bool,
    pub min_resolvable_df: f64,
}

/// `δα = 2π·|f1 − f0|·δT`.
pub fn peak_separation(pair: &SpectralPair) -> f64 {
    2.0 * PI * pair.detuning() * pair.delta_t
}

/// Width criterion: resolvable iff the peak separation is at least one FWHM.
pub fn resolvable(
    pair: &SpectralPair,
    params: &FringeParams,
    spec: KPowerSpec,
) -> Result<ResolvabilityReport> {
    let fwhm = fwhm_exact(params, spec)?.fwhm;
    let sep = peak_separation(pair);
    let margin = sep / fwhm;
    Ok(ResolvabilityReport {
        peak_separation: sep,
        fwhm,
        margin,
        resolvable: margin >= 1.0,
        min_resolvable_df: fwhm / (2.0 * PI * pair.delta_t),
    })
}

/// Smallest detuning the width criterion accepts at delay `delta_t`.
pub fn min_resolvable_df(params: &FringeParams, spec: KPowerSpec, delta_t: f64) -> Result<f64> {
    if !delta_t.is_finite() || delta_t <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "delta_t must be finite and > 0, got {delta_t}"
        )));
    }
    Ok(fwhm_exact(params, spec)?.fwhm / (2.0 * PI * delta_t))
}

/// Grid-frame centres of the two lines: `α0` folded into `(−π/2, π/2]`, and
/// the second line offset from it by the signed separation.
fn line_centres(pair: &SpectralPair) -> (f64, f64) {
    let c0 = folded_phase(pair.f0, pair.delta_t);
    let c1 = c0 + 2.0 * PI * (pair.f1 - pair.f0) * pair.delta_t;
    (c0, c1)
}

/// Principal-peak phase of a line at frequency `f`, folded into `(−π/2, π/2]`.
pub fn folded_phase(f: f64, delta_t: f64) -> f64 {
    // α/π = 2fδT; fold the cycle count before scaling to keep precision
    let cycles = 2.0 * f * delta_t;
    PI * (cycles - cycles.round())
}

/// One Kth-powered normalized fringe centred on the folded phase of frequency `f`.
pub fn line_curve(
    params: &FringeParams,
    spec: KPowerSpec,
    grid: &PhaseGrid,
    f: f64,
    delta_t: f64,
) -> FringeCurve {
    let centre = folded_phase(f, delta_t);
    let values = grid.points().map(|x| component(params, spec, x, centre)).collect();
    FringeCurve::new(*grid, values, true).expect("powered normalized values lie in [0, 1]")
}

fn component(params: &FringeParams, spec: KPowerSpec, x: f64, centre: f64) -> f64 {
    pow_k(normalized_unchecked(params, x - centre), spec.order())
}

/// Incoherent sum of the two Kth-powered normalized fringes on `grid`.
pub fn composite_curve(
    pair: &SpectralPair,
    params: &FringeParams,
    spec: KPowerSpec,
    grid: &PhaseGrid,
) -> Result<FringeCurve> {
    let (c0, c1) = line_centres(pair);
    let values = grid
        .points()
        .map(|x| component(params, spec, x, c0) + component(params, spec, x, c1))
        .collect();
    FringeCurve::new(*grid, values, false)
}

/// Dip criterion on the composite curve.
///
/// Returns `false` for identical frequencies. Fails with
/// [`Error::Indeterminate`] when either line centre is off-grid or the two
/// centres are not separated by at least one interior grid point.
pub fn dip_resolvable(
    pair: &SpectralPair,
    params: &FringeParams,
    spec: KPowerSpec,
    grid: &PhaseGrid,
) -> Result<bool> {
    if pair.f1 == pair.f0 {
        return Ok(false);
    }
    let (c0, c1) = line_centres(pair);
    let locate = |c: f64| {
        grid.nearest_index(c).ok_or_else(|| {
            Error::Indeterminate(format!("line centre {c:.6} lies outside the grid"))
        })
    };
    let (i0, i1) = (locate(c0)?, locate(c1)?);
    let (lo, hi) = (i0.min(i1), i0.max(i1));
    if hi - lo < 2 {
        return Err(Error::Indeterminate(
            "line centres not separated on this grid".into(),
        ));
    }
    let composite = composite_curve(pair, params, spec, grid)?;
    let v = composite.values();
    let lower_peak = v[lo].min(v[hi]);
    let saddle = v[lo + 1..hi].iter().copied().fold(f64::INFINITY, f64::min);
    Ok(saddle < lower_peak && saddle <= DIP_THRESHOLD * lower_peak)
}
