//! N-slit Fraunhofer intensity law.
//!
//! The fringe is `I(α) = sinc²(rα) · (sin Nα / sin α)²`, where `α` is half the
//! phase step between neighbouring slits and `r = β/α = b/a` scales the
//! single-slit envelope. `sinc` is the unnormalized `sin(x)/x`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Below this `|sin α|` the interference ratio switches to its l'Hôpital form.
const SINGULAR_SIN: f64 = 1e-8;

/// Slit count and envelope ratio; fully determines one fringe law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringeParams {
    n_slits: u32,
    envelope_ratio: f64,
}

impl FringeParams {
    /// `envelope_ratio = 0` disables the diffraction envelope.
    pub fn new(n_slits: u32, envelope_ratio: f64) -> Result<Self> {
        if n_slits == 0 {
            return Err(Error::InvalidParameter("n_slits must be >= 1".into()));
        }
        if !envelope_ratio.is_finite() || envelope_ratio < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "envelope_ratio must be finite and >= 0, got {envelope_ratio}"
            )));
        }
        Ok(Self {
            n_slits,
            envelope_ratio,
        })
    }

    /// Interference term only (`r = 0`).
    pub fn interference_only(n_slits: u32) -> Result<Self> {
        Self::new(n_slits, 0.0)
    }

    pub fn n_slits(&self) -> u32 {
        self.n_slits
    }

    pub fn envelope_ratio(&self) -> f64 {
        self.envelope_ratio
    }

    /// Peak intensity `N²`.
    pub fn peak(&self) -> f64 {
        let n = f64::from(self.n_slits);
        n * n
    }
}

/// Slit separation `a`, slit width `b` and wavelength `λ`, all in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalGeometry {
    slit_separation: f64,
    slit_width: f64,
    wavelength: f64,
}

impl PhysicalGeometry {
    pub fn new(slit_separation: f64, slit_width: f64, wavelength: f64) -> Result<Self> {
        for (name, v) in [
            ("slit_separation", slit_separation),
            ("slit_width", slit_width),
            ("wavelength", wavelength),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            slit_separation,
            slit_width,
            wavelength,
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    /// The envelope ratio `b/a` implied by this geometry.
    pub fn envelope_ratio(&self) -> f64 {
        self.slit_width / self.slit_separation
    }
}

/// Uniform phase axis with inclusive endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseGrid {
    start: f64,
    end: f64,
    n_points: usize,
}

impl PhaseGrid {
    pub const FIGURE_POINTS: usize = 100_001;

    pub fn new(start: f64, end: f64, n_points: usize) -> Result<Self> {
        if !start.is_finite() || !end.is_finite() || start >= end {
            return Err(Error::InvalidParameter(format!(
                "grid needs finite start < end, got [{start}, {end}]"
            )));
        }
        if n_points < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 points, got {n_points}"
            )));
        }
        Ok(Self {
            start,
            end,
            n_points,
        })
    }

    /// `[−π/2, π/2]` with 100,001 points, fine enough for a π/2000 line.
    pub fn figure_default() -> Self {
        Self {
            start: -PI / 2.0,
            end: PI / 2.0,
            n_points: Self::FIGURE_POINTS,
        }
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.end - self.start) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        debug_assert!(i < self.n_points);
        if i + 1 == self.n_points {
            self.end
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    /// Index of the grid point nearest `x`, or `None` if `x` lies outside the grid.
    pub fn nearest_index(&self, x: f64) -> Option<usize> {
        if !(self.start..=self.end).contains(&x) {
            return None;
        }
        let i = ((x - self.start) / self.step()).round() as usize;
        Some(i.min(self.n_points - 1))
    }
}

/// Intensity values sampled on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct FringeCurve {
    grid: PhaseGrid,
    values: Vec<f64>,
    normalized: bool,
}

impl FringeCurve {
    /// Wrap raw samples. Values must be finite and non-negative, and within
    /// `[0, 1]` when `normalized` is set.
    pub fn new(grid: PhaseGrid, values: Vec<f64>, normalized: bool) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "curve has {} values for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        let upper = if normalized { 1.0 } else { f64::INFINITY };
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !v.is_finite() || **v < 0.0 || **v > upper)
        {
            return Err(Error::InvalidParameter(format!(
                "curve value {v} at index {i} outside the allowed range"
            )));
        }
        Ok(Self {
            grid,
            values,
            normalized,
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `(phase, value)` pairs in grid order.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.grid.points().zip(self.values.iter().copied())
    }
}

/// Unnormalized sinc, `sin(x)/x` with `sinc(0) = 1`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// `(sin Nα / sin α)²`, continuous through the removable singularities at `α = mπ`.
///
/// The square depends only on the offset from the nearest `mπ`, so the
/// argument is folded first; near a principal peak this avoids cancellation
/// in `sin(Nα)` for large `|α|`.
fn interference_ratio_sq(n: f64, alpha: f64) -> f64 {
    let delta = alpha - PI * (alpha / PI).round();
    let s = delta.sin();
    let ratio = if s.abs() < SINGULAR_SIN {
        n * (n * delta).cos() / delta.cos()
    } else {
        (n * delta).sin() / s
    };
    ratio * ratio
}

/// N-slit intensity `sinc²(rα)·(sin Nα / sin α)²`, in `[0, N²]`.
pub fn intensity_at(params: &FringeParams, alpha: f64) -> Result<f64> {
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite, got {alpha}")));
    }
    Ok(intensity_unchecked(params, alpha))
}

fn intensity_unchecked(params: &FringeParams, alpha: f64) -> f64 {
    let n = f64::from(params.n_slits);
    let env = sinc(params.envelope_ratio * alpha);
    (env * env * interference_ratio_sq(n, alpha)).min(n * n)
}

/// Intensity divided by the peak `N²`; exactly 1 at `α = 0`.
pub fn normalized_intensity_at(params: &FringeParams, alpha: f64) -> Result<f64> {
    Ok(intensity_at(params, alpha)? / params.peak())
}

pub(crate) fn normalized_unchecked(params: &FringeParams, alpha: f64) -> f64 {
    intensity_unchecked(params, alpha) / params.peak()
}

/// Evaluate the fringe at every grid point. Output order follows the grid.
pub fn sample_curve(params: &FringeParams, grid: &PhaseGrid, normalized: bool) -> FringeCurve {
    let scale = if normalized { params.peak() } else { 1.0 };
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| intensity_unchecked(params, grid.point(i)) / scale)
        .collect();
    FringeCurve {
        grid: *grid,
        values,
        normalized,
    }
}

/// `(α, β) = (k·a·sinθ/2, k·b·sinθ/2)` for an observation angle `theta`.
pub fn alpha_from_geometry(geom: &PhysicalGeometry, theta: f64) -> Result<(f64, f64)> {
    if !theta.is_finite() || theta.abs() > PI / 2.0 {
        return Err(Error::Domain(format!("|theta| must be <= pi/2, got {theta}")));
    }
    let half_k_sin = geom.wavenumber() * theta.sin() / 2.0;
    Ok((
        half_k_sin * geom.slit_separation,
        half_k_sin * geom.slit_width,
    ))
}

/// Fringe phase `α = 2π·f·δT` for optical frequency `f` and arm delay `delta_t`.
pub fn alpha_from_frequency(f: f64, delta_t: f64) -> f64 {
    debug_assert!(f >= 0.0 && delta_t >= 0.0);
    2.0 * PI * f * delta_t
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(n: u32, r: f64) -> FringeParams {
        FringeParams::new(n, r).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(FringeParams::new(0, 0.0).is_err());
        assert!(FringeParams::new(2, -1.0).is_err());
        assert!(FringeParams::new(2, f64::NAN).is_err());
        assert!(PhysicalGeometry::new(1.0, 0.0, 1.0).is_err());
        assert!(PhaseGrid::new(1.0, 1.0, 10).is_err());
        assert!(PhaseGrid::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn intensity_examples() {
        assert_eq!(intensity_at(&p(2, 0.0), 0.0).unwrap(), 4.0);
        assert_abs_diff_eq!(intensity_at(&p(100, 0.0), PI).unwrap(), 10_000.0, epsilon = 1e-9);
        // N=2 closed form 4cos²α
        assert_abs_diff_eq!(intensity_at(&p(2, 0.0), PI / 4.0).unwrap(), 2.0, epsilon = 1e-12);
        // single slit (sin 2 / 2)²
        assert_abs_diff_eq!(
            intensity_at(&p(1, 1.0), 2.0).unwrap(),
            (2.0f64.sin() / 2.0).powi(2),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(intensity_at(&p(1, 1.0), 2.0).unwrap(), 0.206_700, epsilon = 1e-5);
    }

    #[test]
    fn non_finite_alpha_is_domain_error() {
        assert!(matches!(intensity_at(&p(2, 0.0), f64::NAN), Err(Error::Domain(_))));
        assert!(matches!(
            normalized_intensity_at(&p(2, 0.0), f64::INFINITY),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn normalized_examples() {
        assert_eq!(normalized_intensity_at(&p(2, 0.0), 0.0).unwrap(), 1.0);
        assert_abs_diff_eq!(normalized_intensity_at(&p(2, 0.0), PI / 4.0).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(normalized_intensity_at(&p(10, 0.0), PI / 10.0).unwrap(), 0.0, epsilon = 1e-12);
        assert_eq!(normalized_intensity_at(&p(7, 3.0), 0.0).unwrap(), 1.0);
    }

    #[test]
    fn two_slit_closed_form_on_dense_grid() {
        let params = p(2, 0.0);
        let grid = PhaseGrid::new(-10.0, 10.0, 10_000).unwrap();
        for a in grid.points() {
            let want = 4.0 * a.cos().powi(2);
            assert_abs_diff_eq!(intensity_at(&params, a).unwrap(), want, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_slit_is_pure_envelope() {
        for r in [0.3, 1.0, 6.0] {
            let params = p(1, r);
            for a in PhaseGrid::new(-5.0, 5.0, 2001).unwrap().points() {
                let s = sinc(r * a);
                assert_abs_diff_eq!(intensity_at(&params, a).unwrap(), s * s, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singularity_converges_monotonically() {
        for n in [2u32, 3, 10, 100] {
            for r in [0.0, 0.5] {
                let params = p(n, r);
                for m in [-2i32, 0, 1, 3] {
                    let centre = f64::from(m) * PI;
                    let limit = params.peak() * sinc(r * centre).powi(2);
                    let mut last = f64::INFINITY;
                    for e in 6..=12 {
                        let eps = 10f64.powi(-e);
                        let err = (intensity_at(&params, centre + eps).unwrap() - limit)
                            .abs()
                            .max((intensity_at(&params, centre - eps).unwrap() - limit).abs());
                        assert!(err <= last + 1e-9 * limit, "n={n} m={m} eps={eps}");
                        last = err;
                    }
                    assert!(last < 1e-6 * limit.max(1.0));
                }
            }
        }
    }

    #[test]
    fn sample_curve_examples() {
        let grid = PhaseGrid::new(-PI, PI, 5).unwrap();
        let c = sample_curve(&p(2, 0.0), &grid, true);
        let want = [1.0, 0.0, 1.0, 0.0, 1.0];
        for (v, w) in c.values().iter().zip(want) {
            assert_abs_diff_eq!(*v, w, epsilon = 1e-12);
        }

        let two = sample_curve(&p(5, 1.5), &PhaseGrid::new(0.1, 0.2, 2).unwrap(), false);
        assert_eq!(two.values().len(), 2);

        let dense = PhaseGrid::new(-PI / 2.0, PI / 2.0, 100_000).unwrap();
        let c = sample_curve(&p(100, 0.0), &dense, true);
        let max = c.values().iter().cloned().fold(0.0, f64::max);
        assert_abs_diff_eq!(max, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn geometry_mapping() {
        let lambda = 500e-9;
        let g = PhysicalGeometry::new(2.0 * lambda, lambda, lambda).unwrap();
        assert_eq!(alpha_from_geometry(&g, 0.0).unwrap(), (0.0, 0.0));
        let (a, b) = alpha_from_geometry(&g, PI / 2.0).unwrap();
        assert_abs_diff_eq!(a, 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(b, PI, epsilon = 1e-12);
        assert_abs_diff_eq!(b / a, g.envelope_ratio(), epsilon = 1e-15);

        let same = PhysicalGeometry::new(3e-6, 3e-6, lambda).unwrap();
        for th in [-1.2, -0.1, 0.4, 1.5] {
            let (a, b) = alpha_from_geometry(&same, th).unwrap();
            assert_eq!(a, b);
        }
        assert!(alpha_from_geometry(&g, 2.0).is_err());
    }

    #[test]
    fn frequency_mapping() {
        let f0 = 3.7e14;
        assert_eq!(alpha_from_frequency(0.0, 1e-3), 0.0);
        assert_abs_diff_eq!(alpha_from_frequency(f0, 1.0 / f0), 2.0 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(alpha_from_frequency(0.8 * f0, 1.0 / f0), 1.6 * PI, epsilon = 1e-12);
    }

    #[test]
    fn grid_points_hit_endpoints() {
        let g = PhaseGrid::new(-1.0, 2.0, 7).unwrap();
        let pts: Vec<f64> = g.points().collect();
        assert_eq!(pts[0], -1.0);
        assert_eq!(pts[6], 2.0);
        assert_abs_diff_eq!(pts[2], 0.0, epsilon = 1e-15);
        assert_eq!(g.nearest_index(0.01), Some(2));
        assert_eq!(g.nearest_index(2.5), None);
    }
}
