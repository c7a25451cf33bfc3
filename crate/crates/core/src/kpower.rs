//! Kth-power post-processing of normalized fringes and line-width metrics.
//!
//! Multiplying the readings of K identical detector splits is the same as
//! raising the normalized fringe to the Kth power. The principal line then
//! narrows roughly as `1/√K`; [`fwhm_exact`] measures the width without a grid
//! and [`snl_fit`] extracts the scaling exponent from a set of widths.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fringe::{normalized_unchecked, FringeCurve, FringeParams};

pub const MAX_ORDER: u32 = 1_000_000;

const BISECTION_TOL: f64 = 1e-12;
const BRACKET_SHRINK: f64 = 1e-9;
const MONOTONE_PROBES: usize = 256;

/// Intensity-product order K.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KPowerSpec {
    order: u32,
}

impl KPowerSpec {
    pub fn new(order: u32) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidParameter(format!(
                "K must lie in 1..={MAX_ORDER}, got {order}"
            )));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// `v^K` for `v ∈ [0, 1]`, evaluated as `exp(K ln v)`.
    pub fn apply(&self, v: f64) -> f64 {
        pow_k(v, self.order)
    }
}

pub(crate) fn pow_k(v: f64, k: u32) -> f64 {
    if v <= 0.0 {
        0.0
    } else if k == 1 {
        v
    } else {
        (f64::from(k) * v.ln()).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidthMethod {
    GridInterpolated,
    BisectionExact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LineWidthResult {
    pub fwhm: f64,
    pub peak_location: f64,
    pub peak_value: f64,
    pub method: WidthMethod,
}

/// Power law `Δ = amplitude · K^(−exponent)` fitted in log-log space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFit {
    pub amplitude: f64,
    pub exponent: f64,
    pub max_relative_deviation: f64,
}

impl ScalingFit {
    pub fn predict(&self, k: f64) -> f64 {
        self.amplitude * k.powf(-self.exponent)
    }
}

/// Raise every sample of a normalized curve to the Kth power.
pub fn kth_power(curve: &FringeCurve, spec: KPowerSpec) -> Result<FringeCurve> {
    if !curve.is_normalized() {
        return Err(Error::Contract(
            "kth_power needs a normalized curve (values in [0, 1])".into(),
        ));
    }
    let values = curve.values().iter().map(|&v| spec.apply(v)).collect();
    FringeCurve::new(*curve.grid(), values, true)
}

/// FWHM of the principal peak read off a sampled curve.
///
/// The principal peak is the global maximum; among ties the one nearest the
/// grid centre wins. Each half-maximum crossing is linearly interpolated
/// between the bracketing samples.
pub fn fwhm_grid(curve: &FringeCurve) -> Result<LineWidthResult> {
    let values = curve.values();
    let grid = curve.grid();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max <= 0.0 {
        return Err(Error::LineUnresolved);
    }

    let centre = (values.len() - 1) as f64 / 2.0;
    let peak = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max * (1.0 - 1e-12))
        .map(|(i, _)| i)
        .min_by(|&a, &b| {
            (a as f64 - centre)
                .abs()
                .total_cmp(&(b as f64 - centre).abs())
        })
        .expect("non-empty curve");
    if peak == 0 || peak == values.len() - 1 {
        return Err(Error::PeakClipped { index: peak });
    }

    let peak_value = values[peak];
    let half = peak_value / 2.0;
    let step = grid.step();

    let left = (0..peak)
        .rev()
        .find(|&i| values[i] <= half)
        .ok_or(Error::LineUnresolved)?;
    let right = (peak + 1..values.len())
        .find(|&i| values[i] <= half)
        .ok_or(Error::LineUnresolved)?;

    // crossing between i (<= half) and its neighbour towards the peak (> half)
    let cross = |i: usize, j: usize| {
        let (vi, vj) = (values[i], values[j]);
        grid.point(i) + (grid.point(j) - grid.point(i)) * (half - vi) / (vj - vi)
    };
    let x_left = cross(left, left + 1);
    let x_right = cross(right, right - 1);
    debug_assert!(x_right - x_left > 0.0 && step > 0.0);

    Ok(LineWidthResult {
        fwhm: x_right - x_left,
        peak_location: grid.point(peak),
        peak_value,
        method: WidthMethod::GridInterpolated,
    })
}

/// Bisection root of a decreasing-through-zero function on `[lo, hi]`.
fn bisect<F: Fn(f64) -> f64>(mut lo: f64, mut hi: f64, f: F, tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Bracket(format!(
            "expected f(lo) > 0 > f(hi), got f({lo}) = {flo}, f({hi}) = {fhi}"
        )));
    }
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grid-free FWHM of the Kth-powered normalized fringe.
///
/// Solves `Î(α)^K = 1/2` on `(0, π/N)` by bisection and doubles the
/// half-width. Fails with [`Error::Bracket`] when the fringe is not
/// monotone on that interval (envelope zero inside it) or never halves.
pub fn fwhm_exact(params: &FringeParams, spec: KPowerSpec) -> Result<LineWidthResult> {
    let hi = PI / f64::from(params.n_slits()) * (1.0 - BRACKET_SHRINK);

    let mut prev = 1.0;
    for j in 1..=MONOTONE_PROBES {
        let a = hi * j as f64 / MONOTONE_PROBES as f64;
        let v = normalized_unchecked(params, a);
        if v > prev * (1.0 + 1e-12) + 1e-300 {
            return Err(Error::Bracket(format!(
                "normalized fringe increases near alpha = {a:.6} on (0, pi/N)"
            )));
        }
        prev = v;
    }

    let k = spec.order();
    let half_width = bisect(
        0.0,
        hi,
        |a| pow_k(normalized_unchecked(params, a), k) - 0.5,
        BISECTION_TOL,
    )?;
    Ok(LineWidthResult {
        fwhm: 2.0 * half_width,
        peak_location: 0.0,
        peak_value: 1.0,
        method: WidthMethod::BisectionExact,
    })
}

/// `Δ(1)/√K`, the straight shot-noise reference line.
pub fn snl_reference(width_k1: f64, k: u32) -> f64 {
    width_k1 / f64::from(k).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: u32,
    pub k: u32,
    pub fwhm: f64,
}

/// Exact widths for every `(N, K)` pair, rows ordered N-major as given.
pub fn sweep_fwhm(n_list: &[u32], k_list: &[u32], envelope_ratio: f64) -> Result<Vec<SweepRow>> {
    if n_list.is_empty() || k_list.is_empty() {
        return Err(Error::InvalidParameter("sweep needs non-empty N and K lists".into()));
    }
    let cases: Vec<(u32, u32)> = n_list
        .iter()
        .flat_map(|&n| k_list.iter().map(move |&k| (n, k)))
        .collect();
    cases
        .into_par_iter()
        .map(|(n, k)| {
            let params = FringeParams::new(n, envelope_ratio)?;
            let w = fwhm_exact(&params, KPowerSpec::new(k)?)?;
            Ok(SweepRow { n, k, fwhm: w.fwhm })
        })
        .collect()
}

/// Least-squares fit of `Δ = c·K^(−p)` to `(K, Δ)` samples taken at fixed N.
pub fn snl_fit(samples: &[(f64, f64)]) -> Result<ScalingFit> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need >= 3 samples, got {}", samples.len())));
    }
    if samples
        .iter()
        .any(|&(k, d)| !(k.is_finite() && d.is_finite() && k > 0.0 && d > 0.0))
    {
        return Err(Error::Fit("samples must be finite and positive".into()));
    }
    let mut ks: Vec<f64> = samples.iter().map(|s| s.0).collect();
    ks.sort_by(f64::total_cmp);
    if ks.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Fit("K values must be distinct".into()));
    }

    let n = samples.len() as f64;
    let (xs, ys): (Vec<f64>, Vec<f64>) = samples.iter().map(|&(k, d)| (k.ln(), d.ln())).unzip();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::Fit("degenerate K spread".into()));
    }
    let slope = sxy / sxx;
    let mut fit = ScalingFit {
        amplitude: (my - slope * mx).exp(),
        exponent: -slope,
        max_relative_deviation: 0.0,
    };
    fit.max_relative_deviation = samples
        .iter()
        .map(|&(k, d)| (d / fit.predict(k) - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fringe::{sample_curve, PhaseGrid};
    use approx::assert_abs_diff_eq;

    fn k(order: u32) -> KPowerSpec {
        KPowerSpec::new(order).unwrap()
    }

    fn params(n: u32) -> FringeParams {
        FringeParams::interference_only(n).unwrap()
    }

    // Independent closed form for N = 2: cos^(2K)(α) = 1/2.
    fn two_slit_width(order: u32) -> f64 {
        2.0 * 2f64.powf(-1.0 / (2.0 * f64::from(order))).acos()
    }

    // Dense scan + secant refinement, no bisection shared with the implementation.
    fn scan_width(p: &FringeParams, order: u32) -> f64 {
        let n = f64::from(p.n_slits());
        let g = |a: f64| {
            let r = ((n * a).sin() / (n * a.sin())).powi(2);
            r.powi(order as i32) - 0.5
        };
        let steps = 200_000;
        let hi = PI / n;
        let mut prev = (1e-15, g(1e-15));
        for i in 1..=steps {
            let a = hi * i as f64 / steps as f64;
            let v = g(a);
            if v <= 0.0 {
                let (mut x0, mut f0, mut x1, mut f1) = (prev.0, prev.1, a, v);
                for _ in 0..50 {
                    let x = x1 - f1 * (x1 - x0) / (f1 - f0);
                    if !x.is_finite() || (x - x1).abs() < 1e-16 {
                        break;
                    }
                    (x0, f0, x1, f1) = (x1, f1, x, g(x));
                }
                return 2.0 * x1;
            }
            prev = (a, v);
        }
        panic!("no crossing");
    }

    #[test]
    fn order_bounds() {
        assert!(KPowerSpec::new(0).is_err());
        assert!(KPowerSpec::new(MAX_ORDER + 1).is_err());
        assert!(KPowerSpec::new(MAX_ORDER).is_ok());
    }

    #[test]
    fn kth_power_examples() {
        let g3 = PhaseGrid::new(0.0, 1.0, 3).unwrap();
        let c = FringeCurve::new(g3, vec![1.0, 0.5, 0.25], true).unwrap();
        assert_eq!(kth_power(&c, k(1)).unwrap().values(), &[1.0, 0.5, 0.25]);

        let g2 = PhaseGrid::new(0.0, 1.0, 2).unwrap();
        let c = FringeCurve::new(g2, vec![1.0, 0.5], true).unwrap();
        let sq = kth_power(&c, k(2)).unwrap();
        assert_abs_diff_eq!(sq.values()[0], 1.0);
        assert_abs_diff_eq!(sq.values()[1], 0.25, epsilon = 1e-15);

        let c = sample_curve(&params(2), &PhaseGrid::new(0.0, PI / 4.0, 2).unwrap(), true);
        let p10 = kth_power(&c, k(10)).unwrap();
        assert_abs_diff_eq!(p10.values()[1], 2f64.powi(-10), epsilon = 1e-15);
        assert_abs_diff_eq!(p10.values()[1], 9.7656e-4, epsilon = 1e-8);
    }

    #[test]
    fn kth_power_rejects_unnormalized() {
        let c = sample_curve(&params(3), &PhaseGrid::new(-1.0, 1.0, 11).unwrap(), false);
        assert!(matches!(kth_power(&c, k(2)), Err(Error::Contract(_))));
    }

    #[test]
    fn kth_power_large_order_does_not_overflow() {
        let g = PhaseGrid::new(0.0, 1.0, 3).unwrap();
        let c = FringeCurve::new(g, vec![1.0, 0.999, 0.0], true).unwrap();
        let out = kth_power(&c, k(MAX_ORDER)).unwrap();
        assert_eq!(out.values()[0], 1.0);
        assert!(out.values()[1] >= 0.0 && out.values()[1] < 1e-300);
        assert_eq!(out.values()[2], 0.0);
    }

    #[test]
    fn grid_width_examples() {
        let grid = PhaseGrid::figure_default();
        let step = grid.step();

        let base = sample_curve(&params(2), &grid, true);
        let w = fwhm_grid(&base).unwrap();
        assert_abs_diff_eq!(w.fwhm, PI / 2.0, epsilon = step);
        assert_eq!(w.method, WidthMethod::GridInterpolated);
        assert_abs_diff_eq!(w.peak_location, 0.0, epsilon = 1e-12);

        let w = fwhm_grid(&kth_power(&base, k(100)).unwrap()).unwrap();
        assert_abs_diff_eq!(w.fwhm, two_slit_width(100), epsilon = 1e-4);
        assert_abs_diff_eq!(w.fwhm, 0.166_374, epsilon = 1e-4);

        let w = fwhm_grid(&sample_curve(&params(100), &grid, true)).unwrap();
        assert_abs_diff_eq!(w.fwhm, scan_width(&params(100), 1), epsilon = 1e-4);
        assert_abs_diff_eq!(w.fwhm, 2.7831e-2, epsilon = 1e-4);
    }

    #[test]
    fn grid_width_errors() {
        let grid = PhaseGrid::new(0.0, 1.0, 101).unwrap();
        let clipped = sample_curve(&params(2), &grid, true);
        assert!(matches!(fwhm_grid(&clipped), Err(Error::PeakClipped { index: 0 })));

        let narrow = PhaseGrid::new(-0.1, 0.1, 101).unwrap();
        let c = sample_curve(&params(2), &narrow, true);
        assert_eq!(fwhm_grid(&c), Err(Error::LineUnresolved));
    }

    #[test]
    fn grid_width_prefers_central_peak_on_ties() {
        // N=2 over [−π, π] has equal maxima at −π, 0, π
        let grid = PhaseGrid::new(-PI, PI, 4001).unwrap();
        let w = fwhm_grid(&sample_curve(&params(2), &grid, true)).unwrap();
        assert_abs_diff_eq!(w.peak_location, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.fwhm, PI / 2.0, epsilon = grid.step());
    }

    #[test]
    fn exact_width_examples() {
        let w = fwhm_exact(&params(2), k(1)).unwrap();
        assert_abs_diff_eq!(w.fwhm, PI / 2.0, epsilon = 1e-10);
        assert_eq!(w.method, WidthMethod::BisectionExact);

        // 2·arccos(2^(−1/8)) = 0.820586
        let w4 = fwhm_exact(&params(2), k(4)).unwrap().fwhm;
        assert_abs_diff_eq!(w4, two_slit_width(4), epsilon = 1e-6);
        assert_abs_diff_eq!(w4, 0.820_586, epsilon = 1e-6);

        let w = fwhm_exact(&params(200), k(100)).unwrap().fwhm;
        assert_abs_diff_eq!(w, scan_width(&params(200), 100), epsilon = 1e-9);
        assert_abs_diff_eq!(w, 1.4420e-3, epsilon = 1e-6);
        assert!((w / (PI / 2000.0) - 1.0).abs() < 0.10);
    }

    #[test]
    fn exact_width_matches_scan_oracle() {
        for n in [2u32, 3, 10, 57, 100] {
            for order in [1u32, 7, 50] {
                let got = fwhm_exact(&params(n), k(order)).unwrap().fwhm;
                assert_abs_diff_eq!(got, scan_width(&params(n), order), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn exact_width_bracket_errors() {
        // constant fringe never halves
        assert!(matches!(fwhm_exact(&params(1), k(1)), Err(Error::Bracket(_))));
        // envelope zero inside (0, π/N) makes the fringe non-monotone
        let p = FringeParams::new(2, 6.0).unwrap();
        assert!(matches!(fwhm_exact(&p, k(1)), Err(Error::Bracket(_))));
    }

    #[test]
    fn sweep_examples() {
        let rows = sweep_fwhm(&[2], &[1], 0.0).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!((rows[0].n, rows[0].k), (2, 1));
        assert_abs_diff_eq!(rows[0].fwhm, PI / 2.0, epsilon = 1e-10);

        let rows = sweep_fwhm(&[2, 10, 100], &[1], 0.0).unwrap();
        assert!(rows.windows(2).all(|w| w[1].fwhm < w[0].fwhm));
        let x = rows[2].fwhm * 100.0 / PI;
        assert!((0.85..=0.95).contains(&x), "{x}");

        assert!(sweep_fwhm(&[], &[1], 0.0).is_err());
    }

    #[test]
    fn sweep_preserves_input_order() {
        let rows = sweep_fwhm(&[10, 2, 5], &[3, 1], 0.0).unwrap();
        let keys: Vec<(u32, u32)> = rows.iter().map(|r| (r.n, r.k)).collect();
        assert_eq!(keys, vec![(10, 3), (10, 1), (2, 3), (2, 1), (5, 3), (5, 1)]);
    }

    #[test]
    fn fit_examples() {
        let exact: Vec<(f64, f64)> = [1.0f64, 4.0, 16.0].iter().map(|&k| (k, k.powf(-0.5))).collect();
        let f = snl_fit(&exact).unwrap();
        assert_abs_diff_eq!(f.exponent, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(f.amplitude, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.max_relative_deviation, 0.0, epsilon = 1e-12);

        let flat = [(1.0, 0.3), (2.0, 0.3), (5.0, 0.3)];
        assert_abs_diff_eq!(snl_fit(&flat).unwrap().exponent, 0.0, epsilon = 1e-12);

        let widths: Vec<(f64, f64)> = (1..=100)
            .map(|kk| (f64::from(kk), two_slit_width(kk)))
            .collect();
        let p = snl_fit(&widths).unwrap().exponent;
        assert!((0.45..=0.55).contains(&p), "{p}");
    }

    #[test]
    fn fit_rejects_degenerate_input() {
        assert!(snl_fit(&[(1.0, 1.0), (2.0, 0.7)]).is_err());
        assert!(snl_fit(&[(1.0, 1.0), (1.0, 0.7), (2.0, 0.5)]).is_err());
        assert!(snl_fit(&[(1.0, 1.0), (2.0, 0.0), (3.0, 0.5)]).is_err());
    }

    #[test]
    fn asymptotic_width_product() {
        // small-angle: Î^K ≈ exp(−K(N²−1)α²/3)
        for n in [2u32, 10, 100] {
            let nf = f64::from(n);
            let limit = 2.0 * (3.0 * 2f64.ln()).sqrt() * nf / (nf * nf - 1.0).sqrt();
            let w = fwhm_exact(&params(n), k(10_000)).unwrap().fwhm;
            let product = w * nf * 100.0;
            assert!((product / limit - 1.0).abs() < 0.02, "n={n} {product} vs {limit}");
        }
    }

    #[test]
    fn grid_and_exact_agree_within_two_steps() {
        let grid = PhaseGrid::figure_default();
        for n in [2u32, 10, 50, 100, 200] {
            let base = sample_curve(&params(n), &grid, true);
            for order in [1u32, 10, 100] {
                let g = fwhm_grid(&kth_power(&base, k(order)).unwrap()).unwrap().fwhm;
                let e = fwhm_exact(&params(n), k(order)).unwrap().fwhm;
                assert!((g - e).abs() <= 2.0 * grid.step(), "n={n} k={order}");
            }
        }
    }
}
