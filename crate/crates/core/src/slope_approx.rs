//! Approximations of the previous-step first spatial moment `ψ̂ⁿ⁻¹`.
//!
//! Reduced-memory methods keep only the cell averages `ψ̄ⁿ⁻¹` between time
//! steps. At the next step the slope term of the first-moment equation is
//! replaced by an effective value `ψ̂*` built by one of the strategies here:
//!
//! * zero slope: `ψ̂* = 0`;
//! * P1: `ψ̂* = ½(φ̂ⁿ⁻¹ + 3μĴⁿ⁻¹)` from the stored low-order moments;
//! * SR-SL: a neighbour-difference reconstruction passed through minmod;
//! * β-bar and β-LR: `ψ̂*` tied to the current-step unknowns through
//!   scalar-flux change ratios, giving per-cell coefficient pairs.

use std::fmt;
use std::str::FromStr;

use crate::error::ReconstructionError;
use crate::grid::AngularQuadrature;
use crate::losm::LowOrderState;
use crate::transport::SlopeCoefficients;

/// Which previous-step slope treatment a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodKind {
    /// Persist `ψ̂ⁿ⁻¹` exactly.
    Reference,
    ZeroSlope,
    P1,
    SrSl,
    BetaBar,
    BetaLr,
}

impl MethodKind {
    pub const ALL: [MethodKind; 6] = [
        MethodKind::Reference,
        MethodKind::ZeroSlope,
        MethodKind::P1,
        MethodKind::SrSl,
        MethodKind::BetaBar,
        MethodKind::BetaLr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Reference => "reference",
            MethodKind::ZeroSlope => "zero-slope",
            MethodKind::P1 => "p1",
            MethodKind::SrSl => "sr-sl",
            MethodKind::BetaBar => "beta-bar",
            MethodKind::BetaLr => "beta-lr",
        }
    }

    /// Whether `ψ̂` is dropped at the end of each step.
    pub fn is_reduced(self) -> bool {
        self != MethodKind::Reference
    }

    /// β methods couple the slope to the current iterate.
    pub fn is_nonlinear(self) -> bool {
        matches!(self, MethodKind::BetaBar | MethodKind::BetaLr)
    }
}

impl fmt::Display for MethodKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownMethod(pub String);

impl fmt::Display for UnknownMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown method '{}' (expected one of: reference, zero-slope, p1, sr-sl, beta-bar, beta-lr)",
            self.0
        )
    }
}

impl std::error::Error for UnknownMethod {}

impl FromStr for MethodKind {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MethodKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| UnknownMethod(s.to_string()))
    }
}

/// `ψ̂* = 0` for every (direction, cell).
pub fn zero_slope(cells: usize, directions: usize) -> Vec<f64> {
    vec![0.0; cells * directions]
}

/// P1 expansion of the stored low-order first moments, direction-major.
pub fn p1_slope(previous: &LowOrderState, quadrature: &AngularQuadrature) -> Vec<f64> {
    let cells = previous.cells();
    quadrature
        .directions()
        .iter()
        .flat_map(|&mu| {
            (0..cells)
                .map(move |i| 0.5 * (previous.slope_flux[i] + 3.0 * mu * previous.slope_current[i]))
        })
        .collect()
}

/// Unlimited slope reconstruction from neighbouring cell averages.
///
/// Interior cells use `¼(ψ̄_{i+1} − ψ̄_{i−1})`. Boundary cells replace the
/// missing neighbour on the inflow side by the previous-step inflow and on
/// the outflow side by the cell's own average.
pub fn sr_raw_slope(
    prev_avg: &[f64],
    cells: usize,
    quadrature: &AngularQuadrature,
    prev_incoming: &[f64],
) -> Result<Vec<f64>, ReconstructionError> {
    if cells < 2 {
        return Err(ReconstructionError::TooFewCells { cells });
    }
    let mut out = vec![0.0; prev_avg.len()];
    for (m, &mu) in quadrature.directions().iter().enumerate() {
        let avg = &prev_avg[m * cells..(m + 1) * cells];
        let slope = &mut out[m * cells..(m + 1) * cells];
        for i in 1..cells - 1 {
            slope[i] = 0.25 * (avg[i + 1] - avg[i - 1]);
        }
        let last = cells - 1;
        if mu > 0.0 {
            slope[0] = 0.25 * (avg[1] - prev_incoming[m]);
            slope[last] = 0.25 * (avg[last] - avg[last - 1]);
        } else {
            slope[0] = 0.25 * (avg[1] - avg[0]);
            slope[last] = 0.25 * (prev_incoming[m] - avg[last - 1]);
        }
    }
    Ok(out)
}

/// `sign(f1)·min(|f1|, |f2|, |f3|)` when all three share a sign, else 0.
pub fn minmod(f1: f64, f2: f64, f3: f64) -> f64 {
    if f1 > 0.0 && f2 > 0.0 && f3 > 0.0 {
        f1.min(f2).min(f3)
    } else if f1 < 0.0 && f2 < 0.0 && f3 < 0.0 {
        f1.max(f2).max(f3)
    } else {
        0.0
    }
}

/// Slope reconstruction with minmod limiting in interior cells; boundary
/// cells keep the unlimited boundary reconstruction.
pub fn sr_sl_slope(
    prev_avg: &[f64],
    cells: usize,
    quadrature: &AngularQuadrature,
    prev_incoming: &[f64],
) -> Result<Vec<f64>, ReconstructionError> {
    let mut out = sr_raw_slope(prev_avg, cells, quadrature, prev_incoming)?;
    for m in 0..quadrature.len() {
        let avg = &prev_avg[m * cells..(m + 1) * cells];
        let slope = &mut out[m * cells..(m + 1) * cells];
        for i in 1..cells - 1 {
            slope[i] = minmod(
                slope[i],
                0.5 * (avg[i] - avg[i - 1]),
                0.5 * (avg[i + 1] - avg[i]),
            );
        }
    }
    Ok(out)
}

/// Safeguards for flux-change ratios.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaGuard {
    /// Denominators with `|den| ≤ δ·max(|num|, tiny)` are treated as zero.
    pub delta: f64,
    /// Upper clamp; ratios are also clamped below at 0.
    pub beta_max: f64,
}

impl Default for BetaGuard {
    fn default() -> Self {
        Self {
            delta: 1e-12,
            beta_max: 2.0,
        }
    }
}

impl BetaGuard {
    pub fn ratio(&self, previous: f64, current: f64) -> f64 {
        if current.abs() <= self.delta * previous.abs().max(f64::MIN_POSITIVE) {
            return self.beta_max;
        }
        let beta = previous / current;
        if beta.is_nan() {
            return self.beta_max;
        }
        beta.clamp(0.0, self.beta_max)
    }
}

/// `ψ̂* = β_i ψ̂ⁿ` with `β_i = φ̄ⁿ⁻¹/φ̄ⁿ`.
pub fn beta_bar_coefficients(
    prev_avg_flux: &[f64],
    current_avg_flux: &[f64],
    guard: &BetaGuard,
) -> Vec<SlopeCoefficients> {
    prev_avg_flux
        .iter()
        .zip(current_avg_flux)
        .map(|(&p, &c)| SlopeCoefficients {
            avg: 0.0,
            slope: guard.ratio(p, c),
        })
        .collect()
}

/// Coefficient form of `½(β_R ψ_R − β_L ψ_L)` for corner ratios
/// `β_L`, `β_R`.
pub fn corner_beta_coefficients(beta_left: f64, beta_right: f64) -> SlopeCoefficients {
    SlopeCoefficients {
        avg: 0.5 * (beta_right - beta_left),
        slope: 0.5 * (beta_right + beta_left),
    }
}

/// Corner-ratio coefficients from the low-order scalar flux corners.
pub fn beta_lr_coefficients(
    previous: &LowOrderState,
    current: &LowOrderState,
    guard: &BetaGuard,
) -> Vec<SlopeCoefficients> {
    (0..previous.cells())
        .map(|i| {
            let bl = guard.ratio(previous.flux_left(i), current.flux_left(i));
            let br = guard.ratio(previous.flux_right(i), current.flux_right(i));
            corner_beta_coefficients(bl, br)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_dir_quad() -> AngularQuadrature {
        AngularQuadrature::double_gauss(1).unwrap()
    }

    #[test]
    fn method_names_round_trip() {
        for m in MethodKind::ALL {
            assert_eq!(m.name().parse::<MethodKind>().unwrap(), m);
        }
        assert!("superbee".parse::<MethodKind>().is_err());
    }

    #[test]
    fn minmod_truth_table() {
        assert_eq!(minmod(1.0, 2.0, 3.0), 1.0);
        assert_eq!(minmod(1.0, -2.0, 3.0), 0.0);
        assert_eq!(minmod(-2.0, -1.0, -3.0), -1.0);
        assert_eq!(minmod(0.0, 1.0, 1.0), 0.0);
        assert_eq!(minmod(3.0, 2.0, 1.0), 1.0);
    }

    #[test]
    fn p1_values_and_moments() {
        let q = AngularQuadrature::double_gauss(4).unwrap();
        let mut lo = LowOrderState::zeros(2);
        assert!(p1_slope(&lo, &q).iter().all(|&v| v == 0.0));
        lo.slope_flux = vec![2.0, 2.0];
        assert!(p1_slope(&lo, &q).iter().all(|&v| v == 1.0));

        lo.slope_flux = vec![0.3, -1.2];
        lo.slope_current = vec![0.07, 0.4];
        let s = p1_slope(&lo, &q);
        for i in 0..2 {
            let (mut phi, mut j) = (0.0, 0.0);
            for (m, (&mu, &w)) in q.directions().iter().zip(q.weights()).enumerate() {
                phi += w * s[m * 2 + i];
                j += w * mu * s[m * 2 + i];
            }
            assert!((phi - lo.slope_flux[i]).abs() < 1e-13);
            assert!((j - lo.slope_current[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn raw_slope_formulas() {
        let q = one_dir_quad(); // μ = −0.5, +0.5
                                // direction 1 is μ > 0
        let avg = [1.0, 2.0, 4.0, 1.0, 2.0, 4.0];
        let s = sr_raw_slope(&avg, 3, &q, &[0.0, 0.0]).unwrap();
        assert_eq!(s[3 + 1], 0.75);

        let avg = [3.0, 3.0, 3.0, 3.0, 3.0, 3.0];
        let s = sr_raw_slope(&avg, 3, &q, &[3.0, 3.0]).unwrap();
        assert!(s.iter().all(|&v| v == 0.0));

        let avg = [0.0, 0.0, 0.0, 5.0, 3.0, 0.0];
        let s = sr_raw_slope(&avg, 3, &q, &[0.0, 1.0]).unwrap();
        assert_eq!(s[3], 0.5);
    }

    #[test]
    fn raw_slope_boundary_by_direction() {
        let q = one_dir_quad();
        let avg = [1.0, 2.0, 4.0, 1.0, 2.0, 4.0];
        let s = sr_raw_slope(&avg, 3, &q, &[8.0, 0.5]).unwrap();
        // μ < 0: cell 1 outflow side, cell I inflow side
        assert_eq!(s[0], 0.25 * (2.0 - 1.0));
        assert_eq!(s[2], 0.25 * (8.0 - 2.0));
        // μ > 0
        assert_eq!(s[3], 0.25 * (2.0 - 0.5));
        assert_eq!(s[5], 0.25 * (4.0 - 2.0));
    }

    #[test]
    fn single_cell_unsupported() {
        let q = one_dir_quad();
        assert_eq!(
            sr_raw_slope(&[1.0, 1.0], 1, &q, &[0.0, 0.0]),
            Err(ReconstructionError::TooFewCells { cells: 1 })
        );
    }

    #[test]
    fn limited_slope_examples() {
        let q = one_dir_quad();
        let s = sr_sl_slope(&[1.0, 2.0, 4.0, 1.0, 2.0, 4.0], 3, &q, &[0.0, 0.0]).unwrap();
        assert_eq!(s[4], 0.5);
        let s = sr_sl_slope(&[1.0, 3.0, 2.0, 1.0, 3.0, 2.0], 3, &q, &[0.0, 0.0]).unwrap();
        assert_eq!(s[4], 0.0);
        let s = sr_sl_slope(&[1.0, 2.0, 3.0, 1.0, 2.0, 3.0], 3, &q, &[0.0, 0.0]).unwrap();
        assert_eq!(s[4], 0.5);
    }

    #[test]
    fn beta_bar_examples() {
        let g = BetaGuard::default();
        let c = beta_bar_coefficients(&[2.0, 3.0, 1.0], &[4.0, 3.0, 0.0], &g);
        assert_eq!(
            c[0],
            SlopeCoefficients {
                avg: 0.0,
                slope: 0.5
            }
        );
        assert_eq!(c[1].slope, 1.0);
        assert_eq!(c[2].slope, g.beta_max);
    }

    #[test]
    fn beta_guard_clamps() {
        let g = BetaGuard::default();
        assert_eq!(g.ratio(1.0, -1.0), 0.0);
        assert_eq!(g.ratio(10.0, 1.0), 2.0);
        assert_eq!(g.ratio(1.0, 1e-13), 2.0);
        assert_eq!(g.ratio(0.0, 0.0), 2.0);
        assert_eq!(g.ratio(0.5, 1.0), 0.5);
    }

    #[test]
    fn beta_lr_examples() {
        let g = BetaGuard::default();
        // φ_R: 3 → 2, φ_L: 1 → 2  ⇒ β_R = 1.5, β_L = 0.5
        let mut prev = LowOrderState::zeros(1);
        prev.avg_flux = vec![2.0];
        prev.slope_flux = vec![1.0];
        let mut cur = LowOrderState::zeros(1);
        cur.avg_flux = vec![2.0];
        let c = beta_lr_coefficients(&prev, &cur, &g);
        assert_eq!(
            c[0],
            SlopeCoefficients {
                avg: 0.5,
                slope: 1.0
            }
        );

        // steady state
        let c = beta_lr_coefficients(&prev, &prev, &g);
        assert_eq!(
            c[0],
            SlopeCoefficients {
                avg: 0.0,
                slope: 1.0
            }
        );

        // equal corner ratios reduce to the β-bar form
        assert_eq!(
            corner_beta_coefficients(0.8, 0.8),
            SlopeCoefficients {
                avg: 0.0,
                slope: 0.8
            }
        );
    }

    proptest! {
        #[test]
        fn corner_coefficients_substitute_exactly(
            bl in 0.0f64..2.0, br in 0.0f64..2.0, a in -10.0f64..10.0, s in -10.0f64..10.0
        ) {
            let c = corner_beta_coefficients(bl, br);
            let direct = 0.5 * (br * (a + s) - bl * (a - s));
            let form = c.avg * a + c.slope * s;
            prop_assert!((direct - form).abs() <= 1e-12 * (1.0 + direct.abs()));
        }

        #[test]
        fn limiter_bounded_by_its_arguments(avg in proptest::collection::vec(-5.0f64..5.0, 3..12)) {
            let q = one_dir_quad();
            let cells = avg.len();
            let both: Vec<f64> = avg.iter().chain(&avg).copied().collect();
            let raw = sr_raw_slope(&both, cells, &q, &[0.0, 0.0]).unwrap();
            let lim = sr_sl_slope(&both, cells, &q, &[0.0, 0.0]).unwrap();
            for i in 1..cells - 1 {
                let l = lim[cells + i].abs();
                prop_assert!(l <= raw[cells + i].abs());
                prop_assert!(l <= 0.5 * (avg[i] - avg[i - 1]).abs());
                prop_assert!(l <= 0.5 * (avg[i + 1] - avg[i]).abs());
            }
        }
    }
}
