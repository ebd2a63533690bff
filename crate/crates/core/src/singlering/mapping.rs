//! Inverse direction: recover `F` and `ρ` from the eigenvector correlator.
//!
//! `O = F(1−F)/(πr²)` is quadratic in `F`, so `F = ½(1 ∓ √(1 − 4πr²O))`. The
//! minus sign holds between the inner rim and the radius where `F = 1/2`, the
//! plus sign beyond it. That radius is where `4πr²O` attains its maximum of 1.

use std::f64::consts::PI;

use super::SingleRingError;

/// Below this `|1 − 4πr²O|` the density mapping divides by ~0.
pub const BRANCH_POINT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// `F < 1/2`, inner part of the ring.
    Lower,
    /// `F > 1/2`, outer part of the ring.
    Upper,
}

fn discriminant(r: f64, o: f64) -> f64 {
    1.0 - 4.0 * PI * r * r * o
}

pub fn cdf_from_overlap(r: f64, o: f64, branch: Branch) -> Result<f64, SingleRingError> {
    let d = discriminant(r, o);
    if d < -1e-6 {
        return Err(SingleRingError::OutOfRange { r, discriminant: d });
    }
    let root = d.max(0.0).sqrt();
    Ok(match branch {
        Branch::Lower => 0.5 * (1.0 - root),
        Branch::Upper => 0.5 * (1.0 + root),
    })
}

/// `ρ = ±(2O + r·O′)/(2√(1 − 4πr²O))`, `+` on the lower branch.
pub fn density_from_overlap(r: f64, o: f64, d_o: f64, branch: Branch) -> Result<f64, SingleRingError> {
    let d = discriminant(r, o);
    if d.abs() < BRANCH_POINT_TOL {
        return Err(SingleRingError::SingularAtBranchPoint { r });
    }
    if d < 0.0 {
        return Err(SingleRingError::OutOfRange { r, discriminant: d });
    }
    let magnitude = (2.0 * o + r * d_o) / (2.0 * d.sqrt());
    Ok(match branch {
        Branch::Lower => magnitude,
        Branch::Upper => -magnitude + 0.0,
    })
}

/// Radius in `[lo, hi]` where `4πr²O(r)` peaks.
///
/// Every local maximum of a 4001-point scan is refined; if two or more of
/// them come within 1e-6 of 1 the branch assignment is ambiguous.
pub fn branch_point(o: &dyn Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64, SingleRingError> {
    const SCAN: usize = 4000;
    let q = |r: f64| 4.0 * PI * r * r * o(r);
    let radii: Vec<f64> = (0..=SCAN).map(|i| lo + (hi - lo) * i as f64 / SCAN as f64).collect();
    let values: Vec<f64> = radii.iter().map(|&r| q(r)).collect();

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for i in 0..=SCAN {
        let left = if i == 0 { f64::NEG_INFINITY } else { values[i - 1] };
        let right = if i == SCAN { f64::NEG_INFINITY } else { values[i + 1] };
        if values[i] > left && values[i] >= right {
            let r = golden_max(&q, radii[i.saturating_sub(1)], radii[(i + 1).min(SCAN)]);
            peaks.push((r, q(r)));
        }
    }
    if peaks.iter().filter(|p| p.1 >= 1.0 - 1e-6).count() > 1 {
        return Err(SingleRingError::AmbiguousBranch);
    }
    peaks
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|p| p.0)
        .ok_or(SingleRingError::AmbiguousBranch)
}

fn golden_max(q: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    for _ in 0..100 {
        if q(c) > q(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
        if (b - a).abs() < 1e-15 * b.abs().max(1.0) {
            break;
        }
    }
    0.5 * (a + b)
}

/// Density recovered from the overlap at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedDensity {
    pub r: f64,
    pub branch: Branch,
    /// `Err(SingularAtBranchPoint)` marks a flagged point, not a failure.
    pub density: Result<f64, SingleRingError>,
}

/// Apply [`density_from_overlap`] along `radii`, switching branch at the
/// peak of `4πr²O` located inside `[lo, hi]`.
pub fn densities_from_overlap(
    o: &dyn Fn(f64) -> f64,
    d_o: &dyn Fn(f64) -> f64,
    radii: &[f64],
    lo: f64,
    hi: f64,
) -> Result<Vec<MappedDensity>, SingleRingError> {
    let switch = branch_point(o, lo, hi)?;
    Ok(radii
        .iter()
        .map(|&r| {
            let branch = if r < switch { Branch::Lower } else { Branch::Upper };
            MappedDensity { r, branch, density: density_from_overlap(r, o(r), d_o(r), branch) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ginibre_o(r: f64) -> f64 {
        if r < 1.0 {
            (1.0 - r * r) / PI
        } else {
            0.0
        }
    }

    fn ginibre_do(r: f64) -> f64 {
        if r < 1.0 {
            -2.0 * r / PI
        } else {
            0.0
        }
    }

    #[test]
    fn rim_values() {
        assert_eq!(cdf_from_overlap(0.3, 0.0, Branch::Lower).unwrap(), 0.0);
        assert_eq!(cdf_from_overlap(0.3, 0.0, Branch::Upper).unwrap(), 1.0);
    }

    #[test]
    fn ginibre_branch_point_gives_half() {
        let r = 0.5f64.sqrt();
        for b in [Branch::Lower, Branch::Upper] {
            assert!((cdf_from_overlap(r, ginibre_o(r), b).unwrap() - 0.5).abs() < 1e-7);
        }
    }

    #[test]
    fn ginibre_lower_branch_roundtrip() {
        let f = cdf_from_overlap(0.5, ginibre_o(0.5), Branch::Lower).unwrap();
        assert!((f - 0.25).abs() < 1e-15);
    }

    #[test]
    fn out_of_range_overlap() {
        assert!(matches!(cdf_from_overlap(1.0, 1.0, Branch::Lower), Err(SingleRingError::OutOfRange { .. })));
        // tiny overshoot is clamped
        let o = (1.0 + 1e-12) / (4.0 * PI);
        assert!((cdf_from_overlap(1.0, o, Branch::Upper).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ginibre_density_on_both_branches() {
        let lower = density_from_overlap(0.3, ginibre_o(0.3), ginibre_do(0.3), Branch::Lower).unwrap();
        let upper = density_from_overlap(0.9, ginibre_o(0.9), ginibre_do(0.9), Branch::Upper).unwrap();
        assert!((lower - 1.0 / PI).abs() < 1e-14);
        assert!((upper - 1.0 / PI).abs() < 1e-14);
        assert_eq!(density_from_overlap(1.5, 0.0, 0.0, Branch::Upper).unwrap(), 0.0);
    }

    #[test]
    fn branch_point_is_flagged() {
        let r = 0.5f64.sqrt();
        let res = density_from_overlap(r, ginibre_o(r), ginibre_do(r), Branch::Lower);
        assert!(matches!(res, Err(SingleRingError::SingularAtBranchPoint { .. })));
    }

    #[test]
    fn branch_point_location() {
        let bp = branch_point(&ginibre_o, 0.0, 1.0).unwrap();
        assert!((bp - 0.5f64.sqrt()).abs() < 1e-7, "{bp}");
    }

    #[test]
    fn double_peak_is_ambiguous() {
        // 4πr²O touching 1 at r = 0.3 and r = 0.7
        let o = |r: f64| {
            let bump = |c: f64| (-(r - c).powi(2) / 0.001).exp();
            (bump(0.3) + bump(0.7)) / (4.0 * PI * r * r)
        };
        assert_eq!(branch_point(&o, 0.05, 1.0), Err(SingleRingError::AmbiguousBranch));
    }
}
