//! Radial Monte-Carlo estimators of `ρ(r)`, `O(r)` and `c(r)`.
//!
//! Histograms are accumulated per sample so that error bars come from the
//! spread across samples; eigenvalues of one matrix are correlated and are
//! never treated as independent draws.

use std::f64::consts::PI;

use thiserror::Error;

use crate::singlering::{AnalyticModel, RingSupport};
use crate::spectral::OverlapRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("invalid radial grid: {0}")]
    InvalidGrid(String),
    #[error("profiles do not match: {0}")]
    Mismatch(String),
    #[error("standard errors need at least 2 samples, have {0}")]
    InsufficientSamples(u64),
    #[error("no bins fall inside the bulk window [{lo}, {hi}]")]
    EmptyBulk { lo: f64, hi: f64 },
    #[error("edge scaling fit needs at least 3 distinct N, got {0}")]
    UnderDetermined(usize),
}

/// Annular bins `[edge_b, edge_{b+1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    edges: Vec<f64>,
}

/// Where a radius falls relative to a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Below,
    Bin(usize),
    Above,
}

impl RadialGrid {
    pub fn from_edges(edges: Vec<f64>) -> Result<Self, StatsError> {
        if edges.len() < 2 {
            return Err(StatsError::InvalidGrid("need at least two edges".into()));
        }
        if edges[0] < 0.0 || !edges.iter().all(|e| e.is_finite()) {
            return Err(StatsError::InvalidGrid("edges must be finite and nonnegative".into()));
        }
        if edges.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(StatsError::InvalidGrid("edges must be strictly increasing".into()));
        }
        Ok(Self { edges })
    }

    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Result<Self, StatsError> {
        if bins == 0 {
            return Err(StatsError::InvalidGrid("bin count must be positive".into()));
        }
        let mut edges: Vec<f64> = (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect();
        edges[bins] = hi;
        Self::from_edges(edges)
    }

    pub fn log_spaced(lo: f64, hi: f64, bins: usize) -> Result<Self, StatsError> {
        if !(lo > 0.0) || bins == 0 {
            return Err(StatsError::InvalidGrid("log grid needs lo > 0 and a positive bin count".into()));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let mut edges: Vec<f64> = (0..=bins).map(|i| (a + (b - a) * i as f64 / bins as f64).exp()).collect();
        // exp(ln x) need not return x
        edges[0] = lo;
        edges[bins] = hi;
        Self::from_edges(edges)
    }

    /// Uniform over `[max(0, r_min − 0.1), r_max + 0.1]` for a bounded ring,
    /// log-spaced over `[10⁻², 10²]` otherwise.
    pub fn for_support(support: RingSupport, bins: usize) -> Result<Self, StatsError> {
        if support.is_bounded() {
            Self::uniform((support.r_min - 0.1).max(0.0), support.r_max + 0.1, bins)
        } else {
            let lo = if support.r_min > 0.0 { support.r_min } else { 1e-2 };
            Self::log_spaced(lo, lo.max(1e-2) * 1e4, bins)
        }
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn lo(&self, b: usize) -> f64 {
        self.edges[b]
    }

    pub fn hi(&self, b: usize) -> f64 {
        self.edges[b + 1]
    }

    pub fn mid(&self, b: usize) -> f64 {
        0.5 * (self.edges[b] + self.edges[b + 1])
    }

    pub fn area(&self, b: usize) -> f64 {
        PI * (self.edges[b + 1].powi(2) - self.edges[b].powi(2))
    }

    pub fn locate(&self, r: f64) -> Location {
        if r < self.edges[0] {
            return Location::Below;
        }
        if r >= *self.edges.last().unwrap() {
            return Location::Above;
        }
        // partition_point gives the first edge strictly greater than r
        Location::Bin(self.edges.partition_point(|&e| e <= r) - 1)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct BinSums {
    count: u64,
    overlap: f64,
    count_sq: f64,
    overlap_sq: f64,
    cross: f64,
}

impl BinSums {
    fn add_sample(&mut self, count: u64, overlap: f64) {
        let k = count as f64;
        self.count += count;
        self.overlap += overlap;
        self.count_sq += k * k;
        self.overlap_sq += overlap * overlap;
        self.cross += k * overlap;
    }

    fn merge(&mut self, other: &BinSums) {
        self.count += other.count;
        self.overlap += other.overlap;
        self.count_sq += other.count_sq;
        self.overlap_sq += other.overlap_sq;
        self.cross += other.cross;
    }
}

/// Running radial histogram of eigenvalue counts and `Σ O_ii`.
///
/// Profiles built from disjoint sample sets merge into the profile of their
/// union; merging in sample order reproduces a serial run bit for bit.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    grid: RadialGrid,
    n: usize,
    samples: u64,
    rejected: u64,
    bins: Vec<BinSums>,
    below: BinSums,
    above: BinSums,
}

impl RadialProfile {
    pub fn new(grid: RadialGrid, n: usize) -> Self {
        let bins = vec![BinSums::default(); grid.bins()];
        Self { grid, n, samples: 0, rejected: 0, bins, below: BinSums::default(), above: BinSums::default() }
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn rejected(&self) -> u64 {
        self.rejected
    }

    pub fn record_rejections(&mut self, count: u64) {
        self.rejected += count;
    }

    /// Add one accepted sample.
    pub fn accumulate(&mut self, records: &[OverlapRecord]) -> Result<(), StatsError> {
        if records.len() != self.n {
            return Err(StatsError::Mismatch(format!(
                "sample has {} eigenvalues, profile expects N = {}",
                records.len(),
                self.n
            )));
        }
        let nb = self.grid.bins();
        // slot nb is below the grid, nb + 1 above it
        let mut counts = vec![0u64; nb + 2];
        let mut overlaps = vec![0.0f64; nb + 2];
        for rec in records {
            let slot = match self.grid.locate(rec.modulus()) {
                Location::Bin(b) => b,
                Location::Below => nb,
                Location::Above => nb + 1,
            };
            counts[slot] += 1;
            overlaps[slot] += rec.overlap;
        }
        for b in 0..nb {
            self.bins[b].add_sample(counts[b], overlaps[b]);
        }
        self.below.add_sample(counts[nb], overlaps[nb]);
        self.above.add_sample(counts[nb + 1], overlaps[nb + 1]);
        self.samples += 1;
        Ok(())
    }

    pub fn merge(&mut self, other: &RadialProfile) -> Result<(), StatsError> {
        if self.grid != other.grid || self.n != other.n {
            return Err(StatsError::Mismatch("grid or dimension differs".into()));
        }
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            a.merge(b);
        }
        self.below.merge(&other.below);
        self.above.merge(&other.above);
        self.samples += other.samples;
        self.rejected += other.rejected;
        Ok(())
    }

    /// Finalized per-bin estimates. Standard errors are NaN when fewer than
    /// two samples were accumulated.
    pub fn estimates(&self) -> ProfileEstimates {
        let m = self.samples as f64;
        let n = self.n as f64;
        let bins = self
            .bins
            .iter()
            .enumerate()
            .map(|(b, s)| {
                let area = self.grid.area(b);
                let spread = SampleSpread::of(s, self.samples);
                let (c, c_se) = if s.count > 0 {
                    (s.overlap / (n * s.count as f64), spread.ratio_se / n)
                } else {
                    (f64::NAN, f64::NAN)
                };
                BinEstimate {
                    count: s.count,
                    rho: s.count as f64 / (n * m * area),
                    rho_se: spread.count_se / (n * area),
                    overlap: s.overlap / (n * n * m * area),
                    overlap_se: spread.overlap_se / (n * n * area),
                    c,
                    c_se,
                }
            })
            .collect();
        ProfileEstimates {
            grid: self.grid.clone(),
            n: self.n,
            samples: self.samples,
            rejected: self.rejected,
            below: self.below.count,
            above: self.above.count,
            bins,
        }
    }

    /// Per-bin standard errors of `(ρ̂, Ô)`.
    pub fn standard_errors(&self) -> Result<Vec<(f64, f64)>, StatsError> {
        if self.samples < 2 {
            return Err(StatsError::InsufficientSamples(self.samples));
        }
        Ok(self.estimates().bins.iter().map(|b| (b.rho_se, b.overlap_se)).collect())
    }

    /// `Σ O_ii` over in-grid eigenvalues.
    pub fn in_grid_overlap_sum(&self) -> f64 {
        self.bins.iter().map(|b| b.overlap).sum()
    }
}

/// Standard errors of per-sample means, plus the delta-method error of the
/// ratio `Σ overlap / Σ count`.
struct SampleSpread {
    count_se: f64,
    overlap_se: f64,
    ratio_se: f64,
}

impl SampleSpread {
    fn of(s: &BinSums, samples: u64) -> Self {
        if samples < 2 {
            return Self { count_se: f64::NAN, overlap_se: f64::NAN, ratio_se: f64::NAN };
        }
        let m = samples as f64;
        let mean_k = s.count as f64 / m;
        let mean_o = s.overlap / m;
        let var_k = ((s.count_sq - m * mean_k * mean_k) / (m - 1.0)).max(0.0);
        let var_o = ((s.overlap_sq - m * mean_o * mean_o) / (m - 1.0)).max(0.0);
        let cov = (s.cross - m * mean_k * mean_o) / (m - 1.0);
        let ratio_se = if mean_k > 0.0 {
            let ratio = mean_o / mean_k;
            ((var_o - 2.0 * ratio * cov + ratio * ratio * var_k).max(0.0) / (m * mean_k * mean_k)).sqrt()
        } else {
            f64::NAN
        };
        Self { count_se: (var_k / m).sqrt(), overlap_se: (var_o / m).sqrt(), ratio_se }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinEstimate {
    pub count: u64,
    pub rho: f64,
    pub rho_se: f64,
    pub overlap: f64,
    pub overlap_se: f64,
    /// Mean of `O_ii/N` in the bin; NaN when the bin is empty.
    pub c: f64,
    pub c_se: f64,
}

/// Finalized radial profile, independent of how it was accumulated.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEstimates {
    pub grid: RadialGrid,
    pub n: usize,
    pub samples: u64,
    pub rejected: u64,
    /// Eigenvalues below the first edge.
    pub below: u64,
    /// Eigenvalues at or beyond the last edge.
    pub above: u64,
    pub bins: Vec<BinEstimate>,
}

impl ProfileEstimates {
    /// Profile with analytic values in place of estimates and zero errors.
    pub fn analytic(model: &AnalyticModel, grid: RadialGrid, n: usize) -> Self {
        let bins = (0..grid.bins())
            .map(|b| {
                let r = grid.mid(b);
                BinEstimate {
                    count: 1,
                    rho: model.radial_density(r),
                    rho_se: 0.0,
                    overlap: model.overlap_correlator(r),
                    overlap_se: 0.0,
                    c: model.conditional_kappa2(r).unwrap_or(f64::NAN),
                    c_se: 0.0,
                }
            })
            .collect();
        Self { grid, n, samples: 1, rejected: 0, below: 0, above: 0, bins }
    }
}

/// Bulk window and thresholds for [`compare`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Edge exclusion is `c_edge/√N` on each side of the ring.
    pub c_edge: f64,
    /// Overrides the inner end of the bulk window.
    pub bulk_lo: Option<f64>,
    /// Overrides the outer end of the bulk window.
    pub bulk_hi: Option<f64>,
    /// Bins with fewer eigenvalues are left out of the bulk.
    pub min_count: u64,
}

impl Default for CompareOptions {
    fn default() -> Self {
        Self { c_edge: 3.0, bulk_lo: None, bulk_hi: None, min_count: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinComparison {
    pub rho: f64,
    pub overlap: f64,
    pub c: f64,
    pub in_bulk: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub model: String,
    pub bulk_lo: f64,
    pub bulk_hi: f64,
    pub bins: Vec<BinComparison>,
    pub bulk_bins: usize,
    pub bulk_sup_err_o: f64,
    /// Root mean square over bulk bins.
    pub bulk_l2_err_o: f64,
    pub bulk_sup_err_rho: f64,
    pub bulk_l2_err_rho: f64,
    /// `max |ĉ/c − 1|` over bulk bins.
    pub bulk_sup_rel_err_c: f64,
    /// Occupied bins outside the bulk; reported, never judged.
    pub edge_sup_err_o: f64,
    pub edge_sup_err_rho: f64,
}

/// Evaluate `model` at bin midpoints and measure bulk errors.
pub fn compare(
    profile: &ProfileEstimates,
    model: &AnalyticModel,
    opts: &CompareOptions,
) -> Result<ComparisonReport, StatsError> {
    let support = model.support();
    let delta = opts.c_edge / (profile.n as f64).sqrt();
    let grid = &profile.grid;
    let grid_end = *grid.edges().last().unwrap();
    let bulk_lo = opts.bulk_lo.unwrap_or(support.r_min + delta);
    let bulk_hi = opts.bulk_hi.unwrap_or(if support.is_bounded() { support.r_max - delta } else { grid_end });

    let mut bins = Vec::with_capacity(grid.bins());
    let (mut sup_o, mut sq_o, mut sup_rho, mut sq_rho, mut sup_c) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let (mut edge_o, mut edge_rho) = (0.0f64, 0.0f64);
    let mut in_bulk_count = 0usize;
    for (b, est) in profile.bins.iter().enumerate() {
        let r = grid.mid(b);
        let cmp = BinComparison {
            rho: model.radial_density(r),
            overlap: model.overlap_correlator(r),
            c: model.conditional_kappa2(r).unwrap_or(f64::NAN),
            in_bulk: grid.lo(b) >= bulk_lo && grid.hi(b) <= bulk_hi && est.count >= opts.min_count,
        };
        let err_o = (est.overlap - cmp.overlap).abs();
        let err_rho = (est.rho - cmp.rho).abs();
        if cmp.in_bulk {
            in_bulk_count += 1;
            sup_o = sup_o.max(err_o);
            sup_rho = sup_rho.max(err_rho);
            sq_o += err_o * err_o;
            sq_rho += err_rho * err_rho;
            if cmp.c.is_finite() && est.c.is_finite() {
                sup_c = sup_c.max((est.c / cmp.c - 1.0).abs());
            } else {
                sup_c = f64::INFINITY;
            }
        } else if est.count > 0 {
            edge_o = edge_o.max(err_o);
            edge_rho = edge_rho.max(err_rho);
        }
        bins.push(cmp);
    }
    if in_bulk_count == 0 {
        return Err(StatsError::EmptyBulk { lo: bulk_lo, hi: bulk_hi });
    }
    let k = in_bulk_count as f64;
    Ok(ComparisonReport {
        model: model.label(),
        bulk_lo,
        bulk_hi,
        bins,
        bulk_bins: in_bulk_count,
        bulk_sup_err_o: sup_o,
        bulk_l2_err_o: (sq_o / k).sqrt(),
        bulk_sup_err_rho: sup_rho,
        bulk_l2_err_rho: (sq_rho / k).sqrt(),
        bulk_sup_rel_err_c: sup_c,
        edge_sup_err_o: edge_o,
        edge_sup_err_rho: edge_rho,
    })
}

/// Local-linear estimate of `E(O_ii | |λ_i| = 1)`.
///
/// Eigenvalues with `||λ| − 1| ≤ half_width` enter a least-squares line
/// `O_ii ≈ a + b(|λ| − 1)`; the intercept `a` is the estimate. Unlike a plain
/// window mean it is not biased by the steep radial slope of `O_ii` across
/// the edge. Accumulators merge by summation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeWindow {
    pub n: usize,
    pub half_width: f64,
    count: u64,
    sx: f64,
    sxx: f64,
    sy: f64,
    sxy: f64,
    syy: f64,
}

/// Result of [`EdgeWindow::estimate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeEstimate {
    pub n: usize,
    pub count: u64,
    pub mean_overlap: f64,
    pub se: f64,
}

impl EdgeWindow {
    /// Default window half-width `0.5/√N`.
    pub fn new(n: usize) -> Self {
        Self::with_half_width(n, 0.5 / (n as f64).sqrt())
    }

    pub fn with_half_width(n: usize, half_width: f64) -> Self {
        Self { n, half_width, count: 0, sx: 0.0, sxx: 0.0, sy: 0.0, sxy: 0.0, syy: 0.0 }
    }

    pub fn accumulate(&mut self, records: &[OverlapRecord]) {
        for rec in records {
            let x = rec.modulus() - 1.0;
            if x.abs() <= self.half_width {
                let y = rec.overlap;
                self.count += 1;
                self.sx += x;
                self.sxx += x * x;
                self.sy += y;
                self.sxy += x * y;
                self.syy += y * y;
            }
        }
    }

    pub fn merge(&mut self, other: &EdgeWindow) {
        self.count += other.count;
        self.sx += other.sx;
        self.sxx += other.sxx;
        self.sy += other.sy;
        self.sxy += other.sxy;
        self.syy += other.syy;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn estimate(&self) -> EdgeEstimate {
        let k = self.count as f64;
        let mx = self.sx / k;
        let my = self.sy / k;
        let sxx = self.sxx - k * mx * mx;
        let sxy = self.sxy - k * mx * my;
        let syy = self.syy - k * my * my;
        let slope = sxy / sxx;
        let intercept = my - slope * mx;
        let resid_var = ((syy - slope * sxy) / (k - 2.0)).max(0.0);
        let se = (resid_var * (1.0 / k + mx * mx / sxx)).sqrt();
        EdgeEstimate { n: self.n, count: self.count, mean_overlap: intercept, se }
    }
}

/// Least-squares line `E(O_ii | |λ|=1) ≈ slope·√N + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

pub fn edge_scaling_fit(points: &[(usize, f64)]) -> Result<EdgeFit, StatsError> {
    let mut distinct: Vec<usize> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(StatsError::UnderDetermined(distinct.len()));
    }
    let m = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).sqrt()).collect();
    let mx = xs.iter().sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(points).map(|(x, p)| (x - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(points).map(|(x, p)| (p.1 - intercept - slope * x).powi(2)).sum();
    let s2 = rss / (m - 2.0);
    Ok(EdgeFit {
        slope,
        intercept,
        slope_se: (s2 / sxx).sqrt(),
        intercept_se: (s2 * (1.0 / m + mx * mx / sxx)).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::c64;

    fn rec(re: f64, im: f64, overlap: f64) -> OverlapRecord {
        OverlapRecord { eigenvalue: c64::new(re, im), overlap }
    }

    #[test]
    fn grid_validation_and_location() {
        assert!(RadialGrid::from_edges(vec![0.0]).is_err());
        assert!(RadialGrid::from_edges(vec![0.0, 0.5, 0.5]).is_err());
        assert!(RadialGrid::from_edges(vec![-0.1, 0.5]).is_err());
        let g = RadialGrid::uniform(0.0, 1.0, 4).unwrap();
        assert_eq!(g.locate(0.0), Location::Bin(0));
        assert_eq!(g.locate(0.25), Location::Bin(1));
        assert_eq!(g.locate(0.99), Location::Bin(3));
        assert_eq!(g.locate(1.0), Location::Above);
        let g2 = RadialGrid::uniform(0.5, 1.0, 2).unwrap();
        assert_eq!(g2.locate(0.1), Location::Below);
        let total: f64 = (0..4).map(|b| g.area(b)).sum();
        assert!((total - PI).abs() < 1e-14);
    }

    #[test]
    fn scalar_samples_have_unit_conditioning() {
        // N = 1: every matrix is normal, O_11 = 1
        let grid = RadialGrid::uniform(0.0, 3.0, 12).unwrap();
        let mut p = RadialProfile::new(grid, 1);
        for k in 0..50 {
            let r = 0.05 + 0.057 * k as f64;
            p.accumulate(&[rec(r * 0.6, r * 0.8, 1.0)]).unwrap();
        }
        for b in p.estimates().bins {
            if b.count > 0 {
                assert_eq!(b.c, 1.0);
            }
        }
    }

    #[test]
    fn identity_ensemble_puts_all_mass_on_the_unit_circle() {
        let n = 8;
        let grid = RadialGrid::uniform(0.0, 1.1, 40).unwrap();
        let mut p = RadialProfile::new(grid.clone(), n);
        let sample: Vec<_> = (0..n).map(|_| rec(1.0, 0.0, 1.0)).collect();
        for _ in 0..3 {
            p.accumulate(&sample).unwrap();
        }
        let est = p.estimates();
        let Location::Bin(b) = grid.locate(1.0) else { panic!() };
        assert!((est.bins[b].rho * grid.area(b) - 1.0).abs() < 1e-14);
        assert_eq!(est.bins[b].rho_se, 0.0);
    }

    #[test]
    fn bookkeeping_identities() {
        let n = 4;
        let grid = RadialGrid::uniform(0.2, 1.0, 8).unwrap();
        let mut p = RadialProfile::new(grid.clone(), n);
        let samples = [
            vec![rec(0.1, 0.0, 1.5), rec(0.3, 0.1, 2.0), rec(0.0, 0.7, 3.0), rec(1.2, 0.0, 1.0)],
            vec![rec(0.5, 0.5, 1.1), rec(-0.3, 0.2, 7.0), rec(0.0, -0.95, 2.5), rec(0.25, 0.0, 4.0)],
        ];
        for s in &samples {
            p.accumulate(s).unwrap();
        }
        let est = p.estimates();
        let in_grid: u64 = est.bins.iter().map(|b| b.count).sum();
        assert_eq!(in_grid + est.below + est.above, (n * samples.len()) as u64);
        let mass: f64 = est.bins.iter().enumerate().map(|(b, e)| e.rho * grid.area(b)).sum();
        assert!((mass - in_grid as f64 / 8.0).abs() < 1e-14);
        let weighted: f64 = est.bins.iter().enumerate().map(|(b, e)| e.overlap * grid.area(b)).sum();
        let direct = p.in_grid_overlap_sum() / (16.0 * 2.0);
        assert!((weighted - direct).abs() < 1e-14);
        for b in est.bins.iter().filter(|b| b.count > 0) {
            assert!(b.c >= 1.0 / n as f64 - 1e-12);
        }
    }

    #[test]
    fn wrong_sample_size_is_rejected() {
        let mut p = RadialProfile::new(RadialGrid::uniform(0.0, 1.0, 2).unwrap(), 3);
        assert!(p.accumulate(&[rec(0.1, 0.0, 1.0)]).is_err());
    }

    #[test]
    fn repeated_sample_has_zero_variance() {
        let mut p = RadialProfile::new(RadialGrid::uniform(0.0, 1.0, 4).unwrap(), 2);
        let s = [rec(0.3, 0.0, 2.0), rec(0.0, 0.8, 5.0)];
        for _ in 0..10 {
            p.accumulate(&s).unwrap();
        }
        for (rho_se, o_se) in p.standard_errors().unwrap() {
            assert!(rho_se.abs() < 1e-12 && o_se.abs() < 1e-12);
        }
    }

    #[test]
    fn standard_errors_need_two_samples() {
        let mut p = RadialProfile::new(RadialGrid::uniform(0.0, 1.0, 2).unwrap(), 1);
        assert_eq!(p.standard_errors(), Err(StatsError::InsufficientSamples(0)));
        p.accumulate(&[rec(0.1, 0.0, 1.0)]).unwrap();
        assert_eq!(p.standard_errors(), Err(StatsError::InsufficientSamples(1)));
    }

    #[test]
    fn analytic_profile_compares_to_zero_error() {
        let model = AnalyticModel::GinibreProduct { n: 1 };
        let grid = RadialGrid::uniform(0.0, 1.1, 40).unwrap();
        let prof = ProfileEstimates::analytic(&model, grid, 512);
        let rep = compare(&prof, &model, &CompareOptions::default()).unwrap();
        assert!(rep.bulk_bins > 0);
        assert_eq!(rep.bulk_sup_err_o, 0.0);
        assert_eq!(rep.bulk_sup_err_rho, 0.0);
        assert_eq!(rep.bulk_sup_rel_err_c, 0.0);
    }

    #[test]
    fn empty_bulk_is_an_error() {
        let model = AnalyticModel::GinibreProduct { n: 1 };
        let grid = RadialGrid::uniform(0.0, 1.1, 40).unwrap();
        // N = 4: edge exclusion 1.5 swallows the whole unit disc
        let prof = ProfileEstimates::analytic(&model, grid, 4);
        assert!(matches!(compare(&prof, &model, &CompareOptions::default()), Err(StatsError::EmptyBulk { .. })));
    }

    #[test]
    fn edge_fit_recovers_its_generator() {
        let a = (2.0 / PI).sqrt();
        let b = 2.0 / (3.0 * PI);
        let pts: Vec<_> = [64usize, 128, 256, 512].iter().map(|&n| (n, a * (n as f64).sqrt() + b)).collect();
        let fit = edge_scaling_fit(&pts).unwrap();
        assert!((fit.slope - a).abs() < 1e-6);
        assert!((fit.intercept - b).abs() < 1e-6);
        assert!(edge_scaling_fit(&pts[..1]).is_err());
        assert!(edge_scaling_fit(&[(64, 1.0), (64, 1.1), (128, 2.0)]).is_err());
    }

    #[test]
    fn edge_window_intercept_of_exact_line() {
        let mut w = EdgeWindow::with_half_width(100, 0.1 + 1e-9);
        let recs: Vec<_> = (0..21)
            .map(|i| {
                let x = -0.1 + 0.01 * i as f64;
                rec(1.0 + x, 0.0, 8.0 - 20.0 * x)
            })
            .collect();
        w.accumulate(&recs);
        w.accumulate(&[rec(0.5, 0.0, 1e6)]);
        let e = w.estimate();
        assert_eq!(e.count, 21);
        assert!((e.mean_overlap - 8.0).abs() < 1e-9);
    }
}
