use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::std_normal_cdf;

/// Discrete law of `Q`: sorted distinct atoms with their masses.
///
/// `cdf_exact` is the right-continuous step function of the atoms.
/// `cdf`, `quantile` and `interval` use the mid-distribution function
/// `G(a_k) = C(a_{k−1}) + m_k / 2`, linear between atoms. On a fine grid this
/// tracks the continuous law it discretises to second order, and it splits
/// the difference for genuinely discrete laws: the median of equal masses at
/// 0 and 1 is 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantityLaw {
    atoms: Vec<f64>,
    masses: Vec<f64>,
    cumulative: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub q: f64,
    pub density: f64,
    pub cdf: f64,
}

impl QuantityLaw {
    /// Atoms with equal values are merged; zero masses are dropped.
    pub fn from_weighted(values: &[f64], masses: &[f64]) -> Result<Self> {
        if values.len() != masses.len() {
            return Err(Error::InvalidArgument("need one mass per value".into()));
        }
        if values.iter().any(|v| !v.is_finite()) || masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidArgument("values must be finite and masses finite and nonnegative".into()));
        }
        let mut pairs: Vec<(f64, f64)> =
            values.iter().copied().zip(masses.iter().copied()).filter(|&(_, m)| m > 0.0).collect();
        if pairs.is_empty() {
            return Err(Error::DegenerateWeight);
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut atoms: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut merged: Vec<f64> = Vec::with_capacity(pairs.len());
        for (v, m) in pairs {
            match atoms.last() {
                Some(&last) if last == v => *merged.last_mut().expect("paired") += m,
                _ => {
                    atoms.push(v);
                    merged.push(m);
                }
            }
        }
        let mut acc = 0.0;
        let cumulative = merged
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect();
        Ok(Self { atoms, masses: merged, cumulative })
    }

    pub fn point_mass(value: f64) -> Result<Self> {
        Self::from_weighted(&[value], &[1.0])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.masses).map(|(a, m)| a * m).sum::<f64>() / self.total_mass()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.atoms.iter().zip(&self.masses).map(|(a, m)| m * (a - mu) * (a - mu)).sum::<f64>() / self.total_mass()
    }

    pub fn sd(&self) -> f64 {
        self.variance().sqrt()
    }

    /// Mass at or below `x`.
    pub fn cdf_exact(&self, x: f64) -> f64 {
        let k = self.atoms.partition_point(|&a| a <= x);
        if k == 0 { 0.0 } else { self.cumulative[k - 1] }
    }

    fn mid(&self, k: usize) -> f64 {
        self.cumulative[k] - 0.5 * self.masses[k]
    }

    /// Mid-distribution cdf, normalised by the total mass.
    pub fn cdf(&self, x: f64) -> f64 {
        let n = self.atoms.len();
        let total = self.total_mass();
        if x < self.atoms[0] {
            return 0.0;
        }
        if x >= self.atoms[n - 1] {
            return 1.0;
        }
        let k = self.atoms.partition_point(|&a| a <= x) - 1;
        let (a0, a1) = (self.atoms[k], self.atoms[k + 1]);
        let t = (x - a0) / (a1 - a0);
        ((1.0 - t) * self.mid(k) + t * self.mid(k + 1)) / total
    }

    /// Left limit of [`cdf`](Self::cdf) at `x`; differs only at the end atoms.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let n = self.atoms.len();
        if x <= self.atoms[0] {
            0.0
        } else if x == self.atoms[n - 1] {
            self.mid(n - 1) / self.total_mass()
        } else {
            self.cdf(x)
        }
    }

    /// Inverse of [`cdf`](Self::cdf) on the atoms' range.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::ProbabilityDomain(p));
        }
        let n = self.atoms.len();
        let target = p * self.total_mass();
        if target <= self.mid(0) {
            return Ok(self.atoms[0]);
        }
        if target >= self.mid(n - 1) {
            return Ok(self.atoms[n - 1]);
        }
        // First k with mid(k) >= target; mids are strictly increasing.
        let (mut lo, mut hi) = (0, n - 1);
        while hi - lo > 1 {
            let m = (lo + hi) / 2;
            if self.mid(m) >= target { hi = m } else { lo = m }
        }
        let (g0, g1) = (self.mid(lo), self.mid(hi));
        if g1 <= g0 {
            return Ok(self.atoms[hi]);
        }
        let t = (target - g0) / (g1 - g0);
        Ok(self.atoms[lo] + t * (self.atoms[hi] - self.atoms[lo]))
    }

    /// Equal-tailed interval with the given coverage.
    pub fn interval(&self, level: f64) -> Result<(f64, f64)> {
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidArgument(format!("level must lie in (0, 1), got {level}")));
        }
        let a = 0.5 * (1.0 - level);
        Ok((self.quantile(a)?, self.quantile(1.0 - a)?))
    }

    /// Gaussian kernel density estimate for plotting, with Silverman's
    /// bandwidth and effective sample size `1 / Σ m²`. Empty for a point mass.
    pub fn density_table(&self, rows: usize) -> Vec<DensityRow> {
        let total = self.total_mass();
        let sd = self.sd();
        if self.atoms.len() < 2 || !(sd > 0.0) || rows < 2 {
            return Vec::new();
        }
        let n_eff = 1.0 / self.masses.iter().map(|m| (m / total).powi(2)).sum::<f64>();
        let iqr = self.quantile(0.75).unwrap_or(0.0) - self.quantile(0.25).unwrap_or(0.0);
        let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
        let h = 0.9 * spread * n_eff.powf(-0.2);
        if !(h > 0.0) {
            return Vec::new();
        }

        // Linear binning onto a regular grid keeps the evaluation cost fixed.
        const BINS: usize = 2048;
        let (lo, hi) = (self.atoms[0], self.atoms[self.atoms.len() - 1]);
        let width = (hi - lo) / (BINS - 1) as f64;
        let mut binned = vec![0.0; BINS];
        for (a, m) in self.atoms.iter().zip(&self.masses) {
            let pos = ((a - lo) / width).clamp(0.0, (BINS - 1) as f64);
            let i = (pos.floor() as usize).min(BINS - 2);
            let f = pos - i as f64;
            binned[i] += m * (1.0 - f) / total;
            binned[i + 1] += m * f / total;
        }
        let centers: Vec<f64> = (0..BINS).map(|i| lo + i as f64 * width).collect();

        let (from, to) = (lo - 3.0 * h, hi + 3.0 * h);
        let norm = 1.0 / (h * (2.0 * std::f64::consts::PI).sqrt());
        (0..rows)
            .map(|r| {
                let q = from + (to - from) * r as f64 / (rows - 1) as f64;
                let mut density = 0.0;
                let mut cdf = 0.0;
                for (c, w) in centers.iter().zip(&binned) {
                    if *w == 0.0 {
                        continue;
                    }
                    let z = (q - c) / h;
                    density += w * norm * (-0.5 * z * z).exp();
                    cdf += w * std_normal_cdf(z);
                }
                DensityRow { q, density, cdf }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_mass_interval_is_degenerate() {
        let l = QuantityLaw::point_mass(5.0).unwrap();
        assert_eq!(l.interval(0.95).unwrap(), (5.0, 5.0));
        assert_eq!(l.mean(), 5.0);
        assert!(l.density_table(201).is_empty());
    }

    #[test]
    fn two_point_median_is_the_midpoint() {
        let l = QuantityLaw::from_weighted(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(l.quantile(0.5).unwrap(), 0.5);
        assert_eq!(l.interval(0.5).unwrap(), (0.0, 1.0));
        assert_eq!(l.cdf_exact(0.0), 0.5);
        assert_eq!(l.cdf_exact(-1e-300), 0.0);
        assert_eq!(l.cdf(0.5), 0.5);
    }

    #[test]
    fn ties_merge_and_zero_masses_drop() {
        let l = QuantityLaw::from_weighted(&[2.0, 1.0, 2.0, 3.0], &[0.25, 0.25, 0.5, 0.0]).unwrap();
        assert_eq!(l.atoms(), &[1.0, 2.0]);
        assert_eq!(l.masses(), &[0.25, 0.75]);
        assert!(QuantityLaw::from_weighted(&[1.0], &[0.0]).is_err());
        assert!(QuantityLaw::from_weighted(&[f64::NAN], &[1.0]).is_err());
    }

    #[test]
    fn fine_grid_quantiles_track_the_continuous_law() {
        // Trapezoid-weighted normal density on a grid of 401 points.
        let n = 401;
        let xs: Vec<f64> = (0..n).map(|i| -8.0 + 16.0 * i as f64 / (n - 1) as f64).collect();
        let ms: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| (-0.5 * x * x).exp() * if i == 0 || i == n - 1 { 0.5 } else { 1.0 })
            .collect();
        let l = QuantityLaw::from_weighted(&xs, &ms).unwrap();
        let (a, b) = l.interval(0.95).unwrap();
        assert!((a + 1.959_963_984_540_054).abs() < 1e-3 && (b - 1.959_963_984_540_054).abs() < 1e-3);
        let ks = xs.iter().map(|&x| (l.cdf(x) - std_normal_cdf(x)).abs()).fold(0.0, f64::max);
        assert!(ks < 1e-3, "{ks}");
    }

    #[test]
    fn density_table_is_a_density() {
        let xs: Vec<f64> = (0..200).map(|i| i as f64 / 10.0).collect();
        let ms = vec![1.0; 200];
        let l = QuantityLaw::from_weighted(&xs, &ms).unwrap();
        let t = l.density_table(201);
        assert_eq!(t.len(), 201);
        let dx = t[1].q - t[0].q;
        let area: f64 = t.iter().map(|r| r.density).sum::<f64>() * dx;
        assert!((area - 1.0).abs() < 1e-2);
        assert!(t.windows(2).all(|w| w[1].cdf >= w[0].cdf));
        assert!(t[0].cdf < 0.01 && t[200].cdf > 0.99);
    }
}
