//! Trapezoid quadrature on the sphere using the two charts and the blend
//! weights.

use serde::{Deserialize, Serialize};

use crate::chart::{conformal_factor_phi, ChartGrid, ChartId, PartitionOfUnity};
use crate::error::Result;
use crate::field::SphereField;

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::new();
        for v in iter {
            s.add(v);
        }
        s
    }
}

/// Per-node quadrature weights `e^phi w_c h^2` for both charts.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereQuadrature {
    pub grid: ChartGrid,
    /// Weights indexed by chart, then node.
    pub weights: [Vec<f64>; 2],
}

impl SphereQuadrature {
    pub fn new(grid: ChartGrid) -> Result<Self> {
        let pou = PartitionOfUnity::new(grid.radius)?;
        let h2 = grid.h * grid.h;
        let w: Vec<f64> = (0..grid.node_count())
            .map(|k| {
                let x = grid.node(k);
                pou.weight(x) * conformal_factor_phi(x).exp() * h2
            })
            .collect();
        // phi and the blend weight have the same formula in both charts
        Ok(SphereQuadrature {
            grid,
            weights: [w.clone(), w],
        })
    }

    pub fn chart_weights(&self, c: ChartId) -> &[f64] {
        &self.weights[c.index()]
    }

    /// `sum_c sum_k f_c(k) q_c(k)` with compensated summation.
    pub fn integrate_values(&self, north: &[f64], south: &[f64]) -> f64 {
        let mut s = CompensatedSum::new();
        for (vals, w) in [(north, &self.weights[0]), (south, &self.weights[1])] {
            for (v, q) in vals.iter().zip(w.iter()) {
                if *q != 0.0 {
                    s.add(v * q);
                }
            }
        }
        s.value()
    }

    pub fn integrate(&self, f: &SphereField) -> Result<f64> {
        f.grid().compatible(&self.grid)?;
        Ok(self.integrate_values(&f.north.values, &f.south.values))
    }
}

/// Integral of `f` over the unit sphere with respect to the round area form.
pub fn sphere_quadrature(f: &SphereField) -> Result<f64> {
    f.north.grid.compatible(&f.south.grid)?;
    SphereQuadrature::new(f.grid())?.integrate(f)
}

/// Least-squares slope of `ln e` against `ln h`.
pub fn observed_order(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len().min(e.len()) as f64;
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.abs().ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Errors on a sequence of grids with decreasing `h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub h: Vec<f64>,
    pub error: Vec<f64>,
    /// `error[i] / error[i + 1]`.
    pub ratios: Vec<f64>,
    pub order: f64,
}

impl ConvergenceStudy {
    pub fn new(h: Vec<f64>, error: Vec<f64>) -> Self {
        let ratios = error.windows(2).map(|w| w[0] / w[1]).collect();
        let order = observed_order(&h, &error);
        ConvergenceStudy {
            h,
            error,
            ratios,
            order,
        }
    }

    /// All errors at or below `floor`, i.e. exact up to roundoff.
    pub fn below(&self, floor: f64) -> bool {
        self.error.iter().all(|e| e.abs() <= floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> ChartGrid {
        ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, n).unwrap()
    }

    #[test]
    fn area_and_moments() {
        let g = grid(128);
        let one = sphere_quadrature(&SphereField::constant(g, 1.0)).unwrap();
        assert!((one - 4.0 * PI).abs() < 1e-3, "{one}");
        let z3 = sphere_quadrature(&SphereField::from_sphere_fn(g, |z| z[2])).unwrap();
        assert!(z3.abs() < 1e-12, "{z3}");
        let z33 = sphere_quadrature(&SphereField::from_sphere_fn(g, |z| z[2] * z[2])).unwrap();
        assert!((z33 - 4.0 * PI / 3.0).abs() < 1e-3, "{z33}");
    }

    #[test]
    fn mismatched_charts_rejected() {
        let a = SphereField::constant(grid(16), 1.0);
        let b = SphereField::constant(grid(32), 1.0);
        let bad = SphereField {
            north: a.north,
            south: b.south,
        };
        assert!(sphere_quadrature(&bad).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let s: CompensatedSum = [1.0, 1e-16, -1.0, 1e-16].into_iter().collect();
        assert_eq!(s.value(), 2e-16);
    }
}
