//! Stereographic charts of the unit sphere and the round metric in chart
//! coordinates.
//!
//! Two antipodal charts cover the sphere. The `NorthProjected` chart projects
//! from the north pole, so its origin is the south pole:
//!
//! ```text
//! z_i = 2 x_i / (1 + |x|^2),  z_3 = (|x|^2 - 1) / (|x|^2 + 1)
//! ```
//!
//! The `SouthProjected` chart projects from the south pole and has the north
//! pole at its origin. Both are related by the inversion `x -> x / |x|^2`,
//! which fixes the equator image `|x| = 1`. The round metric reads
//! `g = e^phi |dx|^2` with the same `phi(x) = ln(4 / (1 + |x|^2)^2)` in both
//! charts, so scalar functions on the sphere transfer between charts by plain
//! composition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default chart cutoff radius.
pub const DEFAULT_RADIUS: f64 = 1.2;
/// Default number of grid intervals across `[-R, R]`.
pub const DEFAULT_INTERVALS: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartId {
    /// Projection from the north pole; origin at the south pole.
    NorthProjected,
    /// Projection from the south pole; origin at the north pole.
    SouthProjected,
}

impl ChartId {
    pub const BOTH: [ChartId; 2] = [ChartId::NorthProjected, ChartId::SouthProjected];

    pub fn other(self) -> ChartId {
        match self {
            ChartId::NorthProjected => ChartId::SouthProjected,
            ChartId::SouthProjected => ChartId::NorthProjected,
        }
    }

    pub fn index(self) -> usize {
        match self {
            ChartId::NorthProjected => 0,
            ChartId::SouthProjected => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ChartId::NorthProjected => "north",
            ChartId::SouthProjected => "south",
        }
    }

    pub fn from_label(s: &str) -> Option<ChartId> {
        match s {
            "north" | "north-projected" => Some(ChartId::NorthProjected),
            "south" | "south-projected" => Some(ChartId::SouthProjected),
            _ => None,
        }
    }
}

/// Unit vector in R^3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint(pub [f64; 3]);

impl SpherePoint {
    /// Normalizes `v`; fails for the zero vector.
    pub fn normalized(v: [f64; 3]) -> Result<Self> {
        let n = norm3(&v);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot normalize {v:?}")));
        }
        Ok(SpherePoint([v[0] / n, v[1] / n, v[2] / n]))
    }

    pub fn z(&self) -> &[f64; 3] {
        &self.0
    }

    /// Great-circle distance.
    pub fn distance(&self, other: &SpherePoint) -> f64 {
        geodesic_distance(&self.0, &other.0)
    }
}

pub(crate) fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Great-circle distance between two unit vectors (atan2 form, accurate at
/// small and antipodal separations).
pub fn geodesic_distance(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let c = cross3(a, b);
    norm3(&c).atan2(dot3(a, b))
}

/// Chart point to sphere point.
pub fn stereo_to_sphere(chart: ChartId, x: [f64; 2]) -> SpherePoint {
    let r2 = x[0] * x[0] + x[1] * x[1];
    let d = 1.0 + r2;
    let z3 = (r2 - 1.0) / (r2 + 1.0);
    let z3 = match chart {
        ChartId::NorthProjected => z3,
        ChartId::SouthProjected => -z3,
    };
    SpherePoint([2.0 * x[0] / d, 2.0 * x[1] / d, z3])
}

/// Sphere point to chart coordinates. The projection pole maps to infinity.
pub fn sphere_to_stereo(chart: ChartId, z: &[f64; 3]) -> [f64; 2] {
    let denom = match chart {
        ChartId::NorthProjected => 1.0 - z[2],
        ChartId::SouthProjected => 1.0 + z[2],
    };
    [z[0] / denom, z[1] / denom]
}

/// The chart whose coordinates of `z` satisfy `|x| <= 1`.
pub fn preferred_chart(z: &[f64; 3]) -> ChartId {
    if z[2] <= 0.0 {
        ChartId::NorthProjected
    } else {
        ChartId::SouthProjected
    }
}

/// Coordinates of the same sphere point in the other chart.
pub fn chart_inversion(x: [f64; 2]) -> [f64; 2] {
    let r2 = x[0] * x[0] + x[1] * x[1];
    [x[0] / r2, x[1] / r2]
}

/// `phi(x) = ln(4 / (1 + |x|^2)^2)`.
pub fn conformal_factor_phi(x: [f64; 2]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    4f64.ln() - 2.0 * r2.ln_1p()
}

/// `(phi_1, phi_2)`.
pub fn phi_gradient(x: [f64; 2]) -> [f64; 2] {
    let d = 1.0 + x[0] * x[0] + x[1] * x[1];
    [-4.0 * x[0] / d, -4.0 * x[1] / d]
}

/// `(phi_11, phi_12, phi_22)`.
pub fn phi_hessian(x: [f64; 2]) -> [f64; 3] {
    let d = 1.0 + x[0] * x[0] + x[1] * x[1];
    let d2 = d * d;
    [
        -4.0 / d + 8.0 * x[0] * x[0] / d2,
        8.0 * x[0] * x[1] / d2,
        -4.0 / d + 8.0 * x[1] * x[1] / d2,
    ]
}

/// Christoffel symbols of a conformally flat metric `e^psi |dx|^2` in two
/// dimensions, stored as `gamma[k][i][j] = Gamma^k_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel {
    pub gamma: [[[f64; 2]; 2]; 2],
}

impl Christoffel {
    /// Symbols of `e^psi |dx|^2` from the gradient of `psi`.
    pub fn conformal(dpsi: [f64; 2]) -> Self {
        let (a, b) = (0.5 * dpsi[0], 0.5 * dpsi[1]);
        // Gamma^1_11 = Gamma^2_12 = a, Gamma^2_11 = -b,
        // Gamma^1_12 = Gamma^2_22 = b, Gamma^1_22 = -a.
        Christoffel {
            gamma: [[[a, b], [b, -a]], [[-b, a], [a, b]]],
        }
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[k][i][j]
    }
}

/// Christoffel symbols of the round metric at a chart point, from the exact
/// gradient of `phi`.
pub fn christoffel(x: [f64; 2]) -> Christoffel {
    Christoffel::conformal(phi_gradient(x))
}

/// Uniform square grid `[-R, R]^2` on one chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartGrid {
    pub chart: ChartId,
    pub h: f64,
    pub radius: f64,
    n: usize,
}

impl ChartGrid {
    /// Grid with spacing `h`; `2R / h` must be an integer.
    pub fn new(chart: ChartId, h: f64, radius: f64) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "spacing h = {h} must be positive"
            )));
        }
        if !(radius > 1.0) || !radius.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "cutoff R = {radius} must exceed 1 so the charts overlap"
            )));
        }
        let intervals = 2.0 * radius / h;
        let rounded = intervals.round();
        if (intervals - rounded).abs() > 1e-8 * intervals.max(1.0) || rounded < 2.0 {
            return Err(Error::InvalidGrid(format!(
                "2R/h = {intervals} is not a positive integer"
            )));
        }
        Self::with_intervals(chart, radius, rounded as usize)
    }

    /// Grid with `intervals` cells across `[-R, R]`.
    pub fn with_intervals(chart: ChartId, radius: f64, intervals: usize) -> Result<Self> {
        if !(radius > 1.0) || !radius.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "cutoff R = {radius} must exceed 1 so the charts overlap"
            )));
        }
        if intervals < 2 {
            return Err(Error::InvalidGrid("need at least two intervals".into()));
        }
        Ok(ChartGrid {
            chart,
            h: 2.0 * radius / intervals as f64,
            radius,
            n: intervals + 1,
        })
    }

    /// A grid on an arbitrary square `[-R, R]^2` of the plane (no overlap
    /// requirement); used for planar fields.
    pub fn planar(radius: f64, intervals: usize) -> Result<Self> {
        if !(radius > 0.0) || intervals < 2 {
            return Err(Error::InvalidGrid(format!(
                "planar grid needs R > 0 and >= 2 intervals (R = {radius}, {intervals})"
            )));
        }
        Ok(ChartGrid {
            chart: ChartId::NorthProjected,
            h: 2.0 * radius / intervals as f64,
            radius,
            n: intervals + 1,
        })
    }

    pub fn default_for(chart: ChartId) -> Self {
        Self::with_intervals(chart, DEFAULT_RADIUS, DEFAULT_INTERVALS).expect("valid default")
    }

    /// Same spacing and cutoff on the given chart.
    pub fn on_chart(&self, chart: ChartId) -> Self {
        ChartGrid { chart, ..*self }
    }

    /// Same spacing and cutoff on the other chart.
    pub fn mirrored(&self) -> Self {
        ChartGrid {
            chart: self.chart.other(),
            ..*self
        }
    }

    /// Nodes per side.
    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.radius + i as f64 * self.h
    }

    /// Linear index of node `(i, j)`; `i` runs along `x1`.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    #[inline]
    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n, k / self.n)
    }

    #[inline]
    pub fn node(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.ij(k);
        [self.coord(i), self.coord(j)]
    }

    #[inline]
    pub fn node_radius(&self, k: usize) -> f64 {
        let x = self.node(k);
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }

    pub fn sphere_point(&self, k: usize) -> SpherePoint {
        stereo_to_sphere(self.chart, self.node(k))
    }

    /// Whether the node lies on the outer edge of the square.
    #[inline]
    pub fn on_edge(&self, k: usize) -> bool {
        let (i, j) = self.ij(k);
        i == 0 || j == 0 || i + 1 == self.n || j + 1 == self.n
    }

    /// Fractional grid position of `x` (in units of `h`), if inside.
    pub fn locate(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        let fi = (x[0] + self.radius) / self.h;
        let fj = (x[1] + self.radius) / self.h;
        let max = (self.n - 1) as f64;
        let slack = 1e-9;
        if fi < -slack || fj < -slack || fi > max + slack || fj > max + slack {
            return None;
        }
        Some([fi.clamp(0.0, max), fj.clamp(0.0, max)])
    }

    /// Checks that two grids share spacing and cutoff.
    pub fn compatible(&self, other: &ChartGrid) -> Result<()> {
        if self.n != other.n
            || (self.h - other.h).abs() > 1e-14
            || (self.radius - other.radius).abs() > 1e-14
        {
            return Err(Error::InconsistentGrids(format!(
                "h = {} vs {}, R = {} vs {}",
                self.h, other.h, self.radius, other.radius
            )));
        }
        Ok(())
    }
}

/// Quintic smoothstep, C^2 with `S(1 - t) = 1 - S(t)`.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (t * (6.0 * t - 15.0) + 10.0)
}

/// Two-chart partition of unity. The weight of a chart depends only on
/// `s = ln|x|`: it is 1 for `|x| <= 1/R`, 0 for `|x| >= R`, and blends with a
/// C^2 polynomial in between. Since the chart inversion maps `s` to `-s`, the
/// two weights of any sphere point sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOfUnity {
    pub radius: f64,
}

impl PartitionOfUnity {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius > 1.0) {
            return Err(Error::InvalidGrid(format!(
                "blend needs R > 1, got {radius}"
            )));
        }
        Ok(PartitionOfUnity { radius })
    }

    /// Weight of the chart at chart point `x`.
    pub fn weight(&self, x: [f64; 2]) -> f64 {
        let r2 = x[0] * x[0] + x[1] * x[1];
        if r2 == 0.0 {
            return 1.0;
        }
        let s = 0.5 * r2.ln();
        let l = self.radius.ln();
        1.0 - smoothstep((s + l) / (2.0 * l))
    }

    /// Weights of both charts at a sphere point, indexed by [`ChartId::index`].
    pub fn weights_at(&self, z: &[f64; 3]) -> [f64; 2] {
        let north = if z[2] >= 1.0 {
            0.0
        } else {
            self.weight(sphere_to_stereo(ChartId::NorthProjected, z))
        };
        let south = if z[2] <= -1.0 {
            0.0
        } else {
            self.weight(sphere_to_stereo(ChartId::SouthProjected, z))
        };
        [north, south]
    }
}

/// Rotation matrix (rows) taking unit vector `from` to unit vector `to`.
pub fn rotation_between(from: &[f64; 3], to: &[f64; 3]) -> [[f64; 3]; 3] {
    let c = dot3(from, to);
    let v = cross3(from, to);
    let s2 = dot3(&v, &v);
    if s2 < 1e-30 {
        if c > 0.0 {
            return [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        }
        // Half turn about an axis orthogonal to `from`.
        let trial = if from[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let a = cross3(from, &trial);
        let n = norm3(&a);
        let a = [a[0] / n, a[1] / n, a[2] / n];
        let mut r = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i][j] = 2.0 * a[i] * a[j] - if i == j { 1.0 } else { 0.0 };
            }
        }
        return r;
    }
    // Rodrigues: R = I + [v]x + [v]x^2 (1 - c) / s^2
    let k = (1.0 - c) / s2;
    let vx = [[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]];
    let mut r = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut vx2 = 0.0;
            for m in 0..3 {
                vx2 += vx[i][m] * vx[m][j];
            }
            r[i][j] = if i == j { 1.0 } else { 0.0 } + vx[i][j] + k * vx2;
        }
    }
    r
}

pub(crate) fn mat_vec(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [dot3(&r[0], v), dot3(&r[1], v), dot3(&r[2], v)]
}

pub(crate) fn mat_t_vec(r: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        r[0][0] * v[0] + r[1][0] * v[1] + r[2][0] * v[2],
        r[0][1] * v[0] + r[1][1] * v[1] + r[2][1] * v[2],
        r[0][2] * v[0] + r[1][2] * v[1] + r[2][2] * v[2],
    ]
}

/// Tangent vectors `d z / d x_j` of the chart map.
pub fn chart_tangents(chart: ChartId, x: [f64; 2]) -> [[f64; 3]; 2] {
    let (a, b) = (x[0], x[1]);
    let d = 1.0 + a * a + b * b;
    let d2 = d * d;
    let sign = match chart {
        ChartId::NorthProjected => 1.0,
        ChartId::SouthProjected => -1.0,
    };
    [
        [
            2.0 * (d - 2.0 * a * a) / d2,
            -4.0 * a * b / d2,
            sign * 4.0 * a / d2,
        ],
        [
            -4.0 * a * b / d2,
            2.0 * (d - 2.0 * b * b) / d2,
            sign * 4.0 * b / d2,
        ],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn stereo_examples() {
        let z = stereo_to_sphere(ChartId::NorthProjected, [0.0, 0.0]).0;
        assert_eq!(z, [0.0, 0.0, -1.0]);
        let z = stereo_to_sphere(ChartId::NorthProjected, [1.0, 0.0]).0;
        assert_abs_diff_eq!(z[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[2], 0.0, epsilon = 1e-15);
        let z = stereo_to_sphere(ChartId::NorthProjected, [2.0, 0.0]).0;
        assert_abs_diff_eq!(z[0], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(z[1], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(z[2], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn phi_examples() {
        assert_abs_diff_eq!(conformal_factor_phi([0.0, 0.0]), 4f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(conformal_factor_phi([0.6, 0.8]), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            conformal_factor_phi([3.0, 0.0]),
            -3.218_875_824_868_201,
            epsilon = 1e-12
        );
    }

    #[test]
    fn christoffel_examples() {
        let g = christoffel([0.0, 0.0]);
        assert!(g.gamma.iter().flatten().flatten().all(|&v| v == 0.0));
        let g = christoffel([1.0, 0.0]);
        assert_abs_diff_eq!(g.get(0, 0, 0), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.get(0, 1, 1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn christoffel_matches_metric_derivatives() {
        // Gamma^k_ij = 1/2 g^{kl}(d_i g_lj + d_j g_li - d_l g_ij) for g = e^phi delta
        let x = [0.3, -0.7];
        let e = 1e-5;
        let g = |y: [f64; 2]| conformal_factor_phi(y).exp();
        let dg = [
            (g([x[0] + e, x[1]]) - g([x[0] - e, x[1]])) / (2.0 * e),
            (g([x[0], x[1] + e]) - g([x[0], x[1] - e])) / (2.0 * e),
        ];
        let gx = g(x);
        let sym = christoffel(x);
        for k in 0..2 {
            for i in 0..2 {
                for j in 0..2 {
                    let d = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
                    let v = 0.5 / gx * (dg[i] * d(k, j) + dg[j] * d(k, i) - dg[k] * d(i, j));
                    assert_abs_diff_eq!(sym.get(k, i, j), v, epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn grid_validation() {
        assert!(ChartGrid::new(ChartId::NorthProjected, 0.0, 1.2).is_err());
        assert!(ChartGrid::new(ChartId::NorthProjected, 0.1, 0.9).is_err());
        assert!(ChartGrid::new(ChartId::NorthProjected, 0.07, 1.2).is_err());
        let g = ChartGrid::new(ChartId::NorthProjected, 2.4 / 128.0, 1.2).unwrap();
        assert_eq!(g.node_count(), 129 * 129);
    }

    #[test]
    fn tangents_match_finite_differences() {
        for chart in ChartId::BOTH {
            let x = [0.4, -0.3];
            let t = chart_tangents(chart, x);
            let e = 1e-6;
            for j in 0..2 {
                let mut xp = x;
                let mut xm = x;
                xp[j] += e;
                xm[j] -= e;
                let zp = stereo_to_sphere(chart, xp).0;
                let zm = stereo_to_sphere(chart, xm).0;
                for a in 0..3 {
                    assert_abs_diff_eq!(t[j][a], (zp[a] - zm[a]) / (2.0 * e), epsilon = 1e-8);
                }
            }
        }
    }

    #[test]
    fn rotation_maps_vectors() {
        let a = SpherePoint::normalized([1.0, 2.0, 2.0]).unwrap().0;
        for b in [[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], a, [-a[0], -a[1], -a[2]]] {
            let r = rotation_between(&a, &b);
            let v = mat_vec(&r, &a);
            for i in 0..3 {
                assert_abs_diff_eq!(v[i], b[i], epsilon = 1e-14);
            }
        }
    }
}
