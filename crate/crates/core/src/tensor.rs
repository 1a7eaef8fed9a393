//! Conformal Schouten-type tensors, their eigenvalues and symmetric
//! functions, Newton transforms and the `Gamma_p` cones.

use serde::{Deserialize, Serialize};

use crate::chart::{christoffel, conformal_factor_phi, phi_gradient, ChartGrid, Christoffel};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::stencil::{all_derivs, d1, Derivs};

/// Default cone tolerance.
pub const CONE_TOL: f64 = 1e-9;

/// Symmetric 2 x 2 matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Sym2 {
    pub fn new(a11: f64, a12: f64, a22: f64) -> Self {
        Sym2 { a11, a12, a22 }
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Sym2::new(a, 0.0, b)
    }

    pub fn trace(&self) -> f64 {
        self.a11 + self.a22
    }

    pub fn det(&self) -> f64 {
        self.a11 * self.a22 - self.a12 * self.a12
    }

    pub fn scale(&self, s: f64) -> Self {
        Sym2::new(s * self.a11, s * self.a12, s * self.a22)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            _ => self.a12,
        }
    }

    pub fn to_array(&self) -> [[f64; 2]; 2] {
        [[self.a11, self.a12], [self.a12, self.a22]]
    }

    /// Ascending eigenvalues.
    pub fn eigen(&self) -> EigenPair {
        let m = 0.5 * (self.a11 + self.a22);
        let d = (0.5 * (self.a11 - self.a22)).hypot(self.a12);
        EigenPair::sorted(m - d, m + d)
    }
}

/// Eigenvalue pair, ascending unless produced by a formula with a fixed
/// physical order (see the radial module).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub l1: f64,
    pub l2: f64,
}

impl EigenPair {
    pub fn sorted(a: f64, b: f64) -> Self {
        if a <= b {
            EigenPair { l1: a, l2: b }
        } else {
            EigenPair { l1: b, l2: a }
        }
    }

    pub fn sigma1(&self) -> f64 {
        self.l1 + self.l2
    }

    pub fn sigma2(&self) -> f64 {
        self.l1 * self.l2
    }
}

/// The cone `Gamma_p = { l2 > (p-2) l1, l1 > (p-2) l2 }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSpec {
    pub p: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConeStatus {
    Interior,
    Boundary,
    Exterior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeVerdict {
    pub status: ConeStatus,
    pub m1: f64,
    pub m2: f64,
}

impl ConeSpec {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidCone(p));
        }
        Ok(ConeSpec { p })
    }

    /// The first quadrant.
    pub fn gamma2() -> Self {
        ConeSpec { p: 2.0 }
    }

    pub fn margins(&self, l: &EigenPair) -> (f64, f64) {
        (l.l2 - (self.p - 2.0) * l.l1, l.l1 - (self.p - 2.0) * l.l2)
    }
}

pub fn cone_check(l: &EigenPair, cone: &ConeSpec, tol: f64) -> Result<ConeVerdict> {
    ConeSpec::new(cone.p)?;
    let (m1, m2) = cone.margins(l);
    let (lo, hi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
    let status = if lo > tol {
        ConeStatus::Interior
    } else if lo.abs() <= tol && hi >= -tol {
        ConeStatus::Boundary
    } else {
        ConeStatus::Exterior
    };
    Ok(ConeVerdict { status, m1, m2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorBackground {
    /// `A^u` of a conformal factor on the plane.
    FlatPlane,
    /// Chart matrix `A_ij` of `A_{g_u}` on the sphere.
    SphereChart,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricTensorField {
    pub grid: ChartGrid,
    pub background: TensorBackground,
    pub entries: Vec<Sym2>,
}

/// `A^u` at a point from the derivatives of `u`.
pub fn schouten_flat_point(d: &Derivs) -> Sym2 {
    let (u1, u2) = (d.d1[0], d.d1[1]);
    let g2 = 0.25 * (u1 * u1 + u2 * u2);
    let e = (-d.u).exp();
    Sym2::new(
        e * (-d.d2[0] + 0.5 * u1 * u1 - g2),
        e * (-d.d2[1] + 0.5 * u1 * u2),
        e * (-d.d2[2] + 0.5 * u2 * u2 - g2),
    )
}

/// Chart matrix `A_ij` of `A_{g_u}` at chart point `x`.
pub fn schouten_sphere_point(d: &Derivs, x: [f64; 2]) -> Sym2 {
    schouten_sphere_with(d, &christoffel(x), conformal_factor_phi(x).exp())
}

/// `A_ij` given the Christoffel symbols and `e^phi`.
#[inline]
pub fn schouten_sphere_with(d: &Derivs, gam: &Christoffel, ephi: f64) -> Sym2 {
    let (u1, u2) = (d.d1[0], d.d1[1]);
    let g2 = 0.25 * (u1 * u1 + u2 * u2);
    let gu = |i: usize, j: usize| gam.get(0, i, j) * u1 + gam.get(1, i, j) * u2;
    Sym2::new(
        -d.d2[0] + gu(0, 0) + 0.5 * u1 * u1 - g2 + ephi,
        -d.d2[1] + gu(0, 1) + 0.5 * u1 * u2,
        -d.d2[2] + gu(1, 1) + 0.5 * u2 * u2 - g2 + ephi,
    )
}

fn check_size(grid: &ChartGrid) -> Result<()> {
    if grid.n() < 4 {
        return Err(Error::GridTooSmall(format!(
            "{} nodes per side; stencils need at least 4",
            grid.n()
        )));
    }
    Ok(())
}

/// `A^u` on a planar grid.
pub fn schouten_flat(u: &ScalarField) -> Result<SymmetricTensorField> {
    check_size(&u.grid)?;
    let entries = all_derivs(&u.grid, &u.values)
        .iter()
        .map(schouten_flat_point)
        .collect();
    Ok(SymmetricTensorField {
        grid: u.grid,
        background: TensorBackground::FlatPlane,
        entries,
    })
}

/// `A_ij` on a sphere chart.
pub fn schouten_sphere(u: &ScalarField) -> Result<SymmetricTensorField> {
    check_size(&u.grid)?;
    let g = u.grid;
    let entries = all_derivs(&g, &u.values)
        .iter()
        .enumerate()
        .map(|(k, d)| schouten_sphere_point(d, g.node(k)))
        .collect();
    Ok(SymmetricTensorField {
        grid: g,
        background: TensorBackground::SphereChart,
        entries,
    })
}

impl SymmetricTensorField {
    /// Metric factor whose inverse turns the entries into the endomorphism:
    /// 1 on the plane and `e^(u + phi)` on a sphere chart.
    pub fn metric_factor(&self, u: &ScalarField) -> Vec<f64> {
        match self.background {
            TensorBackground::FlatPlane => vec![1.0; self.entries.len()],
            TensorBackground::SphereChart => (0..self.entries.len())
                .map(|k| (u.values[k] + conformal_factor_phi(self.grid.node(k))).exp())
                .collect(),
        }
    }
}

/// Eigenvalues and symmetric functions of `factor^-1 A` at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenSigma {
    pub eigen: Vec<EigenPair>,
    pub sigma1: Vec<f64>,
    pub sigma2: Vec<f64>,
}

pub fn eigen_sigma(a: &SymmetricTensorField, factor: &[f64]) -> Result<EigenSigma> {
    if factor.len() != a.entries.len() {
        return Err(Error::InvalidGrid("metric factor length mismatch".into()));
    }
    let mut eigen = Vec::with_capacity(factor.len());
    for (node, (m, &f)) in a.entries.iter().zip(factor).enumerate() {
        if !(f > 0.0) {
            return Err(Error::NonPositiveMetric { node, value: f });
        }
        eigen.push(m.scale(1.0 / f).eigen());
    }
    let sigma1 = eigen.iter().map(EigenPair::sigma1).collect();
    let sigma2 = eigen.iter().map(EigenPair::sigma2).collect();
    Ok(EigenSigma {
        eigen,
        sigma1,
        sigma2,
    })
}

/// `sigma_2(g_u^-1 A_{g_u})` at every node of one chart.
pub fn sigma2_sphere(u: &ScalarField) -> Result<Vec<f64>> {
    let a = schouten_sphere(u)?;
    let f = a.metric_factor(u);
    Ok(a.entries
        .iter()
        .zip(&f)
        .map(|(m, f)| m.det() / (f * f))
        .collect())
}

pub type Mat2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonTransform {
    pub t0: Mat2,
    pub t1: Mat2,
    /// `T_1 : Lambda = (T_1)^a_b Lambda^b_a`
    pub contraction: f64,
    pub two_sigma2: f64,
}

pub fn newton_transform(l: &Mat2) -> NewtonTransform {
    let s1 = l[0][0] + l[1][1];
    let t1 = [[s1 - l[0][0], -l[0][1]], [-l[1][0], s1 - l[1][1]]];
    let mut contraction = 0.0;
    for a in 0..2 {
        for b in 0..2 {
            contraction += t1[a][b] * l[b][a];
        }
    }
    NewtonTransform {
        t0: [[1.0, 0.0], [0.0, 1.0]],
        t1,
        contraction,
        two_sigma2: 2.0 * (l[0][0] * l[1][1] - l[0][1] * l[1][0]),
    }
}

fn check_divergence_size(grid: &ChartGrid) -> Result<()> {
    if grid.n() < 5 {
        return Err(Error::GridTooSmall("fewer than 9 interior nodes".into()));
    }
    Ok(())
}

/// Partial derivatives of a nodal field with the module stencils.
fn grad_of(grid: &ChartGrid, f: impl Fn(usize) -> f64, i: usize, j: usize) -> [f64; 2] {
    let n = grid.n();
    let mut g = [0.0; 2];
    for (o, c) in d1(i, n, grid.h).iter() {
        g[0] += c * f(grid.index((i as isize + o) as usize, j));
    }
    for (o, c) in d1(j, n, grid.h).iter() {
        g[1] += c * f(grid.index(i, (j as isize + o) as usize));
    }
    g
}

/// Covariant divergence `nabla_a T_1(g_u^-1 A_{g_u})^a_b` with respect to
/// `g_u`, for `u` on one sphere chart.
pub fn divergence_newton(u: &ScalarField) -> Result<Vec<[f64; 2]>> {
    check_divergence_size(&u.grid)?;
    let g = u.grid;
    let a = schouten_sphere(u)?;
    let w: Vec<f64> = (0..g.node_count())
        .map(|k| u.values[k] + conformal_factor_phi(g.node(k)))
        .collect();
    // mixed tensor T^a_b = sigma1 delta - Lambda, Lambda^a_b = e^-w A_ab
    let t: Vec<Mat2> = a
        .entries
        .iter()
        .zip(&w)
        .map(|(m, wk)| {
            let e = (-wk).exp();
            let l = [[e * m.a11, e * m.a12], [e * m.a12, e * m.a22]];
            newton_transform(&l).t1
        })
        .collect();
    let dw = crate::stencil::gradient(&g, &w);
    let mut out = vec![[0.0; 2]; g.node_count()];
    for k in 0..g.node_count() {
        let (i, j) = g.ij(k);
        let gam = Christoffel::conformal(dw[k]);
        let dt: [[[f64; 2]; 2]; 2] = {
            // dt[c][a][b] = d_c T^a_b
            let mut d = [[[0.0; 2]; 2]; 2];
            for a_ in 0..2 {
                for b in 0..2 {
                    let gr = grad_of(&g, |m| t[m][a_][b], i, j);
                    d[0][a_][b] = gr[0];
                    d[1][a_][b] = gr[1];
                }
            }
            d
        };
        let tk = &t[k];
        for b in 0..2 {
            let mut s = 0.0;
            for a_ in 0..2 {
                s += dt[a_][a_][b];
                for d in 0..2 {
                    s += gam.get(a_, a_, d) * tk[d][b];
                    s -= gam.get(d, a_, b) * tk[a_][d];
                }
            }
            out[k][b] = s;
        }
    }
    Ok(out)
}

/// Codazzi residuals `(nabla_1 A_12 - nabla_2 A_11, nabla_2 A_12 - nabla_1 A_22)`
/// with respect to `g_u`, for `u` on one sphere chart.
pub fn codazzi_residual(u: &ScalarField) -> Result<Vec<[f64; 2]>> {
    check_divergence_size(&u.grid)?;
    let g = u.grid;
    let a = schouten_sphere(u)?;
    let du = crate::stencil::gradient(&g, &u.values);
    let mut out = vec![[0.0; 2]; g.node_count()];
    for k in 0..g.node_count() {
        let (i, j) = g.ij(k);
        let x = g.node(k);
        let dp = phi_gradient(x);
        let gam = Christoffel::conformal([du[k][0] + dp[0], du[k][1] + dp[1]]);
        let m = &a.entries[k];
        let da = |ai: usize, bi: usize| grad_of(&g, |n| a.entries[n].get(ai, bi), i, j);
        // nabla_c A_ab = d_c A_ab - Gamma^d_ca A_db - Gamma^d_cb A_ad
        let cov = |c: usize, ai: usize, bi: usize| {
            let mut s = da(ai, bi)[c];
            for d in 0..2 {
                s -= gam.get(d, c, ai) * m.get(d, bi) + gam.get(d, c, bi) * m.get(ai, d);
            }
            s
        };
        out[k] = [cov(0, 0, 1) - cov(1, 0, 0), cov(1, 0, 1) - cov(0, 1, 1)];
    }
    Ok(out)
}

/// Sup of the Euclidean norm of a nodal vector field over `|x| <= radius`.
pub fn sup_norm_in_disk(grid: &ChartGrid, v: &[[f64; 2]], radius: f64) -> f64 {
    (0..grid.node_count())
        .filter(|&k| grid.node_radius(k) <= radius)
        .map(|k| v[k][0].hypot(v[k][1]))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartId;
    use approx::assert_abs_diff_eq;

    #[test]
    fn eigen_examples() {
        let e = Sym2::diag(1.0, 2.0).eigen();
        assert_eq!((e.l1, e.l2, e.sigma1(), e.sigma2()), (1.0, 2.0, 3.0, 2.0));
        let e = Sym2::new(3.0, -0.5, 3.0).eigen();
        assert_abs_diff_eq!(e.l1, 2.5, epsilon = 1e-15);
        assert_abs_diff_eq!(e.l2, 3.5, epsilon = 1e-15);
    }

    #[test]
    fn cone_examples() {
        let c2 = ConeSpec::gamma2();
        let v = cone_check(&EigenPair::sorted(1.0, 1.0), &c2, CONE_TOL).unwrap();
        assert_eq!((v.status, v.m1, v.m2), (ConeStatus::Interior, 1.0, 1.0));
        let v = cone_check(&EigenPair::sorted(0.0, 3.0), &c2, CONE_TOL).unwrap();
        assert_eq!(v.status, ConeStatus::Boundary);
        let v = cone_check(&EigenPair::sorted(0.0, 3.0), &ConeSpec { p: 1.5 }, CONE_TOL).unwrap();
        assert_eq!((v.status, v.m1, v.m2), (ConeStatus::Interior, 3.0, 1.5));
        let v = cone_check(&EigenPair::sorted(-1.0, 3.0), &c2, CONE_TOL).unwrap();
        assert_eq!(v.status, ConeStatus::Exterior);
        assert!(cone_check(&EigenPair::sorted(0.0, 1.0), &ConeSpec { p: 2.5 }, CONE_TOL).is_err());
        assert!(ConeSpec::new(1.0).is_err());
    }

    #[test]
    fn newton_transform_example() {
        let n = newton_transform(&[[1.0, 0.0], [0.0, 2.0]]);
        assert_eq!(n.t1, [[2.0, 0.0], [0.0, 1.0]]);
        assert_eq!(n.contraction, 4.0);
        assert_eq!(n.two_sigma2, 4.0);
        let z = newton_transform(&[[0.0; 2]; 2]);
        assert_eq!((z.contraction, z.two_sigma2), (0.0, 0.0));
    }

    #[test]
    fn round_metric_sigma2_is_one() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 16).unwrap();
        let s = sigma2_sphere(&ScalarField::constant(g, 0.0)).unwrap();
        assert!(s.iter().all(|v| (v - 1.0).abs() < 1e-14));
        let s = sigma2_sphere(&ScalarField::constant(g, 0.7)).unwrap();
        assert!(s.iter().all(|v| (v - (-1.4f64).exp()).abs() < 1e-12));
    }

    #[test]
    fn nonpositive_factor_rejected() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 8).unwrap();
        let a = schouten_flat(&ScalarField::constant(g, 0.0)).unwrap();
        let mut f = vec![1.0; g.node_count()];
        f[3] = 0.0;
        assert!(matches!(
            eigen_sigma(&a, &f),
            Err(Error::NonPositiveMetric { node: 3, .. })
        ));
    }

    #[test]
    fn divergence_vanishes_for_zero() {
        let g = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 16).unwrap();
        let d = divergence_newton(&ScalarField::constant(g, 0.0)).unwrap();
        assert!(sup_norm_in_disk(&g, &d, 10.0) < 1e-12);
        let tiny = ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 3).unwrap();
        assert!(divergence_newton(&ScalarField::constant(tiny, 0.0)).is_err());
    }
}
