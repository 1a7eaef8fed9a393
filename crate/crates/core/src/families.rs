//! Closed-form solutions and conformal transforms: planar bubbles, the
//! radial families on the cone boundary, planar inversions and sphere Möbius
//! maps, and the annulus boundary-value constants.

use serde::{Deserialize, Serialize};

use crate::chart::{
    dot3, mat_t_vec, mat_vec, norm3, rotation_between, sphere_to_stereo, stereo_to_sphere,
    ChartGrid, ChartId,
};
use crate::error::{Error, Result};
use crate::field::{ScalarField, SphereField};
use crate::quadrature::ConvergenceStudy;
use crate::tensor::{sigma2_sphere, EigenPair};

/// `U_{a,q}(x) = 2 ln(a / (a^2 + |x - q|^2)) + ln 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bubble {
    pub a: f64,
    pub q: [f64; 2],
}

impl Bubble {
    pub fn new(a: f64, q: [f64; 2]) -> Result<Self> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bubble scale a = {a} must be positive"
            )));
        }
        Ok(Bubble { a, q })
    }

    pub fn standard() -> Self {
        Bubble {
            a: 1.0,
            q: [0.0, 0.0],
        }
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        bubble_eval(self, x)
    }
}

pub fn bubble_eval(b: &Bubble, x: [f64; 2]) -> f64 {
    let d0 = x[0] - b.q[0];
    let d1 = x[1] - b.q[1];
    2.0 * (b.a / (b.a * b.a + d0 * d0 + d1 * d1)).ln() + 4f64.ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RadialFamily {
    /// `C1 ln r + C2`, only for `p = 1`.
    #[serde(rename = "a")]
    A,
    /// `-4 ln r + C1`.
    #[serde(rename = "b-log")]
    BLog,
    /// `C1`.
    #[serde(rename = "b-const")]
    BConst,
    /// `-4/(p-1) ln(r^(p-1) + C1) + C2`.
    #[serde(rename = "c")]
    C,
    /// `k ln(r^-s - C1) + C2` with `s = (p-1)/(2-p)`, `k = 4/s`.
    #[serde(rename = "d")]
    D,
    /// `k ln(C1 - r^-s) + C2`.
    #[serde(rename = "e")]
    E,
}

impl RadialFamily {
    pub const ALL: [RadialFamily; 6] = [
        RadialFamily::A,
        RadialFamily::BLog,
        RadialFamily::BConst,
        RadialFamily::C,
        RadialFamily::D,
        RadialFamily::E,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            RadialFamily::A => "a",
            RadialFamily::BLog => "b-log",
            RadialFamily::BConst => "b-const",
            RadialFamily::C => "c",
            RadialFamily::D => "d",
            RadialFamily::E => "e",
        }
    }

    pub fn from_tag(s: &str) -> Option<Self> {
        RadialFamily::ALL.into_iter().find(|f| f.tag() == s)
    }
}

/// A member of one of the radial families together with its validity
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialSolution {
    pub family: RadialFamily,
    pub p: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub rmin: f64,
    pub rmax: f64,
}

/// `s = (p-1)/(2-p)`.
fn exponent_s(p: f64) -> f64 {
    (p - 1.0) / (2.0 - p)
}

impl RadialSolution {
    /// Validates the family constraints and clips the interval to the
    /// natural domain of families (d) and (e).
    pub fn new(
        family: RadialFamily,
        p: f64,
        c1: f64,
        c2: f64,
        rmin: f64,
        rmax: f64,
    ) -> Result<Self> {
        if !(rmin >= 0.0 && rmax > rmin) {
            return Err(Error::InvalidParameter(format!(
                "bad interval [{rmin}, {rmax}]"
            )));
        }
        let bad = |msg: &str| {
            Err(Error::InvalidParameter(format!(
                "family {}: {msg}",
                family.tag()
            )))
        };
        match family {
            RadialFamily::A => {
                if p != 1.0 {
                    return bad("requires p = 1");
                }
            }
            RadialFamily::BLog | RadialFamily::BConst => {
                if !(p > 1.0 && p <= 2.0) {
                    return bad("requires 1 < p <= 2");
                }
            }
            RadialFamily::C => {
                if !(p > 1.0 && p <= 2.0) {
                    return bad("requires 1 < p <= 2");
                }
                if !(c1 > 0.0) {
                    return bad("requires C1 > 0");
                }
            }
            RadialFamily::D | RadialFamily::E => {
                if !(p > 1.0 && p < 2.0) {
                    return bad("requires 1 < p < 2");
                }
                if !(c1 > 0.0) {
                    return bad("requires C1 > 0");
                }
                let rstar = c1.powf(-1.0 / exponent_s(p));
                if family == RadialFamily::D && rmax > rstar * (1.0 + 1e-12) {
                    return bad(&format!("r_max = {rmax} exceeds C1^(-1/s) = {rstar}"));
                }
                if family == RadialFamily::E && rmin < rstar * (1.0 - 1e-12) {
                    return bad(&format!("r_min = {rmin} below C1^(-1/s) = {rstar}"));
                }
            }
        }
        Ok(RadialSolution {
            family,
            p,
            c1,
            c2,
            rmin,
            rmax,
        })
    }

    /// Largest interval on which the family formula is defined.
    pub fn natural_interval(family: RadialFamily, p: f64, c1: f64) -> (f64, f64) {
        match family {
            RadialFamily::D => (0.0, c1.powf(-1.0 / exponent_s(p))),
            RadialFamily::E => (c1.powf(-1.0 / exponent_s(p)), f64::INFINITY),
            _ => (0.0, f64::INFINITY),
        }
    }

    pub fn eval(&self, r: f64) -> Result<(f64, f64, f64)> {
        radial_eval(self, r)
    }

    /// Values `(u, u', u'')` without the validity-interval check.
    pub fn eval_unchecked(&self, r: f64) -> (f64, f64, f64) {
        let p = self.p;
        let (c1, c2) = (self.c1, self.c2);
        match self.family {
            RadialFamily::A => (c1 * r.ln() + c2, c1 / r, -c1 / (r * r)),
            RadialFamily::BLog => (-4.0 * r.ln() + c1, -4.0 / r, 4.0 / (r * r)),
            RadialFamily::BConst => (c1, 0.0, 0.0),
            RadialFamily::C => {
                let q = p - 1.0;
                let rq = r.powf(q);
                let f = rq + c1;
                let u = -4.0 / q * f.ln() + c2;
                let up = -4.0 * rq / (r * f);
                let upp = -4.0 * ((q - 1.0) * rq / (r * r) * f - q * rq * rq / (r * r)) / (f * f);
                (u, up, upp)
            }
            RadialFamily::D | RadialFamily::E => {
                let s = exponent_s(p);
                let k = 4.0 / s;
                let rs = r.powf(-s);
                let sign = if self.family == RadialFamily::D {
                    1.0
                } else {
                    -1.0
                };
                let f = sign * (rs - c1);
                let fp = -sign * s * rs / r;
                let fpp = sign * s * (s + 1.0) * rs / (r * r);
                (
                    k * f.ln() + c2,
                    k * fp / f,
                    k * (fpp * f - fp * fp) / (f * f),
                )
            }
        }
    }
}

/// `(u, u', u'')` of a radial solution at `r`.
pub fn radial_eval(rs: &RadialSolution, r: f64) -> Result<(f64, f64, f64)> {
    let (lo, hi) = RadialSolution::natural_interval(rs.family, rs.p, rs.c1);
    let lo = lo.max(rs.rmin);
    let hi = hi.min(rs.rmax);
    if !(r > 0.0) || r < lo * (1.0 - 1e-12) || r > hi * (1.0 + 1e-12) {
        return Err(Error::OutsideValidity {
            r,
            rmin: lo,
            rmax: hi,
        });
    }
    let v = rs.eval_unchecked(r);
    if !(v.0.is_finite() && v.1.is_finite() && v.2.is_finite()) {
        return Err(Error::OutsideValidity {
            r,
            rmin: lo,
            rmax: hi,
        });
    }
    Ok(v)
}

/// Eigenvalues of `A^u` for a radial `u`, in the order (radial, tangential).
pub fn radial_eigenvalues(u: f64, up: f64, upp: f64, r: f64) -> Result<EigenPair> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius r = {r} must be positive"
        )));
    }
    let e = 4.0 * u.exp();
    Ok(EigenPair {
        l1: (up * up - 4.0 * upp) / e,
        l2: -up * (4.0 + r * up) / (r * e),
    })
}

/// Inversion `y -> x + lambda^2 (y - x) / |y - x|^2` acting on conformal
/// factors by `u_{x,lambda}(y) = u(image) - 4 ln(|y - x| / lambda)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanarInversion {
    pub center: [f64; 2],
    pub lambda: f64,
}

impl PlanarInversion {
    pub fn new(center: [f64; 2], lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "inversion radius {lambda} must be positive"
            )));
        }
        Ok(PlanarInversion { center, lambda })
    }

    pub fn image(&self, y: [f64; 2]) -> Result<[f64; 2]> {
        let d = [y[0] - self.center[0], y[1] - self.center[1]];
        let r2 = d[0] * d[0] + d[1] * d[1];
        if r2 == 0.0 {
            return Err(Error::InversionCenter);
        }
        let s = self.lambda * self.lambda / r2;
        Ok([self.center[0] + s * d[0], self.center[1] + s * d[1]])
    }

    /// `-4 ln(|y - x| / lambda)`.
    pub fn log_term(&self, y: [f64; 2]) -> Result<f64> {
        let d = (y[0] - self.center[0]).hypot(y[1] - self.center[1]);
        if d == 0.0 {
            return Err(Error::InversionCenter);
        }
        Ok(-4.0 * (d / self.lambda).ln())
    }

    pub fn apply<F: Fn([f64; 2]) -> f64>(&self, u: F, y: [f64; 2]) -> Result<f64> {
        Ok(u(self.image(y)?) + self.log_term(y)?)
    }
}

/// `u_{x,lambda}` as a callable built from a callable `u`.
pub fn mobius_invert<F>(u: F, m: PlanarInversion) -> impl Fn([f64; 2]) -> Result<f64>
where
    F: Fn([f64; 2]) -> f64,
{
    move |y| m.apply(&u, y)
}

/// `u_{x,lambda}` sampled on `target`, interpolating the grid field `u` at
/// the pre-images.
pub fn mobius_invert_field(
    u: &ScalarField,
    m: PlanarInversion,
    target: &ChartGrid,
) -> Result<ScalarField> {
    let mut values = Vec::with_capacity(target.node_count());
    for k in 0..target.node_count() {
        let y = target.node(k);
        values.push(u.interpolate(m.image(y)?)? + m.log_term(y)?);
    }
    ScalarField::new(*target, values)
}

/// The sphere map `phi_{P,t}`: rotate `P` to the north pole, write the point
/// in the chart projected from the north pole, dilate by `t`, map back.
/// For `t > 1` points move toward `P`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereMobius {
    pub pole: [f64; 3],
    pub t: f64,
}

impl SphereMobius {
    pub fn new(pole: [f64; 3], t: f64) -> Result<Self> {
        let n = norm3(&pole);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "pole must be a unit vector (|P| = {n})"
            )));
        }
        if !(t >= 1.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "dilation t = {t} must be >= 1"
            )));
        }
        Ok(SphereMobius { pole, t })
    }

    pub fn identity() -> Self {
        SphereMobius {
            pole: [0.0, 0.0, 1.0],
            t: 1.0,
        }
    }

    /// The inverse map `phi_{-P,t}`.
    pub fn inverse(&self) -> Self {
        SphereMobius {
            pole: [-self.pole[0], -self.pole[1], -self.pole[2]],
            t: self.t,
        }
    }

    /// Image of a sphere point.
    pub fn apply(&self, z: &[f64; 3]) -> [f64; 3] {
        if self.t == 1.0 {
            return *z;
        }
        let rot = rotation_between(&self.pole, &[0.0, 0.0, 1.0]);
        let w = mat_vec(&rot, z);
        if w[2] >= 1.0 {
            return *z;
        }
        let y = sphere_to_stereo(ChartId::NorthProjected, &w);
        let img = stereo_to_sphere(ChartId::NorthProjected, [self.t * y[0], self.t * y[1]]).0;
        mat_t_vec(&rot, &img)
    }

    /// `ln` of the squared conformal stretch, so that
    /// `phi^* g = e^{log_stretch2} g`.
    pub fn log_stretch2(&self, z: &[f64; 3]) -> f64 {
        let c = dot3(z, &self.pole);
        let t2 = self.t * self.t;
        (4.0 * t2).ln() - 2.0 * ((1.0 - c) + t2 * (1.0 + c)).ln()
    }

    pub fn compose_same_axis(&self, other: &SphereMobius) -> Result<SphereMobius> {
        let c = dot3(&self.pole, &other.pole);
        if (c - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter("maps do not share an axis".into()));
        }
        SphereMobius::new(self.pole, self.t * other.t)
    }
}

/// `T_phi(v) = v o phi + ln(stretch^2)`, so that `e^{T_phi v} g = phi^*(e^v g)`.
pub fn sphere_mobius_pullback_fn<F>(v: F, m: SphereMobius) -> impl Fn(&[f64; 3]) -> f64
where
    F: Fn(&[f64; 3]) -> f64,
{
    move |z| {
        if m.t == 1.0 {
            v(z)
        } else {
            v(&m.apply(z)) + m.log_stretch2(z)
        }
    }
}

/// `T_phi(v)` for a sampled `v`; exact for `t = 1`.
pub fn sphere_mobius_pullback(v: &SphereField, m: SphereMobius) -> Result<SphereField> {
    if m.t == 1.0 {
        return Ok(v.clone());
    }
    let g = v.grid();
    let mut out = SphereField::constant(g, 0.0);
    for c in ChartId::BOTH {
        let grid = g.on_chart(c);
        let dst = out.chart_mut(c);
        for k in 0..grid.node_count() {
            let z = grid.sphere_point(k).0;
            dst.values[k] = v.eval(&m.apply(&z))? + m.log_stretch2(&z);
        }
    }
    Ok(out)
}

/// `T_phi(0)` sampled on both charts (closed form).
pub fn mobius_conformal_factor(grid: ChartGrid, m: SphereMobius) -> SphereField {
    SphereField::from_sphere_fn(grid, |z| m.log_stretch2(z))
}

/// Tolerance below which a constant is treated as zero by the annulus solver.
const ZERO_C1: f64 = 1e-13;

/// Sup over both charts of `|sigma_2 - 1|` for the Möbius factor of `m`,
/// at each listed resolution.
pub fn mobius_residual_study(
    m: SphereMobius,
    radius: f64,
    intervals: &[usize],
) -> Result<ConvergenceStudy> {
    let mut h = Vec::new();
    let mut err = Vec::new();
    for &n in intervals {
        let grid = ChartGrid::with_intervals(ChartId::NorthProjected, radius, n)?;
        let u = mobius_conformal_factor(grid, m);
        let mut sup = 0.0f64;
        for c in ChartId::BOTH {
            let f = u.chart(c);
            let s2 = sigma2_sphere(f)?;
            for (k, v) in s2.iter().enumerate() {
                if !f.grid.on_edge(k) {
                    sup = sup.max((v - 1.0).abs());
                }
            }
        }
        h.push(grid.h);
        err.push(sup);
    }
    Ok(ConvergenceStudy::new(h, err))
}

/// The radial solution on `a <= r <= b` with `u(a) = alpha`, `u(b) = beta`.
pub fn annulus_bvp(p: f64, a: f64, b: f64, alpha: f64, beta: f64) -> Result<RadialSolution> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "need 0 < a < b < inf (a = {a}, b = {b})"
        )));
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidCone(p));
    }
    let bp = beta - alpha;
    let log_ratio = 4.0 * (b / a).ln();
    let scale = a.max(b);

    let sol = if bp == 0.0 {
        RadialSolution::new(RadialFamily::BConst, p, alpha, 0.0, a, b)?
    } else if p == 2.0 {
        if bp > 0.0 || -bp > log_ratio * (1.0 + 1e-14) {
            return Err(Error::Unsolvable(format!(
                "alpha - beta = {} must lie in [0, 4 ln(b/a)] = [0, {log_ratio}]",
                -bp
            )));
        }
        let e = (bp / 4.0).exp();
        let c1 = (a - b * e) / (e - 1.0);
        let c2 = 4.0 * ((a - b) / (e - 1.0)).ln() + bp;
        finish_c(p, c1, c2, a, b, alpha, scale)?
    } else if bp < -log_ratio {
        let s = exponent_s(p);
        let e = (bp * s / 4.0).exp();
        let c1 = (b.powf(-s) - a.powf(-s) * e) / (1.0 - e);
        let c2 = -(4.0 / s) * (a.powf(-s) - c1).ln();
        RadialSolution::new(RadialFamily::D, p, c1, c2 + alpha, a, b)?
    } else if bp < 0.0 {
        let q = p - 1.0;
        let e = (bp * q / 4.0).exp();
        let c1 = (a.powf(q) - e * b.powf(q)) / (e - 1.0);
        let c2 = 4.0 / q * (a.powf(q) + c1).ln();
        finish_c(p, c1, c2, a, b, alpha, scale)?
    } else {
        let s = exponent_s(p);
        let e = (bp * s / 4.0).exp();
        let c1 = (a.powf(-s) * e - b.powf(-s)) / (e - 1.0);
        let c2 = -(4.0 / s) * (c1 - a.powf(-s)).ln();
        RadialSolution::new(RadialFamily::E, p, c1, c2 + alpha, a, b)?
    };

    for (r, target) in [(a, alpha), (b, beta)] {
        let u = sol.eval_unchecked(r).0;
        let tol = 1e-10 * (1.0 + target.abs());
        if !((u - target).abs() <= tol) {
            return Err(Error::Inconsistent(format!(
                "u({r}) = {u} but boundary value is {target}"
            )));
        }
    }
    Ok(sol)
}

/// Family (c), or (b-log) when the closed-form `C1` vanishes.
fn finish_c(
    p: f64,
    c1: f64,
    c2: f64,
    a: f64,
    b: f64,
    alpha: f64,
    scale: f64,
) -> Result<RadialSolution> {
    if c1.abs() <= ZERO_C1 * scale.powf(p - 1.0) {
        // -4/(p-1) ln(r^(p-1)) + C2 = -4 ln r + C2
        return RadialSolution::new(RadialFamily::BLog, p, c2 + alpha, 0.0, a, b);
    }
    RadialSolution::new(RadialFamily::C, p, c1, c2 + alpha, a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn bubble_at_origin() {
        assert_abs_diff_eq!(
            Bubble::standard().eval([0.0, 0.0]),
            4f64.ln(),
            epsilon = 1e-15
        );
        assert!(Bubble::new(0.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn radial_examples() {
        let bl =
            RadialSolution::new(RadialFamily::BLog, 2.0, 1.5, 0.0, 0.0, f64::INFINITY).unwrap();
        let (u, up, _) = radial_eval(&bl, 1.0).unwrap();
        assert_eq!((u, up), (1.5, -4.0));
        let c = RadialSolution::new(RadialFamily::C, 2.0, 1.0, 0.0, 0.0, f64::INFINITY).unwrap();
        let (u, up, _) = radial_eval(&c, 1.0).unwrap();
        assert_abs_diff_eq!(u, -4.0 * 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(up, -2.0, epsilon = 1e-15);
        let d = RadialSolution::new(RadialFamily::D, 1.5, 1.0, 0.0, 0.0, 1.0).unwrap();
        assert!(matches!(
            radial_eval(&d, 2.0),
            Err(Error::OutsideValidity { .. })
        ));
        assert!(RadialSolution::new(RadialFamily::D, 1.5, 1.0, 0.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn eigenvalue_examples() {
        let r = 0.7f64;
        let l = radial_eigenvalues(-4.0 * r.ln(), -4.0 / r, 4.0 / (r * r), r).unwrap();
        assert_abs_diff_eq!(l.l1, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.l2, 0.0, epsilon = 1e-14);
        let l = radial_eigenvalues(3.0, 0.0, 0.0, r).unwrap();
        assert_eq!((l.l1, l.l2), (0.0, 0.0));
        assert!(radial_eigenvalues(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let cases = [
            RadialSolution::new(RadialFamily::C, 1.4, 0.8, 0.3, 0.0, f64::INFINITY).unwrap(),
            RadialSolution::new(
                RadialFamily::D,
                1.6,
                0.5,
                -0.2,
                0.0,
                0.5f64.powf(-1.0 / 1.5),
            )
            .unwrap(),
            RadialSolution::new(
                RadialFamily::E,
                1.3,
                2.0,
                1.0,
                2f64.powf(-7.0 / 3.0),
                f64::INFINITY,
            )
            .unwrap(),
        ];
        for rs in cases {
            let (lo, hi) = RadialSolution::natural_interval(rs.family, rs.p, rs.c1);
            let r = if hi.is_finite() {
                0.6 * hi
            } else {
                (lo * 2.0).max(0.9)
            };
            let e = 1e-5;
            let (_, up, upp) = rs.eval_unchecked(r);
            let f = |x: f64| rs.eval_unchecked(x).0;
            assert_abs_diff_eq!(up, (f(r + e) - f(r - e)) / (2.0 * e), epsilon = 1e-7);
            assert_abs_diff_eq!(
                upp,
                (f(r + e) - 2.0 * f(r) + f(r - e)) / (e * e),
                epsilon = 1e-3
            );
        }
    }

    #[test]
    fn annulus_examples() {
        let s = annulus_bvp(2.0, 1.0, 2.0, 0.0, -4.0 * 2f64.ln()).unwrap();
        assert_eq!(s.family, RadialFamily::BLog);
        assert_abs_diff_eq!(s.c1, 0.0, epsilon = 1e-12);
        let s = annulus_bvp(2.0, 1.0, 2.0, 0.0, 0.0).unwrap();
        assert_eq!((s.family, s.c1), (RadialFamily::BConst, 0.0));
        assert!(matches!(
            annulus_bvp(2.0, 1.0, 2.0, 0.0, -8.0 * 2f64.ln()),
            Err(Error::Unsolvable(_))
        ));
    }

    #[test]
    fn mobius_identity_and_inverse() {
        let m = SphereMobius::new([0.0, 0.6, 0.8], 3.0).unwrap();
        let z = [0.48, -0.6, 0.64];
        let back = m.inverse().apply(&m.apply(&z));
        for i in 0..3 {
            assert_abs_diff_eq!(back[i], z[i], epsilon = 1e-13);
        }
        let id = SphereMobius::new([0.0, 0.6, 0.8], 1.0).unwrap();
        assert_eq!(id.apply(&z), z);
        assert_eq!(id.log_stretch2(&z), 0.0);
    }

    #[test]
    fn inversion_center_rejected() {
        let m = PlanarInversion::new([0.5, 0.0], 1.0).unwrap();
        let f = mobius_invert(|_| 0.0, m);
        assert!(matches!(f([0.5, 0.0]), Err(Error::InversionCenter)));
        assert_abs_diff_eq!(f([1.5, 0.0]).unwrap(), 0.0, epsilon = 1e-15);
    }
}
