//! The finite-dimensional reduced map `G(xi) = int K o phi_{P,t} x dv_g` on
//! the unit ball and its Brouwer degree.

use serde::{Deserialize, Serialize};

use crate::chart::{mat_t_vec, norm3, rotation_between, stereo_to_sphere, ChartGrid, ChartId};
use crate::error::{Error, Result};
use crate::families::{mobius_conformal_factor, SphereMobius};
use crate::field::SphereField;
use crate::kfield::SphereFunction;

/// Largest admissible `|xi|`.
pub const XI_MAX: f64 = 1.0 - 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedMapSample {
    pub xi: [f64; 3],
    pub g: [f64; 3],
    /// `d G_i / d xi_j` by centered differences.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jacobian: Option<[[f64; 3]; 3]>,
}

/// Trapezoid rule in `(ln rho, angle)` on the chart centered at `-P`, where
/// `phi_{P,t}` is the dilation `y -> t y`. Spectrally accurate for smooth
/// `K`, uniformly in `t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedQuadrature {
    /// Half-width of the `ln rho` window.
    pub log_extent: f64,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
}

impl Default for ReducedQuadrature {
    fn default() -> Self {
        ReducedQuadrature {
            log_extent: 20.0,
            radial_nodes: 400,
            angular_nodes: 64,
        }
    }
}

/// Pole and dilation of `xi`.
pub fn pole_and_dilation(xi: &[f64; 3]) -> Result<([f64; 3], f64)> {
    let r = norm3(xi);
    if !(r < XI_MAX) {
        return Err(Error::DegenerateReduction(r));
    }
    if r == 0.0 {
        return Ok(([0.0, 0.0, 1.0], 1.0));
    }
    Ok(([xi[0] / r, xi[1] / r, xi[2] / r], 1.0 / (1.0 - r)))
}

/// `G(xi)`.
pub fn reduced_map_g(
    k: &dyn SphereFunction,
    xi: &[f64; 3],
    q: &ReducedQuadrature,
) -> Result<[f64; 3]> {
    Ok(moments(k, xi, q)?.0)
}

/// Mean of `K` in the pulled-back metric `phi_{P,t}^* g`, i.e. the mean of
/// `K o phi_{P,t}` over the round sphere.
pub fn reduced_mean(k: &dyn SphereFunction, xi: &[f64; 3], q: &ReducedQuadrature) -> Result<f64> {
    Ok(moments(k, xi, q)?.1 / (4.0 * std::f64::consts::PI))
}

fn moments(
    k: &dyn SphereFunction,
    xi: &[f64; 3],
    q: &ReducedQuadrature,
) -> Result<([f64; 3], f64)> {
    let (pole, t) = pole_and_dilation(xi)?;
    let rot = rotation_between(&pole, &[0.0, 0.0, 1.0]);
    let ds = 2.0 * q.log_extent / q.radial_nodes as f64;
    let da = 2.0 * std::f64::consts::PI / q.angular_nodes as f64;
    let trig: Vec<(f64, f64)> = (0..q.angular_nodes)
        .map(|m| (m as f64 * da).sin_cos())
        .collect();
    let mut acc = [0.0f64; 3];
    let mut mass = 0.0;
    for i in 0..=q.radial_nodes {
        let s = -q.log_extent + i as f64 * ds;
        let rho = s.exp();
        let w_end = if i == 0 || i == q.radial_nodes {
            0.5
        } else {
            1.0
        };
        let w = w_end * 4.0 * rho * rho / (1.0 + rho * rho).powi(2) * ds * da;
        for &(sa, ca) in &trig {
            let y = [rho * ca, rho * sa];
            let x = stereo_to_sphere(ChartId::NorthProjected, y).0;
            let img = stereo_to_sphere(ChartId::NorthProjected, [t * y[0], t * y[1]]).0;
            let kv = k.value(&mat_t_vec(&rot, &img)) * w;
            mass += kv;
            for c in 0..3 {
                acc[c] += kv * x[c];
            }
        }
    }
    Ok((mat_t_vec(&rot, &acc), mass))
}

/// `G(xi)` together with its centered-difference Jacobian.
pub fn reduced_map_sample(
    k: &dyn SphereFunction,
    xi: &[f64; 3],
    q: &ReducedQuadrature,
) -> Result<ReducedMapSample> {
    let g = reduced_map_g(k, xi, q)?;
    let step = 1e-5;
    let mut jac = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut p = *xi;
        let mut m = *xi;
        p[j] += step;
        m[j] -= step;
        let gp = reduced_map_g(k, &p, q)?;
        let gm = reduced_map_g(k, &m, q)?;
        for i in 0..3 {
            jac[i][j] = (gp[i] - gm[i]) / (2.0 * step);
        }
    }
    Ok(ReducedMapSample {
        xi: *xi,
        g,
        jacobian: Some(jac),
    })
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let d = det3(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut mc = *m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        out[c] = det3(&mc) / d;
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedZero {
    pub xi: [f64; 3],
    pub residual: f64,
    pub jacobian_det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedDegree {
    pub radius: f64,
    pub zeros: Vec<ReducedZero>,
    /// `sum sign det DG` over the zeros in the ball.
    pub degree_from_zeros: i64,
    /// Winding number of `G / |G|` on the sphere of the given radius.
    pub degree_from_boundary: i64,
    /// Smallest `|G|` at the boundary vertices, relative to `max |G|`.
    pub boundary_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegreeOptions {
    pub radius: f64,
    /// Spacing of the seed lattice in the ball.
    pub seed_spacing: f64,
    /// Subdivision level of the icosahedral boundary mesh.
    pub boundary_level: usize,
    pub quadrature: ReducedQuadrature,
}

impl Default for DegreeOptions {
    fn default() -> Self {
        DegreeOptions {
            radius: 0.9,
            seed_spacing: 0.15,
            boundary_level: 3,
            quadrature: ReducedQuadrature {
                log_extent: 20.0,
                radial_nodes: 200,
                angular_nodes: 48,
            },
        }
    }
}

fn newton_zero(
    k: &dyn SphereFunction,
    xi0: [f64; 3],
    radius: f64,
    q: &ReducedQuadrature,
) -> Option<ReducedZero> {
    let mut xi = xi0;
    let scale = reduced_map_g(k, &[0.0; 3], q)
        .ok()
        .map(|g| norm3(&g))
        .unwrap_or(0.0)
        .max(1e-300);
    for _ in 0..40 {
        let s = reduced_map_sample(k, &xi, q).ok()?;
        let jac = s.jacobian?;
        let r = norm3(&s.g);
        if r < 1e-11 * (1.0 + scale) {
            return Some(ReducedZero {
                xi,
                residual: r,
                jacobian_det: det3(&jac),
            });
        }
        let dx = solve3(&jac, &s.g.map(|v| -v))?;
        // keep the step inside the ball
        let mut a = 1.0;
        let next = loop {
            let c = [xi[0] + a * dx[0], xi[1] + a * dx[1], xi[2] + a * dx[2]];
            if norm3(&c) < radius + 0.05 || a < 1e-4 {
                break c;
            }
            a *= 0.5;
        };
        if norm3(&next) >= radius + 0.05 {
            return None;
        }
        xi = next;
    }
    None
}

/// Icosahedral mesh of the unit sphere refined `level` times.
fn icosphere(level: usize) -> (Vec<[f64; 3]>, Vec<[usize; 3]>) {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<[f64; 3]> = vec![
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ];
    for p in v.iter_mut() {
        let n = norm3(p);
        *p = p.map(|c| c / n);
    }
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid = std::collections::HashMap::new();
        let mut nf = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: usize, b: usize, v: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                let m = [
                    0.5 * (v[a][0] + v[b][0]),
                    0.5 * (v[a][1] + v[b][1]),
                    0.5 * (v[a][2] + v[b][2]),
                ];
                let n = norm3(&m);
                v.push(m.map(|c| c / n));
                v.len() - 1
            })
        };
        for tri in &f {
            let a = midpoint(tri[0], tri[1], &mut v);
            let b = midpoint(tri[1], tri[2], &mut v);
            let c = midpoint(tri[2], tri[0], &mut v);
            nf.push([tri[0], a, c]);
            nf.push([tri[1], b, a]);
            nf.push([tri[2], c, b]);
            nf.push([a, b, c]);
        }
        f = nf;
    }
    (v, f)
}

/// Signed solid angle of the spherical triangle spanned by unit vectors.
fn solid_angle(a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> f64 {
    let cr = crate::chart::cross3(b, c);
    let num = crate::chart::dot3(a, &cr);
    let den = 1.0 + crate::chart::dot3(a, b) + crate::chart::dot3(b, c) + crate::chart::dot3(c, a);
    2.0 * num.atan2(den)
}

/// Brouwer degree of `G` on the ball of radius `opts.radius`, computed both
/// by summing Jacobian signs over located zeros and by the winding number of
/// `G / |G|` on the boundary sphere.
pub fn reduced_degree(k: &dyn SphereFunction, opts: &DegreeOptions) -> Result<ReducedDegree> {
    let s = opts.radius;
    if !(s > 0.0 && s < XI_MAX) {
        return Err(Error::DegenerateReduction(s));
    }
    let q = &opts.quadrature;
    // seed lattice
    let m = (s / opts.seed_spacing).ceil() as i64;
    let mut lattice = std::collections::HashMap::new();
    for i in -m..=m {
        for j in -m..=m {
            for l in -m..=m {
                let xi = [i as f64, j as f64, l as f64].map(|c| c * opts.seed_spacing);
                if norm3(&xi) < s {
                    lattice.insert((i, j, l), norm3(&reduced_map_g(k, &xi, q)?));
                }
            }
        }
    }
    let mut zeros: Vec<ReducedZero> = Vec::new();
    let mut keys: Vec<_> = lattice.keys().cloned().collect();
    keys.sort();
    for key in keys {
        let v = lattice[&key];
        let mut local_min = true;
        for di in -1..=1 {
            for dj in -1..=1 {
                for dl in -1..=1 {
                    if let Some(w) = lattice.get(&(key.0 + di, key.1 + dj, key.2 + dl)) {
                        if *w < v {
                            local_min = false;
                        }
                    }
                }
            }
        }
        if !local_min {
            continue;
        }
        let xi0 = [key.0 as f64, key.1 as f64, key.2 as f64].map(|c| c * opts.seed_spacing);
        if let Some(z) = newton_zero(k, xi0, s, q) {
            if norm3(&z.xi) < s
                && !zeros.iter().any(|o| {
                    norm3(&[o.xi[0] - z.xi[0], o.xi[1] - z.xi[1], o.xi[2] - z.xi[2]]) < 1e-4
                })
            {
                zeros.push(z);
            }
        }
    }
    zeros.sort_by(|a, b| norm3(&a.xi).partial_cmp(&norm3(&b.xi)).unwrap());
    let degree_from_zeros = zeros
        .iter()
        .map(|z| {
            if z.jacobian_det > 0.0 {
                1
            } else if z.jacobian_det < 0.0 {
                -1
            } else {
                0
            }
        })
        .sum();
    // boundary winding number
    let (verts, faces) = icosphere(opts.boundary_level);
    let mut images = Vec::with_capacity(verts.len());
    let mut gmin = f64::INFINITY;
    let mut gmax = 0.0f64;
    for v in &verts {
        let g = reduced_map_g(k, &v.map(|c| c * s), q)?;
        let n = norm3(&g);
        gmin = gmin.min(n);
        gmax = gmax.max(n);
        images.push(if n > 0.0 { g.map(|c| c / n) } else { [0.0; 3] });
    }
    let total: f64 = faces
        .iter()
        .map(|f| solid_angle(&images[f[0]], &images[f[1]], &images[f[2]]))
        .sum();
    Ok(ReducedDegree {
        radius: s,
        zeros,
        degree_from_zeros,
        degree_from_boundary: (total / (4.0 * std::f64::consts::PI)).round() as i64,
        boundary_margin: if gmax > 0.0 { gmin / gmax } else { 0.0 },
    })
}

/// `pi(0, xi) = T_{phi_{P,t}^-1}(0)`, the round metric pulled back by the
/// inverse Möbius map; it concentrates at `P` as `|xi| -> 1`.
pub fn bubble_initial_guess(grid: ChartGrid, xi: &[f64; 3]) -> Result<SphereField> {
    let (pole, t) = pole_and_dilation(xi)?;
    if t == 1.0 {
        return Ok(SphereField::constant(grid, 0.0));
    }
    Ok(mobius_conformal_factor(
        grid,
        SphereMobius::new(pole, t)?.inverse(),
    ))
}
