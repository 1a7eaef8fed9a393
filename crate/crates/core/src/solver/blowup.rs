//! Concentration diagnostics for nearly blown-up conformal factors.

use serde::{Deserialize, Serialize};

use crate::chart::{
    conformal_factor_phi, geodesic_distance, preferred_chart, sphere_to_stereo, ChartId,
};
use crate::error::{Error, Result};
use crate::field::SphereField;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleFit {
    pub a: f64,
    pub center: [f64; 2],
    pub residual_rms: f64,
    pub residual_max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupDiagnostics {
    pub peak_z: [f64; 3],
    pub peak_value: f64,
    /// Fitted `C` in `u <= -2 ln d_g(x, peak) + C`, from nodes outside the core.
    pub concentration_c: f64,
    /// Fraction of all nodes satisfying the inequality with the fitted `C`.
    pub concentration_fraction: f64,
    /// Geodesic core radius `e^{-u(peak)/2}` excluded from the fit.
    pub core_radius: f64,
    /// Fitted `C` in `v(y) <= C - v(0) - 4 ln|y|` for the planar factor
    /// `v = u + phi` in the chart centered nearest the peak.
    pub decay_c: f64,
    pub decay_fraction: f64,
    /// Least-squares fit of `U_{a,x}` to `v(x_p + z / lambda) - v(x_p)`,
    /// `lambda = e^{v(x_p)/2}`, over `|z| <= 10`.
    pub bubble: Option<BubbleFit>,
    pub multi_peak: bool,
    /// Other local maxima within 1 of the peak value.
    pub secondary_peaks: Vec<([f64; 3], f64)>,
}

fn planar_bubble(a: f64, c: [f64; 2], z: [f64; 2]) -> f64 {
    let d2 = (z[0] - c[0]).powi(2) + (z[1] - c[1]).powi(2);
    2.0 * (2.0 * a / (a * a + d2)).ln()
}

/// Levenberg-Marquardt on `(a, x1, x2)`.
fn fit_bubble(samples: &[([f64; 2], f64)]) -> Option<BubbleFit> {
    if samples.len() < 20 {
        return None;
    }
    let cost = |p: &[f64; 3]| -> f64 {
        samples
            .iter()
            .map(|(z, v)| (planar_bubble(p[0], [p[1], p[2]], *z) - v).powi(2))
            .sum()
    };
    let mut p = [2.0, 0.0, 0.0];
    let mut c = cost(&p);
    let mut damp = 1e-3;
    for _ in 0..200 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (z, v) in samples {
            let d2 = (z[0] - p[1]).powi(2) + (z[1] - p[2]).powi(2);
            let den = p[0] * p[0] + d2;
            let r = planar_bubble(p[0], [p[1], p[2]], *z) - v;
            let j = [
                2.0 / p[0] - 4.0 * p[0] / den,
                4.0 * (z[0] - p[1]) / den,
                4.0 * (z[1] - p[2]) / den,
            ];
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut m = jtj;
        for a in 0..3 {
            m[a][a] *= 1.0 + damp;
        }
        let step = solve3(&m, &jtr.map(|v| -v))?;
        let trial = [p[0] + step[0], p[1] + step[1], p[2] + step[2]];
        if trial[0] <= 0.0 {
            damp *= 10.0;
            continue;
        }
        let ct = cost(&trial);
        if ct < c {
            let done = (c - ct) <= 1e-15 * c.max(1e-300) || step.iter().all(|s| s.abs() < 1e-13);
            p = trial;
            c = ct;
            damp = (damp * 0.3).max(1e-12);
            if done {
                break;
            }
        } else {
            damp *= 10.0;
            if damp > 1e12 {
                break;
            }
        }
    }
    let mut worst = 0.0f64;
    for (z, v) in samples {
        worst = worst.max((planar_bubble(p[0], [p[1], p[2]], *z) - v).abs());
    }
    Some(BubbleFit {
        a: p[0],
        center: [p[1], p[2]],
        residual_rms: (c / samples.len() as f64).sqrt(),
        residual_max: worst,
        samples: samples.len(),
    })
}

fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for c in 0..3 {
        let mut mc = *m;
        for r in 0..3 {
            mc[r][c] = b[r];
        }
        out[c] = det(&mc) / d;
    }
    Some(out)
}

/// Peak, concentration and bubble-profile fits of a conformal factor.
pub fn blowup_diagnose(u: &SphereField) -> Result<BlowupDiagnostics> {
    let grid = u.grid();
    if !u
        .north
        .values
        .iter()
        .chain(&u.south.values)
        .all(|v| v.is_finite())
    {
        return Err(Error::NonFinite("conformal factor".into()));
    }
    let (peak, umax) = u.argmax();
    let pz = peak.0;
    // nodes covering the sphere once per chart disk
    let mut nodes = Vec::new();
    for c in ChartId::BOTH {
        let g = grid.on_chart(c);
        for k in 0..g.node_count() {
            if g.node_radius(k) <= 1.0 {
                nodes.push((c, k, g.sphere_point(k).0, u.chart(c).values[k]));
            }
        }
    }
    let core = (-umax / 2.0).exp().min(std::f64::consts::PI);
    let mut cfit = f64::NEG_INFINITY;
    for (_, _, z, v) in &nodes {
        let d = geodesic_distance(z, &pz);
        if d >= core {
            cfit = cfit.max(v + 2.0 * d.ln());
        }
    }
    let mut ok = 0usize;
    let mut total = 0usize;
    for (_, _, z, v) in &nodes {
        let d = geodesic_distance(z, &pz);
        if d > 0.0 {
            total += 1;
            if *v <= cfit - 2.0 * d.ln() + 1e-12 {
                ok += 1;
            }
        }
    }
    let concentration_fraction = if total > 0 {
        ok as f64 / total as f64
    } else {
        1.0
    };

    // planar picture in the chart whose origin is nearest the peak
    let pc = preferred_chart(&pz);
    let field = u.chart(pc);
    let g = field.grid;
    let xp = sphere_to_stereo(pc, &pz);
    let vp = umax + conformal_factor_phi(xp);
    let lambda = (vp / 2.0).exp();
    let rho = 2.0 / lambda;
    let mut dfit = f64::NEG_INFINITY;
    let mut planar = Vec::new();
    for k in 0..g.node_count() {
        let x = g.node(k);
        if g.node_radius(k) > 1.0 {
            continue;
        }
        let r = (x[0] - xp[0]).hypot(x[1] - xp[1]);
        let v = field.values[k] + conformal_factor_phi(x);
        if r >= rho {
            dfit = dfit.max(v + vp + 4.0 * r.ln());
        }
        if r > 0.0 {
            planar.push((r, v));
        }
    }
    let dok = planar
        .iter()
        .filter(|(r, v)| *v <= dfit - vp - 4.0 * r.ln() + 1e-12)
        .count();
    let decay_fraction = if planar.is_empty() {
        1.0
    } else {
        dok as f64 / planar.len() as f64
    };

    // rescaled profile
    let mut samples = Vec::new();
    let lim = g.radius - 2.0 * g.h;
    let m = 40;
    for i in 0..=m {
        for j in 0..=m {
            let z = [
                -10.0 + 20.0 * i as f64 / m as f64,
                -10.0 + 20.0 * j as f64 / m as f64,
            ];
            if z[0].hypot(z[1]) > 10.0 {
                continue;
            }
            let x = [xp[0] + z[0] / lambda, xp[1] + z[1] / lambda];
            if x[0].hypot(x[1]) > lim {
                continue;
            }
            if let Ok(val) = field.interpolate(x) {
                samples.push((z, val + conformal_factor_phi(x) - vp));
            }
        }
    }
    let bubble = fit_bubble(&samples);

    // secondary local maxima
    let mut secondary: Vec<([f64; 3], f64)> = Vec::new();
    let sep = 8.0 * g.h;
    for c in ChartId::BOTH {
        let gc = grid.on_chart(c);
        let vals = &u.chart(c).values;
        let n = gc.n();
        for k in 0..gc.node_count() {
            if gc.node_radius(k) > 1.0 || vals[k] < umax - 1.0 {
                continue;
            }
            let (i, j) = gc.ij(k);
            if i == 0 || j == 0 || i + 1 >= n || j + 1 >= n {
                continue;
            }
            let mut is_max = true;
            for a in -1isize..=1 {
                for b in -1isize..=1 {
                    if (a, b) != (0, 0)
                        && vals[gc.index((i as isize + a) as usize, (j as isize + b) as usize)]
                            > vals[k]
                    {
                        is_max = false;
                    }
                }
            }
            let z = gc.sphere_point(k).0;
            if is_max
                && geodesic_distance(&z, &pz) > sep
                && !secondary
                    .iter()
                    .any(|(o, _)| geodesic_distance(o, &z) < sep)
            {
                secondary.push((z, vals[k]));
            }
        }
    }
    Ok(BlowupDiagnostics {
        peak_z: pz,
        peak_value: umax,
        concentration_c: cfit,
        concentration_fraction,
        core_radius: core,
        decay_c: dfit,
        decay_fraction,
        bubble,
        multi_peak: !secondary.is_empty(),
        secondary_peaks: secondary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::ChartGrid;
    use crate::families::{mobius_conformal_factor, SphereMobius};

    fn grid() -> ChartGrid {
        ChartGrid::with_intervals(ChartId::NorthProjected, 1.2, 128).unwrap()
    }

    #[test]
    fn mobius_field_is_a_bubble() {
        let m = SphereMobius::new([0.0, 0.6, 0.8], 8.0).unwrap();
        let u = mobius_conformal_factor(grid(), m);
        let d = blowup_diagnose(&u).unwrap();
        assert!(!d.multi_peak);
        let b = d.bubble.unwrap();
        assert!(b.residual_rms < 1e-3, "{b:?}");
        // normalization v~(0) = 0 forces a^2 + |x|^2 = 2a
        assert!((b.a - 2.0).abs() < 0.1, "{b:?}");
        assert!(d.concentration_fraction >= 0.99);
    }

    #[test]
    fn flat_field_has_no_concentration() {
        let d = blowup_diagnose(&SphereField::constant(grid(), 0.0)).unwrap();
        assert_eq!(d.peak_value, 0.0);
    }

    #[test]
    fn two_bumps_flagged() {
        let bump = |z: &[f64; 3], c: [f64; 3]| {
            let d = 1.0 - (z[0] * c[0] + z[1] * c[1] + z[2] * c[2]);
            (-8.0 * d).exp()
        };
        let u = SphereField::from_sphere_fn(grid(), |z| {
            2.0 * bump(z, [0.0, 0.0, 1.0]) + 1.8 * bump(z, [1.0, 0.0, 0.0])
        });
        assert!(blowup_diagnose(&u).unwrap().multi_peak);
    }
}
