//! Prescribed curvature functions on the sphere.

use serde::{Deserialize, Serialize};

use crate::chart::{stereo_to_sphere, ChartGrid, ChartId};
use crate::error::{Error, Result};
use crate::field::SphereField;

/// A function on the unit sphere, evaluated through its ambient formula.
pub trait SphereFunction: Sync {
    fn value(&self, z: &[f64; 3]) -> f64;

    fn chart_value(&self, chart: ChartId, x: [f64; 2]) -> f64 {
        self.value(&stereo_to_sphere(chart, x).0)
    }

    fn sample(&self, grid: ChartGrid) -> SphereField {
        SphereField::from_sphere_fn(grid, |z| self.value(z))
    }
}

/// Wraps a closure.
pub struct FnSphere<F>(pub F);

impl<F: Fn(&[f64; 3]) -> f64 + Sync> SphereFunction for FnSphere<F> {
    fn value(&self, z: &[f64; 3]) -> f64 {
        (self.0)(z)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    /// Exponents of `(z1, z2, z3)`.
    pub powers: [u32; 3],
}

/// Polynomial in the ambient coordinates restricted to the sphere.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SphericalPolynomial {
    pub terms: Vec<Monomial>,
}

impl SphericalPolynomial {
    pub fn constant(c: f64) -> Self {
        SphericalPolynomial {
            terms: vec![Monomial {
                coeff: c,
                powers: [0, 0, 0],
            }],
        }
    }

    pub fn term(mut self, coeff: f64, powers: [u32; 3]) -> Self {
        self.terms.push(Monomial { coeff, powers });
        self
    }

    /// Scales every coefficient.
    pub fn scaled(&self, s: f64) -> Self {
        SphericalPolynomial {
            terms: self
                .terms
                .iter()
                .map(|m| Monomial {
                    coeff: s * m.coeff,
                    ..*m
                })
                .collect(),
        }
    }

    pub fn is_constant(&self) -> Option<f64> {
        if self
            .terms
            .iter()
            .all(|m| m.powers == [0, 0, 0] || m.coeff == 0.0)
        {
            Some(
                self.terms
                    .iter()
                    .filter(|m| m.powers == [0, 0, 0])
                    .map(|m| m.coeff)
                    .sum(),
            )
        } else {
            None
        }
    }

    pub fn describe(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (n, m) in self.terms.iter().enumerate() {
            if n > 0 {
                out.push_str(if m.coeff < 0.0 { "-" } else { "+" });
            } else if m.coeff < 0.0 {
                out.push('-');
            }
            let c = m.coeff.abs();
            let mut mono = String::new();
            for (i, &e) in m.powers.iter().enumerate() {
                match e {
                    0 => {}
                    1 => mono.push_str(&format!("z{}", i + 1)),
                    _ => mono.push_str(&format!("z{}^{}", i + 1, e)),
                }
            }
            if mono.is_empty() || c != 1.0 {
                out.push_str(&format!("{c}"));
            }
            out.push_str(&mono);
        }
        out
    }
}

impl SphereFunction for SphericalPolynomial {
    fn value(&self, z: &[f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|m| {
                m.coeff
                    * z[0].powi(m.powers[0] as i32)
                    * z[1].powi(m.powers[1] as i32)
                    * z[2].powi(m.powers[2] as i32)
            })
            .sum()
    }
}

/// Named curvature functions accepted by [`parse_k_spec`].
pub const PRESETS: &[&str] = &[
    "1",
    "2+z3",
    "2+z3^2",
    "2+z3^2+0.1z1",
    "3+z3+0.75z1^2",
    "3+z3+1.5z1^2",
    "1+0.1q(0,0.3,1)",
    "1+0.1q(0,0.7,1)",
];

/// Looks up a named preset.
pub fn preset(name: &str) -> Option<SphericalPolynomial> {
    let base = SphericalPolynomial::default();
    Some(match name {
        "2+z3" => base.term(2.0, [0, 0, 0]).term(1.0, [0, 0, 1]),
        "2+z3^2" => base.term(2.0, [0, 0, 0]).term(1.0, [0, 0, 2]),
        "2+z3^2+0.1z1" => base
            .term(2.0, [0, 0, 0])
            .term(1.0, [0, 0, 2])
            .term(0.1, [1, 0, 0]),
        "3+z3+0.75z1^2" => base
            .term(3.0, [0, 0, 0])
            .term(1.0, [0, 0, 1])
            .term(0.75, [2, 0, 0]),
        "3+z3+1.5z1^2" => base
            .term(3.0, [0, 0, 0])
            .term(1.0, [0, 0, 1])
            .term(1.5, [2, 0, 0]),
        // 1 + 0.1 (a z1^2 + b z2^2 + c z3^2)
        "1+0.1q(0,0.3,1)" => base
            .term(1.0, [0, 0, 0])
            .term(0.03, [0, 2, 0])
            .term(0.1, [0, 0, 2]),
        "1+0.1q(0,0.7,1)" => base
            .term(1.0, [0, 0, 0])
            .term(0.07, [0, 2, 0])
            .term(0.1, [0, 0, 2]),
        _ => return None,
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyJson {
    terms: Vec<Monomial>,
}

/// Parses a curvature specification: a number, a preset name, inline
/// polynomial JSON (`{"terms": [{"coeff": 2, "powers": [0, 0, 1]}]}`) or
/// `@path` to such a JSON file.
pub fn parse_k_spec(spec: &str) -> Result<SphericalPolynomial> {
    let s = spec.trim();
    if let Ok(c) = s.parse::<f64>() {
        if !c.is_finite() {
            return Err(Error::Parse(format!("non-finite constant {s}")));
        }
        return Ok(SphericalPolynomial::constant(c));
    }
    if let Some(p) = preset(s) {
        return Ok(p);
    }
    let json = if let Some(path) = s.strip_prefix('@') {
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?
    } else if s.starts_with('{') {
        s.to_string()
    } else {
        return Err(Error::Parse(format!(
            "unknown K specification {s:?}; expected a number, one of {PRESETS:?}, or polynomial JSON"
        )));
    };
    let p: PolyJson = serde_json::from_str(&json).map_err(|e| Error::Parse(e.to_string()))?;
    if p.terms.iter().any(|m| !m.coeff.is_finite()) {
        return Err(Error::Parse("non-finite coefficient".into()));
    }
    Ok(SphericalPolynomial { terms: p.terms })
}
