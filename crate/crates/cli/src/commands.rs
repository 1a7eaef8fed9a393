use std::path::PathBuf;

use anyhow::{bail, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sigma2_core::critical::{degree_report, CriticalClass, CriticalOptions};
use sigma2_core::families::{
    annulus_bvp, mobius_residual_study, radial_eigenvalues, RadialFamily, RadialSolution,
    SphereMobius,
};
use sigma2_core::identity::{kw_check, kw_obstruction, ConformalKillingField, ObstructionOptions};
use sigma2_core::kfield::{parse_k_spec, SphereFunction};
use sigma2_core::quadrature::SphereQuadrature;
use sigma2_core::radial::{
    bocher_analyze, classify_profile, geometric_radii, monotonicity_check, RadialProfile,
};
use sigma2_core::solver::newton::newton_run;
use sigma2_core::solver::overset::Overset;
use sigma2_core::solver::reduced::DegreeOptions;
use sigma2_core::solver::{
    blowup_diagnose, bubble_initial_guess, homotopy_continue, k_mu, reduced_degree, HomotopyOptions,
};
use sigma2_core::tensor::ConeSpec;
use sigma2_core::{Error, SphereField};

use crate::config::RunConfig;
use crate::fields::{field_table, parse_field_spec, parse_point, profile_rows, read_profile_csv};
use crate::output::{Output, Table};

/// Result of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// The mathematics says no: nonexistence, unsolvable data, degenerate K.
    Failure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::Failure => 2,
        }
    }
}

/// Errors that are answers rather than bugs or bad input.
pub fn is_mathematical(e: &Error) -> bool {
    matches!(
        e,
        Error::Unsolvable(_)
            | Error::NoFamilyFits { .. }
            | Error::Undetermined(_)
            | Error::Degenerate { .. }
            | Error::NonMorse { .. }
            | Error::UnresolvedCritical { .. }
            | Error::NonConvergence { .. }
            | Error::ConeViolation { .. }
            | Error::DegenerateReduction(_)
    )
}

pub struct Run {
    pub command: &'static str,
    pub cfg: RunConfig,
    pub arguments: Value,
    out: Output,
    summary: Map<String, Value>,
    flags: Map<String, Value>,
    tolerances: Map<String, Value>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).unwrap_or(Value::Null)
}

impl Run {
    pub fn new(command: &'static str, cfg: RunConfig, arguments: Value) -> Result<Self> {
        cfg.validate()?;
        let out = Output::create(&cfg.output_dir)?;
        Ok(Run {
            command,
            cfg,
            arguments,
            out,
            summary: Map::new(),
            flags: Map::new(),
            tolerances: Map::new(),
        })
    }

    fn put<T: Serialize>(&mut self, key: &str, v: &T) {
        self.summary.insert(key.into(), to_value(v));
    }

    fn flag(&mut self, key: &str, v: bool) {
        self.flags.insert(key.into(), Value::Bool(v));
    }

    fn tol(&mut self, key: &str, v: f64) {
        self.tolerances.insert(key.into(), json!(v));
    }

    fn solver_tolerances(&mut self) {
        let o = self.cfg.solve;
        self.tol("solver.newton_tol", o.newton_tol);
        self.tol("solver.max_iters", o.max_iters as f64);
        self.tol("solver.damping_factor", o.damping_factor);
        self.tol("solver.min_damping", o.min_damping);
        self.tol("cone.eps", o.cone_eps);
    }

    fn fail(&mut self, e: &Error) -> Outcome {
        self.summary
            .insert("error".into(), Value::String(e.to_string()));
        Outcome::Failure
    }

    pub fn finish(self, outcome: Outcome) -> Result<PathBuf> {
        let o = self.cfg.solve;
        let grid = o.grid()?;
        let mut m = Map::new();
        m.insert("command".into(), json!(self.command));
        m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        m.insert("arguments".into(), self.arguments);
        m.insert(
            "config".into(),
            json!({
                "grid.h": o.h,
                "grid.R": o.radius,
                "solver.newton_tol": o.newton_tol,
                "solver.max_iters": o.max_iters,
                "solver.mu_start": o.mu_start,
                "cone.eps": o.cone_eps,
                "output.dir": self.cfg.output_dir.display().to_string(),
            }),
        );
        m.insert(
            "grid".into(),
            json!({"h": grid.h, "R": grid.radius, "intervals": grid.n() - 1, "nodes_per_chart": grid.node_count()}),
        );
        m.insert("tolerances".into(), Value::Object(self.tolerances));
        m.insert(
            "status".into(),
            json!(match outcome {
                Outcome::Success => "ok",
                Outcome::Failure => "failure",
            }),
        );
        m.insert("exit_code".into(), json!(outcome.exit_code()));
        m.insert("flags".into(), Value::Object(self.flags));
        m.insert("summary".into(), Value::Object(self.summary));
        let dir = self.out.dir().to_path_buf();
        self.out.finish(m)?;
        Ok(dir)
    }
}

fn iteration_table(history: &[sigma2_core::solver::newton::IterRecord]) -> Table {
    let mut t = Table::new(&["iteration", "residual", "step", "min_margin", "max_u"]);
    for r in history {
        t.push(vec![
            r.iteration.into(),
            r.residual.into(),
            r.step_length.into(),
            r.min_margin.into(),
            r.max_u.into(),
        ]);
    }
    t
}

pub fn solve(run: &mut Run, kspec: &str, mu: f64, init: &str) -> Result<Outcome> {
    if !(mu > 0.0 && mu <= 1.0) {
        bail!("--mu must lie in (0, 1]");
    }
    run.solver_tolerances();
    let opts = run.cfg.solve;
    let k = parse_k_spec(kspec)?;
    let grid = opts.grid()?;
    let ks = k.sample(grid);
    let u0 = match init {
        "mean" => {
            let kbar = SphereQuadrature::new(grid)?.integrate(&ks.map(|v| k_mu(v, mu)))?
                / (4.0 * std::f64::consts::PI);
            if !(kbar > 0.0) {
                bail!("mean of K_mu is not positive");
            }
            SphereField::constant(grid, -0.5 * kbar.ln())
        }
        other => match other.strip_prefix("bubble:") {
            Some(xi) => bubble_initial_guess(grid, &parse_point(xi)?)?,
            None => parse_field_spec(other, grid)?,
        },
    };
    run.put("K", &k.describe());
    run.put("mu", &mu);
    let layout = Overset::new(grid)?;
    let nr = newton_run(&layout, &ks, mu, &u0, &opts)?;
    run.out
        .csv("iterations.csv", &iteration_table(&nr.history))?;
    run.out.csv("field.csv", &field_table(nr.state.field()))?;
    run.put("state", &nr.state);
    match &nr.failure {
        None => Ok(Outcome::Success),
        Some(reason) => {
            let d = blowup_diagnose(nr.state.field())?;
            run.flag("multi_peak", d.multi_peak);
            run.put("diagnostics", &d);
            run.put("failure", reason);
            Ok(Outcome::Failure)
        }
    }
}

pub fn continue_path(
    run: &mut Run,
    kspec: &str,
    skip_reduction: bool,
    kw_factor: Option<f64>,
) -> Result<Outcome> {
    run.solver_tolerances();
    let k = parse_k_spec(kspec)?;
    let hopts = HomotopyOptions {
        skip_reduction,
        kw_factor,
        ..HomotopyOptions::default()
    };
    run.tol("continuation.initial_step", hopts.initial_step);
    run.tol("continuation.min_step", hopts.min_step);
    run.tol("continuation.grow", hopts.grow);
    if let Some(f) = kw_factor {
        run.tol("continuation.kw_factor", f);
    }
    let cr = homotopy_continue(&k, &run.cfg.solve, &hopts)?;
    let mut path = Table::new(&[
        "mu",
        "residual",
        "max_u",
        "min_margin",
        "cone_fraction",
        "iterations",
        "kw_max",
    ]);
    for s in &cr.states {
        path.push(vec![
            s.mu.into(),
            s.residual_norm.into(),
            s.max_u.into(),
            s.min_cone_margin.into(),
            s.cone_fraction.into(),
            s.iterations.into(),
            s.kw_max.unwrap_or(f64::NAN).into(),
        ]);
    }
    run.out.csv("path.csv", &path)?;
    let mut log = Table::new(&[
        "mu",
        "accepted",
        "iterations",
        "residual",
        "max_u",
        "min_margin",
        "kw_rejected",
    ]);
    for a in &cr.log {
        log.push(vec![
            a.mu.into(),
            a.accepted.into(),
            a.iterations.into(),
            a.residual.into(),
            a.max_u.into(),
            a.min_margin.into(),
            a.kw_rejected.into(),
        ]);
    }
    run.out.csv("attempts.csv", &log)?;
    if let Some(s) = cr.final_state() {
        if let Some(u) = &s.u {
            run.out.csv("field.csv", &field_table(u))?;
        }
    }
    run.put("K", &k.describe());
    run.put("seed", &cr.seed);
    run.put("reached_end", &cr.reached_end);
    run.put("stall_mu", &cr.stall_mu);
    run.put("final_state", &cr.final_state());
    run.flag("reached_end", cr.reached_end);
    if let Some(d) = &cr.diagnostics {
        run.flag("multi_peak", d.multi_peak);
        run.put("diagnostics", d);
    }
    Ok(if cr.reached_end {
        Outcome::Success
    } else {
        Outcome::Failure
    })
}

pub fn diagnose(run: &mut Run, uspec: &str) -> Result<Outcome> {
    let u = parse_field_spec(uspec, run.cfg.solve.grid()?)?;
    let d = blowup_diagnose(&u)?;
    let mut t = Table::new(&["rank", "z1", "z2", "z3", "u"]);
    t.push(vec![
        0usize.into(),
        d.peak_z[0].into(),
        d.peak_z[1].into(),
        d.peak_z[2].into(),
        d.peak_value.into(),
    ]);
    for (n, (z, v)) in d.secondary_peaks.iter().enumerate() {
        t.push(vec![
            (n + 1).into(),
            z[0].into(),
            z[1].into(),
            z[2].into(),
            (*v).into(),
        ]);
    }
    run.out.csv("peaks.csv", &t)?;
    run.flag("multi_peak", d.multi_peak);
    run.put("diagnostics", &d);
    Ok(Outcome::Success)
}

#[derive(Debug, Clone)]
pub struct FamilyArgs {
    pub family: String,
    pub p: f64,
    pub c1: f64,
    pub c2: f64,
    pub rmin: f64,
    pub rmax: f64,
    pub samples: usize,
}

impl FamilyArgs {
    fn solution(&self) -> Result<RadialSolution> {
        let fam = RadialFamily::from_tag(&self.family).ok_or_else(|| {
            anyhow::anyhow!(
                "unknown family {:?}; expected a, b-log, b-const, c, d or e",
                self.family
            )
        })?;
        Ok(RadialSolution::new(
            fam, self.p, self.c1, self.c2, self.rmin, self.rmax,
        )?)
    }
}

fn input_profile(
    input: &Option<PathBuf>,
    fam: &FamilyArgs,
) -> Result<(RadialProfile, Option<RadialSolution>)> {
    match input {
        Some(p) => Ok((read_profile_csv(p)?, None)),
        None => {
            let rs = fam.solution()?;
            let r = geometric_radii(rs.rmin.max(1e-12), rs.rmax, fam.samples);
            Ok((RadialProfile::from_solution(&rs, r)?, Some(rs)))
        }
    }
}

pub fn radial(run: &mut Run, input: &Option<PathBuf>, fam: &FamilyArgs) -> Result<Outcome> {
    if input.is_some() {
        let (prof, _) = input_profile(input, fam)?;
        run.put("monotonicity", &monotonicity_check(&prof));
        run.tol("radial.fit_threshold", sigma2_core::radial::FIT_THRESHOLD);
        return match classify_profile(&prof, fam.p) {
            Ok(fit) => {
                run.put("fit", &fit);
                Ok(Outcome::Success)
            }
            Err(e) if is_mathematical(&e) => Ok(run.fail(&e)),
            Err(e) => Err(e.into()),
        };
    }
    let rs = fam.solution()?;
    let r = geometric_radii(rs.rmin.max(1e-12), rs.rmax, fam.samples);
    let vals = r
        .iter()
        .map(|&x| rs.eval(x))
        .collect::<sigma2_core::Result<Vec<_>>>()?;
    run.out.csv("profile.csv", &profile_rows(&r, &vals))?;
    let cone = ConeSpec::new(rs.p)?;
    let mut t = Table::new(&["r", "lambda1", "lambda2", "margin1", "margin2"]);
    let mut worst = 0.0f64;
    for (x, v) in r.iter().zip(&vals) {
        let l = radial_eigenvalues(v.0, v.1, v.2, *x)?;
        let (m1, m2) = cone.margins(&l);
        worst = worst.max(m1.abs().min(m2.abs()));
        t.push(vec![
            (*x).into(),
            l.l1.into(),
            l.l2.into(),
            m1.into(),
            m2.into(),
        ]);
    }
    run.out.csv("eigenvalues.csv", &t)?;
    run.put("solution", &rs);
    run.put("max_boundary_margin", &worst);
    Ok(Outcome::Success)
}

pub fn bocher(run: &mut Run, input: &Option<PathBuf>, fam: &FamilyArgs) -> Result<Outcome> {
    run.tol("bocher.cauchy_tol", sigma2_core::radial::BOCHER_TOL);
    let (prof, rs) = input_profile(input, fam)?;
    if let Some(rs) = rs {
        run.put("solution", &rs);
    }
    match bocher_analyze(&prof, fam.p) {
        Ok(rep) => {
            run.put("report", &rep);
            Ok(Outcome::Success)
        }
        Err(e) if is_mathematical(&e) => Ok(run.fail(&e)),
        Err(e) => Err(e.into()),
    }
}

pub fn degree(run: &mut Run, kspec: &str, reduced: bool) -> Result<Outcome> {
    let k = parse_k_spec(kspec)?;
    let grid = run.cfg.solve.grid()?;
    let copts = CriticalOptions::default();
    run.tol("critical.newton_tol", copts.newton_tol);
    run.tol("critical.morse_rel", copts.morse_rel);
    run.put("K", &k.describe());
    let rep = match degree_report(&k, grid, &copts) {
        Ok(r) => r,
        Err(e) if is_mathematical(&e) => return Ok(run.fail(&e)),
        Err(e) => return Err(e.into()),
    };
    let mut t = Table::new(&["z1", "z2", "z3", "class", "index", "hess1", "hess2", "lapK"]);
    for p in &rep.points {
        let class = match p.class {
            CriticalClass::Plus => "plus",
            CriticalClass::Minus => "minus",
        };
        t.push(vec![
            p.z[0].into(),
            p.z[1].into(),
            p.z[2].into(),
            class.into(),
            (p.index as usize).into(),
            p.hessian_eigs[0].into(),
            p.hessian_eigs[1].into(),
            p.laplacian.into(),
        ]);
    }
    run.out.csv("critical_points.csv", &t)?;
    run.put("deg_minus", &rep.deg_minus);
    run.put("indicator", &rep.indicator);
    run.put("ph_total", &rep.ph_total);
    run.put("nondegeneracy", &rep.nondegeneracy);
    if reduced {
        let dopts = DegreeOptions::default();
        run.tol("reduced.radius", dopts.radius);
        let rd = reduced_degree(&k, &dopts)?;
        let mut z = Table::new(&["xi1", "xi2", "xi3", "residual", "jacobian_det"]);
        for q in &rd.zeros {
            z.push(vec![
                q.xi[0].into(),
                q.xi[1].into(),
                q.xi[2].into(),
                q.residual.into(),
                q.jacobian_det.into(),
            ]);
        }
        run.out.csv("reduced_zeros.csv", &z)?;
        run.flag(
            "pipelines_agree",
            rd.degree_from_zeros == rep.indicator && rd.degree_from_boundary == rep.indicator,
        );
        run.put("reduced", &rd);
    }
    Ok(Outcome::Success)
}

pub fn kw(run: &mut Run, uspec: &str, kspec: Option<&str>) -> Result<Outcome> {
    let grid = run.cfg.solve.grid()?;
    let u = parse_field_spec(uspec, grid)?;
    let rep = kw_check(&u)?;
    let mut t = Table::new(&["field", "integral"]);
    for (f, v) in ConformalKillingField::ALL
        .iter()
        .zip(rep.integrals.to_array())
    {
        t.push(vec![f.tag().into(), v.into()]);
    }
    run.out.csv("kw.csv", &t)?;
    run.put("kw", &rep);
    if let Some(ks) = kspec {
        let k = parse_k_spec(ks)?;
        let oo = ObstructionOptions::default();
        run.tol("obstruction.delta", oo.delta);
        run.tol("obstruction.area_fraction", oo.area_fraction);
        let ob = kw_obstruction(&k.sample(grid), &oo)?;
        run.flag("obstructed", ob.is_violated());
        run.put("K", &k.describe());
        run.put("obstruction", &ob);
    }
    Ok(Outcome::Success)
}

pub fn mobius_check(run: &mut Run, pole: &str, t: f64, levels: &[usize]) -> Result<Outcome> {
    if levels.len() < 2 {
        bail!("--levels needs at least two resolutions");
    }
    let m = SphereMobius::new(parse_point(pole)?, t)?;
    let study = mobius_residual_study(m, run.cfg.solve.radius, levels)?;
    let mut tab = Table::new(&["intervals", "h", "sup_residual", "ratio"]);
    for (i, n) in levels.iter().enumerate() {
        let ratio = if i == 0 {
            f64::NAN
        } else {
            study.ratios[i - 1]
        };
        tab.push(vec![
            (*n).into(),
            study.h[i].into(),
            study.error[i].into(),
            ratio.into(),
        ]);
    }
    run.out.csv("mobius_study.csv", &tab)?;
    run.put("study", &study);
    Ok(Outcome::Success)
}

pub fn bvp(
    run: &mut Run,
    p: f64,
    a: f64,
    b: f64,
    alpha: f64,
    beta: f64,
    samples: usize,
) -> Result<Outcome> {
    let rs = match annulus_bvp(p, a, b, alpha, beta) {
        Ok(rs) => rs,
        Err(e) if is_mathematical(&e) => return Ok(run.fail(&e)),
        Err(e) => return Err(e.into()),
    };
    let r = geometric_radii(a, b, samples.max(2));
    let vals = r
        .iter()
        .map(|&x| rs.eval(x))
        .collect::<sigma2_core::Result<Vec<_>>>()?;
    run.out.csv("profile.csv", &profile_rows(&r, &vals))?;
    run.put("solution", &rs);
    run.put(
        "boundary_error",
        &[
            (vals[0].0 - alpha).abs(),
            (vals[vals.len() - 1].0 - beta).abs(),
        ],
    );
    Ok(Outcome::Success)
}
