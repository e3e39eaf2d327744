use rayon::prelude::*;
use serde_json::{json, Value};
use tumorbif::bifurcation::{self, TWO_PATH_TOL};
use tumorbif::certificates::{self, SeriesPolys, SweepGrid, PUBLISHED_TABLE1, SERIES_MAX_RADIUS};
use tumorbif::dynamics::{self, Integrator, ModeState, Verdict, DEFAULT_N_MAX};
use tumorbif::stationary::RESIDUAL_TOL;
use tumorbif::{ModelParams, RadialEquilibrium};

use crate::config::{
    parse_corruption, parse_modes, pick, pick_opt, CliResult, Command, CommonArgs, ConfigFile, Failure, Format,
    ParamGrid,
};
use crate::output::{Cell, Report, Table};

/// Relative tolerance of the series/closed-form comparison for `G_1`.
const SERIES_TOL: f64 = 1e-8;

/// Fully resolved settings shared by all subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub params: ModelParams,
    pub grid: ParamGrid,
    pub grid_given: bool,
    pub format: Format,
    pub threads: Option<usize>,
    pub polys: SeriesPolys,
    pub file: ConfigFile,
}

impl RunConfig {
    pub fn resolve(common: &CommonArgs) -> CliResult<Self> {
        let file = match &common.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let beta = pick(common.beta, &file, "beta", 1.0)?;
        let sigma_tilde = pick(common.sigma_tilde, &file, "sigma_tilde", 0.5)?;
        let gamma = pick(common.gamma, &file, "gamma", 1.0)?;
        let params = ModelParams::new(beta, sigma_tilde, gamma).map_err(|e| Failure::Config(e.to_string()))?;
        let grid_spec: Option<String> = pick_opt(common.grid.clone(), &file, "grid")?;
        let grid = match &grid_spec {
            Some(s) => ParamGrid::parse(s, ParamGrid::single(&params))?,
            None => ParamGrid::single(&params),
        };
        let format = match common.format {
            Some(f) => f,
            None => match file.raw("format") {
                None | Some("csv") => Format::Csv,
                Some("json") => Format::Json,
                Some(other) => return Err(Failure::Config(format!("unknown format {other:?}"))),
            },
        };
        let threads = pick_opt(common.threads, &file, "threads")?;
        if threads == Some(0) {
            return Err(Failure::Config("--threads must be at least 1".into()));
        }
        let mut polys = SeriesPolys::default();
        if let Some(spec) = &common.corrupt_coefficient {
            let (i, d) = parse_corruption(spec)?;
            polys = polys.corrupted(i, d);
        }
        Ok(Self { params, grid, grid_given: grid_spec.is_some(), format, threads, polys, file })
    }

    fn meta(&self, command: &str, grid: &ParamGrid, options: Value) -> Value {
        json!({
            "command": command,
            "params": { "beta": self.params.beta, "sigma_tilde": self.params.sigma_tilde, "gamma": self.params.gamma },
            "grid": grid.to_json(),
            "options": options,
            "version": env!("CARGO_PKG_VERSION"),
        })
    }
}

/// A report plus the failure to signal after it has been written.
pub struct Outcome {
    pub report: Report,
    pub failure: Option<String>,
}

pub fn run(cmd: &Command, cfg: &RunConfig) -> CliResult<Outcome> {
    let f = &cfg.file;
    match cmd {
        Command::Stationary { mu } => stationary(cfg, pick_opt(*mu, f, "mu")?),
        Command::Bifurcation { n_max, mu } => {
            bifurcation_table(cfg, pick(*n_max, f, "n_max", 10)?, pick_opt(*mu, f, "mu")?)
        }
        Command::Certify { terms, r_max } => certify(cfg, pick(*terms, f, "terms", 60)?, pick(*r_max, f, "r_max", 10.0)?),
        Command::Slope => slope(cfg),
        Command::Simulate { mu, mu_factor, t_end, samples, modes, integrator, n_max, eps_max, eps_samples } => {
            let opts = SimOptions {
                mu: pick_opt(*mu, f, "mu")?,
                mu_factor: pick(*mu_factor, f, "mu_factor", 0.95)?,
                t_end: pick(*t_end, f, "t_end", 10.0)?,
                samples: pick(*samples, f, "samples", 20)?,
                modes: pick(modes.clone(), f, "modes", "2:0=1".to_string())?,
                integrator: match integrator {
                    Some(i) => (*i).into(),
                    None => match f.raw("integrator") {
                        None | Some("exact") => Integrator::Exact,
                        Some("rk4") => Integrator::Rk4,
                        Some(o) => return Err(Failure::Config(format!("unknown integrator {o:?}"))),
                    },
                },
                n_max: pick(*n_max, f, "n_max", DEFAULT_N_MAX)?,
                eps_max: pick(*eps_max, f, "eps_max", 0.1)?,
                eps_samples: pick(*eps_samples, f, "eps_samples", 21)?,
            };
            simulate(cfg, &opts)
        }
        Command::Table1 => table1(cfg),
    }
}

fn solve_all(grid: &ParamGrid) -> CliResult<Vec<RadialEquilibrium>> {
    let points = grid.points()?;
    points
        .par_iter()
        .map(|p| RadialEquilibrium::solve(p).map_err(Failure::from))
        .collect()
}

fn stationary(cfg: &RunConfig, mu: Option<f64>) -> CliResult<Outcome> {
    if let Some(m) = mu {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Failure::Config(format!("mu must be positive, got {m}")));
        }
    }
    let mut t = Table::new(
        "stationary",
        &[
            "beta", "sigma_tilde", "gamma", "mu", "R", "residual", "sigma", "sigma_r", "sigma_rr", "sigma_rrr", "p", "p_r",
            "p_rr", "p_rrr",
        ],
    );
    let mut failure = None;
    for eq in solve_all(&cfg.grid)? {
        let p = eq.params;
        let mu_here = match mu {
            Some(m) => m,
            None => bifurcation::mu_n(&eq, 2)?,
        };
        let d = eq.boundary_derivs(mu_here);
        if !(eq.residual <= RESIDUAL_TOL) && failure.is_none() {
            failure = Some(format!("residual {} exceeds {RESIDUAL_TOL:e} at beta = {}", eq.residual, p.beta));
        }
        let mut row: Vec<Cell> =
            vec![p.beta.into(), p.sigma_tilde.into(), p.gamma.into(), mu_here.into(), eq.radius.into(), eq.residual.into()];
        row.extend(d.sigma.iter().chain(d.pressure.iter()).map(|&v| Cell::from(v)));
        t.push(row);
    }
    let meta = cfg.meta("stationary", &cfg.grid, json!({ "mu": mu }));
    Ok(Outcome { report: Report { meta, main: t, sections: vec![] }, failure })
}

fn bifurcation_table(cfg: &RunConfig, n_max: usize, mu: Option<f64>) -> CliResult<Outcome> {
    if n_max < 2 {
        return Err(Failure::Config(format!("--n-max must be at least 2, got {n_max}")));
    }
    let mut t = Table::new(
        "bifurcation",
        &["beta", "sigma_tilde", "gamma", "R", "mu", "n", "mu_n", "b_n", "lambda", "status"],
    );
    let mut failure = None;
    for eq in solve_all(&cfg.grid)? {
        let p = eq.params;
        let mu2 = bifurcation::mu_n(&eq, 2)?;
        let mu_eval = mu.unwrap_or(mu2);
        let mut prev = f64::NEG_INFINITY;
        for n in 1..=n_max {
            let head: Vec<Cell> =
                vec![p.beta.into(), p.sigma_tilde.into(), p.gamma.into(), eq.radius.into(), mu_eval.into(), n.into()];
            let tail: Vec<Cell> = if n == 1 {
                vec![Cell::Missing, 0.0.into(), 0.0.into(), "translation".into()]
            } else {
                match bifurcation::mu_n(&eq, n) {
                    Ok(m) => {
                        if !(m > prev) && failure.is_none() {
                            failure = Some(format!("mu_{n} = {m} does not exceed mu_{} = {prev}", n - 1));
                        }
                        prev = m;
                        let b = bifurcation::b_n(&eq, n, m);
                        let lambda = b * (mu_eval - m) + 0.0;
                        let status = if lambda == 0.0 {
                            "critical"
                        } else if lambda < 0.0 {
                            "stable"
                        } else {
                            "unstable"
                        };
                        vec![m.into(), b.into(), lambda.into(), status.into()]
                    }
                    Err(e) => vec![Cell::Missing, Cell::Missing, Cell::Missing, format!("error: {e}").into()],
                }
            };
            let mut row = head;
            row.extend(tail);
            t.push(row);
        }
    }
    let meta = cfg.meta("bifurcation", &cfg.grid, json!({ "n_max": n_max, "mu": mu }));
    Ok(Outcome { report: Report { meta, main: t, sections: vec![] }, failure })
}

fn slope(cfg: &RunConfig) -> CliResult<Outcome> {
    let mut t = Table::new(
        "slope",
        &[
            "beta",
            "sigma_tilde",
            "gamma",
            "R",
            "residual",
            "mu2",
            "mu2_alt",
            "e1",
            "e2",
            "e3",
            "bracket_assembly",
            "bracket_compact",
            "hrmu",
            "slope",
            "slope_closed",
            "a",
            "mu2_delta",
            "bracket_delta",
            "slope_delta",
            "passed",
        ],
    );
    let eqs = solve_all(&cfg.grid)?;
    let certs: Vec<_> = eqs
        .par_iter()
        .map(|eq| bifurcation::mu2_slope(eq).map(|c| (eq.residual, c)).map_err(Failure::from))
        .collect::<CliResult<_>>()?;
    let mut failure = None;
    for (residual, c) in certs {
        let check = c.check(TWO_PATH_TOL).map_err(|e| e.to_string()).and_then(|_| {
            if residual <= RESIDUAL_TOL {
                Ok(())
            } else {
                Err(format!("radius residual {residual:e} at beta = {}, sigma_tilde = {}", c.beta, c.sigma_tilde))
            }
        });
        if let Err(msg) = &check {
            failure.get_or_insert_with(|| msg.clone());
        }
        t.push(vec![
            c.beta.into(),
            c.sigma_tilde.into(),
            c.gamma.into(),
            c.radius.into(),
            residual.into(),
            c.mu2.into(),
            c.mu2_alt.into(),
            c.e1.into(),
            c.e2.into(),
            c.e3.into(),
            c.bracket_assembly.into(),
            c.bracket_compact.into(),
            c.hrmu.into(),
            c.slope.into(),
            c.slope_closed.into(),
            c.a.into(),
            c.mu2_delta().into(),
            c.bracket_delta().into(),
            c.slope_delta().into(),
            check.is_ok().into(),
        ]);
    }
    let meta = cfg.meta("slope", &cfg.grid, json!({ "two_path_tol": TWO_PATH_TOL }));
    Ok(Outcome { report: Report { meta, main: t, sections: vec![] }, failure })
}

fn table1_rows(polys: &SeriesPolys) -> CliResult<(Table, usize)> {
    let mut t = Table::new("table1", &["n", "a_n", "b_n", "combined", "published", "matches"]);
    let mut matched = 0;
    for (i, n) in (4..=17u32).enumerate() {
        let row = polys.term(n)?;
        let ok = row.combined == PUBLISHED_TABLE1[i];
        matched += ok as usize;
        t.push(vec![n.into(), row.a_n.into(), row.b_n.into(), row.combined.into(), PUBLISHED_TABLE1[i].into(), ok.into()]);
    }
    Ok((t, matched))
}

fn table1(cfg: &RunConfig) -> CliResult<Outcome> {
    let (t, matched) = table1_rows(&cfg.polys)?;
    let failure = (matched != PUBLISHED_TABLE1.len()).then(|| format!("{matched}/14 Table 1 entries match"));
    let meta = cfg.meta("table1", &cfg.grid, json!({}));
    Ok(Outcome { report: Report { meta, main: t, sections: vec![] }, failure })
}

fn certify(cfg: &RunConfig, terms: usize, r_max: f64) -> CliResult<Outcome> {
    if !(0.5..=SERIES_MAX_RADIUS).contains(&r_max) {
        return Err(Failure::Config(format!("--r-max must lie in [0.5, {SERIES_MAX_RADIUS}], got {r_max}")));
    }
    if terms == 0 {
        return Err(Failure::Config("--terms must be positive".into()));
    }
    let grid = if cfg.grid_given {
        cfg.grid.clone()
    } else {
        ParamGrid::certificate(cfg.params.gamma)
    };
    grid.points()?;
    let mut summary = Table::new("summary", &["item", "passed", "detail"]);
    let mut failures: Vec<String> = Vec::new();
    let mut record = |item: &str, ok: bool, detail: String, summary: &mut Table| {
        if !ok {
            failures.push(format!("{item}: {detail}"));
        }
        summary.push(vec![item.into(), ok.into(), detail.into()]);
    };

    // sign sweep, one pass per gamma value
    let mut sweep = Table::new(
        "sweep",
        &[
            "beta", "sigma_tilde", "gamma", "R", "residual", "e1", "e2", "e3", "g1", "mu2", "slope", "a", "mu2_delta",
            "bracket_delta", "slope_delta",
        ],
    );
    let mut radii = Table::new("radii", &["R", "e1", "e2", "e3", "g1"]);
    let mut sweep_ok = true;
    let mut sweep_detail = String::new();
    for (gi, &gamma) in grid.gamma.iter().enumerate() {
        let sg = SweepGrid { betas: grid.beta.clone(), sigma_tildes: grid.sigma_tilde.clone(), gamma, ..SweepGrid::default() };
        let rep = certificates::sign_sweep(&sg)?;
        for r in &rep.rows {
            sweep.push(vec![
                r.beta.into(),
                r.sigma_tilde.into(),
                gamma.into(),
                r.radius.into(),
                r.residual.into(),
                r.e1.into(),
                r.e2.into(),
                r.e3.into(),
                r.g1.into(),
                r.mu2.into(),
                r.slope.into(),
                r.a.into(),
                r.mu2_delta.into(),
                r.bracket_delta.into(),
                r.slope_delta.into(),
            ]);
            let deltas_ok = r.mu2_delta <= TWO_PATH_TOL && r.bracket_delta <= TWO_PATH_TOL && r.slope_delta <= TWO_PATH_TOL;
            if !(deltas_ok && r.residual <= RESIDUAL_TOL) && sweep_ok {
                sweep_ok = false;
                sweep_detail = format!("two-path or residual check failed at beta = {}, sigma_tilde = {}", r.beta, r.sigma_tilde);
            }
        }
        if gi == 0 {
            for r in &rep.radius_rows {
                radii.push(vec![r.radius.into(), r.e1.into(), r.e2.into(), r.e3.into(), r.g1.into()]);
            }
        }
        if !rep.passed() && sweep_ok {
            sweep_ok = false;
            sweep_detail = rep.first_failure.clone().unwrap_or_else(|| "sign check failed".into());
        }
    }
    if sweep_ok {
        sweep_detail = format!("{} grid points and {} radii all negative", sweep.rows.len(), radii.rows.len());
    }
    record("sign_sweep", sweep_ok, sweep_detail, &mut summary);

    let (t1, matched) = table1_rows(&cfg.polys)?;
    record("table1", matched == PUBLISHED_TABLE1.len(), format!("{matched}/14 match"), &mut summary);

    let mut cancel = Table::new("cancellation", &["power", "numerator_over_5040"]);
    match certificates::low_order_cancellation() {
        Ok(recs) => {
            for c in &recs {
                cancel.push(vec![c.power.into(), c.numerator_over_5040.into()]);
            }
            record("cancellation", true, format!("{}/4 vanish", recs.len()), &mut summary);
        }
        Err(e) => record("cancellation", false, e.to_string(), &mut summary),
    }

    match certificates::verify_series_against_closed_form(&cfg.polys) {
        Ok(()) => record("series_identity", true, "n = 4..17 exact".into(), &mut summary),
        Err(e) => record("series_identity", false, e.to_string(), &mut summary),
    }
    match certificates::tail_positivity(&cfg.polys) {
        Ok(tp) => record("tail_positivity", true, format!("{} linear factors non-negative from n = 18", tp.factors.len()), &mut summary),
        Err(e) => record("tail_positivity", false, e.to_string(), &mut summary),
    }

    let mut series = Table::new("series", &["R", "series", "closed", "rel_err", "tail_estimate"]);
    let steps = ((r_max - 0.5) / 0.1 + 1e-9).floor() as usize;
    let mut worst: f64 = 0.0;
    let mut series_ok = true;
    for i in 0..=steps {
        let r = ((0.5 + 0.1 * i as f64) * 1e12).round() / 1e12;
        let s = certificates::g1_series_with(&cfg.polys, r, terms)?;
        let c = certificates::g1_closed(r)?;
        let rel = (s.value - c).abs() / c.abs();
        worst = worst.max(rel);
        series_ok &= rel <= SERIES_TOL && s.tail_estimate < SERIES_TOL * c.abs();
        series.push(vec![r.into(), s.value.into(), c.into(), rel.into(), s.tail_estimate.into()]);
    }
    record("series_vs_closed", series_ok, format!("max relative error {worst:e} for R from 0.5 to {r_max}"), &mut summary);

    let meta = cfg.meta("certify", &grid, json!({ "terms": terms, "r_max": r_max, "series_tol": SERIES_TOL }));
    let failure = (!failures.is_empty()).then(|| failures.join("; "));
    Ok(Outcome { report: Report { meta, main: summary, sections: vec![sweep, radii, t1, cancel, series] }, failure })
}

struct SimOptions {
    mu: Option<f64>,
    mu_factor: f64,
    t_end: f64,
    samples: usize,
    modes: String,
    integrator: Integrator,
    n_max: usize,
    eps_max: f64,
    eps_samples: usize,
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Stable => "stable",
        Verdict::Neutral => "neutral",
        Verdict::Unstable => "unstable",
    }
}

fn simulate(cfg: &RunConfig, o: &SimOptions) -> CliResult<Outcome> {
    let points = cfg.grid.points()?;
    if points.len() != 1 {
        return Err(Failure::Config(format!("simulate takes one parameter point, the grid has {}", points.len())));
    }
    if !(o.t_end >= 0.0 && o.t_end.is_finite()) || o.samples == 0 {
        return Err(Failure::Config("simulate needs t_end >= 0 and samples >= 1".into()));
    }
    if !(o.eps_max > 0.0) || o.eps_samples < 2 {
        return Err(Failure::Config("simulate needs eps_max > 0 and eps_samples >= 2".into()));
    }
    let modes = parse_modes(&o.modes)?;
    if let Some(&((n, _), _)) = modes.iter().find(|((n, _), _)| *n == 0 || *n > o.n_max) {
        return Err(Failure::Config(format!("mode n = {n} outside [1, {}]", o.n_max)));
    }
    let initial = ModeState::new(modes).map_err(|e| Failure::Config(e.to_string()))?;
    let eq = RadialEquilibrium::solve(&points[0])?;
    let cert = bifurcation::mu2_slope(&eq)?;
    let mu = o.mu.unwrap_or(o.mu_factor * cert.mu2);
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Failure::Config(format!("mu must be positive, got {mu}")));
    }
    let states = dynamics::simulate(&eq, &initial, mu, o.t_end, o.samples, o.integrator, o.n_max)?;
    let mut series = Table::new("series", &["t", "n", "m", "amplitude"]);
    for s in &states {
        for (&(n, m), &a) in &s.amplitudes {
            series.push(vec![s.time.into(), n.into(), m.into(), a.into()]);
        }
    }
    let mut diagram = Table::new("diagram", &["eps", "axisym_rate", "full_rate", "axisym_verdict", "full_verdict"]);
    for r in dynamics::stability_diagram(o.eps_max, cert.a, o.eps_samples)? {
        diagram.push(vec![
            r.eps.into(),
            r.axisym_rate.into(),
            r.full_rate.into(),
            verdict_name(r.axisym_verdict).into(),
            verdict_name(r.full_verdict).into(),
        ]);
    }
    let integrator = match o.integrator {
        Integrator::Exact => "exact",
        Integrator::Rk4 => "rk4",
    };
    let meta = cfg.meta(
        "simulate",
        &cfg.grid,
        json!({
            "mu": mu, "mu2": cert.mu2, "a": cert.a, "t_end": o.t_end, "samples": o.samples, "modes": o.modes,
            "integrator": integrator, "n_max": o.n_max, "eps_max": o.eps_max, "eps_samples": o.eps_samples,
        }),
    );
    Ok(Outcome { report: Report { meta, main: series, sections: vec![diagram] }, failure: None })
}
