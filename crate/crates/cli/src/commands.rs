use serde::Serialize;

use twomode::evolution::{
    assemble_u, c_coefficients_grid, coherent_evolution_closed, ladder_eigenvalue_check, ClosedCoherent,
    CoherentAmplitudes, CoherentStateSpec, LadderKind,
};
use twomode::fock::{FockSpace, FockState};
use twomode::oracle::{brute_force_propagator, brute_force_smatrix, compare_operators, INTERIOR_MARGIN};
use twomode::riccati::{closed_factors, solve_riccati_numeric, Chart, DisentangledFactors, Ordering};
use twomode::scenario::{CaseTag, CoefficientScenario};
use twomode::smatrix::{closed_block, smatrix_closed, smatrix_from_sample, smatrix_numeric_grid, SMatrix2};
use twomode::C64;

use crate::output::{cols, num, pair, write_csv, write_json};
use crate::{Fault, Method, Outcome, RunConfig};

const ZERO: C64 = C64::new(0.0, 0.0);

pub fn factors(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sc = &cfg.scenario;
    let f = match cfg.method {
        Method::Auto | Method::Numeric => solve_riccati_numeric(sc, &cfg.grid, cfg.tol)?,
        Method::Closed => {
            DisentangledFactors::tabulate(sc, Ordering::Standard, &cfg.grid, |t| closed_factors(sc, t, Chart::Principal))?
        }
    };
    let valid: Vec<_> = f.valid_samples().collect();

    if cfg.format.csv() {
        let header = ["t", "re_Lambda", "im_Lambda", "re_Omega", "im_Omega", "re_Gamma", "im_Gamma", "chart_valid"];
        let rows: Vec<Vec<String>> = valid
            .iter()
            .map(|s| {
                let mut r = vec![num(s.t)];
                r.extend(cols(s.lambda));
                r.extend(cols(s.omega));
                r.extend(cols(s.gamma));
                r.push(s.chart_valid.to_string());
                r
            })
            .collect();
        write_csv(&cfg.out.join("factors.csv"), &header, &rows)?;
    }
    if cfg.format.json() {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            alpha: f64,
            rho: f64,
            lambda: [f64; 2],
            omega: [f64; 2],
            gamma: [f64; 2],
        }
        #[derive(Serialize)]
        struct Doc {
            first_singular_time: Option<f64>,
            samples: Vec<Row>,
        }
        let samples = valid
            .iter()
            .map(|s| Row {
                t: s.t,
                alpha: s.alpha,
                rho: s.rho,
                lambda: pair(s.lambda),
                omega: pair(s.omega),
                gamma: pair(s.gamma),
            })
            .collect();
        write_json(&cfg.out.join("factors.json"), &Doc { first_singular_time: f.first_singular_time, samples })?;
    }
    Ok(match f.first_singular_time {
        Some(ts) => Outcome::Partial(format!(
            "chart singularity at t = {ts}; wrote {} of {} rows",
            valid.len(),
            cfg.grid.len()
        )),
        None => Outcome::Success,
    })
}

fn s_grid(cfg: &RunConfig) -> anyhow::Result<Vec<SMatrix2>> {
    let sc = &cfg.scenario;
    let closed = match cfg.method {
        Method::Numeric => false,
        Method::Auto => closed_block(sc).is_some(),
        Method::Closed => {
            if closed_block(sc).is_none() {
                anyhow::bail!("no closed propagator for {:?}", sc.tag());
            }
            true
        }
    };
    if closed {
        Ok(cfg.grid.iter().map(|&t| smatrix_closed(sc, t)).collect::<Result<_, _>>()?)
    } else {
        Ok(smatrix_numeric_grid(sc, &cfg.grid, cfg.tol)?)
    }
}

pub fn smatrix(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let grid = s_grid(cfg)?;
    if cfg.format.csv() {
        let header = [
            "t", "re_S11", "im_S11", "re_S12", "im_S12", "re_S21", "im_S21", "re_S22", "im_S22", "unitarity_defect",
        ];
        let rows: Vec<Vec<String>> = grid
            .iter()
            .map(|s| {
                let mut r = vec![num(s.t)];
                for z in [s.s11(), s.s12(), s.s21(), s.s22()] {
                    r.extend(cols(z));
                }
                r.push(num(s.unitarity_defect()));
                r
            })
            .collect();
        write_csv(&cfg.out.join("smatrix.csv"), &header, &rows)?;
    }
    if cfg.format.json() {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            s: [[[f64; 2]; 2]; 2],
            unitarity_defect: f64,
        }
        let rows: Vec<Row> = grid
            .iter()
            .map(|s| Row {
                t: s.t,
                s: [[pair(s.s11()), pair(s.s12())], [pair(s.s21()), pair(s.s22())]],
                unitarity_defect: s.unitarity_defect(),
            })
            .collect();
        write_json(&cfg.out.join("smatrix.json"), &rows)?;
    }
    Ok(Outcome::Success)
}

fn amplitude_rows(amps: &[CoherentAmplitudes]) -> Vec<Vec<String>> {
    amps.iter()
        .map(|a| {
            let mut r = vec![num(a.t)];
            r.extend(cols(a.c1));
            r.extend(cols(a.c2));
            r.extend(cols(a.global_phase));
            r
        })
        .collect()
}

pub fn evolve(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sc = &cfg.scenario;
    let c0 = match sc.z0() {
        Some(z0) => CoherentStateSpec::for_scenario(sc, z0)?.initial_amplitudes(),
        None => (ZERO, ZERO),
    };
    let amps = c_coefficients_grid(sc, c0, &cfg.grid, cfg.tol)?;

    #[derive(Serialize)]
    struct Row {
        t: f64,
        c1: [f64; 2],
        c2: [f64; 2],
        global_phase: [f64; 2],
    }
    #[derive(Serialize)]
    struct Doc {
        c0: [[f64; 2]; 2],
        samples: Vec<Row>,
    }
    let samples = amps
        .iter()
        .map(|a| Row { t: a.t, c1: pair(a.c1), c2: pair(a.c2), global_phase: pair(a.global_phase) })
        .collect();
    write_json(&cfg.out.join("evolve.json"), &Doc { c0: [pair(c0.0), pair(c0.1)], samples })?;
    if cfg.format.csv() {
        let header = ["t", "re_c1", "im_c1", "re_c2", "im_c2", "re_phase", "im_phase"];
        write_csv(&cfg.out.join("evolve.csv"), &header, &amplitude_rows(&amps))?;
    }
    Ok(Outcome::Success)
}

fn closed_law(sc: &CoefficientScenario) -> Option<ClosedCoherent> {
    if sc.has_drive() {
        return None;
    }
    match sc.tag() {
        CaseTag::IsotropicConstant => Some(ClosedCoherent::Isotropic),
        CaseTag::RhoConstant => Some(ClosedCoherent::RhoConstant),
        CaseTag::LogRho => Some(ClosedCoherent::LogRho),
        _ => None,
    }
}

pub fn coherent(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sc = &cfg.scenario;
    let spec = CoherentStateSpec::for_scenario(sc, sc.z0().unwrap_or(C64::from(1.0)))?;
    let law = match cfg.method {
        Method::Numeric => None,
        Method::Auto => closed_law(sc),
        Method::Closed => {
            Some(closed_law(sc).ok_or_else(|| anyhow::anyhow!("no closed coherent law for {:?}", sc.tag()))?)
        }
    };
    let amps = match law {
        Some(kind) => {
            cfg.grid.iter().map(|&t| coherent_evolution_closed(kind, sc, &spec, t)).collect::<Result<Vec<_>, _>>()?
        }
        None => c_coefficients_grid(sc, spec.initial_amplitudes(), &cfg.grid, cfg.tol)?,
    };
    let space = FockSpace::new(cfg.n_max)?;
    let residuals = amps
        .iter()
        .map(|a| ladder_eigenvalue_check(space, &spec, a, LadderKind::Generalized).map(|r| r.residual))
        .collect::<Result<Vec<_>, _>>()?;

    if cfg.format.csv() {
        let header = ["t", "re_c1", "im_c1", "re_c2", "im_c2", "norm2", "eigen_residual"];
        let rows: Vec<Vec<String>> = amps
            .iter()
            .zip(&residuals)
            .map(|(a, &res)| {
                let mut r = vec![num(a.t)];
                r.extend(cols(a.c1));
                r.extend(cols(a.c2));
                r.push(num(a.norm_sqr()));
                r.push(num(res));
                r
            })
            .collect();
        write_csv(&cfg.out.join("coherent.csv"), &header, &rows)?;
    }
    if cfg.format.json() {
        #[derive(Serialize)]
        struct Row {
            t: f64,
            c1: [f64; 2],
            c2: [f64; 2],
            norm2: f64,
            eigen_residual: f64,
        }
        let rows: Vec<Row> = amps
            .iter()
            .zip(&residuals)
            .map(|(a, &res)| Row { t: a.t, c1: pair(a.c1), c2: pair(a.c2), norm2: a.norm_sqr(), eigen_residual: res })
            .collect();
        write_json(&cfg.out.join("coherent.json"), &rows)?;
    }
    Ok(Outcome::Success)
}

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<String>,
}

impl Check {
    fn at_most(name: &'static str, value: f64, threshold: f64) -> Self {
        Check { name, value, threshold, passed: value <= threshold, note: None }
    }

    fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

pub fn verify(cfg: &RunConfig) -> anyhow::Result<Outcome> {
    let sc = &cfg.scenario;
    let t = cfg.t_end;
    let space = FockSpace::new(cfg.n_max)?;
    let mut checks = Vec::new();

    // Guard against trusting an unconverged reference.
    let coarse = brute_force_propagator(space, sc, t, cfg.steps)?;
    let fine = brute_force_propagator(space, sc, t, 2 * cfg.steps)?;
    checks.push(Check::at_most("brute_force_self_convergence", coarse.interior_deviation(&fine, INTERIOR_MARGIN), 1e-6));

    let numeric = smatrix_numeric_grid(sc, &cfg.grid, cfg.tol)?;
    let mut brute_dev: f64 = 0.0;
    let mut defect: f64 = 0.0;
    let mut det_dev: f64 = 0.0;
    for s in &numeric {
        brute_dev = brute_dev.max(s.max_deviation(&brute_force_smatrix(sc, s.t, cfg.steps)?));
        defect = defect.max(s.unitarity_defect());
        let (i11, i22) = sc.diagonal_integrals(s.t);
        det_dev = det_dev.max((s.determinant() - C64::from_polar(1.0, -(i11 + i22))).norm());
    }
    checks.push(Check::at_most("smatrix_vs_brute_force", brute_dev, 1e-6));
    checks.push(Check::at_most("smatrix_unitarity", defect, 1e-8));
    checks.push(Check::at_most("smatrix_determinant", det_dev, 1e-8));

    let mut factors = solve_riccati_numeric(sc, &cfg.grid, cfg.tol)?;
    if cfg.fault == Some(Fault::GammaSign) {
        factors.samples.iter_mut().for_each(|s| s.gamma = -s.gamma);
    }
    let mut recon_dev: f64 = 0.0;
    let mut used = 0;
    for (sample, s) in factors.samples.iter().zip(&numeric) {
        if sample.chart_valid {
            recon_dev = recon_dev.max(smatrix_from_sample(factors.ordering, sample)?.max_deviation(s));
            used += 1;
        }
    }
    let mut recon = Check::at_most("factor_reconstruction", recon_dev, 1e-7);
    if let Some(ts) = factors.first_singular_time {
        recon = recon.note(format!("{used} samples before the chart singularity at t = {ts}"));
    }
    checks.push(recon);

    if closed_block(sc).is_some() {
        let mut dev: f64 = 0.0;
        for s in &numeric {
            dev = dev.max(smatrix_closed(sc, s.t)?.max_deviation(s));
        }
        checks.push(Check::at_most("closed_vs_numeric", dev, 1e-7));
    }

    let u = assemble_u(space, sc, t, cfg.tol)?;
    let states: Vec<FockState> = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.4, -0.3), (-0.2, 0.6)]
        .iter()
        .enumerate()
        .map(|(k, &(a, b))| FockState::coherent(space, C64::new(a, 0.1 * k as f64), C64::new(b, -0.05 * k as f64)))
        .collect();
    let cmp = compare_operators(&u, &fine, &states)?;
    checks.push(Check::at_most("full_operator_fidelity", 1.0 - cmp.min_fidelity(), 1e-6));

    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| format!("{} = {:.3e} > {:.1e}", c.name, c.value, c.threshold))
        .collect();

    #[derive(Serialize)]
    struct Doc<'a> {
        case: String,
        t_end: f64,
        n_max: usize,
        steps: usize,
        passed: bool,
        checks: &'a [Check],
    }
    let doc = Doc {
        case: format!("{:?}", sc.tag()),
        t_end: t,
        n_max: cfg.n_max,
        steps: cfg.steps,
        passed: failed.is_empty(),
        checks: &checks,
    };
    write_json(&cfg.out.join("verify.json"), &doc)?;
    for c in &checks {
        println!("{} {} {:.3e}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value);
    }
    Ok(if failed.is_empty() { Outcome::Success } else { Outcome::Failed(failed) })
}
