//! Scenario files (TOML) and tabulated coefficient CSVs.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use super::{CoefficientScenario, ComplexDrive, Drive, PhaseFn, Profile, Table};
use crate::numeric::spline::Spline;
use crate::{Error, Result, C64};

pub const TABLE_HEADER: [&str; 10] = ["t", "w11", "w22", "re_w12", "im_w12", "re_F1", "im_F1", "re_F2", "im_F2", "B"];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    scenario: RawScenario,
    diagonal: Option<RawDiagonal>,
    drive: Option<RawDrive>,
    coherent: Option<RawCoherent>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    case: String,
    t_max: Option<f64>,
    eta0: Option<RawProfile>,
    w0: Option<f64>,
    phi0: Option<f64>,
    theta0: Option<f64>,
    nu: Option<f64>,
    rho0: Option<f64>,
    t0: Option<f64>,
    theta_alpha0: Option<f64>,
    theta_beta0: Option<f64>,
    phase: Option<Vec<f64>>,
    phase_csv: Option<String>,
    w11: Option<f64>,
    w22: Option<f64>,
    w12_re: Option<f64>,
    w12_im: Option<f64>,
    alpha_re: Option<f64>,
    alpha_im: Option<f64>,
    beta_re: Option<f64>,
    beta_im: Option<f64>,
    w12_0: Option<f64>,
    theta_v0: Option<f64>,
    theta_u0: Option<f64>,
    csv: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum RawProfile {
    Number(f64),
    Sinusoid {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
}

impl From<RawProfile> for Profile {
    fn from(r: RawProfile) -> Self {
        match r {
            RawProfile::Number(c) => Profile::Constant(c),
            RawProfile::Sinusoid { offset, amplitude, frequency, phase } => {
                Profile::Sinusoid { offset, amplitude, frequency, phase }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDiagonal {
    w11: Option<RawProfile>,
    w22: Option<RawProfile>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawComplexDrive {
    #[serde(default)]
    re: f64,
    #[serde(default)]
    im: f64,
    #[serde(default)]
    frequency: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDrive {
    #[serde(rename = "F1")]
    f1: Option<RawComplexDrive>,
    #[serde(rename = "F2")]
    f2: Option<RawComplexDrive>,
    #[serde(rename = "B")]
    b: Option<RawProfile>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct RawCoherent {
    #[serde(default)]
    Z0_re: f64,
    #[serde(default)]
    Z0_im: f64,
}

fn need<T: Copy>(value: Option<T>, key: &str, case: &str) -> Result<T> {
    value.ok_or_else(|| Error::Parse(format!("case '{case}' requires key '{key}'")))
}

fn number(value: Option<RawProfile>, key: &str, case: &str) -> Result<f64> {
    match need(value, key, case)? {
        RawProfile::Number(x) => Ok(x),
        _ => Err(Error::Parse(format!("key '{key}' must be a number for case '{case}'"))),
    }
}

/// Reads a scenario file; relative CSV paths resolve against its directory.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<CoefficientScenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&text, &base)
}

pub fn parse_scenario(text: &str, base_dir: &Path) -> Result<CoefficientScenario> {
    let raw: RawFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let sc = raw.scenario;
    let case = sc.case.as_str();
    let resolve = |p: &str| -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() { p.to_path_buf() } else { base_dir.join(p) }
    };
    let mut scenario = match case {
        "constant_phase" => {
            CoefficientScenario::constant_phase(need(sc.eta0, "eta0", case)?.into(), sc.phi0.unwrap_or(0.0))?
        }
        "linear_phase" => CoefficientScenario::linear_phase(
            number(sc.eta0, "eta0", case)?,
            need(sc.w0, "w0", case)?,
            sc.phi0.unwrap_or(0.0),
        )?,
        "general_phase" => {
            let phase = match (&sc.phase, &sc.phase_csv) {
                (Some(c), None) => PhaseFn::Polynomial(c.clone()),
                (None, Some(p)) => PhaseFn::Tabulated(read_phase_csv(&resolve(p))?),
                _ => return Err(Error::Parse("general_phase needs exactly one of 'phase' or 'phase_csv'".into())),
            };
            let t_max = match (&phase, sc.t_max) {
                (_, Some(t)) => t,
                (PhaseFn::Tabulated(s), None) => s.x_max(),
                (PhaseFn::Polynomial(_), None) => {
                    return Err(Error::Parse("general_phase with a polynomial phase requires 't_max'".into()))
                }
            };
            CoefficientScenario::general_phase(number(sc.eta0, "eta0", case)?, need(sc.w0, "w0", case)?, phase, t_max)?
        }
        "all_constant" => CoefficientScenario::all_constant(
            need(sc.w11, "w11", case)?,
            need(sc.w22, "w22", case)?,
            C64::new(sc.w12_re.unwrap_or(0.0), sc.w12_im.unwrap_or(0.0)),
        )?,
        "isotropic_constant" => CoefficientScenario::isotropic_constant(
            C64::new(need(sc.alpha_re, "alpha_re", case)?, sc.alpha_im.unwrap_or(0.0)),
            C64::new(need(sc.beta_re, "beta_re", case)?, sc.beta_im.unwrap_or(0.0)),
        )?,
        "rho_constant" => CoefficientScenario::rho_constant(
            need(sc.rho0, "rho0", case)?,
            number(sc.eta0, "eta0", case)?,
            need(sc.w0, "w0", case)?,
            sc.theta_alpha0.unwrap_or(0.0),
            sc.theta_beta0.unwrap_or(0.0),
        )?,
        "log_rho" => CoefficientScenario::log_rho(
            need(sc.t0, "t0", case)?,
            number(sc.eta0, "eta0", case)?,
            need(sc.w0, "w0", case)?,
            sc.theta_alpha0.unwrap_or(0.0),
            sc.theta_beta0.unwrap_or(0.0),
        )?,
        "quadratic_phase" => {
            CoefficientScenario::quadratic_phase(number(sc.eta0, "eta0", case)?, need(sc.theta0, "theta0", case)?)?
        }
        "fresnel_norm" => CoefficientScenario::fresnel_norm(
            need(sc.w12_0, "w12_0", case)?,
            need(sc.nu, "nu", case)?,
            sc.theta_v0.unwrap_or(0.0),
            sc.theta_u0.unwrap_or(0.0),
        )?,
        "tabulated" => {
            let path = resolve(sc.csv.as_deref().ok_or_else(|| Error::Parse("case 'tabulated' requires key 'csv'".into()))?);
            let file = std::fs::File::open(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            CoefficientScenario::tabulated(parse_table(file)?)
        }
        other => return Err(Error::Parse(format!("unknown case '{other}'"))),
    };
    if let Some(d) = raw.diagonal {
        scenario = scenario.with_diagonal(
            d.w11.map(Profile::from).unwrap_or_default(),
            d.w22.map(Profile::from).unwrap_or_default(),
        )?;
    }
    if let Some(d) = raw.drive {
        let cd = |r: Option<RawComplexDrive>| r.map(|r| ComplexDrive::rotating(C64::new(r.re, r.im), r.frequency));
        scenario = scenario.with_drive(Drive { f1: cd(d.f1), f2: cd(d.f2), b: d.b.map(Profile::from).unwrap_or_default() })?;
    }
    if let Some(t_max) = sc.t_max {
        if case != "general_phase" {
            scenario = scenario.with_domain(t_max)?;
        }
    }
    if let Some(c) = raw.coherent {
        scenario = scenario.with_z0(C64::new(c.Z0_re, c.Z0_im));
    }
    Ok(scenario)
}

fn uniform_spacing(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(Error::InsufficientSamples { needed: 2 });
    }
    if t[0].abs() > 1e-12 {
        return Err(Error::Parse("tabulated data must start at t = 0".into()));
    }
    let h = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
    for (k, &tk) in t.iter().enumerate() {
        if (tk - k as f64 * h).abs() > 1e-9 * h.max(1.0) {
            return Err(Error::Parse(format!("non-uniform time grid at row {k}")));
        }
    }
    Ok(h)
}

/// Reads a coefficient table with header `t,w11,w22,re_w12,im_w12,re_F1,im_F1,re_F2,im_F2,B`.
pub fn parse_table<R: std::io::Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != TABLE_HEADER {
        return Err(Error::Parse(format!("expected header {}", TABLE_HEADER.join(","))));
    }
    let mut columns: HashMap<&str, Vec<f64>> = TABLE_HEADER.iter().map(|&k| (k, Vec::new())).collect();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        for (k, field) in TABLE_HEADER.iter().zip(record.iter()) {
            let v: f64 = field.parse().map_err(|_| Error::Parse(format!("row {row}: bad number '{field}'")))?;
            columns.get_mut(k).expect("known column").push(v);
        }
    }
    let h = uniform_spacing(&columns["t"])?;
    let spline = |k: &str| Spline::new(0.0, h, columns[k].clone());
    Ok(Table {
        w11: spline("w11")?,
        w22: spline("w22")?,
        re_w12: spline("re_w12")?,
        im_w12: spline("im_w12")?,
        re_f1: spline("re_F1")?,
        im_f1: spline("im_F1")?,
        re_f2: spline("re_F2")?,
        im_f2: spline("im_F2")?,
        b: spline("B")?,
    })
}

fn read_phase_csv(path: &Path) -> Result<Spline> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != ["t", "phi"] {
        return Err(Error::Parse("phase table header must be 't,phi'".into()));
    }
    let (mut t, mut phi) = (Vec::new(), Vec::new());
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse(e.to_string()))?;
        let parse = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
        t.push(parse(&record[0])?);
        phi.push(parse(&record[1])?);
    }
    Spline::new(0.0, uniform_spacing(&t)?, phi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::CaseTag;

    #[test]
    fn parses_constant_phase_with_diagonal_and_drive() {
        let text = r#"
            [scenario]
            case = "constant_phase"
            eta0 = 1.0
            phi0 = 0.25

            [diagonal]
            w11 = 0.5
            w22 = { amplitude = 0.2, frequency = 3.0 }

            [drive]
            F1 = { re = 0.1, frequency = 1.0 }
            B = 0.3

            [coherent]
            Z0_re = 0.5
        "#;
        let s = parse_scenario(text, Path::new(".")).unwrap();
        assert_eq!(s.tag(), CaseTag::ConstantPhase);
        let c = s.eval_coeffs(0.5).unwrap();
        assert_eq!(c.w11, 0.5);
        assert!((c.w22 - 0.2 * 1.5f64.sin()).abs() < 1e-15);
        assert!((c.f1 - C64::from_polar(0.1, 0.5)).norm() < 1e-15);
        assert_eq!(c.b, 0.3);
        assert_eq!(s.z0(), Some(C64::new(0.5, 0.0)));
    }

    #[test]
    fn rejects_missing_and_unknown_keys() {
        let missing = "[scenario]\ncase = \"linear_phase\"\neta0 = 1.0\n";
        assert!(matches!(parse_scenario(missing, Path::new(".")), Err(Error::Parse(_))));
        let unknown = "[scenario]\ncase = \"all_constant\"\nw11 = 1.0\nw22 = 0.0\nbogus = 2\n";
        assert!(parse_scenario(unknown, Path::new(".")).is_err());
    }

    #[test]
    fn table_lookup_at_nodes() {
        let mut text = String::from("t,w11,w22,re_w12,im_w12,re_F1,im_F1,re_F2,im_F2,B\n");
        for k in 0..=20 {
            let t = 0.05 * k as f64;
            text += &format!("{t},{},{},{},{},0,0,0,0,0\n", 1.0 + t * t, 0.5, t.sin(), 0.1 * t);
        }
        let table = parse_table(text.as_bytes()).unwrap();
        let s = CoefficientScenario::tabulated(table);
        let c = s.eval_coeffs(0.35).unwrap();
        assert!((c.w11 - (1.0 + 0.35 * 0.35)).abs() < 1e-14);
        assert!((c.w12.re - 0.35f64.sin()).abs() < 1e-14);
        assert!(s.eval_coeffs(1.2).is_err());
    }

    #[test]
    fn table_header_is_enforced() {
        assert!(parse_table("t,w11\n0,1\n".as_bytes()).is_err());
    }
}
