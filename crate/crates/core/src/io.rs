//! File formats: the `x,f,fp` profile table, the `x,residual` table and the
//! versioned JSON documents.
//!
//! Every float is written with 17 significant digits so files round-trip
//! exactly.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::baselines::NonoptimalityReport;
use crate::energy::EnergyBreakdown;
use crate::error::{Error, Result};
use crate::euler_lagrange::ELResidualReport;
use crate::geometry::{ProblemParams, Profile};
use crate::optimizer::{LagrangeEstimate, OptimizationConfig, OptimizationResult, Termination};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative tolerance on node positions when reading a profile.
const NODE_TOL: f64 = 1e-9;

/// `{:.16e}`: 17 significant digits.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_profile_csv<W: Write>(profile: &Profile, mut w: W) -> io::Result<()> {
    writeln!(w, "x,f,fp")?;
    for (i, (f, fp)) in profile.values().iter().zip(profile.slopes()).enumerate() {
        writeln!(
            w,
            "{},{},{}",
            format_float(profile.node(i)),
            format_float(*f),
            format_float(*fp)
        )?;
    }
    Ok(())
}

pub fn profile_csv_string(profile: &Profile) -> String {
    let mut buf = Vec::new();
    write_profile_csv(profile, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii")
}

/// Reads an `x,f,fp` table on uniformly spaced nodes over `[-a, a]`.
///
/// The file carries no `gamma` or target area: `gamma` is supplied by the
/// caller and the target area is set to the profile's own area. Errors name
/// the 1-based line of the offending record.
pub fn read_profile_csv<R: Read>(reader: R, gamma: f64) -> Result<Profile> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| Error::Csv {
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    if header.iter().collect::<Vec<_>>() != ["x", "f", "fp"] {
        return Err(Error::Csv {
            row: 1,
            message: format!(
                "expected header x,f,fp, found {}",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }

    let mut rows: Vec<(usize, [f64; 3])> = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::Csv {
                row,
                message: e.to_string(),
            }
        })?;
        let row = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::Csv {
                row,
                message: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let mut vals = [0.0; 3];
        for (k, field) in record.iter().enumerate() {
            vals[k] = field
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Csv {
                    row,
                    message: format!("not a finite number: {field:?}"),
                })?;
        }
        rows.push((row, vals));
    }

    if rows.len() < 2 {
        return Err(Error::Csv {
            row: rows.last().map_or(1, |r| r.0),
            message: format!("need at least 2 nodes, found {}", rows.len()),
        });
    }
    let (first_row, first) = rows[0];
    let a = -first[0];
    if !(a > 0.0) {
        return Err(Error::Csv {
            row: first_row,
            message: format!("first node must be -a < 0, found {}", first[0]),
        });
    }
    let n = rows.len() - 1;
    let width = 2.0 * a / n as f64;
    for (i, (row, vals)) in rows.iter().enumerate() {
        let expected = -a + i as f64 * width;
        if (vals[0] - expected).abs() > NODE_TOL * a {
            return Err(Error::Csv {
                row: *row,
                message: format!(
                    "nodes must be uniform on [-{a}, {a}]: expected x = {expected}, found {}",
                    vals[0]
                ),
            });
        }
    }

    let values: Vec<f64> = rows.iter().map(|r| r.1[1]).collect();
    let slopes: Vec<f64> = rows.iter().map(|r| r.1[2]).collect();
    let provisional = ProblemParams::new(a, gamma, 0.0)?;
    let profile = Profile::new(provisional, values, slopes)?;
    let area = profile.area();
    profile.with_params(provisional.with_area(area))
}

pub fn read_profile_csv_path(path: &std::path::Path, gamma: f64) -> Result<Profile> {
    let file = std::fs::File::open(path)?;
    read_profile_csv(io::BufReader::new(file), gamma)
}

pub fn write_residual_csv<W: Write>(report: &ELResidualReport, mut w: W) -> io::Result<()> {
    writeln!(w, "x,residual")?;
    for (x, r) in report.sample_points.iter().zip(&report.graph_residuals) {
        writeln!(w, "{},{}", format_float(*x), format_float(*r))?;
    }
    Ok(())
}

/// Pretty printer that writes floats as `{:.16e}`.
struct FullPrecision<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, writer: &mut W $(, $arg: $ty)*) -> io::Result<()> {
                self.0.$name(writer $(, $arg)*)
            }
        )*
    };
}

impl Formatter for FullPrecision<'_> {
    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }

    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// Pretty JSON with 17 significant digits per float and a trailing newline.
/// Non-finite floats become `null`.
pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("documents serialize");
    buf.push(b'\n');
    String::from_utf8(buf).expect("json is utf-8")
}

/// `result.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub schema_version: u32,
    pub params: ProblemParams,
    pub n_elements: usize,
    pub config: OptimizationConfig,
    pub lambda: f64,
    pub converged: bool,
    pub termination: Termination,
    pub diagnostic: Option<String>,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub energy: EnergyBreakdown,
    pub history: Vec<(f64, f64)>,
    /// Profile table file, relative to the document.
    pub profile: String,
}

impl ResultDocument {
    pub fn new(
        result: &OptimizationResult,
        config: &OptimizationConfig,
        profile_file: &str,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            params: *result.profile.params(),
            n_elements: result.profile.n_elements(),
            config: config.clone(),
            lambda: result.lambda,
            converged: result.converged,
            termination: result.termination,
            diagnostic: result.diagnostic.clone(),
            iterations: result.iterations,
            gradient_norm: result.final_gradient_norm(),
            energy: result.energy,
            history: result.history.clone(),
            profile: profile_file.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaSource {
    Given,
    Recovered,
}

/// `residual.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualDocument {
    pub schema_version: u32,
    pub profile: String,
    pub gamma: f64,
    pub n_elements: usize,
    pub admissible: bool,
    pub lambda_source: LambdaSource,
    /// Present when `λ` was recovered.
    pub lambda_estimate: Option<LagrangeEstimate>,
    pub report: ELResidualReport,
}

/// `compare.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub report: NonoptimalityReport,
}

impl CompareDocument {
    pub fn new(report: NonoptimalityReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            report,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::seed_profile;

    fn seed() -> Profile {
        seed_profile(&ProblemParams::new(1.0, 0.1, 0.5).unwrap(), 8).unwrap()
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let p = seed();
        let text = profile_csv_string(&p);
        assert!(text.starts_with("x,f,fp\n-1.0000000000000000e0,"));
        let back = read_profile_csv(text.as_bytes(), 0.1).unwrap();
        assert_eq!(back.values(), p.values());
        assert_eq!(back.slopes(), p.slopes());
        assert_eq!(back.params().a, 1.0);
        assert_eq!(back.params().target_area, p.area());
    }

    #[test]
    fn csv_errors_name_the_row() {
        let bad_header = "x,y,z\n-1,0,0\n1,0,0\n";
        assert!(matches!(
            read_profile_csv(bad_header.as_bytes(), 0.1),
            Err(Error::Csv { row: 1, .. })
        ));
        let bad_number = "x,f,fp\n-1,0,0\n0,abc,0\n1,0,0\n";
        match read_profile_csv(bad_number.as_bytes(), 0.1) {
            Err(Error::Csv { row, message }) => {
                assert_eq!(row, 3);
                assert!(message.contains("abc"));
            }
            other => panic!("{other:?}"),
        }
        let short_row = "x,f,fp\n-1,0,0\n0,0\n1,0,0\n";
        assert!(matches!(
            read_profile_csv(short_row.as_bytes(), 0.1),
            Err(Error::Csv { row: 3, .. })
        ));
        let uneven = "x,f,fp\n-1,0,0\n0.2,0,0\n1,0,0\n";
        assert!(matches!(
            read_profile_csv(uneven.as_bytes(), 0.1),
            Err(Error::Csv { row: 3, .. })
        ));
        let single = "x,f,fp\n-1,0,0\n";
        assert!(read_profile_csv(single.as_bytes(), 0.1).is_err());
    }

    #[test]
    fn json_floats_have_17_digits() {
        let s = to_json_string(&vec![0.1, 1.0 / 3.0, f64::NAN]);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("3.3333333333333331e-1"), "{s}");
        assert!(s.contains("null"));
        let back: Vec<Option<f64>> = serde_json::from_str(&s).unwrap();
        assert_eq!(back[0], Some(0.1));
        assert_eq!(back[1], Some(1.0 / 3.0));
    }

    #[test]
    fn residual_csv_header() {
        let report = crate::euler_lagrange::graph_el_residual(
            &Profile::flat(ProblemParams::new(1.0, 0.1, 0.0).unwrap(), 16).unwrap(),
            0.0,
            16,
        )
        .unwrap();
        let mut buf = Vec::new();
        write_residual_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 17);
        assert!(text.starts_with("x,residual\n"));
    }
}
