//! Text formats for tabulated functions and the environment record.
//!
//! Every numeric file starts with a `#` provenance line naming the crate
//! version and what the table holds, followed by a CSV header row. Reals are
//! written with 17 significant digits so that a write/read cycle is exact.
//!
//! A p-value function file looks like
//!
//! ```text
//! # powercd version=0.1.0 tail=upper grid=-0.21:0.247:0.0005 source=lrt x_ctrl=...
//! theta,value
//! -2.1000000000000002e-1,3.0190117203880917e-8
//! ...
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::design_aux::BandedPowerCurve;
use crate::error::{Error, Result};
use crate::grid::ParamGrid;
use crate::power::{PowerCurve, PowerPValueFunction};
use crate::pvfn::{ConfidenceCurve, ConfidenceDensity, PValueFunction, Tail};
use crate::{dist, simlab, VERSION};

/// Writes a real so that parsing it back yields the same `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn provenance(fields: &[(&str, String)]) -> String {
    let mut line = format!("# powercd version={VERSION}");
    for (k, v) in fields {
        line.push(' ');
        line.push_str(k);
        line.push('=');
        line.push_str(v);
    }
    line
}

/// Writes a provenance line, a header row and the rows of a numeric table.
pub fn write_table<W: Write>(
    mut w: W,
    provenance_fields: &[(&str, String)],
    columns: &[&str],
    rows: impl IntoIterator<Item = Vec<f64>>,
) -> Result<()> {
    writeln!(w, "{}", provenance(provenance_fields))?;
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt_real).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Creates `path` (and its parent directories) for buffered writing.
pub fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

pub fn write_pvfn<W: Write>(w: W, h: &PValueFunction) -> Result<()> {
    let g = h.grid();
    write_table(
        w,
        &[
            ("tail", h.tail().as_str().to_string()),
            ("grid", g.to_string()),
            // Kept last: the source description may contain spaces.
            ("source", h.source().replace(['\n', '\r'], " ")),
        ],
        &["theta", "value"],
        g.points().into_iter().zip(h.values()).map(|(t, &v)| vec![t, v]),
    )
}

pub fn save_pvfn(path: &Path, h: &PValueFunction) -> Result<()> {
    write_pvfn(create(path)?, h)
}

struct Header {
    tail: Tail,
    grid: ParamGrid,
    source: String,
}

fn parse_header(line: &str) -> Result<Header> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| Error::schema(1, "missing '#' provenance line"))?
        .trim();
    let (before, source) = match body.find("source=") {
        Some(i) => (&body[..i], body[i + "source=".len()..].to_string()),
        None => return Err(Error::schema(1, "provenance line has no source= field")),
    };
    let mut tail = None;
    let mut grid = None;
    for token in before.split_whitespace() {
        if let Some(v) = token.strip_prefix("tail=") {
            tail = Some(v.parse::<Tail>().map_err(|e| Error::schema(1, e.to_string()))?);
        } else if let Some(v) = token.strip_prefix("grid=") {
            grid = Some(v.parse::<ParamGrid>().map_err(|e| Error::schema(1, e.to_string()))?);
        }
    }
    Ok(Header {
        tail: tail.ok_or_else(|| Error::schema(1, "provenance line has no tail= field"))?,
        grid: grid.ok_or_else(|| Error::schema(1, "provenance line has no grid= field"))?,
        source,
    })
}

/// Reads a p-value function written by [`write_pvfn`]. Any structural problem
/// is reported with the offending line number and no partial object.
pub fn read_pvfn<R: Read>(r: R) -> Result<PValueFunction> {
    let mut lines = BufReader::new(r).lines();
    let first = lines.next().ok_or_else(|| Error::schema(1, "empty file"))??;
    let header = parse_header(&first)?;
    let cols = lines
        .next()
        .ok_or_else(|| Error::schema(2, "missing column header"))??;
    if cols.trim() != "theta,value" {
        return Err(Error::schema(
            2,
            format!("expected 'theta,value', found '{}'", cols.trim()),
        ));
    }
    let g = header.grid;
    let mut values = Vec::with_capacity(g.len());
    for (i, line) in lines.enumerate() {
        let ln = i + 3;
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if values.len() == g.len() {
            return Err(Error::schema(ln, format!("more rows than the {} grid points", g.len())));
        }
        let mut parts = line.split(',');
        let (Some(t), Some(v), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::schema(ln, "expected two fields"));
        };
        let t: f64 = t
            .trim()
            .parse()
            .map_err(|_| Error::schema(ln, format!("'{t}' is not a number")))?;
        let v: f64 = v
            .trim()
            .parse()
            .map_err(|_| Error::schema(ln, format!("'{v}' is not a number")))?;
        let want = g.point(values.len());
        if (t - want).abs() > 1e-9 * g.step() {
            return Err(Error::schema(ln, format!("theta {t} does not match grid point {want}")));
        }
        values.push(v);
    }
    if values.len() != g.len() {
        return Err(Error::schema(
            values.len() + 3,
            format!("found {} rows for a grid of {} points", values.len(), g.len()),
        ));
    }
    PValueFunction::new(g, values, header.tail, header.source)
}

pub fn load_pvfn(path: &Path) -> Result<PValueFunction> {
    read_pvfn(File::open(path)?)
}

/// `theta,power` rows.
pub fn write_power_curve<W: Write>(w: W, pc: &PowerCurve, label: &str) -> Result<()> {
    let g = pc.grid();
    write_table(
        w,
        &[
            ("kind", "power_curve".into()),
            ("grid", g.to_string()),
            ("source", label.into()),
        ],
        &["theta", "power"],
        g.points().into_iter().zip(pc.values()).map(|(t, &b)| vec![t, b]),
    )
}

/// `power,value` rows of a power-axis p-value function.
pub fn write_power_pvfn<W: Write>(w: W, hp: &PowerPValueFunction) -> Result<()> {
    write_table(
        w,
        &[("kind", "power_pvalue_function".into()), ("source", hp.source().into())],
        &["power", "value"],
        hp.power().iter().zip(hp.values()).map(|(&b, &v)| vec![b, v]),
    )
}

/// `theta,value` rows of a confidence curve.
pub fn write_confidence_curve<W: Write>(w: W, c: &ConfidenceCurve, label: &str) -> Result<()> {
    let g = c.grid();
    write_table(
        w,
        &[
            ("kind", "confidence_curve".into()),
            ("grid", g.to_string()),
            ("source", label.into()),
        ],
        &["theta", "value"],
        g.points().into_iter().zip(c.values()).map(|(t, &v)| vec![t, v]),
    )
}

/// `theta,value` rows of a confidence density.
pub fn write_density<W: Write>(w: W, d: &ConfidenceDensity, label: &str) -> Result<()> {
    let g = d.grid();
    write_table(
        w,
        &[
            ("kind", "confidence_density".into()),
            ("grid", g.to_string()),
            ("source", label.into()),
        ],
        &["theta", "value"],
        g.points().into_iter().zip(d.values()).map(|(t, &v)| vec![t, v]),
    )
}

/// `theta,center,lower,upper` rows of an extrapolated power band.
pub fn write_band<W: Write>(w: W, band: &BandedPowerCurve, label: &str) -> Result<()> {
    let g = *band.center.grid();
    let (c, l, u) = (band.center.values(), band.lower().values(), band.upper().values());
    write_table(
        w,
        &[
            ("kind", "power_band".into()),
            ("grid", g.to_string()),
            ("source", label.into()),
        ],
        &["theta", "center", "lower", "upper"],
        (0..g.len()).map(|i| vec![g.point(i), c[i], l[i], u[i]]),
    )
}

/// Writes a value as pretty-printed JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Identifies the numeric building blocks a result was computed with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Environment {
    pub version: String,
    pub special_functions: String,
    pub generator_id: String,
    pub target: String,
}

pub fn report_environment() -> Environment {
    Environment {
        version: VERSION.to_string(),
        special_functions: dist::SPECIAL_FUNCTIONS_ID.to_string(),
        generator_id: simlab::GENERATOR_ID.to_string(),
        target: format!("{}-{}", std::env::consts::ARCH, std::env::consts::OS),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binom_model::TwoArmCounts;
    use crate::pvfn::upper_pvfn_lrt;

    fn sample() -> PValueFunction {
        upper_pvfn_lrt(
            &TwoArmCounts::new(38.7, 90.0, 39.96, 90.0).unwrap(),
            &ParamGrid::default_theta(),
        )
        .unwrap()
    }

    fn to_string(h: &PValueFunction) -> String {
        let mut buf = Vec::new();
        write_pvfn(&mut buf, h).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let h = sample();
        let back = read_pvfn(to_string(&h).as_bytes()).unwrap();
        assert_eq!(back.values(), h.values());
        assert_eq!(back.source(), h.source());
        assert_eq!(back.tail(), h.tail());
        assert!(back.grid().same_as(h.grid()));
    }

    #[test]
    fn truncated_file_is_a_schema_error() {
        let text = to_string(&sample());
        let cut: String = text.lines().take(100).map(|l| format!("{l}\n")).collect();
        match read_pvfn(cut.as_bytes()) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 101),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn grid_mismatch_is_a_schema_error() {
        let text = to_string(&sample()).replacen("grid=-0.21:0.247:0.0005", "grid=-0.21:0.3:0.0005", 1);
        assert!(matches!(read_pvfn(text.as_bytes()), Err(Error::Schema { .. })));
        let text = to_string(&sample()).replacen("grid=-0.21:0.247:0.0005", "grid=-0.2:0.257:0.0005", 1);
        assert!(matches!(read_pvfn(text.as_bytes()), Err(Error::Schema { line: 3, .. })));
    }

    #[test]
    fn bad_number_reports_line() {
        let text = to_string(&sample());
        let mut lines: Vec<String> = text.lines().map(String::from).collect();
        lines[7] = "oops,1".into();
        match read_pvfn(lines.join("\n").as_bytes()) {
            Err(Error::Schema { line, .. }) => assert_eq!(line, 8),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn environment_is_stable() {
        assert_eq!(report_environment(), report_environment());
        assert_eq!(report_environment().version, VERSION);
    }
}
