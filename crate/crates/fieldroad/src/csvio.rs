//! Deterministic CSV and metadata emission.
//!
//! Data files carry no timestamps and format every float with 17
//! significant digits, so identical configs regenerate byte-identical
//! files; run metadata (which may carry timings) goes to separate JSON.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::contour::ContourPolyline;
use crate::geometry::SweepEntry;
use crate::grid::ScalarField;
use crate::params::{Evaluation, SpaceTimePoint};

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("failed writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row width {got} does not match schema width {want}")]
    SchemaMismatch { got: usize, want: usize },
}

/// One CSV cell.
#[derive(Debug, Clone)]
pub enum Field {
    Float(f64),
    Int(usize),
    Str(String),
}

/// 17-significant-digit float formatting; round-trips every f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Field {
    fn render(&self, out: &mut String) {
        match self {
            Field::Float(x) => out.push_str(&fmt_f64(*x)),
            Field::Int(n) => {
                let _ = write!(out, "{n}");
            }
            Field::Str(s) => out.push_str(s),
        }
    }
}

/// Renders a header plus rows to a string; every row must match the
/// header width.
pub fn render_csv<I>(header: &str, rows: I) -> Result<String, CsvError>
where
    I: IntoIterator<Item = Vec<Field>>,
{
    let want = header.split(',').count();
    let mut body = String::with_capacity(4096);
    body.push_str(header);
    body.push('\n');
    for row in rows {
        if row.len() != want {
            return Err(CsvError::SchemaMismatch { got: row.len(), want });
        }
        for (k, field) in row.iter().enumerate() {
            if k > 0 {
                body.push(',');
            }
            field.render(&mut body);
        }
        body.push('\n');
    }
    Ok(body)
}

/// Writes a header plus rows to a file.
pub fn emit_csv<P, I>(path: P, header: &str, rows: I) -> Result<(), CsvError>
where
    P: AsRef<Path>,
    I: IntoIterator<Item = Vec<Field>>,
{
    let path = path.as_ref();
    let body = render_csv(header, rows)?;
    let io = |source| CsvError::Io { path: path.display().to_string(), source };
    let mut file = fs::File::create(path).map_err(io)?;
    file.write_all(body.as_bytes())
        .map_err(|source| CsvError::Io { path: path.display().to_string(), source })
}

pub const EVAL_HEADER: &str = "x,y,t,s_star,phi_star,J,v,regime";
pub const CONTOUR_HEADER: &str = "param_name,param_value,polyline_id,vertex_index,x,y";
pub const FIELD_HEADER: &str = "x,y,value";
pub const CONE_HEADER: &str = "x,y,t,J_gamma0,J_gamma_alpha,J_alpha,w_alpha";
pub const METRIC_HEADER: &str = "param,value,metric";

/// Point evaluations in the `eval` schema.
pub fn write_eval_csv<P: AsRef<Path>>(
    path: P,
    rows: &[(SpaceTimePoint, Evaluation)],
) -> Result<(), CsvError> {
    emit_csv(
        path,
        EVAL_HEADER,
        rows.iter().map(|(p, ev)| {
            vec![
                Field::Float(p.x),
                Field::Float(p.y),
                Field::Float(p.t),
                Field::Float(ev.s_star),
                Field::Float(ev.phi_star),
                Field::Float(ev.payoff),
                Field::Float(ev.value),
                Field::Str(ev.regime.to_string()),
            ]
        }),
    )
}

fn contour_rows<'a>(
    param_name: &'a str,
    param_value: f64,
    polylines: &'a [ContourPolyline],
    id_offset: usize,
) -> impl Iterator<Item = Vec<Field>> + 'a {
    polylines.iter().enumerate().flat_map(move |(pid, poly)| {
        poly.vertices.iter().enumerate().map(move |(vid, v)| {
            vec![
                Field::Str(param_name.to_string()),
                Field::Float(param_value),
                Field::Int(id_offset + pid),
                Field::Int(vid),
                Field::Float(v[0]),
                Field::Float(v[1]),
            ]
        })
    })
}

/// Contours of a single extraction in the sweep schema.
pub fn write_contour_csv<P: AsRef<Path>>(
    path: P,
    param_name: &str,
    param_value: f64,
    polylines: &[ContourPolyline],
) -> Result<(), CsvError> {
    emit_csv(
        path,
        CONTOUR_HEADER,
        contour_rows(param_name, param_value, polylines, 0),
    )
}

/// Full sweep output: rows grouped by sweep value then polyline id, with
/// vertex indices ascending.
pub fn write_sweep_csv<P: AsRef<Path>>(path: P, entries: &[SweepEntry]) -> Result<(), CsvError> {
    let mut rows = Vec::new();
    let mut id_offset = 0usize;
    for entry in entries {
        rows.extend(contour_rows(
            entry.param_name,
            entry.param_value,
            &entry.contours,
            id_offset,
        ));
        id_offset += entry.contours.len();
    }
    emit_csv(path, CONTOUR_HEADER, rows)
}

/// Field dump in the `x,y,value` schema, row-major.
pub fn write_field_csv<P: AsRef<Path>>(path: P, field: &ScalarField) -> Result<(), CsvError> {
    let spec = field.spec;
    emit_csv(
        path,
        FIELD_HEADER,
        (0..spec.ny).flat_map(|j| {
            (0..spec.nx).map(move |i| {
                vec![
                    Field::Float(spec.x(i)),
                    Field::Float(spec.y(j)),
                    Field::Float(field.get(i, j)),
                ]
            })
        }),
    )
}

/// (param, value, metric) rows, e.g. eps-gap or delta-residual tables.
pub fn write_metric_csv<P: AsRef<Path>>(
    path: P,
    rows: &[(&str, f64, f64)],
) -> Result<(), CsvError> {
    emit_csv(
        path,
        METRIC_HEADER,
        rows.iter().map(|(name, value, metric)| {
            vec![
                Field::Str(name.to_string()),
                Field::Float(*value),
                Field::Float(*metric),
            ]
        }),
    )
}

/// Serializes run metadata as pretty JSON next to a data file.
pub fn write_metadata_json<P: AsRef<Path>, T: serde::Serialize>(
    path: P,
    metadata: &T,
) -> Result<(), CsvError> {
    let path = path.as_ref();
    let body = serde_json::to_string_pretty(metadata).expect("metadata serializes");
    fs::write(path, body).map_err(|source| CsvError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for &x in &[0.1, -1.0 / 3.0, 1e-300, 2.0f64.sqrt(), 12345.678901234567] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn header_only_file_for_empty_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        emit_csv(&path, EVAL_HEADER, Vec::<Vec<Field>>::new()).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert_eq!(body, format!("{EVAL_HEADER}\n"));
    }

    #[test]
    fn schema_width_is_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        let err = emit_csv(&path, "a,b", vec![vec![Field::Int(1)]]).unwrap_err();
        assert!(matches!(err, CsvError::SchemaMismatch { got: 1, want: 2 }));
    }

    #[test]
    fn eval_row_shape() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eval.csv");
        let p = SpaceTimePoint::new(1.0, 1.0, 1.0).unwrap();
        let ev = crate::minimize::solve_minimizer(&crate::Params::new(1.0, 1.0, 1.0).unwrap(), p)
            .unwrap();
        write_eval_csv(&path, &[(p, ev)]).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        let mut lines = body.lines();
        assert_eq!(lines.next().unwrap(), EVAL_HEADER);
        let row = lines.next().unwrap();
        assert!(row.ends_with("Rectilinear"));
        assert_eq!(row.split(',').count(), 8);
    }
}
