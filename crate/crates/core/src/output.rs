//! Snapshot, trace and table writers.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::material::StateVector;
use crate::mesh::Mesh;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Vtk,
    Csv,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Vtk => "vtk",
            Format::Csv => "csv",
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "vtk" => Ok(Format::Vtk),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Config(format!("unknown output format '{s}'"))),
        }
    }
}

/// Cell-wise pressure (and optionally velocity) at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub time: f64,
    pub pressure: Vec<f64>,
    pub velocity: Option<Vec<[f64; 2]>>,
}

impl FieldSnapshot {
    /// Values of `p_h` (and `v_h`) at cell centroids.
    pub fn from_state<T: Scalar>(time: T, state: &StateVector<T>, with_velocity: bool) -> Self {
        let n = state.p.space().num_cells();
        let c = [T::lit(1.0 / 3.0); 2];
        let mut buf = [T::zero(); 2];
        let pressure = (0..n)
            .map(|k| {
                state.p.eval_ref(k, c, &mut buf);
                buf[0].as_f64()
            })
            .collect();
        let velocity = with_velocity.then(|| {
            (0..n)
                .map(|k| {
                    state.v.eval_ref(k, c, &mut buf);
                    [buf[0].as_f64(), buf[1].as_f64()]
                })
                .collect()
        });
        Self {
            time: time.as_f64(),
            pressure,
            velocity,
        }
    }
}

/// Legacy ASCII VTK unstructured grid with cell data.
pub fn write_vtk<T: Scalar, W: Write>(
    mesh: &Mesh<T>,
    snap: &FieldSnapshot,
    mut out: W,
) -> Result<()> {
    if snap.pressure.len() != mesh.num_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} cells",
            snap.pressure.len(),
            mesh.num_cells()
        )));
    }
    writeln!(out, "# vtk DataFile Version 3.0")?;
    writeln!(out, "pressure at t = {}", snap.time)?;
    writeln!(out, "ASCII")?;
    writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(out, "POINTS {} double", mesh.num_vertices())?;
    for v in mesh.vertices() {
        writeln!(out, "{} {} 0", v[0].as_f64(), v[1].as_f64())?;
    }
    writeln!(out, "CELLS {} {}", mesh.num_cells(), 4 * mesh.num_cells())?;
    for c in mesh.cells() {
        writeln!(out, "3 {} {} {}", c[0], c[1], c[2])?;
    }
    writeln!(out, "CELL_TYPES {}", mesh.num_cells())?;
    for _ in 0..mesh.num_cells() {
        writeln!(out, "5")?;
    }
    writeln!(out, "CELL_DATA {}", mesh.num_cells())?;
    writeln!(out, "SCALARS pressure double 1")?;
    writeln!(out, "LOOKUP_TABLE default")?;
    for p in &snap.pressure {
        writeln!(out, "{p}")?;
    }
    if let Some(vel) = &snap.velocity {
        writeln!(out, "VECTORS velocity double")?;
        for v in vel {
            writeln!(out, "{} {} 0", v[0], v[1])?;
        }
    }
    Ok(())
}

/// `cell,x,y,pressure[,vx,vy]` with one row per cell.
pub fn write_snapshot_csv<T: Scalar, W: Write>(
    mesh: &Mesh<T>,
    snap: &FieldSnapshot,
    out: W,
) -> Result<()> {
    if snap.pressure.len() != mesh.num_cells() {
        return Err(Error::DimensionMismatch(format!(
            "{} values for {} cells",
            snap.pressure.len(),
            mesh.num_cells()
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["cell", "x", "y", "pressure"];
    if snap.velocity.is_some() {
        header.extend(["vx", "vy"]);
    }
    w.write_record(&header).map_err(csv_err)?;
    for (k, p) in snap.pressure.iter().enumerate() {
        let c = mesh.cell_centroid(k);
        let mut row = vec![
            k.to_string(),
            c[0].as_f64().to_string(),
            c[1].as_f64().to_string(),
            p.to_string(),
        ];
        if let Some(v) = &snap.velocity {
            row.push(v[k][0].to_string());
            row.push(v[k][1].to_string());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the pressure column written by [`write_snapshot_csv`].
pub fn read_snapshot_csv<R: Read>(input: R) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_reader(input);
    let col = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .position(|h| h == "pressure")
        .ok_or_else(|| Error::Config("CSV has no pressure column".into()))?;
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err)?;
            rec.get(col).and_then(|s| s.parse().ok()).ok_or_else(|| {
                Error::Config(format!(
                    "bad pressure value in row {:?}",
                    rec.position().map(|p| p.line())
                ))
            })
        })
        .collect()
}

/// Writes `snap` to `dir/<stem>.<ext>` and returns the path.
pub fn write_snapshot<T: Scalar>(
    mesh: &Mesh<T>,
    snap: &FieldSnapshot,
    format: Format,
    dir: &Path,
    stem: &str,
) -> Result<std::path::PathBuf> {
    let path = dir.join(format!("{stem}.{}", format.extension()));
    let out = BufWriter::new(File::create(&path)?);
    match format {
        Format::Vtk => write_vtk(mesh, snap, out)?,
        Format::Csv => write_snapshot_csv(mesh, snap, out)?,
    }
    Ok(path)
}

/// Writes a header and numeric rows as CSV.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::DimensionMismatch(format!(
                "row of {} values for {} columns",
                row.len(),
                header.len()
            )));
        }
        w.write_record(row.iter().map(|v| v.to_string()))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Config(format!("CSV: {e}"))
}
