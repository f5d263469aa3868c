//! Writes the manifest and the CSV bundle of a finished experiment.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;

use super::Experiment;
use crate::barrier::{HProfile, Region};
use crate::error::{Error, Result};
use crate::grid::{Field2, PlaneGrid};
use crate::pulsating::FrontProfile;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    /// `manifest.json` only.
    Json,
    /// Manifest plus one file per field and trace.
    Bundle,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn alpha_tag(alpha: f64) -> String {
    format!("alpha_{alpha:.6}")
}

fn write_profile(path: &Path, p: &FrontProfile) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "X,Y,u")?;
    for j in 0..p.grid.nrows() {
        for i in 0..p.grid.nx {
            writeln!(w, "{},{},{}", p.grid.x(i), p.grid.y(j), p.at(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Blocks of constant `X` separated by blank lines, for `splot`.
fn write_profile_dat(path: &Path, p: &FrontProfile) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "# X Y u")?;
    for i in 0..p.grid.nx {
        for j in 0..p.grid.nrows() {
            writeln!(w, "{} {} {}", p.grid.x(i), p.grid.y(j), p.at(i, j))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

fn write_field(path: &Path, grid: &PlaneGrid, u: &Field2) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "x,y,u")?;
    for j in 0..u.nrows {
        for i in 0..u.ncols {
            writeln!(w, "{},{},{}", grid.x(i), grid.y(j), u.at(i, j))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_h(path: &Path, h: &HProfile) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "z,h,h_prime,H")?;
    for (&z, &big) in h.z_nodes.iter().zip(&h.big_h_values) {
        if z >= 0.5 * h.theta {
            let (v, d) = h.h(z);
            writeln!(w, "{z},{v},{d},{big}")?;
        } else {
            writeln!(w, "{z},,,{big}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `manifest.json` and, for [`ReportFormat::Bundle`], the CSV files.
/// Returns the paths written.
pub fn emit_report(exp: &Experiment, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    let mut written = Vec::new();
    let manifest = dir.join("manifest.json");
    let mut w = create(&manifest)?;
    serde_json::to_writer_pretty(&mut w, &exp.manifest)?;
    writeln!(w)?;
    w.flush()?;
    written.push(manifest);
    if format == ReportFormat::Json {
        return Ok(written);
    }
    for (alpha, h) in &exp.h {
        let p = dir.join(format!("{}_h.csv", alpha_tag(*alpha)));
        write_h(&p, h)?;
        written.push(p);
    }
    for (case, art) in exp.manifest.cases.iter().zip(&exp.artifacts) {
        let tag = alpha_tag(art.alpha);
        for (speed, prof, v) in [(&case.speed_a, &art.phi, "A"), (&case.speed_b, &art.psi, "B")] {
            if let Some(p) = prof {
                let csv = dir.join(format!("{tag}_profile_{v}.csv"));
                write_profile(&csv, p)?;
                let dat = dir.join(format!("{tag}_profile_{v}.dat"));
                write_profile_dat(&dat, p)?;
                written.extend([csv, dat]);
            }
            if let Some(s) = speed {
                let path = dir.join(format!("{tag}_speed_{v}.json"));
                let frag = json!({"variant": s.variant, "alpha": s.alpha, "c": s.c, "residual": s.residual,
                                  "bracket": s.bracket, "grid": s.grid});
                fs::write(&path, serde_json::to_string_pretty(&frag)?)?;
                written.push(path);
            }
        }
        let Some(grid) = exp.plane else { continue };
        if let Some(bp) = &art.barrier {
            let path = dir.join(format!("{tag}_barrier.csv"));
            let mut w = create(&path)?;
            writeln!(w, "x,y,sub,super,region")?;
            for j in 0..grid.nrows() {
                for i in 0..grid.ncols() {
                    let region = match bp.region_at(i, j) {
                        Region::C => "C",
                        Region::Z => "Z",
                        Region::H => "H",
                    };
                    writeln!(w, "{},{},{},{},{region}", grid.x(i), grid.y(j), bp.sub.at(i, j), bp.sup.at(i, j))?;
                }
            }
            w.flush()?;
            written.push(path);
        }
        for (name, field) in [("steady_sub", &art.steady_sub), ("steady_super", &art.steady_super)] {
            if let Some(u) = field {
                let path = dir.join(format!("{tag}_{name}.csv"));
                write_field(&path, &grid, u)?;
                written.push(path);
            }
        }
        if let Some(trace) = &art.trace {
            let path = dir.join(format!("{tag}_trace.csv"));
            let mut w = create(&path)?;
            writeln!(w, "t,y_level")?;
            for (t, p) in trace.times.iter().zip(&trace.level_positions) {
                // positions are stored along -y
                writeln!(w, "{t},{}", -p)?;
            }
            w.flush()?;
            written.push(path);
        }
        for s in &art.snapshots {
            let path = dir.join(format!("{tag}_snapshot_{:06}.csv", s.step));
            write_field(&path, &grid, &s.field)?;
            written.push(path);
        }
    }
    Ok(written)
}
