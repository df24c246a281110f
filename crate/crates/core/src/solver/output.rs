use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DiagnosticRow, ModelConfig};
use crate::error::Result;
use crate::noise::PathMetadata;
use crate::spectrum::ScalarSpectrum;

pub const CSV_HEADER: &str = "t,energy,vnorm2,enstrophy,z_l4_4,u_l4";

/// Writes the diagnostics stream. Floats use the shortest round-trip
/// representation, so output is byte-stable.
pub fn write_diagnostics_csv<W: Write>(rows: &[DiagnosticRow], mut w: W) -> Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{},{},{}", r.t, r.energy, r.vnorm2, r.enstrophy, r.z_l4_4, r.u_l4)?;
    }
    Ok(())
}

/// `checkpoint.json` next to a binary spectrum file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub model: ModelConfig,
    pub path: PathMetadata,
    pub t: f64,
    pub step: i64,
    /// File name of the spectrum, relative to the checkpoint directory.
    pub spectrum: String,
}

/// Writes `checkpoint.json` and `<name>.bin` into `dir`.
pub fn write_checkpoint(dir: &Path, ck: &Checkpoint, u: &ScalarSpectrum) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    u.write_binary(BufWriter::new(File::create(dir.join(&ck.spectrum))?))?;
    let json = serde_json::to_string_pretty(ck)?;
    std::fs::write(dir.join("checkpoint.json"), json + "\n")?;
    Ok(())
}

pub fn read_checkpoint(dir: &Path) -> Result<(Checkpoint, ScalarSpectrum)> {
    let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(dir.join("checkpoint.json"))?)?;
    let u = ScalarSpectrum::read_binary(BufReader::new(File::open(dir.join(&ck.spectrum))?))?;
    Ok((ck, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::OperatorVariant;
    use crate::solver::Model;

    #[test]
    fn csv_header_and_rows() {
        let rows = [DiagnosticRow { t: 0.5, energy: 1.25, ..DiagnosticRow::default() }];
        let mut out = Vec::new();
        write_diagnostics_csv(&rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n0.5,1.25,0,0,0,0\n"));
    }

    #[test]
    fn checkpoint_round_trip() {
        let dir = std::env::temp_dir().join(format!("sns-ck-{}", std::process::id()));
        let m = Model::new(ModelConfig::quiet(5, 1.0, OperatorVariant::DeltaOnly)).unwrap();
        let u = m.random_initial(1, 0, 1.0, 1.0);
        let ck = Checkpoint { model: m.config().clone(), path: m.path().metadata(), t: 1.5, step: 300, spectrum: "u.bin".into() };
        write_checkpoint(&dir, &ck, &u).unwrap();
        let (back, v) = read_checkpoint(&dir).unwrap();
        assert_eq!(back, ck);
        assert_eq!(v, u);
        std::fs::remove_dir_all(dir).ok();
    }
}
