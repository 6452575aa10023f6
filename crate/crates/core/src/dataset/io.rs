//! JSON-Lines dataset files.
//!
//! Line 1 is a header object:
//! `{"format":"pidm-dataset","version":1,"task":"four_room","provenance":"planner","trajectories":50}`.
//! Every following line holds one trajectory:
//! `{"task":"four_room","seed":17,"observations":[[...],...],"actions":[[ax,ay],...]}`.
//! Floats are written in shortest round-trip form, so save/load is lossless.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, Provenance, Trajectory};
use crate::gridworld::TaskName;
use crate::{Error, Result};

pub const FORMAT_NAME: &str = "pidm-dataset";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    task: TaskName,
    provenance: Provenance,
    trajectories: usize,
}

pub fn write_to(ds: &Dataset, mut w: impl Write) -> Result<()> {
    let header = Header {
        format: FORMAT_NAME.to_string(),
        version: FORMAT_VERSION,
        task: ds.task,
        provenance: ds.provenance,
        trajectories: ds.len(),
    };
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for t in &ds.trajectories {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save(ds: &Dataset, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_to(ds, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn read_from(r: impl Read, source: &str) -> Result<Dataset> {
    let mut lines = BufReader::new(r).lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::parse(source, 1, "empty file"))??;
    let header: Header =
        serde_json::from_str(&first).map_err(|e| Error::parse(source, 1, format!("bad header: {e}")))?;
    if header.format != FORMAT_NAME || header.version != FORMAT_VERSION {
        return Err(Error::parse(
            source,
            1,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    let mut trajectories = Vec::with_capacity(header.trajectories);
    let mut line_no = 1;
    for line in lines {
        line_no += 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: Trajectory =
            serde_json::from_str(&line).map_err(|e| Error::parse(source, line_no, e.to_string()))?;
        t.validate()
            .map_err(|e| Error::parse(source, line_no, e.to_string()))?;
        trajectories.push(t);
    }
    if trajectories.len() != header.trajectories {
        return Err(Error::parse(
            source,
            line_no,
            format!(
                "header declares {} trajectories, file holds {}",
                header.trajectories,
                trajectories.len()
            ),
        ));
    }
    Dataset::new(header.task, header.provenance, trajectories)
        .map_err(|e| Error::parse(source, 1, e.to_string()))
}

pub fn load(path: &Path) -> Result<Dataset> {
    read_from(File::open(path)?, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::dataset;
    use super::*;

    #[test]
    fn roundtrip_is_lossless() {
        let mut ds = dataset(5);
        ds.trajectories[0].observations[0][0] = 0.1 + 0.2;
        ds.trajectories[0].actions[0][1] = -1.0 / 3.0;
        let mut buf = Vec::new();
        write_to(&ds, &mut buf).unwrap();
        let back = read_from(&buf[..], "mem").unwrap();
        assert_eq!(back, ds);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let ds = dataset(3);
        let mut buf = Vec::new();
        write_to(&ds, &mut buf).unwrap();
        let cut = &buf[..buf.len() - 40];
        let err = read_from(cut, "cut.jsonl").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    }

    #[test]
    fn missing_trajectory_lines_are_reported() {
        let ds = dataset(3);
        let mut buf = Vec::new();
        write_to(&ds, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let short: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_from(short.as_bytes(), "s"), Err(Error::Parse { .. })));
    }

    #[test]
    fn matches_hand_written_fixture() {
        let text = include_str!("../../tests/fixtures/tiny_dataset.jsonl");
        let ds = read_from(text.as_bytes(), "fixture").unwrap();
        assert_eq!(ds.task, TaskName::FourRoom);
        assert_eq!(ds.provenance, Provenance::Planner);
        assert_eq!(ds.len(), 1);
        let t = &ds.trajectories[0];
        assert_eq!(t.seed, 42);
        assert_eq!(t.actions, vec![[1.0, 0.0], [0.5, -0.25]]);
        assert_eq!(t.observations[2][0], 0.175);
        assert_eq!(t.observations[0][13], 0.0);

        let mut buf = Vec::new();
        write_to(&ds, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), text);
    }
}
