//! Data sinks: versioned CSV and JSON lines, both written row by row into
//! per-replicate buffers so that output order never depends on scheduling.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ibbm_core::{MartingaleSeries, Snapshot};
use serde::Serialize;
use serde_json::{Map, Value};

pub const SCHEMA_LINE: &str = "# schema=1";

pub fn snapshot_header(dim: usize) -> String {
    let xs: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    format!("{SCHEMA_LINE}\nreplicate_id,t,epoch,tau,particle_id,{}\n", xs.join(","))
}

pub fn snapshot_csv(snap: &Snapshot<'_>, out: &mut String) {
    let c = snap.cloud;
    for (i, row) in c.rows().enumerate() {
        let _ = write!(out, "{},{},{},{},{}", snap.replicate, c.time(), c.epoch(), c.tau(), i);
        for x in row {
            let _ = write!(out, ",{x}");
        }
        out.push('\n');
    }
}

pub fn snapshot_jsonl(snap: &Snapshot<'_>, out: &mut String) {
    let c = snap.cloud;
    for (i, row) in c.rows().enumerate() {
        let mut obj = Map::new();
        obj.insert("replicate_id".into(), snap.replicate.into());
        obj.insert("t".into(), c.time().into());
        obj.insert("epoch".into(), c.epoch().into());
        obj.insert("tau".into(), c.tau().into());
        obj.insert("particle_id".into(), i.into());
        for (k, x) in row.iter().enumerate() {
            obj.insert(format!("x{}", k + 1), (*x).into());
        }
        out.push_str(&Value::Object(obj).to_string());
        out.push('\n');
    }
}

pub fn series_header(dim: usize) -> String {
    let m: Vec<String> = (1..=dim).map(|k| format!("moment{k}")).collect();
    let v: Vec<String> = (1..=dim).map(|k| format!("v{k}")).collect();
    format!("{SCHEMA_LINE}\nreplicate_id,t,mass,n_t,{},{},capped\n", m.join(","), v.join(","))
}

pub fn series_csv(s: &MartingaleSeries, out: &mut String) {
    let n_t = s.n_t();
    let v_t = s.v_t();
    for i in 0..s.mass.len() {
        let _ = write!(out, "{},{},{},{}", s.replicate_id, s.grid[i], s.mass[i], n_t[i]);
        for x in s.moment[i].iter().chain(&v_t[i]) {
            let _ = write!(out, ",{x}");
        }
        let _ = writeln!(out, ",{}", s.capped);
    }
}

pub fn series_jsonl(s: &MartingaleSeries, out: &mut String) {
    let n_t = s.n_t();
    let v_t = s.v_t();
    for i in 0..s.mass.len() {
        let row = serde_json::json!({
            "replicate_id": s.replicate_id,
            "t": s.grid[i],
            "mass": s.mass[i],
            "n_t": n_t[i],
            "moment": s.moment[i],
            "v": v_t[i],
            "capped": s.capped,
        });
        out.push_str(&row.to_string());
        out.push('\n');
    }
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize + ?Sized>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ibbm_core::{ParticleCloud, SnapshotKind};

    #[test]
    fn csv_rows_match_header() {
        let cloud = ParticleCloud::new(1, 0.5, 2, vec![1.0, 2.0, 3.0, 4.5]).unwrap();
        let snap = Snapshot { replicate: 7, kind: SnapshotKind::Mesh, cloud: &cloud };
        let mut out = String::new();
        snapshot_csv(&snap, &mut out);
        assert_eq!(out, "7,1.5,1,0.5,0,1,2\n7,1.5,1,0.5,1,3,4.5\n");
        let header = snapshot_header(2);
        assert!(header.starts_with("# schema=1\n"));
        assert_eq!(header.lines().nth(1).unwrap().split(',').count(), 7);
    }

    #[test]
    fn jsonl_rows_parse() {
        let cloud = ParticleCloud::new(0, 0.0, 1, vec![-0.25]).unwrap();
        let snap = Snapshot { replicate: 0, kind: SnapshotKind::EpochStart, cloud: &cloud };
        let mut out = String::new();
        snapshot_jsonl(&snap, &mut out);
        let v: Value = serde_json::from_str(out.trim()).unwrap();
        assert_eq!(v["x1"], -0.25);
        assert_eq!(v["particle_id"], 0);
    }
}
