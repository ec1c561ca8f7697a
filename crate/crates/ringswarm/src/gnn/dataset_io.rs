//! Binary dataset files: one record per labeled graph, little-endian.
//!
//! Layout:
//!
//! ```text
//! magic   "RGDS"            4 bytes
//! version u16               = 1
//! n_a     u16
//! n_g     u16
//! g_max   u16
//! count   u32
//! records count x [ n_a * 2 f64 agent xy | n_g * 2 f64 goal xy | n_a u16 label ]
//! ```

use std::io::{Read, Write};
use std::path::Path;

use crate::error::GnnError;
use crate::geometry::Point2;

use super::graph::{build_graph, LabeledGraph};

const DATASET_MAGIC: &[u8; 4] = b"RGDS";
const DATASET_VERSION: u16 = 1;

pub fn save_dataset<W: Write>(
    dataset: &[LabeledGraph],
    g_max: usize,
    mut w: W,
) -> std::io::Result<()> {
    let first = dataset.first().expect("dataset must be nonempty");
    let n_a = first.graph.n_agents();
    let n_g = first.graph.n_real_goals();
    w.write_all(DATASET_MAGIC)?;
    w.write_all(&DATASET_VERSION.to_le_bytes())?;
    w.write_all(&(n_a as u16).to_le_bytes())?;
    w.write_all(&(n_g as u16).to_le_bytes())?;
    w.write_all(&(g_max as u16).to_le_bytes())?;
    w.write_all(&(dataset.len() as u32).to_le_bytes())?;
    for lg in dataset {
        for p in lg.graph.agent_positions.iter().chain(&lg.graph.goal_positions) {
            w.write_all(&p.x.to_le_bytes())?;
            w.write_all(&p.y.to_le_bytes())?;
        }
        for &label in &lg.label {
            w.write_all(&(label as u16).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn save_dataset_file(
    dataset: &[LabeledGraph],
    g_max: usize,
    path: &Path,
) -> std::io::Result<()> {
    let file = std::fs::File::create(path)?;
    save_dataset(dataset, g_max, std::io::BufWriter::new(file))
}

pub fn load_dataset<R: Read>(mut r: R) -> Result<(Vec<LabeledGraph>, usize), GnnError> {
    fn bad(msg: &str) -> GnnError {
        GnnError::BadDatasetFile(msg.into())
    }
    let mut buf = Vec::new();
    r.read_to_end(&mut buf).map_err(|e| bad(&e.to_string()))?;
    if buf.len() < 16 || &buf[0..4] != DATASET_MAGIC {
        return Err(bad("missing magic"));
    }
    let u16_at = |off: usize| u16::from_le_bytes([buf[off], buf[off + 1]]) as usize;
    if u16_at(4) != DATASET_VERSION as usize {
        return Err(bad("unsupported version"));
    }
    let n_a = u16_at(6);
    let n_g = u16_at(8);
    let g_max = u16_at(10);
    let count = u32::from_le_bytes(buf[12..16].try_into().unwrap()) as usize;
    let record = (n_a + n_g) * 16 + n_a * 2;
    if buf.len() != 16 + count * record {
        return Err(bad("size does not match header"));
    }
    let mut off = 16;
    let f64_at = |buf: &[u8], off: &mut usize| {
        let v = f64::from_le_bytes(buf[*off..*off + 8].try_into().unwrap());
        *off += 8;
        v
    };
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let agents: Vec<Point2> = (0..n_a)
            .map(|_| {
                let x = f64_at(&buf, &mut off);
                let y = f64_at(&buf, &mut off);
                Point2::new(x, y)
            })
            .collect();
        let goals: Vec<Point2> = (0..n_g)
            .map(|_| {
                let x = f64_at(&buf, &mut off);
                let y = f64_at(&buf, &mut off);
                Point2::new(x, y)
            })
            .collect();
        let label: Vec<usize> = (0..n_a)
            .map(|_| {
                let v = u16::from_le_bytes([buf[off], buf[off + 1]]) as usize;
                off += 2;
                v
            })
            .collect();
        if label.iter().any(|&g| g >= n_g) {
            return Err(bad("label out of range"));
        }
        let graph = build_graph(&agents, &goals, g_max)
            .map_err(|e| bad(&format!("record rebuild failed: {e}")))?;
        out.push(LabeledGraph { graph, label });
    }
    Ok((out, g_max))
}

pub fn load_dataset_file(path: &Path) -> Result<(Vec<LabeledGraph>, usize), GnnError> {
    let file = std::fs::File::open(path)
        .map_err(|e| GnnError::BadDatasetFile(format!("{}: {e}", path.display())))?;
    load_dataset(std::io::BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gnn::graph::gen_dataset;

    #[test]
    fn roundtrip() {
        let dataset = gen_dataset(5, 10, 7, 10, 42).unwrap();
        let mut buf = Vec::new();
        save_dataset(&dataset, 10, &mut buf).unwrap();
        let (back, g_max) = load_dataset(buf.as_slice()).unwrap();
        assert_eq!(g_max, 10);
        assert_eq!(back, dataset);
    }

    #[test]
    fn corrupt_rejected() {
        let dataset = gen_dataset(3, 5, 2, 10, 1).unwrap();
        let mut buf = Vec::new();
        save_dataset(&dataset, 10, &mut buf).unwrap();
        assert!(load_dataset(&buf[..buf.len() - 1]).is_err());
    }
}
