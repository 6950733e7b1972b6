//! Snapshot files, trajectory archives and CSV tables.
//!
//! Snapshot layout (little-endian): `b"NSRF"`, `u32` version (1), `u32` dims, one `u32` N per
//! axis, `f64` half-width L, `u32` components, then the samples component by component in
//! row-major axis order.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid};
use crate::inequalities::Verification;
use crate::regularity::RegularityMap;
use crate::solver::EnergyAudit;
use crate::solver::{EnergyMonitor, Provenance, Trajectory};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

pub const MAGIC: &[u8; 4] = b"NSRF";
pub const VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.toml";

pub fn encode_field(f: &Field) -> Vec<u8> {
    let g = f.grid();
    let mut out = Vec::with_capacity(32 + 8 * f.data().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(g.dims() as u32).to_le_bytes());
    for _ in 0..g.dims() {
        out.extend_from_slice(&(g.n() as u32).to_le_bytes());
    }
    out.extend_from_slice(&g.half_width().to_le_bytes());
    out.extend_from_slice(&(f.components() as u32).to_le_bytes());
    for v in f.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::Format("truncated snapshot".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode_field(buf: &[u8]) -> Result<Field> {
    let mut c = Cursor { buf, pos: 0 };
    if c.take(4)? != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = c.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dims = c.u32()? as usize;
    if !(dims == 2 || dims == 3) {
        return Err(Error::Format(format!("unsupported dimension {dims}")));
    }
    let ns: Vec<u32> = (0..dims).map(|_| c.u32()).collect::<Result<_>>()?;
    if ns.iter().any(|&n| n != ns[0]) {
        return Err(Error::Format("anisotropic grids are not supported".into()));
    }
    let l = c.f64()?;
    let components = c.u32()? as usize;
    let grid = Grid::new(dims, ns[0] as usize, l).map_err(|e| Error::Format(e.to_string()))?;
    let count = components
        .checked_mul(grid.len())
        .ok_or_else(|| Error::Format("size overflow".into()))?;
    let raw = c.take(count * 8)?;
    if c.pos != buf.len() {
        return Err(Error::Format("trailing bytes".into()));
    }
    let data = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    Field::from_vec(grid, components, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_field(path: impl AsRef<Path>, f: &Field) -> Result<()> {
    fs::write(path, encode_field(f))?;
    Ok(())
}

pub fn read_field(path: impl AsRef<Path>) -> Result<Field> {
    let mut buf = Vec::new();
    fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_field(&buf)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub label: String,
    /// Paper result exercised by the producing preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<String>,
    pub config_hash: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub dims: usize,
    pub n: usize,
    pub half_width: f64,
    pub times: Vec<f64>,
    pub files: Vec<String>,
    /// Full configuration text of the run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<String>,
}

pub fn snapshot_name(i: usize) -> String {
    format!("snapshot_{i:05}.nsrf")
}

/// Writes every snapshot plus `manifest.toml` into `dir` (created if needed).
pub fn write_trajectory(dir: impl AsRef<Path>, traj: &Trajectory, result: Option<&str>, config: Option<&str>) -> Result<Manifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let g = traj.grid();
    let files: Vec<String> = (0..traj.len()).map(snapshot_name).collect();
    for (name, f) in files.iter().zip(traj.snapshots()) {
        write_field(dir.join(name), f)?;
    }
    let m = Manifest {
        label: traj.provenance.label.clone(),
        result: result.map(str::to_owned),
        config_hash: traj.provenance.config_hash.clone(),
        seed: traj.provenance.seed,
        dims: g.dims(),
        n: g.n(),
        half_width: g.half_width(),
        times: traj.times().to_vec(),
        files,
        config: config.map(str::to_owned),
    };
    let text = toml::to_string(&m).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(dir.join(MANIFEST), text)?;
    Ok(m)
}

pub fn read_manifest(dir: impl AsRef<Path>) -> Result<Manifest> {
    let text = fs::read_to_string(dir.as_ref().join(MANIFEST))?;
    toml::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))
}

pub fn read_trajectory(dir: impl AsRef<Path>) -> Result<Trajectory> {
    let dir = dir.as_ref();
    let m = read_manifest(dir)?;
    if m.times.len() != m.files.len() {
        return Err(Error::Format("manifest lists unequal numbers of times and files".into()));
    }
    let grid = Grid::new(m.dims, m.n, m.half_width).map_err(|e| Error::Format(e.to_string()))?;
    let snapshots = m.files.iter().map(|f| read_field(dir.join(f))).collect::<Result<Vec<_>>>()?;
    for snap in &snapshots {
        snap.grid().same_as(&grid).map_err(|_| Error::Format("snapshot grid differs from manifest".into()))?;
    }
    let mut traj = Trajectory::from_parts(grid, m.times, snapshots)?;
    traj.provenance = Provenance { label: m.label, config_hash: m.config_hash, seed: m.seed };
    Ok(traj)
}

/// A CSV table: a `# config-hash:` comment line, a header row, the records, then optional
/// `# key = value` summary lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub config_hash: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
}

impl Table {
    pub fn new(config_hash: &str, header: &[&str]) -> Self {
        Table { config_hash: config_hash.to_owned(), header: header.iter().map(|s| s.to_string()).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    pub fn summary(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_owned(), value.to_string()));
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = format!("# config-hash: {}\n", self.config_hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(&self.header).map_err(|e| Error::Format(e.to_string()))?;
            for r in &self.rows {
                w.write_record(r).map_err(|e| Error::Format(e.to_string()))?;
            }
            w.flush()?;
        }
        for (k, v) in &self.summary {
            writeln!(out, "# {k} = {v}")?;
        }
        Ok(out)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }
}

fn s(x: f64) -> String {
    x.to_string()
}

pub fn regularity_table(map: &RegularityMap, config_hash: &str) -> Table {
    let mut t = Table::new(config_hash, &["t", "x1", "x2", "x3", "r", "score", "pass"]);
    for p in &map.points {
        for (r, score) in p.scan.radii.iter().zip(&p.scan.scores) {
            t.push(vec![s(p.t), s(p.x[0]), s(p.x[1]), s(p.x[2]), s(*r), s(*score), (*score < map.eps_star).to_string()]);
        }
    }
    t.summary("eps_star", map.eps_star);
    t.summary("alpha_hat", map.alpha_hat.map_or("none".to_owned(), s));
    t
}

pub fn energy_table(audit: &EnergyAudit, config_hash: &str) -> Table {
    let mut t = Table::new(config_hash, &["t", "energy", "dissipation", "residual"]);
    for r in &audit.rows {
        t.push(vec![s(r.time), s(r.energy), s(r.dissipation), s(r.residual)]);
    }
    t.summary("initial_energy", audit.initial_energy);
    t.summary("max_violation", audit.max_violation);
    t
}

pub fn monitor_table(m: &EnergyMonitor, config_hash: &str) -> Table {
    let mut t = Table::new(config_hash, &["t", "energy", "k_cumulative"]);
    for &(time, e, k) in &m.rows {
        t.push(vec![s(time), s(e), s(k)]);
    }
    t.summary("max_ratio", m.max_ratio);
    t
}

/// Rows `param-set id, mu, seed, ratio` for several verification runs.
pub fn verification_table(runs: &[Verification], config_hash: &str) -> Table {
    let mut t = Table::new(config_hash, &["param_set", "mu", "seed", "ratio"]);
    for (id, v) in runs.iter().enumerate() {
        for smp in &v.samples {
            t.push(vec![id.to_string(), s(smp.mu), smp.seed.to_string(), s(smp.ratio)]);
        }
    }
    for (id, v) in runs.iter().enumerate() {
        t.summary(&format!("param_set_{id}"), &v.label);
        for r in &v.per_mu {
            t.summary(&format!("param_set_{id}_max_ratio_mu_{}", r.mu), r.max_ratio);
        }
    }
    t
}

/// `dir/name`, creating `dir`.
pub fn output_path(dir: impl AsRef<Path>, name: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir.as_ref())?;
    Ok(dir.as_ref().join(name))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_roundtrip_is_exact() {
        let g = Grid::new(3, 8, 2.5).unwrap();
        let f = Field::vector(g, |x| [x[0].sin(), x[1] * x[2], -x[0]]);
        let bytes = encode_field(&f);
        assert_eq!(&bytes[..4], b"NSRF");
        assert_eq!(bytes.len(), 4 + 4 + 4 + 3 * 4 + 8 + 4 + 3 * 512 * 8);
        let back = decode_field(&bytes).unwrap();
        assert_eq!(back.data(), f.data());
        back.grid().same_as(&g).unwrap();
    }

    #[test]
    fn corrupt_snapshots_are_rejected() {
        let g = Grid::square(8).unwrap();
        let mut bytes = encode_field(&Field::zeros(g, 1));
        assert!(decode_field(&bytes[..bytes.len() - 1]).is_err());
        bytes.push(0);
        assert!(decode_field(&bytes).is_err());
        bytes[0] = b'X';
        assert!(decode_field(&bytes).is_err());
    }

    #[test]
    fn archive_roundtrip() {
        let g = Grid::cube(8).unwrap();
        let f = Field::vector(g, |x| [x[1].cos(), 0.0, 0.0]);
        let mut traj = Trajectory::from_parts(g, vec![0.0, 0.5], vec![f.clone(), f.scaled(0.5)]).unwrap();
        traj.provenance.label = "demo".into();
        traj.provenance.seed = Some(7);
        let dir = tempfile::tempdir().unwrap();
        write_trajectory(dir.path(), &traj, Some("prop2.1"), None).unwrap();
        let back = read_trajectory(dir.path()).unwrap();
        assert_eq!(back.times(), traj.times());
        assert_eq!(back.snapshots()[1].data(), traj.snapshots()[1].data());
        assert_eq!(back.provenance, traj.provenance);
        assert_eq!(read_manifest(dir.path()).unwrap().result.as_deref(), Some("prop2.1"));
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new("abc", &["a", "b"]);
        t.push(vec!["1".into(), "2.5".into()]);
        t.summary("alpha_hat", 0.25);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "# config-hash: abc\na,b\n1,2.5\n# alpha_hat = 0.25\n");
    }
}
