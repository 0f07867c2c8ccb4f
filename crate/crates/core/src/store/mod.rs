//! Versioned persistence: binary tables for hit tables and solutions, JSON
//! for skill models, and a content-addressed cache directory.
//!
//! Binary files are little-endian: an 8-byte magic, the format version, the
//! artifact kind, the content hash of the inputs, the writer, the table
//! dimensions, the payload, and a SHA-256 of everything before it.

mod codec;

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use codec::{Decoder, Encoder};

use crate::board::{ActionGrid, BoardGeometry, Target, NUM_LABELS};
use crate::error::{Error, Result};
use crate::hits::{build_hash, HitTable};
use crate::leg::{BlockIndex, LegPolicy, LegValues};
use crate::ns::{solve_ns, NsSolution, SolveConfig};
use crate::par::Exec;
use crate::skill::{Quadrature, SkillModel};
use crate::turn::NUM_SLOTS;
use crate::zsg::{solve_equilibrium, ZsgSolution};

pub const MAGIC: &[u8; 8] = b"DARTSTBL";
pub const FORMAT_VERSION: u32 = 1;

pub const HITS_EXT: &str = "hits.bin";
pub const NS_EXT: &str = "nssol.bin";
pub const ZSG_EXT: &str = "zsgsol.bin";
pub const SKILL_EXT: &str = "dartskill.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArtifactKind {
    Hits,
    NsSol,
    ZsgSol,
}

impl ArtifactKind {
    pub fn name(self) -> &'static str {
        match self {
            ArtifactKind::Hits => "hits",
            ArtifactKind::NsSol => "nssol",
            ArtifactKind::ZsgSol => "zsgsol",
        }
    }

    fn from_name(s: &str) -> Result<Self> {
        [ArtifactKind::Hits, ArtifactKind::NsSol, ArtifactKind::ZsgSol]
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Corrupt(format!("unknown artifact kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub format_version: u32,
    pub kind: ArtifactKind,
    /// Hash of the inputs the artifact was computed from.
    pub content_hash: String,
    /// Name and version of the writer.
    pub created_by: String,
    pub dims: Vec<u64>,
}

impl ArtifactHeader {
    fn new(kind: ArtifactKind, content_hash: &str, dims: Vec<u64>) -> Self {
        ArtifactHeader {
            format_version: FORMAT_VERSION,
            kind,
            content_hash: content_hash.to_string(),
            created_by: concat!("darts-core ", env!("CARGO_PKG_VERSION")).to_string(),
            dims,
        }
    }

    fn write<W: std::io::Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        enc.bytes(MAGIC)?;
        enc.u32(self.format_version)?;
        enc.str(self.kind.name())?;
        enc.str(&self.content_hash)?;
        enc.str(&self.created_by)?;
        enc.u32(self.dims.len() as u32)?;
        for &d in &self.dims {
            enc.u64(d)?;
        }
        Ok(())
    }

    fn read(dec: &mut Decoder) -> Result<Self> {
        if dec.bytes(8)? != MAGIC {
            return Err(Error::Corrupt("not a darts table file".into()));
        }
        let format_version = dec.u32()?;
        if format_version != FORMAT_VERSION {
            return Err(Error::Version { kind: "table", found: format_version, expected: FORMAT_VERSION });
        }
        let kind = ArtifactKind::from_name(&dec.str()?)?;
        let content_hash = dec.str()?;
        let created_by = dec.str()?;
        let n = dec.u32()? as usize;
        if n > 16 {
            return Err(Error::Corrupt(format!("{n} dimensions")));
        }
        let dims = (0..n).map(|_| dec.u64()).collect::<Result<_>>()?;
        Ok(ArtifactHeader { format_version, kind, content_hash, created_by, dims })
    }

    fn expect(&self, kind: ArtifactKind, ndims: usize) -> Result<()> {
        if self.kind != kind {
            return Err(Error::WrongKind { expected: kind.name().into(), found: self.kind.name().into() });
        }
        if self.dims.len() != ndims {
            return Err(Error::Corrupt(format!("expected {ndims} dimensions, found {}", self.dims.len())));
        }
        Ok(())
    }
}

/// Reads only the header, without verifying the checksum.
pub fn read_header(path: &Path) -> Result<ArtifactHeader> {
    let data = fs::read(path)?;
    ArtifactHeader::read(&mut Decoder::unchecked(&data))
}

fn create(path: &Path) -> Result<Encoder<BufWriter<fs::File>>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(Encoder::new(BufWriter::new(fs::File::create(path)?)))
}

/// Checks magic and version before the checksum so that files from other
/// format versions report a version error.
fn open(data: &[u8]) -> Result<(ArtifactHeader, Decoder<'_>)> {
    ArtifactHeader::read(&mut Decoder::unchecked(data))?;
    let mut dec = Decoder::new(data)?;
    let header = ArtifactHeader::read(&mut dec)?;
    Ok((header, dec))
}

fn dim(d: u64, what: &str, max: u64) -> Result<usize> {
    if d > max {
        return Err(Error::Corrupt(format!("{what} {d} is out of range")));
    }
    Ok(d as usize)
}

pub fn save_hits(path: &Path, hits: &HitTable) -> Result<()> {
    let mut enc = create(path)?;
    ArtifactHeader::new(ArtifactKind::Hits, &hits.source_hash, vec![hits.len() as u64, NUM_LABELS as u64])
        .write(&mut enc)?;
    enc.f64(hits.grid().cell_size())?;
    for t in hits.grid().targets() {
        enc.f64(t.x)?;
        enc.f64(t.y)?;
    }
    enc.f64s(hits.raw())?;
    enc.finish()
}

pub fn load_hits(path: &Path) -> Result<HitTable> {
    let data = fs::read(path)?;
    let (h, mut dec) = open(&data)?;
    h.expect(ArtifactKind::Hits, 2)?;
    if h.dims[1] != NUM_LABELS as u64 {
        return Err(Error::Corrupt(format!("hit table has {} labels", h.dims[1])));
    }
    let n = dim(h.dims[0], "action count", 1 << 24)?;
    let cell = dec.f64()?;
    let xy = dec.f64s(2 * n)?;
    let targets = xy.chunks_exact(2).map(|c| Target::new(c[0], c[1])).collect();
    let probs = dec.f64s(n * NUM_LABELS)?;
    dec.finish()?;
    HitTable::from_parts(ActionGrid::from_targets(cell, targets), probs, h.content_hash)
}

fn write_ns_body<W: std::io::Write>(enc: &mut Encoder<W>, sol: &NsSolution) -> Result<()> {
    enc.u32(sol.start_score)?;
    enc.str(&sol.hits_hash)?;
    for row in &sol.values {
        enc.f64s(row)?;
    }
    for row in &sol.policy {
        enc.u32s(row)?;
    }
    Ok(())
}

fn read_ns_body(dec: &mut Decoder) -> Result<NsSolution> {
    let start_score = dec.u32()?;
    if !(2..=100_000).contains(&start_score) {
        return Err(Error::Corrupt(format!("start score {start_score}")));
    }
    let hits_hash = dec.str()?;
    let rows = start_score as usize + 1;
    let values = rows_of(dec.f64s(rows * NUM_SLOTS)?);
    let policy = rows_of(dec.u32s(rows * NUM_SLOTS)?);
    Ok(NsSolution { start_score, values, policy, hits_hash })
}

fn rows_of<T: Copy + Default>(flat: Vec<T>) -> Vec<[T; NUM_SLOTS]> {
    flat.chunks_exact(NUM_SLOTS).map(|c| c.try_into().expect("row length")).collect()
}

pub fn save_ns(path: &Path, sol: &NsSolution) -> Result<()> {
    let mut enc = create(path)?;
    ArtifactHeader::new(ArtifactKind::NsSol, &sol.hits_hash, vec![sol.start_score as u64, NUM_SLOTS as u64])
        .write(&mut enc)?;
    write_ns_body(&mut enc, sol)?;
    enc.finish()
}

pub fn load_ns(path: &Path) -> Result<NsSolution> {
    let data = fs::read(path)?;
    let (h, mut dec) = open(&data)?;
    h.expect(ArtifactKind::NsSol, 2)?;
    let sol = read_ns_body(&mut dec)?;
    dec.finish()?;
    if sol.start_score as u64 != h.dims[0] || sol.hits_hash != h.content_hash {
        return Err(Error::Corrupt("solution body disagrees with its header".into()));
    }
    Ok(sol)
}

/// Hash identifying an equilibrium by its two hit tables.
pub fn zsg_hash(hits_a_hash: &str, hits_b_hash: &str) -> String {
    let mut h = Sha256::new();
    h.update(hits_a_hash.as_bytes());
    h.update([0]);
    h.update(hits_b_hash.as_bytes());
    hex::encode(h.finalize())
}

pub fn save_zsg(path: &Path, sol: &ZsgSolution) -> Result<()> {
    let start = sol.start();
    let mut enc = create(path)?;
    ArtifactHeader::new(
        ArtifactKind::ZsgSol,
        &zsg_hash(&sol.hits_a_hash, &sol.hits_b_hash),
        vec![start as u64, NUM_SLOTS as u64],
    )
    .write(&mut enc)?;
    enc.f64(sol.rel_tol)?;
    enc.str(&sol.hits_a_hash)?;
    enc.str(&sol.hits_b_hash)?;
    for rows in [&sol.values.a_turn, &sol.values.b_turn] {
        for r in rows {
            enc.f64s(r)?;
        }
    }
    for rows in [&sol.policy.a_turn, &sol.policy.b_turn] {
        for r in rows {
            enc.u32s(r)?;
        }
    }
    enc.f64s(&sol.lower)?;
    enc.f64s(&sol.upper)?;
    enc.u32s(&sol.alternations)?;
    write_ns_body(&mut enc, &sol.ns_a)?;
    write_ns_body(&mut enc, &sol.ns_b)?;
    enc.finish()
}

pub fn load_zsg(path: &Path) -> Result<ZsgSolution> {
    let data = fs::read(path)?;
    let (h, mut dec) = open(&data)?;
    h.expect(ArtifactKind::ZsgSol, 2)?;
    let start = dim(h.dims[0], "start score", 100_000)? as u32;
    if start < 2 {
        return Err(Error::Corrupt(format!("start score {start}")));
    }
    let index = BlockIndex::new(start);
    let n = index.len();
    let rel_tol = dec.f64()?;
    let hits_a_hash = dec.str()?;
    let hits_b_hash = dec.str()?;
    let values =
        LegValues { index, a_turn: rows_of(dec.f64s(n * NUM_SLOTS)?), b_turn: rows_of(dec.f64s(n * NUM_SLOTS)?) };
    let policy =
        LegPolicy { index, a_turn: rows_of(dec.u32s(n * NUM_SLOTS)?), b_turn: rows_of(dec.u32s(n * NUM_SLOTS)?) };
    let lower = dec.f64s(n)?;
    let upper = dec.f64s(n)?;
    let alternations = dec.u32s(n)?;
    let ns_a = read_ns_body(&mut dec)?;
    let ns_b = read_ns_body(&mut dec)?;
    dec.finish()?;
    if zsg_hash(&hits_a_hash, &hits_b_hash) != h.content_hash {
        return Err(Error::Corrupt("solution body disagrees with its header".into()));
    }
    Ok(ZsgSolution {
        values,
        policy,
        lower,
        upper,
        alternations,
        history: None,
        ns_a,
        ns_b,
        hits_a_hash,
        hits_b_hash,
        rel_tol,
    })
}

pub fn save_skill(path: &Path, skill: &SkillModel) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, skill.to_json())?;
    Ok(())
}

pub fn load_skill(path: &Path) -> Result<SkillModel> {
    SkillModel::from_json(&fs::read_to_string(path)?)
}

/// Content-addressed artifact cache. Files are named by the hash of their
/// inputs; a file whose header disagrees is recomputed.
#[derive(Debug)]
pub struct Cache {
    dir: PathBuf,
    computed: AtomicU64,
}

impl Cache {
    pub const ENV: &'static str = "DARTS_CACHE_DIR";

    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Cache { dir: dir.into(), computed: AtomicU64::new(0) }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var_os(Self::ENV).filter(|v| !v.is_empty()).map(Cache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Artifacts computed (rather than loaded) by this cache.
    pub fn computations(&self) -> u64 {
        self.computed.load(Ordering::Relaxed)
    }

    fn get_or_compute<T>(
        &self,
        key: &str,
        ext: &str,
        load: impl FnOnce(&Path) -> Result<T>,
        accept: impl FnOnce(&T) -> bool,
        compute: impl FnOnce() -> Result<T>,
        save: impl FnOnce(&Path, &T) -> Result<()>,
    ) -> Result<T> {
        let path = self.dir.join(format!("{key}.{ext}"));
        if path.exists() {
            match load(&path) {
                Ok(v) if accept(&v) => return Ok(v),
                Ok(_) => log::warn!("{}: content hash mismatch, recomputing", path.display()),
                Err(e) => log::warn!("{}: {e}, recomputing", path.display()),
            }
        }
        self.computed.fetch_add(1, Ordering::Relaxed);
        let v = compute()?;
        save(&path, &v)?;
        Ok(v)
    }

    pub fn hits(
        &self,
        geom: &BoardGeometry,
        skill: &SkillModel,
        grid: &ActionGrid,
        quad: Quadrature,
        exec: Exec,
    ) -> Result<HitTable> {
        let key = build_hash(geom, skill, grid, quad);
        self.get_or_compute(
            &key,
            HITS_EXT,
            load_hits,
            |h| h.source_hash == key,
            || Ok(HitTable::build(geom, skill, grid, quad, exec)),
            save_hits,
        )
    }

    pub fn ns(&self, hits: &HitTable, cfg: &SolveConfig) -> Result<NsSolution> {
        let hash = hits.content_hash();
        let key = config_key(&[&hash], cfg);
        self.get_or_compute(
            &key,
            NS_EXT,
            load_ns,
            |s| s.hits_hash == hash && s.start_score == cfg.start_score,
            || solve_ns(hits, cfg),
            save_ns,
        )
    }

    pub fn zsg(&self, hits_a: &HitTable, hits_b: &HitTable, cfg: &SolveConfig) -> Result<ZsgSolution> {
        let (ha, hb) = (hits_a.content_hash(), hits_b.content_hash());
        let key = config_key(&[&ha, &hb], cfg);
        self.get_or_compute(
            &key,
            ZSG_EXT,
            load_zsg,
            |s| s.hits_a_hash == ha && s.hits_b_hash == hb && s.start() == cfg.start_score,
            || solve_equilibrium(hits_a, hits_b, cfg),
            save_zsg,
        )
    }
}

fn config_key(hashes: &[&str], cfg: &SolveConfig) -> String {
    let mut h = Sha256::new();
    for s in hashes {
        h.update(s.as_bytes());
        h.update([0]);
    }
    h.update(cfg.start_score.to_le_bytes());
    h.update(cfg.rel_tol.to_le_bytes());
    h.update((cfg.max_policy_iters as u64).to_le_bytes());
    h.update((cfg.max_alternations as u64).to_le_bytes());
    hex::encode(h.finalize())
}
