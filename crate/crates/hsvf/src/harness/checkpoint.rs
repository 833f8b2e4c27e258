//! Checkpoints: a binary parameter container plus a JSON sidecar with the
//! parameter inventory and training provenance.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use candle_core::{DType, Tensor};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamStore;

const MAGIC: &[u8; 8] = b"HSVFCKP1";

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamInfo {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub stage: String,
    pub epoch: usize,
    pub seed: u64,
    pub params: Vec<ParamInfo>,
}

pub fn bin_path(base: &Path) -> PathBuf {
    base.with_extension("bin")
}

pub fn meta_path(base: &Path) -> PathBuf {
    base.with_extension("json")
}

/// Writes `<base>.bin` (parameters, f64 little-endian) and `<base>.json`.
pub fn save_checkpoint(store: &ParamStore, base: &Path, stage: &str, epoch: usize, seed: u64) -> Result<()> {
    if let Some(dir) = base.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let bin = bin_path(base);
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(store.named().len() as u64).to_le_bytes());
    let mut params = Vec::new();
    for (name, var) in store.named() {
        let t = var.as_tensor().to_dtype(DType::F64)?;
        let shape: Vec<usize> = t.dims().to_vec();
        out.extend_from_slice(&(name.len() as u64).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(shape.len() as u64).to_le_bytes());
        for &d in &shape {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.flatten_all()?.to_vec1::<f64>()? {
            out.extend_from_slice(&v.to_le_bytes());
        }
        params.push(ParamInfo { name: name.clone(), shape });
    }
    let mut f = std::fs::File::create(&bin).map_err(|e| Error::io(&bin, e))?;
    f.write_all(&out).map_err(|e| Error::io(&bin, e))?;

    let meta = CheckpointMeta { stage: stage.to_string(), epoch, seed, params };
    let json = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::data(format!("checkpoint meta serialization: {e}")))?;
    let mp = meta_path(base);
    std::fs::write(&mp, json).map_err(|e| Error::io(&mp, e))?;
    Ok(())
}

pub fn load_meta(base: &Path) -> Result<CheckpointMeta> {
    let mp = meta_path(base);
    let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(&mp, e))?;
    serde_json::from_str(&text).map_err(|e| Error::data(format!("{}: {e}", mp.display())))
}

/// Loads `<base>.bin` into an existing store; every parameter must already
/// exist with a matching shape.
pub fn load_checkpoint(store: &mut ParamStore, base: &Path) -> Result<CheckpointMeta> {
    let bin = bin_path(base);
    let mut bytes = Vec::new();
    std::fs::File::open(&bin)
        .map_err(|e| Error::io(&bin, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(&bin, e))?;
    let mut cur = 0usize;
    let take = |cur: &mut usize, n: usize| -> Result<&[u8]> {
        if *cur + n > bytes.len() {
            return Err(Error::data(format!("truncated checkpoint {}", bin.display())));
        }
        let s = &bytes[*cur..*cur + n];
        *cur += n;
        Ok(s)
    };
    let u64_at = |cur: &mut usize| -> Result<u64> {
        Ok(u64::from_le_bytes(take(cur, 8)?.try_into().unwrap()))
    };
    if take(&mut cur, 8)? != MAGIC {
        return Err(Error::data(format!("{} is not a checkpoint", bin.display())));
    }
    let count = u64_at(&mut cur)? as usize;
    let device = store.device().clone();
    for _ in 0..count {
        let name_len = u64_at(&mut cur)? as usize;
        let name = String::from_utf8(take(&mut cur, name_len)?.to_vec())
            .map_err(|_| Error::data("checkpoint contains a non-UTF8 parameter name"))?;
        let ndim = u64_at(&mut cur)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(u64_at(&mut cur)? as usize);
        }
        let n: usize = shape.iter().product();
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(f64::from_le_bytes(take(&mut cur, 8)?.try_into().unwrap()));
        }
        let existing = store
            .get(&name)
            .ok_or_else(|| Error::data(format!("checkpoint parameter {name} not in model")))?;
        if existing.as_tensor().dims() != shape.as_slice() {
            return Err(Error::shape(format!(
                "checkpoint parameter {name}: shape {:?} vs model {:?}",
                shape,
                existing.as_tensor().dims()
            )));
        }
        let t = Tensor::from_vec(data, shape, &device)?;
        store.set(&name, &t)?;
    }
    load_meta(base)
}
