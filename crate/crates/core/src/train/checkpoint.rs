//! Checkpoint archive: a JSON header followed by raw little-endian f32
//! tensor data.
//!
//! Layout: magic `ANCK`, format version (u32 LE), header length (u64 LE),
//! the header JSON, then every tensor's elements in header order — model
//! parameters first, then optimizer state when present. Round-trips are
//! bit-exact.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{lookup_architecture, ModelSpec, ParamSet, Registry, TrainedModel, TrainingMeta};

const MAGIC: &[u8; 4] = b"ANCK";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    arch: String,
    spec: ModelSpec,
    meta: TrainingMeta,
    tensors: Vec<TensorInfo>,
    /// Optimizer state tensor groups, stored after the parameters.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    opt_groups: Vec<String>,
}

/// Optimizer state carried inside a checkpoint.
#[derive(Clone)]
pub struct OptimizerState {
    pub square_avg: ParamSet,
    pub momentum_buf: ParamSet,
}

impl std::fmt::Debug for OptimizerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OptimizerState")
            .field("elements", &self.square_avg.total_elements())
            .finish()
    }
}

const OPT_GROUPS: [&str; 2] = ["square_avg", "momentum_buf"];

/// Write a checkpoint; `opt_state` makes the file resumable.
pub fn save_checkpoint(
    model: &TrainedModel,
    opt_state: Option<&OptimizerState>,
    path: &Path,
) -> Result<()> {
    let params = model.net.params();
    let header = Header {
        arch: model.net.arch_name().to_string(),
        spec: model.net.spec().clone(),
        meta: model.meta.clone(),
        tensors: params
            .iter()
            .map(|e| TensorInfo {
                name: e.name.clone(),
                shape: e.value.shape().to_vec(),
            })
            .collect(),
        opt_groups: if opt_state.is_some() {
            OPT_GROUPS.iter().map(|s| s.to_string()).collect()
        } else {
            Vec::new()
        },
    };
    let header_json = serde_json::to_vec(&header)
        .map_err(|e| Error::runtime(format!("checkpoint header serialization failed: {e}")))?;

    let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(&mut file);
    let write = |out: &mut std::io::BufWriter<&mut std::fs::File>, bytes: &[u8]| {
        out.write_all(bytes).map_err(|e| Error::io(path, e))
    };
    write(&mut out, MAGIC)?;
    write(&mut out, &VERSION.to_le_bytes())?;
    write(&mut out, &(header_json.len() as u64).to_le_bytes())?;
    write(&mut out, &header_json)?;

    let write_set = |out: &mut std::io::BufWriter<&mut std::fs::File>,
                         set: &ParamSet|
     -> Result<()> {
        for e in set.iter() {
            let slice = e.value.as_slice().expect("tensors are contiguous");
            let mut bytes = Vec::with_capacity(slice.len() * 4);
            for v in slice {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            write(out, &bytes)?;
        }
        Ok(())
    };
    write_set(&mut out, params)?;
    if let Some(state) = opt_state {
        write_set(&mut out, &state.square_avg)?;
        write_set(&mut out, &state.momentum_buf)?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Load a checkpoint using the process-wide architecture registry.
pub fn load_checkpoint(path: &Path) -> Result<TrainedModel> {
    Ok(load_checkpoint_full(path)?.0)
}

/// Load a checkpoint plus any optimizer state it carries.
pub fn load_checkpoint_full(path: &Path) -> Result<(TrainedModel, Option<OptimizerState>)> {
    load_checkpoint_with(path, None)
}

/// Load resolving the architecture in `registry` (the global registry when
/// `None`).
pub fn load_checkpoint_with(
    path: &Path,
    registry: Option<&Registry>,
) -> Result<(TrainedModel, Option<OptimizerState>)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = std::io::BufReader::new(file);
    let ctx = |msg: String| Error::validation(format!("{}: {msg}", path.display()));

    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| ctx("file too short for magic".into()))?;
    if &magic != MAGIC {
        return Err(ctx("not a checkpoint archive (bad magic)".into()));
    }
    let mut word = [0u8; 4];
    reader
        .read_exact(&mut word)
        .map_err(|_| ctx("truncated version".into()))?;
    let version = u32::from_le_bytes(word);
    if version != VERSION {
        return Err(ctx(format!("unsupported checkpoint version {version}")));
    }
    let mut len_bytes = [0u8; 8];
    reader
        .read_exact(&mut len_bytes)
        .map_err(|_| ctx("truncated header length".into()))?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    let mut header_json = vec![0u8; header_len];
    reader
        .read_exact(&mut header_json)
        .map_err(|_| ctx("truncated header".into()))?;
    let header: Header = serde_json::from_slice(&header_json)
        .map_err(|e| ctx(format!("invalid header JSON: {e}")))?;

    let builder = match registry {
        Some(r) => r.lookup(&header.arch)?,
        None => lookup_architecture(&header.arch)?,
    };
    let mut model = builder(&header.spec, 0)?;
    model.meta = header.meta.clone();

    let mut read_set = |infos: &[TensorInfo]| -> Result<ParamSet> {
        let mut set = ParamSet::new();
        for info in infos {
            let count: usize = info.shape.iter().product();
            let mut bytes = vec![0u8; count * 4];
            reader
                .read_exact(&mut bytes)
                .map_err(|_| ctx(format!("truncated tensor data for `{}`", info.name)))?;
            let values: Vec<f32> = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let arr = ndarray::ArrayD::from_shape_vec(info.shape.clone(), values)
                .map_err(|e| ctx(format!("tensor `{}` shape error: {e}", info.name)))?;
            set.push(info.name.clone(), arr);
        }
        Ok(set)
    };

    let stored = read_set(&header.tensors)?;
    model.net.params_mut().load_from(&stored)?;

    let opt_state = if header.opt_groups == OPT_GROUPS {
        let sq = read_set(&header.tensors)?;
        let mb = read_set(&header.tensors)?;
        Some(OptimizerState {
            square_avg: sq,
            momentum_buf: mb,
        })
    } else if header.opt_groups.is_empty() {
        None
    } else {
        return Err(ctx(format!(
            "unknown optimizer state groups {:?}",
            header.opt_groups
        )));
    };

    Ok((model, opt_state))
}
