//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "UAVFLCKP"
//! version    u32
//! count      u32
//! count x {
//!     name_len   u32, name (UTF-8)
//!     n_widths   u32, widths (u32 each)
//!     hidden     u8   activation tag (0 identity, 1 relu, 2 tanh)
//!     output     u8   activation tag
//!     n_params   u64
//!     params     n_params x f64
//! }
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, MlpSpec, ParamVector};
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"UAVFLCKP";

#[derive(Debug, Clone, PartialEq)]
pub struct NamedNetwork {
    pub name: String,
    pub spec: MlpSpec,
    pub params: ParamVector,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Checkpoint {
    pub networks: Vec<NamedNetwork>,
}

fn ckpt_err(e: std::io::Error) -> Error {
    Error::Checkpoint(e.to_string())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(ckpt_err)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(ckpt_err)?;
    Ok(u64::from_le_bytes(b))
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    let mut b = [0u8; 1];
    r.read_exact(&mut b).map_err(ckpt_err)?;
    Ok(b[0])
}

impl Checkpoint {
    pub fn push(&mut self, name: impl Into<String>, spec: &MlpSpec, params: &ParamVector) {
        self.networks.push(NamedNetwork {
            name: name.into(),
            spec: spec.clone(),
            params: params.clone(),
        });
    }

    pub fn get(&self, name: &str) -> Option<&NamedNetwork> {
        self.networks.iter().find(|n| n.name == name)
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut put = |bytes: &[u8]| w.write_all(bytes).map_err(ckpt_err);
        put(MAGIC)?;
        put(&CHECKPOINT_VERSION.to_le_bytes())?;
        put(&(self.networks.len() as u32).to_le_bytes())?;
        for net in &self.networks {
            put(&(net.name.len() as u32).to_le_bytes())?;
            put(net.name.as_bytes())?;
            put(&(net.spec.layer_widths.len() as u32).to_le_bytes())?;
            for &width in &net.spec.layer_widths {
                put(&(width as u32).to_le_bytes())?;
            }
            put(&[net.spec.hidden_activation.tag(), net.spec.output_activation.tag()])?;
            put(&(net.params.len() as u64).to_le_bytes())?;
            for v in net.params.iter() {
                put(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(ckpt_err)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = read_u32(r)?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let count = read_u32(r)?;
        let mut networks = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let name_len = read_u32(r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name).map_err(ckpt_err)?;
            let name = String::from_utf8(name).map_err(|e| Error::Checkpoint(e.to_string()))?;
            let n_widths = read_u32(r)? as usize;
            let layer_widths = (0..n_widths)
                .map(|_| read_u32(r).map(|w| w as usize))
                .collect::<Result<Vec<_>>>()?;
            let tag = |t: u8| {
                Activation::from_tag(t).ok_or_else(|| Error::Checkpoint(format!("bad activation tag {t}")))
            };
            let hidden_activation = tag(read_u8(r)?)?;
            let output_activation = tag(read_u8(r)?)?;
            let spec = MlpSpec {
                layer_widths,
                hidden_activation,
                output_activation,
            };
            spec.validate()
                .map_err(|e| Error::Checkpoint(format!("network `{name}`: {e}")))?;
            let n_params = read_u64(r)? as usize;
            if n_params != spec.param_count() {
                return Err(Error::Checkpoint(format!(
                    "network `{name}` has {n_params} parameters, spec needs {}",
                    spec.param_count()
                )));
            }
            let mut values = Vec::with_capacity(n_params);
            for _ in 0..n_params {
                values.push(f64::from_bits(read_u64(r)?));
            }
            networks.push(NamedNetwork {
                name,
                spec,
                params: ParamVector::from_vec(values),
            });
        }
        Ok(Checkpoint { networks })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        self.write_to(&mut w)?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(&mut BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_truncated_and_foreign_data() {
        let spec = MlpSpec::new(vec![2, 1], Activation::Tanh, Activation::Identity).unwrap();
        let mut ck = Checkpoint::default();
        ck.push("a", &spec, &ParamVector::from_vec(vec![1.0, 2.0, 3.0]));
        let mut bytes = Vec::new();
        ck.write_to(&mut bytes).unwrap();
        assert!(Checkpoint::read_from(&mut &bytes[..bytes.len() - 1]).is_err());
        let mut foreign = bytes.clone();
        foreign[0] = b'X';
        assert!(Checkpoint::read_from(&mut &foreign[..]).is_err());
        assert_eq!(Checkpoint::read_from(&mut &bytes[..]).unwrap(), ck);
    }
}
