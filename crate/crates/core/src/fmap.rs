//! `FMAP` feature-map files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "FMAP" | version u32 = 1 | layer count u32
//! per layer: name length u32 | UTF-8 name | H u32 | W u32 | C u32 | H*W*C f32 in (y, x, c) order
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::stats::{FeatureMap, FeatureMapSet};
use crate::wire::{put_f32, put_u32, to_u32, Reader};

pub const MAGIC: &[u8; 4] = b"FMAP";
pub const VERSION: u32 = 1;

pub fn encode(set: &FeatureMapSet) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, VERSION);
    put_u32(&mut out, to_u32(set.len(), "layer count")?);
    for layer in &set.layers {
        put_u32(&mut out, to_u32(layer.name.len(), "name length")?);
        out.extend_from_slice(layer.name.as_bytes());
        put_u32(&mut out, to_u32(layer.height(), "height")?);
        put_u32(&mut out, to_u32(layer.width(), "width")?);
        put_u32(&mut out, to_u32(layer.channels(), "channels")?);
        for &v in layer.as_slice() {
            put_f32(&mut out, v as f32);
        }
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<FeatureMapSet> {
    let mut r = Reader::new(bytes);
    r.expect_magic(MAGIC)?;
    let at = r.offset();
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(Error::parse(at, format!("unsupported FMAP version {version}")));
    }
    let count = r.u32("layer count")? as usize;
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let name_len = r.u32("name length")? as usize;
        let at = r.offset();
        let name = std::str::from_utf8(r.take(name_len, "layer name")?)
            .map_err(|e| Error::parse(at + e.valid_up_to(), "layer name is not UTF-8"))?
            .to_owned();
        let header_at = r.offset();
        let h = r.u32("height")? as usize;
        let w = r.u32("width")? as usize;
        let c = r.u32("channels")? as usize;
        let count = h
            .checked_mul(w)
            .and_then(|v| v.checked_mul(c))
            .ok_or_else(|| Error::parse(header_at, "layer size overflows"))?;
        let data_at = r.offset();
        let data = r.f32s(count, "layer data")?;
        let map = FeatureMap::new(name, h, w, c, data.into_iter().map(f64::from).collect())
            .map_err(|e| Error::parse(data_at, e.to_string()))?;
        layers.push(map);
    }
    r.expect_end()?;
    Ok(FeatureMapSet::new(layers))
}

pub fn read(path: impl AsRef<Path>) -> Result<FeatureMapSet> {
    decode(&std::fs::read(path)?)
}

pub fn write(path: impl AsRef<Path>, set: &FeatureMapSet) -> Result<()> {
    std::fs::write(path, encode(set)?)?;
    Ok(())
}
