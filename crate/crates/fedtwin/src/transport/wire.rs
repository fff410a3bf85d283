//! Bit-exact parameter serialization.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! entry count      u32
//! per entry:       name length u16, name bytes (UTF-8), rows u32, cols u32
//! then all values  f64, row-major, in manifest order
//! ```
//!
//! `deserialize ∘ serialize` is the identity, bit for bit; equal parameters
//! produce equal bytes and unequal parameters produce unequal bytes.

use crate::error::{Error, Result};
use crate::numerics::{ParamValues, Tensor};

/// Shape manifest entry: `(name, rows, cols)` in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub name: String,
    pub rows: u32,
    pub cols: u32,
}

pub type WeightManifest = Vec<ManifestEntry>;

/// Manifest describing `values`.
pub fn manifest_of(values: &ParamValues) -> WeightManifest {
    values
        .entries
        .iter()
        .map(|(name, t)| ManifestEntry {
            name: name.clone(),
            rows: t.rows() as u32,
            cols: t.cols() as u32,
        })
        .collect()
}

/// Serializes tensors against their manifest. The two must agree on count
/// and shapes.
pub fn serialize_params(manifest: &WeightManifest, values: &[Tensor]) -> Result<Vec<u8>> {
    if manifest.len() != values.len() {
        return Err(Error::shape(format!(
            "serialize: {} manifest entries but {} tensors",
            manifest.len(),
            values.len()
        )));
    }
    for (entry, tensor) in manifest.iter().zip(values) {
        if tensor.rows() != entry.rows as usize || tensor.cols() != entry.cols as usize {
            return Err(Error::shape(format!(
                "serialize: '{}' manifest says {}x{}, tensor is {}x{}",
                entry.name,
                entry.rows,
                entry.cols,
                tensor.rows(),
                tensor.cols()
            )));
        }
        if entry.name.len() > u16::MAX as usize {
            return Err(Error::config(format!(
                "serialize: name '{}…' exceeds {} bytes",
                &entry.name[..32],
                u16::MAX
            )));
        }
    }

    let mut out = Vec::new();
    out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
    for entry in manifest {
        out.extend_from_slice(&(entry.name.len() as u16).to_le_bytes());
        out.extend_from_slice(entry.name.as_bytes());
        out.extend_from_slice(&entry.rows.to_le_bytes());
        out.extend_from_slice(&entry.cols.to_le_bytes());
    }
    for tensor in values {
        for v in tensor.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

/// Convenience wrapper serializing a [`ParamValues`].
pub fn encode_values(values: &ParamValues) -> Result<Vec<u8>> {
    let manifest = manifest_of(values);
    let tensors: Vec<Tensor> = values.entries.iter().map(|(_, t)| t.clone()).collect();
    serialize_params(&manifest, &tensors)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(
                self.pos,
                format!(
                    "truncated buffer: need {n} bytes for {what}, {} remain",
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
}

/// Parses a buffer produced by [`serialize_params`]. Fails (with the byte
/// offset) on truncation, trailing garbage, zero dimensions, or
/// non-UTF-8 names; never returns a partial result.
pub fn deserialize_params(bytes: &[u8]) -> Result<(WeightManifest, Vec<Tensor>)> {
    let mut cur = Cursor { bytes, pos: 0 };
    let count = cur.u32("entry count")? as usize;

    let mut manifest = Vec::with_capacity(count);
    for i in 0..count {
        let name_len = cur.u16("name length")? as usize;
        let name_pos = cur.pos;
        let name_bytes = cur.take(name_len, "name")?;
        let name = std::str::from_utf8(name_bytes)
            .map_err(|_| Error::format(name_pos, format!("entry {i}: name is not UTF-8")))?
            .to_string();
        let rows = cur.u32("rows")?;
        let cols = cur.u32("cols")?;
        if rows == 0 || cols == 0 {
            return Err(Error::format(
                cur.pos - 8,
                format!("entry '{name}': dimensions {rows}x{cols} must be positive"),
            ));
        }
        manifest.push(ManifestEntry { name, rows, cols });
    }

    let mut values = Vec::with_capacity(count);
    for entry in &manifest {
        let n = entry.rows as usize * entry.cols as usize;
        let raw = cur.take(8 * n, "tensor values")?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        values.push(Tensor::from_vec(entry.rows as usize, entry.cols as usize, data)?);
    }

    if cur.pos != bytes.len() {
        return Err(Error::format(
            cur.pos,
            format!("{} trailing bytes after the last tensor", bytes.len() - cur.pos),
        ));
    }
    Ok((manifest, values))
}

/// Convenience wrapper recovering a [`ParamValues`].
pub fn decode_values(bytes: &[u8]) -> Result<ParamValues> {
    let (manifest, tensors) = deserialize_params(bytes)?;
    Ok(ParamValues {
        entries: manifest
            .into_iter()
            .zip(tensors)
            .map(|(e, t)| (e.name, t))
            .collect(),
    })
}
