//! Flat-vector view over all trainable weights with a named shape catalog,
//! plus the versioned binary checkpoint layout and a lossless text export.

use std::io::{Read, Write};
use thiserror::Error;

/// One named tensor inside a [`ParamSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl CatalogEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// All trainable parameters stacked into one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    pub flat: Vec<f64>,
    pub catalog: Vec<CatalogEntry>,
}

#[derive(Debug, Error)]
pub enum ParamError {
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported version {0}")]
    BadVersion(u32),
    #[error("corrupt catalog")]
    Corrupt,
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

const MAGIC: &[u8; 4] = b"WCPS";
const VERSION: u32 = 1;

impl ParamSet {
    /// Assemble from (name, shape, values) tensors, concatenated in order.
    pub fn from_tensors(tensors: Vec<(String, Vec<usize>, Vec<f64>)>) -> Self {
        let mut flat = Vec::new();
        let mut catalog = Vec::new();
        for (name, shape, values) in tensors {
            assert_eq!(values.len(), shape.iter().product::<usize>(), "shape/value mismatch for {name}");
            catalog.push(CatalogEntry {
                name,
                shape,
                offset: flat.len(),
            });
            flat.extend(values);
        }
        ParamSet { flat, catalog }
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.catalog
            .iter()
            .find(|e| e.name == name)
            .map(|e| &self.flat[e.offset..e.offset + e.len()])
    }

    /// Versioned binary layout: magic, catalog (UTF-8 names + shapes), then
    /// 64-bit little-endian floats.
    pub fn write_binary<W: Write>(&self, out: &mut W) -> Result<(), ParamError> {
        out.write_all(MAGIC)?;
        out.write_all(&VERSION.to_le_bytes())?;
        out.write_all(&(self.catalog.len() as u32).to_le_bytes())?;
        for e in &self.catalog {
            let name = e.name.as_bytes();
            out.write_all(&(name.len() as u32).to_le_bytes())?;
            out.write_all(name)?;
            out.write_all(&(e.shape.len() as u32).to_le_bytes())?;
            for dim in &e.shape {
                out.write_all(&(*dim as u64).to_le_bytes())?;
            }
        }
        for v in &self.flat {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(input: &mut R) -> Result<Self, ParamError> {
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(ParamError::BadMagic);
        }
        let version = read_u32(input)?;
        if version != VERSION {
            return Err(ParamError::BadVersion(version));
        }
        let n_entries = read_u32(input)? as usize;
        let mut catalog = Vec::with_capacity(n_entries);
        let mut offset = 0usize;
        for _ in 0..n_entries {
            let name_len = read_u32(input)? as usize;
            let mut name_bytes = vec![0u8; name_len];
            input.read_exact(&mut name_bytes)?;
            let name = String::from_utf8(name_bytes).map_err(|_| ParamError::Corrupt)?;
            let ndims = read_u32(input)? as usize;
            let mut shape = Vec::with_capacity(ndims);
            for _ in 0..ndims {
                let mut buf = [0u8; 8];
                input.read_exact(&mut buf)?;
                shape.push(u64::from_le_bytes(buf) as usize);
            }
            let entry = CatalogEntry { name, shape, offset };
            offset += entry.len();
            catalog.push(entry);
        }
        let mut flat = Vec::with_capacity(offset);
        for _ in 0..offset {
            let mut buf = [0u8; 8];
            input.read_exact(&mut buf)?;
            flat.push(f64::from_le_bytes(buf));
        }
        Ok(ParamSet { flat, catalog })
    }

    /// Lossless text export for diffing: one tensor per block, one value per
    /// line in round-trippable hex-free decimal.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.catalog {
            let dims: Vec<String> = e.shape.iter().map(|d| d.to_string()).collect();
            out.push_str(&format!("# {} [{}]\n", e.name, dims.join("x")));
            for v in &self.flat[e.offset..e.offset + e.len()] {
                // {:e} with 17 significant digits round-trips any f64
                out.push_str(&format!("{v:.16e}\n"));
            }
        }
        out
    }
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32, ParamError> {
    let mut buf = [0u8; 4];
    input.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> ParamSet {
        ParamSet::from_tensors(vec![
            ("enc.w_fx".to_string(), vec![2, 3], vec![1.0, -2.5, 3.25, 0.0, 1e-300, f64::MIN_POSITIVE]),
            ("head.b".to_string(), vec![2], vec![0.125, -7.0]),
        ])
    }

    #[test]
    fn catalog_offsets_and_lookup() {
        let p = sample();
        assert_eq!(p.len(), 8);
        assert_eq!(p.catalog[1].offset, 6);
        assert_eq!(p.tensor("head.b").unwrap(), &[0.125, -7.0]);
        assert!(p.tensor("nope").is_none());
    }

    #[test]
    fn binary_roundtrip_exact() {
        let p = sample();
        let mut buf = Vec::new();
        p.write_binary(&mut buf).unwrap();
        let q = ParamSet::read_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn bad_magic_rejected() {
        let mut buf = Vec::new();
        sample().write_binary(&mut buf).unwrap();
        buf[0] = b'X';
        assert!(matches!(
            ParamSet::read_binary(&mut buf.as_slice()),
            Err(ParamError::BadMagic)
        ));
    }

    #[test]
    fn text_export_roundtrips_values() {
        let p = sample();
        let text = p.to_text();
        let values: Vec<f64> = text
            .lines()
            .filter(|l| !l.starts_with('#'))
            .map(|l| l.parse().unwrap())
            .collect();
        assert_eq!(values, p.flat);
    }

    proptest! {
        #[test]
        fn roundtrip_arbitrary(values in proptest::collection::vec(-1e10..1e10f64, 1..64)) {
            let n = values.len();
            let p = ParamSet::from_tensors(vec![("t".to_string(), vec![n], values)]);
            let mut buf = Vec::new();
            p.write_binary(&mut buf).unwrap();
            let q = ParamSet::read_binary(&mut buf.as_slice()).unwrap();
            prop_assert_eq!(p, q);
        }
    }
}
