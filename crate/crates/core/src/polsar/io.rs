//! `.pscene` scene files: a JSON header line, then raw little-endian f64
//! (Re, Im) pairs for the 3 Pauli channels in row-major pixel order, then
//! one label byte per pixel (255 = unlabeled).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PolsarField, UNLABELED};
use crate::error::{Error, Result};

const MAGIC: &str = "PSCENE";
const VERSION: u32 = 1;
const DTYPE: &str = "c128";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    magic: String,
    version: u32,
    height: usize,
    width: usize,
    classes: Vec<String>,
    dtype: String,
}

pub fn write_scene(field: &PolsarField, path: &Path) -> Result<()> {
    let header = Header {
        magic: MAGIC.into(),
        version: VERSION,
        height: field.height(),
        width: field.width(),
        classes: field.class_names().to_vec(),
        dtype: DTYPE.into(),
    };
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer(&mut w, &header).map_err(|e| Error::Format(format!("header: {e}")))?;
    w.write_all(b"\n")?;
    for k in field.pauli_data() {
        for z in k {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.write_all(field.labels())?;
    w.flush()?;
    Ok(())
}

pub fn read_scene(path: &Path) -> Result<PolsarField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut header_bytes = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)
            .map_err(|_| Error::Format("missing scene header".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
        if header_bytes.len() > 1 << 20 {
            return Err(Error::Format("unterminated scene header".into()));
        }
    }
    let header: Header = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::Format(format!("header: {e}")))?;
    if header.magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic {:?}, expected {MAGIC:?}",
            header.magic
        )));
    }
    if header.version != VERSION {
        return Err(Error::Format(format!(
            "unsupported scene version {}",
            header.version
        )));
    }
    if header.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported dtype {:?}", header.dtype)));
    }
    let n = header.height * header.width;
    let mut payload = vec![0u8; n * 3 * 16];
    r.read_exact(&mut payload)
        .map_err(|_| Error::Format("scene payload truncated".into()))?;
    let mut pauli = Vec::with_capacity(n);
    for px in payload.chunks_exact(48) {
        let mut k = [Complex64::new(0.0, 0.0); 3];
        for (ch, bytes) in px.chunks_exact(16).enumerate() {
            let re = f64::from_le_bytes(bytes[0..8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
            k[ch] = Complex64::new(re, im);
        }
        pauli.push(k);
    }
    let mut labels = vec![0u8; n];
    r.read_exact(&mut labels)
        .map_err(|_| Error::Format("label grid truncated".into()))?;
    if r.read(&mut byte)? != 0 {
        return Err(Error::Format("trailing bytes after scene payload".into()));
    }
    let classes = header.classes.len();
    if labels
        .iter()
        .any(|&l| l != UNLABELED && l as usize >= classes)
    {
        return Err(Error::Format("label out of range for class list".into()));
    }
    PolsarField::new(
        header.height,
        header.width,
        pauli,
        labels,
        header.classes,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polsar::{generate_scene, SceneRecipe};

    #[test]
    fn round_trip_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.pscene");
        let field = generate_scene(&SceneRecipe::default_synthetic(16, 24, 3)).unwrap();
        write_scene(&field, &path).unwrap();
        let back = read_scene(&path).unwrap();
        assert_eq!(field, back);
    }

    #[test]
    fn wrong_magic_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.pscene");
        let field = generate_scene(&SceneRecipe::default_synthetic(4, 4, 3)).unwrap();
        write_scene(&field, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let pos = bytes.windows(6).position(|w| w == b"PSCENE").unwrap();
        bytes[pos..pos + 6].copy_from_slice(b"XSCENE");
        std::fs::write(&path, &bytes).unwrap();
        let err = read_scene(&path).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn truncation_by_one_byte_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.pscene");
        let field = generate_scene(&SceneRecipe::default_synthetic(4, 4, 3)).unwrap();
        write_scene(&field, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_scene(&path), Err(Error::Format(_))));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scene.pscene");
        let field = generate_scene(&SceneRecipe::default_synthetic(4, 4, 3)).unwrap();
        write_scene(&field, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.push(0);
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(read_scene(&path), Err(Error::Format(_))));
    }
}
