//! Coherency raster and label grid file formats.
//!
//! CTM1: magic "CTM1", u32 height, u32 width, then H*W records of 9 f32
//! (T11, T22, T33, ReT12, ImT12, ReT13, ImT13, ReT23, ImT23), row-major.
//! LBL1: magic "LBL1", u32 height, u32 width, then H*W i16 labels.
//! Everything little-endian.

use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

use super::{CoherencyPixel, CoherencyRaster};

pub const CTM_MAGIC: [u8; 4] = *b"CTM1";
pub const LBL_MAGIC: [u8; 4] = *b"LBL1";

/// Guard against absurd headers before allocating.
const MAX_PIXELS: u64 = 1 << 28;

fn check_dims(h: u32, w: u32) -> Result<(usize, usize)> {
    let (h64, w64) = (h as u64, w as u64);
    if h64 == 0 || w64 == 0 || h64 * w64 > MAX_PIXELS {
        return Err(Error::DimensionOverflow { h: h64, w: w64 });
    }
    Ok((h as usize, w as usize))
}

fn read_header(bytes: &[u8], magic: [u8; 4]) -> Result<(usize, usize, Cursor<&[u8]>)> {
    if bytes.len() < 12 {
        return Err(Error::Truncated {
            expected: 12,
            actual: bytes.len() as u64,
        });
    }
    let mut found = [0u8; 4];
    found.copy_from_slice(&bytes[..4]);
    if found != magic {
        return Err(Error::BadMagic {
            expected: magic,
            found,
        });
    }
    let mut cur = Cursor::new(bytes);
    cur.set_position(4);
    let h = cur.read_u32::<LittleEndian>()?;
    let w = cur.read_u32::<LittleEndian>()?;
    let (h, w) = check_dims(h, w)?;
    Ok((h, w, cur))
}

/// Serializes the pixel grid (labels are written separately).
pub fn encode_ctm(raster: &CoherencyRaster) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + raster.pixels.len() * 36);
    out.extend_from_slice(&CTM_MAGIC);
    out.write_u32::<LittleEndian>(raster.height as u32).unwrap();
    out.write_u32::<LittleEndian>(raster.width as u32).unwrap();
    for p in &raster.pixels {
        for &e in &p.entries {
            out.write_f32::<LittleEndian>(e as f32).unwrap();
        }
    }
    out
}

/// Parses a CTM1 byte stream; the label grid comes back all-unlabeled.
pub fn decode_ctm(bytes: &[u8]) -> Result<CoherencyRaster> {
    let (h, w, mut cur) = read_header(bytes, CTM_MAGIC)?;
    let expected = 12 + (h * w * 36) as u64;
    if (bytes.len() as u64) < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut raster = CoherencyRaster::new(h, w);
    for p in raster.pixels.iter_mut() {
        let mut entries = [0.0f64; 9];
        for e in &mut entries {
            *e = cur.read_f32::<LittleEndian>()? as f64;
        }
        *p = CoherencyPixel::new(entries);
    }
    Ok(raster)
}

pub fn encode_lbl(raster: &CoherencyRaster) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + raster.labels.len() * 2);
    out.extend_from_slice(&LBL_MAGIC);
    out.write_u32::<LittleEndian>(raster.height as u32).unwrap();
    out.write_u32::<LittleEndian>(raster.width as u32).unwrap();
    for &l in &raster.labels {
        out.write_i16::<LittleEndian>(l).unwrap();
    }
    out
}

/// Parses an LBL1 byte stream into (height, width, labels).
pub fn decode_lbl(bytes: &[u8]) -> Result<(usize, usize, Vec<i16>)> {
    let (h, w, mut cur) = read_header(bytes, LBL_MAGIC)?;
    let expected = 12 + (h * w * 2) as u64;
    if (bytes.len() as u64) < expected {
        return Err(Error::Truncated {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let mut labels = vec![0i16; h * w];
    for l in labels.iter_mut() {
        *l = cur.read_i16::<LittleEndian>()?;
    }
    Ok((h, w, labels))
}

/// Writes the pixel grid, and the label grid when a path is given.
pub fn save_raster(
    raster: &CoherencyRaster,
    ctm_path: &Path,
    labels_path: Option<&Path>,
) -> Result<()> {
    raster.validate_alignment()?;
    std::fs::write(ctm_path, encode_ctm(raster))?;
    if let Some(lp) = labels_path {
        std::fs::write(lp, encode_lbl(raster))?;
    }
    Ok(())
}

/// Reads a pixel grid, attaching labels from a second file when given.
/// The two grids must agree on dimensions.
pub fn load_raster(ctm_path: &Path, labels_path: Option<&Path>) -> Result<CoherencyRaster> {
    let mut raster = decode_ctm(&std::fs::read(ctm_path)?)?;
    if let Some(lp) = labels_path {
        let (h, w, labels) = decode_lbl(&std::fs::read(lp)?)?;
        if h != raster.height || w != raster.width {
            return Err(Error::ShapeMismatch {
                left: vec![raster.height, raster.width],
                right: vec![h, w],
            });
        }
        raster.labels = labels;
    }
    Ok(raster)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_raster() -> CoherencyRaster {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let mut raster = CoherencyRaster::new(5, 7);
        for p in raster.pixels.iter_mut() {
            let mut entries = [0.0; 9];
            for e in &mut entries {
                // f32-representable values so a single quantization round-trips
                *e = (rng.random_range(-100..100) as f64) / 8.0;
            }
            *p = CoherencyPixel::new(entries);
        }
        for (i, l) in raster.labels.iter_mut().enumerate() {
            *l = (i % 4) as i16;
        }
        raster
    }

    #[test]
    fn ctm_round_trip_is_bit_exact() {
        let raster = sample_raster();
        let bytes = encode_ctm(&raster);
        let back = decode_ctm(&bytes).unwrap();
        assert_eq!(back.height, raster.height);
        assert_eq!(back.width, raster.width);
        assert_eq!(back.pixels, raster.pixels);
        // encode(decode(bytes)) reproduces the byte stream exactly
        assert_eq!(encode_ctm(&back), bytes);
    }

    #[test]
    fn lbl_round_trip() {
        let raster = sample_raster();
        let bytes = encode_lbl(&raster);
        let (h, w, labels) = decode_lbl(&bytes).unwrap();
        assert_eq!((h, w), (5, 7));
        assert_eq!(labels, raster.labels);
        assert_eq!(
            encode_lbl(&CoherencyRaster {
                labels,
                ..raster.clone()
            }),
            bytes
        );
    }

    #[test]
    fn wrong_magic_is_reported_not_crash() {
        let raster = sample_raster();
        let mut bytes = encode_ctm(&raster);
        bytes[0] = b'X';
        match decode_ctm(&bytes) {
            Err(Error::BadMagic { expected, found }) => {
                assert_eq!(expected, CTM_MAGIC);
                assert_eq!(&found[1..], &CTM_MAGIC[1..]);
            }
            other => panic!("expected BadMagic, got {other:?}"),
        }
        // magic of the wrong format
        let lbl = encode_lbl(&raster);
        assert!(matches!(decode_ctm(&lbl), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn truncation_names_byte_counts() {
        let raster = sample_raster();
        let bytes = encode_ctm(&raster);
        let cut = &bytes[..bytes.len() - 5];
        match decode_ctm(cut) {
            Err(Error::Truncated { expected, actual }) => {
                assert_eq!(expected, bytes.len() as u64);
                assert_eq!(actual, cut.len() as u64);
            }
            other => panic!("expected Truncated, got {other:?}"),
        }
    }

    #[test]
    fn dimension_overflow_rejected() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&CTM_MAGIC);
        bytes.write_u32::<LittleEndian>(u32::MAX).unwrap();
        bytes.write_u32::<LittleEndian>(u32::MAX).unwrap();
        assert!(matches!(
            decode_ctm(&bytes),
            Err(Error::DimensionOverflow { .. })
        ));
    }

    #[test]
    fn file_round_trip() {
        let dir = std::env::temp_dir().join("cvgan_raster_test");
        std::fs::create_dir_all(&dir).unwrap();
        let ctm = dir.join("scene.ctm");
        let lbl = dir.join("scene.lbl");
        let raster = sample_raster();
        save_raster(&raster, &ctm, Some(&lbl)).unwrap();
        let back = load_raster(&ctm, Some(&lbl)).unwrap();
        assert_eq!(back, raster);
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
