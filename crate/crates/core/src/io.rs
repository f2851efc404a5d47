//! SFR1 on-disk codec and PGM image export.
//!
//! SFR1 layout: magic `SFR1`, then u32 LE height, width, channel count
//! (1 or 2) and flags (bit 0 set = second channel is a validity mask),
//! followed by channel-major, row-major IEEE-754 f32 LE payload. Values are
//! stored in 32 bits; in memory fields are f64.

use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;

pub const MAGIC: [u8; 4] = *b"SFR1";
const HEADER_LEN: usize = 20;
const FLAG_VALIDITY_MASK: u32 = 1;

/// Serialize a field to SFR1 bytes. Every value must fit 32-bit storage.
pub fn field_to_bytes(field: &ScalarField) -> Result<Vec<u8>> {
    let channels: u32 = if field.valid_mask().is_some() { 2 } else { 1 };
    let flags: u32 = if channels == 2 { FLAG_VALIDITY_MASK } else { 0 };
    let n = field.len();
    let mut out = Vec::with_capacity(HEADER_LEN + channels as usize * n * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&(field.height() as u32).to_le_bytes());
    out.extend_from_slice(&(field.width() as u32).to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&flags.to_le_bytes());
    for (index, &v) in field.values().iter().enumerate() {
        let narrow = v as f32;
        if !narrow.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "value {v} at flat index {index} does not fit 32-bit storage"
            )));
        }
        out.extend_from_slice(&narrow.to_le_bytes());
    }
    if let Some(mask) = field.valid_mask() {
        for &m in mask {
            out.extend_from_slice(&(m as f32).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn write_field(field: &ScalarField, path: &Path) -> Result<()> {
    let bytes = field_to_bytes(field)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

/// Decode SFR1 bytes. The returned field has the default planar geometry;
/// callers attach the real geometry where they know it.
pub fn field_from_bytes(bytes: &[u8]) -> Result<ScalarField> {
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::BadHeader(format!(
            "header needs {HEADER_LEN} bytes, file has {}",
            bytes.len()
        )));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let height = word(4);
    let width = word(8);
    let channels = word(12);
    let flags = word(16);
    if height == 0 || width == 0 {
        return Err(Error::BadHeader(format!("zero dimension: {height}x{width}")));
    }
    if !(channels == 1 || channels == 2) {
        return Err(Error::BadHeader(format!("channel count {channels}, expected 1 or 2")));
    }
    let expected_flags = if channels == 2 { FLAG_VALIDITY_MASK } else { 0 };
    if flags != expected_flags {
        return Err(Error::BadHeader(format!(
            "flags {flags:#x} invalid for {channels} channel(s)"
        )));
    }
    let pixels = height as u64 * width as u64;
    let payload = pixels
        .checked_mul(channels as u64)
        .and_then(|n| n.checked_mul(4))
        .ok_or(Error::DimensionOverflow {
            height: height as u64,
            width: width as u64,
            channels: channels as u64,
        })?;
    if payload > (usize::MAX as u64 - HEADER_LEN as u64) {
        return Err(Error::DimensionOverflow {
            height: height as u64,
            width: width as u64,
            channels: channels as u64,
        });
    }
    let found = (bytes.len() - HEADER_LEN) as u64;
    if found < payload {
        return Err(Error::TruncatedPayload {
            expected: payload,
            found,
        });
    }
    if found > payload {
        return Err(Error::TrailingData {
            extra: found - payload,
        });
    }
    let n = pixels as usize;
    let mut values = Vec::with_capacity(n);
    let mut offset = HEADER_LEN;
    for index in 0..n {
        let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::NonFinite { index });
        }
        values.push(v as f64);
        offset += 4;
    }
    let field = ScalarField::new(height as usize, width as usize, values)?;
    if channels == 2 {
        let mut mask = Vec::with_capacity(n);
        for index in 0..n {
            let v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            offset += 4;
            if v == 0.0 {
                mask.push(0u8);
            } else if v == 1.0 {
                mask.push(1u8);
            } else {
                return Err(Error::BadMask(format!(
                    "mask entry {v} at flat index {index} is neither 0 nor 1"
                )));
            }
        }
        return field.with_valid_mask(mask);
    }
    Ok(field)
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let bytes = std::fs::read(path)?;
    field_from_bytes(&bytes)
}

/// Render a field to binary PGM (P5, maxval 255). Values map through
/// round(255 * clamp((v - lo) / (hi - lo), 0, 1)); masked-out pixels render 0.
pub fn pgm_bytes(field: &ScalarField, lo: f64, hi: f64) -> Result<Vec<u8>> {
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "bad display range [{lo}, {hi}]"
        )));
    }
    let mut out = format!("P5\n{} {}\n255\n", field.width(), field.height()).into_bytes();
    let span = hi - lo;
    for (i, &v) in field.values().iter().enumerate() {
        let masked_out = field.valid_mask().is_some_and(|m| m[i] == 0);
        let gray = if masked_out {
            0u8
        } else {
            (255.0 * ((v - lo) / span).clamp(0.0, 1.0)).round() as u8
        };
        out.push(gray);
    }
    Ok(out)
}

pub fn export_pgm(field: &ScalarField, lo: f64, hi: f64, path: &Path) -> Result<()> {
    let bytes = pgm_bytes(field, lo, hi)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header(height: u32, width: u32, channels: u32, flags: u32) -> Vec<u8> {
        let mut b = MAGIC.to_vec();
        b.extend_from_slice(&height.to_le_bytes());
        b.extend_from_slice(&width.to_le_bytes());
        b.extend_from_slice(&channels.to_le_bytes());
        b.extend_from_slice(&flags.to_le_bytes());
        b
    }

    #[test]
    fn round_trip_small_field() {
        let f = ScalarField::new(2, 3, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let bytes = field_to_bytes(&f).unwrap();
        let back = field_from_bytes(&bytes).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn round_trip_with_mask() {
        let f = ScalarField::new(2, 2, vec![1.5, -2.25, 0.0, 8.0])
            .unwrap()
            .with_valid_mask(vec![1, 0, 1, 1])
            .unwrap();
        let back = field_from_bytes(&field_to_bytes(&f).unwrap()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn single_pixel_layout() {
        // 20-byte header plus one f32.
        let f = ScalarField::zeros(1, 1).unwrap();
        let bytes = field_to_bytes(&f).unwrap();
        assert_eq!(bytes.len(), 24);
        assert_eq!(&bytes[..4], b"SFR1");
    }

    #[test]
    fn serialization_is_deterministic() {
        let f = ScalarField::new(3, 4, (0..12).map(|i| i as f64 * 0.37).collect()).unwrap();
        assert_eq!(field_to_bytes(&f).unwrap(), field_to_bytes(&f).unwrap());
    }

    #[test]
    fn payload_size_matches_grid() {
        let f = ScalarField::zeros(94, 189).unwrap();
        let bytes = field_to_bytes(&f).unwrap();
        assert_eq!(bytes.len(), 20 + 94 * 189 * 4);
        let wide = ScalarField::zeros(180, 360).unwrap();
        let back = field_from_bytes(&field_to_bytes(&wide).unwrap()).unwrap();
        assert_eq!(back.len(), 64800);
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = field_to_bytes(&ScalarField::zeros(1, 1).unwrap()).unwrap();
        bytes[..4].copy_from_slice(b"XXXX");
        assert!(matches!(field_from_bytes(&bytes), Err(Error::BadMagic)));
    }

    #[test]
    fn rejects_zero_dimension() {
        let mut bytes = header(0, 5, 1, 0);
        bytes.extend_from_slice(&[0u8; 4]);
        assert!(matches!(field_from_bytes(&bytes), Err(Error::BadHeader(_))));
    }

    #[test]
    fn rejects_bad_channel_count_and_flags() {
        let bytes = header(1, 1, 3, 0);
        assert!(matches!(field_from_bytes(&bytes), Err(Error::BadHeader(_))));
        // Two channels require the mask flag.
        let bytes = header(1, 1, 2, 0);
        assert!(matches!(field_from_bytes(&bytes), Err(Error::BadHeader(_))));
        // One channel must not set it.
        let bytes = header(1, 1, 1, 1);
        assert!(matches!(field_from_bytes(&bytes), Err(Error::BadHeader(_))));
    }

    #[test]
    fn rejects_truncated_and_trailing() {
        let good = field_to_bytes(&ScalarField::zeros(2, 2).unwrap()).unwrap();
        let short = &good[..good.len() - 3];
        assert!(matches!(
            field_from_bytes(short),
            Err(Error::TruncatedPayload { expected: 16, found: 13 })
        ));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(field_from_bytes(&long), Err(Error::TrailingData { extra: 1 })));
    }

    #[test]
    fn rejects_non_finite_payload() {
        let mut bytes = header(1, 1, 1, 0);
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(field_from_bytes(&bytes), Err(Error::NonFinite { index: 0 })));
        let mut bytes = header(1, 1, 1, 0);
        bytes.extend_from_slice(&f32::INFINITY.to_le_bytes());
        assert!(field_from_bytes(&bytes).is_err());
    }

    #[test]
    fn rejects_non_binary_mask_channel() {
        let mut bytes = header(1, 1, 2, 1);
        bytes.extend_from_slice(&1.0f32.to_le_bytes());
        bytes.extend_from_slice(&0.5f32.to_le_bytes());
        assert!(matches!(field_from_bytes(&bytes), Err(Error::BadMask(_))));
    }

    #[test]
    fn rejects_values_too_large_for_storage() {
        let f = ScalarField::new(1, 1, vec![1e300]).unwrap();
        assert!(field_to_bytes(&f).is_err());
    }

    #[test]
    fn dimension_overflow_detected() {
        let bytes = header(u32::MAX, u32::MAX, 2, 1);
        match field_from_bytes(&bytes) {
            Err(Error::DimensionOverflow { .. }) | Err(Error::TruncatedPayload { .. }) => {}
            other => panic!("expected overflow rejection, got {other:?}"),
        }
    }

    #[test]
    fn pgm_grayscale_mapping() {
        let f = ScalarField::new(1, 3, vec![0.0, 0.5, 1.0]).unwrap();
        let bytes = pgm_bytes(&f, 0.0, 1.0).unwrap();
        let head = b"P5\n3 1\n255\n";
        assert_eq!(&bytes[..head.len()], head);
        // lo -> 0, midpoint -> 128 (rounds half away from zero), hi -> 255.
        assert_eq!(&bytes[head.len()..], &[0u8, 128, 255]);
    }

    #[test]
    fn pgm_clamps_out_of_range() {
        let f = ScalarField::new(1, 2, vec![-10.0, 10.0]).unwrap();
        let bytes = pgm_bytes(&f, 0.0, 1.0).unwrap();
        assert_eq!(&bytes[bytes.len() - 2..], &[0u8, 255]);
    }

    #[test]
    fn pgm_masked_pixels_render_black() {
        let f = ScalarField::new(1, 2, vec![1.0, 1.0])
            .unwrap()
            .with_valid_mask(vec![1, 0])
            .unwrap();
        let bytes = pgm_bytes(&f, 0.0, 1.0).unwrap();
        assert_eq!(&bytes[bytes.len() - 2..], &[255u8, 0]);
    }

    #[test]
    fn pgm_rejects_empty_range() {
        let f = ScalarField::zeros(1, 1).unwrap();
        assert!(pgm_bytes(&f, 1.0, 1.0).is_err());
        assert!(pgm_bytes(&f, 2.0, 1.0).is_err());
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("frame.sfr");
        let f = ScalarField::new(3, 2, vec![0.5, -1.5, 2.0, 3.5, -4.0, 5.25]).unwrap();
        write_field(&f, &path).unwrap();
        assert_eq!(read_field(&path).unwrap(), f);
    }
}
