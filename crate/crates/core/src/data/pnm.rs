//! Binary PPM (P6) and PGM (P5) codecs, 8-bit.
//!
//! These are the bit-exactness contract for on-disk imagery: images round
//! trip within one 8-bit quantization step and identical inputs produce
//! byte-identical files.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::DataError;
use crate::types::{Image, LabelMap};

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

fn io_err(path: &Path, source: std::io::Error) -> DataError {
    DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn codec_err(path: &Path, detail: impl Into<String>) -> DataError {
    DataError::Codec {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

/// Reads the PNM header: magic, width, height, maxval. Returns the byte
/// offset where raster data starts.
fn parse_header<'a>(
    path: &Path,
    bytes: &'a [u8],
    magic: &str,
) -> Result<(usize, usize, usize), DataError> {
    if bytes.len() < 2 || &bytes[..2] != magic.as_bytes() {
        return Err(codec_err(path, format!("expected {magic} magic")));
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and '#' comments between tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(codec_err(path, "truncated header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(codec_err(path, "malformed header token"));
        }
        let token = std::str::from_utf8(&bytes[start..pos]).expect("digits are ascii");
        *field = token
            .parse()
            .map_err(|_| codec_err(path, "header value out of range"))?;
    }
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if maxval != 255 {
        return Err(codec_err(path, format!("unsupported maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(codec_err(path, "missing raster separator")),
    }
    Ok((w, h, pos))
}

/// Writes an RGB image as binary PPM.
pub fn write_ppm(path: &Path, image: &Image) -> Result<(), DataError> {
    let (h, w) = (image.height(), image.width());
    let mut buf = Vec::with_capacity(32 + 3 * h * w);
    write!(&mut buf, "P6\n{w} {h}\n255\n").expect("in-memory write");
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                buf.push(quantize(image.get(c, y, x)));
            }
        }
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Reads a binary PPM into an `[0,1]`-valued image.
pub fn read_ppm(path: &Path) -> Result<Image, DataError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let (w, h, start) = parse_header(path, &bytes, "P6")?;
    let expected = 3 * w * h;
    let raster = &bytes[start..];
    if raster.len() < expected {
        return Err(codec_err(
            path,
            format!("raster has {} bytes, expected {expected}", raster.len()),
        ));
    }
    let mut image = Image::new(h, w);
    for y in 0..h {
        for x in 0..w {
            let base = 3 * (y * w + x);
            for c in 0..3 {
                image.set(c, y, x, raster[base + c] as f32 / 255.0);
            }
        }
    }
    Ok(image)
}

/// Writes a binary label map as PGM: positive class white, background black.
pub fn write_pgm_label(path: &Path, label: &LabelMap) -> Result<(), DataError> {
    let (h, w) = (label.height(), label.width());
    let mut buf = Vec::with_capacity(32 + h * w);
    write!(&mut buf, "P5\n{w} {h}\n255\n").expect("in-memory write");
    for y in 0..h {
        for x in 0..w {
            buf.push(if label.get(y, x) == 1 { 255 } else { 0 });
        }
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Writes a gray map with values in `[0,1]` as binary PGM.
pub fn write_pgm_gray(path: &Path, height: usize, width: usize, data: &[f32]) -> Result<(), DataError> {
    assert_eq!(data.len(), height * width, "gray data length");
    let mut buf = Vec::with_capacity(32 + height * width);
    write!(&mut buf, "P5\n{width} {height}\n255\n").expect("in-memory write");
    buf.extend(data.iter().map(|&v| quantize(v)));
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

/// Reads a binary PGM into gray values in `[0,1]`.
pub fn read_pgm_gray(path: &Path) -> Result<(usize, usize, Vec<f32>), DataError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let (w, h, start) = parse_header(path, &bytes, "P5")?;
    let expected = w * h;
    let raster = &bytes[start..];
    if raster.len() < expected {
        return Err(codec_err(
            path,
            format!("raster has {} bytes, expected {expected}", raster.len()),
        ));
    }
    let data = raster[..expected].iter().map(|&b| b as f32 / 255.0).collect();
    Ok((h, w, data))
}

/// Reads a PGM and binarizes it into a label map: gray > 0.5 is positive.
pub fn read_pgm_label(path: &Path) -> Result<LabelMap, DataError> {
    let (h, w, gray) = read_pgm_gray(path)?;
    let data = gray.iter().map(|&g| u8::from(g > 0.5)).collect();
    Ok(LabelMap::from_vec(h, w, data).expect("binarized data is binary"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let mut img = Image::new(3, 4);
        for y in 0..3 {
            for x in 0..4 {
                for c in 0..3 {
                    img.set(c, y, x, ((c + 2 * y + 3 * x) as f32 / 20.0).min(1.0));
                }
            }
        }
        write_ppm(&path, &img).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!(back.height(), 3);
        assert_eq!(back.width(), 4);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 255.0 + 1e-6);
        }
    }

    #[test]
    fn label_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("label.pgm");
        let label = LabelMap::from_vec(2, 3, vec![0, 1, 0, 1, 1, 0]).unwrap();
        write_pgm_label(&path, &label).unwrap();
        let back = read_pgm_label(&path).unwrap();
        assert_eq!(label, back);
    }

    #[test]
    fn mid_gray_is_positive() {
        // 128/255 > 0.5, so an anti-aliased boundary pixel lands positive.
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gray.pgm");
        fs::write(&path, [b"P5\n1 1\n255\n".as_slice(), &[128u8]].concat()).unwrap();
        let label = read_pgm_label(&path).unwrap();
        assert_eq!(label.get(0, 0), 1);
        // 127/255 < 0.5 stays background.
        fs::write(&path, [b"P5\n1 1\n255\n".as_slice(), &[127u8]].concat()).unwrap();
        assert_eq!(read_pgm_label(&path).unwrap().get(0, 0), 0);
    }

    #[test]
    fn truncated_raster_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("short.pgm");
        fs::write(&path, b"P5\n4 4\n255\nab").unwrap();
        assert!(read_pgm_gray(&path).is_err());
    }

    #[test]
    fn header_comments_are_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.pgm");
        fs::write(&path, [b"P5\n# made by hand\n2 1\n255\n".as_slice(), &[0, 255]].concat())
            .unwrap();
        let (h, w, gray) = read_pgm_gray(&path).unwrap();
        assert_eq!((h, w), (1, 2));
        assert_eq!(gray, vec![0.0, 1.0]);
    }
}
