use std::path::Path;

use super::{list_files, read_bytes, write_all_atomic, write_atomic};
use crate::error::{Error, Result};
use crate::volume::{MaskSlice, Volume};

/// Name of slice `index` in a written stack; zero padding keeps the
/// lexicographic order numeric.
pub fn slice_file_name(index: usize) -> String {
    format!("slice_{index:04}.pgm")
}

struct Header {
    width: usize,
    height: usize,
    maxval: usize,
    data_offset: usize,
}

fn parse_header(bytes: &[u8]) -> std::result::Result<Header, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("not a binary PGM (missing P5 magic)".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Whitespace and comments may separate header tokens.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err("malformed PGM header".into());
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("malformed PGM header")?;
    }
    // Exactly one whitespace byte precedes the raster.
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("malformed PGM header".into());
    }
    let [width, height, maxval] = fields;
    Ok(Header {
        width,
        height,
        maxval,
        data_offset: pos + 1,
    })
}

/// Decodes an 8-bit P5 image into a mask; nonzero pixels are foreground.
pub fn decode_pgm(bytes: &[u8], path: &Path) -> Result<MaskSlice> {
    let unreadable = |reason: String| Error::UnreadableFile {
        path: path.to_path_buf(),
        reason,
    };
    let header = parse_header(bytes).map_err(unreadable)?;
    if header.maxval == 0 || header.maxval > 255 {
        return Err(unreadable(format!("unsupported maxval {}", header.maxval)));
    }
    let n = header.width * header.height;
    let raster = &bytes[header.data_offset..];
    if raster.len() < n {
        return Err(Error::TruncatedFile {
            expected: header.data_offset + n,
            actual: bytes.len(),
        });
    }
    MaskSlice::new(
        header.width,
        header.height,
        raster[..n].iter().map(|&v| (v != 0) as u8).collect(),
    )
}

/// Encodes a mask as P5 with values 0 and 255.
pub fn encode_pgm(mask: &MaskSlice) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", mask.width(), mask.height()).into_bytes();
    out.extend(mask.data().iter().map(|&v| if v != 0 { 255u8 } else { 0 }));
    out
}

pub fn read_pgm(path: &Path) -> Result<MaskSlice> {
    decode_pgm(&read_bytes(path)?, path)
}

pub fn write_pgm(path: &Path, mask: &MaskSlice) -> Result<()> {
    write_atomic(path, &encode_pgm(mask))
}

/// Reads every `.pgm` in `dir`, in file-name order, as one binary volume.
pub fn read_mask_stack(dir: &Path) -> Result<Volume> {
    let files = list_files(dir, "pgm")?;
    if files.is_empty() {
        return Err(Error::UnreadableFile {
            path: dir.to_path_buf(),
            reason: "no .pgm files found".into(),
        });
    }
    let mut slices: Vec<MaskSlice> = Vec::with_capacity(files.len());
    for path in &files {
        let slice = read_pgm(path)?;
        if let Some(first) = slices.first() {
            let expected = (first.width(), first.height());
            let actual = (slice.width(), slice.height());
            if expected != actual {
                return Err(Error::InconsistentDimensions {
                    path: path.clone(),
                    expected,
                    actual,
                });
            }
        }
        slices.push(slice);
    }
    Volume::from_masks(&slices)
}

/// Writes a binary volume as `slice_0000.pgm`, `slice_0001.pgm`, ... in `dir`.
pub fn write_mask_stack(v: &Volume, dir: &Path) -> Result<()> {
    let files: Vec<(String, Vec<u8>)> = (0..v.depth())
        .map(|z| (slice_file_name(z), encode_pgm(&v.mask_slice(z))))
        .collect();
    write_all_atomic(dir, &files)
}
