use super::GrayImage;

/// Decode an ASCII (`P2`) or binary (`P5`) graymap with maxval <= 255.
pub fn decode_pgm(bytes: &[u8]) -> Result<GrayImage, String> {
    let binary = match bytes.get(..2) {
        Some(b"P2") => false,
        Some(b"P5") => true,
        _ => return Err("not a PGM file (expected P2 or P5 magic)".into()),
    };
    let mut cursor = 2;
    let width = next_header_value(bytes, &mut cursor)?;
    let height = next_header_value(bytes, &mut cursor)?;
    let maxval = next_header_value(bytes, &mut cursor)?;
    if width == 0 || height == 0 {
        return Err(format!("degenerate dimensions {width}x{height}"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(format!(
            "unsupported bit depth: maxval {maxval} (only 8-bit graymaps are accepted)"
        ));
    }
    let count = width * height;
    let raw: Vec<usize> = if binary {
        // exactly one whitespace byte separates the header from the raster
        let start = cursor + 1;
        let data = bytes
            .get(start..start + count)
            .ok_or_else(|| format!("truncated raster: expected {count} bytes"))?;
        data.iter().map(|&b| b as usize).collect()
    } else {
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            values.push(next_header_value(bytes, &mut cursor)?);
        }
        values
    };
    if let Some(v) = raw.iter().find(|&&v| v > maxval) {
        return Err(format!("sample {v} exceeds maxval {maxval}"));
    }
    let scale = maxval as f64;
    GrayImage::new(width, height, raw.iter().map(|&v| v as f64 / scale).collect())
        .map_err(|e| e.to_string())
}

fn next_header_value(bytes: &[u8], cursor: &mut usize) -> Result<usize, String> {
    loop {
        match bytes.get(*cursor) {
            Some(b'#') => {
                while bytes.get(*cursor).is_some_and(|&b| b != b'\n') {
                    *cursor += 1;
                }
            }
            Some(b) if b.is_ascii_whitespace() => *cursor += 1,
            Some(_) => break,
            None => return Err("unexpected end of file".into()),
        }
    }
    let start = *cursor;
    while bytes.get(*cursor).is_some_and(|b| b.is_ascii_digit()) {
        *cursor += 1;
    }
    if start == *cursor {
        return Err(format!("expected a decimal number at byte {start}"));
    }
    std::str::from_utf8(&bytes[start..*cursor])
        .unwrap()
        .parse()
        .map_err(|e| format!("bad number at byte {start}: {e}"))
}

/// Encode 8-bit samples as a binary `P5` graymap.
pub fn encode_pgm_p5(width: usize, height: usize, samples: &[u8]) -> Vec<u8> {
    assert_eq!(samples.len(), width * height);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(samples);
    out
}
