//! Binary masks, the run-length codec, and IoU/box primitives.
//!
//! Runs are row-major and alternate zero-run, one-run, zero-run, ... starting
//! with a zero-run. This differs from dataset toolkits that encode
//! column-major; every plane in this toolkit is raster (row-major) order.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MaskError {
    #[error("mask dimension mismatch: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch { a_width: u32, a_height: u32, b_width: u32, b_height: u32 },
    #[error("run sum {got} does not match width*height = {expected}")]
    RunSumMismatch { expected: u64, got: u64 },
    #[error("zero-length run at index {index} (only the leading zero-run may be 0)")]
    InteriorZeroRun { index: usize },
    #[error("bit count {got} does not match width*height = {expected}")]
    BitCountMismatch { expected: usize, got: usize },
    #[error("malformed rle text: {0}")]
    MalformedText(String),
}

/// Dense row-major binary mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BitMask {
    pub fn zeros(width: u32, height: u32) -> BitMask {
        BitMask { width, height, bits: vec![false; (width as usize) * (height as usize)] }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<BitMask, MaskError> {
        let expected = (width as usize) * (height as usize);
        if bits.len() != expected {
            return Err(MaskError::BitCountMismatch { expected, got: bits.len() });
        }
        Ok(BitMask { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> BitMask {
        let mut bits = Vec::with_capacity((width as usize) * (height as usize));
        for row in 0..height {
            for col in 0..width {
                bits.push(f(row, col));
            }
        }
        BitMask { width, height, bits }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, row: u32, col: u32) -> bool {
        self.bits[(row as usize) * (self.width as usize) + col as usize]
    }

    #[inline]
    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        self.bits[(row as usize) * (self.width as usize) + col as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of set pixels.
    pub fn area(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    pub fn same_size(&self, other: &BitMask) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Run-length encoded mask; `runs` alternate zero/one counts starting with a
/// zero-run. Canonical form: only the leading run may be zero, and a zero-area
/// mask encodes as an empty run list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RleMask {
    pub width: u32,
    pub height: u32,
    pub runs: Vec<u32>,
}

impl RleMask {
    /// Check the structural invariants (run sum, canonical zero runs).
    pub fn validate(&self) -> Result<(), MaskError> {
        let expected = (self.width as u64) * (self.height as u64);
        let mut sum = 0u64;
        for (index, &run) in self.runs.iter().enumerate() {
            if run == 0 && index > 0 {
                return Err(MaskError::InteriorZeroRun { index });
            }
            sum += run as u64;
        }
        // A lone [0] is non-canonical: an empty image encodes as [].
        if self.runs.len() == 1 && self.runs[0] == 0 {
            return Err(MaskError::InteriorZeroRun { index: 0 });
        }
        if sum != expected {
            return Err(MaskError::RunSumMismatch { expected, got: sum });
        }
        Ok(())
    }

    /// The canonical byte form of the runs (little-endian u32s). Used as a
    /// deterministic tie-break key by fusion and metrics.
    pub fn run_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.runs.len() * 4);
        for &r in &self.runs {
            out.extend_from_slice(&r.to_le_bytes());
        }
        out
    }

    /// Fixture text form: `"W H: c0 c1 c2 ..."`.
    pub fn from_text(text: &str) -> Result<RleMask, MaskError> {
        let (dims, counts) = text
            .split_once(':')
            .ok_or_else(|| MaskError::MalformedText("missing ':'".into()))?;
        let mut it = dims.split_whitespace();
        let parse = |tok: Option<&str>, what: &str| -> Result<u32, MaskError> {
            tok.ok_or_else(|| MaskError::MalformedText(format!("missing {what}")))?
                .parse::<u32>()
                .map_err(|e| MaskError::MalformedText(format!("bad {what}: {e}")))
        };
        let width = parse(it.next(), "width")?;
        let height = parse(it.next(), "height")?;
        if it.next().is_some() {
            return Err(MaskError::MalformedText("extra token before ':'".into()));
        }
        let mut runs = Vec::new();
        for tok in counts.split_whitespace() {
            runs.push(
                tok.parse::<u32>()
                    .map_err(|e| MaskError::MalformedText(format!("bad count: {e}")))?,
            );
        }
        let rle = RleMask { width, height, runs };
        rle.validate()?;
        Ok(rle)
    }
}

impl fmt::Display for RleMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}:", self.width, self.height)?;
        for r in &self.runs {
            write!(f, " {r}")?;
        }
        Ok(())
    }
}

/// Canonical row-major run-length encoding; unique for a given mask.
pub fn rle_encode(mask: &BitMask) -> RleMask {
    let mut runs = Vec::new();
    let mut current = false;
    let mut count: u32 = 0;
    for &bit in mask.bits() {
        if bit == current {
            count += 1;
        } else {
            runs.push(count);
            current = bit;
            count = 1;
        }
    }
    if count > 0 {
        runs.push(count);
    }
    RleMask { width: mask.width, height: mask.height, runs }
}

/// Inverse of [`rle_encode`]; rejects malformed run lists.
pub fn rle_decode(rle: &RleMask) -> Result<BitMask, MaskError> {
    rle.validate()?;
    let mut bits = Vec::with_capacity((rle.width as usize) * (rle.height as usize));
    let mut value = false;
    for &run in &rle.runs {
        for _ in 0..run {
            bits.push(value);
        }
        value = !value;
    }
    Ok(BitMask { width: rle.width, height: rle.height, bits })
}

/// |a ∩ b| / |a ∪ b|; 0 when both masks are empty.
pub fn mask_iou(a: &BitMask, b: &BitMask) -> Result<f64, MaskError> {
    if !a.same_size(b) {
        return Err(MaskError::DimensionMismatch {
            a_width: a.width,
            a_height: a.height,
            b_width: b.width,
            b_height: b.height,
        });
    }
    let mut inter = 0u64;
    let mut union = 0u64;
    for (&x, &y) in a.bits.iter().zip(&b.bits) {
        if x && y {
            inter += 1;
        }
        if x || y {
            union += 1;
        }
    }
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Axis-aligned pixel box with inclusive coordinates, so a single pixel is
/// `x_min == x_max, y_min == y_max` with area 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl BBox {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Option<BBox> {
        if x_min <= x_max && y_min <= y_max {
            Some(BBox { x_min, y_min, x_max, y_max })
        } else {
            None
        }
    }

    /// Pixel count, inclusive coordinates.
    pub fn area(&self) -> u64 {
        ((self.x_max - self.x_min + 1) as u64) * ((self.y_max - self.y_min + 1) as u64)
    }

    pub fn fits_in(&self, width: u32, height: u32) -> bool {
        self.x_max < width && self.y_max < height
    }

    /// Fill the box into a dense mask of the given frame size.
    pub fn fill(&self, width: u32, height: u32) -> BitMask {
        BitMask::from_fn(width, height, |row, col| {
            row >= self.y_min && row <= self.y_max && col >= self.x_min && col <= self.x_max
        })
    }
}

/// Intersection area / union area with inclusive pixel counts.
pub fn box_iou(a: &BBox, b: &BBox) -> f64 {
    let ix_min = a.x_min.max(b.x_min);
    let iy_min = a.y_min.max(b.y_min);
    let ix_max = a.x_max.min(b.x_max);
    let iy_max = a.y_max.min(b.y_max);
    if ix_min > ix_max || iy_min > iy_max {
        return 0.0;
    }
    let inter = ((ix_max - ix_min + 1) as u64) * ((iy_max - iy_min + 1) as u64);
    let union = a.area() + b.area() - inter;
    inter as f64 / union as f64
}

/// Tight bounds over set pixels; `None` for an empty mask (never a
/// zero-area box).
pub fn bbox_of_mask(mask: &BitMask) -> Option<BBox> {
    let mut x_min = u32::MAX;
    let mut y_min = u32::MAX;
    let mut x_max = 0u32;
    let mut y_max = 0u32;
    let mut any = false;
    for row in 0..mask.height {
        let base = (row as usize) * (mask.width as usize);
        for col in 0..mask.width {
            if mask.bits[base + col as usize] {
                any = true;
                x_min = x_min.min(col);
                x_max = x_max.max(col);
                y_min = y_min.min(row);
                y_max = y_max.max(row);
            }
        }
    }
    if any {
        Some(BBox { x_min, y_min, x_max, y_max })
    } else {
        None
    }
}
