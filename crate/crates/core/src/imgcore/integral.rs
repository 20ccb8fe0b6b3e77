use super::RasterImage;
use crate::Result;

/// Summed-area table over arbitrary non-negative integer values, with a zero border row and column.
#[derive(Clone, Debug)]
pub struct SummedArea {
    stride: usize,
    table: Vec<u64>,
}

impl SummedArea {
    pub fn build(width: usize, height: usize, value: impl Fn(usize, usize) -> u64) -> Self {
        let stride = width + 1;
        let mut table = vec![0u64; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0u64;
            for x in 0..width {
                row += value(x, y);
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
            }
        }
        Self { stride, table }
    }

    /// Sum over columns `x0..x1` and rows `y0..y1` (half-open).
    #[inline]
    pub fn sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        let s = self.stride;
        self.table[y1 * s + x1] + self.table[y0 * s + x0] - self.table[y0 * s + x1] - self.table[y1 * s + x0]
    }
}

/// Pixel and squared-pixel sums of a single-channel image.
#[derive(Clone, Debug)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: SummedArea,
    squares: SummedArea,
}

impl IntegralImage {
    pub fn build(img: &RasterImage) -> Result<Self> {
        img.require_gray("integral image")?;
        let (w, h) = img.dims();
        let sums = SummedArea::build(w, h, |x, y| img.get(x, y) as u64);
        let squares = SummedArea::build(w, h, |x, y| {
            let v = img.get(x, y) as u64;
            v * v
        });
        Ok(Self { width: w, height: h, sums, squares })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn rect_sum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        self.sums.sum(x0, y0, x1, y1)
    }

    #[inline]
    pub fn rect_sqsum(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u64 {
        self.squares.sum(x0, y0, x1, y1)
    }
}

/// Half-open bounds of a `side`-sized window centred on `c`, clipped to `0..len`.
#[inline]
pub(crate) fn clipped_window(c: usize, side: usize, len: usize) -> (usize, usize) {
    let half = side / 2;
    (c.saturating_sub(half), (c + half + 1).min(len))
}
