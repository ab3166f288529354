use std::path::Path;

use crate::model::{Pixel, Rect};

use super::GenerateError;

/// Grayscale raster used as a sampling weight map.
///
/// Read from plain-text PGM (`P2`): the header `P2 width height maxval`
/// followed by `width × height` integers, top row first; `#` starts a
/// comment running to the end of the line. The raster is stretched over the
/// sampling bounds by nearest-neighbour lookup with the top raster row at
/// the largest `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pub width: u32,
    pub height: u32,
    /// Row-major, top row first, normalized by `maxval`.
    pub weights: Vec<f64>,
    pub source: Option<String>,
}

impl WeightMap {
    pub fn new(width: u32, height: u32, weights: Vec<f64>) -> Result<Self, GenerateError> {
        if width == 0 || height == 0 {
            return Err(GenerateError::WeightMap("raster dimensions must be positive".into()));
        }
        if weights.len() != (width as usize) * (height as usize) {
            return Err(GenerateError::WeightMap(format!(
                "expected {} values, got {}",
                width as usize * height as usize,
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(GenerateError::WeightMap("weights must be finite and non-negative".into()));
        }
        Ok(WeightMap {
            width,
            height,
            weights,
            source: None,
        })
    }

    pub fn parse_pgm(text: &str) -> Result<Self, GenerateError> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let bad = |m: &str| GenerateError::WeightMap(m.to_string());
        if tokens.next() != Some("P2") {
            return Err(bad("missing P2 magic"));
        }
        let mut header = [0u32; 3];
        for h in &mut header {
            *h = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("malformed header"))?;
        }
        let [width, height, maxval] = header;
        if maxval == 0 {
            return Err(bad("maxval must be positive"));
        }
        let values = tokens
            .map(|t| {
                t.parse::<u32>()
                    .ok()
                    .filter(|&v| v <= maxval)
                    .map(|v| v as f64 / maxval as f64)
                    .ok_or_else(|| bad(&format!("bad sample `{t}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        WeightMap::new(width, height, values)
    }

    pub fn load(path: &Path) -> Result<Self, GenerateError> {
        let text = std::fs::read_to_string(path)?;
        let mut map = WeightMap::parse_pgm(&text)?;
        map.source = Some(path.display().to_string());
        Ok(map)
    }

    /// Weight of `p` when the raster is stretched over `bounds`.
    pub fn weight_at(&self, bounds: &Rect, p: Pixel) -> f64 {
        if !bounds.contains(p) {
            return 0.0;
        }
        let fx = (p.x - bounds.min_x) as u64 * self.width as u64 / bounds.width() as u64;
        let fy = (bounds.max_y - p.y) as u64 * self.height as u64 / bounds.height() as u64;
        self.weights[(fy * self.width as u64 + fx) as usize]
    }
}
