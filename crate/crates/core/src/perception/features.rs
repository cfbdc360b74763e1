//! BEV pillar statistics over the ego grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::PointCloud;

/// Channel layout of extracted maps.
pub mod channel {
    pub const OCCUPANCY: usize = 0;
    pub const LOG_COUNT: usize = 1;
    pub const MAX_Z: usize = 2;
    pub const MEAN_Z: usize = 3;
    pub const MEAN_INTENSITY: usize = 4;
    pub const COUNT: usize = 5;
}

/// Regular grid over the ego x-y plane; rows run along x, columns along y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub cell_size: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            x_range: [-140.0, 140.0],
            y_range: [-40.0, 40.0],
            cell_size: 4.0,
        }
    }
}

impl GridConfig {
    pub fn with_cell_size(cell_size: f64) -> Self {
        Self {
            cell_size,
            ..Self::default()
        }
    }

    pub fn rows(&self) -> usize {
        ((self.x_range[1] - self.x_range[0]) / self.cell_size - 1e-9).ceil() as usize
    }

    pub fn cols(&self) -> usize {
        ((self.y_range[1] - self.y_range[0]) / self.cell_size - 1e-9).ceil() as usize
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.x_range[0]) / self.cell_size).floor();
        let fj = ((y - self.y_range[0]) / self.cell_size).floor();
        if fi < 0.0 || fj < 0.0 {
            return None;
        }
        let (i, j) = (fi as usize, fj as usize);
        (i < self.rows() && j < self.cols()).then_some((i, j))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.x_range[0] + (i as f64 + 0.5) * self.cell_size,
            self.y_range[0] + (j as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_range[0] < self.x_range[1]
            && self.y_range[0] < self.y_range[1]
            && self.cell_size > 0.0
        {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid grid {self:?}")))
        }
    }
}

/// H x W x C grid of f32 features, stored row-major with channels innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct BevFeatureMap {
    pub grid: GridConfig,
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<f32>,
}

impl BevFeatureMap {
    pub fn zeros(grid: GridConfig, channels: usize) -> Self {
        let (rows, cols) = (grid.rows(), grid.cols());
        Self {
            grid,
            rows,
            cols,
            channels,
            data: vec![0.0; rows * cols * channels],
        }
    }

    pub fn from_data(grid: GridConfig, channels: usize, data: Vec<f32>) -> Result<Self> {
        let (rows, cols) = (grid.rows(), grid.cols());
        if data.len() != rows * cols * channels {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {rows}x{cols}x{channels} map",
                data.len()
            )));
        }
        Ok(Self {
            grid,
            rows,
            cols,
            channels,
            data,
        })
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.channels)
    }

    pub fn cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn cell(&self, i: usize, j: usize) -> &[f32] {
        let o = (i * self.cols + j) * self.channels;
        &self.data[o..o + self.channels]
    }

    pub fn cell_mut(&mut self, i: usize, j: usize) -> &mut [f32] {
        let o = (i * self.cols + j) * self.channels;
        &mut self.data[o..o + self.channels]
    }

    pub fn get(&self, i: usize, j: usize, c: usize) -> f32 {
        self.data[(i * self.cols + j) * self.channels + c]
    }

    /// Size of the dense map as 32-bit values.
    pub fn byte_size(&self) -> usize {
        self.data.len() * 4
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// Pillar statistics of `cloud`, which must already be in `ego_frame`.
/// Points outside the grid are ignored.
pub fn extract_bev_features(
    cloud: &PointCloud,
    grid: &GridConfig,
    ego_frame: &str,
) -> Result<BevFeatureMap> {
    if cloud.frame_id != ego_frame {
        return Err(Error::FrameMismatch {
            cloud: cloud.frame_id.clone(),
            expected: ego_frame.to_string(),
        });
    }
    extract_points(
        cloud.points.iter().map(|p| [p.x, p.y, p.z, p.intensity]),
        grid,
    )
}

pub(crate) fn extract_points(
    points: impl Iterator<Item = [f64; 4]>,
    grid: &GridConfig,
) -> Result<BevFeatureMap> {
    grid.validate()?;
    let (rows, cols) = (grid.rows(), grid.cols());
    // count, sum z, max z, sum intensity
    let mut acc = vec![(0u32, 0.0f64, f64::NEG_INFINITY, 0.0f64); rows * cols];
    for [x, y, z, inten] in points {
        if let Some((i, j)) = grid.cell_of(x, y) {
            let a = &mut acc[i * cols + j];
            a.0 += 1;
            a.1 += z;
            a.2 = a.2.max(z);
            a.3 += inten;
        }
    }
    let mut map = BevFeatureMap::zeros(*grid, channel::COUNT);
    for (k, a) in acc.iter().enumerate() {
        if a.0 == 0 {
            continue;
        }
        let n = a.0 as f64;
        let cell = &mut map.data[k * channel::COUNT..(k + 1) * channel::COUNT];
        cell[channel::OCCUPANCY] = 1.0;
        cell[channel::LOG_COUNT] = n.ln_1p() as f32;
        cell[channel::MAX_Z] = a.2 as f32;
        cell[channel::MEAN_Z] = (a.1 / n) as f32;
        cell[channel::MEAN_INTENSITY] = (a.3 / n) as f32;
    }
    Ok(map)
}
