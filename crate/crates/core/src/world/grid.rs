//! Rasterization of the target area into a uniform cell grid.

use serde::{Deserialize, Serialize};

use super::geometry::{point_in_free_space, Point};
use super::Scenario;
use crate::error::{Error, Result};

/// Uniform grid over the scenario bounds. A cell is free iff its center lies
/// inside the bounds and outside every obstacle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellGrid {
    width: usize,
    height: usize,
    origin: Point,
    resolution: f64,
    free: Vec<bool>,
    free_count: usize,
}

impl CellGrid {
    /// Builds a grid whose free cells are those for which `is_free(ix, iy)` holds.
    pub fn from_fn(
        width: usize,
        height: usize,
        origin: Point,
        resolution: f64,
        mut is_free: impl FnMut(usize, usize) -> bool,
    ) -> Self {
        let mut free = Vec::with_capacity(width * height);
        for iy in 0..height {
            for ix in 0..width {
                free.push(is_free(ix, iy));
            }
        }
        let free_count = free.iter().filter(|&&f| f).count();
        Self {
            width,
            height,
            origin,
            resolution,
            free,
            free_count,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }

    pub fn free_count(&self) -> usize {
        self.free_count
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.width + ix
    }

    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.width, idx / self.width)
    }

    pub fn is_free(&self, idx: usize) -> bool {
        self.free[idx]
    }

    pub fn is_free_at(&self, ix: usize, iy: usize) -> bool {
        ix < self.width && iy < self.height && self.free[self.index(ix, iy)]
    }

    /// World coordinates of the center of cell `idx`.
    pub fn center(&self, idx: usize) -> Point {
        let (ix, iy) = self.coords(idx);
        self.center_of(ix, iy)
    }

    pub fn center_of(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.origin.x + (ix as f64 + 0.5) * self.resolution,
            self.origin.y + (iy as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing `p`, if `p` lies on the grid.
    pub fn cell_at(&self, p: Point) -> Option<usize> {
        let fx = ((p.x - self.origin.x) / self.resolution).floor();
        let fy = ((p.y - self.origin.y) / self.resolution).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some(self.index(fx as usize, fy as usize))
    }

    /// Inclusive cell coordinate range overlapping the square `[c - r, c + r]²`,
    /// clipped to the grid. `None` when the square misses the grid.
    pub fn coord_range(&self, c: Point, r: f64) -> Option<((usize, usize), (usize, usize))> {
        let lo_x = ((c.x - r - self.origin.x) / self.resolution).floor();
        let hi_x = ((c.x + r - self.origin.x) / self.resolution).floor();
        let lo_y = ((c.y - r - self.origin.y) / self.resolution).floor();
        let hi_y = ((c.y + r - self.origin.y) / self.resolution).floor();
        if hi_x < 0.0 || hi_y < 0.0 || lo_x >= self.width as f64 || lo_y >= self.height as f64 {
            return None;
        }
        let clip = |v: f64, n: usize| v.max(0.0).min((n - 1) as f64) as usize;
        Some((
            (clip(lo_x, self.width), clip(hi_x, self.width)),
            (clip(lo_y, self.height), clip(hi_y, self.height)),
        ))
    }

    pub fn free_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.free
            .iter()
            .enumerate()
            .filter_map(|(i, &f)| f.then_some(i))
    }

    /// Copy of this grid keeping only free cells accepted by `keep`.
    pub fn restricted(&self, mut keep: impl FnMut(usize) -> bool) -> CellGrid {
        let free: Vec<bool> = self
            .free
            .iter()
            .enumerate()
            .map(|(i, &f)| f && keep(i))
            .collect();
        let free_count = free.iter().filter(|&&f| f).count();
        CellGrid {
            free,
            free_count,
            ..self.clone()
        }
    }

    /// 4-neighbours of cell `idx` that lie on the grid.
    pub fn neighbors4(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let (ix, iy) = self.coords(idx);
        let (w, h) = (self.width, self.height);
        [
            (ix > 0).then(|| idx - 1),
            (ix + 1 < w).then(|| idx + 1),
            (iy > 0).then(|| idx - w),
            (iy + 1 < h).then(|| idx + w),
        ]
        .into_iter()
        .flatten()
    }
}

/// Rasterizes the scenario's target area at its declared resolution.
pub fn rasterize(scenario: &Scenario) -> Result<CellGrid> {
    let bounds = scenario.bounds.rect();
    let res = scenario.bounds.resolution;
    if !(res > 0.0) {
        return Err(Error::invalid("raster resolution must be positive"));
    }
    let cells = |extent: f64| ((extent / res) - 1e-9).ceil().max(1.0) as usize;
    let width = cells(bounds.width());
    let height = cells(bounds.height());
    let origin = bounds.min;
    let grid = CellGrid::from_fn(width, height, origin, res, |ix, iy| {
        let c = Point::new(
            origin.x + (ix as f64 + 0.5) * res,
            origin.y + (iy as f64 + 0.5) * res,
        );
        point_in_free_space(&bounds, &scenario.obstacles, c)
    });
    if grid.free_count() == 0 {
        return Err(Error::invalid("target area has no free cells"));
    }
    Ok(grid)
}
