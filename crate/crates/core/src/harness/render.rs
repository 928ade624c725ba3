//! Static PPM (P6) pictures of an episode: obstacles grey, covered cells
//! blue, the area swept by the stations' rendezvous disc green, robot paths
//! as polylines and interferers red.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use super::trace::{EpisodeTrace, Frame};
use crate::coverage::CoverageGrid;
use crate::error::{Error, Result};
use crate::world::{rasterize, Point, Scenario};

type Rgb = [u8; 3];

const FREE: Rgb = [255, 255, 255];
const OBSTACLE: Rgb = [128, 128, 128];
const COVERED: Rgb = [110, 150, 235];
const STATION_RANGE: Rgb = [120, 215, 120];
const COVERED_IN_RANGE: Rgb = [90, 180, 170];
const INTERFERER: Rgb = [220, 30, 30];
const STATION: Rgb = [20, 110, 20];
const WORKER_PATHS: [Rgb; 6] = [
    [20, 20, 20],
    [150, 60, 160],
    [200, 120, 0],
    [0, 120, 140],
    [120, 80, 40],
    [60, 60, 170],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RenderOptions {
    /// Pixels per grid cell.
    pub scale: usize,
    /// Number of steps to draw; `None` draws the whole trace.
    pub upto: Option<usize>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            scale: 4,
            upto: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<Rgb>,
}

impl Image {
    fn new(width: usize, height: usize, fill: Rgb) -> Self {
        Self {
            width,
            height,
            pixels: vec![fill; width * height],
        }
    }

    fn put(&mut self, x: i64, y: i64, c: Rgb) {
        if x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height {
            let i = y as usize * self.width + x as usize;
            self.pixels[i] = c;
        }
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Binary PPM bytes.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }
}

/// World-to-pixel mapping with the y axis pointing up.
struct View {
    origin: Point,
    px_per_m: f64,
    height: usize,
}

impl View {
    fn px(&self, p: Point) -> (f64, f64) {
        let x = (p.x - self.origin.x) * self.px_per_m;
        let y = self.height as f64 - (p.y - self.origin.y) * self.px_per_m;
        (x, y)
    }

    fn world(&self, x: usize, y: usize) -> Point {
        Point::new(
            self.origin.x + (x as f64 + 0.5) / self.px_per_m,
            self.origin.y + (self.height as f64 - y as f64 - 0.5) / self.px_per_m,
        )
    }
}

fn line(img: &mut Image, view: &View, a: Point, b: Point, c: Rgb) {
    let (x0, y0) = view.px(a);
    let (x1, y1) = view.px(b);
    let n = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
    for k in 0..=n {
        let t = k as f64 / n as f64;
        img.put(
            (x0 + (x1 - x0) * t).floor() as i64,
            (y0 + (y1 - y0) * t).floor() as i64,
            c,
        );
    }
}

fn disc(img: &mut Image, view: &View, center: Point, radius: f64, c: Rgb) {
    let (cx, cy) = view.px(center);
    let r = (radius * view.px_per_m).max(1.0);
    let (x0, x1) = ((cx - r).floor() as i64, (cx + r).ceil() as i64);
    let (y0, y1) = ((cy - r).floor() as i64, (cy + r).ceil() as i64);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            if dx * dx + dy * dy <= r * r {
                img.put(x, y, c);
            }
        }
    }
}

fn frames(trace: &EpisodeTrace, upto: usize) -> impl Iterator<Item = &Frame> {
    std::iter::once(&trace.header.initial).chain(trace.steps.iter().take(upto).map(|r| &r.state))
}

/// Coverage after the first `upto` steps, replayed from recorded positions:
/// a worker sweeps when it ends a step undocked with charge left.
pub fn replay_coverage(
    scenario: &Scenario,
    trace: &EpisodeTrace,
    upto: usize,
) -> Result<CoverageGrid> {
    let grid = Arc::new(rasterize(scenario)?);
    let mut cov = CoverageGrid::new(grid, trace.header.initial.workers.len());
    let r = scenario.cover_radius();
    for rec in trace.steps.iter().take(upto) {
        for (i, w) in rec.state.workers.iter().enumerate() {
            if w.docked_to.is_none() && w.energy > 0.0 {
                cov.sweep(i, Point::new(w.x, w.y), r);
            }
        }
    }
    Ok(cov)
}

pub fn render_trace(
    scenario: &Scenario,
    trace: &EpisodeTrace,
    opts: RenderOptions,
) -> Result<Image> {
    if opts.scale == 0 {
        return Err(Error::invalid("render scale must be positive"));
    }
    let upto = opts
        .upto
        .unwrap_or(trace.steps.len())
        .min(trace.steps.len());
    let cov = replay_coverage(scenario, trace, upto)?;
    let grid = cov.grid();
    let (w, h) = (grid.width() * opts.scale, grid.height() * opts.scale);
    let view = View {
        origin: grid.origin(),
        px_per_m: opts.scale as f64 / grid.resolution(),
        height: h,
    };
    let eps = scenario.energy.rendezvous_radius;
    let station_pts: Vec<Point> = frames(trace, upto)
        .flat_map(|f| f.stations.iter().map(|s| Point::new(s.x, s.y)))
        .collect();
    let mut img = Image::new(w, h, FREE);
    for y in 0..h {
        for x in 0..w {
            let (cx, cy) = (x / opts.scale, grid.height() - 1 - y / opts.scale);
            let idx = grid.index(cx, cy);
            let c = if !grid.is_free(idx) {
                OBSTACLE
            } else {
                let p = view.world(x, y);
                let in_range = station_pts.iter().any(|s| s.distance(p) <= eps);
                match (cov.is_covered(idx), in_range) {
                    (true, true) => COVERED_IN_RANGE,
                    (true, false) => COVERED,
                    (false, true) => STATION_RANGE,
                    (false, false) => FREE,
                }
            };
            img.pixels[y * w + x] = c;
        }
    }
    let path: Vec<&Frame> = frames(trace, upto).collect();
    for pair in path.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (i, (p, q)) in a.workers.iter().zip(&b.workers).enumerate() {
            line(
                &mut img,
                &view,
                Point::new(p.x, p.y),
                Point::new(q.x, q.y),
                WORKER_PATHS[i % WORKER_PATHS.len()],
            );
        }
        for (p, q) in a.stations.iter().zip(&b.stations) {
            line(
                &mut img,
                &view,
                Point::new(p.x, p.y),
                Point::new(q.x, q.y),
                STATION,
            );
        }
    }
    let last = path[path.len() - 1];
    let ir = scenario.interferer.radius;
    for q in &last.interferers {
        disc(&mut img, &view, Point::new(q.x, q.y), ir, INTERFERER);
    }
    for s in &last.stations {
        disc(
            &mut img,
            &view,
            Point::new(s.x, s.y),
            scenario.station_limits().body_radius,
            STATION,
        );
    }
    for (i, wr) in last.workers.iter().enumerate() {
        let c = WORKER_PATHS[i % WORKER_PATHS.len()];
        disc(
            &mut img,
            &view,
            Point::new(wr.x, wr.y),
            scenario.worker_limits().body_radius,
            c,
        );
    }
    Ok(img)
}

pub fn save_ppm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, img.to_ppm())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::episode::{run_episode, run_planner};
    use crate::planners::{PlannerKind, Scripted};

    #[test]
    fn replayed_coverage_matches_recorded_counts() {
        let mut s = Scenario::minimal(16.0, 16.0);
        s.interferer.count = 2;
        let (_, t) = run_planner(&s, PlannerKind::MobileBcd, 1).unwrap();
        for k in [1, t.steps.len() / 2, t.steps.len()] {
            let cov = replay_coverage(&s, &t, k).unwrap();
            assert_eq!(cov.covered_count(), t.steps[k - 1].covered);
        }
    }

    #[test]
    fn finished_episode_has_no_white_free_pixels() {
        let s = Scenario::minimal(16.0, 16.0);
        let (m, t) = run_planner(&s, PlannerKind::StaticMstc, 0).unwrap();
        assert!(m.finished());
        let img = render_trace(&s, &t, RenderOptions::default()).unwrap();
        assert!(img.pixels.iter().all(|&p| p != FREE));
    }

    #[test]
    fn idle_trace_draws_no_paths_and_renders_identically() {
        let mut s = Scenario::minimal(10.0, 10.0);
        s.max_steps = 5;
        s.interferer.count = 0;
        let (_, t) = run_episode(&s, &mut Scripted::new(Vec::new()), 0, "idle").unwrap();
        let a = render_trace(&s, &t, RenderOptions::default()).unwrap();
        let b = render_trace(&s, &t, RenderOptions::default()).unwrap();
        assert_eq!(a.to_ppm(), b.to_ppm());
        assert!(a.to_ppm().starts_with(b"P6\n40 40\n255\n"));
        // Nothing moves after the first sweep, so later steps add nothing.
        let first = render_trace(
            &s,
            &t,
            RenderOptions {
                scale: 4,
                upto: Some(1),
            },
        )
        .unwrap();
        assert_eq!(first, a);
    }
}
