//! Raster previews of a map: occupancy, zones, topology, products and a
//! route, written as PNG.

use crate::ingest::ProductRecord;
use crate::routing::RoutePlan;
use crate::spatial::{CellState, GridPoint, OccupancyGrid, WorldPoint};
use crate::topology::{NodeKind, TopologyGraph};
use crate::zones::ZoneOverlay;
use image::{ImageFormat, Rgb, RgbImage};
use serde::{Deserialize, Serialize};
use std::io::Cursor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderOptions {
    /// Pixels per grid cell.
    pub scale: u32,
    pub zones: bool,
    pub topology: bool,
    pub products: bool,
    /// Length of the scale bar, meters.
    pub scale_bar: f64,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self { scale: 2, zones: true, topology: true, products: true, scale_bar: 1.0 }
    }
}

/// Layers drawn on top of the occupancy raster.
#[derive(Default, Clone, Copy)]
pub struct Layers<'a> {
    pub overlay: Option<&'a ZoneOverlay>,
    pub topology: Option<&'a TopologyGraph>,
    pub products: &'a [ProductRecord],
    pub route: Option<&'a RoutePlan>,
}

const FREE: Rgb<u8> = Rgb([255, 255, 255]);
const OCCUPIED: Rgb<u8> = Rgb([40, 40, 40]);
const UNKNOWN: Rgb<u8> = Rgb([190, 190, 190]);
const EDGE: Rgb<u8> = Rgb([60, 110, 220]);
const PRODUCT: Rgb<u8> = Rgb([230, 140, 0]);
const ROUTE: Rgb<u8> = Rgb([220, 30, 30]);
const START: Rgb<u8> = Rgb([20, 160, 60]);
const BAR: Rgb<u8> = Rgb([0, 0, 0]);

/// Pastel color for zone `i`, spread around the hue circle.
pub fn zone_color(i: usize) -> Rgb<u8> {
    let hue = (i as f64 * 0.618_033_988_75).fract() * 6.0;
    let x = 1.0 - (hue % 2.0 - 1.0).abs();
    let (r, g, b) = match hue as u32 {
        0 => (1.0, x, 0.0),
        1 => (x, 1.0, 0.0),
        2 => (0.0, 1.0, x),
        3 => (0.0, x, 1.0),
        4 => (x, 0.0, 1.0),
        _ => (1.0, 0.0, x),
    };
    let pastel = |c: f64| (255.0 * (0.55 + 0.45 * c)) as u8;
    Rgb([pastel(r), pastel(g), pastel(b)])
}

struct Canvas {
    img: RgbImage,
    scale: f64,
    res: f64,
    origin: WorldPoint,
    rows: usize,
}

impl Canvas {
    fn to_px(&self, p: WorldPoint) -> (i64, i64) {
        let x = (p.x - self.origin.x) / self.res * self.scale;
        let y = (self.rows as f64 - (p.y - self.origin.y) / self.res) * self.scale;
        (x.floor() as i64, y.floor() as i64)
    }

    fn put(&mut self, x: i64, y: i64, c: Rgb<u8>) {
        if x >= 0 && y >= 0 && (x as u32) < self.img.width() && (y as u32) < self.img.height() {
            self.img.put_pixel(x as u32, y as u32, c);
        }
    }

    fn disc(&mut self, cx: i64, cy: i64, r: i64, c: Rgb<u8>) {
        for dy in -r..=r {
            for dx in -r..=r {
                if dx * dx + dy * dy <= r * r {
                    self.put(cx + dx, cy + dy, c);
                }
            }
        }
    }

    fn ring(&mut self, cx: i64, cy: i64, r: i64, c: Rgb<u8>) {
        for dy in -r..=r {
            for dx in -r..=r {
                let d = dx * dx + dy * dy;
                if d <= r * r && d >= (r - 2).max(0).pow(2) {
                    self.put(cx + dx, cy + dy, c);
                }
            }
        }
    }

    fn line(&mut self, a: WorldPoint, b: WorldPoint, width: i64, c: Rgb<u8>) {
        let (x0, y0) = self.to_px(a);
        let (x1, y1) = self.to_px(b);
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).max(1);
        for i in 0..=steps {
            let t = i as f64 / steps as f64;
            let x = x0 as f64 + t * (x1 - x0) as f64;
            let y = y0 as f64 + t * (y1 - y0) as f64;
            self.disc(x.round() as i64, y.round() as i64, width / 2, c);
        }
    }
}

pub fn render_map(grid: &OccupancyGrid, layers: Layers<'_>, opts: &RenderOptions) -> RgbImage {
    let s = opts.scale.max(1);
    let (w, h) = (grid.width() as u32, grid.height() as u32);
    let mut cv = Canvas {
        img: RgbImage::new(w * s, h * s),
        scale: s as f64,
        res: grid.resolution(),
        origin: grid.origin(),
        rows: grid.height(),
    };
    let overlay = layers.overlay.filter(|o| opts.zones && o.width == grid.width() && o.height == grid.height());
    for row in 0..h {
        for col in 0..w {
            let state = grid.get(GridPoint::new(col as i32, row as i32));
            let mut c = match state {
                CellState::Free => FREE,
                CellState::Occupied => OCCUPIED,
                CellState::Unknown => UNKNOWN,
            };
            if let (CellState::Free, Some(o)) = (state, overlay) {
                if let Some(z) = o.cells[row as usize * o.width + col as usize] {
                    c = zone_color(z as usize);
                }
            }
            // image rows run top-down, grid rows bottom-up
            let py = (h - 1 - row) * s;
            for dy in 0..s {
                for dx in 0..s {
                    cv.img.put_pixel(col * s + dx, py + dy, c);
                }
            }
        }
    }
    let r = (s as i64).max(2);
    if let (true, Some(g)) = (opts.topology, layers.topology) {
        for e in &g.edges {
            cv.line(g.nodes[e.a].position(), g.nodes[e.b].position(), 1, EDGE);
        }
        for n in &g.nodes {
            let (x, y) = cv.to_px(n.position());
            let c = match n.kind {
                NodeKind::Junction => Rgb([20, 60, 160]),
                NodeKind::Turn => Rgb([120, 60, 180]),
                _ => Rgb([90, 90, 200]),
            };
            cv.disc(x, y, r, c);
        }
    }
    if opts.products {
        for p in layers.products {
            let (x, y) = cv.to_px(p.position());
            cv.disc(x, y, r / 2 + 1, PRODUCT);
        }
    }
    if let Some(route) = layers.route {
        let pts = route.points();
        for w in pts.windows(2) {
            cv.line(w[0], w[1], 3, ROUTE);
        }
        let (x, y) = cv.to_px(route.start);
        cv.disc(x, y, 2 * r, START);
        if let Some(&stop) = pts.first() {
            cv.line(route.start, stop, 1, START);
        }
        let (x, y) = cv.to_px(WorldPoint::new(route.goal.x, route.goal.y));
        cv.ring(x, y, 3 * r, ROUTE);
    }
    if opts.scale_bar > 0.0 {
        let len = (opts.scale_bar / grid.resolution() * s as f64).round() as i64;
        let (x0, y0) = (4 * s as i64, (h * s) as i64 - 4 * s as i64);
        for dx in 0..=len {
            for dy in 0..2 {
                cv.put(x0 + dx, y0 + dy, BAR);
            }
        }
        for dy in -4..2 {
            cv.put(x0, y0 + dy, BAR);
            cv.put(x0 + len, y0 + dy, BAR);
        }
    }
    cv.img
}

pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>, image::ImageError> {
    let mut buf = Cursor::new(Vec::new());
    img.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> OccupancyGrid {
        OccupancyGrid::from_ascii(&["#####", "#...#", "#####"], 0.5, WorldPoint::new(0.0, 0.0)).unwrap()
    }

    #[test]
    fn raster_orientation_and_size() {
        let g = grid();
        let opts = RenderOptions { scale: 3, scale_bar: 0.0, ..Default::default() };
        let img = render_map(&g, Layers::default(), &opts);
        assert_eq!(img.dimensions(), (15, 9));
        assert_eq!(*img.get_pixel(0, 0), OCCUPIED);
        assert_eq!(*img.get_pixel(4, 4), FREE);
    }

    #[test]
    fn png_decodes() {
        let img = render_map(&grid(), Layers::default(), &RenderOptions::default());
        let bytes = encode_png(&img).unwrap();
        let back = image::load_from_memory(&bytes).unwrap().to_rgb8();
        assert_eq!(back, img);
    }

    #[test]
    fn zone_colors_differ() {
        let cs: std::collections::BTreeSet<_> = (0..19).map(|i| zone_color(i).0).collect();
        assert_eq!(cs.len(), 19);
    }
}
