//! Minimal raster line chart, drawn directly into an RGB buffer. Enough for
//! sweep curves (score against descriptor count); not a plotting library.

const MARGIN_LEFT: usize = 48;
const MARGIN_RIGHT: usize = 16;
const MARGIN_TOP: usize = 16;
const MARGIN_BOTTOM: usize = 40;

const BG: [u8; 3] = [255, 255, 255];
const AXIS: [u8; 3] = [0, 0, 0];
const GRID: [u8; 3] = [210, 210, 210];
const CURVE: [u8; 3] = [30, 60, 180];

struct Canvas {
    w: usize,
    h: usize,
    rgb: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Canvas {
        let mut rgb = Vec::with_capacity(w * h * 3);
        for _ in 0..w * h {
            rgb.extend_from_slice(&BG);
        }
        Canvas { w, h, rgb }
    }

    fn set(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            let i = (y as usize * self.w + x as usize) * 3;
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    fn line(&mut self, x0: i64, y0: i64, x1: i64, y1: i64, c: [u8; 3]) {
        let (dx, dy) = ((x1 - x0).abs(), -(y1 - y0).abs());
        let (sx, sy) = (if x0 < x1 { 1 } else { -1 }, if y0 < y1 { 1 } else { -1 });
        let (mut x, mut y, mut err) = (x0, y0, dx + dy);
        loop {
            self.set(x, y, c);
            if x == x1 && y == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x += sx;
            }
            if e2 <= dx {
                err += dx;
                y += sy;
            }
        }
    }

    fn marker(&mut self, x: i64, y: i64, c: [u8; 3]) {
        for dy in -2..=2 {
            for dx in -2..=2 {
                self.set(x + dx, y + dy, c);
            }
        }
    }
}

/// Line chart of (x, y) points with y fixed to [0, 1]; the x range adapts to
/// the data. Returns interleaved RGB rows of exactly `width * height` pixels.
pub fn line_chart(points: &[(f64, f64)], width: usize, height: usize) -> Vec<u8> {
    assert!(width > MARGIN_LEFT + MARGIN_RIGHT + 16);
    assert!(height > MARGIN_TOP + MARGIN_BOTTOM + 16);
    let mut canvas = Canvas::new(width, height);
    let (px0, px1) = (MARGIN_LEFT as i64, (width - MARGIN_RIGHT - 1) as i64);
    let (py0, py1) = ((height - MARGIN_BOTTOM - 1) as i64, MARGIN_TOP as i64);

    let (x_min, x_max) = match points.len() {
        0 => (0.0, 1.0),
        _ => {
            let lo = points.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let hi = points.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            if lo == hi {
                (lo - 1.0, hi + 1.0)
            } else {
                let pad = 0.05 * (hi - lo);
                (lo - pad, hi + pad)
            }
        }
    };

    let to_px = |x: f64| px0 + ((x - x_min) / (x_max - x_min) * (px1 - px0) as f64).round() as i64;
    let to_py = |y: f64| py0 + (y.clamp(0.0, 1.0) * (py1 - py0) as f64).round() as i64;

    for i in 1..5 {
        let y = to_py(i as f64 * 0.2);
        canvas.line(px0, y, px1, y, GRID);
    }
    canvas.line(px0, py0, px1, py0, AXIS);
    canvas.line(px0, py0, px0, py1, AXIS);

    let mut pts: Vec<(f64, f64)> = points.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("chart points are finite"));
    for pair in pts.windows(2) {
        canvas.line(
            to_px(pair[0].0),
            to_py(pair[0].1),
            to_px(pair[1].0),
            to_py(pair[1].1),
            CURVE,
        );
    }
    for &(x, y) in &pts {
        canvas.marker(to_px(x), to_py(y), CURVE);
    }
    canvas.rgb
}
