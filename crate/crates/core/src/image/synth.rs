//! Seeded procedural images that stand in for photographs in tests and
//! benchmarks: a sky/ground gradient, multi-octave value noise and a handful
//! of flat-colored shapes with hard edges.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Raster;
use crate::error::Result;
use crate::scalar::Scalar;

/// Well-lit RGB scene with intensities inside `[0.02, 0.98]`.
pub fn synth_scene<T: Scalar>(height: usize, width: usize, seed: u64) -> Result<Raster<T>> {
    let field = scene_field(height, width, seed);
    Raster::from_fn(height, width, 3, |y, x, c| T::of(field[(y * width + x) * 3 + c].clamp(0.02, 0.98)))
}

/// Dark RGB scene whose mean intensity equals `target_mean`, with a cool cast
/// and additive sensor noise.
pub fn synth_low_light<T: Scalar>(height: usize, width: usize, target_mean: f64, seed: u64) -> Result<Raster<T>> {
    let mut field = scene_field(height, width, seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let tint = [0.8, 0.95, 1.25];
    for (i, v) in field.iter_mut().enumerate() {
        let noise: f64 = (0..4).map(|_| rng.gen::<f64>() - 0.5).sum::<f64>() * 0.02;
        *v = (*v * tint[i % 3] + noise).max(0.0);
    }
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    let scale = if mean > 0.0 { target_mean / mean } else { 0.0 };
    Raster::from_fn(height, width, 3, |y, x, c| T::of(field[(y * width + x) * 3 + c] * scale))
}

fn scene_field(height: usize, width: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sky: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.35..0.9));
    let ground: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.1..0.6));
    let horizon = rng.gen_range(0.3..0.7);

    let mut field = vec![0.0; height * width * 3];
    for y in 0..height {
        let t = y as f64 / height.max(2) as f64;
        let base: [f64; 3] = if t < horizon {
            std::array::from_fn(|c| sky[c] * (1.0 - 0.4 * t))
        } else {
            std::array::from_fn(|c| ground[c] * (0.8 + 0.3 * (t - horizon)))
        };
        for x in 0..width {
            let i = (y * width + x) * 3;
            field[i..i + 3].copy_from_slice(&base);
        }
    }

    let shapes = rng.gen_range(5..12);
    for _ in 0..shapes {
        let color: [f64; 3] = std::array::from_fn(|_| rng.gen_range(0.05..0.95));
        let cy = rng.gen_range(0.0..height as f64);
        let cx = rng.gen_range(0.0..width as f64);
        let ry = rng.gen_range(0.05..0.3) * height as f64;
        let rx = rng.gen_range(0.05..0.3) * width as f64;
        let ellipse = rng.gen_bool(0.5);
        for y in 0..height {
            for x in 0..width {
                let dy = (y as f64 - cy) / ry.max(1.0);
                let dx = (x as f64 - cx) / rx.max(1.0);
                let inside = if ellipse { dx * dx + dy * dy <= 1.0 } else { dx.abs() <= 1.0 && dy.abs() <= 1.0 };
                if inside {
                    let i = (y * width + x) * 3;
                    field[i..i + 3].copy_from_slice(&color);
                }
            }
        }
    }

    let mut amplitude = 0.12;
    let mut cells = 4usize;
    while cells <= 64 {
        let grid = ValueGrid::new(cells, &mut rng);
        for y in 0..height {
            for x in 0..width {
                let n = grid.sample(y as f64 / height as f64, x as f64 / width as f64) - 0.5;
                let i = (y * width + x) * 3;
                for v in &mut field[i..i + 3] {
                    *v *= 1.0 + amplitude * n * 2.0;
                }
            }
        }
        amplitude *= 0.6;
        cells *= 2;
    }
    field
}

struct ValueGrid {
    cells: usize,
    values: Vec<f64>,
}

impl ValueGrid {
    fn new(cells: usize, rng: &mut impl Rng) -> Self {
        let values = (0..(cells + 1) * (cells + 1)).map(|_| rng.gen()).collect();
        Self { cells, values }
    }

    fn sample(&self, v: f64, u: f64) -> f64 {
        let fy = v * self.cells as f64;
        let fx = u * self.cells as f64;
        let (y0, x0) = (fy.floor() as usize, fx.floor() as usize);
        let (ty, tx) = (fy - y0 as f64, fx - x0 as f64);
        let stride = self.cells + 1;
        let at = |y: usize, x: usize| self.values[y.min(self.cells) * stride + x.min(self.cells)];
        let top = at(y0, x0) * (1.0 - tx) + at(y0, x0 + 1) * tx;
        let bottom = at(y0 + 1, x0) * (1.0 - tx) + at(y0 + 1, x0 + 1) * tx;
        top * (1.0 - ty) + bottom * ty
    }
}
