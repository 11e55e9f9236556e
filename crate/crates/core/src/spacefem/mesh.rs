use crate::error::{invalid, Result};

/// Uniform `nx × ny` partition of `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectMesh {
    x_range: (f64, f64),
    y_range: (f64, f64),
    nx: usize,
    ny: usize,
}

impl RectMesh {
    pub fn new(x_range: (f64, f64), y_range: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(invalid("mesh needs at least one element per axis"));
        }
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 > r.0;
        if !ok(x_range) || !ok(y_range) {
            return Err(invalid(format!(
                "degenerate mesh box {x_range:?} × {y_range:?}"
            )));
        }
        Ok(Self {
            x_range,
            y_range,
            nx,
            ny,
        })
    }

    /// `(-1, 1)²` with `n × n` elements.
    pub fn square(n: usize) -> Result<Self> {
        Self::new((-1.0, 1.0), (-1.0, 1.0), n, n)
    }

    /// `(-1, 1)²` with the element count closest to side length `h`.
    pub fn square_with_size(h: f64) -> Result<Self> {
        if !(h > 0.0 && h <= 2.0) {
            return Err(invalid(format!("mesh size {h} outside (0, 2]")));
        }
        Self::square((2.0 / h).round().max(1.0) as usize)
    }

    pub fn x_range(&self) -> (f64, f64) {
        self.x_range
    }

    pub fn y_range(&self) -> (f64, f64) {
        self.y_range
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / self.ny as f64
    }

    /// Largest element side.
    pub fn h(&self) -> f64 {
        self.hx().max(self.hy())
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    /// Element containing `(x, y)`; points on shared edges go to the lower
    /// index, points outside are clamped.
    pub fn locate(&self, x: f64, y: f64) -> (usize, usize) {
        let fx = ((x - self.x_range.0) / self.hx()).ceil() as isize - 1;
        let fy = ((y - self.y_range.0) / self.hy()).ceil() as isize - 1;
        (
            fx.clamp(0, self.nx as isize - 1) as usize,
            fy.clamp(0, self.ny as isize - 1) as usize,
        )
    }
}
