//! Uniform interval partitions and 2D tensor meshes with periodic
//! indexing. Cells are half-open, `I_j = [x_{j-1/2}, x_{j+1/2})`, which
//! fixes the tie-break when a traced point lands exactly on a face.

use crate::error::{Result, SldgError};

/// Sweep direction of a 1D substep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// A uniform partition of `[a, b)` into `n` half-open cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    h: f64,
}

impl Mesh1D {
    pub fn new(a: f64, b: f64, n: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(SldgError::InvalidArgument(format!(
                "invalid interval [{a}, {b})"
            )));
        }
        if n == 0 {
            return Err(SldgError::InvalidArgument("cell count must be positive".into()));
        }
        Ok(Self { a, b, n, h: (b - a) / n as f64 })
    }

    /// Uniform cell width.
    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Domain length `b - a`.
    #[inline]
    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Center of cell `j`.
    #[inline]
    pub fn center(&self, j: usize) -> f64 {
        self.a + (j as f64 + 0.5) * self.h
    }

    /// Left face of cell `j` (also accepts `j == n` for the right end).
    #[inline]
    pub fn face(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h
    }

    /// Map `x` into the fundamental domain `[a, b)` by whole-period shifts.
    pub fn wrap(&self, x: f64) -> Result<f64> {
        if !x.is_finite() {
            return Err(SldgError::InvalidArgument(format!("cannot wrap non-finite {x}")));
        }
        let len = self.length();
        let k = ((x - self.a) / len).floor();
        let mut w = x - k * len;
        // Guard the rounding cases that land on either end.
        if w >= self.b {
            w -= len;
        }
        if w < self.a {
            w = self.a;
        }
        Ok(w)
    }

    /// Locate the half-open cell containing `wrap(x)`.
    ///
    /// Returns the cell index and the wrapped coordinate. Points within
    /// `1e-13 h` of a face are assigned to the cell on the right of that
    /// face.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let w = self.wrap(x)?;
        let u = (w - self.a) / self.h;
        let r = u.round();
        let j = if (u - r).abs() <= 1e-13 { r as i64 } else { u.floor() as i64 };
        Ok((j.rem_euclid(self.n as i64) as usize, w))
    }
}

/// Tensor mesh `I^x × I^y`; element `(r, s)` is `I^x_r × I^y_s`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    pub mx: Mesh1D,
    pub my: Mesh1D,
}

impl Mesh2D {
    pub fn new(mx: Mesh1D, my: Mesh1D) -> Self {
        Self { mx, my }
    }

    pub fn rect(ax: f64, bx: f64, nx: usize, ay: f64, by: f64, ny: usize) -> Result<Self> {
        Ok(Self { mx: Mesh1D::new(ax, bx, nx)?, my: Mesh1D::new(ay, by, ny)? })
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.mx.n * self.my.n
    }

    pub fn axis(&self, axis: Axis) -> &Mesh1D {
        match axis {
            Axis::X => &self.mx,
            Axis::Y => &self.my,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn widths_fill_the_interval() {
        let m = Mesh1D::new(-PI, PI, 7).unwrap();
        let total: f64 = (0..m.n).map(|_| m.h()).sum();
        assert_abs_diff_eq!(total, m.length(), epsilon = 1e-12 * m.length());
    }

    #[test]
    fn wrap_cases() {
        let m = Mesh1D::new(-PI, PI, 8).unwrap();
        assert_abs_diff_eq!(m.wrap(PI).unwrap(), -PI, epsilon = 1e-14);
        assert_abs_diff_eq!(m.wrap(0.5).unwrap(), 0.5, epsilon = 0.0);
        assert_abs_diff_eq!(m.wrap(3.0 * PI + 0.1).unwrap(), -PI + 0.1, epsilon = 1e-13);
        assert!(m.wrap(f64::NAN).is_err());
        assert!(m.wrap(f64::INFINITY).is_err());
    }

    #[test]
    fn locate_cases() {
        let m = Mesh1D::new(0.0, 1.0, 4).unwrap();
        // Face point goes to the right cell.
        assert_eq!(m.locate(0.25).unwrap().0, 1);
        assert_eq!(m.locate(0.999).unwrap().0, 3);
        let (j, w) = m.locate(-0.1).unwrap();
        assert_eq!(j, 3);
        assert_abs_diff_eq!(w, 0.9, epsilon = 1e-13);
        // Right domain end wraps to the first cell.
        assert_eq!(m.locate(1.0).unwrap().0, 0);
    }

    #[test]
    fn locate_is_idempotent_on_wrapped_points() {
        let m = Mesh1D::new(-2.0, 3.0, 11).unwrap();
        for i in 0..1000 {
            let x = -40.0 + 0.083 * i as f64;
            let (j, w) = m.locate(x).unwrap();
            let (j2, w2) = m.locate(w).unwrap();
            assert_eq!(j, j2);
            assert_eq!(w, w2);
        }
    }

    proptest! {
        // Partition property: every point lands in exactly one cell, and the
        // cell bounds contain the wrapped coordinate (up to the face snap).
        #[test]
        fn partition_covers_every_point(x in -1e3f64..1e3f64) {
            let m = Mesh1D::new(-PI, PI, 16).unwrap();
            let (j, w) = m.locate(x).unwrap();
            prop_assert!(j < m.n);
            let lo = m.face(j);
            let hi = m.face(j + 1);
            let tol = 1e-13 * m.h();
            let inside = w >= lo - tol && w < hi + tol;
            let wrapped_face = j == 0 && (w - m.b).abs() <= tol;
            prop_assert!(inside || wrapped_face, "x={} w={} j={} [{}, {})", x, w, j, lo, hi);
        }
    }

    #[test]
    fn mesh2d_covers_domain() {
        let m = Mesh2D::rect(-1.5, 1.5, 10, -0.75, 0.75, 5).unwrap();
        assert_eq!(m.n_cells(), 50);
        assert_abs_diff_eq!(m.mx.h() * 10.0, 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(m.my.h() * 5.0, 1.5, epsilon = 1e-14);
    }
}
