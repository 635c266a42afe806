//! Modal DG fields in 1D and 2D tensor form: projection, evaluation,
//! error norms, and mass.

use std::io::{BufRead, Write};

use crate::error::{Result, SldgError};
use crate::mesh::{Mesh1D, Mesh2D};
use crate::quadrature::{self, gauss_legendre};

/// A piecewise-polynomial field on a 1D mesh: `n x (degree+1)` modal
/// coefficients in the cell-orthonormal Legendre basis.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField1D {
    pub mesh: Mesh1D,
    pub degree: usize,
    coeffs: Vec<f64>,
}

impl ModalField1D {
    pub fn zeros(mesh: Mesh1D, degree: usize) -> Self {
        let coeffs = vec![0.0; mesh.n * (degree + 1)];
        Self { mesh, degree, coeffs }
    }

    /// L² projection of `f` using a `q`-point Gauss rule per cell.
    pub fn project<F: Fn(f64) -> f64>(mesh: Mesh1D, degree: usize, q: usize, f: F) -> Result<Self> {
        if q < degree + 1 {
            return Err(SldgError::InvalidArgument(format!(
                "projection quadrature {q} must be at least degree+1 = {}",
                degree + 1
            )));
        }
        let quad = gauss_legendre(q)?;
        let mut out = Self::zeros(mesh, degree);
        let h = out.mesh.h();
        let mut basis = vec![0.0; degree + 1];
        let scale = (2.0 / h).sqrt();
        for j in 0..out.mesh.n {
            let xc = out.mesh.center(j);
            let cell = out.cell_coeffs_mut(j);
            for (&xi, &w) in quad.nodes.iter().zip(&quad.weights) {
                let x = xc + 0.5 * h * xi;
                let fv = f(x) * w * 0.5 * h;
                quadrature::eval_basis_ref_into(degree, xi, &mut basis);
                for m in 0..=degree {
                    cell[m] += fv * basis[m] * scale;
                }
            }
        }
        Ok(out)
    }

    #[inline]
    pub fn cell_coeffs(&self, j: usize) -> &[f64] {
        let k = self.degree + 1;
        &self.coeffs[j * k..(j + 1) * k]
    }

    #[inline]
    pub fn cell_coeffs_mut(&mut self, j: usize) -> &mut [f64] {
        let k = self.degree + 1;
        &mut self.coeffs[j * k..(j + 1) * k]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    /// Evaluate at `x` (periodically wrapped).
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        let (j, w) = self.mesh.locate(x)?;
        let h = self.mesh.h();
        let xi = (2.0 * (w - self.mesh.center(j)) / h).clamp(-1.0, 1.0);
        let mut basis = vec![0.0; self.degree + 1];
        quadrature::eval_basis_ref_into(self.degree, xi, &mut basis);
        let scale = (2.0 / h).sqrt();
        Ok(self
            .cell_coeffs(j)
            .iter()
            .zip(&basis)
            .map(|(c, b)| c * b * scale)
            .sum())
    }

    /// `∫ u dx` over the domain; only the constant modes contribute.
    pub fn total_mass(&self) -> f64 {
        let k = self.degree + 1;
        let sqrt_h = self.mesh.h().sqrt();
        (0..self.mesh.n).map(|j| self.coeffs[j * k] * sqrt_h).sum()
    }

    /// `‖u‖_{L²}`: the coefficient 2-norm, since the basis is orthonormal.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }
}

/// A tensor-product modal field: per cell `(r, s)` a `(kx+1) x (ky+1)`
/// coefficient block, stored row-major over cells then modes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalField2D {
    pub mesh: Mesh2D,
    pub kx: usize,
    pub ky: usize,
    beta: Vec<f64>,
}

impl ModalField2D {
    pub fn zeros(mesh: Mesh2D, kx: usize, ky: usize) -> Self {
        let beta = vec![0.0; mesh.mx.n * mesh.my.n * (kx + 1) * (ky + 1)];
        Self { mesh, kx, ky, beta }
    }

    #[inline]
    pub fn block_len(&self) -> usize {
        (self.kx + 1) * (self.ky + 1)
    }

    #[inline]
    fn cell_offset(&self, r: usize, s: usize) -> usize {
        (r * self.mesh.my.n + s) * self.block_len()
    }

    /// Coefficient block of cell `(r, s)`: entry `[i * (ky+1) + j]` is the
    /// coefficient of `phi_i(x) phi_j(y)`.
    #[inline]
    pub fn cell_block(&self, r: usize, s: usize) -> &[f64] {
        let o = self.cell_offset(r, s);
        &self.beta[o..o + self.block_len()]
    }

    #[inline]
    pub fn cell_block_mut(&mut self, r: usize, s: usize) -> &mut [f64] {
        let o = self.cell_offset(r, s);
        let len = self.block_len();
        &mut self.beta[o..o + len]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.beta
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.beta
    }

    /// L² projection of `f(x, y)` with a `q`-point tensor Gauss rule per
    /// cell.
    pub fn project<F: Fn(f64, f64) -> f64>(
        mesh: Mesh2D,
        kx: usize,
        ky: usize,
        q: usize,
        f: F,
    ) -> Result<Self> {
        if q < kx.max(ky) + 1 {
            return Err(SldgError::InvalidArgument(format!(
                "projection quadrature {q} must be at least max degree+1 = {}",
                kx.max(ky) + 1
            )));
        }
        let quad = gauss_legendre(q)?;
        let mut out = Self::zeros(mesh, kx, ky);
        let (hx, hy) = (out.mesh.mx.h(), out.mesh.my.h());
        let scale = (2.0 / hx).sqrt() * (2.0 / hy).sqrt();
        let mut bx = vec![0.0; kx + 1];
        let mut by = vec![0.0; ky + 1];
        let (nx, ny) = (out.mesh.mx.n, out.mesh.my.n);
        for r in 0..nx {
            let xc = out.mesh.mx.center(r);
            for s in 0..ny {
                let yc = out.mesh.my.center(s);
                let block = out.cell_block_mut(r, s);
                for (&xi, &wx) in quad.nodes.iter().zip(&quad.weights) {
                    let x = xc + 0.5 * hx * xi;
                    quadrature::eval_basis_ref_into(kx, xi, &mut bx);
                    for (&eta, &wy) in quad.nodes.iter().zip(&quad.weights) {
                        let y = yc + 0.5 * hy * eta;
                        quadrature::eval_basis_ref_into(ky, eta, &mut by);
                        let fv = f(x, y) * wx * wy * 0.25 * hx * hy * scale;
                        for i in 0..=kx {
                            let fb = fv * bx[i];
                            let row = &mut block[i * (ky + 1)..(i + 1) * (ky + 1)];
                            for (c, &bj) in row.iter_mut().zip(by.iter()) {
                                *c += fb * bj;
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// Evaluate at `(x, y)` (periodically wrapped).
    pub fn evaluate(&self, x: f64, y: f64) -> Result<f64> {
        let (r, wx) = self.mesh.mx.locate(x)?;
        let (s, wy) = self.mesh.my.locate(y)?;
        let (hx, hy) = (self.mesh.mx.h(), self.mesh.my.h());
        let xi = (2.0 * (wx - self.mesh.mx.center(r)) / hx).clamp(-1.0, 1.0);
        let eta = (2.0 * (wy - self.mesh.my.center(s)) / hy).clamp(-1.0, 1.0);
        let mut bx = vec![0.0; self.kx + 1];
        let mut by = vec![0.0; self.ky + 1];
        quadrature::eval_basis_ref_into(self.kx, xi, &mut bx);
        quadrature::eval_basis_ref_into(self.ky, eta, &mut by);
        let scale = (2.0 / hx).sqrt() * (2.0 / hy).sqrt();
        let block = self.cell_block(r, s);
        let mut acc = 0.0;
        for i in 0..=self.kx {
            let mut row = 0.0;
            for j in 0..=self.ky {
                row += block[i * (self.ky + 1) + j] * by[j];
            }
            acc += row * bx[i];
        }
        Ok(acc * scale)
    }

    /// Unnormalised error norms against `exact`, sampled at an `m x m`
    /// tensor Gauss grid per cell: `L1 = Σ w |e|`, `L2 = sqrt(Σ w e²)`,
    /// `L∞ = max |e|` over the sample points. Reduction order is fixed
    /// (cells in index order), so the result is deterministic.
    pub fn error_norms<F: Fn(f64, f64) -> f64>(&self, exact: F, m: usize) -> Result<(f64, f64, f64)> {
        let window = (0, self.mesh.mx.n, 0, self.mesh.my.n);
        self.error_norms_in(exact, m, window)
    }

    /// [`ModalField2D::error_norms`] restricted to the cell window
    /// `[r0, r1) x [s0, s1)`, for solves that carry a halo around the
    /// domain of interest.
    pub fn error_norms_in<F: Fn(f64, f64) -> f64>(
        &self,
        exact: F,
        m: usize,
        window: (usize, usize, usize, usize),
    ) -> Result<(f64, f64, f64)> {
        if m < self.kx.max(self.ky) + 2 {
            return Err(SldgError::InvalidArgument(format!(
                "error sampling {m} must be at least max degree+2 = {}",
                self.kx.max(self.ky) + 2
            )));
        }
        let quad = gauss_legendre(m)?;
        let (hx, hy) = (self.mesh.mx.h(), self.mesh.my.h());
        let scale = (2.0 / hx).sqrt() * (2.0 / hy).sqrt();
        let mut bx = vec![0.0; (self.kx + 1) * m];
        let mut by = vec![0.0; (self.ky + 1) * m];
        for (g, &xi) in quad.nodes.iter().enumerate() {
            quadrature::eval_basis_ref_into(self.kx, xi, &mut bx[g * (self.kx + 1)..]);
            quadrature::eval_basis_ref_into(self.ky, xi, &mut by[g * (self.ky + 1)..]);
        }
        let (mut l1, mut l2, mut linf) = (0.0f64, 0.0f64, 0.0f64);
        for r in window.0..window.1 {
            let xc = self.mesh.mx.center(r);
            for s in window.2..window.3 {
                let yc = self.mesh.my.center(s);
                let block = self.cell_block(r, s);
                for (gx, (&xi, &wx)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
                    let x = xc + 0.5 * hx * xi;
                    let bxg = &bx[gx * (self.kx + 1)..(gx + 1) * (self.kx + 1)];
                    for (gy, (&eta, &wy)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
                        let y = yc + 0.5 * hy * eta;
                        let byg = &by[gy * (self.ky + 1)..(gy + 1) * (self.ky + 1)];
                        let mut uh = 0.0;
                        for i in 0..=self.kx {
                            let mut row = 0.0;
                            for j in 0..=self.ky {
                                row += block[i * (self.ky + 1) + j] * byg[j];
                            }
                            uh += row * bxg[i];
                        }
                        uh *= scale;
                        let e = (uh - exact(x, y)).abs();
                        let w = wx * wy * 0.25 * hx * hy;
                        l1 += w * e;
                        l2 += w * e * e;
                        linf = linf.max(e);
                    }
                }
            }
        }
        Ok((l1, l2.sqrt(), linf))
    }

    /// Error norms against the L² projection of `exact` at the field's own
    /// resolution, the convention whose numbers the reference tables use:
    /// the projection truncation of the exact solution is excluded, so
    /// near the resolution floor this sits below the pointwise error.
    pub fn error_norms_vs_projection<F: Fn(f64, f64) -> f64>(
        &self,
        exact: F,
        q_project: usize,
        m: usize,
    ) -> Result<(f64, f64, f64)> {
        let window = (0, self.mesh.mx.n, 0, self.mesh.my.n);
        self.error_norms_vs_projection_in(exact, q_project, m, window)
    }

    /// [`ModalField2D::error_norms_vs_projection`] restricted to a cell
    /// window.
    pub fn error_norms_vs_projection_in<F: Fn(f64, f64) -> f64>(
        &self,
        exact: F,
        q_project: usize,
        m: usize,
        window: (usize, usize, usize, usize),
    ) -> Result<(f64, f64, f64)> {
        let reference =
            ModalField2D::project(self.mesh.clone(), self.kx, self.ky, q_project, exact)?;
        let mut diff = self.clone();
        for (d, r) in diff.beta.iter_mut().zip(reference.coeffs()) {
            *d -= r;
        }
        diff.error_norms_in(|_, _| 0.0, m, window)
    }

    /// `∫∫ u dx dy` over the domain.
    pub fn total_mass(&self) -> f64 {
        let area_mode = (self.mesh.mx.h() * self.mesh.my.h()).sqrt();
        let mut acc = 0.0;
        for r in 0..self.mesh.mx.n {
            for s in 0..self.mesh.my.n {
                acc += self.cell_block(r, s)[0];
            }
        }
        acc * area_mode
    }

    /// `‖u‖_{L²}`: coefficient 2-norm (orthonormal tensor basis).
    pub fn l2_norm(&self) -> f64 {
        self.beta.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Write the plain-text snapshot: `#`-prefixed metadata, then one line
    /// `r s i j beta` per coefficient.
    pub fn dump<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(
            w,
            "# sldg field nx={} ny={} kx={} ky={} domain={:.17e} {:.17e} {:.17e} {:.17e}",
            self.mesh.mx.n,
            self.mesh.my.n,
            self.kx,
            self.ky,
            self.mesh.mx.a,
            self.mesh.mx.b,
            self.mesh.my.a,
            self.mesh.my.b
        )?;
        for r in 0..self.mesh.mx.n {
            for s in 0..self.mesh.my.n {
                let block = self.cell_block(r, s);
                for i in 0..=self.kx {
                    for j in 0..=self.ky {
                        writeln!(w, "{r} {s} {i} {j} {:.17e}", block[i * (self.ky + 1) + j])?;
                    }
                }
            }
        }
        Ok(())
    }

    /// Read a snapshot produced by [`ModalField2D::dump`].
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut header: Option<(usize, usize, usize, usize, [f64; 4])> = None;
        let mut field: Option<ModalField2D> = None;
        for line in reader.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if header.is_none() && rest.contains("sldg field") {
                    let mut nx = 0;
                    let mut ny = 0;
                    let mut kx = 0;
                    let mut ky = 0;
                    let mut dom = [0.0f64; 4];
                    for tok in rest.split_whitespace() {
                        if let Some(v) = tok.strip_prefix("nx=") {
                            nx = v.parse().map_err(|_| bad_dump())?;
                        } else if let Some(v) = tok.strip_prefix("ny=") {
                            ny = v.parse().map_err(|_| bad_dump())?;
                        } else if let Some(v) = tok.strip_prefix("kx=") {
                            kx = v.parse().map_err(|_| bad_dump())?;
                        } else if let Some(v) = tok.strip_prefix("ky=") {
                            ky = v.parse().map_err(|_| bad_dump())?;
                        } else if let Some(v) = tok.strip_prefix("domain=") {
                            dom[0] = v.parse().map_err(|_| bad_dump())?;
                        }
                    }
                    let tail: Vec<&str> = rest.split("domain=").nth(1).unwrap_or("").split_whitespace().collect();
                    if tail.len() >= 4 {
                        for (i, t) in tail.iter().take(4).enumerate() {
                            dom[i] = t.parse().map_err(|_| bad_dump())?;
                        }
                    }
                    header = Some((nx, ny, kx, ky, dom));
                    let mesh = Mesh2D::rect(dom[0], dom[1], nx, dom[2], dom[3], ny)?;
                    field = Some(ModalField2D::zeros(mesh, kx, ky));
                }
                continue;
            }
            let f = field.as_mut().ok_or_else(bad_dump)?;
            let mut it = line.split_whitespace();
            let r: usize = it.next().ok_or_else(bad_dump)?.parse().map_err(|_| bad_dump())?;
            let s: usize = it.next().ok_or_else(bad_dump)?.parse().map_err(|_| bad_dump())?;
            let i: usize = it.next().ok_or_else(bad_dump)?.parse().map_err(|_| bad_dump())?;
            let j: usize = it.next().ok_or_else(bad_dump)?.parse().map_err(|_| bad_dump())?;
            let v: f64 = it.next().ok_or_else(bad_dump)?.parse().map_err(|_| bad_dump())?;
            let ky = f.ky;
            f.cell_block_mut(r, s)[i * (ky + 1) + j] = v;
        }
        field.ok_or_else(bad_dump)
    }
}

fn bad_dump() -> SldgError {
    SldgError::InvalidArgument("malformed field snapshot".into())
}
