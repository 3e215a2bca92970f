//! Rectangular grid fields with Dirichlet boundary values and their
//! binary/JSON serialization.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::exec;
use crate::profile1d::Profile;

/// Boundary condition attached to a field. The outermost ring of samples
/// holds the boundary data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Dirichlet,
}

/// Samples `u(x0 + i hx, y0 + j hy)` stored row-major at `j * nx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField2D {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
    pub values: Vec<f64>,
    pub bc: Boundary,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldHeader {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub x0: f64,
    pub y0: f64,
    pub bc: Boundary,
}

/// One flat layer `g(s (y - c))`, `s = ±1`.
#[derive(Debug, Clone, Copy)]
pub struct Layer {
    pub center: f64,
    pub orientation: f64,
}

impl ScalarField2D {
    /// Sample `f(x, y)` on `nx × ny` points starting at `(x0, y0)`.
    pub fn from_fn<F>(nx: usize, ny: usize, hx: f64, hy: f64, x0: f64, y0: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let mut values = vec![0.0; nx * ny];
        exec::for_each_row(&mut values, nx, |j, row| {
            let y = y0 + hy * j as f64;
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(x0 + hx * i as f64, y);
            }
        });
        Self { nx, ny, hx, hy, x0, y0, values, bc: Boundary::Dirichlet }
    }

    /// Grid covering `[x_min, x_max] × [y_min, y_max]` with spacing close to
    /// `h` in both directions.
    pub fn on_box<F>(x_min: f64, x_max: f64, y_min: f64, y_max: f64, h: f64, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Sync + Send,
    {
        let nx = ((x_max - x_min) / h).round() as usize + 1;
        let ny = ((y_max - y_min) / h).round() as usize + 1;
        let hx = (x_max - x_min) / (nx - 1) as f64;
        let hy = (y_max - y_min) / (ny - 1) as f64;
        Self::from_fn(nx, ny, hx, hy, x_min, y_min, f)
    }

    /// Superposition of flat layers ordered bottom to top:
    /// `ℓ_1 + Σ_{α≥2} (ℓ_α - ℓ_α(-∞))`.
    pub fn layered(
        profile: &Profile,
        layers: &[Layer],
        x_range: (f64, f64),
        y_range: (f64, f64),
        h: f64,
    ) -> Self {
        Self::on_box(x_range.0, x_range.1, y_range.0, y_range.1, h, |_, y| layered_value(profile, layers, y))
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + self.hx * i as f64
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0 + self.hy * j as f64
    }

    pub fn is_boundary(&self, i: usize, j: usize) -> bool {
        i == 0 || j == 0 || i + 1 == self.nx || j + 1 == self.ny
    }

    /// Degree-5 tensor Lagrange interpolation on the 6×6 stencil around
    /// `(x, y)`; `None` outside the grid.
    pub fn sample(&self, x: f64, y: f64) -> Option<f64> {
        let sx = (x - self.x0) / self.hx;
        let sy = (y - self.y0) / self.hy;
        let tol = 1e-9;
        if !(sx >= -tol && sy >= -tol && sx <= (self.nx - 1) as f64 + tol && sy <= (self.ny - 1) as f64 + tol) {
            return None;
        }
        let (i0, wx) = stencil_weights(sx, self.nx);
        let (j0, wy) = stencil_weights(sy, self.ny);
        let mut acc = 0.0;
        for (b, wyb) in wy.iter().enumerate() {
            if *wyb == 0.0 {
                continue;
            }
            let row = &self.values[(j0 + b) * self.nx + i0..];
            let r: f64 = wx.iter().zip(row).map(|(w, v)| w * v).sum();
            acc += wyb * r;
        }
        Some(acc)
    }

    pub fn header(&self) -> FieldHeader {
        FieldHeader { nx: self.nx, ny: self.ny, hx: self.hx, hy: self.hy, x0: self.x0, y0: self.y0, bc: self.bc }
    }

    /// Write little-endian doubles to `path` and the JSON header next to
    /// it (same stem, `.json`).
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", path.display()));
        fs::File::create(path).and_then(|mut f| f.write_all(&bytes)).map_err(io)?;
        let header = serde_json::to_string_pretty(&self.header()).map_err(|e| LabError::Io(e.to_string()))?;
        fs::write(header_path(path), header).map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let io = |e: std::io::Error| LabError::Io(format!("{}: {e}", path.display()));
        let header: FieldHeader = serde_json::from_str(&fs::read_to_string(header_path(path)).map_err(io)?)
            .map_err(|e| LabError::Io(format!("bad field header: {e}")))?;
        let bytes = fs::read(path).map_err(io)?;
        if bytes.len() != header.nx * header.ny * 8 {
            return Err(LabError::Io(format!(
                "field holds {} bytes, header expects {}",
                bytes.len(),
                header.nx * header.ny * 8
            )));
        }
        let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(Self {
            nx: header.nx,
            ny: header.ny,
            hx: header.hx,
            hy: header.hy,
            x0: header.x0,
            y0: header.y0,
            values,
            bc: header.bc,
        })
    }
}

const STENCIL: usize = 6;

/// First index and weights of the interpolation stencil at fractional
/// index `s` on `n` nodes. Short grids fall back to all their nodes.
fn stencil_weights(s: f64, n: usize) -> (usize, [f64; STENCIL]) {
    let mut w = [0.0; STENCIL];
    let m = n.min(STENCIL);
    let cell = (s.floor().max(0.0) as usize).min(n - 1);
    let start = cell.saturating_sub(m / 2 - 1).min(n - m);
    // exact node hits avoid 0/0 and keep sampling at nodes exact
    let r = s.round();
    if (s - r).abs() < 1e-12 {
        let k = (r.max(0.0) as usize).min(n - 1);
        let start = k.saturating_sub(m / 2 - 1).min(n - m);
        w[k - start] = 1.0;
        return (start, w);
    }
    for a in 0..m {
        let xa = (start + a) as f64;
        let mut v = 1.0;
        for b in 0..m {
            if b != a {
                v *= (s - (start + b) as f64) / (xa - (start + b) as f64);
            }
        }
        w[a] = v;
    }
    (start, w)
}

/// Header file belonging to a field binary.
pub fn header_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Value at height `y` of the layer superposition.
pub fn layered_value(profile: &Profile, layers: &[Layer], y: f64) -> f64 {
    let mut u = 0.0;
    for (k, l) in layers.iter().enumerate() {
        let t = l.orientation * (y - l.center);
        if k == 0 {
            u += profile.value(t);
        } else if l.orientation > 0.0 {
            u += profile.one_plus_g(t);
        } else {
            u -= profile.one_minus_g(t);
        }
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::make_quartic;
    use crate::profile1d::solve_profile;

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.bin");
        let u = ScalarField2D::from_fn(7, 5, 0.5, 0.25, -1.0, 2.0, |x, y| x * 10.0 + y);
        u.write(&path).unwrap();
        let back = ScalarField2D::read(&path).unwrap();
        assert_eq!(u, back);
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(f64::from_le_bytes(raw[8..16].try_into().unwrap()), u.at(1, 0));
        let header: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(header_path(&path)).unwrap()).unwrap();
        assert_eq!(header["nx"], 7);
        assert_eq!(header["bc"], "dirichlet");
    }

    #[test]
    fn sampling_reproduces_quintics() {
        let f = |x: f64, y: f64| x.powi(5) - 2.0 * x * y.powi(3) + y.powi(4) - 1.0;
        let u = ScalarField2D::from_fn(12, 9, 0.3, 0.2, -1.0, -0.5, f);
        for (x, y) in [(-1.0, -0.5), (0.123, 0.456), (2.3, 1.1), (0.5999999, 0.3)] {
            assert!((u.sample(x, y).unwrap() - f(x, y)).abs() < 1e-11, "{x} {y}");
        }
        assert!(u.sample(2.5, 0.0).is_none());
        let tiny = ScalarField2D::from_fn(3, 3, 1.0, 1.0, 0.0, 0.0, |x, y| x + 2.0 * y);
        assert!((tiny.sample(0.5, 1.5).unwrap() - 3.5).abs() < 1e-12);
    }

    #[test]
    fn two_layer_superposition() {
        let pr = solve_profile(&make_quartic(), 30.0, 6001).unwrap();
        let layers = [Layer { center: -7.0, orientation: 1.0 }, Layer { center: 7.0, orientation: -1.0 }];
        for y in [-20.0_f64, -7.0, 0.0, 3.3, 7.0, 20.0] {
            let want = (0.5 * (y + 7.0)).tanh() + (0.5 * (7.0 - y)).tanh() - 1.0;
            assert!((layered_value(&pr, &layers, y) - want).abs() < 1e-10);
        }
    }
}
