//! Complex 2-D fields on a uniform periodic grid with cached-plan FFTs,
//! spectral multipliers, and dealiasing.
//!
//! Layout is row-major: `values[j * n + i]` holds the sample at
//! `(x_i, y_j) = (-L + i h, -L + j h)` with `h = 2L/N`. Spectral storage is
//! the unnormalized forward DFT; the inverse transform carries the `1/N²`.
//! Row/column transforms are parallelized per line, so results are bitwise
//! independent of the thread count.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, thiserror::Error)]
pub enum FieldError {
    #[error("grid size must be a power of two >= 4, got {0}")]
    BadSize(usize),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("field is in {found:?} space, expected {expected:?}")]
    WrongSpace { expected: Space, found: Space },
}

/// Uniform periodic grid on the square `[-L, L)²`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct Grid {
    pub n: usize,
    pub l: f64,
}

impl Grid {
    pub fn new(n: usize, l: f64) -> Result<Grid, FieldError> {
        if n < 4 || !n.is_power_of_two() {
            return Err(FieldError::BadSize(n));
        }
        Ok(Grid { n, l })
    }

    #[inline]
    pub fn h(&self) -> f64 {
        2.0 * self.l / self.n as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.h();
        h * h
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.l + i as f64 * self.h()
    }

    /// Signed integer frequency index for axis position `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Continuous frequency `ξ = π k / L` for axis position `i`.
    #[inline]
    pub fn freq(&self, i: usize) -> f64 {
        std::f64::consts::PI * self.wavenumber(i) as f64 / self.l
    }

    /// Largest resolved `|ξ|` along one axis.
    #[inline]
    pub fn freq_max(&self) -> f64 {
        std::f64::consts::PI * (self.n / 2) as f64 / self.l
    }

    pub fn total(&self) -> usize {
        self.n * self.n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum Space {
    Physical,
    Spectral,
}

#[derive(Clone, Debug)]
pub struct Field2D {
    pub grid: Grid,
    pub space: Space,
    pub values: Vec<Complex64>,
}

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    static PLANS: OnceLock<Mutex<HashMap<(usize, bool), Arc<dyn Fft<f64>>>>> = OnceLock::new();
    let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((n, forward))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

/// Transform every row of an `n x n` row-major array in place.
fn transform_rows(values: &mut [Complex64], n: usize, forward: bool) {
    let fft = plan(n, forward);
    values.par_chunks_mut(n).for_each(|row| {
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        fft.process_with_scratch(row, &mut scratch);
    });
}

fn transpose(values: &mut Vec<Complex64>, n: usize) {
    let mut out = vec![Complex64::default(); values.len()];
    out.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        for i in 0..n {
            row[i] = values[i * n + j];
        }
    });
    *values = out;
}

impl Field2D {
    pub fn zeros(grid: Grid, space: Space) -> Field2D {
        Field2D {
            grid,
            space,
            values: vec![Complex64::default(); grid.total()],
        }
    }

    /// Build a physical-space field from a function of `(x, y)`.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Field2D {
        let n = grid.n;
        let mut values = vec![Complex64::default(); grid.total()];
        values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let y = grid.coord(j);
            for (i, v) in row.iter_mut().enumerate() {
                *v = f(grid.coord(i), y);
            }
        });
        Field2D {
            grid,
            space: Space::Physical,
            values,
        }
    }

    pub fn from_real_fn(grid: Grid, f: impl Fn(f64, f64) -> f64 + Sync) -> Field2D {
        Field2D::from_fn(grid, |x, y| Complex64::new(f(x, y), 0.0))
    }

    /// In-place forward transform (no-op if already spectral).
    pub fn to_spectral(&mut self) {
        if self.space == Space::Spectral {
            return;
        }
        let n = self.grid.n;
        transform_rows(&mut self.values, n, true);
        transpose(&mut self.values, n);
        transform_rows(&mut self.values, n, true);
        transpose(&mut self.values, n);
        self.space = Space::Spectral;
    }

    /// In-place inverse transform (no-op if already physical).
    pub fn to_physical(&mut self) {
        if self.space == Space::Physical {
            return;
        }
        let n = self.grid.n;
        transform_rows(&mut self.values, n, false);
        transpose(&mut self.values, n);
        transform_rows(&mut self.values, n, false);
        transpose(&mut self.values, n);
        let scale = 1.0 / (n * n) as f64;
        self.values.par_iter_mut().for_each(|v| *v *= scale);
        self.space = Space::Physical;
    }

    pub fn spectral(mut self) -> Field2D {
        self.to_spectral();
        self
    }

    pub fn physical(mut self) -> Field2D {
        self.to_physical();
        self
    }

    /// Apply a diagonal spectral multiplier `(ξ₁, ξ₂) -> c`.
    ///
    /// The field must already be spectral.
    pub fn apply_multiplier(
        &mut self,
        mult: impl Fn(f64, f64) -> Complex64 + Sync,
    ) -> Result<(), FieldError> {
        if self.space != Space::Spectral {
            return Err(FieldError::WrongSpace {
                expected: Space::Spectral,
                found: self.space,
            });
        }
        let grid = self.grid;
        let n = grid.n;
        self.values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, row)| {
                let xi2 = grid.freq(j);
                for (i, v) in row.iter_mut().enumerate() {
                    *v *= mult(grid.freq(i), xi2);
                }
            });
        Ok(())
    }

    /// Spectral partial derivative along axis 0 or 1. The Nyquist line is
    /// zeroed so that real fields stay real.
    pub fn derivative(&self, axis: usize) -> Result<Field2D, FieldError> {
        let mut f = self.clone().spectral();
        let n = f.grid.n as i64;
        let grid = f.grid;
        let which = axis;
        f.apply_multiplier(|xi1, xi2| {
            let xi = if which == 0 { xi1 } else { xi2 };
            let k = (xi * grid.l / std::f64::consts::PI).round() as i64;
            if k.abs() * 2 == n {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, xi)
            }
        })?;
        Ok(f.physical())
    }

    /// Zero every mode with `max(|k₁|, |k₂|) > N/3` (2/3-rule dealiasing).
    pub fn dealias(&mut self) -> Result<(), FieldError> {
        if self.space != Space::Spectral {
            return Err(FieldError::WrongSpace {
                expected: Space::Spectral,
                found: self.space,
            });
        }
        let n = self.grid.n;
        let cutoff = (n / 3) as i64;
        let grid = self.grid;
        self.values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(j, row)| {
                let k2 = grid.wavenumber(j).abs();
                for (i, v) in row.iter_mut().enumerate() {
                    let k1 = grid.wavenumber(i).abs();
                    if k1.max(k2) > cutoff {
                        *v = Complex64::default();
                    }
                }
            });
        Ok(())
    }

    /// `L²` norm `(∫ |u|² dx)^{1/2}` in either space (Parseval).
    pub fn l2_norm(&self) -> f64 {
        let n2 = self.grid.total() as f64;
        let sum: f64 = self
            .values
            .par_chunks(self.grid.n)
            .map(|row| row.iter().map(|v| v.norm_sqr()).sum::<f64>())
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        let factor = match self.space {
            Space::Physical => self.grid.cell_area(),
            Space::Spectral => self.grid.cell_area() / n2,
        };
        (factor * sum).sqrt()
    }

    /// Max of `|u|` over grid points (physical space required).
    pub fn sup_norm(&self) -> Result<f64, FieldError> {
        if self.space != Space::Physical {
            return Err(FieldError::WrongSpace {
                expected: Space::Physical,
                found: self.space,
            });
        }
        Ok(self
            .values
            .par_chunks(self.grid.n)
            .map(|row| row.iter().map(|v| v.norm()).fold(0.0, f64::max))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(0.0, f64::max))
    }

    /// Max deviation from Hermitian symmetry `û(-k) = conj(û(k))`, relative
    /// to the largest spectral magnitude. Zero for real physical fields.
    pub fn hermitian_asymmetry(&self) -> Result<f64, FieldError> {
        if self.space != Space::Spectral {
            return Err(FieldError::WrongSpace {
                expected: Space::Spectral,
                found: self.space,
            });
        }
        let n = self.grid.n;
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..n {
            let jm = (n - j) % n;
            for i in 0..n {
                let im = (n - i) % n;
                let a = self.values[j * n + i];
                let b = self.values[jm * n + im].conj();
                worst = worst.max((a - b).norm());
                scale = scale.max(a.norm());
            }
        }
        Ok(if scale > 0.0 { worst / scale } else { 0.0 })
    }

    /// Largest `|Im u|` over the grid (physical space).
    pub fn max_imag(&self) -> Result<f64, FieldError> {
        if self.space != Space::Physical {
            return Err(FieldError::WrongSpace {
                expected: Space::Physical,
                found: self.space,
            });
        }
        Ok(self
            .values
            .iter()
            .map(|v| v.im.abs())
            .fold(0.0, f64::max))
    }

    /// Fraction of the `L²` mass lying at radius `> r0` from the origin.
    pub fn mass_fraction_outside(&self, r0: f64) -> f64 {
        let n = self.grid.n;
        let grid = self.grid;
        let (inside, outside): (f64, f64) = self
            .values
            .par_chunks(n)
            .enumerate()
            .map(|(j, row)| {
                let y = grid.coord(j);
                let mut io = (0.0, 0.0);
                for (i, v) in row.iter().enumerate() {
                    let x = grid.coord(i);
                    let m = v.norm_sqr();
                    if (x * x + y * y).sqrt() > r0 {
                        io.1 += m;
                    } else {
                        io.0 += m;
                    }
                }
                io
            })
            .collect::<Vec<_>>()
            .into_iter()
            .fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
        let total = inside + outside;
        if total == 0.0 {
            0.0
        } else {
            outside / total
        }
    }

    pub fn assert_same_grid(&self, other: &Field2D) -> Result<(), FieldError> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump(grid: Grid) -> Field2D {
        Field2D::from_real_fn(grid, |x, y| {
            let r2 = x * x + y * y;
            if r2 < 0.81 {
                (1.0 - 1.0 / (1.0 - r2 / 0.81)).exp()
            } else {
                0.0
            }
        })
    }

    #[test]
    fn roundtrip_is_identity() {
        let grid = Grid::new(64, 2.0).unwrap();
        let f = bump(grid);
        let g = f.clone().spectral().physical();
        let err: f64 = f
            .values
            .iter()
            .zip(&g.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = f.sup_norm().unwrap();
        assert!(err / scale < 1e-12);
    }

    #[test]
    fn parseval_holds() {
        let grid = Grid::new(64, 2.0).unwrap();
        let f = bump(grid);
        let a = f.l2_norm();
        let b = f.clone().spectral().l2_norm();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn derivative_of_plane_wave() {
        let grid = Grid::new(32, std::f64::consts::PI).unwrap();
        // u = sin(3x): du/dx = 3cos(3x).
        let f = Field2D::from_real_fn(grid, |x, _| (3.0 * x).sin());
        let d = f.derivative(0).unwrap();
        let expect = Field2D::from_real_fn(grid, |x, _| 3.0 * (3.0 * x).cos());
        let err: f64 = d
            .values
            .iter()
            .zip(&expect.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10);
        // Constant field has zero derivative.
        let c = Field2D::from_real_fn(grid, |_, _| 1.5);
        assert!(c.derivative(0).unwrap().sup_norm().unwrap() < 1e-12);
    }

    #[test]
    fn real_fields_are_hermitian() {
        let grid = Grid::new(32, 1.5).unwrap();
        let f = bump(grid).spectral();
        assert!(f.hermitian_asymmetry().unwrap() < 1e-10);
    }

    #[test]
    fn dealias_zeroes_high_modes() {
        let grid = Grid::new(32, std::f64::consts::PI).unwrap();
        let mut f = Field2D::from_real_fn(grid, |x, _| (14.0 * x).cos()).spectral();
        f.dealias().unwrap();
        let g = f.physical();
        assert!(g.sup_norm().unwrap() < 1e-12);
    }

    #[test]
    fn mass_outside_support() {
        let grid = Grid::new(64, 2.0).unwrap();
        let f = bump(grid);
        assert!(f.mass_fraction_outside(1.0) < 1e-28);
        assert!(f.mass_fraction_outside(0.1) > 0.5);
    }
}
