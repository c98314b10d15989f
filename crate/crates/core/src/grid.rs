//! Periodic 2-D grid geometry, FFT transforms, and Fourier-multiplier
//! operators.
//!
//! Conventions fixed here and relied on everywhere else:
//!
//! * the physical domain is `[-pi*Lx, pi*Lx) x [-pi*Ly, pi*Ly)`, sampled at
//!   `x_j = (j - Nx/2) * hx` with `hx = 2*pi*Lx/Nx` (and analogously in `y`),
//!   so grid points come in exact `+/-` pairs in floating point;
//! * fields are stored row-major with `y` outer and `x` inner;
//! * wavenumbers follow FFT ordering, `kx[j] in {0, 1, .., Nx/2-1, -Nx/2,
//!   .., -1} / Lx`;
//! * the forward transform is unnormalized, the inverse carries the
//!   `1/(Nx*Ny)` factor. All multiplier symbols are independent of this
//!   choice.

use std::sync::{Arc, Mutex};

use once_cell::sync::Lazy;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Regularization constant for the singular `1/kx` multiplier: the double
/// precision machine epsilon, the smallest increment the arithmetic can
/// represent at 1.
pub const REGULARIZATION_DELTA: f64 = f64::EPSILON;

/// Derivative direction for [`apply_derivative`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Periodic grid geometry plus wavenumber tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralGrid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl SpectralGrid {
    /// Build a grid with `nx`, `ny` modes (even, at least 4) on the box of
    /// half-period scales `lx`, `ly` (the period in `x` is `2*pi*lx`).
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::InvalidGrid(format!(
                "mode counts must be >= 4, got {nx} x {ny}"
            )));
        }
        if nx % 2 != 0 || ny % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "mode counts must be even, got {nx} x {ny}"
            )));
        }
        if !(lx > 0.0) || !(ly > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half-period scales must be positive, got {lx} x {ly}"
            )));
        }
        let kx = fft_wavenumbers(nx, lx);
        let ky = fft_wavenumbers(ny, ly);
        let hx = 2.0 * std::f64::consts::PI * lx / nx as f64;
        let hy = 2.0 * std::f64::consts::PI * ly / ny as f64;
        // (j - n/2) * h rather than -pi*l + j*h: negation is exact, so
        // reflected grid points are exact +/- pairs.
        let x = (0..nx)
            .map(|j| (j as isize - (nx / 2) as isize) as f64 * hx)
            .collect();
        let y = (0..ny)
            .map(|j| (j as isize - (ny / 2) as isize) as f64 * hy)
            .collect();
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            kx,
            ky,
            x,
            y,
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing in `x`.
    pub fn hx(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.lx / self.nx as f64
    }
    /// Grid spacing in `y`.
    pub fn hy(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.ly / self.ny as f64
    }

    pub fn kx(&self) -> &[f64] {
        &self.kx
    }
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Row-major index of the sample at (`iy`, `ix`).
    #[inline]
    pub fn idx(&self, iy: usize, ix: usize) -> usize {
        iy * self.nx + ix
    }

    /// True when the two grids describe the same discretization.
    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }
}

fn fft_wavenumbers(n: usize, l: f64) -> Vec<f64> {
    (0..n)
        .map(|j| {
            let m = if j < n / 2 {
                j as isize
            } else {
                j as isize - n as isize
            };
            m as f64 / l
        })
        .collect()
}

/// Real samples of a field on a [`SpectralGrid`], row-major, `y` outer.
#[derive(Debug, Clone, PartialEq)]
pub struct RealField {
    grid: SpectralGrid,
    values: Vec<f64>,
}

impl RealField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![0.0; grid.len()],
        }
    }

    /// Sample `f(x, y)` at every grid point.
    pub fn from_fn(grid: &SpectralGrid, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &y in grid.y() {
            for &x in grid.x() {
                values.push(f(x, y));
            }
        }
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &SpectralGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "value count {} does not match grid {}x{}",
                values.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    #[inline]
    pub fn at(&self, iy: usize, ix: usize) -> f64 {
        self.values[self.grid.idx(iy, ix)]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Forward transform (unnormalized).
    pub fn to_spectral(&self) -> SpectralField {
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .collect();
        let fft = Fft2::for_grid(&self.grid);
        fft.forward(&mut buf);
        SpectralField {
            grid: self.grid.clone(),
            coeffs: buf,
        }
    }
}

/// Fourier coefficients of a field, indexed by (`ky`-index, `kx`-index) in
/// the same row-major layout as [`RealField`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: SpectralGrid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: &SpectralGrid) -> Self {
        Self {
            grid: grid.clone(),
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_coeffs(grid: &SpectralGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "coefficient count {} does not match grid {}x{}",
                coeffs.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            coeffs,
        })
    }

    /// Forward transform of complex-valued samples (used for the DS
    /// envelope, which has no reality constraint).
    pub fn from_complex_values(grid: &SpectralGrid, mut values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "value count {} does not match grid {}x{}",
                values.len(),
                grid.nx(),
                grid.ny()
            )));
        }
        let fft = Fft2::for_grid(grid);
        fft.forward(&mut values);
        Ok(Self {
            grid: grid.clone(),
            coeffs: values,
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    #[inline]
    pub fn at(&self, iy: usize, ix: usize) -> Complex64 {
        self.coeffs[self.grid.idx(iy, ix)]
    }

    /// Inverse transform, real part. The `1/(Nx*Ny)` normalization lives
    /// here.
    pub fn to_real(&self) -> RealField {
        let values = self
            .to_complex_values()
            .into_iter()
            .map(|c| c.re)
            .collect();
        RealField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Inverse transform keeping complex samples.
    pub fn to_complex_values(&self) -> Vec<Complex64> {
        let mut buf = self.coeffs.clone();
        let fft = Fft2::for_grid(&self.grid);
        fft.inverse(&mut buf);
        let scale = 1.0 / self.grid.len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    /// Discrete L2 norm of the coefficients.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Differentiate spectrally: multiply by `(i*k_axis)^order`. The Nyquist
/// plane is zeroed for odd orders, where the unpaired mode has no
/// well-defined sign.
pub fn apply_derivative(f: &SpectralField, axis: Axis, order: u32) -> SpectralField {
    let grid = &f.grid;
    let (nx, ny) = (grid.nx(), grid.ny());
    let mut out = f.clone();
    let zero_nyquist = order % 2 == 1;
    match axis {
        Axis::X => {
            let mult: Vec<Complex64> = grid
                .kx()
                .iter()
                .enumerate()
                .map(|(ix, &k)| {
                    if zero_nyquist && ix == nx / 2 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(0.0, k).powi(order as i32)
                    }
                })
                .collect();
            for iy in 0..ny {
                let row = &mut out.coeffs[iy * nx..(iy + 1) * nx];
                for (c, m) in row.iter_mut().zip(&mult) {
                    *c *= m;
                }
            }
        }
        Axis::Y => {
            for (iy, &k) in grid.ky().iter().enumerate() {
                let m = if zero_nyquist && iy == ny / 2 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k).powi(order as i32)
                };
                for c in &mut out.coeffs[iy * nx..(iy + 1) * nx] {
                    *c *= m;
                }
            }
        }
    }
    out
}

/// Anti-derivative in `x`: the singular multiplier `-i/kx`, regularized as
/// `-i/(kx + i*lambda*delta)` with `delta` the machine epsilon and `lambda`
/// the transverse sign of the model at hand. All `kx = 0` coefficients are
/// set exactly to zero; the operator is defined on the zero-x-mean subspace.
pub fn antideriv_x(f: &SpectralField, lambda: f64) -> SpectralField {
    let grid = &f.grid;
    let nx = grid.nx();
    let mut out = f.clone();
    let mult: Vec<Complex64> = grid
        .kx()
        .iter()
        .map(|&k| {
            if k == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -1.0) / Complex64::new(k, lambda * REGULARIZATION_DELTA)
            }
        })
        .collect();
    for row in out.coeffs.chunks_mut(nx) {
        for (c, m) in row.iter_mut().zip(&mult) {
            *c *= m;
        }
    }
    out
}

/// Zero the `kx = 0` Fourier coefficients, enforcing zero x-mean along every
/// grid row. An orthogonal projection in the discrete L2 inner product.
pub fn project_constraint(f: &RealField) -> RealField {
    let mut hat = f.to_spectral();
    zero_kx0(&mut hat);
    hat.to_real()
}

/// Zero the `kx = 0` column of a coefficient table in place.
pub fn zero_kx0(f: &mut SpectralField) {
    let nx = f.grid.nx();
    for row in f.coeffs.chunks_mut(nx) {
        row[0] = Complex64::new(0.0, 0.0);
    }
}

/// Largest `kx = 0` coefficient magnitude relative to the overall peak; the
/// discrete measure of how strongly the zero-x-mean constraint is violated.
pub fn constraint_residual(f: &SpectralField) -> f64 {
    let nx = f.grid.nx();
    let mut worst: f64 = 0.0;
    let mut peak: f64 = 0.0;
    for (i, c) in f.coeffs.iter().enumerate() {
        let a = c.norm();
        peak = peak.max(a);
        if i % nx == 0 {
            worst = worst.max(a);
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        worst / peak
    }
}

/// Periodic translation in `x`: multiply mode `kx` by `e^{i*kx*shift}`, a
/// pure phase, so the discrete L2 norm is preserved exactly.
pub fn spectral_translate(f: &SpectralField, shift_x: f64) -> SpectralField {
    let grid = &f.grid;
    let nx = grid.nx();
    let mut out = f.clone();
    let mult: Vec<Complex64> = grid
        .kx()
        .iter()
        .map(|&k| Complex64::from_polar(1.0, k * shift_x))
        .collect();
    for row in out.coeffs.chunks_mut(nx) {
        for (c, m) in row.iter_mut().zip(&mult) {
            *c *= m;
        }
    }
    out
}

// ---------------------------------------------------------------------------
// FFT plumbing

static PLANNER: Lazy<Mutex<FftPlanner<f64>>> = Lazy::new(|| Mutex::new(FftPlanner::new()));

fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_forward(len)
}

fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.lock().unwrap().plan_fft_inverse(len)
}

/// Planned 2-D complex FFT for one grid size. Rows are transformed along
/// `x`, the array is transposed, rows are transformed along `y`, and the
/// transpose is undone, so the layout contract is preserved. Row batches run
/// in parallel; every task writes a disjoint slice, so results are bitwise
/// identical for any thread count.
pub(crate) struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn for_grid(grid: &SpectralGrid) -> Self {
        Self::new(grid.nx(), grid.ny())
    }

    pub fn new(nx: usize, ny: usize) -> Self {
        Self {
            nx,
            ny,
            fwd_x: plan_forward(nx),
            inv_x: plan_inverse(nx),
            fwd_y: plan_forward(ny),
            inv_y: plan_inverse(ny),
        }
    }

    /// Unnormalized forward transform, in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); buf.len()];
        self.forward_with(buf, &mut tmp);
    }

    /// Unnormalized inverse transform, in place. Callers apply `1/(Nx*Ny)`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        let mut tmp = vec![Complex64::new(0.0, 0.0); buf.len()];
        self.inverse_with(buf, &mut tmp);
    }

    pub fn forward_with(&self, buf: &mut [Complex64], tmp: &mut [Complex64]) {
        self.pass(buf, tmp, &self.fwd_x, &self.fwd_y);
    }

    pub fn inverse_with(&self, buf: &mut [Complex64], tmp: &mut [Complex64]) {
        self.pass(buf, tmp, &self.inv_x, &self.inv_y);
    }

    fn pass(
        &self,
        buf: &mut [Complex64],
        tmp: &mut [Complex64],
        plan_x: &Arc<dyn Fft<f64>>,
        plan_y: &Arc<dyn Fft<f64>>,
    ) {
        debug_assert_eq!(buf.len(), self.nx * self.ny);
        debug_assert_eq!(tmp.len(), self.nx * self.ny);
        fft_rows(buf, self.nx, plan_x);
        transpose(buf, tmp, self.nx, self.ny);
        fft_rows(tmp, self.ny, plan_y);
        transpose(tmp, buf, self.ny, self.nx);
    }

    /// Inverse transform leaving the result in transposed (`x` outer)
    /// layout in `tmp`; pairs with [`Fft2::forward_from_transposed`]. The
    /// round trip through both halves skips two of the four transposes
    /// needed by full-layout passes, and pointwise work in between is
    /// layout-agnostic.
    pub fn inverse_to_transposed(&self, buf: &mut [Complex64], tmp: &mut [Complex64]) {
        fft_rows(buf, self.nx, &self.inv_x);
        transpose(buf, tmp, self.nx, self.ny);
        fft_rows(tmp, self.ny, &self.inv_y);
    }

    /// Forward transform of transposed-layout data in `tmp`, restoring the
    /// canonical layout into `buf`.
    pub fn forward_from_transposed(&self, tmp: &mut [Complex64], buf: &mut [Complex64]) {
        fft_rows(tmp, self.ny, &self.fwd_y);
        transpose(tmp, buf, self.ny, self.nx);
        fft_rows(buf, self.nx, &self.fwd_x);
    }
}

fn fft_rows(buf: &mut [Complex64], row_len: usize, plan: &Arc<dyn Fft<f64>>) {
    let scratch_len = plan.get_inplace_scratch_len();
    buf.par_chunks_mut(row_len).for_each_init(
        || vec![Complex64::new(0.0, 0.0); scratch_len],
        |scratch, row| plan.process_with_scratch(row, scratch),
    );
}

/// `src` is `rows` rows of `row_len` entries; `dst` receives the transpose
/// (`row_len` rows of `rows` entries). Tiled to keep both sides in cache;
/// tasks write disjoint output blocks, so the result is thread-count
/// independent.
fn transpose(src: &[Complex64], dst: &mut [Complex64], row_len: usize, rows: usize) {
    const TILE: usize = 64;
    dst.par_chunks_mut(TILE * rows)
        .enumerate()
        .for_each(|(block, out)| {
            let i0 = block * TILE;
            let i_span = out.len() / rows;
            for j0 in (0..rows).step_by(TILE) {
                let j_end = (j0 + TILE).min(rows);
                for di in 0..i_span {
                    let i = i0 + di;
                    let row = &mut out[di * rows..(di + 1) * rows];
                    for j in j0..j_end {
                        row[j] = src[j * row_len + i];
                    }
                }
            }
        });
}
