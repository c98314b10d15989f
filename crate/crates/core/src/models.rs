//! Model parameterization and nonlinear tendencies for the KP family
//! (KP-I/II, the dissipatively regularized dispersionless equation, the KdV
//! sector) and the hyperbolic-elliptic Davey-Stewartson system.
//!
//! Nonlinear products are formed pointwise in physical space without
//! dealiasing; a 2/3-rule mask is available as a run option but is not the
//! default, and it does not stabilize runs close to a gradient catastrophe.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{RealField, SpectralField, SpectralGrid};
use crate::linear::{ds_symbol, kdv_symbol, kp_symbol, SymbolTable};

/// Which PDE is being integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// KP-I/II with small dispersion `epsilon`.
    Kp,
    /// Dispersionless KP, optionally with dissipative regularization
    /// `sigma`; `sigma = 0` is the unregularized equation, usable only up
    /// to blow-up detection.
    DkpReg,
    /// The KdV sector: no transverse coupling, `y`-independent dynamics.
    Kdv,
    /// Davey-Stewartson envelope system in the comoving frame.
    Ds,
}

impl ModelKind {
    pub fn as_u8(self) -> u8 {
        match self {
            ModelKind::Kp => 0,
            ModelKind::DkpReg => 1,
            ModelKind::Kdv => 2,
            ModelKind::Ds => 3,
        }
    }

    pub fn from_u8(v: u8) -> Result<Self> {
        Ok(match v {
            0 => ModelKind::Kp,
            1 => ModelKind::DkpReg,
            2 => ModelKind::Kdv,
            3 => ModelKind::Ds,
            _ => {
                return Err(Error::InvalidInput(format!("unknown model kind code {v}")));
            }
        })
    }
}

/// A fully parameterized model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Transverse sign, `+1` (KP-II) or `-1` (KP-I).
    pub lambda: f64,
    /// Dispersion parameter, `> 0` for KP/KdV, `0` for the dispersionless
    /// equation.
    pub epsilon: f64,
    /// Dissipation parameter of the regularized dispersionless equation.
    pub sigma: f64,
    /// DS carrier wavenumber.
    pub eta: f64,
}

impl ModelSpec {
    pub fn kp(lambda: f64, epsilon: f64) -> Result<Self> {
        let spec = Self {
            kind: ModelKind::Kp,
            lambda,
            epsilon,
            sigma: 0.0,
            eta: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dkp(lambda: f64, sigma: f64) -> Result<Self> {
        let spec = Self {
            kind: ModelKind::DkpReg,
            lambda,
            epsilon: 0.0,
            sigma,
            eta: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn kdv(epsilon: f64) -> Result<Self> {
        let spec = Self {
            kind: ModelKind::Kdv,
            lambda: 1.0,
            epsilon,
            sigma: 0.0,
            eta: 1.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ds(eta: f64) -> Result<Self> {
        let spec = Self {
            kind: ModelKind::Ds,
            lambda: 1.0,
            epsilon: 0.0,
            sigma: 0.0,
            eta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambda != 1.0 && self.lambda != -1.0 {
            return Err(Error::InvalidInput(format!(
                "lambda must be +1 or -1, got {}",
                self.lambda
            )));
        }
        match self.kind {
            ModelKind::Kp => {
                if !(self.epsilon > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "KP requires epsilon > 0, got {}",
                        self.epsilon
                    )));
                }
                if self.sigma != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "KP has no dissipation; kind and sigma = {} conflict",
                        self.sigma
                    )));
                }
            }
            ModelKind::DkpReg => {
                if self.epsilon != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "dispersionless KP requires epsilon = 0; kind and epsilon = {} conflict",
                        self.epsilon
                    )));
                }
                if self.sigma < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "sigma must be nonnegative, got {}",
                        self.sigma
                    )));
                }
            }
            ModelKind::Kdv => {
                if !(self.epsilon > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "KdV requires epsilon > 0, got {}",
                        self.epsilon
                    )));
                }
            }
            ModelKind::Ds => {
                if self.lambda != 1.0 {
                    return Err(Error::UnsupportedDsRegime);
                }
                if !(self.eta > 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "DS requires eta > 0, got {}",
                        self.eta
                    )));
                }
            }
        }
        Ok(())
    }

    /// Linear symbol table for this model on a grid.
    pub fn symbol(&self, grid: &SpectralGrid) -> Result<SymbolTable> {
        self.validate()?;
        Ok(match self.kind {
            ModelKind::Kp => kp_symbol(grid, self.lambda, self.epsilon, 0.0),
            ModelKind::DkpReg => kp_symbol(grid, self.lambda, 0.0, self.sigma),
            ModelKind::Kdv => kdv_symbol(grid, self.epsilon),
            ModelKind::Ds => ds_symbol(grid, self.lambda, self.eta)?,
        })
    }

    /// Whether the evolutionary form involves the singular `1/kx` multiplier
    /// and hence prefers zero-x-mean data.
    pub fn requires_constraint(&self) -> bool {
        matches!(self.kind, ModelKind::Kp | ModelKind::DkpReg)
    }
}

/// Multiplier applied to the transform of `u^2` in the KP tendency:
/// `-i*kx/2`, with the unpaired Nyquist mode zeroed as for any odd-order
/// derivative symbol.
pub(crate) fn kp_tendency_multiplier(grid: &SpectralGrid) -> Vec<Complex64> {
    let nx = grid.nx();
    grid.kx()
        .iter()
        .enumerate()
        .map(|(ix, &kx)| {
            if ix == nx / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, -kx / 2.0)
            }
        })
        .collect()
}

/// KP nonlinear tendency: `N(u_hat) = -(i*kx/2) * F(u^2)` with the square
/// formed pointwise in physical space, so that
/// `d/dt u_hat + i*theta*u_hat = N(u_hat)`.
pub fn kp_nonlinear(u_hat: &SpectralField) -> SpectralField {
    let grid = u_hat.grid().clone();
    let u = u_hat.to_real();
    let squared =
        RealField::from_values(&grid, u.values().iter().map(|&v| v * v).collect())
            .expect("same grid");
    let mut out = squared.to_spectral();
    let mult = kp_tendency_multiplier(&grid);
    let nx = grid.nx();
    for row in out.coeffs_mut().chunks_mut(nx) {
        for (c, m) in row.iter_mut().zip(&mult) {
            *c *= m;
        }
    }
    out
}

/// Tendency of the (regularized) dispersionless equation: identical to the
/// KP tendency, the dissipation lives in the linear symbol.
pub fn dkp_nonlinear(u_hat: &SpectralField) -> SpectralField {
    kp_nonlinear(u_hat)
}

/// Mean-field multiplier `-eta*kx^2 / (3*eta^2*kx^2 + lambda*ky^2)`, zero at
/// the origin mode (a gauge choice: a constant in the mean field only shifts
/// the envelope's global phase).
pub(crate) fn ds_mean_multiplier(grid: &SpectralGrid, eta: f64, lambda: f64) -> Vec<f64> {
    let mut mult = Vec::with_capacity(grid.len());
    for &ky in grid.ky() {
        for &kx in grid.kx() {
            let denom = 3.0 * eta * eta * kx * kx + lambda * ky * ky;
            if denom == 0.0 {
                mult.push(0.0);
            } else {
                mult.push(-eta * kx * kx / denom);
            }
        }
    }
    mult
}

/// Mean field of the DS system: the multiplier applied to the transform of
/// `|psi|^2`. Only the hyperbolic-elliptic case `lambda = +1` is defined;
/// for `lambda = -1` the denominator vanishes on lines in the `k`-plane.
pub fn ds_mean_field(psi_hat: &SpectralField, eta: f64, lambda: f64) -> Result<SpectralField> {
    if lambda != 1.0 {
        return Err(Error::UnsupportedDsRegime);
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "eta must be positive, got {eta}"
        )));
    }
    let grid = psi_hat.grid().clone();
    let psi = psi_hat.to_complex_values();
    let m: Vec<Complex64> = psi
        .iter()
        .map(|p| Complex64::new(p.norm_sqr(), 0.0))
        .collect();
    let mut m_hat = SpectralField::from_complex_values(&grid, m)?;
    let mult = ds_mean_multiplier(&grid, eta, lambda);
    for (c, &f) in m_hat.coeffs_mut().iter_mut().zip(&mult) {
        *c *= f;
    }
    Ok(m_hat)
}

/// DS nonlinear tendency:
/// `N(psi_hat) = -i * F(psi * (|psi|^2/(6*eta) + eta*phi))`, with the mean
/// field `phi` from [`ds_mean_field`], so that
/// `d/dtau psi_hat + i*theta*psi_hat = N(psi_hat)`.
pub fn ds_nonlinear(psi_hat: &SpectralField, eta: f64) -> Result<SpectralField> {
    let grid = psi_hat.grid().clone();
    let psi = psi_hat.to_complex_values();
    let phi_hat = ds_mean_field(psi_hat, eta, 1.0)?;
    // phi is real up to rounding; force it exactly real so the pointwise
    // products conserve the discrete wave energy
    let phi: Vec<f64> = phi_hat.to_complex_values().iter().map(|c| c.re).collect();
    let q: Vec<Complex64> = psi
        .iter()
        .zip(&phi)
        .map(|(p, &f)| p * (p.norm_sqr() / (6.0 * eta) + eta * f))
        .collect();
    let mut out = SpectralField::from_complex_values(&grid, q)?;
    for c in out.coeffs_mut() {
        *c *= Complex64::new(0.0, -1.0);
    }
    Ok(out)
}

/// The slowly varying DS envelope, stored as its Fourier coefficients on the
/// comoving `(xi, y)` grid.
#[derive(Debug, Clone)]
pub struct DsState {
    psi_hat: SpectralField,
}

impl DsState {
    /// Real-valued initial envelope.
    pub fn from_real_envelope(psi: &RealField) -> Self {
        Self {
            psi_hat: psi.to_spectral(),
        }
    }

    pub fn from_spectral(psi_hat: SpectralField) -> Self {
        Self { psi_hat }
    }

    pub fn grid(&self) -> &SpectralGrid {
        self.psi_hat.grid()
    }

    pub fn psi_hat(&self) -> &SpectralField {
        &self.psi_hat
    }

    /// Physical-space envelope samples.
    pub fn psi(&self) -> Vec<Complex64> {
        self.psi_hat.to_complex_values()
    }

    /// Conserved wave energy, the squared L2 norm of the envelope, via
    /// Parseval.
    pub fn wave_energy(&self) -> f64 {
        let grid = self.grid();
        let quad = grid.hx() * grid.hy() / grid.len() as f64;
        quad * self
            .psi_hat
            .coeffs()
            .iter()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
    }
}

/// Largest pointwise deviation from Hermitian symmetry, relative to the peak
/// coefficient. Zero for the transform of a real field.
pub fn hermitian_asymmetry(f: &SpectralField) -> f64 {
    let grid = f.grid();
    let (nx, ny) = (grid.nx(), grid.ny());
    let peak = f.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for iy in 0..ny {
        for ix in 0..nx {
            let a = f.at(iy, ix);
            let b = f.at((ny - iy) % ny, (nx - ix) % nx).conj();
            worst = worst.max((a - b).norm());
        }
    }
    worst / peak
}
