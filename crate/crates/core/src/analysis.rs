//! Conserved quantities, error norms, asymptotic reconstruction, break-time
//! estimation, and power-law regression.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{constraint_residual, spectral_translate, RealField, SpectralField, REGULARIZATION_DELTA};
use crate::models::DsState;

/// Time series of the quantities monitored during a run. Columns are
/// parallel to `times`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DiagnosticsSeries {
    pub times: Vec<f64>,
    /// Discrete mass `M[u(t)]` (for DS runs: the wave energy `N[psi]`).
    pub mass: Vec<f64>,
    /// Relative mass defect `err(t) = 1 - M[u(t)]/M[u_I]`.
    pub err: Vec<f64>,
    /// `max |d/dx u|` over the grid.
    pub max_grad: Vec<f64>,
    /// Energy with the coefficient placement exactly as printed in the
    /// energy functional (dispersion weight on the cubic term).
    pub energy_printed: Option<Vec<f64>>,
    /// Energy with the conventional placement (dispersion weight on the
    /// gradient term); this is the variant the KP flow actually conserves
    /// when `epsilon != 1`.
    pub energy_conventional: Option<Vec<f64>>,
    /// Wave energy of a DS run.
    pub wave_energy: Option<Vec<f64>>,
}

impl DiagnosticsSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Power-law regression output for `-log10(delta) = -a*log10(eps) + b'`;
/// `a` is the fitted decay rate, `b` the intercept of `log10(delta)`
/// against `log10(eps)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// Slope magnitude of `log10(delta)` vs `log10(eps)`.
    pub a: f64,
    /// Intercept of `log10(delta)` vs `log10(eps)`.
    pub b: f64,
    /// Pearson correlation coefficient.
    pub r: f64,
    /// Residual-based standard error of the slope (`n - 2` degrees of
    /// freedom).
    pub sigma_a: f64,
    /// Point count.
    pub n: usize,
}

/// Discrete `int u^2 dx dy` by spectral (Parseval) quadrature, exact for
/// trigonometric polynomials.
pub fn mass(u: &RealField) -> f64 {
    mass_spectral(&u.to_spectral())
}

/// Same quadrature evaluated from the coefficient table.
pub fn mass_spectral(u_hat: &SpectralField) -> f64 {
    let grid = u_hat.grid();
    let quad = grid.hx() * grid.hy() / grid.len() as f64;
    quad * u_hat.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
}

/// Physical-space quadrature variant of [`mass`]; agrees with the spectral
/// route to rounding (Parseval).
pub fn mass_physical(u: &RealField) -> f64 {
    let grid = u.grid();
    grid.hx() * grid.hy() * u.values().iter().map(|&v| v * v).sum::<f64>()
}

/// Both placements of the energy functional plus the constraint residual of
/// the input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    /// `1/2 int (u_x)^2 - lambda (dx^{-1} u_y)^2 - eps^2/3 u^3`, the
    /// printed placement.
    pub printed: f64,
    /// `1/2 int eps^2 (u_x)^2 - lambda (dx^{-1} u_y)^2 - 1/3 u^3`, the
    /// conventional placement (conserved by the flow).
    pub conventional: f64,
    /// Relative size of the `kx = 0` coefficients of the input.
    pub constraint_residual: f64,
}

/// Evaluate the energy functional in both placements. The anti-derivative
/// term needs zero-x-mean data; a warning is logged when the constraint
/// residual exceeds `1e-10` (the integrand then has a cusp along the
/// `x`-axis and the quadrature degrades).
pub fn energy(u: &RealField, lambda: f64, epsilon: f64) -> EnergyReport {
    let grid = u.grid().clone();
    let hat = u.to_spectral();
    let residual = constraint_residual(&hat);
    if residual > 1e-10 {
        log::warn!(
            "energy evaluated on data violating the zero-x-mean constraint (residual {residual:.2e})"
        );
    }
    let (nx, ny) = (grid.nx(), grid.ny());
    let quad = grid.hx() * grid.hy() / grid.len() as f64;
    let mut grad_sq = 0.0;
    let mut tail_sq = 0.0;
    for (iy, &ky) in grid.ky().iter().enumerate() {
        for (ix, &kx) in grid.kx().iter().enumerate() {
            let c2 = hat.at(iy, ix).norm_sqr();
            if ix != nx / 2 {
                grad_sq += kx * kx * c2;
            }
            // dx^{-1} dy multiplier ky/(kx + i lambda delta), kx = 0 row zero
            if ix != 0 && iy != ny / 2 {
                let m = Complex64::new(ky, 0.0) / Complex64::new(kx, lambda * REGULARIZATION_DELTA);
                tail_sq += m.norm_sqr() * c2;
            }
        }
    }
    let t1 = quad * grad_sq;
    let t2 = quad * tail_sq;
    let t3 = grid.hx() * grid.hy() * u.values().iter().map(|&v| v * v * v).sum::<f64>();
    EnergyReport {
        printed: 0.5 * (t1 - lambda * t2 - epsilon * epsilon / 3.0 * t3),
        conventional: 0.5 * (epsilon * epsilon * t1 - lambda * t2 - t3 / 3.0),
        constraint_residual: residual,
    }
}

/// Relative mass defect column `err(t) = 1 - M[u(t)]/M[u_I]` from a mass
/// column. Rejects zero initial mass.
pub fn err_mass(mass_column: &[f64]) -> Result<Vec<f64>> {
    let m0 = *mass_column
        .first()
        .ok_or_else(|| Error::InvalidInput("empty mass column".into()))?;
    if m0 == 0.0 {
        return Err(Error::InvalidInput(
            "initial mass is zero; err(t) undefined".into(),
        ));
    }
    Ok(mass_column.iter().map(|&m| 1.0 - m / m0).collect())
}

/// `(Delta_2, Delta_inf)` between two fields on the same grid:
/// `Delta_2 = 1/(2 pi sqrt(Lx Ly)) * (int (u - v)^2)^{1/2}` (so a constant
/// difference `c` maps to `|c|`), `Delta_inf = max |u - v|`.
pub fn field_diff_norms(u: &RealField, v: &RealField) -> Result<(f64, f64)> {
    if !u.grid().same_as(v.grid()) {
        return Err(Error::InvalidInput(
            "field difference requires identical grids".into(),
        ));
    }
    let grid = u.grid();
    let mut sq = 0.0;
    let mut sup: f64 = 0.0;
    for (a, b) in u.values().iter().zip(v.values()) {
        let d = a - b;
        sq += d * d;
        sup = sup.max(d.abs());
    }
    let integral = grid.hx() * grid.hy() * sq;
    let delta2 =
        integral.sqrt() / (2.0 * std::f64::consts::PI * (grid.lx() * grid.ly()).sqrt());
    Ok((delta2, sup))
}

/// Leading-order reconstruction of the KP solution from the DS envelope:
/// `u_app(t, x, y) = 2 eps Re( psi(eps t, x + 3 eta^2 t, y)
/// e^{i (eta x + eta^3 t)/eps} )`, with the comoving drift applied
/// spectrally. `psi` must already be evolved to `tau = eps * t`.
pub fn reconstruct_uapp(psi: &DsState, t: f64, epsilon: f64, eta: f64) -> Result<RealField> {
    let grid = psi.grid().clone();
    let points_per_wavelength = epsilon * grid.nx() as f64 / (grid.lx() * eta);
    if points_per_wavelength < 8.0 {
        return Err(Error::InvalidInput(format!(
            "carrier wavelength eps/eta = {:.3e} unresolved: {:.1} points per wavelength (need >= 8)",
            epsilon / eta,
            points_per_wavelength
        )));
    }
    let shifted = spectral_translate(psi.psi_hat(), 3.0 * eta * eta * t);
    let psi_phys = SpectralField::from_coeffs(&grid, shifted.coeffs().to_vec())?.to_complex_values();
    let omega_t = eta * eta * eta * t;
    let mut values = Vec::with_capacity(grid.len());
    for iy in 0..grid.ny() {
        for (ix, &x) in grid.x().iter().enumerate() {
            let carrier = Complex64::from_polar(1.0, (eta * x + omega_t) / epsilon);
            values.push(2.0 * epsilon * (psi_phys[iy * grid.nx() + ix] * carrier).re);
        }
    }
    RealField::from_values(&grid, values)
}

/// Break time of the 1-D dispersionless (Hopf) flow for the initial slice
/// `u_I`: `t_c = 1/max(-u_I')` when the maximum is positive, `None`
/// otherwise (no characteristic crossing). The slice is differentiated
/// spectrally and the maximum refined on the trigonometric interpolant.
pub fn hopf_break_time(slice: &[f64], hx: f64) -> Option<f64> {
    let n = slice.len();
    if n < 4 || !(hx > 0.0) {
        return None;
    }
    // spectral derivative of the slice
    let mut buf: Vec<Complex64> = slice.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let plan = rustfft::FftPlanner::new().plan_fft_forward(n);
    plan.process(&mut buf);
    // signed wavenumbers k_m = 2 pi m / (n hx); Nyquist zeroed (odd order)
    let base = 2.0 * std::f64::consts::PI / (n as f64 * hx);
    let mut dhat = vec![Complex64::new(0.0, 0.0); n];
    for (m, c) in buf.iter().enumerate() {
        let signed = if m <= n / 2 {
            m as isize
        } else {
            m as isize - n as isize
        };
        if n % 2 == 0 && m == n / 2 {
            continue;
        }
        dhat[m] = Complex64::new(0.0, signed as f64 * base) * c;
    }
    // -u' at the sample points
    let inv = rustfft::FftPlanner::new().plan_fft_inverse(n);
    let mut deriv = dhat.clone();
    inv.process(&mut deriv);
    let g_samples: Vec<f64> = deriv.iter().map(|c| -c.re / n as f64).collect();
    let (j_best, &g_best) = g_samples
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())?;
    if g_best <= 0.0 {
        return None;
    }
    // refine on the interpolant: -u'(s) for fractional sample coordinate s
    let g_of = |s: f64| -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in dhat.iter().enumerate() {
            let signed = if m <= n / 2 {
                m as isize
            } else {
                m as isize - n as isize
            };
            let phase = 2.0 * std::f64::consts::PI * signed as f64 * s / n as f64;
            acc += c * Complex64::from_polar(1.0, phase);
        }
        -acc.re / n as f64
    };
    // golden-section search within one sample of the discrete argmax
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut lo = j_best as f64 - 1.0;
    let mut hi = j_best as f64 + 1.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = g_of(x1);
    let mut f2 = g_of(x2);
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = g_of(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = g_of(x1);
        }
    }
    let g_max = f1.max(f2).max(g_best);
    if g_max <= 0.0 {
        None
    } else {
        Some(1.0 / g_max)
    }
}

/// Ordinary least squares of `log10(delta)` against `log10(eps)`.
/// All inputs must be positive; at least two distinct `eps` are required.
pub fn power_law_fit(eps_values: &[f64], errors: &[f64]) -> Result<FitResult> {
    if eps_values.len() != errors.len() {
        return Err(Error::InvalidInput(format!(
            "mismatched lengths: {} eps vs {} errors",
            eps_values.len(),
            errors.len()
        )));
    }
    let n = eps_values.len();
    if n < 2 {
        return Err(Error::InvalidInput(
            "power-law fit needs at least 2 points".into(),
        ));
    }
    if eps_values.iter().chain(errors).any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(
            "power-law fit requires strictly positive inputs".into(),
        ));
    }
    let xs: Vec<f64> = eps_values.iter().map(|v| v.log10()).collect();
    let ys: Vec<f64> = errors.iter().map(|v| v.log10()).collect();
    let nf = n as f64;
    let xbar = xs.iter().sum::<f64>() / nf;
    let ybar = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let syy: f64 = ys.iter().map(|y| (y - ybar) * (y - ybar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput(
            "power-law fit requires at least two distinct eps values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let r = if syy == 0.0 {
        1.0
    } else {
        sxy / (sxx * syy).sqrt()
    };
    let sigma_a = if n > 2 {
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - (intercept + slope * x);
                e * e
            })
            .sum();
        (ss_res / (n as f64 - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Ok(FitResult {
        a: slope.abs(),
        b: intercept,
        r,
        sigma_a,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{project_constraint, SpectralGrid};
    use crate::initial_data;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn grid(nx: usize, ny: usize, lx: f64, ly: f64) -> SpectralGrid {
        SpectralGrid::new(nx, ny, lx, ly).unwrap()
    }

    #[test]
    fn mass_of_zero_and_sine() {
        let g = grid(32, 32, 1.0, 1.0);
        assert_eq!(mass(&RealField::zeros(&g)), 0.0);
        let u = RealField::from_fn(&g, |x, _| x.sin());
        let expect = 2.0 * std::f64::consts::PI * std::f64::consts::PI;
        assert!((mass(&u) - expect).abs() / expect < 1e-13);
    }

    #[test]
    fn mass_parseval_consistency() {
        let g = grid(32, 16, 2.0, 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let u = RealField::from_values(
            &g,
            (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let spectral = mass(&u);
        let physical = mass_physical(&u);
        assert!((spectral - physical).abs() / physical < 1e-12);
    }

    #[test]
    fn energy_of_zero_and_single_mode() {
        let g = grid(32, 16, 1.0, 1.0);
        let zero = energy(&RealField::zeros(&g), 1.0, 1.0);
        assert_eq!(zero.printed, 0.0);
        assert_eq!(zero.conventional, 0.0);

        // u = sin(x): gradient term is pi^2 after the 1/2; y-term and cubic
        // term vanish
        let u = RealField::from_fn(&g, |x, _| x.sin());
        let e = energy(&u, 1.0, 1.0);
        let expect = std::f64::consts::PI * std::f64::consts::PI;
        assert!((e.printed - expect).abs() < 1e-10, "printed = {}", e.printed);
        // identical placements at epsilon = 1
        assert!((e.printed - e.conventional).abs() < 1e-12);
    }

    #[test]
    fn energy_y_term_vanishes_for_y_independent_field() {
        let g = grid(32, 16, 1.0, 1.0);
        let u = RealField::from_fn(&g, |x, _| x.sin() + 0.2 * (3.0 * x).cos());
        let with_plus = energy(&u, 1.0, 0.5);
        let with_minus = energy(&u, -1.0, 0.5);
        // lambda enters only through the y-term
        assert!((with_plus.printed - with_minus.printed).abs() < 1e-12);
    }

    #[test]
    fn err_mass_basics() {
        let col = vec![2.0, 2.0, 1.9];
        let err = err_mass(&col).unwrap();
        assert_eq!(err[0], 0.0);
        assert!((err[2] - 0.05).abs() < 1e-15);
        assert!(err_mass(&[0.0, 1.0]).is_err());
        assert!(err_mass(&[]).is_err());
    }

    #[test]
    fn diff_norms_basics() {
        let g = grid(16, 16, 2.0, 0.5);
        let u = RealField::from_fn(&g, |x, y| x.sin() + y.cos());
        let (d2, dinf) = field_diff_norms(&u, &u).unwrap();
        assert_eq!(d2, 0.0);
        assert_eq!(dinf, 0.0);
        // constant offset c: both norms equal |c|
        let c = 0.37;
        let v = RealField::from_values(&g, u.values().iter().map(|&a| a + c).collect()).unwrap();
        let (d2, dinf) = field_diff_norms(&u, &v).unwrap();
        assert!((d2 - c).abs() < 1e-13, "d2 = {d2}");
        assert!((dinf - c).abs() < 1e-15);
        // grid mismatch is an error
        let g2 = grid(16, 16, 2.0, 0.6);
        let w = RealField::zeros(&g2);
        assert!(field_diff_norms(&u, &w).is_err());
    }

    #[test]
    fn diff_norm_metric_axioms() {
        let g = grid(16, 8, 1.0, 1.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut rand_field = || {
            RealField::from_values(
                &g,
                (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            )
            .unwrap()
        };
        for _ in 0..20 {
            let u = rand_field();
            let v = rand_field();
            let w = rand_field();
            let (duv2, duvi) = field_diff_norms(&u, &v).unwrap();
            let (dvu2, dvui) = field_diff_norms(&v, &u).unwrap();
            assert!((duv2 - dvu2).abs() < 1e-14);
            assert!((duvi - dvui).abs() < 1e-14);
            let (duw2, duwi) = field_diff_norms(&u, &w).unwrap();
            let (dvw2, dvwi) = field_diff_norms(&v, &w).unwrap();
            assert!(duw2 <= duv2 + dvw2 + 1e-12);
            assert!(duwi <= duvi + dvwi + 1e-12);
        }
    }

    #[test]
    fn reconstruct_at_t0_matches_unprojected_packet() {
        let g = grid(512, 64, 10.0, 10.0);
        let eps = 0.2;
        let psi = initial_data::radial_dx_sech2(&g, 1.0, 1.0);
        let state = DsState::from_real_envelope(&psi);
        let uapp = reconstruct_uapp(&state, 0.0, eps, 1.0).unwrap();
        let expect = RealField::from_fn(&g, |x, y| {
            let r = (x * x + y * y).sqrt();
            let p = if r == 0.0 {
                0.0
            } else {
                2.0 * (1.0 / r.cosh()).powi(2) * r.tanh() * x / r
            };
            2.0 * eps * p * (x / eps).cos()
        });
        let diff = uapp
            .values()
            .iter()
            .zip(expect.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-12, "diff = {diff}");
    }

    #[test]
    fn reconstruct_rejects_unresolved_carrier() {
        let g = grid(64, 16, 10.0, 10.0);
        let psi = initial_data::radial_dx_sech2(&g, 1.0, 1.0);
        let state = DsState::from_real_envelope(&psi);
        assert!(reconstruct_uapp(&state, 0.0, 0.05, 1.0).is_err());
    }

    #[test]
    fn reconstruct_phase_shift_bound() {
        let g = grid(512, 32, 10.0, 10.0);
        let eps = 0.2;
        let alpha = 0.01;
        let psi = initial_data::radial_dx_sech2(&g, 1.0, 1.0);
        let base = DsState::from_real_envelope(&psi);
        let shifted = {
            let mut hat = base.psi_hat().clone();
            for c in hat.coeffs_mut() {
                *c *= Complex64::from_polar(1.0, alpha);
            }
            DsState::from_spectral(hat)
        };
        let u1 = reconstruct_uapp(&base, 0.0, eps, 1.0).unwrap();
        let u2 = reconstruct_uapp(&shifted, 0.0, eps, 1.0).unwrap();
        let max_psi = psi.max_abs();
        let bound = 2.0 * eps * max_psi * alpha * 1.0001;
        let (d2, dinf) = field_diff_norms(&u1, &u2).unwrap();
        assert!(dinf <= bound, "dinf = {dinf}, bound = {bound}");
        assert!(d2 <= bound);
    }

    #[test]
    fn hopf_break_time_of_minus_sine() {
        let g = grid(256, 4, 1.0, 1.0);
        let slice: Vec<f64> = g.x().iter().map(|&x| -x.sin()).collect();
        let tc = hopf_break_time(&slice, g.hx()).unwrap();
        assert!((tc - 1.0).abs() < 1e-10, "tc = {tc}");
    }

    #[test]
    fn hopf_break_time_of_radial_slice() {
        // u_I(x, 0) = 12 sech^2(x) tanh(x); analytic maximum of -u_I' is
        // 12 * 1/3 * (2 - 1) = 4 at sech^2 = 1/3, so t_c = 1/4.
        let g = grid(2048, 4, 10.0, 10.0);
        let slice: Vec<f64> = g
            .x()
            .iter()
            .map(|&x| {
                let s = 1.0 / x.cosh();
                12.0 * s * s * x.tanh()
            })
            .collect();
        let tc = hopf_break_time(&slice, g.hx()).unwrap();
        assert!((tc - 0.25).abs() < 1e-6, "tc = {tc}");

        // dense-scan oracle on the closed-form derivative
        let mut gmax: f64 = 0.0;
        for i in 0..1_000_000 {
            let x = 3.0 * i as f64 / 1_000_000.0;
            let s2 = (1.0 / x.cosh()).powi(2);
            gmax = gmax.max(12.0 * s2 * (2.0 - 3.0 * s2));
        }
        assert!((1.0 / gmax - 0.25).abs() < 1e-9);
        assert!((tc - 1.0 / gmax).abs() < 1e-7);
    }

    #[test]
    fn hopf_no_breaking_only_without_negative_slope() {
        let g = grid(128, 4, 1.0, 1.0);
        // a non-constant periodic slice always has negative slope somewhere,
        // so breaking occurs
        let slice: Vec<f64> = g.x().iter().map(|&x| x.sin()).collect();
        assert!(hopf_break_time(&slice, g.hx()).is_some());
        // constant data: derivative identically zero, no characteristic
        // crossing
        let constant = vec![1.5; g.nx()];
        assert!(hopf_break_time(&constant, g.hx()).is_none());
    }

    #[test]
    fn hopf_translation_and_scaling_invariance() {
        let g = grid(512, 4, 5.0, 1.0);
        let f = |x: f64| {
            let s = 1.0 / x.cosh();
            s * s * x.tanh()
        };
        let base: Vec<f64> = g.x().iter().map(|&x| f(x)).collect();
        let shifted: Vec<f64> = g.x().iter().map(|&x| f(x - 2.0)).collect();
        let t1 = hopf_break_time(&base, g.hx()).unwrap();
        let t2 = hopf_break_time(&shifted, g.hx()).unwrap();
        assert!((t1 - t2).abs() < 1e-9 * t1);
        let scaled: Vec<f64> = base.iter().map(|&v| 3.0 * v).collect();
        let t3 = hopf_break_time(&scaled, g.hx()).unwrap();
        assert!((t3 - t1 / 3.0).abs() < 1e-9 * t1);
    }

    #[test]
    fn power_law_fit_exact_line() {
        let eps = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = eps.iter().map(|&e| 10.0 * e * e).collect();
        let fit = power_law_fit(&eps, &errs).unwrap();
        assert!((fit.a - 2.0).abs() < 1e-12);
        assert!((fit.b - 1.0).abs() < 1e-12);
        assert!((fit.r - 1.0).abs() < 1e-12);
        assert!(fit.sigma_a.abs() < 1e-12);
        assert_eq!(fit.n, 4);
    }

    #[test]
    fn power_law_fit_rejects_bad_input() {
        assert!(power_law_fit(&[0.1], &[1.0]).is_err());
        assert!(power_law_fit(&[0.1, 0.2], &[1.0]).is_err());
        assert!(power_law_fit(&[0.1, -0.2], &[1.0, 1.0]).is_err());
        assert!(power_law_fit(&[0.1, 0.2], &[0.0, 1.0]).is_err());
        assert!(power_law_fit(&[0.1, 0.1], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn power_law_fit_with_noise_recovers_slope() {
        // multiplicative 5% jitter, fixed seed
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let eps: Vec<f64> = (0..8).map(|i| 0.1 / 1.5f64.powi(i)).collect();
        let errs: Vec<f64> = eps
            .iter()
            .map(|&e| 5.0 * e.powf(2.5) * (1.0 + rng.gen_range(-0.05..0.05)))
            .collect();
        let fit = power_law_fit(&eps, &errs).unwrap();
        assert!((fit.a - 2.5).abs() < 0.1, "a = {}", fit.a);
        assert!(fit.sigma_a > 0.0);
        assert!(fit.r > 0.99);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fit_invariant_under_error_rescaling(scale in 0.01f64..100.0) {
            let eps = [0.1, 0.0562, 0.0316, 0.01];
            let errs = [0.02, 0.008, 0.0035, 0.0006];
            let base = power_law_fit(&eps, &errs).unwrap();
            let scaled: Vec<f64> = errs.iter().map(|&e| e * scale).collect();
            let fit = power_law_fit(&eps, &scaled).unwrap();
            prop_assert!((fit.a - base.a).abs() < 1e-10);
            prop_assert!((fit.r - base.r).abs() < 1e-10);
            prop_assert!((fit.sigma_a - base.sigma_a).abs() < 1e-10);
            prop_assert!((fit.b - (base.b + scale.log10())).abs() < 1e-10);
        }
    }

    #[test]
    fn constrained_projection_keeps_mass_sane() {
        let g = grid(64, 32, 5.0, 5.0);
        let u = initial_data::radial_dx_sech2(&g, 6.0, 1.0);
        let p = project_constraint(&u);
        assert!((mass(&u) - mass(&p)).abs() / mass(&u) < 1e-10);
    }
}
