//! Linear-propagator symbols and integrating factors, the exact linear-flow
//! oracle, and the two closed-form kernels of the linear theory (Airy
//! oscillations in `x`, algebraic tail kernel in the transverse cone).
//!
//! A symbol table stores `theta(kx, ky)` with the convention
//!
//! ```text
//!     d/dt u_hat + i * theta * u_hat = N(u_hat),
//! ```
//!
//! so the integrating factor over a step is `e^{-i*theta*dt}`. For the KP
//! family `theta = lambda*ky^2/(kx + i*lambda*delta) - eps^2*kx^3 -
//! i*sigma*kx^2`; the machine-epsilon regularization makes the factor
//! underflow to exactly 0 on the `kx = 0, ky != 0` modes while leaving the
//! mean mode untouched.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{zero_kx0, RealField, SpectralGrid, REGULARIZATION_DELTA};

/// Linear symbol `theta` per mode, in the layout of the grid's coefficient
/// table.
#[derive(Debug, Clone)]
pub struct SymbolTable {
    grid: SpectralGrid,
    theta: Vec<Complex64>,
}

impl SymbolTable {
    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn theta(&self) -> &[Complex64] {
        &self.theta
    }

    /// Integrating factor `e^{-i*theta*dt}` per mode.
    pub fn factor(&self, dt: f64) -> Vec<Complex64> {
        self.theta
            .iter()
            .map(|th| {
                // -i*(a+ib)*dt = b*dt - i*a*dt
                let modulus = (th.im * dt).exp();
                Complex64::from_polar(modulus, -th.re * dt)
            })
            .collect()
    }
}

/// Symbol for the KP family: `lambda = +/-1` transverse sign, `epsilon >= 0`
/// dispersion, `sigma >= 0` dissipation. `epsilon > 0, sigma = 0` is KP;
/// `epsilon = 0` is the dispersionless equation, dissipatively regularized
/// when `sigma > 0`.
pub fn kp_symbol(grid: &SpectralGrid, lambda: f64, epsilon: f64, sigma: f64) -> SymbolTable {
    debug_assert!(lambda == 1.0 || lambda == -1.0);
    let mut theta = Vec::with_capacity(grid.len());
    for &ky in grid.ky() {
        let ky2 = ky * ky;
        for &kx in grid.kx() {
            let transverse = Complex64::new(lambda * ky2, 0.0)
                / Complex64::new(kx, lambda * REGULARIZATION_DELTA);
            let dispersive = epsilon * epsilon * kx.powi(3);
            let dissipative = sigma * kx * kx;
            theta.push(transverse - Complex64::new(dispersive, dissipative));
        }
    }
    SymbolTable {
        grid: grid.clone(),
        theta,
    }
}

/// Symbol for the KdV sector: no transverse term at all, each `y` row is an
/// independent KdV line.
pub fn kdv_symbol(grid: &SpectralGrid, epsilon: f64) -> SymbolTable {
    let mut theta = Vec::with_capacity(grid.len());
    for _ in grid.ky() {
        for &kx in grid.kx() {
            theta.push(Complex64::new(-epsilon * epsilon * kx.powi(3), 0.0));
        }
    }
    SymbolTable {
        grid: grid.clone(),
        theta,
    }
}

/// Symbol for the hyperbolic-elliptic DS system in the comoving frame:
/// the factor is `e^{i*dt*(3*eta*kx^2 - lambda*ky^2/eta)}`. Only
/// `lambda = +1` is supported.
pub fn ds_symbol(grid: &SpectralGrid, lambda: f64, eta: f64) -> Result<SymbolTable> {
    if lambda != 1.0 {
        return Err(Error::UnsupportedDsRegime);
    }
    if !(eta > 0.0) {
        return Err(Error::InvalidInput(format!(
            "DS carrier wavenumber eta must be positive, got {eta}"
        )));
    }
    let mut theta = Vec::with_capacity(grid.len());
    for &ky in grid.ky() {
        for &kx in grid.kx() {
            theta.push(Complex64::new(
                lambda * ky * ky / eta - 3.0 * eta * kx * kx,
                0.0,
            ));
        }
    }
    Ok(SymbolTable {
        grid: grid.clone(),
        theta,
    })
}

/// Exact solution of the linear KP flow on the constrained subspace:
/// `u_hat(t) = e^{-i*t*(lambda*ky^2/kx - eps^2*kx^3)} * u_hat(0)` with all
/// `kx = 0` coefficients hard-zeroed, independent of floating-point
/// underflow semantics. Serves as the oracle for the time stepper.
pub fn exact_linear_evolve(u0: &RealField, t: f64, lambda: f64, epsilon: f64) -> RealField {
    let mut hat = u0.to_spectral();
    zero_kx0(&mut hat);
    let grid = hat.grid().clone();
    let nx = grid.nx();
    for (iy, &ky) in grid.ky().iter().enumerate() {
        let ky2 = ky * ky;
        for (ix, &kx) in grid.kx().iter().enumerate() {
            if ix == 0 {
                continue;
            }
            let phase = -t * (lambda * ky2 / kx - epsilon * epsilon * kx.powi(3));
            hat.coeffs_mut()[iy * nx + ix] *= Complex64::from_polar(1.0, phase);
        }
    }
    hat.to_real()
}

// ---------------------------------------------------------------------------
// Airy function

/// Series/asymptotics crossover points. Below `-8` and above `5.5` the
/// asymptotic expansions carry more correct digits than the power series,
/// whose terms grow large enough to lose digits to cancellation; the values
/// were picked by cross-validating the two evaluations against each other
/// (the positive side loses digits much earlier because the function itself
/// is exponentially small there).
const AIRY_SERIES_NEG: f64 = -8.0;
const AIRY_SERIES_POS: f64 = 5.5;

/// Airy function of the first kind, `Ai(x)`, for real argument.
///
/// Power series on `(-8, 5.5]`, asymptotic expansions with correction terms
/// outside. Accuracy is at or below `1e-8` relative (relative to the
/// oscillation envelope on the negative axis).
pub fn airy_ai(x: f64) -> f64 {
    if x > AIRY_SERIES_POS {
        airy_asymptotic_decaying(x)
    } else if x < AIRY_SERIES_NEG {
        airy_asymptotic_oscillatory(x)
    } else {
        airy_series(x)
    }
}

/// Power series: `Ai(x) = 1/(3^{2/3} pi) * sum Gamma((n+1)/3)/n! *
/// (3^{1/3} x)^n * sin(2(n+1) pi/3)`. The sine factor kills every third
/// term and alternates the sign of the survivors.
fn airy_series(x: f64) -> f64 {
    const GAMMA_1_3: f64 = 2.678_938_534_707_747_6;
    const GAMMA_2_3: f64 = 1.354_117_939_426_400_4;
    let sin_factor = 0.75_f64.sqrt(); // sin(2*pi/3)
    let prefactor = 1.0 / (3.0_f64.powf(2.0 / 3.0) * std::f64::consts::PI);

    let z = 3.0_f64.cbrt() * x;
    // gamma[(n+1) mod 3] tracks Gamma((n+1)/3) via Gamma(s+1) = s*Gamma(s)
    let mut gamma = [GAMMA_1_3, GAMMA_2_3, 1.0];
    let mut p = 1.0; // z^n / n!
    let mut sum = 0.0;
    for n in 0..400usize {
        let slot = n % 3;
        if slot != 2 {
            let sign = if slot == 0 { 1.0 } else { -1.0 };
            let term = gamma[slot] * p * sign * sin_factor;
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && n as f64 > z.abs() * 1.5 {
                break;
            }
        }
        gamma[slot] *= (n + 1) as f64 / 3.0;
        p *= z / (n + 1) as f64;
    }
    prefactor * sum
}

/// Correction sums of the asymptotic expansions,
/// `u_k = u_{k-1} * (6k-5)(6k-3)(6k-1) / (216 k (2k-1))`, added greedily
/// until the terms stop shrinking.
fn airy_u_terms(zeta: f64, parity: AiryTermParity) -> f64 {
    let mut u = 1.0_f64;
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    for k in 0..60usize {
        let take = match parity {
            AiryTermParity::All => true,
            AiryTermParity::Even => k % 2 == 0,
            AiryTermParity::Odd => k % 2 == 1,
        };
        if take {
            let term = u / zeta.powi(k as i32);
            if term.abs() >= prev {
                break; // divergent tail reached
            }
            prev = term.abs();
            // (-1)^j sign over the *selected* subsequence
            let j = match parity {
                AiryTermParity::All => k,
                AiryTermParity::Even => k / 2,
                AiryTermParity::Odd => (k - 1) / 2,
            };
            sum += if j % 2 == 0 { term } else { -term };
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        let kk = (k + 1) as f64;
        u *=
            (6.0 * kk - 5.0) * (6.0 * kk - 3.0) * (6.0 * kk - 1.0) / (216.0 * kk * (2.0 * kk - 1.0));
    }
    sum
}

#[derive(Clone, Copy)]
enum AiryTermParity {
    All,
    Even,
    Odd,
}

fn airy_asymptotic_decaying(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let s = airy_u_terms(zeta, AiryTermParity::All);
    (-zeta).exp() / (2.0 * std::f64::consts::PI.sqrt() * x.powf(0.25)) * s
}

fn airy_asymptotic_oscillatory(x: f64) -> f64 {
    let z = -x;
    let zeta = 2.0 / 3.0 * z.powf(1.5);
    let p = airy_u_terms(zeta, AiryTermParity::Even);
    let q = airy_u_terms(zeta, AiryTermParity::Odd);
    let phase = zeta - std::f64::consts::FRAC_PI_4;
    (phase.cos() * p + phase.sin() * q) / (std::f64::consts::PI.sqrt() * z.powf(0.25))
}

// ---------------------------------------------------------------------------
// Tail kernel

/// Green's-kernel of the transverse part of the linear flow:
/// `4*sqrt(t) / (4*x*t + lambda*y^2)^{3/2}` inside the cone
/// `4*x*t + lambda*y^2 > 0`, zero outside. Defined for `t > 0` only.
pub fn tail_kernel(t: f64, x: f64, y: f64, lambda: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tail kernel is defined for t > 0, got t = {t}"
        )));
    }
    let s = 4.0 * x * t + lambda * y * y;
    if s > 0.0 {
        Ok(4.0 * t.sqrt() / s.powf(1.5))
    } else {
        Ok(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::mass;
    use crate::grid::SpectralGrid;

    fn grid(nx: usize, ny: usize, lx: f64, ly: f64) -> SpectralGrid {
        SpectralGrid::new(nx, ny, lx, ly).unwrap()
    }

    #[test]
    fn kp_factor_underflows_on_kx0() {
        let g = grid(16, 16, 1.0, 1.0);
        let table = kp_symbol(&g, 1.0, 0.1, 0.0);
        let f = table.factor(1e-3);
        // kx = 0, ky != 0: numerically zero
        for iy in 1..16 {
            assert_eq!(f[iy * 16].norm(), 0.0, "iy = {iy}");
        }
        // mean mode untouched
        assert_eq!(f[0], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn kp_factor_is_pure_phase_without_dissipation() {
        let g = grid(16, 16, 2.0, 1.5);
        let f = kp_symbol(&g, -1.0, 0.3, 0.0).factor(0.01);
        for (i, c) in f.iter().enumerate() {
            if i % 16 == 0 {
                continue;
            }
            assert!((c.norm() - 1.0).abs() < 1e-15, "mode {i}: |f| = {}", c.norm());
        }
    }

    #[test]
    fn kp_factor_dissipative_modulus() {
        let g = grid(16, 8, 1.0, 1.0);
        let f = kp_symbol(&g, 1.0, 0.0, 0.01).factor(1.0);
        // kx = 2 on any row: |factor| = e^{-sigma*kx^2*dt} = e^{-0.04}
        let ix = 2;
        for iy in 0..8 {
            assert!((f[iy * 16 + ix].norm() - (-0.04_f64).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn ds_factor_matches_formula() {
        let g = grid(8, 8, 1.0, 1.0);
        let f = ds_symbol(&g, 1.0, 1.0).unwrap().factor(1.0);
        // eta=1, kx=1, ky=0 -> e^{3i}
        let expect = Complex64::from_polar(1.0, 3.0);
        assert!((f[1] - expect).norm() < 1e-14);
        for c in &f {
            assert!((c.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn ds_symbol_rejects_elliptic_hyperbolic() {
        let g = grid(8, 8, 1.0, 1.0);
        let err = ds_symbol(&g, -1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("unsupported DS regime"));
    }

    #[test]
    fn exact_linear_single_mode_phase() {
        // u = cos(x + y): modes (1,1) and (-1,-1), each picking up the
        // conjugate phases e^{-i t (lambda - eps^2)}.
        let g = grid(32, 32, 1.0, 1.0);
        let (lambda, epsilon, t) = (1.0, 0.5, 0.37);
        let u0 = RealField::from_fn(&g, |x, y| (x + y).cos());
        let ut = exact_linear_evolve(&u0, t, lambda, epsilon);
        let shift = t * (lambda - epsilon * epsilon);
        let expect = RealField::from_fn(&g, |x, y| (x + y - shift).cos());
        let diff = ut
            .values()
            .iter()
            .zip(expect.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-12, "diff = {diff}");
    }

    #[test]
    fn exact_linear_t0_is_projection_only() {
        let g = grid(16, 16, 1.0, 1.0);
        let u0 = RealField::from_fn(&g, |x, y| x.sin() + (2.0 * y).cos() * x.cos());
        let ut = exact_linear_evolve(&u0, 0.0, -1.0, 1.0);
        let diff = ut
            .values()
            .iter()
            .zip(u0.values())
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(diff < 1e-13); // data already has zero x-mean per row
    }

    #[test]
    fn exact_linear_semigroup() {
        let g = grid(32, 16, 2.0, 1.0);
        let u0 = RealField::from_fn(&g, |x, y| x.sin() * (-(y * y)).exp());
        let u0 = crate::grid::project_constraint(&u0);
        let a = exact_linear_evolve(&u0, 0.7, -1.0, 0.2);
        let ab = exact_linear_evolve(&a, 0.3, -1.0, 0.2);
        let direct = exact_linear_evolve(&u0, 1.0, -1.0, 0.2);
        let diff = ab
            .values()
            .iter()
            .zip(direct.values())
            .fold(0.0_f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(diff < 1e-12);
    }

    #[test]
    fn exact_linear_conserves_mass() {
        let g = grid(32, 32, 1.0, 1.0);
        let u0 = RealField::from_fn(&g, |x, y| x.sin() * (1.0 + 0.3 * y.cos()));
        let u0 = crate::grid::project_constraint(&u0);
        let m0 = mass(&u0);
        let ut = exact_linear_evolve(&u0, 2.0, 1.0, 0.1);
        let mt = mass(&ut);
        assert!((mt - m0).abs() / m0 < 1e-12);
    }

    // Independent series oracle: Ai(x) = c1*f(x) - c2*g(x) with the two
    // confluent hypergeometric sums. A different algebraic route from the
    // Gamma-recursion series in the implementation.
    fn airy_oracle(x: f64) -> f64 {
        const C1: f64 = 0.355_028_053_887_817_24;
        const C2: f64 = 0.258_819_403_792_806_8;
        let x3 = x * x * x;
        let mut f = 1.0;
        let mut a = 1.0;
        let mut g = x;
        let mut b = x;
        for k in 0..200 {
            let kf = k as f64;
            a *= x3 / ((3.0 * kf + 2.0) * (3.0 * kf + 3.0));
            b *= x3 / ((3.0 * kf + 3.0) * (3.0 * kf + 4.0));
            f += a;
            g += b;
            if a.abs() < 1e-18 * f.abs() && b.abs() < 1e-18 * g.abs().max(1e-300) {
                break;
            }
        }
        C1 * f - C2 * g
    }

    #[test]
    fn airy_known_values() {
        assert!((airy_ai(0.0) - 0.355_028_053_887_817_2).abs() < 1e-14);
        assert!((airy_ai(2.0) - 0.034_924_130_423_3).abs() < 1e-10);
    }

    #[test]
    fn airy_matches_independent_series() {
        let mut x = -7.9;
        while x <= 5.5 {
            let got = airy_ai(x);
            let want = airy_oracle(x);
            // absolute floor covers the neighborhoods of the zeros of Ai
            let tol = 1e-8 * want.abs() + 1e-9;
            assert!(
                (got - want).abs() < tol,
                "x = {x}: got {got}, oracle {want}"
            );
            x += 0.37;
        }
    }

    #[test]
    fn airy_branches_agree_at_crossover() {
        // decaying side: the series loses digits to cancellation as x
        // grows, which is what fixes the crossover at 5.5
        for &(x, tol) in &[(5.5, 1e-8), (6.0, 1e-7)] {
            let s = airy_series(x);
            let a = airy_asymptotic_decaying(x);
            assert!(
                (s - a).abs() <= tol * a.abs(),
                "x = {x}: series {s}, asymptotic {a}"
            );
        }
        // oscillatory side, relative to the envelope; the series loses a
        // digit per unit beyond the crossover
        for &(x, tol) in &[(-8.0, 1e-8), (-8.5, 2e-8)] {
            let s = airy_series(x);
            let a = airy_asymptotic_oscillatory(x);
            let envelope = 1.0 / (std::f64::consts::PI.sqrt() * (-x).powf(0.25));
            assert!(
                (s - a).abs() <= tol * envelope,
                "x = {x}: series {s}, asymptotic {a}"
            );
        }
    }

    #[test]
    fn airy_branches_agree_at_minus_10() {
        // the two independent evaluations (power series pushed beyond its
        // default range, and the corrected oscillatory asymptotic)
        let s = airy_series(-10.0);
        let a = airy_asymptotic_oscillatory(-10.0);
        assert!((s - a).abs() / a.abs() <= 1e-3, "series {s}, asymptotic {a}");
        // and the leading-order branch differs from the full one by no more
        // than the first neglected correction term u_1/zeta
        let z = 10.0_f64;
        let zeta = 2.0 / 3.0 * z.powf(1.5);
        let envelope = 1.0 / (std::f64::consts::PI.sqrt() * z.powf(0.25));
        let leading = (zeta - std::f64::consts::FRAC_PI_4).cos() * envelope;
        let bound = (5.0 / 72.0) / zeta * envelope * 1.5;
        assert!((a - leading).abs() <= bound, "diff {}", (a - leading).abs());
    }

    #[test]
    fn airy_decays_monotonically_on_positive_axis() {
        let mut prev = airy_ai(3.0);
        assert!(prev > 0.0);
        let mut x = 3.25;
        while x <= 12.0 {
            let v = airy_ai(x);
            assert!(v > 0.0 && v < prev, "x = {x}");
            prev = v;
            x += 0.25;
        }
    }

    #[test]
    fn airy_satisfies_ode_by_central_differences() {
        let h = 1e-3;
        for &x in &[-5.0, 0.0, 2.0] {
            let second = (airy_ai(x + h) - 2.0 * airy_ai(x) + airy_ai(x - h)) / (h * h);
            let rhs = x * airy_ai(x);
            assert!(
                (second - rhs).abs() < 1e-5,
                "x = {x}: Ai'' = {second}, x*Ai = {rhs}"
            );
        }
    }

    #[test]
    fn tail_kernel_values() {
        assert!((tail_kernel(1.0, 1.0, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(tail_kernel(1.0, -1.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(tail_kernel(1.0, 0.0, 1.0, -1.0).unwrap(), 0.0);
        assert!(tail_kernel(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(tail_kernel(-1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn tail_kernel_diverges_approaching_cone_from_inside() {
        // 4xt + lambda*y^2 = s with s -> 0+: kernel = 4 sqrt(t)/s^{3/2}
        let t = 1.0;
        let s = 1e-5;
        let x = s / (4.0 * t); // y = 0
        let v = tail_kernel(t, x, 0.0, 1.0).unwrap();
        assert!(v > 1e6, "kernel = {v}");
        // and is exactly zero just outside
        let v0 = tail_kernel(t, -x, 0.0, 1.0).unwrap();
        assert_eq!(v0, 0.0);
    }
}
