//! Integrating-factor classical RK4 time stepping and the evolution loop.
//!
//! The stepped variable is `w(t) = e^{i*theta*t} u_hat(t)`, in which the
//! linear flow is exact and only the nonlinearity is integrated. One step
//! from `u_hat` with stage factors `E1/2 = e^{-i*theta*dt/2}` and
//! `E1 = e^{-i*theta*dt}`:
//!
//! ```text
//!     a = N(u)                         d = N(E1 u + dt E1/2 c)
//!     b = N(E1/2 (u + dt/2 a))         u' = E1 u + dt/6 (E1 a
//!     c = N(E1/2 u + dt/2 b)                + 2 E1/2 (b + c) + d)
//! ```
//!
//! With `N = 0` the step reduces to the exact propagator `E1 u`.
//!
//! For zero-x-mean data the loop can integrate the preconditioned unknown
//! `v_hat` with `u_hat = i*kx*v_hat`, which removes the `kx` factor from the
//! nonlinear term and reduces numerical errors; this is the default whenever
//! the initial data satisfies the constraint.

use rustfft::num_complex::Complex64;

use crate::analysis::{energy, mass_spectral, DiagnosticsSeries};
use crate::error::{Error, Result};
use crate::grid::{constraint_residual, Fft2, RealField, SpectralField, SpectralGrid};
use crate::linear::SymbolTable;
use crate::models::{ds_mean_multiplier, kp_tendency_multiplier, DsState, ModelKind, ModelSpec};

/// Discretization schedule and formulation switches for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Time step.
    pub dt: f64,
    /// Target final time; the loop takes `round(t_end/dt)` steps of exactly
    /// `dt`, so snapshots land on completed steps.
    pub t_end: f64,
    /// Record a snapshot every this many steps (0 = none). The initial and
    /// final states are always included when nonzero.
    pub snapshot_every: usize,
    /// Record diagnostics every this many steps (>= 1).
    pub diagnostics_every: usize,
    /// Integrate the preconditioned variable `v_hat = u_hat/(i kx)`.
    /// `None` selects it automatically for constraint-satisfying data.
    pub use_v_formulation: Option<bool>,
    /// Apply a 2/3-rule mask to the nonlinear tendency. Off by default;
    /// aliasing cannot be suppressed close to a gradient catastrophe, so
    /// this does not stabilize near-breakup runs.
    pub dealias: bool,
    /// Drop the nonlinear tendency entirely (for oracle comparisons).
    pub linear_only: bool,
    /// Evaluate both energy placements at the diagnostics cadence.
    pub record_energy: bool,
}

impl RunConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            snapshot_every: 0,
            diagnostics_every: 1,
            use_v_formulation: None,
            dealias: false,
            linear_only: false,
            record_energy: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::InvalidInput(format!(
                "final time must be positive, got {}",
                self.t_end
            )));
        }
        if self.diagnostics_every == 0 {
            return Err(Error::InvalidInput(
                "diagnostics cadence must be at least 1".into(),
            ));
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        ((self.t_end / self.dt).round() as usize).max(1)
    }
}

/// Output of one evolution run.
#[derive(Debug, Clone)]
pub struct EvolveResult {
    pub final_field: RealField,
    pub final_time: f64,
    /// `(t, field)` at the snapshot cadence, times strictly increasing.
    pub snapshots: Vec<(f64, RealField)>,
    pub diagnostics: DiagnosticsSeries,
    pub warnings: Vec<String>,
    /// Whether the run integrated the preconditioned variable.
    pub used_v_formulation: bool,
}

/// Output of a DS evolution run.
#[derive(Debug, Clone)]
pub struct DsEvolveResult {
    pub final_state: DsState,
    pub final_time: f64,
    pub snapshots: Vec<(f64, DsState)>,
    /// `mass` carries the wave energy `N[psi]` for DS runs.
    pub diagnostics: DiagnosticsSeries,
}

/// Conservative step-size default `1/(Nx*Ny)`; the integrating factor keeps
/// the evolution stable at this order of magnitude, and empirically stable
/// runs often use larger values.
pub fn suggest_dt(grid: &SpectralGrid) -> f64 {
    1.0 / (grid.nx() as f64 * grid.ny() as f64)
}

/// Hard ceiling on `max |u|`; amplitudes in scope stay below ~24, so
/// crossing this means the run has left the physical regime (gradient
/// catastrophe without regularization, or an unstable step).
pub const BLOWUP_THRESHOLD: f64 = 1e6;

/// One integrating-factor RK4 step of `d/dt u_hat + i*theta*u_hat =
/// N(u_hat)` for a time-independent tendency `N`.
pub fn if_rk4_step<F>(
    state: &SpectralField,
    dt: f64,
    symbols: &SymbolTable,
    nonlinear: F,
) -> Result<SpectralField>
where
    F: Fn(&SpectralField) -> SpectralField,
{
    let grid = state.grid().clone();
    let e_half = symbols.factor(dt / 2.0);
    let e_full = symbols.factor(dt);
    let u = state.coeffs();
    let n = u.len();

    let a = nonlinear(state);
    let mut stage = vec![Complex64::default(); n];
    for i in 0..n {
        stage[i] = e_half[i] * (u[i] + 0.5 * dt * a.coeffs()[i]);
    }
    let b = nonlinear(&SpectralField::from_coeffs(&grid, stage.clone())?);
    for i in 0..n {
        stage[i] = e_half[i] * u[i] + 0.5 * dt * b.coeffs()[i];
    }
    let c = nonlinear(&SpectralField::from_coeffs(&grid, stage.clone())?);
    for i in 0..n {
        stage[i] = e_full[i] * u[i] + dt * e_half[i] * c.coeffs()[i];
    }
    let d = nonlinear(&SpectralField::from_coeffs(&grid, stage.clone())?);
    let mut out = vec![Complex64::default(); n];
    for i in 0..n {
        out[i] = e_full[i] * u[i]
            + dt / 6.0
                * (e_full[i] * a.coeffs()[i]
                    + 2.0 * e_half[i] * (b.coeffs()[i] + c.coeffs()[i])
                    + d.coeffs()[i]);
    }
    if out.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Blowup {
            step: 0,
            time: dt,
            what: "non-finite value produced by RK4 stage".into(),
        });
    }
    SpectralField::from_coeffs(&grid, out)
}

// ---------------------------------------------------------------------------
// Evolution engine

enum Tendency {
    /// Nonlinearity disabled.
    None,
    /// KP-family quadratic tendency.
    Kp,
    /// DS envelope.
    Ds { eta: f64 },
}

struct Engine {
    grid: SpectralGrid,
    fft: Fft2,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    tendency: Tendency,
    /// Multiplier taking the state to `u_hat` (identity for the u-form,
    /// `i*kx` for the v-form).
    u_mult: Option<Vec<Complex64>>,
    /// Multiplier applied to `F(u^2)` (or `F(q)` for DS) in the tendency.
    nl_mult: Vec<Complex64>,
    /// DS mean-field multiplier.
    mean_mult: Vec<f64>,
    // scratch
    stage: Vec<Complex64>,
    ka: Vec<Complex64>,
    kb: Vec<Complex64>,
    kc: Vec<Complex64>,
    kd: Vec<Complex64>,
    phys: Vec<Complex64>,
    fft_tmp: Vec<Complex64>,
    psi: Vec<Complex64>,
    phi: Vec<f64>,
}

impl Engine {
    fn new(
        grid: &SpectralGrid,
        symbols: &SymbolTable,
        dt: f64,
        tendency: Tendency,
        v_form: bool,
        dealias: bool,
    ) -> Self {
        let n = grid.len();
        let nx = grid.nx();
        let ny = grid.ny();
        let mask = |ix: usize, iy: usize| -> f64 {
            if !dealias {
                return 1.0;
            }
            let mx = if ix < nx / 2 { ix } else { nx - ix };
            let my = if iy < ny / 2 { iy } else { ny - iy };
            if 3 * mx > nx || 3 * my > ny {
                0.0
            } else {
                1.0
            }
        };
        // u_hat = i*kx*v_hat with the kx = 0 and Nyquist columns zero
        let u_mult = v_form.then(|| {
            let mut full = Vec::with_capacity(n);
            for _iy in 0..ny {
                for (ix, &kx) in grid.kx().iter().enumerate() {
                    if ix == 0 || ix == nx / 2 {
                        full.push(Complex64::default());
                    } else {
                        full.push(Complex64::new(0.0, kx));
                    }
                }
            }
            full
        });
        let (nl_mult, mean_mult) = match tendency {
            Tendency::None => (vec![Complex64::default(); n], Vec::new()),
            Tendency::Kp if !v_form => {
                let row = kp_tendency_multiplier(grid);
                let mut full = Vec::with_capacity(n);
                for iy in 0..ny {
                    for (ix, m) in row.iter().enumerate() {
                        full.push(m * mask(ix, iy));
                    }
                }
                (full, Vec::new())
            }
            Tendency::Kp => {
                // the kx factor cancels against the change of unknown
                let mut full = Vec::with_capacity(n);
                for iy in 0..ny {
                    for ix in 0..nx {
                        let keep = if ix == 0 || ix == nx / 2 { 0.0 } else { 1.0 };
                        full.push(Complex64::new(-0.5 * keep * mask(ix, iy), 0.0));
                    }
                }
                (full, Vec::new())
            }
            Tendency::Ds { eta } => {
                let mut full = Vec::with_capacity(n);
                for iy in 0..ny {
                    for ix in 0..nx {
                        // the -i factor of the DS tendency
                        full.push(Complex64::new(0.0, -mask(ix, iy)));
                    }
                }
                (full, ds_mean_multiplier(grid, eta, 1.0))
            }
        };
        Self {
            grid: grid.clone(),
            fft: Fft2::for_grid(grid),
            e_half: symbols.factor(dt / 2.0),
            e_full: symbols.factor(dt),
            tendency,
            u_mult,
            nl_mult,
            mean_mult,
            stage: vec![Complex64::default(); n],
            ka: vec![Complex64::default(); n],
            kb: vec![Complex64::default(); n],
            kc: vec![Complex64::default(); n],
            kd: vec![Complex64::default(); n],
            phys: vec![Complex64::default(); n],
            fft_tmp: vec![Complex64::default(); n],
            psi: vec![Complex64::default(); n],
            phi: vec![0.0; n],
        }
    }

    /// Nonlinear tendency of `state` into `out`.
    fn apply_tendency(&mut self, state: &[Complex64], which: StageBuf) {
        let n = self.grid.len();
        let inv_n = 1.0 / n as f64;
        match self.tendency {
            Tendency::None => {
                let out = self.stage_buf(which);
                out.iter_mut().for_each(|c| *c = Complex64::default());
            }
            Tendency::Kp => {
                // u_hat, to physical space (transposed layout; the square
                // is pointwise, so the layout does not matter and two
                // transposes are saved per tendency)
                match &self.u_mult {
                    None => self.phys.copy_from_slice(state),
                    Some(m) => {
                        for ((p, &s), &m) in self.phys.iter_mut().zip(state).zip(m) {
                            *p = m * s;
                        }
                    }
                }
                self.fft
                    .inverse_to_transposed(&mut self.phys, &mut self.fft_tmp);
                // square pointwise; reality is enforced by taking the real
                // part, which keeps the evolved spectrum Hermitian
                for c in self.fft_tmp.iter_mut() {
                    let u = c.re * inv_n;
                    *c = Complex64::new(u * u, 0.0);
                }
                self.fft
                    .forward_from_transposed(&mut self.fft_tmp, &mut self.phys);
                let out = match which {
                    StageBuf::A => &mut self.ka,
                    StageBuf::B => &mut self.kb,
                    StageBuf::C => &mut self.kc,
                    StageBuf::D => &mut self.kd,
                };
                for ((o, &m), &p) in out.iter_mut().zip(&self.nl_mult).zip(&self.phys) {
                    *o = m * p;
                }
            }
            Tendency::Ds { eta } => {
                // psi in physical space
                self.psi.copy_from_slice(state);
                self.fft.inverse_with(&mut self.psi, &mut self.fft_tmp);
                for c in self.psi.iter_mut() {
                    *c *= inv_n;
                }
                // mean field phi from |psi|^2
                for i in 0..n {
                    self.phys[i] = Complex64::new(self.psi[i].norm_sqr(), 0.0);
                }
                self.fft.forward_with(&mut self.phys, &mut self.fft_tmp);
                for i in 0..n {
                    self.phys[i] *= self.mean_mult[i];
                }
                self.fft.inverse_with(&mut self.phys, &mut self.fft_tmp);
                for i in 0..n {
                    self.phi[i] = self.phys[i].re * inv_n;
                }
                // q = psi (|psi|^2/(6 eta) + eta phi), then -i F(q)
                for i in 0..n {
                    let p = self.psi[i];
                    self.phys[i] = p * (p.norm_sqr() / (6.0 * eta) + eta * self.phi[i]);
                }
                self.fft.forward_with(&mut self.phys, &mut self.fft_tmp);
                let out = match which {
                    StageBuf::A => &mut self.ka,
                    StageBuf::B => &mut self.kb,
                    StageBuf::C => &mut self.kc,
                    StageBuf::D => &mut self.kd,
                };
                for i in 0..n {
                    out[i] = self.nl_mult[i] * self.phys[i];
                }
            }
        }
    }

    fn stage_buf(&mut self, which: StageBuf) -> &mut Vec<Complex64> {
        match which {
            StageBuf::A => &mut self.ka,
            StageBuf::B => &mut self.kb,
            StageBuf::C => &mut self.kc,
            StageBuf::D => &mut self.kd,
        }
    }

    /// Advance `state` by one step in place.
    fn step(&mut self, state: &mut [Complex64], dt: f64) {
        let half_dt = 0.5 * dt;
        self.apply_tendency(state, StageBuf::A);
        for (((s, &u), &eh), &a) in self
            .stage
            .iter_mut()
            .zip(&*state)
            .zip(&self.e_half)
            .zip(&self.ka)
        {
            *s = eh * (u + half_dt * a);
        }
        let stage = std::mem::take(&mut self.stage);
        self.apply_tendency(&stage, StageBuf::B);
        self.stage = stage;
        for (((s, &u), &eh), &b) in self
            .stage
            .iter_mut()
            .zip(&*state)
            .zip(&self.e_half)
            .zip(&self.kb)
        {
            *s = eh * u + half_dt * b;
        }
        let stage = std::mem::take(&mut self.stage);
        self.apply_tendency(&stage, StageBuf::C);
        self.stage = stage;
        for ((((s, &u), &ef), &eh), &c) in self
            .stage
            .iter_mut()
            .zip(&*state)
            .zip(&self.e_full)
            .zip(&self.e_half)
            .zip(&self.kc)
        {
            *s = ef * u + dt * eh * c;
        }
        let stage = std::mem::take(&mut self.stage);
        self.apply_tendency(&stage, StageBuf::D);
        self.stage = stage;
        let sixth_dt = dt / 6.0;
        for (u, (((((&ef, &eh), &a), &b), &c), &d)) in state.iter_mut().zip(
            self.e_full
                .iter()
                .zip(&self.e_half)
                .zip(&self.ka)
                .zip(&self.kb)
                .zip(&self.kc)
                .zip(&self.kd),
        ) {
            *u = ef * *u + sixth_dt * (ef * a + 2.0 * eh * (b + c) + d);
        }
    }

    /// `u_hat` of the current state (applies the v-form multiplier when
    /// active).
    fn u_hat(&self, state: &[Complex64]) -> Vec<Complex64> {
        match &self.u_mult {
            None => state.to_vec(),
            Some(m) => state.iter().zip(m).map(|(s, m)| s * m).collect(),
        }
    }

    /// Physical samples of the current state.
    fn materialize(&mut self, state: &[Complex64]) -> (Vec<Complex64>, RealField) {
        let u_hat = self.u_hat(state);
        let mut buf = u_hat.clone();
        self.fft.inverse_with(&mut buf, &mut self.fft_tmp);
        let inv_n = 1.0 / self.grid.len() as f64;
        let values: Vec<f64> = buf.iter().map(|c| c.re * inv_n).collect();
        (
            u_hat,
            RealField::from_values(&self.grid, values).expect("grid size"),
        )
    }

    /// `max |d/dx u|` from the coefficient table.
    fn max_grad(&mut self, u_hat: &[Complex64]) -> f64 {
        let nx = self.grid.nx();
        for (i, c) in u_hat.iter().enumerate() {
            let ix = i % nx;
            let kx = if ix == nx / 2 { 0.0 } else { self.grid.kx()[ix] };
            self.phys[i] = Complex64::new(0.0, kx) * c;
        }
        let mut buf = std::mem::take(&mut self.phys);
        self.fft.inverse_with(&mut buf, &mut self.fft_tmp);
        let inv_n = 1.0 / self.grid.len() as f64;
        let m = buf.iter().fold(0.0f64, |m, c| m.max((c.re * inv_n).abs()));
        self.phys = buf;
        m
    }
}

#[derive(Clone, Copy)]
enum StageBuf {
    A,
    B,
    C,
    D,
}

/// Integrate a KP-family model from `u0`.
///
/// The initial data is checked against the zero-x-mean constraint. With the
/// v-formulation active (explicitly or by the automatic default for
/// constraint-satisfying data) the `kx = 0` content is dropped by the
/// change of unknown, which is exactly the constraint projection; otherwise
/// the data evolves unprojected and the integrating factor annihilates the
/// `kx = 0, ky != 0` modes within the first step.
pub fn evolve(u0: &RealField, model: &ModelSpec, cfg: &RunConfig) -> Result<EvolveResult> {
    cfg.validate()?;
    model.validate()?;
    if model.kind == ModelKind::Ds {
        return Err(Error::InvalidInput(
            "DS runs evolve a complex envelope; use evolve_ds".into(),
        ));
    }
    let grid = u0.grid().clone();
    let mut warnings = Vec::new();

    let hat0 = u0.to_spectral();
    let residual = constraint_residual(&hat0);
    let v_form = cfg.use_v_formulation.unwrap_or(residual < 1e-10);
    if model.requires_constraint() && residual > 1e-12 {
        let w = if v_form {
            format!(
                "initial data violates the zero-x-mean constraint (residual {residual:.2e}); \
                 the v-formulation projects it"
            )
        } else {
            format!(
                "initial data violates the zero-x-mean constraint (residual {residual:.2e}); \
                 evolving unprojected, the solution loses smoothness at once"
            )
        };
        log::warn!("{w}");
        warnings.push(w);
    }

    let symbols = model.symbol(&grid)?;
    let tendency = if cfg.linear_only {
        Tendency::None
    } else {
        Tendency::Kp
    };
    let mut engine = Engine::new(&grid, &symbols, cfg.dt, tendency, v_form, cfg.dealias);

    // initial state in the chosen unknown
    let mut state: Vec<Complex64> = if v_form {
        let nx = grid.nx();
        hat0.coeffs()
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let ix = i % nx;
                if ix == 0 || ix == nx / 2 {
                    Complex64::default()
                } else {
                    c / Complex64::new(0.0, grid.kx()[ix])
                }
            })
            .collect()
    } else {
        hat0.coeffs().to_vec()
    };

    let n_steps = cfg.n_steps();
    let mut diagnostics = DiagnosticsSeries::default();
    if cfg.record_energy {
        diagnostics.energy_printed = Some(Vec::new());
        diagnostics.energy_conventional = Some(Vec::new());
    }
    let mut snapshots = Vec::new();
    let mut m0 = None;

    let record = |engine: &mut Engine,
                      state: &[Complex64],
                      step: usize,
                      diagnostics: &mut DiagnosticsSeries,
                      snapshots: &mut Vec<(f64, RealField)>,
                      m0: &mut Option<f64>|
     -> Result<RealField> {
        let t = step as f64 * cfg.dt;
        let (u_hat, field) = engine.materialize(state);
        let peak = field.max_abs();
        let finite = field.values().iter().all(|v| v.is_finite());
        if !finite || peak > BLOWUP_THRESHOLD {
            return Err(Error::Blowup {
                step,
                time: t,
                what: if finite {
                    format!("max |u| = {peak:.3e}")
                } else {
                    "non-finite values in the solution".into()
                },
            });
        }
        let take_diag = step % cfg.diagnostics_every == 0 || step == n_steps;
        if take_diag {
            let hat_field = SpectralField::from_coeffs(&grid, u_hat.clone())?;
            let m = mass_spectral(&hat_field);
            let m0v = *m0.get_or_insert(m);
            diagnostics.times.push(t);
            diagnostics.mass.push(m);
            diagnostics.err.push(if m0v == 0.0 { 0.0 } else { 1.0 - m / m0v });
            diagnostics.max_grad.push(engine.max_grad(&u_hat));
            if cfg.record_energy {
                let e = energy(&field, model.lambda, model.epsilon);
                diagnostics
                    .energy_printed
                    .as_mut()
                    .expect("enabled")
                    .push(e.printed);
                diagnostics
                    .energy_conventional
                    .as_mut()
                    .expect("enabled")
                    .push(e.conventional);
            }
        }
        if cfg.snapshot_every > 0 && (step % cfg.snapshot_every == 0 || step == n_steps) {
            snapshots.push((t, field.clone()));
        }
        Ok(field)
    };

    record(
        &mut engine,
        &state,
        0,
        &mut diagnostics,
        &mut snapshots,
        &mut m0,
    )?;

    let mut final_field = None;
    for step in 1..=n_steps {
        engine.step(&mut state, cfg.dt);
        let cadence = step % cfg.diagnostics_every == 0
            || step == n_steps
            || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0);
        if cadence {
            let field = record(
                &mut engine,
                &state,
                step,
                &mut diagnostics,
                &mut snapshots,
                &mut m0,
            )?;
            if step == n_steps {
                final_field = Some(field);
            }
        }
    }

    Ok(EvolveResult {
        final_field: final_field.expect("final step recorded"),
        final_time: n_steps as f64 * cfg.dt,
        snapshots,
        diagnostics,
        warnings,
        used_v_formulation: v_form,
    })
}

/// Integrate the DS envelope from `psi0` over the slow time `tau`.
pub fn evolve_ds(psi0: &DsState, eta: f64, cfg: &RunConfig) -> Result<DsEvolveResult> {
    cfg.validate()?;
    let model = ModelSpec::ds(eta)?;
    let grid = psi0.grid().clone();
    let symbols = model.symbol(&grid)?;
    let tendency = if cfg.linear_only {
        Tendency::None
    } else {
        Tendency::Ds { eta }
    };
    let mut engine = Engine::new(&grid, &symbols, cfg.dt, tendency, false, cfg.dealias);
    let mut state = psi0.psi_hat().coeffs().to_vec();

    let n_steps = cfg.n_steps();
    let quad = grid.hx() * grid.hy() / grid.len() as f64;
    let mut diagnostics = DiagnosticsSeries {
        wave_energy: Some(Vec::new()),
        ..Default::default()
    };
    let mut snapshots = Vec::new();
    let mut n0 = None;

    let record = |engine: &mut Engine,
                      state: &[Complex64],
                      step: usize,
                      diagnostics: &mut DiagnosticsSeries,
                      snapshots: &mut Vec<(f64, DsState)>,
                      n0: &mut Option<f64>|
     -> Result<Option<DsState>> {
        let t = step as f64 * cfg.dt;
        let take_diag = step % cfg.diagnostics_every == 0 || step == n_steps;
        let take_snap = cfg.snapshot_every > 0 && (step % cfg.snapshot_every == 0 || step == n_steps);
        let mut kept = None;
        if take_diag {
            let wave: f64 = quad * state.iter().map(|c| c.norm_sqr()).sum::<f64>();
            if !wave.is_finite() || wave > BLOWUP_THRESHOLD * BLOWUP_THRESHOLD {
                return Err(Error::Blowup {
                    step,
                    time: t,
                    what: format!("wave energy = {wave:.3e}"),
                });
            }
            let n0v = *n0.get_or_insert(wave);
            diagnostics.times.push(t);
            diagnostics.mass.push(wave);
            diagnostics
                .err
                .push(if n0v == 0.0 { 0.0 } else { 1.0 - wave / n0v });
            diagnostics.max_grad.push(engine.max_grad(state));
            diagnostics
                .wave_energy
                .as_mut()
                .expect("enabled")
                .push(wave);
        }
        if take_snap || step == n_steps {
            let hat = SpectralField::from_coeffs(&grid, state.to_vec())?;
            let ds = DsState::from_spectral(hat);
            if take_snap {
                snapshots.push((t, ds.clone()));
            }
            kept = Some(ds);
        }
        Ok(kept)
    };

    record(
        &mut engine,
        &state,
        0,
        &mut diagnostics,
        &mut snapshots,
        &mut n0,
    )?;
    let mut final_state = None;
    for step in 1..=n_steps {
        engine.step(&mut state, cfg.dt);
        let cadence = step % cfg.diagnostics_every == 0
            || step == n_steps
            || (cfg.snapshot_every > 0 && step % cfg.snapshot_every == 0);
        if cadence {
            if let Some(ds) = record(
                &mut engine,
                &state,
                step,
                &mut diagnostics,
                &mut snapshots,
                &mut n0,
            )? {
                final_state = Some(ds);
            }
        }
    }

    Ok(DsEvolveResult {
        final_state: final_state.expect("final step recorded"),
        final_time: n_steps as f64 * cfg.dt,
        snapshots,
        diagnostics,
    })
}
