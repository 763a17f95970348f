//! One-dimensional propagation of a single-excitation mode function through
//! the tripod medium.
//!
//! In scaled units the signal envelope `u` and the coherences `s_a`, `s_c`,
//! `s_d` (for `σ_ba`, `σ_bc`, `σ_bd`) obey
//!
//! ```text
//! ∂t s_a = iκu + i(Ω₂ s_c + Ω₃ s_d)
//! ∂t s_c = iΩ₂* s_a
//! ∂t s_d = iΩ₃* s_a
//! (∂t + c∂z) u = iκ s_a
//! ```
//!
//! The local part is `ẋ = iHx` with a Hermitian `H`, so each cell evolves
//! unitarily. The solver composes an exact per-cell exponential with an exact
//! one-cell grid shift of `u` (Strang splitting), which conserves
//! `∫(|u|² + |s_a|² + |s_c|² + |s_d|²) dz` up to what leaves the grid.

use std::collections::HashMap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::control::{ControlSchedule, RabiPair};
use crate::error::{invalid, Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Uniform cell-centred grid along `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub cells: usize,
    pub z_min: f64,
    pub dz: f64,
}

impl Grid {
    pub fn new(cells: usize, z_min: f64, dz: f64) -> Result<Self> {
        if cells < 2 {
            return Err(invalid("cells", "need at least two cells"));
        }
        if !(dz > 0.0 && dz.is_finite() && z_min.is_finite()) {
            return Err(invalid(
                "dz",
                format!("must be positive and finite, got {dz}"),
            ));
        }
        Ok(Self { cells, z_min, dz })
    }

    /// Centre of cell `i`.
    pub fn z(&self, i: usize) -> f64 {
        self.z_min + (i as f64 + 0.5) * self.dz
    }

    pub fn z_max(&self) -> f64 {
        self.z_min + self.cells as f64 * self.dz
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.cells).map(|i| self.z(i))
    }
}

/// Spatial profile of the coupling rate at the sample boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SampleEdge {
    /// Indicator function of `[0, L]`.
    #[default]
    Sharp,
    /// Logistic edges of the given width.
    Smooth { width: f64 },
}

/// Physical and numerical parameters of the medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// Collective coupling rate κ inside the sample.
    pub kappa: f64,
    /// Vacuum signal speed.
    pub c: f64,
    /// The sample occupies `[0, sample_length]`.
    pub sample_length: f64,
    pub grid: Grid,
    pub dt: f64,
    #[serde(default)]
    pub edge: SampleEdge,
}

impl MediumParams {
    pub fn new(kappa: f64, c: f64, sample_length: f64, grid: Grid, dt: f64) -> Result<Self> {
        let p = Self {
            kappa,
            c,
            sample_length,
            grid,
            dt,
            edge: SampleEdge::Sharp,
        };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `dt = dz/c`, for which the signal shift is exact.
    pub fn with_unit_cfl(kappa: f64, c: f64, sample_length: f64, grid: Grid) -> Result<Self> {
        Self::new(kappa, c, sample_length, grid, grid.dz / c)
    }

    pub fn with_edge(mut self, edge: SampleEdge) -> Result<Self> {
        self.edge = edge;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(invalid(
                "kappa",
                format!("must be positive, got {}", self.kappa),
            ));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(invalid("c", format!("must be positive, got {}", self.c)));
        }
        if !(self.sample_length > 0.0 && self.sample_length.is_finite()) {
            return Err(invalid("sample_length", "must be positive"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", "must be positive"));
        }
        if let SampleEdge::Smooth { width } = self.edge {
            if !(width > 0.0 && width.is_finite()) {
                return Err(invalid("edge width", "must be positive"));
            }
        }
        if self.cfl() > 1.0 + 1e-12 {
            return Err(Error::Configuration(format!(
                "CFL number c·dt/dz = {} exceeds 1",
                self.cfl()
            )));
        }
        Ok(())
    }

    pub fn cfl(&self) -> f64 {
        self.c * self.dt / self.grid.dz
    }

    fn exact_shift(&self) -> bool {
        (self.cfl() - 1.0).abs() <= 1e-12
    }

    pub fn kappa_at(&self, z: f64) -> f64 {
        match self.edge {
            SampleEdge::Sharp => {
                if (0.0..self.sample_length).contains(&z) {
                    self.kappa
                } else {
                    0.0
                }
            }
            SampleEdge::Smooth { width } => {
                let rise = 1.0 / (1.0 + (-z / width).exp());
                let fall = 1.0 / (1.0 + ((z - self.sample_length) / width).exp());
                self.kappa * rise * fall
            }
        }
    }

    pub fn kappa_profile(&self) -> Vec<f64> {
        self.grid.centers().map(|z| self.kappa_at(z)).collect()
    }
}

/// Grid samples of the signal envelope and the three coherences.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: Vec<C64>,
    pub s_a: Vec<C64>,
    pub s_c: Vec<C64>,
    pub s_d: Vec<C64>,
    pub t: f64,
    pub dz: f64,
}

impl FieldState {
    pub fn zeros(grid: &Grid, t: f64) -> Self {
        let z = vec![C64::default(); grid.cells];
        Self {
            u: z.clone(),
            s_a: z.clone(),
            s_c: z.clone(),
            s_d: z,
            t,
            dz: grid.dz,
        }
    }

    /// A purely electromagnetic state with envelope `u`.
    pub fn from_signal(u: Vec<C64>, grid: &Grid, t: f64) -> Result<Self> {
        if u.len() != grid.cells {
            return Err(Error::GridMismatch {
                expected: grid.cells,
                found: u.len(),
            });
        }
        let mut s = Self::zeros(grid, t);
        s.u = u;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn check_consistent(&self) -> Result<()> {
        let n = self.u.len();
        for other in [&self.s_a, &self.s_c, &self.s_d] {
            if other.len() != n {
                return Err(Error::GridMismatch {
                    expected: n,
                    found: other.len(),
                });
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        [&self.u, &self.s_a, &self.s_c, &self.s_d]
            .iter()
            .all(|v| v.iter().all(|z| z.is_finite()))
    }

    pub fn scale(&mut self, k: C64) {
        for v in [&mut self.u, &mut self.s_a, &mut self.s_c, &mut self.s_d] {
            v.iter_mut().for_each(|z| *z *= k);
        }
    }
}

/// `∫(|u|² + |s_a|² + |s_c|² + |s_d|²) dz`.
pub fn excitation_norm(state: &FieldState) -> f64 {
    let sum: f64 = [&state.u, &state.s_a, &state.s_c, &state.s_d]
        .iter()
        .map(|v| v.iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    sum * state.dz
}

/// Local time derivative, advection excluded.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDerivative {
    pub u: Vec<C64>,
    pub s_a: Vec<C64>,
    pub s_c: Vec<C64>,
    pub s_d: Vec<C64>,
}

/// Right-hand side of the local (per-cell) equations. The `-c ∂z u` term is
/// not included; the solver treats it by an exact shift.
pub fn scaled_rhs(state: &FieldState, rabi: RabiPair, kappa: &[f64]) -> Result<LocalDerivative> {
    state.check_consistent()?;
    if kappa.len() != state.len() {
        return Err(Error::GridMismatch {
            expected: state.len(),
            found: kappa.len(),
        });
    }
    if !state.is_finite() || !rabi.omega2.is_finite() || !rabi.omega3.is_finite() {
        return Err(Error::NumericFault("scaled_rhs"));
    }
    let (o2, o3) = (rabi.omega2, rabi.omega3);
    let n = state.len();
    let mut d = LocalDerivative {
        u: Vec::with_capacity(n),
        s_a: Vec::with_capacity(n),
        s_c: Vec::with_capacity(n),
        s_d: Vec::with_capacity(n),
    };
    for i in 0..n {
        let k = kappa[i];
        let sa = state.s_a[i];
        d.s_a
            .push(I * (state.u[i] * k + o2 * state.s_c[i] + o3 * state.s_d[i]));
        d.s_c.push(I * o2.conj() * sa);
        d.s_d.push(I * o3.conj() * sa);
        d.u.push(I * k * sa);
    }
    Ok(d)
}

/// Exact propagator `exp(iHτ)` of the local system for a set of coupling
/// levels. `H` couples `s_a` to the normalized combination
/// `(κu + Ω₂s_c + Ω₃s_d)/G`, `G = sqrt(κ² + Ω²)`, and acts as zero on the
/// two orthogonal (dark) combinations.
#[derive(Debug, Clone)]
struct LocalPropagator {
    rabi: RabiPair,
    tau: f64,
    // per level: (cos Gτ, sin Gτ, 1/G)
    coeffs: Vec<(f64, f64, f64)>,
}

impl LocalPropagator {
    fn new() -> Self {
        Self {
            rabi: RabiPair::OFF,
            tau: f64::NAN,
            coeffs: Vec::new(),
        }
    }

    fn prepare(&mut self, levels: &[f64], rabi: RabiPair, tau: f64) {
        if self.tau == tau && self.rabi == rabi && self.coeffs.len() == levels.len() {
            return;
        }
        let omega_sq = rabi.omega2.norm_sqr() + rabi.omega3.norm_sqr();
        self.coeffs.clear();
        self.coeffs.extend(levels.iter().map(|&k| {
            let g = (k * k + omega_sq).sqrt();
            if g == 0.0 {
                (1.0, 0.0, 0.0)
            } else {
                let (s, c) = (g * tau).sin_cos();
                (c, s, 1.0 / g)
            }
        }));
        self.rabi = rabi;
        self.tau = tau;
    }

    #[inline]
    fn apply(
        &self,
        level: usize,
        kappa: f64,
        u: &mut C64,
        sa: &mut C64,
        sc: &mut C64,
        sd: &mut C64,
    ) {
        let (c, s, inv_g) = self.coeffs[level];
        if inv_g == 0.0 {
            return;
        }
        let (o2, o3) = (self.rabi.omega2, self.rabi.omega3);
        let beta = (*u * kappa + o2 * *sc + o3 * *sd) * inv_g;
        let alpha = *sa;
        *sa = alpha * c + I * s * beta;
        let coef = (beta * (c - 1.0) + I * s * alpha) * inv_g;
        *u += coef * kappa;
        *sc += coef * o2.conj();
        *sd += coef * o3.conj();
    }
}

/// Amplitude leaving the grid during one step, scaled so that
/// `|amplitude|²` is the outflowing flux `c|u(z_out)|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Outflow {
    /// Mid-step time at which the signal crosses the outflow boundary.
    pub t: f64,
    pub amplitude: C64,
}

impl Outflow {
    pub fn flux(&self) -> f64 {
        self.amplitude.norm_sqr()
    }
}

/// Time integrator bound to one medium and one control schedule.
#[derive(Debug, Clone)]
pub struct Solver<'a> {
    params: &'a MediumParams,
    schedule: &'a ControlSchedule,
    kappa: Vec<f64>,
    levels: Vec<f64>,
    level_of: Vec<usize>,
    active: Vec<usize>,
    propagator: LocalPropagator,
    state: FieldState,
    steps: u64,
    t0: f64,
}

impl<'a> Solver<'a> {
    pub fn new(
        params: &'a MediumParams,
        schedule: &'a ControlSchedule,
        state: FieldState,
    ) -> Result<Self> {
        params.validate()?;
        state.check_consistent()?;
        if state.len() != params.grid.cells {
            return Err(Error::GridMismatch {
                expected: params.grid.cells,
                found: state.len(),
            });
        }
        if !state.is_finite() {
            return Err(Error::NumericFault("initial state"));
        }
        let kappa = params.kappa_profile();
        let mut levels: Vec<f64> = Vec::new();
        let mut index: HashMap<u64, usize> = HashMap::new();
        let level_of = kappa
            .iter()
            .map(|&k| {
                *index.entry(k.to_bits()).or_insert_with(|| {
                    levels.push(k);
                    levels.len() - 1
                })
            })
            .collect();
        // cells without coupling hold no coherence and never acquire any;
        // only those with coherence present or κ > 0 need the local update
        let active = (0..kappa.len())
            .filter(|&i| {
                kappa[i] > 0.0
                    || state.s_a[i] != C64::default()
                    || state.s_c[i] != C64::default()
                    || state.s_d[i] != C64::default()
            })
            .collect();
        let t0 = state.t;
        Ok(Self {
            params,
            schedule,
            kappa,
            levels,
            level_of,
            active,
            propagator: LocalPropagator::new(),
            state,
            steps: 0,
            t0,
        })
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn into_state(self) -> FieldState {
        self.state
    }

    pub fn kappa(&self) -> &[f64] {
        &self.kappa
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    fn local(&mut self, rabi: RabiPair, tau: f64) {
        self.propagator.prepare(&self.levels, rabi, tau);
        let st = &mut self.state;
        for &i in &self.active {
            self.propagator.apply(
                self.level_of[i],
                self.kappa[i],
                &mut st.u[i],
                &mut st.s_a[i],
                &mut st.s_c[i],
                &mut st.s_d[i],
            );
        }
    }

    fn advect(&mut self) -> C64 {
        let u = &mut self.state.u;
        let n = u.len();
        if self.params.exact_shift() {
            let out = u[n - 1];
            u.copy_within(0..n - 1, 1);
            u[0] = C64::default();
            out * (self.params.grid.dz / self.params.dt).sqrt()
        } else {
            // first-order upwind for c·dt < dz
            let nu = self.params.cfl();
            let out = u[n - 1] * self.params.c.sqrt();
            for i in (1..n).rev() {
                u[i] = u[i] - (u[i] - u[i - 1]) * nu;
            }
            u[0] *= 1.0 - nu;
            out
        }
    }

    /// Advances one Strang step: local half step, signal shift, local half step.
    pub fn step(&mut self) -> Result<Outflow> {
        let dt = self.params.dt;
        let t = self.t0 + self.steps as f64 * dt;
        let first = self.schedule.rabi_at(t + 0.25 * dt)?;
        let second = self.schedule.rabi_at(t + 0.75 * dt)?;
        self.local(first, 0.5 * dt);
        let amplitude = self.advect();
        self.local(second, 0.5 * dt);
        self.steps += 1;
        self.state.t = self.t0 + self.steps as f64 * dt;
        if !amplitude.is_finite() {
            return Err(Error::NumericFault("solver step"));
        }
        Ok(Outflow {
            t: t + 0.5 * dt,
            amplitude,
        })
    }
}

/// One step of the scheme from a given state; see [`Solver::step`].
pub fn step(
    state: &FieldState,
    schedule: &ControlSchedule,
    params: &MediumParams,
) -> Result<(FieldState, Outflow)> {
    let mut solver = Solver::new(params, schedule, state.clone())?;
    let out = solver.step()?;
    Ok((solver.into_state(), out))
}

/// Time window attributed to one release stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageWindow {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

impl StageWindow {
    pub fn new(label: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            label: label.into(),
            start,
            end,
        }
    }

    fn contains(&self, t: f64) -> bool {
        t >= self.start && t < self.end
    }
}

/// Everything needed to integrate one single-photon trajectory.
#[derive(Debug, Clone)]
pub struct RunSpec {
    pub params: MediumParams,
    pub schedule: ControlSchedule,
    pub initial: FieldState,
    pub end: f64,
    pub stages: Vec<StageWindow>,
    /// Record the norm every this many steps (`1` records every step).
    pub record_every: usize,
}

/// Signal released during one stage window.
#[derive(Debug, Clone, PartialEq)]
pub struct StageOutput {
    pub label: String,
    /// Released excitation divided by the initial norm.
    pub fraction: f64,
    /// Global index (`round(t/dt)`) of the first outflow sample in the window.
    pub first_step: i64,
    /// Outflow amplitudes over the window, unnormalized: `Σ|a|²·dt` is the
    /// released excitation.
    pub amplitudes: Vec<C64>,
}

impl StageOutput {
    /// Unit-norm temporal mode of the released signal (zero if nothing left).
    pub fn mode(&self, dt: f64) -> Vec<C64> {
        let n: f64 = self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dt;
        if n == 0.0 {
            return vec![C64::default(); self.amplitudes.len()];
        }
        let k = 1.0 / n.sqrt();
        self.amplitudes.iter().map(|a| a * k).collect()
    }
}

/// Sampled sample-centre angles, for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub t: f64,
    pub flux: f64,
    pub norm: f64,
    pub theta: f64,
    pub phi: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub dt: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    /// `∫ c|u(z_out)|² dt` over the whole run.
    pub total_outflow: f64,
    pub trace: Vec<TraceRow>,
    pub stage_windows: Vec<StageWindow>,
    pub stages: Vec<StageOutput>,
    /// Largest relative deviation of `norm + outflow` from its initial value.
    pub max_balance_drift: f64,
    pub final_state: FieldState,
}

impl RunResult {
    pub fn released_fraction(&self, label: &str) -> Result<f64> {
        self.stage(label).map(|s| s.fraction)
    }

    pub fn stage(&self, label: &str) -> Result<&StageOutput> {
        self.stages
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| Error::UnknownStage(label.to_string()))
    }
}

/// Released fraction for the stage named `label`.
pub fn released_fraction(result: &RunResult, label: &str) -> Result<f64> {
    result.released_fraction(label)
}

/// Integrates `spec` from its initial state over the whole time steps that
/// fit before `spec.end`.
pub fn run(spec: &RunSpec) -> Result<RunResult> {
    let params = &spec.params;
    let dt = params.dt;
    // whole steps only: the controls are not defined past `end`
    let steps_f = ((spec.end - spec.initial.t) / dt + 1e-9).floor();
    if !(steps_f >= 1.0) {
        return Err(invalid("end", "run must span at least one step"));
    }
    let steps = steps_f as u64;
    let record_every = spec.record_every.max(1) as u64;
    let initial_norm = excitation_norm(&spec.initial);
    if !(initial_norm > 0.0) {
        return Err(invalid("initial state", "has zero excitation"));
    }
    let kappa = params.kappa;
    let mut solver = Solver::new(params, &spec.schedule, spec.initial.clone())?;

    let mut stages: Vec<StageOutput> = spec
        .stages
        .iter()
        .map(|w| StageOutput {
            label: w.label.clone(),
            fraction: 0.0,
            first_step: 0,
            amplitudes: Vec::new(),
        })
        .collect();
    let mut trace = Vec::new();
    let mut outflow = 0.0;
    let mut max_drift: f64 = 0.0;
    let mut last_angles: Option<crate::control::AngleState> = None;

    for n in 0..steps {
        let out = solver.step()?;
        let flux = out.flux();
        outflow += flux * dt;
        if let Some(k) = spec.stages.iter().position(|w| w.contains(out.t)) {
            let stage = &mut stages[k];
            if stage.amplitudes.is_empty() {
                stage.first_step = (out.t / dt - 0.5).round() as i64;
            }
            stage.amplitudes.push(out.amplitude);
            stage.fraction += flux * dt;
        }
        if (n + 1) % record_every == 0 || n + 1 == steps {
            let norm = excitation_norm(solver.state());
            if !norm.is_finite() {
                return Err(Error::NumericFault("run"));
            }
            max_drift = max_drift.max(((norm + outflow) - initial_norm).abs() / initial_norm);
            let rabi = spec.schedule.rabi_at(out.t)?;
            let angles = crate::control::mixing_angles(
                rabi.omega2,
                rabi.omega3,
                kappa,
                last_angles.as_ref(),
            )?;
            last_angles = Some(angles);
            trace.push(TraceRow {
                t: out.t,
                flux,
                norm,
                theta: angles.theta,
                phi: angles.phi,
            });
        }
    }
    for s in &mut stages {
        s.fraction /= initial_norm;
    }
    let final_state = solver.into_state();
    Ok(RunResult {
        dt,
        initial_norm,
        final_norm: excitation_norm(&final_state),
        total_outflow: outflow,
        trace,
        stage_windows: spec.stages.clone(),
        stages,
        max_balance_drift: max_drift,
        final_state,
    })
}
