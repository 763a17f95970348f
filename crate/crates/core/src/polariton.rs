//! Dark (`Ψ`) and trapped (`Z`) polariton decomposition of a field state,
//! adiabatic shape-preserving transport, and the change of polariton basis
//! between two control sets.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};

use crate::control::{ControlSchedule, ControlSet};
use crate::error::{Error, Result};
use crate::medium::FieldState;

/// Parameters of one polariton basis: the control set plus `θ` and the
/// accumulated phase `χ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolaritonBasis {
    pub set: ControlSet,
    pub theta: f64,
    pub chi: f64,
}

impl PolaritonBasis {
    pub fn new(set: ControlSet, theta: f64, chi: f64) -> Self {
        Self { set, theta, chi }
    }

    /// Basis of the storage regime (`θ = π/2`, controls off).
    pub fn stored(set: ControlSet) -> Self {
        Self::new(set, FRAC_PI_2, 0.0)
    }

    fn check(&self) -> Result<()> {
        if self.theta.is_finite() && self.chi.is_finite() && self.set.phi.is_finite() {
            Ok(())
        } else {
            Err(Error::NumericFault("polariton basis"))
        }
    }

    fn coeffs(&self) -> Coeffs {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.set.phi.sin_cos();
        Coeffs {
            ct,
            st,
            cp,
            sp,
            e2: C64::from_polar(1.0, self.set.chi2),
            e3: C64::from_polar(1.0, self.set.chi3),
            echi: C64::from_polar(1.0, self.chi),
        }
    }
}

struct Coeffs {
    ct: f64,
    st: f64,
    cp: f64,
    sp: f64,
    e2: C64,
    e3: C64,
    echi: C64,
}

/// Polariton amplitudes on the grid.
///
/// `bright` is the field-coherence combination coupled to the excited state,
/// `excited` carries `s_a` unchanged. Together with `psi` and `z_pol` they
/// form a unitary change of variables of the field state.
#[derive(Debug, Clone, PartialEq)]
pub struct PolaritonField {
    pub psi: Vec<C64>,
    pub z_pol: Vec<C64>,
    pub bright: Vec<C64>,
    pub excited: Vec<C64>,
}

impl PolaritonField {
    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    /// A field carried entirely by `Ψ`.
    pub fn dark(psi: Vec<C64>) -> Self {
        let z = vec![C64::default(); psi.len()];
        Self {
            z_pol: z.clone(),
            bright: z.clone(),
            excited: z,
            psi,
        }
    }

    fn check(&self) -> Result<()> {
        let n = self.psi.len();
        for v in [&self.z_pol, &self.bright, &self.excited] {
            if v.len() != n {
                return Err(Error::GridMismatch {
                    expected: n,
                    found: v.len(),
                });
            }
        }
        Ok(())
    }
}

/// Decomposes a field state into polaritons of `basis`:
///
/// ```text
/// Ψ = e^{−iχ}[u cosθ − sinθ(e^{iχ₂}cosφ s_c + e^{iχ₃}sinφ s_d)]
/// Z = e^{iχ₂}sinφ s_c − e^{iχ₃}cosφ s_d
/// ```
pub fn to_polaritons(state: &FieldState, basis: &PolaritonBasis) -> Result<PolaritonField> {
    state.check_consistent()?;
    basis.check()?;
    let k = basis.coeffs();
    let n = state.len();
    let mut out = PolaritonField {
        psi: Vec::with_capacity(n),
        z_pol: Vec::with_capacity(n),
        bright: Vec::with_capacity(n),
        excited: state.s_a.clone(),
    };
    for i in 0..n {
        let (u, sc, sd) = (state.u[i], state.s_c[i], state.s_d[i]);
        let coh = k.e2 * k.cp * sc + k.e3 * k.sp * sd;
        out.psi.push(k.echi.conj() * (u * k.ct - coh * k.st));
        out.z_pol.push(k.e2 * k.sp * sc - k.e3 * k.cp * sd);
        out.bright.push(u * k.st + coh * k.ct);
    }
    Ok(out)
}

/// Inverse of [`to_polaritons`]. In particular `u = e^{iχ}Ψ cosθ` and
/// `e^{iχ₂}cosφ s_c + e^{iχ₃}sinφ s_d = −e^{iχ}Ψ sinθ` when only `Ψ` is
/// populated.
pub fn from_polaritons(
    pol: &PolaritonField,
    basis: &PolaritonBasis,
    t: f64,
    dz: f64,
) -> Result<FieldState> {
    pol.check()?;
    basis.check()?;
    let k = basis.coeffs();
    let n = pol.len();
    let mut st = FieldState {
        u: Vec::with_capacity(n),
        s_a: pol.excited.clone(),
        s_c: Vec::with_capacity(n),
        s_d: Vec::with_capacity(n),
        t,
        dz,
    };
    let (e2c, e3c) = (k.e2.conj(), k.e3.conj());
    for i in 0..n {
        let p = k.echi * pol.psi[i];
        let (z, b) = (pol.z_pol[i], pol.bright[i]);
        st.u.push(p * k.ct + b * k.st);
        st.s_c
            .push(e2c * (-p * k.st * k.cp + z * k.sp + b * k.ct * k.cp));
        st.s_d
            .push(e3c * (-p * k.st * k.sp - z * k.cp + b * k.ct * k.sp));
    }
    Ok(st)
}

/// Coefficients expressing the polaritons of `to` through those of `from`
/// in the storage regime:
///
/// ```text
/// Ψ¹ = [cosφ¹cosφ⁰ e^{iΔ₂} + sinφ¹sinφ⁰ e^{iΔ₃}] Ψ⁰ + [cosφ¹sinφ⁰ e^{iΔ₂} − sinφ¹cosφ⁰ e^{iΔ₃}] Z⁰
/// Z¹ = [sinφ¹cosφ⁰ e^{iΔ₂} − cosφ¹sinφ⁰ e^{iΔ₃}] Ψ⁰ + [sinφ¹sinφ⁰ e^{iΔ₂} + cosφ¹cosφ⁰ e^{iΔ₃}] Z⁰
/// ```
///
/// with `Δⱼ = χⱼ¹ − χⱼ⁰`. These coefficients relate the pairs `(Ψ, −Z)`
/// of [`to_polaritons`]; with the `Z` sign used there the off-diagonal
/// entries flip sign.
pub fn transfer_matrix(from: &ControlSet, to: &ControlSet) -> [[C64; 2]; 2] {
    let (s0, c0) = from.phi.sin_cos();
    let (s1, c1) = to.phi.sin_cos();
    let e2 = C64::from_polar(1.0, to.chi2 - from.chi2);
    let e3 = C64::from_polar(1.0, to.chi3 - from.chi3);
    [
        [c1 * c0 * e2 + s1 * s0 * e3, c1 * s0 * e2 - s1 * c0 * e3],
        [s1 * c0 * e2 - c1 * s0 * e3, s1 * s0 * e2 + c1 * c0 * e3],
    ]
}

/// Re-expresses stored polaritons of `basis0` in `basis1`.
///
/// Both bases must be in the storage regime (`θ = π/2`), where the map acts
/// only on `(Ψ, Z)`; `bright` reduces to the signal and `excited` to `s_a`,
/// neither of which depends on the control set. A difference in `χ` enters
/// as a phase on `Ψ`.
pub fn basis_change(
    pol: &PolaritonField,
    basis0: &PolaritonBasis,
    basis1: &PolaritonBasis,
) -> Result<PolaritonField> {
    pol.check()?;
    basis0.check()?;
    basis1.check()?;
    let stored = |b: &PolaritonBasis| (b.theta - FRAC_PI_2).abs() <= 1e-12;
    if !(stored(basis0) && stored(basis1)) {
        return Err(Error::ThetaMismatch {
            theta0: basis0.theta,
            theta1: basis1.theta,
        });
    }
    let m = transfer_matrix(&basis0.set, &basis1.set);
    let phase_in = C64::from_polar(1.0, basis0.chi);
    let phase_out = C64::from_polar(1.0, -basis1.chi);
    let mut out = pol.clone();
    for i in 0..pol.len() {
        let p = pol.psi[i] * phase_in;
        let mz = -pol.z_pol[i];
        out.psi[i] = phase_out * (m[0][0] * p + m[0][1] * mz);
        out.z_pol[i] = -(m[1][0] * p + m[1][1] * mz);
    }
    Ok(out)
}

/// Interpolation used for non-integer grid shifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    /// Band-limited shift through the discrete Fourier transform (periodic).
    #[default]
    Spectral,
    /// Piecewise-linear, zero outside the grid.
    Linear,
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

/// Displacement `c∫cos²θ dt` of the dark polariton over `[t0, t1]` for a
/// medium of coupling `kappa`, by composite Simpson quadrature on each
/// schedule segment.
///
/// Fails with [`Error::NotProportional`] if any segment in the window mixes
/// the two controls.
pub fn transport_shift(
    schedule: &ControlSchedule,
    kappa: f64,
    c: f64,
    t0: f64,
    t1: f64,
) -> Result<f64> {
    if !(t1 >= t0) {
        return Err(Error::InvalidTrace(format!(
            "window [{t0}, {t1}] is reversed"
        )));
    }
    schedule.ensure_proportional(t0, t1)?;
    schedule.rabi_at(t0)?;
    schedule.rabi_at(t1)?;
    let cos2 = |t: f64| {
        let o2 = schedule
            .rabi_at(t)
            .map(|r| r.magnitude().powi(2))
            .unwrap_or(0.0);
        o2 / (o2 + kappa * kappa)
    };
    let mut knots = vec![t0];
    knots.extend(schedule.breakpoints(t0, t1));
    knots.push(t1);
    let mut total = 0.0;
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b > a {
            // stay inside [a, b) so the closed-left segment lookup is consistent
            let eps = (b - a) * 1e-12;
            total += simpson(&cos2, a, b - eps, 512) + cos2(a) * eps;
        }
    }
    Ok(c * total)
}

/// Displacement `c∫cos²θ dt` from a sampled `(t, θ)` trace (trapezoidal).
pub fn shift_from_theta(trace: &[(f64, f64)], c: f64) -> Result<f64> {
    let mut acc = 0.0;
    for w in trace.windows(2) {
        let dt = w[1].0 - w[0].0;
        if !(dt > 0.0) {
            return Err(Error::InvalidTrace("times must increase strictly".into()));
        }
        acc += 0.5 * dt * (w[0].1.cos().powi(2) + w[1].1.cos().powi(2));
    }
    Ok(c * acc)
}

/// Shifts a grid profile by `shift` (in length units) towards larger `z`.
pub fn shift_profile(profile: &[C64], dz: f64, shift: f64, interp: Interpolation) -> Vec<C64> {
    match interp {
        Interpolation::Spectral => spectral_shift(profile, shift / dz),
        Interpolation::Linear => linear_shift(profile, shift / dz),
    }
}

fn spectral_shift(profile: &[C64], cells: f64) -> Vec<C64> {
    let n = profile.len();
    if n == 0 {
        return Vec::new();
    }
    let mut planner = FftPlanner::new();
    let fwd: Arc<dyn Fft<f64>> = planner.plan_fft_forward(n);
    let inv: Arc<dyn Fft<f64>> = planner.plan_fft_inverse(n);
    let mut buf = profile.to_vec();
    fwd.process(&mut buf);
    for (m, v) in buf.iter_mut().enumerate() {
        let freq = if m <= n / 2 {
            m as f64
        } else {
            m as f64 - n as f64
        };
        let arg = -std::f64::consts::TAU * freq * cells / n as f64;
        if n % 2 == 0 && m == n / 2 {
            *v *= arg.cos();
        } else {
            *v *= C64::from_polar(1.0, arg);
        }
    }
    inv.process(&mut buf);
    let norm = 1.0 / n as f64;
    buf.iter_mut().for_each(|v| *v *= norm);
    buf
}

fn linear_shift(profile: &[C64], cells: f64) -> Vec<C64> {
    let n = profile.len() as i64;
    (0..n)
        .map(|i| {
            let x = i as f64 - cells;
            let j = x.floor();
            let w = x - j;
            let j = j as i64;
            let at = |k: i64| {
                if (0..n).contains(&k) {
                    profile[k as usize]
                } else {
                    C64::default()
                }
            };
            at(j) * (1.0 - w) + at(j + 1) * w
        })
        .collect()
}

/// Adiabatic transport of a dark-polariton profile over `[t0, t1]`: the
/// profile moves rigidly by `c∫cos²θ dt`. The trapped polariton does not
/// move at all, so it needs no counterpart here.
pub fn transport(
    psi0: &[C64],
    dz: f64,
    schedule: &ControlSchedule,
    kappa: f64,
    c: f64,
    t0: f64,
    t1: f64,
    interp: Interpolation,
) -> Result<Vec<C64>> {
    let shift = transport_shift(schedule, kappa, c, t0, t1)?;
    Ok(shift_profile(psi0, dz, shift, interp))
}
