//! Classical control fields of the tripod medium.
//!
//! A [`ControlSet`] fixes the relative amplitude (through the mixing angle
//! `phi`) and the phases of the two control Rabi frequencies. A
//! [`ControlSchedule`] strings together time segments in which the pair
//! `(Ω₂, Ω₃)` is either held constant or smoothly switched between two
//! values. Mixing angles `theta`, `phi` and the phases are derived on demand.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Reduce an angle into `[0, 2π)`.
pub fn reduce_angle(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Signed distance between two angles on the circle, in `(-π, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// One configuration `(φ, χ₂, χ₃)` of the pair of control fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSet {
    pub phi: f64,
    #[serde(default)]
    pub chi2: f64,
    #[serde(default)]
    pub chi3: f64,
}

impl ControlSet {
    /// Builds a set, clamping `phi` into `[0, π/2]`.
    pub fn new(phi: f64, chi2: f64, chi3: f64) -> Result<Self> {
        if !(phi.is_finite() && chi2.is_finite() && chi3.is_finite()) {
            return Err(invalid("control set", "angles must be finite"));
        }
        Ok(Self {
            phi: phi.clamp(0.0, FRAC_PI_2),
            chi2,
            chi3,
        })
    }

    /// The set with `phi = 0` and zero phases: only `Ω₂` is on.
    pub const fn single_field() -> Self {
        Self {
            phi: 0.0,
            chi2: 0.0,
            chi3: 0.0,
        }
    }

    /// The complementary set `(π/2 − φ, χ₂ + π, χ₃)`. Applying a set and then
    /// its complement releases a stored excitation completely.
    pub fn complementary(&self) -> Self {
        Self {
            phi: FRAC_PI_2 - self.phi,
            chi2: reduce_angle(self.chi2 + PI),
            chi3: self.chi3,
        }
    }

    /// Rabi frequencies `Ω₂ = Ω cosφ e^{iχ₂}`, `Ω₃ = Ω sinφ e^{iχ₃}` for total
    /// amplitude `Ω`.
    pub fn rabi(&self, amplitude: f64) -> RabiPair {
        RabiPair {
            omega2: C64::from_polar(amplitude * self.phi.cos(), self.chi2),
            omega3: C64::from_polar(amplitude * self.phi.sin(), self.chi3),
        }
    }

    /// Compares two sets with the phases taken modulo 2π.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self.phi - other.phi).abs() <= tol
            && angle_distance(self.chi2, other.chi2).abs() <= tol
            && angle_distance(self.chi3, other.chi3).abs() <= tol
    }
}

/// Instantaneous pair of complex control Rabi frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RabiPair {
    pub omega2: C64,
    pub omega3: C64,
}

impl RabiPair {
    pub const OFF: RabiPair = RabiPair {
        omega2: C64 { re: 0.0, im: 0.0 },
        omega3: C64 { re: 0.0, im: 0.0 },
    };

    pub fn new(omega2: C64, omega3: C64) -> Self {
        Self { omega2, omega3 }
    }

    /// Total Rabi frequency `Ω = sqrt(|Ω₂|² + |Ω₃|²)`.
    pub fn magnitude(&self) -> f64 {
        self.omega2.norm().hypot(self.omega3.norm())
    }

    pub fn is_off(&self) -> bool {
        self.omega2 == C64::new(0.0, 0.0) && self.omega3 == C64::new(0.0, 0.0)
    }

    fn is_finite(&self) -> bool {
        self.omega2.is_finite() && self.omega3.is_finite()
    }

    fn blend(&self, other: &Self, w: f64) -> Self {
        Self {
            omega2: self.omega2 * w + other.omega2 * (1.0 - w),
            omega3: self.omega3 * w + other.omega3 * (1.0 - w),
        }
    }
}

/// Switching profile used inside ramp segments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RampShape {
    /// `Ω(t) = from·cos²(πx/2) + to·sin²(πx/2)`, `x ∈ [0, 1]` across the segment.
    #[default]
    Cos2,
    /// Instantaneous switch at the start of the segment.
    Square,
}

impl RampShape {
    /// Weight of the segment's starting value at fractional position `x`.
    fn start_weight(self, x: f64) -> f64 {
        match self {
            RampShape::Cos2 => {
                let c = (FRAC_PI_2 * x).cos();
                c * c
            }
            RampShape::Square => 0.0,
        }
    }
}

/// A time window over which the controls go from `from` to `to`.
///
/// When `from == to` the segment is a constant hold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub from: RabiPair,
    pub to: RabiPair,
    pub shape: RampShape,
}

impl Segment {
    pub fn constant(start: f64, end: f64, value: RabiPair) -> Self {
        Self {
            start,
            end,
            from: value,
            to: value,
            shape: RampShape::Cos2,
        }
    }

    pub fn ramp(start: f64, end: f64, from: RabiPair, to: RabiPair, shape: RampShape) -> Self {
        Self {
            start,
            end,
            from,
            to,
            shape,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.from == self.to
    }

    fn value_at(&self, t: f64) -> RabiPair {
        if self.is_constant() {
            return self.from;
        }
        let x = ((t - self.start) / (self.end - self.start)).clamp(0.0, 1.0);
        self.from.blend(&self.to, self.shape.start_weight(x))
    }

    /// True when `Ω₃/Ω₂` keeps a fixed magnitude and phase across the
    /// segment, so that `φ̇ = 0` and `χ̇₂ = χ̇₃ = 0` wherever the controls are on.
    pub fn is_proportional(&self) -> bool {
        if self.is_constant() || self.from.is_off() || self.to.is_off() {
            return true;
        }
        let a = [self.from.omega2, self.from.omega3];
        let b = [self.to.omega2, self.to.omega3];
        let aa: f64 = a.iter().map(|z| z.norm_sqr()).sum();
        let ab: C64 = a.iter().zip(&b).map(|(x, y)| x.conj() * y).sum();
        let lambda = ab / aa;
        let scale = aa
            .sqrt()
            .max(b.iter().map(|z| z.norm()).fold(0.0, f64::max));
        let tol = 1e-12 * scale;
        if lambda.im.abs() * aa.sqrt() > tol || lambda.re < 0.0 {
            return false;
        }
        a.iter()
            .zip(&b)
            .all(|(x, y)| (y - x * lambda.re).norm() <= tol)
    }
}

/// Piecewise-smooth time profile of both control Rabi frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSchedule {
    segments: Vec<Segment>,
}

impl ControlSchedule {
    /// Validates contiguity and finiteness of the segments.
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidSchedule("no segments".into()));
        }
        for seg in &segments {
            if !(seg.start.is_finite() && seg.end.is_finite()) || seg.end <= seg.start {
                return Err(Error::InvalidSchedule(format!(
                    "segment [{}, {}] is empty or non-finite",
                    seg.start, seg.end
                )));
            }
            if !(seg.from.is_finite() && seg.to.is_finite()) {
                return Err(Error::NumericFault("control schedule"));
            }
        }
        for pair in segments.windows(2) {
            let gap = pair[1].start - pair[0].end;
            let scale = pair[0].end.abs().max(1.0);
            if gap.abs() > 1e-12 * scale {
                return Err(Error::InvalidSchedule(format!(
                    "segments [{}, {}] and [{}, {}] are not contiguous",
                    pair[0].start, pair[0].end, pair[1].start, pair[1].end
                )));
            }
        }
        Ok(Self { segments })
    }

    /// A schedule holding `value` over `[start, end]`.
    pub fn constant(start: f64, end: f64, value: RabiPair) -> Result<Self> {
        Self::new(vec![Segment::constant(start, end, value)])
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn start(&self) -> f64 {
        self.segments[0].start
    }

    pub fn end(&self) -> f64 {
        self.segments[self.segments.len() - 1].end
    }

    fn segment_index(&self, t: f64) -> Result<usize> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::OutOfRange {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        // closed-left: a boundary time belongs to the later segment
        let idx = self.segments.partition_point(|s| s.start <= t);
        Ok(idx.saturating_sub(1))
    }

    /// Complex Rabi frequencies `(Ω₂, Ω₃)` at time `t`.
    pub fn rabi_at(&self, t: f64) -> Result<RabiPair> {
        let idx = self.segment_index(t)?;
        Ok(self.segments[idx].value_at(t))
    }

    /// Segments intersecting the open window `(t0, t1)`.
    pub fn segments_in(&self, t0: f64, t1: f64) -> impl Iterator<Item = &Segment> {
        self.segments
            .iter()
            .filter(move |s| s.end > t0 && s.start < t1)
    }

    /// Checks that every segment touching `[t0, t1]` is proportional.
    pub fn ensure_proportional(&self, t0: f64, t1: f64) -> Result<()> {
        match self.segments_in(t0, t1).find(|s| !s.is_proportional()) {
            Some(s) => Err(Error::NotProportional {
                start: s.start,
                end: s.end,
            }),
            None => Ok(()),
        }
    }

    /// Times at which the segment shape changes inside `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        self.segments
            .iter()
            .map(|s| s.start)
            .filter(|&b| b > t0 && b < t1)
            .collect()
    }
}

/// Incrementally assembles a schedule from switch events.
///
/// Every switch ramps from the current value to a new one over
/// `ramp_time` (cos² shape) or instantaneously (square shape).
#[derive(Debug, Clone)]
pub struct ScheduleBuilder {
    segments: Vec<Segment>,
    cursor: f64,
    current: RabiPair,
    shape: RampShape,
    ramp_time: f64,
}

impl ScheduleBuilder {
    pub fn new(start: f64, initial: RabiPair, shape: RampShape, ramp_time: f64) -> Self {
        Self {
            segments: Vec::new(),
            cursor: start,
            current: initial,
            shape,
            ramp_time,
        }
    }

    pub fn cursor(&self) -> f64 {
        self.cursor
    }

    /// Holds the current value until `at`, then switches to `target`.
    pub fn switch_to(mut self, at: f64, target: RabiPair) -> Result<Self> {
        if at < self.cursor {
            return Err(Error::InvalidSchedule(format!(
                "switch at t = {at} precedes the end of the previous switch (t = {})",
                self.cursor
            )));
        }
        if at > self.cursor {
            self.segments
                .push(Segment::constant(self.cursor, at, self.current));
        }
        self.cursor = at;
        if self.shape == RampShape::Cos2 && self.ramp_time > 0.0 {
            let end = at + self.ramp_time;
            self.segments
                .push(Segment::ramp(at, end, self.current, target, self.shape));
            self.cursor = end;
        }
        self.current = target;
        Ok(self)
    }

    pub fn switch_off(self, at: f64) -> Result<Self> {
        self.switch_to(at, RabiPair::OFF)
    }

    /// Holds the current value until `end` and finalizes the schedule.
    pub fn finish(mut self, end: f64) -> Result<ControlSchedule> {
        if end < self.cursor {
            return Err(Error::InvalidSchedule(format!(
                "schedule end {end} precedes the last switch ending at {}",
                self.cursor
            )));
        }
        if end > self.cursor {
            self.segments
                .push(Segment::constant(self.cursor, end, self.current));
        }
        ControlSchedule::new(self.segments)
    }
}

/// Mixing angles and phases parametrizing the polariton basis at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleState {
    /// `tan θ = κ/Ω`; `π/2` when the controls are off.
    pub theta: f64,
    /// `tan φ = |Ω₃/Ω₂|`.
    pub phi: f64,
    /// `arg Ω₂`, unwrapped.
    pub chi2: f64,
    /// `arg Ω₃`, unwrapped.
    pub chi3: f64,
    /// Accumulated `∫ sin²θ χ̇₂ dt`.
    pub chi: f64,
}

impl AngleState {
    pub fn from_set(set: &ControlSet, theta: f64, chi: f64) -> Self {
        Self {
            theta,
            phi: set.phi,
            chi2: set.chi2,
            chi3: set.chi3,
            chi,
        }
    }

    pub fn set(&self) -> ControlSet {
        ControlSet {
            phi: self.phi,
            chi2: self.chi2,
            chi3: self.chi3,
        }
    }
}

fn unwrap_phase(raw: f64, previous: Option<f64>) -> f64 {
    match previous {
        Some(p) => p + angle_distance(raw, p),
        None => raw,
    }
}

/// Derives `θ`, `φ`, `χ₂`, `χ₃` from the instantaneous Rabi frequencies.
///
/// Quantities that are undefined for vanishing fields (`φ` when both controls
/// are off, a phase when its field is off) are carried over from `previous`,
/// or zero when there is none. `chi` is copied from `previous`; use
/// [`chi_integrate`] to advance it.
pub fn mixing_angles(
    omega2: C64,
    omega3: C64,
    kappa: f64,
    previous: Option<&AngleState>,
) -> Result<AngleState> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(invalid("kappa", format!("must be positive, got {kappa}")));
    }
    if !(omega2.is_finite() && omega3.is_finite()) {
        return Err(Error::NumericFault("mixing_angles"));
    }
    let a2 = omega2.norm();
    let a3 = omega3.norm();
    let omega = a2.hypot(a3);
    let theta = kappa.atan2(omega);
    let phi = if omega > 0.0 {
        a3.atan2(a2)
    } else {
        previous.map_or(0.0, |p| p.phi)
    };
    let chi2 = if a2 > 0.0 {
        unwrap_phase(omega2.arg(), previous.map(|p| p.chi2))
    } else {
        previous.map_or(0.0, |p| p.chi2)
    };
    let chi3 = if a3 > 0.0 {
        unwrap_phase(omega3.arg(), previous.map(|p| p.chi3))
    } else {
        previous.map_or(0.0, |p| p.chi3)
    };
    Ok(AngleState {
        theta,
        phi,
        chi2,
        chi3,
        chi: previous.map_or(0.0, |p| p.chi),
    })
}

/// Increment of `χ` over a sampled trace, `Δχ = ∫ sin²θ dχ₂`, by the
/// trapezoidal rule in `χ₂`.
///
/// Exact when `θ` is constant and `χ₂` is piecewise linear between samples.
/// Additive over adjacent traces sharing their boundary sample.
pub fn chi_integrate(trace: &[(f64, AngleState)]) -> Result<f64> {
    for w in trace.windows(2) {
        if !(w[1].0 > w[0].0) {
            return Err(Error::InvalidTrace(format!(
                "times must increase strictly ({} then {})",
                w[0].0, w[1].0
            )));
        }
    }
    Ok(trace
        .windows(2)
        .map(|w| {
            let (a, b) = (&w[0].1, &w[1].1);
            let s2 = 0.5 * (a.theta.sin().powi(2) + b.theta.sin().powi(2));
            s2 * (b.chi2 - a.chi2)
        })
        .sum())
}

/// Samples the angle state of `schedule` at `n + 1` evenly spaced times on
/// `[t0, t1]`, unwrapping phases and accumulating `χ` along the way.
pub fn angle_trace(
    schedule: &ControlSchedule,
    kappa: f64,
    t0: f64,
    t1: f64,
    n: usize,
) -> Result<Vec<(f64, AngleState)>> {
    if n == 0 || !(t1 > t0) {
        return Err(Error::InvalidTrace(
            "need t1 > t0 and at least one step".into(),
        ));
    }
    let mut out: Vec<(f64, AngleState)> = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = if k == n {
            t1
        } else {
            t0 + (t1 - t0) * k as f64 / n as f64
        };
        let rabi = schedule.rabi_at(t)?;
        let prev = out.last().map(|(_, s)| s);
        let mut state = mixing_angles(rabi.omega2, rabi.omega3, kappa, prev)?;
        if let Some((_, p)) = out.last() {
            state.chi = p.chi + chi_integrate(&[(out[out.len() - 1].0, *p), (t, state)])?;
        }
        out.push((t, state));
    }
    Ok(out)
}
