//! Storage and two-stage release timelines, and single- and two-photon runs
//! built on the medium solver.

use serde::{Deserialize, Serialize};

use crate::control::{ControlSchedule, ControlSet, RampShape, ScheduleBuilder};
use crate::error::{invalid, Error, Result};
use crate::interference::{stats_from_time_bins, TimeBin, TwoPhotonStats, WavePacket};
use crate::medium::{run, FieldState, MediumParams, RunResult, RunSpec, StageWindow};

pub const STORAGE: &str = "storage";
pub const STAGE1: &str = "stage1";
pub const STAGE2: &str = "stage2";

/// Control set switched on at `open_at` (or from the start when `None`) and
/// ramped off at `close_at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageEvent {
    pub set: ControlSet,
    pub open_at: Option<f64>,
    pub close_at: f64,
}

/// Control set switched on at `open_at` and, unless `None`, off at
/// `close_at`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReleaseEvent {
    pub set: ControlSet,
    pub open_at: f64,
    pub close_at: Option<f64>,
}

/// Complete control timeline: one or two storage events followed by two
/// release stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    pub start: f64,
    pub end: f64,
    /// Peak Rabi frequency `Ω₀`.
    pub amplitude: f64,
    pub shape: RampShape,
    pub ramp_time: f64,
    pub storage: Vec<StorageEvent>,
    pub release: [ReleaseEvent; 2],
    /// Delay added to every stage-window boundary.
    pub settle: f64,
}

impl Timeline {
    pub fn schedule(&self) -> Result<ControlSchedule> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(invalid("amplitude", "must be positive"));
        }
        if self.storage.is_empty() || self.storage.len() > 2 {
            return Err(invalid("storage", "need one or two storage events"));
        }
        let om = self.amplitude;
        let first = &self.storage[0];
        let initial = if first.open_at.is_none() {
            first.set.rabi(om)
        } else {
            crate::control::RabiPair::OFF
        };
        let mut b = ScheduleBuilder::new(self.start, initial, self.shape, self.ramp_time);
        for (k, ev) in self.storage.iter().enumerate() {
            match ev.open_at {
                Some(t) => b = b.switch_to(t, ev.set.rabi(om))?,
                None if k > 0 => {
                    return Err(invalid("storage", "only the first event may start open"))
                }
                None => {}
            }
            b = b.switch_off(ev.close_at)?;
        }
        for ev in &self.release {
            b = b.switch_to(ev.open_at, ev.set.rabi(om))?;
            if let Some(t) = ev.close_at {
                b = b.switch_off(t)?;
            }
        }
        b.finish(self.end)
    }

    pub fn stage_windows(&self) -> Vec<StageWindow> {
        let s = self.settle;
        let r1 = self.release[0].open_at + s;
        let r2 = self.release[1].open_at + s;
        vec![
            StageWindow::new(STORAGE, self.start, r1),
            StageWindow::new(STAGE1, r1, r2),
            StageWindow::new(STAGE2, r2, self.end + s.max(0.0)),
        ]
    }
}

/// A photon whose Gaussian packet (`|f|²` standard deviation `width`)
/// travels in vacuum and would reach `z = 0` at time `arrival`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Photon {
    pub width: f64,
    pub arrival: f64,
}

/// Vacuum packet at `t0`, normalized to unit discrete norm on the grid.
pub fn initial_state(params: &MediumParams, photon: &Photon, t0: f64) -> Result<FieldState> {
    let center = -params.c * (photon.arrival - t0);
    let packet = WavePacket::gaussian(center, photon.width)?;
    let u = packet.on_grid(&params.grid)?;
    FieldState::from_signal(u, &params.grid, t0)
}

fn check_start(params: &MediumParams, t0: f64) -> Result<()> {
    let k = t0 / params.dt;
    if (k - k.round()).abs() > 1e-9 {
        return Err(invalid("start", "must be a whole number of time steps"));
    }
    Ok(())
}

/// Runs one photon through the timeline.
pub fn simulate_photon(
    params: &MediumParams,
    timeline: &Timeline,
    photon: &Photon,
    record_every: usize,
) -> Result<RunResult> {
    params.validate()?;
    check_start(params, timeline.start)?;
    let spec = RunSpec {
        params: params.clone(),
        schedule: timeline.schedule()?,
        initial: initial_state(params, photon, timeline.start)?,
        end: timeline.end,
        stages: timeline.stage_windows(),
        record_every,
    };
    run(&spec)
}

fn time_bin(result: &RunResult, label: &str) -> Result<TimeBin> {
    let st = result.stage(label)?;
    // amplitudes of a unit-norm photon
    let k = 1.0 / result.initial_norm.sqrt();
    Ok(TimeBin {
        first_step: st.first_step,
        amplitudes: st.amplitudes.iter().map(|a| a * k).collect(),
    })
}

#[derive(Debug, Clone)]
pub struct PairResult {
    pub photons: [RunResult; 2],
    pub stats: TwoPhotonStats,
}

/// Runs both photons through the same timeline and combines their released
/// time bins into two-photon statistics. The dynamics are linear, so each
/// photon's amplitude is propagated on its own.
pub fn simulate_pair(
    params: &MediumParams,
    timeline: &Timeline,
    photons: [&Photon; 2],
    record_every: usize,
) -> Result<PairResult> {
    if timeline.storage.len() != 2 {
        return Err(invalid("storage", "a photon pair needs two storage events"));
    }
    let a = simulate_photon(params, timeline, photons[0], record_every)?;
    let b = simulate_photon(params, timeline, photons[1], record_every)?;
    let (a1, a2) = (time_bin(&a, STAGE1)?, time_bin(&a, STAGE2)?);
    let (b1, b2) = (time_bin(&b, STAGE1)?, time_bin(&b, STAGE2)?);
    let stats = stats_from_time_bins([&a1, &a2], [&b1, &b2], params.dt)?;
    Ok(PairResult {
        photons: [a, b],
        stats,
    })
}

/// Derives event times for storing one or two photons and releasing them
/// in two stages.
///
/// Each photon enters with its storage set on and is stored once its
/// packet lies inside the sample. A second photon is admitted after the
/// first is stored, with identical relative timing, so both end up at the
/// same place; `separation` delays the second switch-off by
/// `separation / v_g`, moving the second packet that far ahead.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoPlan {
    pub amplitude: f64,
    pub shape: RampShape,
    pub ramp_time: f64,
    pub width: f64,
    pub storage: Vec<ControlSet>,
    pub release: ControlSet,
    /// Defaults to the complement of `release`.
    pub release2: Option<ControlSet>,
    pub separation: f64,
    /// Slack added around every event.
    pub margin: f64,
}

impl AutoPlan {
    pub fn new(amplitude: f64, width: f64, storage: Vec<ControlSet>, release: ControlSet) -> Self {
        Self {
            amplitude,
            shape: RampShape::Cos2,
            ramp_time: 2.5 * width,
            width,
            storage,
            release,
            release2: None,
            separation: 0.0,
            margin: width,
        }
    }

    /// Half-extent of a vacuum packet.
    fn extent(&self) -> f64 {
        5.0 * self.width
    }

    fn ramp(&self) -> f64 {
        match self.shape {
            RampShape::Cos2 => self.ramp_time,
            RampShape::Square => 0.0,
        }
    }

    /// Arrival times at `z = 0` and the entry-to-switch-off interval.
    fn arrivals(&self, c: f64) -> (Vec<f64>, f64) {
        let e = self.extent() / c;
        let hold = e + self.margin / c;
        let mut out = vec![e + self.margin / c];
        if self.storage.len() > 1 {
            let close0 = out[0] + hold;
            let open1 = close0 + self.ramp() + self.margin / c;
            out.push(open1 + self.ramp() + self.margin / c + e);
        }
        (out, hold)
    }

    /// Vacuum length needed in front of the sample.
    pub fn lead_in(&self, c: f64) -> f64 {
        let (arrivals, _) = self.arrivals(c);
        c * arrivals.last().copied().unwrap_or(0.0) + self.extent()
    }

    /// Sample length that holds the stored packets.
    pub fn min_sample_length(&self, kappa: f64, c: f64) -> f64 {
        let vg = c * self.cos2_theta(kappa);
        let (_, hold) = self.arrivals(c);
        vg * (hold + self.ramp()) + self.extent() * self.cos2_theta(kappa) + self.separation.abs()
    }

    fn cos2_theta(&self, kappa: f64) -> f64 {
        let o2 = self.amplitude * self.amplitude;
        o2 / (o2 + kappa * kappa)
    }

    pub fn build(&self, params: &MediumParams) -> Result<(Timeline, Vec<Photon>)> {
        if self.storage.is_empty() || self.storage.len() > 2 {
            return Err(invalid("storage", "need one or two storage sets"));
        }
        if !(self.width > 0.0) || !(self.amplitude > 0.0) {
            return Err(invalid("plan", "width and amplitude must be positive"));
        }
        let c = params.c;
        let vg = c * self.cos2_theta(params.kappa);
        let r = self.ramp();
        let m = self.margin / c;
        let (arrivals, hold) = self.arrivals(c);

        let need = self.lead_in(c);
        if -params.grid.z_min < need - 1e-9 {
            return Err(Error::Configuration(format!(
                "grid starts at z = {}, but the packets need {need} of vacuum in front of the sample",
                params.grid.z_min
            )));
        }
        let fit = self.min_sample_length(params.kappa, c);
        if params.sample_length < fit {
            return Err(Error::Configuration(format!(
                "sample length {} cannot hold the stored packet (need at least {fit})",
                params.sample_length
            )));
        }

        let mut storage = Vec::new();
        let mut last_close = 0.0;
        for (k, (set, arrival)) in self.storage.iter().zip(&arrivals).enumerate() {
            let extra = if k > 0 { self.separation / vg } else { 0.0 };
            let close = arrival + hold + extra;
            let open_at = (k > 0).then(|| last_close + r + m);
            storage.push(StorageEvent {
                set: *set,
                open_at,
                close_at: close,
            });
            last_close = close;
        }

        let lead_out = (params.grid.z_max() - params.sample_length).max(0.0);
        let exit = r + params.sample_length / vg + lead_out / c + m;
        let open1 = last_close + r + m;
        let close1 = open1 + exit;
        let open2 = close1 + r + m;
        let end = open2 + exit;
        let timeline = Timeline {
            start: 0.0,
            end,
            amplitude: self.amplitude,
            shape: self.shape,
            ramp_time: self.ramp_time,
            storage,
            release: [
                ReleaseEvent {
                    set: self.release,
                    open_at: open1,
                    close_at: Some(close1),
                },
                ReleaseEvent {
                    set: self
                        .release2
                        .unwrap_or_else(|| self.release.complementary()),
                    open_at: open2,
                    close_at: None,
                },
            ],
            settle: 0.0,
        };
        let photons = arrivals
            .iter()
            .map(|&arrival| Photon {
                width: self.width,
                arrival,
            })
            .collect();
        Ok((timeline, photons))
    }
}
