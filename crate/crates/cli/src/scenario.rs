//! Scenario documents.
//!
//! A scenario is a TOML file describing the medium, the control sets used
//! to store and release up to two photons, the photon packets and an
//! optional dip sweep. Parsing resolves every default into an explicit
//! value, so a parsed scenario written back out describes exactly the same
//! run.
//!
//! ```toml
//! [medium]
//! kappa = 1.0
//!
//! [controls]
//! amplitude = 1.0
//!
//! [[storage]]
//! phi = 0.0
//!
//! [release]
//! stage1 = { phi = 0.7853981633974483 }
//!
//! [[packets]]
//! width = 16.0
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tripod_core::{
    AutoPlan, ControlSet, Grid, MediumParams, Photon, RampShape, SampleEdge, ScanAxis, Timeline,
};

use crate::output::Format;

pub const DEFAULT_CELLS: usize = 4096;
pub const DEFAULT_RECORD_EVERY: usize = 16;
/// Complementarity is checked with phases taken modulo 2π.
const SET_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown key `{key}` (nearest valid key: `{nearest}`)")]
    UnknownKey { key: String, nearest: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] tripod_core::Error),
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid(msg.into())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub medium: Medium,
    pub controls: Controls,
    /// One storage set per packet.
    pub storage: Vec<ControlSet>,
    pub release: Release,
    pub packets: Vec<Packet>,
    #[serde(default)]
    pub output: Output,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Medium {
    pub kappa: f64,
    #[serde(default = "unit")]
    pub c: f64,
    #[serde(default = "default_cells")]
    pub cells: usize,
    /// Defaults to the shortest sample that holds the stored packets, plus
    /// one packet width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_length: Option<f64>,
    /// Vacuum in front of the sample; defaults to what the packets need.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lead_in: Option<f64>,
    #[serde(default)]
    pub lead_out: f64,
    /// Defaults to `dz / c`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default)]
    pub edge: SampleEdge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Controls {
    /// Peak Rabi frequency of every control set.
    pub amplitude: f64,
    #[serde(default)]
    pub shape: RampShape,
    /// Defaults to 2.5 packet widths (in time, `c = 1`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramp_time: Option<f64>,
    /// Slack around every switching event; defaults to one packet width.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Release {
    pub stage1: ControlSet,
    /// Defaults to the complement of `stage1`. Any other set needs
    /// `allow_incomplete`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stage2: Option<ControlSet>,
    #[serde(default)]
    pub allow_incomplete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Packet {
    /// Standard deviation of `|f(z)|²` in vacuum.
    pub width: f64,
    /// Vacuum displacement of the released packet relative to the first
    /// one. Only the second packet may set it.
    #[serde(default)]
    pub offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Output {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub format: Format,
    /// Trace rows are written every this many solver steps.
    #[serde(default = "default_record_every")]
    pub record_every: usize,
}

impl Default for Output {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            format: Format::default(),
            record_every: DEFAULT_RECORD_EVERY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub axis: ScanAxis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    /// Also run the solver at every point (needs two packets).
    #[serde(default)]
    pub end_to_end: bool,
}

fn unit() -> f64 {
    1.0
}

fn default_cells() -> usize {
    DEFAULT_CELLS
}

fn default_dir() -> PathBuf {
    PathBuf::from("tripod-out")
}

fn default_record_every() -> usize {
    DEFAULT_RECORD_EVERY
}

const SET_KEYS: &[&str] = &["phi", "chi2", "chi3"];

/// Valid keys of the table at `path` (array elements share their array's
/// path). `None` for free-form values.
fn schema(path: &[&str]) -> Option<&'static [&'static str]> {
    Some(match path {
        [] => &[
            "medium", "controls", "storage", "release", "packets", "output", "sweep",
        ],
        ["medium"] => &[
            "kappa",
            "c",
            "cells",
            "sample_length",
            "lead_in",
            "lead_out",
            "dt",
            "edge",
        ],
        ["medium", "edge"] => &["kind", "width"],
        ["controls"] => &["amplitude", "shape", "ramp_time", "margin"],
        ["storage"] | ["release", "stage1"] | ["release", "stage2"] => SET_KEYS,
        ["release"] => &["stage1", "stage2", "allow_incomplete"],
        ["packets"] => &["width", "offset"],
        ["output"] => &["dir", "format", "record_every"],
        ["sweep"] => &["axis", "start", "stop", "points", "end_to_end"],
        _ => return None,
    })
}

fn nearest(key: &str, valid: &[&str]) -> String {
    valid
        .iter()
        .min_by_key(|v| strsim::levenshtein(key, v))
        .map(|v| v.to_string())
        .unwrap_or_default()
}

fn check_keys(table: &toml::Table, path: &mut Vec<String>) -> Result<(), ScenarioError> {
    let here: Vec<&str> = path.iter().map(String::as_str).collect();
    let Some(valid) = schema(&here) else {
        return Ok(());
    };
    for (key, value) in table {
        let dotted = |k: &str| {
            let mut p = path.clone();
            p.push(k.to_string());
            p.join(".")
        };
        if !valid.contains(&key.as_str()) {
            return Err(ScenarioError::UnknownKey {
                key: dotted(key),
                nearest: dotted(&nearest(key, valid)),
            });
        }
        path.push(key.clone());
        match value {
            toml::Value::Table(t) => check_keys(t, path)?,
            toml::Value::Array(items) => {
                for item in items {
                    if let toml::Value::Table(t) = item {
                        check_keys(t, path)?;
                    }
                }
            }
            _ => {}
        }
        path.pop();
    }
    Ok(())
}

fn located(text: &str, err: &toml::de::Error) -> ScenarioError {
    let offset = err.span().map(|s| s.start).unwrap_or(0).min(text.len());
    let before = &text[..offset];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ScenarioError::Syntax {
        line,
        column,
        message: err.message().trim().to_string(),
    }
}

/// Parses a scenario document, applies defaults and checks it.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let table: toml::Table = toml::from_str(text).map_err(|e| located(text, &e))?;
    check_keys(&table, &mut Vec::new())?;
    let raw: Scenario = toml::from_str(text).map_err(|e| located(text, &e))?;
    raw.resolve()
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text)
}

/// Everything needed to run the solver for one configuration.
#[derive(Debug, Clone)]
pub struct Layout {
    pub params: MediumParams,
    pub timeline: Timeline,
    pub photons: Vec<Photon>,
}

impl Scenario {
    /// Writes the scenario back out as TOML.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario fields are all representable in TOML")
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive, got {v}")))
            }
        };
        positive("medium.kappa", self.medium.kappa)?;
        positive("medium.c", self.medium.c)?;
        positive("controls.amplitude", self.controls.amplitude)?;
        if !(self.medium.lead_out >= 0.0 && self.medium.lead_out.is_finite()) {
            return Err(invalid("medium.lead_out must be non-negative"));
        }
        if self.output.record_every == 0 {
            return Err(invalid("output.record_every must be at least 1"));
        }
        match self.packets.len() {
            1 | 2 => {}
            n => return Err(invalid(format!("need one or two packets, got {n}"))),
        }
        for (k, p) in self.packets.iter().enumerate() {
            positive(&format!("packets[{k}].width"), p.width)?;
            if !p.offset.is_finite() {
                return Err(invalid(format!("packets[{k}].offset must be finite")));
            }
        }
        if self.packets[0].offset != 0.0 {
            return Err(invalid(
                "packets[0].offset must be 0: the first packet is the reference",
            ));
        }
        if self.storage.len() != self.packets.len() {
            return Err(invalid(format!(
                "{} packet(s) need as many storage sets, got {}",
                self.packets.len(),
                self.storage.len()
            )));
        }
        let sets = self
            .storage
            .iter()
            .chain([&self.release.stage1])
            .chain(self.release.stage2.as_ref());
        for set in sets {
            // revalidates and rejects phi outside [0, π/2] instead of clamping
            let checked = ControlSet::new(set.phi, set.chi2, set.chi3)?;
            if checked.phi != set.phi {
                return Err(invalid(format!("phi = {} is outside [0, pi/2]", set.phi)));
            }
        }
        if let [a, b] = self.storage[..] {
            if !b.approx_eq(&a.complementary(), SET_TOL) {
                let c = a.complementary();
                return Err(invalid(format!(
                    "storage sets of a photon pair must be complementary: the second set must be \
                     phi = {}, chi2 = {}, chi3 = {} (phi -> pi/2 - phi, chi2 -> chi2 + pi)",
                    c.phi, c.chi2, c.chi3
                )));
            }
        }
        if let Some(s2) = &self.release.stage2 {
            if !self.release.allow_incomplete
                && !s2.approx_eq(&self.release.stage1.complementary(), SET_TOL)
            {
                return Err(invalid(
                    "release.stage2 must be the complement of release.stage1; \
                     set release.allow_incomplete = true to override",
                ));
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.points == 0 || !sw.start.is_finite() || !sw.stop.is_finite() {
                return Err(invalid("sweep needs finite bounds and at least one point"));
            }
            if sw.axis == ScanAxis::WidthRatio && sw.start.min(sw.stop) <= 0.0 {
                return Err(invalid("width-ratio sweep bounds must be positive"));
            }
            if sw.end_to_end {
                if self.packets.len() != 2 {
                    return Err(invalid("an end-to-end sweep needs two packets"));
                }
                if sw.axis == ScanAxis::Separation && sw.start.min(sw.stop) < 0.0 {
                    return Err(invalid(
                        "end-to-end separation sweeps need non-negative bounds",
                    ));
                }
            }
        }
        if self.packets.get(1).is_some_and(|p| p.offset < 0.0) {
            return Err(invalid("packets[1].offset must be non-negative"));
        }
        Ok(())
    }

    /// Largest packet width the grid and timeline must accommodate.
    fn envelope_width(&self) -> f64 {
        let mut w = self.packets.iter().map(|p| p.width).fold(0.0, f64::max);
        if let Some(sw) = self.sweep.as_ref().filter(|s| s.end_to_end) {
            if sw.axis == ScanAxis::WidthRatio {
                w = w.max(self.packets[0].width * sw.start.max(sw.stop));
            }
        }
        w
    }

    /// Largest vacuum offset of the second packet.
    fn envelope_offset(&self) -> f64 {
        let mut a = self.packets.get(1).map_or(0.0, |p| p.offset);
        if let Some(sw) = self.sweep.as_ref().filter(|s| s.end_to_end) {
            if sw.axis == ScanAxis::Separation {
                a = a.max(sw.start.max(sw.stop));
            }
        }
        a
    }

    fn cos2_theta(&self) -> f64 {
        let o2 = self.controls.amplitude.powi(2);
        o2 / (o2 + self.medium.kappa.powi(2))
    }

    fn plan(&self, offset: f64) -> AutoPlan {
        let width = self.envelope_width();
        let mut plan = AutoPlan::new(
            self.controls.amplitude,
            width,
            self.storage.clone(),
            self.release.stage1,
        );
        plan.shape = self.controls.shape;
        plan.ramp_time = self.controls.ramp_time.unwrap_or(plan.ramp_time);
        plan.margin = self.controls.margin.unwrap_or(plan.margin);
        plan.release2 = self.release.stage2;
        // a stored offset d leaves the medium as d / cos²θ in vacuum
        plan.separation = offset * self.cos2_theta();
        plan
    }

    fn resolve(mut self) -> Result<Self, ScenarioError> {
        self.check()?;
        let width = self.envelope_width();
        self.controls.ramp_time.get_or_insert(2.5 * width);
        self.controls.margin.get_or_insert(width);
        let stage2 = self.release.stage1.complementary();
        self.release.stage2.get_or_insert(stage2);

        let plan = self.plan(self.envelope_offset());
        let (kappa, c) = (self.medium.kappa, self.medium.c);
        let lead_in = *self.medium.lead_in.get_or_insert_with(|| plan.lead_in(c));
        let length = *self
            .medium
            .sample_length
            .get_or_insert_with(|| (plan.min_sample_length(kappa, c) + width).ceil());
        let total = lead_in + length + self.medium.lead_out;
        let dz = total / self.medium.cells as f64;
        self.medium.dt.get_or_insert(dz / c);

        // building the layout runs the physical checks (CFL, grid fit)
        self.layout()?;
        if let Some(sw) = self.sweep.as_ref().filter(|s| s.end_to_end) {
            let (lo, hi) = (sw.start.min(sw.stop), sw.start.max(sw.stop));
            for x in [lo, hi] {
                self.point_layout(sw.axis, x)?;
            }
        }
        Ok(self)
    }

    pub fn grid(&self) -> Result<Grid, ScenarioError> {
        let m = &self.medium;
        let lead_in = m
            .lead_in
            .ok_or_else(|| invalid("scenario is not resolved"))?;
        let length = m
            .sample_length
            .ok_or_else(|| invalid("scenario is not resolved"))?;
        if !(lead_in >= 0.0) || !(length > 0.0) {
            return Err(invalid(
                "medium.lead_in must be non-negative and sample_length positive",
            ));
        }
        let dz = (lead_in + length + m.lead_out) / m.cells as f64;
        Ok(Grid::new(m.cells, -lead_in, dz)?)
    }

    pub fn medium_params(&self) -> Result<MediumParams, ScenarioError> {
        let m = &self.medium;
        let grid = self.grid()?;
        let dt = m.dt.ok_or_else(|| invalid("scenario is not resolved"))?;
        let length = m.sample_length.unwrap_or_default();
        Ok(MediumParams::new(m.kappa, m.c, length, grid, dt)?.with_edge(m.edge)?)
    }

    /// Layout with the second packet at vacuum offset `offset` and the
    /// given packet widths.
    pub fn layout_with(&self, offset: f64, widths: &[f64]) -> Result<Layout, ScenarioError> {
        let params = self.medium_params()?;
        let (timeline, mut photons) = self.plan(offset).build(&params)?;
        for (p, w) in photons.iter_mut().zip(widths) {
            p.width = *w;
        }
        Ok(Layout {
            params,
            timeline,
            photons,
        })
    }

    pub fn layout(&self) -> Result<Layout, ScenarioError> {
        let widths: Vec<f64> = self.packets.iter().map(|p| p.width).collect();
        self.layout_with(self.packets.get(1).map_or(0.0, |p| p.offset), &widths)
    }

    /// Layout for one end-to-end sweep point.
    pub fn point_layout(&self, axis: ScanAxis, x: f64) -> Result<Layout, ScenarioError> {
        let d1 = self.packets[0].width;
        let d2 = self.packets.get(1).map_or(d1, |p| p.width);
        let a = self.packets.get(1).map_or(0.0, |p| p.offset);
        match axis {
            ScanAxis::Separation => self.layout_with(x, &[d1, d2]),
            ScanAxis::WidthRatio => self.layout_with(a, &[d1, x * d1]),
        }
    }
}
