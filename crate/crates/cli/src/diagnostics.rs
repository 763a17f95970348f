//! Numerical health checks of a parsed scenario.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;
use tripod_core::RampShape;

use crate::scenario::Scenario;

/// Largest acceptable `|dθ/dt| / sqrt(κ² + Ω²)` during a switch.
pub const ADIABATICITY_LIMIT: f64 = 0.1;
pub const MIN_CELLS_PER_WIDTH: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// `c·dt/dz`.
    pub cfl: f64,
    /// Largest `|dθ/dt| / sqrt(κ² + Ω²)` over the control ramps; `None`
    /// when switching is instantaneous.
    pub adiabaticity: Option<f64>,
    /// Grid cells per packet width, for the narrowest packet.
    pub cells_per_width: f64,
    pub warnings: Vec<String>,
}

/// Peak adiabaticity figure of a cos² switch between 0 and `omega` lasting
/// `ramp`. Switching on and off are mirror images, so one pass covers both.
fn cos2_ramp_adiabaticity(kappa: f64, omega: f64, ramp: f64) -> f64 {
    const SAMPLES: usize = 4096;
    (0..=SAMPLES)
        .map(|k| {
            let x = k as f64 / SAMPLES as f64;
            let c = (FRAC_PI_2 * x).cos();
            let om = omega * c * c;
            let om_dot = omega * PI * (PI * x).sin() / (2.0 * ramp);
            let g2 = kappa * kappa + om * om;
            // θ = atan(κ/Ω)  ⇒  |θ̇| = κ|Ω̇| / (κ² + Ω²)
            kappa * om_dot / (g2 * g2.sqrt())
        })
        .fold(0.0, f64::max)
}

/// Computes diagnostics for a resolved scenario.
pub fn validate(s: &Scenario) -> Diagnostics {
    let m = &s.medium;
    let lead_in = m.lead_in.unwrap_or_default();
    let length = m.sample_length.unwrap_or_default();
    let dz = (lead_in + length + m.lead_out) / m.cells as f64;
    let dt = m.dt.unwrap_or(dz / m.c);
    let cfl = m.c * dt / dz;
    let mut warnings = Vec::new();

    let adiabaticity = match s.controls.shape {
        RampShape::Square => {
            warnings.push(
                "square switching is instantaneous; controls are not switched adiabatically"
                    .to_string(),
            );
            None
        }
        RampShape::Cos2 => {
            let ramp = s.controls.ramp_time.unwrap_or_default();
            let a = if ramp > 0.0 {
                cos2_ramp_adiabaticity(m.kappa, s.controls.amplitude, ramp)
            } else {
                f64::INFINITY
            };
            if !(a <= ADIABATICITY_LIMIT) {
                warnings.push(format!(
                    "adiabaticity {a:.3e} exceeds {ADIABATICITY_LIMIT}; lengthen controls.ramp_time"
                ));
            }
            a.is_finite().then_some(a)
        }
    };

    let narrowest = s
        .packets
        .iter()
        .map(|p| p.width)
        .fold(f64::INFINITY, f64::min);
    let cells_per_width = narrowest / dz;
    if cells_per_width < MIN_CELLS_PER_WIDTH {
        warnings.push(format!(
            "packet width spans {cells_per_width:.1} cells, fewer than {MIN_CELLS_PER_WIDTH}; increase medium.cells"
        ));
    }
    if cfl < 1.0 - 1e-12 {
        warnings.push(format!(
            "cfl {cfl} is below 1; the signal is advected by the diffusive upwind scheme"
        ));
    }
    warnings.sort();
    Diagnostics {
        cfl,
        adiabaticity,
        cells_per_width,
        warnings,
    }
}
