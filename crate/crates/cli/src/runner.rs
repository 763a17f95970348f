//! Orchestration of scenario runs, dip sweeps and beam-splitter reports.

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use tripod_core::protocol::{simulate_pair, simulate_photon, STAGE1, STAGE2};
use tripod_core::{
    bs_matrix, coalescence_probs, hom_scan, linspace, overlap, ControlSet, RunResult, ScanAxis,
    ScanParams, ScanRow, TwoPhotonStats, WavePacket,
};

use crate::diagnostics::{validate, Diagnostics};
use crate::output::{num, scan_csv, to_json, trace_csv, Format, SCHEMA_VERSION};
use crate::scenario::{Scenario, ScenarioError};

#[derive(Debug, Clone, Serialize)]
pub struct GridSummary {
    pub cells: usize,
    pub z_min: f64,
    pub dz: f64,
    pub dt: f64,
    pub sample_length: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageReport {
    pub label: String,
    pub start: f64,
    pub end: f64,
    pub fraction: f64,
    /// Time step index of the first mode sample; sample `k` is taken at
    /// `(first_step + k + 1/2)·dt`.
    pub first_step: i64,
    /// Unit-norm released temporal mode as `[re, im]` pairs.
    pub mode: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhotonReport {
    pub width: f64,
    pub arrival: f64,
    pub initial_norm: f64,
    pub final_norm: f64,
    /// Sum of the stage-1 and stage-2 fractions.
    pub released: f64,
    pub max_balance_drift: f64,
    pub stages: Vec<StageReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StatsReport {
    pub abs_s: f64,
    pub p_coal1: f64,
    pub p_coal2: f64,
    pub p_noncoal: f64,
}

impl From<TwoPhotonStats> for StatsReport {
    fn from(st: TwoPhotonStats) -> Self {
        Self {
            abs_s: st.s.norm(),
            p_coal1: st.p_coal1,
            p_coal2: st.p_coal2,
            p_noncoal: st.p_noncoal,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairReport {
    /// From the released time bins of the two runs.
    pub simulated: StatsReport,
    /// From the vacuum packet overlap and the control sets.
    pub closed_form: StatsReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub grid: GridSummary,
    pub diagnostics: Diagnostics,
    pub photons: Vec<PhotonReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_photon: Option<PairReport>,
    #[serde(skip)]
    pub runs: Vec<RunResult>,
}

impl SimulationReport {
    /// Stage-1 fraction of the first photon.
    pub fn stage1_fraction(&self) -> f64 {
        self.photons[0]
            .stages
            .iter()
            .find(|s| s.label == STAGE1)
            .map_or(0.0, |s| s.fraction)
    }

    pub fn files(&self, format: Format) -> Vec<(String, String)> {
        let mut files = Vec::new();
        if format.csv() {
            for (k, r) in self.runs.iter().enumerate() {
                files.push((format!("trace_{}.csv", k + 1), trace_csv(&r.trace)));
            }
        }
        if format.json() {
            files.push(("summary.json".to_string(), to_json(self)));
        }
        files
    }
}

fn photon_report(width: f64, arrival: f64, r: &RunResult) -> PhotonReport {
    let stages = r
        .stage_windows
        .iter()
        .zip(&r.stages)
        .map(|(w, st)| StageReport {
            label: st.label.clone(),
            start: w.start,
            end: w.end,
            fraction: st.fraction,
            first_step: st.first_step,
            mode: st.mode(r.dt).iter().map(|a| [a.re, a.im]).collect(),
        })
        .collect();
    let frac = |l: &str| r.released_fraction(l).unwrap_or(0.0);
    PhotonReport {
        width,
        arrival,
        initial_norm: r.initial_norm,
        final_norm: r.final_norm,
        released: frac(STAGE1) + frac(STAGE2),
        max_balance_drift: r.max_balance_drift,
        stages,
    }
}

/// Closed-form statistics for Gaussian packets `offset` apart.
fn closed_form(
    s: &Scenario,
    offset: f64,
    d1: f64,
    d2: f64,
) -> Result<TwoPhotonStats, ScenarioError> {
    let f1 = WavePacket::gaussian(0.0, d1)?;
    let f2 = WavePacket::gaussian(offset, d2)?;
    Ok(coalescence_probs(
        &s.storage[0],
        &s.release.stage1,
        overlap(&f1, &f2)?,
    )?)
}

/// Runs the scenario's photons through storage and two-stage release.
pub fn simulate(s: &Scenario) -> Result<SimulationReport, ScenarioError> {
    let layout = s.layout()?;
    let p = &layout.params;
    let every = s.output.record_every;
    let (runs, two_photon) = match layout.photons.as_slice() {
        [one] => (
            vec![simulate_photon(p, &layout.timeline, one, every)?],
            None,
        ),
        [a, b] => {
            let pair = simulate_pair(p, &layout.timeline, [a, b], every)?;
            let cf = closed_form(s, s.packets[1].offset, a.width, b.width)?;
            let report = PairReport {
                simulated: pair.stats.into(),
                closed_form: cf.into(),
            };
            (pair.photons.to_vec(), Some(report))
        }
        _ => unreachable!("scenarios hold one or two packets"),
    };
    let photons = layout
        .photons
        .iter()
        .zip(&runs)
        .map(|(ph, r)| photon_report(ph.width, ph.arrival, r))
        .collect();
    Ok(SimulationReport {
        schema_version: SCHEMA_VERSION,
        command: "simulate",
        grid: GridSummary {
            cells: p.grid.cells,
            z_min: p.grid.z_min,
            dz: p.grid.dz,
            dt: p.dt,
            sample_length: p.sample_length,
        },
        diagnostics: validate(s),
        photons,
        two_photon,
        runs,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub axis: ScanAxis,
    pub closed_form: Vec<ScanRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub simulated: Option<Vec<ScanRow>>,
}

impl SweepReport {
    pub fn files(&self, format: Format) -> Vec<(String, String)> {
        let mut files = Vec::new();
        if format.csv() {
            files.push(("hom_scan.csv".to_string(), scan_csv(&self.closed_form)));
            if let Some(rows) = &self.simulated {
                files.push(("hom_scan_simulated.csv".to_string(), scan_csv(rows)));
            }
        }
        if format.json() {
            files.push(("hom_scan.json".to_string(), to_json(self)));
        }
        files
    }
}

/// Builds a worker pool; `None` uses rayon's default size.
pub fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool, ScenarioError> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        if n == 0 {
            return Err(ScenarioError::Invalid(
                "--workers must be at least 1".into(),
            ));
        }
        b = b.num_threads(n);
    }
    b.build()
        .map_err(|e| ScenarioError::Invalid(format!("cannot start worker pool: {e}")))
}

/// Closed-form dip scan; points are evaluated in parallel and returned in
/// axis order.
pub fn closed_form_scan(
    axis: ScanAxis,
    xs: &[f64],
    params: &ScanParams,
    pool: &rayon::ThreadPool,
) -> Result<Vec<ScanRow>, ScenarioError> {
    let rows = pool.install(|| {
        xs.par_chunks(64)
            .map(|chunk| hom_scan(axis, chunk, params))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(rows.into_iter().flatten().collect())
}

/// Dip scan parameters taken from a scenario.
pub fn scan_params(s: &Scenario) -> ScanParams {
    let d1 = s.packets[0].width;
    ScanParams {
        delta1: d1,
        delta2: s.packets.get(1).map_or(d1, |p| p.width),
        separation: s.packets.get(1).map_or(0.0, |p| p.offset),
        set0: s.storage[0],
        set1: s.release.stage1,
    }
}

/// Runs the scenario's sweep: always the closed form, and the full solver
/// at every point when `end_to_end` is set.
pub fn sweep(s: &Scenario, pool: &rayon::ThreadPool) -> Result<SweepReport, ScenarioError> {
    let sw = s
        .sweep
        .as_ref()
        .ok_or_else(|| ScenarioError::Invalid("the scenario has no [sweep] table".into()))?;
    let xs = linspace(sw.start, sw.stop, sw.points)?;
    let closed = closed_form_scan(sw.axis, &xs, &scan_params(s), pool)?;
    let simulated = if sw.end_to_end {
        let every = s.output.record_every;
        let rows = pool.install(|| {
            xs.par_iter()
                .map(|&x| {
                    let layout = s.point_layout(sw.axis, x)?;
                    let [a, b] = &layout.photons[..] else {
                        unreachable!("end-to-end sweeps are checked to have two packets")
                    };
                    let pair = simulate_pair(&layout.params, &layout.timeline, [a, b], every)?;
                    Ok(ScanRow {
                        x,
                        p_noncoal: pair.stats.p_noncoal,
                        p_coal1: pair.stats.p_coal1,
                        p_coal2: pair.stats.p_coal2,
                        abs_s: pair.stats.s.norm(),
                    })
                })
                .collect::<Result<Vec<_>, ScenarioError>>()
        })?;
        Some(rows)
    } else {
        None
    };
    Ok(SweepReport {
        schema_version: SCHEMA_VERSION,
        command: "hom-scan",
        axis: sw.axis,
        closed_form: closed,
        simulated,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BsMatrixReport {
    pub schema_version: u32,
    pub command: &'static str,
    pub set0: ControlSet,
    pub set1: ControlSet,
    /// Rows `(R31, R32)` and `(R41, R42)` as `[re, im]` pairs.
    pub r: [[[f64; 2]; 2]; 2],
    pub unitarity_defect: f64,
}

impl BsMatrixReport {
    pub fn new(set0: ControlSet, set1: ControlSet) -> Self {
        let m = bs_matrix(&set0, &set1);
        let r = m.r.map(|row| row.map(|z| [z.re, z.im]));
        Self {
            schema_version: SCHEMA_VERSION,
            command: "bs-matrix",
            set0,
            set1,
            r,
            unitarity_defect: m.unitarity_defect(),
        }
    }

    /// Two sets drawn uniformly from `phi ∈ [0, π/2]`, phases in `[0, 2π)`.
    pub fn random(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || ControlSet {
            phi: rng.random_range(0.0..=FRAC_PI_2),
            chi2: rng.random_range(0.0..TAU),
            chi3: rng.random_range(0.0..TAU),
        };
        let set0 = draw();
        let set1 = draw();
        Self::new(set0, set1)
    }

    pub fn text(&self) -> String {
        let z = |k: usize, j: usize| {
            let [re, im] = self.r[k][j];
            format!("{re:+.12} {im:+.12}i")
        };
        let set = |s: &ControlSet| format!("phi = {}, chi2 = {}, chi3 = {}", s.phi, s.chi2, s.chi3);
        format!(
            "set0: {}\nset1: {}\nR31 = {}   R32 = {}\nR41 = {}   R42 = {}\nunitarity defect: {:.3e}\n",
            set(&self.set0),
            set(&self.set1),
            z(0, 0),
            z(0, 1),
            z(1, 0),
            z(1, 1),
            self.unitarity_defect
        )
    }

    pub fn files(&self, format: Format) -> Vec<(String, String)> {
        let mut files = Vec::new();
        if format.csv() {
            let mut csv = String::from("row,col,re,im\n");
            for (k, row) in self.r.iter().enumerate() {
                for (j, [re, im]) in row.iter().enumerate() {
                    csv.push_str(&format!("{},{},{},{}\n", k + 3, j + 1, num(*re), num(*im)));
                }
            }
            files.push(("bs_matrix.csv".to_string(), csv));
        }
        if format.json() {
            files.push(("bs_matrix.json".to_string(), to_json(self)));
        }
        files
    }
}
