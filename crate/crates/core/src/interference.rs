//! Time-bin beam splitter and two-photon (Hong-Ou-Mandel type) statistics
//! for a pair of stored photons.
//!
//! Input ports are the two storage stages (polaritons `Ψ⁰`, `Z⁰`), output
//! ports the two release stages (`Ψ¹`, `Z¹`). The output operators follow
//! from the inputs through a 2×2 unitary `R`; the spatial overlap `s` of
//! the two stored wave packets sets how distinguishable the photons are.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::control::ControlSet;
use crate::error::{invalid, Error, Result};
use crate::medium::Grid;

const NORM_TOL: f64 = 1e-9;

/// A unit-norm spatial wave packet.
#[derive(Debug, Clone, PartialEq)]
pub enum WavePacket {
    /// `f(z) = (2πδ²)^{-1/4} exp(−(z − center)²/(4δ²))`, so `|f|²` has
    /// standard deviation `width`.
    Gaussian { center: f64, width: f64 },
    /// Samples `values[i] = f(z0 + i·dz)`.
    Sampled { z0: f64, dz: f64, values: Vec<C64> },
}

impl WavePacket {
    pub fn gaussian(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(invalid("width", format!("must be positive, got {width}")));
        }
        if !center.is_finite() {
            return Err(invalid("center", "must be finite"));
        }
        Ok(Self::Gaussian { center, width })
    }

    /// Wraps samples that are already normalized.
    pub fn sampled(z0: f64, dz: f64, values: Vec<C64>) -> Result<Self> {
        if !(dz > 0.0) || values.len() < 2 {
            return Err(invalid(
                "sampled packet",
                "need dz > 0 and at least two samples",
            ));
        }
        let n2 = simpson_weights(values.len())
            .zip(&values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum::<f64>()
            * dz;
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(n2));
        }
        Ok(Self::Sampled { z0, dz, values })
    }

    /// Rescales the samples to unit norm.
    pub fn sampled_normalized(z0: f64, dz: f64, mut values: Vec<C64>) -> Result<Self> {
        if !(dz > 0.0) || values.len() < 2 {
            return Err(invalid(
                "sampled packet",
                "need dz > 0 and at least two samples",
            ));
        }
        let n2 = simpson_weights(values.len())
            .zip(&values)
            .map(|(w, v)| w * v.norm_sqr())
            .sum::<f64>()
            * dz;
        if !(n2 > 0.0) {
            return Err(Error::Unnormalized(n2));
        }
        let k = 1.0 / n2.sqrt();
        values.iter_mut().for_each(|v| *v *= k);
        Ok(Self::Sampled { z0, dz, values })
    }

    /// Value at `z`; sampled packets are evaluated at the nearest sample.
    pub fn amplitude(&self, z: f64) -> C64 {
        match self {
            WavePacket::Gaussian { center, width } => {
                let x = z - center;
                let a = (2.0 * PI * width * width).powf(-0.25);
                C64::new(a * (-x * x / (4.0 * width * width)).exp(), 0.0)
            }
            WavePacket::Sampled { z0, dz, values } => {
                let i = ((z - z0) / dz).round();
                if i >= 0.0 && (i as usize) < values.len() {
                    values[i as usize]
                } else {
                    C64::default()
                }
            }
        }
    }

    /// Samples at the cell centres of `grid`, rescaled so that the discrete
    /// norm `Σ|f|²dz` is exactly one.
    pub fn on_grid(&self, grid: &Grid) -> Result<Vec<C64>> {
        let mut v: Vec<C64> = grid.centers().map(|z| self.amplitude(z)).collect();
        let n2: f64 = v.iter().map(|x| x.norm_sqr()).sum::<f64>() * grid.dz;
        if !(n2 > 0.0) {
            return Err(invalid("packet", "does not overlap the grid"));
        }
        let k = 1.0 / n2.sqrt();
        v.iter_mut().for_each(|x| *x *= k);
        Ok(v)
    }
}

/// Composite Simpson weights (in units of `dz`) for `n` equally spaced
/// samples; an even count closes with a 3/8 panel.
fn simpson_weights(n: usize) -> impl Iterator<Item = f64> {
    let mut w = vec![0.0; n];
    match n {
        0 => {}
        1 => w[0] = 1.0,
        2 => {
            w[0] = 0.5;
            w[1] = 0.5;
        }
        3 => {
            w[0] = 1.0 / 3.0;
            w[1] = 4.0 / 3.0;
            w[2] = 1.0 / 3.0;
        }
        _ => {
            let simpson_end = if n % 2 == 1 { n - 1 } else { n - 4 };
            for (k, wk) in w.iter_mut().enumerate().take(simpson_end + 1) {
                *wk = if k == 0 || k == simpson_end {
                    1.0 / 3.0
                } else if k % 2 == 1 {
                    4.0 / 3.0
                } else {
                    2.0 / 3.0
                };
            }
            if n % 2 == 0 {
                let s = simpson_end;
                w[s] += 3.0 / 8.0;
                w[s + 1] += 9.0 / 8.0;
                w[s + 2] += 9.0 / 8.0;
                w[s + 3] += 3.0 / 8.0;
            }
        }
    }
    w.into_iter()
}

fn gaussian_overlap(c1: f64, d1: f64, c2: f64, d2: f64) -> f64 {
    let sum = d1 * d1 + d2 * d2;
    let a = c2 - c1;
    (2.0 * d1 * d2 / sum).sqrt() * (-a * a / (4.0 * sum)).exp()
}

fn norm_sq(f: &WavePacket) -> f64 {
    match f {
        WavePacket::Gaussian { .. } => 1.0,
        WavePacket::Sampled { dz, values, .. } => {
            simpson_weights(values.len())
                .zip(values)
                .map(|(w, v)| w * v.norm_sqr())
                .sum::<f64>()
                * dz
        }
    }
}

/// Overlap `s = ∫ f₁*(z) f₂(z) dz`.
///
/// Gaussian pairs use the closed form
/// `sqrt(2δ₁δ₂/(δ₁²+δ₂²))·exp(−a²/(4(δ₁²+δ₂²)))`; anything involving a
/// sampled packet is integrated by composite Simpson on the sample grid.
/// Two sampled packets must share `dz` and be offset by a whole number of
/// samples.
pub fn overlap(f1: &WavePacket, f2: &WavePacket) -> Result<C64> {
    for f in [f1, f2] {
        let n2 = norm_sq(f);
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::Unnormalized(n2));
        }
    }
    let s = match (f1, f2) {
        (
            WavePacket::Gaussian {
                center: c1,
                width: d1,
            },
            WavePacket::Gaussian {
                center: c2,
                width: d2,
            },
        ) => C64::new(gaussian_overlap(*c1, *d1, *c2, *d2), 0.0),
        (WavePacket::Sampled { z0, dz, values }, g @ WavePacket::Gaussian { .. }) => {
            sampled_with(*z0, *dz, values, |z| g.amplitude(z), false)
        }
        (g @ WavePacket::Gaussian { .. }, WavePacket::Sampled { z0, dz, values }) => {
            sampled_with(*z0, *dz, values, |z| g.amplitude(z), true)
        }
        (
            WavePacket::Sampled {
                z0: a0,
                dz: da,
                values: va,
            },
            WavePacket::Sampled {
                z0: b0,
                dz: db,
                values: vb,
            },
        ) => {
            if (da - db).abs() > 1e-12 * da {
                return Err(invalid("overlap", "sampled packets use different spacings"));
            }
            let off = (b0 - a0) / da;
            if (off - off.round()).abs() > 1e-9 {
                return Err(invalid("overlap", "sampled grids are not aligned"));
            }
            let off = off.round() as i64;
            // common support on a's index scale
            let lo = 0.max(off);
            let hi = (va.len() as i64).min(off + vb.len() as i64);
            if hi - lo < 2 {
                C64::default()
            } else {
                let n = (hi - lo) as usize;
                simpson_weights(n)
                    .enumerate()
                    .map(|(k, w)| {
                        let i = lo + k as i64;
                        va[i as usize].conj() * vb[(i - off) as usize] * w
                    })
                    .sum::<C64>()
                    * da
            }
        }
    };
    if s.norm() > 1.0 + 1e-9 {
        return Err(Error::OverlapTooLarge(s.norm()));
    }
    Ok(s)
}

fn sampled_with<F: Fn(f64) -> C64>(z0: f64, dz: f64, values: &[C64], g: F, conj_g: bool) -> C64 {
    simpson_weights(values.len())
        .zip(values)
        .enumerate()
        .map(|(i, (w, v))| {
            let gz = g(z0 + i as f64 * dz);
            if conj_g {
                gz.conj() * v * w
            } else {
                v.conj() * gz * w
            }
        })
        .sum::<C64>()
        * dz
}

/// 2×2 map from input-port to output-port field operators,
/// `(ε³, ε⁴)ᵀ = R (ε¹, ε²)ᵀ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSplitterMatrix {
    /// `[[R₃₁, R₃₂], [R₄₁, R₄₂]]`
    pub r: [[C64; 2]; 2],
}

impl BeamSplitterMatrix {
    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::default();
        Self {
            r: [[one, zero], [zero, one]],
        }
    }

    /// `‖R†R − I‖_max`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                let dot: C64 = (0..2).map(|k| self.r[k][a].conj() * self.r[k][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).norm());
            }
        }
        worst
    }
}

/// Beam-splitter matrix for storage with `set0` and release with `set1`
/// (and the complement of `set1` at the second stage):
///
/// ```text
/// R₃₁ = cosφ¹cosφ⁰ e^{i(χ₂¹−χ₂⁰)} + sinφ¹sinφ⁰ e^{i(χ₃¹−χ₃⁰)}
/// R₃₂ = cosφ¹sinφ⁰ e^{i(χ₂¹−χ₂⁰)} − sinφ¹cosφ⁰ e^{i(χ₃¹−χ₃⁰)}
/// R₄₁ = sinφ¹cosφ⁰ e^{i(χ₂¹−χ₂⁰)} − cosφ¹sinφ⁰ e^{i(χ₃¹−χ₃⁰)}
/// R₄₂ = sinφ¹sinφ⁰ e^{i(χ₂¹−χ₂⁰)} + cosφ¹cosφ⁰ e^{i(χ₃¹−χ₃⁰)}
/// ```
pub fn bs_matrix(set0: &ControlSet, set1: &ControlSet) -> BeamSplitterMatrix {
    let (p0, p1) = (set0.phi, set1.phi);
    let d2 = C64::new(0.0, set1.chi2 - set0.chi2).exp();
    let d3 = C64::new(0.0, set1.chi3 - set0.chi3).exp();
    let (c0, s0, c1, s1) = (p0.cos(), p0.sin(), p1.cos(), p1.sin());
    BeamSplitterMatrix {
        r: [
            [
                d2 * (c1 * c0) + d3 * (s1 * s0),
                d2 * (c1 * s0) - d3 * (s1 * c0),
            ],
            [
                d2 * (s1 * c0) - d3 * (c1 * s0),
                d2 * (s1 * s0) + d3 * (c1 * c0),
            ],
        ],
    }
}

/// Two-photon output statistics for one photon stored in each input port.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonStats {
    /// Overlap of the two stored wave packets.
    pub s: C64,
    /// Amplitude of both photons leaving at the first release stage.
    pub amp_coal1: C64,
    pub p_coal1: f64,
    pub p_coal2: f64,
    pub p_noncoal: f64,
}

fn check_overlap(s: C64) -> Result<()> {
    if !s.is_finite() {
        return Err(Error::NumericFault("overlap"));
    }
    if s.norm() > 1.0 + 1e-12 {
        return Err(Error::OverlapTooLarge(s.norm()));
    }
    Ok(())
}

/// Closed-form statistics for a given matrix.
pub fn stats_from_matrix(r: &BeamSplitterMatrix, s: C64) -> Result<TwoPhotonStats> {
    check_overlap(s)?;
    let bunch = 1.0 + s.norm_sqr();
    let amp = bunch.sqrt() * r.r[0][0] * r.r[0][1];
    let p_coal1 = bunch * (r.r[0][0] * r.r[0][1]).norm_sqr();
    let p_coal2 = bunch * (r.r[1][0] * r.r[1][1]).norm_sqr();
    Ok(TwoPhotonStats {
        s,
        amp_coal1: amp,
        p_coal1,
        p_coal2,
        p_noncoal: 1.0 - p_coal1 - p_coal2,
    })
}

/// Amplitude `⟨ζ₁|ζ⟩ = sqrt(1+|s|²)·R₃₁·R₃₂` for both photons to be released
/// at the first stage; its squared magnitude is `P_coal(1)`.
pub fn coalescence_amplitude(set0: &ControlSet, set1: &ControlSet, s: C64) -> Result<C64> {
    stats_from_matrix(&bs_matrix(set0, set1), s).map(|st| st.amp_coal1)
}

/// `P_coal(k) = (1+|s|²)|R_{k1}R_{k2}|²` for both release stages and
/// `P_noncoal = 1 − P_coal(1) − P_coal(2)`.
pub fn coalescence_probs(set0: &ControlSet, set1: &ControlSet, s: C64) -> Result<TwoPhotonStats> {
    stats_from_matrix(&bs_matrix(set0, set1), s)
}

/// Noncoalescence probability for Gaussian packets of widths `delta1`,
/// `delta2` separated by `a`, with one photon stored in each coherence and
/// equal-amplitude release (`φ⁰ = 0`, `φ¹ = π/4`):
///
/// `½[1 − 2/(δ₂/δ₁ + δ₁/δ₂)·exp(−a²/(2(δ₁² + δ₂²)))]`
pub fn noncoal_gaussian(a: f64, delta1: f64, delta2: f64) -> Result<f64> {
    if !(delta1 > 0.0 && delta2 > 0.0) || !delta1.is_finite() || !delta2.is_finite() {
        return Err(invalid("delta", "packet widths must be positive"));
    }
    if !a.is_finite() {
        return Err(invalid("a", "separation must be finite"));
    }
    let ratio = 2.0 / (delta2 / delta1 + delta1 / delta2);
    let damp = (-a * a / (2.0 * (delta1 * delta1 + delta2 * delta2))).exp();
    Ok(0.5 * (1.0 - ratio * damp))
}

/// Abscissa of a dip scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScanAxis {
    /// Packet separation `a` at fixed widths.
    Separation,
    /// Width ratio `δ₂/δ₁` at fixed separation.
    WidthRatio,
}

/// Fixed quantities of a dip scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanParams {
    pub delta1: f64,
    /// Second width; ignored on the width-ratio axis.
    pub delta2: f64,
    /// Separation; ignored on the separation axis.
    pub separation: f64,
    pub set0: ControlSet,
    pub set1: ControlSet,
}

impl Default for ScanParams {
    fn default() -> Self {
        Self {
            delta1: 1.0,
            delta2: 1.0,
            separation: 0.0,
            set0: ControlSet::single_field(),
            set1: ControlSet {
                phi: FRAC_PI_4,
                chi2: 0.0,
                chi3: 0.0,
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub x: f64,
    pub p_noncoal: f64,
    pub p_coal1: f64,
    pub p_coal2: f64,
    pub abs_s: f64,
}

/// `points` evenly spaced abscissae from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Result<Vec<f64>> {
    if points == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(Error::EmptyRange);
    }
    if points == 1 {
        return Ok(vec![start]);
    }
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                stop
            } else {
                start + (stop - start) * k as f64 / (points - 1) as f64
            }
        })
        .collect())
}

/// One point of a dip scan.
pub fn hom_point(axis: ScanAxis, x: f64, p: &ScanParams) -> Result<ScanRow> {
    let (a, d1, d2) = match axis {
        ScanAxis::Separation => (x, p.delta1, p.delta2),
        ScanAxis::WidthRatio => (p.separation, p.delta1, x * p.delta1),
    };
    let f1 = WavePacket::gaussian(0.0, d1)?;
    let f2 = WavePacket::gaussian(a, d2)?;
    let s = overlap(&f1, &f2)?;
    let st = coalescence_probs(&p.set0, &p.set1, s)?;
    Ok(ScanRow {
        x,
        p_noncoal: st.p_noncoal,
        p_coal1: st.p_coal1,
        p_coal2: st.p_coal2,
        abs_s: s.norm(),
    })
}

/// Noncoalescence (Mandel dip) curve along `axis` for Gaussian packets.
pub fn hom_scan(axis: ScanAxis, xs: &[f64], params: &ScanParams) -> Result<Vec<ScanRow>> {
    if xs.is_empty() {
        return Err(Error::EmptyRange);
    }
    xs.iter().map(|&x| hom_point(axis, x, params)).collect()
}

/// CSV with columns `x,p_noncoal,p_coal1,p_coal2,abs_s`.
pub fn scan_csv(rows: &[ScanRow]) -> String {
    let mut out = String::from("x,p_noncoal,p_coal1,p_coal2,abs_s\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.x, r.p_noncoal, r.p_coal1, r.p_coal2, r.abs_s
        );
    }
    out
}

/// Brute-force two-photon statistics in an explicit bosonic Fock space.
///
/// The packets are orthonormalized into spatial modes `e₁ = f₁`,
/// `e₂ ∝ f₂ − s f₁`. Each input photon (port 1 in `f₁`, port 2 in `f₂`) is
/// mapped through `R` onto the four single-particle states
/// (output port × spatial mode); the two-particle amplitudes are
/// symmetrized, projected on occupation-number states and summed by output
/// port pattern.
pub fn fock_oracle(
    r: &BeamSplitterMatrix,
    f1: &WavePacket,
    f2: &WavePacket,
) -> Result<TwoPhotonStats> {
    let s = overlap(f1, f2)?;
    check_overlap(s)?;
    let rest = (1.0 - s.norm_sqr()).max(0.0);
    // single mode when the packets coincide
    let modes = if rest < 1e-24 { 1 } else { 2 };
    let g1 = [C64::new(1.0, 0.0), C64::default()];
    let g2 = [s, C64::new(rest.sqrt(), 0.0)];

    let dim = 2 * modes;
    let idx = |port: usize, mode: usize| port * modes + mode;
    let mut va = vec![C64::default(); dim];
    let mut vb = vec![C64::default(); dim];
    for port in 0..2 {
        for m in 0..modes {
            va[idx(port, m)] = r.r[port][0] * g1[m];
            vb[idx(port, m)] = r.r[port][1] * g2[m];
        }
    }
    // |ζ₁⟩ ∝ b†[f₁] b†[f₂] |0⟩ with both creators on output port 3
    let mut wa = vec![C64::default(); dim];
    let mut wb = vec![C64::default(); dim];
    for m in 0..modes {
        wa[idx(0, m)] = g1[m];
        wb[idx(0, m)] = g2[m];
    }

    let occupation = |x: &[C64], y: &[C64], i: usize, j: usize| -> C64 {
        if i == j {
            x[i] * y[i] * std::f64::consts::SQRT_2
        } else {
            x[i] * y[j] + x[j] * y[i]
        }
    };

    let (mut p1, mut p2, mut pn) = (0.0, 0.0, 0.0);
    let mut amp = C64::default();
    let mut zeta1_norm = 0.0;
    for i in 0..dim {
        for j in i..dim {
            let c = occupation(&va, &vb, i, j);
            let w = occupation(&wa, &wb, i, j);
            amp += w.conj() * c;
            zeta1_norm += w.norm_sqr();
            let prob = c.norm_sqr();
            match (i / modes, j / modes) {
                (0, 0) => p1 += prob,
                (1, 1) => p2 += prob,
                _ => pn += prob,
            }
        }
    }
    Ok(TwoPhotonStats {
        s,
        amp_coal1: amp / zeta1_norm.sqrt(),
        p_coal1: p1,
        p_coal2: p2,
        p_noncoal: pn,
    })
}

/// Released signal of one photon in one time bin, sampled on the global
/// step grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeBin {
    pub first_step: i64,
    /// Amplitudes whose `Σ|a|²·dt` is the probability of release in this bin.
    pub amplitudes: Vec<C64>,
}

impl TimeBin {
    fn inner(&self, other: &TimeBin, dt: f64) -> C64 {
        let lo = self.first_step.max(other.first_step);
        let hi = (self.first_step + self.amplitudes.len() as i64)
            .min(other.first_step + other.amplitudes.len() as i64);
        (lo..hi)
            .map(|n| {
                self.amplitudes[(n - self.first_step) as usize].conj()
                    * other.amplitudes[(n - other.first_step) as usize]
            })
            .sum::<C64>()
            * dt
    }

    fn weight(&self, dt: f64) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * dt
    }
}

/// Two-photon statistics from the simulated single-photon outputs.
///
/// For bosons in single-particle states `ψ_A`, `ψ_B`, the probability that
/// both land in bin `k` is
/// `(‖P_kψ_A‖²‖P_kψ_B‖² + |⟨P_kψ_A|P_kψ_B⟩|²) / (1 + |⟨ψ_A|ψ_B⟩|²)`.
/// The reported `s` is the overlap of the normalized first-bin modes and
/// `amp_coal1` is real and non-negative.
pub fn stats_from_time_bins(a: [&TimeBin; 2], b: [&TimeBin; 2], dt: f64) -> Result<TwoPhotonStats> {
    let cross: C64 = (0..2).map(|k| a[k].inner(b[k], dt)).sum();
    let norm_a: f64 = (0..2).map(|k| a[k].weight(dt)).sum();
    let norm_b: f64 = (0..2).map(|k| b[k].weight(dt)).sum();
    if !(norm_a > 0.0 && norm_b > 0.0) {
        return Err(invalid("time bins", "a photon released nothing"));
    }
    let denom = norm_a * norm_b + cross.norm_sqr();
    let both =
        |k: usize| (a[k].weight(dt) * b[k].weight(dt) + a[k].inner(b[k], dt).norm_sqr()) / denom;
    let p_coal1 = both(0);
    let p_coal2 = both(1);
    let wa = a[0].weight(dt);
    let wb = b[0].weight(dt);
    let s = if wa > 0.0 && wb > 0.0 {
        a[0].inner(b[0], dt) / (wa * wb).sqrt()
    } else {
        C64::default()
    };
    // only the magnitude is observable from single-photon outputs
    let amp = C64::new(p_coal1.sqrt(), 0.0);
    Ok(TwoPhotonStats {
        s,
        amp_coal1: amp,
        p_coal1,
        p_coal2,
        p_noncoal: 1.0 - p_coal1 - p_coal2,
    })
}
