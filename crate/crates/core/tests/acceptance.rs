//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6, PI};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tripod_core::control::{ControlSchedule, RabiPair};
use tripod_core::interference::{linspace, scan_csv, stats_from_matrix, ScanRow};
use tripod_core::medium::{run, RunSpec};
use tripod_core::polariton::Interpolation;
use tripod_core::protocol::{simulate_photon, AutoPlan, STAGE1, STAGE2, STORAGE};
use tripod_core::{
    basis_change, bs_matrix, coalescence_probs, excitation_norm, fock_oracle, from_polaritons,
    hom_scan, noncoal_gaussian, to_polaritons, transport, ControlSet, FieldState, Grid,
    MediumParams, PolaritonBasis, PolaritonField, RunResult, ScanAxis, ScanParams, Solver,
    WavePacket, C64,
};

type Outcome = Result<String, String>;

/// Balance drifts of every PDE run, checked by criterion 8.
static DRIFTS: Mutex<Vec<(String, f64)>> = Mutex::new(Vec::new());

fn record_drift(label: &str, drift: f64) {
    DRIFTS.lock().unwrap().push((label.to_string(), drift));
}

fn check(ok: bool, msg: String) -> Outcome {
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn within_time(limit: Duration, start: Instant, res: Outcome) -> Outcome {
    let el = start.elapsed();
    match res {
        Ok(m) if el <= limit => Ok(format!("{m} [{:.0} ms]", el.as_secs_f64() * 1e3)),
        Ok(m) => Err(format!("{m} but took {el:?} (limit {limit:?})")),
        Err(m) => Err(m),
    }
}

fn random_set(rng: &mut ChaCha8Rng) -> ControlSet {
    ControlSet::new(
        rng.random_range(0.0..=FRAC_PI_2),
        rng.random_range(-PI..PI),
        rng.random_range(-PI..PI),
    )
    .unwrap()
}

fn set(phi: f64, chi2: f64, chi3: f64) -> ControlSet {
    ControlSet::new(phi, chi2, chi3).unwrap()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let worst = (0..1000)
        .map(|_| {
            let a = random_set(&mut rng);
            let b = random_set(&mut rng);
            bs_matrix(&a, &b).unitarity_defect()
        })
        .fold(0.0, f64::max);
    within_time(
        Duration::from_secs(1),
        t,
        check(
            worst < 1e-12,
            format!("max |R†R - I| = {worst:.2e} over 1000 draws"),
        ),
    )
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let s0 = ControlSet::single_field();
    let s1 = set(FRAC_PI_4, 0.0, 0.0);
    let closed = coalescence_probs(&s0, &s1, C64::new(1.0, 0.0)).map_err(|e| e.to_string())?;
    let g = WavePacket::gaussian(0.0, 1.0).unwrap();
    let oracle = fock_oracle(&bs_matrix(&s0, &s1), &g, &g).map_err(|e| e.to_string())?;
    let ok = closed.p_coal1 == 0.5 && (oracle.p_coal1 - 0.5).abs() < 1e-10;
    within_time(
        Duration::from_secs(1),
        t,
        check(
            ok,
            format!(
                "P_coal(1): closed form {:.17}, Fock oracle {:.17}",
                closed.p_coal1, oracle.p_coal1
            ),
        ),
    )
}

fn monotone(rows: &[ScanRow], increasing: bool) -> bool {
    rows.windows(2).all(|w| {
        if increasing {
            w[1].p_noncoal >= w[0].p_noncoal - 1e-15
        } else {
            w[1].p_noncoal <= w[0].p_noncoal + 1e-15
        }
    })
}

/// Decreasing up to the minimum, increasing after it.
fn unimodal(rows: &[ScanRow]) -> bool {
    let k = rows
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.p_noncoal.total_cmp(&b.1.p_noncoal))
        .map(|(k, _)| k)
        .unwrap();
    monotone(&rows[..=k], false) && monotone(&rows[k..], true)
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let d = 1.0;
    let p0 = noncoal_gaussian(0.0, d, d).unwrap();
    let p1 = noncoal_gaussian(0.0, 3.0 * d, d).unwrap();
    let p2 = noncoal_gaussian(10.0 * d, d, d).unwrap();
    let mut ok = p0.abs() < 1e-12 && (p1 - 0.2).abs() < 1e-12 && (p2 - 0.5).abs() < 1e-9;
    let mut notes = format!("dip values {p0:.1e}, {p1:.15}, {p2:.12}");

    let base = ScanParams {
        set1: set(FRAC_PI_4, 0.0, 0.0),
        ..ScanParams::default()
    };
    let out = std::path::Path::new(env!("CARGO_TARGET_TMPDIR"));
    let xs = linspace(-5.0, 5.0, 201).unwrap();
    for (name, d1, d2) in [
        ("separation_equal_widths", 1.0, 1.0),
        ("separation_width_ratio_3", 3.0, 1.0),
    ] {
        let p = ScanParams {
            delta1: d1,
            delta2: d2,
            ..base
        };
        let xs: Vec<f64> = xs.iter().map(|x| x * d1).collect();
        let rows = hom_scan(ScanAxis::Separation, &xs, &p).map_err(|e| e.to_string())?;
        let n = rows.len();
        let even = (0..n).all(|i| (rows[i].p_noncoal - rows[n - 1 - i].p_noncoal).abs() < 1e-14);
        let shape = monotone(&rows[..=n / 2], false) && monotone(&rows[n / 2..], true);
        ok &= even && shape;
        std::fs::write(out.join(format!("{name}.csv")), scan_csv(&rows))
            .map_err(|e| e.to_string())?;
        notes += &format!("; {name} even={even} monotone={shape}");
    }
    let ratios = linspace(0.1, 10.0, 199).unwrap();
    for (name, a) in [("width_ratio_a0", 0.0), ("width_ratio_a2", 2.0)] {
        let p = ScanParams {
            separation: a,
            ..base
        };
        let rows = hom_scan(ScanAxis::WidthRatio, &ratios, &p).map_err(|e| e.to_string())?;
        let shape = unimodal(&rows);
        ok &= shape;
        std::fs::write(out.join(format!("{name}.csv")), scan_csv(&rows))
            .map_err(|e| e.to_string())?;
        notes += &format!("; {name} unimodal={shape}");
    }
    within_time(Duration::from_secs(1), t, check(ok, notes))
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for s in [0.0, 0.5, 1.0] {
        for delta in linspace(0.0, 2.0 * PI, 100).unwrap() {
            let s0 = set(FRAC_PI_4, delta, 0.0);
            let s1 = set(FRAC_PI_4, 0.0, 0.0);
            let st = coalescence_probs(&s0, &s1, C64::new(s, 0.0)).map_err(|e| e.to_string())?;
            let want = 0.25 * (1.0 + s * s) * delta.sin().powi(2);
            worst = worst.max((st.p_coal1 - want).abs());
        }
    }
    within_time(
        Duration::from_secs(1),
        t,
        check(
            worst < 1e-12,
            format!("max deviation from phase law {worst:.2e}"),
        ),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    let mut closure: f64 = 0.0;
    let mut smin: f64 = 1.0;
    let mut smax: f64 = 0.0;
    for k in 0..1000 {
        let r = bs_matrix(&random_set(&mut rng), &random_set(&mut rng));
        let (f1, f2) = match k % 4 {
            // |s| drawn uniformly in [0, 1] through the separation of equal packets
            0 | 1 => {
                let target: f64 = rng.random_range(0.0..=1.0);
                let d = rng.random_range(0.5..2.0);
                let a = if target == 0.0 {
                    100.0 * d
                } else {
                    (-8.0 * d * d * target.ln()).sqrt()
                };
                (
                    WavePacket::gaussian(0.0, d).unwrap(),
                    WavePacket::gaussian(a, d).unwrap(),
                )
            }
            2 => {
                let f =
                    WavePacket::gaussian(rng.random_range(-1.0..1.0), rng.random_range(0.5..2.0))
                        .unwrap();
                (f.clone(), f)
            }
            _ => (
                WavePacket::gaussian(0.0, rng.random_range(0.3..3.0)).unwrap(),
                WavePacket::gaussian(rng.random_range(-6.0..6.0), rng.random_range(0.3..3.0))
                    .unwrap(),
            ),
        };
        let o = fock_oracle(&r, &f1, &f2).map_err(|e| e.to_string())?;
        let c = stats_from_matrix(&r, o.s).map_err(|e| e.to_string())?;
        smin = smin.min(o.s.norm());
        smax = smax.max(o.s.norm());
        worst = worst
            .max((o.p_coal1 - c.p_coal1).abs())
            .max((o.p_coal2 - c.p_coal2).abs())
            .max((o.p_noncoal - c.p_noncoal).abs());
        closure = closure
            .max((o.p_coal1 + o.p_coal2 + o.p_noncoal - 1.0).abs())
            .max((c.p_coal1 + c.p_coal2 + c.p_noncoal - 1.0).abs());
    }
    within_time(
        Duration::from_secs(5),
        t,
        check(
            worst < 1e-10 && closure < 1e-10,
            format!(
                "max |closed - oracle| {worst:.2e}, closure {closure:.2e}, |s| in [{smin:.2e}, {smax:.6}]"
            ),
        ),
    )
}

/// Storage followed by two-stage release, unit coupling and Ω₀ = κ.
fn release_run(release: ControlSet, label: &str) -> Result<RunResult, String> {
    let width = 16.0;
    let plan = AutoPlan::new(1.0, width, vec![ControlSet::single_field()], release);
    let lead = plan.lead_in(1.0);
    let length = (plan.min_sample_length(1.0, 1.0) + width).ceil();
    let cells = 4096;
    let dz = (lead + length) / cells as f64;
    let grid = Grid::new(cells, -lead, dz).map_err(|e| e.to_string())?;
    let params = MediumParams::with_unit_cfl(1.0, 1.0, length, grid).map_err(|e| e.to_string())?;
    let (timeline, photons) = plan.build(&params).map_err(|e| e.to_string())?;
    let res = simulate_photon(&params, &timeline, &photons[0], 16).map_err(|e| e.to_string())?;
    record_drift(label, res.max_balance_drift);
    Ok(res)
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let (split, same) = std::thread::scope(|s| {
        let a = s.spawn(|| release_run(set(FRAC_PI_4, 0.0, 0.0), "release phi=pi/4"));
        let b = s.spawn(|| release_run(ControlSet::single_field(), "identity release"));
        (a.join().unwrap(), b.join().unwrap())
    });
    let (split, same) = (split?, same?);
    let f = |r: &RunResult, l: &str| r.released_fraction(l).unwrap();
    let (f1, f2) = (f(&split, STAGE1), f(&split, STAGE2));
    let total = f1 + f2 + f(&split, STORAGE);
    let id = f(&same, STAGE1);
    let id_total = id + f(&same, STAGE2) + f(&same, STORAGE);
    let ok = (f1 - 0.5).abs() < 5e-3
        && (f2 - 0.5).abs() < 5e-3
        && (id - 1.0).abs() < 5e-3
        && total >= 0.995
        && id_total >= 0.995;
    check(
        ok,
        format!(
            "stage fractions ({f1:.6}, {f2:.6}) total {total:.6}; identity release {id:.6} total {id_total:.6} [{:.1} s]",
            start.elapsed().as_secs_f64()
        ),
    )
}

/// Relative L2 deviation of the simulated dark polariton from the analytic
/// transport, in a uniform medium with `tan θ = 10`.
fn transport_error(cells: usize) -> Result<f64, String> {
    let (kappa, omega, c) = (1.0, 0.1, 1.0);
    let length = 200.0;
    let t1 = 2000.0;
    let dz = length / cells as f64;
    let grid = Grid::new(cells, 0.0, dz).map_err(|e| e.to_string())?;
    let params =
        MediumParams::with_unit_cfl(kappa, c, 2.0 * length, grid).map_err(|e| e.to_string())?;
    let set0 = ControlSet::single_field();
    let schedule =
        ControlSchedule::constant(0.0, t1 + 1.0, set0.rabi(omega)).map_err(|e| e.to_string())?;
    let psi0 = WavePacket::gaussian(0.25 * length, 10.0)
        .and_then(|g| g.on_grid(&grid))
        .map_err(|e| e.to_string())?;
    let basis = PolaritonBasis::new(set0, kappa.atan2(omega), 0.0);
    let initial = from_polaritons(&PolaritonField::dark(psi0.clone()), &basis, 0.0, dz)
        .map_err(|e| e.to_string())?;
    let spec = RunSpec {
        params: params.clone(),
        schedule: schedule.clone(),
        initial,
        end: t1,
        stages: vec![],
        record_every: 64,
    };
    let res = run(&spec).map_err(|e| e.to_string())?;
    record_drift(&format!("transport {cells} cells"), res.max_balance_drift);
    let pol = to_polaritons(&res.final_state, &basis).map_err(|e| e.to_string())?;
    let want = transport(
        &psi0,
        dz,
        &schedule,
        kappa,
        c,
        0.0,
        res.final_state.t,
        Interpolation::Spectral,
    )
    .map_err(|e| e.to_string())?;
    let num: f64 = pol
        .psi
        .iter()
        .zip(&want)
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    let den: f64 = want.iter().map(|a| a.norm_sqr()).sum();
    Ok((num / den).sqrt())
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let coarse = transport_error(100)?;
    let fine = transport_error(200)?;
    let ratio = coarse / fine;
    check(
        coarse < 1e-2 && (ratio - 4.0).abs() <= 1.0,
        format!(
            "relative L2 error {coarse:.3e} (dz = 2), {fine:.3e} (dz = 1), ratio {ratio:.2} [{:.1} s]",
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_8() -> Outcome {
    let grid = Grid::new(400, 0.0, 0.25).unwrap();
    let params = MediumParams::with_unit_cfl(1.0, 1.0, 100.0, grid).unwrap();
    let profile = WavePacket::gaussian(50.0, 5.0)
        .unwrap()
        .on_grid(&grid)
        .unwrap();
    let mut state = FieldState::zeros(&grid, 0.0);
    state.s_c = profile.iter().map(|z| z * 0.6).collect();
    state.s_d = profile.iter().map(|z| z * C64::new(0.0, 0.8)).collect();
    let schedule = ControlSchedule::constant(0.0, 1e3, RabiPair::OFF).unwrap();
    let mut solver = Solver::new(&params, &schedule, state).unwrap();
    let mut stationary: f64 = 0.0;
    for _ in 0..500 {
        let before = solver.state().clone();
        solver.step().map_err(|e| e.to_string())?;
        let after = solver.state();
        for (a, b) in [
            (&before.u, &after.u),
            (&before.s_a, &after.s_a),
            (&before.s_c, &after.s_c),
            (&before.s_d, &after.s_d),
        ] {
            stationary = a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y).norm())
                .fold(stationary, f64::max);
        }
    }
    let drifts = DRIFTS.lock().unwrap();
    if drifts.is_empty() {
        return Err("no PDE runs recorded".into());
    }
    let (label, worst) = drifts
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(l, d)| (l.clone(), *d))
        .unwrap();
    check(
        worst < 1e-6 && stationary < 1e-12,
        format!(
            "max balance drift {worst:.2e} over {} runs (worst: {label}); stored-state change per step {stationary:.1e}",
            drifts.len()
        ),
    )
}

/// Centroid group velocity through a sample of length `length`.
fn transit_velocity(theta: f64) -> Result<f64, String> {
    let (kappa, c) = (1.0, 1.0);
    let omega = kappa / theta.tan();
    let width = 32.0;
    let length = 400.0;
    let dz = 0.25;
    let lead = 10.0 * width;
    let cells = ((lead + length + 4.0) / dz) as usize;
    let grid = Grid::new(cells, -lead, dz).map_err(|e| e.to_string())?;
    let params = MediumParams::with_unit_cfl(kappa, c, length, grid).map_err(|e| e.to_string())?;
    let z0 = -lead / 2.0;
    let u = WavePacket::gaussian(z0, width)
        .and_then(|g| g.on_grid(&grid))
        .map_err(|e| e.to_string())?;
    let vg = c * theta.cos().powi(2);
    let end = ((grid.z_max() - z0 + 6.0 * width) / c + length / vg).ceil();
    let schedule =
        ControlSchedule::constant(0.0, end + 1.0, ControlSet::single_field().rabi(omega))
            .map_err(|e| e.to_string())?;
    let mut solver = Solver::new(
        &params,
        &schedule,
        FieldState::from_signal(u, &grid, 0.0).unwrap(),
    )
    .map_err(|e| e.to_string())?;
    let steps = (end / params.dt).round() as usize;
    let (mut m0, mut m1) = (0.0, 0.0);
    for _ in 0..steps {
        let out = solver.step().map_err(|e| e.to_string())?;
        m0 += out.flux();
        m1 += out.flux() * out.t;
    }
    let left = excitation_norm(solver.state());
    // excitation left behind at the sample edges, far too small to move the centroid
    if left > 1e-6 {
        return Err(format!("{left:.1e} of the pulse still on the grid"));
    }
    let centroid = m1 / m0;
    let vacuum = (grid.z_max() - z0) / c;
    let delay = centroid - vacuum;
    Ok(length / (delay + length / c))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let thetas = [FRAC_PI_6, FRAC_PI_4, FRAC_PI_3];
    let measured: Vec<Result<f64, String>> = std::thread::scope(|s| {
        let hs: Vec<_> = thetas
            .iter()
            .map(|&th| s.spawn(move || transit_velocity(th)))
            .collect();
        hs.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut ok = true;
    let mut notes = Vec::new();
    for (th, m) in thetas.iter().zip(measured) {
        let v = m?;
        let want = th.cos().powi(2);
        let rel = (v - want) / want;
        ok &= rel.abs() < 1e-2;
        notes.push(format!(
            "theta={th:.4}: v={v:.5} vs {want:.5} ({:+.2e})",
            rel
        ));
    }
    check(
        ok,
        format!(
            "{} [{:.1} s]",
            notes.join("; "),
            start.elapsed().as_secs_f64()
        ),
    )
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let n = 64;
    let mut worst: f64 = 0.0;
    let mut direct: f64 = 0.0;
    for _ in 0..200 {
        let a = random_set(&mut rng);
        let b = a.complementary();
        let mut draw = || -> Vec<C64> {
            (0..n)
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect()
        };
        let mut pol = PolaritonField::dark(draw());
        pol.z_pol = draw();
        let (ba, bb) = (PolaritonBasis::stored(a), PolaritonBasis::stored(b));
        let out = basis_change(&pol, &ba, &bb).map_err(|e| e.to_string())?;
        for i in 0..n {
            worst = worst
                .max((out.psi[i] - pol.z_pol[i]).norm())
                .max((out.z_pol[i] - pol.psi[i]).norm());
        }
        // same exchange read off the atomic coherences directly
        let state = from_polaritons(&pol, &ba, 0.0, 1.0).map_err(|e| e.to_string())?;
        let again = to_polaritons(&state, &bb).map_err(|e| e.to_string())?;
        for i in 0..n {
            direct = direct
                .max((again.psi[i] - out.psi[i]).norm())
                .max((again.z_pol[i] - out.z_pol[i]).norm());
        }
    }
    check(
        worst < 1e-12 && direct < 1e-12,
        format!("max |Psi' - Z|, |Z' - Psi| = {worst:.2e}; vs direct decomposition {direct:.2e}"),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "beam-splitter unitarity", criterion_1),
        (2, "coalescence at pi/4 release", criterion_2),
        (3, "Mandel dip and scans", criterion_3),
        (4, "phase law", criterion_4),
        (5, "Fock-space oracle equivalence", criterion_5),
        (6, "end-to-end storage and release", criterion_6),
        (7, "shape-preserving transport", criterion_7),
        (9, "group velocity", criterion_9),
        (8, "conservation", criterion_8),
        (10, "role exchange", criterion_10),
    ];
    let mut results = Vec::new();
    for (id, name, f) in criteria {
        let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        results.push((id, name, r));
    }
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, r) in &results {
        match r {
            Ok(m) => println!("criterion {id:>2} PASS  {name}: {m}"),
            Err(m) => {
                failed += 1;
                println!("criterion {id:>2} FAIL  {name}: {m}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
