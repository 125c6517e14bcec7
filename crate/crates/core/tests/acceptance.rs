//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use cusp_reflect::cli::experiments::{
    extendnorm_csv, grid_cells, holder_csv, scaling, scaling_csv, shell_norm_maxima, sweep, sweep_csv, worst_growth,
    SweepConfig,
};
use cusp_reflect::extension::{
    extension_norm_experiment, gradient_shell_maxima, holder_probe, membership_oracle, Direction, ExtensionSpec,
    TestFunction,
};
use cusp_reflect::geometry::{CuspParams, Point, Region, Scheme, ShellRange};
use cusp_reflect::reflections::{
    apply, differential, differential_fd_steps, locate, piece_jet, scaled_fd_steps, ChartId, Location, Piece,
};
use cusp_reflect::sobolev::{p_star, q_max_r1, q_max_r2, sobolev_seminorm, VerdictKind, MARGIN};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Outcome = Result<String, String>;
type Edge<'a> = &'a dyn Fn(f64) -> (f64, f64);
type Criterion = (&'static str, Duration, fn() -> Outcome);

const SEED: u64 = 42;
const DEEPEST: f64 = 9.5367431640625e-7; // 2^-20

fn params(n: usize, s: f64) -> CuspParams {
    CuspParams::new(n, s).expect("valid parameters")
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn direction(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + (hi.ln() - lo.ln()) * rng.random::<f64>()).exp()
}

/// Random point of `piece` with scale in `(DEEPEST, 1/2)`, at relative gap
/// above `gap` from the piece's interfaces.
fn piece_point(p: &CuspParams, piece: Piece, rng: &mut ChaCha8Rng, gap: f64) -> Point {
    loop {
        let tau = log_uniform(rng, DEEPEST, 0.5);
        let u: f64 = rng.random();
        let rc = p.cusp_radius(tau);
        let (t, r) = match piece {
            Piece::A => (-tau, tau * u),
            Piece::B => (tau * (2.0 * u - 1.0), tau),
            Piece::C => (tau, rc + (tau - rc) * u),
            Piece::D => (-tau, rc * u),
            Piece::E => (if u < 0.5 { -tau } else { tau }, log_uniform(rng, rc, p.r2_radius())),
            Piece::Inner1 => (tau, rc * u / 6.0),
            Piece::Inner2 => (tau, rc * (1.0 + u) / 6.0),
            Piece::Inner3 => (tau, rc * (1.0 + 2.0 * u) / 3.0),
        };
        let z = Point::from_profile(t, r, &direction(rng, p.m()));
        let inside = locate(piece.chart(), p, &z) == Ok(Location::Piece(piece));
        if inside && cusp_reflect::reflections::interface_gap(piece, p, &z) > gap {
            return z;
        }
    }
}

fn exact_distortion() -> Outcome {
    let p = params(3, 2.0);
    let jet = differential(ChartId::R1Inner, &p, &Point::new(0.5, vec![0.0, 0.0])).map_err(|e| e.to_string())?;
    let (op_err, det_err) = ((jet.opnorm / 12.0 - 1.0).abs(), (jet.det.abs() / 144.0 - 1.0).abs());
    ensure(op_err <= 1e-10 && det_err <= 1e-10, || format!("inner piece 1: opnorm {} |det| {}", jet.opnorm, jet.det))?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut checked = 0;
    for n in [3, 4, 5] {
        let p = params(n, 2.0);
        let target = 0.5f64.powi(n as i32 - 1);
        for _ in 0..1000 {
            let jet = piece_jet(Piece::D, &p, &piece_point(&p, Piece::D, &mut rng, 0.0));
            ensure(jet.opnorm == 1.0 && jet.det.abs() == target, || {
                format!("D piece n={n}: opnorm {} |det| {} (want {target})", jet.opnorm, jet.det)
            })?;
            checked += 1;
        }
    }
    Ok(format!("inner1 rel err {op_err:.1e}/{det_err:.1e}; D exact at {checked} points"))
}

fn fixity_and_continuity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut fix_worst, mut cont_worst) = (0.0f64, 0.0f64);
    for n in [3, 4] {
        for s in [1.5, 2.0, 3.0] {
            let p = params(n, s);
            for _ in 0..10_000 {
                let t = log_uniform(&mut rng, DEEPEST, 0.5);
                let z = Point::from_profile(t, p.cusp_radius(t), &direction(&mut rng, p.m()));
                for chart in ChartId::ALL {
                    fix_worst = fix_worst.max(apply(chart, &p, &z).map_err(|e| e.to_string())?.distance(&z));
                }
            }
            let interfaces: [(Piece, Piece, Edge); 5] = [
                (Piece::A, Piece::B, &|tau| (-tau, tau)),
                (Piece::C, Piece::B, &|tau| (tau, tau)),
                (Piece::D, Piece::E, &|tau| (-tau, p.cusp_radius(tau))),
                (Piece::Inner1, Piece::Inner2, &|tau| (tau, p.cusp_radius(tau) / 6.0)),
                (Piece::Inner2, Piece::Inner3, &|tau| (tau, p.cusp_radius(tau) / 3.0)),
            ];
            for (below, above, edge) in interfaces {
                for _ in 0..1000 {
                    let (t, r) = edge(log_uniform(&mut rng, DEEPEST, 0.5));
                    let dir = direction(&mut rng, p.m());
                    let lo = Point::from_profile(t, r * (1.0 - 1e-10), &dir);
                    let hi = Point::from_profile(t, r * (1.0 + 1e-10), &dir);
                    let chart = below.chart();
                    ensure(locate(chart, &p, &lo) == Ok(Location::Piece(below)), || format!("{lo:?} not in {below:?}"))?;
                    ensure(locate(chart, &p, &hi) == Ok(Location::Piece(above)), || format!("{hi:?} not in {above:?}"))?;
                    let a = apply(chart, &p, &lo).map_err(|e| e.to_string())?;
                    let b = apply(chart, &p, &hi).map_err(|e| e.to_string())?;
                    cont_worst = cont_worst.max(a.distance(&b));
                }
            }
        }
    }
    ensure(fix_worst <= 1e-12 && cont_worst <= 1e-9, || format!("fixity {fix_worst:e}, continuity {cont_worst:e}"))?;
    Ok(format!("worst fixity {fix_worst:.1e}, worst interface jump {cont_worst:.1e}"))
}

fn jacobian_oracle() -> Outcome {
    let p = params(3, 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    for piece in Piece::ALL {
        let mut count = 0;
        while count < 1000 {
            let z = piece_point(&p, piece, &mut rng, 1e-5);
            let Ok(fd) = differential_fd_steps(piece.chart(), &p, &z, &scaled_fd_steps(&p, &z)) else { continue };
            let exact = differential(piece.chart(), &p, &z).map_err(|e| e.to_string())?.differential;
            let err = (&exact - &fd).norm() / exact.norm();
            ensure(err <= 1e-5, || format!("{piece:?} at {z:?}: rel err {err:e}"))?;
            worst = worst.max(err);
            count += 1;
        }
    }
    Ok(format!("{} pieces x 1000 points, worst rel err {worst:.1e}", Piece::ALL.len()))
}

fn scaling_laws() -> Outcome {
    let p = params(3, 2.0);
    let range = ShellRange::new(5, 20).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for (region, tol) in [(Region::A, 1e-6), (Region::B, 0.02), (Region::C, 0.02)] {
        let rep = scaling(&p, region, range).map_err(|e| e.to_string())?;
        let err = (rep.fitted_slope - rep.target_slope).abs();
        ensure(err <= tol, || format!("{} slope {} vs {}", region.name(), rep.fitted_slope, rep.target_slope))?;
        notes.push(format!("{} {:.6}", region.name(), rep.fitted_slope));
    }
    let maxima = shell_norm_maxima(ChartId::R2Outer, &p, Region::E, range, 4096, SEED, 0.5).map_err(|e| e.to_string())?;
    let lo = maxima.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let hi = maxima.iter().map(|m| m.1).fold(0.0, f64::max);
    ensure(hi / lo <= 4.0, || format!("E spread {}", hi / lo))?;
    notes.push(format!("E spread {:.4}", hi / lo));
    Ok(notes.join(", "))
}

fn sharp_windows() -> Outcome {
    let p = params(3, 2.0);
    let shells = ShellRange::new(5, 30).map_err(|e| e.to_string())?;
    let mut notes = Vec::new();
    for scheme in [Scheme::R1, Scheme::R2] {
        let cells = grid_cells(&p, scheme, 21);
        let cfg = SweepConfig { params: p, scheme, cells: &cells, shells, samples: 4096, seed: SEED };
        let rows = sweep(&cfg).map_err(|e| e.to_string())?;
        let (mut decided, mut undecided) = (0, 0);
        for row in &rows {
            let qmax = row.q_max.ok_or_else(|| format!("cell p={} q={} left the window", row.p, row.q))?;
            let inconclusive = row.verdict == VerdictKind::Inconclusive.to_string();
            if row.region == "all" {
                if inconclusive {
                    undecided += 1;
                    ensure((row.q - qmax).abs() < MARGIN, || format!("{scheme} inconclusive far from curve: {row:?}"))?;
                } else {
                    decided += 1;
                    let convergent = row.verdict == VerdictKind::Convergent.to_string();
                    ensure(convergent == (row.q < qmax), || format!("{scheme} mismatch: {row:?}"))?;
                }
            }
            ensure(row.agrees != Some(false), || format!("{scheme} region {} disagrees: {row:?}", row.region))?;
        }
        notes.push(format!("{scheme}: {decided} decided, {undecided} inconclusive near the curve"));
    }
    let mut worst = 0.0f64;
    for n in [3, 4, 5] {
        for s in [1.5, 2.0, 3.0] {
            let ps = p_star(n, s);
            let target = n as f64 - 1.0;
            let a = q_max_r1(ps, n, s).map_err(|e| e.to_string())?;
            let b = q_max_r2(ps, n, s).map_err(|e| e.to_string())?;
            worst = worst.max((a - target).abs()).max((b - target).abs());
        }
    }
    ensure(worst <= 1e-12, || format!("crossing error {worst:e}"))?;
    notes.push(format!("crossing error {worst:.1e}"));
    Ok(notes.join("; "))
}

fn extension_sharpness() -> Outcome {
    let p = params(3, 2.0);
    ensure(membership_oracle(1.4, 2.0, 3, 2.0), || "power:1.4 should lie in W^(1,2)".into())?;
    let spec = ExtensionSpec::new(Scheme::R1, Direction::FromInside).map_err(|e| e.to_string())?;
    let u = TestFunction::PowerAlpha(1.4);
    let shells = ShellRange::new(5, 30).map_err(|e| e.to_string())?;
    for (q, want) in [(1.1, VerdictKind::Convergent), (1.3, VerdictKind::Divergent)] {
        let rep = extension_norm_experiment(&spec, &p, &u, 2.0, q, shells, 4096, SEED).map_err(|e| e.to_string())?;
        ensure(rep.verdict.kind == want, || format!("q={q}: {:?}", rep.verdict))?;
    }

    // shell 40 lies inside the tip ball and is empty, so the shells cover [2^-40, 1/2]
    let all = ShellRange::new(1, 40).map_err(|e| e.to_string())?;
    let half = sobolev_seminorm(&TestFunction::PowerAlpha(0.5), &p, Region::Cusp, 2.0, all, 100_000, SEED)
        .map_err(|e| e.to_string())?
        .total();
    let err_half = (half / (PI / 32.0) - 1.0).abs();
    ensure(err_half <= 0.01, || format!("power:0.5 seminorm {half} vs pi/32"))?;
    let main = sobolev_seminorm(&u, &p, Region::Cusp, 2.0, all, 100_000, SEED).map_err(|e| e.to_string())?.total();
    let exact = 1.96 * PI * 5.0 * (0.5f64.powf(0.2) - 2f64.powf(-8.0));
    let err_main = (main / exact - 1.0).abs();
    ensure(err_main <= 0.01, || format!("power:1.4 seminorm {main} vs {exact}"))?;
    Ok(format!("verdicts bracket 1.2; seminorm rel err {err_half:.1e} (power:0.5), {err_main:.1e} (power:1.4)"))
}

fn lipschitz_dichotomy() -> Outcome {
    let p = params(3, 2.0);
    let spec = ExtensionSpec::new(Scheme::R1, Direction::FromInside).map_err(|e| e.to_string())?;
    let range = ShellRange::new(5, 20).map_err(|e| e.to_string())?;
    let maxima =
        gradient_shell_maxima(&spec, &p, &TestFunction::ClampT, range, 4096, SEED).map_err(|e| e.to_string())?;
    let growth = worst_growth(&maxima);
    ensure(growth <= 1.05, || format!("gradient growth {growth}"))?;
    let heights: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
    let mut fits = Vec::new();
    for s in [1.5, 2.0, 3.0] {
        let rep = holder_probe(&params(3, s), &heights).map_err(|e| e.to_string())?;
        ensure((rep.fitted_exponent - 1.0 / s).abs() <= 0.02, || format!("s={s}: exponent {}", rep.fitted_exponent))?;
        fits.push(format!("{:.4}", rep.fitted_exponent));
    }
    Ok(format!("gradient growth {growth:.4}; holder exponents {}", fits.join("/")))
}

fn determinism() -> Outcome {
    let p = params(3, 2.0);
    let shells = ShellRange::new(5, 20).map_err(|e| e.to_string())?;
    let runs: [(&str, &dyn Fn() -> Outcome); 4] = [
        ("sweep", &|| {
            let cells = grid_cells(&p, Scheme::R2, 5);
            let cfg = SweepConfig { params: p, scheme: Scheme::R2, cells: &cells, shells, samples: 512, seed: SEED };
            sweep_csv(&sweep(&cfg).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
        }),
        ("scaling", &|| {
            let reps: Result<Vec<_>, _> = [Region::A, Region::E].iter().map(|r| scaling(&p, *r, shells)).collect();
            scaling_csv(&reps.map_err(|e| e.to_string())?).map_err(|e| e.to_string())
        }),
        ("extendnorm", &|| {
            let spec = ExtensionSpec::new(Scheme::R1, Direction::FromInside).map_err(|e| e.to_string())?;
            let rep = extension_norm_experiment(&spec, &p, &TestFunction::PowerAlpha(1.4), 2.0, 1.1, shells, 512, SEED)
                .map_err(|e| e.to_string())?;
            extendnorm_csv(&rep).map_err(|e| e.to_string())
        }),
        ("holder", &|| {
            let heights: Vec<f64> = (3..=10).map(|k| 2f64.powi(-k)).collect();
            holder_csv(&holder_probe(&p, &heights).map_err(|e| e.to_string())?).map_err(|e| e.to_string())
        }),
    ];
    for (name, run) in runs {
        ensure(run()? == run()?, || format!("{name} output differs between runs"))?;
    }
    Ok("sweep, scaling, extendnorm and holder CSVs byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("exact distortion values", Duration::from_secs(1), exact_distortion),
        ("boundary fixity and interface continuity", Duration::from_secs(30), fixity_and_continuity),
        ("jacobian oracle", Duration::from_secs(30), jacobian_oracle),
        ("scaling laws", Duration::from_secs(60), scaling_laws),
        ("sharp-window sweep", Duration::from_secs(600), sharp_windows),
        ("extension sharpness", Duration::from_secs(120), extension_sharpness),
        ("lipschitz dichotomy", Duration::from_secs(60), lipschitz_dichotomy),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if took > *budget => Err(format!("{detail}; over budget {:.0?}", budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({:.2}s): {detail}", i + 1, took.as_secs_f64()),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({:.2}s): {detail}", i + 1, took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
