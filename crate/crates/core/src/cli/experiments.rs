//! The four experiments behind the CLI, as functions returning rows and CSV.

use crate::cli::format::{csv_text, num};
use crate::extension::{ExtensionReport, HolderReport};
use crate::geometry::{classify, sample_weighted, CuspParams, Point, Region, Scheme, Shell, ShellRange};
use crate::reflections::{piece_jet, ChartId, Piece};
use crate::sobolev::{
    accepts, p_min_r1, p_min_r2, predicted_shell_exponent, q_max_r1, q_max_r2, scaling_fit, DistortionSampler,
    ExponentPair, ShellSum, SobolevError, VerdictKind,
};

pub const SWEEP_HEADER: [&str; 16] = [
    "n",
    "s",
    "scheme",
    "region",
    "p",
    "q",
    "q_max_theory",
    "admissible_theory",
    "e_predicted",
    "k_min",
    "k_max",
    "partial_sum",
    "last_ratio",
    "verdict",
    "agrees",
    "seed",
];
pub const SCALING_HEADER: [&str; 6] = ["region", "scale", "opnorm", "abs_det", "fitted_slope", "target_slope"];
pub const EXTENDNORM_HEADER: [&str; 6] = ["shell", "k", "Lq_value_term", "Lq_grad_term", "partial", "verdict"];
pub const HOLDER_HEADER: [&str; 4] = ["t", "osc", "diam", "fitted_exponent"];

pub fn outer_chart(scheme: Scheme) -> ChartId {
    match scheme {
        Scheme::R1 => ChartId::R1Outer,
        Scheme::R2 => ChartId::R2Outer,
    }
}

pub fn outer_regions(scheme: Scheme) -> &'static [Region] {
    match scheme {
        Scheme::R1 => &[Region::A, Region::B, Region::C],
        Scheme::R2 => &[Region::D, Region::E],
    }
}

pub fn p_min(scheme: Scheme, params: &CuspParams) -> f64 {
    match scheme {
        Scheme::R1 => p_min_r1(params.n(), params.s()),
        Scheme::R2 => p_min_r2(params.n(), params.s()),
    }
}

pub fn q_max(scheme: Scheme, params: &CuspParams, p: f64) -> Result<f64, SobolevError> {
    match scheme {
        Scheme::R1 => q_max_r1(p, params.n(), params.s()),
        Scheme::R2 => q_max_r2(p, params.n(), params.s()),
    }
}

/// The `size × size` grid with `p ∈ [1.1·p_min, 6]` and `q ∈ [1, p - 0.05]`.
pub fn grid_cells(params: &CuspParams, scheme: Scheme, size: usize) -> Vec<(f64, f64)> {
    let lo = 1.1 * p_min(scheme, params);
    let step = |a: f64, b: f64, i: usize| if size < 2 { a } else { a + (b - a) * i as f64 / (size - 1) as f64 };
    let mut cells = Vec::with_capacity(size * size);
    for i in 0..size {
        let p = step(lo, 6.0, i);
        for j in 0..size {
            cells.push((p, step(1.0, p - 0.05, j)));
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub s: f64,
    pub scheme: Scheme,
    /// A region name, or `all` for the sum over the chart's regions.
    pub region: String,
    pub p: f64,
    pub q: f64,
    pub q_max: Option<f64>,
    pub admissible: Option<bool>,
    pub e_predicted: Option<f64>,
    pub k_min: u32,
    pub k_max: u32,
    pub partial_sum: Option<f64>,
    pub last_ratio: Option<f64>,
    /// `Convergent`, `Divergent`, `Inconclusive` or `WindowError`.
    pub verdict: String,
    /// Whether a decisive verdict matches theory; `None` when undecided.
    pub agrees: Option<bool>,
    pub seed: u64,
}

pub struct SweepConfig<'a> {
    pub params: CuspParams,
    pub scheme: Scheme,
    pub cells: &'a [(f64, f64)],
    pub shells: ShellRange,
    pub samples: usize,
    pub seed: u64,
}

/// Runs the distortion integral on every cell.
///
/// Each cell yields one row per region, compared with `e > -1`, and an
/// `all` row for the combined integral, compared with `q < q_max`. Cells
/// outside the window give a single `WindowError` row.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>, SobolevError> {
    sweep_with(cfg, &outer_samplers(cfg)?)
}

/// Samplers for each region of the scheme's outer chart, in region order.
pub fn outer_samplers(cfg: &SweepConfig) -> Result<Vec<DistortionSampler>, SobolevError> {
    let chart = outer_chart(cfg.scheme);
    outer_regions(cfg.scheme)
        .iter()
        .map(|r| DistortionSampler::new(chart, &cfg.params, *r, cfg.shells, cfg.samples, cfg.seed))
        .collect()
}

/// [`sweep`] over samplers already built by [`outer_samplers`].
pub fn sweep_with(cfg: &SweepConfig, samplers: &[DistortionSampler]) -> Result<Vec<SweepRow>, SobolevError> {
    let regions = outer_regions(cfg.scheme);
    let (n, s) = (cfg.params.n(), cfg.params.s());
    let base = |region: &str, p: f64, q: f64| SweepRow {
        n,
        s,
        scheme: cfg.scheme,
        region: region.to_string(),
        p,
        q,
        q_max: None,
        admissible: None,
        e_predicted: None,
        k_min: cfg.shells.k_min,
        k_max: cfg.shells.k_max,
        partial_sum: None,
        last_ratio: None,
        verdict: "WindowError".into(),
        agrees: None,
        seed: cfg.seed,
    };
    let decide = |sum: &ShellSum, want: bool| {
        let v = sum.verdict();
        let agrees = match v.kind {
            VerdictKind::Convergent => Some(want),
            VerdictKind::Divergent => Some(!want),
            VerdictKind::Inconclusive => None,
        };
        (v.kind.to_string(), agrees, sum.ratios().last().copied())
    };

    let mut rows = Vec::new();
    for &(p, q) in cfg.cells {
        let qmax = match (ExponentPair::new(p, q), q_max(cfg.scheme, &cfg.params, p)) {
            (Ok(_), Ok(qm)) => qm,
            _ => {
                rows.push(base("all", p, q));
                continue;
            }
        };
        let mut sums = Vec::with_capacity(regions.len());
        let mut e_min = f64::INFINITY;
        for (region, sampler) in regions.iter().zip(samplers) {
            let sum = sampler.integral(p, q)?;
            let e = predicted_shell_exponent(*region, p, q, n, s)?;
            e_min = e_min.min(e);
            let (verdict, agrees, last_ratio) = decide(&sum, e > -1.0);
            rows.push(SweepRow {
                q_max: Some(qmax),
                admissible: Some(q < qmax),
                e_predicted: Some(e),
                partial_sum: Some(sum.total()),
                last_ratio,
                verdict,
                agrees,
                ..base(region.name(), p, q)
            });
            sums.push(sum);
        }
        let all = ShellSum::combine(&sums);
        let (verdict, agrees, last_ratio) = decide(&all, q < qmax);
        rows.push(SweepRow {
            q_max: Some(qmax),
            admissible: Some(q < qmax),
            e_predicted: Some(e_min),
            partial_sum: Some(all.total()),
            last_ratio,
            verdict,
            agrees,
            ..base("all", p, q)
        });
    }
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn opt_bool(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_else(|| "na".into())
}

pub fn sweep_csv(rows: &[SweepRow]) -> Result<String, csv::Error> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                num(r.s),
                r.scheme.to_string(),
                r.region.clone(),
                num(r.p),
                num(r.q),
                opt(r.q_max),
                r.admissible.map(|b| b.to_string()).unwrap_or_default(),
                opt(r.e_predicted),
                r.k_min.to_string(),
                r.k_max.to_string(),
                opt(r.partial_sum),
                opt(r.last_ratio),
                r.verdict.clone(),
                opt_bool(r.agrees),
                r.seed.to_string(),
            ]
        })
        .collect();
    csv_text(&SWEEP_HEADER, &body)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub region: Region,
    pub scale: f64,
    pub opnorm: f64,
    pub abs_det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fitted_slope: f64,
    pub target_slope: f64,
}

/// One deterministic point per shell on a ray through the tip, with scale
/// `τ = 2^{-k-1/2}` in the middle of the shell.
fn ray_point(params: &CuspParams, region: Region, tau: f64) -> Option<Point> {
    let s = params.s();
    let (t, r) = match region {
        Region::A => (-tau, tau / 2.0),
        Region::B => (tau / 2.0, tau),
        Region::C => (tau, tau / 2.0),
        Region::D => (-tau, tau.powf(s) / 2.0),
        Region::E => (tau, 2.0 * tau.powf(s)),
        _ => return None,
    };
    Some(Point::on_axis_ray(params, t, r))
}

/// Jacobian scaling along rays.
///
/// For A, B, C and D this fits `|det|` against the region's scale variable,
/// with target `(n-1)(s-1)` (0 for D). For E it fits `|Df|` against `|x|`,
/// with target `-(s-1)/s`.
pub fn scaling(params: &CuspParams, region: Region, shells: ShellRange) -> Result<ScalingReport, SobolevError> {
    let piece = match region {
        Region::A => Piece::A,
        Region::B => Piece::B,
        Region::C => Piece::C,
        Region::D => Piece::D,
        Region::E => Piece::E,
        _ => return Err(SobolevError::UnsupportedRegion { region: region.name() }),
    };
    let (m, s) = (params.m() as f64, params.s());
    let mut rows = Vec::new();
    for shell in shells.shells() {
        let tau = 2f64.powf(-(shell.k() as f64) - 0.5);
        let z = ray_point(params, region, tau).expect("outer region");
        if classify(params, region.scheme(), &z)? != region.label() {
            return Err(SobolevError::Window(format!("shell k={} is too coarse for the {} ray", shell.k(), region.name())));
        }
        let jet = piece_jet(piece, params, &z);
        let scale = if region == Region::E { z.radius() } else { region.scale_of(z.profile()) };
        rows.push(ScalingRow { region, scale, opnorm: jet.opnorm, abs_det: jet.det.abs() });
    }
    let (pairs, target): (Vec<(f64, f64)>, f64) = match region {
        Region::E => (rows.iter().map(|r| (r.scale, r.opnorm)).collect(), -(s - 1.0) / s),
        Region::D => (rows.iter().map(|r| (r.scale, r.abs_det)).collect(), 0.0),
        _ => (rows.iter().map(|r| (r.scale, r.abs_det)).collect(), m * (s - 1.0)),
    };
    let fit = scaling_fit(&pairs)?;
    Ok(ScalingReport { rows, fitted_slope: fit.slope, target_slope: target })
}

pub fn scaling_csv(reports: &[ScalingReport]) -> Result<String, csv::Error> {
    let body: Vec<Vec<String>> = reports
        .iter()
        .flat_map(|rep| {
            rep.rows.iter().map(move |r| {
                vec![
                    r.region.name().to_string(),
                    num(r.scale),
                    num(r.opnorm),
                    num(r.abs_det),
                    num(rep.fitted_slope),
                    num(rep.target_slope),
                ]
            })
        })
        .collect();
    csv_text(&SCALING_HEADER, &body)
}

/// Largest `|Df|·|x|^{power}` over seeded samples of each shell.
pub fn shell_norm_maxima(
    chart: ChartId,
    params: &CuspParams,
    region: Region,
    shells: ShellRange,
    samples: usize,
    seed: u64,
    power: f64,
) -> Result<Vec<(u32, f64)>, SobolevError> {
    let piece = chart
        .pieces()
        .iter()
        .copied()
        .find(|p| p.label() == region.label())
        .ok_or(SobolevError::ChartRegion { chart, region: region.name() })?;
    let mut out = Vec::new();
    for shell in shells.shells() {
        let pts = sample_weighted(params, region, shell, samples, seed, |z| accepts(params, region, shell, Some(chart), z))?;
        let max = pts
            .iter()
            .map(|(z, _)| {
                let r = z.radius();
                piece.profile(params, z.t, r).opnorm(r) * r.powf(power)
            })
            .fold(0.0, f64::max);
        out.push((shell.k(), max));
    }
    Ok(out)
}

/// Checks that each shell maximum stays within `factor` of the running
/// maximum of the earlier shells; returns the worst ratio seen.
pub fn worst_growth(maxima: &[(u32, f64)]) -> f64 {
    let mut running = 0.0f64;
    let mut worst = 0.0f64;
    for (i, (_, m)) in maxima.iter().enumerate() {
        if i > 0 {
            worst = worst.max(m / running);
        }
        running = running.max(*m);
    }
    worst
}

pub fn extendnorm_csv(report: &ExtensionReport) -> Result<String, csv::Error> {
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                i.to_string(),
                r.k.to_string(),
                num(r.value_term),
                num(r.grad_term),
                num(r.partial),
                r.verdict.kind.to_string(),
            ]
        })
        .collect();
    csv_text(&EXTENDNORM_HEADER, &body)
}

pub fn holder_csv(report: &HolderReport) -> Result<String, csv::Error> {
    let body: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| vec![num(r.t), num(r.osc), num(r.diam), num(report.fitted_exponent)])
        .collect();
    csv_text(&HOLDER_HEADER, &body)
}

/// Heights `2^{-k}` for `k` in a shell range.
pub fn dyadic_heights(range: ShellRange) -> Vec<f64> {
    range.shells().map(|s: Shell| s.hi()).collect()
}
