//! Exponent windows, dyadic shell sums and their convergence classifier,
//! the distortion integral and Sobolev seminorm estimators, and log-log fits.

use std::fmt;

use rayon::prelude::*;
use thiserror::Error;

use crate::extension::TestFunction;
use crate::geometry::{classify, sample_weighted, CuspParams, GeometryError, Point, Region, Shell, ShellRange};
use crate::reflections::{interface_gap, locate, ChartId, Location, Piece, ReflectionError, INTERFACE_MARGIN};

/// Largest tail ratio still read as geometric decay.
pub const R_CONV: f64 = 0.93;
/// Smallest tail ratio read as growth.
pub const R_DIV: f64 = 1.0;
/// Growth of the partial sum over the first shell that counts as blow-up.
pub const CAP: f64 = 1e12;
/// Number of trailing ratios the verdict looks at.
pub const TAIL: usize = 4;
/// Fewest shells for a decisive verdict.
pub const MIN_SHELLS: usize = 6;
/// Width of the band around a critical curve where no verdict is promised.
pub const MARGIN: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SobolevError {
    #[error("window error: {0}")]
    Window(String),
    #[error("region {region} has no predicted shell exponent")]
    UnsupportedRegion { region: &'static str },
    #[error("chart {chart} is not defined on region {region}")]
    ChartRegion { chart: ChartId, region: &'static str },
    #[error("fit error: {0}")]
    Fit(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
}

fn window(msg: String) -> SobolevError {
    SobolevError::Window(msg)
}

fn core(n: usize, s: f64) -> f64 {
    1.0 + (n as f64 - 1.0) * s
}

/// Lower end of the first reflection's `p` window, `(1+(n-1)s)/n`.
pub fn p_min_r1(n: usize, s: f64) -> f64 {
    core(n, s) / n as f64
}

/// Critical target exponent `np/(1+(n-1)s)` of the first reflection.
pub fn q_max_r1(p: f64, n: usize, s: f64) -> Result<f64, SobolevError> {
    let pm = p_min_r1(n, s);
    if !(p > pm && p.is_finite()) {
        return Err(window(format!("p={p} outside ({pm}, inf)")));
    }
    Ok(n as f64 * p / core(n, s))
}

/// Lower end of the second reflection's `p` window, `(1+(n-1)s)/(2+(n-2)s)`.
pub fn p_min_r2(n: usize, s: f64) -> f64 {
    core(n, s) / (2.0 + (n as f64 - 2.0) * s)
}

/// Critical target exponent `(1+(n-1)s)p/(1+(n-1)s+(s-1)p)` of the second reflection.
pub fn q_max_r2(p: f64, n: usize, s: f64) -> Result<f64, SobolevError> {
    let pm = p_min_r2(n, s);
    if !(p > pm && p.is_finite()) {
        return Err(window(format!("p={p} outside ({pm}, inf)")));
    }
    let c = core(n, s);
    Ok(c * p / (c + (s - 1.0) * p))
}

/// The exponent where both critical curves reach `n - 1`.
///
/// This is `(n-1)(1+(n-1)s)/n`, the source exponent of the borderline
/// operator; the lower end `(1+(n-1)s)/n` of the first window is a
/// different number.
pub fn p_star(n: usize, s: f64) -> f64 {
    (n as f64 - 1.0) * core(n, s) / n as f64
}

/// Exponent `p/(p+1-n)` inherited by an inverse map.
pub fn dual_exponent(p: f64, n: usize) -> Result<f64, SobolevError> {
    let m = n as f64 - 1.0;
    if !(p > m && p.is_finite()) {
        return Err(window(format!("p={p} must exceed n-1={m}")));
    }
    Ok(p / (p - m))
}

/// A source/target exponent pair with `1 <= q < p < inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPair {
    pub p: f64,
    pub q: f64,
}

impl ExponentPair {
    pub fn new(p: f64, q: f64) -> Result<Self, SobolevError> {
        if !(q >= 1.0 && q < p && p.is_finite()) {
            return Err(window(format!("need 1 <= q < p < inf, got p={p}, q={q}")));
        }
        Ok(Self { p, q })
    }

    /// Power of `|Df|` in the distortion integrand, `pq/(p-q)`.
    pub fn norm_power(&self) -> f64 {
        self.p * self.q / (self.p - self.q)
    }

    /// Power of `|J|` in the distortion integrand, `q/(p-q)`.
    pub fn det_power(&self) -> f64 {
        self.q / (self.p - self.q)
    }
}

/// Power `e` with shell-k contribution `~ 2^{-k(e+1)}`; convergent iff `e > -1`.
///
/// Region E integrates a power of `|x|` over `|t|^s < |x| < 2^{-s}` first;
/// that inner integral stays bounded when the power is integrable at the
/// origin, so the exponent is capped at 0 there.
pub fn predicted_shell_exponent(region: Region, p: f64, q: f64, n: usize, s: f64) -> Result<f64, SobolevError> {
    let pair = ExponentPair::new(p, q)?;
    let m = n as f64 - 1.0;
    let e = match region {
        Region::A | Region::B | Region::C => m - m * (s - 1.0) * pair.det_power(),
        Region::D => m * s,
        Region::E => (m * s - (s - 1.0) * pair.norm_power()).min(0.0),
        _ => return Err(SobolevError::UnsupportedRegion { region: region.name() }),
    };
    Ok(e)
}

/// Per-shell contributions to a nonnegative integral, kept in log space.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellSum {
    ks: Vec<u32>,
    log_contributions: Vec<f64>,
}

impl ShellSum {
    /// Builds a sum from `(k, ln contribution)` pairs in ascending `k`.
    pub fn from_logs(ks: Vec<u32>, log_contributions: Vec<f64>) -> Self {
        assert_eq!(ks.len(), log_contributions.len());
        Self { ks, log_contributions }
    }

    pub fn from_contributions(ks: Vec<u32>, contributions: &[f64]) -> Self {
        Self::from_logs(ks, contributions.iter().map(|c| c.ln()).collect())
    }

    /// Shell-wise sum of several integrals over the same shells.
    pub fn combine(parts: &[ShellSum]) -> ShellSum {
        let ks = parts[0].ks.clone();
        let logs = (0..ks.len())
            .map(|i| log_sum_exp(parts.iter().map(|p| p.log_contributions[i])))
            .collect();
        ShellSum::from_logs(ks, logs)
    }

    pub fn shells(&self) -> &[u32] {
        &self.ks
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    pub fn log_contributions(&self) -> &[f64] {
        &self.log_contributions
    }

    pub fn contributions(&self) -> Vec<f64> {
        self.log_contributions.iter().map(|l| l.exp()).collect()
    }

    pub fn log_partial_sums(&self) -> Vec<f64> {
        let mut acc = f64::NEG_INFINITY;
        self.log_contributions
            .iter()
            .map(|&l| {
                acc = log_add(acc, l);
                acc
            })
            .collect()
    }

    pub fn partial_sums(&self) -> Vec<f64> {
        self.log_partial_sums().iter().map(|l| l.exp()).collect()
    }

    pub fn log_total(&self) -> f64 {
        log_sum_exp(self.log_contributions.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.log_total().exp()
    }

    /// `ln(c_k / c_{k-1})` for consecutive shells.
    pub fn log_ratios(&self) -> Vec<f64> {
        self.log_contributions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.log_ratios().iter().map(|l| l.exp()).collect()
    }

    /// Least-squares slope of `log2 c_k` against `k` over the last `tail` shells.
    pub fn log2_slope(&self, tail: usize) -> Result<f64, SobolevError> {
        let start = self.len().saturating_sub(tail);
        let pairs: Vec<(f64, f64)> = (start..self.len())
            .map(|i| (self.ks[i] as f64, self.log_contributions[i] / std::f64::consts::LN_2))
            .collect();
        linear_fit(&pairs).map(|f| f.slope)
    }

    pub fn verdict(&self) -> Verdict {
        convergence_verdict(self)
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln Σ exp(v_i)` without overflow.
pub fn log_sum_exp<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let v: Vec<f64> = values.into_iter().collect();
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + v.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VerdictKind {
    Convergent,
    Divergent,
    Inconclusive,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VerdictKind::Convergent => "Convergent",
            VerdictKind::Divergent => "Divergent",
            VerdictKind::Inconclusive => "Inconclusive",
        };
        f.write_str(s)
    }
}

/// Classification of a shell sum plus the geometric-mean tail ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub decay_ratio: f64,
}

/// Reads the tail of a shell sum.
///
/// Convergent when the last [`TAIL`] ratios are all at most [`R_CONV`];
/// divergent when they are all at least [`R_DIV`] or the partial sum has
/// grown by [`CAP`] over the first shell. The cap is relative so that an
/// integrand with a large constant factor is not mistaken for blow-up.
pub fn convergence_verdict(sum: &ShellSum) -> Verdict {
    let logs = sum.log_contributions();
    if logs.iter().all(|l| *l == f64::NEG_INFINITY) {
        return Verdict { kind: VerdictKind::Convergent, decay_ratio: 0.0 };
    }
    let lr = sum.log_ratios();
    let tail = &lr[lr.len().saturating_sub(TAIL)..];
    let decay_ratio = if tail.is_empty() { f64::NAN } else { (tail.iter().sum::<f64>() / tail.len() as f64).exp() };
    if sum.len() < MIN_SHELLS {
        return Verdict { kind: VerdictKind::Inconclusive, decay_ratio };
    }
    let kind = if tail.iter().all(|l| l.exp() <= R_CONV) {
        VerdictKind::Convergent
    } else {
        let first = logs.iter().copied().find(|l| *l > f64::NEG_INFINITY).unwrap_or(f64::NEG_INFINITY);
        let growth = sum.log_total() - first;
        if tail.iter().all(|l| l.exp() >= R_DIV) || growth > CAP.ln() {
            VerdictKind::Divergent
        } else {
            VerdictKind::Inconclusive
        }
    };
    Verdict { kind, decay_ratio }
}

fn region_piece(chart: ChartId, region: Region) -> Result<Piece, SobolevError> {
    let piece = match region {
        Region::A => Piece::A,
        Region::B => Piece::B,
        Region::C => Piece::C,
        Region::D => Piece::D,
        Region::E => Piece::E,
        Region::Inner1 => Piece::Inner1,
        Region::Inner2 => Piece::Inner2,
        Region::Inner3 => Piece::Inner3,
        Region::Cusp => return Err(SobolevError::ChartRegion { chart, region: region.name() }),
    };
    if piece.chart() != chart {
        return Err(SobolevError::ChartRegion { chart, region: region.name() });
    }
    Ok(piece)
}

/// Whether `z` is a usable quadrature node of `region ∩ shell`: it lies in
/// the region and, when a chart is given, away from its interfaces.
pub(crate) fn accepts(params: &CuspParams, region: Region, shell: Shell, chart: Option<ChartId>, z: &Point) -> bool {
    if !shell.contains(region.scale_of(z.profile())) {
        return false;
    }
    if classify(params, region.scheme(), z) != Ok(region.label()) {
        return false;
    }
    let Some(chart) = chart else { return true };
    matches!(locate(chart, params, z), Ok(Location::Piece(piece)) if interface_gap(piece, params, z) > INTERFACE_MARGIN)
}

struct ShellNodes {
    k: u32,
    ln_op: Vec<f64>,
    ln_det: Vec<f64>,
    ln_w: Vec<f64>,
}

/// Quadrature nodes of one chart on one region, with `ln |Df|`, `ln |J|`
/// and `ln weight` cached so many exponent pairs can reuse them.
pub struct DistortionSampler {
    shells: Vec<ShellNodes>,
}

impl DistortionSampler {
    pub fn new(
        chart: ChartId,
        params: &CuspParams,
        region: Region,
        shells: ShellRange,
        samples: usize,
        seed: u64,
    ) -> Result<Self, SobolevError> {
        let piece = region_piece(chart, region)?;
        let list: Vec<Shell> = shells.shells().collect();
        let nodes: Result<Vec<ShellNodes>, SobolevError> = list
            .par_iter()
            .map(|&shell| {
                let pts = sample_weighted(params, region, shell, samples, seed, |z| {
                    accepts(params, region, shell, Some(chart), z)
                })?;
                let mut node = ShellNodes {
                    k: shell.k(),
                    ln_op: Vec::with_capacity(samples),
                    ln_det: Vec::with_capacity(samples),
                    ln_w: Vec::with_capacity(samples),
                };
                for (z, w) in pts {
                    let r = z.radius();
                    let (lo, ld) = piece.profile(params, z.t, r).log_norms(params.m(), r);
                    node.ln_op.push(lo);
                    node.ln_det.push(ld);
                    node.ln_w.push(w.ln());
                }
                Ok(node)
            })
            .collect();
        Ok(Self { shells: nodes? })
    }

    /// Shell sums of `∫ |Df|^{pq/(p-q)} / |J|^{q/(p-q)}`.
    pub fn integral(&self, p: f64, q: f64) -> Result<ShellSum, SobolevError> {
        let pair = ExponentPair::new(p, q)?;
        let (a, g) = (pair.norm_power(), pair.det_power());
        let logs = self
            .shells
            .iter()
            .map(|s| log_sum_exp((0..s.ln_w.len()).map(|i| a * s.ln_op[i] - g * s.ln_det[i] + s.ln_w[i])))
            .collect();
        Ok(ShellSum::from_logs(self.shells.iter().map(|s| s.k).collect(), logs))
    }

    /// Largest `|Df|` seen in each shell.
    pub fn shell_max_norm(&self) -> Vec<f64> {
        self.shells.iter().map(|s| s.ln_op.iter().copied().fold(f64::NEG_INFINITY, f64::max).exp()).collect()
    }
}

/// Stratified estimate of the `(p, q)` distortion integral of `chart` over `region`.
#[allow(clippy::too_many_arguments)]
pub fn distortion_integral(
    chart: ChartId,
    params: &CuspParams,
    region: Region,
    p: f64,
    q: f64,
    shells: ShellRange,
    samples: usize,
    seed: u64,
) -> Result<ShellSum, SobolevError> {
    ExponentPair::new(p, q)?;
    DistortionSampler::new(chart, params, region, shells, samples, seed)?.integral(p, q)
}

/// Shell sums of `∫ |f(z)|` over `region`, with `f` returning `ln |f|`.
pub(crate) fn shell_integral<F>(
    params: &CuspParams,
    region: Region,
    chart: Option<ChartId>,
    shells: ShellRange,
    samples: usize,
    seed: u64,
    log_integrand: F,
) -> Result<ShellSum, SobolevError>
where
    F: Fn(&Point) -> Result<f64, SobolevError> + Sync,
{
    let list: Vec<Shell> = shells.shells().collect();
    let logs: Result<Vec<f64>, SobolevError> = list
        .par_iter()
        .map(|&shell| {
            let pts = match sample_weighted(params, region, shell, samples, seed, |z| accepts(params, region, shell, chart, z)) {
                Err(GeometryError::EmptyRegion { .. }) => return Ok(f64::NEG_INFINITY),
                other => other?,
            };
            let mut terms = Vec::with_capacity(pts.len());
            for (z, w) in pts {
                terms.push(log_integrand(&z)? + w.ln());
            }
            Ok(log_sum_exp(terms))
        })
        .collect();
    Ok(ShellSum::from_logs(list.iter().map(|s| s.k()).collect(), logs?))
}

/// Shell sums of `∫ |Du|^p` over `region`.
pub fn sobolev_seminorm(
    u: &TestFunction,
    params: &CuspParams,
    region: Region,
    p: f64,
    shells: ShellRange,
    samples: usize,
    seed: u64,
) -> Result<ShellSum, SobolevError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(window(format!("p={p} must be >= 1")));
    }
    shell_integral(params, region, None, shells, samples, seed, |z| Ok(p * norm(&u.gradient(z)).ln()))
}

/// Shell sums of `∫ |u|^p` over `region`.
pub fn lebesgue_norm(
    u: &TestFunction,
    params: &CuspParams,
    region: Region,
    p: f64,
    shells: ShellRange,
    samples: usize,
    seed: u64,
) -> Result<ShellSum, SobolevError> {
    shell_integral(params, region, None, shells, samples, seed, |z| Ok(p * u.value(z).abs().ln()))
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Least-squares line through `(ln scale, ln value)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

fn linear_fit(pairs: &[(f64, f64)]) -> Result<Fit, SobolevError> {
    if pairs.len() < 3 {
        return Err(SobolevError::Fit(format!("need at least 3 points, got {}", pairs.len())));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) || !sxy.is_finite() {
        return Err(SobolevError::Fit("degenerate abscissae".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pairs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>() / n).sqrt();
    Ok(Fit { slope, intercept, residual })
}

/// Log-log least squares of `value` against `scale`.
pub fn scaling_fit(pairs: &[(f64, f64)]) -> Result<Fit, SobolevError> {
    if let Some(bad) = pairs.iter().find(|(a, b)| !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite())) {
        return Err(SobolevError::Fit(format!("nonpositive or non-finite pair {bad:?}")));
    }
    let logs: Vec<(f64, f64)> = pairs.iter().map(|(a, b)| (a.ln(), b.ln())).collect();
    linear_fit(&logs)
}
