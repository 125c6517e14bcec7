//! The cusp domain, the collars around its tip, region classification and
//! seeded samplers for dyadic shells.
//!
//! Coordinates split as `z = (t, x)` with `t` the axis of the cusp and
//! `x ∈ ℝ^{n-1}` the cross-section. Every set handled here is axisymmetric,
//! so most computations only look at the profile `(t, |x|)`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

/// Classification tolerance. Interfaces through the tip at slope one
/// (`|x| = |t|`) use it relative to `|z|`; interfaces that follow the cusp
/// (`|x| = t^s` and its fractions) use it relative to `t^s`, which is far
/// smaller than `|z|` near the tip.
pub const TAU: f64 = 1e-12;

/// Upper end of the collar boxes in the axial direction.
pub const HALF: f64 = 0.5;

const MAX_RESAMPLE: usize = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point has non-finite coordinates")]
    NonFinite,
    #[error("point has {got} cross-section coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shell index must be at least 1, got {0}")]
    InvalidShell(u32),
    #[error("region {label} is not sampleable under scheme {scheme}")]
    NotSampleable { label: RegionLabel, scheme: Scheme },
    #[error("region {label} has no volume in shell k={k}")]
    EmptyRegion { label: RegionLabel, k: u32 },
    #[error("could not draw an accepted sample in {label} shell k={k} after {tries} attempts")]
    SamplingExhausted { label: RegionLabel, k: u32, tries: usize },
}

/// Dimension `n ≥ 3` and cusp degree `s > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspParams {
    n: usize,
    s: f64,
}

impl CuspParams {
    pub fn new(n: usize, s: f64) -> Result<Self, GeometryError> {
        if n < 3 {
            return Err(GeometryError::InvalidParams(format!("dimension n={n} must be at least 3")));
        }
        if !(s.is_finite() && s > 1.0) {
            return Err(GeometryError::InvalidParams(format!("cusp degree s={s} must be finite and > 1")));
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Dimension of the cross-section, `n - 1`.
    pub fn m(&self) -> usize {
        self.n - 1
    }

    /// Radius of the cusp cross-section at height `t > 0`.
    pub fn cusp_radius(&self, t: f64) -> f64 {
        t.powf(self.s)
    }

    /// Cross-section radius of the collar `Δ′`, `(1/2)^s`.
    pub fn r2_radius(&self) -> f64 {
        HALF.powf(self.s)
    }
}

/// A point `(t, x)` of `ℝ × ℝ^{n-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub t: f64,
    pub x: Vec<f64>,
}

impl Point {
    pub fn new(t: f64, x: Vec<f64>) -> Self {
        Self { t, x }
    }

    /// Point on the ray through the first cross-section axis.
    pub fn on_axis_ray(params: &CuspParams, t: f64, r: f64) -> Self {
        let mut x = vec![0.0; params.m()];
        x[0] = r;
        Self { t, x }
    }

    /// Builds a point from a profile radius and a unit direction.
    pub fn from_profile(t: f64, r: f64, dir: &[f64]) -> Self {
        Self { t, x: dir.iter().map(|d| r * d).collect() }
    }

    /// Flat coordinate vector `(t, x_1, ..., x_{n-1})`.
    pub fn from_coords(c: &[f64]) -> Self {
        Self { t: c[0], x: c[1..].to_vec() }
    }

    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.x.len() + 1);
        c.push(self.t);
        c.extend_from_slice(&self.x);
        c
    }

    pub fn dim(&self) -> usize {
        self.x.len() + 1
    }

    pub fn radius(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        (self.t * self.t + self.x.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn profile(&self) -> ProfilePoint {
        ProfilePoint { t: self.t, r: self.radius() }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        let dt = self.t - other.t;
        let dx: f64 = self.x.iter().zip(&other.x).map(|(a, b)| (a - b) * (a - b)).sum();
        (dt * dt + dx).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    pub(crate) fn check(&self, params: &CuspParams) -> Result<(), GeometryError> {
        if self.x.len() != params.m() {
            return Err(GeometryError::DimensionMismatch { expected: params.m(), got: self.x.len() });
        }
        if !self.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        Ok(())
    }
}

/// Axisymmetric reduction `(t, r = |x|)` of a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub t: f64,
    pub r: f64,
}

/// Which of the two reflections (and hence which collar) is in use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    R1,
    R2,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::R1 => write!(f, "r1"),
            Scheme::R2 => write!(f, "r2"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegionLabel {
    CuspInterior,
    BallInterior,
    BoundaryCusp,
    RegionA,
    RegionB,
    RegionC,
    RegionD,
    RegionE,
    InnerPiece1,
    InnerPiece2,
    InnerPiece3,
    OutsideNeighborhood,
    Origin,
}

impl RegionLabel {
    pub const ALL: [RegionLabel; 13] = [
        RegionLabel::CuspInterior,
        RegionLabel::BallInterior,
        RegionLabel::BoundaryCusp,
        RegionLabel::RegionA,
        RegionLabel::RegionB,
        RegionLabel::RegionC,
        RegionLabel::RegionD,
        RegionLabel::RegionE,
        RegionLabel::InnerPiece1,
        RegionLabel::InnerPiece2,
        RegionLabel::InnerPiece3,
        RegionLabel::OutsideNeighborhood,
        RegionLabel::Origin,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RegionLabel::CuspInterior => "CuspInterior",
            RegionLabel::BallInterior => "BallInterior",
            RegionLabel::BoundaryCusp => "BoundaryCusp",
            RegionLabel::RegionA => "RegionA",
            RegionLabel::RegionB => "RegionB",
            RegionLabel::RegionC => "RegionC",
            RegionLabel::RegionD => "RegionD",
            RegionLabel::RegionE => "RegionE",
            RegionLabel::InnerPiece1 => "InnerPiece1",
            RegionLabel::InnerPiece2 => "InnerPiece2",
            RegionLabel::InnerPiece3 => "InnerPiece3",
            RegionLabel::OutsideNeighborhood => "OutsideNeighborhood",
            RegionLabel::Origin => "Origin",
        }
    }

    fn index(&self) -> u64 {
        RegionLabel::ALL.iter().position(|l| l == self).unwrap_or(0) as u64
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Dyadic shell `[2^{-k-1}, 2^{-k}]` of a region's scale variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shell {
    k: u32,
}

impl Shell {
    pub fn new(k: u32) -> Result<Self, GeometryError> {
        if k == 0 || k > 1000 {
            return Err(GeometryError::InvalidShell(k));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn lo(&self) -> f64 {
        2f64.powi(-(self.k as i32) - 1)
    }

    pub fn hi(&self) -> f64 {
        2f64.powi(-(self.k as i32))
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo() && v <= self.hi()
    }
}

/// Inclusive range of shell indices `k_min..=k_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShellRange {
    pub k_min: u32,
    pub k_max: u32,
}

impl ShellRange {
    pub fn new(k_min: u32, k_max: u32) -> Result<Self, GeometryError> {
        Shell::new(k_min)?;
        Shell::new(k_max)?;
        if k_max < k_min {
            return Err(GeometryError::InvalidParams(format!("empty shell range {k_min}..{k_max}")));
        }
        Ok(Self { k_min, k_max })
    }

    pub fn shells(&self) -> impl Iterator<Item = Shell> {
        (self.k_min..=self.k_max).map(|k| Shell { k })
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

fn in_ball(t: f64, r: f64) -> bool {
    (t - 2.0) * (t - 2.0) + r * r < 2.0
}

/// Assigns `z` to exactly one region of the chosen scheme.
///
/// Interface points go to the earlier region (A before B before C, D before
/// E, inner piece 1 before 2 before 3).
pub fn classify(params: &CuspParams, scheme: Scheme, z: &Point) -> Result<RegionLabel, GeometryError> {
    z.check(params)?;
    let ProfilePoint { t, r } = z.profile();
    let norm = t.hypot(r);
    if norm <= TAU {
        return Ok(RegionLabel::Origin);
    }
    let tol = TAU * norm;
    let ball = in_ball(t, r);

    if t > 0.0 && t <= 1.0 {
        let rc = params.cusp_radius(t);
        if (r - rc).abs() <= TAU * rc && !ball {
            return Ok(RegionLabel::BoundaryCusp);
        }
        if r < rc {
            if scheme == Scheme::R1 && t < HALF {
                return Ok(inner_piece(rc, r));
            }
            return Ok(RegionLabel::CuspInterior);
        }
    }
    if ball {
        return Ok(RegionLabel::BallInterior);
    }

    let label = match scheme {
        Scheme::R1 => {
            if t.abs() < HALF && r < HALF {
                if t <= tol && r <= -t + tol {
                    RegionLabel::RegionA
                } else if r >= t.abs() - tol {
                    RegionLabel::RegionB
                } else {
                    RegionLabel::RegionC
                }
            } else {
                RegionLabel::OutsideNeighborhood
            }
        }
        Scheme::R2 => {
            if t.abs() < HALF && r < params.r2_radius() {
                if t <= tol && r <= params.cusp_radius(t.abs()) * (1.0 + TAU) {
                    RegionLabel::RegionD
                } else {
                    RegionLabel::RegionE
                }
            } else {
                RegionLabel::OutsideNeighborhood
            }
        }
    };
    Ok(label)
}

/// Band of the cusp slice of radius `rc` containing radius `r`.
pub(crate) fn inner_piece(rc: f64, r: f64) -> RegionLabel {
    let tol = TAU * rc;
    if r <= rc / 6.0 + tol {
        RegionLabel::InnerPiece1
    } else if r <= rc / 3.0 + tol {
        RegionLabel::InnerPiece2
    } else {
        RegionLabel::InnerPiece3
    }
}

/// Regions that carry volume near the tip and can be integrated over.
///
/// `Cusp` is `Ω^s ∩ {0 < t < 1/2}`; the remaining variants are the collar
/// pieces and the three bands of `Ω^s_1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Region {
    Cusp,
    A,
    B,
    C,
    D,
    E,
    Inner1,
    Inner2,
    Inner3,
}

impl Region {
    pub const ALL: [Region; 9] = [
        Region::Cusp,
        Region::A,
        Region::B,
        Region::C,
        Region::D,
        Region::E,
        Region::Inner1,
        Region::Inner2,
        Region::Inner3,
    ];

    /// Maps a label under a scheme to the integrable region it names.
    pub fn from_label(scheme: Scheme, label: RegionLabel) -> Result<Region, GeometryError> {
        use RegionLabel as L;
        let region = match (scheme, label) {
            (Scheme::R1, L::RegionA) => Region::A,
            (Scheme::R1, L::RegionB) => Region::B,
            (Scheme::R1, L::RegionC) => Region::C,
            (Scheme::R1, L::InnerPiece1) => Region::Inner1,
            (Scheme::R1, L::InnerPiece2) => Region::Inner2,
            (Scheme::R1, L::InnerPiece3) => Region::Inner3,
            (Scheme::R2, L::RegionD) => Region::D,
            (Scheme::R2, L::RegionE) => Region::E,
            (Scheme::R2, L::CuspInterior) => Region::Cusp,
            _ => return Err(GeometryError::NotSampleable { label, scheme }),
        };
        Ok(region)
    }

    /// The scheme whose classification produces this region's label.
    pub fn scheme(&self) -> Scheme {
        match self {
            Region::Cusp | Region::D | Region::E => Scheme::R2,
            _ => Scheme::R1,
        }
    }

    pub fn label(&self) -> RegionLabel {
        match self {
            Region::Cusp => RegionLabel::CuspInterior,
            Region::A => RegionLabel::RegionA,
            Region::B => RegionLabel::RegionB,
            Region::C => RegionLabel::RegionC,
            Region::D => RegionLabel::RegionD,
            Region::E => RegionLabel::RegionE,
            Region::Inner1 => RegionLabel::InnerPiece1,
            Region::Inner2 => RegionLabel::InnerPiece2,
            Region::Inner3 => RegionLabel::InnerPiece3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Region::Cusp => "cusp",
            Region::A => "A",
            Region::B => "B",
            Region::C => "C",
            Region::D => "D",
            Region::E => "E",
            Region::Inner1 => "inner1",
            Region::Inner2 => "inner2",
            Region::Inner3 => "inner3",
        }
    }

    pub fn parse(s: &str) -> Option<Region> {
        Region::ALL.iter().copied().find(|r| r.name().eq_ignore_ascii_case(s))
    }

    /// Whether the scale variable is `|x|` rather than `|t|`.
    pub fn scales_with_radius(&self) -> bool {
        matches!(self, Region::B)
    }

    /// The scale variable of a profile point for this region.
    pub fn scale_of(&self, p: ProfilePoint) -> f64 {
        if self.scales_with_radius() {
            p.r
        } else {
            p.t.abs()
        }
    }

    /// Radial band `[lo, hi]` of the slice at scale `tau` (for B: the `t` range).
    fn slice(&self, params: &CuspParams, tau: f64) -> (f64, f64) {
        let rc = params.cusp_radius(tau);
        match self {
            Region::Cusp => (0.0, rc),
            Region::A => (0.0, tau),
            Region::B => (-tau, tau),
            Region::C => (rc, tau),
            Region::D => (0.0, rc),
            Region::E => (rc, params.r2_radius()),
            Region::Inner1 => (0.0, rc / 6.0),
            Region::Inner2 => (rc / 6.0, rc / 3.0),
            Region::Inner3 => (rc / 3.0, rc),
        }
    }

    /// Marginal density of the scale variable as a sum of `coef * τ^exp`.
    fn marginal(&self, params: &CuspParams) -> Vec<(f64, f64)> {
        let m = params.m() as f64;
        let ms = m * params.s();
        let mi = params.m() as i32;
        match self {
            Region::Cusp | Region::D => vec![(1.0, ms)],
            Region::A => vec![(1.0, m)],
            Region::B => vec![(2.0 * m, m)],
            Region::C => vec![(1.0, m), (-1.0, ms)],
            Region::E => vec![(2.0 * params.r2_radius().powi(mi), 0.0), (-2.0, ms)],
            Region::Inner1 => vec![(6f64.powi(-mi), ms)],
            Region::Inner2 => vec![(3f64.powi(-mi) - 6f64.powi(-mi), ms)],
            Region::Inner3 => vec![(1.0 - 3f64.powi(-mi), ms)],
        }
    }

    /// Exact volume of the region restricted to one shell.
    pub fn shell_measure(&self, params: &CuspParams, shell: Shell) -> f64 {
        let omega = unit_ball_volume(params.m());
        let (a, b) = (shell.lo(), shell.hi());
        let mass: f64 = self.marginal(params).iter().map(|&(c, e)| c * power_integral(e, a, b)).sum();
        omega * mass
    }

    /// Exact volume of the whole region inside `0 < scale < 1/2`.
    pub fn total_measure(&self, params: &CuspParams) -> f64 {
        let omega = unit_ball_volume(params.m());
        let mass: f64 = self.marginal(params).iter().map(|&(c, e)| c * power_integral(e, 0.0, HALF)).sum();
        omega * mass
    }

    /// Maps `(u1, u2) ∈ [0,1]²` to a profile point distributed uniformly in
    /// volume over the region's part of the shell.
    fn profile_from_unit(&self, params: &CuspParams, shell: Shell, u1: f64, u2: f64) -> ProfilePoint {
        let m = params.m() as f64;
        let (a, b) = (shell.lo(), shell.hi());
        let (sign, u1) = match self {
            Region::E if u1 < 0.5 => (-1.0, 2.0 * u1),
            Region::E => (1.0, 2.0 * u1 - 1.0),
            Region::A | Region::D => (-1.0, u1),
            _ => (1.0, u1),
        };
        let tau = invert_marginal(&self.marginal(params), a, b, u1);
        let (lo, hi) = self.slice(params, tau);
        match self {
            Region::B => ProfilePoint { t: lo + (hi - lo) * u2, r: tau },
            _ => {
                let lm = lo.powf(m);
                let r = (lm + u2 * (hi.powf(m) - lm)).powf(1.0 / m);
                ProfilePoint { t: sign * tau, r: r.clamp(lo, hi) }
            }
        }
    }
}

/// Volume of the unit ball in `ℝ^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => unit_ball_volume(d - 2) * 2.0 * std::f64::consts::PI / d as f64,
    }
}

/// `∫_a^b τ^e dτ` for `e > -1`.
fn power_integral(e: f64, a: f64, b: f64) -> f64 {
    (b.powf(e + 1.0) - a.powf(e + 1.0)) / (e + 1.0)
}

fn invert_marginal(terms: &[(f64, f64)], a: f64, b: f64, u: f64) -> f64 {
    if let [(_, e)] = terms {
        let e1 = e + 1.0;
        let lo = a.powf(e1);
        return (lo + u * (b.powf(e1) - lo)).powf(1.0 / e1).clamp(a, b);
    }
    let cdf = |x: f64| -> f64 { terms.iter().map(|&(c, e)| c * power_integral(e, a, x)).sum() };
    let target = u * cdf(b);
    let (mut lo, mut hi) = (a, b);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Closed-form volume of `label`'s region in one shell; zero when the region
/// does not reach the shell.
pub fn shell_measure(params: &CuspParams, scheme: Scheme, label: RegionLabel, shell: Shell) -> Result<f64, GeometryError> {
    if scheme == Scheme::R1 && label == RegionLabel::CuspInterior {
        return Ok(0.0);
    }
    Ok(Region::from_label(scheme, label)?.shell_measure(params, shell))
}

/// Stable 64-bit mix of the sampling coordinates.
pub fn shell_seed(seed: u64, k: u32, label: RegionLabel) -> u64 {
    let mut h = splitmix(seed ^ 0x5EED_C0DE_0000_0000);
    h = splitmix(h ^ k as u64);
    splitmix(h ^ (label.index() << 32))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn random_direction<R: Rng>(rng: &mut R, m: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

/// Latin hypercube design on the unit square: every one of the `count`
/// strata of each coordinate holds exactly one point. Integrands here vary
/// mostly along the scale coordinate, which this stratifies finely.
fn stratified_unit_square<R: Rng>(rng: &mut R, count: usize) -> Vec<(f64, f64)> {
    let mut perm: Vec<usize> = (0..count).collect();
    for i in (1..count).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    (0..count)
        .map(|i| {
            let u1 = (i as f64 + rng.random::<f64>()) / count as f64;
            let u2 = (perm[i] as f64 + rng.random::<f64>()) / count as f64;
            (u1, u2)
        })
        .collect()
}

/// Draws `count` volume-uniform points of `region ∩ shell` that pass `accept`.
///
/// Rejected draws are replaced by fresh unstratified draws, at most
/// `MAX_RESAMPLE` times per point.
pub(crate) fn sample_region_with<F>(
    params: &CuspParams,
    region: Region,
    shell: Shell,
    count: usize,
    seed: u64,
    mut accept: F,
) -> Result<Vec<Point>, GeometryError>
where
    F: FnMut(&Point) -> bool,
{
    let label = region.label();
    check_reachable(label, shell)?;
    let mut rng = ChaCha8Rng::seed_from_u64(shell_seed(seed, shell.k(), label));
    let design = stratified_unit_square(&mut rng, count);
    let mut out = Vec::with_capacity(count);
    for (u1, u2) in design {
        let dir = random_direction(&mut rng, params.m());
        let pp = region.profile_from_unit(params, shell, u1, u2);
        let mut z = Point::from_profile(pp.t, pp.r, &dir);
        let mut tries = 0;
        while !accept(&z) {
            tries += 1;
            if tries > MAX_RESAMPLE {
                return Err(GeometryError::SamplingExhausted { label, k: shell.k(), tries });
            }
            let dir = random_direction(&mut rng, params.m());
            let pp = region.profile_from_unit(params, shell, rng.random(), rng.random());
            z = Point::from_profile(pp.t, pp.r, &dir);
        }
        out.push(z);
    }
    Ok(out)
}

/// Shells inside the tip ball `|z| <= TAU` hold nothing but the origin.
fn check_reachable(label: RegionLabel, shell: Shell) -> Result<(), GeometryError> {
    if shell.hi() <= TAU {
        return Err(GeometryError::EmptyRegion { label, k: shell.k() });
    }
    Ok(())
}

/// Draws `count` points of `region ∩ shell` with quadrature weights whose
/// sum estimates the shell volume, so `Σ w_i f(z_i)` estimates `∫ f`.
///
/// Most regions are sampled uniformly in volume. Region E is sampled
/// log-uniformly in `|x|`: its slices run from `|t|^s` out to the collar
/// wall, and integrands singular at the inner edge would otherwise never be
/// seen at deep shells.
pub(crate) fn sample_weighted<F>(
    params: &CuspParams,
    region: Region,
    shell: Shell,
    count: usize,
    seed: u64,
    mut accept: F,
) -> Result<Vec<(Point, f64)>, GeometryError>
where
    F: FnMut(&Point) -> bool,
{
    if region != Region::E {
        let w = region.shell_measure(params, shell) / count as f64;
        let pts = sample_region_with(params, region, shell, count, seed, accept)?;
        return Ok(pts.into_iter().map(|z| (z, w)).collect());
    }
    let label = region.label();
    check_reachable(label, shell)?;
    let m = params.m();
    let sphere = m as f64 * unit_ball_volume(m);
    let (a, b) = (shell.lo(), shell.hi());
    let outer = params.r2_radius();
    let draw = |u1: f64, u2: f64| -> (f64, f64, f64) {
        let (sign, u1) = if u1 < 0.5 { (-1.0, 2.0 * u1) } else { (1.0, 2.0 * u1 - 1.0) };
        let tau = a + (b - a) * u1;
        let inner = params.cusp_radius(tau);
        let span = (outer / inner).ln();
        let r = inner * (u2 * span).exp();
        let w = sphere * r.powi(m as i32) * 2.0 * (b - a) * span / count as f64;
        (sign * tau, r.clamp(inner, outer), w)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(shell_seed(seed, shell.k(), label));
    let design = stratified_unit_square(&mut rng, count);
    let mut out = Vec::with_capacity(count);
    for (u1, u2) in design {
        let dir = random_direction(&mut rng, m);
        let (t, r, w) = draw(u1, u2);
        let mut z = (Point::from_profile(t, r, &dir), w);
        let mut tries = 0;
        while !accept(&z.0) {
            tries += 1;
            if tries > MAX_RESAMPLE {
                return Err(GeometryError::SamplingExhausted { label, k: shell.k(), tries });
            }
            let dir = random_direction(&mut rng, m);
            let (t, r, w) = draw(rng.random(), rng.random());
            z = (Point::from_profile(t, r, &dir), w);
        }
        out.push(z);
    }
    Ok(out)
}

/// Seeded points of a labelled region inside one dyadic shell.
///
/// Each returned point classifies to `label` under `scheme` and has its
/// scale variable inside the shell. The stream depends only on
/// `(seed, shell.k, label)`.
pub fn sample_region(
    params: &CuspParams,
    scheme: Scheme,
    label: RegionLabel,
    shell: Shell,
    count: usize,
    seed: u64,
) -> Result<Vec<Point>, GeometryError> {
    if scheme == Scheme::R1 && label == RegionLabel::CuspInterior {
        // the part of the cusp outside Ω^s_1 sits at t ≥ 1/2
        return Err(GeometryError::EmptyRegion { label, k: shell.k() });
    }
    let region = Region::from_label(scheme, label)?;
    sample_region_with(params, region, shell, count, seed, |z| {
        classify(params, scheme, z).map(|l| l == label).unwrap_or(false)
            && shell.contains(region.scale_of(z.profile()))
    })
}
