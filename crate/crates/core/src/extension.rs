//! Extension by reflection: `u ↦ u∘R` across the cusp boundary, the cutoff
//! that localises it, analytic test functions, and the experiments built on
//! them.

use std::fmt;

use thiserror::Error;

use crate::geometry::{classify, CuspParams, GeometryError, Point, Region, RegionLabel, Scheme, ShellRange, HALF};
use crate::reflections::{apply, differential, ChartId, ReflectionError};
use crate::sobolev::{norm, scaling_fit, shell_integral, ShellSum, SobolevError, Verdict};

/// Width of the collar over which the cutoff falls from 1 to 0.
pub const CUTOFF_WIDTH: f64 = 0.125;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtensionError {
    #[error("inward extension needs an inner chart, which only the first reflection has")]
    NoInnerChart,
    #[error("point in region {label} has no extension formula for this direction")]
    Domain { label: RegionLabel },
    #[error("{0}")]
    NotAdmissible(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("cannot parse test function {0:?}")]
    Parse(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Reflection(#[from] ReflectionError),
    #[error(transparent)]
    Sobolev(#[from] SobolevError),
}

/// Analytic test functions with exact gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    /// `|t|^{-α}`.
    PowerAlpha(f64),
    /// `t` clamped to `[0, 1]`.
    ClampT,
    /// `exp(-1/(1-ρ²))` with `ρ = |z - center| / radius`, zero for `ρ ≥ 1`.
    RadialBump { center: Point, radius: f64 },
    Constant(f64),
}

impl TestFunction {
    pub fn value(&self, z: &Point) -> f64 {
        match self {
            TestFunction::PowerAlpha(a) => z.t.abs().powf(-a),
            TestFunction::ClampT => z.t.clamp(0.0, 1.0),
            TestFunction::RadialBump { center, radius } => {
                let rho2 = (z.distance(center) / radius).powi(2);
                if rho2 < 1.0 {
                    (-1.0 / (1.0 - rho2)).exp()
                } else {
                    0.0
                }
            }
            TestFunction::Constant(c) => *c,
        }
    }

    pub fn gradient(&self, z: &Point) -> Vec<f64> {
        let mut g = vec![0.0; z.dim()];
        match self {
            TestFunction::PowerAlpha(a) => {
                g[0] = -a * z.t.signum() * z.t.abs().powf(-a - 1.0);
            }
            TestFunction::ClampT => {
                if z.t > 0.0 && z.t < 1.0 {
                    g[0] = 1.0;
                }
            }
            TestFunction::RadialBump { center, radius } => {
                let rho2 = (z.distance(center) / radius).powi(2);
                if rho2 < 1.0 {
                    let w = 1.0 - rho2;
                    let k = -2.0 * self.value(z) / (radius * radius * w * w);
                    let (zc, cc) = (z.coords(), center.coords());
                    for i in 0..g.len() {
                        g[i] = k * (zc[i] - cc[i]);
                    }
                }
            }
            TestFunction::Constant(_) => {}
        }
        g
    }

    /// Parses `power:<α>`, `clamp`, `const:<c>` or `bump:<radius>:<t>,<x1>,...`.
    pub fn parse(text: &str) -> Result<Self, ExtensionError> {
        let err = || ExtensionError::Parse(text.to_string());
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err());
        let mut parts = text.splitn(3, ':');
        let head = parts.next().unwrap_or_default().trim().to_ascii_lowercase();
        let f = match head.as_str() {
            "power" => {
                let a = num(parts.next().ok_or_else(err)?)?;
                if !(a > 0.0 && a.is_finite()) {
                    return Err(err());
                }
                TestFunction::PowerAlpha(a)
            }
            "clamp" => TestFunction::ClampT,
            "const" => TestFunction::Constant(num(parts.next().ok_or_else(err)?)?),
            "bump" => {
                let radius = num(parts.next().ok_or_else(err)?)?;
                let c: Result<Vec<f64>, _> = parts.next().ok_or_else(err)?.split(',').map(num).collect();
                let c = c?;
                if c.len() < 2 || !(radius > 0.0) {
                    return Err(err());
                }
                TestFunction::RadialBump { center: Point::from_coords(&c), radius }
            }
            _ => return Err(err()),
        };
        Ok(f)
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::PowerAlpha(a) => write!(f, "power:{a}"),
            TestFunction::ClampT => write!(f, "clamp"),
            TestFunction::RadialBump { center, radius } => {
                let c: Vec<String> = center.coords().iter().map(|v| v.to_string()).collect();
                write!(f, "bump:{radius}:{}", c.join(","))
            }
            TestFunction::Constant(c) => write!(f, "const:{c}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Extend functions on the cusp outward through the outer chart.
    FromInside,
    /// Extend functions on the complement inward through the inner chart.
    FromOutside,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtensionSpec {
    scheme: Scheme,
    direction: Direction,
}

impl ExtensionSpec {
    pub fn new(scheme: Scheme, direction: Direction) -> Result<Self, ExtensionError> {
        if scheme == Scheme::R2 && direction == Direction::FromOutside {
            return Err(ExtensionError::NoInnerChart);
        }
        Ok(Self { scheme, direction })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn chart(&self) -> ChartId {
        match (self.scheme, self.direction) {
            (Scheme::R1, Direction::FromInside) => ChartId::R1Outer,
            (Scheme::R2, _) => ChartId::R2Outer,
            (Scheme::R1, Direction::FromOutside) => ChartId::R1Inner,
        }
    }

    /// Regions the reflected function is evaluated on.
    pub fn extension_regions(&self) -> &'static [Region] {
        match self.chart() {
            ChartId::R1Outer => &[Region::A, Region::B, Region::C],
            ChartId::R2Outer => &[Region::D, Region::E],
            ChartId::R1Inner => &[Region::Inner1, Region::Inner2, Region::Inner3],
        }
    }

    /// Regions near the tip where `u` lives natively.
    pub fn native_regions(&self) -> &'static [Region] {
        match self.direction {
            Direction::FromInside => &[Region::Cusp],
            Direction::FromOutside => &[Region::A, Region::B, Region::C],
        }
    }

    fn side(&self, params: &CuspParams, z: &Point) -> Result<Side, ExtensionError> {
        let label = classify(params, self.scheme, z)?;
        use RegionLabel as L;
        let side = match (self.direction, label) {
            (_, L::BoundaryCusp | L::Origin) => Side::Boundary(label),
            (Direction::FromInside, L::CuspInterior | L::BallInterior) => Side::Native,
            (Direction::FromInside, L::InnerPiece1 | L::InnerPiece2 | L::InnerPiece3) => Side::Native,
            (Direction::FromInside, L::OutsideNeighborhood) => return Err(ExtensionError::Domain { label }),
            (Direction::FromInside, _) => Side::Reflected,
            (Direction::FromOutside, L::RegionA | L::RegionB | L::RegionC | L::OutsideNeighborhood) => Side::Native,
            (Direction::FromOutside, L::CuspInterior) if z.t <= HALF => Side::Reflected,
            (Direction::FromOutside, L::InnerPiece1 | L::InnerPiece2 | L::InnerPiece3) => Side::Reflected,
            (Direction::FromOutside, _) => return Err(ExtensionError::Domain { label }),
        };
        Ok(side)
    }
}

enum Side {
    Native,
    Reflected,
    Boundary(RegionLabel),
}

/// Value of the extended function at `z`: `u` on the native side, `u∘R`
/// across the boundary, and 0 on the boundary itself.
pub fn extend_eval(spec: &ExtensionSpec, params: &CuspParams, u: &TestFunction, z: &Point) -> Result<f64, ExtensionError> {
    match spec.side(params, z)? {
        Side::Native => Ok(u.value(z)),
        Side::Boundary(_) => Ok(0.0),
        Side::Reflected => Ok(u.value(&apply(spec.chart(), params, z)?)),
    }
}

/// Gradient of the extended function at a point interior to one piece.
pub fn extend_gradient(
    spec: &ExtensionSpec,
    params: &CuspParams,
    u: &TestFunction,
    z: &Point,
) -> Result<Vec<f64>, ExtensionError> {
    match spec.side(params, z)? {
        Side::Native => Ok(u.gradient(z)),
        Side::Boundary(label) => Err(ReflectionError::Interface { label }.into()),
        Side::Reflected => {
            let jet = differential(spec.chart(), params, z)?;
            let du = u.gradient(&jet.image);
            let n = du.len();
            Ok((0..n).map(|j| (0..n).map(|i| du[i] * jet.differential[(i, j)]).sum()).collect())
        }
    }
}

fn in_closed_cusp(params: &CuspParams, t: f64, r: f64) -> bool {
    let ball = (t - 2.0) * (t - 2.0) + r * r <= 2.0;
    let horn = (0.0..=1.0).contains(&t) && r <= params.cusp_radius(t);
    ball || horn
}

/// Lipschitz cutoff: 1 on the closed domain, falling linearly with the
/// distance to the complement of the collar over a width of
/// [`CUTOFF_WIDTH`], 0 outside the collar.
pub fn cutoff_psi(params: &CuspParams, scheme: Scheme, z: &Point) -> Result<f64, ExtensionError> {
    z.check(params)?;
    let (t, r) = (z.t, z.radius());
    if in_closed_cusp(params, t, r) {
        return Ok(1.0);
    }
    let wall = match scheme {
        Scheme::R1 => HALF,
        Scheme::R2 => params.r2_radius(),
    };
    if !(t.abs() < HALF && r < wall) {
        return Ok(0.0);
    }
    // Nearest point of the complement: the back face, the side wall, or
    // the front face beyond the cusp, whose nearest point below the cusp
    // radius is the rim (1/2, 2^{-s}).
    let rim = params.r2_radius();
    let front = if r >= rim { HALF - t } else { (HALF - t).hypot(rim - r) };
    let d = (t + HALF).min(wall - r).min(front);
    Ok((d / CUTOFF_WIDTH).clamp(0.0, 1.0))
}

/// Whether `|t|^{-α}` lies in `W^{1,p}` of the cusp below `t = 1/2`.
pub fn membership_oracle(alpha: f64, p: f64, n: usize, s: f64) -> bool {
    alpha + 1.0 < (1.0 + (n as f64 - 1.0) * s) / p
}

/// One row of an extension experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionRow {
    pub k: u32,
    pub value_term: f64,
    pub grad_term: f64,
    pub partial: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionReport {
    pub rows: Vec<ExtensionRow>,
    pub value: ShellSum,
    pub grad: ShellSum,
    pub verdict: Verdict,
    /// `‖u∘R‖_q + ‖D(u∘R)‖_q` over the reflected side.
    pub extended_norm: f64,
    /// `‖u‖_p + ‖Du‖_p` over the native side near the tip.
    pub source_norm: f64,
    pub ratio: f64,
}

/// Shell-resolved `L^q` norms of the extended function and its gradient
/// over the reflected side, compared with the `W^{1,p}` norm of `u`.
#[allow(clippy::too_many_arguments)]
pub fn extension_norm_experiment(
    spec: &ExtensionSpec,
    params: &CuspParams,
    u: &TestFunction,
    p: f64,
    q: f64,
    shells: ShellRange,
    samples: usize,
    seed: u64,
) -> Result<ExtensionReport, ExtensionError> {
    if !(p >= 1.0 && q >= 1.0 && p.is_finite() && q.is_finite()) {
        return Err(SobolevError::Window(format!("need p, q >= 1, got p={p}, q={q}")).into());
    }
    if let TestFunction::PowerAlpha(a) = u {
        if spec.direction == Direction::FromInside && !membership_oracle(*a, p, params.n(), params.s()) {
            return Err(ExtensionError::NotAdmissible(format!(
                "power:{a} is not in W^(1,{p}) of the cusp for n={}, s={}",
                params.n(),
                params.s()
            )));
        }
    }
    let chart = spec.chart();
    let mut values = Vec::new();
    let mut grads = Vec::new();
    for &region in spec.extension_regions() {
        let v = shell_integral(params, region, Some(chart), shells, samples, seed, |z| {
            extend_eval(spec, params, u, z).map(|v| q * v.abs().ln()).map_err(to_sobolev)
        })?;
        let g = shell_integral(params, region, Some(chart), shells, samples, seed, |z| {
            extend_gradient(spec, params, u, z).map(|g| q * norm(&g).ln()).map_err(to_sobolev)
        })?;
        values.push(v);
        grads.push(g);
    }
    let value = ShellSum::combine(&values);
    let grad = ShellSum::combine(&grads);
    let both = ShellSum::combine(&[value.clone(), grad.clone()]);

    let (vc, gc, partials) = (value.contributions(), grad.contributions(), both.partial_sums());
    let ks = both.shells().to_vec();
    let rows = (0..ks.len())
        .map(|i| {
            let head = ShellSum::from_logs(ks[..=i].to_vec(), both.log_contributions()[..=i].to_vec());
            ExtensionRow { k: ks[i], value_term: vc[i], grad_term: gc[i], partial: partials[i], verdict: head.verdict() }
        })
        .collect();

    let mut lp = 0.0;
    let mut semi = 0.0;
    for &region in spec.native_regions() {
        lp += shell_integral(params, region, None, shells, samples, seed, |z| Ok(p * u.value(z).abs().ln()))?.total();
        semi += shell_integral(params, region, None, shells, samples, seed, |z| Ok(p * norm(&u.gradient(z)).ln()))?
            .total();
    }
    let extended_norm = value.total().powf(1.0 / q) + grad.total().powf(1.0 / q);
    let source_norm = lp.powf(1.0 / p) + semi.powf(1.0 / p);
    Ok(ExtensionReport {
        rows,
        verdict: both.verdict(),
        value,
        grad,
        extended_norm,
        source_norm,
        ratio: extended_norm / source_norm,
    })
}

fn to_sobolev(e: ExtensionError) -> SobolevError {
    match e {
        ExtensionError::Reflection(r) => SobolevError::Reflection(r),
        ExtensionError::Geometry(g) => SobolevError::Geometry(g),
        ExtensionError::Sobolev(s) => s,
        other => SobolevError::Window(other.to_string()),
    }
}

/// Largest `|∇(u∘R)|` over the reflected side in each shell.
pub fn gradient_shell_maxima(
    spec: &ExtensionSpec,
    params: &CuspParams,
    u: &TestFunction,
    shells: ShellRange,
    samples: usize,
    seed: u64,
) -> Result<Vec<(u32, f64)>, ExtensionError> {
    let chart = spec.chart();
    let mut out: Vec<(u32, f64)> = shells.shells().map(|s| (s.k(), 0.0)).collect();
    for &region in spec.extension_regions() {
        for (slot, shell) in out.iter_mut().zip(shells.shells()) {
            let pts = crate::geometry::sample_weighted(params, region, shell, samples, seed, |z| {
                crate::sobolev::accepts(params, region, shell, Some(chart), z)
            })?;
            for (z, _) in pts {
                slot.1 = slot.1.max(norm(&extend_gradient(spec, params, u, &z)?));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderRow {
    pub t: f64,
    pub osc: f64,
    pub diam: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub rows: Vec<HolderRow>,
    pub fitted_exponent: f64,
    pub residual: f64,
}

const HOLDER_RAYS: usize = 64;

/// Oscillation of the inward extension of `clamp(t, 0, 1)` over the cusp
/// cross-section at each height, fitted against the cross-section diameter.
pub fn holder_probe(params: &CuspParams, t_values: &[f64]) -> Result<HolderReport, ExtensionError> {
    let mut distinct: Vec<f64> = t_values.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(ExtensionError::Degenerate(format!("need at least 3 distinct heights, got {}", distinct.len())));
    }
    if let Some(bad) = t_values.iter().find(|t| !(**t > 0.0 && **t < HALF)) {
        return Err(ExtensionError::Degenerate(format!("height {bad} outside (0, 1/2)")));
    }
    let spec = ExtensionSpec::new(Scheme::R1, Direction::FromOutside)?;
    let u = TestFunction::ClampT;
    let mut rows = Vec::with_capacity(t_values.len());
    for &t in t_values {
        let rc = params.cusp_radius(t);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..HOLDER_RAYS {
            let r = rc * (j as f64 + 0.5) / HOLDER_RAYS as f64;
            let v = extend_eval(&spec, params, &u, &Point::on_axis_ray(params, t, r))?;
            lo = lo.min(v);
            hi = hi.max(v);
        }
        rows.push(HolderRow { t, osc: hi - lo, diam: 2.0 * rc });
    }
    let pairs: Vec<(f64, f64)> = rows.iter().map(|r| (r.diam, r.osc)).collect();
    let fit = scaling_fit(&pairs)?;
    Ok(HolderReport { rows, fitted_exponent: fit.slope, residual: fit.residual })
}
