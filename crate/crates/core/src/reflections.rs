//! Piecewise charts of the two reflections, their analytic differentials,
//! finite-difference cross-checks and per-piece inverses.
//!
//! Every piece has the axisymmetric form `(t, x) ↦ (T(t, r), g(t, r)·x)`
//! with `r = |x|`, so the differential is determined by six scalars and its
//! determinant and spectral norm have closed forms.

use std::fmt;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geometry::{classify, inner_piece, CuspParams, GeometryError, Point, RegionLabel, Scheme, HALF};

/// Smallest relative gap to an interface accepted by [`differential`].
pub const INTERFACE_MARGIN: f64 = 1e-9;

/// Smallest `|det|` accepted by [`distortion`].
pub const SINGULAR_DET: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReflectionError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("point in region {label} is outside the domain of chart {chart}")]
    Domain { chart: ChartId, label: RegionLabel },
    #[error("point in region {label} is outside the image of chart {chart}")]
    Image { chart: ChartId, label: RegionLabel },
    #[error("point is within the interface margin of {label}; the differential is one-sided there")]
    Interface { label: RegionLabel },
    #[error("differential is singular (|det| = {det:e})")]
    Singular { det: f64 },
    #[error("invalid exponent p = {0}; need p >= 1")]
    Exponent(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChartId {
    R1Outer,
    R1Inner,
    R2Outer,
}

impl ChartId {
    pub const ALL: [ChartId; 3] = [ChartId::R1Outer, ChartId::R1Inner, ChartId::R2Outer];

    pub fn scheme(&self) -> Scheme {
        match self {
            ChartId::R2Outer => Scheme::R2,
            _ => Scheme::R1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChartId::R1Outer => "r1-outer",
            ChartId::R1Inner => "r1-inner",
            ChartId::R2Outer => "r2-outer",
        }
    }

    pub fn parse(s: &str) -> Option<ChartId> {
        ChartId::ALL.iter().copied().find(|c| c.name().eq_ignore_ascii_case(s))
    }

    pub fn pieces(&self) -> &'static [Piece] {
        match self {
            ChartId::R1Outer => &[Piece::A, Piece::B, Piece::C],
            ChartId::R1Inner => &[Piece::Inner1, Piece::Inner2, Piece::Inner3],
            ChartId::R2Outer => &[Piece::D, Piece::E],
        }
    }
}

impl fmt::Display for ChartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One closed-form piece of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Piece {
    A,
    B,
    C,
    D,
    E,
    Inner1,
    Inner2,
    Inner3,
}

impl Piece {
    pub const ALL: [Piece; 8] =
        [Piece::A, Piece::B, Piece::C, Piece::D, Piece::E, Piece::Inner1, Piece::Inner2, Piece::Inner3];

    pub fn chart(&self) -> ChartId {
        match self {
            Piece::A | Piece::B | Piece::C => ChartId::R1Outer,
            Piece::D | Piece::E => ChartId::R2Outer,
            _ => ChartId::R1Inner,
        }
    }

    pub fn label(&self) -> RegionLabel {
        match self {
            Piece::A => RegionLabel::RegionA,
            Piece::B => RegionLabel::RegionB,
            Piece::C => RegionLabel::RegionC,
            Piece::D => RegionLabel::RegionD,
            Piece::E => RegionLabel::RegionE,
            Piece::Inner1 => RegionLabel::InnerPiece1,
            Piece::Inner2 => RegionLabel::InnerPiece2,
            Piece::Inner3 => RegionLabel::InnerPiece3,
        }
    }

    fn from_label(label: RegionLabel) -> Option<Piece> {
        Piece::ALL.iter().copied().find(|p| p.label() == label)
    }

    /// Profile quantities `(T, ∂tT, ∂rT/r, g, ∂tg, ∂rg/r)` at `(t, r)`.
    pub fn profile(&self, params: &CuspParams, t: f64, r: f64) -> ProfileJet {
        let s = params.s();
        match self {
            Piece::A => {
                let at = -t;
                ProfileJet {
                    big_t: -t,
                    t_t: -1.0,
                    t_r_over_r: 0.0,
                    g: at.powf(s - 1.0) / 6.0,
                    g_t: (1.0 - s) * at.powf(s - 2.0) / 6.0,
                    g_r_over_r: 0.0,
                }
            }
            Piece::B => ProfileJet {
                big_t: r,
                t_t: 0.0,
                t_r_over_r: 1.0 / r,
                g: t / 6.0 * r.powf(s - 2.0) + r.powf(s - 1.0) / 3.0,
                g_t: r.powf(s - 2.0) / 6.0,
                g_r_over_r: t / 6.0 * (s - 2.0) * r.powf(s - 4.0) + (s - 1.0) / 3.0 * r.powf(s - 3.0),
            },
            Piece::C => {
                let u = t.powf(s - 1.0);
                let lambda = u / (2.0 * (u - 1.0));
                let mu = t.powf(s) * (1.0 - lambda);
                let dlambda = -(s - 1.0) * t.powf(s - 2.0) / (2.0 * (u - 1.0) * (u - 1.0));
                let dmu = s * u * (1.0 - lambda) - t.powf(s) * dlambda;
                ProfileJet {
                    big_t: t,
                    t_t: 1.0,
                    t_r_over_r: 0.0,
                    g: lambda + mu / r,
                    g_t: dlambda + dmu / r,
                    g_r_over_r: -mu / (r * r * r),
                }
            }
            Piece::D => ProfileJet { big_t: -t, t_t: -1.0, t_r_over_r: 0.0, g: 0.5, g_t: 0.0, g_r_over_r: 0.0 },
            Piece::E => {
                let root = r.powf(1.0 / s);
                ProfileJet {
                    big_t: root,
                    t_t: 0.0,
                    t_r_over_r: root / (s * r * r),
                    g: t / (4.0 * root) + 0.75,
                    g_t: 0.25 / root,
                    g_r_over_r: -t / (4.0 * s * root * r * r),
                }
            }
            Piece::Inner1 => ProfileJet {
                big_t: -t,
                t_t: -1.0,
                t_r_over_r: 0.0,
                g: 6.0 * t.powf(1.0 - s),
                g_t: 6.0 * (1.0 - s) * t.powf(-s),
                g_r_over_r: 0.0,
            },
            Piece::Inner2 => ProfileJet {
                big_t: 12.0 * r * t.powf(1.0 - s) - 3.0 * t,
                t_t: 12.0 * r * (1.0 - s) * t.powf(-s) - 3.0,
                t_r_over_r: 12.0 * t.powf(1.0 - s) / r,
                g: t / r,
                g_t: 1.0 / r,
                g_r_over_r: -t / (r * r * r),
            },
            Piece::Inner3 => {
                let u = t.powf(s - 1.0);
                let a = 1.5 - 1.5 / u;
                let b = 1.5 * t - 0.5 * t.powf(s);
                let da = 1.5 * (s - 1.0) * t.powf(-s);
                let db = 1.5 - 0.5 * s * u;
                ProfileJet {
                    big_t: t,
                    t_t: 1.0,
                    t_r_over_r: 0.0,
                    g: a + b / r,
                    g_t: da + db / r,
                    g_r_over_r: -b / (r * r * r),
                }
            }
        }
    }

    /// Evaluates this piece's formula at `z`, whether or not `z` lies in it.
    pub fn apply(&self, params: &CuspParams, z: &Point) -> Point {
        let pj = self.profile(params, z.t, z.radius());
        Point { t: pj.big_t, x: z.x.iter().map(|v| pj.g * v).collect() }
    }

    /// Inverse of this piece at an image point `w`.
    pub fn invert(&self, params: &CuspParams, w: &Point) -> Point {
        let s = params.s();
        let (tw, rw) = (w.t, w.radius());
        let scaled = |t: f64, r: f64| -> Point {
            let k = if rw > 0.0 { r / rw } else { 0.0 };
            Point { t, x: w.x.iter().map(|v| k * v).collect() }
        };
        match self {
            Piece::A => {
                let t = -tw;
                scaled(t, 6.0 * rw / tw.powf(s - 1.0))
            }
            Piece::B => {
                let rho = tw;
                let t = 6.0 * (rw - rho.powf(s) / 3.0) / rho.powf(s - 1.0);
                scaled(t, rho)
            }
            Piece::C => {
                let u = tw.powf(s - 1.0);
                let lambda = u / (2.0 * (u - 1.0));
                let mu = tw.powf(s) * (1.0 - lambda);
                scaled(tw, (rw - mu) / lambda)
            }
            Piece::D => scaled(-tw, 2.0 * rw),
            Piece::E => {
                let rho = tw.powf(s);
                let t = 4.0 * (rw - 0.75 * rho) / rho.powf(1.0 - 1.0 / s);
                scaled(t, rho)
            }
            Piece::Inner1 => {
                let t = -tw;
                scaled(t, rw * t.powf(s - 1.0) / 6.0)
            }
            Piece::Inner2 => {
                let t = rw;
                scaled(t, (tw + 3.0 * t) * t.powf(s - 1.0) / 12.0)
            }
            Piece::Inner3 => {
                let u = tw.powf(s - 1.0);
                let a = 1.5 - 1.5 / u;
                let b = 1.5 * tw - 0.5 * tw.powf(s);
                scaled(tw, (rw - b) / a)
            }
        }
    }
}

/// Scalars determining an axisymmetric differential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileJet {
    pub big_t: f64,
    pub t_t: f64,
    pub t_r_over_r: f64,
    pub g: f64,
    pub g_t: f64,
    pub g_r_over_r: f64,
}

impl ProfileJet {
    /// Meridional 2×2 block acting on `(t, r)`.
    fn block(&self, r: f64) -> [f64; 4] {
        [self.t_t, self.t_r_over_r * r, self.g_t * r, self.g + self.g_r_over_r * r * r]
    }

    /// Determinant of the full `n×n` differential.
    pub fn det(&self, m: usize, r: f64) -> f64 {
        let [a, b, c, d] = self.block(r);
        self.g.powi(m as i32 - 1) * (a * d - b * c)
    }

    /// Largest singular value of the full differential.
    pub fn opnorm(&self, r: f64) -> f64 {
        let [a, b, c, d] = self.block(r);
        let sigma = 0.5 * ((a + d).hypot(c - b) + (a - d).hypot(b + c));
        sigma.max(self.g.abs())
    }

    /// `ln opnorm` and `ln |det|`, computed without forming the power `g^{m-1}`.
    pub fn log_norms(&self, m: usize, r: f64) -> (f64, f64) {
        let [a, b, c, d] = self.block(r);
        let ln_det = (m as f64 - 1.0) * self.g.abs().ln() + (a * d - b * c).abs().ln();
        (self.opnorm(r).ln(), ln_det)
    }

    pub fn matrix(&self, x: &[f64]) -> DMatrix<f64> {
        let n = x.len() + 1;
        let mut dm = DMatrix::zeros(n, n);
        dm[(0, 0)] = self.t_t;
        for j in 0..x.len() {
            dm[(0, j + 1)] = self.t_r_over_r * x[j];
            dm[(j + 1, 0)] = self.g_t * x[j];
            for k in 0..x.len() {
                dm[(j + 1, k + 1)] = self.g_r_over_r * x[j] * x[k];
            }
            dm[(j + 1, j + 1)] += self.g;
        }
        dm
    }
}

/// Image point, differential, determinant and spectral norm at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub image: Point,
    pub differential: DMatrix<f64>,
    pub det: f64,
    pub opnorm: f64,
}

impl Jet {
    /// Determinant and spectral norm recomputed generically from the matrix.
    pub fn recompute(&self) -> (f64, f64) {
        let det = self.differential.determinant();
        let opnorm = self.differential.clone().singular_values().max();
        (det, opnorm)
    }
}

/// Where a point sits relative to a chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Location {
    Piece(Piece),
    /// On the cusp boundary or at the tip; every chart fixes these.
    Fixed(RegionLabel),
}

/// Locates `z` in the domain of `chart`.
pub fn locate(chart: ChartId, params: &CuspParams, z: &Point) -> Result<Location, ReflectionError> {
    let label = classify(params, chart.scheme(), z)?;
    if matches!(label, RegionLabel::BoundaryCusp | RegionLabel::Origin) {
        return Ok(Location::Fixed(label));
    }
    if chart == ChartId::R1Inner && label == RegionLabel::CuspInterior {
        // the inner formulas are analytic on the whole horn 0 < t <= 1,
        // so the chart runs past t = 1/2; extension only uses t <= 1/2
        let label = inner_piece(params.cusp_radius(z.t), z.radius());
        return Ok(Location::Piece(Piece::from_label(label).unwrap_or(Piece::Inner3)));
    }
    match Piece::from_label(label) {
        Some(piece) if piece.chart() == chart => Ok(Location::Piece(piece)),
        _ => Err(ReflectionError::Domain { chart, label }),
    }
}

/// Image of `z` under `chart`.
pub fn apply(chart: ChartId, params: &CuspParams, z: &Point) -> Result<Point, ReflectionError> {
    match locate(chart, params, z)? {
        Location::Fixed(_) => Ok(z.clone()),
        Location::Piece(piece) => Ok(piece.apply(params, z)),
    }
}

/// Relative distance from `z` to the interfaces bounding `piece`.
///
/// Each interface is measured in its own scale: slope-one interfaces
/// relative to `|z|`, cusp-following ones relative to the local cusp
/// radius. Points outside the piece give a negative gap.
pub fn interface_gap(piece: Piece, params: &CuspParams, z: &Point) -> f64 {
    let (t, r, norm) = (z.t, z.radius(), z.norm());
    let rc = params.cusp_radius(t.abs());
    match piece {
        Piece::A => (t.abs() - r) / norm,
        Piece::B => (r - t.abs()) / norm,
        Piece::C => ((t - r) / norm).min((r - rc) / rc),
        Piece::D => (rc - r) / rc,
        Piece::E => (r - rc) / rc,
        Piece::Inner1 => (rc / 6.0 - r) / rc,
        Piece::Inner2 => (r - rc / 6.0).min(rc / 3.0 - r) / rc,
        Piece::Inner3 => (r - rc / 3.0).min(rc - r) / rc,
    }
}

fn require_interior(chart: ChartId, params: &CuspParams, z: &Point) -> Result<Piece, ReflectionError> {
    match locate(chart, params, z)? {
        Location::Piece(p) if interface_gap(p, params, z) > INTERFACE_MARGIN => Ok(p),
        Location::Piece(p) => Err(ReflectionError::Interface { label: p.label() }),
        Location::Fixed(label) => Err(ReflectionError::Interface { label }),
    }
}

fn require_stencil(chart: ChartId, params: &CuspParams, z: &Point, steps: &[f64]) -> Result<Piece, ReflectionError> {
    let piece = require_interior(chart, params, z)?;
    let mut c = z.coords();
    for (i, delta) in steps.iter().enumerate() {
        for sign in [-1.0, 1.0] {
            let orig = c[i];
            c[i] = orig + sign * 2.0 * delta;
            let moved = locate(chart, params, &Point::from_coords(&c));
            c[i] = orig;
            if moved != Ok(Location::Piece(piece)) {
                return Err(ReflectionError::Interface { label: piece.label() });
            }
        }
    }
    Ok(piece)
}

/// Analytic differential of `chart` at an interior point.
pub fn differential(chart: ChartId, params: &CuspParams, z: &Point) -> Result<Jet, ReflectionError> {
    let piece = require_interior(chart, params, z)?;
    Ok(piece_jet(piece, params, z))
}

/// Jet of one piece's formula at `z`, without any domain check.
pub fn piece_jet(piece: Piece, params: &CuspParams, z: &Point) -> Jet {
    let r = z.radius();
    let pj = piece.profile(params, z.t, r);
    Jet {
        image: Point { t: pj.big_t, x: z.x.iter().map(|v| pj.g * v).collect() },
        differential: pj.matrix(&z.x),
        det: pj.det(params.m(), r),
        opnorm: pj.opnorm(r),
    }
}

/// Default finite-difference step at `z`.
pub fn fd_step(z: &Point) -> f64 {
    1e-6f64.max(1e-6 * z.norm())
}

/// Per-coordinate steps matched to the scales the pieces vary on: `|z|`
/// along `t`, and `|x|` across the axis.
///
/// [`fd_step`] is far coarser than the cusp cross-section near the tip,
/// where its truncation error swamps the comparison. The floor on the
/// `x` steps, a small fraction of the cusp radius, bounds cancellation
/// error next to the axis.
pub fn scaled_fd_steps(params: &CuspParams, z: &Point) -> Vec<f64> {
    let hx = 1e-6 * z.radius().max(1e-4 * params.cusp_radius(z.t.abs()));
    std::iter::once(1e-6 * z.norm()).chain(z.x.iter().map(|_| hx)).collect()
}

/// Central finite-difference differential with step `h` in every coordinate.
///
/// The stencil `z ± 2h·e_i` must stay inside the piece containing `z`.
pub fn differential_fd(chart: ChartId, params: &CuspParams, z: &Point, h: f64) -> Result<DMatrix<f64>, ReflectionError> {
    differential_fd_steps(chart, params, z, &vec![h; z.dim()])
}

/// Central finite-difference differential with one step per coordinate.
pub fn differential_fd_steps(
    chart: ChartId,
    params: &CuspParams,
    z: &Point,
    steps: &[f64],
) -> Result<DMatrix<f64>, ReflectionError> {
    let n = z.dim();
    if steps.len() != n {
        return Err(GeometryError::DimensionMismatch { expected: n, got: steps.len() }.into());
    }
    let piece = require_stencil(chart, params, z, steps)?;
    let mut dm = DMatrix::zeros(n, n);
    let mut c = z.coords();
    for (j, &h) in steps.iter().enumerate() {
        let orig = c[j];
        c[j] = orig + h;
        let plus = piece.apply(params, &Point::from_coords(&c)).coords();
        c[j] = orig - h;
        let minus = piece.apply(params, &Point::from_coords(&c)).coords();
        c[j] = orig;
        for i in 0..n {
            dm[(i, j)] = (plus[i] - minus[i]) / (2.0 * h);
        }
    }
    Ok(dm)
}

/// Preimage of `w` under `chart`.
pub fn invert(chart: ChartId, params: &CuspParams, w: &Point) -> Result<Point, ReflectionError> {
    let label = classify(params, chart.scheme(), w)?;
    if matches!(label, RegionLabel::BoundaryCusp | RegionLabel::Origin) {
        return Ok(w.clone());
    }
    let image_err = || ReflectionError::Image { chart, label };
    let (t, r) = (w.t, w.radius());
    let piece = match chart {
        ChartId::R1Outer | ChartId::R2Outer => {
            let in_cusp = matches!(
                label,
                RegionLabel::CuspInterior
                    | RegionLabel::InnerPiece1
                    | RegionLabel::InnerPiece2
                    | RegionLabel::InnerPiece3
            );
            if !in_cusp || t >= HALF {
                return Err(image_err());
            }
            let rc = params.cusp_radius(t);
            if chart == ChartId::R1Outer {
                if r <= rc / 6.0 {
                    Piece::A
                } else if r <= rc / 2.0 {
                    Piece::B
                } else {
                    Piece::C
                }
            } else if r <= rc / 2.0 {
                Piece::D
            } else {
                Piece::E
            }
        }
        ChartId::R1Inner => match label {
            RegionLabel::RegionA => Piece::Inner1,
            RegionLabel::RegionB => Piece::Inner2,
            RegionLabel::RegionC => Piece::Inner3,
            _ => return Err(image_err()),
        },
    };
    Ok(piece.invert(params, w))
}

/// Pointwise `p`-distortion `opnorm^p / |det|`.
pub fn distortion(chart: ChartId, params: &CuspParams, z: &Point, p: f64) -> Result<f64, ReflectionError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(ReflectionError::Exponent(p));
    }
    let jet = differential(chart, params, z)?;
    if jet.det.abs() < SINGULAR_DET {
        return Err(ReflectionError::Singular { det: jet.det });
    }
    Ok(jet.opnorm.powf(p) / jet.det.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p32() -> CuspParams {
        CuspParams::new(3, 2.0).unwrap()
    }

    fn pt(t: f64, x: &[f64]) -> Point {
        Point::new(t, x.to_vec())
    }

    fn close(a: &Point, b: &Point, tol: f64) -> bool {
        a.distance(b) <= tol
    }

    #[test]
    fn apply_examples() {
        let p = p32();
        let cases = [
            (ChartId::R1Outer, pt(-0.25, &[0.1, 0.0]), pt(0.25, &[0.1 / 24.0, 0.0])),
            (ChartId::R1Outer, pt(0.1, &[0.2, 0.0]), pt(0.2, &[0.2 / 12.0, 0.0])),
            (ChartId::R1Outer, pt(0.4, &[0.3, 0.0]), pt(0.4, &[0.34 / 3.0, 0.0])),
            (ChartId::R2Outer, pt(-0.25, &[0.01, 0.0]), pt(0.25, &[0.005, 0.0])),
            (ChartId::R1Inner, pt(0.5, &[0.05, 0.0]), pt(-0.3, &[0.5, 0.0])),
        ];
        for (chart, z, want) in cases {
            let got = apply(chart, &p, &z).unwrap();
            assert!(close(&got, &want, 1e-12), "{chart} {z:?} -> {got:?}, want {want:?}");
        }
    }

    #[test]
    fn c_piece_coefficients() {
        // t = 0.4, s = 2: λ = 0.4/(2·(0.4-1)) = -1/3, μ = 0.16·(4/3)
        let p = p32();
        let pj = Piece::C.profile(&p, 0.4, 0.3);
        let lambda = -1.0 / 3.0;
        let mu = 0.16 * 4.0 / 3.0;
        assert!((pj.g - (lambda + mu / 0.3)).abs() < 1e-15);
    }

    #[test]
    fn boundary_points_are_fixed() {
        let p = p32();
        let z = pt(0.25, &[0.0625, 0.0]);
        for chart in ChartId::ALL {
            assert_eq!(apply(chart, &p, &z).unwrap(), z);
            assert_eq!(invert(chart, &p, &z).unwrap(), z);
        }
    }

    #[test]
    fn domain_errors_name_the_region() {
        let p = p32();
        let err = apply(ChartId::R1Outer, &p, &pt(0.4, &[0.01, 0.0])).unwrap_err();
        assert_eq!(err, ReflectionError::Domain { chart: ChartId::R1Outer, label: RegionLabel::InnerPiece1 });
        let err = apply(ChartId::R2Outer, &p, &pt(-0.7, &[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, ReflectionError::Domain { label: RegionLabel::OutsideNeighborhood, .. }));
        let err = apply(ChartId::R1Inner, &p, &pt(-0.2, &[0.1, 0.0])).unwrap_err();
        assert!(matches!(err, ReflectionError::Domain { label: RegionLabel::RegionA, .. }));
    }

    #[test]
    fn inner_piece_one_exact_values() {
        let p = p32();
        let on_axis = differential(ChartId::R1Inner, &p, &pt(0.5, &[0.0, 0.0])).unwrap();
        assert!((on_axis.opnorm - 12.0).abs() < 1e-12);
        assert!((on_axis.det.abs() - 144.0).abs() < 1e-10);
        // off the axis the (1-s)·6x/t^s entry tilts the norm slightly
        let off = differential(ChartId::R1Inner, &p, &pt(0.5, &[0.01, 0.0])).unwrap();
        assert!((off.det.abs() - 144.0).abs() < 1e-10);
        assert!((off.opnorm - 12.0).abs() < 5e-3 && off.opnorm > 12.0);
        let d = distortion(ChartId::R1Inner, &p, &pt(0.5, &[0.0, 0.0]), 2.0).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn d_piece_exact_values() {
        for n in [3usize, 4, 5] {
            let p = CuspParams::new(n, 2.0).unwrap();
            let mut x = vec![0.0; n - 1];
            x[0] = 0.01;
            let jet = differential(ChartId::R2Outer, &p, &Point::new(-0.25, x)).unwrap();
            assert_eq!(jet.opnorm, 1.0);
            assert_eq!(jet.det.abs(), 0.5f64.powi(n as i32 - 1));
        }
        let d = distortion(ChartId::R2Outer, &p32(), &pt(-0.25, &[0.01, 0.0]), 2.0).unwrap();
        assert_eq!(d, 4.0);
    }

    #[test]
    fn a_piece_determinant_and_distortion() {
        let p = p32();
        let z = pt(-0.25, &[0.1, 0.0]);
        let jet = differential(ChartId::R1Outer, &p, &z).unwrap();
        assert!((jet.det.abs() - 1.0 / 576.0).abs() < 1e-15);
        let d = distortion(ChartId::R1Outer, &p, &z, 1.0).unwrap();
        assert!((d / 576.0 - jet.opnorm).abs() < 1e-12);
        assert!(jet.opnorm >= 1.0);
    }

    #[test]
    fn closed_forms_match_generic_linear_algebra() {
        let p = CuspParams::new(4, 2.5).unwrap();
        let cases = [
            (ChartId::R1Outer, pt(-0.2, &[0.05, 0.02, -0.01])),
            (ChartId::R1Outer, pt(0.1, &[0.1, 0.2, 0.05])),
            (ChartId::R1Outer, pt(0.3, &[0.1, 0.05, 0.02])),
            (ChartId::R2Outer, pt(-0.3, &[0.01, 0.0, 0.02])),
            (ChartId::R2Outer, pt(0.2, &[0.05, 0.05, 0.05])),
            (ChartId::R1Inner, pt(0.4, &[0.001, 0.001, 0.0])),
            (ChartId::R1Inner, pt(0.4, &[0.01, 0.005, 0.0])),
            (ChartId::R1Inner, pt(0.4, &[0.05, 0.02, 0.0])),
        ];
        for (chart, z) in cases {
            let jet = differential(chart, &p, &z).unwrap();
            let (det, opnorm) = jet.recompute();
            assert!(((det - jet.det) / det).abs() < 1e-10, "{chart} {z:?}");
            assert!(((opnorm - jet.opnorm) / opnorm).abs() < 1e-10, "{chart} {z:?}");
        }
    }

    #[test]
    fn finite_differences_agree() {
        let p = p32();
        let z = pt(-0.25, &[0.1, 0.0]);
        let jet = differential(ChartId::R1Outer, &p, &z).unwrap();
        let fd = differential_fd(ChartId::R1Outer, &p, &z, 1e-6).unwrap();
        assert!((&fd - &jet.differential).norm() / jet.differential.norm() < 1e-5);

        let z = pt(-0.25, &[0.01, 0.0]);
        let fd = differential_fd(ChartId::R2Outer, &p, &z, 1e-6).unwrap();
        let exact = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 0.5, 0.5]));
        assert!((&fd - &exact).amax() < 1e-9);

        let z = pt(0.5, &[0.0, 0.0]);
        let fd = differential_fd(ChartId::R1Inner, &p, &z, 1e-6).unwrap();
        let sv = fd.singular_values().max();
        assert!((sv - 12.0).abs() < 1e-4);
    }

    #[test]
    fn scaled_steps_resolve_deep_pieces() {
        let p = CuspParams::new(3, 3.0).unwrap();
        let t = 2f64.powi(-12);
        let rc = p.cusp_radius(t);
        let z = Point::from_profile(t, 4.0 * rc, &[0.6, 0.8]);
        let exact = differential(ChartId::R2Outer, &p, &z).unwrap().differential;
        let coarse = differential_fd(ChartId::R2Outer, &p, &z, fd_step(&z)).unwrap();
        let fine = differential_fd_steps(ChartId::R2Outer, &p, &z, &scaled_fd_steps(&p, &z)).unwrap();
        assert!((&exact - &coarse).norm() / exact.norm() > 1e-3);
        assert!((&exact - &fine).norm() / exact.norm() < 1e-8);
        assert!(differential_fd_steps(ChartId::R2Outer, &p, &z, &[1e-9]).is_err());
    }

    #[test]
    fn interface_points_are_rejected() {
        let p = p32();
        let err = differential(ChartId::R1Outer, &p, &pt(-0.25, &[0.25, 0.0])).unwrap_err();
        assert!(matches!(err, ReflectionError::Interface { .. }));
        let err = differential(ChartId::R1Outer, &p, &pt(0.25, &[0.0625, 0.0])).unwrap_err();
        assert!(matches!(err, ReflectionError::Interface { label: RegionLabel::BoundaryCusp }));
        let err = differential_fd(ChartId::R2Outer, &p, &pt(-0.1, &[0.0100001, 0.0]), 1e-6).unwrap_err();
        assert!(matches!(err, ReflectionError::Interface { .. }));
    }

    #[test]
    fn invert_examples() {
        let p = p32();
        let back = invert(ChartId::R1Outer, &p, &pt(0.25, &[0.1 / 24.0, 0.0])).unwrap();
        assert!(close(&back, &pt(-0.25, &[0.1, 0.0]), 1e-12));
        let back = invert(ChartId::R2Outer, &p, &pt(0.25, &[0.005, 0.0])).unwrap();
        assert!(close(&back, &pt(-0.25, &[0.01, 0.0]), 1e-12));
        let err = invert(ChartId::R1Outer, &p, &pt(-0.25, &[0.1, 0.0])).unwrap_err();
        assert!(matches!(err, ReflectionError::Image { .. }));
    }

    #[test]
    fn inner_chart_differs_from_outer_inverse_off_piece_one() {
        let p = p32();
        // piece 1 undoes the A-piece
        let z = pt(-0.2, &[0.05, 0.0]);
        let w = apply(ChartId::R1Outer, &p, &z).unwrap();
        let back = apply(ChartId::R1Inner, &p, &w).unwrap();
        assert!(close(&back, &z, 1e-12));
        // but not the B-piece: its image band reaches t^s/2, past the 1/3 breakpoint
        let z = pt(0.1, &[0.2, 0.0]);
        let w = apply(ChartId::R1Outer, &p, &z).unwrap();
        let back = apply(ChartId::R1Inner, &p, &w).unwrap();
        assert!(!close(&back, &z, 1e-3));
    }

    #[test]
    fn distortion_rejects_bad_exponent() {
        let p = p32();
        assert!(matches!(
            distortion(ChartId::R2Outer, &p, &pt(-0.25, &[0.01, 0.0]), 0.5),
            Err(ReflectionError::Exponent(_))
        ));
    }
}
