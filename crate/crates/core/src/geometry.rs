//! Charts, Fubini-Study distances and volumes on CP¹, and finite-difference
//! operators acting on real symbols.
//!
//! The Fubini-Study form is normalized as `ω = i dz∧dz̄ / (1+|z|²)²`, so the
//! total volume of CP¹ is `2π` and the geodesic distance between `[z:1]` and
//! `[w:1]` is `arctan(|z−w| / |1+z̄w|)`, ranging over `[0, π/2]`.
//!
//! The sphere model uses `x₃ = (|z|²−1)/(|z|²+1)` and
//! `x₁ − i x₂ = 2z/(1+|z|²)`. The sign of `x₂` is the one under which the
//! banded matrix of `op_xy_lambda` has principal symbol `x₁x₂ − λ`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Beyond this modulus evaluations switch to the chart `w = 1/z`.
pub const SWAP_CHART_RADIUS: f64 = 1e8;

/// A point of CP¹ in the affine chart `{[z:1]}`, or the point `[1:0]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChartPoint {
    Finite(Complex64),
    Infinity,
}

impl ChartPoint {
    pub fn new(re: f64, im: f64) -> Self {
        ChartPoint::Finite(Complex64::new(re, im))
    }

    pub fn origin() -> Self {
        ChartPoint::new(0.0, 0.0)
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            ChartPoint::Finite(z) => Some(z),
            ChartPoint::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ChartPoint::Infinity)
    }

    /// Unit representative `(u₀, u₁)` of the homogeneous coordinates `[z:1]`.
    pub fn homogeneous(&self) -> (Complex64, Complex64) {
        match *self {
            ChartPoint::Infinity => (Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)),
            ChartPoint::Finite(z) => {
                let r = z.norm();
                if r > 1.0 {
                    // divide through by |z| to avoid overflow of 1 + |z|²
                    let inv = 1.0 / r;
                    let n = (1.0 + inv * inv).sqrt();
                    (z * inv / n, Complex64::new(inv / n, 0.0))
                } else {
                    let n = (1.0 + r * r).sqrt();
                    (z / n, Complex64::new(1.0 / n, 0.0))
                }
            }
        }
    }

    /// Coordinate in the swapped chart `w = 1/z`; the origin maps to `None`.
    pub fn swapped(&self) -> Option<Complex64> {
        match *self {
            ChartPoint::Infinity => Some(Complex64::new(0.0, 0.0)),
            ChartPoint::Finite(z) if z.norm_sqr() == 0.0 => None,
            ChartPoint::Finite(z) => Some(z.inv()),
        }
    }

    /// Chart point whose image under [`stereo_inverse`] is `p`.
    pub fn from_sphere(p: SpherePoint) -> Self {
        let denom = 1.0 - p.x3;
        if denom <= 1e-15 {
            return ChartPoint::Infinity;
        }
        // `+ 0.0` turns a signed zero into `0.0`
        ChartPoint::new(p.x1 / denom + 0.0, -p.x2 / denom + 0.0)
    }
}

impl fmt::Display for ChartPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChartPoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            ChartPoint::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl SpherePoint {
    /// Normalizes `(x1, x2, x3)` onto the unit sphere.
    pub fn new(x1: f64, x2: f64, x3: f64) -> Result<Self> {
        let n = (x1 * x1 + x2 * x2 + x3 * x3).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Domain(format!("cannot project ({x1}, {x2}, {x3}) onto the sphere")));
        }
        Ok(Self {
            x1: x1 / n,
            x2: x2 / n,
            x3: x3 / n,
        })
    }

    pub fn dist(&self, other: &SpherePoint) -> f64 {
        ((self.x1 - other.x1).powi(2) + (self.x2 - other.x2).powi(2) + (self.x3 - other.x3).powi(2)).sqrt()
    }
}

pub fn stereo_inverse(z: ChartPoint) -> SpherePoint {
    match z {
        ChartPoint::Infinity => SpherePoint {
            x1: 0.0,
            x2: 0.0,
            x3: 1.0,
        },
        ChartPoint::Finite(z) => {
            let r2 = z.norm_sqr();
            if r2 > SWAP_CHART_RADIUS * SWAP_CHART_RADIUS {
                // ζ = 2z/(1+|z|²) = 2 w̄ /(1+|w|²) with w = 1/z
                let w = z.inv();
                let w2 = w.norm_sqr();
                let zeta = w.conj() * (2.0 / (1.0 + w2));
                return SpherePoint {
                    x1: zeta.re,
                    x2: -zeta.im,
                    x3: (1.0 - w2) / (1.0 + w2),
                };
            }
            let zeta = z * (2.0 / (1.0 + r2));
            SpherePoint {
                x1: zeta.re,
                x2: -zeta.im,
                x3: (r2 - 1.0) / (r2 + 1.0),
            }
        }
    }
}

/// Fubini-Study geodesic distance, in `[0, π/2]`.
pub fn fs_distance(z: ChartPoint, w: ChartPoint) -> f64 {
    let (z0, z1) = z.homogeneous();
    let (w0, w1) = w.homogeneous();
    let wedge = (z0 * w1 - z1 * w0).norm();
    let inner = (z0 * w0.conj() + z1 * w1.conj()).norm();
    wedge.atan2(inner)
}

/// `sin` of the Fubini-Study distance, i.e. the chordal distance
/// `|z−w| / (√(1+|z|²) √(1+|w|²))`.
pub fn fs_sin_distance(z: ChartPoint, w: ChartPoint) -> f64 {
    let (z0, z1) = z.homogeneous();
    let (w0, w1) = w.homogeneous();
    (z0 * w1 - z1 * w0).norm()
}

/// Fubini-Study area of a geodesic ball of radius `rho`.
pub fn ball_volume(rho: f64) -> Result<f64> {
    if !(0.0..=PI / 2.0).contains(&rho) {
        return Err(Error::Domain(format!("ball radius {rho} outside [0, π/2]")));
    }
    let s = rho.sin();
    Ok(2.0 * PI * s * s)
}

type ChartFn = dyn Fn(ChartPoint) -> f64 + Send + Sync;

/// A real-valued function on CP¹.
#[derive(Clone)]
pub struct Symbol {
    name: String,
    eval: Arc<ChartFn>,
    closed_form_l1: Option<Arc<ChartFn>>,
    max_harmonic: Option<usize>,
    sup_norm: Option<f64>,
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("closed_form_l1", &self.closed_form_l1.is_some())
            .field("max_harmonic", &self.max_harmonic)
            .finish()
    }
}

impl Symbol {
    pub fn new(name: impl Into<String>, eval: impl Fn(ChartPoint) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            closed_form_l1: None,
            max_harmonic: None,
            sup_norm: None,
        }
    }

    pub fn on_sphere(name: impl Into<String>, g: impl Fn(SpherePoint) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(name, move |z| g(stereo_inverse(z)))
    }

    /// Density `L₁` with `i∂∂̄ log f² = L₁ ω`, when known in closed form.
    pub fn with_closed_form_l1(mut self, l1: impl Fn(ChartPoint) -> f64 + Send + Sync + 'static) -> Self {
        self.closed_form_l1 = Some(Arc::new(l1));
        self
    }

    /// Declares that `f(r e^{iφ})` only has angular harmonics `e^{ijφ}` with `|j| ≤ m`.
    pub fn with_max_harmonic(mut self, m: usize) -> Self {
        self.max_harmonic = Some(m);
        self
    }

    pub fn with_sup_norm(mut self, sup: f64) -> Self {
        self.sup_norm = Some(sup);
        self
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), move |_| c)
            .with_closed_form_l1(|_| 0.0)
            .with_max_harmonic(0)
            .with_sup_norm(c.abs())
    }

    pub fn identity() -> Self {
        let mut s = Self::constant(1.0);
        s.name = "identity".into();
        s
    }

    /// The height function `x₃ = (|z|²−1)/(|z|²+1)`.
    pub fn height() -> Self {
        Self::on_sphere("height", |p| p.x3)
            .with_closed_form_l1(|z| match z {
                ChartPoint::Infinity => -4.0,
                ChartPoint::Finite(z) => {
                    let t = z.norm_sqr();
                    if t > 1.0 {
                        let s = 1.0 / t;
                        -4.0 * (1.0 + s * s) / ((1.0 - s) * (1.0 - s))
                    } else {
                        -4.0 * (1.0 + t * t) / ((t - 1.0) * (t - 1.0))
                    }
                }
            })
            .with_max_harmonic(0)
            .with_sup_norm(1.0)
    }

    pub fn x1() -> Self {
        Self::on_sphere("x1", |p| p.x1).with_max_harmonic(1).with_sup_norm(1.0)
    }

    pub fn x2() -> Self {
        Self::on_sphere("x2", |p| p.x2).with_max_harmonic(1).with_sup_norm(1.0)
    }

    /// `x₁x₂ − λ`.
    pub fn xy(lambda: f64) -> Self {
        Self::on_sphere(format!("xy({lambda})"), move |p| p.x1 * p.x2 - lambda)
            .with_max_harmonic(2)
            .with_sup_norm(0.5 + lambda.abs())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, z: ChartPoint) -> f64 {
        (self.eval)(z)
    }

    pub fn closed_form_l1(&self, z: ChartPoint) -> Option<f64> {
        self.closed_form_l1.as_ref().map(|l1| l1(z))
    }

    pub fn max_harmonic(&self) -> Option<usize> {
        self.max_harmonic
    }

    pub fn sup_norm(&self) -> Option<f64> {
        self.sup_norm
    }
}

/// Evaluate `f` in the chart that is well conditioned at `z`: returns the
/// function `u ↦ f(point with coordinate u)` together with the coordinate of `z`.
fn local_chart(f: &Symbol, z: ChartPoint) -> (Box<dyn Fn(Complex64) -> f64 + '_>, Complex64) {
    match z {
        ChartPoint::Finite(c) if c.norm() <= SWAP_CHART_RADIUS => (Box::new(move |u| f.eval(ChartPoint::Finite(u))), c),
        _ => {
            let w = z.swapped().expect("not the origin");
            (
                Box::new(move |u: Complex64| {
                    if u.norm_sqr() == 0.0 {
                        f.eval(ChartPoint::Infinity)
                    } else {
                        f.eval(ChartPoint::Finite(u.inv()))
                    }
                }),
                w,
            )
        }
    }
}

/// `|df|²_ω = 2(1+|z|²)² |∂_z f|²` by central differences.
pub fn grad_norm_sq(f: &Symbol, z: ChartPoint) -> f64 {
    let (g, c) = local_chart(f, z);
    let h = 1e-5 * (1.0 + c.norm());
    // fourth-order central stencil
    let d = |step: Complex64| (8.0 * (g(c + step) - g(c - step)) - (g(c + 2.0 * step) - g(c - 2.0 * step))) / (12.0 * h);
    let fx = d(Complex64::new(h, 0.0));
    let fy = d(Complex64::new(0.0, h));
    // |∂_z f|² = (f_x² + f_y²)/4
    let dz_sq = 0.25 * (fx * fx + fy * fy);
    let w = 1.0 + c.norm_sqr();
    2.0 * w * w * dz_sq
}

/// Values of `|f|` below this are treated as lying on the zero set.
pub const ZERO_SET_THRESHOLD: f64 = 1e-8;

/// `L₁(z)` such that `i∂∂̄ log f² = L₁ ω_FS`.
pub fn log_f2_laplacian_density(f: &Symbol, z: ChartPoint) -> Result<f64> {
    let value = f.eval(z);
    if !(value.abs() > ZERO_SET_THRESHOLD) {
        return Err(Error::Regime {
            value: value.abs(),
            threshold: ZERO_SET_THRESHOLD,
        });
    }
    if let Some(l1) = f.closed_form_l1(z) {
        return Ok(l1);
    }
    let (g, c) = local_chart(f, z);
    let h = 1e-4 * (1.0 + c.norm());
    let u = |p: Complex64| {
        let v = g(p);
        (v * v).ln()
    };
    let dy = Complex64::new(0.0, h);
    let lap = (u(c + h) + u(c - h) + u(c + dy) + u(c - dy) - 4.0 * u(c)) / (h * h);
    // i∂∂̄u = (Δu/4) i dz∧dz̄ and ω = i dz∧dz̄ / (1+|z|²)²
    let w = 1.0 + c.norm_sqr();
    Ok(0.25 * lap * w * w)
}
