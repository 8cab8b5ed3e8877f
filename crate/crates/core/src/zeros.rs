//! Zeros of (twisted) sections of O(k) on CP¹ and counts in geodesic balls.
//!
//! In the chart, `s = Σ a_ℓ e_ℓ` is the polynomial `p(z) = Σ a_ℓ c_ℓ z^ℓ`
//! with `c_ℓ = √((k+1)C(k,ℓ)/2π)`. A drop of degree by `j` means a zero of order
//! `j` at `[1:0]`. Roots come from Aberth-Ehrlich iterations on the trimmed,
//! rescaled polynomial, with evaluation through the reversed polynomial outside
//! the unit disk.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{fs_distance, ChartPoint, SWAP_CHART_RADIUS};
use crate::sections::{Basis, SectionVector};
use crate::toeplitz::OperatorMatrix;

/// Basis coefficients below this fraction of the largest are treated as zero.
pub const TRIM_THRESHOLD: f64 = 1e-13;
pub const MAX_ITERATIONS: usize = 500;
/// Largest accepted backward error `|p(z)| / Σ|b_i||z|^i` of a polished root.
pub const RESIDUAL_TOLERANCE: f64 = 1e-8;
/// Roots closer than this (relative to `max(1, |z|)`) are merged into one root with multiplicity.
pub const CLUSTER_RADIUS: f64 = 1e-7;
/// Ties `|d − ρ|` below this count as inside the ball.
pub const BOUNDARY_TIE: f64 = 1e-12;

/// Zeros of a nonzero section, with multiplicity.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ZeroSet {
    pub finite_roots: Vec<(Complex64, usize)>,
    pub roots_at_infinity: usize,
}

impl ZeroSet {
    pub fn total(&self) -> usize {
        self.finite_roots.iter().map(|(_, m)| m).sum::<usize>() + self.roots_at_infinity
    }

    /// Each root as a chart point, repeated by multiplicity.
    pub fn points(&self) -> impl Iterator<Item = ChartPoint> + '_ {
        self.finite_roots
            .iter()
            .flat_map(|(z, m)| std::iter::repeat_n(ChartPoint::Finite(*z), *m))
            .chain(std::iter::repeat_n(ChartPoint::Infinity, self.roots_at_infinity))
    }
}

/// Roots together with the worst backward error seen among them.
#[derive(Debug, Clone)]
pub struct RootReport {
    pub zeros: ZeroSet,
    pub max_residual: f64,
    pub iterations: usize,
}

pub fn apply_operator(op: &OperatorMatrix, s: &SectionVector) -> Result<SectionVector> {
    SectionVector::new(op.apply(s.coeffs())?)
}

pub fn polynomial_roots(s: &SectionVector) -> Result<ZeroSet> {
    Ok(polynomial_roots_report(s)?.zeros)
}

pub fn polynomial_roots_report(s: &SectionVector) -> Result<RootReport> {
    polynomial_roots_with(&Basis::new(s.degree()), s)
}

/// Same as [`polynomial_roots_report`] with a precomputed basis of matching degree.
pub fn polynomial_roots_with(basis: &Basis, s: &SectionVector) -> Result<RootReport> {
    let k = s.degree();
    debug_assert_eq!(basis.degree(), k);
    let a = s.coeffs();
    let amax = a.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if amax == 0.0 || !amax.is_finite() {
        return Err(Error::Domain("the zero section has no isolated zeros".into()));
    }
    let thr = TRIM_THRESHOLD * amax;
    let top = (0..=k).rev().find(|&l| a[l].norm() > thr).expect("nonzero");
    let bottom = (0..=k).find(|&l| a[l].norm() > thr).expect("nonzero");
    let degree = top - bottom;

    let mut zeros = ZeroSet {
        finite_roots: Vec::new(),
        roots_at_infinity: k - top,
    };
    if bottom > 0 {
        zeros.finite_roots.push((Complex64::new(0.0, 0.0), bottom));
    }
    if degree == 0 {
        return Ok(RootReport {
            zeros,
            max_residual: 0.0,
            iterations: 0,
        });
    }

    // b_i = a_{bottom+i} c_{bottom+i}, rescaled so the largest has modulus ~1
    let logs: Vec<f64> = (bottom..=top)
        .map(|l| {
            let m = a[l].norm();
            if m > thr {
                m.ln() + 0.5 * basis.log_norm_sq(l)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let b: Vec<Complex64> = (bottom..=top)
        .zip(&logs)
        .map(|(l, lg)| {
            if lg.is_finite() {
                a[l] / a[l].norm() * (lg - shift).exp()
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();

    let (roots, iterations) = aberth(&b)?;

    let mut max_residual: f64 = 0.0;
    let mut polished = Vec::with_capacity(roots.len());
    for z in roots {
        let z = polish(&b, z, 2);
        let (_, residual) = newton_ratio(&b, z);
        if !(residual <= RESIDUAL_TOLERANCE) {
            return Err(Error::Numeric(format!(
                "root {z} of a degree-{degree} polynomial has backward error {residual:e}"
            )));
        }
        max_residual = max_residual.max(residual);
        polished.push(z);
    }

    let mut finite = Vec::with_capacity(polished.len());
    for z in polished {
        if z.norm() > SWAP_CHART_RADIUS {
            zeros.roots_at_infinity += 1;
        } else {
            finite.push(z);
        }
    }
    zeros.finite_roots.extend(cluster(finite));
    Ok(RootReport {
        zeros,
        max_residual,
        iterations,
    })
}

/// `p(z)/p'(z)` and the backward error `|p(z)| / Σ|b_i||z|^i`.
fn newton_ratio(b: &[Complex64], z: Complex64) -> (Complex64, f64) {
    let d = b.len() - 1;
    let r = z.norm();
    if r <= 1.0 {
        let mut p = b[d];
        let mut dp = Complex64::new(0.0, 0.0);
        let mut bound = b[d].norm();
        for i in (0..d).rev() {
            dp = dp * z + p;
            p = p * z + b[i];
            bound = bound * r + b[i].norm();
        }
        (p / dp, p.norm() / bound)
    } else {
        // p(z) = z^d q(w) with q(w) = Σ b_i w^{d−i}, w = 1/z
        let w = z.inv();
        let rw = w.norm();
        let mut q = b[0];
        let mut dq = Complex64::new(0.0, 0.0);
        let mut bound = b[0].norm();
        for coeff in &b[1..] {
            dq = dq * w + q;
            q = q * w + coeff;
            bound = bound * rw + coeff.norm();
        }
        // p/p' = q / (w (d q − w q'))
        let denom = w * (q * d as f64 - w * dq);
        (q / denom, q.norm() / bound)
    }
}

/// Starting points on circles whose radii come from the upper convex hull of
/// `(i, ln|b_i|)` (Newton polygon).
fn initial_guesses(b: &[Complex64]) -> Vec<Complex64> {
    let d = b.len() - 1;
    let pts: Vec<(usize, f64)> = b
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, c)| (i, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &pts {
        while hull.len() >= 2 {
            let (o, a) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (a.0 as f64 - o.0 as f64) * (p.1 - o.1) - (a.1 - o.1) * (p.0 as f64 - o.0 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut guesses = Vec::with_capacity(d);
    for (edge, w) in hull.windows(2).enumerate() {
        let n = w[1].0 - w[0].0;
        let radius = ((w[0].1 - w[1].1) / n as f64).exp();
        let offset = 2.0 * std::f64::consts::PI * edge as f64 / d as f64 + 0.7;
        for j in 0..n {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64 + offset;
            guesses.push(Complex64::from_polar(radius, theta));
        }
    }
    debug_assert_eq!(guesses.len(), d);
    guesses
}

fn aberth(b: &[Complex64]) -> Result<(Vec<Complex64>, usize)> {
    let d = b.len() - 1;
    let mut z = initial_guesses(b);
    let mut done = vec![false; d];
    let stop = 4.0 * f64::EPSILON * d as f64;
    for iter in 1..=MAX_ITERATIONS {
        let mut all_done = true;
        for i in 0..d {
            if done[i] {
                continue;
            }
            let (ratio, backward) = newton_ratio(b, z[i]);
            if backward <= stop || !ratio.is_finite() && backward <= RESIDUAL_TOLERANCE {
                done[i] = true;
                continue;
            }
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    repulsion += (z[i] - zj).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                // nudge off an exact critical point
                z[i] *= Complex64::from_polar(1.0 + 1e-6, 1e-3);
                all_done = false;
                continue;
            }
            z[i] -= step;
            if step.norm() <= f64::EPSILON * z[i].norm() {
                done[i] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            return Ok((z, iter));
        }
    }
    Err(Error::Numeric(format!(
        "Aberth-Ehrlich iteration did not converge in {MAX_ITERATIONS} iterations (degree {d})"
    )))
}

fn polish(b: &[Complex64], mut z: Complex64, steps: usize) -> Complex64 {
    let (_, mut best) = newton_ratio(b, z);
    for _ in 0..steps {
        let (ratio, _) = newton_ratio(b, z);
        if !ratio.is_finite() {
            break;
        }
        let candidate = z - ratio;
        let (_, residual) = newton_ratio(b, candidate);
        if residual <= best {
            z = candidate;
            best = residual;
        }
    }
    z
}

fn cluster(roots: Vec<Complex64>) -> Vec<(Complex64, usize)> {
    let mut out: Vec<(Complex64, usize, Complex64)> = Vec::new();
    for z in roots {
        match out
            .iter_mut()
            .find(|(c, _, _)| (z - c).norm() <= CLUSTER_RADIUS * c.norm().max(1.0))
        {
            Some((_, m, sum)) => {
                *m += 1;
                *sum += z;
            }
            None => out.push((z, 1, z)),
        }
    }
    out.into_iter()
        .map(|(z, m, sum)| if m == 1 { (z, 1) } else { (sum / m as f64, m) })
        .collect()
}

/// Roots in the open geodesic ball `B(center, rho)`, with multiplicity.
pub fn count_in_ball(zs: &ZeroSet, center: ChartPoint, rho: f64) -> usize {
    let inside = |p: ChartPoint| fs_distance(p, center) < rho + BOUNDARY_TIE;
    let finite: usize = zs
        .finite_roots
        .iter()
        .filter(|(z, _)| inside(ChartPoint::Finite(*z)))
        .map(|(_, m)| m)
        .sum();
    let at_infinity = if zs.roots_at_infinity > 0 && inside(ChartPoint::Infinity) {
        zs.roots_at_infinity
    } else {
        0
    };
    finite + at_infinity
}
