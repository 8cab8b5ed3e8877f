//! The universal constant C_n(R) of the on-zero-set excess, and the chain of
//! identities behind it.
//!
//! `C_n(R) = 2^n π^n (n−1)!/(2n−2)! · (P_n(2R²) − (1+2R²)^{n−3/2})`, where `P_n`
//! is the order `n−1` Taylor polynomial of `x ↦ (1+x)^{n−3/2}`. It equals twice
//! the integral of `(1−2t₁²)/(1+2t₁²)²` over the ball of radius `R` in `ℝ^{2n}`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{map_indexed, Execution};
use crate::quad::{integrate, integrate_with_breaks, Tolerance};
use crate::sections::RngSpec;

/// `α(α−1)…(α−ℓ+1)/ℓ!`.
pub fn generalized_binomial(alpha: f64, l: usize) -> f64 {
    (0..l).fold(1.0, |acc, j| acc * (alpha - j as f64) / (j + 1) as f64)
}

/// `Σ_{ℓ<n} binom(n−3/2, ℓ) X^ℓ`.
pub fn p_n_taylor(n: usize, x: f64) -> f64 {
    let alpha = n as f64 - 1.5;
    let mut term = 1.0;
    let mut sum = 0.0;
    for l in 0..n {
        sum += term;
        term *= (alpha - l as f64) / (l + 1) as f64 * x;
    }
    sum
}

/// `(1+x)^{n−3/2}`.
fn half_integer_power(n: usize, x: f64) -> f64 {
    let s = (1.0 + x).sqrt();
    (1.0 + x).powi(n as i32 - 1) / s
}

fn ln_factorial(m: usize) -> f64 {
    (2..=m).map(|i| (i as f64).ln()).sum()
}

/// `2^n π^n (n−1)!/(2n−2)!`.
fn c_prefactor(n: usize) -> f64 {
    (n..=2 * n - 2).fold((2.0 * PI).powi(n as i32), |acc, j| acc / j as f64)
}

/// `P_n(x) − (1+x)^{n−3/2}`; for `n ≥ 2` and small `x` summed as minus the Taylor tail.
fn taylor_remainder(n: usize, x: f64) -> f64 {
    if n == 1 || x >= 0.5 {
        return p_n_taylor(n, x) - half_integer_power(n, x);
    }
    let alpha = n as f64 - 1.5;
    let mut term = generalized_binomial(alpha, n) * x.powi(n as i32);
    let mut tail: f64 = 0.0;
    let mut l = n;
    while term != 0.0 && term.abs() > 1e-18 * tail.abs() {
        tail += term;
        term *= (alpha - l as f64) / (l + 1) as f64 * x;
        l += 1;
    }
    -tail
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("complex dimension must be at least 1".into()));
    }
    Ok(())
}

pub fn c_n_closed(n: usize, r: f64) -> Result<f64> {
    check_n(n)?;
    if !(r >= 0.0) {
        return Err(Error::Domain(format!("radius must be non-negative, got {r}")));
    }
    Ok(c_prefactor(n) * taylor_remainder(n, 2.0 * r * r))
}

/// `π (P_n(R²) − (1+R²)^{n−3/2})`.
pub fn j_n_closed(n: usize, r: f64) -> f64 {
    PI * taylor_remainder(n, r * r)
}

/// `∫₀^R ∫₀^π (1−r²cos²θ)/(1+r²cos²θ)² r^{2n−1} sin^{2n−2}θ dθ dr` by nested adaptive quadrature.
pub fn j_n_quadrature(n: usize, r_max: f64) -> Result<f64> {
    check_n(n)?;
    if r_max == 0.0 {
        return Ok(0.0);
    }
    let inner = |r: f64| -> Result<f64> {
        // the θ-integral cancels to O(r⁻³) while ∫|g| ~ 1/r
        let inner_tol = Tolerance::relative(1e-13).with_abs(1e-15 / (1.0 + r));
        // symmetric about θ = π/2; break where r cos θ crosses the scale 1
        let mut breaks = vec![0.0];
        for s in [2.0, 1.0, 0.5] {
            if r > s {
                breaks.push((s / r).acos());
            }
        }
        breaks.push(PI / 2.0);
        breaks.sort_by(f64::total_cmp);
        let g = |t: f64| {
            let u = (r * t.cos()).powi(2);
            (1.0 - u) / (1.0 + u).powi(2) * t.sin().powi(2 * n as i32 - 2)
        };
        Ok(2.0 * integrate_with_breaks(g, &breaks, inner_tol)?.value)
    };
    let mut failure = None;
    let outer = integrate(
        |r| {
            if failure.is_some() {
                return 0.0;
            }
            match inner(r) {
                Ok(v) => v * r.powi(2 * n as i32 - 1),
                Err(e) => {
                    failure = Some(e);
                    0.0
                }
            }
        },
        0.0,
        r_max,
        Tolerance::relative(1e-12).with_abs(1e-14),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(outer.value),
    }
}

/// The `2n`-dimensional integral `∫_{B(0,R)} (1−2t₁²)/(1+2t₁²)² dt`, reduced to
/// a 2-D integral: `2^{n−1} π^{n−1} (n−1)!/(2n−2)! · J_n(R√2)`.
pub fn i_n_quadrature(n: usize, r: f64) -> Result<f64> {
    check_n(n)?;
    Ok(0.5 * c_prefactor(n) / PI * j_n_quadrature(n, r * 2f64.sqrt())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: usize,
}

const MC_CHUNKS: usize = 64;

/// Plain Monte Carlo for the same `2n`-dimensional integral, uniform samples in the ball.
pub fn i_n_monte_carlo(n: usize, r: f64, samples: usize, spec: RngSpec, exec: Execution) -> Result<MonteCarloEstimate> {
    check_n(n)?;
    if samples < 2 {
        return Err(Error::Domain("Monte Carlo needs at least two samples".into()));
    }
    let dim = 2 * n;
    let per_chunk = samples.div_ceil(MC_CHUNKS);
    let sums = map_indexed(MC_CHUNKS, exec, |chunk| {
        let count = per_chunk.min(samples.saturating_sub(chunk * per_chunk));
        let mut rng = RngSpec::new(spec.seed, spec.stream.wrapping_mul(MC_CHUNKS as u64) + chunk as u64).rng();
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..count {
            let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let radius = r * rng.random::<f64>().powf(1.0 / dim as f64);
            let t1 = radius * g[0] / norm;
            let u = 2.0 * t1 * t1;
            let v = (1.0 - u) / (1.0 + u).powi(2);
            s1 += v;
            s2 += v * v;
        }
        (s1, s2)
    });
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |acc, s| (acc.0 + s.0, acc.1 + s.1));
    let m = samples as f64;
    let mean = s1 / m;
    let var = ((s2 - m * mean * mean) / (m - 1.0)).max(0.0);
    let volume = (n as f64 * (PI * r * r).ln() - ln_factorial(n)).exp();
    Ok(MonteCarloEstimate {
        value: volume * mean,
        std_error: volume * (var / m).sqrt(),
        samples,
    })
}

/// `F(1, 3/2; n+1; −R²) = n ∫₀¹ (1−t)^{n−1} (1+R²t)^{−3/2} dt`.
pub fn hyp2f1_via_euler(n: usize, r: f64) -> Result<f64> {
    check_n(n)?;
    let r2 = r * r;
    let breaks: Vec<f64> = if r2 > 1.0 {
        vec![0.0, 1.0 / r2, 1.0]
    } else {
        vec![0.0, 1.0]
    };
    let est = integrate_with_breaks(
        |t| (1.0 - t).powi(n as i32 - 1) / (1.0 + r2 * t).powf(1.5),
        &breaks,
        Tolerance::relative(1e-12),
    )?;
    Ok(n as f64 * est.value)
}

/// `J_n(R) = R^{2n} (2n−2)! π / (2^{2n−1} n! (n−1)!) · F(1, 3/2; n+1; −R²)`.
pub fn j_n_hypergeometric(n: usize, r: f64) -> Result<f64> {
    check_n(n)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let ln_pre = 2.0 * n as f64 * r.ln() + ln_factorial(2 * n - 2) + PI.ln()
        - (2 * n - 1) as f64 * 2f64.ln()
        - ln_factorial(n)
        - ln_factorial(n - 1);
    Ok(ln_pre.exp() * hyp2f1_via_euler(n, r)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConstantsResult {
    pub n: usize,
    #[serde(rename = "R")]
    pub r: f64,
    pub closed_form: f64,
    /// Twice the quadrature value of the `2n`-dimensional integral.
    pub quadrature: f64,
    /// `C_n(R)` rebuilt from the hypergeometric form of `J_n(R√2)`.
    pub hypergeom: f64,
    pub max_discrepancy: f64,
}

pub fn evaluate(n: usize, r: f64) -> Result<ConstantsResult> {
    let closed_form = c_n_closed(n, r)?;
    let quadrature = 2.0 * i_n_quadrature(n, r)?;
    let hypergeom = c_prefactor(n) / PI * j_n_hypergeometric(n, r * 2f64.sqrt())?;
    let max_discrepancy = (closed_form - quadrature)
        .abs()
        .max((closed_form - hypergeom).abs())
        .max((quadrature - hypergeom).abs());
    Ok(ConstantsResult {
        n,
        r,
        closed_form,
        quadrature,
        hypergeom,
        max_discrepancy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c1(r: f64) -> f64 {
        2.0 * PI * (1.0 - 1.0 / (1.0 + 2.0 * r * r).sqrt())
    }

    #[test]
    fn binomials() {
        assert_eq!(generalized_binomial(0.5, 0), 1.0);
        assert_eq!(generalized_binomial(0.5, 1), 0.5);
        assert_eq!(generalized_binomial(0.5, 2), -0.125);
        assert_eq!(generalized_binomial(5.0, 2), 10.0);
        assert_eq!(generalized_binomial(3.0, 4), 0.0);
    }

    #[test]
    fn taylor_polynomials() {
        for x in [0.0, 0.3, 7.0] {
            assert_eq!(p_n_taylor(1, x), 1.0);
            assert_eq!(p_n_taylor(2, x), 1.0 + x / 2.0);
            let p3 = 1.0 + 1.5 * x + 0.375 * x * x;
            assert_relative_eq!(p_n_taylor(3, x), p3, max_relative = 1e-15);
        }
        for n in 1..=6 {
            for x in [0.01, 1.0, 10.0] {
                assert!(p_n_taylor(n, x) > half_integer_power(n, x));
            }
        }
    }

    #[test]
    fn closed_form_examples() {
        for n in 1..=6 {
            assert_eq!(c_n_closed(n, 0.0).unwrap(), 0.0);
        }
        for r in [0.1, 1.0, 4.0] {
            assert_eq!(c_n_closed(1, r).unwrap(), c1(r));
        }
        assert!(c_n_closed(0, 1.0).is_err());
        assert!(c_n_closed(1, -1.0).is_err());
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for (n, r) in [(1, 1.0), (2, 1.0), (3, 2.0)] {
            let c = c_n_closed(n, r).unwrap();
            let q = 2.0 * i_n_quadrature(n, r).unwrap();
            assert!((c - q).abs() <= 1e-8 * (1.0 + c.abs()), "n={n} r={r}: {c} vs {q}");
        }
        assert_eq!(i_n_quadrature(1, 0.0).unwrap(), 0.0);
        // the n = 1 integral tends to π like π/(R√2)
        let big = i_n_quadrature(1, 200.0).unwrap();
        assert!(big < PI && PI - big < 1.01 * PI / (200.0 * 2f64.sqrt()));
    }

    #[test]
    fn hypergeometric_examples() {
        for n in 1..=4 {
            assert_relative_eq!(hyp2f1_via_euler(n, 0.0).unwrap(), 1.0, max_relative = 1e-14);
        }
        for r in [0.3, 1.0, 5.0] {
            let r2: f64 = r * r;
            let expected = 2.0 * (1.0 - 1.0 / (1.0 + r2).sqrt()) / r2;
            assert_relative_eq!(hyp2f1_via_euler(1, r).unwrap(), expected, max_relative = 1e-11);
        }
        for n in 1..=4 {
            for r in [0.5, 1.0, 3.0] {
                let a = j_n_hypergeometric(n, r).unwrap();
                let b = j_n_closed(n, r);
                assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0), "n={n} r={r}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn monte_carlo_agrees() {
        let spec = RngSpec::new(11, 0);
        let mc = i_n_monte_carlo(2, 1.0, 200_000, spec, Execution::Parallel).unwrap();
        let exact = c_n_closed(2, 1.0).unwrap() / 2.0;
        assert!((mc.value - exact).abs() <= 3.0 * mc.std_error, "{mc:?} vs {exact}");
        let seq = i_n_monte_carlo(2, 1.0, 200_000, spec, Execution::Sequential).unwrap();
        assert_eq!(mc, seq);
    }

    proptest! {
        #[test]
        fn positive_and_increasing(n in 1usize..=6, r in 0.01f64..10.0, dr in 1e-3f64..1.0) {
            let a = c_n_closed(n, r).unwrap();
            let b = c_n_closed(n, r + dr).unwrap();
            prop_assert!(a > 0.0);
            prop_assert!(b > a);
        }

        #[test]
        fn n1_specialization(r in 0.0f64..50.0) {
            prop_assert_eq!(c_n_closed(1, r).unwrap(), c1(r));
        }
    }
}
