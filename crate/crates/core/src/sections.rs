//! Holomorphic sections of O(k) → CP¹ in the orthonormal monomial basis
//! `e_ℓ = √((k+1)·C(k,ℓ)/2π) z^ℓ`, Gaussian random sections and pointwise norms.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::ChartPoint;

/// `ln C(k, ℓ)` for every `ℓ` in `0..=k`, built with the ratio recurrence.
pub fn ln_binomials(k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for l in 1..=k {
        acc += ((k - l + 1) as f64 / l as f64).ln();
        out.push(acc);
    }
    // symmetrize so that factor(k, ℓ) == factor(k, k−ℓ) bit for bit
    for l in 0..=k / 2 {
        out[k - l] = out[l];
    }
    out
}

/// Precomputed `ln |e_ℓ|²` normalizations for one degree.
#[derive(Debug, Clone)]
pub struct Basis {
    k: usize,
    log_norm_sq: Vec<f64>,
}

impl Basis {
    pub fn new(k: usize) -> Self {
        let base = ((k + 1) as f64 / (2.0 * PI)).ln();
        let log_norm_sq = ln_binomials(k).into_iter().map(|lb| base + lb).collect();
        Self { k, log_norm_sq }
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    /// `ln((k+1)·C(k,ℓ)/2π)`, twice the log of the basis normalization.
    pub fn log_norm_sq(&self, l: usize) -> f64 {
        self.log_norm_sq[l]
    }

    /// Values `e_ℓ(z)` in the unitary frame of `h^k`, i.e. `e_ℓ(z) (1+|z|²)^{−k/2}`,
    /// so that `|Σ a_ℓ e_ℓ|²_{h^k}(z) = |Σ a_ℓ v_ℓ|²`. At infinity the frame of
    /// the swapped chart is used.
    pub fn frame_values(&self, z: ChartPoint) -> Vec<Complex64> {
        let k = self.k;
        let mut out = vec![Complex64::new(0.0, 0.0); k + 1];
        match z {
            ChartPoint::Infinity => {
                out[k] = Complex64::new((0.5 * self.log_norm_sq[k]).exp(), 0.0);
            }
            ChartPoint::Finite(z) => {
                let t = z.norm_sqr();
                if t == 0.0 {
                    out[0] = Complex64::new((0.5 * self.log_norm_sq[0]).exp(), 0.0);
                    return out;
                }
                let ln_t = t.ln();
                let ln_1pt = if t > 1.0 { ln_t + (1.0 / t).ln_1p() } else { t.ln_1p() };
                let theta = z.arg();
                let kf = k as f64;
                for (l, v) in out.iter_mut().enumerate() {
                    let ln_sq = self.log_norm_sq[l] + l as f64 * ln_t - kf * ln_1pt;
                    *v = Complex64::from_polar((0.5 * ln_sq).exp(), l as f64 * theta);
                }
            }
        }
        out
    }
}

/// `√((k+1)·C(k,ℓ)/2π)`. Overflows to `inf` once `k` exceeds roughly 2040; use
/// [`Basis::log_norm_sq`] there.
pub fn basis_norm_factor(k: usize, l: usize) -> Result<f64> {
    if l > k {
        return Err(Error::Index { k, index: l });
    }
    let lb = ln_binomials(k)[l];
    Ok((0.5 * (((k + 1) as f64 / (2.0 * PI)).ln() + lb)).exp())
}

/// Deterministic source of randomness for one Monte Carlo trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Coefficients of a section in the basis `e_{ℓ,k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionVector {
    k: usize,
    coeffs: Vec<Complex64>,
}

impl SectionVector {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Domain("a section of O(k) needs k+1 ≥ 1 coefficients".into()));
        }
        Ok(Self {
            k: coeffs.len() - 1,
            coeffs,
        })
    }

    pub fn zero(k: usize) -> Self {
        Self {
            k,
            coeffs: vec![Complex64::new(0.0, 0.0); k + 1],
        }
    }

    /// The basis section `e_{ℓ,k}`.
    pub fn basis(k: usize, l: usize) -> Result<Self> {
        if l > k {
            return Err(Error::Index { k, index: l });
        }
        let mut s = Self::zero(k);
        s.coeffs[l] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.norm_sqr() == 0.0)
    }
}

/// Draws `Σ α_ℓ e_ℓ` with `α_ℓ` i.i.d. standard complex Gaussians (`E|α|² = 1`).
pub fn sample_random_section(k: usize, spec: RngSpec) -> SectionVector {
    let mut rng = spec.rng();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let coeffs = (0..=k)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * scale, im * scale)
        })
        .collect();
    SectionVector { k, coeffs }
}

/// `|s(z)|²_{h^k}`.
pub fn pointwise_norm_sq(s: &SectionVector, z: ChartPoint) -> f64 {
    norm_sq_with(&Basis::new(s.k), s, z)
}

pub fn norm_sq_with(basis: &Basis, s: &SectionVector, z: ChartPoint) -> f64 {
    debug_assert_eq!(basis.degree(), s.k);
    let v = basis.frame_values(z);
    s.coeffs
        .iter()
        .zip(&v)
        .map(|(a, e)| a * e)
        .sum::<Complex64>()
        .norm_sqr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn norm_factor_examples() {
        assert_relative_eq!(basis_norm_factor(0, 0).unwrap(), (1.0 / (2.0 * PI)).sqrt(), max_relative = 1e-15);
        assert_relative_eq!(basis_norm_factor(2, 1).unwrap(), (3.0 / PI).sqrt(), max_relative = 1e-15);
        assert!(matches!(basis_norm_factor(3, 4), Err(Error::Index { k: 3, index: 4 })));
        for k in [7, 60, 61, 333] {
            for l in 0..=k {
                assert_eq!(basis_norm_factor(k, l).unwrap(), basis_norm_factor(k, k - l).unwrap());
            }
        }
    }

    #[test]
    fn log_binomials_match_exact_small_values() {
        let lb = ln_binomials(10);
        let exact = [1.0, 10.0, 45.0, 120.0, 210.0, 252.0];
        for (l, e) in exact.iter().enumerate() {
            assert_relative_eq!(lb[l].exp(), *e, max_relative = 1e-14);
        }
        // C(60, 30) = 118264581564861424
        assert_relative_eq!(ln_binomials(60)[30], 118_264_581_564_861_424f64.ln(), max_relative = 1e-15);
    }

    #[test]
    fn basis_section_at_origin() {
        for k in [0, 3, 40] {
            let s = SectionVector::basis(k, 0).unwrap();
            assert_relative_eq!(
                pointwise_norm_sq(&s, ChartPoint::origin()),
                (k + 1) as f64 / (2.0 * PI),
                max_relative = 1e-14
            );
        }
        assert_eq!(pointwise_norm_sq(&SectionVector::zero(5), ChartPoint::new(0.3, 0.2)), 0.0);
    }

    #[test]
    fn monomial_norm_matches_direct_formula() {
        // |e_ℓ(z)|² = (k+1) C(k,ℓ)/2π · |z|^{2ℓ}/(1+|z|²)^k
        let k = 12;
        let z = Complex64::new(0.7, -1.1);
        let t = z.norm_sqr();
        for l in 0..=k {
            let c = [1., 12., 66., 220., 495., 792., 924., 792., 495., 220., 66., 12., 1.][l];
            let direct = (k + 1) as f64 * c / (2.0 * PI) * t.powi(l as i32) / (1.0 + t).powi(k as i32);
            let s = SectionVector::basis(k, l).unwrap();
            assert_relative_eq!(pointwise_norm_sq(&s, ChartPoint::Finite(z)), direct, max_relative = 1e-13);
        }
    }

    #[test]
    fn infinity_uses_top_coefficient() {
        let k = 9;
        let top = SectionVector::basis(k, k).unwrap();
        let bottom = SectionVector::basis(k, 0).unwrap();
        let expected = (k + 1) as f64 / (2.0 * PI);
        assert_relative_eq!(pointwise_norm_sq(&top, ChartPoint::Infinity), expected, max_relative = 1e-14);
        assert_eq!(pointwise_norm_sq(&bottom, ChartPoint::Infinity), 0.0);
        // continuity towards infinity
        let far = ChartPoint::new(1e9, 1e9);
        assert_relative_eq!(pointwise_norm_sq(&top, far), expected, max_relative = 1e-12);
    }

    #[test]
    fn bergman_density_is_constant() {
        let mut rng = RngSpec::new(11, 0).rng();
        for k in [1, 10, 100, 500] {
            let basis = Basis::new(k);
            let expected = (k + 1) as f64 / (2.0 * PI);
            for _ in 0..100 {
                let r = 10f64.powf(rng.random_range(-3.0..3.0));
                let z = ChartPoint::Finite(Complex64::from_polar(r, rng.random_range(0.0..2.0 * PI)));
                let total: f64 = basis.frame_values(z).iter().map(|v| v.norm_sqr()).sum();
                assert!(((total - expected) / expected).abs() <= 1e-10, "k={k} z={z}: {total}");
            }
        }
    }

    #[test]
    fn sampling_is_deterministic_per_stream() {
        let a = sample_random_section(30, RngSpec::new(7, 3));
        let b = sample_random_section(30, RngSpec::new(7, 3));
        let c = sample_random_section(30, RngSpec::new(7, 4));
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.degree(), 30);
        assert_eq!(a.coeffs().len(), 31);
    }

    #[test]
    fn sample_moments() {
        let k = 9;
        let n = 10_000;
        let norms: Vec<f64> = (0..n)
            .map(|m| sample_random_section(k, RngSpec::new(1, m)).l2_norm_sq())
            .collect();
        let mean = norms.iter().sum::<f64>() / n as f64;
        // ‖s‖² is Gamma(k+1, 1): variance k+1
        let se = ((k + 1) as f64 / n as f64).sqrt();
        assert!((mean - (k + 1) as f64).abs() <= 3.0 * se, "mean {mean}");

        let pairs: Vec<(f64, f64)> = (0..n)
            .map(|m| {
                let c = sample_random_section(0, RngSpec::new(2, m)).coeffs()[0];
                (c.re, c.im)
            })
            .collect();
        let nf = n as f64;
        let (mx, my) = pairs.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0 / nf, acc.1 + p.1 / nf));
        let cov = pairs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / nf;
        let vx = pairs.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>() / nf;
        let vy = pairs.iter().map(|p| (p.1 - my).powi(2)).sum::<f64>() / nf;
        assert!((cov / (vx * vy).sqrt()).abs() < 3.0 / nf.sqrt());
        assert!((vx - 0.5).abs() < 0.03 && (vy - 0.5).abs() < 0.03);
    }

    #[test]
    fn empty_section_rejected() {
        assert!(SectionVector::new(vec![]).is_err());
        assert!(SectionVector::basis(2, 3).is_err());
    }
}
