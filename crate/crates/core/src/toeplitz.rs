//! Berezin-Toeplitz operators `T_k(f) = Π_k f` as matrices in the orthonormal
//! basis `e_{ℓ,k}`, both from closed forms and from a quadrature oracle.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, Symbol};
use crate::par::{try_map_indexed, Execution};
use crate::quad::{integrate_with_breaks, Tolerance};
use crate::sections::ln_binomials;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Matrix `M` of an operator on `H⁰(CP¹, O(k))` with `T e_m = Σ_ℓ M[ℓ,m] e_ℓ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    k: usize,
    entries: DMatrix<Complex64>,
    bandwidth: usize,
}

impl OperatorMatrix {
    pub fn from_matrix(entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() || entries.nrows() == 0 {
            return Err(Error::Dimension {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        let k = entries.nrows() - 1;
        let mut bandwidth = 0;
        for m in 0..=k {
            for l in 0..=k {
                if entries[(l, m)] != ZERO {
                    bandwidth = bandwidth.max(l.abs_diff(m));
                }
            }
        }
        Ok(Self { k, entries, bandwidth })
    }

    pub fn degree(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.k + 1
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    /// Largest `|ℓ−m|` with a nonzero entry.
    pub fn bandwidth(&self) -> usize {
        self.bandwidth
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[(row, col)]
    }

    /// `M a`, touching only the band.
    pub fn apply(&self, a: &[Complex64]) -> Result<Vec<Complex64>> {
        if a.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: a.len(),
            });
        }
        let n = self.dim();
        let bw = self.bandwidth;
        Ok((0..n)
            .map(|l| {
                let lo = l.saturating_sub(bw);
                let hi = (l + bw).min(n - 1);
                (lo..=hi).map(|m| self.entries[(l, m)] * a[m]).sum()
            })
            .collect())
    }

    /// `M^T a`; coefficient `ℓ` is `Σ_j M[j,ℓ] a_j`.
    pub fn apply_transpose(&self, a: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        let bw = self.bandwidth;
        (0..n)
            .map(|l| {
                let lo = l.saturating_sub(bw);
                let hi = (l + bw).min(n - 1);
                (lo..=hi).map(|j| self.entries[(j, l)] * a[j]).sum()
            })
            .collect()
    }

    pub fn compose(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.k != other.k {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        OperatorMatrix::from_matrix(&self.entries * &other.entries)
    }

    pub fn sub(&self, other: &OperatorMatrix) -> Result<OperatorMatrix> {
        if self.k != other.k {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        OperatorMatrix::from_matrix(&self.entries - &other.entries)
    }

    /// `max |M[ℓ,m] − conj(M[m,ℓ])|`.
    pub fn self_adjoint_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for m in l..n {
                worst = worst.max((self.entries[(l, m)] - self.entries[(m, l)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_entry_discrepancy(&self, other: &OperatorMatrix) -> f64 {
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Eigenvalues of the Hermitian part `(M + M†)/2`, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let h = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Spectral radius, for self-adjoint matrices.
    pub fn spectral_radius(&self) -> f64 {
        self.hermitian_eigenvalues().iter().fold(0.0, |acc, e| acc.max(e.abs()))
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        self.entries
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .fold(0.0, |acc: f64, s| acc.max(*s))
    }

    /// Debug dump with header `row,col,re,im`, one line per nonzero entry.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |source| Error::Io {
            path: path.display().to_string(),
            source,
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "row,col,re,im").map_err(io)?;
        for l in 0..self.dim() {
            for m in 0..self.dim() {
                let v = self.entries[(l, m)];
                if v != ZERO {
                    writeln!(out, "{l},{m},{:?},{:?}", v.re, v.im).map_err(io)?;
                }
            }
        }
        out.flush().map_err(io)
    }
}

pub fn op_identity(k: usize) -> OperatorMatrix {
    OperatorMatrix {
        k,
        entries: DMatrix::identity(k + 1, k + 1),
        bandwidth: 0,
    }
}

/// Quantization of the height `x₃`: `(1/(k+2))(2z d/dz − k)`, diagonal with
/// entries `(2ℓ−k)/(k+2)`.
pub fn op_height(k: usize) -> OperatorMatrix {
    let kf = k as f64;
    let diag = (0..=k).map(|l| Complex64::new((2.0 * l as f64 - kf) / (kf + 2.0), 0.0));
    OperatorMatrix {
        k,
        entries: DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(k + 1, diag)),
        bandwidth: 0,
    }
}

/// Banded matrix of a quantization of `x₁x₂ − λ`:
/// `T e_ℓ = (−i/(k+2)²)(μ_{ℓ,ℓ−2} e_{ℓ−2} − μ_{ℓ+2,ℓ} e_{ℓ+2}) − λ e_ℓ`,
/// with `μ_{p,q} = √(p(p−1)(k−q)(k−q−1))` when `p, q ∈ {2, …, k−2}` and zero otherwise.
pub fn op_xy_lambda(k: usize, lambda: f64) -> Result<OperatorMatrix> {
    if !(lambda > 0.0 && lambda < 0.5) {
        return Err(Error::Domain(format!(
            "λ = {lambda} must lie in (0, 1/2) for x₁x₂ − λ to vanish transversally"
        )));
    }
    let n = k + 1;
    let kf = k as f64;
    let mu = |p: usize, q: usize| -> f64 {
        let admissible = |i: usize| i >= 2 && i + 2 <= k;
        if admissible(p) && admissible(q) {
            let (p, q) = (p as f64, q as f64);
            (p * (p - 1.0) * (kf - q) * (kf - q - 1.0)).sqrt()
        } else {
            0.0
        }
    };
    let scale = 1.0 / ((kf + 2.0) * (kf + 2.0));
    let mut m = DMatrix::from_element(n, n, ZERO);
    for l in 0..n {
        m[(l, l)] = Complex64::new(-lambda, 0.0);
        if l >= 2 {
            m[(l - 2, l)] = Complex64::new(0.0, -scale * mu(l, l - 2));
        }
        if l + 2 < n {
            m[(l + 2, l)] = Complex64::new(0.0, scale * mu(l + 2, l));
        }
    }
    OperatorMatrix::from_matrix(m)
}

/// Number of angles used for the angular Fourier coefficients of a symbol.
fn angular_points(band: usize) -> usize {
    (4 * band + 16).max(32)
}

/// `T_k(f)` by quadrature of `⟨f e_m, e_ℓ⟩`.
///
/// Writing `z = r e^{iφ}` and `x = r²/(1+r²)`, phase orthogonality reduces each
/// entry to
/// `M[ℓ,m] = (k+1)√(C(k,ℓ)C(k,m)) ∫₀¹ f_{ℓ−m}(r) x^a (1−x)^{k−a} dx`, `a = (ℓ+m)/2`,
/// where `f_j(r)` is the `j`-th angular Fourier coefficient of `f` on `|z| = r`.
/// Only `|ℓ−m| ≤ f.max_harmonic()` is computed when the symbol declares it.
pub fn op_from_symbol_quadrature(k: usize, f: &Symbol) -> Result<OperatorMatrix> {
    op_from_symbol_quadrature_with(k, f, Execution::Parallel)
}

pub fn op_from_symbol_quadrature_with(k: usize, f: &Symbol, exec: Execution) -> Result<OperatorMatrix> {
    let n = k + 1;
    let band = f.max_harmonic().unwrap_or(k).min(k);
    let points = angular_points(band);
    let lnb = ln_binomials(k);
    let kf = k as f64;
    let tol = Tolerance::relative(1e-10).with_abs(1e-14);

    let rows = try_map_indexed(n, exec, |l| -> Result<Vec<(usize, Complex64)>> {
        let lo = l.saturating_sub(band);
        let hi = (l + band).min(k);
        let mut row = Vec::with_capacity(hi - lo + 1);
        for m in lo..=hi {
            let j = l as i64 - m as i64;
            let a = 0.5 * (l + m) as f64;
            let log_prefactor = ((k + 1) as f64).ln() + 0.5 * (lnb[l] + lnb[m]);
            let angular = |r: f64| -> Complex64 {
                let mut acc = ZERO;
                for p in 0..points {
                    let phi = 2.0 * PI * p as f64 / points as f64;
                    let v = f.eval(ChartPoint::Finite(Complex64::from_polar(r, phi)));
                    acc += Complex64::from_polar(v, -(j as f64) * phi);
                }
                acc / points as f64
            };
            let integrand = |x: f64| -> Complex64 {
                if x <= 0.0 || x >= 1.0 {
                    return ZERO;
                }
                let mut lw = log_prefactor + (kf - a) * (-x).ln_1p();
                if a > 0.0 {
                    lw += a * x.ln();
                }
                let r = (x / (1.0 - x)).sqrt();
                angular(r) * lw.exp()
            };
            let value = integrate_with_breaks(integrand, &peak_breaks(a, kf), tol).map_err(|e| {
                Error::Numeric(format!("T_k({}) entry ({l},{m}) at k={k}: {e}", f.name()))
            })?;
            row.push((m, value.value));
        }
        Ok(row)
    })?;

    let mut entries = DMatrix::from_element(n, n, ZERO);
    for (l, row) in rows.into_iter().enumerate() {
        for (m, v) in row {
            entries[(l, m)] = v;
        }
    }
    OperatorMatrix::from_matrix(entries)
}

/// Partition of `[0, 1]` around the peak of `x^a (1−x)^{k−a}`.
fn peak_breaks(a: f64, k: f64) -> Vec<f64> {
    if k == 0.0 {
        return vec![0.0, 1.0];
    }
    let peak = a / k;
    let sigma = (peak * (1.0 - peak) / k).sqrt() + 1.0 / k;
    let mut breaks = vec![0.0, 1.0, peak];
    for w in [2.0, 5.0, 10.0, 20.0] {
        breaks.push(peak - w * sigma);
        breaks.push(peak + w * sigma);
    }
    breaks.retain(|b| (0.0..=1.0).contains(b));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

static SPIN_CACHE: Lazy<Mutex<HashMap<(u8, usize), Arc<OperatorMatrix>>>> = Lazy::new(Default::default);

fn cached(which: u8, k: usize, symbol: fn() -> Symbol) -> Result<Arc<OperatorMatrix>> {
    if let Some(m) = SPIN_CACHE.lock().expect("cache poisoned").get(&(which, k)) {
        return Ok(Arc::clone(m));
    }
    let m = Arc::new(op_from_symbol_quadrature(k, &symbol())?);
    SPIN_CACHE
        .lock()
        .expect("cache poisoned")
        .insert((which, k), Arc::clone(&m));
    Ok(m)
}

/// `T_k(x₁)` from quadrature, cached per degree.
pub fn op_x1(k: usize) -> Result<Arc<OperatorMatrix>> {
    cached(1, k, Symbol::x1)
}

/// `T_k(x₂)` from quadrature, cached per degree.
pub fn op_x2(k: usize) -> Result<Arc<OperatorMatrix>> {
    cached(2, k, Symbol::x2)
}

/// `T_k(x₁) T_k(x₂) − λ Id` from the quadrature matrices.
pub fn op_xy_product(k: usize, lambda: f64) -> Result<OperatorMatrix> {
    let x2 = op_x2(k)?;
    let prod = op_x1(k)?.compose(&x2)?;
    let shift = DMatrix::identity(k + 1, k + 1) * Complex64::new(lambda, 0.0);
    OperatorMatrix::from_matrix(prod.entries - shift)
}

/// Side-by-side comparisons of the closed-form matrices against quadrature.
#[derive(Debug, Clone)]
pub struct ToeplitzReport {
    pub k: usize,
    pub identity_vs_quadrature: f64,
    pub height_vs_quadrature: f64,
    pub x1_self_adjoint_defect: f64,
    pub x2_self_adjoint_defect: f64,
    pub sum_of_squares_defect: f64,
    pub xy_self_adjoint_defect: f64,
    pub xy_vs_product: f64,
    pub xy_spectral_radius: f64,
    pub height_spectral_radius: f64,
}

pub fn verify(k: usize, lambda: f64) -> Result<ToeplitzReport> {
    let id_q = op_from_symbol_quadrature(k, &Symbol::identity())?;
    let h_q = op_from_symbol_quadrature(k, &Symbol::height())?;
    let x1 = op_x1(k)?;
    let x2 = op_x2(k)?;
    let h = op_height(k);
    let sum = (x1.entries() * x1.entries()) + (x2.entries() * x2.entries()) + (h.entries() * h.entries())
        - DMatrix::<Complex64>::identity(k + 1, k + 1);
    let sum = OperatorMatrix::from_matrix(sum)?;
    let xy = op_xy_lambda(k, lambda)?;
    Ok(ToeplitzReport {
        k,
        identity_vs_quadrature: id_q.max_entry_discrepancy(&op_identity(k)),
        height_vs_quadrature: h_q.max_entry_discrepancy(&h),
        x1_self_adjoint_defect: x1.self_adjoint_defect(),
        x2_self_adjoint_defect: x2.self_adjoint_defect(),
        sum_of_squares_defect: sum.spectral_radius(),
        xy_self_adjoint_defect: xy.self_adjoint_defect(),
        xy_vs_product: xy.max_entry_discrepancy(&op_xy_product(k, lambda)?),
        xy_spectral_radius: xy.spectral_radius(),
        height_spectral_radius: h.spectral_radius(),
    })
}
