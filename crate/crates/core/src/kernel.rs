//! Diagonal of the twisted Bergman kernel `B_k = T*T` and checks of its
//! large-`k` expansion.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, SpherePoint, Symbol};
use crate::par::{map_indexed, Execution};
use crate::sections::Basis;
use crate::toeplitz::OperatorMatrix;

/// `Σ_ℓ |(T e_ℓ)(z)|²_{h^k}`.
pub fn bergman_diag(op: &OperatorMatrix, z: ChartPoint) -> f64 {
    bergman_diag_with(&Basis::new(op.degree()), op, z)
}

pub fn bergman_diag_with(basis: &Basis, op: &OperatorMatrix, z: ChartPoint) -> f64 {
    op.apply_transpose(&basis.frame_values(z))
        .iter()
        .map(|c| c.norm_sqr())
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionFit {
    pub x: String,
    /// `f(x)²`, the expected leading coefficient.
    pub f_squared: f64,
    pub b0_est: f64,
    pub b1_est: f64,
    pub c_est: f64,
    pub k_list: Vec<usize>,
    /// Root-mean-square misfit of the three-parameter model.
    pub residual: f64,
}

/// Least-squares fit of `(2π/k)·B_k(x,x) ≈ b₀ + b₁/k + c/k²` over `k_list`.
pub fn expansion_fit<F>(factory: F, f: &Symbol, z: ChartPoint, k_list: &[usize]) -> Result<ExpansionFit>
where
    F: Fn(usize) -> Result<OperatorMatrix>,
{
    if k_list.len() < 3 {
        return Err(Error::Domain(format!("need at least 3 degrees, got {}", k_list.len())));
    }
    if k_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("degrees must be strictly increasing".into()));
    }
    let mut design = DMatrix::<f64>::zeros(k_list.len(), 3);
    let mut rhs = DVector::<f64>::zeros(k_list.len());
    for (row, &k) in k_list.iter().enumerate() {
        let op = factory(k)?;
        if op.degree() != k {
            return Err(Error::Dimension {
                expected: k + 1,
                found: op.dim(),
            });
        }
        let kf = k as f64;
        design[(row, 0)] = 1.0;
        design[(row, 1)] = 1.0 / kf;
        design[(row, 2)] = 1.0 / (kf * kf);
        rhs[row] = 2.0 * PI / kf * bergman_diag(&op, z);
    }
    // scale columns before solving; the 1/k² column is tiny otherwise
    let scales: Vec<f64> = (0..3).map(|j| design.column(j).norm()).collect();
    for (j, s) in scales.iter().enumerate() {
        design.column_mut(j).unscale_mut(*s);
    }
    let svd = design.clone().svd(true, true);
    let (smax, smin) = svd
        .singular_values
        .iter()
        .fold((0.0f64, f64::INFINITY), |(hi, lo), &s| (hi.max(s), lo.min(s)));
    if !(smin > 0.0) || smax / smin > 1e10 {
        return Err(Error::Numeric(format!(
            "expansion fit is ill-conditioned (condition number {:e})",
            smax / smin
        )));
    }
    let sol = svd.solve(&rhs, 0.0).map_err(|e| Error::Numeric(e.to_string()))?;
    let misfit = &design * &sol - &rhs;
    let coef: Vec<f64> = sol.iter().zip(&scales).map(|(c, s)| c / s).collect();
    let fz = f.eval(z);
    Ok(ExpansionFit {
        x: z.to_string(),
        f_squared: fz * fz,
        b0_est: coef[0],
        b1_est: coef[1],
        c_est: coef[2],
        k_list: k_list.to_vec(),
        residual: misfit.norm() / (k_list.len() as f64).sqrt(),
    })
}

/// Minimum of `B_k(z,z)` over `grid`.
pub fn positivity_scan(op: &OperatorMatrix, grid: &[ChartPoint], exec: Execution) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Domain("positivity scan needs a nonempty grid".into()));
    }
    let basis = Basis::new(op.degree());
    let values = map_indexed(grid.len(), exec, |i| bergman_diag_with(&basis, op, grid[i]));
    Ok(values.into_iter().fold(f64::INFINITY, f64::min))
}

/// `n` nearly uniform points on the sphere (Fibonacci lattice), as chart points.
pub fn fibonacci_sphere(n: usize) -> Vec<ChartPoint> {
    let golden = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let x3 = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let rho = (1.0 - x3 * x3).sqrt();
            let phi = golden * i as f64;
            ChartPoint::from_sphere(SpherePoint {
                x1: rho * phi.cos(),
                x2: rho * phi.sin(),
                x3,
            })
        })
        .collect()
}
