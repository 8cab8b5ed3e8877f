//! Monte Carlo estimation of the excess number of zeros in Planck-scale balls,
//! the asymptotic theory for both regimes, and level-set reconstruction.

mod config;
mod grid;
mod output;

pub use config::{CenterSpec, ExperimentConfig, SymbolChoice};
pub use grid::{curve_cells, reconstruct_grid, score_against_curve, GridReport, ReconstructionScore};
pub use output::{
    grid_csv, plot_svg, simulation_csv, write_grid_csv, write_plot, write_simulation_csv, SIMULATION_HEADER,
};

use std::f64::consts::PI;
use std::fmt;

use serde::Serialize;

use crate::constants::c_n_closed;
use crate::error::{Error, Result};
use crate::geometry::{fs_distance, log_f2_laplacian_density, ChartPoint, Symbol};
use crate::par::{map_indexed, Execution};
use crate::sections::{sample_random_section, Basis, RngSpec};
use crate::toeplitz::OperatorMatrix;
use crate::zeros::{apply_operator, polynomial_roots_with, ZeroSet, BOUNDARY_TIE};

/// Centers with `|f| ≤ ON_ZERO_SCALE/√k` use the on-zero-set asymptotics.
pub const ON_ZERO_SCALE: f64 = 1.0;

/// Trials per parallel task.
const TRIAL_CHUNK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    OnZero,
    OffZero,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::OnZero => "on_zero",
            Regime::OffZero => "off_zero",
        })
    }
}

/// Leading-order prediction of the excess `𝓔` at `center`.
pub fn theory_value(f: &Symbol, center: ChartPoint, r: f64, k: usize) -> Result<(f64, Regime)> {
    let kf = k as f64;
    if f.eval(center).abs() <= ON_ZERO_SCALE / kf.sqrt() {
        Ok((c_n_closed(1, r)? / (2.0 * PI), Regime::OnZero))
    } else {
        let l1 = log_f2_laplacian_density(f, center)?;
        Ok((r * r * l1 / (2.0 * kf), Regime::OffZero))
    }
}

/// `k·Vol(B(x, R/√k))/2π`, the untwisted expected count.
pub fn baseline_count(k: usize, r: f64) -> f64 {
    let s = (r / (k as f64).sqrt()).sin();
    k as f64 * s * s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimatorReport {
    pub symbol: String,
    pub k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(skip)]
    pub center: ChartPoint,
    #[serde(rename = "R")]
    pub r: f64,
    pub sample_mean: f64,
    pub sample_std: f64,
    pub theory: f64,
    pub regime: Regime,
    pub z_score: f64,
}

impl EstimatorReport {
    pub fn std_error(&self) -> f64 {
        self.sample_std / (self.n as f64).sqrt()
    }
}

/// Exact integer moments of a count over trials.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub(crate) struct CountMoments {
    pub sum: u64,
    pub sum_sq: u64,
}

impl CountMoments {
    pub fn add(&mut self, c: u64) {
        self.sum += c;
        self.sum_sq += c * c;
    }

    pub fn merge(&mut self, o: &CountMoments) {
        self.sum += o.sum;
        self.sum_sq += o.sum_sq;
    }

    /// Mean and sample standard deviation (`N−1` normalization, `0` for one trial).
    pub fn mean_std(&self, n: usize) -> (f64, f64) {
        let nn = n as u128;
        let mean = self.sum as f64 / n as f64;
        if n < 2 {
            return (mean, 0.0);
        }
        let s = self.sum as u128;
        let num = nn * self.sum_sq as u128 - s * s;
        let var = num as f64 / (nn * (nn - 1)) as f64;
        (mean, var.sqrt())
    }
}

/// Zeros of `T s` for the section of trial `m`; a failure is retried once on a
/// perturbed stream, then reported.
pub(crate) fn trial_zeros(op: &OperatorMatrix, basis: &Basis, seed: u64, m: u64) -> Result<ZeroSet> {
    let attempt = |stream: u64| -> Result<ZeroSet> {
        let s = sample_random_section(op.degree(), RngSpec::new(seed, stream));
        Ok(polynomial_roots_with(basis, &apply_operator(op, &s)?)?.zeros)
    };
    attempt(m).or_else(|_| attempt(m | 1 << 63)).map_err(|e| {
        Error::Numeric(format!("trial {m} failed twice (seed {seed}): {e}"))
    })
}

/// Runs `n_trials` trials, feeding each zero set to `count` which adds into a
/// per-task accumulator of `slots` moments; accumulators are merged by index.
pub(crate) fn accumulate_trials<F>(
    op: &OperatorMatrix,
    seed: u64,
    n_trials: usize,
    slots: usize,
    exec: Execution,
    count: F,
) -> Result<Vec<CountMoments>>
where
    F: Fn(&ZeroSet, &mut [CountMoments]) + Sync + Send,
{
    let basis = Basis::new(op.degree());
    let chunks = n_trials.div_ceil(TRIAL_CHUNK);
    let partials = map_indexed(chunks, exec, |c| -> Result<Vec<CountMoments>> {
        let mut acc = vec![CountMoments::default(); slots];
        for m in c * TRIAL_CHUNK..((c + 1) * TRIAL_CHUNK).min(n_trials) {
            let zs = trial_zeros(op, &basis, seed, m as u64)?;
            count(&zs, &mut acc);
        }
        Ok(acc)
    });
    let mut total = vec![CountMoments::default(); slots];
    for p in partials {
        for (t, x) in total.iter_mut().zip(p?.iter()) {
            t.merge(x);
        }
    }
    Ok(total)
}

/// Distances from every root (with multiplicity) to `center`.
fn root_distances(zs: &ZeroSet, center: ChartPoint) -> Vec<f64> {
    zs.points().map(|p| fs_distance(p, center)).collect()
}

/// Estimator `𝓔(x, R, k, N)` for every pair of `cfg.centers × cfg.r_values`,
/// ordered center-major. Each trial's zeros are computed once and shared.
pub fn simulate(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<EstimatorReport>> {
    cfg.validate()?;
    let k = cfg.k;
    let symbol = cfg.symbol_function();
    let op = cfg.operator(k)?;
    let centers = cfg.chart_centers()?;
    let radii: Vec<f64> = cfg.r_values.iter().map(|r| r / (k as f64).sqrt()).collect();
    let nr = radii.len();

    let moments = accumulate_trials(&op, cfg.seed, cfg.n_trials, centers.len() * nr, exec, |zs, acc| {
        for (ci, &center) in centers.iter().enumerate() {
            let d = root_distances(zs, center);
            for (ri, &rho) in radii.iter().enumerate() {
                let c = d.iter().filter(|&&x| x < rho + BOUNDARY_TIE).count();
                acc[ci * nr + ri].add(c as u64);
            }
        }
    })?;

    let mut reports = Vec::with_capacity(moments.len());
    for (ci, &center) in centers.iter().enumerate() {
        for (ri, &r) in cfg.r_values.iter().enumerate() {
            let (mean, std) = moments[ci * nr + ri].mean_std(cfg.n_trials);
            let e = mean - baseline_count(k, r);
            let (theory, regime) = theory_value(&symbol, center, r, k)?;
            reports.push(EstimatorReport {
                symbol: symbol.name().to_string(),
                k,
                n: cfg.n_trials,
                center,
                r,
                sample_mean: e,
                sample_std: std,
                theory,
                regime,
                z_score: (e - theory) / (std / (cfg.n_trials as f64).sqrt()),
            });
        }
    }
    Ok(reports)
}

/// Single-pair convenience wrapper around [`simulate`].
pub fn estimator_e(cfg: &ExperimentConfig, center: ChartPoint, r: f64, exec: Execution) -> Result<EstimatorReport> {
    let mut one = cfg.clone();
    one.centers = vec![CenterSpec::from(center)];
    one.r_values = vec![r];
    Ok(simulate(&one, exec)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::SpherePoint;
    use approx::assert_relative_eq;

    #[test]
    fn theory_examples() {
        let h = Symbol::height();
        let (v, regime) = theory_value(&h, ChartPoint::new(1.0, 0.0), 1.0, 100).unwrap();
        assert_eq!(regime, Regime::OnZero);
        assert_relative_eq!(v, 1.0 - 1.0 / 3f64.sqrt(), max_relative = 1e-15);

        let (v, regime) = theory_value(&h, ChartPoint::origin(), 1.0, 100).unwrap();
        assert_eq!(regime, Regime::OffZero);
        assert_relative_eq!(v, -0.02, max_relative = 1e-12);

        let (v, regime) = theory_value(&Symbol::identity(), ChartPoint::new(0.3, 2.0), 2.0, 50).unwrap();
        assert_eq!((v, regime), (0.0, Regime::OffZero));

        // −2R²(1+|z|⁴)/(k(|z|²−1)²) off the equator
        let z = ChartPoint::new(0.3, 0.4);
        let (v, _) = theory_value(&h, z, 1.5, 400).unwrap();
        let t: f64 = 0.25;
        assert_relative_eq!(v, -2.0 * 2.25 * (1.0 + t * t) / (400.0 * (t - 1.0).powi(2)), max_relative = 1e-12);
    }

    #[test]
    fn moments_are_exact() {
        let mut m = CountMoments::default();
        for c in [3, 5, 4, 4] {
            m.add(c);
        }
        let (mean, std) = m.mean_std(4);
        assert_eq!(mean, 4.0);
        assert_relative_eq!(std, (2.0f64 / 3.0).sqrt(), max_relative = 1e-15);
        assert_eq!(CountMoments { sum: 7, sum_sq: 49 }.mean_std(1), (7.0, 0.0));
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            symbol: SymbolChoice::Height,
            k: 30,
            n_trials: 40,
            centers: vec![
                CenterSpec::Sphere { sphere: [1.0, 0.0, 0.0] },
                CenterSpec::Chart { re: 0.0, im: 0.0 },
            ],
            r_values: vec![0.5, 1.0, 2.0],
            seed: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn simulation_is_deterministic_across_execution() {
        let cfg = small_config();
        let seq = simulate(&cfg, Execution::Sequential).unwrap();
        let par = simulate(&cfg, Execution::Parallel).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.len(), 6);
        assert_eq!(seq[0].regime, Regime::OnZero);
        assert_eq!(seq[3].regime, Regime::OffZero);
        let single = estimator_e(&cfg, ChartPoint::origin(), 1.0, Execution::Parallel).unwrap();
        assert_eq!(single, seq[4]);
    }

    #[test]
    fn counts_match_direct_counting() {
        use crate::zeros::count_in_ball;
        let cfg = small_config();
        let op = cfg.operator(cfg.k).unwrap();
        let basis = Basis::new(cfg.k);
        let center = ChartPoint::from_sphere(SpherePoint::new(1.0, 0.0, 0.0).unwrap());
        let rho = 1.0 / (cfg.k as f64).sqrt();
        let mut direct = CountMoments::default();
        for m in 0..cfg.n_trials {
            let zs = trial_zeros(&op, &basis, cfg.seed, m as u64).unwrap();
            direct.add(count_in_ball(&zs, center, rho) as u64);
        }
        let reports = simulate(&cfg, Execution::Parallel).unwrap();
        let (mean, std) = direct.mean_std(cfg.n_trials);
        assert_eq!(reports[1].sample_mean, mean - baseline_count(cfg.k, 1.0));
        assert_eq!(reports[1].sample_std, std);
    }

    #[test]
    fn baseline_is_ball_volume() {
        let v = crate::geometry::ball_volume(0.1).unwrap();
        assert_relative_eq!(baseline_count(100, 1.0), 100.0 * v / (2.0 * PI), max_relative = 1e-14);
    }
}
