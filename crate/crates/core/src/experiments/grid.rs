use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use super::{accumulate_trials, baseline_count, ExperimentConfig};
use crate::constants::c_n_closed;
use crate::error::{Error, Result};
use crate::geometry::{fs_distance, ChartPoint, Symbol};
use crate::par::Execution;
use crate::zeros::BOUNDARY_TIE;

/// Per-cell estimates of `𝓔` on an `n × n` grid over `{|Re z|, |Im z| ≤ square}`.
/// Cells are stored row-major from the bottom-left: index `iy·n + ix`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub symbol: String,
    pub n: usize,
    pub square: f64,
    pub k: usize,
    pub n_trials: usize,
    pub r: f64,
    /// Classification threshold, half the on-zero prediction.
    pub tau: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl GridReport {
    pub fn cell_center(&self, ix: usize, iy: usize) -> ChartPoint {
        cell_center(self.n, self.square, ix, iy)
    }

    pub fn on_zero_mask(&self) -> Vec<bool> {
        self.mean.iter().map(|&e| e > self.tau).collect()
    }
}

fn cell_center(n: usize, square: f64, ix: usize, iy: usize) -> ChartPoint {
    let h = 2.0 * square / n as f64;
    ChartPoint::new(-square + (ix as f64 + 0.5) * h, -square + (iy as f64 + 0.5) * h)
}

enum Candidates {
    None,
    All,
    Box((usize, usize), (usize, usize)),
}

/// Cells whose centers lie in the geodesic ball `B(p, ρ)`, found through the
/// chart disk that the ball maps to.
struct CellIndex {
    n: usize,
    square: f64,
    centers: Vec<ChartPoint>,
}

impl CellIndex {
    fn new(n: usize, square: f64) -> Self {
        let centers = (0..n * n).map(|i| cell_center(n, square, i % n, i / n)).collect();
        Self { n, square, centers }
    }

    /// Bounding ranges `(ix, iy)` of the chart disk `{z : d(z, w) < ρ}`.
    fn candidates(&self, p: ChartPoint, rho: f64) -> Candidates {
        let Some(w) = p.finite() else {
            return Candidates::All;
        };
        let s = (rho + 1e-9).sin();
        let a = (1.0 + w.norm_sqr()) * s * s;
        if a >= 1.0 - 1e-12 {
            return Candidates::All;
        }
        let c: Complex64 = w / (1.0 - a);
        let rad = (a * (1.0 + w.norm_sqr() - a)).sqrt() / (1.0 - a) * (1.0 + 1e-9) + 1e-12;
        let h = 2.0 * self.square / self.n as f64;
        let range = |lo: f64, hi: f64| -> Option<(usize, usize)> {
            let i0 = ((lo + self.square) / h - 0.5).floor().max(0.0);
            let i1 = ((hi + self.square) / h - 0.5).ceil().min(self.n as f64 - 1.0);
            (i0 <= i1).then_some((i0 as usize, i1 as usize))
        };
        match (range(c.re - rad, c.re + rad), range(c.im - rad, c.im + rad)) {
            (Some(x), Some(y)) => Candidates::Box(x, y),
            _ => Candidates::None,
        }
    }

    fn count_into(&self, p: ChartPoint, rho: f64, counts: &mut [u32]) {
        let mut hit = |i: usize| {
            if fs_distance(p, self.centers[i]) < rho + BOUNDARY_TIE {
                counts[i] += 1;
            }
        };
        match self.candidates(p, rho) {
            Candidates::None => {}
            Candidates::All => (0..self.centers.len()).for_each(&mut hit),
            Candidates::Box((x0, x1), (y0, y1)) => {
                for iy in y0..=y1 {
                    for ix in x0..=x1 {
                        hit(iy * self.n + ix);
                    }
                }
            }
        }
    }
}

/// Estimates `𝓔(z, R, k, N)` at every cell center of the configured grid.
pub fn reconstruct_grid(cfg: &ExperimentConfig, r: f64, exec: Execution) -> Result<GridReport> {
    let mut check = cfg.clone();
    check.r_values = vec![r];
    check.validate()?;
    if cfg.grid == 0 || !(cfg.square > 0.0) {
        return Err(Error::Domain(format!(
            "grid needs at least one cell and a positive square, got {} and {}",
            cfg.grid, cfg.square
        )));
    }
    let k = cfg.k;
    let n = cfg.grid;
    let rho = r / (k as f64).sqrt();
    let index = CellIndex::new(n, cfg.square);
    let op = cfg.operator(k)?;
    let moments = accumulate_trials(&op, cfg.seed, cfg.n_trials, n * n, exec, |zs, acc| {
        let mut counts = vec![0u32; n * n];
        for p in zs.points() {
            index.count_into(p, rho, &mut counts);
        }
        for (m, &c) in acc.iter_mut().zip(&counts) {
            m.add(c as u64);
        }
    })?;
    let baseline = baseline_count(k, r);
    let (mean, std) = moments
        .iter()
        .map(|m| {
            let (mu, sd) = m.mean_std(cfg.n_trials);
            (mu - baseline, sd)
        })
        .unzip();
    Ok(GridReport {
        symbol: cfg.symbol_function().name().to_string(),
        n,
        square: cfg.square,
        k,
        n_trials: cfg.n_trials,
        r,
        tau: 0.5 * c_n_closed(1, r)? / (2.0 * PI),
        mean,
        std,
    })
}

/// Cells crossed by `{f = 0}`: `f` changes sign among the four corners and the center.
pub fn curve_cells(f: &Symbol, n: usize, square: f64) -> Vec<bool> {
    let h = 2.0 * square / n as f64;
    (0..n * n)
        .map(|i| {
            let (ix, iy) = ((i % n) as f64, (i / n) as f64);
            let x0 = -square + ix * h;
            let y0 = -square + iy * h;
            let samples = [
                (x0, y0),
                (x0 + h, y0),
                (x0, y0 + h),
                (x0 + h, y0 + h),
                (x0 + 0.5 * h, y0 + 0.5 * h),
            ]
            .map(|(x, y)| f.eval(ChartPoint::new(x, y)));
            samples.iter().any(|&v| v >= 0.0) && samples.iter().any(|&v| v <= 0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionScore {
    /// Fraction of curve cells classified on-zero.
    pub recall: f64,
    /// Fraction of cells more than one cell away from the curve classified on-zero.
    pub false_positive_rate: f64,
    pub curve_cells: usize,
    pub far_cells: usize,
}

pub fn score_against_curve(mask: &[bool], curve: &[bool], n: usize) -> ReconstructionScore {
    assert_eq!(mask.len(), n * n);
    assert_eq!(curve.len(), n * n);
    let near = |i: usize| {
        let (ix, iy) = ((i % n) as i64, (i / n) as i64);
        (-1..=1).any(|dy| {
            (-1..=1).any(|dx| {
                let (x, y) = (ix + dx, iy + dy);
                x >= 0 && y >= 0 && x < n as i64 && y < n as i64 && curve[(y * n as i64 + x) as usize]
            })
        })
    };
    let (mut on_curve, mut hits, mut far, mut false_pos) = (0, 0, 0, 0);
    for i in 0..n * n {
        if curve[i] {
            on_curve += 1;
            hits += mask[i] as usize;
        } else if !near(i) {
            far += 1;
            false_pos += mask[i] as usize;
        }
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    ReconstructionScore {
        recall: ratio(hits, on_curve),
        false_positive_rate: ratio(false_pos, far),
        curve_cells: on_curve,
        far_cells: far,
    }
}
