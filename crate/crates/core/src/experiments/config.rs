use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ChartPoint, SpherePoint, Symbol};
use crate::toeplitz::{op_height, op_identity, op_xy_lambda, OperatorMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymbolChoice {
    #[default]
    Height,
    Xy,
    Identity,
}

impl FromStr for SymbolChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "height" => Ok(SymbolChoice::Height),
            "xy" => Ok(SymbolChoice::Xy),
            "identity" => Ok(SymbolChoice::Identity),
            other => Err(Error::Domain(format!(
                "unknown symbol {other:?} (expected height, xy or identity)"
            ))),
        }
    }
}

impl fmt::Display for SymbolChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolChoice::Height => "height",
            SymbolChoice::Xy => "xy",
            SymbolChoice::Identity => "identity",
        })
    }
}

/// A ball center given either on the unit sphere or in the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterSpec {
    Sphere { sphere: [f64; 3] },
    Chart { re: f64, im: f64 },
}

impl CenterSpec {
    pub fn to_chart(&self) -> Result<ChartPoint> {
        match *self {
            CenterSpec::Sphere { sphere: [x1, x2, x3] } => Ok(ChartPoint::from_sphere(SpherePoint::new(x1, x2, x3)?)),
            CenterSpec::Chart { re, im } => {
                if re.is_finite() && im.is_finite() {
                    Ok(ChartPoint::new(re, im))
                } else {
                    Err(Error::Domain(format!("chart center {re}+{im}i is not finite")))
                }
            }
        }
    }
}

impl From<ChartPoint> for CenterSpec {
    fn from(p: ChartPoint) -> Self {
        match p {
            ChartPoint::Finite(z) => CenterSpec::Chart { re: z.re, im: z.im },
            ChartPoint::Infinity => CenterSpec::Sphere { sphere: [0.0, 0.0, 1.0] },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub symbol: SymbolChoice,
    /// Level of the `xy` symbol `x₁x₂ − λ`.
    pub lambda: f64,
    pub k: usize,
    pub n_trials: usize,
    pub centers: Vec<CenterSpec>,
    pub r_values: Vec<f64>,
    pub seed: u64,
    pub threads: Option<usize>,
    /// Cells per side of the reconstruction grid.
    pub grid: usize,
    /// Half-width of the chart square `{|Re z|, |Im z| ≤ square}`.
    pub square: f64,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            symbol: SymbolChoice::Height,
            lambda: 1.0 / 3.0,
            k: 100,
            n_trials: 1000,
            centers: vec![CenterSpec::Sphere { sphere: [1.0, 0.0, 0.0] }],
            r_values: vec![1.0],
            seed: 7,
            threads: None,
            grid: 40,
            square: 2.0,
            out: None,
            plot: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Domain(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Domain("degree k must be at least 1".into()));
        }
        if self.n_trials == 0 {
            return Err(Error::Domain("need at least one trial".into()));
        }
        let sqrt_k = (self.k as f64).sqrt();
        for &r in &self.r_values {
            if !(r > 0.0) || !(r / sqrt_k < std::f64::consts::FRAC_PI_2) {
                return Err(Error::Domain(format!(
                    "radius R = {r} must satisfy 0 < R/√k < π/2 at k = {}",
                    self.k
                )));
            }
        }
        if self.symbol == SymbolChoice::Xy && !(self.lambda > 0.0 && self.lambda < 0.5) {
            return Err(Error::Domain(format!("xy level λ = {} must lie in (0, 1/2)", self.lambda)));
        }
        Ok(())
    }

    pub fn symbol_function(&self) -> Symbol {
        match self.symbol {
            SymbolChoice::Height => Symbol::height(),
            SymbolChoice::Xy => Symbol::xy(self.lambda),
            SymbolChoice::Identity => Symbol::identity(),
        }
    }

    pub fn operator(&self, k: usize) -> Result<OperatorMatrix> {
        match self.symbol {
            SymbolChoice::Height => Ok(op_height(k)),
            SymbolChoice::Xy => op_xy_lambda(k, self.lambda),
            SymbolChoice::Identity => Ok(op_identity(k)),
        }
    }

    pub fn chart_centers(&self) -> Result<Vec<ChartPoint>> {
        self.centers.iter().map(CenterSpec::to_chart).collect()
    }
}
