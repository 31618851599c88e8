use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{fit_revival, FitOptions, RevivalFit};
use super::AnalysisError;
use crate::bath::{
    build_bath_from_sites, default_nv_axis, enumerate_lattice_sites, split_seed, BathConfig, PolarizationSpec,
    DEFAULT_MAX_SITES,
};
use crate::constants::larmor_c13;
use crate::echo::{bath_signal, resolved_grid, revival_rate_analytic};
use crate::hashing::config_hash;
use crate::numeric::{iqr, median};
use crate::vec3::Vec3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub b_gauss: Vec<f64>,
    pub abundance: Vec<f64>,
    pub polarization: Vec<f64>,
}

impl SweepGrid {
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let (nb, nn, np) = (self.b_gauss.len(), self.abundance.len(), self.polarization.len());
        (0..nb).flat_map(move |b| (0..nn).flat_map(move |n| (0..np).map(move |p| (b, n, p))))
    }

    pub fn len(&self) -> usize {
        self.b_gauss.len() * self.abundance.len() * self.polarization.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn default_r_min() -> f64 {
    0.65
}

fn default_r_max() -> f64 {
    5.5
}

fn default_order() -> usize {
    1
}

fn default_min_points() -> usize {
    1001
}

fn default_max_sites() -> usize {
    DEFAULT_MAX_SITES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub grid: SweepGrid,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default = "default_r_min")]
    pub r_min_nm: f64,
    #[serde(default = "default_r_max")]
    pub r_max_nm: f64,
    #[serde(default = "default_nv_axis")]
    pub nv_axis: Vec3,
    #[serde(default)]
    pub b_direction: Option<Vec3>,
    /// Revival fitted in every realization, 1 for the first.
    #[serde(default = "default_order")]
    pub revival_order: usize,
    /// Minimum τ samples over `[(m − ½), (m + ½)] · 2π/ω₀`.
    #[serde(default = "default_min_points")]
    pub min_points: usize,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

impl SweepSpec {
    pub fn new(grid: SweepGrid, realizations: usize, seed: u64) -> Self {
        Self {
            grid,
            realizations,
            seed,
            r_min_nm: default_r_min(),
            r_max_nm: default_r_max(),
            nv_axis: default_nv_axis(),
            b_direction: None,
            revival_order: 1,
            min_points: default_min_points(),
            max_sites: DEFAULT_MAX_SITES,
        }
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }

    /// Lattice seed of a cell. Cells sharing an abundance share their site
    /// occupations, so trends in B and P are not masked by sampling noise.
    pub fn cell_seed(&self, abundance_index: usize) -> u64 {
        split_seed(self.seed, abundance_index as u64)
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: &str| Err(AnalysisError::InvalidInput(m.to_string()));
        if self.grid.is_empty() {
            return bad("sweep grid has an empty axis");
        }
        if self.realizations == 0 {
            return bad("realization count must be positive");
        }
        if self.revival_order == 0 {
            return bad("revival order starts at 1");
        }
        if self.grid.b_gauss.iter().any(|b| !(b.is_finite() && *b > 0.0)) {
            return bad("fields must be positive to define a revival");
        }
        if self.grid.polarization.iter().any(|p| !(p.is_finite() && p.abs() <= 1.0)) {
            return bad("polarization degrees must lie in [-1, 1]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub b_gauss: f64,
    pub abundance: f64,
    pub polarization: f64,
    /// Median ϖ_fit over successful fits, NaN if none succeeded.
    pub median_varpi: f64,
    /// Median C_fit with failed fits counted as zero contrast.
    pub median_contrast: f64,
    pub n_realizations: usize,
    pub iqr_varpi: f64,
    pub iqr_contrast: f64,
    /// Occupation seed of every realization in this cell.
    pub seeds: Vec<u64>,
    pub n_failed: usize,
    pub failures: Vec<String>,
    pub median_varpi_analytic: f64,
    pub median_phase_rate: f64,
    pub median_contrast_estimate: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub cells: Vec<CellResult>,
}

struct Outcome {
    seed: u64,
    fit: Result<RevivalFit, String>,
    varpi_analytic: f64,
    warnings: Vec<String>,
}

fn finite_median(values: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = values.filter(|x| x.is_finite()).collect();
    median(&v).unwrap_or(f64::NAN)
}

fn finite_iqr(values: &[f64]) -> f64 {
    iqr(values).unwrap_or(f64::NAN)
}

/// Runs the build → simulate → fit pipeline for every cell and realization.
/// `workers = None` uses the available parallelism.
pub fn run_sweep(spec: &SweepSpec, workers: Option<usize>) -> Result<SweepResult, AnalysisError> {
    spec.validate()?;
    let sites = enumerate_lattice_sites(spec.r_min_nm, spec.r_max_nm, spec.max_sites)?;
    let cells: Vec<(usize, usize, usize)> = spec.grid.cells().collect();
    let tasks: Vec<(usize, u64)> = (0..cells.len())
        .flat_map(|c| (0..spec.realizations as u64).map(move |r| (c, r)))
        .collect();

    let run_task = |&(c, r): &(usize, u64)| -> Result<Outcome, AnalysisError> {
        let (bi, ni, pi) = cells[c];
        let config = BathConfig {
            abundance: spec.grid.abundance[ni],
            r_min_nm: spec.r_min_nm,
            r_max_nm: spec.r_max_nm,
            b_gauss: spec.grid.b_gauss[bi],
            b_direction: spec.b_direction,
            nv_axis: spec.nv_axis,
            seed: spec.cell_seed(ni),
            max_sites: spec.max_sites,
        };
        let pol = PolarizationSpec::along_field(spec.grid.polarization[pi]);
        let bath = build_bath_from_sites(&config, &sites, &pol, r)?;
        let period = 2.0 * PI / larmor_c13(config.b_gauss);
        let m = spec.revival_order as f64;
        let grid = resolved_grid(&bath, (m - 0.5) * period, (m + 0.5) * period, spec.min_points);
        let signal = bath_signal(&bath, &grid)?;
        let varpi_analytic = revival_rate_analytic(&bath);
        let options = FitOptions {
            varpi_hint: Some(varpi_analytic).filter(|v| *v != 0.0),
        };
        Ok(Outcome {
            seed: bath.occupation_seed,
            fit: fit_revival(&signal, spec.revival_order, &options).map_err(|e| e.to_string()),
            varpi_analytic,
            warnings: signal.meta.warnings,
        })
    };

    let outcomes: Vec<Result<Outcome, AnalysisError>> = match workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| AnalysisError::InvalidInput(format!("worker pool: {e}")))?
            .install(|| tasks.par_iter().map(run_task).collect()),
        None => tasks.par_iter().map(run_task).collect(),
    };
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let results = cells
        .iter()
        .enumerate()
        .map(|(c, &(bi, ni, pi))| {
            let chunk = &outcomes[c * spec.realizations..(c + 1) * spec.realizations];
            let varpi: Vec<f64> = chunk.iter().filter_map(|o| o.fit.as_ref().ok()).map(|f| f.varpi).collect();
            let contrast: Vec<f64> = chunk
                .iter()
                .map(|o| o.fit.as_ref().map_or(0.0, |f| f.contrast))
                .collect();
            let failures: Vec<String> = chunk
                .iter()
                .filter_map(|o| o.fit.as_ref().err().map(|e| format!("seed {}: {e}", o.seed)))
                .collect();
            let mut warnings: Vec<String> = chunk.iter().flat_map(|o| o.warnings.iter().cloned()).collect();
            warnings.sort();
            warnings.dedup();
            CellResult {
                b_gauss: spec.grid.b_gauss[bi],
                abundance: spec.grid.abundance[ni],
                polarization: spec.grid.polarization[pi],
                median_varpi: median(&varpi).unwrap_or(f64::NAN),
                median_contrast: median(&contrast).unwrap_or(f64::NAN),
                n_realizations: chunk.len(),
                iqr_varpi: finite_iqr(&varpi),
                iqr_contrast: finite_iqr(&contrast),
                seeds: chunk.iter().map(|o| o.seed).collect(),
                n_failed: failures.len(),
                failures,
                median_varpi_analytic: finite_median(chunk.iter().map(|o| o.varpi_analytic)),
                median_phase_rate: finite_median(
                    chunk
                        .iter()
                        .filter_map(|o| o.fit.as_ref().ok().and_then(|f| f.phase_rate_measured)),
                ),
                median_contrast_estimate: finite_median(
                    chunk
                        .iter()
                        .filter_map(|o| o.fit.as_ref().ok())
                        .map(|f| super::contrast_estimate(f.varpi, f.delta_t)),
                ),
                warnings,
            }
        })
        .collect();

    Ok(SweepResult {
        spec: spec.clone(),
        cells: results,
    })
}
