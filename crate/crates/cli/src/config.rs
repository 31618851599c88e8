//! TOML configuration files, one schema per subcommand.

use std::f64::consts::PI;

use echoq_core::analysis::{SweepGrid, SweepSpec};
use echoq_core::bath::{
    default_nv_axis, hyperfine_vector, BathConfig, BathError, NucleusCoupling, PolarizationSpec, DEFAULT_MAX_SITES,
};
use echoq_core::constants::larmor_c13;
use echoq_core::Vec3;
use serde::{Deserialize, Serialize};

fn one() -> f64 {
    1.0
}

fn default_points() -> usize {
    1001
}

fn default_realizations() -> usize {
    20
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

fn default_max_sites() -> usize {
    DEFAULT_MAX_SITES
}

/// τ grid. Missing bounds default to `[0, 1.5 · 2π/ω₀]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    #[serde(default)]
    pub start_s: Option<f64>,
    #[serde(default)]
    pub stop_s: Option<f64>,
    /// Exact count for single nuclei, minimum count for baths.
    #[serde(default = "default_points")]
    pub points: usize,
}

impl Default for TauGrid {
    fn default() -> Self {
        Self {
            start_s: None,
            stop_s: None,
            points: default_points(),
        }
    }
}

impl TauGrid {
    pub fn bounds(&self, omega0: f64) -> Result<(f64, f64), String> {
        let start = self.start_s.unwrap_or(0.0);
        let stop = match self.stop_s {
            Some(s) => s,
            None if omega0 > 0.0 => 1.5 * 2.0 * PI / omega0,
            None => return Err("tau.stop_s is required at zero field".into()),
        };
        if !(start.is_finite() && stop.is_finite() && start >= 0.0 && stop > start) {
            return Err(format!("tau range [{start}, {stop}] is not a valid ascending range"));
        }
        if self.points < 2 {
            return Err("tau.points must be at least 2".into());
        }
        Ok((start, stop))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NucleusSpec {
    /// n̂₀ = ẑ, n̂₁ tilted by `tilt_rad` in the x–z plane.
    Synthetic { omega1_rad_s: f64, tilt_rad: f64 },
    /// A lattice site, field along the defect axis.
    Lattice {
        position_nm: Vec3,
        #[serde(default = "default_nv_axis")]
        nv_axis: Vec3,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingleConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub b_gauss: f64,
    pub nucleus: NucleusSpec,
    #[serde(default = "one")]
    pub polarization: f64,
    #[serde(default)]
    pub polarization_axis: Option<Vec3>,
    #[serde(default)]
    pub tau: TauGrid,
}

impl SingleConfig {
    pub fn nucleus(&self) -> Result<NucleusCoupling, BathError> {
        let omega0 = larmor_c13(self.b_gauss);
        let pol = PolarizationSpec {
            degree: self.polarization,
            direction: self.polarization_axis,
        };
        match &self.nucleus {
            NucleusSpec::Synthetic { omega1_rad_s, tilt_rad } => {
                NucleusCoupling::synthetic(omega0, *omega1_rad_s, *tilt_rad, &pol)
            }
            NucleusSpec::Lattice { position_nm, nv_axis } => {
                let axis = echoq_core::su2::unit_axis(*nv_axis)?;
                let a = hyperfine_vector(*position_nm, axis)?;
                NucleusCoupling::from_vectors(axis * omega0, a, axis, &pol, Some(*position_nm))
            }
        }
    }

    /// Hash of the physical configuration; the seed is not part of it.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.seed = None;
        echoq_core::hashing::config_hash(&c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathFile {
    #[serde(default)]
    pub seed: Option<u64>,
    pub b_gauss: f64,
    pub abundance: f64,
    #[serde(default = "default_r_min")]
    pub r_min_nm: f64,
    #[serde(default = "default_r_max")]
    pub r_max_nm: f64,
    #[serde(default)]
    pub b_direction: Option<Vec3>,
    #[serde(default = "default_nv_axis")]
    pub nv_axis: Vec3,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
    #[serde(default = "one")]
    pub polarization: f64,
    #[serde(default)]
    pub polarization_axis: Option<Vec3>,
    #[serde(default)]
    pub realization: u64,
    #[serde(default)]
    pub tau: TauGrid,
}

impl BathFile {
    pub fn bath_config(&self, seed: u64) -> BathConfig {
        BathConfig {
            abundance: self.abundance,
            r_min_nm: self.r_min_nm,
            r_max_nm: self.r_max_nm,
            b_gauss: self.b_gauss,
            b_direction: self.b_direction,
            nv_axis: self.nv_axis,
            seed,
            max_sites: self.max_sites,
        }
    }

    pub fn polarization_spec(&self) -> PolarizationSpec {
        PolarizationSpec {
            degree: self.polarization,
            direction: self.polarization_axis,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    pub grid: SweepGrid,
    #[serde(default = "default_r_min")]
    pub r_min_nm: f64,
    #[serde(default = "default_r_max")]
    pub r_max_nm: f64,
    #[serde(default = "default_nv_axis")]
    pub nv_axis: Vec3,
    #[serde(default)]
    pub b_direction: Option<Vec3>,
    #[serde(default = "default_order")]
    pub revival_order: usize,
    #[serde(default = "default_points")]
    pub min_points: usize,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

impl SweepFile {
    pub fn spec(&self, seed: u64, realizations: Option<usize>) -> SweepSpec {
        SweepSpec {
            grid: self.grid.clone(),
            realizations: realizations.unwrap_or(self.realizations),
            seed,
            r_min_nm: self.r_min_nm,
            r_max_nm: self.r_max_nm,
            nv_axis: self.nv_axis,
            b_direction: self.b_direction,
            revival_order: self.revival_order,
            min_points: self.min_points,
            max_sites: self.max_sites,
        }
    }
}
