//! Nuclear bath realizations: diamond lattice enumeration, random ¹³C
//! occupation inside a hollow sphere around the defect, and the secular
//! point-dipole hyperfine vector of each occupied site.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constants::{dipolar_strength, larmor_c13, DIAMOND_LATTICE_CONSTANT_NM};
use crate::hashing::config_hash;
use crate::su2::{unit_axis, Su2Error};
use crate::vec3::Vec3;

/// Default upper bound on the number of enumerated lattice sites.
pub const DEFAULT_MAX_SITES: usize = 10_000_000;

/// Unit-cell basis of diamond in units of the cubic cell edge: an FCC
/// sublattice and its copy shifted by (¼, ¼, ¼).
const DIAMOND_BASIS: [[f64; 3]; 8] = [
    [0.0, 0.0, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
    [0.25, 0.25, 0.25],
    [0.25, 0.75, 0.75],
    [0.75, 0.25, 0.75],
    [0.75, 0.75, 0.25],
];

/// Default NV symmetry axis, crystal [111].
pub fn default_nv_axis() -> Vec3 {
    let s = 1.0 / 3f64.sqrt();
    Vec3::new(s, s, s)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BathError {
    #[error("invalid shell radii: need 0 < r_min ({r_min}) < r_max ({r_max})")]
    InvalidRadii { r_min: f64, r_max: f64 },
    #[error("abundance {0} outside (0, 1]")]
    InvalidAbundance(f64),
    #[error("field magnitude {0} G must be finite and non-negative")]
    InvalidField(f64),
    #[error("lattice shell would contain about {estimate} sites, above the cap of {cap}")]
    TooManySites { estimate: usize, cap: usize },
    #[error("hyperfine vector undefined at the defect position")]
    ZeroRadius,
    #[error(transparent)]
    Axis(#[from] Su2Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathConfig {
    /// ¹³C abundance, fraction in (0, 1].
    pub abundance: f64,
    pub r_min_nm: f64,
    pub r_max_nm: f64,
    pub b_gauss: f64,
    /// Field direction in the crystal frame; `None` means along `nv_axis`.
    #[serde(default)]
    pub b_direction: Option<Vec3>,
    #[serde(default = "default_nv_axis")]
    pub nv_axis: Vec3,
    pub seed: u64,
    #[serde(default = "default_max_sites")]
    pub max_sites: usize,
}

fn default_max_sites() -> usize {
    DEFAULT_MAX_SITES
}

impl BathConfig {
    /// Hollow sphere 0.65–5.5 nm, field along [111], site cap at the default.
    pub fn hollow_sphere(b_gauss: f64, abundance: f64, seed: u64) -> Self {
        Self {
            abundance,
            r_min_nm: 0.65,
            r_max_nm: 5.5,
            b_gauss,
            b_direction: None,
            nv_axis: default_nv_axis(),
            seed,
            max_sites: DEFAULT_MAX_SITES,
        }
    }

    pub fn validate(&self) -> Result<(), BathError> {
        if !(self.r_min_nm > 0.0 && self.r_min_nm < self.r_max_nm && self.r_max_nm.is_finite()) {
            return Err(BathError::InvalidRadii {
                r_min: self.r_min_nm,
                r_max: self.r_max_nm,
            });
        }
        if !(self.abundance > 0.0 && self.abundance <= 1.0) {
            return Err(BathError::InvalidAbundance(self.abundance));
        }
        if !(self.b_gauss.is_finite() && self.b_gauss >= 0.0) {
            return Err(BathError::InvalidField(self.b_gauss));
        }
        unit_axis(self.nv_axis)?;
        if let Some(d) = self.b_direction {
            unit_axis(d)?;
        }
        Ok(())
    }

    pub fn field_direction(&self) -> Result<Vec3, BathError> {
        Ok(unit_axis(self.b_direction.unwrap_or(self.nv_axis))?)
    }

    /// γₙB as a vector, rad/s.
    pub fn larmor_vector(&self) -> Result<Vec3, BathError> {
        Ok(self.field_direction()? * larmor_c13(self.b_gauss))
    }

    pub fn hash(&self) -> String {
        config_hash(self)
    }
}

/// Unit vector at `angle` radians from `axis`, tilted in a fixed plane.
pub fn tilted_direction(axis: Vec3, angle: f64) -> Vec3 {
    let perp = axis.any_perpendicular();
    axis.rotated_about(&perp, angle)
}

/// Initial nuclear polarization shared by every nucleus of a bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationSpec {
    pub degree: f64,
    /// `None` means along the bare precession axis n̂₀.
    #[serde(default)]
    pub direction: Option<Vec3>,
}

impl PolarizationSpec {
    pub fn along_field(degree: f64) -> Self {
        Self {
            degree,
            direction: None,
        }
    }

    pub fn unpolarized() -> Self {
        Self::along_field(0.0)
    }
}

impl Default for PolarizationSpec {
    fn default() -> Self {
        Self::unpolarized()
    }
}

/// Precession data of one nucleus. `omega0 · n0 = γₙB` is shared by the bath;
/// `omega1 · n1 = γₙB + A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NucleusCoupling {
    /// Lattice position relative to the defect, nm. Absent for synthetic nuclei.
    pub position_nm: Option<Vec3>,
    /// Secular hyperfine vector, rad/s.
    pub hyperfine: Vec3,
    pub omega0: f64,
    pub n0: Vec3,
    pub omega1: f64,
    pub n1: Vec3,
    pub polarization: f64,
    pub polarization_axis: Vec3,
}

impl NucleusCoupling {
    /// Builds the coupling from the bare Larmor vector γₙB and the hyperfine
    /// vector A. A zero field leaves n̂₀ along `fallback_axis`.
    pub fn from_vectors(
        larmor: Vec3,
        hyperfine: Vec3,
        fallback_axis: Vec3,
        polarization: &PolarizationSpec,
        position_nm: Option<Vec3>,
    ) -> Result<Self, BathError> {
        let omega0 = larmor.norm();
        let n0 = larmor.normalized().unwrap_or(fallback_axis);
        let v1 = larmor + hyperfine;
        let omega1 = v1.norm();
        let n1 = v1.normalized().unwrap_or(n0);
        let (degree, axis) = resolve_polarization(polarization, n0)?;
        Ok(Self {
            position_nm,
            hyperfine,
            omega0,
            n0,
            omega1,
            n1,
            polarization: degree,
            polarization_axis: axis,
        })
    }

    /// A nucleus with n̂₀ = ẑ and n̂₁ tilted by `tilt` radians in the x–z plane.
    pub fn synthetic(omega0: f64, omega1: f64, tilt: f64, polarization: &PolarizationSpec) -> Result<Self, BathError> {
        let n0 = Vec3::Z;
        let n1 = Vec3::new(tilt.sin(), 0.0, tilt.cos());
        let hyperfine = n1 * omega1 - n0 * omega0;
        let (degree, axis) = resolve_polarization(polarization, n0)?;
        Ok(Self {
            position_nm: None,
            hyperfine,
            omega0,
            n0,
            omega1,
            n1,
            polarization: degree,
            polarization_axis: axis,
        })
    }

    /// |n̂₀ × n̂₁|², the modulation depth factor.
    #[inline]
    pub fn mixing(&self) -> f64 {
        self.n0.cross(&self.n1).norm_sq()
    }

    pub fn with_polarization(mut self, degree: f64, axis: Vec3) -> Self {
        self.polarization = degree;
        self.polarization_axis = axis;
        self
    }
}

fn resolve_polarization(spec: &PolarizationSpec, n0: Vec3) -> Result<(f64, Vec3), BathError> {
    if !(spec.degree.is_finite() && spec.degree.abs() <= 1.0) {
        return Err(BathError::Axis(Su2Error::PolarizationOutOfRange(spec.degree)));
    }
    let axis = match spec.direction {
        Some(d) => unit_axis(d)?,
        None => n0,
    };
    Ok((spec.degree, axis))
}

/// Every diamond-lattice carbon site with `r_min ≤ |r| ≤ r_max`, the
/// vacancy at the origin. Sorted by cell index (i, j, k), then basis index.
pub fn enumerate_lattice_sites(r_min_nm: f64, r_max_nm: f64, max_sites: usize) -> Result<Vec<Vec3>, BathError> {
    if !(r_min_nm > 0.0 && r_min_nm < r_max_nm && r_max_nm.is_finite()) {
        return Err(BathError::InvalidRadii {
            r_min: r_min_nm,
            r_max: r_max_nm,
        });
    }
    let a0 = DIAMOND_LATTICE_CONSTANT_NM;
    let shell_volume = 4.0 / 3.0 * std::f64::consts::PI * (r_max_nm.powi(3) - r_min_nm.powi(3));
    let estimate = (8.0 / a0.powi(3) * shell_volume) as usize;
    if estimate > max_sites {
        return Err(BathError::TooManySites { estimate, cap: max_sites });
    }

    let reach = (r_max_nm / a0).ceil() as i64 + 1;
    let (rmin2, rmax2) = (r_min_nm * r_min_nm, r_max_nm * r_max_nm);
    let mut sites = Vec::with_capacity(estimate + estimate / 10 + 16);
    for i in -reach..=reach {
        for j in -reach..=reach {
            for k in -reach..=reach {
                for b in DIAMOND_BASIS.iter() {
                    let p = Vec3::new((i as f64 + b[0]) * a0, (j as f64 + b[1]) * a0, (k as f64 + b[2]) * a0);
                    let r2 = p.norm_sq();
                    if r2 >= rmin2 && r2 <= rmax2 {
                        sites.push(p);
                    }
                }
            }
        }
    }
    if sites.len() > max_sites {
        return Err(BathError::TooManySites {
            estimate: sites.len(),
            cap: max_sites,
        });
    }
    Ok(sites)
}

/// Position of the nitrogen: the nearest neighbour of the vacancy best
/// aligned with `nv_axis`.
pub fn nitrogen_site(nv_axis: Vec3) -> Vec3 {
    let q = 0.25 * DIAMOND_LATTICE_CONSTANT_NM;
    let neighbours = [
        Vec3::new(q, q, q),
        Vec3::new(q, -q, -q),
        Vec3::new(-q, q, -q),
        Vec3::new(-q, -q, q),
    ];
    // The vacancy's neighbours sit on the shifted sublattice; their inversions
    // are not lattice sites, so pick the best aligned one of the four.
    neighbours
        .into_iter()
        .max_by(|a, b| a.dot(&nv_axis).total_cmp(&b.dot(&nv_axis)))
        .expect("four neighbours")
}

/// Each site independently occupied with probability `abundance`.
pub fn sample_occupation(sites: &[Vec3], abundance: f64, seed: u64) -> Vec<Vec3> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sites
        .iter()
        .filter(|_| rng.random::<f64>() < abundance)
        .copied()
        .collect()
}

/// Secular point-dipole hyperfine vector `d(r)·[ẑ_NV − 3 (ẑ_NV·r̂) r̂]`, rad/s.
pub fn hyperfine_vector(position_nm: Vec3, nv_axis: Vec3) -> Result<Vec3, BathError> {
    let r = position_nm.norm();
    if r == 0.0 || !r.is_finite() {
        return Err(BathError::ZeroRadius);
    }
    let z = unit_axis(nv_axis)?;
    let rhat = position_nm * (1.0 / r);
    Ok((z - rhat * (3.0 * z.dot(&rhat))) * dipolar_strength(r))
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` derived from `base`:
/// `mix64(base ⊕ mix64(index + 0x9E3779B97F4A7C15))`.
pub fn split_seed(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(0x9E37_79B9_7F4A_7C15)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BathRealization {
    pub config: BathConfig,
    pub polarization_spec: PolarizationSpec,
    pub realization: u64,
    /// Occupation seed actually used, `split_seed(config.seed, realization)`.
    pub occupation_seed: u64,
    pub nuclei: Vec<NucleusCoupling>,
}

impl BathRealization {
    pub fn omega0(&self) -> f64 {
        larmor_c13(self.config.b_gauss)
    }

    pub fn len(&self) -> usize {
        self.nuclei.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nuclei.is_empty()
    }

    pub fn config_hash(&self) -> String {
        config_hash(&(&self.config, &self.polarization_spec))
    }

    /// Largest |A_k| / ω₀ in the bath (∞ at zero field with nuclei present).
    pub fn max_coupling_ratio(&self) -> f64 {
        let a = self.nuclei.iter().map(|n| n.hyperfine.norm()).fold(0.0, f64::max);
        a / self.omega0()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("bath serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Builds realization `realization` of the bath described by `config`.
pub fn build_bath(
    config: &BathConfig,
    polarization: &PolarizationSpec,
    realization: u64,
) -> Result<BathRealization, BathError> {
    config.validate()?;
    let sites = enumerate_lattice_sites(config.r_min_nm, config.r_max_nm, config.max_sites)?;
    build_bath_from_sites(config, &sites, polarization, realization)
}

/// As [`build_bath`], reusing a site list from [`enumerate_lattice_sites`]
/// for the same radii.
pub fn build_bath_from_sites(
    config: &BathConfig,
    sites: &[Vec3],
    polarization: &PolarizationSpec,
    realization: u64,
) -> Result<BathRealization, BathError> {
    config.validate()?;
    let nv_axis = unit_axis(config.nv_axis)?;
    let larmor = config.larmor_vector()?;
    let nitrogen = nitrogen_site(nv_axis);
    let occupation_seed = split_seed(config.seed, realization);

    let nuclei = sample_occupation(sites, config.abundance, occupation_seed)
        .into_iter()
        .filter(|p| (*p - nitrogen).norm_sq() > 1e-12)
        .map(|p| {
            let a = hyperfine_vector(p, nv_axis)?;
            NucleusCoupling::from_vectors(larmor, a, nv_axis, polarization, Some(p))
        })
        .collect::<Result<Vec<_>, _>>()?;

    Ok(BathRealization {
        config: config.clone(),
        polarization_spec: *polarization,
        realization,
        occupation_seed,
        nuclei,
    })
}
