//! Acquisition geometry and SLC stacks.

use crate::error::{invalid, Error, Result};
use crate::math::sin;
use crate::raster::Grid;
use crate::rng::SplitMix64;
use crate::C64;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, PI, TAU};

/// P-band wavelength in meters.
pub const P_BAND_WAVELENGTH_M: f64 = 0.69;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Polarization {
    HH,
    HV,
    VH,
    VV,
}

impl core::str::FromStr for Polarization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "HH" | "hh" => Ok(Self::HH),
            "HV" | "hv" => Ok(Self::HV),
            "VH" | "vh" => Ok(Self::VH),
            "VV" | "vv" => Ok(Self::VV),
            other => Err(invalid(format!("unknown polarization {other:?}"))),
        }
    }
}

impl core::fmt::Display for Polarization {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            Self::HH => "HH",
            Self::HV => "HV",
            Self::VH => "VH",
            Self::VV => "VV",
        })
    }
}

/// Vertical wavenumber of an interferometric pair:
/// `kz = 4π·b⊥ / (λ·R·sin θ)`.
pub fn kz_from_geometry(
    wavelength_m: f64,
    incidence_rad: f64,
    reference_range_m: f64,
    perpendicular_baseline_m: f64,
) -> Result<f64> {
    if !(wavelength_m > 0.0) || !(reference_range_m > 0.0) {
        return Err(invalid("wavelength and range must be positive"));
    }
    let s = sin(incidence_rad);
    if s == 0.0 || !s.is_finite() {
        return Err(invalid(format!("sin(incidence) is zero for incidence {incidence_rad}")));
    }
    Ok(4.0 * PI * perpendicular_baseline_m / (wavelength_m * reference_range_m * s))
}

/// One acquisition as supplied by a provider. `kz_rad_per_m`, when present,
/// overrides the value derived from the baseline.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageSpec {
    pub id: u32,
    #[cfg_attr(feature = "serde", serde(default))]
    pub perpendicular_baseline_m: f64,
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub kz_rad_per_m: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImageRecord {
    pub id: u32,
    pub perpendicular_baseline_m: f64,
    pub kz_rad_per_m: f64,
}

/// Geometry of an N-image stack. The master image (id 0, kz 0) is always
/// first; the remaining images follow in ascending id order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AcquisitionGeometry {
    pub wavelength_m: f64,
    pub reference_range_m: f64,
    pub incidence_rad: f64,
    pub heading_label: String,
    pub polarization: Polarization,
    images: Vec<ImageRecord>,
}

impl AcquisitionGeometry {
    /// Resolves per-image kz (explicit values win over baselines) and checks
    /// the geometry invariants.
    pub fn new(
        wavelength_m: f64,
        reference_range_m: f64,
        incidence_rad: f64,
        heading_label: impl Into<String>,
        polarization: Polarization,
        images: &[ImageSpec],
    ) -> Result<Self> {
        if !(wavelength_m > 0.0) {
            return Err(invalid("wavelength must be positive"));
        }
        if !(reference_range_m > 0.0) {
            return Err(invalid("reference range must be positive"));
        }
        if !(incidence_rad > 0.0 && incidence_rad < FRAC_PI_2) {
            return Err(invalid("incidence must lie in (0, π/2)"));
        }
        if images.is_empty() {
            return Err(invalid("geometry needs at least one image"));
        }
        let mut records = Vec::with_capacity(images.len());
        for spec in images {
            let kz = match spec.kz_rad_per_m {
                Some(kz) => kz,
                None => kz_from_geometry(
                    wavelength_m,
                    incidence_rad,
                    reference_range_m,
                    spec.perpendicular_baseline_m,
                )?,
            };
            if !kz.is_finite() || !spec.perpendicular_baseline_m.is_finite() {
                return Err(invalid(format!("image {} has a non-finite kz or baseline", spec.id)));
            }
            records.push(ImageRecord {
                id: spec.id,
                perpendicular_baseline_m: spec.perpendicular_baseline_m,
                kz_rad_per_m: kz,
            });
        }
        records.sort_by_key(|r| r.id);
        if records.windows(2).any(|w| w[0].id == w[1].id) {
            return Err(invalid("image ids must be unique"));
        }
        if records[0].id != 0 {
            return Err(invalid("no master image with id 0"));
        }
        if records[0].kz_rad_per_m != 0.0 {
            return Err(invalid("master image must have kz = 0"));
        }
        for (i, a) in records.iter().enumerate() {
            for b in &records[i + 1..] {
                if a.kz_rad_per_m == b.kz_rad_per_m
                    && a.perpendicular_baseline_m != b.perpendicular_baseline_m
                {
                    return Err(invalid(format!(
                        "images {} and {} have distinct baselines but equal kz",
                        a.id, b.id
                    )));
                }
            }
        }
        Ok(Self {
            wavelength_m,
            reference_range_m,
            incidence_rad,
            heading_label: heading_label.into(),
            polarization,
            images: records,
        })
    }

    /// Geometry from explicit kz values (first must be 0). Baselines are
    /// back-computed from the kz formula.
    pub fn from_kz(
        wavelength_m: f64,
        reference_range_m: f64,
        incidence_rad: f64,
        heading_label: impl Into<String>,
        polarization: Polarization,
        kz: &[f64],
    ) -> Result<Self> {
        let scale = kz_from_geometry(wavelength_m, incidence_rad, reference_range_m, 1.0)?;
        let specs: Vec<ImageSpec> = kz
            .iter()
            .enumerate()
            .map(|(i, &k)| ImageSpec {
                id: i as u32,
                perpendicular_baseline_m: k / scale,
                kz_rad_per_m: Some(k),
            })
            .collect();
        Self::new(wavelength_m, reference_range_m, incidence_rad, heading_label, polarization, &specs)
    }

    /// The seven-image P-band geometry used for desk-scale experiments. The
    /// kz set is irregular so that no height ambiguity falls inside
    /// [-10, 40] m, and its span gives the requested Rayleigh resolution.
    pub fn desk_seven(resolution_m: f64, polarization: Polarization) -> Result<Self> {
        const FRACTIONS: [f64; 7] = [0.0, 0.03, 0.07, 0.65, 0.79, 0.96, 1.0];
        if !(resolution_m > 0.0) {
            return Err(invalid("resolution must be positive"));
        }
        let span = TAU / resolution_m;
        let kz: Vec<f64> = FRACTIONS.iter().map(|f| f * span).collect();
        Self::from_kz(P_BAND_WAVELENGTH_M, 5000.0, PI / 4.0, "SE", polarization, &kz)
    }

    /// An `n`-image geometry with the master at 0, the last image at the full
    /// span and the rest drawn uniformly (sorted) from a seeded stream.
    pub fn irregular(n: usize, resolution_m: f64, seed: u64, polarization: Polarization) -> Result<Self> {
        if n == 0 {
            return Err(invalid("geometry needs at least one image"));
        }
        if !(resolution_m > 0.0) {
            return Err(invalid("resolution must be positive"));
        }
        let span = TAU / resolution_m;
        let mut kz = Vec::with_capacity(n);
        kz.push(0.0);
        if n >= 2 {
            let mut rng = SplitMix64::new(seed);
            let mut inner: Vec<f64> = (0..n - 2).map(|_| rng.next_f64() * span).collect();
            inner.sort_by(f64::total_cmp);
            kz.extend(inner);
            kz.push(span);
        }
        Self::from_kz(P_BAND_WAVELENGTH_M, 5000.0, PI / 4.0, "SE", polarization, &kz)
    }

    pub fn images(&self) -> &[ImageRecord] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn kz(&self) -> Vec<f64> {
        self.images.iter().map(|r| r.kz_rad_per_m).collect()
    }

    /// kz of the images at `indices`, in that order.
    pub fn kz_subset(&self, indices: &[usize]) -> Result<Vec<f64>> {
        indices
            .iter()
            .map(|&i| {
                self.images
                    .get(i)
                    .map(|r| r.kz_rad_per_m)
                    .ok_or_else(|| invalid(format!("image index {i} out of range")))
            })
            .collect()
    }
}

/// Rayleigh vertical resolution `2π / (max kz − min kz)`.
pub fn rayleigh_resolution(kz: &[f64]) -> Result<f64> {
    if kz.len() < 2 {
        return Err(invalid("vertical resolution needs at least two images"));
    }
    let max = kz.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = kz.iter().copied().fold(f64::INFINITY, f64::min);
    let span = max - min;
    if !(span > 0.0) {
        return Err(invalid("kz span is zero"));
    }
    Ok(TAU / span)
}

/// N co-registered complex images sharing one raster shape.
#[derive(Debug, Clone, PartialEq)]
pub struct SlcStack {
    pub geometry: AcquisitionGeometry,
    pub layers: Vec<Grid<C64>>,
}

impl SlcStack {
    /// Builds a stack and rejects it if any invariant is violated.
    pub fn new(geometry: AcquisitionGeometry, layers: Vec<Grid<C64>>) -> Result<Self> {
        let stack = Self { geometry, layers };
        let violations = validate_stack(&stack);
        if let Some(first) = violations.into_iter().next() {
            return Err(invalid(first));
        }
        Ok(stack)
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// `(rows, cols)` of the first layer.
    pub fn shape(&self) -> (usize, usize) {
        self.layers.first().map(Grid::shape).unwrap_or((0, 0))
    }

    /// The N-vector of samples at one pixel.
    pub fn pixel(&self, row: usize, col: usize) -> Vec<C64> {
        self.layers.iter().map(|l| *l.get(row, col)).collect()
    }
}

/// Lists every violated stack invariant; empty when the stack is well formed.
pub fn validate_stack(stack: &SlcStack) -> Vec<String> {
    let mut out = Vec::new();
    if stack.layers.len() != stack.geometry.len() {
        out.push(format!(
            "layer count {} differs from geometry image count {}",
            stack.layers.len(),
            stack.geometry.len()
        ));
    }
    let Some(first) = stack.layers.first() else {
        out.push(String::from("stack has no layers"));
        return out;
    };
    let shape = first.shape();
    if shape.0 == 0 || shape.1 == 0 {
        out.push(String::from("layer 0 has an empty shape"));
    }
    for (i, layer) in stack.layers.iter().enumerate() {
        if layer.shape() != shape {
            out.push(format!("layer {i} shape mismatch"));
        }
        if layer.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            out.push(format!("layer {i} non-finite sample"));
        }
    }
    out
}

#[cfg(test)]
fn rel_diff(a: f64, b: f64) -> f64 {
    use crate::math::abs;
    abs(a - b) / abs(b).max(f64::MIN_POSITIVE)
}
