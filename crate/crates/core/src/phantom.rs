//! Crossed-cylinder body phantom, the two channel scenarios and the voxel
//! grids handed to the field solver.
//!
//! Coordinates are meters. The torso cylinder is centered on the origin; the
//! arm cylinder crosses it at `arm_offset_m` along the torso axis. The
//! transmitter sits on the outward axis (the axis used by neither cylinder)
//! at `implant_depth_m` below the front skin surface, and receivers move away
//! from that surface along the same axis.

use std::io::{self, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn unit(self) -> [f64; 3] {
        let mut u = [0.0; 3];
        u[self.index()] = 1.0;
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cylinder {
    pub radius_m: f64,
    pub length_m: f64,
    pub axis: Axis,
}

impl Cylinder {
    /// Whether `p` lies inside the cylinder centered at `center`, shrunk by
    /// `inset` on every surface.
    fn contains(&self, center: [f64; 3], p: [f64; 3], inset: f64) -> bool {
        let a = self.axis.index();
        let mut r2 = 0.0;
        for (n, (pc, cc)) in p.iter().zip(center.iter()).enumerate() {
            if n != a {
                r2 += (pc - cc) * (pc - cc);
            }
        }
        let r = self.radius_m - inset;
        let half = self.length_m / 2.0 - inset;
        r > 0.0 && half > 0.0 && r2 <= r * r && (p[a] - center[a]).abs() <= half
    }

    pub fn volume(&self) -> f64 {
        std::f64::consts::PI * self.radius_m * self.radius_m * self.length_m
    }
}

/// Channel scenario: transmitter implanted in the body (case I) or the same
/// transmitter/receiver geometry with no body present (case II).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    InBody,
    FreeSpace,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::InBody => "in_body",
            Scenario::FreeSpace => "free_space",
        }
    }
}

impl std::str::FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in_body" => Ok(Scenario::InBody),
            "free_space" => Ok(Scenario::FreeSpace),
            other => Err(Error::Argument(format!("unknown scenario `{other}`"))),
        }
    }
}

/// Simplified human body: torso and arm cylinders of interior tissue
/// wrapped in a skin layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomModel {
    pub torso: Cylinder,
    pub arm: Cylinder,
    /// Position of the arm axis along the torso axis.
    pub arm_offset_m: f64,
    pub skin_thickness_m: f64,
    pub skin_tissue: String,
    pub interior_tissue: String,
    /// Transmitter depth below the outer skin surface.
    pub implant_depth_m: f64,
    /// Radius of the air pocket around an RF transmitter.
    pub air_pocket_radius_m: f64,
}

impl Default for PhantomModel {
    fn default() -> Self {
        default_phantom()
    }
}

/// Default phantom dimensions. None of them are measured values; they are a
/// typical adult torso and forearm and every field can be overridden.
pub fn default_phantom() -> PhantomModel {
    PhantomModel {
        torso: Cylinder {
            radius_m: 0.15,
            length_m: 0.6,
            axis: Axis::Z,
        },
        arm: Cylinder {
            radius_m: 0.05,
            length_m: 0.6,
            axis: Axis::X,
        },
        arm_offset_m: 0.2,
        skin_thickness_m: 0.002,
        skin_tissue: "skin".into(),
        interior_tissue: "muscle".into(),
        implant_depth_m: 0.03,
        air_pocket_radius_m: 0.01,
    }
}

impl PhantomModel {
    pub fn validate(&self) -> Result<()> {
        let err = |m: String| Err(Error::Phantom(m));
        for (name, c) in [("torso", &self.torso), ("arm", &self.arm)] {
            if !(c.radius_m > 0.0 && c.radius_m.is_finite()) {
                return err(format!("{name} radius must be > 0"));
            }
            if !(c.length_m > 0.0 && c.length_m.is_finite()) {
                return err(format!("{name} length must be > 0"));
            }
        }
        if self.torso.axis == self.arm.axis {
            return err("torso and arm must lie on different axes".into());
        }
        if !self.arm_offset_m.is_finite() {
            return err("arm offset must be finite".into());
        }
        let min_r = self.torso.radius_m.min(self.arm.radius_m);
        if !(self.skin_thickness_m > 0.0 && self.skin_thickness_m < min_r) {
            return err(format!(
                "skin thickness {} must be in (0, {min_r})",
                self.skin_thickness_m
            ));
        }
        if !(self.implant_depth_m > self.skin_thickness_m && self.implant_depth_m < self.torso.radius_m) {
            return err(format!(
                "implant depth {} must exceed the skin thickness and stay inside the torso",
                self.implant_depth_m
            ));
        }
        if !(self.air_pocket_radius_m > 0.0 && self.air_pocket_radius_m < self.implant_depth_m - self.skin_thickness_m)
        {
            return err(format!(
                "air pocket radius {} must be > 0 and leave tissue between pocket and skin",
                self.air_pocket_radius_m
            ));
        }
        if self.skin_tissue.is_empty() || self.interior_tissue.is_empty() {
            return err("tissue names must not be empty".into());
        }
        Ok(())
    }

    /// Axis along which the receiver moves away from the body.
    pub fn outward_axis(&self) -> Axis {
        match (self.torso.axis, self.arm.axis) {
            (Axis::X, Axis::Y) | (Axis::Y, Axis::X) => Axis::Z,
            (Axis::X, Axis::Z) | (Axis::Z, Axis::X) => Axis::Y,
            _ => Axis::X,
        }
    }

    pub fn arm_center(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        c[self.torso.axis.index()] = self.arm_offset_m;
        c
    }

    /// Point on the outward axis at signed distance `s` from the torso axis.
    fn on_ray(&self, s: f64) -> [f64; 3] {
        let mut p = [0.0; 3];
        p[self.outward_axis().index()] = s;
        p
    }

    /// Outer skin surface where the outward ray leaves the torso.
    pub fn skin_surface_point(&self) -> [f64; 3] {
        self.on_ray(self.torso.radius_m)
    }

    /// Transmitter point on the outward ray, `implant_depth_m` below the skin.
    pub fn tx_position(&self) -> [f64; 3] {
        self.on_ray(self.torso.radius_m - self.implant_depth_m)
    }

    /// Point at `distance_m` outside the skin surface along the outward axis.
    pub fn point_outside(&self, distance_m: f64) -> [f64; 3] {
        self.on_ray(self.torso.radius_m + distance_m)
    }

    /// Analytic volume of the cylinder union.
    ///
    /// The overlap is integrated numerically over the arm cross-section; it
    /// assumes the arm passes fully through the torso.
    pub fn body_volume(&self) -> f64 {
        let overlap = crossed_overlap(&self.torso, &self.arm, self.arm_offset_m);
        self.torso.volume() + self.arm.volume() - overlap
    }

    fn classify(&self, p: [f64; 3], skin: f64) -> Material {
        let tc = [0.0; 3];
        let ac = self.arm_center();
        if self.torso.contains(tc, p, skin) || self.arm.contains(ac, p, skin) {
            Material::Interior
        } else if self.torso.contains(tc, p, 0.0) || self.arm.contains(ac, p, 0.0) {
            Material::Skin
        } else {
            Material::Air
        }
    }
}

fn crossed_overlap(torso: &Cylinder, arm: &Cylinder, offset: f64) -> f64 {
    // Midpoint rule over the arm disc: chord of the torso along the arm axis,
    // clipped to the torso's axial extent.
    let n = 400;
    let a = arm.radius_m;
    let step = 2.0 * a / n as f64;
    let mut v = 0.0;
    for iu in 0..n {
        let u = -a + (iu as f64 + 0.5) * step; // along the outward axis
        for iw in 0..n {
            let w = -a + (iw as f64 + 0.5) * step; // along the torso axis
            if u * u + w * w > a * a {
                continue;
            }
            if (offset + w).abs() > torso.length_m / 2.0 || u.abs() >= torso.radius_m {
                continue;
            }
            let chord = 2.0 * (torso.radius_m * torso.radius_m - u * u).sqrt();
            v += chord.min(arm.length_m) * step * step;
        }
    }
    v
}

/// Per-voxel material. The numeric value is the tissue id written by
/// [`VoxelGrid::write_binary`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Material {
    Air = 0,
    Skin = 1,
    /// Body interior (muscle in the default phantom).
    Interior = 2,
    /// Driven electrode at +excitation.
    ElectrodePositive = 3,
    /// Driven electrode at −excitation.
    ElectrodeNegative = 4,
    /// Electrode tied to 0 V.
    Ground = 5,
    /// Receiver sense region; electrically air (high-impedance probe).
    Sense = 6,
}

impl Material {
    pub const ALL: [Material; 7] = [
        Material::Air,
        Material::Skin,
        Material::Interior,
        Material::ElectrodePositive,
        Material::ElectrodeNegative,
        Material::Ground,
        Material::Sense,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Option<Self> {
        Self::ALL.get(id as usize).copied()
    }

    pub fn is_tissue(self) -> bool {
        matches!(self, Material::Skin | Material::Interior)
    }

    /// Voxels whose potential is fixed by the solver.
    pub fn is_electrode(self) -> bool {
        matches!(
            self,
            Material::ElectrodePositive | Material::ElectrodeNegative | Material::Ground
        )
    }
}

/// Options for [`voxelize_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelizeOptions {
    pub spacing_m: f64,
    /// Air margin around the scene on every side; at least five voxels.
    pub padding_m: f64,
    /// Extra extent beyond the front skin surface along the outward axis, so
    /// receivers up to this distance fit inside the grid.
    pub reach_m: f64,
    pub scenario: Scenario,
    pub voxel_budget: usize,
}

impl VoxelizeOptions {
    pub const DEFAULT_BUDGET: usize = 1 << 24;

    pub fn new(spacing_m: f64, padding_m: f64) -> Self {
        Self {
            spacing_m,
            padding_m,
            reach_m: 0.0,
            scenario: Scenario::InBody,
            voxel_budget: Self::DEFAULT_BUDGET,
        }
    }
}

/// Regular voxel discretization of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    spacing_m: f64,
    dims: [usize; 3],
    /// Corner of voxel (0, 0, 0).
    origin_m: [f64; 3],
    materials: Vec<Material>,
    scenario: Scenario,
    skin_tissue: String,
    interior_tissue: String,
    excitation_v: f64,
}

impl VoxelGrid {
    pub const MIN_DIM: usize = 8;

    /// Uniform grid filled with `fill`.
    pub fn filled(dims: [usize; 3], spacing_m: f64, origin_m: [f64; 3], fill: Material) -> Result<Self> {
        if dims.iter().any(|&d| d < Self::MIN_DIM) {
            return Err(Error::Argument(format!(
                "grid dims {dims:?} must each be >= {}",
                Self::MIN_DIM
            )));
        }
        if !(spacing_m > 0.0 && spacing_m.is_finite()) {
            return Err(Error::Argument(format!("spacing must be > 0, got {spacing_m}")));
        }
        Ok(Self {
            spacing_m,
            dims,
            origin_m,
            materials: vec![fill; dims[0] * dims[1] * dims[2]],
            scenario: Scenario::InBody,
            skin_tissue: "skin".into(),
            interior_tissue: "muscle".into(),
            excitation_v: 1.0,
        })
    }

    pub fn with_tissues(mut self, skin: impl Into<String>, interior: impl Into<String>) -> Self {
        self.skin_tissue = skin.into();
        self.interior_tissue = interior.into();
        self
    }

    pub fn with_excitation(mut self, volts: f64) -> Self {
        self.excitation_v = volts;
        self
    }

    /// The same grid moved by `offset_m`, as if the whole scene had been
    /// built around a translated body.
    pub fn translated(mut self, offset_m: [f64; 3]) -> Self {
        for (o, d) in self.origin_m.iter_mut().zip(offset_m) {
            *o += d;
        }
        self
    }

    pub fn spacing_m(&self) -> f64 {
        self.spacing_m
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin_m(&self) -> [f64; 3] {
        self.origin_m
    }

    pub fn len(&self) -> usize {
        self.materials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.materials.is_empty()
    }

    pub fn scenario(&self) -> Scenario {
        self.scenario
    }

    pub fn skin_tissue(&self) -> &str {
        &self.skin_tissue
    }

    pub fn interior_tissue(&self) -> &str {
        &self.interior_tissue
    }

    /// Voltage magnitude applied to the driven electrodes.
    pub fn excitation_v(&self) -> f64 {
        self.excitation_v
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let j = (idx / self.dims[0]) % self.dims[1];
        let k = idx / (self.dims[0] * self.dims[1]);
        [i, j, k]
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Material {
        self.materials[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, m: Material) {
        let idx = self.index(i, j, k);
        self.materials[idx] = m;
    }

    /// Center of voxel `(i, j, k)`.
    pub fn center(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        let h = self.spacing_m;
        [
            self.origin_m[0] + (i as f64 + 0.5) * h,
            self.origin_m[1] + (j as f64 + 0.5) * h,
            self.origin_m[2] + (k as f64 + 0.5) * h,
        ]
    }

    /// Signed index of the voxel containing `p` (may lie outside the grid).
    pub fn locate(&self, p: [f64; 3]) -> [i64; 3] {
        let mut out = [0i64; 3];
        for a in 0..3 {
            out[a] = ((p[a] - self.origin_m[a]) / self.spacing_m).floor() as i64;
        }
        out
    }

    pub fn in_bounds(&self, v: [i64; 3]) -> bool {
        (0..3).all(|a| v[a] >= 0 && (v[a] as usize) < self.dims[a])
    }

    /// Voxels whose centers lie in the axis-aligned cube of side `size_m`
    /// centered at `center` (half-open on the upper faces). A cube smaller
    /// than one voxel snaps to the voxel containing its center. Indices may
    /// fall outside the grid.
    pub fn cube_voxels(&self, center: [f64; 3], size_m: f64) -> Vec<[i64; 3]> {
        let h = self.spacing_m;
        let mut ranges = [(0i64, 0i64); 3];
        for a in 0..3 {
            let lo = (center[a] - size_m / 2.0 - self.origin_m[a]) / h - 0.5;
            let hi = (center[a] + size_m / 2.0 - self.origin_m[a]) / h - 0.5;
            let first = snap(lo).ceil() as i64;
            let last = snap(hi).ceil() as i64 - 1;
            ranges[a] = if first <= last {
                (first, last)
            } else {
                let c = ((center[a] - self.origin_m[a]) / h).floor() as i64;
                (c, c)
            };
        }
        let mut out = Vec::new();
        for k in ranges[2].0..=ranges[2].1 {
            for j in ranges[1].0..=ranges[1].1 {
                for i in ranges[0].0..=ranges[0].1 {
                    out.push([i, j, k]);
                }
            }
        }
        out
    }

    pub fn count(&self, m: Material) -> usize {
        self.materials.iter().filter(|&&x| x == m).count()
    }

    /// Face neighbors of voxel `(i, j, k)` inside the grid.
    pub fn neighbors(&self, i: usize, j: usize, k: usize) -> impl Iterator<Item = [usize; 3]> {
        let dims = self.dims;
        let offs: [[i64; 3]; 6] = [[-1, 0, 0], [1, 0, 0], [0, -1, 0], [0, 1, 0], [0, 0, -1], [0, 0, 1]];
        offs.into_iter().filter_map(move |o| {
            let n = [i as i64 + o[0], j as i64 + o[1], k as i64 + o[2]];
            if (0..3).all(|a| n[a] >= 0 && (n[a] as usize) < dims[a]) {
                Some([n[0] as usize, n[1] as usize, n[2] as usize])
            } else {
                None
            }
        })
    }

    /// Checks the grid invariants: every electrode cluster (6-connected set
    /// of voxels with the same electrode tag) touches a non-electrode voxel.
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for start in 0..self.len() {
            let m = self.materials[start];
            if !m.is_electrode() || seen[start] {
                continue;
            }
            let mut stack = vec![start];
            seen[start] = true;
            let mut exposed = false;
            while let Some(idx) = stack.pop() {
                let [i, j, k] = self.coords(idx);
                for [a, b, c] in self.neighbors(i, j, k) {
                    let n = self.index(a, b, c);
                    let nm = self.materials[n];
                    if nm == m {
                        if !seen[n] {
                            seen[n] = true;
                            stack.push(n);
                        }
                    } else if !nm.is_electrode() {
                        exposed = true;
                    }
                }
            }
            if !exposed {
                let [i, j, k] = self.coords(start);
                return Err(Error::Placement {
                    i: i as i64,
                    j: j as i64,
                    k: k as i64,
                    message: "electrode cluster is not adjacent to any non-electrode voxel".into(),
                });
            }
        }
        Ok(())
    }

    /// Writes the debugging export: little-endian `u32` dims (x, y, z), `f64`
    /// spacing, then one tissue-id byte per voxel with x varying fastest.
    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        for d in self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        w.write_all(&self.spacing_m.to_le_bytes())?;
        let bytes: Vec<u8> = self.materials.iter().map(|m| m.id()).collect();
        w.write_all(&bytes)
    }

    /// Reads a grid written by [`write_binary`](Self::write_binary). The
    /// origin is not part of the format and is set to zero.
    pub fn read_binary<R: Read>(mut r: R) -> io::Result<Self> {
        let mut u = [0u8; 4];
        let mut dims = [0usize; 3];
        for d in &mut dims {
            r.read_exact(&mut u)?;
            *d = u32::from_le_bytes(u) as usize;
        }
        let mut f = [0u8; 8];
        r.read_exact(&mut f)?;
        let spacing = f64::from_le_bytes(f);
        let mut grid = Self::filled(dims, spacing, [0.0; 3], Material::Air)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
        let mut body = vec![0u8; grid.len()];
        r.read_exact(&mut body)?;
        for (slot, b) in grid.materials.iter_mut().zip(body) {
            *slot = Material::from_id(b)
                .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidData, format!("unknown tissue id {b}")))?;
        }
        Ok(grid)
    }
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 {
        r
    } else {
        x
    }
}

/// Voxelizes the phantom for the in-body scenario with no receiver reach.
pub fn voxelize(phantom: &PhantomModel, spacing_m: f64, padding_m: f64) -> Result<VoxelGrid> {
    voxelize_with(phantom, &VoxelizeOptions::new(spacing_m, padding_m))
}

/// Voxelizes the phantom.
///
/// Each voxel takes the material of the innermost region containing its
/// center. When the grid is coarser than the skin, the skin shell is widened
/// to one voxel so that no interior voxel touches air. The grid is aligned so
/// the torso center falls on a voxel corner. Free-space grids cover the same
/// box with air only.
pub fn voxelize_with(phantom: &PhantomModel, opts: &VoxelizeOptions) -> Result<VoxelGrid> {
    phantom.validate()?;
    let h = opts.spacing_m;
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Argument(format!("spacing must be > 0, got {h}")));
    }
    if !(opts.padding_m >= 5.0 * h * (1.0 - 1e-9)) {
        return Err(Error::Argument(format!(
            "padding {} must be at least five voxels ({} m)",
            opts.padding_m,
            5.0 * h
        )));
    }
    if !(opts.reach_m >= 0.0 && opts.reach_m.is_finite()) {
        return Err(Error::Argument(format!("reach must be >= 0, got {}", opts.reach_m)));
    }

    // Bounding box of the body (and the receiver path).
    let mut lo = [0.0f64; 3];
    let mut hi = [0.0f64; 3];
    let ac = phantom.arm_center();
    for (cyl, center) in [(&phantom.torso, [0.0; 3]), (&phantom.arm, ac)] {
        for a in 0..3 {
            let ext = if a == cyl.axis.index() {
                cyl.length_m / 2.0
            } else {
                cyl.radius_m
            };
            lo[a] = lo[a].min(center[a] - ext);
            hi[a] = hi[a].max(center[a] + ext);
        }
    }
    let out = phantom.outward_axis().index();
    hi[out] = hi[out].max(phantom.torso.radius_m + opts.reach_m);

    let mut dims = [0usize; 3];
    let mut origin = [0.0; 3];
    for a in 0..3 {
        let n_lo = snap((-lo[a] + opts.padding_m) / h).ceil();
        let n_hi = snap((hi[a] + opts.padding_m) / h).ceil();
        origin[a] = -n_lo * h;
        dims[a] = (n_lo + n_hi) as usize;
    }
    let requested = dims[0].saturating_mul(dims[1]).saturating_mul(dims[2]);
    if requested > opts.voxel_budget {
        return Err(Error::Resource {
            requested,
            budget: opts.voxel_budget,
        });
    }

    let mut grid = VoxelGrid::filled(dims, h, origin, Material::Air)?
        .with_tissues(phantom.skin_tissue.clone(), phantom.interior_tissue.clone());
    grid.scenario = opts.scenario;
    if opts.scenario == Scenario::FreeSpace {
        return Ok(grid);
    }
    let skin = phantom.skin_thickness_m.max(h);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let m = phantom.classify(grid.center(i, j, k), skin);
                grid.set(i, j, k, m);
            }
        }
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplerMode {
    /// Differential electrode pair driving current into tissue (transmitter).
    GalvanicPair,
    /// Single sense electrode with environmental return (receiver).
    CapacitiveSingle,
}

/// Electrode geometry of a transmitter or receiver coupler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplerSpec {
    pub mode: CouplerMode,
    /// Side of each cubic electrode.
    pub electrode_size_m: f64,
    /// Center-to-center spacing of a galvanic pair.
    pub separation_m: f64,
    /// Pair center (galvanic) or electrode center (capacitive).
    pub position: [f64; 3],
    /// Direction from the −V to the +V electrode of a galvanic pair.
    pub axis: Axis,
    pub excitation_v: f64,
}

impl CouplerSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.electrode_size_m > 0.0 && self.electrode_size_m.is_finite()) {
            return Err(Error::Argument("electrode size must be > 0".into()));
        }
        if !(self.excitation_v > 0.0 && self.excitation_v.is_finite()) {
            return Err(Error::Argument("excitation must be > 0".into()));
        }
        if self.position.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("coupler position must be finite".into()));
        }
        if self.mode == CouplerMode::GalvanicPair && !(self.separation_m > self.electrode_size_m) {
            return Err(Error::Argument(format!(
                "galvanic separation {} must exceed the electrode size {}",
                self.separation_m, self.electrode_size_m
            )));
        }
        Ok(())
    }

    /// Electrode centers: `[+V, −V]` for a galvanic pair, the single sense
    /// electrode for a capacitive coupler.
    pub fn electrode_centers(&self) -> Vec<[f64; 3]> {
        match self.mode {
            CouplerMode::GalvanicPair => {
                let a = self.axis.index();
                let mut plus = self.position;
                let mut minus = self.position;
                plus[a] += self.separation_m / 2.0;
                minus[a] -= self.separation_m / 2.0;
                vec![plus, minus]
            }
            CouplerMode::CapacitiveSingle => vec![self.position],
        }
    }

    pub fn with_position(mut self, position: [f64; 3]) -> Self {
        self.position = position;
        self
    }
}

/// Implanted galvanic transmitter lying parallel to the skin along the torso
/// axis, with its +V electrode on the outward ray at the implant depth.
///
/// The receiver ray therefore passes through the signal electrode. A pair
/// pointing along the ray instead puts the receiver over the null between a
/// local dipole and the bulk body potential, which gives a non-monotone
/// curve.
pub fn galvanic_tx(phantom: &PhantomModel, electrode_size_m: f64, separation_m: f64, excitation_v: f64) -> CouplerSpec {
    let axis = phantom.torso.axis;
    let mut position = phantom.tx_position();
    position[axis.index()] -= separation_m / 2.0;
    CouplerSpec {
        mode: CouplerMode::GalvanicPair,
        electrode_size_m,
        separation_m,
        position,
        axis,
        excitation_v,
    }
}

/// [`galvanic_tx`] with 1 cm electrodes 2 cm apart, driven at 1 V.
pub fn default_tx(phantom: &PhantomModel) -> CouplerSpec {
    galvanic_tx(phantom, 0.01, 0.02, 1.0)
}

/// Capacitive receiver electrode, a cube of side `electrode_size_m`.
pub fn capacitive_rx(phantom: &PhantomModel, electrode_size_m: f64) -> CouplerSpec {
    CouplerSpec {
        mode: CouplerMode::CapacitiveSingle,
        electrode_size_m,
        separation_m: 0.0,
        position: phantom.point_outside(electrode_size_m / 2.0),
        axis: phantom.outward_axis(),
        excitation_v: 1.0,
    }
}

/// Default capacitive receiver electrode (1 cm cube).
pub fn default_rx(phantom: &PhantomModel) -> CouplerSpec {
    capacitive_rx(phantom, 0.01)
}

/// Center of a receiver electrode whose near face sits `distance_m` outside
/// the skin surface.
pub fn rx_center_at(phantom: &PhantomModel, rx: &CouplerSpec, distance_m: f64) -> [f64; 3] {
    phantom.point_outside(distance_m + rx.electrode_size_m / 2.0)
}

/// Marks coupler electrodes in a copy of `grid`.
///
/// A galvanic pair becomes +V/−V Dirichlet electrodes and must sit entirely
/// in body tissue (in-body scenario) or in air (free-space scenario). A
/// capacitive receiver becomes a sense region and must sit in air.
pub fn place_coupler(grid: &VoxelGrid, spec: &CouplerSpec) -> Result<VoxelGrid> {
    spec.validate()?;
    let mut out = grid.clone();
    let centers = spec.electrode_centers();
    let tags: &[Material] = match spec.mode {
        CouplerMode::GalvanicPair => &[Material::ElectrodePositive, Material::ElectrodeNegative],
        CouplerMode::CapacitiveSingle => &[Material::Sense],
    };
    let mut claimed = Vec::new();
    for (center, &tag) in centers.iter().zip(tags) {
        for v in grid.cube_voxels(*center, spec.electrode_size_m) {
            let fail = |message: String| Error::Placement {
                i: v[0],
                j: v[1],
                k: v[2],
                message,
            };
            if !grid.in_bounds(v) {
                return Err(fail("coupler extends beyond the grid".into()));
            }
            let (i, j, k) = (v[0] as usize, v[1] as usize, v[2] as usize);
            let host = grid.get(i, j, k);
            if claimed.contains(&v) || host.is_electrode() || host == Material::Sense {
                return Err(fail(format!("collides with existing {host:?}")));
            }
            let ok = match (spec.mode, grid.scenario) {
                (CouplerMode::GalvanicPair, Scenario::InBody) => host.is_tissue(),
                (CouplerMode::GalvanicPair, Scenario::FreeSpace) => host == Material::Air,
                (CouplerMode::CapacitiveSingle, _) => host == Material::Air,
            };
            if !ok {
                return Err(fail(format!("{:?} coupler cannot be placed in {host:?}", spec.mode)));
            }
            claimed.push(v);
            out.set(i, j, k, tag);
        }
    }
    if spec.mode == CouplerMode::GalvanicPair {
        out.excitation_v = spec.excitation_v;
    }
    Ok(out)
}
