//! Electro-quasistatic potential solver for galvanic/capacitive body-channel
//! couplers.
//!
//! At HBC frequencies the scene is electrically small, so the phasor
//! potential obeys `∇·(ŷ ∇φ) = 0` with the complex admittivity
//! `ŷ = σ + jωε₀ε′ᵣ`. The voxel grid is discretized with a 7-point
//! finite-volume stencil; face admittances are harmonic means of the two
//! adjacent voxels, and a face touching an electrode uses the full conductance
//! of the half-voxel path to the electrode surface (`2ŷ`).
//!
//! Electrodes are Dirichlet voxels. With [`OuterBoundary::Grounded`] the
//! outermost voxel layer is held at 0 V and acts as the far-field ground and
//! the return path of a capacitive receiver.

use log::debug;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{check_distances, PathLossCurve, Source};
use crate::error::{Error, Result};
use crate::phantom::{
    place_coupler, rx_center_at, voxelize_with, CouplerSpec, Material, PhantomModel, Scenario, VoxelGrid,
    VoxelizeOptions,
};
use crate::tissue::{ComplexPermittivity, Frequency, TissueTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scheme {
    /// Iteration-order independent; slabs are updated in parallel and the
    /// result is bitwise reproducible for any thread count.
    Jacobi,
    /// Lexicographic successive over-relaxation, single threaded.
    GaussSeidelSor { omega: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterBoundary {
    /// Outermost voxel layer held at 0 V.
    Grounded,
    /// No flux through the outer faces.
    Insulating,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Target for the weighted residual norm relative to its initial value.
    pub tol: f64,
    pub max_iter: usize,
    pub scheme: Scheme,
    pub boundary: OuterBoundary,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 50_000,
            scheme: Scheme::GaussSeidelSor { omega: 1.8 },
            boundary: OuterBoundary::Grounded,
        }
    }
}

impl SolverSettings {
    pub fn jacobi() -> Self {
        Self {
            scheme: Scheme::Jacobi,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::Argument(format!("tol must be in (0, 1), got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::Argument("max_iter must be positive".into()));
        }
        if let Scheme::GaussSeidelSor { omega } = self.scheme {
            if !(omega > 0.0 && omega < 2.0) {
                return Err(Error::Argument(format!("SOR omega must be in (0, 2), got {omega}")));
            }
        }
        Ok(())
    }
}

/// Convergence record of one solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveLog {
    pub iterations: usize,
    /// Final relative residual.
    pub residual: f64,
    /// Relative residual at every convergence check (every iteration for
    /// Jacobi, every [`SOR_CHECK_INTERVAL`] sweeps for SOR).
    pub history: Vec<f64>,
}

/// Residual evaluation interval for SOR, in sweeps.
pub const SOR_CHECK_INTERVAL: usize = 10;

/// Solved potential on a voxel grid.
#[derive(Debug, Clone)]
pub struct ComplexField {
    grid: VoxelGrid,
    phi: Vec<Complex64>,
    log: SolveLog,
}

impl ComplexField {
    pub fn grid(&self) -> &VoxelGrid {
        &self.grid
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.phi[self.grid.index(i, j, k)]
    }

    pub fn log(&self) -> &SolveLog {
        &self.log
    }
}

/// Admittivity of each non-electrode material at `f`.
fn material_admittivity(grid: &VoxelGrid, tissues: &TissueTable, f: Frequency) -> Result<[Complex64; 7]> {
    let air = ComplexPermittivity::VACUUM.admittivity(f);
    let needs = |m: Material| grid.materials().contains(&m);
    let skin = if needs(Material::Skin) {
        tissues.permittivity(grid.skin_tissue(), f)?.admittivity(f)
    } else {
        air
    };
    let interior = if needs(Material::Interior) {
        tissues.permittivity(grid.interior_tissue(), f)?.admittivity(f)
    } else {
        air
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut y = [zero; 7];
    y[Material::Air as usize] = air;
    y[Material::Sense as usize] = air;
    y[Material::Skin as usize] = skin;
    y[Material::Interior as usize] = interior;
    Ok(y)
}

fn face_table(y: &[Complex64; 7]) -> [[Complex64; 7]; 7] {
    let zero = Complex64::new(0.0, 0.0);
    let mut t = [[zero; 7]; 7];
    for a in Material::ALL {
        for b in Material::ALL {
            let (ya, yb) = (y[a as usize], y[b as usize]);
            t[a as usize][b as usize] = match (a.is_electrode(), b.is_electrode()) {
                (true, true) => zero,
                (true, false) => 2.0 * yb,
                (false, true) => 2.0 * ya,
                (false, false) => {
                    let s = ya + yb;
                    if s.norm() == 0.0 {
                        zero
                    } else {
                        2.0 * ya * yb / s
                    }
                }
            };
        }
    }
    t
}

struct System {
    nx: usize,
    ny: usize,
    nz: usize,
    mat: Vec<u8>,
    fixed: Vec<bool>,
    face: [[Complex64; 7]; 7],
    inv_diag: Vec<Complex64>,
    diag: Vec<Complex64>,
    /// 1/|D| residual weights.
    weight: Vec<f64>,
    /// Free interior voxels whose six neighbors share their material, where
    /// the update is the plain neighbor mean.
    uniform: Vec<bool>,
    /// |D|/36 for uniform voxels, the residual weight of Σφ - 6φ.
    uniform_weight: Vec<f64>,
}

impl System {
    fn build(grid: &VoxelGrid, y: &[Complex64; 7], boundary: OuterBoundary) -> (Self, Vec<Complex64>) {
        let [nx, ny, nz] = grid.dims();
        let n = grid.len();
        let v = grid.excitation_v();
        let mat: Vec<u8> = grid.materials().iter().map(|m| m.id()).collect();
        let mut fixed = vec![false; n];
        let mut phi = vec![Complex64::new(0.0, 0.0); n];
        for idx in 0..n {
            let m = grid.materials()[idx];
            let [i, j, k] = grid.coords(idx);
            let on_boundary = i == 0 || j == 0 || k == 0 || i == nx - 1 || j == ny - 1 || k == nz - 1;
            match m {
                Material::ElectrodePositive => {
                    fixed[idx] = true;
                    phi[idx] = Complex64::new(v, 0.0);
                }
                Material::ElectrodeNegative => {
                    fixed[idx] = true;
                    phi[idx] = Complex64::new(-v, 0.0);
                }
                Material::Ground => fixed[idx] = true,
                _ if on_boundary && boundary == OuterBoundary::Grounded => fixed[idx] = true,
                _ => {}
            }
        }
        let face = face_table(y);
        let mut sys = System {
            nx,
            ny,
            nz,
            mat,
            fixed,
            face,
            inv_diag: vec![Complex64::new(0.0, 0.0); n],
            diag: vec![Complex64::new(0.0, 0.0); n],
            weight: vec![0.0; n],
            uniform: vec![false; n],
            uniform_weight: vec![0.0; n],
        };
        for idx in 0..n {
            if sys.fixed[idx] {
                continue;
            }
            let d = sys.diagonal(idx);
            sys.diag[idx] = d;
            if d.norm() > 0.0 {
                sys.inv_diag[idx] = 1.0 / d;
                sys.weight[idx] = 1.0 / d.norm();
                sys.uniform[idx] = sys.is_uniform(idx);
                sys.uniform_weight[idx] = d.norm() / 36.0;
            }
        }
        (sys, phi)
    }

    fn is_uniform(&self, idx: usize) -> bool {
        let (nx, plane) = (self.nx, self.nx * self.ny);
        let i = idx % nx;
        let j = (idx / nx) % self.ny;
        let k = idx / plane;
        if i == 0 || j == 0 || k == 0 || i + 1 == nx || j + 1 == self.ny || k + 1 == self.nz {
            return false;
        }
        let m = self.mat[idx];
        [idx - 1, idx + 1, idx - nx, idx + nx, idx - plane, idx + plane]
            .iter()
            .all(|&n| self.mat[n] == m)
    }

    #[inline]
    fn diagonal(&self, idx: usize) -> Complex64 {
        let (nx, ny, nz) = (self.nx, self.ny, self.nz);
        let i = idx % nx;
        let j = (idx / nx) % ny;
        let k = idx / (nx * ny);
        let row = &self.face[self.mat[idx] as usize];
        let mut d = Complex64::new(0.0, 0.0);
        let plane = nx * ny;
        if i > 0 {
            d += row[self.mat[idx - 1] as usize];
        }
        if i + 1 < nx {
            d += row[self.mat[idx + 1] as usize];
        }
        if j > 0 {
            d += row[self.mat[idx - nx] as usize];
        }
        if j + 1 < ny {
            d += row[self.mat[idx + nx] as usize];
        }
        if k > 0 {
            d += row[self.mat[idx - plane] as usize];
        }
        if k + 1 < nz {
            d += row[self.mat[idx + plane] as usize];
        }
        d
    }

    /// Σ ŷ_face · φ_neighbor for voxel (i, j, k).
    #[inline(always)]
    fn neighbor_sum(&self, phi: &[Complex64], idx: usize, i: usize, j: usize, k: usize) -> Complex64 {
        let nx = self.nx;
        let plane = nx * self.ny;
        let row = &self.face[self.mat[idx] as usize];
        let mut s = Complex64::new(0.0, 0.0);
        if i > 0 {
            s += row[self.mat[idx - 1] as usize] * phi[idx - 1];
        }
        if i + 1 < nx {
            s += row[self.mat[idx + 1] as usize] * phi[idx + 1];
        }
        if j > 0 {
            s += row[self.mat[idx - nx] as usize] * phi[idx - nx];
        }
        if j + 1 < self.ny {
            s += row[self.mat[idx + nx] as usize] * phi[idx + nx];
        }
        if k > 0 {
            s += row[self.mat[idx - plane] as usize] * phi[idx - plane];
        }
        if k + 1 < self.nz {
            s += row[self.mat[idx + plane] as usize] * phi[idx + plane];
        }
        s
    }

    /// Weighted residual norm sqrt(Σ |r|²/|D|), summed slab by slab in a
    /// fixed order.
    fn residual(&self, phi: &[Complex64]) -> f64 {
        let plane = self.nx * self.ny;
        let partial: Vec<f64> = (0..self.nz)
            .into_par_iter()
            .map(|k| {
                let mut acc = 0.0;
                for j in 0..self.ny {
                    for i in 0..self.nx {
                        let idx = i + self.nx * j + plane * k;
                        if self.fixed[idx] {
                            continue;
                        }
                        let r = self.neighbor_sum(phi, idx, i, j, k) - self.diag[idx] * phi[idx];
                        acc += r.norm_sqr() * self.weight[idx];
                    }
                }
                acc
            })
            .collect();
        partial.iter().sum::<f64>().sqrt()
    }

    /// One Jacobi sweep from `phi` into `next`; returns the residual of `phi`.
    fn jacobi_sweep(&self, phi: &[Complex64], next: &mut [Complex64]) -> f64 {
        let nx = self.nx;
        let plane = nx * self.ny;
        let partial: Vec<f64> = next
            .par_chunks_mut(plane)
            .enumerate()
            .map(|(k, slab)| {
                let mut acc = 0.0;
                let k_edge = k == 0 || k + 1 == self.nz;
                for j in 0..self.ny {
                    let row_start = nx * j;
                    let fast = !(k_edge || j == 0 || j + 1 == self.ny);
                    for i in 0..nx {
                        let local = row_start + i;
                        let idx = local + plane * k;
                        if self.fixed[idx] {
                            slab[local] = phi[idx];
                            continue;
                        }
                        if fast && self.uniform[idx] {
                            let sum = (phi[idx - 1] + phi[idx + 1])
                                + (phi[idx - nx] + phi[idx + nx])
                                + (phi[idx - plane] + phi[idx + plane]);
                            // |r|²/|D| with r = y(Σφ - 6φ) and D = 6y.
                            acc += (sum - phi[idx] * 6.0).norm_sqr() * self.uniform_weight[idx];
                            slab[local] = sum * (1.0 / 6.0);
                            continue;
                        }
                        let s = self.neighbor_sum(phi, idx, i, j, k);
                        let r = s - self.diag[idx] * phi[idx];
                        acc += r.norm_sqr() * self.weight[idx];
                        slab[local] = s * self.inv_diag[idx];
                    }
                }
                acc
            })
            .collect();
        partial.iter().sum::<f64>().sqrt()
    }

    fn sor_sweep(&self, phi: &mut [Complex64], omega: f64) {
        let nx = self.nx;
        let plane = nx * self.ny;
        let keep = 1.0 - omega;
        let mean = omega / 6.0;
        for k in 0..self.nz {
            let k_edge = k == 0 || k + 1 == self.nz;
            for j in 0..self.ny {
                let base = nx * j + plane * k;
                if k_edge || j == 0 || j + 1 == self.ny {
                    for i in 0..nx {
                        let idx = base + i;
                        if !self.fixed[idx] {
                            let gs = self.neighbor_sum(phi, idx, i, j, k) * self.inv_diag[idx];
                            phi[idx] += omega * (gs - phi[idx]);
                        }
                    }
                    continue;
                }
                for i in [0, nx - 1] {
                    let idx = base + i;
                    if !self.fixed[idx] {
                        let gs = self.neighbor_sum(phi, idx, i, j, k) * self.inv_diag[idx];
                        phi[idx] += omega * (gs - phi[idx]);
                    }
                }
                // Same update as above, arranged so the just-written
                // phi[idx - 1] enters last. That keeps the loop-carried
                // dependency to one multiply-add per voxel.
                for idx in base + 1..base + nx - 1 {
                    if self.uniform[idx] {
                        let rest =
                            phi[idx + 1] + (phi[idx - nx] + phi[idx + nx]) + (phi[idx - plane] + phi[idx + plane]);
                        let partial = phi[idx] * keep + rest * mean;
                        phi[idx] = partial + phi[idx - 1] * mean;
                    } else if !self.fixed[idx] {
                        let row = &self.face[self.mat[idx] as usize];
                        let w = |n: usize| row[self.mat[n] as usize] * phi[n];
                        let rest = w(idx + 1) + (w(idx - nx) + w(idx + nx)) + (w(idx - plane) + w(idx + plane));
                        let scale = self.inv_diag[idx] * omega;
                        let partial = phi[idx] * keep + rest * scale;
                        let west = row[self.mat[idx - 1] as usize] * scale;
                        phi[idx] = partial + west * phi[idx - 1];
                    }
                }
            }
        }
    }
}

/// Solves for the potential on `grid`.
///
/// The grid needs a +V electrode and either a −V electrode, a ground
/// electrode or a grounded outer boundary to return the current.
pub fn solve_potential(
    grid: &VoxelGrid,
    tissues: &TissueTable,
    f: Frequency,
    settings: &SolverSettings,
) -> Result<ComplexField> {
    settings.validate()?;
    grid.validate()?;
    let has = |m: Material| grid.materials().contains(&m);
    if !has(Material::ElectrodePositive) {
        return Err(Error::Setup("grid has no +V electrode".into()));
    }
    let has_return =
        has(Material::ElectrodeNegative) || has(Material::Ground) || settings.boundary == OuterBoundary::Grounded;
    if !has_return {
        return Err(Error::Setup(
            "grid has no -V electrode, ground electrode or grounded boundary".into(),
        ));
    }
    let y = material_admittivity(grid, tissues, f)?;
    let (sys, mut phi) = System::build(grid, &y, settings.boundary);

    let r0 = sys.residual(&phi);
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut rel = if r0 > 0.0 { 1.0 } else { 0.0 };
    if r0 > 0.0 {
        match settings.scheme {
            Scheme::Jacobi => {
                let mut next = phi.clone();
                while iterations < settings.max_iter {
                    let r = sys.jacobi_sweep(&phi, &mut next);
                    rel = r / r0;
                    history.push(rel);
                    if rel <= settings.tol {
                        break;
                    }
                    std::mem::swap(&mut phi, &mut next);
                    iterations += 1;
                }
                if rel > settings.tol {
                    rel = sys.residual(&phi) / r0;
                }
            }
            Scheme::GaussSeidelSor { omega } => {
                while iterations < settings.max_iter {
                    let sweeps = SOR_CHECK_INTERVAL.min(settings.max_iter - iterations);
                    for _ in 0..sweeps {
                        sys.sor_sweep(&mut phi, omega);
                    }
                    iterations += sweeps;
                    rel = sys.residual(&phi) / r0;
                    history.push(rel);
                    if rel <= settings.tol {
                        break;
                    }
                }
            }
        }
    }
    debug!(
        "solve at {f}: {iterations} iterations, relative residual {rel:.3e}, {} voxels",
        grid.len()
    );
    if !(rel <= settings.tol) {
        return Err(Error::Convergence {
            iterations,
            residual: rel,
        });
    }
    if phi.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::NumericDomain("non-finite potential".into()));
    }
    Ok(ComplexField {
        grid: grid.clone(),
        phi,
        log: SolveLog {
            iterations,
            residual: rel,
            history,
        },
    })
}

/// Potential of a high-impedance receiver electrode relative to the solver
/// ground: the mean potential over the voxels of the electrode cube.
///
/// A probe lying entirely within one source electrode reads that
/// electrode's voltage; one straddling a source electrode and free space is
/// rejected.
pub fn probe_voltage(field: &ComplexField, rx: &CouplerSpec) -> Result<Complex64> {
    let grid = field.grid();
    let voxels = grid.cube_voxels(rx.position, rx.electrode_size_m);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut driven = 0usize;
    for v in &voxels {
        if !grid.in_bounds(*v) {
            return Err(Error::Probe(format!("probe voxel {v:?} is outside the grid")));
        }
        let (i, j, k) = (v[0] as usize, v[1] as usize, v[2] as usize);
        if matches!(
            grid.get(i, j, k),
            Material::ElectrodePositive | Material::ElectrodeNegative
        ) {
            driven += 1;
        }
        sum += field.at(i, j, k);
    }
    if driven > 0 && driven < voxels.len() {
        return Err(Error::Probe(
            "probe region partially overlaps a source electrode".into(),
        ));
    }
    if driven > 0 {
        // must all be the same electrode
        let first = voxels[0];
        let tag = grid.get(first[0] as usize, first[1] as usize, first[2] as usize);
        if voxels
            .iter()
            .any(|v| grid.get(v[0] as usize, v[1] as usize, v[2] as usize) != tag)
        {
            return Err(Error::Probe("probe region spans both source electrodes".into()));
        }
    }
    Ok(sum / voxels.len() as f64)
}

/// `20·log10(|v_tx| / |v_rx|)`.
pub fn voltage_loss_db(v_tx: f64, v_rx: Complex64) -> Result<f64> {
    let r = v_rx.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::NumericDomain(format!(
            "received voltage {v_rx} has no finite loss"
        )));
    }
    Ok(20.0 * (v_tx.abs() / r).log10())
}

/// Grid resolution and extent for an HBC sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub spacing_m: f64,
    /// Air padding around the scene; `None` means ten voxels.
    pub padding_m: Option<f64>,
    pub voxel_budget: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            spacing_m: 0.01,
            padding_m: None,
            voxel_budget: VoxelizeOptions::DEFAULT_BUDGET,
        }
    }
}

impl GridSpec {
    pub fn padding(&self) -> f64 {
        self.padding_m.unwrap_or(10.0 * self.spacing_m)
    }
}

/// Everything an HBC sweep needs besides the band and scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct HbcSweepConfig {
    pub phantom: PhantomModel,
    pub tx: CouplerSpec,
    /// Receiver electrode template; its position is replaced per distance.
    pub rx: CouplerSpec,
    pub grid: GridSpec,
    pub settings: SolverSettings,
}

/// Curve and solver record of one HBC sweep.
#[derive(Debug, Clone)]
pub struct HbcSweep {
    pub curve: PathLossCurve,
    pub log: SolveLog,
    pub dims: [usize; 3],
}

/// Path loss versus receiver distance for the galvanic transmitter.
///
/// The receiver is an ideal high-impedance probe, so one field solve serves
/// every distance. In the free-space scenario the grid covers the same box
/// with no body and the transmitter sits at the same position, which keeps
/// the transmitter-receiver separations identical to the in-body case.
pub fn hbc_path_loss_sweep(
    config: &HbcSweepConfig,
    tissues: &TissueTable,
    rx_distances: &[f64],
    f: Frequency,
    scenario: Scenario,
) -> Result<HbcSweep> {
    check_distances(rx_distances)?;
    let first = rx_distances[0];
    let reach = rx_distances[rx_distances.len() - 1] + config.rx.electrode_size_m;
    let opts = VoxelizeOptions {
        spacing_m: config.grid.spacing_m,
        padding_m: config.grid.padding(),
        reach_m: reach,
        scenario,
        voxel_budget: config.grid.voxel_budget,
    };
    let grid = voxelize_with(&config.phantom, &opts)?;
    let grid = place_coupler(&grid, &config.tx)?;
    let field = solve_potential(&grid, tissues, f, &config.settings).map_err(|e| Error::Sweep {
        distance_m: first,
        source: Box::new(e),
    })?;
    let mut samples = Vec::with_capacity(rx_distances.len());
    for &d in rx_distances {
        let rx = config.rx.with_position(rx_center_at(&config.phantom, &config.rx, d));
        let annotate = |e: Error| Error::Sweep {
            distance_m: d,
            source: Box::new(e),
        };
        let v = probe_voltage(&field, &rx).map_err(annotate)?;
        let loss = voltage_loss_db(config.tx.excitation_v, v).map_err(annotate)?;
        samples.push((d, loss));
    }
    let curve = PathLossCurve::new(f, scenario, Source::Simulated, samples)?;
    Ok(HbcSweep {
        curve,
        log: field.log.clone(),
        dims: grid.dims(),
    })
}
