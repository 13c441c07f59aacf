//! Axisymmetric electrostatics of the trilayer junction and the electric
//! participation ratio of every dielectric region.
//!
//! Coordinates are `(r, z)` in nm with `z = 0` at the top of the substrate.
//! The cross section, from the bottom up:
//!
//! - substrate below `z = 0`; its top layer is the metal-substrate interface
//!   under the bottom electrode and the substrate-vacuum interface elsewhere;
//! - bottom electrode of radius `bottom_electrode_radius`, its exposed top
//!   surface and sidewall oxidized (metal-vacuum);
//! - barrier stack for `r < junction_radius`: barrier-metal interface,
//!   barrier, barrier-metal interface (the upper one only with two faces),
//!   with the barrier-vacuum ring at its rim;
//! - top electrode of radius `junction_radius`, top and sidewall oxidized;
//! - vacuum everywhere else.
//!
//! The potential solves `div(ε grad φ) = 0` by finite volumes on a graded
//! tensor grid, with the electrodes held at `∓V/2` and zero normal flux on
//! the axis and the outer boundary.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::consts::VACUUM_PERMITTIVITY;
use crate::error::{Error, Result};
use crate::linalg::BandedSpd;
use crate::math;

const PI: f64 = core::f64::consts::PI;
/// Relative residual the potential solve must reach.
pub const SOLVE_TOLERANCE: f64 = 1e-10;
const MAX_REFINEMENT_STEPS: usize = 8;
/// Smallest cell the mesher will produce (nm).
pub const MIN_CELL: f64 = 1e-3;
/// Largest band storage (entries) the solver accepts.
pub const MAX_BAND_ENTRIES: usize = 60_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RegionRole {
    Barrier,
    BarrierMetal,
    BarrierVacuum,
    MetalVacuum,
    SubstrateVacuum,
    MetalSubstrate,
    Substrate,
    Vacuum,
}

impl RegionRole {
    pub const ALL: [RegionRole; 8] = [
        RegionRole::Barrier,
        RegionRole::BarrierMetal,
        RegionRole::BarrierVacuum,
        RegionRole::MetalVacuum,
        RegionRole::SubstrateVacuum,
        RegionRole::MetalSubstrate,
        RegionRole::Substrate,
        RegionRole::Vacuum,
    ];

    /// Short identifier used in reports and configuration files.
    pub fn key(self) -> &'static str {
        match self {
            RegionRole::Barrier => "TB",
            RegionRole::BarrierMetal => "TB-M",
            RegionRole::BarrierVacuum => "TB-V",
            RegionRole::MetalVacuum => "MV",
            RegionRole::SubstrateVacuum => "SV",
            RegionRole::MetalSubstrate => "MS",
            RegionRole::Substrate => "substrate",
            RegionRole::Vacuum => "vacuum",
        }
    }

    pub fn from_key(key: &str) -> Option<Self> {
        RegionRole::ALL.into_iter().find(|r| r.key() == key)
    }
}

/// One dielectric region of the partition.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSpec {
    pub name: String,
    pub role: RegionRole,
    /// Relative permittivity.
    pub epsilon: f64,
    /// Layer thickness (nm); zero disables an interface layer.
    pub thickness: f64,
    pub tan_delta: f64,
}

impl RegionSpec {
    pub fn new(role: RegionRole, epsilon: f64, thickness: f64, tan_delta: f64) -> Self {
        RegionSpec {
            name: String::from(role.key()),
            role,
            epsilon,
            thickness,
            tan_delta,
        }
    }

    /// Amorphous-silicon device partition.
    pub fn table1() -> Vec<RegionSpec> {
        vec![
            RegionSpec::new(RegionRole::Barrier, 11.9, 9.0, 5.0e-4),
            RegionSpec::new(RegionRole::BarrierMetal, 11.4, 2.0, 5.0e-3),
            RegionSpec::new(RegionRole::BarrierVacuum, 4.0, 2.0, 5.0e-1),
            RegionSpec::new(RegionRole::MetalVacuum, 10.0, 15.0, 2.2e-4),
            RegionSpec::new(RegionRole::SubstrateVacuum, 4.0, 2.0, 1.7e-3),
            RegionSpec::new(RegionRole::MetalSubstrate, 11.4, 2.0, 4.8e-4),
            RegionSpec::new(RegionRole::Substrate, 11.9, 1.0e4, 2.6e-7),
            RegionSpec::new(RegionRole::Vacuum, 1.0, 0.0, 0.0),
        ]
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 1.0) {
            return Err(Error::invalid("epsilon", "must be at least 1"));
        }
        if !(self.thickness.is_finite() && self.thickness >= 0.0) {
            return Err(Error::invalid("thickness", "must be non-negative"));
        }
        if !(self.tan_delta.is_finite() && self.tan_delta >= 0.0) {
            return Err(Error::invalid("tan_delta", "must be non-negative"));
        }
        Ok(())
    }
}

/// Grid resolution controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshSpec {
    /// Cells across the thinnest layer, divided by two. Doubling it halves
    /// every cell.
    pub refinement: f64,
    /// Cell-to-cell growth ratio away from material boundaries.
    pub growth: f64,
    /// Largest cell as a fraction of the domain extent along that axis.
    pub max_cell_fraction: f64,
}

impl Default for MeshSpec {
    fn default() -> Self {
        MeshSpec {
            refinement: 1.0,
            growth: 1.25,
            max_cell_fraction: 0.05,
        }
    }
}

impl MeshSpec {
    pub fn refined(self, factor: f64) -> Self {
        MeshSpec {
            refinement: self.refinement * factor,
            growth: 1.0 + (self.growth - 1.0) / factor,
            max_cell_fraction: self.max_cell_fraction / factor,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceGeometry {
    /// Barrier radius r_TB (nm).
    pub junction_radius: f64,
    /// Barrier thickness d_TB (nm).
    pub barrier_thickness: f64,
    /// Thickness of each electrode (nm), oxide included.
    pub electrode_thickness: f64,
    pub bottom_electrode_radius: f64,
    /// Number of barrier-metal interface layers (1 or 2).
    pub barrier_faces: u8,
    pub domain_radius: f64,
    /// Total domain height including the substrate (nm).
    pub domain_height: f64,
    pub regions: Vec<RegionSpec>,
    pub mesh: MeshSpec,
}

/// Default junction radius (nm).
pub const DEFAULT_JUNCTION_RADIUS: f64 = 2_000.0;
pub const DEFAULT_ELECTRODE_THICKNESS: f64 = 100.0;
/// Domain radius and height in units of the junction radius.
pub const DEFAULT_DOMAIN_FACTOR: f64 = 12.0;
/// Smallest allowed domain radius in units of the junction radius.
pub const MIN_DOMAIN_FACTOR: f64 = 10.0;

impl Default for DeviceGeometry {
    fn default() -> Self {
        DeviceGeometry::table1()
    }
}

impl DeviceGeometry {
    /// Table 1 stack at the default junction radius.
    pub fn table1() -> Self {
        DeviceGeometry::with_radius(DEFAULT_JUNCTION_RADIUS, RegionSpec::table1())
    }

    /// Geometry at `junction_radius` with default proportions.
    pub fn with_radius(junction_radius: f64, regions: Vec<RegionSpec>) -> Self {
        let barrier_thickness = regions
            .iter()
            .find(|r| r.role == RegionRole::Barrier)
            .map_or(0.0, |r| r.thickness);
        DeviceGeometry {
            junction_radius,
            barrier_thickness,
            electrode_thickness: DEFAULT_ELECTRODE_THICKNESS,
            bottom_electrode_radius: 2.0 * junction_radius,
            barrier_faces: 2,
            domain_radius: DEFAULT_DOMAIN_FACTOR * junction_radius,
            domain_height: DEFAULT_DOMAIN_FACTOR * junction_radius,
            regions,
            mesh: MeshSpec::default(),
        }
    }

    /// Same device with a different barrier thickness.
    pub fn with_barrier(mut self, thickness: f64) -> Self {
        self.barrier_thickness = thickness;
        for r in &mut self.regions {
            if r.role == RegionRole::Barrier {
                r.thickness = thickness;
            }
        }
        self
    }

    /// Same proportions scaled to a new junction radius.
    pub fn rescaled(&self, junction_radius: f64) -> Self {
        let k = junction_radius / self.junction_radius;
        DeviceGeometry {
            junction_radius,
            bottom_electrode_radius: self.bottom_electrode_radius * k,
            domain_radius: self.domain_radius * k,
            domain_height: self.domain_height * k,
            ..self.clone()
        }
    }

    pub fn region(&self, role: RegionRole) -> Option<&RegionSpec> {
        self.regions.iter().find(|r| r.role == role)
    }

    fn thickness(&self, role: RegionRole) -> f64 {
        self.region(role).map_or(0.0, |r| r.thickness)
    }

    fn stack_height(&self) -> f64 {
        self.barrier_thickness + self.barrier_faces as f64 * self.thickness(RegionRole::BarrierMetal)
    }

    pub fn validate(&self) -> Result<()> {
        for r in &self.regions {
            r.validate()?;
        }
        for role in RegionRole::ALL {
            if self.regions.iter().filter(|r| r.role == role).count() > 1 {
                return Err(Error::invalid("regions", "duplicate region role"));
            }
        }
        if self.region(RegionRole::Vacuum).is_none() {
            return Err(Error::invalid("regions", "vacuum region is required"));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.junction_radius) {
            return Err(Error::invalid("junction_radius", "must be positive"));
        }
        if !positive(self.barrier_thickness) {
            return Err(Error::invalid("barrier_thickness", "must be positive"));
        }
        match self.region(RegionRole::Barrier) {
            Some(b) if (b.thickness - self.barrier_thickness).abs() <= 1e-9 * self.barrier_thickness => {}
            Some(_) => return Err(Error::invalid("barrier_thickness", "disagrees with the barrier region")),
            None => return Err(Error::invalid("regions", "barrier region is required")),
        }
        if !(self.barrier_faces == 1 || self.barrier_faces == 2) {
            return Err(Error::invalid("barrier_faces", "must be 1 or 2"));
        }
        let mv = self.thickness(RegionRole::MetalVacuum);
        if !(positive(self.electrode_thickness) && self.electrode_thickness > mv) {
            return Err(Error::invalid("electrode_thickness", "must exceed the oxide thickness"));
        }
        if self.junction_radius <= mv || self.junction_radius <= self.thickness(RegionRole::BarrierVacuum) {
            return Err(Error::invalid("junction_radius", "must exceed the rim layers"));
        }
        if !(self.bottom_electrode_radius.is_finite() && self.bottom_electrode_radius >= self.junction_radius + mv) {
            return Err(Error::invalid(
                "bottom_electrode_radius",
                "must cover the junction and its oxide",
            ));
        }
        if !(self.domain_radius.is_finite()
            && self.domain_radius >= MIN_DOMAIN_FACTOR * self.junction_radius
            && self.domain_radius > self.bottom_electrode_radius)
        {
            return Err(Error::invalid("domain_radius", "must be at least 10 junction radii"));
        }
        let substrate = self.thickness(RegionRole::Substrate);
        let device_top = 2.0 * self.electrode_thickness + self.stack_height();
        if !(self.domain_height.is_finite() && self.domain_height > substrate + device_top) {
            return Err(Error::invalid("domain_height", "must contain the substrate and device"));
        }
        for role in [RegionRole::SubstrateVacuum, RegionRole::MetalSubstrate] {
            if self.thickness(role) >= substrate && substrate > 0.0 {
                return Err(Error::invalid("thickness", "substrate interface exceeds substrate"));
            }
        }
        let m = &self.mesh;
        if !(m.refinement.is_finite() && m.refinement >= 1.0) {
            return Err(Error::invalid("mesh.refinement", "must be at least 1"));
        }
        if !(m.growth.is_finite() && m.growth > 1.0 && m.growth <= 2.0) {
            return Err(Error::invalid("mesh.growth", "must lie in (1, 2]"));
        }
        if !(m.max_cell_fraction.is_finite() && m.max_cell_fraction > 0.0 && m.max_cell_fraction <= 0.5) {
            return Err(Error::invalid("mesh.max_cell_fraction", "must lie in (0, 0.5]"));
        }
        Ok(())
    }
}

/// Material of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    /// Index into [`Mesh::regions`].
    Dielectric(usize),
    /// Bottom electrode, held at `-V/2`.
    Bottom,
    /// Top electrode, held at `+V/2`.
    Top,
}

/// Region map on a tensor grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// Radial cell edges (nm), starting at the axis.
    pub r_edges: Vec<f64>,
    /// Axial cell edges (nm).
    pub z_edges: Vec<f64>,
    /// Cell kinds, radial index fastest.
    pub cells: Vec<CellKind>,
    pub regions: Vec<RegionSpec>,
    /// Cell size used at material boundaries (nm).
    pub fine_cell: f64,
}

impl Mesh {
    pub fn nr(&self) -> usize {
        self.r_edges.len() - 1
    }

    pub fn nz(&self) -> usize {
        self.z_edges.len() - 1
    }

    #[inline]
    pub fn cell(&self, i: usize, k: usize) -> CellKind {
        self.cells[k * self.nr() + i]
    }

    /// Number of cells of `region` crossed along a radial or axial line.
    fn count_along(&self, region: usize, radial: bool, fixed: usize) -> usize {
        if radial {
            (0..self.nr())
                .filter(|&i| self.cell(i, fixed) == CellKind::Dielectric(region))
                .count()
        } else {
            (0..self.nz())
                .filter(|&k| self.cell(fixed, k) == CellKind::Dielectric(region))
                .count()
        }
    }
}

fn locate(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x).saturating_sub(1)
}

/// Graded edges on `[a, b]`; `fine_left`/`fine_right` ask for the fine size
/// at that end.
fn grade_interval(a: f64, b: f64, h_fine: f64, h_max: f64, growth: f64, fine_left: bool, fine_right: bool) -> Vec<f64> {
    let len = b - a;
    let far = h_max.max(h_fine);
    let size_at = |x: f64| -> f64 {
        let dl = if fine_left { x } else { f64::INFINITY };
        let dr = if fine_right { len - x } else { f64::INFINITY };
        let d = dl.min(dr).max(0.0);
        if d.is_infinite() {
            far
        } else {
            (h_fine + (growth - 1.0) * d).min(far)
        }
    };
    let mut sizes = Vec::new();
    let mut x = 0.0;
    loop {
        let h = size_at(x).min(size_at((x + size_at(x)).min(len)));
        if x + h >= len {
            // Either stretch the previous cells or add this one, whichever
            // distorts less.
            let keep = len / (x + h);
            let drop = if x > 0.0 { len / x } else { f64::INFINITY };
            if keep.recip() <= drop || sizes.is_empty() {
                sizes.push(h);
            }
            break;
        }
        sizes.push(h);
        x += h;
    }
    let total: f64 = sizes.iter().sum();
    let scale = len / total;
    let mut edges = Vec::with_capacity(sizes.len() + 1);
    let mut acc = 0.0;
    edges.push(a);
    for (n, s) in sizes.iter().enumerate() {
        acc += s * scale;
        edges.push(if n + 1 == sizes.len() { b } else { a + acc });
    }
    edges
}

fn build_axis(breaks: &mut Vec<f64>, h_fine: f64, h_max: f64, growth: f64) -> Vec<f64> {
    breaks.sort_by(f64::total_cmp);
    let span = breaks[breaks.len() - 1] - breaks[0];
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * span.max(1.0));
    let mut edges = vec![breaks[0]];
    let last = breaks.len() - 2;
    for (n, w) in breaks.windows(2).enumerate() {
        let seg = grade_interval(w[0], w[1], h_fine, h_max, growth, n != 0, n != last);
        edges.extend_from_slice(&seg[1..]);
    }
    edges
}

struct Extents {
    sub: f64,
    ms: f64,
    sv: f64,
    mv: f64,
    tbm: f64,
    tbv: f64,
    te: f64,
    r_tb: f64,
    r_be: f64,
    stack_top: f64,
    device_top: f64,
}

fn extents(g: &DeviceGeometry) -> Extents {
    let te = g.electrode_thickness;
    let stack_top = te + g.stack_height();
    Extents {
        sub: g.thickness(RegionRole::Substrate),
        ms: g.thickness(RegionRole::MetalSubstrate),
        sv: g.thickness(RegionRole::SubstrateVacuum),
        mv: g.thickness(RegionRole::MetalVacuum),
        tbm: g.thickness(RegionRole::BarrierMetal),
        tbv: g.thickness(RegionRole::BarrierVacuum),
        te,
        r_tb: g.junction_radius,
        r_be: g.bottom_electrode_radius,
        stack_top,
        device_top: stack_top + te,
    }
}

/// Discretize the device: graded grid plus one region per cell.
pub fn build_geometry(g: &DeviceGeometry) -> Result<Mesh> {
    g.validate()?;
    let e = extents(g);
    let z_bottom = -e.sub;
    let z_top = g.domain_height - e.sub;

    let mut thin: Vec<f64> = g
        .regions
        .iter()
        .filter(|r| r.role != RegionRole::Vacuum && r.thickness > 0.0)
        .map(|r| r.thickness)
        .collect();
    thin.push(e.te - e.mv);
    let thinnest = thin.iter().copied().fold(f64::INFINITY, f64::min);
    let h_fine = thinnest / (2.0 * g.mesh.refinement);
    if h_fine < MIN_CELL {
        return Err(Error::Meshing(alloc::format!(
            "layer of {thinnest} nm needs cells below the {MIN_CELL} nm minimum"
        )));
    }

    let mut r_breaks = vec![0.0, e.r_tb, e.r_be, g.domain_radius];
    for x in [e.r_tb - e.mv, e.r_tb - e.tbv, e.r_be - e.mv] {
        r_breaks.push(x);
    }
    let mut z_breaks = vec![
        z_bottom,
        0.0,
        e.te,
        e.stack_top,
        e.device_top,
        z_top,
        -e.ms,
        -e.sv,
        e.te - e.mv,
        e.te + e.tbm,
        e.device_top - e.mv,
    ];
    if g.barrier_faces == 2 {
        z_breaks.push(e.stack_top - e.tbm);
    }
    z_breaks.retain(|&z| z >= z_bottom);
    let r_edges = build_axis(
        &mut r_breaks,
        h_fine,
        g.mesh.max_cell_fraction * g.domain_radius,
        g.mesh.growth,
    );
    let z_edges = build_axis(
        &mut z_breaks,
        h_fine,
        g.mesh.max_cell_fraction * g.domain_height,
        g.mesh.growth,
    );

    let nr = r_edges.len() - 1;
    let nz = z_edges.len() - 1;
    let bw = nr.min(nz);
    if nr.saturating_mul(nz).saturating_mul(bw + 1) > MAX_BAND_ENTRIES {
        return Err(Error::Meshing(alloc::format!(
            "grid of {nr} x {nz} cells exceeds the solver budget"
        )));
    }

    let index = |role: RegionRole| -> Option<usize> {
        g.regions.iter().position(|r| {
            r.role == role && (r.thickness > 0.0 || matches!(role, RegionRole::Vacuum | RegionRole::Barrier))
        })
    };
    let vacuum = index(RegionRole::Vacuum).expect("validated");
    let barrier = index(RegionRole::Barrier).expect("validated");
    let substrate = index(RegionRole::Substrate);
    let ms = index(RegionRole::MetalSubstrate);
    let sv = index(RegionRole::SubstrateVacuum);
    let mv = index(RegionRole::MetalVacuum);
    let tbm = index(RegionRole::BarrierMetal);
    let tbv = index(RegionRole::BarrierVacuum);

    let mut cells = Vec::with_capacity(nr * nz);
    for k in 0..nz {
        let z = 0.5 * (z_edges[k] + z_edges[k + 1]);
        for i in 0..nr {
            let r = 0.5 * (r_edges[i] + r_edges[i + 1]);
            let mut kind = CellKind::Dielectric(vacuum);
            if z < 0.0 {
                paint(&mut kind, substrate);
                if r < e.r_be && z > -e.ms {
                    paint(&mut kind, ms);
                }
                if r >= e.r_be && z > -e.sv {
                    paint(&mut kind, sv);
                }
            } else if z < e.te && r < e.r_be {
                kind = CellKind::Bottom;
                let exposed_top = r > e.r_tb && z > e.te - e.mv;
                let sidewall = r > e.r_be - e.mv;
                if exposed_top || sidewall {
                    paint(&mut kind, mv);
                }
            } else if z < e.stack_top && r < e.r_tb {
                paint(&mut kind, Some(barrier));
                if z < e.te + e.tbm || (g.barrier_faces == 2 && z > e.stack_top - e.tbm) {
                    paint(&mut kind, tbm);
                }
                if r > e.r_tb - e.tbv {
                    paint(&mut kind, tbv);
                }
            } else if z >= e.stack_top && z < e.device_top && r < e.r_tb {
                kind = CellKind::Top;
                if z > e.device_top - e.mv || r > e.r_tb - e.mv {
                    paint(&mut kind, mv);
                }
            }
            cells.push(kind);
        }
    }

    let mesh = Mesh {
        r_edges,
        z_edges,
        cells,
        regions: g.regions.clone(),
        fine_cell: h_fine,
    };
    check_resolution(&mesh, g, &e)?;
    Ok(mesh)
}

fn paint(kind: &mut CellKind, slot: Option<usize>) {
    if let Some(s) = slot {
        *kind = CellKind::Dielectric(s);
    }
}

fn check_resolution(mesh: &Mesh, g: &DeviceGeometry, e: &Extents) -> Result<()> {
    let col = |r: f64| locate(&mesh.r_edges, r);
    let row = |z: f64| locate(&mesh.z_edges, z);
    let mut probes: Vec<(RegionRole, bool, usize)> = vec![(RegionRole::Barrier, false, 0)];
    let inner = col(0.5 * (e.r_tb - e.mv.max(e.tbv)));
    probes[0].2 = inner;
    probes.push((RegionRole::BarrierMetal, false, inner));
    probes.push((RegionRole::MetalSubstrate, false, inner));
    probes.push((RegionRole::MetalVacuum, false, inner));
    probes.push((
        RegionRole::SubstrateVacuum,
        false,
        col(0.5 * (e.r_be + g.domain_radius)),
    ));
    probes.push((RegionRole::BarrierVacuum, true, row(e.te + 0.5 * g.stack_height())));
    for (role, radial, fixed) in probes {
        let Some(idx) = mesh.regions.iter().position(|r| r.role == role) else {
            continue;
        };
        if mesh.regions[idx].thickness <= 0.0 {
            continue;
        }
        let faces = if role == RegionRole::BarrierMetal {
            g.barrier_faces as usize
        } else {
            1
        };
        let n = mesh.count_along(idx, radial, fixed);
        if n < 2 * faces {
            return Err(Error::Meshing(alloc::format!(
                "region {} resolved by {n} cells",
                mesh.regions[idx].name
            )));
        }
    }
    Ok(())
}

/// Solved potential and the field energy split by region.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSolution {
    pub mesh: Mesh,
    pub voltage: f64,
    /// Cell-centered potential (V), radial index fastest.
    pub potential: Vec<f64>,
    /// Field energy per cell in units of `ε0 V^2 nm`.
    pub cell_energy: Vec<f64>,
    /// Energy per entry of `mesh.regions`, same units.
    pub region_energy: Vec<f64>,
    pub total_energy: f64,
    /// Relative residual after each solve pass.
    pub residual_history: Vec<f64>,
    /// Largest net flux out of a dielectric cell relative to the largest
    /// face flux.
    pub flux_imbalance: f64,
}

/// Participation ratio of one region.
#[derive(Debug, Clone, PartialEq)]
pub struct Participation {
    pub name: String,
    pub role: RegionRole,
    pub ratio: f64,
}

impl FieldSolution {
    /// Capacitance between the electrodes (fF).
    pub fn capacitance_ff(&self) -> f64 {
        2.0 * self.total_energy / (self.voltage * self.voltage) * VACUUM_PERMITTIVITY * 1e-9 * 1e15
    }

    pub fn potential_at(&self, i: usize, k: usize) -> f64 {
        self.potential[k * self.mesh.nr() + i]
    }

    /// Energy density of a cell in units of `ε0 V^2 / nm^2`.
    pub fn energy_density(&self, i: usize, k: usize) -> f64 {
        let m = &self.mesh;
        let (r0, r1) = (m.r_edges[i], m.r_edges[i + 1]);
        let vol = PI * (r1 * r1 - r0 * r0) * (m.z_edges[k + 1] - m.z_edges[k]);
        self.cell_energy[k * m.nr() + i] / vol
    }

    /// Axial field `-dφ/dz` (V/nm) between the centers of cells `k` and `k+1`.
    pub fn axial_field(&self, i: usize, k: usize) -> f64 {
        let m = &self.mesh;
        let zc = |k: usize| 0.5 * (m.z_edges[k] + m.z_edges[k + 1]);
        -(self.potential_at(i, k + 1) - self.potential_at(i, k)) / (zc(k + 1) - zc(k))
    }
}

/// Half-cell resistances of a face (zero on the conductor side).
struct Face {
    a: usize,
    b: usize,
    ra: f64,
    rb: f64,
}

fn epsilon_of(mesh: &Mesh, kind: CellKind) -> Option<f64> {
    match kind {
        CellKind::Dielectric(n) => Some(mesh.regions[n].epsilon),
        CellKind::Bottom | CellKind::Top => None,
    }
}

fn faces(mesh: &Mesh) -> Vec<Face> {
    let nr = mesh.nr();
    let nz = mesh.nz();
    let re = &mesh.r_edges;
    let ze = &mesh.z_edges;
    let rc = |i: usize| 0.5 * (re[i] + re[i + 1]);
    let zc = |k: usize| 0.5 * (ze[k] + ze[k + 1]);
    let mut out = Vec::with_capacity(2 * nr * nz);
    for k in 0..nz {
        let dz = ze[k + 1] - ze[k];
        for i in 0..nr {
            let a = k * nr + i;
            let ka = mesh.cells[a];
            let ea = epsilon_of(mesh, ka);
            if i + 1 < nr {
                let b = a + 1;
                let kb = mesh.cells[b];
                let eb = epsilon_of(mesh, kb);
                if ea.is_some() || eb.is_some() {
                    let rf = re[i + 1];
                    let half = |eps: Option<f64>, lo: f64, hi: f64| {
                        eps.map_or(0.0, |e| math::ln(hi / lo) / (2.0 * PI * e * dz))
                    };
                    out.push(Face {
                        a,
                        b,
                        ra: half(ea, rc(i), rf),
                        rb: half(eb, rf, rc(i + 1)),
                    });
                }
            }
            if k + 1 < nz {
                let b = a + nr;
                let kb = mesh.cells[b];
                let eb = epsilon_of(mesh, kb);
                if ea.is_some() || eb.is_some() {
                    let area = PI * (re[i + 1] * re[i + 1] - re[i] * re[i]);
                    let zf = ze[k + 1];
                    out.push(Face {
                        a,
                        b,
                        ra: ea.map_or(0.0, |e| (zf - zc(k)) / (e * area)),
                        rb: eb.map_or(0.0, |e| (zc(k + 1) - zf) / (e * area)),
                    });
                }
            }
        }
    }
    out
}

fn fixed_potential(kind: CellKind, voltage: f64) -> Option<f64> {
    match kind {
        CellKind::Bottom => Some(-0.5 * voltage),
        CellKind::Top => Some(0.5 * voltage),
        CellKind::Dielectric(_) => None,
    }
}

/// Solve for the potential with the electrodes at `∓voltage/2`.
pub fn solve_potential(mesh: &Mesh, voltage: f64) -> Result<FieldSolution> {
    if !(voltage.is_finite() && voltage != 0.0) {
        return Err(Error::invalid("voltage", "must be finite and nonzero"));
    }
    let has = |want: CellKind| mesh.cells.contains(&want);
    if !(has(CellKind::Bottom) && has(CellKind::Top)) {
        return Err(Error::Meshing("both electrodes must be present".into()));
    }
    let nr = mesh.nr();
    let nz = mesh.nz();
    let n = nr * nz;
    // Number along the shorter axis first to keep the band narrow.
    let radial_fast = nr <= nz;
    let bw = if radial_fast { nr } else { nz };
    let order = |c: usize| -> usize {
        if radial_fast {
            c
        } else {
            let (i, k) = (c % nr, c / nr);
            i * nz + k
        }
    };

    let faces = faces(mesh);
    let mut band = BandedSpd::zeros(n, bw);
    let mut rhs = vec![0.0; n];
    for (c, &kind) in mesh.cells.iter().enumerate() {
        if let Some(v) = fixed_potential(kind, voltage) {
            band.add(order(c), order(c), 1.0);
            rhs[order(c)] = v;
        }
    }
    for f in &faces {
        let g = 1.0 / (f.ra + f.rb);
        let va = fixed_potential(mesh.cells[f.a], voltage);
        let vb = fixed_potential(mesh.cells[f.b], voltage);
        let (pa, pb) = (order(f.a), order(f.b));
        match (va, vb) {
            (None, None) => {
                band.add(pa, pa, g);
                band.add(pb, pb, g);
                band.add(pa, pb, -g);
            }
            (None, Some(v)) => {
                band.add(pa, pa, g);
                rhs[pa] += g * v;
            }
            (Some(v), None) => {
                band.add(pb, pb, g);
                rhs[pb] += g * v;
            }
            (Some(_), Some(_)) => {}
        }
    }
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for (c, &kind) in mesh.cells.iter().enumerate() {
            if fixed_potential(kind, voltage).is_some() {
                y[order(c)] = x[order(c)];
            }
        }
        for f in &faces {
            let g = 1.0 / (f.ra + f.rb);
            let va = fixed_potential(mesh.cells[f.a], voltage);
            let vb = fixed_potential(mesh.cells[f.b], voltage);
            let (pa, pb) = (order(f.a), order(f.b));
            match (va, vb) {
                (None, None) => {
                    let d = g * (x[pa] - x[pb]);
                    y[pa] += d;
                    y[pb] -= d;
                }
                (None, Some(_)) => y[pa] += g * x[pa],
                (Some(_), None) => y[pb] += g * x[pb],
                (Some(_), Some(_)) => {}
            }
        }
        y
    };

    let factor = band.cholesky()?;
    let rhs_norm = norm2(&rhs);
    let mut x = factor.solve(&rhs);
    let mut history = Vec::new();
    loop {
        let ax = apply(&x);
        let residual: Vec<f64> = rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let rel = norm2(&residual) / rhs_norm;
        history.push(rel);
        if rel < SOLVE_TOLERANCE {
            break;
        }
        if history.len() > MAX_REFINEMENT_STEPS || !rel.is_finite() {
            return Err(Error::SolverDivergence { history });
        }
        let dx = factor.solve(&residual);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
    }

    let potential: Vec<f64> = (0..n).map(|c| x[order(c)]).collect();
    let mut cell_energy = vec![0.0; n];
    let mut net = vec![0.0; n];
    let mut max_flux = 0.0f64;
    for f in &faces {
        let flux = (potential[f.a] - potential[f.b]) / (f.ra + f.rb);
        cell_energy[f.a] += 0.5 * flux * flux * f.ra;
        cell_energy[f.b] += 0.5 * flux * flux * f.rb;
        net[f.a] += flux;
        net[f.b] -= flux;
        max_flux = max_flux.max(flux.abs());
    }
    let flux_imbalance = mesh
        .cells
        .iter()
        .zip(&net)
        .filter(|(k, _)| matches!(k, CellKind::Dielectric(_)))
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max)
        / max_flux;

    let mut region_energy = vec![0.0; mesh.regions.len()];
    for (c, &kind) in mesh.cells.iter().enumerate() {
        if let CellKind::Dielectric(r) = kind {
            region_energy[r] += cell_energy[c];
        }
    }
    let total_energy = region_energy.iter().sum();
    Ok(FieldSolution {
        mesh: mesh.clone(),
        voltage,
        potential,
        cell_energy,
        region_energy,
        total_energy,
        residual_history: history,
        flux_imbalance,
    })
}

fn norm2(v: &[f64]) -> f64 {
    math::sqrt(v.iter().map(|x| x * x).sum())
}

/// Participation ratio `U_n / U_total` of every region, in region order.
pub fn participation_ratios(solution: &FieldSolution) -> Vec<Participation> {
    solution
        .mesh
        .regions
        .iter()
        .zip(&solution.region_energy)
        .map(|(r, u)| Participation {
            name: r.name.clone(),
            role: r.role,
            ratio: u / solution.total_energy,
        })
        .collect()
}

/// Mesh, solve and reduce in one step, at unit voltage.
pub fn simulate(g: &DeviceGeometry) -> Result<Vec<Participation>> {
    let mesh = build_geometry(g)?;
    Ok(participation_ratios(&solve_potential(&mesh, 1.0)?))
}

/// One-dimensional series-capacitor estimate: the barrier stack as
/// capacitors in series, `p_n ∝ d_n / ε_n`, every other region zero.
pub fn series_participation(g: &DeviceGeometry) -> Result<Vec<Participation>> {
    g.validate()?;
    let tb = g.region(RegionRole::Barrier).expect("validated");
    let weight = |role: RegionRole| -> f64 {
        match role {
            RegionRole::Barrier => tb.thickness / tb.epsilon,
            RegionRole::BarrierMetal => g
                .region(role)
                .map_or(0.0, |r| g.barrier_faces as f64 * r.thickness / r.epsilon),
            _ => 0.0,
        }
    };
    let total: f64 = g.regions.iter().map(|r| weight(r.role)).sum();
    Ok(g.regions
        .iter()
        .map(|r| Participation {
            name: r.name.clone(),
            role: r.role,
            ratio: weight(r.role) / total,
        })
        .collect())
}

/// Look up the ratio of `role` in a participation list.
pub fn ratio_of(list: &[Participation], role: RegionRole) -> f64 {
    list.iter().find(|p| p.role == role).map_or(0.0, |p| p.ratio)
}
