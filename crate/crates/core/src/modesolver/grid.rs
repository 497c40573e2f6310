//! Cell-centered rectilinear grid over the half-space z ≥ 0 of the
//! axisymmetric (ρ, z) cross-section, with PML cells on the outer edges.
//!
//! Material interfaces (disk rim and top face) always fall on cell faces, so
//! every cell is homogeneous.

use num_complex::Complex64;

/// One axis of the grid: monotone face positions and derived cell centers (m).
#[derive(Debug, Clone)]
pub struct Axis {
    pub faces: Vec<f64>,
    pub centers: Vec<f64>,
    /// Coordinate where the absorbing layer starts.
    pub pml_start: f64,
    pub pml_thickness: f64,
}

impl Axis {
    fn from_faces(faces: Vec<f64>, pml_start: f64, pml_thickness: f64) -> Self {
        let centers = faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        Self {
            faces,
            centers,
            pml_start,
            pml_thickness,
        }
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn width(&self, i: usize) -> f64 {
        self.faces[i + 1] - self.faces[i]
    }

    /// Complex stretch factor s(u) = 1 + i·S·((u − u_pml)/L)².
    pub fn stretch(&self, u: f64, strength: f64) -> Complex64 {
        if u <= self.pml_start {
            Complex64::new(1.0, 0.0)
        } else {
            let x = (u - self.pml_start) / self.pml_thickness;
            Complex64::new(1.0, strength * x * x)
        }
    }

    /// Stretched coordinate ũ = ∫ s du.
    pub fn stretched(&self, u: f64, strength: f64) -> Complex64 {
        if u <= self.pml_start {
            Complex64::new(u, 0.0)
        } else {
            let x = u - self.pml_start;
            Complex64::new(u, strength * x * x * x / (3.0 * self.pml_thickness * self.pml_thickness))
        }
    }
}

/// Parameters controlling grid construction. Lengths in meters.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub spacing: f64,
    pub max_spacing: f64,
    pub growth: f64,
    /// Fine uniform region kept outside each disk face before coarsening.
    pub fine_margin: f64,
    pub inner_margin: f64,
    pub rho_extent: f64,
    pub z_extent: f64,
    pub pml_thickness: f64,
    /// Cells across the disk half-thickness; derived from `spacing` if unset.
    pub disk_z_cells: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Grid {
    pub rho: Axis,
    pub z: Axis,
    /// Number of uniform cells across the disk half-thickness.
    pub disk_z_cells: usize,
    pub radius: f64,
    pub half_thickness: f64,
}

/// Faces from `start` outward: `n_uniform` cells of `h`, then geometric growth
/// capped at `max_h` until `end` is passed, then PML cells of `max_h`.
fn graded_faces(start: f64, h: f64, fine_end: f64, end: f64, spec: &GridSpec) -> (Vec<f64>, f64) {
    let mut faces = vec![start];
    let mut x = start;
    while x + 0.5 * h < fine_end {
        x += h;
        faces.push(x);
    }
    let mut step = h;
    while x < end {
        step = (step * spec.growth).min(spec.max_spacing);
        x += step;
        faces.push(x);
    }
    let pml_start = x;
    let n_pml = (spec.pml_thickness / spec.max_spacing).ceil().max(4.0) as usize;
    let dp = spec.pml_thickness / n_pml as f64;
    for _ in 0..n_pml {
        x += dp;
        faces.push(x);
    }
    (faces, pml_start)
}

impl Grid {
    pub fn new(radius: f64, half_thickness: f64, spec: &GridSpec) -> Self {
        let h = spec.spacing;

        // z: uniform cells inside the disk sized so the top face is a cell face
        let disk_z_cells = spec
            .disk_z_cells
            .unwrap_or_else(|| (half_thickness / h).ceil() as usize)
            .max(2);
        let hz = half_thickness / disk_z_cells as f64;
        let mut z_faces: Vec<f64> = (0..=disk_z_cells).map(|k| k as f64 * hz).collect();
        let (tail, z_pml) = graded_faces(
            half_thickness,
            hz,
            half_thickness + spec.fine_margin,
            half_thickness + spec.z_extent,
            spec,
        );
        z_faces.extend_from_slice(&tail[1..]);
        let z = Axis::from_faces(z_faces, z_pml, spec.pml_thickness);

        // rho: uniform from the inner boundary to the rim, with the rim on a face
        let inner = (radius - spec.inner_margin).max(0.0);
        let n_in = ((radius - inner) / h).floor().max(1.0) as usize;
        let mut rho_faces: Vec<f64> = (0..=n_in).map(|k| radius - (n_in - k) as f64 * h).collect();
        let (tail, rho_pml) = graded_faces(
            radius,
            h,
            radius + spec.fine_margin,
            radius + spec.rho_extent,
            spec,
        );
        rho_faces.extend_from_slice(&tail[1..]);
        let rho = Axis::from_faces(rho_faces, rho_pml, spec.pml_thickness);

        Self {
            rho,
            z,
            disk_z_cells,
            radius,
            half_thickness,
        }
    }

    pub fn n_rho(&self) -> usize {
        self.rho.len()
    }
    pub fn n_z(&self) -> usize {
        self.z.len()
    }
    pub fn len(&self) -> usize {
        self.n_rho() * self.n_z()
    }
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_z() + j
    }
    pub fn in_disk(&self, i: usize, j: usize) -> bool {
        self.rho.centers[i] < self.radius && self.z.centers[j] < self.half_thickness
    }
    /// Uniform z spacing inside the disk.
    pub fn disk_dz(&self) -> f64 {
        self.half_thickness / self.disk_z_cells as f64
    }
    pub fn drho(&self) -> f64 {
        self.rho.width(0)
    }
}
