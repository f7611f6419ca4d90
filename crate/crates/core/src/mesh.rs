//! Oriented triangle meshes: construction from patches, validation, areas,
//! and the cotangent-weighted discrete mean curvature.
//!
//! Discrete H follows Meyer's mean-curvature normal: at an interior vertex,
//! `K_i = sum_j (cot a_ij + cot b_ij)(x_i - x_j) / (2 A_i)` with mixed Voronoi
//! vertex areas (barycentric `area/3` fallback on obtuse triangles), and
//! `H_i = <K_i, n_i> / 2`. With the crate's orientation convention a round
//! sphere meshed outward reports H near +1.

use crate::surface::{ParametricPatch, Vec3};
use std::collections::HashMap;
use thiserror::Error;

/// Default absolute floor on triangle area.
pub const AREA_FLOOR: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {tri} has area {area:e} below the degeneracy floor {floor:e}")]
    DegenerateTriangle { tri: usize, area: f64, floor: f64 },
    #[error("edge ({a},{b}) is shared by more than two triangles")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("inconsistent winding across edge ({a},{b}); mesh is not orientable as given")]
    InconsistentWinding { a: usize, b: usize },
    #[error("triangle {tri} references vertex {vid} out of range")]
    IndexOutOfRange { tri: usize, vid: usize },
    #[error("grid resolution must be at least 2, got {0}x{1}")]
    ResolutionTooLow(usize, usize),
    #[error("mesh parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("operation requires a closed mesh but the mesh has boundary")]
    NotClosed,
}

/// An oriented simplicial surface in R^3.
///
/// Immutable after construction; flows build fresh meshes per step.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// True for vertices on a boundary edge.
    pub boundary: Vec<bool>,
    /// Parameter coordinates when the mesh came from a patch.
    pub params: Option<Vec<(f64, f64)>>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        Self::with_params(vertices, triangles, None)
    }

    pub fn with_params(
        vertices: Vec<Vec3>,
        triangles: Vec<[usize; 3]>,
        params: Option<Vec<(f64, f64)>>,
    ) -> Result<Self, MeshError> {
        let mut mesh = TriangleMesh {
            boundary: vec![false; vertices.len()],
            vertices,
            triangles,
            params,
        };
        mesh.validate(AREA_FLOOR)?;
        Ok(mesh)
    }

    /// Checks the structural invariants: index bounds, area floor, at most two
    /// triangles per edge, and globally consistent winding. Fills boundary flags.
    pub fn validate(&mut self, area_floor: f64) -> Result<(), MeshError> {
        let nv = self.vertices.len();
        for (t, tri) in self.triangles.iter().enumerate() {
            for &vid in tri {
                if vid >= nv {
                    return Err(MeshError::IndexOutOfRange { tri: t, vid });
                }
            }
            let area = self.triangle_area(t);
            if area < area_floor {
                return Err(MeshError::DegenerateTriangle {
                    tri: t,
                    area,
                    floor: area_floor,
                });
            }
        }
        // edge -> (count, direction balance); a consistently wound interior edge
        // is traversed once each way.
        let mut edges: HashMap<(usize, usize), (u32, i32)> = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let dir = if a < b { 1 } else { -1 };
                let e = edges.entry(key).or_insert((0, 0));
                e.0 += 1;
                e.1 += dir;
            }
        }
        self.boundary = vec![false; nv];
        for (&(a, b), &(count, balance)) in &edges {
            if count > 2 {
                return Err(MeshError::NonManifoldEdge { a, b });
            }
            if count == 2 && balance != 0 {
                return Err(MeshError::InconsistentWinding { a, b });
            }
            if count == 1 {
                self.boundary[a] = true;
                self.boundary[b] = true;
            }
        }
        Ok(())
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let u = self.vertices[b] - self.vertices[a];
        let v = self.vertices[c] - self.vertices[a];
        0.5 * u.cross(&v).norm()
    }

    pub fn triangle_normal(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangles[t];
        let u = self.vertices[b] - self.vertices[a];
        let v = self.vertices[c] - self.vertices[a];
        u.cross(&v)
    }

    /// Total surface area.
    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn is_closed(&self) -> bool {
        !self.boundary.iter().any(|&b| b)
    }

    pub fn euler_characteristic(&self) -> i64 {
        let mut edges = std::collections::HashSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                edges.insert((a.min(b), a.max(b)));
            }
        }
        self.vertices.len() as i64 - edges.len() as i64 + self.triangles.len() as i64
    }

    pub fn min_edge_length(&self) -> f64 {
        let mut m = f64::INFINITY;
        for tri in &self.triangles {
            for k in 0..3 {
                let l = (self.vertices[tri[k]] - self.vertices[tri[(k + 1) % 3]]).norm();
                m = m.min(l);
            }
        }
        m
    }

    /// Interior angles of triangle `t` at its three vertices.
    pub fn triangle_angles(&self, t: usize) -> [f64; 3] {
        let [a, b, c] = self.triangles[t];
        let pa = self.vertices[a];
        let pb = self.vertices[b];
        let pc = self.vertices[c];
        let ang = |p: Vec3, q: Vec3, r: Vec3| {
            let u = q - p;
            let v = r - p;
            (u.dot(&v) / (u.norm() * v.norm())).clamp(-1.0, 1.0).acos()
        };
        [ang(pa, pb, pc), ang(pb, pc, pa), ang(pc, pa, pb)]
    }

    /// Mixed Voronoi vertex areas, with barycentric `area/3` fallback on
    /// obtuse triangles.
    pub fn mixed_vertex_areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let angles = self.triangle_angles(t);
            let obtuse = angles.iter().any(|&a| a > std::f64::consts::FRAC_PI_2);
            let area = self.triangle_area(t);
            if obtuse {
                for &vid in tri {
                    areas[vid] += area / 3.0;
                }
            } else {
                // Voronoi piece at vertex k: (|e_prev|^2 cot(angle at next) +
                // |e_next|^2 cot(angle at prev)) / 8.
                for k in 0..3 {
                    let v = tri[k];
                    let n = tri[(k + 1) % 3];
                    let p = tri[(k + 2) % 3];
                    let e_n = (self.vertices[n] - self.vertices[v]).norm_squared();
                    let e_p = (self.vertices[p] - self.vertices[v]).norm_squared();
                    let cot_n = 1.0 / angles[(k + 1) % 3].tan();
                    let cot_p = 1.0 / angles[(k + 2) % 3].tan();
                    areas[v] += (e_n * cot_p + e_p * cot_n) / 8.0;
                }
            }
        }
        areas
    }

    /// Area-weighted vertex normals (unnormalized cross products summed).
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut normals = vec![Vec3::zeros(); self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.triangle_normal(t);
            for &vid in tri {
                normals[vid] += n;
            }
        }
        for n in &mut normals {
            let l = n.norm();
            if l > 0.0 {
                *n /= l;
            }
        }
        normals
    }

    /// Sum of interior angles around each vertex.
    pub fn angle_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let angles = self.triangle_angles(t);
            for k in 0..3 {
                sums[tri[k]] += angles[k];
            }
        }
        sums
    }

    /// Uniformly scaled copy (exact in floating point for powers of two).
    pub fn scaled(&self, c: f64) -> TriangleMesh {
        let mut m = self.clone();
        for v in &mut m.vertices {
            *v *= c;
        }
        m
    }
}

/// Per-vertex discrete curvature. `valid` is false on boundary vertices and
/// on vertices whose mixed area underflows.
#[derive(Debug, Clone)]
pub struct MeshCurvature {
    pub mean: Vec<f64>,
    pub gauss: Vec<f64>,
    pub normal: Vec<Vec3>,
    pub valid: Vec<bool>,
}

/// Cotangent-weighted mean curvature and angle-defect Gauss curvature.
pub fn mesh_mean_curvature(mesh: &TriangleMesh) -> MeshCurvature {
    let nv = mesh.vertices.len();
    let areas = mesh.mixed_vertex_areas();
    let normals = mesh.vertex_normals();
    let angle_sums = mesh.angle_sums();
    let mut lap = vec![Vec3::zeros(); nv];

    for (t, tri) in mesh.triangles.iter().enumerate() {
        let angles = mesh.triangle_angles(t);
        // edge (a,b) opposite vertex c contributes cot(angle at c) to w_ab
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let c_ang = angles[(k + 2) % 3];
            let w = 1.0 / c_ang.tan();
            let d = mesh.vertices[a] - mesh.vertices[b];
            lap[a] += w * d;
            lap[b] -= w * d;
        }
    }

    let mut mean = vec![0.0; nv];
    let mut gauss = vec![0.0; nv];
    let mut valid = vec![false; nv];
    for i in 0..nv {
        if mesh.boundary[i] || areas[i] <= AREA_FLOOR {
            continue;
        }
        let k_vec = lap[i] / (2.0 * areas[i]);
        mean[i] = 0.5 * k_vec.dot(&normals[i]);
        gauss[i] = (2.0 * std::f64::consts::PI - angle_sums[i]) / areas[i];
        valid[i] = true;
    }
    MeshCurvature {
        mean,
        gauss,
        normal: normals,
        valid,
    }
}

/// Grid triangulation of a patch. `wrap_u`/`wrap_v` identify the seam, which
/// produces cylinders and tori from periodic patches.
pub fn triangulate(
    patch: &ParametricPatch,
    nu: usize,
    nv: usize,
    wrap_u: bool,
    wrap_v: bool,
) -> Result<TriangleMesh, MeshError> {
    if nu < 2 || nv < 2 {
        return Err(MeshError::ResolutionTooLow(nu, nv));
    }
    let d = patch.domain;
    let cols = if wrap_u { nu } else { nu + 1 };
    let rows = if wrap_v { nv } else { nv + 1 };
    let mut vertices = Vec::with_capacity(cols * rows);
    let mut params = Vec::with_capacity(cols * rows);
    for j in 0..rows {
        let v = d.v0 + (d.v1 - d.v0) * j as f64 / nv as f64;
        for i in 0..cols {
            let u = d.u0 + (d.u1 - d.u0) * i as f64 / nu as f64;
            vertices.push(patch.position(u, v));
            params.push((u, v));
        }
    }
    let idx = |i: usize, j: usize| (j % rows) * cols + (i % cols);
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    for j in 0..nv {
        for i in 0..nu {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    TriangleMesh::with_params(vertices, triangles, Some(params))
}

/// Closed latitude/longitude sphere with triangle-fan polar caps.
pub fn sphere_mesh(r: f64, nu: usize, nv: usize) -> Result<TriangleMesh, MeshError> {
    use std::f64::consts::{FRAC_PI_2, PI};
    if nu < 3 || nv < 2 {
        return Err(MeshError::ResolutionTooLow(nu, nv));
    }
    let mut vertices = Vec::new();
    let mut params = Vec::new();
    // interior latitude rows j = 1..nv-1
    for j in 1..nv {
        let v = -FRAC_PI_2 + PI * j as f64 / nv as f64;
        for i in 0..nu {
            let u = 2.0 * PI * i as f64 / nu as f64;
            vertices.push(Vec3::new(
                r * v.cos() * u.cos(),
                r * v.cos() * u.sin(),
                r * v.sin(),
            ));
            params.push((u, v));
        }
    }
    let south = vertices.len();
    vertices.push(Vec3::new(0.0, 0.0, -r));
    params.push((0.0, -FRAC_PI_2));
    let north = vertices.len();
    vertices.push(Vec3::new(0.0, 0.0, r));
    params.push((0.0, FRAC_PI_2));

    let idx = |i: usize, j: usize| (j - 1) * nu + (i % nu);
    let mut triangles = Vec::new();
    for j in 1..nv - 1 {
        for i in 0..nu {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    for i in 0..nu {
        triangles.push([south, idx(i + 1, 1), idx(i, 1)]);
        triangles.push([north, idx(i, nv - 1), idx(i + 1, nv - 1)]);
    }
    TriangleMesh::with_params(vertices, triangles, Some(params))
}

/// Icosphere: subdivided icosahedron projected to the radius-`r` sphere.
pub fn icosphere(r: f64, subdivisions: usize) -> TriangleMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize() * r)
    .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mids = [0usize; 3];
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                mids[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = ((vertices[a] + vertices[b]) / 2.0).normalize() * r;
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            next.push([tri[0], mids[0], mids[2]]);
            next.push([tri[1], mids[1], mids[0]]);
            next.push([tri[2], mids[2], mids[1]]);
            next.push([mids[0], mids[1], mids[2]]);
        }
        triangles = next;
    }
    TriangleMesh::new(vertices, triangles).expect("icosphere construction is valid")
}

/// Fan-and-rings disk mesh of radius `r` in the z = 0 plane; ring k carries
/// `6k` vertices. Parameters equal the (x, y) coordinates, so the disk pairs
/// with the plane patch.
pub fn disk_mesh(r: f64, rings: usize) -> TriangleMesh {
    assert!(rings >= 1);
    let mut vertices = vec![Vec3::zeros()];
    let mut params = vec![(0.0, 0.0)];
    let mut ring_start = vec![0usize; rings + 1];
    for k in 1..=rings {
        ring_start[k] = vertices.len();
        let n = 6 * k;
        let rad = r * k as f64 / rings as f64;
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            let (s, c) = th.sin_cos();
            vertices.push(Vec3::new(rad * c, rad * s, 0.0));
            params.push((rad * c, rad * s));
        }
    }
    let mut triangles = Vec::new();
    // center fan
    for i in 0..6 {
        triangles.push([0, 1 + i, 1 + (i + 1) % 6]);
    }
    // annulus between ring k-1 (6(k-1) verts) and ring k (6k verts), stitched
    // per 60-degree sector with the standard strip pattern
    for k in 2..=rings {
        let inner = ring_start[k - 1];
        let outer = ring_start[k];
        let ni = 6 * (k - 1);
        let no = 6 * k;
        for s in 0..6 {
            let o = |j: usize| outer + (s * k + j) % no;
            let i = |j: usize| inner + (s * (k - 1) + j) % ni;
            for j in 0..k - 1 {
                triangles.push([o(j), o(j + 1), i(j)]);
                triangles.push([o(j + 1), i(j + 1), i(j)]);
            }
            triangles.push([o(k - 1), o(k), i(k - 1)]);
        }
    }
    TriangleMesh::with_params(vertices, triangles, Some(params)).expect("disk mesh is valid")
}

/// Boundary surface of a set of unit voxels, triangulated with outward
/// orientation. Vertices land on the integer lattice, which makes discrete
/// Gauss-Bonnet exact.
pub fn voxel_surface(cells: &[(i32, i32, i32)]) -> TriangleMesh {
    let solid: std::collections::HashSet<(i32, i32, i32)> = cells.iter().copied().collect();
    let mut vid: HashMap<(i32, i32, i32), usize> = HashMap::new();
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();
    let mut vertex = |p: (i32, i32, i32), vertices: &mut Vec<Vec3>| -> usize {
        *vid.entry(p).or_insert_with(|| {
            vertices.push(Vec3::new(p.0 as f64, p.1 as f64, p.2 as f64));
            vertices.len() - 1
        })
    };
    // faces: (neighbor offset, quad corners as offsets from cell origin, CCW seen from outside)
    #[rustfmt::skip]
    let faces: [((i32,i32,i32), [(i32,i32,i32);4]); 6] = [
        (( 1,0,0), [(1,0,0),(1,1,0),(1,1,1),(1,0,1)]),
        ((-1,0,0), [(0,0,0),(0,0,1),(0,1,1),(0,1,0)]),
        ((0, 1,0), [(0,1,0),(0,1,1),(1,1,1),(1,1,0)]),
        ((0,-1,0), [(0,0,0),(1,0,0),(1,0,1),(0,0,1)]),
        ((0,0, 1), [(0,0,1),(1,0,1),(1,1,1),(0,1,1)]),
        ((0,0,-1), [(0,0,0),(0,1,0),(1,1,0),(1,0,0)]),
    ];
    let mut sorted: Vec<_> = cells.to_vec();
    sorted.sort_unstable();
    for &(cx, cy, cz) in &sorted {
        for (off, quad) in &faces {
            if solid.contains(&(cx + off.0, cy + off.1, cz + off.2)) {
                continue;
            }
            let ids: Vec<usize> = quad
                .iter()
                .map(|&(dx, dy, dz)| vertex((cx + dx, cy + dy, cz + dz), &mut vertices))
                .collect();
            triangles.push([ids[0], ids[1], ids[2]]);
            triangles.push([ids[0], ids[2], ids[3]]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("voxel surface is valid")
}

/// 2x2x2 solid cube boundary: a sphere, chi = 2.
pub fn voxel_sphere() -> TriangleMesh {
    let mut cells = Vec::new();
    for x in 0..2 {
        for y in 0..2 {
            for z in 0..2 {
                cells.push((x, y, z));
            }
        }
    }
    voxel_surface(&cells)
}

/// 3x3 ring of voxels: a torus, chi = 0.
pub fn voxel_torus() -> TriangleMesh {
    let mut cells = Vec::new();
    for x in 0..3 {
        for y in 0..3 {
            if (x, y) != (1, 1) {
                cells.push((x, y, 0));
            }
        }
    }
    voxel_surface(&cells)
}

/// 5x3 slab with two punched holes: genus 2, chi = -2.
pub fn voxel_genus2() -> TriangleMesh {
    let mut cells = Vec::new();
    for x in 0..5 {
        for y in 0..3 {
            if (x, y) != (1, 1) && (x, y) != (3, 1) {
                cells.push((x, y, 0));
            }
        }
    }
    voxel_surface(&cells)
}

/// OFF serialization (vertices + triangles).
pub fn to_off(mesh: &TriangleMesh) -> String {
    let mut s = String::from("OFF\n");
    s.push_str(&format!(
        "{} {} 0\n",
        mesh.vertices.len(),
        mesh.triangles.len()
    ));
    for v in &mesh.vertices {
        s.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
    }
    s
}

pub fn from_off(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (line, header) = lines.next().ok_or(MeshError::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    if header != "OFF" {
        return Err(MeshError::Parse {
            line,
            msg: format!("expected OFF header, got {header:?}"),
        });
    }
    let (line, counts) = lines.next().ok_or(MeshError::Parse {
        line,
        msg: "missing counts line".into(),
    })?;
    let nums: Vec<usize> = counts
        .split_whitespace()
        .map(|w| w.parse().map_err(|_| MeshError::Parse {
            line,
            msg: format!("bad count {w:?}"),
        }))
        .collect::<Result<_, _>>()?;
    if nums.len() < 2 {
        return Err(MeshError::Parse {
            line,
            msg: "counts line needs nV nF".into(),
        });
    }
    let (nv, nf) = (nums[0], nums[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines.next().ok_or(MeshError::Parse {
            line: 0,
            msg: "unexpected end of vertex list".into(),
        })?;
        let xs: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|w| w.parse().map_err(|_| MeshError::Parse {
                line,
                msg: format!("bad coordinate {w:?}"),
            }))
            .collect::<Result<_, _>>()?;
        if xs.len() != 3 {
            return Err(MeshError::Parse {
                line,
                msg: "vertex needs 3 coordinates".into(),
            });
        }
        vertices.push(Vec3::new(xs[0], xs[1], xs[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines.next().ok_or(MeshError::Parse {
            line: 0,
            msg: "unexpected end of face list".into(),
        })?;
        let ws: Vec<&str> = l.split_whitespace().collect();
        if ws.first() != Some(&"3") || ws.len() < 4 {
            return Err(MeshError::Parse {
                line,
                msg: "only triangular faces are supported".into(),
            });
        }
        let mut tri = [0usize; 3];
        for k in 0..3 {
            tri[k] = ws[k + 1].parse().map_err(|_| MeshError::Parse {
                line,
                msg: format!("bad index {:?}", ws[k + 1]),
            })?;
        }
        triangles.push(tri);
    }
    TriangleMesh::new(vertices, triangles)
}

/// Minimal OBJ subset serialization: `v` and triangular `f` lines only.
pub fn to_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    s
}

pub fn from_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let mut ws = l.split_whitespace();
        match ws.next() {
            Some("v") => {
                let xs: Vec<f64> = ws
                    .take(3)
                    .map(|w| w.parse().map_err(|_| MeshError::Parse {
                        line,
                        msg: format!("bad coordinate {w:?}"),
                    }))
                    .collect::<Result<_, _>>()?;
                if xs.len() != 3 {
                    return Err(MeshError::Parse {
                        line,
                        msg: "v line needs 3 coordinates".into(),
                    });
                }
                vertices.push(Vec3::new(xs[0], xs[1], xs[2]));
            }
            Some("f") => {
                let ids: Vec<usize> = ws
                    .map(|w| {
                        let first = w.split('/').next().unwrap_or(w);
                        first
                            .parse::<usize>()
                            .map_err(|_| MeshError::Parse {
                                line,
                                msg: format!("bad face index {w:?}"),
                            })
                            .and_then(|n| {
                                if n == 0 {
                                    Err(MeshError::Parse {
                                        line,
                                        msg: "OBJ indices are 1-based".into(),
                                    })
                                } else {
                                    Ok(n - 1)
                                }
                            })
                    })
                    .collect::<Result<_, _>>()?;
                if ids.len() != 3 {
                    return Err(MeshError::Parse {
                        line,
                        msg: "only triangular faces are supported".into(),
                    });
                }
                triangles.push([ids[0], ids[1], ids[2]]);
            }
            // ignore normals, texture coords, groups, etc.
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::patches;
    use approx::assert_relative_eq;

    #[test]
    fn plane_grid_counts_and_euler() {
        let m = triangulate(&patches::plane(), 2, 2, false, false).unwrap();
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(m.euler_characteristic(), 1);
        assert!(!m.is_closed());
    }

    #[test]
    fn unit_square_area() {
        let m = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert_eq!(m.area(), 1.0);
    }

    #[test]
    fn sphere_mesh_closed_euler_two_and_area() {
        let m = sphere_mesh(1.0, 24, 12).unwrap();
        assert!(m.is_closed());
        assert_eq!(m.euler_characteristic(), 2);
        let fine = sphere_mesh(1.0, 96, 48).unwrap();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((fine.area() - exact).abs() / exact < 0.005);
    }

    #[test]
    fn catenoid_area_matches_closed_form() {
        let m = triangulate(&patches::catenoid(1.0), 128, 128, true, false).unwrap();
        let exact = 2.0 * std::f64::consts::PI * (1.0 + 1.0_f64.sinh() * 1.0_f64.cosh());
        assert!((m.area() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn planar_interior_h_is_exactly_zero() {
        let m = triangulate(&patches::plane(), 8, 8, false, false).unwrap();
        let c = mesh_mean_curvature(&m);
        for i in 0..m.vertices.len() {
            if c.valid[i] {
                assert_eq!(c.mean[i], 0.0);
            }
        }
        assert!(c.valid.iter().any(|&v| v));
    }

    #[test]
    fn sphere_h_converges_to_one() {
        // uniform refinement ladder on the icosphere; near-equilateral vertex
        // stars give the cotangent estimator its clean O(h^2) pointwise rate
        let mut errs = Vec::new();
        for k in [2, 3, 4] {
            let m = icosphere(1.0, k);
            let c = mesh_mean_curvature(&m);
            let mut worst: f64 = 0.0;
            for i in 0..m.vertices.len() {
                if c.valid[i] {
                    worst = worst.max((c.mean[i] - 1.0).abs());
                }
            }
            errs.push(worst);
        }
        let order1 = (errs[0] / errs[1]).log2();
        let order2 = (errs[1] / errs[2]).log2();
        assert!(
            order1 > 1.7 && order2 > 1.7,
            "orders {order1:.2}, {order2:.2}, errs {errs:?}"
        );
    }

    #[test]
    fn catenoid_discrete_h_small_and_shrinking() {
        let coarse = triangulate(&patches::catenoid(1.0), 32, 16, true, false).unwrap();
        let fine = triangulate(&patches::catenoid(1.0), 64, 32, true, false).unwrap();
        let worst = |m: &TriangleMesh| {
            let c = mesh_mean_curvature(m);
            (0..m.vertices.len())
                .filter(|&i| c.valid[i])
                .map(|i| c.mean[i].abs())
                .fold(0.0, f64::max)
        };
        let (e0, e1) = (worst(&coarse), worst(&fine));
        assert!(e1 < e0, "no improvement: {e0} -> {e1}");
        assert!(e0 / e1 > 2.5, "order below ~2: {e0} -> {e1}");
    }

    #[test]
    fn voxel_meshes_have_expected_euler() {
        assert_eq!(voxel_sphere().euler_characteristic(), 2);
        assert_eq!(voxel_torus().euler_characteristic(), 0);
        assert_eq!(voxel_genus2().euler_characteristic(), -2);
        assert!(voxel_genus2().is_closed());
    }

    #[test]
    fn degenerate_cells_rejected() {
        // full-latitude grid collapses cells at the poles
        let r = triangulate(&patches::sphere(1.0), 8, 8, true, false);
        assert!(matches!(r, Err(MeshError::DegenerateTriangle { .. })));
    }

    #[test]
    fn moebius_strip_rejected() {
        // classic non-orientable identification
        let mut vertices = Vec::new();
        let n = 12;
        for i in 0..n {
            let th = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            for &s in &[-0.3, 0.3_f64] {
                let w = th / 2.0;
                vertices.push(Vec3::new(
                    (1.0 + s * w.cos()) * th.cos(),
                    (1.0 + s * w.cos()) * th.sin(),
                    s * w.sin(),
                ));
            }
        }
        let mut triangles = Vec::new();
        for i in 0..n {
            let a0 = 2 * i;
            let a1 = 2 * i + 1;
            let (b0, b1) = if i + 1 < n {
                (2 * (i + 1), 2 * (i + 1) + 1)
            } else {
                (1, 0) // glue with a flip
            };
            triangles.push([a0, b0, b1]);
            triangles.push([a0, b1, a1]);
        }
        let r = TriangleMesh::new(vertices, triangles);
        assert!(matches!(r, Err(MeshError::InconsistentWinding { .. })));
    }

    #[test]
    fn disk_mesh_is_a_disk() {
        let m = disk_mesh(1.0, 6);
        assert_eq!(m.euler_characteristic(), 1);
        let exact = std::f64::consts::PI;
        let fine = disk_mesh(1.0, 24);
        assert!((fine.area() - exact).abs() / exact < 0.01);
    }

    #[test]
    fn off_and_obj_round_trip() {
        let m = voxel_torus();
        let m2 = from_off(&to_off(&m)).unwrap();
        assert_eq!(m.vertices.len(), m2.vertices.len());
        assert_eq!(m.triangles, m2.triangles);
        let m3 = from_obj(&to_obj(&m)).unwrap();
        assert_eq!(m.triangles, m3.triangles);
        assert_eq!(m.vertices, m3.vertices);
    }

    #[test]
    fn obj_parser_handles_slashed_faces() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3\n";
        let m = from_obj(text).unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
    }
}
