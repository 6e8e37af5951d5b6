//! Simplicial meshes of `Ω \ K` on structured grids.
//!
//! Every grid cell is split into Kuhn simplices (2 triangles or 6
//! tetrahedra). Nodes are grid vertices, except that a vertex touched by a
//! crack is split into one node per side: two element corners at the same
//! vertex share a node exactly when they are linked through element faces
//! that do not lie on the crack. Crack tips inside `Ω` are reached around
//! the tip and therefore stay single; vertices where a crack meets `∂Ω` are
//! split.

mod io;
mod snap;

pub use io::{parse_dump, MeshDump};
pub use snap::SnapRecord;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, AmbientBox, CompactSet, Point};

/// A structured grid of spacing `h` over the ambient box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridRepr", into = "GridRepr")]
pub struct GridSpec {
    ambient: AmbientBox,
    h: f64,
    cells: [usize; 3],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridRepr {
    ambient: AmbientBox,
    h: f64,
}

impl TryFrom<GridRepr> for GridSpec {
    type Error = Error;
    fn try_from(r: GridRepr) -> Result<Self> {
        GridSpec::new(r.ambient, r.h)
    }
}

impl From<GridSpec> for GridRepr {
    fn from(g: GridSpec) -> Self {
        GridRepr {
            ambient: g.ambient,
            h: g.h,
        }
    }
}

impl GridSpec {
    pub fn new(ambient: AmbientBox, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!("mesh spacing must be positive, got {h}")));
        }
        let mut cells = [1usize; 3];
        for d in 0..ambient.dim() {
            let len = ambient.hi()[d] - ambient.lo()[d];
            let m = (len / h).round();
            if m < 1.0 || (m * h - len).abs() > 1e-9 * len.max(1.0) {
                return Err(Error::Argument(format!(
                    "edge length {len} along axis {d} is not a multiple of h = {h}"
                )));
            }
            cells[d] = m as usize;
        }
        Ok(Self { ambient, h, cells })
    }

    pub fn unit(dim: usize, h: f64) -> Result<Self> {
        Self::new(AmbientBox::unit(dim), h)
    }

    pub fn ambient(&self) -> &AmbientBox {
        &self.ambient
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    /// Cells per axis (1 on unused axes).
    pub fn cells(&self) -> [usize; 3] {
        self.cells
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn num_vertices(&self) -> usize {
        (0..self.dim()).map(|d| self.cells[d] + 1).product()
    }

    pub fn vertex_index(&self, ijk: [usize; 3]) -> usize {
        let [nx, ny, _] = self.cells;
        ijk[0] + (nx + 1) * (ijk[1] + (ny + 1) * ijk[2])
    }

    pub fn vertex_ijk(&self, v: usize) -> [usize; 3] {
        let [nx, ny, _] = self.cells;
        let i = v % (nx + 1);
        let r = v / (nx + 1);
        [i, r % (ny + 1), r / (ny + 1)]
    }

    pub fn vertex_point(&self, v: usize) -> Point {
        let ijk = self.vertex_ijk(v);
        let mut p = [0.0; 3];
        for d in 0..self.dim() {
            p[d] = if ijk[d] == self.cells[d] {
                self.ambient.hi()[d]
            } else {
                self.ambient.lo()[d] + ijk[d] as f64 * self.h
            };
        }
        p
    }

    fn cell_ijk(&self, c: usize) -> [usize; 3] {
        let [nx, ny, _] = self.cells;
        [c % nx, (c / nx) % ny, c / (nx * ny)]
    }

    fn cell_center(&self, c: usize) -> Point {
        let ijk = self.cell_ijk(c);
        let mut p = [0.0; 3];
        for d in 0..self.dim() {
            p[d] = self.ambient.lo()[d] + (ijk[d] as f64 + 0.5) * self.h;
        }
        p
    }

    /// Simplices per cell.
    pub fn simplices_per_cell(&self) -> usize {
        if self.dim() == 2 {
            2
        } else {
            6
        }
    }

    /// Nearest grid coordinate along `axis`, with its grid index.
    pub(crate) fn snap_coordinate(&self, axis: usize, x: f64) -> (usize, f64) {
        let lo = self.ambient.lo()[axis];
        let i = ((x - lo) / self.h)
            .round()
            .clamp(0.0, self.cells[axis] as f64) as usize;
        let y = if i == self.cells[axis] {
            self.ambient.hi()[axis]
        } else {
            lo + i as f64 * self.h
        };
        (i, y)
    }
}

/// Kuhn simplices of the unit cell as vertex bit masks (bit `d` set means
/// offset 1 along axis `d`), positively oriented.
fn kuhn_types(dim: usize) -> Vec<Vec<usize>> {
    if dim == 2 {
        return vec![vec![0, 1, 3], vec![0, 3, 2]];
    }
    let perms = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    perms
        .iter()
        .map(|p| {
            let mut v = vec![0usize];
            let mut cur = 0;
            for &a in p {
                cur |= 1 << a;
                v.push(cur);
            }
            if unit_det(&v, 3) < 0.0 {
                v.swap(2, 3);
            }
            v
        })
        .collect()
}

fn bits_point(bits: usize) -> Point {
    [
        (bits & 1) as f64,
        ((bits >> 1) & 1) as f64,
        ((bits >> 2) & 1) as f64,
    ]
}

fn unit_det(v: &[usize], dim: usize) -> f64 {
    let p: Vec<Point> = v.iter().map(|&b| bits_point(b)).collect();
    let e: Vec<Point> = (1..=dim)
        .map(|k| crate::geometry::sub(&p[k], &p[0]))
        .collect();
    det(&e, dim)
}

fn det(e: &[Point], dim: usize) -> f64 {
    if dim == 2 {
        e[0][0] * e[1][1] - e[0][1] * e[1][0]
    } else {
        e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
            - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
            + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
    }
}

/// Gradients of the barycentric coordinates of a unit Kuhn simplex.
fn unit_gradients(v: &[usize], dim: usize) -> [Point; 4] {
    let p: Vec<Point> = v.iter().map(|&b| bits_point(b)).collect();
    let e: Vec<Point> = (1..=dim)
        .map(|k| crate::geometry::sub(&p[k], &p[0]))
        .collect();
    let d = det(&e, dim);
    let mut g = [[0.0; 3]; 4];
    if dim == 2 {
        // rows of E^{-T} where E has the edges as columns
        g[1] = [e[1][1] / d, -e[1][0] / d, 0.0];
        g[2] = [-e[0][1] / d, e[0][0] / d, 0.0];
    } else {
        let c = |a: &Point, b: &Point| {
            [
                a[1] * b[2] - a[2] * b[1],
                a[2] * b[0] - a[0] * b[2],
                a[0] * b[1] - a[1] * b[0],
            ]
        };
        g[1] = crate::geometry::scale(&c(&e[1], &e[2]), 1.0 / d);
        g[2] = crate::geometry::scale(&c(&e[2], &e[0]), 1.0 / d);
        g[3] = crate::geometry::scale(&c(&e[0], &e[1]), 1.0 / d);
    }
    let mut s = [0.0; 3];
    for k in 1..=dim {
        for a in 0..3 {
            s[a] -= g[k][a];
        }
    }
    g[0] = s;
    g
}

/// Which side of its facet plane an element touching a crack face lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CrackSide {
    Below,
    Above,
}

/// An element face lying on a crack, seen from one side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrackFace {
    pub element: usize,
    /// The face opposite this local vertex.
    pub local_face: usize,
    /// Index of the snapped facet the face lies on.
    pub facet: usize,
    pub side: CrackSide,
}

struct UnionFind(Vec<u32>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n as u32).collect())
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.0[x as usize] != x {
            let p = self.0[self.0[x as usize] as usize];
            self.0[x as usize] = p;
            x = p;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.0[hi as usize] = lo;
        }
    }
}

/// A conforming P1 mesh of `Ω \ K` with nodes duplicated across the crack.
#[derive(Debug, Clone)]
pub struct CrackedMesh {
    grid: GridSpec,
    nodes: Vec<Point>,
    node_vertex: Vec<u32>,
    /// Flat connectivity, `dim + 1` nodes per element.
    elements: Vec<u32>,
    /// `cell * simplices_per_cell + kuhn_type` for each element.
    slots: Vec<u32>,
    crack_faces: Vec<CrackFace>,
    twin: Vec<Option<u32>>,
    geometry: CompactSet,
    voids: Vec<Aabb>,
    snapping: Vec<SnapRecord>,
    gradients: Vec<[Point; 4]>,
}

/// Meshes `Ω \ K` for a set `K` made of facets. Each facet is snapped to the
/// nearest grid planes first (the displacements are recorded).
pub fn build_cracked_mesh(grid: &GridSpec, k: &CompactSet) -> Result<CrackedMesh> {
    if let Some(b) = k.boxes().iter().find(|b| b.is_solid(k.dim())) {
        return Err(Error::Unsupported(format!(
            "box {:?}..{:?} has positive volume; fractures must be (N-1)-dimensional",
            &b.lo[..k.dim()],
            &b.hi[..k.dim()]
        )));
    }
    build(grid, k)
}

/// Like [`build_cracked_mesh`], but boxes of positive volume are removed from
/// the domain as voids: every cell whose centre lies in a (snapped) solid box
/// is dropped.
pub fn build_mesh_with_voids(grid: &GridSpec, k: &CompactSet) -> Result<CrackedMesh> {
    build(grid, k)
}

fn build(grid: &GridSpec, k: &CompactSet) -> Result<CrackedMesh> {
    let dim = grid.dim();
    if k.ambient() != grid.ambient() {
        return Err(Error::Domain(
            "the set and the grid live in different ambient boxes".into(),
        ));
    }
    let nv = grid.num_vertices() as u128;
    if nv.pow(dim as u32) >= u64::MAX as u128 {
        return Err(Error::Unsupported("grid too large".into()));
    }
    let snapped = snap::snap_set(grid, k)?;
    let facets: Vec<snap::GridFacet> = snapped
        .iter()
        .filter_map(|s| s.grid_facet.clone())
        .collect();
    let voids: Vec<Aabb> = snapped
        .iter()
        .filter(|s| s.grid_facet.is_none())
        .map(|s| s.record.snapped)
        .collect();
    let mut geometry = CompactSet::empty(*grid.ambient());
    for s in &snapped {
        geometry.push(s.record.snapped)?;
    }

    let types = kuhn_types(dim);
    let nt = types.len();
    let npe = dim + 1;
    let cell_vertex = |c: usize, bits: usize| {
        let mut ijk = grid.cell_ijk(c);
        for (d, x) in ijk.iter_mut().enumerate().take(dim) {
            *x += (bits >> d) & 1;
        }
        grid.vertex_index(ijk) as u32
    };

    // corners: element-local vertices, carrying their grid vertex
    let mut corner_vertex: Vec<u32> = Vec::new();
    let mut slots: Vec<u32> = Vec::new();
    for c in 0..grid.num_cells() {
        let centre = grid.cell_center(c);
        if voids.iter().any(|v| v.contains(&centre, 0.0)) {
            continue;
        }
        for (t, ty) in types.iter().enumerate() {
            slots.push((c * nt + t) as u32);
            corner_vertex.extend(ty.iter().map(|&b| cell_vertex(c, b)));
        }
    }
    let ne = slots.len();

    // faces: sort by the (sorted) grid vertices they span
    let mut faces: Vec<(u64, u32)> = Vec::with_capacity(ne * npe);
    for e in 0..ne {
        let vs = &corner_vertex[e * npe..(e + 1) * npe];
        for f in 0..npe {
            let mut key = [0u64; 3];
            for (slot, j) in key.iter_mut().zip((0..npe).filter(|&j| j != f)) {
                *slot = vs[j] as u64;
            }
            let key = &mut key[..dim];
            key.sort_unstable();
            let packed = key.iter().fold(0u64, |acc, &v| acc * nv as u64 + v);
            faces.push((packed, (e * npe + f) as u32));
        }
    }
    faces.sort_unstable();

    let mut uf = UnionFind::new(ne * npe);
    let mut crack_faces = Vec::new();
    let mut i = 0;
    while i < faces.len() {
        if i + 1 < faces.len() && faces[i].0 == faces[i + 1].0 {
            let (a, b) = (faces[i].1 as usize, faces[i + 1].1 as usize);
            let (ea, fa, eb, fb) = (a / npe, a % npe, b / npe, b % npe);
            let va = &corner_vertex[ea * npe..(ea + 1) * npe];
            let vb = &corner_vertex[eb * npe..(eb + 1) * npe];
            let mut face_vertices = [0u32; 3];
            for (slot, j) in face_vertices.iter_mut().zip((0..npe).filter(|&j| j != fa)) {
                *slot = va[j];
            }
            let face_vertices = &face_vertices[..dim];
            match snap::facet_of_face(grid, &facets, face_vertices) {
                Some(fi) => {
                    let axis = facets[fi].axis;
                    let plane = grid.vertex_ijk(face_vertices[0] as usize)[axis];
                    for (e, f, vs) in [(ea, fa, va), (eb, fb, vb)] {
                        let opposite = grid.vertex_ijk(vs[f] as usize)[axis];
                        crack_faces.push(CrackFace {
                            element: e,
                            local_face: f,
                            facet: fi,
                            side: if opposite < plane {
                                CrackSide::Below
                            } else {
                                CrackSide::Above
                            },
                        });
                    }
                }
                None => {
                    for (ja, &v) in va.iter().enumerate() {
                        if ja == fa {
                            continue;
                        }
                        let jb = vb.iter().position(|&w| w == v).expect("shared face vertex");
                        uf.union((ea * npe + ja) as u32, (eb * npe + jb) as u32);
                    }
                }
            }
            i += 2;
        } else {
            i += 1;
        }
    }
    crack_faces.sort_by_key(|c| (c.element, c.local_face));

    // one node per (grid vertex, corner class), ordered by grid vertex
    let mut classes: Vec<(u32, u32)> = (0..ne * npe)
        .map(|c| (corner_vertex[c], uf.find(c as u32)))
        .collect();
    classes.sort_unstable();
    classes.dedup();
    let mut root_node = std::collections::HashMap::with_capacity(classes.len());
    for (id, &(_, root)) in classes.iter().enumerate() {
        root_node.insert(root, id as u32);
    }
    let elements: Vec<u32> = (0..ne * npe)
        .map(|c| root_node[&uf.find(c as u32)])
        .collect();
    let node_vertex: Vec<u32> = classes.iter().map(|&(v, _)| v).collect();
    let nodes: Vec<Point> = node_vertex
        .iter()
        .map(|&v| grid.vertex_point(v as usize))
        .collect();

    let mut twin = vec![None; nodes.len()];
    let mut s = 0;
    while s < node_vertex.len() {
        let mut t = s + 1;
        while t < node_vertex.len() && node_vertex[t] == node_vertex[s] {
            t += 1;
        }
        if t - s > 1 {
            for j in s..t {
                let next = if j + 1 == t { s } else { j + 1 };
                twin[j] = Some(next as u32);
            }
        }
        s = t;
    }

    let gradients = types
        .iter()
        .map(|ty| {
            let mut g = unit_gradients(ty, dim);
            for row in g.iter_mut() {
                *row = crate::geometry::scale(row, 1.0 / grid.h());
            }
            g
        })
        .collect();

    Ok(CrackedMesh {
        grid: *grid,
        nodes,
        node_vertex,
        elements,
        slots,
        crack_faces,
        twin,
        geometry,
        voids,
        snapping: snapped.into_iter().map(|s| s.record).collect(),
        gradients,
    })
}

impl CrackedMesh {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.slots.len()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &Point {
        &self.nodes[i]
    }

    /// Grid vertex a node sits on.
    pub fn node_vertex(&self, i: usize) -> usize {
        self.node_vertex[i] as usize
    }

    pub fn element(&self, e: usize) -> &[u32] {
        let npe = self.dim() + 1;
        &self.elements[e * npe..(e + 1) * npe]
    }

    pub fn elements(&self) -> impl Iterator<Item = &[u32]> {
        self.elements.chunks_exact(self.dim() + 1)
    }

    /// Position of the element in the full grid: `cell * simplices_per_cell +
    /// kuhn_type`. Equal slots in two meshes over the same grid cover the
    /// same simplex.
    pub fn element_slot(&self, e: usize) -> usize {
        self.slots[e] as usize
    }

    /// Volume (area) of every element, `h^N / N!`.
    pub fn element_volume(&self) -> f64 {
        let h = self.grid.h();
        if self.dim() == 2 {
            h * h / 2.0
        } else {
            h * h * h / 6.0
        }
    }

    /// Signed volume computed from the node coordinates.
    pub fn signed_volume(&self, e: usize) -> f64 {
        let dim = self.dim();
        let el = self.element(e);
        let p0 = self.nodes[el[0] as usize];
        let edges: Vec<Point> = el[1..]
            .iter()
            .map(|&n| crate::geometry::sub(&self.nodes[n as usize], &p0))
            .collect();
        let f = if dim == 2 { 2.0 } else { 6.0 };
        det(&edges, dim) / f
    }

    /// Gradients of the `N + 1` hat functions on element `e`.
    pub fn gradients(&self, e: usize) -> &[Point] {
        let t = self.element_slot(e) % self.grid.simplices_per_cell();
        &self.gradients[t][..self.dim() + 1]
    }

    pub fn centroid(&self, e: usize) -> Point {
        let el = self.element(e);
        let mut c = [0.0; 3];
        for &n in el {
            c = crate::geometry::add(&c, &self.nodes[n as usize]);
        }
        crate::geometry::scale(&c, 1.0 / el.len() as f64)
    }

    pub fn crack_faces(&self) -> &[CrackFace] {
        &self.crack_faces
    }

    /// Another node at the same position on the other side of the crack.
    /// Where more than two copies meet, the copies form a cycle.
    pub fn twin(&self, i: usize) -> Option<usize> {
        self.twin[i].map(|t| t as usize)
    }

    pub fn twins(&self) -> Vec<(usize, usize)> {
        (0..self.num_nodes())
            .filter_map(|i| self.twin(i).map(|t| (i, t)))
            .collect()
    }

    pub fn duplicated_nodes(&self) -> usize {
        self.twin.iter().filter(|t| t.is_some()).count()
    }

    /// The snapped set actually meshed.
    pub fn geometry_source(&self) -> &CompactSet {
        &self.geometry
    }

    pub fn voids(&self) -> &[Aabb] {
        &self.voids
    }

    pub fn snapping(&self) -> &[SnapRecord] {
        &self.snapping
    }

    pub fn max_snap_displacement(&self) -> f64 {
        self.snapping
            .iter()
            .map(|s| s.displacement)
            .fold(0.0, f64::max)
    }

    /// Connected components of the element graph (elements sharing a node).
    pub fn components(&self) -> usize {
        let mut uf = UnionFind::new(self.num_nodes());
        for el in self.elements() {
            for w in el.windows(2) {
                uf.union(w[0], w[1]);
            }
        }
        let mut used = vec![false; self.num_nodes()];
        for &n in &self.elements {
            used[n as usize] = true;
        }
        (0..self.num_nodes() as u32)
            .filter(|&n| used[n as usize] && uf.find(n) == n)
            .count()
    }

    /// Node ids grouped by grid vertex (`None` for vertices with no node).
    pub fn nodes_by_vertex(&self) -> Vec<Vec<u32>> {
        let mut out = vec![Vec::new(); self.grid.num_vertices()];
        for (i, &v) in self.node_vertex.iter().enumerate() {
            out[v as usize].push(i as u32);
        }
        out
    }
}

/// Total element volume, summed with compensation. Every element volume is
/// `h^N` times a unit determinant, so the sum is formed on the determinants
/// and divided by `N!` once.
pub fn mesh_measure(mesh: &CrackedMesh) -> f64 {
    let dim = mesh.dim();
    let f = if dim == 2 { 2.0 } else { 6.0 };
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for e in 0..mesh.num_elements() {
        let x = mesh.signed_volume(e).abs() * f;
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    (sum + comp) / f
}
