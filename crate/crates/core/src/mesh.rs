//! 2D simplicial meshes: canonical generators for the three study domains,
//! uniform red refinement, topology queries, and the text interchange format.

use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// Canonical computational domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `[0,1]²`, split along one diagonal per grid cell.
    UnitSquare,
    /// `[0,1]² \ (½,1]×(½,1]`.
    LShape,
    /// `[0,3]² \ (1,2)²`, an annulus-like domain with first Betti number 1.
    SquareWithHole,
    /// Mesh read from a file; no grid structure assumed.
    External,
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Domain::UnitSquare => "unit_square",
            Domain::LShape => "lshape",
            Domain::SquareWithHole => "square_with_hole",
            Domain::External => "external",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Domain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit_square" | "square" => Ok(Domain::UnitSquare),
            "lshape" => Ok(Domain::LShape),
            "square_with_hole" | "holed" => Ok(Domain::SquareWithHole),
            other => Err(Error::Config(format!("unknown domain `{other}`"))),
        }
    }
}

/// Grid resolution used for a refinement level of each domain; mesh size
/// halves per level.
pub fn resolution_for_level(domain: Domain, level: usize) -> Result<usize> {
    if level == 0 {
        return Err(Error::Config("levels start at 1".into()));
    }
    Ok(match domain {
        Domain::UnitSquare | Domain::LShape => 1 << level,
        Domain::SquareWithHole => 3 << (level - 1),
        Domain::External => return Err(Error::Config("external meshes have no levels".into())),
    })
}

/// Conforming oriented triangulation of a planar domain.
#[derive(Debug, Clone)]
pub struct Mesh2D {
    pub domain: Domain,
    /// Grid subdivisions per side for generated meshes (0 for external).
    pub resolution: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    tri_edges: Vec<[(usize, i8); 3]>,
    edge_tris: Vec<(usize, Option<usize>)>,
    boundary_edge: Vec<bool>,
    boundary_vertex: Vec<bool>,
    areas: Vec<f64>,
    h_max: f64,
}

impl Mesh2D {
    /// Build the connectivity tables from vertices and CCW triangles.
    pub fn from_cells(
        domain: Domain,
        resolution: usize,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Mesh2D> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        let mut edge_set: BTreeMap<[usize; 2], ()> = BTreeMap::new();
        for t in &triangles {
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                if a >= vertices.len() || b >= vertices.len() || a == b {
                    return Err(Error::InvalidMesh("bad triangle vertex indices".into()));
                }
                edge_set.insert([a.min(b), a.max(b)], ());
            }
        }
        // lexicographic edge numbering for a deterministic layout
        let edges: Vec<[usize; 2]> = edge_set.into_keys().collect();
        let edge_ids: BTreeMap<[usize; 2], usize> =
            edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();

        let mut tri_edges = Vec::with_capacity(triangles.len());
        let mut edge_tris: Vec<(usize, Option<usize>)> = vec![(usize::MAX, None); edges.len()];
        let mut areas = Vec::with_capacity(triangles.len());
        let mut h_max = 0.0f64;
        for (ti, t) in triangles.iter().enumerate() {
            let p = [vertices[t[0]], vertices[t[1]], vertices[t[2]]];
            let area = 0.5
                * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                    - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
            if area <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {ti} is not counterclockwise (area {area:.3e})"
                )));
            }
            areas.push(area);
            let mut local = [(0usize, 0i8); 3];
            for e in 0..3 {
                let (a, b) = (t[e], t[(e + 1) % 3]);
                let d = ((p[e][0] - p[(e + 1) % 3][0]).powi(2)
                    + (p[e][1] - p[(e + 1) % 3][1]).powi(2))
                .sqrt();
                h_max = h_max.max(d);
                let id = edge_ids[&[a.min(b), a.max(b)]];
                local[e] = (id, if a < b { 1 } else { -1 });
                let slot = &mut edge_tris[id];
                if slot.0 == usize::MAX {
                    slot.0 = ti;
                } else if slot.1.is_none() {
                    slot.1 = Some(ti);
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "edge {id} shared by more than two triangles"
                    )));
                }
            }
            tri_edges.push(local);
        }
        let boundary_edge: Vec<bool> = edge_tris.iter().map(|(_, b)| b.is_none()).collect();
        let mut boundary_vertex = vec![false; vertices.len()];
        for (e, &is_b) in boundary_edge.iter().enumerate() {
            if is_b {
                boundary_vertex[edges[e][0]] = true;
                boundary_vertex[edges[e][1]] = true;
            }
        }
        Ok(Mesh2D {
            domain,
            resolution,
            vertices,
            triangles,
            edges,
            tri_edges,
            edge_tris,
            boundary_edge,
            boundary_vertex,
            areas,
            h_max,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertex(&self, a: usize) -> [f64; 2] {
        self.vertices[a]
    }

    pub fn triangle(&self, t: usize) -> [usize; 3] {
        self.triangles[t]
    }

    pub fn triangle_corners(&self, t: usize) -> [[f64; 2]; 3] {
        let tri = self.triangles[t];
        [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ]
    }

    /// Edge endpoints, oriented low vertex index → high vertex index.
    pub fn edge(&self, e: usize) -> [usize; 2] {
        self.edges[e]
    }

    /// Edges of a triangle in local order `(v0,v1), (v1,v2), (v2,v0)`, each
    /// with the incidence sign relative to the global edge orientation.
    pub fn triangle_edges(&self, t: usize) -> [(usize, i8); 3] {
        self.tri_edges[t]
    }

    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        self.edge_tris[e]
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary_edge[e]
    }

    pub fn is_boundary_vertex(&self, a: usize) -> bool {
        self.boundary_vertex[a]
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn total_area(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Largest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.h_max
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_edges()).filter(|&e| self.boundary_edge[e])
    }

    pub fn num_interior_edges(&self) -> usize {
        self.boundary_edge.iter().filter(|b| !**b).count()
    }

    pub fn euler_characteristic(&self) -> isize {
        self.num_vertices() as isize - self.num_edges() as isize + self.num_triangles() as isize
    }

    /// First Betti number `1 − χ` of a connected mesh.
    pub fn betti1(&self) -> Result<usize> {
        if !self.is_connected() {
            return Err(Error::InvalidMesh("mesh is disconnected".into()));
        }
        let chi = self.euler_characteristic();
        if chi > 1 {
            return Err(Error::InvalidMesh(format!("unexpected χ = {chi}")));
        }
        Ok((1 - chi) as usize)
    }

    fn is_connected(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.num_vertices()).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (ra, rb) = (find(&mut parent, e[0]), find(&mut parent, e[1]));
            if ra != rb {
                parent[ra] = rb;
            }
        }
        let root = find(&mut parent, 0);
        (0..self.num_vertices()).all(|v| find(&mut parent, v) == root)
    }

    /// Triangles incident to a vertex, ordered counterclockwise. Interior
    /// patches are cyclic and rotated to start at the lowest triangle index;
    /// boundary patches run from one boundary side to the other.
    pub fn vertex_patch(&self, a: usize) -> Vec<usize> {
        let incident: Vec<usize> = (0..self.num_triangles())
            .filter(|&t| self.triangles[t].contains(&a))
            .collect();
        if incident.len() <= 1 {
            return incident;
        }
        // within triangle (a, p, q) in CCW vertex order, the CCW-next
        // neighbor around `a` lies across edge (a, q)
        let exits: BTreeMap<usize, (usize, usize)> = incident
            .iter()
            .map(|&t| {
                let tri = self.triangles[t];
                let pos = tri.iter().position(|&v| v == a).unwrap();
                (t, (tri[(pos + 1) % 3], tri[(pos + 2) % 3]))
            })
            .collect();
        let neighbor_across = |t: usize, other: usize| -> Option<usize> {
            let key = [a.min(other), a.max(other)];
            let e = self.edges.binary_search(&key).ok()?;
            let (t0, t1) = self.edge_tris[e];
            if t0 == t {
                t1
            } else {
                Some(t0)
            }
        };
        // boundary patches start at the cell whose clockwise-side edge
        // (a, p) is a boundary edge
        let start = incident
            .iter()
            .find(|&&t| {
                let (p, _) = exits[&t];
                neighbor_across(t, p).is_none()
            })
            .copied();
        let interior = start.is_none();
        let mut order = Vec::with_capacity(incident.len());
        let mut current = start.unwrap_or(incident[0]);
        loop {
            order.push(current);
            let (_, q) = exits[&current];
            match neighbor_across(current, q) {
                Some(next) if next != order[0] => current = next,
                _ => break,
            }
        }
        debug_assert_eq!(order.len(), incident.len(), "patch walk must visit all cells");
        if interior {
            let min_pos = order
                .iter()
                .enumerate()
                .min_by_key(|(_, &t)| t)
                .map(|(i, _)| i)
                .unwrap();
            order.rotate_left(min_pos);
        }
        order
    }

    /// Structural validation: orientation, conformity, closed boundary
    /// cycles, and the assumption that every boundary vertex has an interior
    /// neighbor (for meshes that have interior vertices at all).
    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.num_vertices()];
        for t in &self.triangles {
            for &v in t {
                seen[v] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidMesh("unreferenced (hanging) vertex".into()));
        }
        let mut bdeg = vec![0usize; self.num_vertices()];
        for e in 0..self.num_edges() {
            if self.boundary_edge[e] {
                bdeg[self.edges[e][0]] += 1;
                bdeg[self.edges[e][1]] += 1;
            }
        }
        for v in 0..self.num_vertices() {
            if self.boundary_vertex[v] && bdeg[v] != 2 {
                return Err(Error::InvalidMesh(format!(
                    "boundary vertex {v} has {} boundary edges",
                    bdeg[v]
                )));
            }
        }
        let has_interior = (0..self.num_vertices()).any(|v| !self.boundary_vertex[v]);
        if has_interior {
            for v in 0..self.num_vertices() {
                if !self.boundary_vertex[v] {
                    continue;
                }
                let linked = self.edges.iter().any(|e| {
                    (e[0] == v && !self.boundary_vertex[e[1]])
                        || (e[1] == v && !self.boundary_vertex[e[0]])
                });
                if !linked {
                    return Err(Error::InvalidMesh(format!(
                        "boundary vertex {v} has no interior neighbor"
                    )));
                }
            }
        }
        // patch walks must visit every incident cell exactly once
        for a in 0..self.num_vertices() {
            let patch = self.vertex_patch(a);
            let count = (0..self.num_triangles())
                .filter(|&t| self.triangles[t].contains(&a))
                .count();
            if patch.len() != count {
                return Err(Error::InvalidMesh(format!(
                    "vertex {a} has a non-manifold patch"
                )));
            }
        }
        Ok(())
    }

    /// Smallest corner angle over all triangles, in degrees.
    pub fn min_angle_deg(&self) -> f64 {
        let mut best = 180.0f64;
        for t in 0..self.num_triangles() {
            let p = self.triangle_corners(t);
            for i in 0..3 {
                let u = [p[(i + 1) % 3][0] - p[i][0], p[(i + 1) % 3][1] - p[i][1]];
                let v = [p[(i + 2) % 3][0] - p[i][0], p[(i + 2) % 3][1] - p[i][1]];
                let dot = u[0] * v[0] + u[1] * v[1];
                let nu = (u[0] * u[0] + u[1] * u[1]).sqrt();
                let nv = (v[0] * v[0] + v[1] * v[1]).sqrt();
                best = best.min((dot / (nu * nv)).clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        best
    }

    /// Cell containing a point, for generated (structured) meshes.
    pub fn locate_cell(&self, p: [f64; 2]) -> Option<usize> {
        let (m, side) = match self.domain {
            Domain::UnitSquare | Domain::LShape => (self.resolution, 1.0),
            Domain::SquareWithHole => (self.resolution, 3.0),
            Domain::External => return None,
        };
        let h = side / m as f64;
        let i = ((p[0] / h).floor() as isize).clamp(0, m as isize - 1) as usize;
        let j = ((p[1] / h).floor() as isize).clamp(0, m as isize - 1) as usize;
        let base = self.quad_base_index(i, j)?;
        let xi = p[0] / h - i as f64;
        let eta = p[1] / h - j as f64;
        if flipped_corner_cell(m, i, j) {
            // children (a,b,d) below and (b,c,d) above the b→d diagonal
            Some(if eta <= 1.0 - xi { base } else { base + 1 })
        } else {
            // lower child if below the (i,j)→(i+1,j+1) diagonal
            Some(if eta <= xi { base } else { base + 1 })
        }
    }

    fn quad_base_index(&self, i: usize, j: usize) -> Option<usize> {
        let m = self.resolution;
        if !cell_in_domain(self.domain, m, i, j) {
            return None;
        }
        let mut count = 0usize;
        for jj in 0..m {
            for ii in 0..m {
                if !cell_in_domain(self.domain, m, ii, jj) {
                    continue;
                }
                if (ii, jj) == (i, j) {
                    return Some(count);
                }
                count += 2;
            }
        }
        None
    }
}

fn cell_in_domain(domain: Domain, m: usize, i: usize, j: usize) -> bool {
    match domain {
        Domain::UnitSquare => true,
        Domain::LShape => !(i >= m / 2 && j >= m / 2),
        Domain::SquareWithHole => {
            let lo = m / 3;
            let hi = 2 * m / 3;
            !(i >= lo && i < hi && j >= lo && j < hi)
        }
        Domain::External => true,
    }
}

/// Generate a structured mesh of one of the study domains. `m` counts grid
/// subdivisions per side: the unit square and the L-shape live on `[0,1]`
/// (`m` even for the L-shape), the holed square on `[0,3]` (`m` divisible
/// by 3).
pub fn generate(domain: Domain, m: usize) -> Result<Mesh2D> {
    match domain {
        Domain::UnitSquare => {
            if m < 2 {
                return Err(Error::Config("unit_square needs m ≥ 2".into()));
            }
        }
        Domain::LShape => {
            if m < 2 || m % 2 != 0 {
                return Err(Error::Config("lshape needs even m ≥ 2".into()));
            }
        }
        Domain::SquareWithHole => {
            if m < 3 || m % 3 != 0 {
                return Err(Error::Config(
                    "square_with_hole needs m ≥ 3 divisible by 3".into(),
                ));
            }
        }
        Domain::External => return Err(Error::Config("cannot generate external domain".into())),
    }
    let side = match domain {
        Domain::SquareWithHole => 3.0,
        _ => 1.0,
    };
    let h = side / m as f64;
    let grid_id = |i: usize, j: usize| j * (m + 1) + i;
    let mut used = vec![false; (m + 1) * (m + 1)];
    let mut cells: Vec<([usize; 4], (usize, usize))> = Vec::new();
    for j in 0..m {
        for i in 0..m {
            if !cell_in_domain(domain, m, i, j) {
                continue;
            }
            let q = [
                grid_id(i, j),
                grid_id(i + 1, j),
                grid_id(i + 1, j + 1),
                grid_id(i, j + 1),
            ];
            for &v in &q {
                used[v] = true;
            }
            cells.push((q, (i, j)));
        }
    }
    let mut remap = vec![usize::MAX; (m + 1) * (m + 1)];
    let mut vertices = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            let g = grid_id(i, j);
            if used[g] {
                remap[g] = vertices.len();
                vertices.push([i as f64 * h, j as f64 * h]);
            }
        }
    }
    let mut triangles = Vec::with_capacity(cells.len() * 2);
    for (q, (i, j)) in cells {
        let [a, b, c, d] = q.map(|g| remap[g]);
        if flipped_corner_cell(m, i, j) {
            // the corners (right-bottom and left-top) would otherwise have
            // no interior neighbor; their cells use the other diagonal
            triangles.push([a, b, d]);
            triangles.push([b, c, d]);
        } else {
            // split along the a→c diagonal, both children counterclockwise
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mesh = Mesh2D::from_cells(domain, m, vertices, triangles)?;
    mesh.validate()?;
    Ok(mesh)
}

/// Cells whose diagonal is flipped so that every domain corner vertex lies
/// on a diagonal (and hence touches an interior vertex where one exists).
fn flipped_corner_cell(m: usize, i: usize, j: usize) -> bool {
    (i == m - 1 && j == 0) || (i == 0 && j == m - 1)
}

/// Uniform red refinement: each triangle splits into four similar children;
/// the mesh size halves exactly.
pub fn refine(mesh: &Mesh2D) -> Mesh2D {
    let mut vertices = mesh.vertices.clone();
    let mut mid = vec![0usize; mesh.num_edges()];
    for e in 0..mesh.num_edges() {
        let [a, b] = mesh.edge(e);
        let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
        mid[e] = vertices.len();
        vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle(t);
        let es = mesh.triangle_edges(t);
        let (mab, mbc, mca) = (mid[es[0].0], mid[es[1].0], mid[es[2].0]);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
    }
    Mesh2D::from_cells(mesh.domain, mesh.resolution * 2, vertices, triangles)
        .expect("red refinement preserves validity")
}

/// Nested family of meshes at levels `first..=last`.
pub struct MeshFamily {
    pub meshes: Vec<Mesh2D>,
    pub levels: Vec<usize>,
}

impl MeshFamily {
    pub fn generate(domain: Domain, first: usize, last: usize) -> Result<MeshFamily> {
        if first == 0 || last < first {
            return Err(Error::Config("invalid level range".into()));
        }
        let mut meshes = Vec::new();
        let mut levels = Vec::new();
        for level in first..=last {
            meshes.push(generate(domain, resolution_for_level(domain, level)?)?);
            levels.push(level);
        }
        Ok(MeshFamily { meshes, levels })
    }
}

/// Write the mesh in the text interchange format.
pub fn write_text(mesh: &Mesh2D) -> String {
    let mut out = String::new();
    out.push_str(&format!("vertices {}\n", mesh.num_vertices()));
    for v in &mesh.vertices {
        out.push_str(&format!("{} {}\n", v[0], v[1]));
    }
    out.push_str(&format!("triangles {}\n", mesh.num_triangles()));
    for t in &mesh.triangles {
        out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    let boundary: Vec<usize> = mesh.boundary_edges().collect();
    out.push_str(&format!("boundary {}\n", boundary.len()));
    for e in boundary {
        let [a, b] = mesh.edge(e);
        out.push_str(&format!("{a} {b}\n"));
    }
    out
}

/// Parse the text interchange format; the boundary section is validated
/// against the connectivity recomputed from the triangles.
pub fn read_text(text: &str) -> Result<Mesh2D> {
    let mut lines = text.lines();
    let bad = |msg: &str| Error::InvalidMesh(format!("mesh file: {msg}"));
    let header = |line: Option<&str>, word: &str| -> Result<usize> {
        let line = line.ok_or_else(|| bad("unexpected end of file"))?;
        let mut it = line.split_whitespace();
        if it.next() != Some(word) {
            return Err(bad(&format!("expected `{word} N`")));
        }
        it.next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad(&format!("bad `{word}` count")))
    };
    let nv = header(lines.next(), "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let line = lines.next().ok_or_else(|| bad("missing vertex line"))?;
        let mut it = line.split_whitespace();
        let x: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad vertex coordinate"))?;
        let y: f64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad vertex coordinate"))?;
        vertices.push([x, y]);
    }
    let nt = header(lines.next(), "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let line = lines.next().ok_or_else(|| bad("missing triangle line"))?;
        let mut it = line.split_whitespace();
        let mut t = [0usize; 3];
        for v in &mut t {
            *v = it
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("bad triangle index"))?;
        }
        triangles.push(t);
    }
    let nb = header(lines.next(), "boundary")?;
    let mut listed = Vec::with_capacity(nb);
    for _ in 0..nb {
        let line = lines.next().ok_or_else(|| bad("missing boundary line"))?;
        let mut it = line.split_whitespace();
        let a: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad boundary index"))?;
        let b: usize = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad boundary index"))?;
        listed.push([a.min(b), a.max(b)]);
    }
    let mesh = Mesh2D::from_cells(Domain::External, 0, vertices, triangles)?;
    let mut actual: Vec<[usize; 2]> = mesh.boundary_edges().map(|e| mesh.edge(e)).collect();
    actual.sort_unstable();
    listed.sort_unstable();
    if actual != listed {
        return Err(bad("boundary section does not match triangle connectivity"));
    }
    Ok(mesh)
}
