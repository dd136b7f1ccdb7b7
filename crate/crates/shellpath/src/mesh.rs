//! Quadrilateral control grids for subdivision-surface shells.
//!
//! A [`ControlMesh`] owns the control points and the quad connectivity plus
//! derived topology tables (edges, adjacency, valences, boundary flags).
//! It stays immutable after construction so element loops can query it
//! concurrently.
//!
//! Patches next to a mesh boundary are completed with ghost points so that
//! the limit surface interpolates the boundary spline curve. Two completion
//! rules exist: plain reflection (`2 b - i`, a natural spline end) and mirror
//! reflection across an axis-aligned symmetry plane.

use nalgebra::Vector3;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

pub type Vec3 = Vector3<f64>;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("face {face} is not a quad (has {count} vertices)")]
    NonQuadFace { face: usize, count: usize },
    #[error("face {face} references vertex {vertex} but the mesh has only {n_vertices} vertices")]
    DanglingVertexIndex {
        face: usize,
        vertex: usize,
        n_vertices: usize,
    },
    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },
    #[error("non-manifold edge ({a}, {b}) shared by more than two faces")]
    NonManifoldEdge { a: usize, b: usize },
    #[error("inconsistent orientation at edge ({a}, {b}): both adjacent faces traverse it in the same direction")]
    InconsistentOrientation { a: usize, b: usize },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("face {face} touches {count} extraordinary vertices; subdivide the mesh once and retry")]
    SubdivideRequired { face: usize, count: usize },
    #[error("face {face} has an extraordinary vertex on or next to the boundary, which is unsupported")]
    IrregularBoundary { face: usize },
    #[error("no ghost rule matches boundary edge ({a}, {b}); mirror planes must contain both endpoints")]
    NoGhostRule { a: usize, b: usize },
    #[error("face index {face} out of range ({n_faces} faces)")]
    NoSuchFace { face: usize, n_faces: usize },
    #[error("mesh has boundary edges; operation requires a closed mesh")]
    NotClosed,
}

/// Completion rule for ghost points beyond a boundary edge.
#[derive(Debug, Clone, PartialEq)]
pub enum GhostRule {
    /// `g = 2 b - i`: linear extrapolation, i.e. a natural spline end.
    /// The limit surface interpolates the boundary control curve with zero
    /// second derivative across it (simply-supported edges, free ends).
    Extrapolate,
    /// Mirror the interior point across an axis-aligned plane. Used for
    /// symmetry boundaries; the ghost copies the mirrored half of the model.
    MirrorPlane { axis: usize, offset: f64 },
}

/// Ghost policy of a whole mesh: either every boundary edge extrapolates, or
/// boundary edges are matched against a list of axis-aligned mirror planes.
#[derive(Debug, Clone, Default)]
pub enum GhostPolicy {
    #[default]
    Extrapolate,
    Mirror {
        planes: Vec<(usize, f64)>,
        tol: f64,
    },
}

/// Affine combination of real control points describing one ghost point.
///
/// Reference position: `sum_k diag(w_k) * P_k + offset`.
/// Displacement: `sum_k diag(w_k) * u_k` (the offset cancels).
/// Weights are per Cartesian component; mirror reflections about axis-aligned
/// planes only flip signs component-wise so this stays diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct GhostCombo {
    pub terms: Vec<(usize, [f64; 3])>,
    pub offset: Vec3,
}

impl GhostCombo {
    fn real(v: usize) -> Self {
        GhostCombo {
            terms: vec![(v, [1.0, 1.0, 1.0])],
            offset: Vec3::zeros(),
        }
    }

    fn compact(mut self) -> Self {
        self.terms.sort_by_key(|t| t.0);
        let mut out: Vec<(usize, [f64; 3])> = Vec::with_capacity(self.terms.len());
        for (v, w) in self.terms {
            match out.last_mut() {
                Some((lv, lw)) if *lv == v => {
                    for i in 0..3 {
                        lw[i] += w[i];
                    }
                }
                _ => out.push((v, w)),
            }
        }
        out.retain(|(_, w)| w.iter().any(|x| x.abs() > 1e-15));
        GhostCombo {
            terms: out,
            offset: self.offset,
        }
    }

    /// `2 b - i` against two combos.
    fn extrapolate(b: &GhostCombo, i: &GhostCombo) -> Self {
        let mut terms = Vec::with_capacity(b.terms.len() + i.terms.len());
        for (v, w) in &b.terms {
            terms.push((*v, [2.0 * w[0], 2.0 * w[1], 2.0 * w[2]]));
        }
        for (v, w) in &i.terms {
            terms.push((*v, [-w[0], -w[1], -w[2]]));
        }
        GhostCombo {
            terms,
            offset: 2.0 * b.offset - i.offset,
        }
        .compact()
    }

    /// Mirror a combo across the plane `x[axis] = offset`.
    fn mirror(inner: &GhostCombo, axis: usize, offset: f64) -> Self {
        let mut terms = inner.terms.clone();
        for (_, w) in &mut terms {
            w[axis] = -w[axis];
        }
        let mut off = inner.offset;
        off[axis] = 2.0 * offset - off[axis];
        GhostCombo {
            terms,
            offset: off,
        }
        .compact()
    }

    pub fn ref_position(&self, vertices: &[Vec3]) -> Vec3 {
        let mut p = self.offset;
        for (v, w) in &self.terms {
            let q = vertices[*v];
            p += Vec3::new(w[0] * q.x, w[1] * q.y, w[2] * q.z);
        }
        p
    }
}

/// One slot of a patch stencil: a real control point or a ghost completion.
#[derive(Debug, Clone, PartialEq)]
pub enum StencilSlot {
    Real(usize),
    Ghost(GhostCombo),
}

impl StencilSlot {
    pub fn ref_position(&self, vertices: &[Vec3]) -> Vec3 {
        match self {
            StencilSlot::Real(v) => vertices[*v],
            StencilSlot::Ghost(c) => c.ref_position(vertices),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchClass {
    Regular,
    Irregular { valence: usize },
}

/// Ordered control-point stencil of one element.
///
/// Regular patches hold 16 slots in row-major 4x4 order aligned with
/// (theta^1, theta^2); the element corners sit at lattice (1,1), (2,1),
/// (2,2), (1,2). Irregular patches hold `2n + 8` slots: the extraordinary
/// vertex, its one-ring counter-clockwise starting at the element corner
/// that follows it, and seven far points sweeping the remaining 3x3 block
/// (see `basis::irregular` for the exact lattice map).
#[derive(Debug, Clone)]
pub struct PatchStencil {
    pub face: usize,
    pub class: PatchClass,
    pub slots: Vec<StencilSlot>,
    /// Rotation applied to the face's vertex list so corner 0 is the
    /// extraordinary vertex (irregular patches only; 0 for regular).
    pub rotation: usize,
}

impl PatchStencil {
    pub fn real_nodes(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = Vec::new();
        for s in &self.slots {
            match s {
                StencilSlot::Real(v) => nodes.push(*v),
                StencilSlot::Ghost(c) => nodes.extend(c.terms.iter().map(|t| t.0)),
            }
        }
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct EdgeKey(usize, usize);

impl EdgeKey {
    fn new(a: usize, b: usize) -> Self {
        if a < b {
            EdgeKey(a, b)
        } else {
            EdgeKey(b, a)
        }
    }
}

#[derive(Debug, Clone)]
pub struct ControlMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 4]>,
    edges: Vec<(usize, usize)>,
    edge_faces: Vec<[Option<usize>; 2]>,
    edge_map: HashMap<EdgeKey, usize>,
    vertex_faces: Vec<Vec<usize>>,
    valence: Vec<usize>,
    boundary_vertex: Vec<bool>,
    n_boundary_edges: usize,
    ghost_policy: GhostPolicy,
}

impl fmt::Display for ControlMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vertices, {} faces, {} edges ({} boundary)",
            self.vertices.len(),
            self.faces.len(),
            self.edges.len(),
            self.n_boundary_edges
        )
    }
}

impl ControlMesh {
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 4]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (fid, f) in faces.iter().enumerate() {
            for &v in f {
                if v >= n {
                    return Err(MeshError::DanglingVertexIndex {
                        face: fid,
                        vertex: v,
                        n_vertices: n,
                    });
                }
            }
            for i in 0..4 {
                for j in i + 1..4 {
                    if f[i] == f[j] {
                        return Err(MeshError::RepeatedVertex {
                            face: fid,
                            vertex: f[i],
                        });
                    }
                }
            }
        }

        // Manifoldness first: an edge shared by three or more faces is a
        // deeper defect than a flipped face, so report it with priority.
        let mut undirected_count: HashMap<EdgeKey, usize> = HashMap::new();
        for f in &faces {
            for k in 0..4 {
                let key = EdgeKey::new(f[k], f[(k + 1) % 4]);
                let c = undirected_count.entry(key).or_insert(0);
                *c += 1;
                if *c > 2 {
                    return Err(MeshError::NonManifoldEdge { a: key.0, b: key.1 });
                }
            }
        }

        let mut edge_map: HashMap<EdgeKey, usize> = HashMap::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut edge_faces: Vec<[Option<usize>; 2]> = Vec::new();
        // Directed-edge bookkeeping for the orientation check.
        let mut directed_seen: HashMap<(usize, usize), usize> = HashMap::new();

        for (fid, f) in faces.iter().enumerate() {
            for k in 0..4 {
                let a = f[k];
                let b = f[(k + 1) % 4];
                if let Some(_prev) = directed_seen.insert((a, b), fid) {
                    return Err(MeshError::InconsistentOrientation { a, b });
                }
                let key = EdgeKey::new(a, b);
                let eid = *edge_map.entry(key).or_insert_with(|| {
                    edges.push((key.0, key.1));
                    edge_faces.push([None, None]);
                    edges.len() - 1
                });
                let ef = &mut edge_faces[eid];
                if ef[0].is_none() {
                    ef[0] = Some(fid);
                } else {
                    ef[1] = Some(fid);
                }
            }
        }

        let mut vertex_faces = vec![Vec::new(); n];
        for (fid, f) in faces.iter().enumerate() {
            for &v in f {
                vertex_faces[v].push(fid);
            }
        }

        let mut valence = vec![0usize; n];
        let mut boundary_vertex = vec![false; n];
        let mut n_boundary_edges = 0;
        for (eid, &(a, b)) in edges.iter().enumerate() {
            valence[a] += 1;
            valence[b] += 1;
            if edge_faces[eid][1].is_none() {
                boundary_vertex[a] = true;
                boundary_vertex[b] = true;
                n_boundary_edges += 1;
            }
        }

        Ok(ControlMesh {
            vertices,
            faces,
            edges,
            edge_faces,
            edge_map,
            vertex_faces,
            valence,
            boundary_vertex,
            n_boundary_edges,
            ghost_policy: GhostPolicy::Extrapolate,
        })
    }

    /// Parse the ASCII quad-mesh format: `v x y z` vertex lines and
    /// `f i j k l` face lines with 1-based indices. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, MeshError> {
        let mut vertices = Vec::new();
        let mut faces = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut tok = line.split_whitespace();
            let tag = tok.next().unwrap();
            let parse_err = |msg: &str| MeshError::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            match tag {
                "v" => {
                    let mut xyz = [0.0f64; 3];
                    for x in xyz.iter_mut() {
                        *x = tok
                            .next()
                            .ok_or_else(|| parse_err("vertex line needs 3 coordinates"))?
                            .parse()
                            .map_err(|_| parse_err("bad coordinate"))?;
                    }
                    if tok.next().is_some() {
                        return Err(parse_err("vertex line has extra fields"));
                    }
                    vertices.push(Vec3::new(xyz[0], xyz[1], xyz[2]));
                }
                "f" => {
                    let idx: Vec<usize> = tok
                        .map(|t| {
                            t.parse::<usize>()
                                .map_err(|_| parse_err("bad vertex index"))
                        })
                        .collect::<Result<_, _>>()?;
                    if idx.len() != 4 {
                        return Err(MeshError::NonQuadFace {
                            face: faces.len(),
                            count: idx.len(),
                        });
                    }
                    let mut f = [0usize; 4];
                    for (k, &i) in idx.iter().enumerate() {
                        if i == 0 {
                            return Err(parse_err("face indices are 1-based"));
                        }
                        f[k] = i - 1;
                    }
                    faces.push(f);
                }
                _ => return Err(parse_err(&format!("unknown tag '{tag}'"))),
            }
        }
        ControlMesh::new(vertices, faces)
    }

    /// Serialize to the same ASCII format accepted by [`ControlMesh::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            s.push_str(&format!("v {:.17e} {:.17e} {:.17e}\n", v.x, v.y, v.z));
        }
        for f in &self.faces {
            s.push_str(&format!(
                "f {} {} {} {}\n",
                f[0] + 1,
                f[1] + 1,
                f[2] + 1,
                f[3] + 1
            ));
        }
        s
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn n_boundary_edges(&self) -> usize {
        self.n_boundary_edges
    }
    pub fn is_closed(&self) -> bool {
        self.n_boundary_edges == 0
    }
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }
    pub fn faces(&self) -> &[[usize; 4]] {
        &self.faces
    }
    pub fn face(&self, f: usize) -> [usize; 4] {
        self.faces[f]
    }
    pub fn valence(&self, v: usize) -> usize {
        self.valence[v]
    }
    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }
    pub fn ghost_policy(&self) -> &GhostPolicy {
        &self.ghost_policy
    }

    pub fn with_ghost_policy(mut self, policy: GhostPolicy) -> Self {
        self.ghost_policy = policy;
        self
    }

    /// Replace the control points, keeping topology. Lengths must match.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len());
        let mut m = self.clone();
        m.vertices = vertices;
        m
    }

    /// An interior vertex is extraordinary when its valence differs from 4.
    pub fn is_extraordinary(&self, v: usize) -> bool {
        !self.boundary_vertex[v] && self.valence[v] != 4
    }

    fn position_in_face(&self, f: usize, v: usize) -> usize {
        self.faces[f]
            .iter()
            .position(|&x| x == v)
            .expect("vertex not in face")
    }

    fn next_in_face(&self, f: usize, v: usize) -> usize {
        let p = self.position_in_face(f, v);
        self.faces[f][(p + 1) % 4]
    }

    fn prev_in_face(&self, f: usize, v: usize) -> usize {
        let p = self.position_in_face(f, v);
        self.faces[f][(p + 3) % 4]
    }

    fn diag_in_face(&self, f: usize, v: usize) -> usize {
        let p = self.position_in_face(f, v);
        self.faces[f][(p + 2) % 4]
    }

    fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_map.get(&EdgeKey::new(a, b)).copied()
    }

    /// The other face sharing edge (a, b), if any.
    fn face_across(&self, f: usize, a: usize, b: usize) -> Option<usize> {
        let eid = self.edge_id(a, b)?;
        let [f0, f1] = self.edge_faces[eid];
        match (f0, f1) {
            (Some(x), Some(y)) => {
                if x == f {
                    Some(y)
                } else if y == f {
                    Some(x)
                } else {
                    None
                }
            }
            _ => None,
        }
    }

    /// Faces around `v` in counter-clockwise order starting from `start`.
    /// Returns `None` if the fan is open (boundary) or does not close in
    /// `valence` steps.
    fn closed_fan(&self, v: usize, start: usize) -> Option<Vec<usize>> {
        let n = self.vertex_faces[v].len();
        let mut fan = Vec::with_capacity(n);
        let mut f = start;
        for _ in 0..n {
            fan.push(f);
            let w = self.prev_in_face(f, v);
            f = self.face_across(f, v, w)?;
            if f == start {
                return if fan.len() == n { Some(fan) } else { None };
            }
        }
        None
    }

    /// Edge-neighbour of `v` two fan steps away from `w` (the "opposite"
    /// outgoing edge for a valence-4 vertex).
    fn fan_opposite(&self, v: usize, w: usize, via: usize) -> Option<usize> {
        debug_assert_eq!(self.valence[v], 4);
        // `via` is a face containing edge (v, w); cross it twice.
        let f1 = self.face_across(via, v, w)?;
        let w1 = if self.next_in_face(f1, v) == w {
            self.prev_in_face(f1, v)
        } else {
            self.next_in_face(f1, v)
        };
        let f2 = self.face_across(f1, v, w1)?;
        let w2 = if self.next_in_face(f2, v) == w1 {
            self.prev_in_face(f2, v)
        } else {
            self.next_in_face(f2, v)
        };
        Some(w2)
    }

    fn ghost_rule_for(&self, a: usize, b: usize) -> Result<GhostRule, MeshError> {
        match &self.ghost_policy {
            GhostPolicy::Extrapolate => Ok(GhostRule::Extrapolate),
            GhostPolicy::Mirror { planes, tol } => {
                let pa = self.vertices[a];
                let pb = self.vertices[b];
                for &(axis, offset) in planes {
                    if (pa[axis] - offset).abs() <= *tol && (pb[axis] - offset).abs() <= *tol {
                        return Ok(GhostRule::MirrorPlane { axis, offset });
                    }
                }
                Err(MeshError::NoGhostRule { a, b })
            }
        }
    }

    /// One Catmull-Clark refinement step.
    ///
    /// Interior rules are the standard masks (face centroid, edge average
    /// with the two face points, `(Q + 2R + (n-3)V)/n` vertex update).
    /// Boundary edges take midpoints and boundary vertices follow the cubic
    /// B-spline curve rule `(prev + 6 v + next)/8`, corners staying fixed,
    /// so the boundary limit curve is preserved.
    pub fn subdivide(&self) -> ControlMesh {
        let nv = self.vertices.len();
        let ne = self.edges.len();
        let nf = self.faces.len();

        let mut points: Vec<Vec3> = Vec::with_capacity(nv + ne + nf);

        // Vertex points first, then edge points, then face points.
        let face_point = |f: usize| -> Vec3 {
            let q = self.faces[f];
            (self.vertices[q[0]] + self.vertices[q[1]] + self.vertices[q[2]] + self.vertices[q[3]])
                / 4.0
        };

        for v in 0..nv {
            if self.boundary_vertex[v] {
                // Collect the boundary neighbours of v.
                let mut bnd: Vec<usize> = Vec::new();
                for (eid, &(a, b)) in self.edges.iter().enumerate() {
                    if self.edge_faces[eid][1].is_none() {
                        if a == v {
                            bnd.push(b);
                        } else if b == v {
                            bnd.push(a);
                        }
                    }
                }
                if bnd.len() == 2 && self.vertex_faces[v].len() > 1 {
                    points.push(
                        (self.vertices[bnd[0]] + 6.0 * self.vertices[v] + self.vertices[bnd[1]])
                            / 8.0,
                    );
                } else {
                    // Corner (single adjacent face) or irregular boundary:
                    // interpolate, matching the ghost-completed surface.
                    points.push(self.vertices[v]);
                }
            } else {
                let n = self.valence[v] as f64;
                let mut q = Vec3::zeros();
                for &f in &self.vertex_faces[v] {
                    q += face_point(f);
                }
                q /= self.vertex_faces[v].len() as f64;
                let mut r = Vec3::zeros();
                let mut count = 0.0;
                for (eid, &(a, b)) in self.edges.iter().enumerate() {
                    let w = if a == v {
                        b
                    } else if b == v {
                        a
                    } else {
                        continue;
                    };
                    let _ = eid;
                    r += (self.vertices[v] + self.vertices[w]) / 2.0;
                    count += 1.0;
                }
                r /= count;
                points.push((q + 2.0 * r + (n - 3.0) * self.vertices[v]) / n);
            }
        }

        let edge_base = nv;
        for (eid, &(a, b)) in self.edges.iter().enumerate() {
            let [f0, f1] = self.edge_faces[eid];
            let mid = (self.vertices[a] + self.vertices[b]) / 2.0;
            match (f0, f1) {
                (Some(fa), Some(fb)) => points.push(
                    (self.vertices[a] + self.vertices[b] + face_point(fa) + face_point(fb)) / 4.0,
                ),
                _ => points.push(mid),
            }
        }

        let face_base = nv + ne;
        for f in 0..nf {
            points.push(face_point(f));
        }

        let mut faces: Vec<[usize; 4]> = Vec::with_capacity(4 * nf);
        for (fid, f) in self.faces.iter().enumerate() {
            let fp = face_base + fid;
            for k in 0..4 {
                let v = f[k];
                let e_next = edge_base + self.edge_id(v, f[(k + 1) % 4]).unwrap();
                let e_prev = edge_base + self.edge_id(f[(k + 3) % 4], v).unwrap();
                faces.push([v, e_next, fp, e_prev]);
            }
        }

        let mut m = ControlMesh::new(points, faces).expect("subdivision preserves validity");
        m.ghost_policy = self.ghost_policy.clone();
        m
    }

    /// Number of faces that touch two or more extraordinary vertices.
    pub fn faces_needing_subdivision(&self) -> usize {
        self.faces
            .iter()
            .filter(|f| f.iter().filter(|&&v| self.is_extraordinary(v)).count() >= 2)
            .count()
    }

    /// Subdivide until every face touches at most one extraordinary vertex.
    /// One step always suffices for a valid mesh; the loop guards degenerate
    /// inputs.
    pub fn ensure_evaluable(self) -> ControlMesh {
        let mut m = self;
        for _ in 0..2 {
            if m.faces_needing_subdivision() == 0 {
                return m;
            }
            m = m.subdivide();
        }
        m
    }

    /// Limit-surface positions of all control points.
    ///
    /// Interior valence-n vertices use the stencil
    /// `(n^2 v + 4 sum(edge neighbours) + sum(face diagonals)) / (n (n+5))`;
    /// boundary-chain vertices take the curve limit `(prev + 4 v + next)/6`
    /// and corners interpolate.
    pub fn limit_positions(&self) -> Vec<Vec3> {
        let mut out = Vec::with_capacity(self.vertices.len());
        for v in 0..self.vertices.len() {
            if self.boundary_vertex[v] {
                let mut bnd: Vec<usize> = Vec::new();
                for (eid, &(a, b)) in self.edges.iter().enumerate() {
                    if self.edge_faces[eid][1].is_none() {
                        if a == v {
                            bnd.push(b);
                        } else if b == v {
                            bnd.push(a);
                        }
                    }
                }
                if bnd.len() == 2 && self.vertex_faces[v].len() > 1 {
                    out.push(
                        (self.vertices[bnd[0]] + 4.0 * self.vertices[v] + self.vertices[bnd[1]])
                            / 6.0,
                    );
                } else {
                    out.push(self.vertices[v]);
                }
            } else {
                let n = self.valence[v] as f64;
                let mut e_sum = Vec3::zeros();
                for (eid, &(a, b)) in self.edges.iter().enumerate() {
                    let _ = eid;
                    if a == v {
                        e_sum += self.vertices[b];
                    } else if b == v {
                        e_sum += self.vertices[a];
                    }
                }
                let mut f_sum = Vec3::zeros();
                for &f in &self.vertex_faces[v] {
                    f_sum += self.vertices[self.diag_in_face(f, v)];
                }
                out.push(
                    (n * n * self.vertices[v] + 4.0 * e_sum + f_sum) / (n * (n + 5.0)),
                );
            }
        }
        out
    }

    /// Extract the canonical evaluation stencil of a face.
    pub fn patch_stencil(&self, face: usize) -> Result<PatchStencil, MeshError> {
        if face >= self.faces.len() {
            return Err(MeshError::NoSuchFace {
                face,
                n_faces: self.faces.len(),
            });
        }
        let f = self.faces[face];
        let ev: Vec<usize> = (0..4)
            .filter(|&k| self.is_extraordinary(f[k]))
            .collect();
        match ev.len() {
            0 => self.regular_stencil(face),
            1 => self.irregular_stencil(face, ev[0]),
            n => Err(MeshError::SubdivideRequired { face, count: n }),
        }
    }

    /// Regular 4x4 lattice with ghost completion next to boundaries.
    fn regular_stencil(&self, face: usize) -> Result<PatchStencil, MeshError> {
        let f = self.faces[face];
        let (v0, v1, v2, v3) = (f[0], f[1], f[2], f[3]);

        // Option grid in lattice coordinates [i][j], i right, j up.
        let mut g: [[Option<GhostCombo>; 4]; 4] = Default::default();
        g[1][1] = Some(GhostCombo::real(v0));
        g[2][1] = Some(GhostCombo::real(v1));
        g[2][2] = Some(GhostCombo::real(v2));
        g[1][2] = Some(GhostCombo::real(v3));

        // Side strips.
        let fb = self.face_across(face, v0, v1);
        if let Some(fb) = fb {
            g[1][0] = Some(GhostCombo::real(self.diag_in_face(fb, v1)));
            g[2][0] = Some(GhostCombo::real(self.diag_in_face(fb, v0)));
        }
        let fr = self.face_across(face, v1, v2);
        if let Some(fr) = fr {
            g[3][1] = Some(GhostCombo::real(self.diag_in_face(fr, v2)));
            g[3][2] = Some(GhostCombo::real(self.diag_in_face(fr, v1)));
        }
        let ft = self.face_across(face, v2, v3);
        if let Some(ft) = ft {
            g[2][3] = Some(GhostCombo::real(self.diag_in_face(ft, v3)));
            g[1][3] = Some(GhostCombo::real(self.diag_in_face(ft, v2)));
        }
        let fl = self.face_across(face, v3, v0);
        if let Some(fl) = fl {
            g[0][2] = Some(GhostCombo::real(self.diag_in_face(fl, v0)));
            g[0][1] = Some(GhostCombo::real(self.diag_in_face(fl, v3)));
        }

        // Corner faces, reachable only when both adjacent strips exist.
        if let Some(fb) = fb {
            let p10 = self.diag_in_face(fb, v1);
            if let Some(fbl) = self.face_across(fb, v0, p10) {
                g[0][0] = Some(GhostCombo::real(self.diag_in_face(fbl, v0)));
            }
            let p20 = self.diag_in_face(fb, v0);
            if let Some(fbr) = self.face_across(fb, v1, p20) {
                g[3][0] = Some(GhostCombo::real(self.diag_in_face(fbr, v1)));
            }
        }
        if let Some(fr) = fr {
            let p32 = self.diag_in_face(fr, v1);
            if let Some(ftr) = self.face_across(fr, v2, p32) {
                g[3][3] = Some(GhostCombo::real(self.diag_in_face(ftr, v2)));
            }
        }
        if let Some(ft) = ft {
            let p13 = self.diag_in_face(ft, v2);
            if let Some(ftl) = self.face_across(ft, v3, p13) {
                g[0][3] = Some(GhostCombo::real(self.diag_in_face(ftl, v3)));
            }
        }

        // Ghost completion. Side strips reflect across the patch rows; the
        // rule comes from the boundary edge being crossed.
        let reflect = |rule: &GhostRule, b: &GhostCombo, i: &GhostCombo| match rule {
            GhostRule::Extrapolate => GhostCombo::extrapolate(b, i),
            GhostRule::MirrorPlane { axis, offset } => GhostCombo::mirror(i, *axis, *offset),
        };
        if fb.is_none() {
            let rule = self.ghost_rule_for(v0, v1)?;
            for i in 1..=2 {
                let b = g[i][1].clone().unwrap();
                let inner = g[i][2].clone().unwrap();
                g[i][0] = Some(reflect(&rule, &b, &inner));
            }
        }
        if ft.is_none() {
            let rule = self.ghost_rule_for(v2, v3)?;
            for i in 1..=2 {
                let b = g[i][2].clone().unwrap();
                let inner = g[i][1].clone().unwrap();
                g[i][3] = Some(reflect(&rule, &b, &inner));
            }
        }
        if fl.is_none() {
            let rule = self.ghost_rule_for(v3, v0)?;
            for j in 1..=2 {
                let b = g[1][j].clone().unwrap();
                let inner = g[2][j].clone().unwrap();
                g[0][j] = Some(reflect(&rule, &b, &inner));
            }
        }
        if fr.is_none() {
            let rule = self.ghost_rule_for(v1, v2)?;
            for j in 1..=2 {
                let b = g[2][j].clone().unwrap();
                let inner = g[1][j].clone().unwrap();
                g[3][j] = Some(reflect(&rule, &b, &inner));
            }
        }

        // Remaining corners. A corner missing next to a ghost strip must be
        // the reflection of its partner slot across that same boundary, so
        // the completed lattice stays an exact reflection image (this keeps
        // mirror symmetry bit-exact). If a side strip is missing, reflect
        // across it first; otherwise reflect across the missing top/bottom
        // strip; as a last resort (odd concave topology) extrapolate along
        // the column.
        for (ci, cj) in [(0usize, 0usize), (3, 0), (0, 3), (3, 3)] {
            if g[ci][cj].is_some() {
                continue;
            }
            let i_strip_missing = (ci == 0 && fl.is_none()) || (ci == 3 && fr.is_none());
            let j_strip_missing = (cj == 0 && fb.is_none()) || (cj == 3 && ft.is_none());
            // Mirror-partner indices across the boundary rows i=1 / i=2 and
            // j=1 / j=2.
            let ci_partner = if ci == 0 { 2 } else { 1 };
            let cj_partner = if cj == 0 { 2 } else { 1 };
            if i_strip_missing && g[ci_partner][cj].is_some() {
                let edge = if ci == 0 { (v3, v0) } else { (v1, v2) };
                let rule = self.ghost_rule_for(edge.0, edge.1)?;
                let b = g[if ci == 0 { 1 } else { 2 }][cj].clone();
                let inner = g[ci_partner][cj].clone().unwrap();
                let b = b.unwrap_or_else(|| inner.clone());
                g[ci][cj] = Some(reflect(&rule, &b, &inner));
            } else if j_strip_missing && g[ci][cj_partner].is_some() {
                let edge = if cj == 0 { (v0, v1) } else { (v2, v3) };
                let rule = self.ghost_rule_for(edge.0, edge.1)?;
                let b = g[ci][if cj == 0 { 1 } else { 2 }].clone();
                let inner = g[ci][cj_partner].clone().unwrap();
                let b = b.unwrap_or_else(|| inner.clone());
                g[ci][cj] = Some(reflect(&rule, &b, &inner));
            } else {
                // Both adjacent faces exist but the corner face is missing:
                // extrapolate along the column, then the row as fallback.
                let cj_n = if cj == 0 { (1, 2) } else { (2, 1) };
                let ci_n = if ci == 0 { (1, 2) } else { (2, 1) };
                if g[ci][cj_n.0].is_some() && g[ci][cj_n.1].is_some() {
                    let b = g[ci][cj_n.0].clone().unwrap();
                    let inner = g[ci][cj_n.1].clone().unwrap();
                    g[ci][cj] = Some(GhostCombo::extrapolate(&b, &inner));
                } else {
                    let b = g[ci_n.0][cj].clone().unwrap();
                    let inner = g[ci_n.1][cj].clone().unwrap();
                    g[ci][cj] = Some(GhostCombo::extrapolate(&b, &inner));
                }
            }
        }

        // Row-major slots: a = 4j + i.
        let mut slots = Vec::with_capacity(16);
        for j in 0..4 {
            for i in 0..4 {
                let combo = g[i][j].clone().unwrap();
                if combo.terms.len() == 1
                    && combo.terms[0].1 == [1.0, 1.0, 1.0]
                    && combo.offset == Vec3::zeros()
                {
                    slots.push(StencilSlot::Real(combo.terms[0].0));
                } else {
                    slots.push(StencilSlot::Ghost(combo));
                }
            }
        }
        Ok(PatchStencil {
            face,
            class: PatchClass::Regular,
            slots,
            rotation: 0,
        })
    }

    /// Irregular stencil: extraordinary vertex, its full one-ring, and the
    /// seven far points of the remaining regular block.
    fn irregular_stencil(&self, face: usize, ev_pos: usize) -> Result<PatchStencil, MeshError> {
        let f = self.faces[face];
        let a = f[ev_pos];
        let n = self.valence[a];
        let fail = || MeshError::IrregularBoundary { face };

        // Ring around A, counter-clockwise from B.
        let fan = self.closed_fan(a, face).ok_or_else(fail)?;
        debug_assert_eq!(fan.len(), n);
        let mut ring: Vec<usize> = Vec::with_capacity(2 * n);
        for &g in &fan {
            let e = self.next_in_face(g, a);
            let d = self.diag_in_face(g, a);
            ring.push(e);
            ring.push(d);
        }
        let b = ring[0];
        let c = ring[1];
        let d = ring[2];
        debug_assert_eq!(b, f[(ev_pos + 1) % 4]);
        debug_assert_eq!(c, f[(ev_pos + 2) % 4]);
        debug_assert_eq!(d, f[(ev_pos + 3) % 4]);
        let d_last = ring[2 * n - 1]; // P20

        // Far points around B, C, D (all must be interior valence 4).
        for &v in &[b, c, d] {
            if self.boundary_vertex[v] || self.valence[v] != 4 {
                return Err(fail());
            }
        }
        let p31 = self.fan_opposite(b, a, face).ok_or_else(fail)?;
        let p13 = self.fan_opposite(d, a, face).ok_or_else(fail)?;

        let fan_last = fan[n - 1];
        let face_d = self.face_across(fan_last, b, d_last).ok_or_else(fail)?;
        let p30 = self.diag_in_face(face_d, b);
        debug_assert_eq!(self.prev_in_face(face_d, b), p31);

        let face_c = self.face_across(face, v_of(f, ev_pos, 1), v_of(f, ev_pos, 2)) // edge (B, C)
            .ok_or_else(fail)?;
        let p32 = self.diag_in_face(face_c, b);
        let face_e = self.face_across(face_c, c, p32).ok_or_else(fail)?;
        let p33 = self.diag_in_face(face_e, c);
        let p23 = self.prev_in_face(face_e, c);

        let face_f2 = self.face_across(face, v_of(f, ev_pos, 2), v_of(f, ev_pos, 3)) // edge (C, D)
            .ok_or_else(fail)?;
        let face_g = self.face_across(face_f2, d, p13).ok_or_else(fail)?;
        let p03 = self.diag_in_face(face_g, d);

        let mut slots: Vec<StencilSlot> = Vec::with_capacity(2 * n + 8);
        slots.push(StencilSlot::Real(a));
        slots.extend(ring.iter().map(|&v| StencilSlot::Real(v)));
        for v in [p30, p31, p32, p33, p23, p13, p03] {
            slots.push(StencilSlot::Real(v));
        }

        // All slots must be distinct real vertices.
        {
            let mut ids: Vec<usize> = slots
                .iter()
                .map(|s| match s {
                    StencilSlot::Real(v) => *v,
                    _ => unreachable!(),
                })
                .collect();
            ids.sort_unstable();
            ids.dedup();
            if ids.len() != 2 * n + 8 {
                return Err(fail());
            }
        }

        Ok(PatchStencil {
            face,
            class: PatchClass::Irregular { valence: n },
            slots,
            rotation: ev_pos,
        })
    }
}

fn v_of(f: [usize; 4], base: usize, step: usize) -> usize {
    f[(base + step) % 4]
}

/// Load a control mesh from ASCII text (see [`ControlMesh::parse`]) and run
/// the mandatory pre-subdivision pass so every face is evaluable.
pub fn load_control_mesh(text: &str) -> Result<ControlMesh, MeshError> {
    Ok(ControlMesh::parse(text)?.ensure_evaluable())
}

/// Closed n1 x n2 torus-topology grid from a parametric callback.
pub fn closed_grid<F: Fn(usize, usize) -> Vec3>(n1: usize, n2: usize, pos: F) -> ControlMesh {
    let mut vertices = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            vertices.push(pos(i, j));
        }
    }
    let idx = |i: usize, j: usize| (i % n1) * n2 + (j % n2);
    let mut faces = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    ControlMesh::new(vertices, faces).expect("closed grid is always valid")
}

/// Open (n1+1) x (n2+1)-vertex grid with n1 x n2 faces.
pub fn open_grid<F: Fn(usize, usize) -> Vec3>(n1: usize, n2: usize, pos: F) -> ControlMesh {
    let mut vertices = Vec::with_capacity((n1 + 1) * (n2 + 1));
    for i in 0..=n1 {
        for j in 0..=n2 {
            vertices.push(pos(i, j));
        }
    }
    let idx = |i: usize, j: usize| i * (n2 + 1) + j;
    let mut faces = Vec::with_capacity(n1 * n2);
    for i in 0..n1 {
        for j in 0..n2 {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    ControlMesh::new(vertices, faces).expect("open grid is always valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ControlMesh {
        ControlMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(1.0, 1.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2, 3]],
        )
        .unwrap()
    }

    fn cube() -> ControlMesh {
        let v = vec![
            Vec3::new(-1.0, -1.0, -1.0),
            Vec3::new(1.0, -1.0, -1.0),
            Vec3::new(1.0, 1.0, -1.0),
            Vec3::new(-1.0, 1.0, -1.0),
            Vec3::new(-1.0, -1.0, 1.0),
            Vec3::new(1.0, -1.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
            Vec3::new(-1.0, 1.0, 1.0),
        ];
        // Outward orientation.
        let f = vec![
            [0, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ];
        ControlMesh::new(v, f).unwrap()
    }

    #[test]
    fn single_quad_topology() {
        let m = unit_square();
        assert_eq!(m.n_faces(), 1);
        assert_eq!(m.n_vertices(), 4);
        for v in 0..4 {
            assert!(m.is_boundary_vertex(v));
            assert_eq!(m.valence(v), 2);
        }
        assert_eq!(m.n_boundary_edges(), 4);
    }

    #[test]
    fn closed_torus_grid_topology() {
        let m = closed_grid(16, 16, |i, j| Vec3::new(i as f64, j as f64, 0.0));
        assert_eq!(m.n_vertices(), 256);
        assert_eq!(m.n_faces(), 256);
        assert!(m.is_closed());
        for v in 0..m.n_vertices() {
            assert_eq!(m.valence(v), 4);
        }
    }

    #[test]
    fn parse_rejects_non_quad() {
        let err = ControlMesh::parse("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap_err();
        assert!(matches!(err, MeshError::NonQuadFace { .. }), "{err}");
    }

    #[test]
    fn parse_rejects_dangling_index() {
        let err =
            ControlMesh::parse("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 9\n").unwrap_err();
        assert!(matches!(err, MeshError::DanglingVertexIndex { .. }), "{err}");
    }

    #[test]
    fn rejects_inconsistent_orientation() {
        // Two quads sharing an edge traversed the same way in both.
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(2.0, 1.0, 0.0),
        ];
        let err = ControlMesh::new(v, vec![[0, 1, 2, 3], [1, 2, 5, 4]]).unwrap_err();
        assert!(matches!(err, MeshError::InconsistentOrientation { .. }), "{err}");
    }

    #[test]
    fn rejects_non_manifold_edge() {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(1.0, 1.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(2.0, 1.0, 0.0),
            Vec3::new(1.0, 0.0, 1.0),
            Vec3::new(1.0, 1.0, 1.0),
        ];
        let err = ControlMesh::new(
            v,
            vec![[0, 1, 2, 3], [1, 4, 5, 2], [1, 6, 7, 2]],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::NonManifoldEdge { .. }), "{err}");
    }

    #[test]
    fn subdivide_counts_closed() {
        // F' = 4F, V' = V + E + F, E' = 2E + 4F for closed meshes.
        let m = closed_grid(4, 4, |i, j| {
            let u = i as f64 / 4.0 * std::f64::consts::TAU;
            let v = j as f64 / 4.0 * std::f64::consts::TAU;
            Vec3::new((3.0 + v.cos()) * u.cos(), v.sin(), (3.0 + v.cos()) * u.sin())
        });
        let s = m.subdivide();
        assert_eq!(s.n_faces(), 4 * m.n_faces());
        assert_eq!(s.n_vertices(), m.n_vertices() + m.n_edges() + m.n_faces());
        assert_eq!(s.n_edges(), 2 * m.n_edges() + 4 * m.n_faces());
        assert_eq!(s.n_faces(), 64);
        assert_eq!(s.n_vertices(), 64);
        for v in 0..s.n_vertices() {
            assert_eq!(s.valence(v), 4);
        }
    }

    #[test]
    fn subdivide_cube_counts() {
        // 6 face points + 12 edge points + 8 vertex updates = 26 vertices,
        // 24 faces; every original corner keeps valence 3.
        let s = cube().subdivide();
        assert_eq!(s.n_vertices(), 26);
        assert_eq!(s.n_faces(), 24);
        let n_ev = (0..s.n_vertices()).filter(|&v| s.is_extraordinary(v)).count();
        assert_eq!(n_ev, 8);
    }

    #[test]
    fn face_point_is_centroid() {
        let m = unit_square();
        let s = m.subdivide();
        // The face point of the unit square is its centroid. It is the last
        // vertex (vertex points, then edge points, then face points).
        let fp = s.vertices()[s.n_vertices() - 1];
        assert!((fp - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn affine_invariance_of_subdivision() {
        let m = cube();
        let a = nalgebra::Matrix3::new(1.0, 0.2, 0.0, -0.3, 2.0, 0.1, 0.0, 0.5, 0.7);
        let t = Vec3::new(0.3, -1.0, 2.0);
        let transformed = m.with_vertices(m.vertices().iter().map(|p| a * p + t).collect());
        let s1 = transformed.subdivide();
        let s2 = m.subdivide();
        for (p1, p2) in s1.vertices().iter().zip(s2.vertices()) {
            assert!((p1 - (a * p2 + t)).norm() < 1e-12);
        }
    }

    #[test]
    fn regular_stencil_interior() {
        let m = closed_grid(8, 8, |i, j| Vec3::new(i as f64, j as f64, 0.0));
        let st = m.patch_stencil(3 * 8 + 3).unwrap();
        assert_eq!(st.class, PatchClass::Regular);
        assert_eq!(st.slots.len(), 16);
        assert!(st.slots.iter().all(|s| matches!(s, StencilSlot::Real(_))));
        // Lattice positions must be an i/j-aligned grid: check positions.
        let p = |k: usize| st.slots[k].ref_position(m.vertices());
        for j in 0..4usize {
            for i in 0..4usize {
                let q = p(4 * j + i);
                assert!((q.x - (2.0 + i as f64)).abs() < 1e-14, "i {i} j {j} {q:?}");
                assert!((q.y - (2.0 + j as f64)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn ghost_stencil_single_quad() {
        let m = unit_square();
        let st = m.patch_stencil(0).unwrap();
        assert_eq!(st.slots.len(), 16);
        // All 12 ring slots are ghosts; extrapolation keeps the patch planar.
        let n_ghost = st
            .slots
            .iter()
            .filter(|s| matches!(s, StencilSlot::Ghost(_)))
            .count();
        assert_eq!(n_ghost, 12);
        // Ghost of the bottom strip: 2*v0 - v3 = (0,-1,0).
        let p10 = st.slots[1].ref_position(m.vertices());
        assert!((p10 - Vec3::new(0.0, -1.0, 0.0)).norm() < 1e-14);
        // Corner double reflection: 4*v0 - 2*v1 - 2*v3 + v2 = (-1,-1,0).
        let p00 = st.slots[0].ref_position(m.vertices());
        assert!((p00 - Vec3::new(-1.0, -1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn mirror_ghosts_reflect_positions() {
        let m = open_grid(2, 2, |i, j| Vec3::new(i as f64 * 0.7, j as f64 * 1.3, 0.1))
            .with_ghost_policy(GhostPolicy::Mirror {
                planes: vec![(0, 0.0), (1, 0.0), (0, 1.4), (1, 2.6)],
                tol: 1e-9,
            });
        let st = m.patch_stencil(0).unwrap();
        // Bottom-left face of the grid: bottom strip mirrors across y = 0.
        let p10 = st.slots[1].ref_position(m.vertices());
        assert!((p10 - Vec3::new(0.0, -1.3, 0.1)).norm() < 1e-14, "{p10:?}");
        // Left strip mirrors across x = 0.
        let p01 = st.slots[4].ref_position(m.vertices());
        assert!((p01 - Vec3::new(-0.7, 0.0, 0.1)).norm() < 1e-14, "{p01:?}");
        // Corner ghost composes both mirrors.
        let p00 = st.slots[0].ref_position(m.vertices());
        assert!((p00 - Vec3::new(-0.7, -1.3, 0.1)).norm() < 1e-14, "{p00:?}");
    }

    #[test]
    fn irregular_stencil_valence_3() {
        // A cube subdivided once has interior-like valence-3 corners but they
        // sit on a closed mesh, so every vertex is interior.
        let s = cube().subdivide();
        let f = (0..s.n_faces())
            .find(|&f| s.face(f).iter().any(|&v| s.is_extraordinary(v)))
            .unwrap();
        let st = s.patch_stencil(f).unwrap();
        assert_eq!(st.class, PatchClass::Irregular { valence: 3 });
        assert_eq!(st.slots.len(), 2 * 3 + 8);
    }

    #[test]
    fn irregular_stencil_valence_5() {
        // One subdivision isolates the extraordinary vertices; the apex keeps
        // index 0 because vertex updates come first in the refined mesh.
        let m = valence5_mesh().subdivide();
        assert_eq!(m.valence(0), 5);
        let f = (0..m.n_faces())
            .find(|&f| m.face(f).contains(&0))
            .unwrap();
        let st = m.patch_stencil(f).unwrap();
        assert_eq!(st.class, PatchClass::Irregular { valence: 5 });
        assert_eq!(st.slots.len(), 18);
    }

    #[test]
    fn two_ev_face_requires_subdivision() {
        let s = cube(); // every face touches four valence-3 corners
        let err = s.patch_stencil(0).unwrap_err();
        assert!(matches!(err, MeshError::SubdivideRequired { .. }), "{err}");
        let fixed = s.ensure_evaluable();
        assert_eq!(fixed.faces_needing_subdivision(), 0);
        for f in 0..fixed.n_faces() {
            fixed.patch_stencil(f).unwrap();
        }
    }

    #[test]
    fn parse_roundtrip() {
        let m = cube();
        let text = m.to_text();
        let m2 = ControlMesh::parse(&text).unwrap();
        assert_eq!(m2.n_vertices(), m.n_vertices());
        assert_eq!(m2.n_faces(), m.n_faces());
        for (a, b) in m.vertices().iter().zip(m2.vertices()) {
            assert_eq!(a, b);
        }
    }

    /// Closed "drum": valence-5 apexes top and bottom joined by a 10-face
    /// prism band. The raw mesh has adjacent extraordinary vertices; callers
    /// subdivide once before extracting stencils.
    fn valence5_mesh() -> ControlMesh {
        let mut v = vec![Vec3::new(0.0, 0.0, 1.5)]; // 0: top apex
        let n = 5;
        for k in 0..2 * n {
            let a = k as f64 / (2 * n) as f64 * std::f64::consts::TAU;
            v.push(Vec3::new(a.cos(), a.sin(), 0.5)); // 1..=10: upper ring
        }
        for k in 0..2 * n {
            let a = (k as f64 + 0.5) / (2 * n) as f64 * std::f64::consts::TAU;
            v.push(Vec3::new(a.cos(), a.sin(), -0.5)); // 11..=20: lower ring
        }
        v.push(Vec3::new(0.0, 0.0, -1.5)); // 21: bottom apex
        let up = |k: usize| 1 + (k % (2 * n));
        let lo = |k: usize| 11 + (k % (2 * n));
        let mut f = Vec::new();
        for k in 0..n {
            f.push([0, up(2 * k), up(2 * k + 1), up(2 * k + 2)]);
        }
        for k in 0..2 * n {
            f.push([up(k), lo(k), lo(k + 1), up(k + 1)]);
        }
        for k in 0..n {
            f.push([21, lo(2 * k + 2), lo(2 * k + 1), lo(2 * k)]);
        }
        ControlMesh::new(v, f).unwrap()
    }

    #[test]
    fn valence5_mesh_is_valid() {
        let m = valence5_mesh();
        assert!(m.is_closed());
        assert_eq!(m.valence(0), 5);
    }
}
