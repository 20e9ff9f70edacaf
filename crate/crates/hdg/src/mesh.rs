//! Conforming triangulations of the unit square with face topology and
//! per-element affine geometry.

use crate::error::{HdgError, Result};

/// Incidence of one face (edge): owning elements and their local edge indices.
///
/// `left` is the element that registered the face first; `right` is `None` on
/// boundary faces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceIncidence {
    pub left: usize,
    pub left_edge: usize,
    pub right: Option<(usize, usize)>,
}

/// One entry of the element -> faces map: the global face index and the sign
/// relating the element's outward normal to the canonical face normal
/// (`+1.0` when the element traverses the face in canonical order).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementFace {
    pub face: usize,
    pub sign: f64,
}

/// Triangulation with full edge topology.
///
/// Triangles are counter-clockwise; faces store vertex pairs with the smaller
/// index first (canonical orientation). Local edge `l` of a triangle runs from
/// its vertex `l` to vertex `(l + 1) % 3`.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub faces: Vec<[usize; 2]>,
    pub face_to_elements: Vec<FaceIncidence>,
    pub element_to_faces: Vec<[ElementFace; 3]>,
}

/// Affine geometry of one triangle: reference element (0,0),(1,0),(0,1).
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Diameter (longest edge).
    pub h_t: f64,
    pub edge_lengths: [f64; 3],
    /// Unit outward normal per local edge.
    pub outward_normals: [[f64; 2]; 3],
    /// Columns of the reference-to-physical Jacobian.
    pub jacobian: [[f64; 2]; 2],
    pub jacobian_inv: [[f64; 2]; 2],
    pub det: f64,
}

impl ElementGeometry {
    pub fn to_physical(&self, r: [f64; 2]) -> [f64; 2] {
        let j = &self.jacobian;
        let v0 = self.vertices[0];
        [
            v0[0] + j[0][0] * r[0] + j[0][1] * r[1],
            v0[1] + j[1][0] * r[0] + j[1][1] * r[1],
        ]
    }

    pub fn to_reference(&self, x: [f64; 2]) -> [f64; 2] {
        let ji = &self.jacobian_inv;
        let d = [x[0] - self.vertices[0][0], x[1] - self.vertices[0][1]];
        [
            ji[0][0] * d[0] + ji[0][1] * d[1],
            ji[1][0] * d[0] + ji[1][1] * d[1],
        ]
    }

    /// Gradient of a reference-coordinate function mapped to physical space:
    /// `grad_x = J^{-T} grad_ref`.
    pub fn gradient_to_physical(&self, gr: [f64; 2]) -> [f64; 2] {
        let ji = &self.jacobian_inv;
        [
            ji[0][0] * gr[0] + ji[1][0] * gr[1],
            ji[0][1] * gr[0] + ji[1][1] * gr[1],
        ]
    }

    pub fn centroid(&self) -> [f64; 2] {
        let v = &self.vertices;
        [
            (v[0][0] + v[1][0] + v[2][0]) / 3.0,
            (v[0][1] + v[1][1] + v[2][1]) / 3.0,
        ]
    }
}

impl Mesh {
    /// Builds a mesh from raw vertex and (counter-clockwise) triangle lists,
    /// deriving faces and incidence. Face order follows first encounter during
    /// an in-order element/edge sweep; face orientation is smaller index first.
    pub fn from_vertices_and_triangles(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Mesh> {
        let mut faces: Vec<[usize; 2]> = Vec::new();
        let mut face_to_elements: Vec<FaceIncidence> = Vec::new();
        let mut lookup: std::collections::HashMap<(usize, usize), usize> =
            std::collections::HashMap::new();
        let mut element_to_faces = Vec::with_capacity(triangles.len());

        for (e, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(HdgError::InvalidArgument(format!(
                    "triangle {e} references a vertex out of range"
                )));
            }
            let mut efaces = [ElementFace { face: 0, sign: 1.0 }; 3];
            for l in 0..3 {
                let (p, q) = (tri[l], tri[(l + 1) % 3]);
                let key = (p.min(q), p.max(q));
                let sign = if p < q { 1.0 } else { -1.0 };
                match lookup.get(&key) {
                    None => {
                        let fi = faces.len();
                        lookup.insert(key, fi);
                        faces.push([key.0, key.1]);
                        face_to_elements.push(FaceIncidence {
                            left: e,
                            left_edge: l,
                            right: None,
                        });
                        efaces[l] = ElementFace { face: fi, sign };
                    }
                    Some(&fi) => {
                        let inc = &mut face_to_elements[fi];
                        if inc.right.is_some() {
                            return Err(HdgError::InvalidArgument(format!(
                                "face {fi} referenced by more than two elements"
                            )));
                        }
                        inc.right = Some((e, l));
                        efaces[l] = ElementFace { face: fi, sign };
                    }
                }
            }
            element_to_faces.push(efaces);
        }

        let mesh = Mesh {
            vertices,
            triangles,
            faces,
            face_to_elements,
            element_to_faces,
        };
        for e in 0..mesh.triangles.len() {
            let g = mesh.element_geometry(e)?;
            if g.area <= 0.0 {
                return Err(HdgError::InvalidArgument(format!(
                    "triangle {e} is degenerate or clockwise (area {})",
                    g.area
                )));
            }
        }
        Ok(mesh)
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn is_boundary_face(&self, face: usize) -> bool {
        self.face_to_elements[face].right.is_none()
    }

    /// Interior face indices in canonical (ascending) order.
    pub fn interior_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_faces()).filter(|&f| !self.is_boundary_face(f))
    }

    pub fn face_length(&self, face: usize) -> f64 {
        let [a, b] = self.faces[face];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt()
    }

    /// Point on `face` at canonical parameter `t` in [0,1] (from the smaller-
    /// index endpoint to the larger).
    pub fn face_point(&self, face: usize, t: f64) -> [f64; 2] {
        let [a, b] = self.faces[face];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    }

    /// Affine geometry of element `element_id`.
    pub fn element_geometry(&self, element_id: usize) -> Result<ElementGeometry> {
        let tri = *self
            .triangles
            .get(element_id)
            .ok_or_else(|| HdgError::InvalidArgument(format!("element {element_id} out of range")))?;
        let v = [
            self.vertices[tri[0]],
            self.vertices[tri[1]],
            self.vertices[tri[2]],
        ];
        let jacobian = [
            [v[1][0] - v[0][0], v[2][0] - v[0][0]],
            [v[1][1] - v[0][1], v[2][1] - v[0][1]],
        ];
        let det = jacobian[0][0] * jacobian[1][1] - jacobian[0][1] * jacobian[1][0];
        let jacobian_inv = [
            [jacobian[1][1] / det, -jacobian[0][1] / det],
            [-jacobian[1][0] / det, jacobian[0][0] / det],
        ];
        let mut edge_lengths = [0.0; 3];
        let mut outward_normals = [[0.0; 2]; 3];
        for l in 0..3 {
            let (p, q) = (v[l], v[(l + 1) % 3]);
            let t = [q[0] - p[0], q[1] - p[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            edge_lengths[l] = len;
            // For counter-clockwise traversal the outward normal is the
            // tangent rotated clockwise.
            outward_normals[l] = [t[1] / len, -t[0] / len];
        }
        Ok(ElementGeometry {
            vertices: v,
            area: det / 2.0,
            h_t: edge_lengths.iter().cloned().fold(0.0, f64::max),
            edge_lengths,
            outward_normals,
            jacobian,
            jacobian_inv,
            det,
        })
    }

    /// Largest element diameter.
    pub fn h_max(&self) -> f64 {
        (0..self.n_elements())
            .map(|e| self.element_geometry(e).expect("valid element").h_t)
            .fold(0.0, f64::max)
    }

    /// Checks the structural invariants: Euler relation, positive areas,
    /// two-sided interior faces, matched opposite normals, conformity of the
    /// incidence maps.
    pub fn validate(&self) -> Result<()> {
        let (nv, nf, nt) = (self.n_vertices(), self.n_faces(), self.n_elements());
        if nv + nt != nf + 1 {
            return Err(HdgError::InvalidArgument(format!(
                "Euler relation violated: V - F + T = {}",
                nv as i64 - nf as i64 + nt as i64
            )));
        }
        for e in 0..nt {
            let g = self.element_geometry(e)?;
            if g.area <= 0.0 {
                return Err(HdgError::InvalidArgument(format!(
                    "element {e} has nonpositive area"
                )));
            }
            for l in 0..3 {
                let ef = self.element_to_faces[e][l];
                let inc = self.face_to_elements[ef.face];
                let owned = (inc.left == e && inc.left_edge == l) || inc.right == Some((e, l));
                if !owned {
                    return Err(HdgError::InvalidArgument(format!(
                        "incidence maps disagree for element {e}, edge {l}"
                    )));
                }
            }
        }
        for f in 0..nf {
            let inc = self.face_to_elements[f];
            if let Some((er, lr)) = inc.right {
                let gl = self.element_geometry(inc.left)?;
                let gr = self.element_geometry(er)?;
                let (nl, nr) = (
                    gl.outward_normals[inc.left_edge],
                    gr.outward_normals[lr],
                );
                let dev = (nl[0] + nr[0]).abs().max((nl[1] + nr[1]).abs());
                if dev > 1e-14 {
                    return Err(HdgError::InvalidArgument(format!(
                        "interior face {f}: normals not opposite (deviation {dev:.2e})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Plain-text export: header `vertices <V> triangles <T>`, then vertex and
    /// triangle lines.
    pub fn export_text(&self) -> String {
        let mut out = format!(
            "vertices {} triangles {}\n",
            self.n_vertices(),
            self.n_elements()
        );
        for v in &self.vertices {
            out.push_str(&format!("{} {}\n", v[0], v[1]));
        }
        for t in &self.triangles {
            out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        out
    }
}

/// n x n grid of squares, each split into two triangles by the diagonal from
/// its lower-left to its upper-right corner. `h = sqrt(2)/n`.
pub fn build_structured_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(HdgError::InvalidArgument("mesh subdivision n must be >= 1".into()));
    }
    let nf = n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / nf, j as f64 / nf]);
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::from_vertices_and_triangles(vertices, triangles)
}

/// n x n grid of squares, each split into four triangles by its center vertex
/// (both half-diagonals). `h = 1/n`.
pub fn build_crisscross_mesh(n: usize) -> Result<Mesh> {
    if n == 0 {
        return Err(HdgError::InvalidArgument("mesh subdivision n must be >= 1".into()));
    }
    let nf = n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1) + n * n);
    for j in 0..=n {
        for i in 0..=n {
            vertices.push([i as f64 / nf, j as f64 / nf]);
        }
    }
    let vid = |i: usize, j: usize| j * (n + 1) + i;
    let corner_count = (n + 1) * (n + 1);
    let cid = |i: usize, j: usize| corner_count + j * n + i;
    for j in 0..n {
        for i in 0..n {
            vertices.push([(i as f64 + 0.5) / nf, (j as f64 + 0.5) / nf]);
        }
    }
    let mut triangles = Vec::with_capacity(4 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1));
            let m = cid(i, j);
            triangles.push([a, b, m]);
            triangles.push([b, c, m]);
            triangles.push([c, d, m]);
            triangles.push([d, a, m]);
        }
    }
    Mesh::from_vertices_and_triangles(vertices, triangles)
}

/// Uniform red refinement: each triangle is split into four similar children
/// through its edge midpoints; `h_T` halves exactly.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    let mut vertices = mesh.vertices.clone();
    // One new vertex per face, in face order.
    let mut midpoint = Vec::with_capacity(mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let [a, b] = mesh.faces[f];
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        midpoint.push(vertices.len());
        vertices.push([(pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0]);
    }
    let mut triangles = Vec::with_capacity(4 * mesh.n_elements());
    for (e, tri) in mesh.triangles.iter().enumerate() {
        let m = [
            midpoint[mesh.element_to_faces[e][0].face],
            midpoint[mesh.element_to_faces[e][1].face],
            midpoint[mesh.element_to_faces[e][2].face],
        ];
        let [a, b, c] = *tri;
        triangles.push([a, m[0], m[2]]);
        triangles.push([m[0], b, m[1]]);
        triangles.push([m[2], m[1], c]);
        triangles.push([m[0], m[1], m[2]]);
    }
    Mesh::from_vertices_and_triangles(vertices, triangles)
}
