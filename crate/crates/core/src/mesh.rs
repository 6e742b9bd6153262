//! Conforming triangular meshes of rectangular domains.
//!
//! Edges carry a global orientation from the lower to the higher vertex
//! index. Local edge `i` of a cell `[v0, v1, v2]` is the edge opposite to
//! vertex `i`, traversed counterclockwise: from `v[(i+1)%3]` to `v[(i+2)%3]`.
//! The local sign of a cell edge is `+1` when that traversal agrees with
//! the global orientation. Global edge normals are the tangent rotated
//! clockwise, so the outward normal of a cell equals `sign * global normal`.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub type Point<T> = [T; 2];

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Scalar> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn unit() -> Self {
        Self::new(T::zero(), T::zero(), T::one(), T::one())
    }

    pub fn width(&self) -> T {
        self.x1 - self.x0
    }

    pub fn height(&self) -> T {
        self.y1 - self.y0
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    /// Strict interior test.
    pub fn contains_open(&self, p: Point<T>) -> bool {
        p[0] > self.x0 && p[0] < self.x1 && p[1] > self.y0 && p[1] < self.y1
    }

    /// Closed containment with an absolute slack `tol`.
    pub fn contains_closed(&self, p: Point<T>, tol: T) -> bool {
        p[0] >= self.x0 - tol
            && p[0] <= self.x1 + tol
            && p[1] >= self.y0 - tol
            && p[1] <= self.y1 + tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    /// Pressure prescribed; enters weakly through the boundary load.
    Dirichlet,
    /// Normal velocity prescribed; enforced on the edge degrees of freedom.
    Neumann,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BoundaryLabel {
    pub name: String,
    pub kind: BoundaryKind,
}

impl BoundaryLabel {
    pub fn dirichlet(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: BoundaryKind::Dirichlet,
        }
    }

    pub fn neumann(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: BoundaryKind::Neumann,
        }
    }
}

pub type EdgePredicate<T> = Box<dyn Fn(Point<T>) -> bool + Send + Sync>;

/// A labeled piece of the boundary. The predicate is evaluated at edge midpoints.
pub struct BoundaryPart<T> {
    pub label: BoundaryLabel,
    pub predicate: EdgePredicate<T>,
}

impl<T: Scalar> BoundaryPart<T> {
    pub fn new(
        label: BoundaryLabel,
        predicate: impl Fn(Point<T>) -> bool + Send + Sync + 'static,
    ) -> Self {
        Self {
            label,
            predicate: Box::new(predicate),
        }
    }

    /// Every boundary edge.
    pub fn all(label: BoundaryLabel) -> Self {
        Self::new(label, |_| true)
    }

    /// Edges on one side of `rect`.
    pub fn side(label: BoundaryLabel, rect: Rect<T>, side: Side) -> Self {
        let tol = T::lit(1e-9) * (rect.width() + rect.height());
        Self::new(label, move |p| side.matches(&rect, p, tol))
    }

    /// Edges on any side of `rect` except `side`.
    pub fn all_but(label: BoundaryLabel, rect: Rect<T>, side: Side) -> Self {
        let tol = T::lit(1e-9) * (rect.width() + rect.height());
        Self::new(label, move |p| !side.matches(&rect, p, tol))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub fn matches<T: Scalar>(&self, rect: &Rect<T>, p: Point<T>, tol: T) -> bool {
        match self {
            Side::Left => (p[0] - rect.x0).abs() <= tol,
            Side::Right => (p[0] - rect.x1).abs() <= tol,
            Side::Bottom => (p[1] - rect.y0).abs() <= tol,
            Side::Top => (p[1] - rect.y1).abs() <= tol,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Mesh<T> {
    vertices: Vec<Point<T>>,
    cells: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    cell_edges: Vec<[usize; 3]>,
    cell_edge_signs: Vec<[i8; 3]>,
    edge_cells: Vec<[Option<usize>; 2]>,
    boundary_edges: Vec<usize>,
    boundary_labels: Vec<BoundaryLabel>,
    /// Label index per boundary edge, aligned with `boundary_edges`.
    boundary_tags: Vec<Option<usize>>,
    h_max: T,
}

impl<T: Scalar> Mesh<T> {
    /// Builds the connectivity of a triangulation given by vertex triples.
    ///
    /// Cells must be counterclockwise; every edge may be shared by at most two cells.
    pub fn from_cells(vertices: Vec<Point<T>>, cells: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut edge_cells: Vec<[Option<usize>; 2]> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut cell_edge_signs = Vec::with_capacity(cells.len());
        let mut h_max = T::zero();

        for (c, cell) in cells.iter().enumerate() {
            if cell.iter().any(|&v| v >= nv) {
                return Err(Error::Mesh(format!("cell {c} references a missing vertex")));
            }
            let area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if area <= T::zero() {
                return Err(Error::Mesh(format!(
                    "cell {c} is not counterclockwise (signed area {area})"
                )));
            }
            let mut ce = [0usize; 3];
            let mut cs = [0i8; 3];
            for i in 0..3 {
                let a = cell[(i + 1) % 3];
                let b = cell[(i + 2) % 3];
                let key = (a.min(b), a.max(b));
                let e = *edge_index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_cells.push([None, None]);
                    edges.len() - 1
                });
                match edge_cells[e] {
                    [None, _] => edge_cells[e][0] = Some(c),
                    [Some(_), None] => edge_cells[e][1] = Some(c),
                    _ => {
                        return Err(Error::Mesh(format!(
                            "edge {a}-{b} is shared by more than two cells"
                        )))
                    }
                }
                ce[i] = e;
                cs[i] = if a < b { 1 } else { -1 };
                h_max = h_max.max(dist(vertices[a], vertices[b]));
            }
            cell_edges.push(ce);
            cell_edge_signs.push(cs);
        }

        // Interior edges must be traversed in opposite directions by their two cells.
        for (e, ec) in edge_cells.iter().enumerate() {
            if let [Some(c0), Some(c1)] = *ec {
                let s0 = local_sign(&cell_edges[c0], &cell_edge_signs[c0], e);
                let s1 = local_sign(&cell_edges[c1], &cell_edge_signs[c1], e);
                if s0 == s1 {
                    return Err(Error::Mesh(format!(
                        "edge {e} has inconsistent orientation in cells {c0} and {c1}"
                    )));
                }
            }
        }

        let boundary_edges: Vec<usize> = (0..edges.len())
            .filter(|&e| edge_cells[e][1].is_none())
            .collect();
        let boundary_tags = vec![None; boundary_edges.len()];
        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
            cell_edge_signs,
            edge_cells,
            boundary_edges,
            boundary_labels: Vec::new(),
            boundary_tags,
            h_max,
        })
    }

    /// Bisection mesh of `n x n` uniform squares; each square is split by the
    /// diagonal from its lower-left to its upper-right corner.
    pub fn build_structured(domain: Rect<T>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Mesh("cells per side must be at least 1".into()));
        }
        if domain.width() <= T::zero() || domain.height() <= T::zero() {
            return Err(Error::Mesh(
                "domain rectangle has non-positive extent".into(),
            ));
        }
        let nf = T::from_usize_lossy(n);
        let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
        for j in 0..=n {
            let y = domain.y0 + domain.height() * T::from_usize_lossy(j) / nf;
            for i in 0..=n {
                let x = domain.x0 + domain.width() * T::from_usize_lossy(i) / nf;
                vertices.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        let mut cells = Vec::with_capacity(2 * n * n);
        for j in 0..n {
            for i in 0..n {
                let a = id(i, j);
                let b = id(i + 1, j);
                let c = id(i + 1, j + 1);
                let d = id(i, j + 1);
                cells.push([a, b, c]);
                cells.push([a, c, d]);
            }
        }
        Self::from_cells(vertices, cells)
    }

    /// Tags every boundary edge with exactly one of `parts`.
    pub fn classify_boundary(mut self, parts: Vec<BoundaryPart<T>>) -> Result<Self> {
        let mut tags = vec![None; self.boundary_edges.len()];
        for (bi, &e) in self.boundary_edges.iter().enumerate() {
            let m = self.edge_midpoint(e);
            let mut found: Option<usize> = None;
            for (pi, part) in parts.iter().enumerate() {
                if (part.predicate)(m) {
                    if let Some(prev) = found {
                        return Err(Error::DoublyCoveredBoundary {
                            edge: e,
                            x: m[0].as_f64(),
                            y: m[1].as_f64(),
                            first: parts[prev].label.name.clone(),
                            second: part.label.name.clone(),
                        });
                    }
                    found = Some(pi);
                }
            }
            match found {
                Some(pi) => tags[bi] = Some(pi),
                None => {
                    return Err(Error::UncoveredBoundary {
                        edge: e,
                        x: m[0].as_f64(),
                        y: m[1].as_f64(),
                    });
                }
            }
        }
        self.boundary_labels = parts.into_iter().map(|p| p.label).collect();
        self.boundary_tags = tags;
        Ok(self)
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cell_edges(&self, cell: usize) -> [usize; 3] {
        self.cell_edges[cell]
    }

    /// `+1` when local edge `i` of `cell` is traversed along the global orientation.
    pub fn cell_edge_signs(&self, cell: usize) -> [i8; 3] {
        self.cell_edge_signs[cell]
    }

    pub fn edge_cells(&self, edge: usize) -> [Option<usize>; 2] {
        self.edge_cells[edge]
    }

    pub fn boundary_edges(&self) -> &[usize] {
        &self.boundary_edges
    }

    pub fn boundary_labels(&self) -> &[BoundaryLabel] {
        &self.boundary_labels
    }

    /// Label of the `i`-th boundary edge (index into `boundary_edges`).
    pub fn boundary_tag(&self, i: usize) -> Option<&BoundaryLabel> {
        self.boundary_tags[i].map(|t| &self.boundary_labels[t])
    }

    /// Boundary edges paired with their labels; untagged edges yield `None`.
    pub fn tagged_boundary(&self) -> impl Iterator<Item = (usize, Option<&BoundaryLabel>)> + '_ {
        self.boundary_edges
            .iter()
            .enumerate()
            .map(move |(i, &e)| (e, self.boundary_tag(i)))
    }

    pub fn h_max(&self) -> T {
        self.h_max
    }

    pub fn cell_vertices(&self, cell: usize) -> [Point<T>; 3] {
        let c = self.cells[cell];
        [
            self.vertices[c[0]],
            self.vertices[c[1]],
            self.vertices[c[2]],
        ]
    }

    pub fn cell_area(&self, cell: usize) -> T {
        let [a, b, c] = self.cell_vertices(cell);
        signed_area(a, b, c)
    }

    pub fn cell_centroid(&self, cell: usize) -> Point<T> {
        let [a, b, c] = self.cell_vertices(cell);
        let three = T::lit(3.0);
        [(a[0] + b[0] + c[0]) / three, (a[1] + b[1] + c[1]) / three]
    }

    pub fn edge_midpoint(&self, edge: usize) -> Point<T> {
        let [a, b] = self.edges[edge];
        let half = T::lit(0.5);
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        [(pa[0] + pb[0]) * half, (pa[1] + pb[1]) * half]
    }

    pub fn edge_length(&self, edge: usize) -> T {
        let [a, b] = self.edges[edge];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Unit normal of the globally oriented edge (tangent rotated clockwise).
    pub fn edge_normal(&self, edge: usize) -> Point<T> {
        let [a, b] = self.edges[edge];
        let (pa, pb) = (self.vertices[a], self.vertices[b]);
        let len = dist(pa, pb);
        [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len]
    }

    /// Writes a plain-text node/element dump.
    ///
    /// Layout: `vertices <n>`, then one `x y` line per vertex, then
    /// `cells <m>`, then one `a b c` line per cell (zero-based indices).
    pub fn write_dump<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{} {}", v[0], v[1])?;
        }
        writeln!(out, "cells {}", self.cells.len())?;
        for c in &self.cells {
            writeln!(out, "{} {} {}", c[0], c[1], c[2])?;
        }
        Ok(())
    }
}

fn local_sign(edges: &[usize; 3], signs: &[i8; 3], e: usize) -> i8 {
    let i = edges
        .iter()
        .position(|&x| x == e)
        .expect("edge belongs to cell");
    signs[i]
}

pub fn signed_area<T: Scalar>(a: Point<T>, b: Point<T>, c: Point<T>) -> T {
    ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])) * T::lit(0.5)
}

fn dist<T: Scalar>(a: Point<T>, b: Point<T>) -> T {
    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Cell-wise region labels.
///
/// Label `0` is the default region; rectangle regions are numbered from 1 in
/// the order they are given. A cell belongs to a rectangle when its centroid
/// lies inside; all three vertices must then lie in the closed rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionIndicator {
    labels: Vec<usize>,
    names: Vec<String>,
}

impl RegionIndicator {
    pub fn uniform(num_cells: usize, name: impl Into<String>) -> Self {
        Self {
            labels: vec![0; num_cells],
            names: vec![name.into()],
        }
    }

    pub fn from_rects<T: Scalar>(
        mesh: &Mesh<T>,
        default_name: impl Into<String>,
        regions: &[(String, Rect<T>)],
    ) -> Result<Self> {
        let tol = mesh.h_max() * T::lit(1e-9);
        let mut labels = vec![0; mesh.num_cells()];
        for (c, label) in labels.iter_mut().enumerate() {
            let centroid = mesh.cell_centroid(c);
            for (ri, (name, rect)) in regions.iter().enumerate() {
                if rect.contains_open(centroid) {
                    if !mesh
                        .cell_vertices(c)
                        .iter()
                        .all(|&v| rect.contains_closed(v, tol))
                    {
                        return Err(Error::StraddlingCell {
                            cell: c,
                            region: name.clone(),
                        });
                    }
                    *label = ri + 1;
                    break;
                }
            }
        }
        let mut names = vec![default_name.into()];
        names.extend(regions.iter().map(|(n, _)| n.clone()));
        Ok(Self { labels, names })
    }

    pub fn from_fn<T: Scalar>(
        mesh: &Mesh<T>,
        names: Vec<String>,
        f: impl Fn(Point<T>) -> usize,
    ) -> Self {
        let labels = (0..mesh.num_cells())
            .map(|c| f(mesh.cell_centroid(c)))
            .collect();
        Self { labels, names }
    }

    pub fn label(&self, cell: usize) -> usize {
        self.labels[cell]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn num_cells(&self) -> usize {
        self.labels.len()
    }
}
