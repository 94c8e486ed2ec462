//! Structured P1 triangulations of rectangles.
//!
//! Cells of the tensor grid are split into two triangles with the diagonal
//! direction alternating with cell parity, so the mesh carries no preferred
//! diagonal direction.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Left,
    Right,
    Bottom,
    Top,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [
        BoundaryTag::Left,
        BoundaryTag::Right,
        BoundaryTag::Bottom,
        BoundaryTag::Top,
    ];
}

impl FromStr for BoundaryTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(BoundaryTag::Left),
            "right" => Ok(BoundaryTag::Right),
            "bottom" => Ok(BoundaryTag::Bottom),
            "top" => Ok(BoundaryTag::Top),
            other => Err(Error::invalid(format!("unknown boundary tag '{other}'"))),
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            BoundaryTag::Left => "left",
            BoundaryTag::Right => "right",
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Top => "top",
        };
        f.write_str(s)
    }
}

/// Field component selector for degree-of-freedom queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    DisplacementX1,
    DisplacementX2,
    Damage,
}

/// Sorted, duplicate-free list of degree-of-freedom indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    pub fn new() -> Self {
        IndexSet(Vec::new())
    }

    /// Builds a set from arbitrary indices, sorting and removing duplicates.
    pub fn from_unsorted(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        IndexSet(indices)
    }

    /// Wraps an already strictly increasing list.
    pub fn from_sorted(indices: Vec<usize>) -> Result<Self> {
        if indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("index set must be strictly increasing"));
        }
        Ok(IndexSet(indices))
    }

    pub fn range(start: usize, end: usize) -> Self {
        IndexSet((start..end).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    /// Largest entry plus one, or zero for an empty set.
    pub fn bound(&self) -> usize {
        self.0.last().map_or(0, |&i| i + 1)
    }

    pub fn complement(&self, dim: usize) -> IndexSet {
        let mut out = Vec::with_capacity(dim.saturating_sub(self.len()));
        let mut it = self.0.iter().peekable();
        for i in 0..dim {
            if it.peek() == Some(&&i) {
                it.next();
            } else {
                out.push(i);
            }
        }
        IndexSet(out)
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        IndexSet::from_unsorted(v)
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => return false,
            }
        }
        true
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        IndexSet::from_unsorted(iter.into_iter().collect())
    }
}

/// Global numbering of the stacked unknowns: displacement components are
/// interleaved per vertex and followed by one damage unknown per vertex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub num_vertices: usize,
}

impl DofLayout {
    pub fn num_u(&self) -> usize {
        2 * self.num_vertices
    }

    pub fn num_alpha(&self) -> usize {
        self.num_vertices
    }

    pub fn total(&self) -> usize {
        3 * self.num_vertices
    }

    pub fn u(&self, vertex: usize, component: usize) -> usize {
        2 * vertex + component
    }

    pub fn alpha(&self, vertex: usize) -> usize {
        2 * self.num_vertices + vertex
    }

    pub fn dof(&self, vertex: usize, field: Field) -> usize {
        match field {
            Field::DisplacementX1 => self.u(vertex, 0),
            Field::DisplacementX2 => self.u(vertex, 1),
            Field::Damage => self.alpha(vertex),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x1_min: f64,
    pub x1_max: f64,
    pub x2_min: f64,
    pub x2_max: f64,
}

impl Rect {
    pub fn area(&self) -> f64 {
        (self.x1_max - self.x1_min) * (self.x2_max - self.x2_min)
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_facets: Vec<([usize; 2], BoundaryTag)>,
    pub rect: Rect,
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn layout(&self) -> DofLayout {
        DofLayout {
            num_vertices: self.vertices.len(),
        }
    }

    /// Signed area of triangle `t` (positive for counterclockwise ordering).
    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let [ax, ay] = self.vertices[a];
        let [bx, by] = self.vertices[b];
        let [cx, cy] = self.vertices[c];
        0.5 * ((bx - ax) * (cy - ay) - (cx - ax) * (by - ay))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        [(pa[0] + pb[0] + pc[0]) / 3.0, (pa[1] + pb[1] + pc[1]) / 3.0]
    }

    /// Longest edge of triangle `t`.
    pub fn diameter(&self, t: usize) -> f64 {
        let tri = self.triangles[t];
        (0..3)
            .map(|k| {
                let p = self.vertices[tri[k]];
                let q = self.vertices[tri[(k + 1) % 3]];
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Unique undirected edges as sorted vertex pairs.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut set = HashSet::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                set.insert([a.min(b), a.max(b)]);
            }
        }
        let mut edges: Vec<_> = set.into_iter().collect();
        edges.sort_unstable();
        edges
    }

    /// Vertex adjacency lists built from triangle edges.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for [a, b] in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// Sorted vertices lying on facets with the given tag.
    pub fn boundary_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_facets
            .iter()
            .filter(|(_, t)| *t == tag)
            .flat_map(|(e, _)| e.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn all_boundary_vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .boundary_facets
            .iter()
            .flat_map(|(e, _)| e.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Mean edge length, used for seeding and reporting.
    pub fn mean_edge_length(&self) -> f64 {
        let edges = self.edges();
        let sum: f64 = edges
            .iter()
            .map(|&[a, b]| {
                let (p, q) = (self.vertices[a], self.vertices[b]);
                ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
            })
            .sum();
        sum / edges.len() as f64
    }
}

/// Triangulation of the grid with strictly increasing coordinates `xs` and
/// `ys` (at least two of each); diagonals alternate in a checkerboard.
pub fn tensor_mesh(xs: &[f64], ys: &[f64]) -> Mesh {
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let idx = |i: usize, j: usize| j * (nx + 1) + i;

    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for &y in ys {
        for &x in xs {
            vertices.push([x, y]);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }

    let mut boundary_facets = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary_facets.push(([idx(i, 0), idx(i + 1, 0)], BoundaryTag::Bottom));
        boundary_facets.push(([idx(i, ny), idx(i + 1, ny)], BoundaryTag::Top));
    }
    for j in 0..ny {
        boundary_facets.push(([idx(0, j), idx(0, j + 1)], BoundaryTag::Left));
        boundary_facets.push(([idx(nx, j), idx(nx, j + 1)], BoundaryTag::Right));
    }

    Mesh {
        vertices,
        triangles,
        boundary_facets,
        rect: Rect {
            x1_min: xs[0],
            x1_max: xs[nx],
            x2_min: ys[0],
            x2_max: ys[ny],
        },
    }
}

fn uniform_coords(start: f64, length: f64, n: usize) -> Vec<f64> {
    let mut c: Vec<f64> = (0..=n).map(|k| start + length * k as f64 / n as f64).collect();
    c[n] = start + length;
    c
}

/// Uniform mesh of `[0, length] x [origin_x2, origin_x2 + height]`.
pub fn rect_mesh(length: f64, height: f64, h: f64, origin_x2: f64) -> Result<Mesh> {
    if !(length > 0.0 && height > 0.0 && h > 0.0) {
        return Err(Error::invalid(format!(
            "rectangle dimensions must be positive (L={length}, H={height}, h={h})"
        )));
    }
    let nx = (length / h).round() as usize;
    let ny = (height / h).round() as usize;
    if nx == 0 || ny == 0 {
        return Err(Error::invalid(format!(
            "element size {h} too large for a {length} x {height} rectangle"
        )));
    }
    Ok(tensor_mesh(
        &uniform_coords(0.0, length, nx),
        &uniform_coords(origin_x2, height, ny),
    ))
}

/// Row heights growing geometrically from `h_fine` (ratio at most
/// [`BAND_GROWTH`], capped at `h_coarse`) and summing exactly to `extent`.
fn graded_heights(extent: f64, h_fine: f64, h_coarse: f64) -> Vec<f64> {
    let mut heights = Vec::new();
    let mut sum = 0.0;
    let mut next = h_fine;
    while sum < extent * (1.0 - 1e-12) {
        heights.push(next);
        sum += next;
        next = (next * BAND_GROWTH).min(h_coarse);
    }
    let scale = extent / sum;
    heights.iter_mut().for_each(|x| *x *= scale);
    heights
}

pub const BAND_GROWTH: f64 = 1.3;

/// Mesh of `[0, length] x [-height/2, height/2]` that is uniformly fine in
/// the band `|x2| <= band_halfwidth` and vertically graded outside it.
pub fn banded_rect_mesh(
    length: f64,
    height: f64,
    h_fine: f64,
    h_coarse: f64,
    band_halfwidth: f64,
) -> Result<Mesh> {
    if !(length > 0.0 && height > 0.0 && h_fine > 0.0 && band_halfwidth > 0.0) {
        return Err(Error::invalid("banded mesh dimensions must be positive"));
    }
    if h_coarse < h_fine {
        return Err(Error::invalid(format!(
            "coarse size {h_coarse} is smaller than fine size {h_fine}"
        )));
    }
    if band_halfwidth >= 0.5 * height {
        return rect_mesh(length, height, h_fine, -0.5 * height);
    }

    let nx = ((length / h_fine) - 1e-9).ceil().max(1.0) as usize;
    let xs = uniform_coords(0.0, length, nx);

    // an even count keeps x2 = 0 on a grid line
    let n_band = 2 * ((band_halfwidth / h_fine) - 1e-9).ceil().max(1.0) as usize;
    let band = uniform_coords(-band_halfwidth, 2.0 * band_halfwidth, n_band);
    let outer = graded_heights(0.5 * height - band_halfwidth, h_fine, h_coarse);

    let mut ys = Vec::with_capacity(band.len() + 2 * outer.len());
    let mut y = -band_halfwidth;
    let mut below = Vec::with_capacity(outer.len());
    for dh in &outer {
        y -= dh;
        below.push(y);
    }
    *below.last_mut().unwrap() = -0.5 * height;
    ys.extend(below.iter().rev());
    ys.extend_from_slice(&band);
    let mut y = band_halfwidth;
    for dh in &outer {
        y += dh;
        ys.push(y);
    }
    *ys.last_mut().unwrap() = 0.5 * height;

    Ok(tensor_mesh(&xs, &ys))
}

/// Global indices of `field` on every vertex of the facets tagged `tag`.
pub fn boundary_dofs(mesh: &Mesh, tag: BoundaryTag, field: Field) -> IndexSet {
    let layout = mesh.layout();
    mesh.boundary_vertices(tag)
        .into_iter()
        .map(|v| layout.dof(v, field))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euler(mesh: &Mesh) -> i64 {
        mesh.num_vertices() as i64 - mesh.edges().len() as i64 + mesh.num_triangles() as i64
    }

    #[test]
    fn single_cell() {
        let m = rect_mesh(1.0, 1.0, 1.0, 0.0).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_triangles(), 2);
        assert_eq!(m.boundary_facets.len(), 4);
    }

    #[test]
    fn counting() {
        let m = rect_mesh(2.0, 1.0, 0.5, 0.0).unwrap();
        assert_eq!(m.num_vertices(), 15);
        assert_eq!(m.num_triangles(), 16);
        assert_eq!(euler(&m), 1);
    }

    #[test]
    fn area_partition() {
        let m = rect_mesh(2.0, 1.0, 0.1, 0.0).unwrap();
        assert!((m.total_area() - 2.0).abs() < 1e-12);
        assert!((0..m.num_triangles()).all(|t| m.signed_area(t) > 0.0));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(rect_mesh(0.0, 1.0, 0.1, 0.0).is_err());
        assert!(rect_mesh(1.0, -1.0, 0.1, 0.0).is_err());
        assert!(rect_mesh(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn edge_sharing() {
        let m = rect_mesh(1.0, 0.6, 0.2, 0.0).unwrap();
        let mut count = std::collections::HashMap::new();
        for tri in &m.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *count.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        let boundary: HashSet<[usize; 2]> = m
            .boundary_facets
            .iter()
            .map(|(e, _)| [e[0].min(e[1]), e[0].max(e[1])])
            .collect();
        for (e, c) in count {
            if boundary.contains(&e) {
                assert_eq!(c, 1);
            } else {
                assert_eq!(c, 2);
            }
        }
    }

    #[test]
    fn boundary_dof_queries() {
        let m = rect_mesh(1.0, 1.0, 1.0, 0.0).unwrap();
        let left = boundary_dofs(&m, BoundaryTag::Left, Field::DisplacementX1);
        assert_eq!(left.len(), 2);

        let all: HashSet<usize> = BoundaryTag::ALL
            .iter()
            .flat_map(|&t| m.boundary_vertices(t))
            .collect();
        assert_eq!(all.len(), m.all_boundary_vertices().len());

        // vertex 0 is the (0, 0) corner
        assert!(m.boundary_vertices(BoundaryTag::Left).contains(&0));
        assert!(m.boundary_vertices(BoundaryTag::Bottom).contains(&0));

        let x1 = boundary_dofs(&m, BoundaryTag::Top, Field::DisplacementX1);
        let x2 = boundary_dofs(&m, BoundaryTag::Top, Field::DisplacementX2);
        let a = boundary_dofs(&m, BoundaryTag::Top, Field::Damage);
        assert!(x1.is_disjoint(&x2) && x1.is_disjoint(&a) && x2.is_disjoint(&a));
    }

    #[test]
    fn unknown_tag() {
        assert!("front".parse::<BoundaryTag>().is_err());
        assert_eq!("left".parse::<BoundaryTag>().unwrap(), BoundaryTag::Left);
    }

    #[test]
    fn degenerate_band_is_uniform() {
        let b = banded_rect_mesh(2.0, 1.0, 0.1, 0.5, 0.5).unwrap();
        let r = rect_mesh(2.0, 1.0, 0.1, -0.5).unwrap();
        assert_eq!(b.num_vertices(), r.num_vertices());
    }

    #[test]
    fn band_resolution_and_savings() {
        let (hf, bhw) = (0.02, 0.1);
        let b = banded_rect_mesh(2.0, 1.0, hf, 5.0 * hf, bhw).unwrap();
        for t in 0..b.num_triangles() {
            let ys: Vec<f64> = b.triangles[t].iter().map(|&v| b.vertices[v][1]).collect();
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if hi >= -bhw - 1e-12 && lo <= bhw + 1e-12 {
                assert!(b.diameter(t) <= hf * 2f64.sqrt() * (1.0 + 1e-9));
            }
            assert!(b.signed_area(t) > 0.0);
        }
        let uniform = rect_mesh(2.0, 1.0, hf, -0.5).unwrap();
        assert!(b.num_vertices() < uniform.num_vertices());
        assert!((b.total_area() - 2.0).abs() < 1e-12 * 2.0);
        assert_eq!(euler(&b), 1);
    }

    #[test]
    fn band_growth_ratio() {
        let b = banded_rect_mesh(1.0, 1.0, 0.01, 0.1, 0.05).unwrap();
        let mut ys: Vec<f64> = b.vertices.iter().map(|p| p[1]).collect();
        ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ys.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let heights: Vec<f64> = ys.windows(2).map(|w| w[1] - w[0]).collect();
        let upper: Vec<f64> = ys
            .windows(2)
            .filter(|w| w[0] >= 0.05 - 1e-12)
            .map(|w| w[1] - w[0])
            .collect();
        for w in upper.windows(2) {
            assert!(w[1] / w[0] <= BAND_GROWTH + 1e-9);
        }
        assert!(heights.iter().all(|&dh| dh <= 0.1 + 1e-12));
    }

    #[test]
    fn index_set_ops() {
        let s = IndexSet::from_unsorted(vec![5, 1, 3, 3]);
        assert_eq!(s.as_slice(), &[1, 3, 5]);
        assert_eq!(s.complement(6).as_slice(), &[0, 2, 4]);
        assert!(IndexSet::from_sorted(vec![1, 1]).is_err());
        assert!(s.contains(3) && !s.contains(4));
    }
}
