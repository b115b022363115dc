//! Polytopes: brute-force facet enumeration, the full face lattice with
//! per-face direction frames and volumes, and normal-cone machinery.
//!
//! Everything that enters a measure estimate is computed from vertex
//! *differences*, never absolute coordinates, so translations that are exact
//! in floating point (integer data, integer shifts) leave estimates
//! bit-identical.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{ball_constants, sample_sphere, StreamRng};
use crate::linalg::{orthonormal_frame_of, Subspace};

/// Default cap on the number of hull vertices accepted by [`build_polytope`].
/// Facet enumeration is a brute-force scan over vertex subsets, so the cost
/// grows as C(V, n); raise the cap explicitly for large approximation hulls.
pub const DEFAULT_VERTEX_LIMIT: usize = 64;

/// Relative tolerance for all incidence decisions.
pub const INCIDENCE_TOL: f64 = 1e-9;

/// A facet: unit outward normal, supporting offset, incident vertices.
#[derive(Clone, Debug)]
pub struct Facet {
    pub normal: DVector<f64>,
    pub offset: f64,
    pub vertex_ids: Vec<usize>,
}

/// A face of the lattice, with the data the evaluation engines need.
#[derive(Clone, Debug)]
pub struct Face {
    pub dim: usize,
    /// Sorted indices into the polytope's vertex list.
    pub vertex_ids: Vec<usize>,
    /// A point in the relative interior (the vertex centroid).
    pub basepoint: DVector<f64>,
    /// The linear space parallel to the face.
    pub direction: Subspace,
    /// ℓ-dimensional volume; vol_0 := 1.
    pub volume: f64,
}

/// A full-dimensional convex polytope with its face lattice.
#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<DVector<f64>>,
    facets: Vec<Facet>,
    /// lattice[ℓ] lists the ℓ-faces, 0 ≤ ℓ ≤ n−1, sorted by vertex ids.
    lattice: Vec<Vec<Face>>,
    /// max_j ‖x_j − x_0‖; the translation-invariant length scale used by
    /// every tolerance decision.
    scale: f64,
}

#[derive(Serialize, Deserialize)]
struct PolytopeJson {
    vertices: Vec<Vec<f64>>,
}

impl Polytope {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// All ℓ-faces.
    pub fn faces(&self, dim: usize) -> &[Face] {
        &self.lattice[dim]
    }

    pub fn face_counts(&self) -> Vec<usize> {
        self.lattice.iter().map(|l| l.len()).collect()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Σ_ℓ (−1)^ℓ #faces(ℓ), which must equal 1 + (−1)^{n−1}.
    pub fn euler_characteristic(&self) -> i64 {
        self.lattice
            .iter()
            .enumerate()
            .map(|(l, faces)| if l % 2 == 0 { faces.len() as i64 } else { -(faces.len() as i64) })
            .sum()
    }

    /// Outward unit normal of a facet-level face.
    pub fn outward_normal(&self, face: &Face) -> Result<DVector<f64>> {
        if face.dim + 1 != self.dim {
            return Err(Error::invalid("outward normals exist only for facets"));
        }
        let comp = crate::linalg::complement(&face.direction);
        let mut normal = comp.column_vector();
        let anchor = &self.vertices[face.vertex_ids[0]];
        let in_face: HashSet<usize> = face.vertex_ids.iter().copied().collect();
        let outside = (0..self.vertices.len())
            .find(|j| !in_face.contains(j))
            .ok_or_else(|| Error::inconsistent("facet contains every vertex"))?;
        if normal.dot(&(&self.vertices[outside] - anchor)) > 0.0 {
            normal = -normal;
        }
        Ok(normal)
    }

    pub fn to_json(&self) -> String {
        let raw = PolytopeJson {
            vertices: self
                .vertices
                .iter()
                .map(|v| v.iter().copied().collect())
                .collect(),
        };
        serde_json::to_string(&raw).expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Polytope> {
        Self::from_json_with_limit(s, DEFAULT_VERTEX_LIMIT)
    }

    pub fn from_json_with_limit(s: &str, limit: usize) -> Result<Polytope> {
        let raw: PolytopeJson = serde_json::from_str(s)
            .map_err(|e| Error::invalid(format!("malformed polytope JSON: {e}")))?;
        let verts: Vec<DVector<f64>> = raw
            .vertices
            .iter()
            .map(|v| DVector::from_column_slice(v))
            .collect();
        build_polytope_with_limit(&verts, limit)
    }
}

trait ColumnVector {
    fn column_vector(&self) -> DVector<f64>;
}

impl ColumnVector for Subspace {
    fn column_vector(&self) -> DVector<f64> {
        self.frame().column(0).into_owned()
    }
}

/// Lexicographic iteration over k-subsets of 0..n_items without allocation.
fn for_each_combination(n_items: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n_items {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n_items - (k - i) {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Determinant of the m×m matrix stored row-major in `buf`, by partial-pivot
/// elimination. Destroys `buf`.
fn small_det(buf: &mut [f64], m: usize) -> f64 {
    let mut det = 1.0;
    for col in 0..m {
        let mut pivot = col;
        for r in col + 1..m {
            if buf[r * m + col].abs() > buf[pivot * m + col].abs() {
                pivot = r;
            }
        }
        let pv = buf[pivot * m + col];
        if pv == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..m {
                buf.swap(col * m + c, pivot * m + c);
            }
            det = -det;
        }
        det *= pv;
        for r in col + 1..m {
            let factor = buf[r * m + col] / pv;
            if factor != 0.0 {
                for c in col..m {
                    buf[r * m + c] -= factor * buf[col * m + c];
                }
            }
        }
    }
    det
}

/// Normal of the hyperplane spanned by the rows of `diffs` ((n−1)·n,
/// row-major), via the generalized cross product (cofactor expansion).
fn hyperplane_normal(diffs: &[f64], n: usize, scratch: &mut [f64]) -> Vec<f64> {
    let m = n - 1;
    let mut normal = vec![0.0; n];
    for drop in 0..n {
        for r in 0..m {
            let mut cc = 0;
            for c in 0..n {
                if c == drop {
                    continue;
                }
                scratch[r * m + cc] = diffs[r * n + c];
                cc += 1;
            }
        }
        let minor = small_det(scratch, m);
        normal[drop] = if drop % 2 == 0 { minor } else { -minor };
    }
    normal
}

struct FacetScan {
    /// Sorted incident vertex ids and the outward normal.
    facets: Vec<(Vec<usize>, DVector<f64>)>,
    /// Vertices incident to no facet (strictly interior points).
    orphans: Vec<usize>,
}

/// Brute force over vertex n-subsets spanning supporting hyperplanes.
fn enumerate_facets(verts: &[DVector<f64>], tol_abs: f64) -> Result<FacetScan> {
    let n = verts[0].len();
    let nv = verts.len();
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    let mut facets: Vec<(Vec<usize>, DVector<f64>)> = Vec::new();
    let mut on_facet = vec![false; nv];
    let mut diffs = vec![0.0; (n - 1) * n];
    let mut scratch = vec![0.0; (n - 1) * (n - 1)];
    let mut dots = vec![0.0; nv];

    for_each_combination(nv, n, |combo| {
        let anchor = &verts[combo[0]];
        for (r, &ci) in combo[1..].iter().enumerate() {
            for c in 0..n {
                diffs[r * n + c] = verts[ci][c] - anchor[c];
            }
        }
        let raw = hyperplane_normal(&diffs, n, &mut scratch);
        let norm: f64 = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= tol_abs {
            return; // affinely dependent subset
        }
        let normal: Vec<f64> = raw.iter().map(|x| x / norm).collect();
        let mut has_pos = false;
        let mut has_neg = false;
        for (j, v) in verts.iter().enumerate() {
            let mut d = 0.0;
            for c in 0..n {
                d += normal[c] * (v[c] - anchor[c]);
            }
            dots[j] = d;
            if d > tol_abs {
                has_pos = true;
            } else if d < -tol_abs {
                has_neg = true;
            }
            if has_pos && has_neg {
                return; // cuts through the hull
            }
        }
        let incident: Vec<usize> = (0..nv).filter(|&j| dots[j].abs() <= tol_abs).collect();
        if seen.insert(incident.clone()) {
            let sign = if has_pos { -1.0 } else { 1.0 };
            let nvec = DVector::from_iterator(n, normal.iter().map(|&x| sign * x));
            for &j in &incident {
                on_facet[j] = true;
            }
            facets.push((incident, nvec));
        }
    });

    if facets.is_empty() {
        return Err(Error::invalid("no supporting hyperplanes found"));
    }
    let orphans = (0..nv).filter(|&j| !on_facet[j]).collect();
    Ok(FacetScan { facets, orphans })
}

fn dedup_vertices(input: &[DVector<f64>], tol_abs: f64) -> Vec<DVector<f64>> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    for v in input {
        if !out.iter().any(|w| (w - v).norm() <= tol_abs) {
            out.push(v.clone());
        }
    }
    out
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn is_subset_sorted(small: &[usize], big: &[usize]) -> bool {
    let mut j = 0;
    for &s in small {
        while j < big.len() && big[j] < s {
            j += 1;
        }
        if j == big.len() || big[j] != s {
            return false;
        }
        j += 1;
    }
    true
}

/// Direction frame of a face, from differences against its first vertex.
fn face_direction(verts: &[DVector<f64>], ids: &[usize]) -> Result<Subspace> {
    let n = verts[0].len();
    if ids.len() <= 1 {
        return Ok(Subspace::empty(n));
    }
    let anchor = &verts[ids[0]];
    let cols: Vec<DVector<f64>> = ids[1..].iter().map(|&i| &verts[i] - anchor).collect();
    orthonormal_frame_of(&DMatrix::from_columns(&cols))
}

/// Builds a polytope from hull vertices with the default vertex cap.
pub fn build_polytope(vertices: &[DVector<f64>]) -> Result<Polytope> {
    build_polytope_with_limit(vertices, DEFAULT_VERTEX_LIMIT)
}

/// Builds a polytope from hull vertices with an explicit vertex cap.
pub fn build_polytope_with_limit(vertices: &[DVector<f64>], limit: usize) -> Result<Polytope> {
    if vertices.is_empty() {
        return Err(Error::invalid("no vertices"));
    }
    let n = vertices[0].len();
    if n == 0 {
        return Err(Error::invalid("empty ambient dimension"));
    }
    if vertices.iter().any(|v| v.len() != n) {
        return Err(Error::invalid("vertices of mixed dimensions"));
    }
    if vertices.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
        return Err(Error::invalid("non-finite vertex coordinate"));
    }
    let scale0 = vertices
        .iter()
        .map(|v| (v - &vertices[0]).norm())
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let mut verts = dedup_vertices(vertices, INCIDENCE_TOL * scale0);
    if verts.len() > limit {
        return Err(Error::capacity(format!(
            "{} vertices exceeds the limit {limit}",
            verts.len()
        )));
    }
    if verts.len() < n + 1 {
        return Err(Error::invalid(format!(
            "need at least {} affinely independent vertices, got {}",
            n + 1,
            verts.len()
        )));
    }
    let dir = face_direction(&verts, &(0..verts.len()).collect::<Vec<_>>())?;
    if dir.dim() != n {
        return Err(Error::invalid(format!(
            "vertex set has affine dimension {} in ambient dimension {n}",
            dir.dim()
        )));
    }

    let scale = verts
        .iter()
        .map(|v| (v - &verts[0]).norm())
        .fold(0.0f64, f64::max);
    let tol_abs = INCIDENCE_TOL * scale;
    let mut scan = enumerate_facets(&verts, tol_abs)?;
    if !scan.orphans.is_empty() {
        // strictly interior input points: drop and rescan once
        let orphan_set: HashSet<usize> = scan.orphans.iter().copied().collect();
        verts = verts
            .iter()
            .enumerate()
            .filter(|(j, _)| !orphan_set.contains(j))
            .map(|(_, v)| v.clone())
            .collect();
        scan = enumerate_facets(&verts, tol_abs)?;
        if !scan.orphans.is_empty() {
            return Err(Error::inconsistent("interior points survived a rescan"));
        }
    }

    // Facet records and the top lattice level
    let mut facets = Vec::new();
    for (ids, normal) in &scan.facets {
        let offset = normal.dot(&verts[ids[0]]);
        facets.push(Facet {
            normal: normal.clone(),
            offset,
            vertex_ids: ids.clone(),
        });
    }
    facets.sort_by(|a, b| a.vertex_ids.cmp(&b.vertex_ids));

    let mut lattice: Vec<Vec<Face>> = vec![Vec::new(); n];
    for facet in &facets {
        let direction = face_direction(&verts, &facet.vertex_ids)?;
        if direction.dim() != n - 1 {
            return Err(Error::inconsistent(format!(
                "facet with affine dimension {} in ambient dimension {n}",
                direction.dim()
            )));
        }
        lattice[n - 1].push(Face {
            dim: n - 1,
            vertex_ids: facet.vertex_ids.clone(),
            basepoint: DVector::zeros(n), // filled below
            direction,
            volume: 0.0,
        });
    }

    // Top-down: every ℓ-face is the intersection of an (ℓ+1)-face with a facet.
    for l in (0..n.saturating_sub(1)).rev() {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut level = Vec::new();
        for parent_idx in 0..lattice[l + 1].len() {
            let parent_ids = lattice[l + 1][parent_idx].vertex_ids.clone();
            for facet in &facets {
                let ids = intersect_sorted(&parent_ids, &facet.vertex_ids);
                if ids.is_empty() || ids.len() == parent_ids.len() {
                    continue;
                }
                if !seen.insert(ids.clone()) {
                    continue;
                }
                let direction = face_direction(&verts, &ids)?;
                if direction.dim() != l {
                    continue;
                }
                level.push(Face {
                    dim: l,
                    vertex_ids: ids,
                    basepoint: DVector::zeros(n),
                    direction,
                    volume: 0.0,
                });
            }
        }
        level.sort_by(|a, b| a.vertex_ids.cmp(&b.vertex_ids));
        lattice[l] = level;
    }
    lattice[n - 1].sort_by(|a, b| a.vertex_ids.cmp(&b.vertex_ids));

    // Basepoints (vertex centroids) and volumes, bottom-up via pyramid
    // decomposition over the sub-lattice.
    for l in 0..n {
        let (below, level) = {
            let (a, b) = lattice.split_at_mut(l);
            (a.last(), &mut b[0])
        };
        for face in level.iter_mut() {
            let anchor = verts[face.vertex_ids[0]].clone();
            let mut centroid_rel = DVector::zeros(n);
            for &i in &face.vertex_ids {
                centroid_rel += &verts[i] - &anchor;
            }
            centroid_rel /= face.vertex_ids.len() as f64;
            face.basepoint = &anchor + &centroid_rel;
            if l == 0 {
                face.volume = 1.0;
                continue;
            }
            let below = below.expect("lower level exists for l >= 1");
            let mut vol = 0.0;
            for sub in below.iter() {
                if !is_subset_sorted(&sub.vertex_ids, &face.vertex_ids) {
                    continue;
                }
                // distance from the centroid to the affine hull of the subface
                let w = &centroid_rel - (&verts[sub.vertex_ids[0]] - &anchor);
                let proj = sub.direction.frame() * (sub.direction.frame().transpose() * &w);
                let height = (&w - proj).norm();
                let sub_vol = if l == 1 { 1.0 } else { sub.volume };
                vol += sub_vol * height;
            }
            face.volume = vol / l as f64;
            if face.volume <= 0.0 {
                return Err(Error::inconsistent(format!(
                    "nonpositive volume for a {l}-face"
                )));
            }
        }
    }

    Ok(Polytope {
        dim: n,
        vertices: verts,
        facets,
        lattice,
        scale,
    })
}

/// The built-in body generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardBody {
    /// conv{0, e_1, …, e_n}
    Simplex,
    /// [0,1]^n
    Cube,
    /// conv{±e_i}
    Cross,
    /// Convex hull of Gaussian points (extreme points only).
    RandomHull { points: usize },
}

pub fn standard_body(
    kind: StandardBody,
    n: usize,
    rng: Option<&mut StreamRng>,
) -> Result<Polytope> {
    if n == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let verts: Vec<DVector<f64>> = match kind {
        StandardBody::Simplex => {
            let mut v = vec![DVector::zeros(n)];
            for i in 0..n {
                let mut e = DVector::zeros(n);
                e[i] = 1.0;
                v.push(e);
            }
            v
        }
        StandardBody::Cube => (0..1usize << n)
            .map(|mask| DVector::from_fn(n, |i, _| ((mask >> i) & 1) as f64))
            .collect(),
        StandardBody::Cross => (0..n)
            .flat_map(|i| {
                let mut plus = DVector::zeros(n);
                plus[i] = 1.0;
                let mut minus = DVector::zeros(n);
                minus[i] = -1.0;
                [plus, minus]
            })
            .collect(),
        StandardBody::RandomHull { points } => {
            let rng = rng.ok_or_else(|| Error::invalid("random_hull needs an RNG stream"))?;
            if points < n + 1 {
                return Err(Error::invalid("random_hull needs at least n+1 points"));
            }
            let pts: Vec<DVector<f64>> = (0..points)
                .map(|_| crate::grassmann::sample::gaussian_vector(n, rng))
                .collect();
            extreme_points(&pts)?
        }
    };
    build_polytope(&verts)
}

/// A point is extreme iff it lies outside the hull of the others, decided by
/// recomputing the facets of the reduced set.
fn extreme_points(points: &[DVector<f64>]) -> Result<Vec<DVector<f64>>> {
    let _n = points[0].len();
    let n_dim = _n;
    let scale = points
        .iter()
        .map(|v| (v - &points[0]).norm())
        .fold(0.0f64, f64::max)
        .max(1e-30);
    let tol_abs = INCIDENCE_TOL * scale;
    let mut keep = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let others: Vec<DVector<f64>> = points
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, v)| v.clone())
            .collect();
        // a facet scan only decides membership for a full-dimensional rest
        let rest_rank = face_direction(&others, &(0..others.len()).collect::<Vec<_>>())
            .map(|d| d.dim())
            .unwrap_or(0);
        let inside = rest_rank == n_dim
            && match enumerate_facets(&others, tol_abs) {
                Ok(scan) => scan
                    .facets
                    .iter()
                    .all(|(ids, normal)| normal.dot(&(p - &others[ids[0]])) <= tol_abs),
                // degenerate reduced set ⇒ the point is certainly needed
                Err(_) => false,
            };
        if !inside {
            keep.push(points[i].clone());
        }
    }
    if keep.is_empty() {
        return Err(Error::invalid("no extreme points found"));
    }
    Ok(keep)
}

/// Maps vertices x ↦ s·g·x + t and rebuilds the lattice.
pub fn transform_body(
    p: &Polytope,
    g: &DMatrix<f64>,
    t: &DVector<f64>,
    s: f64,
) -> Result<Polytope> {
    let n = p.dim();
    if g.nrows() != n || g.ncols() != n || t.len() != n {
        return Err(Error::invalid("transform dimensions do not match the body"));
    }
    if !(s > 0.0) {
        return Err(Error::invalid("scale must be positive"));
    }
    let ortho_err = (g.transpose() * g - DMatrix::identity(n, n)).abs().max();
    if ortho_err > 1e-10 {
        return Err(Error::invalid(format!(
            "matrix is not orthogonal within 1e-10 (deviation {ortho_err:.2e})"
        )));
    }
    let verts: Vec<DVector<f64>> = p.vertices.iter().map(|x| (g * x) * s + t).collect();
    build_polytope_with_limit(&verts, verts.len())
}

/// Precomputed data for fast repeated normal-cone membership tests.
///
/// Membership of u in n(P,F) means: the maximum of ⟨u, x⟩ over the vertices
/// is attained, within tol·scale, exactly on F's vertex set. Dot products are
/// taken against vertex differences from F's anchor vertex.
pub struct ConeTester {
    diffs: DMatrix<f64>,
    membership: Vec<bool>,
    tol_abs: f64,
}

impl ConeTester {
    pub fn new(p: &Polytope, face: &Face, tol: f64) -> ConeTester {
        let n = p.dim();
        let nv = p.vertices.len();
        let anchor = &p.vertices[face.vertex_ids[0]];
        let diffs = DMatrix::from_fn(nv, n, |j, c| p.vertices[j][c] - anchor[c]);
        let mut membership = vec![false; nv];
        for &i in &face.vertex_ids {
            membership[i] = true;
        }
        ConeTester {
            diffs,
            membership,
            tol_abs: tol * p.scale(),
        }
    }

    pub fn contains(&self, u: &DVector<f64>) -> bool {
        let dots = &self.diffs * u;
        let max = dots.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let cut = max - self.tol_abs;
        dots.iter()
            .zip(&self.membership)
            .all(|(&d, &member)| (d >= cut) == member)
    }
}

/// Whether the support of P in direction u is attained exactly on face F.
pub fn normal_cone_contains(p: &Polytope, face: &Face, u: &DVector<f64>, tol: f64) -> bool {
    ConeTester::new(p, face, tol).contains(u)
}

/// Monte Carlo integral of g over the spherical normal cone n(P,F), with
/// respect to H^{n−1−ℓ}: samples u uniformly on the unit sphere of
/// F.direction^⊥ and weights by its total measure ω_{n−ℓ}. Facets (ℓ = n−1)
/// are evaluated exactly as a point mass on the outward normal.
pub fn integrate_normal_cone(
    p: &Polytope,
    face: &Face,
    g: impl Fn(&DVector<f64>) -> f64,
    samples: u64,
    rng: &mut StreamRng,
) -> Result<(f64, f64)> {
    let n = p.dim();
    if face.dim >= n {
        return Err(Error::invalid("face dimension must be below the ambient"));
    }
    if face.dim == n - 1 {
        return Ok((g(&p.outward_normal(face)?), 0.0));
    }
    let comp = crate::linalg::complement(&face.direction);
    let tester = ConeTester::new(p, face, INCIDENCE_TOL);
    let (_, omega) = ball_constants(n - face.dim)?;
    let mut acc = crate::exec::MeanAccumulator::default();
    for _ in 0..samples {
        let s = sample_sphere(n - face.dim, rng)?;
        let u = comp.frame() * s;
        let val = if tester.contains(&u) { g(&u) } else { 0.0 };
        acc.push(val);
    }
    Ok((omega * acc.mean(), omega * acc.std_error()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grassmann::RngStream;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn v(coords: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(coords)
    }

    #[test]
    fn cube_combinatorics() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        assert_eq!(cube.face_counts(), vec![8, 12, 6]);
        for edge in cube.faces(1) {
            assert_abs_diff_eq!(edge.volume, 1.0, epsilon = 1e-12);
        }
        for facet in cube.faces(2) {
            assert_abs_diff_eq!(facet.volume, 1.0, epsilon = 1e-12);
        }
        assert_eq!(cube.euler_characteristic(), 2);
    }

    #[test]
    fn cube_4d_counts() {
        let cube = standard_body(StandardBody::Cube, 4, None).unwrap();
        assert_eq!(cube.face_counts(), vec![16, 32, 24, 8]);
        assert_eq!(cube.euler_characteristic(), 0);
    }

    #[test]
    fn simplex_counts_are_binomial() {
        for n in [2usize, 3, 4] {
            let s = standard_body(StandardBody::Simplex, n, None).unwrap();
            for l in 0..n {
                let expect = crate::grassmann::binomial(n as u64 + 1, l as u64 + 1) as usize;
                assert_eq!(s.faces(l).len(), expect, "n={n} l={l}");
            }
        }
    }

    #[test]
    fn cross_polytope_facet_area() {
        let c = standard_body(StandardBody::Cross, 3, None).unwrap();
        assert_eq!(c.face_counts(), vec![6, 12, 8]);
        for f in c.faces(2) {
            assert_abs_diff_eq!(f.volume, 3f64.sqrt() / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn degenerate_input_is_rejected() {
        let flat = [v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[1.0, 1.0, 0.0])];
        assert!(build_polytope(&flat).is_err());
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let mut rng = RngStream::new(1).rng();
        let pts: Vec<DVector<f64>> = (0..70)
            .map(|_| crate::grassmann::sample::gaussian_vector(3, &mut rng))
            .collect();
        match build_polytope(&pts) {
            Err(Error::Capacity(_)) => {}
            other => panic!("expected capacity error, got {other:?}"),
        }
    }

    #[test]
    fn facet_inequalities_hold() {
        let s = standard_body(StandardBody::Simplex, 4, None).unwrap();
        for facet in s.facets() {
            for (j, x) in s.vertices().iter().enumerate() {
                let d = facet.normal.dot(x) - facet.offset;
                assert!(d <= 1e-9, "vertex above facet");
                if facet.vertex_ids.contains(&j) {
                    assert!(d.abs() <= 1e-9, "incident vertex off the hyperplane");
                }
            }
        }
    }

    #[test]
    fn random_hull_is_deterministic() {
        let a = standard_body(
            StandardBody::RandomHull { points: 20 },
            3,
            Some(&mut RngStream::new(42).rng()),
        )
        .unwrap();
        let b = standard_body(
            StandardBody::RandomHull { points: 20 },
            3,
            Some(&mut RngStream::new(42).rng()),
        )
        .unwrap();
        assert_eq!(a.vertices().len(), b.vertices().len());
        for (x, y) in a.vertices().iter().zip(b.vertices()) {
            assert_eq!(x, y);
        }
        assert_eq!(a.euler_characteristic(), 2);
    }

    #[test]
    fn transform_scales_volumes() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let g = DMatrix::identity(3, 3);
        let doubled = transform_body(&cube, &g, &v(&[0.0, 0.0, 0.0]), 2.0).unwrap();
        for e in doubled.faces(1) {
            assert_abs_diff_eq!(e.volume, 2.0, epsilon = 1e-12);
        }
        let translated = transform_body(&cube, &g, &v(&[1.0, 2.0, 3.0]), 1.0).unwrap();
        assert_eq!(translated.face_counts(), cube.face_counts());
        for (a, b) in translated.faces(2).iter().zip(cube.faces(2)) {
            assert_abs_diff_eq!(a.volume, b.volume, epsilon = 1e-12);
        }
        // reflection is an isometry
        let refl = DMatrix::from_diagonal(&v(&[-1.0, 1.0, 1.0]));
        let s = standard_body(StandardBody::Simplex, 3, None).unwrap();
        let rs = transform_body(&s, &refl, &v(&[0.0; 3]), 1.0).unwrap();
        assert_eq!(rs.face_counts(), s.face_counts());
        let tot: f64 = rs.faces(2).iter().map(|f| f.volume).sum();
        let tot0: f64 = s.faces(2).iter().map(|f| f.volume).sum();
        assert_abs_diff_eq!(tot, tot0, epsilon = 1e-10);
        // non-orthogonal matrices are rejected
        let shear = DMatrix::from_row_slice(3, 3, &[1.0, 0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(transform_body(&cube, &shear, &v(&[0.0; 3]), 1.0).is_err());
    }

    #[test]
    fn cone_membership_on_the_cube() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let corner = cube
            .faces(0)
            .iter()
            .find(|f| cube.vertices()[f.vertex_ids[0]] == v(&[1.0, 1.0, 1.0]))
            .unwrap();
        let u = v(&[1.0, 1.0, 1.0]).normalize();
        assert!(normal_cone_contains(&cube, corner, &u, INCIDENCE_TOL));
        let top = cube
            .faces(2)
            .iter()
            .find(|f| f.vertex_ids.iter().all(|&i| cube.vertices()[i][2] == 1.0))
            .unwrap();
        assert!(normal_cone_contains(&cube, top, &v(&[0.0, 0.0, 1.0]), INCIDENCE_TOL));
        assert!(!normal_cone_contains(&cube, top, &v(&[1.0, 0.0, 0.0]), INCIDENCE_TOL));
    }

    #[test]
    fn edge_cone_acceptance_is_a_quarter_circle() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let edge = &cube.faces(1)[0];
        let tester = ConeTester::new(&cube, edge, INCIDENCE_TOL);
        let comp = crate::linalg::complement(&edge.direction);
        let mut rng = RngStream::new(5).rng();
        let mut hits = 0u32;
        let total = 40_000u32;
        for _ in 0..total {
            let u = comp.frame() * sample_sphere(2, &mut rng).unwrap();
            if tester.contains(&u) {
                hits += 1;
            }
        }
        let frac = hits as f64 / total as f64;
        let se = (0.25 * 0.75 / total as f64).sqrt();
        assert!((frac - 0.25).abs() < 4.0 * se, "frac = {frac}");
    }

    #[test]
    fn cone_integrals_match_arc_and_solid_angle() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let mut rng = RngStream::new(17).rng();
        let edge = &cube.faces(1)[3];
        let (est, se) = integrate_normal_cone(&cube, edge, |_| 1.0, 40_000, &mut rng).unwrap();
        assert!((est - PI / 2.0).abs() < 4.0 * se, "edge cone {est} ± {se}");
        let vertex = &cube.faces(0)[2];
        let (est, se) = integrate_normal_cone(&cube, vertex, |_| 1.0, 40_000, &mut rng).unwrap();
        assert!((est - PI / 2.0).abs() < 4.0 * se, "vertex cone {est} ± {se}");
        // facet: exact point mass
        let facet = &cube.faces(2)[0];
        let (est, se) = integrate_normal_cone(&cube, facet, |_| 1.0, 10, &mut rng).unwrap();
        assert_eq!(se, 0.0);
        assert_abs_diff_eq!(est, 1.0);
    }

    #[test]
    fn vertex_cones_tile_the_sphere() {
        let mut rng = RngStream::new(23).rng();
        let hull = standard_body(StandardBody::RandomHull { points: 12 }, 3, Some(&mut rng)).unwrap();
        let mut total = 0.0;
        let mut var = 0.0;
        for vertex in hull.faces(0) {
            let (est, se) =
                integrate_normal_cone(&hull, vertex, |_| 1.0, 20_000, &mut rng).unwrap();
            total += est;
            var += se * se;
        }
        let omega3 = 4.0 * PI;
        assert!(
            (total - omega3).abs() < 4.0 * var.sqrt().max(1e-6),
            "cones sum to {total}, want {omega3}"
        );
    }

    #[test]
    fn rotation_commutes_with_normal_cones() {
        let mut rng = RngStream::new(31).rng();
        let s = standard_body(StandardBody::Simplex, 3, None).unwrap();
        let g = crate::grassmann::sample_rotation(3, &mut rng);
        let gs = transform_body(&s, &g, &v(&[0.0; 3]), 1.0).unwrap();
        for (face, gface) in s.faces(1).iter().zip(gs.faces(1)) {
            assert_eq!(face.vertex_ids, gface.vertex_ids);
            for _ in 0..50 {
                let u = sample_sphere(3, &mut rng).unwrap();
                let a = normal_cone_contains(&s, face, &u, 1e-7);
                let b = normal_cone_contains(&gs, gface, &(&g * &u), 1e-7);
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let cube = standard_body(StandardBody::Cube, 3, None).unwrap();
        let s = cube.to_json();
        let back = Polytope::from_json(&s).unwrap();
        assert_eq!(back.face_counts(), cube.face_counts());
        assert!(Polytope::from_json("{\"bad\":1}").is_err());
    }
}
