//! Boundary-fitted triangulations of the subgraph `SG_h` and the discrete
//! graph area of piecewise-linear lifts.
//!
//! The mesh is a terrain-following stretch of a uniform reference grid:
//! column `i` sits at `t_i`, and the reference ordinate `s` in `[-1, 1]` is
//! mapped to `w2 = -1 + (s + 1)(h(t_i) + 1) / 2`. The cell diagonals flip
//! direction at the middle column so that the triangulation mirrors onto
//! itself under `w1 -> width - w1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ConvexProfile, HalfProfile};
use crate::scalar::{real, CompensatedSum, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundaryTag {
    Interior,
    LateralLeft,
    LateralRight,
    Bottom,
    Graph,
}

#[derive(Clone, Debug)]
pub struct FittedMesh<T> {
    pub n1: usize,
    pub n2: usize,
    /// Extent of the mesh in `w1` (either `2l` or `l`).
    pub width: T,
    pub vertices: Vec<[T; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub tags: Vec<BoundaryTag>,
    /// Column abscissas `t_i`.
    pub column_x: Vec<T>,
    /// Profile value at each column (the graph boundary height).
    pub column_top: Vec<T>,
    /// Whether the right edge is a free symmetry seam (half meshes) rather
    /// than a Dirichlet wall.
    pub right_edge_free: bool,
}

impl<T: Real> FittedMesh<T> {
    #[inline]
    pub fn vertex_index(&self, i: usize, j: usize) -> usize {
        i * (self.n2 + 1) + j
    }

    pub fn n_vertices(&self) -> usize {
        (self.n1 + 1) * (self.n2 + 1)
    }

    pub fn planar_area(&self) -> T {
        let mut acc = CompensatedSum::new();
        for t in &self.triangles {
            let p = self.vertices[t[0]];
            let q = self.vertices[t[1]];
            let r = self.vertices[t[2]];
            let cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
            acc.add(cross / real(2.0));
        }
        acc.value()
    }

    pub fn min_triangle_area(&self) -> T {
        let mut min = T::infinity();
        for t in &self.triangles {
            let p = self.vertices[t[0]];
            let q = self.vertices[t[1]];
            let r = self.vertices[t[2]];
            let cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
            min = min.min(cross / real(2.0));
        }
        min
    }
}

/// Nodal values on a mesh; the discrete stand-in for `psi`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction<T> {
    pub values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn zeros(mesh: &FittedMesh<T>) -> Self {
        Self { values: vec![T::zero(); mesh.n_vertices()] }
    }

    pub fn from_fn(mesh: &FittedMesh<T>, f: impl Fn(T, T) -> T) -> Self {
        Self { values: mesh.vertices.iter().map(|v| f(v[0], v[1])).collect() }
    }

    pub fn check_len(&self, mesh: &FittedMesh<T>) -> Result<()> {
        if self.values.len() != mesh.n_vertices() {
            return Err(Error::SizeMismatch {
                expected: mesh.n_vertices(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max)
    }
}

fn tag_for<T: Real>(
    i: usize,
    j: usize,
    n1: usize,
    n2: usize,
    right_edge_free: bool,
) -> BoundaryTag {
    let _ = std::marker::PhantomData::<T>;
    // Graph row wins at the top of the lateral walls (the profile endpoint
    // belongs to the graph and carries the zero trace); the bottom row wins
    // over the free seam of half meshes, whose corner is still Dirichlet.
    if j == n2 {
        return BoundaryTag::Graph;
    }
    if j == 0 {
        return BoundaryTag::Bottom;
    }
    if i == 0 {
        return BoundaryTag::LateralLeft;
    }
    if i == n1 {
        return if right_edge_free { BoundaryTag::Interior } else { BoundaryTag::LateralRight };
    }
    BoundaryTag::Interior
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum DiagonalRule {
    /// Flip the cell diagonal at the middle column; the triangulation is
    /// invariant under the domain mirror (used for doubled meshes).
    MirrorAtMiddle,
    /// One diagonal direction everywhere; half meshes use this so that they
    /// coincide triangle-for-triangle with the left half of their doubling.
    AllBackslash,
}

fn build_mesh_from_columns<T: Real>(
    width: T,
    tops: Vec<T>,
    n1: usize,
    n2: usize,
    right_edge_free: bool,
    diagonals: DiagonalRule,
) -> Result<FittedMesh<T>> {
    if tops.iter().any(|&h| h <= -T::one()) {
        return Err(Error::DegenerateDomain);
    }
    let mut column_x = Vec::with_capacity(n1 + 1);
    for i in 0..=n1 {
        column_x.push(width * real::<T>(i as f64) / real::<T>(n1 as f64));
    }
    let mut vertices = Vec::with_capacity((n1 + 1) * (n2 + 1));
    let mut tags = Vec::with_capacity((n1 + 1) * (n2 + 1));
    for i in 0..=n1 {
        let span = tops[i] + T::one();
        for j in 0..=n2 {
            let frac = real::<T>(j as f64) / real::<T>(n2 as f64);
            let w2 = if j == n2 { tops[i] } else { -T::one() + frac * span };
            vertices.push([column_x[i], w2]);
            tags.push(tag_for::<T>(i, j, n1, n2, right_edge_free));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n1 * n2);
    let idx = |i: usize, j: usize| i * (n2 + 1) + j;
    for i in 0..n1 {
        let backslash = match diagonals {
            DiagonalRule::MirrorAtMiddle => 2 * i < n1,
            DiagonalRule::AllBackslash => true,
        };
        for j in 0..n2 {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            if backslash {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    Ok(FittedMesh {
        n1,
        n2,
        width,
        vertices,
        triangles,
        tags,
        column_x,
        column_top: tops,
        right_edge_free,
    })
}

fn sample_profile<T: Real>(values: &[T], n1: usize) -> Vec<T> {
    let n = values.len() - 1;
    if n == n1 {
        return values.to_vec();
    }
    // Piecewise-linear resample onto the mesh columns.
    (0..=n1)
        .map(|i| {
            let x = real::<T>(i as f64) * real::<T>(n as f64) / real::<T>(n1 as f64);
            let k = x.floor().to_usize().unwrap_or(0).min(n - 1);
            let frac = x - real::<T>(k as f64);
            values[k] + (values[k + 1] - values[k]) * frac
        })
        .collect()
}

/// Triangulate the subgraph of `h` over `[0, 2l]` with `2 n1 n2` triangles.
pub fn build_fitted_mesh<T: Real>(
    h: &ConvexProfile<T>,
    n1: usize,
    n2: usize,
) -> Result<FittedMesh<T>> {
    let tops = sample_profile(&h.values, n1);
    build_mesh_from_columns(real::<T>(2.0) * h.l, tops, n1, n2, false, DiagonalRule::MirrorAtMiddle)
}

/// Triangulate the subgraph of a half profile over `[0, l]`. The right edge
/// `w1 = l` is the symmetry seam of the doubled problem and is left free.
pub fn build_half_fitted_mesh<T: Real>(
    h: &HalfProfile<T>,
    n1: usize,
    n2: usize,
) -> Result<FittedMesh<T>> {
    let tops = sample_profile(&h.values, n1);
    build_mesh_from_columns(h.l, tops, n1, n2, true, DiagonalRule::AllBackslash)
}

/// Uniform mesh of the full rectangle `[0, l] x [-1, 1]` (the `h = 1` fit);
/// used by the convexification transforms and their oracles.
pub fn build_uniform_rectangle<T: Real>(l: T, n1: usize, n2: usize) -> FittedMesh<T> {
    build_mesh_from_columns(l, vec![T::one(); n1 + 1], n1, n2, true, DiagonalRule::AllBackslash)
        .expect("uniform rectangle is never degenerate")
}

/// Reflect nodal values from a half mesh onto the doubled mesh. Values are
/// copied bitwise, so the reflected function is exactly symmetric.
pub fn reflect_to_full<T: Real>(
    half: &FittedMesh<T>,
    psi: &GridFunction<T>,
    full: &FittedMesh<T>,
) -> Result<GridFunction<T>> {
    psi.check_len(half)?;
    let m = half.n1;
    if full.n1 != 2 * m || full.n2 != half.n2 {
        return Err(Error::SizeMismatch { expected: 2 * m, got: full.n1 });
    }
    let mut values = vec![T::zero(); full.n_vertices()];
    for i in 0..=full.n1 {
        let src = i.min(2 * m - i);
        for j in 0..=full.n2 {
            values[full.vertex_index(i, j)] = psi.values[half.vertex_index(src, j)];
        }
    }
    Ok(GridFunction { values })
}

/// Area of the graph of the piecewise-linear lift `(w1, w2) -> (w1, w2, psi)`.
/// Exact for the lifted triangulation, hence convex in the nodal values.
pub fn lift_area<T: Real>(mesh: &FittedMesh<T>, psi: &GridFunction<T>) -> Result<T> {
    psi.check_len(mesh)?;
    let mut acc = CompensatedSum::new();
    for t in &mesh.triangles {
        acc.add(lifted_triangle_area(mesh, &psi.values, t));
    }
    Ok(acc.value())
}

#[inline]
pub(crate) fn lifted_triangle_area<T: Real>(
    mesh: &FittedMesh<T>,
    values: &[T],
    tri: &[usize; 3],
) -> T {
    let p = mesh.vertices[tri[0]];
    let q = mesh.vertices[tri[1]];
    let r = mesh.vertices[tri[2]];
    let e1 = [q[0] - p[0], q[1] - p[1], values[tri[1]] - values[tri[0]]];
    let e2 = [r[0] - p[0], r[1] - p[1], values[tri[2]] - values[tri[0]]];
    let cx = e1[1] * e2[2] - e1[2] * e2[1];
    let cy = e1[2] * e2[0] - e1[0] * e2[2];
    let cz = e1[0] * e2[1] - e1[1] * e2[0];
    (cx * cx + cy * cy + cz * cz).sqrt() / real(2.0)
}

/// Write mesh and lift as Wavefront OBJ: vertices `(w1, w2, psi)`.
pub fn write_obj<T: Real, W: std::io::Write>(
    mesh: &FittedMesh<T>,
    psi: &GridFunction<T>,
    out: &mut W,
) -> Result<()> {
    psi.check_len(mesh)?;
    for (v, z) in mesh.vertices.iter().zip(&psi.values) {
        writeln!(out, "v {} {} {}", v[0], v[1], z)?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}
