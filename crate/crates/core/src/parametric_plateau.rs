//! Parametric disc-type Plateau solver used to cross-validate the graph
//! solver: cotangent-Laplacian harmonic updates alternating with boundary
//! reparametrization along the input curve, with monotone area acceptance
//! and pinch detection for the Goldschmidt (two-disc) regime.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{pcg, CsrMatrix};
use crate::outer_optimizer::{minimize_over_profiles, OptimizerConfig};
use crate::scalar::{real, CompensatedSum, Real};

/// Closed polyline in 3-space with arc-length lookup.
#[derive(Clone, Debug)]
pub struct SpaceCurve<T> {
    pub points: Vec<[T; 3]>,
    /// Cumulative arc length at each vertex; last entry is the total length
    /// including the closing edge.
    cumulative: Vec<T>,
    /// True when the polyline follows the orientation of its construction
    /// (first circle positive, second circle reversed).
    pub positively_oriented: bool,
}

impl<T: Real> SpaceCurve<T> {
    pub fn from_points(points: Vec<[T; 3]>, positively_oriented: bool) -> Self {
        let n = points.len();
        let mut cumulative = Vec::with_capacity(n + 1);
        let mut acc = T::zero();
        cumulative.push(acc);
        for k in 0..n {
            let a = points[k];
            let b = points[(k + 1) % n];
            acc += dist3(a, b);
            cumulative.push(acc);
        }
        Self { points, cumulative, positively_oriented }
    }

    pub fn total_length(&self) -> T {
        *self.cumulative.last().unwrap()
    }

    /// Point at arc-length parameter `s` (wrapped into `[0, length)`).
    pub fn point_at(&self, s: T) -> [T; 3] {
        let len = self.total_length();
        let mut s = s % len;
        if s < T::zero() {
            s += len;
        }
        let mut lo = 0usize;
        let mut hi = self.points.len();
        while lo + 1 < hi {
            let mid = (lo + hi) / 2;
            if self.cumulative[mid] <= s {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let a = self.points[lo];
        let b = self.points[(lo + 1) % self.points.len()];
        let seg = self.cumulative[lo + 1] - self.cumulative[lo];
        if !(seg > T::zero()) {
            return a;
        }
        let t = (s - self.cumulative[lo]) / seg;
        [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t]
    }
}

fn dist3<T: Real>(a: [T; 3], b: [T; 3]) -> T {
    let d = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}

/// The self-overlapping boundary curve: the circle at `w1 = 0`, the top
/// segment out to `w1 = 2l`, the circle at `w1 = 2l` reversed, and the
/// segment back. The segment is traversed twice with opposite directions.
pub fn build_gamma<T: Real>(l: T, m: usize) -> Result<SpaceCurve<T>> {
    if m < 8 {
        return Err(Error::CurveTooCoarse { points_per_arc: m });
    }
    let two_l = real::<T>(2.0) * l;
    let mut points = Vec::with_capacity(4 * m);
    let tau = real::<T>(2.0) * T::PI();
    // first circle, starting and ending at (0, 1, 0)
    for k in 0..m {
        let th = tau * real::<T>(k as f64) / real::<T>(m as f64);
        points.push([T::zero(), th.cos(), th.sin()]);
    }
    points.push([T::zero(), T::one(), T::zero()]);
    // segment forward
    for j in 1..=m {
        let t = two_l * real::<T>(j as f64) / real::<T>(m as f64);
        points.push([t, T::one(), T::zero()]);
    }
    // second circle, reversed orientation, from (2l, 1, 0) back to itself
    for k in 1..=m {
        let th = -tau * real::<T>(k as f64) / real::<T>(m as f64);
        points.push([two_l, th.cos(), th.sin()]);
    }
    // segment backward; the closing edge returns to the start
    for j in (1..m).rev() {
        let t = two_l * real::<T>(j as f64) / real::<T>(m as f64);
        points.push([t, T::one(), T::zero()]);
    }
    Ok(SpaceCurve::from_points(points, true))
}

/// Triangulated disc mapped into 3-space. Built from concentric hexagonal
/// rings; the boundary loop is the outermost ring in angular order.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscMesh<T> {
    pub positions: Vec<[T; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<usize>,
    /// Arc-length parameter along the input curve per boundary vertex
    /// (empty for the ring-pair surfaces, whose rims never move).
    pub boundary_params: Vec<T>,
}

pub struct PlateauSolution<T> {
    pub mesh: DiscMesh<T>,
    pub area: T,
    pub degenerate: bool,
    pub iterations: usize,
}

fn ring_base(k: usize) -> usize {
    if k == 0 {
        0
    } else {
        1 + 3 * k * (k - 1)
    }
}

/// Reference disc triangulation with `6 K^2` triangles.
fn hex_disc(k_rings: usize) -> (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<usize>) {
    let k_rings = k_rings.max(2);
    let mut verts: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    for k in 1..=k_rings {
        let r = k as f64 / k_rings as f64;
        for j in 0..6 * k {
            let th = 2.0 * std::f64::consts::PI * j as f64 / (6 * k) as f64;
            verts.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut tris: Vec<[usize; 3]> = Vec::with_capacity(6 * k_rings * k_rings);
    for j in 0..6 {
        tris.push([0, 1 + j, 1 + (j + 1) % 6]);
    }
    // stitch consecutive rings by angular sweep
    for k in 1..k_rings {
        let (na, nb) = (6 * k, 6 * (k + 1));
        let (ba, bb) = (ring_base(k), ring_base(k + 1));
        let (mut i, mut j) = (0usize, 0usize);
        while i < na || j < nb {
            let fa = (i + 1) as f64 / na as f64;
            let fb = (j + 1) as f64 / nb as f64;
            if j == nb || (i < na && fa <= fb) {
                tris.push([ba + i % na, bb + j % nb, ba + (i + 1) % na]);
                i += 1;
            } else {
                tris.push([bb + j % nb, bb + (j + 1) % nb, ba + i % na]);
                j += 1;
            }
        }
    }
    let boundary: Vec<usize> = (0..6 * k_rings).map(|j| ring_base(k_rings) + j).collect();
    (verts, tris, boundary)
}

fn triangle_area3<T: Real>(p: [T; 3], q: [T; 3], r: [T; 3]) -> T {
    let e1 = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
    let e2 = [r[0] - p[0], r[1] - p[1], r[2] - p[2]];
    let c = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt() / real(2.0)
}

/// Area of the mapped triangulation, with multiplicity.
pub fn surface_area<T: Real>(positions: &[[T; 3]], triangles: &[[usize; 3]]) -> T {
    let mut acc = CompensatedSum::new();
    for t in triangles {
        acc.add(triangle_area3(positions[t[0]], positions[t[1]], positions[t[2]]));
    }
    acc.value()
}

/// Aspect quality `4 sqrt(3) A / (l1^2 + l2^2 + l3^2)`; 1 for equilateral.
fn triangle_quality<T: Real>(p: [T; 3], q: [T; 3], r: [T; 3]) -> T {
    let a = triangle_area3(p, q, r);
    let s = dist3(p, q).powi(2) + dist3(q, r).powi(2) + dist3(r, p).powi(2);
    if !(s > T::zero()) {
        return T::zero();
    }
    real::<T>(4.0) * real::<T>(3.0).sqrt() * a / s
}

/// Cotangent Laplacian rows of the current surface (no boundary handling).
fn cotan_rows<T: Real>(
    positions: &[[T; 3]],
    triangles: &[[usize; 3]],
) -> Vec<Vec<(usize, T)>> {
    let n = positions.len();
    let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
    let clamp = real::<T>(1e8);
    fn add<T: Real>(rows: &mut [Vec<(usize, T)>], a: usize, b: usize, w: T) {
        if let Some(e) = rows[a].iter_mut().find(|(c, _)| *c == b) {
            e.1 += w;
        } else {
            rows[a].push((b, w));
        }
    }
    for t in triangles {
        for corner in 0..3 {
            let o = t[corner];
            let a = t[(corner + 1) % 3];
            let b = t[(corner + 2) % 3];
            let u = [
                positions[a][0] - positions[o][0],
                positions[a][1] - positions[o][1],
                positions[a][2] - positions[o][2],
            ];
            let v = [
                positions[b][0] - positions[o][0],
                positions[b][1] - positions[o][1],
                positions[b][2] - positions[o][2],
            ];
            let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
            let cr = [
                u[1] * v[2] - u[2] * v[1],
                u[2] * v[0] - u[0] * v[2],
                u[0] * v[1] - u[1] * v[0],
            ];
            let cross_norm = (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt();
            let cot = if cross_norm > T::zero() {
                (dot / cross_norm).max(-clamp).min(clamp)
            } else {
                T::zero()
            };
            let w = cot / real(2.0);
            add(&mut rows, a, a, w);
            add(&mut rows, b, b, w);
            add(&mut rows, a, b, -w);
            add(&mut rows, b, a, -w);
        }
    }
    rows
}

/// Harmonic position update: solve the cotan system per coordinate with the
/// fixed vertices eliminated symmetrically (their couplings moved to the
/// right-hand side), warm-started at the current positions. Weights may be
/// computed on a different geometry than the one being solved (the first
/// update uses the reference disc, whose triangles are never collapsed).
fn harmonic_update_weighted<T: Real>(
    weight_positions: &[[T; 3]],
    positions: &[[T; 3]],
    triangles: &[[usize; 3]],
    fixed: &[bool],
) -> Vec<[T; 3]> {
    let n = positions.len();
    let mut rows = cotan_rows(weight_positions, triangles);
    // rhs contributions of the fixed columns, per coordinate
    let mut rhs = vec![[T::zero(); 3]; n];
    for v in 0..n {
        if fixed[v] {
            continue;
        }
        for &(w, val) in &rows[v] {
            if fixed[w] {
                for c in 0..3 {
                    rhs[v][c] -= val * positions[w][c];
                }
            }
        }
    }
    // symmetric elimination: identity rows and cleared couplings
    for v in 0..n {
        if fixed[v] {
            rows[v].clear();
            rows[v].push((v, T::one()));
        } else {
            rows[v].retain(|&(w, _)| !fixed[w]);
        }
    }
    let a = CsrMatrix::from_rows(rows);
    let mut out = positions.to_vec();
    for c in 0..3 {
        let b: Vec<T> = (0..n)
            .map(|v| if fixed[v] { positions[v][c] } else { rhs[v][c] })
            .collect();
        let x0: Vec<T> = (0..n).map(|v| positions[v][c]).collect();
        let x = pcg(&a, &b, &x0, real(1e-12), 4 * n);
        for v in 0..n {
            if !fixed[v] {
                out[v][c] = x[v];
            }
        }
    }
    out
}

fn harmonic_update<T: Real>(
    positions: &[[T; 3]],
    triangles: &[[usize; 3]],
    fixed: &[bool],
) -> Vec<[T; 3]> {
    harmonic_update_weighted(positions, positions, triangles, fixed)
}

fn min_interior_quality<T: Real>(
    positions: &[[T; 3]],
    triangles: &[[usize; 3]],
    fixed: &[bool],
) -> T {
    let mut min = T::infinity();
    for t in triangles {
        if t.iter().any(|&v| fixed[v]) {
            continue;
        }
        min = min.min(triangle_quality(positions[t[0]], positions[t[1]], positions[t[2]]));
    }
    if min.is_infinite() {
        T::one()
    } else {
        min
    }
}

const PINCH_QUALITY: f64 = 1e-3;

/// Alternating minimization for the disc-type Plateau problem: harmonic
/// position update with fixed boundary, then boundary redistribution along
/// the curve, accepting only area decreases. Stops when the area decrease
/// falls below 1e-8, the iteration budget runs out, or a pinch is detected
/// (degeneration flag, not an error).
pub fn solve_plateau<T: Real>(
    curve: &SpaceCurve<T>,
    refine: usize,
    iters: usize,
) -> Result<PlateauSolution<T>> {
    let (ref_verts, triangles, boundary) = hex_disc(refine);
    let n = ref_verts.len();
    let total = curve.total_length();

    let mut fixed = vec![false; n];
    for &b in &boundary {
        fixed[b] = true;
    }
    // boundary by arc length; interior starts at the harmonic extension
    // computed with the reference-disc weights
    let nb = boundary.len();
    let mut params = vec![T::zero(); nb];
    let mut positions: Vec<[T; 3]> = vec![[T::zero(); 3]; n];
    for (j, &b) in boundary.iter().enumerate() {
        let s = total * real::<T>(j as f64) / real::<T>(nb as f64);
        params[j] = s;
        positions[b] = curve.point_at(s);
    }
    let reference: Vec<[T; 3]> =
        ref_verts.iter().map(|v| [real(v[0]), real(v[1]), T::zero()]).collect();
    positions = harmonic_update_weighted(&reference, &positions, &triangles, &fixed);

    let mut area = surface_area(&positions, &triangles);
    let mut degenerate = false;
    let mut iterations = 0usize;
    let tol = real::<T>(1e-8);

    for it in 0..iters {
        iterations = it + 1;
        let area_before = area;

        // (a) harmonic interior update, damped onto an area decrease
        let target = harmonic_update(&positions, &triangles, &fixed);
        let mut tau = T::one();
        for _ in 0..6 {
            let blend: Vec<[T; 3]> = positions
                .iter()
                .zip(&target)
                .map(|(p, q)| {
                    [
                        p[0] + tau * (q[0] - p[0]),
                        p[1] + tau * (q[1] - p[1]),
                        p[2] + tau * (q[2] - p[2]),
                    ]
                })
                .collect();
            let a_new = surface_area(&blend, &triangles);
            if a_new < area {
                positions = blend;
                area = a_new;
                break;
            }
            tau = tau / real(2.0);
        }

        // (b) redistribute boundary vertices along the curve by blended
        // arclength midpoint smoothing: equalizes the parametrization speed
        // of the boundary map (the conformal-distortion surrogate) while
        // keeping the ordering monotone. Three vertices stay pinned (the
        // classical three-point normalization removing the
        // reparametrization gauge), and the sweep is reverted if it would
        // increase the area.
        let saved_positions = positions.clone();
        let saved_params = params.clone();
        let blend = real::<T>(0.5);
        let mut new_params = params.clone();
        for j in 1..nb {
            if j == nb / 3 || j == 2 * nb / 3 {
                continue;
            }
            let prev = params[j - 1];
            let next = if j + 1 < nb { params[j + 1] } else { total };
            if !(next > prev) {
                continue;
            }
            let mid = (prev + next) / real(2.0);
            new_params[j] = params[j] + blend * (mid - params[j]);
        }
        params = new_params;
        for j in 1..nb {
            positions[boundary[j]] = curve.point_at(params[j]);
        }
        let redistributed = surface_area(&positions, &triangles);
        if redistributed < area {
            area = redistributed;
        } else {
            positions = saved_positions;
            params = saved_params;
        }

        // pinch detection: a collapsing neck flattens interior triangles
        if min_interior_quality(&positions, &triangles, &fixed) < real(PINCH_QUALITY) {
            degenerate = true;
            break;
        }

        if area_before - area < tol {
            break;
        }
    }

    // Goldschmidt comparison: past the transition the two discs spanning the
    // circles beat any connected surface, even when the flow has settled on
    // a locally minimal neck. The returned flag reports the dichotomy.
    if area >= two_disc_area::<T>() - real(1e-6) {
        degenerate = true;
    }

    let mesh = DiscMesh { positions, triangles, boundary, boundary_params: params };
    Ok(PlateauSolution { mesh, area, degenerate, iterations })
}

/// Area of the two-disc (Goldschmidt) competitor for unit circles.
fn two_disc_area<T: Real>() -> T {
    real::<T>(2.0) * T::PI()
}

/// Annular variant for the pure two-ring problem: a cylinder lattice with
/// both rims pinned on the unit circles at separation `d`. Flows to the
/// catenoid below the Goldschmidt transition, pinches above it.
pub fn solve_ring_pair<T: Real>(
    d: T,
    angular: usize,
    axial: usize,
    iters: usize,
) -> Result<PlateauSolution<T>> {
    let m = angular.max(8);
    let k = axial.max(2);
    let n = m * (k + 1);
    let tau = real::<T>(2.0) * T::PI();
    let mut positions: Vec<[T; 3]> = Vec::with_capacity(n);
    let mut fixed = vec![false; n];
    for ring in 0..=k {
        let x = d * real::<T>(ring as f64) / real::<T>(k as f64);
        for j in 0..m {
            let th = tau * real::<T>(j as f64) / real::<T>(m as f64);
            positions.push([x, th.cos(), th.sin()]);
        }
    }
    for j in 0..m {
        fixed[j] = true;
        fixed[k * m + j] = true;
    }
    let mut triangles = Vec::with_capacity(2 * m * k);
    for ring in 0..k {
        for j in 0..m {
            let a = ring * m + j;
            let b = ring * m + (j + 1) % m;
            let c = (ring + 1) * m + j;
            let dd = (ring + 1) * m + (j + 1) % m;
            triangles.push([a, b, dd]);
            triangles.push([a, dd, c]);
        }
    }

    let mut area = surface_area(&positions, &triangles);
    let mut degenerate = false;
    let mut iterations = 0usize;
    let tol = real::<T>(1e-8);

    for it in 0..iters {
        iterations = it + 1;
        let area_before = area;
        let target = harmonic_update(&positions, &triangles, &fixed);
        let mut tau_step = T::one();
        for _ in 0..6 {
            let blend: Vec<[T; 3]> = positions
                .iter()
                .zip(&target)
                .map(|(p, q)| {
                    [
                        p[0] + tau_step * (q[0] - p[0]),
                        p[1] + tau_step * (q[1] - p[1]),
                        p[2] + tau_step * (q[2] - p[2]),
                    ]
                })
                .collect();
            let a_new = surface_area(&blend, &triangles);
            if a_new < area {
                positions = blend;
                area = a_new;
                break;
            }
            tau_step = tau_step / real(2.0);
        }
        if min_interior_quality(&positions, &triangles, &fixed) < real(PINCH_QUALITY) {
            degenerate = true;
            break;
        }
        if area_before - area < tol {
            break;
        }
    }

    if area >= two_disc_area::<T>() - real(1e-6) {
        degenerate = true;
    }

    let mesh = DiscMesh {
        positions,
        triangles,
        boundary: (0..m).chain(k * m..(k + 1) * m).collect(),
        boundary_params: Vec::new(),
    };
    Ok(PlateauSolution { mesh, area, degenerate, iterations })
}

/// Area of the catenoid spanning two unit rings at separation `d`: solves
/// `c cosh(d / (2c)) = 1` for the larger root and returns
/// `pi c (d + c sinh(d / c))`. Errors past the existence limit (~1.3255).
pub fn catenoid_oracle<T: Real>(d: T) -> Result<T> {
    if !(d > T::zero()) {
        return Err(Error::NoCatenoidRoot { separation: d.to_f64().unwrap_or(f64::NAN) });
    }
    // critical neck parameter solves u tanh u = 1
    let mut lo = real::<T>(1.0);
    let mut hi = real::<T>(1.5);
    for _ in 0..100 {
        let mid = (lo + hi) / real(2.0);
        if mid * mid.tanh() > T::one() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let u_star = (lo + hi) / real(2.0);
    let c_crit = d / (real::<T>(2.0) * u_star);
    let f = |c: T| c * (d / (real::<T>(2.0) * c)).cosh() - T::one();
    if f(c_crit) >= T::zero() {
        return Err(Error::NoCatenoidRoot { separation: d.to_f64().unwrap_or(f64::NAN) });
    }
    let mut lo = c_crit;
    let mut hi = T::one();
    for _ in 0..200 {
        let mid = (lo + hi) / real(2.0);
        if f(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let c = (lo + hi) / real(2.0);
    Ok(T::PI() * c * (d + c * (d / c).sinh()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrosscheckRecord<T> {
    pub half_area_parametric: T,
    pub min_f2l: T,
    pub abs_gap: T,
    pub rel_gap: T,
    pub parametric_degenerate: bool,
    pub nonparametric_degenerate: bool,
}

/// Cross-validation of the two routes: half the parametric spanning area of
/// the self-overlapping curve against the minimum of the doubled graph
/// functional.
pub fn compare_with_nonparametric<T: Real>(
    l: T,
    n1: usize,
    n2: usize,
    refine: usize,
    iters: usize,
    cfg: &OptimizerConfig,
) -> Result<CrosscheckRecord<T>> {
    let curve = build_gamma(l, 64)?;
    let plateau = solve_plateau(&curve, refine, iters)?;
    let report = minimize_over_profiles(l, n1, n2, cfg, None)?;
    let half_area = plateau.area / real(2.0);
    let abs_gap = (half_area - report.value).abs();
    let rel_gap = abs_gap / report.value.max(real(1e-30));
    Ok(CrosscheckRecord {
        half_area_parametric: half_area,
        min_f2l: report.value,
        abs_gap,
        rel_gap,
        parametric_degenerate: plateau.degenerate,
        nonparametric_degenerate: report.degenerate,
    })
}

/// OBJ export of a mapped surface.
pub fn write_surface_obj<T: Real, W: std::io::Write>(
    mesh: &DiscMesh<T>,
    out: &mut W,
) -> Result<()> {
    for p in &mesh.positions {
        writeln!(out, "v {} {} {}", p[0], p[1], p[2])?;
    }
    for t in &mesh.triangles {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    Ok(())
}
