//! Inner convex problem: for a fixed mesh, minimize the discrete graph area
//! over the nodal values with Dirichlet data on the tagged boundary (the
//! half-circle datum on the lateral walls, zero on bottom and graph). The
//! minimizer solves the discrete minimal-surface equation.
//!
//! Damped Newton with Armijo backtracking on the exact Hessian of the
//! lifted-triangle area; a diagonally preconditioned gradient step is the
//! fallback when a Newton step is rejected. Everything is deterministic:
//! fixed vertex ordering, no stochastic components.

use crate::discretization::{BoundaryTag, FittedMesh, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::eval_phi;
use crate::linalg::BandMatrix;
use crate::scalar::{real, CompensatedSum, Real};

#[derive(Clone, Debug)]
pub struct IterationRecord<T> {
    pub iteration: usize,
    pub objective: T,
    pub residual: T,
}

#[derive(Clone, Debug)]
pub struct InnerSolution<T> {
    pub psi: GridFunction<T>,
    pub iterations: usize,
    pub residual: T,
    pub log: Vec<IterationRecord<T>>,
}

/// Dirichlet data implied by the boundary tags: the datum on lateral walls,
/// zero on bottom and graph rows. Free nodes are `None`.
pub fn standard_dirichlet<T: Real>(mesh: &FittedMesh<T>) -> Vec<Option<T>> {
    mesh.tags
        .iter()
        .enumerate()
        .map(|(v, tag)| match tag {
            BoundaryTag::Interior => None,
            BoundaryTag::LateralLeft | BoundaryTag::LateralRight => {
                Some(eval_phi(mesh.vertices[v][1]))
            }
            BoundaryTag::Bottom | BoundaryTag::Graph => Some(T::zero()),
        })
        .collect()
}

struct TriangleGeometry<T> {
    verts: [usize; 3],
    area: T,
    /// Hat-function gradients, one 2-vector per vertex.
    grads: [[T; 2]; 3],
}

fn precompute_geometry<T: Real>(mesh: &FittedMesh<T>) -> Result<Vec<TriangleGeometry<T>>> {
    let mut out = Vec::with_capacity(mesh.triangles.len());
    for t in &mesh.triangles {
        let p = mesh.vertices[t[0]];
        let q = mesh.vertices[t[1]];
        let r = mesh.vertices[t[2]];
        let cross = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]);
        if !(cross > T::zero()) {
            return Err(Error::DegenerateDomain);
        }
        let area = cross / real(2.0);
        // grad of the hat at vertex v is the opposite edge rotated 90 degrees
        // counterclockwise, divided by twice the area.
        let rot = |a: [T; 2], b: [T; 2]| [-(b[1] - a[1]) / cross, (b[0] - a[0]) / cross];
        let grads = [rot(r, q), rot(p, r), rot(q, p)];
        out.push(TriangleGeometry { verts: *t, area, grads });
    }
    Ok(out)
}

fn objective<T: Real>(geo: &[TriangleGeometry<T>], z: &[T]) -> T {
    let mut acc = CompensatedSum::new();
    for g in geo {
        let [a, b, c] = g.verts;
        let mut u = [T::zero(); 2];
        for (k, &v) in [a, b, c].iter().enumerate() {
            u[0] += z[v] * g.grads[k][0];
            u[1] += z[v] * g.grads[k][1];
        }
        acc.add(g.area * (T::one() + u[0] * u[0] + u[1] * u[1]).sqrt());
    }
    acc.value()
}

fn gradient<T: Real>(geo: &[TriangleGeometry<T>], z: &[T], out: &mut [T]) {
    for g in out.iter_mut() {
        *g = T::zero();
    }
    for g in geo {
        let [a, b, c] = g.verts;
        let mut u = [T::zero(); 2];
        for (k, &v) in [a, b, c].iter().enumerate() {
            u[0] += z[v] * g.grads[k][0];
            u[1] += z[v] * g.grads[k][1];
        }
        let s = (T::one() + u[0] * u[0] + u[1] * u[1]).sqrt();
        for (k, &v) in [a, b, c].iter().enumerate() {
            out[v] += g.area * (u[0] * g.grads[k][0] + u[1] * g.grads[k][1]) / s;
        }
    }
}

/// Row ordering for the band solver: index along the shorter grid dimension
/// first, which minimizes the bandwidth (factorization cost is linear in the
/// square of the bandwidth).
struct BandOrdering {
    map: Vec<usize>,
    bw: usize,
}

impl BandOrdering {
    fn for_mesh<T: Real>(mesh: &FittedMesh<T>) -> Self {
        let (n1, n2) = (mesh.n1, mesh.n2);
        let n = (n1 + 1) * (n2 + 1);
        if n2 <= n1 {
            Self { map: (0..n).collect(), bw: n2 + 2 }
        } else {
            let mut map = vec![0usize; n];
            for i in 0..=n1 {
                for j in 0..=n2 {
                    map[i * (n2 + 1) + j] = j * (n1 + 1) + i;
                }
            }
            Self { map, bw: n1 + 2 }
        }
    }
}

fn hessian<T: Real>(
    geo: &[TriangleGeometry<T>],
    z: &[T],
    n: usize,
    order: &BandOrdering,
) -> BandMatrix<T> {
    let mut h = BandMatrix::zeros(n, order.bw);
    for g in geo {
        let vs = g.verts;
        let mut u = [T::zero(); 2];
        for (k, &v) in vs.iter().enumerate() {
            u[0] += z[v] * g.grads[k][0];
            u[1] += z[v] * g.grads[k][1];
        }
        let s2 = T::one() + u[0] * u[0] + u[1] * u[1];
        let s = s2.sqrt();
        let s3 = s2 * s;
        let ug: Vec<T> = g.grads.iter().map(|gr| u[0] * gr[0] + u[1] * gr[1]).collect();
        for a in 0..3 {
            for b in 0..=a {
                let gg = g.grads[a][0] * g.grads[b][0] + g.grads[a][1] * g.grads[b][1];
                let val = g.area * (gg / s - ug[a] * ug[b] / s3);
                h.add(order.map[vs[a]], order.map[vs[b]], val);
            }
        }
    }
    h
}

/// Harmonic extension of the fixed values: one linear solve with the
/// piecewise-linear stiffness matrix, clamped into [0, 1].
pub fn harmonic_extension<T: Real>(
    mesh: &FittedMesh<T>,
    fixed: &[Option<T>],
) -> Result<GridFunction<T>> {
    let n = mesh.n_vertices();
    let order = BandOrdering::for_mesh(mesh);
    let geo = precompute_geometry(mesh)?;
    let mut k = BandMatrix::zeros(n, order.bw);
    for g in &geo {
        let vs = g.verts;
        for a in 0..3 {
            for b in 0..=a {
                let gg = g.grads[a][0] * g.grads[b][0] + g.grads[a][1] * g.grads[b][1];
                k.add(order.map[vs[a]], order.map[vs[b]], g.area * gg);
            }
        }
    }
    let mut x0 = vec![T::zero(); n];
    for (v, f) in fixed.iter().enumerate() {
        if let Some(val) = *f {
            x0[v] = val;
        }
    }
    let mut inverse = vec![0usize; n];
    for (v, &p) in order.map.iter().enumerate() {
        inverse[p] = v;
    }
    // residual of the fixed part, moved to the right-hand side
    let mut rhs = vec![T::zero(); n];
    for p in 0..n {
        let lo = p.saturating_sub(order.bw);
        let hi = (p + order.bw).min(n - 1);
        let mut s = T::zero();
        for q in lo..=hi {
            s += k.get(p, q) * x0[inverse[q]];
        }
        rhs[p] = -s;
    }
    for (v, f) in fixed.iter().enumerate() {
        if f.is_some() {
            k.dirichlet_row(order.map[v]);
            rhs[order.map[v]] = T::zero();
        }
    }
    let chol = k.cholesky()?;
    let d = chol.solve(&rhs);
    let values: Vec<T> = (0..n)
        .map(|v| (x0[v] + d[order.map[v]]).max(T::zero()).min(T::one()))
        .collect();
    let mut psi = GridFunction { values };
    for (v, f) in fixed.iter().enumerate() {
        if let Some(val) = *f {
            psi.values[v] = val;
        }
    }
    Ok(psi)
}

/// Minimize the discrete graph area with the standard tagged Dirichlet data.
pub fn solve_min_graph<T: Real>(
    mesh: &FittedMesh<T>,
    tol: T,
    max_iter: usize,
) -> Result<InnerSolution<T>> {
    let fixed = standard_dirichlet(mesh);
    solve_min_graph_custom(mesh, &fixed, None, tol, max_iter)
}

/// Same solver with caller-supplied Dirichlet data and optional initial guess.
pub fn solve_min_graph_custom<T: Real>(
    mesh: &FittedMesh<T>,
    fixed: &[Option<T>],
    init: Option<&GridFunction<T>>,
    tol: T,
    max_iter: usize,
) -> Result<InnerSolution<T>> {
    let n = mesh.n_vertices();
    if fixed.len() != n {
        return Err(Error::SizeMismatch { expected: n, got: fixed.len() });
    }
    let geo = precompute_geometry(mesh)?;
    let order = BandOrdering::for_mesh(mesh);

    let mut z: Vec<T> = match init {
        Some(g) => {
            g.check_len(mesh)?;
            g.values.clone()
        }
        None => harmonic_extension(mesh, fixed)?.values,
    };
    for (v, f) in fixed.iter().enumerate() {
        if let Some(val) = *f {
            z[v] = val;
        }
    }

    let mut grad = vec![T::zero(); n];
    let mut log = Vec::new();
    let mut obj = objective(&geo, &z);
    let mut damping = T::zero();

    for iter in 0..=max_iter {
        gradient(&geo, &z, &mut grad);
        let mut res = T::zero();
        for (v, f) in fixed.iter().enumerate() {
            if f.is_none() {
                res = res.max(grad[v].abs());
            }
        }
        log.push(IterationRecord { iteration: iter, objective: obj, residual: res });
        if res <= tol {
            return Ok(InnerSolution {
                psi: GridFunction { values: z },
                iterations: iter,
                residual: res,
                log,
            });
        }
        if iter == max_iter {
            break;
        }

        let h = hessian(&geo, &z, n, &order);
        let mut rhs = vec![T::zero(); n];
        for v in 0..n {
            rhs[order.map[v]] = -grad[v];
        }
        let diag: Vec<T> = (0..n).map(|v| h.get(order.map[v], order.map[v])).collect();

        // Rounding floor of the assembled gradient: on strongly squeezed
        // meshes (profile at the bottom clamp) the per-vertex stiffness
        // reaches 1e6 and the gradient cannot be evaluated below
        // eps * stiffness. Stopping there is convergence, not failure.
        let max_diag = diag.iter().fold(T::zero(), |m, &d| m.max(d.abs()));
        let noise_floor = T::epsilon() * real(64.0) * max_diag;
        if res <= noise_floor {
            return Ok(InnerSolution {
                psi: GridFunction { values: z },
                iterations: iter,
                residual: res,
                log,
            });
        }

        // Newton step with Levenberg damping. In squeezed cells the area is
        // asymptotically linear in the nodal values, so the curvature can
        // vanish while the gradient stays O(1); the damping must therefore
        // include a scale-free identity part, under which large lambda turns
        // the step into a plain gradient step of size |g| / lambda.
        let mut stepped = false;
        for _attempt in 0..30 {
            let mut hd = h.clone();
            if damping > T::zero() {
                for v in 0..n {
                    let p = order.map[v];
                    hd.add(p, p, damping * (T::one() + diag[v].abs()));
                }
            }
            for (v, f) in fixed.iter().enumerate() {
                if f.is_some() {
                    hd.dirichlet_row(order.map[v]);
                    rhs[order.map[v]] = T::zero();
                }
            }
            if let Ok(chol) = hd.cholesky() {
                let dir_perm = chol.solve(&rhs);
                let dir: Vec<T> = (0..n).map(|v| dir_perm[order.map[v]]).collect();
                if let Some((new_obj, new_z)) = line_search(&geo, &z, &grad, &dir, fixed, obj) {
                    obj = new_obj;
                    z = new_z;
                    stepped = true;
                    damping = if damping > real(1e-10) { damping / real(4.0) } else { T::zero() };
                    break;
                }
            }
            damping = (damping * real(16.0)).max(real(1e-8));
        }
        if !stepped {
            // diagonally preconditioned gradient fallback
            let dir: Vec<T> = (0..n)
                .map(|v| {
                    if fixed[v].is_some() {
                        T::zero()
                    } else {
                        -grad[v] / diag[v].max(real(1e-12))
                    }
                })
                .collect();
            match line_search(&geo, &z, &grad, &dir, fixed, obj) {
                Some((new_obj, new_z)) => {
                    obj = new_obj;
                    z = new_z;
                }
                None => {
                    return Err(Error::InnerNoConvergence {
                        residual: res.to_f64().unwrap_or(f64::NAN),
                        iterations: iter,
                    });
                }
            }
        }
    }

    let residual = log.last().map(|r| r.residual).unwrap_or(T::nan());
    Err(Error::InnerNoConvergence {
        residual: residual.to_f64().unwrap_or(f64::NAN),
        iterations: max_iter,
    })
}

/// Armijo backtracking; returns the new objective and iterate, or `None`
/// when no acceptable step exists along the direction.
fn line_search<T: Real>(
    geo: &[TriangleGeometry<T>],
    z: &[T],
    grad: &[T],
    dir: &[T],
    fixed: &[Option<T>],
    obj: T,
) -> Option<(T, Vec<T>)> {
    let mut slope = T::zero();
    for v in 0..z.len() {
        if fixed[v].is_none() {
            slope += grad[v] * dir[v];
        }
    }
    if !(slope < T::zero()) {
        return None;
    }
    let c1 = real::<T>(1e-4);
    let mut alpha = T::one();
    for _ in 0..60 {
        let trial: Vec<T> = z
            .iter()
            .zip(dir)
            .enumerate()
            .map(|(v, (&zv, &dv))| if fixed[v].is_some() { zv } else { zv + alpha * dv })
            .collect();
        let new_obj = objective(geo, &trial);
        if new_obj <= obj + c1 * alpha * slope {
            return Some((new_obj, trial));
        }
        alpha = alpha / real(2.0);
    }
    None
}

/// Sup-norm of the assembled flux of the minimal-surface operator over the
/// interior vertices: the discrete divergence-form residual.
pub fn residual_msq<T: Real>(mesh: &FittedMesh<T>, psi: &GridFunction<T>) -> Result<T> {
    psi.check_len(mesh)?;
    let geo = precompute_geometry(mesh)?;
    let mut grad = vec![T::zero(); mesh.n_vertices()];
    gradient(&geo, &psi.values, &mut grad);
    let mut res = T::zero();
    for (v, tag) in mesh.tags.iter().enumerate() {
        if *tag == BoundaryTag::Interior {
            res = res.max(grad[v].abs());
        }
    }
    Ok(res)
}

/// Convergence log as CSV: `iteration,objective,residual`.
pub fn write_log_csv<T: Real, W: std::io::Write>(
    log: &[IterationRecord<T>],
    out: &mut W,
) -> Result<()> {
    writeln!(out, "iteration,objective,residual")?;
    for r in log {
        writeln!(out, "{},{},{}", r.iteration, r.objective, r.residual)?;
    }
    Ok(())
}
