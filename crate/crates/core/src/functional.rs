//! Evaluation of the free-boundary functionals on the doubled rectangle and
//! on the half rectangle, with a per-term breakdown.
//!
//! Terms, in graph form over the subgraph of `h`:
//!   area of the lifted graph of `psi`
//! + mismatch `|psi - phi|` on the Dirichlet walls below the profile
//! + trace `|psi|` along the graph of `h`
//! + datum area over the wall segments `L_h` above the profile endpoints.
//!
//! The wall term uses the closed-form antiderivative of the datum, so the
//! degenerate value is exact. Line integrals along mesh edges use the
//! trapezoid rule on nodal values; `psi` is piecewise linear, so its traces
//! are the nodal values themselves.

use serde::{Deserialize, Serialize};

use crate::discretization::{lift_area, reflect_to_full, FittedMesh, GridFunction};
use crate::error::{Error, Result};
use crate::geometry::{eval_phi, phi_antiderivative, wall_area_above, ConvexProfile, HalfProfile};
use crate::scalar::{real, CompensatedSum, Real};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalBreakdown<T> {
    pub area_term: T,
    pub dirichlet_mismatch: T,
    pub graph_trace: T,
    pub lh_term: T,
    pub total: T,
}

impl<T: Real> FunctionalBreakdown<T> {
    fn assemble(area_term: T, dirichlet_mismatch: T, graph_trace: T, lh_term: T) -> Self {
        let total = area_term + dirichlet_mismatch + graph_trace + lh_term;
        Self { area_term, dirichlet_mismatch, graph_trace, lh_term, total }
    }
}

/// Mismatch `|psi - phi|` along one lateral column. Trapezoid on nodal
/// values, except that segments where `psi` vanishes identically integrate
/// the datum in closed form: the datum has a vertical tangent at the wall
/// ends and the trapezoid rule there would poison the exact degenerate
/// comparison that decides the threshold.
fn column_mismatch<T: Real>(mesh: &FittedMesh<T>, psi: &GridFunction<T>, col: usize) -> T {
    let mut acc = CompensatedSum::new();
    for j in 0..mesh.n2 {
        let a = mesh.vertex_index(col, j);
        let b = mesh.vertex_index(col, j + 1);
        let wa = mesh.vertices[a][1];
        let wb = mesh.vertices[b][1];
        if psi.values[a] == T::zero() && psi.values[b] == T::zero() {
            acc.add(phi_antiderivative(wb) - phi_antiderivative(wa));
        } else {
            let fa = (psi.values[a] - eval_phi(wa)).abs();
            let fb = (psi.values[b] - eval_phi(wb)).abs();
            acc.add((fa + fb) / real(2.0) * (wb - wa));
        }
    }
    acc.value()
}

/// Trapezoid integral of `|psi|` along the bottom row (the datum is zero there).
fn bottom_mismatch<T: Real>(mesh: &FittedMesh<T>, psi: &GridFunction<T>) -> T {
    let mut acc = CompensatedSum::new();
    for i in 0..mesh.n1 {
        let a = mesh.vertex_index(i, 0);
        let b = mesh.vertex_index(i + 1, 0);
        let dw = mesh.vertices[b][0] - mesh.vertices[a][0];
        acc.add((psi.values[a].abs() + psi.values[b].abs()) / real(2.0) * dw);
    }
    acc.value()
}

/// Trapezoid integral of `|psi|` along the graph polyline, weighted by arc length.
fn graph_trace_term<T: Real>(mesh: &FittedMesh<T>, psi: &GridFunction<T>) -> T {
    let mut acc = CompensatedSum::new();
    let j = mesh.n2;
    for i in 0..mesh.n1 {
        let a = mesh.vertex_index(i, j);
        let b = mesh.vertex_index(i + 1, j);
        let dx = mesh.vertices[b][0] - mesh.vertices[a][0];
        let dy = mesh.vertices[b][1] - mesh.vertices[a][1];
        let len = (dx * dx + dy * dy).sqrt();
        acc.add((psi.values[a].abs() + psi.values[b].abs()) / real(2.0) * len);
    }
    acc.value()
}

fn check_fitted<T: Real>(
    h_len: usize,
    width: T,
    mesh: &FittedMesh<T>,
    psi: &GridFunction<T>,
) -> Result<()> {
    psi.check_len(mesh)?;
    if (mesh.width - width).abs() > T::epsilon() * real(8.0) * width.max(T::one()) {
        return Err(Error::SizeMismatch { expected: h_len, got: mesh.n1 + 1 });
    }
    Ok(())
}

/// Doubled-rectangle functional of a nondegenerate pair, on a mesh fitted
/// to `h` over `[0, 2l]`.
pub fn eval_f2l<T: Real>(
    h: &ConvexProfile<T>,
    psi: &GridFunction<T>,
    mesh: &FittedMesh<T>,
) -> Result<FunctionalBreakdown<T>> {
    if h.is_degenerate() {
        return Ok(eval_f2l_degenerate());
    }
    check_fitted(h.values.len(), real::<T>(2.0) * h.l, mesh, psi)?;
    if mesh.right_edge_free {
        return Err(Error::SizeMismatch { expected: h.values.len(), got: mesh.n1 + 1 });
    }
    let area = lift_area(mesh, psi)?;
    let mismatch = column_mismatch(mesh, psi, 0)
        + column_mismatch(mesh, psi, mesh.n1)
        + bottom_mismatch(mesh, psi);
    let trace = graph_trace_term(mesh, psi);
    let lh = real::<T>(2.0) * wall_area_above(mesh.column_top[0]);
    Ok(FunctionalBreakdown::assemble(area, mismatch, trace, lh))
}

/// Exact value of the doubled functional on the degenerate pair
/// `(h = -1, psi = 0)`: the datum area over both walls, `pi`.
pub fn eval_f2l_degenerate<T: Real>() -> FunctionalBreakdown<T> {
    let lh = real::<T>(2.0) * wall_area_above(-T::one());
    FunctionalBreakdown::assemble(T::zero(), T::zero(), T::zero(), lh)
}

/// Half-rectangle functional on a mesh fitted to `h` over `[0, l]` whose
/// right edge is the free symmetry seam.
pub fn eval_fl<T: Real>(
    h: &HalfProfile<T>,
    psi: &GridFunction<T>,
    mesh: &FittedMesh<T>,
) -> Result<FunctionalBreakdown<T>> {
    if h.values.iter().all(|&v| v == -T::one()) {
        return Ok(eval_fl_degenerate());
    }
    check_fitted(h.values.len(), h.l, mesh, psi)?;
    if !mesh.right_edge_free {
        return Err(Error::SizeMismatch { expected: h.values.len(), got: mesh.n1 + 1 });
    }
    let area = lift_area(mesh, psi)?;
    let mismatch = column_mismatch(mesh, psi, 0) + bottom_mismatch(mesh, psi);
    let trace = graph_trace_term(mesh, psi);
    let lh = wall_area_above(mesh.column_top[0]);
    Ok(FunctionalBreakdown::assemble(area, mismatch, trace, lh))
}

/// Exact degenerate value of the half functional: one wall, `pi / 2`.
pub fn eval_fl_degenerate<T: Real>() -> FunctionalBreakdown<T> {
    FunctionalBreakdown::assemble(T::zero(), T::zero(), T::zero(), wall_area_above(-T::one()))
}

/// Doubling defect `|2 F_l(h, psi) - F_2l(reflection)|`. The reflected pair
/// reuses the same nodal values and the mirrored triangulation, so this is
/// zero up to rounding.
pub fn check_doubling<T: Real>(
    h: &HalfProfile<T>,
    psi: &GridFunction<T>,
    mesh: &FittedMesh<T>,
) -> Result<T> {
    let fl = eval_fl(h, psi, mesh)?;
    let full_profile = h.reflect();
    if full_profile.is_degenerate() {
        let f2l = eval_f2l_degenerate::<T>();
        return Ok((real::<T>(2.0) * fl.total - f2l.total).abs());
    }
    let full_mesh =
        crate::discretization::build_fitted_mesh(&full_profile, 2 * mesh.n1, mesh.n2)?;
    let full_psi = reflect_to_full(mesh, psi, &full_mesh)?;
    let f2l = eval_f2l(&full_profile, &full_psi, &full_mesh)?;
    Ok((real::<T>(2.0) * fl.total - f2l.total).abs())
}

/// Direct evaluation of the half functional in its original form on the
/// uniform rectangle mesh of `R_l`: graph area over the whole rectangle,
/// minus the measure of the complement of the subgraph, plus the boundary
/// terms. This is the oracle the convexification transforms are tested
/// against; it accepts arbitrary (non-convex) profiles.
pub fn eval_fl_uniform<T: Real>(
    h: &HalfProfile<T>,
    psi: &[T],
    mesh: &FittedMesh<T>,
) -> Result<T> {
    let n1 = mesh.n1;
    let n2 = mesh.n2;
    if h.n_cells() != n1 {
        return Err(Error::SizeMismatch { expected: n1 + 1, got: h.values.len() });
    }
    let grid = GridFunction { values: psi.to_vec() };
    grid.check_len(mesh)?;

    let area = lift_area(mesh, &grid)?;
    let complement = mesh.planar_area() - crate::geometry::subgraph_measure_half(h);
    let mismatch = column_mismatch(mesh, &grid, 0) + bottom_mismatch(mesh, &grid);
    // top edge of the rectangle carries |psi| against a zero datum
    let mut top = CompensatedSum::new();
    for i in 0..n1 {
        let a = mesh.vertex_index(i, n2);
        let b = mesh.vertex_index(i + 1, n2);
        let dw = mesh.vertices[b][0] - mesh.vertices[a][0];
        top.add((grid.values[a].abs() + grid.values[b].abs()) / real(2.0) * dw);
    }
    Ok(area - complement + mismatch + top.value())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{build_fitted_mesh, build_half_fitted_mesh};

    fn phi_grid(mesh: &FittedMesh<f64>) -> GridFunction<f64> {
        GridFunction::from_fn(mesh, |_, w2| eval_phi(w2))
    }

    #[test]
    fn degenerate_value_is_exactly_pi() {
        let b = eval_f2l_degenerate::<f64>();
        assert_eq!(b.total, std::f64::consts::PI);
        assert_eq!(b.area_term, 0.0);
        assert_eq!(b.lh_term, std::f64::consts::PI);
        let half = eval_fl_degenerate::<f64>();
        assert_eq!(half.total, std::f64::consts::FRAC_PI_2);
    }

    #[test]
    fn degenerate_profile_shortcuts() {
        let h = ConvexProfile::uniform(1.0, 4, -1.0);
        let mesh = build_fitted_mesh(&ConvexProfile::uniform(1.0, 4, 1.0), 4, 4).unwrap();
        let psi = GridFunction::zeros(&mesh);
        let b = eval_f2l(&h, &psi, &mesh).unwrap();
        assert_eq!(b.total, std::f64::consts::PI);
    }

    #[test]
    fn cylinder_competitor_close_to_2_pi_l() {
        for l in [0.25f64, 1.0] {
            let n = 128;
            let h = ConvexProfile::uniform(l, n, 1.0);
            let mesh = build_fitted_mesh(&h, n, n).unwrap();
            let psi = phi_grid(&mesh);
            let b = eval_f2l(&h, &psi, &mesh).unwrap();
            let target = 2.0 * std::f64::consts::PI * l;
            // mismatch and trace vanish on nodal data; the area term is the
            // inscribed lateral surface, slightly below the cylinder
            assert_eq!(b.dirichlet_mismatch, 0.0);
            assert_eq!(b.graph_trace, 0.0);
            assert_eq!(b.lh_term, 0.0);
            assert!(b.total < target);
            assert!((b.total - target).abs() < 4e-3 * target.max(1.0), "l={l} total={}", b.total);
        }
    }

    #[test]
    fn flat_zero_pair_is_subgraph_plus_pi() {
        let n = 64;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let t = 2.0 * (i as f64) / (n as f64); // [0, 2], l = 1
                1.0 - 1.5 * (1.0 - (t - 1.0).abs()) // vee down to -0.5
            })
            .collect();
        let h = ConvexProfile::new(1.0, values).unwrap();
        let mesh = build_fitted_mesh(&h, n, n).unwrap();
        let psi = GridFunction::zeros(&mesh);
        let b = eval_f2l(&h, &psi, &mesh).unwrap();
        let expected = crate::geometry::subgraph_measure(&h) + std::f64::consts::PI;
        // the wall mismatch of the zero lift integrates in closed form
        assert!((b.total - expected).abs() < 1e-12, "total={} expected={expected}", b.total);
        assert!(b.graph_trace == 0.0);
    }

    #[test]
    fn half_cylinder_is_pi_l() {
        let l = 0.5;
        let n = 64;
        let h = HalfProfile::new(l, vec![1.0; n + 1]).unwrap();
        let mesh = build_half_fitted_mesh(&h, n, n).unwrap();
        let psi = phi_grid(&mesh);
        let b = eval_fl(&h, &psi, &mesh).unwrap();
        let target = std::f64::consts::PI * l;
        assert!((b.total - target).abs() < 2e-3 * target);
    }

    #[test]
    fn doubling_defect_vanishes() {
        // exact cases
        let l = 0.8;
        let n = 16;
        let h = HalfProfile::new(l, vec![1.0; n + 1]).unwrap();
        let mesh = build_half_fitted_mesh(&h, n, n).unwrap();
        let psi = phi_grid(&mesh);
        assert!(check_doubling(&h, &psi, &mesh).unwrap() <= 1e-12);

        // random feasible pairs
        let mut state = 11u64;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64
        };
        for _ in 0..25 {
            let m = 12;
            // convex nonincreasing half profile from nondecreasing slopes
            let mut vals = vec![1.0f64];
            let mut slope = -1.6 * next();
            for _ in 0..m {
                let v: f64 = vals.last().unwrap() + slope * (l / m as f64);
                vals.push(v.max(-0.999));
                slope += 0.4 * next() * (l / m as f64);
            }
            let h = HalfProfile::new(l, vals).unwrap();
            let mesh = build_half_fitted_mesh(&h, m, 10).unwrap();
            let psi =
                GridFunction { values: (0..mesh.n_vertices()).map(|_| next()).collect() };
            let defect = check_doubling(&h, &psi, &mesh).unwrap();
            assert!(defect <= 1e-12, "defect {defect}");
        }
    }

    #[test]
    fn total_dominates_area_term() {
        let n = 24;
        let h = ConvexProfile::new(
            0.6,
            (0..=n)
                .map(|i| {
                    let x = (i as f64) / (n as f64) * 2.0 - 1.0;
                    0.2 + 0.8 * x * x
                })
                .collect(),
        )
        .unwrap();
        let mesh = build_fitted_mesh(&h, n, 16).unwrap();
        let psi = GridFunction::from_fn(&mesh, |w1, w2| (0.3 * (w1 + w2).cos()).abs());
        let b = eval_f2l(&h, &psi, &mesh).unwrap();
        let area = lift_area(&mesh, &psi).unwrap();
        assert!(b.total >= area);
        assert!(b.area_term == area);
        assert!((b.total - (b.area_term + b.dirichlet_mismatch + b.graph_trace + b.lh_term))
            .abs()
            < 1e-15);
    }

    #[test]
    fn mirror_invariance_of_f2l() {
        let n = 20;
        let vals: Vec<f64> = (0..=n)
            .map(|i| {
                let x = (i as f64) / (n as f64) * 2.0 - 1.0;
                -0.3 + 1.3 * x * x
            })
            .collect();
        let h = ConvexProfile::new(0.7, vals).unwrap();
        let mesh = build_fitted_mesh(&h, n, 12).unwrap();
        let psi = GridFunction::from_fn(&mesh, |w1, w2| 0.5 * (w1 * 1.3 + 0.4 * w2).sin().abs());
        let b = eval_f2l(&h, &psi, &mesh).unwrap();

        let h_rev = h.reversed();
        let mesh_rev = build_fitted_mesh(&h_rev, n, 12).unwrap();
        let mut values_rev = vec![0.0; mesh_rev.n_vertices()];
        for i in 0..=n {
            for j in 0..=12 {
                values_rev[mesh_rev.vertex_index(i, j)] =
                    psi.values[mesh.vertex_index(n - i, j)];
            }
        }
        let b_rev = eval_f2l(&h_rev, &GridFunction { values: values_rev }, &mesh_rev).unwrap();
        assert!((b.total - b_rev.total).abs() < 1e-12);
    }

    #[test]
    fn exact_dirichlet_rows_zero_the_mismatch() {
        let n = 16;
        let h = ConvexProfile::new(
            0.5,
            (0..=n).map(|i| {
                let x = (i as f64) / (n as f64) * 2.0 - 1.0;
                0.1 + 0.9 * x * x
            }).collect(),
        )
        .unwrap();
        let mesh = build_fitted_mesh(&h, n, 8).unwrap();
        let mut psi = GridFunction::from_fn(&mesh, |_, _| 0.37);
        let b_before = eval_f2l(&h, &psi, &mesh).unwrap();
        assert!(b_before.dirichlet_mismatch > 0.0);
        for i in 0..=n {
            for j in 0..=8 {
                let v = mesh.vertex_index(i, j);
                if i == 0 || i == n {
                    psi.values[v] = eval_phi(mesh.vertices[v][1]);
                }
                if j == 0 {
                    psi.values[v] = 0.0;
                }
            }
        }
        let b = eval_f2l(&h, &psi, &mesh).unwrap();
        assert_eq!(b.dirichlet_mismatch, 0.0);
    }

    #[test]
    fn breakdown_serializes_with_five_fields() {
        let b = eval_f2l_degenerate::<f64>();
        let json = serde_json::to_value(&b).unwrap();
        let obj = json.as_object().unwrap();
        assert_eq!(obj.len(), 5);
        for key in ["area_term", "dirichlet_mismatch", "graph_trace", "lh_term", "total"] {
            assert!(obj.contains_key(key));
        }
    }
}
