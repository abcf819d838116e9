//! Outer minimization over convex symmetric profiles: multistart coordinate
//! descent in a reduced slope-increment parametrization, followed by a
//! projected-gradient polish on the full node set, compared against the
//! degenerate competitor (value exactly pi).
//!
//! The inner problem is solved on the half rectangle with a free symmetry
//! seam and reflected, so reported lifts are exactly symmetric and the
//! penalty terms vanish: the reported value is the spanning area itself.

use serde::{Deserialize, Serialize};

use crate::discretization::{
    build_fitted_mesh, build_half_fitted_mesh, reflect_to_full, FittedMesh, GridFunction,
};
use crate::error::{Error, Result};
use crate::functional::{eval_f2l, FunctionalBreakdown};
use crate::geometry::{ConvexProfile, HalfProfile};
use crate::inner_solver::{solve_min_graph_custom, standard_dirichlet, InnerSolution};
use crate::projection::project_with_bounds;
use crate::scalar::{real, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    /// The flat profile `h = 1` (cylinder competitor).
    Flat,
    /// A quarter-ellipse dip fitted between the wall arcs.
    Ellipse,
    /// The caller-provided warm profile (skipped when absent).
    Warm,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    pub starts: Vec<StartKind>,
    /// Number of reduced slope variables (at most 16).
    pub reduced_dim: usize,
    /// Stop the descent when one full pass improves less than this.
    pub outer_tol: f64,
    /// Base step for finite-difference slopes of the outer landscape.
    pub fd_step: f64,
    pub inner_tol: f64,
    pub inner_max_iter: usize,
    /// Declare the degenerate branch the winner when the best candidate is
    /// within this margin of pi.
    pub degenerate_margin: f64,
    pub polish_passes: usize,
    pub max_outer_passes: usize,
    /// Concurrency across multistart branches (results merged by index).
    pub jobs: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: vec![StartKind::Flat, StartKind::Ellipse, StartKind::Warm],
            reduced_dim: 16,
            outer_tol: 1e-7,
            fd_step: 1e-3,
            inner_tol: 1e-9,
            inner_max_iter: 200,
            degenerate_margin: 1e-6,
            polish_passes: 24,
            max_outer_passes: 8,
            jobs: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SolveReport<T> {
    pub l: T,
    /// `None` marks the degenerate minimizer `h = -1`.
    pub best_profile: Option<ConvexProfile<T>>,
    /// Lift on the doubled mesh of `best_profile`; absent when degenerate.
    pub best_psi: Option<GridFunction<T>>,
    pub value: T,
    pub degenerate: bool,
    pub inner_iterations: usize,
    pub outer_evaluations: usize,
    /// Best value found on the nondegenerate branch, even when it lost.
    pub best_candidate_value: T,
}

/// One inner solve for a feasible half profile: fitted half mesh, Newton,
/// reflection, full functional breakdown.
pub struct ProfileEvaluation<T> {
    pub value: T,
    pub breakdown: FunctionalBreakdown<T>,
    pub half_mesh: FittedMesh<T>,
    pub half_solution: InnerSolution<T>,
}

/// A converged lift together with the column spans of the mesh it lives on.
/// Reusing it as an initial guess on a different fitted mesh rescales each
/// column by its span ratio: a pinched column squeezes its lift with it.
#[derive(Clone)]
pub struct WarmLift<T> {
    pub psi: GridFunction<T>,
    pub column_top: Vec<T>,
}

impl<T: Real> WarmLift<T> {
    fn remap_to(&self, mesh: &FittedMesh<T>) -> Option<GridFunction<T>> {
        if self.psi.values.len() != mesh.n_vertices()
            || self.column_top.len() != mesh.column_top.len()
        {
            return None;
        }
        let n2 = mesh.n2;
        let mut values = self.psi.values.clone();
        for i in 0..=mesh.n1 {
            let old_span = self.column_top[i] + T::one();
            let new_span = mesh.column_top[i] + T::one();
            if !(old_span > T::zero()) {
                continue;
            }
            let ratio = (new_span / old_span).min(real(10.0));
            if (ratio - T::one()).abs() < real(1e-9) {
                continue;
            }
            for j in 0..=n2 {
                let v = mesh.vertex_index(i, j);
                values[v] = (values[v] * ratio).max(T::zero()).min(T::one());
            }
        }
        Some(GridFunction { values })
    }
}

fn clamp_floor<T: Real>() -> T {
    -T::one() + real::<T>(1e-6)
}

pub fn evaluate_half_profile<T: Real>(
    half: &HalfProfile<T>,
    m1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
    warm: Option<&WarmLift<T>>,
) -> Result<ProfileEvaluation<T>> {
    let mesh = build_half_fitted_mesh(half, m1, n2)?;
    let fixed = standard_dirichlet(&mesh);
    let init = warm.and_then(|w| w.remap_to(&mesh));
    let warm_was_used = init.is_some();
    let first = solve_stage(&mesh, &fixed, init.as_ref(), cfg);
    let sol = match first {
        Ok(sol) => sol,
        Err(Error::InnerNoConvergence { .. }) if warm_was_used => {
            // A warm lift from a very different domain geometry can be a
            // poor guess; the harmonic extension is a dependable fallback.
            solve_stage(&mesh, &fixed, None, cfg).map_err(|e| attach_profile(half, e))?
        }
        Err(e) => return Err(attach_profile(half, e)),
    };
    let full_profile = resampled_full(half, m1);
    let full_mesh = build_fitted_mesh(&full_profile, 2 * m1, n2)?;
    let psi_full = reflect_to_full(&mesh, &sol.psi, &full_mesh)?;
    let breakdown = eval_f2l(&full_profile, &psi_full, &full_mesh)?;
    Ok(ProfileEvaluation { value: breakdown.total, breakdown, half_mesh: mesh, half_solution: sol })
}

fn attach_profile<T: Real>(half: &HalfProfile<T>, e: Error) -> Error {
    Error::OuterSolveFailed {
        l: half.l.to_f64().unwrap_or(f64::NAN),
        profile: half.values.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
        source: Box::new(e),
    }
}

fn solve_stage<T: Real>(
    mesh: &FittedMesh<T>,
    fixed: &[Option<T>],
    init: Option<&GridFunction<T>>,
    cfg: &OptimizerConfig,
) -> Result<InnerSolution<T>> {
    solve_min_graph_custom(mesh, fixed, init, real(cfg.inner_tol), cfg.inner_max_iter)
}

/// Half profile resampled onto the mesh columns and reflected, so that the
/// doubled mesh is fitted to exactly the profile the half mesh used.
fn resampled_full<T: Real>(half: &HalfProfile<T>, m1: usize) -> ConvexProfile<T> {
    if half.n_cells() == m1 {
        return half.reflect();
    }
    HalfProfile { l: half.l, values: sampled_half_values(half, m1) }.reflect()
}

fn sampled_half_values<T: Real>(half: &HalfProfile<T>, m1: usize) -> Vec<T> {
    if half.n_cells() == m1 {
        half.values.clone()
    } else {
        build_half_fitted_mesh(half, m1, 1).expect("resample").column_top
    }
}

/// Reduced outer variables: nonnegative increments of the slope of the half
/// profile. Any `x >= 0` yields a convex nonincreasing half profile with
/// `h(0) = 1`; the floor clamp keeps the bottom nondegenerate.
struct ReducedSpace<T> {
    l: T,
    m: usize,
    fine_cells: usize,
}

impl<T: Real> ReducedSpace<T> {
    fn new(l: T, fine_cells: usize, requested: usize) -> Self {
        let cap = requested.clamp(1, 16);
        let mut m = cap.min(fine_cells);
        while fine_cells % m != 0 {
            m -= 1;
        }
        Self { l, m, fine_cells }
    }

    fn half_profile(&self, x: &[T]) -> HalfProfile<T> {
        let dr = self.l / real::<T>(self.m as f64);
        let mut coarse = Vec::with_capacity(self.m + 1);
        coarse.push(T::one());
        let mut slope_sum = -x.iter().copied().sum::<T>();
        for k in 0..self.m {
            let prev = *coarse.last().unwrap();
            coarse.push((prev + dr * slope_sum).max(clamp_floor()));
            slope_sum += x[k];
        }
        // piecewise-linear refinement onto the fine grid keeps convexity
        let ratio = self.fine_cells / self.m;
        let mut fine = Vec::with_capacity(self.fine_cells + 1);
        for k in 0..self.m {
            for r in 0..ratio {
                let frac = real::<T>(r as f64) / real::<T>(ratio as f64);
                fine.push(coarse[k] + (coarse[k + 1] - coarse[k]) * frac);
            }
        }
        fine.push(coarse[self.m]);
        HalfProfile { l: self.l, values: fine }
    }

    /// Nearest reduced coordinates reproducing a given half profile.
    fn fit(&self, half: &HalfProfile<T>) -> Vec<T> {
        let dr = self.l / real::<T>(self.m as f64);
        let n = half.n_cells();
        let sample = |k: usize| {
            let pos = real::<T>(k as f64) * real::<T>(n as f64) / real::<T>(self.m as f64);
            let i = pos.floor().to_usize().unwrap_or(0).min(n - 1);
            let frac = pos - real::<T>(i as f64);
            half.values[i] + (half.values[i + 1] - half.values[i]) * frac
        };
        let slopes: Vec<T> = (0..self.m).map(|k| (sample(k + 1) - sample(k)) / dr).collect();
        let mut x = Vec::with_capacity(self.m);
        for k in 0..self.m {
            let next = if k + 1 < self.m { slopes[k + 1] } else { T::zero() };
            x.push((next - slopes[k]).max(T::zero()));
        }
        x
    }
}

fn ellipse_start<T: Real>(l: T, space: &ReducedSpace<T>) -> Vec<T> {
    let c = (real::<T>(1.8) * l).max(real(0.2)).min(real(1.9));
    let m = space.m;
    let mut values = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let t = real::<T>(k as f64) / real::<T>(m as f64);
        let x = T::one() - t;
        let dip = T::one() - c * (T::one() - x * x).max(T::zero()).sqrt();
        values.push(dip.max(clamp_floor()));
    }
    let half = HalfProfile { l, values };
    space.fit(&half)
}

struct DescentOutcome<T> {
    half: HalfProfile<T>,
    value: T,
    psi: GridFunction<T>,
    evaluations: usize,
    inner_iterations: usize,
}

/// Coordinate descent with finite-difference slopes over the reduced
/// variables, warm-starting every inner solve from the previous lift.
fn coordinate_descent<T: Real>(
    space: &ReducedSpace<T>,
    mut x: Vec<T>,
    m1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
) -> Result<DescentOutcome<T>> {
    let mut evals = 0usize;
    let mut inner_iters = 0usize;
    let mut warm: Option<WarmLift<T>> = None;

    macro_rules! eval {
        ($x:expr) => {{
            let half = space.half_profile($x);
            let out = evaluate_half_profile(&half, m1, n2, cfg, warm.as_ref())?;
            warm = Some(WarmLift {
                psi: out.half_solution.psi.clone(),
                column_top: out.half_mesh.column_top.clone(),
            });
            evals += 1;
            inner_iters += out.half_solution.iterations;
            out.value
        }};
    }

    let mut f = eval!(&x);
    let mut steps: Vec<T> = vec![real(0.5); space.m];

    for _pass in 0..cfg.max_outer_passes {
        let f_pass_start = f;
        for k in 0..space.m {
            // forward-difference slope; the probe doubles as a trial point
            let delta = real::<T>(cfg.fd_step) * (T::one() + x[k].abs());
            let mut xp = x.clone();
            xp[k] = x[k] + delta;
            let fp = eval!(&xp);
            if fp < f {
                x = xp;
                f = fp;
                continue;
            }
            let g = (fp - f) / delta;
            if !(g.abs() > real(1e-12)) {
                continue;
            }
            // backtracking along the single coordinate, respecting x >= 0
            let mut t = steps[k];
            let mut accepted = false;
            for _try in 0..4 {
                let mut xt = x.clone();
                xt[k] = (x[k] - t * g).max(T::zero());
                if xt[k] == x[k] {
                    break;
                }
                let ft = eval!(&xt);
                if ft < f {
                    x = xt;
                    f = ft;
                    accepted = true;
                    break;
                }
                t = t / real(4.0);
            }
            steps[k] = if accepted { (t * real(2.0)).min(real(4.0)) } else { t.max(real(1e-3)) };
        }
        if f_pass_start - f < real(cfg.outer_tol) {
            break;
        }
    }

    let half = space.half_profile(&x);
    let final_eval = evaluate_half_profile(&half, m1, n2, cfg, warm.as_ref())?;
    inner_iters += final_eval.half_solution.iterations;
    evals += 1;
    Ok(DescentOutcome {
        half,
        value: final_eval.value,
        psi: final_eval.half_solution.psi,
        evaluations: evals,
        inner_iterations: inner_iters,
    })
}

/// Derivative of the half spanning area with respect to each profile node at
/// the converged lift (envelope: interior optimality kills the dependence
/// through `psi`).
fn shape_gradient<T: Real>(mesh: &FittedMesh<T>, psi: &GridFunction<T>) -> Vec<T> {
    let n2 = mesh.n2;
    let mut dv_dw2 = vec![T::zero(); mesh.n_vertices()];
    for tri in &mesh.triangles {
        let p = [mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]];
        let z = [psi.values[tri[0]], psi.values[tri[1]], psi.values[tri[2]]];
        let a3 = [p[0][0], p[0][1], z[0]];
        let b3 = [p[1][0], p[1][1], z[1]];
        let c3 = [p[2][0], p[2][1], z[2]];
        let e1 = [b3[0] - a3[0], b3[1] - a3[1], b3[2] - a3[2]];
        let e2 = [c3[0] - a3[0], c3[1] - a3[1], c3[2] - a3[2]];
        let u = [
            e1[1] * e2[2] - e1[2] * e2[1],
            e1[2] * e2[0] - e1[0] * e2[2],
            e1[0] * e2[1] - e1[1] * e2[0],
        ];
        let norm = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
        if !(norm > T::zero()) {
            continue;
        }
        // d area / d(w2 of vertex v) = u . (e_y x opposite-edge) / (2 |u|)
        let diffs = [
            [b3[0] - c3[0], b3[2] - c3[2]],
            [c3[0] - a3[0], c3[2] - a3[2]],
            [a3[0] - b3[0], a3[2] - b3[2]],
        ];
        for (k, d) in diffs.iter().enumerate() {
            let du = [d[1], T::zero(), -d[0]];
            let dot = u[0] * du[0] + u[1] * du[1] + u[2] * du[2];
            dv_dw2[tri[k]] += dot / (real::<T>(2.0) * norm);
        }
    }
    // chain rule through the vertical stretch: dw2(i, j)/dh_i = j / n2
    let mut grad = vec![T::zero(); mesh.n1 + 1];
    for (i, g) in grad.iter_mut().enumerate() {
        let mut acc = T::zero();
        for j in 0..=n2 {
            let frac = real::<T>(j as f64) / real::<T>(n2 as f64);
            acc += dv_dw2[mesh.vertex_index(i, j)] * frac;
        }
        *g = acc;
    }
    grad
}

/// Projected-gradient polish of the full node set: perturb along the exact
/// shape derivative and project back onto the feasible class with the
/// endpoints pinned at 1 and the bottom floored above -1. Runs until a pass
/// improves by less than the outer tolerance.
fn polish<T: Real>(
    start: DescentOutcome<T>,
    m1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
) -> Result<DescentOutcome<T>> {
    let mut best = start;
    let l = best.half.l;
    let n_full = 2 * m1;
    let mut step = real::<T>(0.25);
    for _pass in 0..cfg.polish_passes {
        let pass_start_value = best.value;
        let mesh = build_half_fitted_mesh(&best.half, m1, n2)?;
        let grad_half = shape_gradient(&mesh, &best.psi);
        let gnorm = grad_half.iter().fold(T::zero(), |m, g| m.max(g.abs()));
        if !(gnorm > real(1e-14)) {
            break;
        }
        let half_vals = sampled_half_values(&best.half, m1);
        let warm = WarmLift { psi: best.psi.clone(), column_top: mesh.column_top.clone() };
        let mut improved = false;
        for _try in 0..9 {
            let mut raw = vec![T::zero(); n_full + 1];
            for i in 0..=m1 {
                let moved = half_vals[i] - step * grad_half[i] / gnorm;
                raw[i] = moved;
                raw[n_full - i] = moved;
            }
            let mut lo = vec![clamp_floor::<T>(); n_full + 1];
            let mut hi = vec![T::one(); n_full + 1];
            lo[0] = T::one();
            hi[0] = T::one();
            lo[n_full] = T::one();
            hi[n_full] = T::one();
            // a projection failure only skips this polish step
            let projected = match project_with_bounds(&raw, l, &lo, &hi) {
                Ok(p) => p,
                Err(_) => {
                    step = step / real(4.0);
                    continue;
                }
            };
            let cand_half = HalfProfile { l, values: projected[..=m1].to_vec() };
            let out = evaluate_half_profile(&cand_half, m1, n2, cfg, Some(&warm))?;
            best.evaluations += 1;
            best.inner_iterations += out.half_solution.iterations;
            if out.value < best.value - real(1e-13) {
                best.half = cand_half;
                best.value = out.value;
                best.psi = out.half_solution.psi;
                improved = true;
                break;
            }
            step = step / real(4.0);
        }
        if !improved || pass_start_value - best.value < real(cfg.outer_tol) {
            break;
        }
        step = (step * real(2.0)).min(real(0.5));
    }
    Ok(best)
}

/// Spanning-area value of one feasible nondegenerate profile: inner solve
/// plus functional evaluation; equals the area term because boundary data
/// are attained exactly.
pub fn value_of_profile<T: Real>(
    l: T,
    h: &ConvexProfile<T>,
    n1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
) -> Result<T> {
    if h.is_degenerate() {
        return Err(Error::DegenerateProfileRejected);
    }
    if n1 % 2 != 0 || h.n_cells() % 2 != 0 {
        return Err(Error::InvalidProfile("even cell counts required".into()));
    }
    let _ = l;
    let half = h.half();
    Ok(evaluate_half_profile(&half, n1 / 2, n2, cfg, None)?.value)
}

/// Global search: multistart descent against the degenerate competitor.
pub fn minimize_over_profiles<T: Real>(
    l: T,
    n1: usize,
    n2: usize,
    cfg: &OptimizerConfig,
    warm: Option<&ConvexProfile<T>>,
) -> Result<SolveReport<T>> {
    if !(l > T::zero()) {
        return Err(Error::InvalidProfile(format!("l must be positive, got {l}")));
    }
    if n1 % 2 != 0 {
        return Err(Error::InvalidProfile("n1 must be even".into()));
    }
    let m1 = n1 / 2;
    let space = ReducedSpace::new(l, m1, cfg.reduced_dim);

    let mut starts: Vec<Vec<T>> = Vec::new();
    for kind in &cfg.starts {
        match kind {
            StartKind::Flat => starts.push(vec![T::zero(); space.m]),
            StartKind::Ellipse => starts.push(ellipse_start(l, &space)),
            StartKind::Warm => {
                if let Some(w) = warm {
                    if w.n_cells() % 2 == 0 && !w.is_degenerate() {
                        starts.push(space.fit(&w.half()));
                    }
                }
            }
        }
    }
    if starts.is_empty() {
        starts.push(vec![T::zero(); space.m]);
    }

    let run_one = |x0: Vec<T>| -> Result<DescentOutcome<T>> {
        let start_profile = space.half_profile(&x0);
        let go = || -> Result<DescentOutcome<T>> {
            // descent and polish alternate until one full cycle stalls, so
            // restarting the search at the result cannot dig deeper than the
            // outer tolerance
            let mut x = x0.clone();
            let mut best: Option<DescentOutcome<T>> = None;
            for _cycle in 0..6 {
                let descended = coordinate_descent(&space, x, m1, n2, cfg)?;
                let polished = polish(descended, m1, n2, cfg)?;
                let done = match &best {
                    Some(b) => polished.value >= b.value - real(cfg.outer_tol),
                    None => false,
                };
                let improved = best.as_ref().map_or(true, |b| polished.value < b.value);
                if improved {
                    let mut merged = polished;
                    if let Some(b) = best.take() {
                        merged.evaluations += b.evaluations;
                        merged.inner_iterations += b.inner_iterations;
                    }
                    best = Some(merged);
                } else if let Some(b) = best.as_mut() {
                    b.evaluations += polished.evaluations;
                    b.inner_iterations += polished.inner_iterations;
                }
                if done {
                    break;
                }
                // a branch far above the degenerate ceiling has already
                // lost; further cycles cannot change the comparison
                if best.as_ref().unwrap().value > T::PI() + real(0.02) {
                    break;
                }
                x = space.fit(&best.as_ref().unwrap().half);
            }
            Ok(best.expect("at least one cycle"))
        };
        go().map_err(|e| Error::OuterSolveFailed {
            l: l.to_f64().unwrap_or(f64::NAN),
            profile: start_profile.values.iter().map(|v| v.to_f64().unwrap_or(f64::NAN)).collect(),
            source: Box::new(e),
        })
    };

    // A warm profile is also kept verbatim as a candidate (reinterpreted on
    // the current domain length), so restarting the search at a returned
    // optimum can never lose it to the reduced fit.
    let warm_exact: Option<DescentOutcome<T>> = match warm {
        Some(w) if w.n_cells() % 2 == 0 && !w.is_degenerate() => {
            let half = HalfProfile { l, values: w.half().values };
            let out = evaluate_half_profile(&half, m1, n2, cfg, None)?;
            Some(DescentOutcome {
                half,
                value: out.value,
                psi: out.half_solution.psi,
                evaluations: 1,
                inner_iterations: out.half_solution.iterations,
            })
        }
        _ => None,
    };

    let outcomes: Vec<Result<DescentOutcome<T>>> = if cfg.jobs > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> =
                starts.into_iter().map(|x0| scope.spawn(|| run_one(x0))).collect();
            handles.into_iter().map(|h| h.join().expect("start branch panicked")).collect()
        })
    } else {
        starts.into_iter().map(run_one).collect()
    };

    let mut candidates: Vec<DescentOutcome<T>> = Vec::new();
    for out in outcomes {
        candidates.push(out?);
    }

    let mut best: Option<DescentOutcome<T>> = None;
    let mut total_evals = 0usize;
    let mut total_inner = 0usize;
    for out in candidates {
        total_evals += out.evaluations;
        total_inner += out.inner_iterations;
        best = Some(match best {
            None => out,
            Some(cur) => {
                // ties break toward the lexicographically smaller profile
                if out.value < cur.value
                    || (out.value == cur.value && lex_less(&out.half.values, &cur.half.values))
                {
                    out
                } else {
                    cur
                }
            }
        });
    }
    let mut best = best.expect("at least one start");

    // Differences below the outer tolerance are search noise; a provided
    // warm profile keeps its place unless genuinely beaten, which makes a
    // restart at the returned optimum a fixed point.
    if let Some(we) = warm_exact {
        total_evals += we.evaluations;
        total_inner += we.inner_iterations;
        if !(best.value < we.value - real(cfg.outer_tol)) {
            best = we;
        }
    }
    let best = best;
    let pi = T::PI();
    let best_candidate_value = best.value;

    if best_candidate_value >= pi - real(cfg.degenerate_margin) {
        return Ok(SolveReport {
            l,
            best_profile: None,
            best_psi: None,
            value: pi,
            degenerate: true,
            inner_iterations: total_inner,
            outer_evaluations: total_evals,
            best_candidate_value,
        });
    }

    let full_profile = resampled_full(&best.half, m1);
    let full_mesh = build_fitted_mesh(&full_profile, n1, n2)?;
    let half_mesh = build_half_fitted_mesh(&best.half, m1, n2)?;
    let psi_full = reflect_to_full(&half_mesh, &best.psi, &full_mesh)?;
    Ok(SolveReport {
        l,
        best_profile: Some(full_profile),
        best_psi: Some(psi_full),
        value: best_candidate_value,
        degenerate: false,
        inner_iterations: total_inner,
        outer_evaluations: total_evals,
        best_candidate_value,
    })
}

fn lex_less<T: Real>(a: &[T], b: &[T]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    a.len() < b.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg() -> OptimizerConfig {
        OptimizerConfig {
            reduced_dim: 8,
            outer_tol: 1e-6,
            polish_passes: 2,
            max_outer_passes: 12,
            ..OptimizerConfig::default()
        }
    }

    #[test]
    fn small_l_beats_cylinder_and_stays_nondegenerate() {
        let cfg = quick_cfg();
        let report = minimize_over_profiles(0.25f64, 32, 32, &cfg, None).unwrap();
        let bound = 2.0 * std::f64::consts::PI * 0.25;
        assert!(!report.degenerate);
        assert!(report.value < bound, "value {} vs cylinder {}", report.value, bound);
        assert!(report.value <= std::f64::consts::PI + 1e-9);
        let p = report.best_profile.unwrap();
        assert_eq!(p.values[0], 1.0);
        assert_eq!(p.values[p.values.len() - 1], 1.0);
        // reported lift is exactly symmetric
        let psi = report.best_psi.unwrap();
        let mesh = build_fitted_mesh(&p, 32, 32).unwrap();
        for i in 0..=32 {
            for j in 0..=32 {
                assert_eq!(
                    psi.values[mesh.vertex_index(i, j)],
                    psi.values[mesh.vertex_index(32 - i, j)]
                );
            }
        }
    }

    #[test]
    fn large_l_goes_degenerate() {
        let cfg = quick_cfg();
        let report = minimize_over_profiles(3.0f64, 16, 16, &cfg, None).unwrap();
        assert!(report.degenerate);
        assert_eq!(report.value, std::f64::consts::PI);
        assert!(report.best_profile.is_none());
        assert!(report.best_candidate_value >= std::f64::consts::PI - 1e-6);
    }

    #[test]
    fn cylinder_value_below_both_bounds() {
        let cfg = quick_cfg();
        let h = ConvexProfile::<f64>::uniform(0.1, 16, 1.0);
        let v = value_of_profile(0.1, &h, 16, 16, &cfg).unwrap();
        assert!(v < 2.0 * std::f64::consts::PI * 0.1);
        assert!(v < std::f64::consts::PI);
        // h = 1 at l = 1: the solve beats the half-cylinder lift (2 pi)
        let h1 = ConvexProfile::<f64>::uniform(1.0, 16, 1.0);
        let v1 = value_of_profile(1.0, &h1, 16, 16, &cfg).unwrap();
        assert!(v1 < 2.0 * std::f64::consts::PI);
    }

    #[test]
    fn degenerate_marker_rejected() {
        let cfg = quick_cfg();
        let h = ConvexProfile::<f64>::uniform(1.0, 8, -1.0);
        assert!(matches!(
            value_of_profile(1.0, &h, 8, 8, &cfg),
            Err(Error::DegenerateProfileRejected)
        ));
    }

    #[test]
    fn warm_restart_is_a_fixed_point() {
        // Sub-tolerance improvements over a warm profile are search noise
        // and do not displace it, so the restart reproduces the value up to
        // re-evaluation rounding.
        let cfg = OptimizerConfig {
            reduced_dim: 4,
            outer_tol: 1e-8,
            inner_tol: 1e-11,
            fd_step: 1e-6,
            polish_passes: 40,
            max_outer_passes: 60,
            ..OptimizerConfig::default()
        };
        let first = minimize_over_profiles(0.3f64, 16, 16, &cfg, None).unwrap();
        let again =
            minimize_over_profiles(0.3f64, 16, 16, &cfg, first.best_profile.as_ref()).unwrap();
        assert!((first.value - again.value).abs() <= 1e-10, "{} vs {}", first.value, again.value);
    }

    #[test]
    fn mirror_indexing_invariance() {
        let cfg = quick_cfg();
        let report = minimize_over_profiles(0.4f64, 16, 16, &cfg, None).unwrap();
        let p = report.best_profile.unwrap();
        let v = value_of_profile(0.4, &p, 16, 16, &cfg).unwrap();
        let v_rev = value_of_profile(0.4, &p.reversed(), 16, 16, &cfg).unwrap();
        assert!((v - v_rev).abs() < 1e-9);
    }

    #[test]
    fn parallel_starts_match_sequential() {
        let mut cfg = quick_cfg();
        let seq = minimize_over_profiles(0.35f64, 16, 16, &cfg, None).unwrap();
        cfg.jobs = 2;
        let par = minimize_over_profiles(0.35f64, 16, 16, &cfg, None).unwrap();
        assert_eq!(seq.value, par.value);
    }

    #[test]
    fn report_serializes() {
        let cfg = quick_cfg();
        let report = minimize_over_profiles(0.3f64, 8, 8, &cfg, None).unwrap();
        let json = serde_json::to_string(&report).unwrap();
        let back: SolveReport<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.value, report.value);
        assert_eq!(back.degenerate, report.degenerate);
    }

    #[test]
    fn refinement_keeps_values_stable() {
        let cfg = quick_cfg();
        let n = 12;
        let values: Vec<f64> = (0..=n)
            .map(|i| {
                let x = (i as f64) / (n as f64) * 2.0 - 1.0;
                0.1 + 0.9 * x * x
            })
            .collect();
        let h = ConvexProfile::new(0.4, values).unwrap();
        let coarse = value_of_profile(0.4, &h, 12, 12, &cfg).unwrap();
        let fine = value_of_profile(0.4, &h, 24, 24, &cfg).unwrap();
        // same profile, doubled grid: difference is discretization-sized
        assert!((coarse - fine).abs() < 0.05, "coarse {coarse} fine {fine}");
    }

    #[test]
    fn reduced_space_roundtrip() {
        let space = ReducedSpace::new(0.5f64, 16, 8);
        assert_eq!(space.m, 8);
        let x: Vec<f64> = (0..8).map(|k| 0.1 * (k as f64)).collect();
        let half = space.half_profile(&x);
        assert!(half.is_convex());
        assert!(half.is_nonincreasing());
        assert_eq!(half.values[0], 1.0);
        let x_back = space.fit(&half);
        for (a, b) in x.iter().zip(&x_back) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
