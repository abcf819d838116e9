//! Euclidean projection onto the feasible profile class: symmetric,
//! convex in second differences, boxed nodal values.
//!
//! Symmetrization commutes with the rest of the constraint set (the cone
//! and the box are mirror invariant), so the projection is computed by
//! averaging with the mirror first and then running an active-set
//! least-squares in reduced (half) coordinates.

use crate::error::{Error, Result};
use crate::geometry::ConvexProfile;
use crate::linalg::dense_cholesky_solve;
use crate::scalar::{real, Real};

struct ReducedQp<T> {
    /// Squared-norm weight per reduced variable (2 for mirrored pairs, 1 for
    /// a self-mirrored middle node).
    weights: Vec<T>,
    target: Vec<T>,
    lo: Vec<T>,
    hi: Vec<T>,
    /// Sparse rows of the convexity constraints `g z >= 0`.
    rows: Vec<Vec<(usize, T)>>,
}

fn reduced_index(k: usize, n: usize) -> usize {
    k.min(n - k)
}

fn build_reduced<T: Real>(y: &[T], lo: &[T], hi: &[T]) -> ReducedQp<T> {
    let n = y.len() - 1;
    let m = n / 2;
    let mut weights = vec![real::<T>(2.0); m + 1];
    if n % 2 == 0 {
        weights[m] = T::one();
    }
    let target: Vec<T> = (0..=m).map(|k| y[k]).collect();
    let rlo: Vec<T> = (0..=m).map(|k| lo[k].max(lo[n - k])).collect();
    let rhi: Vec<T> = (0..=m).map(|k| hi[k].min(hi[n - k])).collect();

    let mut rows = Vec::new();
    for i in 1..=m.max(1) {
        if i >= n {
            break;
        }
        let mut row: Vec<(usize, T)> = Vec::new();
        let push = |idx: usize, c: T, row: &mut Vec<(usize, T)>| {
            if let Some(e) = row.iter_mut().find(|(j, _)| *j == idx) {
                e.1 += c;
            } else {
                row.push((idx, c));
            }
        };
        push(reduced_index(i - 1, n), T::one(), &mut row);
        push(reduced_index(i, n), -real::<T>(2.0), &mut row);
        push(reduced_index(i + 1, n), T::one(), &mut row);
        row.retain(|&(_, c)| c != T::zero());
        rows.push(row);
    }
    ReducedQp { weights, target, lo: rlo, hi: rhi, rows }
}

enum Constraint {
    Convexity(usize),
    Lower(usize),
    Upper(usize),
}

impl Constraint {
    fn row<T: Real>(&self, qp: &ReducedQp<T>) -> Vec<(usize, T)> {
        match self {
            Constraint::Convexity(i) => qp.rows[*i].clone(),
            Constraint::Lower(k) => vec![(*k, T::one())],
            Constraint::Upper(k) => vec![(*k, -T::one())],
        }
    }

    fn bound<T: Real>(&self, qp: &ReducedQp<T>) -> T {
        match self {
            Constraint::Convexity(_) => T::zero(),
            Constraint::Lower(k) => qp.lo[*k],
            Constraint::Upper(k) => -qp.hi[*k],
        }
    }
}

fn eval_row<T: Real>(row: &[(usize, T)], z: &[T]) -> T {
    row.iter().map(|&(j, c)| c * z[j]).sum()
}

fn all_constraints<T: Real>(qp: &ReducedQp<T>) -> Vec<Constraint> {
    let mut cons = Vec::new();
    for i in 0..qp.rows.len() {
        cons.push(Constraint::Convexity(i));
    }
    for k in 0..qp.target.len() {
        cons.push(Constraint::Lower(k));
        cons.push(Constraint::Upper(k));
    }
    cons
}

fn is_feasible<T: Real>(qp: &ReducedQp<T>, z: &[T], tol: T) -> bool {
    all_constraints(qp).iter().all(|c| eval_row(&c.row(qp), z) >= c.bound(qp) - tol)
}

/// Active-set solve of `min 1/2 |z - y|_W^2  s.t.  G z >= d`.
fn active_set_solve<T: Real>(qp: &ReducedQp<T>, tol: T) -> Result<Vec<T>> {
    let nv = qp.target.len();
    let cons = all_constraints(qp);

    // Feasible start: constant vector inside the box. Second differences of
    // a constant are zero, so only the box matters.
    let lo_max = qp.lo.iter().copied().fold(T::neg_infinity(), T::max);
    let hi_min = qp.hi.iter().copied().fold(T::infinity(), T::min);
    if lo_max > hi_min + tol {
        return Err(Error::InvalidProfile("empty box in projection".into()));
    }
    let mean = qp.target.iter().copied().sum::<T>() / real(nv as f64);
    let mut z = vec![mean.max(lo_max).min(hi_min); nv];

    let mut active: Vec<usize> = Vec::new();
    let max_iter = 20 * (nv + cons.len()) + 50;

    for _ in 0..max_iter {
        // Solve the equality-constrained projection for the current set.
        let na = active.len();
        let mut z_star = qp.target.clone();
        let mut lambda = vec![T::zero(); na];
        if na > 0 {
            let rows: Vec<Vec<(usize, T)>> = active.iter().map(|&c| cons[c].row(qp)).collect();
            let mut s = vec![T::zero(); na * na];
            for a in 0..na {
                for b in 0..=a {
                    let mut acc = T::zero();
                    for &(j, ca) in &rows[a] {
                        if let Some(&(_, cb)) = rows[b].iter().find(|&&(jb, _)| jb == j) {
                            acc += ca * cb / qp.weights[j];
                        }
                    }
                    s[a * na + b] = acc;
                    s[b * na + a] = acc;
                }
            }
            let mut rhs: Vec<T> = active
                .iter()
                .enumerate()
                .map(|(a, &c)| cons[c].bound(qp) - eval_row(&rows[a], &qp.target))
                .collect();
            let mut s_try = s.clone();
            if dense_cholesky_solve(&mut s_try, na, &mut rhs).is_err() {
                // Dependent active rows: regularize slightly.
                let ridge = real::<T>(1e-10);
                for a in 0..na {
                    s[a * na + a] += ridge;
                }
                dense_cholesky_solve(&mut s, na, &mut rhs)?;
            }
            lambda = rhs;
            for (a, row) in rows.iter().enumerate() {
                for &(j, c) in row {
                    z_star[j] += c * lambda[a] / qp.weights[j];
                }
            }
        }

        // Step toward z_star, stopping at the first blocking constraint.
        let mut alpha = T::one();
        let mut blocker: Option<usize> = None;
        for (ci, c) in cons.iter().enumerate() {
            if active.contains(&ci) {
                continue;
            }
            let row = c.row(qp);
            let g_dir = eval_row(&row, &z_star) - eval_row(&row, &z);
            if g_dir < -tol {
                let slack = eval_row(&row, &z) - c.bound(qp);
                let a = (slack / -g_dir).max(T::zero());
                if a < alpha {
                    alpha = a;
                    blocker = Some(ci);
                }
            }
        }

        for k in 0..nv {
            z[k] = z[k] + alpha * (z_star[k] - z[k]);
        }

        if let Some(b) = blocker {
            active.push(b);
            continue;
        }

        // Full step taken: z = z_star. Check multiplier signs; the leaving
        // constraint is the lowest-indexed negative one (Bland's rule), so
        // heavily degenerate corners cannot cycle.
        let mut leaving: Option<usize> = None;
        for (a, &lam) in lambda.iter().enumerate() {
            if lam < -tol && leaving.map_or(true, |best: usize| active[a] < active[best]) {
                leaving = Some(a);
            }
        }
        match leaving {
            Some(a) => {
                active.remove(a);
            }
            None => {
                return Ok(z);
            }
        }
    }
    Err(Error::InvalidProfile("projection active-set loop did not converge".into()))
}

/// Project nodal values onto the feasible profile class with custom per-node
/// bounds. Bounds must be mirror symmetric. Equal lower and upper bounds pin
/// a node.
pub(crate) fn project_with_bounds<T: Real>(
    raw: &[T],
    l: T,
    lo: &[T],
    hi: &[T],
) -> Result<Vec<T>> {
    let len = raw.len();
    if len < 3 {
        return Err(Error::ProfileTooShort { len });
    }
    let n = len - 1;
    let tol = real::<T>(1e-12).max(T::epsilon() * real(64.0));

    // Symmetrize (exact for symmetric inputs: averaging equal values).
    let y: Vec<T> = (0..=n).map(|k| (raw[k] + raw[n - k]) / real(2.0)).collect();

    let qp = build_reduced(&y, lo, hi);
    let m = n / 2;

    // Already feasible: return unchanged.
    let z0: Vec<T> = (0..=m).map(|k| y[k]).collect();
    let in_box =
        (0..=m).all(|k| z0[k] >= qp.lo[k] - tol && z0[k] <= qp.hi[k] + tol);
    if in_box && is_feasible(&qp, &z0, tol) {
        return Ok(y);
    }

    let z = active_set_solve(&qp, tol)?;
    let mut out = vec![T::zero(); n + 1];
    for k in 0..=n {
        let r = reduced_index(k, n);
        out[k] = z[r].max(qp.lo[r]).min(qp.hi[r]);
    }
    let _ = l;
    Ok(out)
}

/// Euclidean projection of raw nodal values onto the profile class of the
/// doubled rectangle: symmetrize, then nearest point under the convexity
/// cone and the box `[-1, 1]`.
pub fn project_profile<T: Real>(raw: &[T], l: T) -> Result<ConvexProfile<T>> {
    let lo = vec![-T::one(); raw.len()];
    let hi = vec![T::one(); raw.len()];
    let values = project_with_bounds(raw, l, &lo, &hi)?;
    ConvexProfile::new(l, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference QP solver: enumerate all active subsets of the constraints
    /// and keep the KKT point that is primal and dual feasible. Exponential,
    /// usable only for a handful of variables; exists to check the
    /// active-set loop on small instances.
    fn brute_force_projection(y: &[f64]) -> Vec<f64> {
        let n = y.len() - 1;
        let sym: Vec<f64> = (0..=n).map(|k| (y[k] + y[n - k]) / 2.0).collect();
        let qp = build_reduced(&sym, &vec![-1.0; n + 1], &vec![1.0; n + 1]);
        let cons = all_constraints(&qp);
        let nv = qp.target.len();
        let nc = cons.len();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for mask in 0u32..(1 << nc) {
            let active: Vec<usize> = (0..nc).filter(|i| mask >> i & 1 == 1).collect();
            let na = active.len();
            if na > nv {
                continue;
            }
            let rows: Vec<Vec<(usize, f64)>> = active.iter().map(|&c| cons[c].row(&qp)).collect();
            let mut s = vec![0.0; na * na];
            for a in 0..na {
                for b in 0..na {
                    let mut acc = 0.0;
                    for &(j, ca) in &rows[a] {
                        if let Some(&(_, cb)) = rows[b].iter().find(|&&(jb, _)| jb == j) {
                            acc += ca * cb / qp.weights[j];
                        }
                    }
                    s[a * na + b] = acc;
                }
            }
            let mut rhs: Vec<f64> = active
                .iter()
                .enumerate()
                .map(|(a, &c)| cons[c].bound(&qp) - eval_row(&rows[a], &qp.target))
                .collect();
            if na > 0 && dense_cholesky_solve(&mut s, na, &mut rhs).is_err() {
                continue;
            }
            let mut z = qp.target.clone();
            for (a, row) in rows.iter().enumerate() {
                for &(j, c) in row {
                    z[j] += c * rhs[a] / qp.weights[j];
                }
            }
            if rhs.iter().any(|&l| l < -1e-9) {
                continue;
            }
            if !is_feasible(&qp, &z, 1e-9) {
                continue;
            }
            let dist: f64 =
                (0..nv).map(|k| qp.weights[k] * (z[k] - qp.target[k]).powi(2)).sum();
            if best.as_ref().map_or(true, |(d, _)| dist < *d) {
                best = Some((dist, z));
            }
        }
        let (_, z) = best.expect("brute force found no KKT point");
        (0..=n).map(|k| z[reduced_index(k, n)]).collect()
    }

    #[test]
    fn projects_zigzag_like_brute_force() {
        let raw = vec![1.0, -1.0, 1.0, -1.0, 1.0];
        let p = project_profile(&raw, 1.0).unwrap();
        let oracle = brute_force_projection(&raw);
        for (a, b) in p.values.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-9, "{:?} vs {:?}", p.values, oracle);
        }
    }

    #[test]
    fn idempotent_on_feasible() {
        let feasible = vec![1.0, 0.25, 0.0, 0.25, 1.0];
        let p = project_profile(&feasible, 1.0).unwrap();
        assert_eq!(p.values, feasible);
        let again = project_profile(&p.values, 1.0).unwrap();
        assert_eq!(again.values, p.values);
    }

    #[test]
    fn uniform_one_unchanged() {
        let raw = vec![1.0; 9];
        let p = project_profile(&raw, 0.5).unwrap();
        assert_eq!(p.values, raw);
    }

    #[test]
    fn random_inputs_match_brute_force() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) as f64 / u64::MAX as f64) * 2.0 - 1.0
        };
        for case in 0..50 {
            let n = 4 + (case % 2); // 5 or 6 nodes
            let raw: Vec<f64> = (0..=n).map(|_| next()).collect();
            let p = project_profile(&raw, 1.0).unwrap();
            let oracle = brute_force_projection(&raw);
            for (a, b) in p.values.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-8, "case {case}: {:?} vs {:?}", p.values, oracle);
            }
        }
    }

    #[test]
    fn projection_shrinks_distance_to_feasible_points() {
        let mut state = 42u64;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            (z ^ (z >> 31)) as f64 / u64::MAX as f64
        };
        for _ in 0..30 {
            let n = 8;
            let raw: Vec<f64> = (0..=n).map(|_| next() * 2.0 - 1.0).collect();
            let p = project_profile(&raw, 1.0).unwrap();
            // random feasible point: convex symmetric from nonnegative curvature
            let mut half: Vec<f64> = vec![1.0];
            let mut slope = -next();
            for _ in 0..n / 2 {
                let prev = *half.last().unwrap();
                half.push((prev + slope * 0.3).max(-1.0));
                slope += next() * 0.2; // slopes nondecreasing
            }
            let mut feas = half.clone();
            for i in (0..n / 2).rev() {
                feas.push(half[i]);
            }
            let feas = project_profile(&feas, 1.0).unwrap().values;
            let d_raw: f64 = raw.iter().zip(&feas).map(|(a, b)| (a - b).powi(2)).sum();
            let d_proj: f64 = p.values.iter().zip(&feas).map(|(a, b)| (a - b).powi(2)).sum();
            assert!(d_proj <= d_raw + 1e-12);
        }
    }

    #[test]
    fn too_short_rejected() {
        assert!(project_profile(&[1.0, 0.0], 1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn projection_is_idempotent(raw in proptest::collection::vec(-1.0f64..1.0, 5..32)) {
            let p = project_profile(&raw, 1.0).unwrap();
            let again = project_profile(&p.values, 1.0).unwrap();
            for (a, b) in p.values.iter().zip(&again.values) {
                proptest::prop_assert!((a - b).abs() <= 1e-11);
            }
        }

        #[test]
        fn projection_output_is_feasible(raw in proptest::collection::vec(-2.0f64..2.0, 5..32)) {
            // out-of-box inputs land on the feasible class as well
            let clamped: Vec<f64> = raw.iter().map(|v| v.clamp(-1.0, 1.0)).collect();
            let p = project_profile(&clamped, 0.7).unwrap();
            let n = p.values.len() - 1;
            for i in 0..=n / 2 {
                proptest::prop_assert!((p.values[i] - p.values[n - i]).abs() <= 1e-12);
            }
            for w in p.values.windows(3) {
                proptest::prop_assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-11);
            }
        }
    }

    #[test]
    fn pinned_endpoint_bounds() {
        let raw = vec![0.2, -0.7, 0.1, -0.7, 0.2];
        let mut lo = vec![-1.0; 5];
        let mut hi = vec![1.0; 5];
        lo[0] = 1.0;
        hi[0] = 1.0;
        lo[4] = 1.0;
        hi[4] = 1.0;
        let v = project_with_bounds(&raw, 1.0, &lo, &hi).unwrap();
        assert_eq!(v[0], 1.0);
        assert_eq!(v[4], 1.0);
        let p = ConvexProfile::new(1.0, v).unwrap();
        assert!(p.values[2] <= p.values[1]);
    }
}
