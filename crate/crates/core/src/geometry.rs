//! Domain description: the rectangles `R_rho = (0, rho) x (-1, 1)`, the
//! Dirichlet datum on their walls, and the free-boundary profiles `h`.
//!
//! Profiles are stored as nodal values on a uniform grid. Convexity is
//! imposed through second differences, symmetry through `h_i = h_{n-i}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{real, CompensatedSum, Real};

/// Dirichlet boundary datum: the upper unit half-circle profile,
/// `phi(w2) = sqrt(1 - w2^2)` for |w2| <= 1 and 0 outside.
#[inline]
pub fn eval_phi<T: Real>(w2: T) -> T {
    if w2.abs() <= T::one() {
        (T::one() - w2 * w2).max(T::zero()).sqrt()
    } else {
        T::zero()
    }
}

/// Antiderivative of `phi` on [-1, 1]: `(s sqrt(1-s^2) + asin s) / 2`.
#[inline]
pub fn phi_antiderivative<T: Real>(s: T) -> T {
    let s = s.max(-T::one()).min(T::one());
    (s * (T::one() - s * s).max(T::zero()).sqrt() + s.asin()) / real(2.0)
}

/// Area of one vertical wall `{h0 <= w2 <= 1}` under the datum:
/// the exact value of the integral of `phi` from `h0` to 1.
#[inline]
pub fn wall_area_above<T: Real>(h0: T) -> T {
    phi_antiderivative(T::one()) - phi_antiderivative(h0)
}

fn feasibility_tol<T: Real>() -> T {
    real::<T>(1e-12).max(T::epsilon() * real(64.0))
}

/// Convex symmetric profile on `[0, 2l]`: the free boundary of the doubled
/// problem. Nodes are uniform, `t_i = i * 2l / n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexProfile<T> {
    pub l: T,
    pub values: Vec<T>,
}

impl<T: Real> ConvexProfile<T> {
    /// Validate range, symmetry and convexity (second differences up to a
    /// small slack for rounding).
    pub fn new(l: T, values: Vec<T>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::ProfileTooShort { len: values.len() });
        }
        let tol = feasibility_tol::<T>();
        let n = values.len() - 1;
        for (i, &v) in values.iter().enumerate() {
            if !(v >= -T::one() - tol && v <= T::one() + tol) {
                return Err(Error::InvalidProfile(format!("value {v} at node {i} outside [-1, 1]")));
            }
        }
        for i in 0..=n / 2 {
            let d = (values[i] - values[n - i]).abs();
            if d > tol {
                return Err(Error::InvalidProfile(format!(
                    "asymmetry {d} between nodes {i} and {}",
                    n - i
                )));
            }
        }
        for i in 1..n {
            let sd = values[i - 1] - values[i] - values[i] + values[i + 1];
            if sd < -tol {
                return Err(Error::InvalidProfile(format!("second difference {sd} at node {i}")));
            }
        }
        Ok(Self { l, values })
    }

    pub fn uniform(l: T, n: usize, value: T) -> Self {
        Self { l, values: vec![value; n + 1] }
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() - 1
    }

    /// Node abscissa `t_i` on `[0, 2l]`.
    #[inline]
    pub fn node(&self, i: usize) -> T {
        let n = real::<T>(self.n_cells() as f64);
        (real::<T>(2.0) * self.l) * real::<T>(i as f64) / n
    }

    pub fn min_value(&self) -> T {
        self.values.iter().copied().fold(T::infinity(), T::min)
    }

    pub fn is_degenerate(&self) -> bool {
        self.values.iter().all(|&v| v == -T::one())
    }

    /// Restriction to `[0, l]`; the cell count must be even.
    pub fn half(&self) -> HalfProfile<T> {
        let n = self.n_cells();
        assert!(n % 2 == 0, "profile restriction needs an even cell count");
        HalfProfile { l: self.l, values: self.values[..=n / 2].to_vec() }
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { l: self.l, values }
    }
}

/// Profile on the half interval `[0, l]`. The feasible class is convex,
/// nonincreasing, `h(0) = 1`; raw instances may violate it (the
/// convexification transforms below exist to repair exactly that).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfProfile<T> {
    pub l: T,
    pub values: Vec<T>,
}

impl<T: Real> HalfProfile<T> {
    pub fn new(l: T, values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::ProfileTooShort { len: values.len() });
        }
        let tol = feasibility_tol::<T>();
        for (i, &v) in values.iter().enumerate() {
            if !(v >= -T::one() - tol && v <= T::one() + tol) {
                return Err(Error::InvalidProfile(format!("value {v} at node {i} outside [-1, 1]")));
            }
        }
        Ok(Self { l, values })
    }

    pub fn n_cells(&self) -> usize {
        self.values.len() - 1
    }

    #[inline]
    pub fn node(&self, i: usize) -> T {
        self.l * real::<T>(i as f64) / real::<T>(self.n_cells() as f64)
    }

    pub fn is_convex(&self) -> bool {
        let tol = feasibility_tol::<T>();
        self.values.windows(3).all(|w| w[0] - w[1] - w[1] + w[2] >= -tol)
    }

    pub fn is_nonincreasing(&self) -> bool {
        let tol = feasibility_tol::<T>();
        self.values.windows(2).all(|w| w[1] <= w[0] + tol)
    }

    /// Even reflection onto `[0, 2l]`. Values are copied bitwise so that
    /// doubled quadratures mirror exactly.
    pub fn reflect(&self) -> ConvexProfile<T> {
        let m = self.n_cells();
        let mut values = Vec::with_capacity(2 * m + 1);
        values.extend_from_slice(&self.values);
        for i in (0..m).rev() {
            values.push(self.values[i]);
        }
        ConvexProfile { l: self.l, values }
    }
}

/// Trapezoid measure of the subgraph, `int (h + 1) dw1` over `[0, 2l]`.
/// For a piecewise-linear profile this is the exact polygon area.
pub fn subgraph_measure<T: Real>(h: &ConvexProfile<T>) -> T {
    let n = h.n_cells();
    let dt = real::<T>(2.0) * h.l / real::<T>(n as f64);
    let mut acc = CompensatedSum::new();
    for i in 0..=n {
        let w = if i == 0 || i == n { real::<T>(0.5) } else { T::one() };
        acc.add(w * (h.values[i] + T::one()) * dt);
    }
    acc.value().max(T::zero())
}

/// Same measure for a half profile over `[0, l]`.
pub fn subgraph_measure_half<T: Real>(h: &HalfProfile<T>) -> T {
    let n = h.n_cells();
    let dt = h.l / real::<T>(n as f64);
    let mut acc = CompensatedSum::new();
    for i in 0..=n {
        let w = if i == 0 || i == n { real::<T>(0.5) } else { T::one() };
        acc.add(w * (h.values[i] + T::one()) * dt);
    }
    acc.value().max(T::zero())
}

/// Nodal values of `psi` on the uniform `(n1+1) x (n2+1)` grid of `R_l`,
/// indexed `i * (n2 + 1) + j` with `w1_i = i l / n1`, `w2_j = -1 + 2j / n2`.
/// Zero every node on or above the piecewise-linear graph of `h`, which is
/// the discrete version of the class constraint `psi = 0` outside `SG_h`.
pub fn enforce_subgraph_constraint<T: Real>(h: &HalfProfile<T>, psi: &mut [T], n2: usize) {
    let n1 = h.n_cells();
    assert_eq!(psi.len(), (n1 + 1) * (n2 + 1));
    for i in 0..=n1 {
        for j in 0..=n2 {
            let w2 = -T::one() + real::<T>(2.0) * real::<T>(j as f64) / real::<T>(n2 as f64);
            if w2 >= h.values[i] {
                psi[i * (n2 + 1) + j] = T::zero();
            }
        }
    }
}

/// Truncation transform: past the node `t0`, cap the profile at `h(t0)` and
/// zero `psi` strictly above the cap. Applied to pairs on the half rectangle.
pub fn truncate_profile<T: Real>(
    h: &HalfProfile<T>,
    psi: &[T],
    n2: usize,
    t0: usize,
) -> Result<(HalfProfile<T>, Vec<T>)> {
    let n1 = h.n_cells();
    if t0 == 0 || t0 >= n1 {
        return Err(Error::NodeOutOfRange { index: t0, len: n1 + 1 });
    }
    if psi.len() != (n1 + 1) * (n2 + 1) {
        return Err(Error::SizeMismatch { expected: (n1 + 1) * (n2 + 1), got: psi.len() });
    }
    let cap = h.values[t0];
    let mut values = h.values.clone();
    for v in values.iter_mut().skip(t0) {
        *v = (*v).min(cap);
    }
    let mut out = psi.to_vec();
    for i in t0..=n1 {
        for j in 0..=n2 {
            let w2 = -T::one() + real::<T>(2.0) * real::<T>(j as f64) / real::<T>(n2 as f64);
            if w2 > cap {
                out[i * (n2 + 1) + j] = T::zero();
            }
        }
    }
    let h_star = HalfProfile { l: h.l, values };
    enforce_subgraph_constraint(&h_star, &mut out, n2);
    Ok((h_star, out))
}

/// Chord transform: between nodes `t1 < t2` replace `h` by its pointwise
/// minimum with the chord through `(t1, h(t1))` and `(t2, h(t2))`, zeroing
/// `psi` strictly above the chord.
pub fn chord_cut<T: Real>(
    h: &HalfProfile<T>,
    psi: &[T],
    n2: usize,
    t1: usize,
    t2: usize,
) -> Result<(HalfProfile<T>, Vec<T>)> {
    let n1 = h.n_cells();
    if t1 >= t2 {
        return Err(Error::InvalidChord { t1, t2 });
    }
    if t2 > n1 {
        return Err(Error::NodeOutOfRange { index: t2, len: n1 + 1 });
    }
    if psi.len() != (n1 + 1) * (n2 + 1) {
        return Err(Error::SizeMismatch { expected: (n1 + 1) * (n2 + 1), got: psi.len() });
    }
    let a = h.values[t1];
    let b = h.values[t2];
    let span = real::<T>((t2 - t1) as f64);
    // endpoints reproduce the nodal values exactly
    let chord_at = |i: usize| {
        if i == t1 {
            a
        } else if i == t2 {
            b
        } else {
            a + (b - a) * real::<T>((i - t1) as f64) / span
        }
    };

    let mut values = h.values.clone();
    let mut out = psi.to_vec();
    for i in t1..=t2 {
        let r = chord_at(i);
        values[i] = values[i].min(r);
        for j in 0..=n2 {
            let w2 = -T::one() + real::<T>(2.0) * real::<T>(j as f64) / real::<T>(n2 as f64);
            if w2 > r {
                out[i * (n2 + 1) + j] = T::zero();
            }
        }
    }
    let h_sharp = HalfProfile { l: h.l, values };
    enforce_subgraph_constraint(&h_sharp, &mut out, n2);
    Ok((h_sharp, out))
}
