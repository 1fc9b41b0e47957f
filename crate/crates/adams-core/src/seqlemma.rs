//! The discrete weighted-minimization problem behind the exact-growth
//! condition: minimize `Σ a_k^p e^{β′k}` over nonnegative sequences with
//! prescribed ℓ¹ mass `h` and weighted constraint `Σ (λ_k a_k)^{β′} ≤ 1`.
//!
//! For `p ≥ 1` the objective is convex and the feasible set (an affine
//! slice of a weighted β′-ball in the nonnegative orthant) is convex, so
//! a KKT point is a global minimizer. The solver runs a nested root
//! search: for fixed inequality multiplier `ρ` each coordinate solves a
//! scalar monotone equation (closed form at `ρ = 0` or `p = 1`, else
//! safeguarded Newton in log space), the equality multiplier `ν` is then
//! bisected to meet the mass target, and finally `ρ` is bisected to bring
//! an over-tight weighted norm back to 1. A seeded multi-start
//! coordinate-exchange descent provides an independent optimizer whose
//! agreement with the KKT value is itself a verified property.
//!
//! Feasibility is decidable in closed form: on support `{0..K}` the
//! largest attainable mass is `S^{1/β}` with `S = Σ λ_k^{−β}` (dual
//! exponent pair `1/β + 1/β′ = 1`), attained by `a_k ∝ λ_k^{−β}`.
//!
//! The weight-removal construction spreads each entry over a block of
//! `⌈λ_k^{−β}⌉` slots, trading the weights for a bounded multiplicative
//! loss `e^{β′}e^{β′L}/(e^{β′}−1)` governed by the slot overhead
//! `L = Σ(⌈λ_k^{−β}⌉ − 1)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::report::{Provenance, VerificationReport};
use crate::{Error, Result};

/// Relative accuracy targets of the nested scalar root searches.
const ROOT_REL_TOL: f64 = 1e-13;
/// A restart value this far below the KKT value (relatively) flags a
/// possible KKT failure rather than optimizer noise.
pub const RESTART_ALARM: f64 = 1e-4;

/// A feasible point of the minimization problem, carrying its data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceInstance {
    /// Nonnegative entries `a_k`, index starting at 0.
    pub a: Vec<f64>,
    /// Weights in (0, 1], padded with 1 beyond its length.
    pub lambda: Vec<f64>,
    /// Objective exponent `p > 0`.
    pub p: f64,
    /// Constraint exponent `β′ > 1`.
    pub beta_conj: f64,
    /// ℓ¹ mass `Σ a_k`.
    pub h: f64,
}

impl SequenceInstance {
    /// Validate and package a feasible point; `h` is computed from `a`.
    pub fn new(a: Vec<f64>, lambda: Vec<f64>, p: f64, beta_conj: f64) -> Result<Self> {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::domain(format!("p must be > 0, got {p}")));
        }
        if !(beta_conj > 1.0) || !beta_conj.is_finite() {
            return Err(Error::domain(format!("beta_conj must be > 1, got {beta_conj}")));
        }
        validate_lambda(&lambda)?;
        if a.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::domain("entries must be nonnegative and finite"));
        }
        let h: f64 = a.iter().sum();
        let norm_pow: f64 = a
            .iter()
            .enumerate()
            .map(|(k, &x)| (lambda_at(&lambda, k) * x).powf(beta_conj))
            .sum();
        if norm_pow > 1.0 + 1e-12 {
            return Err(Error::Infeasible(format!(
                "weighted norm^beta' = {norm_pow} exceeds 1"
            )));
        }
        Ok(SequenceInstance { a, lambda, p, beta_conj, h })
    }

    /// The value `Σ a_k^p e^{β′k}` at this point.
    pub fn objective(&self) -> f64 {
        self.a
            .iter()
            .enumerate()
            .map(|(k, &x)| x.powf(self.p) * (self.beta_conj * k as f64).exp())
            .sum()
    }

    /// `Σ (λ_k a_k)^{β′}`.
    pub fn weighted_norm_pow(&self) -> f64 {
        self.a
            .iter()
            .enumerate()
            .map(|(k, &x)| (lambda_at(&self.lambda, k) * x).powf(self.beta_conj))
            .sum()
    }
}

fn lambda_at(lambda: &[f64], k: usize) -> f64 {
    lambda.get(k).copied().unwrap_or(1.0)
}

fn validate_lambda(lambda: &[f64]) -> Result<()> {
    for (k, &l) in lambda.iter().enumerate() {
        if !(l > 0.0) || l > 1.0 || !l.is_finite() {
            return Err(Error::domain(format!(
                "weight lambda[{k}] = {l} must lie in (0, 1]"
            )));
        }
    }
    Ok(())
}

/// Conjugate exponent `β = β′/(β′−1)`.
pub fn conjugate(beta_conj: f64) -> f64 {
    beta_conj / (beta_conj - 1.0)
}

/// Slot overhead of the weights: `Σ_k (⌈λ_k^{−β}⌉ − 1)`, an exact integer.
pub fn l_lambda(lambda: &[f64], beta: f64) -> Result<u64> {
    if !(beta > 1.0) {
        return Err(Error::domain(format!("beta must be > 1, got {beta}")));
    }
    validate_lambda(lambda)?;
    Ok(lambda
        .iter()
        .map(|&l| (l.powf(-beta).ceil() as u64).saturating_sub(1))
        .sum())
}

/// Block length of entry `k` in the weight-removal construction.
fn block_len(lambda_k: f64, beta: f64) -> u64 {
    lambda_k.powf(-beta).ceil() as u64
}

/// Largest ℓ¹ mass compatible with the weighted constraint on support
/// `{0..=k_max}`: `(Σ λ_k^{−β})^{1/β}`.
pub fn max_feasible_mass(lambda: &[f64], beta_conj: f64, k_max: usize) -> f64 {
    let beta = conjugate(beta_conj);
    let s: f64 = (0..=k_max).map(|k| lambda_at(lambda, k).powf(-beta)).sum();
    s.powf(1.0 / beta)
}

/// Solution of one minimization instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuSolution {
    /// Minimal objective value.
    pub value: f64,
    /// Minimizing sequence on the working support.
    pub minimizer: Vec<f64>,
    /// Whether the weighted-norm constraint binds at the optimum.
    pub constraint_active: bool,
    /// Relative amount by which the best restart beat the KKT value
    /// (positive = restarts won; `None` when restarts were not run).
    pub restart_gap: Option<f64>,
}

/// Per-coordinate stationarity root: the unique `a ≥ 0` with
/// `p a^{p−1} E + ρ B a^{β′−1} = ν`, where `E = e^{β′k}` and
/// `B = β′ λ_k^{β′}`. Monotone in `a`, so the root is unique.
fn coordinate_root(p: f64, beta_conj: f64, e_k: f64, b_k: f64, nu: f64, rho: f64) -> f64 {
    if nu <= 0.0 {
        return 0.0;
    }
    if rho == 0.0 {
        if p == 1.0 {
            // Linear objective with no curvature: handled by the caller.
            unreachable!("rho = 0 with p = 1 is resolved as a vertex");
        }
        return (nu / (p * e_k)).powf(1.0 / (p - 1.0));
    }
    if p == 1.0 {
        if nu <= e_k {
            return 0.0;
        }
        return ((nu - e_k) / (rho * b_k)).powf(1.0 / (beta_conj - 1.0));
    }
    // Newton in t = ln a on g(t) = pE e^{(p−1)t} + ρB e^{(β′−1)t} − ν:
    // convex and increasing, started where g ≥ 0, so the iteration
    // descends monotonically onto the root.
    let a1 = (nu / (p * e_k)).powf(1.0 / (p - 1.0));
    let a2 = (nu / (rho * b_k)).powf(1.0 / (beta_conj - 1.0));
    let mut t = a1.min(a2).ln();
    for _ in 0..80 {
        let g = p * e_k * ((p - 1.0) * t).exp() + rho * b_k * ((beta_conj - 1.0) * t).exp() - nu;
        let dg = p * (p - 1.0) * e_k * ((p - 1.0) * t).exp()
            + (beta_conj - 1.0) * rho * b_k * ((beta_conj - 1.0) * t).exp();
        let step = g / dg;
        t -= step;
        if step.abs() < 1e-15 {
            break;
        }
    }
    t.exp()
}

/// Solve the inner mass equation: find ν with `Σ_k a_k(ν, ρ) = h`.
fn solve_mass(
    p: f64,
    beta_conj: f64,
    e: &[f64],
    b: &[f64],
    h: f64,
    rho: f64,
) -> Vec<f64> {
    let fill = |nu: f64| -> Vec<f64> {
        (0..e.len())
            .map(|k| coordinate_root(p, beta_conj, e[k], b[k], nu, rho))
            .collect()
    };
    let mass = |nu: f64| -> f64 { fill(nu).iter().sum() };
    // Bracket by doubling/halving, then bisect; Σ is continuous and
    // strictly increasing in ν with range (0, ∞).
    let mut hi = 1.0;
    let mut guard = 0;
    while mass(hi) < h {
        hi *= 2.0;
        guard += 1;
        assert!(guard < 2000, "mass bracket failed to expand");
    }
    let mut lo = hi / 2.0;
    while mass(lo) > h {
        lo /= 2.0;
        guard += 1;
        assert!(guard < 4000, "mass bracket failed to shrink");
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mass(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) < ROOT_REL_TOL * hi {
            break;
        }
    }
    let mut a = fill(0.5 * (lo + hi));
    // Absorb the residual mass error in an exact rescale: scaling keeps
    // nonnegativity and only perturbs the root system at the tolerance.
    let m: f64 = a.iter().sum();
    if m > 0.0 {
        let c = h / m;
        for x in a.iter_mut() {
            *x *= c;
        }
    }
    a
}

fn norm_pow_of(a: &[f64], lambda: &[f64], beta_conj: f64) -> f64 {
    a.iter()
        .enumerate()
        .map(|(k, &x)| (lambda_at(lambda, k) * x).powf(beta_conj))
        .sum()
}

fn objective_of(a: &[f64], p: f64, beta_conj: f64) -> f64 {
    a.iter()
        .enumerate()
        .map(|(k, &x)| if x > 0.0 { x.powf(p) * (beta_conj * k as f64).exp() } else { 0.0 })
        .sum()
}

/// KKT solve on the fixed support `{0..=k_max}`; requires `p ≥ 1`.
fn solve_kkt(
    h: f64,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    k_max: usize,
) -> Result<(Vec<f64>, bool)> {
    let e: Vec<f64> = (0..=k_max).map(|k| (beta_conj * k as f64).exp()).collect();
    let b: Vec<f64> = (0..=k_max)
        .map(|k| beta_conj * lambda_at(lambda, k).powf(beta_conj))
        .collect();

    // Unconstrained-in-norm candidate first (ρ = 0).
    let free = if p == 1.0 {
        // Linear objective: all mass on the cheapest slot.
        let mut v = vec![0.0; k_max + 1];
        v[0] = h;
        v
    } else {
        solve_mass(p, beta_conj, &e, &b, h, 0.0)
    };
    if norm_pow_of(&free, lambda, beta_conj) <= 1.0 + 1e-12 {
        return Ok((free, false));
    }

    // Constraint binds: bisect ρ so the weighted norm returns to 1.
    let norm_at = |rho: f64| -> (Vec<f64>, f64) {
        let a = solve_mass(p, beta_conj, &e, &b, h, rho);
        let n = norm_pow_of(&a, lambda, beta_conj);
        (a, n)
    };
    let mut rho_hi = 1.0;
    let mut guard = 0;
    while norm_at(rho_hi).1 > 1.0 {
        rho_hi *= 4.0;
        guard += 1;
        if guard > 300 {
            return Err(Error::Infeasible(format!(
                "norm multiplier diverged: mass {h} not attainable on support 0..={k_max}"
            )));
        }
    }
    let mut rho_lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (rho_lo + rho_hi);
        if norm_at(mid).1 > 1.0 {
            rho_lo = mid;
        } else {
            rho_hi = mid;
        }
        if (rho_hi - rho_lo) < ROOT_REL_TOL * rho_hi {
            break;
        }
    }
    let (a, _) = norm_at(rho_hi);
    Ok((a, true))
}

// ---------------------------------------------------------------------
// restart oracle
// ---------------------------------------------------------------------

/// Repair an ℓ¹-correct start onto the constraint set by mixing toward
/// the minimum-norm profile `a_k ∝ λ_k^{−β}` of the same mass (the mix is
/// convex, so a feasible mixture exists whenever the instance does).
fn repair_feasible(w: &mut [f64], lambda: &[f64], beta_conj: f64, h: f64) {
    if norm_pow_of(w, lambda, beta_conj) <= 1.0 {
        return;
    }
    let beta = conjugate(beta_conj);
    let s: f64 = (0..w.len()).map(|k| lambda_at(lambda, k).powf(-beta)).sum();
    let base: Vec<f64> = (0..w.len())
        .map(|k| h * lambda_at(lambda, k).powf(-beta) / s)
        .collect();
    let mix = |t: f64, w: &[f64]| -> Vec<f64> {
        (0..w.len()).map(|k| (1.0 - t) * w[k] + t * base[k]).collect()
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if norm_pow_of(&mix(mid, w), lambda, beta_conj) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let fixed = mix(hi, w);
    w.copy_from_slice(&fixed);
}

/// Exact line search for a transfer `δ` from slot `i` to slot `j`
/// (`a_i − δ, a_j + δ`) constrained to keep the weighted norm ≤ 1. For
/// `p ≥ 1` the restriction is convex, so the minimizer is the
/// unconstrained stationary point clamped to the feasible interval
/// (found by sign bisection of the derivative); for `p < 1` it sits at a
/// feasible endpoint.
fn pair_exchange(
    a: &mut [f64],
    i: usize,
    j: usize,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    norm_rest: f64,
) -> f64 {
    if a[i] == 0.0 && a[j] == 0.0 {
        return 0.0;
    }
    let (li, lj) = (lambda_at(lambda, i), lambda_at(lambda, j));
    let (ei, ej) = (
        (beta_conj * i as f64).exp(),
        (beta_conj * j as f64).exp(),
    );
    let budget = (1.0 - norm_rest).max(0.0);
    let norm2 = |d: f64| -> f64 {
        (li * (a[i] - d)).powf(beta_conj) + (lj * (a[j] + d)).powf(beta_conj)
    };
    let val = |d: f64| -> f64 { (a[i] - d).powf(p) * ei + (a[j] + d).powf(p) * ej };
    let (lo, hi) = (-a[j], a[i]);
    // Boundary of the (convex) feasible interval in the direction of
    // `target`, starting from the feasible point 0.
    let feasible_toward = |target: f64| -> f64 {
        if norm2(target) <= budget + 1e-15 {
            return target;
        }
        let (mut l, mut r) = (0.0, target);
        for _ in 0..60 {
            let m = 0.5 * (l + r);
            if norm2(m) <= budget + 1e-15 {
                l = m;
            } else {
                r = m;
            }
        }
        l
    };
    let d = if p >= 1.0 {
        // f'(δ) ∝ (a_j+δ)^{p−1} e_j − (a_i−δ)^{p−1} e_i, nondecreasing.
        let slope = |d: f64| (a[j] + d).powf(p - 1.0) * ej - (a[i] - d).powf(p - 1.0) * ei;
        let dstar = if slope(lo) >= 0.0 {
            lo
        } else if slope(hi) <= 0.0 {
            hi
        } else {
            let (mut l, mut r) = (lo, hi);
            for _ in 0..60 {
                let m = 0.5 * (l + r);
                if slope(m) < 0.0 {
                    l = m;
                } else {
                    r = m;
                }
            }
            0.5 * (l + r)
        };
        feasible_toward(dstar)
    } else {
        // Concave restriction: compare the two feasible endpoints.
        let d1 = feasible_toward(lo);
        let d2 = feasible_toward(hi);
        if val(d1) <= val(d2) {
            d1
        } else {
            d2
        }
    };
    let gain = val(0.0) - val(d);
    if gain > 0.0 && d != 0.0 {
        a[i] -= d;
        a[j] += d;
        gain
    } else {
        0.0
    }
}

/// One exploratory descent: shuffled pairwise exchanges under the hard
/// constraints. Cheap and good to a few percent; pairwise moves can stall
/// on the curved constraint boundary, so precision comes from the
/// penalty polish below.
fn coord_descent(
    a0: Vec<f64>,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<f64>) {
    let mut a = a0;
    let n = a.len();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let cell = |x: f64, k: usize| (lambda_at(lambda, k) * x).powf(beta_conj);
    for _ in 0..25 {
        // Shuffled sweep order breaks cyclic stalls; the norm is refreshed
        // exactly each sweep and tracked incrementally inside it.
        for t in (1..pairs.len()).rev() {
            let s = rng.gen_range(0..=t);
            pairs.swap(t, s);
        }
        let mut norm_pow = norm_pow_of(&a, lambda, beta_conj);
        let mut gain = 0.0;
        for &(i, j) in &pairs {
            let before = cell(a[i], i) + cell(a[j], j);
            gain += pair_exchange(&mut a, i, j, p, beta_conj, lambda, norm_pow - before);
            norm_pow += cell(a[i], i) + cell(a[j], j) - before;
        }
        let scale = objective_of(&a, p, beta_conj).abs().max(1e-300);
        if gain < 1e-9 * scale {
            break;
        }
    }
    (objective_of(&a, p, beta_conj), a)
}

/// Pairwise exchange on the mass simplex for the penalized objective
/// `f + pen·(g − 1)₊²`: with the ball handled by the penalty, the only
/// hard constraint is the simplex, on which pairwise moves span every
/// feasible direction — no boundary stalls. Requires `p ≥ 1` (convex).
fn penalty_pair_exchange(
    a: &mut [f64],
    i: usize,
    j: usize,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    pen: f64,
    norm_rest: f64,
) -> f64 {
    if a[i] == 0.0 && a[j] == 0.0 {
        return 0.0;
    }
    let (li, lj) = (lambda_at(lambda, i), lambda_at(lambda, j));
    let lib = li.powf(beta_conj);
    let ljb = lj.powf(beta_conj);
    let (ei, ej) = (
        (beta_conj * i as f64).exp(),
        (beta_conj * j as f64).exp(),
    );
    let viol = |d: f64| -> f64 {
        norm_rest + lib * (a[i] - d).powf(beta_conj) + ljb * (a[j] + d).powf(beta_conj) - 1.0
    };
    let val = |d: f64| -> f64 {
        let v = viol(d).max(0.0);
        (a[i] - d).powf(p) * ei + (a[j] + d).powf(p) * ej + pen * v * v
    };
    // Derivative of the convex restriction; sign bisection finds the min.
    let slope = |d: f64| -> f64 {
        let base = p * ((a[j] + d).powf(p - 1.0) * ej - (a[i] - d).powf(p - 1.0) * ei);
        let v = viol(d);
        if v <= 0.0 {
            base
        } else {
            base
                + 2.0 * pen * v * beta_conj
                    * (ljb * (a[j] + d).powf(beta_conj - 1.0)
                        - lib * (a[i] - d).powf(beta_conj - 1.0))
        }
    };
    let (lo, hi) = (-a[j], a[i]);
    let d = if slope(lo) >= 0.0 {
        lo
    } else if slope(hi) <= 0.0 {
        hi
    } else {
        let (mut l, mut r) = (lo, hi);
        for _ in 0..60 {
            let m = 0.5 * (l + r);
            if slope(m) < 0.0 {
                l = m;
            } else {
                r = m;
            }
        }
        0.5 * (l + r)
    };
    let gain = val(0.0) - val(d);
    if gain > 0.0 && d != 0.0 {
        a[i] -= d;
        a[j] += d;
        gain
    } else {
        0.0
    }
}

/// Polish a candidate to full precision by penalty continuation: the ball
/// constraint is replaced by an escalating quadratic penalty, each stage
/// minimized by simplex pairwise descent, and the result is repaired back
/// into the ball exactly. Global for `p ≥ 1` by convexity of each stage.
fn penalty_polish(
    mut a: Vec<f64>,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    rng: &mut ChaCha8Rng,
) -> (f64, Vec<f64>) {
    let n = a.len();
    let h: f64 = a.iter().sum();
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let cell = |x: f64, k: usize| (lambda_at(lambda, k) * x).powf(beta_conj);
    let scale = objective_of(&a, p, beta_conj).abs().max(1.0);
    for stage in 0..6 {
        let pen = scale * 10f64.powi(2 + 3 * stage);
        for _ in 0..60 {
            for t in (1..pairs.len()).rev() {
                let s = rng.gen_range(0..=t);
                pairs.swap(t, s);
            }
            let mut norm_pow = norm_pow_of(&a, lambda, beta_conj);
            let mut gain = 0.0;
            for &(i, j) in &pairs {
                let before = cell(a[i], i) + cell(a[j], j);
                gain += penalty_pair_exchange(
                    &mut a, i, j, p, beta_conj, lambda, pen, norm_pow - before,
                );
                norm_pow += cell(a[i], i) + cell(a[j], j) - before;
            }
            if gain < 1e-15 * scale {
                break;
            }
        }
    }
    repair_feasible(&mut a, lambda, beta_conj, h);
    (objective_of(&a, p, beta_conj), a)
}

/// Best of `n_restarts` seeded multi-start descents on the fixed support
/// `{0..=k_max}`. Independent of the KKT path; used as a cross-check.
pub fn mu_restarts(
    h: f64,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    k_max: usize,
    n_restarts: usize,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    if !(h > 0.0) || !(p > 0.0) || !(beta_conj > 1.0) {
        return Err(Error::domain("need h > 0, p > 0, beta_conj > 1"));
    }
    validate_lambda(lambda)?;
    if h > max_feasible_mass(lambda, beta_conj, k_max) * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "mass {h} exceeds the support's capacity {}",
            max_feasible_mass(lambda, beta_conj, k_max)
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cands: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n_restarts);
    for _ in 0..n_restarts {
        // Exponential spacings give a uniform point of the mass simplex.
        let mut w: Vec<f64> = (0..=k_max)
            .map(|_| -(1.0 - rng.gen::<f64>()).ln())
            .collect();
        let tot: f64 = w.iter().sum();
        for x in w.iter_mut() {
            *x *= h / tot;
        }
        repair_feasible(&mut w, lambda, beta_conj, h);
        cands.push(coord_descent(w, p, beta_conj, lambda, &mut rng));
    }
    cands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (mut best_v, mut best_a) = cands[0].clone();
    if p >= 1.0 {
        // Exploration done; finish the leaders to full precision.
        let leaders = if n_restarts >= 300 { 3 } else { 1 };
        for (_, cand) in cands.into_iter().take(leaders) {
            let (v, a) = penalty_polish(cand, p, beta_conj, lambda, &mut rng);
            if v < best_v {
                best_v = v;
                best_a = a;
            }
        }
    }
    Ok((best_v, best_a))
}

// ---------------------------------------------------------------------
// main entry points
// ---------------------------------------------------------------------

/// Minimal objective on the fixed support `{0..=k_max}`.
///
/// Solves the KKT system (global by convexity for `p ≥ 1`) and, on small
/// supports, cross-checks with a seeded multi-start descent; the returned
/// value is the better of the two and `restart_gap` records the signed
/// relative difference.
fn solve_fixed(
    h: f64,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    k_max: usize,
) -> Result<MuSolution> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("mass must be > 0, got {h}")));
    }
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::domain(format!(
            "the deterministic solver needs p >= 1 (got {p}); use the restart oracle below 1"
        )));
    }
    if !(beta_conj > 1.0) || !beta_conj.is_finite() {
        return Err(Error::domain(format!("beta_conj must be > 1, got {beta_conj}")));
    }
    validate_lambda(lambda)?;
    let cap = max_feasible_mass(lambda, beta_conj, k_max);
    if h > cap * (1.0 + 1e-12) {
        return Err(Error::Infeasible(format!(
            "mass {h} exceeds the support's capacity {cap} (support 0..={k_max})"
        )));
    }
    let (a, active) = solve_kkt(h, p, beta_conj, lambda, k_max)?;
    Ok(MuSolution {
        value: objective_of(&a, p, beta_conj),
        minimizer: a,
        constraint_active: active,
        restart_gap: None,
    })
}

pub fn mu_bruteforce(
    h: f64,
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
    k_max: usize,
) -> Result<MuSolution> {
    let mut sol = solve_fixed(h, p, beta_conj, lambda, k_max)?;
    if k_max <= 12 {
        let kkt_value = sol.value;
        let (rv, ra) = mu_restarts(h, p, beta_conj, lambda, k_max, 4, 0x5eed + k_max as u64)?;
        sol.restart_gap = Some((kkt_value - rv) / kkt_value.max(1e-300));
        if rv < sol.value {
            sol.value = rv;
            sol.minimizer = ra;
        }
    }
    Ok(sol)
}

/// Minimal objective with automatic support growth: the support is
/// extended until a further extension improves the value by less than
/// 1e-10 relative (the exponential slot costs force this quickly).
pub fn mu_auto(h: f64, p: f64, beta_conj: f64, lambda: &[f64]) -> Result<MuSolution> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::domain(format!("mass must be > 0, got {h}")));
    }
    let beta = conjugate(beta_conj);
    // Smallest support that can carry the mass, then headroom.
    let mut s = 0.0f64;
    let mut k_needed = 0usize;
    while s.powf(1.0 / beta) < h && k_needed < 4000 {
        s += lambda_at(lambda, k_needed).powf(-beta);
        k_needed += 1;
    }
    let mut k = (k_needed + 4).max(8).max(lambda.len());
    let mut sol = solve_fixed(h, p, beta_conj, lambda, k)?;
    loop {
        let k_next = k + 5;
        if k_next > 400 {
            return Err(Error::range(
                "support exceeded 400 slots without the value settling",
            ));
        }
        let next = solve_fixed(h, p, beta_conj, lambda, k_next)?;
        let settled = (sol.value - next.value) <= 1e-10 * sol.value.abs().max(1e-300);
        sol = next;
        k = k_next;
        if settled {
            return Ok(sol);
        }
    }
}

/// Reference growth profile `φ(h) = exp(β′ h^β) / h^{pβ/β′}`.
pub fn growth_profile(h: f64, p: f64, beta_conj: f64) -> f64 {
    let beta = conjugate(beta_conj);
    (beta_conj * h.powf(beta)).exp() / h.powf(p * beta / beta_conj)
}

/// Certify that the measured minima track the growth profile: the ratios
/// `μ(h)/φ(h)` over the grid stay in a band of width < 50, `μ` is
/// nondecreasing, and (for nontrivial weights) the band floor degrades by
/// at most the factor `e^{−β′L}` relative to the unit-weight case.
pub fn mu_bounds_check(
    h_grid: &[f64],
    p: f64,
    beta_conj: f64,
    lambda: &[f64],
) -> Result<VerificationReport> {
    if h_grid.is_empty() {
        return Err(Error::domain("empty mass grid"));
    }
    let mut rep = VerificationReport::new("growth-band");
    let mut ratios = Vec::with_capacity(h_grid.len());
    let mut mus = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let mu = mu_auto(h, p, beta_conj, lambda)?.value;
        mus.push(mu);
        ratios.push(mu / growth_profile(h, p, beta_conj));
    }
    let band_lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let band_hi = ratios.iter().cloned().fold(0.0, f64::max);
    // Weights may stretch the band floor by e^{−β′L}, so the admissible
    // width scales accordingly (50 is the measured unit-weight envelope).
    let beta = conjugate(beta_conj);
    let l = l_lambda(lambda, beta)?;
    rep.check_upper(
        "band-width",
        band_hi / band_lo,
        50.0 * (beta_conj * l as f64).exp(),
        0.0,
        Provenance::Numeric,
        format!("ratio band [{band_lo:.6e}, {band_hi:.6e}] over {} masses", h_grid.len()),
    );
    let monotone = mus.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-9));
    rep.check_flag(
        "minimum-nondecreasing",
        monotone,
        mus.last().copied().unwrap_or(0.0),
        mus.first().copied().unwrap_or(0.0),
        Provenance::Numeric,
        "minimal value must not decrease as the mass target grows",
    );
    if l > 0 {
        // Unit-weight reference band on the same grid.
        let mut ref_lo = f64::INFINITY;
        for &h in h_grid {
            let mu = mu_auto(h, p, beta_conj, &[])?.value;
            ref_lo = ref_lo.min(mu / growth_profile(h, p, beta_conj));
        }
        let floor = ref_lo * (-beta_conj * l as f64).exp();
        rep.check_flag(
            "weighted-floor",
            band_lo >= floor * (1.0 - 1e-9),
            band_lo,
            floor,
            Provenance::Numeric,
            format!("weights may lower the band floor by at most exp(-beta'*L), L = {l}"),
        );
    }
    Ok(rep)
}

/// Weight-removal: spread entry `k` uniformly over a block of
/// `⌈λ_k^{−β}⌉` consecutive slots. Preserves the ℓ¹ mass exactly, lands
/// inside the unit (unweighted) β′-ball, and inflates the objective by at
/// most `e^{β′} e^{β′L} / (e^{β′} − 1)`.
pub fn lambda_reduction(inst: &SequenceInstance) -> Result<SequenceInstance> {
    // Re-validate: the construction is only claimed for feasible points.
    let checked = SequenceInstance::new(
        inst.a.clone(),
        inst.lambda.clone(),
        inst.p,
        inst.beta_conj,
    )?;
    let beta = conjugate(checked.beta_conj);
    let mut b = Vec::new();
    for (k, &ak) in checked.a.iter().enumerate() {
        let j = block_len(lambda_at(&checked.lambda, k), beta) as usize;
        for _ in 0..j {
            b.push(ak / j as f64);
        }
    }
    SequenceInstance::new(b, Vec::new(), checked.p, checked.beta_conj)
}

/// Objective inflation bound of [`lambda_reduction`]:
/// `e^{β′} e^{β′L} / (e^{β′} − 1)`.
pub fn reduction_factor_bound(lambda: &[f64], beta_conj: f64) -> Result<f64> {
    let l = l_lambda(lambda, conjugate(beta_conj))? as f64;
    Ok(beta_conj.exp() * (beta_conj * l).exp() / (beta_conj.exp() - 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    // 1 − e^{−2}: closed-form minimum at unit mass, p = β′ = 2.
    const MU_ONE: f64 = 0.864664716763387308;

    /// Closed form of the norm-inactive minimum: mass h, exponent p > 1,
    /// unit weights give `h^p (1 − e^{−β′/(p−1)})^{p−1}`.
    fn mu_free_closed_form(h: f64, p: f64, beta_conj: f64) -> f64 {
        h.powf(p) * (1.0 - (-beta_conj / (p - 1.0)).exp()).powf(p - 1.0)
    }

    #[test]
    fn slot_overhead_examples() {
        assert_eq!(l_lambda(&[1.0, 1.0, 1.0], 2.0).unwrap(), 0);
        assert_eq!(l_lambda(&[], 2.0).unwrap(), 0);
        assert_eq!(l_lambda(&[0.5, 1.0, 1.0], 2.0).unwrap(), 3);
        // Two entries at 2^{−1/β′} with β′ = 2: λ^{−β} = 2 each, so the
        // overhead is (2−1)+(2−1) = 2 by hand.
        let l = 2f64.powf(-0.5);
        assert_eq!(l_lambda(&[l, l], 2.0).unwrap(), 2);
        assert!(l_lambda(&[0.0], 2.0).is_err());
        assert!(l_lambda(&[1.2], 2.0).is_err());
    }

    #[test]
    fn unit_mass_minimum_matches_closed_form() {
        let sol = mu_auto(1.0, 2.0, 2.0, &[]).unwrap();
        assert!((sol.value - MU_ONE).abs() < 1e-8, "value {}", sol.value);
        assert!(!sol.constraint_active);
        // Minimizer is geometric: a_k = (1 − e^{−2}) e^{−2k}.
        for (k, &a) in sol.minimizer.iter().enumerate().take(6) {
            let want = MU_ONE * (-2.0 * k as f64).exp();
            assert!((a - want).abs() < 1e-8, "slot {k}: {a} vs {want}");
        }
    }

    #[test]
    fn small_mass_scaling_law() {
        let base = mu_auto(1.0, 2.0, 2.0, &[]).unwrap().value;
        for i in 1..=10 {
            let h = i as f64 / 10.0;
            let v = mu_auto(h, 2.0, 2.0, &[]).unwrap().value;
            assert!(
                (v - h * h * base).abs() < 1e-8 * (h * h * base),
                "h = {h}: {v} vs {}",
                h * h * base
            );
        }
        // Independent closed form at a non-integer exponent.
        let v = mu_auto(0.5, 2.7, 1.8, &[]).unwrap().value;
        let want = mu_free_closed_form(0.5, 2.7, 1.8);
        assert!((v - want).abs() < 1e-9 * want, "{v} vs {want}");
    }

    #[test]
    fn flat_witness_is_feasible_and_dominates_minimum() {
        for n in 1..=6u32 {
            let nf = n as f64;
            let a = vec![nf.powf(-0.5); n as usize];
            let inst = SequenceInstance::new(a, vec![], 2.0, 2.0).unwrap();
            // ‖λa‖_{β′}^{β′} = n · (n^{−1/2})² = 1 exactly (to roundoff).
            assert!((inst.weighted_norm_pow() - 1.0).abs() < 1e-12);
            assert!((inst.h - nf.sqrt()).abs() < 1e-12 * nf.sqrt());
            // Geometric sum: objective = n^{−1}(e^{2n} − 1)/(e² − 1).
            let want = (2.0 * nf).exp_m1() / (2f64.exp_m1() * nf);
            assert!((inst.objective() - want).abs() < 1e-10 * want);
            let mu = mu_auto(inst.h, 2.0, 2.0, &[]).unwrap().value;
            assert!(
                mu <= want * (1.0 + 1e-9),
                "n = {n}: minimum {mu} above witness value {want}"
            );
        }
    }

    #[test]
    fn band_stays_within_factor_fifty() {
        let h_grid: Vec<f64> = (1..=6).map(|n| (n as f64).sqrt()).collect();
        let rep = mu_bounds_check(&h_grid, 2.0, 2.0, &[]).unwrap();
        assert!(rep.passed(), "\n{}", rep.render());
    }

    #[test]
    fn weighted_floor_tracks_slot_overhead() {
        // λ₀ = 1/2, β = 2 → block 4 → overhead L = 3.
        let lambda = [0.5];
        assert_eq!(l_lambda(&lambda, 2.0).unwrap(), 3);
        let h_grid: Vec<f64> = (1..=5).map(|n| (n as f64).sqrt()).collect();
        let rep = mu_bounds_check(&h_grid, 2.0, 2.0, &lambda).unwrap();
        assert!(rep.passed(), "\n{}", rep.render());
    }

    #[test]
    fn tightening_weights_never_lowers_the_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for trial in 0..20 {
            let beta_conj = 1.5 + rng.gen::<f64>() * 1.5;
            let p = 1.2 + rng.gen::<f64>() * 1.8;
            let mut lambda: Vec<f64> =
                (0..4).map(|_| 0.4 + 0.6 * rng.gen::<f64>()).collect();
            let k_max = 12;
            // Pick the mass near capacity of the TIGHTER instance so the
            // weighted constraint binds in both solves.
            let idx = rng.gen_range(0..lambda.len());
            let loose = lambda.clone();
            lambda[idx] = (lambda[idx] + 0.3).min(1.0);
            let h = 0.9 * max_feasible_mass(&lambda, beta_conj, k_max);
            let mu_loose = mu_bruteforce(h, p, beta_conj, &loose, k_max).unwrap();
            let mu_tight = mu_bruteforce(h, p, beta_conj, &lambda, k_max).unwrap();
            assert!(
                mu_tight.value >= mu_loose.value * (1.0 - 1e-9),
                "trial {trial}: tightening lambda[{idx}] lowered {} -> {}",
                mu_loose.value,
                mu_tight.value
            );
        }
    }

    #[test]
    fn restarts_agree_with_kkt_on_small_supports() {
        let cases = [
            (1.2, 2.0, 2.0, vec![]),
            (1.9, 2.0, 2.0, vec![0.5]),
            (1.4, 2.5, 1.7, vec![0.8, 0.6]),
            (2.6, 1.5, 3.0, vec![]),
        ];
        for (ci, (h, p, bc, lambda)) in cases.into_iter().enumerate() {
            let (kkt, _) = solve_kkt(h, p, bc, &lambda, 10)
                .map(|(a, act)| (objective_of(&a, p, bc), act))
                .unwrap();
            let (best, _) = mu_restarts(h, p, bc, &lambda, 10, 1000, 99).unwrap();
            let rel = (kkt - best).abs() / kkt.max(best);
            assert!(
                rel < 1e-6,
                "case {ci}: KKT {kkt} vs best-of-1000 {best} (rel {rel:.3e})"
            );
        }
    }

    #[test]
    fn overfull_mass_is_detected_before_solving() {
        // Unit weights on four slots carry at most 4^{1/2} = 2.
        let err = mu_bruteforce(3.0, 2.0, 2.0, &[], 3);
        assert!(matches!(err, Err(Error::Infeasible(_))), "{err:?}");
        // Exactly at capacity is feasible (the flat profile attains it).
        assert!(mu_bruteforce(2.0, 2.0, 2.0, &[], 3).is_ok());
    }

    #[test]
    fn weight_removal_postconditions_hold() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..100 {
            let beta_conj = 1.5 + rng.gen::<f64>() * 1.5;
            let p = 1.0 + rng.gen::<f64>() * 2.0;
            let n = rng.gen_range(3..8);
            let lambda: Vec<f64> = (0..n).map(|_| 0.35 + 0.65 * rng.gen::<f64>()).collect();
            // Random feasible point: flat random, repaired into the ball.
            let mut a: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let tot: f64 = a.iter().sum();
            let h = 0.8 * max_feasible_mass(&lambda, beta_conj, n - 1);
            for x in a.iter_mut() {
                *x *= h / tot;
            }
            repair_feasible(&mut a, &lambda, beta_conj, h);
            let inst = SequenceInstance::new(a, lambda.clone(), p, beta_conj).unwrap();
            let red = lambda_reduction(&inst).unwrap();
            assert!(
                (red.h - inst.h).abs() <= 1e-12 * inst.h,
                "trial {trial}: mass {} -> {}",
                inst.h,
                red.h
            );
            assert!(red.weighted_norm_pow() <= 1.0 + 1e-12, "trial {trial}");
            let factor = reduction_factor_bound(&lambda, beta_conj).unwrap();
            assert!(
                red.objective() <= factor * inst.objective() * (1.0 + 1e-12),
                "trial {trial}: inflation {} above bound {factor}",
                red.objective() / inst.objective()
            );
        }
    }

    #[test]
    fn unit_weights_reduce_to_identity() {
        let inst = SequenceInstance::new(vec![0.3, 0.2, 0.1], vec![], 2.0, 2.0).unwrap();
        let red = lambda_reduction(&inst).unwrap();
        assert_eq!(red.a, inst.a);
    }

    #[test]
    fn instance_validation_rejects_norm_violations() {
        assert!(SequenceInstance::new(vec![2.0], vec![], 2.0, 2.0).is_err());
        assert!(SequenceInstance::new(vec![0.5], vec![1.5], 2.0, 2.0).is_err());
        assert!(SequenceInstance::new(vec![-0.1], vec![], 2.0, 2.0).is_err());
        assert!(SequenceInstance::new(vec![0.5, 0.5], vec![], 0.0, 2.0).is_err());
        assert!(SequenceInstance::new(vec![0.5, 0.5], vec![], 2.0, 1.0).is_err());
    }
}
