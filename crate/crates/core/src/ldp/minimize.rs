//! Convex minimization of the rate function over the admissible pairs
//! that satisfy a closed linear event.
//!
//! Admissibility lets rho be eliminated: parametrize nu by its upper
//! triangle z (z_ij standing for both nu_ij and nu_ji), so the feasible
//! set is a weighted simplex `{z >= 0, w . z = 1}` cut by halfspaces, and
//! the objective
//!
//! ```text
//! F(z) = (1 - d) sum_i rho_i log rho_i - sum_i rho_i log mu_i
//!        + (d/2) sum_ij nu_ij log nu_ij,      rho_i = sum_j nu_ij
//! ```
//!
//! is smooth and convex on the interior. A projected-gradient scheme with
//! backtracking and exact dual projections onto the constraint
//! intersection drives the unit-step projected-gradient residual below
//! tolerance.
//! When the event constrains rho only, the partial minimum over nu is
//! analytic (`nu = rho x rho`) and only the rho simplex is searched.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ldp::event::{triangle_index, EventSpec};
use crate::measures::{rate_function, BondMeasure, RateValue, SpinLaw, SpinMeasure};

/// Floor applied inside logarithms so boundary iterates never evaluate
/// log 0; the resulting gradient still points sharply inward.
const LOG_FLOOR: f64 = 1e-18;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimizerResult {
    pub rho_star: SpinMeasure,
    pub nu_star: BondMeasure,
    pub value: RateValue,
    pub kkt_residual: f64,
    pub iterations: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct MinimizeOptions {
    pub max_iterations: u64,
    pub residual_tol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions {
            max_iterations: 200_000,
            residual_tol: 1e-9,
        }
    }
}

/// Feasible region `{x >= 0, w . x = 1}` intersected with halfspaces
/// `a . x <= b`.
struct Feasible {
    w: Vec<f64>,
    halfspaces: Vec<(Vec<f64>, f64)>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean projection onto `{x >= 0, w . x = 1}` via bisection on the
/// multiplier of the mass constraint.
fn project_weighted_simplex(y: &[f64], w: &[f64]) -> Vec<f64> {
    let phi = |lam: f64| -> f64 {
        y.iter()
            .zip(w)
            .map(|(&yi, &wi)| wi * (yi - lam * wi).max(0.0))
            .sum()
    };
    let mut hi = y
        .iter()
        .zip(w)
        .map(|(&yi, &wi)| yi / wi)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut lo = hi - 1.0;
    while phi(lo) < 1.0 {
        lo -= 2.0 * (hi - lo);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    y.iter()
        .zip(w)
        .map(|(&yi, &wi)| (yi - lam * wi).max(0.0))
        .collect()
}

impl Feasible {
    /// Projection via dual coordinate ascent on the halfspace multipliers:
    /// `x(t) = proj_simplex(y - A^T t)` with each `t_k >= 0` found by
    /// bisection on its (monotone) constraint value. Exact after one pass
    /// for a single halfspace; cycles until the multipliers stabilize.
    fn project_with(&self, y: &[f64], max_cycles: usize) -> Vec<f64> {
        if self.halfspaces.is_empty() {
            return project_weighted_simplex(y, &self.w);
        }
        let m = self.halfspaces.len();
        let mut t = vec![0.0; m];
        let shifted = |t: &[f64]| -> Vec<f64> {
            let mut s = y.to_vec();
            for (tk, (a, _)) in t.iter().zip(&self.halfspaces) {
                if *tk != 0.0 {
                    for (si, ai) in s.iter_mut().zip(a) {
                        *si -= tk * ai;
                    }
                }
            }
            s
        };
        for _ in 0..max_cycles {
            let mut moved = 0.0f64;
            for k in 0..m {
                let (a, b) = &self.halfspaces[k];
                let old = t[k];
                t[k] = 0.0;
                let base = shifted(&t);
                let psi = |tk: f64| -> f64 {
                    let yk: Vec<f64> =
                        base.iter().zip(a).map(|(yi, ai)| yi - tk * ai).collect();
                    dot(a, &project_weighted_simplex(&yk, &self.w)) - b
                };
                if psi(0.0) > 0.0 {
                    let mut hi = 1.0;
                    while psi(hi) > 0.0 && hi < 1e12 {
                        hi *= 2.0;
                    }
                    let mut lo = 0.0;
                    for _ in 0..120 {
                        let mid = 0.5 * (lo + hi);
                        if psi(mid) > 0.0 {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    t[k] = hi;
                }
                moved = moved.max((t[k] - old).abs());
            }
            if moved < 1e-15 {
                break;
            }
        }
        project_weighted_simplex(&shifted(&t), &self.w)
    }

    fn project(&self, y: &[f64]) -> Vec<f64> {
        self.project_with(y, 50)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let mut v = (dot(&self.w, x) - 1.0).abs();
        for &xi in x {
            v = v.max(-xi);
        }
        for (a, b) in &self.halfspaces {
            v = v.max(dot(a, x) - b);
        }
        v
    }
}

struct Solved {
    x: Vec<f64>,
    residual: f64,
    iterations: u64,
    converged: bool,
}

fn projected_gradient(
    feas: &Feasible,
    f: &dyn Fn(&[f64]) -> f64,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    x0: Vec<f64>,
    opts: &MinimizeOptions,
) -> Solved {
    let mut x = x0;
    let mut fx = f(&x);
    let mut lipschitz = 1.0;
    let mut residual = f64::INFINITY;
    let mut best_residual = f64::INFINITY;
    let mut since_improvement = 0u64;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        iterations += 1;
        let g = grad(&x);

        let unit: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - gi).collect();
        let mapped = feas.project(&unit);
        residual = x
            .iter()
            .zip(&mapped)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if residual <= opts.residual_tol {
            return Solved {
                x,
                residual,
                iterations,
                converged: true,
            };
        }
        // first-order progress stalls in a floating-point noise ball well
        // before the tolerance; break out and let the Newton polish finish
        if residual < 0.999 * best_residual {
            best_residual = residual;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement > 500 {
                break;
            }
        }

        loop {
            let trial: Vec<f64> = x
                .iter()
                .zip(&g)
                .map(|(xi, gi)| xi - gi / lipschitz)
                .collect();
            let y = feas.project(&trial);
            let dy: Vec<f64> = y.iter().zip(&x).map(|(a, b)| a - b).collect();
            let fy = f(&y);
            let model = fx + dot(&g, &dy) + 0.5 * lipschitz * dot(&dy, &dy);
            if fy <= model + 1e-12 || lipschitz > 1e14 {
                x = y;
                fx = fy;
                break;
            }
            lipschitz *= 2.0;
        }
        lipschitz = (lipschitz * 0.7).max(1e-6);
    }
    Solved {
        x,
        residual,
        iterations,
        converged: false,
    }
}

/// Gaussian elimination with partial pivoting; `None` on (near-)singular
/// systems.
fn solve_dense(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..n {
            let factor = m[row][col] / m[col][col];
            if factor != 0.0 {
                for k in col..n {
                    m[row][k] -= factor * m[col][k];
                }
                rhs[row] -= factor * rhs[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut s = rhs[col];
        for k in col + 1..n {
            s -= m[col][k] * x[k];
        }
        x[col] = s / m[col][col];
    }
    Some(x)
}

/// Equality-constrained Newton on the face of the feasible set identified
/// by `x0`'s active constraints (pinned coordinates and tight halfspaces).
/// Returns a candidate whose accuracy is limited only by floating point,
/// provided the active set is correct; the caller re-checks the residual.
fn polish_on_face(
    feas: &Feasible,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    hess: &dyn Fn(&[f64]) -> Vec<Vec<f64>>,
    x0: &[f64],
) -> Option<Vec<f64>> {
    const ACTIVE_TOL: f64 = 1e-6;
    let n = x0.len();
    let free: Vec<usize> = (0..n).filter(|&i| x0[i] > ACTIVE_TOL).collect();
    let nf = free.len();
    if nf == 0 {
        return None;
    }
    let mut x = x0.to_vec();
    for i in 0..n {
        if !free.contains(&i) {
            x[i] = 0.0;
        }
    }
    let mut rows: Vec<(Vec<f64>, f64)> =
        vec![(free.iter().map(|&i| feas.w[i]).collect(), 1.0)];
    for (a, b) in &feas.halfspaces {
        if (dot(a, &x) - b).abs() <= ACTIVE_TOL * (1.0 + b.abs()) {
            rows.push((free.iter().map(|&i| a[i]).collect(), *b));
        }
    }
    let m = rows.len();
    if m > nf {
        return None;
    }

    for _ in 0..60 {
        let g_full = grad(&x);
        let h_full = hess(&x);
        let dim = nf + m;
        let mut mat = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for (r, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                mat[r][c] = h_full[i][j];
            }
            rhs[r] = -g_full[i];
        }
        let xf: Vec<f64> = free.iter().map(|&i| x[i]).collect();
        for (k, (a, b)) in rows.iter().enumerate() {
            for (c, ac) in a.iter().enumerate() {
                mat[c][nf + k] = *ac;
                mat[nf + k][c] = *ac;
            }
            rhs[nf + k] = b - dot(a, &xf);
        }
        let sol = solve_dense(mat, rhs)?;
        // step kept strictly inside the positive orthant on free coords
        let mut alpha: f64 = 1.0;
        for (c, &i) in free.iter().enumerate() {
            if sol[c] < 0.0 {
                alpha = alpha.min(-0.9 * x[i] / sol[c]);
            }
        }
        let mut step = 0.0f64;
        for (c, &i) in free.iter().enumerate() {
            x[i] += alpha * sol[c];
            step = step.max(sol[c].abs());
        }
        if !x.iter().all(|v| v.is_finite()) {
            return None;
        }
        if step < 1e-14 {
            break;
        }
    }
    Some(x)
}

/// Replaces the solver state with the Newton-polished point when its exact
/// unit-step projected-gradient residual improves on the current one.
fn try_polish(
    feas: &Feasible,
    grad: &dyn Fn(&[f64]) -> Vec<f64>,
    hess: &dyn Fn(&[f64]) -> Vec<Vec<f64>>,
    solved: &mut Solved,
    opts: &MinimizeOptions,
) {
    if solved.converged {
        return;
    }
    let Some(xp) = polish_on_face(feas, grad, hess, &solved.x) else {
        return;
    };
    if feas.violation(&xp) > 1e-9 {
        return;
    }
    let g = grad(&xp);
    let unit: Vec<f64> = xp.iter().zip(&g).map(|(xi, gi)| xi - gi).collect();
    let mapped = feas.project(&unit);
    let residual = xp
        .iter()
        .zip(&mapped)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if residual < solved.residual {
        solved.x = xp;
        solved.residual = residual;
        solved.converged = residual <= opts.residual_tol;
    }
}

fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

fn safe_ln(x: f64) -> f64 {
    x.max(LOG_FLOOR).ln()
}

/// Minimizes `I(rho, nu)` over admissible pairs in `event` with default
/// options.
pub fn minimize_rate(event: &EventSpec, mu: &SpinLaw, d: u64) -> Result<MinimizerResult> {
    minimize_rate_with(event, mu, d, &MinimizeOptions::default())
}

pub fn minimize_rate_with(
    event: &EventSpec,
    mu: &SpinLaw,
    d: u64,
    opts: &MinimizeOptions,
) -> Result<MinimizerResult> {
    let q = mu.q();
    event.validate(q)?;
    if d == 0 {
        return Err(Error::usage("minimize_rate: d must be positive"));
    }

    if event.constraints.is_empty() {
        // Unique zero of the rate function.
        let rho = SpinMeasure::new(mu.weights().to_vec())?;
        let nu = BondMeasure::product(&rho);
        let value = rate_function(&rho, &nu, mu, d)?;
        return Ok(MinimizerResult {
            rho_star: rho,
            nu_star: nu,
            value,
            kkt_residual: 0.0,
            iterations: 0,
        });
    }

    if event.constrains_rho_only() {
        minimize_rho_only(event, mu, d, opts)
    } else {
        minimize_general(event, mu, d, opts)
    }
}

fn minimize_rho_only(
    event: &EventSpec,
    mu: &SpinLaw,
    d: u64,
    opts: &MinimizeOptions,
) -> Result<MinimizerResult> {
    let q = mu.q();
    let feas = Feasible {
        w: vec![1.0; q],
        halfspaces: event.rho_halfspaces(),
    };
    let start = feas.project_with(&vec![1.0 / q as f64; q], 20_000);
    if feas.violation(&start) > 1e-7 {
        return Err(Error::InfeasibleEvent(
            "no probability vector satisfies the rho constraints".into(),
        ));
    }

    let mu_ln: Vec<f64> = mu.weights().iter().map(|&m| safe_ln(m)).collect();
    let f = |rho: &[f64]| -> f64 {
        rho.iter()
            .zip(&mu_ln)
            .map(|(&r, &lm)| xlogx(r) - r * lm)
            .sum()
    };
    let grad = |rho: &[f64]| -> Vec<f64> {
        rho.iter()
            .zip(&mu_ln)
            .map(|(&r, &lm)| safe_ln(r) - lm + 1.0)
            .collect()
    };

    let hess = |rho: &[f64]| -> Vec<Vec<f64>> {
        let mut h = vec![vec![0.0; q]; q];
        for i in 0..q {
            h[i][i] = 1.0 / rho[i].max(LOG_FLOOR);
        }
        h
    };

    let mut solved = projected_gradient(&feas, &f, &grad, start, opts);
    try_polish(&feas, &grad, &hess, &mut solved, opts);
    let result = build_result_from_rho(&solved, mu, d)?;
    if !solved.converged {
        return Err(Error::NonConvergence {
            iterations: solved.iterations,
            residual: solved.residual,
            best: Box::new(result),
        });
    }
    Ok(result)
}

fn build_result_from_rho(solved: &Solved, mu: &SpinLaw, d: u64) -> Result<MinimizerResult> {
    let s: f64 = solved.x.iter().sum();
    let rho = SpinMeasure::new(solved.x.iter().map(|&r| r / s).collect())?;
    let nu = BondMeasure::product(&rho);
    let value = rate_function(&rho, &nu, mu, d)?;
    Ok(MinimizerResult {
        rho_star: rho,
        nu_star: nu,
        value,
        kkt_residual: solved.residual,
        iterations: solved.iterations,
    })
}

fn minimize_general(
    event: &EventSpec,
    mu: &SpinLaw,
    d: u64,
    opts: &MinimizeOptions,
) -> Result<MinimizerResult> {
    let q = mu.q();
    let dim = q * (q + 1) / 2;
    let mut w = vec![0.0; dim];
    for i in 0..q {
        for j in i..q {
            w[triangle_index(q, i, j)] = if i == j { 1.0 } else { 2.0 };
        }
    }
    let feas = Feasible {
        w,
        halfspaces: event.triangle_halfspaces(q),
    };

    // Start from the triangle encoding of mu x mu.
    let mut z0 = vec![0.0; dim];
    for i in 0..q {
        for j in i..q {
            z0[triangle_index(q, i, j)] = mu.get(i) * mu.get(j);
        }
    }
    let start = feas.project_with(&z0, 20_000);
    if feas.violation(&start) > 1e-7 {
        return Err(Error::InfeasibleEvent(
            "no admissible bond measure satisfies the constraints".into(),
        ));
    }

    let marginal = |z: &[f64]| -> Vec<f64> {
        let mut rho = vec![0.0; q];
        for i in 0..q {
            for j in 0..q {
                let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
                rho[i] += z[triangle_index(q, lo, hi)];
            }
        }
        rho
    };
    let mu_ln: Vec<f64> = mu.weights().iter().map(|&m| safe_ln(m)).collect();
    let df = d as f64;

    let f = |z: &[f64]| -> f64 {
        let rho = marginal(z);
        let mut val = 0.0;
        for i in 0..q {
            val += (1.0 - df) * xlogx(rho[i]) - rho[i] * mu_ln[i];
        }
        for i in 0..q {
            for j in i..q {
                let zij = z[triangle_index(q, i, j)];
                let mult = if i == j { 1.0 } else { 2.0 };
                val += 0.5 * df * mult * xlogx(zij);
            }
        }
        val
    };
    let grad = |z: &[f64]| -> Vec<f64> {
        let rho = marginal(z);
        let rho_ln: Vec<f64> = rho.iter().map(|&r| safe_ln(r)).collect();
        let mut g = vec![0.0; dim];
        for i in 0..q {
            for j in i..q {
                let k = triangle_index(q, i, j);
                let zij = z[k];
                g[k] = if i == j {
                    (1.0 - df) * (rho_ln[i] + 1.0) - mu_ln[i] + 0.5 * df * (safe_ln(zij) + 1.0)
                } else {
                    (1.0 - df) * (rho_ln[i] + rho_ln[j] + 2.0) - mu_ln[i] - mu_ln[j]
                        + df * (safe_ln(zij) + 1.0)
                };
            }
        }
        g
    };

    let hess = |z: &[f64]| -> Vec<Vec<f64>> {
        let rho = marginal(z);
        let dim = z.len();
        let mut h = vec![vec![0.0; dim]; dim];
        // J_ik = d rho_i / d z_k is 0/1-valued: z_ab feeds rho_a (and
        // rho_b when a != b)
        let mut feeds: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for a in 0..q {
            for b in a..q {
                let k = triangle_index(q, a, b);
                feeds[k].push(a);
                if b != a {
                    feeds[k].push(b);
                }
            }
        }
        for k in 0..dim {
            for l in 0..dim {
                let mut s = 0.0;
                for &i in &feeds[k] {
                    if feeds[l].contains(&i) {
                        s += 1.0 / rho[i].max(LOG_FLOOR);
                    }
                }
                h[k][l] = (1.0 - df) * s;
            }
            let mult = if feeds[k].len() == 1 { 1.0 } else { 2.0 };
            h[k][k] += 0.5 * df * mult / z[k].max(LOG_FLOOR);
        }
        h
    };

    let mut solved = projected_gradient(&feas, &f, &grad, start, opts);
    try_polish(&feas, &grad, &hess, &mut solved, opts);
    let result = build_result_from_triangle(&solved, mu, d, q)?;
    if !solved.converged {
        return Err(Error::NonConvergence {
            iterations: solved.iterations,
            residual: solved.residual,
            best: Box::new(result),
        });
    }
    Ok(result)
}

fn build_result_from_triangle(
    solved: &Solved,
    mu: &SpinLaw,
    d: u64,
    q: usize,
) -> Result<MinimizerResult> {
    let mut rows = vec![vec![0.0; q]; q];
    for i in 0..q {
        for j in i..q {
            let z = solved.x[triangle_index(q, i, j)];
            rows[i][j] = z;
            rows[j][i] = z;
        }
    }
    let nu = BondMeasure::from_rows(rows)?;
    let marg = nu.row_marginal();
    let s: f64 = marg.iter().sum();
    let rho = SpinMeasure::new(marg.iter().map(|&r| r / s).collect())?;
    let value = rate_function(&rho, &nu, mu, d)?;
    Ok(MinimizerResult {
        rho_star: rho,
        nu_star: nu,
        value,
        kkt_residual: solved.residual,
        iterations: solved.iterations,
    })
}
