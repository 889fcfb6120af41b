//! Bounded Nelder–Mead with deterministic multi-starts.
//!
//! The simplex moves in unconstrained coordinates `z`; each coordinate maps
//! into its feasible set through [`Bound::to_x`]. Non-negative coordinates use
//! `x = e^z`, so the boundary value 0 is only reached in the limit and is
//! checked separately after the search.

use serde::{Deserialize, Serialize};

const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
const Z_LIMIT: f64 = 30.0;
const LOG_LIMIT: (f64, f64) = (-50.0, 6.0);
const PENALTY: f64 = 1e300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Bound {
    /// Open interval `(lo, hi)`.
    Open { lo: f64, hi: f64 },
    /// `[0, ∞)`.
    NonNegative,
    Free,
}

impl Bound {
    pub fn to_x(&self, z: f64) -> f64 {
        match *self {
            Bound::Open { lo, hi } => {
                let z = z.clamp(-Z_LIMIT, Z_LIMIT);
                lo + (hi - lo) / (1.0 + (-z).exp())
            }
            Bound::NonNegative => z.clamp(LOG_LIMIT.0, LOG_LIMIT.1).exp(),
            Bound::Free => z,
        }
    }

    pub fn to_z(&self, x: f64) -> f64 {
        match *self {
            Bound::Open { lo, hi } => {
                let t = ((x - lo) / (hi - lo)).clamp(1e-13, 1.0 - 1e-13);
                (t / (1.0 - t)).ln()
            }
            Bound::NonNegative => x.max(LOG_LIMIT.0.exp()).ln(),
            Bound::Free => x,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        match *self {
            Bound::Open { lo, hi } => x > lo && x < hi,
            Bound::NonNegative => x >= 0.0 && x.is_finite(),
            Bound::Free => x.is_finite(),
        }
    }

    /// Start value for the low-discrepancy coordinate `h ∈ [0, 1)`.
    fn start(&self, h: f64) -> f64 {
        match *self {
            Bound::Open { lo, hi } => lo + (hi - lo) * (0.05 + 0.9 * h),
            Bound::NonNegative => 0.05 + h,
            Bound::Free => 2.0 * h - 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOptions {
    /// Number of starting points (at least one).
    pub restarts: usize,
    /// Evaluation budget per Nelder–Mead run.
    pub max_evals: usize,
    /// Simplex diameter, in the original coordinates, that counts as converged.
    pub tol: f64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { restarts: 4, max_evals: 4000, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Whether the run that produced `x` met the diameter tolerance.
    pub converged: bool,
    pub starts: usize,
    /// Non-negative coordinates that ended exactly at 0.
    pub at_boundary: Vec<usize>,
}

/// Radical-inverse (Halton) point `index` in `dim` dimensions.
pub fn halton(index: usize, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|k| {
            let base = PRIMES[k % PRIMES.len()] as usize;
            let mut f = 1.0;
            let mut r = 0.0;
            let mut i = index;
            while i > 0 {
                f /= base as f64;
                r += f * (i % base) as f64;
                i /= base;
            }
            r
        })
        .collect()
}

struct Run {
    x: Vec<f64>,
    value: f64,
    evals: usize,
    converged: bool,
}

fn safe(v: f64) -> f64 {
    if v.is_nan() {
        PENALTY
    } else {
        v.min(PENALTY)
    }
}

/// Nelder–Mead over the coordinates in `active`; the others stay at `base`.
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    bounds: &[Bound],
    active: &[usize],
    base: &[f64],
    opts: &OptimizeOptions,
) -> Run {
    let k = active.len();
    let to_full = |z: &[f64]| {
        let mut x = base.to_vec();
        for (j, &i) in active.iter().enumerate() {
            x[i] = bounds[i].to_x(z[j]);
        }
        x
    };
    let evals = std::cell::Cell::new(0usize);
    let eval = |z: &[f64]| {
        evals.set(evals.get() + 1);
        safe(f(&to_full(z)))
    };
    if k == 0 {
        let v = eval(&[]);
        return Run { x: base.to_vec(), value: v, evals: evals.get(), converged: true };
    }

    let z0: Vec<f64> = active.iter().map(|&i| bounds[i].to_z(base[i])).collect();
    let mut simplex = vec![z0.clone()];
    for j in 0..k {
        let mut z = z0.clone();
        z[j] += if z[j] > 0.0 { -0.6 } else { 0.6 };
        simplex.push(z);
    }
    let mut values: Vec<f64> = simplex.iter().map(|z| eval(z)).collect();
    let mut converged = false;

    loop {
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let xs: Vec<Vec<f64>> = simplex.iter().map(|z| to_full(z)).collect();
        let mut diameter = 0.0_f64;
        for x in &xs[1..] {
            for &i in active {
                diameter = diameter.max((x[i] - xs[0][i]).abs());
            }
        }
        if diameter < opts.tol {
            converged = true;
            break;
        }
        if evals.get() >= opts.max_evals {
            break;
        }

        let centroid: Vec<f64> =
            (0..k).map(|j| simplex[..k].iter().map(|z| z[j]).sum::<f64>() / k as f64).collect();
        let worst = simplex[k].clone();
        let along = |t: f64| -> Vec<f64> { (0..k).map(|j| centroid[j] + t * (worst[j] - centroid[j])).collect() };

        let zr = along(-1.0);
        let fr = eval(&zr);
        if fr < values[0] {
            let ze = along(-2.0);
            let fe = eval(&ze);
            if fe < fr {
                simplex[k] = ze;
                values[k] = fe;
            } else {
                simplex[k] = zr;
                values[k] = fr;
            }
            continue;
        }
        if fr < values[k - 1] {
            simplex[k] = zr;
            values[k] = fr;
            continue;
        }
        let (zc, fc) = if fr < values[k] {
            let zc = along(-0.5);
            let fc = eval(&zc);
            (zc, fc)
        } else {
            let zc = along(0.5);
            let fc = eval(&zc);
            (zc, fc)
        };
        if fc < values[k].min(fr) {
            simplex[k] = zc;
            values[k] = fc;
            continue;
        }
        let best = simplex[0].clone();
        for i in 1..=k {
            let z: Vec<f64> = (0..k).map(|j| best[j] + 0.5 * (simplex[i][j] - best[j])).collect();
            values[i] = eval(&z);
            simplex[i] = z;
        }
    }
    Run { x: to_full(&simplex[0]), value: values[0], evals: evals.get(), converged }
}

/// Minimises `f` over the box described by `bounds`.
///
/// Starts are `x0` (when given) followed by Halton points; the best end point
/// is then polished by one more run. Each non-negative coordinate is finally
/// tried at exactly 0, re-optimising the rest when that improves the value.
pub fn optimize<F: Fn(&[f64]) -> f64>(
    f: F,
    bounds: &[Bound],
    x0: Option<&[f64]>,
    opts: &OptimizeOptions,
) -> OptimizeResult {
    let dim = bounds.len();
    let all: Vec<usize> = (0..dim).collect();
    let n_starts = opts.restarts.max(1);
    let mut starts: Vec<Vec<f64>> = Vec::with_capacity(n_starts);
    if let Some(x0) = x0 {
        starts.push(x0.iter().zip(bounds).map(|(&x, b)| b.to_x(b.to_z(x))).collect());
    }
    let mut idx = 1;
    while starts.len() < n_starts {
        let h = halton(idx, dim);
        starts.push(bounds.iter().zip(&h).map(|(b, &h)| b.start(h)).collect());
        idx += 1;
    }

    let mut evals = 0;
    let mut best: Option<Run> = None;
    for s in &starts {
        let run = nelder_mead(&f, bounds, &all, s, opts);
        evals += run.evals;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one start");
    let polish = nelder_mead(&f, bounds, &all, &best.x, opts);
    evals += polish.evals;
    if polish.value <= best.value {
        best = polish;
    }

    let mut at_boundary = Vec::new();
    for (i, b) in bounds.iter().enumerate() {
        if *b != Bound::NonNegative {
            continue;
        }
        let mut cand = best.x.clone();
        cand[i] = 0.0;
        let v = safe(f(&cand));
        evals += 1;
        if v > best.value {
            continue;
        }
        let rest: Vec<usize> = all.iter().copied().filter(|&j| j != i && !at_boundary.contains(&j)).collect();
        let mut run = nelder_mead(&f, bounds, &rest, &cand, opts);
        evals += run.evals;
        if run.value > v {
            run = Run { x: cand, value: v, evals: 0, converged: best.converged };
        }
        if run.value <= best.value {
            best = run;
            at_boundary.push(i);
        }
    }
    at_boundary.retain(|&i| best.x[i] == 0.0);

    OptimizeResult {
        x: best.x,
        value: best.value,
        evaluations: evals,
        converged: best.converged,
        starts: starts.len(),
        at_boundary,
    }
}
