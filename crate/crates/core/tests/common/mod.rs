//! Independent reference for the soft-margin dual on tiny problems.
//!
//! Accelerated projected gradient over `{0 <= a <= C, y.a = 0}`. The
//! projection finds the multiplier `nu` of the equality constraint by
//! bisection on the monotone map `nu -> sum y_i clip(z_i - nu y_i, 0, C)`.

#![allow(dead_code)]

use rand::Rng;

pub struct Problem {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
    pub c: f64,
}

pub fn gram(rows: &[Vec<f64>], kernel: impl Fn(&[f64], &[f64]) -> f64) -> Vec<Vec<f64>> {
    rows.iter()
        .map(|a| rows.iter().map(|b| kernel(a, b)).collect())
        .collect()
}

/// `1/2 a'Qa - sum a` with `Q_ij = y_i y_j K_ij`.
pub fn objective(k: &[Vec<f64>], y: &[f64], a: &[f64]) -> f64 {
    let n = a.len();
    let mut quad = 0.0;
    for i in 0..n {
        for j in 0..n {
            quad += a[i] * a[j] * y[i] * y[j] * k[i][j];
        }
    }
    0.5 * quad - a.iter().sum::<f64>()
}

fn project(z: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> {
        z.iter()
            .zip(y)
            .map(|(&zi, &yi)| (zi - nu * yi).clamp(0.0, c))
            .collect()
    };
    let g = |nu: f64| -> f64 { at(nu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let span = z.iter().fold(0.0f64, |m, v| m.max(v.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-span, span);
    // g is non-increasing in nu.
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

/// Minimizer of the dual objective and its value.
pub fn solve(k: &[Vec<f64>], labels: &[i8], c: f64) -> (Vec<f64>, f64) {
    let n = labels.len();
    let y: Vec<f64> = labels.iter().map(|&l| f64::from(l)).collect();
    let lipschitz: f64 = (0..n)
        .map(|i| (0..n).map(|j| k[i][j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
        .max(1e-12);
    let step = 1.0 / lipschitz;
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| (0..n).map(|j| y[i] * y[j] * k[i][j] * a[j]).sum::<f64>() - 1.0)
            .collect()
    };
    let mut x = vec![0.0; n];
    let mut v = x.clone();
    let mut t = 1.0f64;
    let mut best = (x.clone(), objective(k, &y, &x));
    for _ in 0..40_000 {
        let g = grad(&v);
        let z: Vec<f64> = v.iter().zip(&g).map(|(vi, gi)| vi - step * gi).collect();
        let next = project(&z, &y, c);
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let f_next = objective(k, &y, &next);
        // Restart momentum whenever the objective goes up.
        if f_next > best.1 {
            v = best.0.clone();
            t = 1.0;
            continue;
        }
        v = next
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / t_next * (a - b))
            .collect();
        let moved = next
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = next;
        t = t_next;
        best = (x.clone(), f_next);
        if moved < 1e-14 {
            // An extrapolated point can project back onto the same vertex, so
            // stop only at a fixed point of the plain projected step from x.
            let g = grad(&x);
            let z: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let residual = project(&z, &y, c)
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            if residual < 1e-13 {
                break;
            }
            v = x.clone();
            t = 1.0;
        }
    }
    best
}

/// Random problem with `2..=8` points in `1..=3` dimensions and both classes.
pub fn random_problem<R: Rng>(rng: &mut R) -> Problem {
    let n = rng.gen_range(2..=8);
    let q = rng.gen_range(1..=3);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..q).map(|_| rng.gen::<f64>()).collect())
        .collect();
    let mut labels: Vec<i8> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { 1 } else { -1 })
        .collect();
    labels[0] = 1;
    labels[1] = -1;
    Problem {
        rows,
        labels,
        c: rng.gen_range(0.1..10.0),
    }
}
