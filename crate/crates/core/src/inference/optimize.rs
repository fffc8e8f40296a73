//! Quasi-Newton minimisation with central-difference gradients.

/// Outcome of one BFGS run.
#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
}

const GRAD_STEP: f64 = 1e-5;

pub(crate) fn gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let xi = x[i];
            probe[i] = xi + GRAD_STEP;
            let up = f(&probe);
            probe[i] = xi - GRAD_STEP;
            let down = f(&probe);
            probe[i] = xi;
            if up.is_finite() && down.is_finite() {
                (up - down) / (2.0 * GRAD_STEP)
            } else {
                // One-sided difference at the edge of the feasible box.
                let here = f(x);
                if up.is_finite() {
                    (up - here) / GRAD_STEP
                } else if down.is_finite() {
                    (here - down) / GRAD_STEP
                } else {
                    0.0
                }
            }
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimises `f`, which returns `+inf` outside its feasible region.
pub(crate) fn bfgs<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], grad_tol: f64, max_iter: usize) -> Minimum {
    let n = x0.len();
    let identity = |h: &mut Vec<f64>| {
        h.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            h[i * n + i] = 1.0;
        }
    };
    let mut h = vec![0.0; n * n];
    identity(&mut h);

    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut g = gradient(f, &x);
    let mut iterations = 0;
    let mut fresh = true;

    while iterations < max_iter {
        if norm(&g) < grad_tol || !fx.is_finite() {
            break;
        }
        iterations += 1;
        let mut p: Vec<f64> = (0..n).map(|i| -(0..n).map(|j| h[i * n + j] * g[j]).sum::<f64>()).collect();
        let mut slope = dot(&p, &g);
        if slope >= 0.0 {
            identity(&mut h);
            p = g.iter().map(|v| -v).collect();
            slope = dot(&p, &g);
        }
        // Keep the first trial step bounded in transformed space.
        let step_len = norm(&p);
        let mut alpha: f64 = if step_len > 2.0 { 2.0 / step_len } else { 1.0 };

        let mut accepted = None;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + alpha * pi).collect();
            let ft = f(&trial);
            if ft.is_finite() && ft <= fx + 1e-4 * alpha * slope {
                accepted = Some((trial, ft));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            if fresh {
                break;
            }
            identity(&mut h);
            fresh = true;
            continue;
        };
        let g_new = gradient(f, &x_new);
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-14 {
            let rho = 1.0 / sy;
            let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
            let yhy = dot(&y, &hy);
            let mut next = h.clone();
            for i in 0..n {
                for j in 0..n {
                    next[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
            h = next;
        }
        fresh = false;
        x = x_new;
        fx = f_new;
        g = g_new;
    }
    Minimum {
        grad_norm: norm(&g),
        x,
        value: fx,
    }
}

/// Central-difference Hessian with step `h`.
pub(crate) fn hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let eval = |di: usize, si: f64, dj: usize, sj: f64| {
        let mut p = x.to_vec();
        p[di] += si * h;
        p[dj] += sj * h;
        f(&p)
    };
    let f0 = f(x);
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        out[i][i] = (eval(i, 1.0, i, 0.0) - 2.0 * f0 + eval(i, -1.0, i, 0.0)) / (h * h);
        for j in 0..i {
            let v = (eval(i, 1.0, j, 1.0) - eval(i, 1.0, j, -1.0) - eval(i, -1.0, j, 1.0)
                + eval(i, -1.0, j, -1.0))
                / (4.0 * h * h);
            out[i][j] = v;
            out[j][i] = v;
        }
    }
    out
}

/// Inverse of a small symmetric matrix by Gauss-Jordan elimination.
pub(crate) fn invert(m: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = m.len();
    let mut a: Vec<Vec<f64>> = m
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        let d = a[col][col];
        a[col].iter_mut().for_each(|v| *v /= d);
        for r in 0..n {
            if r != col {
                let factor = a[r][col];
                if factor != 0.0 {
                    let pivot_row = a[col].clone();
                    a[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= factor * p);
                }
            }
        }
    }
    Some(a.into_iter().map(|r| r[n..].to_vec()).collect())
}
