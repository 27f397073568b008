//! Reference implementations used as test oracles. None of these call into
//! the crate's solvers or proximal operators.

#![allow(dead_code)]

use gglopt::nalgebra::{Cholesky, DMatrix, DVector};
use gglopt::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, p: usize, scale: f64) -> Matrix {
    let mut m = Matrix::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = rng.random_range(-scale..scale);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// `X X^T / n` for a random `p x n` Gaussian-ish `X` plus a ridge: SPD with a
/// spread of off-diagonal magnitudes.
pub fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> Matrix {
    let n = p + 3;
    let x = DMatrix::from_fn(p, n, |_, _| rng.random_range(-1.0..1.0));
    let mut s = &x * x.transpose() / n as f64;
    for i in 0..p {
        s[(i, i)] += 0.05;
    }
    symmetrized(s)
}

pub fn symmetrized(m: Matrix) -> Matrix {
    (&m + m.transpose()) * 0.5
}

/// Block-diagonal SPD matrix with random block sizes and no entries across
/// blocks, after a random permutation of the variables.
pub fn random_fragmented(rng: &mut ChaCha8Rng, p: usize, max_block: usize) -> Matrix {
    let mut sizes = Vec::new();
    let mut left = p;
    while left > 0 {
        let b = rng.random_range(1..=max_block.min(left));
        sizes.push(b);
        left -= b;
    }
    let mut s = Matrix::zeros(p, p);
    let mut at = 0;
    for b in sizes {
        let block = random_spd(rng, b);
        s.view_mut((at, at), (b, b)).copy_from(&block);
        at += b;
    }
    let mut perm: Vec<usize> = (0..p).collect();
    for i in (1..p).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    permute(&s, &perm)
}

pub fn permute(m: &Matrix, perm: &[usize]) -> Matrix {
    let p = m.nrows();
    Matrix::from_fn(p, p, |i, j| m[(perm[i], perm[j])])
}

pub fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Cyclic Jacobi rotations until the off-diagonal mass is below `1e-15`
/// relative. Returns eigenvalues and eigenvectors (columns), unsorted.
pub fn jacobi_eigen(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = Matrix::identity(n, n);
    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if off <= 1e-30 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[(i, i)]).collect(), v)
}

/// `Q diag(f(d)) Q^T` through the Jacobi decomposition.
pub fn spectral_map(a: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let (d, q) = jacobi_eigen(a);
    let fd = DVector::from_iterator(d.len(), d.into_iter().map(f));
    symmetrized(&q * Matrix::from_diagonal(&fd) * q.transpose())
}

/// Root of `x - d - beta/x = 0` on `x > 0` by bisection.
pub fn log_barrier_root_bisect(d: f64, beta: f64) -> f64 {
    let g = |x: f64| x - d - beta / x;
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = d.abs() + beta.sqrt() + 1.0;
    while g(hi) < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn oracle_log_det(a: &Matrix, beta: f64) -> Matrix {
    spectral_map(a, |d| log_barrier_root_bisect(d, beta))
}

pub fn oracle_nuclear_psd(a: &Matrix, tau: f64) -> Matrix {
    spectral_map(a, |d| (d - tau).max(0.0))
}

/// Soft thresholding as the best of the three stationary candidates of
/// `0.5 (y - x)^2 + tau |y|`.
pub fn oracle_soft(x: f64, tau: f64) -> f64 {
    let f = |y: f64| 0.5 * (y - x).powi(2) + tau * y.abs();
    let mut cands = vec![0.0];
    if x - tau > 0.0 {
        cands.push(x - tau);
    }
    if x + tau < 0.0 {
        cands.push(x + tau);
    }
    cands
        .into_iter()
        .min_by(|a, b| f(*a).partial_cmp(&f(*b)).unwrap())
        .unwrap()
}

/// `argmin 0.5 ||x - v||^2 + tau ||x||_2`: the solution is `t v/||v||`;
/// `t` is found by bisection on the derivative `t - ||v|| + tau`.
pub fn oracle_group(v: &[f64], tau: f64) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return vec![0.0; v.len()];
    }
    let dphi = |t: f64| t - norm + tau;
    if dphi(0.0) >= 0.0 {
        return vec![0.0; v.len()];
    }
    let (mut lo, mut hi) = (0.0, norm);
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if dphi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    v.iter().map(|x| t * x / norm).collect()
}

/// Dual block coordinate descent for
/// `argmin 0.5 ||x - v||^2 + l1 ||x||_1 + l2 ||x||_2`:
/// `x = v - a - b` with `|a_i| <= l1` and `||b|| <= l2`.
pub fn oracle_sparse_group(v: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    let n = v.len();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for _ in 0..200_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            let new = (v[i] - b[i]).clamp(-l1, l1);
            change = change.max((new - a[i]).abs());
            a[i] = new;
        }
        let w: Vec<f64> = (0..n).map(|i| v[i] - a[i]).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = if norm > l2 { l2 / norm } else { 1.0 };
        for i in 0..n {
            let new = w[i] * scale;
            change = change.max((new - b[i]).abs());
            b[i] = new;
        }
        if change < 1e-16 {
            break;
        }
    }
    (0..n).map(|i| v[i] - a[i] - b[i]).collect()
}

/// Dual coordinate descent for
/// `argmin 0.5 ||x - v||^2 + l1 ||x||_1 + l2 sum |x_{k+1} - x_k|`:
/// `x = v - w - D^T z` with `|w_i| <= l1`, `|z_j| <= l2`, `(D x)_j = x_{j+1} - x_j`.
pub fn oracle_fused(v: &[f64], l1: f64, l2: f64) -> Vec<f64> {
    let n = v.len();
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n.saturating_sub(1)];
    let primal = |w: &[f64], z: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut x = v[i] - w[i];
                // (D^T z)_i = z_{i-1} - z_i
                if i > 0 {
                    x -= z[i - 1];
                }
                if i + 1 < n {
                    x += z[i];
                }
                x
            })
            .collect()
    };
    let mut x = primal(&w, &z);
    for _ in 0..2_000_000 {
        let mut change = 0.0f64;
        for i in 0..n {
            // minimizing 0.5||x||^2 in w_i alone: x_i + w_i is fixed
            let base = x[i] + w[i];
            let new = base.clamp(-l1, l1);
            change = change.max((new - w[i]).abs());
            x[i] = base - new;
            w[i] = new;
        }
        for j in 0..n.saturating_sub(1) {
            // x_j += z_j, x_{j+1} -= z_j; minimize x_j^2 + x_{j+1}^2 in z_j
            let a = x[j] - z[j];
            let b = x[j + 1] + z[j];
            let new = ((b - a) / 2.0).clamp(-l2, l2);
            change = change.max((new - z[j]).abs());
            x[j] = a + new;
            x[j + 1] = b - new;
            z[j] = new;
        }
        if change < 1e-17 {
            break;
        }
    }
    primal(&w, &z)
}

pub fn oracle_tv(v: &[f64], tau: f64) -> Vec<f64> {
    oracle_fused(v, 0.0, tau)
}

/// Objective `-log det T + tr(S T) + lambda sum_{i != j} |T_ij|`, infinite
/// outside the positive definite cone.
pub fn sgl_objective(s: &Matrix, t: &Matrix, lambda: f64) -> f64 {
    let Some(ch) = Cholesky::new(t.clone()) else {
        return f64::INFINITY;
    };
    let logdet: f64 = 2.0 * ch.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
    let tr: f64 = s.component_mul(t).sum();
    let p = t.nrows();
    let mut pen = 0.0;
    for i in 0..p {
        for j in 0..p {
            if i != j {
                pen += t[(i, j)].abs();
            }
        }
    }
    -logdet + tr + lambda * pen
}

/// Exhaustive minimizer for tiny single graphical lasso problems.
///
/// For every sign pattern in `{-1, 0, +1}` on the upper off-diagonal entries
/// the penalty is linear on the corresponding face, so damped Newton on the
/// smooth objective restricted to the free coordinates finds that face's
/// candidate. The true objective at every Newton iterate is an upper bound
/// on the optimum; the pattern of the true minimizer attains it.
pub fn brute_force_sgl(s: &Matrix, lambda: f64) -> (f64, Matrix) {
    let p = s.nrows();
    let pairs: Vec<(usize, usize)> = (0..p)
        .flat_map(|i| ((i + 1)..p).map(move |j| (i, j)))
        .collect();
    let patterns = 3usize.pow(pairs.len() as u32);
    let mut best = (f64::INFINITY, Matrix::identity(p, p));
    for code in 0..patterns {
        let mut c = code;
        let signs: Vec<i32> = pairs
            .iter()
            .map(|_| {
                let v = (c % 3) as i32 - 1;
                c /= 3;
                v
            })
            .collect();
        let (val, t) = newton_on_face(s, lambda, &pairs, &signs);
        if val < best.0 {
            best = (val, t);
        }
    }
    best
}

fn terms(i: usize, j: usize) -> Vec<(usize, usize)> {
    if i == j {
        vec![(i, i)]
    } else {
        vec![(i, j), (j, i)]
    }
}

fn newton_on_face(s: &Matrix, lambda: f64, pairs: &[(usize, usize)], signs: &[i32]) -> (f64, Matrix) {
    let p = s.nrows();
    // basis: diagonal units, then the free symmetric off-diagonal pairs
    let mut basis: Vec<(usize, usize, f64)> = (0..p).map(|i| (i, i, 0.0)).collect();
    for (&(i, j), &sg) in pairs.iter().zip(signs) {
        if sg != 0 {
            basis.push((i, j, sg as f64));
        }
    }
    let m = basis.len();
    let build = |x: &DVector<f64>| {
        let mut t = Matrix::zeros(p, p);
        for (a, &(i, j, _)) in basis.iter().enumerate() {
            t[(i, j)] = x[a];
            t[(j, i)] = x[a];
        }
        t
    };
    let smooth = |t: &Matrix| -> f64 {
        let Some(ch) = Cholesky::new(t.clone()) else {
            return f64::INFINITY;
        };
        let logdet: f64 = 2.0 * ch.l().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        let mut lin = s.component_mul(t).sum();
        for &(i, j, sg) in &basis {
            if i != j {
                lin += 2.0 * lambda * sg * t[(i, j)];
            }
        }
        -logdet + lin
    };
    let mut x = DVector::from_iterator(m, basis.iter().map(|&(i, j, _)| if i == j { 1.0 / s[(i, i)] } else { 0.0 }));
    let mut best = (f64::INFINITY, build(&x));
    for _ in 0..200 {
        let t = build(&x);
        let truth = sgl_objective(s, &t, lambda);
        if truth < best.0 {
            best = (truth, t.clone());
        }
        let w = t.clone().try_inverse().unwrap();
        let mut g = DVector::zeros(m);
        let mut h = DMatrix::zeros(m, m);
        for (a, &(i, j, sg)) in basis.iter().enumerate() {
            let mult = if i == j { 1.0 } else { 2.0 };
            g[a] = mult * (s[(i, j)] - w[(i, j)]) + if i == j { 0.0 } else { 2.0 * lambda * sg };
            for (b, &(k, l, _)) in basis.iter().enumerate() {
                // tr(W E_a W E_b) summed over the unit terms of each basis matrix
                let mut val = 0.0;
                for (r, c) in terms(i, j) {
                    for (u, v) in terms(k, l) {
                        val += w[(v, r)] * w[(c, u)];
                    }
                }
                h[(a, b)] = val;
            }
        }
        if g.amax() < 1e-14 {
            break;
        }
        let Some(step) = Cholesky::new(h.clone()).map(|c| c.solve(&g)) else {
            break;
        };
        let f0 = smooth(&t);
        let slope = -g.dot(&step);
        let mut alpha = 1.0;
        let mut moved = false;
        while alpha > 1e-12 {
            let cand = &x - &step * alpha;
            let fc = smooth(&build(&cand));
            if fc.is_finite() && fc <= f0 + 1e-4 * alpha * slope {
                x = cand;
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let t = build(&x);
    let truth = sgl_objective(s, &t, lambda);
    if truth < best.0 {
        best = (truth, t);
    }
    best
}

/// Union-find connected components of `|S_ij| > lambda`, as sorted member lists.
pub fn union_find_components(s: &Matrix, lambda: f64) -> Vec<Vec<usize>> {
    let p = s.nrows();
    let mut parent: Vec<usize> = (0..p).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for i in 0..p {
        for j in (i + 1)..p {
            if s[(i, j)].abs() > lambda {
                let a = find(&mut parent, i);
                let b = find(&mut parent, j);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..p {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort();
    out
}

/// Symmetric eigenvalues through the Jacobi oracle, ascending.
pub fn eigenvalues(a: &Matrix) -> Vec<f64> {
    let mut d = jacobi_eigen(a).0;
    d.sort_by(|x, y| x.partial_cmp(y).unwrap());
    d
}

/// F1 of the estimated support against a true upper-triangle edge set.
pub fn f1(true_edges: &[(usize, usize)], theta: &Matrix, tol: f64) -> f64 {
    let p = theta.nrows();
    let truth: std::collections::HashSet<(usize, usize)> = true_edges.iter().copied().collect();
    let (mut tp, mut fp) = (0usize, 0usize);
    for i in 0..p {
        for j in (i + 1)..p {
            if theta[(i, j)].abs() > tol {
                if truth.contains(&(i, j)) {
                    tp += 1;
                } else {
                    fp += 1;
                }
            }
        }
    }
    let fn_ = truth.len() - tp;
    if tp == 0 {
        return 0.0;
    }
    2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
}
