//! Mode finding for low-dimensional log densities: golden-section coordinate
//! search followed by a damped Newton polish, plus finite-difference curvature.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

/// Maximise a unimodal `f` on `[lo, hi]` by golden-section search.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..200 {
        if (hi - lo).abs() <= tol * (1.0 + x1.abs().max(x2.abs())) {
            break;
        }
        // -inf compares below everything, which keeps the search inside the support.
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 { (x1, f1) } else { (x2, f2) }
}

/// Maximise `f` along one coordinate starting at `x0`: step out with doubling
/// steps until the function turns down (or a bound is hit), then refine the
/// bracket by golden section.
pub fn line_max<F: Fn(f64) -> f64>(f: &F, x0: f64, step: f64, lo: f64, hi: f64) -> (f64, f64) {
    let f0 = f(x0);
    let step = step.abs().max(1e-8);
    let mut best = (x0, f0);
    let mut left = (x0 - step).max(lo);
    let mut right = (x0 + step).min(hi);
    let fl = f(left);
    let fr = f(right);
    if fl > best.1 || fr > best.1 {
        let dir = if fr >= fl { 1.0 } else { -1.0 };
        let mut s = step;
        let mut prev = x0;
        let mut cur = if dir > 0.0 { right } else { left };
        let mut fcur = if dir > 0.0 { fr } else { fl };
        loop {
            s *= 2.0;
            let next = (cur + dir * s).clamp(lo, hi);
            let fnext = f(next);
            if fnext <= fcur || next == cur {
                if fnext > fcur {
                    cur = next;
                    fcur = fnext;
                }
                let (a, b) = if dir > 0.0 { (prev, next) } else { (next, prev) };
                left = a;
                right = b;
                best = (cur, fcur);
                break;
            }
            prev = cur;
            cur = next;
            fcur = fnext;
            if s > 1e12 {
                return (cur, fcur);
            }
        }
    }
    let (x, fx) = golden_section_max(f, left, right, 1e-12);
    if fx >= best.1 { (x, fx) } else { best }
}

/// Central-difference gradient and Hessian of `f` at `x`.
pub fn gradient_hessian<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64], step: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = x.len();
    let f0 = f(x);
    let mut g = vec![0.0; d];
    let mut h = vec![vec![0.0; d]; d];
    let mut p = x.to_vec();
    for i in 0..d {
        let hi = step[i];
        p[i] = x[i] + hi;
        let fp = f(&p);
        p[i] = x[i] - hi;
        let fm = f(&p);
        p[i] = x[i];
        g[i] = (fp - fm) / (2.0 * hi);
        h[i][i] = (fp - 2.0 * f0 + fm) / (hi * hi);
        for j in 0..i {
            let hj = step[j];
            p[i] = x[i] + hi;
            p[j] = x[j] + hj;
            let fpp = f(&p);
            p[j] = x[j] - hj;
            let fpm = f(&p);
            p[i] = x[i] - hi;
            let fmm = f(&p);
            p[j] = x[j] + hj;
            let fmp = f(&p);
            p[i] = x[i];
            p[j] = x[j];
            let v = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
            h[i][j] = v;
            h[j][i] = v;
        }
    }
    (g, h)
}

/// Invert a symmetric negative-definite matrix of size <= 2 and return the
/// covariance `(-H)^-1`, or `None` when `-H` is not positive definite.
pub fn covariance_from_hessian(h: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    match h.len() {
        0 => Some(vec![]),
        1 => {
            let a = -h[0][0];
            (a > 0.0 && a.is_finite()).then(|| vec![vec![1.0 / a]])
        }
        2 => {
            let (a, b, c) = (-h[0][0], -h[0][1], -h[1][1]);
            let det = a * c - b * b;
            if !(a > 0.0 && det > 0.0 && det.is_finite()) {
                return None;
            }
            Some(vec![vec![c / det, -b / det], vec![-b / det, a / det]])
        }
        _ => None,
    }
}

/// Coordinate-wise golden-section ascent followed by Newton polishing,
/// restricted to the box `[lo, hi]` (bounds may be infinite).
pub fn maximize(f: &dyn Fn(&[f64]) -> f64, start: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64) {
    let d = start.len();
    let mut x = start.to_vec();
    let mut fx = f(&x);
    let mut steps = vec![0.5; d];
    for _sweep in 0..60 {
        let before = fx;
        let mut moved = 0.0f64;
        for j in 0..d {
            let line = |t: f64| {
                let mut p = x.clone();
                p[j] = t;
                f(&p)
            };
            let (t, ft) = line_max(&line, x[j], steps[j], lo[j], hi[j]);
            if ft >= fx {
                let delta = (t - x[j]).abs();
                moved = moved.max(delta);
                steps[j] = (delta * 0.5).clamp(1e-4, 4.0);
                x[j] = t;
                fx = ft;
            }
        }
        if moved < 1e-7 || (fx - before).abs() < 1e-11 * (1.0 + fx.abs()) {
            break;
        }
    }
    // Newton polish for correlated coordinates.
    for _ in 0..50 {
        let fd: Vec<f64> = x.iter().map(|v| 1e-4 * (1.0 + v.abs())).collect();
        let (g, h) = gradient_hessian(&|p: &[f64]| f(p), &x, &fd);
        let Some(cov) = covariance_from_hessian(&h) else { break };
        let dir: Vec<f64> = (0..d).map(|i| (0..d).map(|j| cov[i][j] * g[j]).sum()).collect();
        let mut scale = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let cand: Vec<f64> = (0..d).map(|i| (x[i] + scale * dir[i]).clamp(lo[i], hi[i])).collect();
            let fc = f(&cand);
            if fc > fx {
                let change = cand.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                x = cand;
                let gain = fc - fx;
                fx = fc;
                improved = change > 1e-12 && gain > 1e-14 * (1.0 + fx.abs());
                break;
            }
            scale *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}
