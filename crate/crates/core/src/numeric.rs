//! Quadrature and one-dimensional maximization helpers shared by the oracle
//! and adversarial modules.

/// Golden ratio conjugate, (sqrt(5) - 1) / 2.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Composite Simpson rule on `[a, b]`. `panels` is rounded up to the next even
/// number.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = even_at_least(panels, 2);
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}

/// Simpson quadrature over `[0, 1]` split at the supplied breakpoints. Each
/// piece receives a share of `panels` proportional to its width, never fewer
/// than `min_panels`.
pub fn simpson_split<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    panels: usize,
    min_panels: usize,
) -> f64 {
    let edges = unit_partition(breakpoints);
    edges
        .windows(2)
        .map(|w| {
            let share = (panels as f64 * (w[1] - w[0])).ceil() as usize;
            simpson(&f, w[0], w[1], share.max(min_panels))
        })
        .sum()
}

/// Sorted, deduplicated `[0, b_1, ..., b_k, 1]` from breakpoints that fall
/// strictly inside the unit interval.
pub fn unit_partition(breakpoints: &[f64]) -> Vec<f64> {
    let mut edges: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|b| *b > 0.0 && *b < 1.0)
        .collect();
    edges.push(0.0);
    edges.push(1.0);
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    edges
}

pub fn even_at_least(n: usize, floor: usize) -> usize {
    let n = n.max(floor);
    n + n % 2
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`, stopping when the
/// bracket is narrower than `tol`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Global maximization on `[lo, hi]`: a uniform scan over `grid` points locates
/// the best cell, then golden-section polishes inside the neighbouring cells.
/// The returned value is never below the best scanned value.
pub fn maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize, tol: f64) -> (f64, f64) {
    let grid = grid.max(3);
    let step = (hi - lo) / (grid - 1) as f64;
    let mut best_i = 0;
    let mut best_v = f64::NEG_INFINITY;
    for i in 0..grid {
        let v = f(lo + step * i as f64);
        if v > best_v {
            best_v = v;
            best_i = i;
        }
    }
    let best_x = lo + step * best_i as f64;
    let a = lo + step * best_i.saturating_sub(1) as f64;
    let b = (lo + step * (best_i + 1) as f64).min(hi);
    let (x, v) = golden_section_max(&f, a, b, tol);
    if v >= best_v {
        (x, v)
    } else {
        (best_x, best_v)
    }
}
