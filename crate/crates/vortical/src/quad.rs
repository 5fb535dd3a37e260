//! Gauss–Legendre quadrature nodes and deterministic summation helpers.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending. Computed by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess for the i-th positive root.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_eval(n, x);
            dp = d;
            let dx = -p / d;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_eval(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative by the three-term
/// recurrence.
fn legendre_eval(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = if (x * x - 1.0).abs() < 1e-300 {
        // Endpoint derivative P'_n(±1) = ±n(n+1)/2.
        x.signum() * (n as f64) * (n as f64 + 1.0) / 2.0
    } else {
        (n as f64) * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Integrates `f` over `[a, b]` with a fixed Gauss–Legendre rule.
pub fn integrate<F: FnMut(f64) -> f64>(
    nodes: &[f64],
    weights: &[f64],
    a: f64,
    b: f64,
    mut f: F,
) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut sum = 0.0;
    for (&x, &w) in nodes.iter().zip(weights) {
        sum += w * f(mid + half * x);
    }
    half * sum
}

/// Pairwise (cascade) summation in the slice's order. Deterministic for a
/// fixed input order and more accurate than a running sum on long inputs.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_rule_matches_known_values() {
        let (x, w) = gauss_legendre(5);
        let x2 = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        let x3 = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
        assert!((x[2]).abs() < 1e-15);
        assert!((x[3] - x2).abs() < 1e-14);
        assert!((x[4] - x3).abs() < 1e-14);
        assert!((w[2] - 128.0 / 225.0).abs() < 1e-14);
        let w2 = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
        assert!((w[3] - w2).abs() < 1e-14);
    }

    #[test]
    fn exact_for_low_degree_polynomials() {
        // n-point Gauss integrates degree 2n-1 exactly.
        let (x, w) = gauss_legendre(5);
        let val = integrate(&x, &w, 0.0, 2.0, |t| t.powi(9));
        assert!((val - 2.0f64.powi(10) / 10.0).abs() < 1e-12);
        let (x, w) = gauss_legendre(4);
        let val = integrate(&x, &w, -1.0, 3.0, |t| 1.0 + t - t.powi(7));
        let exact = 4.0 + (9.0 - 1.0) / 2.0 - (3.0f64.powi(8) - 1.0) / 8.0;
        assert!((val - exact).abs() < 1e-10);
    }

    #[test]
    fn pairwise_sum_matches_exact() {
        let values: Vec<f64> = (0..1000).map(|i| 1.0 / (1.0 + i as f64)).collect();
        let mut sorted = values.clone();
        sorted.reverse();
        let a = pairwise_sum(&values);
        let b: f64 = values.iter().sum();
        assert!((a - b).abs() < 1e-12);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
