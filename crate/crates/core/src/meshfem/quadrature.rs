//! Symmetric triangle rules in barycentric coordinates. Weights sum to one
//! and are multiplied by the triangle area.

#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl TriangleRule {
    /// Three points, exact for polynomials of degree 2.
    pub fn degree2() -> Self {
        let (a, b) = (2.0 / 3.0, 1.0 / 6.0);
        TriangleRule {
            points: vec![[a, b, b], [b, a, b], [b, b, a]],
            weights: vec![1.0 / 3.0; 3],
            degree: 2,
        }
    }

    /// Six points, exact for polynomials of degree 4.
    pub fn degree4() -> Self {
        let a = 0.445_948_490_915_965;
        let wa = 0.223_381_589_678_011;
        let b = 0.091_576_213_509_771;
        let wb = 0.109_951_743_655_322;
        let (ca, cb) = (1.0 - 2.0 * a, 1.0 - 2.0 * b);
        TriangleRule {
            points: vec![
                [ca, a, a],
                [a, ca, a],
                [a, a, ca],
                [cb, b, b],
                [b, cb, b],
                [b, b, cb],
            ],
            weights: vec![wa, wa, wa, wb, wb, wb],
            degree: 4,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Maps barycentric coordinates to a physical point.
pub fn physical_point(coords: &[[f64; 2]; 3], bary: &[f64; 3]) -> [f64; 2] {
    let mut p = [0.0; 2];
    for k in 0..3 {
        p[0] += bary[k] * coords[k][0];
        p[1] += bary[k] * coords[k][1];
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    // ∫_T x^p y^q over the reference triangle (0,0), (1,0), (0,1).
    fn monomial_integral(p: u32, q: u32) -> f64 {
        factorial(p) * factorial(q) / factorial(p + q + 2)
    }

    fn check(rule: &TriangleRule) {
        let refc = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for total in 0..=rule.degree as u32 {
            for p in 0..=total {
                let q = total - p;
                let approx: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(b, w)| {
                        let [x, y] = physical_point(&refc, b);
                        w * 0.5 * x.powi(p as i32) * y.powi(q as i32)
                    })
                    .sum();
                let exact = monomial_integral(p, q);
                assert!(
                    (approx - exact).abs() < 1e-14,
                    "degree {} rule fails x^{p} y^{q}: {approx} vs {exact}",
                    rule.degree
                );
            }
        }
    }

    #[test]
    fn degree2_is_exact() {
        check(&TriangleRule::degree2());
    }

    #[test]
    fn degree4_is_exact() {
        check(&TriangleRule::degree4());
    }

    #[test]
    fn degree2_misses_cubics() {
        let refc = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let rule = TriangleRule::degree2();
        let approx: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(b, w)| w * 0.5 * physical_point(&refc, b)[0].powi(3))
            .sum();
        assert!((approx - monomial_integral(3, 0)).abs() > 1e-6);
    }
}
