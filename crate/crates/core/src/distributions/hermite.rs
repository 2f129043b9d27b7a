//! Harmonic-oscillator eigenfunctions `ψ_n(x) = ⟨x|n⟩` for `q = (a + a†)/√2`.
//!
//! Evaluated by the normalised three-term recurrence
//! `ψ_{n+1} = √(2/(n+1)) x ψ_n − √(n/(n+1)) ψ_{n−1}` starting from an unscaled
//! seed; the Gaussian envelope and any rescaling live in a separate log factor
//! so large `n` and large `|x|` neither overflow nor underflow early.

use num_complex::Complex64 as C64;

const BIG: f64 = 1e100;

/// `ψ_0(x), …, ψ_{n_max}(x)` at a single point.
pub fn hermite_functions(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_scale = -0.5 * x * x - 0.25 * std::f64::consts::PI.ln();
    let (mut prev, mut cur) = (0.0, 1.0);
    out.push(log_scale.exp());
    for n in 0..n_max {
        let next =
            (2.0 / (n + 1) as f64).sqrt() * x * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
        }
        out.push(cur * log_scale.exp());
    }
    out
}

/// `Σ_n c_n ψ_n(x)` for several coefficient vectors of equal length at one point.
pub fn expand(coeffs: &[&[C64]], x: f64) -> Vec<C64> {
    let len = coeffs.first().map_or(0, |c| c.len());
    let mut sums: Vec<C64> = coeffs.iter().map(|c| c[0]).collect();
    if len == 0 {
        return sums;
    }
    let mut log_scale = -0.5 * x * x - 0.25 * std::f64::consts::PI.ln();
    let (mut prev, mut cur) = (0.0, 1.0);
    for n in 0..len - 1 {
        let next =
            (2.0 / (n + 1) as f64).sqrt() * x * cur - (n as f64 / (n + 1) as f64).sqrt() * prev;
        prev = cur;
        cur = next;
        for (s, c) in sums.iter_mut().zip(coeffs) {
            *s += c[n + 1] * cur;
        }
        if cur.abs() > BIG {
            cur /= BIG;
            prev /= BIG;
            log_scale += BIG.ln();
            for s in sums.iter_mut() {
                *s /= BIG;
            }
        }
    }
    let f = log_scale.exp();
    sums.iter().map(|s| s * f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ground_state_value() {
        assert_relative_eq!(
            hermite_functions(0, 0.0)[0],
            std::f64::consts::PI.powf(-0.25),
            epsilon = 1e-15
        );
        // ψ_1(x) = √2 x ψ_0(x)
        let h = hermite_functions(1, 0.7);
        assert_relative_eq!(h[1], 2f64.sqrt() * 0.7 * h[0], epsilon = 1e-15);
    }

    #[test]
    fn normalised_and_orthogonal_up_to_512() {
        let n_max = 512;
        let half = (2.0 * n_max as f64 + 1.0).sqrt() + 10.0;
        let pts = 16001;
        let dx = 2.0 * half / (pts - 1) as f64;
        let mut norm = vec![0.0; n_max + 1];
        let mut cross = 0.0;
        for i in 0..pts {
            let x = -half + i as f64 * dx;
            let h = hermite_functions(n_max, x);
            assert!(h.iter().all(|v| v.is_finite()));
            for (acc, v) in norm.iter_mut().zip(&h) {
                *acc += v * v * dx;
            }
            cross += h[510] * h[512] * dx;
        }
        for (n, v) in norm.iter().enumerate() {
            assert!((v - 1.0).abs() < 1e-8, "n = {n}: {v}");
        }
        assert!(cross.abs() < 1e-8);
    }

    #[test]
    fn expand_matches_explicit_sum() {
        let c: Vec<C64> = (0..40)
            .map(|n| C64::new((n as f64 * 0.3).sin(), (n as f64).cos() * 0.1))
            .collect();
        for &x in &[-4.0, -0.3, 0.0, 2.5, 7.0] {
            let h = hermite_functions(39, x);
            let want: C64 = c.iter().zip(&h).map(|(a, b)| a * b).sum();
            assert!((expand(&[&c], x)[0] - want).norm() < 1e-12);
        }
    }
}
