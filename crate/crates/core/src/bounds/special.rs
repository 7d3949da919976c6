//! Gamma at half-integers, unit-ball volumes and first zeros of `J_nu`.

use std::f64::consts::PI;

/// `Gamma(k / 2)` for a positive integer `k`.
pub(crate) fn gamma_half(k: usize) -> f64 {
    assert!(k > 0, "Gamma has a pole at 0");
    let (mut g, mut x) = if k % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = k as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// Volume of the unit ball in `R^d`, `pi^(d/2) / Gamma(d/2 + 1)`.
pub fn unit_ball_volume_f64(d: usize) -> f64 {
    PI.powf(d as f64 / 2.0) / gamma_half(d + 2)
}

/// `J_nu(x)` by its power series, for `nu = k/2` with `k` a nonnegative integer.
pub(crate) fn bessel_j(two_nu: usize, x: f64) -> f64 {
    let nu = two_nu as f64 / 2.0;
    let half = x / 2.0;
    let mut term = half.powf(nu) / gamma_half(two_nu + 2);
    let mut sum = term;
    let mut comp = 0.0;
    let q = -half * half;
    for m in 1..400 {
        let m = m as f64;
        term *= q / (m * (m + nu));
        // Kahan summation: the series alternates with large intermediate terms.
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() < 1e-18 * sum.abs().max(1e-300) && m > half {
            break;
        }
    }
    sum
}

/// First positive zero of `J_{d/2 - 1}`.
pub fn bessel_first_zero(d: usize) -> f64 {
    assert!(d >= 2, "dimension must be at least 2");
    let two_nu = d - 2;
    let nu = two_nu as f64 / 2.0;
    // The first zero lies in (nu, nu + 2 nu^(1/3) + 3) for all nu >= 0.
    let step = 0.05;
    let mut a = nu.max(step);
    let mut fa = bessel_j(two_nu, a);
    let limit = nu + 2.0 * nu.cbrt() + 4.0;
    while a < limit {
        let b = a + step;
        let fb = bessel_j(two_nu, b);
        if fa * fb <= 0.0 {
            return bisect(|x| bessel_j(two_nu, x), a, b, fa);
        }
        a = b;
        fa = fb;
    }
    panic!("first Bessel zero not bracketed for d = {d}");
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(10), 24.0);
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(5) - 0.75 * PI.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_ball_volumes() {
        assert!((unit_ball_volume_f64(3) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((unit_ball_volume_f64(4) - PI * PI / 2.0).abs() < 1e-12);
        assert!((unit_ball_volume_f64(2) - PI).abs() < 1e-12);
    }

    #[test]
    fn half_order_bessel_closed_form() {
        for &x in &[0.3, 1.0, 2.5, 4.0, 7.0] {
            let exact = (2.0 / (PI * x)).sqrt() * x.sin();
            assert!((bessel_j(1, x) - exact).abs() < 1e-13, "x = {x}");
            let exact32 = (2.0 / (PI * x)).sqrt() * (x.sin() / x - x.cos());
            assert!((bessel_j(3, x) - exact32).abs() < 1e-13, "x = {x}");
        }
    }

    #[test]
    fn first_zeros() {
        assert!((bessel_first_zero(3) - PI).abs() < 1e-12);
        let z5 = bessel_first_zero(5);
        assert!((z5.tan() - z5).abs() < 1e-9);
        assert!((z5 - 4.493409457909064).abs() < 1e-12);
        assert!((bessel_first_zero(2) - 2.404825557695773).abs() < 1e-12);
        assert!((bessel_first_zero(4) - 3.831705970207512).abs() < 1e-12);
    }
}
