//! Zeta-type special functions used to close lattice sums analytically.

/// Bernoulli numbers B_2, B_4, ..., B_16.
const BERNOULLI_EVEN: [f64; 8] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
];

/// Hurwitz zeta function `sum_{k>=0} (k + a)^{-s}` for `s > 1`, `a > 0`,
/// via Euler-Maclaurin summation.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    assert!(s > 1.0 && a > 0.0, "hurwitz_zeta needs s > 1 and a > 0");
    const N: usize = 24;
    let mut sum = 0.0;
    for k in (0..N).rev() {
        sum += (k as f64 + a).powf(-s);
    }
    let x = N as f64 + a;
    sum += x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    // rising factorial s (s+1) ... (s+2j-2) over (2j)!
    let mut coeff = s / 2.0;
    let mut power = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI_EVEN.iter().enumerate() {
        sum += b * coeff * power;
        let m = 2.0 * (j as f64 + 1.0);
        coeff *= (s + m - 1.0) * (s + m) / ((m + 1.0) * (m + 2.0));
        power /= x * x;
    }
    sum
}

/// Riemann zeta for `s > 1`.
pub fn riemann_zeta(s: f64) -> f64 {
    hurwitz_zeta(s, 1.0)
}

/// Dirichlet beta `sum_{n>=0} (-1)^n (2n+1)^{-s}` for `s > 1`.
pub fn dirichlet_beta(s: f64) -> f64 {
    4f64.powf(-s) * (hurwitz_zeta(s, 0.25) - hurwitz_zeta(s, 0.75))
}

/// Full lattice sum `sum_{k in Z^d, k != 0} |k|^{-e}` for `d in {1, 2}` and
/// `e > d`.
pub fn lattice_zeta(d: usize, e: f64) -> f64 {
    match d {
        1 => 2.0 * riemann_zeta(e),
        2 => 4.0 * riemann_zeta(e / 2.0) * dirichlet_beta(e / 2.0),
        _ => panic!("lattice_zeta supports d = 1, 2"),
    }
}
