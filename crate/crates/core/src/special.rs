//! Hurwitz zeta `zeta(s, q) = sum_{k >= 0} (q + k)^-s` for `s > 1`, `q >= 1`.

/// `B_{2j} / (2j)!` for `j = 1..=6`.
const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30_240.0,
    -1.0 / 1_209_600.0,
    1.0 / 47_900_160.0,
    -691.0 / 1_307_674_368_000.0,
];

/// Direct terms before switching to Euler-Maclaurin.
const DIRECT_TERMS: usize = 10;

pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    debug_assert!(s > 1.0 && q >= 1.0);
    let mut sum = 0.0;
    for k in 0..DIRECT_TERMS {
        sum += (q + k as f64).powf(-s);
    }
    let w = q + DIRECT_TERMS as f64;
    sum += w.powf(1.0 - s) / (s - 1.0) + 0.5 * w.powf(-s);
    // rising factorial s (s+1) ... (s + 2j - 2) times w^{-s-2j+1}
    let mut rising = s;
    let mut power = w.powf(-s - 1.0);
    for (j, c) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        if j > 0 {
            let m = 2.0 * j as f64;
            rising *= (s + m - 1.0) * (s + m);
            power /= w * w;
        }
        sum += c * rising * power;
    }
    sum
}
