//! Small special-function helpers.

/// Associated Laguerre polynomial `L_n^k(x)` via the three-term recurrence in
/// `n`, which is stable for the moderate degrees used here (n <= ~40).
pub fn laguerre(n: usize, k: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut prev = 1.0; // L_0
    let mut cur = 1.0 + k - x; // L_1
    for j in 1..n {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + k - x) * cur - (jf + k) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// sqrt(n!/m!) computed as a product, exact in f64 for the small arguments
/// used by matrix-element formulas.
pub fn sqrt_factorial_ratio(n: u64, m: u64) -> f64 {
    if n >= m {
        let mut acc = 1.0f64;
        for j in (m + 1)..=n {
            acc *= j as f64;
        }
        acc.sqrt()
    } else {
        1.0 / sqrt_factorial_ratio(m, n)
    }
}
