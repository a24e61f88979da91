//! Exact law of a single p-simple walker's displacement.
//!
//! Over time `t` the walker makes `Poisson(pt)` right jumps and an independent
//! `Poisson((1−p)t)` left jumps, so the displacement is Skellam distributed.

use crate::error::{invalid, Result};

/// `P(displacement at time t = k)` for a p-simple walk started at 0.
pub fn skellam_pmf(p: f64, t: f64, k: i64) -> Result<f64> {
    super::check_probability("p", p)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("{t} is not a finite nonnegative time")));
    }
    if t == 0.0 {
        return Ok(if k == 0 { 1.0 } else { 0.0 });
    }
    // For k < 0 swap the roles of the two counts.
    let (right, left, k) = if k >= 0 {
        (p * t, (1.0 - p) * t, k as u64)
    } else {
        ((1.0 - p) * t, p * t, k.unsigned_abs())
    };
    if right == 0.0 {
        return Ok(if k == 0 { (-left).exp() } else { 0.0 });
    }
    // Σ_j Pois(right; j + k) · Pois(left; j), summed from j = 0 with the
    // term ratio right·left / ((j + k + 1)(j + 1)).
    let ln_fact_k: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    let mut term = (-t + k as f64 * right.ln() - ln_fact_k).exp();
    let mut sum = 0.0;
    let mut j = 0u64;
    loop {
        sum += term;
        term *= right * left / (((j + k + 1) * (j + 1)) as f64);
        j += 1;
        if term <= sum * 1e-17 && j as f64 > right * left {
            break;
        }
        if term == 0.0 {
            break;
        }
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent route: e^{-t} (p/q)^{k/2} I_|k|(2t√(pq)) with the modified
    // Bessel function summed from its power series.
    fn bessel_oracle(p: f64, t: f64, k: i64) -> f64 {
        let nu = k.unsigned_abs() as i32;
        let z = 2.0 * t * (p * (1.0 - p)).sqrt();
        let mut term = (z / 2.0).powi(nu) / (1..=nu).map(f64::from).product::<f64>();
        let mut i_nu = 0.0;
        for m in 0..200 {
            i_nu += term;
            term *= (z / 2.0).powi(2) / (f64::from(m + 1) * f64::from(m + 1 + nu));
        }
        (-t).exp() * (p / (1.0 - p)).powf(k as f64 / 2.0) * i_nu
    }

    #[test]
    fn frozen_values() {
        assert_eq!(skellam_pmf(0.3, 0.0, 0).unwrap(), 1.0);
        assert_eq!(skellam_pmf(0.3, 0.0, 2).unwrap(), 0.0);
        // Poisson(1) at 0.
        assert!((skellam_pmf(1.0, 1.0, 0).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
        // e^{-1} I_0(1), from an arbitrary-precision evaluation.
        assert!((skellam_pmf(0.5, 1.0, 0).unwrap() - 0.465_759_607_593_640_4).abs() < 1e-14);
        assert!((skellam_pmf(0.7, 2.0, 1).unwrap() - 0.281_000_889_311_349_5).abs() < 1e-14);
        assert!((skellam_pmf(0.7, 2.0, -2).unwrap() - 0.031_938_988_486_622_59).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_bessel_series() {
        for &(p, t) in &[(0.5, 1.0), (0.7, 2.0), (0.2, 5.0), (0.9, 0.3)] {
            for k in -8..=8 {
                let a = skellam_pmf(p, t, k).unwrap();
                let b = bessel_oracle(p, t, k);
                assert!((a - b).abs() < 1e-13, "p={p} t={t} k={k}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn one_sided_walks_are_poisson() {
        assert_eq!(skellam_pmf(1.0, 2.0, -1).unwrap(), 0.0);
        assert_eq!(skellam_pmf(0.0, 2.0, 1).unwrap(), 0.0);
        let pois = (-2.0f64).exp() * 2.0f64.powi(3) / 6.0;
        assert!((skellam_pmf(0.0, 2.0, -3).unwrap() - pois).abs() < 1e-15);
    }

    #[test]
    fn sums_to_one() {
        let total: f64 = (-60..=60).map(|k| skellam_pmf(0.35, 7.0, k).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}
