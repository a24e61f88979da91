//! Airy function `Ai` on `[0, ∞)` and the closed-form stationary laws of
//! the immigration system built from it.
//!
//! On `[0, 6]` the Maclaurin series `Ai = c₁f − c₂g` is summed in
//! double-double arithmetic: the two series grow like `e^{ζ}` while `Ai`
//! decays like `e^{−ζ}` (`ζ = ⅔x^{3/2}`), so plain `f64` would lose about nine
//! digits to cancellation at `x = 6`. Beyond that the exponential asymptotic
//! expansion is used.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// `Γ(1/3)`
pub const GAMMA_ONE_THIRD: f64 = 2.678_938_534_707_747_633_655_692_940_974_677_644_129;
/// `Γ(2/3)`
pub const GAMMA_TWO_THIRDS: f64 = 1.354_117_939_426_400_416_945_288_028_154_513_785_519;

/// Argument at which evaluation switches from the series to the asymptotic form.
pub const CROSSOVER: f64 = 6.0;

// c₁ = Ai(0) = 3^{−2/3}/Γ(2/3) and c₂ = −Ai′(0) = 3^{−1/3}/Γ(1/3), as
// double-double (hi, lo) pairs.
const C1: Dd = Dd(0.355_028_053_887_817_2, 2.052_336_324_362_12e-17);
const C2: Dd = Dd(0.258_819_403_792_806_8, -2.522_243_111_610_832e-17);

/// Unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct Dd(f64, f64);

impl Dd {
    fn from_f64(x: f64) -> Self {
        Dd(x, 0.0)
    }

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        Dd(s, (a - (s - bb)) + (b - bb))
    }

    fn quick_two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        Dd(s, b - (s - a))
    }

    fn add(self, o: Dd) -> Dd {
        let s = Dd::two_sum(self.0, o.0);
        let t = Dd::two_sum(self.1, o.1);
        let s = Dd::quick_two_sum(s.0, s.1 + t.0);
        Dd::quick_two_sum(s.0, s.1 + t.1)
    }

    fn neg(self) -> Dd {
        Dd(-self.0, -self.1)
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p);
        Dd::quick_two_sum(p, e + self.0 * o.1 + self.1 * o.0)
    }

    fn div_f64(self, d: f64) -> Dd {
        let q1 = self.0 / d;
        let p = q1 * d;
        let e = q1.mul_add(d, -p);
        let r = (self.0 - p - e + self.1) / d;
        Dd::quick_two_sum(q1, r)
    }

    fn to_f64(self) -> f64 {
        self.0 + self.1
    }
}

/// Sums `Σ t_k` with `t_k = t_{k−1}·x³/den(k)` until a term drops below
/// `1e−32` of the running sum.
fn series(first: Dd, x: f64, den: impl Fn(u32) -> f64) -> Dd {
    let x = Dd::from_f64(x);
    let x3 = x.mul(x).mul(x);
    let mut term = first;
    let mut sum = first;
    for k in 1..400 {
        term = term.mul(x3).div_f64(den(k));
        sum = sum.add(term);
        if term.0.abs() <= 1e-32 * sum.0.abs() {
            break;
        }
    }
    sum
}

fn k3(k: u32) -> f64 {
    3.0 * f64::from(k)
}

/// `Ai(x)` from the Maclaurin series, accurate for moderate `x ≥ 0`.
pub fn airy_ai_series(x: f64) -> f64 {
    if x == 0.0 {
        return C1.to_f64();
    }
    let f = series(Dd::from_f64(1.0), x, |k| (k3(k) - 1.0) * k3(k));
    let g = series(Dd::from_f64(x), x, |k| k3(k) * (k3(k) + 1.0));
    C1.mul(f).add(C2.mul(g).neg()).to_f64()
}

/// `Ai′(x)` from the differentiated Maclaurin series.
pub fn airy_ai_prime_series(x: f64) -> f64 {
    if x == 0.0 {
        return -C2.to_f64();
    }
    // f′ starts at x²/2 (the k = 0 term is constant), g′ at 1.
    let xd = Dd::from_f64(x);
    let fp = series(xd.mul(xd).div_f64(2.0), x, |k| (k3(k + 1) - 1.0) * k3(k));
    let gp = series(Dd::from_f64(1.0), x, |k| k3(k) * (k3(k) - 2.0));
    C1.mul(fp).add(C2.mul(gp).neg()).to_f64()
}

/// Coefficients `u_k` of the asymptotic expansion, up to the smallest
/// term at `ζ`, together with `v_k` for the derivative.
fn asymptotic_sums(zeta: f64) -> (f64, f64) {
    let mut u = 1.0;
    let mut su = 1.0;
    let mut sv = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = f64::from(k);
        u *= (6.0 * kf - 5.0) * (6.0 * kf - 3.0) * (6.0 * kf - 1.0) / ((2.0 * kf - 1.0) * 216.0 * kf);
        let v = -(6.0 * kf + 1.0) / (6.0 * kf - 1.0) * u;
        let scale = (-zeta).powi(-k);
        let term = u * scale;
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        su += term;
        sv += v * scale;
    }
    (su, sv)
}

/// `Ai(x)` from the exponential asymptotic expansion (for large `x`).
pub fn airy_ai_asymptotic(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (su, _) = asymptotic_sums(zeta);
    (-zeta).exp() / (2.0 * std::f64::consts::PI.sqrt() * x.powf(0.25)) * su
}

/// `Ai′(x)` from the exponential asymptotic expansion.
pub fn airy_ai_prime_asymptotic(x: f64) -> f64 {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let (_, sv) = asymptotic_sums(zeta);
    -x.powf(0.25) * (-zeta).exp() / (2.0 * std::f64::consts::PI.sqrt()) * sv
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AiryMethod {
    Series,
    Asymptotic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiryEval {
    pub x: f64,
    pub value: f64,
    pub method: AiryMethod,
}

fn check_nonnegative(name: &'static str, x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(invalid(name, format!("{x} is negative")))
    }
}

pub fn airy_eval(x: f64) -> Result<AiryEval> {
    check_nonnegative("x", x)?;
    Ok(if x < CROSSOVER {
        AiryEval {
            x,
            value: airy_ai_series(x),
            method: AiryMethod::Series,
        }
    } else {
        AiryEval {
            x,
            value: airy_ai_asymptotic(x),
            method: AiryMethod::Asymptotic,
        }
    })
}

pub fn airy_ai(x: f64) -> Result<f64> {
    airy_eval(x).map(|e| e.value)
}

pub fn airy_ai_prime(x: f64) -> Result<f64> {
    check_nonnegative("x", x)?;
    Ok(if x < CROSSOVER {
        airy_ai_prime_series(x)
    } else {
        airy_ai_prime_asymptotic(x)
    })
}

/// Probability that the stationary point process has no atom in an
/// interval of the given length: `Ai(λ^{1/3}·length)/Ai(0)`.
pub fn stationary_avoidance(lambda: f64, length: f64) -> Result<f64> {
    check_nonnegative("lambda", lambda)?;
    check_nonnegative("length", length)?;
    Ok(airy_ai(lambda.cbrt() * length)? / C1.to_f64())
}

/// Mean number of stationary atoms per unit length: `(3λ)^{1/3}Γ(2/3)/Γ(1/3)`.
pub fn stationary_intensity(lambda: f64) -> Result<f64> {
    check_nonnegative("lambda", lambda)?;
    Ok((3.0 * lambda).cbrt() * GAMMA_TWO_THIRDS / GAMMA_ONE_THIRD)
}
