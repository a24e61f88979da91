use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::error::{invalid, Result};
use crate::special::{
    airy_ai_asymptotic, airy_ai_prime, airy_ai_series, airy_eval, stationary_avoidance, stationary_intensity, AiryEval, CROSSOVER,
    GAMMA_ONE_THIRD, GAMMA_TWO_THIRDS,
};

// Reference values of Ai from an independent arbitrary-precision evaluation.
const REFERENCE: &[(f64, f64)] = &[
    (0.0, 0.355_028_053_887_817_239_3),
    (0.5, 0.231_693_606_480_833_489_8),
    (1.0, 0.135_292_416_312_881_415_5),
    (2.0, 0.034_924_130_423_274_379_14),
    (3.0, 0.006_591_139_357_460_719_144),
    (4.0, 0.000_951_563_851_204_801_873_6),
    (5.0, 0.000_108_344_428_136_074_417_4),
    (6.0, 9.947_694_360_252_889_570e-6),
    (8.0, 4.692_207_616_099_231_626e-8),
    (10.0, 1.104_753_255_289_868_593e-10),
];

/// Table of `Ai` with the kernel's consistency checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AiryTable {
    pub x_max: f64,
    pub dx: f64,
    pub lambdas: Vec<f64>,
    pub tolerance: f64,
}

impl Default for AiryTable {
    fn default() -> Self {
        Self {
            x_max: 10.0,
            dx: 0.5,
            lambdas: vec![0.1, 1.0, 10.0],
            tolerance: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AiryTableReport {
    pub table: Vec<AiryEval>,
    pub max_reference_error: f64,
    /// `|Γ(1/3)Γ(2/3) − 2π/√3|`
    pub reflection_error: f64,
    /// Largest `|(3λ)^{1/3}Γ(2/3)/Γ(1/3) + λ^{1/3}Ai′(0)/Ai(0)|` over `lambdas`.
    pub identity_error: f64,
    /// `|series − asymptotic|` at the crossover.
    pub crossover_gap: f64,
    pub decreasing: bool,
    pub unit_avoidance: f64,
    pub intensity: f64,
    pub tolerance: f64,
}

impl Experiment for AiryTable {
    const NAME: &'static str = "airy-table";
    type Output = AiryTableReport;

    fn validate(&self) -> Result<()> {
        if !(self.x_max >= 0.0 && self.x_max.is_finite() && self.dx > 0.0) {
            return Err(invalid("dx", "need x_max ≥ 0 and dx > 0"));
        }
        if self.lambdas.iter().any(|&l| !(l >= 0.0)) {
            return Err(invalid("lambdas", "must be nonnegative"));
        }
        Ok(())
    }

    fn execute(&self, _seed: u64) -> Result<AiryTableReport> {
        let steps = (self.x_max / self.dx + 1e-9).floor() as usize;
        let table = (0..=steps).map(|k| airy_eval(k as f64 * self.dx)).collect::<Result<Vec<_>>>()?;
        let mut max_reference_error = 0.0f64;
        for &(x, v) in REFERENCE {
            max_reference_error = max_reference_error.max((airy_eval(x)?.value - v).abs());
        }
        let ratio = -airy_ai_prime(0.0)? / airy_eval(0.0)?.value;
        let mut identity_error = 0.0f64;
        for &l in &self.lambdas {
            identity_error = identity_error.max((stationary_intensity(l)? - l.cbrt() * ratio).abs());
        }
        Ok(AiryTableReport {
            decreasing: table.windows(2).all(|w| w[1].value < w[0].value && w[1].value > 0.0),
            table,
            max_reference_error,
            reflection_error: (GAMMA_ONE_THIRD * GAMMA_TWO_THIRDS - 2.0 * std::f64::consts::PI / 3f64.sqrt()).abs(),
            identity_error,
            crossover_gap: (airy_ai_series(CROSSOVER) - airy_ai_asymptotic(CROSSOVER)).abs(),
            unit_avoidance: stationary_avoidance(1.0, 1.0)?,
            intensity: stationary_intensity(1.0)?,
            tolerance: self.tolerance,
        })
    }

    fn passed(out: &AiryTableReport) -> bool {
        out.max_reference_error <= out.tolerance
            && out.reflection_error <= 1e-12
            && out.identity_error <= out.tolerance
            && out.crossover_gap <= out.tolerance
            && out.decreasing
    }

    fn summary(out: &AiryTableReport) -> String {
        format!(
            "max reference error {:.1e}, reflection {:.1e}, identity {:.1e}, crossover {:.1e}",
            out.max_reference_error, out.reflection_error, out.identity_error, out.crossover_gap
        )
    }

    fn smoke() -> Self {
        Self::default()
    }
}
