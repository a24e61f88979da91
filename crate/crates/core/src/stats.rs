//! Categorical two-sample testing for the duality checks, plus Monte Carlo
//! mean/standard-error bookkeeping.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{invalid, Error, Result};

/// Two-sample tests reject below this p-value.
pub const P_THRESHOLD: f64 = 0.001;
/// Multiplier `C` in the TV bound `C·√(K/N)`.
pub const TV_MULTIPLIER: f64 = 3.0;
/// Smallest sample a two-sample test accepts.
pub const MIN_TOTAL: u64 = 1000;
/// Cells with a smaller expected count are pooled.
pub const MIN_EXPECTED: f64 = 5.0;

/// Symbol counts over the alphabet `0..alphabet_size`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoricalSample {
    alphabet_size: u128,
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl CategoricalSample {
    pub fn new(alphabet_size: u128) -> Self {
        Self {
            alphabet_size,
            counts: BTreeMap::new(),
            total: 0,
        }
    }

    /// Alphabet of all `bits`-bit indicator arrays.
    pub fn for_bits(bits: usize) -> Self {
        Self::new(1u128 << bits)
    }

    pub fn from_symbols(alphabet_size: u128, symbols: impl IntoIterator<Item = u64>) -> Result<Self> {
        let mut s = Self::new(alphabet_size);
        for sym in symbols {
            s.push(sym)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, symbol: u64) -> Result<()> {
        self.add(symbol, 1)
    }

    pub fn add(&mut self, symbol: u64, count: u64) -> Result<()> {
        if u128::from(symbol) >= self.alphabet_size {
            return Err(invalid(
                "symbol",
                format!("{symbol} is outside an alphabet of size {}", self.alphabet_size),
            ));
        }
        if count > 0 {
            *self.counts.entry(symbol).or_insert(0) += count;
            self.total += count;
        }
        Ok(())
    }

    /// Adds another sample's counts; the order of merging does not matter.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        self.check_alphabet(other)?;
        for (&s, &c) in &other.counts {
            *self.counts.entry(s).or_insert(0) += c;
        }
        self.total += other.total;
        Ok(())
    }

    fn check_alphabet(&self, other: &Self) -> Result<()> {
        if self.alphabet_size == other.alphabet_size {
            Ok(())
        } else {
            Err(Error::AlphabetMismatch(self.alphabet_size, other.alphabet_size))
        }
    }

    pub fn alphabet_size(&self) -> u128 {
        self.alphabet_size
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, symbol: u64) -> u64 {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    /// Observed symbols and their counts, in symbol order.
    pub fn counts(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&s, &c)| (s, c))
    }

    pub fn support_size(&self) -> usize {
        self.counts.len()
    }

    pub fn frequency(&self, symbol: u64) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(symbol) as f64 / self.total as f64
        }
    }
}

fn union_support(p: &CategoricalSample, q: &CategoricalSample) -> Vec<u64> {
    let mut keys: Vec<u64> = p.counts.keys().chain(q.counts.keys()).copied().collect();
    keys.sort_unstable();
    keys.dedup();
    keys
}

/// `½ Σ |p̂_k − q̂_k|` over the observed symbols.
pub fn tv_distance(p: &CategoricalSample, q: &CategoricalSample) -> Result<f64> {
    p.check_alphabet(q)?;
    Ok(0.5
        * union_support(p, q)
            .iter()
            .map(|&s| (p.frequency(s) - q.frequency(s)).abs())
            .sum::<f64>())
}

/// `C·√(K/N)` with `K` the observed support and `N` the smaller sample.
pub fn tv_bound(p: &CategoricalSample, q: &CategoricalSample) -> f64 {
    let k = union_support(p, q).len() as f64;
    let n = p.total.min(q.total) as f64;
    TV_MULTIPLIER * (k / n).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Outcome of a categorical two-sample comparison.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub tv: f64,
    pub tv_bound: f64,
    /// Sample sizes of the two sides.
    pub n: [u64; 2],
    /// Cells left after pooling sparse symbols.
    pub cells: usize,
    pub verdict: Verdict,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
}

impl TestReport {
    pub fn with_context(mut self, seed: u64, config: serde_json::Value) -> Self {
        self.seed = Some(seed);
        self.config = config;
        self
    }
}

/// Chi-square homogeneity test on the pooled `2 × K` table plus a TV check.
///
/// Symbols are ranked by combined frequency; those whose expected count on
/// either side is below [`MIN_EXPECTED`] are pooled into one tail cell (which
/// is folded into the last kept cell if it is itself too sparse). Passes when
/// `p_value > P_THRESHOLD` and `tv ≤ tv_bound`.
pub fn two_sample_test(p: &CategoricalSample, q: &CategoricalSample) -> Result<TestReport> {
    p.check_alphabet(q)?;
    for s in [p, q] {
        if s.total < MIN_TOTAL {
            return Err(Error::SampleTooSmall {
                found: s.total,
                min: MIN_TOTAL,
            });
        }
    }
    let (np, nq) = (p.total as f64, q.total as f64);
    let n = np + nq;
    let mut cells: Vec<(u64, u64)> = union_support(p, q).into_iter().map(|s| (p.count(s), q.count(s))).collect();
    cells.sort_by_key(|c| std::cmp::Reverse(c.0 + c.1));
    let expected_min = |c: &(u64, u64)| (c.0 + c.1) as f64 * np.min(nq) / n;
    let split = cells.partition_point(|c| expected_min(c) >= MIN_EXPECTED);
    let mut kept: Vec<(u64, u64)> = cells[..split].to_vec();
    let tail = cells[split..].iter().fold((0, 0), |acc, c| (acc.0 + c.0, acc.1 + c.1));
    if tail.0 + tail.1 > 0 {
        match kept.last_mut() {
            Some(last) if expected_min(&tail) < MIN_EXPECTED => {
                last.0 += tail.0;
                last.1 += tail.1;
            }
            _ => kept.push(tail),
        }
    }
    if kept.len() < 2 {
        return Err(Error::TooFewCells(kept.len()));
    }
    let mut statistic = 0.0;
    for &(a, b) in &kept {
        let col = (a + b) as f64;
        let (ea, eb) = (col * np / n, col * nq / n);
        statistic += (a as f64 - ea).powi(2) / ea + (b as f64 - eb).powi(2) / eb;
    }
    let dof = kept.len() - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| invalid("dof", e.to_string()))?;
    let p_value = chi.sf(statistic);
    let tv = tv_distance(p, q)?;
    let bound = tv_bound(p, q);
    Ok(TestReport {
        statistic,
        dof,
        p_value,
        tv,
        tv_bound: bound,
        n: [p.total, q.total],
        cells: kept.len(),
        verdict: Verdict::from_bool(p_value > P_THRESHOLD && tv <= bound),
        seed: None,
        config: serde_json::Value::Null,
    })
}

/// Monte Carlo noise floor of the TV estimate: mean and standard deviation
/// of the TV between two independent multinomial samples of the given sizes
/// drawn from the pooled empirical law of `p` and `q`.
pub fn tv_null_level<R: Rng + ?Sized>(p: &CategoricalSample, q: &CategoricalSample, draws: usize, rng: &mut R) -> Result<(f64, f64)> {
    p.check_alphabet(q)?;
    let support = union_support(p, q);
    let n = (p.total + q.total) as f64;
    let probs: Vec<f64> = support.iter().map(|&s| (p.count(s) + q.count(s)) as f64 / n).collect();
    let mut tvs = Vec::with_capacity(draws);
    for _ in 0..draws {
        let a = multinomial(p.total, &probs, rng)?;
        let b = multinomial(q.total, &probs, rng)?;
        let tv = 0.5
            * a.iter()
                .zip(&b)
                .map(|(&x, &y)| (x as f64 / p.total as f64 - y as f64 / q.total as f64).abs())
                .sum::<f64>();
        tvs.push(tv);
    }
    let est = McEstimate::from_samples(&tvs);
    Ok((est.mean, est.std_error * (draws as f64).sqrt()))
}

/// Multinomial counts by sequential conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Result<Vec<u64>> {
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for (i, &pk) in probs.iter().enumerate() {
        let c = if i + 1 == probs.len() {
            left
        } else if left == 0 || mass <= 0.0 {
            0
        } else {
            let r = (pk / mass).clamp(0.0, 1.0);
            Binomial::new(left, r)
                .map_err(|e| invalid("probability", e.to_string()))?
                .sample(rng)
        };
        out.push(c);
        left -= c;
        mass -= pk;
    }
    Ok(out)
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: u64,
}

impl McEstimate {
    /// Mean and `sd/√n`, summed sequentially so the result does not depend
    /// on how the samples were produced.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                n: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            mean,
            std_error: (var / n as f64).sqrt(),
            n: n as u64,
        }
    }

    /// `|a − b|` in units of the combined standard error.
    pub fn z_distance(&self, other: &Self) -> f64 {
        let se = self.std_error.hypot(other.std_error);
        let d = (self.mean - other.mean).abs();
        if se == 0.0 {
            if d == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            d / se
        }
    }

    /// Whether the two estimates agree within `k` combined standard errors.
    pub fn agrees_with(&self, other: &Self, k: f64) -> bool {
        self.z_distance(other) <= k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedStream;

    fn coin(n: u64, p: f64, rng: &mut impl Rng) -> CategoricalSample {
        CategoricalSample::from_symbols(2, (0..n).map(|_| u64::from(rng.random::<f64>() < p))).unwrap()
    }

    #[test]
    fn tv_examples() {
        let a = CategoricalSample::from_symbols(4, [0, 1, 1, 2]).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        let b = CategoricalSample::from_symbols(4, [3, 3]).unwrap();
        assert_eq!(tv_distance(&a, &b).unwrap(), 1.0);
        let c = CategoricalSample::from_symbols(8, [3]).unwrap();
        assert!(matches!(tv_distance(&a, &c), Err(Error::AlphabetMismatch(4, 8))));
        assert!(CategoricalSample::from_symbols(4, [4]).is_err());
    }

    #[test]
    fn merging_is_order_free() {
        let a = CategoricalSample::from_symbols(8, [0, 1, 5]).unwrap();
        let b = CategoricalSample::from_symbols(8, [5, 7]).unwrap();
        let mut ab = a.clone();
        ab.merge(&b).unwrap();
        let mut ba = b.clone();
        ba.merge(&a).unwrap();
        assert_eq!(ab, ba);
        assert_eq!(ab.total(), 5);
        assert_eq!(ab.count(5), 2);
    }

    #[test]
    fn duplicates_pass_with_unit_p_value() {
        let mut rng = SeedStream::new(1, "dup").rng(0);
        let a = CategoricalSample::from_symbols(16, (0..5000).map(|_| rng.random_range(0..16))).unwrap();
        let r = two_sample_test(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert!(r.verdict.passed());
    }

    #[test]
    fn small_or_degenerate_samples_are_rejected() {
        let a = CategoricalSample::from_symbols(2, vec![0; 500]).unwrap();
        assert!(matches!(two_sample_test(&a, &a), Err(Error::SampleTooSmall { .. })));
        let b = CategoricalSample::from_symbols(2, vec![0; 2000]).unwrap();
        assert!(matches!(two_sample_test(&b, &b), Err(Error::TooFewCells(1))));
    }

    #[test]
    fn sparse_tail_is_pooled() {
        let mut a = CategoricalSample::new(1 << 10);
        let mut b = CategoricalSample::new(1 << 10);
        a.add(0, 3000).unwrap();
        b.add(0, 3000).unwrap();
        a.add(1, 2000).unwrap();
        b.add(1, 2000).unwrap();
        for s in 2..30 {
            a.add(s, 1).unwrap();
            b.add(s + 30, 1).unwrap();
        }
        let r = two_sample_test(&a, &b).unwrap();
        assert_eq!(r.cells, 3);
        assert!(r.verdict.passed());
    }

    #[test]
    fn biased_coin_is_detected() {
        let stream = SeedStream::new(2, "power");
        let a = coin(10_000, 0.5, &mut stream.rng(0));
        let b = coin(10_000, 0.9, &mut stream.rng(1));
        let r = two_sample_test(&a, &b).unwrap();
        assert!(r.p_value < 1e-6);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn null_pass_rate() {
        let stream = SeedStream::new(3, "null");
        let probs = [0.4, 0.25, 0.15, 0.1, 0.05, 0.03, 0.015, 0.005];
        let mut passes = 0;
        for trial in 0..100 {
            let mut rng = stream.rng(trial);
            let draw = |rng: &mut crate::seed::SimRng| {
                let counts = multinomial(20_000, &probs, rng).unwrap();
                let mut s = CategoricalSample::new(8);
                for (k, c) in counts.into_iter().enumerate() {
                    s.add(k as u64, c).unwrap();
                }
                s
            };
            let (a, b) = (draw(&mut rng), draw(&mut rng));
            passes += usize::from(two_sample_test(&a, &b).unwrap().verdict.passed());
        }
        assert!(passes >= 99, "{passes}");
    }

    #[test]
    fn tv_concentration_at_large_n() {
        // Two N = 10⁵ samples from one law: TV ≤ 3√(K/N) in at least 99 of 100 trials.
        let stream = SeedStream::new(4, "tv-conc");
        let probs: Vec<f64> = (0..64).map(|_| 1.0 / 64.0).collect();
        let ok = (0..100)
            .filter(|&t| {
                let mut rng = stream.rng(t);
                let mk = |rng: &mut crate::seed::SimRng| {
                    let mut s = CategoricalSample::new(64);
                    for (k, c) in multinomial(100_000, &probs, rng).unwrap().into_iter().enumerate() {
                        s.add(k as u64, c).unwrap();
                    }
                    s
                };
                let (a, b) = (mk(&mut rng), mk(&mut rng));
                tv_distance(&a, &b).unwrap() <= tv_bound(&a, &b)
            })
            .count();
        assert!(ok >= 99);
    }

    #[test]
    fn multinomial_preserves_total() {
        let mut rng = SeedStream::new(5, "mn").rng(0);
        let c = multinomial(1234, &[0.2, 0.3, 0.5], &mut rng).unwrap();
        assert_eq!(c.iter().sum::<u64>(), 1234);
        assert_eq!(multinomial(10, &[1.0, 0.0], &mut rng).unwrap(), vec![10, 0]);
    }

    #[test]
    fn null_level_is_small_and_positive() {
        let mut rng = SeedStream::new(6, "lvl").rng(0);
        let a = coin(10_000, 0.3, &mut rng);
        let b = coin(10_000, 0.3, &mut rng);
        let (mean, sd) = tv_null_level(&a, &b, 200, &mut rng).unwrap();
        // E|p̂ − q̂| for a binomial difference: √(2·2pq/(πN)).
        let expect = (4.0 * 0.21 / (std::f64::consts::PI * 10_000.0)).sqrt();
        assert!((mean - expect).abs() < 0.2 * expect, "{mean} vs {expect}");
        assert!(sd > 0.0);
    }

    #[test]
    fn estimates_and_agreement() {
        let e = McEstimate::from_samples(&[1.0, 2.0, 3.0]);
        assert_eq!(e.mean, 2.0);
        assert!((e.std_error - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        let f = McEstimate::from_samples(&[2.5; 4]);
        assert!(e.agrees_with(&f, 3.0));
        assert_eq!(f.z_distance(&f), 0.0);
    }

    #[test]
    fn report_json_field_set() {
        let mut rng = SeedStream::new(7, "json").rng(0);
        let a = coin(2000, 0.5, &mut rng);
        let b = coin(2000, 0.5, &mut rng);
        let r = two_sample_test(&a, &b).unwrap().with_context(7, serde_json::json!({"m": 2}));
        let v = serde_json::to_value(&r).unwrap();
        for key in ["statistic", "p_value", "tv", "n", "verdict", "seed", "config"] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }
}
