//! Balls-in-boxes indicator arrays and the bounded test functions applied to them.

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::partition::IntervalPartition;

/// Largest indicator array that can be packed into a symbol.
pub const MAX_SYMBOL_BITS: usize = 64;

/// Largest indicator array for which a [`BoxFunction`] keeps an explicit table.
pub const MAX_TABLE_BITS: usize = 20;

/// The `m × (n−1)` array of indicators "ball `i` lies in the closed box
/// `[y_j, y_{j+1}]`", packed ball-major: bit `i·(n−1) + j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IndicatorArray {
    balls: usize,
    boxes: usize,
    bits: u64,
}

impl IndicatorArray {
    pub fn from_symbol(balls: usize, boxes: usize, symbol: u64) -> Self {
        Self {
            balls,
            boxes,
            bits: symbol,
        }
    }

    pub fn balls(&self) -> usize {
        self.balls
    }

    /// Number of boxes, `n − 1`.
    pub fn boxes(&self) -> usize {
        self.boxes
    }

    pub fn num_bits(&self) -> usize {
        self.balls * self.boxes
    }

    pub fn get(&self, ball: usize, bx: usize) -> bool {
        self.bits >> (ball * self.boxes + bx) & 1 == 1
    }

    /// The packed array; bit `k` is the `k`-th entry of the flattened array.
    pub fn symbol(&self) -> u64 {
        self.bits
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        (0..self.balls)
            .map(|i| (0..self.boxes).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }
}

/// Packs the indicators without validating the boundaries. A "box" whose
/// lower boundary exceeds its upper one is empty.
pub(crate) fn pack_bits<B, Y>(balls: &[B], boundaries: &[Y], inside: impl Fn(&B, &Y, &Y) -> bool) -> u64 {
    let boxes = boundaries.len() - 1;
    let mut bits = 0u64;
    for (i, x) in balls.iter().enumerate() {
        for j in 0..boxes {
            if inside(x, &boundaries[j], &boundaries[j + 1]) {
                bits |= 1 << (i * boxes + j);
            }
        }
    }
    bits
}

/// Indicator array of `balls` against the closed boxes cut by `boundaries`.
///
/// Boundaries may tie (a degenerate box `[a, a]` holds only `a`), which is
/// what coalesced moving boxes look like.
pub fn indicator_array<T: PartialOrd + Copy>(balls: &[T], boundaries: &[T]) -> Result<IndicatorArray> {
    if boundaries.len() < 2 {
        return Err(Error::TooFewBoundaries(boundaries.len()));
    }
    if !boundaries.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::DecreasingBoundaries);
    }
    let boxes = boundaries.len() - 1;
    if balls.len() * boxes > MAX_SYMBOL_BITS {
        return Err(Error::TooManyBits(balls.len() * boxes));
    }
    Ok(IndicatorArray {
        balls: balls.len(),
        boxes,
        bits: pack_bits(balls, boundaries, |x, lo, hi| lo <= x && x <= hi),
    })
}

/// A bounded function on `{0,1}^{m(n−1)}`, stored as an explicit table
/// indexed by the packed indicator array.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxFunction {
    balls: usize,
    boundaries: usize,
    table: Vec<f64>,
}

impl BoxFunction {
    /// Tabulates `rule` over every indicator array with `balls` rows and
    /// `boundaries − 1` columns.
    pub fn from_fn(balls: usize, boundaries: usize, rule: impl Fn(&IndicatorArray) -> f64) -> Result<Self> {
        if boundaries < 2 {
            return Err(Error::TooFewBoundaries(boundaries));
        }
        let boxes = boundaries - 1;
        let bits = balls * boxes;
        if bits > MAX_TABLE_BITS {
            return Err(Error::TooManyBits(bits));
        }
        let table = (0..1u64 << bits)
            .map(|s| rule(&IndicatorArray::from_symbol(balls, boxes, s)))
            .collect();
        Ok(Self { balls, boundaries, table })
    }

    pub fn constant(balls: usize, boundaries: usize, c: f64) -> Result<Self> {
        Self::from_fn(balls, boundaries, |_| c)
    }

    /// The single indicator "ball `ball` is in box `bx`".
    pub fn bit(balls: usize, boundaries: usize, ball: usize, bx: usize) -> Result<Self> {
        if ball >= balls || bx + 1 >= boundaries {
            return Err(invalid("bit", format!("({ball}, {bx}) is outside the array")));
        }
        Self::from_fn(balls, boundaries, |a| f64::from(u8::from(a.get(ball, bx))))
    }

    /// Product of every indicator.
    pub fn product_all(balls: usize, boundaries: usize) -> Result<Self> {
        Self::from_fn(balls, boundaries, |a| f64::from(u8::from(a.symbol() == (1u64 << a.num_bits()) - 1)))
    }

    /// Independent uniform values on `[-1, 1]` for every array.
    pub fn random<R: Rng + ?Sized>(balls: usize, boundaries: usize, rng: &mut R) -> Result<Self> {
        let mut f = Self::constant(balls, boundaries, 0.0)?;
        for v in &mut f.table {
            *v = rng.random_range(-1.0..=1.0);
        }
        Ok(f)
    }

    /// `Π_j Π_{i ∈ A_j} 1{x_i ∈ [y_{2j−1}, y_{2j}]}` for a partition `A_1..A_h`
    /// of the balls, using `2h` box boundaries. Only the odd-numbered boxes
    /// (the ones between `y_{2j−1}` and `y_{2j}`) enter.
    pub fn block_product(groups: &IntervalPartition) -> Result<Self> {
        let blocks = groups.blocks();
        let boundaries = 2 * blocks.len();
        Self::from_fn(groups.len(), boundaries, |a| {
            let all = blocks.iter().enumerate().all(|(j, r)| r.clone().all(|i| a.get(i, 2 * j)));
            f64::from(u8::from(all))
        })
    }

    /// `Π_i (1 − Π_j (1 − 1{x_i ∈ [y_{2j−1}, y_{2j}]}))`: every ball lies in
    /// the union of `intervals` disjoint intervals cut by `2·intervals` boundaries.
    pub fn union_of_intervals(balls: usize, intervals: usize) -> Result<Self> {
        if intervals == 0 {
            return Err(invalid("intervals", "need at least one interval"));
        }
        Self::from_fn(balls, 2 * intervals, |a| {
            let all = (0..balls).all(|i| (0..intervals).any(|j| a.get(i, 2 * j)));
            f64::from(u8::from(all))
        })
    }

    pub fn balls(&self) -> usize {
        self.balls
    }

    pub fn boundaries(&self) -> usize {
        self.boundaries
    }

    pub fn eval(&self, array: &IndicatorArray) -> f64 {
        self.table[array.symbol() as usize]
    }

    pub(crate) fn eval_symbol(&self, symbol: u64) -> f64 {
        self.table[symbol as usize]
    }

    pub fn sup_norm(&self) -> f64 {
        self.table.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub(crate) fn check_shape(&self, balls: usize, boundaries: usize) -> Result<()> {
        if balls != self.balls {
            return Err(Error::LengthMismatch {
                what: "balls",
                expected: self.balls,
                found: balls,
            });
        }
        if boundaries != self.boundaries {
            return Err(Error::LengthMismatch {
                what: "box boundaries",
                expected: self.boundaries,
                found: boundaries,
            });
        }
        Ok(())
    }
}

/// `g` evaluated at the indicator array of balls `x` in boxes cut by `y`.
pub fn gbar<T: PartialOrd + Copy>(g: &BoxFunction, x: &[T], y: &[T]) -> Result<f64> {
    g.check_shape(x.len(), y.len())?;
    if !x.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::NonMonotone { what: "balls" });
    }
    Ok(g.eval(&indicator_array(x, y)?))
}
