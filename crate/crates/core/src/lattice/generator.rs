//! Generators of the ball walk and the box walk applied to balls-in-boxes
//! test functions, and the exact duality gap between them.

use serde::{Deserialize, Serialize};

use super::boxes::{pack_bits, BoxFunction};
use super::{check_probability, HalfInt, Lattice};
use crate::error::{Error, Result};
use crate::partition::partition_of;

/// Which system the generator acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    /// `G(ḡ_y)(x)`: the p-walk of balls on `ℤ`, boxes frozen at `y`.
    Balls,
    /// `H(ḡ_x)(y)`: the (1−p)-walk of box boundaries on `ℤ + ½`, balls frozen at `x`.
    Boxes,
}

fn symbol(x: &[HalfInt], y: &[HalfInt]) -> u64 {
    pack_bits(x, y, |b, lo, hi| lo <= b && b <= hi)
}

/// `right·Σ_b f(shift block b by +jump) + (1−right)·Σ_b f(shift by −jump) − l·f(v)`.
fn generator_sum(v: &[HalfInt], jump: i64, right: f64, f: impl Fn(&[HalfInt]) -> f64) -> f64 {
    let pi = partition_of(v).expect("callers validate monotonicity");
    let mut moved = v.to_vec();
    let mut up = 0.0;
    let mut down = 0.0;
    let blocks = pi.blocks();
    for r in &blocks {
        for k in r.clone() {
            moved[k] = v[k].shift(jump);
        }
        up += f(&moved);
        for k in r.clone() {
            moved[k] = v[k].shift(-jump);
        }
        down += f(&moved);
        moved[r.clone()].copy_from_slice(&v[r.clone()]);
    }
    right * up + (1.0 - right) * down - blocks.len() as f64 * f(v)
}

fn validate(g: &BoxFunction, x: &[HalfInt], y: &[HalfInt], p: f64) -> Result<()> {
    check_probability("p", p)?;
    g.check_shape(x.len(), y.len())?;
    if y.len() < 2 {
        return Err(Error::TooFewBoundaries(y.len()));
    }
    if !x.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::NonMonotone { what: "balls" });
    }
    if !y.windows(2).all(|w| w[0] <= w[1]) {
        return Err(Error::DecreasingBoundaries);
    }
    Lattice::Integer.check("balls", x)?;
    Lattice::HalfShifted.check("box boundaries", y)?;
    Ok(())
}

fn apply_with_jump(side: Side, g: &BoxFunction, x: &[HalfInt], y: &[HalfInt], p: f64, jump: i64) -> f64 {
    match side {
        Side::Balls => generator_sum(x, jump, p, |xs| g.eval_symbol(symbol(xs, y))),
        Side::Boxes => generator_sum(y, jump, 1.0 - p, |ys| g.eval_symbol(symbol(x, ys))),
    }
}

/// Exact generator of one side applied to the balls-in-boxes function `ḡ`.
///
/// Balls must sit on `ℤ` and boundaries on `ℤ + ½`; `p` is the right-jump
/// probability of the balls, the boxes jump right with probability `1 − p`.
pub fn apply_generator(side: Side, g: &BoxFunction, x: &[HalfInt], y: &[HalfInt], p: f64) -> Result<f64> {
    validate(g, x, y, p)?;
    Ok(apply_with_jump(side, g, x, y, p, 1))
}

/// `G(ḡ_y)(x) − H(ḡ_x)(y)`; zero up to rounding for nearest-neighbour walks.
pub fn duality_gap(g: &BoxFunction, x: &[HalfInt], y: &[HalfInt], p: f64) -> Result<f64> {
    duality_gap_with_jump(g, x, y, p, 1)
}

/// The duality gap when both walks jump `jump` sites at a time. Only
/// `jump = 1` is a supported dynamics; larger jumps exist to show the
/// identity breaks. Blocks may then jump past each other, in which case a
/// box whose lower boundary exceeds its upper one is treated as empty.
pub fn duality_gap_with_jump(g: &BoxFunction, x: &[HalfInt], y: &[HalfInt], p: f64, jump: i64) -> Result<f64> {
    validate(g, x, y, p)?;
    Ok(apply_with_jump(Side::Balls, g, x, y, p, jump) - apply_with_jump(Side::Boxes, g, x, y, p, jump))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::SeedStream;
    use rand::Rng;

    fn ints(v: &[i64]) -> Vec<HalfInt> {
        v.iter().map(|&k| HalfInt::from_int(k)).collect()
    }

    fn halves(v: &[i64]) -> Vec<HalfInt> {
        v.iter().map(|&k| HalfInt::from_halves(k)).collect()
    }

    #[test]
    fn single_ball_leaves_its_box() {
        // Three terms: both unit jumps land on ±1, outside [−½, ½]; minus 1·1.
        let g = BoxFunction::bit(1, 2, 0, 0).unwrap();
        let gen = apply_generator(Side::Balls, &g, &ints(&[0]), &halves(&[-1, 1]), 0.5).unwrap();
        assert_eq!(gen, -1.0);
        // The dual side: either boundary moving inward by one empties the box.
        let dual = apply_generator(Side::Boxes, &g, &ints(&[0]), &halves(&[-1, 1]), 0.5).unwrap();
        assert_eq!(dual, -1.0);
    }

    #[test]
    fn constants_are_annihilated() {
        let g = BoxFunction::constant(2, 3, 4.5).unwrap();
        let x = ints(&[0, 0]);
        let y = halves(&[-3, 1, 5]);
        assert_eq!(apply_generator(Side::Balls, &g, &x, &y, 0.3).unwrap(), 0.0);
        assert_eq!(apply_generator(Side::Boxes, &g, &x, &y, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn coalesced_balls_random_table() {
        let mut rng = SeedStream::new(5, "gap").rng(0);
        let g = BoxFunction::random(2, 2, &mut rng).unwrap();
        let gap = duality_gap(&g, &ints(&[0, 0]), &halves(&[-1, 1]), 0.7).unwrap();
        assert!(gap.abs() <= 1e-9, "{gap}");
    }

    #[test]
    fn lattice_stagger_is_enforced() {
        let g = BoxFunction::constant(1, 2, 1.0).unwrap();
        assert!(matches!(
            duality_gap(&g, &halves(&[1]), &halves(&[-1, 3]), 0.5),
            Err(Error::WrongLattice { .. })
        ));
        assert!(matches!(
            duality_gap(&g, &ints(&[0]), &ints(&[-1, 1]), 0.5),
            Err(Error::WrongLattice { .. })
        ));
        assert!(duality_gap(&g, &ints(&[0]), &halves(&[-1, 1]), 1.5).is_err());
        assert!(duality_gap(&g, &ints(&[0, 1]), &halves(&[-1, 1]), 0.5).is_err());
    }

    fn random_instance(rng: &mut impl Rng, m: usize, n: usize) -> (Vec<HalfInt>, Vec<HalfInt>) {
        let mut x: Vec<i64> = (0..m).map(|_| rng.random_range(-3..=3)).collect();
        let mut y: Vec<i64> = (0..n).map(|_| 2 * rng.random_range(-4..=3) + 1).collect();
        x.sort();
        y.sort();
        (ints(&x), halves(&y))
    }

    #[test]
    fn gap_vanishes_on_random_instances() {
        let stream = SeedStream::new(6, "gap-sweep");
        for r in 0..300 {
            let mut rng = stream.rng(r);
            let m = rng.random_range(1..=4);
            let n = rng.random_range(2..=4);
            let (x, y) = random_instance(&mut rng, m, n);
            let g = BoxFunction::random(m, n, &mut rng).unwrap();
            let p = rng.random::<f64>();
            let gap = duality_gap(&g, &x, &y, p).unwrap();
            assert!(gap.abs() <= 1e-9, "gap {gap} at x={x:?} y={y:?}");
        }
    }

    #[test]
    fn generator_ignores_far_boxes() {
        // Moving a boundary that no ball can reach in one jump does not change
        // G(ḡ_y)(x) as long as no indicator changes at x itself.
        let stream = SeedStream::new(7, "locality");
        for r in 0..100 {
            let mut rng = stream.rng(r);
            let x = ints(&[0, 1]);
            let g = BoxFunction::random(2, 3, &mut rng).unwrap();
            let near = halves(&[-1, 3, 21]);
            let far = halves(&[-1, 3, 41]);
            let p = rng.random::<f64>();
            let a = apply_generator(Side::Balls, &g, &x, &near, p).unwrap();
            let b = apply_generator(Side::Balls, &g, &x, &far, p).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn jumps_of_two_break_duality() {
        let stream = SeedStream::new(8, "jump-two");
        let mut worst = 0.0f64;
        for r in 0..50 {
            let mut rng = stream.rng(r);
            let (x, y) = random_instance(&mut rng, 2, 3);
            let g = BoxFunction::random(2, 3, &mut rng).unwrap();
            let p = rng.random::<f64>();
            assert!(duality_gap(&g, &x, &y, p).unwrap().abs() <= 1e-9);
            worst = worst.max(duality_gap_with_jump(&g, &x, &y, p, 2).unwrap().abs());
        }
        assert!(worst > 0.1, "{worst}");
    }
}
