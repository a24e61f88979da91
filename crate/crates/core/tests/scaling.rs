use coalesce::lattice::simulate_crw;
use coalesce::{McEstimate, SeedStream, WalkConfig};
use statrs::distribution::{ContinuousCDF, Normal};

// A single symmetric walk rescaled by √t is close to a standard Gaussian.
#[test]
fn rescaled_walk_is_nearly_gaussian() {
    let t = 400.0;
    let walk = WalkConfig::on_integers(0.5, &[0]).unwrap();
    let stream = SeedStream::new(5, "scaling");
    let ends: Vec<f64> = stream.map_replicates(20_000, |rng, _| {
        simulate_crw(&walk, t, rng).unwrap().positions[0].to_f64() / t.sqrt()
    });
    let mean = McEstimate::from_samples(&ends);
    assert!(mean.mean.abs() <= 4.0 * mean.std_error, "{mean:?}");
    let second: Vec<f64> = ends.iter().map(|x| x * x).collect();
    let var = McEstimate::from_samples(&second);
    assert!((var.mean - 1.0).abs() <= 4.0 * var.std_error, "{var:?}");
    let phi = Normal::standard();
    for z in [-1.0, 0.0, 1.0] {
        // Half a lattice step of continuity correction.
        let below = ends.iter().filter(|&&x| x <= z).count() as f64 / ends.len() as f64;
        let target = phi.cdf(z + 0.5 / t.sqrt());
        assert!((below - target).abs() <= 0.01, "z={z}: {below} vs {target}");
    }
}
