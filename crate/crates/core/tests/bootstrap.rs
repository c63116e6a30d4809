use loadlens::stats::{bootstrap, moments};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[test]
fn bootstrap_means_match_the_standard_error() {
    for seed in 0..5 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let v: Vec<f64> = (0..500).map(|_| Normal::new(10.0, 2.0).unwrap().sample(&mut rng)).collect();
        let cloud = bootstrap(&v, 1000, seed).unwrap();
        assert_eq!(cloud.points.len(), 1000);
        let means: Vec<f64> = cloud.points.iter().map(|m| m.mean).collect();
        let spread = moments(&means).unwrap().std;
        let se = moments(&v).unwrap().std / (500f64).sqrt();
        assert!((spread / se - 1.0).abs() < 0.2, "seed {seed}: {spread} vs {se}");
        assert_eq!(cloud, bootstrap(&v, 1000, seed).unwrap());
    }
}
