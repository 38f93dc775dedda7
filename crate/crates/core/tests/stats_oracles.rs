use bistyle::stats::{
    adain, channel_stats, content_loss, gram_matrix, gram_total_loss, style_loss_adain, style_loss_gram, total_loss,
};
use bistyle::{fmap, AffineBilateralGrid, FeatureMap, FeatureMapSet, LossWeights};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_map(r: &mut ChaCha8Rng, name: &str, h: usize, w: usize, c: usize) -> FeatureMap {
    let data = (0..h * w * c).map(|_| r.gen_range(-2.0..2.0)).collect();
    FeatureMap::new(name, h, w, c, data).unwrap()
}

fn random_set(r: &mut ChaCha8Rng, shapes: &[(usize, usize, usize)]) -> FeatureMapSet {
    FeatureMapSet::new(
        shapes
            .iter()
            .enumerate()
            .map(|(i, &(h, w, c))| random_map(r, &format!("layer{i}"), h, w, c))
            .collect(),
    )
}

fn value(m: &FeatureMap, p: usize, ch: usize) -> f64 {
    m.as_slice()[p * m.channels() + ch]
}

fn mean_std(m: &FeatureMap, ch: usize) -> (f64, f64) {
    let n = m.positions() as f64;
    let mu = (0..m.positions()).map(|p| value(m, p, ch)).sum::<f64>() / n;
    let var = (0..m.positions()).map(|p| (value(m, p, ch) - mu).powi(2)).sum::<f64>() / n;
    (mu, (var + 1e-5).sqrt())
}

fn brute_gram(m: &FeatureMap, i: usize, j: usize) -> f64 {
    (0..m.positions()).map(|p| value(m, p, i) * value(m, p, j)).sum::<f64>() / m.positions() as f64
}

fn brute_content(a: &FeatureMapSet, b: &FeatureMapSet) -> f64 {
    a.layers
        .iter()
        .zip(&b.layers)
        .map(|(x, y)| {
            let mut s = 0.0;
            for p in 0..x.positions() {
                for c in 0..x.channels() {
                    s += (value(x, p, c) - value(y, p, c)).powi(2);
                }
            }
            s / (x.positions() * x.channels()) as f64
        })
        .sum()
}

fn brute_style_gram(a: &FeatureMapSet, b: &FeatureMapSet) -> f64 {
    a.layers
        .iter()
        .zip(&b.layers)
        .map(|(x, y)| {
            let c = x.channels();
            let mut s = 0.0;
            for i in 0..c {
                for j in 0..c {
                    s += (brute_gram(x, i, j) - brute_gram(y, i, j)).powi(2);
                }
            }
            s / (c * c) as f64
        })
        .sum()
}

fn brute_style_adain(a: &FeatureMapSet, b: &FeatureMapSet) -> f64 {
    a.layers
        .iter()
        .zip(&b.layers)
        .map(|(x, y)| {
            let c = x.channels();
            (0..c)
                .map(|ch| {
                    let ((mx, sx), (my, sy)) = (mean_std(x, ch), mean_std(y, ch));
                    (mx - my).powi(2) + (sx - sy).powi(2)
                })
                .sum::<f64>()
                / c as f64
        })
        .sum()
}

const SHAPES: [(usize, usize, usize); 3] = [(8, 6, 3), (4, 3, 5), (2, 2, 9)];

#[test]
fn channel_stats_match_two_pass() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let (h, w) = (r.gen_range(1..20), r.gen_range(1..20));
        let m = random_map(&mut r, "m", h, w, 4);
        let s = channel_stats(&m);
        for ch in 0..4 {
            let (mu, sd) = mean_std(&m, ch);
            assert!((s.mean[ch] - mu).abs() <= 1e-7 && (s.std[ch] - sd).abs() <= 1e-7);
        }
    }
}

#[test]
fn gram_matches_double_loop() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let m = random_map(&mut r, "m", 7, 5, 6);
    let g = gram_matrix(&m);
    for i in 0..6 {
        for j in 0..6 {
            assert!((g[(i, j)] - brute_gram(&m, i, j)).abs() <= 1e-6);
        }
    }
}

#[test]
fn losses_match_brute_force() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let (a, b) = (random_set(&mut r, &SHAPES), random_set(&mut r, &SHAPES));
        assert!((content_loss(&a, &b).unwrap() - brute_content(&a, &b)).abs() <= 1e-6);
        assert!((style_loss_gram(&a, &b).unwrap() - brute_style_gram(&a, &b)).abs() <= 1e-6);
        assert!((style_loss_adain(&a, &b).unwrap() - brute_style_adain(&a, &b)).abs() <= 1e-6);
        let g = gram_total_loss(&a, &b, &b, 0.7, 3.0).unwrap();
        assert!((g - (0.7 * brute_content(&a, &b) + 3.0 * brute_style_gram(&a, &b))).abs() <= 1e-6);
    }
}

#[test]
fn identical_sets_have_zero_losses() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let a = random_set(&mut r, &SHAPES);
    assert_eq!(content_loss(&a, &a).unwrap(), 0.0);
    assert!(style_loss_adain(&a, &a).unwrap() <= 1e-8);
    assert_eq!(style_loss_gram(&a, &a).unwrap(), 0.0);
    let grid = AffineBilateralGrid::<f32>::identity(4, 4, 4).unwrap();
    assert_eq!(total_loss(&a, &a, &a, &grid, &LossWeights::default()).unwrap().total, 0.0);
}

#[test]
fn total_loss_recombines_component_oracles() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let (out, content, style) = (random_set(&mut r, &SHAPES), random_set(&mut r, &SHAPES), random_set(&mut r, &SHAPES));
    let cells = (0..27).map(|_| std::array::from_fn(|_| r.gen_range(-1.0..1.0))).collect();
    let grid = AffineBilateralGrid::<f64>::from_cells(3, 3, 3, cells).unwrap();
    let w = LossWeights::new(0.3, 2.0, 0.05).unwrap();
    let got = total_loss(&out, &content, &style, &grid, &w).unwrap();
    let lap = bistyle::laplacian_energy(&grid);
    let want = 0.3 * brute_content(&out, &content) + 2.0 * brute_style_adain(&out, &style) + 0.05 * lap;
    assert!((got.total - want).abs() <= 1e-6 * (1.0 + want));
}

#[test]
fn adain_output_has_zero_adain_style_loss() {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let (x, y) = (random_map(&mut r, "x", 9, 7, 4), random_map(&mut r, "y", 5, 11, 4));
    let out = adain(&x, &y).unwrap();
    assert!(style_loss_adain(&FeatureMapSet::single(out), &FeatureMapSet::single(y)).unwrap() <= 1e-6);
}

#[test]
fn adain_of_content_with_itself_is_unchanged() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let x = random_map(&mut r, "x", 6, 6, 3);
    let out = adain(&x, &x).unwrap();
    for (a, b) in out.as_slice().iter().zip(x.as_slice()) {
        assert!((a - b).abs() <= 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_is_symmetric_psd(seed in any::<u64>(), h in 1usize..8, w in 1usize..8, c in 1usize..7) {
        let m = random_map(&mut ChaCha8Rng::seed_from_u64(seed), "m", h, w, c);
        let g = gram_matrix(&m);
        prop_assert!((&g - g.transpose()).amax() == 0.0);
        let scale = g.amax().max(1.0);
        prop_assert!(g.symmetric_eigenvalues().iter().all(|&e| e >= -1e-12 * scale));
    }

    #[test]
    fn fmap_round_trip(seed in any::<u64>(), layers in prop::collection::vec((1usize..6, 1usize..6, 1usize..5), 0..4)) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        // Stored as 32-bit reals, so only f32-representable values survive exactly.
        let set = FeatureMapSet::new(
            random_set(&mut r, &layers)
                .layers
                .into_iter()
                .map(|m| {
                    let data = m.as_slice().iter().map(|&v| v as f32 as f64).collect();
                    FeatureMap::new(m.name.clone(), m.height(), m.width(), m.channels(), data).unwrap()
                })
                .collect(),
        );
        let bytes = fmap::encode(&set).unwrap();
        prop_assert_eq!(fmap::decode(&bytes).unwrap(), set);
    }
}
