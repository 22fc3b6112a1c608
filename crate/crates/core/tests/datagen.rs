use steplearn::datagen::{apply_noise, gen_pairs, gen_scene, gen_training_set, Image, Layout, MonotoneMap, NoiseKind, NoiseSpec, SceneSpec};

#[test]
fn salt_pepper_rate_concentrates() {
    let img = Image::filled(64, 0.5);
    for (rate, seed) in [(0.05, 1), (0.3, 2), (0.8, 3)] {
        let out = apply_noise(&img, &NoiseSpec { kind: NoiseKind::SaltPepper { rate }, seed }).unwrap();
        let frac = out.data().iter().filter(|&&v| v != 0.5).count() as f64 / 4096.0;
        let band = 3.0 * (rate * (1.0 - rate) / 4096.0f64).sqrt();
        assert!((frac - rate).abs() <= band, "rate {rate}: {frac}");
    }
}

#[test]
fn distinct_levels_bounded_by_square_count() {
    for seed in 0..20 {
        let spec = SceneSpec { squares: 3, ..SceneSpec::medium_squares(64, seed) };
        let scene = gen_scene(&spec).unwrap();
        let mut levels: Vec<u64> = scene.image.data().iter().map(|v| v.to_bits()).collect();
        levels.sort_unstable();
        levels.dedup();
        assert!(levels.len() >= 2 && levels.len() <= 4);
    }
}

#[test]
fn training_set_is_reproducible() {
    let scene = SceneSpec::medium_squares(16, 9);
    let noise = NoiseSpec { kind: NoiseKind::Gaussian { sigma: 0.05 }, seed: 4 };
    let a = gen_training_set(&scene, &noise, 5, Layout::Row).unwrap();
    let b = gen_training_set(&scene, &noise, 5, Layout::Row).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 5);
    assert_eq!(a.dim(), 16);
    let img = gen_training_set(&scene, &noise, 2, Layout::Image).unwrap();
    assert_eq!(img.dim(), 256);
}

#[test]
fn zero_noise_pairs_are_equal() {
    let scene = SceneSpec::medium_squares(32, 1);
    let noise = NoiseSpec { kind: NoiseKind::MonotoneMap(MonotoneMap::Shift(0.0)), seed: 0 };
    for p in gen_pairs(&scene, &noise, 4).unwrap() {
        assert_eq!(p.clean.image, p.noisy);
    }
}
