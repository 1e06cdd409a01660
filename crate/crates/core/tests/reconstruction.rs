use std::f64::consts::PI;

use rand::Rng;
use su2tomo::forward::{
    add_noise, axis_angle_intensities, measurement_stack, polarimetric_infidelity,
};
use su2tomo::generate::{plate_process, random_process, GeneratorConfig, PlateSpec, Window};
use su2tomo::parallel::with_threads;
use su2tomo::reconstruct::{
    invert_pixel, reconstruct_map_ga, reconstruct_map_mle, GaConfig, MleConfig, PixelObservation,
};
use su2tomo::rng::stream_rng;
use su2tomo::su2::{map_fidelity, pixel_fidelity, su2_from_axis_angle, AxisAngle};
use su2tomo::ProcessMap64;

fn random_pixel(rng: &mut impl Rng) -> AxisAngle<f64> {
    let theta = rng.random::<f64>() * PI;
    let axis = [0; 3].map(|_| rng.random::<f64>() * 2.0 - 1.0);
    AxisAngle::new(theta, axis).unwrap()
}

fn trace_fidelity(a: &AxisAngle<f64>, b: &AxisAngle<f64>) -> f64 {
    su2_from_axis_angle(a)
        .trace_overlap(&su2_from_axis_angle(b))
        .norm()
        / 2.0
}

#[test]
fn inverted_pixels_reproduce_their_observations() {
    let mut rng = stream_rng(11, 0);
    let cfg = MleConfig::default();
    for _ in 0..100 {
        let truth = random_pixel(&mut rng);
        let obs = axis_angle_intensities(&truth);
        let est = invert_pixel(&PixelObservation::new(obs).unwrap(), &cfg).unwrap();
        let back = axis_angle_intensities(&est);
        for (a, b) in obs.iter().zip(&back) {
            assert!((a - b).abs() < 1e-8, "{truth:?}: {obs:?} vs {back:?}");
        }
        assert!(est.axis()[2] >= -1e-6);
    }
}

#[test]
fn noisy_pixels_stay_close_to_the_truth() {
    let mut rng = stream_rng(12, 0);
    let cfg = MleConfig::default();
    let normal = rand_distr::Normal::new(0.0, 0.02).unwrap();
    let trials = 1000;
    let good = (0..trials)
        .filter(|_| {
            let truth = random_pixel(&mut rng);
            let obs = axis_angle_intensities(&truth).map(|v| v + rng.sample(normal));
            let est = invert_pixel(&PixelObservation::new(obs).unwrap(), &cfg).unwrap();
            trace_fidelity(&truth, &est) >= 0.98
        })
        .count();
    assert!(good * 100 >= 95 * trials, "{good}/{trials}");
}

#[test]
fn noiseless_random_processes_are_recovered_pixelwise() {
    for seed in 0..3 {
        let truth = random_process::<f64>(&GeneratorConfig::new(16, 300 + seed)).unwrap();
        let rec = reconstruct_map_mle(&measurement_stack(&truth), &MleConfig::default()).unwrap();
        assert!(pixel_fidelity(&truth, &rec).unwrap() >= 0.999);
        assert!(rec.is_canonicalized());
    }
}

#[test]
fn three_plate_device_is_recovered() {
    let plates = [
        PlateSpec::w(),
        PlateSpec::g_plate_x(PI / 2.0, 1.0),
        PlateSpec::g_plate_y(PI / 2.0, 1.0),
    ];
    let truth: ProcessMap64 = plate_process(&plates, 16, Window::default_for(&plates)).unwrap();
    let rec = reconstruct_map_mle(&measurement_stack(&truth), &MleConfig::default()).unwrap();
    let f = map_fidelity(&truth, &rec).unwrap();
    assert!(f >= 0.99, "{f}");
}

#[test]
fn noisy_reconstruction_sits_at_the_noise_floor() {
    let sigma = 0.02;
    for seed in 0..3 {
        let truth = random_process::<f64>(&GeneratorConfig::new(16, 400 + seed)).unwrap();
        let stack = add_noise(&measurement_stack(&truth), sigma, seed).unwrap();
        let rec = reconstruct_map_mle(&stack, &MleConfig::default()).unwrap();
        let delta = polarimetric_infidelity(&stack, &measurement_stack(&rec)).unwrap();
        assert!(delta <= 3.0 * sigma * sigma, "seed {seed}: {delta}");
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let truth = random_process::<f64>(&GeneratorConfig::new(12, 9)).unwrap();
    let stack = add_noise(&measurement_stack(&truth), 0.02, 3).unwrap();
    let ga_cfg = GaConfig {
        generations: 30,
        rng_seed: 4,
        ..GaConfig::default()
    };
    let run = |threads| {
        with_threads(Some(threads), || {
            (
                reconstruct_map_mle(&stack, &MleConfig::default()).unwrap(),
                reconstruct_map_ga(&stack, &ga_cfg, false).unwrap(),
                add_noise(&measurement_stack(&truth), 0.02, 3).unwrap(),
            )
        })
        .unwrap()
    };
    let one = run(1);
    let four = run(4);
    assert_eq!(one.0, four.0);
    assert_eq!(one.1, four.1);
    assert_eq!(one.2, four.2);
}
