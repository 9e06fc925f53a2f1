use bm3d_core::pipeline::{bm3d_1, bm3d_2, bm3d_3, bm3d_m, bm3d_single, run_method, Bm3dParams, MeanSigma, MethodId};
use bm3d_core::{add_awgn, make_dataset, mse, FrameStack, Image, NoiseSpec, Parallelism};

fn scene(w: usize, h: usize) -> Image {
    Image::from_fn(w, h, |r, c| {
        let (x, y) = (c as f32, r as f32);
        let disc = if (x - 20.0).powi(2) + (y - 24.0).powi(2) < 120.0 { 80.0 } else { 0.0 };
        let stripes = if (c / 4) % 2 == 0 { 40.0 } else { 0.0 };
        60.0 + disc + stripes * f32::from(u8::from(r > h / 2)) + 0.5 * x
    })
}

fn small(sigma: f64) -> Bm3dParams {
    let mut p = Bm3dParams::new(sigma);
    p.step1.window = 15;
    p.step2.window = 15;
    p
}

fn max_diff(a: &Image, b: &Image) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| f64::from((x - y).abs()))
        .fold(0.0, f64::max)
}

#[test]
fn single_frame_reduces_every_method_to_bm3d() {
    let clean = scene(40, 40);
    let stack = make_dataset(&clean, 40.0, 1, 3, "scene").unwrap();
    let p = small(40.0);
    let par = Parallelism::sequential();
    let reference = bm3d_single(&stack.frames()[0], &p, &par).unwrap();
    for out in [
        bm3d_1(&stack, &p, &par).unwrap(),
        bm3d_2(&stack, &p, &par).unwrap(),
        bm3d_3(&stack, 0, &p, &par).unwrap(),
        bm3d_m(&stack, &p, &par).unwrap(),
    ] {
        assert!(max_diff(&out, &reference) <= 1e-6);
    }
}

#[test]
fn flat_inputs_stay_flat() {
    let par = Parallelism::sequential();
    for sigma in [80.0, 120.0] {
        for value in [0.0f32, 13.0, 200.0] {
            let flat = Image::filled(24, 24, value);
            let stack = FrameStack::new(vec![flat.clone(); 3], sigma, 0, "flat").unwrap();
            let p = small(sigma);
            for m in MethodId::ALL {
                let out = run_method(m, &stack, &p, Some(&flat), &par).unwrap().image;
                assert!(
                    out.data().iter().all(|v| (v - value).abs() < 1e-4),
                    "{m} sigma={sigma} value={value}"
                );
            }
        }
    }
}

#[test]
fn frame_order_does_not_matter() {
    let clean = scene(32, 32);
    let stack = make_dataset(&clean, 60.0, 3, 11, "scene").unwrap();
    let permuted = stack.permuted(&[2, 0, 1]).unwrap();
    let p = small(60.0);
    let par = Parallelism::sequential();
    for (a, b) in [
        (bm3d_1(&stack, &p, &par).unwrap(), bm3d_1(&permuted, &p, &par).unwrap()),
        (bm3d_2(&stack, &p, &par).unwrap(), bm3d_2(&permuted, &p, &par).unwrap()),
        (bm3d_m(&stack, &p, &par).unwrap(), bm3d_m(&permuted, &p, &par).unwrap()),
    ] {
        assert!(max_diff(&a, &b) <= 1e-4, "{}", max_diff(&a, &b));
    }
}

#[test]
fn averaged_noise_shrinks_with_sqrt_frames() {
    let clean = Image::filled(256, 256, 100.0);
    let stack = make_dataset(&clean, 80.0, 4, 21, "flat").unwrap();
    let mean = Image::mean_of(stack.frames()).unwrap();
    let std = mse(&mean, &clean).unwrap().sqrt();
    assert!((std - 40.0).abs() < 2.0, "{std}");
}

#[test]
fn identical_frames_average_to_single_result() {
    let noisy = add_awgn(&scene(32, 32), NoiseSpec::new(50.0, 4).unwrap());
    let stack = FrameStack::new(vec![noisy.clone(); 3], 50.0, 4, "dup").unwrap();
    let p = small(50.0);
    let par = Parallelism::sequential();
    let single = bm3d_single(&noisy, &p, &par).unwrap();
    assert!(max_diff(&bm3d_2(&stack, &p, &par).unwrap(), &single) < 1e-4);
    let mean = Image::mean_of(stack.frames()).unwrap();
    assert!(max_diff(&mean, &noisy) < 1e-4);
}

#[test]
fn bm3d_1_sigma_modes() {
    let clean = scene(32, 32);
    let stack = make_dataset(&clean, 60.0, 4, 2, "scene").unwrap();
    let par = Parallelism::sequential();
    let mut p = small(60.0);
    let mean = Image::mean_of(stack.frames()).unwrap();
    let scaled = bm3d_1(&stack, &p, &par).unwrap();
    assert_eq!(scaled, bm3d_single(&mean, &p.with_sigma(30.0), &par).unwrap());
    p.mean_sigma = MeanSigma::Input;
    let input = bm3d_1(&stack, &p, &par).unwrap();
    assert_eq!(input, bm3d_single(&mean, &p.with_sigma(60.0), &par).unwrap());
}

#[test]
fn denoising_helps_and_methods_report_metadata() {
    let clean = scene(48, 48);
    let stack = make_dataset(&clean, 50.0, 3, 9, "scene").unwrap();
    let p = small(50.0);
    let par = Parallelism::sequential();
    for m in MethodId::ALL {
        let run = run_method(m, &stack, &p, Some(&clean), &par).unwrap();
        let err = mse(&run.image, &clean).unwrap();
        assert!(err < 0.25 * 2500.0, "{m}: {err}");
        assert!(run.wall_time >= 0.0);
        assert_eq!(run.warnings.is_empty(), m != MethodId::Bm3d);
        if m == MethodId::Bm3d3 {
            assert_eq!(run.per_reference.len(), 3);
            let best = run.chosen_reference.unwrap();
            let best_mse = run.per_reference[best].mse.unwrap();
            assert!(run.per_reference.iter().all(|r| r.mse.unwrap() >= best_mse));
        }
    }
    let run = run_method(MethodId::Bm3d3, &stack, &p, None, &par).unwrap();
    assert_eq!(run.chosen_reference, Some(0));
    assert!(bm3d_3(&stack, 3, &p, &par).is_err());
}

#[cfg(feature = "parallel")]
#[test]
fn thread_count_does_not_change_output() {
    let clean = scene(48, 48);
    let stack = make_dataset(&clean, 80.0, 2, 5, "scene").unwrap();
    let p = small(80.0);
    let seq = bm3d_m(&stack, &p, &Parallelism::sequential()).unwrap();
    let par = bm3d_m(&stack, &p, &Parallelism::with_threads(4).unwrap()).unwrap();
    assert_eq!(seq, par);
}
