mod common;

use common::{blob, interior, masked_mean, Texture};
use skyflow::flow::{
    clg_flow, horn_schunck, horn_schunck_from, horn_schunck_traced, hs_energy, hs_energy_gradient,
    lucas_kanade, pyramid_flow, single_level_flow, Derivatives, FlowParams, Method,
};
use skyflow::synthetic::{endpoint_error, generate, SceneSpec};
use skyflow::{ratio_channel, FlowField, ScalarField};

const METHODS: [Method; 3] = [Method::HornSchunck, Method::LucasKanade, Method::Clg];

fn single_level(method: Method) -> FlowParams {
    FlowParams {
        method,
        pyramid_levels: 1,
        warps_per_level: 1,
        ..FlowParams::default()
    }
}

#[test]
fn hs_recovers_a_one_pixel_blob_shift() {
    // 8-bit intensity scale, where alpha = 10 is a moderate smoothness weight.
    let f1 = blob(48, 48, 22.0, 24.0, 6.0, 255.0);
    let f2 = blob(48, 48, 23.0, 24.0, 6.0, 255.0);
    let params = FlowParams {
        method: Method::HornSchunck,
        alpha: 10.0,
        iterations: 200,
        ..FlowParams::default()
    };
    let flow = horn_schunck(&f1, &f2, &params).unwrap();
    let support = |x: usize, y: usize| (x as f64 - 22.5).hypot(y as f64 - 24.0) <= 9.0;
    let u = masked_mean(flow.u(), support);
    let v = masked_mean(flow.v(), support);
    assert!(
        (u - 1.0).abs() < 0.25 && v.abs() < 0.25,
        "mean flow ({u}, {v})"
    );
}

#[test]
fn lk_recovers_a_vertical_texture_shift() {
    let tex = Texture::new(11, 12, 10.0, 1.0);
    let (f1, f2) = (tex.render(64, 64, 0.0, 0.0), tex.render(64, 64, 0.0, 1.0));
    let params = FlowParams {
        window_sigma: 4.0,
        ..FlowParams::with_method(Method::LucasKanade)
    };
    let flow = lucas_kanade(&f1, &f2, &params).unwrap();
    let truth = FlowField::constant(64, 64, 0.0, 1.0).unwrap();
    let roi = skyflow::BinaryMask::from_fn(64, 64, interior(64, 64, 12));
    let epe = endpoint_error(&flow, &truth, Some(&roi)).unwrap();
    assert!(epe < 0.25, "interior EPE {epe}");
}

#[test]
fn clg_recovers_a_blob_shift_with_three_levels() {
    for seed in 1..=6 {
        let spec = SceneSpec {
            width: 64,
            height: 64,
            velocity: (2.0, -1.0),
            n_blobs: 1,
            blob_scale: 10.0,
            seed,
            ..SceneSpec::default()
        };
        let scene = generate(&spec).unwrap();
        let f1 = ratio_channel(&scene.frames[0]).unwrap();
        let f2 = ratio_channel(&scene.frames[1]).unwrap();
        let params = FlowParams {
            pyramid_levels: 3,
            ..FlowParams::default()
        };
        let flow = pyramid_flow(&f1, &f2, &params).unwrap();
        let support = &scene.true_masks[0];
        assert!(support.count() > 100);
        let u = masked_mean(flow.u(), |x, y| support.get(x, y));
        let v = masked_mean(flow.v(), |x, y| support.get(x, y));
        assert!(
            (u - 2.0).abs() < 0.3 && (v + 1.0).abs() < 0.3,
            "seed {seed}: mean flow ({u}, {v})"
        );
    }
}

#[test]
fn pyramid_is_needed_for_large_motion() {
    let tex = Texture::new(5, 10, 16.0, 0.5);
    let (f1, f2) = (
        tex.render(128, 128, 0.0, 0.0),
        tex.render(128, 128, 6.0, 0.0),
    );
    let truth = FlowField::constant(128, 128, 6.0, 0.0).unwrap();
    let roi = skyflow::BinaryMask::from_fn(128, 128, interior(128, 128, 12));

    let pyramid = FlowParams {
        pyramid_levels: 4,
        ..FlowParams::default()
    };
    let coarse_to_fine = pyramid_flow(&f1, &f2, &pyramid).unwrap();
    let epe = endpoint_error(&coarse_to_fine, &truth, Some(&roi)).unwrap();
    assert!(epe < 0.5, "pyramid EPE {epe}");

    let flat = FlowParams {
        pyramid_levels: 1,
        ..FlowParams::default()
    };
    let one_level = pyramid_flow(&f1, &f2, &flat).unwrap();
    let epe = endpoint_error(&one_level, &truth, Some(&roi)).unwrap();
    assert!(epe > 1.0, "single-level EPE {epe}");
}

#[test]
fn zero_motion_fixed_point() {
    let tex = Texture::new(3, 8, 6.0, 0.7);
    let f = tex.render(40, 36, 0.0, 0.0);
    for method in METHODS {
        let params = FlowParams::with_method(method);
        assert!(
            pyramid_flow(&f, &f, &params).unwrap().max_norm() < 1e-9,
            "{method}"
        );
        assert!(
            single_level_flow(&f, &f, &params).unwrap().max_norm() < 1e-9,
            "{method}"
        );
    }
    let params = FlowParams::default();
    assert!(clg_flow(&f, &f, &params).unwrap().max_norm() < 1e-9);
    assert!(horn_schunck(&f, &f, &params).unwrap().max_norm() < 1e-9);
}

#[test]
fn hs_energy_never_increases() {
    for seed in 0..10 {
        let tex = Texture::new(100 + seed, 8, 6.0, 0.5);
        let shift = 0.3 + 0.1 * seed as f64;
        let d = Derivatives::from_pair(
            &tex.render(32, 28, 0.0, 0.0),
            &tex.render(32, 28, shift, -0.5 * shift),
        )
        .unwrap();
        let (_, trace) = horn_schunck_traced(&d, 0.7, 200, None).unwrap();
        assert_eq!(trace.len(), 201);
        for (k, pair) in trace.windows(2).enumerate() {
            assert!(
                pair[1] - pair[0] < 1e-9,
                "seed {seed} sweep {k}: {} -> {}",
                pair[0],
                pair[1]
            );
        }
        assert!(trace[200] < trace[0]);
    }
}

#[test]
fn hs_gradient_matches_finite_differences() {
    let tex = Texture::new(42, 6, 5.0, 0.8);
    let d = Derivatives::from_pair(&tex.render(16, 16, 0.0, 0.0), &tex.render(16, 16, 0.6, 0.4))
        .unwrap();
    let alpha = 0.9;
    let flow = horn_schunck_from(&d, alpha, 15, None).unwrap();
    let analytic = hs_energy_gradient(&d, alpha, &flow).unwrap();

    let step = 1e-4;
    let n = 16 * 16;
    let (u0, v0) = (flow.u().data().to_vec(), flow.v().data().to_vec());
    let energy_at = |u: &[f64], v: &[f64]| {
        let f = FlowField::new(
            ScalarField::new(16, 16, u.to_vec()).unwrap(),
            ScalarField::new(16, 16, v.to_vec()).unwrap(),
        )
        .unwrap();
        hs_energy(&d, alpha, &f).unwrap()
    };
    let (mut diff2, mut norm2) = (0.0, 0.0);
    for i in 0..2 * n {
        let (mut u, mut v) = (u0.clone(), v0.clone());
        let slot = |u: &mut Vec<f64>, v: &mut Vec<f64>, delta: f64| {
            if i < n {
                u[i] += delta
            } else {
                v[i - n] += delta
            }
        };
        slot(&mut u, &mut v, step);
        let plus = energy_at(&u, &v);
        slot(&mut u, &mut v, -2.0 * step);
        let minus = energy_at(&u, &v);
        let fd = (plus - minus) / (2.0 * step);
        let an = if i < n {
            analytic.u().data()[i]
        } else {
            analytic.v().data()[i - n]
        };
        diff2 += (fd - an) * (fd - an);
        norm2 += an * an;
    }
    let rel = (diff2 / norm2).sqrt();
    assert!(norm2 > 0.0);
    assert!(rel < 1e-3, "relative gradient error {rel}");
}

#[test]
fn true_flow_explains_the_data_better_than_zero() {
    let tex = Texture::new(8, 10, 8.0, 1.0);
    let (f1, f2) = (tex.render(48, 48, 0.0, 0.0), tex.render(48, 48, 0.5, -0.25));
    let truth = FlowField::constant(48, 48, 0.5, -0.25).unwrap();
    let zero = FlowField::zeros(48, 48).unwrap();
    let inside = interior(48, 48, 2);
    let with_truth = masked_mean(
        &skyflow::flow::flow_residual(&f1, &f2, &truth)
            .unwrap()
            .map(f64::abs),
        &inside,
    );
    let with_zero = masked_mean(
        &skyflow::flow::flow_residual(&f1, &f2, &zero)
            .unwrap()
            .map(f64::abs),
        &inside,
    );
    assert!(with_truth < with_zero, "{with_truth} vs {with_zero}");
}

#[test]
fn solvers_have_no_axis_bias() {
    let tex = Texture::new(21, 8, 8.0, 0.6);
    let (f1, f2) = (tex.render(48, 40, 0.0, 0.0), tex.render(48, 40, 1.3, -0.6));
    let (t1, t2) = (f1.transpose(), f2.transpose());
    for method in METHODS {
        let params = FlowParams::with_method(method);
        let direct = pyramid_flow(&f1, &f2, &params).unwrap().transposed();
        let swapped = pyramid_flow(&t1, &t2, &params).unwrap();
        let du = direct
            .u()
            .zip_with(swapped.u(), |a, b| (a - b).abs())
            .unwrap()
            .min_max()
            .1;
        let dv = direct
            .v()
            .zip_with(swapped.v(), |a, b| (a - b).abs())
            .unwrap()
            .min_max()
            .1;
        assert!(du < 1e-6 && dv < 1e-6, "{method}: {du} {dv}");
    }
}

#[test]
fn repeated_runs_are_bit_identical() {
    let tex = Texture::new(77, 8, 8.0, 0.6);
    let (f1, f2) = (tex.render(40, 40, 0.0, 0.0), tex.render(40, 40, 2.0, 1.0));
    for method in METHODS {
        let params = FlowParams::with_method(method);
        let a = pyramid_flow(&f1, &f2, &params).unwrap();
        let b = pyramid_flow(&f1, &f2, &params).unwrap();
        assert!(a
            .u()
            .data()
            .iter()
            .zip(b.u().data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a
            .v()
            .data()
            .iter()
            .zip(b.v().data())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}

#[test]
fn mismatched_frames_are_rejected() {
    let a = ScalarField::filled(16, 16, 0.0).unwrap();
    let b = ScalarField::filled(16, 12, 0.0).unwrap();
    let params = FlowParams::default();
    assert!(horn_schunck(&a, &b, &params).is_err());
    assert!(lucas_kanade(&a, &b, &params).is_err());
    assert!(clg_flow(&a, &b, &params).is_err());
    assert!(pyramid_flow(&a, &b, &params).is_err());
    for method in METHODS {
        assert!(single_level_flow(&a, &b, &single_level(method)).is_err());
    }
}
