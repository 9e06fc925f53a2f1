use bm3d_core::filter::{
    finalize, hard_threshold_filter, kaiser_window, wiener_filter, AggregationBuffer, AggregationTarget, Aggregator,
    FilteredGroup,
};
use bm3d_core::group::{Group3D, PatchMatch, PatchRef};
use bm3d_core::transforms::{GroupTransform, Spatial};
use bm3d_core::Image;
use proptest::prelude::*;

mod common;
use common::*;

fn members(size: usize) -> Vec<PatchMatch> {
    (0..size)
        .map(|i| PatchMatch {
            at: PatchRef::new(0, i, 2 * i),
            distance: i as f64,
        })
        .collect()
}

fn group(k: usize, data: Vec<f64>) -> Group3D {
    let size = data.len() / (k * k);
    Group3D::new(k, members(size), data).unwrap()
}

/// Dense 3D operator: Hadamard across patches times the spatial operator.
fn operator_3d(spatial: &Mat, size: usize) -> Mat {
    kron(&hadamard(size), spatial)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

#[test]
fn hard_threshold_matches_dense_oracle() {
    let k = 4;
    let t = GroupTransform::new(Spatial::Bior15, k).unwrap();
    let spatial = bior_2d_operator(k);
    for (case, size) in [1usize, 2, 4, 1, 2, 4, 2, 4].into_iter().enumerate() {
        let sigma = 10.0 + 15.0 * case as f64;
        let lambda = 2.7;
        let x: Vec<f64> = random(case as u64, size * k * k, 40.0).iter().map(|v| v + 100.0).collect();
        let op = operator_3d(&spatial, size);
        let mut c = apply(&op, &x);
        let mut retained = usize::from(c[0] != 0.0);
        for v in &mut c[1..] {
            if v.abs() < lambda * sigma {
                *v = 0.0;
            } else {
                retained += 1;
            }
        }
        let expected = apply(&invert(&op), &c);
        let weight = 1.0 / (sigma * sigma * retained.max(1) as f64);

        let FilteredGroup { group: out, weight: w } = hard_threshold_filter(&group(k, x), sigma, lambda, &t).unwrap();
        assert!(close(out.data(), &expected, 1e-9), "case {case}");
        assert!((w - weight).abs() <= 1e-15 * weight, "case {case}: {w} vs {weight}");
        assert_eq!(out.members(), &members(size)[..]);
    }
}

#[test]
fn wiener_matches_dense_oracle() {
    let k = 4;
    let t = GroupTransform::new(Spatial::Dct, k).unwrap();
    let spatial = dct_2d_operator(k);
    for (case, size) in [1usize, 2, 4, 4, 2].into_iter().enumerate() {
        let sigma = 20.0 + 20.0 * case as f64;
        let base = random(100 + case as u64, size * k * k, 30.0);
        let noisy: Vec<f64> = base.iter().zip(random(200 + case as u64, base.len(), sigma)).map(|(a, n)| a + n).collect();
        let op = operator_3d(&spatial, size);
        let c = apply(&op, &noisy);
        let p = apply(&op, &base);
        let mut norm = 0.0;
        let shrunk: Vec<f64> = c
            .iter()
            .zip(&p)
            .enumerate()
            .map(|(i, (c, p))| {
                let w = if i == 0 && *p != 0.0 { 1.0 } else { p * p / (p * p + sigma * sigma) };
                norm += w * w;
                c * w
            })
            .collect();
        let expected = apply(&transpose(&op), &shrunk);
        let weight = 1.0 / (sigma * sigma * norm);

        let out = wiener_filter(&group(k, noisy), &group(k, base), sigma, &t).unwrap();
        assert!(close(out.group.data(), &expected, 1e-9), "case {case}");
        assert!((out.weight - weight).abs() <= 1e-12 * weight, "case {case}");
    }
}

#[test]
fn zero_pilot_annihilates() {
    let t = GroupTransform::new(Spatial::Dct, 4).unwrap();
    let noisy = group(4, random(5, 32, 50.0));
    let out = wiener_filter(&noisy, &group(4, vec![0.0; 32]), 30.0, &t).unwrap();
    assert!(out.group.data().iter().all(|v| *v == 0.0));
    assert!(out.weight.is_finite() && out.weight > 0.0);
}

#[test]
fn kaiser_matches_reference_values() {
    let w1 = [
        0.4386762798370488,
        0.6813242630163212,
        0.8768399053044081,
        0.9858225062008237,
        0.9858225062008237,
        0.8768399053044081,
        0.6813242630163212,
        0.4386762798370488,
    ];
    let w = kaiser_window(8, 2.0);
    for r in 0..8 {
        for c in 0..8 {
            assert!((w[r * 8 + c] - w1[r] * w1[c]).abs() < 1e-13);
        }
    }
    assert!(kaiser_window(5, 0.0).iter().all(|v| (v - 1.0).abs() < 1e-15));
    assert!((kaiser_window(5, 2.0)[12] - 1.0).abs() < 1e-15);
}

#[test]
fn aggregation_matches_double_loop() {
    let (w, h, k) = (12usize, 12usize, 4usize);
    let beta = 2.0;
    let window = kaiser_window(k, beta);
    let spec = [
        (vec![(0, 0), (3, 5), (8, 8), (2, 2)], 0.5),
        (vec![(1, 1), (5, 0)], 2.0),
        (vec![(6, 6), (0, 8), (4, 4), (8, 1)], 0.125),
    ];
    let mut groups = Vec::new();
    for (g, (pos, weight)) in spec.iter().enumerate() {
        let members: Vec<PatchMatch> = pos
            .iter()
            .map(|&(r, c)| PatchMatch {
                at: PatchRef::new(0, r, c),
                distance: 0.0,
            })
            .collect();
        let data = random(g as u64, members.len() * k * k, 20.0);
        groups.push(FilteredGroup {
            group: Group3D::new(k, members, data).unwrap(),
            weight: *weight,
        });
    }

    let mut num = vec![vec![0.0; w]; h];
    let mut den = vec![vec![0.0; w]; h];
    for y in 0..h {
        for x in 0..w {
            for fg in &groups {
                for (i, m) in fg.group.members().iter().enumerate() {
                    let (r, c) = (m.at.row, m.at.col);
                    if y >= r && y < r + k && x >= c && x < c + k {
                        let s = (y - r) * k + (x - c);
                        let kw = fg.weight * window[s];
                        num[y][x] += kw * fg.group.patch(i)[s];
                        den[y][x] += kw;
                    }
                }
            }
        }
    }

    let mut agg = Aggregator::new(AggregationTarget::SingleImage, 1, w, h, k, beta);
    for fg in &groups {
        agg.push(fg).unwrap();
    }
    let buf = &agg.buffers()[0];
    let fallback = Image::filled(w, h, -7.0);
    let out = finalize(buf, &fallback).unwrap();
    let mut uncovered = 0;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            assert!((buf.numerator()[i] - num[y][x]).abs() < 1e-9);
            assert!((buf.denominator()[i] - den[y][x]).abs() < 1e-12);
            let expected = if den[y][x] > 0.0 {
                num[y][x] / den[y][x]
            } else {
                uncovered += 1;
                -7.0
            };
            assert!((f64::from(out.image.get(y, x)) - expected).abs() < 1e-4);
        }
    }
    assert_eq!(out.fallback_pixels, uncovered);
    assert!(uncovered > 0);
}

#[test]
fn per_frame_target_routes_by_frame() {
    let k = 2;
    let members = vec![
        PatchMatch {
            at: PatchRef::new(1, 0, 0),
            distance: 0.0,
        },
        PatchMatch {
            at: PatchRef::new(0, 2, 2),
            distance: 1.0,
        },
    ];
    let fg = FilteredGroup {
        group: Group3D::new(k, members, vec![5.0; 8]).unwrap(),
        weight: 1.0,
    };
    let mut agg = Aggregator::new(AggregationTarget::PerFrame, 2, 4, 4, k, 0.0);
    agg.push(&fg).unwrap();
    let (b0, b1) = (&agg.buffers()[0], &agg.buffers()[1]);
    assert_eq!(b0.denominator()[0], 0.0);
    assert_eq!(b0.denominator()[2 * 4 + 2], 1.0);
    assert_eq!(b1.denominator()[0], 1.0);
    assert_eq!(b1.denominator()[2 * 4 + 2], 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn weights_are_positive_and_shrinkage_bounded(seed in any::<u64>(), sigma in 1.0f64..150.0, log_size in 0u32..5) {
        let (k, size) = (8, 1usize << log_size);
        let data: Vec<f64> = random(seed, size * k * k, 60.0);
        let hard = GroupTransform::new(Spatial::Bior15, k).unwrap();
        let fg = hard_threshold_filter(&group(k, data.clone()), sigma, 2.7, &hard).unwrap();
        prop_assert!(fg.weight > 0.0 && fg.weight <= 1.0 / (sigma * sigma));

        let wien = GroupTransform::new(Spatial::Dct, k).unwrap();
        let pilot = random(seed ^ 1, data.len(), 60.0);
        let out = wiener_filter(&group(k, data.clone()), &group(k, pilot.clone()), sigma, &wien).unwrap();
        prop_assert!(out.weight > 0.0 && out.weight.is_finite());
        // shrinkage never grows energy: ||out|| <= ||in|| in the orthonormal domain
        let e_in: f64 = data.iter().map(|v| v * v).sum();
        let e_out: f64 = out.group.data().iter().map(|v| v * v).sum();
        prop_assert!(e_out <= e_in * (1.0 + 1e-12));
    }

    #[test]
    fn buffer_sums_are_order_independent(seed in any::<u64>()) {
        let k = 4;
        let vals = random(seed, 3 * k * k, 30.0);
        let window = kaiser_window(k, 2.0);
        let pos = [(0usize, 0usize), (2, 3), (4, 1)];
        let mut a = AggregationBuffer::new(8, 8);
        let mut b = AggregationBuffer::new(8, 8);
        for (i, &(r, c)) in pos.iter().enumerate() {
            a.push_patch(r, c, &vals[i * 16..(i + 1) * 16], 1.0 + i as f64, &window).unwrap();
        }
        for (i, &(r, c)) in pos.iter().enumerate().rev() {
            b.push_patch(r, c, &vals[i * 16..(i + 1) * 16], 1.0 + i as f64, &window).unwrap();
        }
        prop_assert!(close(a.numerator(), b.numerator(), 1e-12));
        prop_assert!(close(a.denominator(), b.denominator(), 1e-12));
    }
}
