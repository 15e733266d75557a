use autovid::seed::stream_rng;
use autovid::zoo::{motion_features, normalize_frames, scale_frames, segment_indices, segment_sample, SegmentMode};
use autovid::RawFrames;
use proptest::prelude::*;
use rand::RngCore;

fn clip(t: usize, h: usize, w: usize, c: usize, seed: u64) -> RawFrames {
    let mut rng = stream_rng(seed, 0);
    let mut data = vec![0u8; t * h * w * c];
    rng.fill_bytes(&mut data);
    RawFrames::new(t, h, w, c, data).unwrap()
}

proptest! {
    #[test]
    fn segment_indices_shape(t in 1usize..200, n in 1usize..40, seed in any::<u64>(), train in any::<bool>()) {
        let mode = if train { SegmentMode::TrainRandom } else { SegmentMode::EvalCenter };
        let idx = segment_indices(t, n, mode, &mut stream_rng(seed, 0));
        prop_assert_eq!(idx.len(), n);
        prop_assert!(idx.windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(idx.iter().all(|&i| i < t));
        if t >= n {
            for (k, &i) in idx.iter().enumerate() {
                prop_assert!(i >= k * t / n && i < (k + 1) * t / n);
            }
        }
    }

    #[test]
    fn eval_center_consumes_no_randomness(t in 1usize..100, n in 1usize..20, seed in any::<u64>()) {
        let mut rng = stream_rng(seed, 0);
        let a = segment_indices(t, n, SegmentMode::EvalCenter, &mut rng);
        let after = rng.next_u64();
        let mut fresh = stream_rng(seed, 0);
        prop_assert_eq!(a, segment_indices(t, n, SegmentMode::EvalCenter, &mut stream_rng(seed ^ 1, 0)));
        prop_assert_eq!(after, fresh.next_u64());
    }

    #[test]
    fn sampled_clip_has_n_frames(t in 1usize..30, n in 1usize..20, seed in any::<u64>()) {
        let v = clip(t, 3, 5, 1, seed);
        let s = segment_sample(&v, n, SegmentMode::TrainRandom, &mut stream_rng(seed, 1)).unwrap();
        prop_assert_eq!(s.frames(), n);
        prop_assert_eq!((s.height(), s.width(), s.channels()), (3, 5, 1));
    }

    #[test]
    fn scaling_preserves_constant_frames(v in any::<u8>(), h in 1usize..12, w in 1usize..12, oh in 1usize..20, ow in 1usize..20) {
        let f = RawFrames::filled(2, h, w, 3, v).unwrap();
        let s = scale_frames(&f, oh, ow).unwrap();
        prop_assert_eq!((s.frames(), s.height(), s.width()), (2, oh, ow));
        prop_assert!(s.data().iter().all(|&x| x == v));
    }

    #[test]
    fn scaling_stays_within_input_range(seed in any::<u64>(), oh in 1usize..20, ow in 1usize..20) {
        let f = clip(1, 7, 9, 1, seed);
        let (lo, hi) = (*f.data().iter().min().unwrap(), *f.data().iter().max().unwrap());
        let s = scale_frames(&f, oh, ow).unwrap();
        prop_assert!(s.data().iter().all(|&x| x >= lo && x <= hi));
    }

    #[test]
    fn motion_feature_length(t in 1usize..12, c in prop::sample::select(vec![1usize, 3]), seed in any::<u64>()) {
        let f = clip(t, 4, 4, c, seed);
        let x = normalize_frames(&f, &vec![0.5; c], &vec![0.25; c]).unwrap();
        let m = motion_features(&x);
        prop_assert_eq!(m.len(), (2 * t - 1) * c);
        prop_assert!(m.iter().all(|v| v.is_finite()));
        prop_assert!(m[..(t - 1) * c].iter().all(|v| *v >= 0.0));
    }
}

#[test]
fn center_indices_for_even_segments() {
    let idx = segment_indices(32, 16, SegmentMode::EvalCenter, &mut stream_rng(0, 0));
    assert_eq!(idx, (0..16).map(|k| 2 * k).collect::<Vec<_>>());
    assert_eq!(segment_indices(4, 8, SegmentMode::TrainRandom, &mut stream_rng(0, 0)), [0, 0, 1, 1, 2, 2, 3, 3]);
}

#[test]
fn normalization_formula() {
    let f = RawFrames::new(1, 1, 2, 1, vec![0, 255]).unwrap();
    let x = normalize_frames(&f, &[0.5], &[0.5]).unwrap();
    assert_eq!(x.data(), &[-1.0, 1.0]);
}

#[test]
fn static_clip_has_zero_motion() {
    let f = RawFrames::filled(5, 4, 4, 1, 200).unwrap();
    let x = normalize_frames(&f, &[0.0], &[1.0]).unwrap();
    let m = motion_features(&x);
    assert!(m[..4].iter().all(|v| *v == 0.0));
    assert!(m[4..].iter().all(|v| (v - 200.0 / 255.0).abs() < 1e-12));
}
