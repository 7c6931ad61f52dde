use super::*;
use crate::media_io::artifact::{from_bytes, to_bytes};
use proptest::prelude::*;
use rand::Rng;

fn ex(features: Vec<f64>, label: Label, i: usize) -> TrainingExample {
    TrainingExample {
        features,
        label,
        video_id: format!("v{i}"),
        element: ElementRef {
            kind: ElementKind::Shot,
            index: i,
        },
    }
}

fn feature(channel: &str, index: usize, values: Vec<f64>) -> ElementFeature {
    ElementFeature {
        channel_id: channel.into(),
        element: ElementRef {
            kind: ElementKind::Shot,
            index,
        },
        values,
        empty: false,
    }
}

fn model(channel: &str, weights: Vec<f64>, bias: f64) -> ChannelModel {
    ChannelModel {
        channel_id: channel.into(),
        weights,
        bias,
        c: 1.0,
        seed: 0,
        positives: 1,
        negatives: 1,
    }
}

/// Two overlapping 2-d clouds, ten points each.
fn twenty_points() -> Vec<TrainingExample> {
    let pos = [
        (2.0, 1.0),
        (1.5, 2.0),
        (3.0, 0.5),
        (2.5, 2.5),
        (1.0, 1.0),
        (0.5, 2.0),
        (2.0, -0.5),
        (3.0, 3.0),
        (0.0, 1.5),
        (-0.5, 0.5),
    ];
    let neg = [
        (-2.0, -1.0),
        (-1.0, -2.0),
        (-3.0, 0.0),
        (-1.5, -1.5),
        (0.0, -1.0),
        (1.0, -1.0),
        (-2.0, 1.0),
        (0.5, 0.0),
        (-1.0, 0.5),
        (1.5, 0.5),
    ];
    let mut out = Vec::new();
    for (i, &(a, b)) in pos.iter().enumerate() {
        out.push(ex(vec![a, b], Label::Positive, i));
    }
    for (i, &(a, b)) in neg.iter().enumerate() {
        out.push(ex(vec![a, b], Label::Negative, 10 + i));
    }
    out
}

/// Minimum of the objective over the grid {-5, -4.99, ..., 5}^3. For fixed w
/// the objective is convex in b, so the grid minimum over b is found by
/// bisection on the sign of the forward difference.
fn grid_minimum(examples: &[TrainingExample], c: f64) -> f64 {
    let n = examples.len() as f64;
    let grid = |i: i64| i as f64 / 100.0;
    let mut best = f64::INFINITY;
    let ys: Vec<f64> = examples.iter().map(|e| f64::from(e.label.sign())).collect();
    for i in -500..=500 {
        for j in -500..=500 {
            let (w1, w2) = (grid(i), grid(j));
            let s: Vec<f64> = examples
                .iter()
                .zip(&ys)
                .map(|(e, y)| y * (w1 * e.features[0] + w2 * e.features[1]))
                .collect();
            let reg = (w1 * w1 + w2 * w2) / (2.0 * c * n);
            let j_at = |k: i64| {
                let b = grid(k);
                reg + s.iter().zip(&ys).map(|(s, y)| (1.0 - s - y * b).max(0.0)).sum::<f64>() / n
            };
            let (mut lo, mut hi) = (-500i64, 500i64);
            while lo < hi {
                let mid = lo + (hi - lo) / 2;
                if j_at(mid + 1) < j_at(mid) {
                    lo = mid + 1;
                } else {
                    hi = mid;
                }
            }
            best = best.min(j_at(lo));
        }
    }
    best
}

#[test]
fn separable_pair_margin() {
    let data = vec![
        ex(vec![1.0, 0.0], Label::Positive, 0),
        ex(vec![-1.0, 0.0], Label::Negative, 1),
    ];
    let m = train_linear_svm("c", &data, &SvmParams::default(), 3).unwrap();
    for e in &data {
        let margin = f64::from(e.label.sign()) * m.margin(&e.features);
        assert!(margin >= 1.0 - 1e-3, "{margin} {m:?}");
    }
}

#[test]
fn objective_within_one_percent_of_grid_search() {
    let data = twenty_points();
    let oracle = grid_minimum(&data, 1.0);
    let m = train_linear_svm("c", &data, &SvmParams::default(), 11).unwrap();
    let j = svm_objective(&data, 1.0, &m.weights, m.bias);
    assert!(j <= 1.01 * oracle, "sgd {j} grid {oracle}");
}

#[test]
fn objective_below_initial_and_beats_constant_classifier() {
    let mut rng = crate::seed::rng(5);
    for trial in 0..5 {
        let data: Vec<TrainingExample> = (0..60)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Positive } else { Label::Negative };
                let shift = f64::from(label.sign()) * 0.7;
                ex(
                    (0..4).map(|_| rng.random_range(-1.0..1.0) + shift).collect(),
                    label,
                    i,
                )
            })
            .collect();
        let m = train_linear_svm("c", &data, &SvmParams::default(), trial).unwrap();
        let j = svm_objective(&data, 1.0, &m.weights, m.bias);
        assert!(j <= svm_objective(&data, 1.0, &[0.0; 4], 0.0));
        let correct = data
            .iter()
            .filter(|e| {
                predict(&m, &feature("c", 0, e.features.clone())).unwrap().unwrap().0 == e.label
            })
            .count();
        assert!(correct >= 30, "{correct}");
    }
}

#[test]
fn training_errors() {
    let one_class = vec![
        ex(vec![1.0], Label::Positive, 0),
        ex(vec![2.0], Label::Positive, 1),
    ];
    assert!(matches!(
        train_linear_svm("c", &one_class, &SvmParams::default(), 0),
        Err(Error::Validation(_))
    ));
    let bad = vec![
        ex(vec![1.0], Label::Positive, 0),
        ex(vec![f64::NAN], Label::Negative, 7),
    ];
    let err = train_linear_svm("c", &bad, &SvmParams::default(), 0).unwrap_err();
    assert!(err.to_string().contains("v7/shot#7"), "{err}");
}

#[test]
fn predict_examples() {
    let m = model("c", vec![1.0, 0.0], 0.0);
    assert_eq!(
        predict(&m, &feature("c", 0, vec![2.0, 0.0])).unwrap(),
        Some((Label::Positive, 2.0))
    );
    assert_eq!(
        predict(&m, &feature("c", 0, vec![0.0, 3.0])).unwrap(),
        Some((Label::Negative, 0.0))
    );
    let mut empty = feature("c", 0, vec![0.0, 0.0]);
    empty.empty = true;
    assert_eq!(predict(&m, &empty).unwrap(), None);
    assert!(matches!(predict(&m, &feature("c", 0, vec![1.0])), Err(Error::Contract(_))));
}

fn decide(signs: &[i8]) -> VideoDecision {
    let models = [model("c", vec![1.0], 0.0)];
    let feats: Vec<_> = signs
        .iter()
        .enumerate()
        .map(|(i, &s)| feature("c", i, vec![f64::from(s) * (1.0 + i as f64)]))
        .collect();
    classify_video("v", &models, &feats, &FusionParams::default()).unwrap()
}

#[test]
fn fusion_examples() {
    let d = decide(&[1, 1, 1]);
    assert_eq!((d.positives, d.negatives, d.label), (3, 0, Label::Positive));
    let d = decide(&[1, 1, -1, -1]);
    assert_eq!((d.positives, d.negatives, d.label), (2, 2, Label::Negative));
}

/// Three channels over five shots with a hand-written vote table.
#[test]
fn three_channels_five_shots() {
    let table: [[i8; 5]; 3] = [[1, 1, -1, 0, 1], [-1, -1, -1, 1, 0], [1, 1, 1, 1, -1]];
    let channels = ["rgb", "sift", "stip"];
    let models: Vec<_> = channels.iter().map(|c| model(c, vec![1.0, 0.0], 0.0)).collect();
    let mut feats = Vec::new();
    for (c, row) in channels.iter().zip(&table) {
        for (shot, &v) in row.iter().enumerate() {
            let mut f = feature(c, shot, vec![f64::from(v) * 0.5, 9.0]);
            // 0 in the table is an element with no descriptors
            f.empty = v == 0;
            feats.push(f);
        }
    }
    let d = classify_video("v", &models, &feats, &FusionParams::default()).unwrap();
    // hand count: +1 appears 3+1+4 = 8 times, -1 appears 1+3+1 = 5 times
    assert_eq!((d.positives, d.negatives, d.abstained), (8, 5, 2));
    assert_eq!(d.label, Label::Positive);
    assert_eq!(d.votes.len(), 13);
}

#[test]
fn fusion_matches_brute_force_count_up_to_twelve_votes() {
    for n in 0..=12usize {
        for mask in 0u32..(1 << n) {
            let signs: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
            let d = decide(&signs);
            let pos = signs.iter().filter(|&&s| s == 1).count();
            let expected = if 2 * pos > n { Label::Positive } else { Label::Negative };
            assert_eq!((d.positives, d.label), (pos, expected));
            assert_eq!(d.positives + d.negatives + d.abstained, n);
        }
    }
}

#[test]
fn missing_model_is_a_config_error() {
    let err = classify_video("v", &[], &[feature("sift", 0, vec![1.0])], &FusionParams::default()).unwrap_err();
    assert!(matches!(err, Error::Config { .. }));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn normalized_fusion_weights_channels_equally() {
    let models = [model("a", vec![1.0], 0.0), model("b", vec![1.0], 0.0)];
    let mut feats = vec![feature("a", 0, vec![1.0])];
    feats.extend((0..3).map(|i| feature("b", i, vec![if i == 0 { 1.0 } else { -1.0 }])));
    let plain = classify_video("v", &models, &feats, &FusionParams::default()).unwrap();
    assert_eq!(plain.label, Label::Negative);
    let norm = FusionParams {
        normalize_per_channel: true,
    };
    // channel a scores +1, channel b scores -1/3
    assert_eq!(classify_video("v", &models, &feats, &norm).unwrap().label, Label::Positive);
}

#[test]
fn balance_examples() {
    let make = |p: usize, n: usize| -> Vec<TrainingExample> {
        (0..p + n)
            .map(|i| ex(vec![i as f64], if i < p { Label::Positive } else { Label::Negative }, i))
            .collect()
    };
    let key = |v: &[TrainingExample]| {
        let mut k: Vec<String> = v.iter().map(|e| e.video_id.clone()).collect();
        k.sort();
        k
    };
    let even = make(100, 100);
    assert_eq!(key(&balance_training_set(even.clone(), 1).unwrap()), key(&even));

    let a = balance_training_set(make(300, 100), 1).unwrap();
    let b = balance_training_set(make(300, 100), 2).unwrap();
    for set in [&a, &b] {
        let pos: Vec<_> = set.iter().filter(|e| e.label == Label::Positive).collect();
        assert_eq!(pos.len(), 100);
        assert_eq!(set.len(), 200);
        assert!(pos.iter().all(|e| e.features[0] < 300.0));
        let mut ids: Vec<_> = pos.iter().map(|e| &e.video_id).collect();
        ids.dedup();
        assert_eq!(ids.len(), 100);
    }
    let pos_ids = |s: &[TrainingExample]| key(&s.iter().filter(|e| e.label == Label::Positive).cloned().collect::<Vec<_>>());
    assert_ne!(pos_ids(&a), pos_ids(&b));
    assert_eq!(a, balance_training_set(make(300, 100), 1).unwrap());

    assert!(balance_training_set(make(5, 0), 1).is_err());
}

#[test]
fn model_round_trips_bit_exactly() {
    let mut rng = crate::seed::rng(9);
    let m = ChannelModel {
        channel_id: "stip".into(),
        weights: (0..5000).map(|_| rng.random::<f64>() - 0.5).collect(),
        bias: -0.1234567890123,
        c: 1.0,
        seed: 42,
        positives: 310,
        negatives: 290,
    };
    let back: ChannelModel = from_bytes(&to_bytes(&m)).unwrap();
    assert_eq!(back, m);
    assert!(back.weights.iter().zip(&m.weights).all(|(a, b)| a.to_bits() == b.to_bits()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_scaling_leaves_decisions_unchanged(
        seed in any::<u64>(),
        c in 1e-3f64..1e3,
    ) {
        let mut rng = crate::seed::rng(seed);
        let dims = [3usize, 5];
        let models: Vec<_> = dims
            .iter()
            .enumerate()
            .map(|(i, &d)| model(&format!("c{i}"), (0..d).map(|_| rng.random_range(-1.0..1.0)).collect(), rng.random_range(-0.5..0.5)))
            .collect();
        let feats: Vec<_> = (0..9)
            .map(|i| {
                let d = dims[i % 2];
                feature(&format!("c{}", i % 2), i, (0..d).map(|_| rng.random_range(-1.0..1.0)).collect())
            })
            .collect();
        let scaled: Vec<_> = models
            .iter()
            .map(|m| ChannelModel {
                weights: m.weights.iter().map(|w| c * w).collect(),
                bias: c * m.bias,
                ..m.clone()
            })
            .collect();
        let a = classify_video("v", &models, &feats, &FusionParams::default()).unwrap();
        let b = classify_video("v", &scaled, &feats, &FusionParams::default()).unwrap();
        prop_assert_eq!((a.positives, a.negatives, a.label), (b.positives, b.negatives, b.label));
        for (x, y) in a.votes.iter().zip(&b.votes) {
            prop_assert_eq!(x.vote, y.vote);
        }
    }

    #[test]
    fn fusion_is_permutation_invariant(signs in proptest::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 0..20), seed in any::<u64>()) {
        let mut shuffled = signs.clone();
        shuffled.shuffle(&mut crate::seed::rng(seed));
        let (a, b) = (decide(&signs), decide(&shuffled));
        prop_assert_eq!((a.positives, a.negatives, a.label), (b.positives, b.negatives, b.label));
    }
}
