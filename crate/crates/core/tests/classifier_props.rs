use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use optiscore::calibration::clt_radius;
use optiscore::classifier::{estimate_moments, threshold_objective};
use optiscore::{
    baseline_predict, ccr, log_ratio, predict, train, tune_threshold, AmbiguitySpec, BaselineKind, ClassifierModel,
    CovarianceEstimator, Dataset, MomentPair, RadiusPolicy, ScoreMode, TrainConfig,
};

fn spd(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-1.0f64..1.0, d * d).prop_map(move |v| {
        let a = DMatrix::from_row_slice(d, d, &v);
        let s = &a * a.transpose() + DMatrix::identity(d, d) * 0.3;
        (&s + s.transpose()) * 0.5
    })
}

fn vector(d: usize, w: f64) -> impl Strategy<Value = DVector<f64>> {
    proptest::collection::vec(-w..w, d).prop_map(DVector::from_vec)
}

fn mode() -> impl Strategy<Value = ScoreMode> {
    prop_oneof![Just(ScoreMode::Nonparametric), Just(ScoreMode::Gaussian)]
}

#[derive(Debug, Clone)]
struct Instance {
    model: ClassifierModel,
    points: Vec<DVector<f64>>,
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..=3)
        .prop_flat_map(|d| {
            (
                mode(),
                vector(d, 1.5),
                spd(d),
                0.0f64..2.0,
                vector(d, 1.5),
                spd(d),
                0.0f64..2.0,
                -1.0f64..1.0,
                proptest::collection::vec(vector(d, 4.0), 20),
            )
        })
        .prop_map(|(mode, m0, s0, r0, m1, s1, r1, t, points)| {
            let spec0 = AmbiguitySpec::new(MomentPair::new(m0, s0).unwrap(), r0).unwrap();
            let spec1 = AmbiguitySpec::new(MomentPair::new(m1, s1).unwrap(), r1).unwrap();
            Instance { model: ClassifierModel::from_parts(mode, spec0, spec1, t).unwrap(), points }
        })
}

fn invertible(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    proptest::collection::vec(-2.0f64..2.0, d * d)
        .prop_map(move |v| DMatrix::from_row_slice(d, d, &v))
        .prop_filter("well conditioned", |a| a.clone().svd(false, false).singular_values.min() > 0.3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn swapping_classes_negates_the_ratio(inst in instance()) {
        let swapped = inst.model.swapped();
        for x in &inst.points {
            let a = log_ratio(&inst.model, x).unwrap();
            let b = log_ratio(&swapped, x).unwrap();
            prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
            if (a - inst.model.log_threshold).abs() > 1e-9 {
                prop_assert_eq!(predict(&inst.model, x).unwrap(), 1 - predict(&swapped, x).unwrap());
            }
        }
    }

    #[test]
    fn labels_nonincreasing_in_threshold(inst in instance(), t1 in -3.0f64..3.0, t2 in -3.0f64..3.0) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let count = |t: f64| {
            let m = ClassifierModel { log_threshold: t, ..inst.model.clone() };
            inst.points.iter().map(|x| predict(&m, x).unwrap() as usize).sum::<usize>()
        };
        prop_assert!(count(hi) <= count(lo));
    }

    #[test]
    fn zero_radius_recovers_baselines(
        (m0, s0, m1, s1, points) in (1usize..=3).prop_flat_map(|d| {
            (vector(d, 1.5), spd(d), vector(d, 1.5), spd(d), proptest::collection::vec(vector(d, 4.0), 50))
        })
    ) {
        let p0 = MomentPair::new(m0, s0.clone()).unwrap();
        let p1 = MomentPair::new(m1.clone(), s1).unwrap();
        let equal1 = MomentPair::new(m1, s0).unwrap();
        let build = |mode, a: &MomentPair, b: &MomentPair| ClassifierModel::from_parts(
            mode,
            AmbiguitySpec::new(a.clone(), 0.0).unwrap(),
            AmbiguitySpec::new(b.clone(), 0.0).unwrap(),
            0.0,
        ).unwrap();
        let np = build(ScoreMode::Nonparametric, &p0, &p1);
        let ga = build(ScoreMode::Gaussian, &p0, &p1);
        let eq = build(ScoreMode::Nonparametric, &p0, &equal1);
        for x in &points {
            prop_assert_eq!(predict(&np, x).unwrap(), baseline_predict(BaselineKind::Mdc, [&p0, &p1], x).unwrap());
            prop_assert_eq!(predict(&ga, x).unwrap(), baseline_predict(BaselineKind::Qda, [&p0, &p1], x).unwrap());
            prop_assert_eq!(predict(&eq, x).unwrap(), baseline_predict(BaselineKind::Lda, [&p0, &equal1], x).unwrap());
        }
    }

    #[test]
    fn common_affine_map_leaves_ratios_unchanged(
        (inst, a, b) in instance().prop_flat_map(|inst| {
            let d = inst.model.dimension();
            (Just(inst), invertible(d), vector(d, 3.0))
        })
    ) {
        let map = |spec: &AmbiguitySpec| {
            AmbiguitySpec::new(spec.nominal().affine_image(&a, &b).unwrap(), spec.radius()).unwrap()
        };
        let mapped = ClassifierModel {
            spec0: map(&inst.model.spec0),
            spec1: map(&inst.model.spec1),
            ..inst.model.clone()
        };
        for x in &inst.points {
            let before = log_ratio(&inst.model, x).unwrap();
            let after = log_ratio(&mapped, &(&a * x + &b)).unwrap();
            prop_assert!((before - after).abs() <= 1e-7 * (1.0 + before.abs()), "{} vs {}", before, after);
        }
    }

    #[test]
    fn tuned_threshold_matches_dense_scan(
        r0 in proptest::collection::vec(-100i32..=100, 0..40),
        r1 in proptest::collection::vec(-100i32..=100, 1..40),
    ) {
        let r0: Vec<f64> = r0.into_iter().map(|v| v as f64 / 50.0).collect();
        let r1: Vec<f64> = r1.into_iter().map(|v| v as f64 / 50.0).collect();
        let t = tune_threshold(&r0, &r1).unwrap();
        let best = (0..10_000)
            .map(|i| threshold_objective(&r0, &r1, -2.01 + 4.02 * i as f64 / 9_999.0))
            .max()
            .unwrap();
        prop_assert_eq!(threshold_objective(&r0, &r1, t), best);
        // smallest maximizer among the candidates
        for &c in r0.iter().chain(&r1) {
            if c < t {
                prop_assert!(threshold_objective(&r0, &r1, c) < best);
            }
        }
    }
}

fn two_clusters(n: usize, gap: f64) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let t = i as f64 / n as f64;
        let wobble = (13.0 * t).sin();
        rows.push(vec![t, wobble]);
        labels.push(0);
        rows.push(vec![gap + t, gap + (11.0 * t).cos()]);
        labels.push(1);
    }
    Dataset::from_rows(&rows, labels).unwrap()
}

#[test]
fn separable_clusters_train_perfectly_under_clt() {
    let data = two_clusters(60, 8.0);
    for mode in [ScoreMode::Nonparametric, ScoreMode::Gaussian] {
        let model = train(&data, &TrainConfig::new(mode, RadiusPolicy::Clt { alpha: 0.5 })).unwrap();
        assert_eq!(ccr(&model, &data).unwrap(), 1.0);
    }
}

#[test]
fn fixed_zero_radius_without_tuning_is_mdc() {
    let data = two_clusters(40, 1.0);
    let config = TrainConfig {
        estimator: CovarianceEstimator::Sample,
        tune_threshold: false,
        ..TrainConfig::new(ScoreMode::Nonparametric, RadiusPolicy::Fixed { rho0: 0.0, rho1: 0.0 })
    };
    let model = train(&data, &config).unwrap();
    assert_eq!(model.log_threshold, 0.0);
    let m0 = estimate_moments(&data.class_features(0), CovarianceEstimator::Sample, false).unwrap();
    let m1 = estimate_moments(&data.class_features(1), CovarianceEstimator::Sample, false).unwrap();
    for i in 0..200 {
        let x = DVector::from_vec(vec![-1.0 + 0.017 * i as f64, 2.0 - 0.013 * i as f64]);
        assert_eq!(predict(&model, &x).unwrap(), baseline_predict(BaselineKind::Mdc, [&m0, &m1], &x).unwrap());
    }
}

#[test]
fn clt_radii_for_thousand_samples() {
    let data = two_clusters(1000, 5.0);
    let model = train(&data, &TrainConfig::new(ScoreMode::Gaussian, RadiusPolicy::Clt { alpha: 0.5 })).unwrap();
    assert!((model.spec0.radius() - 0.0043515).abs() < 5e-7);
    assert_eq!(model.spec0.radius(), model.spec1.radius());
    assert_eq!(model.spec0.radius(), clt_radius(1000, 2, 0.5).unwrap());
}

#[test]
fn identical_specs_always_predict_one() {
    let spec = AmbiguitySpec::new(MomentPair::from_slices(&[0.0, 1.0], &[2.0, 0.3, 0.3, 1.0]).unwrap(), 0.2).unwrap();
    for mode in [ScoreMode::Nonparametric, ScoreMode::Gaussian] {
        let model = ClassifierModel::from_parts(mode, spec.clone(), spec.clone(), 0.0).unwrap();
        for i in 0..50 {
            let x = DVector::from_vec(vec![(i as f64).sin() * 4.0, (i as f64).cos() * 3.0]);
            assert_eq!(predict(&model, &x).unwrap(), 1);
        }
    }
}

#[test]
fn too_few_samples_is_degenerate() {
    let rows = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 5.0], vec![6.0, 5.0], vec![5.0, 6.0]];
    let data = Dataset::from_rows(&rows, vec![0, 0, 1, 1, 1]).unwrap();
    let err = train(&data, &TrainConfig::new(ScoreMode::Gaussian, RadiusPolicy::Clt { alpha: 0.5 })).unwrap_err();
    assert!(matches!(err, optiscore::Error::DegenerateSample(_)));
}
