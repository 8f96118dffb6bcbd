//! Property tests for invariants that span modules, each checked against an
//! independent oracle written here.

use chrono::{Days, NaiveDate};
use proptest::collection::vec;
use proptest::prelude::*;

use crate::evaluation::{kruskal_wallis, mean_pct_deviation, midranks, rmse, ThresholdPolicy};
use crate::forecasters::holt::{holt_fit, HoltParams};
use crate::forecasters::{self, ApproachKind};
use crate::metrics::{count_blocks, count_loc, parse_model, ModelDocument, Section};
use crate::timeseries::{
    difference, make_lagged, normalize, denormalize, split_by_dates, to_daily, utc_day, DailySeries, UnevenSeries,
};

fn section() -> impl Strategy<Value = Section> {
    let name = prop_oneof![Just("Block".to_string()), Just("System".to_string()), "[A-Z][a-zA-Z0-9_]{0,6}"];
    let attr = prop_oneof!["[A-Z][a-z]{1,5} [a-z0-9.]{1,5}", "[A-Z][a-z]{1,5} \"[a-z{} ]{0,6}\""];
    let leaf = (name.clone(), vec(attr.clone(), 0..3))
        .prop_map(|(name, attributes)| Section { name, attributes, children: vec![] });
    leaf.prop_recursive(4, 40, 4, move |inner| {
        (name.clone(), vec(attr.clone(), 0..3), vec(inner, 0..4))
            .prop_map(|(name, attributes, children)| Section { name, attributes, children })
    })
}

/// Counts `Block {` opener lines in the canonical text.
fn block_lines(text: &str) -> u64 {
    text.lines().filter(|l| l.trim() == "Block {").count() as u64
}

/// Value of the last commit on or before each day.
fn daily_oracle(points: &[(i64, f64)]) -> Vec<f64> {
    let first = utc_day(points[0].0).unwrap();
    let last = utc_day(points[points.len() - 1].0).unwrap();
    let mut out = Vec::new();
    let mut d = first;
    while d <= last {
        let v = points.iter().filter(|(ts, _)| utc_day(*ts).unwrap() <= d).last().unwrap().1;
        out.push(v);
        d = d + Days::new(1);
    }
    out
}

fn schedule() -> impl Strategy<Value = Vec<(i64, f64)>> {
    vec((0i64..90 * 86_400, 0.0f64..1000.0), 1..40).prop_map(|mut raw| {
        raw.sort_by_key(|p| p.0);
        raw.dedup_by_key(|p| p.0);
        let base = 1_420_070_400; // 2015-01-01
        raw.into_iter().map(|(t, v)| (base + t, v.round())).collect()
    })
}

/// Mean rank of each element by direct counting.
fn brute_ranks(pooled: &[f64]) -> Vec<f64> {
    pooled
        .iter()
        .map(|x| {
            let less = pooled.iter().filter(|y| *y < x).count() as f64;
            let equal = pooled.iter().filter(|y| *y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn model_text_round_trips(sections in vec(section(), 0..4)) {
        let doc = ModelDocument { sections };
        let text = doc.to_text();
        let back = parse_model(&text).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(count_blocks(&back), block_lines(&text));
        prop_assert_eq!(count_loc(&text), text.split_terminator('\n').count() as u64);
    }

    #[test]
    fn daily_interpolation_matches_oracle(points in schedule()) {
        let daily = to_daily(&UnevenSeries::new(points.clone()).unwrap()).unwrap();
        let first = utc_day(points[0].0).unwrap();
        let last = utc_day(points[points.len() - 1].0).unwrap();
        prop_assert_eq!(daily.len() as i64, (last - first).num_days() + 1);
        prop_assert_eq!(daily.start_day, first);
        prop_assert!(daily.values.iter().all(|v| points.iter().any(|p| p.1 == *v)));
        prop_assert_eq!(daily.values, daily_oracle(&points));
    }

    #[test]
    fn split_concatenates_back(len in 3usize..60, a in 0usize..60, b in 0usize..60) {
        let start = NaiveDate::from_ymd_opt(2016, 1, 1).unwrap();
        let s = DailySeries::new(start, (0..len).map(|i| i as f64).collect()).unwrap();
        let (b1, b2) = (a % (len - 2), b % (len - 2));
        prop_assume!(b1 < b2);
        let split = split_by_dates(&s, s.day(b1), s.day(b2)).unwrap();
        prop_assert_eq!(split.train.len(), b1 + 1);
        prop_assert_eq!(split.validation.len(), b2 - b1);
        prop_assert_eq!(split.concat(), s);
    }

    #[test]
    fn difference_inverts(x in vec(-1e3f64..1e3, 3..50), d in 0usize..=2) {
        let diff = difference(&x, d).unwrap();
        prop_assert_eq!(diff.values.len(), x.len() - d);
        for (a, b) in diff.invert().iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()) * 1e3);
        }
    }

    #[test]
    fn normalization_inverts(x in vec(-1e4f64..1e4, 1..50)) {
        let (scaled, params) = normalize(&x);
        prop_assert!(scaled.iter().all(|v| (0.0..=1.0).contains(v)));
        for (a, b) in denormalize(&scaled, &params).iter().zip(&x) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0) * 10.0);
        }
    }

    #[test]
    fn lagged_rows_reassemble(x in vec(-1e3f64..1e3, 2..40), lag in 1usize..10) {
        prop_assume!(lag < x.len());
        let data = make_lagged(&x, lag).unwrap();
        let targets: Vec<f64> = data.rows.iter().map(|r| r.1).collect();
        prop_assert_eq!(&targets[..], &x[lag..]);
        for (i, (w, _)) in data.rows.iter().enumerate() {
            prop_assert_eq!(&w[..], &x[i..i + lag]);
        }
    }

    #[test]
    fn rmse_symmetric_and_translation_invariant(
        pairs in vec((-1e3f64..1e3, -1e3f64..1e3), 1..50),
        shift in -1e3f64..1e3,
    ) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let r = rmse(&p, &t).unwrap();
        prop_assert_eq!(r, rmse(&t, &p).unwrap());
        let ps: Vec<f64> = p.iter().map(|v| v + shift).collect();
        let ts: Vec<f64> = t.iter().map(|v| v + shift).collect();
        prop_assert!((rmse(&ps, &ts).unwrap() - r).abs() <= 1e-9 * (1.0 + r));
    }

    #[test]
    fn pct_deviation_matches_loop(pairs in vec((0.0f64..1e3, 1.0f64..1e3), 1..50)) {
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut sum = 0.0;
        for i in 0..p.len() {
            sum += ((p[i] - t[i]) / t[i]).abs() * 100.0;
        }
        prop_assert!((mean_pct_deviation(&p, &t).unwrap() - sum / p.len() as f64).abs() < 1e-12 * (1.0 + sum));
    }

    #[test]
    fn flags_are_monotone_in_deviation(pairs in vec((1.0f64..1e3, 1.0f64..1e3), 1..20), k in 1.0f64..5.0) {
        let policy = ThresholdPolicy::default();
        let (p, t): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let scaled: Vec<f64> = p.iter().zip(&t).map(|(a, b)| b + k * (a - b)).collect();
        let before = policy.is_above(mean_pct_deviation(&p, &t).unwrap());
        let after = policy.is_above(mean_pct_deviation(&scaled, &t).unwrap());
        prop_assert!(!before || after);
    }

    #[test]
    fn rank_sums_total_and_match_brute_force(raw in vec(vec(0u8..6, 1..5), 2..4)) {
        let groups: Vec<(String, Vec<f64>)> =
            raw.iter().enumerate().map(|(i, g)| (format!("g{i}"), g.iter().map(|&v| v as f64).collect())).collect();
        let n: usize = groups.iter().map(|g| g.1.len()).sum();
        prop_assume!(n >= 3);
        let kw = kruskal_wallis(&groups).unwrap();
        let total: f64 = kw.groups.iter().map(|g| g.rank_sum).sum();
        prop_assert!((total - (n * (n + 1)) as f64 / 2.0).abs() < 1e-9);
        let pooled: Vec<f64> = groups.iter().flat_map(|g| g.1.clone()).collect();
        prop_assert_eq!(midranks(&pooled), brute_ranks(&pooled));
        prop_assert!(kw.tie_correction > 0.0 && kw.tie_correction <= 1.0);
        prop_assert!((0.0..=1.0).contains(&kw.p_value));
        prop_assert!(kw.h >= 0.0);
    }

    #[test]
    fn kruskal_wallis_ignores_monotone_transforms(raw in vec(vec(-50.0f64..50.0, 1..6), 2..4)) {
        let groups: Vec<(String, Vec<f64>)> = raw.iter().enumerate().map(|(i, g)| (format!("g{i}"), g.clone())).collect();
        prop_assume!(groups.iter().map(|g| g.1.len()).sum::<usize>() >= 3);
        let moved: Vec<(String, Vec<f64>)> =
            groups.iter().map(|(l, g)| (l.clone(), g.iter().map(|v| (v / 10.0).exp() * 3.0 + 1.0).collect())).collect();
        let a = kruskal_wallis(&groups).unwrap();
        let b = kruskal_wallis(&moved).unwrap();
        for (x, y) in a.groups.iter().zip(&b.groups) {
            prop_assert_eq!(x.mean_rank, y.mean_rank);
        }
        prop_assert_eq!(a.h, b.h);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn holt_is_translation_covariant(y in vec(0.0f64..100.0, 5..40), c in -1e3f64..1e3) {
        let a = holt_fit(&y).unwrap();
        let shifted: Vec<f64> = y.iter().map(|v| v + c).collect();
        let b = holt_fit(&shifted).unwrap();
        let scale = 1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (u, v) in a.forecast(10).iter().zip(b.forecast(10)) {
            prop_assert!((u + c - v).abs() < 1e-6 * scale * 100.0, "{} vs {}", u + c, v);
        }
    }

    #[test]
    fn forecasts_are_deterministic_prefixes(y in vec(10.0f64..20.0, 12..30)) {
        for fit in [forecasters::holt_fit(&y).unwrap(), forecasters::auto_arima(&y).unwrap()] {
            let short = fit.forecast(4).unwrap();
            let long = fit.forecast(30).unwrap();
            prop_assert_eq!(&short[..], &long[..4]);
            prop_assert!(long.iter().all(|v| v.is_finite()));
        }
        let again = forecasters::auto_arima(&y).unwrap();
        prop_assert_eq!(again.kind(), ApproachKind::Arima);
        prop_assert_eq!(again.forecast(7).unwrap(), forecasters::auto_arima(&y).unwrap().forecast(7).unwrap());
    }
}

/// Independent Holt recursion at given smoothing parameters.
fn hand_holt(y: &[f64], alpha: f64, beta: f64) -> (f64, f64, f64) {
    let mut level = y[0];
    let mut trend = y[1] - y[0];
    let mut sse = 0.0;
    for &obs in &y[1..] {
        let predicted = level + trend;
        sse += (obs - predicted) * (obs - predicted);
        let new_level = alpha * obs + (1.0 - alpha) * predicted;
        trend = beta * (new_level - level) + (1.0 - beta) * trend;
        level = new_level;
    }
    (sse, level, trend)
}

#[test]
fn holt_matches_a_duplicate_recursion_on_a_drifting_walk() {
    use rand::Rng;
    let mut rng = crate::rng::rng_from_seed(2024);
    let mut y = vec![100.0];
    for _ in 0..59 {
        let step: f64 = rng.gen_range(-1.0..1.0);
        y.push(y.last().unwrap() + 0.8 + step);
    }
    let fit = holt_fit(&y).unwrap();
    let HoltParams { alpha, beta } = fit.params;
    assert!(alpha > 0.0 && alpha < 1.0 && beta > 0.0 && beta < 1.0);
    let (sse, level, trend) = hand_holt(&y, alpha, beta);
    assert!((fit.sse - sse).abs() < 1e-9 * sse.max(1.0));
    for (h, f) in fit.forecast(8).iter().enumerate() {
        assert!((f - (level + (h + 1) as f64 * trend)).abs() < 1e-9 * level.abs());
    }
    // the search result is no worse than any coarse grid point
    for i in 1..20 {
        for j in 1..20 {
            let (s, _, _) = hand_holt(&y, i as f64 * 0.05, j as f64 * 0.05);
            assert!(fit.sse <= s + 1e-9 * s);
        }
    }
}
