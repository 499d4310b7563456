use std::collections::BTreeMap;

use chrono::{DateTime, TimeZone, Utc};
use lenma::analyze::{chi2_distance, cluster_groups, group_by_minute, MinuteGroup};
use lenma::{cosine_similarity, tokenize, HeaderMode, RawLine, TokenizerConfig, WordLengthVector};
use proptest::prelude::*;

fn arrival() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 6, 1, 0, 0, 0).unwrap()
}

fn minute(m: i64) -> DateTime<Utc> {
    arrival() + chrono::TimeDelta::minutes(m)
}

fn histogram() -> impl Strategy<Value = BTreeMap<u64, u64>> {
    prop::collection::btree_map(1u64..8, 1u64..50, 1..6)
}

fn group(m: i64, histogram: BTreeMap<u64, u64>) -> MinuteGroup {
    MinuteGroup {
        minute_key: minute(m),
        histogram,
    }
}

fn header_mode() -> impl Strategy<Value = HeaderMode> {
    prop_oneof![
        Just(HeaderMode::ClassicBsd),
        Just(HeaderMode::Rfc5424),
        Just(HeaderMode::None),
        (0usize..4).prop_map(HeaderMode::SkipN),
    ]
}

proptest! {
    #[test]
    fn tokenizer_is_deterministic_and_consistent(
        text in "[ -~\u{e9}\u{4e2d}]{0,80}",
        mode in header_mode(),
        drop in any::<bool>(),
    ) {
        let cfg = TokenizerConfig::default().with_header_mode(mode).with_drop_punct(drop);
        let line = RawLine::with_arrival(text, "prop", arrival());
        let a = tokenize(&line, &cfg);
        let b = tokenize(&line, &cfg);
        prop_assert_eq!(&a, &b);
        if let Ok(msg) = a {
            prop_assert!(!msg.words.is_empty());
            let rejoined = RawLine::with_arrival(msg.words.join(" "), "prop", arrival());
            let again = tokenize(&rejoined, &cfg.clone().with_header_mode(HeaderMode::None)).unwrap();
            prop_assert_eq!(&again.words, &msg.words);
            let lengths = msg.word_length_vector();
            prop_assert_eq!(lengths.len(), msg.words.len());
            for (w, &n) in msg.words.iter().zip(lengths.as_slice()) {
                prop_assert_eq!(w.chars().count() as u32, n);
                prop_assert!(!w.chars().any(|c| c.is_whitespace() || cfg.delimiter_chars.contains(&c)));
            }
        }
    }

    #[test]
    fn cosine_is_symmetric_and_bounded(
        pair in (1usize..20).prop_flat_map(|n| (
            prop::collection::vec(1u32..100, n),
            prop::collection::vec(1u32..100, n),
        )),
    ) {
        let a = WordLengthVector::new(pair.0).unwrap();
        let b = WordLengthVector::new(pair.1).unwrap();
        let ab = cosine_similarity(&a, &b).unwrap();
        let ba = cosine_similarity(&b, &a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert!(ab > 0.0 && ab <= 1.0);
        prop_assert_eq!(cosine_similarity(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn chi2_is_symmetric_and_bounded(a in histogram(), b in histogram()) {
        let (ga, gb) = (group(0, a), group(1, b));
        let d = chi2_distance(&ga, &gb);
        prop_assert!((0.0..=1.0).contains(&d));
        prop_assert!((d - chi2_distance(&gb, &ga)).abs() < 1e-12);
        prop_assert!(chi2_distance(&ga, &ga).abs() < 1e-12);
    }

    #[test]
    fn chi2_is_scale_invariant(a in histogram(), k in 2u64..10) {
        let scaled = a.iter().map(|(&id, &n)| (id, n * k)).collect();
        prop_assert!(chi2_distance(&group(0, a), &group(1, scaled)).abs() < 1e-12);
    }

    #[test]
    fn cluster_groups_partitions_input(
        hs in prop::collection::vec(histogram(), 0..40),
        threshold in 0.05f64..0.95,
    ) {
        let groups: Vec<MinuteGroup> = hs.into_iter().enumerate().map(|(i, h)| group(i as i64, h)).collect();
        let gcs = cluster_groups(&groups, threshold);
        let mut seen: Vec<DateTime<Utc>> = gcs.iter().flat_map(|gc| gc.members.iter().copied()).collect();
        seen.sort();
        let expected: Vec<DateTime<Utc>> = groups.iter().map(|g| g.minute_key).collect();
        prop_assert_eq!(seen, expected);
        prop_assert!(gcs.iter().all(|gc| !gc.members.is_empty()));
    }

    #[test]
    fn group_totals_match_timestamped_records(
        records in prop::collection::vec((1u64..10, prop::option::of(0i64..600)), 0..200),
    ) {
        let timestamped = records.iter().filter(|(_, ts)| ts.is_some()).count() as u64;
        let grouping = group_by_minute(
            records.iter().map(|&(id, ts)| (id, ts.map(|s| arrival() + chrono::TimeDelta::seconds(s)))),
        );
        prop_assert_eq!(grouping.groups.iter().map(MinuteGroup::total).sum::<u64>(), timestamped);
        prop_assert_eq!(grouping.missing_timestamps, records.len() as u64 - timestamped);
        prop_assert!(grouping.groups.windows(2).all(|w| w[0].minute_key < w[1].minute_key));
    }
}

#[test]
fn chi2_hand_values() {
    let h = |pairs: &[(u64, u64)]| pairs.iter().copied().collect::<BTreeMap<_, _>>();
    let d = chi2_distance(&group(0, h(&[(1, 1), (2, 1)])), &group(1, h(&[(1, 1)])));
    assert!((d - 1.0 / 3.0).abs() < 1e-12);
    let disjoint = chi2_distance(&group(0, h(&[(1, 4)])), &group(1, h(&[(2, 9)])));
    assert!((disjoint - 1.0).abs() < 1e-12);
    let scaled = chi2_distance(&group(0, h(&[(1, 2), (2, 2)])), &group(1, h(&[(1, 5), (2, 5)])));
    assert_eq!(scaled, 0.0);
}
