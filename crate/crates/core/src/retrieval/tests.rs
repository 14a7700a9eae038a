use super::*;
use crate::text::Document;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use proptest::prelude::*;

fn ts(words: &str) -> TokenStream {
    words.split_whitespace().collect()
}

fn doc(path: &str, name: &str, content: &str) -> Document {
    Document {
        path: path.to_string(),
        name: ts(name),
        content: ts(content),
    }
}

fn order(r: &Ranking) -> Vec<&str> {
    r.paths().collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

#[test]
fn formula_values() {
    assert!(close(bm25_idf(3, 1), libm::log(2.5 / 1.5 + 1.0)));
    assert!((bm25_idf(3, 1) - 0.980829).abs() < 1e-6);
    assert_eq!(length_boost(5, 5, 9), 0.5);
    assert!((length_boost(9, 5, 9) - 0.731059).abs() < 1e-6);
    assert_eq!(length_boost(7, 7, 7), 0.5);
    assert_eq!(smooth_idf(4, 4), 1.0);
}

#[test]
fn empty_corpus_rejected() {
    assert_eq!(CorpusIndex::build(vec![]), Err(RetrievalError::EmptyCorpus));
}

#[test]
fn config_validation() {
    assert!(ModelConfig::default().validate().is_ok());
    let bad = [
        ModelConfig {
            k1: 0.0,
            ..ModelConfig::default()
        },
        ModelConfig {
            b: 1.5,
            ..ModelConfig::default()
        },
        ModelConfig {
            delta: -1.0,
            ..ModelConfig::default()
        },
        ModelConfig {
            name_weight: 0.0,
            content_weight: 0.0,
            ..ModelConfig::default()
        },
        ModelConfig {
            lsi_dims: 0,
            ..ModelConfig::default()
        },
    ];
    for c in bad {
        assert!(matches!(
            c.validate(),
            Err(RetrievalError::InvalidConfig(_))
        ));
    }
    assert_eq!("BM25".parse::<ModelKind>(), Ok(ModelKind::Bm25));
}

#[test]
fn bm25_two_doc_by_hand() {
    let index = CorpusIndex::build(vec![doc("A", "a", "x y x"), doc("B", "b", "y")]).unwrap();
    let r = score_bm25(&ts("x y"), &index, &ModelConfig::default());
    let (ln2, ln12) = (libm::log(2.0), libm::log(1.2));
    // lengths 4 and 2, average 3
    let a = ln2 * (2.2 * 2.0 / 3.5 + 1.0) + ln12 * (2.2 / 2.5 + 1.0);
    let b = ln2 * 1.0 + ln12 * (2.2 / 1.9 + 1.0);
    assert!(close(r.score_of("A").unwrap(), a));
    assert!(close(r.score_of("B").unwrap(), b));
    assert_eq!(order(&r), ["A", "B"]);
}

#[test]
fn bm25_unmatched_docs_share_floor() {
    let index = CorpusIndex::build(vec![
        doc("a", "a", "p q"),
        doc("b", "b", "r s t"),
        doc("c", "c", "zeta"),
    ])
    .unwrap();
    let r = score_bm25(&ts("zeta nope"), &index, &ModelConfig::default());
    let floor = bm25_idf(3, 1) + bm25_idf(3, 0);
    assert!(close(r.score_of("a").unwrap(), floor));
    assert!(close(r.score_of("b").unwrap(), floor));
    assert_eq!(order(&r)[0], "c");
}

#[test]
fn ties_ordered_by_path_and_single_doc() {
    let index = CorpusIndex::build(vec![
        doc("z/dup", "dup", "alpha beta"),
        doc("a/dup", "dup", "alpha beta"),
        doc("m/other", "other", "gamma"),
    ])
    .unwrap();
    for kind in ModelKind::ALL {
        let r = rank(&index, &ts("alpha"), &ModelConfig::with_model(kind)).unwrap();
        assert_eq!(order(&r), ["a/dup", "z/dup", "m/other"], "{kind}");
    }
    let single = CorpusIndex::build(vec![doc("only", "only", "x")]).unwrap();
    for kind in ModelKind::ALL {
        let r = rank(&single, &ts("nothing here"), &ModelConfig::with_model(kind)).unwrap();
        assert_eq!(order(&r), ["only"]);
    }
}

#[test]
fn rvsm_equal_lengths_matches_cosine_order() {
    let index = CorpusIndex::build(vec![
        doc("a", "a", "x x y"),
        doc("b", "b", "x y y"),
        doc("c", "c", "z z z"),
    ])
    .unwrap();
    let q = ts("x y y");
    let cos = vsm_scores_with_tf(&q, &index, TfWeighting::Log);
    let r = score_rvsm(&q, &index);
    for (d, c) in index.docs().iter().zip(cos) {
        assert!(close(r.score_of(&d.path).unwrap(), 0.5 * c));
    }
}

/// Deterministic corpus generator shared by the property tests.
fn corpus(seed: u64, max_docs: usize, vocab: usize) -> (Vec<Document>, TokenStream) {
    let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    let mut next = move |m: usize| {
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        (x % m as u64) as usize
    };
    let n = 1 + next(max_docs);
    let words = |next: &mut dyn FnMut(usize) -> usize, len: usize| -> TokenStream {
        (0..len).map(|_| format!("t{}", next(vocab))).collect()
    };
    let docs = (0..n)
        .map(|i| {
            let name_len = 1 + next(2);
            let content_len = next(25);
            Document {
                path: format!("src/f{i:02}.java"),
                name: words(&mut next, name_len),
                content: words(&mut next, content_len),
            }
        })
        .collect();
    let q_len = 1 + next(8);
    let query = words(&mut next, q_len);
    (docs, query)
}

proptest! {
    #[test]
    fn scores_in_range(seed in any::<u64>()) {
        let (docs, q) = corpus(seed, 15, 30);
        let index = CorpusIndex::build(docs).unwrap();
        for e in score_vsm(&q, &index).entries() {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&e.score));
        }
        for e in score_rvsm(&q, &index).entries() {
            prop_assert!(e.score >= 0.0 && e.score < 0.7311);
        }
        let min_idf = q.iter().map(|t| bm25_idf(index.n_docs(), index.doc_freq(t))).fold(f64::INFINITY, f64::min);
        for e in score_bm25(&q, &index, &ModelConfig::default()).entries() {
            prop_assert!(e.score >= q.len() as f64 * min_idf - 1e-9);
        }
    }

    #[test]
    fn permutation_invariant(seed in any::<u64>(), rot in 0usize..15) {
        let (docs, q) = corpus(seed, 15, 30);
        let mut shuffled = docs.clone();
        let len = shuffled.len();
        shuffled.rotate_left(rot % len);
        shuffled.reverse();
        let a = CorpusIndex::build(docs).unwrap();
        let b = CorpusIndex::build(shuffled).unwrap();
        for kind in ModelKind::ALL {
            let cfg = ModelConfig::with_model(kind);
            prop_assert_eq!(rank(&a, &q, &cfg).unwrap(), rank(&b, &q, &cfg).unwrap());
        }
    }

    #[test]
    fn lsi_full_rank_matches_vsm(seed in any::<u64>()) {
        let (docs, q) = corpus(seed, 15, 30);
        let index = CorpusIndex::build(docs).unwrap();
        let vsm = score_vsm(&q, &index);
        let lsi = score_lsi(&q, &index, 1000).unwrap();
        for e in vsm.entries() {
            prop_assert!((lsi.score_of(&e.path).unwrap() - e.score).abs() < 1e-9);
        }
    }

    #[test]
    fn truncated_lsi_scores_bounded(seed in any::<u64>(), dims in 1usize..4) {
        let (docs, q) = corpus(seed, 15, 30);
        let index = CorpusIndex::build(docs).unwrap();
        for e in score_lsi(&q, &index, dims).unwrap().entries() {
            prop_assert!(e.score.is_finite() && e.score.abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn bm25_delta_is_a_constant_shift(seed in any::<u64>(), delta in 0.0f64..3.0) {
        let (docs, q) = corpus(seed, 15, 30);
        let index = CorpusIndex::build(docs).unwrap();
        let base = score_bm25(&q, &index, &ModelConfig { delta: 0.0, ..ModelConfig::default() });
        let shifted = score_bm25(&q, &index, &ModelConfig { delta, ..ModelConfig::default() });
        let offset: f64 = q.iter().map(|t| delta * bm25_idf(index.n_docs(), index.doc_freq(t))).sum();
        for e in base.entries() {
            let s = shifted.score_of(&e.path).unwrap();
            prop_assert!((s - e.score - offset).abs() < 1e-9);
        }
    }
}
