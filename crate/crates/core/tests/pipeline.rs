use rand::{seq::SliceRandom, Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soc_core::classify::{Algorithm, ClassifierSpec};
use soc_core::corpus::{generate_synthetic, Dataset, SynthConfig};
use soc_core::embed::EmbedConfig;
use soc_core::pipeline::*;
use soc_core::text::{tokenize, VectorizerConfig};
use soc_core::Error;

fn dataset() -> Dataset {
    generate_synthetic(&SynthConfig {
        class_count: 4,
        docs_per_class: 30,
        ..SynthConfig::default()
    })
}

fn config(representation: Representation, algorithm: Algorithm) -> PipelineConfig {
    PipelineConfig {
        representation,
        vectorizer: VectorizerConfig::default(),
        embedding: EmbedConfig {
            epochs: 5,
            ..EmbedConfig::default()
        },
        classifier: ClassifierSpec::default_for(algorithm),
    }
}

/// Random texts drawn from the corpus vocabulary plus unknown words.
fn probes(d: &Dataset, n: usize, seed: u64) -> Vec<String> {
    let mut words: Vec<String> = d.descriptions().flat_map(|t| tokenize(t, true)).collect();
    words.sort();
    words.dedup();
    words.push("unheardof".into());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(1..30);
            (0..len)
                .map(|_| words.choose(&mut rng).unwrap().as_str())
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect()
}

#[test]
fn save_load_round_trip_is_exact() {
    let d = dataset();
    let dir = tempfile::tempdir().unwrap();
    for (rep, algo) in [
        (Representation::Tfidf, Algorithm::Forest),
        (Representation::Doc2vec, Algorithm::SvcRbf),
    ] {
        let p = Pipeline::train(&d, config(rep, algo)).unwrap();
        let path = dir.path().join(format!("{rep}.socm"));
        save_pipeline(&p, &path).unwrap();
        let loaded = load_pipeline(&path).unwrap();
        let again = load_pipeline(&path).unwrap();
        assert_eq!(loaded.representation(), rep);
        assert_eq!(loaded.metadata(), p.metadata());
        assert_eq!(again.metadata(), loaded.metadata());
        assert_eq!(loaded, p);
        if rep == Representation::Doc2vec {
            assert_eq!(loaded.vectorizer().dim(), 100);
            assert_eq!(loaded.classifier().dim, 100);
        }
        let n = if rep == Representation::Tfidf {
            1000
        } else {
            200
        };
        for text in probes(&d, n, 5) {
            assert_eq!(
                p.predict_one(&text).unwrap(),
                loaded.predict_one(&text).unwrap()
            );
            assert_eq!(
                again.predict_one(&text).unwrap(),
                loaded.predict_one(&text).unwrap()
            );
        }
    }
}

#[test]
fn training_documents_get_their_class() {
    let d = dataset();
    let p = Pipeline::train(&d, config(Representation::Tfidf, Algorithm::Logreg)).unwrap();
    let index = p.labels();
    for r in d.records().iter().take(40) {
        let x = p.vectorizer().transform(&r.job_description);
        let expected = p.classifier().predict(x.as_ref()).unwrap();
        assert_eq!(
            p.predict_one(&r.job_description).unwrap(),
            index.label(expected).unwrap()
        );
        assert_eq!(p.predict_one(&r.job_description).unwrap(), r.soc_code);
    }
}

#[test]
fn oov_and_empty_descriptions() {
    let d = dataset();
    let p = Pipeline::train(&d, config(Representation::Tfidf, Algorithm::Knn)).unwrap();
    let zero = soc_core::text::SparseVector::zeros(p.vectorizer().dim());
    let at_zero = p.classifier().predict(&zero).unwrap();
    assert_eq!(p.predict_index("qqq www eee").unwrap(), at_zero);
    assert!(matches!(p.predict_one(""), Err(Error::EmptyDescription)));
    assert!(matches!(
        p.predict_one("  \n\t"),
        Err(Error::EmptyDescription)
    ));
}

#[test]
fn corrupted_files_are_rejected() {
    let d = dataset();
    let p = Pipeline::train(&d, config(Representation::Tfidf, Algorithm::Gnb)).unwrap();
    let bytes = p.to_bytes().unwrap();

    let truncated = &bytes[..bytes.len() - 10];
    match Pipeline::from_bytes(truncated) {
        Err(Error::ChecksumMismatch { payload }) => assert_eq!(payload, "classifier"),
        other => panic!("expected checksum error, got {other:?}"),
    }

    let mut flipped = bytes.clone();
    let last = flipped.len() - 1;
    flipped[last] ^= 0x20;
    assert!(matches!(
        Pipeline::from_bytes(&flipped),
        Err(Error::ChecksumMismatch { .. })
    ));

    let key = b"\"format_version\":1";
    let at = bytes.windows(key.len()).position(|w| w == key).unwrap();
    let mut bumped = bytes.clone();
    bumped[at + key.len() - 1] = b'7';
    match Pipeline::from_bytes(&bumped) {
        Err(Error::UnsupportedVersion {
            found: 7,
            supported: 1,
        }) => {}
        other => panic!("expected version error, got {other:?}"),
    }

    assert!(matches!(
        Pipeline::from_bytes(b"nonsense"),
        Err(Error::Schema(_))
    ));
}

#[test]
fn deterministic_training_gives_identical_versions() {
    let d = dataset();
    for algo in [Algorithm::Forest, Algorithm::Logreg] {
        let a = Pipeline::train(&d, config(Representation::Tfidf, algo)).unwrap();
        let b = Pipeline::train(&d, config(Representation::Tfidf, algo)).unwrap();
        assert_eq!(a.model_version(), b.model_version());
    }
    let a = Pipeline::train(&d, config(Representation::Tfidf, Algorithm::Knn)).unwrap();
    let b = Pipeline::train(&d, config(Representation::Tfidf, Algorithm::Gnb)).unwrap();
    assert_ne!(a.model_version(), b.model_version());
}
