use std::collections::HashSet;

use cpctr::corpus::{build_vocabulary, group_reviews, read_reviews_jsonl, read_salaries_csv, review_token_lists, write_reviews_jsonl, write_salaries_csv, VocabOptions};
use cpctr::eval::Method;
use cpctr::inference::{fit, Corpus};
use cpctr::model_io::ModelFile;
use cpctr::predict::{predict_pair, predict_salary};
use cpctr::synth::{generate, to_records, SynthConfig};
use cpctr::Hyperparams;

#[test]
fn files_to_model_and_back() {
    let hyper = Hyperparams {
        k_topics: 3,
        max_iter: 8,
        min_iter: 8,
        ..Hyperparams::default()
    };
    let data = generate(&SynthConfig::default(), &hyper, 21).unwrap();
    let (reviews, salaries) = to_records(&data);
    let dir = tempfile::tempdir().unwrap();
    let (rp, sp) = (dir.path().join("r.jsonl"), dir.path().join("s.csv"));
    write_reviews_jsonl(&rp, &reviews).unwrap();
    write_salaries_csv(&sp, &salaries).unwrap();

    let reviews = read_reviews_jsonl(&rp).unwrap();
    let salaries = read_salaries_csv(&sp).unwrap();
    let vocab = build_vocabulary(&review_token_lists(&reviews), &VocabOptions::default(), &HashSet::new()).unwrap();
    let grouped = group_reviews(&reviews, &salaries, &vocab);
    assert_eq!(grouped.documents.len(), 10 * 15);
    let obs = grouped.observations().unwrap();
    let corpus = Corpus::new(grouped.documents.clone(), grouped.jobs.len(), vocab.len()).unwrap();
    let result = fit(&corpus, &obs, &hyper).unwrap();
    assert_eq!(result.trace.len(), 8);
    assert!(result.trace.windows(2).all(|w| w[1] >= w[0] - 1e-8 * w[0].abs()));

    let file = ModelFile::topic_model(
        Method::Cpctr,
        result.state,
        hyper.clone(),
        vocab,
        grouped.jobs.clone(),
        grouped.companies.clone(),
        obs.rating_bounds,
        obs.salary_bounds,
    );
    let path = dir.path().join("m.json");
    file.save(&path).unwrap();
    let loaded = ModelFile::load(&path).unwrap();
    assert_eq!(loaded, file);

    let state = loaded.state().unwrap();
    for doc in corpus.documents.iter().take(20) {
        let p = predict_pair(doc.key, doc, None, state, &hyper).unwrap();
        let i = state.pair_index(doc.key).unwrap();
        assert_eq!(p, predict_salary(&state.u[doc.key.job], &state.v[i]));
    }
}
