use std::path::Path;

use perceptkit::analysis::Difficulty;
use perceptkit::dataset::{default_benchmark_specs, generate_dataset, read_manifest, ManifestRecord};
use perceptkit::study::*;
use perceptkit::{Error, Subtask};
use proptest::prelude::*;

fn dataset(dir: &Path) -> Vec<ManifestRecord> {
    let specs: Vec<_> = default_benchmark_specs(3, 1)
        .into_iter()
        .filter(|s| s.subtask == Subtask::SpatialGrid)
        .collect();
    generate_dataset(&specs, dir, 2).unwrap();
    read_manifest(dir).unwrap()
}

fn request() -> SessionRequest {
    SessionRequest { subtask: Subtask::SpatialGrid, participant: "p7".into(), shared_seed: None }
}

#[test]
fn sessions_survive_restart_and_replay() {
    let data = tempfile::tempdir().unwrap();
    let logs = tempfile::tempdir().unwrap();
    let records = dataset(data.path());
    let store = SessionStore::new(records.clone(), Some(logs.path().to_path_buf())).unwrap();
    let s = store.create(&request()).unwrap();
    let half = s.items.len() / 2;
    for _ in 0..half {
        let view = store.next(&s.id).unwrap().unwrap();
        let truth = store.record(&view.item_id).unwrap().ground_truth.clone();
        store.submit(&s.id, &view.item_id, &truth, Some(Difficulty::Easy)).unwrap();
    }
    let before = store.get(&s.id).unwrap();
    drop(store);

    let reopened = SessionStore::new(records.clone(), Some(logs.path().to_path_buf())).unwrap();
    assert_eq!(reopened.get(&s.id).unwrap(), before);
    loop {
        let Some(view) = reopened.next(&s.id).unwrap() else { break };
        reopened.submit(&s.id, &view.item_id, "0", Some(Difficulty::Hard)).unwrap();
    }
    let report = reopened.report(&s.id).unwrap();
    assert_eq!(report.state, SessionState::Complete);
    assert_eq!(report.answered_main, report.total_main);

    let index = perceptkit::eval::index_manifest(&records);
    let replayed = SessionStore::replay(&logs.path().join(format!("{}.jsonl", s.id)), &index).unwrap();
    assert_eq!(replayed.report(), report);
    assert_eq!(aggregate_accuracy(replayed.main_records()), report.accuracy);
}

#[test]
fn unknown_and_malformed_ids_are_not_found() {
    let data = tempfile::tempdir().unwrap();
    let logs = tempfile::tempdir().unwrap();
    let store = SessionStore::new(dataset(data.path()), Some(logs.path().to_path_buf())).unwrap();
    for id in ["nope", "../etc/passwd", ""] {
        assert!(matches!(store.next(id), Err(Error::NotFound(_))), "{id}");
    }
}

#[derive(Debug, Clone)]
enum Action {
    AnswerCurrent { difficulty: bool },
    AnswerOther(usize),
    Repeat,
}

fn action() -> impl Strategy<Value = Action> {
    prop_oneof![
        3 => any::<bool>().prop_map(|difficulty| Action::AnswerCurrent { difficulty }),
        1 => (0usize..200).prop_map(Action::AnswerOther),
        1 => Just(Action::Repeat),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rejected_actions_leave_state_unchanged(actions in prop::collection::vec(action(), 1..120)) {
        let data = tempfile::tempdir().unwrap();
        let records = dataset(data.path());
        let store = SessionStore::new(records, None).unwrap();
        let id = store.create(&request()).unwrap().id;
        let mut last: Option<String> = None;
        for a in actions {
            let before = store.get(&id).unwrap();
            let item = match &a {
                Action::AnswerCurrent { .. } => before.current().map(|i| i.item_id.clone()),
                Action::AnswerOther(k) => Some(before.items[k % before.items.len()].item_id.clone()),
                Action::Repeat => last.clone(),
            };
            let Some(item) = item else { continue };
            let difficulty = match a {
                Action::AnswerCurrent { difficulty: false } => None,
                _ => Some(Difficulty::Moderate),
            };
            match store.submit(&id, &item, "1", difficulty) {
                Ok(_) => {
                    let after = store.get(&id).unwrap();
                    prop_assert_eq!(after.cursor(), before.cursor() + 1);
                    last = Some(item);
                }
                Err(e) => {
                    prop_assert!(matches!(e, Error::Conflict(_) | Error::InvalidArgument(_)), "{:?}", e);
                    prop_assert_eq!(store.get(&id).unwrap(), before);
                }
            }
        }
    }
}
