mod common;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use common::service::*;
use genimg_eval::service::ServiceConfig;
use genimg_eval::stats::TTestVariant;
use genimg_eval::vtt::{analyze_study, group_hypothesis_test, rates, read_study_csv, Label};
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn two_scripted_sessions_reproduce_planted_rates() {
    let started = Instant::now();
    let fx = fixture(10, 14);
    let server = Server::start(&fx.config).await;
    let client = Client::new();
    let mut cap = Capture::default();

    let (status, _) = export(&client, &server.base).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let a = take_session(&client, &server.base, &fx, &ALICE, None, &mut cap).await;
    let b = take_session(&client, &server.base, &fx, &BOB, Some(7), &mut cap).await;
    assert!(cap.leaks().is_empty(), "truth labels leaked: {:?}", cap.leaks());
    assert_eq!(cap.0.len(), 2 * (1 + 20 + 20 + 1));

    for sid in [&a, &b] {
        let (status, body) = complete(&client, &server.base, sid).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["rows_written"], 20);
    }

    let (status, csv) = export(&client, &server.base).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(csv.lines().count(), 41);
    assert_eq!(export(&client, &server.base).await.1, csv);

    let study = read_study_csv(STUDY, csv.as_bytes(), "export").unwrap();
    assert_eq!(study.participants(), ["alice", "bob"]);
    let r = rates(&study).unwrap();
    assert_eq!(r.per_participant[0].fpr, 60.0);
    assert_eq!(r.per_participant[0].tpr, 80.0);
    assert_eq!(r.per_participant[1].fpr, 30.0);
    assert_eq!(r.per_participant[1].tpr, 90.0);
    assert_eq!(r.fpr, 45.0);
    assert_eq!(r.fnr, 15.0);
    let g = group_hypothesis_test(&study, 0.10, TTestVariant::Pooled).unwrap();
    assert!((g.p_value - PLANTED_GROUP_P).abs() < 1e-9, "p = {}", g.p_value);
    let stats = analyze_study(&study).unwrap();
    assert_eq!(stats.group_test.unwrap().p_value, g.p_value);

    // export order is (participant, item index) and image ids never come from the client
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows[..20].iter().all(|l| l.starts_with("alice,")));
    let store_csv = std::fs::read_to_string(
        fx.config.data_dir.join("studies").join("ACDC_2fAPA.csv"),
    )
    .unwrap();
    assert_eq!(store_csv, csv);

    server.kill().await;
    assert!(started.elapsed().as_secs_f64() < 10.0);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn validation_and_conflicts() {
    let fx = fixture(10, 10);
    let server = Server::start(&fx.config).await;
    let base = &server.base;
    let client = Client::new();
    let mut cap = Capture::default();

    let resp = client
        .post(format!("{base}/studies/nope/sessions"))
        .json(&json!({ "participant": "x" }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);

    let created: Value = client
        .post(format!("{base}/studies/{STUDY_PATH}/sessions"))
        .json(&json!({ "participant": "carol" }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let sid = created["session_id"].as_str().unwrap();
    assert_eq!(created["item_count"], 20);

    let resp = client
        .post(format!("{base}/studies/{STUDY_PATH}/sessions"))
        .json(&json!({ "participant": "carol" }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::CONFLICT);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["session_id"], sid);

    for (body, want) in [
        (json!({ "guess": "real", "likert": 0 }), StatusCode::BAD_REQUEST),
        (json!({ "guess": "real", "likert": 4 }), StatusCode::BAD_REQUEST),
        (json!({ "guess": "maybe", "likert": 2 }), StatusCode::BAD_REQUEST),
        (json!({ "guess": "real" }), StatusCode::BAD_REQUEST),
    ] {
        let resp = client
            .post(format!("{base}/sessions/{sid}/items/0/response"))
            .json(&body)
            .send()
            .await
            .unwrap();
        let (status, _) = cap.record(resp).await;
        assert_eq!(status, want, "{body}");
    }
    let resp = client
        .post(format!("{base}/sessions/{sid}/items/20/response"))
        .json(&json!({ "guess": "real", "likert": 2 }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);
    let resp = client
        .post(format!("{base}/sessions/unknown/items/0/response"))
        .json(&json!({ "guess": "real", "likert": 2 }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::NOT_FOUND);

    for i in (0..20).filter(|i| *i != 13) {
        let resp = client
            .post(format!("{base}/sessions/{sid}/items/{i}/response"))
            .json(&json!({ "guess": "generated", "likert": 1 }))
            .send()
            .await
            .unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
    }
    // a second answer for an item replaces the first
    let ack: Value = client
        .post(format!("{base}/sessions/{sid}/items/0/response"))
        .json(&json!({ "guess": "real", "likert": 2 }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(ack["replaced"], true);
    assert_eq!(ack["answered"], 19);

    let (status, body) = complete(&client, base, sid).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(body["missing"], json!([13]));
    assert!(cap.leaks().is_empty(), "{:?}", cap.leaks());

    let resp = client
        .post(format!("{base}/sessions/{sid}/items/13/response"))
        .json(&json!({ "guess": "generated", "likert": 1 }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(complete(&client, base, sid).await.0, StatusCode::OK);
    assert_eq!(complete(&client, base, sid).await.0, StatusCode::CONFLICT);
    let resp = client
        .post(format!("{base}/sessions/{sid}/items/1/response"))
        .json(&json!({ "guess": "real", "likert": 2 }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::CONFLICT);

    let (_, csv) = export(&client, base).await;
    let study = read_study_csv(STUDY, csv.as_bytes(), "export").unwrap();
    // 10+10 drawn from exactly 10+10 files uses every image once
    let mut images: Vec<&str> = study.responses().iter().map(|r| r.image.as_str()).collect();
    images.sort();
    images.dedup();
    assert_eq!(images.len(), 20);
    let first = study.responses().iter().find(|r| r.guess == Label::Real).unwrap();
    assert_eq!(first.likert.get(), 2);
    server.kill().await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn acked_responses_survive_a_crash() {
    let fx = fixture(10, 12);
    let server = Server::start(&fx.config).await;
    let client = Client::new();
    let mut cap = Capture::default();
    let sid = take_session(&client, &server.base, &fx, &ALICE, Some(3), &mut cap).await;
    let before: Value = client
        .get(format!("{}/sessions/{sid}", server.base))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    server.kill().await;

    // a write cut short by the crash leaves a torn final line
    let journal = fx.config.data_dir.join("sessions").join(format!("{sid}.jsonl"));
    let mut text = std::fs::read_to_string(&journal).unwrap();
    text.push_str("{\"event\":\"response\",\"index\":");
    std::fs::write(&journal, text).unwrap();

    let server = Server::start(&fx.config).await;
    let after: Value = client
        .get(format!("{}/sessions/{sid}", server.base))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(after, before);
    assert_eq!(after["answers"].as_object().unwrap().len(), 20);
    assert_eq!(complete(&client, &server.base, &sid).await.0, StatusCode::OK);
    server.kill().await;

    // the completed state and the study CSV are rebuilt from the journal
    std::fs::remove_dir_all(fx.config.data_dir.join("studies")).unwrap();
    let server = Server::start(&fx.config).await;
    let (status, csv) = export(&client, &server.base).await;
    assert_eq!(status, StatusCode::OK);
    let study = read_study_csv(STUDY, csv.as_bytes(), "export").unwrap();
    assert_eq!(rates(&study).unwrap().fpr, 60.0);
    assert!(fx.config.data_dir.join("studies/ACDC_2fAPA.csv").exists());
    server.kill().await;
}

/// Image bytes in presentation order.
async fn presentation(client: &Client, base: &str, participant: &str, seed: u64) -> Vec<Vec<u8>> {
    let created: Value = client
        .post(format!("{base}/studies/{STUDY_PATH}/sessions"))
        .json(&json!({ "participant": participant, "seed": seed }))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let sid = created["session_id"].as_str().unwrap();
    let mut out = Vec::new();
    for i in 0..20 {
        let bytes = client
            .get(format!("{base}/sessions/{sid}/items/{i}/image"))
            .send()
            .await
            .unwrap()
            .bytes()
            .await
            .unwrap();
        out.push(bytes.to_vec());
    }
    out
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn seeded_sessions_are_reproducible() {
    let client = Client::new();
    let mut orders = Vec::new();
    for _ in 0..2 {
        let fx = fixture(10, 25);
        let server = Server::start(&fx.config).await;
        orders.push((
            presentation(&client, &server.base, "dave", 11).await,
            presentation(&client, &server.base, "erin", 11).await,
        ));
        server.kill().await;
    }
    assert_eq!(orders[0].0, orders[1].0);
    assert_eq!(orders[0].1, orders[1].1);
    assert_ne!(orders[0].0, orders[0].1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 8)]
async fn parallel_participants_stay_isolated() {
    let fx = Arc::new(fixture(10, 16));
    let server = Server::start(&fx.config).await;
    let base = Arc::new(server.base.clone());
    let names: Vec<String> = (0..8).map(|i| format!("p{i}")).collect();
    let mut tasks = Vec::new();
    for (i, name) in names.iter().enumerate() {
        let (fx, base, name) = (fx.clone(), base.clone(), name.clone());
        tasks.push(tokio::spawn(async move {
            let client = Client::new();
            let p = Participant {
                name: &name,
                gen_called_real: i,
                real_called_real: 10 - i,
            };
            let mut cap = Capture::default();
            let sid = take_session(&client, &base, &fx, &p, None, &mut cap).await;
            assert!(cap.leaks().is_empty());
            assert_eq!(complete(&client, &base, &sid).await.0, StatusCode::OK);
        }));
    }
    for t in tasks {
        t.await.unwrap();
    }
    let (_, csv) = export(&Client::new(), &server.base).await;
    let study = read_study_csv(STUDY, csv.as_bytes(), "export").unwrap();
    let r = rates(&study).unwrap();
    for (i, p) in r.per_participant.iter().enumerate() {
        assert_eq!(p.participant, names[i]);
        assert_eq!(p.fpr, 10.0 * i as f64);
        assert_eq!(p.tpr, 100.0 - 10.0 * i as f64);
    }
    server.kill().await;
}

#[tokio::test]
async fn too_few_images_is_rejected() {
    let fx = fixture(10, 9);
    let server = Server::start(&fx.config).await;
    let resp = Client::new()
        .post(format!("{}/studies/{STUDY_PATH}/sessions", server.base))
        .json(&json!({ "participant": "frank" }))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    server.kill().await;
}

#[tokio::test]
async fn static_ui_is_served_at_root() {
    let mut fx = fixture(1, 1);
    let ui: PathBuf = fx.config.data_dir.with_file_name("ui");
    std::fs::create_dir_all(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<!doctype html><title>vtt</title>").unwrap();
    fx.config.ui_dir = Some(ui);
    let server = Server::start(&fx.config).await;
    let body = Client::new()
        .get(format!("{}/", server.base))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert!(body.contains("<title>vtt</title>"));
    server.kill().await;
}

#[test]
fn config_paths_resolve_against_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("service.json");
    std::fs::write(
        &path,
        r#"{"data_dir": "data", "studies": [{"study_id": "a/b", "real_dir": "r", "generated_dir": "/abs/g"}]}"#,
    )
    .unwrap();
    let c = ServiceConfig::load(&path).unwrap();
    assert_eq!(c.data_dir, dir.path().join("data"));
    assert_eq!(c.studies[0].real_dir, dir.path().join("r"));
    assert_eq!(c.studies[0].generated_dir, Path::new("/abs/g"));
    assert_eq!(c.studies[0].images_per_class, 10);

    std::fs::write(&path, r#"{"data_dir": "d", "studies": [], "extra": 1}"#).unwrap();
    assert!(ServiceConfig::load(&path).is_err());
}
