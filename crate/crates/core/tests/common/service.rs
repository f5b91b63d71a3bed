//! Scripted HTTP client and in-process server for the service tests.

use std::collections::HashMap;
use std::sync::Arc;

use genimg_eval::service::{router, ServiceConfig, SessionStore, StudyConfig};
use genimg_eval::vtt::Label;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tempfile::TempDir;

pub const STUDY: &str = "ACDC/APA";
pub const STUDY_PATH: &str = "ACDC%2FAPA";
/// Pooled two-sample t-test of FPR fractions [0.6, 0.3] against TPR fractions
/// [0.8, 0.9], from scipy.stats.ttest_ind.
pub const PLANTED_GROUP_P: f64 = 0.12712843905603036;

pub struct Fixture {
    pub dir: TempDir,
    pub config: ServiceConfig,
    /// Image bytes to class, known only to the test.
    pub classes: HashMap<Vec<u8>, Label>,
}

/// File names carry the class, as they often do in practice; the bytes do not.
pub fn fixture(per_class: usize, files_per_class: usize) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let mut classes = HashMap::new();
    let mut dirs = Vec::new();
    for (class, tag) in [(Label::Real, 'R'), (Label::Generated, 'G')] {
        let d = dir.path().join(format!("{class}_images"));
        std::fs::create_dir_all(&d).unwrap();
        for i in 0..files_per_class {
            let mut bytes = b"\x89PNG\r\n\x1a\n".to_vec();
            bytes.extend(format!("{tag}{i:04}").bytes());
            std::fs::write(d.join(format!("{class}_{i:02}.png")), &bytes).unwrap();
            classes.insert(bytes, class);
        }
        dirs.push(d);
    }
    let config = ServiceConfig {
        data_dir: dir.path().join("data"),
        ui_dir: None,
        studies: vec![StudyConfig {
            study_id: STUDY.into(),
            real_dir: dirs[0].clone(),
            generated_dir: dirs[1].clone(),
            images_per_class: per_class,
        }],
    };
    Fixture {
        dir,
        config,
        classes,
    }
}

pub struct Server {
    pub base: String,
    task: tokio::task::JoinHandle<()>,
}

impl Server {
    pub async fn start(config: &ServiceConfig) -> Server {
        let store = SessionStore::open(config.clone()).unwrap();
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let app = router(Arc::new(store));
        let task = tokio::spawn(async move {
            axum::serve(listener, app).await.unwrap();
        });
        Server { base, task }
    }

    /// Stops abruptly, as a crash would; nothing is flushed on the way out.
    pub async fn kill(self) {
        self.task.abort();
        let _ = self.task.await;
    }
}

/// Every payload a participant could see before completing, headers included.
#[derive(Default)]
pub struct Capture(pub Vec<String>);

impl Capture {
    pub async fn record(&mut self, resp: reqwest::Response) -> (StatusCode, Vec<u8>) {
        let status = resp.status();
        let mut text = String::new();
        for (k, v) in resp.headers() {
            text.push_str(&format!("{k}: {}\n", String::from_utf8_lossy(v.as_bytes())));
        }
        let body = resp.bytes().await.unwrap().to_vec();
        text.push_str(&String::from_utf8_lossy(&body));
        self.0.push(text);
        (status, body)
    }

    /// Occurrences of a class label, ignoring the participant's own guesses echoed back.
    pub fn leaks(&self) -> Vec<&String> {
        self.0
            .iter()
            .filter(|p| {
                let lower = p
                    .to_lowercase()
                    .replace("\"guess\":\"real\"", "")
                    .replace("\"guess\":\"generated\"", "");
                lower.contains("real") || lower.contains("generated")
            })
            .collect()
    }
}

pub struct Participant<'a> {
    pub name: &'a str,
    /// Generated images to call real, then real images to call real.
    pub gen_called_real: usize,
    pub real_called_real: usize,
}

/// Planted answer patterns; with both, the group test p is [`PLANTED_GROUP_P`].
pub const ALICE: Participant = Participant {
    name: "alice",
    gen_called_real: 6,
    real_called_real: 8,
};
pub const BOB: Participant = Participant {
    name: "bob",
    gen_called_real: 3,
    real_called_real: 9,
};

/// Creates a session, looks at every image and answers with the planted
/// pattern. Returns the session id without completing.
pub async fn take_session(
    client: &Client,
    base: &str,
    fx: &Fixture,
    p: &Participant<'_>,
    seed: Option<u64>,
    cap: &mut Capture,
) -> String {
    let mut body = json!({ "participant": p.name });
    if let Some(s) = seed {
        body["seed"] = json!(s);
    }
    let resp = client
        .post(format!("{base}/studies/{STUDY_PATH}/sessions"))
        .json(&body)
        .send()
        .await
        .unwrap();
    let (status, bytes) = cap.record(resp).await;
    assert_eq!(status, StatusCode::CREATED, "{}", String::from_utf8_lossy(&bytes));
    let created: Value = serde_json::from_slice(&bytes).unwrap();
    let sid = created["session_id"].as_str().unwrap().to_string();
    let n = created["item_count"].as_u64().unwrap() as usize;

    let (mut gen_seen, mut real_seen) = (0, 0);
    for i in 0..n {
        let resp = client
            .get(format!("{base}/sessions/{sid}/items/{i}/image"))
            .send()
            .await
            .unwrap();
        assert_eq!(resp.headers()["content-type"], "image/png");
        assert!(resp.headers().get("content-disposition").is_none());
        let (status, bytes) = cap.record(resp).await;
        assert_eq!(status, StatusCode::OK);
        let truth = fx.classes[&bytes];
        let guess = match truth {
            Label::Generated => {
                gen_seen += 1;
                if gen_seen <= p.gen_called_real { "real" } else { "generated" }
            }
            Label::Real => {
                real_seen += 1;
                if real_seen <= p.real_called_real { "real" } else { "generated" }
            }
        };
        let likert = if guess == "real" { 3 } else { 1 };
        let resp = client
            .post(format!("{base}/sessions/{sid}/items/{i}/response"))
            .json(&json!({ "guess": guess, "likert": likert }))
            .send()
            .await
            .unwrap();
        let (status, bytes) = cap.record(resp).await;
        assert_eq!(status, StatusCode::OK, "{}", String::from_utf8_lossy(&bytes));
    }
    assert_eq!((gen_seen, real_seen), (n / 2, n / 2), "class balance");
    let resp = client.get(format!("{base}/sessions/{sid}")).send().await.unwrap();
    cap.record(resp).await;
    sid
}

pub async fn complete(client: &Client, base: &str, sid: &str) -> (StatusCode, Value) {
    let resp = client
        .post(format!("{base}/sessions/{sid}/complete"))
        .send()
        .await
        .unwrap();
    let status = resp.status();
    (status, resp.json().await.unwrap())
}

pub async fn export(client: &Client, base: &str) -> (StatusCode, String) {
    let resp = client
        .get(format!("{base}/studies/{STUDY_PATH}/export"))
        .send()
        .await
        .unwrap();
    (resp.status(), resp.text().await.unwrap())
}

