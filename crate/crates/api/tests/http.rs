use std::net::SocketAddr;
use std::time::{Duration, Instant};

use aroi_api::{spawn, ApiConfig, ErrorBody, JobHandle, SessionView, UploadResponse, ERROR_CODES};
use aroi_core::active::{ALConfig, QueryBatch};
use aroi_core::dataset::generate_synthetic;
use aroi_core::models::{ClassifierSpec, Family};
use aroi_core::roi::{roi_curve, CostParams, RoiGrid, SensitivityReport};
use aroi_core::store::{RunRecord, RunStatus};
use aroi_core::sweep::{run_sweep, NoProgress, SweepConfig};
use reqwest::multipart::{Form, Part};
use reqwest::{Client, StatusCode};
use serde_json::json;
use tempfile::TempDir;

struct Server {
    base: String,
    client: Client,
    _dir: TempDir,
}

async fn start(token: Option<&str>, max_upload: Option<usize>) -> Server {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ApiConfig::new(dir.path());
    cfg.token = token.map(str::to_string);
    if let Some(m) = max_upload {
        cfg.max_upload_bytes = m;
    }
    let addr: SocketAddr = spawn("127.0.0.1:0".parse().unwrap(), cfg).await.unwrap();
    Server {
        base: format!("http://{addr}"),
        client: Client::new(),
        _dir: dir,
    }
}

fn form(csv: Vec<u8>) -> Form {
    Form::new()
        .part("file", Part::bytes(csv).file_name("data.csv"))
        .text("id", "id")
        .text("name", "synthetic")
}

async fn upload(s: &Server, csv: Vec<u8>) -> reqwest::Response {
    s.client
        .post(format!("{}/datasets", s.base))
        .multipart(form(csv))
        .send()
        .await
        .unwrap()
}

async fn expect_error(resp: reqwest::Response, status: StatusCode, code: &str) {
    assert_eq!(resp.status(), status);
    let body: ErrorBody = resp.json().await.unwrap();
    assert_eq!(body.code, code, "{}", body.message);
    assert!(ERROR_CODES.contains(&body.code.as_str()));
}

async fn poll_done(s: &Server, run_id: &str) -> RunRecord {
    let deadline = Instant::now() + Duration::from_secs(120);
    loop {
        let rec: RunRecord = s
            .client
            .get(format!("{}/runs/{run_id}", s.base))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        if rec.status.is_terminal() {
            return rec;
        }
        assert!(Instant::now() < deadline, "run did not finish");
        tokio::time::sleep(Duration::from_millis(20)).await;
    }
}

fn small_config() -> SweepConfig {
    SweepConfig {
        fractions: vec![0.5, 1.0],
        families: vec![
            ClassifierSpec::default_for(Family::LogisticRegression, 0),
            ClassifierSpec::default_for(Family::NaiveBayes, 0),
        ],
        ..Default::default()
    }
}

#[tokio::test]
async fn upload_contract() {
    let s = start(None, Some(64 * 1024)).await;
    let small = b"id,text_a,text_b,label\n1,parse the file,read the file,DEPENDENT\n2,show a chart,parse the file,INDEPENDENT\n3,export report,render the chart,DEPENDENT\n4,login page,export report,INDEPENDENT\n".to_vec();
    let resp = upload(&s, small.clone()).await;
    assert_eq!(resp.status(), StatusCode::OK);
    let first: UploadResponse = resp.json().await.unwrap();
    assert_eq!(first.summary.n, 4);
    let again: UploadResponse = upload(&s, small).await.json().await.unwrap();
    assert_eq!(again.dataset_hash, first.dataset_hash);

    let no_label = b"id,text_a,text_b,target\n1,a,b,DEPENDENT\n".to_vec();
    let resp = upload(&s, no_label).await;
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);
    let body: ErrorBody = resp.json().await.unwrap();
    assert_eq!(body.code, "MISSING_COLUMN");
    assert_eq!(body.field.as_deref(), Some("label"));

    let huge = generate_synthetic(2000, 0.5, 0.9, 0)
        .unwrap()
        .dataset
        .to_canonical_csv();
    expect_error(upload(&s, huge).await, StatusCode::PAYLOAD_TOO_LARGE, "TOO_LARGE").await;

    let resp = s
        .client
        .get(format!("{}/datasets/{}", s.base, first.dataset_hash))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let resp = s.client.get(format!("{}/datasets/ffff", s.base)).send().await.unwrap();
    expect_error(resp, StatusCode::NOT_FOUND, "NOT_FOUND").await;
}

#[tokio::test]
async fn run_validation_and_not_found() {
    let s = start(None, None).await;
    let ds = generate_synthetic(120, 0.5, 0.9, 1).unwrap().dataset;
    let up: UploadResponse = upload(&s, ds.to_canonical_csv()).await.json().await.unwrap();

    let mut bad = SweepConfig::default();
    bad.fractions = vec![0.9, 0.2];
    let resp = s
        .client
        .post(format!("{}/runs", s.base))
        .json(&json!({"dataset_hash": up.dataset_hash, "config": bad}))
        .send()
        .await
        .unwrap();
    expect_error(resp, StatusCode::UNPROCESSABLE_ENTITY, "INVALID_CONFIG").await;

    let resp = s
        .client
        .post(format!("{}/runs", s.base))
        .json(&json!({"dataset_hash": "0000"}))
        .send()
        .await
        .unwrap();
    expect_error(resp, StatusCode::NOT_FOUND, "NOT_FOUND").await;

    let resp = s
        .client
        .post(format!("{}/runs", s.base))
        .body("{not json")
        .send()
        .await
        .unwrap();
    expect_error(resp, StatusCode::UNPROCESSABLE_ENTITY, "INVALID_JSON").await;

    let resp = s.client.get(format!("{}/runs/nope", s.base)).send().await.unwrap();
    expect_error(resp, StatusCode::NOT_FOUND, "NOT_FOUND").await;
    let resp = s.client.get(format!("{}/no/such/route", s.base)).send().await.unwrap();
    expect_error(resp, StatusCode::NOT_FOUND, "NOT_FOUND").await;
}

#[tokio::test]
async fn default_run_reaches_done_with_live_progress() {
    let s = start(None, None).await;
    let ds = generate_synthetic(300, 0.5, 0.9, 2).unwrap().dataset;
    let up: UploadResponse = upload(&s, ds.to_canonical_csv()).await.json().await.unwrap();

    let started = Instant::now();
    let resp = s
        .client
        .post(format!("{}/runs", s.base))
        .json(&json!({"dataset_hash": up.dataset_hash}))
        .send()
        .await
        .unwrap();
    assert!(started.elapsed() < Duration::from_millis(100), "run creation blocked");
    assert_eq!(resp.status(), StatusCode::ACCEPTED);
    let handle: JobHandle = resp.json().await.unwrap();
    assert_eq!(handle.progress.total, 40);

    // Progress is monotone and, for some poll, strictly inside (0, total).
    let mut seen_mid = false;
    let mut last = 0;
    loop {
        let h: RunRecord = s
            .client
            .get(format!("{}/runs/{}", s.base, handle.run_id))
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        assert!(h.progress.done >= last);
        last = h.progress.done;
        seen_mid |= h.progress.done > 0 && h.progress.done < h.progress.total;
        if h.status.is_terminal() {
            assert_eq!(h.status, RunStatus::Done);
            assert_eq!(h.result.unwrap().cells.len(), 40);
            break;
        }
        tokio::time::sleep(Duration::from_millis(5)).await;
    }
    assert!(seen_mid, "never observed a run mid-way");

    let listed: Vec<JobHandle> = s
        .client
        .get(format!("{}/runs", s.base))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(listed[0].run_id, handle.run_id);
    let csv = s
        .client
        .get(format!("{}/runs/{}/csv", s.base, handle.run_id))
        .send()
        .await
        .unwrap()
        .text()
        .await
        .unwrap();
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 41);
}

#[tokio::test]
async fn roi_and_sensitivity_contract() {
    let s = start(None, None).await;
    let ds = generate_synthetic(150, 0.5, 0.9, 3).unwrap().dataset;
    let up: UploadResponse = upload(&s, ds.to_canonical_csv()).await.json().await.unwrap();
    let handle: JobHandle = s
        .client
        .post(format!("{}/runs", s.base))
        .json(&json!({"dataset_hash": up.dataset_hash, "config": small_config()}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let rec = poll_done(&s, &handle.run_id).await;
    assert_eq!(rec.status, RunStatus::Done);

    let url = format!("{}/runs/{}/roi", s.base, handle.run_id);
    let a = s
        .client
        .post(&url)
        .json(&CostParams::reference())
        .send()
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    let b = s
        .client
        .post(&url)
        .json(&CostParams::reference())
        .send()
        .await
        .unwrap()
        .bytes()
        .await
        .unwrap();
    assert_eq!(a, b);
    let grid: RoiGrid = serde_json::from_slice(&a).unwrap();
    let expected = roi_curve(
        &run_sweep(&ds, &small_config(), &NoProgress).unwrap(),
        &CostParams::reference(),
    )
    .unwrap();
    assert_eq!(grid, expected);

    let zero = json!({"b_reward": 0.0, "b_penalty": 0.0});
    let grid: RoiGrid = s
        .client
        .post(&url)
        .json(&zero)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert!(grid.curves.iter().flat_map(|c| &c.points).all(|p| p.roi == -1.0));

    let resp = s
        .client
        .post(&url)
        .json(&json!({"c_resource": 0.0}))
        .send()
        .await
        .unwrap();
    expect_error(resp, StatusCode::UNPROCESSABLE_ENTITY, "ZERO_COST").await;
    let resp = s.client.post(&url).json(&json!({"bogus": 1.0})).send().await.unwrap();
    expect_error(resp, StatusCode::UNPROCESSABLE_ENTITY, "INVALID_JSON").await;

    let surl = format!("{}/runs/{}/sensitivity", s.base, handle.run_id);
    let req =
        json!({"family": "logistic_regression", "fraction": 1.0, "param": "c_resource", "values": [400.0, 440.0]});
    let report: SensitivityReport = s
        .client
        .post(&surl)
        .json(&req)
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    assert_eq!(report.grid.len(), 2);
    let k = 440.0 / 400.0;
    assert!((report.grid[1].roi - ((report.grid[0].roi + 1.0) / k - 1.0)).abs() < 1e-9);

    let req = json!({"family": "logistic_regression", "fraction": 1.0, "param": "c_nope", "values": [1.0]});
    expect_error(
        s.client.post(&surl).json(&req).send().await.unwrap(),
        StatusCode::UNPROCESSABLE_ENTITY,
        "UNKNOWN_PARAMETER",
    )
    .await;
    let req = json!({"family": "logistic_regression", "fraction": 1.0, "param": "c_resource", "values": []});
    expect_error(
        s.client.post(&surl).json(&req).send().await.unwrap(),
        StatusCode::UNPROCESSABLE_ENTITY,
        "EMPTY_VALUES",
    )
    .await;

    // A run that has not finished is not evaluable.
    let pending: JobHandle = s
        .client
        .post(format!("{}/runs", s.base))
        .json(&json!({"dataset_hash": up.dataset_hash}))
        .send()
        .await
        .unwrap()
        .json()
        .await
        .unwrap();
    let resp = s
        .client
        .post(format!("{}/runs/{}/roi", s.base, pending.run_id))
        .json(&json!({}))
        .send()
        .await
        .unwrap();
    expect_error(resp, StatusCode::CONFLICT, "RUN_NOT_EVALUABLE").await;
}

#[tokio::test]
async fn active_learning_session_flow() {
    let s = start(None, None).await;
    let ds = generate_synthetic(200, 0.5, 0.9, 4).unwrap().dataset;
    let up: UploadResponse = upload(&s, ds.to_canonical_csv()).await.json().await.unwrap();
    let truth: std::collections::HashMap<_, _> = ds.pairs().iter().map(|p| (p.id.clone(), p.label)).collect();
    let cfg = ALConfig {
        annotation_budget: 20,
        batch_size: 10,
        threshold: 0.99,
        classifier: ClassifierSpec::default_for(Family::LogisticRegression, 0),
        ..Default::default()
    };
    let resp = s
        .client
        .post(format!("{}/al/sessions", s.base))
        .json(&json!({"dataset_hash": up.dataset_hash, "config": cfg}))
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::CREATED);
    let view: SessionView = resp.json().await.unwrap();
    let base = format!("{}/al/sessions/{}", s.base, view.session_id);

    // Answering before any batch was issued is out of order.
    let resp = s
        .client
        .post(format!("{base}/labels"))
        .json(&json!({}))
        .send()
        .await
        .unwrap();
    expect_error(resp, StatusCode::CONFLICT, "NO_PENDING_BATCH").await;

    for round in 0..2 {
        let resp = s.client.get(format!("{base}/batch")).send().await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
        let batch: QueryBatch = resp.json().await.unwrap();
        assert!(!batch.items.is_empty() && batch.items.len() <= 10);

        let resp = s
            .client
            .post(format!("{base}/labels"))
            .json(&json!({"not-issued": "DEPENDENT"}))
            .send()
            .await
            .unwrap();
        expect_error(resp, StatusCode::CONFLICT, "UNKNOWN_SAMPLE").await;

        let answers: serde_json::Map<_, _> = batch
            .items
            .iter()
            .map(|it| (it.id.clone(), json!(truth[&it.id])))
            .collect();
        let view: SessionView = s
            .client
            .post(format!("{base}/labels"))
            .json(&answers)
            .send()
            .await
            .unwrap()
            .json()
            .await
            .unwrap();
        assert_eq!(view.state.history.len(), round + 1);
        assert!(view.state.annotations_spent <= 20);
    }
    let resp = s.client.get(format!("{base}/batch")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::NO_CONTENT);

    let resp = s
        .client
        .get(format!("{}/al/sessions/unknown", s.base))
        .send()
        .await
        .unwrap();
    expect_error(resp, StatusCode::NOT_FOUND, "NOT_FOUND").await;
}

#[tokio::test]
async fn bearer_token_guards_everything_but_health() {
    let s = start(Some("sekrit"), None).await;
    let resp = s.client.get(format!("{}/health", s.base)).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let resp = s.client.get(format!("{}/runs", s.base)).send().await.unwrap();
    expect_error(resp, StatusCode::UNAUTHORIZED, "UNAUTHORIZED").await;
    let resp = s
        .client
        .get(format!("{}/runs", s.base))
        .bearer_auth("wrong")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::UNAUTHORIZED);
    let resp = s
        .client
        .get(format!("{}/runs", s.base))
        .bearer_auth("sekrit")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
}
