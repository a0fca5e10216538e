//! Start the service in-process and walk through upload, run, poll and an
//! ROI recomputation over HTTP.

use std::time::Duration;

use aroi_api::{spawn, ApiConfig, JobHandle, UploadResponse};
use aroi_core::dataset::generate_synthetic;
use aroi_core::roi::RoiGrid;
use aroi_core::store::RunRecord;
use serde_json::json;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("aroi-rest-{}", std::process::id()));
    let addr = spawn("127.0.0.1:0".parse()?, ApiConfig::new(&dir)).await?;
    let base = format!("http://{addr}");
    let http = reqwest::Client::new();
    println!("serving on {base}");

    let csv = generate_synthetic(400, 0.5, 0.9, 1)?.dataset.to_canonical_csv();
    let form = reqwest::multipart::Form::new()
        .part("file", reqwest::multipart::Part::bytes(csv).file_name("pairs.csv"))
        .text("id", "id");
    let up: UploadResponse = http
        .post(format!("{base}/datasets"))
        .multipart(form)
        .send()
        .await?
        .json()
        .await?;
    println!("dataset {} ({} rows)", up.dataset_hash, up.summary.n);

    let job: JobHandle = http
        .post(format!("{base}/runs"))
        .json(&json!({ "dataset_hash": up.dataset_hash }))
        .send()
        .await?
        .json()
        .await?;
    loop {
        let rec: RunRecord = http
            .get(format!("{base}/runs/{}", job.run_id))
            .send()
            .await?
            .json()
            .await?;
        println!("{:?} {}/{}", rec.status, rec.progress.done, rec.progress.total);
        if rec.status.is_terminal() {
            break;
        }
        tokio::time::sleep(Duration::from_millis(200)).await;
    }

    for c_resource in [400.0, 440.0] {
        let grid: RoiGrid = http
            .post(format!("{base}/runs/{}/roi", job.run_id))
            .json(&json!({ "c_resource": c_resource }))
            .send()
            .await?
            .json()
            .await?;
        let lr = &grid.curves[0];
        let last = lr.points.last().unwrap();
        println!(
            "c_resource {c_resource}: {} at {} -> ROI {:.2}",
            lr.family, last.fraction, last.roi
        );
    }
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
