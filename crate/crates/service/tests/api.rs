use std::sync::Arc;
use std::time::Duration;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

use arcle_core::grid::{Grid, Selection};
use arcle_core::task::{Pair, Task, TaskSource};
use arcle_core::trace::{read_trace, RleMask};
use arcle_core::replay::replay;
use arcle_core::{Action, ArcEnv, BBoxAction, EnvConfig, Environment, ResetOptions, RewardMode};
use arcle_service::{router, AppState, Catalog, ServiceConfig};

fn g(rows: &[&[u8]]) -> Grid {
    Grid::from_rows(rows).unwrap()
}

fn task(id: &str, input: Grid, output: Grid) -> Task {
    Task {
        id: id.into(),
        source: TaskSource::ArcTrain,
        demo_pairs: vec![
            Pair { input: g(&[&[1, 0]]), output: g(&[&[0, 1]]) },
            Pair { input: g(&[&[2, 0], &[0, 0]]), output: g(&[&[0, 0], &[0, 2]]) },
        ],
        test_pairs: vec![Pair { input, output }],
    }
}

fn catalog() -> Catalog {
    let solved = task("solved", g(&[&[3, 3], &[3, 3]]), g(&[&[3, 3], &[3, 3]]));
    let small = task("small", g(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]), g(&[&[9, 8, 7], &[6, 5, 4], &[3, 2, 1]]));
    let big = task("big", Grid::zeros(arcle_core::Dims::new(7, 6).unwrap()), Grid::zeros(arcle_core::Dims::new(7, 6).unwrap()));
    let eval = task("eval-one", g(&[&[0]]), g(&[&[5]]));
    Catalog::from_tasks(vec![solved, small, big], vec![eval], vec![])
}

fn app_with(config: ServiceConfig) -> (Router, Arc<AppState>) {
    let state = Arc::new(AppState::new(catalog(), &config));
    (router(state.clone(), config.cors_origin.as_deref()), state)
}

fn app() -> Router {
    app_with(ServiceConfig::default()).0
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, value)
}

async fn create(app: &Router, body: Value) -> (String, Value) {
    let (status, doc) = call(app, "POST", "/v1/sessions", Some(body)).await;
    assert_eq!(status, StatusCode::CREATED, "{doc}");
    (doc["session_id"].as_str().unwrap().to_string(), doc)
}

async fn step(app: &Router, id: &str, body: Value) -> (StatusCode, Value) {
    call(app, "POST", &format!("/v1/sessions/{id}/step"), Some(body)).await
}

#[tokio::test]
async fn create_returns_observation_with_demos() {
    let app = app();
    let (id, doc) = create(&app, json!({"dataset": "arc", "split": "training", "task_id": "small"})).await;
    assert_eq!(id.len(), 32);
    let obs = &doc["observation"];
    assert_eq!(obs["input"], json!([[1, 2, 3], [4, 5, 6], [7, 8, 9]]));
    assert_eq!(obs["grid"], obs["input"]);
    assert_eq!(obs["grid_dim"], json!([3, 3]));
    assert_eq!(obs["demo_pairs"].as_array().unwrap().len(), 2);
    assert!(obs.get("answer").is_none());
    assert_eq!(doc["operations"].as_array().unwrap().len(), 35);
    assert_eq!(doc["preset"], "o2arc");
}

#[tokio::test]
async fn exposed_answer_is_included() {
    let app = app();
    let (_, doc) = create(&app, json!({"task_id": "small", "expose_answer": true})).await;
    assert_eq!(doc["observation"]["answer"], json!([[9, 8, 7], [6, 5, 4], [3, 2, 1]]));
}

#[tokio::test]
async fn adaptation_hides_the_active_demo() {
    let app = app();
    let (_, doc) = create(&app, json!({"task_id": "small", "adaptation": true, "pair_index": 1})).await;
    let obs = &doc["observation"];
    assert_eq!(obs["grid"], json!([[2, 0], [0, 0]]));
    let demos = obs["demo_pairs"].as_array().unwrap();
    assert_eq!(demos.len(), 1);
    assert_eq!(demos[0]["input"], json!([[1, 0]]));
}

#[tokio::test]
async fn creation_errors() {
    let app = app();
    let cases = [
        (json!({"task_id": "nope"}), StatusCode::NOT_FOUND),
        (json!({"dataset": "random", "task_id": "random-bad"}), StatusCode::NOT_FOUND),
        (json!({"task_id": "small", "adaptation": true, "pair_index": 2}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "pair_index": 1}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "preset": "chess"}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "preset": "custom"}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "preset": "raw", "ops": ["Submit"]}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "reward_mode": "lavish"}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "max_steps": 0}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "split": "validation"}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"dataset": "kaggle"}), StatusCode::UNPROCESSABLE_ENTITY),
        (json!({"task_id": "small", "colour": 3}), StatusCode::UNPROCESSABLE_ENTITY),
    ];
    for (body, expected) in cases {
        let (status, doc) = call(&app, "POST", "/v1/sessions", Some(body.clone())).await;
        assert_eq!(status, expected, "{body} -> {doc}");
        assert!(doc["error"]["code"].is_string());
    }
    let (status, _) = call(&app, "POST", "/v1/sessions", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn custom_preset_and_generated_tasks() {
    let app = app();
    let (_, doc) = create(&app, json!({"task_id": "small", "preset": "custom", "ops": ["Color2", "FlipV", "submit"]})).await;
    assert_eq!(doc["operations"], json!(["Color2", "FlipV", "Submit"]));
    let (_, doc) = create(&app, json!({"dataset": "random", "task_id": "random-4x6-c3-s9"})).await;
    assert_eq!(doc["task_id"], "random-4x6-c3-s9");
    assert_eq!(doc["observation"]["grid_dim"], json!([4, 6]));
    assert_eq!(doc["observation"]["demo_pairs"], json!([]));
    let (_, a) = create(&app, json!({"dataset": "random", "seed": 5})).await;
    let (_, b) = create(&app, json!({"dataset": "random", "seed": 5})).await;
    assert_eq!(a["observation"]["grid"], b["observation"]["grid"]);
    let (_, doc) = create(&app, json!({"split": "evaluation"})).await;
    assert_eq!(doc["task_id"], "eval-one");
}

#[tokio::test]
async fn submit_on_solved_grid_then_conflict() {
    let app = app();
    let (id, _) = create(&app, json!({"task_id": "solved"})).await;
    let (status, res) = step(&app, &id, json!({"operation": 34})).await;
    assert_eq!(status, StatusCode::OK, "{res}");
    assert_eq!(res["reward"], json!(1.0));
    assert_eq!(res["terminated"], json!(true));
    assert_eq!(res["info"]["exact_match"], json!(true));
    let (status, res) = step(&app, &id, json!({"operation": 3, "selection": {"bbox": [0, 0, 1, 1]}})).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(res["error"]["code"], "episode_over");
    let (status, doc) = call(&app, "POST", &format!("/v1/sessions/{id}/reset"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc["observation"]["terminated"], json!(false));
    let (status, _) = step(&app, &id, json!({"operation": 3, "selection": {"bbox": [0, 0, 1, 1]}})).await;
    assert_eq!(status, StatusCode::OK);
}

#[tokio::test]
async fn bbox_outside_grid_is_a_no_op() {
    let app = app();
    let (id, _) = create(&app, json!({"task_id": "small"})).await;
    let (status, res) = step(&app, &id, json!({"operation": 5, "selection": {"bbox": [10, 10, 12, 12]}})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(res["reward"], json!(0.0));
    assert_eq!(res["info"]["no_op"], "empty_selection");
    assert_eq!(res["observation"]["grid"], json!([[1, 2, 3], [4, 5, 6], [7, 8, 9]]));

    let (id, _) = create(&app, json!({"task_id": "small", "reward_mode": "dense"})).await;
    let (_, res) = step(&app, &id, json!({"operation": 5, "selection": {"bbox": [-4, -4, -1, -1]}})).await;
    assert_eq!(res["info"]["no_op"], "empty_selection");
    // 8 of 9 cells differ from the answer; only the centre matches
    assert_eq!(res["reward"].as_f64().unwrap(), -8.0 / 9.0);
}

#[tokio::test]
async fn step_errors() {
    let app = app();
    let (id, _) = create(&app, json!({"task_id": "small"})).await;
    let bad_mask = json!({"mask": {"height": 2, "width": 2, "runs": [4]}});
    let short_mask = json!({"mask": {"height": 3, "width": 3, "runs": [1, 1]}});
    let cases = [
        json!({"operation": 99, "selection": {"bbox": [0, 0, 0, 0]}}),
        json!({"operation": 99}),
        json!({"operation": 1, "selection": bad_mask}),
        json!({"operation": 1, "selection": short_mask}),
        json!({"operation": 1, "selection": {"circle": [1, 1, 1]}}),
        json!({"op": 1}),
    ];
    for body in cases {
        let (status, res) = step(&app, &id, body.clone()).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{body} -> {res}");
    }
    let (_, state) = call(&app, "GET", &format!("/v1/sessions/{id}/state"), None).await;
    assert_eq!(state["step_count"], json!(0));
    let (_, trace) = call(&app, "GET", &format!("/v1/sessions/{id}/trace"), None).await;
    assert_eq!(trace.as_array().unwrap().len(), 1);
}

#[tokio::test]
async fn unknown_session_is_404() {
    let app = app();
    for (method, path) in [
        ("POST", "step"),
        ("POST", "reset"),
        ("GET", "state"),
        ("GET", "trace"),
    ] {
        let body = (method == "POST").then(|| json!({"operation": 0}));
        let (status, res) = call(&app, method, &format!("/v1/sessions/deadbeef/{path}"), body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{path}");
        assert_eq!(res["error"]["code"], "unknown_session");
    }
}

#[tokio::test]
async fn state_matches_last_step_and_trace_counts() {
    let app = app();
    let (id, _) = create(&app, json!({"task_id": "small"})).await;
    let mut last = Value::Null;
    for (op, bbox) in [(3, [0, 0, 1, 1]), (20, [0, 0, 0, 2]), (26, [0, 0, 2, 2]), (31, [0, 0, 0, 0])] {
        let (status, res) = step(&app, &id, json!({"operation": op, "selection": {"bbox": bbox}})).await;
        assert_eq!(status, StatusCode::OK, "{res}");
        last = res["observation"].clone();
    }
    let (_, state) = call(&app, "GET", &format!("/v1/sessions/{id}/state"), None).await;
    assert_eq!(state, last);
    call(&app, "POST", &format!("/v1/sessions/{id}/reset"), None).await;
    step(&app, &id, json!({"operation": 0, "selection": {"bbox": [0, 0, 0, 0]}})).await;
    let (_, trace) = call(&app, "GET", &format!("/v1/sessions/{id}/trace"), None).await;
    let records = trace.as_array().unwrap();
    assert_eq!(records.len(), 2 + 5);
    let kinds: Vec<&str> = records.iter().map(|r| r["kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["reset", "step", "step", "step", "step", "reset", "step"]);
}

#[tokio::test]
async fn task_listing_filters_by_size() {
    let app = app();
    let (status, list) = call(&app, "GET", "/v1/tasks?dataset=arc&split=training&max_dim=5", None).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<&str> = list.as_array().unwrap().iter().map(|t| t["id"].as_str().unwrap()).collect();
    let expected: Vec<String> = catalog_tasks().into_iter().filter(|t| t.fits(5, 5)).map(|t| t.id).collect();
    assert_eq!(ids, expected);
    assert!(!ids.contains(&"big"));
    let (_, all) = call(&app, "GET", "/v1/tasks", None).await;
    assert_eq!(all.as_array().unwrap().len(), 3);
    assert_eq!(all[2]["max_dim"], json!([7, 6]));
    let (status, _) = call(&app, "GET", "/v1/tasks?dataset=arc&split=nope", None).await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

fn catalog_tasks() -> Vec<Task> {
    vec![
        task("solved", g(&[&[3, 3], &[3, 3]]), g(&[&[3, 3], &[3, 3]])),
        task("small", g(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]), g(&[&[9, 8, 7], &[6, 5, 4], &[3, 2, 1]])),
        task("big", Grid::zeros(arcle_core::Dims::new(7, 6).unwrap()), Grid::zeros(arcle_core::Dims::new(7, 6).unwrap())),
    ]
}

#[tokio::test]
async fn service_matches_in_process_env() {
    let app = app();
    let small = &catalog_tasks()[1];
    for seed in 0..6u64 {
        let (id, doc) = create(&app, json!({"task_id": "small", "reward_mode": "dense", "max_steps": 30})).await;
        let demos = doc["observation"]["demo_pairs"].clone();
        let cfg = EnvConfig::o2arc().reward_mode(RewardMode::Dense).max_steps(30);
        let mut env = ArcEnv::new(cfg.clone());
        let obs = env.reset(small, &ResetOptions::default()).unwrap();
        let mut expected = serde_json::to_value(obs).unwrap();
        expected["demo_pairs"] = demos.clone();
        assert_eq!(doc["observation"], expected);

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..40 {
            let op = rng.random_range(0..cfg.ops.len());
            let state = env.state().unwrap();
            let frame = cfg.ops[op].selection_frame(state);
            let (h, w) = (frame.height() as i64, frame.width() as i64);
            let (body, sel) = if rng.random_bool(0.5) {
                let b = [
                    rng.random_range(-1..=h),
                    rng.random_range(-1..=w),
                    rng.random_range(-1..=h),
                    rng.random_range(-1..=w),
                ];
                let sel = BBoxAction::new(b[0], b[1], b[2], b[3], op).materialize(state, cfg.ops[op]);
                (json!({"operation": op, "selection": {"bbox": b}}), sel)
            } else {
                let bits: Vec<bool> = (0..frame.area()).map(|_| rng.random_bool(0.3)).collect();
                let sel = Selection::from_bits(frame, bits).unwrap();
                (json!({"operation": op, "selection": {"mask": RleMask::encode(&sel)}}), sel)
            };
            let (status, got) = step(&app, &id, body).await;
            match env.step(Action::new(op, sel)) {
                Ok(res) => {
                    assert_eq!(status, StatusCode::OK, "{got}");
                    let mut want = serde_json::to_value(res).unwrap();
                    want["observation"]["demo_pairs"] = demos.clone();
                    assert_eq!(got, want);
                }
                Err(arcle_core::EnvError::EpisodeOver) => {
                    assert_eq!(status, StatusCode::CONFLICT);
                    let (status, _) = call(&app, "POST", &format!("/v1/sessions/{id}/reset"), None).await;
                    assert_eq!(status, StatusCode::OK);
                    env.reset(small, &ResetOptions::default()).unwrap();
                }
                Err(e) => panic!("unexpected {e}"),
            }
        }
    }
}

#[tokio::test]
async fn concurrent_steps_are_serialized() {
    let app = app();
    let (id, _) = create(&app, json!({"task_id": "small", "max_steps": 1000})).await;
    let mut handles = Vec::new();
    for i in 0..24 {
        let app = app.clone();
        let id = id.clone();
        handles.push(tokio::spawn(async move {
            step(&app, &id, json!({"operation": i % 10, "selection": {"bbox": [0, 0, 2, 2]}})).await.0
        }));
    }
    for h in handles {
        assert_eq!(h.await.unwrap(), StatusCode::OK);
    }
    let (_, state) = call(&app, "GET", &format!("/v1/sessions/{id}/state"), None).await;
    assert_eq!(state["step_count"], json!(24));
    let (_, trace) = call(&app, "GET", &format!("/v1/sessions/{id}/trace"), None).await;
    let indices: Vec<u64> = trace.as_array().unwrap().iter().map(|r| r["index"].as_u64().unwrap()).collect();
    assert_eq!(indices, (0..25).collect::<Vec<_>>());
}

#[tokio::test]
async fn idle_sessions_expire() {
    let (app, state) = app_with(ServiceConfig {
        session_ttl: Duration::from_millis(50),
        ..ServiceConfig::default()
    });
    let (id, _) = create(&app, json!({"task_id": "small"})).await;
    let (id2, _) = create(&app, json!({"task_id": "small"})).await;
    assert_eq!(call(&app, "GET", &format!("/v1/sessions/{id}/state"), None).await.0, StatusCode::OK);
    tokio::time::sleep(Duration::from_millis(120)).await;
    assert_eq!(call(&app, "GET", &format!("/v1/sessions/{id}/state"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(state.sessions.sweep(), 1);
    assert!(state.sessions.is_empty());
    assert_eq!(call(&app, "GET", &format!("/v1/sessions/{id2}/state"), None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn trace_files_are_written_ahead_and_replay() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(ServiceConfig {
        trace_dir: Some(dir.path().to_path_buf()),
        ..ServiceConfig::default()
    });
    let (id, _) = create(&app, json!({"task_id": "small", "reward_mode": "dense"})).await;
    let path = dir.path().join(format!("{id}.jsonl"));
    let lines = || std::fs::read_to_string(&path).unwrap().lines().count();
    assert_eq!(lines(), 1);
    step(&app, &id, json!({"operation": 24, "selection": {"bbox": [0, 0, 1, 2]}})).await;
    assert_eq!(lines(), 2);
    let mask = RleMask::encode(&Selection::from_cells(arcle_core::Dims::new(3, 3).unwrap(), &[(2, 2), (0, 1)]));
    step(&app, &id, json!({"operation": 7, "selection": {"mask": mask}})).await;
    step(&app, &id, json!({"operation": 21})).await;
    assert_eq!(lines(), 4);

    let file = std::fs::File::open(&path).unwrap();
    let records = read_trace(std::io::BufReader::new(file)).unwrap();
    let (_, served) = call(&app, "GET", &format!("/v1/sessions/{id}/trace"), None).await;
    assert_eq!(serde_json::to_value(&records).unwrap(), served);
    let cfg = EnvConfig::o2arc().reward_mode(RewardMode::Dense);
    let report = replay(&records, &catalog_tasks()[1], &cfg, &ResetOptions::default()).unwrap();
    assert_eq!((report.resets, report.steps), (1, 3));
}

#[tokio::test]
async fn cors_headers_present() {
    let app = app();
    let req = Request::builder()
        .method("GET")
        .uri("/v1/tasks")
        .header("origin", "http://localhost:5173")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "*");

    let (app, _) = app_with(ServiceConfig {
        cors_origin: Some("http://ui.local".into()),
        ..ServiceConfig::default()
    });
    let req = Request::builder()
        .method("GET")
        .uri("/v1/tasks")
        .header("origin", "http://ui.local")
        .body(Body::empty())
        .unwrap();
    let resp = app.oneshot(req).await.unwrap();
    assert_eq!(resp.headers()["access-control-allow-origin"], "http://ui.local");
}
