#![allow(dead_code)]

use std::sync::Arc;

use mdeal_core::cfr::{LearnerConfig, LearnerState};
use mdeal_core::engine::{ConcreteAction, InfoView};
use mdeal_server::api::{self, AppState, GameResponse};
use mdeal_server::store::EventStore;
use serde_json::Value;

pub struct Server {
    pub base: String,
    pub client: reqwest::Client,
    task: tokio::task::JoinHandle<()>,
}

impl Drop for Server {
    fn drop(&mut self) {
        self.task.abort();
    }
}

pub fn untrained() -> LearnerState {
    LearnerState::new(LearnerConfig::default())
}

pub async fn start(learner: LearnerState, store: Box<dyn EventStore>) -> Server {
    let app = Arc::new(AppState::new(learner, store).expect("store replays"));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    let task = tokio::spawn(async move {
        api::serve(listener, app).await.unwrap();
    });
    Server { base, client: reqwest::Client::new(), task }
}

impl Server {
    pub async fn call(&self, method: reqwest::Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(body) = body {
            req = req.json(&body);
        }
        let resp = req.send().await.unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().await.unwrap())
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(reqwest::Method::POST, path, Some(body)).await
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        self.call(reqwest::Method::GET, path, None).await
    }

    pub async fn create(&self, body: Value) -> GameResponse {
        let (status, json) = self.post("/games", body).await;
        assert_eq!(status, 201, "{json}");
        serde_json::from_value(json).unwrap()
    }
}

pub fn game(json: Value) -> GameResponse {
    serde_json::from_value(json).unwrap()
}

/// A fixed human strategy: charge rent whenever possible, then build, bank, pay cheapest first.
pub fn human_choice(view: &InfoView) -> ConcreteAction {
    let rank = |a: &ConcreteAction| match a {
        ConcreteAction::PlayRent { .. } => 0,
        ConcreteAction::PlayProperty { .. } => 1,
        ConcreteAction::PlayCash { .. } => 2,
        ConcreteAction::PayCash { .. } => 3,
        ConcreteAction::PayProperty { .. } => 4,
        ConcreteAction::PlayJustSayNo { .. } => 5,
        ConcreteAction::Yield => 6,
        ConcreteAction::Pass => 7,
    };
    *view.legal_actions.iter().min_by_key(|a| rank(a)).expect("the human is to act")
}
