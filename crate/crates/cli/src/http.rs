//! HTTP routes.

use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::{Path, RawQuery, State};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use futures::stream::{self, Stream};

use crate::{ApiError, SearchParams, Service};

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status(), Json(self.body())).into_response()
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/search", get(search))
        .route("/search/stream", get(search_stream))
        .route("/page/{page_id}", get(page))
        .route("/stats", get(stats))
        .with_state(service)
}

fn params(raw: Option<String>) -> Result<SearchParams, ApiError> {
    SearchParams::from_query_string(raw.as_deref().unwrap_or(""))
}

async fn search(State(svc): State<Arc<Service>>, RawQuery(raw): RawQuery) -> Result<Response, ApiError> {
    let p = params(raw)?;
    let prepared = svc.prepare(&p)?;
    let response = if prepared.connectors.is_empty() {
        let svc = svc.clone();
        tokio::task::spawn_blocking(move || svc.search_local(&prepared))
            .await
            .expect("local search does not panic")?
    } else {
        svc.search(&p).await?
    };
    Ok(Json(response).into_response())
}

async fn search_stream(
    State(svc): State<Arc<Service>>,
    RawQuery(raw): RawQuery,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let prepared = svc.prepare(&params(raw)?)?;
    let rx = svc.stream(prepared)?;
    let events = stream::unfold(rx, |mut rx| async move {
        let response = rx.recv().await?;
        let data = serde_json::to_string(&response).expect("responses serialize");
        Some((Ok(Event::default().event("snapshot").data(data)), rx))
    });
    Ok(Sse::new(events).keep_alive(KeepAlive::default()))
}

async fn page(State(svc): State<Arc<Service>>, Path(page_id): Path<String>) -> Result<Response, ApiError> {
    Ok(Json(svc.page(&page_id)?).into_response())
}

async fn stats(State(svc): State<Arc<Service>>) -> Result<Response, ApiError> {
    Ok(Json(svc.stats()?).into_response())
}

/// Binds the configured address and serves until the process stops.
pub async fn serve(service: Arc<Service>) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(&service.config().listen_address).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(service)).await
}
