//! Routes behind the labeling UI.

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::Json;
use vizkb_core::api::{
    AccuracyReport, LabelChoice, LabelRequest, LabelResponse, NextResponse, NextStatus, PairDetail, PairView,
    SessionView,
};
use vizkb_core::augment::DesignPair;
use vizkb_core::evaluate::{accuracy, SliceKey, WeightScorer};
use vizkb_core::kb::to_vega_lite;
use vizkb_core::labeling::{LabelRecord, LabelStore, LogEntry, SessionState};

use crate::error::{ApiError, ApiResult};
use crate::extract::AppJson;
use crate::state::{AppState, Labeling};

pub(crate) fn session_view(state: &AppState, lab: &Labeling) -> SessionView {
    let s = &lab.session;
    SessionView {
        session_id: s.session_id.clone(),
        strategy: s.config.strategy,
        state: s.state,
        iteration: s.iteration,
        max_iterations: s.config.max_iterations,
        batch_size: s.config.batch_size,
        answered_in_batch: s.answered_in_batch,
        answered_total: s.answered_total,
        queue_len: s.queue.len(),
        retrain_count: s.retrain_count,
        manual_labels: lab.store.store().manual_count(),
        total_pairs: state.corpus().len(),
    }
}

fn pair_view(pair: &DesignPair, store: &LabelStore) -> PairView {
    let marked = store.is_illegible(&pair.id);
    PairView {
        pair_id: pair.id.clone(),
        left: pair.left.clone(),
        right: pair.right.clone(),
        left_render: to_vega_lite(&pair.left),
        right_render: to_vega_lite(&pair.right),
        source: pair.source,
        lineage: pair.lineage.clone(),
        group: pair.group.clone(),
        illegible: marked || pair.illegible,
        illegible_reason: store
            .illegible_reason(&pair.id)
            .map(str::to_string)
            .or_else(|| pair.illegible_reason.clone()),
    }
}

pub async fn get_session(State(state): State<AppState>) -> Json<SessionView> {
    let lab = state.read();
    Json(session_view(&state, &lab))
}

/// The pair to show next. Answers 503 while the model retrains so the UI
/// can poll.
pub async fn next_pair(State(state): State<AppState>) -> (StatusCode, Json<NextResponse>) {
    let lab = state.read();
    let session = session_view(&state, &lab);
    let (code, status, pair) = match lab.session.state {
        SessionState::Retraining => (StatusCode::SERVICE_UNAVAILABLE, NextStatus::Retraining, None),
        SessionState::Complete => (StatusCode::OK, NextStatus::Complete, None),
        SessionState::Active => match lab.session.next().and_then(|id| state.pair(id)) {
            Some(p) => (StatusCode::OK, NextStatus::Ready, Some(pair_view(p, lab.store.store()))),
            None => (StatusCode::OK, NextStatus::Complete, None),
        },
    };
    (code, Json(NextResponse { status, pair, session }))
}

pub async fn post_label(
    State(state): State<AppState>,
    AppJson(req): AppJson<LabelRequest>,
) -> ApiResult<Json<LabelResponse>> {
    let (retrain, session) = {
        let mut lab = state.write();
        let id = req.pair_id.as_str();
        if state.pair(id).is_none() {
            return Err(ApiError::not_found(format!("unknown pair `{id}`")));
        }
        if lab.store.store().has_manual(id) {
            return Err(ApiError::conflict(format!("pair `{id}` already has a manual label")));
        }
        match lab.session.state {
            SessionState::Retraining => {
                return Err(ApiError::new(StatusCode::SERVICE_UNAVAILABLE, "retraining, try again shortly"))
            }
            SessionState::Complete => return Err(ApiError::conflict("session complete")),
            SessionState::Active => {}
        }
        if !lab.session.is_queued(id) {
            return Err(ApiError::conflict(format!("pair `{id}` is not in the current batch")));
        }
        let entry = match req.label {
            LabelChoice::Label(l) => LogEntry::Label(LabelRecord::manual(id, l)),
            LabelChoice::Mark(_) => LogEntry::illegible(id, Some("marked by labeler".into())),
        };
        lab.store.append(entry)?;
        let retrain = lab.session.answer(id)?;
        state.save_session(&lab.session)?;
        (retrain, session_view(&state, &lab))
    };
    if retrain {
        state.spawn_retrain();
    }
    Ok(Json(LabelResponse {
        pair_id: req.pair_id,
        retrain_triggered: retrain,
        session,
    }))
}

pub async fn get_pair(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Json<PairDetail>> {
    let pair = state
        .pair(&id)
        .ok_or_else(|| ApiError::not_found(format!("unknown pair `{id}`")))?;
    let lab = state.read();
    let store = lab.store.store();
    Ok(Json(PairDetail {
        pair: pair_view(pair, store),
        labels: store.records().filter(|r| r.pair_id == id).cloned().collect(),
        effective: store.effective(&id).cloned(),
    }))
}

/// Compliance of the current weights with every labeled pair, sliced by
/// source, label provenance and group.
pub async fn accuracy_report(State(state): State<AppState>) -> ApiResult<Json<AccuracyReport>> {
    let s = state.clone();
    crate::blocking(move || {
        let pairs = s.labeled_view(s.read().store.store());
        let kb = s.kb();
        let scorer = WeightScorer::new(&kb.catalog, &kb.weights);
        let slices = accuracy(&pairs, &scorer, &[SliceKey::Source, SliceKey::LabelProvenance, SliceKey::Group])?;
        Ok(AccuracyReport {
            weights_version: kb.weights.version,
            pairs: pairs.len(),
            slices,
        })
    })
    .await
    .map(Json)
}
