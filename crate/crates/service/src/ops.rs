//! Stateless pipeline operations. Each takes everything it needs in the
//! body and uses the service's knowledge base for defaults.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use axum::extract::State;
use axum::Json;
use vizkb_core::api::{
    ClassifyRequest, ClassifyResponse, CosineRequest, CostResponse, CoverageRequest, CvRequest, CvResponse,
    DepsRequest, DesignsResponse, EnumerateRequest, EvalRequest, EvalResponse, ExportResponse, FeatureAugmentRequest,
    FeatureAugmentResponse, FeaturesResponse, ImportRequest, ImportResponse, LlmRequest, LlmResponse, PairsResponse,
    PrimitiveAugmentRequest, SeedAugmentRequest, SpecRequest, TrainRequest, TrainResponse, ValidateResponse,
};
use vizkb_core::augment::{
    analyze_dependencies, binary_candidates, builtin_seeds, coverage_report, feature_augment_binary,
    feature_augment_unary, primitive_augment_corpus, probe_set, seed_augment, CompletionCache, CoverageReport,
    DependencyGraph,
};
use vizkb_core::enumerator::Enumerator;
use vizkb_core::evaluate::{
    accuracy, compliance, group_cosine_similarity, weight_shift_report, CosineMatrix, WeightScorer, WeightShift,
};
use vizkb_core::kb::{validate, FeatureVector, KnowledgeBase};
use vizkb_core::labeling::{
    classify_labels, llm_label_all, train_classifier_labeler, ChatBackend, HttpChatBackend, LabelError, LogEntry,
};
use vizkb_core::training::{coefficients_to_weights, cross_validate, fit_pairs, make_splits};

use crate::blocking;
use crate::error::ApiResult;
use crate::extract::AppJson;
use crate::state::AppState;

/// The service's knowledge base, or one with the request's weights.
fn kb_with(state: &AppState, weights: Option<vizkb_core::kb::WeightTable>) -> ApiResult<KnowledgeBase> {
    match weights {
        Some(w) => Ok(KnowledgeBase::new(state.kb().catalog.clone(), w)?),
        None => Ok(state.kb().clone()),
    }
}

pub async fn validate_spec(AppJson(req): AppJson<SpecRequest>) -> ApiResult<Json<ValidateResponse>> {
    let violations = validate(&req.spec)?;
    Ok(Json(ValidateResponse {
        valid: violations.is_empty(),
        violations,
    }))
}

pub async fn features(State(s): State<AppState>, AppJson(req): AppJson<SpecRequest>) -> ApiResult<Json<FeaturesResponse>> {
    Ok(Json(FeaturesResponse {
        features: s.kb().features(&req.spec)?,
    }))
}

pub async fn cost(State(s): State<AppState>, AppJson(req): AppJson<SpecRequest>) -> ApiResult<Json<CostResponse>> {
    let kb = kb_with(&s, req.weights)?;
    let features = kb.features(&req.spec)?;
    let cost = kb.weights.cost(&features)?;
    Ok(Json(CostResponse { cost, features }))
}

pub async fn enumerate(
    State(s): State<AppState>,
    AppJson(req): AppJson<EnumerateRequest>,
) -> ApiResult<Json<DesignsResponse>> {
    blocking(move || {
        let en = Enumerator::new(s.kb());
        let designs = en.enumerate_constrained(&req.partial, &req.force, &req.forbid, &req.bounds)?;
        Ok(Json(DesignsResponse { designs }))
    })
    .await
}

pub async fn augment_primitive(
    State(s): State<AppState>,
    AppJson(req): AppJson<PrimitiveAugmentRequest>,
) -> ApiResult<Json<PairsResponse>> {
    blocking(move || {
        let en = Enumerator::new(s.kb());
        let mut pairs = Vec::new();
        let mut warnings = Vec::new();
        for (origin, result) in primitive_augment_corpus(&req.pairs, &en, req.max_new, &req.bounds) {
            match result {
                Ok(p) => pairs.extend(p),
                Err(e) => warnings.push(format!("{origin}: {e}")),
            }
        }
        Ok(Json(PairsResponse { pairs, warnings }))
    })
    .await
}

pub async fn augment_feature(
    State(s): State<AppState>,
    AppJson(req): AppJson<FeatureAugmentRequest>,
) -> ApiResult<Json<FeatureAugmentResponse>> {
    blocking(move || {
        let kb = s.kb();
        let bounds = req.config.bounds.clone();
        let coverage = coverage_report(&req.corpus, &kb.catalog, req.threshold)?;
        let features: BTreeSet<String> = match req.features {
            Some(f) => f.into_iter().collect(),
            None => coverage.under_covered.clone(),
        };
        let en = Enumerator::new(kb);
        let cache = CompletionCache::new(&en, req.partials.clone(), bounds.clone());
        let unary = features
            .iter()
            .map(|f| feature_augment_unary(f, &cache, &req.config))
            .collect::<Result<Vec<_>, _>>()?;
        let mut binary = Vec::new();
        if req.binary {
            let probe = probe_set(&en, &req.partials, &bounds, &req.corpus)?;
            let graph = analyze_dependencies(&probe, &kb.catalog)?;
            for (a, b) in binary_candidates(&features, &graph, Some(&coverage)) {
                binary.push(feature_augment_binary(&a, &b, &cache, &graph, Some(&coverage), &req.config)?);
            }
        }
        let pairs = unary
            .iter()
            .flat_map(|u| u.pairs.iter())
            .chain(binary.iter().flat_map(|b| b.pairs.iter()))
            .cloned()
            .collect();
        Ok(Json(FeatureAugmentResponse { unary, binary, pairs }))
    })
    .await
}

pub async fn augment_seed(
    State(s): State<AppState>,
    AppJson(req): AppJson<SeedAugmentRequest>,
) -> ApiResult<Json<PairsResponse>> {
    blocking(move || {
        let seeds = req.seeds.unwrap_or_else(builtin_seeds);
        let weights = req.weights.unwrap_or_else(|| s.kb().weights.clone());
        let r = seed_augment(&seeds, &s.kb().catalog, &weights, req.n_top, &req.bounds, req.seed)?;
        Ok(Json(PairsResponse {
            pairs: r.pairs,
            warnings: r.warnings,
        }))
    })
    .await
}

pub async fn coverage(
    State(s): State<AppState>,
    AppJson(req): AppJson<CoverageRequest>,
) -> ApiResult<Json<CoverageReport>> {
    blocking(move || Ok(Json(coverage_report(&req.corpus, &s.kb().catalog, req.threshold)?))).await
}

pub async fn deps(State(s): State<AppState>, AppJson(req): AppJson<DepsRequest>) -> ApiResult<Json<DependencyGraph>> {
    blocking(move || {
        let en = Enumerator::new(s.kb());
        let probe = probe_set(&en, &req.partials, &req.bounds, &req.corpus)?;
        Ok(Json(analyze_dependencies(&probe, &s.kb().catalog)?))
    })
    .await
}

pub async fn classify(AppJson(req): AppJson<ClassifyRequest>) -> ApiResult<Json<ClassifyResponse>> {
    blocking(move || {
        let model = train_classifier_labeler(&req.labeled, &req.config)?;
        Ok(Json(ClassifyResponse {
            records: classify_labels(&model, &req.unlabeled)?,
            train_accuracy: model.train_accuracy,
            cv_accuracy: model.cv_accuracy,
        }))
    })
    .await
}

pub async fn llm(State(s): State<AppState>, AppJson(req): AppJson<LlmRequest>) -> ApiResult<Json<LlmResponse>> {
    let backend: Arc<dyn ChatBackend> = match &s.0.llm {
        Some(b) => b.clone(),
        None => Arc::new(HttpChatBackend::from_env(&req.config).map_err(LabelError::from)?),
    };
    let outcomes = llm_label_all(&req.pairs, backend.as_ref(), &req.config).await?;
    Ok(Json(LlmResponse { outcomes }))
}

/// Appends every line to the service's label store.
pub async fn import_labels(
    State(s): State<AppState>,
    AppJson(req): AppJson<ImportRequest>,
) -> ApiResult<Json<ImportResponse>> {
    let entries = LogEntry::parse_jsonl(&req.jsonl)?;
    let st = s.clone();
    let (imported, manual_labels, retrain) = blocking(move || {
        let mut lab = st.write();
        let n = lab.store.append_all(entries)?;
        let retrain = st.prune(&mut lab);
        st.save_session(&lab.session)?;
        Ok((n, lab.store.store().manual_count(), retrain))
    })
    .await?;
    if retrain {
        s.spawn_retrain();
    }
    Ok(Json(ImportResponse {
        imported,
        manual_labels,
    }))
}

pub async fn export_labels(State(s): State<AppState>) -> Json<ExportResponse> {
    let lab = s.read();
    let jsonl = lab.store.store().export_jsonl();
    Json(ExportResponse {
        records: jsonl.lines().count(),
        jsonl,
    })
}

pub async fn train(State(s): State<AppState>, AppJson(req): AppJson<TrainRequest>) -> ApiResult<Json<TrainResponse>> {
    blocking(move || {
        let coefficients = fit_pairs(&req.pairs, &s.kb().catalog, req.family, &req.config)?;
        let weights = coefficients_to_weights(&coefficients);
        Ok(Json(TrainResponse { coefficients, weights }))
    })
    .await
}

pub async fn cv(State(s): State<AppState>, AppJson(req): AppJson<CvRequest>) -> ApiResult<Json<CvResponse>> {
    blocking(move || {
        let plan = make_splits(&req.pairs, req.holdout, req.folds, req.seed)?;
        let report = cross_validate(&req.pairs, &plan, req.family, &s.kb().catalog, &req.config)?;
        Ok(Json(CvResponse { plan, report }))
    })
    .await
}

pub async fn eval(State(s): State<AppState>, AppJson(req): AppJson<EvalRequest>) -> ApiResult<Json<EvalResponse>> {
    blocking(move || {
        let kb = kb_with(&s, req.weights)?;
        let scorer = WeightScorer::new(&kb.catalog, &kb.weights);
        let slices = accuracy(&req.pairs, &scorer, &req.slices)?;
        let results = req
            .pairs
            .iter()
            .map(|p| Ok((p.id.clone(), compliance(p, &scorer)?)))
            .collect::<ApiResult<Vec<_>>>()?;
        Ok(Json(EvalResponse { slices, results }))
    })
    .await
}

pub async fn shift(
    State(s): State<AppState>,
    AppJson(req): AppJson<vizkb_core::api::ShiftRequest>,
) -> ApiResult<Json<Vec<WeightShift>>> {
    blocking(move || {
        let freq = coverage_report(&req.corpus, &s.kb().catalog, 0)?.relative_frequency();
        Ok(Json(weight_shift_report(&req.before, &req.after, &freq)?))
    })
    .await
}

/// Both charts of every pair count as members of the pair's group.
pub async fn cosine(State(s): State<AppState>, AppJson(req): AppJson<CosineRequest>) -> ApiResult<Json<CosineMatrix>> {
    blocking(move || {
        let mut groups: BTreeMap<String, Vec<FeatureVector>> = BTreeMap::new();
        for (name, pairs) in &req.groups {
            let vs = groups.entry(name.clone()).or_default();
            for p in pairs {
                vs.push(s.kb().features(&p.left)?);
                vs.push(s.kb().features(&p.right)?);
            }
        }
        Ok(Json(group_cosine_similarity(&groups)))
    })
    .await
}

