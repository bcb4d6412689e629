//! `/v1` routes. Request bodies carry digests only; there is no endpoint
//! that accepts document content.

use axum::body::Bytes;
use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chainstamp::aggregator::Submitted;
use chainstamp::chain::codec::encode_record;
use chainstamp::chain::{Block, ChainView, Transaction, TxLocation};
use chainstamp::ledger::{LedgerError, StampRecord};
use chainstamp::{AddressString, Digest32, Timestamp};
use serde::{Deserialize, Serialize};
use tower_http::cors::CorsLayer;

use crate::state::SharedState;

pub const MAX_BULK: usize = 10_000;
pub const MAX_MINE: u64 = 1_000;

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    detail: String,
    index: Option<usize>,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, detail: impl Into<String>) -> Self {
        Self {
            status,
            code,
            detail: detail.into(),
            index: None,
        }
    }

    fn internal(detail: impl ToString) -> Self {
        Self::new(
            StatusCode::INTERNAL_SERVER_ERROR,
            "internal",
            detail.to_string(),
        )
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    detail: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    index: Option<usize>,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            error: self.code,
            detail: &self.detail,
            index: self.index,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        // 422 is reserved for digests of the wrong length.
        let (status, code) = match r.status() {
            StatusCode::PAYLOAD_TOO_LARGE => (StatusCode::PAYLOAD_TOO_LARGE, "too_large"),
            StatusCode::UNSUPPORTED_MEDIA_TYPE => {
                (StatusCode::UNSUPPORTED_MEDIA_TYPE, "unsupported_media_type")
            }
            _ => (StatusCode::BAD_REQUEST, "bad_request"),
        };
        Self::new(status, code, r.body_text())
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// 400 for non-hex characters, 422 for the wrong number of hex digits.
pub fn parse_hash(s: &str) -> ApiResult<Digest32> {
    if let Some((i, c)) = s.char_indices().find(|(_, c)| !c.is_ascii_hexdigit()) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "malformed_hash",
            format!("non-hex character {c:?} at position {i}"),
        ));
    }
    if s.len() != 64 {
        return Err(ApiError::new(
            StatusCode::UNPROCESSABLE_ENTITY,
            "wrong_length",
            format!("expected 64 hex characters, got {}", s.len()),
        ));
    }
    s.parse()
        .map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "malformed_hash", format!("{e}")))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(ApiError::internal)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmitRequest {
    pub hash: String,
    #[serde(default)]
    pub priority: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BulkRequest {
    pub hashes: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MineRequest {
    pub blocks: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ReceiptView {
    pub document_hash: Digest32,
    pub window_id: u64,
    pub received_at: Timestamp,
    pub priority: bool,
    pub status: String,
}

impl From<&Submitted> for ReceiptView {
    fn from(s: &Submitted) -> Self {
        Self {
            document_hash: s.receipt.document_hash,
            window_id: s.receipt.window_id,
            received_at: s.receipt.received_at,
            priority: s.receipt.priority,
            status: "pending".into(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BulkView {
    pub window_id: u64,
    pub receipts: Vec<ReceiptView>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct StampView {
    pub document_hash: Digest32,
    pub window_id: u64,
    pub status: String,
    pub confirmations: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub received_at: Option<Timestamp>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub txid: Option<Digest32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<AddressString>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aggregated_hash: Option<Digest32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub batch_hashes: Vec<Digest32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_height: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_time: Option<Timestamp>,
}

impl StampView {
    fn new(r: &StampRecord, chain: &impl ChainView) -> Self {
        let c = r.commitment.as_ref();
        Self {
            document_hash: r.document_hash,
            window_id: r.window_id,
            status: r.status.as_str().into(),
            confirmations: r.confirmations,
            received_at: r.received_at,
            txid: c.map(|c| c.txid),
            address: c.map(|c| c.address.clone()),
            aggregated_hash: c.map(|c| c.batch.aggregated_hash),
            batch_hashes: r.batch_hashes().to_vec(),
            block_height: r.block_height,
            block_time: r
                .block_height
                .and_then(|h| chain.block(h))
                .map(|b| b.header.timestamp),
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct OutputView {
    pub address: AddressString,
    pub amount: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TxView {
    pub txid: Digest32,
    pub outputs: Vec<OutputView>,
    pub fee: u64,
}

impl From<&Transaction> for TxView {
    fn from(tx: &Transaction) -> Self {
        Self {
            txid: tx.txid(),
            outputs: tx
                .outputs
                .iter()
                .map(|o| OutputView {
                    address: o.address.clone(),
                    amount: o.amount,
                })
                .collect(),
            fee: tx.fee,
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct BlockView {
    pub height: u64,
    pub hash: Digest32,
    pub prev_hash: Digest32,
    pub merkle_root: Digest32,
    pub timestamp: Timestamp,
    pub difficulty_bits: u8,
    pub nonce: u64,
    pub transactions: Vec<TxView>,
}

impl From<&Block> for BlockView {
    fn from(b: &Block) -> Self {
        Self {
            height: b.header.height,
            hash: b.hash(),
            prev_hash: b.header.prev_hash,
            merkle_root: b.header.merkle_root,
            timestamp: b.header.timestamp,
            difficulty_bits: b.header.difficulty_bits,
            nonce: b.header.nonce,
            transactions: b.transactions.iter().map(TxView::from).collect(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct TxLocationView {
    #[serde(flatten)]
    pub tx: TxView,
    /// `"mempool"` or `"block"`.
    pub location: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_height: Option<u64>,
    pub confirmations: u64,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ChainInfo {
    pub tip_height: u64,
    pub tip_hash: Digest32,
    pub difficulty_bits: u8,
    pub finality_depth: u64,
    pub dust_satoshi: u64,
    pub window_seconds: u64,
    pub mempool: usize,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct MinedView {
    pub tip_height: u64,
    pub mined: Vec<Digest32>,
}

pub fn router(state: SharedState) -> Router {
    Router::new()
        .route("/v1/stamps", post(submit))
        .route("/v1/stamps/bulk", post(bulk))
        .route("/v1/stamps/{hash}", get(status))
        .route("/v1/stamps/{hash}/proof", get(proof))
        .route("/v1/announcements", get(announcements))
        .route("/v1/chain", get(chain_info))
        .route("/v1/chain/raw", get(chain_raw))
        .route("/v1/chain/blocks/{height}", get(block))
        .route("/v1/chain/tx/{txid}", get(transaction))
        .route("/v1/admin/mine", post(mine))
        .fallback(|| async {
            ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
        })
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn submit(
    State(state): State<SharedState>,
    body: Result<Json<SubmitRequest>, JsonRejection>,
) -> ApiResult<Json<ReceiptView>> {
    let Json(req) = body?;
    let h = parse_hash(&req.hash)?;
    let submitted = blocking(move || state.submit(&[h], req.priority))
        .await?
        .map_err(ApiError::internal)?;
    Ok(Json(ReceiptView::from(&submitted[0])))
}

async fn bulk(
    State(state): State<SharedState>,
    body: Result<Json<BulkRequest>, JsonRejection>,
) -> ApiResult<Json<BulkView>> {
    let Json(req) = body?;
    if req.hashes.is_empty() {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "empty",
            "hashes must not be empty",
        ));
    }
    if req.hashes.len() > MAX_BULK {
        return Err(ApiError::new(
            StatusCode::PAYLOAD_TOO_LARGE,
            "too_large",
            format!(
                "{} hashes, at most {MAX_BULK} per request",
                req.hashes.len()
            ),
        ));
    }
    let mut hashes = Vec::with_capacity(req.hashes.len());
    for (i, s) in req.hashes.iter().enumerate() {
        match parse_hash(s) {
            Ok(h) => hashes.push(h),
            Err(e) => {
                return Err(ApiError {
                    status: StatusCode::BAD_REQUEST,
                    code: "invalid_hash",
                    detail: format!("entry {i}: {}", e.detail),
                    index: Some(i),
                })
            }
        }
    }
    let submitted = blocking(move || state.submit(&hashes, false))
        .await?
        .map_err(ApiError::internal)?;
    Ok(Json(BulkView {
        window_id: submitted[0].receipt.window_id,
        receipts: submitted.iter().map(ReceiptView::from).collect(),
    }))
}

fn not_found(h: &Digest32) -> ApiError {
    ApiError::new(
        StatusCode::NOT_FOUND,
        "not_found",
        format!("{h} was never submitted"),
    )
}

async fn status(
    State(state): State<SharedState>,
    Path(hash): Path<String>,
) -> ApiResult<Json<StampView>> {
    let h = parse_hash(&hash)?;
    blocking(move || {
        let p = state.pipeline();
        match p.status(&h) {
            Ok(r) => Ok(Json(StampView::new(&r, p.chain()))),
            Err(LedgerError::NotFound(_)) => Err(not_found(&h)),
            Err(e) => Err(ApiError::internal(e)),
        }
    })
    .await?
}

async fn proof(State(state): State<SharedState>, Path(hash): Path<String>) -> ApiResult<Response> {
    let h = parse_hash(&hash)?;
    blocking(move || match state.pipeline().proof(&h) {
        Ok(bundle) => Ok((
            [(header::CONTENT_TYPE, "application/json")],
            bundle.to_json(),
        )
            .into_response()),
        Err(LedgerError::NotFound(_)) => Err(not_found(&h)),
        Err(LedgerError::NotYetMined(_)) => Err(ApiError::new(
            StatusCode::CONFLICT,
            "not_yet_mined",
            format!("{h} has no mined commitment yet"),
        )),
        Err(e) => Err(ApiError::internal(e)),
    })
    .await?
}

async fn announcements(
    State(state): State<SharedState>,
) -> Json<Vec<crate::announce::AnnouncementEntry>> {
    Json(state.announcements().entries().to_vec())
}

async fn chain_info(State(state): State<SharedState>) -> ApiResult<Json<ChainInfo>> {
    blocking(move || {
        let p = state.pipeline();
        let tip = p.chain().tip();
        Json(ChainInfo {
            tip_height: tip.header.height,
            tip_hash: tip.hash(),
            difficulty_bits: p.chain().params().difficulty_bits,
            finality_depth: p.config().finality_depth,
            dust_satoshi: p.config().cost.dust_satoshi,
            window_seconds: p.config().window_seconds,
            mempool: p.chain().mempool().len(),
        })
    })
    .await
}

/// The chain in its file format, for offline verification.
async fn chain_raw(State(state): State<SharedState>) -> ApiResult<Response> {
    let bytes: Vec<u8> = blocking(move || {
        state
            .pipeline()
            .chain()
            .blocks()
            .iter()
            .flat_map(encode_record)
            .collect()
    })
    .await?;
    Ok((
        [(header::CONTENT_TYPE, "application/octet-stream")],
        Bytes::from(bytes),
    )
        .into_response())
}

async fn block(
    State(state): State<SharedState>,
    Path(height): Path<String>,
) -> ApiResult<Json<BlockView>> {
    let height: u64 = height.parse().map_err(|_| {
        ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            format!("bad height {height:?}"),
        )
    })?;
    blocking(move || {
        let p = state.pipeline();
        p.chain()
            .block(height)
            .map(|b| Json(BlockView::from(b)))
            .ok_or_else(|| {
                ApiError::new(
                    StatusCode::NOT_FOUND,
                    "not_found",
                    format!("no block at height {height}"),
                )
            })
    })
    .await?
}

async fn transaction(
    State(state): State<SharedState>,
    Path(txid): Path<String>,
) -> ApiResult<Json<TxLocationView>> {
    let txid = parse_hash(&txid)?;
    blocking(move || transaction_view(&state, txid)).await?
}

fn transaction_view(state: &SharedState, txid: Digest32) -> ApiResult<Json<TxLocationView>> {
    let p = state.pipeline();
    let chain = p.chain();
    let missing = || {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "not_found",
            format!("unknown transaction {txid}"),
        )
    };
    let (tx, location, height) = match chain.locate(&txid) {
        TxLocation::Block(h) => {
            let block = chain.block(h).ok_or_else(missing)?;
            let tx = block
                .transactions
                .iter()
                .find(|t| t.txid() == txid)
                .ok_or_else(missing)?;
            (tx, "block", Some(h))
        }
        TxLocation::Mempool => {
            let tx = chain
                .mempool()
                .iter()
                .find(|t| t.txid() == txid)
                .ok_or_else(missing)?;
            (tx, "mempool", None)
        }
        TxLocation::Unknown => return Err(missing()),
    };
    Ok(Json(TxLocationView {
        tx: TxView::from(tx),
        location: location.into(),
        block_height: height,
        confirmations: chain.confirmations(&txid),
    }))
}

async fn mine(
    State(state): State<SharedState>,
    body: Result<Json<MineRequest>, JsonRejection>,
) -> ApiResult<Json<MinedView>> {
    let Json(req) = body?;
    if req.blocks > MAX_MINE {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "bad_request",
            format!("at most {MAX_MINE} blocks per request"),
        ));
    }
    blocking(move || {
        let mut p = state.pipeline();
        let now = state.clock.now();
        let mined = p.mine(req.blocks, now).map_err(ApiError::internal)?;
        Ok(Json(MinedView {
            tip_height: p.chain().tip().header.height,
            mined,
        }))
    })
    .await?
}
