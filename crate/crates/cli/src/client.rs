//! Blocking HTTP client for the `/v1` API.

use std::time::Duration;

use chainstamp::Digest32;
use serde::de::DeserializeOwned;
use serde_json::Value;
use ureq::http::Response;
use ureq::Body;

use crate::exit::{CliError, CliResult, Exit};

pub struct Client {
    base: String,
    agent: ureq::Agent,
}

impl Client {
    pub fn new(server: &str) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .build()
            .into();
        Self {
            base: server.trim_end_matches('/').to_owned(),
            agent,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    fn network(&self, e: ureq::Error) -> CliError {
        CliError::new(Exit::Network, format!("cannot reach {}: {e}", self.base))
    }

    /// Non-2xx responses become [`Exit::Rejected`] carrying the server's
    /// error code and detail.
    fn check(&self, mut resp: Response<Body>) -> CliResult<Response<Body>> {
        let status = resp.status();
        if status.is_success() {
            return Ok(resp);
        }
        let text = resp.body_mut().read_to_string().unwrap_or_default();
        let message = match serde_json::from_str::<Value>(&text) {
            Ok(v) => format!(
                "server rejected request ({}): {}: {}",
                status.as_u16(),
                v["error"].as_str().unwrap_or("error"),
                v["detail"].as_str().unwrap_or(&text)
            ),
            Err(_) => format!("server rejected request ({}): {text}", status.as_u16()),
        };
        Err(CliError::new(Exit::Rejected, message))
    }

    fn decode<T: DeserializeOwned>(&self, mut resp: Response<Body>) -> CliResult<T> {
        resp.body_mut().read_json().map_err(|e| {
            CliError::new(
                Exit::Network,
                format!("unexpected response from {}: {e}", self.base),
            )
        })
    }

    pub fn get_json<T: DeserializeOwned>(&self, path: &str) -> CliResult<T> {
        let resp = self
            .agent
            .get(&self.url(path))
            .call()
            .map_err(|e| self.network(e))?;
        self.decode(self.check(resp)?)
    }

    pub fn get_text(&self, path: &str) -> CliResult<String> {
        let resp = self
            .agent
            .get(&self.url(path))
            .call()
            .map_err(|e| self.network(e))?;
        self.check(resp)?
            .body_mut()
            .read_to_string()
            .map_err(|e| self.network(e))
    }

    pub fn get_bytes(&self, path: &str) -> CliResult<Vec<u8>> {
        let resp = self
            .agent
            .get(&self.url(path))
            .call()
            .map_err(|e| self.network(e))?;
        self.check(resp)?
            .body_mut()
            .with_config()
            .limit(1 << 30)
            .read_to_vec()
            .map_err(|e| self.network(e))
    }

    pub fn post_json<T: DeserializeOwned>(&self, path: &str, body: &Value) -> CliResult<T> {
        let resp = self
            .agent
            .post(&self.url(path))
            .send_json(body)
            .map_err(|e| self.network(e))?;
        self.decode(self.check(resp)?)
    }

    pub fn stamp_path(h: &Digest32) -> String {
        format!("/v1/stamps/{h}")
    }
}
