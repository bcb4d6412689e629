//! The single commitment loop. It wakes every `tick_millis`, or at once
//! when a priority submission arrives, and runs one pipeline tick. Only
//! this loop closes windows, so one commitment cycle runs at a time.

use std::time::Duration;

use crate::state::SharedState;

pub async fn run(state: SharedState) {
    let interval = Duration::from_millis(state.config.tick_millis);
    loop {
        tokio::select! {
            _ = state.wake.notified() => {}
            _ = tokio::time::sleep(interval) => {}
        }
        let s = state.clone();
        match tokio::task::spawn_blocking(move || s.tick()).await {
            Ok(Ok(report)) => {
                for c in &report.committed {
                    tracing::info!(
                        "window {} committed: {} hashes in tx {}",
                        c.window_id,
                        c.hashes,
                        c.txid
                    );
                }
                for f in &report.failures {
                    tracing::warn!("commitment will be retried: {f}");
                }
            }
            Ok(Err(e)) => tracing::error!("tick failed: {e}"),
            Err(e) => tracing::error!("tick panicked: {e}"),
        }
    }
}
