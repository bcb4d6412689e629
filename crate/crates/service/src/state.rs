use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use chainstamp::aggregator::Submitted;
use chainstamp::pipeline::{Pipeline, PipelineError, TickReport};
use chainstamp::{Digest32, Timestamp};
use thiserror::Error;
use tokio::sync::Notify;

use crate::announce::{AnnouncementLog, Webhook};
use crate::config::{ConfigError, ServiceConfig};

pub trait Clock: Send + Sync {
    fn now(&self) -> Timestamp;
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> Timestamp {
        Timestamp::now()
    }
}

/// A clock that only moves when told to.
#[derive(Debug)]
pub struct ManualClock(AtomicU64);

impl ManualClock {
    pub fn new(start: Timestamp) -> Self {
        Self(AtomicU64::new(start.unix()))
    }

    pub fn set(&self, t: Timestamp) {
        self.0.store(t.unix(), Ordering::SeqCst);
    }

    pub fn advance(&self, secs: u64) {
        self.0.fetch_add(secs, Ordering::SeqCst);
    }
}

impl Clock for ManualClock {
    fn now(&self) -> Timestamp {
        Timestamp::from_unix(self.0.load(Ordering::SeqCst))
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("cannot create data directory: {0}")]
    DataDir(std::io::Error),
    #[error("cannot open state: {0}")]
    Pipeline(#[from] PipelineError),
    #[error("cannot open announcement log: {0}")]
    Announcements(std::io::Error),
    #[error("cannot bind: {0}")]
    Bind(std::io::Error),
}

pub struct AppState {
    pub config: ServiceConfig,
    pub clock: Arc<dyn Clock>,
    pipeline: Mutex<Pipeline>,
    announcements: Arc<Mutex<AnnouncementLog>>,
    webhook: Option<Webhook>,
    /// Wakes the scheduler early, e.g. for a priority submission.
    pub wake: Notify,
}

pub type SharedState = Arc<AppState>;

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    // A panic inside a critical section leaves consistent data behind: every
    // mutation is logged before it is applied in memory.
    m.lock().unwrap_or_else(|e| e.into_inner())
}

impl AppState {
    pub fn open(config: ServiceConfig, clock: Arc<dyn Clock>) -> Result<SharedState, StartupError> {
        config.validate()?;
        let pipeline_config = config.pipeline()?;
        let now = clock.now();
        let (pipeline, announcements) = match config.storage() {
            Some(paths) => {
                std::fs::create_dir_all(&config.data_dir).map_err(StartupError::DataDir)?;
                let log_path = config.announcement_log().expect("paired with storage");
                (
                    Pipeline::open(pipeline_config, &paths, now)?,
                    AnnouncementLog::open(log_path).map_err(StartupError::Announcements)?,
                )
            }
            None => (
                Pipeline::in_memory(pipeline_config, now)?,
                AnnouncementLog::in_memory(),
            ),
        };
        let announcements = Arc::new(Mutex::new(announcements));
        let webhook = config.webhook_url.clone().map(|url| {
            let log = Arc::clone(&announcements);
            Webhook::start(url, move |e| {
                lock(&log).record_webhook(e.document_hash, e.announced_at)
            })
        });
        Ok(Arc::new(Self {
            config,
            clock,
            pipeline: Mutex::new(pipeline),
            announcements,
            webhook,
            wake: Notify::new(),
        }))
    }

    pub fn pipeline(&self) -> MutexGuard<'_, Pipeline> {
        lock(&self.pipeline)
    }

    pub fn announcements(&self) -> MutexGuard<'_, AnnouncementLog> {
        lock(&self.announcements)
    }

    /// Queues hashes at one instant and announces the fresh ones, in order,
    /// while the queue is still locked.
    pub fn submit(
        &self,
        hashes: &[Digest32],
        priority: bool,
    ) -> Result<Vec<Submitted>, PipelineError> {
        let mut pipeline = self.pipeline();
        let now = self.clock.now();
        let mut out = Vec::with_capacity(hashes.len());
        let mut fresh = Vec::new();
        for &h in hashes {
            let s = pipeline.submit(h, priority, now)?;
            if s.fresh {
                fresh.push((h, s.receipt.received_at.max(now)));
            }
            out.push(s);
        }
        let mut log = self.announcements();
        for (h, at) in fresh {
            match log.publish(h, at) {
                Ok(entry) => {
                    if let Some(w) = &self.webhook {
                        w.send(entry);
                    }
                }
                Err(e) => tracing::warn!("announcement for {h} not written: {e}"),
            }
        }
        drop(log);
        drop(pipeline);
        if priority {
            self.wake.notify_one();
        }
        Ok(out)
    }

    pub fn tick(&self) -> Result<TickReport, PipelineError> {
        let mut pipeline = self.pipeline();
        let now = self.clock.now();
        pipeline.tick(now)
    }
}
