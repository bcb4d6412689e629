//! Public announcement log: one line per fresh submission, published right
//! after it is accepted and before any commitment exists.
//!
//! Announcements are evidence that a hash was seen, not proof of its time;
//! the verifier never consults them.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chainstamp::{Digest32, Timestamp};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sink {
    PublicLog,
    Webhook,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AnnouncementEntry {
    pub document_hash: Digest32,
    pub announced_at: Timestamp,
    pub sink: Sink,
}

/// `"<RFC3339> <64hex>\n"`.
pub fn format_line(entry: &AnnouncementEntry) -> String {
    format!("{} {}\n", entry.announced_at, entry.document_hash)
}

pub fn parse_line(line: &str) -> Option<(Timestamp, Digest32)> {
    let (time, hash) = line.trim_end_matches('\n').split_once(' ')?;
    Some((Timestamp::parse_rfc3339(time).ok()?, hash.parse().ok()?))
}

#[derive(Debug, Default)]
pub struct AnnouncementLog {
    file: Option<File>,
    path: Option<PathBuf>,
    entries: Vec<AnnouncementEntry>,
}

impl AnnouncementLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens the log, reloading earlier public-log entries. An unparseable
    /// final line (an interrupted write) is cut off.
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = Vec::new();
        if path.exists() {
            let mut good_len = 0u64;
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                match parse_line(&line) {
                    Some((announced_at, document_hash)) => entries.push(AnnouncementEntry {
                        document_hash,
                        announced_at,
                        sink: Sink::PublicLog,
                    }),
                    None => break,
                }
                good_len += line.len() as u64 + 1;
            }
            let f = OpenOptions::new().write(true).open(&path)?;
            if f.metadata()?.len() > good_len {
                f.set_len(good_len)?;
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self {
            file: Some(file),
            path: Some(path),
            entries,
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn publish(
        &mut self,
        document_hash: Digest32,
        announced_at: Timestamp,
    ) -> std::io::Result<AnnouncementEntry> {
        let entry = AnnouncementEntry {
            document_hash,
            announced_at,
            sink: Sink::PublicLog,
        };
        if let Some(f) = self.file.as_mut() {
            f.write_all(format_line(&entry).as_bytes())?;
            f.sync_data()?;
        }
        self.entries.push(entry.clone());
        Ok(entry)
    }

    /// Notes a delivered webhook. Kept in memory only.
    pub fn record_webhook(&mut self, document_hash: Digest32, announced_at: Timestamp) {
        self.entries.push(AnnouncementEntry {
            document_hash,
            announced_at,
            sink: Sink::Webhook,
        });
    }

    pub fn entries(&self) -> &[AnnouncementEntry] {
        &self.entries
    }
}

/// Posts each announcement as JSON to `url`, one at a time on a worker
/// thread so deliveries keep submission order. Failures are logged and not
/// retried.
pub struct Webhook {
    tx: std::sync::mpsc::Sender<AnnouncementEntry>,
}

impl Webhook {
    pub fn start(url: String, delivered: impl Fn(&AnnouncementEntry) + Send + 'static) -> Self {
        let (tx, rx) = std::sync::mpsc::channel::<AnnouncementEntry>();
        std::thread::spawn(move || {
            let agent = ureq::Agent::new_with_defaults();
            for entry in rx {
                let body = serde_json::json!({
                    "document_hash": entry.document_hash,
                    "announced_at": entry.announced_at,
                });
                match agent.post(&url).send_json(&body) {
                    Ok(_) => delivered(&entry),
                    Err(e) => tracing::warn!("webhook for {} failed: {e}", entry.document_hash),
                }
            }
        });
        Self { tx }
    }

    pub fn send(&self, entry: AnnouncementEntry) {
        let _ = self.tx.send(entry);
    }
}
