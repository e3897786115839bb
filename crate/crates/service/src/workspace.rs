//! Workspace state: the config being edited, synthesis loops awaiting
//! review, disambiguation sessions and the log of applied insertions.

use std::collections::BTreeMap;

use routeplace_core::disambiguator::{
    Choice, DisambiguationError, DisambiguationSession, InsertionProblem, SearchMode, SessionState,
};
use routeplace_core::model::Config;
use routeplace_core::parser::{parse_config, parse_stanza_snippet, print_config};
use routeplace_core::synthesizer::{LoopOutcome, QueryKind};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// First 16 hex digits of the SHA-256 of `parts` joined by newlines.
pub fn content_id(parts: &[&str]) -> String {
    let digest = Sha256::digest(parts.join("\n").as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Review {
    Pending,
    Approved,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LoopRecord {
    pub intent: String,
    pub kind: QueryKind,
    pub outcome: LoopOutcome,
    pub review: Review,
}

/// What a finished session did to the workspace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Applied {
    pub final_config: String,
    pub diff: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionRecord {
    pub target_map: String,
    pub snippet: String,
    /// Canonical config text when the session started.
    pub base_text: String,
    pub session: DisambiguationSession,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub applied: Option<Applied>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditEntry {
    pub session_id: String,
    pub target_map: String,
    pub snippet: String,
    pub mode: SearchMode,
    pub answers: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Workspace {
    pub id: String,
    /// Config text exactly as uploaded.
    pub original_text: String,
    /// Canonical print of the current config.
    pub config_text: String,
    /// Bumped for every loop or session created; feeds their ids.
    pub counter: u64,
    pub loops: BTreeMap<String, LoopRecord>,
    pub sessions: BTreeMap<String, SessionRecord>,
    pub audit: Vec<AuditEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplayError {
    #[error("stored config text does not parse: {0}")]
    Parse(String),
    #[error("audit entry {index}: {source}")]
    Insertion { index: usize, source: DisambiguationError },
    #[error("audit entry {index}: recorded answers do not finish the session")]
    Unfinished { index: usize },
    #[error("audit replay gives a different config than the stored one")]
    Mismatch,
}

fn parse(text: &str) -> Result<Config, ReplayError> {
    parse_config(text).map_err(|e| ReplayError::Parse(format!("{e:?}")))
}

impl Workspace {
    pub fn new(id: String, original_text: String, config: &Config) -> Self {
        Self {
            id,
            original_text,
            config_text: print_config(config),
            counter: 0,
            loops: BTreeMap::new(),
            sessions: BTreeMap::new(),
            audit: Vec::new(),
        }
    }

    pub fn config(&self) -> Config {
        parse_config(&self.config_text).expect("stored config text is canonical")
    }

    pub fn next_id(&mut self) -> String {
        self.counter += 1;
        content_id(&[&self.id, &self.counter.to_string()])
    }

    /// Re-applies every logged insertion to the original config.
    pub fn replay(&self) -> Result<String, ReplayError> {
        let mut config = parse(&self.original_text)?;
        for (index, entry) in self.audit.iter().enumerate() {
            let err = |source| ReplayError::Insertion { index, source };
            let snippet = parse_stanza_snippet(&entry.snippet).map_err(|e| ReplayError::Parse(format!("{e:?}")))?;
            let problem = InsertionProblem::new(&config, &entry.target_map, &snippet).map_err(err)?;
            let mut session = DisambiguationSession::start(problem, entry.mode).map_err(err)?;
            for &choice in &entry.answers {
                session.answer(choice).map_err(err)?;
            }
            if !matches!(session.state, SessionState::Done { .. }) {
                return Err(ReplayError::Unfinished { index });
            }
            config = session.result().expect("done").map_err(err)?;
        }
        Ok(print_config(&config))
    }

    /// Fails unless replaying the audit log reproduces the stored config.
    pub fn check_replay(&self) -> Result<(), ReplayError> {
        if self.replay()? == self.config_text {
            Ok(())
        } else {
            Err(ReplayError::Mismatch)
        }
    }
}

/// Unified diff from `old` to `new`.
pub fn unified_diff(old: &str, new: &str) -> String {
    similar::TextDiff::from_lines(old, new).unified_diff().context_radius(3).header("original", "updated").to_string()
}
