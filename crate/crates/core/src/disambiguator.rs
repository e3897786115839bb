//! Placing a new stanza into an existing route-map.
//!
//! Only stanzas that can be the first match for some route the new stanza
//! would handle differently matter for placement. Those form the chain
//! `o1..ok`; slots between two consecutive chain elements are behaviorally
//! identical, so there are `k + 1` distinct positions. A binary search over
//! them asks the operator one question per step, each showing a route and
//! the two verdicts it could get.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{self, differs, regions, EngineError, Outcome, Position, Verdict};
use crate::model::*;
use crate::parser::Snippet;
use crate::render::{render_route, render_verdict};
use crate::symbolic::{stanza_space, RouteSpace};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "error")]
pub enum DisambiguationError {
    #[error("no fresh list name is left")]
    NameCollision,
    #[error("the session has already finished")]
    SessionFinished,
    #[error("intent choices do not cover chain stanza {seq}")]
    IncompleteIntent { seq: u32 },
    #[error("position {position} is outside 0..={k}")]
    PositionOutOfRange { position: usize, k: usize },
    #[error("{message}")]
    Engine { message: String },
}

impl From<EngineError> for DisambiguationError {
    fn from(e: EngineError) -> Self {
        DisambiguationError::Engine { message: e.to_string() }
    }
}

/// Smallest `D<n>` not in `taken`.
fn fresh_name(taken: &BTreeSet<String>) -> Result<String, DisambiguationError> {
    (0..=u32::MAX).map(|n| format!("D{n}")).find(|n| !taken.contains(n)).ok_or(DisambiguationError::NameCollision)
}

/// A target map plus the stanza to insert. The candidate's lists are
/// renamed to fresh names and merged into `config` on construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct InsertionProblem {
    pub config: Config,
    pub map_name: String,
    pub candidate: Stanza,
}

impl InsertionProblem {
    /// A missing target map is treated as an empty one.
    pub fn new(config: &Config, map_name: &str, snippet: &Snippet) -> Result<Self, DisambiguationError> {
        let mut config = config.clone();
        let mut taken: BTreeSet<String> = config.list_names().into_iter().map(str::to_string).collect();
        let mut renames: BTreeMap<(ListKind, String), String> = BTreeMap::new();
        let mut candidate = snippet.stanza.clone();
        for m in &mut candidate.matches {
            if let Some((kind, name)) = m.list_ref_mut() {
                let key = (kind, name.clone());
                if !renames.contains_key(&key) {
                    let fresh = fresh_name(&taken)?;
                    taken.insert(fresh.clone());
                    renames.insert(key.clone(), fresh);
                }
                *name = renames[&key].clone();
            }
        }
        let lists = &snippet.lists;
        for ((kind, old), new) in &renames {
            match kind {
                ListKind::Prefix => {
                    if let Some(l) = lists.prefix_lists.get(old) {
                        config.prefix_lists.insert(new.clone(), PrefixList { name: new.clone(), ..l.clone() });
                    }
                }
                ListKind::Community => {
                    if let Some(l) = lists.community_lists.get(old) {
                        config.community_lists.insert(new.clone(), CommunityList { name: new.clone(), ..l.clone() });
                    }
                }
                ListKind::AsPath => {
                    if let Some(l) = lists.as_path_lists.get(old) {
                        config.as_path_lists.insert(new.clone(), AsPathList { name: new.clone(), ..l.clone() });
                    }
                }
            }
        }
        config
            .route_maps
            .entry(map_name.to_string())
            .or_insert_with(|| RouteMap { name: map_name.to_string(), stanzas: Vec::new() });
        Ok(Self { config, map_name: map_name.to_string(), candidate })
    }

    pub fn target(&self) -> &RouteMap {
        &self.config.route_maps[&self.map_name]
    }

    pub fn candidate_outcome(&self) -> Outcome {
        Outcome::of_stanza(&self.candidate)
    }

    /// What the candidate alone does with `r`.
    pub fn candidate_verdict(&self, r: &Route) -> Verdict {
        self.candidate_outcome().verdict(r, Position::Seq(self.candidate.seq))
    }

    pub fn candidate_space(&self) -> Result<RouteSpace, DisambiguationError> {
        stanza_space(&self.candidate, &self.config).map_err(|e| EngineError::from(e).into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainLink {
    pub seq: u32,
    /// First-matched by `seq` in the target, matched by the candidate, and
    /// handled differently by the two.
    pub witness: Route,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SkippedStanza {
    pub seq: u32,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OverlapChain {
    pub links: Vec<ChainLink>,
    /// Stanzas whose differential region exists only for AS paths longer
    /// than the witness bound.
    pub inconclusive: Vec<SkippedStanza>,
}

impl OverlapChain {
    pub fn seqs(&self) -> Vec<u32> {
        self.links.iter().map(|l| l.seq).collect()
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }
}

/// Target stanzas, in order, that first-match some route the candidate
/// matches and treats differently.
pub fn build_chain(p: &InsertionProblem) -> Result<OverlapChain, DisambiguationError> {
    let target = p.target();
    let star = p.candidate_space()?;
    let star_outcome = p.candidate_outcome();
    let mentioned = p.config.mentioned_communities();
    let mut chain = OverlapChain::default();
    for region in regions(target, &p.config)? {
        let Position::Seq(seq) = region.position else { continue };
        let space = region.reach.intersect(&star).intersect(&differs(&region.outcome, &star_outcome, &mentioned));
        match space.witness() {
            Ok(Some(witness)) => chain.links.push(ChainLink { seq, witness }),
            Ok(None) => {}
            Err(e) => chain.inconclusive.push(SkippedStanza { seq, reason: e.to_string() }),
        }
    }
    Ok(chain)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Choice {
    /// Keep the existing stanza's behavior.
    Existing,
    /// Use the new stanza's behavior.
    New,
}

impl std::str::FromStr for Choice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "existing" | "old" | "2" => Ok(Choice::Existing),
            "new" | "1" => Ok(Choice::New),
            other => Err(format!("expected `new` or `existing`, got `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Question {
    pub seq: u32,
    pub witness: Route,
    /// Current behavior, decided by stanza `seq`.
    pub option_a: Verdict,
    /// Behavior under the new stanza.
    pub option_b: Verdict,
}

impl Question {
    /// Input route, then OPTION 1 (new behavior) and OPTION 2 (existing).
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = write!(
            out,
            "Input route:\n{}\nOPTION 1:\n{}\nOPTION 2:\n{}",
            render_route(&self.witness),
            render_verdict(&self.option_b),
            render_verdict(&self.option_a)
        );
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SearchMode {
    /// ⌈log2(k+1)⌉ questions.
    Binary,
    /// One question per chain element, then a consistency check.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Answer {
    pub seq: u32,
    pub choice: Choice,
}

/// Two answers no single insertion point satisfies: the candidate must
/// come before `new_seq` yet after the later `existing_seq`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ViolationEvidence {
    pub new_seq: u32,
    pub new_witness: Route,
    pub existing_seq: u32,
    pub existing_witness: Route,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "state")]
pub enum SessionState {
    Pending {
        question: Question,
    },
    /// `position` counts chain elements before the candidate; `slot` is the
    /// index in the target's stanza list.
    #[serde(rename_all = "camelCase")]
    Done {
        position: usize,
        slot: usize,
        note: Option<String>,
    },
    Infeasible {
        evidence: ViolationEvidence,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DisambiguationSession {
    pub problem: InsertionProblem,
    pub chain: OverlapChain,
    pub mode: SearchMode,
    pub lo: usize,
    pub hi: usize,
    pub answers: Vec<Answer>,
    pub state: SessionState,
}

/// Stanza-list index for a chain position: right before `o_{p+1}`, or the
/// end of the map when `p = k`.
pub fn slot_for(p: &InsertionProblem, chain: &OverlapChain, position: usize) -> Result<usize, DisambiguationError> {
    let k = chain.len();
    if position > k {
        return Err(DisambiguationError::PositionOutOfRange { position, k });
    }
    let stanzas = &p.target().stanzas;
    Ok(match chain.links.get(position) {
        Some(link) => stanzas.iter().position(|s| s.seq == link.seq).expect("chain stanza in target"),
        None => stanzas.len(),
    })
}

fn question(p: &InsertionProblem, link: &ChainLink) -> Question {
    Question {
        seq: link.seq,
        witness: link.witness.clone(),
        option_a: engine::evaluate(p.target(), &link.witness, &p.config),
        option_b: p.candidate_verdict(&link.witness),
    }
}

impl DisambiguationSession {
    pub fn start(problem: InsertionProblem, mode: SearchMode) -> Result<Self, DisambiguationError> {
        let chain = build_chain(&problem)?;
        let k = chain.len();
        let mut s = Self {
            problem,
            chain,
            mode,
            lo: 0,
            hi: k,
            answers: Vec::new(),
            state: SessionState::Done { position: 0, slot: 0, note: None },
        };
        s.advance()?;
        Ok(s)
    }

    pub fn pending(&self) -> Option<&Question> {
        match &self.state {
            SessionState::Pending { question } => Some(question),
            _ => None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.pending().is_none()
    }

    pub fn questions_asked(&self) -> usize {
        self.answers.len()
    }

    /// ⌈log2(k+1)⌉.
    pub fn question_bound(&self) -> usize {
        let n = self.chain.len() + 1;
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }

    fn finish(&mut self, position: usize) -> Result<(), DisambiguationError> {
        let slot = slot_for(&self.problem, &self.chain, position)?;
        let note = self
            .chain
            .is_empty()
            .then(|| "no stanza interacts with the new one; any position works, chose the end".to_string());
        self.state = SessionState::Done { position, slot, note };
        Ok(())
    }

    fn advance(&mut self) -> Result<(), DisambiguationError> {
        match self.mode {
            SearchMode::Binary => {
                if self.lo == self.hi {
                    return self.finish(self.lo);
                }
                let m = (self.lo + self.hi).div_ceil(2);
                let q = question(&self.problem, &self.chain.links[m - 1]);
                self.state = SessionState::Pending { question: q };
            }
            SearchMode::Exhaustive => {
                let i = self.answers.len();
                if i < self.chain.len() {
                    let q = question(&self.problem, &self.chain.links[i]);
                    self.state = SessionState::Pending { question: q };
                    return Ok(());
                }
                match check_intent_conditions(&self.chain, &self.answers)? {
                    IntentCheck::Ok { position } => {
                        self.lo = position;
                        self.hi = position;
                        self.finish(position)?;
                    }
                    IntentCheck::Violated { evidence } => self.state = SessionState::Infeasible { evidence },
                }
            }
        }
        Ok(())
    }

    pub fn answer(&mut self, choice: Choice) -> Result<&SessionState, DisambiguationError> {
        let Some(q) = self.pending() else { return Err(DisambiguationError::SessionFinished) };
        let seq = q.seq;
        self.answers.push(Answer { seq, choice });
        if self.mode == SearchMode::Binary {
            let m = (self.lo + self.hi).div_ceil(2);
            match choice {
                Choice::Existing => self.lo = m,
                Choice::New => self.hi = m - 1,
            }
        }
        self.advance()?;
        Ok(&self.state)
    }

    /// The config with the candidate inserted, once the session is done.
    pub fn result(&self) -> Option<Result<Config, DisambiguationError>> {
        match self.state {
            SessionState::Done { position, .. } => Some(insert_stanza(&self.problem, &self.chain, position)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", tag = "result")]
pub enum IntentCheck {
    Ok { position: usize },
    Violated { evidence: ViolationEvidence },
}

/// A single insertion point exists iff the `existing` answers form a
/// prefix of the chain; the prefix length is the position.
pub fn check_intent_conditions(chain: &OverlapChain, answers: &[Answer]) -> Result<IntentCheck, DisambiguationError> {
    let choices: BTreeMap<u32, Choice> = answers.iter().map(|a| (a.seq, a.choice)).collect();
    let mut per_link = Vec::with_capacity(chain.len());
    for link in &chain.links {
        let c = *choices.get(&link.seq).ok_or(DisambiguationError::IncompleteIntent { seq: link.seq })?;
        per_link.push((link, c));
    }
    let position = per_link.iter().take_while(|(_, c)| *c == Choice::Existing).count();
    let late_existing = per_link[position..].iter().find(|(_, c)| *c == Choice::Existing);
    Ok(match late_existing {
        None => IntentCheck::Ok { position },
        Some((existing, _)) => {
            let new = per_link[position].0;
            IntentCheck::Violated {
                evidence: ViolationEvidence {
                    new_seq: new.seq,
                    new_witness: new.witness.clone(),
                    existing_seq: existing.seq,
                    existing_witness: existing.witness.clone(),
                },
            }
        }
    })
}

/// Splices the candidate in at `position` and renumbers the map 10, 20, ...
pub fn insert_stanza(
    p: &InsertionProblem,
    chain: &OverlapChain,
    position: usize,
) -> Result<Config, DisambiguationError> {
    let slot = slot_for(p, chain, position)?;
    insert_at_slot(p, slot)
}

/// Like [`insert_stanza`] but at a raw stanza-list index.
pub fn insert_at_slot(p: &InsertionProblem, slot: usize) -> Result<Config, DisambiguationError> {
    let mut config = p.config.clone();
    let map = config.route_maps.get_mut(&p.map_name).expect("target map exists");
    let slot = slot.min(map.stanzas.len());
    map.stanzas.insert(slot, p.candidate.clone());
    for (i, s) in map.stanzas.iter_mut().enumerate() {
        s.seq = (i as u32 + 1) * 10;
    }
    Ok(config)
}
