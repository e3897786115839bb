//! Non-interactive end-to-end runs: synthesize a stanza for each intent,
//! then place it with pre-recorded answers. Used to build whole router
//! configs from scratch reproducibly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::disambiguator::{
    Choice, DisambiguationError, DisambiguationSession, InsertionProblem, Question, SearchMode, SessionState,
};
use crate::model::Config;
use crate::parser::parse_stanza_snippet;
use crate::synthesizer::{
    classify_query, run_repair_loop, GeneratorPlugin, LoopOutcome, QueryKind, SynthesisError, SynthesisRequest,
};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Step {
    pub router: String,
    pub map: String,
    pub intent: String,
    #[serde(default)]
    pub answers: Vec<Choice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct StepReport {
    pub router: String,
    pub map: String,
    pub attempts: usize,
    pub questions: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PipelineError {
    #[error("step {step}: intent is not a route-map request ({kind:?})")]
    NotRouteMap { step: usize, kind: QueryKind },
    #[error("step {step}: {source}")]
    Synthesis { step: usize, source: SynthesisError },
    #[error("step {step}: synthesis punted after {attempts} attempts: {feedback}")]
    Punted { step: usize, attempts: usize, feedback: String },
    #[error("step {step}: {source}")]
    Disambiguation { step: usize, source: DisambiguationError },
    #[error("step {step}: no recorded answer for the question on stanza {}", question.seq)]
    MissingAnswer { step: usize, question: Box<Question> },
    #[error("step {step}: {unused} recorded answers were not needed")]
    UnusedAnswers { step: usize, unused: usize },
    #[error("step {step}: placement is infeasible")]
    Infeasible { step: usize },
}

/// Runs `steps` in order against per-router configs that start empty.
pub fn run_steps(
    steps: &[Step],
    plugin: &dyn GeneratorPlugin,
    threshold: usize,
) -> Result<(BTreeMap<String, Config>, Vec<StepReport>), PipelineError> {
    let mut routers: BTreeMap<String, Config> = BTreeMap::new();
    let mut reports = Vec::with_capacity(steps.len());
    for (i, step) in steps.iter().enumerate() {
        let kind = plugin.classify(&step.intent).unwrap_or_else(|| classify_query(&step.intent));
        if kind != QueryKind::RouteMap {
            return Err(PipelineError::NotRouteMap { step: i, kind });
        }
        let req = SynthesisRequest::new(step.intent.clone(), kind);
        let outcome =
            run_repair_loop(&req, plugin, threshold).map_err(|source| PipelineError::Synthesis { step: i, source })?;
        let (snippet_text, attempts) = match outcome {
            LoopOutcome::Verified { snippet, attempts, .. } => (snippet, attempts),
            LoopOutcome::Punted { attempts, last_feedback, .. } => {
                return Err(PipelineError::Punted { step: i, attempts, feedback: last_feedback })
            }
        };
        let snippet = parse_stanza_snippet(&snippet_text).expect("verified snippets parse");
        let config = routers.entry(step.router.clone()).or_default();
        let dis = |source| PipelineError::Disambiguation { step: i, source };
        let problem = InsertionProblem::new(config, &step.map, &snippet).map_err(dis)?;
        let mut session = DisambiguationSession::start(problem, SearchMode::Binary).map_err(dis)?;
        let mut answers = step.answers.iter();
        while let Some(q) = session.pending() {
            let Some(&choice) = answers.next() else {
                return Err(PipelineError::MissingAnswer { step: i, question: Box::new(q.clone()) });
            };
            session.answer(choice).map_err(dis)?;
        }
        let unused = answers.count();
        if unused > 0 {
            return Err(PipelineError::UnusedAnswers { step: i, unused });
        }
        if let SessionState::Infeasible { .. } = session.state {
            return Err(PipelineError::Infeasible { step: i });
        }
        *config = session.result().expect("session done").map_err(dis)?;
        reports.push(StepReport {
            router: step.router.clone(),
            map: step.map.clone(),
            attempts,
            questions: session.questions_asked(),
        });
    }
    Ok((routers, reports))
}
