use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::QAItem;

/// Rewrites question text. Implementations must leave meaning to the caller:
/// only the question string of an item ever changes.
pub trait Paraphraser {
    fn paraphrase(&self, question: &str) -> String;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityParaphraser;

impl Paraphraser for IdentityParaphraser {
    fn paraphrase(&self, question: &str) -> String {
        question.to_owned()
    }
}

/// Replays known (original, paraphrase) pairs; unknown questions pass through.
#[derive(Debug, Clone, Default)]
pub struct ReplayParaphraser {
    pairs: HashMap<String, String>,
}

impl ReplayParaphraser {
    pub fn new<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, S)>,
        S: Into<String>,
    {
        Self {
            pairs: pairs.into_iter().map(|(a, b)| (a.into(), b.into())).collect(),
        }
    }
}

impl Paraphraser for ReplayParaphraser {
    fn paraphrase(&self, question: &str) -> String {
        self.pairs
            .get(question)
            .cloned()
            .unwrap_or_else(|| question.to_owned())
    }
}

#[derive(Serialize)]
struct HttpRequest<'a> {
    text: &'a str,
}

#[derive(Deserialize)]
struct HttpResponse {
    paraphrase: String,
}

/// Client for an external paraphrase service. It POSTs `{"text": ...}` and
/// expects `{"paraphrase": ...}` back. Any failure logs a warning and returns
/// the question unchanged.
#[derive(Debug, Clone)]
pub struct HttpParaphraser {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpParaphraser {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
        }
    }

    fn request(&self, question: &str) -> Result<String, ureq::Error> {
        let response: HttpResponse = self
            .agent
            .post(&self.endpoint)
            .send_json(HttpRequest { text: question })?
            .body_mut()
            .read_json()?;
        Ok(response.paraphrase)
    }
}

impl Paraphraser for HttpParaphraser {
    fn paraphrase(&self, question: &str) -> String {
        match self.request(question) {
            Ok(p) if !p.trim().is_empty() => p,
            Ok(_) => {
                log::warn!("paraphrase service returned an empty text; keeping the original");
                question.to_owned()
            }
            Err(e) => {
                log::warn!("paraphrase service failed ({e}); keeping the original");
                question.to_owned()
            }
        }
    }
}

/// Paraphrases every item's question; function, answer, tables and spec are
/// carried over untouched.
pub fn paraphrase_items(items: &[QAItem], paraphraser: &dyn Paraphraser) -> Vec<QAItem> {
    items
        .iter()
        .map(|item| QAItem {
            question: paraphraser.paraphrase(&item.question),
            ..item.clone()
        })
        .collect()
}
