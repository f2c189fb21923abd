//! Named prompt templates with `{placeholder}` substitution.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

pub const CLAIM_DETECTION: &str = "claim_detection";
pub const QUESTION_DECOMPOSITION: &str = "question_decomposition";
pub const STANCE: &str = "stance";
pub const JUSTIFICATION: &str = "justification";
pub const CORRECTION: &str = "correction";

const BUILTIN: &[(&str, &str)] = &[
    (
        CLAIM_DETECTION,
        "You label sentences written in language \"{language}\".\n\
         A sentence is check-worthy when it states something the public could verify \
         and is not an opinion, belief or question.\n\
         Answer with a JSON array containing one 0 or 1 per sentence, in order, and nothing else.\n\n\
         Sentences:\n{sentences}\n",
    ),
    (
        QUESTION_DECOMPOSITION,
        "Write up to {max_questions} short search questions, in language \"{language}\", \
         whose answers would verify the following claim.\n\
         Answer with a JSON array of strings and nothing else.\n\n\
         Claim: {claim}\n",
    ),
    (
        STANCE,
        "Claim ({language}): {claim}\n\nEvidence: {evidence}\n\n\
         Does the evidence support or refute the claim? Answer with exactly one word: \
         supports or refutes.\n",
    ),
    (
        JUSTIFICATION,
        "Summarize the evidence below in language \"{language}\" as a short justification \
         for the verdict \"{verdict}\" on the claim. Cite sources by title or site.\n\n\
         Claim: {claim}\n\nEvidence:\n{evidence}\n",
    ),
    (
        CORRECTION,
        "The following claim was found to be false. Using only the justification, rewrite \
         the claim in language \"{language}\" so that it is accurate. Answer with the \
         corrected sentence only.\n\nClaim: {claim}\n\nJustification: {justification}\n",
    ),
];

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("unknown prompt template {0:?}")]
    Unknown(String),
    #[error("template {template:?} needs a value for {{{placeholder}}}")]
    MissingVariable { template: String, placeholder: String },
    #[error("reading templates: {0}")]
    Io(#[from] std::io::Error),
}

fn placeholder_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\{([a-z_][a-z0-9_]*)\}").expect("valid regex"))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: String,
    pub text: String,
}

impl PromptTemplate {
    pub fn placeholders(&self) -> BTreeSet<&str> {
        placeholder_re()
            .captures_iter(&self.text)
            .map(|c| c.get(1).expect("group").as_str())
            .collect()
    }

    pub fn fingerprint(&self) -> String {
        crate::provider::fingerprint([self.id.as_bytes(), self.text.as_bytes()])
    }

    /// Substitute every placeholder; fails if any has no value.
    pub fn render(&self, vars: &BTreeMap<&str, String>) -> Result<String, TemplateError> {
        if let Some(missing) = self.placeholders().into_iter().find(|p| !vars.contains_key(p)) {
            return Err(TemplateError::MissingVariable {
                template: self.id.clone(),
                placeholder: missing.to_string(),
            });
        }
        Ok(placeholder_re()
            .replace_all(&self.text, |c: &regex::Captures<'_>| vars[&c[1]].clone())
            .into_owned())
    }
}

/// Templates keyed by id. Starts with the built-in set; files override them.
#[derive(Debug, Clone)]
pub struct TemplateRegistry {
    templates: BTreeMap<String, PromptTemplate>,
}

impl Default for TemplateRegistry {
    fn default() -> Self {
        let templates = BUILTIN
            .iter()
            .map(|(id, text)| (id.to_string(), PromptTemplate { id: id.to_string(), text: text.to_string() }))
            .collect();
        Self { templates }
    }
}

impl TemplateRegistry {
    pub fn insert(&mut self, id: impl Into<String>, text: impl Into<String>) {
        let id = id.into();
        self.templates.insert(id.clone(), PromptTemplate { id, text: text.into() });
    }

    /// Load every `*.txt` file in `dir`; the file stem is the template id.
    pub fn load_dir(&mut self, dir: impl AsRef<Path>) -> Result<usize, TemplateError> {
        let mut n = 0;
        let mut entries: Vec<_> = std::fs::read_dir(dir)?.collect::<Result<_, _>>()?;
        entries.sort_by_key(|e| e.path());
        for entry in entries {
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("txt") {
                continue;
            }
            let Some(id) = path.file_stem().and_then(|s| s.to_str()) else { continue };
            let text = std::fs::read_to_string(&path)?;
            self.insert(id, text);
            n += 1;
        }
        Ok(n)
    }

    pub fn get(&self, id: &str) -> Result<&PromptTemplate, TemplateError> {
        self.templates.get(id).ok_or_else(|| TemplateError::Unknown(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.templates.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}
