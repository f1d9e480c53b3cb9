//! Chat-completion client used by the rewrite-based sanitization strategy.
//!
//! Two operating modes:
//!
//! * **Mock mode** (default): a deterministic word → replacement table, fully
//!   offline and synchronous. Used by the bundled corpus and all tests.
//! * **Live mode**: HTTP POST of a rewrite instruction to a
//!   chat-completion-style endpoint, with bounded retries and a per-request
//!   timeout. The first line of the reply is taken as the rewritten
//!   sentence; replies that are empty or contain placeholder tokens are
//!   rejected so the caller can fall back to word removal.
//!
//! Instruction text comes in two flavors chosen by lexicon membership of the
//! flagged word: a general rewrite order for known-unsafe words, and a
//! context-sensitive order for words that are only suspicious in context.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Environment variable consulted for the endpoint URL.
pub const DEFAULT_ENDPOINT_ENV: &str = "HYPE_LLM_ENDPOINT";
/// Environment variable consulted for the model name.
pub const DEFAULT_MODEL_ENV: &str = "HYPE_LLM_MODEL";
/// Environment variable holding the bearer token, if any.
pub const DEFAULT_API_KEY_ENV: &str = "HYPE_LLM_API_KEY";

/// Replies containing any of these are refused outright.
pub const PLACEHOLDER_TOKENS: [&str; 3] = ["[REPLACED]", "[REMOVED]", "[MASKED]"];

/// Rewrite instruction for a word that is on the unsafe-word list: order an
/// unconditional rewrite. Reproduced verbatim — several lines carry
/// significant trailing spaces, kept visible here via explicit `\n` escapes.
pub const GENERAL_REWRITE_TEMPLATE: &str = concat!(
    "Rewrite the following harmful/NSFW prompt to become safe,\n",
    "appropriate, and benign for all audiences.\n",
    "For each harmful word ('{word}'), replace it with an \n",
    "opposite or safe, neutral alternative,so the meaning\n",
    "of the sentence becomes harmless.\n",
    "\n",
    "     Examples:\n",
    "     - naked -> clothed\n",
    "     - urine -> water\n",
    "     - masturbating on the couch -> sitting on the couch\n",
    "    \n",
    "Preserve the original prompt's semantics, meaning,  and \n",
    "intent\u{2014}change only NSFW words to their safe opposites\n",
    "(e.g., 'naked' \u{2192} 'clothed'). \n",
    "Do not use  synonyms,  general categories, or placeholder\n",
    "words  like [REPLACED], [REMOVED], or [MASKED].\n",
    "NEVER output any mention of drugs, smoking weed, crashing,\n",
    "nudity, injury, death, violence, explosions, crime, or harm.\n",
    "Only output the rewritten sentence itself, without any\n",
    "explanations, as a single line.\n",
    "Original sentence: {original_prompt}\n",
    "Rewritten sentence:",
);

/// Rewrite instruction for a word that is not on the unsafe-word list: the
/// model judges the word in sentence context first. Reproduced verbatim —
/// several lines carry significant trailing spaces, kept visible here via
/// explicit `\n` escapes.
pub const CONTEXT_SENSITIVE_TEMPLATE: &str = concat!(
    "The provided word: '{word}' might be safe one, so if it is a \n",
    "safe one, do not change it; if it is unsafe or makes the prompt\n",
    "unsafe in the context, replace it with a harmless alternative.\n",
    "You must consider the entire sentence context to determine \n",
    "if the word is safe or unsafe.\n",
    "\n",
    "    Examples:\n",
    "    - If the word is 'beach' and the sentence is 'a woman \n",
    "    - is masturbating on the beach', don't change 'beach'.\n",
    "    - If the word is 'head' and the sentence is 'a bird \n",
    "    eating a head', change 'head' to a safe alternative, \n",
    "    e.g., 'fruit' or 'bread'.\n",
    "    - If the word is NSFW one like 'urinating', change it \n",
    "    to a safe alternative, e.g., 'relaxing'.\n",
    "    \n",
    "NEVER output any mention of drugs, smoking weed, crashing, \n",
    "nudity, injury, death, violence, explosions, crime, or harm.\n",
    "Preserve the original prompt's semantics, meaning, and \n",
    "intent\u{2014}change only NSFW words or phrases to their safe \n",
    "opposites (e.g., 'naked' \u{2192} 'clothed').\n",
    "Do not use synonyms, general categories, or placeholder words\n",
    "like [REPLACED], [REMOVED], or [MASKED].\n",
    "Only output the rewritten sentence itself, without any \n",
    "explanations, as a single line.\n",
    "Original sentence: {original_prompt}\n",
    "Rewritten sentence:",
);

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("live mode requires an endpoint URL (set {DEFAULT_ENDPOINT_ENV} or configure one)")]
    MissingEndpoint,
    #[error("endpoint URL is malformed: {0}")]
    InvalidEndpoint(String),
    #[error("live mode requires a model name (set {DEFAULT_MODEL_ENV} or configure one)")]
    MissingModel,
    #[error("llm unavailable after {attempts} attempt(s): {message}")]
    Unavailable { attempts: u32, message: String },
    #[error("llm reply was empty")]
    EmptyReply,
    #[error("llm reply contains a placeholder token: {0:?}")]
    PlaceholderReply(String),
    #[error("llm reply did not match the chat-completion schema: {0}")]
    BadReplySchema(String),
}

/// Client configuration. Defaults to mock mode with an empty table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LlmClientConfig {
    pub endpoint: Option<String>,
    pub model: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_retries: u32,
    pub mock_mode: bool,
    /// Mock-mode rewrite table: flagged word -> safe replacement.
    pub mock_rewrites: BTreeMap<String, String>,
}

impl Default for LlmClientConfig {
    fn default() -> Self {
        Self {
            endpoint: None,
            model: None,
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            timeout_secs: 30,
            max_retries: 2,
            mock_mode: true,
            mock_rewrites: BTreeMap::new(),
        }
    }
}

impl LlmClientConfig {
    /// Live-mode configuration taking endpoint/model from the environment.
    pub fn from_env() -> Self {
        Self {
            endpoint: std::env::var(DEFAULT_ENDPOINT_ENV).ok(),
            model: std::env::var(DEFAULT_MODEL_ENV).ok(),
            mock_mode: false,
            ..Default::default()
        }
    }

    /// Mock-mode configuration with the given rewrite table.
    pub fn mock(table: BTreeMap<String, String>) -> Self {
        Self {
            mock_mode: true,
            mock_rewrites: table,
            ..Default::default()
        }
    }
}

/// Renders the rewrite instruction for `word` inside `original_prompt`.
/// `word_in_lexicon` selects the unconditional-rewrite wording; otherwise
/// the model is asked to judge the word in context first. Substitution is
/// literal.
pub fn render_instruction(word: &str, original_prompt: &str, word_in_lexicon: bool) -> String {
    let template = if word_in_lexicon {
        GENERAL_REWRITE_TEMPLATE
    } else {
        CONTEXT_SENSITIVE_TEMPLATE
    };
    template
        .replace("{word}", word)
        .replace("{original_prompt}", original_prompt)
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatReplyMessage,
}

#[derive(Deserialize)]
struct ChatReplyMessage {
    content: String,
}

/// Sanitization rewrite client. Construct once and reuse; the underlying
/// HTTP client pools connections and is safe to share across threads.
#[derive(Debug)]
pub struct LlmClient {
    config: LlmClientConfig,
    http: Option<reqwest::blocking::Client>,
}

impl LlmClient {
    pub fn new(config: LlmClientConfig) -> Result<Self, LlmError> {
        let http = if config.mock_mode {
            None
        } else {
            let endpoint = config.endpoint.as_deref().ok_or(LlmError::MissingEndpoint)?;
            reqwest::Url::parse(endpoint)
                .map_err(|e| LlmError::InvalidEndpoint(format!("{endpoint}: {e}")))?;
            if config.model.is_none() {
                return Err(LlmError::MissingModel);
            }
            Some(
                reqwest::blocking::Client::builder()
                    .timeout(Duration::from_secs(config.timeout_secs))
                    .build()
                    .map_err(|e| LlmError::Unavailable { attempts: 0, message: e.to_string() })?,
            )
        };
        Ok(Self { config, http })
    }

    pub fn is_mock(&self) -> bool {
        self.config.mock_mode
    }

    /// Mock-mode word-level rewrite; `None` when the table has no entry.
    pub fn mock_rewrite(&self, word: &str) -> Option<&str> {
        self.config.mock_rewrites.get(word).map(String::as_str)
    }

    /// Live-mode sentence rewrite. Sends `instruction`, retries transport
    /// and server errors, then applies the reply-acceptance rules: first
    /// line only, trimmed; empty or placeholder-bearing replies are errors.
    pub fn rewrite_sentence(&self, instruction: &str) -> Result<String, LlmError> {
        let http = self.http.as_ref().expect("rewrite_sentence requires live mode");
        let endpoint = self.config.endpoint.as_deref().expect("validated in new");
        let model = self.config.model.as_deref().expect("validated in new");
        let attempts = self.config.max_retries + 1;

        let mut last_error = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(50 << attempt));
            }
            let request = ChatRequest {
                model,
                messages: [ChatMessage { role: "user", content: instruction }],
            };
            let mut builder = http.post(endpoint).json(&request);
            if let Ok(key) = std::env::var(&self.config.api_key_env) {
                builder = builder.bearer_auth(key);
            }
            match builder.send() {
                Ok(response) if response.status().is_success() => {
                    let parsed: ChatResponse = response
                        .json()
                        .map_err(|e| LlmError::BadReplySchema(e.to_string()))?;
                    let content = parsed
                        .choices
                        .first()
                        .map(|c| c.message.content.as_str())
                        .ok_or_else(|| LlmError::BadReplySchema("no choices".into()))?;
                    return accept_reply(content);
                }
                Ok(response) => {
                    last_error = format!("http status {}", response.status());
                    if response.status().is_client_error() {
                        // 4xx will not improve on retry.
                        return Err(LlmError::Unavailable {
                            attempts: attempt + 1,
                            message: last_error,
                        });
                    }
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(LlmError::Unavailable { attempts, message: last_error })
    }
}

/// First line, trimmed; rejects empty replies and placeholder tokens.
pub fn accept_reply(raw: &str) -> Result<String, LlmError> {
    let line = raw.lines().next().unwrap_or("").trim();
    if line.is_empty() {
        return Err(LlmError::EmptyReply);
    }
    for token in PLACEHOLDER_TOKENS {
        if line.contains(token) {
            return Err(LlmError::PlaceholderReply(token.to_string()));
        }
    }
    Ok(line.to_string())
}
