//! Recipe text to function sequence through a text-generation backend.
//!
//! The prompt is a fixed few-shot template. Backend output is free text; the
//! sequence is pulled out of it line by line.

use std::fs::OpenOptions;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fixtures::KNOWN_RECIPES;
use crate::funcseq::{parse_sequence, CookingFunction, FuncSeqError, FunctionSequence};

/// Environment variable holding the live-backend credential.
pub const API_KEY_ENV: &str = "RECIPE_LLM_API_KEY";

#[derive(Debug, thiserror::Error, Clone, PartialEq)]
pub enum ExtractError {
    #[error("no cooking-function call found in the output")]
    NoCalls,
    #[error("output line {line} `{text}`: {source}")]
    Parse {
        line: usize,
        text: String,
        source: FuncSeqError,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ConvertError {
    #[error("recipe text is empty")]
    EmptyRecipe,
    #[error("at least one exemplar is required")]
    NoExemplars,
    #[error("exemplar {0}: recipe text is empty")]
    EmptyExemplar(usize),
    #[error("{API_KEY_ENV} is not set")]
    MissingCredential,
    #[error("backend rejected the credential (HTTP {0})")]
    Auth(u16),
    #[error("backend answered HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("backend timed out after {0:.1} s")]
    Timeout(f64),
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("malformed backend response: {0}")]
    BadResponse(String),
    #[error("fixture directory {0} does not exist")]
    FixtureDirMissing(PathBuf),
    #[error("no fixture response {0}")]
    FixtureMissing(PathBuf),
    #[error("extraction failed: {0}")]
    Extraction(#[from] ExtractError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Exemplar {
    pub recipe_text: String,
    pub sequence: FunctionSequence,
}

impl Exemplar {
    /// The three shipped egg recipes.
    pub fn known() -> Vec<Exemplar> {
        KNOWN_RECIPES
            .iter()
            .map(|r| Exemplar {
                recipe_text: r.text.to_string(),
                sequence: r.sequence(),
            })
            .collect()
    }
}

/// Few-shot prompt: instruction, the function signatures, the exemplar
/// pairs in order, then the target recipe.
pub fn build_prompt(exemplars: &[Exemplar], recipe: &str) -> Result<String, ConvertError> {
    let recipe = recipe.trim();
    if recipe.is_empty() {
        return Err(ConvertError::EmptyRecipe);
    }
    if exemplars.is_empty() {
        return Err(ConvertError::NoExemplars);
    }
    let mut p = String::new();
    p.push_str(
        "Translate the cooking recipe into cooking functions a robot can execute.\n\
         Use only these functions:\n",
    );
    for f in CookingFunction::ALL {
        p.push_str("  ");
        p.push_str(&f.signature());
        p.push('\n');
    }
    p.push_str(
        "Write one numbered line per step, `N. function(arguments), function(arguments)`, \
         and start a new step where the recipe starts a new paragraph. \
         Name target states freely, for example boiled-water.\n",
    );
    for (i, ex) in exemplars.iter().enumerate() {
        let text = ex.recipe_text.trim();
        if text.is_empty() {
            return Err(ConvertError::EmptyExemplar(i + 1));
        }
        p.push_str(&format!("\n### Example {}\nRecipe:\n{text}\nFunctions:\n{}", i + 1, ex.sequence));
    }
    p.push_str("\n### Task\nRecipe:\n");
    p.push_str(recipe);
    p.push('\n');
    Ok(p)
}

/// Pull a function sequence out of free-form model output.
///
/// Lines whose content (after bullets, `Step N:` or `N.` markers and inline
/// code marks) starts with `name(` are taken as calls; everything else is
/// ignored. A marker or any skipped line between two call lines starts a new
/// step. Steps are renumbered from 1.
pub fn extract_sequence(output: &str) -> Result<FunctionSequence, ExtractError> {
    let mut steps = Vec::new();
    let mut current: Vec<crate::funcseq::FunctionCall> = Vec::new();
    let mut gap = true;
    for (n, raw) in output.lines().enumerate() {
        let (marker, content) = split_marker(raw);
        let Some(calls) = call_text(&content) else {
            gap = true;
            continue;
        };
        if (marker || gap) && !current.is_empty() {
            steps.push(std::mem::take(&mut current));
        }
        gap = false;
        let parsed = parse_sequence(&calls).map_err(|source| ExtractError::Parse {
            line: n + 1,
            text: raw.trim().to_string(),
            source,
        })?;
        current.extend(parsed.steps.into_iter().flatten());
    }
    if !current.is_empty() {
        steps.push(current);
    }
    if steps.is_empty() {
        return Err(ExtractError::NoCalls);
    }
    Ok(FunctionSequence { steps })
}

/// Strip bullets, emphasis and a leading step marker.
fn split_marker(line: &str) -> (bool, String) {
    let cleaned = line.replace("**", "").replace('`', "");
    let mut s = cleaned.trim();
    for b in ["- ", "* ", "+ ", "• "] {
        if let Some(rest) = s.strip_prefix(b) {
            s = rest.trim_start();
            break;
        }
    }
    let lower = s.to_ascii_lowercase();
    let (after_word, worded) = match lower.strip_prefix("step") {
        Some(rest) if rest.starts_with(|c: char| c.is_whitespace() || c.is_ascii_digit()) => {
            (s.len() - rest.trim_start().len(), true)
        }
        _ => (0, false),
    };
    let body = &s[after_word..];
    let digits = body.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &body[digits..];
        let punct = rest.chars().next();
        if worded || matches!(punct, Some('.' | ')' | ':')) {
            let rest = rest.trim_start_matches(['.', ')', ':', '-']).trim_start();
            return (true, rest.to_string());
        }
    }
    (false, s.to_string())
}

/// Normalized call list if `content` starts with `name(`.
fn call_text(content: &str) -> Option<String> {
    let norm: String = content
        .trim()
        .chars()
        .map(|c| match c {
            '_' => '-',
            c => c.to_ascii_lowercase(),
        })
        .collect();
    let name_len = norm
        .chars()
        .take_while(|c| c.is_ascii_alphanumeric() || *c == '-')
        .count();
    if name_len == 0 || !norm[name_len..].trim_start().starts_with('(') {
        return None;
    }
    let t = norm.trim_end_matches(['.', ';', ',', ' ']);
    Some(t.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendMode {
    Live,
    Fixture,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackendConfig {
    pub mode: BackendMode,
    /// Chat-completion URL (live mode).
    pub endpoint: String,
    pub model: String,
    pub timeout: f64,
    /// Holds `<sha256(recipe)>.txt` responses (fixture mode).
    pub fixture_dir: PathBuf,
}

impl BackendConfig {
    pub fn fixture(dir: impl Into<PathBuf>) -> Result<Self, ConvertError> {
        let dir = dir.into();
        if !dir.is_dir() {
            return Err(ConvertError::FixtureDirMissing(dir));
        }
        Ok(Self {
            mode: BackendMode::Fixture,
            endpoint: String::new(),
            model: "fixture".into(),
            timeout: 0.0,
            fixture_dir: dir,
        })
    }

    pub fn live(endpoint: impl Into<String>, model: impl Into<String>, timeout: f64) -> Self {
        Self {
            mode: BackendMode::Live,
            endpoint: endpoint.into(),
            model: model.into(),
            timeout,
            fixture_dir: PathBuf::new(),
        }
    }
}

pub fn recipe_hash(recipe: &str) -> String {
    hex::encode(Sha256::digest(recipe.as_bytes()))
}

pub fn fixture_path(dir: &Path, recipe: &str) -> PathBuf {
    dir.join(format!("{}.txt", recipe_hash(recipe)))
}

/// One backend round trip, as persisted in the transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub recipe_sha256: String,
    pub mode: BackendMode,
    pub model: String,
    pub prompt: String,
    pub response: String,
}

impl Transcript {
    pub fn append_to(&self, path: &Path) -> Result<(), ConvertError> {
        let io = |source| ConvertError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut line = serde_json::to_string(self).expect("transcript serializes");
        line.push('\n');
        // One write per record: O_APPEND keeps concurrent writers from interleaving.
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .and_then(|mut f| f.write_all(line.as_bytes()))
            .map_err(io)
    }

    pub fn read_all(path: &Path) -> Result<Vec<Transcript>, ConvertError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConvertError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(|e| ConvertError::BadResponse(e.to_string())))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversion {
    pub sequence: FunctionSequence,
    pub transcript: Transcript,
}

/// Build the prompt, query the backend once and extract the sequence.
pub fn convert(
    recipe: &str,
    exemplars: &[Exemplar],
    backend: &BackendConfig,
) -> Result<Conversion, ConvertError> {
    let prompt = build_prompt(exemplars, recipe)?;
    let response = match backend.mode {
        BackendMode::Fixture => fixture_response(backend, recipe)?,
        BackendMode::Live => {
            let key = std::env::var(API_KEY_ENV)
                .ok()
                .filter(|k| !k.trim().is_empty())
                .ok_or(ConvertError::MissingCredential)?;
            live_response(backend, &key, &prompt)?
        }
    };
    let sequence = extract_sequence(&response)?;
    Ok(Conversion {
        sequence,
        transcript: Transcript {
            recipe_sha256: recipe_hash(recipe),
            mode: backend.mode,
            model: backend.model.clone(),
            prompt,
            response,
        },
    })
}

fn fixture_response(backend: &BackendConfig, recipe: &str) -> Result<String, ConvertError> {
    if !backend.fixture_dir.is_dir() {
        return Err(ConvertError::FixtureDirMissing(backend.fixture_dir.clone()));
    }
    let path = fixture_path(&backend.fixture_dir, recipe);
    match std::fs::read_to_string(&path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(ConvertError::FixtureMissing(path)),
        Err(source) => Err(ConvertError::Io { path, source }),
    }
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage<'a>; 1],
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    content: String,
}

fn live_response(backend: &BackendConfig, key: &str, prompt: &str) -> Result<String, ConvertError> {
    let timeout = backend.timeout;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_secs_f64(timeout)))
        .http_status_as_error(false)
        .build()
        .into();
    let body = serde_json::to_string(&ChatRequest {
        model: &backend.model,
        temperature: 0.0,
        messages: [ChatMessage {
            role: "user",
            content: prompt,
        }],
    })
    .expect("request serializes");
    let transport = |e: ureq::Error| match e {
        ureq::Error::Timeout(_) => ConvertError::Timeout(timeout),
        ureq::Error::Io(io) if io.kind() == std::io::ErrorKind::TimedOut => ConvertError::Timeout(timeout),
        e => ConvertError::Transport(e.to_string()),
    };
    let mut resp = agent
        .post(&backend.endpoint)
        .header("Authorization", &format!("Bearer {key}"))
        .content_type("application/json")
        .send(body)
        .map_err(transport)?;
    let status = resp.status().as_u16();
    let text = resp.body_mut().read_to_string().map_err(transport)?;
    match status {
        200..=299 => {}
        401 | 403 => return Err(ConvertError::Auth(status)),
        _ => return Err(ConvertError::Http { status, body: text }),
    }
    let parsed: ChatResponse =
        serde_json::from_str(&text).map_err(|e| ConvertError::BadResponse(e.to_string()))?;
    parsed
        .choices
        .into_iter()
        .next()
        .map(|c| c.message.content)
        .ok_or_else(|| ConvertError::BadResponse("no choices".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::BROCCOLI;

    #[test]
    fn prompt_layout() {
        let ex = Exemplar::known();
        let p = build_prompt(&ex, BROCCOLI.text).unwrap();
        for e in &ex {
            assert!(p.contains(&e.sequence.to_string()));
        }
        assert!(p.ends_with(&format!("{}\n", BROCCOLI.text.trim())));
        assert!(p.contains("mix(ingredient, ingredient, mixture, vessel, tool)"));
        assert_eq!(p, build_prompt(&ex, BROCCOLI.text).unwrap());
        assert!(matches!(build_prompt(&ex[..1], "  \n"), Err(ConvertError::EmptyRecipe)));
        assert!(matches!(build_prompt(&[], "x"), Err(ConvertError::NoExemplars)));
    }

    #[test]
    fn markers_and_bullets() {
        assert_eq!(split_marker("Step 2: pour(a, b)"), (true, "pour(a, b)".into()));
        assert_eq!(split_marker("**Step 3**"), (true, "".into()));
        assert_eq!(split_marker("  - `heat(a, b)`"), (false, "heat(a, b)".into()));
        assert_eq!(split_marker("4) boil(a, b)"), (true, "boil(a, b)".into()));
        assert_eq!(split_marker("Steps are below"), (false, "Steps are below".into()));
        assert_eq!(call_text("Stir_Fry(a, b, c)."), Some("stir-fry(a, b, c)".into()));
        assert_eq!(call_text("Here is the sequence:"), None);
    }

    #[test]
    fn extraction_groups_steps() {
        let out = "Sure.\n\nStep 1:\n- pour(water, pot)\n- turn-on-stove(pot)\n\nStep 2:\n- heat(water, boiled-water)\n\nDone.";
        let fs = extract_sequence(out).unwrap();
        assert_eq!(fs, parse_sequence("1. pour(water, pot), turn-on-stove(pot)\n2. heat(water, boiled-water)").unwrap());
        let fs = extract_sequence("pour(a, b)\nheat(a, c)\n\nboil(a, d)").unwrap();
        assert_eq!(fs.steps.len(), 2);
        let fs = extract_sequence("7. pour(a, b),\n   heat(a, c)\n9. boil(a, d)").unwrap();
        assert_eq!(fs.steps.iter().map(Vec::len).collect::<Vec<_>>(), [2, 1]);
    }

    #[test]
    fn extraction_errors() {
        assert_eq!(extract_sequence("I cannot help with that."), Err(ExtractError::NoCalls));
        match extract_sequence("Here:\n1. pour(a, b)\n2. saute(a, c)") {
            Err(ExtractError::Parse { line, text, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(text, "2. saute(a, c)");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn fixture_backend_is_keyed_by_hash() {
        let dir = tempfile::tempdir().unwrap();
        let recipe = "Boil water.";
        std::fs::write(fixture_path(dir.path(), recipe), "1. heat(water, boiled-water)\n").unwrap();
        let b = BackendConfig::fixture(dir.path()).unwrap();
        let c = convert(recipe, &Exemplar::known(), &b).unwrap();
        assert_eq!(c.sequence.steps.len(), 1);
        assert!(matches!(
            convert("Boil water!", &Exemplar::known(), &b),
            Err(ConvertError::FixtureMissing(_))
        ));
        let log = dir.path().join("t.jsonl");
        c.transcript.append_to(&log).unwrap();
        c.transcript.append_to(&log).unwrap();
        let back = Transcript::read_all(&log).unwrap();
        assert_eq!(back, vec![c.transcript.clone(), c.transcript]);
        assert!(BackendConfig::fixture(dir.path().join("nope")).is_err());
    }
}
