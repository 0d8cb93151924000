//! Line-delimited JSON adapter for model servers.
//!
//! Each request is one line `{"op": ..., "payload": ...}`; each response is
//! one line `{"ok": true, "result": ...}` or `{"ok": false, "error": ...}`.
//!
//! | op | payload | result |
//! |----|---------|--------|
//! | `model_info` | `{}` | `{vocabSize, sentenceEndIds, contextWindow}` |
//! | `tokenize` | `{text}` | `[id, ...]` |
//! | `detokenize` | `{ids}` | `"text"` |
//! | `next_token_distribution` | `{prompt, generated}` | `[p, ...]` |
//! | `infer` | `{sentence, relations, beamWidth}` | `{relation: [phrase, ...]}` |
//! | `encode` | `{phrase}` | `[x, ...]` |
//! | `synonyms` / `antonyms` | `{phrase}` | `[phrase, ...]` |
//! | `subject_of` | `{sentence}` | `"[Char_n]"` or `null` |
//!
//! The decoding loop runs locally so the lexical bias transform can be
//! applied between the server's distribution and sampling.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::sync::{Arc, Mutex};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::lexical::RuleMorphology;
use super::sampler::{NextTokenModel, TokenSampler};
use super::{
    build_inference_set, Backends, BackendError, CommonsenseModel, EmbeddingVector, Encoder, Lexicon, SubjectParser,
    TokenDistribution, TokenId, Tokenizer,
};
use crate::relation::RelationType;
use crate::story::InferenceSet;
use crate::tag::CharacterTag;
use crate::text::Stopwords;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub op: String,
    pub payload: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn success(result: Value) -> Self {
        Self { ok: true, result: Some(result), error: None }
    }

    pub fn failure(error: impl Into<String>) -> Self {
        Self { ok: false, result: None, error: Some(error.into()) }
    }
}

struct Connection {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

/// One persistent connection; requests are serialized through a mutex and
/// the connection is re-established after an I/O failure.
pub struct RemoteClient {
    addr: String,
    conn: Mutex<Option<Connection>>,
}

impl RemoteClient {
    pub fn new(addr: impl Into<String>) -> Self {
        Self { addr: addr.into(), conn: Mutex::new(None) }
    }

    fn open(&self) -> Result<Connection, BackendError> {
        let stream = TcpStream::connect(&self.addr)
            .map_err(|e| BackendError::Unavailable(format!("{}: {e}", self.addr)))?;
        let writer = stream.try_clone().map_err(|e| BackendError::Unavailable(e.to_string()))?;
        Ok(Connection { reader: BufReader::new(stream), writer })
    }

    pub fn call(&self, op: &str, payload: Value) -> Result<Value, BackendError> {
        let mut line = serde_json::to_string(&Request { op: op.to_string(), payload })
            .map_err(|e| BackendError::Protocol(e.to_string()))?;
        line.push('\n');
        let mut guard = self.conn.lock().expect("connection lock poisoned");
        if guard.is_none() {
            *guard = Some(self.open()?);
        }
        let conn = guard.as_mut().expect("connection just opened");
        let mut reply = String::new();
        let io = conn
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| conn.writer.flush())
            .and_then(|_| conn.reader.read_line(&mut reply));
        match io {
            Ok(0) => {
                *guard = None;
                return Err(BackendError::Unavailable(format!("{} closed the connection", self.addr)));
            }
            Ok(_) => {}
            Err(e) => {
                *guard = None;
                return Err(BackendError::Unavailable(format!("{}: {e}", self.addr)));
            }
        }
        drop(guard);
        let response: Response =
            serde_json::from_str(reply.trim_end()).map_err(|e| BackendError::Protocol(format!("bad response line: {e}")))?;
        if response.ok {
            response.result.ok_or_else(|| BackendError::Protocol("ok response without result".into()))
        } else {
            Err(BackendError::Remote(response.error.unwrap_or_else(|| "unspecified error".into())))
        }
    }

    fn call_as<T: DeserializeOwned>(&self, op: &str, payload: Value) -> Result<T, BackendError> {
        let value = self.call(op, payload)?;
        serde_json::from_value(value).map_err(|e| BackendError::Protocol(format!("{op}: {e}")))
    }
}

/// Commonsense inference, encoding, lexicon, and parsing over the wire.
#[derive(Clone)]
pub struct RemoteBackend {
    client: Arc<RemoteClient>,
}

impl RemoteBackend {
    pub fn new(client: Arc<RemoteClient>) -> Self {
        Self { client }
    }
}

impl CommonsenseModel for RemoteBackend {
    fn infer(&self, sentence: &str, relations: &[RelationType], beam_width: usize) -> Result<InferenceSet, BackendError> {
        let names: Vec<&str> = relations.iter().map(RelationType::name).collect();
        let raw: BTreeMap<String, Vec<String>> = self.client.call_as(
            "infer",
            json!({ "sentence": sentence, "relations": names, "beamWidth": beam_width }),
        )?;
        Ok(build_inference_set(
            sentence,
            |rel: &RelationType| raw.get(rel.name()).into_iter().flatten().map(String::as_str),
            relations,
            beam_width,
        ))
    }
}

impl Encoder for RemoteBackend {
    fn encode(&self, phrase: &str) -> Result<EmbeddingVector, BackendError> {
        let components: Vec<f64> = self.client.call_as("encode", json!({ "phrase": phrase }))?;
        EmbeddingVector::normalized(components)
            .ok_or_else(|| BackendError::Protocol("encoder returned a zero vector".into()))
    }
}

impl Lexicon for RemoteBackend {
    fn synonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError> {
        let mut out: BTreeSet<String> = self.client.call_as("synonyms", json!({ "phrase": phrase }))?;
        out.remove("");
        Ok(out)
    }

    fn antonyms(&self, phrase: &str) -> Result<BTreeSet<String>, BackendError> {
        let synonyms = self.synonyms(phrase)?;
        let out: BTreeSet<String> = self.client.call_as("antonyms", json!({ "phrase": phrase }))?;
        Ok(out.into_iter().filter(|a| !a.is_empty() && !synonyms.contains(a)).collect())
    }
}

impl SubjectParser for RemoteBackend {
    fn subject_of(&self, sentence: &str) -> Option<CharacterTag> {
        match self.client.call_as::<Option<String>>("subject_of", json!({ "sentence": sentence })) {
            Ok(tag) => tag.and_then(|t| t.parse().ok()),
            Err(e) => {
                log::warn!("subject_of failed, treating as no subject: {e}");
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelInfo {
    pub vocab_size: usize,
    pub sentence_end_ids: Vec<TokenId>,
    pub context_window: usize,
}

/// Tokenizer and next-token distribution served remotely.
#[derive(Clone)]
pub struct RemoteTokenModel {
    client: Arc<RemoteClient>,
    info: ModelInfo,
}

impl RemoteTokenModel {
    /// Fetches `model_info` once.
    pub fn connect(client: Arc<RemoteClient>) -> Result<Self, BackendError> {
        let info = client.call_as("model_info", json!({}))?;
        Ok(Self { client, info })
    }

    pub fn info(&self) -> &ModelInfo {
        &self.info
    }
}

impl Tokenizer for RemoteTokenModel {
    fn encode(&self, text: &str) -> Result<Vec<TokenId>, BackendError> {
        self.client.call_as("tokenize", json!({ "text": text }))
    }

    fn decode(&self, ids: &[TokenId]) -> Result<String, BackendError> {
        self.client.call_as("detokenize", json!({ "ids": ids }))
    }

    fn vocab_size(&self) -> usize {
        self.info.vocab_size
    }

    fn is_sentence_end(&self, id: TokenId) -> bool {
        self.info.sentence_end_ids.contains(&id)
    }
}

impl NextTokenModel for RemoteTokenModel {
    fn tokenizer(&self) -> &dyn Tokenizer {
        self
    }

    fn context_window(&self) -> usize {
        self.info.context_window
    }

    fn next_token_distribution(&self, prompt: &[TokenId], generated: &[TokenId]) -> Result<TokenDistribution, BackendError> {
        let probs: Vec<f64> =
            self.client.call_as("next_token_distribution", json!({ "prompt": prompt, "generated": generated }))?;
        if probs.len() != self.info.vocab_size {
            return Err(BackendError::Protocol(format!(
                "distribution has {} entries, vocabulary has {}",
                probs.len(),
                self.info.vocab_size
            )));
        }
        TokenDistribution::from_weights(probs)
    }
}

/// Every learned component served from `addr`; morphology and stopwords
/// stay local.
pub fn remote_backends(addr: &str) -> Result<Backends, BackendError> {
    let client = Arc::new(RemoteClient::new(addr));
    let lm = RemoteTokenModel::connect(client.clone())?;
    let remote = Arc::new(RemoteBackend::new(client));
    Ok(Backends {
        tokenizer: Arc::new(lm.clone()),
        language_model: Arc::new(TokenSampler::new(lm)),
        commonsense: remote.clone(),
        encoder: remote.clone(),
        lexicon: remote.clone(),
        morphology: RuleMorphology::builtin(),
        parser: remote,
        stopwords: Arc::new(Stopwords::builtin().clone()),
    })
}

/// Serves one connection until EOF, answering each request line with
/// `handler`. Useful for tests and for thin server shims.
pub fn serve_connection<F>(stream: TcpStream, mut handler: F) -> std::io::Result<()>
where
    F: FnMut(&str, &Value) -> Result<Value, String>,
{
    let mut writer = stream.try_clone()?;
    for line in BufReader::new(stream).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Ok(req) => match handler(&req.op, &req.payload) {
                Ok(v) => Response::success(v),
                Err(e) => Response::failure(e),
            },
            Err(e) => Response::failure(format!("bad request: {e}")),
        };
        let mut out = serde_json::to_string(&response).map_err(std::io::Error::other)?;
        out.push('\n');
        writer.write_all(out.as_bytes())?;
    }
    Ok(())
}
