//! Types shared by the parsing engines.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use thiserror::Error;

use crate::backbone::{BackboneError, BackboneSpec};
use crate::bulc::{BulcOptions, BulcParser};
use crate::ce::{CeOptions, CeParser};
use crate::forest::{PackedForest, ParseTree};
use crate::glr::{GlrOptions, GlrParser};
use crate::grammar::{Grammar, KleeneMap};
use crate::stats::ParseStats;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("empty input")]
    EmptyInput,
    #[error("unknown word `{token}` at position {position}")]
    UnknownWord { token: String, position: usize },
    #[error("parse table was built for grammar {expected:016x}, not {found:016x}")]
    TableMismatch { expected: u64, found: u64 },
}

/// The result of parsing one sentence.
#[derive(Clone, Debug)]
pub struct ParseOutcome {
    pub forest: PackedForest,
    pub stats: ParseStats,
    /// Occupied share of the (state, start, end) item index (CE only).
    pub fill_ratio: Option<f64>,
}

impl ParseOutcome {
    pub fn accepted(&self) -> bool {
        !self.forest.roots().is_empty()
    }
}

/// Splits a sentence on whitespace.
pub fn tokenize(sentence: &str) -> Vec<String> {
    sentence.split_whitespace().map(str::to_string).collect()
}

/// Rejects empty input and tokens without lexical entries.
pub(crate) fn check_tokens(grammar: &Grammar, tokens: &[String]) -> Result<(), ParseError> {
    if tokens.is_empty() {
        return Err(ParseError::EmptyInput);
    }
    for (position, token) in tokens.iter().enumerate() {
        if grammar.lookup(token).is_none() {
            return Err(ParseError::UnknownWord {
                token: token.clone(),
                position,
            });
        }
    }
    Ok(())
}

/// The three parsing engines behind one interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EngineKind {
    Bulc,
    Glr,
    Ce,
}

impl EngineKind {
    pub const ALL: [EngineKind; 3] = [EngineKind::Bulc, EngineKind::Glr, EngineKind::Ce];

    pub fn name(self) -> &'static str {
        match self {
            EngineKind::Bulc => "bulc",
            EngineKind::Glr => "glr",
            EngineKind::Ce => "ce",
        }
    }
}

impl fmt::Display for EngineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EngineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "bulc" => Ok(EngineKind::Bulc),
            "glr" => Ok(EngineKind::Glr),
            "ce" => Ok(EngineKind::Ce),
            other => Err(format!(
                "unknown engine `{other}` (expected bulc, glr or ce)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EngineConfig {
    pub backbone: BackboneSpec,
    /// Partial-analysis cache of the table-driven engines.
    pub cache: bool,
    pub occurs_check: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            backbone: BackboneSpec::new(),
            cache: true,
            occurs_check: true,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Parser {
    Bulc(BulcParser),
    Glr(GlrParser),
    Ce(CeParser),
}

impl Parser {
    pub fn new(
        kind: EngineKind,
        g: &Grammar,
        config: &EngineConfig,
    ) -> Result<Parser, BackboneError> {
        Ok(match kind {
            EngineKind::Bulc => Parser::Bulc(BulcParser::new(
                g,
                BulcOptions {
                    occurs_check: config.occurs_check,
                    ..BulcOptions::default()
                },
            )),
            EngineKind::Glr => Parser::Glr(GlrParser::new(
                g,
                &config.backbone,
                GlrOptions {
                    cache: config.cache,
                    occurs_check: config.occurs_check,
                },
            )?),
            EngineKind::Ce => Parser::Ce(CeParser::new(
                g,
                &config.backbone,
                CeOptions {
                    cache: config.cache,
                    occurs_check: config.occurs_check,
                    ..CeOptions::default()
                },
            )?),
        })
    }

    pub fn kind(&self) -> EngineKind {
        match self {
            Parser::Bulc(_) => EngineKind::Bulc,
            Parser::Glr(_) => EngineKind::Glr,
            Parser::Ce(_) => EngineKind::Ce,
        }
    }

    pub fn parse(&self, tokens: &[String]) -> Result<ParseOutcome, ParseError> {
        match self {
            Parser::Bulc(p) => p.parse(tokens),
            Parser::Glr(p) => p.parse(tokens),
            Parser::Ce(p) => p.parse(tokens),
        }
    }

    /// The grammar the forests' rule indices refer to.
    pub fn grammar(&self) -> &Grammar {
        match self {
            Parser::Bulc(p) => p.grammar(),
            Parser::Glr(p) => p.grammar(),
            Parser::Ce(p) => p.grammar(),
        }
    }

    pub fn kleene(&self) -> &KleeneMap {
        match self {
            Parser::Bulc(p) => p.kleene(),
            Parser::Glr(p) => p.kleene(),
            Parser::Ce(p) => p.kleene(),
        }
    }

    pub fn unpack(&self, outcome: &ParseOutcome, limit: usize) -> Vec<ParseTree> {
        outcome.forest.unpack(self.grammar(), self.kleene(), limit)
    }

    /// Number of valid analyses, independent of any unpacking limit.
    pub fn parse_count(&self, outcome: &ParseOutcome) -> BigUint {
        outcome.forest.parse_count(self.grammar(), self.kleene())
    }
}
