//! Reader for the grammar text format.
//!
//! ```text
//! atoms sg pl nom acc ;
//! cat S/0 NP/2 VP/1 Det/1 N/1 ;
//! start S ;
//! rule r1 : S() -> NP(X, nom) VP(X) ;
//! rule r3 : NP(X, C) -> NP(X, C) PP()* ;
//! word the : Det(X) ;
//! word "," : Comma ;
//! ```
//!
//! In argument position a name is an atom if declared as one, otherwise a
//! variable if it starts with an uppercase letter or `_` (a lone `_` is
//! anonymous), otherwise a nullary functor. Comments run from `#` to the end
//! of the line.

use std::collections::BTreeMap;

use super::{Daughter, Grammar, GrammarError, Rule};
use crate::term::{Category, Signature, Term, TermError, DEFAULT_MAX_DEPTH};

#[derive(Clone, Debug)]
pub struct GrammarOptions {
    /// Maximum category nesting depth.
    pub max_depth: usize,
}

impl Default for GrammarOptions {
    fn default() -> Self {
        GrammarOptions {
            max_depth: DEFAULT_MAX_DEPTH,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Star,
    Arrow,
    Semi,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, GrammarError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let mut chars = line.char_indices().peekable();
        while let Some(&(i, c)) = chars.peek() {
            match c {
                '#' => break,
                c if c.is_whitespace() => {
                    chars.next();
                }
                '(' | ')' | ',' | ':' | '*' | ';' => {
                    chars.next();
                    let t = match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        '*' => Tok::Star,
                        _ => Tok::Semi,
                    };
                    out.push((t, line_no));
                }
                '-' if line[i..].starts_with("->") => {
                    chars.next();
                    chars.next();
                    out.push((Tok::Arrow, line_no));
                }
                '"' => {
                    chars.next();
                    let mut s = String::new();
                    let mut closed = false;
                    for (_, c) in chars.by_ref() {
                        if c == '"' {
                            closed = true;
                            break;
                        }
                        s.push(c);
                    }
                    if !closed {
                        return Err(GrammarError::Syntax {
                            line: line_no,
                            msg: "unterminated quoted word".into(),
                        });
                    }
                    out.push((Tok::Quoted(s), line_no));
                }
                _ => {
                    let mut s = String::new();
                    while let Some(&(j, c)) = chars.peek() {
                        if c.is_whitespace()
                            || "(),:*;#\"".contains(c)
                            || (c == '-' && line[j..].starts_with("->"))
                        {
                            break;
                        }
                        s.push(c);
                        chars.next();
                    }
                    out.push((Tok::Name(s), line_no));
                }
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    sig: Signature,
    vars: Vec<String>,
    anon: u32,
}

impl<'a> Reader<'a> {
    fn line(&self) -> usize {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map_or(0, |t| t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, GrammarError> {
        Err(GrammarError::Syntax {
            line: self.line(),
            msg: msg.into(),
        })
    }

    fn term_err(&self, e: TermError) -> GrammarError {
        GrammarError::Term {
            line: self.line(),
            source: e,
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), GrammarError> {
        match self.peek() {
            Some(t) if *t == want => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn name(&mut self, what: &str) -> Result<String, GrammarError> {
        match self.peek() {
            Some(Tok::Name(n)) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            _ => self.err(format!("expected {what}")),
        }
    }

    fn var(&mut self, name: &str) -> Term {
        if name == "_" {
            // anonymous variables get ids above every named one; renumbered later
            self.anon += 1;
            return Term::Var(u32::MAX / 2 + self.anon);
        }
        match self.vars.iter().position(|v| v == name) {
            Some(i) => Term::Var(i as u32),
            None => {
                self.vars.push(name.to_string());
                Term::Var(self.vars.len() as u32 - 1)
            }
        }
    }

    fn category(&mut self) -> Result<Category, GrammarError> {
        let name = self.name("a category")?;
        let f = self
            .sig
            .functor(&name)
            .ok_or_else(|| self.term_err(TermError::UnknownFunctor(name.clone())))?;
        let args = if self.peek() == Some(&Tok::LParen) {
            self.args()?
        } else {
            Vec::new()
        };
        Category::new(&self.sig, f, args).map_err(|e| self.term_err(e))
    }

    fn args(&mut self) -> Result<Vec<Term>, GrammarError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.arg()?);
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => {
                    self.pos -= 1;
                    return self.err("expected `,` or `)` in argument list");
                }
            }
        }
        Ok(args)
    }

    fn arg(&mut self) -> Result<Term, GrammarError> {
        let name = self.name("an argument")?;
        if self.peek() == Some(&Tok::LParen) {
            let f = self
                .sig
                .functor(&name)
                .ok_or_else(|| self.term_err(TermError::UnknownFunctor(name.clone())))?;
            let args = self.args()?;
            return Ok(Term::App(f, args));
        }
        if let Some(a) = self.sig.atom(&name) {
            return Ok(Term::Atom(a));
        }
        let first = name.chars().next().unwrap_or('a');
        if first.is_uppercase() || first == '_' {
            return Ok(self.var(&name));
        }
        if let Some(f) = self.sig.functor(&name) {
            return Ok(Term::App(f, Vec::new()));
        }
        Err(self.term_err(TermError::UnknownAtom(name)))
    }
}

pub(super) fn parse_grammar(text: &str, options: &GrammarOptions) -> Result<Grammar, GrammarError> {
    let toks = lex(text)?;
    let mut r = Reader {
        toks: &toks,
        pos: 0,
        sig: Signature::new(options.max_depth),
        vars: Vec::new(),
        anon: 0,
    };
    let mut rules = Vec::new();
    let mut start: Option<(String, usize)> = None;
    let mut lexicon: BTreeMap<String, Vec<Category>> = BTreeMap::new();

    while r.peek().is_some() {
        let kw = r.name("a statement keyword")?;
        r.vars.clear();
        r.anon = 0;
        match kw.as_str() {
            "atoms" => {
                while let Some(Tok::Name(n)) = r.peek() {
                    let n = n.clone();
                    r.pos += 1;
                    r.sig.add_atom(&n).map_err(|e| r.term_err(e))?;
                }
            }
            "cat" => {
                while let Some(Tok::Name(n)) = r.peek() {
                    let n = n.clone();
                    let Some((name, arity)) = n.rsplit_once('/') else {
                        return r.err(format!("expected functor/arity, got `{n}`"));
                    };
                    let Ok(arity) = arity.parse::<usize>() else {
                        return r.err(format!("bad arity in `{n}`"));
                    };
                    r.pos += 1;
                    r.sig.add_functor(name, arity).map_err(|e| r.term_err(e))?;
                }
            }
            "start" => {
                let line = r.line();
                start = Some((r.name("a start functor")?, line));
            }
            "rule" => {
                let id = r.name("a rule id")?;
                r.expect(Tok::Colon, "`:` after rule id")?;
                let mother = r.category()?;
                r.expect(Tok::Arrow, "`->`")?;
                let mut daughters = Vec::new();
                while let Some(Tok::Name(_)) = r.peek() {
                    let category = r.category()?;
                    let kleene = r.peek() == Some(&Tok::Star);
                    if kleene {
                        r.pos += 1;
                    }
                    daughters.push(Daughter { category, kleene });
                }
                rules.push(Rule::new(id, mother, daughters));
            }
            "word" => {
                let word = match r.next() {
                    Some(Tok::Name(w)) | Some(Tok::Quoted(w)) => w,
                    _ => {
                        r.pos -= 1;
                        return r.err("expected a word");
                    }
                };
                r.expect(Tok::Colon, "`:` after word")?;
                let c = r.category()?;
                lexicon.entry(word).or_default().push(c);
            }
            other => return r.err(format!("unknown statement `{other}`")),
        }
        r.expect(Tok::Semi, "`;` at end of statement")?;
    }

    let (start_name, line) = start.ok_or(GrammarError::MissingStart)?;
    let start = r.sig.functor(&start_name).ok_or(GrammarError::Term {
        line,
        source: TermError::UnknownFunctor(start_name),
    })?;
    let sig = r.sig;
    Grammar::new(sig, rules, start, lexicon)
}
