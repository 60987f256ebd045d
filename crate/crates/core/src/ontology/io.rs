//! Line format: `<subject> <predicate> <object> .`, one triple per line.
//! Literals are double-quoted with backslash escapes; numbers are bare.

use super::{class, pred, OntologyError, Pattern, Term, Triple, TripleGraph};

/// Asserted triples in canonical order, one per line.
pub fn export_graph(graph: &TripleGraph) -> String {
    let mut out = String::new();
    for t in graph.triples() {
        out.push_str(&t.line());
        out.push('\n');
    }
    out
}

/// Parse the line format. Blank lines and `#` comments are skipped;
/// extension declarations may appear anywhere in the file.
pub fn import_graph(text: &str) -> Result<TripleGraph, OntologyError> {
    let mut parsed = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: String| OntologyError::Parse { line: i + 1, message };
        let toks = tokenize(line, false).map_err(err)?;
        let triple = match toks.as_slice() {
            [Tok::Term(s), Tok::Term(Term::Iri(p)), Tok::Term(o), Tok::Dot] => {
                Triple::new(s.clone(), p, o.clone())
            }
            _ => return Err(err("expected `<subject> <predicate> <object> .`".into())),
        };
        parsed.push((i + 1, triple));
    }
    let mut graph = TripleGraph::new();
    let is_decl = |t: &Triple| {
        t.predicate == pred::RDF_TYPE && t.object == Term::iri(class::PREDICATE)
    };
    let (decls, rest): (Vec<_>, Vec<_>) = parsed.into_iter().partition(|(_, t)| is_decl(t));
    for (line, t) in decls.into_iter().chain(rest) {
        graph.insert(t).map_err(|e| OntologyError::Parse {
            line,
            message: e.to_string(),
        })?;
    }
    Ok(graph)
}

/// Parse a single term: `<id>`, `"literal"`, a number, or a bare id.
pub fn parse_term(text: &str) -> Result<Term, OntologyError> {
    let err = |message: String| OntologyError::Parse { line: 1, message };
    match tokenize(text.trim(), true).map_err(err)?.as_slice() {
        [Tok::Term(t)] => Ok(t.clone()),
        [Tok::Bare(id)] => Ok(Term::Iri(id.clone())),
        _ => Err(err(format!("not a single term: {text:?}"))),
    }
}

/// Parse `s p o` where any position may be `?`. Bare ids are accepted.
pub fn parse_pattern(text: &str) -> Result<Pattern, OntologyError> {
    let err = |message: String| OntologyError::Parse { line: 1, message };
    let toks = tokenize(text.trim(), true).map_err(err)?;
    let toks = match toks.as_slice() {
        [a, b, c] | [a, b, c, Tok::Dot] => [a.clone(), b.clone(), c.clone()],
        _ => return Err(err("pattern needs exactly three positions".into())),
    };
    let term = |t: &Tok| match t {
        Tok::Wild => Ok(None),
        Tok::Term(t) => Ok(Some(t.clone())),
        Tok::Bare(id) => Ok(Some(Term::Iri(id.clone()))),
        Tok::Dot => Err(err("unexpected `.`".into())),
    };
    let predicate = match term(&toks[1])? {
        None => None,
        Some(Term::Iri(p)) => Some(p),
        Some(_) => return Err(err("predicate must be an identifier".into())),
    };
    Ok(Pattern {
        subject: term(&toks[0])?,
        predicate,
        object: term(&toks[2])?,
    })
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Term(Term),
    Bare(String),
    Wild,
    Dot,
}

fn tokenize(line: &str, loose: bool) -> Result<Vec<Tok>, String> {
    let mut toks = Vec::new();
    let mut chars = line.char_indices().peekable();
    while let Some(&(start, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        match c {
            '<' => {
                chars.next();
                let mut id = String::new();
                loop {
                    match chars.next() {
                        Some((_, '>')) => break,
                        Some((_, c)) => id.push(c),
                        None => return Err(format!("unterminated `<` at column {}", start + 1)),
                    }
                }
                super::check_identifier(&id).map_err(|e| e.to_string())?;
                toks.push(Tok::Term(Term::Iri(id)));
            }
            '"' => {
                chars.next();
                let mut text = String::new();
                loop {
                    match chars.next() {
                        Some((_, '"')) => break,
                        Some((i, '\\')) => match chars.next() {
                            Some((_, '"')) => text.push('"'),
                            Some((_, '\\')) => text.push('\\'),
                            Some((_, 'n')) => text.push('\n'),
                            Some((_, 'r')) => text.push('\r'),
                            Some((_, 't')) => text.push('\t'),
                            _ => return Err(format!("bad escape at column {}", i + 1)),
                        },
                        Some((_, c)) => text.push(c),
                        None => return Err(format!("unterminated literal at column {}", start + 1)),
                    }
                }
                toks.push(Tok::Term(Term::Str(text)));
            }
            _ => {
                let mut word = String::new();
                while let Some(&(_, c)) = chars.peek() {
                    if c.is_whitespace() {
                        break;
                    }
                    word.push(c);
                    chars.next();
                }
                toks.push(match word.as_str() {
                    "." => Tok::Dot,
                    "?" if loose => Tok::Wild,
                    _ => match word.parse::<f64>() {
                        Ok(v) if v.is_finite() && !word.chars().any(char::is_alphabetic) => {
                            Tok::Term(Term::Num(v))
                        }
                        _ if loose => {
                            super::check_identifier(&word).map_err(|e| e.to_string())?;
                            Tok::Bare(word)
                        }
                        _ => return Err(format!("unexpected token {word:?} at column {}", start + 1)),
                    },
                });
            }
        }
    }
    Ok(toks)
}
