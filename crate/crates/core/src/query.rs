//! Cohesive keyword queries.
//!
//! ```text
//! Q -> (k) | T
//! T -> (S S)
//! S -> S S | T | k
//! ```
//!
//! A bare whitespace-separated list at top level, e.g. `xml (john smith)`,
//! is accepted as shorthand for one enclosing term.

use std::fmt;

use crate::ingest::tokenize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccurrenceId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Child {
    Keyword(OccurrenceId),
    Term(TermId),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeywordOccurrence {
    pub keyword: String,
    pub id: OccurrenceId,
    pub parent: TermId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub id: TermId,
    pub children: Vec<Child>,
    pub depth: usize,
    pub parent: Option<TermId>,
}

/// Parsed query. Term 0 is the outer query term; occurrences are numbered
/// left to right and repeated keywords get distinct occurrences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryAst {
    terms: Vec<Term>,
    occurrences: Vec<KeywordOccurrence>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryStats {
    /// Keyword occurrences.
    pub keywords: usize,
    /// Terms excluding the outer query term.
    pub terms: usize,
    /// Largest number of children of any term, the outer one included.
    pub max_cardinality: usize,
    /// Deepest term nesting; the outer term has depth 0.
    pub max_depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("empty query")]
    Empty,
    #[error("unbalanced parentheses at offset {0}")]
    Unbalanced(usize),
    #[error(
        "empty parentheses at offset {0}: a term needs at least two keywords or terms (T -> (S S))"
    )]
    EmptyGroup(usize),
    #[error("group at offset {0} has a single child: only the whole query may be a lone keyword (Q -> (k))")]
    SingleChild(usize),
    #[error("unexpected character {ch:?} at offset {offset}: keywords are letters and digits")]
    BadChar { ch: char, offset: usize },
    #[error("query has {0} keyword occurrences; at most 64 are supported")]
    TooManyKeywords(usize),
}

pub const MAX_OCCURRENCES: usize = 64;

#[derive(Debug)]
enum Tok {
    Open(usize),
    Close(usize),
    Word(String),
}

fn lex(text: &str) -> Result<Vec<Tok>, QueryError> {
    let mut toks = Vec::new();
    let mut word_start: Option<usize> = None;
    let flush = |toks: &mut Vec<Tok>, start: &mut Option<usize>, end: usize| {
        if let Some(s) = start.take() {
            toks.extend(tokenize(&text[s..end]).into_iter().map(Tok::Word));
        }
    };
    for (i, ch) in text.char_indices() {
        if ch.is_alphanumeric() {
            word_start.get_or_insert(i);
            continue;
        }
        flush(&mut toks, &mut word_start, i);
        match ch {
            '(' => toks.push(Tok::Open(i)),
            ')' => toks.push(Tok::Close(i)),
            c if c.is_whitespace() => {}
            c => return Err(QueryError::BadChar { ch: c, offset: i }),
        }
    }
    flush(&mut toks, &mut word_start, text.len());
    Ok(toks)
}

// Untyped parse tree before validation.
enum Group {
    Word(String),
    List(usize, Vec<Group>),
}

fn parse_groups(toks: &[Tok]) -> Result<Vec<Group>, QueryError> {
    let mut stack: Vec<(usize, Vec<Group>)> = vec![(0, Vec::new())];
    for tok in toks {
        match tok {
            Tok::Open(at) => stack.push((*at, Vec::new())),
            Tok::Close(at) => {
                if stack.len() == 1 {
                    return Err(QueryError::Unbalanced(*at));
                }
                let (start, items) = stack.pop().expect("checked");
                stack
                    .last_mut()
                    .expect("outer")
                    .1
                    .push(Group::List(start, items));
            }
            Tok::Word(w) => stack
                .last_mut()
                .expect("outer")
                .1
                .push(Group::Word(w.clone())),
        }
    }
    if stack.len() > 1 {
        return Err(QueryError::Unbalanced(stack.last().expect("nonempty").0));
    }
    Ok(stack.pop().expect("outer").1)
}

struct Builder {
    terms: Vec<Term>,
    occurrences: Vec<KeywordOccurrence>,
}

impl Builder {
    fn term(
        &mut self,
        parent: Option<TermId>,
        depth: usize,
        items: Vec<Group>,
    ) -> Result<TermId, QueryError> {
        let id = TermId(self.terms.len());
        self.terms.push(Term {
            id,
            children: Vec::new(),
            depth,
            parent,
        });
        let mut children = Vec::with_capacity(items.len());
        for item in items {
            match item {
                Group::Word(w) => {
                    let oid = OccurrenceId(self.occurrences.len());
                    self.occurrences.push(KeywordOccurrence {
                        keyword: w,
                        id: oid,
                        parent: id,
                    });
                    children.push(Child::Keyword(oid));
                }
                Group::List(start, inner) => {
                    check_group(start, &inner)?;
                    children.push(Child::Term(self.term(Some(id), depth + 1, inner)?));
                }
            }
        }
        self.terms[id.0].children = children;
        Ok(id)
    }
}

fn check_group(start: usize, items: &[Group]) -> Result<(), QueryError> {
    match items.len() {
        0 => Err(QueryError::EmptyGroup(start)),
        1 => Err(QueryError::SingleChild(start)),
        _ => Ok(()),
    }
}

pub fn parse_query(text: &str) -> Result<QueryAst, QueryError> {
    let toks = lex(text)?;
    let mut top = parse_groups(&toks)?;
    let items = match top.len() {
        0 => return Err(QueryError::Empty),
        1 => match top.pop().expect("one") {
            Group::List(start, items) => {
                if items.is_empty() {
                    return Err(QueryError::EmptyGroup(start));
                }
                if let [Group::List(..)] = items.as_slice() {
                    return Err(QueryError::SingleChild(start));
                }
                items
            }
            w @ Group::Word(_) => vec![w],
        },
        _ => top,
    };
    let mut b = Builder {
        terms: Vec::new(),
        occurrences: Vec::new(),
    };
    b.term(None, 0, items)?;
    if b.occurrences.len() > MAX_OCCURRENCES {
        return Err(QueryError::TooManyKeywords(b.occurrences.len()));
    }
    Ok(QueryAst {
        terms: b.terms,
        occurrences: b.occurrences,
    })
}

impl QueryAst {
    pub fn root(&self) -> &Term {
        &self.terms[0]
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(&self, id: TermId) -> &Term {
        &self.terms[id.0]
    }

    pub fn occurrences(&self) -> &[KeywordOccurrence] {
        &self.occurrences
    }

    pub fn occurrence(&self, id: OccurrenceId) -> &KeywordOccurrence {
        &self.occurrences[id.0]
    }

    pub fn len(&self) -> usize {
        self.occurrences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occurrences.is_empty()
    }

    /// Distinct keywords in order of first occurrence.
    pub fn distinct_keywords(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for o in &self.occurrences {
            if !seen.contains(&o.keyword.as_str()) {
                seen.push(o.keyword.as_str());
            }
        }
        seen
    }

    /// Bitmask of every occurrence inside `id`, nested terms included.
    pub fn occurrence_mask(&self, id: TermId) -> u64 {
        self.term(id)
            .children
            .iter()
            .map(|c| self.child_mask(*c))
            .fold(0, |a, b| a | b)
    }

    pub fn child_mask(&self, child: Child) -> u64 {
        match child {
            Child::Keyword(o) => 1u64 << o.0,
            Child::Term(t) => self.occurrence_mask(t),
        }
    }

    /// Proper terms, i.e. every term except the outer query term.
    pub fn proper_terms(&self) -> impl Iterator<Item = &Term> {
        self.terms.iter().skip(1)
    }

    pub fn stats(&self) -> QueryStats {
        QueryStats {
            keywords: self.occurrences.len(),
            terms: self.terms.len() - 1,
            max_cardinality: self
                .terms
                .iter()
                .map(|t| t.children.len())
                .max()
                .unwrap_or(0),
            max_depth: self.terms.iter().map(|t| t.depth).max().unwrap_or(0),
        }
    }

    /// The same occurrences as one flat term.
    pub fn flattened(&self) -> QueryAst {
        let root = TermId(0);
        QueryAst {
            terms: vec![Term {
                id: root,
                children: (0..self.occurrences.len())
                    .map(|i| Child::Keyword(OccurrenceId(i)))
                    .collect(),
                depth: 0,
                parent: None,
            }],
            occurrences: self
                .occurrences
                .iter()
                .map(|o| KeywordOccurrence {
                    parent: root,
                    ..o.clone()
                })
                .collect(),
        }
    }

    fn render_term(&self, id: TermId, out: &mut String) {
        out.push('(');
        for (i, child) in self.term(id).children.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            match child {
                Child::Keyword(o) => out.push_str(&self.occurrence(*o).keyword),
                Child::Term(t) => self.render_term(*t, out),
            }
        }
        out.push(')');
    }
}

pub fn query_stats(ast: &QueryAst) -> QueryStats {
    ast.stats()
}

impl fmt::Display for QueryAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.render_term(TermId(0), &mut s);
        f.write_str(&s)
    }
}
