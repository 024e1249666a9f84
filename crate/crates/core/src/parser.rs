//! Reader and printer for the Prolog subset: facts, rules, cut, `%` comments
//! and `%query:` directives.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::program::{Clause, Program};
use crate::term::{Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{origin}:{line}:{col}: {message}")]
pub struct ParseError {
    pub origin: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Ground,
    Any,
}

/// A moded query class such as `div(g,g,v)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuerySpec {
    pub predicate: String,
    pub moding: Vec<Mode>,
}

impl QuerySpec {
    pub fn new(predicate: &str, moding: Vec<Mode>) -> QuerySpec {
        QuerySpec { predicate: predicate.to_string(), moding }
    }

    pub fn arity(&self) -> usize {
        self.moding.len()
    }

    /// 1-based ground positions.
    pub fn ground_positions(&self) -> Vec<usize> {
        self.moding
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == Mode::Ground)
            .map(|(i, _)| i + 1)
            .collect()
    }
}

impl fmt::Display for QuerySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.predicate)?;
        if !self.moding.is_empty() {
            let modes: Vec<&str> = self
                .moding
                .iter()
                .map(|m| if *m == Mode::Ground { "g" } else { "v" })
                .collect();
            write!(f, "({})", modes.join(","))?;
        }
        Ok(())
    }
}

/// A parsed file: its clauses and an optional `%query:` directive.
#[derive(Clone, Debug)]
pub struct SourceFile {
    pub program: Program,
    pub query: Option<QuerySpec>,
}

pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    parse_source(src, "<stdin>").map(|f| f.program)
}

/// Parses a whole file. If several `%query:` directives are present the
/// first one wins.
pub fn parse_source(src: &str, origin: &str) -> Result<SourceFile, ParseError> {
    let mut p = Parser::new(src, origin, false);
    let mut clauses = Vec::new();
    p.skip_ws();
    while !p.at_end() {
        let (line, col) = (p.line, p.col);
        let head = p.term()?;
        if head.as_compound().is_none() {
            return Err(p.error_at(line, col, format!("clause head must be an atom, found `{head}`")));
        }
        let body = if p.eat(":-") { p.goal_list()? } else { Vec::new() };
        p.expect(".")?;
        clauses.push(Clause::new(head, body, clauses.len() + 1).expect("checked head"));
        p.skip_ws();
    }
    let query = match p.directives.first() {
        Some((text, line)) => Some(parse_query(text).map_err(|mut e| {
            e.origin = origin.to_string();
            e.line = *line;
            e
        })?),
        None => None,
    };
    let program = Program::new(clauses.into_iter().map(|c| (c.head().clone(), c.body().to_vec())))
        .expect("checked heads");
    Ok(SourceFile { program, query })
}

/// A single term; `T<n>` is read as an ordinary variable.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, "<term>", false);
    p.skip_ws();
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

/// A comma-separated goal; the empty string is the empty goal.
pub fn parse_goal(src: &str) -> Result<Vec<Term>, ParseError> {
    parse_goal_in(src, false)
}

/// Like [`parse_goal`], but `T<n>` denotes the abstract variable `T<n>` and
/// `!_m` a labeled cut. Used to write abstract states by hand.
pub fn parse_abstract_goal(src: &str) -> Result<Vec<Term>, ParseError> {
    parse_goal_in(src, true)
}

pub fn parse_abstract_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src, "<term>", true);
    p.skip_ws();
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}

fn parse_goal_in(src: &str, abstract_mode: bool) -> Result<Vec<Term>, ParseError> {
    let mut p = Parser::new(src, "<goal>", abstract_mode);
    p.skip_ws();
    if p.at_end() {
        return Ok(Vec::new());
    }
    let goal = p.goal_list()?;
    p.eat(".");
    p.finish()?;
    Ok(goal)
}

/// Parses a moded query such as `div(g,g,v)`.
pub fn parse_query(src: &str) -> Result<QuerySpec, ParseError> {
    let mut p = Parser::new(src, "<query>", false);
    p.skip_ws();
    let (line, col) = (p.line, p.col);
    let t = p.term()?;
    p.eat(".");
    p.finish()?;
    let c = t
        .as_compound()
        .ok_or_else(|| p.error_at(line, col, "query must be a predicate".into()))?;
    let moding = c
        .args()
        .iter()
        .map(|a| match a.as_compound().map(|c| (c.functor(), c.arity())) {
            Some(("g", 0)) => Ok(Mode::Ground),
            Some(("v", 0)) => Ok(Mode::Any),
            _ => Err(p.error_at(line, col, format!("mode must be `g` or `v`, found `{a}`"))),
        })
        .collect::<Result<_, _>>()?;
    Ok(QuerySpec { predicate: c.functor().to_string(), moding })
}

/// Canonical text: one clause per line, `, ` between arguments and goals.
pub fn print_program(p: &Program) -> String {
    p.clauses().iter().map(|c| format!("{c}\n")).collect()
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    line: usize,
    col: usize,
    origin: &'a str,
    abstract_mode: bool,
    anon: usize,
    directives: Vec<(String, usize)>,
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, origin: &'a str, abstract_mode: bool) -> Self {
        Parser { src, pos: 0, line: 1, col: 1, origin, abstract_mode, anon: 0, directives: Vec::new() }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.bump();
            } else if c == '%' {
                let line = self.line;
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c != '\n') {
                    self.bump();
                }
                let comment = &self.src[start + 1..self.pos];
                if let Some(q) = comment.trim_start().strip_prefix("query:") {
                    self.directives.push((q.trim().to_string(), line));
                }
            } else {
                break;
            }
        }
    }

    fn error_at(&self, line: usize, col: usize, message: String) -> ParseError {
        ParseError { origin: self.origin.to_string(), line, col, message }
    }

    fn error(&self, message: String) -> ParseError {
        self.error_at(self.line, self.col, message)
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(tok) {
            for _ in tok.chars() {
                self.bump();
            }
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            let found = self.peek().map_or("end of input".to_string(), |c| format!("`{c}`"));
            Err(self.error(format!("expected `{tok}`, found {found}")))
        }
    }

    fn finish(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(format!("unexpected trailing input `{}`", self.rest().trim_end())))
        }
    }

    fn goal_list(&mut self) -> Result<Vec<Term>, ParseError> {
        let mut goals = vec![self.goal()?];
        while self.eat(",") {
            goals.push(self.goal()?);
        }
        Ok(goals)
    }

    fn goal(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        if self.peek() == Some('!') {
            self.bump();
            let mark = self.cut_mark()?;
            self.skip_ws();
            return Ok(Term::Cut(mark));
        }
        self.term()
    }

    fn cut_mark(&mut self) -> Result<Option<u32>, ParseError> {
        if self.abstract_mode && self.rest().starts_with('_') {
            self.bump();
            let digits = self.take_while(|c| c.is_ascii_digit());
            return digits
                .parse()
                .map(Some)
                .map_err(|_| self.error("expected a mark after `!_`".into()));
        }
        Ok(None)
    }

    fn take_while(&mut self, f: impl Fn(char) -> bool) -> &'a str {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if f(c)) {
            self.bump();
        }
        &self.src[start..self.pos]
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        self.skip_ws();
        let (line, col) = (self.line, self.col);
        let c = match self.peek() {
            Some(c) => c,
            None => return Err(self.error("unexpected end of input".into())),
        };
        if c == '!' {
            return Err(self.error("cut may only occur as a goal, not as an argument".into()));
        }
        if c.is_ascii_uppercase() || c == '_' {
            let name = self.take_while(is_ident);
            self.skip_ws();
            return Ok(Term::Var(self.variable(name)));
        }
        let name = if c.is_ascii_lowercase() {
            self.take_while(is_ident)
        } else if c.is_ascii_digit() {
            self.take_while(|c| c.is_ascii_digit())
        } else {
            return Err(self.error(format!("unexpected character `{c}`")));
        };
        let functor: Arc<str> = Arc::from(name);
        self.skip_ws();
        if self.peek() != Some('(') {
            return Ok(Term::rebuild(&functor, Vec::new()));
        }
        self.bump();
        let mut args = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some('!') {
                return Err(self.error(format!(
                    "cut may not occur as an argument of `{functor}`"
                )));
            }
            args.push(self.term()?);
            if self.eat(",") {
                continue;
            }
            if self.eat(")") {
                break;
            }
            return Err(self.error(format!("expected `,` or `)` in arguments of `{functor}`")));
        }
        Term::compound_arc(functor, args).map_err(|e| self.error_at(line, col, e.to_string()))
    }

    fn variable(&mut self, name: &str) -> Var {
        if name == "_" {
            self.anon += 1;
            return Var::named(&format!("_G{}", self.anon));
        }
        if self.abstract_mode {
            if let Some(n) = name.strip_prefix('T').and_then(|d| d.parse::<u32>().ok()) {
                return Var::abstract_var(n);
            }
        }
        Var::named(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clause_with_cut() {
        let p = parse_program("div(X,0,Z) :- !, failure(a).").unwrap();
        let c = &p.clauses()[0];
        assert_eq!(c.index(), 1);
        assert_eq!(c.head().to_string(), "div(X, 0, Z)");
        assert_eq!(c.body().len(), 2);
        assert_eq!(c.body()[0], Term::cut());
        assert_eq!(c.body()[1].to_string(), "failure(a)");
    }

    #[test]
    fn fact() {
        let p = parse_program("q.").unwrap();
        assert!(p.clauses()[0].body().is_empty());
        assert_eq!(print_program(&p), "q.\n");
        assert_eq!(print_program(&Program::default()), "");
    }

    #[test]
    fn cut_in_argument_rejected() {
        let e = parse_program("p(f(!)).").unwrap_err();
        assert!(e.message.contains("cut"), "{e}");
        assert_eq!((e.line, e.col), (1, 5));
    }

    #[test]
    fn directive_and_comments() {
        let f = parse_source("% a comment\n%query: div(g,g,v)\np(X). % trailing\n", "x.pl").unwrap();
        assert_eq!(f.query.unwrap().to_string(), "div(g,g,v)");
        assert_eq!(f.program.clauses().len(), 1);
    }

    #[test]
    fn queries() {
        let q = parse_query("div(g,g,v)").unwrap();
        assert_eq!(q, QuerySpec::new("div", vec![Mode::Ground, Mode::Ground, Mode::Any]));
        assert_eq!(parse_query("p(g)").unwrap().moding, vec![Mode::Ground]);
        assert_eq!(parse_query("p(v)").unwrap().moding, vec![Mode::Any]);
        assert!(parse_query("p(x)").is_err());
        assert!(parse_query("p(g").is_err());
    }

    #[test]
    fn anonymous_variables_are_distinct() {
        let t = parse_term("f(_, _)").unwrap();
        assert_eq!(t.vars().len(), 2);
    }

    #[test]
    fn abstract_mode() {
        let g = parse_abstract_goal("!_2, p(T1, X)").unwrap();
        assert_eq!(g[0], Term::labeled_cut(2));
        assert_eq!(g[1].vars()[0], Var::abstract_var(1));
        assert_eq!(parse_goal("").unwrap(), Vec::<Term>::new());
    }

    #[test]
    fn syntax_error_position() {
        let e = parse_program("p(X) :- q(X)\nr.").unwrap_err();
        assert_eq!(e.line, 2);
    }
}
