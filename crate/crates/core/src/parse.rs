//! Reader for the machine-readable model format.
//!
//! A script is a sequence of items. Every item starts in column 0; indented
//! lines continue the previous item. `--` starts a line comment and `{- -}`
//! encloses a block comment. Supported items:
//!
//! ```text
//! nametype T = {0..2}
//! datatype Power = Power_On | Power_Off
//! channel a, b
//! channel c, d : T
//! Name(x, y) = <process or expression>
//! Set = {| c, d.1, tock |}
//! Events = {a, d.1}
//! assert [Label:] Spec [T= Impl
//! assert [Label:] P :[deadlock free]
//! assert [Label:] P :[reaches c.1]
//! Timed(OneStep) {        -- ignored, as is a lone `}`
//! ```
//!
//! Process operators, from loosest to tightest binding: `\` and `|\`;
//! `|||` and `[|X|]`; `[|X|>`; `|~|`; `[]`; `/\`; `;`; prefix `->` and
//! `if then else`; postfix renaming `[[a <- b]]`. The body of a prefix
//! extends over sequential composition, so `a -> P ; Q` is `a -> (P ; Q)`.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::check::{Assertion, Property};
use crate::env::Env;
use crate::error::{Error, Result};
use crate::event::{Event, EventSet};
use crate::expr::{BinOp, Expr, UnOp};
use crate::symbol::Sym;
use crate::term::{self, Field, Proc, Renaming};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    P(&'static str),
}

const PUNCT: &[&str] = &[
    "[T=", "|~|", "|||", "[|", "|]", "|>", "{|", "|}", "[[", "]]", "[]", "->", "<-", "..", "/\\", "|\\", ":[", "==",
    "!=", "<=", ">=", "\\", ";", "(", ")", "{", "}", ",", "?", "!", ".", ":", "=", "<", ">", "+", "-", "*", "/", "%",
    "[", "]", "|", "&", "@",
];

fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let mut rest = src;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("{-") {
            let end = r.find("-}").map_or(r.len(), |i| i + 2);
            // Keep line structure for error messages.
            out.extend(r[..end].chars().filter(|&c| c == '\n'));
            rest = &r[end..];
        } else if rest.starts_with("--") {
            let end = rest.find('\n').unwrap_or(rest.len());
            rest = &rest[end..];
        } else {
            let c = rest.chars().next().unwrap();
            out.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    out
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str, first_line: usize) -> Result<Vec<(Tok, usize)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    let mut line = first_line;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            line += 1;
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let n = s.parse().map_err(|_| Error::Parse { line, msg: format!("bad number {s}") })?;
            toks.push((Tok::Int(n), line));
        } else if is_ident_start(c) {
            let start = i;
            loop {
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                let joins = |sep: usize| i + sep < chars.len() && is_ident_start(chars[i + sep]);
                if i + 1 < chars.len() && chars[i] == ':' && chars[i + 1] == ':' && joins(2) {
                    i += 2;
                } else if i < chars.len() && chars[i] == '.' && joins(1) {
                    i += 1;
                } else {
                    break;
                }
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), line));
        } else {
            let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
            let p = PUNCT
                .iter()
                .find(|p| rest.starts_with(**p))
                .ok_or_else(|| Error::Parse { line, msg: format!("unexpected character `{c}`") })?;
            toks.push((Tok::P(p), line));
            i += p.chars().count();
        }
    }
    Ok(toks)
}

/// One top-level item with its tokens.
struct Item {
    toks: Vec<(Tok, usize)>,
}

fn split_items(src: &str) -> Result<Vec<Item>> {
    let clean = strip_comments(src);
    let mut items: Vec<(usize, String)> = Vec::new();
    // Inside a Timed block, items start at the block's own indentation.
    let mut block: Option<Option<usize>> = None;
    for (n, l) in clean.lines().enumerate() {
        let trimmed = l.trim();
        let indent = l.len() - l.trim_start().len();
        let mut starts_item = indent == 0 && !trimmed.is_empty();
        if starts_item && trimmed.starts_with("Timed") && trimmed.ends_with('{') {
            block = Some(None);
            continue;
        }
        if starts_item && trimmed == "}" {
            block = None;
            continue;
        }
        if let Some(b) = &mut block {
            if !trimmed.is_empty() {
                let b = *b.get_or_insert(indent);
                starts_item |= indent == b;
            }
        }
        if starts_item || items.is_empty() {
            items.push((n + 1, String::new()));
        }
        let cur = &mut items.last_mut().unwrap().1;
        cur.push_str(l);
        cur.push('\n');
    }
    items
        .into_iter()
        .map(|(line, text)| Ok(Item { toks: lex(&text, line)? }))
        .filter(|r| !matches!(r, Ok(Item { toks, .. }) if toks.is_empty()))
        .collect()
}

/// Parses a script into `env`, returning its assertions. Definitions
/// replace earlier ones with the same name.
pub fn parse_script(env: &mut Env, src: &str) -> Result<Vec<Assertion>> {
    let items = split_items(src)?;
    let mut defs: Vec<(Item, String, Vec<Sym>, usize)> = Vec::new();
    let mut decls: Vec<Item> = Vec::new();
    let mut asserts: Vec<Item> = Vec::new();
    for item in items {
        match item.toks.first() {
            Some((Tok::Ident(k), _)) if k == "datatype" => {
                let (name, members) = Parser::new(env, &item.toks, FxHashSet::default()).datatype()?;
                let refs: Vec<&str> = members.iter().map(String::as_str).collect();
                env.declare_enum(&name, &refs);
            }
            Some((Tok::Ident(k), _)) if k == "channel" || k == "nametype" => decls.push(item),
            Some((Tok::Ident(k), _)) if k == "assert" => asserts.push(item),
            Some((Tok::Ident(name), line)) => {
                let name = name.clone();
                let line = *line;
                let (params, body_start) = def_header(&item.toks, line)?;
                defs.push((item, name, params, body_start));
            }
            Some((_, line)) => return Err(Error::Parse { line: *line, msg: "expected an item".into() }),
            None => {}
        }
    }

    // Decide which definitions are processes. Anything that is not a plain
    // expression is a process; an expression whose result is a process name
    // is a process too.
    let mut procs: FxHashSet<Sym> = FxHashSet::default();
    let mut exprs: FxHashMap<Sym, Expr> = FxHashMap::default();
    for (item, name, params, start) in &defs {
        let sym = Sym::new(name);
        let body = &item.toks[*start..];
        if matches!(body.first(), Some((Tok::P("{|"), _))) {
            continue;
        }
        let mut p = Parser::new(env, body, FxHashSet::default());
        p.scope = params.clone();
        match p.expr() {
            Ok(e) if p.at_end() => {
                exprs.insert(sym, e);
            }
            _ => {
                procs.insert(sym);
            }
        }
    }
    loop {
        let before = procs.len();
        for (name, e) in &exprs {
            if !procs.contains(name) && yields_process(e, &procs, env) {
                procs.insert(*name);
            }
        }
        if procs.len() == before {
            break;
        }
    }
    for (name, e) in exprs {
        if !procs.contains(&name) {
            let params = defs.iter().rev().find(|d| Sym::new(&d.1) == name).unwrap().2.clone();
            env.define_function(name, params, e);
        }
    }

    for item in &decls {
        let decl = Parser::new(env, &item.toks, procs.clone()).declaration()?;
        match decl {
            Decl::Type(name, values) => env.declare_type(name.as_str(), values),
            Decl::Channels(names, domain) => {
                for n in names {
                    env.declare_channel(n.as_str(), domain.clone());
                }
            }
        }
    }
    // Event sets may mention each other; define them in order.
    for (item, name, _, start) in &defs {
        if matches!(item.toks.get(*start), Some((Tok::P("{|"), _))) {
            let mut p = Parser::new(env, &item.toks[*start..], procs.clone());
            let set = p.event_set()?;
            p.expect_end()?;
            env.define_event_set(name.as_str(), set);
        }
    }
    let mut parsed = Vec::new();
    for (item, name, params, start) in &defs {
        let sym = Sym::new(name);
        if !procs.contains(&sym) {
            continue;
        }
        let mut p = Parser::new(env, &item.toks[*start..], procs.clone());
        p.scope = params.clone();
        let body = p.process()?;
        p.expect_end()?;
        parsed.push((sym, params.clone(), body));
    }
    for (sym, params, body) in parsed {
        env.define(sym, params, body);
    }
    let mut out = Vec::new();
    for item in &asserts {
        let known: FxHashSet<Sym> = procs.iter().copied().collect();
        let mut p = Parser::new(env, &item.toks, known);
        let a = p.assertion(out.len())?;
        out.retain(|b: &Assertion| b.name != a.name);
        out.push(a);
    }
    Ok(out)
}

/// Parses a single process term against `env`.
pub fn parse_process(env: &Env, src: &str) -> Result<Proc> {
    let toks = lex(&strip_comments(src), 1)?;
    let mut p = Parser::new(env, &toks, FxHashSet::default());
    let proc_ = p.process()?;
    p.expect_end()?;
    Ok(proc_)
}

/// Parses a single expression against `env`.
pub fn parse_expr(env: &Env, src: &str) -> Result<Expr> {
    let toks = lex(&strip_comments(src), 1)?;
    let mut p = Parser::new(env, &toks, FxHashSet::default());
    let e = p.expr()?;
    p.expect_end()?;
    Ok(e)
}

fn def_header(toks: &[(Tok, usize)], line: usize) -> Result<(Vec<Sym>, usize)> {
    let err = |msg: &str| Error::Parse { line, msg: msg.to_string() };
    let mut i = 1;
    let mut params = Vec::new();
    if matches!(toks.get(i), Some((Tok::P("("), _))) {
        i += 1;
        loop {
            match toks.get(i) {
                Some((Tok::Ident(x), _)) => params.push(Sym::new(x)),
                Some((Tok::P(")"), _)) if params.is_empty() => break,
                _ => return Err(err("expected a parameter name")),
            }
            i += 1;
            match toks.get(i) {
                Some((Tok::P(","), _)) => i += 1,
                Some((Tok::P(")"), _)) => break,
                _ => return Err(err("expected `,` or `)`")),
            }
        }
        i += 1;
    }
    match toks.get(i) {
        Some((Tok::P("="), _)) => Ok((params, i + 1)),
        _ => Err(err("expected `=` in definition")),
    }
}

fn yields_process(e: &Expr, procs: &FxHashSet<Sym>, env: &Env) -> bool {
    let is_proc = |n: &Sym| {
        procs.contains(n)
            || (env.def(*n).is_some() && !env.is_function(*n))
            || matches!(n.as_str(), "STOP" | "SKIP" | "USTOP" | "WAIT" | "TRUN" | "EndBy" | "ADeadline" | "timed_priority")
    };
    match e {
        Expr::Name(n) | Expr::Call(n, _) => is_proc(n),
        Expr::If(_, a, b) => yields_process(a, procs, env) || yields_process(b, procs, env),
        _ => false,
    }
}

enum Decl {
    Type(String, Vec<Value>),
    Channels(Vec<String>, Vec<Value>),
}

enum ValueSet {
    Values(Vec<Value>),
    /// `{x | x <- source, preds}`
    Comprehension { var: Sym, source: Vec<Value>, preds: Vec<Expr> },
}

struct Parser<'a> {
    env: &'a Env,
    toks: &'a [(Tok, usize)],
    pos: usize,
    scope: Vec<Sym>,
    procs: FxHashSet<Sym>,
}

impl<'a> Parser<'a> {
    fn new(env: &'a Env, toks: &'a [(Tok, usize)], procs: FxHashSet<Sym>) -> Parser<'a> {
        Parser { env, toks, pos: 0, scope: Vec::new(), procs }
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.1)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let found = match self.toks.get(self.pos) {
            Some((t, _)) => format!("{t:?}"),
            None => "end of item".into(),
        };
        Err(Error::Parse { line: self.line(), msg: format!("{} (found {found})", msg.into()) })
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek_at(&self, k: usize) -> Option<&'a Tok> {
        self.toks.get(self.pos + k).map(|t| &t.0)
    }

    fn at(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::P(q)) if *q == p)
    }

    fn at_ident(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == k)
    }

    fn eat(&mut self, p: &str) -> bool {
        if self.at(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_ident(&mut self, k: &str) -> bool {
        if self.at_ident(k) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> Result<()> {
        if self.eat(p) {
            Ok(())
        } else {
            self.err(format!("expected `{p}`"))
        }
    }

    fn expect_ident_kw(&mut self, k: &str) -> Result<()> {
        if self.eat_ident(k) {
            Ok(())
        } else {
            self.err(format!("expected `{k}`"))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.peek() {
            Some(Tok::Ident(x)) => {
                self.pos += 1;
                Ok(x.clone())
            }
            _ => self.err("expected a name"),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn expect_end(&self) -> Result<()> {
        if self.at_end() {
            Ok(())
        } else {
            self.err("unexpected trailing input")
        }
    }

    fn is_proc_name(&self, s: Sym) -> bool {
        self.procs.contains(&s) || self.env.def(s).is_some()
    }

    // ---- declarations ----

    fn datatype(&mut self) -> Result<(String, Vec<String>)> {
        self.expect_ident_kw("datatype")?;
        let name = self.ident()?;
        self.expect("=")?;
        let mut members = vec![self.ident()?];
        while self.eat("|") {
            members.push(self.ident()?);
        }
        self.expect_end()?;
        Ok((name, members))
    }

    fn declaration(&mut self) -> Result<Decl> {
        if self.eat_ident("nametype") {
            let name = self.ident()?;
            self.expect("=")?;
            let values = self.constant_set()?;
            self.expect_end()?;
            return Ok(Decl::Type(name, values));
        }
        self.expect_ident_kw("channel")?;
        let mut names = vec![self.ident()?];
        while self.eat(",") {
            names.push(self.ident()?);
        }
        let domain = if self.eat(":") { self.constant_set()? } else { Vec::new() };
        self.expect_end()?;
        Ok(Decl::Channels(names, domain))
    }

    fn assertion(&mut self, index: usize) -> Result<Assertion> {
        self.expect_ident_kw("assert")?;
        let mut name = format!("assert{}", index + 1);
        if matches!(self.peek(), Some(Tok::Ident(_))) && matches!(self.peek_at(1), Some(Tok::P(":"))) {
            name = self.ident()?;
            self.pos += 1;
        }
        let lhs = self.process()?;
        let property = if self.eat("[T=") {
            let imp = self.process()?;
            Property::TraceRefinement { spec: lhs, imp }
        } else if self.eat(":[") {
            if self.eat_ident("deadlock") {
                self.expect_ident_kw("free")?;
                self.expect("]")?;
                Property::DeadlockFree(lhs)
            } else if self.eat_ident("reaches") {
                let e = self.event()?;
                self.expect("]")?;
                Property::Reaches(lhs, e)
            } else {
                return self.err("expected `deadlock free` or `reaches`");
            }
        } else {
            return self.err("expected `[T=` or `:[`");
        };
        self.expect_end()?;
        Ok(Assertion { name, property })
    }

    // ---- sets ----

    fn constant_set(&mut self) -> Result<Vec<Value>> {
        match self.value_set()? {
            ValueSet::Values(v) => Ok(v),
            ValueSet::Comprehension { var, source, preds } => {
                let mut out = Vec::new();
                for v in source {
                    let locals = [(var, v)];
                    let mut keep = true;
                    for p in &preds {
                        keep &= crate::expr::bool_of(p.eval_in(self.env, &locals)?)?;
                    }
                    if keep {
                        out.push(v);
                    }
                }
                Ok(out)
            }
        }
    }

    fn value_set(&mut self) -> Result<ValueSet> {
        if let Some(Tok::Ident(n)) = self.peek() {
            self.pos += 1;
            if n == "Bool" {
                return Ok(ValueSet::Values(vec![Value::Bool(false), Value::Bool(true)]));
            }
            return match self.env.type_values(Sym::new(n)) {
                Some(vs) => Ok(ValueSet::Values(vs.to_vec())),
                None => {
                    self.pos -= 1;
                    self.err(format!("unknown type `{n}`"))
                }
            };
        }
        self.expect("{")?;
        if self.eat("}") {
            return Ok(ValueSet::Values(Vec::new()));
        }
        // Comprehension `{x | x <- S, p}`.
        if let (Some(Tok::Ident(x)), Some(Tok::P("|"))) = (self.peek(), self.peek_at(1)) {
            let var = Sym::new(x);
            self.pos += 2;
            let y = self.ident()?;
            if Sym::new(&y) != var {
                return self.err("comprehension must draw its own variable");
            }
            self.expect("<-")?;
            let source = self.constant_set()?;
            self.scope.push(var);
            let mut preds = Vec::new();
            while self.eat(",") {
                preds.push(self.expr()?);
            }
            self.scope.pop();
            self.expect("}")?;
            return Ok(ValueSet::Comprehension { var, source, preds });
        }
        let first = self.expr()?;
        if self.eat("..") {
            let last = self.expr()?;
            self.expect("}")?;
            let lo = self.const_int(&first)?;
            let hi = self.const_int(&last)?;
            return Ok(ValueSet::Values((lo..=hi).map(Value::Int).collect()));
        }
        let mut values = vec![first.eval(self.env)?];
        while self.eat(",") {
            let e = self.expr()?;
            values.push(e.eval(self.env)?);
        }
        self.expect("}")?;
        Ok(ValueSet::Values(values))
    }

    fn const_int(&self, e: &Expr) -> Result<i64> {
        let v = e.eval(self.env)?;
        v.as_int().ok_or_else(|| Error::Parse { line: self.line(), msg: format!("expected an integer, got {v}") })
    }

    fn event_set(&mut self) -> Result<EventSet> {
        let mut set = self.event_set_atom()?;
        while self.eat_ident("union") {
            let other = self.event_set_atom()?;
            set = set.union(&other);
        }
        Ok(set)
    }

    fn event_set_atom(&mut self) -> Result<EventSet> {
        if self.eat("(") {
            let s = self.event_set()?;
            self.expect(")")?;
            return Ok(s);
        }
        if let Some(Tok::Ident(n)) = self.peek() {
            if let Some(s) = self.env.event_set(Sym::new(n)) {
                self.pos += 1;
                return Ok(s.clone());
            }
            return self.err(format!("unknown event set `{n}`"));
        }
        let close = if self.eat("{") {
            "}"
        } else {
            self.expect("{|")?;
            "|}"
        };
        let mut channels = Vec::new();
        let mut events = Vec::new();
        let mut tock = false;
        if !self.at(close) {
            loop {
                let n = self.ident()?;
                if n == "tock" {
                    tock = true;
                } else if let Some(s) = self.env.event_set(Sym::new(&n)) {
                    channels.extend_from_slice(s.channel_list());
                    events.extend_from_slice(s.event_list());
                    tock |= s.has_tock();
                } else {
                    match self.resolve_event_name(&n)? {
                        // `{c}` names the event c, `{| c |}` every event on c
                        Some((c, None)) if close == "}" && !self.at(".") => {
                            if self.env.domain(c)?.as_ref() != [Value::Unit] {
                                return self.err(format!("`{n}` carries data; use {{| {n} |}}"));
                            }
                            events.push(Event::new(c, Value::Unit));
                        }
                        Some((c, None)) if !self.at(".") => channels.push(c),
                        Some((c, v)) => events.push(self.event_rest(c, v)?),
                        None => {
                            let cs = self.env.channels_with_prefix(&n);
                            if cs.is_empty() {
                                return self.err(format!("unknown channel `{n}`"));
                            }
                            channels.extend(cs);
                        }
                    }
                }
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(close)?;
        Ok(EventSet::new(channels, events, tock))
    }

    /// Splits `c.v` where `c` is a declared channel. Returns the channel and
    /// the value suffix, if any.
    fn resolve_event_name(&self, n: &str) -> Result<Option<(Sym, Option<Value>)>> {
        let whole = Sym::new(n);
        if self.env.is_channel(whole) {
            return Ok(Some((whole, None)));
        }
        for (i, _) in n.match_indices('.').collect::<Vec<_>>().into_iter().rev() {
            let c = Sym::new(&n[..i]);
            if self.env.is_channel(c) {
                let suffix = Sym::new(&n[i + 1..]);
                let v = match self.env.constant_value(suffix) {
                    Some(v) => v,
                    None if n[i + 1..] == *"true" => Value::Bool(true),
                    None if n[i + 1..] == *"false" => Value::Bool(false),
                    None => return Err(Error::Parse { line: self.line(), msg: format!("unknown value in `{n}`") }),
                };
                return Ok(Some((c, Some(v))));
            }
        }
        Ok(None)
    }

    /// Completes a constant event after its channel name.
    fn event_rest(&mut self, c: Sym, v: Option<Value>) -> Result<Event> {
        let v = match v {
            Some(v) => v,
            None if self.eat(".") => {
                let e = self.expr_atom()?;
                e.eval(self.env)?
            }
            None => Value::Unit,
        };
        Ok(Event::new(c, v))
    }

    fn event(&mut self) -> Result<Event> {
        let n = self.ident()?;
        match self.resolve_event_name(&n)? {
            Some((c, v)) => self.event_rest(c, v),
            None => self.err(format!("unknown channel `{n}`")),
        }
    }

    // ---- processes ----

    fn process(&mut self) -> Result<Proc> {
        let mut p = self.par_level()?;
        loop {
            if self.eat("\\") {
                p = term::hide(p, self.event_set()?);
            } else if self.eat("|\\") {
                p = term::project(p, self.event_set()?);
            } else {
                return Ok(p);
            }
        }
    }

    fn par_level(&mut self) -> Result<Proc> {
        let mut p = self.exception_level()?;
        loop {
            if self.eat("|||") {
                p = term::interleave(p, self.exception_level()?);
            } else if self.at("[|") {
                let save = self.pos;
                self.pos += 1;
                let x = self.event_set()?;
                if self.eat("|]") {
                    p = term::par(p, x, self.exception_level()?);
                } else {
                    self.pos = save;
                    return self.err("expected `|]`");
                }
            } else {
                return Ok(p);
            }
        }
    }

    fn exception_level(&mut self) -> Result<Proc> {
        let mut p = self.int_choice_level()?;
        while self.at("[|") {
            let save = self.pos;
            self.pos += 1;
            let x = self.event_set()?;
            if self.eat("|>") {
                p = term::exception(p, x, self.int_choice_level()?);
            } else {
                self.pos = save;
                break;
            }
        }
        Ok(p)
    }

    fn int_choice_level(&mut self) -> Result<Proc> {
        let mut p = self.ext_choice_level()?;
        while self.eat("|~|") {
            p = term::int_choice(p, self.ext_choice_level()?);
        }
        Ok(p)
    }

    fn ext_choice_level(&mut self) -> Result<Proc> {
        let mut p = self.interrupt_level()?;
        while self.eat("[]") {
            p = term::ext_choice(p, self.interrupt_level()?);
        }
        Ok(p)
    }

    fn interrupt_level(&mut self) -> Result<Proc> {
        let mut p = self.seq_level()?;
        while self.eat("/\\") {
            p = term::interrupt(p, self.seq_level()?);
        }
        Ok(p)
    }

    fn seq_level(&mut self) -> Result<Proc> {
        let mut p = self.prefix_level()?;
        while self.eat(";") {
            p = term::seq(p, self.prefix_level()?);
        }
        Ok(p)
    }

    fn prefix_level(&mut self) -> Result<Proc> {
        if self.eat_ident("if") {
            let c = self.expr()?;
            self.expect_ident_kw("then")?;
            let a = self.process()?;
            self.expect_ident_kw("else")?;
            let b = self.process()?;
            return Ok(term::if_then_else(c, a, b));
        }
        if let Some(Tok::Ident(n)) = self.peek() {
            if !self.is_keyword(n) && !self.is_proc_name(Sym::new(n)) {
                if let Some((c, v)) = self.resolve_event_name(n)? {
                    self.pos += 1;
                    return self.prefix(c, v);
                }
            }
        }
        self.postfix_level()
    }

    fn is_keyword(&self, n: &str) -> bool {
        matches!(
            n,
            "STOP" | "SKIP" | "USTOP" | "WAIT" | "TRUN" | "EndBy" | "ADeadline" | "timed_priority" | "if"
        )
    }

    fn prefix(&mut self, channel: Sym, v: Option<Value>) -> Result<Proc> {
        let mut bound = None;
        let field = if let Some(v) = v {
            Field::Out(Expr::Const(v))
        } else if self.eat(".") || self.eat("!") {
            Field::Out(self.expr_atom_or_expr()?)
        } else if self.eat("?") {
            let var = Sym::new(&self.ident()?);
            bound = Some(var);
            let restrict = if self.eat(":") {
                self.scope.push(var);
                let set = self.value_set();
                self.scope.pop();
                Some(match set? {
                    ValueSet::Values(vs) => Expr::Member(std::sync::Arc::new(Expr::Var(var)), vs.into()),
                    ValueSet::Comprehension { var: cv, source, preds } => {
                        let mut e = Expr::Member(std::sync::Arc::new(Expr::Var(var)), source.into());
                        for p in preds {
                            let p = if cv == var { p } else { rename_var(&p, cv, var) };
                            e = Expr::bin(BinOp::And, e, p);
                        }
                        e
                    }
                })
            } else {
                None
            };
            Field::In { var, restrict }
        } else {
            Field::None
        };
        self.expect("->")?;
        if let Some(var) = bound {
            self.scope.push(var);
        }
        let cont = self.seq_level();
        if bound.is_some() {
            self.scope.pop();
        }
        Ok(term::prefix(channel, field, cont?))
    }

    /// After `!` an arbitrary expression; after `.` a single atom.
    fn expr_atom_or_expr(&mut self) -> Result<Expr> {
        if matches!(self.toks.get(self.pos.wrapping_sub(1)), Some((Tok::P("."), _))) {
            self.expr_atom()
        } else {
            self.expr()
        }
    }

    fn postfix_level(&mut self) -> Result<Proc> {
        let mut p = self.atom()?;
        while self.eat("[[") {
            let mut pairs = Vec::new();
            loop {
                let from = self.ident()?;
                self.expect("<-")?;
                let to = self.ident()?;
                let from_cs = self.rename_channels(&from)?;
                let to_cs = self.rename_channels(&to)?;
                if from_cs.len() != to_cs.len() {
                    return self.err(format!("cannot rename `{from}` to `{to}`"));
                }
                for (f, t) in from_cs.into_iter().zip(to_cs) {
                    pairs.push((f, t));
                }
                if !self.eat(",") {
                    break;
                }
            }
            self.expect("]]")?;
            p = term::rename(p, Renaming::new(pairs));
        }
        Ok(p)
    }

    /// A renaming side names one channel. Undeclared target channels are
    /// declared with the domain of the source when used.
    fn rename_channels(&self, n: &str) -> Result<Vec<Sym>> {
        let s = Sym::new(n);
        if self.env.is_channel(s) {
            return Ok(vec![s]);
        }
        Err(Error::Parse { line: self.line(), msg: format!("unknown channel `{n}` in renaming") })
    }

    fn atom(&mut self) -> Result<Proc> {
        if self.eat("(") {
            let p = self.process()?;
            self.expect(")")?;
            return Ok(p);
        }
        let n = self.ident()?;
        match n.as_str() {
            "STOP" => Ok(term::stop()),
            "SKIP" => Ok(term::skip()),
            "USTOP" => Ok(term::ustop()),
            "WAIT" => {
                self.expect("(")?;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(term::wait(e))
            }
            "TRUN" => {
                self.expect("(")?;
                let x = self.event_set()?;
                self.expect(")")?;
                Ok(term::trun(x))
            }
            "EndBy" => {
                self.expect("(")?;
                let p = self.process()?;
                self.expect(",")?;
                let d = self.expr()?;
                self.expect(")")?;
                Ok(term::end_by(p, d))
            }
            "ADeadline" => {
                self.expect("(")?;
                let s = self.event_set()?;
                self.expect(",")?;
                let e = self.event_set()?;
                self.expect(",")?;
                let d = self.expr()?;
                self.expect(")")?;
                Ok(term::a_deadline(s, e, d))
            }
            "timed_priority" => {
                self.expect("(")?;
                let p = self.process()?;
                self.expect(")")?;
                Ok(term::timed_priority(p))
            }
            _ => {
                let s = Sym::new(&n);
                if !self.is_proc_name(s) {
                    self.pos -= 1;
                    return self.err(format!("unknown process `{n}`"));
                }
                let mut args = Vec::new();
                if self.eat("(") {
                    if !self.eat(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                        self.expect(")")?;
                    }
                }
                Ok(term::call(s, args))
            }
        }
    }

    // ---- expressions ----

    fn expr(&mut self) -> Result<Expr> {
        if self.eat_ident("if") {
            let c = self.expr()?;
            self.expect_ident_kw("then")?;
            let a = self.expr()?;
            self.expect_ident_kw("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(c.into(), a.into(), b.into()));
        }
        self.or_expr()
    }

    fn or_expr(&mut self) -> Result<Expr> {
        let mut e = self.and_expr()?;
        while self.eat_ident("or") {
            e = Expr::bin(BinOp::Or, e, self.and_expr()?);
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut e = self.not_expr()?;
        while self.eat_ident("and") {
            e = Expr::bin(BinOp::And, e, self.not_expr()?);
        }
        Ok(e)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.eat_ident("not") {
            return Ok(Expr::Unary(UnOp::Not, self.not_expr()?.into()));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> Result<Expr> {
        let e = self.add_expr()?;
        let op = match self.peek() {
            Some(Tok::P("==")) => BinOp::Eq,
            Some(Tok::P("!=")) => BinOp::Ne,
            Some(Tok::P("<")) => BinOp::Lt,
            Some(Tok::P("<=")) => BinOp::Le,
            Some(Tok::P(">")) => BinOp::Gt,
            Some(Tok::P(">=")) => BinOp::Ge,
            _ => return Ok(e),
        };
        self.pos += 1;
        Ok(Expr::bin(op, e, self.add_expr()?))
    }

    fn add_expr(&mut self) -> Result<Expr> {
        let mut e = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::P("+")) => BinOp::Add,
                Some(Tok::P("-")) => BinOp::Sub,
                _ => return Ok(e),
            };
            self.pos += 1;
            e = Expr::bin(op, e, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> Result<Expr> {
        let mut e = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Some(Tok::P("*")) => BinOp::Mul,
                Some(Tok::P("/")) => BinOp::Div,
                Some(Tok::P("%")) => BinOp::Mod,
                _ => return Ok(e),
            };
            self.pos += 1;
            e = Expr::bin(op, e, self.unary_expr()?);
        }
    }

    fn unary_expr(&mut self) -> Result<Expr> {
        if self.eat("-") {
            return Ok(Expr::Unary(UnOp::Neg, self.unary_expr()?.into()));
        }
        self.expr_atom()
    }

    fn expr_atom(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Int(i)) => {
                self.pos += 1;
                Ok(Expr::int(*i))
            }
            Some(Tok::P("(")) => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Some(Tok::Ident(n)) => {
                self.pos += 1;
                let s = Sym::new(n);
                match n.as_str() {
                    "true" => return Ok(Expr::bool(true)),
                    "false" => return Ok(Expr::bool(false)),
                    "member" => {
                        self.expect("(")?;
                        let e = self.expr()?;
                        self.expect(",")?;
                        let set = self.constant_set()?;
                        self.expect(")")?;
                        return Ok(Expr::Member(e.into(), set.into()));
                    }
                    _ => {}
                }
                if self.scope.contains(&s) {
                    return Ok(Expr::Var(s));
                }
                if self.eat("(") {
                    let mut args = Vec::new();
                    if !self.eat(")") {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(",") {
                                break;
                            }
                        }
                        self.expect(")")?;
                    }
                    return Ok(Expr::Call(s, args.into()));
                }
                Ok(Expr::Name(s))
            }
            _ => self.err("expected an expression"),
        }
    }
}

fn rename_var(e: &Expr, from: Sym, to: Sym) -> Expr {
    match e {
        Expr::Var(x) if *x == from => Expr::Var(to),
        Expr::Const(_) | Expr::Var(_) | Expr::Name(_) => e.clone(),
        Expr::Unary(op, a) => Expr::Unary(*op, rename_var(a, from, to).into()),
        Expr::Binary(op, a, b) => Expr::Binary(*op, rename_var(a, from, to).into(), rename_var(b, from, to).into()),
        Expr::If(c, a, b) => {
            Expr::If(rename_var(c, from, to).into(), rename_var(a, from, to).into(), rename_var(b, from, to).into())
        }
        Expr::Call(f, args) => Expr::Call(*f, args.iter().map(|a| rename_var(a, from, to)).collect()),
        Expr::Member(a, s) => Expr::Member(rename_var(a, from, to).into(), s.clone()),
    }
}
