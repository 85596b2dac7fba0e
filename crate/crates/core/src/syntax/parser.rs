//! Lexer and recursive-descent parser for `.anfj` sources.

use super::ast::*;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("duplicate class `{0}`")]
    DuplicateClass(String),
    #[error("non-atomic argument")]
    NonAtomicArgument,
    #[error("non-atomic operand")]
    NonAtomicOperand,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Kw(&'static str),
    Punct(char),
    Eof,
}

const KEYWORDS: [&str; 9] = ["class", "extends", "super", "this", "return", "try", "catch", "throw", "new"];

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, msg: String| ParseError { line, col, kind: ParseErrorKind::Syntax(msg) };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            let (sl, sc) = (line, col);
            i += 2;
            col += 2;
            loop {
                match chars.get(i) {
                    None => return Err(err(sl, sc, "unterminated block comment".into())),
                    Some('*') if chars.get(i + 1) == Some(&'/') => {
                        i += 2;
                        col += 2;
                        break;
                    }
                    Some('\n') => {
                        i += 1;
                        line += 1;
                        col = 1;
                    }
                    Some(_) => {
                        i += 1;
                        col += 1;
                    }
                }
            }
            continue;
        }
        if c.is_alphabetic() || c == '_' || c == '$' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            out.push(Token { tok, line, col });
            col += i - start;
            continue;
        }
        if "{}();,.=".contains(c) {
            out.push(Token { tok: Tok::Punct(c), line, col });
            i += 1;
            col += 1;
            continue;
        }
        return Err(err(line, col, format!("unexpected character `{c}`")));
    }
    out.push(Token { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Unrestricted expression tree, lowered to ANF with atomicity checks.
enum GExp {
    Var(String, usize, usize),
    Field(Box<GExp>, String),
    Call(Box<GExp>, String, Vec<GExp>),
    New(String, Vec<GExp>, usize, usize),
    Cast(String, Box<GExp>, usize, usize),
}

impl GExp {
    fn pos(&self) -> (usize, usize) {
        match self {
            GExp::Var(_, l, c) | GExp::New(_, _, l, c) | GExp::Cast(_, _, l, c) => (*l, *c),
            GExp::Field(b, _) | GExp::Call(b, _, _) => b.pos(),
        }
    }
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_label: u32,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.toks[self.pos];
        (t.line, t.col)
    }

    fn fail<T>(&self, msg: impl Into<String>) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError { line, col, kind: ParseErrorKind::Syntax(msg.into()) })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn punct(&mut self, c: char) -> PResult<()> {
        if *self.peek() == Tok::Punct(c) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{c}`, found {}", describe(self.peek())))
        }
    }

    fn kw(&mut self, k: &str) -> PResult<()> {
        match self.peek() {
            Tok::Kw(w) if *w == k => {
                self.bump();
                Ok(())
            }
            t => {
                let d = describe(t);
                self.fail(format!("expected `{k}`, found {d}"))
            }
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            t => self.fail(format!("expected identifier, found {}", describe(&t))),
        }
    }

    /// Identifier or `this`, as used in variable positions.
    fn var(&mut self) -> PResult<String> {
        if *self.peek() == Tok::Kw("this") {
            self.bump();
            return Ok("this".into());
        }
        self.ident()
    }

    fn is_punct(&self, c: char) -> bool {
        *self.peek() == Tok::Punct(c)
    }

    fn fresh_label(&mut self) -> Label {
        self.next_label += 1;
        Label(self.next_label)
    }

    fn program(&mut self) -> PResult<Program> {
        let mut classes: Vec<ClassDecl> = Vec::new();
        let mut seen = BTreeSet::new();
        while *self.peek() != Tok::Eof {
            let (line, col) = self.here();
            let class = self.class()?;
            if class.name == OBJECT || !seen.insert(class.name.clone()) {
                return Err(ParseError { line, col, kind: ParseErrorKind::DuplicateClass(class.name) });
            }
            classes.push(class);
        }
        let mains: Vec<MethodRef> = classes
            .iter()
            .flat_map(|c| {
                c.methods
                    .iter()
                    .filter(|m| m.name == "main" && m.params.is_empty())
                    .map(move |m| MethodRef { class: c.name.clone(), method: m.name.clone() })
            })
            .collect();
        let entry = if mains.len() == 1 { mains.into_iter().next() } else { None };
        Ok(Program { classes, entry })
    }

    fn class(&mut self) -> PResult<ClassDecl> {
        self.kw("class")?;
        let name = self.ident()?;
        self.kw("extends")?;
        let parent = self.ident()?;
        self.punct('{')?;
        let mut fields = Vec::new();
        let mut konst: Option<ConstructorDecl> = None;
        let mut methods = Vec::new();
        while !self.is_punct('}') {
            let is_ctor = matches!(self.peek(), Tok::Ident(n) if *n == name) && *self.peek_at(1) == Tok::Punct('(');
            if is_ctor {
                if konst.is_some() {
                    return self.fail(format!("class `{name}` declares more than one constructor"));
                }
                self.bump();
                konst = Some(self.constructor()?);
                continue;
            }
            let ty = self.ident()?;
            let member = self.ident()?;
            if self.is_punct(';') {
                self.bump();
                fields.push((ty, member));
            } else if self.is_punct('(') {
                methods.push(self.method(ty, member)?);
            } else {
                return self.fail(format!("expected `;` or `(` after `{ty} {member}`"));
            }
        }
        self.punct('}')?;
        let konst = konst.unwrap_or(ConstructorDecl { params: vec![], super_args: vec![], assigns: vec![] });
        Ok(ClassDecl { name, parent, fields, konst, methods })
    }

    fn params(&mut self) -> PResult<Vec<(String, String)>> {
        self.punct('(')?;
        let mut out = Vec::new();
        if !self.is_punct(')') {
            loop {
                let ty = self.ident()?;
                let v = self.ident()?;
                out.push((ty, v));
                if self.is_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        Ok(out)
    }

    fn constructor(&mut self) -> PResult<ConstructorDecl> {
        let params = self.params()?;
        self.punct('{')?;
        self.kw("super")?;
        self.punct('(')?;
        let mut super_args = Vec::new();
        if !self.is_punct(')') {
            loop {
                super_args.push(self.ident()?);
                if self.is_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        self.punct(';')?;
        let mut assigns = Vec::new();
        while !self.is_punct('}') {
            self.kw("this")?;
            self.punct('.')?;
            let f = self.ident()?;
            self.punct('=')?;
            let x = self.ident()?;
            self.punct(';')?;
            assigns.push((f, x));
        }
        self.punct('}')?;
        Ok(ConstructorDecl { params, super_args, assigns })
    }

    fn method(&mut self, return_class: String, name: String) -> PResult<MethodDecl> {
        let params = self.params()?;
        self.punct('{')?;
        let mut locals = Vec::new();
        while matches!(self.peek(), Tok::Ident(_)) && matches!(self.peek_at(1), Tok::Ident(_)) {
            let ty = self.ident()?;
            let v = self.ident()?;
            self.punct(';')?;
            locals.push((ty, v));
        }
        let body = self.stmts()?;
        self.punct('}')?;
        Ok(MethodDecl { return_class, name, params, locals, body })
    }

    fn stmts(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while !self.is_punct('}') && *self.peek() != Tok::Eof {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.punct('{')?;
        let body = self.stmts()?;
        self.punct('}')?;
        Ok(body)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let label = self.fresh_label();
        let kind = match self.peek().clone() {
            Tok::Kw("return") => {
                self.bump();
                let v = self.var()?;
                self.punct(';')?;
                StmtKind::Return(v)
            }
            Tok::Kw("throw") => {
                self.bump();
                let v = self.var()?;
                self.punct(';')?;
                StmtKind::Throw(v)
            }
            Tok::Kw("try") => {
                self.bump();
                let body = self.block()?;
                self.kw("catch")?;
                self.punct('(')?;
                let catch_class = self.ident()?;
                let catch_var = self.ident()?;
                self.punct(')')?;
                if !self.is_punct('{') {
                    return self.fail("expected handler block");
                }
                let handler = self.block()?;
                if handler.is_empty() {
                    return self.fail("empty catch handler");
                }
                StmtKind::Try { body, catch_class, catch_var, handler }
            }
            Tok::Ident(_) | Tok::Kw("this") => {
                let v = self.var()?;
                self.punct('=')?;
                let g = self.expr()?;
                self.punct(';')?;
                StmtKind::Assign(v, lower(g)?)
            }
            t => return self.fail(format!("expected statement, found {}", describe(&t))),
        };
        Ok(Stmt { label, kind })
    }

    fn args(&mut self) -> PResult<Vec<GExp>> {
        self.punct('(')?;
        let mut out = Vec::new();
        if !self.is_punct(')') {
            loop {
                out.push(self.expr()?);
                if self.is_punct(',') {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.punct(')')?;
        Ok(out)
    }

    fn expr(&mut self) -> PResult<GExp> {
        let mut e = self.primary()?;
        while self.is_punct('.') {
            self.bump();
            let name = self.ident()?;
            e = if self.is_punct('(') {
                let args = self.args()?;
                GExp::Call(Box::new(e), name, args)
            } else {
                GExp::Field(Box::new(e), name)
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<GExp> {
        let (line, col) = self.here();
        match self.peek().clone() {
            Tok::Ident(_) | Tok::Kw("this") => Ok(GExp::Var(self.var()?, line, col)),
            Tok::Kw("new") => {
                self.bump();
                let c = self.ident()?;
                let args = self.args()?;
                Ok(GExp::New(c, args, line, col))
            }
            Tok::Punct('(') => {
                let is_cast = matches!(self.peek_at(1), Tok::Ident(_))
                    && *self.peek_at(2) == Tok::Punct(')')
                    && matches!(self.peek_at(3), Tok::Ident(_) | Tok::Kw("this") | Tok::Kw("new") | Tok::Punct('('));
                self.bump();
                if is_cast {
                    let c = self.ident()?;
                    self.punct(')')?;
                    let inner = self.expr()?;
                    Ok(GExp::Cast(c, Box::new(inner), line, col))
                } else {
                    let inner = self.expr()?;
                    self.punct(')')?;
                    Ok(inner)
                }
            }
            t => self.fail(format!("expected expression, found {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Kw(k) => format!("`{k}`"),
        Tok::Punct(c) => format!("`{c}`"),
        Tok::Eof => "end of input".into(),
    }
}

fn atom(g: GExp, kind: ParseErrorKind) -> PResult<String> {
    match g {
        GExp::Var(v, _, _) => Ok(v),
        other => {
            let (line, col) = other.pos();
            Err(ParseError { line, col, kind })
        }
    }
}

fn lower(g: GExp) -> PResult<Exp> {
    let args = |xs: Vec<GExp>| -> PResult<Vec<String>> {
        xs.into_iter().map(|a| atom(a, ParseErrorKind::NonAtomicArgument)).collect()
    };
    Ok(match g {
        GExp::Var(v, _, _) => Exp::Var(v),
        GExp::Field(b, f) => Exp::Field(atom(*b, ParseErrorKind::NonAtomicOperand)?, f),
        GExp::Call(b, m, xs) => {
            let xs = args(xs)?;
            Exp::Invoke(atom(*b, ParseErrorKind::NonAtomicOperand)?, m, xs)
        }
        GExp::New(c, xs, _, _) => Exp::New(c, args(xs)?),
        GExp::Cast(c, b, _, _) => Exp::Cast(c, atom(*b, ParseErrorKind::NonAtomicOperand)?),
    })
}

/// Parses an ANFJ source text. Statements receive provisional labels in source order.
pub fn parse_program(source: &str) -> Result<Program, ParseError> {
    let toks = lex(source)?;
    let mut p = Parser { toks, pos: 0, next_label: 0 };
    p.program()
}
