//! Lexer and recursive-descent parser for the rule language.
//!
//! ```text
//! pack := rule+
//! rule := "rule" NAME ":" "when" atom ("," atom)* "then" "classify" "(" VAR "," CLASS ")"
//! atom := "instance" "(" VAR "," CLASS ")" | "exists" "(" CLASS ")"
//! ```
//!
//! `#` starts a comment running to end of line. Positions are 1-based and
//! count characters.

use std::collections::BTreeMap;

use super::{Rule, RuleError, RulePack};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Var(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("`{n}`"),
            Tok::Var(v) => format!("`?{v}`"),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn lex(text: &str) -> Result<Vec<(Tok, Pos)>, RuleError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let pos = Pos { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    chars.next();
                    col += 1;
                }
            }
            '(' | ')' | ',' | ':' => {
                chars.next();
                col += 1;
                out.push((
                    match c {
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        ',' => Tok::Comma,
                        _ => Tok::Colon,
                    },
                    pos,
                ));
            }
            '?' => {
                chars.next();
                col += 1;
                let mut name = String::new();
                while let Some(&c) = chars.peek().filter(|&&c| is_name_char(c)) {
                    name.push(c);
                    chars.next();
                    col += 1;
                }
                if name.is_empty() {
                    let found = chars.peek().map_or("end of input".to_string(), |c| format!("`{c}`"));
                    return Err(RuleError::Syntax {
                        line,
                        col,
                        expected: "variable name after `?`".into(),
                        found,
                    });
                }
                out.push((Tok::Var(name), pos));
            }
            c if is_name_char(c) => {
                let mut name = String::new();
                while let Some(&c) = chars.peek().filter(|&&c| is_name_char(c)) {
                    name.push(c);
                    chars.next();
                    col += 1;
                }
                out.push((Tok::Name(name), pos));
            }
            other => {
                return Err(RuleError::Syntax {
                    line,
                    col,
                    expected: "a rule token".into(),
                    found: format!("`{other}`"),
                })
            }
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &(Tok, Pos) {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> (Tok, Pos) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> RuleError {
        let (tok, pos) = self.peek();
        RuleError::Syntax { line: pos.line, col: pos.col, expected: expected.into(), found: tok.describe() }
    }

    fn keyword(&mut self, kw: &str) -> Result<Pos, RuleError> {
        match self.peek() {
            (Tok::Name(n), pos) if n == kw => {
                let pos = *pos;
                self.bump();
                Ok(pos)
            }
            _ => Err(self.error(&format!("`{kw}`"))),
        }
    }

    fn punct(&mut self, want: Tok) -> Result<(), RuleError> {
        if self.peek().0 == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&want.describe()))
        }
    }

    fn name(&mut self, what: &str) -> Result<(String, Pos), RuleError> {
        match self.peek().clone() {
            (Tok::Name(n), pos) => {
                self.bump();
                Ok((n, pos))
            }
            _ => Err(self.error(what)),
        }
    }

    fn var(&mut self) -> Result<(String, Pos), RuleError> {
        match self.peek().clone() {
            (Tok::Var(v), pos) => {
                self.bump();
                Ok((v, pos))
            }
            _ => Err(self.error("a variable (`?name`)")),
        }
    }

    fn rule(&mut self) -> Result<Rule, RuleError> {
        self.keyword("rule")?;
        let (name, name_pos) = self.name("a rule name")?;
        self.punct(Tok::Colon)?;
        self.keyword("when")?;

        let mut anchor: Option<(String, String, Pos)> = None;
        let mut requires = Vec::new();
        let mut class_refs = Vec::new();
        loop {
            match self.peek().clone() {
                (Tok::Name(kw), kw_pos) if kw == "instance" => {
                    self.bump();
                    self.punct(Tok::LParen)?;
                    let (v, _) = self.var()?;
                    self.punct(Tok::Comma)?;
                    let (class, class_pos) = self.name("a class name")?;
                    self.punct(Tok::RParen)?;
                    if anchor.is_some() {
                        return Err(RuleError::Anchor {
                            rule: name,
                            line: kw_pos.line,
                            col: kw_pos.col,
                            message: "a rule takes exactly one `instance` atom".into(),
                        });
                    }
                    class_refs.push((class.clone(), class_pos));
                    anchor = Some((v, class, kw_pos));
                }
                (Tok::Name(kw), _) if kw == "exists" => {
                    self.bump();
                    self.punct(Tok::LParen)?;
                    let (class, class_pos) = self.name("a class name")?;
                    self.punct(Tok::RParen)?;
                    class_refs.push((class.clone(), class_pos));
                    requires.push(class);
                }
                _ => return Err(self.error("`instance` or `exists`")),
            }
            match self.peek() {
                (Tok::Comma, _) => {
                    self.bump();
                }
                (Tok::Name(n), _) if n == "then" => break,
                _ => return Err(self.error("`,` or `then`")),
            }
        }
        let then_pos = self.keyword("then")?;
        self.keyword("classify")?;
        self.punct(Tok::LParen)?;
        let (var, var_pos) = self.var()?;
        self.punct(Tok::Comma)?;
        let (conclusion, concl_pos) = self.name("a class name")?;
        self.punct(Tok::RParen)?;
        class_refs.push((conclusion.clone(), concl_pos));

        let Some((anchor_var, anchor_class, _)) = anchor else {
            return Err(RuleError::Anchor {
                rule: name,
                line: then_pos.line,
                col: then_pos.col,
                message: "missing `instance` atom".into(),
            });
        };
        if var != anchor_var {
            return Err(RuleError::Anchor {
                rule: name,
                line: var_pos.line,
                col: var_pos.col,
                message: format!("`?{var}` is not the anchor variable `?{anchor_var}`"),
            });
        }
        Ok(Rule {
            name,
            anchor_var,
            anchor_class,
            requires,
            conclusion,
            line: name_pos.line,
            col: name_pos.col,
            class_refs: class_refs.into_iter().map(|(c, p)| (c, p.line, p.col)).collect(),
        })
    }
}

/// Parses rule text without checking classes against a taxonomy.
pub fn parse_pack(text: &str) -> Result<RulePack, RuleError> {
    let mut p = Parser { toks: lex(text)?, at: 0 };
    let mut rules: Vec<Rule> = Vec::new();
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    loop {
        if p.peek().0 == Tok::Eof && !rules.is_empty() {
            break;
        }
        let rule = p.rule()?;
        if seen.insert(rule.name.clone(), ()).is_some() {
            return Err(RuleError::DuplicateRuleName { name: rule.name, line: rule.line, col: rule.col });
        }
        rules.push(rule);
    }
    Ok(RulePack { rules })
}
