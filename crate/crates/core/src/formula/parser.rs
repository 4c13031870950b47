//! Recursive-descent parser for the constraint language.
//!
//! ```text
//! var x in [0, 1];            # declaration; brackets choose weak/strict bounds
//! var y in (-inf, +inf);
//! y = sigmoid(2*x + 1);       # equation over + - * exp() sigmoid()
//! x <= 0.5;                   # bound constraint
//! clause x >= 1 or not(y < 0);
//! ```

use std::fmt;

use crate::interval::{Interval, VarId};

use super::lower::{EncodingMode, Expr, LowerError, Lowerer};
use super::{BoundAtom, Clause, ConstraintSystem, Literal, Relation};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax(String),
    Undeclared(String),
    Duplicate(String),
    MalformedNumber(String),
    Lowering(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: ", self.line, self.col)?;
        match &self.kind {
            ParseErrorKind::Syntax(m) => write!(f, "syntax error: {m}"),
            ParseErrorKind::Undeclared(n) => write!(f, "undeclared variable `{n}`"),
            ParseErrorKind::Duplicate(n) => write!(f, "duplicate declaration of `{n}`"),
            ParseErrorKind::MalformedNumber(n) => write!(f, "malformed number `{n}`"),
            ParseErrorKind::Lowering(m) => write!(f, "{m}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 14] = ["<=", ">=", "<", ">", "=", ";", ",", "[", "]", "(", ")", "+", "-", "*"];

struct Lexed {
    tokens: Vec<Token>,
    origin: Option<String>,
    encoding: Option<String>,
}

fn lex(text: &str) -> Result<Lexed, ParseError> {
    let mut tokens = Vec::new();
    let mut origin = None;
    let mut encoding = None;
    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' {
                let comment: String = chars[i + 1..].iter().collect();
                let comment = comment.trim();
                if let Some(rest) = comment.strip_prefix("origin:") {
                    origin = Some(rest.trim().to_string());
                } else if let Some(rest) = comment.strip_prefix("encoding:") {
                    encoding = Some(rest.trim().to_string());
                }
                break;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                tokens.push(Token {
                    tok: Tok::Ident(word),
                    line: line_no,
                    col,
                });
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.') {
                    // exponent sign
                    if (chars[i] == 'e' || chars[i] == 'E')
                        && i + 1 < chars.len()
                        && (chars[i + 1] == '-' || chars[i + 1] == '+')
                    {
                        i += 1;
                    }
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let value: f64 = word.parse().map_err(|_| ParseError {
                    line: line_no,
                    col,
                    kind: ParseErrorKind::MalformedNumber(word.clone()),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        line: line_no,
                        col,
                        kind: ParseErrorKind::MalformedNumber(word),
                    });
                }
                tokens.push(Token {
                    tok: Tok::Num(value),
                    line: line_no,
                    col,
                });
            } else {
                let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
                let sym = SYMBOLS.iter().find(|s| rest.starts_with(**s)).ok_or_else(|| ParseError {
                    line: line_no,
                    col,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{c}`")),
                })?;
                tokens.push(Token {
                    tok: Tok::Sym(sym),
                    line: line_no,
                    col,
                });
                i += sym.len();
            }
        }
    }
    let (line, col) = tokens.last().map(|t| (t.line, t.col + 1)).unwrap_or((1, 1));
    tokens.push(Token { tok: Tok::Eof, line, col });
    Ok(Lexed {
        tokens,
        origin,
        encoding,
    })
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    system: &'a mut ConstraintSystem,
    mode: EncodingMode,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.pos + k).min(self.tokens.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.col)
    }

    fn err<T>(&self, kind: ParseErrorKind) -> Result<T, ParseError> {
        let (line, col) = self.here();
        Err(ParseError { line, col, kind })
    }

    fn syntax<T>(&self, msg: &str) -> Result<T, ParseError> {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        self.err(ParseErrorKind::Syntax(format!("expected {msg}, found {found}")))
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, sym: &str) -> Result<(), ParseError> {
        if self.eat(sym) {
            Ok(())
        } else {
            self.syntax(&format!("`{sym}`"))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.syntax("identifier"),
        }
    }

    fn variable(&mut self) -> Result<VarId, ParseError> {
        let pos = self.pos;
        let name = self.ident()?;
        match self.system.lookup(&name) {
            Some(v) => Ok(v),
            None => {
                self.pos = pos;
                self.err(ParseErrorKind::Undeclared(name))
            }
        }
    }

    /// Signed number, allowing `inf`.
    fn number(&mut self) -> Result<f64, ParseError> {
        let sign = if self.eat("-") {
            -1.0
        } else {
            self.eat("+");
            1.0
        };
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(sign * n)
            }
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                Ok(sign * f64::INFINITY)
            }
            _ => self.syntax("number"),
        }
    }

    fn relation(&mut self) -> Result<Relation, ParseError> {
        let rel = match self.peek() {
            Tok::Sym("<") => Relation::Lt,
            Tok::Sym("<=") => Relation::Le,
            Tok::Sym(">") => Relation::Gt,
            Tok::Sym(">=") => Relation::Ge,
            _ => return self.syntax("relation (<, <=, >, >=)"),
        };
        self.bump();
        Ok(rel)
    }

    fn program(&mut self) -> Result<(), ParseError> {
        while *self.peek() != Tok::Eof {
            self.statement()?;
        }
        Ok(())
    }

    fn statement(&mut self) -> Result<(), ParseError> {
        if self.is_keyword("var") {
            self.bump();
            let pos = self.pos;
            let name = self.ident()?;
            if !self.is_keyword("in") {
                return self.syntax("`in`");
            }
            self.bump();
            let init = self.interval()?;
            self.expect(";")?;
            if self.system.declare(&name, init).is_err() {
                self.pos = pos;
                return self.err(ParseErrorKind::Duplicate(name));
            }
            return Ok(());
        }
        if self.is_keyword("clause") {
            self.bump();
            let mut lits = vec![self.literal()?];
            while self.is_keyword("or") {
                self.bump();
                lits.push(self.literal()?);
            }
            self.expect(";")?;
            self.system.add_clause(Clause::new(lits));
            return Ok(());
        }
        let start = self.pos;
        let y = self.variable()?;
        if self.eat("=") {
            let expr = self.expr()?;
            let (line, col) = {
                let t = &self.tokens[start];
                (t.line, t.col)
            };
            self.expect(";")?;
            let emitted = Lowerer::new(self.system, self.mode)
                .define(y, &expr)
                .map_err(|e: LowerError| ParseError {
                    line,
                    col,
                    kind: ParseErrorKind::Lowering(e.to_string()),
                })?;
            if !emitted {
                // `y = c;` pins y
                let c = constant_value(&expr);
                self.system.assert_atom(BoundAtom::new(y, Relation::Ge, c));
                self.system.assert_atom(BoundAtom::new(y, Relation::Le, c));
            }
            return Ok(());
        }
        let rel = self.relation()?;
        let c = self.number()?;
        self.expect(";")?;
        self.system.assert_atom(BoundAtom::new(y, rel, c));
        Ok(())
    }

    fn literal(&mut self) -> Result<Literal, ParseError> {
        if self.is_keyword("not") {
            self.bump();
            self.expect("(")?;
            let atom = self.atom()?;
            self.expect(")")?;
            Ok(Literal::neg(atom))
        } else {
            Ok(Literal::pos(self.atom()?))
        }
    }

    fn atom(&mut self) -> Result<BoundAtom, ParseError> {
        let v = self.variable()?;
        let rel = self.relation()?;
        let c = self.number()?;
        Ok(BoundAtom::new(v, rel, c))
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        let lo_strict = if self.eat("(") {
            true
        } else if self.eat("[") {
            false
        } else {
            return self.syntax("`[` or `(`");
        };
        let lo = self.number()?;
        self.expect(",")?;
        let hi = self.number()?;
        let hi_strict = if self.eat(")") {
            true
        } else if self.eat("]") {
            false
        } else {
            return self.syntax("`]` or `)`");
        };
        Ok(Interval::normalized(lo, lo_strict, hi, hi_strict))
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.term()?];
        loop {
            if self.eat("+") {
                items.push(self.term()?);
            } else if self.eat("-") {
                items.push(Expr::Neg(Box::new(self.term()?)));
            } else {
                break;
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Sum(items) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        while self.eat("*") {
            factors.push(self.unary()?);
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Mul(factors) })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat("-") {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::Const(n))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect(")")?;
                Ok(e)
            }
            Tok::Ident(name) if matches!(self.peek_at(1), Tok::Sym("(")) => {
                self.bump();
                self.bump();
                let mut args = vec![self.expr()?];
                while self.eat(",") {
                    args.push(self.expr()?);
                }
                self.expect(")")?;
                match (name.as_str(), args.len()) {
                    ("exp", 1) => Ok(Expr::Exp(Box::new(args.pop().unwrap()))),
                    ("sigmoid", 1) => Ok(Expr::Sigmoid(Box::new(args.pop().unwrap()))),
                    _ => Ok(Expr::Call(name, args)),
                }
            }
            Tok::Ident(name) if name == "inf" => self.syntax("finite number or variable"),
            Tok::Ident(_) => Ok(Expr::Var(self.variable()?)),
            _ => self.syntax("expression"),
        }
    }
}

fn constant_value(e: &Expr) -> f64 {
    match e {
        Expr::Const(c) => *c,
        Expr::Neg(inner) => -constant_value(inner),
        Expr::Sum(items) => items.iter().map(constant_value).sum(),
        Expr::Mul(items) => items.iter().map(constant_value).product(),
        _ => f64::NAN,
    }
}

/// Parses a constraint system, encoding `sigmoid` with the dedicated contractor.
pub fn parse_system(text: &str) -> Result<ConstraintSystem, ParseError> {
    parse_system_with(text, EncodingMode::Dedicated)
}

/// Parses a constraint system with the given sigmoid encoding.
pub fn parse_system_with(text: &str, mode: EncodingMode) -> Result<ConstraintSystem, ParseError> {
    let lexed = lex(text)?;
    let mut system = ConstraintSystem::new();
    let mut p = Parser {
        tokens: lexed.tokens,
        pos: 0,
        system: &mut system,
        mode,
    };
    p.program()?;
    system.metadata.origin = lexed.origin.unwrap_or_default();
    system.metadata.encoding = lexed.encoding;
    Ok(system)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::icp::Equation;

    #[test]
    fn sigmoid_declaration_example() {
        let s = parse_system("var x in [0,1]; var y in [0,1]; y = sigmoid(x);").unwrap();
        assert_eq!(s.num_vars(), 2);
        assert_eq!(s.equations, vec![Equation::Sigmoid { y: VarId(1), x: VarId(0) }]);
    }

    #[test]
    fn affine_sum_example() {
        let s = parse_system("var x0 in [0,1]; var x1 in [0,1]; var y in [0,1];\ny = 0.5*x0 + 0.5*x1 + 0.0;").unwrap();
        assert_eq!(
            s.equations,
            vec![Equation::AffineSum {
                y: VarId(2),
                terms: vec![(0.5, VarId(0)), (0.5, VarId(1))],
                constant: 0.0
            }]
        );
    }

    #[test]
    fn intervals_and_clauses() {
        let s = parse_system(
            "var x in (-inf, 3]; var y in (0, 1); # comment\n\
             x >= -2.5e-1;\n\
             clause x >= 1 or not(y < 0);",
        )
        .unwrap();
        assert_eq!(s.var(VarId(0)).init, Interval::closed(f64::NEG_INFINITY, 3.0));
        assert_eq!(s.var(VarId(1)).init, Interval::open(0.0, 1.0));
        assert_eq!(s.clauses.len(), 2);
        assert_eq!(s.clauses[0], Clause::unit(BoundAtom::new(VarId(0), Relation::Ge, -0.25)));
        assert!(!s.clauses[1].literals[1].positive);
    }

    #[test]
    fn error_positions() {
        let e = parse_system("var x in [0,1];\ny = sigmoid(x);").unwrap_err();
        assert_eq!((e.line, e.col), (2, 1));
        assert_eq!(e.kind, ParseErrorKind::Undeclared("y".into()));

        let e = parse_system("var x in [0,1];\nvar x in [0,2];").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Duplicate("x".into()));
        assert_eq!(e.line, 2);

        let e = parse_system("var x in [0,1.2.3];").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::MalformedNumber("1.2.3".into()));
        assert_eq!((e.line, e.col), (1, 13));

        let e = parse_system("var x in [0,1]\nvar y in [0,1];").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::Syntax(_)));
        assert_eq!(e.line, 2);

        let e = parse_system("var x in [0,1]; var y in [0,1]; y = tanh(x);").unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::Lowering("unsupported operator `tanh`".into()));
    }

    #[test]
    fn operators_lower_to_expected_kinds() {
        let s = parse_system(
            "var a in [0,1]; var b in [0,1]; var c in (-inf,+inf); var d in (-inf,+inf); var e in (-inf,+inf);\n\
             c = a * b; d = -a; e = exp(a);",
        )
        .unwrap();
        let kinds: Vec<_> = s.equations.iter().map(|e| e.kind_name()).collect();
        assert_eq!(kinds, ["product", "neg", "exp"]);
    }

    #[test]
    fn nested_expression_introduces_auxiliaries() {
        let s = parse_system("var x in [0,1]; var y in [0,1]; y = sigmoid(2*x - 1);").unwrap();
        assert_eq!(s.equations.len(), 2);
        assert_eq!(s.num_vars(), 3);
    }

    #[test]
    fn constant_equation_pins_variable() {
        let s = parse_system("var y in [0,10]; y = 2 * 3;").unwrap();
        assert!(s.equations.is_empty());
        assert_eq!(s.clauses.len(), 2);
    }

    #[test]
    fn print_round_trip() {
        let text = "var x in [0,1]; var y in (0,1); var z in [-1, 1); var w in (-inf, +inf);\n\
                    y = sigmoid(2*x + 0.1); z = x * y; w = -z; x <= 0.75; clause z > 0.5 or not(w >= 1e-3);";
        let s = parse_system(text).unwrap();
        let printed = s.to_string();
        let again = parse_system(&printed).unwrap();
        assert_eq!(s, again, "{printed}");

        let comp = parse_system_with("var x in [0,1]; var y in [0,1]; y = sigmoid(x);", EncodingMode::Compositional).unwrap();
        assert_eq!(parse_system(&comp.to_string()).unwrap(), comp);
    }
}
