use super::lexer::{tokenize, Tok, Token};
use super::{BinOp, Constant, Expr, Func, Offset, ParseError, Var};

const PREFIX_NEG_BP: u8 = 5;

fn infix_binding(tok: Tok<'_>) -> Option<(BinOp, u8, u8)> {
    Some(match tok {
        Tok::Plus => (BinOp::Add, 1, 2),
        Tok::Minus => (BinOp::Sub, 1, 2),
        Tok::Star => (BinOp::Mul, 3, 4),
        Tok::Slash => (BinOp::Div, 3, 4),
        Tok::Caret => (BinOp::Pow, 8, 7),
        _ => return None,
    })
}

pub(crate) fn parse(src: &str) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr(0)?;
    let next = parser.peek();
    match next.tok {
        Tok::End => Ok(expr),
        Tok::RParen => Err(ParseError::syntax(next.offset, "unmatched ')'")),
        Tok::Num(_) | Tok::Ident(_) | Tok::LParen => Err(ParseError::syntax(
            next.offset,
            "expected an operator (implicit multiplication is not supported)",
        )),
        _ => Err(ParseError::syntax(next.offset, "unexpected token")),
    }
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Token<'a> {
        self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token<'a> {
        let t = self.tokens[self.pos];
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.prefix()?;
        loop {
            let next = self.peek();
            let Some((op, lbp, rbp)) = infix_binding(next.tok) else {
                break;
            };
            if lbp < min_bp {
                break;
            }
            self.bump();
            let rhs = self.expr(rbp)?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                at: Offset(next.offset),
            };
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Minus => Ok(Expr::Neg(Box::new(self.expr(PREFIX_NEG_BP)?))),
            Tok::LParen => {
                let inner = self.expr(0)?;
                self.expect_rparen(t.offset)?;
                Ok(inner)
            }
            Tok::Ident(name) => self.ident(name, t.offset),
            Tok::End => Err(ParseError::syntax(t.offset, "unexpected end of input")),
            _ => Err(ParseError::syntax(t.offset, "expected an operand")),
        }
    }

    fn ident(&mut self, name: &str, offset: usize) -> Result<Expr, ParseError> {
        if let Some(func) = Func::from_name(name) {
            let open = self.peek();
            if open.tok != Tok::LParen {
                return Err(ParseError::syntax(
                    open.offset,
                    format!("expected '(' after function '{name}'"),
                ));
            }
            self.bump();
            let arg = self.expr(0)?;
            if self.peek().tok == Tok::Comma {
                return Err(ParseError::syntax(
                    self.peek().offset,
                    format!("function '{name}' takes exactly one argument"),
                ));
            }
            self.expect_rparen(open.offset)?;
            return Ok(Expr::Call {
                func,
                arg: Box::new(arg),
            });
        }
        match name {
            "x" => Ok(Expr::Var(Var::X)),
            "y" => Ok(Expr::Var(Var::Y)),
            "i" => Ok(Expr::Imag),
            "pi" => Ok(Expr::Const(Constant::Pi)),
            "e" => Ok(Expr::Const(Constant::E)),
            _ => Err(ParseError::syntax(offset, format!("unknown identifier '{name}'"))),
        }
    }

    fn expect_rparen(&mut self, open_offset: usize) -> Result<(), ParseError> {
        let t = self.peek();
        if t.tok == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(ParseError::syntax(
                t.offset,
                format!("expected ')' to close '(' at offset {open_offset}"),
            ))
        }
    }
}
