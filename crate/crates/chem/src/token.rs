//! SMILES lexer.
//!
//! Every token remembers the byte span it was read from, so the input can be
//! reconstructed exactly from the token stream. Stereo marks (`/`, `\`, `@`)
//! are lexed but carry no meaning downstream.

use crate::element::Element;
use crate::error::{ChemError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondSymbol {
    Single,
    Double,
    Triple,
    Aromatic,
    /// `/` or `\`; parsed as a single bond.
    Directional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BracketAtom {
    pub element: Element,
    pub aromatic: bool,
    pub isotope: Option<u16>,
    pub hydrogens: u8,
    pub charge: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Atom {
        element: Element,
        aromatic: bool,
    },
    Bracket(BracketAtom),
    Bond(BondSymbol),
    /// Ring-closure label in `0..=99`.
    Ring(u8),
    BranchOpen,
    BranchClose,
    Dot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub len: usize,
}

impl Token {
    pub fn lexeme<'a>(&self, text: &'a str) -> &'a str {
        &text[self.start..self.start + self.len]
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    if text.is_empty() {
        return Err(ChemError::Empty);
    }
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let start = pos;
        let c = bytes[pos];
        let kind = match c {
            b'(' => {
                pos += 1;
                TokenKind::BranchOpen
            }
            b')' => {
                pos += 1;
                TokenKind::BranchClose
            }
            b'.' => {
                pos += 1;
                TokenKind::Dot
            }
            b'-' => {
                pos += 1;
                TokenKind::Bond(BondSymbol::Single)
            }
            b'=' => {
                pos += 1;
                TokenKind::Bond(BondSymbol::Double)
            }
            b'#' => {
                pos += 1;
                TokenKind::Bond(BondSymbol::Triple)
            }
            b':' => {
                pos += 1;
                TokenKind::Bond(BondSymbol::Aromatic)
            }
            b'/' | b'\\' => {
                pos += 1;
                TokenKind::Bond(BondSymbol::Directional)
            }
            b'0'..=b'9' => {
                pos += 1;
                TokenKind::Ring(c - b'0')
            }
            b'%' => {
                let digits = bytes
                    .get(pos + 1..pos + 3)
                    .filter(|d| d.iter().all(u8::is_ascii_digit));
                match digits {
                    Some(d) => {
                        pos += 3;
                        TokenKind::Ring((d[0] - b'0') * 10 + (d[1] - b'0'))
                    }
                    None => return Err(lex_error(text, (pos + 1).min(bytes.len() - 1))),
                }
            }
            b'[' => {
                let (atom, next) = bracket(text, pos)?;
                pos = next;
                TokenKind::Bracket(atom)
            }
            _ => {
                let (element, aromatic, len) =
                    organic(bytes, pos).ok_or_else(|| lex_error(text, pos))?;
                pos += len;
                TokenKind::Atom { element, aromatic }
            }
        };
        tokens.push(Token {
            kind,
            start,
            len: pos - start,
        });
    }
    Ok(tokens)
}

fn lex_error(text: &str, position: usize) -> ChemError {
    let character = text[position..].chars().next().unwrap_or('\0');
    ChemError::Lex {
        position,
        character,
    }
}

fn organic(bytes: &[u8], pos: usize) -> Option<(Element, bool, usize)> {
    let two = bytes.get(pos..pos + 2);
    match two {
        Some(b"Cl") => return Some((Element::Cl, false, 2)),
        Some(b"Br") => return Some((Element::Br, false, 2)),
        _ => {}
    }
    let (element, aromatic) = match bytes[pos] {
        b'B' => (Element::B, false),
        b'C' => (Element::C, false),
        b'N' => (Element::N, false),
        b'O' => (Element::O, false),
        b'P' => (Element::P, false),
        b'S' => (Element::S, false),
        b'F' => (Element::F, false),
        b'I' => (Element::I, false),
        b'b' => (Element::B, true),
        b'c' => (Element::C, true),
        b'n' => (Element::N, true),
        b'o' => (Element::O, true),
        b'p' => (Element::P, true),
        b's' => (Element::S, true),
        _ => return None,
    };
    Some((element, aromatic, 1))
}

/// Lex `[isotope? symbol chiral? hcount? charge? class?]` starting at `open`.
fn bracket(text: &str, open: usize) -> Result<(BracketAtom, usize)> {
    let bytes = text.as_bytes();
    let mut pos = open + 1;
    let at = |p: usize| bytes.get(p).copied();

    let mut isotope = None;
    let digits_start = pos;
    while at(pos).is_some_and(|b| b.is_ascii_digit()) {
        pos += 1;
    }
    if pos > digits_start {
        let value: u16 = text[digits_start..pos]
            .parse()
            .map_err(|_| lex_error(text, digits_start))?;
        isotope = Some(value);
    }

    let (element, aromatic) = bracket_symbol(bytes, pos).ok_or_else(|| {
        if pos >= bytes.len() {
            lex_error(text, bytes.len() - 1)
        } else {
            lex_error(text, pos)
        }
    })?;
    pos += element.symbol().len();

    // Chirality is accepted and dropped.
    while at(pos) == Some(b'@') {
        pos += 1;
    }

    let mut hydrogens = 0u8;
    if at(pos) == Some(b'H') {
        pos += 1;
        hydrogens = 1;
        if let Some(d) = at(pos).filter(u8::is_ascii_digit) {
            hydrogens = d - b'0';
            pos += 1;
        }
    }

    let mut charge = 0i8;
    if let Some(sign @ (b'+' | b'-')) = at(pos) {
        let unit: i8 = if sign == b'+' { 1 } else { -1 };
        pos += 1;
        charge = unit;
        if let Some(d) = at(pos).filter(u8::is_ascii_digit) {
            pos += 1;
            charge = unit * (d - b'0') as i8;
        } else {
            while at(pos) == Some(sign) {
                pos += 1;
                charge += unit;
            }
        }
        if !(-4..=4).contains(&charge) {
            return Err(lex_error(text, pos - 1));
        }
    }

    if at(pos) == Some(b':') {
        pos += 1;
        let class_start = pos;
        while at(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        if pos == class_start {
            return Err(lex_error(text, pos.min(bytes.len() - 1)));
        }
    }

    match at(pos) {
        Some(b']') => Ok((
            BracketAtom {
                element,
                aromatic,
                isotope,
                hydrogens,
                charge,
            },
            pos + 1,
        )),
        _ => Err(lex_error(text, pos.min(bytes.len() - 1))),
    }
}

fn bracket_symbol(bytes: &[u8], pos: usize) -> Option<(Element, bool)> {
    let rest = bytes.get(pos..)?;
    if rest.starts_with(b"se") {
        return Some((Element::Se, true));
    }
    for len in [2usize, 1] {
        let Some(sym) = rest.get(..len) else { continue };
        let Ok(sym) = std::str::from_utf8(sym) else {
            continue;
        };
        if let Some(e) = Element::from_symbol(sym) {
            return Some((e, false));
        }
        if len == 1 {
            let upper = sym.to_ascii_uppercase();
            if let Some(e) = Element::from_symbol(&upper).filter(|e| e.can_be_aromatic()) {
                if sym.as_bytes()[0].is_ascii_lowercase() {
                    return Some((e, true));
                }
            }
        }
    }
    None
}
