use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChemError {
    #[error("empty SMILES string")]
    Empty,

    #[error("unexpected character {character:?} at position {position}")]
    Lex { position: usize, character: char },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("valence violation on atom {atom} ({element}): {message}")]
    Valence {
        atom: usize,
        element: &'static str,
        message: String,
    },

    #[error("no property entry for {0}")]
    UnsupportedElement(String),

    #[error("fingerprint widths differ ({0} vs {1})")]
    WidthMismatch(usize, usize),

    #[error("malformed logP table line {line}: {message}")]
    Table { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, ChemError>;
