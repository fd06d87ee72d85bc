//! Cheminformatics primitives: a SMILES lexer and parser producing a
//! valence-checked molecular graph, canonical SMILES, simple descriptors,
//! and circular fingerprints with Tanimoto similarity.
//!
//! All functions are pure and safe to call from multiple threads.

pub mod canon;
pub mod element;
pub mod error;
pub mod fingerprint;
pub mod mol;
pub mod props;
pub mod token;

pub use canon::{canonical, canonical_ranks, canonical_smiles};
pub use element::Element;
pub use error::{ChemError, Result};
pub use fingerprint::{
    environments, fingerprint, tanimoto, Fingerprint, DEFAULT_RADIUS, DEFAULT_WIDTH,
};
pub use mol::{is_valid, parse, parse_smiles, Atom, Bond, BondOrder, Molecule};
pub use props::{properties, properties_with, LogPTable, Properties};
pub use token::{tokenize, BondSymbol, BracketAtom, Token, TokenKind};
