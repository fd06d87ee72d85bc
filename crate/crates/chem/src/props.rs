//! Physicochemical descriptors: molecular weight, additive logP, and
//! Lipinski donor/acceptor counts.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{ChemError, Result};
use crate::mol::{BondOrder, Molecule};

const DEFAULT_TABLE: &str = include_str!("../data/logp_contrib.txt");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Properties {
    /// g/mol, hydrogens included.
    pub mw: f64,
    pub logp: f64,
    pub hbd: u32,
    pub hba: u32,
}

/// Atom-type contribution table for the additive logP estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogPTable {
    entries: BTreeMap<String, f64>,
}

impl Default for LogPTable {
    fn default() -> Self {
        LogPTable::parse(DEFAULT_TABLE).expect("bundled logP table is well formed")
    }
}

impl LogPTable {
    /// Parse `TYPE VALUE` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<LogPTable> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_whitespace();
            let (Some(name), Some(value), None) = (fields.next(), fields.next(), fields.next())
            else {
                return Err(ChemError::Table {
                    line: i + 1,
                    message: "expected two fields".into(),
                });
            };
            let value: f64 = value.parse().map_err(|_| ChemError::Table {
                line: i + 1,
                message: format!("bad number {value:?}"),
            })?;
            entries.insert(name.to_string(), value);
        }
        Ok(LogPTable { entries })
    }

    pub fn get(&self, atom_type: &str) -> Result<f64> {
        self.entries
            .get(atom_type)
            .copied()
            .ok_or_else(|| ChemError::UnsupportedElement(atom_type.to_string()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn is_hetero(e: Element) -> bool {
    !matches!(e, Element::C | Element::H)
}

/// Atom type used to look up a logP contribution.
pub fn logp_type(mol: &Molecule, i: usize) -> &'static str {
    let atom = &mol.atoms()[i];
    let orders: Vec<(Element, BondOrder)> = mol
        .neighbors(i)
        .map(|(j, b)| (mol.atoms()[j].element, b.order))
        .collect();
    let has = |o: BondOrder| orders.iter().any(|&(_, b)| b == o);
    match atom.element {
        Element::C => {
            let hetero_neighbor = orders.iter().any(|&(e, _)| is_hetero(e));
            if atom.aromatic {
                if hetero_neighbor {
                    "C.ar.X"
                } else {
                    "C.ar"
                }
            } else if has(BondOrder::Triple) {
                "C.sp"
            } else if orders
                .iter()
                .any(|&(e, b)| b == BondOrder::Double && is_hetero(e))
            {
                "C.carbonyl"
            } else if has(BondOrder::Double) {
                "C.sp2"
            } else if hetero_neighbor {
                "C.sp3.X"
            } else {
                "C.sp3"
            }
        }
        Element::N => {
            if atom.charge != 0 {
                "N.charged"
            } else if atom.aromatic {
                "N.ar"
            } else if has(BondOrder::Double) || has(BondOrder::Triple) {
                "N.sp2"
            } else if mol.neighbors(i).any(|(j, _)| is_carbonyl_carbon(mol, j)) {
                "N.amide"
            } else {
                "N.amine"
            }
        }
        Element::O => {
            if atom.charge != 0 {
                "O.charged"
            } else if atom.aromatic {
                "O.ar"
            } else if has(BondOrder::Double) {
                "O.carbonyl"
            } else if atom.hydrogens() > 0 {
                "O.hydroxyl"
            } else {
                "O.ether"
            }
        }
        Element::S if atom.aromatic => "S.ar",
        Element::S => "S",
        Element::P => "P",
        Element::F => "F",
        Element::Cl => "Cl",
        Element::Br => "Br",
        Element::I => "I",
        Element::B => "B",
        Element::Si => "Si",
        Element::Se => "Se",
        Element::H => "H",
    }
}

fn is_carbonyl_carbon(mol: &Molecule, j: usize) -> bool {
    mol.atoms()[j].element == Element::C
        && mol
            .neighbors(j)
            .any(|(k, b)| b.order == BondOrder::Double && mol.atoms()[k].element == Element::O)
}

fn hydrogen_type(e: Element) -> &'static str {
    match e {
        Element::C => "H.C",
        Element::N => "H.N",
        Element::O => "H.O",
        _ => "H.X",
    }
}

/// Sums are taken over sorted terms so the result does not depend on atom
/// order.
pub fn properties_with(mol: &Molecule, table: &LogPTable) -> Result<Properties> {
    let mut masses = Vec::with_capacity(mol.atom_count());
    let mut contribs = Vec::with_capacity(mol.atom_count() * 2);
    let mut hbd = 0;
    let mut hba = 0;
    for (i, atom) in mol.atoms().iter().enumerate() {
        let h = atom.hydrogens();
        masses.push(atom.element.mass() + f64::from(h) * Element::H.mass());
        contribs.push(table.get(logp_type(mol, i))?);
        if h > 0 {
            contribs.push(f64::from(h) * table.get(hydrogen_type(atom.element))?);
        }
        if matches!(atom.element, Element::N | Element::O) {
            hba += 1;
            if h > 0 {
                hbd += 1;
            }
        }
    }
    Ok(Properties {
        mw: sorted_sum(masses),
        logp: sorted_sum(contribs),
        hbd,
        hba,
    })
}

fn sorted_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

/// Descriptors using the bundled contribution table.
pub fn properties(mol: &Molecule) -> Result<Properties> {
    properties_with(mol, &LogPTable::default())
}
