//! Molecular graph and the SMILES parser that builds it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::element::Element;
use crate::error::{ChemError, Result};
use crate::token::{tokenize, BondSymbol, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's bond-valence sum. Aromatic bonds count 1;
    /// the extra pi electron is handled per atom.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BondOrder::Single => "-",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
            BondOrder::Aromatic => ":",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub element: Element,
    pub charge: i8,
    /// Hydrogens written inside brackets.
    pub explicit_h: u8,
    /// Hydrogens added to fill a default valence (organic subset only).
    pub implicit_h: u8,
    pub aromatic: bool,
    pub bracket: bool,
}

impl Atom {
    pub fn hydrogens(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.a == atom {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: (neighbour, bond index), in bond-creation order.
    adjacency: Vec<Vec<(usize, usize)>>,
    ring_bond: Vec<bool>,
}

impl Molecule {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn neighbors(&self, atom: usize) -> impl Iterator<Item = (usize, &Bond)> + '_ {
        self.adjacency[atom]
            .iter()
            .map(move |&(n, b)| (n, &self.bonds[b]))
    }

    /// (neighbour, bond index) pairs for `atom`.
    pub fn adjacent(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|&&(n, _)| n == b)
            .map(|&(_, i)| &self.bonds[i])
    }

    pub fn is_ring_bond(&self, bond: usize) -> bool {
        self.ring_bond[bond]
    }

    pub fn in_ring(&self, atom: usize) -> bool {
        self.adjacency[atom].iter().any(|&(_, b)| self.ring_bond[b])
    }

    pub fn total_hydrogens(&self) -> u32 {
        self.atoms.iter().map(|a| a.hydrogens() as u32).sum()
    }

    fn bond_valence(&self, atom: usize) -> u8 {
        self.neighbors(atom).map(|(_, b)| b.order.valence()).sum()
    }

    /// Hydrogen count a bare organic-subset symbol would receive at this
    /// position, or `None` if no default valence fits.
    pub(crate) fn default_hydrogens(&self, atom: usize) -> Option<u8> {
        let a = &self.atoms[atom];
        implicit_hydrogens(
            a.element,
            a.charge,
            a.aromatic,
            self.bond_valence(atom),
            self.has_multiple_bond(atom),
        )
    }

    fn has_multiple_bond(&self, atom: usize) -> bool {
        self.neighbors(atom)
            .any(|(_, b)| matches!(b.order, BondOrder::Double | BondOrder::Triple))
    }

    fn build(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Molecule {
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (i, b) in bonds.iter().enumerate() {
            adjacency[b.a].push((b.b, i));
            adjacency[b.b].push((b.a, i));
        }
        let ring_bond = ring_bonds(atoms.len(), &bonds, &adjacency);
        Molecule {
            atoms,
            bonds,
            adjacency,
            ring_bond,
        }
    }

    /// Assign implicit hydrogens and enforce every structural invariant.
    fn finalize(mut self) -> Result<Molecule> {
        for i in 0..self.atoms.len() {
            let sum = self.bond_valence(i);
            let multiple = self.has_multiple_bond(i);
            let atom = &self.atoms[i];
            let fail = |message: String| ChemError::Valence {
                atom: i,
                element: atom.element.symbol(),
                message,
            };
            let allowed = atom.element.allowed_valences(atom.charge);
            if allowed.is_empty() {
                return Err(fail(format!("charge {} not representable", atom.charge)));
            }
            if atom.aromatic && !self.in_ring(i) {
                return Err(fail("aromatic atom outside a ring".into()));
            }
            if atom.bracket {
                let pi = u8::from(
                    atom.aromatic && !multiple && atom.element.is_carbon_like(atom.charge),
                );
                let total = sum + atom.explicit_h + pi;
                let max = *allowed.last().unwrap();
                if total > max {
                    return Err(fail(format!("valence {total} exceeds {max}")));
                }
            } else {
                let h = implicit_hydrogens(atom.element, atom.charge, atom.aromatic, sum, multiple)
                    .ok_or_else(|| {
                        fail(format!("bond valence {sum} exceeds allowed {allowed:?}"))
                    })?;
                self.atoms[i].implicit_h = h;
            }
        }
        for b in &self.bonds {
            if b.order == BondOrder::Aromatic
                && !(self.atoms[b.a].aromatic && self.atoms[b.b].aromatic)
            {
                return Err(ChemError::Parse {
                    position: 0,
                    message: format!("aromatic bond {}-{} joins a non-aromatic atom", b.a, b.b),
                });
            }
        }
        Ok(self)
    }
}

/// Default hydrogen fill for an organic-subset atom.
fn implicit_hydrogens(
    element: Element,
    charge: i8,
    aromatic: bool,
    sum: u8,
    multiple: bool,
) -> Option<u8> {
    let allowed = element.allowed_valences(charge);
    let fill = |need: u8| allowed.iter().find(|&&v| v >= need).map(|&v| v - need);
    if !aromatic {
        return fill(sum);
    }
    let pi = u8::from(!multiple);
    if element.is_carbon_like(charge) {
        return fill(sum + pi);
    }
    // Heteroatoms either donate a lone pair (furan O, thiophene S) or take
    // part in a double bond (pyridine N); both need no extra hydrogen.
    if allowed.contains(&(sum + pi)) || allowed.contains(&sum) {
        return Some(0);
    }
    fill(sum + pi)
}

/// Marks bonds that lie on a cycle (i.e. are not bridges).
fn ring_bonds(n: usize, bonds: &[Bond], adjacency: &[Vec<(usize, usize)>]) -> Vec<bool> {
    let mut in_ring = vec![true; bonds.len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut time = 0;
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        // Iterative Tarjan bridge search: (atom, parent bond, next adjacency slot).
        let mut stack: Vec<(usize, usize, usize)> = vec![(root, usize::MAX, 0)];
        disc[root] = time;
        low[root] = time;
        time += 1;
        while let Some(&mut (v, parent_bond, ref mut slot)) = stack.last_mut() {
            if *slot < adjacency[v].len() {
                let (w, bond) = adjacency[v][*slot];
                *slot += 1;
                if bond == parent_bond {
                    continue;
                }
                if disc[w] == usize::MAX {
                    disc[w] = time;
                    low[w] = time;
                    time += 1;
                    stack.push((w, bond, 0));
                } else {
                    low[v] = low[v].min(disc[w]);
                }
            } else {
                stack.pop();
                if let Some(&(u, _, _)) = stack.last() {
                    low[u] = low[u].min(low[v]);
                    if low[v] > disc[u] {
                        in_ring[parent_bond] = false;
                    }
                }
            }
        }
    }
    debug_assert_eq!(in_ring.len(), bonds.len());
    in_ring
}

fn parse_error(position: usize, message: impl Into<String>) -> ChemError {
    ChemError::Parse {
        position,
        message: message.into(),
    }
}

/// Build a molecule from a token stream produced by [`tokenize`].
pub fn parse(tokens: &[Token]) -> Result<Molecule> {
    if tokens.is_empty() {
        return Err(ChemError::Empty);
    }
    let mut atoms: Vec<Atom> = Vec::new();
    let mut bonds: Vec<Bond> = Vec::new();
    let mut prev: Option<usize> = None;
    let mut pending: Option<(BondSymbol, usize)> = None;
    let mut branches: Vec<(usize, usize)> = Vec::new();
    // Ring label -> (atom, bond symbol written at the opening, position).
    let mut open_rings: BTreeMap<u8, (usize, Option<BondSymbol>, usize)> = BTreeMap::new();
    // A branch must contain at least one atom.
    let mut branch_has_atom = Vec::new();

    let add_bond = |bonds: &mut Vec<Bond>,
                    atoms: &[Atom],
                    a: usize,
                    b: usize,
                    sym: Option<BondSymbol>,
                    pos: usize| {
        if a == b {
            return Err(parse_error(pos, "atom bonded to itself"));
        }
        if bonds
            .iter()
            .any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a))
        {
            return Err(parse_error(pos, "duplicate bond"));
        }
        let order = match sym {
            Some(BondSymbol::Single | BondSymbol::Directional) => BondOrder::Single,
            Some(BondSymbol::Double) => BondOrder::Double,
            Some(BondSymbol::Triple) => BondOrder::Triple,
            Some(BondSymbol::Aromatic) => BondOrder::Aromatic,
            None if atoms[a].aromatic && atoms[b].aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        };
        bonds.push(Bond { a, b, order });
        Ok(())
    };

    for tok in tokens {
        let pos = tok.start;
        match tok.kind {
            TokenKind::Atom { .. } | TokenKind::Bracket(_) => {
                let atom = match tok.kind {
                    TokenKind::Atom { element, aromatic } => Atom {
                        element,
                        charge: 0,
                        explicit_h: 0,
                        implicit_h: 0,
                        aromatic,
                        bracket: false,
                    },
                    TokenKind::Bracket(b) => {
                        if b.aromatic && !b.element.can_be_aromatic() {
                            return Err(parse_error(pos, "element cannot be aromatic"));
                        }
                        Atom {
                            element: b.element,
                            charge: b.charge,
                            explicit_h: b.hydrogens,
                            implicit_h: 0,
                            aromatic: b.aromatic,
                            bracket: true,
                        }
                    }
                    _ => unreachable!(),
                };
                let idx = atoms.len();
                atoms.push(atom);
                if let Some(p) = prev {
                    add_bond(&mut bonds, &atoms, p, idx, pending.map(|(s, _)| s), pos)?;
                } else if let Some((_, bpos)) = pending {
                    return Err(parse_error(bpos, "bond without a preceding atom"));
                }
                pending = None;
                prev = Some(idx);
                if let Some(flag) = branch_has_atom.last_mut() {
                    *flag = true;
                }
            }
            TokenKind::Bond(sym) => {
                if prev.is_none() {
                    return Err(parse_error(pos, "bond without a preceding atom"));
                }
                if pending.is_some() {
                    return Err(parse_error(pos, "two consecutive bond symbols"));
                }
                pending = Some((sym, pos));
            }
            TokenKind::Ring(label) => {
                let Some(atom) = prev else {
                    return Err(parse_error(pos, "ring closure without an atom"));
                };
                let sym = pending.take().map(|(s, _)| s);
                match open_rings.remove(&label) {
                    Some((other, open_sym, _)) => {
                        let norm = |s: Option<BondSymbol>| {
                            s.map(|s| {
                                if s == BondSymbol::Directional {
                                    BondSymbol::Single
                                } else {
                                    s
                                }
                            })
                        };
                        let resolved = match (norm(open_sym), norm(sym)) {
                            (Some(a), Some(b)) if a != b => {
                                return Err(parse_error(
                                    pos,
                                    "conflicting ring-closure bond orders",
                                ))
                            }
                            (a, b) => a.or(b),
                        };
                        add_bond(&mut bonds, &atoms, other, atom, resolved, pos)?;
                    }
                    None => {
                        open_rings.insert(label, (atom, sym, pos));
                    }
                }
            }
            TokenKind::BranchOpen => {
                let Some(atom) = prev else {
                    return Err(parse_error(pos, "branch without a preceding atom"));
                };
                if let Some((_, bpos)) = pending {
                    return Err(parse_error(bpos, "bond before a branch"));
                }
                branches.push((atom, pos));
                branch_has_atom.push(false);
            }
            TokenKind::BranchClose => {
                let Some((anchor, _)) = branches.pop() else {
                    return Err(parse_error(pos, "unmatched ')'"));
                };
                if let Some((_, bpos)) = pending {
                    return Err(parse_error(bpos, "bond with no following atom"));
                }
                if !branch_has_atom.pop().unwrap_or(false) {
                    return Err(parse_error(pos, "empty branch"));
                }
                prev = Some(anchor);
            }
            TokenKind::Dot => {
                if prev.is_none() {
                    return Err(parse_error(pos, "'.' without a preceding atom"));
                }
                if let Some((_, bpos)) = pending {
                    return Err(parse_error(bpos, "bond with no following atom"));
                }
                prev = None;
            }
        }
    }

    let end = tokens.last().map(|t| t.start + t.len).unwrap_or(0);
    if let Some((_, bpos)) = pending {
        return Err(parse_error(bpos, "bond with no following atom"));
    }
    if let Some(&(_, bpos)) = branches.last() {
        return Err(parse_error(bpos, "unclosed branch"));
    }
    if let Some((label, &(_, _, rpos))) = open_rings.iter().next() {
        return Err(parse_error(
            rpos,
            format!("ring closure {label} never closed"),
        ));
    }
    if prev.is_none() {
        return Err(parse_error(end.saturating_sub(1), "trailing '.'"));
    }
    Molecule::build(atoms, bonds).finalize()
}

/// Tokenize and parse in one step.
pub fn parse_smiles(text: &str) -> Result<Molecule> {
    parse(&tokenize(text)?)
}

/// True iff `text` is a SMILES string this parser accepts. Never panics.
pub fn is_valid(text: &str) -> bool {
    parse_smiles(text).is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hs(s: &str) -> Vec<u8> {
        parse_smiles(s)
            .unwrap()
            .atoms()
            .iter()
            .map(Atom::hydrogens)
            .collect()
    }

    #[test]
    fn ethanol_hydrogen_fill() {
        let m = parse_smiles("CCO").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(m.bond_count(), 2);
        assert!(m.bonds().iter().all(|b| b.order == BondOrder::Single));
        assert_eq!(hs("CCO"), vec![3, 2, 1]);
    }

    #[test]
    fn pentavalent_carbon_rejected() {
        assert!(matches!(
            parse_smiles("C(C)(C)(C)(C)C"),
            Err(ChemError::Valence { .. })
        ));
    }

    #[test]
    fn unpaired_ring_closure_rejected() {
        assert!(matches!(parse_smiles("C1CC"), Err(ChemError::Parse { .. })));
    }

    #[test]
    fn structural_errors() {
        for bad in [
            "C(", "C)", "(C)", "C=", "=C", "C==C", "C()", "C.", ".C", "C=(O)", "C11", "C12CC12",
            "cc", "C:C",
        ] {
            assert!(parse_smiles(bad).is_err(), "{bad} should fail");
        }
    }

    #[test]
    fn validity_examples() {
        assert!(is_valid("CCO"));
        assert!(!is_valid("C("));
        assert!(is_valid("O=C(O)c1ccccc1"));
        assert!(!is_valid(""));
        assert!(!is_valid("C(x)"));
    }

    #[test]
    fn aromatic_hydrogens() {
        assert_eq!(hs("c1ccccc1"), vec![1; 6]);
        assert_eq!(hs("n1ccccc1"), vec![0, 1, 1, 1, 1, 1]);
        assert_eq!(hs("o1cccc1"), vec![0, 1, 1, 1, 1]);
        assert_eq!(hs("s1cccc1"), vec![0, 1, 1, 1, 1]);
        assert_eq!(hs("[nH]1cccc1"), vec![1, 1, 1, 1, 1]);
        // caffeine: exocyclic C=O on aromatic carbons
        assert!(is_valid("Cn1cnc2c1c(=O)n(C)c(=O)n2C"));
        // naphthalene fusion atoms carry no hydrogen
        assert_eq!(hs("c1ccc2ccccc2c1"), vec![1, 1, 1, 0, 1, 1, 1, 1, 0, 1]);
    }

    #[test]
    fn charged_atoms() {
        assert_eq!(hs("[NH4+]"), vec![4]);
        assert_eq!(hs("C[N+](C)(C)C"), vec![3, 0, 3, 3, 3]);
        assert_eq!(hs("CC(=O)[O-]"), vec![3, 0, 0, 0]);
        assert!(!is_valid("[NH5+]"));
        assert!(!is_valid("C[O+](C)(C)C"));
    }

    #[test]
    fn hypervalent_sulfur_and_phosphorus() {
        assert_eq!(hs("CS(=O)(=O)C"), vec![3, 0, 0, 0, 3]);
        assert!(is_valid("OP(=O)(O)O"));
        assert!(!is_valid("FCl(F)F"));
    }

    #[test]
    fn ring_membership() {
        let m = parse_smiles("C1CC1CC").unwrap();
        assert!(m.in_ring(0) && m.in_ring(1) && m.in_ring(2));
        assert!(!m.in_ring(3) && !m.in_ring(4));
        let m = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        let bridge = m
            .bonds()
            .iter()
            .position(|b| b.order == BondOrder::Single)
            .unwrap();
        assert!(!m.is_ring_bond(bridge));
    }

    #[test]
    fn ring_closure_bond_orders() {
        let m = parse_smiles("C=1CC1").unwrap();
        assert!(m.bonds().iter().any(|b| b.order == BondOrder::Double));
        assert!(parse_smiles("C=1CC#1").is_err());
        assert!(parse_smiles("C%10CC%10").is_ok());
    }

    #[test]
    fn disconnected_components() {
        let m = parse_smiles("[Cl-].C[NH3+]").unwrap();
        assert_eq!(m.atom_count(), 3);
        assert_eq!(m.bond_count(), 1);
    }

    #[test]
    fn stereo_marks_are_ignored() {
        let a = parse_smiles("F/C=C/F").unwrap();
        let b = parse_smiles("FC=CF").unwrap();
        assert_eq!(a, b);
        let c = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(c.atoms()[1].hydrogens(), 1);
    }
}
