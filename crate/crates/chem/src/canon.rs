//! Canonical SMILES via iterative invariant refinement.
//!
//! Atoms start from the invariant (element, charge, heavy degree, hydrogen
//! count, aromatic flag) and are repeatedly re-ranked by their own rank plus
//! the sorted ranks of their neighbours until the partition stops splitting.
//! Remaining ties are broken by promoting the lowest-indexed atom of the
//! lowest tied class, then refining again. The graph is written depth-first
//! from the lowest-ranked terminal-most atom, visiting neighbours in rank
//! order.

use crate::error::Result;
use crate::mol::{parse_smiles, BondOrder, Molecule};

/// Dense ranks `0..classes` for the given keys, ordered by key.
fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> (Vec<usize>, usize) {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    let ranks = keys
        .iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect();
    (ranks, sorted.len())
}

fn refine(mol: &Molecule, mut ranks: Vec<usize>, mut classes: usize) -> (Vec<usize>, usize) {
    loop {
        let keys: Vec<(usize, Vec<(usize, BondOrder)>)> = (0..mol.atom_count())
            .map(|i| {
                let mut nb: Vec<(usize, BondOrder)> =
                    mol.neighbors(i).map(|(j, b)| (ranks[j], b.order)).collect();
                nb.sort();
                (ranks[i], nb)
            })
            .collect();
        let (next, count) = dense_ranks(&keys);
        if count == classes {
            return (next, count);
        }
        ranks = next;
        classes = count;
    }
}

/// Canonical atom ranks: a permutation of `0..n`.
pub fn canonical_ranks(mol: &Molecule) -> Vec<usize> {
    let n = mol.atom_count();
    let initial: Vec<_> = (0..n)
        .map(|i| {
            let a = &mol.atoms()[i];
            (
                a.element.atomic_number(),
                a.charge,
                mol.degree(i),
                a.hydrogens(),
                a.aromatic,
            )
        })
        .collect();
    let (ranks, classes) = dense_ranks(&initial);
    let (mut ranks, mut classes) = refine(mol, ranks, classes);
    while classes < n {
        let mut counts = vec![0usize; classes];
        for &r in &ranks {
            counts[r] += 1;
        }
        let tied = counts
            .iter()
            .position(|&c| c > 1)
            .expect("a tied class exists");
        let chosen = ranks
            .iter()
            .position(|&r| r == tied)
            .expect("class has members");
        let keys: Vec<(usize, bool)> = (0..n).map(|i| (ranks[i], i != chosen)).collect();
        let (split, count) = dense_ranks(&keys);
        (ranks, classes) = refine(mol, split, count);
    }
    ranks
}

struct Writer<'a> {
    mol: &'a Molecule,
    ranks: Vec<usize>,
    visited: Vec<bool>,
    children: Vec<Vec<(usize, usize)>>,
    closures: Vec<Vec<usize>>,
    closure_seen: Vec<bool>,
    digit_of_bond: Vec<Option<usize>>,
    free_digits: Vec<bool>,
}

impl<'a> Writer<'a> {
    fn new(mol: &'a Molecule) -> Self {
        let n = mol.atom_count();
        Writer {
            mol,
            ranks: canonical_ranks(mol),
            visited: vec![false; n],
            children: vec![Vec::new(); n],
            closures: vec![Vec::new(); n],
            closure_seen: vec![false; mol.bond_count()],
            digit_of_bond: vec![None; mol.bond_count()],
            free_digits: vec![true; 100],
        }
    }

    fn sorted_neighbors(&self, v: usize) -> Vec<(usize, usize)> {
        let mut nb = self.mol.adjacent(v).to_vec();
        nb.sort_by_key(|&(w, _)| self.ranks[w]);
        nb
    }

    fn explore(&mut self, v: usize, parent_bond: Option<usize>) {
        self.visited[v] = true;
        for (w, bond) in self.sorted_neighbors(v) {
            if Some(bond) == parent_bond {
                continue;
            }
            if self.visited[w] {
                if !self.closure_seen[bond] {
                    self.closure_seen[bond] = true;
                    self.closures[v].push(bond);
                    self.closures[w].push(bond);
                }
            } else {
                self.children[v].push((w, bond));
                self.explore(w, Some(bond));
            }
        }
    }

    fn bond_symbol(&self, bond: usize) -> &'static str {
        let b = &self.mol.bonds()[bond];
        let both_aromatic = self.mol.atoms()[b.a].aromatic && self.mol.atoms()[b.b].aromatic;
        match b.order {
            BondOrder::Single if both_aromatic => "-",
            BondOrder::Single | BondOrder::Aromatic => "",
            BondOrder::Double => "=",
            BondOrder::Triple => "#",
        }
    }

    fn atom_symbol(&self, v: usize) -> String {
        let a = &self.mol.atoms()[v];
        let sym = if a.aromatic {
            a.element.symbol().to_ascii_lowercase()
        } else {
            a.element.symbol().to_string()
        };
        let bare_ok = a.element.in_organic_subset()
            && a.charge == 0
            && self.mol.default_hydrogens(v) == Some(a.hydrogens());
        if bare_ok {
            return sym;
        }
        let mut s = format!("[{sym}");
        match a.hydrogens() {
            0 => {}
            1 => s.push('H'),
            h => s.push_str(&format!("H{h}")),
        }
        match a.charge {
            0 => {}
            1 => s.push('+'),
            -1 => s.push('-'),
            c if c > 0 => s.push_str(&format!("+{c}")),
            c => s.push_str(&format!("-{}", -c)),
        }
        s.push(']');
        s
    }

    fn emit(&mut self, v: usize, out: &mut String) {
        out.push_str(&self.atom_symbol(v));
        let mut closures = self.closures[v].clone();
        closures.sort_by_key(|&b| self.ranks[self.mol.bonds()[b].other(v)]);
        for bond in closures {
            match self.digit_of_bond[bond] {
                Some(d) => {
                    self.free_digits[d] = true;
                    push_ring_label(out, d);
                }
                None => {
                    let d = (1..100)
                        .find(|&d| self.free_digits[d])
                        .expect("fewer than 99 open rings");
                    self.free_digits[d] = false;
                    self.digit_of_bond[bond] = Some(d);
                    out.push_str(self.bond_symbol(bond));
                    push_ring_label(out, d);
                }
            }
        }
        let children = self.children[v].clone();
        let last = children.len().saturating_sub(1);
        for (i, (w, bond)) in children.into_iter().enumerate() {
            if i < last {
                out.push('(');
            }
            out.push_str(self.bond_symbol(bond));
            self.emit(w, out);
            if i < last {
                out.push(')');
            }
        }
    }
}

fn push_ring_label(out: &mut String, d: usize) {
    if d < 10 {
        out.push(char::from(b'0' + d as u8));
    } else {
        out.push_str(&format!("%{d}"));
    }
}

/// Deterministic SMILES for the molecular graph; isomorphic inputs give
/// equal strings.
pub fn canonical(mol: &Molecule) -> String {
    let mut w = Writer::new(mol);
    let n = mol.atom_count();
    let mut parts = Vec::new();
    loop {
        let start = (0..n)
            .filter(|&i| !w.visited[i])
            .min_by_key(|&i| (mol.degree(i), w.ranks[i]));
        let Some(start) = start else { break };
        w.explore(start, None);
        let mut s = String::new();
        w.emit(start, &mut s);
        parts.push(s);
    }
    parts.sort();
    parts.join(".")
}

/// Parse then canonicalize.
pub fn canonical_smiles(text: &str) -> Result<String> {
    Ok(canonical(&parse_smiles(text)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn canon(s: &str) -> String {
        canonical_smiles(s).unwrap()
    }

    #[test]
    fn spellings_of_ethanol_agree() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C(O)C"), canon("CCO"));
    }

    #[test]
    fn methane() {
        assert_eq!(canon("C"), "C");
    }

    #[test]
    fn benzene_spellings_agree() {
        assert_eq!(canon("c1ccccc1"), canon("c1ccc(cc1)"));
        assert_eq!(canon("c1ccccc1"), "c1ccccc1");
    }

    #[test]
    fn ranks_are_a_permutation() {
        let m = parse_smiles("CC(C)(C)c1ccc(O)cc1").unwrap();
        let mut r = canonical_ranks(&m);
        r.sort();
        assert_eq!(r, (0..m.atom_count()).collect::<Vec<_>>());
    }

    #[test]
    fn substituent_order_does_not_matter() {
        let a = canon("Oc1ccc(Cl)cc1C(=O)N");
        let b = canon("NC(=O)c1cc(Cl)ccc1O");
        let c = canon("c1(O)c(C(N)=O)cc(Cl)cc1");
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn distinct_molecules_differ() {
        assert_ne!(canon("CCO"), canon("COC"));
        assert_ne!(canon("Oc1ccccc1C"), canon("Oc1ccc(C)cc1"));
    }

    #[test]
    fn charges_hydrogens_and_singles_survive() {
        for s in [
            "C[N+](C)(C)C",
            "CC(=O)[O-]",
            "c1ccccc1-c1ccccc1",
            "[nH]1cccc1",
            "[CH3]",
            "[2H]C",
            "C%10CCCCCCCCC%10",
        ] {
            let c = canon(s);
            assert_eq!(canon(&c), c, "{s} -> {c} not stable");
            let m = parse_smiles(s).unwrap();
            let r = parse_smiles(&c).unwrap();
            assert_eq!(m.total_hydrogens(), r.total_hydrogens());
            assert_eq!(m.bond_count(), r.bond_count());
        }
    }

    #[test]
    fn disconnected_parts_sorted() {
        assert_eq!(canon("O.CC"), canon("CC.O"));
    }
}
