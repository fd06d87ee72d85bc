//! Circular (Morgan-style) fingerprints and Tanimoto similarity.

use serde::{Deserialize, Serialize};

use crate::error::{ChemError, Result};
use crate::mol::{BondOrder, Molecule};

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_WIDTH: usize = 2048;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    width: usize,
    radius: u32,
    words: Vec<u64>,
}

impl Fingerprint {
    /// Empty fingerprint; `width` must be a power of two.
    pub fn new(width: usize, radius: u32) -> Self {
        assert!(
            width.is_power_of_two(),
            "fingerprint width {width} is not a power of two"
        );
        Fingerprint {
            width,
            radius,
            words: vec![0; width.div_ceil(64)],
        }
    }

    pub fn from_indices(width: usize, indices: &[usize]) -> Self {
        let mut fp = Fingerprint::new(width, 0);
        for &i in indices {
            fp.set(i);
        }
        fp
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        let bit = bit & (self.width - 1);
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&i| self.get(i))
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv(words: &[u64]) -> u64 {
    let mut h = FNV_OFFSET;
    for w in words {
        for byte in w.to_le_bytes() {
            h ^= u64::from(byte);
            h = h.wrapping_mul(FNV_PRIME);
        }
    }
    // splitmix64 finalizer so the low bits are well mixed
    h = (h ^ (h >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h = (h ^ (h >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    h ^ (h >> 31)
}

fn bond_code(o: BondOrder) -> u64 {
    match o {
        BondOrder::Single => 1,
        BondOrder::Double => 2,
        BondOrder::Triple => 3,
        BondOrder::Aromatic => 4,
    }
}

/// Environment identifiers, `result[r][atom]` for `r` in `0..=radius`.
pub fn environments(mol: &Molecule, radius: u32) -> Vec<Vec<u64>> {
    let n = mol.atom_count();
    let mut layers = Vec::with_capacity(radius as usize + 1);
    let first: Vec<u64> = (0..n)
        .map(|i| {
            let a = &mol.atoms()[i];
            fnv(&[
                u64::from(a.element.atomic_number()),
                a.charge as i64 as u64,
                mol.degree(i) as u64,
                u64::from(a.hydrogens()),
                u64::from(a.aromatic),
                u64::from(mol.in_ring(i)),
            ])
        })
        .collect();
    layers.push(first);
    for r in 1..=radius {
        let prev = layers.last().unwrap();
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut nb: Vec<(u64, u64)> = mol
                    .neighbors(i)
                    .map(|(j, b)| (bond_code(b.order), prev[j]))
                    .collect();
                nb.sort_unstable();
                let mut words = vec![u64::from(r), prev[i]];
                for (b, id) in nb {
                    words.push(b);
                    words.push(id);
                }
                fnv(&words)
            })
            .collect();
        layers.push(next);
    }
    layers
}

/// Hash every atom environment up to `radius` bonds into a `width`-bit vector.
pub fn fingerprint(mol: &Molecule, radius: u32, width: usize) -> Fingerprint {
    let mut fp = Fingerprint::new(width, radius);
    for layer in environments(mol, radius) {
        for id in layer {
            fp.set(id as usize);
        }
    }
    fp
}

/// |a ∧ b| / |a ∨ b|, defined as 1 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64> {
    if a.width != b.width {
        return Err(ChemError::WidthMismatch(a.width, b.width));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    if union == 0 {
        return Ok(1.0);
    }
    Ok(f64::from(inter) / f64::from(union))
}
