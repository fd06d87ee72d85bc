//! The element subset understood by the parser.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    H,
    B,
    C,
    N,
    O,
    F,
    Si,
    P,
    S,
    Cl,
    Se,
    Br,
    I,
}

impl Element {
    pub const ALL: [Element; 13] = [
        Element::H,
        Element::B,
        Element::C,
        Element::N,
        Element::O,
        Element::F,
        Element::Si,
        Element::P,
        Element::S,
        Element::Cl,
        Element::Se,
        Element::Br,
        Element::I,
    ];

    pub fn symbol(self) -> &'static str {
        match self {
            Element::H => "H",
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::F => "F",
            Element::Si => "Si",
            Element::P => "P",
            Element::S => "S",
            Element::Cl => "Cl",
            Element::Se => "Se",
            Element::Br => "Br",
            Element::I => "I",
        }
    }

    pub fn from_symbol(sym: &str) -> Option<Element> {
        Element::ALL.iter().copied().find(|e| e.symbol() == sym)
    }

    pub fn atomic_number(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B => 5,
            Element::C => 6,
            Element::N => 7,
            Element::O => 8,
            Element::F => 9,
            Element::Si => 14,
            Element::P => 15,
            Element::S => 16,
            Element::Cl => 17,
            Element::Se => 34,
            Element::Br => 35,
            Element::I => 53,
        }
    }

    /// Standard atomic weight in g/mol.
    pub fn mass(self) -> f64 {
        match self {
            Element::H => 1.008,
            Element::B => 10.81,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::F => 18.998,
            Element::Si => 28.085,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::Cl => 35.45,
            Element::Se => 78.971,
            Element::Br => 79.904,
            Element::I => 126.904,
        }
    }

    /// Elements that may be written without brackets.
    pub fn in_organic_subset(self) -> bool {
        matches!(
            self,
            Element::B
                | Element::C
                | Element::N
                | Element::O
                | Element::P
                | Element::S
                | Element::F
                | Element::Cl
                | Element::Br
                | Element::I
        )
    }

    /// Elements that have a lowercase aromatic spelling.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B
                | Element::C
                | Element::N
                | Element::O
                | Element::P
                | Element::S
                | Element::Se
        )
    }

    fn valence_electrons(self) -> i8 {
        match self {
            Element::H => 1,
            Element::B => 3,
            Element::C | Element::Si => 4,
            Element::N | Element::P => 5,
            Element::O | Element::S | Element::Se => 6,
            Element::F | Element::Cl | Element::Br | Element::I => 7,
        }
    }

    fn period(self) -> u8 {
        match self {
            Element::H => 1,
            Element::B | Element::C | Element::N | Element::O | Element::F => 2,
            Element::Si | Element::P | Element::S | Element::Cl => 3,
            Element::Se | Element::Br => 4,
            Element::I => 5,
        }
    }

    /// Permitted bond-valence totals (bond orders plus hydrogens) for this
    /// element at the given formal charge, in increasing order. Charged atoms
    /// take the valences of their isoelectronic neutral neighbour, so N+ gets
    /// 4, O- gets 1, C- gets 3. An empty list means the charge state is not
    /// representable.
    pub fn allowed_valences(self, charge: i8) -> &'static [u8] {
        if self == Element::H {
            return match charge {
                0 => &[1],
                1 | -1 => &[0],
                _ => &[],
            };
        }
        let electrons = self.valence_electrons() - charge;
        let expanded = self.period() >= 3;
        match electrons {
            1 => &[1],
            2 => &[2],
            3 => &[3],
            4 => &[4],
            5 if expanded => &[3, 5],
            5 => &[3],
            6 if expanded => &[2, 4, 6],
            6 => &[2],
            7 => &[1],
            8 => &[0],
            _ => &[],
        }
    }

    /// Carbon-like atoms always contribute a pi electron to an aromatic ring.
    pub(crate) fn is_carbon_like(self, charge: i8) -> bool {
        self.valence_electrons() - charge <= 4
    }
}

impl std::fmt::Display for Element {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.symbol())
    }
}
