use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered symbol set plus ambiguity codes.
///
/// Lookup is case-insensitive. An ambiguity character maps to the set of
/// member symbols it stands for (DNA `N` → `{A, C, G, T}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphabetRepr", into = "AlphabetRepr")]
pub struct Alphabet {
    symbols: Vec<char>,
    ambiguity: BTreeMap<char, Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct AlphabetRepr {
    symbols: String,
    #[serde(default)]
    ambiguity: BTreeMap<char, String>,
}

impl TryFrom<AlphabetRepr> for Alphabet {
    type Error = Error;

    fn try_from(r: AlphabetRepr) -> Result<Self> {
        let amb: Vec<(char, Vec<char>)> = r
            .ambiguity
            .into_iter()
            .map(|(c, s)| (c, s.chars().collect()))
            .collect();
        Alphabet::new(r.symbols.chars().collect(), amb)
    }
}

impl From<Alphabet> for AlphabetRepr {
    fn from(a: Alphabet) -> Self {
        AlphabetRepr {
            symbols: a.symbols.iter().collect(),
            ambiguity: a
                .ambiguity
                .iter()
                .map(|(c, idx)| (*c, idx.iter().map(|&i| a.symbols[i]).collect()))
                .collect(),
        }
    }
}

impl Alphabet {
    /// Builds an alphabet, validating uniqueness and ambiguity targets.
    pub fn new(symbols: Vec<char>, ambiguity: Vec<(char, Vec<char>)>) -> Result<Self> {
        let symbols: Vec<char> = symbols.into_iter().map(|c| c.to_ascii_uppercase()).collect();
        if symbols.len() < 2 {
            return Err(Error::invalid("alphabet needs at least two symbols"));
        }
        for (i, c) in symbols.iter().enumerate() {
            if symbols[..i].contains(c) {
                return Err(Error::invalid(format!("duplicate alphabet symbol '{c}'")));
            }
        }
        let mut amb = BTreeMap::new();
        for (code, members) in ambiguity {
            let code = code.to_ascii_uppercase();
            if symbols.contains(&code) {
                return Err(Error::invalid(format!(
                    "ambiguity code '{code}' is also a plain symbol"
                )));
            }
            let mut idx = Vec::with_capacity(members.len());
            for m in members {
                let m = m.to_ascii_uppercase();
                let i = symbols.iter().position(|&s| s == m).ok_or_else(|| {
                    Error::invalid(format!("ambiguity code '{code}' refers to unknown symbol '{m}'"))
                })?;
                if !idx.contains(&i) {
                    idx.push(i);
                }
            }
            if idx.is_empty() {
                return Err(Error::invalid(format!("ambiguity code '{code}' is empty")));
            }
            idx.sort_unstable();
            amb.insert(code, idx);
        }
        Ok(Alphabet { symbols, ambiguity: amb })
    }

    /// Nucleotides with the IUPAC ambiguity codes.
    pub fn dna() -> Self {
        let amb = [
            ('N', "ACGT"),
            ('R', "AG"),
            ('Y', "CT"),
            ('S', "CG"),
            ('W', "AT"),
            ('K', "GT"),
            ('M', "AC"),
            ('B', "CGT"),
            ('D', "AGT"),
            ('H', "ACT"),
            ('V', "ACG"),
        ];
        Self::new(
            "ACGT".chars().collect(),
            amb.iter().map(|(c, s)| (*c, s.chars().collect())).collect(),
        )
        .expect("static DNA alphabet")
    }

    /// The twenty standard amino acids; `X` is any, `B` = D/N, `Z` = E/Q, `J` = I/L.
    pub fn protein() -> Self {
        let aa = "ACDEFGHIKLMNPQRSTVWY";
        let amb = [('X', aa), ('B', "DN"), ('Z', "EQ"), ('J', "IL")];
        Self::new(
            aa.chars().collect(),
            amb.iter().map(|(c, s)| (*c, s.chars().collect())).collect(),
        )
        .expect("static protein alphabet")
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol(&self, index: usize) -> char {
        self.symbols[index]
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        let c = c.to_ascii_uppercase();
        self.symbols.iter().position(|&s| s == c)
    }

    /// Member symbol indices for `c`: one index for a plain symbol, several
    /// for an ambiguity code, `None` if unknown.
    pub fn members(&self, c: char) -> Option<Vec<usize>> {
        let c = c.to_ascii_uppercase();
        if let Some(i) = self.index_of(c) {
            return Some(vec![i]);
        }
        self.ambiguity.get(&c).cloned()
    }
}
