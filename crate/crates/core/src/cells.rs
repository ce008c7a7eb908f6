//! Cells of the unit cube and the Boolean skeleton atoms that name them.
//!
//! A cell index assigns each coordinate either 1 (the coordinate is zero) or
//! 2 (the coordinate is strictly positive). The cells partition `[0,1]^n`,
//! and the atom of a cell is the meet of `~xi` (index 1) and `~~xi`
//! (index 2), which evaluates to 1 on the cell and 0 elsewhere. Each cell
//! also carries a family of compact slices keeping positive coordinates at
//! least `q`; slices shrink as `q` grows.

use crate::syntax::Formula;
use crate::value::{rat, Rat};
use num_traits::{Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// A cell of `[0,1]^n`, one digit of 1 (zero coordinate) or 2 (positive
/// coordinate) per variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellIndex {
    digits: Vec<u8>,
}

impl CellIndex {
    /// Builds a cell index from digits, each 1 or 2.
    pub fn new(digits: Vec<u8>) -> CellIndex {
        assert!(
            digits.iter().all(|&d| d == 1 || d == 2),
            "cell digits must be 1 or 2"
        );
        CellIndex { digits }
    }

    pub fn arity(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    /// Whether coordinate `i` is strictly positive on this cell.
    pub fn is_positive(&self, i: usize) -> bool {
        self.digits[i] == 2
    }

    /// Indices of the strictly positive coordinates, in order.
    pub fn positive_coords(&self) -> Vec<usize> {
        (0..self.digits.len()).filter(|&i| self.is_positive(i)).collect()
    }

    /// Position of this cell in the lexicographic enumeration of all cells.
    pub fn rank(&self) -> usize {
        self.digits
            .iter()
            .fold(0, |acc, &d| (acc << 1) | usize::from(d == 2))
    }

    /// Inverse of [`CellIndex::rank`] for the given arity.
    pub fn from_rank(rank: usize, arity: usize) -> CellIndex {
        assert!(rank < (1 << arity), "rank out of range for arity {arity}");
        let digits = (0..arity)
            .map(|i| if rank >> (arity - 1 - i) & 1 == 1 { 2 } else { 1 })
            .collect();
        CellIndex { digits }
    }

    /// Parses a digit string such as `"12"`.
    pub fn parse(text: &str) -> Result<CellIndex, String> {
        let digits: Result<Vec<u8>, String> = text
            .chars()
            .map(|c| match c {
                '1' => Ok(1),
                '2' => Ok(2),
                other => Err(format!("invalid cell digit {other:?}")),
            })
            .collect();
        Ok(CellIndex { digits: digits? })
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.digits {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

impl Serialize for CellIndex {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CellIndex {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<CellIndex, D::Error> {
        let text = String::deserialize(de)?;
        CellIndex::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// All `2^n` cell indices in lexicographic order (1 before 2).
pub fn enumerate_cells(arity: usize) -> Vec<CellIndex> {
    assert!(arity <= 24, "cell enumeration limited to arity 24");
    (0..1usize << arity)
        .map(|rank| CellIndex::from_rank(rank, arity))
        .collect()
}

/// The skeleton atom of a cell: the meet of `~xi` for zero coordinates and
/// `~~xi` for positive ones. The empty meet (arity 0) is `1`.
pub fn atom_formula(cell: &CellIndex) -> Formula {
    let mut acc: Option<Formula> = None;
    for (i, &d) in cell.digits().iter().enumerate() {
        let lit = if d == 1 {
            Formula::neg(Formula::Var(i))
        } else {
            Formula::nneg(Formula::Var(i))
        };
        acc = Some(match acc {
            None => lit,
            Some(prev) => Formula::meet(prev, lit),
        });
    }
    acc.unwrap_or(Formula::Top)
}

/// The cell containing a point of `[0,1]^n`.
pub fn cell_of_point(point: &[Rat]) -> CellIndex {
    let digits = point
        .iter()
        .map(|t| {
            assert!(
                !t.is_negative() && *t <= rat(1, 1),
                "point coordinate outside [0,1]"
            );
            if t.is_zero() {
                1
            } else {
                2
            }
        })
        .collect();
    CellIndex { digits }
}

/// A canonical interior point of a cell: 0 on zero coordinates, 1/2 on
/// positive ones.
pub fn interior_point(cell: &CellIndex) -> Vec<Rat> {
    cell.digits()
        .iter()
        .map(|&d| if d == 1 { Rat::zero() } else { rat(1, 2) })
        .collect()
}

/// Whether a point lies in the compact slice of a cell at level `q`: zero
/// coordinates are exactly 0 and positive coordinates are at least `q`.
///
/// Requires `0 < q <= 1`.
pub fn in_slice(point: &[Rat], cell: &CellIndex, q: &Rat) -> bool {
    assert!(q > &Rat::zero() && q <= &rat(1, 1), "slice level must be in (0,1]");
    assert_eq!(point.len(), cell.arity(), "point arity mismatch");
    point.iter().zip(cell.digits()).all(|(t, &d)| {
        if d == 1 {
            t.is_zero()
        } else {
            t >= q
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::eval_formula;
    use crate::syntax::print_formula;
    use crate::value::rat_int;
    use num_traits::One;

    #[test]
    fn enumeration_is_lexicographic_and_ranked() {
        let cells = enumerate_cells(2);
        let shown: Vec<String> = cells.iter().map(|c| c.to_string()).collect();
        assert_eq!(shown, vec!["11", "12", "21", "22"]);
        for (i, cell) in cells.iter().enumerate() {
            assert_eq!(cell.rank(), i);
            assert_eq!(CellIndex::from_rank(i, 2), *cell);
        }
    }

    #[test]
    fn atom_formula_matches_digit_pattern() {
        let cell = CellIndex::parse("12").unwrap();
        assert_eq!(print_formula(&atom_formula(&cell)), "~x0 & ~~x1");
    }

    #[test]
    fn atoms_are_indicator_functions_of_cells() {
        let points = [
            vec![rat_int(0), rat_int(0)],
            vec![rat_int(0), rat(1, 3)],
            vec![rat(2, 3), rat_int(0)],
            vec![rat(1, 5), rat(4, 5)],
        ];
        for point in &points {
            let home = cell_of_point(point);
            for cell in enumerate_cells(2) {
                let value = eval_formula(&atom_formula(&cell), point);
                if cell == home {
                    assert!(value.is_one());
                } else {
                    assert!(value.is_zero());
                }
            }
        }
    }

    #[test]
    fn cell_of_point_reads_zero_pattern() {
        let point = vec![rat_int(0), rat(3, 10)];
        assert_eq!(cell_of_point(&point).to_string(), "12");
    }

    #[test]
    fn interior_point_lies_in_its_cell() {
        for cell in enumerate_cells(3) {
            let p = interior_point(&cell);
            assert_eq!(cell_of_point(&p), cell);
        }
    }

    #[test]
    fn slices_nest_as_level_grows() {
        let cell = CellIndex::parse("22").unwrap();
        let point = vec![rat(1, 2), rat(3, 4)];
        assert!(in_slice(&point, &cell, &rat(1, 2)));
        assert!(in_slice(&point, &cell, &rat(1, 4)));
        assert!(!in_slice(&point, &cell, &rat(2, 3)));
    }

    #[test]
    fn slice_membership_requires_exact_zeroes() {
        let cell = CellIndex::parse("12").unwrap();
        assert!(in_slice(&[rat_int(0), rat(1, 2)], &cell, &rat(1, 2)));
        assert!(!in_slice(&[rat(1, 10), rat(1, 2)], &cell, &rat(1, 2)));
    }
}
