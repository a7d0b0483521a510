//! Exact linear algebra over the rationals.
//!
//! Rows are cleared of denominators and kept as primitive integer vectors;
//! elimination is fraction-free (gcd/lcm cross-multiplication, Bareiss
//! style), so no rounding and no intermediate fractions occur. Rational
//! answers reappear only in back-substitution.
//!
//! [`Echelon`] is incremental: rows stream in one at a time and the
//! structure reports whether each row enlarged the span. That is what the
//! span-saturation loop and the inconsistency witness both need.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
struct EchRow {
    pivot: usize,
    entries: Vec<BigInt>,
}

/// Incremental row-echelon structure over primitive integer rows.
#[derive(Debug, Clone)]
pub struct Echelon {
    width: usize,
    rows: Vec<EchRow>, // sorted by pivot column, each row's leading nonzero is its pivot
}

impl Echelon {
    pub fn new(width: usize) -> Self {
        Echelon {
            width,
            rows: Vec::new(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivot_columns(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.pivot).collect()
    }

    /// Columns carrying no pivot, ascending.
    pub fn free_columns(&self) -> Vec<usize> {
        let pivots: Vec<usize> = self.pivot_columns();
        (0..self.width).filter(|c| !pivots.contains(c)).collect()
    }

    /// Inserts a rational row; returns `true` when the rank grew.
    pub fn insert(&mut self, row: &[Scalar]) -> bool {
        self.insert_int(clear_denominators(row))
    }

    /// Inserts an integer row; returns `true` when the rank grew.
    pub fn insert_int(&mut self, mut row: Vec<BigInt>) -> bool {
        assert_eq!(row.len(), self.width, "row width mismatch");
        self.reduce(&mut row);
        match leading(&row) {
            None => false,
            Some(pivot) => {
                normalize(&mut row, pivot);
                let pos = self
                    .rows
                    .iter()
                    .position(|r| r.pivot > pivot)
                    .unwrap_or(self.rows.len());
                self.rows.insert(pos, EchRow { pivot, entries: row });
                true
            }
        }
    }

    /// True when the row already lies in the span of the inserted rows.
    pub fn contains(&self, row: &[Scalar]) -> bool {
        let mut r = clear_denominators(row);
        self.reduce(&mut r);
        leading(&r).is_none()
    }

    fn reduce(&self, row: &mut [BigInt]) {
        for er in &self.rows {
            if row[er.pivot].is_zero() {
                continue;
            }
            let p = &er.entries[er.pivot];
            let c = row[er.pivot].clone();
            let g = p.gcd(&c);
            let row_m = p / &g;
            let er_m = c / &g;
            for j in 0..self.width {
                let scaled = &row[j] * &row_m;
                row[j] = scaled - &er.entries[j] * &er_m;
            }
        }
    }

    /// Basis of the nullspace, one vector per free column, ascending order.
    ///
    /// Vector for free column `f` has entry 1 at `f`, 0 at other free
    /// columns, and pivot entries forced by back-substitution.
    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        self.free_columns()
            .into_iter()
            .map(|f| self.back_substitute(f, None))
            .collect()
    }

    /// Solves `coeff · x = rhs` where the last column of this echelon is the
    /// rhs column. Free coefficient columns are set to zero.
    fn particular(&self) -> Vec<Scalar> {
        let rhs_col = self.width - 1;
        let mut x = self.back_substitute(rhs_col, Some(rhs_col));
        // x currently solves (coeff | rhs) · (x, -1) = 0 with x[rhs] = -1.
        x.pop();
        x
    }

    /// Builds the vector with x[special] = 1 (or -1 when `negate_col` names
    /// it), other free columns 0, pivots back-substituted, rows processed in
    /// descending pivot order.
    fn back_substitute(&self, special: usize, negate_col: Option<usize>) -> Vec<Scalar> {
        let mut x = vec![Scalar::zero(); self.width];
        x[special] = if negate_col == Some(special) {
            -Scalar::one()
        } else {
            Scalar::one()
        };
        for er in self.rows.iter().rev() {
            let mut acc = Scalar::zero();
            for j in (er.pivot + 1)..self.width {
                if !er.entries[j].is_zero() && !x[j].is_zero() {
                    acc += BigRational::from_integer(er.entries[j].clone()) * &x[j];
                }
            }
            if !acc.is_zero() {
                x[er.pivot] = -acc / BigRational::from_integer(er.entries[er.pivot].clone());
            }
        }
        x
    }
}

/// Result of an affine solve: a particular solution plus a nullspace basis.
#[derive(Debug, Clone)]
pub struct AffineSolution {
    pub particular: Vec<Scalar>,
    pub nullspace: Vec<Vec<Scalar>>,
}

/// Solves `rows · x = rhs` exactly. On inconsistency, reports the index of
/// the first row whose constraint contradicts the preceding ones.
pub fn solve_affine(
    rows: &[Vec<Scalar>],
    rhs: &[Scalar],
    unknowns: usize,
) -> Result<AffineSolution, usize> {
    assert_eq!(rows.len(), rhs.len(), "row/rhs count mismatch");
    let mut ech = Echelon::new(unknowns + 1);
    for (idx, (row, b)) in rows.iter().zip(rhs).enumerate() {
        assert_eq!(row.len(), unknowns, "row width mismatch");
        let mut aug = row.clone();
        aug.push(b.clone());
        let mut int_row = clear_denominators(&aug);
        ech.reduce(&mut int_row);
        match leading(&int_row) {
            None => {}
            Some(pivot) if pivot == unknowns => return Err(idx),
            Some(pivot) => {
                normalize(&mut int_row, pivot);
                let pos = ech
                    .rows
                    .iter()
                    .position(|r| r.pivot > pivot)
                    .unwrap_or(ech.rows.len());
                ech.rows.insert(
                    pos,
                    EchRow {
                        pivot,
                        entries: int_row,
                    },
                );
            }
        }
    }
    let particular = ech.particular();
    // Nullspace of the coefficient part: the rhs column carries no pivot, so
    // dropping it from each row leaves a valid echelon.
    let mut hom = Echelon::new(unknowns);
    for er in &ech.rows {
        hom.rows.push(EchRow {
            pivot: er.pivot,
            entries: er.entries[..unknowns].to_vec(),
        });
    }
    Ok(AffineSolution {
        particular,
        nullspace: hom.nullspace(),
    })
}

/// Nullspace basis of a dense rational matrix given as rows.
pub fn nullspace(rows: &[Vec<Scalar>], unknowns: usize) -> Vec<Vec<Scalar>> {
    let mut ech = Echelon::new(unknowns);
    for row in rows {
        ech.insert(row);
    }
    ech.nullspace()
}

pub fn rank(rows: &[Vec<Scalar>], width: usize) -> usize {
    let mut ech = Echelon::new(width);
    for row in rows {
        ech.insert(row);
    }
    ech.rank()
}

/// True when the two row sets span the same subspace.
pub fn same_span(a: &[Vec<Scalar>], b: &[Vec<Scalar>], width: usize) -> bool {
    let mut ea = Echelon::new(width);
    for row in a {
        ea.insert(row);
    }
    let mut eb = Echelon::new(width);
    for row in b {
        eb.insert(row);
    }
    ea.rank() == eb.rank()
        && a.iter().all(|r| eb.contains(r))
        && b.iter().all(|r| ea.contains(r))
}

fn leading(row: &[BigInt]) -> Option<usize> {
    row.iter().position(|e| !e.is_zero())
}

/// Scales a rational row to a primitive integer row (same line through 0).
fn clear_denominators(row: &[Scalar]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for e in row {
        if !e.is_zero() {
            lcm = lcm.lcm(e.denom());
        }
    }
    let mut ints: Vec<BigInt> = row.iter().map(|e| e.numer() * (&lcm / e.denom())).collect();
    let mut content = BigInt::zero();
    for e in &ints {
        content = content.gcd(e);
    }
    if !content.is_zero() && !content.is_one() {
        for e in &mut ints {
            *e = &*e / &content;
        }
    }
    ints
}

/// Divides by the content and flips signs so the pivot entry is positive.
fn normalize(row: &mut [BigInt], pivot: usize) {
    let mut content = BigInt::zero();
    for e in row.iter() {
        content = content.gcd(e);
    }
    if !content.is_one() {
        for e in row.iter_mut() {
            *e = &*e / &content;
        }
    }
    if row[pivot].is_negative() {
        for e in row.iter_mut() {
            *e = -(&*e);
        }
    }
}

// Dense rational matrix helpers. A matrix is a Vec of rows.

pub fn mat_identity(n: usize) -> Vec<Vec<Scalar>> {
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { Scalar::one() } else { Scalar::zero() })
                .collect()
        })
        .collect()
}

pub fn mat_vec(m: &[Vec<Scalar>], v: &[Scalar]) -> Vec<Scalar> {
    m.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

pub fn mat_mul(a: &[Vec<Scalar>], b: &[Vec<Scalar>]) -> Vec<Vec<Scalar>> {
    let rows = a.len();
    let inner = b.len();
    let cols = if inner == 0 { 0 } else { b[0].len() };
    let mut out = vec![vec![Scalar::zero(); cols]; rows];
    for (i, arow) in a.iter().enumerate() {
        for (k, aik) in arow.iter().enumerate() {
            if aik.is_zero() {
                continue;
            }
            for (j, bkj) in b[k].iter().enumerate() {
                if !bkj.is_zero() {
                    out[i][j] += aik * bkj;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{frac, scalar};

    fn srow(vals: &[i64]) -> Vec<Scalar> {
        vals.iter().map(|&v| scalar(v)).collect()
    }

    #[test]
    fn nullspace_of_rank_one_plane() {
        // x + y + z = 0
        let ns = nullspace(&[srow(&[1, 1, 1])], 3);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            let s: Scalar = v.iter().sum();
            assert!(s.is_zero());
        }
    }

    #[test]
    fn nullspace_of_full_rank_is_empty() {
        let rows = vec![srow(&[2, 0]), srow(&[1, 3])];
        assert!(nullspace(&rows, 2).is_empty());
    }

    #[test]
    fn solve_affine_unique() {
        // x + y = 3, x - y = 1  =>  x = 2, y = 1
        let rows = vec![srow(&[1, 1]), srow(&[1, -1])];
        let sol = solve_affine(&rows, &[scalar(3), scalar(1)], 2).unwrap();
        assert_eq!(sol.particular, vec![scalar(2), scalar(1)]);
        assert!(sol.nullspace.is_empty());
    }

    #[test]
    fn solve_affine_underdetermined() {
        let rows = vec![srow(&[2, 4])];
        let sol = solve_affine(&rows, &[scalar(1)], 2).unwrap();
        assert_eq!(sol.particular, vec![frac(1, 2), scalar(0)]);
        assert_eq!(sol.nullspace.len(), 1);
        // particular + t * nullspace still solves
        let t = &sol.nullspace[0];
        let lhs = scalar(2) * (&sol.particular[0] + &t[0]) + scalar(4) * (&sol.particular[1] + &t[1]);
        assert_eq!(lhs, scalar(1));
    }

    #[test]
    fn solve_affine_reports_first_contradiction() {
        let rows = vec![srow(&[1, 1]), srow(&[2, 2]), srow(&[3, 3])];
        let err = solve_affine(&rows, &[scalar(1), scalar(2), scalar(7)], 2).unwrap_err();
        assert_eq!(err, 2);
    }

    #[test]
    fn echelon_membership() {
        let mut ech = Echelon::new(3);
        assert!(ech.insert(&srow(&[1, 2, 3])));
        assert!(ech.insert(&srow(&[0, 1, 1])));
        assert!(!ech.insert(&srow(&[1, 3, 4])));
        assert!(ech.contains(&srow(&[2, 4, 6])));
        assert!(!ech.contains(&srow(&[0, 0, 1])));
        assert_eq!(ech.rank(), 2);
    }

    #[test]
    fn rational_rows_are_cleared_exactly() {
        let mut ech = Echelon::new(2);
        assert!(ech.insert(&[frac(1, 2), frac(1, 3)]));
        assert!(!ech.insert(&[frac(3, 2), scalar(1)]));
    }

    #[test]
    fn nullspace_vectors_annihilate_rows() {
        let rows = vec![srow(&[1, 2, 3, 4]), srow(&[0, 1, 1, 0]), srow(&[2, 5, 7, 8])];
        let ns = nullspace(&rows, 4);
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for row in &rows {
                let dot: Scalar = row.iter().zip(v).map(|(a, b)| a * b).sum();
                assert!(dot.is_zero());
            }
        }
    }

    #[test]
    fn mat_mul_identity() {
        let m = vec![srow(&[1, 2]), srow(&[3, 4])];
        assert_eq!(mat_mul(&m, &mat_identity(2)), m);
        assert_eq!(mat_mul(&mat_identity(2), &m), m);
    }
}
