//! Finite-dimensional model algebras with exact structure constants.
//!
//! The workbench's standard models are block-diagonal sums of full
//! matrix-unit algebras: the basis is the set of matrix units inside each
//! block and the underlying column space is the direct sum of the block
//! column spaces. Custom algebras may be loaded from explicit structure
//! constants; construction always verifies associativity and the unit law
//! on every basis triple, so a value of type [`Algebra`] is known-good.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg;
use crate::scalar::{format_scalar, Scalar};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix algebra size must be at least 1")]
    ZeroSize,
    #[error("block sizes must be nonempty and positive")]
    BadBlocks,
    #[error("zero vector where a nonzero one is required")]
    ZeroVector,
    #[error("block index {0} out of range")]
    BlockIndex(usize),
    #[error("vector length {got} does not match block size {expected}")]
    BlockDimension { expected: usize, got: usize },
    #[error("algebra has no block structure")]
    NoBlocks,
    #[error("labels/unit/table shape inconsistent with dimension {0}")]
    BadShape(usize),
    #[error("multiplication not associative at basis triple ({0}, {1}, {2})")]
    NotAssociative(usize, usize, usize),
    #[error("unit law fails at basis element {0}")]
    UnitLaw(usize),
    #[error("block metadata inconsistent with dimension")]
    BlockDimMismatch,
    #[error("multiplication table is not the matrix-unit table at pair ({0}, {1})")]
    NotMatrixUnits(usize, usize),
    #[error("element is not idempotent")]
    NotIdempotent,
}

/// Coordinate vector of an algebra element in the basis of its algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub coords: Vec<Scalar>,
}

impl Element {
    pub fn zero(dim: usize) -> Self {
        Element {
            coords: vec![Scalar::zero(); dim],
        }
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        let mut e = Element::zero(dim);
        e.coords[index] = Scalar::one();
        e
    }

    pub fn from_coords(coords: Vec<Scalar>) -> Self {
        Element { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, other: &Element) -> Element {
        debug_assert_eq!(self.dim(), other.dim());
        Element {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Element) -> Element {
        debug_assert_eq!(self.dim(), other.dim());
        Element {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn neg(&self) -> Element {
        Element {
            coords: self.coords.iter().map(|a| -a).collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> Element {
        Element {
            coords: self.coords.iter().map(|a| a * c).collect(),
        }
    }
}

/// One full matrix block: `size × size` matrix units starting at
/// `basis_offset` in the basis, acting on `size` columns of the underlying
/// space starting at `col_offset`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub size: usize,
    pub basis_offset: usize,
    pub col_offset: usize,
}

/// A rank-one operator `x ⊗ f` supported in one block: it sends a block
/// vector `y` to `f(y)·x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankOneSpec {
    pub block: usize,
    pub x: Vec<Scalar>,
    pub f: Vec<Scalar>,
}

#[derive(Debug, Clone)]
pub struct Algebra {
    name: String,
    dim: usize,
    labels: Vec<String>,
    unit: Vec<Scalar>,
    /// `table[i * dim + j]` holds the product `b_i · b_j` as a sparse
    /// coordinate list sorted by index.
    table: Vec<Vec<(usize, Scalar)>>,
    blocks: Option<Vec<Block>>,
}

impl Algebra {
    /// The `d × d` matrix-unit algebra (a single block).
    pub fn matrix(d: usize) -> Result<Algebra, AlgebraError> {
        if d == 0 {
            return Err(AlgebraError::ZeroSize);
        }
        Algebra::block_diagonal_named(format!("matrix:{d}"), &[d])
    }

    /// Direct sum of matrix-unit algebras, one block per size.
    pub fn block_diagonal(sizes: &[usize]) -> Result<Algebra, AlgebraError> {
        let name = format!(
            "blocks:{}",
            sizes
                .iter()
                .map(|s| s.to_string())
                .collect::<Vec<_>>()
                .join(",")
        );
        Algebra::block_diagonal_named(name, sizes)
    }

    fn block_diagonal_named(name: String, sizes: &[usize]) -> Result<Algebra, AlgebraError> {
        if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
            return Err(AlgebraError::BadBlocks);
        }
        let mut blocks = Vec::new();
        let mut basis_offset = 0;
        let mut col_offset = 0;
        for &size in sizes {
            blocks.push(Block {
                size,
                basis_offset,
                col_offset,
            });
            basis_offset += size * size;
            col_offset += size;
        }
        let dim = basis_offset;
        let multi = sizes.len() > 1;
        let mut labels = Vec::with_capacity(dim);
        for (b, blk) in blocks.iter().enumerate() {
            for i in 0..blk.size {
                for j in 0..blk.size {
                    let base = if blk.size <= 9 {
                        format!("E_{}{}", i + 1, j + 1)
                    } else {
                        format!("E_{}_{}", i + 1, j + 1)
                    };
                    labels.push(if multi {
                        format!("K{}.{}", b + 1, base)
                    } else {
                        base
                    });
                }
            }
        }
        let mut table = vec![Vec::new(); dim * dim];
        for blk in &blocks {
            let s = blk.size;
            for i in 0..s {
                for j in 0..s {
                    for k in 0..s {
                        for l in 0..s {
                            if j == k {
                                let a = blk.basis_offset + i * s + j;
                                let b = blk.basis_offset + k * s + l;
                                let c = blk.basis_offset + i * s + l;
                                table[a * dim + b] = vec![(c, Scalar::one())];
                            }
                        }
                    }
                }
            }
        }
        let mut unit = vec![Scalar::zero(); dim];
        for blk in &blocks {
            for i in 0..blk.size {
                unit[blk.basis_offset + i * blk.size + i] = Scalar::one();
            }
        }
        Algebra::from_parts(name, labels, unit, table, Some(blocks))
    }

    /// Builds an algebra from raw parts and verifies all structural
    /// invariants: associativity on every basis triple, the unit law, and
    /// (when blocks are present) that the table is the matrix-unit table.
    pub fn from_parts(
        name: String,
        labels: Vec<String>,
        unit: Vec<Scalar>,
        table: Vec<Vec<(usize, Scalar)>>,
        blocks: Option<Vec<Block>>,
    ) -> Result<Algebra, AlgebraError> {
        let dim = labels.len();
        if dim == 0 || unit.len() != dim || table.len() != dim * dim {
            return Err(AlgebraError::BadShape(dim));
        }
        for entry in &table {
            if entry.iter().any(|(idx, _)| *idx >= dim) {
                return Err(AlgebraError::BadShape(dim));
            }
        }
        let alg = Algebra {
            name,
            dim,
            labels,
            unit,
            table,
            blocks,
        };
        alg.check_blocks()?;
        alg.check_unit()?;
        alg.check_associativity()?;
        Ok(alg)
    }

    fn check_blocks(&self) -> Result<(), AlgebraError> {
        let Some(blocks) = &self.blocks else {
            return Ok(());
        };
        if blocks.is_empty() {
            return Err(AlgebraError::BadBlocks);
        }
        let mut basis_offset = 0;
        let mut col_offset = 0;
        for blk in blocks {
            if blk.size == 0 || blk.basis_offset != basis_offset || blk.col_offset != col_offset {
                return Err(AlgebraError::BlockDimMismatch);
            }
            basis_offset += blk.size * blk.size;
            col_offset += blk.size;
        }
        if basis_offset != self.dim {
            return Err(AlgebraError::BlockDimMismatch);
        }
        // With blocks present the basis must be exactly the matrix units.
        for a in 0..self.dim {
            for b in 0..self.dim {
                let expected = self.matrix_unit_product(blocks, a, b);
                let got = &self.table[a * self.dim + b];
                if *got != expected {
                    return Err(AlgebraError::NotMatrixUnits(a, b));
                }
            }
        }
        Ok(())
    }

    fn matrix_unit_product(
        &self,
        blocks: &[Block],
        a: usize,
        b: usize,
    ) -> Vec<(usize, Scalar)> {
        let (ba, i, j) = locate(blocks, a);
        let (bb, k, l) = locate(blocks, b);
        if ba == bb && j == k {
            let s = blocks[ba].size;
            vec![(blocks[ba].basis_offset + i * s + l, Scalar::one())]
        } else {
            Vec::new()
        }
    }

    fn check_unit(&self) -> Result<(), AlgebraError> {
        let unit = Element::from_coords(self.unit.clone());
        for i in 0..self.dim {
            let b = Element::basis(self.dim, i);
            if self.mul_unchecked(&unit, &b) != b || self.mul_unchecked(&b, &unit) != b {
                return Err(AlgebraError::UnitLaw(i));
            }
        }
        Ok(())
    }

    fn check_associativity(&self) -> Result<(), AlgebraError> {
        for i in 0..self.dim {
            let bi = Element::basis(self.dim, i);
            for j in 0..self.dim {
                let bj = Element::basis(self.dim, j);
                let ij = self.mul_unchecked(&bi, &bj);
                for k in 0..self.dim {
                    let bk = Element::basis(self.dim, k);
                    let jk = self.mul_unchecked(&bj, &bk);
                    if self.mul_unchecked(&ij, &bk) != self.mul_unchecked(&bi, &jk) {
                        return Err(AlgebraError::NotAssociative(i, j, k));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn blocks(&self) -> Option<&[Block]> {
        self.blocks.as_deref()
    }

    /// Total dimension of the underlying column space (sum of block sizes).
    pub fn underlying_dim(&self) -> Option<usize> {
        self.blocks
            .as_ref()
            .map(|bs| bs.iter().map(|b| b.size).sum())
    }

    pub fn unit(&self) -> Element {
        Element::from_coords(self.unit.clone())
    }

    pub fn basis_element(&self, index: usize) -> Element {
        Element::basis(self.dim, index)
    }

    pub fn table_entry(&self, i: usize, j: usize) -> &[(usize, Scalar)] {
        &self.table[i * self.dim + j]
    }

    fn check_dim(&self, e: &Element) -> Result<(), AlgebraError> {
        if e.dim() != self.dim {
            Err(AlgebraError::DimensionMismatch {
                expected: self.dim,
                got: e.dim(),
            })
        } else {
            Ok(())
        }
    }

    fn mul_unchecked(&self, a: &Element, b: &Element) -> Element {
        let mut out = vec![Scalar::zero(); self.dim];
        for (i, ai) in a.coords.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.coords.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                let c = ai * bj;
                for (idx, coeff) in &self.table[i * self.dim + j] {
                    out[*idx] += &c * coeff;
                }
            }
        }
        Element::from_coords(out)
    }

    /// Exact product, bilinear extension of the structure constants.
    pub fn multiply(&self, a: &Element, b: &Element) -> Result<Element, AlgebraError> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.mul_unchecked(a, b))
    }

    /// `a·b − ξ·b·a`; with ξ = 1 the commutator, with ξ = 0 the plain product.
    pub fn xi_bracket(
        &self,
        a: &Element,
        b: &Element,
        xi: &Scalar,
    ) -> Result<Element, AlgebraError> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        let ab = self.mul_unchecked(a, b);
        let ba = self.mul_unchecked(b, a);
        Ok(ab.sub(&ba.scale(xi)))
    }

    /// The commutator `[a, b] = ab − ba`.
    pub fn bracket(&self, a: &Element, b: &Element) -> Result<Element, AlgebraError> {
        self.xi_bracket(a, b, &Scalar::one())
    }

    /// Matrix of left multiplication `x ↦ a·x`, rows by output coordinate.
    pub fn left_mul_matrix(&self, a: &Element) -> Vec<Vec<Scalar>> {
        let mut m = vec![vec![Scalar::zero(); self.dim]; self.dim];
        for j in 0..self.dim {
            let col = self.mul_unchecked(a, &Element::basis(self.dim, j));
            for (i, v) in col.coords.into_iter().enumerate() {
                m[i][j] = v;
            }
        }
        m
    }

    /// Matrix of right multiplication `x ↦ x·a`.
    pub fn right_mul_matrix(&self, a: &Element) -> Vec<Vec<Scalar>> {
        let mut m = vec![vec![Scalar::zero(); self.dim]; self.dim];
        for j in 0..self.dim {
            let col = self.mul_unchecked(&Element::basis(self.dim, j), a);
            for (i, v) in col.coords.into_iter().enumerate() {
                m[i][j] = v;
            }
        }
        m
    }

    /// Basis of the center `{z : z·b_i = b_i·z for all i}` by exact nullspace.
    pub fn center(&self) -> Vec<Element> {
        let mut rows = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            let b = Element::basis(self.dim, i);
            let left = self.left_mul_matrix(&b);
            let right = self.right_mul_matrix(&b);
            for (lr, rr) in left.into_iter().zip(right) {
                rows.push(
                    lr.into_iter()
                        .zip(rr)
                        .map(|(l, r)| l - r)
                        .collect::<Vec<_>>(),
                );
            }
        }
        linalg::nullspace(&rows, self.dim)
            .into_iter()
            .map(Element::from_coords)
            .collect()
    }

    /// True when `a` commutes with every basis element.
    pub fn is_central(&self, a: &Element) -> bool {
        (0..self.dim).all(|i| {
            let b = Element::basis(self.dim, i);
            self.mul_unchecked(a, &b) == self.mul_unchecked(&b, a)
        })
    }

    pub fn is_idempotent(&self, a: &Element) -> bool {
        self.mul_unchecked(a, a) == *a
    }

    /// Basis of `{x : a·x = 0}` by exact nullspace of left multiplication.
    pub fn right_annihilator(&self, a: &Element) -> Result<Vec<Element>, AlgebraError> {
        self.check_dim(a)?;
        let rows = self.left_mul_matrix(a);
        Ok(linalg::nullspace(&rows, self.dim)
            .into_iter()
            .map(Element::from_coords)
            .collect())
    }

    fn block_checked(&self, index: usize) -> Result<&Block, AlgebraError> {
        let blocks = self.blocks.as_ref().ok_or(AlgebraError::NoBlocks)?;
        blocks.get(index).ok_or(AlgebraError::BlockIndex(index))
    }

    /// The element `x ⊗ f` inside the named block: outer product `x·fᵀ`
    /// placed in the block, zero elsewhere.
    pub fn rank_one(&self, spec: &RankOneSpec) -> Result<Element, AlgebraError> {
        let blk = self.block_checked(spec.block)?;
        if spec.x.len() != blk.size {
            return Err(AlgebraError::BlockDimension {
                expected: blk.size,
                got: spec.x.len(),
            });
        }
        if spec.f.len() != blk.size {
            return Err(AlgebraError::BlockDimension {
                expected: blk.size,
                got: spec.f.len(),
            });
        }
        if spec.x.iter().all(|c| c.is_zero()) || spec.f.iter().all(|c| c.is_zero()) {
            return Err(AlgebraError::ZeroVector);
        }
        let mut e = Element::zero(self.dim);
        for (i, xi) in spec.x.iter().enumerate() {
            for (j, fj) in spec.f.iter().enumerate() {
                e.coords[blk.basis_offset + i * blk.size + j] = xi * fj;
            }
        }
        Ok(e)
    }

    /// A functional `f` on the block column space with `f(x) = 1`:
    /// the dual of the first nonzero coordinate, scaled.
    pub fn dual_pick(&self, block: usize, x: &[Scalar]) -> Result<Vec<Scalar>, AlgebraError> {
        let blk = self.block_checked(block)?;
        if x.len() != blk.size {
            return Err(AlgebraError::BlockDimension {
                expected: blk.size,
                got: x.len(),
            });
        }
        let k = x
            .iter()
            .position(|c| !c.is_zero())
            .ok_or(AlgebraError::ZeroVector)?;
        let mut f = vec![Scalar::zero(); blk.size];
        f[k] = Scalar::one() / &x[k];
        Ok(f)
    }

    /// Writes `x ⊗ f` as a weighted sum of idempotents.
    ///
    /// With `λ = f(x) ≠ 0` a single rescaled idempotent suffices; with
    /// `λ = 0` the operator is shifted by a `y` with `f(y) = 1` and split
    /// into two idempotents. Each returned element squares to itself and the
    /// weighted sum reproduces `x ⊗ f` exactly.
    pub fn idempotent_decompose(
        &self,
        spec: &RankOneSpec,
    ) -> Result<Vec<(Scalar, Element)>, AlgebraError> {
        let target = self.rank_one(spec)?;
        let lambda: Scalar = spec
            .x
            .iter()
            .zip(&spec.f)
            .map(|(xi, fi)| xi * fi)
            .sum();
        if !lambda.is_zero() {
            let inv = Scalar::one() / &lambda;
            let part = target.scale(&inv);
            debug_assert!(self.is_idempotent(&part));
            return Ok(vec![(lambda, part)]);
        }
        let y = {
            // dual_pick applied to f: first nonzero coordinate of f, scaled,
            // gives y with f(y) = 1.
            let k = spec.f.iter().position(|c| !c.is_zero()).unwrap();
            let mut y = vec![Scalar::zero(); spec.f.len()];
            y[k] = Scalar::one() / &spec.f[k];
            y
        };
        let x_plus_y: Vec<Scalar> = spec.x.iter().zip(&y).map(|(a, b)| a + b).collect();
        let first = self.rank_one(&RankOneSpec {
            block: spec.block,
            x: x_plus_y,
            f: spec.f.clone(),
        })?;
        let second = self.rank_one(&RankOneSpec {
            block: spec.block,
            x: y,
            f: spec.f.clone(),
        })?;
        debug_assert!(self.is_idempotent(&first) && self.is_idempotent(&second));
        Ok(vec![(Scalar::one(), first), (-Scalar::one(), second)])
    }

    /// Per block, a rank factorization of the block matrix into exactly
    /// rank-many rank-one operators whose sum reproduces the element.
    pub fn rank_decompose(&self, e: &Element) -> Result<Vec<RankOneSpec>, AlgebraError> {
        self.check_dim(e)?;
        let blocks = self.blocks.as_ref().ok_or(AlgebraError::NoBlocks)?;
        let mut specs = Vec::new();
        for (b, blk) in blocks.iter().enumerate() {
            let m = self.block_matrix(e, b)?;
            let (rref, pivot_cols) = small_rref(&m);
            for (r, &pc) in pivot_cols.iter().enumerate() {
                let x: Vec<Scalar> = (0..blk.size).map(|i| m[i][pc].clone()).collect();
                let f: Vec<Scalar> = rref[r].clone();
                specs.push(RankOneSpec { block: b, x, f });
            }
        }
        Ok(specs)
    }

    /// The `size × size` matrix of the element's component in one block.
    pub fn block_matrix(&self, e: &Element, block: usize) -> Result<Vec<Vec<Scalar>>, AlgebraError> {
        self.check_dim(e)?;
        let blk = self.block_checked(block)?;
        let s = blk.size;
        Ok((0..s)
            .map(|i| (0..s).map(|j| e.coords[blk.basis_offset + i * s + j].clone()).collect())
            .collect())
    }

    /// Embeds a `size × size` matrix into the named block, zero elsewhere.
    pub fn embed_block(&self, block: usize, m: &[Vec<Scalar>]) -> Result<Element, AlgebraError> {
        let blk = self.block_checked(block)?;
        let s = blk.size;
        if m.len() != s || m.iter().any(|r| r.len() != s) {
            return Err(AlgebraError::BlockDimension {
                expected: s,
                got: m.len(),
            });
        }
        let mut e = Element::zero(self.dim);
        for i in 0..s {
            for j in 0..s {
                e.coords[blk.basis_offset + i * s + j] = m[i][j].clone();
            }
        }
        Ok(e)
    }

    /// The diagonal idempotent selecting a subset of underlying basis
    /// directions, given as one mask per block position.
    pub fn diagonal_idempotent(&self, mask: &[bool]) -> Result<Element, AlgebraError> {
        let blocks = self.blocks.as_ref().ok_or(AlgebraError::NoBlocks)?;
        let m: usize = blocks.iter().map(|b| b.size).sum();
        if mask.len() != m {
            return Err(AlgebraError::BlockDimension {
                expected: m,
                got: mask.len(),
            });
        }
        let mut e = Element::zero(self.dim);
        for blk in blocks {
            for i in 0..blk.size {
                if mask[blk.col_offset + i] {
                    e.coords[blk.basis_offset + i * blk.size + i] = Scalar::one();
                }
            }
        }
        Ok(e)
    }

    /// Renders an element as a linear combination of basis labels.
    pub fn format_element(&self, e: &Element) -> String {
        let mut parts = Vec::new();
        for (i, c) in e.coords.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if c.is_one() {
                parts.push(self.labels[i].clone());
            } else {
                parts.push(format!("{}·{}", format_scalar(c), self.labels[i]));
            }
        }
        if parts.is_empty() {
            "0".to_owned()
        } else {
            parts.join(" + ")
        }
    }
}

fn locate(blocks: &[Block], basis_index: usize) -> (usize, usize, usize) {
    for (b, blk) in blocks.iter().enumerate() {
        let n = blk.size * blk.size;
        if basis_index >= blk.basis_offset && basis_index < blk.basis_offset + n {
            let local = basis_index - blk.basis_offset;
            return (b, local / blk.size, local % blk.size);
        }
    }
    unreachable!("basis index out of block range")
}

/// Reduced row echelon form of a small dense rational matrix, with the
/// pivot columns. Satisfies `m = m[:, pivots] · rref`, the rank
/// factorization used by [`Algebra::rank_decompose`].
fn small_rref(m: &[Vec<Scalar>]) -> (Vec<Vec<Scalar>>, Vec<usize>) {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut a: Vec<Vec<Scalar>> = m.to_vec();
    let mut pivot_cols = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !a[i][c].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = Scalar::one() / &a[r][c];
        for j in c..cols {
            a[r][j] = &a[r][j] * &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let factor = a[i][c].clone();
                for j in c..cols {
                    let sub = &a[r][j] * &factor;
                    a[i][j] = &a[i][j] - &sub;
                }
            }
        }
        pivot_cols.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    a.truncate(r);
    (a, pivot_cols)
}
