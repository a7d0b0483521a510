//! Zero-product constraint spans and the exact level solver.
//!
//! The ξ-bracket condition quantifies over pairs with `A·B = 0`. The defect
//! of a candidate level map is bilinear in `(A, B)`, so it vanishes on all
//! zero-product pairs exactly when it vanishes on a spanning set of the
//! tensors `A ⊗ B` with `A·B = 0`. The span is built from deterministic
//! generators (basis pairs with zero product, idempotent proof pairs) plus
//! seeded randomized saturation, every basis vector being a certified pure
//! zero-product tensor. Each level of a family then reduces to one exact
//! affine solve in the d² unknown entries of the level map.

use num_traits::Zero;
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Element};
use crate::linalg::{self, Echelon};
use crate::maps::{LinMap, MapError, MapFamily};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// Saturation stops after this many consecutive draws add nothing.
const STABLE_WINDOW: usize = 25;
/// Hard cap on saturation draws, to guarantee termination.
const MAX_DRAWS: usize = 10_000;
/// Full diagonal-idempotent enumeration is exponential in the underlying
/// dimension; beyond this we fall back to singletons and complements.
const IDEMPOTENT_ENUM_LIMIT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("level {level} system is inconsistent at constraint {constraint} (span vector {span_index}, coordinate {coord}); the prefix does not extend")]
    Inconsistent {
        level: usize,
        constraint: usize,
        span_index: usize,
        coord: usize,
    },
    #[error("explicit level map violates constraint {constraint}")]
    ExplicitNotASolution { constraint: usize },
    #[error("span was built for a different algebra (dim {expected}, got {got})")]
    SpanMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Where a span basis vector came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SpanProvenance {
    /// Basis pair `(b_i, b_j)` with `b_i·b_j = 0`.
    BasisPair { i: usize, j: usize },
    /// One of the idempotent proof pairs `(P, I−P)`, `(A−AP, P)`, `(AP, I−P)`.
    IdempotentPair { mask: u64 },
    /// Randomized saturation draw.
    Saturation { draw: usize },
}

/// A pure tensor `left ⊗ right` with `left·right = 0`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanVector {
    pub left: Element,
    pub right: Element,
    pub provenance: SpanProvenance,
}

/// A linearly independent family of certified zero-product tensors spanning
/// (a subspace of) `span{A ⊗ B : A·B = 0}`.
#[derive(Debug, Clone)]
pub struct TensorSpanBasis {
    alg_name: String,
    dim: usize,
    seed: u64,
    draws: usize,
    vectors: Vec<SpanVector>,
}

impl TensorSpanBasis {
    pub fn alg_name(&self) -> &str {
        &self.alg_name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of saturation draws performed during construction.
    pub fn draws(&self) -> usize {
        self.draws
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[SpanVector] {
        &self.vectors
    }

    /// The tensor coordinates of one basis vector: entry `p·d + q` is
    /// `left_p · right_q`.
    pub fn tensor_row(&self, index: usize) -> Vec<Scalar> {
        let v = &self.vectors[index];
        tensor_row(self.dim, &v.left, &v.right)
    }

    pub fn tensor_rows(&self) -> Vec<Vec<Scalar>> {
        (0..self.vectors.len()).map(|i| self.tensor_row(i)).collect()
    }
}

fn tensor_row(dim: usize, a: &Element, b: &Element) -> Vec<Scalar> {
    let mut row = vec![Scalar::zero(); dim * dim];
    for (p, ap) in a.coords.iter().enumerate() {
        if ap.is_zero() {
            continue;
        }
        for (q, bq) in b.coords.iter().enumerate() {
            if !bq.is_zero() {
                row[p * dim + q] = ap * bq;
            }
        }
    }
    row
}

/// Builds a basis of the zero-product tensor span from deterministic
/// generators plus seeded saturation (stable for twenty-five consecutive
/// draws).
pub fn zero_product_span(alg: &Algebra, seed: u64) -> TensorSpanBasis {
    build_span(alg, seed, 0)
}

/// Same, then forces `extra` additional saturation draws. Used to probe
/// that the stabilized span was already maximal.
pub fn zero_product_span_extended(alg: &Algebra, seed: u64, extra: usize) -> TensorSpanBasis {
    build_span(alg, seed, extra)
}

fn build_span(alg: &Algebra, seed: u64, extra_draws: usize) -> TensorSpanBasis {
    let dim = alg.dim();
    let mut ech = Echelon::new(dim * dim);
    let mut vectors: Vec<SpanVector> = Vec::new();

    let push = |ech: &mut Echelon,
                vectors: &mut Vec<SpanVector>,
                left: Element,
                right: Element,
                provenance: SpanProvenance| {
        if left.is_zero() || right.is_zero() {
            return false;
        }
        debug_assert!(alg.multiply(&left, &right).unwrap().is_zero());
        let row = tensor_row(dim, &left, &right);
        if ech.insert(&row) {
            vectors.push(SpanVector {
                left,
                right,
                provenance,
            });
            true
        } else {
            false
        }
    };

    // (a) basis pairs with zero product
    for i in 0..dim {
        for j in 0..dim {
            if alg.table_entry(i, j).is_empty() {
                push(
                    &mut ech,
                    &mut vectors,
                    Element::basis(dim, i),
                    Element::basis(dim, j),
                    SpanProvenance::BasisPair { i, j },
                );
            }
        }
    }

    // (b) idempotent proof pairs: for each diagonal idempotent P,
    //     (P, I−P), (A−AP, P), (AP, I−P) over all basis A
    if alg.blocks().is_some() {
        let unit = alg.unit();
        for mask in diagonal_masks(alg) {
            let p = idempotent_from_mask(alg, mask);
            if p.is_zero() {
                continue;
            }
            let complement = unit.sub(&p);
            let prov = SpanProvenance::IdempotentPair { mask };
            push(
                &mut ech,
                &mut vectors,
                p.clone(),
                complement.clone(),
                prov.clone(),
            );
            for a_idx in 0..dim {
                let a = Element::basis(dim, a_idx);
                let ap = alg.multiply(&a, &p).unwrap();
                push(
                    &mut ech,
                    &mut vectors,
                    a.sub(&ap),
                    p.clone(),
                    prov.clone(),
                );
                push(
                    &mut ech,
                    &mut vectors,
                    ap,
                    complement.clone(),
                    prov.clone(),
                );
            }
        }
    }

    // (c) randomized saturation with annihilator pairs
    let mut rng = SplitMix64::new(seed);
    let mut draws = 0usize;
    let mut stable = 0usize;
    let mut forced = extra_draws;
    while (stable < STABLE_WINDOW || forced > 0) && draws < MAX_DRAWS {
        let a = random_draw(alg, &mut rng);
        draws += 1;
        if forced > 0 {
            forced -= 1;
        }
        let mut grew = false;
        if !a.is_zero() {
            for b in alg.right_annihilator(&a).unwrap() {
                if push(
                    &mut ech,
                    &mut vectors,
                    a.clone(),
                    b,
                    SpanProvenance::Saturation { draw: draws },
                ) {
                    grew = true;
                }
            }
        }
        stable = if grew { 0 } else { stable + 1 };
    }

    TensorSpanBasis {
        alg_name: alg.name().to_owned(),
        dim,
        seed,
        draws,
        vectors,
    }
}

fn diagonal_masks(alg: &Algebra) -> Vec<u64> {
    let m = alg.underlying_dim().unwrap_or(0);
    if m == 0 {
        return Vec::new();
    }
    if m <= IDEMPOTENT_ENUM_LIMIT {
        (0..(1u64 << m)).collect()
    } else {
        // Fallback for wide algebras: singletons, their complements, the
        // per-block identities, and the full identity.
        let full = if m >= 64 { u64::MAX } else { (1u64 << m) - 1 };
        let mut masks = vec![0, full];
        for i in 0..m.min(64) {
            masks.push(1 << i);
            masks.push(full ^ (1 << i));
        }
        if let Some(blocks) = alg.blocks() {
            for blk in blocks {
                let mut mask = 0u64;
                for i in 0..blk.size.min(64usize.saturating_sub(blk.col_offset)) {
                    mask |= 1 << (blk.col_offset + i);
                }
                masks.push(mask);
            }
        }
        masks.sort_unstable();
        masks.dedup();
        masks
    }
}

fn idempotent_from_mask(alg: &Algebra, mask: u64) -> Element {
    let m = alg.underlying_dim().unwrap();
    let bools: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
    alg.diagonal_idempotent(&bools).unwrap()
}

/// A seeded draw aimed at elements with nontrivial right annihilators:
/// random rank-one operators inside a random block, alternating with random
/// sparse elements (which also covers algebras without block metadata).
fn random_draw(alg: &Algebra, rng: &mut SplitMix64) -> Element {
    let dim = alg.dim();
    if let Some(blocks) = alg.blocks() {
        if rng.next_u64() % 2 == 0 {
            let b = rng.usize_below(blocks.len());
            let size = blocks[b].size;
            let x = rng.small_nonzero_vector(size);
            let f = rng.small_nonzero_vector(size);
            let mut m = vec![vec![Scalar::zero(); size]; size];
            for i in 0..size {
                for j in 0..size {
                    m[i][j] = &x[i] * &f[j];
                }
            }
            return alg.embed_block(b, &m).unwrap();
        }
    }
    let mut e = Element::zero(dim);
    let picks = 1 + rng.usize_below(3);
    for _ in 0..picks {
        let idx = rng.usize_below(dim);
        e.coords[idx] = rng.small_scalar();
    }
    e
}

/// Random zero-product pairs, independent of the span generators: a random
/// element with nontrivial right annihilator paired with a random nonzero
/// member of its annihilator. Fewer than `count` pairs are returned when the
/// algebra has no zero divisors.
pub fn sample_zero_product_pairs(
    alg: &Algebra,
    count: usize,
    seed: u64,
) -> Vec<(Element, Element)> {
    let mut rng = SplitMix64::new(seed);
    let mut pairs = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while pairs.len() < count && attempts < count.saturating_mul(40).max(200) {
        attempts += 1;
        let a = random_draw(alg, &mut rng);
        if a.is_zero() {
            continue;
        }
        let ann = alg.right_annihilator(&a).unwrap();
        if ann.is_empty() {
            continue;
        }
        let mut b = Element::zero(alg.dim());
        for v in &ann {
            b = b.add(&v.scale(&rng.small_scalar()));
        }
        if b.is_zero() {
            b = ann[0].clone();
        }
        debug_assert!(alg.multiply(&a, &b).unwrap().is_zero());
        pairs.push((a, b));
    }
    pairs
}

/// The affine space of admissible level maps: particular solution plus a
/// basis of the homogeneous solutions.
#[derive(Debug, Clone)]
pub struct SolutionSpace {
    pub level: usize,
    pub xi: Scalar,
    pub particular: LinMap,
    pub homogeneous: Vec<LinMap>,
    pub constraint_count: usize,
    pub span_dim: usize,
    pub seed: u64,
}

impl SolutionSpace {
    pub fn dimension(&self) -> usize {
        self.homogeneous.len()
    }

    /// The member `particular + Σ cᵢ·homᵢ`.
    pub fn member(&self, coefficients: &[Scalar]) -> LinMap {
        let mut m = self.particular.clone();
        for (c, h) in coefficients.iter().zip(&self.homogeneous) {
            m = m.add(&h.scale(c));
        }
        m
    }

    /// A seeded random member with small integer coefficients.
    pub fn random_member(&self, seed: u64) -> LinMap {
        let mut rng = SplitMix64::new(seed);
        let coeffs: Vec<Scalar> = (0..self.homogeneous.len())
            .map(|_| rng.small_scalar())
            .collect();
        self.member(&coeffs)
    }
}

/// The assembled linear system for one level: one block of `dim` scalar
/// equations per span vector, linear in the d² unknown entries of the level
/// map, with the inhomogeneous part coming from the known lower levels.
#[derive(Debug, Clone)]
pub struct LevelSystem {
    pub level: usize,
    pub xi: Scalar,
    pub dim: usize,
    pub rows: Vec<Vec<Scalar>>,
    pub rhs: Vec<Scalar>,
    /// `(span vector index, output coordinate)` per row.
    pub row_meta: Vec<(usize, usize)>,
    pub span_dim: usize,
    pub seed: u64,
}

fn check_span(alg: &Algebra, span: &TensorSpanBasis) -> Result<(), SolverError> {
    if span.dim() != alg.dim() {
        return Err(SolverError::SpanMismatch {
            expected: span.dim(),
            got: alg.dim(),
        });
    }
    Ok(())
}

/// Coefficient rows of the unknown-level terms
/// `L([A,B]_ξ) − [L(A), B]_ξ − [A, L(B)]_ξ` for every span vector. These do
/// not depend on the level, only on ξ.
fn assemble_coefficient_rows(
    alg: &Algebra,
    xi: &Scalar,
    span: &TensorSpanBasis,
) -> (Vec<Vec<Scalar>>, Vec<(usize, usize)>) {
    let dim = alg.dim();
    let unknowns = dim * dim;
    let mut rows = Vec::with_capacity(span.len() * dim);
    let mut meta = Vec::with_capacity(span.len() * dim);
    for (s, v) in span.vectors().iter().enumerate() {
        let a = &v.left;
        let b = &v.right;
        let w = alg.xi_bracket(a, b, xi).unwrap();
        // [M·A, B]_ξ = (R_B − ξ·L_B)(M·A), [A, M·B]_ξ = (L_A − ξ·R_A)(M·B)
        let g = sub_scaled(alg.right_mul_matrix(b), alg.left_mul_matrix(b), xi);
        let h = sub_scaled(alg.left_mul_matrix(a), alg.right_mul_matrix(a), xi);
        for t in 0..dim {
            let mut row = vec![Scalar::zero(); unknowns];
            for q in 0..dim {
                if !w.coords[q].is_zero() {
                    row[t * dim + q] = w.coords[q].clone();
                }
            }
            for p in 0..dim {
                if !g[t][p].is_zero() {
                    for q in 0..dim {
                        if !a.coords[q].is_zero() {
                            row[p * dim + q] -= &g[t][p] * &a.coords[q];
                        }
                    }
                }
                if !h[t][p].is_zero() {
                    for q in 0..dim {
                        if !b.coords[q].is_zero() {
                            row[p * dim + q] -= &h[t][p] * &b.coords[q];
                        }
                    }
                }
            }
            rows.push(row);
            meta.push((s, t));
        }
    }
    (rows, meta)
}

fn sub_scaled(
    base: Vec<Vec<Scalar>>,
    scaled: Vec<Vec<Scalar>>,
    xi: &Scalar,
) -> Vec<Vec<Scalar>> {
    base.into_iter()
        .zip(scaled)
        .map(|(br, sr)| {
            br.into_iter()
                .zip(sr)
                .map(|(b, s)| b - s * xi)
                .collect()
        })
        .collect()
}

/// The inhomogeneous part at level `n`: `Σ_{i+j=n, 0<i,j<n} [L_i(A), L_j(B)]_ξ`
/// per span vector, stacked by output coordinate.
fn assemble_rhs(
    alg: &Algebra,
    xi: &Scalar,
    span: &TensorSpanBasis,
    prefix: &MapFamily,
) -> Vec<Scalar> {
    let dim = alg.dim();
    let level = prefix.order() + 1;
    let mut rhs = Vec::with_capacity(span.len() * dim);
    for v in span.vectors() {
        let mut interior = Element::zero(dim);
        for i in 1..level {
            let j = level - i;
            if j == 0 || j >= level {
                continue;
            }
            let la = prefix.level(i).apply(&v.left).unwrap();
            let lb = prefix.level(j).apply(&v.right).unwrap();
            interior = interior.add(&alg.xi_bracket(&la, &lb, xi).unwrap());
        }
        rhs.extend(interior.coords);
    }
    rhs
}

/// Assembles the full system for the next level after `prefix`.
pub fn assemble_level_system(
    alg: &Algebra,
    prefix: &MapFamily,
    xi: &Scalar,
    span: &TensorSpanBasis,
) -> Result<LevelSystem, SolverError> {
    check_span(alg, span)?;
    if prefix.dim() != alg.dim() {
        return Err(SolverError::Map(MapError::DimensionMismatch {
            expected: alg.dim(),
            got: prefix.dim(),
        }));
    }
    let (rows, row_meta) = assemble_coefficient_rows(alg, xi, span);
    let rhs = assemble_rhs(alg, xi, span, prefix);
    Ok(LevelSystem {
        level: prefix.order() + 1,
        xi: xi.clone(),
        dim: alg.dim(),
        rows,
        rhs,
        row_meta,
        span_dim: span.len(),
        seed: span.seed(),
    })
}

/// Exact affine solve of an assembled level system.
pub fn solve_level(system: &LevelSystem) -> Result<SolutionSpace, SolverError> {
    let unknowns = system.dim * system.dim;
    match linalg::solve_affine(&system.rows, &system.rhs, unknowns) {
        Ok(sol) => Ok(SolutionSpace {
            level: system.level,
            xi: system.xi.clone(),
            particular: LinMap::from_flat(system.dim, &sol.particular)?,
            homogeneous: sol
                .nullspace
                .iter()
                .map(|v| LinMap::from_flat(system.dim, v))
                .collect::<Result<Vec<_>, _>>()?,
            constraint_count: system.rows.len(),
            span_dim: system.span_dim,
            seed: system.seed,
        }),
        Err(row) => {
            let (span_index, coord) = system.row_meta[row];
            Err(SolverError::Inconsistent {
                level: system.level,
                constraint: row,
                span_index,
                coord,
            })
        }
    }
}

/// How `extend_family` picks the next level map out of the solution space.
#[derive(Debug, Clone)]
pub enum ExtensionChoice {
    /// The particular solution.
    Particular,
    /// Seeded combination of the particular solution and the homogeneous
    /// basis with small integer coefficients.
    Random { seed: u64 },
    /// An explicit map, validated against the system.
    Explicit(LinMap),
}

/// Factored form of the level systems for one `(algebra, ξ)`: the
/// coefficient rows do not depend on the level, so the elimination is done
/// once and each level solve only supplies a fresh right-hand side.
pub struct LevelSolver<'a> {
    alg: &'a Algebra,
    xi: Scalar,
    span: &'a TensorSpanBasis,
    rows: Vec<Vec<Scalar>>,
    row_meta: Vec<(usize, usize)>,
    /// Indices of the rows that grew the coefficient rank, in insertion order.
    pivotal_rows: Vec<usize>,
    homogeneous: Vec<LinMap>,
}

impl<'a> LevelSolver<'a> {
    pub fn new(
        alg: &'a Algebra,
        xi: &Scalar,
        span: &'a TensorSpanBasis,
    ) -> Result<Self, SolverError> {
        check_span(alg, span)?;
        let (rows, row_meta) = assemble_coefficient_rows(alg, xi, span);
        let unknowns = alg.dim() * alg.dim();
        let mut ech = Echelon::new(unknowns);
        let mut pivotal_rows = Vec::new();
        for (idx, row) in rows.iter().enumerate() {
            if ech.insert(row) {
                pivotal_rows.push(idx);
            }
        }
        let homogeneous = ech
            .nullspace()
            .iter()
            .map(|v| LinMap::from_flat(alg.dim(), v))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(LevelSolver {
            alg,
            xi: xi.clone(),
            span,
            rows,
            row_meta,
            pivotal_rows,
            homogeneous,
        })
    }

    pub fn xi(&self) -> &Scalar {
        &self.xi
    }

    pub fn span(&self) -> &TensorSpanBasis {
        self.span
    }

    /// Solution-space dimension (level independent).
    pub fn solution_dimension(&self) -> usize {
        self.homogeneous.len()
    }

    /// Solves the level following the prefix.
    pub fn solve_for_prefix(&self, prefix: &MapFamily) -> Result<SolutionSpace, SolverError> {
        if prefix.dim() != self.alg.dim() {
            return Err(SolverError::Map(MapError::DimensionMismatch {
                expected: self.alg.dim(),
                got: prefix.dim(),
            }));
        }
        let level = prefix.order() + 1;
        let rhs = assemble_rhs(self.alg, &self.xi, self.span, prefix);
        let unknowns = self.alg.dim() * self.alg.dim();
        // The pivotal rows are independent, so this subsystem always has a
        // solution; full verification below decides consistency.
        let sub_rows: Vec<Vec<Scalar>> = self
            .pivotal_rows
            .iter()
            .map(|&i| self.rows[i].clone())
            .collect();
        let sub_rhs: Vec<Scalar> = self.pivotal_rows.iter().map(|&i| rhs[i].clone()).collect();
        let sol = linalg::solve_affine(&sub_rows, &sub_rhs, unknowns)
            .expect("independent rows cannot conflict");
        if let Some(bad) = self.first_violated_row(&sol.particular, &rhs) {
            let (span_index, coord) = self.row_meta[bad];
            return Err(SolverError::Inconsistent {
                level,
                constraint: bad,
                span_index,
                coord,
            });
        }
        Ok(SolutionSpace {
            level,
            xi: self.xi.clone(),
            particular: LinMap::from_flat(self.alg.dim(), &sol.particular)?,
            homogeneous: self.homogeneous.clone(),
            constraint_count: self.rows.len(),
            span_dim: self.span.len(),
            seed: self.span.seed(),
        })
    }

    fn first_violated_row(&self, x: &[Scalar], rhs: &[Scalar]) -> Option<usize> {
        for (idx, row) in self.rows.iter().enumerate() {
            let mut acc = Scalar::zero();
            for (a, b) in row.iter().zip(x) {
                if !a.is_zero() && !b.is_zero() {
                    acc += a * b;
                }
            }
            if acc != rhs[idx] {
                return Some(idx);
            }
        }
        None
    }

    /// Appends one admissible level map chosen by `choice`.
    pub fn extend(
        &self,
        prefix: &MapFamily,
        choice: &ExtensionChoice,
    ) -> Result<MapFamily, SolverError> {
        let space = self.solve_for_prefix(prefix)?;
        let next = match choice {
            ExtensionChoice::Particular => space.particular.clone(),
            ExtensionChoice::Random { seed } => space.random_member(*seed),
            ExtensionChoice::Explicit(m) => {
                let flat = m.flatten();
                let rhs = assemble_rhs(self.alg, &self.xi, self.span, prefix);
                if let Some(bad) = self.first_violated_row(&flat, &rhs) {
                    return Err(SolverError::ExplicitNotASolution { constraint: bad });
                }
                m.clone()
            }
        };
        Ok(prefix.extended(next)?)
    }
}

/// One-shot convenience over [`LevelSolver::extend`].
pub fn extend_family(
    alg: &Algebra,
    prefix: &MapFamily,
    xi: &Scalar,
    span: &TensorSpanBasis,
    choice: &ExtensionChoice,
) -> Result<MapFamily, SolverError> {
    LevelSolver::new(alg, xi, span)?.extend(prefix, choice)
}
