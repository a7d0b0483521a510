//! Structural decompositions of map families.
//!
//! Two mutually inverse triangular recursions connect a map family
//! `(L_0 = id, L_1, …, L_N)` with a sequence `(δ_1, …, δ_N)` of level-one
//! maps: `(n+1)L_{n+1} = Σ_{k=0}^n L_{n−k}∘δ_{k+1}` (ordering A) or
//! `(n+1)L_{n+1} = Σ_{k=0}^n δ_{k+1}∘L_{n−k}` (ordering B). On top of the
//! transfer sit the constructive results: standard parts of a level-one map
//! at an idempotent, recovery of inner generators from rank-one images, the
//! per-block `inner family + scalar functional` decomposition at ξ = 1, and
//! the classification of solved families at ξ ≠ 1.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Element, RankOneSpec};
use crate::linalg;
use crate::maps::{
    self, bracket_power_family, check_generalized_higher_derivation, check_higher_derivation,
    check_xi_condition_on_pairs, convolve, LinMap, MapError, MapFamily, Violation,
};
use crate::scalar::{scalar, Scalar};

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("element is not idempotent")]
    NotIdempotent,
    #[error("central part is not central; the map is not a zero-product bracket map")]
    CentralityFailure,
    #[error("recovered generator does not reproduce the derivation part on block {block}")]
    ConsistencyFailure { block: usize },
    #[error("residual is not scalar on block {block} at level {level}")]
    ResidualNotScalar { block: usize, level: usize },
    #[error("functional on block {block} at level {level} does not annihilate the commutator of verification pair {pair}")]
    FunctionalViolation {
        block: usize,
        level: usize,
        pair: usize,
    },
    #[error("family fails the ξ-bracket zero-product condition on the verification set (level {}, pair {})", .0.level, .0.left)]
    PreconditionFailed(Box<Violation>),
    #[error("sequence member {index} violates the generalized product rule at basis pair ({left}, {right})")]
    GeneralizedRuleViolation {
        index: usize,
        left: usize,
        right: usize,
    },
    #[error("sequence member {index} sends the unit outside the center")]
    AssociateNotCentral { index: usize },
    #[error("ξ = 1 is handled by the decomposition, not the classification")]
    XiOneRejected,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Composition order used by the transfer recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaOrdering {
    /// `(n+1)L_{n+1} = Σ L_{n−k} ∘ δ_{k+1}`
    A,
    /// `(n+1)L_{n+1} = Σ δ_{k+1} ∘ L_{n−k}`
    B,
}

/// The sequence `(δ_1, …, δ_N)` of level-one maps attached to a family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeltaSequence {
    pub ordering: DeltaOrdering,
    deltas: Vec<LinMap>,
}

impl DeltaSequence {
    pub fn new(ordering: DeltaOrdering, deltas: Vec<LinMap>) -> Self {
        DeltaSequence { ordering, deltas }
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    /// 1-based, matching the recursion indices.
    pub fn delta(&self, n: usize) -> &LinMap {
        &self.deltas[n - 1]
    }

    pub fn deltas(&self) -> &[LinMap] {
        &self.deltas
    }

    /// Checks that every member satisfies the level-one ξ-bracket rule on
    /// the given zero-product pairs. Returns the first failing member index
    /// with its violation.
    pub fn verify_on_pairs(
        &self,
        alg: &Algebra,
        xi: &Scalar,
        pairs: &[(Element, Element)],
    ) -> Result<Result<(), (usize, Box<Violation>)>, MapError> {
        for (idx, d) in self.deltas.iter().enumerate() {
            let fam = MapFamily::from_upper_levels(d.dim(), vec![d.clone()])?;
            if let Err(v) = check_xi_condition_on_pairs(alg, &fam, xi, pairs)? {
                return Ok(Err((idx + 1, v)));
            }
        }
        Ok(Ok(()))
    }
}

/// Transfers a family to its delta sequence:
/// `δ_1 = L_1`, `δ_{n+1} = (n+1)L_{n+1} − Σ_{k=0}^{n−1} (composition)`.
/// No division occurs; the recursion is solved for δ.
pub fn transfer_to_delta(fam: &MapFamily, ordering: DeltaOrdering) -> DeltaSequence {
    let mut deltas: Vec<LinMap> = Vec::with_capacity(fam.order());
    if fam.order() == 0 {
        return DeltaSequence::new(ordering, deltas);
    }
    deltas.push(fam.level(1).clone());
    for n in 1..fam.order() {
        let mut acc = LinMap::zero(fam.dim());
        for k in 0..n {
            let term = match ordering {
                DeltaOrdering::A => fam.level(n - k).compose(&deltas[k]),
                DeltaOrdering::B => deltas[k].compose(fam.level(n - k)),
            };
            acc = acc.add(&term);
        }
        let next = fam.level(n + 1).scale(&scalar((n + 1) as i64)).sub(&acc);
        deltas.push(next);
    }
    DeltaSequence::new(ordering, deltas)
}

/// Rebuilds the family from a delta sequence:
/// `L_0 = id`, `L_{n+1} = (1/(n+1)) Σ_{k=0}^{n} (composition)`.
pub fn rebuild_from_delta(seq: &DeltaSequence) -> Result<MapFamily, MapError> {
    if seq.is_empty() {
        return Err(MapError::BadGenerators);
    }
    let dim = seq.delta(1).dim();
    let mut maps = vec![LinMap::identity(dim)];
    for n in 0..seq.len() {
        let mut acc = LinMap::zero(dim);
        for k in 0..=n {
            let term = match seq.ordering {
                DeltaOrdering::A => maps[n - k].compose(seq.delta(k + 1)),
                DeltaOrdering::B => seq.delta(k + 1).compose(&maps[n - k]),
            };
            acc = acc.add(&term);
        }
        let inv = Scalar::one() / scalar((n + 1) as i64);
        maps.push(acc.scale(&inv));
    }
    MapFamily::new(maps)
}

/// Standard parts of a level-one map at an idempotent `P`:
/// `S = Pδ(P)(I−P) − (I−P)δ(P)P` and
/// `τ(P) = Pδ(P)P + (I−P)δ(P)(I−P)`, so that `δ(P) = [P, S] + τ(P)`
/// exactly. `τ(P)` must land in the center; a failure means the map does
/// not satisfy the bracket rule on zero products.
pub fn lie_standard_parts(
    alg: &Algebra,
    delta: &LinMap,
    p: &Element,
) -> Result<(Element, Element), StructureError> {
    if !alg.is_idempotent(p) {
        return Err(StructureError::NotIdempotent);
    }
    let dp = delta.apply(p)?;
    let p2 = alg.unit().sub(p);
    let mul = |x: &Element, y: &Element| alg.multiply(x, y);
    let tau = mul(&mul(p, &dp)?, p)?.add(&mul(&mul(&p2, &dp)?, &p2)?);
    let s = mul(&mul(p, &dp)?, &p2)?.sub(&mul(&mul(&p2, &dp)?, p)?);
    let reconstructed = mul(p, &s)?.sub(&mul(&s, p)?).add(&tau);
    debug_assert_eq!(reconstructed, dp, "standard parts must sum back exactly");
    if !alg.is_central(&tau) {
        return Err(StructureError::CentralityFailure);
    }
    Ok((s, tau))
}

/// Recovers the block operator reproducing the derivation part of `delta`
/// on one block: with `x_K` the first block basis vector and `f_K` its
/// dual, the column `j` of the result is `d(e_j ⊗ f_K)·x_K`, where `d` is
/// `delta` minus its blockwise scalar part. Verified against all block
/// matrix units before returning.
pub fn extract_inner_generator(
    alg: &Algebra,
    delta: &LinMap,
    block: usize,
) -> Result<Vec<Vec<Scalar>>, StructureError> {
    let blocks = alg.blocks().ok_or(AlgebraError::NoBlocks)?;
    let s = blocks
        .get(block)
        .ok_or(AlgebraError::BlockIndex(block))?
        .size;
    let mut r = vec![vec![Scalar::zero(); s]; s];
    for j in 0..s {
        let mut x = vec![Scalar::zero(); s];
        x[j] = Scalar::one();
        let mut f = vec![Scalar::zero(); s];
        f[0] = Scalar::one();
        let rank_one = alg.rank_one(&RankOneSpec { block, x, f })?;
        let image = delta.apply(&rank_one)?;
        let m0 = traceless(alg.block_matrix(&image, block)?);
        for (i, row) in m0.iter().enumerate() {
            r[i][j] = row[0].clone();
        }
    }
    // d(E_ij) must equal [R, E_ij] on the block for every matrix unit.
    for i in 0..s {
        for j in 0..s {
            let mut unit = vec![vec![Scalar::zero(); s]; s];
            unit[i][j] = Scalar::one();
            let e = alg.embed_block(block, &unit)?;
            let image = delta.apply(&e)?;
            let d_part = traceless(alg.block_matrix(&image, block)?);
            let commutator = mat_sub(
                &linalg::mat_mul(&r, &unit),
                &linalg::mat_mul(&unit, &r),
            );
            if d_part != commutator {
                return Err(StructureError::ConsistencyFailure { block });
            }
        }
    }
    Ok(r)
}

/// Per-block data of a decomposition: the generator sequence `(T_1, …, T_N)`
/// as block matrices (trace-normalized to zero) and the scalar functionals
/// `(h_1, …, h_N)` as covectors on the algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDecomposition {
    pub generators: Vec<Vec<Vec<Scalar>>>,
    pub functionals: Vec<Vec<Scalar>>,
}

/// The full decomposition `L_n(A)|_K = Δ(𝐓)_{Kn}(A)|_K + h_{Kn}(A)·I_K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decomposition {
    pub blocks: Vec<BlockDecomposition>,
    pub verified_pairs: usize,
}

impl Decomposition {
    /// Rebuilds the family the decomposition encodes; exact when the
    /// decomposition came from [`decompose_family`].
    pub fn reconstruct(&self, alg: &Algebra) -> Result<MapFamily, StructureError> {
        let blocks = alg.blocks().ok_or(AlgebraError::NoBlocks)?.to_vec();
        let order = self.blocks.first().map_or(0, |b| b.generators.len());
        let dim = alg.dim();
        let mut inner_families = Vec::new();
        for (b, data) in self.blocks.iter().enumerate() {
            inner_families.push(block_inner_family(alg, b, &data.generators, order)?);
        }
        let mut levels = Vec::new();
        for n in 1..=order {
            let mut images = Vec::with_capacity(dim);
            for a_idx in 0..dim {
                let a = Element::basis(dim, a_idx);
                let mut out = Element::zero(dim);
                for (b, blk) in blocks.iter().enumerate() {
                    let delta_a = inner_families[b].level(n).apply(&a)?;
                    let part = alg.block_matrix(&delta_a, b)?;
                    let mut with_h = part;
                    let h = &self.blocks[b].functionals[n - 1][a_idx];
                    for i in 0..blk.size {
                        with_h[i][i] += h;
                    }
                    out = out.add(&alg.embed_block(b, &with_h)?);
                }
                images.push(out);
            }
            levels.push(LinMap::from_images(images)?);
        }
        Ok(MapFamily::from_upper_levels(dim, levels)?)
    }
}

/// The partial inner family `[T_1,1] * ⋯ * [T_m,m]` of one block's
/// generators, at the stated order.
fn block_inner_family(
    alg: &Algebra,
    block: usize,
    generators: &[Vec<Vec<Scalar>>],
    order: usize,
) -> Result<MapFamily, StructureError> {
    let mut fam = MapFamily::identity_family(alg.dim(), order);
    for (idx, t) in generators.iter().enumerate() {
        let embedded = alg.embed_block(block, t)?;
        let factor = bracket_power_family(alg, &embedded, idx + 1, order)?;
        fam = convolve(&fam, &factor)?;
    }
    Ok(fam)
}

/// Decomposes a zero-product bracket family (ξ = 1) into per-block inner
/// generator sequences plus scalar functionals.
///
/// Level 1 generators come from [`extract_inner_generator`]; higher levels
/// are recovered by an exact linear solve of `[T, A_K] = traceless residual`
/// over all basis elements. Generators are normalized to zero block trace.
/// Every functional is checked to annihilate the commutators of the
/// verification pairs.
pub fn decompose_family(
    alg: &Algebra,
    fam: &MapFamily,
    verification_pairs: &[(Element, Element)],
) -> Result<Decomposition, StructureError> {
    let blocks = alg.blocks().ok_or(AlgebraError::NoBlocks)?.to_vec();
    if let Err(v) =
        check_xi_condition_on_pairs(alg, fam, &Scalar::one(), verification_pairs)?
    {
        return Err(StructureError::PreconditionFailed(v));
    }
    let dim = alg.dim();
    let order = fam.order();
    let mut out_blocks = Vec::with_capacity(blocks.len());
    for (b, blk) in blocks.iter().enumerate() {
        let s = blk.size;
        let mut generators: Vec<Vec<Vec<Scalar>>> = Vec::with_capacity(order);
        // running product [T_1,1] * ⋯ * [T_m,m], kept at full order
        let mut partial = MapFamily::identity_family(dim, order);
        for n in 1..=order {
            let t_n = if n == 1 {
                traceless(extract_inner_generator(alg, fam.level(1), b)?)
            } else {
                solve_block_generator(alg, fam, &partial, b, n)?
            };
            let embedded = alg.embed_block(b, &t_n)?;
            let factor = bracket_power_family(alg, &embedded, n, order)?;
            partial = convolve(&partial, &factor)?;
            generators.push(t_n);
        }
        // Read off the functionals and demand exactly scalar residuals.
        let mut functionals = Vec::with_capacity(order);
        for n in 1..=order {
            let mut h = vec![Scalar::zero(); dim];
            for a_idx in 0..dim {
                let a = Element::basis(dim, a_idx);
                let l_part = alg.block_matrix(&fam.level(n).apply(&a)?, b)?;
                let d_part = alg.block_matrix(&partial.level(n).apply(&a)?, b)?;
                let residual = mat_sub(&l_part, &d_part);
                let c = trace(&residual) / scalar(s as i64);
                for (i, row) in residual.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        let expected = if i == j { c.clone() } else { Scalar::zero() };
                        if *v != expected {
                            return Err(StructureError::ResidualNotScalar { block: b, level: n });
                        }
                    }
                }
                h[a_idx] = c;
            }
            functionals.push(h);
        }
        // Each functional must annihilate zero-product commutators.
        for (n, h) in functionals.iter().enumerate() {
            for (pair_idx, (x, y)) in verification_pairs.iter().enumerate() {
                let commutator = alg.bracket(x, y)?;
                let value: Scalar = h
                    .iter()
                    .zip(&commutator.coords)
                    .map(|(hc, cc)| hc * cc)
                    .sum();
                if !value.is_zero() {
                    return Err(StructureError::FunctionalViolation {
                        block: b,
                        level: n + 1,
                        pair: pair_idx,
                    });
                }
            }
        }
        out_blocks.push(BlockDecomposition {
            generators,
            functionals,
        });
    }
    Ok(Decomposition {
        blocks: out_blocks,
        verified_pairs: verification_pairs.len(),
    })
}

/// Solves `[T, A_K] = traceless((L_n(A) − W_n(A))|_K)` over all basis `A`
/// for the next block generator, where `W_n` is the level-`n` component of
/// the partial inner family. Normalized to zero trace.
fn solve_block_generator(
    alg: &Algebra,
    fam: &MapFamily,
    partial: &MapFamily,
    block: usize,
    level: usize,
) -> Result<Vec<Vec<Scalar>>, StructureError> {
    let blocks = alg.blocks().unwrap();
    let s = blocks[block].size;
    let dim = alg.dim();
    let unknowns = s * s;
    let mut rows = Vec::with_capacity(dim * unknowns);
    let mut rhs = Vec::with_capacity(dim * unknowns);
    for a_idx in 0..dim {
        let a = Element::basis(dim, a_idx);
        let a_block = alg.block_matrix(&a, block)?;
        let l_part = alg.block_matrix(&fam.level(level).apply(&a)?, block)?;
        let w_part = alg.block_matrix(&partial.level(level).apply(&a)?, block)?;
        let v = traceless(mat_sub(&l_part, &w_part));
        // entry (i, j) of [T, A_K]: Σ_v T_{iv}·A_{vj} − Σ_u A_{iu}·T_{uj}
        for i in 0..s {
            for j in 0..s {
                let mut row = vec![Scalar::zero(); unknowns];
                for k in 0..s {
                    row[i * s + k] += &a_block[k][j];
                    row[k * s + j] -= &a_block[i][k];
                }
                rows.push(row);
                rhs.push(v[i][j].clone());
            }
        }
    }
    match linalg::solve_affine(&rows, &rhs, unknowns) {
        Ok(sol) => {
            let t: Vec<Vec<Scalar>> = sol
                .particular
                .chunks(s)
                .map(|chunk| chunk.to_vec())
                .collect();
            Ok(traceless(t))
        }
        Err(_) => Err(StructureError::ResidualNotScalar { block, level }),
    }
}

/// Transfers a generalized family and its associate to their sequences
/// `(γ_n)` and `(τ_n)` (ordering B on both), verifying
/// `γ_n(xy) = γ_n(x)·y + x·τ_n(y)` on all basis pairs. When no associate is
/// supplied it is computed from the family.
pub fn generalized_transfer(
    alg: &Algebra,
    fam: &MapFamily,
    associate: Option<&MapFamily>,
) -> Result<(DeltaSequence, DeltaSequence), StructureError> {
    let assoc = match associate {
        Some(d) => d.clone(),
        None => compute_associate(alg, fam)?,
    };
    let gammas = transfer_to_delta(fam, DeltaOrdering::B);
    let taus = transfer_to_delta(&assoc, DeltaOrdering::B);
    let dim = alg.dim();
    for n in 1..=gammas.len().min(taus.len()) {
        let gamma = gammas.delta(n);
        let tau = taus.delta(n);
        for i in 0..dim {
            for j in 0..dim {
                let bi = Element::basis(dim, i);
                let bj = Element::basis(dim, j);
                let product = alg.multiply(&bi, &bj)?;
                let lhs = gamma.apply(&product)?;
                let rhs = alg
                    .multiply(&gamma.apply(&bi)?, &bj)?
                    .add(&alg.multiply(&bi, &tau.apply(&bj)?)?);
                if lhs != rhs {
                    return Err(StructureError::GeneralizedRuleViolation {
                        index: n,
                        left: i,
                        right: j,
                    });
                }
            }
        }
    }
    Ok((gammas, taus))
}

/// Builds the associated higher derivation of a generalized family: each
/// transfer member `δ_n` must send the unit into the center; its associate
/// `τ_n = δ_n − (left multiplication by δ_n(I))` then rebuilds the
/// derivation family through the same recursion.
pub fn compute_associate(alg: &Algebra, fam: &MapFamily) -> Result<MapFamily, StructureError> {
    let deltas = transfer_to_delta(fam, DeltaOrdering::B);
    let mut taus = Vec::with_capacity(deltas.len());
    for n in 1..=deltas.len() {
        let d = deltas.delta(n);
        let unit_image = d.apply(&alg.unit())?;
        if !alg.is_central(&unit_image) {
            return Err(StructureError::AssociateNotCentral { index: n });
        }
        let left_mul = LinMap::from_rows(alg.left_mul_matrix(&unit_image))?;
        taus.push(d.sub(&left_mul));
    }
    Ok(rebuild_from_delta(&DeltaSequence::new(
        DeltaOrdering::B,
        taus,
    ))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XiVerdict {
    HigherDerivation,
    GeneralizedHigherDerivation,
    NotClassified,
}

/// Outcome of classifying a solved family at ξ ≠ 1.
#[derive(Debug, Clone)]
pub struct XiClassification {
    pub verdict: XiVerdict,
    pub associate: Option<MapFamily>,
    pub witness: Option<Violation>,
    pub note: Option<String>,
}

/// Classifies a family satisfying the ξ-bracket condition on zero products:
/// for ξ ∉ {0, 1} it must be a higher derivation; for ξ = 0 a generalized
/// higher derivation with the recursion-built associate. Verification
/// failures yield `NotClassified` with a witness (and usually indicate a
/// span that was not tight).
pub fn classify_xi_family(
    alg: &Algebra,
    fam: &MapFamily,
    xi: &Scalar,
    verification_pairs: &[(Element, Element)],
) -> Result<XiClassification, StructureError> {
    if xi.is_one() {
        return Err(StructureError::XiOneRejected);
    }
    if let Err(v) = check_xi_condition_on_pairs(alg, fam, xi, verification_pairs)? {
        return Err(StructureError::PreconditionFailed(v));
    }
    if !xi.is_zero() {
        return Ok(match check_higher_derivation(alg, fam) {
            Ok(()) => XiClassification {
                verdict: XiVerdict::HigherDerivation,
                associate: None,
                witness: None,
                note: None,
            },
            Err(v) => XiClassification {
                verdict: XiVerdict::NotClassified,
                associate: None,
                witness: Some(*v),
                note: Some("product rule fails; span may not be tight".to_owned()),
            },
        });
    }
    let assoc = match compute_associate(alg, fam) {
        Ok(a) => a,
        Err(StructureError::AssociateNotCentral { index }) => {
            return Ok(XiClassification {
                verdict: XiVerdict::NotClassified,
                associate: None,
                witness: None,
                note: Some(format!(
                    "transfer member {index} sends the unit outside the center"
                )),
            });
        }
        Err(e) => return Err(e),
    };
    match check_generalized_higher_derivation(alg, fam, &assoc) {
        Ok(Ok(())) => Ok(XiClassification {
            verdict: XiVerdict::GeneralizedHigherDerivation,
            associate: Some(assoc),
            witness: None,
            note: None,
        }),
        Ok(Err(v)) => Ok(XiClassification {
            verdict: XiVerdict::NotClassified,
            associate: Some(assoc),
            witness: Some(*v),
            note: Some("generalized product rule fails against the built associate".to_owned()),
        }),
        Err(MapError::AssociateViolation(v)) => Ok(XiClassification {
            verdict: XiVerdict::NotClassified,
            associate: Some(assoc),
            witness: Some(*v),
            note: Some("built associate is not a higher derivation".to_owned()),
        }),
        Err(e) => Err(StructureError::Map(e)),
    }
}

fn trace(m: &[Vec<Scalar>]) -> Scalar {
    m.iter().enumerate().map(|(i, row)| row[i].clone()).sum()
}

fn traceless(mut m: Vec<Vec<Scalar>>) -> Vec<Vec<Scalar>> {
    let s = m.len();
    if s == 0 {
        return m;
    }
    let shift = trace(&m) / scalar(s as i64);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= &shift;
    }
    m
}

fn mat_sub(a: &[Vec<Scalar>], b: &[Vec<Scalar>]) -> Vec<Vec<Scalar>> {
    a.iter()
        .zip(b)
        .map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x - y).collect())
        .collect()
}

/// `x ↦ t·x − x·t` as a map on the algebra.
pub fn adjoint_map(alg: &Algebra, t: &Element) -> Result<LinMap, MapError> {
    Ok(LinMap::from_rows(alg.left_mul_matrix(t))?
        .sub(&LinMap::from_rows(alg.right_mul_matrix(t))?))
}

/// The inner family of per-block generator matrices, convolved over blocks.
/// Convenience wrapper used by tests and the decomposition round trip.
pub fn inner_family_from_blocks(
    alg: &Algebra,
    per_block: &[Vec<Vec<Vec<Scalar>>>],
    order: usize,
) -> Result<MapFamily, StructureError> {
    let mut fam = MapFamily::identity_family(alg.dim(), order);
    for (b, generators) in per_block.iter().enumerate() {
        let block_fam = block_inner_family(alg, b, generators, order)?;
        fam = convolve(&fam, &block_fam)?;
    }
    Ok(fam)
}
