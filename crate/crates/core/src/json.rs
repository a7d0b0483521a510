//! JSON forms of every artifact.
//!
//! Rationals are written as `"p/q"` strings (`"p"` when the denominator is
//! 1), so files survive any JSON round trip bit-exactly and diffs stay
//! readable. Matrices are row-major: `matrix[i][j]` is the coefficient of
//! basis element `i` in the image of basis element `j`. Family files list
//! levels 1..N; level 0 is implicit and defaults to the identity, though an
//! explicit identity at level 0 is accepted on input.

use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Block};
use crate::maps::{LinMap, MapError, MapFamily};
use crate::scalar::{format_scalar, parse_scalar, Scalar, ScalarParseError};
use crate::solver::SolutionSpace;
use crate::structure::{
    BlockDecomposition, Decomposition, DeltaOrdering, DeltaSequence, XiClassification, XiVerdict,
};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Scalar(#[from] ScalarParseError),
    #[error("malformed artifact: {0}")]
    Shape(String),
    #[error("family file names algebra `{got}` but `{expected}` was loaded")]
    AlgebraMismatch { expected: String, got: String },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

pub fn matrix_to_strings(m: &LinMap) -> Vec<Vec<String>> {
    m.rows()
        .iter()
        .map(|r| r.iter().map(format_scalar).collect())
        .collect()
}

pub fn matrix_from_strings(rows: &[Vec<String>]) -> Result<LinMap, JsonError> {
    let parsed = rows
        .iter()
        .map(|r| r.iter().map(|s| parse_scalar(s)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(LinMap::from_rows(parsed)?)
}

fn vector_to_strings(v: &[Scalar]) -> Vec<String> {
    v.iter().map(format_scalar).collect()
}

fn vector_from_strings(v: &[String]) -> Result<Vec<Scalar>, JsonError> {
    Ok(v.iter().map(|s| parse_scalar(s)).collect::<Result<_, _>>()?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AlgebraDto {
    pub name: String,
    pub dim: usize,
    pub labels: Vec<String>,
    pub unit: Vec<String>,
    /// Sparse table: one `[i, j, [coeff vector]]` entry per nonzero product.
    pub mul: Vec<(usize, usize, Vec<String>)>,
    pub blocks: Option<Vec<usize>>,
}

pub fn algebra_to_dto(alg: &Algebra) -> AlgebraDto {
    let dim = alg.dim();
    let mut mul = Vec::new();
    for i in 0..dim {
        for j in 0..dim {
            let entry = alg.table_entry(i, j);
            if entry.is_empty() {
                continue;
            }
            let mut coeffs = vec![Scalar::from_integer(0.into()); dim];
            for (idx, c) in entry {
                coeffs[*idx] = c.clone();
            }
            mul.push((i, j, vector_to_strings(&coeffs)));
        }
    }
    AlgebraDto {
        name: alg.name().to_owned(),
        dim,
        labels: alg.labels().to_vec(),
        unit: vector_to_strings(&alg.unit().coords),
        mul,
        blocks: alg
            .blocks()
            .map(|bs| bs.iter().map(|b| b.size).collect()),
    }
}

pub fn algebra_from_dto(dto: &AlgebraDto) -> Result<Algebra, JsonError> {
    let dim = dto.dim;
    if dto.labels.len() != dim {
        return Err(JsonError::Shape(format!(
            "expected {dim} labels, got {}",
            dto.labels.len()
        )));
    }
    let unit = vector_from_strings(&dto.unit)?;
    let mut table = vec![Vec::new(); dim * dim];
    for (i, j, coeffs) in &dto.mul {
        if *i >= dim || *j >= dim || coeffs.len() != dim {
            return Err(JsonError::Shape(format!("bad mul entry ({i}, {j})")));
        }
        let parsed = vector_from_strings(coeffs)?;
        table[i * dim + j] = parsed
            .into_iter()
            .enumerate()
            .filter(|(_, c)| !num_traits::Zero::is_zero(c))
            .collect();
    }
    let blocks = match &dto.blocks {
        None => None,
        Some(sizes) => {
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
            Some(blocks)
        }
    };
    Ok(Algebra::from_parts(
        dto.name.clone(),
        dto.labels.clone(),
        unit,
        table,
        blocks,
    )?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MapFamilyDto {
    pub algebra: String,
    pub order: usize,
    /// Levels 1..=order; an explicit identity level 0 is accepted on input.
    pub levels: Vec<Vec<Vec<String>>>,
}

pub fn family_to_dto(fam: &MapFamily, algebra_name: &str) -> MapFamilyDto {
    MapFamilyDto {
        algebra: algebra_name.to_owned(),
        order: fam.order(),
        levels: (1..=fam.order())
            .map(|n| matrix_to_strings(fam.level(n)))
            .collect(),
    }
}

pub fn family_from_dto(dto: &MapFamilyDto, alg: &Algebra) -> Result<MapFamily, JsonError> {
    if dto.algebra != alg.name() {
        return Err(JsonError::AlgebraMismatch {
            expected: alg.name().to_owned(),
            got: dto.algebra.clone(),
        });
    }
    let mut levels: Vec<LinMap> = dto
        .levels
        .iter()
        .map(|m| matrix_from_strings(m))
        .collect::<Result<_, _>>()?;
    // Tolerate an explicit identity at level 0.
    if levels.len() == dto.order + 1 {
        let first = levels.remove(0);
        if !first.is_identity() {
            return Err(JsonError::Shape(
                "explicit level 0 must be the identity".to_owned(),
            ));
        }
    } else if levels.len() != dto.order {
        return Err(JsonError::Shape(format!(
            "expected {} levels, got {}",
            dto.order,
            levels.len()
        )));
    }
    for m in &levels {
        if m.dim() != alg.dim() {
            return Err(JsonError::Shape(format!(
                "level matrix is {}×{0}, algebra dimension is {1}",
                m.dim(),
                alg.dim()
            )));
        }
    }
    Ok(MapFamily::from_upper_levels(alg.dim(), levels)?)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SolutionSpaceDto {
    pub level: usize,
    pub xi: String,
    pub particular: Vec<Vec<String>>,
    pub homogeneous: Vec<Vec<Vec<String>>>,
    pub span_dim: usize,
    pub constraints: usize,
    pub seed: u64,
}

pub fn solution_to_dto(space: &SolutionSpace) -> SolutionSpaceDto {
    SolutionSpaceDto {
        level: space.level,
        xi: format_scalar(&space.xi),
        particular: matrix_to_strings(&space.particular),
        homogeneous: space.homogeneous.iter().map(matrix_to_strings).collect(),
        span_dim: space.span_dim,
        constraints: space.constraint_count,
        seed: space.seed,
    }
}

pub fn solution_from_dto(dto: &SolutionSpaceDto) -> Result<SolutionSpace, JsonError> {
    Ok(SolutionSpace {
        level: dto.level,
        xi: parse_scalar(&dto.xi)?,
        particular: matrix_from_strings(&dto.particular)?,
        homogeneous: dto
            .homogeneous
            .iter()
            .map(|m| matrix_from_strings(m))
            .collect::<Result<_, _>>()?,
        constraint_count: dto.constraints,
        span_dim: dto.span_dim,
        seed: dto.seed,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecompositionBlockDto {
    #[serde(rename = "T")]
    pub generators: Vec<Vec<Vec<String>>>,
    pub h: Vec<Vec<String>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DecompositionDto {
    pub blocks: Vec<DecompositionBlockDto>,
    pub verified_pairs: usize,
}

pub fn decomposition_to_dto(d: &Decomposition) -> DecompositionDto {
    DecompositionDto {
        blocks: d
            .blocks
            .iter()
            .map(|b| DecompositionBlockDto {
                generators: b
                    .generators
                    .iter()
                    .map(|t| t.iter().map(|row| vector_to_strings(row)).collect())
                    .collect(),
                h: b.functionals.iter().map(|h| vector_to_strings(h)).collect(),
            })
            .collect(),
        verified_pairs: d.verified_pairs,
    }
}

pub fn decomposition_from_dto(dto: &DecompositionDto) -> Result<Decomposition, JsonError> {
    Ok(Decomposition {
        blocks: dto
            .blocks
            .iter()
            .map(|b| {
                Ok(BlockDecomposition {
                    generators: b
                        .generators
                        .iter()
                        .map(|t| t.iter().map(|row| vector_from_strings(row)).collect())
                        .collect::<Result<_, JsonError>>()?,
                    functionals: b
                        .h
                        .iter()
                        .map(|h| vector_from_strings(h))
                        .collect::<Result<_, JsonError>>()?,
                })
            })
            .collect::<Result<_, JsonError>>()?,
        verified_pairs: dto.verified_pairs,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DeltaSequenceDto {
    pub algebra: String,
    pub ordering: String,
    pub deltas: Vec<Vec<Vec<String>>>,
}

pub fn deltas_to_dto(seq: &DeltaSequence, algebra_name: &str) -> DeltaSequenceDto {
    DeltaSequenceDto {
        algebra: algebra_name.to_owned(),
        ordering: match seq.ordering {
            DeltaOrdering::A => "a".to_owned(),
            DeltaOrdering::B => "b".to_owned(),
        },
        deltas: seq.deltas().iter().map(matrix_to_strings).collect(),
    }
}

pub fn deltas_from_dto(dto: &DeltaSequenceDto, alg: &Algebra) -> Result<DeltaSequence, JsonError> {
    if dto.algebra != alg.name() {
        return Err(JsonError::AlgebraMismatch {
            expected: alg.name().to_owned(),
            got: dto.algebra.clone(),
        });
    }
    let ordering = match dto.ordering.as_str() {
        "a" => DeltaOrdering::A,
        "b" => DeltaOrdering::B,
        other => {
            return Err(JsonError::Shape(format!(
                "ordering must be \"a\" or \"b\", got {other:?}"
            )))
        }
    };
    let deltas: Vec<LinMap> = dto
        .deltas
        .iter()
        .map(|m| matrix_from_strings(m))
        .collect::<Result<_, _>>()?;
    for d in &deltas {
        if d.dim() != alg.dim() {
            return Err(JsonError::Shape("delta matrix dimension mismatch".into()));
        }
    }
    Ok(DeltaSequence::new(ordering, deltas))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct XiClassificationDto {
    pub verdict: String,
    pub associate: Option<MapFamilyDto>,
    pub witness: Option<WitnessDto>,
    pub note: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WitnessDto {
    pub level: usize,
    pub left: usize,
    pub right: usize,
    pub discrepancy: Vec<String>,
}

pub fn classification_to_dto(c: &XiClassification, algebra_name: &str) -> XiClassificationDto {
    XiClassificationDto {
        verdict: match c.verdict {
            XiVerdict::HigherDerivation => "HigherDerivation".to_owned(),
            XiVerdict::GeneralizedHigherDerivation => "GeneralizedHigherDerivation".to_owned(),
            XiVerdict::NotClassified => "NotClassified".to_owned(),
        },
        associate: c.associate.as_ref().map(|f| family_to_dto(f, algebra_name)),
        witness: c.witness.as_ref().map(|v| WitnessDto {
            level: v.level,
            left: v.left,
            right: v.right,
            discrepancy: vector_to_strings(&v.discrepancy.coords),
        }),
        note: c.note.clone(),
    }
}

/// Reads one JSON artifact from a file.
pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, JsonError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Writes one JSON artifact, pretty-printed with a trailing newline.
/// Serialization is deterministic: field order is fixed by the DTO structs.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
