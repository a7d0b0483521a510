//! Linear self-maps of an algebra, families of maps, and the convolution
//! group.
//!
//! A [`MapFamily`] is a finite sequence `(L_0 = id, L_1, …, L_N)`. Families
//! of a fixed order form a group under the convolution
//! `(d * e)_n = Σ_{i+j=n} d_i ∘ e_j`; inner families are generated from an
//! element sequence through the piecewise bracket-power maps. The
//! definitional checks at the bottom decide the product, bracket, and
//! ξ-bracket identities exactly: each identity is bilinear, so checking
//! all basis pairs decides it on the whole algebra.

use num_traits::{One, Zero};
use thiserror::Error;

use crate::algebra::{Algebra, AlgebraError, Element};
use crate::linalg::{mat_identity, mat_mul, mat_vec};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MapError {
    #[error("map/algebra dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("family orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("level 0 of a map family must be the identity")]
    MissingIdentity,
    #[error("bracket-power step must be at least 1")]
    ZeroStep,
    #[error("generator sequences must be nonempty and of equal length")]
    BadGenerators,
    #[error("witness pair {0} is not a zero product")]
    WitnessNotZeroProduct(usize),
    #[error("associated family is not a higher derivation (level {}, pair ({}, {}))", .0.level, .0.left, .0.right)]
    AssociateViolation(Box<Violation>),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// First failing instance of a checked identity: the level, the basis-pair
/// (or witness-pair) indices, and the exact discrepancy element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub level: usize,
    pub left: usize,
    pub right: usize,
    pub discrepancy: Element,
}

/// An exact-rational matrix acting on algebra coordinates. `rows[i][j]` is
/// the coefficient of `b_i` in the image of `b_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinMap {
    rows: Vec<Vec<Scalar>>,
}

impl LinMap {
    pub fn identity(dim: usize) -> Self {
        LinMap {
            rows: mat_identity(dim),
        }
    }

    pub fn zero(dim: usize) -> Self {
        LinMap {
            rows: vec![vec![Scalar::zero(); dim]; dim],
        }
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Result<Self, MapError> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(MapError::DimensionMismatch {
                expected: dim,
                got: rows.iter().map(|r| r.len()).max().unwrap_or(0),
            });
        }
        Ok(LinMap { rows })
    }

    /// Builds the map column by column from images of the basis elements.
    pub fn from_images(images: Vec<Element>) -> Result<Self, MapError> {
        let dim = images.len();
        for img in &images {
            if img.dim() != dim {
                return Err(MapError::DimensionMismatch {
                    expected: dim,
                    got: img.dim(),
                });
            }
        }
        let mut rows = vec![vec![Scalar::zero(); dim]; dim];
        for (j, img) in images.into_iter().enumerate() {
            for (i, v) in img.coords.into_iter().enumerate() {
                rows[i][j] = v;
            }
        }
        Ok(LinMap { rows })
    }

    pub fn from_fn(dim: usize, f: impl Fn(&Element) -> Element) -> Result<Self, MapError> {
        LinMap::from_images((0..dim).map(|j| f(&Element::basis(dim, j))).collect())
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Scalar>] {
        &self.rows
    }

    pub fn apply(&self, a: &Element) -> Result<Element, MapError> {
        if a.dim() != self.dim() {
            return Err(MapError::DimensionMismatch {
                expected: self.dim(),
                got: a.dim(),
            });
        }
        Ok(Element::from_coords(mat_vec(&self.rows, &a.coords)))
    }

    /// Image of the `j`-th basis element (column extraction).
    pub fn basis_image(&self, j: usize) -> Element {
        Element::from_coords(self.rows.iter().map(|r| r[j].clone()).collect())
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &LinMap) -> LinMap {
        LinMap {
            rows: mat_mul(&self.rows, &other.rows),
        }
    }

    pub fn add(&self, other: &LinMap) -> LinMap {
        LinMap {
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    pub fn sub(&self, other: &LinMap) -> LinMap {
        LinMap {
            rows: self
                .rows
                .iter()
                .zip(&other.rows)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    pub fn scale(&self, c: &Scalar) -> LinMap {
        LinMap {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|x| x * c).collect())
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|x| x.is_zero()))
    }

    pub fn is_identity(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, r)| {
            r.iter()
                .enumerate()
                .all(|(j, x)| if i == j { x.is_one() } else { x.is_zero() })
        })
    }

    /// Flattens to the length-d² coordinate vector, row-major.
    pub fn flatten(&self) -> Vec<Scalar> {
        self.rows.iter().flatten().cloned().collect()
    }

    pub fn from_flat(dim: usize, flat: &[Scalar]) -> Result<Self, MapError> {
        if flat.len() != dim * dim {
            return Err(MapError::DimensionMismatch {
                expected: dim * dim,
                got: flat.len(),
            });
        }
        Ok(LinMap {
            rows: flat.chunks(dim).map(|c| c.to_vec()).collect(),
        })
    }
}

/// A finite family `(L_0 = id, L_1, …, L_N)` of linear self-maps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapFamily {
    maps: Vec<LinMap>,
}

impl MapFamily {
    /// Wraps a full list of levels; level 0 must be the identity.
    pub fn new(maps: Vec<LinMap>) -> Result<Self, MapError> {
        if maps.is_empty() || !maps[0].is_identity() {
            return Err(MapError::MissingIdentity);
        }
        let dim = maps[0].dim();
        for m in &maps {
            if m.dim() != dim {
                return Err(MapError::DimensionMismatch {
                    expected: dim,
                    got: m.dim(),
                });
            }
        }
        Ok(MapFamily { maps })
    }

    /// Builds from levels 1..=N, prepending the identity at level 0.
    pub fn from_upper_levels(dim: usize, levels: Vec<LinMap>) -> Result<Self, MapError> {
        let mut maps = vec![LinMap::identity(dim)];
        maps.extend(levels);
        MapFamily::new(maps)
    }

    pub fn identity_family(dim: usize, order: usize) -> Self {
        let mut maps = vec![LinMap::identity(dim)];
        maps.extend((0..order).map(|_| LinMap::zero(dim)));
        MapFamily { maps }
    }

    pub fn order(&self) -> usize {
        self.maps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.maps[0].dim()
    }

    pub fn level(&self, n: usize) -> &LinMap {
        &self.maps[n]
    }

    pub fn levels(&self) -> &[LinMap] {
        &self.maps
    }

    /// Returns the family extended by one more level.
    pub fn extended(&self, next: LinMap) -> Result<Self, MapError> {
        if next.dim() != self.dim() {
            return Err(MapError::DimensionMismatch {
                expected: self.dim(),
                got: next.dim(),
            });
        }
        let mut maps = self.maps.clone();
        maps.push(next);
        Ok(MapFamily { maps })
    }

    /// Truncates or keeps the family at the given order.
    pub fn truncated(&self, order: usize) -> Self {
        MapFamily {
            maps: self.maps[..=order.min(self.order())].to_vec(),
        }
    }
}

/// Convolution `(d * e)_n = Σ_{i+j=n} d_i ∘ e_j`, the group product on
/// families of a fixed order.
pub fn convolve(d: &MapFamily, e: &MapFamily) -> Result<MapFamily, MapError> {
    if d.order() != e.order() {
        return Err(MapError::OrderMismatch(d.order(), e.order()));
    }
    if d.dim() != e.dim() {
        return Err(MapError::DimensionMismatch {
            expected: d.dim(),
            got: e.dim(),
        });
    }
    let dim = d.dim();
    let mut maps = Vec::with_capacity(d.order() + 1);
    for n in 0..=d.order() {
        let mut acc = LinMap::zero(dim);
        for i in 0..=n {
            acc = acc.add(&d.level(i).compose(e.level(n - i)));
        }
        maps.push(acc);
    }
    MapFamily::new(maps)
}

/// Two-sided convolution inverse; always exists since level 0 is the
/// identity. Triangular recursion: `e_n = −Σ_{j<n} d_{n−j} ∘ e_j`.
pub fn convolve_inverse(d: &MapFamily) -> MapFamily {
    let dim = d.dim();
    let mut inv: Vec<LinMap> = vec![LinMap::identity(dim)];
    for n in 1..=d.order() {
        let mut acc = LinMap::zero(dim);
        for j in 0..n {
            acc = acc.add(&d.level(n - j).compose(&inv[j]));
        }
        inv.push(LinMap::zero(dim).sub(&acc));
    }
    MapFamily { maps: inv }
}

/// The piecewise bracket-power map at one index:
/// identity at `n = 0`, zero when `k ∤ n`, and
/// `x ↦ aʳx − aʳ⁻¹xa` with `r = n/k` otherwise.
pub fn bracket_power_map(
    alg: &Algebra,
    a: &Element,
    k: usize,
    n: usize,
) -> Result<LinMap, MapError> {
    if k == 0 {
        return Err(MapError::ZeroStep);
    }
    let dim = alg.dim();
    if a.dim() != dim {
        return Err(MapError::DimensionMismatch {
            expected: dim,
            got: a.dim(),
        });
    }
    if n == 0 {
        return Ok(LinMap::identity(dim));
    }
    if n % k != 0 {
        return Ok(LinMap::zero(dim));
    }
    let r = n / k;
    let mut power = a.clone(); // a^1
    for _ in 1..r {
        power = alg.multiply(&power, a)?;
    }
    let lower = if r == 1 {
        alg.unit() // a^0
    } else {
        let mut p = a.clone();
        for _ in 1..(r - 1) {
            p = alg.multiply(&p, a)?;
        }
        p
    };
    let left = LinMap::from_rows(alg.left_mul_matrix(&power))?;
    let sandwich = LinMap::from_rows(alg.left_mul_matrix(&lower))?
        .compose(&LinMap::from_rows(alg.right_mul_matrix(a))?);
    Ok(left.sub(&sandwich))
}

/// The full family `([a, k]_n)_{n≤N}` for one generator.
pub fn bracket_power_family(
    alg: &Algebra,
    a: &Element,
    k: usize,
    order: usize,
) -> Result<MapFamily, MapError> {
    let maps = (0..=order)
        .map(|n| bracket_power_map(alg, a, k, n))
        .collect::<Result<Vec<_>, _>>()?;
    MapFamily::new(maps)
}

/// One element sequence per block (elements already embedded into the full
/// algebra). Algebras without block metadata use a single sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSequence {
    per_block: Vec<Vec<Element>>,
}

impl GeneratorSequence {
    pub fn new(per_block: Vec<Vec<Element>>) -> Result<Self, MapError> {
        if per_block.is_empty()
            || per_block[0].is_empty()
            || per_block.iter().any(|s| s.len() != per_block[0].len())
        {
            return Err(MapError::BadGenerators);
        }
        Ok(GeneratorSequence { per_block })
    }

    /// Single sequence acting on the whole algebra.
    pub fn from_elements(seq: Vec<Element>) -> Result<Self, MapError> {
        GeneratorSequence::new(vec![seq])
    }

    /// Per-block sequences given as block matrices, embedded here.
    pub fn from_block_matrices(
        alg: &Algebra,
        per_block: Vec<Vec<Vec<Vec<Scalar>>>>,
    ) -> Result<Self, MapError> {
        let mut seqs = Vec::new();
        for (b, mats) in per_block.into_iter().enumerate() {
            let seq = mats
                .into_iter()
                .map(|m| alg.embed_block(b, &m))
                .collect::<Result<Vec<_>, _>>()?;
            seqs.push(seq);
        }
        GeneratorSequence::new(seqs)
    }

    pub fn order(&self) -> usize {
        self.per_block[0].len()
    }

    pub fn sequences(&self) -> &[Vec<Element>] {
        &self.per_block
    }
}

/// The inner family of a generator sequence: level `n` is the `n`-th
/// component of `[a_1,1] * [a_2,2] * ⋯ * [a_n,n]`, in that factor order.
/// Per-block sequences act inside their blocks; the block families are
/// convolved together (cross-block compositions vanish).
pub fn inner_higher(alg: &Algebra, gens: &GeneratorSequence) -> Result<MapFamily, MapError> {
    let order = gens.order();
    let dim = alg.dim();
    let mut total = MapFamily::identity_family(dim, order);
    for seq in gens.sequences() {
        let mut block_fam = MapFamily::identity_family(dim, order);
        for (idx, a) in seq.iter().enumerate() {
            let factor = bracket_power_family(alg, a, idx + 1, order)?;
            block_fam = convolve(&block_fam, &factor)?;
        }
        total = convolve(&total, &block_fam)?;
    }
    Ok(total)
}

/// Decides `L_k(xy) = Σ_{i+j=k} L_i(x)L_j(y)` for every level `k ≤ N`,
/// checking all basis pairs (sufficient by bilinearity). Returns the first
/// failing `(level, i, j)` in lexicographic order.
pub fn check_higher_derivation(alg: &Algebra, fam: &MapFamily) -> Result<(), Box<Violation>> {
    check_product_rule(alg, fam, fam)
}

/// Decides the generalized product rule `L_k(xy) = Σ L_i(x) d_j(y)` against
/// an associate family. An associate that is not itself a higher derivation
/// is an error; a failing identity is reported as the inner violation.
pub fn check_generalized_higher_derivation(
    alg: &Algebra,
    fam: &MapFamily,
    assoc: &MapFamily,
) -> Result<Result<(), Box<Violation>>, MapError> {
    check_higher_derivation(alg, assoc).map_err(MapError::AssociateViolation)?;
    Ok(check_product_rule(alg, fam, assoc))
}

/// Shared Leibniz-style check: `fam_k(b_i b_j) = Σ fam_p(b_i)·other_q(b_j)`.
fn check_product_rule(
    alg: &Algebra,
    fam: &MapFamily,
    other: &MapFamily,
) -> Result<(), Box<Violation>> {
    let dim = alg.dim();
    for k in 1..=fam.order().min(other.order()) {
        for i in 0..dim {
            for j in 0..dim {
                let product = Element::from_coords(
                    alg.table_entry(i, j)
                        .iter()
                        .fold(vec![Scalar::zero(); dim], |mut acc, (idx, c)| {
                            acc[*idx] = c.clone();
                            acc
                        }),
                );
                let lhs = fam.level(k).apply(&product).expect("dim checked");
                let mut rhs = Element::zero(dim);
                for p in 0..=k {
                    let li = fam.level(p).basis_image(i);
                    let dj = other.level(k - p).basis_image(j);
                    rhs = rhs.add(&alg.multiply(&li, &dj).expect("dim checked"));
                }
                if lhs != rhs {
                    return Err(Box::new(Violation {
                        level: k,
                        left: i,
                        right: j,
                        discrepancy: lhs.sub(&rhs),
                    }));
                }
            }
        }
    }
    Ok(())
}

/// Decides `L_k([x,y]) = Σ_{i+j=k} [L_i(x), L_j(y)]` on all basis pairs.
pub fn check_lie_higher_derivation(alg: &Algebra, fam: &MapFamily) -> Result<(), Box<Violation>> {
    check_xi_rule_on_basis(alg, fam, &Scalar::one())
}

/// Decides the unrestricted ξ-bracket rule on all basis pairs.
pub fn check_xi_rule_on_basis(
    alg: &Algebra,
    fam: &MapFamily,
    xi: &Scalar,
) -> Result<(), Box<Violation>> {
    let dim = alg.dim();
    for k in 1..=fam.order() {
        for i in 0..dim {
            for j in 0..dim {
                let bi = Element::basis(dim, i);
                let bj = Element::basis(dim, j);
                let bracket = alg.xi_bracket(&bi, &bj, xi).expect("dim checked");
                let lhs = fam.level(k).apply(&bracket).expect("dim checked");
                let mut rhs = Element::zero(dim);
                for p in 0..=k {
                    let li = fam.level(p).basis_image(i);
                    let lj = fam.level(k - p).basis_image(j);
                    rhs = rhs.add(&alg.xi_bracket(&li, &lj, xi).expect("dim checked"));
                }
                if lhs != rhs {
                    return Err(Box::new(Violation {
                        level: k,
                        left: i,
                        right: j,
                        discrepancy: lhs.sub(&rhs),
                    }));
                }
            }
        }
    }
    Ok(())
}

/// Checks the level-wise ξ-bracket identity on explicit witness pairs; every
/// witness must multiply to zero. The violation's `left`/`right` fields both
/// carry the witness index.
pub fn check_xi_condition_on_pairs(
    alg: &Algebra,
    fam: &MapFamily,
    xi: &Scalar,
    witnesses: &[(Element, Element)],
) -> Result<Result<(), Box<Violation>>, MapError> {
    for (w, (a, b)) in witnesses.iter().enumerate() {
        if !alg.multiply(a, b)?.is_zero() {
            return Err(MapError::WitnessNotZeroProduct(w));
        }
    }
    for n in 1..=fam.order() {
        for (w, (a, b)) in witnesses.iter().enumerate() {
            let bracket = alg.xi_bracket(a, b, xi)?;
            let lhs = fam.level(n).apply(&bracket)?;
            let mut rhs = Element::zero(alg.dim());
            for i in 0..=n {
                let la = fam.level(i).apply(a)?;
                let lb = fam.level(n - i).apply(b)?;
                rhs = rhs.add(&alg.xi_bracket(&la, &lb, xi)?);
            }
            if lhs != rhs {
                return Ok(Err(Box::new(Violation {
                    level: n,
                    left: w,
                    right: w,
                    discrepancy: lhs.sub(&rhs),
                })));
            }
        }
    }
    Ok(Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use crate::scalar::scalar;

    fn m2() -> Algebra {
        Algebra::matrix(2).unwrap()
    }

    fn basis(alg: &Algebra, label: &str) -> Element {
        let idx = alg.labels().iter().position(|l| l == label).unwrap();
        alg.basis_element(idx)
    }

    fn random_linmap(rng: &mut SplitMix64, dim: usize) -> LinMap {
        LinMap::from_rows((0..dim).map(|_| rng.small_vector(dim)).collect()).unwrap()
    }

    fn random_family(rng: &mut SplitMix64, dim: usize, order: usize) -> MapFamily {
        MapFamily::from_upper_levels(
            dim,
            (0..order).map(|_| random_linmap(rng, dim)).collect(),
        )
        .unwrap()
    }

    fn ad(alg: &Algebra, t: &Element) -> LinMap {
        LinMap::from_rows(alg.left_mul_matrix(t))
            .unwrap()
            .sub(&LinMap::from_rows(alg.right_mul_matrix(t)).unwrap())
    }

    fn transpose_map(alg: &Algebra) -> LinMap {
        // On the single block of a matrix algebra: E_ij ↦ E_ji.
        let s = alg.blocks().unwrap()[0].size;
        LinMap::from_fn(alg.dim(), |e| {
            let mut out = Element::zero(alg.dim());
            for i in 0..s {
                for j in 0..s {
                    out.coords[j * s + i] = e.coords[i * s + j].clone();
                }
            }
            out
        })
        .unwrap()
    }

    #[test]
    fn apply_identity_and_zero() {
        let alg = m2();
        let mut rng = SplitMix64::new(1);
        let a = Element::from_coords(rng.small_vector(4));
        assert_eq!(LinMap::identity(4).apply(&a).unwrap(), a);
        assert!(LinMap::zero(4).apply(&a).unwrap().is_zero());
        let t = basis(&alg, "E_11");
        let e12 = basis(&alg, "E_12");
        assert_eq!(ad(&alg, &t).apply(&e12).unwrap(), e12);
    }

    #[test]
    fn convolve_with_identity_family() {
        let mut rng = SplitMix64::new(2);
        let f = random_family(&mut rng, 4, 3);
        let id = MapFamily::identity_family(4, 3);
        assert_eq!(convolve(&f, &id).unwrap(), f);
        assert_eq!(convolve(&id, &f).unwrap(), f);
    }

    #[test]
    fn convolve_order_one_adds_level_one() {
        let mut rng = SplitMix64::new(3);
        let p = random_linmap(&mut rng, 4);
        let q = random_linmap(&mut rng, 4);
        let fp = MapFamily::from_upper_levels(4, vec![p.clone()]).unwrap();
        let fq = MapFamily::from_upper_levels(4, vec![q.clone()]).unwrap();
        let prod = convolve(&fp, &fq).unwrap();
        assert!(prod.level(0).is_identity());
        assert_eq!(*prod.level(1), p.add(&q));
    }

    #[test]
    fn convolve_inverse_is_two_sided() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..10 {
            let f = random_family(&mut rng, 4, 4);
            let inv = convolve_inverse(&f);
            let id = MapFamily::identity_family(4, 4);
            assert_eq!(convolve(&f, &inv).unwrap(), id);
            assert_eq!(convolve(&inv, &f).unwrap(), id);
        }
    }

    #[test]
    fn inverse_of_order_one_negates() {
        let mut rng = SplitMix64::new(5);
        let p = random_linmap(&mut rng, 4);
        let f = MapFamily::from_upper_levels(4, vec![p.clone()]).unwrap();
        let inv = convolve_inverse(&f);
        assert_eq!(*inv.level(1), LinMap::zero(4).sub(&p));
    }

    #[test]
    fn bracket_power_piecewise_branches() {
        let alg = m2();
        let mut rng = SplitMix64::new(6);
        let a = Element::from_coords(rng.small_vector(4));
        // 2 does not divide 3
        assert!(bracket_power_map(&alg, &a, 2, 3).unwrap().is_zero());
        // k=1, n=1: x ↦ ax − xa
        let m = bracket_power_map(&alg, &a, 1, 1).unwrap();
        assert_eq!(m, ad(&alg, &a));
        // k=3, n=6: x ↦ a²x − a·x·a
        let m2map = bracket_power_map(&alg, &a, 3, 6).unwrap();
        let x = Element::from_coords(rng.small_vector(4));
        let a2 = alg.multiply(&a, &a).unwrap();
        let expected = alg
            .multiply(&a2, &x)
            .unwrap()
            .sub(&alg.multiply(&alg.multiply(&a, &x).unwrap(), &a).unwrap());
        assert_eq!(m2map.apply(&x).unwrap(), expected);
        // n = 0 is the identity for any step
        assert!(bracket_power_map(&alg, &a, 5, 0).unwrap().is_identity());
        assert!(bracket_power_map(&alg, &a, 0, 1).is_err());
    }

    /// Closed forms of the level-2 and level-3 inner maps, used as an
    /// independent oracle for the convolution construction:
    ///   Δ₂(A) = T₁²A − T₁AT₁ + T₂A − AT₂
    ///   Δ₃(A) = T₁³A − T₁²AT₁ + T₁T₂A + AT₂T₁ − T₁AT₂ − T₂AT₁ + T₃A − AT₃
    fn closed_form_level2(alg: &Algebra, t1: &Element, t2: &Element, a: &Element) -> Element {
        let t1sq = alg.multiply(t1, t1).unwrap();
        let mut out = alg.multiply(&t1sq, a).unwrap();
        out = out.sub(
            &alg.multiply(&alg.multiply(t1, a).unwrap(), t1).unwrap(),
        );
        out = out.add(&alg.multiply(t2, a).unwrap());
        out.sub(&alg.multiply(a, t2).unwrap())
    }

    fn closed_form_level3(
        alg: &Algebra,
        t1: &Element,
        t2: &Element,
        t3: &Element,
        a: &Element,
    ) -> Element {
        let mul = |x: &Element, y: &Element| alg.multiply(x, y).unwrap();
        let t1sq = mul(t1, t1);
        let t1cube = mul(&t1sq, t1);
        let mut out = mul(&t1cube, a);
        out = out.sub(&mul(&mul(&t1sq, a), t1));
        out = out.add(&mul(&mul(t1, t2), a));
        out = out.add(&mul(a, &mul(t2, t1)));
        out = out.sub(&mul(&mul(t1, a), t2));
        out = out.sub(&mul(&mul(t2, a), t1));
        out = out.add(&mul(t3, a));
        out.sub(&mul(a, t3))
    }

    #[test]
    fn inner_family_matches_closed_forms() {
        let alg = m2();
        let mut rng = SplitMix64::new(7);
        for _ in 0..5 {
            let t1 = Element::from_coords(rng.small_vector(4));
            let t2 = Element::from_coords(rng.small_vector(4));
            let t3 = Element::from_coords(rng.small_vector(4));
            let gens = GeneratorSequence::from_elements(vec![t1.clone(), t2.clone(), t3.clone()])
                .unwrap();
            let fam = inner_higher(&alg, &gens).unwrap();
            assert_eq!(*fam.level(1), ad(&alg, &t1));
            for j in 0..4 {
                let a = alg.basis_element(j);
                assert_eq!(
                    fam.level(2).apply(&a).unwrap(),
                    closed_form_level2(&alg, &t1, &t2, &a)
                );
                assert_eq!(
                    fam.level(3).apply(&a).unwrap(),
                    closed_form_level3(&alg, &t1, &t2, &t3, &a)
                );
            }
        }
    }

    #[test]
    fn inner_families_are_higher_derivations() {
        let alg = Algebra::block_diagonal(&[2, 2]).unwrap();
        let mut rng = SplitMix64::new(8);
        for _ in 0..5 {
            let seqs: Vec<Vec<Element>> = (0..2)
                .map(|b| {
                    (0..3)
                        .map(|_| {
                            let m: Vec<Vec<Scalar>> =
                                (0..2).map(|_| rng.small_vector(2)).collect();
                            alg.embed_block(b, &m).unwrap()
                        })
                        .collect()
                })
                .collect();
            let gens = GeneratorSequence::new(seqs).unwrap();
            let fam = inner_higher(&alg, &gens).unwrap();
            assert!(check_higher_derivation(&alg, &fam).is_ok());
        }
    }

    #[test]
    fn single_generator_levels_are_bracket_powers() {
        let alg = m2();
        let mut rng = SplitMix64::new(9);
        let a = Element::from_coords(rng.small_vector(4));
        let zero = Element::zero(4);
        let gens =
            GeneratorSequence::from_elements(vec![a.clone(), zero.clone(), zero.clone(), zero])
                .unwrap();
        let fam = inner_higher(&alg, &gens).unwrap();
        for n in 1..=4 {
            assert_eq!(*fam.level(n), bracket_power_map(&alg, &a, 1, n).unwrap());
        }
    }

    #[test]
    fn ad_family_is_higher_and_lie_higher() {
        let alg = m2();
        let t = basis(&alg, "E_12");
        let fam = MapFamily::from_upper_levels(4, vec![ad(&alg, &t)]).unwrap();
        assert!(check_higher_derivation(&alg, &fam).is_ok());
        assert!(check_lie_higher_derivation(&alg, &fam).is_ok());
    }

    #[test]
    fn transpose_fails_both_checks() {
        let alg = m2();
        let fam = MapFamily::from_upper_levels(4, vec![transpose_map(&alg)]).unwrap();
        let v = check_higher_derivation(&alg, &fam).unwrap_err();
        assert_eq!(v.level, 1);
        assert!(check_lie_higher_derivation(&alg, &fam).is_err());
    }

    #[test]
    fn trace_map_is_lie_but_not_higher() {
        let alg = m2();
        let unit = alg.unit();
        let trace_to_unit = LinMap::from_fn(4, |e| {
            let tr = &e.coords[0] + &e.coords[3];
            unit.scale(&tr)
        })
        .unwrap();
        let fam = MapFamily::from_upper_levels(4, vec![trace_to_unit]).unwrap();
        assert!(check_lie_higher_derivation(&alg, &fam).is_ok());
        assert!(check_higher_derivation(&alg, &fam).is_err());
    }

    #[test]
    fn generalized_check_collapses_to_plain_for_same_family() {
        let alg = m2();
        let t = basis(&alg, "E_21");
        let fam = MapFamily::from_upper_levels(4, vec![ad(&alg, &t)]).unwrap();
        assert!(check_generalized_higher_derivation(&alg, &fam, &fam)
            .unwrap()
            .is_ok());
    }

    #[test]
    fn generalized_check_with_central_left_multiplier() {
        let alg = m2();
        let t = basis(&alg, "E_12");
        let delta = ad(&alg, &t);
        // L_1 = δ + left-multiplication by the unit (central) = δ + id
        let l1 = delta.add(&LinMap::identity(4));
        let fam = MapFamily::from_upper_levels(4, vec![l1]).unwrap();
        let assoc = MapFamily::from_upper_levels(4, vec![delta]).unwrap();
        assert!(check_generalized_higher_derivation(&alg, &fam, &assoc)
            .unwrap()
            .is_ok());
    }

    #[test]
    fn generalized_check_rejects_noncentral_right_multiplier() {
        let alg = m2();
        let c = basis(&alg, "E_12");
        let right_mul = LinMap::from_rows(alg.right_mul_matrix(&c)).unwrap();
        let fam = MapFamily::from_upper_levels(4, vec![right_mul]).unwrap();
        let id_fam = MapFamily::identity_family(4, 1);
        assert!(check_generalized_higher_derivation(&alg, &fam, &id_fam)
            .unwrap()
            .is_err());
    }

    #[test]
    fn xi_condition_rejects_nonzero_witness() {
        let alg = m2();
        let fam = MapFamily::identity_family(4, 1);
        let bad = vec![(basis(&alg, "E_11"), basis(&alg, "E_11"))];
        assert!(matches!(
            check_xi_condition_on_pairs(&alg, &fam, &scalar(1), &bad),
            Err(MapError::WitnessNotZeroProduct(0))
        ));
    }

    #[test]
    fn xi_condition_on_valid_witnesses() {
        let alg = m2();
        let witnesses = vec![
            (basis(&alg, "E_11"), basis(&alg, "E_21")),
            (basis(&alg, "E_12"), basis(&alg, "E_12")),
        ];
        // Higher derivations satisfy the ξ=1 rule unconditionally.
        let t = basis(&alg, "E_12");
        let fam = MapFamily::from_upper_levels(4, vec![ad(&alg, &t)]).unwrap();
        assert!(check_xi_condition_on_pairs(&alg, &fam, &scalar(1), &witnesses)
            .unwrap()
            .is_ok());
        // Left multiplication by the unit satisfies the ξ=0 rule on them.
        let fam0 = MapFamily::from_upper_levels(4, vec![LinMap::identity(4)]).unwrap();
        assert!(check_xi_condition_on_pairs(&alg, &fam0, &scalar(0), &witnesses)
            .unwrap()
            .is_ok());
        // Transpose violates the ξ=1 rule on the first witness.
        let famt = MapFamily::from_upper_levels(4, vec![transpose_map(&alg)]).unwrap();
        let violation = check_xi_condition_on_pairs(&alg, &famt, &scalar(1), &witnesses)
            .unwrap()
            .unwrap_err();
        assert_eq!(violation.level, 1);
        assert_eq!(violation.left, 0);
    }

    #[test]
    fn family_constructor_rejects_missing_identity() {
        let bad = vec![LinMap::zero(4)];
        assert!(matches!(
            MapFamily::new(bad),
            Err(MapError::MissingIdentity)
        ));
    }
}
