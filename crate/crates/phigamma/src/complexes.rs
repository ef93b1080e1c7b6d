//! Cochain complexes on finite models and their exact cohomology.
//!
//! All homological algebra is done on the underlying `K`-linear maps
//! ([`realify`]): a matrix over `A = K`, `K[y]/(g)` or `K[ε]/(εᵉ)` becomes a
//! matrix over the scalar field, kernels and images are computed there, and
//! the `A`-module structure of a subquotient is read off from the dimensions
//! of `εᵏ·H` (the ε-filtration of the dual-number path).
//!
//! Complexes provided:
//!
//! * the Koszul complex `𝒞_{τ,φ,γ}` with `X = (1−τ, 1−φ, γ−1)`,
//!   `Y = [[1−φδ_p, τ−1, 0], [γδ_a−1, 0, τ−1], [0, γ−1, φ−1]]`,
//!   `Z = [γδ_a−1, φδ_p−1, 1−τ]`;
//! * the `(φ, γ)` complexes `𝒞_{φ,γ}` (plain and with the `δ_p, δ_a` twist) and
//!   the Lie version `x ↦ (∇x, (φ−1)x)`;
//! * the Lie-algebra complex `𝒞_{u⁻,φ,a⁺}` with `X′ = (φ−1, a⁺, u⁻)`,
//!   `Y′ = [[a⁺, −(φ−1), 0], [0, u⁻, −(a⁺+1)], [−u⁻, 0, pφ−1]]`,
//!   `Z′ = [u⁻, pφ−1, a⁺+1]`, together with cocycle-level lifts of `σ_a` and
//!   `τ` used to take invariants on its cohomology.

use std::sync::Arc;

use serde::Serialize;

use crate::coefficients::{CoeffElement, CoeffRing, Ring, RingKind, Scalar, Val};
use crate::error::{Error, Result};
use crate::finite_models::{identity_threshold, matrix_defect, AMatrix, ModelOperators};
use crate::linalg::{realify, Matrix};

/// The `A`-module structure of a finite module, measured through `K`-dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleStructure {
    /// Dimension over the scalar field `K`.
    pub base_dim: usize,
    /// Rank of the free part over `A` (for field coefficients: the dimension over `A`).
    pub free_rank: usize,
    /// Over `K[ε]/(εᵉ)`: multiplicity of `A/(εᵏ)` at index `k − 1`, `1 ≤ k < e`.
    /// Empty over fields.
    pub torsion: Vec<usize>,
}

impl ModuleStructure {
    /// The zero module.
    pub fn zero(ring_nilpotence: Option<usize>) -> Self {
        ModuleStructure {
            base_dim: 0,
            free_rank: 0,
            torsion: vec![0; ring_nilpotence.map_or(0, |e| e.saturating_sub(1))],
        }
    }

    /// Number of torsion summands.
    pub fn torsion_count(&self) -> usize {
        self.torsion.iter().sum()
    }

    /// Direct sum.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let len = self.torsion.len().max(other.torsion.len());
        let mut torsion = vec![0; len];
        for (i, t) in torsion.iter_mut().enumerate() {
            *t = self.torsion.get(i).copied().unwrap_or(0) + other.torsion.get(i).copied().unwrap_or(0);
        }
        ModuleStructure {
            base_dim: self.base_dim + other.base_dim,
            free_rank: self.free_rank + other.free_rank,
            torsion,
        }
    }

    /// Elementary divisors as text: `"A"` per free summand and `"A/(eps^k)"` per torsion summand.
    pub fn elementary_divisors(&self) -> Vec<String> {
        let mut out = vec!["A".to_string(); self.free_rank];
        for (i, m) in self.torsion.iter().enumerate() {
            let k = i + 1;
            let name = if k == 1 { "A/(eps)".to_string() } else { format!("A/(eps^{k})") };
            out.extend(std::iter::repeat(name).take(*m));
        }
        out
    }
}

/// A subquotient `Z/B` of `K^n` (columns of the two matrices span `Z ⊇ B`).
#[derive(Debug, Clone)]
pub struct Subquotient<K: Scalar> {
    ring: Arc<CoeffRing<K>>,
    ambient: usize,
    z: Vec<Vec<K>>,
    b: Vec<Vec<K>>,
}

fn span_rank<K: Scalar>(n: usize, vecs: &[Vec<K>], p: u32) -> Result<usize> {
    if vecs.is_empty() {
        return Ok(0);
    }
    Matrix::from_columns(n, vecs).rank(p)
}

fn span_basis<K: Scalar>(n: usize, vecs: &[Vec<K>], p: u32) -> Result<Vec<Vec<K>>> {
    if vecs.is_empty() {
        return Ok(Vec::new());
    }
    let idx = Matrix::from_columns(n, vecs).independent_columns(p)?;
    Ok(idx.into_iter().map(|i| vecs[i].clone()).collect())
}

/// `K`-matrix of multiplication by a ring element on `A^m` (flattened).
fn scalar_action<K: Scalar>(ring: &Arc<CoeffRing<K>>, m: usize, c: &CoeffElement<K>) -> Matrix<K> {
    let diag = vec![c.clone(); m];
    realify(&Matrix::diagonal(&diag, &ring.zero()))
}

impl<K: Scalar> Subquotient<K> {
    /// Build from spanning sets (`b` must lie in the span of `z`).
    pub fn new(ring: &Arc<CoeffRing<K>>, ambient: usize, z: Vec<Vec<K>>, b: Vec<Vec<K>>) -> Result<Self> {
        let p = ring.p();
        let z = span_basis(ambient, &z, p)?;
        let b = span_basis(ambient, &b, p)?;
        let mut zb = z.clone();
        zb.extend(b.iter().cloned());
        if span_rank(ambient, &zb, p)? != z.len() {
            return Err(Error::IdentityFailure("boundaries are not contained in the cycles".into()));
        }
        Ok(Subquotient {
            ring: Arc::clone(ring),
            ambient,
            z,
            b,
        })
    }

    /// Dimension over `K`.
    pub fn base_dim(&self) -> usize {
        self.z.len() - self.b.len()
    }

    /// Basis of the numerator.
    pub fn cycles(&self) -> &[Vec<K>] {
        &self.z
    }

    /// Basis of the denominator.
    pub fn boundaries(&self) -> &[Vec<K>] {
        &self.b
    }

    /// Vectors of `Z` whose classes form a `K`-basis of `Z/B`.
    pub fn representatives(&self) -> Result<Vec<Vec<K>>> {
        let mut all = self.b.clone();
        all.extend(self.z.iter().cloned());
        let idx = Matrix::from_columns(self.ambient, &all).independent_columns(self.ring.p())?;
        Ok(idx
            .into_iter()
            .filter(|&i| i >= self.b.len())
            .map(|i| all[i].clone())
            .collect())
    }

    /// `A`-module structure, from `dim_K(εᵏ·(Z/B))` on the dual-number path.
    pub fn structure(&self) -> Result<ModuleStructure> {
        let d = self.ring.dim();
        let total = self.base_dim();
        match self.ring.kind() {
            RingKind::Dual(e) => {
                let e = *e;
                let p = self.ring.p();
                let m = self.ambient / d;
                let eps = scalar_action(&self.ring, m, &self.ring.basis(1));
                // dims[k] = dim_K εᵏ(Z/B) for k = 0..=e+1.
                let mut dims = vec![total];
                let mut cur = self.z.clone();
                for _ in 1..=e + 1 {
                    cur = cur.iter().map(|v| eps.apply(v)).collect();
                    let mut span = cur.clone();
                    span.extend(self.b.iter().cloned());
                    dims.push(span_rank(self.ambient, &span, p)? - self.b.len());
                }
                // Number of summands A/(εᵏ) with k ≥ j is dims[j−1] − dims[j].
                let at_least = |j: usize| dims[j - 1] - dims[j];
                let mut torsion = Vec::with_capacity(e - 1);
                for k in 1..e {
                    torsion.push(at_least(k) - at_least(k + 1));
                }
                Ok(ModuleStructure {
                    base_dim: total,
                    free_rank: at_least(e),
                    torsion,
                })
            }
            _ => {
                if total % d != 0 {
                    return Err(Error::IdentityFailure("subquotient is not a vector space over A".into()));
                }
                Ok(ModuleStructure {
                    base_dim: total,
                    free_rank: total / d,
                    torsion: Vec::new(),
                })
            }
        }
    }
}

/// A `K`-basis of the kernel of a matrix over `A` (flattened coordinates).
pub fn kernel_basis<K: Scalar>(mat: &AMatrix<K>) -> Result<Vec<Vec<K>>> {
    realify(mat).kernel(mat.zero_entry().ring().p())
}

/// Kernel of a matrix over `A` as an `A`-module.
pub fn kernel_module<K: Scalar>(mat: &AMatrix<K>) -> Result<Subquotient<K>> {
    let ring = Arc::clone(mat.zero_entry().ring());
    let n = mat.cols() * ring.dim();
    Subquotient::new(&ring, n, kernel_basis(mat)?, Vec::new())
}

/// The cokernel `A^rows / image` of a presentation matrix.
pub fn module_quotient<K: Scalar>(presentation: &AMatrix<K>) -> Result<Subquotient<K>> {
    let ring = Arc::clone(presentation.zero_entry().ring());
    let n = presentation.rows() * ring.dim();
    let whole: Vec<Vec<K>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { K::one() } else { K::zero() }).collect())
        .collect();
    Subquotient::new(&ring, n, whole, image_basis(&realify(presentation), ring.p())?)
}

fn image_basis<K: Scalar>(m: &Matrix<K>, p: u32) -> Result<Vec<Vec<K>>> {
    let idx = m.independent_columns(p)?;
    Ok(idx.into_iter().map(|j| m.col(j)).collect())
}

/// A cochain complex `C⁰ → C¹ → ⋯` of free `A`-modules.
#[derive(Debug, Clone)]
pub struct ChainComplex<K: Scalar> {
    name: String,
    ring: Arc<CoeffRing<K>>,
    ranks: Vec<usize>,
    boundaries: Vec<AMatrix<K>>,
}

impl<K: Scalar> ChainComplex<K> {
    /// Assemble and verify `d_{i+1} ∘ d_i = 0` (exactly, or to the identity threshold).
    pub fn new(name: &str, ranks: Vec<usize>, boundaries: Vec<AMatrix<K>>) -> Result<Self> {
        if boundaries.is_empty() || ranks.len() != boundaries.len() + 1 {
            return Err(Error::DimensionMismatch("ranks must be one longer than boundaries".into()));
        }
        let ring = Arc::clone(boundaries[0].zero_entry().ring());
        for (i, d) in boundaries.iter().enumerate() {
            if d.cols() != ranks[i] || d.rows() != ranks[i + 1] {
                return Err(Error::DimensionMismatch(format!("boundary {i} has the wrong shape")));
            }
        }
        let threshold = identity_threshold(&ring);
        for i in 0..boundaries.len().saturating_sub(1) {
            let v = boundaries[i + 1].mul(&boundaries[i]).min_valuation(ring.p());
            if !v.at_least(threshold) {
                return Err(Error::IdentityFailure(format!("{name}: d{} ∘ d{} ≠ 0 (defect {v})", i + 1, i)));
            }
        }
        Ok(ChainComplex {
            name: name.to_string(),
            ring,
            ranks,
            boundaries,
        })
    }

    /// Name of the complex.
    pub fn name(&self) -> &str {
        &self.name
    }

    /// The coefficient ring.
    pub fn ring(&self) -> &Arc<CoeffRing<K>> {
        &self.ring
    }

    /// Ranks of the terms.
    pub fn ranks(&self) -> &[usize] {
        &self.ranks
    }

    /// The boundary maps.
    pub fn boundaries(&self) -> &[AMatrix<K>] {
        &self.boundaries
    }

    /// `Σ (−1)^i rank Cⁱ`.
    pub fn euler_characteristic(&self) -> i64 {
        self.ranks
            .iter()
            .enumerate()
            .map(|(i, r)| if i % 2 == 0 { *r as i64 } else { -(*r as i64) })
            .sum()
    }

    /// Reduction modulo the maximal ideal (the ε⁰ part over dual numbers).
    pub fn reduce(&self) -> Result<ChainComplex<K>> {
        let red = self.ring.reduced();
        let boundaries = self
            .boundaries
            .iter()
            .map(|d| {
                let mut m = Matrix::filled(d.rows(), d.cols(), red.zero());
                for i in 0..d.rows() {
                    for j in 0..d.cols() {
                        m.set(i, j, d.get(i, j).residue_reduce());
                    }
                }
                m
            })
            .collect();
        ChainComplex::new(&format!("{} mod m", self.name), self.ranks.clone(), boundaries)
    }

    /// The subquotient `Hⁱ = ker dᵢ / im d_{i−1}`.
    pub fn cohomology_at(&self, i: usize) -> Result<Subquotient<K>> {
        let d = self.ring.dim();
        let p = self.ring.p();
        let n = self.ranks[i] * d;
        let z = if i < self.boundaries.len() {
            kernel_basis(&self.boundaries[i])?
        } else {
            (0..n)
                .map(|a| (0..n).map(|b| if a == b { K::one() } else { K::zero() }).collect())
                .collect()
        };
        let b = if i > 0 {
            image_basis(&realify(&self.boundaries[i - 1]), p)?
        } else {
            Vec::new()
        };
        Subquotient::new(&self.ring, n, z, b)
    }
}

/// One cohomology group with its module structure and representatives.
#[derive(Debug, Clone)]
pub struct CohomologySpace<K: Scalar> {
    /// Cohomological degree.
    pub degree: usize,
    /// The subquotient `ker/im` in flattened coordinates.
    pub space: Subquotient<K>,
    /// Module structure over `A`.
    pub structure: ModuleStructure,
    /// Cocycles whose classes form a `K`-basis.
    pub representatives: Vec<Vec<K>>,
}

impl<K: Scalar> CohomologySpace<K> {
    /// Dimension over `K`.
    pub fn base_dim(&self) -> usize {
        self.structure.base_dim
    }

    /// Dimension over `A` for field coefficients, free rank otherwise.
    pub fn dim(&self) -> usize {
        self.structure.free_rank
    }
}

/// All cohomology groups of a complex.
pub fn cohomology<K: Scalar>(c: &ChainComplex<K>) -> Result<Vec<CohomologySpace<K>>> {
    (0..c.ranks.len())
        .map(|i| {
            let space = c.cohomology_at(i)?;
            let structure = space.structure()?;
            let representatives = space.representatives()?;
            Ok(CohomologySpace {
                degree: i,
                space,
                structure,
                representatives,
            })
        })
        .collect()
}

/// Dimensions over `A` (field path) / free ranks (dual-number path).
pub fn cohomology_dims<K: Scalar>(c: &ChainComplex<K>) -> Result<Vec<usize>> {
    Ok(cohomology(c)?.iter().map(|h| h.dim()).collect())
}

fn block<K: Scalar>(grid: &[Vec<Option<&AMatrix<K>>>], n: usize, template: &CoeffElement<K>) -> AMatrix<K> {
    let sizes = vec![n; grid.len()];
    let cols = vec![n; grid[0].len()];
    Matrix::block(grid, &sizes, &cols, template)
}

/// The Koszul complex `𝒞_{τ,φ,γ}` with ranks `(1, 3, 3, 1)·dim M`.
pub fn build_koszul<K: Scalar>(m: &ModelOperators<K>) -> Result<ChainComplex<K>> {
    let n = m.dim();
    let z = m.ring().zero();
    let one = m.identity();
    let t = &m.tau;
    let phi_dp = m.phi.mul(&m.delta_p);
    let gam_da = m.gamma.mul(&m.delta_a);
    let one_m_tau = one.sub(t);
    let one_m_phi = one.sub(&m.phi);
    let gam_m_one = m.gamma.sub(&one);
    let x = Matrix::vstack(&[&one_m_tau, &one_m_phi, &gam_m_one]);
    let a11 = one.sub(&phi_dp);
    let tau_m_one = t.sub(&one);
    let a21 = gam_da.sub(&one);
    let phi_m_one = m.phi.sub(&one);
    let y = block(
        &[
            vec![Some(&a11), Some(&tau_m_one), None],
            vec![Some(&a21), None, Some(&tau_m_one)],
            vec![None, Some(&gam_m_one), Some(&phi_m_one)],
        ],
        n,
        &z,
    );
    let z3 = Matrix::hstack(&[&a21, &phi_dp.sub(&one), &one_m_tau]);
    ChainComplex::new("koszul", vec![n, 3 * n, 3 * n, n], vec![x, y, z3])
}

/// `𝒞_{φ,γ}`: `x ↦ ((1−φ)x, (γ−1)x)`, `(y, z) ↦ (γ−1)y + (φ−1)z`.
pub fn build_aplus_from<K: Scalar>(phi: &AMatrix<K>, gamma: &AMatrix<K>) -> Result<ChainComplex<K>> {
    let n = phi.rows();
    let one = Matrix::identity_like(n, phi.zero_entry());
    let x = Matrix::vstack(&[&one.sub(phi), &gamma.sub(&one)]);
    let y = Matrix::hstack(&[&gamma.sub(&one), &phi.sub(&one)]);
    ChainComplex::new("aplus", vec![n, 2 * n, n], vec![x, y])
}

/// `𝒞_{φ,γ}` on a model.
pub fn build_aplus<K: Scalar>(m: &ModelOperators<K>) -> Result<ChainComplex<K>> {
    build_aplus_from(&m.phi, &m.gamma)
}

/// The twisted complex `x ↦ ((1−φδ_p)x, (γδ_a−1)x)`.
pub fn build_aplus_twisted<K: Scalar>(m: &ModelOperators<K>) -> Result<ChainComplex<K>> {
    let c = build_aplus_from(&m.phi.mul(&m.delta_p), &m.gamma.mul(&m.delta_a))?;
    Ok(ChainComplex { name: "aplus_twisted".into(), ..c })
}

/// The Lie version `x ↦ (∇x, (φ−1)x)`, `(y, z) ↦ (φ−1)y − ∇z`, with `∇ = a⁺`.
pub fn build_aplus_lie<K: Scalar>(m: &ModelOperators<K>) -> Result<ChainComplex<K>> {
    let n = m.dim();
    let one = m.identity();
    let phi_m_one = m.phi.sub(&one);
    let x = Matrix::vstack(&[&m.a_plus, &phi_m_one]);
    let y = Matrix::hstack(&[&phi_m_one, &m.a_plus.neg()]);
    ChainComplex::new("aplus_lie", vec![n, 2 * n, n], vec![x, y])
}

/// The Lie complex `𝒞_{u⁻,φ,a⁺}`; `[a⁺, u⁻] = −u⁻` and `pφu⁻ = u⁻φ` are verified first.
pub fn build_lie<K: Scalar>(m: &ModelOperators<K>) -> Result<ChainComplex<K>> {
    let n = m.dim();
    let ring = Arc::clone(m.ring());
    let threshold = identity_threshold(&ring);
    let z = ring.zero();
    let one = m.identity();
    let (ap, um) = (&m.a_plus, &m.u_minus);
    let comm = matrix_defect(&ap.mul(um).sub(&um.mul(ap)), &um.neg())?;
    let pphi = m.phi.scale(&ring.int(ring.p() as i64));
    let frob = matrix_defect(&pphi.mul(um), &um.mul(&m.phi))?;
    for (name, v) in [("[a+, u-] = -u-", comm), ("p phi u- = u- phi", frob)] {
        if !v.at_least(threshold) {
            return Err(Error::IdentityFailure(format!("{name} (defect {v})")));
        }
    }
    let phi_m_one = m.phi.sub(&one);
    let neg_phi_m_one = phi_m_one.neg();
    let ap1 = ap.add(&one);
    let neg_ap1 = ap1.neg();
    let neg_um = um.neg();
    let pphi_m_one = pphi.sub(&one);
    let x = Matrix::vstack(&[&phi_m_one, ap, um]);
    let y = block(
        &[
            vec![Some(ap), Some(&neg_phi_m_one), None],
            vec![None, Some(um), Some(&neg_ap1)],
            vec![Some(&neg_um), None, Some(&pphi_m_one)],
        ],
        n,
        &z,
    );
    let z3 = Matrix::hstack(&[um, &pphi_m_one, &ap1]);
    ChainComplex::new("lie", vec![n, 3 * n, 3 * n, n], vec![x, y, z3])
}

/// Cocycle-level lifts of `σ_a` and `τ` to the Lie complex (one matrix per degree).
#[derive(Debug, Clone)]
pub struct LieLifts<K: Scalar> {
    /// Lift of `γ = σ_a`: `[γ, diag(γ, γ, aγ), diag(γ, aγ, aγ), aγ]`.
    pub sigma: Vec<AMatrix<K>>,
    /// Lift of `τ`: `[τ, ρ₁, ρ₂, τ]` with
    /// `ρ₁(x, y, z) = (τx + τφG z, τy − pτz, τz)`,
    /// `ρ₂(A, B, C) = (τA − τφG B + pτC, τB, τC)`, `G = (τ^{1−p} − 1)/u⁻`.
    pub tau: Vec<AMatrix<K>>,
}

/// Build the lifts; `log_sign` is `±1` according as `τ = exp(±p·u⁻)` on the model.
///
/// Each lift is checked to be a chain map (`d ρ = ρ d`), so that it induces
/// a well-defined action on cohomology.
pub fn lie_lifts<K: Scalar>(m: &ModelOperators<K>, log_sign: i64) -> Result<LieLifts<K>> {
    let n = m.dim();
    let ring = Arc::clone(m.ring());
    let z = ring.zero();
    let p = ring.p() as i64;
    let g = &m.gamma;
    let ag = g.scale(&ring.int(m.generator));
    let sigma = vec![
        g.clone(),
        Matrix::block_diag(&[g, g, &ag]),
        Matrix::block_diag(&[g, &ag, &ag]),
        ag.clone(),
    ];
    // G = Σ_{k≥1} c^k u^{k−1}/k! with c = ±p(1−p).
    let c = ring.int(log_sign * p * (1 - p));
    let mut gmat = Matrix::filled(n, n, z.clone());
    let mut upow = m.identity();
    let mut coef = ring.one();
    for k in 1..=n as i64 + 1 {
        coef = coef * c.clone() * ring.rational(&crate::coefficients::rat(1, k));
        gmat = gmat.add(&upow.scale(&coef));
        upow = upow.mul(&m.u_minus);
    }
    let t = &m.tau;
    let tfg = t.mul(&m.phi).mul(&gmat);
    let neg_tfg = tfg.neg();
    let ptau = t.scale(&ring.int(p));
    let neg_ptau = ptau.neg();
    let rho1 = block(
        &[
            vec![Some(t), None, Some(&tfg)],
            vec![None, Some(t), Some(&neg_ptau)],
            vec![None, None, Some(t)],
        ],
        n,
        &z,
    );
    let rho2 = block(
        &[
            vec![Some(t), Some(&neg_tfg), Some(&ptau)],
            vec![None, Some(t), None],
            vec![None, None, Some(t)],
        ],
        n,
        &z,
    );
    let tau = vec![t.clone(), rho1, rho2, t.clone()];
    let lie = build_lie(m)?;
    let threshold = identity_threshold(&ring);
    for (name, lift) in [("sigma", &sigma), ("tau", &tau)] {
        for (i, d) in lie.boundaries().iter().enumerate() {
            let v = matrix_defect(&d.mul(&lift[i]), &lift[i + 1].mul(d))?;
            if !v.at_least(threshold) {
                return Err(Error::IdentityFailure(format!(
                    "lift of {name} is not a chain map in degree {i} (defect {v})"
                )));
            }
        }
    }
    Ok(LieLifts { sigma, tau })
}

/// Classes of `H` fixed by every given action (flattened `K`-matrices on the cochains).
pub fn invariants<K: Scalar>(h: &Subquotient<K>, actions: &[Matrix<K>]) -> Result<Subquotient<K>> {
    let n = h.ambient;
    let p = h.ring.p();
    let zc = h.cycles().len();
    let bc = h.boundaries().len();
    if zc == 0 {
        return Ok(h.clone());
    }
    let zmat = Matrix::from_columns(n, h.cycles());
    let bmat = if bc > 0 { Some(Matrix::from_columns(n, h.boundaries())) } else { None };
    // Unknowns: α (zc) and one β-block (bc) per action; rows: one block of n per action.
    let k = actions.len();
    let mut sys = Matrix::zeros(n * k, zc + bc * k);
    for (a, rho) in actions.iter().enumerate() {
        if rho.rows() != n || rho.cols() != n {
            return Err(Error::DimensionMismatch("action size".into()));
        }
        let moved = rho.mul(&zmat).sub(&zmat);
        // The action must preserve cycles and boundaries.
        let mut span = h.cycles().to_vec();
        span.extend((0..zc).map(|j| rho.mul(&zmat).col(j)));
        if span_rank(n, &span, p)? != zc {
            return Err(Error::IdentityFailure("action does not preserve cocycles".into()));
        }
        if let Some(b) = &bmat {
            let mut span = h.boundaries().to_vec();
            span.extend((0..bc).map(|j| rho.mul(b).col(j)));
            if span_rank(n, &span, p)? != bc {
                return Err(Error::IdentityFailure("action does not preserve coboundaries".into()));
            }
        }
        for i in 0..n {
            for j in 0..zc {
                sys.set(a * n + i, j, moved.get(i, j).clone());
            }
            if let Some(b) = &bmat {
                for j in 0..bc {
                    sys.set(a * n + i, zc + a * bc + j, b.get(i, j).clone());
                }
            }
        }
    }
    let sol = sys.kernel(p)?;
    let fixed: Vec<Vec<K>> = sol
        .iter()
        .map(|v| zmat.apply(&v[..zc]))
        .collect();
    let mut z = fixed;
    z.extend(h.boundaries().iter().cloned());
    Subquotient::new(&h.ring, n, z, h.boundaries().to_vec())
}

/// `H⁰(P̃, Hⁱ_Lie)` for every degree, via the lifts of `σ_a` and `τ`.
pub fn ptilde_invariants<K: Scalar>(m: &ModelOperators<K>, log_sign: i64) -> Result<Vec<CohomologySpace<K>>> {
    let lie = build_lie(m)?;
    let lifts = lie_lifts(m, log_sign)?;
    (0..4)
        .map(|i| {
            let h = lie.cohomology_at(i)?;
            let acts = [realify(&lifts.sigma[i]), realify(&lifts.tau[i])];
            let space = invariants(&h, &acts)?;
            let structure = space.structure()?;
            let representatives = space.representatives()?;
            Ok(CohomologySpace {
                degree: i,
                space,
                structure,
                representatives,
            })
        })
        .collect()
}

/// The restriction `H¹(𝒞_{τ,φ,γ}) → H¹(𝒞_{φ,γ})`, `[(x, y, z)] ↦ [(y, z)]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RestrictionData {
    /// Structure of the source `H¹(𝒞_{τ,φ,γ})`.
    pub source: ModuleStructure,
    /// Structure of the target `H¹(𝒞_{φ,γ})`.
    pub target: ModuleStructure,
    /// Structure of the image.
    pub image: ModuleStructure,
    /// Rank of the map over `K`.
    pub rank: usize,
    /// `dim_K` of the kernel.
    pub kernel_dim: usize,
    /// `dim_K` of the cokernel.
    pub cokernel_dim: usize,
}

/// Compute the restriction map on `H¹`.
pub fn restriction_rank<K: Scalar>(m: &ModelOperators<K>) -> Result<RestrictionData> {
    let ring = Arc::clone(m.ring());
    let d = ring.dim();
    let n = m.dim();
    let kos = build_koszul(m)?;
    let ap = build_aplus(m)?;
    let src = kos.cohomology_at(1)?;
    let tgt = ap.cohomology_at(1)?;
    let project = |v: &Vec<K>| v[n * d..].to_vec();
    let mut z: Vec<Vec<K>> = src.cycles().iter().map(project).collect();
    // The projected cycles must be cycles of the target.
    let mut span = tgt.cycles().to_vec();
    span.extend(z.iter().cloned());
    if span_rank(2 * n * d, &span, ring.p())? != tgt.cycles().len() {
        return Err(Error::IdentityFailure("restriction does not map cocycles to cocycles".into()));
    }
    z.extend(tgt.boundaries().iter().cloned());
    let image = Subquotient::new(&ring, 2 * n * d, z, tgt.boundaries().to_vec())?;
    let rank = image.base_dim();
    Ok(RestrictionData {
        source: src.structure()?,
        target: tgt.structure()?,
        image: image.structure()?,
        rank,
        kernel_dim: src.base_dim() - rank,
        cokernel_dim: tgt.base_dim() - rank,
    })
}

/// `A/(1 − αp^{−i}, 1 − βa^{−i})` for `0 ≤ i ≤ i_max`, with `α = δ(p)`, `β = δ(a)`.
pub fn h2_presentation<K: Scalar>(
    delta: &crate::characters::Character<K>,
    a: i64,
    i_max: i64,
) -> Result<Vec<(i64, ModuleStructure)>> {
    let ring = Arc::clone(delta.ring());
    let alpha = delta.value_at_p().clone();
    let beta = delta.eval_int(a)?;
    let p_elem = ring.int(ring.p() as i64);
    let a_elem = ring.int(a);
    (0..=i_max)
        .map(|i| {
            let g1 = ring.one() - alpha.clone() * p_elem.pow_i(-i)?;
            let g2 = ring.one() - beta.clone() * a_elem.pow_i(-i)?;
            let pres = Matrix::from_rows(vec![vec![g1, g2]], &ring.zero());
            Ok((i, module_quotient(&pres)?.structure()?))
        })
        .collect()
}

/// Minimum valuation over a list of flattened vectors (`+∞` if empty).
pub fn vectors_min_valuation<K: Scalar>(vs: &[Vec<K>], p: u32) -> Val {
    vs.iter()
        .flat_map(|v| v.iter().map(|c| c.valuation(p)))
        .min()
        .unwrap_or(Val::Inf)
}
