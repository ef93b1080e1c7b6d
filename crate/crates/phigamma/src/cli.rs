//! Batch driver: dimension tables, property suites, sheaf fuzzing and module dumps.
//!
//! A job is described by a [`JobConfig`] (JSON, every field optional). The
//! driver builds the requested coefficient ring, instantiates each character
//! pair, and emits one JSON row per table cell or property check together with
//! a human-readable summary. Every suite is exposed as a library function so
//! that test harnesses can run exactly what the command line runs.
//!
//! Exit codes: `0` when every expected-vs-computed cell matches and every
//! property defect clears its threshold, `1` on any mismatch or failure, `2`
//! on malformed input (command line, config file, character specification).

use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::characters::{Character, CharacterSpec};
use crate::coefficients::{is_odd_prime, mod_inverse, rat, CoeffElement, CoeffRing, Scalar, Val};
use crate::complexes::{
    build_aplus, build_koszul, cohomology, cohomology_dims, h2_presentation, kernel_module, module_quotient,
    ptilde_invariants, ModuleStructure,
};
use crate::dictionary::{colmez, pair, pair_via_functions, Distribution};
use crate::finite_models::{build_extension, coboundary_witness, LocPolyModule, ModuleDump, PolDualModule};
use crate::linalg::Matrix;
use crate::poly::{LaurentPoly, Poly};
use crate::robba::{ExpPoly, RobbaElement, Window};
use crate::sheaf::{
    check_diag_p_psi, check_pairing_invariance, check_relation, sample_generators, standard_relations, Dist,
    P1Sheaf, RelationReport, SheafComponent,
};
use crate::twists::{default_level, iota, iota_closed_form, m_delta, PsiZeroElement};
use crate::{Error, PAdic, Rat, Ring};

/// Guard digits subtracted from the working precision to obtain check thresholds.
pub const GUARD_DIGITS: i64 = 4;

/// Failures of the driver itself, split by exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Malformed command line, config file or character specification (exit 2).
    #[error("configuration error: {0}")]
    Config(String),
    /// A computation failed (exit 1).
    #[error("computation failed in {context}: {source}")]
    Compute {
        /// What was being computed.
        context: String,
        /// The underlying engine error.
        source: Error,
    },
    /// Writing the report failed (exit 1).
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }

    fn compute(context: impl Into<String>) -> impl FnOnce(Error) -> CliError {
        let context = context.into();
        move |source| CliError::Compute { context, source }
    }
}

/// Coefficient ring of a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RingSpec {
    /// The scalar field itself.
    #[default]
    Base,
    /// Dual numbers `K[ε]/(ε^e)`.
    Dual {
        /// Nilpotence order `e ≥ 2`.
        e: usize,
    },
}

/// Scalar field of a job.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    /// Exact rationals.
    #[default]
    Rational,
    /// Capped-relative-precision p-adic numbers.
    Padic,
}

/// A character: either a shorthand string or a full [`CharacterSpec`].
///
/// Shorthands are products of the factors `trivial`, `x^k`, `chi^k` joined by
/// `*`, e.g. `"x^-2"`, `"chi*x^3"`, `"chi^-1"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CharacterInput {
    /// Shorthand product of `x` and `chi` powers.
    Short(String),
    /// Value at `p`, tame index and weight.
    Full(CharacterSpec),
}

impl CharacterInput {
    /// Build the character over `ring`.
    pub fn build<K: Scalar>(&self, ring: &Arc<CoeffRing<K>>) -> crate::Result<Character<K>> {
        match self {
            CharacterInput::Full(spec) => spec.build(ring),
            CharacterInput::Short(s) => parse_shorthand(s, ring),
        }
    }

    /// Human-readable label.
    pub fn label(&self) -> String {
        match self {
            CharacterInput::Short(s) => s.clone(),
            CharacterInput::Full(spec) => format!(
                "(p_value={}, tame={}, weight={})",
                json_scalar(&spec.p_value),
                spec.tame_index,
                json_scalar(&spec.weight)
            ),
        }
    }
}

fn json_scalar(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn parse_shorthand<K: Scalar>(s: &str, ring: &Arc<CoeffRing<K>>) -> crate::Result<Character<K>> {
    let mut acc = Character::trivial(ring);
    for factor in s.split('*').map(str::trim) {
        let (name, exp) = match factor.split_once('^') {
            Some((n, e)) => {
                let e: i64 = e
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in character factor '{factor}'")))?;
                (n.trim(), e)
            }
            None => (factor, 1),
        };
        let next = match name {
            "trivial" | "1" if exp == 1 => Character::trivial(ring),
            "x" => Character::x_power(ring, exp),
            "chi" => {
                let chi = Character::chi(ring);
                let base = if exp < 0 { chi.inv() } else { chi };
                (0..exp.unsigned_abs()).fold(Character::trivial(ring), |a, _| a.mul(&base))
            }
            _ => return Err(Error::Parse(format!("unknown character factor '{factor}' in '{s}'"))),
        };
        acc = acc.mul(&next);
    }
    Ok(acc)
}

/// One pair `(δ₁, δ₂)` of a job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    /// First character.
    pub d1: CharacterInput,
    /// Second character.
    #[serde(default = "trivial_input")]
    pub d2: CharacterInput,
}

fn trivial_input() -> CharacterInput {
    CharacterInput::Short("trivial".into())
}

impl PairSpec {
    /// A pair from two shorthand strings.
    pub fn short(d1: &str, d2: &str) -> Self {
        PairSpec {
            d1: CharacterInput::Short(d1.into()),
            d2: CharacterInput::Short(d2.into()),
        }
    }
}

/// Finite-model parameters: polynomial degree `n` of the `Pol*` model, level
/// `h` and degree bound `d` of the locally polynomial model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModuleParams {
    /// Degree bound `N` of `Pol_{≤N}*`.
    pub n: usize,
    /// Level `h` of the locally polynomial model.
    pub h: u32,
    /// Degree bound `D` of the locally polynomial model.
    pub d: usize,
}

impl Default for ModuleParams {
    fn default() -> Self {
        ModuleParams { n: 6, h: 2, d: 2 }
    }
}

/// Property suites run by `checks`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Amice/Colmez dictionary identities.
    Dictionary,
    /// Twists, `w_*` and `ι`.
    Twists,
    /// The P¹-sheaf relations and pairing.
    Sheaf,
    /// Complex-level consistency (d² = 0, Euler characteristic, Lie vs Koszul, Tor).
    Complexes,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Dictionary => "dictionary",
            Suite::Twists => "twists",
            Suite::Sheaf => "sheaf",
            Suite::Complexes => "complexes",
        }
    }
}

/// A batch job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JobConfig {
    /// The prime.
    pub p: u32,
    /// Working precision in digits.
    pub precision: u32,
    /// Coefficient ring.
    pub ring: RingSpec,
    /// Scalar field.
    pub scalars: ScalarKind,
    /// Character pairs; empty means the default dimension-table instances.
    pub pairs: Vec<PairSpec>,
    /// Finite-model parameters.
    pub module: ModuleParams,
    /// Suites run by `checks`; empty means all.
    pub suites: Vec<Suite>,
    /// JSON-lines output path (standard output when absent).
    pub output: Option<PathBuf>,
    /// Seed of the sampling PRNG.
    pub seed: u64,
    /// Samples per randomized check.
    pub samples: usize,
    /// Negative control: negate the sign of the series `ι`.
    pub break_iota: bool,
}

impl Default for JobConfig {
    fn default() -> Self {
        JobConfig {
            p: 5,
            precision: 20,
            ring: RingSpec::Base,
            scalars: ScalarKind::Rational,
            pairs: Vec::new(),
            module: ModuleParams::default(),
            suites: Vec::new(),
            output: None,
            seed: 1,
            samples: 4,
            break_iota: false,
        }
    }
}

impl JobConfig {
    /// Parse a JSON config.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Check the invariants: odd prime, precision ≥ 8, sensible ring and module data.
    pub fn validate(&self) -> Result<(), CliError> {
        if !is_odd_prime(self.p) {
            return Err(CliError::Config(format!("p = {} is not an odd prime", self.p)));
        }
        if self.precision < 8 {
            return Err(CliError::Config(format!("precision {} is below the minimum 8", self.precision)));
        }
        if let RingSpec::Dual { e } = self.ring {
            if e < 2 {
                return Err(CliError::Config(format!("dual-number order e = {e} must be at least 2")));
            }
        }
        if self.samples == 0 {
            return Err(CliError::Config("samples must be positive".into()));
        }
        Ok(())
    }

    /// The configured pairs, or the default table instances.
    pub fn effective_pairs(&self) -> Vec<PairSpec> {
        if self.pairs.is_empty() {
            default_pairs(self.p)
        } else {
            self.pairs.clone()
        }
    }

    /// The configured suites, or all of them.
    pub fn effective_suites(&self) -> Vec<Suite> {
        if self.suites.is_empty() {
            vec![Suite::Dictionary, Suite::Twists, Suite::Sheaf, Suite::Complexes]
        } else {
            self.suites.clone()
        }
    }

    /// Threshold for precision-bounded checks.
    pub fn threshold(&self) -> i64 {
        self.precision as i64 - GUARD_DIGITS
    }
}

/// The dimension-table instances: `δ₁δ₂⁻¹ ∈ {1, x⁻¹, x⁻², x²}` and a character
/// with value `1 + p` at `p`, trivial on units.
pub fn default_pairs(p: u32) -> Vec<PairSpec> {
    let generic = CharacterInput::Full(CharacterSpec {
        p_value: serde_json::Value::String((p + 1).to_string()),
        tame_index: 0,
        weight: serde_json::Value::String("0".into()),
    });
    vec![
        PairSpec::short("trivial", "trivial"),
        PairSpec::short("x^-1", "trivial"),
        PairSpec::short("x^-2", "trivial"),
        PairSpec::short("x^2", "trivial"),
        PairSpec {
            d1: generic,
            d2: trivial_input(),
        },
    ]
}

/// One JSON-lines row: a table cell or a property check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    /// `"table"` or `"check"`.
    pub kind: String,
    /// Suite (`tables`, `dictionary`, …).
    pub suite: String,
    /// Name of the cell or check.
    pub name: String,
    /// The prime.
    pub p: u32,
    /// First character, when the row concerns a pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<String>,
    /// Second character.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<String>,
    /// Model description.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub module: Option<String>,
    /// Computed dimensions (free ranks over the coefficient ring).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    /// Number of torsion summands per degree.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub torsion: Option<Vec<usize>>,
    /// Expected dimensions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected: Option<Vec<usize>>,
    /// Number of random samples.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    /// Smallest defect valuation (absent: exact agreement or not applicable).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_defect_valuation: Option<i64>,
    /// Threshold the defect must reach.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<i64>,
    /// Verdict.
    pub pass: bool,
    /// Free-form remarks.
    pub notes: String,
}

impl Row {
    /// A property-check row.
    pub fn check(suite: &str, name: impl Into<String>, p: u32) -> Self {
        Row {
            kind: "check".into(),
            suite: suite.into(),
            name: name.into(),
            p,
            d1: None,
            d2: None,
            module: None,
            dims: None,
            torsion: None,
            expected: None,
            samples: None,
            min_defect_valuation: None,
            threshold: None,
            pass: false,
            notes: String::new(),
        }
    }

    fn with_pair(mut self, pair: &PairSpec) -> Self {
        self.d1 = Some(pair.d1.label());
        self.d2 = Some(pair.d2.label());
        self
    }

    fn with_defect(mut self, samples: usize, min: Val, threshold: i64) -> Self {
        self.samples = Some(samples);
        self.min_defect_valuation = match min {
            Val::Inf => None,
            Val::Fin(v) => Some(v),
        };
        self.threshold = Some(threshold);
        self.pass = min.at_least(threshold);
        self
    }

    fn from_relation(suite: &str, p: u32, rep: &RelationReport, threshold: i64) -> Self {
        let mut row = Row::check(suite, rep.relation.clone(), p);
        row.samples = Some(rep.samples);
        row.min_defect_valuation = rep.min_defect_valuation;
        row.threshold = Some(threshold);
        row.pass = rep.pass;
        row
    }

    fn failed(suite: &str, name: impl Into<String>, p: u32, err: &Error) -> Self {
        let mut row = Row::check(suite, name, p);
        row.notes = format!("error: {err}");
        row
    }
}

/// Rows of a run plus the verdict.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Report {
    /// All rows in emission order.
    pub rows: Vec<Row>,
}

impl Report {
    /// Whether every row passed.
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    /// JSON-lines rendering.
    pub fn to_jsonl(&self) -> String {
        self.rows
            .iter()
            .map(|r| serde_json::to_string(r).expect("rows serialize"))
            .map(|s| s + "\n")
            .collect()
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let verdict = if r.pass { "PASS" } else { "FAIL" };
            let pair = match (&r.d1, &r.d2) {
                (Some(a), Some(b)) => format!(" [d1={a}, d2={b}]"),
                _ => String::new(),
            };
            let mut detail = String::new();
            if let Some(d) = &r.dims {
                detail += &format!(" dims={d:?}");
            }
            if let Some(e) = &r.expected {
                detail += &format!(" expected={e:?}");
            }
            if r.threshold.is_some() {
                let v = r.min_defect_valuation.map_or("exact".to_string(), |v| v.to_string());
                detail += &format!(" min_defect={v}");
            }
            if !r.notes.is_empty() {
                detail += &format!(" ({})", r.notes);
            }
            out += &format!("{verdict} {}: {}{pair}{detail}\n", r.suite, r.name);
        }
        let failed = self.rows.iter().filter(|r| !r.pass).count();
        out += &format!("{} rows, {} passed, {} failed\n", self.rows.len(), self.rows.len() - failed, failed);
        out
    }
}

// ---------------------------------------------------------------------------
// Ring dispatch
// ---------------------------------------------------------------------------

/// Build the configured coefficient ring over the scalar field `K`.
pub fn build_ring<K: Scalar>(cfg: &JobConfig) -> Result<Arc<CoeffRing<K>>, CliError> {
    let r = match cfg.ring {
        RingSpec::Base => CoeffRing::base_field(cfg.p, cfg.precision),
        RingSpec::Dual { e } => CoeffRing::dual(cfg.p, cfg.precision, e),
    };
    r.map_err(|e| CliError::Config(format!("ring: {e}")))
}

/// Instantiate every configured pair over `ring`.
pub fn build_pairs<K: Scalar>(
    cfg: &JobConfig,
    ring: &Arc<CoeffRing<K>>,
) -> Result<Vec<(PairSpec, Character<K>, Character<K>)>, CliError> {
    cfg.effective_pairs()
        .into_iter()
        .map(|pair| {
            let d1 = pair.d1.build(ring).map_err(|e| CliError::Config(format!("d1 {}: {e}", pair.d1.label())))?;
            let d2 = pair.d2.build(ring).map_err(|e| CliError::Config(format!("d2 {}: {e}", pair.d2.label())))?;
            Ok((pair, d1, d2))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Tables
// ---------------------------------------------------------------------------

/// Expected `dim H^i(P̄⁺, M₊)` for `δ = δ₁δ₂⁻¹` on a `Pol_{≤N}*` model:
/// `(1,1,1,0)` for `δ = 1`, `(1,3,3,1)` for `δ = x^{−i}` with `1 ≤ i ≤ N`,
/// zero otherwise. `None` when `δ = x^{−i}` with `i > N` (invisible to the model).
pub fn expected_dims<K: Scalar>(delta: &Character<K>, n: usize) -> Option<Vec<usize>> {
    match delta.residue_reduce().as_x_power() {
        Some(0) => Some(vec![1, 1, 1, 0]),
        Some(k) if k < 0 && (-k) as usize <= n => Some(vec![1, 3, 3, 1]),
        Some(k) if k < 0 => None,
        _ => Some(vec![0, 0, 0, 0]),
    }
}

/// Koszul dimensions, torsion counts and Lie-invariant dimensions of `Pol_{≤N}*(δ₁, δ₂)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableCell {
    /// Free ranks of the Koszul cohomology.
    pub koszul: Vec<usize>,
    /// Torsion summand counts of the Koszul cohomology.
    pub torsion: Vec<usize>,
    /// Free ranks of the P̃-invariants of the Lie cohomology.
    pub lie: Vec<usize>,
}

/// Compute one table cell.
pub fn table_cell<K: Scalar>(n: usize, d1: &Character<K>, d2: &Character<K>) -> crate::Result<TableCell> {
    let m = PolDualModule::new(n, d1, d2)?;
    let h = cohomology(&build_koszul(m.operators())?)?;
    let lie = ptilde_invariants(m.operators(), 1)?;
    Ok(TableCell {
        koszul: h.iter().map(|x| x.dim()).collect(),
        torsion: h.iter().map(|x| x.structure.torsion_count()).collect(),
        lie: lie.iter().map(|x| x.dim()).collect(),
    })
}

/// The dimension tables over the ring `ring`.
pub fn run_tables_in<K: Scalar>(cfg: &JobConfig, ring: &Arc<CoeffRing<K>>) -> Result<Report, CliError> {
    let n = cfg.module.n;
    let mut report = Report::default();
    for (pair, d1, d2) in build_pairs(cfg, ring)? {
        let context = format!("table cell d1={}, d2={}", pair.d1.label(), pair.d2.label());
        let cell = table_cell(n, &d1, &d2).map_err(CliError::compute(context))?;
        let expected = expected_dims(&d1.div(&d2), n);
        let mut notes = Vec::new();
        if cell.lie != cell.koszul {
            notes.push(format!("Lie invariants {:?} differ from Koszul", cell.lie));
        }
        if expected.is_none() {
            notes.push("delta = x^-i beyond the model degree; no expected row".into());
        }
        let pass = cell.lie == cell.koszul && expected.as_ref().map_or(true, |e| e == &cell.koszul);
        let mut row = Row::check("tables", "koszul cohomology of Pol*", cfg.p).with_pair(&pair);
        row.kind = "table".into();
        row.module = Some(format!("Pol_{{<={n}}}*"));
        row.dims = Some(cell.koszul);
        row.torsion = Some(cell.torsion);
        row.expected = expected;
        row.pass = pass;
        row.notes = notes.join("; ");
        report.rows.push(row);
    }
    Ok(report)
}

/// The dimension tables for a config (dispatching on the scalar field).
pub fn run_tables(cfg: &JobConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match cfg.scalars {
        ScalarKind::Rational => run_tables_in(cfg, &build_ring::<Rat>(cfg)?),
        ScalarKind::Padic => run_tables_in(cfg, &build_ring::<PAdic>(cfg)?),
    }
}

// ---------------------------------------------------------------------------
// Dictionary suite
// ---------------------------------------------------------------------------

fn rng_for(cfg: &JobConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(salt))
}

fn random_coeffs<K: Scalar>(ring: &Arc<CoeffRing<K>>, rng: &mut impl Rng, len: usize) -> Vec<CoeffElement<K>> {
    (0..len).map(|_| ring.int(rng.gen_range(-9..=9))).collect()
}

fn laurent<K: Scalar>(ring: &Arc<CoeffRing<K>>, offset: i64, coeffs: Vec<CoeffElement<K>>) -> LaurentPoly<CoeffElement<K>> {
    LaurentPoly {
        offset,
        poly: Poly::new(coeffs, &ring.zero()),
    }
    .normalized()
}

fn scalar_defect<K: Scalar>(a: &CoeffElement<K>, b: &CoeffElement<K>) -> Val {
    (a.clone() - b.clone()).val()
}

fn fn_defect<K: Scalar>(
    a: &crate::dictionary::LocPolyFn<CoeffElement<K>>,
    b: &crate::dictionary::LocPolyFn<CoeffElement<K>>,
) -> crate::Result<Val> {
    if a.same_function(b)? {
        return Ok(Val::Inf);
    }
    let d = a.sub(b)?;
    Ok(d.classes()
        .iter()
        .flat_map(|poly| poly.coeffs().iter().map(|c| c.val()))
        .fold(Val::Inf, Val::min))
}

/// Run one sampled check: `f` returns the defect of sample `i`.
fn sampled(
    suite: &str,
    name: &str,
    p: u32,
    samples: usize,
    threshold: i64,
    mut f: impl FnMut(usize) -> crate::Result<Val>,
) -> Row {
    let mut min = Val::Inf;
    for i in 0..samples {
        match f(i) {
            Ok(v) => min = min.min(v),
            Err(e) => return Row::failed(suite, name, p, &e),
        }
    }
    Row::check(suite, name, p).with_defect(samples, min, threshold)
}

/// Window used by the dictionary suite.
pub fn dictionary_window() -> Window {
    Window::new(-12, 24).expect("valid window")
}

/// Dictionary identities: `ψ∘φ = id`, `Σ Res_{i+pℤₚ} = id`, `φ_{∂f} = x·φ_f`,
/// `∂𝒜_μ = 𝒜_{xμ}` and the pairing identity on a 5×5 Dirac/monomial grid.
pub fn dictionary_suite<K: Scalar>(ring: &Arc<CoeffRing<K>>, samples: usize, seed: u64) -> Vec<Row> {
    const S: &str = "dictionary";
    let p = ring.p();
    let cap = dictionary_window();
    let threshold = ring.precision() as i64 - GUARD_DIGITS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();

    // ψ∘φ on power series whose Frobenius image stays inside the window.
    let max_deg = (cap.hi / p as i64) as usize;
    rows.push(sampled(S, "psi(phi(f)) = f", p, samples, threshold, |_| {
        let f = RobbaElement::from_laurent(p, cap, &laurent(ring, 0, random_coeffs(ring, &mut rng, max_deg + 1)))?;
        Ok(f.phi()?.psi()?.defect(&f))
    }));

    rows.push(sampled(S, "sum_i Res_{i+pZp} f = f", p, samples, threshold, |_| {
        let lo = -(rng.gen_range(1..=4) as i64);
        let f = RobbaElement::from_laurent(p, cap, &laurent(ring, lo, random_coeffs(ring, &mut rng, 8)))?;
        let mut acc = RobbaElement::zero(p, cap, &ring.zero());
        for i in 0..p as i64 {
            acc = acc.add(&f.restrict(i, 1)?)?;
        }
        Ok(acc.defect(&f))
    }));

    rows.push(sampled(S, "colmez(partial f) = x * colmez(f)", p, samples, threshold, |_| {
        let lo = -(rng.gen_range(1..=5) as i64);
        let f = RobbaElement::from_laurent(p, cap, &laurent(ring, lo, random_coeffs(ring, &mut rng, 9)))?;
        let lhs = colmez(&f.partial()?, 7)?;
        let rhs = colmez(&f, 6)?.mul_x();
        fn_defect(&lhs, &rhs)
    }));

    rows.push(sampled(S, "partial(amice(mu)) = amice(x mu)", p, samples, threshold, |_| {
        let len = rng.gen_range(2..12);
        let truncated = rng.gen_bool(0.5);
        let mu = Distribution::new(random_coeffs(ring, &mut rng, len), truncated)?;
        let lhs = mu.mul_x().amice(p, cap)?;
        let rhs = mu.amice(p, cap)?.partial()?;
        Ok(lhs.defect(&rhs))
    }));

    let points = [rat(0, 1), rat(2, 1), rat(1, 3), rat(-1, 2), rat(-7, 1)];
    let mut cells = 0;
    let mut min = Val::Inf;
    let mut error = None;
    for a in &points {
        let mu = Distribution::dirac(a, 12, &ring.zero());
        for k in 1..=5i64 {
            cells += 1;
            let res = RobbaElement::monomial(p, cap, ring.one(), -k)
                .and_then(|f| Ok(scalar_defect(&pair(&mu, &f)?, &pair_via_functions(&mu, &f, 5)?)));
            match res {
                Ok(v) => min = min.min(v),
                Err(e) => error = Some(e),
            }
        }
    }
    rows.push(match error {
        Some(e) => Row::failed(S, "pairing {mu, f} = integral of colmez(f) against mu (5x5 grid)", p, &e),
        None => Row::check(S, "pairing {mu, f} = integral of colmez(f) against mu (5x5 grid)", p)
            .with_defect(cells, min, threshold),
    });
    rows
}

// ---------------------------------------------------------------------------
// Twists suite
// ---------------------------------------------------------------------------

/// A random unit-supported element `Σ c tᵏ (1+T)^a` with `a ∈ ℤ_{(p)}^×`.
pub fn random_psi_zero<K: Scalar>(
    ring: &Arc<CoeffRing<K>>,
    rng: &mut impl Rng,
    terms: usize,
) -> crate::Result<PsiZeroElement<CoeffElement<K>>> {
    let p = ring.p() as i64;
    let mut acc = ExpPoly::zero(ring.p(), &ring.zero());
    for _ in 0..terms {
        let num = loop {
            let n = rng.gen_range(-40i64..=40);
            if n.rem_euclid(p) != 0 {
                break n;
            }
        };
        let den = [1i64, 2, 3, 7][rng.gen_range(0..4)];
        let c = ring.int(rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 });
        acc = acc.add(&ExpPoly::monomial(ring.p(), c, rng.gen_range(0..=3), rat(num, den))?);
    }
    PsiZeroElement::new(acc, 2)
}

/// Twist and involution identities on random unit-supported elements, for
/// every configured pair. With `break_iota` the series `ι` is negated, which
/// the closed-form comparison must detect.
pub fn twists_suite<K: Scalar>(
    ring: &Arc<CoeffRing<K>>,
    pairs: &[(PairSpec, Character<K>, Character<K>)],
    samples: usize,
    seed: u64,
    break_iota: bool,
) -> Vec<Row> {
    const S: &str = "twists";
    let p = ring.p();
    let threshold = ring.precision() as i64 - GUARD_DIGITS;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let draw = |rng: &mut ChaCha8Rng| random_psi_zero(ring, rng, 4);

    for k in 0..=3i64 {
        let name = format!("m_(x^{k}) = partial^{k}");
        rows.push(sampled(S, &name, p, samples, threshold, |_| {
            let f = draw(&mut rng)?;
            let got = m_delta(&Character::x_power(ring, k), &f, None)?;
            let mut expected = f.element().clone();
            for _ in 0..k {
                expected = expected.partial();
            }
            Ok(got.element().defect(&expected).min(got.accuracy()))
        }));
    }
    rows.push(sampled(S, "w_* w_* = id", p, samples, threshold, |_| {
        let f = draw(&mut rng)?;
        Ok(f.w_star()?.w_star()?.defect(&f))
    }));
    rows.push(sampled(S, "partial w_* partial = w_*", p, samples, threshold, |_| {
        let f = draw(&mut rng)?;
        Ok(f.partial().w_star()?.partial().defect(&f.w_star()?))
    }));
    rows.push(sampled(S, "nabla w_* = -w_* nabla", p, samples, threshold, |_| {
        let f = draw(&mut rng)?;
        Ok(f.w_star()?.nabla().defect(&f.nabla().w_star()?.scale(&ring.int(-1))))
    }));
    rows.push(sampled(S, "w_* Res_{b+p^n} = Res_{b^-1+p^n} w_*", p, samples, threshold, |_| {
        let f = draw(&mut rng)?;
        let n = rng.gen_range(1..=2u32);
        let modulus = (p as i64).pow(n);
        let b = loop {
            let b = rng.gen_range(1..modulus);
            if b % p as i64 != 0 {
                break b;
            }
        };
        let binv = mod_inverse(&BigInt::from(b), &BigInt::from(modulus))
            .and_then(|x| i64::try_from(x).ok())
            .ok_or_else(|| Error::InvalidArgument(format!("{b} is not invertible mod {modulus}")))?;
        Ok(f.restrict(b, n).w_star()?.defect(&f.w_star()?.restrict(binv, n)))
    }));
    for k in -2..=3i64 {
        let name = format!("m_(x^{k}) w_* = w_* m_(x^{})", -k);
        rows.push(sampled(S, &name, p, samples, threshold, |_| {
            let f = draw(&mut rng)?;
            let d = Character::x_power(ring, k);
            let lhs = m_delta(&d, &f.w_star()?, None)?;
            let rhs = m_delta(&d.inv(), &f, None)?.w_star()?;
            Ok(lhs.defect(&rhs))
        }));
    }
    let sign = if break_iota { ring.int(-1) } else { ring.one() };
    for (pair, d1, d2) in pairs {
        let series = |f: &PsiZeroElement<CoeffElement<K>>| iota(d1, d2, f, None).map(|g| g.scale(&sign));
        let delta_inv = crate::twists::pair_delta(d1, d2).inv();
        let n0 = default_level(&delta_inv);
        let row = sampled(S, "m_delta independent of the level", p, samples, threshold, |_| {
            let f = draw(&mut rng)?;
            Ok(m_delta(&delta_inv, &f, Some(n0))?.defect(&m_delta(&delta_inv, &f, Some(n0 + 1))?))
        });
        rows.push(row.with_pair(pair));
        let row = sampled(S, "iota iota = id", p, samples, threshold, |_| {
            let f = draw(&mut rng)?;
            Ok(series(&series(&f)?)?.defect(&f))
        });
        rows.push(row.with_pair(pair));
        let row = sampled(S, "iota (series) = iota (closed form)", p, samples, threshold, |_| {
            let f = draw(&mut rng)?;
            Ok(series(&f)?.defect(&iota_closed_form(d1, d2, &f)?))
        });
        rows.push(row.with_pair(pair));
    }
    rows
}

// ---------------------------------------------------------------------------
// Sheaf suite
// ---------------------------------------------------------------------------

/// Relation fuzzing of `Δ ⊠ P¹` for every configured pair: the standard
/// relations, the `diag(p,1)`/ψ bullet and G-invariance of the pairing.
///
/// The gluing involution is evaluated through the closed form of `m_{ε⁻¹}`,
/// which is exact whenever `ε` can be evaluated exactly; the `m_{ε⁻¹}` series
/// is compared against it by [`twists_suite`].
pub fn sheaf_suite<K: Scalar>(
    ring: &Arc<CoeffRing<K>>,
    pairs: &[(PairSpec, Character<K>, Character<K>)],
    samples: usize,
    pairing_samples: usize,
    seed: u64,
    break_iota: bool,
) -> Vec<Row> {
    const S: &str = "sheaf";
    let p = ring.p();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for (pair, d1, d2) in pairs {
        let sheaf = if break_iota {
            let honest = P1Sheaf::distributions_closed_form(d1, d2);
            let minus = ring.int(-1);
            P1Sheaf::distributions_with(d1, d2, move |z: &Dist<K>| Ok(honest.iota(z)?.scale(&minus)))
        } else {
            P1Sheaf::distributions_closed_form(d1, d2)
        };
        let threshold = sheaf.threshold();
        for rel in standard_relations(p) {
            let row = match check_relation(&sheaf, &rel, samples, &mut rng, |s, g| s.random_element(g)) {
                Ok(rep) => Row::from_relation(S, p, &rep, threshold),
                Err(e) => Row::failed(S, rel.name(), p, &e),
            };
            rows.push(row.with_pair(pair));
        }
        let row = match check_diag_p_psi(&sheaf, samples, &mut rng, |s, g| s.random_element(g)) {
            Ok(rep) => Row::from_relation(S, p, &rep, threshold),
            Err(e) => Row::failed(S, "Res_Zp(w·diag(p,1)·z) = omega(p)·psi(z2)", p, &e),
        };
        rows.push(row.with_pair(pair));
        let dual = P1Sheaf::dual_functions(d1, d2);
        let row = match check_pairing_invariance(&sheaf, &dual, &sample_generators(p), pairing_samples, &mut rng) {
            Ok(rep) => Row::from_relation(S, p, &rep, threshold),
            Err(e) => Row::failed(S, "pairing invariance", p, &e),
        };
        rows.push(row.with_pair(pair));
    }
    rows
}

// ---------------------------------------------------------------------------
// Complexes suite
// ---------------------------------------------------------------------------

/// Complex-level consistency on `Pol_{≤N}*` for every pair: `d² = 0`, Euler
/// characteristic zero, Lie invariants equal to Koszul, and — over dual
/// numbers — the Tor bookkeeping against the reduction mod `ε`.
pub fn complexes_suite<K: Scalar>(
    ring: &Arc<CoeffRing<K>>,
    pairs: &[(PairSpec, Character<K>, Character<K>)],
    n: usize,
) -> Vec<Row> {
    const S: &str = "complexes";
    let p = ring.p();
    let mut rows = Vec::new();
    for (pair, d1, d2) in pairs {
        let run = || -> crate::Result<Vec<Row>> {
            let m = PolDualModule::new(n, d1, d2)?;
            let c = build_koszul(m.operators())?;
            let mut out = Vec::new();
            let mut row = Row::check(S, "koszul d^2 = 0", p);
            row.pass = c.boundaries().windows(2).all(|w| w[1].mul(&w[0]).is_zero());
            out.push(row);
            let mut row = Row::check(S, "koszul Euler characteristic = 0", p);
            row.pass = c.euler_characteristic() == 0;
            out.push(row);
            let h = cohomology(&c)?;
            let kos: Vec<usize> = h.iter().map(|x| x.dim()).collect();
            let lie: Vec<usize> = ptilde_invariants(m.operators(), 1)?.iter().map(|x| x.dim()).collect();
            let mut row = Row::check(S, "Lie invariants = Koszul", p);
            row.dims = Some(lie.clone());
            row.expected = Some(kos);
            row.pass = row.dims == row.expected;
            out.push(row);
            if ring.nilpotence().is_some() {
                let red = cohomology_dims(&c.reduce()?)?;
                let book: Vec<usize> = (0..h.len())
                    .map(|i| {
                        let next = h.get(i + 1).map_or(0, |x| x.structure.torsion_count());
                        h[i].structure.free_rank + h[i].structure.torsion_count() + next
                    })
                    .collect();
                let mut row = Row::check(S, "Tor bookkeeping: dim H(M/eps) = free + tors + next tors", p);
                row.dims = Some(red);
                row.expected = Some(book);
                row.torsion = Some(h.iter().map(|x| x.structure.torsion_count()).collect());
                row.pass = row.dims == row.expected;
                out.push(row);
            }
            Ok(out)
        };
        match run() {
            Ok(out) => rows.extend(out.into_iter().map(|r| r.with_pair(pair))),
            Err(e) => rows.push(Row::failed(S, "complexes", p, &e).with_pair(pair)),
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Finite-model building blocks used by the acceptance harness
// ---------------------------------------------------------------------------

/// Kernel and cokernel of `1 − αφ` on `Pol_{≤N}*(1, 1)`, where `φ(tⁱ) = pⁱtⁱ`,
/// against the termwise prediction `⊕ Ann(1 − αpⁱ)`, `⊕ A/(1 − αpⁱ)`.
/// Returns `(computed kernel, predicted kernel, computed cokernel, predicted cokernel)`.
pub fn one_minus_alpha_phi<K: Scalar>(
    ring: &Arc<CoeffRing<K>>,
    n: usize,
    alpha: &CoeffElement<K>,
) -> crate::Result<(ModuleStructure, ModuleStructure, ModuleStructure, ModuleStructure)> {
    let triv = Character::trivial(ring);
    let m = PolDualModule::new(n, &triv, &triv)?;
    let ops = m.operators();
    let op = ops.identity().sub(&ops.phi.scale(alpha));
    let ker = kernel_module(&op)?.structure()?;
    let coker = module_quotient(&op)?.structure()?;
    let nil = ring.nilpotence();
    let mut pk = ModuleStructure::zero(nil);
    let mut pc = ModuleStructure::zero(nil);
    let pp = ring.int(ring.p() as i64);
    for i in 0..=n {
        let g = ring.one() - alpha.clone() * pp.pow_i(i as i64)?;
        let one = Matrix::from_rows(vec![vec![g]], &ring.zero());
        pk = pk.direct_sum(&kernel_module(&one)?.structure()?);
        pc = pc.direct_sum(&module_quotient(&one)?.structure()?);
    }
    Ok((ker, pk, coker, pc))
}

/// Indices `i ≤ i_max` at which the H² presentation `A/(1 − αp^{−i}, 1 − βa^{−i})` is nonzero.
pub fn h2_support<K: Scalar>(delta: &Character<K>, a: i64, i_max: i64) -> crate::Result<Vec<i64>> {
    Ok(h2_presentation(delta, a, i_max)?
        .into_iter()
        .filter(|(_, s)| s.base_dim > 0)
        .map(|(i, _)| i)
        .collect())
}

/// Outcome of the extension/cocycle comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExtensionTally {
    /// Cochains tested.
    pub tested: usize,
    /// Split although the class is nonzero.
    pub false_split: usize,
    /// Not split although the class is zero.
    pub false_nonsplit: usize,
    /// `is_split` disagreeing with the independent linear solve.
    pub solver_disagreements: usize,
}

/// Build extensions from `cocycles` random cocycles with nonzero class and
/// `coboundaries` random coboundaries on `Pol_{≤N}*(δ₁, δ₂)`, comparing the
/// splitting of the extension with the construction and with an independent
/// linear solve on the base.
pub fn extension_trials<K: Scalar>(
    n: usize,
    d1: &Character<K>,
    d2: &Character<K>,
    cocycles: usize,
    coboundaries: usize,
    rng: &mut impl Rng,
) -> crate::Result<ExtensionTally> {
    let ring = Arc::clone(d1.ring());
    let m = PolDualModule::new(n, d1, d2)?;
    let ops = m.operators();
    let dim = ops.dim();
    let one = ops.identity();
    let h1 = &cohomology(&build_aplus(ops)?)?[1];
    if h1.representatives.is_empty() && cocycles > 0 {
        return Err(Error::InvalidArgument("the model has no nonzero H^1 classes".into()));
    }
    let mut tally = ExtensionTally {
        tested: 0,
        false_split: 0,
        false_nonsplit: 0,
        solver_disagreements: 0,
    };
    for trial in 0..cocycles + coboundaries {
        let is_class = trial < cocycles;
        let d: Vec<_> = random_coeffs(&ring, rng, dim);
        let mut c_phi = ops.phi.sub(&one).apply(&d);
        let mut c_gamma = ops.gamma.sub(&one).apply(&d);
        if is_class {
            // A nonzero combination of H¹ representatives; the complex
            // stores (y, z) = (−c_φ, c_γ).
            let coeffs: Vec<i64> = loop {
                let v: Vec<i64> = h1.representatives.iter().map(|_| rng.gen_range(-5..=5)).collect();
                if v.iter().any(|&x| x != 0) {
                    break v;
                }
            };
            for (rep, &c) in h1.representatives.iter().zip(&coeffs) {
                let rep = crate::linalg::unrealify_vec(rep, &ring)?;
                for j in 0..dim {
                    c_phi[j] = c_phi[j].clone() - rep[j].clone() * ring.int(c);
                    c_gamma[j] = c_gamma[j].clone() + rep[dim + j].clone() * ring.int(c);
                }
            }
        }
        let ext = build_extension(ops, &c_phi, &c_gamma)?;
        let split = ext.is_split()?;
        let solvable = coboundary_witness(&ops.phi, &ops.gamma, &c_phi, &c_gamma)?.is_some();
        tally.tested += 1;
        if split != solvable {
            tally.solver_disagreements += 1;
        }
        if is_class && split {
            tally.false_split += 1;
        }
        if !is_class && !split {
            tally.false_nonsplit += 1;
        }
    }
    Ok(tally)
}

// ---------------------------------------------------------------------------
// Checks, sheaf fuzzing, dumps
// ---------------------------------------------------------------------------

fn run_checks_in<K: Scalar>(cfg: &JobConfig, ring: &Arc<CoeffRing<K>>, suites: &[Suite]) -> Result<Report, CliError> {
    let pairs = build_pairs(cfg, ring)?;
    let mut report = Report::default();
    for suite in suites {
        let seed = rng_for(cfg, *suite as u64).gen();
        let rows = match suite {
            Suite::Dictionary => dictionary_suite(ring, cfg.samples, seed),
            Suite::Twists => twists_suite(ring, &pairs, cfg.samples, seed, cfg.break_iota),
            Suite::Sheaf => sheaf_suite(ring, &pairs, cfg.samples, cfg.samples, seed, cfg.break_iota),
            Suite::Complexes => complexes_suite(ring, &pairs, cfg.module.n),
        };
        debug_assert!(rows.iter().all(|r| r.suite == suite.name()));
        report.rows.extend(rows);
    }
    Ok(report)
}

/// Run the configured property suites.
pub fn run_checks(cfg: &JobConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    let suites = cfg.effective_suites();
    match cfg.scalars {
        ScalarKind::Rational => run_checks_in(cfg, &build_ring::<Rat>(cfg)?, &suites),
        ScalarKind::Padic => run_checks_in(cfg, &build_ring::<PAdic>(cfg)?, &suites),
    }
}

/// Run only the sheaf relation fuzzer.
pub fn run_sheaf_fuzz(cfg: &JobConfig) -> Result<Report, CliError> {
    cfg.validate()?;
    match cfg.scalars {
        ScalarKind::Rational => run_checks_in(cfg, &build_ring::<Rat>(cfg)?, &[Suite::Sheaf]),
        ScalarKind::Padic => run_checks_in(cfg, &build_ring::<PAdic>(cfg)?, &[Suite::Sheaf]),
    }
}

/// Which finite model `dump-module` writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// `Pol_{≤N}*(δ₁, δ₂)`.
    Pol,
    /// The locally polynomial model of level `h` and degree `D`.
    Locpoly,
}

fn dump_in<K: Scalar + std::fmt::Display>(
    cfg: &JobConfig,
    ring: &Arc<CoeffRing<K>>,
    kind: ModelKind,
) -> Result<Vec<ModuleDump>, CliError> {
    let mut out = Vec::new();
    for (pair, d1, d2) in build_pairs(cfg, ring)? {
        let context = format!("module d1={}, d2={}", pair.d1.label(), pair.d2.label());
        let dump = match kind {
            ModelKind::Pol => PolDualModule::new(cfg.module.n, &d1, &d2)
                .map(|m| m.operators().dump("pol_dual", |c| c.to_string())),
            ModelKind::Locpoly => LocPolyModule::new(cfg.module.h, cfg.module.d, 1, &d1, &d2)
                .map(|m| m.operators().dump("loc_poly", |c| c.to_string())),
        }
        .map_err(CliError::compute(context))?;
        out.push(dump);
    }
    Ok(out)
}

/// Matrices of the finite models for every configured pair.
pub fn run_dump(cfg: &JobConfig, kind: ModelKind) -> Result<Vec<ModuleDump>, CliError> {
    cfg.validate()?;
    match cfg.scalars {
        ScalarKind::Rational => dump_in(cfg, &build_ring::<Rat>(cfg)?, kind),
        ScalarKind::Padic => dump_in(cfg, &build_ring::<PAdic>(cfg)?, kind),
    }
}

// ---------------------------------------------------------------------------
// Command line
// ---------------------------------------------------------------------------

/// Command-line arguments.
#[derive(Debug, Parser)]
#[command(name = "phigamma", version, about = "Cohomology tables and property suites for rank-one (phi, Gamma)-modules")]
pub struct Cli {
    /// JSON job config.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the prime.
    #[arg(long, global = true)]
    pub p: Option<u32>,
    /// Override the working precision.
    #[arg(long, global = true)]
    pub precision: Option<u32>,
    /// Override the PRNG seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write JSON lines here instead of standard output.
    #[arg(long, global = true)]
    pub json_out: Option<PathBuf>,
    /// What to run.
    #[command(subcommand)]
    pub command: Command,
}

/// Subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Koszul and Lie cohomology dimensions against the expected table.
    Tables,
    /// Property suites (dictionary, twists, sheaf, complexes).
    Checks {
        /// Restrict to these suites.
        #[arg(long, value_enum)]
        suite: Vec<Suite>,
        /// Negative control: negate the sign of the series involution.
        #[arg(long)]
        break_iota: bool,
    },
    /// Relation fuzzing on the P¹-sheaf.
    SheafFuzz {
        /// Samples per relation.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Matrices of the finite models as JSON.
    DumpModule {
        /// Which model.
        #[arg(long, value_enum, default_value = "pol")]
        kind: ModelKind,
    },
}

/// Resolve the job config from a config file and command-line overrides.
pub fn resolve_config(cli: &Cli) -> Result<JobConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            JobConfig::from_json(&text)?
        }
        None => JobConfig::default(),
    };
    if let Some(p) = cli.p {
        cfg.p = p;
    }
    if let Some(prec) = cli.precision {
        cfg.precision = prec;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.json_out {
        cfg.output = Some(out.clone());
    }
    match &cli.command {
        Command::Checks { suite, break_iota } => {
            if !suite.is_empty() {
                cfg.suites = suite.clone();
            }
            cfg.break_iota |= *break_iota;
        }
        Command::SheafFuzz { samples: Some(n) } => cfg.samples = *n,
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(cfg: &JobConfig, jsonl: &str, summary: &str) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let written = match &cfg.output {
        Some(path) => {
            std::fs::write(path, jsonl)?;
            out.write_all(summary.as_bytes())
        }
        None => out.write_all(jsonl.as_bytes()).and_then(|_| out.write_all(summary.as_bytes())),
    };
    match written.and_then(|_| out.flush()) {
        // A closed pipe (e.g. `| head`) is not a failure of the run.
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

/// Run a parsed command line; returns whether everything passed.
pub fn run(cli: &Cli) -> Result<bool, CliError> {
    let cfg = resolve_config(cli)?;
    let report = match &cli.command {
        Command::Tables => run_tables(&cfg)?,
        Command::Checks { .. } => run_checks(&cfg)?,
        Command::SheafFuzz { .. } => run_sheaf_fuzz(&cfg)?,
        Command::DumpModule { kind } => {
            let dumps = run_dump(&cfg, *kind)?;
            let jsonl: String = dumps
                .iter()
                .map(|d| serde_json::to_string(d).expect("dumps serialize") + "\n")
                .collect();
            emit(&cfg, &jsonl, &format!("{} module(s) dumped\n", dumps.len()))?;
            return Ok(true);
        }
    };
    emit(&cfg, &report.to_jsonl(), &report.summary())?;
    Ok(report.passed())
}

/// Entry point: parse `args`, run, and return the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
