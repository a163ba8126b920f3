//! Construction of AP-destroying permutations.
//!
//! Every route starts from `f(0) = 1, f(1) = 0, f(x) = 1/x`, which leaves
//! `{-1, 0, 1}` alive in characteristic 3 and `(0, 3/2, 3)`, `(1/3, 2/3, 1)`
//! otherwise. Characteristic 3 swaps the images of `-1` and some `y`;
//! larger characteristics swap `3 <-> y` and then `1/3 <-> z`. Small fields
//! where no swap pair works are finished by a transposition hill climb.
//!
//! Candidates are scored with [`ApIndex::swap_delta`] and the quadratic
//! character conditions are optional prefilters. Acceptance always rests on
//! a full survivor scan.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::apcheck::{self, ApIndex, CanonicalAp};
use crate::charsum::{CharSumError, CharacterSums};
use crate::gf::{is_prime, FieldElem, FieldSpec, GfError};
use crate::perm::{PermError, Permutation};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum ConstructError {
    #[error("no AP-destroying permutation of (Z/{p}Z)^{k} exists")]
    Nonexistent { p: u32, k: u32 },
    #[error("{0}")]
    Precondition(&'static str),
    #[error("no admissible y in {0}")]
    NoAdmissibleY(String),
    #[error("candidate scan exhausted without a witness")]
    Exhausted,
    #[error("repair budget exhausted; best survivor count {best}")]
    RepairExhausted { best: u64 },
    #[error("invalid construction trace: {0}")]
    InvalidTrace(String),
    #[error("internal error: {0} (this is a bug)")]
    Internal(String),
    #[error(transparent)]
    Field(#[from] GfError),
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error(transparent)]
    CharSum(#[from] CharSumError),
}

/// Existence of an AP-destroying permutation of `(Z/pZ)^k`: `p` odd and
/// `(p, k)` not one of `(3, 1)`, `(5, 1)`, `(7, 1)`.
pub fn exists_ap_destroying(p: u32, k: u32) -> Result<bool, ConstructError> {
    if !is_prime(u64::from(p)) {
        return Err(GfError::NotPrime(u64::from(p)).into());
    }
    if k == 0 {
        return Err(GfError::ZeroDegree.into());
    }
    Ok(p != 2 && !(k == 1 && matches!(p, 3 | 5 | 7)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    P3Swap,
    TwoSwap,
    TwoSwapPlusRepair,
    Exhaustive,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::P3Swap => "p3_swap",
            Construction::TwoSwap => "two_swap",
            Construction::TwoSwapPlusRepair => "two_swap_plus_repair",
            Construction::Exhaustive => "exhaustive",
        }
    }
}

/// How a certificate's permutation was obtained from `f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub construction: Construction,
    pub y: Option<FieldElem>,
    pub z: Option<FieldElem>,
    pub repair_swaps: Vec<(FieldElem, FieldElem)>,
    pub seed: Option<u64>,
}

/// SHA-256 over the decimal images joined by commas, lowercase hex.
pub fn content_hash(images: &[u32]) -> String {
    let mut hasher = Sha256::new();
    for (i, v) in images.iter().enumerate() {
        if i > 0 {
            hasher.update(b",");
        }
        hasher.update(v.to_string().as_bytes());
    }
    hex::encode(hasher.finalize())
}

/// Elements named by the construction for `p > 3`.
#[derive(Clone, Copy, Debug)]
struct Landmarks {
    third: FieldElem,
    two_thirds: FieldElem,
    three_halves: FieldElem,
    three: FieldElem,
}

impl Landmarks {
    fn new(field: &FieldSpec) -> Result<Self, GfError> {
        Ok(Landmarks {
            third: field.embed_rational(1, 3)?,
            two_thirds: field.embed_rational(2, 3)?,
            three_halves: field.embed_rational(3, 2)?,
            three: field.from_int(3),
        })
    }

    /// `{0, 1/3, 2/3, 1, 3/2, 3}`
    fn fixed(&self) -> [FieldElem; 6] {
        [FieldElem::ZERO, self.third, self.two_thirds, FieldElem::ONE, self.three_halves, self.three]
    }

    fn last_survivor(&self, field: &FieldSpec) -> CanonicalAp {
        CanonicalAp::new(field, self.two_thirds, self.third).expect("1/3 != 0")
    }
}

/// Rebuilds a permutation from its trace: `f`, then the construction swaps,
/// then each repair transposition in order.
pub fn replay(field: Arc<FieldSpec>, trace: &Trace) -> Result<Permutation, ConstructError> {
    let bad = |msg: &str| Err(ConstructError::InvalidTrace(msg.to_owned()));
    let char3 = field.p() == 3;
    match trace.construction {
        Construction::P3Swap if !char3 || trace.y.is_none() || trace.z.is_some() => {
            return bad("p3_swap needs p = 3 and exactly one witness y")
        }
        Construction::P3Swap if !trace.repair_swaps.is_empty() => return bad("p3_swap has no repair swaps"),
        Construction::TwoSwap if char3 || trace.y.is_none() || trace.z.is_none() => {
            return bad("two_swap needs p > 3 and witnesses y, z")
        }
        Construction::TwoSwap if !trace.repair_swaps.is_empty() => return bad("two_swap has no repair swaps"),
        Construction::TwoSwapPlusRepair if char3 => return bad("two_swap_plus_repair needs p > 3"),
        Construction::Exhaustive if trace.y.is_some() || trace.z.is_some() => {
            return bad("exhaustive traces carry only transpositions")
        }
        _ => {}
    }
    let q = u64::from(field.q());
    for x in trace.y.iter().chain(&trace.z).chain(trace.repair_swaps.iter().flat_map(|(a, b)| [a, b])) {
        field.elem(u64::from(x.enc())).map_err(|_| ConstructError::InvalidTrace(format!("element {x} >= q = {q}")))?;
    }
    let mut pi = Permutation::base_f(Arc::clone(&field));
    if char3 {
        if let Some(y) = trace.y {
            pi.swap_in_place(field.neg(FieldElem::ONE), y)?;
        }
    } else if trace.y.is_some() || trace.z.is_some() {
        let marks = Landmarks::new(&field)?;
        if let Some(y) = trace.y {
            pi.swap_in_place(marks.three, y)?;
        }
        if let Some(z) = trace.z {
            pi.swap_in_place(marks.third, z)?;
        }
    }
    for &(a, b) in &trace.repair_swaps {
        pi.swap_in_place(a, b)?;
    }
    Ok(pi)
}

/// A verified AP-destroying permutation with its construction trace.
#[derive(Clone, Debug)]
pub struct Certificate {
    pub field: Arc<FieldSpec>,
    pub perm: Permutation,
    pub trace: Trace,
    pub verified: bool,
    pub survivor_count: u64,
    pub content_hash: String,
}

impl Certificate {
    /// Runs the full survivor scan and refuses to emit anything that fails it.
    fn issue(perm: Permutation, trace: Trace) -> Result<Certificate, ConstructError> {
        let count = apcheck::survivors(&perm).count;
        if count != 0 {
            return Err(ConstructError::Internal(format!(
                "{} candidate accepted with {count} surviving APs",
                trace.construction.name()
            )));
        }
        Ok(Certificate {
            field: Arc::clone(perm.field()),
            content_hash: content_hash(perm.images()),
            perm,
            trace,
            verified: true,
            survivor_count: 0,
        })
    }

    pub fn record(&self) -> CertificateRecord {
        CertificateRecord {
            p: self.field.p(),
            k: self.field.k(),
            modulus: self.field.modulus().to_vec(),
            construction: self.trace.construction,
            y: self.trace.y.map(FieldElem::enc),
            z: self.trace.z.map(FieldElem::enc),
            repair_swaps: self.trace.repair_swaps.iter().map(|(a, b)| [a.enc(), b.enc()]).collect(),
            seed: self.trace.seed,
            images: self.perm.images().to_vec(),
            survivor_count: self.survivor_count,
            content_hash: self.content_hash.clone(),
            artifact_version: ARTIFACT_VERSION.to_owned(),
        }
    }
}

/// Certificate file format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub p: u32,
    pub k: u32,
    pub modulus: Vec<u32>,
    pub construction: Construction,
    pub y: Option<u32>,
    pub z: Option<u32>,
    pub repair_swaps: Vec<[u32; 2]>,
    pub seed: Option<u64>,
    pub images: Vec<u32>,
    pub survivor_count: u64,
    pub content_hash: String,
    pub artifact_version: String,
}

impl CertificateRecord {
    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn trace(&self) -> Trace {
        let elem = FieldElem::from_enc_unchecked;
        Trace {
            construction: self.construction,
            y: self.y.map(elem),
            z: self.z.map(elem),
            repair_swaps: self.repair_swaps.iter().map(|&[a, b]| (elem(a), elem(b))).collect(),
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairParams {
    /// Moves allowed per descent.
    pub max_steps: u64,
    pub restarts: u32,
    pub seed: u64,
}

impl Default for RepairParams {
    fn default() -> Self {
        RepairParams { max_steps: 10_000, restarts: 32, seed: 1 }
    }
}

#[derive(Clone, Debug, Default)]
pub struct ConstructOptions {
    pub modulus: Option<Vec<u32>>,
    /// Skip candidates that fail the quadratic-character conditions.
    pub chi_filter: bool,
    pub repair: RepairParams,
}

/// Whether all four `chi` conditions on the swap partner of `3` hold:
/// `chi((3-y)(3-9y)), chi(3(3-y)), chi((3-y)(27-y)), chi(-y(3-y))` are all `!= 1`.
/// The same shape governs `w = 1/z` for the second swap.
pub fn swap_partner_condition(sums: &CharacterSums, y: FieldElem) -> bool {
    let f = &**sums.field();
    let n = |v: i64| f.from_int(v);
    let t = f.sub(n(3), y);
    [f.mul(t, f.sub(n(3), f.mul(n(9), y))), f.mul(n(3), t), f.mul(t, f.sub(n(27), y)), f.mul(f.neg(y), t)]
        .iter()
        .all(|&a| sums.chi(a) != 1)
}

/// `(1 - chi(y+1)) (1 - chi(y(y+1))) > 0`.
pub fn p3_condition(sums: &CharacterSums, y: FieldElem) -> bool {
    let f = &**sums.field();
    let y1 = f.add(y, FieldElem::ONE);
    sums.chi(y1) != 1 && sums.chi(f.mul(y, y1)) != 1
}

/// Characteristic 3, `k >= 2`: swap the images of `-1` and the first
/// admissible `y`.
pub fn construct_p3(field: Arc<FieldSpec>) -> Result<Certificate, ConstructError> {
    if field.p() != 3 {
        return Err(ConstructError::Precondition("construct_p3 needs characteristic 3"));
    }
    let minus_one = field.neg(FieldElem::ONE);
    let sums = CharacterSums::new(Arc::clone(&field))?;
    let index = ApIndex::new(Arc::clone(&field));
    let base = Permutation::base_f(Arc::clone(&field));
    let base_count = index.survivor_count(&base) as i64;
    let mut candidates =
        field.elements().filter(|&y| y != FieldElem::ZERO && y != FieldElem::ONE && y != minus_one).peekable();
    if candidates.peek().is_none() {
        return Err(ConstructError::NoAdmissibleY(field.to_string()));
    }
    for y in candidates.filter(|&y| p3_condition(&sums, y)) {
        if base_count + index.swap_delta(&base, minus_one, y) == 0 {
            let perm = base.swap_images(minus_one, y)?;
            let trace =
                Trace { construction: Construction::P3Swap, y: Some(y), z: None, repair_swaps: vec![], seed: None };
            return Certificate::issue(perm, trace);
        }
    }
    Err(ConstructError::Internal(format!("no y passed in {field}, contradicting A_q > 0")))
}

/// The result of one swap search.
#[derive(Clone, Debug)]
pub struct SwapWitness {
    pub witness: FieldElem,
    pub perm: Permutation,
}

#[derive(Clone, Debug)]
struct Candidate {
    count: u64,
    y: FieldElem,
    z: Option<FieldElem>,
}

/// Shared state for the two-swap search over one field.
struct TwoSwapSearch {
    field: Arc<FieldSpec>,
    index: ApIndex,
    base: Permutation,
    base_count: u64,
    marks: Landmarks,
    sums: Option<CharacterSums>,
}

impl TwoSwapSearch {
    fn new(field: Arc<FieldSpec>, chi_filter: bool) -> Result<Self, ConstructError> {
        if field.p() <= 3 {
            return Err(ConstructError::Precondition("the two-swap search needs characteristic > 3"));
        }
        if field.q() <= 5 {
            return Err(ConstructError::Precondition("the two-swap search needs q > 5"));
        }
        let index = ApIndex::new(Arc::clone(&field));
        let base = Permutation::base_f(Arc::clone(&field));
        let base_count = index.survivor_count(&base);
        let sums = if chi_filter { Some(CharacterSums::new(Arc::clone(&field))?) } else { None };
        let marks = Landmarks::new(&field)?;
        Ok(TwoSwapSearch { field, index, base, base_count, marks, sums })
    }

    fn passes_filter(&self, w: FieldElem) -> bool {
        self.sums.as_ref().is_none_or(|s| swap_partner_condition(s, w))
    }

    /// Admissible `y` in increasing encoding, each with the survivor count
    /// of `f` after swapping `3 <-> y`.
    fn y_counts(&self) -> impl Iterator<Item = (FieldElem, u64)> + '_ {
        let fixed = self.marks.fixed();
        let three = self.marks.three;
        let local_three = self.index.containing(three);
        self.field.elements().filter(move |y| !fixed.contains(y) && self.passes_filter(*y)).map(move |y| {
            let mut local = local_three.clone();
            local.extend(self.index.containing_excluding(y, three));
            let count = self.base_count as i64 + self.index.swap_delta_over(&self.base, three, y, &local);
            (y, count as u64)
        })
    }

    fn first_y(&self) -> Option<FieldElem> {
        self.y_counts().find(|&(_, c)| c == 1).map(|(y, _)| y)
    }

    /// Scans `z` for a given `f' = f ∘ (3 y)` with `start` survivors; tracks
    /// the best candidate seen.
    fn scan_z(
        &self,
        y: FieldElem,
        f_prime: &Permutation,
        start: u64,
        best: &mut Option<Candidate>,
    ) -> Option<FieldElem> {
        let third = self.marks.third;
        let fixed = self.marks.fixed();
        let local_third = self.index.containing(third);
        for z in self.field.elements() {
            if fixed.contains(&z) || z == y {
                continue;
            }
            if self.sums.is_some() && !self.passes_filter(self.field.inv(z).expect("z != 0")) {
                continue;
            }
            let mut local = local_third.clone();
            local.extend(self.index.containing_excluding(z, third));
            let count = (start as i64 + self.index.swap_delta_over(f_prime, third, z, &local)) as u64;
            if best.as_ref().is_none_or(|b| count < b.count) {
                *best = Some(Candidate { count, y, z: Some(z) });
            }
            if count == 0 {
                return Some(z);
            }
        }
        None
    }
}

/// First `y` (increasing encoding, outside `{0, 1/3, 2/3, 1, 3/2, 3}`) for
/// which swapping the images of `3` and `y` under `f` leaves exactly the
/// AP `(1/3, 2/3, 1)`.
pub fn search_y(field: Arc<FieldSpec>, chi_filter: bool) -> Result<SwapWitness, ConstructError> {
    let search = TwoSwapSearch::new(field, chi_filter)?;
    let y = search.first_y().ok_or(ConstructError::Exhausted)?;
    let perm = search.base.swap_images(search.marks.three, y)?;
    let report = apcheck::survivors(&perm);
    if report.survivors != [search.marks.last_survivor(&search.field)] {
        return Err(ConstructError::Internal(format!("y = {y} scored 1 but full scan found {}", report.count)));
    }
    Ok(SwapWitness { witness: y, perm })
}

/// First `z` outside `{0, 1/3, 2/3, 1, 3/2, 3, y}` for which swapping the
/// images of `1/3` and `z` under `f_prime` leaves no surviving AP.
pub fn search_z(f_prime: &Permutation, y: FieldElem, chi_filter: bool) -> Result<SwapWitness, ConstructError> {
    let search = TwoSwapSearch::new(Arc::clone(f_prime.field()), chi_filter)?;
    if search.index.survivor_count(f_prime) != 1 {
        return Err(ConstructError::Precondition(
            "search_z needs a permutation with the single survivor (1/3, 2/3, 1)",
        ));
    }
    let z = search.scan_z(y, f_prime, 1, &mut None).ok_or(ConstructError::Exhausted)?;
    let perm = f_prime.swap_images(search.marks.third, z)?;
    if apcheck::survivors(&perm).count != 0 {
        return Err(ConstructError::Internal(format!("z = {z} scored 0 but full scan disagrees")));
    }
    Ok(SwapWitness { witness: z, perm })
}

#[derive(Clone, Debug)]
pub struct RepairOutcome {
    pub perm: Permutation,
    /// Transpositions applied to the start, perturbation included.
    pub swaps: Vec<(FieldElem, FieldElem)>,
    /// 0 for the unperturbed start.
    pub restart: u32,
    pub steps: u64,
    /// Survivor counts along the successful descent, starting value first.
    pub descent: Vec<u64>,
}

/// Steepest-descent over single transpositions. Each step moves to the
/// transposition with the strictly smallest resulting survivor count (ties
/// to the smallest `(a, b)`). A local minimum triggers a restart from `start`
/// perturbed by three seeded random transpositions.
pub fn repair(start: &Permutation, params: &RepairParams) -> Result<RepairOutcome, ConstructError> {
    let field = Arc::clone(start.field());
    if field.p() == 2 {
        return Err(ConstructError::Precondition("repair needs odd characteristic"));
    }
    let q = field.q();
    let index = ApIndex::new(Arc::clone(&field));
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best_seen = u64::MAX;
    for restart in 0..=params.restarts {
        let mut cur = start.clone();
        let mut swaps = Vec::new();
        if restart > 0 {
            for _ in 0..3 {
                let a = rng.gen_range(0..q);
                let mut b = rng.gen_range(0..q - 1);
                if b >= a {
                    b += 1;
                }
                let (a, b) = (FieldElem::from_enc_unchecked(a), FieldElem::from_enc_unchecked(b));
                cur.swap_in_place(a, b)?;
                swaps.push((a, b));
            }
        }
        let mut count = index.survivor_count(&cur);
        let mut descent = vec![count];
        let mut steps = 0u64;
        while count > 0 && steps < params.max_steps {
            let mut best: Option<(i64, FieldElem, FieldElem)> = None;
            for a in field.elements() {
                for b in field.elements().skip(a.enc() as usize + 1) {
                    let delta = index.swap_delta(&cur, a, b);
                    if best.is_none_or(|(d, _, _)| delta < d) {
                        best = Some((delta, a, b));
                    }
                }
            }
            match best {
                Some((delta, a, b)) if delta < 0 => {
                    cur.swap_in_place(a, b)?;
                    swaps.push((a, b));
                    count = (count as i64 + delta) as u64;
                    descent.push(count);
                    steps += 1;
                }
                _ => break,
            }
        }
        best_seen = best_seen.min(count);
        if count == 0 {
            return Ok(RepairOutcome { perm: cur, swaps, restart, steps, descent });
        }
    }
    Err(ConstructError::RepairExhausted { best: best_seen })
}

fn two_swap_construct(field: Arc<FieldSpec>, opts: &ConstructOptions) -> Result<Certificate, ConstructError> {
    let search = TwoSwapSearch::new(Arc::clone(&field), opts.chi_filter)?;
    let mut best: Option<Candidate> = None;
    for (y, count) in search.y_counts() {
        if best.as_ref().is_none_or(|b| count < b.count) {
            best = Some(Candidate { count, y, z: None });
        }
        if count != 1 {
            continue;
        }
        let f_prime = search.base.swap_images(search.marks.three, y)?;
        if let Some(z) = search.scan_z(y, &f_prime, 1, &mut best) {
            let perm = f_prime.swap_images(search.marks.third, z)?;
            let trace =
                Trace { construction: Construction::TwoSwap, y: Some(y), z: Some(z), repair_swaps: vec![], seed: None };
            return Certificate::issue(perm, trace);
        }
    }
    let best = best.ok_or(ConstructError::Exhausted)?;
    let mut start = search.base.swap_images(search.marks.three, best.y)?;
    if let Some(z) = best.z {
        start.swap_in_place(search.marks.third, z)?;
    }
    let fixed = repair(&start, &opts.repair)?;
    let trace = Trace {
        construction: Construction::TwoSwapPlusRepair,
        y: Some(best.y),
        z: best.z,
        repair_swaps: fixed.swaps,
        seed: Some(opts.repair.seed),
    };
    Certificate::issue(fixed.perm, trace)
}

/// Builds a verified certificate for `(Z/pZ)^k` realized as `GF(p^k)`.
pub fn full_construct(p: u32, k: u32, opts: &ConstructOptions) -> Result<Certificate, ConstructError> {
    if !exists_ap_destroying(p, k)? {
        return Err(ConstructError::Nonexistent { p, k });
    }
    let field = Arc::new(FieldSpec::new(p, k, opts.modulus.clone())?);
    if p == 3 {
        construct_p3(field)
    } else {
        two_swap_construct(field, opts)
    }
}

/// The moduli `x^2 + 2x + 2` for `GF(9)` and `x^3 + 2x + 1` for `GF(27)`.
pub fn explicit_modulus(p: u32, k: u32) -> Option<Vec<u32>> {
    match (p, k) {
        (3, 2) => Some(vec![2, 2, 1]),
        (3, 3) => Some(vec![1, 2, 0, 1]),
        _ => None,
    }
}
