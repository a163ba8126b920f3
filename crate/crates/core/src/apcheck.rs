//! Enumeration of nonconstant 3-term APs of `GF(q)` and the survivor check.
//!
//! An AP is stored as a midpoint/difference pair `(a, r)` standing for
//! `(a - r, a, a + r)`. It and its reversal `(a, -r)` are one canonical AP,
//! represented with `enc(r) <= enc(-r)`. In characteristic 3 every ordering
//! of a 3-term AP is again an AP, so there the canonical AP is the unordered
//! set, represented with the least-encoded term as midpoint.

use std::sync::Arc;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{FieldElem, FieldSpec};
use crate::perm::Permutation;

/// Largest order for which [`exhaustive_nonexistence`] enumerates `q!` tables.
pub const EXHAUSTIVE_MAX_Q: u32 = 8;

// Below this order the survivor scan stays on one thread.
const PARALLEL_MIN_Q: u32 = 192;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ApError {
    #[error("common difference must be nonzero")]
    ZeroDifference,
    #[error("exhaustive search needs q <= {EXHAUSTIVE_MAX_Q}, got {0}")]
    TooLarge(u32),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CanonicalAp {
    mid: FieldElem,
    diff: FieldElem,
}

impl CanonicalAp {
    pub fn new(field: &FieldSpec, mid: FieldElem, diff: FieldElem) -> Result<Self, ApError> {
        if diff == FieldElem::ZERO {
            return Err(ApError::ZeroDifference);
        }
        Ok(canonicalize(field, mid, diff))
    }

    pub fn mid(&self) -> FieldElem {
        self.mid
    }

    pub fn diff(&self) -> FieldElem {
        self.diff
    }

    /// `(a - r, a, a + r)`.
    pub fn terms(&self, field: &FieldSpec) -> [FieldElem; 3] {
        [field.sub(self.mid, self.diff), self.mid, field.add(self.mid, self.diff)]
    }

    pub fn contains(&self, field: &FieldSpec, x: FieldElem) -> bool {
        self.terms(field).contains(&x)
    }
}

#[inline]
fn canonical_diff(field: &FieldSpec, r: FieldElem) -> FieldElem {
    r.min(field.neg(r))
}

fn canonicalize(field: &FieldSpec, mid: FieldElem, diff: FieldElem) -> CanonicalAp {
    let diff = canonical_diff(field, diff);
    if field.p() == 3 {
        let [lo, m, hi] = [field.sub(mid, diff), mid, field.add(mid, diff)];
        CanonicalAp { mid: lo.min(m).min(hi), diff }
    } else {
        CanonicalAp { mid, diff }
    }
}

/// Survival rule on the image triple `(x, y, z)` of `(a - r, a, a + r)`.
#[inline]
fn images_form_ap(field: &FieldSpec, x: FieldElem, y: FieldElem, z: FieldElem) -> bool {
    if field.p() == 3 {
        // Distinct x, y, z in characteristic 3 are an AP in some order iff
        // they sum to zero.
        field.add(field.add(x, y), z) == FieldElem::ZERO
    } else {
        field.add(x, z) == field.add(y, y)
    }
}

/// Whether the raw triple `(a - r, a, a + r)` survives `pi`. Accepts any
/// `r != 0`, canonical or not.
pub fn triple_survives(pi: &Permutation, a: FieldElem, r: FieldElem) -> bool {
    let field = pi.field();
    let x = pi.apply(field.sub(a, r));
    let y = pi.apply(a);
    let z = pi.apply(field.add(a, r));
    images_form_ap(field, x, y, z)
}

pub fn ap_survives(pi: &Permutation, ap: &CanonicalAp) -> bool {
    triple_survives(pi, ap.mid, ap.diff)
}

/// Canonical APs not destroyed by a permutation, sorted by `(enc(a), enc(r))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurvivorReport {
    pub field: Arc<FieldSpec>,
    pub survivors: Vec<CanonicalAp>,
    pub count: u64,
}

/// Wire form: `{count, triples: [[enc(a-r), enc(a), enc(a+r)], ...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SurvivorRecord {
    pub count: u64,
    pub triples: Vec<[u32; 3]>,
}

impl SurvivorReport {
    pub fn record(&self) -> SurvivorRecord {
        SurvivorRecord {
            count: self.count,
            triples: self.survivors.iter().map(|ap| ap.terms(&self.field).map(FieldElem::enc)).collect(),
        }
    }
}

/// Per-field AP tables shared by the full scan and the swap-delta evaluator.
#[derive(Clone, Debug)]
pub struct ApIndex {
    field: Arc<FieldSpec>,
    diffs: Vec<FieldElem>,
}

impl ApIndex {
    pub fn new(field: Arc<FieldSpec>) -> Self {
        let diffs = field.elements().skip(1).filter(|&r| canonical_diff(&field, r) == r).collect();
        ApIndex { field, diffs }
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    /// Number of canonical APs: `q(q-1)/2` for `p > 3`, `q(q-1)/6` for
    /// `p = 3`, `q(q-1)` for `p = 2` where `r = -r`.
    pub fn total(&self) -> u64 {
        let q = u64::from(self.field.q());
        match self.field.p() {
            2 => q * (q - 1),
            3 => q * (q - 1) / 6,
            _ => q * (q - 1) / 2,
        }
    }

    fn aps_with_mid(&self, a: FieldElem) -> impl Iterator<Item = CanonicalAp> + '_ {
        let field = &*self.field;
        let char3 = field.p() == 3;
        self.diffs.iter().filter_map(move |&r| {
            if char3 && (field.sub(a, r) < a || field.add(a, r) < a) {
                None
            } else {
                Some(CanonicalAp { mid: a, diff: r })
            }
        })
    }

    /// Every canonical AP in sorted order.
    pub fn iter(&self) -> impl Iterator<Item = CanonicalAp> + '_ {
        self.field.elements().flat_map(move |a| self.aps_with_mid(a))
    }

    fn count_with_mid(&self, pi: &Permutation, a: FieldElem) -> u64 {
        self.aps_with_mid(a).filter(|ap| ap_survives(pi, ap)).count() as u64
    }

    pub fn survivor_count(&self, pi: &Permutation) -> u64 {
        debug_assert!(**pi.field() == *self.field);
        if self.field.q() < PARALLEL_MIN_Q {
            self.field.elements().map(|a| self.count_with_mid(pi, a)).sum()
        } else {
            (0..self.field.q()).into_par_iter().map(|a| self.count_with_mid(pi, FieldElem::from_enc_unchecked(a))).sum()
        }
    }

    pub fn survivors(&self, pi: &Permutation) -> SurvivorReport {
        let survivors: Vec<CanonicalAp> = if self.field.q() < PARALLEL_MIN_Q {
            self.iter().filter(|ap| ap_survives(pi, ap)).collect()
        } else {
            // indexed collect keeps mid order; each chunk is already sorted by diff
            (0..self.field.q())
                .into_par_iter()
                .flat_map_iter(|a| {
                    self.aps_with_mid(FieldElem::from_enc_unchecked(a))
                        .filter(|ap| ap_survives(pi, ap))
                        .collect::<Vec<_>>()
                })
                .collect()
        };
        SurvivorReport { field: Arc::clone(&self.field), count: survivors.len() as u64, survivors }
    }

    /// Pushes every canonical AP with `x` among its terms onto `out`.
    fn push_containing(&self, x: FieldElem, out: &mut Vec<CanonicalAp>) {
        let field = &*self.field;
        if field.p() == 3 {
            out.extend(self.diffs.iter().map(|&r| canonicalize(field, x, r)));
        } else {
            out.extend(self.diffs.iter().map(|&r| CanonicalAp { mid: x, diff: r }));
            out.extend(
                field.elements().skip(1).map(|d| CanonicalAp { mid: field.add(x, d), diff: canonical_diff(field, d) }),
            );
        }
    }

    /// Canonical APs with `x` among their terms.
    pub fn containing(&self, x: FieldElem) -> Vec<CanonicalAp> {
        let mut out = Vec::new();
        self.push_containing(x, &mut out);
        out
    }

    /// Canonical APs containing `x` but not `skip`.
    pub fn containing_excluding(&self, x: FieldElem, skip: FieldElem) -> Vec<CanonicalAp> {
        let mut out = self.containing(x);
        out.retain(|ap| !ap.contains(&self.field, skip));
        out
    }

    /// Canonical APs with `a` or `b` among their terms, each listed once.
    pub fn containing_either(&self, a: FieldElem, b: FieldElem) -> Vec<CanonicalAp> {
        let mut out = self.containing(a);
        if a != b {
            out.extend(self.containing_excluding(b, a));
        }
        out
    }

    /// `count(swap_images(pi, a, b)) - count(pi)`, touching only the APs
    /// that contain `a` or `b`.
    pub fn swap_delta(&self, pi: &Permutation, a: FieldElem, b: FieldElem) -> i64 {
        let local = self.containing_either(a, b);
        self.swap_delta_over(pi, a, b, &local)
    }

    pub(crate) fn swap_delta_over(&self, pi: &Permutation, a: FieldElem, b: FieldElem, local: &[CanonicalAp]) -> i64 {
        let field = &*self.field;
        let (pa, pb) = (pi.apply(a), pi.apply(b));
        let swapped = |x: FieldElem| {
            if x == a {
                pb
            } else if x == b {
                pa
            } else {
                pi.apply(x)
            }
        };
        let mut delta = 0i64;
        for ap in local {
            let [lo, mid, hi] = ap.terms(field);
            let before = images_form_ap(field, pi.apply(lo), pi.apply(mid), pi.apply(hi));
            let after = images_form_ap(field, swapped(lo), swapped(mid), swapped(hi));
            delta += i64::from(after) - i64::from(before);
        }
        delta
    }
}

pub fn survivors(pi: &Permutation) -> SurvivorReport {
    ApIndex::new(Arc::clone(pi.field())).survivors(pi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NonexistenceReport {
    pub nonexistent: bool,
    pub best_survivor_count: u64,
    pub permutations_checked: u64,
}

/// Runs every one of the `q!` permutations through the survivor count.
pub fn exhaustive_nonexistence(field: Arc<FieldSpec>) -> Result<NonexistenceReport, ApError> {
    let q = field.q();
    if q > EXHAUSTIVE_MAX_Q {
        return Err(ApError::TooLarge(q));
    }
    let index = ApIndex::new(Arc::clone(&field));
    let mut best = u64::MAX;
    let mut checked = 0u64;
    // itertools yields permutations of a sorted input in lexicographic order
    for images in (0..q).permutations(q as usize) {
        let pi = Permutation::from_images(Arc::clone(&field), images).expect("bijective by construction");
        best = best.min(index.survivor_count(&pi));
        checked += 1;
    }
    Ok(NonexistenceReport { nonexistent: best > 0, best_survivor_count: best, permutations_checked: checked })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(p: u32, k: u32) -> Arc<FieldSpec> {
        Arc::new(FieldSpec::new(p, k, None).unwrap())
    }

    fn e(x: u32) -> FieldElem {
        FieldElem::from_enc_unchecked(x)
    }

    #[test]
    fn two_three_four_is_destroyed_in_f13() {
        let f13 = field(13, 1);
        let f = Permutation::base_f(Arc::clone(&f13));
        let ap = CanonicalAp::new(&f13, e(3), e(1)).unwrap();
        // images (7, 9, 10): 7 + 10 = 17 = 4, 2 * 9 = 18 = 5
        assert_eq!(ap.terms(&f13).map(|x| f.apply(x)), [e(7), e(9), e(10)]);
        assert!(!ap_survives(&f, &ap));
    }

    #[test]
    fn base_survivors_in_f13() {
        let f13 = field(13, 1);
        let f = Permutation::base_f(Arc::clone(&f13));
        let three_halves = f13.embed_rational(3, 2).unwrap();
        let ap = CanonicalAp::new(&f13, three_halves, three_halves).unwrap();
        assert!(ap_survives(&f, &ap));
        // canonical difference is -3/2 here, so the triple reads (3, 3/2, 0)
        assert_eq!(ap.terms(&f13), [f13.from_int(3), three_halves, FieldElem::ZERO]);
        let report = survivors(&f);
        assert_eq!(report.count, 2);
        let third = f13.embed_rational(1, 3).unwrap();
        let two_thirds = f13.embed_rational(2, 3).unwrap();
        let mut expected = vec![ap, CanonicalAp::new(&f13, two_thirds, third).unwrap()];
        expected.sort();
        assert_eq!(report.survivors, expected);
    }

    #[test]
    fn f27_keeps_only_minus_one_zero_one() {
        let f27 = field(3, 3);
        let f = Permutation::base_f(Arc::clone(&f27));
        let report = survivors(&f);
        assert_eq!(report.count, 1);
        assert_eq!(report.survivors[0], CanonicalAp::new(&f27, FieldElem::ZERO, FieldElem::ONE).unwrap());
        assert_eq!(report.record().triples, vec![[2, 0, 1]]);
    }

    #[test]
    fn identity_keeps_everything() {
        for (p, k) in [(5, 1), (3, 2), (7, 1), (2, 3), (5, 2)] {
            let fld = field(p, k);
            let index = ApIndex::new(Arc::clone(&fld));
            let id = Permutation::identity(Arc::clone(&fld));
            assert_eq!(index.iter().count() as u64, index.total());
            assert_eq!(index.survivor_count(&id), index.total());
        }
    }

    #[test]
    fn char3_canonical_form_is_the_set() {
        let f9 = field(3, 2);
        let [lo, mid, hi] = [e(2), e(0), e(1)];
        let a = CanonicalAp::new(&f9, mid, FieldElem::ONE).unwrap();
        let b = CanonicalAp::new(&f9, hi, FieldElem::ONE).unwrap();
        let c = CanonicalAp::new(&f9, lo, f9.neg(FieldElem::ONE)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    // Naive rule: some ordering of the image set is an AP.
    fn six_orderings(field: &FieldSpec, x: FieldElem, y: FieldElem, z: FieldElem) -> bool {
        [[x, y, z], [x, z, y], [y, x, z], [y, z, x], [z, x, y], [z, y, x]]
            .iter()
            .any(|[u, v, w]| field.sub(*v, *u) == field.sub(*w, *v))
    }

    #[test]
    fn sum_zero_rule_matches_six_orderings() {
        for (k, m) in [(2, vec![2, 2, 1]), (3, vec![1, 2, 0, 1])] {
            let fld = FieldSpec::new(3, k, Some(m)).unwrap();
            for x in fld.elements() {
                for y in fld.elements().filter(|&y| y != x) {
                    for z in fld.elements().filter(|&z| z != x && z != y) {
                        assert_eq!(images_form_ap(&fld, x, y, z), six_orderings(&fld, x, y, z));
                    }
                }
            }
        }
    }

    #[test]
    fn swap_delta_matches_recount() {
        for (p, k) in [(11, 1), (3, 2), (3, 3), (5, 2), (13, 1)] {
            let fld = field(p, k);
            let index = ApIndex::new(Arc::clone(&fld));
            let f = Permutation::base_f(Arc::clone(&fld));
            let base = index.survivor_count(&f) as i64;
            for a in fld.elements() {
                for b in fld.elements().filter(|&b| b > a) {
                    let g = f.swap_images(a, b).unwrap();
                    assert_eq!(base + index.swap_delta(&f, a, b), index.survivor_count(&g) as i64, "{fld} {a} {b}");
                }
            }
        }
    }

    #[test]
    fn containing_either_is_exact() {
        for (p, k) in [(7, 1), (3, 2), (5, 2)] {
            let fld = field(p, k);
            let index = ApIndex::new(Arc::clone(&fld));
            let (a, b) = (e(2), e(5));
            let mut got = index.containing_either(a, b);
            got.sort();
            let want: Vec<_> = index.iter().filter(|ap| ap.contains(&fld, a) || ap.contains(&fld, b)).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn exhaustive_small_fields() {
        for q in [3, 5, 7] {
            let r = exhaustive_nonexistence(field(q, 1)).unwrap();
            assert!(r.nonexistent);
            assert!(r.best_survivor_count > 0);
        }
        let r7 = exhaustive_nonexistence(field(7, 1)).unwrap();
        assert_eq!(r7.permutations_checked, 5040);
        assert_eq!(exhaustive_nonexistence(field(11, 1)), Err(ApError::TooLarge(11)));
    }

    #[test]
    fn zero_difference_rejected() {
        let f7 = field(7, 1);
        assert_eq!(CanonicalAp::new(&f7, e(1), FieldElem::ZERO), Err(ApError::ZeroDifference));
    }

    #[test]
    fn parallel_and_serial_scans_agree() {
        let fld = field(211, 1);
        let index = ApIndex::new(Arc::clone(&fld));
        let f = Permutation::base_f(Arc::clone(&fld)).swap_images(e(3), e(40)).unwrap();
        let fast = index.survivors(&f);
        let slow: Vec<_> = index.iter().filter(|ap| ap_survives(&f, ap)).collect();
        assert_eq!(fast.survivors, slow);
        assert_eq!(index.survivor_count(&f), fast.count);
    }
}
