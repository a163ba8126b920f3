//! Quadratic-character sums over `GF(q)` and the empirical checks of the
//! degree-<=2 identity, the Hasse bound, and the sums used to locate
//! swap partners in the construction.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{FieldElem, FieldSpec, GfError};

/// Orders above this get no precomputed character table.
pub const CHI_TABLE_MAX_Q: u32 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CharSumError {
    #[error("character sums need odd characteristic")]
    Characteristic2,
    #[error("this check needs characteristic > 3, got {0}")]
    CharacteristicTooSmall(u32),
    #[error("field of order {0} is too large for a character table")]
    TooLarge(u32),
    #[error("polynomial is a constant multiple of a square")]
    ScaledSquare,
    #[error("polynomial degree {0:?} is outside the range of this check")]
    DegreeOutOfRange(Option<usize>),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// Polynomial over `GF(q)`, coefficients low degree first, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<FieldElem>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<FieldElem>) -> Self {
        while coeffs.last() == Some(&FieldElem::ZERO) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn from_ints(field: &FieldSpec, coeffs: &[i64]) -> Self {
        Poly::new(coeffs.iter().map(|&c| field.from_int(c)).collect())
    }

    /// `(x - r1)(x - r2)...`
    pub fn from_roots(field: &FieldSpec, roots: &[FieldElem]) -> Self {
        roots.iter().fold(Poly::new(vec![FieldElem::ONE]), |acc, &r| {
            acc.mul(field, &Poly::new(vec![field.neg(r), FieldElem::ONE]))
        })
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, i: usize) -> FieldElem {
        self.coeffs.get(i).copied().unwrap_or(FieldElem::ZERO)
    }

    pub fn coeffs(&self) -> &[FieldElem] {
        &self.coeffs
    }

    fn lead(&self) -> FieldElem {
        self.coeffs.last().copied().unwrap_or(FieldElem::ZERO)
    }

    pub fn eval(&self, field: &FieldSpec, x: FieldElem) -> FieldElem {
        self.coeffs.iter().rev().fold(FieldElem::ZERO, |acc, &c| field.add(field.mul(acc, x), c))
    }

    pub fn mul(&self, field: &FieldSpec, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::new(Vec::new());
        }
        let mut out = vec![FieldElem::ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in other.coeffs.iter().enumerate() {
                out[i + j] = field.add(out[i + j], field.mul(a, b));
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, field: &FieldSpec, c: FieldElem) -> Poly {
        Poly::new(self.coeffs.iter().map(|&a| field.mul(a, c)).collect())
    }

    pub fn derivative(&self, field: &FieldSpec) -> Poly {
        Poly::new(
            self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| field.mul(field.from_int(i as i64), c)).collect(),
        )
    }

    pub fn rem(&self, field: &FieldSpec, divisor: &Poly) -> Poly {
        assert!(!divisor.is_zero(), "division by the zero polynomial");
        let dd = divisor.coeffs.len() - 1;
        let lead_inv = field.inv(divisor.lead()).expect("nonzero leading coefficient");
        let mut r = self.coeffs.clone();
        while r.len() > dd {
            let top = r.len() - 1;
            let c = field.mul(r[top], lead_inv);
            if c != FieldElem::ZERO {
                for (i, &d) in divisor.coeffs.iter().enumerate() {
                    r[top - dd + i] = field.sub(r[top - dd + i], field.mul(c, d));
                }
            }
            r.pop();
        }
        Poly::new(r)
    }

    /// Monic gcd.
    pub fn gcd(&self, field: &FieldSpec, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(field, &b);
            a = std::mem::replace(&mut b, r);
        }
        if a.is_zero() {
            return a;
        }
        let inv = field.inv(a.lead()).expect("nonzero");
        a.scale(field, inv)
    }

    pub fn is_squarefree(&self, field: &FieldSpec) -> bool {
        match self.degree() {
            None => false,
            Some(0) => true,
            Some(_) => self.gcd(field, &self.derivative(field)).degree() == Some(0),
        }
    }

    /// Whether `self = c * h^2` for some constant `c` and polynomial `h`
    /// (odd characteristic). Nonzero constants count, with `h = 1`.
    pub fn is_scaled_square(&self, field: &FieldSpec) -> bool {
        let Some(deg) = self.degree() else { return true };
        if deg % 2 == 1 {
            return false;
        }
        let monic = self.scale(field, field.inv(self.lead()).expect("nonzero"));
        let half = deg / 2;
        // h monic of degree `half`; match coefficients of h^2 from the top down
        let two_inv = field.inv(field.from_int(2)).expect("odd characteristic");
        let mut h = vec![FieldElem::ZERO; half + 1];
        h[half] = FieldElem::ONE;
        for i in 1..=half {
            let mut cross = FieldElem::ZERO;
            for j in 1..i {
                cross = field.add(cross, field.mul(h[half - j], h[half - i + j]));
            }
            h[half - i] = field.mul(field.sub(monic.coeff(deg - i), cross), two_inv);
        }
        let h = Poly::new(h);
        h.mul(field, &h) == monic
    }
}

/// `chi(x)` for every element, built from the squares in one pass.
#[derive(Clone, Debug)]
pub struct ChiTable {
    table: Vec<i8>,
}

impl ChiTable {
    pub fn new(field: &FieldSpec) -> Result<Self, CharSumError> {
        if field.p() == 2 {
            return Err(CharSumError::Characteristic2);
        }
        if field.q() > CHI_TABLE_MAX_Q {
            return Err(CharSumError::TooLarge(field.q()));
        }
        let mut table = vec![-1i8; field.q() as usize];
        table[0] = 0;
        for x in field.elements().skip(1) {
            table[field.mul(x, x).enc() as usize] = 1;
        }
        Ok(ChiTable { table })
    }

    #[inline]
    pub fn chi(&self, x: FieldElem) -> i8 {
        self.table[x.enc() as usize]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HasseOutcome {
    pub holds: bool,
    pub lhs: u64,
    pub bound: f64,
}

/// Character-sum evaluator for one field.
#[derive(Clone, Debug)]
pub struct CharacterSums {
    field: Arc<FieldSpec>,
    chi: ChiTable,
}

impl CharacterSums {
    pub fn new(field: Arc<FieldSpec>) -> Result<Self, CharSumError> {
        let chi = ChiTable::new(&field)?;
        Ok(CharacterSums { field, chi })
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    #[inline]
    pub fn chi(&self, x: FieldElem) -> i8 {
        self.chi.chi(x)
    }

    pub fn chi_sum(&self, g: &Poly) -> i64 {
        self.field.elements().map(|y| i64::from(self.chi(g.eval(&self.field, y)))).sum()
    }

    /// `sum chi(g(y)) == -chi(a2)` for non-square `g` of degree 1 or 2,
    /// with `a2 = 0` in degree 1.
    pub fn weil_deg2_check(&self, g: &Poly) -> Result<bool, CharSumError> {
        match g.degree() {
            Some(1) => {}
            Some(2) if !g.is_scaled_square(&self.field) => {}
            Some(2) => return Err(CharSumError::ScaledSquare),
            // constants are c * 1^2
            Some(0) | None => return Err(CharSumError::ScaledSquare),
            d => return Err(CharSumError::DegreeOutOfRange(d)),
        }
        Ok(self.chi_sum(g) == -i64::from(self.chi(g.coeff(2))))
    }

    /// `|chi(a4) + sum chi(g(y))| <= 2 sqrt(q)` for non-square `g` of degree
    /// 3 or 4, `a4 = 0` in degree 3.
    pub fn hasse_check(&self, g: &Poly) -> Result<HasseOutcome, CharSumError> {
        let d = g.degree();
        if !matches!(d, Some(3) | Some(4)) {
            return Err(CharSumError::DegreeOutOfRange(d));
        }
        if g.is_scaled_square(&self.field) {
            return Err(CharSumError::ScaledSquare);
        }
        let q = u64::from(self.field.q());
        let lhs = (i64::from(self.chi(g.coeff(4))) + self.chi_sum(g)).unsigned_abs();
        Ok(HasseOutcome { holds: lhs * lhs <= 4 * q, lhs, bound: 2.0 * (q as f64).sqrt() })
    }

    /// `sum_y (1 + chi(y) - chi(y+1) - chi(y(y+1)))`, which equals `q + 1`.
    pub fn a_q_identity(&self) -> i64 {
        let f = &*self.field;
        f.elements()
            .map(|y| {
                let y1 = f.add(y, FieldElem::ONE);
                1 + i64::from(self.chi(y)) - i64::from(self.chi(y1)) - i64::from(self.chi(f.mul(y, y1)))
            })
            .sum()
    }

    fn require_char_above_3(&self) -> Result<(), CharSumError> {
        match self.field.p() {
            p if p <= 3 => Err(CharSumError::CharacteristicTooSmall(p)),
            _ => Ok(()),
        }
    }

    /// The four-factor product
    /// `(1-chi((3-y)(3-9y)))(1-chi(3(3-y)))(1-chi((3-y)(27-y)))(1-chi(-y(3-y)))`.
    pub fn b_q_product(&self, y: FieldElem) -> Result<i64, CharSumError> {
        self.require_char_above_3()?;
        let f = &*self.field;
        let n = |v: i64| f.from_int(v);
        let t = f.sub(n(3), y);
        let factors =
            [f.mul(t, f.sub(n(3), f.mul(n(9), y))), f.mul(n(3), t), f.mul(t, f.sub(n(27), y)), f.mul(f.neg(y), t)];
        Ok(factors.iter().map(|&a| 1 - i64::from(self.chi(a))).product())
    }

    /// The sixteen-term expansion of [`Self::b_q_product`], valid for `y != 3`.
    pub fn b_q(&self, y: FieldElem) -> Result<i64, CharSumError> {
        self.require_char_above_3()?;
        let f = &*self.field;
        let n = |v: i64| f.from_int(v);
        let m = |a: FieldElem, b: FieldElem| f.mul(a, b);
        let c = |a: FieldElem| i64::from(self.chi(a));
        let third = f.embed_rational(1, 3)?;

        let three_y = f.sub(n(3), y); // 3 - y
        let tsv_y = f.sub(n(27), y); // 27 - y
        let third_y = f.sub(third, y); // 1/3 - y
        let one_3y = f.sub(n(1), m(n(3), y)); // 1 - 3y
        let y_3 = f.neg(three_y); // y - 3
        let y_27 = f.neg(tsv_y); // y - 27
        let y_third = f.neg(third_y); // y - 1/3
        let y3_1 = f.neg(one_3y); // 3y - 1

        Ok(1 - c(m(three_y, third_y)) - c(f.sub(n(9), m(n(3), y))) - c(m(three_y, tsv_y)) - c(m(y, y_3))
            + c(one_3y)
            + c(m(tsv_y, third_y))
            + c(m(y, y_third))
            + c(m(n(3), tsv_y))
            + c(m(n(-3), y))
            + c(m(y, y_27))
            - c(m(m(three_y, tsv_y), one_3y))
            - c(m(m(y, three_y), y3_1))
            - c(m(m(m(y, three_y), tsv_y), y_third))
            - c(m(m(m(n(3), y), three_y), y_27))
            + c(m(m(y, tsv_y), y3_1)))
    }

    /// `sum_{y in GF(q)} B_q(y)` with the expansion evaluated literally
    /// everywhere, `y = 3` included.
    pub fn b_q_total(&self) -> Result<i64, CharSumError> {
        self.field.elements().map(|y| self.b_q(y)).sum()
    }
}

/// `total >= q - 10 sqrt(q) - 1`, compared exactly.
pub fn b_q_lower_bound_holds(q: u32, total: i64) -> bool {
    let gap = i64::from(q) - 1 - total; // need gap <= 10 sqrt(q)
    gap <= 0 || (gap as i128) * (gap as i128) <= 100 * i128::from(q)
}

pub fn b_q_lower_bound(q: u32) -> f64 {
    f64::from(q) - 10.0 * f64::from(q).sqrt() - 1.0
}

fn random_elem(rng: &mut impl Rng, field: &FieldSpec) -> FieldElem {
    field.elem(u64::from(rng.gen_range(0..field.q()))).expect("in range")
}

fn random_nonzero(rng: &mut impl Rng, field: &FieldSpec) -> FieldElem {
    field.elem(u64::from(rng.gen_range(1..field.q()))).expect("in range")
}

/// Random polynomial of degree 1 or 2 that is not a scaled square.
pub fn random_admissible_deg_le2(rng: &mut impl Rng, field: &FieldSpec) -> Poly {
    loop {
        let degree = rng.gen_range(1..=2usize);
        let mut coeffs: Vec<FieldElem> = (0..degree).map(|_| random_elem(rng, field)).collect();
        coeffs.push(random_nonzero(rng, field));
        let g = Poly::new(coeffs);
        if !g.is_scaled_square(field) {
            return g;
        }
    }
}

/// Random squarefree polynomial of exact degree `degree`.
pub fn random_squarefree(rng: &mut impl Rng, field: &FieldSpec, degree: usize) -> Poly {
    loop {
        let mut coeffs: Vec<FieldElem> = (0..degree).map(|_| random_elem(rng, field)).collect();
        coeffs.push(random_nonzero(rng, field));
        let g = Poly::new(coeffs);
        if g.is_squarefree(field) {
            return g;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckKind {
    Weil2,
    Hasse,
    Aq,
    Bq,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::Weil2 => "weil2",
            CheckKind::Hasse => "hasse",
            CheckKind::Aq => "aq",
            CheckKind::Bq => "bq",
        }
    }
}

/// One check run, as emitted by the `charsum` subcommand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub field: String,
    pub check: CheckKind,
    pub trials: u64,
    pub failures: u64,
    pub extremal_lhs: i64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
}

impl CheckRecord {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

fn field_label(field: &FieldSpec) -> String {
    format!("{}^{}", field.p(), field.k())
}

impl CharacterSums {
    /// `trials` random admissible polynomials of degree <= 2.
    pub fn weil2_sweep(&self, trials: u64, seed: u64) -> CheckRecord {
        let f = &*self.field;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut failures, mut extremal) = (0, 0i64);
        for _ in 0..trials {
            let g = random_admissible_deg_le2(&mut rng, f);
            let deviation = (self.chi_sum(&g) + i64::from(self.chi(g.coeff(2)))).abs();
            extremal = extremal.max(deviation);
            if !self.weil_deg2_check(&g).expect("sampled polynomials are admissible") {
                failures += 1;
            }
        }
        CheckRecord {
            field: field_label(f),
            check: CheckKind::Weil2,
            trials,
            failures,
            extremal_lhs: extremal,
            bound: 0.0,
            seed: Some(seed),
        }
    }

    /// `trials` random squarefree cubics plus `trials` squarefree quartics.
    pub fn hasse_sweep(&self, trials: u64, seed: u64) -> CheckRecord {
        let f = &*self.field;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (mut failures, mut extremal) = (0, 0u64);
        for degree in [3, 4] {
            for _ in 0..trials {
                let g = random_squarefree(&mut rng, f, degree);
                let out = self.hasse_check(&g).expect("squarefree polynomials are not squares");
                extremal = extremal.max(out.lhs);
                if !out.holds {
                    failures += 1;
                }
            }
        }
        CheckRecord {
            field: field_label(f),
            check: CheckKind::Hasse,
            trials: 2 * trials,
            failures,
            extremal_lhs: extremal as i64,
            bound: 2.0 * f64::from(f.q()).sqrt(),
            seed: Some(seed),
        }
    }

    pub fn a_q_record(&self) -> CheckRecord {
        let sum = self.a_q_identity();
        let target = i64::from(self.field.q()) + 1;
        CheckRecord {
            field: field_label(&self.field),
            check: CheckKind::Aq,
            trials: 1,
            failures: u64::from(sum != target),
            extremal_lhs: sum,
            bound: target as f64,
            seed: None,
        }
    }

    /// Expansion equality at every `y != 3`, plus the lower bound on the
    /// full-field sum.
    pub fn b_q_record(&self) -> Result<CheckRecord, CharSumError> {
        let f = &*self.field;
        let three = f.from_int(3);
        let mut failures = 0u64;
        let mut total = 0i64;
        for y in f.elements() {
            let expanded = self.b_q(y)?;
            total += expanded;
            if y != three && expanded != self.b_q_product(y)? {
                failures += 1;
            }
        }
        if !b_q_lower_bound_holds(f.q(), total) {
            failures += 1;
        }
        Ok(CheckRecord {
            field: field_label(f),
            check: CheckKind::Bq,
            trials: u64::from(f.q()),
            failures,
            extremal_lhs: total,
            bound: b_q_lower_bound(f.q()),
            seed: None,
        })
    }
}
