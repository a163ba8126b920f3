//! Certificate files, re-verification and the certificate database.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::apcheck;
use crate::construct::{
    content_hash, exists_ap_destroying, explicit_modulus, full_construct, replay, CertificateRecord, ConstructError,
    ConstructOptions, Construction, ARTIFACT_VERSION,
};
use crate::gf::{checked_order, is_prime, FieldSpec, GfError};
use crate::perm::{PermError, Permutation};

/// Upper limit on `max_q` for [`run_table`].
pub const TABLE_MAX_Q: u32 = 100_000;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("I/O error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("cannot rebuild the field: {0}")]
    Field(#[from] GfError),
    #[error("certificate claims (p, k) = ({p}, {k}), where no AP-destroying permutation exists")]
    Nonexistent { p: u32, k: u32 },
    #[error("max_q = {0} exceeds the table limit {TABLE_MAX_Q}")]
    TableTooLarge(u32),
    #[error("construction failed for (p, k) = ({p}, {k}): {source}")]
    Construct { p: u32, k: u32, source: ConstructError },
    #[error("permutation file: {0}")]
    PermFile(String),
    #[error(transparent)]
    Perm(#[from] PermError),
}

pub(crate) fn read_file(path: &Path) -> Result<String, StoreError> {
    std::fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.display().to_string(), source })
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<(), StoreError> {
    std::fs::write(path, contents).map_err(|source| StoreError::Io { path: path.display().to_string(), source })
}

/// Outcome of re-checking one certificate. Each field is an independent check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub field: String,
    pub bijective: bool,
    /// `None` when the image table is not a permutation.
    pub survivor_count: Option<u64>,
    pub claimed_survivor_count: u64,
    pub hash_matches: bool,
    pub replay_matches: bool,
    /// Why replay failed, if it did.
    pub replay_error: Option<String>,
}

impl VerificationReport {
    pub fn verified(&self) -> bool {
        self.bijective
            && self.survivor_count == Some(0)
            && self.claimed_survivor_count == 0
            && self.hash_matches
            && self.replay_matches
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.bijective {
            out.push("image table is not a bijection".to_owned());
        }
        match self.survivor_count {
            Some(0) | None => {}
            Some(n) => out.push(format!("{n} APs survive")),
        }
        if self.claimed_survivor_count != 0 {
            out.push(format!("record claims survivor_count = {}", self.claimed_survivor_count));
        }
        if !self.hash_matches {
            out.push("content_hash does not match the images".to_owned());
        }
        if !self.replay_matches {
            match &self.replay_error {
                Some(e) => out.push(format!("trace replay failed: {e}")),
                None => out.push("trace replay does not reproduce the images".to_owned()),
            }
        }
        out
    }
}

/// Rebuilds the field named by a record, rejecting fields where no
/// AP-destroying permutation can exist.
pub fn record_field(record: &CertificateRecord) -> Result<Arc<FieldSpec>, StoreError> {
    if !is_prime(u64::from(record.p)) {
        return Err(GfError::NotPrime(u64::from(record.p)).into());
    }
    if record.k == 0 {
        return Err(GfError::ZeroDegree.into());
    }
    if !exists_ap_destroying(record.p, record.k).expect("p prime and k >= 1") {
        return Err(StoreError::Nonexistent { p: record.p, k: record.k });
    }
    Ok(Arc::new(FieldSpec::new(record.p, record.k, Some(record.modulus.clone()))?))
}

pub fn verify_record(record: &CertificateRecord) -> Result<VerificationReport, StoreError> {
    let field = record_field(record)?;
    let perm = Permutation::from_images(Arc::clone(&field), record.images.clone()).ok();
    let survivor_count = perm.as_ref().map(|pi| apcheck::survivors(pi).count);
    let hash_matches = content_hash(&record.images) == record.content_hash;
    // replay allocates a full table, so a short record must not reach it
    let (replay_matches, replay_error) = if record.images.len() != field.q() as usize {
        (false, Some(format!("{} images for a field of order {}", record.images.len(), field.q())))
    } else {
        match replay(Arc::clone(&field), &record.trace()) {
            Ok(rebuilt) => (rebuilt.images() == record.images.as_slice(), None),
            Err(e) => (false, Some(e.to_string())),
        }
    };
    Ok(VerificationReport {
        field: field.to_string(),
        bijective: perm.is_some(),
        survivor_count,
        claimed_survivor_count: record.survivor_count,
        hash_matches,
        replay_matches,
        replay_error,
    })
}

pub fn verify_certificate(path: &Path) -> Result<VerificationReport, StoreError> {
    let record = CertificateRecord::from_json(&read_file(path)?)?;
    verify_record(&record)
}

/// Reads a permutation of `field` from either a certificate record or a
/// bare JSON array of images.
pub fn parse_perm(text: &str, field: &Arc<FieldSpec>) -> Result<Permutation, StoreError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let images: Vec<u32> = if value.is_array() {
        serde_json::from_value(value)?
    } else {
        let record: CertificateRecord = serde_json::from_value(value)?;
        let named = FieldSpec::new(record.p, record.k, Some(record.modulus.clone()))?;
        if named != **field {
            return Err(StoreError::PermFile(format!("certificate is over {named}, expected {field}")));
        }
        record.images
    };
    Ok(Permutation::from_images(Arc::clone(field), images)?)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatabaseMetadata {
    pub artifact_version: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
}

/// Certificates keyed by `"p^k/c0,c1,...,ck"`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Database {
    pub metadata: DatabaseMetadata,
    pub entries: BTreeMap<String, CertificateRecord>,
}

pub fn database_key(p: u32, k: u32, modulus: &[u32]) -> String {
    let m: Vec<String> = modulus.iter().map(u32::to_string).collect();
    format!("{p}^{k}/{}", m.join(","))
}

impl Database {
    pub fn new() -> Self {
        let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Database {
            metadata: DatabaseMetadata { artifact_version: ARTIFACT_VERSION.to_owned(), created_at },
            entries: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, record: CertificateRecord) {
        self.entries.insert(database_key(record.p, record.k, &record.modulus), record);
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn load(path: &Path) -> Result<Self, StoreError> {
        Ok(Database::from_json(&read_file(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), StoreError> {
        write_file(path, &self.to_json())
    }

    /// Re-verifies every entry, in key order. Entries whose key disagrees
    /// with their contents are reported as failing.
    pub fn verify_all(&self) -> Vec<(String, Result<VerificationReport, StoreError>)> {
        self.entries
            .par_iter()
            .map(|(key, record)| {
                let report = verify_record(record);
                let report = match report {
                    Ok(r) if *key != database_key(record.p, record.k, &record.modulus) => {
                        Err(StoreError::PermFile(format!("key {key} does not name {}", r.field)))
                    }
                    other => other,
                };
                (key.clone(), report)
            })
            .collect()
    }
}

impl Default for Database {
    fn default() -> Self {
        Database::new()
    }
}

/// Every `(p, k)` with odd `p`, `p^k <= max_q` and an AP-destroying
/// permutation, sorted by `q` then `p`.
pub fn admissible_fields(max_q: u32, k_filter: Option<u32>) -> Vec<(u32, u32)> {
    let mut out = Vec::new();
    for p in (3..=max_q).step_by(2).filter(|&p| is_prime(u64::from(p))) {
        let mut k = 1;
        while let Some(q) = checked_order(u64::from(p), k).filter(|&q| q <= max_q) {
            if k_filter.is_none_or(|want| want == k) && !(k == 1 && p <= 7) {
                out.push((q, p, k));
            }
            k += 1;
        }
    }
    out.sort_unstable();
    out.into_iter().map(|(_, p, k)| (p, k)).collect()
}

#[derive(Clone, Debug, Default)]
pub struct TableOptions {
    pub max_q: u32,
    pub k_filter: Option<u32>,
    /// Use `x^2 + 2x + 2` and `x^3 + 2x + 1` for `GF(9)` and `GF(27)`.
    pub explicit_moduli: bool,
    pub construct: ConstructOptions,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSummary {
    pub max_q: u32,
    pub k_filter: Option<u32>,
    pub certificates: usize,
    pub by_construction: BTreeMap<String, usize>,
    pub max_repair_swaps: usize,
    pub repair_seed: u64,
}

impl TableSummary {
    pub fn of(db: &Database, opts: &TableOptions) -> Self {
        let mut by_construction = BTreeMap::new();
        for r in db.entries.values() {
            *by_construction.entry(r.construction.name().to_owned()).or_insert(0) += 1;
        }
        let max_repair_swaps = db
            .entries
            .values()
            .filter(|r| r.construction == Construction::TwoSwapPlusRepair)
            .map(|r| r.repair_swaps.len())
            .max()
            .unwrap_or(0);
        TableSummary {
            max_q: opts.max_q,
            k_filter: opts.k_filter,
            certificates: db.entries.len(),
            by_construction,
            max_repair_swaps,
            repair_seed: opts.construct.repair.seed,
        }
    }
}

/// Builds a certificate for every admissible field up to `max_q`.
pub fn run_table(opts: &TableOptions) -> Result<(Database, TableSummary), StoreError> {
    if opts.max_q > TABLE_MAX_Q {
        return Err(StoreError::TableTooLarge(opts.max_q));
    }
    let fields = admissible_fields(opts.max_q, opts.k_filter);
    let records: Vec<CertificateRecord> = fields
        .par_iter()
        .map(|&(p, k)| {
            let mut construct = opts.construct.clone();
            construct.modulus = if opts.explicit_moduli { explicit_modulus(p, k) } else { None };
            full_construct(p, k, &construct).map(|c| c.record()).map_err(|source| StoreError::Construct {
                p,
                k,
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    let mut db = Database::new();
    for r in records {
        db.insert(r);
    }
    let summary = TableSummary::of(&db, opts);
    Ok((db, summary))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn admissible_up_to_31() {
        let qs: Vec<u32> = admissible_fields(31, None).iter().map(|&(p, k)| p.pow(k)).collect();
        assert_eq!(qs, [9, 11, 13, 17, 19, 23, 25, 27, 29, 31]);
    }

    #[test]
    fn prime_filter_up_to_1306() {
        let fields = admissible_fields(1306, Some(1));
        let primes: Vec<u32> = (8..1307).filter(|&n| is_prime(u64::from(n))).collect();
        assert_eq!(fields.iter().map(|&(p, _)| p).collect::<Vec<_>>(), primes);
        assert!(fields.iter().all(|&(_, k)| k == 1));
    }

    #[test]
    fn key_format() {
        assert_eq!(database_key(3, 2, &[2, 2, 1]), "3^2/2,2,1");
        assert_eq!(database_key(11, 1, &[0, 1]), "11^1/0,1");
    }

    #[test]
    fn table_guard() {
        let opts = TableOptions { max_q: TABLE_MAX_Q + 1, ..Default::default() };
        assert!(matches!(run_table(&opts), Err(StoreError::TableTooLarge(_))));
    }

    #[test]
    fn nonexistent_record_is_rejected() {
        let f7 = Arc::new(FieldSpec::prime(7).unwrap());
        let images = Permutation::base_f(Arc::clone(&f7)).into_images();
        let record = CertificateRecord {
            p: 7,
            k: 1,
            modulus: f7.modulus().to_vec(),
            construction: Construction::Exhaustive,
            y: None,
            z: None,
            repair_swaps: vec![],
            seed: None,
            content_hash: content_hash(&images),
            images,
            survivor_count: 0,
            artifact_version: ARTIFACT_VERSION.to_owned(),
        };
        assert!(matches!(verify_record(&record), Err(StoreError::Nonexistent { p: 7, k: 1 })));
    }

    #[test]
    fn parse_perm_accepts_arrays_and_records() {
        let f11 = Arc::new(FieldSpec::prime(11).unwrap());
        let cert = full_construct(11, 1, &ConstructOptions::default()).unwrap();
        let from_record = parse_perm(&cert.record().to_json(), &f11).unwrap();
        assert_eq!(from_record, cert.perm);
        let from_array = parse_perm(&serde_json::to_string(cert.perm.images()).unwrap(), &f11).unwrap();
        assert_eq!(from_array, cert.perm);
        let f13 = Arc::new(FieldSpec::prime(13).unwrap());
        assert!(matches!(parse_perm(&cert.record().to_json(), &f13), Err(StoreError::PermFile(_))));
        assert!(parse_perm("[0, 1, 2]", &f11).is_err());
        assert!(parse_perm("{", &f11).is_err());
    }
}
