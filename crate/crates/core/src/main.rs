use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use apdestroy::apcheck::{self, exhaustive_nonexistence};
use apdestroy::charsum::{CharacterSums, CheckRecord};
use apdestroy::construct::{explicit_modulus, full_construct, ConstructError, ConstructOptions, RepairParams};
use apdestroy::gf::{is_prime, parse_modulus, FieldSpec};
use apdestroy::store::{self, Database, StoreError, TableOptions};
use apdestroy::Permutation;

#[derive(Parser)]
#[command(
    name = "apdestroy",
    version,
    about = "Permutations of GF(p^k) that destroy every 3-term arithmetic progression"
)]
struct Cli {
    /// Print machine-readable JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct FieldArgs {
    #[arg(long)]
    p: u32,
    #[arg(long, default_value_t = 1)]
    k: u32,
    /// Irreducible modulus, constant term first, e.g. "2,2,1".
    #[arg(long, conflicts_with = "explicit_moduli")]
    modulus: Option<String>,
    /// Use x^2+2x+2 for GF(9) and x^3+2x+1 for GF(27).
    #[arg(long)]
    explicit_moduli: bool,
}

impl FieldArgs {
    fn modulus(&self) -> Result<Option<Vec<u32>>, String> {
        match &self.modulus {
            Some(s) => parse_modulus(s).map(Some).map_err(|e| e.to_string()),
            None if self.explicit_moduli => Ok(explicit_modulus(self.p, self.k)),
            None => Ok(None),
        }
    }

    fn field(&self) -> Result<Arc<FieldSpec>, String> {
        FieldSpec::new(self.p, self.k, self.modulus()?).map(Arc::new).map_err(|e| e.to_string())
    }
}

#[derive(clap::Args, Clone)]
struct RepairArgs {
    /// Seed for repair restarts.
    #[arg(long, default_value_t = RepairParams::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = RepairParams::default().max_steps)]
    max_steps: u64,
    #[arg(long, default_value_t = RepairParams::default().restarts)]
    restarts: u32,
    /// Skip swap candidates that fail the quadratic-character conditions.
    #[arg(long)]
    chi_filter: bool,
}

impl RepairArgs {
    fn options(&self, modulus: Option<Vec<u32>>) -> ConstructOptions {
        ConstructOptions {
            modulus,
            chi_filter: self.chi_filter,
            repair: RepairParams { max_steps: self.max_steps, restarts: self.restarts, seed: self.seed },
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Check {
    Weil2,
    Hasse,
    Aq,
    Bq,
}

#[derive(Subcommand)]
enum Command {
    /// Build and verify a certificate for one field.
    Construct {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        repair: RepairArgs,
        /// Certificate path; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-verify a certificate or a certificate database.
    Verify { file: PathBuf },
    /// List the APs a permutation fails to destroy.
    Survivors {
        #[command(flatten)]
        field: FieldArgs,
        /// `base-f` or a file holding a certificate or a JSON image array.
        #[arg(long, default_value = "base-f")]
        perm: String,
        /// Print at most this many triples.
        #[arg(long, default_value_t = 50)]
        limit: usize,
    },
    /// Build certificates for every admissible field up to `max_q`.
    Table {
        #[arg(long)]
        max_q: u32,
        #[arg(long)]
        out: PathBuf,
        /// Restrict to this extension degree.
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        explicit_moduli: bool,
        #[command(flatten)]
        repair: RepairArgs,
    },
    /// Check all q! permutations of GF(q), q <= 8.
    Nonexist {
        #[arg(long)]
        q: u32,
    },
    /// Run a character-sum check over one field.
    Charsum {
        #[arg(long, value_enum)]
        check: Check,
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Random polynomials per degree; defaults to 10000 for weil2 and 1000 for hasse.
        #[arg(long)]
        trials: Option<u64>,
    },
}

/// Exit status: 0 success, 1 negative result, 2 usage or I/O error.
enum Outcome {
    Holds,
    Fails,
}

fn emit<T: Serialize>(json: bool, value: &T, text: impl FnOnce() -> String) {
    if json {
        println!("{}", serde_json::to_string_pretty(value).expect("plain data serializes"));
    } else {
        println!("{}", text());
    }
}

fn run(cli: Cli) -> Result<Outcome, String> {
    let json = cli.json;
    match cli.command {
        Command::Construct { field, repair, out } => {
            let opts = repair.options(field.modulus()?);
            let cert = match full_construct(field.p, field.k, &opts) {
                Ok(c) => c,
                Err(e @ ConstructError::Nonexistent { .. }) => {
                    eprintln!("{e}");
                    return Ok(Outcome::Fails);
                }
                Err(e) => return Err(e.to_string()),
            };
            let record = cert.record();
            match &out {
                Some(path) => std::fs::write(path, record.to_json()).map_err(|e| format!("{}: {e}", path.display()))?,
                None if !json => println!("{}", record.to_json()),
                None => {}
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                field: String,
                construction: &'a str,
                y: Option<u32>,
                z: Option<u32>,
                repair_swaps: usize,
                seed: u64,
                survivor_count: u64,
                content_hash: &'a str,
                out: Option<String>,
            }
            let summary = Summary {
                field: cert.field.to_string(),
                construction: record.construction.name(),
                y: record.y,
                z: record.z,
                repair_swaps: record.repair_swaps.len(),
                seed: opts.repair.seed,
                survivor_count: record.survivor_count,
                content_hash: &record.content_hash,
                out: out.as_ref().map(|p| p.display().to_string()),
            };
            if json || out.is_some() {
                emit(json, &summary, || {
                    format!(
                        "{}: {} y={} z={} repair_swaps={} seed={} survivors={} hash={}",
                        summary.field,
                        summary.construction,
                        opt(summary.y),
                        opt(summary.z),
                        summary.repair_swaps,
                        summary.seed,
                        summary.survivor_count,
                        summary.content_hash
                    )
                });
            }
            Ok(Outcome::Holds)
        }
        Command::Verify { file } => verify(&file, json),
        Command::Survivors { field, perm, limit } => {
            let f = field.field()?;
            let pi = if perm == "base-f" {
                Permutation::base_f(Arc::clone(&f))
            } else {
                let text = std::fs::read_to_string(&perm).map_err(|e| format!("{perm}: {e}"))?;
                store::parse_perm(&text, &f).map_err(|e| e.to_string())?
            };
            let record = apcheck::survivors(&pi).record();
            emit(json, &record, || {
                let mut s = format!("{f}: {} surviving APs", record.count);
                for t in record.triples.iter().take(limit) {
                    s.push_str(&format!("\n  ({}, {}, {})", t[0], t[1], t[2]));
                }
                if record.triples.len() > limit {
                    s.push_str(&format!("\n  ... {} more", record.triples.len() - limit));
                }
                s
            });
            Ok(if record.count == 0 { Outcome::Holds } else { Outcome::Fails })
        }
        Command::Table { max_q, out, k, explicit_moduli, repair } => {
            let opts = TableOptions { max_q, k_filter: k, explicit_moduli, construct: repair.options(None) };
            let (db, summary) = store::run_table(&opts).map_err(|e| e.to_string())?;
            db.save(&out).map_err(|e| e.to_string())?;
            emit(json, &summary, || {
                let mut s =
                    format!("{} certificates up to q = {max_q} written to {}", summary.certificates, out.display());
                for (name, n) in &summary.by_construction {
                    s.push_str(&format!("\n  {name}: {n}"));
                }
                s.push_str(&format!(
                    "\n  max repair swaps: {}\n  repair seed: {}",
                    summary.max_repair_swaps, summary.repair_seed
                ));
                s
            });
            Ok(Outcome::Holds)
        }
        Command::Nonexist { q } => {
            let (p, k) = prime_power(q).ok_or_else(|| format!("{q} is not a prime power"))?;
            let field = Arc::new(FieldSpec::new(p, k, None).map_err(|e| e.to_string())?);
            let report = exhaustive_nonexistence(field).map_err(|e| e.to_string())?;
            emit(json, &report, || {
                format!(
                    "q = {q}: {} permutations checked, fewest survivors {}; {}",
                    report.permutations_checked,
                    report.best_survivor_count,
                    if report.nonexistent {
                        "no AP-destroying permutation"
                    } else {
                        "an AP-destroying permutation exists"
                    }
                )
            });
            Ok(if report.nonexistent { Outcome::Holds } else { Outcome::Fails })
        }
        Command::Charsum { check, field, seed, trials } => {
            let f = field.field()?;
            let sums = CharacterSums::new(f).map_err(|e| e.to_string())?;
            let record: CheckRecord = match check {
                Check::Weil2 => sums.weil2_sweep(trials.unwrap_or(10_000), seed),
                Check::Hasse => sums.hasse_sweep(trials.unwrap_or(1_000), seed),
                Check::Aq => sums.a_q_record(),
                Check::Bq => sums.b_q_record().map_err(|e| e.to_string())?,
            };
            emit(json, &record, || {
                let seed = record.seed.map_or(String::new(), |s| format!(" seed={s}"));
                format!(
                    "{} {}: trials={} failures={} extremal={} bound={}{seed}",
                    record.check.name(),
                    record.field,
                    record.trials,
                    record.failures,
                    record.extremal_lhs,
                    record.bound
                )
            });
            Ok(if record.passed() { Outcome::Holds } else { Outcome::Fails })
        }
    }
}

fn opt(v: Option<u32>) -> String {
    v.map_or_else(|| "-".to_owned(), |v| v.to_string())
}

fn prime_power(q: u32) -> Option<(u32, u32)> {
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let (mut n, mut k) = (q, 0);
    while n % p == 0 {
        n /= p;
        k += 1;
    }
    (n == 1 && is_prime(u64::from(p))).then_some((p, k))
}

fn verify(path: &Path, json: bool) -> Result<Outcome, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if value.get("entries").is_some() {
        let db = Database::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let results = db.verify_all();
        let failed: Vec<(String, String)> = results
            .iter()
            .filter_map(|(key, r)| match r {
                Ok(report) if report.verified() => None,
                Ok(report) => Some((key.clone(), report.failures().join("; "))),
                Err(e) => Some((key.clone(), e.to_string())),
            })
            .collect();
        #[derive(Serialize)]
        struct DbSummary {
            entries: usize,
            failed: Vec<(String, String)>,
        }
        let summary = DbSummary { entries: results.len(), failed };
        emit(json, &summary, || {
            let mut s = format!("{}: {} entries, {} failed", path.display(), summary.entries, summary.failed.len());
            for (key, why) in &summary.failed {
                s.push_str(&format!("\n  {key}: {why}"));
            }
            s
        });
        return Ok(if summary.failed.is_empty() { Outcome::Holds } else { Outcome::Fails });
    }
    match store::verify_certificate(path) {
        Ok(report) => {
            emit(json, &report, || {
                if report.verified() {
                    format!("{}: verified ({})", path.display(), report.field)
                } else {
                    format!("{}: FAILED ({}): {}", path.display(), report.field, report.failures().join("; "))
                }
            });
            Ok(if report.verified() { Outcome::Holds } else { Outcome::Fails })
        }
        Err(e @ StoreError::Nonexistent { .. }) => {
            eprintln!("{}: rejected: {e}", path.display());
            Ok(Outcome::Fails)
        }
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Outcome::Holds) => ExitCode::SUCCESS,
        Ok(Outcome::Fails) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
