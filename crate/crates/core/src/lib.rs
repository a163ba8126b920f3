//! Permutations of finite fields `GF(p^k)` that destroy every nonconstant
//! 3-term arithmetic progression.
//!
//! - [`gf`]: field arithmetic over an explicit irreducible modulus.
//! - [`perm`]: dense permutation tables and transposition surgery.
//! - [`apcheck`]: AP enumeration, survivor scans, exhaustive search for tiny `q`.
//! - [`charsum`]: quadratic-character sums and the bounds behind the search.
//! - [`construct`]: the swap-based construction, candidate searches, repair.
//! - [`store`]: certificate files and the certificate database.

pub mod apcheck;
pub mod charsum;
pub mod construct;
pub mod gf;
pub mod perm;
pub mod store;

pub use apcheck::{ApIndex, CanonicalAp, SurvivorReport};
pub use construct::{full_construct, Certificate, CertificateRecord, ConstructOptions};
pub use gf::{FieldElem, FieldSpec};
pub use perm::Permutation;
pub use store::{Database, VerificationReport};
