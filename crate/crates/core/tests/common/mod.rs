#![allow(dead_code)]

use std::collections::BTreeSet;

use apdestroy::{FieldElem, FieldSpec, Permutation};

/// Every 3-set `{a-r, a, a+r}`, `r != 0`, whose images satisfy
/// `pi(a-r) + pi(a+r) = 2 pi(a)`. Uses nothing from the AP index.
pub fn naive_survivor_sets(pi: &Permutation) -> BTreeSet<[u32; 3]> {
    let f = pi.field();
    let mut out = BTreeSet::new();
    for a in f.elements() {
        for r in f.elements().skip(1) {
            let (lo, hi) = (f.sub(a, r), f.add(a, r));
            let lhs = f.add(pi.apply(lo), pi.apply(hi));
            let rhs = f.add(pi.apply(a), pi.apply(a));
            if lhs == rhs {
                let mut set = [lo.enc(), a.enc(), hi.enc()];
                set.sort_unstable();
                out.insert(set);
            }
        }
    }
    out
}

pub fn naive_destroys_all(pi: &Permutation) -> bool {
    let f = pi.field();
    f.elements().all(|a| {
        f.elements().skip(1).all(|r| {
            let lhs = f.add(pi.apply(f.sub(a, r)), pi.apply(f.add(a, r)));
            lhs != f.add(pi.apply(a), pi.apply(a))
        })
    })
}

pub fn sorted_set(xs: [FieldElem; 3]) -> [u32; 3] {
    let mut s = xs.map(FieldElem::enc);
    s.sort_unstable();
    s
}

pub fn rational(f: &FieldSpec, n: i64, d: i64) -> FieldElem {
    f.embed_rational(n, d).unwrap()
}
