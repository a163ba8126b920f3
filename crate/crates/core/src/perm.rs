//! Permutations of `GF(q)` as dense image tables.

use std::sync::Arc;

use thiserror::Error;

use crate::gf::{FieldElem, FieldSpec, GfError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("permutations are over different fields")]
    FieldMismatch,
    #[error("image table has length {got}, field order is {q}")]
    WrongLength { got: usize, q: u32 },
    #[error("image table is not a bijection (value {0} repeated or out of range)")]
    NotBijective(u32),
    #[error("cannot swap the images of {0} with itself")]
    SameElement(FieldElem),
    #[error(transparent)]
    Field(#[from] GfError),
}

/// A bijection `pi` on `GF(q)` with `images[enc(x)] = enc(pi(x))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    field: Arc<FieldSpec>,
    images: Vec<u32>,
}

impl Permutation {
    pub fn identity(field: Arc<FieldSpec>) -> Self {
        let images = (0..field.q()).collect();
        Permutation { field, images }
    }

    pub fn from_images(field: Arc<FieldSpec>, images: Vec<u32>) -> Result<Self, PermError> {
        let q = field.q();
        if images.len() != q as usize {
            return Err(PermError::WrongLength { got: images.len(), q });
        }
        let mut seen = vec![false; q as usize];
        for &v in &images {
            match seen.get_mut(v as usize) {
                Some(s) if !*s => *s = true,
                _ => return Err(PermError::NotBijective(v)),
            }
        }
        Ok(Permutation { field, images })
    }

    /// `f(0) = 1`, `f(1) = 0`, `f(x) = 1/x` otherwise.
    pub fn base_f(field: Arc<FieldSpec>) -> Self {
        let q = field.q();
        let mut images = Vec::with_capacity(q as usize);
        images.push(1);
        if q > 1 {
            images.push(0);
        }
        for x in 2..q {
            let inv = field.inv(FieldElem::from_enc_unchecked(x)).expect("nonzero");
            images.push(inv.enc());
        }
        Permutation { field, images }
    }

    pub fn field(&self) -> &Arc<FieldSpec> {
        &self.field
    }

    pub fn images(&self) -> &[u32] {
        &self.images
    }

    pub fn into_images(self) -> Vec<u32> {
        self.images
    }

    #[inline]
    pub fn apply(&self, x: FieldElem) -> FieldElem {
        FieldElem::from_enc_unchecked(self.images[x.enc() as usize])
    }

    /// `pi'(a) = pi(b)`, `pi'(b) = pi(a)`, unchanged elsewhere.
    pub fn swap_images(&self, a: FieldElem, b: FieldElem) -> Result<Self, PermError> {
        let mut out = self.clone();
        out.swap_in_place(a, b)?;
        Ok(out)
    }

    pub(crate) fn swap_in_place(&mut self, a: FieldElem, b: FieldElem) -> Result<(), PermError> {
        if a == b {
            return Err(PermError::SameElement(a));
        }
        let q = self.field.q();
        for x in [a, b] {
            if x.enc() >= q {
                return Err(GfError::OutOfRange { enc: u64::from(x.enc()), q }.into());
            }
        }
        self.images.swap(a.enc() as usize, b.enc() as usize);
        Ok(())
    }

    /// `self ∘ other`, i.e. `x -> self(other(x))`.
    pub fn compose(&self, other: &Permutation) -> Result<Self, PermError> {
        if self.field != other.field {
            return Err(PermError::FieldMismatch);
        }
        let images = other.images.iter().map(|&x| self.images[x as usize]).collect();
        Ok(Permutation { field: Arc::clone(&self.field), images })
    }

    pub fn inverse(&self) -> Self {
        let mut images = vec![0u32; self.images.len()];
        for (x, &y) in self.images.iter().enumerate() {
            images[y as usize] = x as u32;
        }
        Permutation { field: Arc::clone(&self.field), images }
    }

    pub fn is_involution(&self) -> bool {
        self.images.iter().enumerate().all(|(x, &y)| self.images[y as usize] == x as u32)
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(x, &y)| y == x as u32)
    }

    /// Elements whose images differ between `self` and `other`.
    pub fn moved_relative_to(&self, other: &Permutation) -> Vec<FieldElem> {
        self.images
            .iter()
            .zip(&other.images)
            .enumerate()
            .filter(|(_, (a, b))| a != b)
            .map(|(x, _)| FieldElem::from_enc_unchecked(x as u32))
            .collect()
    }
}
