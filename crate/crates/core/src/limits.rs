//! Exact-mode caps. The defaults are the constants below; a config file may
//! override them for the whole process.

use std::sync::RwLock;

pub const MAX_PERMUTATION_N: usize = 8;
pub const MAX_EXHAUSTIVE_BITS: u32 = 24;
pub const MAX_SUBSET_ENUMERATION: u64 = 3000;
pub const MAX_PAIR_SIDE: usize = 14;
pub const MAX_INSTANCE_N: usize = 16;
pub const MAX_INSTANCE_PARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limits {
    pub max_permutation_n: usize,
    pub max_exhaustive_bits: u32,
    pub max_subset_enumeration: u64,
    pub max_pair_side: usize,
    pub max_instance_n: usize,
    pub max_instance_parts: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_permutation_n: MAX_PERMUTATION_N,
            max_exhaustive_bits: MAX_EXHAUSTIVE_BITS,
            max_subset_enumeration: MAX_SUBSET_ENUMERATION,
            max_pair_side: MAX_PAIR_SIDE,
            max_instance_n: MAX_INSTANCE_N,
            max_instance_parts: MAX_INSTANCE_PARTS,
        }
    }
}

static CURRENT: RwLock<Option<Limits>> = RwLock::new(None);

pub fn current() -> Limits {
    CURRENT.read().map(|l| l.unwrap_or_default()).unwrap_or_default()
}

pub fn set(limits: Limits) {
    if let Ok(mut guard) = CURRENT.write() {
        *guard = Some(limits);
    }
}

pub fn reset() {
    if let Ok(mut guard) = CURRENT.write() {
        *guard = None;
    }
}
