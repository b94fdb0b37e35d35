//! Token-to-index mapping for bag-of-words features.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Index 0 is reserved for tokens never seen in training.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary<T: Ord> {
    index: BTreeMap<T, usize>,
}

impl<T: Ord + Clone> Vocabulary<T> {
    pub const UNKNOWN: usize = 0;

    /// Indices follow sorted token order, starting at 1.
    pub fn build<'a, I>(tokens: I) -> Self
    where
        I: IntoIterator<Item = &'a T>,
        T: 'a,
    {
        let mut index: BTreeMap<T, usize> = tokens.into_iter().map(|t| (t.clone(), 0)).collect();
        for (i, v) in index.values_mut().enumerate() {
            *v = i + 1;
        }
        Vocabulary { index }
    }

    pub fn index_of(&self, token: &T) -> usize {
        self.index.get(token).copied().unwrap_or(Self::UNKNOWN)
    }

    /// Number of indices including the unknown slot.
    pub fn size(&self) -> usize {
        self.index.len() + 1
    }

    pub fn known(&self) -> usize {
        self.index.len()
    }

    pub fn encode(&self, bag: &[T]) -> Vec<usize> {
        bag.iter().map(|t| self.index_of(t)).collect()
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&T, usize)> {
        self.index.iter().map(|(t, &i)| (t, i))
    }
}
