//! Named feature vectors.

use std::collections::{BTreeMap, HashMap};

/// Anything that can supply a feature value by name.
pub trait FeatureSource<T> {
    fn value(&self, feature: &str) -> Option<T>;
}

impl<T: Copy> FeatureSource<T> for HashMap<String, T> {
    fn value(&self, feature: &str) -> Option<T> {
        self.get(feature).copied()
    }
}

impl<T: Copy> FeatureSource<T> for BTreeMap<String, T> {
    fn value(&self, feature: &str) -> Option<T> {
        self.get(feature).copied()
    }
}

impl<T: Copy> FeatureSource<T> for [(String, T)] {
    fn value(&self, feature: &str) -> Option<T> {
        self.iter().find(|(name, _)| name == feature).map(|(_, v)| *v)
    }
}

impl<T: Copy> FeatureSource<T> for Vec<(String, T)> {
    fn value(&self, feature: &str) -> Option<T> {
        self.as_slice().value(feature)
    }
}

/// A borrowed row of a table together with its column index.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a, T> {
    pub columns: &'a HashMap<String, usize>,
    pub values: &'a [T],
}

impl<T: Copy> FeatureSource<T> for RowView<'_, T> {
    fn value(&self, feature: &str) -> Option<T> {
        self.columns.get(feature).and_then(|&i| self.values.get(i).copied())
    }
}
