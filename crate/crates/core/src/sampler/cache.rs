use std::collections::HashMap;

use nalgebra::DVector;

use crate::glm::{GlmFit, ModelIndicator};

/// Bit-packed 0/1 vector, used as an exact key for imaginary samples.
pub(crate) fn pack_bits(v: &DVector<f64>) -> Vec<u64> {
    let mut out = vec![0u64; v.len().div_ceil(64)];
    for (i, &b) in v.iter().enumerate() {
        if b == 1.0 {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

/// Least-recently-used store of fits keyed by `(γ, y*)`.
#[derive(Debug)]
pub(crate) struct FitCache {
    capacity: usize,
    clock: u64,
    entries: HashMap<(ModelIndicator, Vec<u64>), (GlmFit, u64)>,
}

impl FitCache {
    pub(crate) fn new(capacity: usize) -> Self {
        FitCache { capacity, clock: 0, entries: HashMap::with_capacity(capacity + 1) }
    }

    pub(crate) fn get(&mut self, model: &ModelIndicator, ystar: &[u64]) -> Option<GlmFit> {
        self.clock += 1;
        let clock = self.clock;
        let key = (model.clone(), ystar.to_vec());
        self.entries.get_mut(&key).map(|(fit, used)| {
            *used = clock;
            fit.clone()
        })
    }

    pub(crate) fn insert(&mut self, model: ModelIndicator, ystar: Vec<u64>, fit: GlmFit) {
        if self.capacity == 0 {
            return;
        }
        self.clock += 1;
        if self.entries.len() >= self.capacity && !self.entries.contains_key(&(model.clone(), ystar.clone())) {
            let oldest = self.entries.iter().min_by_key(|(_, (_, used))| *used).map(|(k, _)| k.clone());
            if let Some(k) = oldest {
                self.entries.remove(&k);
            }
        }
        self.entries.insert((model, ystar), (fit, self.clock));
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Memo of separation checks against the full design.
#[derive(Debug, Default)]
pub(crate) struct AdmissibilityCache {
    entries: HashMap<Vec<u64>, bool>,
}

const ADMISSIBILITY_CAPACITY: usize = 1 << 16;

impl AdmissibilityCache {
    pub(crate) fn get(&self, key: &[u64]) -> Option<bool> {
        self.entries.get(key).copied()
    }

    pub(crate) fn insert(&mut self, key: Vec<u64>, admissible: bool) {
        if self.entries.len() >= ADMISSIBILITY_CAPACITY {
            self.entries.clear();
        }
        self.entries.insert(key, admissible);
    }
}
