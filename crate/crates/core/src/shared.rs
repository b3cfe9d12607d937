//! Vectors shared between threads under the incoherent write contract.
//!
//! Each component is an `AtomicU64` holding `f64` bits and accessed with
//! relaxed ordering: single-component reads and writes are indivisible,
//! read-modify-write sequences are not, so concurrent updates may be lost.

use std::sync::atomic::{AtomicU64, Ordering};

#[derive(Debug)]
pub struct SharedVec {
    cells: Box<[AtomicU64]>,
}

impl SharedVec {
    pub fn zeros(len: usize) -> SharedVec {
        SharedVec::from_slice(&vec![0.0; len])
    }

    pub fn from_slice(values: &[f64]) -> SharedVec {
        SharedVec {
            cells: values.iter().map(|v| AtomicU64::new(v.to_bits())).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    #[inline]
    pub fn get(&self, j: usize) -> f64 {
        f64::from_bits(self.cells[j].load(Ordering::Relaxed))
    }

    #[inline]
    pub fn set(&self, j: usize, v: f64) {
        self.cells[j].store(v.to_bits(), Ordering::Relaxed);
    }

    /// Racy `x[j] += delta`: a concurrent writer's update may be overwritten.
    #[inline]
    pub fn add(&self, j: usize, delta: f64) {
        self.set(j, self.get(j) + delta);
    }

    /// Lossless `x[j] += delta` via compare-and-swap.
    #[inline]
    pub fn add_exact(&self, j: usize, delta: f64) {
        let cell = &self.cells[j];
        let mut cur = cell.load(Ordering::Relaxed);
        loop {
            let next = (f64::from_bits(cur) + delta).to_bits();
            match cell.compare_exchange_weak(cur, next, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => return,
                Err(seen) => cur = seen,
            }
        }
    }

    /// Component-wise copy; may be torn if writers are active.
    pub fn snapshot(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.get(j)).collect()
    }

    pub fn store_all(&self, values: &[f64]) {
        assert_eq!(values.len(), self.len());
        for (j, &v) in values.iter().enumerate() {
            self.set(j, v);
        }
    }
}

impl Clone for SharedVec {
    fn clone(&self) -> Self {
        SharedVec::from_slice(&self.snapshot())
    }
}
