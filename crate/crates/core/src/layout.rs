//! Logical-to-physical qubit placement.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LayoutError {
    #[error("logical qubit {logical} placed on physical {physical}, outside 0..{num_physical}")]
    OutOfRange { logical: usize, physical: usize, num_physical: usize },
    #[error("physical qubit {physical} holds both logical {first} and {second}")]
    Collision { physical: usize, first: usize, second: usize },
    #[error("{logical} logical qubits do not fit on {physical} physical qubits")]
    TooManyLogical { logical: usize, physical: usize },
}

/// Injective map from every logical qubit to a physical qubit, with its inverse.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Layout {
    log_to_phys: Vec<usize>,
    phys_to_log: Vec<Option<usize>>,
}

impl Layout {
    pub fn new(log_to_phys: Vec<usize>, num_physical: usize) -> Result<Self, LayoutError> {
        if log_to_phys.len() > num_physical {
            return Err(LayoutError::TooManyLogical { logical: log_to_phys.len(), physical: num_physical });
        }
        let mut phys_to_log = vec![None; num_physical];
        for (logical, &physical) in log_to_phys.iter().enumerate() {
            if physical >= num_physical {
                return Err(LayoutError::OutOfRange { logical, physical, num_physical });
            }
            if let Some(first) = phys_to_log[physical] {
                return Err(LayoutError::Collision { physical, first, second: logical });
            }
            phys_to_log[physical] = Some(logical);
        }
        Ok(Layout { log_to_phys, phys_to_log })
    }

    /// Logical qubit `i` on physical qubit `i`.
    pub fn trivial(num_logical: usize, num_physical: usize) -> Result<Self, LayoutError> {
        Self::new((0..num_logical).collect(), num_physical)
    }

    #[inline]
    pub fn physical(&self, logical: usize) -> usize {
        self.log_to_phys[logical]
    }

    #[inline]
    pub fn logical_at(&self, physical: usize) -> Option<usize> {
        self.phys_to_log[physical]
    }

    pub fn num_logical(&self) -> usize {
        self.log_to_phys.len()
    }

    pub fn num_physical(&self) -> usize {
        self.phys_to_log.len()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.log_to_phys
    }

    /// Exchanges the contents of two physical qubits, either of which may be empty.
    pub fn swap_physical(&mut self, p: usize, q: usize) {
        let (a, b) = (self.phys_to_log[p], self.phys_to_log[q]);
        self.phys_to_log[p] = b;
        self.phys_to_log[q] = a;
        if let Some(a) = a {
            self.log_to_phys[a] = q;
        }
        if let Some(b) = b {
            self.log_to_phys[b] = p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_collisions() {
        assert_eq!(Layout::new(vec![1, 1], 3), Err(LayoutError::Collision { physical: 1, first: 0, second: 1 }));
        assert!(matches!(Layout::new(vec![3], 3), Err(LayoutError::OutOfRange { .. })));
        assert!(matches!(Layout::new(vec![0, 1, 2], 2), Err(LayoutError::TooManyLogical { .. })));
    }

    #[test]
    fn swap_keeps_inverse_consistent() {
        let mut l = Layout::new(vec![2, 0], 4).unwrap();
        l.swap_physical(2, 3);
        assert_eq!(l.physical(0), 3);
        assert_eq!(l.logical_at(2), None);
        l.swap_physical(0, 3);
        assert_eq!(l.as_slice(), &[0, 3]);
        for p in 0..4 {
            if let Some(i) = l.logical_at(p) {
                assert_eq!(l.physical(i), p);
            }
        }
    }
}
