use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::RationalDof;

/// A K-user MIMO Y channel: `k` sources with `m` antennas each, one relay
/// with `n` antennas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SystemConfig {
    pub k: usize,
    pub m: usize,
    pub n: usize,
}

impl SystemConfig {
    pub fn new(k: usize, m: usize, n: usize) -> Result<Self> {
        let cfg = SystemConfig { k, m, n };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::InvalidConfig(format!(
                "K = {} but the Y channel needs K >= 3",
                self.k
            )));
        }
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidConfig(format!(
                "antenna counts must be positive (M = {}, N = {})",
                self.m, self.n
            )));
        }
        Ok(())
    }

    /// N/M as an exact rational.
    pub fn ratio(&self) -> RationalDof {
        RationalDof::new(self.n as i64, self.m as i64)
    }

    /// Number of unordered source pairs, K(K-1)/2.
    pub fn pair_count(&self) -> usize {
        self.k * (self.k - 1) / 2
    }

    /// Unordered pairs (i, j), i < j, in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        pairs(self.k)
    }
}

pub fn pairs(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in i + 1..k {
            out.push((i, j));
        }
    }
    out
}

/// All `size`-subsets of `0..k` as sorted tuples, lexicographic order.
pub fn subsets(k: usize, size: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if size > k {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.clone());
        // Advance to the next combination.
        let mut pos = size;
        while pos > 0 {
            pos -= 1;
            if idx[pos] != pos + k - size {
                idx[pos] += 1;
                for q in pos + 1..size {
                    idx[q] = idx[q - 1] + 1;
                }
                break;
            }
            if pos == 0 {
                return out;
            }
        }
        if size == 0 {
            return out;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_k_and_zero_antennas() {
        assert!(SystemConfig::new(2, 1, 1).is_err());
        assert!(SystemConfig::new(3, 0, 1).is_err());
        assert!(SystemConfig::new(3, 1, 0).is_err());
        assert!(SystemConfig::new(3, 1, 1).is_ok());
    }

    #[test]
    fn subset_enumeration() {
        assert_eq!(
            subsets(4, 2),
            vec![
                vec![0, 1],
                vec![0, 2],
                vec![0, 3],
                vec![1, 2],
                vec![1, 3],
                vec![2, 3]
            ]
        );
        assert_eq!(subsets(5, 3).len(), 10);
        assert_eq!(subsets(6, 6), vec![vec![0, 1, 2, 3, 4, 5]]);
        assert_eq!(subsets(3, 0), vec![Vec::<usize>::new()]);
        assert!(subsets(2, 3).is_empty());
    }

    #[test]
    fn pairs_match_two_subsets() {
        let p: Vec<Vec<usize>> = pairs(6).into_iter().map(|(i, j)| vec![i, j]).collect();
        assert_eq!(p, subsets(6, 2));
    }
}
