use crate::error::{Error, Result};

/// Disjoint, exhaustive train/validation/test index sets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    /// Contiguous 70/10/20 split in index order (rounded, remainder to test).
    pub fn ordered(count: usize) -> Self {
        let n_train = (count * 7 + 5) / 10;
        let n_val = ((count + 5) / 10).min(count - n_train);
        Self {
            train: (0..n_train).collect(),
            validation: (n_train..n_train + n_val).collect(),
            test: (n_train + n_val..count).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<I> {
    pub instances: Vec<I>,
    pub split: Split,
}

impl<I> Dataset<I> {
    pub fn new(instances: Vec<I>) -> Self {
        let split = Split::ordered(instances.len());
        Self { instances, split }
    }

    pub fn subset(&self, idx: &[usize]) -> Vec<&I> {
        idx.iter().map(|&i| &self.instances[i]).collect()
    }

    pub fn train(&self) -> Vec<&I> {
        self.subset(&self.split.train)
    }

    pub fn validation(&self) -> Vec<&I> {
        self.subset(&self.split.validation)
    }

    pub fn test(&self) -> Vec<&I> {
        self.subset(&self.split.test)
    }

    pub fn require_nonempty(&self) -> Result<()> {
        for (name, part) in [
            ("train", &self.split.train),
            ("validation", &self.split.validation),
            ("test", &self.split.test),
        ] {
            if part.is_empty() {
                return Err(Error::EmptySplit(name.into()));
            }
        }
        Ok(())
    }
}

/// Rounds to 12 significant digits so values survive a decimal round trip unchanged.
pub fn quantize(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_arithmetic() {
        let s = Split::ordered(100);
        assert_eq!(
            (s.train.len(), s.validation.len(), s.test.len()),
            (70, 10, 20)
        );
        let s = Split::ordered(10);
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (7, 1, 2));
        for count in 0..50 {
            let s = Split::ordered(count);
            let all: Vec<usize> = s
                .train
                .iter()
                .chain(&s.validation)
                .chain(&s.test)
                .copied()
                .collect();
            assert_eq!(all, (0..count).collect::<Vec<_>>());
        }
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn quantize_is_stable() {
        let q = quantize(std::f64::consts::PI);
        assert_eq!(q, 3.14159265359);
        assert_eq!(quantize(q), q);
        assert_eq!(format!("{q}").parse::<f64>().unwrap(), q);
    }
}
