//! Seeded vectors of scalar draws.

use std::io::BufRead;

/// Where a batch came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub law: String,
    pub seed: u64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    values: Vec<f64>,
    provenance: Provenance,
}

impl SampleBatch {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Self {
        debug_assert_eq!(values.len(), provenance.count);
        Self { values, provenance }
    }

    /// Wraps raw values with an ad-hoc provenance.
    pub fn from_values(values: Vec<f64>) -> Self {
        let count = values.len();
        Self {
            values,
            provenance: Provenance {
                law: "literal".into(),
                seed: 0,
                count,
            },
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let n = self.values.len() as f64;
        self.values.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    }

    /// Values sorted ascending with `total_cmp`.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_unstable_by(f64::total_cmp);
        v
    }

    /// Reads one number per line; blank lines and `#` comments are skipped.
    pub fn read_text<R: BufRead>(reader: R) -> Result<Self, String> {
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| e.to_string())?;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let x: f64 = t
                .parse()
                .map_err(|_| format!("line {}: not a number: {t:?}", lineno + 1))?;
            if !x.is_finite() {
                return Err(format!("line {}: non-finite value", lineno + 1));
            }
            values.push(x);
        }
        Ok(Self::from_values(values))
    }
}
