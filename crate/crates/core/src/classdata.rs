//! Sampled function classes and their empirical L2 geometry.
//!
//! A class here is a finite set of functions known only through their values
//! on an n-point sample. All geometry is taken in L2 of the empirical
//! (uniform) measure on the sample: ⟨f,g⟩ = (1/n) Σ_k f(x_k) g(x_k). Every
//! net, covering number, process covariance and optimization problem in the
//! other modules is derived from this inner product.

use std::path::Path;

use crate::error::{Error, Result};

/// Squared distances computed from inner products may drift slightly negative
/// for near-identical rows; anything above this magnitude is a real bug.
const DIST_SQ_DRIFT: f64 = 1e-12;

/// A function class restricted to an n-point sample.
///
/// Row i holds the values of the i-th function at the n sample points.
/// `range_checked` records that every entry was verified to lie in [0, 1],
/// which the learning-side routines (localized Rademacher complexities, ERM)
/// require; the plain geometry does not.
#[derive(Debug, Clone)]
pub struct SampledClass {
    values: Vec<f64>,
    m: usize,
    n: usize,
    label: String,
    range_checked: bool,
}

impl SampledClass {
    /// Builds a class from per-function value rows. All rows must have the
    /// same positive length and contain only finite entries.
    pub fn from_rows(rows: Vec<Vec<f64>>, label: impl Into<String>) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::InvalidInput("class must contain at least one function".into()));
        }
        let n = rows[0].len();
        if n == 0 {
            return Err(Error::InvalidInput("sample size must be at least one".into()));
        }
        let mut values = Vec::with_capacity(m * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: row.len() });
            }
            for (k, v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite entry at row {i}, column {k}"
                    )));
                }
            }
            values.extend_from_slice(row);
        }
        Ok(Self { values, m, n, label: label.into(), range_checked: false })
    }

    /// Verifies that every entry lies in [0, 1] and marks the class as
    /// range-checked. Fails eagerly on the first violation.
    pub fn assert_range_01(mut self) -> Result<Self> {
        for (idx, v) in self.values.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::InvalidInput(format!(
                    "entry {v} at row {}, column {} is outside [0, 1]",
                    idx / self.n,
                    idx % self.n
                )));
            }
        }
        self.range_checked = true;
        Ok(self)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn range_checked(&self) -> bool {
        self.range_checked
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n)
    }

    /// Empirical inner product ⟨f_i, f_j⟩ = (1/n) Σ_k f_i(x_k) f_j(x_k).
    pub fn inner(&self, i: usize, j: usize) -> f64 {
        let a = self.row(i);
        let b = self.row(j);
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        dot / self.n as f64
    }

    pub fn norm_sq(&self, i: usize) -> f64 {
        self.inner(i, i)
    }

    /// Empirical mean P_n f_i.
    pub fn mean(&self, i: usize) -> f64 {
        let s: f64 = self.row(i).iter().sum();
        s / self.n as f64
    }

    /// Squared empirical distance computed from inner products, with tiny
    /// negative drift clamped to zero.
    pub fn dist_sq(&self, i: usize, j: usize) -> f64 {
        let d2 = self.norm_sq(i) - 2.0 * self.inner(i, j) + self.norm_sq(j);
        clamp_dist_sq(d2)
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist_sq(i, j).sqrt()
    }

    /// Largest pairwise distance. O(m^2 n); intended for desk-scale classes.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.m {
            for j in (i + 1)..self.m {
                best = best.max(self.dist_sq(i, j));
            }
        }
        best.sqrt()
    }

    /// The full m×m matrix of empirical inner products. Symmetric positive
    /// semidefinite up to floating-point rounding.
    pub fn empirical_gram(&self) -> Vec<Vec<f64>> {
        let mut g = vec![vec![0.0; self.m]; self.m];
        for i in 0..self.m {
            for j in i..self.m {
                let v = self.inner(i, j);
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        g
    }

    /// Evaluates Σ_i weights[i] · f_i at every sample point.
    pub fn evaluate_combination(&self, comb: &ConvexCombination) -> Result<Vec<f64>> {
        if comb.weights().len() != self.m {
            return Err(Error::DimensionMismatch { expected: self.m, got: comb.weights().len() });
        }
        let mut out = vec![0.0; self.n];
        for (i, w) in comb.weights().iter().enumerate() {
            if *w == 0.0 {
                continue;
            }
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += w * v;
            }
        }
        Ok(out)
    }

    /// Index of the lexicographically smallest value row; deterministic seed
    /// for the net traversal.
    pub fn lex_min_row(&self) -> usize {
        let mut best = 0usize;
        for i in 1..self.m {
            if lex_less(self.row(i), self.row(best)) {
                best = i;
            }
        }
        best
    }

    /// Splits the sample into the first `n_left` points and the rest, keeping
    /// every function. Used to carve a holdout sample off a master sample.
    pub fn split_columns(&self, n_left: usize) -> Result<(SampledClass, SampledClass)> {
        if n_left == 0 || n_left >= self.n {
            return Err(Error::InvalidInput(format!(
                "split point {n_left} must be inside (0, {})",
                self.n
            )));
        }
        let mut left = Vec::with_capacity(self.m);
        let mut right = Vec::with_capacity(self.m);
        for row in self.rows() {
            left.push(row[..n_left].to_vec());
            right.push(row[n_left..].to_vec());
        }
        let mut l = SampledClass::from_rows(left, format!("{}[train]", self.label))?;
        let mut r = SampledClass::from_rows(right, format!("{}[holdout]", self.label))?;
        l.range_checked = self.range_checked;
        r.range_checked = self.range_checked;
        Ok((l, r))
    }

    /// Loads a class from CSV: one function per row, no header.
    pub fn load_csv(path: impl AsRef<Path>, assert_range_01: bool) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(false)
            .from_path(path.as_ref())?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let row: std::result::Result<Vec<f64>, _> =
                record.iter().map(|s| s.parse::<f64>()).collect();
            let row = row.map_err(|e| Error::InvalidInput(format!("bad CSV entry: {e}")))?;
            rows.push(row);
        }
        let label = path
            .as_ref()
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "class".into());
        let class = SampledClass::from_rows(rows, label)?;
        if assert_range_01 {
            class.assert_range_01()
        } else {
            Ok(class)
        }
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::WriterBuilder::new().has_headers(false).from_path(path.as_ref())?;
        for row in self.rows() {
            writer.write_record(row.iter().map(|v| format!("{v}")))?;
        }
        writer.flush()?;
        Ok(())
    }

    pub(crate) fn set_label(&mut self, label: impl Into<String>) {
        self.label = label.into();
    }

    pub(crate) fn force_range_checked(&mut self, checked: bool) {
        self.range_checked = checked;
    }
}

pub(crate) fn clamp_dist_sq(d2: f64) -> f64 {
    if d2 < 0.0 {
        assert!(
            d2 >= -DIST_SQ_DRIFT,
            "squared distance {d2} below the floating-point drift floor"
        );
        0.0
    } else {
        d2
    }
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return true;
        }
        if x > y {
            return false;
        }
    }
    false
}

/// Weights of a point of the simplex: nonnegative, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexCombination {
    weights: Vec<f64>,
}

impl ConvexCombination {
    /// Sum-to-one slack tolerated on construction.
    pub const SUM_TOL: f64 = 1e-9;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        let mut sum = 0.0;
        for w in &weights {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidInput(format!("weight {w} is negative or non-finite")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self { weights })
    }

    /// Unit mass on vertex `i`.
    pub fn vertex(m: usize, i: usize) -> Result<Self> {
        if i >= m {
            return Err(Error::InvalidInput(format!("vertex {i} out of range for m = {m}")));
        }
        let mut w = vec![0.0; m];
        w[i] = 1.0;
        Ok(Self { weights: w })
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidInput("empty weight vector".into()));
        }
        Ok(Self { weights: vec![1.0 / m as f64; m] })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn gram_single_constant_row() {
        let f = SampledClass::from_rows(vec![vec![1.0, 1.0]], "f").unwrap();
        assert_eq!(f.empirical_gram(), vec![vec![1.0]]);
    }

    #[test]
    fn gram_with_zero_function() {
        let f = SampledClass::from_rows(vec![vec![1.0, 1.0], vec![0.0, 0.0]], "fg").unwrap();
        assert_eq!(f.empirical_gram(), vec![vec![1.0, 0.0], vec![0.0, 0.0]]);
        assert!((f.dist(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn gram_orthogonal_indicators() {
        let f = SampledClass::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]], "fg").unwrap();
        assert_eq!(f.empirical_gram(), vec![vec![0.5, 0.0], vec![0.0, 0.5]]);
        assert!((f.dist(0, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn combination_vertex_returns_row() {
        let f = SampledClass::from_rows(vec![vec![0.2, 0.4], vec![0.9, 0.1]], "f").unwrap();
        let c = ConvexCombination::vertex(2, 0).unwrap();
        assert_eq!(f.evaluate_combination(&c).unwrap(), vec![0.2, 0.4]);
    }

    #[test]
    fn combination_midpoint() {
        let f = SampledClass::from_rows(vec![vec![0.0, 0.0], vec![1.0, 1.0]], "f").unwrap();
        let c = ConvexCombination::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(f.evaluate_combination(&c).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn combination_weighted_sum() {
        let f = SampledClass::from_rows(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            "f",
        )
        .unwrap();
        let c = ConvexCombination::new(vec![0.2, 0.3, 0.5]).unwrap();
        let out = f.evaluate_combination(&c).unwrap();
        assert!((out[0] - 0.7).abs() < 1e-15);
        assert!((out[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn combination_dimension_mismatch() {
        let f = SampledClass::from_rows(vec![vec![1.0, 0.0]], "f").unwrap();
        let c = ConvexCombination::uniform(3).unwrap();
        assert!(matches!(
            f.evaluate_combination(&c),
            Err(Error::DimensionMismatch { expected: 1, got: 3 })
        ));
    }

    #[test]
    fn range_check_rejects_out_of_range() {
        let f = SampledClass::from_rows(vec![vec![0.5, 1.5]], "f").unwrap();
        assert!(f.assert_range_01().is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(SampledClass::from_rows(vec![vec![0.5, f64::NAN]], "f").is_err());
        assert!(SampledClass::from_rows(vec![vec![f64::INFINITY]], "f").is_err());
    }

    #[test]
    fn rejects_ragged_and_empty() {
        assert!(SampledClass::from_rows(vec![], "f").is_err());
        assert!(SampledClass::from_rows(vec![vec![]], "f").is_err());
        assert!(SampledClass::from_rows(vec![vec![1.0], vec![1.0, 2.0]], "f").is_err());
    }

    #[test]
    fn csv_roundtrip() {
        let dir = std::env::temp_dir().join("hullbound_classdata_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("class.csv");
        let f = SampledClass::from_rows(vec![vec![0.25, 0.5, 1.0], vec![0.0, 0.125, 0.75]], "f")
            .unwrap();
        f.save_csv(&path).unwrap();
        let g = SampledClass::load_csv(&path, true).unwrap();
        assert_eq!(g.m(), 2);
        assert_eq!(g.n(), 3);
        assert!(g.range_checked());
        assert_eq!(g.row(0), f.row(0));
        assert_eq!(g.row(1), f.row(1));
    }

    fn small_class() -> impl Strategy<Value = SampledClass> {
        (1usize..8, 1usize..6).prop_flat_map(|(m, n)| {
            proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, n), m)
                .prop_map(|rows| SampledClass::from_rows(rows, "prop").unwrap())
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn triangle_inequality(class in small_class()) {
            let m = class.m();
            for i in 0..m {
                for j in 0..m {
                    for k in 0..m {
                        let lhs = class.dist(i, k);
                        let rhs = class.dist(i, j) + class.dist(j, k);
                        prop_assert!(lhs <= rhs + 1e-9);
                    }
                }
            }
        }

        #[test]
        fn distance_symmetry(class in small_class()) {
            for i in 0..class.m() {
                for j in 0..class.m() {
                    prop_assert!((class.dist(i, j) - class.dist(j, i)).abs() < 1e-15);
                }
            }
        }

        #[test]
        fn combination_norm_dominated_by_vertices(class in small_class()) {
            let m = class.m();
            let raw: Vec<f64> = (0..m).map(|i| ((i * 7 + 3) % 11) as f64 + 0.5).collect();
            let total: f64 = raw.iter().sum();
            let c = ConvexCombination::new(raw.iter().map(|w| w / total).collect()).unwrap();
            let combo = class.evaluate_combination(&c).unwrap();
            let norm_sq: f64 =
                combo.iter().map(|v| v * v).sum::<f64>() / class.n() as f64;
            let max_vertex = (0..m).map(|i| class.norm_sq(i)).fold(0.0_f64, f64::max);
            prop_assert!(norm_sq.sqrt() <= max_vertex.sqrt() + 1e-9);
        }

        #[test]
        fn gram_invariant_under_sample_permutation(class in small_class()) {
            let n = class.n();
            let perm: Vec<usize> = (0..n).rev().collect();
            let rows: Vec<Vec<f64>> = class
                .rows()
                .map(|r| perm.iter().map(|&k| r[k]).collect())
                .collect();
            let permuted = SampledClass::from_rows(rows, "perm").unwrap();
            for i in 0..class.m() {
                for j in 0..class.m() {
                    prop_assert!((class.inner(i, j) - permuted.inner(i, j)).abs() < 1e-12);
                }
            }
        }
    }
}
