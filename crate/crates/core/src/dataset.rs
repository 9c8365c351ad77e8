use nalgebra::DMatrix;

use crate::error::{MvccaError, Result};
use crate::scalar::Real;

/// Which of the two observation views an operation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    First,
    Second,
}

impl View {
    pub fn other(self) -> View {
        match self {
            View::First => View::Second,
            View::Second => View::First,
        }
    }

    /// 1 or 2.
    pub fn number(self) -> u8 {
        match self {
            View::First => 1,
            View::Second => 2,
        }
    }
}

impl TryFrom<u8> for View {
    type Error = MvccaError;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(View::First),
            2 => Ok(View::Second),
            _ => Err(MvccaError::arg(format!("view must be 1 or 2, got {v}"))),
        }
    }
}

/// `N` aligned pairs `(X¹ₙ, X²ₙ)` with per-view mean matrices.
///
/// All first-view matrices share one shape and all second-view matrices
/// share another. Means are computed at construction; centering is done by
/// the consumers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedMatrixDataset<T: Real> {
    view1: Vec<DMatrix<T>>,
    view2: Vec<DMatrix<T>>,
    mean1: DMatrix<T>,
    mean2: DMatrix<T>,
}

impl<T: Real> PairedMatrixDataset<T> {
    pub fn new(view1: Vec<DMatrix<T>>, view2: Vec<DMatrix<T>>) -> Result<Self> {
        if view1.len() != view2.len() {
            return Err(MvccaError::dim(format!(
                "{} first-view matrices but {} second-view matrices",
                view1.len(),
                view2.len()
            )));
        }
        if view1.is_empty() {
            return Err(MvccaError::arg("dataset has no pairs"));
        }
        let mean1 = mean_of(&view1, "first view")?;
        let mean2 = mean_of(&view2, "second view")?;
        Ok(Self {
            view1,
            view2,
            mean1,
            mean2,
        })
    }

    pub fn len(&self) -> usize {
        self.view1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.view1.is_empty()
    }

    pub fn view(&self, v: View) -> &[DMatrix<T>] {
        match v {
            View::First => &self.view1,
            View::Second => &self.view2,
        }
    }

    pub fn mean(&self, v: View) -> &DMatrix<T> {
        match v {
            View::First => &self.mean1,
            View::Second => &self.mean2,
        }
    }

    /// `(rows, cols)` of the matrices in view `v`.
    pub fn shape(&self, v: View) -> (usize, usize) {
        self.mean(v).shape()
    }

    pub fn pair(&self, n: usize) -> (&DMatrix<T>, &DMatrix<T>) {
        (&self.view1[n], &self.view2[n])
    }

    /// View `v` centered by `mean`.
    pub fn centered_by(&self, v: View, mean: &DMatrix<T>) -> Result<Vec<DMatrix<T>>> {
        if mean.shape() != self.shape(v) {
            return Err(MvccaError::dim(format!(
                "view {} matrices are {:?}, mean is {:?}",
                v.number(),
                self.shape(v),
                mean.shape()
            )));
        }
        Ok(self.view(v).iter().map(|x| x - mean).collect())
    }

    /// View `v` centered by its own mean.
    pub fn centered(&self, v: View) -> Vec<DMatrix<T>> {
        let mean = self.mean(v);
        self.view(v).iter().map(|x| x - mean).collect()
    }

    /// Applies `f` to every matrix of both views (e.g. scaling or transposing).
    pub fn map(&self, mut f: impl FnMut(&DMatrix<T>) -> DMatrix<T>) -> Result<Self> {
        Self::new(
            self.view1.iter().map(&mut f).collect(),
            self.view2.iter().map(&mut f).collect(),
        )
    }

    /// The first `n` pairs.
    pub fn truncated(&self, n: usize) -> Result<Self> {
        let n = n.min(self.len());
        Self::new(self.view1[..n].to_vec(), self.view2[..n].to_vec())
    }
}

fn mean_of<T: Real>(xs: &[DMatrix<T>], what: &str) -> Result<DMatrix<T>> {
    let (r, c) = xs[0].shape();
    let mut sum = DMatrix::zeros(r, c);
    for (i, x) in xs.iter().enumerate() {
        if x.shape() != (r, c) {
            return Err(MvccaError::dim(format!(
                "{what} matrix {i} is {}x{}, expected {r}x{c}",
                x.nrows(),
                x.ncols()
            )));
        }
        sum += x;
    }
    Ok(sum / T::from_usize_lossy(xs.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn means_and_shape_checks() {
        let ds = PairedMatrixDataset::new(
            vec![dmatrix![1.0, 2.0], dmatrix![3.0, 4.0]],
            vec![dmatrix![1.0; 0.0], dmatrix![0.0; 1.0]],
        )
        .unwrap();
        assert_eq!(ds.mean(View::First), &dmatrix![2.0, 3.0]);
        assert_eq!(ds.mean(View::Second), &dmatrix![0.5; 0.5]);
        assert_eq!(ds.shape(View::Second), (2, 1));

        let bad = PairedMatrixDataset::new(vec![dmatrix![1.0], dmatrix![1.0, 2.0]], vec![dmatrix![1.0], dmatrix![1.0]]);
        assert!(matches!(bad, Err(MvccaError::Dimension(_))));
        let uneven = PairedMatrixDataset::new(vec![dmatrix![1.0]], vec![]);
        assert!(uneven.is_err());
    }

    #[test]
    fn view_numbers_round_trip() {
        for v in [View::First, View::Second] {
            assert_eq!(View::try_from(v.number()).unwrap(), v);
            assert_eq!(v.other().other(), v);
        }
        assert!(View::try_from(3).is_err());
    }
}
