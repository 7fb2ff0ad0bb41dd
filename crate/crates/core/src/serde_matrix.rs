//! Serde adapter for dense complex matrices: `{"rows": r, "cols": c, "data": [[re, im], ...]}`
//! with `data` in row-major order.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{c64, Matrix};

#[derive(Serialize, Deserialize)]
struct Dense {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
    let mut data = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            data.push([z.re, z.im]);
        }
    }
    Dense {
        rows: m.nrows(),
        cols: m.ncols(),
        data,
    }
    .serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
    let dense = Dense::deserialize(d)?;
    if dense.data.len() != dense.rows * dense.cols {
        return Err(D::Error::custom(format!(
            "matrix data has {} entries, expected {}x{}",
            dense.data.len(),
            dense.rows,
            dense.cols
        )));
    }
    if dense.data.iter().any(|[a, b]| !a.is_finite() || !b.is_finite()) {
        return Err(D::Error::custom("matrix entries must be finite"));
    }
    Ok(Matrix::from_fn(dense.rows, dense.cols, |i, j| {
        let [re, im] = dense.data[i * dense.cols + j];
        c64(re, im)
    }))
}

pub mod option {
    use super::*;

    struct Wrap<'a>(&'a Matrix);

    impl Serialize for Wrap<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
            super::serialize(self.0, s)
        }
    }

    pub fn serialize<S: Serializer>(m: &Option<Matrix>, s: S) -> Result<S::Ok, S::Error> {
        m.as_ref().map(Wrap).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Matrix>, D::Error> {
        #[derive(Deserialize)]
        struct Owned(#[serde(with = "super")] Matrix);
        Ok(Option::<Owned>::deserialize(d)?.map(|w| w.0))
    }
}
