//! JSON wire format for complex matrices: `{"rows", "cols", "data"}` with
//! `data` holding row-major `[re, im]` pairs.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::linalg::{CMat, CVec};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMat> for MatrixJson {
    fn from(m: &CMat) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                data.push([z.re, z.im]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }
}

impl MatrixJson {
    pub fn to_matrix(&self) -> Result<CMat, String> {
        if self.data.len() != self.rows * self.cols {
            return Err(format!(
                "matrix declares {}x{} but carries {} entries",
                self.rows,
                self.cols,
                self.data.len()
            ));
        }
        Ok(CMat::from_fn(self.rows, self.cols, |r, c| {
            let [re, im] = self.data[r * self.cols + c];
            Complex64::new(re, im)
        }))
    }
}

pub mod cmat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &CMat, s: S) -> Result<S::Ok, S::Error> {
        MatrixJson::from(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CMat, D::Error> {
        MatrixJson::deserialize(d)?
            .to_matrix()
            .map_err(serde::de::Error::custom)
    }
}

pub mod cmat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(ms: &[CMat], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<MatrixJson> = ms.iter().map(MatrixJson::from).collect();
        v.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<CMat>, D::Error> {
        Vec::<MatrixJson>::deserialize(d)?
            .iter()
            .map(|m| m.to_matrix().map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Complex vector as a list of `[re, im]` pairs.
pub mod cvec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &CVec, s: S) -> Result<S::Ok, S::Error> {
        let d: Vec<[f64; 2]> = v.iter().map(|z| [z.re, z.im]).collect();
        d.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<CVec, D::Error> {
        let raw = Vec::<[f64; 2]>::deserialize(d)?;
        Ok(CVec::from_iterator(
            raw.len(),
            raw.into_iter().map(|[re, im]| Complex64::new(re, im)),
        ))
    }
}
