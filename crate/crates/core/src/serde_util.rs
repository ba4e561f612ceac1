//! Row-major JSON encodings for dense matrices and vectors.

pub mod matrix {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::{to_rows, Mat};

    pub fn serialize<S: Serializer>(m: &Mat, s: S) -> Result<S::Ok, S::Error> {
        to_rows(m).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Mat, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let ncols = rows.first().map_or(0, |r| r.len());
        crate::linalg::from_rows(&rows, ncols).map_err(serde::de::Error::custom)
    }
}

pub mod vector {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Vector;

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::deserialize(d)?))
    }
}

pub mod opt_vector {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::linalg::Vector;

    pub fn serialize<S: Serializer>(v: &Option<Vector>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|v| v.as_slice().to_vec()).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Vector>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(Vector::from_vec))
    }
}
