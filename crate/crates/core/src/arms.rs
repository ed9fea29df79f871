//! Serde adapters writing 0-based arm indices as 1-based numbers.

use serde::{Deserialize, Deserializer, Serializer};

pub(crate) mod one_based {
    use super::*;

    pub fn serialize<S: Serializer>(a: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*a as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        if v == 0 {
            return Err(serde::de::Error::custom("arms are 1-based"));
        }
        Ok(v as usize - 1)
    }
}

pub(crate) mod one_based_vec {
    use super::*;
    use serde::Serialize;

    pub fn serialize<S: Serializer>(arms: &[usize], s: S) -> Result<S::Ok, S::Error> {
        arms.iter().map(|a| a + 1).collect::<Vec<_>>().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<usize>, D::Error> {
        Vec::<u64>::deserialize(d)?
            .into_iter()
            .map(|v| {
                if v == 0 {
                    Err(serde::de::Error::custom("arms are 1-based"))
                } else {
                    Ok(v as usize - 1)
                }
            })
            .collect()
    }
}
