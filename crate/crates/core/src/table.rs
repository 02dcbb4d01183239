//! Typed CSV rows with row-numbered errors.

use std::io::Read;

use serde::de::DeserializeOwned;

use crate::error::{Error, Result};

/// Deserializes every row under a header. Row numbers in errors count the
/// header as row 1.
pub fn read_rows<T: DeserializeOwned, R: Read>(reader: R, source_name: &str) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e: csv::Error| Error::Csv {
                source_name: source_name.to_string(),
                row: i + 2,
                message: e.to_string(),
            })
        })
        .collect()
}
