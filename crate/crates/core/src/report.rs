//! Serialization helpers shared by the report types.

use std::fmt::Display;

use serde::Serializer;

/// Serialize any `Display` value as a JSON string (exact integers and rationals).
pub fn ser_display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}
