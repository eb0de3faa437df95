//! Catalog of standard Taguchi orthogonal arrays.
//!
//! The canonical L16(4^5) is embedded verbatim because downstream group
//! memberships (runs 0,3,10,13 forming the first learning-rate group and so
//! on) depend on its exact row order. L8(2^7) is the standard 8-run table;
//! the remaining entries come from the finite-field construction, which is
//! deterministic.

use crate::error::{Error, Result};
use crate::gf::prime_power;
use crate::oa::{gf_construct, OrthogonalArray};

/// The 16-run, 5-column, 4-level array, row order as published.
const L16_4_5: [[u32; 5]; 16] = [
    [1, 4, 4, 4, 4],
    [2, 3, 4, 1, 2],
    [4, 1, 4, 2, 3],
    [1, 1, 1, 1, 1],
    [2, 4, 3, 2, 1],
    [2, 1, 2, 3, 4],
    [4, 3, 2, 4, 1],
    [4, 2, 3, 1, 4],
    [3, 2, 4, 3, 1],
    [3, 1, 3, 4, 2],
    [1, 3, 3, 3, 3],
    [4, 4, 1, 3, 2],
    [3, 3, 1, 2, 4],
    [1, 2, 2, 2, 2],
    [2, 2, 1, 4, 3],
    [3, 4, 2, 1, 3],
];

/// Standard L8(2^7) table.
const L8_2_7: [[u32; 7]; 8] = [
    [1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 2, 2, 2, 2],
    [1, 2, 2, 1, 1, 2, 2],
    [1, 2, 2, 2, 2, 1, 1],
    [2, 1, 2, 1, 2, 1, 2],
    [2, 1, 2, 2, 1, 2, 1],
    [2, 2, 1, 1, 2, 2, 1],
    [2, 2, 1, 2, 1, 1, 2],
];

fn embedded(name: &str, levels: u32, rows: &[&[u32]]) -> OrthogonalArray {
    let matrix = rows.iter().map(|r| r.to_vec()).collect();
    OrthogonalArray::new(name, levels, matrix).expect("embedded catalog array is well-formed")
}

fn named_construct(name: &str, levels: u32, columns: usize) -> OrthogonalArray {
    let oa = gf_construct(levels, columns).expect("catalog construction parameters are valid");
    OrthogonalArray::new(name, levels, oa.rows().to_vec())
        .expect("constructed catalog array is well-formed")
}

/// The standard 16-run table in its published row order.
pub fn l16_4_5() -> OrthogonalArray {
    let rows: Vec<&[u32]> = L16_4_5.iter().map(|r| r.as_slice()).collect();
    embedded("L16(4^5)", 4, &rows)
}

/// All catalog entries, smallest first per level count.
pub fn catalog_entries() -> Vec<OrthogonalArray> {
    let l8_rows: Vec<&[u32]> = L8_2_7.iter().map(|r| r.as_slice()).collect();
    vec![
        named_construct("L4(2^3)", 2, 3),
        embedded("L8(2^7)", 2, &l8_rows),
        named_construct("L9(3^4)", 3, 4),
        l16_4_5(),
        named_construct("L25(5^6)", 5, 6),
    ]
}

/// Fetch a catalog entry by its name, full width.
pub fn catalog_by_name(name: &str) -> Result<OrthogonalArray> {
    catalog_entries()
        .into_iter()
        .find(|oa| oa.name() == name)
        .ok_or_else(|| Error::UnknownCatalogName {
            name: name.to_string(),
        })
}

/// Smallest validated catalog array with at least `columns` columns at
/// exactly `levels` levels; extra columns are dropped from the right.
///
/// A single-factor request is served by the trivial one-column array that
/// lists each level once (strength 2 is vacuous there).
pub fn catalog_lookup(columns: usize, levels: u32) -> Result<OrthogonalArray> {
    if columns == 0 || levels == 0 {
        return Err(Error::MalformedArray {
            reason: "column and level counts must be positive".into(),
        });
    }
    if columns == 1 {
        let matrix = (1..=levels).map(|l| vec![l]).collect();
        return OrthogonalArray::new(format!("L{levels}({levels}^1)"), levels, matrix);
    }
    let candidate = catalog_entries()
        .into_iter()
        .filter(|oa| oa.levels() == levels && oa.columns() >= columns)
        .min_by_key(|oa| oa.runs());
    let oa = match candidate {
        Some(oa) => oa.truncated(columns)?,
        None => {
            let hint = if prime_power(levels).is_some() && columns <= (levels + 1) as usize {
                format!("; gf_construct({levels}, {columns}) can build one")
            } else if prime_power(levels).is_some() {
                format!(
                    "; gf_construct supports at most {} columns at {levels} levels",
                    levels + 1
                )
            } else {
                String::new()
            };
            return Err(Error::NoCatalogEntry {
                columns,
                levels,
                hint,
            });
        }
    };
    debug_assert!(oa.validate().ok, "catalog entry failed validation");
    Ok(oa)
}
