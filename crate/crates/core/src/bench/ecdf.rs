//! Deterministic ECDF export: sorted statistic values with ranks over the
//! draw count, as plot-ready CSV.

use std::io::Write;

use super::power::fmt_float;

/// Sorted (value, rank/R) pairs.
pub fn ecdf_rows(values: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("statistic values are finite"));
    let r = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / r))
        .collect()
}

/// Writes `value,ecdf` rows (UTF-8, LF, 17 significant digits).
pub fn ecdf_export<W: Write>(values: &[f64], w: &mut W) -> std::io::Result<()> {
    writeln!(w, "value,ecdf")?;
    for (v, e) in ecdf_rows(values) {
        writeln!(w, "{},{}", fmt_float(v), fmt_float(e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value_has_full_mass() {
        assert_eq!(ecdf_rows(&[3.5]), vec![(3.5, 1.0)]);
    }

    #[test]
    fn two_values_split_mass() {
        assert_eq!(ecdf_rows(&[2.0, 1.0]), vec![(1.0, 0.5), (2.0, 1.0)]);
    }

    #[test]
    fn export_is_byte_deterministic() {
        let values = [0.25, -1.0, 7.5, 0.25];
        let mut a = Vec::new();
        let mut b = Vec::new();
        ecdf_export(&values, &mut a).unwrap();
        ecdf_export(&values, &mut b).unwrap();
        assert_eq!(a, b);
        assert!(a.starts_with(b"value,ecdf\n"));
    }
}
