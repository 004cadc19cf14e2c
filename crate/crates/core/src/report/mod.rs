//! Markdown and CSV renderings of machine reports and model diffs.
//!
//! Percentages are rounded half away from zero, to one decimal, directly
//! from the integer counts.

mod csv_out;
mod markdown;

pub use csv_out::{parse_csv, to_csv, CsvRow, CSV_HEADER};
pub use markdown::{diff_markdown, to_markdown};

use std::cmp::Ordering;

/// An exact percentage `100 * n / d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pct {
    pub n: u64,
    pub d: u64,
}

impl Pct {
    pub fn new(n: usize, d: usize) -> Self {
        Self { n: n as u64, d: d as u64 }
    }

    pub fn is_defined(&self) -> bool {
        self.d > 0
    }

    /// Exact comparison; undefined values compare as equal to anything.
    pub fn cmp_exact(&self, other: &Pct) -> Ordering {
        if !self.is_defined() || !other.is_defined() {
            return Ordering::Equal;
        }
        (u128::from(self.n) * u128::from(other.d)).cmp(&(u128::from(other.n) * u128::from(self.d)))
    }

    /// One-decimal rendering, or `n/a` for an empty denominator.
    pub fn fmt1(&self) -> String {
        if !self.is_defined() {
            return "n/a".to_string();
        }
        fmt_tenths(round_div(1000 * i128::from(self.n), i128::from(self.d)))
    }

    /// `other - self` in percentage points, one decimal with sign.
    pub fn delta_to(&self, other: &Pct) -> String {
        if !self.is_defined() || !other.is_defined() {
            return "n/a".to_string();
        }
        let num = 1000 * (i128::from(other.n) * i128::from(self.d) - i128::from(self.n) * i128::from(other.d));
        let den = i128::from(self.d) * i128::from(other.d);
        let t = round_div(num, den);
        let s = fmt_tenths(t);
        if t > 0 {
            format!("+{s}")
        } else {
            s
        }
    }
}

/// Round `num / den` half away from zero (`den > 0`).
fn round_div(num: i128, den: i128) -> i128 {
    let q = (2 * num.abs() + den) / (2 * den);
    if num < 0 {
        -q
    } else {
        q
    }
}

fn fmt_tenths(t: i128) -> String {
    let sign = if t < 0 { "-" } else { "" };
    format!("{sign}{}.{}", t.abs() / 10, t.abs() % 10)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_from_counts() {
        assert_eq!(Pct::new(3, 4).fmt1(), "75.0");
        assert_eq!(Pct::new(1, 80).fmt1(), "1.3");
        assert_eq!(Pct::new(1, 3).fmt1(), "33.3");
        assert_eq!(Pct::new(2, 3).fmt1(), "66.7");
        assert_eq!(Pct::new(0, 0).fmt1(), "n/a");
        assert_eq!(Pct::new(1, 4).delta_to(&Pct::new(1, 2)), "+25.0");
        assert_eq!(Pct::new(1, 2).delta_to(&Pct::new(1, 4)), "-25.0");
        assert_eq!(Pct::new(1, 80).delta_to(&Pct::new(0, 80)), "-1.3");
        assert_eq!(Pct::new(1, 2).delta_to(&Pct::new(2, 4)), "0.0");
        assert_eq!(Pct::new(1, 3).cmp_exact(&Pct::new(2, 6)), Ordering::Equal);
        assert_eq!(Pct::new(1, 3).cmp_exact(&Pct::new(1, 2)), Ordering::Less);
    }
}
