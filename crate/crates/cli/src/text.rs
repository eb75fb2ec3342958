//! Plain-text tables and histograms.

/// Left-aligned first column, right-aligned numbers.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        format!("{}\n", parts.join("  ").trim_end())
    };
    let mut out = line(header.to_vec());
    for row in rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

/// Equal-width bins over `[min, max]`; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize, bar_width: usize) -> String {
    if values.is_empty() || bins == 0 {
        return String::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bins = if hi > lo { bins } else { 1 };
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &v in values {
        let i = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[i] += 1;
    }
    let peak = counts.iter().copied().max().unwrap_or(1).max(1);
    let mut out = String::new();
    for (i, &c) in counts.iter().enumerate() {
        let a = lo + width * i as f64;
        let b = if i + 1 == bins { hi } else { lo + width * (i + 1) as f64 };
        let close = if i + 1 == bins { ']' } else { ')' };
        let bar = "#".repeat((c * bar_width).div_ceil(peak).min(bar_width));
        out.push_str(&format!("[{a:>10.3}, {b:>10.3}{close} {bar:<bar_width$} {c}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_counts_every_value() {
        let h = histogram(&[0.0, 0.5, 1.0, 1.0, 2.0], 2, 10);
        let counts: Vec<usize> = h
            .lines()
            .map(|l| l.rsplit(' ').next().unwrap().parse().unwrap())
            .collect();
        assert_eq!(counts, vec![2, 3]);
    }

    #[test]
    fn constant_values_fall_in_one_bin() {
        let h = histogram(&[3.0; 4], 5, 8);
        assert_eq!(h.lines().count(), 1);
        assert!(h.ends_with(" 4\n"));
    }

    #[test]
    fn table_aligns_columns() {
        let t = table(&["a", "value"], &[vec!["long name".into(), "1.0".into()]]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a          value");
        assert_eq!(lines[1], "long name    1.0");
    }
}
