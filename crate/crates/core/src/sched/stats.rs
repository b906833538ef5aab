use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::stats::nearest_rank;

pub const PERCENTILES: [f64; 6] = [25.0, 50.0, 90.0, 95.0, 99.0, 99.9];

/// Deviation summary for one method, as fractions (0.1 = 10 % longer).
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationStats {
    pub method: String,
    pub mean: f64,
    /// Nearest-rank values at [`PERCENTILES`].
    pub percentiles: [f64; 6],
    pub max: f64,
}

/// Per-cluster relative deviation of every method from the best makespan
/// achieved on that cluster.
pub fn cluster_deviations(makespans: &BTreeMap<String, Vec<f64>>) -> Result<BTreeMap<String, Vec<f64>>> {
    let clusters = makespans.values().next().map(Vec::len).ok_or(Error::EmptyInput)?;
    if makespans.values().any(|v| v.len() != clusters) {
        return Err(Error::Config("every method needs a makespan for every cluster".into()));
    }
    let best: Vec<f64> = (0..clusters)
        .map(|i| makespans.values().map(|v| v[i]).fold(f64::INFINITY, f64::min))
        .collect();
    Ok(makespans
        .iter()
        .map(|(m, v)| {
            let dev = v
                .iter()
                .zip(&best)
                .map(|(x, b)| if *b > 0.0 { (x - b) / b } else { 0.0 })
                .collect();
            (m.clone(), dev)
        })
        .collect())
}

pub fn makespan_deviation_stats(makespans: &BTreeMap<String, Vec<f64>>) -> Result<Vec<DeviationStats>> {
    let devs = cluster_deviations(makespans)?;
    devs.into_iter()
        .map(|(method, mut d)| {
            if d.is_empty() {
                return Err(Error::EmptyInput);
            }
            d.sort_by(f64::total_cmp);
            let mean = d.iter().sum::<f64>() / d.len() as f64;
            let percentiles = PERCENTILES.map(|p| nearest_rank(&d, p));
            Ok(DeviationStats {
                method,
                mean,
                percentiles,
                max: *d.last().expect("nonempty"),
            })
        })
        .collect()
}

pub fn write_deviation_stats<W: std::io::Write>(w: W, rows: &[DeviationStats]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["method", "mean", "p25", "p50", "p90", "p95", "p99", "p99_9", "max"])?;
    for r in rows {
        let mut rec = vec![r.method.clone(), format!("{:.2}", r.mean * 100.0)];
        rec.extend(r.percentiles.iter().map(|p| format!("{:.2}", p * 100.0)));
        rec.push(format!("{:.2}", r.max * 100.0));
        wtr.write_record(rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<deviation writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[(&str, Vec<f64>)]) -> BTreeMap<String, Vec<f64>> {
        rows.iter().map(|(m, v)| (m.to_string(), v.clone())).collect()
    }

    #[test]
    fn all_equal_gives_zero() {
        let t = table(&[("a", vec![5.0, 7.0]), ("b", vec![5.0, 7.0])]);
        for s in makespan_deviation_stats(&t).unwrap() {
            assert_eq!(s.mean, 0.0);
            assert_eq!(s.max, 0.0);
            assert!(s.percentiles.iter().all(|&p| p == 0.0));
        }
    }

    #[test]
    fn two_methods_one_cluster() {
        let t = table(&[("a", vec![100.0]), ("b", vec![150.0])]);
        let s = makespan_deviation_stats(&t).unwrap();
        assert_eq!(s[0].mean, 0.0);
        assert_eq!(s[1].mean, 0.5);
    }

    #[test]
    fn ten_cluster_nearest_rank() {
        // method b deviates by 0%, 10%, ..., 90% on clusters 1..10 (a is always best)
        let a = vec![100.0; 10];
        let b: Vec<f64> = (0..10).map(|i| 100.0 + 10.0 * i as f64).rev().collect();
        let s = makespan_deviation_stats(&table(&[("a", a), ("b", b)])).unwrap();
        let b = &s[1];
        assert!((b.mean - 0.45).abs() < 1e-12);
        // nearest rank over 10 sorted values: ceil(p/100 * 10)
        // 25 -> 3rd (0.2), 50 -> 5th (0.4), 90 -> 9th (0.8), 95/99/99.9 -> 10th (0.9)
        let expect = [0.2, 0.4, 0.8, 0.9, 0.9, 0.9];
        for (got, want) in b.percentiles.iter().zip(expect) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert!((b.max - 0.9).abs() < 1e-12);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(makespan_deviation_stats(&table(&[("a", vec![1.0]), ("b", vec![])])).is_err());
        assert!(makespan_deviation_stats(&BTreeMap::new()).is_err());
    }
}
