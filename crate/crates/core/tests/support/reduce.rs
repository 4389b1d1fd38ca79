//! Straight-line recomputation of sweep metrics from the CSV files.

use std::path::Path;

pub struct RawTrial {
    pub method: String,
    pub sweep_value: String,
    pub estimates: Option<Vec<f64>>,
}

pub fn read_raw(path: &Path) -> Vec<RawTrial> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let u_cols: Vec<usize> = (0..headers.len()).filter(|&i| headers[i].starts_with("u_hat_")).collect();
    let status_col = headers.iter().position(|h| h == "status").unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let ok = &r[status_col] == "success";
            RawTrial {
                method: r[1].to_string(),
                sweep_value: r[2].to_string(),
                estimates: ok.then(|| u_cols.iter().map(|&i| r[i].parse().unwrap()).collect()),
            }
        })
        .collect()
}

pub fn read_aggregate(path: &Path) -> Vec<Vec<String>> {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect()
}

/// `(rmse_db, pcd, failures)` for one method at one sweep value.
pub fn reduce(estimates: &[Option<Vec<f64>>], truth: &[f64], grid_size: f64) -> (Option<f64>, f64, usize) {
    let mut t = truth.to_vec();
    t.sort_by(f64::total_cmp);
    let mut sq = 0.0;
    let mut count = 0usize;
    let mut hits = 0usize;
    let mut fails = 0usize;
    for e in estimates {
        let Some(e) = e else {
            fails += 1;
            continue;
        };
        let mut e = e.clone();
        e.sort_by(f64::total_cmp);
        let mut worst = 0.0f64;
        for (a, b) in e.iter().zip(&t) {
            sq += (a - b) * (a - b);
            count += 1;
            worst = worst.max((a - b).abs());
        }
        if worst <= grid_size / 2.0 {
            hits += 1;
        }
    }
    let rmse = (count > 0).then(|| 10.0 * (sq / count as f64).sqrt().log10());
    (rmse, hits as f64 / estimates.len() as f64, fails)
}
