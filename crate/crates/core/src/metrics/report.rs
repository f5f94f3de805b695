use std::fmt::Write;

use serde::{Deserialize, Serialize};

/// Reporting multiplier used by the result tables.
pub const E5: f64 = 1e5;

pub const CSV_HEADER: &str = "shape,noise_kind,noise_scale,cd_raw,cd_e5,p2m_raw,p2m_e5";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub shape: String,
    pub noise_kind: String,
    pub noise_scale: f64,
    pub cd: f64,
    pub p2m: Option<f64>,
}

impl MetricReport {
    pub fn cd_e5(&self) -> f64 {
        self.cd * E5
    }

    pub fn p2m_e5(&self) -> Option<f64> {
        self.p2m.map(|p| p * E5)
    }

    /// One CSV row matching [`CSV_HEADER`]; missing P2M is an empty field.
    pub fn csv_row(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{:?},{:?},{:?},",
            self.shape,
            self.noise_kind,
            self.noise_scale,
            self.cd,
            self.cd_e5()
        )
        .unwrap();
        if let (Some(p), Some(p5)) = (self.p2m, self.p2m_e5()) {
            write!(s, "{p:?},{p5:?}").unwrap();
        } else {
            s.push(',');
        }
        s
    }
}
