//! Sampled time series of one scenario run and its CSV form.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// Exact column order of the trace CSV.
pub const CSV_HEADER: &str = "t_s,delta_f_pu,p_des_w,p_des_p,p_des_s,p_conv_w,p_conv_p,p_conv_s,dp_pcc,dp_grid,p_load,clamp_w,clamp_p,clamp_s";

/// Per-sample records of a run, column-major. Power columns are per-unit
/// deviations from the reference powers (the steady feed of the STATCOM is
/// already subtracted, matching the test-bed evaluation convention);
/// `p_load` is the absolute total load.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub t: Vec<f64>,
    pub delta_f: Vec<f64>,
    pub p_des: [Vec<f64>; 3],
    pub p_conv: [Vec<f64>; 3],
    pub dp_pcc: Vec<f64>,
    pub dp_grid: Vec<f64>,
    pub p_load: Vec<f64>,
    pub clamp: [Vec<bool>; 3],
}

impl Trace {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            t: Vec::with_capacity(n),
            delta_f: Vec::with_capacity(n),
            p_des: std::array::from_fn(|_| Vec::with_capacity(n)),
            p_conv: std::array::from_fn(|_| Vec::with_capacity(n)),
            dp_pcc: Vec::with_capacity(n),
            dp_grid: Vec::with_capacity(n),
            p_load: Vec::with_capacity(n),
            clamp: std::array::from_fn(|_| Vec::with_capacity(n)),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(
        &mut self,
        t: f64,
        delta_f: f64,
        p_des: [f64; 3],
        p_conv: [f64; 3],
        dp_pcc: f64,
        dp_grid: f64,
        p_load: f64,
        clamp: [bool; 3],
    ) {
        self.t.push(t);
        self.delta_f.push(delta_f);
        for i in 0..3 {
            self.p_des[i].push(p_des[i]);
            self.p_conv[i].push(p_conv[i]);
            self.clamp[i].push(clamp[i]);
        }
        self.dp_pcc.push(dp_pcc);
        self.dp_grid.push(dp_grid);
        self.p_load.push(p_load);
    }

    /// Aggregate desired power at sample `k` (sum of unit desired columns).
    pub fn desired_aggregate(&self, k: usize) -> f64 {
        self.p_des[0][k] + self.p_des[1][k] + self.p_des[2][k]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for k in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.t[k],
                self.delta_f[k],
                self.p_des[0][k],
                self.p_des[1][k],
                self.p_des[2][k],
                self.p_conv[0][k],
                self.p_conv[1][k],
                self.p_conv[2][k],
                self.dp_pcc[k],
                self.dp_grid[k],
                self.p_load[k],
                self.clamp[0][k] as u8,
                self.clamp[1][k] as u8,
                self.clamp[2][k] as u8,
            )?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to vec");
        String::from_utf8(buf).expect("csv is ascii")
    }
}
