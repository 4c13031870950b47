use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::props::{etcs_ground_truth, EtcsParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtcsRecord {
    pub v: f64,
    pub x_h: f64,
    pub x_r: f64,
    pub braking: bool,
}

/// Uniformly sampled labelled ETCS situations. Positions leaving a negative
/// braking distance are rejected and redrawn.
pub fn gen_etcs_data(count: usize, seed: u64, params: &EtcsParams) -> Vec<EtcsRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v = rng.gen_range(0.0..=params.v_max);
        let x_h = rng.gen_range(0.0..=params.track_len);
        let x_r = rng.gen_range(0.0..=params.track_len);
        if x_r - (x_h + params.safety_distance) < 0.0 {
            continue;
        }
        out.push(EtcsRecord {
            v,
            x_h,
            x_r,
            braking: etcs_ground_truth(v, x_h, x_r, params),
        });
    }
    out
}

/// Writes records as CSV with header `v,x_h,x_r,braking`.
pub fn write_etcs_csv<W: Write>(records: &[EtcsRecord], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["v", "x_h", "x_r", "braking"])?;
    for r in records {
        w.write_record([
            format!("{:?}", r.v),
            format!("{:?}", r.x_h),
            format!("{:?}", r.x_r),
            u8::from(r.braking).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
