use std::io::Write;

use super::ClusterPath;
use crate::error::Result;
use crate::io::fmt_f64;

/// Long format: `gamma,node,dim,value`, one row per centroid entry.
pub fn write_path_csv<W: Write>(path: &ClusterPath, mut out: W) -> Result<()> {
    writeln!(out, "gamma,node,dim,value")?;
    for s in &path.snapshots {
        let g = fmt_f64(s.gamma);
        for i in 0..s.u.ncols() {
            for k in 0..s.u.nrows() {
                writeln!(out, "{g},{i},{k},{}", fmt_f64(s.u[(k, i)]))?;
            }
        }
    }
    Ok(())
}

/// `gamma,node,cluster`.
pub fn write_labels_csv<W: Write>(path: &ClusterPath, mut out: W) -> Result<()> {
    writeln!(out, "gamma,node,cluster")?;
    for s in &path.snapshots {
        let g = fmt_f64(s.gamma);
        for (i, l) in s.partition.labels().iter().enumerate() {
            writeln!(out, "{g},{i},{l}")?;
        }
    }
    Ok(())
}
