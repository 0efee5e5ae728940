//! Text reports and CSV tables. CSV column sets are part of the interface:
//!
//! * θ trace: `m,theta_m,running_inf`
//! * empirical table: `rho,R,x,N,t`
//! * ψ rows: `rho,R,neg_ln_rho,neg_ln_R,psi,in_tail`
//! * comparison: `method,estimate,note`

use std::fmt::Write as _;
use std::io::Write;

use moran_core::dimension::DimensionReport;
use moran_core::geometry::EmpiricalEstimate;
use moran_core::scale::ScaleEstimate;

pub fn dims_text(label: &str, r: &DimensionReport) -> String {
    let mut s = String::new();
    writeln!(s, "spec             {label}").unwrap();
    writeln!(s, "method           {}", r.method).unwrap();
    writeln!(
        s,
        "s_* (tail estimate)   {:.12}   min of s_(0,m) over m in [{}, {}]",
        r.s_lower, r.tail.0, r.tail.1
    )
    .unwrap();
    writeln!(s, "s^* (tail estimate)   {:.12}   max over the same window", r.s_upper).unwrap();
    writeln!(
        s,
        "s** (upper estimate)  {:.12}   convergence gap {:.3e}",
        r.s_assouad, r.convergence_gap
    )
    .unwrap();
    writeln!(
        s,
        "horizons         m_max = {}, window starts k <= {}, s_(0,m) horizon = {}",
        r.horizon_m, r.horizon_k, r.horizon_pre
    )
    .unwrap();
    writeln!(s, "tolerance        {:e}", r.tol).unwrap();
    writeln!(
        s,
        "theta exact      {}",
        if r.theta_exact {
            "yes"
        } else {
            "no (truncated scan over k)"
        }
    )
    .unwrap();
    warnings(&mut s, &r.warnings);
    s
}

pub fn warnings(s: &mut String, list: &[String]) {
    if list.is_empty() {
        writeln!(s, "warnings         none").unwrap();
    } else {
        writeln!(s, "warnings").unwrap();
        for w in list {
            writeln!(s, "  - {w}").unwrap();
        }
    }
}

pub fn theta_csv<W: Write>(r: &DimensionReport, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["m", "theta_m", "running_inf"])?;
    for row in &r.theta_trace {
        w.write_record([row.m.to_string(), row.theta.to_string(), row.running_inf.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn empirical_text(label: &str, e: &EmpiricalEstimate) -> String {
    let mut s = String::new();
    writeln!(s, "source           {label}").unwrap();
    writeln!(s, "deepest level    {}", e.max_depth).unwrap();
    writeln!(s, "rho              t(rho) = max ln N / -ln rho").unwrap();
    for (rho, t) in &e.per_rho {
        writeln!(s, "{rho:<16.6e} {t:.6}").unwrap();
    }
    writeln!(s, "estimate         {:.6}   at the smallest rho", e.estimate).unwrap();
    writeln!(s, "largest rise     {:.3e}", e.max_rise()).unwrap();
    s
}

pub fn empirical_csv<W: Write>(e: &EmpiricalEstimate, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["rho", "R", "x", "N", "t"])?;
    for row in &e.table {
        w.write_record([
            row.rho.to_string(),
            row.big_r.to_string(),
            row.x.to_string(),
            row.n.to_string(),
            row.t.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn scale_text(label: &str, pieces: usize, extrema: (f64, f64, (usize, usize)), e: &ScaleEstimate) -> String {
    let mut s = String::new();
    writeln!(s, "source           {label}").unwrap();
    writeln!(s, "pieces           {pieces}").unwrap();
    let (lo, hi, (a, b)) = extrema;
    writeln!(s, "liminf h (tail)  {lo:.12}   over pieces [{a}, {b}]").unwrap();
    writeln!(s, "limsup h (tail)  {hi:.12}").unwrap();
    writeln!(s, "-ln rho          sup_R psi").unwrap();
    for row in &e.rows {
        let flag = if row.in_tail { "  (tail)" } else { "" };
        writeln!(s, "{:<16.6} {:.6}{flag}", row.lambda, row.psi).unwrap();
    }
    writeln!(s, "dim_A estimate   {:.6}   at the smallest rho", e.estimate).unwrap();
    let mut notes = Vec::new();
    if e.touched_tail() {
        notes.push("some suprema use the extended last value below the truncation floor".to_string());
    }
    warnings(&mut s, &notes);
    s
}
