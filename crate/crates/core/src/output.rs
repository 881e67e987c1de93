//! Text formats for run, scan and curl outputs.

use std::io::{self, Write};

use crate::coupled_system::{RunResult, RunSummary, SwitchEvent};
use crate::fast_layer::ScanResult;
use crate::reducibility::CurlSample;

pub const RUN_CSV_HEADER: &str =
    "t,u,v,theta1,theta2,rho,phi,R,m_freeze,m_cycle,m_mono,B,S,gate,regime";

/// Nine significant digits, `.` decimal separator, trailing zeros trimmed.
/// Scientific notation outside `1e-5 ..= 1e9`.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    // re-derive the exponent after rounding (9.999999999 -> 10)
    let sci = format!("{:.8e}", x);
    let (mant, e) = sci.split_once('e').expect("exponent present");
    let e: i32 = e.parse().expect("integer exponent");
    let exp = exp.max(e).min(e);
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mant.to_string()), e)
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_run_csv<W: Write>(mut w: W, result: &RunResult) -> io::Result<()> {
    writeln!(w, "{RUN_CSV_HEADER}")?;
    for r in &result.samples {
        let nums = [
            r.t, r.u, r.v, r.theta1, r.theta2, r.rho, r.phi, r.r, r.m_freeze, r.m_cycle, r.m_mono,
            r.b, r.s,
        ];
        for x in nums {
            write!(w, "{},", sig9(x))?;
        }
        writeln!(w, "{},{}", sig9(r.gate), r.label.code())?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct EventRecord {
    t_minus: f64,
    t_plus: f64,
    from: char,
    to: char,
}

/// One JSON object per line.
pub fn write_events_jsonl<W: Write>(mut w: W, events: &[SwitchEvent]) -> io::Result<()> {
    for e in events {
        let rec = EventRecord {
            t_minus: e.t_minus,
            t_plus: e.t_plus,
            from: e.from.code(),
            to: e.to.code(),
        };
        writeln!(
            w,
            "{}",
            serde_json::to_string(&rec).map_err(io::Error::other)?
        )?;
    }
    Ok(())
}

pub fn summary_json(s: &RunSummary) -> String {
    serde_json::to_string_pretty(s).expect("summary serializes")
}

pub fn write_scan_csv<W: Write>(mut w: W, scan: &ScanResult) -> io::Result<()> {
    writeln!(w, "theta1,label,amplitude")?;
    for p in &scan.points {
        writeln!(
            w,
            "{},{},{}",
            sig9(p.theta1),
            p.label.code(),
            sig9(p.amplitude)
        )?;
    }
    Ok(())
}

pub fn write_curl_csv<W: Write>(mut w: W, grid: &[CurlSample]) -> io::Result<()> {
    writeln!(w, "x1,x2,curl")?;
    for s in grid {
        writeln!(w, "{},{},{}", sig9(s.x1), sig9(s.x2), sig9(s.curl))?;
    }
    Ok(())
}
