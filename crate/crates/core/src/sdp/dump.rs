//! SDPA sparse format writer for the standard-form problem.
//!
//! Our pair `min <C,X> s.t. <A_j,X> = b_j` is written as the SDPA dual
//! `max <F_0, Y> s.t. <F_j, Y> = c_j` with `F_0 = -C`, `F_j = A_j`, `c_j = b_j`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::ipm::StdSdp;

pub(crate) fn render(p: &StdSdp, offset: f64, sign: f64) -> String {
    let mut s = String::new();
    let op = if sign < 0.0 { "-" } else { "+" };
    let _ = writeln!(s, "* program value = {offset:.17e} {op} SDPA objective value");
    let _ = writeln!(s, "{}", p.a.len());
    let _ = writeln!(s, "{}", p.sides.len());
    let sides: Vec<String> = p.sides.iter().map(|v| v.to_string()).collect();
    let _ = writeln!(s, "{}", sides.join(" "));
    let b: Vec<String> = p.b.iter().map(|v| format!("{v:.17e}")).collect();
    let _ = writeln!(s, "{}", b.join(" "));
    for (k, entries) in p.c.iter().enumerate() {
        for &(i, j, v) in entries {
            let _ = writeln!(s, "0 {} {} {} {:.17e}", k + 1, i + 1, j + 1, -v);
        }
    }
    for (row, entries) in p.a.iter().enumerate() {
        for e in entries {
            let _ = writeln!(s, "{} {} {} {} {:.17e}", row + 1, e.blk + 1, e.p + 1, e.q + 1, e.v);
        }
    }
    s
}

pub(crate) fn write_sdpa(p: &StdSdp, offset: f64, sign: f64, path: &Path) -> std::io::Result<()> {
    fs::write(path, render(p, offset, sign))
}
