//! The `CLOCKFIELD v1` text format.
//!
//! ```text
//! CLOCKFIELD v1
//! disk 0.0 0.0 1.0            (or: rect xmin xmax ymin ymax)
//! 0.0625 16                   (eps N; N = 0 for an unconstrained field)
//! -15 0 3                     (i j value, sites in lexicographic order)
//! ```
//!
//! Values are clock indices when `N > 0` and angles in radians otherwise.

use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::constructions::AnyField;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point, UnitVec};
use crate::lattice::{ClockField, ClockParams, Lattice, SpinField};

pub const MAGIC: &str = "CLOCKFIELD v1";

pub fn write_field(field: &AnyField, mut w: impl Write) -> Result<()> {
    let l = field.lattice();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "{}", l.domain())?;
    match field {
        AnyField::Clock(u) => {
            writeln!(w, "{:?} {}", l.eps(), u.clock().n())?;
            for (k, [i, j]) in l.sites().iter().enumerate() {
                writeln!(w, "{i} {j} {}", u.index(k))?;
            }
        }
        AnyField::Spin(u) => {
            writeln!(w, "{:?} 0", l.eps())?;
            for (k, [i, j]) in l.sites().iter().enumerate() {
                writeln!(w, "{i} {j} {:?}", u.value(k).phase())?;
            }
        }
    }
    Ok(())
}

pub fn to_string(field: &AnyField) -> String {
    let mut buf = Vec::new();
    write_field(field, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn nums<T: std::str::FromStr>(line: usize, s: &str, want: usize) -> Result<Vec<T>> {
    let out: Vec<T> = s
        .split_whitespace()
        .map(|t| t.parse::<T>().map_err(|_| parse_err(line, format!("bad number {t:?}"))))
        .collect::<Result<_>>()?;
    if out.len() != want {
        return Err(parse_err(line, format!("expected {want} numbers, found {}", out.len())));
    }
    Ok(out)
}

fn parse_domain(line: usize, s: &str) -> Result<Domain> {
    let (kind, rest) = s.trim().split_once(' ').unwrap_or((s.trim(), ""));
    let d = match kind {
        "rect" => {
            let v: Vec<f64> = nums(line, rest, 4)?;
            Domain::rectangle(v[0], v[1], v[2], v[3])
        }
        "disk" => {
            let v: Vec<f64> = nums(line, rest, 3)?;
            Domain::disk(Point::new(v[0], v[1]), v[2])
        }
        other => return Err(parse_err(line, format!("unknown domain kind {other:?}"))),
    };
    d.map_err(|e| parse_err(line, e.to_string()))
}

pub fn read_field(r: impl BufRead) -> Result<AnyField> {
    let mut lines = r.lines().enumerate().map(|(n, l)| (n + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, l)) => Ok((n, l?)),
            None => Err(parse_err(0, format!("missing {what}"))),
        }
    };
    let (n, magic) = next("header")?;
    if magic.trim() != MAGIC {
        return Err(parse_err(n, format!("expected {MAGIC:?}")));
    }
    let (n, dline) = next("domain line")?;
    let domain = parse_domain(n, &dline)?;
    let (n, pline) = next("spacing line")?;
    let parts: Vec<&str> = pline.split_whitespace().collect();
    if parts.len() != 2 {
        return Err(parse_err(n, "expected `eps N`"));
    }
    let eps: f64 = parts[0].parse().map_err(|_| parse_err(n, "bad eps"))?;
    let clock_n: u32 = parts[1].parse().map_err(|_| parse_err(n, "bad N"))?;
    let l = Arc::new(Lattice::new(domain, eps)?);
    let clock = match clock_n {
        0 => None,
        c => Some(ClockParams::new(c).map_err(|e| parse_err(n, e.to_string()))?),
    };

    let mut indices = Vec::with_capacity(l.len());
    let mut values = Vec::with_capacity(l.len());
    for k in 0..l.len() {
        let (n, s) = next("site line")?;
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(parse_err(n, "expected `i j value`"));
        }
        let i: i64 = parts[0].parse().map_err(|_| parse_err(n, "bad i"))?;
        let j: i64 = parts[1].parse().map_err(|_| parse_err(n, "bad j"))?;
        if [i, j] != l.site(k) {
            return Err(parse_err(n, format!("expected site {:?}, found [{i}, {j}]", l.site(k))));
        }
        match clock {
            Some(c) => {
                let v: u32 = parts[2].parse().map_err(|_| parse_err(n, "bad clock index"))?;
                if v >= c.n() {
                    return Err(parse_err(n, format!("clock index {v} out of range")));
                }
                indices.push(v);
            }
            None => {
                let t: f64 = parts[2].parse().map_err(|_| parse_err(n, "bad angle"))?;
                if !t.is_finite() {
                    return Err(parse_err(n, "angle is not finite"));
                }
                values.push(UnitVec::from_angle(t));
            }
        }
    }
    for (n, rest) in lines {
        if !rest?.trim().is_empty() {
            return Err(parse_err(n, "trailing data after the last site"));
        }
    }
    Ok(match clock {
        Some(c) => AnyField::Clock(ClockField::new(l, c, indices)?),
        None => AnyField::Spin(SpinField::new(l, values)?),
    })
}

pub fn from_str(s: &str) -> Result<AnyField> {
    read_field(s.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::project_clock;

    fn vortex(domain: Domain, eps: f64) -> SpinField {
        let l = Arc::new(Lattice::new(domain, eps).unwrap());
        SpinField::from_fn(l, |p| UnitVec::normalize(p.x - 0.01, p.y + 0.02).unwrap())
    }

    #[test]
    fn clock_round_trip_is_exact() {
        for d in [Domain::unit_disk(), Domain::rectangle(-0.3, 0.7, 0.1, 0.55).unwrap()] {
            let u = project_clock(&vortex(d, 0.05), ClockParams::new(37).unwrap());
            let text = to_string(&AnyField::Clock(u.clone()));
            let AnyField::Clock(back) = from_str(&text).unwrap() else { panic!("clock expected") };
            assert_eq!(back.indices(), u.indices());
            assert_eq!(back.lattice().sites(), u.lattice().sites());
            assert_eq!(to_string(&AnyField::Clock(back)), text);
        }
    }

    #[test]
    fn spin_round_trip() {
        let u = vortex(Domain::unit_disk(), 0.1);
        let text = to_string(&AnyField::Spin(u.clone()));
        assert!(text.starts_with("CLOCKFIELD v1\ndisk 0.0 0.0 1.0\n0.1 0\n"));
        let AnyField::Spin(back) = from_str(&text).unwrap() else { panic!("spin expected") };
        for k in 0..u.values().len() {
            assert!(back.value(k).chord(u.value(k)) < 1e-15);
        }
    }

    #[test]
    fn rejects_malformed_input() {
        let u = project_clock(&vortex(Domain::unit_disk(), 0.25), ClockParams::new(8).unwrap());
        let good = to_string(&AnyField::Clock(u));
        assert!(matches!(from_str("CLOCKFIELD v2\n"), Err(Error::Parse { line: 1, .. })));
        let bad_domain = good.replacen("disk 0.0 0.0 1.0", "disk 0 0 -1", 1);
        assert!(matches!(from_str(&bad_domain), Err(Error::Parse { line: 2, .. })));
        let mut lines: Vec<String> = good.lines().map(String::from).collect();
        let site = lines[3].rsplit_once(' ').unwrap().0.to_string();
        lines[3] = format!("{site} 9");
        let bad_index = lines.join("\n");
        assert!(matches!(from_str(&bad_index), Err(Error::Parse { line: 4, .. })));
        let truncated: String = good.lines().take(6).map(|l| format!("{l}\n")).collect();
        assert!(from_str(&truncated).is_err());
        let extra = format!("{good}0 0 1\n");
        assert!(from_str(&extra).is_err());
    }
}
