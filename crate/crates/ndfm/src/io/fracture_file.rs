use std::fmt::Write;

use ndfm_core::{parse_expr, Curve, Fracture, FractureNetwork, Point2};

use super::{content_lines, parse_num, FormatError};

/// Splits on whitespace, keeping double-quoted tokens intact.
fn tokenize(line: &str, ln: usize) -> Result<Vec<String>, FormatError> {
    let mut out = Vec::new();
    let mut chars = line.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut tok = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => tok.push(ch),
                    None => return Err(FormatError::new(ln, "unterminated quote")),
                }
            }
            out.push(tok);
        } else {
            let mut tok = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() {
                    break;
                }
                tok.push(ch);
                chars.next();
            }
            out.push(tok);
        }
    }
    Ok(out)
}

/// Reads `SEG`, `POLY` and `CIRC` lines into a network.
pub fn parse_fractures(text: &str) -> Result<FractureNetwork, FormatError> {
    let mut fractures = Vec::new();
    for (ln, line) in content_lines(text) {
        let t = tokenize(line, ln)?;
        let num = |i: usize| parse_num::<f64>(&t[i], ln, "number");
        let (npos, need) = match t[0].as_str() {
            "SEG" => (5, 7),
            "CIRC" => (6, 8),
            "POLY" => {
                let n: usize = t
                    .get(1)
                    .ok_or_else(|| FormatError::new(ln, "POLY needs a vertex count"))
                    .and_then(|s| parse_num(s, ln, "vertex count"))?;
                if n < 2 {
                    return Err(FormatError::new(ln, "POLY needs at least 2 vertices"));
                }
                (2 + 2 * n, 4 + 2 * n)
            }
            other => {
                return Err(FormatError::new(
                    ln,
                    format!("unknown fracture kind `{other}` (expected SEG, POLY or CIRC)"),
                ))
            }
        };
        if t.len() != need {
            return Err(FormatError::new(ln, format!("{} line needs {} fields, found {}", t[0], need, t.len())));
        }
        let curve = match t[0].as_str() {
            "SEG" => Ok(Curve::segment(Point2::new(num(1)?, num(2)?), Point2::new(num(3)?, num(4)?))),
            "CIRC" => Curve::arc(Point2::new(num(1)?, num(2)?), num(3)?, num(4)?, num(5)?),
            _ => {
                let pts = (0..(npos - 2) / 2)
                    .map(|k| Ok(Point2::new(num(2 + 2 * k)?, num(3 + 2 * k)?)))
                    .collect::<Result<Vec<_>, FormatError>>()?;
                Curve::polyline(pts)
            }
        }
        .map_err(|e| FormatError::new(ln, e.to_string()))?;
        let expr = |i: usize, what: &str| parse_expr(&t[i]).map_err(|e| FormatError::new(ln, format!("{what}: {e}")));
        fractures.push(Fracture::new(curve, expr(npos, "aperture")?, expr(npos + 1, "permeability")?));
    }
    Ok(FractureNetwork::new(fractures))
}

/// Writes a network in the fracture file format. Parametric curves have no
/// textual form and are refused.
pub fn write_fractures(network: &FractureNetwork) -> Result<String, FormatError> {
    let mut s = String::new();
    for (i, f) in network.fractures.iter().enumerate() {
        let coeffs = format!("\"{}\" \"{}\"", f.aperture, f.tang_perm);
        match &f.curve {
            Curve::Segment(g) => writeln!(s, "SEG {:?} {:?} {:?} {:?} {coeffs}", g.a.x, g.a.y, g.b.x, g.b.y),
            Curve::Arc(a) => {
                writeln!(s, "CIRC {:?} {:?} {:?} {:?} {:?} {coeffs}", a.center.x, a.center.y, a.radius, a.t0, a.t1)
            }
            Curve::Polyline(p) => {
                let pts: Vec<String> = p.vertices().iter().map(|v| format!("{:?} {:?}", v.x, v.y)).collect();
                writeln!(s, "POLY {} {} {coeffs}", pts.len(), pts.join(" "))
            }
            Curve::Parametric(_) => {
                return Err(FormatError::new(0, format!("fracture {i} is a general parametric curve")))
            }
        }
        .unwrap();
    }
    Ok(s)
}
