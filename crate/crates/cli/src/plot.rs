//! Minimal SVG charts. Numeric x columns give a line chart, anything else a
//! bar chart. Each point carries its y value as a text label copied verbatim
//! from the input, so a chart can be spot-checked against its CSV.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 56.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Reads a headed CSV, or a training log of `key=value` tokens per line.
    pub fn parse(data: &[u8]) -> Result<Self, String> {
        let text = std::str::from_utf8(data).map_err(|_| "input is not UTF-8".to_string())?;
        let first = text.lines().next().unwrap_or("");
        if first.contains('=') && !first.contains(',') {
            return Self::parse_log(text);
        }
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(data);
        let headers = rdr.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
        let rows = rdr
            .records()
            .map(|r| r.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| e.to_string()))
            .collect::<Result<Vec<Vec<String>>, _>>()?;
        Ok(Self { headers, rows })
    }

    fn parse_log(text: &str) -> Result<Self, String> {
        let mut headers: Vec<String> = Vec::new();
        let mut rows = Vec::new();
        for (i, line) in text.lines().filter(|l| !l.trim().is_empty()).enumerate() {
            let pairs: Vec<(&str, &str)> = line
                .split_whitespace()
                .map(|tok| tok.split_once('=').ok_or_else(|| format!("line {}: token {tok:?} is not key=value", i + 1)))
                .collect::<Result<_, _>>()?;
            let keys: Vec<String> = pairs.iter().map(|(k, _)| k.to_string()).collect();
            if headers.is_empty() {
                headers = keys;
            } else if headers != keys {
                return Err(format!("line {}: keys differ from the first line", i + 1));
            }
            rows.push(pairs.iter().map(|(_, v)| v.to_string()).collect());
        }
        Ok(Self { headers, rows })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn parse_num(s: &str, what: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{what}: {s:?} is not a finite number"))
}

pub fn render(table: &Table, y: &str, title: &str) -> Result<String, String> {
    if table.headers.len() < 2 {
        return Err("need at least two columns".into());
    }
    if table.rows.is_empty() {
        return Err("no data rows".into());
    }
    let yc = table.column(y).ok_or_else(|| format!("no column named {y:?}"))?;
    if yc == 0 {
        return Err("the first column is the x axis".into());
    }
    let ys: Vec<f64> = table.rows.iter().map(|r| parse_num(&r[yc], y)).collect::<Result<_, _>>()?;
    let xs: Option<Vec<f64>> = table.rows.iter().map(|r| parse_num(&r[0], "x").ok()).collect();

    let (ylo, yhi) = span(&ys);
    let py = |v: f64| H - PAD - (v - ylo) / (yhi - ylo) * (H - 2.0 * PAD);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, W / 2.0, escape(title));
    axes(&mut s, &table.headers[0], y, ylo, yhi);

    match xs {
        Some(xs) => {
            let (xlo, xhi) = span(&xs);
            let px = |v: f64| PAD + (v - xlo) / (xhi - xlo) * (W - 2.0 * PAD);
            let pts: Vec<String> = xs.iter().zip(&ys).map(|(&x, &y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1.5" points="{}"/>"##,
                pts.join(" ")
            );
            let _ = writeln!(s, r#"<text x="{PAD}" y="{}" font-size="10">{}</text>"#, H - PAD + 16.0, xlo);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#,
                W - PAD,
                H - PAD + 16.0,
                xhi
            );
            for (r, (&x, &yv)) in table.rows.iter().zip(xs.iter().zip(&ys)) {
                let _ = writeln!(
                    s,
                    r##"<circle cx="{:.2}" cy="{:.2}" r="2" fill="#1f77b4"/><text class="value" x="{:.2}" y="{:.2}" font-size="7" text-anchor="middle">{}</text>"##,
                    px(x),
                    py(yv),
                    px(x),
                    py(yv) - 4.0,
                    escape(&r[yc])
                );
            }
        }
        None => {
            let n = table.rows.len() as f64;
            let slot = (W - 2.0 * PAD) / n;
            for (i, (r, &yv)) in table.rows.iter().zip(&ys).enumerate() {
                let x = PAD + slot * i as f64 + slot * 0.15;
                let base = py(ylo.max(0.0).min(yhi));
                let top = py(yv);
                let _ = writeln!(
                    s,
                    r##"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#ff7f0e"/>"##,
                    top.min(base),
                    slot * 0.7,
                    (base - top).abs()
                );
                let cx = x + slot * 0.35;
                let _ = writeln!(
                    s,
                    r#"<text class="value" x="{cx:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
                    top.min(base) - 4.0,
                    escape(&r[yc])
                );
                let _ = writeln!(
                    s,
                    r#"<text x="{cx:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
                    H - PAD + 16.0,
                    escape(&r[0])
                );
            }
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn span(v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi > lo {
        (lo, hi)
    } else {
        (lo, lo + 1.0)
    }
}

fn axes(s: &mut String, xname: &str, yname: &str, ylo: f64, yhi: f64) {
    let _ = writeln!(
        s,
        r#"<line x1="{PAD}" y1="{}" x2="{}" y2="{}" stroke="black"/><line x1="{PAD}" y1="{PAD}" x2="{PAD}" y2="{}" stroke="black"/>"#,
        H - PAD,
        W - PAD,
        H - PAD,
        H - PAD
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#,
        W / 2.0,
        H - 12.0,
        escape(xname)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(yname)
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{ylo}</text>"#, PAD - 4.0, H - PAD);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end" font-size="10">{yhi}</text>"#, PAD - 4.0, PAD + 4.0);
}
