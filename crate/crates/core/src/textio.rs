//! Text formats: statistics files, Gram files and CSV reports.
//!
//! Statistics and Gram files are `key=value` lines; blank lines and lines
//! starting with `#` are ignored. Canonical output writes headers first and
//! then body keys in sorted order, every value with 12 significant digits.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::protocols::KeyRateReport;
use crate::stats::{AttackStats, Label, PsiMode, TwoWayStats};
use crate::tomography::{GramEstimates, Interval, Pair, TwoWayGram};

/// Significant digits in every written value.
pub const SIG_DIGITS: usize = 12;

/// Formats `v` with [`SIG_DIGITS`] significant digits, trailing zeros
/// trimmed. Very small magnitudes use exponent notation.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    if v.abs() < 1e-6 || v.abs() >= 1e15 {
        let s = format!("{:.*e}", SIG_DIGITS - 1, v);
        let (mant, exp) = s.split_once('e').expect("exponent form");
        let mant = trim_zeros(mant);
        return format!("{mant}e{exp}");
    }
    let mag = v.abs().log10().floor() as i32;
    let decimals = (SIG_DIGITS as i32 - 1 - mag).max(0) as usize;
    let s = trim_zeros(&format!("{v:.decimals$}"));
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

/// `key=value` lines with their 1-based line numbers.
fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    let mut seen = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let (key, value) =
            t.split_once('=').ok_or_else(|| Error::Parse { line, msg: format!("expected key=value, got '{t}'") })?;
        let key = key.trim().to_string();
        if let Some(prev) = seen.insert(key.clone(), line) {
            return Err(Error::Parse { line, msg: format!("duplicate key '{key}' (first on line {prev})") });
        }
        out.push((line, key, value.trim().to_string()));
    }
    Ok(out)
}

fn parse_f64(line: usize, key: &str, v: &str) -> Result<f64> {
    let x: f64 = v.parse().map_err(|_| Error::Parse { line, msg: format!("'{key}': '{v}' is not a number") })?;
    if !x.is_finite() {
        return Err(Error::Parse { line, msg: format!("'{key}' is not finite") });
    }
    Ok(x)
}

fn parse_label(line: usize, s: &str) -> Result<Label> {
    s.parse().map_err(|_| Error::Parse { line, msg: format!("unknown state label '{s}'") })
}

fn parse_bit(line: usize, s: &str) -> Result<usize> {
    match s {
        "0" => Ok(0),
        "1" => Ok(1),
        _ => Err(Error::Parse { line, msg: format!("expected 0 or 1, got '{s}'") }),
    }
}

/// A parsed statistics file.
#[derive(Debug, Clone, PartialEq)]
pub enum StatsFile {
    OneWay(AttackStats),
    TwoWay(TwoWayStats),
}

#[derive(Default)]
struct Headers {
    psi: Option<PsiMode>,
    alpha: Option<f64>,
    beta: Option<f64>,
}

impl Headers {
    fn take(&mut self, line: usize, key: &str, value: &str) -> Result<bool> {
        match key {
            "psi" => {
                let n: u8 = value
                    .parse()
                    .map_err(|_| Error::Parse { line, msg: format!("psi must be 3 or 4, got '{value}'") })?;
                self.psi = Some(PsiMode::from_number(n).map_err(|e| Error::Parse { line, msg: e.to_string() })?);
            }
            "alpha" => self.alpha = Some(parse_f64(line, key, value)?),
            "beta" => self.beta = Some(parse_f64(line, key, value)?),
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn require(&self) -> Result<(PsiMode, f64, f64)> {
        let miss = |k: &str| Error::Parse { line: 0, msg: format!("missing header '{k}'") };
        Ok((
            self.psi.ok_or_else(|| miss("psi"))?,
            self.alpha.ok_or_else(|| miss("alpha"))?,
            self.beta.ok_or_else(|| miss("beta"))?,
        ))
    }
}

/// Parses a one-way or two-way statistics file. A file is two-way when it
/// contains any `qa`, `r,...` or four-part `p,...` key.
pub fn parse_stats(text: &str) -> Result<StatsFile> {
    let pairs = parse_pairs(text)?;
    let mut h = Headers::default();
    let mut one: Vec<(usize, Label, Label, f64)> = Vec::new();
    let mut refl: Vec<(usize, Label, Label, f64)> = Vec::new();
    let mut second_z: BTreeMap<(usize, usize, usize), f64> = BTreeMap::new();
    let mut second_a: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut qa = None;
    let mut two_way = false;
    for (line, key, value) in &pairs {
        let (line, key, value) = (*line, key.as_str(), value.as_str());
        if h.take(line, key, value)? {
            continue;
        }
        if key == "qa" {
            qa = Some(parse_f64(line, key, value)?);
            two_way = true;
            continue;
        }
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        let v = parse_f64(line, key, value)?;
        match parts.as_slice() {
            ["p", s, o] => one.push((line, parse_label(line, s)?, parse_label(line, o)?, v)),
            ["r", s, o] => {
                refl.push((line, parse_label(line, s)?, parse_label(line, o)?, v));
                two_way = true;
            }
            ["p", x, i, j] => {
                two_way = true;
                let i = parse_bit(line, i)?;
                let x_idx = if *x == "a" { 2 } else { parse_bit(line, x)? };
                if *j == "a" {
                    second_a.insert((x_idx, i), v);
                } else if x_idx < 2 {
                    second_z.insert((x_idx, i, parse_bit(line, j)?), v);
                } else {
                    return Err(Error::Parse { line, msg: format!("'{key}': Z re-measurement needs x in {{0, 1}}") });
                }
            }
            _ => return Err(Error::Parse { line, msg: format!("unknown key '{key}'") }),
        }
    }
    let (psi, alpha, beta) = h.require()?;
    let build = |rows: &[(usize, Label, Label, f64)], psi: PsiMode| -> Result<AttackStats> {
        let mut s = AttackStats::new(psi, alpha, beta);
        for &(line, a, b, v) in rows {
            if !psi.sent_states().contains(&a) || !psi.bases().contains(&b.basis()) {
                return Err(Error::Parse { line, msg: format!("p,{a},{b} is not a Psi{} statistic", psi.number()) });
            }
            s.set(a, b, v);
        }
        s.validate()?;
        Ok(s)
    };
    if !two_way {
        return Ok(StatsFile::OneWay(build(&one, psi)?));
    }
    if psi != PsiMode::Psi3 {
        return Err(Error::Parse { line: 0, msg: "two-way statistics files use psi=3".into() });
    }
    let missing = |k: String| Error::MissingStatistic(k);
    let mut z = [[[0.0; 2]; 2]; 2];
    for x in 0..2 {
        for i in 0..2 {
            let p0 = second_z.get(&(x, i, 0)).copied();
            let p1 = second_z.get(&(x, i, 1)).copied();
            let (p0, p1) = match (p0, p1) {
                (Some(a), Some(b)) => (a, b),
                (Some(a), None) => (a, 1.0 - a),
                (None, Some(b)) => (1.0 - b, b),
                (None, None) => return Err(missing(format!("p,{x},{i},0"))),
            };
            z[x][i] = [p0, p1];
        }
    }
    let mut sa = [[0.0; 2]; 3];
    for (x, row) in sa.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            let name = if x == 2 { "a".to_string() } else { x.to_string() };
            *cell = *second_a.get(&(x, i)).ok_or_else(|| missing(format!("p,{name},{i},a")))?;
        }
    }
    let tw = TwoWayStats {
        alpha,
        beta,
        forward: build(&one, PsiMode::Psi3)?,
        second_z: z,
        second_a: sa,
        reflect: build(&refl, PsiMode::Psi3)?,
        qa: qa.ok_or_else(|| missing("qa".into()))?,
    };
    tw.validate()?;
    Ok(StatsFile::TwoWay(tw))
}

fn header_lines(out: &mut String, psi: PsiMode, alpha: f64, beta: f64) {
    out.push_str(&format!("psi={}\n", psi.number()));
    out.push_str(&format!("alpha={}\n", format_value(alpha)));
    out.push_str(&format!("beta={}\n", format_value(beta)));
}

fn body_lines(out: &mut String, body: BTreeMap<String, f64>) {
    for (k, v) in body {
        out.push_str(&format!("{k}={}\n", format_value(v)));
    }
}

fn stats_body(prefix: &str, stats: &AttackStats, body: &mut BTreeMap<String, f64>) {
    for (&(s, o), &p) in &stats.entries {
        body.insert(format!("{prefix},{s},{o}"), p);
    }
}

/// Canonical one-way statistics file.
pub fn write_stats(stats: &AttackStats) -> String {
    let mut out = String::new();
    header_lines(&mut out, stats.psi, stats.alpha, stats.beta);
    let mut body = BTreeMap::new();
    stats_body("p", stats, &mut body);
    body_lines(&mut out, body);
    out
}

/// Canonical two-way statistics file.
pub fn write_two_way_stats(tw: &TwoWayStats) -> String {
    let mut out = String::new();
    header_lines(&mut out, PsiMode::Psi3, tw.alpha, tw.beta);
    let mut body = BTreeMap::new();
    stats_body("p", &tw.forward, &mut body);
    stats_body("r", &tw.reflect, &mut body);
    for x in 0..2 {
        for i in 0..2 {
            for j in 0..2 {
                body.insert(format!("p,{x},{i},{j}"), tw.second_z[x][i][j]);
            }
        }
    }
    for (x, row) in tw.second_a.iter().enumerate() {
        let name = if x == 2 { "a".to_string() } else { x.to_string() };
        for (i, &p) in row.iter().enumerate() {
            body.insert(format!("p,{name},{i},a"), p);
        }
    }
    body.insert("qa".into(), tw.qa);
    body_lines(&mut out, body);
    out
}

/// A parsed Gram file.
#[derive(Debug, Clone, PartialEq)]
pub enum GramFile {
    OneWay(GramEstimates),
    TwoWay(TwoWayGram),
}

fn interval_entries(body: &mut BTreeMap<String, f64>, key: String, iv: Interval) {
    if iv.is_point() {
        body.insert(key, iv.lo);
    } else {
        body.insert(format!("{key}_lo"), iv.lo);
        body.insert(format!("{key}_hi"), iv.hi);
    }
}

fn gram_entries(prefix: &str, g: &GramEstimates, body: &mut BTreeMap<String, f64>) {
    for (i, n) in g.norms.iter().enumerate() {
        body.insert(format!("{prefix}n_{i}"), *n);
    }
    for p in Pair::ALL {
        interval_entries(body, format!("{prefix}re_{}", p.suffix()), g.re(p));
        interval_entries(body, format!("{prefix}im_{}", p.suffix()), g.im(p));
    }
    body.insert(format!("{prefix}sum_03_12"), g.sum_03_12);
}

fn hop_name(h: usize) -> String {
    let (i, j) = crate::attack::HOPS[h];
    format!("{i}{j}")
}

/// Canonical one-way Gram file.
pub fn write_gram(g: &GramEstimates) -> String {
    let mut out = format!("kind=one-way\npsi={}\n", g.psi.number());
    let mut body = BTreeMap::new();
    gram_entries("", g, &mut body);
    body_lines(&mut out, body);
    out
}

/// Canonical two-way Gram file. Reflection-channel entries carry a `v_`
/// prefix.
pub fn write_two_way_gram(g: &TwoWayGram) -> String {
    let mut out = format!("kind=two-way\npsi={}\n", g.reflect.psi.number());
    let mut body = BTreeMap::new();
    for h in 0..4 {
        for k in 0..2 {
            body.insert(format!("n_{}_{k}", hop_name(h)), g.norms[h][k]);
        }
        body.insert(format!("hop_{}", hop_name(h)), g.second_hop[h]);
    }
    body.insert("s0".into(), g.s0);
    body.insert("s1".into(), g.s1);
    body.insert("c".into(), g.c);
    body.insert("qa".into(), g.qa);
    for (i, cap) in g.caps.iter().enumerate() {
        body.insert(format!("cap_{}", i + 1), *cap);
    }
    gram_entries("v_", &g.reflect, &mut body);
    body_lines(&mut out, body);
    out
}

struct Values {
    map: BTreeMap<String, f64>,
}

impl Values {
    fn get(&self, k: &str) -> Result<f64> {
        self.map.get(k).copied().ok_or_else(|| Error::MissingStatistic(k.to_string()))
    }

    fn interval(&self, k: &str) -> Result<Interval> {
        if let Some(v) = self.map.get(k) {
            return Ok(Interval::point(*v));
        }
        Interval::new(self.get(&format!("{k}_lo"))?, self.get(&format!("{k}_hi"))?)
    }

    fn gram(&self, prefix: &str, psi: PsiMode) -> Result<GramEstimates> {
        let mut norms = [0.0; 4];
        for (i, n) in norms.iter_mut().enumerate() {
            *n = self.get(&format!("{prefix}n_{i}"))?;
        }
        let mut g = GramEstimates {
            psi,
            norms,
            re: [Interval::point(0.0); 6],
            im: [Interval::point(0.0); 6],
            sum_03_12: self.get(&format!("{prefix}sum_03_12"))?,
        };
        for p in Pair::ALL {
            g.set_re(p, self.interval(&format!("{prefix}re_{}", p.suffix()))?);
            g.set_im(p, self.interval(&format!("{prefix}im_{}", p.suffix()))?);
        }
        Ok(g)
    }
}

/// Parses a Gram file written by [`write_gram`] or [`write_two_way_gram`].
pub fn parse_gram(text: &str) -> Result<GramFile> {
    let mut kind = None;
    let mut psi = None;
    let mut map = BTreeMap::new();
    for (line, key, value) in parse_pairs(text)? {
        match key.as_str() {
            "kind" => kind = Some((line, value)),
            "psi" => {
                let n: u8 = value
                    .parse()
                    .map_err(|_| Error::Parse { line, msg: format!("psi must be 3 or 4, got '{value}'") })?;
                psi = Some(PsiMode::from_number(n).map_err(|e| Error::Parse { line, msg: e.to_string() })?);
            }
            _ => {
                map.insert(key.clone(), parse_f64(line, &key, &value)?);
            }
        }
    }
    let psi = psi.ok_or_else(|| Error::Parse { line: 0, msg: "missing header 'psi'".into() })?;
    let vals = Values { map };
    match kind {
        Some((_, k)) if k == "one-way" => Ok(GramFile::OneWay(vals.gram("", psi)?)),
        Some((line, k)) if k == "two-way" => {
            if psi != PsiMode::Psi3 {
                return Err(Error::Parse { line, msg: "two-way Gram files use psi=3".into() });
            }
            let mut norms = [[0.0; 2]; 4];
            let mut second_hop = [0.0; 4];
            for h in 0..4 {
                for k in 0..2 {
                    norms[h][k] = vals.get(&format!("n_{}_{k}", hop_name(h)))?;
                }
                second_hop[h] = vals.get(&format!("hop_{}", hop_name(h)))?;
            }
            let mut caps = [0.0; 4];
            for (i, cap) in caps.iter_mut().enumerate() {
                *cap = vals.get(&format!("cap_{}", i + 1))?;
            }
            Ok(GramFile::TwoWay(TwoWayGram {
                norms,
                second_hop,
                s0: vals.get("s0")?,
                s1: vals.get("s1")?,
                reflect: vals.gram("v_", psi)?,
                qa: vals.get("qa")?,
                c: vals.get("c")?,
                caps,
            }))
        }
        Some((line, k)) => Err(Error::Parse { line, msg: format!("unknown kind '{k}'") }),
        None => Err(Error::Parse { line: 0, msg: "missing header 'kind'".into() }),
    }
}

/// Column names of the report CSV.
pub const REPORT_COLUMNS: [&str; 9] =
    ["protocol", "psi", "alpha_key", "rate", "entropy_bound", "cond_shannon", "distillable", "minimizer", "params"];

/// CSV report with one row per key-rate result. The minimizer column holds
/// `name=value` pairs joined by `;`, the params column the four Opt-Π
/// parameters joined by `;`.
pub fn write_reports(reports: &[KeyRateReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(REPORT_COLUMNS).map_err(io)?;
    for r in reports {
        let minimizer: Vec<String> = r.minimizer.iter().map(|(k, v)| format!("{k}={}", format_value(*v))).collect();
        let params = r.params.map(|p| p.as_array().map(format_value).join(";")).unwrap_or_default();
        w.write_record([
            r.protocol.as_str().to_string(),
            r.psi.number().to_string(),
            r.alpha_key.map(format_value).unwrap_or_default(),
            format_value(r.rate),
            format_value(r.entropy_bound),
            format_value(r.cond_shannon),
            format_value(r.distillable()),
            minimizer.join(";"),
            params,
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
}

/// Generic CSV table with a header row; used for the reproduction tables.
pub fn write_table(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Domain(format!("csv: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Domain(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Domain(e.to_string()))
}
