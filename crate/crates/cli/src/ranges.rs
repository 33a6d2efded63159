//! `--ranges` grids: `n=0..6,m=4..8,l=2`, bounds inclusive.

use std::ops::RangeInclusive;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ranges {
    pub n: Option<RangeInclusive<usize>>,
    pub m: Option<RangeInclusive<usize>>,
    pub l: Option<RangeInclusive<usize>>,
}

fn bound(s: &str, what: &str) -> Result<usize, String> {
    s.trim()
        .parse()
        .map_err(|_| format!("bad bound `{s}` for {what}"))
}

pub fn parse(spec: &str) -> Result<Ranges, String> {
    let mut out = Ranges::default();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=range, got `{part}`"))?;
        let range = match value.split_once("..") {
            Some((lo, hi)) => {
                let hi = hi.strip_prefix('=').unwrap_or(hi);
                bound(lo, key)?..=bound(hi, key)?
            }
            None => {
                let v = bound(value, key)?;
                v..=v
            }
        };
        if range.is_empty() {
            return Err(format!("empty range for {key}"));
        }
        let slot = match key.trim() {
            "n" => &mut out.n,
            "m" => &mut out.m,
            "l" => &mut out.l,
            other => return Err(format!("unknown range key `{other}` (use n, m, l)")),
        };
        if slot.replace(range).is_some() {
            return Err(format!("{key} given twice"));
        }
    }
    if out.n.is_none() {
        return Err("ranges must include n".into());
    }
    Ok(out)
}
