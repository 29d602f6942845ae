use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InteractionMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// `user::item::rating::timestamp`.
    MovielensDat,
    Csv,
    Tsv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "movielens-dat" | "dat" => Ok(Self::MovielensDat),
            "csv" => Ok(Self::Csv),
            "tsv" => Ok(Self::Tsv),
            _ => Err(Error::InvalidArgument(format!("unknown format '{s}'"))),
        }
    }
}

impl Format {
    /// Guesses from the file extension; `.dat` is MovieLens.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "dat" => Some(Self::MovielensDat),
            "csv" => Some(Self::Csv),
            "tsv" | "tab" => Some(Self::Tsv),
            _ => None,
        }
    }

    fn split<'a>(&self, line: &'a str) -> Vec<&'a str> {
        let parts: Vec<&str> = match self {
            Self::MovielensDat => line.split("::").collect(),
            Self::Csv => line.split(',').collect(),
            Self::Tsv => line.split('\t').collect(),
        };
        parts.into_iter().map(str::trim).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// Users with fewer distinct items are dropped.
    pub min_user_items: usize,
    /// With binarization every positive rating counts.
    pub binarize: bool,
    /// Ratings below this are dropped; a sensitivity-check knob.
    pub min_rating: Option<f64>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            min_user_items: 1,
            binarize: true,
            min_rating: None,
        }
    }
}

/// Parsed counts of a load, for reporting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadStats {
    pub raw_interactions: usize,
    pub dropped_by_rating: usize,
    pub dropped_users: usize,
    pub header_skipped: bool,
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

/// Loads a user-item interaction file. Indices follow first appearance,
/// duplicates collapse to the latest timestamp.
///
/// A first line whose fields are all non-numeric is taken as a header.
pub fn load_interactions(path: &Path, format: Format, opts: &LoadOptions) -> Result<(InteractionMatrix, LoadStats)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_interactions(&text, format, opts, &path.display().to_string())
}

pub fn parse_interactions(
    text: &str,
    format: Format,
    opts: &LoadOptions,
    origin: &str,
) -> Result<(InteractionMatrix, LoadStats)> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: origin.into(),
        line,
        msg,
    };
    let mut stats = LoadStats::default();
    let mut user_index: HashMap<&str, usize> = HashMap::new();
    let mut item_index: HashMap<&str, usize> = HashMap::new();
    let mut user_ids = Vec::new();
    let mut item_ids = Vec::new();
    let mut rows: Vec<Vec<(usize, Option<i64>)>> = Vec::new();
    let mut timed = None;

    for (ln, line) in text.lines().enumerate() {
        let line_no = ln + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields = format.split(line);
        if stats.raw_interactions == 0 && !stats.header_skipped && fields.iter().all(|f| !is_number(f)) {
            stats.header_skipped = true;
            continue;
        }
        if fields.len() < 2 || fields.len() > 4 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(parse_err(line_no, format!("expected 2 to 4 fields, got '{line}'")));
        }
        let rating = match fields.get(2) {
            Some(r) => Some(
                r.parse::<f64>()
                    .ok()
                    .filter(|r| r.is_finite())
                    .ok_or_else(|| parse_err(line_no, format!("bad rating '{r}'")))?,
            ),
            None => None,
        };
        let ts = match fields.get(3) {
            Some(t) => Some(
                t.parse::<i64>()
                    .or_else(|_| t.parse::<f64>().map(|f| f as i64))
                    .map_err(|_| parse_err(line_no, format!("bad timestamp '{t}'")))?,
            ),
            None => None,
        };
        match timed {
            None => timed = Some(ts.is_some()),
            Some(t) if t != ts.is_some() => {
                return Err(parse_err(line_no, "timestamp column present on some lines only".into()));
            }
            _ => {}
        }
        stats.raw_interactions += 1;
        if let Some(r) = rating {
            let keep = match opts.min_rating {
                Some(min) => r >= min,
                None => !opts.binarize || r > 0.0,
            };
            if !keep {
                stats.dropped_by_rating += 1;
                continue;
            }
        }
        let u = *user_index.entry(fields[0]).or_insert_with(|| {
            user_ids.push(fields[0].to_string());
            rows.push(Vec::new());
            user_ids.len() - 1
        });
        let i = *item_index.entry(fields[1]).or_insert_with(|| {
            item_ids.push(fields[1].to_string());
            item_ids.len() - 1
        });
        rows[u].push((i, ts));
    }

    let min_items = opts.min_user_items.max(1);
    let distinct = |r: &Vec<(usize, Option<i64>)>| {
        let mut v: Vec<usize> = r.iter().map(|e| e.0).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    let keep: Vec<bool> = rows.iter().map(|r| distinct(r) >= min_items).collect();
    stats.dropped_users = keep.iter().filter(|k| !**k).count();
    let (rows, user_ids): (Vec<_>, Vec<_>) = rows
        .into_iter()
        .zip(user_ids)
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(p, _)| p)
        .unzip();

    // items seen only through dropped users are compacted away
    let mut used = vec![false; item_ids.len()];
    rows.iter().flatten().for_each(|e| used[e.0] = true);
    let mut remap = vec![usize::MAX; item_ids.len()];
    let mut kept_items = Vec::new();
    for (i, id) in item_ids.into_iter().enumerate() {
        if used[i] {
            remap[i] = kept_items.len();
            kept_items.push(id);
        }
    }
    let rows: Vec<Vec<(usize, Option<i64>)>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|(i, t)| (remap[i], t)).collect())
        .collect();
    if rows.is_empty() {
        return Err(Error::Data(format!("{origin}: no interactions left after filtering")));
    }
    let n_items = kept_items.len();
    let m = InteractionMatrix::build(n_items, rows, Some(user_ids), Some(kept_items), timed == Some(true))?;
    Ok((m, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: Format) -> Result<(InteractionMatrix, LoadStats)> {
        parse_interactions(text, format, &LoadOptions::default(), "mem")
    }

    #[test]
    fn movielens_duplicates_collapse() {
        let (m, s) = parse("1::10::5::100\n1::10::4::90\n2::11::3::50\n", Format::MovielensDat).unwrap();
        assert_eq!((m.n_users(), m.n_items(), m.nnz()), (2, 2, 2));
        assert_eq!(s.raw_interactions, 3);
        assert_eq!(m.row_timestamps(0).unwrap(), &[100]);
        assert_eq!(m.user_ids(), &["1", "2"]);
        assert_eq!(m.item_ids(), &["10", "11"]);
    }

    #[test]
    fn csv_header_skipped() {
        let (m, s) = parse("user,item,rating\nu1,a,1\nu2,b,4\nu1,b,2\n", Format::Csv).unwrap();
        assert!(s.header_skipped);
        assert_eq!((m.n_users(), m.n_items(), m.nnz()), (2, 2, 3));
        assert!(!m.has_timestamps());
        let (m, s) = parse("5\t7\n5\t8\n", Format::Tsv).unwrap();
        assert!(!s.header_skipped);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        match parse("1::2::3::4\n1::2::x::4\n", Format::MovielensDat) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse("1,2\n3\n", Format::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("", Format::Csv), Err(Error::Data(_))));
    }

    #[test]
    fn filters_apply() {
        let text = "1,a,5\n1,b,2\n2,a,4\n3,c,0\n";
        let opts = LoadOptions {
            min_user_items: 2,
            ..Default::default()
        };
        let (m, s) = parse_interactions(text, Format::Csv, &opts, "mem").unwrap();
        assert_eq!((m.n_users(), m.n_items(), s.dropped_users, s.dropped_by_rating), (1, 2, 1, 1));
        let opts = LoadOptions {
            min_rating: Some(4.0),
            ..Default::default()
        };
        let (m, _) = parse_interactions(text, Format::Csv, &opts, "mem").unwrap();
        assert_eq!(m.nnz(), 2);
    }
}
