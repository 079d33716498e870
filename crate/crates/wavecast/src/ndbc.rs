//! NDBC standard-meteorological file ingest: parsing, sentinel handling and
//! multi-station alignment.
//!
//! Annual stdmet archives are whitespace-separated text with one or two
//! header lines starting with `#` (column labels, units). Rows carry either
//! 4 time columns (YY MM DD hh) or 5 (with minutes), followed by the
//! meteorological features. Missing values are coded with sentinels whose
//! width depends on the column: 99.0 for the 4-wide columns, 999.0 for the
//! 3-digit direction columns and 9999.0 for pressure.

use chrono::NaiveDateTime;
use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt;
use thiserror::Error;

/// The closed set of stdmet features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureId {
    Wdir,
    Wspd,
    Gst,
    Wvht,
    Dpd,
    Apd,
    Mwd,
    Pres,
    Atmp,
    Wtmp,
    Dewp,
    Vis,
    Tide,
}

impl FeatureId {
    pub const ALL: [FeatureId; 13] = [
        FeatureId::Wdir,
        FeatureId::Wspd,
        FeatureId::Gst,
        FeatureId::Wvht,
        FeatureId::Dpd,
        FeatureId::Apd,
        FeatureId::Mwd,
        FeatureId::Pres,
        FeatureId::Atmp,
        FeatureId::Wtmp,
        FeatureId::Dewp,
        FeatureId::Vis,
        FeatureId::Tide,
    ];

    pub fn label(self) -> &'static str {
        match self {
            FeatureId::Wdir => "WDIR",
            FeatureId::Wspd => "WSPD",
            FeatureId::Gst => "GST",
            FeatureId::Wvht => "WVHT",
            FeatureId::Dpd => "DPD",
            FeatureId::Apd => "APD",
            FeatureId::Mwd => "MWD",
            FeatureId::Pres => "PRES",
            FeatureId::Atmp => "ATMP",
            FeatureId::Wtmp => "WTMP",
            FeatureId::Dewp => "DEWP",
            FeatureId::Vis => "VIS",
            FeatureId::Tide => "TIDE",
        }
    }

    pub fn from_label(label: &str) -> Option<FeatureId> {
        match label {
            "WDIR" | "WD" => Some(FeatureId::Wdir),
            "WSPD" => Some(FeatureId::Wspd),
            "GST" => Some(FeatureId::Gst),
            "WVHT" => Some(FeatureId::Wvht),
            "DPD" => Some(FeatureId::Dpd),
            "APD" => Some(FeatureId::Apd),
            "MWD" => Some(FeatureId::Mwd),
            "PRES" | "BAR" => Some(FeatureId::Pres),
            "ATMP" => Some(FeatureId::Atmp),
            "WTMP" => Some(FeatureId::Wtmp),
            "DEWP" => Some(FeatureId::Dewp),
            "VIS" => Some(FeatureId::Vis),
            "TIDE" => Some(FeatureId::Tide),
            _ => None,
        }
    }

    /// Missing-value sentinel assigned by NDBC column width.
    pub fn sentinel(self) -> f64 {
        match self {
            FeatureId::Wdir | FeatureId::Mwd => 999.0,
            FeatureId::Pres => 9999.0,
            _ => 99.0,
        }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

const SENTINEL_TOL: f64 = 1e-9;

/// True iff `raw` equals the feature's missing sentinel (within 1e-9).
pub fn is_missing(feature: FeatureId, raw: f64) -> bool {
    (raw - feature.sentinel()).abs() <= SENTINEL_TOL
}

/// One parsed observation: a minute-precision instant and per-feature values.
/// A value is either present-and-finite or absent; sentinel numbers never
/// survive parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct StationRecord {
    pub timestamp: NaiveDateTime,
    pub values: HashMap<FeatureId, f64>,
}

impl StationRecord {
    pub fn get(&self, feature: FeatureId) -> Option<f64> {
        self.values.get(&feature).copied()
    }
}

/// Time-ordered records from one station file (or several files of the same
/// station appended together).
#[derive(Debug, Clone)]
pub struct StationSeries {
    pub station_id: String,
    pub records: Vec<StationRecord>,
    pub features: Vec<FeatureId>,
}

/// Bookkeeping from a parse: how many rows were kept, dropped and why.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub rows_read: usize,
    pub rows_rejected: usize,
    pub duplicate_timestamps: usize,
    pub missing_counts: BTreeMap<FeatureId, usize>,
    /// (line number, reason) for each rejected row.
    pub rejections: Vec<(usize, String)>,
}

impl IngestReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("key,value\n");
        out.push_str(&format!("rows_read,{}\n", self.rows_read));
        out.push_str(&format!("rows_rejected,{}\n", self.rows_rejected));
        out.push_str(&format!("duplicate_timestamps,{}\n", self.duplicate_timestamps));
        for (f, n) in &self.missing_counts {
            out.push_str(&format!("missing_{},{}\n", f.label(), n));
        }
        out
    }

    pub fn summary(&self) -> String {
        format!(
            "{} rows read, {} rejected, {} duplicate timestamps dropped",
            self.rows_read, self.rows_rejected, self.duplicate_timestamps
        )
    }
}

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input")]
    EmptyInput,
    #[error("no parsable data rows")]
    NoData,
    #[error("station alignment produced an empty table")]
    EmptyIntersection,
    #[error("wanted column {0}/{1} not present in its series")]
    MissingWantedColumn(String, String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("fetch failed: {0}")]
    Fetch(String),
}

fn map_two_digit_year(yy: i32) -> i32 {
    if yy >= 70 {
        1900 + yy
    } else {
        2000 + yy
    }
}

/// Parse one annual stdmet file. Header lines starting with `#` are consumed
/// for column labels when present; otherwise the standard 13-feature order is
/// assumed with the time-column count inferred from the row width.
pub fn parse_stdmet(station_id: &str, text: &str) -> Result<(StationSeries, IngestReport), IngestError> {
    if text.trim().is_empty() {
        return Err(IngestError::EmptyInput);
    }

    let mut report = IngestReport::default();
    let mut header_features: Option<(usize, Vec<FeatureId>)> = None; // (time cols, feature order)

    let mut records: Vec<StationRecord> = Vec::new();
    let mut seen: BTreeMap<NaiveDateTime, ()> = BTreeMap::new();
    let mut features_present: Vec<FeatureId> = Vec::new();

    for (line_no, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let is_hash_header = trimmed.starts_with('#');
        let body = trimmed.trim_start_matches('#').trim();
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let first_is_numeric = tokens[0].parse::<f64>().is_ok();
        if is_hash_header || !first_is_numeric {
            // Label line: remember the column layout. The units line has no
            // recognizable feature labels and is skipped.
            let mut time_cols = 0usize;
            let mut feats = Vec::new();
            for tok in &tokens {
                match *tok {
                    "YY" | "YYYY" | "MM" | "DD" | "hh" | "mm" => time_cols += 1,
                    other => {
                        if let Some(f) = FeatureId::from_label(other) {
                            feats.push(f);
                        }
                    }
                }
            }
            if time_cols >= 4 && !feats.is_empty() {
                header_features = Some((time_cols, feats));
            }
            continue;
        }

        report.rows_read += 1;
        let (time_cols, feats) = match &header_features {
            Some((t, f)) => (*t, f.clone()),
            None => match tokens.len() {
                17 => (4, FeatureId::ALL.to_vec()),
                18 => (5, FeatureId::ALL.to_vec()),
                n => {
                    report.rows_rejected += 1;
                    report
                        .rejections
                        .push((line_no + 1, format!("unrecognized column count {n}")));
                    continue;
                }
            },
        };

        if tokens.len() != time_cols + feats.len() {
            report.rows_rejected += 1;
            report.rejections.push((
                line_no + 1,
                format!("expected {} columns, got {}", time_cols + feats.len(), tokens.len()),
            ));
            continue;
        }

        let parse_int = |s: &str| s.parse::<i32>().ok();
        let year_raw = parse_int(tokens[0]);
        let month = parse_int(tokens[1]);
        let day = parse_int(tokens[2]);
        let hour = parse_int(tokens[3]);
        let minute = if time_cols == 5 { parse_int(tokens[4]) } else { Some(0) };

        let timestamp = match (year_raw, month, day, hour, minute) {
            (Some(y), Some(mo), Some(d), Some(h), Some(mi)) => {
                let year = if y < 100 { map_two_digit_year(y) } else { y };
                chrono::NaiveDate::from_ymd_opt(year, mo as u32, d as u32)
                    .and_then(|date| date.and_hms_opt(h as u32, mi as u32, 0))
            }
            _ => None,
        };
        let Some(timestamp) = timestamp else {
            report.rows_rejected += 1;
            report
                .rejections
                .push((line_no + 1, "unparseable timestamp".to_string()));
            continue;
        };

        if seen.contains_key(&timestamp) {
            report.duplicate_timestamps += 1;
            continue;
        }

        let mut values = HashMap::new();
        let mut row_ok = true;
        for (idx, feature) in feats.iter().enumerate() {
            let tok = tokens[time_cols + idx];
            match tok.parse::<f64>() {
                Ok(raw) if raw.is_finite() => {
                    if is_missing(*feature, raw) {
                        *report.missing_counts.entry(*feature).or_insert(0) += 1;
                    } else {
                        values.insert(*feature, raw);
                    }
                }
                _ => {
                    row_ok = false;
                    report
                        .rejections
                        .push((line_no + 1, format!("bad value '{tok}' for {feature}")));
                    break;
                }
            }
        }
        if !row_ok {
            report.rows_rejected += 1;
            continue;
        }

        seen.insert(timestamp, ());
        records.push(StationRecord { timestamp, values });
        if features_present.is_empty() {
            features_present = feats;
        }
    }

    if records.is_empty() {
        return Err(IngestError::NoData);
    }
    records.sort_by_key(|r| r.timestamp);

    Ok((
        StationSeries {
            station_id: station_id.to_string(),
            records,
            features: features_present,
        },
        report,
    ))
}

/// Re-serialize a series in the 5-time-column stdmet layout (debug writer;
/// parse → write → parse is idempotent at the record level).
pub fn write_stdmet(series: &StationSeries) -> String {
    let mut out = String::from("#YY  MM DD hh mm");
    for f in &series.features {
        out.push_str(&format!(" {:>5}", f.label()));
    }
    out.push('\n');
    for rec in &series.records {
        use chrono::{Datelike, Timelike};
        let t = rec.timestamp;
        out.push_str(&format!(
            "{:04} {:02} {:02} {:02} {:02}",
            t.year(),
            t.month(),
            t.day(),
            t.hour(),
            t.minute()
        ));
        for f in &series.features {
            let v = rec.get(*f).unwrap_or_else(|| f.sentinel());
            out.push_str(&format!(" {:>5}", format_value(v)));
        }
        out.push('\n');
    }
    out
}

fn format_value(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 && v.abs() < 10000.0 {
        format!("{:.1}", v)
    } else {
        format!("{:.2}", v)
    }
}

/// Identifies one column of an aligned table.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnKey {
    pub station: String,
    pub name: String,
}

impl ColumnKey {
    pub fn new(station: &str, name: &str) -> Self {
        ColumnKey {
            station: station.to_string(),
            name: name.to_string(),
        }
    }

    pub fn feature(station: &str, feature: FeatureId) -> Self {
        ColumnKey::new(station, feature.label())
    }
}

impl fmt::Display for ColumnKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.station, self.name)
    }
}

/// Multiple stations joined on shared timestamps; every cell is present.
#[derive(Debug, Clone)]
pub struct AlignedTable {
    pub timestamps: Vec<NaiveDateTime>,
    columns: Vec<(ColumnKey, Vec<f64>)>,
}

impl AlignedTable {
    pub fn new(timestamps: Vec<NaiveDateTime>, columns: Vec<(ColumnKey, Vec<f64>)>) -> Self {
        for (_, col) in &columns {
            assert_eq!(col.len(), timestamps.len(), "ragged aligned table");
        }
        AlignedTable { timestamps, columns }
    }

    pub fn n_rows(&self) -> usize {
        self.timestamps.len()
    }

    pub fn column_keys(&self) -> impl Iterator<Item = &ColumnKey> {
        self.columns.iter().map(|(k, _)| k)
    }

    pub fn column(&self, key: &ColumnKey) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, c)| c.as_slice())
    }

    pub fn push_column(&mut self, key: ColumnKey, values: Vec<f64>) {
        assert_eq!(values.len(), self.timestamps.len());
        self.columns.push((key, values));
    }

    /// Row-subset view used by chronological splitting.
    pub fn slice_rows(&self, start: usize, end: usize) -> AlignedTable {
        AlignedTable {
            timestamps: self.timestamps[start..end].to_vec(),
            columns: self
                .columns
                .iter()
                .map(|(k, c)| (k.clone(), c[start..end].to_vec()))
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("timestamp");
        for (k, _) in &self.columns {
            out.push_str(&format!(",{k}"));
        }
        out.push('\n');
        for i in 0..self.n_rows() {
            out.push_str(&self.timestamps[i].format("%Y-%m-%dT%H:%M:%SZ").to_string());
            for (_, c) in &self.columns {
                out.push_str(&format!(",{:.6}", c[i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Join stations on the timestamps they all share, dropping any timestamp
/// where one of the wanted features is missing. Column order follows the
/// input order of `wanted`.
pub fn align_stations(
    series: &[StationSeries],
    wanted: &[(String, FeatureId)],
) -> Result<AlignedTable, IngestError> {
    for (station, feature) in wanted {
        let s = series
            .iter()
            .find(|s| &s.station_id == station)
            .ok_or_else(|| IngestError::MissingWantedColumn(station.clone(), feature.label().to_string()))?;
        if !s.features.contains(feature) {
            return Err(IngestError::MissingWantedColumn(
                station.clone(),
                feature.label().to_string(),
            ));
        }
    }

    let mut maps: HashMap<&str, BTreeMap<NaiveDateTime, &StationRecord>> = HashMap::new();
    for s in series {
        let m = s.records.iter().map(|r| (r.timestamp, r)).collect();
        maps.insert(s.station_id.as_str(), m);
    }

    let first = &series[0];
    let mut timestamps = Vec::new();
    let mut columns: Vec<(ColumnKey, Vec<f64>)> = wanted
        .iter()
        .map(|(st, f)| (ColumnKey::feature(st, *f), Vec::new()))
        .collect();

    'ts: for rec in &first.records {
        let t = rec.timestamp;
        // shared across every input series
        for s in &series[1..] {
            if !maps[s.station_id.as_str()].contains_key(&t) {
                continue 'ts;
            }
        }
        let mut row = Vec::with_capacity(wanted.len());
        for (station, feature) in wanted {
            match maps[station.as_str()][&t].get(*feature) {
                Some(v) => row.push(v),
                None => continue 'ts,
            }
        }
        timestamps.push(t);
        for (col, v) in columns.iter_mut().zip(row) {
            col.1.push(v);
        }
    }

    if timestamps.is_empty() {
        return Err(IngestError::EmptyIntersection);
    }
    Ok(AlignedTable::new(timestamps, columns))
}

/// Append several parses of the same station (typically consecutive annual
/// files) into one chronological series. Duplicate timestamps keep the first
/// occurrence; the feature list is the union.
pub fn merge_series(mut parts: Vec<StationSeries>) -> StationSeries {
    assert!(!parts.is_empty(), "nothing to merge");
    assert!(
        parts.iter().all(|p| p.station_id == parts[0].station_id),
        "cannot merge different stations"
    );
    let station_id = parts[0].station_id.clone();
    let mut features = Vec::new();
    for p in &parts {
        for f in &p.features {
            if !features.contains(f) {
                features.push(*f);
            }
        }
    }
    let mut records: Vec<StationRecord> = parts.drain(..).flat_map(|p| p.records).collect();
    records.sort_by_key(|r| r.timestamp);
    records.dedup_by_key(|r| r.timestamp);
    StationSeries {
        station_id,
        records,
        features,
    }
}

/// A buoy-year is "refined" when it has at least 1000 records with both WVHT
/// and APD present.
pub fn refined_station_filter(series: &StationSeries, year: i32) -> bool {
    use chrono::Datelike;
    let clean = series
        .records
        .iter()
        .filter(|r| r.timestamp.year() == year)
        .filter(|r| r.get(FeatureId::Wvht).is_some() && r.get(FeatureId::Apd).is_some())
        .count();
    clean >= 1000
}

/// Download one annual stdmet archive. `url_template` substitutes `{station}`
/// and `{year}`; gzip payloads are decompressed transparently. Network access
/// is opt-in at the CLI level.
pub fn fetch_stdmet(url_template: &str, station: &str, year: i32) -> Result<String, IngestError> {
    use std::io::Read;
    let url = url_template
        .replace("{station}", station)
        .replace("{year}", &year.to_string());
    let resp = reqwest::blocking::get(&url).map_err(|e| IngestError::Fetch(e.to_string()))?;
    if !resp.status().is_success() {
        return Err(IngestError::Fetch(format!("{url}: HTTP {}", resp.status())));
    }
    let bytes = resp.bytes().map_err(|e| IngestError::Fetch(e.to_string()))?;
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        let mut gz = flate2::read::GzDecoder::new(&bytes[..]);
        let mut out = String::new();
        gz.read_to_string(&mut out)
            .map_err(|e| IngestError::Fetch(format!("gzip: {e}")))?;
        Ok(out)
    } else {
        String::from_utf8(bytes.to_vec()).map_err(|e| IngestError::Fetch(e.to_string()))
    }
}

/// Default historical-archive URL template for NDBC stdmet files.
pub const DEFAULT_URL_TEMPLATE: &str =
    "https://www.ndbc.noaa.gov/view_text_file.php?filename={station}h{year}.txt.gz&dir=data/historical/stdmet/";
