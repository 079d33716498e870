//! Parse a small standard-meteorological snippet, then align two stations on
//! their shared timestamps.
//!
//!     cargo run --example parse_stdmet

use wavecast::ndbc::{align_stations, parse_stdmet, ColumnKey, FeatureId};

const STATION_A: &str = "\
#YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE
#yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC  nmi    ft
2009 01 01 00 00 311  5.6  6.8  2.05 14.29  8.14 999 1020.1  12.8  14.2 999.0 99.0 99.00
2009 01 01 01 00 295  4.2  5.1  2.10 13.79  8.02 999 1020.4  12.5  14.2 999.0 99.0 99.00
2009 01 01 02 00 290  3.9  4.7 99.00 13.79  7.95 999 1020.6  12.3  14.1 999.0 99.0 99.00
2009 01 01 03 00 285  3.1  3.9  1.98 12.90  7.80 999 1020.8  12.1  14.1 999.0 99.0 99.00
";

const STATION_B: &str = "\
#YY  MM DD hh mm WDIR WSPD GST  WVHT   DPD   APD MWD   PRES  ATMP  WTMP  DEWP  VIS  TIDE
#yr  mo dy hr mn degT m/s  m/s     m   sec   sec degT   hPa  degC  degC  degC  nmi    ft
2009 01 01 00 00 300  6.0  7.1  1.85 14.29  7.90 999 1019.8  13.0  14.5 999.0 99.0 99.00
2009 01 01 01 00 298  5.5  6.5  1.90 13.79  7.85 999 1020.0  12.9  14.5 999.0 99.0 99.00
2009 01 01 03 00 290  4.0  4.8  1.80 12.90  7.60 999 1020.3  12.6  14.4 999.0 99.0 99.00
";

fn main() {
    let (series_a, report_a) = parse_stdmet("46025", STATION_A).unwrap();
    let (series_b, report_b) = parse_stdmet("46069", STATION_B).unwrap();
    println!("46025: {}", report_a.summary());
    println!("46069: {}", report_b.summary());

    let wanted = vec![
        ("46025".to_string(), FeatureId::Wvht),
        ("46069".to_string(), FeatureId::Wvht),
    ];
    let table = align_stations(&[series_a, series_b], &wanted).unwrap();
    // the 02:00 row is missing at B and the 46025 WVHT sentinel also falls
    // on 02:00, so three shared rows remain
    println!("\naligned rows: {}", table.n_rows());
    let a = table.column(&ColumnKey::new("46025", "WVHT")).unwrap();
    let b = table.column(&ColumnKey::new("46069", "WVHT")).unwrap();
    for (i, ts) in table.timestamps.iter().enumerate() {
        println!("{ts}  46025={:.2} m  46069={:.2} m", a[i], b[i]);
    }
}
