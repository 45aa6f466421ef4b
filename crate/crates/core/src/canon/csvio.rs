//! The universal CSV row format:
//! `timestamp,variable,value,unit,lat,lon,city,source`.

use std::io::{Read, Write};

use csv::{QuoteStyle, ReaderBuilder, Terminator, WriterBuilder};

use super::{format_timestamp, CanonError, CanonicalRecord, CanonicalSeries, GeoPoint, UnitTable};

pub const CANONICAL_HEADER: [&str; 8] = ["timestamp", "variable", "value", "unit", "lat", "lon", "city", "source"];

/// Writes the header plus one row per record and returns the row count.
pub fn write_canonical_csv<W: Write>(series: &CanonicalSeries, sink: W) -> Result<usize, CanonError> {
    let mut w =
        WriterBuilder::new().quote_style(QuoteStyle::Necessary).terminator(Terminator::Any(b'\n')).from_writer(sink);
    let sink_err = |e: csv::Error| CanonError::SinkFailure(e.to_string());
    w.write_record(CANONICAL_HEADER).map_err(sink_err)?;
    for r in series.records() {
        let value = r.value.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([
            format_timestamp(&r.timestamp).as_str(),
            r.variable.as_str(),
            value.as_str(),
            r.unit.as_str(),
            r.location.lat().to_string().as_str(),
            r.location.lon().to_string().as_str(),
            r.city.as_deref().unwrap_or(""),
            r.source.as_str(),
        ])
        .map_err(sink_err)?;
    }
    w.flush().map_err(|e| CanonError::SinkFailure(e.to_string()))?;
    Ok(series.len())
}

pub fn canonical_csv_string(series: &CanonicalSeries) -> String {
    let mut buf = Vec::new();
    write_canonical_csv(series, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn read_canonical_csv<R: Read>(source: R, units: &UnitTable) -> Result<CanonicalSeries, CanonError> {
    let mut rdr = ReaderBuilder::new().has_headers(true).from_reader(source);
    let parse_err = |row: usize, msg: String| CanonError::CsvParse { row, message: msg };
    let header = rdr.headers().map_err(|e| parse_err(0, e.to_string()))?;
    if header.iter().ne(CANONICAL_HEADER.iter().copied()) {
        return Err(parse_err(0, format!("unexpected header {:?}", header)));
    }
    let mut records = Vec::new();
    for (idx, row) in rdr.records().enumerate() {
        let row_no = idx + 1;
        let row = row.map_err(|e| parse_err(row_no, e.to_string()))?;
        let field = |i: usize| row.get(i).unwrap_or("");
        let timestamp = chrono::DateTime::parse_from_rfc3339(field(0))
            .map_err(|e| parse_err(row_no, e.to_string()))?
            .with_timezone(&chrono::Utc);
        let value = match field(2) {
            "" => None,
            s => Some(s.parse::<f64>().map_err(|e| parse_err(row_no, e.to_string()))?),
        };
        let lat: f64 = field(4).parse().map_err(|_| parse_err(row_no, "bad lat".into()))?;
        let lon: f64 = field(5).parse().map_err(|_| parse_err(row_no, "bad lon".into()))?;
        records.push(CanonicalRecord {
            timestamp,
            variable: field(1).to_string(),
            value,
            unit: field(3).to_string(),
            location: GeoPoint::new(lat, lon)?,
            city: Some(field(6)).filter(|c| !c.is_empty()).map(str::to_string),
            source: field(7).to_string(),
        });
    }
    CanonicalSeries::new(records, units)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn series(values: &[Option<f64>], city: Option<&str>) -> CanonicalSeries {
        let t0 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let records = values
            .iter()
            .enumerate()
            .map(|(i, v)| CanonicalRecord {
                timestamp: t0 + Duration::hours(6 * i as i64),
                variable: "temperature".into(),
                value: *v,
                unit: "°C".into(),
                location: GeoPoint::new(25.2854, 51.531).unwrap(),
                city: city.map(str::to_string),
                source: "era5,fixture".into(),
            })
            .collect();
        CanonicalSeries::new(records, UnitTable::builtin()).unwrap()
    }

    #[test]
    fn empty_series_writes_header_only() {
        let s = canonical_csv_string(&CanonicalSeries::empty());
        assert_eq!(s, "timestamp,variable,value,unit,lat,lon,city,source\n");
    }

    #[test]
    fn exact_dialect() {
        let s = series(&[Some(30.5), None, Some(-1.25)], Some("Doha"));
        let mut buf = Vec::new();
        assert_eq!(write_canonical_csv(&s, &mut buf).unwrap(), 3);
        let text = String::from_utf8(buf).unwrap();
        let expected = "timestamp,variable,value,unit,lat,lon,city,source\n\
            2020-01-01T00:00:00Z,temperature,30.5,°C,25.2854,51.531,Doha,\"era5,fixture\"\n\
            2020-01-01T06:00:00Z,temperature,,°C,25.2854,51.531,Doha,\"era5,fixture\"\n\
            2020-01-01T12:00:00Z,temperature,-1.25,°C,25.2854,51.531,Doha,\"era5,fixture\"\n";
        assert_eq!(text, expected);
    }

    #[test]
    fn rejects_wrong_header() {
        let err = read_canonical_csv("a,b\n".as_bytes(), UnitTable::builtin());
        assert!(matches!(err, Err(CanonError::CsvParse { row: 0, .. })));
    }

    #[test]
    fn thousand_record_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let values: Vec<Option<f64>> =
            (0..1000).map(|_| if rng.gen_bool(0.1) { None } else { Some(rng.gen_range(-60.0..60.0)) }).collect();
        let s = series(&values, None);
        let back = read_canonical_csv(canonical_csv_string(&s).as_bytes(), UnitTable::builtin()).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn round_trip_is_lossless(values in prop::collection::vec(prop::option::of(-1e6f64..1e6), 0..60),
                                  city in prop::option::of("[A-Za-z ]{1,12}")) {
            let s = series(&values, city.as_deref().map(str::trim).filter(|c| !c.is_empty()));
            let back = read_canonical_csv(canonical_csv_string(&s).as_bytes(), UnitTable::builtin()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
