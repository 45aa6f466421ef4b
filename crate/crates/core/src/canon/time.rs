use chrono::{DateTime, FixedOffset, NaiveDate, NaiveDateTime, SecondsFormat, TimeZone, Utc};

use super::CanonError;

/// Zone used to interpret timestamps that carry no offset of their own.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Zone {
    Fixed(FixedOffset),
    Named(chrono_tz::Tz),
}

impl Zone {
    pub fn utc() -> Self {
        Zone::Fixed(FixedOffset::east_opt(0).expect("zero offset"))
    }

    /// Accepts `UTC`/`Z`, fixed offsets like `+04:00`, and IANA names like `Asia/Dubai`.
    pub fn parse(id: &str) -> Result<Self, CanonError> {
        let id = id.trim();
        if id.eq_ignore_ascii_case("utc") || id == "Z" {
            return Ok(Self::utc());
        }
        if let Some(offset) = parse_offset(id) {
            return Ok(Zone::Fixed(offset));
        }
        id.parse::<chrono_tz::Tz>().map(Zone::Named).map_err(|_| CanonError::UnknownZone(id.to_string()))
    }

    fn localize(&self, naive: NaiveDateTime) -> Option<DateTime<Utc>> {
        match self {
            Zone::Fixed(off) => off.from_local_datetime(&naive).earliest().map(|d| d.with_timezone(&Utc)),
            Zone::Named(tz) => tz.from_local_datetime(&naive).earliest().map(|d| d.with_timezone(&Utc)),
        }
    }
}

fn parse_offset(s: &str) -> Option<FixedOffset> {
    let (sign, rest) = match s.as_bytes().first()? {
        b'+' => (1, &s[1..]),
        b'-' => (-1, &s[1..]),
        _ => return None,
    };
    let (h, m) = match rest.split_once(':') {
        Some((h, m)) => (h, m),
        None if rest.len() == 4 => rest.split_at(2),
        None if rest.len() <= 2 => (rest, "0"),
        None => return None,
    };
    let h: i32 = h.parse().ok()?;
    let m: i32 = m.parse().ok()?;
    if h > 23 || m > 59 {
        return None;
    }
    FixedOffset::east_opt(sign * (h * 3600 + m * 60))
}

const NAIVE_FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

/// Parses ISO-8601 (with or without offset), epoch seconds, or a bare date.
///
/// Bare dates map to midnight UTC regardless of `assumed_zone`; naive
/// datetimes are interpreted in `assumed_zone`.
pub fn normalize_timestamp(raw: &str, assumed_zone: &Zone) -> Result<DateTime<Utc>, CanonError> {
    let s = raw.trim();
    let fail = || CanonError::UnparseableTimestamp(raw.to_string());
    if s.is_empty() {
        return Err(fail());
    }
    let digits = s.strip_prefix('-').unwrap_or(s);
    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
        let secs: i64 = s.parse().map_err(|_| fail())?;
        return Utc.timestamp_opt(secs, 0).single().ok_or_else(fail);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.with_timezone(&Utc));
    }
    if let Ok(date) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(date.and_hms_opt(0, 0, 0).ok_or_else(fail)?.and_utc());
    }
    for fmt in NAIVE_FORMATS {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, fmt) {
            return assumed_zone.localize(naive).ok_or_else(fail);
        }
    }
    Err(fail())
}

/// RFC 3339 with a `Z` suffix; sub-second digits only when present.
pub fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

pub fn parse_date(s: &str) -> Result<NaiveDate, CanonError> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d").map_err(|_| CanonError::UnparseableTimestamp(s.to_string()))
}

pub fn date_start(date: NaiveDate) -> DateTime<Utc> {
    date.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utc() -> Zone {
        Zone::utc()
    }

    #[test]
    fn offset_timestamp_converts_to_utc() {
        let t = normalize_timestamp("2023-04-15T12:00:00+04:00", &utc()).unwrap();
        assert_eq!(format_timestamp(&t), "2023-04-15T08:00:00Z");
    }

    #[test]
    fn bare_date_is_midnight_utc() {
        let zone = Zone::parse("Asia/Dubai").unwrap();
        let t = normalize_timestamp("2023-04-15", &zone).unwrap();
        assert_eq!(format_timestamp(&t), "2023-04-15T00:00:00Z");
    }

    #[test]
    fn epoch_seconds() {
        let t = normalize_timestamp("1700000000", &utc()).unwrap();
        assert_eq!(format_timestamp(&t), "2023-11-14T22:13:20Z");
    }

    #[test]
    fn epoch_matches_day_count_oracle() {
        // Independent civil-from-days computation.
        fn civil(days: i64) -> (i64, u32, u32) {
            let z = days + 719_468;
            let era = z.div_euclid(146_097);
            let doe = z - era * 146_097;
            let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
            let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
            let mp = (5 * doy + 2) / 153;
            let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
            let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
            let y = yoe + era * 400 + i64::from(m <= 2);
            (y, m, d)
        }
        for secs in [0i64, 951_782_400, 1_700_000_000, 4_102_444_800] {
            let t = normalize_timestamp(&secs.to_string(), &utc()).unwrap();
            let (y, m, d) = civil(secs.div_euclid(86_400));
            let rem = secs.rem_euclid(86_400);
            let expect = format!("{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z", rem / 3600, (rem / 60) % 60, rem % 60);
            assert_eq!(format_timestamp(&t), expect);
        }
    }

    #[test]
    fn naive_uses_assumed_zone() {
        let zone = Zone::parse("+03:00").unwrap();
        let t = normalize_timestamp("2023-04-15 12:00:00", &zone).unwrap();
        assert_eq!(format_timestamp(&t), "2023-04-15T09:00:00Z");
        let named = Zone::parse("Asia/Qatar").unwrap();
        let t = normalize_timestamp("2023-04-15T12:00", &named).unwrap();
        assert_eq!(format_timestamp(&t), "2023-04-15T09:00:00Z");
    }

    #[test]
    fn garbage_is_rejected() {
        assert!(normalize_timestamp("last tuesday", &utc()).is_err());
        assert!(normalize_timestamp("", &utc()).is_err());
        assert!(Zone::parse("Mars/Olympus").is_err());
    }
}
