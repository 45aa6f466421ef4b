//! Small in-memory registry shared by unit tests.

use std::sync::Arc;

use chrono::{Duration, TimeZone, Utc};

use crate::canon::GeoPoint;
use crate::toolkit::{
    Measurement, ParamSpec, ParamType, Payload, ReturnKind, SeriesPayload, SeriesPoint, ToolCategory, ToolRegistry,
    ToolSignature, TypedArgs,
};

fn doha() -> GeoPoint {
    GeoPoint::new(25.2854, 51.531).unwrap()
}

pub(crate) fn registry() -> ToolRegistry {
    let mut b = ToolRegistry::builder();
    let latlon = || {
        vec![
            ParamSpec::required("lat", ParamType::Real).range(Some(-90.0), Some(90.0)),
            ParamSpec::required("lon", ParamType::Real).range(Some(-180.0), Some(180.0)),
        ]
    };
    b.register(
        ToolSignature::new(
            "get_coordinates",
            ToolCategory::Geospatial,
            vec![ParamSpec::required("place", ParamType::String)],
            ReturnKind::Location,
            "geocode",
        )
        .unwrap(),
        Arc::new(|_: &TypedArgs| Ok(Payload::Location { point: doha(), name: "Doha".into(), country: "Qatar".into() })),
        None,
    )
    .unwrap();
    let mut rain = latlon();
    rain.push(ParamSpec::required("date", ParamType::Date));
    b.register(
        ToolSignature::new("rain_inquiry", ToolCategory::WeatherHydrology, rain, ReturnKind::Measurement, "rain")
            .unwrap(),
        Arc::new(|args: &TypedArgs| {
            Ok(Payload::Measurement(Measurement {
                variable: "precipitation".into(),
                value: 12.0,
                unit: "mm".into(),
                timestamp: Some(Utc.with_ymd_and_hms(2023, 4, 15, 0, 0, 0).unwrap()),
                location: Some(args.lat_lon()?),
                uncertainty: None,
            }))
        }),
        None,
    )
    .unwrap();
    b.register(
        ToolSignature::new(
            "temperature_series",
            ToolCategory::WeatherHydrology,
            latlon(),
            ReturnKind::Series,
            "series",
        )
        .unwrap(),
        Arc::new(|args: &TypedArgs| {
            let t0 = Utc.with_ymd_and_hms(2023, 4, 1, 0, 0, 0).unwrap();
            Ok(Payload::Series(SeriesPayload {
                variable: "temperature".into(),
                unit: "°C".into(),
                location: args.lat_lon()?,
                points: (0..5)
                    .map(|d| SeriesPoint { timestamp: t0 + Duration::days(d), value: Some(30.0 + d as f64) })
                    .collect(),
            }))
        }),
        None,
    )
    .unwrap();
    b.build()
}
