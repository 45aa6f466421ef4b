use std::sync::Arc;

use chrono::{Duration, NaiveDate};
use sha2::{Digest, Sha256};

use super::{
    analyze_range, catalog, desertification, ndvi, ndwi, ImageRef, RangeExtras, StationFamily, ToolContext, ToolsError,
};
use crate::canon::{date_start, GeoPoint};
use crate::llm::{ChatMessage, ChatRequest, Purpose};
use crate::toolkit::{
    Emissions, FailureCode, Measurement, Payload, Readings, SeriesPayload, SeriesPoint, ToolExecutor, ToolFailure,
    ToolManifest, ToolRegistry, TypedArgs,
};

type Exec = Arc<dyn ToolExecutor>;

fn arg_error(msg: impl Into<String>) -> ToolFailure {
    ToolFailure::new(FailureCode::ArgError, msg)
}

fn measurements_on(
    ctx: &ToolContext,
    family: StationFamily,
    at: GeoPoint,
    date: NaiveDate,
) -> Result<(GeoPoint, Vec<Measurement>), ToolFailure> {
    let data = ctx.provider.station_rows(family, at, date, date)?;
    if data.rows.is_empty() {
        return Err(ToolFailure::new(FailureCode::NoDataForDate, format!("no {} data for {date}", family.as_str())));
    }
    let mut values: Vec<Measurement> = data
        .rows
        .into_iter()
        .map(|r| Measurement {
            variable: r.variable,
            value: r.value,
            unit: r.unit,
            timestamp: Some(date_start(date)),
            location: Some(data.station),
            uncertainty: None,
        })
        .collect();
    values.sort_by(|a, b| a.variable.cmp(&b.variable));
    Ok((data.station, values))
}

fn readings(ctx: &ToolContext, family: StationFamily, args: &TypedArgs) -> Result<Payload, ToolFailure> {
    let date = args.date("date")?;
    let (station, values) = measurements_on(ctx, family, args.lat_lon()?, date)?;
    Ok(Payload::Readings(Readings { timestamp: date_start(date), location: station, values }))
}

fn rain(ctx: &ToolContext, args: &TypedArgs) -> Result<Payload, ToolFailure> {
    let date = args.date("date")?;
    let (_, values) = measurements_on(ctx, StationFamily::Rain, args.lat_lon()?, date)?;
    values
        .into_iter()
        .find(|m| m.variable == "precipitation")
        .map(Payload::Measurement)
        .ok_or_else(|| ToolFailure::new(FailureCode::NoDataForDate, format!("no precipitation for {date}")))
}

fn range(
    ctx: &ToolContext,
    family: StationFamily,
    variable: &str,
    extras: RangeExtras,
    args: &TypedArgs,
) -> Result<Payload, ToolFailure> {
    let (start, end) = (args.date("start")?, args.date("end")?);
    if start > end {
        return Err(arg_error(format!("start {start} is after end {end}")));
    }
    let data = ctx.provider.station_rows(family, args.lat_lon()?, start, end)?;
    let canonical = ctx
        .units
        .canonical_unit(variable)
        .map_err(|e| ToolFailure::new(FailureCode::Normalization, e.to_string()))?
        .to_string();
    let mut points = Vec::new();
    let mut day = start;
    while day <= end {
        let value = match data.rows.iter().find(|r| r.date == day && r.variable == variable) {
            Some(r) => Some(
                ctx.units
                    .normalize(r.value, &r.unit, variable)
                    .map_err(|e| ToolFailure::new(FailureCode::Normalization, e.to_string()))?
                    .0,
            ),
            None => None,
        };
        points.push(SeriesPoint { timestamp: date_start(day), value });
        day += Duration::days(1);
    }
    let report = analyze_range(
        variable,
        &canonical,
        data.station,
        date_start(start),
        date_start(end),
        points,
        ctx.config.z_threshold,
        extras,
    )?;
    Ok(Payload::Analysis(report))
}

fn forecast(ctx: &ToolContext, variable: &str, horizon_arg: &str, args: &TypedArgs) -> Result<Payload, ToolFailure> {
    let horizon = args.opt_integer(horizon_arg).unwrap_or(i64::from(ctx.config.default_forecast_days));
    let horizon = u32::try_from(horizon).map_err(|_| arg_error(format!("`{horizon_arg}` must be positive")))?;
    let f = ctx.provider.forecast(variable, args.lat_lon()?, horizon)?;
    let points = f
        .values
        .iter()
        .enumerate()
        .map(|(k, v)| SeriesPoint { timestamp: date_start(f.first_day + Duration::days(k as i64)), value: Some(*v) })
        .collect();
    Ok(Payload::Series(SeriesPayload { variable: f.variable, unit: f.unit, location: f.station, points }))
}

fn image_for(ctx: &ToolContext, args: &TypedArgs, name: &str) -> Result<super::RasterImage, ToolFailure> {
    let r: ImageRef = args.text(name)?.parse()?;
    ctx.provider.image(r.point, r.date)
}

fn summarize(ctx: &ToolContext, args: &TypedArgs) -> Result<Payload, ToolFailure> {
    let text = args.text("text")?;
    if text.trim().is_empty() {
        return Err(arg_error("nothing to summarize"));
    }
    let key = hex::encode(Sha256::digest(text.as_bytes()))[..16].to_string();
    let budget = ctx.config.summary_words;
    let prompt = format!("Summarize in at most {budget} words, keeping numbers, places and dates:\n\n{text}");
    let out = ctx
        .backend
        .complete(&ChatRequest::new(Purpose::Summarize, key, 0, vec![ChatMessage::user(prompt)]))
        .map_err(|e| ToolFailure::new(FailureCode::ProviderFailure, e.to_string()))?;
    let words: Vec<&str> = out.split_whitespace().collect();
    Ok(Payload::Summary { text: words[..words.len().min(budget)].join(" ") })
}

fn executor(name: &str, ctx: &ToolContext) -> Option<Exec> {
    let c = ctx.clone();
    let e: Exec = match name {
        "geocode_mapping" => Arc::new(move |a: &TypedArgs| {
            let m = c.provider.geocode(a.text("region")?)?;
            Ok(Payload::Location { point: m.city.point, name: m.city.name, country: m.city.country })
        }),
        "weather_inquiry" => Arc::new(move |a: &TypedArgs| readings(&c, StationFamily::Weather, a)),
        "aqi_inquiry" => Arc::new(move |a: &TypedArgs| readings(&c, StationFamily::Aqi, a)),
        "rain_inquiry" => Arc::new(move |a: &TypedArgs| rain(&c, a)),
        "river_discharge_check" => Arc::new(move |a: &TypedArgs| {
            Ok(Payload::Measurement(c.provider.discharge(a.lat_lon()?, a.date("date")?)?))
        }),
        "weather_forecast" => Arc::new(move |a: &TypedArgs| forecast(&c, "temperature", "days", a)),
        "rain_prediction" => Arc::new(move |a: &TypedArgs| forecast(&c, "precipitation", "horizon", a)),
        "aqi_prediction" => Arc::new(move |a: &TypedArgs| forecast(&c, "aqi", "horizon", a)),
        "uv_index_forecast" => Arc::new(move |a: &TypedArgs| forecast(&c, "uv_index", "horizon", a)),
        "pollen_forecast" => Arc::new(move |a: &TypedArgs| forecast(&c, "pollen", "horizon", a)),
        "weather_analysis" => {
            Arc::new(move |a: &TypedArgs| range(&c, StationFamily::Weather, "temperature", RangeExtras::None, a))
        }
        "rain_analysis" => Arc::new(move |a: &TypedArgs| {
            range(&c, StationFamily::Rain, "precipitation", RangeExtras::Events(c.config.heavy_rain_mm), a)
        }),
        "aqi_analysis" => Arc::new(move |a: &TypedArgs| {
            range(&c, StationFamily::Aqi, "aqi", RangeExtras::Exceedances(c.config.aqi_exceedance), a)
        }),
        "get_satellite_image" => Arc::new(move |a: &TypedArgs| {
            let r = ImageRef { point: a.lat_lon()?, date: a.date("date")? };
            let img = c.provider.image(r.point, r.date)?;
            Ok(Payload::Image(img.handle(&r)))
        }),
        "calculate_ndvi" => Arc::new(move |a: &TypedArgs| Ok(Payload::IndexMap(ndvi(&image_for(&c, a, "image")?)?))),
        "calculate_ndwi" => Arc::new(move |a: &TypedArgs| Ok(Payload::IndexMap(ndwi(&image_for(&c, a, "image")?)?))),
        "desertification_analysis" => Arc::new(move |a: &TypedArgs| {
            let (before, after) = (image_for(&c, a, "image1")?, image_for(&c, a, "image2")?);
            Ok(Payload::ChangeReport(desertification(&before, &after, c.config.degradation_threshold)?))
        }),
        "carbon_footprint_calculation" => Arc::new(move |a: &TypedArgs| {
            let (country, industry, year) = (a.text("country")?, a.text("industry")?, a.integer("year")?);
            let revenue = a.real("revenue")?;
            let factor = c.provider.emission_factor(country, industry, year)?;
            Ok(Payload::Emissions(Emissions {
                country: country.to_string(),
                industry: industry.to_string(),
                year,
                revenue,
                factor,
                value: revenue * factor,
                unit: "tCO2e".into(),
            }))
        }),
        "online_search" => Arc::new(move |a: &TypedArgs| {
            Ok(Payload::SearchResults { results: c.search.search(a.text("query")?, c.config.search_results)? })
        }),
        "summarize" => Arc::new(move |a: &TypedArgs| summarize(&c, a)),
        "detect_bird" => Arc::new(move |a: &TypedArgs| {
            Ok(Payload::Candidates { candidates: c.provider.species(a.text("audio_clip")?)? })
        }),
        "detect_species" => {
            Arc::new(move |a: &TypedArgs| Ok(Payload::Candidates { candidates: c.provider.species(a.text("image")?)? }))
        }
        _ => return None,
    };
    Some(e)
}

/// Registers every enabled manifest entry, checking it names the family
/// that actually implements the tool.
pub fn build_registry(manifest: &ToolManifest, ctx: &ToolContext) -> Result<ToolRegistry, ToolsError> {
    let catalog = catalog();
    let mut builder = ToolRegistry::builder().units(Arc::clone(&ctx.units));
    for entry in manifest.tools.iter().filter(|e| e.enabled) {
        let known = catalog
            .iter()
            .find(|c| c.signature.name == entry.name)
            .ok_or_else(|| ToolsError::UnknownTool(entry.name.clone()))?;
        if known.family.as_str() != entry.family {
            return Err(ToolsError::FamilyMismatch {
                tool: entry.name.clone(),
                manifest: entry.family.clone(),
                actual: known.family.as_str().to_string(),
            });
        }
        let exec = executor(&entry.name, ctx).ok_or_else(|| ToolsError::UnknownTool(entry.name.clone()))?;
        builder.register(known.signature.clone(), exec, entry.timeout())?;
    }
    Ok(builder.build())
}
