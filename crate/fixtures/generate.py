#!/usr/bin/env python3
"""Regenerates the offline fixture tree. Deterministic; run from anywhere."""

import csv
import datetime as dt
import hashlib
import json
import math
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent
PROV = ROOT / "providers"
AS_OF = dt.date(2023, 4, 15)

DOHA = (25.2854, 51.5310)
DUBAI = (25.2048, 55.2708)
AL_AIN = (24.2075, 55.7447)
KUWAIT = (29.3759, 47.9774)
RIYADH = (24.7136, 46.6753)
SPIKE_DAY = dt.date(2023, 3, 1)


def days(start, n):
    return [start + dt.timedelta(days=i) for i in range(n)]


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def stations(rng):
    span = days(AS_OF - dt.timedelta(days=89), 90)
    weather, rain, aqi = [], [], []
    for name, (lat, lon), base in [("doha", DOHA, 20.0), ("dubai", DUBAI, 21.0), ("kuwait", KUWAIT, 15.0),
                                   ("riyadh", RIYADH, 17.0), ("al_ain", AL_AIN, 19.0)]:
        for i, d in enumerate(span):
            c = base + 8.0 * i / 89 + rng.uniform(-0.5, 0.5)
            if name == "doha" and d == SPIKE_DAY:
                c += 12.0
            weather.append([lat, lon, d.isoformat(), "temperature", round(c + 273.15, 2), "K"])
            weather.append([lat, lon, d.isoformat(), "relative_humidity", round(rng.uniform(35, 75), 1), "%"])
            weather.append([lat, lon, d.isoformat(), "wind_speed", round(rng.uniform(5, 30), 1), "km/h"])
            mm = 0.0
            if rng.random() < 0.08:
                mm = round(rng.uniform(0.2, 6.0), 1)
            if name == "doha" and d == AS_OF:
                mm = 12.0
            if name == "doha" and d == dt.date(2023, 2, 10):
                mm = 15.5
            rain.append([lat, lon, d.isoformat(), "precipitation", mm, "mm"])
            idx = round(60 + 30 * math.sin(i / 9.0) + rng.uniform(-5, 5))
            if name == "doha" and d == AS_OF:
                idx = 87
            aqi.append([lat, lon, d.isoformat(), "aqi", idx, "index"])
            aqi.append([lat, lon, d.isoformat(), "pm2_5", round(rng.uniform(20, 60), 1), "ug/m3"])
    head = ["lat", "lon", "date", "variable", "value", "unit"]
    write_csv(PROV / "weather.csv", head, weather)
    write_csv(PROV / "rain.csv", head, rain)
    write_csv(PROV / "aqi.csv", head, aqi)


def forecasts(rng):
    rows = []
    for lat, lon in [DOHA, DUBAI, KUWAIT, RIYADH, AL_AIN]:
        for step in range(1, 17):
            rows.append([lat, lon, step, "temperature", round(29 + 0.3 * step + rng.uniform(-1, 1), 1), "°C"])
            rows.append([lat, lon, step, "precipitation", round(max(0.0, rng.uniform(-3, 2)), 1), "mm"])
            rows.append([lat, lon, step, "aqi", round(70 + rng.uniform(-15, 25)), "index"])
            rows.append([lat, lon, step, "uv_index", round(rng.uniform(8, 11), 1), "index"])
            rows.append([lat, lon, step, "pollen", round(rng.uniform(5, 40)), "grains/m3"])
    write_csv(PROV / "forecast.csv", ["lat", "lon", "step", "variable", "value", "unit"], rows)


def discharge(rng):
    lats = [25.20, 25.25, 25.30]
    lons = [55.25, 55.30, 55.35]
    mask = [0, 1, 0, 0, 1, 1, 0, 0, 1]
    lines = ["gridded-fixture 1", "source: fixture-river", "cadence_seconds: 86400",
             "lats: " + " ".join(map(str, lats)), "lons: " + " ".join(map(str, lons)),
             "mask: " + " ".join(map(str, mask)), "variable: discharge m3/s"]
    for d in days(AS_OF - dt.timedelta(days=29), 30):
        vals = [f"{rng.uniform(2, 9):.2f}" if m else "" for m in mask]
        lines.append(d.isoformat() + "," + ",".join(vals))
    (PROV / "discharge.grid").write_text("\n".join(lines) + "\n")


def image(point, date, red, green, nir):
    w = h = 4
    stamp = dt.datetime.combine(date, dt.time()).isoformat() + "Z"
    plane = lambda f: [[round(f(i, j), 4) for j in range(w)] for i in range(h)]
    return {"width": w, "height": h, "acquired": stamp, "location": {"lat": point[0], "lon": point[1]},
            "pixel_size_m": 10.0, "bands": {"red": plane(red), "green": plane(green), "nir": plane(nir)}}


def imagery():
    out = PROV / "imagery"
    # Doha coast: vegetated west half, water east half.
    write_json(out / "doha_2023-04-15.json", image(
        DOHA, AS_OF,
        red=lambda i, j: 0.08 if j < 2 else 0.05,
        green=lambda i, j: 0.10 if j < 2 else 0.30,
        nir=lambda i, j: 0.40 if j < 2 else 0.06))
    # Al Ain pair: uniform NDVI 0.5 before, half the pixels degraded after.
    write_json(out / "al_ain_2019-04-01.json", image(
        AL_AIN, dt.date(2019, 4, 1), red=lambda i, j: 0.1, green=lambda i, j: 0.12, nir=lambda i, j: 0.3))
    write_json(out / "al_ain_2023-04-01.json", image(
        AL_AIN, dt.date(2023, 4, 1),
        red=lambda i, j: 0.2 if i < 2 else 0.1, green=lambda i, j: 0.12,
        nir=lambda i, j: 0.25 if i < 2 else 0.3))


def species():
    write_csv(PROV / "species.csv", ["ref", "species", "confidence"], [
        ["audio:mangrove-dawn-01", "Eurasian Hoopoe", 0.82],
        ["audio:mangrove-dawn-01", "Crested Lark", 0.11],
        ["photo:sealine-dune-07", "Arabian Oryx", 0.91],
        ["photo:sealine-dune-07", "Arabian Gazelle", 0.06],
    ])
    write_csv(PROV / "emission_factors.csv", ["country", "industry", "year", "factor"], [
        ["Qatar", "oil_and_gas", 2022, 0.5],
        ["Qatar", "construction", 2022, 0.21],
        ["UAE", "oil_and_gas", 2022, 0.46],
        ["Saudi Arabia", "oil_and_gas", 2022, 0.52],
        ["Kuwait", "oil_and_gas", 2022, 0.55],
    ])
    (PROV / "provider.toml").write_text(
        f'as_of = "{AS_OF.isoformat()}"\nstation_radius_km = 50.0\nmax_horizon = 16\n')


DOCS = {
    "https://www.example.org/qatar/heat-stress-rules": (
        "Qatar heat stress rules",
        "<html><head><title>Qatar heat stress rules</title></head><body><nav>Home | News</nav>"
        "<article><h1>Summer working hours</h1><p>Qatar bans outdoor work between 10:00 and 15:30 from 1 June to "
        "15 September. Employers must provide shaded rest areas and cool drinking water.</p>"
        "<p>Inspectors may close sites that breach the rule. The wet bulb globe temperature threshold for stopping "
        "work is 32.1 degrees Celsius.</p></article><footer>Contact</footer></body></html>"),
    "https://www.example.org/uae/abu-dhabi-dust-2022": (
        "Abu Dhabi dust storm report",
        "<html><body><article><h1>Dust events in 2022</h1><p>Abu Dhabi recorded 23 dust storm days in 2022. "
        "PM10 peaked at 1450 micrograms per cubic metre on 23 May 2022.</p><p>Flights at the airport were delayed "
        "for six hours.</p></article></body></html>"),
    "https://www.example.org/qatar/emission-factors-2022": (
        "Qatar emission factors 2022",
        "<html><body><article><h1>Industrial emission factors</h1><p>The 2022 emission factor for the Qatari oil "
        "and gas sector is 0.5 tonnes of CO2 equivalent per unit of revenue.</p><p>Construction has a factor of "
        "0.21.</p></article></body></html>"),
    "https://www.example.org/kuwait/rain-2018": (
        "Kuwait November 2018 floods",
        "<html><body><article><h1>Flash floods</h1><p>Kuwait City received 110 mm of rain on 9 November 2018. "
        "Schools closed for two days.</p></article></body></html>"),
}


def search():
    docs = ROOT / "providers" / "documents"
    rows = []
    for url, (title, html) in DOCS.items():
        name = hashlib.sha256(url.encode()).hexdigest()[:12] + ".html"
        (docs / name).parent.mkdir(parents=True, exist_ok=True)
        (docs / name).write_text(html + "\n")
        rows.append([url, name])
    write_csv(docs / "index.csv", ["url", "path"], rows)

    def hit(url, snippet):
        return {"title": DOCS[url][0], "url": url, "snippet": snippet}

    recorded = [
        ("Qatar oil and gas emission factor 2022", [
            hit("https://www.example.org/qatar/emission-factors-2022",
                "The 2022 emission factor for the Qatari oil and gas sector is 0.5 tCO2e per unit revenue.")]),
        ("Qatar outdoor work heat ban", [
            hit("https://www.example.org/qatar/heat-stress-rules",
                "Qatar bans outdoor work between 10:00 and 15:30 in summer.")]),
        ("Abu Dhabi dust storms 2022", [
            hit("https://www.example.org/uae/abu-dhabi-dust-2022", "Abu Dhabi recorded 23 dust storm days in 2022.")]),
        ("Kuwait flash floods", [
            hit("https://www.example.org/kuwait/rain-2018", "Kuwait City received 110 mm of rain on 9 November 2018.")]),
    ]
    with open(PROV / "search.jsonl", "w") as f:
        for q, results in recorded:
            f.write(json.dumps({"query": q, "results": results}) + "\n")


def call_block(tool, args):
    return "```tool_call\n" + json.dumps({"tool": tool, "args": args}, separators=(",", ":")) + "\n```"


def ref(point, date):
    return f"sat:{point[0]:.4f},{point[1]:.4f}@{date}"


def step(tool, args, facts):
    return {"tool": tool, "arg_names": sorted(args), "arg_values": args, "summary_facts": facts}


def fact(label, value=None, **kw):
    f = {"label": label}
    if value is not None:
        f["value"] = value
    f.update(kw)
    return f


def geo(place):
    return step("geocode_mapping", {"region": place}, [fact(place)])


def ll(point, **extra):
    return {"lat": f"{point[0]}", "lon": f"{point[1]}", **extra}


SUITE = [
    {
        "id": "doha-rain",
        "query": "How much rain fell in Doha on 2023-04-15?",
        "allowed_tools": ["geocode_mapping", "rain_inquiry", "rain_analysis"],
        "gold_trace": [geo("Doha"), step("rain_inquiry", ll(DOHA, date="2023-04-15"), [fact("mm", 12.0)])],
        "gold_answer": [fact("mm", 12.0)],
        "requires_chart": False,
        "answer": "Doha recorded 12.0 mm of rain on 2023-04-15 [step 2].",
        "summaries": ["Doha, Qatar is at 25.2854, 51.531.", "Precipitation was 12.0 mm on 2023-04-15."],
    },
    {
        "id": "doha-aqi",
        "query": "What was the air quality index in Doha on 2023-04-15?",
        "allowed_tools": ["geocode_mapping", "aqi_inquiry", "aqi_prediction"],
        "gold_trace": [geo("Doha"), step("aqi_inquiry", ll(DOHA, date="2023-04-15"), [fact("AQI", 87.0)])],
        "gold_answer": [fact("AQI", 87.0)],
        "requires_chart": False,
        "answer": "The AQI in Doha on 2023-04-15 was 87 [step 2].",
        "summaries": ["Doha, Qatar is at 25.2854, 51.531.", "The AQI reading was 87 on 2023-04-15."],
    },
    {
        "id": "doha-heat-anomaly",
        "query": "Were there temperature anomalies in Doha between 2023-01-16 and 2023-04-15?",
        "allowed_tools": ["geocode_mapping", "weather_analysis", "weather_inquiry"],
        "gold_trace": [geo("Doha"), step("weather_analysis", ll(DOHA, start="2023-01-16", end="2023-04-15"),
                                         [fact("2023-03-01")])],
        "gold_answer": [fact("temperature"), fact("2023-03-01")],
        "requires_chart": True,
        "answer": "One temperature anomaly stands out: 2023-03-01 was far warmer than the rest of the period [step 2].",
        "summaries": ["Doha, Qatar is at 25.2854, 51.531.",
                      "The temperature series has one anomaly, on 2023-03-01."],
    },
    {
        "id": "al-ain-degradation",
        "query": "How much of the vegetation near Al Ain degraded between 2019-04-01 and 2023-04-01?",
        "allowed_tools": ["geocode_mapping", "get_satellite_image", "desertification_analysis", "calculate_ndvi"],
        "gold_trace": [geo("Al Ain"), step("desertification_analysis",
                                           {"image1": ref(AL_AIN, "2019-04-01"), "image2": ref(AL_AIN, "2023-04-01")},
                                           [fact("degraded", 0.5)])],
        "gold_answer": [fact("degraded", 0.5)],
        "requires_chart": False,
        "answer": "A degraded area fraction of 0.5 was found near Al Ain [step 2].",
        "summaries": ["Al Ain, UAE is at 24.2075, 55.7447.", "The degraded area fraction is 0.5."],
    },
    {
        "id": "qatar-oil-gas-carbon",
        "query": "Estimate annual emissions for a Qatari oil and gas firm with revenue 1000000 in 2022.",
        "allowed_tools": ["online_search", "carbon_footprint_calculation", "summarize"],
        "gold_trace": [
            step("online_search", {"query": "Qatar oil and gas emission factor 2022"}, [fact("emission factor")]),
            step("carbon_footprint_calculation",
                 {"country": "Qatar", "industry": "oil_and_gas", "year": "2022", "revenue": "1000000"},
                 [fact("tCO2e", 500000.0)]),
        ],
        "gold_answer": [fact("tCO2e", 500000.0)],
        "requires_chart": False,
        "answer": "Annual emissions are about 500,000 tCO2e, using a factor of 0.5 [step 2].",
        "summaries": ["The search found the 2022 emission factor for Qatari oil and gas.",
                      "Emissions are 500000 tCO2e."],
    },
]


def entry(purpose, key, emissions, repeat=False):
    e = {"purpose": purpose, "key": key, "emissions": emissions}
    if repeat:
        e["repeat_last"] = True
    return e


def bench():
    out = ROOT / "bench"
    out.mkdir(exist_ok=True)
    with open(out / "suite.jsonl", "w") as f:
        for inst in SUITE:
            row = {k: inst[k] for k in ["id", "query", "allowed_tools", "gold_trace", "gold_answer", "requires_chart"]}
            f.write(json.dumps(row, ensure_ascii=False) + "\n")

    def replay(mutate=None):
        entries = []
        for inst in SUITE:
            emissions = [call_block(s["tool"], s["arg_values"]) for s in inst["gold_trace"]] + [inst["answer"]]
            if mutate:
                emissions = mutate(inst["id"], emissions)
            entries.append(entry("step", inst["id"], emissions))
            entries.append(entry("step_summary", inst["id"], inst["summaries"]))
        return {"version": 1, "entries": entries}

    write_json(out / "replay_gold.json", replay())

    def corrupt(iid, em):
        em = list(em)
        if iid == "doha-rain":
            em[1] = call_block("rain_analysis", ll(DOHA, start="2023-04-15", end="2023-04-15"))
        elif iid == "doha-aqi":
            em[1] = call_block("aqi_inquiry", ll(DOHA))
        elif iid == "doha-heat-anomaly":
            em[0] = "Doha is a coastal city, so temperatures are probably mild."
        elif iid == "al-ain-degradation":
            em[0] = '```tool_call\n{"tool": "geocode_mapping", "args": {"region": "Al Ain"}\n```'
        return em

    write_json(out / "replay_corrupt.json", replay(corrupt))


def ask_replays():
    out = ROOT / "replays"
    doha_steps = [
        call_block("geocode_mapping", {"region": "Doha"}),
        call_block("rain_inquiry", ll(DOHA, date="2023-04-15")),
    ]
    write_json(out / "doha_rain.json", {"version": 1, "entries": [
        entry("route", "*", ["numerical"]),
        entry("step", "*", doha_steps + ["Doha recorded 12.0 mm of rain on 2023-04-15 [step 2]."]),
    ]})
    write_json(out / "ungrounded_probe.json", {"version": 1, "entries": [
        entry("route", "*", ["numerical"]),
        entry("step", "*", doha_steps + ["Doha recorded 99.9 mm of rain on 2023-04-15 [step 2]."]),
    ]})
    write_json(out / "doha_heat_chart.json", {"version": 1, "entries": [
        entry("route", "*", ["numerical"]),
        entry("step", "*", [call_block("geocode_mapping", {"region": "Doha"}),
                            call_block("weather_analysis", ll(DOHA, start="2023-01-16", end="2023-04-15")),
                            "Temperatures rose through the period with one anomaly on 2023-03-01 [step 2]."]),
    ]})
    write_json(out / "text_forge.json", text_forge_replay())
    write_json(out / "visual_forge.json", visual_forge_replay())


DOC_FACTS = {
    "https://www.example.org/qatar/heat-stress-rules": [
        "Qatar bans outdoor work between 10:00 and 15:30 from 1 June to 15 September.",
        "The wet bulb globe temperature threshold for stopping work in Qatar is 32.1 degrees Celsius.",
    ],
    "https://www.example.org/uae/abu-dhabi-dust-2022": [
        "Abu Dhabi recorded 23 dust storm days in 2022.",
        "PM10 in Abu Dhabi peaked at 1450 micrograms per cubic metre on 23 May 2022.",
    ],
    "https://www.example.org/qatar/emission-factors-2022": [
        "The 2022 emission factor for the Qatari oil and gas sector is 0.5.",
    ],
    "https://www.example.org/kuwait/rain-2018": [
        "Kuwait City received 110 mm of rain on 9 November 2018.",
    ],
}


def text_forge_replay():
    entries = [
        entry("expand", "*", ["Qatar outdoor work heat ban\nAbu Dhabi dust storms 2022\nKuwait flash floods"], True),
        entry("refine", "*", ["Qatar outdoor work heat ban"], True),
    ]
    for url, facts in DOC_FACTS.items():
        chunk = "doc-" + hashlib.sha256(url.encode()).hexdigest()[:12] + "#0"
        entries.append(entry("facts", chunk, ["\n".join(facts)]))
        first = facts[0].rstrip(".")
        entries.append(entry("qa", f"mcq:{chunk}", [json.dumps([{
            "question": f"Which statement is supported by the source? ({first.split()[0]})",
            "options": [first, first.replace("2022", "2019").replace("10:00", "12:00") + " (revised)",
                        "None of the listed figures"],
            "answer": first}])]))
        entries.append(entry("qa", f"open:{chunk}", [json.dumps([{
            "question": f"What does the source report about {first.split()[0]}?", "answer": first}])]))
        entries.append(entry("qa", f"tf:{chunk}", [json.dumps([{
            "entailed": first, "contradicted": "It is not the case that " + first[0].lower() + first[1:]}])]))
    return {"version": 1, "entries": entries}


def visual_forge_replay():
    entries = []
    for w in range(8):
        chart = f"doha_temperature_w{w:03d}"
        entries += [
            entry("visual_qa", f"forecasting:{chart}:mcq", [json.dumps([{
                "question": "Where is the temperature most likely to be one week after the window ends?",
                "options": ["near the last observed level", "20 degrees higher", "below freezing", "exactly zero"],
                "answer": "near the last observed level"}])]),
            entry("visual_qa", f"forecasting:{chart}:open", [json.dumps([{
                "question": "Describe the likely temperature over the next week.",
                "answer": "Close to the last observed level, following the current trend."}])]),
            entry("visual_qa", f"forecasting:{chart}:tf", [json.dumps([{
                "entailed": "The next week most likely continues the current trend.",
                "contradicted": "The next week most likely drops below freezing."}])]),
            entry("visual_qa", f"reasoning:{chart}:mcq", [json.dumps([{
                "question": "Which factor best explains the trend in this window?",
                "options": ["the seasonal cycle", "a sensor unit change", "daylight saving time", "none"],
                "answer": "the seasonal cycle"}])]),
            entry("visual_qa", f"reasoning:{chart}:open", [json.dumps([{
                "question": "What drives the change in this window?",
                "answer": "The seasonal cycle of Gulf temperatures."}])]),
            entry("visual_qa", f"reasoning:{chart}:tf", [json.dumps([{
                "entailed": "The seasonal cycle drives most of the change.",
                "contradicted": "The series has no seasonal component."}])]),
        ]
    return {"version": 1, "entries": entries}


def visual():
    """Two years of daily temperature (K) on a 2x2 grid around Doha.

    Window 3 (days 180-269) is half missing and must be dropped."""
    rng = random.Random(11)
    lats, lons = [25.25, 25.30], [51.50, 51.55]
    start = dt.date(2021, 1, 1)
    lines = ["gridded-fixture 1", "source: fixture-reanalysis", "cadence_seconds: 86400",
             "lats: " + " ".join(map(str, lats)), "lons: " + " ".join(map(str, lons)), "variable: temperature K"]
    for i, d in enumerate(days(start, 730)):
        seasonal = 27.0 + 8.0 * math.sin(2 * math.pi * (i - 100) / 365.0)
        vals = []
        for c in range(4):
            missing = 180 <= i < 270 and i % 2 == 0
            v = seasonal + 0.3 * c + rng.uniform(-0.8, 0.8)
            vals.append("" if missing else f"{v + 273.15:.2f}")
        lines.append(d.isoformat() + "," + ",".join(vals))
    out = ROOT / "visual"
    out.mkdir(exist_ok=True)
    (out / "doha_temperature.grid").write_text("\n".join(lines) + "\n")


def main():
    rng = random.Random(7)
    stations(rng)
    forecasts(rng)
    discharge(rng)
    imagery()
    species()
    search()
    bench()
    ask_replays()
    visual()


if __name__ == "__main__":
    main()
