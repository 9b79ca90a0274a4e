"""Bundled mock services speaking the real reconciliation wire protocol.

One threaded HTTP server hosts two service roots: /mockkg answers
reconciliation queries from a fixed vocabulary and /mockweather answers
data-extension requests with deterministic weather-style values. Tests
and the CLI demo run fully offline against these. Two magic labels
exist as failure hooks: "ERROR_500" makes the service answer 500 and
"NOT_JSON" makes it answer with a non-JSON body.
"""

from __future__ import annotations

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any, Optional
from urllib.parse import parse_qs, urlparse

IDENTIFIER_SPACE = "urn:mock:"
SCHEMA_SPACE = "urn:mock:schema/"

TYPE_CITY = {"id": "urn:mock:type:City", "name": "city"}
TYPE_TOWN = {"id": "urn:mock:type:Town", "name": "town"}
TYPE_BOROUGH = {"id": "urn:mock:type:Borough", "name": "borough"}
TYPE_REGION = {"id": "urn:mock:type:Region", "name": "region"}
TYPE_MUSEUM = {"id": "urn:mock:type:Museum", "name": "museum"}
TYPE_UNIVERSITY = {"id": "urn:mock:type:University", "name": "university"}
TYPE_FOOTBALL_CLUB = {"id": "urn:mock:type:AssociationFootballClub", "name": "association football club"}


def _cand(entity_id: str, name: str, score: float, match: bool, types: list[dict], description: str) -> dict:
    return {
        "id": entity_id,
        "name": name,
        "score": score,
        "match": match,
        "type": [dict(t) for t in types],
        "description": description,
    }


#: label (lower-cased) -> candidate list, served in this order.
RECON_FIXTURES: dict[str, list[dict[str, Any]]] = {
    "rome": [
        _cand("urn:mock:Rome", "Rome", 0.98, True, [TYPE_CITY], "capital of Italy"),
        _cand("urn:mock:City_of_Rome", "City of Rome", 0.55, False, [TYPE_CITY], "historical commune"),
    ],
    "paris": [
        _cand("urn:mock:Paris", "Paris", 0.97, True, [TYPE_CITY], "capital of France"),
        _cand("urn:mock:Paris_Texas", "Paris, Texas", 0.41, False, [TYPE_TOWN], "town in Texas"),
    ],
    "berlin": [
        _cand("urn:mock:Berlin", "Berlin", 0.96, True, [TYPE_CITY], "capital of Germany"),
    ],
    "madrid": [
        _cand("urn:mock:Madrid", "Madrid", 0.95, True, [TYPE_CITY], "capital of Spain"),
    ],
    "london": [
        _cand("urn:mock:London", "London", 0.94, True, [TYPE_CITY], "capital of the United Kingdom"),
        _cand("urn:mock:London_Ontario", "London, Ontario", 0.42, False, [TYPE_TOWN], "city in Canada"),
    ],
    "bournemouth": [
        _cand(
            "urn:mock:AFC_Bournemouth",
            "A.F.C. Bournemouth",
            0.85,
            False,
            [TYPE_FOOTBALL_CLUB],
            "professional football club",
        ),
        _cand("urn:mock:Bournemouth_borough", "Borough of Bournemouth", 0.85, False, [TYPE_BOROUGH], "former borough"),
        _cand("urn:mock:Bournemouth_town", "Bournemouth", 0.85, False, [TYPE_TOWN], "coastal town in Dorset"),
    ],
    "georgetown": [
        _cand("urn:mock:Georgetown_Guyana", "Georgetown", 0.70, False, [TYPE_CITY], "capital of Guyana"),
        _cand("urn:mock:Georgetown_Texas", "Georgetown", 0.70, False, [TYPE_TOWN], "city in Texas"),
        _cand("urn:mock:Georgetown_University", "Georgetown University", 0.70, False, [TYPE_UNIVERSITY], "university"),
    ],
    "louvre": [
        _cand("urn:mock:Louvre", "Louvre", 0.93, True, [TYPE_MUSEUM], "museum in Paris"),
    ],
    "british museum": [
        _cand("urn:mock:British_Museum", "British Museum", 0.92, True, [TYPE_MUSEUM], "museum in London"),
    ],
    "lyon": [
        _cand("urn:mock:Lyon", "Lyon", 0.80, False, [TYPE_CITY], "city in France"),
        _cand("urn:mock:Lyon_Metropolis", "Metropolis of Lyon", 0.35, False, [TYPE_REGION], "metropolitan authority"),
    ],
    "turin": [
        _cand("urn:mock:Turin", "Turin", 0.66, False, [TYPE_CITY], "city in Italy"),
    ],
    "oslo": [
        _cand("urn:mock:Oslo", "Oslo", 0.89, False, [TYPE_CITY], "capital of Norway"),
        _cand("urn:mock:Oslo_Fjord", "Oslofjord", 0.88, False, [TYPE_REGION], "inlet in Norway"),
    ],
}

#: Every label the reconciliation fixture knows, in fixture order.
MOCK_VOCABULARY = [
    "Rome",
    "Paris",
    "Berlin",
    "Madrid",
    "London",
    "Bournemouth",
    "Georgetown",
    "Louvre",
    "British Museum",
    "Lyon",
    "Turin",
    "Oslo",
]

PROPOSED_PROPERTIES = [
    {"id": "weather", "name": "weather"},
    {"id": "apparentTemperatureMax", "name": "apparent temperature max"},
    {"id": "apparentTemperatureMin", "name": "apparent temperature min"},
    {"id": "precipitationSum", "name": "precipitation sum"},
    {"id": "reportDate", "name": "report date"},
    {"id": "stationCount", "name": "station count"},
    {"id": "coastal", "name": "coastal"},
    {"id": "administrativeRegion", "name": "administrative region"},
    {"id": "alias", "name": "alias"},
]


def _weather_row(
    weather: str,
    tmax: float,
    tmin: float,
    precip: float,
    stations: int,
    coastal: bool,
    region: tuple[str, str],
    aliases: list[str],
) -> dict[str, list[dict[str, Any]]]:
    return {
        "weather": [{"str": weather}],
        "apparentTemperatureMax": [{"float": tmax}],
        "apparentTemperatureMin": [{"float": tmin}],
        "precipitationSum": [{"float": precip}],
        "reportDate": [{"date": "2017-06-09"}],
        "stationCount": [{"int": stations}],
        "coastal": [{"bool": coastal}],
        "administrativeRegion": [{"id": region[0], "name": region[1]}],
        "alias": [{"str": a} for a in aliases],
    }


#: entity id -> property id -> value list.
EXTENSION_ROWS: dict[str, dict[str, list[dict[str, Any]]]] = {
    "urn:mock:Rome": _weather_row(
        "clear sky", 31.2, 18.4, 0.0, 14, False, ("urn:mock:Lazio", "Lazio"), ["Roma", "Urbs Aeterna"]
    ),
    "urn:mock:Paris": _weather_row(
        "light rain", 24.7, 14.9, 3.2, 21, False, ("urn:mock:Ile_de_France", "Ile-de-France"), ["Paname"]
    ),
    "urn:mock:Berlin": _weather_row(
        "scattered clouds", 22.1, 12.3, 1.1, 17, False, ("urn:mock:Brandenburg_Region", "Berlin-Brandenburg"), []
    ),
    "urn:mock:Madrid": _weather_row(
        "clear sky", 33.8, 19.6, 0.0, 12, False, ("urn:mock:Community_of_Madrid", "Community of Madrid"), []
    ),
    "urn:mock:London": _weather_row(
        "overcast", 20.4, 13.2, 2.8, 25, False, ("urn:mock:Greater_London", "Greater London"), ["The Big Smoke"]
    ),
    "urn:mock:Lyon": _weather_row(
        "light rain", 26.0, 15.1, 1.9, 9, False, ("urn:mock:Auvergne_Rhone_Alpes", "Auvergne-Rhone-Alpes"), []
    ),
    "urn:mock:Oslo": _weather_row(
        "snow showers", 8.3, 1.2, 5.6, 8, True, ("urn:mock:Ostlandet", "Ostlandet"), []
    ),
}

KG_MANIFEST = {
    "name": "MockKG",
    "identifierSpace": IDENTIFIER_SPACE,
    "schemaSpace": SCHEMA_SPACE,
    "defaultTypes": [TYPE_CITY],
    "view": {"url": "urn:mock:view/{{id}}"},
}

WEATHER_MANIFEST = {
    "name": "MockWeather",
    "identifierSpace": IDENTIFIER_SPACE,
    "schemaSpace": SCHEMA_SPACE,
    "extend": {
        "propose_properties": {"service_path": "/propose"},
        "property_settings": [],
    },
}


def reconcile_fixture(wire_queries: dict[str, Any]) -> dict[str, Any]:
    """Answer a parsed queries document from the fixture vocabulary."""
    out: dict[str, Any] = {}
    for key, query in wire_queries.items():
        label = str(query.get("query", ""))
        candidates = [dict(c) for c in RECON_FIXTURES.get(label.lower(), [])]
        type_id = query.get("type")
        if type_id:
            candidates = [c for c in candidates if any(t["id"] == type_id for t in c.get("type", []))]
        limit = query.get("limit")
        if isinstance(limit, int) and limit >= 0:
            candidates = candidates[:limit]
        out[key] = {"result": candidates}
    return out


def extend_fixture(wire_request: dict[str, Any]) -> dict[str, Any]:
    """Answer a parsed extension document from the fixture rows."""
    ids = [str(i) for i in wire_request.get("ids", [])]
    property_ids = [str(p.get("id")) for p in wire_request.get("properties", []) if isinstance(p, dict)]
    known = {p["id"]: p["name"] for p in PROPOSED_PROPERTIES}
    meta = [{"id": pid, "name": known[pid]} for pid in property_ids if pid in known]
    rows: dict[str, Any] = {}
    for entity_id in ids:
        data = EXTENSION_ROWS.get(entity_id)
        if data is None:
            continue  # omitted on purpose; clients must tolerate missing rows
        rows[entity_id] = {pid: [dict(v) for v in data[pid]] for pid in property_ids if pid in data}
    return {"meta": meta, "rows": rows}


class _MockHandler(BaseHTTPRequestHandler):
    server_version = "MockReconService/0.1"

    def log_message(self, format: str, *args: Any) -> None:  # keep test output clean
        pass

    def _send_json(self, doc: Any, status: int = 200) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_raw(self, body: bytes, status: int = 200) -> None:
        self.send_response(status)
        self.send_header("Content-Type", "text/plain")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self) -> None:
        parsed = urlparse(self.path)
        path = parsed.path.rstrip("/")
        if path == "/mockkg":
            self._send_json(KG_MANIFEST)
        elif path == "/mockweather":
            self._send_json(WEATHER_MANIFEST)
        elif path == "/mockweather/propose":
            self._send_json({"properties": [dict(p) for p in PROPOSED_PROPERTIES]})
        else:
            self._send_json({"error": f"unknown path {parsed.path}"}, status=404)

    def do_POST(self) -> None:
        delay = getattr(self.server, "delay", 0.0)
        if delay:
            time.sleep(delay)
        length = int(self.headers.get("Content-Length", "0"))
        form = parse_qs(self.rfile.read(length).decode("utf-8"))
        path = urlparse(self.path).path.rstrip("/")
        try:
            if path == "/mockkg" and "queries" in form:
                queries = json.loads(form["queries"][0])
                self._answer_queries(queries)
            elif path == "/mockweather" and "queries" in form:
                queries = json.loads(form["queries"][0])
                self._send_json({key: {"result": []} for key in queries})
            elif path == "/mockweather" and "extend" in form:
                request = json.loads(form["extend"][0])
                if "urn:mock:ERROR_500" in request.get("ids", []):
                    self._send_json({"error": "synthetic failure"}, status=500)
                else:
                    self._send_json(extend_fixture(request))
            else:
                self._send_json({"error": "unsupported operation for this path"}, status=400)
        except (json.JSONDecodeError, AttributeError, TypeError):
            self._send_json({"error": "malformed form payload"}, status=400)

    def _answer_queries(self, queries: dict[str, Any]) -> None:
        labels = [str(q.get("query", "")) for q in queries.values() if isinstance(q, dict)]
        if "ERROR_500" in labels:
            self._send_json({"error": "synthetic failure"}, status=500)
        elif "NOT_JSON" in labels:
            self._send_raw(b"this is not json")
        else:
            self._send_json(reconcile_fixture(queries))


class MockServiceServer:
    """Threaded in-process server for the bundled mock services."""

    def __init__(self, host: str = "127.0.0.1", port: int = 0):
        self._httpd = ThreadingHTTPServer((host, port), _MockHandler)
        self._httpd.delay = 0.0  # seconds added to every POST, for job tests
        self._thread: Optional[threading.Thread] = None

    @property
    def base_url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def kg_url(self) -> str:
        return f"{self.base_url}/mockkg"

    @property
    def weather_url(self) -> str:
        return f"{self.base_url}/mockweather"

    def set_delay(self, seconds: float) -> None:
        self._httpd.delay = float(seconds)

    def start(self) -> "MockServiceServer":
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._httpd.shutdown()
        self._httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def __enter__(self) -> "MockServiceServer":
        return self.start()

    def __exit__(self, *exc: Any) -> None:
        self.stop()
