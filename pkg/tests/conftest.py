import pytest

from kgtable.engine import Engine
from kgtable.mock_service import MockServiceServer
from kgtable.recon import ReconClient
from kgtable.registry import ParamSpec, ParamType, ServiceKind, ServiceRegistry
from kgtable.store import TableStore

FIXED_TIME = "2017-06-09T12:00:00.000000Z"


@pytest.fixture(scope="session")
def mock_server():
    server = MockServiceServer().start()
    yield server
    server.stop()


@pytest.fixture
def client():
    return ReconClient()


def register_mocks(registry, mock_server):
    registry.register(
        "MockKG",
        ServiceKind.RECONCILIATION,
        mock_server.kg_url,
        params=[
            ParamSpec("type", ParamType.KG_TYPE, required=False),
            ParamSpec("limit", ParamType.NUMBER, required=False),
        ],
    )
    registry.register("MockWeather", ServiceKind.EXTENSION, mock_server.weather_url)
    return registry


@pytest.fixture
def registry(mock_server):
    """Registry with both bundled mock services registered."""
    return register_mocks(ServiceRegistry(), mock_server)


@pytest.fixture
def engine(tmp_path, mock_server):
    eng = Engine(TableStore(tmp_path / "store"))
    eng.register_mock_services(mock_server.kg_url, mock_server.weather_url)
    return eng


@pytest.fixture
def bare_engine(tmp_path):
    """Engine without any registered services (no mock server needed)."""
    return Engine(TableStore(tmp_path / "store"))


CAPITALS_CSV = (
    "City,Country\n"
    "Rome,Italy\n"
    "Paris,France\n"
    "Berlin,Germany\n"
    "Lyon,France\n"
    "Atlantis,Unknown\n"
)

MUSEUMS_CSV = "Museum,City\nLouvre,Paris\nBritish Museum,London\n"


@pytest.fixture
def capitals_csv():
    return CAPITALS_CSV


@pytest.fixture
def museums_csv():
    return MUSEUMS_CSV


@pytest.fixture
def capitals_table(engine, capitals_csv):
    """The capitals fixture imported into the engine's store."""
    return engine.import_table(capitals_csv.encode("utf-8"), "csv", "capitals")


@pytest.fixture
def fixed_clock(monkeypatch):
    monkeypatch.setenv("KGTABLE_FIXED_TIME", FIXED_TIME)
    return FIXED_TIME


# Acceptance checks register one verdict line each; printed after the run
# so stdout capture cannot swallow them.
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance verdicts")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)
