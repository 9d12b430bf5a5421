import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("default", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def canonical():
    from progunfold import shapes
    return shapes.canonical_corpus()


@pytest.fixture(scope="session")
def hausdorff_table():
    """Relative Hausdorff error after decimating each trend-corpus mesh to 10 % of its faces."""
    from progunfold import shapes
    from progunfold.decimate import QQ, SEMP, SEQ, decimate_to
    from progunfold.metrics import hausdorff_relative

    table = {}
    for name, mesh in shapes.shape_corpus().items():
        target = max(4, round(0.1 * mesh.n_faces))
        row = {}
        for label, strategy in (("q/q", QQ), ("se/q", SEQ), ("se/mp", SEMP)):
            work = mesh.copy()
            decimate_to(work, target, strategy)
            row[label] = hausdorff_relative(mesh, work)
        table[name] = row
    return table


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
