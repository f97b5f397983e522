import numpy as np
import pytest
from hypothesis import settings

from dtuav.allocation import TaskRecord
from dtuav.compute import OffloadDecision, Physics, TaskContext
from dtuav.config import Location, NodeProfile, ScenarioConfig, TaskSpec

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

B, SIGMA2, BETA0 = 100e6, 1e-9, 1e-3


def node(i=0, loc=Location(0.0, 0.0), f_max=6e9, f_dev=0.0, kappa=1e-26, p_max=1.0, budget=1e5, f_est=None):
    return NodeProfile(i, loc, f_max if f_est is None else f_est, f_dev, f_max, kappa, p_max, budget)


def make_context(mtu_loc=Location(100.0, 100.0), mtu_dev=0.0, device_devs=(0.0,), uav_dev=0.0,
                 device_locs=None, fhps=None, uav_from=None, sigma2=SIGMA2):
    device_locs = device_locs or [Location(150.0 + 50 * k, 100.0) for k in range(len(device_devs))]
    fhps = fhps or (Location(100.0, 100.0, 500.0), Location(300.0, 100.0, 500.0))
    devices = tuple(node(k, loc, 8e9, d) for k, (loc, d) in enumerate(zip(device_locs, device_devs)))
    uav = node(0, fhps[0], 10e9, uav_dev, p_max=5.0)
    return TaskContext(mtu_loc, node(0, Location(0, 0), 6e9, mtu_dev), devices, uav,
                       uav_from or fhps[0], tuple(fhps), Location(-1200.0, 200.0),
                       Physics(B, sigma2, BETA0, 0.11, 0.08, 20.0))


def make_record(kind="local", index=0, task=TaskSpec(100e6, 30.0, 1.2), ctx=None, plan=None):
    ctx = ctx or make_context()
    return TaskRecord(0, 0, task, OffloadDecision(kind, index), ctx, plan or ctx)


@pytest.fixture
def small_cfg():
    return ScenarioConfig(M=2, K=3, Q=4, fhp_rows=2, fhp_cols=2, N=5, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_configure(config):
    config._acceptance_lines = []


@pytest.fixture
def acceptance_line(request):
    """Record one pass/fail summary line; printed at the end of the run."""
    lines = request.config._acceptance_lines

    def record(text):
        lines.append(text)
        print(text)

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda t: int(t.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
