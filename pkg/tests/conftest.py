import numpy as np
import pytest

from tsfuzzy.membership import MembershipFunction as MF


def random_mf(rng, lo=-1.0, hi=2.0, gauss=False):
    kinds = ["z", "s", "trap"] + (["gauss"] if gauss else [])
    kind = kinds[rng.integers(len(kinds))]
    if kind == "gauss":
        return MF.gauss(rng.uniform(lo, hi), rng.uniform(0.05, 2.0))
    pts = np.sort(rng.uniform(lo, hi, 4 if kind == "trap" else 2))
    pts[-1] += 1e-3
    return MF(kind, tuple(pts))


def random_premises(rng, n_rules, m, gauss=False):
    premises = []
    for _ in range(n_rules):
        k = rng.integers(0, min(m, 3) + 1)
        vars_ = rng.choice(m, size=k, replace=False)
        premises.append(tuple((int(v), random_mf(rng, gauss=gauss)) for v in vars_))
    return premises


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config._acceptance = {}


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance", {})
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(lines):
        terminalreporter.write_line(lines[key])
