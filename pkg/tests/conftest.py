import numpy as np
import pytest

from bpmisac.beamspace import ArrayGeometry, dft_codebook, sample_channel
from bpmisac.modem import ImConfig, SensingSpec, build_im_codebook
from bpmisac.precoder import LinkNoise, select_beams

ACCEPTANCE_LINES = []


def record_acceptance(tag, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def reference_setup():
    """N_t = N_r = 32, P = 8, K = 4, N_C = 3, 4-QAM, sensing on f(11..13)."""
    cfg = ImConfig(4, 3, 4)
    return {
        "geom": ArrayGeometry(32, 32),
        "tx": dft_codebook(32),
        "rx": dft_codebook(32),
        "cfg": cfg,
        "cb": build_im_codebook(cfg),
        "spec": SensingSpec.uniform((11, 12, 13), 5.0),
        "p": 8,
        "l": 20,
    }


def make_instances(setup, n, seed, snr_choices=(0.0,), on_grid=False):
    """``n`` (eq, noise) pairs from random channels with beams already selected."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        noise = LinkNoise.from_ebn0_db(float(rng.choice(snr_choices)), setup["cfg"])
        h = sample_channel(rng, setup["geom"], setup["p"], on_grid)
        _, eq = select_beams(h, setup["tx"], setup["rx"], setup["spec"], noise, setup["cfg"],
                             setup["l"])
        out.append((eq, noise))
    return out
