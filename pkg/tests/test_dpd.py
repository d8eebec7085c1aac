import math

import numpy as np
import pytest

from nldecomp.errors import NoReference
from nldecomp.learner import DpdConfig, Modeler, TrainConfig, indirect_dpd, reference_drive, reference_pa
from nldecomp.learner.dpd import channel_bandwidth
from nldecomp.learner.metrics import aclr_dbc
from nldecomp.signals import generate_filtered_noise, mean_power
from nldecomp.synth import SystemSpec

ACLR_TARGET_DB = 10.0
FRACTIONS = (0.125, 0.25, 0.5, 1.0)


@pytest.fixture(scope="module")
def drive():
    return reference_drive(42)


def test_drive_backoff(drive):
    assert mean_power(drive) == pytest.approx(10 ** (-0.6), rel=1e-9)
    assert drive.reference is not None
    assert drive.reference.scale == pytest.approx(
        reference_drive(42, backoff_db=0.0).reference.scale * 10 ** (-0.3), rel=1e-12)


def test_channel_bandwidth(drive):
    assert channel_bandwidth(drive) == pytest.approx(0.25, abs=1 / 32768)
    with pytest.raises(NoReference):
        channel_bandwidth(generate_filtered_noise(0, 4096))


def test_modeler_names():
    assert Modeler("residual") is Modeler.RESIDUAL and Modeler("FULL") is Modeler.FULL


def test_identity_pa(drive):
    res = indirect_dpd(drive, SystemSpec.identity(), "Residual",
                       DpdConfig(train=TrainConfig(max_iters=2000)))
    assert abs(res.aclr_improvement_db) <= 0.5
    z = res.predistorter(drive).samples
    assert np.max(np.abs(z - drive.samples)) <= 1e-6 * np.max(np.abs(drive.samples))


def test_metrics_fields(drive):
    res = indirect_dpd(drive, reference_pa(42), "Full", DpdConfig(train=TrainConfig(max_iters=50)))
    m = res.metrics()
    assert m["modeler"] == "Full" and m["mac_per_inference"] == 675
    assert m["aclr_improvement_db"] == pytest.approx(m["aclr_before_dbc"] - m["aclr_after_dbc"])
    assert aclr_dbc(res.linearized, res.channel_bw) == m["aclr_after_dbc"]


def _fraction_to_target(modeler, drive):
    for frac in FRACTIONS:
        res = indirect_dpd(drive, reference_pa(42), modeler, DpdConfig(train_fraction=frac))
        if res.aclr_improvement_db >= ACLR_TARGET_DB:
            return frac
    return math.inf


# the smallest fractions fall below the rows-per-parameter warning on purpose
@pytest.mark.filterwarnings("ignore:.*training rows:RuntimeWarning")
@pytest.mark.xfail(strict=True, reason="neither modeler reaches the 10 dB ACLR target on the "
                                        "reference PA at any training fraction")
def test_residual_needs_fewer_samples_for_aclr_target(drive):
    res = _fraction_to_target("Residual", drive)
    full = _fraction_to_target("Full", drive)
    assert math.isfinite(res) and res <= 0.7 * full
