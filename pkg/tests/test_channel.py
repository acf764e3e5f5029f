import dataclasses

import numpy as np
import pytest

from csbcsim.channel import (
    IDENTITY_SEED,
    FiberConfig,
    birefringence_matrix,
    compensate_birefringence,
    compensator_angles,
    propagate,
)
from csbcsim.config import CsbcType
from csbcsim.correlation import calibrate, csbc_scan, default_scan_angles, measure_raw
from csbcsim.optics import PolarizedField
from csbcsim.rng import SeedStreams


def random_field(rng, n=None):
    return PolarizedField(rng.normal(size=n) + 1j * rng.normal(size=n), rng.normal(size=n) + 1j * rng.normal(size=n))


def test_ten_km_power_factor():
    cfg = FiberConfig(10.0, 0.2, 0.0)
    assert cfg.power_factor == pytest.approx(10 ** (-0.2))
    assert cfg.power_factor == pytest.approx(0.631, abs=5e-4)


def test_identity_channel():
    f = PolarizedField(0.3 + 0.1j, -0.7j)
    out = propagate(f, FiberConfig(0.0, 0.2, 0.0, IDENTITY_SEED))
    assert out.x == pytest.approx(f.x) and out.y == pytest.approx(f.y)
    cfg = FiberConfig(5.0, 0.2, 1.0, IDENTITY_SEED)
    comp = compensate_birefringence(f, cfg)
    assert comp.x == f.x and comp.y == f.y


@pytest.mark.parametrize("seed", range(10))
def test_loss_is_exact_for_any_rotation(seed):
    rng = np.random.default_rng(seed)
    cfg = FiberConfig(rng.uniform(0, 50), 0.2, rng.uniform(0, 3), seed)
    f = random_field(rng, 50)
    out = propagate(f, cfg)
    expected = f.intensity * 10 ** (-cfg.total_loss_db / 10)
    assert np.allclose(out.intensity, expected, rtol=1e-12)


def test_birefringence_is_unitary_and_seeded():
    u = birefringence_matrix(5)
    assert np.allclose(u.conj().T @ u, np.eye(2))
    assert np.array_equal(u, birefringence_matrix(5))
    assert not np.allclose(u, birefringence_matrix(6))


def test_compensation_inverts_channel():
    rng = np.random.default_rng(0)
    for seed in range(100):
        cfg = FiberConfig(10.0, 0.2, 1.5, seed)
        f = random_field(rng)
        back = compensate_birefringence(propagate(f, cfg), cfg)
        assert abs(back.x - cfg.amplitude_factor * f.x) <= 1e-10
        assert abs(back.y - cfg.amplitude_factor * f.y) <= 1e-10


def test_validation():
    with pytest.raises(ValueError):
        FiberConfig(length_km=-1)
    with pytest.raises(ValueError):
        FiberConfig(loss_db_per_km=-0.1)


def test_waveplate_decomposition():
    for seed in (1, 2, 3):
        u = birefringence_matrix(seed)
        _, residual = compensator_angles(u)
        assert residual < 1e-6


def test_normalized_csbc_invariant_under_compensated_fiber(unit_bench):
    angles = default_scan_angles(9)
    plain = csbc_scan(unit_bench, CsbcType.MINUS_COS_SUM, angles)
    for seed in (0, 7):
        fiber = dataclasses.replace(unit_bench, fiber=FiberConfig(25.0, 0.2, 3.0, seed), power_reference="launch")
        got = csbc_scan(fiber, CsbcType.MINUS_COS_SUM, angles)
        assert np.allclose([e.normalized for e in got], [e.normalized for e in plain], atol=1e-9)


def test_raw_mean_scales_with_fiber_power_factor(unit_bench):
    fiber_cfg = FiberConfig(10.0, 0.2, 2.0, 4)
    plain = measure_raw(unit_bench, SeedStreams(0), 1)
    fiber = measure_raw(dataclasses.replace(unit_bench, fiber=fiber_cfg, power_reference="launch"), SeedStreams(0), 1)
    assert fiber.mean / plain.mean == pytest.approx(fiber_cfg.power_factor, rel=1e-12)


def test_wrong_compensation_reduces_visibility(unit_bench):
    good = dataclasses.replace(unit_bench, fiber=FiberConfig(10.0, 0.2, 0.0, 3))
    bad = dataclasses.replace(unit_bench, fiber=FiberConfig(10.0, 0.2, 0.0, 3, compensation_seed=4))
    cal = calibrate(good)
    angles = np.linspace(0, np.pi, 73)
    good_scan = csbc_scan(good, None, angles, calibration=cal)
    bad_scan = csbc_scan(bad, None, angles, calibration=cal)
    assert max(abs(e.normalized) for e in good_scan) == pytest.approx(1.0, abs=1e-9)
    assert max(abs(e.normalized) for e in bad_scan) < 0.99
