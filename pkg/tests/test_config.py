import numpy as np
import pytest

import kgp
from kgp import _config
from kgp.exceptions import UserError
from kgp.spectral import SpectralField, Truncation, from_grid, grid_shape, to_grid


def test_workers_default_to_scipy():
    assert _config.get_fft_workers() is None


def test_set_default_fft_workers():
    kgp.set_default_fft_workers(2)
    assert _config.get_fft_workers() == 2


def test_zero_workers_means_every_cpu():
    kgp.set_default_fft_workers(0)
    assert _config.get_fft_workers() == -1


def test_negative_workers_rejected():
    with pytest.raises(UserError):
        kgp.set_default_fft_workers(-1)


def test_workers_from_env(monkeypatch):
    monkeypatch.setenv("KGP_THREADS", "3")
    assert _config.get_fft_workers() == 3


@pytest.mark.parametrize("raw", ["many", "-2", ""])
def test_bad_env_values_are_ignored(monkeypatch, raw):
    monkeypatch.setenv("KGP_THREADS", raw)
    assert _config.get_fft_workers() is None


def test_explicit_setting_beats_env(monkeypatch):
    monkeypatch.setenv("KGP_THREADS", "3")
    kgp.set_default_fft_workers(1)
    assert _config.get_fft_workers() == 1


def test_transforms_agree_across_worker_counts():
    trunc = Truncation(5, 5)
    u = SpectralField.mode(trunc, 3, 2, 0.7) + SpectralField.mode(trunc, 1, 0, -0.2)
    nt, nx = grid_shape(trunc)
    serial = to_grid(u, nt, nx).values
    kgp.set_default_fft_workers(2)
    threaded = to_grid(u, nt, nx)
    np.testing.assert_allclose(serial, threaded.values, atol=1e-15)
    np.testing.assert_allclose(from_grid(threaded, trunc).coeffs, u.coeffs, atol=1e-15)
