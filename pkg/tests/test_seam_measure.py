from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hemiglue import circle_homeo as ch
from hemiglue.errors import DomainError
from hemiglue.seam_measure import (
    mutual_singularity_scan, normalize_arcs, nu_abs, polyline_seam_length, seam_h1, seam_profile,
)


@pytest.mark.parametrize("eps", [0.25, 0.5, 1.0])
def test_patch_measure_is_eps_times_length(eps):
    g = ch.make_density_patch(eps)
    assert seam_h1(g, [(1.0, 2.0)]) == pytest.approx(eps, abs=1e-12)


def test_cantor_total_measure():
    # upper half keeps only the gaps: π(1 - m); lower half is the identity
    g = ch.make_cantor_homeo(0.5, 6)
    assert seam_h1(g, [(-np.pi, np.pi)]) == pytest.approx(np.pi + np.pi * 0.5, abs=1e-12)


def test_singular_seam_is_null():
    assert seam_h1(ch.make_singular_homeo(), [(0.0, 2 * np.pi)]) == pytest.approx(0.0, abs=1e-12)


@given(st.floats(-3, 3), st.floats(0, 3), st.floats(0, 3))
def test_additive_over_split(a, l1, l2):
    g = ch.make_power_homeo(2, 3)
    whole = seam_h1(g, [(a, a + l1 + l2)])
    parts = seam_h1(g, [(a, a + l1), (a + l1, a + l1 + l2)])
    assert whole == pytest.approx(parts, abs=1e-12)


@given(st.floats(-3, 3), st.floats(0, 6))
def test_bounded_by_arc_length(a, length):
    g = ch.make_two_slope(0.5, 2.0)
    assert 0 <= seam_h1(g, [(a, a + length)]) <= length + 1e-12


@pytest.mark.parametrize("name", ["cantor", "patch", "singular", "identity"])
def test_nu_abs_agrees(name):
    g = {"cantor": lambda: ch.make_cantor_homeo(0.5, 4), "patch": lambda: ch.make_density_patch(0.5),
         "singular": lambda: ch.make_singular_homeo(), "identity": ch.make_identity}[name]()
    arcs = [(-2.0, 0.5), (1.0, 2.8)]
    assert nu_abs(g, arcs) == pytest.approx(seam_h1(g, arcs), abs=1e-12)


def test_arc_validation():
    with pytest.raises(DomainError):
        normalize_arcs([(1.0, 0.5)])
    with pytest.raises(DomainError):
        normalize_arcs([(0.0, 1.0), (0.5, 2.0)])
    assert normalize_arcs([(0.0, 1.0), (1.0, 2.0)]) == [(0.0, 1.0), (1.0, 2.0)]


@pytest.mark.parametrize("g,arcs", [
    (ch.make_density_patch(0.5), [(np.pi / 2 - 1, np.pi / 2 + 1)]),
    (ch.make_cantor_homeo(0.5, 3), [(0.0, np.pi)]),
])
def test_polyline_converges(g, arcs):
    h = seam_h1(g, arcs)
    assert polyline_seam_length(g, arcs, 2**10) == pytest.approx(h, rel=1e-2)


def test_scan_labels_E_windows():
    g = ch.make_cantor_homeo(0.5, 1)
    verdicts = mutual_singularity_scan(g, 0.05)
    E = np.pi * ch.fat_cantor_intervals(0.5, 1)
    for v in verdicts:
        a, b = v.arc
        inside_E = any(lo <= a and b <= hi for lo, hi in E)
        if inside_E:
            assert v.verdict == "collapsing"
        if b <= 0:
            assert v.verdict == "surviving"


def test_profile_plateaus():
    prof = seam_profile(ch.make_cantor_homeo(0.5, 2))
    assert prof.total == pytest.approx(1.5 * np.pi, abs=1e-9)
    assert len(prof.collapsed) == 4
