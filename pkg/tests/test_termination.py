import json
import math

import numpy as np
import pytest

from zintegral.termination import (
    Atom,
    DensitySegment,
    TerminationDerivative,
    TerminationError,
    TerminationFunction,
    combine,
    combine_many,
    from_dict,
    from_json,
    make_atoms,
    make_box,
    make_exp_pair,
    make_pair,
    make_step,
    make_triple,
    reconstruct_z,
    rescale,
    to_dict,
    to_json,
    validate,
)

PI = math.pi


def atoms_of(zd):
    return [(a.position, a.weight) for a in zd.atoms]


# --- constructors ------------------------------------------------------------


def test_step_is_single_atom_with_nominal_support():
    zd = make_step()
    assert atoms_of(zd) == [(0.0, -1.0)]
    assert zd.support == 1.0


def test_make_atoms_pair_and_triple_examples():
    pair = make_atoms([(0, -0.5), (PI, -0.5)])
    assert pair.support == PI and pair.mass() == -1.0
    triple = make_atoms([(0, -0.25), (PI, -0.5), (2 * PI, -0.25)])
    assert triple.support == 2 * PI
    assert atoms_of(triple) == atoms_of(make_triple(PI))


@pytest.mark.parametrize(
    "entries, match",
    [
        ([(0, -0.4), (1, -0.4)], "mass"),
        ([(-1, -1.0)], ">= 0"),
        ([], "at least one"),
    ],
)
def test_make_atoms_rejects(entries, match):
    with pytest.raises(TerminationError, match=match):
        make_atoms(entries)


def test_make_atoms_support_must_cover_positions():
    with pytest.raises(TerminationError):
        make_atoms([(0, -0.5), (2, -0.5)], support=1.0)
    assert make_atoms([(0, -0.5), (2, -0.5)], support=3.0).support == 3.0


@pytest.mark.parametrize("width", [1.0, 2 * PI, 1e-6])
def test_box(width):
    zd = make_box(width)
    (seg,) = zd.segments
    assert (seg.lo, seg.hi) == (0.0, width)
    assert seg.coefficients == (-1.0 / width,)
    assert abs(zd.mass() + 1.0) <= 1e-12


@pytest.mark.parametrize("bad", [0.0, -1.0])
def test_box_rejects_nonpositive(bad):
    with pytest.raises(TerminationError):
        make_box(bad)


def test_exp_pair_weights():
    assert atoms_of(make_exp_pair(PI, 0.0)) == [(0.0, -0.5), (PI, -0.5)]
    e = math.exp(0.1 * PI)
    (p0, w0), (p1, w1) = atoms_of(make_exp_pair(PI, 0.1))
    assert w0 == pytest.approx(-e / (1 + e), abs=1e-15)
    assert w1 == pytest.approx(-1 / (1 + e), abs=1e-15)
    assert abs(w0 + w1 + 1) <= 1e-12
    # large negative beta pushes the mass onto the far atom
    weights = dict(atoms_of(make_exp_pair(PI, -50.0)))
    assert abs(weights.get(0.0, 0.0)) < 1e-60 and weights[PI] == pytest.approx(-1.0)


# --- validation -------------------------------------------------------------


def test_validate_reports_not_raises():
    assert validate(make_pair(PI)).passed
    bad_mass = TerminationDerivative(atoms=(Atom(0, -0.4), Atom(1, -0.4)), support=1.0)
    rep = validate(bad_mass)
    assert not rep.passed and rep.mass == pytest.approx(-0.8)
    assert not rep.conditions["unit_mass"]
    outside = TerminationDerivative(
        atoms=(Atom(2.0, -0.0001),), segments=(DensitySegment(0, 1, (-1.0,)),), support=1.0
    )
    rep = validate(outside)
    assert not rep.conditions["ends_by_support"]
    assert any("support" in m for m in rep.messages)


def test_validate_empty_is_failure():
    rep = validate(TerminationDerivative(support=1.0))
    assert not rep.passed and not rep.conditions["nonempty"]


def test_signed_density_still_valid():
    # mass -1 but not monotone: z overshoots above 1 before dropping
    zd = TerminationDerivative(
        segments=(DensitySegment(0, 1, (1.0,)), DensitySegment(1, 2, (-2.0,))), support=2.0
    )
    assert validate(zd).passed
    assert reconstruct_z(zd, 1.0) == pytest.approx(2.0)


# --- combination --------------------------------------------------------------


def test_pair_combined_with_itself_is_triple():
    got = combine(make_pair(PI), make_pair(PI))
    assert atoms_of(got) == pytest.approx(atoms_of(make_triple(PI)))
    assert got.support == 2 * PI


def test_step_is_identity():
    zd = combine(make_pair(PI), make_box(1.0))
    got = combine(make_step(), zd)
    assert atoms_of(got) == atoms_of(zd)
    assert got.segments == zd.segments
    # the nominal support of the step adds to the support only
    assert got.support == zd.support + 1.0


def test_box_box_is_triangle_against_grid_oracle():
    tri = combine(make_box(1.0), make_box(1.0))
    assert tri.support == 2.0
    assert abs(tri.mass() + 1) <= 1e-12
    # oracle: discrete convolution of sampled densities, with the sign flip
    h = 1e-3
    x = np.arange(0, 1, h) + h / 2
    dens = -np.ones_like(x)
    conv = -np.convolve(dens, dens) * h
    grid = (np.arange(conv.size) + 1) * h
    assert np.max(np.abs(tri.density(grid) - conv)) < 5e-3
    assert tri.density(1.0) == pytest.approx(-1.0)


def test_atom_times_segment_shifts_and_scales():
    got = combine(make_pair(2.0), make_box(1.0))
    assert got.support == 3.0
    assert [(s.lo, s.hi) for s in got.segments] == [(0.0, 1.0), (2.0, 3.0)]
    assert all(s.coefficients == pytest.approx((-0.5,)) for s in got.segments)


def test_overlapping_segments_are_merged():
    got = combine(make_pair(0.5), make_box(1.0))
    assert [(s.lo, s.hi) for s in got.segments] == [(0.0, 0.5), (0.5, 1.0), (1.0, 1.5)]
    assert got.density(0.75) == pytest.approx(-1.0)
    assert got.density(0.25) == pytest.approx(-0.5)


def test_combine_many_is_left_fold():
    a, b, c = make_pair(1.0), make_box(0.5), make_triple(0.3)
    left = combine_many(a, b, c)
    assert atoms_of(left) == atoms_of(combine(combine(a, b), c))
    with pytest.raises(TerminationError):
        combine_many()


def test_combine_rejects_invalid():
    bad = TerminationDerivative(atoms=(Atom(0, -0.3),), support=1.0)
    with pytest.raises(TerminationError):
        combine(bad, make_step())


# --- reconstruction -------------------------------------------------------------


def test_reconstruct_examples():
    assert reconstruct_z(make_pair(PI), PI / 2) == pytest.approx(0.5)
    assert reconstruct_z(make_triple(PI), 1.5 * PI) == pytest.approx(0.25)
    for zd in (make_pair(PI), make_box(2.0), make_triple(1.0)):
        assert reconstruct_z(zd, -1.0) == 1.0
        assert reconstruct_z(zd, zd.support) == pytest.approx(0.0, abs=1e-15)


def test_closed_from_left_convention():
    zd = make_pair(1.0)
    assert reconstruct_z(zd, -1e-300) == 1.0
    assert reconstruct_z(zd, 0.0) == 0.5
    assert reconstruct_z(zd, 1.0) == 0.0


def test_reconstruct_box_is_linear_ramp():
    z = TerminationFunction(make_box(4.0))
    assert z(np.array([0.0, 1.0, 2.0, 4.0])) == pytest.approx([1.0, 0.75, 0.5, 0.0])
    assert z.support == 4.0


# --- rescale and serialization -----------------------------------------------------


def test_rescale_keeps_mass_and_shrinks_support():
    zd = combine(make_pair(PI), make_box(2.0))
    r = rescale(zd, 4.0)
    assert r.support == pytest.approx(zd.support / 4)
    assert r.mass() == pytest.approx(-1.0, abs=1e-12)
    x = np.linspace(-1, zd.support + 1, 101)
    assert reconstruct_z(r, x / 4) == pytest.approx(reconstruct_z(zd, x), abs=1e-12)
    with pytest.raises(TerminationError):
        rescale(zd, 0.0)


def test_json_round_trip_is_lossless():
    zd = combine(make_triple(0.75), make_box(0.5))
    assert from_json(to_json(zd)) == zd
    doc = to_dict(make_pair(PI))
    assert doc == {"support": PI, "atoms": [{"pos": 0.0, "w": -0.5}, {"pos": PI, "w": -0.5}], "segments": []}
    assert json.loads(to_json(zd)) == to_dict(zd)


def test_from_dict_malformed():
    with pytest.raises(TerminationError):
        from_dict({"atoms": []})
