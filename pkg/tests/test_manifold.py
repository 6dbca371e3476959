import math

import pytest

from kltcyl.errors import FormatError, ParameterError
from kltcyl.manifold import (ManifoldSpec, extend_sphere, lichnerowicz_check, load_manifold, save_manifold,
                             sphere_multiplicity, sphere_spec)


def test_circle(circle):
    assert circle.dim == 1 and circle.d == 2
    assert circle.eigenvalues[:3] == (0.0, 1.0, 4.0)
    assert circle.multiplicities[:3] == (1, 2, 2)
    assert circle.volume == pytest.approx(2 * math.pi)
    assert circle.kappa == 0.0


def test_two_sphere(s2):
    assert s2.eigenvalues[:4] == (0.0, 2.0, 6.0, 12.0)
    assert s2.multiplicities[:4] == (1, 3, 5, 7)
    assert s2.lambda1 == 2.0
    assert s2.volume == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("dim,ell,expected", [(3, 1, 4), (3, 2, 9), (4, 2, 14)])
def test_sphere_multiplicity(dim, ell, expected):
    assert sphere_multiplicity(ell, dim) == expected


@pytest.mark.parametrize("d", range(2, 8))
def test_spheres_saturate_lichnerowicz(d):
    M = sphere_spec(d)
    assert lichnerowicz_check(M)
    if M.dim > 1:
        assert M.kappa * M.dim / (M.dim - 1) == pytest.approx(M.lambda1)


def test_extend_sphere(circle):
    assert len(extend_sphere(circle, 20).eigenvalues) == 21
    assert extend_sphere(circle, 3) is circle


@pytest.mark.parametrize("ev,mult", [((1.0, 2.0), (1, 1)), ((0.0, 2.0), (2, 1)), ((0.0, 3.0, 2.0), (1, 1, 1)),
                                     ((0.0,), (1,)), ((0.0, 1.0), (1, 0))])
def test_invalid_spectra(ev, mult):
    with pytest.raises(ParameterError):
        ManifoldSpec(dim=2, kappa=0.0, eigenvalues=ev, multiplicities=mult)


def test_roundtrip(tmp_path, s2):
    path = tmp_path / "m.txt"
    save_manifold(s2, path)
    M = load_manifold(path)
    assert M.eigenvalues == s2.eigenvalues and M.multiplicities == s2.multiplicities
    assert M.kappa == s2.kappa and M.dim == s2.dim


def test_comments_and_blank_lines(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("# flat torus-like spectrum\n2 0.0\n\n0 1\n1.5 4  # first cluster\n3 2\n")
    M = load_manifold(path)
    assert M.lambda1 == 1.5 and M.multiplicities == (1, 4, 2)


@pytest.mark.parametrize("text", ["", "2\n0 1\n1 1\n", "2 0\n0 1\n1 x\n", "2 0\n0 2\n1 1\n"])
def test_malformed_files(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(FormatError):
        load_manifold(path)


def test_lichnerowicz_violation_is_rejected(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("2 3.0\n0 1\n1.0 3\n")
    with pytest.raises(FormatError, match="Lichnerowicz"):
        load_manifold(path)


def test_positive_ricci_on_circle_is_rejected(tmp_path):
    path = tmp_path / "m.txt"
    path.write_text("1 0.5\n0 1\n1 2\n")
    with pytest.raises(FormatError):
        load_manifold(path)


def test_missing_file():
    with pytest.raises(OSError):
        load_manifold("/nonexistent/manifold.txt")
