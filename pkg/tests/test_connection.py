import numpy as np
import pytest

from gaitbch import se2
from gaitbch.connection import (
    BilinearTable,
    LocalConnection,
    constant_connection,
    read_table,
    sample_table,
    write_table,
    zero_connection,
)
from gaitbch.errors import DomainError, TableFormatError
from gaitbch.systems import diffdrive_matrix, DiffdriveParams


def smooth_field(pts):
    r1, r2 = pts[:, 0], pts[:, 1]
    out = np.empty((len(pts), 3, 2))
    out[:, 0, 0], out[:, 0, 1] = np.sin(r2), r1 * r2
    out[:, 1, 0], out[:, 1, 1] = np.cos(r1), r2**2
    out[:, 2, 0], out[:, 2, 1] = r1 - r2, np.exp(0.3 * r1)
    return out


def smooth_jacobian(pts):
    r1, r2 = pts[:, 0], pts[:, 1]
    J = np.zeros((len(pts), 3, 2, 2))
    J[:, 0, 0, 1] = np.cos(r2)
    J[:, 0, 1, 0], J[:, 0, 1, 1] = r2, r1
    J[:, 1, 0, 0] = -np.sin(r1)
    J[:, 1, 1, 1] = 2 * r2
    J[:, 2, 0, 0], J[:, 2, 0, 1] = 1.0, -1.0
    J[:, 2, 1, 0] = 0.3 * np.exp(0.3 * r1)
    return J


BOX = ((-2.0, 2.0), (-2.0, 2.0))


def test_diffdrive_constant_everywhere(diffdrive, rng):
    pts = rng.uniform(-5, 5, size=(100, 2))
    vals = diffdrive.evaluate_many(pts)
    assert np.all(vals == diffdrive_matrix(DiffdriveParams()))


def test_evaluate_is_deterministic(purcell):
    r = np.array([0.3, -0.7])
    assert np.array_equal(purcell.evaluate(r), purcell.evaluate(r))


def test_out_of_box_carries_point(purcell):
    with pytest.raises(DomainError) as info:
        purcell.evaluate([3.1, 0.0])
    assert np.allclose(info.value.point, [3.1, 0.0])


def test_stencil_leaving_box_raises():
    conn = LocalConnection(smooth_field, box=BOX)
    with pytest.raises(DomainError):
        conn.jacobian([2.0 - 1e-5, 0.0], h=1e-4)


def test_constant_jacobian_zero(diffdrive):
    J1, J2 = diffdrive.jacobian([0.4, 0.1])
    assert np.abs(J1).max() < 1e-12 and np.abs(J2).max() < 1e-12
    assert diffdrive.exterior_derivative([1.0, 2.0]).norm() == 0.0


def test_analytic_jacobian_matches_differences(rng):
    analytic = LocalConnection(smooth_field, smooth_jacobian, BOX)
    numeric = LocalConnection(smooth_field, None, BOX)
    pts = rng.uniform(-1.5, 1.5, size=(50, 2))
    Ja, Jn = analytic.jacobian_many(pts), numeric.jacobian_many(pts)
    assert np.allclose(Jn, Ja, rtol=1e-6, atol=1e-8)


def test_linear_field_exterior_derivative(linear_field):
    assert linear_field.exterior_derivative([0.3, -0.2]).to_array() == pytest.approx([-1.0, 0.0, 0.0], abs=1e-10)
    assert linear_field.total_lie_bracket([0.3, -0.2]).to_array() == pytest.approx([-1.0, 0.0, 0.0], abs=1e-10)


def test_diffdrive_total_lie_bracket():
    for rho, w in ((1.0, 1.0), (0.5, 2.0), (2.0, 0.3)):
        conn = constant_connection(diffdrive_matrix(DiffdriveParams(rho, w)))
        DA = conn.total_lie_bracket([0.0, 0.0])
        assert DA.to_array() == pytest.approx([0.0, -rho**2 / (2 * w), 0.0], abs=1e-14)


def test_zero_connection_bracket():
    assert zero_connection().total_lie_bracket([1.0, -1.0]).norm() == 0.0


def test_purcell_exterior_derivative_richardson(purcell):
    central = purcell.exterior_derivative([0.0, 0.0]).to_array()
    rich = purcell.exterior_derivative([0.0, 0.0], richardson=True).to_array()
    assert np.allclose(central, rich, atol=1e-6)


def test_purcell_total_lie_bracket_oracle(purcell):
    r, h = np.array([0.0, 0.0]), 1e-5
    dA2 = (purcell.evaluate(r + [h, 0])[:, 1] - purcell.evaluate(r - [h, 0])[:, 1]) / (2 * h)
    dA1 = (purcell.evaluate(r + [0, h])[:, 0] - purcell.evaluate(r - [0, h])[:, 0]) / (2 * h)
    A = purcell.evaluate(r)
    oracle = dA2 - dA1 + se2.bracket_array(A[:, 0], A[:, 1])
    DA = purcell.total_lie_bracket(r).to_array()
    assert np.allclose(DA[1:], oracle[1:], atol=1e-6)
    assert np.allclose(DA, oracle, atol=1e-6)


@pytest.mark.parametrize("r", [(0.0, 0.0), (0.8, -0.4), (-1.5, 1.2)])
def test_total_lie_bracket_step_halving(purcell, r):
    full = purcell.total_lie_bracket(r).to_array()
    half = purcell.total_lie_bracket(r, h=0.5e-4).to_array()
    assert np.abs(full - half).max() < 1e-8


def test_mean_connection_constant_and_linear(diffdrive, linear_field):
    assert np.allclose(diffdrive.mean_connection((0.3, 0.3), 1.7), diffdrive.evaluate((0, 0)))
    assert np.allclose(linear_field.mean_connection((0.3, -0.4), 0.9), linear_field.evaluate((0.3, -0.4)), atol=1e-14)


def test_mean_connection_monte_carlo(purcell):
    rng = np.random.default_rng(7)
    n = 10**6
    rad = 0.25 * np.sqrt(rng.uniform(size=n))
    ang = rng.uniform(0, 2 * np.pi, size=n)
    pts = np.stack([rad * np.cos(ang), rad * np.sin(ang)], -1)
    mc = purcell.evaluate_many(pts).mean(axis=0)
    assert np.abs(purcell.mean_connection((0.0, 0.0), 0.5) - mc).max() < 1e-4


def test_mean_connection_small_disc_slope(purcell):
    c = np.array([0.4, -0.3])
    A0 = purcell.evaluate(c)
    eps = np.array([0.2, 0.1, 0.05])
    dev = [np.abs(purcell.mean_connection(c, e) - A0).max() for e in eps]
    slope = np.polyfit(np.log(eps), np.log(dev), 1)[0]
    assert abs(slope - 2.0) < 0.1


def test_mean_connection_leaving_box(purcell):
    with pytest.raises(DomainError):
        purcell.mean_connection((2.9, 0.0), 0.5)


# -- frame offsets ---------------------------------------------------------
def test_frame_offset_constant_conjugates(diffdrive):
    B = np.array([0.3, -0.2, 0.7])
    moved = diffdrive.with_frame_offset(lambda pts: np.tile(B, (len(pts), 1)))
    Binv = se2.GroupElement.from_array(B)
    for k in range(2):
        col = se2.AlgebraElement.from_array(diffdrive.evaluate((0, 0))[:, k])
        expect = se2.adjoint(se2.inverse(Binv), col).to_array()
        assert np.allclose(moved.evaluate((0.1, 0.1))[:, k], expect, atol=1e-14)


def test_frame_offset_matches_analytic_derivative(purcell):
    def offset(pts):
        return np.stack([0.1 * np.sin(pts[:, 0]), 0.2 * pts[:, 1], 0.3 * pts[:, 0] - 0.1 * pts[:, 1]], -1)

    def offset_jac(pts):
        J = np.zeros((len(pts), 3, 2))
        J[:, 0, 0] = 0.1 * np.cos(pts[:, 0])
        J[:, 1, 1] = 0.2
        J[:, 2, 0], J[:, 2, 1] = 0.3, -0.1
        return J

    a = purcell.with_frame_offset(offset, offset_jac)
    b = purcell.with_frame_offset(offset)
    r = np.array([[0.4, -0.2], [1.0, 0.5]])
    assert np.allclose(a.evaluate_many(r), b.evaluate_many(r), atol=1e-9)


# -- tables ----------------------------------------------------------------
def test_table_nodes_exact(purcell, tmp_path):
    table = sample_table(purcell, (-1.0, 1.0, 11), (-0.5, 0.5, 6))
    conn = table.connection()
    node = np.array([table.r1[3], table.r2[4]])
    assert np.array_equal(conn.evaluate(node), purcell.evaluate(node))


def test_table_linear_field_exact(linear_field, rng):
    table = sample_table(linear_field, (-1.0, 1.0, 51), (-1.0, 1.0, 51))
    conn = table.connection()
    pts = rng.uniform(-0.99, 0.99, size=(100, 2))
    assert np.allclose(conn.evaluate_many(pts), linear_field.evaluate_many(pts), atol=1e-14)
    J = conn.jacobian_many(pts)
    assert np.allclose(J[:, 0, 0, 1], 1.0, atol=1e-9)
    assert np.abs(J).sum() == pytest.approx(100.0, abs=1e-7)


def test_table_constant_field(diffdrive, tmp_path, rng):
    path = tmp_path / "dd.txt"
    write_table(path, sample_table(diffdrive, (-1, 1, 3), (-2, 2, 4)))
    conn = read_table(path).connection()
    pts = rng.uniform(-1, 1, size=(50, 2))
    assert np.abs(conn.evaluate_many(pts) - diffdrive.evaluate((0, 0))).max() < 1e-12


def test_table_roundtrip_purcell(purcell, tmp_path, rng):
    path = tmp_path / "purcell.txt"
    n = 41
    table = sample_table(purcell, (-1.0, 1.0, n), (-1.0, 1.0, n))
    write_table(path, table)
    back = read_table(path)
    assert np.array_equal(back.values, table.values)
    pts = rng.uniform(-1.0, 1.0, size=(100, 2))
    err = np.abs(back.connection().evaluate_many(pts) - purcell.evaluate_many(pts)).max()
    # bilinear error <= h^2/8 * max |second derivative|; estimate the latter from the field
    h = 2.0 / (n - 1)
    grid = rng.uniform(-1.0, 1.0, size=(200, 2))
    d = 1e-3
    curv = 0.0
    for e in (np.array([d, 0]), np.array([0, d])):
        second = (purcell.evaluate_many(grid + e) - 2 * purcell.evaluate_many(grid) + purcell.evaluate_many(grid - e)) / d**2
        curv = max(curv, np.abs(second).max())
    assert err <= h**2 / 8.0 * curv * 2.0 * 1.1


def _write(tmp_path, text):
    p = tmp_path / "t.txt"
    p.write_text(text)
    return p


@pytest.mark.parametrize(
    "text, line",
    [
        ("0 1 2\n0 1 2\n" + "1 2 3 4 5 6\n" * 3 + "1 2 3 4 5\n", 6),
        ("0 1 2\n0 1\n", 2),
        ("# c\n1 0 2\n0 1 2\n", 2),
        ("0 1 2\n0 1 2\n" + "1 2 3 4 5 x\n", 3),
        ("0 1 2\n0 1 2\n" + "1 2 3 4 5 6\n" * 2, 4),
        ("0 1 2\n0 1 2\n" + "1 2 3 4 5 nan\n", 3),
        ("0 1 2\n0 1 2\n" + "1 2 3 4 5 6\n" * 5, 7),
    ],
)
def test_table_parse_errors(tmp_path, text, line):
    with pytest.raises(TableFormatError) as info:
        read_table(_write(tmp_path, text))
    assert info.value.lineno == line
    assert str(info.value).startswith(f"line {line}:")


def test_table_comments_and_blank_lines(tmp_path):
    text = "# header\n\n0 1 2  # r1\n0 1 2\n" + "\n".join(f"{k} 0 0 0 0 0  # row" for k in range(4)) + "\n"
    table = read_table(_write(tmp_path, text))
    assert table.values[1, 1, 0, 0] == 3.0  # r2 fastest


def test_bilinear_rejects_unsorted_grid():
    with pytest.raises(TableFormatError):
        BilinearTable([0.0, 1.0, 0.5], [0.0, 1.0], np.zeros((6, 6)))
