import numpy as np
import numpy.testing as npt
import pytest

from reactmix.oracle import detNumeric, jacobianFd, rhDoubleSum, \
     kernelNormReference, odeReferenceWellmixed, wellmixedClosedForm, \
     wellmixedClosedFormResidual, compare, registeredCases, runOracleSuite, \
     OracleReport
from reactmix.reactmix import OracleException


def test_det_numeric():
    assert detNumeric(np.eye(3)) == 1.0
    assert detNumeric([[0.0, 1.0], [1.0, 0.0]]) == pytest.approx(-1.0)
    assert detNumeric([[5 / 6, 1 / 2], [-1 / 3, 1.0]]) == pytest.approx(1.0)
    with pytest.raises(OracleException):
        detNumeric(np.ones((2, 3)))


def test_jacobian_fd():
    fn = lambda z: np.array([z[0] ** 2, z[0] * z[1]])
    npt.assert_allclose(jacobianFd(fn, [1.0, 2.0]),
                        [[2.0, 0.0], [2.0, 1.0]], atol=1e-9)


def test_rh_alternating():
    h = 1e-2
    npt.assert_allclose(rhDoubleSum([1.0, -1.0, 1.0, -1.0], h),
                        2.0 / ((0.25 + h) * kernelNormReference(h)),
                        rtol=1e-14)
    assert rhDoubleSum(np.ones(8), h) == 0.0
    with pytest.raises(OracleException):
        rhDoubleSum(np.zeros(2048), h)


def test_wellmixed(abc):
    for t in (0.0, 0.5, 2.0):
        assert wellmixedClosedFormResidual(t) < 1e-15
    npt.assert_allclose(odeReferenceWellmixed(abc, [1.0, 1.0, 0.0], 1.0),
                        wellmixedClosedForm(1.0), rtol=1e-9)
    npt.assert_array_equal(odeReferenceWellmixed(None, [0.3, 0.2, 0.1], 5.0),
                           [0.3, 0.2, 0.1])
    with pytest.raises(OracleException):
        odeReferenceWellmixed(abc, [-1.0, 1.0, 0.0], 1.0)


def test_compare():
    report = compare('x', [1.0, 2.0], [1.0, 2.0 + 1e-9], 1e-6)
    assert report.passed()
    assert report.rel_error == pytest.approx(1e-9 / 2.0)
    assert not compare('x', 0.0, 0.0, 0.0).passed()
    assert len(report.row()) == len(OracleReport.COLUMNS)


def test_registered_cases():
    names = [name for name, _, _ in registeredCases()]
    assert len(names) == len(set(names)) == 21
    assert 'wellmixed_solver_vs_ode' in names


def test_suite_passes():
    reports = runOracleSuite(workers=2)
    failed = [(r.case, r.rel_error) for r in reports if not r.passed()]
    assert failed == []
    assert [r.case for r in reports] == [n for n, _, _ in registeredCases()]
