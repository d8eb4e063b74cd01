import numpy as np
import pytest

from garz_kit.core.exceptions import InputRangeError, ValidationError
from garz_kit.models.velocity import VelocityModel, greenshields, model_from_name, power_law, validate_model


class TestGreenshields:
    def test_flux_and_eigenvalues(self, model):
        """流量と特性速度のテスト"""
        assert model.flux(0.5, 1.0) == pytest.approx(0.25)
        lam1, lam2 = model.eigenvalues(np.array([0.25]), np.array([2.0]))
        assert lam1[0] == pytest.approx(1.0)
        assert lam2[0] == pytest.approx(1.5)

    def test_domain_check(self, model):
        """定義域外の入力のテスト"""
        with pytest.raises(InputRangeError):
            model.flux(1.2, 1.0)
        with pytest.raises(InputRangeError):
            model.flux(0.5, -0.1)

    def test_critical_density_and_concavity(self, model):
        """臨界密度と凹性のテスト"""
        assert model.critical_density(np.array([1.0]))[0] == 0.5
        assert model.is_concave(0.0, 1.0, 1.0)

    def test_sup_norms(self, model):
        """上限ノルムのテスト"""
        norms = model.sup_norms(2.0)
        assert norms.velocity == pytest.approx(2.0)
        assert norms.d1 == pytest.approx(2.0)
        assert norms.d2 == pytest.approx(1.0)
        assert norms.d21 == pytest.approx(1.0)
        assert norms.d22 == 0.0
        assert model.max_speed(2.0) == pytest.approx(2.0)

    def test_validation_passes(self, model):
        """組み込みモデルが5条件を満たすテスト"""
        report = validate_model(model, 1.5)
        assert report.passed
        assert report.failed == ()
        assert len(report.conditions) == 5


class TestPowerLaw:
    def test_matches_greenshields_at_gamma_one(self, model):
        """gamma=1 で Greenshields と一致するテスト"""
        power = power_law(1.0)
        rho = np.linspace(0.0, 1.0, 11)
        u = np.full_like(rho, 1.3)
        assert np.allclose(power.flux(rho, u), model.flux(rho, u))
        assert power.slope_inverse_fn is not None

    def test_finite_difference_derivatives(self):
        """有限差分の導関数が解析値と一致するテスト"""
        analytic = power_law(2.0)
        numeric = VelocityModel("numeric", analytic.velocity_fn)
        rho, u = np.array([0.2, 0.5]), np.array([0.7, 1.1])
        assert np.allclose(numeric.d1(rho, u), analytic.d1(rho, u), atol=1e-6)
        assert np.allclose(numeric.d2(rho, u), analytic.d2(rho, u), atol=1e-6)
        assert np.allclose(numeric.d21(rho, u), analytic.d21(rho, u), atol=1e-5)

    def test_finite_difference_random_points(self):
        """内部のランダムな100点で4つの導関数の相対誤差が 1e-5 以内であるテスト"""
        analytic = power_law(3.0)
        numeric = VelocityModel("numeric", analytic.velocity_fn)
        rng = np.random.default_rng(20240517)
        rho = rng.uniform(0.05, 0.9, 100)
        u = rng.uniform(0.1, 1.5, 100)

        for name in ("d1", "d2", "d21", "d22"):
            exact = getattr(analytic, name)(rho, u)
            approx = getattr(numeric, name)(rho, u)
            scale = np.maximum(np.abs(exact), 1.0)
            assert np.all(np.abs(approx - exact) <= 1e-5 * scale), name

    def test_rejects_small_gamma(self):
        """gamma < 1 の拒否のテスト"""
        with pytest.raises(ValidationError):
            power_law(0.5)

    def test_model_from_name(self):
        """名前からのモデル生成のテスト"""
        assert model_from_name("Greenshields").name == "greenshields"
        assert model_from_name("power", {"gamma": 3.0}).params["gamma"] == 3.0
        with pytest.raises(ValidationError):
            model_from_name("unknown")


class TestValidateModel:
    def test_negative_velocity_fails(self):
        """負の速度を持つモデルの検出のテスト"""
        bad = VelocityModel("shifted", lambda rho, u: u * (1.0 - rho) - 0.1)
        report = validate_model(bad, 1.0)
        assert not report.passed
        assert "nonnegative_velocity" in report.failed
        assert "vanishes_at_jam" in report.failed
        assert report.condition("nonnegative_velocity").worst_violation == pytest.approx(0.1)

    def test_decreasing_marker_dependence_fails(self):
        """u について減少するモデルの検出のテスト"""
        bad = VelocityModel("inverted", lambda rho, u: (2.0 - u) * (1.0 - rho))
        report = validate_model(bad, 1.0)
        assert report.failed == ("increasing_in_marker",)
