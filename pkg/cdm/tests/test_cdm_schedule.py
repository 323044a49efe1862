import pytest
import torch

from cdm.schedule import Schedule, linear_betas


class TestBetas:
    def test_strictly_increasing_in_unit_interval(self):
        b = linear_betas(500)
        assert (b > 0).all() and (b < 1).all()
        assert (torch.diff(b) > 0).all()

    def test_endpoints(self):
        b = linear_betas(500, 1e-4, 2e-2)
        assert float(b[0]) == pytest.approx(1e-4)
        assert float(b[-1]) == pytest.approx(2e-2)

    def test_invalid_ranges_rejected(self):
        with pytest.raises(ValueError):
            linear_betas(500, 2e-2, 1e-4)  # decreasing
        with pytest.raises(ValueError):
            linear_betas(500, 0.0, 2e-2)  # leaves (0, 1)
        with pytest.raises(ValueError):
            linear_betas(0)


class TestSchedule:
    def test_alpha_bar_monotone_decreasing(self):
        s = Schedule(500)
        assert (torch.diff(s.alpha_bar) < 0).all()
        assert float(s.alpha_bar[-1]) < 0.01  # near-total noise at the last step

    def test_forward_then_exact_denoise_recovers_input(self):
        s = Schedule(500)
        g = torch.Generator().manual_seed(0)
        x0 = torch.rand((64, 24), generator=g) * 2 - 1
        t = torch.randint(500, (64,), generator=g)
        eps = torch.randn((64, 24), generator=g)
        x_t = s.q_sample(x0, t, eps)
        back = s.predict_x0(x_t, t, eps)
        assert float((back - x0).abs().max()) < 1e-6

    def test_t_zero_is_nearly_clean(self):
        s = Schedule(500)
        x0 = torch.ones((1, 24))
        x_t = s.q_sample(x0, torch.zeros(1, dtype=torch.long), torch.zeros((1, 24)))
        assert float((x_t - x0).abs().max()) < 1e-4
