"""
End-to-end convergence checks on the presets at full scale (10 trials, T=5000).

Slow: every preset runs on the 60-agent networks. Assertions are qualitative
(signs, orderings and ratios), never exact errors.

The final-to-initial bounds below are looser than the 10% target because the
60-agent ring mixes slowly; measured ratios and the cause are recorded in
DESIGN.md under "Convergence on the 60-agent ring", and every run reports the
shortfall in manifest['observations']['convergence_gap'].
"""
import pytest

from src.pipeline.experiment import CONVERGED_FRACTION, execute
from src.pipeline.presets import preset


pytestmark = pytest.mark.slow

# Median over agents, ring presets at seed 0: measured 0.14 to 0.23.
RING_MEDIAN_FRACTION = 0.25
# Worst agent on the simplex ring (fig7-dsed): measured about 0.38.
RING_MAX_FRACTION = 0.45
SLOPE_BAND = (-0.9, -0.3)


@pytest.fixture(scope='module')
def preset_run(tmp_path_factory):
    """Run each preset once per module and share the outcome."""
    outcomes = {}

    def _run(name):
        if name not in outcomes:
            config = preset(name).with_overrides(output_dir=tmp_path_factory.mktemp(name))
            outcomes[name] = execute(config)
        return outcomes[name]

    return _run


def _assert_gap_recorded(observations):
    """Every variant either reached the 10% target or is listed in the recorded gap."""
    gap = observations.get('convergence_gap') or {'missed': {}}
    for name, details in observations['variants'].items():
        assert details['converged_below_10pct'] or name in gap['missed']
        assert details['converged_below_10pct'] == (details['final_to_initial'] < CONVERGED_FRACTION)


class TestLasso:
    """Test convergence of the box-constrained lasso runs."""

    def test_error_decays_like_a_power_law(self, preset_run):
        """Test the fitted rate band and monotone decrease after step 100."""
        observations = preset_run('fig1').observations
        details = observations['variants']['default']

        assert details['slope'] is not None
        assert SLOPE_BAND[0] <= details['slope'] <= SLOPE_BAND[1]
        assert details['monotone_after_100'] is True
        assert details['final']['min'] >= -1e-9
        assert details['final_to_initial'] <= RING_MEDIAN_FRACTION
        _assert_gap_recorded(observations)

    def test_constant_stepsize_not_worse(self, preset_run):
        """Test that the constant 1/sqrt(T) rule ends no worse than 1.5x the varying rule."""
        observations = preset_run('fig5-stepsize').observations
        variants = observations['variants']

        assert variants['constant']['final']['median'] <= 1.5 * variants['varying']['final']['median']
        assert variants['constant']['ergodic_outputs_equal']
        assert not variants['varying']['ergodic_outputs_equal']
        for details in variants.values():
            assert details['final_to_initial'] <= RING_MEDIAN_FRACTION
        _assert_gap_recorded(observations)

    def test_noise_families_reported(self, preset_run):
        """Test the noise-tail ordering record and the decrease under every family."""
        observations = preset_run('fig2-noise').observations
        ordering = observations['noise_tail_ordering']

        assert set(ordering['finals']) == {'uniform', 'gaussian', 'laplace'}
        assert ordering['slowest_variant'] in ordering['finals']
        assert isinstance(ordering['laplace_slowest'], bool)
        for name, details in observations['variants'].items():
            assert ordering['finals'][name] == details['final']['median']
            assert details['final_to_initial'] <= RING_MEDIAN_FRACTION
        _assert_gap_recorded(observations)


class TestEntropicSimplex:
    """Test the entropic descent runs on the simplex."""

    def test_every_agent_decreases(self, preset_run):
        """Test the median and the worst agent against the initial error."""
        observations = preset_run('fig7-dsed').observations
        details = observations['variants']['default']

        assert details['final_to_initial'] <= RING_MEDIAN_FRACTION
        assert details['max_final_to_initial'] <= RING_MAX_FRACTION
        assert details['final']['max'] <= RING_MAX_FRACTION * details['initial_median_error']
        assert details['final']['min'] >= -1e-9
        _assert_gap_recorded(observations)

    @pytest.mark.parametrize('name,parameter,order', [
        ('fig8-dsed-dim', 'problem.n', ['n10', 'n20', 'n30']),
        ('fig9-dsed-agents', 'problem.m', ['m30', 'm60', 'm90']),
    ])
    def test_larger_instances_end_higher(self, preset_run, name, parameter, order):
        """Test that the final error is non-decreasing along the sweep."""
        ordering = preset_run(name).observations['sweep_ordering']

        assert ordering['parameter'] == parameter
        assert ordering['order'] == order
        assert ordering['non_decreasing'] is True
