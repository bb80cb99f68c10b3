"""
Integration tests for complete experiment execution.

These tests run small experiments end to end through the pipeline:
config -> trials -> aggregation -> artifacts, and check the files on disk.
"""
import csv

import numpy as np
import pytest

from src.pipeline.experiment import execute
from src.pipeline.presets import preset
from src.services.artifact_service import read_manifest, read_runs_csv, read_summary_csv
from src.tests.support.factories.simulation_factory import create_experiment_config, create_variant
from src.utils.errors import InvalidParameterError


@pytest.fixture
def fig1_small(tmp_path, clean_config):
    """fig1 shortened to T=200 with 2 trials."""
    return preset('fig1').with_overrides(trials=2, horizon=200, output_dir=tmp_path)


class TestPresetExecution:
    """Test executing a shortened preset."""

    def test_artifacts_written(self, fig1_small, tmp_path):
        """Test that every artifact exists with the expected layout."""
        outcome = execute(fig1_small, workers=1)
        out_dir = tmp_path / 'fig1'

        for name in ('default/runs.csv', 'default/summary.csv', 'finals.csv', 'fig1.svg', 'manifest.json'):
            assert (out_dir / name).exists(), name
        assert outcome.paths['finals.csv'] == out_dir / 'finals.csv'

        with open(out_dir / 'default' / 'runs.csv', newline='') as handle:
            rows = list(csv.reader(handle))
        assert len(rows) == 1 + 20 * 3 * 2
        assert {row[4] for row in rows[1:]} == {'fig1'}

    def test_summary_is_trial_mean(self, fig1_small, tmp_path):
        """Test that summary.csv is the mean of the per-trial quantiles in runs.csv."""
        execute(fig1_small, workers=1)
        out_dir = tmp_path / 'fig1' / 'default'

        trials = read_runs_csv(out_dir / 'runs.csv')
        summary = read_summary_csv(out_dir / 'summary.csv', trials=2)

        assert len(trials) == 2
        np.testing.assert_allclose(summary.median, np.mean([t.median for t in trials], axis=0), rtol=1e-12)
        assert summary.check_ordering()

    def test_rerun_is_identical(self, fig1_small, tmp_path):
        """Test that the same seed reproduces summary.csv byte for byte."""
        execute(fig1_small, workers=1)
        first = (tmp_path / 'fig1' / 'default' / 'summary.csv').read_bytes()

        execute(fig1_small, workers=1)

        assert (tmp_path / 'fig1' / 'default' / 'summary.csv').read_bytes() == first

    def test_worker_count_does_not_change_results(self, fig1_small):
        """Test that the pool returns the same numbers as the serial path."""
        serial = execute(fig1_small, workers=1)
        pooled = execute(fig1_small, workers=2)

        np.testing.assert_array_equal(serial.summaries['default'].median, pooled.summaries['default'].median)

    def test_manifest(self, fig1_small, tmp_path):
        """Test the manifest contents."""
        outcome = execute(fig1_small, workers=1)

        manifest = read_manifest(tmp_path / 'fig1' / 'manifest.json')

        assert manifest['run_id'] == outcome.run_id
        assert manifest['run_id'].startswith('run_fig1_0_')
        assert manifest['config']['trials'] == 2
        assert manifest['seeds'] == {'master': 0, 'trials': [0, 1]}
        assert set(manifest['versions']) >= {'numpy', 'scipy', 'networkx', 'matplotlib'}
        observations = manifest['observations']['variants']['default']
        assert observations['final']['min'] <= observations['final']['median'] <= observations['final']['max']
        assert isinstance(observations['converged_below_10pct'], bool)
        assert observations['final_to_initial'] == pytest.approx(
            observations['final']['median'] / observations['initial_median_error'])
        assert observations['max_final_to_initial'] >= observations['final_to_initial']
        gap = manifest['observations'].get('convergence_gap')
        if observations['converged_below_10pct']:
            assert gap is None
        else:
            assert gap['missed']['default'] == pytest.approx(observations['final_to_initial'])
            assert gap['threshold'] == 0.1
            assert 'consensus-limited' in gap['cause']


class TestConfigExecution:
    """Test executing small hand-built experiments."""

    def test_sweep_ordering_observed(self, tmp_path, clean_config):
        """Test that a dimension sweep records its ordering observation."""
        variants = [create_variant(f'n{n}', problem={'n': n}) for n in (2, 4)]
        config = create_experiment_config(tmp_path, variants=variants, stats=('median',))

        outcome = execute(config, workers=1)

        ordering = outcome.observations['sweep_ordering']
        assert ordering['parameter'] == 'problem.n'
        assert ordering['order'] == ['n2', 'n4']
        assert (tmp_path / 'smoke' / 'n2' / 'runs.csv').exists()

    def test_noise_families_reported(self, tmp_path, clean_config):
        """Test that a noise comparison records the tail-ordering report."""
        variants = [
            create_variant('gaussian', noise={'family': 'gaussian-iso', 'scale': 0.1}),
            create_variant('laplace', noise={'family': 'laplace-iid', 'scale': 0.1}),
        ]
        config = create_experiment_config(tmp_path, variants=variants)

        outcome = execute(config, workers=1)

        report = outcome.observations['noise_tail_ordering']
        assert set(report['finals']) == {'gaussian', 'laplace'}
        assert 'laplace_slowest' in report

    def test_simplex_experiment(self, tmp_path, clean_config):
        """Test an entropic-simplex experiment end to end."""
        variant = create_variant(problem={'kind': 'simplex', 'm': 6, 'n': 4})
        config = create_experiment_config(tmp_path, variants=[variant])

        outcome = execute(config, workers=1)

        final = outcome.observations['variants']['default']['final']
        assert final['min'] >= -1e-9

    def test_invalid_variant_writes_nothing(self, tmp_path, clean_config):
        """Test that a bad variant aborts before any artifact is written."""
        variants = [
            create_variant('good'),
            create_variant('bad', schedule={'kind': 'B-cyclic-partition', 'B': 2, 'eta': 0.9}),
        ]
        config = create_experiment_config(tmp_path, variants=variants)

        with pytest.raises(InvalidParameterError):
            execute(config, workers=1)

        assert not (tmp_path / 'smoke').exists()
