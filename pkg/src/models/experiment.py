"""
Experiment configuration models.

An ExperimentConfig is a list of variants (one curve each) sharing trial
count, seed and output directory. Each variant fully describes one simulated
setting through plain dictionaries that the services validate.
"""
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from src.utils.errors import UsageError


@dataclass(frozen=True)
class VariantSpec:
    """
    One experimental setting (one curve in a figure).

    Attributes:
        name: Variant label used in CSVs and legends
        problem: Problem block, e.g. {'kind': 'lasso', 'm': 60, 'n': 20, 'lam': 0.1}
        schedule: Schedule block, e.g. {'kind': 'static-ring', 'B': 1}
        noise: Noise block, e.g. {'family': 'gaussian-iso', 'scale': 1e-3}
        run: Run block, e.g. {'T': 5000, 'stepsize': 'varying-invsqrt', 'record_every': 10}
    """
    name: str
    problem: Dict[str, Any]
    schedule: Dict[str, Any]
    noise: Dict[str, Any]
    run: Dict[str, Any]

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'problem': dict(self.problem),
            'schedule': dict(self.schedule),
            'noise': dict(self.noise),
            'run': dict(self.run),
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Fully resolved experiment.

    Attributes:
        name: Preset name or 'custom'
        description: One-line description
        variants: Settings compared in the figure
        trials: Independent trials per variant
        seed: Master seed
        output_dir: Directory for artifacts
        stats: Statistics plotted (('max', 'min', 'median') or ('median',))
    """
    name: str
    description: str
    variants: Tuple[VariantSpec, ...]
    trials: int = 10
    seed: int = 0
    output_dir: Path = field(default_factory=lambda: Path('results'))
    stats: Tuple[str, ...] = ('max', 'min', 'median')

    def __post_init__(self):
        self.validate()

    def validate(self) -> bool:
        if self.trials < 1:
            raise UsageError(f"trials must be >= 1, got {self.trials}", details={'trials': self.trials})
        if self.seed < 0:
            raise UsageError(f"seed must be >= 0, got {self.seed}", details={'seed': self.seed})
        if not self.variants:
            raise UsageError("experiment needs at least one variant")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names):
            raise UsageError("variant names must be unique", details={'variants': names})
        return True

    def with_overrides(
        self,
        trials: Optional[int] = None,
        horizon: Optional[int] = None,
        seed: Optional[int] = None,
        output_dir: Optional[Path] = None,
        record_every: Optional[int] = None,
    ) -> 'ExperimentConfig':
        """Copy with CLI overrides applied to every variant."""
        variants = self.variants
        if horizon is not None or record_every is not None:
            updated: List[VariantSpec] = []
            for variant in variants:
                run = dict(variant.run)
                if horizon is not None:
                    run['T'] = int(horizon)
                if record_every is not None:
                    run['record_every'] = int(record_every)
                updated.append(replace(variant, run=run))
            variants = tuple(updated)
        return replace(
            self,
            variants=variants,
            trials=self.trials if trials is None else int(trials),
            seed=self.seed if seed is None else int(seed),
            output_dir=self.output_dir if output_dir is None else Path(output_dir),
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'description': self.description,
            'trials': self.trials,
            'seed': self.seed,
            'output_dir': str(self.output_dir),
            'stats': list(self.stats),
            'variants': [v.to_dict() for v in self.variants],
        }
