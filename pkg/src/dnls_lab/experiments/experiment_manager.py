from dnls_lab.config import ExperimentConfig
from dnls_lab.experiments.base_experiment import BaseExperiment
from dnls_lab.experiments.consistency_experiment import ConsistencyExperiment
from dnls_lab.experiments.peierls_experiment import PeierlsExperiment
from dnls_lab.experiments.sobolev_growth_experiment import SobolevGrowthExperiment
from dnls_lab.experiments.solve_experiment import SolveExperiment
from dnls_lab.experiments.stability_experiment import StabilityExperiment
from dnls_lab.experiments.stencil_info_experiment import StencilInfoExperiment


class ExperimentManager:
    """Manages all available dnls-lab experiments."""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self._experiments: dict[str, BaseExperiment] = {}
        self._initialize_experiments()

    def _initialize_experiments(self):
        """Initialize all available experiments."""
        experiments = [
            SolveExperiment(self.config),
            ConsistencyExperiment(self.config),
            StabilityExperiment(self.config),
            SobolevGrowthExperiment(self.config),
            PeierlsExperiment(self.config),
            StencilInfoExperiment(self.config),
        ]

        for experiment in experiments:
            self._experiments[experiment.name] = experiment

    def get_experiment(self, name: str) -> BaseExperiment:
        """Get an experiment by name."""
        if name not in self._experiments:
            raise ValueError(f"Experiment '{name}' not found")
        return self._experiments[name]

    def list_experiments(self) -> list[dict[str, object]]:
        """List all experiments with their descriptions and configuration keys."""
        return [{"name": e.name, "description": e.description, "parameters": e.parameters} for e in self._experiments.values()]

    def get_experiment_names(self) -> list[str]:
        """Get list of all experiment names."""
        return list(self._experiments.keys())
