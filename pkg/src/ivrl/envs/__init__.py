"""Environments: four gridworld combat scenarios and an exactly solvable chain MDP."""

from ivrl.envs.chain import ChainEnv, TabularMdp, chain_oracle_mdp
from ivrl.envs.grid import (
    CHANNELS,
    GridCombatEnv,
    ScenarioConfig,
    StepOutcome,
    SCENARIO_NAMES,
)

__all__ = [
    "CHANNELS",
    "ChainEnv",
    "GridCombatEnv",
    "SCENARIO_NAMES",
    "ScenarioConfig",
    "StepOutcome",
    "TabularMdp",
    "chain_oracle_mdp",
    "make_env",
]


def make_env(config: ScenarioConfig):
    """Build the environment named by config.scenario."""
    if config.scenario == "chain-oracle":
        return ChainEnv(config)
    return GridCombatEnv(config)
