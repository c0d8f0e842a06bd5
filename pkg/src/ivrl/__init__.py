"""Innate-values reinforcement learning lab.

Agents earn a scalar reward that is the dot product of a needs-weight vector
on the simplex and a multi-channel utility vector emitted by the environment.
The package provides the shared approximator core, the reward kernel, four
desk-scale gridworld scenarios plus an exactly solvable chain MDP, the IV-DQN
and IV-A2C agents with their fixed-weight baselines, and an experiment harness
with config parsing, metrics, oracles, and a CLI.
"""

__version__ = "0.1.0"
