"""Desk-scale gridworld combat scenarios with multi-channel utilities.

Four scenario layouts share one engine. Each step emits a 4-channel utility
vector in the fixed order (health, ammo, env, kills):

  health  damage taken this tick: -2 per monster within Chebyshev distance 1
          after monsters move, clamped at -10.
  ammo    -1 when an attack fired (it fires whenever the attack basic is
          active and ammo remains), else 0.
  env     survival scenarios pay a living bonus of +0.01 per tick; the
          corridor instead pays +0.1 per newly reached column and +1.0 on
          the vest, capped at 1.0 for the tick.
  kills   +1 when the fired shot hit a monster, else 0.

Actions are composite: every subset of the scenario's basic actions is one
action id, with bit i of the id activating basic i. Within a tick the agent
turns, then moves, then fires; monsters move on odd ticks (corridor monsters
only once the agent comes within ambush range); damage is assessed after the
monsters move; spawning happens last.

Eight facings (N, NE, E, SE, S, SW, W, NW); turn basics rotate 45 degrees.
Moves are relative to facing (forward, back, strafe left/right); conflicting
moves cancel component-wise and a blocked target cell means staying put.
Attacks trace a ray along the facing direction and kill the first monster on
it. Health starts at 100, ammo at 50, and at most 10 monsters are alive at
once. Episodes end on death (health <= 0), on reaching the vest (corridor),
or at the episode cap; the first two report terminal=True in the step info.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CHANNELS = ("health", "ammo", "env", "kills")

START_HEALTH = 100.0
START_AMMO = 50
MONSTER_CAP = 10
DAMAGE_PER_MONSTER = -2.0
DAMAGE_FLOOR = -10.0
LIVING_BONUS = 0.01
PROGRESS_BONUS = 0.1
VEST_BONUS = 1.0
AMBUSH_RANGE = 3
NEAREST_TRACKED = 3

# Facing order N, NE, E, SE, S, SW, W, NW; turn-right advances the index.
DIRS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


@dataclass(frozen=True)
class _ScenarioSpec:
    name: str
    grid: tuple[int, int]
    basics: tuple[str, ...]
    start: tuple[int, int]
    start_facing: int
    monsters: tuple[tuple[int, int], ...]
    spawn_rate: float
    episode_cap: int
    spawn_rows: str  # "border", "top", or "none"
    vest: tuple[int, int] | None = None

    @property
    def n_actions(self) -> int:
        return 2 ** len(self.basics)


SCENARIOS = {
    "center": _ScenarioSpec(
        name="center",
        grid=(11, 11),
        basics=("turn_left", "turn_right", "attack"),
        start=(5, 5),
        start_facing=0,
        monsters=((0, 5), (5, 10), (10, 5), (5, 0)),
        spawn_rate=0.15,
        episode_cap=500,
        spawn_rows="border",
    ),
    "line": _ScenarioSpec(
        name="line",
        grid=(7, 15),
        basics=("move_left", "move_right", "turn_left", "turn_right", "attack"),
        start=(6, 7),
        start_facing=0,
        monsters=((0, 1), (0, 4), (0, 7), (0, 10), (0, 13)),
        spawn_rate=0.15,
        episode_cap=500,
        spawn_rows="top",
    ),
    "corridor": _ScenarioSpec(
        name="corridor",
        grid=(3, 15),
        basics=(
            "move_left",
            "move_right",
            "move_forward",
            "turn_left",
            "turn_right",
            "attack",
        ),
        start=(1, 0),
        start_facing=2,
        monsters=((0, 4), (2, 4), (0, 8), (2, 8), (0, 12), (2, 12)),
        spawn_rate=0.0,
        episode_cap=300,
        spawn_rows="none",
        vest=(1, 14),
    ),
    "arena": _ScenarioSpec(
        name="arena",
        grid=(15, 15),
        basics=(
            "move_left",
            "move_right",
            "move_forward",
            "move_backward",
            "turn_left",
            "turn_right",
            "attack",
        ),
        start=(7, 7),
        start_facing=0,
        monsters=((0, 0), (0, 14), (14, 0), (14, 14)),
        spawn_rate=0.2,
        episode_cap=500,
        spawn_rows="border",
    ),
}

SCENARIO_NAMES = tuple(SCENARIOS) + ("chain-oracle",)


@dataclass(frozen=True)
class ScenarioConfig:
    """Names a scenario and optionally overrides its tunable knobs.

    n_actions is derived from the scenario and may not be overridden; the
    seed is the default used by reset() when no per-episode seed is given.
    """

    scenario: str
    grid_size: tuple[int, int] | None = None
    spawn_rate: float | None = None
    episode_cap: int | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIO_NAMES:
            raise ValueError(
                f"unknown scenario {self.scenario!r}; expected one of {SCENARIO_NAMES}"
            )
        if self.episode_cap is not None and self.episode_cap <= 0:
            raise ValueError(f"episode_cap must be positive, got {self.episode_cap}")
        if self.spawn_rate is not None and not (0.0 <= self.spawn_rate <= 1.0):
            raise ValueError(f"spawn_rate must lie in [0, 1], got {self.spawn_rate}")


@dataclass
class StepOutcome:
    """One step's result: utility vector, next observation, done flag, info."""

    utilities: np.ndarray
    next_obs: np.ndarray
    done: bool
    info: dict


class GridCombatEnv:
    """Engine for the four gridworld scenarios."""

    n_channels = 4
    channel_labels = CHANNELS

    def __init__(self, config: ScenarioConfig):
        if config.scenario not in SCENARIOS:
            raise ValueError(f"not a gridworld scenario: {config.scenario!r}")
        spec = SCENARIOS[config.scenario]
        self.config = config
        self.spec = spec
        self.scenario = spec.name
        self.grid = config.grid_size or spec.grid
        if self.grid[0] < 3 or self.grid[1] < 3:
            raise ValueError(f"grid too small: {self.grid}")
        self.spawn_rate = (
            spec.spawn_rate if config.spawn_rate is None else config.spawn_rate
        )
        self.episode_cap = config.episode_cap or spec.episode_cap
        self.basics = spec.basics
        self.n_actions = spec.n_actions
        self.vest = spec.vest
        self._rng: np.random.Generator | None = None
        self.done = True
        extra = 3 if self.vest is not None else 0
        self.obs_dim = 6 + 3 * NEAREST_TRACKED + 1 + extra

    # -- episode control ---------------------------------------------------

    def reset(self, seed: int | None = None) -> np.ndarray:
        """Start a fresh episode; the seed fixes all in-episode randomness."""
        self._rng = np.random.default_rng(self.config.seed if seed is None else seed)
        self.pos = self.spec.start
        self.facing = self.spec.start_facing
        self.health = START_HEALTH
        self.ammo = START_AMMO
        self.monsters: list[tuple[int, int]] = list(self.spec.monsters)
        self.tick = 0
        self.total_kills = 0
        self.max_col = self.pos[1]
        self.vest_reached = False
        self.done = False
        return self._observation()

    def step(self, action: int) -> StepOutcome:
        if self._rng is None:
            raise RuntimeError("step before reset")
        if self.done:
            raise RuntimeError("step after episode end")
        if not (0 <= int(action) < self.n_actions):
            raise ValueError(f"action {action} outside [0, {self.n_actions})")
        active = {
            name for i, name in enumerate(self.basics) if (int(action) >> i) & 1
        }

        # Agent: turn, then move, then fire.
        turn = ("turn_right" in active) - ("turn_left" in active)
        self.facing = (self.facing + turn) % 8
        self._move(active)
        ammo_delta = 0.0
        kill_delta = 0.0
        if "attack" in active and self.ammo > 0:
            self.ammo -= 1
            ammo_delta = -1.0
            hit = self._ray_hit()
            if hit is not None:
                self.monsters.remove(hit)
                self.total_kills += 1
                kill_delta = 1.0

        # Monsters move on odd ticks, then damage is assessed.
        if self.tick % 2 == 1:
            self._move_monsters()
        adjacent = sum(1 for m in self.monsters if _cheb(m, self.pos) <= 1)
        health_delta = max(DAMAGE_FLOOR, DAMAGE_PER_MONSTER * adjacent)
        self.health += health_delta

        env_reward = self._env_reward()
        self._spawn()
        self.tick += 1

        terminal = False
        if self.health <= 0.0:
            self.done = True
            terminal = True
        elif self.vest is not None and self.pos == self.vest:
            self.done = True
            terminal = True
            self.vest_reached = True
            env_reward = min(1.0, env_reward + VEST_BONUS)
        elif self.tick >= self.episode_cap:
            self.done = True

        utilities = np.array([health_delta, ammo_delta, env_reward, kill_delta])
        info = {
            "ticks": self.tick,
            "kills": self.total_kills,
            "score": self._score(),
            "terminal": terminal,
        }
        return StepOutcome(utilities, self._observation(), self.done, info)

    # -- mechanics ---------------------------------------------------------

    def _move(self, active: set) -> None:
        rel = {
            "move_forward": 0,
            "move_right": 2,
            "move_backward": 4,
            "move_left": 6,
        }
        dr = dc = 0
        for name, off in rel.items():
            if name in active:
                d = DIRS[(self.facing + off) % 8]
                dr += d[0]
                dc += d[1]
        dr = max(-1, min(1, dr))
        dc = max(-1, min(1, dc))
        if dr == 0 and dc == 0:
            return
        target = (self.pos[0] + dr, self.pos[1] + dc)
        if self._in_bounds(target) and target not in self.monsters:
            self.pos = target

    def _ray_hit(self) -> tuple[int, int] | None:
        d = DIRS[self.facing]
        r, c = self.pos
        while True:
            r += d[0]
            c += d[1]
            if not self._in_bounds((r, c)):
                return None
            if (r, c) in self.monsters:
                return (r, c)

    def _move_monsters(self) -> None:
        if self.vest is not None:
            movers = [m for m in self.monsters if _cheb(m, self.pos) <= AMBUSH_RANGE]
        else:
            movers = list(self.monsters)
        occupied = set(self.monsters)
        for m in movers:
            dr = _sign(self.pos[0] - m[0])
            dc = _sign(self.pos[1] - m[1])
            for cand in ((m[0] + dr, m[1] + dc), (m[0] + dr, m[1]), (m[0], m[1] + dc)):
                if (
                    cand != m
                    and self._in_bounds(cand)
                    and cand != self.pos
                    and cand not in occupied
                ):
                    occupied.remove(m)
                    occupied.add(cand)
                    self.monsters[self.monsters.index(m)] = cand
                    break

    def _env_reward(self) -> float:
        if self.vest is None:
            return LIVING_BONUS
        reward = 0.0
        if self.pos[1] > self.max_col:
            reward += PROGRESS_BONUS * (self.pos[1] - self.max_col)
            self.max_col = self.pos[1]
        return min(1.0, reward)

    def _spawn(self) -> None:
        if self.spawn_rate <= 0.0 or len(self.monsters) >= MONSTER_CAP:
            return
        if self._rng.random() >= self.spawn_rate:
            return
        cells = [
            c
            for c in self._spawn_cells()
            if c != self.pos and c not in self.monsters
        ]
        if cells:
            self.monsters.append(cells[int(self._rng.integers(len(cells)))])

    def _spawn_cells(self) -> list[tuple[int, int]]:
        rows, cols = self.grid
        if self.spec.spawn_rows == "top":
            return [(0, c) for c in range(cols)]
        return [
            (r, c)
            for r in range(rows)
            for c in range(cols)
            if r in (0, rows - 1) or c in (0, cols - 1)
        ]

    def _in_bounds(self, cell: tuple[int, int]) -> bool:
        return 0 <= cell[0] < self.grid[0] and 0 <= cell[1] < self.grid[1]

    def _score(self) -> float:
        if self.vest is None:
            return float(self.tick)
        progress = self.max_col / self.vest[1]
        return progress + (1.0 if self.vest_reached else 0.0)

    # -- observation -------------------------------------------------------

    def _observation(self) -> np.ndarray:
        rows, cols = self.grid
        r, c = self.pos
        d = DIRS[self.facing]
        feats = [
            2.0 * r / (rows - 1) - 1.0,
            2.0 * c / (cols - 1) - 1.0,
            float(d[0]),
            float(d[1]),
            self.health / START_HEALTH,
            self.ammo / START_AMMO,
        ]
        max_cheb = max(rows, cols) - 1
        ranked = sorted(self.monsters, key=lambda m: _cheb(m, self.pos))
        for i in range(NEAREST_TRACKED):
            if i < len(ranked):
                m = ranked[i]
                feats += [
                    (m[0] - r) / (rows - 1),
                    (m[1] - c) / (cols - 1),
                    1.0 - _cheb(m, self.pos) / max_cheb,
                ]
            else:
                feats += [0.0, 0.0, 0.0]
        feats.append(len(self.monsters) / MONSTER_CAP)
        if self.vest is not None:
            feats += [
                (self.vest[0] - r) / (rows - 1),
                (self.vest[1] - c) / (cols - 1),
                self.max_col / (cols - 1),
            ]
        return np.array(feats)

    # -- debugging ---------------------------------------------------------

    def map_text(self) -> str:
        """Frame the grid and mark the agent (A), monsters (M), and vest (V)."""
        rows, cols = self.grid
        lines = ["#" * (cols + 2)]
        for r in range(rows):
            row = []
            for c in range(cols):
                if (r, c) == self.pos:
                    row.append("A")
                elif (r, c) in self.monsters:
                    row.append("M")
                elif self.vest == (r, c):
                    row.append("V")
                else:
                    row.append(".")
            lines.append("#" + "".join(row) + "#")
        lines.append("#" * (cols + 2))
        return "\n".join(lines)


def _cheb(a: tuple[int, int], b: tuple[int, int]) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _sign(x: int) -> int:
    return (x > 0) - (x < 0)
