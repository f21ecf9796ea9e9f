"""Reference plants and deterministic test signals used by the CLI demos and tests."""

import numpy as np

from .lti import StateSpaceSystem
from .signals import Signal

# Two-state, two-input, two-output plant with D = 0 and inherent delay 1.
EXAMPLE1 = StateSpaceSystem(
    A=[[-0.3, 0.0], [0.0, -0.5]],
    B=[[2.0, 1.0], [-1.0, 1.0]],
    C=[[1.0, 2.0], [1.0, 0.0]],
    D=[[0.0, 0.0], [0.0, 0.0]],
)

# Six states, two inputs, three measured states; inherent delay 1.
EXAMPLE2 = StateSpaceSystem(
    A=[
        [1.0, 0.05, 0.0, 0.1, 0.5, 0.0],
        [0.05, 1.0, 0.05, 0.05, 0.1, 0.05],
        [0.0, 0.05, 1.0, 0.0, 0.05, 0.1],
        [-0.2, 0.1, 0.05, 0.8, 0.1, 0.05],
        [0.1, -0.2, 0.1, 0.1, 0.8, 0.1],
        [0.0, 0.1, -0.2, 0.05, 0.1, 0.8],
    ],
    B=[
        [0.1, 0.0],
        [0.1, 0.0],
        [0.0, 0.1],
        [0.1, 0.05],
        [-0.1, 0.1],
        [0.0, -0.1],
    ],
    C=np.eye(3, 6),
    D=np.zeros((3, 2)),
)

PLANTS = {"example1": EXAMPLE1, "example2": EXAMPLE2}


def staircase_input(length, dim, seed=0, hold=5, rest=0, start=0):
    """Piecewise-constant input with levels in [-1, 1] held for ``hold`` samples.

    The first ``rest`` samples are zero so a plant starting from x = 0 is
    genuinely at rest over that span.
    """
    rng = np.random.default_rng(seed)
    levels = rng.uniform(-1.0, 1.0, size=(-(-length // hold), dim))
    values = np.repeat(levels, hold, axis=0)[:length]
    values[:rest] = 0.0
    return Signal(values, start)


def slow_disturbance(length, dim, start=0, onset=10, level=0.5, amplitude=0.2, period=80.0):
    """Step of ``level`` at ``onset`` plus a slow sinusoid."""
    k = np.arange(length)
    wave = level + amplitude * np.sin(2 * np.pi * (k - onset) / period)
    wave[k < onset] = 0.0
    phases = np.linspace(0.0, np.pi / 2, dim)
    values = np.stack([wave * np.cos(ph) + 0.1 * np.sin(ph) * (k >= onset) for ph in phases], axis=1)
    return Signal(values, start)
