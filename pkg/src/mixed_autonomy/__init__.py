"""Mixed-autonomy intersection control: simulator, policy learning, baselines."""

__version__ = "0.1.0"
