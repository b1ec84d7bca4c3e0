from .render import PlotSpec, render_sweep, render_trajectories

__version__ = "0.1.0"
