"""Application-side authentication adapters (Jupyter, RStudio, VNC) and the
shared home-ownership check."""

from . import jupyter, rstudio, vnc
from .home import MARKER_FILENAME, check_home_ownership

__all__ = ["MARKER_FILENAME", "check_home_ownership", "jupyter", "rstudio", "vnc"]
