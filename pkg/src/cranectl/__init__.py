"""Discrete-time anti-swing tracking control of a 3D overhead crane.

Modules: ``plant`` (nonlinear simulator), ``model`` (discrete axis models),
``ident`` (RLS identification), ``swing`` (swing observer and control),
``traj`` (reference generation and replanning), ``mpc`` and ``sfb``
(tracking controllers), ``harness`` (closed-loop scenarios).
"""
from .errors import CraneError
from .params import CraneParameters, table_parameters
from .plant import BACKEND, CraneState, Plant

__version__ = "0.1.0"

__all__ = ["BACKEND", "CraneError", "CraneParameters", "CraneState", "Plant",
           "table_parameters", "__version__"]
