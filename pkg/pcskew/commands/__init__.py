"""
pcskew CLI command modules
"""

from . import alpha_sweep, config, estimate, simulate, version

__all__ = ['alpha_sweep', 'config', 'estimate', 'simulate', 'version']
