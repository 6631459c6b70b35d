"""Convex-integration toolkit for the ideal electron-MHD system on T^3.

Builds the approximate triples (A_q, B_q, R_q) level by level with
intermittent Beltrami waves, and verifies the structural identities,
inequality ledger and the energy/helicity observables at desk scale.
"""

__version__ = "0.1.0"
