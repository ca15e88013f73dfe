"""Numerical services: geometry, cell flow, correctors, flow solvers and the study harness."""
