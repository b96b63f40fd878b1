"""Rack orchestration: spawn N cells, registry, health sweeps."""

from griprack.rack.orchestrator import RackOrchestrator, RackStartupError, spawn_rack

__all__ = ["RackOrchestrator", "RackStartupError", "spawn_rack"]
