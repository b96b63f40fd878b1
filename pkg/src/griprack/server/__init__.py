"""Per-robot REST service: state, images, live streams, motion commands."""

from griprack.server.http import RobotServer

__all__ = ["RobotServer"]
