from .app import create_app
from .snapshot import Snapshot, load_snapshot
from .spatial import Quadtree

__all__ = ["Quadtree", "Snapshot", "create_app", "load_snapshot"]
