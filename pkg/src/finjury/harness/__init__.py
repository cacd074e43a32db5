from .runner import RunReport, execute, replay, run
from .scenario import Scenario, SchemaError, load_scenario

__all__ = ["RunReport", "Scenario", "SchemaError", "execute", "load_scenario", "replay", "run"]
