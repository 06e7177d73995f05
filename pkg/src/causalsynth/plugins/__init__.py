"""Plugin system for causalsynth agents.

Third-party packages can implement Agent to contribute new treatment-effect
estimators without modifying core code, and advertise them under the
``causalsynth.agents`` entry-point group.

Example:
    from causalsynth.plugins import Agent, AgentFit, AgentRegistry

    registry = AgentRegistry.default()
    agent = registry.create("knn")
"""

from causalsynth.plugins.base import Agent, AgentFit
from causalsynth.plugins.registry import AgentRegistry

__all__ = [
    "Agent",
    "AgentFit",
    "AgentRegistry",
]
