"""Agent registry for discovering and creating agents.

This module provides the AgentRegistry class that handles:
- Registration of the built-in agents
- Discovery of third-party agents via Python entry points
- Agent instantiation with a type-checked configuration

Entry Points:
    Third-party packages can register agents via entry points in pyproject.toml:

    [project.entry-points."causalsynth.agents"]
    forest = "mypackage.forest:ForestAgent"

Example Usage:
    registry = AgentRegistry()
    registry.register_builtin_agents()
    registry.discover_plugins()

    lm = registry.create("lm", LinearAgentConfig())
    fit = lm.fit(data, seed=1)
"""

from __future__ import annotations

from collections.abc import Callable
from typing import TYPE_CHECKING, Any

from causalsynth.logging import get_logger
from causalsynth.plugins.base import Agent  # noqa: TC001 - used at runtime

if TYPE_CHECKING:
    from pydantic import BaseModel

logger = get_logger(__name__)

AGENT_ENTRY_POINT = "causalsynth.agents"


class AgentRegistry:
    """Central registry mapping agent names to agent classes.

    Attributes:
        _agent_classes: Mapping of agent names to classes.
    """

    def __init__(self) -> None:
        """Initialize an empty registry."""
        self._agent_classes: dict[str, type[Agent]] = {}

    @classmethod
    def default(cls) -> AgentRegistry:
        """Registry with the built-in agents and any installed entry points."""
        registry = cls()
        registry.register_builtin_agents()
        registry.discover_plugins()
        return registry

    # =========================================================================
    # REGISTRATION
    # =========================================================================

    def register_builtin_agents(self) -> None:
        """Register lm, am, knn, oracle and external."""
        # Import here to avoid circular imports
        from causalsynth.agents.additive import AdditiveAgent
        from causalsynth.agents.external import ExternalAgent
        from causalsynth.agents.knn import KnnAgent
        from causalsynth.agents.linear import LinearAgent
        from causalsynth.agents.oracle import OracleAgent

        for agent_class in (LinearAgent, AdditiveAgent, KnnAgent, OracleAgent, ExternalAgent):
            self.register(agent_class)

        logger.debug("Registered all built-in agents")

    def register(self, agent_class: type[Agent]) -> None:
        """Register an agent class.

        Args:
            agent_class: The Agent subclass to register.

        Raises:
            ValueError: If the name is already taken by a different class.
        """
        name = agent_class.name
        if name in self._agent_classes:
            existing = self._agent_classes[name]
            if existing is not agent_class:
                raise ValueError(f"Agent '{name}' already registered by {existing.__module__}")
            return  # Already registered same class

        self._agent_classes[name] = agent_class
        logger.debug(f"Registered agent: {name} ({agent_class.__module__})")

    # =========================================================================
    # DISCOVERY
    # =========================================================================

    def discover_plugins(self) -> None:
        """Register agents advertised under the ``causalsynth.agents`` group.

        Errors during discovery are logged but don't stop the process.
        """
        self._discover_entry_points(AGENT_ENTRY_POINT, self.register)

    def _discover_entry_points(self, group: str, register_fn: Callable[[Any], None]) -> None:
        from importlib.metadata import entry_points

        for ep in entry_points(group=group):
            try:
                register_fn(ep.load())
                logger.info(f"Discovered agent via entry point: {ep.name}")
            except Exception as e:
                logger.warning(
                    f"Failed to load agent from entry point {ep.name}: {e}",
                    extra={"entry_point": ep.name, "group": group},
                )

    # =========================================================================
    # INSTANTIATION
    # =========================================================================

    def create(self, name: str, config: BaseModel | None = None) -> Agent:
        """Create a fresh agent instance.

        Args:
            name: The agent name (e.g., "lm").
            config: Configuration matching the agent's config_schema; the
                schema defaults are used when omitted.

        Raises:
            KeyError: If no agent is registered with this name.
            TypeError: If config doesn't match the agent's config_schema.
        """
        if name not in self._agent_classes:
            raise KeyError(
                f"No agent registered with name '{name}'; available: {self.list_agents()}"
            )

        agent_class = self._agent_classes[name]
        expected_schema = agent_class.config_schema
        if config is None:
            config = expected_schema()
        if not isinstance(config, expected_schema):
            raise TypeError(
                f"Agent '{name}' expects config of type {expected_schema.__name__}, "
                f"got {type(config).__name__}"
            )
        return agent_class(config)

    # =========================================================================
    # INTROSPECTION
    # =========================================================================

    def list_agents(self) -> list[str]:
        """Registered agent names in registration order."""
        return list(self._agent_classes.keys())

    def __contains__(self, name: object) -> bool:
        return name in self._agent_classes

    def get_config_schema(self, name: str) -> type[BaseModel]:
        """Configuration schema of a registered agent.

        Raises:
            KeyError: If no agent is registered with this name.
        """
        if name not in self._agent_classes:
            raise KeyError(f"No agent registered with name '{name}'")
        return self._agent_classes[name].config_schema

    def requires_truth(self, name: str) -> bool:
        """Whether the named agent can only run where the true effect is known."""
        return self._agent_classes[name].requires_truth
