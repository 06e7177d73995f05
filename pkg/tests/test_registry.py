"""Tests for the agent registry."""

from __future__ import annotations

import numpy as np
import pytest

from causalsynth.agents.linear import LinearAgent
from causalsynth.models import ExternalAgentConfig, KnnAgentConfig, LinearAgentConfig
from causalsynth.plugins.base import Agent, AgentFit
from causalsynth.plugins.registry import AgentRegistry


class ConstantAgent(Agent):
    """Minimal third-party style agent."""

    name = "constant"
    config_schema = LinearAgentConfig

    def fit(self, data, *, seed, truth=None):
        self._fitted = True
        return self.estimate(data.x)

    def estimate(self, x, *, truth=None):
        n = np.asarray(x).shape[0]
        return AgentFit(name=self.name, tau_hat=np.ones(n), se=np.ones(n))


class ImpostorAgent(ConstantAgent):
    """Claims the built-in linear agent's name."""

    name = "lm"


class TestAgentRegistryBuiltins:
    """Tests for built-in agent registration."""

    def test_default_registry(self) -> None:
        """Every built-in agent is available from the default registry."""
        registry = AgentRegistry.default()
        for name in ("lm", "am", "knn", "oracle", "external"):
            assert name in registry

    def test_builtins_in_order(self) -> None:
        registry = AgentRegistry()
        registry.register_builtin_agents()
        assert registry.list_agents() == ["lm", "am", "knn", "oracle", "external"]

    def test_register_builtins_idempotent(self) -> None:
        """Registering the built-ins twice does not raise."""
        registry = AgentRegistry()
        registry.register_builtin_agents()
        registry.register_builtin_agents()
        assert len(registry.list_agents()) == 5


class TestAgentRegistryRegister:
    """Tests for registering agents."""

    def test_register_custom_agent(self) -> None:
        registry = AgentRegistry()
        registry.register(ConstantAgent)
        assert registry.list_agents() == ["constant"]
        assert isinstance(registry.create("constant"), ConstantAgent)

    def test_name_conflict(self) -> None:
        """A different class under a taken name is rejected."""
        registry = AgentRegistry()
        registry.register(LinearAgent)
        with pytest.raises(ValueError, match="already registered"):
            registry.register(ImpostorAgent)

    def test_same_class_twice(self) -> None:
        registry = AgentRegistry()
        registry.register(LinearAgent)
        registry.register(LinearAgent)
        assert registry.list_agents() == ["lm"]


class TestAgentRegistryCreate:
    """Tests for agent instantiation."""

    def test_default_config(self) -> None:
        agent = AgentRegistry.default().create("knn")
        assert agent.name == "knn"
        assert not agent.fitted

    def test_fresh_instances(self) -> None:
        registry = AgentRegistry.default()
        assert registry.create("lm") is not registry.create("lm")

    def test_explicit_config(self) -> None:
        agent = AgentRegistry.default().create("knn", KnnAgentConfig(k=4))
        assert agent.name == "knn"

    def test_unknown_name(self) -> None:
        with pytest.raises(KeyError, match="forest"):
            AgentRegistry.default().create("forest")

    def test_wrong_config_type(self) -> None:
        with pytest.raises(TypeError, match="KnnAgentConfig"):
            AgentRegistry.default().create("knn", LinearAgentConfig())


class TestAgentRegistryIntrospection:
    """Tests for schema and capability lookups."""

    def test_config_schema(self) -> None:
        registry = AgentRegistry.default()
        assert registry.get_config_schema("knn") is KnnAgentConfig
        assert registry.get_config_schema("external") is ExternalAgentConfig

    def test_config_schema_unknown(self) -> None:
        with pytest.raises(KeyError):
            AgentRegistry().get_config_schema("lm")

    def test_requires_truth(self) -> None:
        registry = AgentRegistry.default()
        assert registry.requires_truth("oracle")
        assert not registry.requires_truth("lm")

    def test_contains_non_string(self) -> None:
        assert 3 not in AgentRegistry.default()
