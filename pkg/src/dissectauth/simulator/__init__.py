"""Traffic simulator: benign personas, adversary campaigns, scenario runner."""

from .adversaries import AdversaryKind, AdversarySpec, bundled_wordlist, mutate_secret
from .personas import PersonaSpec, generate_events
from .runner import (
    BENIGN_POPULATION,
    RunReport,
    Scenario,
    ScenarioError,
    ScenarioRunner,
    SimClock,
    run,
)

__all__ = [
    "AdversaryKind",
    "AdversarySpec",
    "BENIGN_POPULATION",
    "PersonaSpec",
    "RunReport",
    "Scenario",
    "ScenarioError",
    "ScenarioRunner",
    "SimClock",
    "bundled_wordlist",
    "generate_events",
    "mutate_secret",
    "run",
]
