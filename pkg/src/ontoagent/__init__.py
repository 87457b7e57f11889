"""Ontology-guided requirements-elicitation interview agent.

The package is split along the two pipeline stages plus the harness around
them: :mod:`ontoagent.ontology` (the aspect/dimension/slot tree),
:mod:`ontoagent.induction` (building that tree from requirement texts),
:mod:`ontoagent.engine` (the interview decision loop), :mod:`ontoagent.gym`
(simulated-stakeholder evaluation), and :mod:`ontoagent.service` /
:mod:`ontoagent.cli` (the operational shell).
"""

__version__ = "0.1.0"
