"""ccp-miner: corrective commit probability estimation from git histories.

Classifies commit messages with a pattern-based linguistic model, corrects
the raw hit rate with a maximum-likelihood estimator, and ranks projects on
a shipped quality scale. Supporting analyses: bootstrap validation, coupling,
developer speed, retention, co-change and twin studies.
"""

__version__ = "0.1.0"
