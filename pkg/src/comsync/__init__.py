"""Code-comment synchronization toolkit.

Given an old code snippet, its changed version, and the now-stale comment,
the pipeline retrieves instructive demonstrations from a dual (semantic +
change-pattern) index, prompts a chat-completion model, and re-ranks the
sampled candidates with three heuristic rules so that correct-prone new
comments come first.
"""

__version__ = "0.1.0"
