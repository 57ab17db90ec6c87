"""futuresim: a deterministic engine, server, and simulator for an
AI-futures role-play wargame."""

__version__ = "0.1.0"
