"""Multiplayer game server: sessions, wire protocol, persistence."""
