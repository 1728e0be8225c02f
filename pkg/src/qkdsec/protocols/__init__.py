"""Concrete protocols: one-time pad, authentication, toy BB84, composition."""

from . import auth, bb84, hashing, otp, scenarios

__all__ = ["auth", "bb84", "hashing", "otp", "scenarios"]
