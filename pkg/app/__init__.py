"""Reduction from imperfect-information concurrent game structures to
guarded-command games with visibility control, plus an ATL/ATL* checker
under uniform positional strategies."""
