"""WRT invariants, colored WRT q-series and their resurgence for Seifert loops."""

__version__ = "0.1.0"
