# SGX Supply Chain Toolkit
# File: __init__.py
# Version: v1

"""Maintenance toolkit for a library supply chain targeting SGX enclaves."""

from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

__all__ = ["__version__"]


def _resolve_version() -> str:
    """Installed distribution version; source checkouts fall back to a constant."""
    try:
        return version("sgx-supply-chain-toolkit")
    except PackageNotFoundError:
        return "0.1.0"


__version__ = _resolve_version()
