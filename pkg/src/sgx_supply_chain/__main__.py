# SGX Supply Chain Toolkit
# File: __main__.py
# Version: v1

"""Allow ``python -m sgx_supply_chain``."""

from __future__ import annotations

from .cli.main import main

if __name__ == "__main__":
    raise SystemExit(main())
