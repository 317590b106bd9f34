# SGX Supply Chain Toolkit
# File: cli/__init__.py
# Version: v1

"""Command-line surface: ``main`` parses, ``commands`` does the work,
``_gated`` renders output and picks the exit status."""
