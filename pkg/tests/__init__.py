# SGX Supply Chain Toolkit
# File: tests/__init__.py
# Version: v1

"""Test package for the SGX Supply Chain Toolkit."""
