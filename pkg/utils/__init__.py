# utils/__init__.py
# Shared helpers: logging setup, the redis cache and quadrature rules.
