# scripts/__init__.py
# Marks the scripts directory as a Python package.
