# api/__init__.py
# Blueprints are registered in app.py.
