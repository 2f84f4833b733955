"""
Test suite for hotspot-cli.

- Unit tests: one module per library module (pytest)
- CLI tests: click's CliRunner against the command tree
- Acceptance tests: property checks on synthetic scenarios (long ones marked slow)
- Smoke test: tests/smoke_test.py drives the installed hotspot-cli end to end
"""
